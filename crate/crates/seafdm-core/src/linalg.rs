//! Complex linear solvers used by the equalizer.
//!
//! Two paths: a dense LU with partial pivoting for explicit effective-channel
//! matrices (tests, small N, the public MMSE entry point), and a Cholesky
//! factorization for Hermitian positive-definite matrices with a *circular*
//! band structure, which is what `H H^H + sigma^2 I` looks like in the time
//! domain for an integer-tap multipath channel. The circular band is handled
//! by pinning the last `w` rows/columns as a dense border and eliminating the
//! banded core first, so factor/solve cost stays `O(N w^2)`.

use crate::error::{Error, Result};
use crate::Cf64;

/// Dense column-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Cf64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Cf64::default(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = Cf64::new(1.0, 0.0);
        }
        m
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> Cf64 {
        self.data[c * self.rows + r]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut Cf64 {
        &mut self.data[c * self.rows + r]
    }

    pub fn matvec(&self, x: &[Cf64]) -> Vec<Cf64> {
        assert_eq!(self.cols, x.len());
        let mut y = vec![Cf64::default(); self.rows];
        for c in 0..self.cols {
            let xc = x[c];
            let col = &self.data[c * self.rows..(c + 1) * self.rows];
            for (yr, &m) in y.iter_mut().zip(col.iter()) {
                *yr += m * xc;
            }
        }
        y
    }

    /// Hermitian-transposed matrix-vector product `A^H x`.
    pub fn matvec_adjoint(&self, x: &[Cf64]) -> Vec<Cf64> {
        assert_eq!(self.rows, x.len());
        let mut y = vec![Cf64::default(); self.cols];
        for c in 0..self.cols {
            let col = &self.data[c * self.rows..(c + 1) * self.rows];
            let mut acc = Cf64::default();
            for (&m, &xr) in col.iter().zip(x.iter()) {
                acc += m.conj() * xr;
            }
            y[c] = acc;
        }
        y
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            for k in 0..self.cols {
                let b = other.at(k, j);
                if b == Cf64::default() {
                    continue;
                }
                let col = &self.data[k * self.rows..(k + 1) * self.rows];
                let dst = &mut out.data[j * self.rows..(j + 1) * self.rows];
                for (d, &a) in dst.iter_mut().zip(col.iter()) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// `A^H` as a new matrix.
    pub fn adjoint(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                *out.at_mut(c, r) = self.at(r, c).conj();
            }
        }
        out
    }
}

/// LU factorization with partial pivoting of a square complex matrix.
#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: DenseMatrix,
    pivots: Vec<usize>,
}

impl LuFactors {
    pub fn factor(a: &DenseMatrix) -> Result<Self> {
        if a.rows != a.cols {
            return Err(Error::Dimension {
                expected: a.rows,
                got: a.cols,
            });
        }
        let n = a.rows;
        let mut lu = a.clone();
        let mut pivots = vec![0usize; n];
        for k in 0..n {
            let mut p = k;
            let mut best = lu.at(k, k).norm_sqr();
            for r in k + 1..n {
                let v = lu.at(r, k).norm_sqr();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::NumericalRank);
            }
            pivots[k] = p;
            if p != k {
                for c in 0..n {
                    let tmp = lu.at(k, c);
                    *lu.at_mut(k, c) = lu.at(p, c);
                    *lu.at_mut(p, c) = tmp;
                }
            }
            let inv = Cf64::new(1.0, 0.0) / lu.at(k, k);
            for r in k + 1..n {
                let factor = lu.at(r, k) * inv;
                *lu.at_mut(r, k) = factor;
                if factor == Cf64::default() {
                    continue;
                }
                for c in k + 1..n {
                    let v = lu.at(k, c);
                    *lu.at_mut(r, c) -= factor * v;
                }
            }
        }
        Ok(Self { lu, pivots })
    }

    pub fn solve(&self, b: &[Cf64]) -> Result<Vec<Cf64>> {
        let n = self.lu.rows;
        if b.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: b.len(),
            });
        }
        let mut x = b.to_vec();
        // Row swaps were applied to full rows during factorization, so all
        // pivots act on the right-hand side before the triangular solves.
        for k in 0..n {
            x.swap(k, self.pivots[k]);
        }
        for k in 0..n {
            let xk = x[k];
            if xk != Cf64::default() {
                for r in k + 1..n {
                    let l = self.lu.at(r, k);
                    x[r] -= l * xk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut acc = x[k];
            for c in k + 1..n {
                acc -= self.lu.at(k, c) * x[c];
            }
            x[k] = acc / self.lu.at(k, k);
        }
        Ok(x)
    }
}

// ---------------------------------------------------------------------------
// Circularly-banded Hermitian positive-definite solver
// ---------------------------------------------------------------------------

/// Hermitian matrix whose nonzeros satisfy `|i - j| <= w` *circularly*
/// (indices wrap modulo `n`). Stores the diagonal and the `w` sub-diagonals
/// in wrapped form: `band[d][i] = A[(i + d) mod n, i]` for `d = 0..=w`.
#[derive(Debug, Clone)]
pub struct CircularBanded {
    pub n: usize,
    pub w: usize,
    band: Vec<Vec<Cf64>>,
}

impl CircularBanded {
    pub fn zeros(n: usize, w: usize) -> Result<Self> {
        if w >= n || 2 * w + 1 > n {
            return Err(Error::Config(format!(
                "band half-width {w} too large for dimension {n}"
            )));
        }
        Ok(Self {
            n,
            w,
            band: vec![vec![Cf64::default(); n]; w + 1],
        })
    }

    /// Adds `v` to `A[(i + d) mod n, i]` (and implicitly its conjugate).
    #[inline]
    pub fn add_lower(&mut self, d: usize, i: usize, v: Cf64) {
        self.band[d][i] += v;
    }

    #[inline]
    pub fn get_lower(&self, d: usize, i: usize) -> Cf64 {
        self.band[d][i]
    }

    /// Materializes the full matrix (tests and small-N checks only).
    pub fn to_dense(&self) -> DenseMatrix {
        let mut a = DenseMatrix::zeros(self.n, self.n);
        for d in 0..=self.w {
            for i in 0..self.n {
                let r = (i + d) % self.n;
                let v = self.band[d][i];
                *a.at_mut(r, i) = v;
                if d != 0 {
                    *a.at_mut(i, r) = v.conj();
                }
            }
        }
        a
    }
}

/// Cholesky factorization of a circularly-banded Hermitian positive-definite
/// matrix in bordered form: core rows `0..n-w` stay banded, the wrap rows
/// `n-w..n` form a dense border whose Schur complement is factored densely.
#[derive(Debug, Clone)]
pub struct CircularCholesky {
    n: usize,
    w: usize,
    /// Banded lower factor of the core: `l_band[d][i] = L[i + d, i]`.
    l_band: Vec<Vec<Cf64>>,
    /// Core-solve images of the border columns: `Z = K^{-1} R`, stored as
    /// `border_cols[j][0..core]`.
    border_cols: Vec<Vec<Cf64>>,
    /// Raw border columns `R[:, j]` (sparse, but kept dense for simplicity).
    raw_border: Vec<Vec<Cf64>>,
    /// Dense Cholesky factor of the border Schur complement.
    schur: DenseMatrix,
}

impl CircularCholesky {
    pub fn factor(a: &CircularBanded) -> Result<Self> {
        let (n, w) = (a.n, a.w);
        let core = n - w;
        // Banded Cholesky of the core block K (no wrap inside the core).
        let mut l_band = vec![vec![Cf64::default(); core]; w + 1];
        for d in 0..=w {
            for i in 0..core {
                if i + d < core {
                    l_band[d][i] = a.band[d][i];
                }
            }
        }
        for j in 0..core {
            let start = j.saturating_sub(w);
            let mut diag = l_band[0][j].re;
            for k in start..j {
                let l = l_band[j - k][k];
                diag -= l.norm_sqr();
            }
            if !(diag > 0.0) || !diag.is_finite() {
                return Err(Error::NumericalRank);
            }
            let diag = diag.sqrt();
            l_band[0][j] = Cf64::new(diag, 0.0);
            let hi = (j + w + 1).min(core);
            for i in j + 1..hi {
                let mut v = if i - j <= w { l_band[i - j][j] } else { Cf64::default() };
                for k in i.saturating_sub(w).max(start)..j {
                    let lik = l_band[i - k][k];
                    let ljk = l_band[j - k][k];
                    v -= lik * ljk.conj();
                }
                l_band[i - j][j] = v / diag;
            }
        }

        // Border columns R[:, j] for absolute columns n-w+j: entries from the
        // band, both the straight part near the bottom and the wrap part near
        // the top.
        let mut raw_border = vec![vec![Cf64::default(); core]; w];
        for j in 0..w {
            let col = core + j;
            for d in 0..=w {
                // band[d][col] = A[(col + d) mod n, col]; rows that wrap past
                // n land in the top-left corner, i.e. inside the core.
                let r = (col + d) % n;
                if r < core {
                    raw_border[j][r] = a.band[d][col];
                }
            }
            for d in 1..=w {
                // band[d][col - d] = A[col, col - d]; its conjugate sits at
                // row col - d of this border column.
                if col >= d {
                    let i = col - d;
                    if i < core {
                        raw_border[j][i] = a.band[d][i].conj();
                    }
                }
            }
        }

        let fwd = |l_band: &Vec<Vec<Cf64>>, b: &mut Vec<Cf64>| {
            // L y = b (banded forward substitution)
            for i in 0..core {
                let mut acc = b[i];
                for k in i.saturating_sub(w)..i {
                    acc -= l_band[i - k][k] * b[k];
                }
                b[i] = acc / l_band[0][i];
            }
        };
        let bwd = |l_band: &Vec<Vec<Cf64>>, b: &mut Vec<Cf64>| {
            // L^H x = y (banded backward substitution)
            for i in (0..core).rev() {
                let mut acc = b[i];
                let hi = (i + w + 1).min(core);
                for k in i + 1..hi {
                    acc -= l_band[k - i][i].conj() * b[k];
                }
                b[i] = acc / l_band[0][i];
            }
        };

        // Z = K^{-1} R, one core solve per border column.
        let mut border_cols = Vec::with_capacity(w);
        for j in 0..w {
            let mut z = raw_border[j].clone();
            fwd(&l_band, &mut z);
            bwd(&l_band, &mut z);
            border_cols.push(z);
        }

        // Schur complement S - R^H Z, then dense Cholesky via LU-free path:
        // build it dense and factor with a small dense Cholesky.
        let mut schur = DenseMatrix::zeros(w, w);
        for i in 0..w {
            for j in 0..w {
                let ci = core + i;
                let cj = core + j;
                let mut v = if ci == cj {
                    a.band[0][ci]
                } else if cj < ci && ci - cj <= w {
                    a.band[ci - cj][cj]
                } else if ci < cj && cj - ci <= w {
                    a.band[cj - ci][ci].conj()
                } else {
                    Cf64::default()
                };
                for r in 0..core {
                    v -= raw_border[i][r].conj() * border_cols[j][r];
                }
                *schur.at_mut(i, j) = v;
            }
        }
        let schur = dense_cholesky(&schur)?;

        Ok(Self {
            n,
            w,
            l_band,
            border_cols,
            raw_border,
            schur,
        })
    }

    pub fn solve(&self, b: &[Cf64]) -> Result<Vec<Cf64>> {
        let (n, w) = (self.n, self.w);
        if b.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: b.len(),
            });
        }
        let core = n - w;
        // Solve K y1 = b1.
        let mut y1 = b[..core].to_vec();
        for i in 0..core {
            let mut acc = y1[i];
            for k in i.saturating_sub(w)..i {
                acc -= self.l_band[i - k][k] * y1[k];
            }
            y1[i] = acc / self.l_band[0][i];
        }
        for i in (0..core).rev() {
            let mut acc = y1[i];
            let hi = (i + w + 1).min(core);
            for k in i + 1..hi {
                acc -= self.l_band[k - i][i].conj() * y1[k];
            }
            y1[i] = acc / self.l_band[0][i];
        }
        // Border right-hand side: b2 - R^H y1.
        let mut rhs2 = vec![Cf64::default(); w];
        for j in 0..w {
            let mut acc = b[core + j];
            for r in 0..core {
                acc -= self.raw_border[j][r].conj() * y1[r];
            }
            rhs2[j] = acc;
        }
        let x2 = cholesky_solve(&self.schur, &rhs2);
        // x1 = y1 - Z x2.
        let mut x = vec![Cf64::default(); n];
        for r in 0..core {
            let mut acc = y1[r];
            for j in 0..w {
                acc -= self.border_cols[j][r] * x2[j];
            }
            x[r] = acc;
        }
        x[core..].copy_from_slice(&x2);
        Ok(x)
    }
}

/// Dense Cholesky: returns the lower factor in place of the input.
fn dense_cholesky(a: &DenseMatrix) -> Result<DenseMatrix> {
    let n = a.rows;
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut diag = a.at(j, j).re;
        for k in 0..j {
            diag -= l.at(j, k).norm_sqr();
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return Err(Error::NumericalRank);
        }
        let diag = diag.sqrt();
        *l.at_mut(j, j) = Cf64::new(diag, 0.0);
        for i in j + 1..n {
            let mut v = a.at(i, j);
            for k in 0..j {
                v -= l.at(i, k) * l.at(j, k).conj();
            }
            *l.at_mut(i, j) = v / diag;
        }
    }
    Ok(l)
}

fn cholesky_solve(l: &DenseMatrix, b: &[Cf64]) -> Vec<Cf64> {
    let n = l.rows;
    let mut x = b.to_vec();
    for i in 0..n {
        let mut acc = x[i];
        for k in 0..i {
            acc -= l.at(i, k) * x[k];
        }
        x[i] = acc / l.at(i, i);
    }
    for i in (0..n).rev() {
        let mut acc = x[i];
        for k in i + 1..n {
            acc -= l.at(k, i).conj() * x[k];
        }
        x[i] = acc / l.at(i, i);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn rand_c(rng: &mut StdRng) -> Cf64 {
        Cf64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    }

    #[test]
    fn lu_solves_random_system() {
        let mut rng = StdRng::seed_from_u64(11);
        let n = 24;
        let mut a = DenseMatrix::zeros(n, n);
        for c in 0..n {
            for r in 0..n {
                *a.at_mut(r, c) = rand_c(&mut rng);
            }
        }
        let x: Vec<Cf64> = (0..n).map(|_| rand_c(&mut rng)).collect();
        let b = a.matvec(&x);
        let lu = LuFactors::factor(&a).unwrap();
        let got = lu.solve(&b).unwrap();
        for (g, w) in got.iter().zip(x.iter()) {
            assert!((g - w).norm() < 1e-9, "err {}", (g - w).norm());
        }
    }

    #[test]
    fn lu_rejects_singular() {
        let a = DenseMatrix::zeros(3, 3);
        assert!(matches!(LuFactors::factor(&a), Err(Error::NumericalRank)));
    }

    fn random_circular_spd(rng: &mut StdRng, n: usize, w: usize) -> CircularBanded {
        // Build H with circular lower band, then form H H^H + I via the
        // dense route and project back onto the circular band.
        let mut h = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for d in 0..=w {
                let c = (i + n - d) % n;
                *h.at_mut(i, c) = rand_c(rng);
            }
        }
        let hh = h.matmul(&h.adjoint());
        let mut a = CircularBanded::zeros(n, w).unwrap();
        for d in 0..=w {
            for i in 0..n {
                let r = (i + d) % n;
                let mut v = hh.at(r, i);
                if d == 0 {
                    v += Cf64::new(1.0, 0.0);
                }
                a.add_lower(d, i, v);
            }
        }
        a
    }

    #[test]
    fn circular_banded_dense_roundtrip() {
        let mut rng = StdRng::seed_from_u64(12);
        let a = random_circular_spd(&mut rng, 12, 3);
        let dense = a.to_dense();
        // Hermitian and banded circularly.
        for r in 0..12 {
            for c in 0..12 {
                assert!((dense.at(r, c) - dense.at(c, r).conj()).norm() < 1e-12);
                let dist = (r as i64 - c as i64).rem_euclid(12).min((c as i64 - r as i64).rem_euclid(12));
                if dist > 3 {
                    assert_eq!(dense.at(r, c), Cf64::default());
                }
            }
        }
    }

    #[test]
    fn circular_cholesky_matches_dense_lu() {
        let mut rng = StdRng::seed_from_u64(13);
        for (n, w) in [(12usize, 2usize), (33, 5), (64, 9), (40, 1)] {
            let a = random_circular_spd(&mut rng, n, w);
            let chol = CircularCholesky::factor(&a).unwrap();
            let dense = a.to_dense();
            let lu = LuFactors::factor(&dense).unwrap();
            for _ in 0..3 {
                let b: Vec<Cf64> = (0..n).map(|_| rand_c(&mut rng)).collect();
                let x1 = chol.solve(&b).unwrap();
                let x2 = lu.solve(&b).unwrap();
                let err: f64 = x1.iter().zip(x2.iter()).map(|(a, b)| (a - b).norm()).sum();
                assert!(err < 1e-8, "n={n} w={w} err={err}");
            }
        }
    }

    #[test]
    fn circular_cholesky_rejects_indefinite() {
        let mut a = CircularBanded::zeros(8, 2).unwrap();
        for i in 0..8 {
            a.add_lower(0, i, Cf64::new(-1.0, 0.0));
        }
        assert!(matches!(
            CircularCholesky::factor(&a),
            Err(Error::NumericalRank)
        ));
    }
}

