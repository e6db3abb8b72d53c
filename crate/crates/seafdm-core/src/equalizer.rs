//! MMSE equalization, embedded-pilot channel estimation and detection.
//!
//! Two equalizer routes share the same math `x = H^H (H H^H + s2 I)^{-1} y`:
//!
//! - [`MmseDense`] takes an explicit effective-channel matrix (any `H`),
//!   factoring the Gram system once and reusing it across symbols;
//! - [`TimeDomainEqualizer`] exploits the banded-circular structure of the
//!   time-domain channel so one symbol costs two FFTs plus an `O(N w^2)`
//!   solve. Its output lives in the chirp-free DAFT domain; the caller
//!   removes the transmit chirp with the synchronized `c2` vector.
//!
//! The channel estimator reads the embedded pilot (index 0, guard bands on
//! both sides): path delays and integer Doppler come from the pilot response
//! peak positions, the fractional Doppler from the two neighbouring bins,
//! and the gains from a joint least-squares fit over the guard window.

use std::f64::consts::TAU;

use crate::channel::{ChannelPath, ChannelRealization};
use crate::codebook::ChirpVector;
use crate::error::{Error, Result};
use crate::linalg::{CircularBanded, CircularCholesky, DenseMatrix, LuFactors};
use crate::modem::{daft_c2_free, qam_demap, DaftPlan};
use crate::Cf64;

/// MMSE equalizer for an explicit channel matrix; the factorization of
/// `H H^H + sigma2 I` is computed once and shared across symbols.
#[derive(Debug, Clone)]
pub struct MmseDense {
    h: DenseMatrix,
    gram: LuFactors,
}

impl MmseDense {
    pub fn new(h: &DenseMatrix, sigma2: f64) -> Result<Self> {
        if h.rows != h.cols {
            return Err(Error::Dimension {
                expected: h.rows,
                got: h.cols,
            });
        }
        if sigma2 < 0.0 {
            return Err(Error::Config("noise variance must be >= 0".into()));
        }
        let n = h.rows;
        let mut gram = DenseMatrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                let mut acc = Cf64::default();
                for k in 0..n {
                    acc += h.at(r, k) * h.at(c, k).conj();
                }
                *gram.at_mut(r, c) = acc;
            }
        }
        for i in 0..n {
            *gram.at_mut(i, i) += Cf64::new(sigma2, 0.0);
        }
        let gram = LuFactors::factor(&gram)?;
        Ok(Self { h: h.clone(), gram })
    }

    pub fn equalize(&self, y: &[Cf64]) -> Result<Vec<Cf64>> {
        let z = self.gram.solve(y)?;
        Ok(self.h.matvec_adjoint(&z))
    }
}

/// One-call convenience wrapper over [`MmseDense`].
pub fn mmse_equalize(y: &[Cf64], h: &DenseMatrix, sigma2: f64) -> Result<Vec<Cf64>> {
    if y.len() != h.rows {
        return Err(Error::Dimension {
            expected: h.rows,
            got: y.len(),
        });
    }
    MmseDense::new(h, sigma2)?.equalize(y)
}

/// Hard-decision detection: nearest constellation point per symbol.
pub fn detect_bits(symbols: &[Cf64], qam_order: usize) -> Result<Vec<u8>> {
    qam_demap(symbols, qam_order)
}

// ---------------------------------------------------------------------------
// Fast time-domain MMSE
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
struct RowEntry {
    delay: usize,
    gain: Cf64,
    freq: f64,
    c1_fix: f64,
}

/// Equalizer bound to one channel realization and noise level. The Gram
/// matrix `H H^H + sigma2 I` is circularly banded with half-width equal to
/// the maximum delay tap, factored once at construction. At exactly zero
/// noise the MMSE collapses to the channel inverse, solved directly from an
/// LU of the time-domain matrix: conditioning then enters once instead of
/// squared.
#[derive(Debug, Clone)]
enum EqualizerFactors {
    Gram(CircularCholesky),
    Inverse(LuFactors),
}

#[derive(Debug, Clone)]
pub struct TimeDomainEqualizer {
    n: usize,
    c1: f64,
    entries: Vec<RowEntry>,
    factors: EqualizerFactors,
}

impl TimeDomainEqualizer {
    pub fn new(ch: &ChannelRealization, c1: f64, sigma2: f64) -> Result<Self> {
        if sigma2 < 0.0 {
            return Err(Error::Config("noise variance must be >= 0".into()));
        }
        let n = ch.n;
        let w = ch.max_delay();
        if 2 * w + 1 > n {
            return Err(Error::Config("delay spread too large for block".into()));
        }
        let entries: Vec<RowEntry> = ch
            .paths
            .iter()
            .map(|p| RowEntry {
                delay: p.delay_tap,
                gain: p.gain,
                freq: p.doppler / n as f64,
                c1_fix: c1,
            })
            .collect();

        let factors = if sigma2 == 0.0 {
            let h = crate::channel::time_channel_matrix(ch, c1);
            EqualizerFactors::Inverse(LuFactors::factor(&h)?)
        } else {
            // Gram matrix in circular-banded storage. For an ordered path
            // pair (a, b) with la >= lb, row r couples to row
            // r2 = r - (la - lb) mod n.
            let mut gram = CircularBanded::zeros(n, w)?;
            for a in &entries {
                for b in &entries {
                    if a.delay < b.delay {
                        continue;
                    }
                    let d = a.delay - b.delay;
                    for r in 0..n {
                        let va = row_value(a, r, n);
                        let r2 = (r + n - d) % n;
                        let vb = row_value(b, r2, n);
                        gram.add_lower(d, r2, va * vb.conj());
                    }
                }
            }
            for i in 0..n {
                gram.add_lower(0, i, Cf64::new(sigma2, 0.0));
            }
            EqualizerFactors::Gram(CircularCholesky::factor(&gram)?)
        };
        Ok(Self {
            n,
            c1,
            entries,
            factors,
        })
    }

    /// MMSE estimate in the chirp-free DAFT domain from an unprefixed
    /// received block.
    pub fn equalize(&self, plan: &DaftPlan, body: &[Cf64]) -> Result<Vec<Cf64>> {
        if body.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: body.len(),
            });
        }
        let v = match &self.factors {
            EqualizerFactors::Inverse(lu) => lu.solve(body)?,
            EqualizerFactors::Gram(chol) => {
                let z = chol.solve(body)?;
                // v = H^H z
                let mut v = vec![Cf64::default(); self.n];
                for e in &self.entries {
                    for r in 0..self.n {
                        let col = (r + self.n - e.delay) % self.n;
                        v[col] += row_value(e, r, self.n).conj() * z[r];
                    }
                }
                v
            }
        };
        daft_c2_free(plan, &v, self.c1)
    }
}

/// `H[r, (r - delay) mod n]` for one path: gain, Doppler ramp and the
/// prefix phase fix-up for rows that wrap.
#[inline]
fn row_value(e: &RowEntry, r: usize, n: usize) -> Cf64 {
    let doppler = TAU * e.freq * r as f64;
    let mut v = e.gain * Cf64::new(doppler.cos(), doppler.sin());
    if r < e.delay {
        let phase =
            -TAU * e.c1_fix * (n as f64 * n as f64 - 2.0 * n as f64 * (e.delay as f64 - r as f64));
        v *= Cf64::new(phase.cos(), phase.sin());
    }
    v
}

/// Removes the transmit chirp from an equalized chirp-free DAFT vector
/// using the receiver's synchronized `c2`.
pub fn remove_transmit_chirp(x: &mut [Cf64], c2: &ChirpVector) {
    for (m, v) in x.iter_mut().enumerate() {
        let phase = -TAU * c2.c2[m] * (m as f64) * (m as f64);
        *v *= Cf64::new(phase.cos(), phase.sin());
    }
}

// ---------------------------------------------------------------------------
// Embedded-pilot channel estimation
// ---------------------------------------------------------------------------

/// Estimator settings; the pilot sits at DAFT index 0 with `guard_width`
/// zero symbols on each side.
#[derive(Debug, Clone)]
pub struct PilotEstimatorConfig {
    pub guard_width: usize,
    pub pilot_amp: f64,
    /// Integer Doppler search range (plus/minus).
    pub alpha_search: i64,
    /// Largest delay tap hypothesis examined.
    pub max_tap_search: usize,
    /// Detection threshold as a fraction of the pilot amplitude.
    pub threshold: f64,
    /// Per-sample noise variance; regularizes the joint gain fit so nearly
    /// collinear path kernels cannot inflate the estimate variance.
    pub noise_var: f64,
    /// Run the fractional-Doppler sweeps and polish rounds. Screening
    /// passes (sliding-window detection) switch this off for speed.
    pub refine: bool,
}

/// Estimated channel plus the threshold that produced it.
#[derive(Debug, Clone)]
pub struct EstimatedChannel {
    pub channel: ChannelRealization,
    pub threshold: f64,
}

/// Entry `(p, q)` of the chirp-free effective matrix for a unit-gain path
/// `(l, nu)`.
pub fn chirp_free_response(p: usize, q: usize, l: usize, nu: f64, c1: f64, n: usize) -> Cf64 {
    let z = p as f64 - q as f64 - nu + 2.0 * n as f64 * c1 * l as f64;
    let kernel = crate::channel::dirichlet_kernel(z, n);
    let phase = TAU * c1 * (l * l) as f64 - TAU / n as f64 * (q * l) as f64;
    kernel * Cf64::new(phase.cos(), phase.sin()) * (1.0 / n as f64)
}

/// Pilot response amplitude at DAFT bin `p` for a unit-gain path `(l, nu)`:
/// the `q = 0` column of the effective matrix times the pilot amplitude.
fn pilot_response(p: usize, l: usize, nu: f64, c1: f64, n: usize, amp: f64) -> Cf64 {
    chirp_free_response(p, 0, l, nu, c1, n) * amp
}

/// Estimates the channel from one pilot-bearing received block (unprefixed
/// time samples). Returns the detected paths sorted by delay.
pub fn estimate_channel(
    plan: &DaftPlan,
    body: &[Cf64],
    c1: f64,
    n_cp: usize,
    cfg: &PilotEstimatorConfig,
) -> Result<EstimatedChannel> {
    let n = plan.len();
    if body.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: body.len(),
        });
    }
    let r = daft_c2_free(plan, body, c1)?;
    estimate_channel_daft(&r, c1, n_cp, cfg)
}

/// Bins the estimator fits over: every candidate main bin plus one
/// neighbour on each side. Data reconstruction passes subtract their
/// leakage over exactly these bins.
pub fn estimation_window(cfg: &PilotEstimatorConfig, c1: f64, n: usize) -> Vec<usize> {
    let shift = (2.0 * n as f64 * c1).round() as i64;
    let max_tap = cfg.max_tap_search.min(
        ((cfg.guard_width as i64 - cfg.alpha_search) / shift.max(1)).max(0) as usize,
    );
    candidate_window(cfg, shift, max_tap, n)
}

fn candidate_window(
    cfg: &PilotEstimatorConfig,
    shift: i64,
    max_tap: usize,
    n: usize,
) -> Vec<usize> {
    let mut window = Vec::new();
    for l in 0..=max_tap {
        for alpha in -(cfg.alpha_search + 1)..=(cfg.alpha_search + 1) {
            let p = ((alpha - shift * l as i64).rem_euclid(n as i64)) as usize;
            if !window.contains(&p) {
                window.push(p);
            }
        }
    }
    window
}

/// [`estimate_channel`] on an already-transformed chirp-free DAFT block.
pub fn estimate_channel_daft(
    r_prime: &[Cf64],
    c1: f64,
    n_cp: usize,
    cfg: &PilotEstimatorConfig,
) -> Result<EstimatedChannel> {
    let n = r_prime.len();
    let shift_f = 2.0 * n as f64 * c1;
    if (shift_f - shift_f.round()).abs() > 1e-9 {
        return Err(Error::Config(
            "pilot estimator requires 2 N c1 to be an integer".into(),
        ));
    }
    let shift = shift_f.round() as i64;
    let r = r_prime;

    // Candidate grid: bins p(l, alpha) = (alpha - shift l) mod N must stay
    // inside the guard window so data symbols cannot masquerade as paths.
    let max_tap = cfg.max_tap_search.min(
        ((cfg.guard_width as i64 - cfg.alpha_search) / shift.max(1)).max(0) as usize,
    );
    let bin = |l: usize, alpha: i64| -> usize {
        ((alpha - shift * l as i64).rem_euclid(n as i64)) as usize
    };

    // Matching pursuit over the candidate grid. Each round finds the
    // strongest bin of the residual, immediately fits that path's
    // fractional Doppler and gain by a least-squares sweep over the whole
    // window, subtracts it and rescans: kernel tails of fractional-Doppler
    // paths land on other delay hypotheses and would otherwise be detected
    // as phantom paths.
    let window = candidate_window(cfg, shift, max_tap, n);
    let floor = cfg.threshold * cfg.pilot_amp;
    let mut detected: Vec<(usize, f64)> = Vec::new();
    let mut gains: Vec<Cf64> = Vec::new();

    let model_at = |detected: &[(usize, f64)], gains: &[Cf64], p: usize| -> Cf64 {
        detected
            .iter()
            .zip(gains.iter())
            .map(|(&(l, nu), &g)| g * pilot_response(p, l, nu, c1, n, cfg.pilot_amp))
            .sum()
    };

    let fit_gains = |paths: &[(usize, f64)], window: &[usize]| -> Result<Vec<Cf64>> {
        let k = paths.len();
        let mut basis = vec![vec![Cf64::default(); window.len()]; k];
        for (i, &(l, nu)) in paths.iter().enumerate() {
            for (j, &p) in window.iter().enumerate() {
                basis[i][j] = pilot_response(p, l, nu, c1, n, cfg.pilot_amp);
            }
        }
        let mut normal = DenseMatrix::zeros(k, k);
        let mut rhs = vec![Cf64::default(); k];
        for i in 0..k {
            for j in 0..k {
                let mut acc = Cf64::default();
                for t in 0..window.len() {
                    acc += basis[i][t].conj() * basis[j][t];
                }
                *normal.at_mut(i, j) = acc;
            }
            *normal.at_mut(i, i) += Cf64::new(cfg.noise_var, 0.0);
            let mut acc = Cf64::default();
            for (t, &p) in window.iter().enumerate() {
                acc += basis[i][t].conj() * r[p];
            }
            rhs[i] = acc;
        }
        LuFactors::factor(&normal)?.solve(&rhs)
    };

    // Least-squares sweep of one path's fractional Doppler and gain against
    // the residual with every other path subtracted.
    let sweep_path = |detected: &mut Vec<(usize, f64)>,
                      gains: &mut Vec<Cf64>,
                      i: usize,
                      window: &[usize]| {
        let (l_i, nu_i) = detected[i];
        let alpha_i = nu_i.round();
        let residual: Vec<Cf64> = window
            .iter()
            .map(|&p| {
                let mut v = r[p];
                for (j, (&(lj, nuj), &g)) in
                    detected.iter().zip(gains.iter()).enumerate()
                {
                    if j != i {
                        v -= g * pilot_response(p, lj, nuj, c1, n, cfg.pilot_amp);
                    }
                }
                v
            })
            .collect();
        let mut best = (f64::INFINITY, alpha_i, Cf64::default());
        let try_nu = |nu: f64, best: &mut (f64, f64, Cf64)| {
            let mut proj = Cf64::default();
            let mut energy = 0.0f64;
            for (t, &p) in window.iter().enumerate() {
                let k_v = pilot_response(p, l_i, nu, c1, n, cfg.pilot_amp);
                proj += k_v.conj() * residual[t];
                energy += k_v.norm_sqr();
            }
            if energy <= 0.0 {
                return;
            }
            // ||residual - gain kernel||^2 = ||r||^2 - |proj|^2 / energy
            let res = -proj.norm_sqr() / energy;
            if res < best.0 {
                *best = (res, nu, proj / energy);
            }
        };
        // Coarse grid at 1/16, refined to 1/64 around the best point; the
        // screening mode stops after the coarse pass.
        for step in -8i64..=8 {
            try_nu(alpha_i + step as f64 / 16.0, &mut best);
        }
        if cfg.refine {
            let center = best.1;
            for step in -3i64..=3 {
                if step != 0 {
                    try_nu(center + step as f64 / 64.0, &mut best);
                }
            }
        }
        detected[i].1 = best.1.clamp(alpha_i - 0.5, alpha_i + 0.5);
        gains[i] = best.2;
    };

    let max_paths = (max_tap + 1).min(6);
    loop {
        let mut best: Option<(usize, i64, f64)> = None;
        for l in 0..=max_tap {
            if detected.iter().any(|&(dl, _)| dl == l) {
                continue;
            }
            for alpha in -cfg.alpha_search..=cfg.alpha_search {
                let p = bin(l, alpha);
                let mag = (r[p] - model_at(&detected, &gains, p)).norm();
                if mag >= floor && best.map_or(true, |(_, _, m)| mag > m) {
                    best = Some((l, alpha, mag));
                }
            }
        }
        let Some((l, alpha, _)) = best else { break };
        detected.push((l, alpha as f64));
        gains.push(Cf64::default());
        let last = detected.len() - 1;
        sweep_path(&mut detected, &mut gains, last, &window);
        gains = fit_gains(&detected, &window)?;
        if detected.len() >= max_paths {
            break;
        }
    }
    if detected.is_empty() {
        return Err(Error::EmptyChannel);
    }

    // Coordinate-descent polish, then prune fitted paths that fell below
    // the detection floor (phantoms born from noise or tail mismatch).
    if cfg.refine {
        for _ in 0..2 {
            for i in 0..detected.len() {
                sweep_path(&mut detected, &mut gains, i, &window);
            }
            gains = fit_gains(&detected, &window)?;
        }
    }
    let keep: Vec<bool> = gains
        .iter()
        .map(|g| g.norm() * 0.8 * cfg.pilot_amp >= 0.7 * floor)
        .collect();
    if keep.iter().any(|&k| !k) && keep.iter().any(|&k| k) {
        let mut filtered = Vec::new();
        for (i, &(l, nu)) in detected.iter().enumerate() {
            if keep[i] {
                filtered.push((l, nu));
            }
        }
        detected = filtered;
        gains = fit_gains(&detected, &window)?;
        if cfg.refine {
            for i in 0..detected.len() {
                sweep_path(&mut detected, &mut gains, i, &window);
            }
            gains = fit_gains(&detected, &window)?;
        }
    }
    let mut order: Vec<usize> = (0..detected.len()).collect();
    order.sort_by_key(|&i| detected[i].0);
    let paths: Vec<ChannelPath> = order
        .iter()
        .map(|&i| ChannelPath {
            gain: gains[i],
            delay_tap: detected[i].0,
            doppler: detected[i].1,
        })
        .collect();
    let eff_cp = n_cp.max(paths.iter().map(|p| p.delay_tap).max().unwrap_or(0));
    Ok(EstimatedChannel {
        channel: ChannelRealization::new(paths, n, eff_cp)?,
        threshold: cfg.threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{apply_channel, sample_jakes_channel};
    use crate::modem::{add_cpp, full_diversity_c1, idaft, remove_cpp};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn rand_symbols(rng: &mut StdRng, n: usize) -> Vec<Cf64> {
        (0..n)
            .map(|_| Cf64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect()
    }

    #[test]
    fn identity_channel_zero_noise_is_passthrough() {
        let h = DenseMatrix::identity(8);
        let y: Vec<Cf64> = (0..8).map(|i| Cf64::new(i as f64, -1.0)).collect();
        let x = mmse_equalize(&y, &h, 0.0).unwrap();
        for (a, b) in x.iter().zip(y.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn unitary_channel_zero_noise_is_adjoint() {
        // Random unitary from a DAFT matrix.
        let n = 16;
        let plan = DaftPlan::new(n);
        let cv = ChirpVector::constant(1e-3, n);
        let mut h = DenseMatrix::zeros(n, n);
        for q in 0..n {
            let mut e = vec![Cf64::default(); n];
            e[q] = Cf64::new(1.0, 0.0);
            let col = crate::modem::daft(&plan, &e, 0.02, &cv).unwrap();
            for p in 0..n {
                *h.at_mut(p, q) = col[p];
            }
        }
        let mut rng = StdRng::seed_from_u64(30);
        let y = rand_symbols(&mut rng, n);
        let x = mmse_equalize(&y, &h, 0.0).unwrap();
        let want = h.matvec_adjoint(&y);
        for (a, b) in x.iter().zip(want.iter()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn large_noise_shrinks_estimate() {
        let h = DenseMatrix::identity(8);
        let y = vec![Cf64::new(1.0, 0.0); 8];
        let x = mmse_equalize(&y, &h, 1e9).unwrap();
        let norm: f64 = x.iter().map(|v| v.norm()).sum();
        assert!(norm < 1e-7);
    }

    #[test]
    fn singular_zero_noise_errors() {
        let h = DenseMatrix::zeros(4, 4);
        assert!(matches!(
            mmse_equalize(&vec![Cf64::default(); 4], &h, 0.0),
            Err(Error::NumericalRank)
        ));
    }

    #[test]
    fn mmse_approaches_inverse_as_noise_vanishes() {
        let mut rng = StdRng::seed_from_u64(31);
        let n = 24;
        let mut h = DenseMatrix::zeros(n, n);
        for c in 0..n {
            for r in 0..n {
                *h.at_mut(r, c) = Cf64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            }
            *h.at_mut(c, c) += Cf64::new(2.0, 0.0);
        }
        let y = rand_symbols(&mut rng, n);
        let direct = LuFactors::factor(&h).unwrap().solve(&y).unwrap();
        let x = mmse_equalize(&y, &h, 1e-12).unwrap();
        let err: f64 = x.iter().zip(direct.iter()).map(|(a, b)| (a - b).norm()).sum();
        assert!(err < 1e-6, "err {err}");
    }

    #[test]
    fn time_domain_equalizer_matches_dense_route() {
        let mut rng = StdRng::seed_from_u64(32);
        let n = 64;
        let n_cp = 9;
        let plan = DaftPlan::new(n);
        let c1 = full_diversity_c1(n, 2);
        for sigma2 in [0.0, 0.01, 0.3] {
            let ch = sample_jakes_channel(2.0, &[0, 1, 3], n, n_cp, &mut rng).unwrap();
            let x = rand_symbols(&mut rng, n);
            let c2 = ChirpVector::constant(0.0, n);
            let s = idaft(&plan, &x, c1, &c2).unwrap();
            let tx = add_cpp(&s, c1, n_cp);
            let rx = apply_channel(&tx, &ch).unwrap();
            let body = remove_cpp(&rx, n, n_cp).unwrap();

            // Dense route on the chirp-free effective matrix.
            let h = crate::channel::effective_matrix(&ch, c1, &c2, &c2).unwrap();
            let y = crate::modem::daft(&plan, &body, c1, &c2).unwrap();
            let dense = mmse_equalize(&y, &h, sigma2).unwrap();

            let eq = TimeDomainEqualizer::new(&ch, c1, sigma2).unwrap();
            let fast = eq.equalize(&plan, &body).unwrap();
            let err: f64 = dense
                .iter()
                .zip(fast.iter())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(err < 1e-8, "sigma2 {sigma2}: err {err}");
        }
    }

    #[test]
    fn noiseless_roundtrip_through_time_domain_equalizer() {
        let mut rng = StdRng::seed_from_u64(33);
        let n = 128;
        let n_cp = 9;
        let plan = DaftPlan::new(n);
        let c1 = full_diversity_c1(n, 2);
        // Fixed, well-conditioned paths: zero-forcing is exact only away
        // from channel spectral nulls.
        let ch = ChannelRealization::new(
            vec![
                ChannelPath { gain: Cf64::new(0.9, 0.1), delay_tap: 0, doppler: 1.3 },
                ChannelPath { gain: Cf64::new(0.2, -0.3), delay_tap: 1, doppler: -1.7 },
                ChannelPath { gain: Cf64::new(-0.1, 0.25), delay_tap: 2, doppler: 0.4 },
            ],
            n,
            n_cp,
        )
        .unwrap();
        let x = rand_symbols(&mut rng, n);
        let c2 = ChirpVector {
            symbol_index: 0,
            c2: (0..n).map(|_| (rng.gen::<f64>() - 0.5) * 1e-3).collect(),
        };
        let s = idaft(&plan, &x, c1, &c2).unwrap();
        let tx = add_cpp(&s, c1, n_cp);
        let rx = apply_channel(&tx, &ch).unwrap();
        let body = remove_cpp(&rx, n, n_cp).unwrap();
        let eq = TimeDomainEqualizer::new(&ch, c1, 0.0).unwrap();
        let mut xhat = eq.equalize(&plan, &body).unwrap();
        remove_transmit_chirp(&mut xhat, &c2);
        let err: f64 = xhat.iter().zip(x.iter()).map(|(a, b)| (a - b).norm()).sum();
        assert!(err / (n as f64) < 1e-9, "mean err {}", err / n as f64);
    }

    fn pilot_block(n: usize, q: usize, amp: f64) -> Vec<Cf64> {
        let mut x = vec![Cf64::default(); n];
        x[0] = Cf64::new(amp, 0.0);
        let _ = q;
        x
    }

    #[test]
    fn estimator_recovers_integer_doppler_paths_exactly() {
        let n = 256;
        let n_cp = 17;
        let plan = DaftPlan::new(n);
        let c1 = full_diversity_c1(n, 2);
        let paths = vec![
            ChannelPath { gain: Cf64::new(0.8, 0.1), delay_tap: 0, doppler: 1.0 },
            ChannelPath { gain: Cf64::new(-0.3, 0.45), delay_tap: 1, doppler: -2.0 },
            ChannelPath { gain: Cf64::new(0.2, -0.6), delay_tap: 2, doppler: 0.0 },
        ];
        let ch = ChannelRealization::new(paths.clone(), n, n_cp).unwrap();
        let amp = 16.0;
        let x = pilot_block(n, 50, amp);
        let c2 = ChirpVector::constant(0.0, n);
        let s = idaft(&plan, &x, c1, &c2).unwrap();
        let tx = add_cpp(&s, c1, n_cp);
        let rx = apply_channel(&tx, &ch).unwrap();
        let body = remove_cpp(&rx, n, n_cp).unwrap();
        let cfg = PilotEstimatorConfig {
            guard_width: 50,
            pilot_amp: amp,
            alpha_search: 2,
            max_tap_search: 9,
            threshold: 0.05,
            noise_var: 0.0,
            refine: true,
        };
        let est = estimate_channel(&plan, &body, c1, n_cp, &cfg).unwrap();
        assert_eq!(est.channel.paths.len(), 3);
        for (got, want) in est.channel.paths.iter().zip(paths.iter()) {
            assert_eq!(got.delay_tap, want.delay_tap);
            assert!((got.doppler - want.doppler).abs() < 1e-6);
            assert!((got.gain - want.gain).norm() < 1e-6);
        }
    }

    #[test]
    fn estimator_handles_fractional_doppler() {
        let n = 256;
        let n_cp = 17;
        let plan = DaftPlan::new(n);
        let c1 = full_diversity_c1(n, 2);
        let paths = vec![
            ChannelPath { gain: Cf64::new(0.7, -0.2), delay_tap: 0, doppler: 1.37 },
            ChannelPath { gain: Cf64::new(0.1, 0.5), delay_tap: 2, doppler: -0.82 },
        ];
        let ch = ChannelRealization::new(paths.clone(), n, n_cp).unwrap();
        let amp = 16.0;
        let x = pilot_block(n, 50, amp);
        let c2 = ChirpVector::constant(0.0, n);
        let s = idaft(&plan, &x, c1, &c2).unwrap();
        let tx = add_cpp(&s, c1, n_cp);
        let rx = apply_channel(&tx, &ch).unwrap();
        let body = remove_cpp(&rx, n, n_cp).unwrap();
        let cfg = PilotEstimatorConfig {
            guard_width: 50,
            pilot_amp: amp,
            alpha_search: 2,
            max_tap_search: 9,
            threshold: 0.05,
            noise_var: 0.0,
            refine: true,
        };
        let est = estimate_channel(&plan, &body, c1, n_cp, &cfg).unwrap();
        assert_eq!(est.channel.paths.len(), 2);
        for (got, want) in est.channel.paths.iter().zip(paths.iter()) {
            assert_eq!(got.delay_tap, want.delay_tap);
            assert!(
                (got.doppler - want.doppler).abs() < 0.02,
                "doppler {} vs {}",
                got.doppler,
                want.doppler
            );
            assert!((got.gain - want.gain).norm() < 0.05);
        }
    }

    #[test]
    fn estimator_rejects_silence() {
        let n = 128;
        let plan = DaftPlan::new(n);
        let c1 = full_diversity_c1(n, 2);
        let body = vec![Cf64::default(); n];
        let cfg = PilotEstimatorConfig {
            guard_width: 30,
            pilot_amp: 8.0,
            alpha_search: 2,
            max_tap_search: 5,
            threshold: 0.05,
            noise_var: 0.0,
            refine: true,
        };
        assert!(matches!(
            estimate_channel(&plan, &body, c1, 9, &cfg),
            Err(Error::EmptyChannel)
        ));
    }

    #[test]
    fn detect_bits_is_nearest_point() {
        let bits = detect_bits(&[Cf64::new(0.9, 0.9), Cf64::new(-0.2, 0.4)], 4).unwrap();
        assert_eq!(bits, vec![1, 1, 0, 1]);
    }
}
