//! P-path doubly-dispersive channel simulation.
//!
//! The time-domain model is
//!
//! ```text
//! r[n] = sum_i h_i s[n - l_i] exp(j 2 pi f_i n) + w[n],   f_i = nu_i / N
//! ```
//!
//! over `n = -N_cp .. N-1`, with integer delay taps `l_i` and real normalized
//! Doppler shifts `nu_i`. Samples earlier than the prefix are treated as
//! zero (single-frame simulation). The same channel is also available as the
//! closed-form effective DAFT-domain matrix, including the transmit/receive
//! chirp vectors, which serves as the algebraic route for equivalence checks
//! and as the explicit-matrix input to the dense MMSE path.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::codebook::ChirpVector;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::Cf64;

/// One propagation path: complex gain (any delay-dependent phase already
/// absorbed), integer delay tap in samples, real normalized Doppler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelPath {
    pub gain: Cf64,
    pub delay_tap: usize,
    pub doppler: f64,
}

impl ChannelPath {
    /// Integer part of the normalized Doppler (round to nearest, halves up).
    pub fn doppler_int(&self) -> i64 {
        // a in (-1/2, 1/2]: round down at exactly +1/2 fractional.
        (self.doppler + 0.5).ceil() as i64 - 1
    }

    /// Fractional Doppler remainder in (-1/2, 1/2].
    pub fn doppler_frac(&self) -> f64 {
        self.doppler - self.doppler_int() as f64
    }
}

/// A sampled channel: the paths plus the waveform dimensions they apply to.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub paths: Vec<ChannelPath>,
    pub n: usize,
    pub n_cp: usize,
}

impl ChannelRealization {
    pub fn new(paths: Vec<ChannelPath>, n: usize, n_cp: usize) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::Config("channel needs at least one path".into()));
        }
        for p in &paths {
            if p.delay_tap > n_cp {
                return Err(Error::Config(format!(
                    "delay tap {} exceeds prefix length {}",
                    p.delay_tap, n_cp
                )));
            }
        }
        Ok(Self { paths, n, n_cp })
    }

    pub fn max_delay(&self) -> usize {
        self.paths.iter().map(|p| p.delay_tap).max().unwrap_or(0)
    }

    /// Writes one line per path as `gain_re,gain_im,delay_tap,doppler`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("gain_re,gain_im,delay_tap,doppler\n");
        for p in &self.paths {
            out.push_str(&format!(
                "{:.17e},{:.17e},{},{:.17e}\n",
                p.gain.re, p.gain.im, p.delay_tap, p.doppler
            ));
        }
        out
    }
}

/// Draws a P-path realization with Jakes-model Doppler (`nu = alpha_max
/// cos(theta)`, `theta` uniform) and i.i.d. complex Gaussian gains of
/// variance `1/P`, so the expected total path power is one.
pub fn sample_jakes_channel<R: Rng + ?Sized>(
    alpha_max: f64,
    delay_taps: &[usize],
    n: usize,
    n_cp: usize,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if delay_taps.is_empty() {
        return Err(Error::Config("need at least one delay tap".into()));
    }
    let p = delay_taps.len();
    let normal = Normal::new(0.0, (0.5 / p as f64).sqrt()).expect("std > 0");
    let paths = delay_taps
        .iter()
        .map(|&tap| {
            let theta: f64 = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            ChannelPath {
                gain: Cf64::new(normal.sample(rng), normal.sample(rng)),
                delay_tap: tap,
                doppler: alpha_max * theta.cos(),
            }
        })
        .collect();
    ChannelRealization::new(paths, n, n_cp)
}

/// Applies the channel to a prefixed signal (`N_cp + N` samples); output has
/// the same span. `signal[j]` holds sample `n = j - N_cp`; indices before
/// the prefix are taken as zero.
pub fn apply_channel(signal: &[Cf64], ch: &ChannelRealization) -> Result<Vec<Cf64>> {
    let total = ch.n + ch.n_cp;
    if signal.len() != total {
        return Err(Error::Dimension {
            expected: total,
            got: signal.len(),
        });
    }
    let mut out = vec![Cf64::default(); total];
    for path in &ch.paths {
        let f = path.doppler / ch.n as f64;
        for j in 0..total {
            let delayed = match j.checked_sub(path.delay_tap) {
                Some(src) => signal[src],
                None => Cf64::default(),
            };
            if delayed == Cf64::default() {
                continue;
            }
            let n_idx = j as f64 - ch.n_cp as f64;
            let phase = TAU * f * n_idx;
            out[j] += path.gain * delayed * Cf64::new(phase.cos(), phase.sin());
        }
    }
    Ok(out)
}

/// Applies the channel to an arbitrary-length sample stream (e.g. a whole
/// multi-symbol frame) with a single continuous Doppler phase reference:
/// sample `j` carries phase index `j - N_cp`, matching the per-symbol model
/// once the accrued inter-symbol rotation is folded into the path gains.
pub fn apply_channel_stream(signal: &[Cf64], ch: &ChannelRealization) -> Vec<Cf64> {
    let mut out = vec![Cf64::default(); signal.len()];
    for path in &ch.paths {
        let f = path.doppler / ch.n as f64;
        for j in path.delay_tap..signal.len() {
            let src = signal[j - path.delay_tap];
            if src == Cf64::default() {
                continue;
            }
            let n_idx = j as f64 - ch.n_cp as f64;
            let phase = TAU * f * n_idx;
            out[j] += path.gain * src * Cf64::new(phase.cos(), phase.sin());
        }
    }
    out
}

/// Adds circularly-symmetric complex Gaussian noise of variance
/// `sigma2` per sample.
pub fn add_awgn<R: Rng + ?Sized>(signal: &mut [Cf64], sigma2: f64, rng: &mut R) {
    if sigma2 <= 0.0 {
        return;
    }
    let normal = Normal::new(0.0, (sigma2 / 2.0).sqrt()).expect("std > 0");
    for v in signal.iter_mut() {
        *v += Cf64::new(normal.sample(rng), normal.sample(rng));
    }
}

// ---------------------------------------------------------------------------
// Time-domain channel matrix (post-prefix-strip view)
// ---------------------------------------------------------------------------

/// Accumulates the `N x N` time-domain matrix `sum_i h_i G_i D_i P^{l_i}`
/// acting on the unprefixed block, where `P` is the forward cyclic shift,
/// `D_i` the Doppler phase ramp and `G_i` the prefix phase-fixup diagonal.
/// Entry `(r, c)`: nonzero only for `c = (r - l_i) mod N`.
pub fn time_channel_entry(ch: &ChannelRealization, c1: f64, path: &ChannelPath, row: usize) -> (usize, Cf64) {
    let n = ch.n;
    let l = path.delay_tap;
    let col = (row + n - l) % n;
    let f = path.doppler / n as f64;
    let doppler = TAU * f * row as f64;
    let mut v = path.gain * Cf64::new(doppler.cos(), doppler.sin());
    if row < l {
        let phase = -TAU * c1 * (n as f64 * n as f64 - 2.0 * n as f64 * (l as f64 - row as f64));
        v *= Cf64::new(phase.cos(), phase.sin());
    }
    (col, v)
}

/// Dense time-domain channel matrix (reference route, small N).
pub fn time_channel_matrix(ch: &ChannelRealization, c1: f64) -> DenseMatrix {
    let n = ch.n;
    let mut h = DenseMatrix::zeros(n, n);
    for path in &ch.paths {
        for row in 0..n {
            let (col, v) = time_channel_entry(ch, c1, path, row);
            *h.at_mut(row, col) += v;
        }
    }
    h
}

// ---------------------------------------------------------------------------
// Effective DAFT-domain matrix (closed form)
// ---------------------------------------------------------------------------

/// Dirichlet-style kernel ratio; `z = p - q - nu + 2 N c1 l`.
/// Near-integer `z` is handled by the analytic limit: multiples of `N` give
/// `N`, other integers give 0. Periodic in `z` with period `N`.
pub fn dirichlet_kernel(z: f64, n: usize) -> Cf64 {
    let frac = z - z.round();
    if frac.abs() < 1e-9 {
        let zi = z.round() as i64;
        return if zi.rem_euclid(n as i64) == 0 {
            Cf64::new(n as f64, 0.0)
        } else {
            Cf64::default()
        };
    }
    let num_phase = -TAU * z;
    let den_phase = -TAU * z / n as f64;
    let num = Cf64::new(num_phase.cos(), num_phase.sin()) - 1.0;
    let den = Cf64::new(den_phase.cos(), den_phase.sin()) - 1.0;
    num / den
}

/// Closed-form effective DAFT-domain channel matrix for transmit chirp
/// vector `c2_tx` and receive chirp vector `c2_rx`:
///
/// ```text
/// H[p,q] = (1/N) sum_i h_i exp(j 2 pi (c2_tx[q] q^2 - c2_rx[p] p^2))
///                      exp(j (2 pi / N) (N c1 l_i^2 - q l_i)) F_i[p,q]
/// ```
pub fn effective_matrix(
    ch: &ChannelRealization,
    c1: f64,
    c2_tx: &ChirpVector,
    c2_rx: &ChirpVector,
) -> Result<DenseMatrix> {
    let n = ch.n;
    if c2_tx.c2.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: c2_tx.c2.len(),
        });
    }
    if c2_rx.c2.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: c2_rx.c2.len(),
        });
    }
    let mut h = DenseMatrix::zeros(n, n);
    let inv_n = 1.0 / n as f64;
    for path in &ch.paths {
        let l = path.delay_tap as f64;
        let nu = path.doppler;
        let common = TAU / n as f64 * (n as f64 * c1 * l * l);
        let path_rot = path.gain * Cf64::new(common.cos(), common.sin());
        for q in 0..n {
            let qf = q as f64;
            let tx_phase = TAU * (c2_tx.c2[q] * qf * qf) - TAU / n as f64 * qf * l;
            let col_rot = path_rot * Cf64::new(tx_phase.cos(), tx_phase.sin()) * inv_n;
            for p in 0..n {
                let pf = p as f64;
                let z = pf - qf - nu + 2.0 * n as f64 * c1 * l;
                let kernel = dirichlet_kernel(z, n);
                if kernel == Cf64::default() {
                    continue;
                }
                let rx_phase = -TAU * (c2_rx.c2[p] * pf * pf);
                let rot = Cf64::new(rx_phase.cos(), rx_phase.sin());
                *h.at_mut(p, q) += col_rot * rot * kernel;
            }
        }
    }
    Ok(h)
}
