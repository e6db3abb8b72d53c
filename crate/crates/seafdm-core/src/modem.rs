//! DAFT-domain modulation and demodulation.
//!
//! The inverse transform maps affine-domain symbols `x` to time samples
//!
//! ```text
//! s[n] = (1/sqrt(N)) sum_m x[m] exp(j 2 pi (c1 n^2 + c2[m] m^2 + m n / N))
//! ```
//!
//! implemented as a diagonal pre-chirp, a unitary (I)FFT and a diagonal
//! post-chirp. `c2` may vary per subcarrier; with `c1 = c2 = 0` the modem
//! reduces to plain OFDM. The chirp-periodic prefix copies the block tail
//! with a `c1`-dependent phase rotation so that integer sample delays act
//! circularly on the block.

use std::f64::consts::TAU;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::codebook::ChirpVector;
use crate::error::{Error, Result};
use crate::Cf64;

/// Waveform dimensions and fixed parameters shared by every symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct AfdmWaveformConfig {
    /// Subcarrier count.
    pub n: usize,
    /// Chirp-periodic prefix length in samples.
    pub n_cp: usize,
    /// First chirp parameter.
    pub c1: f64,
    /// Square-QAM order (4, 16, 64, ...).
    pub qam_order: usize,
}

impl AfdmWaveformConfig {
    pub fn new(n: usize, n_cp: usize, c1: Option<f64>, qam_order: usize, alpha_max: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("subcarrier count must be >= 1".into()));
        }
        if n_cp >= n {
            return Err(Error::Config(format!("prefix length {n_cp} must be < N = {n}")));
        }
        qam_bits(qam_order)?;
        let c1 = c1.unwrap_or_else(|| full_diversity_c1(n, alpha_max));
        Ok(Self { n, n_cp, c1, qam_order })
    }

    pub fn bits_per_symbol(&self) -> usize {
        qam_bits(self.qam_order).expect("validated at construction")
    }
}

/// The standard full-diversity first chirp, `(2 alpha_max + 1) / (2N)`.
pub fn full_diversity_c1(n: usize, alpha_max: u32) -> f64 {
    (2.0 * alpha_max as f64 + 1.0) / (2.0 * n as f64)
}

/// Planned FFTs for one transform size, shared across symbols and threads.
#[derive(Clone)]
pub struct DaftPlan {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for DaftPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DaftPlan").field("n", &self.n).finish()
    }
}

impl DaftPlan {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

#[inline]
fn chirp_phase(c: f64, idx: usize) -> Cf64 {
    // exp(-j 2 pi c idx^2); idx^2 can exceed 2^53 for huge N, not a concern
    // at the block sizes used here.
    let phase = -TAU * c * (idx as f64) * (idx as f64);
    Cf64::new(phase.cos(), phase.sin())
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Dimension { expected, got });
    }
    Ok(())
}

/// Inverse DAFT with per-subcarrier `c2`: affine-domain symbols to `N` time
/// samples (no prefix).
pub fn idaft(plan: &DaftPlan, x: &[Cf64], c1: f64, c2: &ChirpVector) -> Result<Vec<Cf64>> {
    let n = plan.len();
    check_len(n, x.len())?;
    check_len(n, c2.c2.len())?;
    let mut buf: Vec<Cf64> = x
        .iter()
        .enumerate()
        .map(|(m, &v)| v * chirp_phase(c2.c2[m], m).conj())
        .collect();
    plan.inv.process(&mut buf);
    let scale = 1.0 / (n as f64).sqrt();
    for (nn, v) in buf.iter_mut().enumerate() {
        *v = *v * scale * chirp_phase(c1, nn).conj();
    }
    Ok(buf)
}

/// Forward DAFT with per-subcarrier `c2`: `N` time samples (prefix already
/// removed) to affine-domain symbols. Exact inverse of [`idaft`] when the
/// `c2` vectors match.
pub fn daft(plan: &DaftPlan, r: &[Cf64], c1: f64, c2: &ChirpVector) -> Result<Vec<Cf64>> {
    let n = plan.len();
    check_len(n, r.len())?;
    check_len(n, c2.c2.len())?;
    let mut buf: Vec<Cf64> = r
        .iter()
        .enumerate()
        .map(|(nn, &v)| v * chirp_phase(c1, nn))
        .collect();
    plan.fwd.process(&mut buf);
    let scale = 1.0 / (n as f64).sqrt();
    for (m, v) in buf.iter_mut().enumerate() {
        *v = *v * scale * chirp_phase(c2.c2[m], m);
    }
    Ok(buf)
}

/// Serializes samples as interleaved re/im little-endian 64-bit floats,
/// the replay format for captured frames.
pub fn iq_bytes(samples: &[Cf64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(samples.len() * 16);
    for s in samples {
        out.extend_from_slice(&s.re.to_le_bytes());
        out.extend_from_slice(&s.im.to_le_bytes());
    }
    out
}

/// Inverse of [`iq_bytes`].
pub fn iq_from_bytes(bytes: &[u8]) -> Result<Vec<Cf64>> {
    if bytes.len() % 16 != 0 {
        return Err(Error::Format("IQ byte stream must be a multiple of 16".into()));
    }
    Ok(bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("chunk"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("chunk"));
            Cf64::new(re, im)
        })
        .collect())
}

/// Circular convolution via the planned transforms (linear in the first
/// argument, kernel in the second).
pub fn circular_convolve(plan: &DaftPlan, a: &[Cf64], b: &[Cf64]) -> Result<Vec<Cf64>> {
    let n = plan.len();
    check_len(n, a.len())?;
    check_len(n, b.len())?;
    let mut fa = a.to_vec();
    let mut fb = b.to_vec();
    plan.fwd.process(&mut fa);
    plan.fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(fb.iter()) {
        *x *= *y;
    }
    plan.inv.process(&mut fa);
    let scale = 1.0 / n as f64;
    for v in fa.iter_mut() {
        *v *= scale;
    }
    Ok(fa)
}

/// Forward DAFT with `c2 = 0` (chirp compensation deferred to the caller).
pub fn daft_c2_free(plan: &DaftPlan, r: &[Cf64], c1: f64) -> Result<Vec<Cf64>> {
    let n = plan.len();
    check_len(n, r.len())?;
    let mut buf: Vec<Cf64> = r
        .iter()
        .enumerate()
        .map(|(nn, &v)| v * chirp_phase(c1, nn))
        .collect();
    plan.fwd.process(&mut buf);
    let scale = 1.0 / (n as f64).sqrt();
    for v in buf.iter_mut() {
        *v = *v * scale;
    }
    Ok(buf)
}

/// Prepends the chirp-periodic prefix: `n_cp` tail samples rotated by
/// `exp(-j 2 pi c1 (N^2 + 2 N n))` for prefix positions `n = -n_cp..-1`.
pub fn add_cpp(s: &[Cf64], c1: f64, n_cp: usize) -> Vec<Cf64> {
    let n = s.len();
    let mut out = Vec::with_capacity(n + n_cp);
    for j in 0..n_cp {
        let neg_n = j as f64 - n_cp as f64; // n in [-n_cp, -1]
        let phase = -TAU * c1 * (n as f64 * n as f64 + 2.0 * n as f64 * neg_n);
        let rot = Cf64::new(phase.cos(), phase.sin());
        out.push(s[n - n_cp + j] * rot);
    }
    out.extend_from_slice(s);
    out
}

/// Strips the prefix, returning the `N` body samples.
pub fn remove_cpp(r: &[Cf64], n: usize, n_cp: usize) -> Result<Vec<Cf64>> {
    check_len(n + n_cp, r.len())?;
    Ok(r[n_cp..].to_vec())
}

// ---------------------------------------------------------------------------
// Gray-coded square QAM
// ---------------------------------------------------------------------------

fn qam_bits(order: usize) -> Result<usize> {
    let bits = match order {
        4 => 2,
        16 => 4,
        64 => 6,
        256 => 8,
        _ => {
            return Err(Error::Config(format!(
                "QAM order must be one of 4, 16, 64, 256; got {order}"
            )))
        }
    };
    Ok(bits)
}

/// Gray code over one axis: bit group -> amplitude level index.
#[inline]
fn gray_to_level(gray: usize, bits_per_axis: usize) -> usize {
    // Inverse Gray code: binary index along the ascending amplitude axis.
    let mut b = gray;
    let mut shift = 1;
    while shift < bits_per_axis {
        b ^= b >> shift;
        shift <<= 1;
    }
    b
}

#[inline]
fn level_to_gray(level: usize) -> usize {
    level ^ (level >> 1)
}

/// Amplitude of a level index on one axis, unnormalized: -(L-1), ..., +(L-1).
#[inline]
fn level_amp(level: usize, levels: usize) -> f64 {
    2.0 * level as f64 - (levels as f64 - 1.0)
}

fn qam_norm(order: usize) -> f64 {
    // Unit average symbol energy: E{|a|^2} = 2 (L^2 - 1) / 3 per pair of axes.
    let levels = (order as f64).sqrt();
    (2.0 * (levels * levels - 1.0) / 3.0).sqrt()
}

/// Maps bits (MSB-first per symbol; in-phase group first) to unit-energy
/// Gray-coded square-QAM symbols.
pub fn qam_map(bits: &[u8], order: usize) -> Result<Vec<Cf64>> {
    let bps = qam_bits(order)?;
    if bits.len() % bps != 0 {
        return Err(Error::Config(format!(
            "bit count {} not divisible by {} bits per symbol",
            bits.len(),
            bps
        )));
    }
    let half = bps / 2;
    let levels = 1usize << half;
    let norm = qam_norm(order);
    let mut out = Vec::with_capacity(bits.len() / bps);
    for chunk in bits.chunks(bps) {
        let gi = chunk[..half]
            .iter()
            .fold(0usize, |acc, &b| (acc << 1) | b as usize);
        let gq = chunk[half..]
            .iter()
            .fold(0usize, |acc, &b| (acc << 1) | b as usize);
        let i = level_amp(gray_to_level(gi, half), levels);
        let q = level_amp(gray_to_level(gq, half), levels);
        out.push(Cf64::new(i / norm, q / norm));
    }
    Ok(out)
}

/// Hard-decision nearest-point demapping; exact mid-point ties resolve to
/// the lower Gray label.
pub fn qam_demap(symbols: &[Cf64], order: usize) -> Result<Vec<u8>> {
    let bps = qam_bits(order)?;
    let half = bps / 2;
    let levels = 1usize << half;
    let norm = qam_norm(order);
    let mut out = Vec::with_capacity(symbols.len() * bps);
    for &s in symbols {
        for axis in [s.re, s.im] {
            let level = quantize_axis(axis * norm, levels);
            let gray = level_to_gray(level);
            for i in (0..half).rev() {
                out.push(((gray >> i) & 1) as u8);
            }
        }
    }
    Ok(out)
}

/// Nearest level index for an unnormalized axis value; boundaries fall to
/// the side whose Gray label is numerically lower.
#[inline]
fn quantize_axis(v: f64, levels: usize) -> usize {
    let mut best = 0usize;
    let mut best_dist = f64::INFINITY;
    for level in 0..levels {
        let amp = level_amp(level, levels);
        let d = (v - amp).abs();
        let better = d < best_dist
            || (d == best_dist && level_to_gray(level) < level_to_gray(best));
        if better {
            best = level;
            best_dist = d;
        }
    }
    best
}
