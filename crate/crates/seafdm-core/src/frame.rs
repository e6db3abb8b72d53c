//! Three-block frame format and the synchronization receivers.
//!
//! A frame carries `K` AFDM symbols, each laid out in the affine domain as
//! `[pilot | Q guards | L data | Q guards]` with `N = 2Q + L + 1`:
//!
//! - block 1 (`J` symbols): a pre-shared PN header under the constant
//!   pre-chirp `u`, used for sliding-window frame detection;
//! - block 2 (`E - J` symbols): the transmitter's serialized generator
//!   state, optionally direct-sequence spread, also under `u`;
//! - block 3 (`K - E` symbols): payload under the LPPN-driven `c2`.
//!
//! The legitimate receiver runs three stages: frame detection (coarse
//! sliding correlation in prefix-length steps plus a delay-Doppler matched
//! filter for sample alignment), generator-state despreading and restore,
//! and chirp-synchronized data detection. Eavesdropper receivers reuse the
//! same front end but either ignore the transmit chirp or quantize an
//! oracle-provided `c2` onto a coarse search grid.

use std::f64::consts::TAU;

use crate::channel::ChannelRealization;
use crate::codebook::{ChirpCodebook, ChirpStream, ChirpVector};
use crate::equalizer::{
    estimate_channel, remove_transmit_chirp, PilotEstimatorConfig, TimeDomainEqualizer,
};
use crate::error::{Error, Result};
use crate::lppn::{msequence, LppnConfig, LppnGenerator};
use crate::modem::{add_cpp, qam_demap, qam_map, AfdmWaveformConfig, DaftPlan};
use crate::Cf64;

/// Frame geometry plus the pre-shared sequences.
#[derive(Debug, Clone)]
pub struct FrameLayout {
    /// Guard width `Q` on each side of the pilot.
    pub guard_width: usize,
    /// Data symbols per AFDM symbol (`L`).
    pub data_width: usize,
    /// Header symbols `J`.
    pub header_symbols: usize,
    /// Header plus state-transfer symbols `E`.
    pub sync_symbols: usize,
    /// Total symbols per frame `K`.
    pub total_symbols: usize,
    /// Spreading factor `F`; 0 disables spreading.
    pub spread_factor: usize,
    /// Constant pre-chirp `u` for blocks 1 and 2.
    pub constant_c2: f64,
    /// Pre-shared header bits, `J * L * log2(R)` long.
    pub header_bits: Vec<u8>,
    /// Spreading sequence `m_F`.
    pub spread_code: Vec<u8>,
}

/// Spreading sequence used by the hardware-style preset.
pub const SPREAD_CODE_15: [u8; 15] = [1, 0, 0, 0, 1, 1, 1, 1, 0, 1, 0, 1, 1, 0, 0];

impl FrameLayout {
    pub fn new(
        guard_width: usize,
        data_width: usize,
        header_symbols: usize,
        sync_symbols: usize,
        total_symbols: usize,
        spread_factor: usize,
        constant_c2: f64,
        bits_per_symbol: usize,
        state_bits: usize,
    ) -> Result<Self> {
        if header_symbols == 0 || header_symbols >= sync_symbols || sync_symbols >= total_symbols {
            return Err(Error::Config(
                "need 0 < J < E < K for the three-block layout".into(),
            ));
        }
        let capacity = (sync_symbols - header_symbols) * data_width * bits_per_symbol;
        let need = state_bits * spread_factor.max(1);
        if need > capacity {
            return Err(Error::Config(format!(
                "state transfer needs {need} bits but block 2 holds {capacity}"
            )));
        }
        let header_len = header_symbols * data_width * bits_per_symbol;
        // Degree-13 register: one period covers any practical header length.
        let mut header_taps = vec![0u8; 13];
        for i in [1usize, 3, 4, 13] {
            header_taps[i - 1] = 1;
        }
        let mut seed = vec![0u8; 13];
        seed[0] = 1;
        let header_bits = msequence(&header_taps, &seed, header_len)?;
        Ok(Self {
            guard_width,
            data_width,
            header_symbols,
            sync_symbols,
            total_symbols,
            spread_factor,
            constant_c2,
            header_bits,
            spread_code: SPREAD_CODE_15.to_vec(),
        })
    }

    /// Subcarrier count implied by the layout.
    pub fn n(&self) -> usize {
        2 * self.guard_width + self.data_width + 1
    }

    /// Data subcarrier indices.
    pub fn data_range(&self) -> std::ops::Range<usize> {
        self.guard_width + 1..self.guard_width + 1 + self.data_width
    }

    /// Payload bits carried by block 3.
    pub fn payload_bits(&self, bits_per_symbol: usize) -> usize {
        (self.total_symbols - self.sync_symbols) * self.data_width * bits_per_symbol
    }

    /// Block-2 bit capacity.
    pub fn state_block_bits(&self, bits_per_symbol: usize) -> usize {
        (self.sync_symbols - self.header_symbols) * self.data_width * bits_per_symbol
    }

    /// The default geometry at `N = 1024`: `Q = 100`, `L = 823`, `J = 4`,
    /// `E = 8`, `K = 256`, `F = 15`, `u = 0`. The guard width leaves room
    /// for the delay hypotheses a prefix-step sliding search must absorb.
    pub fn standard(n: usize, bits_per_symbol: usize, state_bits: usize) -> Result<Self> {
        if n <= 2 * 100 + 1 {
            return Err(Error::Config("layout preset needs N > 201".into()));
        }
        let guard = 100;
        Self::new(
            guard,
            n - 2 * guard - 1,
            4,
            8,
            256,
            15,
            0.0,
            bits_per_symbol,
            state_bits,
        )
    }
}

/// Places pilot, guards and data into one affine-domain symbol vector.
pub fn place_symbol(layout: &FrameLayout, pilot_amp: f64, data: &[Cf64]) -> Result<Vec<Cf64>> {
    if data.len() != layout.data_width {
        return Err(Error::Dimension {
            expected: layout.data_width,
            got: data.len(),
        });
    }
    let n = layout.n();
    let mut x = vec![Cf64::default(); n];
    x[0] = Cf64::new(pilot_amp, 0.0);
    x[layout.data_range()].copy_from_slice(data);
    Ok(x)
}

// ---------------------------------------------------------------------------
// State-word spreading
// ---------------------------------------------------------------------------

/// Direct-sequence spreading: bipolar Kronecker product of the state word
/// with the spreading sequence.
pub fn spread_state(w: &[u8], m_f: &[u8]) -> Vec<i8> {
    let mut out = Vec::with_capacity(w.len() * m_f.len());
    for &bit in w {
        let wb = 2 * bit as i8 - 1;
        for &chip in m_f {
            let mb = 2 * chip as i8 - 1;
            out.push(wb * mb);
        }
    }
    out
}

/// Despreading by correlation: one state bit per `F` received bipolar chips
/// (sign detection after averaging against the local code).
pub fn despread(received: &[f64], m_f: &[u8]) -> Result<Vec<u8>> {
    let f = m_f.len();
    if f == 0 || received.len() % f != 0 {
        return Err(Error::Dimension {
            expected: f.max(1),
            got: received.len(),
        });
    }
    let mut out = Vec::with_capacity(received.len() / f);
    for row in received.chunks(f) {
        let mut acc = 0.0;
        for (&r, &chip) in row.iter().zip(m_f.iter()) {
            let mb = 2.0 * chip as f64 - 1.0;
            acc += r * mb;
        }
        out.push(if acc > 0.0 { 1 } else { 0 });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Frame building
// ---------------------------------------------------------------------------

/// Everything the transmitter emits for one frame, plus the ground truth a
/// test harness needs (per-symbol chirp vectors, state word, payload).
#[derive(Debug, Clone)]
pub struct BuiltFrame {
    pub samples: Vec<Cf64>,
    pub tx_c2: Vec<ChirpVector>,
    pub state_word: Vec<u8>,
    pub payload: Vec<u8>,
}

/// Builds a `K`-symbol frame. The generator state word is snapshotted at
/// the exact chip position where block-3 chip consumption starts, so a
/// receiver restoring it reproduces the block-3 chirp stream without
/// replay; the generator advances past the consumed chips.
pub fn build_frame(
    payload: &[u8],
    gen: &mut LppnGenerator,
    layout: &FrameLayout,
    wcfg: &AfdmWaveformConfig,
    codebook: &ChirpCodebook,
    pilot_amp: f64,
    plan: &DaftPlan,
) -> Result<BuiltFrame> {
    let n = layout.n();
    if n != wcfg.n {
        return Err(Error::Config(format!(
            "layout implies N = {n} but waveform has N = {}",
            wcfg.n
        )));
    }
    let bps = wcfg.bits_per_symbol();
    if payload.len() != layout.payload_bits(bps) {
        return Err(Error::Dimension {
            expected: layout.payload_bits(bps),
            got: payload.len(),
        });
    }

    let state_word = gen.serialize_state()?;
    let mut stream = ChirpStream::new(gen.clone(), codebook.clone())?;

    // Block-2 bit vector: spread (or raw) state word, zero-padded.
    let mut block2_bits: Vec<u8> = if layout.spread_factor > 0 {
        spread_state(&state_word, &layout.spread_code)
            .into_iter()
            .map(|b| ((b + 1) / 2) as u8)
            .collect()
    } else {
        state_word.clone()
    };
    block2_bits.resize(layout.state_block_bits(bps), 0);

    let u = ChirpVector::constant(layout.constant_c2, n);
    let mut samples = Vec::with_capacity(layout.total_symbols * (wcfg.n_cp + n));
    let mut tx_c2 = Vec::with_capacity(layout.total_symbols);
    let seg = layout.data_width * bps;

    for sym in 0..layout.total_symbols {
        let (data_bits, c2): (&[u8], ChirpVector) = if sym < layout.header_symbols {
            (
                &layout.header_bits[sym * seg..(sym + 1) * seg],
                u.clone(),
            )
        } else if sym < layout.sync_symbols {
            let i = sym - layout.header_symbols;
            (&block2_bits[i * seg..(i + 1) * seg], u.clone())
        } else {
            let c2 = stream.next_c2_vector(n);
            let i = sym - layout.sync_symbols;
            (&payload[i * seg..(i + 1) * seg], c2)
        };
        let data = qam_map(data_bits, wcfg.qam_order)?;
        let x = place_symbol(layout, pilot_amp, &data)?;
        let s = crate::modem::idaft(plan, &x, wcfg.c1, &c2)?;
        samples.extend(add_cpp(&s, wcfg.c1, wcfg.n_cp));
        tx_c2.push(c2);
    }
    *gen = stream.generator().clone();
    Ok(BuiltFrame {
        samples,
        tx_c2,
        state_word,
        payload: payload.to_vec(),
    })
}

// ---------------------------------------------------------------------------
// Receiver plumbing
// ---------------------------------------------------------------------------

/// Channel knowledge available to a receiver.
#[derive(Debug, Clone)]
pub enum CsiMode {
    /// Genie-aided: the true realization as seen at the frame start.
    Perfect(ChannelRealization),
    /// Embedded-pilot estimation per symbol.
    Estimated(PilotEstimatorConfig),
}

/// The channel a frame-level receiver sees for symbol `sym` when the true
/// realization is known: per-path gains pick up the Doppler phase accrued
/// over the preceding symbols.
pub fn channel_at_symbol(
    ch: &ChannelRealization,
    sym: usize,
    sym_len: usize,
) -> ChannelRealization {
    let mut out = ch.clone();
    for p in out.paths.iter_mut() {
        let phase = TAU * p.doppler / ch.n as f64 * (sym * sym_len) as f64;
        p.gain *= Cf64::new(phase.cos(), phase.sin());
    }
    out
}

/// Per-symbol equalized output in the chirp-free DAFT domain.
fn equalize_symbol(
    body: &[Cf64],
    sym: usize,
    wcfg: &AfdmWaveformConfig,
    sigma2: f64,
    csi: &CsiMode,
    plan: &DaftPlan,
) -> Result<Vec<Cf64>> {
    let sym_len = wcfg.n_cp + wcfg.n;
    let ch = match csi {
        CsiMode::Perfect(ch) => channel_at_symbol(ch, sym, sym_len),
        CsiMode::Estimated(cfg) => {
            estimate_channel(plan, body, wcfg.c1, wcfg.n_cp, cfg)?.channel
        }
    };
    let eq = TimeDomainEqualizer::new(&ch, wcfg.c1, sigma2)?;
    eq.equalize(plan, body)
}

/// Pilot-based equalization with one decision-directed refinement: detect
/// the data under the first estimate, reconstruct its leakage into the
/// estimation window through the fitted paths, subtract and re-estimate.
/// The caller must know the symbol's transmit chirp (`c2_known`), which is
/// what lets the decisions land on the proper constellation grid.
pub fn equalize_symbol_refined(
    body: &[Cf64],
    layout: &FrameLayout,
    wcfg: &AfdmWaveformConfig,
    sigma2: f64,
    est_cfg: &crate::equalizer::PilotEstimatorConfig,
    c2_known: &ChirpVector,
    plan: &DaftPlan,
) -> Result<Vec<Cf64>> {
    use crate::equalizer::{estimate_channel_daft, estimation_window};
    let n = wcfg.n;
    let r_prime = crate::modem::daft_c2_free(plan, body, wcfg.c1)?;
    let first = estimate_channel_daft(&r_prime, wcfg.c1, wcfg.n_cp, est_cfg)?;
    let eq0 = TimeDomainEqualizer::new(&first.channel, wcfg.c1, sigma2)?;
    let mut xhat = eq0.equalize(plan, body)?;
    remove_transmit_chirp(&mut xhat, c2_known);
    let bits = qam_demap(&xhat[layout.data_range()], wcfg.qam_order)?;
    let decided = qam_map(&bits, wcfg.qam_order)?;

    // Leakage of the decided data through the fitted paths. The chirp-free
    // kernel is periodic in `p - q`, so each path's contribution is a
    // circular convolution of the (delay-phased) data vector with its
    // kernel profile.
    let window = estimation_window(est_cfg, wcfg.c1, n);
    let shift = 2.0 * n as f64 * wcfg.c1;
    let mut leak = vec![Cf64::default(); n];
    for path in &first.channel.paths {
        let l = path.delay_tap;
        let mut data_vec = vec![Cf64::default(); n];
        for (offset, &sym_hat) in decided.iter().enumerate() {
            let q = layout.guard_width + 1 + offset;
            let phase = TAU * c2_known.c2[q] * (q * q) as f64
                - TAU / n as f64 * (q * l) as f64;
            data_vec[q] = sym_hat * Cf64::new(phase.cos(), phase.sin());
        }
        let mut kernel = vec![Cf64::default(); n];
        for (d, k) in kernel.iter_mut().enumerate() {
            *k = crate::channel::dirichlet_kernel(d as f64 - path.doppler + shift * l as f64, n);
        }
        let conv = crate::modem::circular_convolve(plan, &data_vec, &kernel)?;
        let lead = TAU * wcfg.c1 * (l * l) as f64;
        let rot = path.gain * Cf64::new(lead.cos(), lead.sin()) / n as f64;
        for (acc, v) in leak.iter_mut().zip(conv.iter()) {
            *acc += rot * v;
        }
    }
    let mut cleaned = r_prime.clone();
    for &p in &window {
        cleaned[p] -= leak[p];
    }
    let second = estimate_channel_daft(&cleaned, wcfg.c1, wcfg.n_cp, est_cfg)
        .unwrap_or(first);
    let eq1 = TimeDomainEqualizer::new(&second.channel, wcfg.c1, sigma2)?;
    eq1.equalize(plan, body)
}

fn symbol_body<'a>(samples: &'a [Cf64], offset: usize, sym: usize, wcfg: &AfdmWaveformConfig) -> Option<&'a [Cf64]> {
    let sym_len = wcfg.n_cp + wcfg.n;
    let start = offset + sym * sym_len + wcfg.n_cp;
    let end = start + wcfg.n;
    samples.get(start..end)
}

// ---------------------------------------------------------------------------
// Stage 1: frame detection
// ---------------------------------------------------------------------------

/// Detection tuning.
#[derive(Debug, Clone)]
pub struct DetectConfig {
    /// Coarse threshold as a fraction of the maximum bipolar correlation.
    pub threshold_frac: f64,
    /// Earliest-path threshold as a fraction of the strongest matched-filter
    /// tap score.
    pub fine_rel_threshold: f64,
    /// Doppler hypothesis range for the fine search (normalized units).
    pub alpha_max: f64,
    /// Last window start the coarse scan examines (`None`: scan the whole
    /// capture). Bounds acquisition cost when the frame position is known
    /// to lie inside a region.
    pub scan_limit: Option<usize>,
    /// Estimator used by the coarse window demodulation.
    pub estimator: PilotEstimatorConfig,
}

/// Bipolar correlation of hard bits against a reference bit pattern.
fn bipolar_correlation(bits: &[u8], reference: &[u8]) -> i64 {
    bits.iter()
        .zip(reference.iter())
        .map(|(&a, &b)| if a == b { 1i64 } else { -1i64 })
        .sum()
}

/// Reconstructs the transmitted header symbols (prefix included) for the
/// matched-filter alignment stage.
fn reference_header(
    layout: &FrameLayout,
    wcfg: &AfdmWaveformConfig,
    pilot_amp: f64,
    plan: &DaftPlan,
) -> Result<Vec<Vec<Cf64>>> {
    let bps = wcfg.bits_per_symbol();
    let seg = layout.data_width * bps;
    let u = ChirpVector::constant(layout.constant_c2, layout.n());
    let mut refs = Vec::with_capacity(layout.header_symbols);
    for sym in 0..layout.header_symbols {
        let data = qam_map(&layout.header_bits[sym * seg..(sym + 1) * seg], wcfg.qam_order)?;
        let x = place_symbol(layout, pilot_amp, &data)?;
        let s = crate::modem::idaft(plan, &x, wcfg.c1, &u)?;
        refs.push(add_cpp(&s, wcfg.c1, wcfg.n_cp));
    }
    Ok(refs)
}

/// Demodulates header symbol `sym` at a window offset and correlates the
/// hard bits against its segment of the pre-shared header.
fn symbol_correlation(
    samples: &[Cf64],
    offset: usize,
    sym: usize,
    layout: &FrameLayout,
    wcfg: &AfdmWaveformConfig,
    sigma2: f64,
    det: &DetectConfig,
    plan: &DaftPlan,
) -> i64 {
    let n = wcfg.n;
    let u = ChirpVector::constant(layout.constant_c2, n);
    let Some(body) = symbol_body(samples, offset, sym, wcfg) else {
        return i64::MIN;
    };
    let mut screen_cfg = det.estimator.clone();
    screen_cfg.refine = false;
    let est = CsiMode::Estimated(screen_cfg);
    let Ok(mut xhat) = equalize_symbol(body, sym, wcfg, sigma2, &est, plan) else {
        return i64::MIN;
    };
    remove_transmit_chirp(&mut xhat, &u);
    let seg = layout.data_width * wcfg.bits_per_symbol();
    let data = &xhat[layout.data_range()];
    match qam_demap(data, wcfg.qam_order) {
        Ok(b) => bipolar_correlation(&b, &layout.header_bits[sym * seg..(sym + 1) * seg]),
        Err(_) => i64::MIN,
    }
}

/// Full-window correlation over all `J` header symbols. The first symbol
/// acts as a cheap screen: a window whose opening segment correlates below
/// threshold cannot reach the full-window threshold that matters.
fn window_correlation(
    samples: &[Cf64],
    offset: usize,
    layout: &FrameLayout,
    wcfg: &AfdmWaveformConfig,
    sigma2: f64,
    det: &DetectConfig,
    plan: &DaftPlan,
) -> i64 {
    let seg_bits = (layout.data_width * wcfg.bits_per_symbol()) as f64;
    let first = symbol_correlation(samples, offset, 0, layout, wcfg, sigma2, det, plan);
    if (first as f64) < det.threshold_frac * seg_bits {
        return first;
    }
    let mut total = first;
    for sym in 1..layout.header_symbols {
        let c = symbol_correlation(samples, offset, sym, layout, wcfg, sigma2, det, plan);
        if c == i64::MIN {
            return i64::MIN;
        }
        total += c;
    }
    total
}

/// Sliding-window frame detection.
///
/// The coarse pass advances in prefix-length steps and demodulates the
/// header under per-window channel estimation, so residual misalignment is
/// absorbed as extra delay. The fine pass runs a delay-Doppler matched
/// filter over the known header waveform and aligns to the earliest tap
/// whose score clears a fraction of the strongest one.
pub fn detect_frame(
    samples: &[Cf64],
    layout: &FrameLayout,
    wcfg: &AfdmWaveformConfig,
    pilot_amp: f64,
    sigma2: f64,
    det: &DetectConfig,
    plan: &DaftPlan,
) -> Result<usize> {
    let sym_len = wcfg.n_cp + wcfg.n;
    let window = layout.header_symbols * sym_len;
    if samples.len() < window {
        return Err(Error::FrameNotFound);
    }
    let max_bits = layout.header_bits.len() as f64;
    let mut coarse = None;
    let mut t = 0usize;
    let t_end = det.scan_limit.unwrap_or(usize::MAX);
    while t + window <= samples.len() && t <= t_end {
        let corr = window_correlation(samples, t, layout, wcfg, sigma2, det, plan);
        if corr as f64 >= det.threshold_frac * max_bits {
            coarse = Some(t);
            break;
        }
        t += wcfg.n_cp.max(1);
    }
    let coarse = coarse.ok_or(Error::FrameNotFound)?;

    // Fine alignment: successive-cancellation delay-Doppler matched filter
    // against the known header waveform. Each round locates the strongest
    // remaining tap, estimates per-symbol complex gains and subtracts its
    // contribution, so autocorrelation sidelobes of strong paths cannot
    // shadow a weak earliest path.
    let refs = reference_header(layout, wcfg, pilot_amp, plan)?;
    let max_delay = det.estimator.max_tap_search + 2;
    let nu_steps = (det.alpha_max / 0.25).round() as i64;
    let span = (layout.header_symbols - 1) * sym_len + sym_len + max_delay;
    let mut residual: Vec<Cf64> = samples[coarse..(coarse + span).min(samples.len())].to_vec();
    let e_ref: f64 = refs[0].iter().map(|v| v.norm_sqr()).sum();
    let noise_amp = (layout.header_symbols as f64 * sigma2 * e_ref).sqrt();

    let mf = |residual: &[Cf64], delta: usize, nu: f64| -> (f64, Vec<Cf64>) {
        let mut amp_sq = 0.0f64;
        let mut gains = Vec::with_capacity(refs.len());
        for (i, r) in refs.iter().enumerate() {
            let base = delta + i * sym_len;
            let mut c = Cf64::default();
            if base + sym_len <= residual.len() {
                for (nn, &ref_v) in r.iter().enumerate() {
                    let n_idx = nn as f64 - wcfg.n_cp as f64 + (i * sym_len) as f64;
                    let phase = -TAU * nu / wcfg.n as f64 * n_idx;
                    c += residual[base + nn] * ref_v.conj()
                        * Cf64::new(phase.cos(), phase.sin());
                }
            }
            amp_sq += c.norm_sqr();
            gains.push(c / e_ref);
        }
        (amp_sq.sqrt(), gains)
    };

    let mut taps: Vec<(usize, f64)> = Vec::new();
    for _round in 0..8 {
        let mut best: Option<(usize, f64, f64)> = None;
        for delta in 0..=max_delay {
            for nu_i in -nu_steps..=nu_steps {
                let nu = nu_i as f64 * 0.25;
                let (amp, _) = mf(&residual, delta, nu);
                if best.map_or(true, |(_, _, a)| amp > a) {
                    best = Some((delta, nu, amp));
                }
            }
        }
        let Some((delta, nu, amp)) = best else { break };
        let strongest = taps.iter().map(|&(_, a)| a).fold(0.0f64, f64::max);
        if amp <= 4.0 * noise_amp || amp < 0.5 * det.fine_rel_threshold * strongest {
            break;
        }
        let (_, gains) = mf(&residual, delta, nu);
        for (i, r) in refs.iter().enumerate() {
            let base = delta + i * sym_len;
            if base + sym_len > residual.len() {
                continue;
            }
            for (nn, &ref_v) in r.iter().enumerate() {
                let n_idx = nn as f64 - wcfg.n_cp as f64 + (i * sym_len) as f64;
                let phase = TAU * nu / wcfg.n as f64 * n_idx;
                residual[base + nn] -=
                    gains[i] * ref_v * Cf64::new(phase.cos(), phase.sin());
            }
        }
        taps.push((delta, amp));
    }
    if taps.is_empty() {
        // Alignment defaults to the coarse hit when the matched filter sees
        // nothing above the noise floor.
        return Ok(coarse);
    }
    let peak = taps.iter().map(|&(_, a)| a).fold(0.0f64, f64::max);
    let earliest = taps
        .iter()
        .filter(|&&(_, a)| a >= det.fine_rel_threshold * peak)
        .map(|&(d, _)| d)
        .min()
        .unwrap_or(0);
    Ok(coarse + earliest)
}

// ---------------------------------------------------------------------------
// Stage 2 + 3: the legitimate receiver
// ---------------------------------------------------------------------------

/// Receiver progress through the synchronization protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyncStage {
    Searching,
    LppnSync,
    Secured,
}

/// What happened during one frame reception.
#[derive(Debug, Clone)]
pub struct SyncTrace {
    pub stage: SyncStage,
    pub frame_offset: Option<usize>,
    /// State word as despread, before any repair.
    pub state_word: Option<Vec<u8>>,
    /// State word actually restored (may differ by one repaired bit).
    pub restored_word: Option<Vec<u8>>,
    pub restore_ok: bool,
}

/// Full three-stage reception. On a failed state restore the receiver
/// falls back to a freshly initialized generator (deliberately
/// desynchronized) so the caller can observe the resulting error floor.
pub fn bob_receive_frame(
    samples: &[Cf64],
    layout: &FrameLayout,
    wcfg: &AfdmWaveformConfig,
    codebook: &ChirpCodebook,
    lppn_cfg: &LppnConfig,
    pilot_amp: f64,
    sigma2: f64,
    csi: &CsiMode,
    det: &DetectConfig,
    plan: &DaftPlan,
) -> Result<(Vec<u8>, SyncTrace)> {
    let mut trace = SyncTrace {
        stage: SyncStage::Searching,
        frame_offset: None,
        state_word: None,
        restored_word: None,
        restore_ok: false,
    };
    let offset = detect_frame(samples, layout, wcfg, pilot_amp, sigma2, det, plan)?;
    trace.frame_offset = Some(offset);
    trace.stage = SyncStage::LppnSync;

    // Stage 2: demodulate block 2, despread, restore.
    let bps = wcfg.bits_per_symbol();
    let u = ChirpVector::constant(layout.constant_c2, wcfg.n);
    let mut block2_bits = Vec::with_capacity(layout.state_block_bits(bps));
    for sym in layout.header_symbols..layout.sync_symbols {
        let body = symbol_body(samples, offset, sym, wcfg).ok_or(Error::FrameNotFound)?;
        let mut xhat = match csi {
            CsiMode::Estimated(est_cfg) => {
                equalize_symbol_refined(body, layout, wcfg, sigma2, est_cfg, &u, plan)?
            }
            CsiMode::Perfect(_) => equalize_symbol(body, sym, wcfg, sigma2, csi, plan)?,
        };
        remove_transmit_chirp(&mut xhat, &u);
        block2_bits.extend(qam_demap(&xhat[layout.data_range()], wcfg.qam_order)?);
    }
    let state_bits = lppn_cfg.state_bits();
    let w_received: Vec<u8> = if layout.spread_factor > 0 {
        let chips: Vec<f64> = block2_bits[..state_bits * layout.spread_factor]
            .iter()
            .map(|&b| 2.0 * b as f64 - 1.0)
            .collect();
        despread(&chips, &layout.spread_code)?
    } else {
        block2_bits[..state_bits].to_vec()
    };
    trace.state_word = Some(w_received.clone());

    let generator = match restore_with_repair(lppn_cfg, &w_received) {
        Some((g, word)) => {
            trace.restore_ok = true;
            trace.stage = SyncStage::Secured;
            trace.restored_word = Some(word);
            g
        }
        None => LppnGenerator::new(lppn_cfg.clone())?,
    };

    // Stage 3: payload under the regenerated chirp stream.
    let mut stream = ChirpStream::new(generator, codebook.clone())?;
    let mut payload = Vec::with_capacity(layout.payload_bits(bps));
    for sym in layout.sync_symbols..layout.total_symbols {
        let body = symbol_body(samples, offset, sym, wcfg).ok_or(Error::FrameNotFound)?;
        let c2 = stream.next_c2_vector(wcfg.n);
        let mut xhat = match csi {
            CsiMode::Estimated(est_cfg) => {
                equalize_symbol_refined(body, layout, wcfg, sigma2, est_cfg, &c2, plan)?
            }
            CsiMode::Perfect(_) => equalize_symbol(body, sym, wcfg, sigma2, csi, plan)?,
        };
        remove_transmit_chirp(&mut xhat, &c2);
        payload.extend(qam_demap(&xhat[layout.data_range()], wcfg.qam_order)?);
    }
    Ok((payload, trace))
}

/// Restores a generator from a received state word, attempting single-bit
/// repair when the word decodes to an unreachable state. The restore-time
/// cross-checks (counter thresholds, register-cycle membership, epoch
/// consistency) reject almost every corrupted word, so flipping each bit in
/// turn and accepting a unique surviving candidate recovers the common
/// one-bit-error case without weakening the validity test.
fn restore_with_repair(
    cfg: &LppnConfig,
    word: &[u8],
) -> Option<(LppnGenerator, Vec<u8>)> {
    if let Ok(g) = LppnGenerator::restore_state(cfg.clone(), word) {
        return Some((g, word.to_vec()));
    }
    let mut candidate: Option<(LppnGenerator, Vec<u8>)> = None;
    let mut trial = word.to_vec();
    for i in 0..trial.len() {
        trial[i] ^= 1;
        if let Ok(g) = LppnGenerator::restore_state(cfg.clone(), &trial) {
            if candidate.is_some() {
                return None; // ambiguous repair
            }
            candidate = Some((g, trial.clone()));
        }
        trial[i] ^= 1;
    }
    candidate
}

// ---------------------------------------------------------------------------
// Eavesdroppers
// ---------------------------------------------------------------------------

/// Eavesdropper demodulation strategy.
#[derive(Debug, Clone)]
pub enum EveStrategy {
    /// Demodulate with `c2 = 0` (no chirp compensation at all).
    ZeroChirp,
    /// Quantize the true per-subcarrier `c2` (oracle-provided) onto a coarse
    /// grid of the given interval; models the best outcome of a
    /// reduced-resolution search.
    IntervalSearch { delta_e: f64 },
}

/// Eavesdropper reception of block 3 with known frame timing. `tx_c2` is
/// consulted only by the interval-search oracle.
pub fn eve_receive_frame(
    samples: &[Cf64],
    offset: usize,
    layout: &FrameLayout,
    wcfg: &AfdmWaveformConfig,
    codebook: &ChirpCodebook,
    pilot_amp: f64,
    sigma2: f64,
    csi: &CsiMode,
    strategy: &EveStrategy,
    tx_c2: &[ChirpVector],
    plan: &DaftPlan,
) -> Result<Vec<u8>> {
    let _ = pilot_amp;
    let bps = wcfg.bits_per_symbol();
    let mut payload = Vec::with_capacity(layout.payload_bits(bps));
    for sym in layout.sync_symbols..layout.total_symbols {
        let body = symbol_body(samples, offset, sym, wcfg).ok_or(Error::FrameNotFound)?;
        let mut xhat = equalize_symbol(body, sym, wcfg, sigma2, csi, plan)?;
        match strategy {
            EveStrategy::ZeroChirp => {}
            EveStrategy::IntervalSearch { delta_e } => {
                let truth = &tx_c2[sym];
                let guess = quantize_chirp(truth, codebook, *delta_e);
                remove_transmit_chirp(&mut xhat, &guess);
            }
        }
        payload.extend(qam_demap(&xhat[layout.data_range()], wcfg.qam_order)?);
    }
    Ok(payload)
}

/// Nearest point of the coarse search grid `-c2max + k delta_e` for every
/// subcarrier of the true chirp vector.
pub fn quantize_chirp(truth: &ChirpVector, codebook: &ChirpCodebook, delta_e: f64) -> ChirpVector {
    let lo = -codebook.c2_max();
    let k_max = (2.0 * codebook.c2_max() / delta_e).floor() as i64;
    let c2 = truth
        .c2
        .iter()
        .map(|&v| {
            let k = ((v - lo) / delta_e).round() as i64;
            lo + k.clamp(0, k_max) as f64 * delta_e
        })
        .collect();
    ChirpVector {
        symbol_index: truth.symbol_index,
        c2,
    }
}
