//! Seeded Monte-Carlo BER sweeps.
//!
//! One "frame" is a single AFDM symbol (matching the one-symbol simulation
//! frames of the reference setup): with perfect CSI every subcarrier
//! carries data; with estimated CSI the symbol carries the embedded pilot
//! with guard bands and data on the remaining subcarriers. Three receivers
//! run on shared channel/noise draws per frame:
//!
//! - the synchronized receiver (chirp vector regenerated in lockstep),
//! - a plain-AFDM baseline: the same pipeline with the single-entry
//!   codebook, i.e. a constant pre-chirp at both ends,
//! - the eavesdropper on an independent channel draw, either ignoring the
//!   transmit chirp or quantizing an oracle-provided chirp vector onto a
//!   coarse search grid.
//!
//! Per sweep point the loop stops once the synchronized receiver has
//! accumulated `target_errors` bit errors, bounded by `min/max` frames.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use seafdm_core::channel::{add_awgn, apply_channel, sample_jakes_channel, ChannelRealization};
use seafdm_core::codebook::{ChirpCodebook, ChirpStream, ChirpVector};
use seafdm_core::equalizer::{
    estimate_channel, remove_transmit_chirp, PilotEstimatorConfig, TimeDomainEqualizer,
};
use seafdm_core::frame::{equalize_symbol_refined, place_symbol, quantize_chirp, FrameLayout};
use seafdm_core::lppn::{LppnConfig, LppnGenerator};
use seafdm_core::modem::{add_cpp, idaft, qam_demap, qam_map, remove_cpp, AfdmWaveformConfig, DaftPlan};
use seafdm_core::{Cf64, Error, Result};

use crate::config::{CsiKind, EveKind, ExperimentConfig};
use crate::{frame_rng, par_map};

/// One sweep-point result row.
#[derive(Debug, Clone, Copy)]
pub struct BerPoint {
    pub snr_db: f64,
    pub delta_e: f64,
    pub ber_bob: f64,
    pub ber_eve: f64,
    pub ber_baseline: f64,
    pub frames: usize,
    pub sync_failures: usize,
}

/// Fixed per-sweep state shared by all frames.
pub struct BerEngine {
    cfg: ExperimentConfig,
    wcfg: AfdmWaveformConfig,
    plan: DaftPlan,
    codebook: ChirpCodebook,
    baseline: ChirpCodebook,
    layout: Option<FrameLayout>,
    /// Generator snapshots, one per frame, advanced `N` chips apart.
    snapshots: Vec<LppnGenerator>,
}

/// Bit-error tallies for one frame.
#[derive(Debug, Clone, Copy, Default)]
struct FrameTally {
    bob_errors: u64,
    eve_errors: u64,
    base_errors: u64,
    bits: u64,
    failed: bool,
}

impl BerEngine {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let wcfg = AfdmWaveformConfig::new(
            cfg.n,
            cfg.n_cp,
            cfg.c1,
            cfg.qam_order,
            cfg.alpha_max.ceil() as u32,
        )?;
        let codebook = ChirpCodebook::new(cfg.c2_max, cfg.codebook_m)?;
        codebook.index_bits()?;
        let baseline = ChirpCodebook::new(cfg.c2_max, 1)?;
        let layout = match cfg.csi {
            CsiKind::Perfect => None,
            // Single-symbol sweep frames carry no state block; the layout
            // only places the pilot and guards.
            CsiKind::Estimated => Some(FrameLayout::new(
                cfg.guard_width,
                cfg.n - 2 * cfg.guard_width - 1,
                1,
                2,
                3,
                0,
                0.0,
                wcfg.bits_per_symbol(),
                0,
            )?),
        };
        // Advance one stream once, snapshotting at frame boundaries, so the
        // chirp sequence varies across frames but stays identical across
        // sweep points and parallel schedules.
        let mut gen = LppnGenerator::new(LppnConfig::p_code_12())?;
        let mut snapshots = Vec::with_capacity(cfg.max_frames);
        for _ in 0..cfg.max_frames {
            snapshots.push(gen.clone());
            gen.skip(cfg.n as u64);
        }
        Ok(Self {
            cfg: cfg.clone(),
            wcfg,
            plan: DaftPlan::new(cfg.n),
            codebook,
            baseline,
            layout,
            snapshots,
        })
    }

    pub fn waveform(&self) -> &AfdmWaveformConfig {
        &self.wcfg
    }

    fn data_bits_per_frame(&self) -> usize {
        let data_width = match &self.layout {
            Some(layout) => layout.data_width,
            None => self.cfg.n,
        };
        data_width * self.wcfg.bits_per_symbol()
    }

    /// Builds the affine-domain symbol for one frame.
    fn build_symbol(&self, bits: &[u8], pilot_amp: f64) -> Result<Vec<Cf64>> {
        let data = qam_map(bits, self.wcfg.qam_order)?;
        match &self.layout {
            Some(layout) => place_symbol(layout, pilot_amp, &data),
            None => Ok(data),
        }
    }

    fn data_of<'a>(&self, x: &'a [Cf64]) -> &'a [Cf64] {
        match &self.layout {
            Some(layout) => &x[layout.data_range()],
            None => x,
        }
    }

    /// Transmit chain
    fn transmit(&self, x: &[Cf64], c2: &ChirpVector) -> Result<Vec<Cf64>> {
        let s = idaft(&self.plan, x, self.wcfg.c1, c2)?;
        Ok(add_cpp(&s, self.wcfg.c1, self.wcfg.n_cp))
    }

    /// Receive chain up to the chirp-free DAFT-domain MMSE output.
    fn receive(
        &self,
        tx: &[Cf64],
        ch: &ChannelRealization,
        noise: &[Cf64],
        sigma: f64,
        sigma2: f64,
        pilot_amp: f64,
        shared_eq: Option<&TimeDomainEqualizer>,
        c2_known: Option<&ChirpVector>,
    ) -> Result<Vec<Cf64>> {
        let mut r = apply_channel(tx, ch)?;
        for (v, w) in r.iter_mut().zip(noise.iter()) {
            *v += sigma * w;
        }
        let body = remove_cpp(&r, self.wcfg.n, self.wcfg.n_cp)?;
        match (shared_eq, self.cfg.csi) {
            (Some(eq), CsiKind::Perfect) => eq.equalize(&self.plan, &body),
            (None, CsiKind::Perfect) => {
                let eq = TimeDomainEqualizer::new(ch, self.wcfg.c1, sigma2)?;
                eq.equalize(&self.plan, &body)
            }
            (_, CsiKind::Estimated) => {
                let est_cfg = self.estimator_cfg(pilot_amp, sigma2);
                match c2_known {
                    Some(c2) => equalize_symbol_refined(
                        &body,
                        self.layout.as_ref().expect("estimated mode has a layout"),
                        &self.wcfg,
                        sigma2,
                        &est_cfg,
                        c2,
                        &self.plan,
                    ),
                    None => {
                        let est = estimate_channel(
                            &self.plan,
                            &body,
                            self.wcfg.c1,
                            self.wcfg.n_cp,
                            &est_cfg,
                        )?;
                        let eq =
                            TimeDomainEqualizer::new(&est.channel, self.wcfg.c1, sigma2)?;
                        eq.equalize(&self.plan, &body)
                    }
                }
            }
        }
    }

    fn estimator_cfg(&self, pilot_amp: f64, sigma2: f64) -> PilotEstimatorConfig {
        let noise_rel = if pilot_amp > 0.0 {
            2.5 * sigma2.sqrt() / pilot_amp
        } else {
            0.0
        };
        PilotEstimatorConfig {
            guard_width: self.cfg.guard_width,
            pilot_amp,
            alpha_search: self.cfg.alpha_max.ceil() as i64,
            max_tap_search: self.cfg.n_cp,
            threshold: noise_rel.max(0.02),
            noise_var: sigma2,
            refine: true,
        }
    }

    /// Runs one frame at one sweep point.
    fn run_frame(&self, frame: usize, snr_db: f64, delta_e: f64) -> FrameTally {
        match self.try_frame(frame, snr_db, delta_e) {
            Ok(t) => t,
            Err(_) => FrameTally {
                failed: true,
                ..FrameTally::default()
            },
        }
    }

    fn try_frame(&self, frame: usize, snr_db: f64, delta_e: f64) -> Result<FrameTally> {
        let cfg = &self.cfg;
        let mut rng = frame_rng(cfg.seed, frame as u64);
        let sigma2 = if snr_db.is_finite() {
            10f64.powf(-snr_db / 10.0)
        } else {
            0.0
        };
        let sigma = sigma2.sqrt();
        let pilot_amp = (10f64.powf(cfg.snr_p_db / 10.0) * sigma2).sqrt();

        // Draws in a fixed order so sweep points stay coupled.
        let bob_ch = sample_jakes_channel(
            cfg.alpha_max,
            &cfg.delay_taps,
            self.wcfg.n,
            self.wcfg.n_cp,
            &mut rng,
        )?;
        let eve_ch = sample_jakes_channel(
            cfg.alpha_max,
            &cfg.delay_taps,
            self.wcfg.n,
            self.wcfg.n_cp,
            &mut rng,
        )?;
        let bits_len = self.data_bits_per_frame();
        let payload: Vec<u8> = (0..bits_len).map(|_| rng.gen_range(0..2u8)).collect();
        let total = self.wcfg.n + self.wcfg.n_cp;
        let noise_bob = unit_noise(&mut rng, total);
        let noise_eve = unit_noise(&mut rng, total);

        let mut stream = ChirpStream::new(self.snapshots[frame].clone(), self.codebook.clone())?;
        let c2_tx = stream.next_c2_vector(self.wcfg.n);
        let c2_base = ChirpVector::constant(self.baseline.value(0), self.wcfg.n);

        let x = self.build_symbol(&payload, pilot_amp)?;
        let tx_se = self.transmit(&x, &c2_tx)?;
        let tx_base = self.transmit(&x, &c2_base)?;

        // One factorization serves the synchronized receiver and the
        // baseline when the channel is known.
        let shared_eq = match cfg.csi {
            CsiKind::Perfect => Some(TimeDomainEqualizer::new(&bob_ch, self.wcfg.c1, sigma2)?),
            CsiKind::Estimated => None,
        };

        let mut tally = FrameTally {
            bits: bits_len as u64,
            ..FrameTally::default()
        };

        // Synchronized receiver.
        let mut xb = self.receive(
            &tx_se,
            &bob_ch,
            &noise_bob,
            sigma,
            sigma2,
            pilot_amp,
            shared_eq.as_ref(),
            Some(&c2_tx),
        )?;
        remove_transmit_chirp(&mut xb, &c2_tx);
        tally.bob_errors = count_errors(
            &qam_demap(self.data_of(&xb), self.wcfg.qam_order)?,
            &payload,
        );

        // Constant-chirp baseline on the same channel and noise.
        let mut xbase = self.receive(
            &tx_base,
            &bob_ch,
            &noise_bob,
            sigma,
            sigma2,
            pilot_amp,
            shared_eq.as_ref(),
            Some(&c2_base),
        )?;
        remove_transmit_chirp(&mut xbase, &c2_base);
        tally.base_errors = count_errors(
            &qam_demap(self.data_of(&xbase), self.wcfg.qam_order)?,
            &payload,
        );

        // Eavesdropper on her own channel and noise.
        let mut xe =
            self.receive(&tx_se, &eve_ch, &noise_eve, sigma, sigma2, pilot_amp, None, None)?;
        match cfg.eve {
            EveKind::ZeroChirp => {}
            EveKind::IntervalSearch { delta_e: fixed } => {
                let step = if delta_e > 0.0 { delta_e } else { fixed };
                let guess = quantize_chirp(&c2_tx, &self.codebook, step);
                remove_transmit_chirp(&mut xe, &guess);
            }
        }
        tally.eve_errors = count_errors(
            &qam_demap(self.data_of(&xe), self.wcfg.qam_order)?,
            &payload,
        );
        Ok(tally)
    }

    /// One frame's (synchronized-receiver errors, bits) at a sweep point;
    /// the benchmark-facing unit of work.
    pub fn frame_errors(&self, frame: usize, snr_db: f64, delta_e: f64) -> (u64, u64) {
        let t = self.run_frame(frame, snr_db, delta_e);
        (t.bob_errors, t.bits)
    }

    /// Runs one sweep point with the stop-on-errors rule.
    pub fn run_point(&self, snr_db: f64, delta_e: f64) -> BerPoint {
        let cfg = &self.cfg;
        let mut frames = 0usize;
        let mut agg = FrameTally::default();
        let batch = 32usize;
        while frames < cfg.max_frames {
            let want = if frames < cfg.min_frames {
                (cfg.min_frames - frames).max(batch)
            } else {
                batch
            }
            .min(cfg.max_frames - frames);
            let tallies = par_map(want, |i| self.run_frame(frames + i, snr_db, delta_e));
            for t in tallies {
                agg.bob_errors += t.bob_errors;
                agg.eve_errors += t.eve_errors;
                agg.base_errors += t.base_errors;
                agg.bits += t.bits;
                frames += 1;
                if t.failed {
                    agg.failed = true;
                }
            }
            if frames >= cfg.min_frames && agg.bob_errors >= cfg.target_errors as u64 {
                break;
            }
        }
        let bits = agg.bits.max(1) as f64;
        BerPoint {
            snr_db,
            delta_e,
            ber_bob: agg.bob_errors as f64 / bits,
            ber_eve: agg.eve_errors as f64 / bits,
            ber_baseline: agg.base_errors as f64 / bits,
            frames,
            sync_failures: agg.failed as usize,
        }
    }
}

fn unit_noise(rng: &mut ChaCha8Rng, len: usize) -> Vec<Cf64> {
    let mut buf = vec![Cf64::default(); len];
    add_awgn(&mut buf, 1.0, rng);
    buf
}

fn count_errors(got: &[u8], want: &[u8]) -> u64 {
    got.iter().zip(want.iter()).filter(|(a, b)| a != b).count() as u64
}

/// Full BER-versus-SNR sweep.
pub fn run_ber_sweep(cfg: &ExperimentConfig) -> Result<Vec<BerPoint>> {
    let engine = BerEngine::new(cfg)?;
    Ok(cfg
        .snr_db
        .iter()
        .map(|&snr| engine.run_point(snr, 0.0))
        .collect())
}

/// Eavesdropper BER versus search interval at fixed SNR.
pub fn run_search_sweep(cfg: &ExperimentConfig) -> Result<Vec<BerPoint>> {
    let mut cfg = cfg.clone();
    if !matches!(cfg.eve, EveKind::IntervalSearch { .. }) {
        cfg.eve = EveKind::IntervalSearch { delta_e: 0.0 };
    }
    let engine = BerEngine::new(&cfg)?;
    Ok(cfg
        .delta_e_list
        .iter()
        .map(|&d| engine.run_point(cfg.search_snr_db, d))
        .collect())
}

/// One synchronized-versus-baseline equivalence trial: noiseless, known
/// channel, exact zero-forcing. Returns the relative elementwise gap between
/// the two receivers' symbol estimates and whether the decoded bits tie.
pub fn equivalence_trial(cfg: &ExperimentConfig, frame: usize) -> Result<(f64, bool)> {
    let engine = BerEngine::new(cfg)?;
    equivalence_trial_with(&engine, cfg, frame)
}

/// [`equivalence_trial`] against a prebuilt engine, for batched runs.
pub fn equivalence_trial_with(
    engine: &BerEngine,
    cfg: &ExperimentConfig,
    frame: usize,
) -> Result<(f64, bool)> {
    let mut rng = frame_rng(cfg.seed, frame as u64);
    let ch = sample_jakes_channel(
        cfg.alpha_max,
        &cfg.delay_taps,
        engine.wcfg.n,
        engine.wcfg.n_cp,
        &mut rng,
    )?;
    let payload: Vec<u8> = (0..engine.data_bits_per_frame())
        .map(|_| rng.gen_range(0..2u8))
        .collect();
    if frame >= engine.snapshots.len() {
        return Err(Error::Dimension {
            expected: engine.snapshots.len(),
            got: frame,
        });
    }
    let mut stream = ChirpStream::new(engine.snapshots[frame].clone(), engine.codebook.clone())?;
    let c2_tx = stream.next_c2_vector(engine.wcfg.n);
    let c2_base = ChirpVector::constant(engine.baseline.value(0), engine.wcfg.n);
    let x = engine.build_symbol(&payload, 0.0)?;

    let eq = TimeDomainEqualizer::new(&ch, engine.wcfg.c1, 0.0)?;
    let run = |c2: &ChirpVector| -> Result<Vec<Cf64>> {
        let tx = engine.transmit(&x, c2)?;
        let r = apply_channel(&tx, &ch)?;
        let body = remove_cpp(&r, engine.wcfg.n, engine.wcfg.n_cp)?;
        let mut xhat = eq.equalize(&engine.plan, &body)?;
        remove_transmit_chirp(&mut xhat, c2);
        Ok(xhat)
    };
    let xb = run(&c2_tx)?;
    let xbase = run(&c2_base)?;
    let num: f64 = xb
        .iter()
        .zip(xbase.iter())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    let den: f64 = xbase.iter().map(|v| v.norm_sqr()).sum();
    if den == 0.0 {
        return Err(Error::NumericalRank);
    }
    let bits_b = qam_demap(engine.data_of(&xb), engine.wcfg.qam_order)?;
    let bits_base = qam_demap(engine.data_of(&xbase), engine.wcfg.qam_order)?;
    Ok(((num / den).sqrt(), bits_b == bits_base))
}
