//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line with the measured value against the pinned tolerance.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use seafdm_core::channel::{apply_channel, effective_matrix, sample_jakes_channel};
use seafdm_core::codebook::{ChirpCodebook, ChirpVector};
use seafdm_core::lppn::{LppnConfig, LppnGenerator};
use seafdm_core::modem::{add_cpp, daft, idaft, remove_cpp, AfdmWaveformConfig, DaftPlan};
use seafdm_core::sinr::{
    db_to_linear, linear_to_db, monte_carlo_sinr, sinr_eve_average, sinr_eve_symbol, SinrScenario,
};
use seafdm_core::Cf64;

use seafdm_harness::ber::{equivalence_trial_with, run_ber_sweep, run_search_sweep, BerEngine};
use seafdm_harness::config::{CsiKind, EveKind, ExperimentConfig};
use seafdm_harness::par_map;
use seafdm_harness::syncdemo::run_sync_demo;

fn verdict(name: &str, pass: bool, detail: &str) -> bool {
    println!(
        "criterion {name}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

/// Criterion 1: the closed-form average eavesdropper SINR pins the raw-SNR
/// plateau at small c2_max and the saturated floor at c2_max = 1e-2.
#[test]
fn c1_sinr_plateau() {
    let gamma = db_to_linear(25.0);
    let scenario = SinrScenario::new(gamma, gamma, 1024).unwrap();
    let small = linear_to_db(sinr_eve_average(
        &scenario,
        &ChirpCodebook::new(1e-9, 100_000).unwrap(),
    ));
    let large = linear_to_db(sinr_eve_average(
        &scenario,
        &ChirpCodebook::new(1e-2, 100_000).unwrap(),
    ));
    let ok_small = verdict(
        "1a (SINR at c2max=1e-9)",
        (small - 25.0).abs() <= 0.01,
        &format!("measured {small:.4} dB, required 25.0 +/- 0.01"),
    );
    let ok_large = verdict(
        "1b (SINR at c2max=1e-2)",
        (large + 0.93).abs() <= 0.05,
        &format!("measured {large:.4} dB, required -0.93 +/- 0.05"),
    );
    assert!(ok_small && ok_large);
}

/// The saturation value itself: the paper's floor is reached once c2_max is
/// large enough that even the first off-pilot symbol decorrelates.
#[test]
fn c1_supplement_saturated_floor() {
    let gamma = db_to_linear(25.0);
    let scenario = SinrScenario::new(gamma, gamma, 1024).unwrap();
    let v = linear_to_db(sinr_eve_average(
        &scenario,
        &ChirpCodebook::new(0.5, 100_000).unwrap(),
    ));
    assert!(
        verdict(
            "1s (saturated floor)",
            (v + 0.93).abs() <= 0.05,
            &format!("measured {v:.4} dB at c2max=0.5, floor -0.93 +/- 0.05"),
        ),
        "saturated SINR floor off"
    );
}

/// Criterion 2: closed-form per-symbol SINR against the Monte-Carlo
/// phase-expectation oracle, 100 random tuples, five sigma at 1e6 draws.
#[test]
fn c2_proposition_oracle() {
    let results = par_map(100usize, |i| {
        let mut rng = StdRng::seed_from_u64(7_000 + i as u64);
        let q = rng.gen_range(1..1024usize);
        let c2max = 10f64.powf(rng.gen_range(-7.0..-0.3));
        let m = rng.gen_range(2..100_000usize);
        let gamma = 10f64.powf(rng.gen_range(0.0..3.0));
        let scenario = SinrScenario::new(gamma, gamma, 1024).unwrap();
        let cb = ChirpCodebook::new(c2max, m).unwrap();
        let closed = sinr_eve_symbol(q, &scenario, &cb);
        let (mc, err) = monte_carlo_sinr(q, &scenario, &cb, 1_000_000, &mut rng);
        let tol = 5.0 * err + 1e-9 * mc.abs();
        ((closed - mc).abs() <= tol, q, c2max, m)
    });
    let failures: Vec<_> = results.iter().filter(|r| !r.0).collect();
    assert!(
        verdict(
            "2 (closed form vs Monte-Carlo oracle)",
            failures.is_empty(),
            &format!("{} of 100 tuples within 5 sigma", 100 - failures.len()),
        ),
        "tuples outside 5 sigma: {failures:?}"
    );
}

/// Criterion 3: synchronized receiver versus constant-chirp baseline over
/// 50 random channel draws, noiseless exact inversion: elementwise gap
/// within 1e-10 relative and decoded bits tying exactly.
#[test]
fn c3_synchronized_equivalence() {
    let cfg = ExperimentConfig {
        max_frames: 50,
        target_errors: usize::MAX,
        ..ExperimentConfig::default()
    };
    let engine = BerEngine::new(&cfg).unwrap();
    let mut worst_gap = 0.0f64;
    let mut gap_ok = 0usize;
    let mut ties = 0usize;
    let mut errs = 0usize;
    for frame in 0..50 {
        match equivalence_trial_with(&engine, &cfg, frame) {
            Ok((gap, tie)) => {
                worst_gap = worst_gap.max(gap);
                gap_ok += (gap <= 1e-10) as usize;
                ties += tie as usize;
            }
            Err(_) => errs += 1,
        }
    }
    let pass = gap_ok == 50 && ties == 50 && errs == 0;
    assert!(
        verdict(
            "3 (synchronized-receiver equivalence)",
            pass,
            &format!(
                "gap<=1e-10 on {gap_ok}/50, bit ties on {ties}/50, solver errors {errs}, worst gap {worst_gap:.2e}"
            ),
        ),
        "zero-forcing float conditioning exceeds the pinned tolerance on some fading draws"
    );
}

/// Criterion 4: with the reference simulation parameters the zero-chirp
/// eavesdropper must be pinned at coin-flip BER while the synchronized
/// receiver stays below 1e-3 at 25 dB.
#[test]
fn c4_eve_failure() {
    let cfg = ExperimentConfig {
        snr_db: vec![25.0],
        min_frames: 250,
        max_frames: 250,
        target_errors: usize::MAX,
        ..ExperimentConfig::default()
    };
    let rows = run_ber_sweep(&cfg).unwrap();
    let row = rows[0];
    let ok_eve = verdict(
        "4a (eavesdropper BER)",
        (row.ber_eve - 0.5).abs() <= 0.02,
        &format!(
            "measured {:.4} over {} frames, required 0.5 +/- 0.02",
            row.ber_eve, row.frames
        ),
    );
    let ok_bob = verdict(
        "4b (synchronized receiver BER)",
        row.ber_bob < 1e-3,
        &format!("measured {:.2e}, required < 1e-3", row.ber_bob),
    );
    assert!(ok_eve && ok_bob);
}

/// The eavesdropper does reach coin flip once the codebook range is wide
/// enough that nearly every subcarrier's rotation wraps, which is the
/// regime the 0.5 figure describes.
#[test]
fn c4_supplement_wide_codebook_coinflip() {
    let cfg = ExperimentConfig {
        snr_db: vec![25.0],
        c2_max: 1e-3,
        min_frames: 250,
        max_frames: 250,
        target_errors: usize::MAX,
        ..ExperimentConfig::default()
    };
    let row = run_ber_sweep(&cfg).unwrap()[0];
    assert!(
        verdict(
            "4s (eavesdropper at c2max=1e-3)",
            (row.ber_eve - 0.5).abs() <= 0.02 && row.ber_bob < 1e-3,
            &format!("eve {:.4}, bob {:.2e}", row.ber_eve, row.ber_bob),
        ),
        "wide-codebook eavesdropper should sit at coin flip"
    );
}

/// Criterion 5: eavesdropper BER versus its search interval at 25 dB with
/// the wide codebook: above 0.1 at 7.8e-7, below 1e-3 at 9.77e-8, and
/// monotone nondecreasing across the six-point sweep.
#[test]
fn c5_search_interval_trend() {
    let cfg = ExperimentConfig {
        c2_max: 4.88e-5,
        codebook_m: 1 << 20,
        search_snr_db: 25.0,
        delta_e_list: vec![9.77e-8, 1.95e-7, 3.9e-7, 7.8e-7, 1.56e-6, 3.12e-6],
        min_frames: 200,
        max_frames: 300,
        target_errors: usize::MAX,
        ..ExperimentConfig::default()
    };
    let rows = run_search_sweep(&cfg).unwrap();
    let fine = rows[0];
    let coarse = rows[3];
    let monotone = rows.windows(2).all(|w| w[1].ber_eve >= w[0].ber_eve);
    let ok_fine = verdict(
        "5a (fine search interval)",
        fine.ber_eve < 1e-3,
        &format!("BER {:.2e} at delta_E = 9.77e-8, required < 1e-3", fine.ber_eve),
    );
    let ok_coarse = verdict(
        "5b (coarse search interval)",
        coarse.ber_eve > 0.1,
        &format!("BER {:.4} at delta_E = 7.8e-7, required > 0.1", coarse.ber_eve),
    );
    let ok_mono = verdict(
        "5c (monotone sweep)",
        monotone,
        &format!(
            "sweep {:?}",
            rows.iter().map(|r| r.ber_eve).collect::<Vec<_>>()
        ),
    );
    assert!(ok_fine && ok_coarse && ok_mono);
}

/// Criterion 6: the time-domain pipeline and the closed-form effective
/// matrix agree within 1e-9 relative over 200 randomized trials.
#[test]
fn c6_channel_route_equivalence() {
    let mut rng = StdRng::seed_from_u64(600);
    let mut worst = 0.0f64;
    for trial in 0..200 {
        let n = *[32usize, 64, 128, 256].iter().nth(trial % 4).unwrap();
        let n_cp = 12;
        let plan = DaftPlan::new(n);
        let c1 = seafdm_core::modem::full_diversity_c1(n, 2);
        let taps: Vec<usize> = vec![0, rng.gen_range(1..3), rng.gen_range(3..6)];
        let ch = sample_jakes_channel(2.0, &taps, n, n_cp, &mut rng).unwrap();
        let c2_tx = ChirpVector {
            symbol_index: 0,
            c2: (0..n).map(|_| (rng.gen::<f64>() - 0.5) * 1e-3).collect(),
        };
        let c2_rx = ChirpVector {
            symbol_index: 0,
            c2: (0..n).map(|_| (rng.gen::<f64>() - 0.5) * 1e-3).collect(),
        };
        let x: Vec<Cf64> = (0..n)
            .map(|_| Cf64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let s = idaft(&plan, &x, c1, &c2_tx).unwrap();
        let tx = add_cpp(&s, c1, n_cp);
        let r = apply_channel(&tx, &ch).unwrap();
        let body = remove_cpp(&r, n, n_cp).unwrap();
        let y_pipe = daft(&plan, &body, c1, &c2_rx).unwrap();
        let h = effective_matrix(&ch, c1, &c2_tx, &c2_rx).unwrap();
        let y_mat = h.matvec(&x);
        let num: f64 = y_pipe
            .iter()
            .zip(y_mat.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let den: f64 = y_mat.iter().map(|v| v.norm_sqr()).sum();
        worst = worst.max((num / den).sqrt());
    }
    assert!(
        verdict(
            "6 (channel route equivalence)",
            worst <= 1e-9,
            &format!("worst relative gap {worst:.2e} over 200 trials, required <= 1e-9"),
        ),
        "pipeline vs closed-form matrix gap {worst:.2e}"
    );
}

// ---------------------------------------------------------------------------
// Criterion 7: a deliberately naive per-chip reimplementation of the
// generator (explicit branch on the five segment conditions, table-driven
// registers, arithmetic counters) checked against the streaming one.
// ---------------------------------------------------------------------------

struct NaiveLppn {
    x1a: Vec<u8>,
    x1b: Vec<u8>,
    x2a: Vec<u8>,
    x2b: Vec<u8>,
    hold_x1b: u8,
    hold_x2a: u8,
    hold_x2b: u8,
    t_x1a: u128,
    t_x1b: u128,
    t_x2a: u128,
    t_x2b: u128,
    theta_x1b: u128,
    theta_x2a: u128,
    theta_x2b: u128,
    t_x1: u128,
    t_x2: u128,
}

fn naive_lfsr_stream(taps: &[u8], init: &[u8], len: usize) -> (Vec<u8>, u8) {
    let s_len = taps.len();
    let mut state = init.to_vec();
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push(state[s_len - 1]);
        let fb = taps
            .iter()
            .zip(state.iter())
            .fold(0u8, |acc, (&e, &s)| acc ^ (e & s));
        state.rotate_right(1);
        state[0] = fb;
    }
    // output of the state reached after `len` steps (the held value)
    (out, state[s_len - 1])
}

impl NaiveLppn {
    fn new() -> Self {
        let cfg = LppnConfig::p_code_12();
        let (x1a, _) = naive_lfsr_stream(&cfg.x1a.taps, &cfg.x1a.initial_state, 4092);
        let (x1b, hold_x1b) = naive_lfsr_stream(&cfg.x1b.taps, &cfg.x1b.initial_state, 4093);
        let (x2a, hold_x2a) = naive_lfsr_stream(&cfg.x2a.taps, &cfg.x2a.initial_state, 4092);
        let (x2b, hold_x2b) = naive_lfsr_stream(&cfg.x2b.taps, &cfg.x2b.initial_state, 4093);
        Self {
            x1a,
            x1b,
            x2a,
            x2b,
            hold_x1b,
            hold_x2a,
            hold_x2b,
            t_x1a: 4092,
            t_x1b: 4093,
            t_x2a: 4092,
            t_x2b: 4093,
            theta_x1b: 3749,
            theta_x2a: 3750,
            theta_x2b: 3749,
            t_x1: 15_345_000,
            t_x2: 15_345_037,
        }
    }

    fn chip(&self, k: u128) -> u8 {
        // X1 side
        let kappa1 = k % self.t_x1;
        let x1a = self.x1a[(kappa1 % self.t_x1a) as usize];
        let x1b = if kappa1 <= self.t_x1b * self.theta_x1b {
            let n_b = kappa1 / self.t_x1b;
            self.x1b[(kappa1 - n_b * self.t_x1b) as usize]
        } else {
            self.hold_x1b
        };
        // X2 side
        let kappa2 = k % self.t_x2;
        let x2a = if kappa2 <= self.t_x2a * self.theta_x2a {
            let n_a = kappa2 / self.t_x2a;
            self.x2a[(kappa2 - n_a * self.t_x2a) as usize]
        } else {
            self.hold_x2a
        };
        let x2b = if kappa2 <= self.t_x2b * self.theta_x2b {
            let n_b = kappa2 / self.t_x2b;
            self.x2b[(kappa2 - n_b * self.t_x2b) as usize]
        } else {
            self.hold_x2b
        };
        (x1a ^ x1b) ^ (x2a ^ x2b)
    }
}

#[test]
fn c7_lppn_correctness() {
    // Production stream vs naive oracle for the first 1e7 chips.
    let naive = NaiveLppn::new();
    let mut gen = LppnGenerator::new(LppnConfig::p_code_12()).unwrap();
    let mut first_divergence = None;
    for k in 0..10_000_000u128 {
        if gen.next() != naive.chip(k) {
            first_divergence = Some(k);
            break;
        }
    }
    let ok_oracle = verdict(
        "7a (naive-oracle agreement over 1e7 chips)",
        first_divergence.is_none(),
        &format!("first divergence {first_divergence:?}"),
    );

    // X1-component periodicity across one epoch.
    let t_x1 = 15_345_000usize;
    let mut gx1 = LppnGenerator::new(LppnConfig::p_code_12()).unwrap();
    let mut prefix = Vec::with_capacity(t_x1);
    for _ in 0..t_x1 {
        prefix.push(gx1.next_x1());
    }
    let mut repeat_ok = true;
    for chip in prefix.iter().take(t_x1) {
        if gx1.next_x1() != *chip {
            repeat_ok = false;
            break;
        }
    }
    let ok_epoch = verdict(
        "7b (X1 epoch prefix repeats at T_X1)",
        repeat_ok,
        "chips [0, T_X1) vs [T_X1, 2 T_X1)",
    );

    // Serialize/restore round trip continues the stream.
    let mut ga = LppnGenerator::new(LppnConfig::p_code_12()).unwrap();
    ga.skip(2_718_281);
    let word = ga.serialize_state().unwrap();
    let mut gb = LppnGenerator::restore_state(LppnConfig::p_code_12(), &word).unwrap();
    let mut restore_ok = true;
    for _ in 0..100_000 {
        if ga.next() != gb.next() {
            restore_ok = false;
            break;
        }
    }
    let ok_restore = verdict(
        "7c (serialize/restore stream continuation)",
        restore_ok,
        "100k chips after restore",
    );
    assert!(ok_oracle && ok_epoch && ok_restore);
}

/// Criterion 8: protocol rates over complete frames. With spreading at
/// 10 dB both frame detection (zero sample error) and state restore must
/// reach 99 of 100 frames; without spreading at 0 dB the restores fail and
/// the payload collapses toward coin flip.
#[test]
fn c8_sync_protocol() {
    let base = ExperimentConfig {
        csi: CsiKind::Estimated,
        threshold_frac: 0.5,
        frames: 100,
        ..ExperimentConfig::default()
    };
    let spread = ExperimentConfig {
        spread_factor: 15,
        sync_snr_db: 10.0,
        ..base.clone()
    };
    let summary = run_sync_demo(&spread).unwrap();
    let ok_detect = verdict(
        "8a (frame detection, zero offset error)",
        summary.offset_exact >= 99,
        &format!("{}/100 frames", summary.offset_exact),
    );
    let ok_restore = verdict(
        "8b (state restore with F=15)",
        summary.restores_ok >= 99,
        &format!("{}/100 frames", summary.restores_ok),
    );

    let raw = ExperimentConfig {
        spread_factor: 0,
        sync_snr_db: 0.0,
        ..base
    };
    let summary0 = run_sync_demo(&raw).unwrap();
    let ok_f0 = verdict(
        "8c (F=0 at 0 dB fails restore, BER > 0.4)",
        summary0.restores_ok < summary0.frames && summary0.mean_block3_ber > 0.4,
        &format!(
            "restores {}/{}, mean block-3 BER {:.4}",
            summary0.restores_ok, summary0.frames, summary0.mean_block3_ber
        ),
    );
    assert!(ok_detect && ok_restore && ok_f0);
}

/// Criterion 9: the embedded-pilot estimator at 30 dB pilot SNR must track
/// the perfect-CSI BER curve within a 1 dB horizontal shift at BER 1e-3,
/// with the eavesdropper still pinned at coin flip.
#[test]
fn c9_estimated_csi_gap() {
    let snrs = vec![14.0, 16.0, 18.0, 20.0, 22.0, 24.0];
    let base = ExperimentConfig {
        snr_db: snrs.clone(),
        min_frames: 300,
        max_frames: 300,
        target_errors: usize::MAX,
        ..ExperimentConfig::default()
    };
    let perfect = run_ber_sweep(&ExperimentConfig {
        csi: CsiKind::Perfect,
        ..base.clone()
    })
    .unwrap();
    let estimated = run_ber_sweep(&ExperimentConfig {
        csi: CsiKind::Estimated,
        ..base
    })
    .unwrap();

    let crossing = |rows: &[seafdm_harness::ber::BerPoint]| -> Option<f64> {
        for w in rows.windows(2) {
            let (a, b) = (w[0], w[1]);
            if a.ber_bob >= 1e-3 && b.ber_bob < 1e-3 && a.ber_bob > 0.0 && b.ber_bob > 0.0 {
                let la = a.ber_bob.log10();
                let lb = b.ber_bob.log10();
                let t = (la - (-3.0)) / (la - lb);
                return Some(a.snr_db + t * (b.snr_db - a.snr_db));
            }
        }
        None
    };
    let xp = crossing(&perfect);
    let xe = crossing(&estimated);
    let gap = match (xp, xe) {
        (Some(p), Some(e)) => e - p,
        _ => f64::INFINITY,
    };
    let ok_gap = verdict(
        "9a (CSI gap at BER 1e-3)",
        gap.abs() <= 1.0,
        &format!(
            "perfect crossing {:?} dB, estimated {:?} dB, gap {gap:.2} dB, required <= 1.0"
        , xp, xe),
    );
    let eve = estimated.last().unwrap().ber_eve;
    let ok_eve = verdict(
        "9b (eavesdropper with estimated CSI)",
        (eve - 0.5).abs() <= 0.02,
        &format!("measured {eve:.4}, required 0.5 +/- 0.02"),
    );
    assert!(ok_gap && ok_eve);
}
