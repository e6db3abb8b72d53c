//! Eavesdropper SINR analysis.
//!
//! With the pre-chirp drawn uniformly from the codebook, the eavesdropper's
//! `q`-th post-equalization symbol keeps a multiplicative phase
//! `exp(j 2 pi c q^2)`; treating the rotated-minus-clean difference as
//! interference gives the closed-form per-symbol output SINR. The geometric
//! sum over the codebook evaluates to a Dirichlet-style ratio, degenerate
//! exactly when `Delta_A q^2` is an integer (all codebook phases coincide),
//! in which case the symbol passes through at the raw SNR. A Monte-Carlo
//! phase-expectation estimator serves as the independent oracle, and the
//! search-interval model bounds the index error of a coarse-grid search.

use rand::Rng;

use crate::codebook::ChirpCodebook;
use crate::error::{Error, Result};
use crate::Cf64;

use std::f64::consts::TAU;

/// Output SNRs at the two receivers (linear), with the large-scale fading
/// and transmit power absorbed.
#[derive(Debug, Clone, Copy)]
pub struct SinrScenario {
    pub gamma_bob: f64,
    pub gamma_eve: f64,
    pub n: usize,
}

impl SinrScenario {
    pub fn new(gamma_bob: f64, gamma_eve: f64, n: usize) -> Result<Self> {
        if !(gamma_bob > 0.0) || !(gamma_eve > 0.0) {
            return Err(Error::Config("output SNRs must be positive".into()));
        }
        Ok(Self {
            gamma_bob,
            gamma_eve,
            n,
        })
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(v: f64) -> f64 {
    10.0 * v.log10()
}

/// The synchronized receiver sees no chirp mismatch: its output SINR is the
/// raw output SNR.
pub fn sinr_bob(scenario: &SinrScenario) -> f64 {
    scenario.gamma_bob
}

/// Tolerance for deciding `Delta_A q^2` integrality; keeps the closed form
/// finite across the removable singularity.
const INTEGER_TOL: f64 = 1e-12;

/// Mean of `exp(j 2 pi c q^2)` over the uniform codebook, in closed form
/// (geometric sum).
pub fn phase_expectation(q: usize, codebook: &ChirpCodebook) -> Cf64 {
    let m = codebook.len();
    let q2 = (q as f64) * (q as f64);
    if m == 1 {
        let phase = -TAU * codebook.c2_max() * q2;
        return Cf64::new(phase.cos(), phase.sin());
    }
    let t = codebook.interval() * q2;
    if (t - t.round()).abs() < INTEGER_TOL {
        // All codebook phases coincide modulo a full turn.
        let phase = -TAU * codebook.c2_max() * q2;
        return Cf64::new(phase.cos(), phase.sin());
    }
    let num_phase = TAU * t * m as f64;
    let den_phase = TAU * t;
    let num = Cf64::new(num_phase.cos(), num_phase.sin()) - 1.0;
    let den = Cf64::new(den_phase.cos(), den_phase.sin()) - 1.0;
    let lead_phase = -TAU * codebook.c2_max() * q2;
    let lead = Cf64::new(lead_phase.cos(), lead_phase.sin());
    lead * num / den / m as f64
}

/// Per-symbol output SINR at the eavesdropper.
pub fn sinr_eve_symbol(q: usize, scenario: &SinrScenario, codebook: &ChirpCodebook) -> f64 {
    let gamma = scenario.gamma_eve;
    let m = codebook.len();
    let q2 = (q as f64) * (q as f64);
    let t = codebook.interval() * q2;
    if m == 1 || (t - t.round()).abs() < INTEGER_TOL {
        // Deterministic (or phase-coincident) chirp: no self-interference.
        return gamma;
    }
    let e = phase_expectation(q, codebook);
    let eps = 2.0 - 2.0 * e.re;
    gamma / (gamma * eps + 1.0)
}

/// Arithmetic mean of the per-symbol SINR over `q = 0..N-1`.
pub fn sinr_eve_average(scenario: &SinrScenario, codebook: &ChirpCodebook) -> f64 {
    let total: f64 = (0..scenario.n)
        .map(|q| sinr_eve_symbol(q, scenario, codebook))
        .sum();
    total / scenario.n as f64
}

/// Empirical mean of `exp(j 2 pi c q^2)` over uniform codebook draws; the
/// independent oracle for [`phase_expectation`].
pub fn monte_carlo_phase_expectation<R: Rng + ?Sized>(
    q: usize,
    codebook: &ChirpCodebook,
    trials: usize,
    rng: &mut R,
) -> Cf64 {
    let q2 = (q as f64) * (q as f64);
    let mut acc = Cf64::default();
    for _ in 0..trials {
        let k = rng.gen_range(0..codebook.len());
        let phase = TAU * codebook.value(k) * q2;
        acc += Cf64::new(phase.cos(), phase.sin());
    }
    acc / trials as f64
}

/// Monte-Carlo SINR estimate with its standard error, built from the same
/// interference model as the closed form but with sampled phases.
pub fn monte_carlo_sinr<R: Rng + ?Sized>(
    q: usize,
    scenario: &SinrScenario,
    codebook: &ChirpCodebook,
    trials: usize,
    rng: &mut R,
) -> (f64, f64) {
    let gamma = scenario.gamma_eve;
    let q2 = (q as f64) * (q as f64);
    let mut sum = 0.0f64;
    let mut sum_sq = 0.0f64;
    for _ in 0..trials {
        let k = rng.gen_range(0..codebook.len());
        let phase = TAU * codebook.value(k) * q2;
        // |e^{j phase} - 1|^2 = 2 - 2 cos(phase)
        let v = 2.0 - 2.0 * phase.cos();
        sum += v;
        sum_sq += v * v;
    }
    let mean = sum / trials as f64;
    let var = (sum_sq / trials as f64 - mean * mean).max(0.0) / trials as f64;
    let sinr = gamma / (gamma * mean + 1.0);
    // First-order error propagation through eps -> SINR.
    let derr = gamma * gamma / (gamma * mean + 1.0).powi(2) * var.sqrt();
    (sinr, derr)
}

/// Largest index error (in codebook steps) for a nearest-point search over
/// the coarse grid with interval `u` codebook steps.
pub fn xi_max(m: usize, u: usize) -> Result<usize> {
    if m < 2 {
        return Err(Error::Config("codebook size must be >= 2".into()));
    }
    if u == 0 || u > m - 1 {
        return Err(Error::Config(format!(
            "search stride must be in 1..={}, got {u}",
            m - 1
        )));
    }
    let tail = (m - 1) - u * ((m - 1) / u);
    Ok(tail.max(u / 2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn scenario(gamma_db: f64, n: usize) -> SinrScenario {
        SinrScenario::new(db_to_linear(gamma_db), db_to_linear(gamma_db), n).unwrap()
    }

    #[test]
    fn bob_sinr_is_identity_in_gamma() {
        let s = scenario(25.0, 1024);
        assert!((sinr_bob(&s) - 316.22776601683796).abs() < 1e-9);
        assert!((linear_to_db(sinr_bob(&s)) - 25.0).abs() < 1e-12);
    }

    #[test]
    fn q_zero_passes_at_raw_snr() {
        let s = scenario(25.0, 1024);
        let cb = ChirpCodebook::new(1e-2, 100_000).unwrap();
        assert_eq!(sinr_eve_symbol(0, &s, &cb), s.gamma_eve);
    }

    #[test]
    fn tiny_c2max_recovers_raw_snr_for_all_q() {
        let s = scenario(25.0, 64);
        let cb = ChirpCodebook::new(1e-15, 1024).unwrap();
        for q in 0..64 {
            let v = sinr_eve_symbol(q, &s, &cb);
            assert!((v - s.gamma_eve).abs() / s.gamma_eve < 1e-6, "q={q}");
        }
    }

    #[test]
    fn closed_form_matches_monte_carlo_phase_oracle() {
        let mut rng = StdRng::seed_from_u64(40);
        let s = SinrScenario::new(100.0, 100.0, 1024).unwrap();
        let cb = ChirpCodebook::new(0.3, 8).unwrap();
        let closed = sinr_eve_symbol(7, &s, &cb);
        let (mc, _) = monte_carlo_sinr(7, &s, &cb, 1_000_000, &mut rng);
        assert!(
            (closed - mc).abs() / mc < 0.01,
            "closed {closed} vs mc {mc}"
        );
    }

    #[test]
    fn phase_expectation_m1_is_exact_point() {
        let cb = ChirpCodebook::new(0.13, 1).unwrap();
        let q = 5;
        let want_phase = -TAU * 0.13 * 25.0;
        let e = phase_expectation(q, &cb);
        assert!((e - Cf64::new(want_phase.cos(), want_phase.sin())).norm() < 1e-12);
    }

    #[test]
    fn phase_expectation_integer_branch_is_unity_magnitude() {
        // Delta_A q^2 integer: choose c2_max and M so Delta_A = 0.5, q = 2.
        let cb = ChirpCodebook::new(0.75, 4).unwrap();
        assert!((cb.interval() - 0.5).abs() < 1e-15);
        let e = phase_expectation(2, &cb);
        assert!((e.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn phase_expectation_matches_direct_sum() {
        let cb = ChirpCodebook::new(0.173, 37).unwrap();
        for q in [1usize, 3, 10, 25] {
            let q2 = (q * q) as f64;
            let mut acc = Cf64::default();
            for v in cb.values() {
                let phase = TAU * v * q2;
                acc += Cf64::new(phase.cos(), phase.sin());
            }
            acc /= cb.len() as f64;
            let closed = phase_expectation(q, &cb);
            assert!((acc - closed).norm() < 1e-10, "q={q}");
        }
    }

    #[test]
    fn eve_sinr_bounded_between_floor_and_gamma() {
        // eps = 2 - 2 Re E ranges over [0, 4]: the hard floor is
        // gamma/(4 gamma + 1), reached when the codebook phases cluster
        // around a half turn; the gamma/(2 gamma + 1) level is only the
        // decorrelated-phase value and shows Dirichlet ripple around it.
        let s = scenario(25.0, 256);
        let cb = ChirpCodebook::new(3.3e-4, 4096).unwrap();
        let hard_floor = s.gamma_eve / (4.0 * s.gamma_eve + 1.0);
        let decorrelated = s.gamma_eve / (2.0 * s.gamma_eve + 1.0);
        let mut below = 0usize;
        for q in 0..256 {
            let v = sinr_eve_symbol(q, &s, &cb);
            assert!(v <= s.gamma_eve + 1e-9, "q={q} v={v}");
            assert!(v >= hard_floor - 1e-9, "q={q} v={v}");
            if v < decorrelated * 0.9 {
                below += 1;
            }
        }
        // Dips below the decorrelated level stay rare and shallow.
        assert!(below < 16, "{below} symbols dipped well below the ripple band");
    }

    #[test]
    fn average_is_monotone_in_c2max() {
        let s = scenario(25.0, 1024);
        let mut last = f64::INFINITY;
        let mut c2 = 1e-9;
        while c2 < 0.1 {
            let cb = ChirpCodebook::new(c2, 100_000).unwrap();
            let v = linear_to_db(sinr_eve_average(&s, &cb));
            assert!(v <= last + 0.1, "ripple at c2max={c2}: {v} > {last}");
            last = v;
            c2 *= 10.0_f64.powf(0.25);
        }
    }

    #[test]
    fn large_c2max_plateau_matches_decomposition() {
        // With every q >= 1 fully decorrelated the average collapses to
        // (gamma + (N-1) gamma/(2 gamma + 1)) / N.
        let s = scenario(25.0, 1024);
        let cb = ChirpCodebook::new(0.5, 100_000).unwrap();
        let avg = sinr_eve_average(&s, &cb);
        let g = s.gamma_eve;
        let want = (g + (s.n as f64 - 1.0) * g / (2.0 * g + 1.0)) / s.n as f64;
        assert!((linear_to_db(avg) - linear_to_db(want)).abs() < 0.05);
        assert!((linear_to_db(want) + 0.9284).abs() < 0.01);
    }

    #[test]
    fn xi_max_examples() {
        assert_eq!(xi_max(16, 1).unwrap(), 0);
        assert_eq!(xi_max(10, 3).unwrap(), 1);
        assert!(xi_max(1, 1).is_err());
        assert!(xi_max(8, 0).is_err());
        assert!(xi_max(8, 8).is_err());
    }

    #[test]
    fn xi_max_matches_brute_force() {
        for m in 2..=64usize {
            let cb = ChirpCodebook::new(1.0, m).unwrap();
            for u in 1..m {
                let delta_e = u as f64 * cb.interval();
                let grid_len = (m - 1) / u + 1;
                let mut worst = 0usize;
                for k in 0..m {
                    let target = cb.value(k);
                    let mut best = usize::MAX;
                    let mut best_dist = f64::INFINITY;
                    for j in 0..grid_len {
                        let v = -cb.c2_max() + j as f64 * delta_e;
                        let d = (v - target).abs();
                        if d < best_dist {
                            best_dist = d;
                            best = j;
                        }
                    }
                    let err_steps =
                        ((best * u) as i64 - k as i64).unsigned_abs() as usize;
                    worst = worst.max(err_steps);
                }
                assert_eq!(worst, xi_max(m, u).unwrap(), "m={m} u={u}");
            }
        }
    }

    #[test]
    fn oracle_agreement_many_random_tuples() {
        let mut rng = StdRng::seed_from_u64(41);
        use rand::Rng;
        for _ in 0..30 {
            let q = rng.gen_range(1..512usize);
            let c2max = 10f64.powf(rng.gen_range(-6.0..-0.5));
            let m = rng.gen_range(2..2000usize);
            let gamma = db_to_linear(rng.gen_range(0.0..30.0));
            let s = SinrScenario::new(gamma, gamma, 1024).unwrap();
            let cb = ChirpCodebook::new(c2max, m).unwrap();
            let closed = sinr_eve_symbol(q, &s, &cb);
            let (mc, err) = monte_carlo_sinr(q, &s, &cb, 200_000, &mut rng);
            let tol = 5.0 * err.max(1e-12) + 1e-9 * mc;
            assert!(
                (closed - mc).abs() <= tol,
                "q={q} c2max={c2max} m={m}: closed {closed}, mc {mc} +/- {err}"
            );
        }
    }
}
