//! Long-period pseudo-noise (LPPN) sequence generator.
//!
//! The LPPN stream `L` is the modulo-2 sum of two component sequences `X1`
//! and `X2`, each of which is itself the modulo-2 sum of two shortened-cycle
//! LFSR sequences (`X1A`/`X1B` and `X2A`/`X2B`). The component registers run
//! on deliberately shortened, coprime cycles so that the combined period is
//! the product `T_L = T_X1 * theta_X1`, following the construction used by
//! the GPS P code.
//!
//! The generator is a stateful stream: `next()` emits one chip and advances.
//! Hold/reset behaviour at segment boundaries follows the governing
//! inequalities literally, with ties resolving to the earlier (cycling)
//! branch; a held register re-emits the output bit of its final cycle state
//! without stepping.
//!
//! Dynamic state (six counters plus the four register states) serializes to
//! a fixed 144-bit word for the 12-stage configuration; `restore` rebuilds a
//! generator that continues the stream bit-exactly. The chip position inside
//! each short cycle is not part of the serialized word: it is recovered on
//! restore by locating the X1A register state within its (injective) cycle.

use crate::error::{Error, Result};

/// Counter field widths in the serialized state word: the four per-cycle
/// counters use 12 bits, the two epoch counters 24 bits.
pub const SHORT_COUNTER_BITS: usize = 12;
/// Width of the two epoch counters in the serialized state word.
pub const LONG_COUNTER_BITS: usize = 24;

// ---------------------------------------------------------------------------
// Single shift register
// ---------------------------------------------------------------------------

/// One shortened-cycle shift register: feedback taps, initial state and the
/// number of chips per shortened cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterConfig {
    /// Polynomial coefficients `e_1..e_S`; `taps[i]` multiplies stage `i+1`.
    pub taps: Vec<u8>,
    /// Initial register state `s_1..s_S`.
    pub initial_state: Vec<u8>,
    /// Chips per shortened cycle `T`.
    pub short_cycle: u64,
}

impl RegisterConfig {
    pub fn new(taps: &[u8], initial_state: &[u8], short_cycle: u64) -> Result<Self> {
        if taps.len() != initial_state.len() {
            return Err(Error::Config(format!(
                "taps length {} != initial state length {}",
                taps.len(),
                initial_state.len()
            )));
        }
        if taps.is_empty() || taps.len() > 63 {
            return Err(Error::Config("register length must be in 1..=63".into()));
        }
        if short_cycle == 0 {
            return Err(Error::Config("short cycle must be >= 1".into()));
        }
        if taps.iter().chain(initial_state.iter()).any(|&b| b > 1) {
            return Err(Error::Config("bit vectors must contain only 0/1".into()));
        }
        Ok(Self {
            taps: taps.to_vec(),
            initial_state: initial_state.to_vec(),
            short_cycle,
        })
    }

    pub fn stages(&self) -> usize {
        self.taps.len()
    }
}

/// Packed register state; stage `i+1` lives at bit `i`, output is stage `S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Lfsr {
    state: u64,
    taps: u64,
    stages: u32,
}

impl Lfsr {
    fn new(cfg: &RegisterConfig) -> Self {
        Self {
            state: pack_bits(&cfg.initial_state),
            taps: pack_bits(&cfg.taps),
            stages: cfg.stages() as u32,
        }
    }

    #[inline]
    fn output(&self) -> u8 {
        ((self.state >> (self.stages - 1)) & 1) as u8
    }

    #[inline]
    fn step(&mut self) {
        let fb = (self.state & self.taps).count_ones() & 1;
        let mask = if self.stages == 64 {
            u64::MAX
        } else {
            (1u64 << self.stages) - 1
        };
        self.state = ((self.state << 1) | fb as u64) & mask;
    }
}

fn pack_bits(bits: &[u8]) -> u64 {
    bits.iter()
        .enumerate()
        .fold(0u64, |acc, (i, &b)| acc | ((b as u64) << i))
}

fn unpack_bits(word: u64, n: usize) -> Vec<u8> {
    (0..n).map(|i| ((word >> i) & 1) as u8).collect()
}

/// One feedback-and-shift step of an `S`-stage LFSR.
///
/// Returns the new state and the output chip (the last stage of the input
/// state). The new first stage is the mod-2 inner product of `taps` and
/// `state`; every other stage shifts down by one.
pub fn lfsr_step(state: &[u8], taps: &[u8]) -> Result<(Vec<u8>, u8)> {
    if state.len() != taps.len() {
        return Err(Error::Dimension {
            expected: state.len(),
            got: taps.len(),
        });
    }
    if state.is_empty() {
        return Err(Error::Config("register length must be >= 1".into()));
    }
    let out = state[state.len() - 1];
    let fb = state
        .iter()
        .zip(taps.iter())
        .fold(0u8, |acc, (&s, &e)| acc ^ (s & e));
    let mut next = Vec::with_capacity(state.len());
    next.push(fb);
    next.extend_from_slice(&state[..state.len() - 1]);
    Ok((next, out))
}

/// LFSR output stream of `length` chips (no cycle shortening).
///
/// Errors on an all-zero seed, which is absorbing for a linear register.
pub fn msequence(taps: &[u8], seed: &[u8], length: usize) -> Result<Vec<u8>> {
    if seed.iter().all(|&b| b == 0) {
        return Err(Error::InvalidSeed);
    }
    let cfg = RegisterConfig::new(taps, seed, 1)?;
    let mut reg = Lfsr::new(&cfg);
    let mut out = Vec::with_capacity(length);
    for _ in 0..length {
        out.push(reg.output());
        reg.step();
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Precession parameters
// ---------------------------------------------------------------------------

/// Cycle-count thresholds and the X2 epoch delay controlling the precession
/// between the component sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrecessionConfig {
    /// X1A cycles per X1 epoch.
    pub theta_x1a: u64,
    /// X2A cycles per X2 epoch (before the delay chips).
    pub theta_x2a: u64,
    /// X1 epochs per full LPPN period; must equal `T_X2`.
    pub theta_x1: u64,
    /// Chips by which the X2 register resets lag the X2A/X2B cycling.
    pub d: u64,
}

/// Full generator configuration: four registers plus precession constants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LppnConfig {
    pub x1a: RegisterConfig,
    pub x1b: RegisterConfig,
    pub x2a: RegisterConfig,
    pub x2b: RegisterConfig,
    pub precession: PrecessionConfig,
}

/// Derived cycle constants computed once from an [`LppnConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DerivedCycles {
    pub theta_x1b: u64,
    pub theta_x2b: u64,
    pub t_x1: u64,
    pub t_x2: u64,
    pub theta_x2: u64,
    pub t_l: u128,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl LppnConfig {
    /// Validates the coprimality and threshold constraints and returns the
    /// derived cycle lengths.
    pub fn derive(&self) -> Result<DerivedCycles> {
        let p = &self.precession;
        let (ta, tb) = (self.x1a.short_cycle, self.x1b.short_cycle);
        let (ta2, tb2) = (self.x2a.short_cycle, self.x2b.short_cycle);
        if p.theta_x1a == 0 || p.theta_x2a == 0 || p.theta_x1 == 0 {
            return Err(Error::Config("cycle-count thresholds must be >= 1".into()));
        }
        if gcd(ta, tb) != 1 || gcd(ta2, tb2) != 1 {
            return Err(Error::Config(
                "component short cycles must be coprime".into(),
            ));
        }
        let t_x1 = ta * p.theta_x1a;
        let t_x2 = ta2 * p.theta_x2a + p.d;
        if gcd(t_x1, t_x2) != 1 {
            return Err(Error::Config("T_X1 and T_X2 must be coprime".into()));
        }
        if p.theta_x1 != t_x2 {
            return Err(Error::Config(format!(
                "theta_X1 ({}) must equal T_X2 ({})",
                p.theta_x1, t_x2
            )));
        }
        // theta_X1A - T_X1/T_X1B <= T_X1B - T_X1A, kept in integer form.
        if p.theta_x1a * tb > t_x1 + (tb - ta) * tb {
            return Err(Error::Config(
                "X1 precession margin violated: theta_X1A too large".into(),
            ));
        }
        let theta_x1b = t_x1 / tb;
        let theta_x2b = (ta2 * p.theta_x2a) / tb2;
        let t_l = t_x1 as u128 * p.theta_x1 as u128;
        let theta_x2 = (t_l / t_x2 as u128) as u64;
        if theta_x2 != t_x1 {
            return Err(Error::Config(format!(
                "theta_X2 ({theta_x2}) must equal T_X1 ({t_x1})"
            )));
        }
        Ok(DerivedCycles {
            theta_x1b,
            theta_x2b,
            t_x1,
            t_x2,
            theta_x2,
            t_l,
        })
    }

    /// Serialized state width in bits: six counters plus four registers.
    pub fn state_bits(&self) -> usize {
        4 * SHORT_COUNTER_BITS
            + 2 * LONG_COUNTER_BITS
            + self.x1a.stages()
            + self.x1b.stages()
            + self.x2a.stages()
            + self.x2b.stages()
    }

    /// The 12-stage shortened-cycle preset following the GPS P-code
    /// construction: four degree-12 registers, 4092/4093-chip short cycles,
    /// 3750-cycle epochs and a 37-chip X2 delay.
    pub fn p_code_12() -> Self {
        let x1a = RegisterConfig::new(
            &[0, 0, 0, 0, 0, 1, 0, 1, 0, 0, 1, 1],
            &[0, 0, 0, 1, 0, 0, 1, 0, 0, 1, 0, 0],
            4092,
        )
        .expect("preset");
        let x1b = RegisterConfig::new(
            &[1, 1, 0, 0, 1, 0, 0, 1, 1, 1, 1, 1],
            &[0, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0],
            4093,
        )
        .expect("preset");
        let x2a = RegisterConfig::new(
            &[1, 0, 1, 1, 1, 0, 1, 1, 1, 1, 1, 1],
            &[1, 0, 1, 0, 0, 1, 0, 0, 1, 0, 0, 1],
            4092,
        )
        .expect("preset");
        let x2b = RegisterConfig::new(
            &[0, 1, 1, 1, 0, 0, 0, 1, 1, 0, 0, 1],
            &[0, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0],
            4093,
        )
        .expect("preset");
        Self {
            x1a,
            x1b,
            x2a,
            x2b,
            precession: PrecessionConfig {
                theta_x1a: 3750,
                theta_x2a: 3750,
                theta_x1: 15_345_037,
                d: 37,
            },
        }
    }
}

// ---------------------------------------------------------------------------
// Streaming generator
// ---------------------------------------------------------------------------

/// Per-register streaming state: the packed register, the chip position
/// inside the current short cycle and the completed-cycle count.
#[derive(Debug, Clone, PartialEq, Eq)]
struct CycledRegister {
    reg: Lfsr,
    init: u64,
    cycle: u64,
    pos: u64,
    count: u64,
}

impl CycledRegister {
    fn new(cfg: &RegisterConfig) -> Self {
        let reg = Lfsr::new(cfg);
        Self {
            reg,
            init: reg.state,
            cycle: cfg.short_cycle,
            pos: 0,
            count: 0,
        }
    }

    #[inline]
    fn step(&mut self) {
        self.reg.step();
        self.pos += 1;
        if self.pos == self.cycle {
            self.reg.state = self.init;
            self.pos = 0;
            self.count += 1;
        }
    }

    fn reset(&mut self) {
        self.reg.state = self.init;
        self.pos = 0;
        self.count = 0;
    }
}

/// Streaming LPPN generator. Owns its configuration and all dynamic state;
/// `next()` emits one chip. Instances are cheap to clone, so receivers keep
/// snapshots by cloning rather than replaying.
#[derive(Debug, Clone, PartialEq)]
pub struct LppnGenerator {
    cfg: LppnConfig,
    cyc: DerivedCycles,
    x1a: CycledRegister,
    x1b: CycledRegister,
    x2a: CycledRegister,
    x2b: CycledRegister,
    n_x1: u64,
    n_x2: u64,
    /// Chip index within the current X1 epoch.
    kappa1: u64,
    /// Chip index within the current X2 epoch.
    kappa2: u64,
    /// Absolute chip index modulo `T_L`.
    chip: u128,
    /// Output bit of the X1B/X2A/X2B registers after a full (unshortened by
    /// reset) short cycle; re-emitted while the register is held.
    hold_x1b: u8,
    hold_x2a: u8,
    hold_x2b: u8,
}

fn hold_bit(cfg: &RegisterConfig) -> u8 {
    let mut reg = Lfsr::new(cfg);
    for _ in 0..cfg.short_cycle {
        reg.step();
    }
    reg.output()
}

impl LppnGenerator {
    pub fn new(cfg: LppnConfig) -> Result<Self> {
        let cyc = cfg.derive()?;
        Ok(Self {
            x1a: CycledRegister::new(&cfg.x1a),
            x1b: CycledRegister::new(&cfg.x1b),
            x2a: CycledRegister::new(&cfg.x2a),
            x2b: CycledRegister::new(&cfg.x2b),
            hold_x1b: hold_bit(&cfg.x1b),
            hold_x2a: hold_bit(&cfg.x2a),
            hold_x2b: hold_bit(&cfg.x2b),
            cfg,
            cyc,
            n_x1: 0,
            n_x2: 0,
            kappa1: 0,
            kappa2: 0,
            chip: 0,
        })
    }

    pub fn config(&self) -> &LppnConfig {
        &self.cfg
    }

    pub fn cycles(&self) -> &DerivedCycles {
        &self.cyc
    }

    /// Absolute chip index modulo `T_L` of the next chip to be emitted.
    pub fn chip_index(&self) -> u128 {
        self.chip
    }

    #[inline]
    fn x1_bit(&self) -> u8 {
        let a = self.x1a.reg.output();
        let b = if self.kappa1 <= self.cfg.x1b.short_cycle * self.cyc.theta_x1b {
            self.x1b.reg.output()
        } else {
            self.hold_x1b
        };
        a ^ b
    }

    #[inline]
    fn x2_bit(&self) -> u8 {
        let a = if self.kappa2 <= self.cfg.x2a.short_cycle * self.cfg.precession.theta_x2a {
            self.x2a.reg.output()
        } else {
            self.hold_x2a
        };
        let b = if self.kappa2 <= self.cfg.x2b.short_cycle * self.cyc.theta_x2b {
            self.x2b.reg.output()
        } else {
            self.hold_x2b
        };
        a ^ b
    }

    #[inline]
    fn advance(&mut self) {
        self.x1a.step();
        if self.kappa1 < self.cfg.x1b.short_cycle * self.cyc.theta_x1b {
            self.x1b.step();
        }
        if self.kappa2 < self.cfg.x2a.short_cycle * self.cfg.precession.theta_x2a {
            self.x2a.step();
        }
        if self.kappa2 < self.cfg.x2b.short_cycle * self.cyc.theta_x2b {
            self.x2b.step();
        }
        self.kappa1 += 1;
        self.kappa2 += 1;
        self.chip += 1;
        if self.kappa1 == self.cyc.t_x1 {
            self.kappa1 = 0;
            self.x1a.reset();
            self.x1b.reset();
            self.n_x1 += 1;
        }
        if self.kappa2 == self.cyc.t_x2 {
            self.kappa2 = 0;
            self.x2a.reset();
            self.x2b.reset();
            self.n_x2 += 1;
        }
        if self.n_x1 == self.cfg.precession.theta_x1 {
            // Full LPPN period: everything returns to the initial state.
            self.n_x1 = 0;
            self.n_x2 = 0;
            self.chip = 0;
        }
    }

    /// Next chip of the combined LPPN sequence `L = X1 xor X2`.
    #[inline]
    pub fn next(&mut self) -> u8 {
        let bit = self.x1_bit() ^ self.x2_bit();
        self.advance();
        bit
    }

    /// Next chip of the X1 component only (the generator still advances by
    /// one chip, so pair separate clones when comparing components).
    pub fn next_x1(&mut self) -> u8 {
        let bit = self.x1_bit();
        self.advance();
        bit
    }

    /// Next chip of the X2 component only.
    pub fn next_x2(&mut self) -> u8 {
        let bit = self.x2_bit();
        self.advance();
        bit
    }

    /// Advances the stream by `n` chips, discarding the output.
    pub fn skip(&mut self, n: u64) {
        for _ in 0..n {
            self.advance();
        }
    }

    /// Counter values in the serialization order.
    pub fn counters(&self) -> [u64; 6] {
        [
            self.x1a.count,
            self.x1b.count,
            self.x2a.count,
            self.x2b.count,
            self.n_x1,
            self.n_x2,
        ]
    }

    // -----------------------------------------------------------------------
    // State transfer
    // -----------------------------------------------------------------------

    /// Serializes the dynamic state to the fixed-width bit vector
    /// `[n_X1A | n_X1B | n_X2A | n_X2B | n_X1 | n_X2 | s_X1A | s_X1B | s_X2A | s_X2B]`,
    /// counters MSB-first.
    pub fn serialize_state(&self) -> Result<Vec<u8>> {
        let mut bits = Vec::with_capacity(self.cfg.state_bits());
        let counters = self.counters();
        let widths = [
            SHORT_COUNTER_BITS,
            SHORT_COUNTER_BITS,
            SHORT_COUNTER_BITS,
            SHORT_COUNTER_BITS,
            LONG_COUNTER_BITS,
            LONG_COUNTER_BITS,
        ];
        for (value, width) in counters.iter().zip(widths.iter()) {
            if *value >= (1u64 << width) {
                return Err(Error::Format(format!(
                    "counter value {value} exceeds its {width}-bit field"
                )));
            }
            for i in (0..*width).rev() {
                bits.push(((value >> i) & 1) as u8);
            }
        }
        for (reg, cfg) in [
            (&self.x1a, &self.cfg.x1a),
            (&self.x1b, &self.cfg.x1b),
            (&self.x2a, &self.cfg.x2a),
            (&self.x2b, &self.cfg.x2b),
        ] {
            bits.extend(unpack_bits(reg.reg.state, cfg.stages()));
        }
        Ok(bits)
    }

    /// Rebuilds a generator from a serialized state word.
    ///
    /// Counter fields are range-checked against their thresholds, the
    /// absolute chip position is recovered from the X1A register state, and
    /// the remaining register states are cross-checked against the position.
    /// Any inconsistency yields [`Error::InvalidState`].
    pub fn restore_state(cfg: LppnConfig, bits: &[u8]) -> Result<Self> {
        let cyc = cfg.derive()?;
        if bits.len() != cfg.state_bits() {
            return Err(Error::Format(format!(
                "state word must be {} bits, got {}",
                cfg.state_bits(),
                bits.len()
            )));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::Format("state word must contain only 0/1".into()));
        }
        let mut at = 0usize;
        let mut take = |width: usize| -> u64 {
            let mut v = 0u64;
            for _ in 0..width {
                v = (v << 1) | bits[at] as u64;
                at += 1;
            }
            v
        };
        let n_x1a = take(SHORT_COUNTER_BITS);
        let n_x1b = take(SHORT_COUNTER_BITS);
        let n_x2a = take(SHORT_COUNTER_BITS);
        let n_x2b = take(SHORT_COUNTER_BITS);
        let n_x1 = take(LONG_COUNTER_BITS);
        let n_x2 = take(LONG_COUNTER_BITS);
        let s_x1a = take(cfg.x1a.stages()).reverse_bits() >> (64 - cfg.x1a.stages());
        let s_x1b = take(cfg.x1b.stages()).reverse_bits() >> (64 - cfg.x1b.stages());
        let s_x2a = take(cfg.x2a.stages()).reverse_bits() >> (64 - cfg.x2a.stages());
        let s_x2b = take(cfg.x2b.stages()).reverse_bits() >> (64 - cfg.x2b.stages());

        let p = &cfg.precession;
        let checks = [
            (n_x1a, p.theta_x1a, "n_X1A"),
            (n_x1b, cyc.theta_x1b, "n_X1B"),
            (n_x2a, p.theta_x2a, "n_X2A"),
            (n_x2b, cyc.theta_x2b, "n_X2B"),
        ];
        for (value, theta, name) in checks {
            if value > theta {
                return Err(Error::InvalidState(format!(
                    "{name} = {value} exceeds threshold {theta}"
                )));
            }
        }
        if n_x1 >= p.theta_x1 {
            return Err(Error::InvalidState(format!(
                "n_X1 = {n_x1} exceeds threshold {}",
                p.theta_x1
            )));
        }
        if n_x2 >= cyc.theta_x2 {
            return Err(Error::InvalidState(format!(
                "n_X2 = {n_x2} exceeds threshold {}",
                cyc.theta_x2
            )));
        }

        // Recover the chip position inside the X1A cycle from its state.
        let pos_x1a = locate_in_cycle(&cfg.x1a, s_x1a).ok_or_else(|| {
            Error::InvalidState("X1A register state not on its cycle".into())
        })?;
        let kappa1 = cfg.x1a.short_cycle * n_x1a + pos_x1a;
        if kappa1 >= cyc.t_x1 {
            return Err(Error::InvalidState(format!(
                "chip position {kappa1} falls outside the X1 epoch"
            )));
        }
        let chip = cyc.t_x1 as u128 * n_x1 as u128 + kappa1 as u128;
        let kappa2_full = chip
            .checked_sub(cyc.t_x2 as u128 * n_x2 as u128)
            .ok_or_else(|| Error::InvalidState("n_X2 ahead of the chip index".into()))?;
        if kappa2_full >= cyc.t_x2 as u128 {
            return Err(Error::InvalidState(
                "n_X2 inconsistent with the chip index".into(),
            ));
        }
        let kappa2 = kappa2_full as u64;

        let x1a = restored_register(&cfg.x1a, s_x1a, pos_x1a, n_x1a)?;
        let x1b = restore_component(
            &cfg.x1b,
            s_x1b,
            n_x1b,
            kappa1,
            cfg.x1b.short_cycle * cyc.theta_x1b,
            cyc.theta_x1b,
            "X1B",
        )?;
        let x2a = restore_component(
            &cfg.x2a,
            s_x2a,
            n_x2a,
            kappa2,
            cfg.x2a.short_cycle * p.theta_x2a,
            p.theta_x2a,
            "X2A",
        )?;
        let x2b = restore_component(
            &cfg.x2b,
            s_x2b,
            n_x2b,
            kappa2,
            cfg.x2b.short_cycle * cyc.theta_x2b,
            cyc.theta_x2b,
            "X2B",
        )?;

        Ok(Self {
            x1a,
            x1b,
            x2a,
            x2b,
            hold_x1b: hold_bit(&cfg.x1b),
            hold_x2a: hold_bit(&cfg.x2a),
            hold_x2b: hold_bit(&cfg.x2b),
            cfg,
            cyc,
            n_x1,
            n_x2,
            kappa1,
            kappa2,
            chip,
        })
    }
}

/// Packs a serialized state bit vector MSB-first into bytes (the raw
/// state-block wire format).
pub fn state_to_bytes(bits: &[u8]) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        out[i / 8] |= (b & 1) << (7 - i % 8);
    }
    out
}

/// Inverse of [`state_to_bytes`] for a known bit width.
pub fn state_from_bytes(bytes: &[u8], bits: usize) -> Result<Vec<u8>> {
    if bytes.len() != bits.div_ceil(8) {
        return Err(Error::Format(format!(
            "expected {} bytes for {bits} bits, got {}",
            bits.div_ceil(8),
            bytes.len()
        )));
    }
    Ok((0..bits)
        .map(|i| (bytes[i / 8] >> (7 - i % 8)) & 1)
        .collect())
}

/// Walks one short cycle looking for `state`; returns its chip position.
fn locate_in_cycle(cfg: &RegisterConfig, state: u64) -> Option<u64> {
    let mut reg = Lfsr::new(cfg);
    for pos in 0..cfg.short_cycle {
        if reg.state == state {
            return Some(pos);
        }
        reg.step();
    }
    None
}

fn restored_register(
    cfg: &RegisterConfig,
    state: u64,
    pos: u64,
    count: u64,
) -> Result<CycledRegister> {
    let mut r = CycledRegister::new(cfg);
    r.reg.state = state;
    r.pos = pos;
    r.count = count;
    Ok(r)
}

/// Restores a register that may be either cycling or held, cross-checking
/// the serialized state against the position implied by the epoch chip.
fn restore_component(
    cfg: &RegisterConfig,
    state: u64,
    count: u64,
    kappa: u64,
    cycling_bound: u64,
    theta: u64,
    name: &str,
) -> Result<CycledRegister> {
    if kappa <= cycling_bound {
        let expect_count = kappa / cfg.short_cycle;
        if count != expect_count.min(theta) {
            return Err(Error::InvalidState(format!(
                "{name} counter {count} inconsistent with chip position"
            )));
        }
        let pos = kappa - cfg.short_cycle * count;
        let expected = state_at(cfg, pos);
        if expected != state {
            return Err(Error::InvalidState(format!(
                "{name} register state off its cycle position"
            )));
        }
        restored_register(cfg, state, pos, count)
    } else {
        // Held segment: the register sits at its reset state.
        if count != theta {
            return Err(Error::InvalidState(format!(
                "{name} counter {count} != {theta} during hold"
            )));
        }
        let init = pack_bits(&cfg.initial_state);
        if state != init {
            return Err(Error::InvalidState(format!(
                "{name} register not at reset state during hold"
            )));
        }
        restored_register(cfg, state, 0, count)
    }
}

fn state_at(cfg: &RegisterConfig, pos: u64) -> u64 {
    let mut reg = Lfsr::new(cfg);
    for _ in 0..pos {
        reg.step();
    }
    reg.state
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
