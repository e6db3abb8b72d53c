//! Uniform `c2` codebook and the LPPN-driven index stream.
//!
//! The codebook holds `M` candidate pre-chirp values spaced uniformly over
//! `[-c2_max, +c2_max]`. On the waveform path an index is produced for every
//! subcarrier by reading the most recent `log2 M` LPPN chips as an MSB-first
//! binary number; consecutive subcarriers slide the chip window by one chip,
//! so adjacent windows overlap in all but one position. Chips "before the
//! start" of a stream are taken as 1.

use crate::error::{Error, Result};
use crate::lppn::LppnGenerator;

/// The `M`-entry uniform discretization of `c2` over `[-c2_max, +c2_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChirpCodebook {
    c2_max: f64,
    m: usize,
    delta: f64,
}

impl ChirpCodebook {
    pub fn new(c2_max: f64, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Config("codebook size M must be >= 1".into()));
        }
        if !(c2_max > 0.0) {
            return Err(Error::Config("c2_max must be positive".into()));
        }
        let delta = if m == 1 {
            0.0
        } else {
            2.0 * c2_max / (m as f64 - 1.0)
        };
        Ok(Self { c2_max, m, delta })
    }

    pub fn c2_max(&self) -> f64 {
        self.c2_max
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Codebook interval between adjacent candidates (0 when `M == 1`).
    pub fn interval(&self) -> f64 {
        self.delta
    }

    /// The `k`-th candidate value.
    #[inline]
    pub fn value(&self, k: usize) -> f64 {
        debug_assert!(k < self.m);
        if self.m == 1 {
            -self.c2_max
        } else {
            -self.c2_max + k as f64 * self.delta
        }
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.m).map(|k| self.value(k))
    }

    /// Bits consumed per index on the waveform path; requires `M` to be a
    /// power of two.
    pub fn index_bits(&self) -> Result<usize> {
        if !self.m.is_power_of_two() {
            return Err(Error::Config(format!(
                "waveform-side codebook size must be a power of two, got {}",
                self.m
            )));
        }
        Ok(self.m.trailing_zeros() as usize)
    }
}

/// Converts an MSB-first chip window into a codebook index.
pub fn index_from_chips(chips: &[u8], m: usize) -> Result<usize> {
    if !m.is_power_of_two() {
        return Err(Error::Config(format!(
            "codebook size must be a power of two, got {m}"
        )));
    }
    let bits = m.trailing_zeros() as usize;
    if chips.len() != bits {
        return Err(Error::Dimension {
            expected: bits,
            got: chips.len(),
        });
    }
    Ok(chips
        .iter()
        .fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize))
}

/// Per-subcarrier `c2` values for one AFDM symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct ChirpVector {
    /// Symbol index within the stream that produced this vector.
    pub symbol_index: usize,
    /// One `c2` value per subcarrier.
    pub c2: Vec<f64>,
}

impl ChirpVector {
    /// A constant vector, as used for the synchronization blocks.
    pub fn constant(value: f64, n: usize) -> Self {
        Self {
            symbol_index: 0,
            c2: vec![value; n],
        }
    }
}

/// LPPN-driven chirp stream: owns a generator plus the rolling chip window
/// and hands out one [`ChirpVector`] per symbol.
///
/// A fresh stream (or one rebuilt from a restored generator state) starts
/// with an all-ones window, so transmitter and receiver agree on the first
/// `log2 M - 1` window positions without sharing pre-stream chips.
#[derive(Debug, Clone)]
pub struct ChirpStream {
    gen: LppnGenerator,
    codebook: ChirpCodebook,
    index_bits: usize,
    /// Rolling window; the low `index_bits` bits hold the most recent chips,
    /// newest in the least significant position.
    window: usize,
    symbols_emitted: usize,
}

impl ChirpStream {
    pub fn new(gen: LppnGenerator, codebook: ChirpCodebook) -> Result<Self> {
        let index_bits = codebook.index_bits()?;
        Ok(Self {
            gen,
            codebook,
            index_bits,
            window: usize::MAX, // pre-stream chips read as 1
            symbols_emitted: 0,
        })
    }

    pub fn codebook(&self) -> &ChirpCodebook {
        &self.codebook
    }

    /// Number of chirp vectors emitted so far.
    pub fn symbols_emitted(&self) -> usize {
        self.symbols_emitted
    }

    /// The underlying generator, positioned before the next symbol's chips.
    pub fn generator(&self) -> &LppnGenerator {
        &self.gen
    }

    #[inline]
    fn next_index(&mut self) -> usize {
        let chip = self.gen.next() as usize;
        self.window = (self.window << 1) | chip;
        if self.index_bits == 0 {
            0
        } else {
            self.window & ((1usize << self.index_bits) - 1)
        }
    }

    /// Produces the `c2` vector for the next symbol, consuming `n` chips.
    pub fn next_c2_vector(&mut self, n: usize) -> ChirpVector {
        let mut c2 = Vec::with_capacity(n);
        for _ in 0..n {
            let k = self.next_index();
            c2.push(self.codebook.value(k));
        }
        let symbol_index = self.symbols_emitted;
        self.symbols_emitted += 1;
        ChirpVector { symbol_index, c2 }
    }
}
