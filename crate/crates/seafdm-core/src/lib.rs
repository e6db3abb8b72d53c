//! SE-AFDM baseband library.
//!
//! Building blocks for a secure affine frequency division multiplexing
//! system in which the DAFT pre-chirp parameter `c2` is re-drawn per
//! subcarrier from a public codebook under the control of a long-period
//! pseudo-noise (LPPN) sequence. The crate covers:
//!
//! - [`lppn`]: the four-register shortened-cycle LPPN generator with
//!   precession, state serialization and m-sequence utilities,
//! - [`codebook`]: the uniform `c2` codebook and the chip-to-index mapping,
//! - [`modem`]: IDAFT/DAFT with per-subcarrier `c2`, chirp-periodic prefix
//!   handling and Gray-coded QAM,
//! - [`channel`]: the P-path doubly-dispersive channel, both as a
//!   time-domain simulator and as the closed-form effective DAFT-domain
//!   matrix,
//! - [`linalg`]: dense and circularly-banded complex solvers used by the
//!   equalizer,
//! - [`equalizer`]: MMSE symbol estimation, the embedded-pilot channel
//!   estimator and hard-decision detection,
//! - [`frame`]: the three-block frame format, the three-stage receiver
//!   state machine for the legitimate receiver and eavesdropper models,
//! - [`sinr`]: closed-form and Monte-Carlo evaluation of the eavesdropper
//!   output SINR and the search-interval error model.

// Index-heavy DSP kernels read better as explicit loops, and the negated
// float comparisons are NaN-aware on purpose.
#![allow(clippy::needless_range_loop)]
#![allow(clippy::too_many_arguments)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::should_implement_trait)]
#![allow(clippy::manual_is_multiple_of)]

pub mod channel;
pub mod codebook;
pub mod equalizer;
pub mod error;
pub mod frame;
pub mod linalg;
pub mod lppn;
pub mod modem;
pub mod sinr;

pub use error::{Error, Result};

/// Complex baseband sample type used throughout the crate.
pub type Cf64 = num_complex::Complex<f64>;
