//! Binary systematic network coding.
//!
//! * [`gf2`]: bit-packed GF(2) vectors and matrices.
//! * [`codecs`]: systematic, straightforward and ordered uncoded encoders;
//!   the progressive decoder, a batch full-rank decoder and a reference
//!   decodability oracle.
//! * [`analysis`]: closed-form decoding probabilities and delay metrics,
//!   generic over the scalar type.
//! * [`simulator`]: erasure-channel Monte Carlo and decoder timing.

pub mod analysis;
pub mod codecs;
pub mod gf2;
pub mod scalar;
pub mod simulator;

pub use codecs::{DecoderState, Scheme, SourceMessage, TransmittedPacket};
pub use gf2::{BitMatrix, BitVector, CodingVector};
pub use scalar::{Probability, Rational};

/// Analysis parameters in double precision.
pub type Params64 = analysis::AnalysisParams<f64>;
/// Analysis parameters in exact rational arithmetic.
pub type ExactParams = analysis::AnalysisParams<Rational>;
/// Probability estimate in double precision.
pub type Estimate64 = analysis::Estimate<f64>;
/// Probability estimate in exact rational arithmetic.
pub type ExactEstimate = analysis::Estimate<Rational>;
