//! Simulator and analysis toolkit for BB84 over a four-letter alphabet.
//!
//! Alice sends qu-quarts prepared in one of two mutually unbiased bases (ψ,
//! φ); Bob measures in a random one of them; the rounds with matching bases
//! form a key of letters α, β, γ, δ carrying two bits each. The crate covers
//! the qubit case as well, so the two can be compared.
//!
//! - [`qudit`]: bases, overlaps and Born-rule measurement.
//! - [`protocol`]: the session engine, sifting and QTER estimation.
//! - [`eavesdrop`]: intercept/resend and intermediate-basis attacks, with
//!   exact predictions and empirical statistics.
//! - [`analytics`]: Shannon information, exact strategy tables and the
//!   letter→bit mapping analysis.
//! - [`photonic`]: the time-bin interferometer model and its equivalence
//!   with the abstract protocol.
//! - [`cli`]: configuration parsing and report generation behind the binary.

pub mod analytics;
pub mod cli;
pub mod eavesdrop;
pub mod error;
pub mod exact;
pub(crate) mod exec;
pub mod photonic;
pub mod protocol;
pub mod qudit;
pub mod rng;

pub use error::{QkdError, Result};
