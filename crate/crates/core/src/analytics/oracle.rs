use num_rational::Rational64;
use num_traits::One;
use serde::Serialize;

use crate::eavesdrop::{
    predicted_eve_accuracy, predicted_eve_info, predicted_qter, EveKind, EveStrategy,
};
use crate::error::Result;
use crate::exact::QSqrt2;
use crate::qudit::Dimension;

/// Exact predictions for one strategy at one dimension.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StrategyRow {
    pub dim: Dimension,
    pub kind: EveKind,
    #[serde(serialize_with = "ser_display")]
    pub qter: Rational64,
    #[serde(serialize_with = "ser_display")]
    pub bob_correct: Rational64,
    /// Eve's Shannon information per transmitted symbol, in bits.
    pub eve_info: f64,
    #[serde(serialize_with = "ser_display_opt")]
    pub eve_accuracy: Option<QSqrt2>,
    /// Error rate quoted in the original analysis, where it differs from the exact value.
    pub published_qter: Option<&'static str>,
}

impl StrategyRow {
    /// The quoted figure, when it disagrees with the exact enumeration.
    pub fn discrepancy(&self) -> Option<&'static str> {
        let quoted = self.published_qter?;
        (quoted != self.qter.to_string()).then_some(quoted)
    }
}

fn ser_display<T: std::fmt::Display, S: serde::Serializer>(
    v: &T,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

fn ser_display_opt<T: std::fmt::Display, S: serde::Serializer>(
    v: &Option<T>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => s.collect_str(v),
        None => s.serialize_none(),
    }
}

fn published(kind: EveKind, dim: Dimension) -> Option<&'static str> {
    match (kind, dim) {
        (EveKind::InterceptResend, Dimension::Four) => Some("3/8"),
        (EveKind::InterceptResend, Dimension::Two) => Some("1/4"),
        (EveKind::Intermediate, Dimension::Four) => Some("3/8"),
        (EveKind::Intermediate, Dimension::Two) => Some("1/4"),
        (EveKind::None, _) => None,
    }
}

/// Exact error rate, Eve information and Eve accuracy for every strategy at
/// `dim`, by enumeration over all branches in ℚ(√2).
pub fn oracle_strategy_table(dim: Dimension) -> Result<Vec<StrategyRow>> {
    [
        EveKind::None,
        EveKind::InterceptResend,
        EveKind::Intermediate,
    ]
    .into_iter()
    .map(|kind| {
        let s = EveStrategy::of_kind(kind);
        let qter = predicted_qter(&s, dim)?;
        Ok(StrategyRow {
            dim,
            kind,
            qter,
            bob_correct: Rational64::one() - qter,
            eve_info: predicted_eve_info(&s, dim)?,
            eve_accuracy: predicted_eve_accuracy(&s, dim)?,
            published_qter: published(kind, dim),
        })
    })
    .collect()
}

/// Eve's information on a key of fixed size, qu-quarts against qubits.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossDimensionRow {
    pub kind: EveKind,
    /// Bits Eve learns per qu-quart.
    pub quart_info_per_symbol: f64,
    /// Bits Eve learns per qubit.
    pub qubit_info_per_symbol: f64,
    /// Bits Eve learns on `n` qu-quarts, in units of `n`.
    pub quart_string_info_per_n: f64,
    /// Bits Eve learns on the `2n` qubits carrying the same key material, in units of `n`.
    pub qubit_string_info_per_n: f64,
    #[serde(serialize_with = "ser_display")]
    pub quart_qter: Rational64,
    #[serde(serialize_with = "ser_display")]
    pub qubit_qter: Rational64,
}

/// Compares both dimensions at equal key material: `n` qu-quarts against `2n` qubits.
pub fn cross_dimension_comparison() -> Result<Vec<CrossDimensionRow>> {
    [EveKind::InterceptResend, EveKind::Intermediate]
        .into_iter()
        .map(|kind| {
            let s = EveStrategy::of_kind(kind);
            let i4 = predicted_eve_info(&s, Dimension::Four)?;
            let i2 = predicted_eve_info(&s, Dimension::Two)?;
            let ratio =
                f64::from(Dimension::Four.bits_per_symbol() / Dimension::Two.bits_per_symbol());
            Ok(CrossDimensionRow {
                kind,
                quart_info_per_symbol: i4,
                qubit_info_per_symbol: i2,
                quart_string_info_per_n: i4,
                qubit_string_info_per_n: ratio * i2,
                quart_qter: predicted_qter(&s, Dimension::Four)?,
                qubit_qter: predicted_qter(&s, Dimension::Two)?,
            })
        })
        .collect()
}
