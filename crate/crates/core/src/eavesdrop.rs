//! Eavesdropping strategies: in-flight state transformations, exact
//! predictions of their cost and yield, and empirical statistics from a
//! transcript.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::Zero;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analytics::{shannon_information, ContingencyTable, ProbabilityVector};
use crate::error::{QkdError, Result};
use crate::exact::{enumerate_attack, AttackEnumeration, QSqrt2};
use crate::protocol::{SiftedKeys, Transcript};
use crate::qudit::{measure, BasisCatalog, BasisLabel, Dimension, Letter, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EveKind {
    None,
    /// Measure in a basis drawn from the pool, forward the observed eigenstate.
    InterceptResend,
    /// Measure in the θ basis, forward the observed θ vector.
    Intermediate,
}

impl EveKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EveKind::None => "none",
            EveKind::InterceptResend => "intercept-resend",
            EveKind::Intermediate => "intermediate",
        }
    }
}

impl fmt::Display for EveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EveKind {
    type Err = QkdError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "none" => Ok(EveKind::None),
            "intercept-resend" | "intercept/resend" => Ok(EveKind::InterceptResend),
            "intermediate" | "breidbart" => Ok(EveKind::Intermediate),
            other => Err(QkdError::Parse(format!(
                "unknown eavesdropping strategy {other:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EveStrategy {
    pub kind: EveKind,
    /// Bases sampled uniformly by intercept/resend.
    pub basis_pool: Vec<BasisLabel>,
    /// Probability that a given round is intercepted.
    pub intercept_fraction: f64,
}

impl Default for EveStrategy {
    fn default() -> Self {
        Self::none()
    }
}

impl EveStrategy {
    pub fn none() -> Self {
        Self::of_kind(EveKind::None)
    }

    pub fn intercept_resend() -> Self {
        Self::of_kind(EveKind::InterceptResend)
    }

    pub fn intermediate() -> Self {
        Self::of_kind(EveKind::Intermediate)
    }

    pub fn of_kind(kind: EveKind) -> Self {
        Self {
            kind,
            basis_pool: vec![BasisLabel::Psi, BasisLabel::Phi],
            intercept_fraction: 1.0,
        }
    }

    pub fn with_fraction(mut self, fraction: f64) -> Self {
        self.intercept_fraction = fraction;
        self
    }

    pub fn with_pool(mut self, pool: Vec<BasisLabel>) -> Self {
        self.basis_pool = pool;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.intercept_fraction) {
            return Err(QkdError::InvalidConfig(format!(
                "intercept fraction {} outside [0, 1]",
                self.intercept_fraction
            )));
        }
        if self.kind == EveKind::InterceptResend && self.basis_pool.is_empty() {
            return Err(QkdError::InvalidConfig(
                "intercept/resend needs a non-empty basis pool".into(),
            ));
        }
        Ok(())
    }

    /// Bases Eve may measure in, or `None` when she never acts.
    fn measurement_bases(&self) -> Option<Vec<BasisLabel>> {
        match self.kind {
            EveKind::None => None,
            EveKind::InterceptResend => Some(self.basis_pool.clone()),
            EveKind::Intermediate => Some(vec![BasisLabel::Theta]),
        }
    }
}

/// What Eve measured in a round she intercepted.
///
/// Kept for analysis only; a real eavesdropper would never publish it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EveRecord {
    pub basis_used: BasisLabel,
    pub letter_observed: Letter,
}

/// Applies Eve's action to the in-flight state.
///
/// Returns the state forwarded to Bob and Eve's record if she intercepted.
pub fn apply_strategy<R: Rng + ?Sized>(
    strategy: &EveStrategy,
    catalog: &BasisCatalog,
    state: &StateVector,
    rng: &mut R,
) -> Result<(StateVector, Option<EveRecord>)> {
    if state.dim() != catalog.dim().size() {
        return Err(QkdError::DimensionMismatch {
            left: catalog.dim().size(),
            right: state.dim(),
        });
    }
    let Some(bases) = strategy.measurement_bases() else {
        return Ok((state.clone(), None));
    };
    let intercept: f64 = rng.gen();
    if intercept >= strategy.intercept_fraction {
        return Ok((state.clone(), None));
    }
    let pick: f64 = rng.gen();
    let basis_used = bases[((pick * bases.len() as f64) as usize).min(bases.len() - 1)];
    let (letter_observed, forwarded) = measure(state, catalog.get(basis_used), rng.gen())?;
    Ok((
        forwarded,
        Some(EveRecord {
            basis_used,
            letter_observed,
        }),
    ))
}

fn enumerate(strategy: &EveStrategy, dim: Dimension) -> Result<Option<AttackEnumeration>> {
    strategy.validate()?;
    match strategy.measurement_bases() {
        None => Ok(None),
        Some(bases) => enumerate_attack(&bases, dim).map(Some),
    }
}

fn exact_fraction(f: f64) -> Result<Rational64> {
    Rational64::approximate_float(f).ok_or_else(|| {
        QkdError::InvalidConfig(format!("intercept fraction {f} has no rational form"))
    })
}

/// Exact sifted-key error probability caused by the strategy.
pub fn predicted_qter(strategy: &EveStrategy, dim: Dimension) -> Result<Rational64> {
    let Some(e) = enumerate(strategy, dim)? else {
        return Ok(Rational64::zero());
    };
    let error = e.error.as_rational().ok_or_else(|| {
        QkdError::UnsupportedStrategy(format!(
            "{} at d={dim} has an irrational error rate {}",
            strategy.kind, e.error
        ))
    })?;
    Ok(error * exact_fraction(strategy.intercept_fraction)?)
}

/// Eve's Shannon information per transmitted symbol, averaged over her
/// choices and over rounds she leaves alone (which yield nothing).
pub fn predicted_eve_info(strategy: &EveStrategy, dim: Dimension) -> Result<f64> {
    let Some(e) = enumerate(strategy, dim)? else {
        return Ok(0.0);
    };
    let mut info = 0.0;
    for b in &e.branches {
        let p = ProbabilityVector::new(b.eve_distribution.iter().map(QSqrt2::to_f64).collect())?;
        info += b.weight.to_f64() * shannon_information(&p, dim)?;
    }
    Ok(info * strategy.intercept_fraction)
}

/// Probability that Eve's letter equals Alice's in an intercepted sifted round.
pub fn predicted_eve_accuracy(strategy: &EveStrategy, dim: Dimension) -> Result<Option<QSqrt2>> {
    Ok(enumerate(strategy, dim)?.map(|e| e.eve_correct))
}

/// Sample statistics of Eve's record over the sifted rounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EveEmpiricalStats {
    /// Sifted rounds Eve intercepted.
    pub intercepted: usize,
    /// Fraction of intercepted sifted rounds where Eve's letter equals Alice's.
    pub eve_letter_accuracy: f64,
    /// Plug-in mutual information between Alice's and Eve's letters, in bits
    /// per sifted symbol.
    pub eve_info_estimate: f64,
}

/// Estimates Eve's accuracy and information from the transcript.
///
/// The information estimate conditions on the bases, which are public after
/// sifting: rounds are grouped by (Alice's basis, Eve's basis), a plug-in
/// mutual information is computed within each group, and groups are weighted
/// by size. Sifted rounds Eve did not touch count as zero information.
pub fn eve_empirical_stats(
    transcript: &Transcript,
    sifted: &SiftedKeys,
) -> Result<EveEmpiricalStats> {
    let d = transcript.config().dim.size();
    let mut strata: BTreeMap<(BasisLabel, BasisLabel), ContingencyTable> = BTreeMap::new();
    let mut correct = 0usize;
    let mut intercepted = 0usize;
    for &i in sifted.indices() {
        let round = &transcript.rounds()[i];
        if let Some(rec) = round.eve {
            intercepted += 1;
            correct += (rec.letter_observed == round.alice_letter) as usize;
            strata
                .entry((round.alice_basis, rec.basis_used))
                .or_insert_with(|| ContingencyTable::new(d))
                .add(round.alice_letter.index(), rec.letter_observed.index());
        }
    }
    if intercepted == 0 {
        return Err(QkdError::NoEveRecords);
    }
    let total = sifted.len() as f64;
    let info = strata
        .values()
        .map(|t| t.total() as f64 / total * t.mutual_information())
        .sum();
    Ok(EveEmpiricalStats {
        intercepted,
        eve_letter_accuracy: correct as f64 / intercepted as f64,
        eve_info_estimate: info,
    })
}
