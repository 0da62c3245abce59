//! Information measures, exact strategy tables and the letter→bit mapping.

mod encoding;
mod oracle;
mod plugin;

pub use encoding::{
    iid_bit_flip_control, map_key_to_bits, mapping_error_analysis, BitEncoding, MappingReport,
};
pub use oracle::{
    cross_dimension_comparison, oracle_strategy_table, CrossDimensionRow, StrategyRow,
};
pub use plugin::{plugin_mutual_information, ContingencyTable};

use serde::{Deserialize, Serialize};

use crate::error::{QkdError, Result};
use crate::qudit::Dimension;

/// Tolerance on the total mass of a probability vector.
pub const PROB_SUM_TOL: f64 = 1e-12;

/// Non-negative weights summing to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if let Some(bad) = entries
            .iter()
            .find(|p| p.is_nan() || **p < 0.0 || !p.is_finite())
        {
            return Err(QkdError::InvalidProbability(format!(
                "entry {bad} is negative or not finite"
            )));
        }
        let total: f64 = entries.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(QkdError::InvalidProbability(format!(
                "entries sum to {total}"
            )));
        }
        Ok(Self(entries))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }
}

/// `Σ p log₂ p` with `0 log 0 = 0`; non-positive.
pub fn signed_entropy(p: &[f64]) -> f64 {
    p.iter().filter(|x| **x > 0.0).map(|x| x * x.log2()).sum()
}

/// Shannon information of an outcome distribution: `log₂ d + Σ p log₂ p`.
///
/// Ranges from 0 (uniform) to `log₂ d` (point mass).
pub fn shannon_information(p: &ProbabilityVector, dim: Dimension) -> Result<f64> {
    if p.entries().len() != dim.size() {
        return Err(QkdError::DimensionMismatch {
            left: p.entries().len(),
            right: dim.size(),
        });
    }
    Ok(f64::from(dim.bits_per_symbol()) + signed_entropy(p.entries()))
}

/// Bits carried by one sifted symbol.
pub fn per_photon_information(dim: Dimension) -> f64 {
    f64::from(dim.bits_per_symbol())
}

/// Key material, in bits, of `sifted_symbols` symbols.
pub fn key_material_bits(sifted_symbols: usize, dim: Dimension) -> usize {
    sifted_symbols * dim.bits_per_symbol() as usize
}
