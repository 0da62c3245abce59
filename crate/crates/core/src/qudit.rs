//! State vectors, the ψ/φ/θ bases and Born-rule measurement for qubits and
//! qu-quarts.
//!
//! Basis vectors are stored with their first nonzero amplitude real and
//! positive. Global phase carries no meaning here, so comparisons between
//! states go through overlap moduli rather than raw amplitudes.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QkdError, Result};

/// Tolerance for normalization and orthonormality checks.
pub const STATE_TOL: f64 = 1e-10;
/// Tolerance on the total outcome probability before a state is treated as corrupted.
pub const BORN_TOL: f64 = 1e-9;

/// Hilbert-space dimension of a transmitted symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub enum Dimension {
    Two,
    Four,
}

impl Dimension {
    pub fn size(self) -> usize {
        match self {
            Dimension::Two => 2,
            Dimension::Four => 4,
        }
    }

    /// Bits of key material carried by one sifted symbol.
    pub fn bits_per_symbol(self) -> u32 {
        match self {
            Dimension::Two => 1,
            Dimension::Four => 2,
        }
    }

    pub fn letters(self) -> impl Iterator<Item = Letter> + Clone {
        (0..self.size() as u8).map(Letter)
    }
}

impl TryFrom<usize> for Dimension {
    type Error = QkdError;

    fn try_from(d: usize) -> Result<Self> {
        match d {
            2 => Ok(Dimension::Two),
            4 => Ok(Dimension::Four),
            other => Err(QkdError::UnsupportedDimension(other)),
        }
    }
}

impl From<Dimension> for usize {
    fn from(d: Dimension) -> usize {
        d.size()
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.size())
    }
}

const GREEK: [&str; 4] = ["α", "β", "γ", "δ"];
const ASCII: [&str; 4] = ["alpha", "beta", "gamma", "delta"];

/// A symbol of the key alphabet: α, β, γ, δ (or α, β for qubits).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Letter(pub u8);

impl Letter {
    pub const ALPHA: Letter = Letter(0);
    pub const BETA: Letter = Letter(1);
    pub const GAMMA: Letter = Letter(2);
    pub const DELTA: Letter = Letter(3);

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Checked constructor against a dimension.
    pub fn checked(index: usize, dim: Dimension) -> Result<Letter> {
        if index < dim.size() {
            Ok(Letter(index as u8))
        } else {
            Err(QkdError::LetterOutOfRange {
                letter: index,
                dim: dim.size(),
            })
        }
    }

    pub fn ascii_name(self) -> &'static str {
        ASCII.get(self.index()).copied().unwrap_or("?")
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match GREEK.get(self.index()) {
            Some(name) => f.write_str(name),
            None => write!(f, "#{}", self.0),
        }
    }
}

impl FromStr for Letter {
    type Err = QkdError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        GREEK
            .iter()
            .position(|g| *g == s)
            .or_else(|| ASCII.iter().position(|a| a.eq_ignore_ascii_case(s)))
            .map(|i| Letter(i as u8))
            .ok_or_else(|| QkdError::Parse(format!("unknown letter {s:?}")))
    }
}

/// Which of the three bases a vector belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisLabel {
    /// Computational (time) basis.
    Psi,
    /// Conjugate (energy) basis, mutually unbiased with ψ.
    Phi,
    /// Intermediate basis between ψ and φ.
    Theta,
}

impl BasisLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            BasisLabel::Psi => "psi",
            BasisLabel::Phi => "phi",
            BasisLabel::Theta => "theta",
        }
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BasisLabel {
    type Err = QkdError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "psi" | "ψ" | "time" => Ok(BasisLabel::Psi),
            "phi" | "φ" | "energy" => Ok(BasisLabel::Phi),
            "theta" | "θ" | "intermediate" => Ok(BasisLabel::Theta),
            other => Err(QkdError::Parse(format!("unknown basis {other:?}"))),
        }
    }
}

/// Normalized complex amplitude vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Wraps amplitudes that must already be normalized within [`STATE_TOL`].
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        let norm = squared_norm(&amps);
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(QkdError::NotNormalized(norm));
        }
        Ok(Self { amps })
    }

    /// Scales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(amps: Vec<Complex64>) -> Result<Self> {
        let norm = squared_norm(&amps);
        if norm <= f64::EPSILON {
            return Err(QkdError::NotNormalized(norm));
        }
        let scale = norm.sqrt().recip();
        Ok(Self {
            amps: amps.into_iter().map(|a| a * scale).collect(),
        })
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::normalized(amps.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    /// Rotates the global phase so the first nonzero amplitude is real and positive.
    fn canonical_phase(mut self) -> Self {
        if let Some(first) = self.amps.iter().find(|a| a.norm() > STATE_TOL).copied() {
            let phase = first.conj() / first.norm();
            for a in &mut self.amps {
                *a *= phase;
            }
        }
        self
    }
}

fn squared_norm(amps: &[Complex64]) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum()
}

/// `⟨a|b⟩`, conjugate-linear in `a`.
pub fn overlap(a: &StateVector, b: &StateVector) -> Result<Complex64> {
    if a.dim() != b.dim() {
        return Err(QkdError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(a.amps.iter().zip(&b.amps).map(|(x, y)| x.conj() * y).sum())
}

/// Ordered orthonormal family of `d` vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisSet {
    label: BasisLabel,
    dim: Dimension,
    vectors: Vec<StateVector>,
}

impl BasisSet {
    fn from_rows(label: BasisLabel, dim: Dimension, rows: &[&[f64]]) -> Self {
        let vectors = rows
            .iter()
            .map(|row| {
                StateVector::from_real(row)
                    .expect("nonzero basis row")
                    .canonical_phase()
            })
            .collect();
        Self {
            label,
            dim,
            vectors,
        }
    }

    pub fn label(&self) -> BasisLabel {
        self.label
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn vectors(&self) -> &[StateVector] {
        &self.vectors
    }

    pub fn vector(&self, letter: Letter) -> Result<&StateVector> {
        self.vectors
            .get(letter.index())
            .ok_or(QkdError::LetterOutOfRange {
                letter: letter.index(),
                dim: self.dim.size(),
            })
    }

    /// Largest deviation of `|⟨v_i|v_j⟩|` from `δ_ij`.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in self.vectors.iter().enumerate() {
            for (j, b) in self.vectors.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                let m = overlap(a, b).map(|c| c.norm()).unwrap_or(f64::INFINITY);
                worst = worst.max((m - target).abs());
            }
        }
        worst
    }
}

/// Computational basis: the k-th vector is 1 in slot k.
pub fn build_psi_basis(d: usize) -> Result<BasisSet> {
    let dim = Dimension::try_from(d)?;
    let vectors = (0..d)
        .map(|k| {
            let mut amps = vec![Complex64::new(0.0, 0.0); d];
            amps[k] = Complex64::new(1.0, 0.0);
            StateVector { amps }
        })
        .collect();
    Ok(BasisSet {
        label: BasisLabel::Psi,
        dim,
        vectors,
    })
}

/// Conjugate basis with all overlaps `1/√d` against ψ.
pub fn build_phi_basis(d: usize) -> Result<BasisSet> {
    let dim = Dimension::try_from(d)?;
    let basis = match dim {
        Dimension::Two => BasisSet::from_rows(BasisLabel::Phi, dim, &[&[1.0, 1.0], &[1.0, -1.0]]),
        Dimension::Four => BasisSet::from_rows(
            BasisLabel::Phi,
            dim,
            &[
                &[1.0, 1.0, 1.0, 1.0],
                &[1.0, -1.0, 1.0, -1.0],
                &[1.0, -1.0, -1.0, 1.0],
                &[1.0, 1.0, -1.0, -1.0],
            ],
        ),
    };
    Ok(basis)
}

/// Intermediate basis: θ_i has equal, maximal overlap with ψ_i and φ_i.
///
/// For qu-quarts the coefficients are (3, ±1, ±1, ±1)/(2√3) with the sign
/// pattern of the matching φ vector. For qubits θ_α sits at π/8, halfway
/// between ψ_α and φ_α.
pub fn build_theta_basis(d: usize) -> Result<BasisSet> {
    let dim = Dimension::try_from(d)?;
    let basis = match dim {
        Dimension::Two => {
            let (s, c) = std::f64::consts::FRAC_PI_8.sin_cos();
            BasisSet::from_rows(BasisLabel::Theta, dim, &[&[c, s], &[-s, c]])
        }
        Dimension::Four => BasisSet::from_rows(
            BasisLabel::Theta,
            dim,
            &[
                &[3.0, 1.0, 1.0, 1.0],
                &[1.0, -3.0, 1.0, -1.0],
                &[1.0, -1.0, -3.0, 1.0],
                &[1.0, 1.0, -1.0, -3.0],
            ],
        ),
    };
    Ok(basis)
}

/// Builds a basis by label.
pub fn build_basis(label: BasisLabel, d: usize) -> Result<BasisSet> {
    match label {
        BasisLabel::Psi => build_psi_basis(d),
        BasisLabel::Phi => build_phi_basis(d),
        BasisLabel::Theta => build_theta_basis(d),
    }
}

/// The three bases of one dimension, built once and shared across rounds.
#[derive(Clone, Debug)]
pub struct BasisCatalog {
    dim: Dimension,
    psi: BasisSet,
    phi: BasisSet,
    theta: BasisSet,
}

impl BasisCatalog {
    pub fn new(dim: Dimension) -> Self {
        let d = dim.size();
        Self {
            dim,
            psi: build_psi_basis(d).expect("supported dimension"),
            phi: build_phi_basis(d).expect("supported dimension"),
            theta: build_theta_basis(d).expect("supported dimension"),
        }
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn get(&self, label: BasisLabel) -> &BasisSet {
        match label {
            BasisLabel::Psi => &self.psi,
            BasisLabel::Phi => &self.phi,
            BasisLabel::Theta => &self.theta,
        }
    }
}

/// `(|⟨basis_k|state⟩|²)_k`.
pub fn exact_outcome_distribution(state: &StateVector, basis: &BasisSet) -> Result<Vec<f64>> {
    if state.dim() != basis.dim().size() {
        return Err(QkdError::DimensionMismatch {
            left: state.dim(),
            right: basis.dim().size(),
        });
    }
    basis
        .vectors
        .iter()
        .map(|v| overlap(v, state).map(|c| c.norm_sqr()))
        .collect()
}

/// Picks an index from `probs` by cumulative-sum inversion of `u ∈ [0, 1)`.
///
/// The last interval absorbs any rounding residue.
pub fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.len().saturating_sub(1)
}

/// Projective measurement of `state` in `basis` driven by the uniform draw `u`.
///
/// Returns the observed letter and the post-measurement state, which is the
/// corresponding basis vector.
pub fn measure(state: &StateVector, basis: &BasisSet, u: f64) -> Result<(Letter, StateVector)> {
    let probs = exact_outcome_distribution(state, basis)?;
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > BORN_TOL {
        return Err(QkdError::CorruptedState(total));
    }
    let k = sample_index(&probs, u);
    Ok((Letter(k as u8), basis.vectors[k].clone()))
}
