//! Time-bin realization of the qu-quart protocol.
//!
//! Alice's photon leaves at `t_0` and is routed into one of four delay lines
//! (time basis) or split by a symmetric multiport into all four with per-arm
//! phases (energy basis). Bob either reads the arrival slot or undoes the
//! delays, applies his own phases and recombines the four pulses on the same
//! multiport, one detector per output port.
//!
//! The 4×4 multiport is two layers of 2×2 couplers `(1/√2)[[1, i], [i, 1]]`:
//! the first on port pairs (0,1) and (2,3), the second on (0,3) and (1,2).
//! Alice injects into port 1. With this wiring Alice's phases (0, π/2, 0, −π/2)
//! prepare φ_α and Bob's phases (0, −π/2, 0, π/2) send each φ letter to its
//! own port. Detector `D_j` is the port that φ_j lights up, listed in
//! [`DETECTOR_PORTS`], so the φ routing matrix is the identity.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QkdError, Result};
use crate::qudit::{
    exact_outcome_distribution, sample_index, BasisCatalog, BasisLabel, Dimension, Letter,
    StateVector, STATE_TOL,
};
use crate::rng::round_stream;

/// Multiport input used by Alice's energy-basis preparation.
pub const ALICE_INPUT_PORT: usize = 1;
/// Output port that feeds detector `D_j`.
pub const DETECTOR_PORTS: [usize; 4] = [3, 1, 2, 0];

type Matrix4 = [[Complex64; 4]; 4];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Four phases in radians, kept in `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSettings([f64; 4]);

impl PhaseSettings {
    pub fn new(phases: [f64; 4]) -> Result<Self> {
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(QkdError::InvalidConfig(format!(
                "phases must be finite: {phases:?}"
            )));
        }
        Ok(Self(phases.map(|p| p.rem_euclid(TAU))))
    }

    pub fn zero() -> Self {
        Self([0.0; 4])
    }

    pub fn phases(&self) -> [f64; 4] {
        self.0
    }

    fn factors(&self) -> [Complex64; 4] {
        self.0.map(|p| Complex64::from_polar(1.0, p))
    }

    /// Bob's analyzer phases α_B..δ_B = (0, −π/2, 0, π/2).
    pub fn bob_default() -> Self {
        Self::new([0.0, -FRAC_PI_2, 0.0, FRAC_PI_2]).expect("finite")
    }

    /// Alice's phases α_A..δ_A preparing φ_letter.
    ///
    /// φ_α uses (0, π/2, 0, −π/2); the others follow from the φ sign patterns.
    pub fn alice_for(letter: Letter) -> Result<Self> {
        let table = [
            [0.0, FRAC_PI_2, 0.0, -FRAC_PI_2],
            [0.0, -FRAC_PI_2, 0.0, FRAC_PI_2],
            [0.0, -FRAC_PI_2, PI, -FRAC_PI_2],
            [0.0, FRAC_PI_2, PI, FRAC_PI_2],
        ];
        let row = table
            .get(letter.index())
            .ok_or(QkdError::LetterOutOfRange {
                letter: letter.index(),
                dim: 4,
            })?;
        Self::new(*row)
    }

    pub fn alice_table() -> [PhaseSettings; 4] {
        [0u8, 1, 2, 3].map(|l| Self::alice_for(Letter(l)).expect("letter in range"))
    }
}

impl fmt::Display for PhaseSettings {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|p| format!("{p:.6}")).collect();
        f.write_str(&parts.join(","))
    }
}

/// Symmetric 4×4 multiport.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiportCoupler {
    unitary: Matrix4,
}

fn coupler_layer(pairs: [(usize, usize); 2]) -> Matrix4 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = [[c(0.0, 0.0); 4]; 4];
    for (a, b) in pairs {
        m[a][a] = c(s, 0.0);
        m[b][b] = c(s, 0.0);
        m[a][b] = c(0.0, s);
        m[b][a] = c(0.0, s);
    }
    m
}

fn matmul(a: &Matrix4, b: &Matrix4) -> Matrix4 {
    let mut out = [[c(0.0, 0.0); 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn apply(m: &Matrix4, v: &[Complex64; 4]) -> [Complex64; 4] {
    let mut out = [c(0.0, 0.0); 4];
    for (i, x) in out.iter_mut().enumerate() {
        *x = (0..4).map(|k| m[i][k] * v[k]).sum();
    }
    out
}

impl MultiportCoupler {
    pub fn unitary(&self) -> &Matrix4 {
        &self.unitary
    }

    /// Largest entry of `|U·U† − I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let u = &self.unitary;
        let mut worst = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                let s: Complex64 = (0..4).map(|k| u[i][k] * u[j][k].conj()).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((s - c(target, 0.0)).norm());
            }
        }
        worst
    }

    /// Largest deviation of `|U_jk|` from 1/2.
    pub fn symmetry_defect(&self) -> f64 {
        self.unitary
            .iter()
            .flatten()
            .map(|x| (x.norm() - 0.5).abs())
            .fold(0.0, f64::max)
    }

    /// Output amplitudes for a single photon in input port `port`.
    pub fn column(&self, port: usize) -> [Complex64; 4] {
        [0, 1, 2, 3].map(|k| self.unitary[k][port])
    }
}

/// Two coupler layers with the crossing described in the module docs.
pub fn build_multiport() -> MultiportCoupler {
    let first = coupler_layer([(0, 1), (2, 3)]);
    let second = coupler_layer([(0, 3), (1, 2)]);
    MultiportCoupler {
        unitary: matmul(&second, &first),
    }
}

/// Photon amplitudes over the four arrival slots t_α..t_δ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeBinState {
    amps: [Complex64; 4],
}

impl TimeBinState {
    pub fn new(amps: [Complex64; 4]) -> Result<Self> {
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(QkdError::NotNormalized(norm));
        }
        Ok(Self { amps })
    }

    pub fn amps(&self) -> &[Complex64; 4] {
        &self.amps
    }

    /// The same amplitudes as an abstract state vector over ψ_α..ψ_δ.
    pub fn to_state_vector(&self) -> StateVector {
        StateVector::new(self.amps.to_vec()).expect("time-bin states are normalized")
    }
}

/// Which analyzer or preparation arm is in use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhotonicBasis {
    /// Delay-line switch / arrival-time clock (ψ).
    Time,
    /// Multiport with phases (φ).
    Energy,
}

impl PhotonicBasis {
    pub fn abstract_label(self) -> BasisLabel {
        match self {
            PhotonicBasis::Time => BasisLabel::Psi,
            PhotonicBasis::Energy => BasisLabel::Phi,
        }
    }

    pub fn from_label(label: BasisLabel) -> Result<Self> {
        match label {
            BasisLabel::Psi => Ok(PhotonicBasis::Time),
            BasisLabel::Phi => Ok(PhotonicBasis::Energy),
            BasisLabel::Theta => Err(QkdError::UnsupportedStrategy(
                "no time-bin analyzer for the θ basis".into(),
            )),
        }
    }
}

/// Detector that fired: `D_letter` behind the multiport, or the arrival slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DetectorOutcome {
    Slot(Letter),
    Detector(Letter),
}

impl DetectorOutcome {
    pub fn letter(self) -> Letter {
        match self {
            DetectorOutcome::Slot(l) | DetectorOutcome::Detector(l) => l,
        }
    }
}

fn check_letter(letter: Letter) -> Result<()> {
    if letter.index() < 4 {
        Ok(())
    } else {
        Err(QkdError::LetterOutOfRange {
            letter: letter.index(),
            dim: 4,
        })
    }
}

/// Alice's photonic preparation.
///
/// Time basis puts the photon in slot `letter`. Energy basis splits it on the
/// multiport and applies `settings` (or the stored phases for `letter` when
/// `None`) to the four arms.
pub fn alice_prepare_photonic(
    coupler: &MultiportCoupler,
    basis: PhotonicBasis,
    letter: Letter,
    settings: Option<&PhaseSettings>,
) -> Result<TimeBinState> {
    check_letter(letter)?;
    match basis {
        PhotonicBasis::Time => {
            let mut amps = [c(0.0, 0.0); 4];
            amps[letter.index()] = c(1.0, 0.0);
            TimeBinState::new(amps)
        }
        PhotonicBasis::Energy => {
            let phases = match settings {
                Some(s) => *s,
                None => PhaseSettings::alice_for(letter)?,
            };
            let column = coupler.column(ALICE_INPUT_PORT);
            let f = phases.factors();
            TimeBinState::new([0, 1, 2, 3].map(|k| f[k] * column[k]))
        }
    }
}

/// Exact detection probabilities, indexed by slot (time) or by detector letter (energy).
pub fn photonic_outcome_distribution(
    coupler: &MultiportCoupler,
    state: &TimeBinState,
    basis: PhotonicBasis,
    bob: &PhaseSettings,
) -> [f64; 4] {
    match basis {
        PhotonicBasis::Time => state.amps.map(|a| a.norm_sqr()),
        PhotonicBasis::Energy => {
            // delay equalization is a relabeling of slots, so amplitudes pass unchanged
            let f = bob.factors();
            let phased = [0, 1, 2, 3].map(|k| f[k] * state.amps[k]);
            let ports = apply(&coupler.unitary, &phased);
            DETECTOR_PORTS.map(|p| ports[p].norm_sqr())
        }
    }
}

/// Bob's photonic analysis driven by the uniform draw `u`.
pub fn bob_analyze_photonic(
    coupler: &MultiportCoupler,
    state: &TimeBinState,
    basis: PhotonicBasis,
    settings: &PhaseSettings,
    u: f64,
) -> DetectorOutcome {
    let probs = photonic_outcome_distribution(coupler, state, basis, settings);
    let l = Letter(sample_index(&probs, u) as u8);
    match basis {
        PhotonicBasis::Time => DetectorOutcome::Slot(l),
        PhotonicBasis::Energy => DetectorOutcome::Detector(l),
    }
}

/// `probs[j][k]`: probability that the j-th prepared state fires detector k.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoutingMatrix {
    pub probs: [[f64; 4]; 4],
}

impl RoutingMatrix {
    /// Row maxima within `tol` of 1, each in a distinct column.
    pub fn is_permutation(&self, tol: f64) -> bool {
        let mut used = [false; 4];
        for row in &self.probs {
            let (k, max) =
                row.iter().enumerate().fold(
                    (0, f64::MIN),
                    |best, (k, &p)| if p > best.1 { (k, p) } else { best },
                );
            if max < 1.0 - tol || used[k] {
                return false;
            }
            used[k] = true;
        }
        true
    }

    pub fn max_off_diagonal(&self) -> f64 {
        let mut worst = 0.0f64;
        for (j, row) in self.probs.iter().enumerate() {
            for (k, &p) in row.iter().enumerate() {
                if j != k {
                    worst = worst.max(p);
                }
            }
        }
        worst
    }

    pub fn require_permutation(&self, tol: f64) -> Result<()> {
        if self.is_permutation(tol) {
            Ok(())
        } else {
            Err(QkdError::NonPermutationRouting {
                max_off_diagonal: self.max_off_diagonal(),
            })
        }
    }
}

/// Detector statistics of the four energy-basis states under `bob_settings`.
pub fn routing_matrix(
    coupler: &MultiportCoupler,
    alice_settings_per_letter: &[PhaseSettings; 4],
    bob_settings: &PhaseSettings,
) -> Result<RoutingMatrix> {
    let mut probs = [[0.0; 4]; 4];
    for (j, settings) in alice_settings_per_letter.iter().enumerate() {
        let state = alice_prepare_photonic(
            coupler,
            PhotonicBasis::Energy,
            Letter(j as u8),
            Some(settings),
        )?;
        probs[j] =
            photonic_outcome_distribution(coupler, &state, PhotonicBasis::Energy, bob_settings);
    }
    Ok(RoutingMatrix { probs })
}

/// Arrival-slot statistics of the four time-basis states.
pub fn time_routing_matrix(coupler: &MultiportCoupler) -> RoutingMatrix {
    let mut probs = [[0.0; 4]; 4];
    for (j, row) in probs.iter_mut().enumerate() {
        let state = alice_prepare_photonic(coupler, PhotonicBasis::Time, Letter(j as u8), None)
            .expect("letter in range");
        *row = photonic_outcome_distribution(
            coupler,
            &state,
            PhotonicBasis::Time,
            &PhaseSettings::zero(),
        );
    }
    RoutingMatrix { probs }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceEntry {
    pub prepared: BasisLabel,
    pub letter: Letter,
    pub analyzer: BasisLabel,
    pub photonic: [f64; 4],
    pub abstract_: [f64; 4],
    pub max_deviation: f64,
}

/// Intercept/resend run through both pipelines with shared random draws.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampledComparison {
    pub rounds: usize,
    pub abstract_sifted: usize,
    pub photonic_sifted: usize,
    pub abstract_qter: f64,
    pub photonic_qter: f64,
    /// Rounds where the two pipelines produced different records.
    pub mismatched_rounds: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub entries: Vec<EquivalenceEntry>,
    pub max_exact_deviation: f64,
    pub sampled: Option<SampledComparison>,
}

fn exact_comparison(coupler: &MultiportCoupler) -> Vec<EquivalenceEntry> {
    let catalog = BasisCatalog::new(Dimension::Four);
    let bob = PhaseSettings::bob_default();
    let mut out = Vec::with_capacity(16);
    for prepared in [PhotonicBasis::Time, PhotonicBasis::Energy] {
        for letter in Dimension::Four.letters() {
            let photon =
                alice_prepare_photonic(coupler, prepared, letter, None).expect("letter in range");
            let abstract_state = &catalog.get(prepared.abstract_label()).vectors()[letter.index()];
            for analyzer in [PhotonicBasis::Time, PhotonicBasis::Energy] {
                let p = photonic_outcome_distribution(coupler, &photon, analyzer, &bob);
                let a = exact_outcome_distribution(
                    abstract_state,
                    catalog.get(analyzer.abstract_label()),
                )
                .expect("matching dimension");
                let a: [f64; 4] = [a[0], a[1], a[2], a[3]];
                let dev = p
                    .iter()
                    .zip(&a)
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0, f64::max);
                out.push(EquivalenceEntry {
                    prepared: prepared.abstract_label(),
                    letter,
                    analyzer: analyzer.abstract_label(),
                    photonic: p,
                    abstract_: a,
                    max_deviation: dev,
                });
            }
        }
    }
    out
}

struct PhotonicRound {
    alice_basis: BasisLabel,
    alice_letter: Letter,
    bob_basis: BasisLabel,
    bob_letter: Letter,
}

/// One intercept/resend round in the photonic pipeline, consuming draws in
/// the same order as the abstract engine.
fn photonic_round(coupler: &MultiportCoupler, seed: u64, index: usize) -> PhotonicRound {
    let bob = PhaseSettings::bob_default();
    let mut rng = round_stream(seed, index as u64);
    let coin = |u: f64| {
        if u < 0.5 {
            PhotonicBasis::Time
        } else {
            PhotonicBasis::Energy
        }
    };
    let alice = coin(rng.gen());
    let alice_letter = Letter(((rng.gen::<f64>() * 4.0) as usize).min(3) as u8);
    let sent = alice_prepare_photonic(coupler, alice, alice_letter, None).expect("letter in range");
    let _intercept: f64 = rng.gen();
    let eve = coin(rng.gen());
    let seen = bob_analyze_photonic(coupler, &sent, eve, &bob, rng.gen()).letter();
    let resent = alice_prepare_photonic(coupler, eve, seen, None).expect("letter in range");
    let bob_basis = coin(rng.gen());
    let bob_letter = bob_analyze_photonic(coupler, &resent, bob_basis, &bob, rng.gen()).letter();
    PhotonicRound {
        alice_basis: alice.abstract_label(),
        alice_letter,
        bob_basis: bob_basis.abstract_label(),
        bob_letter,
    }
}

fn sampled_comparison(
    coupler: &MultiportCoupler,
    rounds: usize,
    seed: u64,
) -> Result<SampledComparison> {
    use crate::eavesdrop::EveStrategy;
    use crate::protocol::{sift, simulate_round, ProtocolConfig, Transcript};

    let cfg = ProtocolConfig::new(Dimension::Four, rounds, seed)
        .with_eve(EveStrategy::intercept_resend());
    let catalog = BasisCatalog::new(Dimension::Four);
    let records = crate::exec::map_indices(rounds, |i| simulate_round(&cfg, &catalog, i))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let transcript = Transcript::new(cfg.clone(), records);
    let keys = sift(&transcript);

    let photonic: Vec<PhotonicRound> =
        crate::exec::map_indices(rounds, |i| photonic_round(coupler, seed, i));
    let mut p_sifted = 0usize;
    let mut p_errors = 0usize;
    let mut mismatched = 0usize;
    for (p, a) in photonic.iter().zip(transcript.rounds()) {
        if p.alice_basis == p.bob_basis {
            p_sifted += 1;
            p_errors += (p.alice_letter != p.bob_letter) as usize;
        }
        let same = p.alice_basis == a.alice_basis
            && p.alice_letter == a.alice_letter
            && p.bob_basis == a.bob_basis
            && p.bob_letter == a.bob_letter;
        mismatched += (!same) as usize;
    }
    Ok(SampledComparison {
        rounds,
        abstract_sifted: keys.len(),
        photonic_sifted: p_sifted,
        abstract_qter: keys.error_rate(),
        photonic_qter: if p_sifted == 0 {
            0.0
        } else {
            p_errors as f64 / p_sifted as f64
        },
        mismatched_rounds: mismatched,
    })
}

/// Checks that the time-bin model realizes the abstract protocol: exact
/// outcome distributions for all 8 states × 2 analyzers, plus a sampled
/// intercept/resend run through both pipelines when `n_rounds > 0`.
pub fn photonic_equivalence_check(n_rounds: usize, seed: u64) -> Result<EquivalenceReport> {
    let coupler = build_multiport();
    let entries = exact_comparison(&coupler);
    let max_exact_deviation = entries.iter().map(|e| e.max_deviation).fold(0.0, f64::max);
    let sampled = if n_rounds == 0 {
        None
    } else {
        Some(sampled_comparison(&coupler, n_rounds, seed)?)
    };
    Ok(EquivalenceReport {
        entries,
        max_exact_deviation,
        sampled,
    })
}
