//! The four-letter BB84 session: preparation, transit, measurement, sifting
//! and error-rate estimation.
//!
//! Each round draws from its own counter-keyed stream (see [`crate::rng`]),
//! so the transcript is a pure function of the configuration whether rounds
//! run sequentially or on the rayon pool.

use std::fmt::Write as _;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::eavesdrop::{apply_strategy, EveRecord, EveStrategy};
use crate::error::{QkdError, Result};
use crate::qudit::{measure, BasisCatalog, BasisLabel, Dimension, Letter, StateVector};
use crate::rng::{round_stream, StreamRng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub dim: Dimension,
    pub rounds: usize,
    pub eve: EveStrategy,
    /// Share of the sifted key revealed to estimate the QTER.
    pub sample_fraction: f64,
    /// Probability that the channel replaces the state by another of the sender's basis.
    pub channel_flip_prob: f64,
    pub seed: u64,
}

impl ProtocolConfig {
    pub fn new(dim: Dimension, rounds: usize, seed: u64) -> Self {
        Self {
            dim,
            rounds,
            eve: EveStrategy::none(),
            sample_fraction: 0.5,
            channel_flip_prob: 0.0,
            seed,
        }
    }

    pub fn with_eve(mut self, eve: EveStrategy) -> Self {
        self.eve = eve;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(QkdError::InvalidConfig("rounds must be at least 1".into()));
        }
        if !(self.sample_fraction > 0.0 && self.sample_fraction < 1.0) {
            return Err(QkdError::InvalidConfig(format!(
                "sample_fraction {} outside (0, 1)",
                self.sample_fraction
            )));
        }
        if (self.sample_fraction * self.rounds as f64).ceil() as usize >= self.rounds {
            return Err(QkdError::InvalidConfig(format!(
                "sample_fraction {} would leave no key at {} rounds",
                self.sample_fraction, self.rounds
            )));
        }
        if !(0.0..1.0).contains(&self.channel_flip_prob) {
            return Err(QkdError::InvalidConfig(format!(
                "channel_flip_prob {} outside [0, 1)",
                self.channel_flip_prob
            )));
        }
        self.eve.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub index: usize,
    pub alice_basis: BasisLabel,
    pub alice_letter: Letter,
    /// Out-of-band record of Eve's measurement.
    pub eve: Option<EveRecord>,
    pub bob_basis: BasisLabel,
    pub bob_letter: Letter,
}

impl RoundRecord {
    pub fn is_sifted(&self) -> bool {
        self.alice_basis == self.bob_basis
    }

    /// `index alice_basis alice_letter eve_basis eve_letter bob_basis bob_letter`,
    /// with `-` for both Eve fields when she did not act.
    pub fn to_line(&self) -> String {
        let (eb, el) = match &self.eve {
            Some(r) => (r.basis_used.as_str(), r.letter_observed.ascii_name()),
            None => ("-", "-"),
        };
        format!(
            "{} {} {} {} {} {} {}",
            self.index,
            self.alice_basis,
            self.alice_letter.ascii_name(),
            eb,
            el,
            self.bob_basis,
            self.bob_letter.ascii_name()
        )
    }

    pub fn from_line(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 7 {
            return Err(QkdError::Parse(format!(
                "expected 7 fields, got {}: {line:?}",
                f.len()
            )));
        }
        let index = f[0]
            .parse()
            .map_err(|_| QkdError::Parse(format!("bad round index {:?}", f[0])))?;
        let eve = match (f[3], f[4]) {
            ("-", "-") => None,
            (b, l) => Some(EveRecord {
                basis_used: b.parse()?,
                letter_observed: l.parse()?,
            }),
        };
        Ok(Self {
            index,
            alice_basis: f[1].parse()?,
            alice_letter: f[2].parse()?,
            eve,
            bob_basis: f[5].parse()?,
            bob_letter: f[6].parse()?,
        })
    }
}

/// Full session log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    config: ProtocolConfig,
    rounds: Vec<RoundRecord>,
    sifted: Vec<usize>,
}

impl Transcript {
    pub fn new(config: ProtocolConfig, rounds: Vec<RoundRecord>) -> Self {
        let sifted = rounds
            .iter()
            .filter(|r| r.is_sifted())
            .map(|r| r.index)
            .collect();
        Self {
            config,
            rounds,
            sifted,
        }
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.config
    }

    pub fn rounds(&self) -> &[RoundRecord] {
        &self.rounds
    }

    pub fn sifted_indices(&self) -> &[usize] {
        &self.sifted
    }

    pub fn sifted_fraction(&self) -> f64 {
        if self.rounds.is_empty() {
            0.0
        } else {
            self.sifted.len() as f64 / self.rounds.len() as f64
        }
    }

    /// One round per line, preceded by `#` comment lines carrying the seed and dimension.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# seed {}", self.config.seed);
        let _ = writeln!(out, "# dim {}", self.config.dim);
        let _ = writeln!(
            out,
            "# index alice_basis alice_letter eve_basis eve_letter bob_basis bob_letter"
        );
        for r in &self.rounds {
            out.push_str(&r.to_line());
            out.push('\n');
        }
        out
    }

    /// Parses the round lines of [`Transcript::to_lines`]; comments are skipped.
    pub fn parse_rounds(text: &str) -> Result<Vec<RoundRecord>> {
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(RoundRecord::from_line)
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transcript serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| QkdError::Parse(e.to_string()))
    }
}

fn coin<R: Rng + ?Sized>(rng: &mut R) -> BasisLabel {
    if rng.gen::<f64>() < 0.5 {
        BasisLabel::Psi
    } else {
        BasisLabel::Phi
    }
}

fn uniform_letter<R: Rng + ?Sized>(rng: &mut R, dim: Dimension) -> Letter {
    let d = dim.size();
    Letter(((rng.gen::<f64>() * d as f64) as usize).min(d - 1) as u8)
}

/// Alice picks ψ or φ with a fair coin, then a uniform letter.
pub fn alice_prepare<R: Rng + ?Sized>(
    catalog: &BasisCatalog,
    rng: &mut R,
) -> (BasisLabel, Letter, StateVector) {
    let basis = coin(rng);
    let letter = uniform_letter(rng, catalog.dim());
    let state = catalog.get(basis).vectors()[letter.index()].clone();
    (basis, letter, state)
}

/// Bob picks ψ or φ with a fair coin and measures.
pub fn bob_measure<R: Rng + ?Sized>(
    state: &StateVector,
    catalog: &BasisCatalog,
    rng: &mut R,
) -> Result<(BasisLabel, Letter)> {
    let basis = coin(rng);
    let (letter, _) = measure(state, catalog.get(basis), rng.gen())?;
    Ok((basis, letter))
}

fn channel<R: Rng + ?Sized>(
    config: &ProtocolConfig,
    catalog: &BasisCatalog,
    basis: BasisLabel,
    letter: Letter,
    state: StateVector,
    rng: &mut R,
) -> StateVector {
    if config.channel_flip_prob <= 0.0 || rng.gen::<f64>() >= config.channel_flip_prob {
        return state;
    }
    let d = config.dim.size();
    let shift = 1 + ((rng.gen::<f64>() * (d - 1) as f64) as usize).min(d - 2);
    catalog.get(basis).vectors()[(letter.index() + shift) % d].clone()
}

/// One complete round drawn from its own stream.
pub fn simulate_round(
    config: &ProtocolConfig,
    catalog: &BasisCatalog,
    index: usize,
) -> Result<RoundRecord> {
    let mut rng: StreamRng = round_stream(config.seed, index as u64);
    let (alice_basis, alice_letter, state) = alice_prepare(catalog, &mut rng);
    let (state, eve) = apply_strategy(&config.eve, catalog, &state, &mut rng)?;
    let state = channel(config, catalog, alice_basis, alice_letter, state, &mut rng);
    let (bob_basis, bob_letter) = bob_measure(&state, catalog, &mut rng)?;
    Ok(RoundRecord {
        index,
        alice_basis,
        alice_letter,
        eve,
        bob_basis,
        bob_letter,
    })
}

/// Runs every round on the calling thread.
pub fn run_session_sequential(config: &ProtocolConfig) -> Result<Transcript> {
    config.validate()?;
    let catalog = BasisCatalog::new(config.dim);
    let rounds = (0..config.rounds)
        .map(|i| simulate_round(config, &catalog, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(Transcript::new(config.clone(), rounds))
}

/// Runs rounds on the rayon pool; output is identical to the sequential path.
#[cfg(feature = "parallel")]
pub fn run_session_parallel(config: &ProtocolConfig) -> Result<Transcript> {
    use rayon::prelude::*;

    config.validate()?;
    let catalog = BasisCatalog::new(config.dim);
    let rounds = (0..config.rounds)
        .into_par_iter()
        .map(|i| simulate_round(config, &catalog, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(Transcript::new(config.clone(), rounds))
}

/// Runs a session, in parallel when the `parallel` feature is enabled.
pub fn run_session(config: &ProtocolConfig) -> Result<Transcript> {
    #[cfg(feature = "parallel")]
    {
        run_session_parallel(config)
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_session_sequential(config)
    }
}

/// Letters of the rounds where Alice and Bob used the same basis.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiftedKeys {
    indices: Vec<usize>,
    pub alice_letters: Vec<Letter>,
    pub bob_letters: Vec<Letter>,
    /// Eve's letters where she intercepted; `None` when no eavesdropper was configured.
    pub eve_letters: Option<Vec<Option<Letter>>>,
}

impl SiftedKeys {
    pub fn len(&self) -> usize {
        self.alice_letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alice_letters.is_empty()
    }

    /// Round indices the key positions came from.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Fraction of positions where Alice and Bob disagree, over the whole key.
    pub fn error_rate(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let errors = self
            .alice_letters
            .iter()
            .zip(&self.bob_letters)
            .filter(|(a, b)| a != b)
            .count();
        errors as f64 / self.len() as f64
    }

    fn select(&self, keep: impl Fn(usize) -> bool) -> SiftedKeys {
        let pick = |v: &[Letter]| {
            v.iter()
                .enumerate()
                .filter(|(i, _)| keep(*i))
                .map(|(_, x)| *x)
                .collect()
        };
        SiftedKeys {
            indices: self
                .indices
                .iter()
                .enumerate()
                .filter(|(i, _)| keep(*i))
                .map(|(_, x)| *x)
                .collect(),
            alice_letters: pick(&self.alice_letters),
            bob_letters: pick(&self.bob_letters),
            eve_letters: self.eve_letters.as_ref().map(|e| {
                e.iter()
                    .enumerate()
                    .filter(|(i, _)| keep(*i))
                    .map(|(_, x)| *x)
                    .collect()
            }),
        }
    }
}

/// Keeps the matching-basis rounds, in order.
pub fn sift(transcript: &Transcript) -> SiftedKeys {
    let with_eve = transcript.config().eve.kind != crate::eavesdrop::EveKind::None;
    let rounds = transcript.rounds();
    let kept: Vec<&RoundRecord> = transcript
        .sifted_indices()
        .iter()
        .map(|&i| &rounds[i])
        .collect();
    SiftedKeys {
        indices: transcript.sifted_indices().to_vec(),
        alice_letters: kept.iter().map(|r| r.alice_letter).collect(),
        bob_letters: kept.iter().map(|r| r.bob_letter).collect(),
        eve_letters: with_eve.then(|| {
            kept.iter()
                .map(|r| r.eve.map(|e| e.letter_observed))
                .collect()
        }),
    }
}

/// Result of the public error-rate check.
#[derive(Clone, Debug, PartialEq)]
pub struct QterEstimate {
    pub qter: f64,
    /// Key positions (into the sifted key) that were revealed, ascending.
    pub sampled_positions: Vec<usize>,
    /// Key left after the revealed positions are discarded.
    pub remaining: SiftedKeys,
}

/// Reveals `⌈fraction · len⌉` positions chosen without replacement, measures
/// their error rate and discards them.
pub fn estimate_qter<R: Rng + ?Sized>(
    keys: &SiftedKeys,
    sample_fraction: f64,
    rng: &mut R,
) -> Result<QterEstimate> {
    if keys.is_empty() {
        return Err(QkdError::EmptyKey);
    }
    if !(sample_fraction > 0.0 && sample_fraction < 1.0) {
        return Err(QkdError::InvalidConfig(format!(
            "sample_fraction {sample_fraction} outside (0, 1)"
        )));
    }
    let n = keys.len();
    let k = ((sample_fraction * n as f64).ceil() as usize).clamp(1, n);
    let mut positions = index::sample(rng, n, k).into_vec();
    positions.sort_unstable();
    let errors = positions
        .iter()
        .filter(|&&i| keys.alice_letters[i] != keys.bob_letters[i])
        .count();
    let mut revealed = vec![false; n];
    for &p in &positions {
        revealed[p] = true;
    }
    Ok(QterEstimate {
        qter: errors as f64 / k as f64,
        remaining: keys.select(|i| !revealed[i]),
        sampled_positions: positions,
    })
}
