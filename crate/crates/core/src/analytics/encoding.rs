use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QkdError, Result};
use crate::qudit::{Dimension, Letter};

/// Bijection from letters to fixed-width bit strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitEncoding {
    width: usize,
    /// Code word of letter `i`, most significant bit first.
    codes: Vec<Vec<bool>>,
}

impl BitEncoding {
    /// Builds an encoding from integer code words (`codes[i]` encodes letter `i`).
    pub fn new(dim: Dimension, codes: &[u8]) -> Result<Self> {
        let width = dim.bits_per_symbol() as usize;
        if codes.len() != dim.size() {
            return Err(QkdError::LengthMismatch {
                left: codes.len(),
                right: dim.size(),
            });
        }
        let mut seen = vec![false; dim.size()];
        for &c in codes {
            let slot = seen.get_mut(c as usize).ok_or_else(|| {
                QkdError::InvalidConfig(format!("code word {c} does not fit in {width} bits"))
            })?;
            if *slot {
                return Err(QkdError::InvalidConfig(format!("code word {c} used twice")));
            }
            *slot = true;
        }
        let codes = codes
            .iter()
            .map(|&c| (0..width).rev().map(|b| (c >> b) & 1 == 1).collect())
            .collect();
        Ok(Self { width, codes })
    }

    /// α=00, β=01, γ=10, δ=11 (α=0, β=1 for qubits).
    pub fn default_for(dim: Dimension) -> Self {
        let codes: Vec<u8> = (0..dim.size() as u8).collect();
        Self::new(dim, &codes).expect("identity code is bijective")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn size(&self) -> usize {
        self.codes.len()
    }

    pub fn code(&self, letter: Letter) -> Result<&[bool]> {
        self.codes
            .get(letter.index())
            .map(Vec::as_slice)
            .ok_or(QkdError::LetterOutOfRange {
                letter: letter.index(),
                dim: self.codes.len(),
            })
    }

    /// Inverse mapping; the bit count must be a multiple of the code width.
    pub fn decode(&self, bits: &[bool]) -> Result<Vec<Letter>> {
        if !bits.len().is_multiple_of(self.width) {
            return Err(QkdError::Parse(format!(
                "{} bits is not a whole number of {}-bit blocks",
                bits.len(),
                self.width
            )));
        }
        bits.chunks(self.width)
            .map(|block| {
                self.codes
                    .iter()
                    .position(|c| c.as_slice() == block)
                    .map(|i| Letter(i as u8))
                    .ok_or_else(|| QkdError::Parse("unknown code word".into()))
            })
            .collect()
    }
}

/// Concatenates the code words of `letters`.
pub fn map_key_to_bits(letters: &[Letter], enc: &BitEncoding) -> Result<Vec<bool>> {
    let mut bits = Vec::with_capacity(letters.len() * enc.width());
    for &l in letters {
        bits.extend_from_slice(enc.code(l)?);
    }
    Ok(bits)
}

/// Error statistics of a letter string against a reference, before and after
/// mapping to bits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MappingReport {
    pub symbols: usize,
    pub symbol_errors: usize,
    pub bit_errors: usize,
    pub symbol_error_rate: f64,
    pub bit_error_rate: f64,
    /// Blocks whose first bit is wrong.
    pub first_bit_errors: usize,
    /// Blocks whose first and second bits are both wrong.
    pub both_bit_errors: usize,
    /// Unconditional error rate of the second bit of each block.
    pub second_bit_error_rate: Option<f64>,
    pub conditional_second_bit_error_given_first: Option<f64>,
    /// Pearson correlation between first- and second-bit error indicators.
    pub block_error_correlation: Option<f64>,
}

impl MappingReport {
    /// Gap between the conditional and unconditional second-bit error rates,
    /// with its binomial standard error.
    pub fn dependence_gap(&self) -> Option<(f64, f64)> {
        let cond = self.conditional_second_bit_error_given_first?;
        let uncond = self.second_bit_error_rate?;
        if self.first_bit_errors == 0 || self.symbols == 0 {
            return None;
        }
        let var_c = cond * (1.0 - cond) / self.first_bit_errors as f64;
        let var_u = uncond * (1.0 - uncond) / self.symbols as f64;
        Some((cond - uncond, (var_c + var_u).sqrt()))
    }
}

/// Compares `eve` (or any received string) with `alice` letter by letter and bit by bit.
pub fn mapping_error_analysis(
    alice: &[Letter],
    eve: &[Letter],
    enc: &BitEncoding,
) -> Result<MappingReport> {
    if alice.len() != eve.len() {
        return Err(QkdError::LengthMismatch {
            left: alice.len(),
            right: eve.len(),
        });
    }
    let n = alice.len();
    let mut symbol_errors = 0;
    let mut bit_errors = 0;
    let mut first = 0usize;
    let mut second = 0usize;
    let mut both = 0usize;
    for (&a, &e) in alice.iter().zip(eve) {
        let (ca, ce) = (enc.code(a)?, enc.code(e)?);
        if a != e {
            symbol_errors += 1;
        }
        let wrong: Vec<bool> = ca.iter().zip(ce).map(|(x, y)| x != y).collect();
        bit_errors += wrong.iter().filter(|w| **w).count();
        if wrong.len() >= 2 {
            first += wrong[0] as usize;
            second += wrong[1] as usize;
            both += (wrong[0] && wrong[1]) as usize;
        }
    }
    let rate = |num: usize, den: usize| {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let blocked = enc.width() >= 2;
    let correlation = if blocked && n > 0 {
        let nf = n as f64;
        let (px, py, pxy) = (first as f64 / nf, second as f64 / nf, both as f64 / nf);
        let denom = (px * (1.0 - px) * py * (1.0 - py)).sqrt();
        Some(if denom > 0.0 {
            (pxy - px * py) / denom
        } else {
            0.0
        })
    } else {
        None
    };
    Ok(MappingReport {
        symbols: n,
        symbol_errors,
        bit_errors,
        symbol_error_rate: rate(symbol_errors, n),
        bit_error_rate: rate(bit_errors, n * enc.width()),
        first_bit_errors: first,
        both_bit_errors: both,
        second_bit_error_rate: blocked.then(|| rate(second, n)),
        conditional_second_bit_error_given_first: blocked.then(|| rate(both, first)),
        block_error_correlation: correlation,
    })
}

/// Flips every bit of `alice`'s encoding independently with probability
/// `ber` and decodes the result: a received string with the same bit error
/// rate but no structure inside blocks.
pub fn iid_bit_flip_control<R: Rng + ?Sized>(
    alice: &[Letter],
    ber: f64,
    enc: &BitEncoding,
    rng: &mut R,
) -> Result<Vec<Letter>> {
    if !(0.0..=1.0).contains(&ber) {
        return Err(QkdError::InvalidProbability(format!(
            "bit error rate {ber}"
        )));
    }
    let mut bits = map_key_to_bits(alice, enc)?;
    for b in bits.iter_mut() {
        if rng.gen::<f64>() < ber {
            *b = !*b;
        }
    }
    enc.decode(&bits)
}
