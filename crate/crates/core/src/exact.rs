//! Exact arithmetic for the probability oracles.
//!
//! Every squared overlap between ψ, φ and θ vectors lies in ℚ(√2): the
//! qu-quart values are rational (1/4, 3/4, 1/12) and the qubit intermediate
//! basis brings in cos²(π/8) = (2+√2)/4. Vectors are kept unnormalized with
//! entries in ℚ(√2), so `|⟨u|v⟩|² = (u·v)² / ((u·u)(v·v))` is computed exactly.
//!
//! The bases here are built independently of [`crate::qudit`]: θ comes from
//! normalizing ψ_i ± φ_i, with the sign picked to keep the family orthogonal.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_rational::Rational64;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{QkdError, Result};
use crate::qudit::{BasisLabel, Dimension};

/// `a + b√2` with rational `a`, `b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct QSqrt2 {
    pub a: Rational64,
    pub b: Rational64,
}

impl QSqrt2 {
    pub fn new(a: Rational64, b: Rational64) -> Self {
        Self { a, b }
    }

    pub fn rational(r: Rational64) -> Self {
        Self {
            a: r,
            b: Rational64::zero(),
        }
    }

    pub fn int(n: i64) -> Self {
        Self::rational(Rational64::from_integer(n))
    }

    pub fn frac(n: i64, d: i64) -> Self {
        Self::rational(Rational64::new(n, d))
    }

    pub fn sqrt2() -> Self {
        Self {
            a: Rational64::zero(),
            b: Rational64::one(),
        }
    }

    pub fn zero() -> Self {
        Self::int(0)
    }

    pub fn one() -> Self {
        Self::int(1)
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    /// The value as a rational, if the √2 part vanishes.
    pub fn as_rational(&self) -> Option<Rational64> {
        self.b.is_zero().then_some(self.a)
    }

    pub fn to_f64(&self) -> f64 {
        self.a.to_f64().unwrap_or(f64::NAN)
            + self.b.to_f64().unwrap_or(f64::NAN) * std::f64::consts::SQRT_2
    }

    fn conjugate(&self) -> Self {
        Self {
            a: self.a,
            b: -self.b,
        }
    }

    /// `a² − 2b²`, nonzero for every nonzero element since √2 is irrational.
    fn field_norm(&self) -> Rational64 {
        self.a * self.a - Rational64::from_integer(2) * self.b * self.b
    }

    pub fn recip(&self) -> Self {
        let n = self.field_norm();
        assert!(!n.is_zero(), "division by zero in Q(sqrt 2)");
        let c = self.conjugate();
        Self {
            a: c.a / n,
            b: c.b / n,
        }
    }
}

impl Add for QSqrt2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            a: self.a + o.a,
            b: self.b + o.b,
        }
    }
}

impl Sub for QSqrt2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self {
            a: self.a - o.a,
            b: self.b - o.b,
        }
    }
}

impl Neg for QSqrt2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            a: -self.a,
            b: -self.b,
        }
    }
}

impl Mul for QSqrt2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let two = Rational64::from_integer(2);
        Self {
            a: self.a * o.a + two * self.b * o.b,
            b: self.a * o.b + self.b * o.a,
        }
    }
}

impl Div for QSqrt2 {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl std::iter::Sum for QSqrt2 {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(QSqrt2::zero(), Add::add)
    }
}

impl fmt::Display for QSqrt2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.a.is_zero(), self.b.is_zero()) {
            (_, true) => write!(f, "{}", self.a),
            (true, false) => write!(f, "{}√2", self.b),
            (false, false) => {
                let sign = if self.b.is_negative() { '-' } else { '+' };
                write!(f, "{} {} {}√2", self.a, sign, self.b.abs())
            }
        }
    }
}

/// Unnormalized real vector with entries in ℚ(√2).
pub type ExactVector = Vec<QSqrt2>;

fn dot(u: &[QSqrt2], v: &[QSqrt2]) -> QSqrt2 {
    u.iter().zip(v).map(|(x, y)| *x * *y).sum()
}

/// `|⟨u|v⟩|²` for normalized versions of `u` and `v`.
pub fn squared_overlap(u: &[QSqrt2], v: &[QSqrt2]) -> QSqrt2 {
    let d = dot(u, v);
    d * d / (dot(u, u) * dot(v, v))
}

fn exact_psi(d: usize) -> Vec<ExactVector> {
    (0..d)
        .map(|k| {
            (0..d)
                .map(|j| {
                    if j == k {
                        QSqrt2::one()
                    } else {
                        QSqrt2::zero()
                    }
                })
                .collect()
        })
        .collect()
}

/// φ vectors, already normalized: ±1/2 entries for quarts, ±1/√2 for qubits.
fn exact_phi(d: usize) -> Vec<ExactVector> {
    let signs: Vec<Vec<i64>> = if d == 2 {
        vec![vec![1, 1], vec![1, -1]]
    } else {
        vec![
            vec![1, 1, 1, 1],
            vec![1, -1, 1, -1],
            vec![1, -1, -1, 1],
            vec![1, 1, -1, -1],
        ]
    };
    let scale = if d == 2 {
        QSqrt2::new(Rational64::zero(), Rational64::new(1, 2))
    } else {
        QSqrt2::frac(1, 2)
    };
    signs
        .into_iter()
        .map(|row| row.into_iter().map(|s| QSqrt2::int(s) * scale).collect())
        .collect()
}

/// θ_i ∝ ψ_i ± φ_i, taking `+` unless that breaks orthogonality with earlier vectors.
fn exact_theta(d: usize) -> Vec<ExactVector> {
    let psi = exact_psi(d);
    let phi = exact_phi(d);
    let mut out: Vec<ExactVector> = Vec::with_capacity(d);
    for (p, f) in psi.iter().zip(&phi) {
        let plus: ExactVector = p.iter().zip(f).map(|(x, y)| *x + *y).collect();
        let minus: ExactVector = p.iter().zip(f).map(|(x, y)| *x - *y).collect();
        let candidate = if out.iter().all(|prev| dot(prev, &plus).is_zero()) {
            plus
        } else {
            minus
        };
        out.push(candidate);
    }
    out
}

/// Exact basis vectors for the oracle.
pub fn exact_basis(label: BasisLabel, dim: Dimension) -> Vec<ExactVector> {
    let d = dim.size();
    match label {
        BasisLabel::Psi => exact_psi(d),
        BasisLabel::Phi => exact_phi(d),
        BasisLabel::Theta => exact_theta(d),
    }
}

/// Exact `|⟨a_i|b_j⟩|²` table between two bases.
pub fn transition_table(from: BasisLabel, to: BasisLabel, dim: Dimension) -> Vec<Vec<QSqrt2>> {
    let a = exact_basis(from, dim);
    let b = exact_basis(to, dim);
    a.iter()
        .map(|u| b.iter().map(|v| squared_overlap(u, v)).collect())
        .collect()
}

/// Outcome of enumerating an attack over every branch, conditioned on Eve acting.
#[derive(Clone, Debug, PartialEq)]
pub struct AttackEnumeration {
    /// Probability that Bob's sifted letter differs from Alice's.
    pub error: QSqrt2,
    /// Probability that Eve's observed letter equals Alice's.
    pub eve_correct: QSqrt2,
    /// Eve's outcome distribution for each (Alice basis, Eve basis, Alice letter) branch,
    /// with the branch weight.
    pub branches: Vec<AttackBranch>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttackBranch {
    pub alice_basis: BasisLabel,
    pub eve_basis: BasisLabel,
    pub alice_letter: usize,
    pub weight: QSqrt2,
    pub eve_distribution: Vec<QSqrt2>,
}

/// Enumerates Alice basis × Alice letter × Eve basis × Eve outcome × Bob outcome
/// for a measure-and-forward attack on the sifted rounds.
pub fn enumerate_attack(eve_bases: &[BasisLabel], dim: Dimension) -> Result<AttackEnumeration> {
    if eve_bases.is_empty() {
        return Err(QkdError::UnsupportedStrategy("empty basis pool".into()));
    }
    let d = dim.size();
    let alice_bases = [BasisLabel::Psi, BasisLabel::Phi];
    let w_alice = QSqrt2::frac(1, 2 * d as i64);
    let w_eve = QSqrt2::frac(1, eve_bases.len() as i64);

    let mut error = QSqrt2::zero();
    let mut eve_correct = QSqrt2::zero();
    let mut branches = Vec::new();
    for &ab in &alice_bases {
        let alice = exact_basis(ab, dim);
        for &eb in eve_bases {
            let eve = exact_basis(eb, dim);
            for (l, sent) in alice.iter().enumerate() {
                let weight = w_alice * w_eve;
                let eve_dist: Vec<QSqrt2> = eve.iter().map(|e| squared_overlap(e, sent)).collect();
                for (k, forwarded) in eve.iter().enumerate() {
                    let p_eve = eve_dist[k];
                    // Eve's guess is her outcome's letter, whatever basis she used.
                    if k == l {
                        eve_correct = eve_correct + weight * p_eve;
                    }
                    // Bob measures in Alice's basis (sifted rounds only).
                    for (m, bob_vec) in alice.iter().enumerate() {
                        if m != l {
                            error = error + weight * p_eve * squared_overlap(bob_vec, forwarded);
                        }
                    }
                }
                branches.push(AttackBranch {
                    alice_basis: ab,
                    eve_basis: eb,
                    alice_letter: l,
                    weight,
                    eve_distribution: eve_dist,
                });
            }
        }
    }
    Ok(AttackEnumeration {
        error,
        eve_correct,
        branches,
    })
}
