//! Probability vectors on a finite alphabet and the information measures
//! built on them. All values are in nats.

use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{check_dim, Error, Result};

/// Absolute tolerance on `Σ p(x) = 1`.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// A probability vector over the alphabet `{0, .., k-1}` with `k >= 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Dist {
    probs: Vec<f64>,
}

impl Dist {
    /// Validates `probs` as given. Use [`Dist::normalized`] to rescale.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::InvalidDistribution(format!(
                "alphabet size must be at least 2, got {}",
                probs.len()
            )));
        }
        if let Some((i, &v)) = probs
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidDistribution(format!(
                "entry {i} is {v}, expected a finite nonnegative number"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {sum:.17}, expected 1 within {SUM_TOLERANCE:e}"
            )));
        }
        Ok(Self { probs })
    }

    /// Rescales nonnegative weights to sum to one.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum.is_finite() && sum > 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "cannot normalize weights with sum {sum}"
            )));
        }
        Self::new(weights.into_iter().map(|w| w / sum).collect())
    }

    pub fn uniform(k: usize) -> Result<Self> {
        Self::new(vec![1.0 / k as f64; k])
    }

    /// Builds a distribution whose entries are known to be exact ratios,
    /// for internal constructions such as `counts / n`.
    pub(crate) fn from_ratios_unchecked(probs: Vec<f64>) -> Self {
        debug_assert!(probs.len() >= 2);
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Alphabet size `k`.
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.probs.iter().all(|&p| p > 0.0)
    }

    /// Symbols with positive probability.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&x| self.probs[x] > 0.0).collect()
    }

    /// `E_p[f]`.
    pub fn expect(&self, f: &[f64]) -> Result<f64> {
        check_dim(self.len(), f.len())?;
        Ok(self.probs.iter().zip(f).map(|(p, v)| p * v).sum())
    }
}

impl TryFrom<Vec<f64>> for Dist {
    type Error = Error;

    fn try_from(probs: Vec<f64>) -> Result<Self> {
        Dist::new(probs)
    }
}

impl From<Dist> for Vec<f64> {
    fn from(d: Dist) -> Self {
        d.probs
    }
}

impl std::ops::Index<usize> for Dist {
    type Output = f64;

    fn index(&self, x: usize) -> &f64 {
        &self.probs[x]
    }
}

/// An information quantity in nats: finite, or explicitly `+∞`.
///
/// Serialized as a JSON number, or as the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InfoValue {
    Finite(f64),
    Infinite,
}

impl InfoValue {
    /// The value as an `f64`, mapping [`InfoValue::Infinite`] to `f64::INFINITY`.
    pub fn value(self) -> f64 {
        match self {
            InfoValue::Finite(v) => v,
            InfoValue::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, InfoValue::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            InfoValue::Finite(v) => Some(v),
            InfoValue::Infinite => None,
        }
    }
}

impl fmt::Display for InfoValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InfoValue::Finite(v) => write!(f, "{v}"),
            InfoValue::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for InfoValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            InfoValue::Finite(v) => s.serialize_f64(*v),
            InfoValue::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for InfoValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct InfoVisitor;

        impl Visitor<'_> for InfoVisitor {
            type Value = InfoValue;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a finite number or the string \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<InfoValue, E> {
                if v.is_nan() {
                    Err(E::custom("information value cannot be NaN"))
                } else if v.is_infinite() {
                    Ok(InfoValue::Infinite)
                } else {
                    Ok(InfoValue::Finite(v))
                }
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<InfoValue, E> {
                Ok(InfoValue::Finite(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<InfoValue, E> {
                Ok(InfoValue::Finite(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<InfoValue, E> {
                match v {
                    "inf" => Ok(InfoValue::Infinite),
                    other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
                }
            }
        }

        d.deserialize_any(InfoVisitor)
    }
}

/// `H(p) = Σ p(x) ln(1/p(x))`, skipping zero-probability symbols.
pub fn entropy(p: &Dist) -> InfoValue {
    let h = p
        .probs
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| -v * v.ln())
        .sum();
    InfoValue::Finite(h)
}

/// `D(q‖p) = Σ q(x) ln(q(x)/p(x))`; infinite iff `q` puts mass where `p` has none.
pub fn relative_entropy(q: &Dist, p: &Dist) -> Result<InfoValue> {
    check_dim(q.len(), p.len())?;
    let mut d = 0.0;
    for (&qx, &px) in q.probs.iter().zip(&p.probs) {
        if qx > 0.0 {
            if px == 0.0 {
                return Ok(InfoValue::Infinite);
            }
            d += qx * (qx / px).ln();
        }
    }
    // Gibbs: round-off must not produce a negative divergence.
    Ok(InfoValue::Finite(d.max(0.0)))
}

/// `H(q, p) = Σ q(x) ln(1/p(x))`.
pub fn cross_entropy(q: &Dist, p: &Dist) -> Result<InfoValue> {
    check_dim(q.len(), p.len())?;
    let mut h = 0.0;
    for (&qx, &px) in q.probs.iter().zip(&p.probs) {
        if qx > 0.0 {
            if px == 0.0 {
                return Ok(InfoValue::Infinite);
            }
            h -= qx * px.ln();
        }
    }
    Ok(InfoValue::Finite(h))
}
