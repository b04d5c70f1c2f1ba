use std::fmt;
use std::str::FromStr;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("rationality parameter must be positive, got {0}")]
    NonPositiveBeta(f64),
    #[error("cannot parse rationality parameter {0:?}")]
    BadBeta(String),
    #[error("discount must lie in (0, 1), got {0}")]
    BadDiscount(f64),
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("this operation needs a {expected} configuration")]
    WrongCriterion { expected: &'static str },
}

/// Rationality parameter of one player. `Infinite` is a perfectly rational
/// player, handled by dedicated solver paths rather than a large float.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Beta {
    Finite(f64),
    Infinite,
}

impl Beta {
    /// `+inf` maps to `Infinite`; zero, negative and NaN are rejected.
    pub fn new(value: f64) -> Result<Self, ConfigError> {
        if value == f64::INFINITY {
            Ok(Beta::Infinite)
        } else if value.is_finite() && value > 0.0 {
            Ok(Beta::Finite(value))
        } else {
            Err(ConfigError::NonPositiveBeta(value))
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Beta::Finite(_))
    }

    /// Weight `1/β` of the entropy term; zero for a rational player.
    pub fn inverse(self) -> f64 {
        match self {
            Beta::Finite(b) => 1.0 / b,
            Beta::Infinite => 0.0,
        }
    }

    /// Finite value or `f64::INFINITY`.
    pub fn as_f64(self) -> f64 {
        match self {
            Beta::Finite(b) => b,
            Beta::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Beta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Beta::Finite(b) => write!(f, "{b}"),
            Beta::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for Beta {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "+inf" | "∞" => Ok(Beta::Infinite),
            t => t
                .parse::<f64>()
                .map_err(|_| ConfigError::BadBeta(s.to_string()))
                .and_then(Beta::new),
        }
    }
}

impl Serialize for Beta {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Beta::Finite(b) => s.serialize_f64(*b),
            Beta::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Beta {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct BetaVisitor;

        impl Visitor<'_> for BetaVisitor {
            type Value = Beta;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a positive number or \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Beta, E> {
                Beta::new(v).map_err(E::custom)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Beta, E> {
                self.visit_f64(v as f64)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Beta, E> {
                self.visit_f64(v as f64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Beta, E> {
                v.parse().map_err(E::custom)
            }
        }

        d.deserialize_any(BetaVisitor)
    }
}

/// Horizon for N-stage games or discount for discounted games; never both.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Criterion {
    Horizon(usize),
    Discount(f64),
}

/// Selects the game variant a solver or evaluator works on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegularizationConfig {
    pub beta1: Beta,
    pub beta2: Beta,
    pub criterion: Criterion,
}

impl RegularizationConfig {
    pub fn nstage(beta1: Beta, beta2: Beta, horizon: usize) -> Result<Self, ConfigError> {
        if horizon == 0 {
            return Err(ConfigError::ZeroHorizon);
        }
        Ok(Self { beta1, beta2, criterion: Criterion::Horizon(horizon) })
    }

    pub fn discounted(beta1: Beta, beta2: Beta, gamma: f64) -> Result<Self, ConfigError> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(ConfigError::BadDiscount(gamma));
        }
        Ok(Self { beta1, beta2, criterion: Criterion::Discount(gamma) })
    }

    pub fn horizon(&self) -> Result<usize, ConfigError> {
        match self.criterion {
            Criterion::Horizon(n) => Ok(n),
            Criterion::Discount(_) => Err(ConfigError::WrongCriterion { expected: "horizon" }),
        }
    }

    pub fn gamma(&self) -> Result<f64, ConfigError> {
        match self.criterion {
            Criterion::Discount(g) => Ok(g),
            Criterion::Horizon(_) => Err(ConfigError::WrongCriterion { expected: "discount" }),
        }
    }
}
