use std::f64::consts::PI;

use crate::error::{invalid, Result};

/// Strictly increasing link function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    Identity,
    Logistic,
    /// Standard normal CDF.
    Probit,
}

impl Link {
    pub fn value(self, z: f64) -> f64 {
        match self {
            Link::Identity => z,
            Link::Logistic => {
                if z >= 0.0 {
                    1.0 / (1.0 + (-z).exp())
                } else {
                    let e = z.exp();
                    e / (1.0 + e)
                }
            }
            Link::Probit => 0.5 * libm::erfc(-z / std::f64::consts::SQRT_2),
        }
    }

    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Link::Identity => 1.0,
            Link::Logistic => {
                let s = self.value(z);
                s * (1.0 - s)
            }
            Link::Probit => (-0.5 * z * z).exp() / (2.0 * PI).sqrt(),
        }
    }

    /// Whether the link maps into [0, 1].
    pub fn is_probability(self) -> bool {
        !matches!(self, Link::Identity)
    }

    /// `inf_{|z| <= radius} g'(z)`; every link here has a derivative that is
    /// even and nonincreasing in `|z|`.
    pub fn min_derivative(self, radius: f64) -> f64 {
        self.derivative(radius)
    }

    pub fn parse(s: &str) -> Option<Link> {
        match s {
            "identity" => Some(Link::Identity),
            "logistic" | "logit" => Some(Link::Logistic),
            "probit" => Some(Link::Probit),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Link::Identity => "identity",
            Link::Logistic => "logistic",
            Link::Probit => "probit",
        }
    }
}

/// Links of the non-zero part (`g`) and the gate (`h`) with their derivative
/// lower bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkPair {
    pub g: Link,
    pub h: Link,
    pub kappa_g: f64,
    pub kappa_h: f64,
}

impl LinkPair {
    /// Derivative bounds default to the infimum over `|z| <= 2`, the range of
    /// `w^T theta` for unit features and `||theta - theta*|| <= 1`.
    pub fn new(g: Link, h: Link) -> Result<Self> {
        if !h.is_probability() {
            return Err(invalid("h", "gate link must map into [0, 1]"));
        }
        Ok(LinkPair {
            g,
            h,
            kappa_g: g.min_derivative(2.0),
            kappa_h: h.min_derivative(2.0),
        })
    }
}
