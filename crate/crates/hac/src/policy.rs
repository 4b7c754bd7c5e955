//! Merge policies: which eligible pair an agglomeration step merges.
//!
//! The engine lists candidates best first (highest similarity, then the
//! smallest `(min id, max id)` cluster pair) and the policy returns an index.
//! Only candidates with similarity at least `W_max / λ` are offered.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::rational::{int, Rational};

pub trait MergePolicy: Send {
    fn name(&self) -> String;

    fn lambda(&self) -> &Rational;

    /// Chooses one of `count ≥ 1` eligible candidates.
    fn pick(&mut self, count: usize) -> usize;
}

/// Always merges a globally most similar pair under the tie rule.
pub struct Exact {
    one: Rational,
}

impl Exact {
    pub fn new() -> Self {
        Exact { one: int(1) }
    }
}

impl Default for Exact {
    fn default() -> Self {
        Self::new()
    }
}

impl MergePolicy for Exact {
    fn name(&self) -> String {
        "exact".into()
    }

    fn lambda(&self) -> &Rational {
        &self.one
    }

    fn pick(&mut self, _count: usize) -> usize {
        0
    }
}

/// Seeded uniform choice among eligible candidates. At `λ = 1` it behaves
/// exactly like [`Exact`].
pub struct Adversarial {
    lambda: Rational,
    rng: ChaCha8Rng,
}

impl Adversarial {
    pub fn new(lambda: Rational, seed: u64) -> Self {
        Adversarial {
            lambda,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl MergePolicy for Adversarial {
    fn name(&self) -> String {
        format!("adversarial:{}", self.lambda)
    }

    fn lambda(&self) -> &Rational {
        &self.lambda
    }

    fn pick(&mut self, count: usize) -> usize {
        if self.lambda == int(1) {
            0
        } else {
            self.rng.gen_range(0..count)
        }
    }
}

/// Deterministic adversary that always takes the last offered candidate.
pub struct Reluctant {
    lambda: Rational,
}

impl Reluctant {
    pub fn new(lambda: Rational) -> Self {
        Reluctant { lambda }
    }
}

impl MergePolicy for Reluctant {
    fn name(&self) -> String {
        format!("reluctant:{}", self.lambda)
    }

    fn lambda(&self) -> &Rational {
        &self.lambda
    }

    fn pick(&mut self, count: usize) -> usize {
        if self.lambda == int(1) {
            0
        } else {
            count - 1
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PolicyError {
    #[error("unknown policy `{0}` (expected exact, adversarial:<λ> or reluctant:<λ>)")]
    Unknown(String),
    #[error("approximation factor must be a rational ≥ 1, got `{0}`")]
    BadLambda(String),
}

/// Parses `exact`, `adversarial:<λ>` or `reluctant:<λ>`.
pub fn policy_by_name(spec: &str, seed: u64) -> Result<Box<dyn MergePolicy>, PolicyError> {
    if spec == "exact" {
        return Ok(Box::new(Exact::new()));
    }
    let (kind, lambda) = spec
        .split_once(':')
        .ok_or_else(|| PolicyError::Unknown(spec.into()))?;
    let lambda: Rational = lambda
        .parse()
        .map_err(|_| PolicyError::BadLambda(lambda.into()))?;
    if lambda < int(1) {
        return Err(PolicyError::BadLambda(lambda.to_string()));
    }
    match kind {
        "adversarial" => Ok(Box::new(Adversarial::new(lambda, seed))),
        "reluctant" => Ok(Box::new(Reluctant::new(lambda))),
        _ => Err(PolicyError::Unknown(spec.into())),
    }
}
