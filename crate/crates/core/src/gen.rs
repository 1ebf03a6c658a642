//! Random benchmark instances: uniform random digraphs with random signs
//! and a fixed number of random observations.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{Instance, Sign, ValidatedInstance};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenParams {
    /// Number of vertices.
    pub alpha: usize,
    /// Average total degree; the edge count is `round(beta * alpha / 2)`.
    pub beta: f64,
    /// Fraction of observed vertices.
    pub gamma: f64,
    pub seed: u64,
    /// Overrides the edge count derived from `beta`.
    pub edges: Option<usize>,
}

impl GenParams {
    pub fn new(alpha: usize, beta: f64, gamma: f64, seed: u64) -> Self {
        GenParams {
            alpha,
            beta,
            gamma,
            seed,
            edges: None,
        }
    }

    pub fn edge_count(&self) -> usize {
        self.edges
            .unwrap_or_else(|| (self.beta * self.alpha as f64 / 2.0).round() as usize)
    }

    pub fn observed_count(&self) -> usize {
        // The epsilon keeps products like 0.033 * 1000 from flooring to 32.
        (self.gamma * self.alpha as f64 + 1e-9).floor() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
}

pub fn generate(p: &GenParams) -> Result<ValidatedInstance, GenError> {
    let invalid = |msg: String| Err(GenError::InvalidParams(msg));
    if p.alpha == 0 {
        return invalid("alpha must be at least 1".into());
    }
    if !(p.beta.is_finite() && p.beta >= 0.0) {
        return invalid(format!("beta must be a nonnegative number, got {}", p.beta));
    }
    if !(0.0..=1.0).contains(&p.gamma) {
        return invalid(format!("gamma must lie in [0, 1], got {}", p.gamma));
    }
    let pairs = p.alpha * (p.alpha - 1);
    let m = p.edge_count();
    if m > pairs {
        return invalid(format!("{m} edges do not fit on {} vertices", p.alpha));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let name = |i: usize| format!("v{i}");
    let mut raw = Instance::new();
    for i in 0..p.alpha {
        raw.vertex(name(i));
    }
    // Ordered pair k maps to (src, dst) with dst skipping src.
    let mut has_pred = vec![false; p.alpha];
    let mut picked = sample(&mut rng, pairs, m).into_vec();
    picked.sort_unstable();
    for k in picked {
        let src = k / (p.alpha - 1);
        let mut dst = k % (p.alpha - 1);
        if dst >= src {
            dst += 1;
        }
        has_pred[dst] = true;
        raw.edge(name(src), name(dst), Some(random_sign(&mut rng)));
    }
    let mut observed = sample(&mut rng, p.alpha, p.observed_count()).into_vec();
    observed.sort_unstable();
    for v in observed {
        raw.observe(name(v), random_sign(&mut rng));
    }
    for (v, _) in has_pred.iter().enumerate().filter(|(_, &h)| !h) {
        raw.input(name(v));
    }
    Ok(raw.validate().expect("generated instance is valid"))
}

fn random_sign(rng: &mut impl Rng) -> Sign {
    if rng.gen_bool(0.5) {
        Sign::Plus
    } else {
        Sign::Minus
    }
}
