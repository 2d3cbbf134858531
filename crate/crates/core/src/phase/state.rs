use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point `(q, p)` of the Cartesian phase space `T*R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhaseState {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if q.is_empty() || q.len() != p.len() {
            return Err(Error::InvalidInput(format!(
                "q and p must have equal non-zero length (got {} and {})",
                q.len(),
                p.len()
            )));
        }
        if q.iter().chain(&p).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("phase state has non-finite entries".into()));
        }
        Ok(Self { q, p })
    }

    /// Builds a state without validation. Callers guarantee equal lengths.
    pub(crate) fn from_parts(q: Vec<f64>, p: Vec<f64>) -> Self {
        debug_assert_eq!(q.len(), p.len());
        Self { q, p }
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn radius(&self) -> f64 {
        norm(&self.q)
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(&self.p).all(|v| v.is_finite())
    }

    /// Flattened `(q, p)` vector.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.q.clone();
        v.extend_from_slice(&self.p);
        v
    }

    pub(crate) fn from_flat(y: &[f64]) -> Self {
        let d = y.len() / 2;
        Self::from_parts(y[..d].to_vec(), y[d..].to_vec())
    }

    /// Applies the same axis permutation to `q` and `p`: new axis `i` takes
    /// old axis `perm[i]`. Rotating a state away from a chart pole, reducing,
    /// and permuting back is the supported way around `ChartSingular`.
    pub fn permute_axes(&self, perm: &[usize]) -> Result<Self> {
        let d = self.dim();
        let mut seen = vec![false; d];
        if perm.len() != d || perm.iter().any(|&i| i >= d || std::mem::replace(&mut seen[i], true)) {
            return Err(Error::InvalidInput(format!("{perm:?} is not a permutation of 0..{d}")));
        }
        Ok(Self::from_parts(
            perm.iter().map(|&i| self.q[i]).collect(),
            perm.iter().map(|&i| self.p[i]).collect(),
        ))
    }

    /// Euclidean distance between two states of equal dimension.
    pub fn distance(&self, other: &Self) -> f64 {
        self.q
            .iter()
            .zip(&other.q)
            .chain(self.p.iter().zip(&other.p))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn norm(&self) -> f64 {
        (dot(&self.q, &self.q) + dot(&self.p, &self.p)).sqrt()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
