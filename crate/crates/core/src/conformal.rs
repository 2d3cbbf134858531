//! Conformal systems `H = p²/2 + V`, `D = p·q`, `K = q²/2` and checks of the
//! `so(1,2)` relations, the homogeneity of `V` and the Casimir identity
//! `4HK − D² = 2I`.

use std::sync::Arc;

use serde::Serialize;

use crate::dual::{Dual, Scalar};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::phase::{
    norm, poisson_bracket, Adaptive, Guard, MonitorSet, Observable, PhaseState, SingularDistance,
    Trajectory, Verlet,
};
use crate::sampling::{StateSampler, EXCLUSION};

/// Labels of the three checked relations, in report order.
pub const RELATIONS: [&str; 3] = ["{H,D}=2H", "{H,K}=D", "{K,D}=-2K"];

#[derive(Clone)]
pub struct ConformalSystem {
    dim: usize,
    potential: Observable,
    singular: Option<SingularDistance>,
    hamiltonian: Observable,
    dilatation: Observable,
    boost: Observable,
    casimir: Observable,
}

impl std::fmt::Debug for ConformalSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConformalSystem")
            .field("dim", &self.dim)
            .field("potential", &self.potential)
            .finish()
    }
}

fn half_square<S: Scalar>(v: &[S]) -> S {
    v.iter().fold(S::zero(), |acc, &x| acc + x * x).scale(0.5)
}

impl ConformalSystem {
    /// Assembles the generators. Homogeneity of `V` is not checked here.
    pub fn new(potential: Observable, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        if potential.dim() != dim {
            return Err(Error::InvalidInput(format!(
                "potential arity {} does not match dimension {dim}",
                potential.dim()
            )));
        }
        let kinetic = Observable::exact("T", dim, |_, p| half_square(p));
        let hamiltonian = kinetic.add(&potential).renamed("H");
        let dilatation = Observable::exact("D", dim, |q, p| {
            q.iter().zip(p).fold(Dual::cst(0.0), |acc, (&x, &y)| acc + x * y)
        });
        let boost = Observable::exact("K", dim, |q, _| half_square(q));
        let casimir = hamiltonian
            .mul(&boost)
            .scale(4.0)
            .sub(&dilatation.mul(&dilatation))
            .scale(0.5)
            .renamed("I");
        Ok(Self { dim, potential, singular: None, hamiltonian, dilatation, boost, casimir })
    }

    /// Attaches the distance-to-singular-set function used by samplers and
    /// integrator guards.
    pub fn with_singularity(mut self, distance: SingularDistance) -> Self {
        self.singular = Some(distance);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn potential(&self) -> &Observable {
        &self.potential
    }

    pub fn hamiltonian(&self) -> &Observable {
        &self.hamiltonian
    }

    pub fn dilatation(&self) -> &Observable {
        &self.dilatation
    }

    pub fn boost(&self) -> &Observable {
        &self.boost
    }

    /// `I = (4HK − D²)/2` as an observable.
    pub fn casimir(&self) -> &Observable {
        &self.casimir
    }

    /// `H, D, K, I` in that order.
    pub fn monitors(&self) -> MonitorSet {
        MonitorSet::new(vec![
            self.hamiltonian.clone(),
            self.dilatation.clone(),
            self.boost.clone(),
            self.casimir.clone(),
        ])
    }

    /// Distance from `q` to the singular set of `V` (the origin counts for
    /// every non-free potential). `+∞` when no singular set is attached.
    pub fn singular_distance(&self, q: &[f64]) -> f64 {
        self.singular.as_ref().map_or(f64::INFINITY, |f| f(q))
    }

    pub fn guard(&self) -> Option<Guard> {
        self.singular.clone().map(Guard::new)
    }

    /// True when `s` is finite, outside the exclusion radius and `V` is finite.
    pub fn admits(&self, s: &PhaseState, exclusion: f64) -> bool {
        s.is_finite()
            && self.singular_distance(&s.q) >= exclusion
            && self.potential.eval(s).is_finite()
    }

    pub fn casimir_i(&self, s: &PhaseState) -> f64 {
        casimir_i(self, s)
    }

    pub fn integrate_verlet(&self, s0: &PhaseState, dt: f64, t_end: f64) -> Result<Trajectory> {
        Verlet::new(&self.potential)
            .with_guard(self.guard())
            .with_monitors(self.monitors())
            .run(s0, dt, t_end)
    }

    pub fn integrate_adaptive(&self, s0: &PhaseState, rtol: f64, t_end: f64) -> Result<Trajectory> {
        Adaptive::new(&self.hamiltonian, rtol)?
            .with_guard(self.guard())
            .with_monitors(self.monitors())
            .run(s0, t_end)
    }

    pub fn integrate_adaptive_grid(
        &self,
        s0: &PhaseState,
        rtol: f64,
        times: &[f64],
    ) -> Result<Trajectory> {
        Adaptive::new(&self.hamiltonian, rtol)?
            .with_guard(self.guard())
            .with_monitors(self.monitors())
            .run_grid(s0, times)
    }

    /// Seeded states uniform in `[−2, 2]^{2d}` outside the exclusion radius.
    pub fn sample_states(&self, n: usize, seed: u64) -> Result<Vec<PhaseState>> {
        StateSampler::new(seed).batch(n, self.dim, |s| self.admits(s, EXCLUSION))
    }
}

/// Builds the conformal system for potential `V` in `d` dimensions.
pub fn build_system(potential: Observable, dim: usize) -> Result<ConformalSystem> {
    ConformalSystem::new(potential, dim)
}

/// `(4H(s)K(s) − D(s)²)/2`.
pub fn casimir_i(sys: &ConformalSystem, s: &PhaseState) -> f64 {
    let h = sys.hamiltonian.eval(s);
    let k = sys.boost.eval(s);
    let d = sys.dilatation.eval(s);
    (4.0 * h * k - d * d) / 2.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomogeneityReport {
    /// `max |q·∇V + 2V| / max(1, |V|)` over the samples.
    pub max_residual: f64,
    pub samples: usize,
    pub tol: f64,
    pub seed: u64,
    pub pass: bool,
}

/// Checks `q·∇V(q) = −2V(q)` at seeded random configurations. Draws where
/// `V` or its gradient is non-finite, or `|q| < 10⁻³`, are resampled.
pub fn check_homogeneity(
    potential: &Observable,
    dim: usize,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<HomogeneityReport> {
    if samples == 0 {
        return Err(Error::InvalidInput("samples must be at least 1".into()));
    }
    let mut sampler = StateSampler::new(seed);
    let mut max_residual = 0.0_f64;
    let mut taken = 0;
    let mut tries = 0;
    while taken < samples {
        if tries == 100 * samples {
            return Err(Error::InvalidInput(format!(
                "only {taken} admissible configurations in {tries} draws"
            )));
        }
        tries += 1;
        let q = sampler.vector(dim);
        if norm(&q) < EXCLUSION {
            continue;
        }
        let s = PhaseState::from_parts(q, vec![0.0; dim]);
        let v = potential.eval(&s);
        let Ok(g) = potential.grad_q(&s) else { continue };
        if !v.is_finite() {
            continue;
        }
        let euler: f64 = s.q.iter().zip(&g).map(|(x, dv)| x * dv).sum();
        max_residual = max_residual.max((euler + 2.0 * v).abs() / v.abs().max(1.0));
        taken += 1;
    }
    Ok(HomogeneityReport { max_residual, samples, tol, seed, pass: max_residual < tol })
}

/// Residuals of the three `so(1,2)` relations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgebraReport {
    pub relations: Vec<String>,
    /// Max over samples of `|lhs − rhs| / max(1, |rhs|)`, per relation.
    pub residuals: Vec<f64>,
    pub samples: usize,
    pub tol: f64,
    pub seed: u64,
    pub pass: bool,
}

impl AlgebraReport {
    /// Relations whose residual reached the tolerance.
    pub fn failing(&self) -> Vec<&str> {
        self.relations
            .iter()
            .zip(&self.residuals)
            .filter(|(_, &r)| !(r < self.tol))
            .map(|(n, _)| n.as_str())
            .collect()
    }
}

/// Algebra residuals at one state.
pub fn algebra_residuals(sys: &ConformalSystem, s: &PhaseState) -> Result<[f64; 3]> {
    let (h, d, k) = (&sys.hamiltonian, &sys.dilatation, &sys.boost);
    let hv = h.eval(s);
    let dv = d.eval(s);
    let kv = k.eval(s);
    let rel = |lhs: f64, rhs: f64| (lhs - rhs).abs() / rhs.abs().max(1.0);
    Ok([
        rel(poisson_bracket(h, d, s)?, 2.0 * hv),
        rel(poisson_bracket(h, k, s)?, dv),
        rel(poisson_bracket(k, d, s)?, -2.0 * kv),
    ])
}

pub fn verify_algebra(
    sys: &ConformalSystem,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<AlgebraReport> {
    verify_algebra_with(sys, samples, tol, seed, Execution::default())
}

pub fn verify_algebra_with(
    sys: &ConformalSystem,
    samples: usize,
    tol: f64,
    seed: u64,
    exec: Execution,
) -> Result<AlgebraReport> {
    if samples == 0 {
        return Err(Error::InvalidInput("samples must be at least 1".into()));
    }
    let states = sys.sample_states(samples, seed)?;
    let per_state = exec.map(&states, |s| algebra_residuals(sys, s));
    let mut residuals = [0.0_f64; 3];
    for r in per_state {
        for (acc, v) in residuals.iter_mut().zip(r?) {
            *acc = acc.max(v);
        }
    }
    Ok(AlgebraReport {
        relations: RELATIONS.iter().map(|s| s.to_string()).collect(),
        residuals: residuals.to_vec(),
        samples,
        tol,
        seed,
        pass: residuals.iter().all(|&r| r < tol),
    })
}

/// Distance function for potentials singular only at the origin.
pub fn origin_distance() -> SingularDistance {
    Arc::new(|q: &[f64]| norm(q))
}
