//! Canonical split of `T*R^d` into the radial pair `(r, p_r)` and the
//! cotangent bundle of the unit sphere `T*S^{d−1}`.
//!
//! Nested hyperspherical chart with the last Cartesian axis as pole
//! (0-based components, `d ≥ 3`):
//!
//! ```text
//! x_{d−1} = r cos θ₁
//! x_{d−2} = r sin θ₁ cos θ₂
//!   ...
//! x_2     = r sin θ₁ ⋯ sin θ_{d−3} cos θ_{d−2}
//! x_0     = r sin θ₁ ⋯ sin θ_{d−2} cos φ
//! x_1     = r sin θ₁ ⋯ sin θ_{d−2} sin φ
//! ```
//!
//! For `d = 3` this is `x = r(sin θ cos φ, sin θ sin φ, cos θ)`; for `d = 2`
//! only the azimuth `φ` remains; for `d = 1` the sphere is the point `+1`
//! and the chart covers `x > 0`. Polar angles must stay in `(δ, π − δ)`.
//! A state at a pole can be handled by permuting axes first
//! ([`PhaseState::permute_axes`]), reducing, and permuting back.
//!
//! Momenta are pulled back by the point transformation: `π_α = p·∂x/∂θ_α`,
//! `p_r = p·q/|q|`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dual::{Dual, Scalar};
use crate::error::{Error, Result};
use crate::phase::{Observable, PhaseState};

/// Default polar-angle guard.
pub const CHART_DELTA: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedState {
    pub r: f64,
    pub p_r: f64,
    pub phi: Vec<f64>,
    pub pi: Vec<f64>,
}

impl ReducedState {
    pub fn dim(&self) -> usize {
        self.phi.len() + 1
    }

    /// `D = p_r r`.
    pub fn dilatation(&self) -> f64 {
        self.p_r * self.r
    }

    /// `K = r²/2`.
    pub fn boost(&self) -> f64 {
        0.5 * self.r * self.r
    }
}

/// Unit vector `n(θ)` (`diff = None`) or its partial derivative `∂n/∂θ_α`.
fn embed<S: Scalar>(angles: &[S], d: usize, diff: Option<usize>) -> Vec<S> {
    if d == 1 {
        return vec![if diff.is_none() { S::one() } else { S::zero() }];
    }
    let mut x = vec![S::zero(); d];
    let mut prod = S::one();
    let mut active = diff.is_none();
    let factors = |idx: usize, active: &mut bool| {
        let th = angles[idx];
        if diff == Some(idx) {
            *active = true;
            (th.cos(), -th.sin())
        } else {
            (th.sin(), th.cos())
        }
    };
    for k in 1..=d - 2 {
        let (s, c) = factors(k - 1, &mut active);
        if active {
            x[d - k] = prod * c;
        }
        prod *= s;
    }
    let (s, c) = factors(d - 2, &mut active);
    if active {
        x[0] = prod * c;
        x[1] = prod * s;
    }
    x
}

/// Chart angles of a non-zero vector (any scale).
fn angles_of<S: Scalar>(q: &[S]) -> Vec<S> {
    let d = q.len();
    if d < 2 {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(d - 1);
    // tail[m] = x_0² + … + x_{m−1}²
    let mut tail = vec![S::zero(); d + 1];
    for m in 1..=d {
        tail[m] = tail[m - 1] + q[m - 1] * q[m - 1];
    }
    for k in 1..=d - 2 {
        out.push(tail[d - k].sqrt().atan2(q[d - k]));
    }
    out.push(q[1].atan2(q[0]));
    out
}

fn dot_s<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (&x, &y)| acc + x * y)
}

/// `(r, p_r, angles, angular momenta)` in any scalar type.
fn reduce_generic<S: Scalar>(q: &[S], p: &[S]) -> (S, S, Vec<S>, Vec<S>) {
    let d = q.len();
    let r = dot_s(q, q).sqrt();
    let p_r = dot_s(p, q) / r;
    let angles = angles_of(q);
    let momenta = (0..angles.len())
        .map(|a| r * dot_s(p, &embed(&angles, d, Some(a))))
        .collect();
    (r, p_r, angles, momenta)
}

/// Polar angles (all but the last) must be inside `(δ, π − δ)`.
fn check_interior(phi: &[f64], delta: f64) -> Result<()> {
    if phi.len() < 2 {
        return Ok(());
    }
    for (i, &th) in phi[..phi.len() - 1].iter().enumerate() {
        if !(th > delta && th < std::f64::consts::PI - delta) {
            return Err(Error::ChartSingular(format!(
                "polar angle θ{} = {th} within {delta:e} of a pole; permute axes and retry",
                i + 1
            )));
        }
    }
    Ok(())
}

/// Chart with a configurable pole guard.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chart {
    pub delta: f64,
}

impl Default for Chart {
    fn default() -> Self {
        Self { delta: CHART_DELTA }
    }
}

impl Chart {
    pub fn new(delta: f64) -> Self {
        Self { delta }
    }

    pub fn to_hyperspherical(&self, s: &PhaseState) -> Result<ReducedState> {
        let d = s.dim();
        let r = s.radius();
        if !(r > 0.0) {
            return Err(Error::ChartSingular("state at the origin".into()));
        }
        if d == 1 && s.q[0] < 0.0 {
            return Err(Error::ChartSingular("one-dimensional chart covers x > 0 only".into()));
        }
        let (r, p_r, phi, pi) = reduce_generic(&s.q, &s.p);
        check_interior(&phi, self.delta)?;
        Ok(ReducedState { r, p_r, phi, pi })
    }

    pub fn from_hyperspherical(&self, rs: &ReducedState) -> Result<PhaseState> {
        let d = rs.dim();
        if rs.pi.len() != rs.phi.len() {
            return Err(Error::InvalidInput("phi and pi lengths differ".into()));
        }
        if !(rs.r > 0.0) {
            return Err(Error::InvalidInput(format!("r must be positive (got {})", rs.r)));
        }
        check_interior(&rs.phi, self.delta)?;
        let n = embed(&rs.phi, d, None);
        let q: Vec<f64> = n.iter().map(|x| rs.r * x).collect();
        let mut p: Vec<f64> = n.iter().map(|x| rs.p_r * x).collect();
        for (a, &pi_a) in rs.pi.iter().enumerate() {
            let e = embed(&rs.phi, d, Some(a));
            let scale = pi_a / (rs.r * dot_s(&e, &e));
            for (pi, ei) in p.iter_mut().zip(&e) {
                *pi += scale * ei;
            }
        }
        Ok(PhaseState::from_parts(q, p))
    }

    pub fn sphere_metric_inverse(&self, phi: &[f64], d: usize) -> Result<DMatrix<f64>> {
        if phi.len() + 1 != d {
            return Err(Error::InvalidInput(format!("need {} angles for d={d}", d - 1)));
        }
        check_interior(phi, self.delta)?;
        let diag: Vec<f64> = (0..d - 1)
            .map(|a| {
                let e = embed(phi, d, Some(a));
                1.0 / dot_s(&e, &e)
            })
            .collect();
        Ok(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag)))
    }
}

pub fn to_hyperspherical(s: &PhaseState) -> Result<ReducedState> {
    Chart::default().to_hyperspherical(s)
}

pub fn from_hyperspherical(rs: &ReducedState) -> Result<PhaseState> {
    Chart::default().from_hyperspherical(rs)
}

/// Inverse round metric of the unit `S^{d−1}`:
/// `diag(1, 1/sin²θ₁, 1/(sin²θ₁ sin²θ₂), …)`.
pub fn sphere_metric_inverse(phi: &[f64], d: usize) -> Result<DMatrix<f64>> {
    Chart::default().sphere_metric_inverse(phi, d)
}

/// Unit vector at chart angles `phi` in `R^d`.
pub fn unit_vector(phi: &[f64]) -> Vec<f64> {
    embed(phi, phi.len() + 1, None)
}

/// `U = r²V` at the Cartesian image of `rs`, checked to be the same at `2r`.
pub fn angular_potential(potential: &Observable, rs: &ReducedState) -> Result<f64> {
    let n = unit_vector(&rs.phi);
    let at = |r: f64| {
        let q: Vec<f64> = n.iter().map(|x| r * x).collect();
        r * r * potential.eval_raw(&q, &vec![0.0; q.len()])
    };
    let (u1, u2) = (at(rs.r), at(2.0 * rs.r));
    if !u1.is_finite() {
        return Err(Error::DomainError(format!("U is not finite at angles {:?}", rs.phi)));
    }
    if (u1 - u2).abs() > 1e-9 * u1.abs().max(1.0) {
        return Err(Error::NotHomogeneous { at_r: u1, at_2r: u2 });
    }
    Ok(u1)
}

/// Hamiltonian system on `T*S^{d−1}`: `I = ½ g^{αβ}π_απ_β + U(φ)`.
#[derive(Debug, Clone)]
pub struct SphericalSystem {
    dim: usize,
    /// `U` as an observable of arity `d − 1` (depends on angles only).
    angular: Observable,
    chart: Chart,
}

impl SphericalSystem {
    /// Free motion on `S^{d−1}`.
    pub fn free(dim: usize) -> Self {
        Self::with_angular(dim, Observable::constant(dim.saturating_sub(1).max(1), 0.0))
    }

    /// Explicit angular potential `U(φ)` (arity `d − 1`).
    pub fn with_angular(dim: usize, angular: Observable) -> Self {
        Self { dim, angular, chart: Chart::default() }
    }

    /// `U(φ) = V(n(φ))` for a degree −2 potential `V` on `R^d`.
    pub fn from_potential(potential: &Observable) -> Self {
        let dim = potential.dim();
        let arity = dim.saturating_sub(1).max(1);
        let v = potential.clone();
        let angular = if v.is_exact() {
            Observable::exact("U", arity, move |phi, _| {
                let n = embed(phi, dim, None);
                let zeros = vec![Dual::cst(0.0); dim];
                v.eval_dual(&n, &zeros).expect("exact potential")
            })
        } else {
            Observable::numeric("U", arity, move |phi, _| {
                let n = embed(phi, dim, None);
                v.eval_raw(&n, &vec![0.0; dim])
            })
        };
        Self { dim, angular, chart: Chart::default() }
    }

    pub fn with_chart(mut self, chart: Chart) -> Self {
        self.chart = chart;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn angular_potential(&self, phi: &[f64]) -> f64 {
        self.angular.eval_raw(phi, &vec![0.0; phi.len()])
    }

    /// `I(φ, π)` as an observable on the chart phase space (arity `d − 1`).
    pub fn hamiltonian(&self) -> Observable {
        let d = self.dim;
        let u = self.angular.clone();
        if u.is_exact() {
            Observable::exact("I", d - 1, move |phi, pi| {
                let kin = (0..phi.len()).fold(Dual::cst(0.0), |acc, a| {
                    let e = embed(phi, d, Some(a));
                    acc + pi[a] * pi[a] / dot_s(&e, &e)
                });
                kin.scale(0.5) + u.eval_dual(phi, pi).expect("exact angular potential")
            })
        } else {
            Observable::numeric("I", d - 1, move |phi, pi| {
                let kin: f64 = (0..phi.len())
                    .map(|a| {
                        let e = embed(phi, d, Some(a));
                        pi[a] * pi[a] / dot_s(&e, &e)
                    })
                    .sum();
                0.5 * kin + u.eval_raw(phi, pi)
            })
        }
    }
}

/// `½ πᵀ g^{-1}(φ) π + U(φ)`.
pub fn spherical_energy(sys: &SphericalSystem, phi: &[f64], pi: &[f64]) -> Result<f64> {
    let g = sys.chart.sphere_metric_inverse(phi, sys.dim)?;
    let pi_v = nalgebra::DVector::from_column_slice(pi);
    Ok(0.5 * (pi_v.transpose() * &g * &pi_v)[(0, 0)] + sys.angular_potential(phi))
}

/// Chart functions `r, p_r, φ^α, π_α` as observables on Cartesian `T*R^d`,
/// in that order.
pub fn chart_observables(d: usize) -> Vec<Observable> {
    let mut out = vec![
        Observable::exact("r", d, |q, p| reduce_generic(q, p).0),
        Observable::exact("p_r", d, |q, p| reduce_generic(q, p).1),
    ];
    for a in 0..d.saturating_sub(1) {
        out.push(Observable::exact(format!("phi{}", a + 1), d, move |q, p| {
            reduce_generic(q, p).2[a]
        }));
    }
    for a in 0..d.saturating_sub(1) {
        out.push(Observable::exact(format!("pi{}", a + 1), d, move |q, p| {
            reduce_generic(q, p).3[a]
        }));
    }
    out
}
