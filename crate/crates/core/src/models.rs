//! Catalog of conformal potentials.
//!
//! | model               | `V(q)`                                   | `U(θ)` on the sphere      |
//! |---------------------|------------------------------------------|---------------------------|
//! | `free`              | `0`                                      | `0`                       |
//! | `inverse_square`    | `κ / r²`                                 | `κ`                       |
//! | `conformal_higgs`   | `ω²/(2x_d²) + ω²/(2r²)`                  | `ω² tan²θ / 2 + ω²`       |
//! | `conformal_coulomb` | `γ x_d / (r² √(r² − x_d²))`              | `γ cot θ`                 |
//! | `calogero_relative` | `Σ_{i<j} g² / (x^i − x^j)²` without COM  | numeric only              |
//!
//! `θ` is the angle from the last Cartesian axis. The Higgs row differs from
//! the spherical oscillator `ω² tan²θ / 2` by the constant `ω²`. Calogero
//! uses the classical coupling `g²` (not the quantum `g(g − 1)`).

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::conformal::{origin_distance, ConformalSystem};
use crate::dual::{Dual, Scalar};
use crate::error::{Error, Result};
use crate::phase::{norm, Observable, PhaseState, SingularDistance};
use crate::reduction::unit_vector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum ModelSpec {
    Free { dim: usize },
    InverseSquare { dim: usize, kappa: f64 },
    ConformalHiggs { dim: usize, omega: f64 },
    ConformalCoulomb { dim: usize, gamma: f64 },
    /// `particles` bodies on a line; the reduced system has `particles − 1`
    /// dimensions.
    CalogeroRelative { particles: usize, g: f64 },
}

fn r2<S: Scalar>(q: &[S]) -> S {
    q.iter().fold(S::zero(), |acc, &x| acc + x * x)
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Free { .. } => "free",
            ModelSpec::InverseSquare { .. } => "inverse_square",
            ModelSpec::ConformalHiggs { .. } => "conformal_higgs",
            ModelSpec::ConformalCoulomb { .. } => "conformal_coulomb",
            ModelSpec::CalogeroRelative { .. } => "calogero_relative",
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            ModelSpec::Free { dim }
            | ModelSpec::InverseSquare { dim, .. }
            | ModelSpec::ConformalHiggs { dim, .. }
            | ModelSpec::ConformalCoulomb { dim, .. } => dim,
            ModelSpec::CalogeroRelative { particles, .. } => particles.saturating_sub(1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        match *self {
            ModelSpec::Free { dim } | ModelSpec::InverseSquare { dim, .. } if dim == 0 => {
                bad("dimension must be at least 1".into())
            }
            ModelSpec::InverseSquare { kappa, .. } if !kappa.is_finite() => {
                bad("kappa must be finite".into())
            }
            ModelSpec::ConformalHiggs { dim, omega } if dim < 2 || !(omega > 0.0) || !omega.is_finite() => {
                bad(format!("conformal_higgs needs dim >= 2 and omega > 0 (dim={dim}, omega={omega})"))
            }
            ModelSpec::ConformalCoulomb { dim, gamma } if dim < 2 || !gamma.is_finite() => {
                bad(format!("conformal_coulomb needs dim >= 2 and finite gamma (dim={dim})"))
            }
            ModelSpec::CalogeroRelative { particles, g } if particles < 2 || g == 0.0 || !g.is_finite() => {
                bad(format!("calogero needs particles >= 2 and g != 0 (particles={particles}, g={g})"))
            }
            _ => Ok(()),
        }
    }

    /// The potential as an exact observable of arity `dim()`.
    pub fn potential(&self) -> Result<Observable> {
        self.validate()?;
        let d = self.dim();
        Ok(match *self {
            ModelSpec::Free { .. } => Observable::constant(d, 0.0).renamed("V"),
            ModelSpec::InverseSquare { kappa, .. } => {
                Observable::exact("V", d, move |q, _| Dual::cst(kappa) / r2(q))
            }
            ModelSpec::ConformalHiggs { omega, .. } => {
                let w2 = 0.5 * omega * omega;
                Observable::exact("V", d, move |q, _| {
                    let xd = q[d - 1];
                    Dual::cst(w2) / (xd * xd) + Dual::cst(w2) / r2(q)
                })
            }
            ModelSpec::ConformalCoulomb { gamma, .. } => Observable::exact("V", d, move |q, _| {
                let rho = r2(&q[..d - 1]).sqrt();
                Dual::cst(gamma) * q[d - 1] / (r2(q) * rho)
            }),
            ModelSpec::CalogeroRelative { particles, g } => {
                let jac = Arc::new(Jacobi::new(particles));
                let g2 = g * g;
                Observable::exact("V", d, move |y, _| calogero_sum(&jac.positions(y), g2))
            }
        })
    }

    /// Distance from `q` to the singular set (`+∞` for the free particle).
    pub fn singular_distance(&self) -> Option<SingularDistance> {
        let d = self.dim();
        match *self {
            ModelSpec::Free { .. } => None,
            ModelSpec::InverseSquare { .. } => Some(origin_distance()),
            ModelSpec::ConformalHiggs { .. } => {
                Some(Arc::new(move |q: &[f64]| q[d - 1].abs().min(norm(q))))
            }
            ModelSpec::ConformalCoulomb { .. } => {
                Some(Arc::new(move |q: &[f64]| norm(&q[..d - 1]).min(norm(q))))
            }
            ModelSpec::CalogeroRelative { particles, .. } => {
                let jac = Jacobi::new(particles);
                Some(Arc::new(move |y: &[f64]| {
                    let x = jac.positions(y);
                    let mut m = f64::INFINITY;
                    for i in 0..x.len() {
                        for j in i + 1..x.len() {
                            m = m.min((x[i] - x[j]).abs() / std::f64::consts::SQRT_2);
                        }
                    }
                    m
                }))
            }
        }
    }

    pub fn system(&self) -> Result<ConformalSystem> {
        let sys = ConformalSystem::new(self.potential()?, self.dim())?;
        Ok(match self.singular_distance() {
            Some(f) => sys.with_singularity(f),
            None => sys,
        })
    }

    /// `V(q)`, rejecting configurations on the singular set.
    pub fn potential_at(&self, q: &[f64]) -> Result<f64> {
        if q.len() != self.dim() {
            return Err(Error::InvalidInput(format!("expected {} coordinates", self.dim())));
        }
        if let Some(f) = self.singular_distance() {
            if !(f(q) > 0.0) {
                return Err(Error::DomainError(format!("{} is singular at {q:?}", self.name())));
            }
        }
        let v = self.potential()?.eval_raw(q, &vec![0.0; q.len()]);
        if !v.is_finite() {
            return Err(Error::DomainError(format!("{} is singular at {q:?}", self.name())));
        }
        Ok(v)
    }
}

/// One representative of every catalog entry, used by the acceptance suite
/// and `confmech models`.
pub fn catalog() -> Vec<ModelSpec> {
    vec![
        ModelSpec::Free { dim: 2 },
        ModelSpec::InverseSquare { dim: 2, kappa: 1.0 },
        ModelSpec::InverseSquare { dim: 3, kappa: 1.0 },
        ModelSpec::ConformalHiggs { dim: 3, omega: 1.0 },
        ModelSpec::ConformalCoulomb { dim: 3, gamma: 1.0 },
        ModelSpec::CalogeroRelative { particles: 2, g: 1.0 },
        ModelSpec::CalogeroRelative { particles: 3, g: 1.0 },
        ModelSpec::CalogeroRelative { particles: 4, g: 1.0 },
    ]
}

pub fn potential(spec: &ModelSpec) -> Result<Observable> {
    spec.potential()
}

fn calogero_sum<S: Scalar>(x: &[S], g2: f64) -> S {
    let mut v = S::zero();
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let dx = x[i] - x[j];
            v += S::cst(g2) / (dx * dx);
        }
    }
    v
}

/// Orthonormal Jacobi coordinates for `n` particles on a line:
/// `y_k = (x¹ + … + x^k − k·x^{k+1}) / √(k(k+1))` for `k = 1..n−1`, plus the
/// centre-of-mass row `Σx / √n`.
#[derive(Debug, Clone)]
pub struct Jacobi {
    /// `(n−1) × n`, row `k−1` holds `y_k`.
    rows: Vec<Vec<f64>>,
}

impl Jacobi {
    pub fn new(n: usize) -> Self {
        let rows = (1..n)
            .map(|k| {
                let s = 1.0 / ((k * (k + 1)) as f64).sqrt();
                (0..n)
                    .map(|i| match i.cmp(&k) {
                        std::cmp::Ordering::Less => s,
                        std::cmp::Ordering::Equal => -(k as f64) * s,
                        std::cmp::Ordering::Greater => 0.0,
                    })
                    .collect()
            })
            .collect();
        Self { rows }
    }

    pub fn particles(&self) -> usize {
        self.rows.len() + 1
    }

    /// Relative coordinates and the centre-of-mass coordinate `Σx/√n`.
    pub fn split(&self, x: &[f64]) -> (Vec<f64>, f64) {
        let n = self.particles() as f64;
        let y = self.rows.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect();
        (y, x.iter().sum::<f64>() / n.sqrt())
    }

    /// Particle positions with the centre of mass at the origin.
    pub fn positions<S: Scalar>(&self, y: &[S]) -> Vec<S> {
        let n = self.particles();
        (0..n)
            .map(|i| {
                self.rows
                    .iter()
                    .zip(y)
                    .fold(S::zero(), |acc, (row, &yk)| acc + yk.scale(row[i]))
            })
            .collect()
    }

    /// Maps a full `n`-particle state to the relative system (momenta
    /// transform with the same orthogonal matrix).
    pub fn reduce_state(&self, x: &[f64], p: &[f64]) -> PhaseState {
        PhaseState::from_parts(self.split(x).0, self.split(p).0)
    }
}

/// Full `n`-particle Calogero Hamiltonian `Σp²/2 + Σ g²/(x^i − x^j)²`.
pub fn calogero_full_hamiltonian(x: &[f64], p: &[f64], g: f64) -> f64 {
    0.5 * r2(p) + calogero_sum(x, g * g)
}

/// Calogero model with the centre of mass removed, as an `(n−1)`-dimensional
/// conformal system.
pub fn calogero_relative(n: usize, g: f64) -> Result<ConformalSystem> {
    ModelSpec::CalogeroRelative { particles: n, g }.system()
}

/// Singular directions of the reduced Calogero potential on `S^{n−2}`, both
/// orientations, `n(n−1)` points in all.
///
/// For `n = 3` these are the points where `U` diverges, the images of the
/// lines `x^i = x^j`. For `n ≥ 4` the singular set is a union of great
/// spheres and each is represented by its pole, the image of `e_i − e_j`.
pub fn singular_directions(n: usize) -> Result<Vec<Vec<f64>>> {
    if n < 2 {
        return Err(Error::InvalidInput("need at least 2 particles".into()));
    }
    let jac = Jacobi::new(n);
    let mut out = Vec::with_capacity(n * (n - 1));
    for i in 0..n {
        for j in i + 1..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e[j] = -1.0;
            let (y, _) = jac.split(&e);
            let len = norm(&y);
            let mut u: Vec<f64> = y.iter().map(|v| v / len).collect();
            if n == 3 {
                u = vec![-u[1], u[0]];
            }
            out.push(u.iter().map(|v| -v).collect());
            out.push(u);
        }
    }
    Ok(out)
}

/// Closed-form angular potential of a catalog model as a function of the
/// angle `θ` from the last Cartesian axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum AngularForm {
    /// `U ≡ c`.
    Constant { value: f64 },
    /// `U = ω² tan²θ / 2 + ω²`.
    Higgs { omega: f64 },
    /// `U = γ cot θ`.
    Coulomb { gamma: f64 },
}

impl AngularForm {
    pub fn eval_polar(&self, theta: f64) -> f64 {
        match *self {
            AngularForm::Constant { value } => value,
            AngularForm::Higgs { omega } => {
                let t = theta.tan();
                0.5 * omega * omega * t * t + omega * omega
            }
            AngularForm::Coulomb { gamma } => gamma / theta.tan(),
        }
    }

    /// Evaluates at chart angles; `θ` is recovered from the last Cartesian
    /// component of the unit vector, so this works for every `d ≥ 2`.
    pub fn eval_chart(&self, phi: &[f64]) -> f64 {
        let n = unit_vector(phi);
        let z = n[n.len() - 1].clamp(-1.0, 1.0);
        match *self {
            AngularForm::Constant { value } => value,
            AngularForm::Higgs { omega } => {
                // tan²θ = (1 − z²)/z²
                0.5 * omega * omega * (1.0 - z * z) / (z * z) + omega * omega
            }
            AngularForm::Coulomb { gamma } => gamma * z / (1.0 - z * z).sqrt(),
        }
    }

    /// The sphere part without the additive constant (`ω² tan²θ / 2` for Higgs).
    pub fn without_constant(&self, theta: f64) -> f64 {
        match *self {
            AngularForm::Higgs { omega } => self.eval_polar(theta) - omega * omega,
            _ => self.eval_polar(theta),
        }
    }
}

pub fn spherical_counterpart(spec: &ModelSpec) -> Result<AngularForm> {
    spec.validate()?;
    match *spec {
        ModelSpec::Free { .. } => Ok(AngularForm::Constant { value: 0.0 }),
        ModelSpec::InverseSquare { kappa, .. } => Ok(AngularForm::Constant { value: kappa }),
        ModelSpec::ConformalHiggs { omega, .. } => Ok(AngularForm::Higgs { omega }),
        ModelSpec::ConformalCoulomb { gamma, .. } => Ok(AngularForm::Coulomb { gamma }),
        ModelSpec::CalogeroRelative { .. } => Err(Error::Unsupported(
            "no closed-form angular potential for Calogero; use reduction::angular_potential".into(),
        )),
    }
}

/// Angle between two unit vectors, in `[0, π]`.
pub fn angle_between(a: &[f64], b: &[f64]) -> f64 {
    let c: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let s = {
        // |a × b| via Lagrange identity, stable near 0 and π
        let aa: f64 = a.iter().map(|x| x * x).sum();
        let bb: f64 = b.iter().map(|x| x * x).sum();
        (aa * bb - c * c).max(0.0).sqrt()
    };
    s.atan2(c).clamp(0.0, PI)
}
