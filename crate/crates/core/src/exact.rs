//! Closed-form radial motion and reconstruction of full trajectories.
//!
//! From `dD/dt = 2H` and `d(2K)/dt = 2D` the squared radius is the quadratic
//! `r²(t) = 2E t² + 2D₀ t + r₀²`. The angular part evolves under `I` in the
//! reparametrized time `T(t) = ∫ dt / r²`.

use std::sync::Arc;

use serde::Serialize;

use crate::conformal::ConformalSystem;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::phase::{norm, Adaptive, PhaseState, Trajectory};

/// Tolerance of the Casimir constraint `2E r₀² − D₀² = 2I₀`.
pub const CONSTRAINT_TOL: f64 = 1e-10;

/// Absolute tolerance of the `T(t)` quadrature.
pub const QUADRATURE_TOL: f64 = 1e-12;

/// Relative tolerance used for the angular flow in [`reconstruct`].
pub const RECONSTRUCT_RTOL: f64 = 1e-12;

/// Constants of motion fixing the radial evolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialData {
    pub e: f64,
    pub d0: f64,
    pub r0sq: f64,
    pub i0: f64,
}

impl RadialData {
    /// Validated constructor; all four values must satisfy the constraint.
    pub fn new(e: f64, d0: f64, r0sq: f64, i0: f64) -> Result<Self> {
        if !(r0sq > 0.0) || ![e, d0, r0sq, i0].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput(format!("need finite data with r0sq > 0 (r0sq={r0sq})")));
        }
        let res = 2.0 * e * r0sq - d0 * d0 - 2.0 * i0;
        let scale = 1.0_f64.max((e * r0sq).abs()).max(d0 * d0).max(i0.abs());
        if res.abs() > CONSTRAINT_TOL * scale {
            return Err(Error::InvalidInput(format!(
                "2·E·r0sq − D0² = 2·I0 violated by {res:e}"
            )));
        }
        Ok(Self { e, d0, r0sq, i0 })
    }

    /// Fills in `I₀` from the constraint.
    pub fn from_radial(e: f64, d0: f64, r0sq: f64) -> Result<Self> {
        Self::new(e, d0, r0sq, e * r0sq - 0.5 * d0 * d0)
    }

    /// Reads `(H, D, 2K, I)` off a Cartesian state.
    pub fn from_state(sys: &ConformalSystem, s: &PhaseState) -> Result<Self> {
        let e = sys.hamiltonian().eval(s);
        let d0 = sys.dilatation().eval(s);
        let r0sq = 2.0 * sys.boost().eval(s);
        let i0 = sys.casimir().eval(s);
        Self::new(e, d0, r0sq, i0)
    }

    pub fn radial_squared(&self, t: f64) -> f64 {
        radial_squared(self, t)
    }

    /// `dr/dt = (2Et + D₀)/r`, which equals `p_r` for unit mass.
    pub fn radial_momentum(&self, t: f64) -> f64 {
        (2.0 * self.e * t + self.d0) / self.radial_squared(t).sqrt()
    }
}

pub fn radial_squared(rd: &RadialData, t: f64) -> f64 {
    (2.0 * rd.e * t + 2.0 * rd.d0) * t + rd.r0sq
}

/// Smallest positive `t` with `r²(t) = 0`, if any.
pub fn fall_time(rd: &RadialData) -> Option<f64> {
    let (a, b, c) = (2.0 * rd.e, 2.0 * rd.d0, rd.r0sq);
    let roots: Vec<f64> = if a == 0.0 {
        if b == 0.0 {
            vec![]
        } else {
            vec![-c / b]
        }
    } else {
        // b² − 4ac = −8 I₀
        let disc = -8.0 * rd.i0;
        if disc < 0.0 {
            return None;
        }
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        if q == 0.0 {
            vec![0.0]
        } else {
            vec![q / a, c / q]
        }
    };
    roots.into_iter().filter(|t| *t > 0.0).min_by(f64::total_cmp)
}

/// Returns `CollapseOnPath` if `r²` reaches zero between `0` and `t`.
fn check_no_collapse(rd: &RadialData, t: f64) -> Result<()> {
    let (lo, hi) = if t >= 0.0 { (0.0, t) } else { (t, 0.0) };
    let mut candidates = vec![lo, hi];
    if rd.e != 0.0 {
        let vertex = -rd.d0 / (2.0 * rd.e);
        if vertex > lo && vertex < hi {
            candidates.push(vertex);
        }
    }
    let min = candidates.iter().map(|&s| radial_squared(rd, s)).fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        return Ok(());
    }
    let time = if t >= 0.0 {
        fall_time(rd).unwrap_or(t)
    } else {
        let mirrored = RadialData { d0: -rd.d0, ..*rd };
        -fall_time(&mirrored).unwrap_or(-t)
    };
    Err(Error::CollapseOnPath { time })
}

/// `T(t) = ∫₀ᵗ ds / r²(s)`: closed form for `I₀ > 0`, quadrature otherwise.
pub fn reparam_time(rd: &RadialData, t: f64) -> Result<f64> {
    check_no_collapse(rd, t)?;
    if rd.i0 > 0.0 {
        Ok(reparam_closed_form(rd, t))
    } else {
        reparam_quadrature(rd, t)
    }
}

/// `(1/√(2I₀))·[atan((2Et + D₀)/√(2I₀)) − atan(D₀/√(2I₀))]`, valid for `I₀ > 0`.
pub fn reparam_closed_form(rd: &RadialData, t: f64) -> f64 {
    let s = (2.0 * rd.i0).sqrt();
    let (x, y) = ((2.0 * rd.e * t + rd.d0) / s, rd.d0 / s);
    let diff = x.atan() - y.atan();
    diff / s
}

/// `T(t)` by adaptive Gauss–Kronrod quadrature to [`QUADRATURE_TOL`].
pub fn reparam_quadrature(rd: &RadialData, t: f64) -> Result<f64> {
    check_no_collapse(rd, t)?;
    let f = |s: f64| 1.0 / radial_squared(rd, s);
    if t >= 0.0 {
        gauss_kronrod(&f, 0.0, t, QUADRATURE_TOL)
    } else {
        gauss_kronrod(&f, t, 0.0, QUADRATURE_TOL).map(|v| -v)
    }
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const K15_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the odd-indexed nodes, the last entry is the centre.
const G7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = K15_WEIGHTS[7] * fc;
    let mut g = G7_WEIGHTS[3] * fc;
    for i in 0..7 {
        let x = h * GK_NODES[i];
        let s = f(c - x) + f(c + x);
        k += K15_WEIGHTS[i] * s;
        if i % 2 == 1 {
            g += G7_WEIGHTS[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Globally adaptive G7K15: bisects the interval with the largest error
/// estimate until the summed estimate drops below `tol`.
pub fn gauss_kronrod(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut parts = vec![(a, b, gk15(f, a, b))];
    for _ in 0..10_000 {
        let total_err: f64 = parts.iter().map(|p| p.2 .1).sum();
        if !total_err.is_finite() {
            break;
        }
        if total_err <= tol {
            return Ok(parts.iter().map(|p| p.2 .0).sum());
        }
        let worst = (0..parts.len())
            .max_by(|&i, &j| parts[i].2 .1.total_cmp(&parts[j].2 .1))
            .unwrap();
        let (lo, hi, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        parts.push((lo, mid, gk15(f, lo, mid)));
        parts.push((mid, hi, gk15(f, mid, hi)));
    }
    Err(Error::DomainError(format!("quadrature on [{a}, {b}] did not reach {tol:e}")))
}

/// Reconstructs the Cartesian trajectory on `t_grid` from the closed-form
/// radial motion and the angular flow of `I` in reparametrized time.
pub fn reconstruct(sys: &ConformalSystem, s0: &PhaseState, t_grid: &[f64]) -> Result<Trajectory> {
    reconstruct_with(sys, s0, t_grid, RECONSTRUCT_RTOL)
}

pub fn reconstruct_with(
    sys: &ConformalSystem,
    s0: &PhaseState,
    t_grid: &[f64],
    rtol: f64,
) -> Result<Trajectory> {
    if s0.dim() != sys.dim() {
        return Err(Error::InvalidInput("state and system dimensions differ".into()));
    }
    let r0 = s0.radius();
    if !(r0 > 0.0) {
        return Err(Error::ChartSingular("reconstruction starts at the origin".into()));
    }
    if t_grid.is_empty()
        || t_grid[0] < 0.0
        || t_grid.windows(2).any(|w| w[1] <= w[0])
        || t_grid.iter().any(|t| !t.is_finite())
    {
        return Err(Error::InvalidInput("time grid must be non-negative and strictly increasing".into()));
    }
    let rd = RadialData::from_state(sys, s0)?;
    let t_max = *t_grid.last().unwrap();
    check_no_collapse(&rd, t_max)?;

    // Angular data as a point of T*S^{d−1} ⊂ T*R^d: unit vector u and
    // tangent momentum ν = r·p_⊥. The Casimir I generates their flow and
    // leaves |u| and u·ν invariant.
    let u0: Vec<f64> = s0.q.iter().map(|x| x / r0).collect();
    let pr0: f64 = s0.p.iter().zip(&u0).map(|(a, b)| a * b).sum();
    let nu0: Vec<f64> = s0.p.iter().zip(&u0).map(|(p, u)| r0 * (p - pr0 * u)).collect();
    let a0 = PhaseState::from_parts(u0, nu0);

    let mut t_of_tau = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        t_of_tau.push(reparam_time(&rd, t)?);
    }

    let angular = if sys.dim() == 1 || t_of_tau.iter().all(|&v| v == 0.0) {
        // d = 1 has no sphere to move on (u = ±1, ν = 0).
        t_of_tau.iter().map(|_| a0.clone()).collect::<Vec<_>>()
    } else {
        if t_of_tau.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::DomainError("reparametrized time is not increasing".into()));
        }
        let project: Arc<dyn Fn(&mut PhaseState) + Send + Sync> = Arc::new(|s: &mut PhaseState| {
            let n = norm(&s.q);
            s.q.iter_mut().for_each(|x| *x /= n);
            let c: f64 = s.q.iter().zip(&s.p).map(|(a, b)| a * b).sum();
            for (p, u) in s.p.iter_mut().zip(&s.q) {
                *p -= c * u;
            }
        });
        let flow = Adaptive::new(sys.casimir(), rtol)?
            .with_projection(project)
            .with_guard(sys.guard());
        let traj = flow.run_grid(&a0, &t_of_tau)?;
        traj.states
    };

    let monitors = sys.monitors();
    let mut out = Trajectory::new(monitors.names());
    for ((&t, a), _) in t_grid.iter().zip(&angular).zip(&t_of_tau) {
        let r2 = rd.radial_squared(t);
        let r = r2.sqrt();
        let pr = rd.radial_momentum(t);
        let q = a.q.iter().map(|u| r * u).collect();
        let p = a.q.iter().zip(&a.p).map(|(u, nu)| pr * u + nu / r).collect();
        out.record(t, PhaseState::from_parts(q, p), &monitors);
    }
    Ok(out)
}

/// Reconstructs several initial states on a shared grid.
pub fn reconstruct_batch(
    sys: &ConformalSystem,
    states: &[PhaseState],
    t_grid: &[f64],
    exec: Execution,
) -> Vec<Result<Trajectory>> {
    exec.map(states, |s| reconstruct(sys, s, t_grid))
}
