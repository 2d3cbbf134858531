//! Reference integrators for Hamilton's equations `ẋ = ∂H/∂p`, `ṗ = −∂H/∂x`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::phase::{MonitorSet, Observable, PhaseState, Trajectory};

/// Distance from a configuration to the singular set of a potential.
pub type SingularDistance = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Integration stops once the singular distance drops below this value.
pub const SINGULARITY_STOP: f64 = 1e-6;

#[derive(Clone)]
pub struct Guard {
    pub distance: SingularDistance,
    pub threshold: f64,
}

impl Guard {
    pub fn new(distance: SingularDistance) -> Self {
        Self { distance, threshold: SINGULARITY_STOP }
    }

    fn check(&self, q: &[f64], last_time: f64) -> Result<()> {
        let distance = (self.distance)(q);
        if !(distance >= self.threshold) {
            return Err(Error::SingularityApproach { last_time, distance });
        }
        Ok(())
    }
}

/// Velocity Verlet for separable `H = p²/2 + V(q)`.
pub struct Verlet<'a> {
    potential: &'a Observable,
    guard: Option<Guard>,
    monitors: MonitorSet,
    sample_every: usize,
}

impl<'a> Verlet<'a> {
    pub fn new(potential: &'a Observable) -> Self {
        Self { potential, guard: None, monitors: MonitorSet::default(), sample_every: 1 }
    }

    pub fn with_guard(mut self, guard: Option<Guard>) -> Self {
        self.guard = guard;
        self
    }

    pub fn with_monitors(mut self, monitors: MonitorSet) -> Self {
        self.monitors = monitors;
        self
    }

    /// Record every `n`-th step (the final step is always recorded).
    pub fn sample_every(mut self, n: usize) -> Self {
        self.sample_every = n.max(1);
        self
    }

    /// Integrates over `[0, t_end]`. The step is adjusted to `t_end / n` with
    /// `n = round(t_end / dt)` so the last sample lands on `t_end`.
    pub fn run(&self, s0: &PhaseState, dt: f64, t_end: f64) -> Result<Trajectory> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidInput(format!("dt must be positive (got {dt})")));
        }
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::InvalidInput(format!("t_end must be positive (got {t_end})")));
        }
        if s0.dim() != self.potential.dim() {
            return Err(Error::InvalidInput("state and potential dimensions differ".into()));
        }
        let steps = ((t_end / dt).round() as usize).max(1);
        let h = t_end / steps as f64;
        let half = 0.5 * h;

        if let Some(g) = &self.guard {
            g.check(&s0.q, 0.0)?;
        }
        let mut traj = Trajectory::new(self.monitors.names());
        let mut s = s0.clone();
        traj.record(0.0, s.clone(), &self.monitors);
        let mut force = self.potential.grad_q(&s)?;

        for k in 1..=steps {
            let t_prev = (k - 1) as f64 * h;
            for (p, f) in s.p.iter_mut().zip(&force) {
                *p -= half * f;
            }
            let before = self.guard.as_ref().map(|g| (g.distance)(&s.q));
            for (q, p) in s.q.iter_mut().zip(&s.p) {
                *q += h * p;
            }
            if let (Some(g), Some(before)) = (&self.guard, before) {
                g.check(&s.q, t_prev)?;
                // A drift longer than the distance to the singular set may
                // have stepped across it.
                let jump = h * s.p.iter().map(|v| v * v).sum::<f64>().sqrt();
                if jump >= before {
                    return Err(Error::SingularityApproach { last_time: t_prev, distance: before });
                }
            }
            force = self.potential.grad_q(&s).map_err(|_| Error::SingularityApproach {
                last_time: t_prev,
                distance: self.guard.as_ref().map_or(0.0, |g| (g.distance)(&s.q)),
            })?;
            for (p, f) in s.p.iter_mut().zip(&force) {
                *p -= half * f;
            }
            if k % self.sample_every == 0 || k == steps {
                traj.record(k as f64 * h, s.clone(), &self.monitors);
            }
        }
        Ok(traj)
    }
}

// Dormand–Prince 5(4) tableau. The fields are autonomous, so the nodes
// c_i are not needed.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// 5th-order weights minus embedded 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

pub const RTOL_MIN: f64 = 1e-13;
pub const RTOL_MAX: f64 = 1e-3;
pub const DEFAULT_RTOL: f64 = 1e-10;

type Projection = Arc<dyn Fn(&mut PhaseState) + Send + Sync>;

/// Embedded Runge–Kutta integrator for an arbitrary (possibly non-separable)
/// Hamiltonian given as an [`Observable`].
pub struct Adaptive<'a> {
    hamiltonian: &'a Observable,
    rtol: f64,
    max_steps: usize,
    guard: Option<Guard>,
    projection: Option<Projection>,
    monitors: MonitorSet,
}

/// Which times end up in the returned trajectory.
enum Output<'g> {
    Steps(f64),
    Grid(&'g [f64]),
}

impl<'a> Adaptive<'a> {
    pub fn new(hamiltonian: &'a Observable, rtol: f64) -> Result<Self> {
        if !(RTOL_MIN..=RTOL_MAX).contains(&rtol) {
            return Err(Error::InvalidInput(format!(
                "rtol must lie in [{RTOL_MIN:e}, {RTOL_MAX:e}] (got {rtol:e})"
            )));
        }
        Ok(Self {
            hamiltonian,
            rtol,
            max_steps: 5_000_000,
            guard: None,
            projection: None,
            monitors: MonitorSet::new(vec![hamiltonian.clone()]),
        })
    }

    pub fn with_guard(mut self, guard: Option<Guard>) -> Self {
        self.guard = guard;
        self
    }

    /// Map applied to the state after every accepted step (e.g. projection
    /// back onto a constraint surface).
    pub fn with_projection(mut self, f: Projection) -> Self {
        self.projection = Some(f);
        self
    }

    pub fn with_monitors(mut self, monitors: MonitorSet) -> Self {
        self.monitors = monitors;
        self
    }

    pub fn with_max_steps(mut self, n: usize) -> Self {
        self.max_steps = n;
        self
    }

    /// Records every accepted step on `[0, t_end]`.
    pub fn run(&self, s0: &PhaseState, t_end: f64) -> Result<Trajectory> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::InvalidInput(format!("t_end must be positive (got {t_end})")));
        }
        self.drive(s0, Output::Steps(t_end))
    }

    /// Records exactly the requested times (non-negative, strictly increasing).
    pub fn run_grid(&self, s0: &PhaseState, times: &[f64]) -> Result<Trajectory> {
        if times.is_empty()
            || times[0] < 0.0
            || times.windows(2).any(|w| w[1] <= w[0])
            || times.iter().any(|t| !t.is_finite())
        {
            return Err(Error::InvalidInput(
                "output grid must be non-negative and strictly increasing".into(),
            ));
        }
        self.drive(s0, Output::Grid(times))
    }

    fn field(&self, y: &[f64]) -> Option<Vec<f64>> {
        let d = y.len() / 2;
        let s = PhaseState::from_flat(y);
        let g = self.hamiltonian.grad(&s).ok()?;
        let mut out = Vec::with_capacity(2 * d);
        out.extend_from_slice(&g.dp);
        out.extend(g.dq.iter().map(|v| -v));
        Some(out)
    }

    fn drive(&self, s0: &PhaseState, output: Output<'_>) -> Result<Trajectory> {
        if s0.dim() != self.hamiltonian.dim() {
            return Err(Error::InvalidInput("state and Hamiltonian dimensions differ".into()));
        }
        if let Some(g) = &self.guard {
            g.check(&s0.q, 0.0)?;
        }
        let (t_end, grid): (f64, &[f64]) = match output {
            Output::Steps(t) => (t, &[]),
            Output::Grid(g) => (*g.last().unwrap(), g),
        };
        let record_steps = matches!(output, Output::Steps(_));

        let mut traj = Trajectory::new(self.monitors.names());
        let mut next_out = 0;
        if record_steps || grid[0] == 0.0 {
            traj.record(0.0, s0.clone(), &self.monitors);
            if !record_steps {
                next_out = 1;
            }
        }

        let n = 2 * s0.dim();
        let mut y = s0.to_vec();
        let mut t = 0.0_f64;
        let mut h = (1e-3 * t_end.max(1e-3)).min(t_end);
        let mut k1 = self.field(&y).ok_or_else(|| Error::NonFinite {
            what: self.hamiltonian.name().to_string(),
            q: s0.q.clone(),
            p: s0.p.clone(),
        })?;
        let mut ks: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
        let mut stage = vec![0.0; n];
        let mut steps = 0usize;

        while t < t_end && (record_steps || next_out < grid.len()) {
            let target = if record_steps { t_end } else { grid[next_out] };
            let mut hit_target = false;
            let mut h_try = h;
            if t + h_try >= target {
                h_try = target - t;
                hit_target = true;
            }
            if h_try <= 1e-14 * t.abs().max(1.0) {
                if hit_target {
                    // Target is within round-off of the current time.
                    t = target;
                } else {
                    return Err(Error::StepUnderflow { last_time: t, step: h_try });
                }
            } else {
                steps += 1;
                if steps > self.max_steps {
                    return Err(Error::StepLimit { last_time: t, steps: self.max_steps });
                }
                ks[0].copy_from_slice(&k1);
                let mut ok = true;
                for i in 1..7 {
                    for j in 0..n {
                        let mut acc = 0.0;
                        for (l, kl) in ks.iter().enumerate().take(i) {
                            acc += A[i][l] * kl[j];
                        }
                        stage[j] = y[j] + h_try * acc;
                    }
                    match self.field(&stage) {
                        Some(k) if k.iter().all(|v| v.is_finite()) => ks[i] = k,
                        _ => {
                            ok = false;
                            break;
                        }
                    }
                }
                // Stage 7 is evaluated at the 5th-order solution (FSAL).
                let err = if ok {
                    let mut e = 0.0_f64;
                    for j in 0..n {
                        let mut est = 0.0;
                        for (l, kl) in ks.iter().enumerate() {
                            est += E[l] * kl[j];
                        }
                        let sc = self.rtol * (1.0 + y[j].abs().max(stage[j].abs()));
                        e = e.max((h_try * est).abs() / sc);
                    }
                    e
                } else {
                    f64::INFINITY
                };

                if err <= 1.0 {
                    let mut s_new = PhaseState::from_flat(&stage);
                    if let Some(proj) = &self.projection {
                        proj(&mut s_new);
                    }
                    if let Some(g) = &self.guard {
                        g.check(&s_new.q, t)?;
                    }
                    t = if hit_target { target } else { t + h_try };
                    y = s_new.to_vec();
                    k1 = if self.projection.is_some() {
                        self.field(&y).ok_or(Error::SingularityApproach {
                            last_time: t,
                            distance: 0.0,
                        })?
                    } else {
                        ks[6].clone()
                    };
                    let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                    // Keep the controller's step when the last one was clipped to a target.
                    h = if hit_target { h.max(h_try * fac) } else { h_try * fac };
                    if record_steps {
                        traj.record(t, s_new, &self.monitors);
                    }
                } else {
                    let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.25 };
                    h = h_try * fac;
                    if h <= 1e-14 * t.abs().max(1.0) {
                        return Err(Error::StepUnderflow { last_time: t, step: h });
                    }
                    continue;
                }
            }
            if !record_steps && t == grid[next_out] {
                traj.record(t, PhaseState::from_flat(&y), &self.monitors);
                next_out += 1;
            }
        }
        Ok(traj)
    }
}

/// Adaptive integration with default settings, recording every accepted step.
pub fn integrate_adaptive(
    hamiltonian: &Observable,
    s0: &PhaseState,
    rtol: f64,
    t_end: f64,
) -> Result<Trajectory> {
    Adaptive::new(hamiltonian, rtol)?.run(s0, t_end)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual::{Dual, Scalar};

    fn st(q: &[f64], p: &[f64]) -> PhaseState {
        PhaseState::new(q.to_vec(), p.to_vec()).unwrap()
    }

    #[test]
    fn verlet_free_drift_is_exact() {
        let v = Observable::exact("V", 1, |_, _| Dual::cst(0.0));
        let traj = Verlet::new(&v).run(&st(&[0.0], &[1.0]), 0.01, 1.0).unwrap();
        assert_eq!(traj.len(), 101);
        assert!((traj.last_state().unwrap().q[0] - 1.0).abs() < 1e-13);
        assert!(traj.is_well_formed());
    }

    #[test]
    fn adaptive_harmonic_period() {
        let h = Observable::exact("H", 1, |q, p| (p[0] * p[0] + q[0] * q[0]) * Dual::cst(0.5));
        let traj = integrate_adaptive(&h, &st(&[1.0], &[0.0]), 1e-10, 2.0 * std::f64::consts::PI)
            .unwrap();
        let end = traj.last_state().unwrap();
        assert!((end.q[0] - 1.0).abs() < 1e-8, "{end:?}");
        assert!(end.p[0].abs() < 1e-8, "{end:?}");
        assert!(traj.is_well_formed());
    }

    #[test]
    fn adaptive_grid_hits_requested_times() {
        let h = Observable::exact("H", 1, |_, p| p[0] * p[0] * Dual::cst(0.5));
        let grid = [0.0, 0.25, 0.5, 2.0];
        let traj = Adaptive::new(&h, 1e-10).unwrap().run_grid(&st(&[0.0], &[2.0]), &grid).unwrap();
        assert_eq!(traj.times, grid.to_vec());
        for (t, s) in traj.times.iter().zip(&traj.states) {
            assert!((s.q[0] - 2.0 * t).abs() < 1e-12);
        }
    }

    #[test]
    fn rtol_range_is_enforced() {
        let h = Observable::constant(1, 0.0);
        assert!(Adaptive::new(&h, 1e-14).is_err());
        assert!(Adaptive::new(&h, 1e-2).is_err());
    }

    #[test]
    fn guard_stops_verlet_at_the_centre() {
        // Attractive 1/x² falls into the origin in finite time.
        let v = Observable::exact("V", 1, |q, _| Dual::cst(-1.0) / (q[0] * q[0]));
        let guard = Guard::new(Arc::new(|q: &[f64]| q[0].abs()));
        let err = Verlet::new(&v).with_guard(Some(guard)).run(&st(&[1.0], &[0.0]), 1e-3, 5.0);
        assert!(matches!(err, Err(Error::SingularityApproach { .. })), "{err:?}");
    }
}
