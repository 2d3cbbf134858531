//! Differentiable phase-space functions and the Poisson bracket.
//!
//! Bracket convention: `{p_i, x^j} = δ_i^j`, so
//!
//! ```text
//! {A, B} = Σ_i ( ∂A/∂p_i ∂B/∂x^i − ∂A/∂x^i ∂B/∂p_i )
//! ```
//!
//! and time evolution reads `df/dt = {H, f}`. This is the opposite sign of
//! the `{x, p} = 1` convention common in textbooks; every algebra relation in
//! the crate (`{H, D} = 2H`, `{H, K} = D`, `{K, D} = −2K`) is written in it.

use std::fmt;
use std::sync::Arc;

use crate::dual::{Dual, Scalar};
use crate::error::{Error, Result};
use crate::phase::PhaseState;

type DualFn = dyn Fn(&[Dual], &[Dual]) -> Dual + Send + Sync;
type RealFn = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync;

#[derive(Clone)]
enum Kind {
    /// Evaluates on dual numbers; gradients are exact.
    Exact(Arc<DualFn>),
    /// Plain `f64` evaluator; gradients fall back to central differences.
    Numeric(Arc<RealFn>),
}

/// A real function on `T*R^d`.
#[derive(Clone)]
pub struct Observable {
    name: Arc<str>,
    dim: usize,
    kind: Kind,
}

/// `(∂f/∂q, ∂f/∂p)` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub dq: Vec<f64>,
    pub dp: Vec<f64>,
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Observable")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("exact", &self.is_exact())
            .finish()
    }
}

fn to_dual(v: &[f64]) -> Vec<Dual> {
    v.iter().map(|&x| Dual::constant(x)).collect()
}

/// Central-difference step `cbrt(eps)·max(1, |x|)`.
pub fn fd_step(x: f64) -> f64 {
    f64::EPSILON.cbrt() * x.abs().max(1.0)
}

impl Observable {
    /// Observable with an exact (dual-number) evaluator.
    pub fn exact<F>(name: impl Into<String>, dim: usize, f: F) -> Self
    where
        F: Fn(&[Dual], &[Dual]) -> Dual + Send + Sync + 'static,
    {
        Self { name: name.into().into(), dim, kind: Kind::Exact(Arc::new(f)) }
    }

    /// Observable known only through `f64` evaluation.
    pub fn numeric<F>(name: impl Into<String>, dim: usize, f: F) -> Self
    where
        F: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        Self { name: name.into().into(), dim, kind: Kind::Numeric(Arc::new(f)) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.kind, Kind::Exact(_))
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into().into();
        self
    }

    /// Coordinate function `x^i`.
    pub fn position(dim: usize, i: usize) -> Self {
        Self::exact(format!("x{}", i + 1), dim, move |q, _| q[i])
    }

    /// Coordinate function `p_i`.
    pub fn momentum(dim: usize, i: usize) -> Self {
        Self::exact(format!("p{}", i + 1), dim, move |_, p| p[i])
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::exact(format!("{c}"), dim, move |_, _| Dual::cst(c))
    }

    pub fn eval_raw(&self, q: &[f64], p: &[f64]) -> f64 {
        match &self.kind {
            Kind::Exact(f) => f(&to_dual(q), &to_dual(p)).re,
            Kind::Numeric(f) => f(q, p),
        }
    }

    /// Dual-number evaluation; `None` for observables without an exact
    /// evaluator.
    pub fn eval_dual(&self, q: &[Dual], p: &[Dual]) -> Option<Dual> {
        match &self.kind {
            Kind::Exact(f) => Some(f(q, p)),
            Kind::Numeric(_) => None,
        }
    }

    pub fn eval(&self, s: &PhaseState) -> f64 {
        self.eval_raw(&s.q, &s.p)
    }

    fn check_dim(&self, s: &PhaseState) -> Result<()> {
        if s.dim() != self.dim {
            return Err(Error::InvalidInput(format!(
                "observable {} has arity {}, state has dimension {}",
                self.name,
                self.dim,
                s.dim()
            )));
        }
        Ok(())
    }

    fn non_finite(&self, s: &PhaseState) -> Error {
        Error::NonFinite { what: self.name.to_string(), q: s.q.clone(), p: s.p.clone() }
    }

    /// Gradient in exact mode when available, else by central differences.
    pub fn grad(&self, s: &PhaseState) -> Result<Gradient> {
        self.check_dim(s)?;
        let g = match &self.kind {
            Kind::Exact(f) => {
                let v = f(&to_dual(&s.q), &to_dual(&s.p)).re;
                if !v.is_finite() {
                    return Err(self.non_finite(s));
                }
                exact_grad(f.as_ref(), s, true)
            }
            Kind::Numeric(_) => return self.fd_grad(s),
        };
        if g.dq.iter().chain(&g.dp).any(|v| !v.is_finite()) {
            return Err(self.non_finite(s));
        }
        Ok(g)
    }

    /// Position derivatives only.
    pub fn grad_q(&self, s: &PhaseState) -> Result<Vec<f64>> {
        self.check_dim(s)?;
        match &self.kind {
            Kind::Exact(f) => {
                let g = exact_grad(f.as_ref(), s, false);
                if g.dq.iter().any(|v| !v.is_finite()) {
                    return Err(self.non_finite(s));
                }
                Ok(g.dq)
            }
            Kind::Numeric(_) => Ok(self.fd_grad(s)?.dq),
        }
    }

    /// Central-difference gradient regardless of evaluator kind.
    pub fn fd_grad(&self, s: &PhaseState) -> Result<Gradient> {
        self.check_dim(s)?;
        if !self.eval(s).is_finite() {
            return Err(self.non_finite(s));
        }
        let mut probe = s.clone();
        let partial = |probe: &mut PhaseState, coord: usize| -> Result<f64> {
            let d = self.dim;
            let get = |pr: &PhaseState| if coord < d { pr.q[coord] } else { pr.p[coord - d] };
            let set = |pr: &mut PhaseState, v: f64| {
                if coord < d {
                    pr.q[coord] = v
                } else {
                    pr.p[coord - d] = v
                }
            };
            let x = get(probe);
            let h = fd_step(x);
            set(probe, x + h);
            let fp = self.eval(probe);
            set(probe, x - h);
            let fm = self.eval(probe);
            set(probe, x);
            if !fp.is_finite() || !fm.is_finite() {
                return Err(self.non_finite(probe));
            }
            Ok((fp - fm) / (2.0 * h))
        };
        let d = self.dim;
        let mut dq = Vec::with_capacity(d);
        let mut dp = Vec::with_capacity(d);
        for c in 0..d {
            dq.push(partial(&mut probe, c)?);
        }
        for c in d..2 * d {
            dp.push(partial(&mut probe, c)?);
        }
        Ok(Gradient { dq, dp })
    }

    fn combine(
        &self,
        other: &Observable,
        name: String,
        fd: fn(Dual, Dual) -> Dual,
        fr: fn(f64, f64) -> f64,
    ) -> Observable {
        assert_eq!(self.dim, other.dim, "observable arity mismatch");
        match (&self.kind, &other.kind) {
            (Kind::Exact(a), Kind::Exact(b)) => {
                let (a, b) = (a.clone(), b.clone());
                Observable::exact(name, self.dim, move |q, p| fd(a(q, p), b(q, p)))
            }
            _ => {
                let (a, b) = (self.clone(), other.clone());
                Observable::numeric(name, self.dim, move |q, p| {
                    fr(a.eval_raw(q, p), b.eval_raw(q, p))
                })
            }
        }
    }

    pub fn add(&self, other: &Observable) -> Observable {
        self.combine(other, format!("({}+{})", self.name, other.name), |a, b| a + b, |a, b| a + b)
    }

    pub fn sub(&self, other: &Observable) -> Observable {
        self.combine(other, format!("({}-{})", self.name, other.name), |a, b| a - b, |a, b| a - b)
    }

    pub fn mul(&self, other: &Observable) -> Observable {
        self.combine(other, format!("{}*{}", self.name, other.name), |a, b| a * b, |a, b| a * b)
    }

    pub fn div(&self, other: &Observable) -> Observable {
        self.combine(other, format!("{}/{}", self.name, other.name), |a, b| a / b, |a, b| a / b)
    }

    pub fn scale(&self, k: f64) -> Observable {
        self.map(format!("{k}*{}", self.name), move |x| x.scale(k), move |x| k * x)
    }

    pub fn sqrt(&self) -> Observable {
        self.map(format!("sqrt({})", self.name), |x| x.sqrt(), f64::sqrt)
    }

    /// Pointwise composition with a scalar function, given on both number types.
    pub fn map<Fd, Fr>(&self, name: String, fd: Fd, fr: Fr) -> Observable
    where
        Fd: Fn(Dual) -> Dual + Send + Sync + 'static,
        Fr: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        match &self.kind {
            Kind::Exact(a) => {
                let a = a.clone();
                Observable::exact(name, self.dim, move |q, p| fd(a(q, p)))
            }
            Kind::Numeric(a) => {
                let a = a.clone();
                Observable::numeric(name, self.dim, move |q, p| fr(a(q, p)))
            }
        }
    }

    /// Same function with the exact evaluator hidden; forces the
    /// finite-difference path.
    pub fn as_numeric(&self) -> Observable {
        let a = self.clone();
        Observable::numeric(self.name.to_string(), self.dim, move |q, p| a.eval_raw(q, p))
    }
}

fn exact_grad(f: &DualFn, s: &PhaseState, with_p: bool) -> Gradient {
    let d = s.dim();
    let mut q = to_dual(&s.q);
    let mut p = to_dual(&s.p);
    let mut dq = Vec::with_capacity(d);
    for i in 0..d {
        q[i].eps = 1.0;
        dq.push(f(&q, &p).eps);
        q[i].eps = 0.0;
    }
    let mut dp = Vec::with_capacity(d);
    if with_p {
        for i in 0..d {
            p[i].eps = 1.0;
            dp.push(f(&q, &p).eps);
            p[i].eps = 0.0;
        }
    }
    Gradient { dq, dp }
}

/// Gradient of `obs` at `s` (exact mode when supported).
pub fn grad(obs: &Observable, s: &PhaseState) -> Result<Gradient> {
    obs.grad(s)
}

/// Bracket from precomputed gradients.
pub fn bracket_of(ga: &Gradient, gb: &Gradient) -> f64 {
    ga.dp
        .iter()
        .zip(&gb.dq)
        .map(|(a, b)| a * b)
        .sum::<f64>()
        - ga.dq.iter().zip(&gb.dp).map(|(a, b)| a * b).sum::<f64>()
}

/// `{A, B} = Σ (∂A/∂p_i ∂B/∂x^i − ∂A/∂x^i ∂B/∂p_i)`.
pub fn poisson_bracket(a: &Observable, b: &Observable, s: &PhaseState) -> Result<f64> {
    let ga = a.grad(s)?;
    let gb = b.grad(s)?;
    Ok(bracket_of(&ga, &gb))
}

/// Matrix `P_ij = {f_i, f_j}` for a list of functions.
pub fn bracket_matrix(fs: &[Observable], s: &PhaseState) -> Result<Vec<Vec<f64>>> {
    let grads = fs.iter().map(|f| f.grad(s)).collect::<Result<Vec<_>>>()?;
    Ok(grads
        .iter()
        .map(|gi| grads.iter().map(|gj| bracket_of(gi, gj)).collect())
        .collect())
}
