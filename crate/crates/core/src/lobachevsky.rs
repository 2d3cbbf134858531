//! Klein-model coordinate of the radial phase space and the inversion
//! `w → −1/w` exchanging `H` and `K`.
//!
//! For `I > 0`, `w = p_r/r + i√(2I)/r²` lies in the upper half-plane and
//! `(H, D, K)` are Killing potentials of the Lobachevsky metric. For `I < 0`
//! the factor `i√(2I)` is replaced by `√(−2I)` and `w`, `w̄` become two
//! independent real numbers. Both branches are handled through the single
//! constant `k` (`i√(2I)` or `√(−2I)`), in terms of which
//!
//! ```text
//! H = k w w̄/(w − w̄),  D = k (w + w̄)/(w − w̄),  K = k/(w − w̄),  {w, w̄} = (w − w̄)²/k.
//! ```
//!
//! Brackets use `{p, x} = +1`. Under this convention the canonical pair of
//! the transformed radial variables satisfies `{p̃, r̃} = +1`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::conformal::ConformalSystem;
use crate::dual::{Dual, Scalar};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::phase::{bracket_matrix, poisson_bracket, Observable, PhaseState};
use crate::reduction::{chart_observables, to_hyperspherical, ReducedState, SphericalSystem};
use crate::sampling::{StateSampler, EXCLUSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    PositiveI,
    NegativeI,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KleinPoint {
    /// `Im w > 0`.
    PositiveI { w: Complex64, sqrt2i: f64 },
    /// `w`, `w̄` real and independent.
    NegativeI { w: f64, w_bar: f64, sqrt2i: f64 },
}

impl KleinPoint {
    pub fn branch(&self) -> Branch {
        match self {
            KleinPoint::PositiveI { .. } => Branch::PositiveI,
            KleinPoint::NegativeI { .. } => Branch::NegativeI,
        }
    }

    /// `√(2|I|)`.
    pub fn sqrt2i(&self) -> f64 {
        match *self {
            KleinPoint::PositiveI { sqrt2i, .. } | KleinPoint::NegativeI { sqrt2i, .. } => sqrt2i,
        }
    }

    /// `(w, w̄, k)` as complex numbers.
    pub fn parts(&self) -> (Complex64, Complex64, Complex64) {
        match *self {
            KleinPoint::PositiveI { w, sqrt2i } => (w, w.conj(), Complex64::new(0.0, sqrt2i)),
            KleinPoint::NegativeI { w, w_bar, sqrt2i } => {
                (Complex64::from(w), Complex64::from(w_bar), Complex64::from(sqrt2i))
            }
        }
    }

    /// `w` for the positive branch.
    pub fn w(&self) -> Option<Complex64> {
        match *self {
            KleinPoint::PositiveI { w, .. } => Some(w),
            KleinPoint::NegativeI { .. } => None,
        }
    }

    /// `{w, w̄}` from the closed form `−(i/√(2I))(w − w̄)²`.
    pub fn bracket_formula(&self) -> Complex64 {
        let (w, wb, k) = self.parts();
        (w - wb) * (w - wb) / k
    }
}

/// Klein coordinate of the radial pair `(p_r, r)` at spherical energy `I`.
pub fn to_klein(p_r: f64, r: f64, i: f64) -> Result<KleinPoint> {
    if !(r > 0.0) {
        return Err(Error::InvalidInput(format!("r must be positive (got {r})")));
    }
    if i == 0.0 {
        return Err(Error::ZeroI);
    }
    let a = p_r / r;
    let s = (2.0 * i.abs()).sqrt();
    let b = s / (r * r);
    Ok(if i > 0.0 {
        KleinPoint::PositiveI { w: Complex64::new(a, b), sqrt2i: s }
    } else {
        KleinPoint::NegativeI { w: a + b, w_bar: a - b, sqrt2i: s }
    })
}

pub fn to_klein_reduced(rs: &ReducedState, i: f64) -> Result<KleinPoint> {
    to_klein(rs.p_r, rs.r, i)
}

/// Values of the three generators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Generators {
    pub h: f64,
    pub d: f64,
    pub k: f64,
}

impl Generators {
    /// `(4HK − D²)/2`.
    pub fn casimir(&self) -> f64 {
        (4.0 * self.h * self.k - self.d * self.d) / 2.0
    }
}

/// `H, D, K` evaluated through their `w` forms.
pub fn killing_forms(kp: &KleinPoint) -> Generators {
    let (w, wb, k) = kp.parts();
    let den = w - wb;
    Generators { h: (k * w * wb / den).re, d: (k * (w + wb) / den).re, k: (k / den).re }
}

/// `H = p_r²/2 + I/r²`, `D = p_r r`, `K = r²/2`.
pub fn radial_generators(p_r: f64, r: f64, i: f64) -> Generators {
    Generators { h: 0.5 * p_r * p_r + i / (r * r), d: p_r * r, k: 0.5 * r * r }
}

/// `w → −1/w` (and `w̄ → −1/w̄` on the real branch).
pub fn invert(kp: &KleinPoint) -> Result<KleinPoint> {
    match *kp {
        KleinPoint::PositiveI { w, sqrt2i } => {
            if w == Complex64::new(0.0, 0.0) {
                return Err(Error::ZeroW);
            }
            Ok(KleinPoint::PositiveI { w: -w.inv(), sqrt2i })
        }
        KleinPoint::NegativeI { w, w_bar, sqrt2i } => {
            if w == 0.0 || w_bar == 0.0 {
                return Err(Error::ZeroW);
            }
            Ok(KleinPoint::NegativeI { w: -1.0 / w, w_bar: -1.0 / w_bar, sqrt2i })
        }
    }
}

/// Transformed radial pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TildeVars {
    pub p_tilde: f64,
    pub r_tilde: f64,
}

impl TildeVars {
    /// `w̃ = −r̃/p̃ + i√(2I)/p̃²`.
    pub fn w_tilde(&self, i: f64) -> Complex64 {
        let p2 = self.p_tilde * self.p_tilde;
        Complex64::new(-self.r_tilde / self.p_tilde, (2.0 * i).sqrt() / p2)
    }
}

/// `p̃ = √(2H)`, `r̃ = D/√(2H)`; `r̃` carries the sign of `D`.
pub fn tilde_map(rs: &ReducedState, i: f64) -> Result<TildeVars> {
    if !(i > 0.0) {
        return Err(if i == 0.0 { Error::ZeroI } else { Error::DomainError("tilde map needs I > 0".into()) });
    }
    let g = radial_generators(rs.p_r, rs.r, i);
    if !(g.h > 0.0) {
        return Err(Error::NonPositiveH(g.h));
    }
    let p = (2.0 * g.h).sqrt();
    Ok(TildeVars { p_tilde: p, r_tilde: g.d / p })
}

/// Klein data and transformed variables as observables on Cartesian `T*R^d`.
#[derive(Clone)]
pub struct KleinObservables {
    /// Real and imaginary part of `w` (positive branch) or `w`, `w̄`
    /// (negative branch).
    pub w_re: Observable,
    pub w_im: Observable,
    pub w_bar: Observable,
    pub p_tilde: Observable,
    pub r_tilde: Observable,
    /// `φ^α` then `π_α`.
    pub angular: Vec<Observable>,
    pub casimir: Observable,
    pub branch: Branch,
}

impl KleinObservables {
    pub fn new(sys: &ConformalSystem, branch: Branch) -> Self {
        let (d_obs, k_obs, i_obs) = (sys.dilatation(), sys.boost(), sys.casimir());
        let two_k = k_obs.scale(2.0);
        let a = d_obs.div(&two_k).renamed("Re w");
        let (w_re, w_im, w_bar) = match branch {
            Branch::PositiveI => {
                let b = i_obs.scale(2.0).sqrt().div(&two_k).renamed("Im w");
                (a.clone(), b, a)
            }
            Branch::NegativeI => {
                let c = i_obs.scale(-2.0).sqrt().div(&two_k);
                (a.add(&c).renamed("w"), Observable::constant(sys.dim(), 0.0), a.sub(&c).renamed("w_bar"))
            }
        };
        let p_tilde = sys.hamiltonian().scale(2.0).sqrt().renamed("p~");
        let r_tilde = d_obs.div(&p_tilde).renamed("r~");
        let angular = chart_observables(sys.dim()).split_off(2);
        Self { w_re, w_im, w_bar, p_tilde, r_tilde, angular, casimir: i_obs.clone(), branch }
    }

    /// `{f, w}` as a complex number.
    pub fn bracket_with_w(&self, f: &Observable, s: &PhaseState) -> Result<Complex64> {
        let re = poisson_bracket(f, &self.w_re, s)?;
        let im = match self.branch {
            Branch::PositiveI => poisson_bracket(f, &self.w_im, s)?,
            Branch::NegativeI => 0.0,
        };
        Ok(Complex64::new(re, im))
    }

    /// `{f, w̄}` as a complex number.
    pub fn bracket_with_w_bar(&self, f: &Observable, s: &PhaseState) -> Result<Complex64> {
        match self.branch {
            Branch::PositiveI => Ok(self.bracket_with_w(f, s)?.conj()),
            Branch::NegativeI => Ok(Complex64::from(poisson_bracket(f, &self.w_bar, s)?)),
        }
    }

    /// `{w, w̄}` from the canonical structure.
    pub fn w_w_bar(&self, s: &PhaseState) -> Result<Complex64> {
        match self.branch {
            // {a + ib, a − ib} = −2i{a, b}
            Branch::PositiveI => {
                Ok(Complex64::new(0.0, -2.0 * poisson_bracket(&self.w_re, &self.w_im, s)?))
            }
            Branch::NegativeI => Ok(Complex64::from(poisson_bracket(&self.w_re, &self.w_bar, s)?)),
        }
    }
}

/// `{u^a, w}` (and `{u^a, w̄}`) for one angular coordinate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixedBracket {
    pub coordinate: String,
    /// `V^a = {u^a, I}`.
    pub v: f64,
    pub numeric_w: [f64; 2],
    /// `(w − w̄)V^a/(2I)`.
    pub formula_w: [f64; 2],
    /// `(w − w̄)V^a/(4I)`.
    pub corrected_w: [f64; 2],
    pub numeric_w_bar: [f64; 2],
    /// `(w − w̄)V^a/(2I)`, same as `formula_w`.
    pub formula_w_bar: [f64; 2],
    /// `−(w − w̄)V^a/(4I)`.
    pub corrected_w_bar: [f64; 2],
}

impl MixedBracket {
    pub fn formula_residual(&self) -> f64 {
        cdist(self.numeric_w, self.formula_w)
    }

    pub fn corrected_residual(&self) -> f64 {
        cdist(self.numeric_w, self.corrected_w).max(cdist(self.numeric_w_bar, self.corrected_w_bar))
    }
}

fn c2(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

/// `|x − y| / max(1, |y|)`.
fn cdist(x: [f64; 2], y: [f64; 2]) -> f64 {
    let d = Complex64::new(x[0] - y[0], x[1] - y[1]).norm();
    d / Complex64::new(y[0], y[1]).norm().max(1.0)
}

/// Closed-form and numeric brackets of the Klein coordinate at one state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketTable {
    pub branch: Branch,
    pub w_w_bar_formula: [f64; 2],
    pub w_w_bar_numeric: [f64; 2],
    pub mixed: Vec<MixedBracket>,
}

impl BracketTable {
    pub fn w_w_bar_residual(&self) -> f64 {
        cdist(self.w_w_bar_numeric, self.w_w_bar_formula)
    }

    pub fn mixed_formula_residual(&self) -> f64 {
        self.mixed.iter().map(MixedBracket::formula_residual).fold(0.0, f64::max)
    }

    pub fn mixed_corrected_residual(&self) -> f64 {
        self.mixed.iter().map(MixedBracket::corrected_residual).fold(0.0, f64::max)
    }
}

pub fn expected_brackets(sys: &ConformalSystem, s: &PhaseState) -> Result<BracketTable> {
    let i = sys.casimir().eval(s);
    let kp = to_klein(sys.dilatation().eval(s) / s.radius(), s.radius(), i)?;
    if sys.dim() > 1 {
        to_hyperspherical(s)?;
    }
    let obs = KleinObservables::new(sys, kp.branch());
    let (w, wb, _) = kp.parts();
    let mut mixed = Vec::with_capacity(obs.angular.len());
    for u in &obs.angular {
        let v = poisson_bracket(u, &obs.casimir, s)?;
        let displayed = (w - wb) * v / (2.0 * i);
        let corrected = (w - wb) * v / (4.0 * i);
        mixed.push(MixedBracket {
            coordinate: u.name().to_string(),
            v,
            numeric_w: c2(obs.bracket_with_w(u, s)?),
            formula_w: c2(displayed),
            corrected_w: c2(corrected),
            numeric_w_bar: c2(obs.bracket_with_w_bar(u, s)?),
            formula_w_bar: c2(displayed),
            corrected_w_bar: c2(-corrected),
        });
    }
    Ok(BracketTable {
        branch: kp.branch(),
        w_w_bar_formula: c2(kp.bracket_formula()),
        w_w_bar_numeric: c2(obs.w_w_bar(s)?),
        mixed,
    })
}

/// Coefficient of `dRe w ∧ d√(2I)` as a function of `Im w`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixedTerm {
    /// `(dw + dw̄) ∧ d√(2I) / (i(w̄ − w))`, i.e. `1/Im w`.
    AsDisplayed,
    /// `−1/(2 Im w)`, which closes `Ω` and inverts the bracket matrix.
    Corrected,
}

/// Matrix of the two-form
/// `Ω = −i√(2I) dw∧dw̄/(w̄ − w)² + c·dRe w∧d√(2I) + ½ω_ab du^a∧du^b`
/// in coordinates `(Re w, Im w, φ^α, π_α)`.
pub fn assemble_omega(
    rs: &ReducedState,
    sphere: &SphericalSystem,
    i: f64,
    mixed: MixedTerm,
) -> Result<DMatrix<f64>> {
    let kp = to_klein_reduced(rs, i)?;
    let w = kp.w().ok_or_else(|| Error::DomainError("Ω needs the I > 0 branch".into()))?;
    let s = kp.sqrt2i();
    let b = w.im;
    let m = rs.phi.len();
    let n = 2 + 2 * m;
    let mut om = DMatrix::zeros(n, n);

    // dw∧dw̄ = −2i dRe∧dIm
    let dw_dwb = Complex64::new(0.0, -2.0);
    let wb_w = w.conj() - w;
    let c_ab = (Complex64::new(0.0, -s) * dw_dwb / (wb_w * wb_w)).re;
    om[(0, 1)] = c_ab;
    om[(1, 0)] = -c_ab;

    if m > 0 {
        let coeff = match mixed {
            MixedTerm::AsDisplayed => {
                // (dw + dw̄) = 2 dRe w
                (Complex64::from(2.0) / (Complex64::i() * wb_w)).re
            }
            MixedTerm::Corrected => -0.5 / b,
        };
        let ih = sphere.hamiltonian();
        let g = ih.grad(&PhaseState::from_parts(rs.phi.clone(), rs.pi.clone()))?;
        for al in 0..m {
            // d√(2I) = dI/√(2I)
            let ds_phi = g.dq[al] / s;
            let ds_pi = g.dp[al] / s;
            om[(0, 2 + al)] += coeff * ds_phi;
            om[(2 + al, 0)] -= coeff * ds_phi;
            om[(0, 2 + m + al)] += coeff * ds_pi;
            om[(2 + m + al, 0)] -= coeff * ds_pi;
            // inverse of {φ^α, π_β} = −δ
            om[(2 + al, 2 + m + al)] = 1.0;
            om[(2 + m + al, 2 + al)] = -1.0;
        }
    }
    Ok(om)
}

/// Comparison of `Ω` with the inverse of the bracket matrix of
/// `(Re w, Im w, φ^α, π_α)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OmegaCheck {
    /// `max_ij |Ω_ij ∓ (P⁻¹)_ij| / max(1, |(P⁻¹)_ij|)`, best global sign.
    pub as_displayed: f64,
    pub corrected: f64,
    pub det_as_displayed: f64,
    pub det_corrected: f64,
}

fn omega_distance(om: &DMatrix<f64>, pinv: &DMatrix<f64>) -> f64 {
    let dist = |sign: f64| {
        om.iter()
            .zip(pinv.iter())
            .map(|(a, b)| (a - sign * b).abs() / b.abs().max(1.0))
            .fold(0.0, f64::max)
    };
    dist(1.0).min(dist(-1.0))
}

pub fn omega_check(sys: &ConformalSystem, s: &PhaseState) -> Result<OmegaCheck> {
    let d = sys.dim();
    let i = sys.casimir().eval(s);
    let rs = if d == 1 {
        ReducedState { r: s.radius(), p_r: sys.dilatation().eval(s) / s.radius(), phi: vec![], pi: vec![] }
    } else {
        to_hyperspherical(s)?
    };
    let obs = KleinObservables::new(sys, Branch::PositiveI);
    let mut fs = vec![obs.w_re.clone(), obs.w_im.clone()];
    fs.extend(obs.angular.iter().cloned());
    let p = bracket_matrix(&fs, s)?;
    let n = fs.len();
    let pm = DMatrix::from_fn(n, n, |a, b| p[a][b]);
    let pinv = pm
        .try_inverse()
        .ok_or_else(|| Error::DomainError("bracket matrix is singular".into()))?;
    let sphere = SphericalSystem::from_potential(sys.potential());
    let shown = assemble_omega(&rs, &sphere, i, MixedTerm::AsDisplayed)?;
    let fixed = assemble_omega(&rs, &sphere, i, MixedTerm::Corrected)?;
    Ok(OmegaCheck {
        as_displayed: omega_distance(&shown, &pinv),
        corrected: omega_distance(&fixed, &pinv),
        det_as_displayed: shown.determinant(),
        det_corrected: fixed.determinant(),
    })
}

/// Metric coefficient of `ds² = −g dw dw̄/(w̄ − w)²` against the mixed
/// Hessian `∂²K/∂w∂w̄` of `K = g log i(w̄ − w)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KahlerCheck {
    pub metric: f64,
    pub hessian: f64,
    /// `||metric| − |hessian|| / |metric|`.
    pub magnitude_residual: f64,
    /// Sign of `metric/hessian`.
    pub relative_sign: f64,
}

pub fn kahler_check(g: f64, w: Complex64) -> KahlerCheck {
    let wb_w = w.conj() - w;
    let metric = (-g / (wb_w * wb_w)).re;
    // i(w̄ − w) = 2 Im w is real, so K(a, b) = g ln(2b).
    let potential = |_a: Dual<Dual>, b: Dual<Dual>| b.scale(2.0).ln().scale(g);
    let hyper = |x: f64, on: bool| {
        let e = if on { 1.0 } else { 0.0 };
        Dual { re: Dual { re: x, eps: e }, eps: Dual { re: e, eps: 0.0 } }
    };
    let d2a = potential(hyper(w.re, true), hyper(w.im, false)).eps.eps;
    let d2b = potential(hyper(w.re, false), hyper(w.im, true)).eps.eps;
    // ∂w∂w̄ = ¼(∂²_a + ∂²_b)
    let hessian = 0.25 * (d2a + d2b);
    KahlerCheck {
        metric,
        hessian,
        magnitude_residual: (metric.abs() - hessian.abs()).abs() / metric.abs(),
        relative_sign: (metric / hessian).signum(),
    }
}

/// `so(1,2)` residuals of the Killing forms when `{w, w̄} = −(i/g)(w − w̄)²`
/// is the only bracket (one-dimensional Klein model with `g = √(2I)`).
pub fn lobachevsky_algebra_residuals(g: f64, w: Complex64) -> [f64; 3] {
    let forms = |a: Dual, b: Dual| -> [Dual; 3] {
        // k = ig, w − w̄ = 2ib
        let h = (a * a + b * b).scale(g) / b.scale(2.0);
        let d = a.scale(g) / b;
        let k = Dual::cst(g) / b.scale(2.0);
        [h, d, k]
    };
    let partial = |on_a: bool| {
        let a = Dual { re: w.re, eps: if on_a { 1.0 } else { 0.0 } };
        let b = Dual { re: w.im, eps: if on_a { 0.0 } else { 1.0 } };
        forms(a, b)
    };
    let (fa, fb) = (partial(true), partial(false));
    let vals = [fa[0].re, fa[1].re, fa[2].re];
    // Wirtinger derivatives ∂_w = ½(∂_a − i∂_b), ∂_w̄ = ½(∂_a + i∂_b)
    let dw = |j: usize| Complex64::new(fa[j].eps, -fb[j].eps) * 0.5;
    let dwb = |j: usize| Complex64::new(fa[j].eps, fb[j].eps) * 0.5;
    let wwb = Complex64::new(0.0, -1.0 / g) * (w - w.conj()) * (w - w.conj());
    let br = |x: usize, y: usize| (wwb * (dw(x) * dwb(y) - dwb(x) * dw(y))).re;
    let rel = |lhs: f64, rhs: f64| (lhs - rhs).abs() / rhs.abs().max(1.0);
    let [h, d, k] = vals;
    [rel(br(0, 1), 2.0 * h), rel(br(0, 2), d), rel(br(2, 1), -2.0 * k)]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Canonical,
    NonCanonical,
}

/// One row of the canonicity table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketResidual {
    pub bracket: String,
    pub expected: f64,
    /// `max |value − expected|` over the samples.
    pub max_deviation: f64,
    /// Number of samples with `|value − expected| > 10·tol`.
    pub samples_over_10tol: usize,
    /// Radial/angular cross bracket (decides the verdict).
    pub off_block: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CanonicityReport {
    pub dimension: usize,
    pub brackets: Vec<BracketResidual>,
    pub verdict: Verdict,
    pub paper_sign_notes: Vec<String>,
}

impl CanonicityReport {
    pub fn row(&self, name: &str) -> Option<&BracketResidual> {
        self.brackets.iter().find(|b| b.bracket == name)
    }
}

/// Brackets of `(p̃, r̃, φ^α, π_α)` under the original structure, in the row
/// order of [`CanonicityReport::brackets`]: `(name, expected, value, off_block)`.
pub fn transformed_brackets(
    obs: &KleinObservables,
    s: &PhaseState,
) -> Result<Vec<(String, f64, f64, bool)>> {
    let mut out = vec![("{p~,r~}".to_string(), 1.0, poisson_bracket(&obs.p_tilde, &obs.r_tilde, s)?, false)];
    let m = obs.angular.len() / 2;
    for (a, u) in obs.angular.iter().enumerate() {
        let label = if a < m { format!("phi{}", a + 1) } else { format!("pi{}", a - m + 1) };
        out.push((format!("{{r~,{label}}}"), 0.0, poisson_bracket(&obs.r_tilde, u, s)?, true));
        out.push((format!("{{p~,{label}}}"), 0.0, poisson_bracket(&obs.p_tilde, u, s)?, true));
    }
    Ok(out)
}

pub fn sign_notes() -> Vec<String> {
    [
        "transport: the K-form at -1/w equals +H (computed), not -H",
        "radius: r~ = D/sqrt(2H); D/(2 sqrt(H)) is inconsistent with w~ = -1/w",
        "mixed bracket: {u^a,w} = (w - wbar) V^a/(4I) numerically, half of (w - wbar) V^a/(2I); {u^a,wbar} has the opposite sign",
        "symplectic form: the dRe(w)^d(sqrt(2I)) coefficient that inverts the bracket matrix is -1/(2 Im w), not 1/Im w",
        "Kahler metric -g/(wbar - w)^2 equals minus the mixed Hessian of g log i(wbar - w)",
        "canonical pair convention: {p~,r~} = +1 under {p,x} = +1, i.e. {r~,p~} = -1",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

/// States with `H > 0`, `I > 0` inside the chart and away from singular sets.
pub fn sample_decoupling_states(sys: &ConformalSystem, n: usize, seed: u64) -> Result<Vec<PhaseState>> {
    let floor = 1e-6;
    StateSampler::new(seed).batch(n, sys.dim(), |s| {
        sys.admits(s, EXCLUSION)
            && sys.hamiltonian().eval(s) > floor
            && sys.casimir().eval(s) > floor
            && (sys.dim() == 1 || to_hyperspherical(s).is_ok())
    })
}

pub fn canonicity_report(sys: &ConformalSystem, samples: usize, tol: f64, seed: u64) -> Result<CanonicityReport> {
    canonicity_report_with(sys, samples, tol, seed, Execution::default())
}

pub fn canonicity_report_with(
    sys: &ConformalSystem,
    samples: usize,
    tol: f64,
    seed: u64,
    exec: Execution,
) -> Result<CanonicityReport> {
    if samples == 0 {
        return Err(Error::InvalidInput("samples must be at least 1".into()));
    }
    if sys.dim() == 1 {
        // In 1D, I = x²V(x) is a constant; it must not vanish.
        let probe = PhaseState::from_parts(vec![1.0], vec![0.0]);
        if sys.casimir().eval(&probe) == 0.0 {
            return Err(Error::ZeroI);
        }
    }
    let states = sample_decoupling_states(sys, samples, seed)?;
    let obs = KleinObservables::new(sys, Branch::PositiveI);
    let per_state = exec.map(&states, |s| transformed_brackets(&obs, s));
    let mut rows: Vec<BracketResidual> = Vec::new();
    for res in per_state {
        for (j, (name, expected, value, off_block)) in res?.into_iter().enumerate() {
            if rows.len() <= j {
                rows.push(BracketResidual {
                    bracket: name,
                    expected,
                    max_deviation: 0.0,
                    samples_over_10tol: 0,
                    off_block,
                });
            }
            let dev = (value - expected).abs();
            let row = &mut rows[j];
            row.max_deviation = row.max_deviation.max(if dev.is_nan() { f64::INFINITY } else { dev });
            if !(dev <= 10.0 * tol) {
                row.samples_over_10tol += 1;
            }
        }
    }
    let canonical = rows.iter().all(|r| r.max_deviation < tol);
    Ok(CanonicityReport {
        dimension: sys.dim(),
        brackets: rows,
        verdict: if canonical { Verdict::Canonical } else { Verdict::NonCanonical },
        paper_sign_notes: sign_notes(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelSpec;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn st(q: &[f64], p: &[f64]) -> PhaseState {
        PhaseState::new(q.to_vec(), p.to_vec()).unwrap()
    }

    #[test]
    fn klein_examples() {
        assert_eq!(to_klein(0.0, 1.0, 0.5).unwrap().w(), Some(c(0.0, 1.0)));
        assert_eq!(to_klein(1.0, 1.0, 0.5).unwrap().w(), Some(c(1.0, 1.0)));
        assert_eq!(to_klein(2.0, 2.0, 2.0).unwrap().w(), Some(c(1.0, 0.5)));
        assert!(matches!(to_klein(1.0, 1.0, 0.0), Err(Error::ZeroI)));
    }

    #[test]
    fn killing_form_examples() {
        let g = killing_forms(&to_klein(1.0, 1.0, 0.5).unwrap());
        assert!((g.h - 1.0).abs() < 1e-15 && (g.d - 1.0).abs() < 1e-15 && (g.k - 0.5).abs() < 1e-15);
        let g = killing_forms(&to_klein(0.0, 1.0, 0.5).unwrap());
        assert_eq!((g.h, g.d, g.k), (0.5, 0.0, 0.5));
        assert!((g.casimir() - 0.5).abs() < 1e-12);
        let neg = killing_forms(&to_klein(0.7, 1.3, -0.4).unwrap());
        let direct = radial_generators(0.7, 1.3, -0.4);
        assert!((neg.h - direct.h).abs() < 1e-12 && (neg.d - direct.d).abs() < 1e-12);
        assert!((neg.k - direct.k).abs() < 1e-12);
    }

    #[test]
    fn inversion_examples() {
        let kp = to_klein(0.0, 1.0, 0.5).unwrap();
        assert_eq!(invert(&kp).unwrap().w(), Some(c(0.0, 1.0)));
        let kp = to_klein(1.0, 1.0, 0.5).unwrap();
        let inv = invert(&kp).unwrap();
        assert_eq!(inv.w(), Some(c(-0.5, 0.5)));
        let (a, b) = (killing_forms(&kp), killing_forms(&inv));
        assert!((b.h - a.k).abs() < 1e-15);
        assert!((b.k - a.h).abs() < 1e-15);
        assert!((b.d + a.d).abs() < 1e-15);
    }

    #[test]
    fn tilde_examples() {
        let rs = ReducedState { r: 1.0, p_r: 1.0, phi: vec![], pi: vec![] };
        let t = tilde_map(&rs, 0.5).unwrap();
        assert!((t.p_tilde - 2f64.sqrt()).abs() < 1e-15);
        assert!((t.r_tilde - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((t.w_tilde(0.5) - c(-0.5, 0.5)).norm() < 1e-15);
        let t = tilde_map(&ReducedState { r: 1.0, p_r: 0.0, phi: vec![], pi: vec![] }, 0.5).unwrap();
        assert_eq!((t.p_tilde, t.r_tilde), (1.0, 0.0));
    }

    #[test]
    fn one_dimensional_w_bracket() {
        let sys = ModelSpec::InverseSquare { dim: 1, kappa: 0.5 }.system().unwrap();
        let tab = expected_brackets(&sys, &st(&[1.0], &[1.0])).unwrap();
        assert!((tab.w_w_bar_formula[0]).abs() < 1e-15 && (tab.w_w_bar_formula[1] - 4.0).abs() < 1e-14);
        assert!(tab.w_w_bar_residual() < 1e-9, "{tab:?}");
        assert!(tab.mixed.is_empty());
    }

    #[test]
    fn free_plane_witness() {
        let sys = ModelSpec::Free { dim: 2 }.system().unwrap();
        let obs = KleinObservables::new(&sys, Branch::PositiveI);
        let rows = transformed_brackets(&obs, &st(&[1.0, 0.0], &[1.0, 1.0])).unwrap();
        let w = rows.iter().find(|r| r.0 == "{r~,phi1}").unwrap();
        assert!((w.2 + 2f64.powf(-1.5)).abs() < 1e-8, "{w:?}");
    }

    #[test]
    fn mixed_bracket_has_the_factor_four() {
        let sys = ModelSpec::Free { dim: 2 }.system().unwrap();
        let tab = expected_brackets(&sys, &st(&[1.0, 0.0], &[1.0, 1.0])).unwrap();
        assert!(tab.mixed_corrected_residual() < 1e-9, "{tab:?}");
    }

    #[test]
    fn one_dimensional_omega() {
        let rs = ReducedState { r: 1.0, p_r: 0.0, phi: vec![], pi: vec![] };
        let sphere = SphericalSystem::free(1);
        let om = assemble_omega(&rs, &sphere, 0.5, MixedTerm::AsDisplayed).unwrap();
        assert!((om[(0, 1)] - 0.5).abs() < 1e-15);
        assert!(om.determinant() > 0.0);
    }

    #[test]
    fn corrected_omega_inverts_brackets() {
        let sys = ModelSpec::Free { dim: 2 }.system().unwrap();
        let chk = omega_check(&sys, &st(&[1.0, 0.2], &[0.4, 1.0])).unwrap();
        assert!(chk.corrected < 1e-8, "{chk:?}");
        assert!(chk.det_corrected > 0.0);
    }

    #[test]
    fn kahler_sign() {
        let k = kahler_check(1.0, c(0.3, 0.7));
        assert!(k.magnitude_residual < 1e-10);
        assert_eq!(k.relative_sign, -1.0);
    }

    #[test]
    fn lobachevsky_algebra() {
        for w in [c(0.0, 1.0), c(1.0, 1.0), c(-0.4, 0.3)] {
            let r = lobachevsky_algebra_residuals(1.3, w);
            assert!(r.iter().all(|&x| x < 1e-9), "{w}: {r:?}");
        }
    }

    #[test]
    fn verdicts() {
        let one = ModelSpec::InverseSquare { dim: 1, kappa: 0.5 }.system().unwrap();
        let rep = canonicity_report(&one, 20, 1e-8, 0).unwrap();
        assert_eq!(rep.verdict, Verdict::Canonical, "{rep:?}");
        let two = ModelSpec::Free { dim: 2 }.system().unwrap();
        assert_eq!(canonicity_report(&two, 20, 1e-8, 0).unwrap().verdict, Verdict::NonCanonical);
        let free1 = ModelSpec::Free { dim: 1 }.system().unwrap();
        assert!(matches!(canonicity_report(&free1, 5, 1e-8, 0), Err(Error::ZeroI)));
    }
}
