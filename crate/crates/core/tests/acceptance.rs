//! Acceptance suite: ten criteria, one PASS/FAIL line each. Runs without the
//! libtest harness so every line is printed; exits non-zero if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use confmech::conformal::{verify_algebra, ConformalSystem};
use confmech::exact::{fall_time, reconstruct, RadialData};
use confmech::lobachevsky::{
    canonicity_report, expected_brackets, invert, killing_forms, omega_check, radial_generators,
    sample_decoupling_states, tilde_map, to_klein, transformed_brackets, Branch, KleinObservables,
    Verdict,
};
use confmech::models::{
    angle_between, catalog, singular_directions, spherical_counterpart, Jacobi, ModelSpec,
};
use confmech::phase::{Adaptive, Guard};
use confmech::reduction::{spherical_energy, to_hyperspherical, SphericalSystem};
use confmech::sampling::{StateSampler, EXCLUSION};
use confmech::{Error, PhaseState};

type Outcome = (bool, String);
type Check = (&'static str, fn() -> Outcome);

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn chart_state(sys: &ConformalSystem, s: &PhaseState) -> bool {
    sys.dim() > 1 || s.q[0] > 0.0
}

/// States inside the chart, away from singular sets, optionally with `I > 0`.
fn sample(sys: &ConformalSystem, n: usize, seed: u64, positive_i: bool) -> Vec<PhaseState> {
    StateSampler::new(seed)
        .batch(n, sys.dim(), |s| {
            sys.admits(s, EXCLUSION)
                && chart_state(sys, s)
                && to_hyperspherical(s).is_ok()
                && (!positive_i || sys.casimir_i(s) > 1e-6)
        })
        .expect("sampler")
}

fn c1_algebra() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0_f64;
    let mut failing = Vec::new();
    for (k, spec) in catalog().iter().enumerate() {
        let rep = verify_algebra(&spec.system().unwrap(), 200, 1e-8, 100 + k as u64).unwrap();
        worst = rep.residuals.iter().copied().fold(worst, f64::max);
        if !rep.pass {
            failing.push(format!("{spec:?}"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    (
        failing.is_empty() && secs < 5.0,
        format!("8 models x 200 states, max residual {worst:.2e} (< 1e-8), {secs:.2} s (< 5 s) {failing:?}"),
    )
}

fn c2_casimir() -> Outcome {
    let mut worst = 0.0_f64;
    for (k, spec) in catalog().iter().enumerate() {
        let sys = spec.system().unwrap();
        let sphere = SphericalSystem::from_potential(sys.potential());
        for s in sample(&sys, 100, 200 + k as u64, false) {
            let rs = to_hyperspherical(&s).unwrap();
            let e = spherical_energy(&sphere, &rs.phi, &rs.pi).unwrap();
            let i = sys.casimir_i(&s);
            worst = worst.max(rel(i, e));
        }
    }
    (worst < 1e-10, format!("max |(4HK-D^2)/2 - I_sphere| / max(1,|I|) = {worst:.2e} (< 1e-10), 100 states x 8 models"))
}

fn c3_conservation() -> Outcome {
    let mut worst_h = 0.0_f64;
    let mut worst_i = 0.0_f64;
    let mut errors = Vec::new();
    for (k, spec) in catalog().iter().enumerate() {
        let sys = spec.system().unwrap();
        // Off-singularity: the reference path keeps unit clearance from the
        // singular set for the whole run.
        let mut draw = StateSampler::new(300 + k as u64).with_half_width(3.0);
        let mut starts = Vec::new();
        for _ in 0..20_000 {
            let s = draw.state(sys.dim());
            if starts.len() == 3 || !(sys.admits(&s, 1.0) && sys.casimir_i(&s) > 0.1) {
                continue;
            }
            let clear = sys
                .integrate_adaptive(&s, 1e-10, 10.0)
                .is_ok_and(|t| t.states.iter().all(|x| sys.singular_distance(&x.q) >= 1.0));
            if clear {
                starts.push(s);
            }
        }
        if starts.len() < 3 {
            errors.push(format!("{}: too few clear starts", spec.name()));
        }
        for s0 in starts {
            match sys.integrate_verlet(&s0, 1e-3, 10.0) {
                Ok(traj) => {
                    worst_h = worst_h.max(traj.max_drift("H", 0.0).unwrap());
                    worst_i = worst_i.max(traj.max_drift("I", 0.0).unwrap());
                }
                Err(e) => errors.push(format!("{}: {e}", spec.name())),
            }
        }
    }
    (
        errors.is_empty() && worst_h < 1e-6 && worst_i < 1e-6,
        format!("Verlet dt=1e-3 t=10: max rel drift H {worst_h:.2e}, I {worst_i:.2e} (< 1e-6) {errors:?}"),
    )
}

fn radial_oracle(rd: &RadialData) -> ConformalSystem {
    ModelSpec::InverseSquare { dim: 1, kappa: rd.i0 }.system().unwrap()
}

fn c4_radial() -> Outcome {
    let mut sampler = StateSampler::new(400);
    let grid: Vec<f64> = (0..=50).map(|k| 0.1 * k as f64).collect();
    let mut worst = 0.0_f64;
    let mut taken = 0;
    while taken < 50 {
        let (e, d0, r0sq) = (sampler.uniform(-0.5, 3.0), sampler.uniform(-2.0, 2.0), sampler.uniform(0.5, 2.0));
        let rd = RadialData::from_radial(e, d0, r0sq).unwrap();
        if fall_time(&rd).is_some_and(|t| t <= 5.0) || rd.i0.abs() < 1e-3 {
            continue;
        }
        taken += 1;
        let r0 = r0sq.sqrt();
        let s0 = PhaseState::new(vec![r0], vec![d0 / r0]).unwrap();
        let sys = radial_oracle(&rd);
        let traj = Adaptive::new(sys.hamiltonian(), 1e-12).unwrap().run_grid(&s0, &grid).unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            let r2 = s.q[0] * s.q[0];
            worst = worst.max((rd.radial_squared(*t) - r2).abs() / r2);
        }
    }
    let mut worst_fall = 0.0_f64;
    let mut cases = 0;
    while cases < 20 {
        let (e, d0, r0sq) = (sampler.uniform(-1.0, 2.0), sampler.uniform(-3.0, 1.0), sampler.uniform(0.5, 2.0));
        let rd = RadialData::from_radial(e, d0, r0sq).unwrap();
        let Some(tf) = fall_time(&rd) else { continue };
        if rd.i0 >= -1e-3 || tf > 5.0 {
            continue;
        }
        cases += 1;
        let r0 = r0sq.sqrt();
        let s0 = PhaseState::new(vec![r0], vec![d0 / r0]).unwrap();
        let sys = radial_oracle(&rd);
        let blowup = match Adaptive::new(sys.hamiltonian(), 1e-12)
            .unwrap()
            .with_guard(Some(Guard::new(confmech::conformal::origin_distance())))
            .run(&s0, 2.0 * tf)
        {
            Err(Error::SingularityApproach { last_time, .. })
            | Err(Error::StepUnderflow { last_time, .. }) => last_time,
            other => {
                return (false, format!("integrator did not stop for {rd:?}: {:?}", other.map(|t| t.len())));
            }
        };
        worst_fall = worst_fall.max((blowup - tf).abs());
    }
    (
        worst < 1e-6 && worst_fall < 1e-4,
        format!("r^2 rel error {worst:.2e} (< 1e-6) over 50 cases; fall time error {worst_fall:.2e} (< 1e-4) over 20 cases"),
    )
}

fn c5_reconstruction() -> Outcome {
    let models = catalog();
    let mut worst = 0.0_f64;
    let mut failures = Vec::new();
    let mut done = 0;
    let grid = [0.0, 0.5, 1.0];
    for k in 0..100usize {
        let spec = &models[k % models.len()];
        let sys = spec.system().unwrap();
        let mut seed = 500 + k as u64;
        // Resample until the direct oracle itself runs to t = 1.
        let (s0, direct) = loop {
            let s0 = sample(&sys, 1, seed, true).remove(0);
            seed += 1000;
            if let Ok(t) = sys.integrate_adaptive_grid(&s0, 1e-12, &grid) {
                break (s0, t);
            }
        };
        match reconstruct(&sys, &s0, &grid) {
            Ok(rec) => {
                let (a, b) = (rec.states.last().unwrap(), direct.states.last().unwrap());
                worst = worst.max(a.distance(b) / b.norm());
                done += 1;
            }
            Err(e) => failures.push(format!("{}: {e}", spec.name())),
        }
    }
    (
        failures.is_empty() && worst < 1e-5,
        format!("{done}/100 states, max rel state error at t=1 {worst:.2e} (< 1e-5) {failures:?}"),
    )
}

fn c6_transport() -> Outcome {
    let mut worst = 0.0_f64;
    let mut worst_tilde = 0.0_f64;
    for (k, spec) in catalog().iter().enumerate() {
        let sys = spec.system().unwrap();
        for s in sample(&sys, 100, 600 + k as u64, true) {
            let i = sys.casimir_i(&s);
            let r = s.radius();
            let p_r = sys.dilatation().eval(&s) / r;
            let kp = to_klein(p_r, r, i).unwrap();
            let direct = radial_generators(p_r, r, i);
            let moved = killing_forms(&invert(&kp).unwrap());
            worst = worst.max(rel(moved.h, direct.k)).max(rel(moved.k, direct.h)).max(rel(moved.d, -direct.d));
            if direct.h > 0.0 {
                let rs = to_hyperspherical(&s).unwrap();
                let t = tilde_map(&rs, i).unwrap();
                let w_inv = invert(&kp).unwrap().w().unwrap();
                worst_tilde = worst_tilde.max((t.w_tilde(i) - w_inv).norm() / w_inv.norm().max(1.0));
            }
        }
    }
    (
        worst < 1e-12 && worst_tilde < 1e-12,
        format!("H∘inv=K, K∘inv=H, D∘inv=-D max rel {worst:.2e}; w~ vs -1/w {worst_tilde:.2e} (< 1e-12)"),
    )
}

fn witness(spec: ModelSpec, q: &[f64], p: &[f64]) -> (f64, f64) {
    let sys = spec.system().unwrap();
    let s = PhaseState::new(q.to_vec(), p.to_vec()).unwrap();
    let obs = KleinObservables::new(&sys, Branch::PositiveI);
    let rows = transformed_brackets(&obs, &s).unwrap();
    let m = sys.dim() - 1;
    // The azimuth is the last angle of the chart.
    let label = format!("{{r~,phi{m}}}");
    let numeric = rows.iter().find(|r| r.0 == label).unwrap().2;
    // −D (2H)^{−3/2} ∂H/∂π for the azimuth.
    let rs = to_hyperspherical(&s).unwrap();
    let sphere = SphericalSystem::from_potential(sys.potential());
    let g = sphere
        .hamiltonian()
        .grad(&PhaseState::new(rs.phi.clone(), rs.pi.clone()).unwrap())
        .unwrap();
    let dh_dpi = g.dp[m - 1] / (rs.r * rs.r);
    let h = sys.hamiltonian().eval(&s);
    let d = sys.dilatation().eval(&s);
    (numeric, -d * (2.0 * h).powf(-1.5) * dh_dpi)
}

fn c7_canonicity() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    let one = ModelSpec::InverseSquare { dim: 1, kappa: 0.5 }.system().unwrap();
    let rep = canonicity_report(&one, 100, 1e-8, 700).unwrap();
    let pair = rep.row("{p~,r~}").unwrap().max_deviation;
    ok &= rep.verdict == Verdict::Canonical && pair < 1e-8;
    notes.push(format!("d=1 {:?}, |{{p~,r~}}-1| {pair:.1e}", rep.verdict));
    for spec in [ModelSpec::Free { dim: 2 }, ModelSpec::InverseSquare { dim: 3, kappa: 1.0 }] {
        let d = spec.dim();
        let rep = canonicity_report(&spec.system().unwrap(), 100, 1e-8, 700 + d as u64).unwrap();
        let majority = rep.brackets.iter().any(|b| b.off_block && b.samples_over_10tol * 2 > 100);
        ok &= rep.verdict == Verdict::NonCanonical && majority;
        notes.push(format!("d={d} {:?}", rep.verdict));
    }
    for (spec, q, p) in [
        (ModelSpec::Free { dim: 2 }, vec![1.0, 0.0], vec![1.0, 1.0]),
        (ModelSpec::Free { dim: 3 }, vec![1.0, 0.0, 0.0], vec![1.0, 1.0, 0.0]),
    ] {
        let (numeric, closed) = witness(spec, &q, &p);
        ok &= (numeric - closed).abs() < 1e-8 && (numeric + 0.353_553_4).abs() < 1e-7;
        notes.push(format!("{{r~,phi}} = {numeric:.7} vs {closed:.7}"));
    }
    (ok, notes.join("; "))
}

fn c8_calogero() -> Outcome {
    let dirs = singular_directions(3).unwrap();
    let mut angles: Vec<f64> = dirs.iter().map(|u| u[1].atan2(u[0]).rem_euclid(2.0 * PI)).collect();
    angles.sort_by(f64::total_cmp);
    let spacing = (0..6)
        .map(|k| {
            let next = if k == 5 { angles[0] + 2.0 * PI } else { angles[k + 1] };
            (next - angles[k] - PI / 3.0).abs()
        })
        .fold(0.0, f64::max);
    // Cyclic orientation e1−e2, e2−e3, e3−e1: one centre per antipodal pair,
    // each on the line x^i = x^j, a quarter turn from the image of e_i − e_j.
    let jac = Jacobi::new(3);
    let centre = |i: usize, j: usize| {
        let mut e = vec![0.0; 3];
        e[i] = 1.0;
        e[j] = -1.0;
        let y = jac.split(&e).0;
        vec![-y[1], y[0]]
    };
    let centres = [centre(0, 1), centre(1, 2), centre(2, 0)];
    let third = (0..3)
        .map(|k| (angle_between(&centres[k], &centres[(k + 1) % 3]) - 2.0 * PI / 3.0).abs())
        .fold(0.0, f64::max);
    let sys = ModelSpec::CalogeroRelative { particles: 3, g: 1.0 }.system().unwrap();
    let on_set = dirs.iter().map(|u| sys.singular_distance(u)).fold(0.0, f64::max);

    let four = singular_directions(4).unwrap();
    let mut got: Vec<f64> = Vec::new();
    for a in 0..four.len() {
        for b in a + 1..four.len() {
            got.push(angle_between(&four[a], &four[b]));
        }
    }
    let mut cubo: Vec<Vec<f64>> = Vec::new();
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            let mut v = vec![0.0; 3];
            v[i] = si;
            v[j] = sj;
            cubo.push(v);
        }
    }
    let mut want: Vec<f64> = Vec::new();
    for a in 0..cubo.len() {
        for b in a + 1..cubo.len() {
            want.push(angle_between(&cubo[a], &cubo[b]));
        }
    }
    got.sort_by(f64::total_cmp);
    want.sort_by(f64::total_cmp);
    let multiset = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let distinct_ok = got.iter().all(|a| {
        [60.0_f64, 90.0, 120.0, 180.0].iter().any(|deg| (a - deg.to_radians()).abs() < 1e-9)
    });
    (
        spacing < 1e-9 && third < 1e-9 && on_set < 1e-9 && multiset < 1e-9 && distinct_ok && got.len() == 66,
        format!(
            "n=3 spacing err {spacing:.1e}, centres at 2pi/3 err {third:.1e}, on singular set {on_set:.1e}; n=4 cuboctahedron multiset err {multiset:.1e}"
        ),
    )
}

fn c9_counterparts() -> Outcome {
    let mut sampler = StateSampler::new(900);
    let (omega, gamma) = (1.3, 0.7);
    let higgs = ModelSpec::ConformalHiggs { dim: 3, omega };
    let coulomb = ModelSpec::ConformalCoulomb { dim: 3, gamma };
    let u_h = SphericalSystem::from_potential(&higgs.potential().unwrap());
    let u_c = SphericalSystem::from_potential(&coulomb.potential().unwrap());
    let form_h = spherical_counterpart(&higgs).unwrap();
    let form_c = spherical_counterpart(&coulomb).unwrap();
    let (mut worst_h, mut worst_c) = (0.0_f64, 0.0_f64);
    for _ in 0..100 {
        let theta = sampler.uniform(0.05, PI - 0.05);
        if (theta - PI / 2.0).abs() < 0.05 {
            continue;
        }
        let phi = [theta, sampler.uniform(-PI, PI)];
        let shifted = u_h.angular_potential(&phi) - form_h.without_constant(theta);
        worst_h = worst_h.max((shifted - omega * omega).abs());
        worst_c = worst_c.max(rel(u_c.angular_potential(&phi), form_c.eval_polar(theta)));
    }
    (
        worst_h < 1e-9 && worst_c < 1e-10,
        format!("U_higgs - w^2 tan^2/2 - w^2: {worst_h:.1e} (< 1e-9); U_coulomb - g cot: {worst_c:.1e} (< 1e-10)"),
    )
}

fn c10_brackets() -> Outcome {
    let mut w_pos = 0.0_f64;
    let mut w_neg = 0.0_f64;
    for (k, spec) in catalog().iter().enumerate() {
        let sys = spec.system().unwrap();
        for s in sample(&sys, 100, 1000 + k as u64, true) {
            w_pos = w_pos.max(expected_brackets(&sys, &s).unwrap().w_w_bar_residual());
        }
    }
    for (k, spec) in [
        ModelSpec::InverseSquare { dim: 3, kappa: -1.0 },
        ModelSpec::ConformalCoulomb { dim: 3, gamma: 1.0 },
        ModelSpec::InverseSquare { dim: 1, kappa: -0.5 },
    ]
    .iter()
    .enumerate()
    {
        let sys = spec.system().unwrap();
        let states = StateSampler::new(1100 + k as u64)
            .batch(100, sys.dim(), |s| {
                sys.admits(s, EXCLUSION) && chart_state(&sys, s) && sys.casimir_i(s) < -1e-6
            })
            .unwrap();
        for s in states {
            let tab = expected_brackets(&sys, &s).unwrap();
            assert_eq!(tab.branch, Branch::NegativeI);
            w_neg = w_neg.max(tab.w_w_bar_residual());
        }
    }
    let (mut mixed, mut mixed_fixed, mut om, mut om_fixed) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for (k, spec) in catalog().iter().enumerate() {
        let sys = spec.system().unwrap();
        for s in sample_decoupling_states(&sys, 100, 1200 + k as u64).unwrap() {
            let tab = expected_brackets(&sys, &s).unwrap();
            mixed = mixed.max(tab.mixed_formula_residual());
            mixed_fixed = mixed_fixed.max(tab.mixed_corrected_residual());
            let chk = omega_check(&sys, &s).unwrap();
            om = om.max(chk.as_displayed);
            om_fixed = om_fixed.max(chk.corrected);
        }
    }
    (
        w_pos < 1e-8 && w_neg < 1e-8 && mixed < 1e-8 && om < 1e-8,
        format!(
            "{{w,wbar}} I>0 {w_pos:.1e}, I<0 {w_neg:.1e}; {{u,w}} vs (w-wbar)V/(2I) {mixed:.1e} [with 4I: {mixed_fixed:.1e}]; \
             Omega vs P^-1 {om:.1e} [mixed term -1/(2 Im w): {om_fixed:.1e}]"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Check; 10] = [
        ("algebra closure", c1_algebra),
        ("Casimir identity", c2_casimir),
        ("conservation", c3_conservation),
        ("radial closed form", c4_radial),
        ("reconstruction", c5_reconstruction),
        ("decoupling transport", c6_transport),
        ("canonicity verdicts", c7_canonicity),
        ("Calogero geometry", c8_calogero),
        ("spherical counterparts", c9_counterparts),
        ("bracket formulas", c10_brackets),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (n, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (pass, detail) = f();
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} [{}] {name}: {detail} ({:.2} s)",
            n + 1,
            if pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {}/10 passed in {:.1} s", 10 - failed, start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
