//! `confmech` command-line runner.
//!
//! Exit codes: 0 success, 1 verification failure (report still written),
//! 2 usage error, 3 numeric or I/O error (diagnostic JSON on stderr).

mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use confmech::conformal::{verify_algebra, ConformalSystem};
use confmech::exact::{fall_time, reconstruct, reparam_time, RadialData};
use confmech::lobachevsky::{canonicity_report, invert, to_klein, tilde_map, Verdict};
use confmech::models::{catalog, spherical_counterpart, Jacobi, ModelSpec};
use confmech::reduction::{angular_potential, to_hyperspherical, unit_vector};
use confmech::sampling::{StateSampler, EXCLUSION};
use confmech::{Error, PhaseState};
use serde_json::{json, Value};

use config::{Format, Params, RunConfig, UsageError};
use output::{describe, diagnostic, emit, envelope, json_string, table_csv, trajectory_csv, trajectory_json};

#[derive(Parser)]
#[command(name = "confmech", version, about = "Conformal mechanics: integrate, reduce and verify")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Velocity-Verlet trajectory with H, D, K, I monitors.
    Simulate(Params),
    /// Trajectory from the closed-form radial motion and the angular flow.
    Reconstruct(Params),
    /// Sampled check of the so(1,2) relations.
    VerifyAlgebra(Params),
    /// Canonicity report for the Klein-model inversion.
    VerifyDecoupling(Params),
    /// Radial/angular split of one state.
    Reduce(Params),
    /// Radial data, fall time and reparametrized time of one state.
    Exact(Params),
    /// The model catalog.
    Models(Params),
}

enum Failure {
    Usage(String),
    Numeric(Error),
    Io(std::io::Error),
}

impl From<UsageError> for Failure {
    fn from(e: UsageError) -> Self {
        Failure::Usage(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(m) | Error::Unsupported(m) => Failure::Usage(m),
            other => Failure::Numeric(other),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

type Outcome = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, params) = match cli.command {
        Command::Simulate(p) => ("simulate", p),
        Command::Reconstruct(p) => ("reconstruct", p),
        Command::VerifyAlgebra(p) => ("verify-algebra", p),
        Command::VerifyDecoupling(p) => ("verify-decoupling", p),
        Command::Reduce(p) => ("reduce", p),
        Command::Exact(p) => ("exact", p),
        Command::Models(p) => ("models", p),
    };
    let result = config::resolve(name, params).map_err(Failure::from).and_then(|cfg| run(&cfg));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(e)) => {
            let (kind, details) = describe(&e);
            eprint!("{}", diagnostic(name, kind, &e.to_string(), details));
            ExitCode::from(3)
        }
        Err(Failure::Io(e)) => {
            eprint!("{}", diagnostic(name, "IoError", &e.to_string(), json!({})));
            ExitCode::from(3)
        }
    }
}

fn run(cfg: &RunConfig) -> Outcome {
    match cfg.command.as_str() {
        "simulate" => simulate(cfg),
        "reconstruct" => reconstruct_cmd(cfg),
        "verify-algebra" => verify_algebra_cmd(cfg),
        "verify-decoupling" => verify_decoupling(cfg),
        "reduce" => reduce(cfg),
        "exact" => exact(cfg),
        "models" => models(cfg),
        other => Err(Failure::Usage(format!("unknown command {other}"))),
    }
}

/// `--q/--p` if given (Calogero accepts all particle coordinates), otherwise
/// the first seeded sample with `I > 0`, falling back to any admissible one.
fn initial_state(cfg: &RunConfig, sys: &ConformalSystem) -> Result<PhaseState, Failure> {
    let d = sys.dim();
    if let Some(q) = &cfg.q {
        let p = cfg.p.clone().unwrap_or_else(|| vec![0.0; q.len()]);
        if p.len() != q.len() {
            return Err(Failure::Usage("--q and --p lengths differ".into()));
        }
        if let ModelSpec::CalogeroRelative { particles, .. } = cfg.model {
            if q.len() == particles {
                return Ok(Jacobi::new(particles).reduce_state(q, &p));
            }
        }
        if q.len() != d {
            return Err(Failure::Usage(format!("expected {d} coordinates, got {}", q.len())));
        }
        return Ok(PhaseState::new(q.clone(), p)?);
    }
    if cfg.p.is_some() {
        return Err(Failure::Usage("--p needs --q".into()));
    }
    let with_i = StateSampler::new(cfg.seed)
        .batch(1, d, |s| sys.admits(s, EXCLUSION) && sys.casimir_i(s) > 0.0);
    let states = match with_i {
        Ok(s) => s,
        Err(_) => StateSampler::new(cfg.seed).batch(1, d, |s| sys.admits(s, EXCLUSION))?,
    };
    Ok(states.into_iter().next().expect("one state"))
}

fn write_trajectory(cfg: &RunConfig, traj: &confmech::Trajectory) -> Result<(), Failure> {
    let text = match cfg.format {
        Format::Csv => trajectory_csv(traj),
        Format::Json => json_string(&trajectory_json(cfg, traj)),
    };
    Ok(emit(cfg, &text)?)
}

fn simulate(cfg: &RunConfig) -> Outcome {
    let sys = cfg.model.system()?;
    let s0 = initial_state(cfg, &sys)?;
    let traj = sys.integrate_verlet(&s0, cfg.dt, cfg.t_end)?;
    write_trajectory(cfg, &traj)?;
    Ok(true)
}

fn reconstruct_cmd(cfg: &RunConfig) -> Outcome {
    let sys = cfg.model.system()?;
    let s0 = initial_state(cfg, &sys)?;
    let n = (cfg.t_end / cfg.dt).round() as usize;
    let grid: Vec<f64> = (0..=n).map(|k| cfg.t_end * k as f64 / n as f64).collect();
    let traj = reconstruct(&sys, &s0, &grid)?;
    write_trajectory(cfg, &traj)?;
    Ok(true)
}

fn verify_algebra_cmd(cfg: &RunConfig) -> Outcome {
    let sys = cfg.model.system()?;
    let report = verify_algebra(&sys, cfg.samples, cfg.tol, cfg.seed)?;
    emit(cfg, &json_string(&envelope(cfg, "report", &report)))?;
    Ok(report.pass)
}

fn verify_decoupling(cfg: &RunConfig) -> Outcome {
    let sys = cfg.model.system()?;
    let report = canonicity_report(&sys, cfg.samples, cfg.tol, cfg.seed)?;
    let expected = if sys.dim() == 1 { Verdict::Canonical } else { Verdict::NonCanonical };
    let pass = report.verdict == expected;
    let mut body = envelope(cfg, "report", &report);
    body["expected_verdict"] = serde_json::to_value(expected).expect("serializable");
    body["pass"] = Value::Bool(pass);
    emit(cfg, &json_string(&body))?;
    Ok(pass)
}

fn reduce(cfg: &RunConfig) -> Outcome {
    let sys = cfg.model.system()?;
    let s = initial_state(cfg, &sys)?;
    let i = sys.casimir_i(&s);
    let mut body = json!({
        "state": &s,
        "H": sys.hamiltonian().eval(&s),
        "D": sys.dilatation().eval(&s),
        "K": sys.boost().eval(&s),
        "I": i,
    });
    if sys.dim() == 1 && s.q[0] < 0.0 {
        return Err(Failure::Numeric(Error::ChartSingular("one-dimensional chart covers x > 0 only".into())));
    }
    let rs = to_hyperspherical(&s)?;
    body["reduced"] = serde_json::to_value(&rs).expect("serializable");
    body["unit_vector"] = json!(unit_vector(&rs.phi));
    body["angular_potential"] = json!(angular_potential(sys.potential(), &rs)?);
    if let Ok(form) = spherical_counterpart(&cfg.model) {
        body["counterpart"] = serde_json::to_value(form).expect("serializable");
        if sys.dim() > 1 {
            body["counterpart_value"] = json!(form.eval_chart(&rs.phi));
        }
    }
    if i != 0.0 {
        let kp = to_klein(rs.p_r, rs.r, i)?;
        let (w, wb, _) = kp.parts();
        let inv = invert(&kp)?;
        let (iw, iwb, _) = inv.parts();
        body["klein"] = json!({
            "branch": kp.branch(),
            "w": [w.re, w.im],
            "w_bar": [wb.re, wb.im],
            "inverted_w": [iw.re, iw.im],
            "inverted_w_bar": [iwb.re, iwb.im],
        });
        if let Ok(t) = tilde_map(&rs, i) {
            body["tilde"] = serde_json::to_value(t).expect("serializable");
        }
    }
    emit(cfg, &json_string(&envelope(cfg, "reduction", body)))?;
    Ok(true)
}

fn exact(cfg: &RunConfig) -> Outcome {
    let sys = cfg.model.system()?;
    let s = initial_state(cfg, &sys)?;
    let rd = RadialData::from_state(&sys, &s)?;
    let fall = fall_time(&rd);
    let n = (cfg.t_end / cfg.dt).round() as usize;
    let mut rows = Vec::new();
    for k in 0..=n {
        let t = cfg.t_end * k as f64 / n as f64;
        if fall.is_some_and(|tf| t >= tf) {
            break;
        }
        rows.push(vec![t, rd.radial_squared(t), rd.radial_momentum(t), reparam_time(&rd, t)?]);
    }
    let columns = ["t", "r2", "p_r", "T"];
    let text = match cfg.format {
        Format::Csv => table_csv(&columns, &rows),
        Format::Json => json_string(&envelope(
            cfg,
            "exact",
            json!({ "radial": rd, "fall_time": fall, "columns": columns, "rows": rows }),
        )),
    };
    emit(cfg, &text)?;
    Ok(true)
}

fn models(cfg: &RunConfig) -> Outcome {
    let entries: Vec<Value> = catalog()
        .into_iter()
        .map(|m| {
            let counterpart = spherical_counterpart(&m).ok();
            json!({ "model": m, "dim": m.dim(), "counterpart": counterpart })
        })
        .collect();
    emit(cfg, &json_string(&envelope(cfg, "models", entries)))?;
    Ok(true)
}
