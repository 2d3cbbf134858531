//! Run configuration: command-line flags merged over an optional flat
//! `key = value` file. Flags win; unknown file keys are rejected.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use clap::Args;
use confmech::models::ModelSpec;
use confmech::phase::{RTOL_MAX, RTOL_MIN};
use serde::Serialize;

/// Keys accepted in a config file (flag names with `-` or `_`).
const KEYS: [&str; 17] = [
    "model", "kappa", "omega", "gamma", "g", "particles", "dim", "dt", "t_end", "rtol", "samples",
    "tol", "seed", "output", "format", "q", "p",
];

#[derive(Args, Debug, Clone, Default)]
pub struct Params {
    /// free | inverse-square | conformal-higgs | conformal-coulomb | calogero
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub kappa: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub omega: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    /// Calogero coupling; for 1D inverse-square sets kappa = g²/2.
    #[arg(long, allow_hyphen_values = true)]
    pub g: Option<f64>,
    #[arg(long)]
    pub particles: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub dt: Option<f64>,
    #[arg(long = "t-end", allow_hyphen_values = true)]
    pub t_end: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// csv | json
    #[arg(long)]
    pub format: Option<String>,
    /// Flat key = value file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Initial positions, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<String>,
    /// Initial momenta, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub p: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub model: ModelSpec,
    pub dt: f64,
    pub t_end: f64,
    pub rtol: f64,
    pub samples: usize,
    pub tol: f64,
    pub seed: u64,
    pub output: Option<String>,
    pub format: Format,
    pub q: Option<Vec<f64>>,
    pub p: Option<Vec<f64>>,
}

#[derive(Debug)]
pub struct UsageError(pub String);

fn usage<T>(msg: impl Into<String>) -> Result<T, UsageError> {
    Err(UsageError(msg.into()))
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, UsageError> {
    v.trim().parse().map_err(|_| UsageError(format!("invalid value for {key}: {v:?}")))
}

pub fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, UsageError> {
    v.split(',').map(|x| parse_num::<f64>(key, x)).collect()
}

fn read_file(path: &PathBuf) -> Result<BTreeMap<String, String>, UsageError> {
    let text = fs::read_to_string(path)
        .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return usage(format!("config line {}: expected key = value", n + 1));
        };
        let key = k.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return usage(format!("config line {}: unknown key {:?}", n + 1, k.trim()));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

macro_rules! fill {
    ($params:ident, $file:ident, $($field:ident),*) => {
        $(
            if $params.$field.is_none() {
                if let Some(v) = $file.get(stringify!($field)) {
                    $params.$field = Some(parse_num(stringify!($field), v)?);
                }
            }
        )*
    };
}

/// Applies file values under the flags.
pub fn merge_file(mut params: Params) -> Result<Params, UsageError> {
    let Some(path) = params.config.clone() else { return Ok(params) };
    let file = read_file(&path)?;
    fill!(params, file, kappa, omega, gamma, g, particles, dim, dt, t_end, rtol, samples, tol, seed);
    if params.model.is_none() {
        params.model = file.get("model").cloned();
    }
    if params.format.is_none() {
        params.format = file.get("format").cloned();
    }
    if params.output.is_none() {
        params.output = file.get("output").map(PathBuf::from);
    }
    if params.q.is_none() {
        params.q = file.get("q").cloned();
    }
    if params.p.is_none() {
        params.p = file.get("p").cloned();
    }
    Ok(params)
}

fn model_spec(p: &Params) -> Result<ModelSpec, UsageError> {
    let name = p.model.as_deref().unwrap_or("inverse-square").to_ascii_lowercase().replace('-', "_");
    let dim = p.dim.unwrap_or(1);
    let spec = match name.as_str() {
        "free" => ModelSpec::Free { dim },
        "inverse_square" => {
            let kappa = match (p.kappa, p.g) {
                (Some(k), _) => k,
                (None, Some(g)) if dim == 1 => 0.5 * g * g,
                _ => 0.5,
            };
            ModelSpec::InverseSquare { dim, kappa }
        }
        "conformal_higgs" | "higgs" => ModelSpec::ConformalHiggs { dim, omega: p.omega.unwrap_or(1.0) },
        "conformal_coulomb" | "coulomb" => {
            ModelSpec::ConformalCoulomb { dim, gamma: p.gamma.unwrap_or(1.0) }
        }
        "calogero" | "calogero_relative" => {
            let particles = p.particles.unwrap_or(3);
            if let Some(d) = p.dim {
                if d + 1 != particles {
                    return usage(format!("calogero with {particles} particles has dim {}", particles.saturating_sub(1)));
                }
            }
            ModelSpec::CalogeroRelative { particles, g: p.g.unwrap_or(1.0) }
        }
        other => return usage(format!("unknown model {other:?}")),
    };
    spec.validate().map_err(|e| UsageError(e.to_string()))?;
    Ok(spec)
}

pub fn resolve(command: &str, params: Params) -> Result<RunConfig, UsageError> {
    let p = merge_file(params)?;
    let model = model_spec(&p)?;
    let dt = p.dt.unwrap_or(1e-3);
    let t_end = p.t_end.unwrap_or(10.0);
    let rtol = p.rtol.unwrap_or(1e-10);
    let samples = p.samples.unwrap_or(200);
    let tol = p.tol.unwrap_or(1e-8);
    if !(dt > 0.0 && dt.is_finite()) {
        return usage(format!("--dt must be positive (got {dt})"));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return usage(format!("--t-end must be positive (got {t_end})"));
    }
    if dt > t_end {
        return usage("--dt must not exceed --t-end");
    }
    if !(RTOL_MIN..=RTOL_MAX).contains(&rtol) {
        return usage(format!("--rtol must lie in [{RTOL_MIN:e}, {RTOL_MAX:e}]"));
    }
    if samples == 0 {
        return usage("--samples must be at least 1");
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return usage("--tol must be positive");
    }
    let format = match p.format.as_deref() {
        None if matches!(command, "simulate" | "reconstruct" | "exact") => Format::Csv,
        None => Format::Json,
        Some("csv") => Format::Csv,
        Some("json") => Format::Json,
        Some(f) => return usage(format!("unknown format {f:?}")),
    };
    if format == Format::Csv && !matches!(command, "simulate" | "reconstruct" | "exact") {
        return usage(format!("{command} writes JSON reports only"));
    }
    let q = p.q.as_deref().map(|v| parse_list("q", v)).transpose()?;
    let p_vec = p.p.as_deref().map(|v| parse_list("p", v)).transpose()?;
    Ok(RunConfig {
        command: command.to_string(),
        model,
        dt,
        t_end,
        rtol,
        samples,
        tol,
        seed: p.seed.unwrap_or(0),
        output: p.output.map(|o| o.display().to_string()),
        format,
        q,
        p: p_vec,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_beat_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(&path, "# comment\nmodel = free\ndim = 3\nsamples = 7\nt-end = 2\n").unwrap();
        let params = Params { config: Some(path), dim: Some(2), ..Default::default() };
        let cfg = resolve("verify-algebra", params).unwrap();
        assert_eq!(cfg.model, ModelSpec::Free { dim: 2 });
        assert_eq!(cfg.samples, 7);
        assert_eq!(cfg.t_end, 2.0);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(&path, "colour = blue\n").unwrap();
        let params = Params { config: Some(path), ..Default::default() };
        assert!(resolve("simulate", params).is_err());
    }

    #[test]
    fn ranges() {
        assert!(resolve("simulate", Params { dt: Some(-1.0), ..Default::default() }).is_err());
        assert!(resolve("simulate", Params { rtol: Some(1e-2), ..Default::default() }).is_err());
        assert!(resolve("verify-algebra", Params { format: Some("csv".into()), ..Default::default() }).is_err());
    }

    #[test]
    fn one_dimensional_coupling() {
        let params = Params { g: Some(2.0), ..Default::default() };
        let cfg = resolve("simulate", params).unwrap();
        assert_eq!(cfg.model, ModelSpec::InverseSquare { dim: 1, kappa: 2.0 });
    }
}
