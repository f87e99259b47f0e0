//! Command implementations behind the `contra` binary.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use contra_core::bench::{run_monte_carlo, ExperimentPreset, MonteCarloReport, PRESET_NAMES};
use contra_core::contraction::{design_min_step, predicted_mse_floor, DesignConstants};
use contra_core::Error;

pub const CSV_HEADER: &str = "iteration,baseline_train_mse,baseline_test_mse,modified_train_mse,\
modified_test_mse,baseline_l1,modified_l1,factor_mean";

/// Environment variable consulted when neither `--seed` nor a config file
/// sets the seed.
pub const SEED_ENV: &str = "CONTRA_SEED";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("divergence: {0}")]
    Divergence(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Divergence(_) => 3,
            CliError::Io { .. } => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_divergence() {
            CliError::Divergence(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Flag overrides for `run`; `None` keeps the preset value.
#[derive(Debug, Clone, Default)]
pub struct RunOverrides {
    pub runs: Option<usize>,
    pub seed: Option<u64>,
    pub variant: Option<String>,
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    pub lambda: Option<f64>,
    pub embed_dim: Option<usize>,
    pub record_every: Option<usize>,
}

#[derive(Debug, Clone)]
pub enum PresetSource {
    Builtin(String),
    ConfigFile(PathBuf),
}

/// Builds the effective preset: builtin or config file, then `env_seed`
/// (only for builtins, since a config file always pins its own seed), then
/// the flag overrides. Validated before returning.
pub fn resolve_preset(
    source: &PresetSource,
    overrides: &RunOverrides,
    env_seed: Option<&str>,
) -> Result<ExperimentPreset, CliError> {
    let mut preset = match source {
        PresetSource::Builtin(name) => {
            let mut p = ExperimentPreset::builtin(name).ok_or_else(|| {
                CliError::Config(format!(
                    "unknown preset `{name}` (available: {})",
                    PRESET_NAMES.join(", ")
                ))
            })?;
            if let Some(s) = env_seed {
                p.seed = s
                    .trim()
                    .parse()
                    .map_err(|e| CliError::Config(format!("{SEED_ENV}=`{s}`: {e}")))?;
            }
            p
        }
        PresetSource::ConfigFile(path) => {
            let text = fs::read_to_string(path).map_err(io_err(path))?;
            ExperimentPreset::from_config(&text)?
        }
    };
    let o = overrides;
    if let Some(v) = o.runs {
        preset.n_runs = v;
    }
    if let Some(v) = o.seed {
        preset.seed = v;
    }
    if let Some(v) = &o.variant {
        preset.set("variant", v)?;
    }
    if let Some(v) = o.mu {
        preset.mu = v;
    }
    if let Some(v) = o.sigma {
        preset.sigma = v;
    }
    if let Some(v) = o.lambda {
        preset.lambda_reg = v;
    }
    if let Some(v) = o.embed_dim {
        preset.embed_dim = v;
    }
    if let Some(v) = o.record_every {
        preset.record_every = v;
    }
    preset.validate()?;
    Ok(preset)
}

pub fn cmd_list() -> String {
    let mut out = String::new();
    for name in PRESET_NAMES {
        let p = ExperimentPreset::builtin(name).expect("registry names are builtins");
        let _ = writeln!(out, "{name:<8} {}", p.provenance());
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

/// Learning curves as CSV; columns of an arm that was not run are empty.
pub fn render_csv(report: &MonteCarloReport) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    let b = report.baseline.as_ref().map(|c| &c.rows);
    let m = report.modified.as_ref().map(|c| &c.rows);
    let n = b.or(m).map_or(0, |r| r.len());
    for i in 0..n {
        let br = b.map(|r| &r[i]);
        let mr = m.map(|r| &r[i]);
        let iteration = br.or(mr).map(|r| r.iteration).unwrap_or_default();
        let factor = mr.or(br).map(|r| r.factor_mean);
        let _ = writeln!(
            out,
            "{iteration},{},{},{},{},{},{},{}",
            opt(br.map(|r| r.train_mse)),
            opt(br.map(|r| r.test_mse)),
            opt(mr.map(|r| r.train_mse)),
            opt(mr.map(|r| r.test_mse)),
            opt(br.map(|r| r.l1_norm)),
            opt(mr.map(|r| r.l1_norm)),
            opt(factor),
        );
    }
    out
}

/// Effective configuration followed by the comparative metrics, all as
/// `key = value` lines.
pub fn render_summary(report: &MonteCarloReport) -> String {
    let mut out = String::from("# effective configuration\n");
    out.push_str(&report.preset.to_config());
    out.push_str("# results\n");
    for (k, v) in report.summary.entries() {
        let _ = writeln!(out, "{k} = {v}");
    }
    out
}

pub fn render_plot_script() -> String {
    "set datafile separator ','\n\
     set key autotitle columnhead\n\
     set logscale y\n\
     set xlabel 'iteration'\n\
     set ylabel 'test MSE'\n\
     plot 'curve.csv' using 1:3 with lines, '' using 1:5 with lines\n"
        .to_string()
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: MonteCarloReport,
    pub csv: String,
    pub summary: String,
}

/// Runs the experiment, then writes `curve.csv`, `summary.txt` and
/// `config.txt` (plus `plot.gp` if asked) under `out_dir`.
pub fn cmd_run(preset: &ExperimentPreset, out_dir: &Path, plot: bool) -> Result<RunOutput, CliError> {
    let report = run_monte_carlo(preset)?;
    let csv = render_csv(&report);
    let summary = render_summary(&report);
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut files = vec![
        ("curve.csv", csv.clone()),
        ("summary.txt", summary.clone()),
        ("config.txt", preset.to_config()),
    ];
    if plot {
        files.push(("plot.gp", render_plot_script()));
    }
    for (name, body) in files {
        let path = out_dir.join(name);
        fs::write(&path, body).map_err(io_err(&path))?;
    }
    Ok(RunOutput {
        report,
        csv,
        summary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignReport {
    pub mu_min: f64,
    pub mse_floor: Option<f64>,
    pub feasible: Option<bool>,
}

pub fn design(eps: f64, n_max: u64, mu: Option<f64>, k1: f64, k2: f64) -> Result<DesignReport, CliError> {
    let k = DesignConstants::new(k1, k2)?;
    let mu_min = design_min_step(eps, n_max, &k)?;
    let mse_floor = mu.map(|m| predicted_mse_floor(m, eps, &k)).transpose()?;
    Ok(DesignReport {
        mu_min,
        mse_floor,
        feasible: mu.map(|m| m >= mu_min),
    })
}

pub fn cmd_design(eps: f64, n_max: u64, mu: Option<f64>, k1: f64, k2: f64) -> Result<String, CliError> {
    let r = design(eps, n_max, mu, k1, k2)?;
    let mut out = format!("mu_min = {}\n", r.mu_min);
    if let (Some(m), Some(floor), Some(ok)) = (mu, r.mse_floor, r.feasible) {
        let _ = writeln!(out, "mu = {m}");
        let _ = writeln!(out, "mse_floor = {floor}");
        let _ = writeln!(out, "feasible = {ok}");
        if !ok {
            let _ = writeln!(out, "infeasible: mu {m} is below mu_min {}", r.mu_min);
        }
    }
    Ok(out)
}
