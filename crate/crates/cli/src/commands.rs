use std::path::Path;

use fpcs_core::critical::{BasinCertificate, GAMMA_SAMPLES};
use fpcs_core::suites::{run_suite, SuiteReport, SuiteSizes, SUITE_NAMES};
use fpcs_core::{
    analyze, compute_constants, integrate_perturbed, integrate_unperturbed, measure_deviation, sensitivity_sweep,
    ConstantsOptions, DeviationReport, PathSpec, SweepConfig, SweepSummary, Terminal,
};
use serde::Serialize;

use crate::output;
use crate::scenario::Loaded;
use crate::{Cli, CliError, Command, Format};

pub const DEFAULT_RUNS: usize = 50;

/// Files produced by a command. With `--out` all are written; otherwise the
/// one matching `--format` is printed.
#[derive(Debug, Clone, Default)]
pub struct Outputs {
    pub files: Vec<(String, String)>,
    pub csv: Option<usize>,
    pub json: Option<usize>,
    pub default_format: Option<Format>,
    /// Set when the command ran but its checks failed.
    pub failure: Option<String>,
}

impl Outputs {
    fn push(&mut self, name: &str, body: String) -> usize {
        self.files.push((name.to_string(), body));
        self.files.len() - 1
    }

    pub fn emit(self, cli: &Cli) -> Result<(), CliError> {
        if let Some(dir) = &cli.out {
            std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
            for (name, body) in &self.files {
                let path = dir.join(name);
                std::fs::write(&path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                log::info!("wrote {}", path.display());
            }
        } else {
            let format = cli.format.or(self.default_format).unwrap_or(Format::Json);
            let idx = match format {
                Format::Csv => self.csv,
                Format::Json => self.json,
            }
            .ok_or_else(|| CliError::Schema(format!("this command has no {format:?} output").to_lowercase()))?;
            print!("{}", self.files[idx].1);
        }
        match self.failure {
            Some(msg) => Err(CliError::Failed(msg)),
            None => Ok(()),
        }
    }
}

pub fn execute(cli: &Cli) -> Result<Outputs, CliError> {
    match &cli.command {
        Command::Simulate { scenario } => simulate(&load(scenario)?, cli),
        Command::Analyze { scenario } => analyze_cmd(&load(scenario)?, cli),
        Command::Constants { scenario } => constants(&load(scenario)?, cli),
        Command::Sensitivity { scenario } => sensitivity(&load(scenario)?, cli),
        Command::Verify { suite } => verify(suite, cli),
    }
}

fn load(path: &Path) -> Result<Loaded, CliError> {
    Loaded::from_file(path)
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct RunReport {
    dim: usize,
    horizon: f64,
    seed: u64,
    terminal: Terminal,
    segments: usize,
    perturbed_terminal: Option<Terminal>,
    perturbed_segments: Option<usize>,
    jumps: usize,
    #[serde(flatten)]
    deviation: DeviationReport,
}

fn simulate(l: &Loaded, cli: &Cli) -> Result<Outputs, CliError> {
    let x0 = l.initial_state()?;
    let horizon = l.horizon()?;
    let seed = cli.seed.unwrap_or_else(|| l.perturbation_seed());
    let u = l.path(seed)?;
    let x = integrate_unperturbed(&l.phi, &x0, horizon)?;
    let mut csv = output::trajectory_header(l.phi.dim);
    output::trajectory_rows(&mut csv, &x, "unperturbed");
    let (xt, deviation) = if l.path_spec()?.is_some() {
        let xt = integrate_perturbed(&l.phi, &x0, &u, horizon)?;
        output::trajectory_rows(&mut csv, &xt, "perturbed");
        let d = measure_deviation(&x, &xt, &u)?;
        (Some(xt), d)
    } else {
        (None, measure_deviation(&x, &x, &u)?)
    };
    let report = RunReport {
        dim: l.phi.dim,
        horizon,
        seed,
        terminal: x.terminal,
        segments: x.segment_count(),
        perturbed_terminal: xt.as_ref().map(|t| t.terminal),
        perturbed_segments: xt.as_ref().map(|t| t.segment_count()),
        jumps: xt.as_ref().map_or(0, |t| t.jump_count()),
        deviation,
    };
    let mut out = Outputs {
        default_format: Some(Format::Csv),
        ..Default::default()
    };
    out.csv = Some(out.push("trajectory.csv", csv));
    out.json = Some(out.push("run.json", json(&report)));
    Ok(out)
}

#[derive(Serialize)]
struct AnalysisReport {
    n: usize,
    m: usize,
    critical_points: Vec<Vec<f64>>,
    #[serde(with = "fpcs_core::serde_num")]
    cnc: f64,
    #[serde(rename = "D_C", with = "fpcs_core::serde_num")]
    diameter: f64,
    basins: Vec<BasinCertificate>,
    #[serde(with = "fpcs_core::serde_num")]
    gamma_bound: f64,
    #[serde(with = "fpcs_core::serde_num")]
    gamma_empirical: f64,
}

fn analyze_cmd(l: &Loaded, cli: &Cli) -> Result<Outputs, CliError> {
    let samples = l.scenario.tolerances.gamma_samples.unwrap_or(GAMMA_SAMPLES);
    let a = analyze(&l.phi, samples, cli.seed.unwrap_or(0))?;
    let report = AnalysisReport {
        n: l.phi.dim,
        m: l.phi.num_pieces(),
        critical_points: a.critical_points.points,
        cnc: a.cnc,
        diameter: a.diameter,
        basins: a.basins,
        gamma_bound: a.gamma_bound,
        gamma_empirical: a.gamma_empirical,
    };
    single_json("analysis.json", json(&report))
}

fn single_json(name: &str, body: String) -> Result<Outputs, CliError> {
    let mut out = Outputs::default();
    out.json = Some(out.push(name, body));
    Ok(out)
}

fn constants_options(l: &Loaded, cli: &Cli) -> Result<ConstantsOptions, CliError> {
    let gamma = cli.gamma.or(l.scenario.gamma_override);
    if let Some(g) = cli.gamma {
        if !(g.is_finite() && g >= 1.0) {
            return Err(CliError::Schema(format!("--gamma must be finite and >= 1, got {g}")));
        }
    }
    let mut o = ConstantsOptions {
        gamma_override: gamma,
        seed: cli.seed.unwrap_or(0),
        ..Default::default()
    };
    let t = &l.scenario.tolerances;
    if let Some(b) = t.subset_budget {
        o.subset_budget = b;
    }
    if let Some(s) = t.gamma_samples {
        o.gamma_samples = s;
    }
    if let Some(k) = t.one_dim_kappa {
        if !(k.is_finite() && k >= 1.0) {
            return Err(l.schema_error("one_dim_kappa", "one_dim_kappa must be finite and >= 1"));
        }
        o.one_dim_kappa = k;
    }
    Ok(o)
}

fn constants(l: &Loaded, cli: &Cli) -> Result<Outputs, CliError> {
    let report = compute_constants(&l.phi, &constants_options(l, cli)?)?;
    single_json("constants.json", json(&report))
}

#[derive(Serialize)]
struct SensitivityReport {
    seed: u64,
    horizon: f64,
    /// `None` when the constants could not be computed.
    #[serde(serialize_with = "opt_num")]
    kappa: Option<f64>,
    kappa_error: Option<String>,
    within_kappa: Option<bool>,
    #[serde(flatten)]
    sweep: SweepSummary,
}

fn opt_num<S: serde::Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(x) => fpcs_core::serde_num::serialize(x, s),
        None => s.serialize_none(),
    }
}

fn sensitivity(l: &Loaded, cli: &Cli) -> Result<Outputs, CliError> {
    let x0 = l.initial_state()?;
    let horizon = l.horizon()?;
    let seed = cli.seed.unwrap_or_else(|| l.perturbation_seed());
    // validates the family against the horizon
    l.path(seed)?;
    let path = l.path_spec()?.unwrap_or(PathSpec::Deterministic { jumps: Vec::new() });
    let cfg = SweepConfig {
        path,
        runs: cli.runs.unwrap_or(DEFAULT_RUNS),
        horizon,
        seed,
        checkpoints: 20,
    };
    let sweep = sensitivity_sweep(&l.phi, &x0, &cfg)?;
    let (kappa, kappa_error) = match compute_constants(&l.phi, &constants_options(l, cli)?) {
        Ok(r) => (Some(r.kappa), None),
        Err(e) => (None, Some(e.name().to_string())),
    };
    let within_kappa = kappa.map(|k| fpcs_core::constants::ratio_within(sweep.max_ratio, k));
    let growth = output::growth_csv(&sweep.growth_curve);
    let report = SensitivityReport {
        seed,
        horizon,
        kappa,
        kappa_error,
        within_kappa,
        sweep,
    };
    let mut out = Outputs::default();
    out.json = Some(out.push("sweep.json", json(&report)));
    out.csv = Some(out.push("growth.csv", growth));
    Ok(out)
}

#[derive(Serialize)]
struct VerifyReport {
    seed: u64,
    passed: bool,
    suites: Vec<SuiteReport>,
}

fn verify(suite: &str, cli: &Cli) -> Result<Outputs, CliError> {
    let names: Vec<&str> = if suite == "all" {
        SUITE_NAMES.to_vec()
    } else if SUITE_NAMES.contains(&suite) {
        vec![suite]
    } else {
        return Err(CliError::Schema(format!(
            "unknown suite {suite:?}; expected one of {} or all",
            SUITE_NAMES.join(", ")
        )));
    };
    let seed = cli.seed.unwrap_or(0);
    let sizes = SuiteSizes {
        systems: cli.runs.unwrap_or(0),
        per_system: 0,
    };
    let suites: Vec<SuiteReport> = names
        .iter()
        .map(|n| run_suite(n, seed, sizes).expect("known suite"))
        .collect();
    let passed = suites.iter().all(|s| s.passed);
    let failed: Vec<String> = suites.iter().filter(|s| !s.passed).map(|s| s.name.clone()).collect();
    let mut out = single_json("verify.json", json(&VerifyReport { seed, passed, suites }))?;
    if !passed {
        out.failure = Some(format!("suite(s) failed: {}", failed.join(", ")));
    }
    Ok(out)
}

