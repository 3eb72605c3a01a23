//! Command-line surface: figure-recipe execution, data export, and the
//! validation suite runner.
//!
//! Exit codes: 0 success, 1 validation failure, 2 config error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{MeasureTime, RunConfig, ScanKind};
use crate::dynamics::{self, fit_period, SpectralPropagator, TimeGrid, Window};
use crate::model::{
    self, build_h_interaction, build_h_nonhermitian, decoherence_estimates, derived_couplings,
    Branch,
};
use crate::recipes;
use crate::states::QuantumState;
use crate::tomography::{
    negativity_metrics, photon_distribution, project_atoms, reduce_to_mode, wigner, wigner_point,
    WignerGridSpec,
};
use crate::validate;

#[derive(Parser)]
#[command(
    name = "rydcav",
    version,
    about = "Two Rydberg atoms in coupled cavities: two-photon absorption/emission \
             simulator and quantum-filter toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Print derived couplings, resonance conditions, and decoherence estimates
    Derive(RunArgs),
    /// Evolve the configured initial state and export the trajectory CSV
    Evolve(RunArgs),
    /// Sweep time-averaged absorption over V_dd/J (one CSV per photon number)
    Sweep(RunArgs),
    /// Scan time-averaged absorption or emission over the initial photon number
    #[command(name = "scan-n")]
    ScanN(RunArgs),
    /// Run the filter protocol: evolve, project the atoms, reduce, Wigner
    Filter(RunArgs),
    /// Wigner function of the configured initial state's reduced mode
    Wigner(RunArgs),
    /// Non-Hermitian no-jump run with decoherence estimates
    Decay(RunArgs),
    /// Run the invariant validation suite (exit 1 on any failure)
    Validate(ValidateArgs),
}

#[derive(Args)]
pub struct RunArgs {
    /// Built-in recipe name (fig2a..fig2f, fig3a, fig3b, fig4a, fig4b, fig5,
    /// fig6a, fig6b, decay)
    #[arg(long)]
    pub recipe: Option<String>,
    /// Config file in the flat `key = value` format; overrides recipe keys
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct ValidateArgs {
    /// Optional directory for the JSON report
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Top-level errors mapped onto exit codes.
enum CmdError {
    /// Bad config, bad usage, or a run that the configuration cannot support.
    Config(String),
    /// Validation suite reported failures.
    Validation,
}

type CmdResult<T> = std::result::Result<T, CmdError>;

impl From<crate::Error> for CmdError {
    fn from(e: crate::Error) -> Self {
        CmdError::Config(e.to_string())
    }
}

impl From<crate::config::ConfigError> for CmdError {
    fn from(e: crate::config::ConfigError) -> Self {
        CmdError::Config(e.to_string())
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::Config(format!("io error: {e}"))
    }
}

pub fn run() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Command::Derive(args) => cmd_derive(args),
        Command::Evolve(args) => cmd_evolve(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::ScanN(args) => cmd_scan_n(args),
        Command::Filter(args) => cmd_filter(args),
        Command::Wigner(args) => cmd_wigner(args),
        Command::Decay(args) => cmd_decay(args),
        Command::Validate(args) => cmd_validate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CmdError::Validation) => ExitCode::from(1),
        Err(CmdError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load_config(args: &RunArgs) -> CmdResult<RunConfig> {
    let base = match &args.recipe {
        Some(name) => Some(
            recipes::recipe(name)
                .ok_or_else(|| CmdError::Config(format!("unknown recipe `{name}`")))?,
        ),
        None => None,
    };
    match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CmdError::Config(format!("cannot read {}: {e}", path.display())))?;
            Ok(RunConfig::parse_with_base(&text, base.as_ref())?)
        }
        None => base.ok_or_else(|| CmdError::Config("provide --recipe and/or --config".into())),
    }
}

fn write_out(dir: &Path, name: &str, contents: &str) -> CmdResult<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(())
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> CmdResult<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable summary");
    println!("{text}");
    write_out(dir, name, &text)
}

/// Collected validity warnings for a run: parameter regime plus dispersive
/// conditions evaluated at the initial photon numbers.
fn run_warnings(cfg: &RunConfig, psi0: Option<&QuantumState>) -> Vec<String> {
    let mut warnings = cfg.params.validity_warnings();
    if let Some(psi0) = psi0 {
        if let Ok(v) = psi0.amplitudes() {
            let row = dynamics::Observables::new(*psi0.space()).row(v);
            warnings.extend(model::dispersive_warnings(&cfg.params, row.n_c1, row.n_c2));
        }
    }
    warnings
}

fn nominal_filter_time(cfg: &RunConfig) -> CmdResult<f64> {
    let dc = derived_couplings(&cfg.params)?;
    Ok(std::f64::consts::PI / (2.0 * 2f64.sqrt() * dc.xi))
}

#[derive(Serialize)]
struct DeriveSummary {
    recipe: Option<String>,
    lambda: f64,
    lambda_p: f64,
    lambda_pp: f64,
    xi: f64,
    xi_prime_plus: f64,
    xi_prime_minus: f64,
    resonance_vdd_c1: Vec<f64>,
    resonance_vdd_c2: Vec<f64>,
    preparation_time: f64,
    gamma_e: f64,
    error_estimate: f64,
    survival_nbar1: f64,
    survival_nbar2: f64,
    warnings: Vec<String>,
}

fn cmd_derive(args: &RunArgs) -> CmdResult<()> {
    let cfg = load_config(args)?;
    let dc = derived_couplings(&cfg.params)?;
    let t_prep = nominal_filter_time(&cfg)?;
    let est = decoherence_estimates(&cfg.params, t_prep);
    let res = |branch: Branch| -> Vec<f64> {
        (0..=6)
            .map(|n| model::resonance_vdd(&cfg.params, n, branch).unwrap())
            .collect()
    };
    let summary = DeriveSummary {
        recipe: cfg.recipe.clone(),
        lambda: dc.lambda,
        lambda_p: dc.lambda_p,
        lambda_pp: dc.lambda_pp,
        xi: dc.xi,
        xi_prime_plus: dc.xi_prime_plus,
        xi_prime_minus: dc.xi_prime_minus,
        resonance_vdd_c1: res(Branch::C1),
        resonance_vdd_c2: res(Branch::C2),
        preparation_time: t_prep,
        gamma_e: est.gamma_e,
        error_estimate: est.error_e,
        survival_nbar1: est.survival(1.0),
        survival_nbar2: est.survival(2.0),
        warnings: run_warnings(&cfg, None),
    };
    write_json(&args.out, "derived.json", &summary)
}

#[derive(Serialize)]
struct EvolveSummary {
    recipe: Option<String>,
    peak_p_r: f64,
    period_fit: Option<f64>,
    period_estimate: f64,
    min_p_g: f64,
    min_n_c1: f64,
    max_top_fock_population: f64,
    warnings: Vec<String>,
}

fn cmd_evolve(args: &RunArgs) -> CmdResult<()> {
    let cfg = load_config(args)?;
    let space = cfg.space()?;
    let grid_spec = cfg
        .grid
        .ok_or_else(|| CmdError::Config("evolve needs grid.t_end and grid.samples".into()))?;
    let psi0 = cfg.build_initial_state(&space)?;
    let h = build_h_interaction(&cfg.params, &space)?;
    let grid = TimeGrid::from_duration(grid_spec.t_end, grid_spec.samples)?;
    let traj = dynamics::evolve(&h, &psi0, &grid)?;

    let dc = derived_couplings(&cfg.params)?;
    let xi_eff = if cfg.params.v_dd >= 0.0 {
        dc.xi_prime_plus
    } else {
        dc.xi_prime_minus
    };
    let period_estimate = std::f64::consts::PI / (2f64.sqrt() * xi_eff.abs());

    let top_fock = traj
        .states
        .iter()
        .map(|v| crate::hilbert::top_fock_population(&space, v))
        .fold(0.0, f64::max);
    let summary = EvolveSummary {
        recipe: cfg.recipe.clone(),
        peak_p_r: traj.series.p_r.iter().copied().fold(f64::MIN, f64::max),
        period_fit: fit_period(&traj.series.times, &traj.series.p_r, period_estimate),
        period_estimate,
        min_p_g: traj.series.p_g.iter().copied().fold(f64::MAX, f64::min),
        min_n_c1: traj.series.n_c1.iter().copied().fold(f64::MAX, f64::min),
        max_top_fock_population: top_fock,
        warnings: run_warnings(&cfg, Some(&psi0)),
    };
    write_out(&args.out, "trajectory.csv", &traj.series.to_csv())?;
    write_json(&args.out, "evolve_summary.json", &summary)
}

#[derive(Serialize)]
struct SweepEntry {
    n: usize,
    argmax_vdd_over_j: f64,
    peak_absorption: f64,
    grid_step: f64,
}

#[derive(Serialize)]
struct SweepSummary {
    recipe: Option<String>,
    branch: String,
    curves: Vec<SweepEntry>,
    warnings: Vec<String>,
}

fn cmd_sweep(args: &RunArgs) -> CmdResult<()> {
    let cfg = load_config(args)?;
    let space = cfg.space()?;
    let sweep = cfg
        .sweep
        .clone()
        .ok_or_else(|| CmdError::Config("sweep needs the sweep.* section".into()))?;
    if sweep.n_list.is_empty() {
        return Err(CmdError::Config("sweep.n_list must not be empty".into()));
    }
    let mut curves = Vec::new();
    for &n in &sweep.n_list {
        let curve = dynamics::sweep_vdd(
            &cfg.params,
            &space,
            sweep.branch,
            n,
            (sweep.from, sweep.to),
            sweep.points,
            sweep.samples,
        )?;
        let mut csv = String::from("vdd_over_J,absorption\n");
        for pt in &curve.points {
            csv.push_str(&format!("{},{}\n", pt.vdd_over_j, pt.absorption));
        }
        write_out(
            &args.out,
            &format!("sweep_{}_n{}.csv", sweep.branch.name(), n),
            &csv,
        )?;
        curves.push(SweepEntry {
            n,
            argmax_vdd_over_j: curve.argmax.vdd_over_j,
            peak_absorption: curve.argmax.absorption,
            grid_step: curve.grid_step,
        });
    }
    let summary = SweepSummary {
        recipe: cfg.recipe.clone(),
        branch: sweep.branch.name().to_string(),
        curves,
        warnings: run_warnings(&cfg, None),
    };
    write_json(&args.out, "sweep_summary.json", &summary)
}

#[derive(Serialize)]
struct ScanSummary {
    recipe: Option<String>,
    kind: String,
    branch: String,
    n: Vec<usize>,
    values: Vec<f64>,
    normalized: Vec<Option<f64>>,
}

fn cmd_scan_n(args: &RunArgs) -> CmdResult<()> {
    let cfg = load_config(args)?;
    let space = cfg.space()?;
    let scan = cfg
        .scan
        .clone()
        .ok_or_else(|| CmdError::Config("scan-n needs the scan.* section".into()))?;
    if scan.n_list.is_empty() {
        return Err(CmdError::Config("scan.n_list must not be empty".into()));
    }
    let window = cfg.window.unwrap_or(Window::TwoPhoton);
    let mut values = Vec::new();
    let mut normalized = Vec::new();
    let mut csv = match scan.kind {
        ScanKind::Absorption => String::from("n,absorption\n"),
        ScanKind::Emission => String::from("n,emission,normalized\n"),
    };
    for &n in &scan.n_list {
        match scan.kind {
            ScanKind::Absorption => {
                let a = dynamics::time_averaged_absorption(
                    &cfg.params,
                    &space,
                    scan.branch,
                    n,
                    window,
                    scan.samples,
                )?;
                csv.push_str(&format!("{n},{a}\n"));
                values.push(a);
                normalized.push(None);
            }
            ScanKind::Emission => {
                let e = dynamics::time_averaged_emission(
                    &cfg.params,
                    &space,
                    scan.branch,
                    n,
                    window,
                    scan.samples,
                )?;
                let norm_str = e.normalized.map(|x| x.to_string()).unwrap_or_default();
                csv.push_str(&format!("{n},{},{}\n", e.raw, norm_str));
                values.push(e.raw);
                normalized.push(e.normalized);
            }
        }
    }
    let name = match scan.kind {
        ScanKind::Absorption => "scan_absorption.csv",
        ScanKind::Emission => "scan_emission.csv",
    };
    write_out(&args.out, name, &csv)?;
    let summary = ScanSummary {
        recipe: cfg.recipe.clone(),
        kind: match scan.kind {
            ScanKind::Absorption => "absorption".into(),
            ScanKind::Emission => "emission".into(),
        },
        branch: scan.branch.name().to_string(),
        n: scan.n_list.clone(),
        values,
        normalized,
    };
    write_json(&args.out, "scan_summary.json", &summary)
}

#[derive(Serialize)]
struct FilterSummary {
    recipe: Option<String>,
    measurement_time: f64,
    measured_label: String,
    probability: f64,
    p2: f64,
    rho22: f64,
    wigner_min: f64,
    negative_volume: f64,
    w_origin: f64,
    warnings: Vec<String>,
}

fn cmd_filter(args: &RunArgs) -> CmdResult<()> {
    let cfg = load_config(args)?;
    let space = cfg.space()?;
    let filter = cfg
        .filter
        .ok_or_else(|| CmdError::Config("filter needs the filter.* section".into()))?;
    let wspec = cfg
        .wigner
        .ok_or_else(|| CmdError::Config("filter needs the wigner.* section".into()))?;
    let psi0 = cfg.build_initial_state(&space)?;

    let t_meas = match filter.time {
        MeasureTime::Auto => nominal_filter_time(&cfg)?,
        MeasureTime::At(t) => t,
    };
    let h = build_h_interaction(&cfg.params, &space)?;
    let prop = SpectralPropagator::new(&h, psi0.amplitudes()?)?;
    let at_t = QuantumState::pure(space, prop.state_at(t_meas))?;

    let outcome = project_atoms(&at_t, filter.measure)?;
    let rho = reduce_to_mode(&outcome.state, wspec.mode)?;
    let pn = photon_distribution(&rho);

    let grid_spec = WignerGridSpec {
        x_min: -wspec.extent,
        x_max: wspec.extent,
        p_min: -wspec.extent,
        p_max: wspec.extent,
        n_x: wspec.points,
        n_p: wspec.points,
    };
    let grid = wigner(&rho, &grid_spec)?;
    let neg = negativity_metrics(&grid);

    let mut pn_csv = String::from("n,p\n");
    for (n, p) in pn.iter().enumerate() {
        pn_csv.push_str(&format!("{n},{p}\n"));
    }
    write_out(&args.out, "photon_distribution.csv", &pn_csv)?;
    write_out(&args.out, "wigner.csv", &grid.to_csv())?;
    write_out(&args.out, "mode_density.csv", &rho.export_csv())?;
    write_out(
        &args.out,
        "filtered_state.csv",
        &outcome.state.export_csv()?,
    )?;

    let summary = FilterSummary {
        recipe: cfg.recipe.clone(),
        measurement_time: t_meas,
        measured_label: filter.measure.name().to_string(),
        probability: outcome.probability,
        p2: pn.get(2).copied().unwrap_or(0.0),
        rho22: rho.entries()[(2, 2)].re,
        wigner_min: neg.min_value,
        negative_volume: neg.negative_volume,
        w_origin: wigner_point(&rho, 0.0, 0.0),
        warnings: run_warnings(&cfg, Some(&psi0)),
    };
    write_json(&args.out, "filter_summary.json", &summary)
}

#[derive(Serialize)]
struct WignerSummary {
    recipe: Option<String>,
    mode: String,
    wigner_min: f64,
    negative_volume: f64,
    w_origin: f64,
    integral: f64,
}

fn cmd_wigner(args: &RunArgs) -> CmdResult<()> {
    let cfg = load_config(args)?;
    let space = cfg.space()?;
    let wspec = cfg
        .wigner
        .ok_or_else(|| CmdError::Config("wigner needs the wigner.* section".into()))?;
    let psi0 = cfg.build_initial_state(&space)?;
    let rho = reduce_to_mode(&psi0, wspec.mode)?;
    let grid_spec = WignerGridSpec {
        x_min: -wspec.extent,
        x_max: wspec.extent,
        p_min: -wspec.extent,
        p_max: wspec.extent,
        n_x: wspec.points,
        n_p: wspec.points,
    };
    let grid = wigner(&rho, &grid_spec)?;
    let neg = negativity_metrics(&grid);
    write_out(&args.out, "wigner.csv", &grid.to_csv())?;
    write_out(&args.out, "mode_density.csv", &rho.export_csv())?;
    let summary = WignerSummary {
        recipe: cfg.recipe.clone(),
        mode: wspec.mode.name().to_string(),
        wigner_min: neg.min_value,
        negative_volume: neg.negative_volume,
        w_origin: wigner_point(&rho, 0.0, 0.0),
        integral: grid.integral(),
    };
    write_json(&args.out, "wigner_summary.json", &summary)
}

#[derive(Serialize)]
struct DecaySummary {
    recipe: Option<String>,
    gamma_e: f64,
    error_estimate: f64,
    preparation_time: f64,
    n_bar: f64,
    survival_predicted_at_end: f64,
    survival_simulated_at_end: f64,
    max_relative_deviation: f64,
    warnings: Vec<String>,
}

fn cmd_decay(args: &RunArgs) -> CmdResult<()> {
    let cfg = load_config(args)?;
    let space = cfg.space()?;
    let decay = cfg
        .decay
        .ok_or_else(|| CmdError::Config("decay needs the decay.* section".into()))?;
    let psi0 = cfg.build_initial_state(&space)?;
    let h = build_h_nonhermitian(&cfg.params, &space)?;
    let grid = TimeGrid::from_duration(decay.t_end, decay.samples)?;
    let traj = dynamics::evolve(&h, &psi0, &grid)?;

    let t_prep = nominal_filter_time(&cfg)?;
    let est = decoherence_estimates(&cfg.params, t_prep);
    let kappa = cfg.params.kappa;
    let max_rel = traj
        .series
        .times
        .iter()
        .zip(&traj.series.norm)
        .map(|(&t, &n)| {
            let pred = (-decay.n_bar * kappa * t).exp();
            ((n - pred) / pred).abs()
        })
        .fold(0.0, f64::max);
    let summary = DecaySummary {
        recipe: cfg.recipe.clone(),
        gamma_e: est.gamma_e,
        error_estimate: est.error_e,
        preparation_time: t_prep,
        n_bar: decay.n_bar,
        survival_predicted_at_end: (-decay.n_bar * kappa * decay.t_end).exp(),
        survival_simulated_at_end: *traj.series.norm.last().unwrap(),
        max_relative_deviation: max_rel,
        warnings: run_warnings(&cfg, Some(&psi0)),
    };
    write_out(&args.out, "decay.csv", &traj.series.to_csv())?;
    write_json(&args.out, "decay_summary.json", &summary)
}

#[derive(Serialize)]
struct ValidateReport {
    checks: Vec<ValidateEntry>,
    passed: bool,
}

#[derive(Serialize)]
struct ValidateEntry {
    name: String,
    residual: f64,
    tolerance: f64,
    pass: bool,
}

fn cmd_validate(args: &ValidateArgs) -> CmdResult<()> {
    let results = validate::run_all(None);
    let mut all_pass = true;
    let mut entries = Vec::new();
    for check in &results {
        let pass = check.pass();
        all_pass &= pass;
        println!(
            "{} {:<28} residual = {:.3e} (tolerance {:.1e})",
            if pass { "PASS" } else { "FAIL" },
            check.name,
            check.residual,
            check.tolerance
        );
        entries.push(ValidateEntry {
            name: check.name.to_string(),
            residual: check.residual,
            tolerance: check.tolerance,
            pass,
        });
    }
    let report = ValidateReport {
        checks: entries,
        passed: all_pass,
    };
    if let Some(dir) = &args.out {
        let text = serde_json::to_string_pretty(&report).expect("serializable report");
        write_out(dir, "validate_report.json", &text)?;
    }
    if all_pass {
        Ok(())
    } else {
        Err(CmdError::Validation)
    }
}
