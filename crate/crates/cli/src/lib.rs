//! Command-line front end for `qnonlocal-core`.
//!
//! Every subcommand writes CSV (default) or JSON to `--out` or stdout.
//! Column order per subcommand:
//!
//! | subcommand       | columns |
//! |------------------|---------|
//! | `verify-design`  | `label,elements,weight_residual,vector_residual,one_design,spherical_two_design,circular_two_design` |
//! | `witness`, `steer`, `chsh` | `kind,functional,stderr,bound,violated,sigma_margin` |
//! | `sweep`          | `theta,functional,stderr,bound,violated` |
//! | `werner-scan`    | `mu,functional,stderr,bound,violated` |
//! | `adversary`      | `test,optimum,bound,quantum_value,gap,evaluations` |
//! | `calibrate-demo` | `estimate,exact,uncorrected,uncorrected_stderr,corrected,corrected_stderr` |
//! | `noise-demo`     | `noise,fidelity,kind,functional,bound,violated,relative_margin` |
//!
//! Exit codes: 0 on success, 1 on invalid input, 2 on numerical failure.

pub mod io;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand, ValueEnum};
use qnonlocal_core::adversaries;
use qnonlocal_core::designs::{
    is_circular_2design, is_spherical_2design, standard_design, validate_1design,
    WeightedVectorSet, DESIGN_TOL,
};
use qnonlocal_core::harness::{
    calibration_demo, mu_grid, noise_budget_demo, run_test, theta_sweep, werner_scan,
    CalibrationDemoConfig, NoiseBudgetConfig, Pipeline, RatioSpec, CALIBRATION_STREAM,
};
use qnonlocal_core::sampler::{estimate_efficiency_ratios, substream, ChannelEfficiencies};
use qnonlocal_core::states::{apply_noise, singlet, werner};
use qnonlocal_core::{InequalityVerdict, Mode, NoiseSpec, SweepConfig, TestKind};
use serde::{Deserialize, Serialize};

use crate::io::{Cell, Table};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0:#}")]
    Validation(anyhow::Error),
    #[error("{0:#}")]
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl From<qnonlocal_core::Error> for CliError {
    fn from(e: qnonlocal_core::Error) -> Self {
        if e.is_numerical() {
            CliError::Runtime(e.into())
        } else {
            CliError::Validation(e.into())
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast::<qnonlocal_core::Error>() {
            Ok(core) => core.into(),
            Err(e) => CliError::Validation(e),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Exact,
    Sampled,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Exact => Mode::Exact,
            ModeArg::Sampled => Mode::Sampled,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Entanglement,
    Steering,
    Chsh,
}

impl From<KindArg> for TestKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Entanglement => TestKind::Entanglement,
            KindArg::Steering => TestKind::Steering,
            KindArg::Chsh => TestKind::Chsh,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "qnonlocal",
    version,
    about = "Parsimonious two-qubit entanglement, steering and Bell tests"
)]
pub struct Cli {
    /// Master seed of sampled runs.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Shots per test (per grid point for sweeps).
    #[arg(long, global = true)]
    pub shots: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub mode: Option<ModeArg>,
    /// JSON configuration of the subcommand; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the 1-design and 2-design conditions of a weighted vector set.
    VerifyDesign(VerifyArgs),
    /// Entanglement witness with a trine on each side.
    Witness(TestArgs),
    /// Steering test: two projective settings for Alice, a trine for Bob.
    Steer(TestArgs),
    /// CHSH test in the relabelled form.
    Chsh(TestArgs),
    /// Sweep Bob's rotation angle for one test.
    Sweep(SweepArgs),
    /// Scan the Werner visibility and locate the violation threshold.
    WernerScan(WernerArgs),
    /// Optimise the classical adversary against one test.
    Adversary(AdversaryArgs),
    /// Distort, calibrate and correct unequal channel efficiencies.
    CalibrateDemo(CalibrateArgs),
    /// Calibrate a three-part noise budget to a target singlet fidelity.
    NoiseDemo(NoiseArgs),
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Design JSON file (or use `--config`).
    pub design: Option<PathBuf>,
    /// Built-in design: trine, tetrahedron, projective.
    #[arg(long, conflicts_with = "design")]
    pub standard: Option<String>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub theta: f64,
    #[arg(long, default_value_t = DESIGN_TOL)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// Bob's rotation angle in radians.
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    /// Werner visibility; the singlet when absent.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Density matrix JSON (16 `[re, im]` pairs), replacing the singlet.
    #[arg(long)]
    pub state_file: Option<PathBuf>,
    /// Noise spec JSON applied to the state.
    #[arg(long)]
    pub noise: Option<PathBuf>,
    /// Write the sampled counts CSV here.
    #[arg(long)]
    pub counts_out: Option<PathBuf>,
    /// Write the per-setting probability tables CSV here.
    #[arg(long)]
    pub table_out: Option<PathBuf>,
    /// Write the evaluated state JSON here.
    #[arg(long)]
    pub state_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub test: Option<KindArg>,
    #[arg(long, allow_negative_numbers = true)]
    pub start: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub stop: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub noise: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WernerArgs {
    #[arg(long, value_enum)]
    pub test: Option<KindArg>,
    #[arg(long)]
    pub start: Option<f64>,
    #[arg(long)]
    pub stop: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AdversaryArgs {
    #[arg(long, value_enum)]
    pub test: KindArg,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub theta: f64,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Use this `eta_0 / eta_m` on channels 1 and 2 of both parties.
    #[arg(long)]
    pub fixed_ratio: Option<f64>,
    #[arg(long)]
    pub ratio_lo: Option<f64>,
    #[arg(long)]
    pub ratio_hi: Option<f64>,
    #[arg(long)]
    pub calibration_shots: Option<u64>,
    /// Also write the JSON calibration report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    #[arg(long)]
    pub target: Option<f64>,
}

/// Configuration of `witness`, `steer` and `chsh`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TestConfig {
    pub theta: f64,
    pub mu: Option<f64>,
    pub noise: NoiseSpec,
    pub mode: Mode,
    pub shots: u64,
    pub seed: u64,
    pub efficiencies: Option<ChannelEfficiencies>,
    pub calibrate: bool,
    pub calibration_shots: u64,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self {
            theta: 0.0,
            mu: None,
            noise: NoiseSpec::none(),
            mode: Mode::Exact,
            shots: 100_000,
            seed: 0,
            efficiencies: None,
            calibrate: false,
            calibration_shots: 1_000_000,
        }
    }
}

/// Configuration of `werner-scan`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WernerConfig {
    pub kind: TestKind,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    pub mode: Mode,
    pub shots: u64,
    pub seed: u64,
}

impl Default for WernerConfig {
    fn default() -> Self {
        Self {
            kind: TestKind::Entanglement,
            start: 0.0,
            stop: 1.0,
            step: 1e-3,
            mode: Mode::Exact,
            shots: 100_000,
            seed: 0,
        }
    }
}

fn load<T: Default + serde::de::DeserializeOwned>(path: Option<&Path>) -> CliResult<T> {
    match path {
        Some(p) => Ok(io::read_json(p)?),
        None => Ok(T::default()),
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn runtime(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Runtime(e.into())
}

fn exact_only(cli: &Cli, what: &str) -> CliResult<()> {
    if cli.mode == Some(ModeArg::Sampled) {
        return Err(CliError::Validation(anyhow!(
            "{what} runs in exact mode only"
        )));
    }
    Ok(())
}

fn write_output<T: Serialize>(cli: &Cli, table: &Table, json: &T) -> CliResult<()> {
    let text = match cli.format {
        Format::Csv => table.to_csv().map_err(runtime)?,
        Format::Json => io::to_json(json).map_err(runtime)?,
    };
    io::emit(cli.out.as_deref(), &text).map_err(runtime)
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| runtime(anyhow!("writing {}: {e}", path.display())))
}

/// Parses the arguments, runs the command and maps the result to an exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::VerifyDesign(a) => verify_design(cli, a),
        Command::Witness(a) => single_test(cli, TestKind::Entanglement, a),
        Command::Steer(a) => single_test(cli, TestKind::Steering, a),
        Command::Chsh(a) => single_test(cli, TestKind::Chsh, a),
        Command::Sweep(a) => sweep(cli, a),
        Command::WernerScan(a) => werner_cmd(cli, a),
        Command::Adversary(a) => adversary(cli, a),
        Command::CalibrateDemo(a) => calibrate(cli, a),
        Command::NoiseDemo(a) => noise(cli, a),
    }
}

#[derive(Serialize)]
struct DesignReport {
    label: String,
    elements: usize,
    weight_residual: f64,
    vector_residual: f64,
    one_design: bool,
    spherical_two_design: bool,
    circular_two_design: bool,
}

fn verify_design(cli: &Cli, a: &VerifyArgs) -> CliResult<()> {
    exact_only(cli, "verify-design")?;
    let set: WeightedVectorSet = match (&a.standard, a.design.as_ref().or(cli.config.as_ref())) {
        (Some(name), _) => standard_design(name, a.theta)?,
        (None, Some(path)) => io::read_design(path)?,
        (None, None) => {
            return Err(CliError::Validation(anyhow!(
                "give a design file or --standard"
            )))
        }
    };
    let check = validate_1design(&set, a.tol)?;
    let circular = match set.plane_normal() {
        Some(n) => is_circular_2design(&set, &n, a.tol).unwrap_or(false),
        None => false,
    };
    let report = DesignReport {
        label: set.label().to_string(),
        elements: set.len(),
        weight_residual: check.weight_residual,
        vector_residual: check.vector_residual,
        one_design: check.is_valid,
        spherical_two_design: check.is_valid && is_spherical_2design(&set, a.tol)?,
        circular_two_design: check.is_valid && circular,
    };
    let mut t = Table::new([
        "label",
        "elements",
        "weight_residual",
        "vector_residual",
        "one_design",
        "spherical_two_design",
        "circular_two_design",
    ]);
    t.push(vec![
        report.label.as_str().into(),
        report.elements.into(),
        report.weight_residual.into(),
        report.vector_residual.into(),
        report.one_design.into(),
        report.spherical_two_design.into(),
        report.circular_two_design.into(),
    ]);
    write_output(cli, &t, &report)?;
    if !report.one_design {
        return Err(CliError::Validation(anyhow!(
            "`{}` is not a 1-design",
            report.label
        )));
    }
    Ok(())
}

fn verdict_table(verdicts: &[InequalityVerdict]) -> Table {
    let mut t = Table::new([
        "kind",
        "functional",
        "stderr",
        "bound",
        "violated",
        "sigma_margin",
    ]);
    for v in verdicts {
        t.push(vec![
            v.kind.name().into(),
            v.functional.into(),
            v.stderr.into(),
            v.bound.into(),
            v.violated.into(),
            v.sigma_margin.into(),
        ]);
    }
    t
}

fn single_test(cli: &Cli, kind: TestKind, a: &TestArgs) -> CliResult<()> {
    let mut cfg: TestConfig = load(cli.config.as_deref())?;
    set(&mut cfg.theta, a.theta);
    set(&mut cfg.seed, cli.seed);
    set(&mut cfg.shots, cli.shots);
    set(&mut cfg.mode, cli.mode.map(Into::into));
    if a.mu.is_some() {
        cfg.mu = a.mu;
    }
    if let Some(p) = &a.noise {
        cfg.noise = io::read_noise(p)?;
    }
    let base = match (&a.state_file, cfg.mu) {
        (Some(p), _) => io::read_state(p)?,
        (None, Some(mu)) => werner(mu)?,
        (None, None) => singlet(),
    };
    let rho = apply_noise(&base, &cfg.noise)?;
    let ratios = match (&cfg.efficiencies, cfg.calibrate) {
        (Some(e), true) => Some(estimate_efficiency_ratios(
            e,
            cfg.calibration_shots,
            cfg.seed ^ CALIBRATION_STREAM,
        )?),
        (None, true) => {
            return Err(CliError::Validation(anyhow!(
                "calibrate needs efficiencies"
            )))
        }
        _ => None,
    };
    let pipeline = Pipeline {
        mode: cfg.mode,
        shots: cfg.shots,
        efficiencies: cfg.efficiencies.clone(),
        ratios,
    };
    let result = run_test(
        kind,
        &rho,
        cfg.theta,
        &pipeline,
        &mut substream(cfg.seed, 0),
    )?;
    if let Some(p) = &a.state_out {
        write_file(p, &io::state_json(&rho).map_err(runtime)?)?;
    }
    if let Some(p) = &a.table_out {
        let mut text = String::new();
        for (s, t) in result.settings.iter().zip(&result.tables) {
            text.push_str(&format!(
                "# {}: {} x {}\n",
                s.label,
                s.alice.label(),
                s.bob.label()
            ));
            text.push_str(&io::probability_table(t).to_csv().map_err(runtime)?);
        }
        write_file(p, &text)?;
    }
    if let Some(p) = &a.counts_out {
        if cfg.mode != Mode::Sampled {
            return Err(CliError::Validation(anyhow!(
                "--counts-out needs --mode sampled"
            )));
        }
        write_file(
            p,
            &io::counts_table(&result.counts).to_csv().map_err(runtime)?,
        )?;
    }
    write_output(cli, &verdict_table(&[result.verdict]), &result.verdict)
}

fn sweep(cli: &Cli, a: &SweepArgs) -> CliResult<()> {
    let mut cfg: SweepConfig = load(cli.config.as_deref())?;
    set(&mut cfg.kind, a.test.map(Into::into));
    set(&mut cfg.theta_start, a.start);
    set(&mut cfg.theta_stop, a.stop);
    set(&mut cfg.points, a.points);
    set(&mut cfg.seed, cli.seed);
    set(&mut cfg.shots, cli.shots);
    set(&mut cfg.mode, cli.mode.map(Into::into));
    if let Some(p) = &a.noise {
        cfg.noise = io::read_noise(p)?;
    }
    let rows = theta_sweep(&cfg)?;
    let mut t = Table::new(["theta", "functional", "stderr", "bound", "violated"]);
    for r in &rows {
        t.push(vec![
            r.theta.into(),
            r.functional.into(),
            r.stderr.into(),
            r.bound.into(),
            r.violated.into(),
        ]);
    }
    write_output(cli, &t, &rows)
}

fn werner_cmd(cli: &Cli, a: &WernerArgs) -> CliResult<()> {
    let mut cfg: WernerConfig = load(cli.config.as_deref())?;
    set(&mut cfg.kind, a.test.map(Into::into));
    set(&mut cfg.start, a.start);
    set(&mut cfg.stop, a.stop);
    set(&mut cfg.step, a.step);
    set(&mut cfg.seed, cli.seed);
    set(&mut cfg.shots, cli.shots);
    set(&mut cfg.mode, cli.mode.map(Into::into));
    let pipeline = Pipeline {
        mode: cfg.mode,
        shots: cfg.shots,
        ..Pipeline::default()
    };
    let scan = werner_scan(
        cfg.kind,
        &mu_grid(cfg.start, cfg.stop, cfg.step)?,
        &pipeline,
        cfg.seed,
    )?;
    match scan.threshold {
        Some(mu) => log::info!("{} threshold at mu = {}", cfg.kind.name(), io::fmt_f64(mu)),
        None => log::info!("{} not violated on the grid", cfg.kind.name()),
    }
    let mut t = Table::new(["mu", "functional", "stderr", "bound", "violated"]);
    for r in &scan.rows {
        t.push(vec![
            r.mu.into(),
            r.functional.into(),
            r.stderr.into(),
            r.bound.into(),
            r.violated.into(),
        ]);
    }
    write_output(cli, &t, &scan)
}

fn adversary(cli: &Cli, a: &AdversaryArgs) -> CliResult<()> {
    exact_only(cli, "adversary")?;
    let r = adversaries::run(a.test.into(), a.theta)?;
    let mut t = Table::new([
        "test",
        "optimum",
        "bound",
        "quantum_value",
        "gap",
        "evaluations",
    ]);
    t.push(vec![
        r.test.name().into(),
        r.optimum.into(),
        r.bound.into(),
        r.quantum_value.into(),
        r.gap.into(),
        r.evaluations.into(),
    ]);
    write_output(cli, &t, &r)
}

fn calibrate(cli: &Cli, a: &CalibrateArgs) -> CliResult<()> {
    if cli.mode == Some(ModeArg::Exact) {
        return Err(CliError::Validation(anyhow!(
            "calibrate-demo runs in sampled mode only"
        )));
    }
    let mut cfg: CalibrationDemoConfig = load(cli.config.as_deref())?;
    set(&mut cfg.seed, cli.seed);
    set(&mut cfg.shots, cli.shots);
    set(&mut cfg.calibration_shots, a.calibration_shots);
    if let Some(r) = a.fixed_ratio {
        cfg.ratios = RatioSpec::Fixed {
            alice: [r, r],
            bob: [r, r],
        };
    } else if a.ratio_lo.is_some() || a.ratio_hi.is_some() {
        let (lo, hi) = match cfg.ratios {
            RatioSpec::Random { lo, hi } => (lo, hi),
            RatioSpec::Fixed { .. } => (0.9, 1.1),
        };
        cfg.ratios = RatioSpec::Random {
            lo: a.ratio_lo.unwrap_or(lo),
            hi: a.ratio_hi.unwrap_or(hi),
        };
    }
    let report = calibration_demo(&cfg)?;
    if let Some(p) = &a.report {
        write_file(p, &io::to_json(&report).map_err(runtime)?)?;
    }
    let mut t = Table::new([
        "estimate",
        "exact",
        "uncorrected",
        "uncorrected_stderr",
        "corrected",
        "corrected_stderr",
    ]);
    for row in &report.tests {
        t.push(vec![
            row.kind.name().into(),
            row.exact.into(),
            row.uncorrected.functional.into(),
            row.uncorrected.stderr.into(),
            row.corrected.functional.into(),
            row.corrected.stderr.into(),
        ]);
    }
    let c = &report.steering_correlator;
    t.push(vec![
        "steering_correlator".into(),
        c.exact.into(),
        c.uncorrected.value.into(),
        c.uncorrected.stderr.into(),
        c.corrected.value.into(),
        c.corrected.stderr.into(),
    ]);
    write_output(cli, &t, &report)
}

fn noise(cli: &Cli, a: &NoiseArgs) -> CliResult<()> {
    exact_only(cli, "noise-demo")?;
    let mut cfg: NoiseBudgetConfig = load(cli.config.as_deref())?;
    set(&mut cfg.target_fidelity, a.target);
    let report = noise_budget_demo(&cfg)?;
    let mut t = Table::new([
        "noise",
        "fidelity",
        "kind",
        "functional",
        "bound",
        "violated",
        "relative_margin",
    ]);
    for (name, verdicts) in [
        ("budget", &report.verdicts),
        ("depolarizing", &report.depolarizing_verdicts),
    ] {
        for v in verdicts {
            t.push(vec![
                Cell::from(name),
                report.fidelity.into(),
                v.kind.name().into(),
                v.functional.into(),
                v.bound.into(),
                v.violated.into(),
                v.relative_margin().into(),
            ]);
        }
    }
    write_output(cli, &t, &report)
}
