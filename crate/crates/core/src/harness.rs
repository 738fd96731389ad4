//! Parameter sweeps and end-to-end studies over the three tests.
//!
//! Every test runs in a fixed geometry parameterised by a rotation `theta`
//! of Bob's settings:
//!
//! * entanglement: Alice `trine(0)`, Bob `trine(theta)`;
//! * steering: Alice projective at `0` and `pi/2`, Bob `trine(theta)`;
//! * CHSH: Alice projective at `0` and `pi/2`, Bob at `pi/4 + theta` and
//!   `3 pi/4 + theta`.
//!
//! Each party owns three physical detector channels. A trine uses all three;
//! a two-outcome measurement uses channels 1 and 2.
//!
//! In sampled mode the setting of every shot is drawn uniformly, so the shot
//! budget is split multinomially over the settings.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::born::{joint_probabilities, ProbabilityTable};
use crate::correlators::{
    chsh, correlation_dot, entanglement_witness, steering_functional, CorrelationEstimate,
    InequalityVerdict, Setting, TestKind,
};
use crate::designs::{orthogonal_pair, projective_design, trine_design, WeightedVectorSet};
use crate::math::{acos, sqrt};
use crate::qcore::BlochVector;
use crate::sampler::{
    apply_efficiencies, correct_counts, draw_counts, estimate_efficiency_ratios, substream,
    ChannelEfficiencies, EfficiencyRatios, JointCounts,
};
use crate::states::{
    apply_noise, fidelity, psi_minus, singlet, werner, LocalRotation, NoiseSpec, Party,
    TwoQubitState,
};
use crate::{Error, Result};

/// Physical channels used by a two-outcome measurement.
pub const BINARY_CHANNELS: [usize; 2] = [1, 2];
/// Physical channels used by a trine.
pub const TRINE_CHANNELS: [usize; 3] = [0, 1, 2];
/// Substream index of the calibration run.
pub const CALIBRATION_STREAM: u64 = 0xCA1B_0000_0000_0000;
/// Substream index of the randomly drawn channel efficiencies.
pub const EFFICIENCY_STREAM: u64 = 0xEFF0_0000_0000_0000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Exact,
    Sampled,
}

impl core::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Mode::Exact),
            "sampled" => Ok(Mode::Sampled),
            other => Err(Error::InvalidConfig(alloc::format!(
                "unknown mode `{other}`"
            ))),
        }
    }
}

/// One pair of local settings with the physical channels they occupy.
#[derive(Clone, Debug)]
pub struct SettingPair {
    /// `A<i>B<j>`: indices of Alice's and Bob's settings.
    pub label: String,
    pub alice: WeightedVectorSet,
    pub bob: WeightedVectorSet,
    pub alice_channels: Vec<usize>,
    pub bob_channels: Vec<usize>,
}

impl SettingPair {
    fn new(label: &str, alice: WeightedVectorSet, bob: WeightedVectorSet) -> Self {
        let channels = |s: &WeightedVectorSet| match s.len() {
            2 => BINARY_CHANNELS.to_vec(),
            _ => TRINE_CHANNELS.to_vec(),
        };
        Self {
            label: String::from(label),
            alice_channels: channels(&alice),
            bob_channels: channels(&bob),
            alice,
            bob,
        }
    }
}

/// Settings of `kind` at Bob rotation `theta`, in the order the estimator expects.
pub fn geometry(kind: TestKind, theta: f64) -> Vec<SettingPair> {
    match kind {
        TestKind::Entanglement => {
            alloc::vec![SettingPair::new(
                "A0B0",
                trine_design(0.0),
                trine_design(theta)
            )]
        }
        TestKind::Steering => {
            let [a, a2] = orthogonal_pair(0.0);
            alloc::vec![
                SettingPair::new("A0B0", a, trine_design(theta)),
                SettingPair::new("A1B0", a2, trine_design(theta)),
            ]
        }
        TestKind::Chsh => {
            let (a, a2) = (projective_design(0.0), projective_design(PI / 2.0));
            let (b, b2) = (
                projective_design(PI / 4.0 + theta),
                projective_design(3.0 * PI / 4.0 + theta),
            );
            alloc::vec![
                SettingPair::new("A0B0", a.clone(), b.clone()),
                SettingPair::new("A1B0", a2.clone(), b),
                SettingPair::new("A0B1", a, b2.clone()),
                SettingPair::new("A1B1", a2, b2),
            ]
        }
    }
}

fn verdict_from<D: crate::correlators::OutcomeData>(
    kind: TestKind,
    settings: &[SettingPair],
    data: &[D],
) -> Result<InequalityVerdict> {
    let s = |i: usize| Setting::new(&data[i], &settings[i].alice, &settings[i].bob);
    match kind {
        TestKind::Entanglement => {
            entanglement_witness(&data[0], &settings[0].alice, &settings[0].bob)
        }
        TestKind::Steering => steering_functional(s(0), s(1)),
        TestKind::Chsh => chsh([s(0), s(1), s(2), s(3)]),
    }
}

/// How outcome statistics are produced from a state.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Pipeline {
    pub mode: Mode,
    pub shots: u64,
    /// Detection efficiencies of the three channels of each party.
    pub efficiencies: Option<ChannelEfficiencies>,
    /// Calibrated ratios used to correct the counts, if any.
    pub ratios: Option<EfficiencyRatios>,
}

impl Pipeline {
    pub fn exact() -> Self {
        Self::default()
    }

    pub fn sampled(shots: u64) -> Self {
        Self {
            mode: Mode::Sampled,
            shots,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode == Mode::Sampled && self.shots == 0 {
            return Err(Error::ZeroShots);
        }
        if let Some(e) = &self.efficiencies {
            e.validate()?;
            if e.alice.len() < 3 || e.bob.len() < 3 {
                return Err(Error::InvalidConfig(
                    "efficiencies need three channels per party".into(),
                ));
            }
        }
        if self.mode == Mode::Exact && self.ratios.is_some() {
            return Err(Error::InvalidConfig(
                "efficiency correction needs sampled mode".into(),
            ));
        }
        Ok(())
    }
}

/// Statistics and verdict of one test run.
#[derive(Clone, Debug)]
pub struct TestRun {
    pub settings: Vec<SettingPair>,
    /// Per-setting outcome tables after efficiency loss.
    pub tables: Vec<ProbabilityTable>,
    /// Per-setting counts in sampled mode, corrected when ratios are given.
    pub counts: Vec<JointCounts>,
    pub verdict: InequalityVerdict,
}

/// Runs test `kind` at Bob rotation `theta` on `rho`, keeping the statistics.
pub fn run_test(
    kind: TestKind,
    rho: &TwoQubitState,
    theta: f64,
    pipeline: &Pipeline,
    rng: &mut crate::sampler::SimRng,
) -> Result<TestRun> {
    pipeline.validate()?;
    let settings = geometry(kind, theta);
    let mut tables = Vec::with_capacity(settings.len());
    for s in &settings {
        let t = joint_probabilities(rho, &s.alice, &s.bob)?;
        tables.push(match &pipeline.efficiencies {
            Some(e) => apply_efficiencies(&t, &e.restrict(&s.alice_channels, &s.bob_channels)?)?,
            None => t,
        });
    }
    let (counts, verdict) = match pipeline.mode {
        Mode::Exact => (Vec::new(), verdict_from(kind, &settings, &tables)?),
        Mode::Sampled => {
            let mut counts = draw_settings(&settings, &tables, pipeline.shots, rng);
            if let Some(r) = &pipeline.ratios {
                for (c, s) in counts.iter_mut().zip(&settings) {
                    *c = correct_counts(c, &r.restrict(&s.alice_channels, &s.bob_channels)?)?;
                }
            }
            let v = verdict_from(kind, &settings, &counts)?;
            (counts, v)
        }
    };
    Ok(TestRun {
        settings,
        tables,
        counts,
        verdict,
    })
}

/// Verdict of test `kind` at Bob rotation `theta` on `rho`.
pub fn evaluate(
    kind: TestKind,
    rho: &TwoQubitState,
    theta: f64,
    pipeline: &Pipeline,
    rng: &mut crate::sampler::SimRng,
) -> Result<InequalityVerdict> {
    run_test(kind, rho, theta, pipeline, rng).map(|r| r.verdict)
}

/// Exact-mode verdict of `kind` at `theta`.
pub fn evaluate_exact(
    kind: TestKind,
    rho: &TwoQubitState,
    theta: f64,
) -> Result<InequalityVerdict> {
    evaluate(kind, rho, theta, &Pipeline::exact(), &mut substream(0, 0))
}

/// Draws `shots` events, each with a uniformly chosen setting.
fn draw_settings(
    settings: &[SettingPair],
    tables: &[ProbabilityTable],
    shots: u64,
    rng: &mut crate::sampler::SimRng,
) -> Vec<JointCounts> {
    let n = tables.len();
    let mut per_setting = alloc::vec![0u64; n];
    for _ in 0..shots {
        per_setting[rng.random_range(0..n)] += 1;
    }
    tables
        .iter()
        .zip(per_setting)
        .zip(settings)
        .map(|((t, k), s)| draw_counts(t, k, rng, s.label.clone(), 0))
        .collect()
}

/// Configuration of a theta sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub kind: TestKind,
    pub theta_start: f64,
    pub theta_stop: f64,
    pub points: usize,
    pub mode: Mode,
    pub shots: u64,
    pub seed: u64,
    pub noise: NoiseSpec,
    pub efficiencies: Option<ChannelEfficiencies>,
    /// Calibrate and correct the efficiencies before estimating.
    pub calibrate: bool,
    pub calibration_shots: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            kind: TestKind::Entanglement,
            theta_start: 0.0,
            theta_stop: 2.0 * PI,
            points: 64,
            mode: Mode::Exact,
            shots: 100_000,
            seed: 0,
            noise: NoiseSpec::none(),
            efficiencies: None,
            calibrate: false,
            calibration_shots: 1_000_000,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.points < 2 {
            return Err(Error::InvalidConfig(alloc::format!(
                "sweep needs at least 2 points, got {}",
                self.points
            )));
        }
        if !self.theta_start.is_finite() || !self.theta_stop.is_finite() {
            return Err(Error::NonFinite);
        }
        if self.mode == Mode::Sampled && self.shots == 0 {
            return Err(Error::ZeroShots);
        }
        if self.calibrate {
            if self.mode != Mode::Sampled {
                return Err(Error::InvalidConfig(
                    "calibration needs sampled mode".into(),
                ));
            }
            if self.efficiencies.is_none() {
                return Err(Error::InvalidConfig(
                    "calibration needs channel efficiencies".into(),
                ));
            }
            if self.calibration_shots == 0 {
                return Err(Error::ZeroShots);
            }
        }
        self.noise.validate()
    }

    /// The evenly spaced theta grid, both ends included.
    pub fn thetas(&self) -> Vec<f64> {
        let step = (self.theta_stop - self.theta_start) / (self.points - 1) as f64;
        (0..self.points)
            .map(|i| self.theta_start + step * i as f64)
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub theta: f64,
    pub functional: f64,
    pub stderr: f64,
    pub bound: f64,
    pub violated: bool,
}

impl SweepRow {
    fn new(theta: f64, v: &InequalityVerdict) -> Self {
        Self {
            theta,
            functional: v.functional,
            stderr: v.stderr,
            bound: v.bound,
            violated: v.violated,
        }
    }
}

/// Evaluates the configured test on the noisy singlet over the theta grid.
///
/// Point `i` samples from substream `i` of the master seed.
pub fn theta_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let rho = apply_noise(&singlet(), &cfg.noise)?;
    let ratios = match (&cfg.efficiencies, cfg.calibrate) {
        (Some(e), true) => Some(estimate_efficiency_ratios(
            e,
            cfg.calibration_shots,
            cfg.seed ^ CALIBRATION_STREAM,
        )?),
        _ => None,
    };
    let pipeline = Pipeline {
        mode: cfg.mode,
        shots: cfg.shots,
        efficiencies: cfg.efficiencies.clone(),
        ratios,
    };
    cfg.thetas()
        .into_iter()
        .enumerate()
        .map(|(i, theta)| {
            let mut rng = substream(cfg.seed, i as u64);
            let v = evaluate(cfg.kind, &rho, theta, &pipeline, &mut rng)?;
            log::trace!("{} theta={theta} F={}", cfg.kind.name(), v.functional);
            Ok(SweepRow::new(theta, &v))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WernerRow {
    pub mu: f64,
    pub functional: f64,
    pub stderr: f64,
    pub bound: f64,
    pub violated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WernerScan {
    pub kind: TestKind,
    pub rows: Vec<WernerRow>,
    /// Interpolated visibility at which `functional` crosses `bound`.
    pub threshold: Option<f64>,
}

/// `start, start + step, ...` up to `stop` inclusive (within rounding).
pub fn mu_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop >= start) {
        return Err(Error::InvalidConfig(alloc::format!(
            "bad grid {start}..{stop} step {step}"
        )));
    }
    let n = ((stop - start) / step + 1e-9) as usize;
    Ok((0..=n).map(|i| start + step * i as f64).collect())
}

/// Evaluates `kind` at `theta = 0` on Werner states of the given visibilities.
pub fn werner_scan(
    kind: TestKind,
    mus: &[f64],
    pipeline: &Pipeline,
    seed: u64,
) -> Result<WernerScan> {
    let mut rows = Vec::with_capacity(mus.len());
    for (i, &mu) in mus.iter().enumerate() {
        let rho = werner(mu)?;
        let v = evaluate(kind, &rho, 0.0, pipeline, &mut substream(seed, i as u64))?;
        rows.push(WernerRow {
            mu,
            functional: v.functional,
            stderr: v.stderr,
            bound: v.bound,
            violated: v.violated,
        });
    }
    let threshold = rows.iter().position(|r| r.violated).map(|i| {
        if i == 0 {
            return rows[0].mu;
        }
        let (a, b) = (&rows[i - 1], &rows[i]);
        let (ga, gb) = (a.functional - a.bound, b.functional - b.bound);
        if gb == ga {
            return b.mu;
        }
        (a.mu + (b.mu - a.mu) * (-ga) / (gb - ga)).clamp(a.mu, b.mu)
    });
    Ok(WernerScan {
        kind,
        rows,
        threshold,
    })
}

/// Configuration of the noise budget study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseBudgetConfig {
    pub target_fidelity: f64,
    pub dephasing_axis: BlochVector,
    pub rotation_axis: BlochVector,
    pub rotation_party: Party,
    pub theta: f64,
}

impl Default for NoiseBudgetConfig {
    fn default() -> Self {
        Self {
            target_fidelity: 0.97,
            dephasing_axis: BlochVector::Z,
            rotation_axis: BlochVector::Y,
            rotation_party: Party::B,
            theta: 0.0,
        }
    }
}

/// Result of the noise budget study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseBudgetReport {
    pub target_fidelity: f64,
    pub noise: NoiseSpec,
    pub fidelity: f64,
    /// Fidelity with each channel applied alone: depolarizing, dephasing, rotation.
    pub component_fidelities: [f64; 3],
    pub verdicts: Vec<InequalityVerdict>,
    /// Pure depolarizing noise at the same fidelity.
    pub depolarizing_only: NoiseSpec,
    pub depolarizing_verdicts: Vec<InequalityVerdict>,
}

impl NoiseBudgetReport {
    pub fn verdict(&self, kind: TestKind) -> Option<&InequalityVerdict> {
        self.verdicts.iter().find(|v| v.kind == kind)
    }

    pub fn depolarizing_verdict(&self, kind: TestKind) -> Option<&InequalityVerdict> {
        self.depolarizing_verdicts.iter().find(|v| v.kind == kind)
    }
}

/// Budget in which each channel alone costs infidelity `x`.
fn equal_budget(x: f64, cfg: &NoiseBudgetConfig) -> NoiseSpec {
    NoiseSpec {
        depolarizing_p: 4.0 * x / 3.0,
        dephasing_p: 2.0 * x,
        dephasing_axis: cfg.dephasing_axis,
        local_rotation: LocalRotation {
            axis: cfg.rotation_axis,
            angle: 2.0 * acos(sqrt(1.0 - x)),
            party: cfg.rotation_party,
        },
    }
}

/// Splits the infidelity `1 - target` equally among depolarizing, dephasing and
/// a local rotation, tunes the split by bisection so the composed channel hits
/// the target fidelity with the singlet, and evaluates all three tests.
pub fn noise_budget_demo(cfg: &NoiseBudgetConfig) -> Result<NoiseBudgetReport> {
    let target = cfg.target_fidelity;
    if !(0.25 < target && target <= 1.0) {
        return Err(Error::InvalidConfig(alloc::format!(
            "target fidelity {target} outside (1/4, 1]"
        )));
    }
    let psi = psi_minus();
    let rho0 = singlet();
    let fid =
        |x: f64| -> Result<f64> { fidelity(&apply_noise(&rho0, &equal_budget(x, cfg))?, &psi) };
    let (mut lo, mut hi) = (0.0, (1.0 - target).min(0.5));
    if fid(hi)? > target {
        return Err(Error::Numerical(alloc::format!(
            "cannot reach fidelity {target}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if fid(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let x = 0.5 * (lo + hi);
    let noise = equal_budget(x, cfg);
    let rho = apply_noise(&rho0, &noise)?;
    let achieved = fidelity(&rho, &psi)?;
    if (achieved - target).abs() > 1e-9 {
        return Err(Error::Numerical(alloc::format!(
            "bisection stalled at fidelity {achieved}"
        )));
    }
    let alone = |spec: NoiseSpec| -> Result<f64> { fidelity(&apply_noise(&rho0, &spec)?, &psi) };
    let component_fidelities = [
        alone(NoiseSpec::depolarizing(noise.depolarizing_p))?,
        alone(NoiseSpec {
            dephasing_p: noise.dephasing_p,
            dephasing_axis: noise.dephasing_axis,
            ..NoiseSpec::none()
        })?,
        alone(NoiseSpec {
            local_rotation: noise.local_rotation,
            ..NoiseSpec::none()
        })?,
    ];
    let depolarizing_only = NoiseSpec::depolarizing(4.0 * (1.0 - achieved) / 3.0);
    let rho_dep = apply_noise(&rho0, &depolarizing_only)?;
    let all = |r: &TwoQubitState| -> Result<Vec<InequalityVerdict>> {
        TestKind::ALL
            .iter()
            .map(|&k| evaluate_exact(k, r, cfg.theta))
            .collect()
    };
    Ok(NoiseBudgetReport {
        target_fidelity: target,
        noise,
        fidelity: achieved,
        component_fidelities,
        verdicts: all(&rho)?,
        depolarizing_only,
        depolarizing_verdicts: all(&rho_dep)?,
    })
}

/// Source of the simulated channel efficiencies of the calibration demo.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RatioSpec {
    /// `eta_0 / eta_m` uniform in `[lo, hi]` for channels 1 and 2.
    Random { lo: f64, hi: f64 },
    /// Fixed `eta_0 / eta_m` for channels 1 and 2 of each party.
    Fixed { alice: [f64; 2], bob: [f64; 2] },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationDemoConfig {
    pub reference_efficiency: f64,
    pub ratios: RatioSpec,
    pub shots: u64,
    pub calibration_shots: u64,
    pub seed: u64,
}

impl Default for CalibrationDemoConfig {
    fn default() -> Self {
        Self {
            reference_efficiency: 0.8,
            ratios: RatioSpec::Random { lo: 0.9, hi: 1.1 },
            shots: 1_000_000,
            calibration_shots: 1_000_000,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub kind: TestKind,
    pub exact: f64,
    pub uncorrected: InequalityVerdict,
    pub corrected: InequalityVerdict,
}

impl CalibrationRow {
    /// `|estimate - exact| / stderr` of the uncorrected estimate.
    pub fn uncorrected_deviation(&self) -> f64 {
        (self.uncorrected.functional - self.exact).abs() / self.uncorrected.stderr
    }

    /// `|estimate - exact| / stderr` of the corrected estimate.
    pub fn corrected_deviation(&self) -> f64 {
        (self.corrected.functional - self.exact).abs() / self.corrected.stderr
    }
}

/// Calibration report: true and estimated channel efficiencies and the tests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub label: String,
    pub efficiencies: ChannelEfficiencies,
    pub true_ratios: ChannelEfficiencies,
    pub estimated: EfficiencyRatios,
    pub shots: u64,
    pub calibration_shots: u64,
    pub seed: u64,
    pub tests: Vec<CalibrationRow>,
    /// `<A.B>` of the first steering setting alone, all shots on that setting.
    pub steering_correlator: CorrelatorRow,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorRow {
    pub exact: f64,
    pub uncorrected: CorrelationEstimate,
    pub corrected: CorrelationEstimate,
}

impl CorrelatorRow {
    pub fn uncorrected_deviation(&self) -> f64 {
        (self.uncorrected.value - self.exact).abs() / self.uncorrected.stderr
    }

    pub fn corrected_deviation(&self) -> f64 {
        (self.corrected.value - self.exact).abs() / self.corrected.stderr
    }
}

/// Distorts the singlet statistics with unequal channel efficiencies, calibrates
/// the ratios by channel swapping and compares corrected with uncorrected
/// estimates of all three tests at `theta = 0`.
pub fn calibration_demo(cfg: &CalibrationDemoConfig) -> Result<CalibrationReport> {
    let eta0 = cfg.reference_efficiency;
    if !(eta0 > 0.0 && eta0 <= 1.0) {
        return Err(Error::InvalidEfficiency(eta0));
    }
    if cfg.shots == 0 || cfg.calibration_shots == 0 {
        return Err(Error::ZeroShots);
    }
    let (ra, rb) = match &cfg.ratios {
        RatioSpec::Fixed { alice, bob } => (*alice, *bob),
        RatioSpec::Random { lo, hi } => {
            if !(0.0 < *lo && lo <= hi) {
                return Err(Error::InvalidConfig(alloc::format!(
                    "bad ratio range [{lo}, {hi}]"
                )));
            }
            let mut rng = substream(cfg.seed, EFFICIENCY_STREAM);
            let mut draw = || lo + (hi - lo) * rng.random::<f64>();
            ([draw(), draw()], [draw(), draw()])
        }
    };
    let true_ratios = ChannelEfficiencies {
        alice: alloc::vec![1.0, ra[0], ra[1]],
        bob: alloc::vec![1.0, rb[0], rb[1]],
    };
    let efficiencies = ChannelEfficiencies::new(
        true_ratios.alice.iter().map(|r| eta0 / r).collect(),
        true_ratios.bob.iter().map(|r| eta0 / r).collect(),
    )?;
    let estimated = estimate_efficiency_ratios(
        &efficiencies,
        cfg.calibration_shots,
        cfg.seed ^ CALIBRATION_STREAM,
    )?;
    let rho = singlet();
    let mut tests = Vec::new();
    for (i, &kind) in TestKind::ALL.iter().enumerate() {
        let exact = evaluate_exact(kind, &rho, 0.0)?.functional;
        let distorted = Pipeline {
            mode: Mode::Sampled,
            shots: cfg.shots,
            efficiencies: Some(efficiencies.clone()),
            ratios: None,
        };
        let corrected = Pipeline {
            ratios: Some(estimated.clone()),
            ..distorted.clone()
        };
        let stream = i as u64;
        tests.push(CalibrationRow {
            kind,
            exact,
            uncorrected: evaluate(
                kind,
                &rho,
                0.0,
                &distorted,
                &mut substream(cfg.seed, stream),
            )?,
            corrected: evaluate(
                kind,
                &rho,
                0.0,
                &corrected,
                &mut substream(cfg.seed, stream),
            )?,
        });
    }
    let setting = geometry(TestKind::Steering, 0.0).swap_remove(0);
    let (ac, bc) = (&setting.alice_channels, &setting.bob_channels);
    let table = joint_probabilities(&rho, &setting.alice, &setting.bob)?;
    let lossy = apply_efficiencies(&table, &efficiencies.restrict(ac, bc)?)?;
    let counts = draw_counts(
        &lossy,
        cfg.shots,
        &mut substream(cfg.seed, 3),
        "steering A",
        cfg.seed ^ 3,
    );
    let steering_correlator = CorrelatorRow {
        exact: correlation_dot(&table, &setting.alice, &setting.bob)?.value,
        uncorrected: correlation_dot(&counts, &setting.alice, &setting.bob)?,
        corrected: correlation_dot(
            &correct_counts(&counts, &estimated.restrict(ac, bc)?)?,
            &setting.alice,
            &setting.bob,
        )?,
    };
    Ok(CalibrationReport {
        label: String::from("singlet"),
        efficiencies,
        true_ratios,
        estimated,
        shots: cfg.shots,
        calibration_shots: cfg.calibration_shots,
        seed: cfg.seed,
        tests,
        steering_correlator,
    })
}
