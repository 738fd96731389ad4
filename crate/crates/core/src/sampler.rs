//! Seeded detection-count simulation and channel-efficiency calibration.
//!
//! Random numbers come from ChaCha8 seeded through `seed_from_u64`. Task `i`
//! of a run with master seed `s` uses the substream seed `s ^ i`, so results
//! do not depend on evaluation order or platform.
//!
//! Counts are coincidence post-selected: shots in which some detector did not
//! fire are discarded, which assumes fair sampling.

use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::born::ProbabilityTable;
use crate::correlators::OutcomeData;
use crate::math::sqrt;
use crate::{Error, Result};

pub type SimRng = ChaCha8Rng;

/// Fair-sampling assumption behind discarding no-detection events.
pub const FAIR_SAMPLING: bool = true;

/// Generator for task `index` under `master` seed.
pub fn substream(master: u64, index: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(master ^ index)
}

/// Detection-pattern counts for one pair of settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointCounts {
    pub label: String,
    rows: usize,
    cols: usize,
    counts: Vec<u64>,
    pub shots_requested: u64,
    pub seed: u64,
    /// Per-cell rescaling once efficiency-corrected.
    correction: Option<Vec<f64>>,
}

impl JointCounts {
    pub fn from_counts(
        label: impl Into<String>,
        rows: usize,
        cols: usize,
        counts: Vec<u64>,
        seed: u64,
    ) -> Result<Self> {
        if counts.len() != rows * cols || rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch {
                expected: (rows, cols),
                found: (counts.len(), 1),
            });
        }
        let shots_requested = counts.iter().sum();
        Ok(Self {
            label: label.into(),
            rows,
            cols,
            counts,
            shots_requested,
            seed,
            correction: None,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, k: usize, j: usize) -> u64 {
        self.counts[k * self.cols + j]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn detected(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn is_corrected(&self) -> bool {
        self.correction.is_some()
    }

    /// Real-valued cells after efficiency correction (raw counts otherwise).
    pub fn corrected_cells(&self) -> Vec<f64> {
        match &self.correction {
            Some(scale) => self
                .counts
                .iter()
                .zip(scale)
                .map(|(&c, s)| c as f64 * s)
                .collect(),
            None => self.counts.iter().map(|&c| c as f64).collect(),
        }
    }

    /// Cellwise sum of two runs of the same setting.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                found: other.dims(),
            });
        }
        if self.is_corrected() || other.is_corrected() {
            return Err(Error::AlreadyCorrected);
        }
        let mut out = self.clone();
        for (a, b) in out.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        out.shots_requested += other.shots_requested;
        Ok(out)
    }
}

impl OutcomeData for JointCounts {
    fn dims(&self) -> (usize, usize) {
        JointCounts::dims(self)
    }
    fn cell_weights(&self) -> Vec<f64> {
        self.corrected_cells()
    }
    fn shots(&self) -> Option<u64> {
        Some(self.detected())
    }
}

/// Multinomial draw of `shots` events over the table cells, using `rng`.
///
/// Inverse CDF over the cells in row-major order; the missing mass of a
/// sub-normalised table is a final "not detected" bin that is dropped.
pub fn draw_counts(
    table: &ProbabilityTable,
    shots: u64,
    rng: &mut SimRng,
    label: impl Into<String>,
    seed: u64,
) -> JointCounts {
    let mut cdf = Vec::with_capacity(table.as_slice().len());
    let mut acc = 0.0;
    for p in table.as_slice() {
        acc += p;
        cdf.push(acc);
    }
    let (rows, cols) = table.dims();
    let mut counts = alloc::vec![0u64; rows * cols];
    for _ in 0..shots {
        let u: f64 = rng.random();
        let idx = cdf.partition_point(|&c| c <= u);
        if let Some(c) = counts.get_mut(idx) {
            *c += 1;
        }
    }
    JointCounts {
        label: label.into(),
        rows,
        cols,
        counts,
        shots_requested: shots,
        seed,
        correction: None,
    }
}

/// Seeded multinomial sample of `shots` events from `table`.
pub fn sample_counts(table: &ProbabilityTable, shots: u64, seed: u64) -> JointCounts {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    draw_counts(table, shots, &mut rng, "", seed)
}

/// Detection efficiency of every outcome channel of both parties.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelEfficiencies {
    pub alice: Vec<f64>,
    pub bob: Vec<f64>,
}

impl ChannelEfficiencies {
    pub fn new(alice: Vec<f64>, bob: Vec<f64>) -> Result<Self> {
        let e = Self { alice, bob };
        e.validate()?;
        Ok(e)
    }

    pub fn perfect(alice_channels: usize, bob_channels: usize) -> Self {
        Self {
            alice: alloc::vec![1.0; alice_channels],
            bob: alloc::vec![1.0; bob_channels],
        }
    }

    /// Efficiencies of the listed physical channels, in that order.
    pub fn restrict(&self, alice_channels: &[usize], bob_channels: &[usize]) -> Result<Self> {
        Ok(Self {
            alice: pick(&self.alice, alice_channels, 'A')?,
            bob: pick(&self.bob, bob_channels, 'B')?,
        })
    }

    pub fn validate(&self) -> Result<()> {
        match self
            .alice
            .iter()
            .chain(&self.bob)
            .find(|&&e| !(e > 0.0 && e <= 1.0))
        {
            Some(&bad) => Err(Error::InvalidEfficiency(bad)),
            None => Ok(()),
        }
    }
}

fn pick<T: Copy>(values: &[T], channels: &[usize], party: char) -> Result<Vec<T>> {
    channels
        .iter()
        .map(|&c| {
            values
                .get(c)
                .copied()
                .ok_or(Error::MissingRatio { party, channel: c })
        })
        .collect()
}

/// Scales cell `(k, j)` by `eta_k^A eta_j^B`; the lost mass is not recorded.
pub fn apply_efficiencies(
    table: &ProbabilityTable,
    eff: &ChannelEfficiencies,
) -> Result<ProbabilityTable> {
    eff.validate()?;
    let (rows, cols) = table.dims();
    if eff.alice.len() != rows || eff.bob.len() != cols {
        return Err(Error::DimensionMismatch {
            expected: (rows, cols),
            found: (eff.alice.len(), eff.bob.len()),
        });
    }
    let mut p = Vec::with_capacity(rows * cols);
    for k in 0..rows {
        for j in 0..cols {
            p.push(table.get(k, j) * eff.alice[k] * eff.bob[j]);
        }
    }
    ProbabilityTable::subnormalized(rows, cols, p)
}

/// An efficiency ratio with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    pub value: f64,
    pub stderr: f64,
}

/// Raw counts of one swap calibration of a channel pair `(n, m)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwapCounts {
    /// Normal routing: the first eigenvector exits in channel `n`.
    pub normal_n: u64,
    pub normal_m: u64,
    /// Swapped routing (waveplate rotated): the eigenvectors exchange channels.
    pub swapped_n: u64,
    pub swapped_m: u64,
}

impl SwapCounts {
    /// `eta_n / eta_m` from the geometric mean of both eigenvector comparisons.
    ///
    /// In the normal run channel `n` sees eigenvector 1 and channel `m`
    /// eigenvector 2; after the swap it is the other way round. The product
    /// `(C_n C_n') / (C_m C_m')` is `(eta_n / eta_m)^2` whatever the source
    /// balance or run lengths.
    pub fn ratio(&self) -> Result<RatioEstimate> {
        let c = [self.normal_n, self.swapped_n, self.normal_m, self.swapped_m];
        if let Some(pos) = c.iter().position(|&x| x == 0) {
            return Err(Error::ZeroChannelCounts(if pos < 2 { 0 } else { 1 }));
        }
        let [nn, sn, nm, sm] = c.map(|x| x as f64);
        let value = sqrt((nn * sn) / (nm * sm));
        let stderr = value * 0.5 * sqrt(1.0 / nn + 1.0 / sn + 1.0 / nm + 1.0 / sm);
        Ok(RatioEstimate { value, stderr })
    }
}

/// Simulates the swap procedure for channels with efficiencies `eta_n`, `eta_m`
/// fed by a balanced two-eigenvector source, `shots` photons per routing.
pub fn simulate_swap(eta_n: f64, eta_m: f64, shots: u64, rng: &mut SimRng) -> Result<SwapCounts> {
    for e in [eta_n, eta_m] {
        if !(e > 0.0 && e <= 1.0) {
            return Err(Error::InvalidEfficiency(e));
        }
    }
    let mut run = |first_to_n: bool| {
        let (mut cn, mut cm) = (0u64, 0u64);
        for _ in 0..shots {
            let first: bool = rng.random_bool(0.5);
            let to_n = first == first_to_n;
            let eta = if to_n { eta_n } else { eta_m };
            if rng.random::<f64>() < eta {
                if to_n {
                    cn += 1;
                } else {
                    cm += 1;
                }
            }
        }
        (cn, cm)
    };
    let (normal_n, normal_m) = run(true);
    let (swapped_n, swapped_m) = run(false);
    Ok(SwapCounts {
        normal_n,
        normal_m,
        swapped_n,
        swapped_m,
    })
}

/// Estimated `eta_ref / eta_m` for every channel `m` of both parties.
///
/// The reference is channel 0 of each party, whose ratio is exactly 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyRatios {
    pub alice: Vec<RatioEstimate>,
    pub bob: Vec<RatioEstimate>,
}

impl EfficiencyRatios {
    pub fn unity(alice_channels: usize, bob_channels: usize) -> Self {
        let one = RatioEstimate {
            value: 1.0,
            stderr: 0.0,
        };
        Self {
            alice: alloc::vec![one; alice_channels],
            bob: alloc::vec![one; bob_channels],
        }
    }

    /// Ratios of the listed physical channels, in that order.
    pub fn restrict(&self, alice_channels: &[usize], bob_channels: &[usize]) -> Result<Self> {
        Ok(Self {
            alice: pick(&self.alice, alice_channels, 'A')?,
            bob: pick(&self.bob, bob_channels, 'B')?,
        })
    }

    /// `eta_n / eta_m` within one party's channels.
    pub fn pair_ratio(ratios: &[RatioEstimate], n: usize, m: usize) -> f64 {
        ratios[m].value / ratios[n].value
    }
}

/// Swap calibration of every channel against channel 0, per party.
///
/// Channel pair `(0, m)` of Alice uses substream `m`, Bob's uses `1000 + m`.
pub fn estimate_efficiency_ratios(
    true_eff: &ChannelEfficiencies,
    shots: u64,
    seed: u64,
) -> Result<EfficiencyRatios> {
    true_eff.validate()?;
    let party = |eff: &[f64], offset: u64| -> Result<Vec<RatioEstimate>> {
        let mut out = alloc::vec![RatioEstimate {
            value: 1.0,
            stderr: 0.0
        }];
        for m in 1..eff.len() {
            let mut rng = substream(seed, offset + m as u64);
            let swap = simulate_swap(eff[0], eff[m], shots, &mut rng)?;
            out.push(swap.ratio().map_err(|e| match e {
                Error::ZeroChannelCounts(0) => Error::ZeroChannelCounts(0),
                Error::ZeroChannelCounts(_) => Error::ZeroChannelCounts(m),
                other => other,
            })?);
        }
        Ok(out)
    };
    Ok(EfficiencyRatios {
        alice: party(&true_eff.alice, 0)?,
        bob: party(&true_eff.bob, 1000)?,
    })
}

/// Rescales every cell so all channels share the reference channel's efficiency.
///
/// Cell `(k, j)` is multiplied by `(eta_0^A / eta_k^A)(eta_0^B / eta_j^B)`.
pub fn correct_counts(counts: &JointCounts, ratios: &EfficiencyRatios) -> Result<JointCounts> {
    if counts.is_corrected() {
        return Err(Error::AlreadyCorrected);
    }
    let (rows, cols) = counts.dims();
    if ratios.alice.len() < rows {
        return Err(Error::MissingRatio {
            party: 'A',
            channel: ratios.alice.len(),
        });
    }
    if ratios.bob.len() < cols {
        return Err(Error::MissingRatio {
            party: 'B',
            channel: ratios.bob.len(),
        });
    }
    let mut scale = Vec::with_capacity(rows * cols);
    for k in 0..rows {
        for j in 0..cols {
            scale.push(ratios.alice[k].value * ratios.bob[j].value);
        }
    }
    let mut out = counts.clone();
    out.correction = Some(scale);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::born::joint_probabilities;
    use crate::correlators::correlation_dot;
    use crate::designs::{orthogonal_pair, trine_design};
    use crate::states::singlet;

    fn trine_table() -> ProbabilityTable {
        let t = trine_design(0.0);
        joint_probabilities(&singlet(), &t, &t).unwrap()
    }

    #[test]
    fn zero_shots() {
        let c = sample_counts(&trine_table(), 0, 1);
        assert!(c.counts().iter().all(|&x| x == 0));
        assert_eq!(c.shots_requested, 0);
        let t = trine_design(0.0);
        assert_eq!(correlation_dot(&c, &t, &t), Err(Error::ZeroShots));
    }

    #[test]
    fn certain_cell_takes_every_shot() {
        let table = ProbabilityTable::new(2, 2, alloc::vec![0.0, 0.0, 1.0, 0.0]).unwrap();
        let c = sample_counts(&table, 1000, 5);
        assert_eq!(c.get(1, 0), 1000);
        assert_eq!(c.detected(), 1000);
    }

    #[test]
    fn million_shot_frequencies_within_three_sigma() {
        let n = 1_000_000u64;
        let c = sample_counts(&trine_table(), n, 42);
        assert_eq!(c.detected(), n);
        let p = 1.0 / 6.0;
        let sigma = sqrt(p * (1.0 - p) / n as f64);
        for k in 0..3 {
            for j in 0..3 {
                let f = c.get(k, j) as f64 / n as f64;
                if k == j {
                    assert_eq!(c.get(k, j), 0);
                } else {
                    assert!((f - p).abs() < 3.0 * sigma, "cell ({k},{j}) freq {f}");
                }
            }
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let a = sample_counts(&trine_table(), 10_000, 99);
        let b = sample_counts(&trine_table(), 10_000, 99);
        assert_eq!(a, b);
        let c = sample_counts(&trine_table(), 10_000, 100);
        assert_ne!(a.counts(), c.counts());
    }

    #[test]
    fn efficiencies_identity_and_uniform_loss() {
        let t = trine_design(0.0);
        let table = trine_table();
        let same = apply_efficiencies(&table, &ChannelEfficiencies::perfect(3, 3)).unwrap();
        assert_eq!(same, table);
        let half = ChannelEfficiencies::new(alloc::vec![0.5; 3], alloc::vec![0.5; 3]).unwrap();
        let lossy = apply_efficiencies(&table, &half).unwrap();
        for (a, b) in lossy.as_slice().iter().zip(table.as_slice()) {
            assert!((a - 0.25 * b).abs() < 1e-15);
        }
        let v0 = correlation_dot(&table, &t, &t).unwrap().value;
        let v1 = correlation_dot(&lossy, &t, &t).unwrap().value;
        assert!((v0 - v1).abs() < 1e-15);
        // Sampling a lossy table loses about three quarters of the shots.
        let c = sample_counts(&lossy, 100_000, 1);
        assert!(c.detected() < 30_000 && c.detected() > 20_000);
    }

    #[test]
    fn efficiency_validation() {
        assert!(ChannelEfficiencies::new(alloc::vec![1.2], alloc::vec![1.0]).is_err());
        assert!(ChannelEfficiencies::new(alloc::vec![0.0], alloc::vec![1.0]).is_err());
        let eff = ChannelEfficiencies::perfect(2, 3);
        assert!(matches!(
            apply_efficiencies(&trine_table(), &eff),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn asymmetric_loss_biases_and_correction_recovers() {
        let [a, _] = orthogonal_pair(0.0);
        let b = trine_design(0.0);
        let exact_table = joint_probabilities(&singlet(), &a, &b).unwrap();
        let exact = correlation_dot(&exact_table, &a, &b).unwrap().value;
        let eff = ChannelEfficiencies::new(
            alloc::vec![0.8, 0.8 / 1.1],
            alloc::vec![0.8, 0.8 / 1.1, 0.8 / 1.1],
        )
        .unwrap();
        let lossy = apply_efficiencies(&exact_table, &eff).unwrap();
        let biased = correlation_dot(&lossy, &a, &b).unwrap().value;
        assert!((biased - exact).abs() > 0.01);
        let n = 1_000_000;
        let counts = draw_counts(&lossy, n, &mut substream(1, 0), "A,B", 1);
        let ratios = estimate_efficiency_ratios(&eff, n, 2).unwrap();
        let fixed = correct_counts(&counts, &ratios).unwrap();
        let est = correlation_dot(&fixed, &a, &b).unwrap();
        assert!(
            (est.value - exact).abs() < 3.0 * est.stderr,
            "{est:?} vs {exact}"
        );
        let raw = correlation_dot(&counts, &a, &b).unwrap();
        assert!((raw.value - exact).abs() > 3.0 * raw.stderr);
    }

    #[test]
    fn ratio_estimates() {
        let n = 1_000_000;
        let equal = simulate_swap(0.7, 0.7, n, &mut substream(3, 0))
            .unwrap()
            .ratio()
            .unwrap();
        assert!((equal.value - 1.0).abs() < 3.0 * equal.stderr);

        // Oracle for the error: binomial propagation through the geometric mean.
        let (en, em) = (0.77, 0.7);
        let r = simulate_swap(en, em, n, &mut substream(3, 1))
            .unwrap()
            .ratio()
            .unwrap();
        let half = n as f64 / 2.0;
        let sigma =
            1.1 * 0.5 * sqrt(2.0 * (1.0 - en) / (half * en) + 2.0 * (1.0 - em) / (half * em));
        assert!((r.value - 1.1).abs() < 3.0 * sigma, "{r:?}");
        assert!(r.stderr >= sigma);

        let back = simulate_swap(em, en, n, &mut substream(3, 2))
            .unwrap()
            .ratio()
            .unwrap();
        let product = r.value * back.value;
        let rel = sqrt((r.stderr / r.value).powi(2) + (back.stderr / back.value).powi(2));
        assert!((product - 1.0).abs() < 3.0 * rel);
    }

    #[test]
    fn ratio_source_balance_cancels() {
        let c = SwapCounts {
            normal_n: 300 * 11,
            normal_m: 700 * 10,
            swapped_n: 700 * 11,
            swapped_m: 300 * 10,
        };
        assert!((c.ratio().unwrap().value - 1.1).abs() < 1e-12);
        let zero = SwapCounts { normal_m: 0, ..c };
        assert!(matches!(zero.ratio(), Err(Error::ZeroChannelCounts(_))));
    }

    #[test]
    fn correction_rules() {
        let counts = sample_counts(&trine_table(), 1000, 3);
        let fixed = correct_counts(&counts, &EfficiencyRatios::unity(3, 3)).unwrap();
        assert_eq!(fixed.corrected_cells(), counts.corrected_cells());
        assert_eq!(
            correct_counts(&fixed, &EfficiencyRatios::unity(3, 3)),
            Err(Error::AlreadyCorrected)
        );
        assert!(matches!(
            correct_counts(&counts, &EfficiencyRatios::unity(3, 2)),
            Err(Error::MissingRatio { party: 'B', .. })
        ));
    }

    #[test]
    fn merge_adds_cells() {
        let a = sample_counts(&trine_table(), 100, 1);
        let b = sample_counts(&trine_table(), 50, 2);
        let m = a.merge(&b).unwrap();
        assert_eq!(m.detected(), 150);
        assert_eq!(m.get(0, 1), a.get(0, 1) + b.get(0, 1));
    }
}
