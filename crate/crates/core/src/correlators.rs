//! The vector correlation `<A.B>` and the three inequality tests.
//!
//! Outcome `k` of Alice's design is read as the unit vector `A_k`, likewise
//! for Bob, and `<A.B> = sum_kj P_kj A_k . B_j`. The classical bounds are
//!
//! | test          | functional                  | bound     |
//! |---------------|-----------------------------|-----------|
//! | entanglement  | `|<A.B>|`, trine x trine    | `1/4`     |
//! | steering      | `|<A.B> + <A'.B>|`          | `1/sqrt2` |
//! | CHSH          | relabelled `|E+E+E-E|`      | `2`       |
//!
//! In sampled mode a bound counts as violated only when the functional
//! exceeds it by more than three standard errors.

use alloc::vec::Vec;
use alloc::{format, string::String};
use core::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::born::ProbabilityTable;
use crate::designs::{moment_tensor, require_1design, WeightedVectorSet, DESIGN_TOL};
use crate::math::sqrt;
use crate::qcore::{BlochVector, Matrix2, C64};
use crate::{Error, Result};

pub const ENTANGLEMENT_BOUND: f64 = 0.25;
pub const STEERING_BOUND: f64 = FRAC_1_SQRT_2;
pub const CHSH_BOUND: f64 = 2.0;

/// Number of standard errors a sampled functional must clear.
pub const SIGMA_POLICY: f64 = 3.0;
/// Slack for exact-mode comparisons so that boundary states are not violations.
pub const EXACT_SLACK: f64 = 1e-12;

/// Something with per-cell weights over an `N x M` outcome grid.
pub trait OutcomeData {
    fn dims(&self) -> (usize, usize);
    /// Row-major non-negative cell weights; normalised by the estimators.
    fn cell_weights(&self) -> Vec<f64>;
    /// Recorded shots for sampled data, `None` for exact probabilities.
    fn shots(&self) -> Option<u64>;
}

impl OutcomeData for ProbabilityTable {
    fn dims(&self) -> (usize, usize) {
        ProbabilityTable::dims(self)
    }
    fn cell_weights(&self) -> Vec<f64> {
        self.as_slice().to_vec()
    }
    fn shots(&self) -> Option<u64> {
        None
    }
}

/// `<X>` with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    pub value: f64,
    /// Multinomial plug-in standard error; 0 in exact mode.
    pub stderr: f64,
    /// 0 in exact mode.
    pub shots: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestKind {
    Entanglement,
    Steering,
    Chsh,
}

impl TestKind {
    pub const ALL: [TestKind; 3] = [TestKind::Entanglement, TestKind::Steering, TestKind::Chsh];

    pub fn bound(self) -> f64 {
        match self {
            TestKind::Entanglement => ENTANGLEMENT_BOUND,
            TestKind::Steering => STEERING_BOUND,
            TestKind::Chsh => CHSH_BOUND,
        }
    }

    /// Value of the functional on the ideal singlet with the default settings.
    pub fn singlet_value(self) -> f64 {
        match self {
            TestKind::Entanglement => 0.5,
            TestKind::Steering => 1.0,
            TestKind::Chsh => 2.0 * core::f64::consts::SQRT_2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TestKind::Entanglement => "entanglement",
            TestKind::Steering => "steering",
            TestKind::Chsh => "chsh",
        }
    }
}

impl core::str::FromStr for TestKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "entanglement" | "witness" => Ok(TestKind::Entanglement),
            "steering" | "steer" => Ok(TestKind::Steering),
            "chsh" => Ok(TestKind::Chsh),
            other => Err(Error::InvalidConfig(format!("unknown test kind `{other}`"))),
        }
    }
}

/// Outcome of one inequality test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityVerdict {
    pub kind: TestKind,
    pub functional: f64,
    pub stderr: f64,
    pub bound: f64,
    pub violated: bool,
    /// `(functional - bound) / stderr`; `None` when the stderr is zero.
    pub sigma_margin: Option<f64>,
}

impl InequalityVerdict {
    /// Applies the violation policy: strict excess in exact mode,
    /// a [`SIGMA_POLICY`]-sigma excess in sampled mode.
    pub fn decide(kind: TestKind, functional: f64, stderr: f64, sampled: bool) -> Self {
        let bound = kind.bound();
        let violated = if sampled {
            functional - SIGMA_POLICY * stderr > bound
        } else {
            functional > bound + EXACT_SLACK
        };
        let sigma_margin = (stderr > 0.0).then(|| (functional - bound) / stderr);
        Self {
            kind,
            functional,
            stderr,
            bound,
            violated,
            sigma_margin,
        }
    }

    /// `(functional - bound) / bound`.
    pub fn relative_margin(&self) -> f64 {
        (self.functional - self.bound) / self.bound
    }
}

fn check_dims<D: OutcomeData>(
    data: &D,
    alice: &WeightedVectorSet,
    bob: &WeightedVectorSet,
) -> Result<()> {
    let expected = (alice.len(), bob.len());
    if data.dims() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: data.dims(),
        });
    }
    Ok(())
}

/// Mean of `value(k, j)` under the normalised cell weights.
fn weighted_mean<D: OutcomeData>(
    data: &D,
    value: impl Fn(usize, usize) -> f64,
) -> Result<CorrelationEstimate> {
    let (_, cols) = data.dims();
    let w = data.cell_weights();
    let total: f64 = w.iter().sum();
    let shots = data.shots();
    if shots == Some(0) || !(total > 0.0) {
        return Err(Error::ZeroShots);
    }
    let (mut mean, mut second) = (0.0, 0.0);
    for (idx, wi) in w.iter().enumerate() {
        let x = value(idx / cols, idx % cols);
        let p = wi / total;
        mean += p * x;
        second += p * x * x;
    }
    let stderr = match shots {
        Some(n) => sqrt((second - mean * mean).max(0.0) / n as f64),
        None => 0.0,
    };
    Ok(CorrelationEstimate {
        value: mean,
        stderr,
        shots: shots.unwrap_or(0),
    })
}

/// `<A.B> = sum_kj p_kj A_k . B_j` from exact probabilities or counts.
pub fn correlation_dot<D: OutcomeData>(
    data: &D,
    alice: &WeightedVectorSet,
    bob: &WeightedVectorSet,
) -> Result<CorrelationEstimate> {
    check_dims(data, alice, bob)?;
    let a: Vec<BlochVector> = alice.axes().collect();
    let b: Vec<BlochVector> = bob.axes().collect();
    weighted_mean(data, |k, j| a[k].dot(&b[j]))
}

/// Singlet value of `<A.B>` from the moment tensors: `-tr[A B]`.
pub fn correlation_tensor_form(alice: &WeightedVectorSet, bob: &WeightedVectorSet) -> Result<f64> {
    Ok(-moment_tensor(alice)?.trace_product(&moment_tensor(bob)?))
}

fn require_trine(set: &WeightedVectorSet, who: &str) -> Result<()> {
    require_1design(set)?;
    if set.is_trine(DESIGN_TOL) {
        Ok(())
    } else {
        Err(Error::DesignShape(format!(
            "{who} design `{}` is not a trine (three-outcome circular 2-design)",
            set.label()
        )))
    }
}

/// Entanglement witness `|<A.B>| <= 1/4` for trine measurements on both sides.
pub fn entanglement_witness<D: OutcomeData>(
    data: &D,
    alice: &WeightedVectorSet,
    bob: &WeightedVectorSet,
) -> Result<InequalityVerdict> {
    require_trine(alice, "Alice's")?;
    require_trine(bob, "Bob's")?;
    let c = correlation_dot(data, alice, bob)?;
    Ok(InequalityVerdict::decide(
        TestKind::Entanglement,
        c.value.abs(),
        c.stderr,
        data.shots().is_some(),
    ))
}

/// Data for one (Alice setting, Bob setting) pair together with its designs.
#[derive(Debug)]
pub struct Setting<'a, D> {
    pub data: &'a D,
    pub alice: &'a WeightedVectorSet,
    pub bob: &'a WeightedVectorSet,
}

impl<D> Clone for Setting<'_, D> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<D> Copy for Setting<'_, D> {}

impl<'a, D> Setting<'a, D> {
    pub fn new(data: &'a D, alice: &'a WeightedVectorSet, bob: &'a WeightedVectorSet) -> Self {
        Self { data, alice, bob }
    }
}

fn same_design(a: &WeightedVectorSet, b: &WeightedVectorSet) -> bool {
    a.len() == b.len()
        && a.elements().iter().zip(b.elements()).all(|(x, y)| {
            (x.weight - y.weight).abs() <= DESIGN_TOL && (x.axis - y.axis).norm() <= DESIGN_TOL
        })
}

fn projective_axis(set: &WeightedVectorSet, who: &str) -> Result<BlochVector> {
    require_1design(set)?;
    if !set.is_projective(DESIGN_TOL) {
        return Err(Error::DesignShape(format!(
            "{who} design `{}` is not a two-outcome projective measurement",
            set.label()
        )));
    }
    Ok(set.elements()[0].axis)
}

/// Steering inequality `|<A.B> + <A'.B>| <= 1/sqrt 2`.
///
/// Alice's two settings must be Bloch-orthogonal projective measurements and
/// Bob must use the same trine in both runs.
pub fn steering_functional<D: OutcomeData>(
    first: Setting<'_, D>,
    second: Setting<'_, D>,
) -> Result<InequalityVerdict> {
    let u = projective_axis(first.alice, "Alice's first")?;
    let v = projective_axis(second.alice, "Alice's second")?;
    if u.dot(&v).abs() > DESIGN_TOL {
        return Err(Error::DesignShape(format!(
            "Alice's settings are not Bloch-orthogonal (u.v = {:e})",
            u.dot(&v)
        )));
    }
    require_trine(first.bob, "Bob's")?;
    if !same_design(first.bob, second.bob) {
        return Err(Error::DesignShape(String::from(
            "Bob's design differs between the two settings",
        )));
    }
    let c1 = correlation_dot(first.data, first.alice, first.bob)?;
    let c2 = correlation_dot(second.data, second.alice, second.bob)?;
    let sampled = first.data.shots().is_some() || second.data.shots().is_some();
    Ok(InequalityVerdict::decide(
        TestKind::Steering,
        (c1.value + c2.value).abs(),
        sqrt(c1.stderr * c1.stderr + c2.stderr * c2.stderr),
        sampled,
    ))
}

/// `+1` for the element on the `+z` side (ties: `+x`, then `+y`), `-1` for the other.
pub fn binary_outcome_values(set: &WeightedVectorSet) -> Result<[f64; 2]> {
    let [a, b] = set.elements() else {
        return Err(Error::DesignShape(format!(
            "design `{}` has {} outcomes, CHSH needs 2",
            set.label(),
            set.len()
        )));
    };
    let key = |v: &BlochVector| [v.z, v.x, v.y];
    let (ka, kb) = (key(&a.axis), key(&b.axis));
    let first_is_plus = ka
        .iter()
        .zip(kb.iter())
        .find(|(x, y)| (*x - *y).abs() > 1e-12)
        .is_none_or(|(x, y)| x > y);
    Ok(if first_is_plus {
        [1.0, -1.0]
    } else {
        [-1.0, 1.0]
    })
}

/// `E = <a b>` of the `+-1` outcome values for one two-outcome setting pair.
pub fn binary_correlator<D: OutcomeData>(setting: Setting<'_, D>) -> Result<CorrelationEstimate> {
    check_dims(setting.data, setting.alice, setting.bob)?;
    let va = binary_outcome_values(setting.alice)?;
    let vb = binary_outcome_values(setting.bob)?;
    weighted_mean(setting.data, |k, j| va[k] * vb[j])
}

/// `|E1 + E2 + E3 - E4|` for correlators ordered `(AB, A'B, AB', A'B')`.
pub fn plain_chsh(e: &[f64; 4]) -> f64 {
    (e[0] + e[1] + e[2] - e[3]).abs()
}

/// Maximum over the four placements of the single minus sign.
pub fn relabeled_chsh(e: &[f64; 4]) -> f64 {
    (0..4)
        .map(|minus| {
            e.iter()
                .enumerate()
                .map(|(i, x)| if i == minus { -x } else { *x })
                .sum::<f64>()
                .abs()
        })
        .fold(0.0, f64::max)
}

/// CHSH test in the relabelled form, settings ordered `(A,B), (A',B), (A,B'), (A',B')`.
pub fn chsh<D: OutcomeData>(settings: [Setting<'_, D>; 4]) -> Result<InequalityVerdict> {
    let [ab, a2b, ab2, a2b2] = &settings;
    if !same_design(ab.alice, ab2.alice) || !same_design(a2b.alice, a2b2.alice) {
        return Err(Error::DesignShape(
            "Alice's settings are not paired as (A, A', A, A')".into(),
        ));
    }
    if !same_design(ab.bob, a2b.bob) || !same_design(ab2.bob, a2b2.bob) {
        return Err(Error::DesignShape(
            "Bob's settings are not paired as (B, B, B', B')".into(),
        ));
    }
    let mut e = [0.0; 4];
    let mut var = 0.0;
    for (slot, s) in e.iter_mut().zip(settings.iter()) {
        let c = binary_correlator(*s)?;
        *slot = c.value;
        var += c.stderr * c.stderr;
    }
    let sampled = settings.iter().any(|s| s.data.shots().is_some());
    Ok(InequalityVerdict::decide(
        TestKind::Chsh,
        relabeled_chsh(&e),
        sqrt(var),
        sampled,
    ))
}

/// Bob's mean outcome vector `sum_j B_j Tr[rho E_j]` for a single-qubit state.
pub fn bob_mean_vector(rho: &Matrix2, bob: &WeightedVectorSet) -> Result<BlochVector> {
    require_1design(bob)?;
    Ok(bob
        .effects()
        .iter()
        .zip(bob.axes())
        .fold(BlochVector::ZERO, |acc, (e, b)| {
            acc + b.scale(rho.trace_product(e).re)
        }))
}

/// `|sum_j B_j <psi|E_j|psi>|` for Bob's trine; at most 1/2.
pub fn max_bob_expectation(psi: &[C64; 2], bob: &WeightedVectorSet) -> Result<f64> {
    let n: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    if (n - 1.0).abs() > 1e-12 {
        return Err(Error::NotNormalized(n));
    }
    max_bob_expectation_mixed(&Matrix2::outer(psi, psi), bob)
}

/// Density-matrix form of [`max_bob_expectation`].
pub fn max_bob_expectation_mixed(rho: &Matrix2, bob: &WeightedVectorSet) -> Result<f64> {
    require_trine(bob, "Bob's")?;
    Ok(bob_mean_vector(rho, bob)?.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::born::{joint_probabilities, singlet_closed_form};
    use crate::designs::{orthogonal_pair, projective_design, tetrahedron, trine_design};
    use crate::qcore::from_pauli;
    use crate::states::{singlet, werner, TwoQubitState};
    use core::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn singlet_design_values() {
        for theta in [0.0, 0.3, 2.0] {
            let t = trine_design(theta);
            let table = joint_probabilities(&singlet(), &t, &t).unwrap();
            let v = correlation_dot(&table, &t, &t).unwrap();
            assert!((v.value + 0.5).abs() < 1e-12);
            assert_eq!(v.stderr, 0.0);
            assert_eq!(v.shots, 0);
        }
        let tet = tetrahedron();
        let table = joint_probabilities(&singlet(), &tet, &tet).unwrap();
        assert!((correlation_dot(&table, &tet, &tet).unwrap().value + 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn product_state_aligned_is_plus_one() {
        let zero = Matrix2::from_real_diagonal([1.0, 0.0]);
        let rho = TwoQubitState::product(&zero, &zero).unwrap();
        let z = projective_design(0.0);
        let table = joint_probabilities(&rho, &z, &z).unwrap();
        assert!((correlation_dot(&table, &z, &z).unwrap().value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        let t = trine_design(0.0);
        let table = joint_probabilities(&singlet(), &t, &t).unwrap();
        assert!(matches!(
            correlation_dot(&table, &t, &projective_design(0.0)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn tensor_form_examples() {
        // -tr[zz^T diag(1/2, 0, 1/2)] = -1/2 for every trine orientation.
        for theta in [0.0, 1.0, 2.5] {
            let v = correlation_tensor_form(&projective_design(0.0), &trine_design(theta)).unwrap();
            assert!((v + 0.5).abs() < 1e-15);
        }
        let t = trine_design(0.0);
        assert!((correlation_tensor_form(&t, &t).unwrap() + 0.5).abs() < 1e-15);
        let tet = tetrahedron();
        assert!((correlation_tensor_form(&tet, &tet).unwrap() + 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn witness_examples() {
        let t = trine_design(0.0);
        let s = joint_probabilities(&singlet(), &t, &t).unwrap();
        let v = entanglement_witness(&s, &t, &t).unwrap();
        assert!((v.functional - 0.5).abs() < 1e-12 && v.violated && v.bound == 0.25);
        assert_eq!(v.sigma_margin, None);

        let w = joint_probabilities(&werner(0.4).unwrap(), &t, &t).unwrap();
        let v = entanglement_witness(&w, &t, &t).unwrap();
        assert!((v.functional - 0.2).abs() < 1e-12 && !v.violated);

        let w = joint_probabilities(&werner(0.5).unwrap(), &t, &t).unwrap();
        let v = entanglement_witness(&w, &t, &t).unwrap();
        assert!((v.functional - 0.25).abs() < 1e-12 && !v.violated);
    }

    #[test]
    fn witness_on_product_states_stays_below_bound() {
        let t = trine_design(0.0);
        for (pa, pb) in [(0.0, 0.0), (0.3, 1.2), (PI, 0.5), (2.0, 2.0 + PI)] {
            let a = from_pauli(0.5, &BlochVector::from_xz_angle(pa).scale(0.5));
            let b = from_pauli(0.5, &BlochVector::from_xz_angle(pb).scale(0.5));
            let rho = TwoQubitState::product(&a, &b).unwrap();
            let table = joint_probabilities(&rho, &t, &t).unwrap();
            let v = entanglement_witness(&table, &t, &t).unwrap();
            assert!(v.functional <= 0.25 + 1e-12, "{v:?}");
            assert!(!v.violated);
        }
    }

    #[test]
    fn witness_rejects_non_trines() {
        let z = projective_design(0.0);
        let tet = tetrahedron();
        let table = joint_probabilities(&singlet(), &tet, &z).unwrap();
        assert!(matches!(
            entanglement_witness(&table, &tet, &z),
            Err(Error::DesignShape(_))
        ));
    }

    fn steering_at(rho: &TwoQubitState, alice_theta: f64, bob_theta: f64) -> InequalityVerdict {
        let [a1, a2] = orthogonal_pair(alice_theta);
        let b = trine_design(bob_theta);
        let t1 = joint_probabilities(rho, &a1, &b).unwrap();
        let t2 = joint_probabilities(rho, &a2, &b).unwrap();
        steering_functional(Setting::new(&t1, &a1, &b), Setting::new(&t2, &a2, &b)).unwrap()
    }

    #[test]
    fn steering_examples() {
        for theta in [0.0, 0.4, 1.9, 3.3] {
            let v = steering_at(&singlet(), 0.0, theta);
            assert!((v.functional - 1.0).abs() < 1e-12 && v.violated);
        }
        let v = steering_at(&werner(0.6).unwrap(), 0.0, 0.2);
        assert!((v.functional - 0.6).abs() < 1e-12 && !v.violated);
        assert!((v.bound - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn steering_rejects_mismatched_bob() {
        let [a1, a2] = orthogonal_pair(0.0);
        let (b1, b2) = (trine_design(0.0), trine_design(0.1));
        let t1 = joint_probabilities(&singlet(), &a1, &b1).unwrap();
        let t2 = joint_probabilities(&singlet(), &a2, &b2).unwrap();
        let err = steering_functional(Setting::new(&t1, &a1, &b1), Setting::new(&t2, &a2, &b2));
        assert!(matches!(err, Err(Error::DesignShape(_))));
        // Non-orthogonal Alice settings are rejected too.
        let a3 = projective_design(0.3);
        let t3 = joint_probabilities(&singlet(), &a3, &b1).unwrap();
        let err = steering_functional(Setting::new(&t1, &a1, &b1), Setting::new(&t3, &a3, &b1));
        assert!(matches!(err, Err(Error::DesignShape(_))));
    }

    /// Independent oracle: singlet E(a, b) = -(a.b) for +-1 outcomes along a and b.
    fn chsh_oracle(alice: [f64; 2], bob: [f64; 2]) -> f64 {
        let e = |x: f64, y: f64| -libm::cos(x - y);
        let es = [
            e(alice[0], bob[0]),
            e(alice[1], bob[0]),
            e(alice[0], bob[1]),
            e(alice[1], bob[1]),
        ];
        // Brute force over every sign vector with an odd number of minus signs.
        let mut best = 0.0_f64;
        for mask in 0u32..16 {
            if mask.count_ones() % 2 == 1 {
                let s: f64 = (0..4)
                    .map(|i| if mask >> i & 1 == 1 { -es[i] } else { es[i] })
                    .sum();
                best = best.max(s.abs());
            }
        }
        best
    }

    fn chsh_exact(rho: &TwoQubitState, alice: [f64; 2], bob: [f64; 2]) -> InequalityVerdict {
        let a = [projective_design(alice[0]), projective_design(alice[1])];
        let b = [projective_design(bob[0]), projective_design(bob[1])];
        let pairs = [(0, 0), (1, 0), (0, 1), (1, 1)];
        let tables: Vec<_> = pairs
            .iter()
            .map(|&(i, j)| joint_probabilities(rho, &a[i], &b[j]).unwrap())
            .collect();
        let settings = [0, 1, 2, 3].map(|n| {
            let (i, j) = pairs[n];
            Setting::new(&tables[n], &a[i], &b[j])
        });
        chsh(settings).unwrap()
    }

    #[test]
    fn chsh_optimal_is_tsirelson() {
        let v = chsh_exact(&singlet(), [0.0, FRAC_PI_2], [FRAC_PI_4, 3.0 * FRAC_PI_4]);
        assert!((v.functional - 2.0 * SQRT_2).abs() < 1e-12);
        assert!(v.violated);
        assert!(
            (chsh_oracle([0.0, FRAC_PI_2], [FRAC_PI_4, 3.0 * FRAC_PI_4]) - 2.0 * SQRT_2).abs()
                < 1e-12
        );
    }

    #[test]
    fn chsh_boundary_when_axes_align() {
        let theta = FRAC_PI_4;
        let bob = [FRAC_PI_4 + theta, 3.0 * FRAC_PI_4 + theta];
        let v = chsh_exact(&singlet(), [0.0, FRAC_PI_2], bob);
        assert!((v.functional - 2.0).abs() < 1e-12);
        assert!(!v.violated);
    }

    #[test]
    fn chsh_matches_oracle_on_grid() {
        for i in 0..40 {
            let theta = i as f64 * PI / 20.0;
            let bob = [FRAC_PI_4 + theta, 3.0 * FRAC_PI_4 + theta];
            let v = chsh_exact(&singlet(), [0.0, FRAC_PI_2], bob);
            assert!((v.functional - chsh_oracle([0.0, FRAC_PI_2], bob)).abs() < 1e-12);
        }
    }

    #[test]
    fn chsh_rejects_non_binary() {
        let t = trine_design(0.0);
        let z = projective_design(0.0);
        let table = joint_probabilities(&singlet(), &t, &z).unwrap();
        let s = Setting::new(&table, &t, &z);
        assert!(matches!(chsh([s, s, s, s]), Err(Error::DesignShape(_))));
    }

    #[test]
    fn outcome_value_convention() {
        assert_eq!(
            binary_outcome_values(&projective_design(0.0)).unwrap(),
            [1.0, -1.0]
        );
        assert_eq!(
            binary_outcome_values(&projective_design(PI)).unwrap(),
            [-1.0, 1.0]
        );
        // On the equator the +x element is +1.
        assert_eq!(
            binary_outcome_values(&projective_design(FRAC_PI_2)).unwrap(),
            [1.0, -1.0]
        );
        assert_eq!(
            binary_outcome_values(&projective_design(-FRAC_PI_2)).unwrap(),
            [-1.0, 1.0]
        );
    }

    #[test]
    fn relabeling_helpers() {
        let e = [0.5, 0.5, 0.5, -0.5];
        assert!((plain_chsh(&e) - 2.0).abs() < 1e-15);
        assert!((relabeled_chsh(&e) - 2.0).abs() < 1e-15);
        let e = [-0.5, 0.5, 0.5, 0.5];
        assert!(plain_chsh(&e).abs() < 1e-15);
        assert!((relabeled_chsh(&e) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn bob_expectation_examples() {
        let t = trine_design(0.0);
        let one = [c(0.0, 0.0), c(1.0, 0.0)];
        assert!((max_bob_expectation(&one, &t).unwrap() - 0.5).abs() < 1e-15);
        let h = FRAC_1_SQRT_2;
        let plus_y = [c(h, 0.0), c(0.0, h)];
        assert!(max_bob_expectation(&plus_y, &t).unwrap().abs() < 1e-15);
        let mixed = Matrix2::identity().scale(0.5);
        assert!(max_bob_expectation_mixed(&mixed, &t).unwrap().abs() < 1e-15);
        assert!(matches!(
            max_bob_expectation(&[c(1.0, 0.0), c(1.0, 0.0)], &t),
            Err(Error::NotNormalized(_))
        ));
    }

    #[test]
    fn verdict_policy() {
        let v = InequalityVerdict::decide(TestKind::Steering, 0.75, 0.02, true);
        assert!(!v.violated);
        assert!((v.sigma_margin.unwrap() - (0.75 - FRAC_1_SQRT_2) / 0.02).abs() < 1e-9);
        assert!(InequalityVerdict::decide(TestKind::Steering, 0.75, 0.01, true).violated);
        let v = InequalityVerdict::decide(TestKind::Steering, 0.75, 0.02, false);
        assert!(v.violated);
        let json = serde_json::to_value(InequalityVerdict::decide(TestKind::Chsh, 2.5, 0.0, false))
            .unwrap();
        assert_eq!(json["kind"], "chsh");
        assert!(json["sigma_margin"].is_null());
        for key in ["functional", "stderr", "bound", "violated"] {
            assert!(json.get(key).is_some());
        }
    }

    fn random_design() -> impl Strategy<Value = WeightedVectorSet> {
        (
            0.0..core::f64::consts::PI,
            0.0..core::f64::consts::TAU,
            0.05..0.95f64,
            0.0..core::f64::consts::TAU,
            0.0..core::f64::consts::PI,
            0.0..core::f64::consts::TAU,
        )
            .prop_map(|(p1, a1, w, rot, p2, a2)| {
                let u = BlochVector::from_spherical(p1, a1);
                let v = BlochVector::from_spherical(p2, a2);
                let t = trine_design(rot);
                let r = (1.0 - w) / 2.0;
                WeightedVectorSet::new(
                    "random",
                    [(w / 2.0, u), (w / 2.0, -u), (r / 2.0, v), (r / 2.0, -v)]
                        .into_iter()
                        .chain(t.elements().iter().map(|e| (e.weight * r, e.axis))),
                )
                .unwrap()
            })
    }

    proptest! {
        #[test]
        fn dot_equals_tensor_form(a in random_design(), b in random_design()) {
            let table = singlet_closed_form(&a, &b).unwrap();
            let dot = correlation_dot(&table, &a, &b).unwrap().value;
            let tensor = correlation_tensor_form(&a, &b).unwrap();
            prop_assert!((dot - tensor).abs() <= 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn bob_expectation_at_most_half(polar in 0.0..PI, az in 0.0..2.0 * PI, theta in 0.0..2.0 * PI) {
            let psi = BlochVector::from_spherical(polar, az).to_pure_state();
            prop_assert!(max_bob_expectation(&psi, &trine_design(theta)).unwrap() <= 0.5 + 1e-12);
        }
    }
}
