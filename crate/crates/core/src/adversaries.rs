//! Classical adversaries that try to fake each test.
//!
//! * LHV (CHSH): both parties announce predetermined `+-1` outcomes.
//! * LHS (steering): Alice announces predetermined outcome vectors and sends
//!   Bob a qubit state of her choosing; Bob's trine is trusted.
//! * Separable (witness): each party holds an uncorrelated pure state.
//!
//! Discrete choices are enumerated exhaustively. Continuous Bloch angles in
//! the x-z plane are scanned on a grid and refined by golden-section search.
//! Mixed strategies are convex combinations of these, so they never do better.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::correlators::{
    binary_outcome_values, bob_mean_vector, relabeled_chsh, TestKind, CHSH_BOUND,
    ENTANGLEMENT_BOUND, STEERING_BOUND,
};
use crate::designs::{require_1design, WeightedVectorSet, DESIGN_TOL};
use crate::math::sqrt;
use crate::qcore::{from_pauli, BlochVector};
use crate::{Error, Result};

/// Grid resolution for one-dimensional Bloch-circle scans.
pub const CIRCLE_GRID: usize = 10_000;
/// Per-axis resolution for the two-circle scan (`100 x 100 = 10^4` points).
pub const TORUS_GRID: usize = 100;
const GOLDEN_ITERS: usize = 80;

/// A hidden-variable value: declared outcomes plus any states handed out.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeterministicStrategy {
    /// Outcome index Alice declares for each of her settings.
    pub alice_outcomes: Vec<usize>,
    /// Outcome index Bob's side declares for each of his settings (LHV only).
    pub bob_outcomes: Vec<usize>,
    /// Bloch vector of the state held by Alice (separable model).
    pub alice_state: Option<BlochVector>,
    /// Bloch vector of the state sent to Bob (LHS and separable models).
    pub bob_state: Option<BlochVector>,
}

impl DeterministicStrategy {
    pub fn validate(&self, alice_outcomes: &[usize], bob_outcomes: &[usize]) -> Result<()> {
        let in_range = |picks: &[usize], sizes: &[usize]| {
            picks.len() <= sizes.len() && picks.iter().zip(sizes).all(|(p, n)| p < n)
        };
        if !in_range(&self.alice_outcomes, alice_outcomes)
            || !in_range(&self.bob_outcomes, bob_outcomes)
        {
            return Err(Error::InvalidConfig(
                "strategy outcome index out of range".into(),
            ));
        }
        for s in [self.alice_state, self.bob_state].into_iter().flatten() {
            if s.norm() > 1.0 + 1e-12 {
                return Err(Error::InvalidState(alloc::format!(
                    "Bloch norm {} > 1",
                    s.norm()
                )));
            }
        }
        Ok(())
    }
}

/// Best classical value found for one test, compared with the bound and the singlet.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversaryReport {
    pub test: TestKind,
    pub optimum: f64,
    pub bound: f64,
    pub quantum_value: f64,
    /// `quantum_value - optimum`
    pub gap: f64,
    pub argmax: DeterministicStrategy,
    pub evaluations: usize,
}

impl AdversaryReport {
    fn new(
        test: TestKind,
        optimum: f64,
        bound: f64,
        argmax: DeterministicStrategy,
        evaluations: usize,
    ) -> Self {
        let quantum_value = test.singlet_value();
        Self {
            test,
            optimum,
            bound,
            quantum_value,
            gap: quantum_value - optimum,
            argmax,
            evaluations,
        }
    }
}

/// Maximises `f` on the circle: grid scan, then golden section around the best cell.
/// Returns `(angle, value, evaluations)`.
fn maximize_on_circle(f: impl Fn(f64) -> f64, grid: usize) -> (f64, f64, usize) {
    let step = TAU / grid as f64;
    let (mut best_i, mut best) = (0, f64::NEG_INFINITY);
    for i in 0..grid {
        let v = f(i as f64 * step);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let centre = best_i as f64 * step;
    let (x, v, n) = golden_section(&f, centre - step, centre + step);
    if v > best {
        (x, v, grid + n)
    } else {
        (centre, best, grid + n)
    }
}

fn golden_section(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64, usize) {
    let inv_phi = (sqrt(5.0) - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..GOLDEN_ITERS {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    let (x, v) = if f1 > f2 { (x1, f1) } else { (x2, f2) };
    (x, v, GOLDEN_ITERS + 2)
}

fn check_binary(set: &WeightedVectorSet) -> Result<()> {
    require_1design(set)?;
    binary_outcome_values(set).map(|_| ())
}

/// Best relabelled CHSH value over all 16 deterministic `+-1` assignments.
pub fn best_lhv_chsh(
    alice: &[WeightedVectorSet; 2],
    bob: &[WeightedVectorSet; 2],
) -> Result<AdversaryReport> {
    for s in alice.iter().chain(bob) {
        check_binary(s)?;
    }
    let values = [
        binary_outcome_values(&alice[0])?,
        binary_outcome_values(&alice[1])?,
        binary_outcome_values(&bob[0])?,
        binary_outcome_values(&bob[1])?,
    ];
    let mut best = (f64::NEG_INFINITY, [0usize; 4]);
    for mask in 0..16usize {
        let pick = [mask & 1, (mask >> 1) & 1, (mask >> 2) & 1, (mask >> 3) & 1];
        let [a, a2, b, b2] = [0, 1, 2, 3].map(|i| values[i][pick[i]]);
        let e = [a * b, a2 * b, a * b2, a2 * b2];
        let v = relabeled_chsh(&e);
        if v > best.0 {
            best = (v, pick);
        }
    }
    let argmax = DeterministicStrategy {
        alice_outcomes: vec![best.1[0], best.1[1]],
        bob_outcomes: vec![best.1[2], best.1[3]],
        alice_state: None,
        bob_state: None,
    };
    Ok(AdversaryReport::new(
        TestKind::Chsh,
        best.0,
        CHSH_BOUND,
        argmax,
        16,
    ))
}

fn pure_density(r: &BlochVector) -> crate::qcore::Matrix2 {
    from_pauli(0.5, &r.scale(0.5))
}

fn require_trine(set: &WeightedVectorSet) -> Result<()> {
    require_1design(set)?;
    if set.is_trine(DESIGN_TOL) {
        Ok(())
    } else {
        Err(Error::DesignShape(alloc::format!(
            "`{}` is not a trine",
            set.label()
        )))
    }
}

fn require_projective_pair(pair: &[WeightedVectorSet; 2]) -> Result<()> {
    for s in pair {
        require_1design(s)?;
        if !s.is_projective(DESIGN_TOL) {
            return Err(Error::DesignShape(alloc::format!(
                "`{}` is not a projective measurement",
                s.label()
            )));
        }
    }
    Ok(())
}

/// Steering functional reached by one LHS strategy: `|(A_l + A'_l) . <B>_state|`.
pub fn lhs_value(
    strategy: &DeterministicStrategy,
    bob_trine: &WeightedVectorSet,
    alice_pair: &[WeightedVectorSet; 2],
) -> Result<f64> {
    strategy.validate(&[2, 2], &[])?;
    let sent = strategy
        .bob_state
        .ok_or_else(|| Error::InvalidConfig("LHS strategy needs a state for Bob".into()))?;
    let picks = &strategy.alice_outcomes;
    if picks.len() != 2 {
        return Err(Error::InvalidConfig(
            "LHS strategy needs two Alice outcomes".into(),
        ));
    }
    let v = alice_pair[0].elements()[picks[0]].axis + alice_pair[1].elements()[picks[1]].axis;
    Ok(v.dot(&bob_mean_vector(&pure_density(&sent), bob_trine)?)
        .abs())
}

/// Best LHS strategy against the steering test.
///
/// Enumerates Alice's four outcome assignments and scans pure states for Bob
/// on the x-z Bloch circle.
pub fn best_lhs_steering(
    bob_trine: &WeightedVectorSet,
    alice_pair: &[WeightedVectorSet; 2],
) -> Result<AdversaryReport> {
    require_trine(bob_trine)?;
    require_projective_pair(alice_pair)?;
    let mut best = (f64::NEG_INFINITY, 0.0, [0usize; 2]);
    let mut evaluations = 0;
    for picks in [[0, 0], [0, 1], [1, 0], [1, 1]] {
        let v = alice_pair[0].elements()[picks[0]].axis + alice_pair[1].elements()[picks[1]].axis;
        let f = |phi: f64| {
            let mean = bob_mean_vector(&pure_density(&BlochVector::from_xz_angle(phi)), bob_trine)
                .expect("trine validated");
            v.dot(&mean).abs()
        };
        let (phi, value, n) = maximize_on_circle(f, CIRCLE_GRID);
        evaluations += n;
        if value > best.0 {
            best = (value, phi, picks);
        }
    }
    let argmax = DeterministicStrategy {
        alice_outcomes: best.2.to_vec(),
        bob_outcomes: vec![],
        alice_state: None,
        bob_state: Some(BlochVector::from_xz_angle(best.1)),
    };
    Ok(AdversaryReport::new(
        TestKind::Steering,
        best.0,
        STEERING_BOUND,
        argmax,
        evaluations,
    ))
}

/// Witness value `|<A>_a . <B>_b|` for a product of single-qubit states.
pub fn separable_value(
    alice_state: &BlochVector,
    bob_state: &BlochVector,
    trine_a: &WeightedVectorSet,
    trine_b: &WeightedVectorSet,
) -> Result<f64> {
    for s in [alice_state, bob_state] {
        if s.norm() > 1.0 + 1e-12 {
            return Err(Error::InvalidState(alloc::format!(
                "Bloch norm {} > 1",
                s.norm()
            )));
        }
    }
    let a = bob_mean_vector(&pure_density(alice_state), trine_a)?;
    let b = bob_mean_vector(&pure_density(bob_state), trine_b)?;
    Ok(a.dot(&b).abs())
}

/// Best product of pure states against the entanglement witness.
///
/// Scans a `100 x 100` grid over both Bloch circles, then refines each angle in
/// turn with golden-section search.
pub fn best_separable_witness(
    trine_a: &WeightedVectorSet,
    trine_b: &WeightedVectorSet,
) -> Result<AdversaryReport> {
    require_trine(trine_a)?;
    require_trine(trine_b)?;
    let mean = |set: &WeightedVectorSet, phi: f64| {
        bob_mean_vector(&pure_density(&BlochVector::from_xz_angle(phi)), set)
            .expect("trine validated")
    };
    let mean_a: Vec<BlochVector> = (0..TORUS_GRID)
        .map(|i| mean(trine_a, i as f64 * TAU / TORUS_GRID as f64))
        .collect();
    let mean_b: Vec<BlochVector> = (0..TORUS_GRID)
        .map(|i| mean(trine_b, i as f64 * TAU / TORUS_GRID as f64))
        .collect();
    let (mut best, mut ia, mut ib) = (f64::NEG_INFINITY, 0, 0);
    for (i, a) in mean_a.iter().enumerate() {
        for (j, b) in mean_b.iter().enumerate() {
            let v = a.dot(b).abs();
            if v > best {
                (best, ia, ib) = (v, i, j);
            }
        }
    }
    let step = TAU / TORUS_GRID as f64;
    let (mut phi_a, mut phi_b) = (ia as f64 * step, ib as f64 * step);
    let mut evaluations = TORUS_GRID * TORUS_GRID;
    let mut width = step;
    for _ in 0..6 {
        let fa = |x: f64| mean(trine_a, x).dot(&mean(trine_b, phi_b)).abs();
        let (x, v, n) = golden_section(&fa, phi_a - width, phi_a + width);
        evaluations += n;
        if v >= best {
            (best, phi_a) = (v, x);
        }
        let fb = |x: f64| mean(trine_a, phi_a).dot(&mean(trine_b, x)).abs();
        let (x, v, n) = golden_section(&fb, phi_b - width, phi_b + width);
        evaluations += n;
        if v >= best {
            (best, phi_b) = (v, x);
        }
        width /= 2.0;
    }
    let argmax = DeterministicStrategy {
        alice_outcomes: vec![],
        bob_outcomes: vec![],
        alice_state: Some(BlochVector::from_xz_angle(phi_a)),
        bob_state: Some(BlochVector::from_xz_angle(phi_b)),
    };
    Ok(AdversaryReport::new(
        TestKind::Entanglement,
        best,
        ENTANGLEMENT_BOUND,
        argmax,
        evaluations,
    ))
}

/// Runs the adversary for `kind` against the default geometry at Bob rotation `theta`.
pub fn run(kind: TestKind, theta: f64) -> Result<AdversaryReport> {
    use crate::designs::{orthogonal_pair, projective_design, trine_design};
    match kind {
        TestKind::Entanglement => best_separable_witness(&trine_design(0.0), &trine_design(theta)),
        TestKind::Steering => best_lhs_steering(&trine_design(theta), &orthogonal_pair(0.0)),
        TestKind::Chsh => best_lhv_chsh(
            &[projective_design(0.0), projective_design(PI / 2.0)],
            &[
                projective_design(PI / 4.0 + theta),
                projective_design(3.0 * PI / 4.0 + theta),
            ],
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::born::joint_probabilities;
    use crate::correlators::entanglement_witness;
    use crate::designs::{orthogonal_pair, projective_design, trine_design};
    use crate::states::TwoQubitState;
    use core::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_ball(rng: &mut ChaCha8Rng, surface: bool) -> BlochVector {
        loop {
            let v = BlochVector::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let n = v.norm();
            if n <= 1.0 && n > 1e-3 {
                return if surface { v.scale(1.0 / n) } else { v };
            }
        }
    }

    #[test]
    fn lhv_chsh_is_two() {
        for theta in [0.0, 0.3, 1.0] {
            let r = run(TestKind::Chsh, theta).unwrap();
            assert_eq!(r.optimum, 2.0);
            assert_eq!(r.evaluations, 16);
            assert!(r.gap > 0.8);
        }
    }

    #[test]
    fn all_plus_strategy_is_bounded() {
        // a = a' = b = b' = +1  =>  |1 + 1 + 1 - 1| = 2.
        let e = [1.0, 1.0, 1.0, 1.0];
        assert_eq!(crate::correlators::plain_chsh(&e), 2.0);
        assert!(relabeled_chsh(&e) <= 2.0);
    }

    #[test]
    fn lhs_steering_is_one_over_root_two() {
        for theta in [0.0, 0.25, 1.7, 4.0] {
            let r = best_lhs_steering(&trine_design(theta), &orthogonal_pair(0.0)).unwrap();
            assert!(
                r.optimum <= FRAC_1_SQRT_2 + 1e-9 && r.optimum >= FRAC_1_SQRT_2 - 1e-6,
                "{}",
                r.optimum
            );
            assert!(r.gap > 0.29);
            assert!(
                (lhs_value(&r.argmax, &trine_design(theta), &orthogonal_pair(0.0)).unwrap()
                    - r.optimum)
                    .abs()
                    < 1e-12
            );
        }
    }

    #[test]
    fn anti_aligned_picks_and_mixed_sender_give_nothing() {
        let pair = orthogonal_pair(0.0);
        let trine = trine_design(0.0);
        // Picks +z and -z are not anti-aligned for an orthogonal pair, so build
        // a pair whose sum vanishes: the same axis picked with opposite signs.
        let same = [projective_design(0.0), projective_design(0.0)];
        for phi in [0.0, 1.0, 2.0] {
            let s = DeterministicStrategy {
                alice_outcomes: vec![0, 1],
                bob_outcomes: vec![],
                alice_state: None,
                bob_state: Some(BlochVector::from_xz_angle(phi)),
            };
            assert!(lhs_value(&s, &trine, &same).unwrap() < 1e-15);
        }
        let s = DeterministicStrategy {
            alice_outcomes: vec![0, 0],
            bob_outcomes: vec![],
            alice_state: None,
            bob_state: Some(BlochVector::ZERO),
        };
        assert!(lhs_value(&s, &trine, &pair).unwrap() < 1e-15);
    }

    #[test]
    fn out_of_plane_and_mixed_senders_do_not_beat_the_circle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let trine = trine_design(0.6);
        let pair = orthogonal_pair(0.0);
        let best = best_lhs_steering(&trine, &pair).unwrap().optimum;
        for i in 0..2000 {
            let s = DeterministicStrategy {
                alice_outcomes: vec![i % 2, (i / 2) % 2],
                bob_outcomes: vec![],
                alice_state: None,
                bob_state: Some(random_ball(&mut rng, i % 3 == 0)),
            };
            assert!(lhs_value(&s, &trine, &pair).unwrap() <= best + 1e-12);
        }
    }

    #[test]
    fn separable_witness_is_one_quarter() {
        for theta in [0.0, 0.5, 2.2] {
            let r = best_separable_witness(&trine_design(0.0), &trine_design(theta)).unwrap();
            assert!(
                r.optimum <= 0.25 + 1e-9 && r.optimum >= 0.25 - 1e-6,
                "{}",
                r.optimum
            );
        }
    }

    #[test]
    fn separable_examples() {
        let t = trine_design(0.0);
        let down = -BlochVector::Z;
        assert!((separable_value(&down, &down, &t, &t).unwrap() - 0.25).abs() < 1e-15);
        assert!(separable_value(&BlochVector::Y, &down, &t, &t).unwrap() < 1e-15);
    }

    #[test]
    fn out_of_plane_products_only_shrink() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (ta, tb) = (trine_design(0.0), trine_design(1.1));
        for _ in 0..2000 {
            let a = random_ball(&mut rng, true);
            let b = random_ball(&mut rng, true);
            let v = separable_value(&a, &b, &ta, &tb).unwrap();
            let project = |v: BlochVector| BlochVector::new(v.x, 0.0, v.z);
            let in_plane = {
                let (pa, pb) = (project(a), project(b));
                let na = pa.normalized().unwrap_or(BlochVector::Z);
                let nb = pb.normalized().unwrap_or(BlochVector::Z);
                separable_value(&na, &nb, &ta, &tb).unwrap()
            };
            assert!(v <= in_plane + 1e-12);
        }
    }

    #[test]
    fn product_mixtures_stay_below_quarter() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = trine_design(0.0);
        for _ in 0..100 {
            let n = rng.random_range(1..5);
            let mut rho: Option<TwoQubitState> = None;
            let mut total = 0.0;
            for _ in 0..n {
                let w: f64 = rng.random_range(0.1..1.0);
                let a = pure_density(&random_ball(&mut rng, true));
                let b = pure_density(&random_ball(&mut rng, true));
                let p = TwoQubitState::product(&a, &b).unwrap();
                total += w;
                rho = Some(match rho {
                    None => p,
                    Some(r) => r.mix(&p, w / total),
                });
            }
            let table = joint_probabilities(&rho.unwrap(), &t, &t).unwrap();
            let v = entanglement_witness(&table, &t, &t).unwrap();
            assert!(v.functional <= 0.25 + 1e-12, "{}", v.functional);
        }
    }

    #[test]
    fn strategy_validation() {
        let s = DeterministicStrategy {
            alice_outcomes: vec![0, 2],
            bob_outcomes: vec![],
            alice_state: None,
            bob_state: Some(BlochVector::Z),
        };
        assert!(s.validate(&[2, 2], &[]).is_err());
        let s = DeterministicStrategy {
            alice_outcomes: vec![0, 1],
            bob_outcomes: vec![],
            alice_state: None,
            bob_state: Some(BlochVector::new(0.0, 0.0, 1.5)),
        };
        assert!(s.validate(&[2, 2], &[]).is_err());
        assert!(best_lhs_steering(&projective_design(0.0), &orthogonal_pair(0.0)).is_err());
        assert!(best_lhv_chsh(
            &[trine_design(0.0), projective_design(0.0)],
            &[projective_design(0.0), projective_design(FRAC_PI_2)]
        )
        .is_err());
    }
}
