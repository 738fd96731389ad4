//! Joint outcome distributions from the Born rule.

use alloc::vec::Vec;

use serde::Serialize;

use crate::designs::{require_1design, WeightedVectorSet};
use crate::qcore::{partial_trace_a, partial_trace_b, tensor_product};
use crate::states::TwoQubitState;
use crate::{Error, Result};

/// Negative probabilities down to this are rounding and get clamped to 0.
pub const CLAMP_TOL: f64 = 1e-12;
/// Allowed deviation of the total from 1.
pub const NORMALIZATION_TOL: f64 = 1e-10;

/// `N x M` joint outcome distribution for one pair of settings (row = Alice).
///
/// Tables produced by the Born rule sum to one. Tables that went through
/// detector losses ([`crate::sampler::apply_efficiencies`]) may sum to less.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbabilityTable {
    rows: usize,
    cols: usize,
    p: Vec<f64>,
}

fn clamp_probability(p: f64) -> Result<f64> {
    if !p.is_finite() {
        return Err(Error::NonFinite);
    }
    if p < -CLAMP_TOL {
        return Err(Error::NegativeProbability(p));
    }
    if p < 0.0 {
        log::debug!("clamped probability {p:e} to zero");
        return Ok(0.0);
    }
    Ok(p)
}

impl ProbabilityTable {
    /// Row-major entries; must sum to 1.
    pub fn new(rows: usize, cols: usize, p: Vec<f64>) -> Result<Self> {
        let t = Self::subnormalized(rows, cols, p)?;
        let total = t.total();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidState(alloc::format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(t)
    }

    /// Row-major entries summing to at most 1.
    pub fn subnormalized(rows: usize, cols: usize, p: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || p.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: (rows, cols),
                found: (p.len(), 1),
            });
        }
        let p = p
            .into_iter()
            .map(clamp_probability)
            .collect::<Result<Vec<_>>>()?;
        let t = Self { rows, cols, p };
        if t.total() > 1.0 + NORMALIZATION_TOL {
            return Err(Error::InvalidState(alloc::format!(
                "probabilities sum to {} > 1",
                t.total()
            )));
        }
        Ok(t)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, k: usize, j: usize) -> f64 {
        self.p[k * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.p[k * self.cols..(k + 1) * self.cols]
    }

    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }

    pub fn alice_marginal(&self) -> Vec<f64> {
        (0..self.rows).map(|k| self.row(k).iter().sum()).collect()
    }

    pub fn bob_marginal(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|k| self.get(k, j)).sum())
            .collect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dims(), other.dims());
        self.p
            .iter()
            .zip(&other.p)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `P_kj = Tr[rho (F_k (x) E_j)]` for Alice's design `alice` and Bob's `bob`.
pub fn joint_probabilities(
    rho: &TwoQubitState,
    alice: &WeightedVectorSet,
    bob: &WeightedVectorSet,
) -> Result<ProbabilityTable> {
    require_1design(alice)?;
    require_1design(bob)?;
    let fa = alice.effects();
    let eb = bob.effects();
    let mut p = Vec::with_capacity(fa.len() * eb.len());
    for f in &fa {
        for e in &eb {
            p.push(rho.matrix().trace_product(&tensor_product(f, e)).re);
        }
    }
    ProbabilityTable::new(fa.len(), eb.len(), p)
}

/// Singlet table `a_k b_j (1 - A_k . B_j)` without any matrix algebra.
pub fn singlet_closed_form(
    alice: &WeightedVectorSet,
    bob: &WeightedVectorSet,
) -> Result<ProbabilityTable> {
    require_1design(alice)?;
    require_1design(bob)?;
    let mut p = Vec::with_capacity(alice.len() * bob.len());
    for a in alice.elements() {
        for b in bob.elements() {
            p.push(a.weight * b.weight * (1.0 - a.axis.dot(&b.axis)));
        }
    }
    ProbabilityTable::new(alice.len(), bob.len(), p)
}

/// Alice's outcome probabilities `Tr[rho_A F_k]` from the reduced state.
pub fn alice_marginal(rho: &TwoQubitState, alice: &WeightedVectorSet) -> Vec<f64> {
    let ra = partial_trace_b(rho.matrix());
    alice
        .effects()
        .iter()
        .map(|f| ra.trace_product(f).re)
        .collect()
}

/// Bob's outcome probabilities `Tr[rho_B E_j]` from the reduced state.
pub fn bob_marginal(rho: &TwoQubitState, bob: &WeightedVectorSet) -> Vec<f64> {
    let rb = partial_trace_a(rho.matrix());
    bob.effects()
        .iter()
        .map(|e| rb.trace_product(e).re)
        .collect()
}
