//! Sharp qubit POVMs as weighted Bloch-vector sets.
//!
//! A set `{(a_k, A_k)}` with positive weights and unit axes defines the POVM
//! elements `F_k = a_k (1 + A_k . sigma)`. Completeness of the POVM is the
//! 1-design condition `sum a_k = 1`, `sum a_k A_k = 0`.
//!
//! Angle convention: Bloch angles are measured in the x-z plane from `+z`
//! towards `+x`. The trine is anchored at `-z` (the state `|1>`) for zero
//! rotation. Polarisation angles are half of these Bloch angles.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};
use core::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::math::sqrt;
use crate::qcore::{effect_from_bloch, BlochVector, Matrix2};
use crate::{Error, Result};

/// Default tolerance for design validation.
pub const DESIGN_TOL: f64 = 1e-9;

/// One POVM element: weight and unit axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedAxis {
    pub weight: f64,
    pub axis: BlochVector,
}

/// Weighted set of unit Bloch vectors describing a sharp POVM.
///
/// JSON form: `{"label": "...", "elements": [{"weight": w, "axis": [x, y, z]}, ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSet")]
pub struct WeightedVectorSet {
    label: String,
    elements: Vec<WeightedAxis>,
}

#[derive(Deserialize)]
struct RawSet {
    label: String,
    elements: Vec<WeightedAxis>,
}

impl TryFrom<RawSet> for WeightedVectorSet {
    type Error = Error;
    fn try_from(raw: RawSet) -> Result<Self> {
        WeightedVectorSet::new(
            raw.label,
            raw.elements.into_iter().map(|e| (e.weight, e.axis)),
        )
    }
}

/// Residuals of the 1-design conditions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DesignCheck {
    pub is_valid: bool,
    /// `|sum a_k - 1|`
    pub weight_residual: f64,
    /// `|sum a_k A_k|`
    pub vector_residual: f64,
}

impl WeightedVectorSet {
    /// Validates every weight (> 0) and axis (unit norm). Nothing is normalised.
    pub fn new(
        label: impl Into<String>,
        elements: impl IntoIterator<Item = (f64, BlochVector)>,
    ) -> Result<Self> {
        let elements = elements
            .into_iter()
            .map(|(weight, axis)| {
                if !(weight > 0.0 && weight.is_finite()) {
                    return Err(Error::NonPositiveWeight(weight));
                }
                axis.require_unit()?;
                Ok(WeightedAxis { weight, axis })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            label: label.into(),
            elements,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn elements(&self) -> &[WeightedAxis] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn axes(&self) -> impl Iterator<Item = BlochVector> + '_ {
        self.elements.iter().map(|e| e.axis)
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.elements.iter().map(|e| e.weight)
    }

    /// POVM elements `a_k (1 + A_k . sigma)`.
    pub fn effects(&self) -> Vec<Matrix2> {
        self.elements
            .iter()
            .map(|e| effect_from_bloch(e.weight, &e.axis).expect("validated at construction"))
            .collect()
    }

    /// Same design, every axis rotated in the x-z plane by `angle`.
    pub fn rotated_xz(&self, angle: f64) -> Self {
        let elements = self
            .elements
            .iter()
            .map(|e| {
                let (s, c) = (crate::math::sin(angle), crate::math::cos(angle));
                let a = e.axis;
                // Same sense as from_xz_angle: +z rotates towards +x.
                let axis = BlochVector::new(c * a.x + s * a.z, a.y, -s * a.x + c * a.z);
                WeightedAxis {
                    weight: e.weight,
                    axis,
                }
            })
            .collect();
        Self {
            label: self.label.clone(),
            elements,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Two equal-weight antipodal elements: an ordinary projective measurement.
    pub fn is_projective(&self, tol: f64) -> bool {
        matches!(self.elements.as_slice(), [a, b]
            if (a.weight - 0.5).abs() <= tol
            && (b.weight - 0.5).abs() <= tol
            && (a.axis + b.axis).norm() <= tol)
    }

    /// Unit normal of the plane spanned by the axes, if they are not all collinear.
    pub fn plane_normal(&self) -> Option<BlochVector> {
        let axes: Vec<_> = self.axes().collect();
        for i in 0..axes.len() {
            for j in (i + 1)..axes.len() {
                let n = axes[i].cross(&axes[j]);
                if n.norm() > 1e-6 {
                    return n.normalized().ok();
                }
            }
        }
        None
    }

    /// Three elements forming a circular 2-design in their own plane.
    pub fn is_trine(&self, tol: f64) -> bool {
        self.len() == 3
            && self
                .plane_normal()
                .is_some_and(|n| is_circular_2design(self, &n, tol).unwrap_or(false))
    }
}

/// Checks the 1-design (POVM completeness) conditions.
pub fn validate_1design(set: &WeightedVectorSet, tol: f64) -> Result<DesignCheck> {
    if set.is_empty() {
        return Err(Error::EmptyDesign);
    }
    let weight_sum: f64 = set.weights().sum();
    let vector_sum = set
        .elements()
        .iter()
        .fold(BlochVector::ZERO, |acc, e| acc + e.axis.scale(e.weight));
    let weight_residual = (weight_sum - 1.0).abs();
    let vector_residual = vector_sum.norm();
    Ok(DesignCheck {
        is_valid: weight_residual <= tol && vector_residual <= tol,
        weight_residual,
        vector_residual,
    })
}

/// Fails unless `set` is a 1-design at [`DESIGN_TOL`].
pub fn require_1design(set: &WeightedVectorSet) -> Result<()> {
    let check = validate_1design(set, DESIGN_TOL)?;
    if check.is_valid {
        Ok(())
    } else {
        Err(Error::NotOneDesign {
            label: set.label.clone(),
            weight_residual: check.weight_residual,
            vector_residual: check.vector_residual,
        })
    }
}

/// Second-moment tensor `sum a_k A_k A_k^T`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentTensor(pub [[f64; 3]; 3]);

impl MomentTensor {
    pub fn trace(&self) -> f64 {
        (0..3).map(|i| self.0[i][i]).sum()
    }

    /// `tr[self * other]`.
    pub fn trace_product(&self, other: &Self) -> f64 {
        let mut t = 0.0;
        for i in 0..3 {
            for k in 0..3 {
                t += self.0[i][k] * other.0[k][i];
            }
        }
        t
    }

    pub fn apply(&self, v: &BlochVector) -> BlochVector {
        let v = v.components();
        let row = |i: usize| (0..3).map(|j| self.0[i][j] * v[j]).sum::<f64>();
        BlochVector::new(row(0), row(1), row(2))
    }

    /// `u^T M v`.
    pub fn bilinear(&self, u: &BlochVector, v: &BlochVector) -> f64 {
        u.dot(&self.apply(v))
    }

    pub fn max_abs_diff(&self, other: &[[f64; 3]; 3]) -> f64 {
        let mut d = 0.0_f64;
        for i in 0..3 {
            for j in 0..3 {
                d = d.max((self.0[i][j] - other[i][j]).abs());
            }
        }
        d
    }
}

/// Moment tensor of a valid 1-design; the trace is 1 by normalisation.
pub fn moment_tensor(set: &WeightedVectorSet) -> Result<MomentTensor> {
    require_1design(set)?;
    let mut m = [[0.0; 3]; 3];
    for e in set.elements() {
        let a = e.axis.components();
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += e.weight * a[i] * a[j];
            }
        }
    }
    Ok(MomentTensor(m))
}

/// `moment_tensor == I_3 / 3` within `tol`.
pub fn is_spherical_2design(set: &WeightedVectorSet, tol: f64) -> Result<bool> {
    let m = moment_tensor(set)?;
    let third = 1.0 / 3.0;
    let target = [[third, 0.0, 0.0], [0.0, third, 0.0], [0.0, 0.0, third]];
    Ok(m.max_abs_diff(&target) <= tol)
}

/// In-plane moment block equals `I_2 / 2` for the plane with the given normal.
///
/// Fails with [`Error::OutOfPlane`] if some axis is not orthogonal to `normal`.
pub fn is_circular_2design(
    set: &WeightedVectorSet,
    normal: &BlochVector,
    tol: f64,
) -> Result<bool> {
    let m = moment_tensor(set)?;
    let n = normal.normalized()?;
    let out_of_plane = set.axes().map(|a| a.dot(&n).abs()).fold(0.0, f64::max);
    if out_of_plane > tol {
        return Err(Error::OutOfPlane(out_of_plane));
    }
    let (e1, e2) = plane_basis(&n);
    let block = [
        [m.bilinear(&e1, &e1), m.bilinear(&e1, &e2)],
        [m.bilinear(&e2, &e1), m.bilinear(&e2, &e2)],
    ];
    let dev = [
        (block[0][0] - 0.5).abs(),
        block[0][1].abs(),
        block[1][0].abs(),
        (block[1][1] - 0.5).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    Ok(dev <= tol)
}

/// Orthonormal pair spanning the plane orthogonal to the unit vector `n`.
fn plane_basis(n: &BlochVector) -> (BlochVector, BlochVector) {
    let seed = if n.x.abs() < 0.9 {
        BlochVector::X
    } else {
        BlochVector::Z
    };
    let e1 = (seed - n.scale(seed.dot(n)))
        .normalized()
        .expect("seed not parallel to n");
    let e2 = n.cross(&e1);
    (e1, e2)
}

/// Trine measurement: weights 1/3 at Bloch angles `pi + theta + 2 pi m / 3`.
///
/// For `theta = 0` the first axis is `-z`, the Bloch vector of `|1>`.
pub fn trine_design(theta: f64) -> WeightedVectorSet {
    let elements = (0..3).map(|m| {
        (
            1.0 / 3.0,
            BlochVector::from_xz_angle(PI + theta + 2.0 * PI * m as f64 / 3.0),
        )
    });
    WeightedVectorSet::new(format!("trine({theta})"), elements).expect("trine is well formed")
}

/// Regular tetrahedron with equal weights 1/4: the smallest spherical 2-design.
pub fn tetrahedron() -> WeightedVectorSet {
    let s = 1.0 / sqrt(3.0);
    let v = [
        [1.0, 1.0, 1.0],
        [1.0, -1.0, -1.0],
        [-1.0, 1.0, -1.0],
        [-1.0, -1.0, 1.0],
    ];
    WeightedVectorSet::new(
        "tetrahedron",
        v.into_iter()
            .map(|[x, y, z]| (0.25, BlochVector::new(x * s, y * s, z * s))),
    )
    .expect("tetrahedron is well formed")
}

/// Projective measurement `{(1/2, u), (1/2, -u)}` with `u` at Bloch angle `theta` from `+z`.
pub fn projective_design(theta: f64) -> WeightedVectorSet {
    let u = BlochVector::from_xz_angle(theta);
    WeightedVectorSet::new(format!("projective({theta})"), [(0.5, u), (0.5, -u)])
        .expect("projective design is well formed")
}

/// Two Bloch-orthogonal projective settings at `theta` and `theta + pi/2`.
pub fn orthogonal_pair(theta: f64) -> [WeightedVectorSet; 2] {
    [
        projective_design(theta),
        projective_design(theta + FRAC_PI_2),
    ]
}

/// Outcome counts per setting, per party.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<u32>>", into = "Vec<Vec<u32>>")]
pub struct SettingStructure {
    parties: Vec<Vec<u32>>,
}

impl TryFrom<Vec<Vec<u32>>> for SettingStructure {
    type Error = Error;
    fn try_from(parties: Vec<Vec<u32>>) -> Result<Self> {
        Self::new(parties)
    }
}

impl From<SettingStructure> for Vec<Vec<u32>> {
    fn from(s: SettingStructure) -> Self {
        s.parties
    }
}

impl SettingStructure {
    pub fn new(parties: Vec<Vec<u32>>) -> Result<Self> {
        if parties.len() < 2 {
            return Err(Error::InvalidStructure(format!(
                "need at least 2 parties, got {}",
                parties.len()
            )));
        }
        for (p, settings) in parties.iter().enumerate() {
            if settings.is_empty() {
                return Err(Error::InvalidStructure(format!(
                    "party {p} has no settings"
                )));
            }
            if let Some(o) = settings.iter().find(|&&o| o < 2) {
                return Err(Error::InvalidStructure(format!(
                    "party {p} has a setting with {o} outcomes (need >= 2)"
                )));
            }
        }
        Ok(Self { parties })
    }

    /// Two settings with two outcomes each, for both parties.
    pub fn chsh() -> Self {
        Self::new(vec![vec![2, 2], vec![2, 2]]).unwrap()
    }

    /// Alice: two binary settings; Bob: one three-outcome setting.
    pub fn steering() -> Self {
        Self::new(vec![vec![2, 2], vec![3]]).unwrap()
    }

    /// One three-outcome setting per party.
    pub fn entanglement() -> Self {
        Self::new(vec![vec![3], vec![3]]).unwrap()
    }

    pub fn parties(&self) -> &[Vec<u32>] {
        &self.parties
    }
}

/// Number of distinct joint detection patterns `W = prod_p sum_s O_s`.
pub fn complexity_cost(s: &SettingStructure) -> u64 {
    s.parties
        .iter()
        .map(|settings| settings.iter().map(|&o| o as u64).sum::<u64>())
        .product()
}

impl core::fmt::Display for WeightedVectorSet {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{} [", self.label)?;
        for (i, e) in self.elements.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(
                f,
                "{:.6}@({:.6}, {:.6}, {:.6})",
                e.weight, e.axis.x, e.axis.y, e.axis.z
            )?;
        }
        write!(f, "]")
    }
}

/// Human-readable name of a standard design, used by the CLI.
pub fn standard_design(name: &str, theta: f64) -> Result<WeightedVectorSet> {
    match name {
        "trine" => Ok(trine_design(theta)),
        "tetrahedron" => Ok(tetrahedron().rotated_xz(theta)),
        "projective" => Ok(projective_design(theta)),
        other => Err(Error::DesignShape(format!(
            "unknown design `{other}` (expected trine, tetrahedron or projective)"
        ))),
    }
}
