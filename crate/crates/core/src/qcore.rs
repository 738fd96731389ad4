//! Exact complex linear algebra for single- and two-qubit operators.
//!
//! Everything here is fixed-size: [`Matrix2`] for one qubit and [`Matrix4`]
//! for two. Two-qubit matrices use the Kronecker convention
//! `row = 2 * i_alice + i_bob`, i.e. `|00>, |01>, |10>, |11>` with Alice's
//! qubit as the most significant index.

use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::math::{atan2, cos, sin, sqrt};
use crate::{Error, Result};

/// Entrywise tolerance for Hermitian-flagged matrices.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance on the norm of unit Bloch vectors.
pub const UNIT_TOL: f64 = 1e-12;
/// Smallest eigenvalue still accepted as positive semidefinite.
pub const PSD_TOL: f64 = 1e-10;

pub type C64 = Complex64;

const fn c(re: f64, im: f64) -> C64 {
    Complex64::new(re, im)
}

const ZERO: C64 = c(0.0, 0.0);
const ONE: C64 = c(1.0, 0.0);

/// Dense `N x N` complex matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CMatrix<const N: usize> {
    entries: [[C64; N]; N],
}

pub type Matrix2 = CMatrix<2>;
pub type Matrix4 = CMatrix<4>;

impl<const N: usize> CMatrix<N> {
    pub fn zeros() -> Self {
        Self {
            entries: [[ZERO; N]; N],
        }
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            m.entries[i][i] = ONE;
        }
        m
    }

    /// Builds a matrix from rows, rejecting NaN or infinite entries.
    pub fn from_rows(entries: [[C64; N]; N]) -> Result<Self> {
        let m = Self { entries };
        if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            Ok(m)
        } else {
            Err(Error::NonFinite)
        }
    }

    pub fn from_real_diagonal(diag: [f64; N]) -> Self {
        let mut m = Self::zeros();
        for (i, d) in diag.into_iter().enumerate() {
            m.entries[i][i] = c(d, 0.0);
        }
        m
    }

    /// Outer product `|u><v|`.
    pub fn outer(u: &[C64; N], v: &[C64; N]) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.entries[i][j] = u[i] * v[j].conj();
            }
        }
        m
    }

    pub fn entries(&self) -> &[[C64; N]; N] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[row][col]
    }

    pub fn iter(&self) -> impl Iterator<Item = &C64> {
        self.entries.iter().flat_map(|r| r.iter())
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.entries[i][j] = self.entries[j][i].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> C64 {
        (0..N).map(|i| self.entries[i][i]).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        self.map(|z| z * s)
    }

    fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        let mut m = *self;
        m.entries.iter_mut().flatten().for_each(|z| *z = f(*z));
        m
    }

    /// `Tr[self * other]` without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        let mut t = ZERO;
        for i in 0..N {
            for k in 0..N {
                t += self.entries[i][k] * other.entries[k][i];
            }
        }
        t
    }

    /// `<v| self |v>`.
    pub fn expectation(&self, v: &[C64; N]) -> C64 {
        let mut t = ZERO;
        for i in 0..N {
            for j in 0..N {
                t += v[i].conj() * self.entries[i][j] * v[j];
            }
        }
        t
    }

    /// Largest entrywise modulus of `M - M^dagger`.
    pub fn hermitian_deviation(&self) -> f64 {
        let mut dev = 0.0_f64;
        for i in 0..N {
            for j in 0..N {
                dev = dev.max((self.entries[i][j] - self.entries[j][i].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.iter()
            .zip(other.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Eigenvalues in descending order; see [`eigenvalues_hermitian`].
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        eigenvalues_hermitian(self)
    }

    /// Hermitian and every eigenvalue at least `-PSD_TOL`.
    pub fn is_psd(&self) -> bool {
        match eigenvalues_hermitian(self) {
            Ok(ev) => ev.last().is_some_and(|&l| l >= -PSD_TOL),
            Err(_) => false,
        }
    }
}

impl<const N: usize> Default for CMatrix<N> {
    fn default() -> Self {
        Self::zeros()
    }
}

impl<const N: usize> Add for CMatrix<N> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for i in 0..N {
            for j in 0..N {
                self.entries[i][j] += rhs.entries[i][j];
            }
        }
        self
    }
}

impl<const N: usize> Sub for CMatrix<N> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for i in 0..N {
            for j in 0..N {
                self.entries[i][j] -= rhs.entries[i][j];
            }
        }
        self
    }
}

impl<const N: usize> Neg for CMatrix<N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.map(|z| -z)
    }
}

impl<const N: usize> Mul for CMatrix<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for k in 0..N {
                let a = self.entries[i][k];
                for j in 0..N {
                    m.entries[i][j] += a * rhs.entries[k][j];
                }
            }
        }
        m
    }
}

/// Real 3-vector on (or inside) the Bloch sphere.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<[f64; 3]> for BlochVector {
    fn from([x, y, z]: [f64; 3]) -> Self {
        Self { x, y, z }
    }
}

impl From<BlochVector> for [f64; 3] {
    fn from(v: BlochVector) -> Self {
        [v.x, v.y, v.z]
    }
}

impl BlochVector {
    pub const X: Self = Self::new(1.0, 0.0, 0.0);
    pub const Y: Self = Self::new(0.0, 1.0, 0.0);
    pub const Z: Self = Self::new(0.0, 0.0, 1.0);
    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Unit vector in the x-z plane at Bloch angle `angle` from `+z` towards `+x`.
    pub fn from_xz_angle(angle: f64) -> Self {
        Self::new(sin(angle), 0.0, cos(angle))
    }

    /// Point on the unit sphere from polar angle (from `+z`) and azimuth (from `+x`).
    pub fn from_spherical(polar: f64, azimuth: f64) -> Self {
        Self::new(
            sin(polar) * cos(azimuth),
            sin(polar) * sin(azimuth),
            cos(polar),
        )
    }

    /// Angle in the x-z plane, inverse of [`BlochVector::from_xz_angle`].
    pub fn xz_angle(&self) -> f64 {
        atan2(self.x, self.z)
    }

    pub fn components(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(&self, o: &Self) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(&self, o: &Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(&self) -> f64 {
        sqrt(self.dot(self))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn is_unit(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    /// Fails with [`Error::NonUnitAxis`] unless the norm is within [`UNIT_TOL`] of one.
    pub fn require_unit(&self) -> Result<()> {
        let n = self.norm();
        if n.is_finite() && (n - 1.0).abs() <= UNIT_TOL {
            Ok(())
        } else {
            Err(Error::NonUnitAxis(n))
        }
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Ok(self.scale(1.0 / n))
        } else {
            Err(Error::NonUnitAxis(n))
        }
    }

    /// Bloch vector of a normalized pure qubit state.
    pub fn of_pure_state(psi: &[C64; 2]) -> Self {
        let (a, b) = (psi[0], psi[1]);
        let ab = a.conj() * b;
        Self::new(2.0 * ab.re, 2.0 * ab.im, a.norm_sqr() - b.norm_sqr())
    }

    /// Pure state `cos(t/2)|0> + e^{i phi} sin(t/2)|1>` with this (unit) Bloch vector.
    pub fn to_pure_state(&self) -> [C64; 2] {
        let polar = crate::math::acos(self.z.clamp(-1.0, 1.0));
        let azimuth = atan2(self.y, self.x);
        let h = polar / 2.0;
        [
            c(cos(h), 0.0),
            c(cos(azimuth) * sin(h), sin(azimuth) * sin(h)),
        ]
    }
}

impl Add for BlochVector {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for BlochVector {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for BlochVector {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

pub fn pauli_x() -> Matrix2 {
    CMatrix {
        entries: [[ZERO, ONE], [ONE, ZERO]],
    }
}

pub fn pauli_y() -> Matrix2 {
    CMatrix {
        entries: [[ZERO, c(0.0, -1.0)], [c(0.0, 1.0), ZERO]],
    }
}

pub fn pauli_z() -> Matrix2 {
    CMatrix::from_real_diagonal([1.0, -1.0])
}

/// `(sigma_x, sigma_y, sigma_z)`.
pub fn paulis() -> [Matrix2; 3] {
    [pauli_x(), pauli_y(), pauli_z()]
}

/// `scalar * 1 + v . sigma`.
pub fn from_pauli(scalar: f64, v: &BlochVector) -> Matrix2 {
    CMatrix {
        entries: [
            [c(scalar + v.z, 0.0), c(v.x, -v.y)],
            [c(v.x, v.y), c(scalar - v.z, 0.0)],
        ],
    }
}

/// Pauli coefficients `((1/2) Tr M, (1/2) Tr[M sigma_i])` of a Hermitian 2x2 matrix.
pub fn pauli_coefficients(m: &Matrix2) -> (f64, BlochVector) {
    let [sx, sy, sz] = paulis();
    (
        0.5 * m.trace().re,
        BlochVector::new(
            0.5 * m.trace_product(&sx).re,
            0.5 * m.trace_product(&sy).re,
            0.5 * m.trace_product(&sz).re,
        ),
    )
}

/// `n . sigma` for a Bloch direction `n`.
pub fn sigma_along(n: &BlochVector) -> Matrix2 {
    from_pauli(0.0, n)
}

/// Sharp POVM element `weight * (1 + axis . sigma)`.
pub fn effect_from_bloch(weight: f64, axis: &BlochVector) -> Result<Matrix2> {
    if !(weight > 0.0 && weight.is_finite()) {
        return Err(Error::NonPositiveWeight(weight));
    }
    axis.require_unit()?;
    Ok(from_pauli(1.0, axis).scale(weight))
}

/// Single-qubit rotation `exp(-i angle/2 n . sigma)`.
pub fn rotation(axis: &BlochVector, angle: f64) -> Result<Matrix2> {
    axis.require_unit()?;
    let (ch, sh) = (cos(angle / 2.0), sin(angle / 2.0));
    Ok(Matrix2::identity().scale(ch) - sigma_along(axis).scale_complex(c(0.0, sh)))
}

/// Kronecker product `a (x) b` with `row = 2 * i_a + i_b`.
pub fn tensor_product(a: &Matrix2, b: &Matrix2) -> Matrix4 {
    let mut m = Matrix4::zeros();
    for ia in 0..2 {
        for ja in 0..2 {
            for ib in 0..2 {
                for jb in 0..2 {
                    m.entries[2 * ia + ib][2 * ja + jb] = a.entries[ia][ja] * b.entries[ib][jb];
                }
            }
        }
    }
    m
}

/// Reduced state of the first (Alice's) qubit.
pub fn partial_trace_b(m: &Matrix4) -> Matrix2 {
    let mut r = Matrix2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            r.entries[i][j] = (0..2).map(|k| m.entries[2 * i + k][2 * j + k]).sum();
        }
    }
    r
}

/// Reduced state of the second (Bob's) qubit.
pub fn partial_trace_a(m: &Matrix4) -> Matrix2 {
    let mut r = Matrix2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            r.entries[i][j] = (0..2).map(|k| m.entries[2 * k + i][2 * k + j]).sum();
        }
    }
    r
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Real eigenvalues of a Hermitian matrix, sorted descending.
///
/// The `N x N` Hermitian `H = X + iY` is embedded as the real symmetric
/// `[[X, -Y], [Y, X]]`, whose spectrum is that of `H` with every eigenvalue
/// doubled, and diagonalised with cyclic Jacobi rotations.
pub fn eigenvalues_hermitian<const N: usize>(m: &CMatrix<N>) -> Result<Vec<f64>> {
    assert!(N <= 4, "eigenvalues_hermitian supports up to 4x4");
    let dev = m.hermitian_deviation();
    if !dev.is_finite() {
        return Err(Error::NonFinite);
    }
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian(dev));
    }
    let n = 2 * N;
    let mut a = [[0.0_f64; 8]; 8];
    for i in 0..N {
        for j in 0..N {
            // Symmetrise so rounding noise in the imaginary diagonal drops out.
            let h = (m.entries[i][j] + m.entries[j][i].conj()) * 0.5;
            a[i][j] = h.re;
            a[i + N][j + N] = h.re;
            a[i][j + N] = -h.im;
            a[i + N][j] = h.im;
        }
    }
    let scale: f64 = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| a[i][j] * a[i][j])
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off <= 1e-30 * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / sqrt(t * t + 1.0);
                let sn = t * cs;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = cs * akp - sn * akq;
                    a[k][q] = sn * akp + cs * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = cs * apk - sn * aqk;
                    a[q][k] = sn * apk + cs * aqk;
                }
            }
        }
    }
    if !converged {
        return Err(Error::Numerical(
            "Jacobi eigenvalue iteration did not converge".into(),
        ));
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    Ok(ev.into_iter().step_by(2).collect())
}
