//! Two-qubit density operators, the singlet/Werner family and noise channels.

use alloc::format;
use core::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::qcore::{
    paulis, rotation, sigma_along, tensor_product, BlochVector, Matrix2, Matrix4, C64,
    HERMITIAN_TOL, PSD_TOL,
};
use crate::{Error, Result};

const TRACE_TOL: f64 = 1e-12;

/// Validated two-qubit density operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoQubitState {
    matrix: Matrix4,
}

/// Normalized two-qubit pure state in the `|00>, |01>, |10>, |11>` basis.
pub type PureState = [C64; 4];

impl TwoQubitState {
    /// Checks Hermiticity, unit trace and positivity.
    pub fn new(matrix: Matrix4) -> Result<Self> {
        let dev = matrix.hermitian_deviation();
        if !dev.is_finite() {
            return Err(Error::NonFinite);
        }
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min = *matrix.eigenvalues()?.last().expect("4 eigenvalues");
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!(
                "minimum eigenvalue {min:e} is negative"
            )));
        }
        Ok(Self { matrix })
    }

    pub fn from_pure(psi: &PureState) -> Result<Self> {
        require_normalized(psi)?;
        Self::new(Matrix4::outer(psi, psi))
    }

    pub fn product(a: &Matrix2, b: &Matrix2) -> Result<Self> {
        Self::new(tensor_product(a, b))
    }

    pub fn maximally_mixed() -> Self {
        Self {
            matrix: Matrix4::identity().scale(0.25),
        }
    }

    pub fn matrix(&self) -> &Matrix4 {
        &self.matrix
    }

    /// Row-major `(re, im)` pairs, 16 entries.
    pub fn to_flat(&self) -> [[f64; 2]; 16] {
        let mut out = [[0.0; 2]; 16];
        for (slot, z) in out.iter_mut().zip(self.matrix.iter()) {
            *slot = [z.re, z.im];
        }
        out
    }

    pub fn from_flat(flat: &[[f64; 2]; 16]) -> Result<Self> {
        let mut rows = [[C64::new(0.0, 0.0); 4]; 4];
        for (i, [re, im]) in flat.iter().enumerate() {
            rows[i / 4][i % 4] = C64::new(*re, *im);
        }
        Self::new(Matrix4::from_rows(rows)?)
    }

    /// Convex mixture `(1 - p) self + p other`, `p` in `[0, 1]`.
    pub fn mix(&self, other: &Self, p: f64) -> Self {
        Self {
            matrix: self.matrix.scale(1.0 - p) + other.matrix.scale(p),
        }
    }
}

fn require_normalized(psi: &PureState) -> Result<()> {
    let n: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    if (n - 1.0).abs() > 1e-12 {
        Err(Error::NotNormalized(n))
    } else {
        Ok(())
    }
}

fn basis(amps: [f64; 4]) -> PureState {
    amps.map(|a| C64::new(a, 0.0))
}

/// `|Psi-> = (|01> - |10>)/sqrt 2`.
pub fn psi_minus() -> PureState {
    basis([0.0, FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0])
}

/// `|Psi+> = (|01> + |10>)/sqrt 2`.
pub fn psi_plus() -> PureState {
    basis([0.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0])
}

/// `|Phi+> = (|00> + |11>)/sqrt 2`.
pub fn phi_plus() -> PureState {
    basis([FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2])
}

/// `|Phi-> = (|00> - |11>)/sqrt 2`.
pub fn phi_minus() -> PureState {
    basis([FRAC_1_SQRT_2, 0.0, 0.0, -FRAC_1_SQRT_2])
}

/// `(1/4)(1 (x) 1 - sum_i sigma_i (x) sigma_i)`.
pub fn singlet() -> TwoQubitState {
    let one = Matrix2::identity();
    let m = paulis()
        .iter()
        .fold(tensor_product(&one, &one), |acc, s| {
            acc - tensor_product(s, s)
        })
        .scale(0.25);
    TwoQubitState { matrix: m }
}

/// `mu * singlet + (1 - mu) * 1/4`.
pub fn werner(mu: f64) -> Result<TwoQubitState> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::InvalidState(format!(
            "Werner parameter {mu} outside [0, 1]"
        )));
    }
    Ok(TwoQubitState::maximally_mixed().mix(&singlet(), mu))
}

/// `<psi| rho |psi>`.
pub fn fidelity(rho: &TwoQubitState, psi: &PureState) -> Result<f64> {
    require_normalized(psi)?;
    Ok(rho.matrix.expectation(psi).re.clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
}

/// Local unitary `exp(-i angle/2 axis . sigma)` on one party.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalRotation {
    pub axis: BlochVector,
    pub angle: f64,
    pub party: Party,
}

impl Default for LocalRotation {
    fn default() -> Self {
        Self {
            axis: BlochVector::Y,
            angle: 0.0,
            party: Party::B,
        }
    }
}

/// Imperfection budget, applied in the order depolarize, dephase, rotate.
///
/// * `depolarizing_p`: weight of the two-sided mix towards `1/4`.
/// * `dephasing_p`: weight of full dephasing of party B about `dephasing_axis`,
///   `rho -> (1 - p) rho + p (rho + U rho U)/2` with `U = 1 (x) axis . sigma`.
/// * `local_rotation`: unitary on one party.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSpec {
    pub depolarizing_p: f64,
    pub dephasing_p: f64,
    pub dephasing_axis: BlochVector,
    pub local_rotation: LocalRotation,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            depolarizing_p: 0.0,
            dephasing_p: 0.0,
            dephasing_axis: BlochVector::Z,
            local_rotation: LocalRotation::default(),
        }
    }
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn depolarizing(p: f64) -> Self {
        Self {
            depolarizing_p: p,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("depolarizing_p", self.depolarizing_p),
            ("dephasing_p", self.dephasing_p),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidNoise(format!("{name} = {p} outside [0, 1]")));
            }
        }
        self.dephasing_axis
            .require_unit()
            .map_err(|e| Error::InvalidNoise(format!("dephasing axis: {e}")))?;
        self.local_rotation
            .axis
            .require_unit()
            .map_err(|e| Error::InvalidNoise(format!("rotation axis: {e}")))?;
        if !self.local_rotation.angle.is_finite() {
            return Err(Error::InvalidNoise("rotation angle is not finite".into()));
        }
        Ok(())
    }
}

fn conjugate(m: &Matrix4, u: &Matrix4) -> Matrix4 {
    *u * *m * u.adjoint()
}

/// Applies depolarizing, then dephasing on B, then the local rotation.
pub fn apply_noise(rho: &TwoQubitState, spec: &NoiseSpec) -> Result<TwoQubitState> {
    spec.validate()?;
    let one = Matrix2::identity();
    let mut m = rho.matrix.scale(1.0 - spec.depolarizing_p)
        + Matrix4::identity().scale(0.25 * spec.depolarizing_p);

    if spec.dephasing_p > 0.0 {
        let u = tensor_product(&one, &sigma_along(&spec.dephasing_axis));
        let dephased = (m + conjugate(&m, &u)).scale(0.5);
        m = m.scale(1.0 - spec.dephasing_p) + dephased.scale(spec.dephasing_p);
    }

    let r = spec.local_rotation;
    if r.angle != 0.0 {
        let local = rotation(&r.axis, r.angle)?;
        let u = match r.party {
            Party::A => tensor_product(&local, &one),
            Party::B => tensor_product(&one, &local),
        };
        m = conjugate(&m, &u);
    }
    TwoQubitState::new(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn singlet_basics() {
        let s = singlet();
        assert!((s.matrix().trace().re - 1.0).abs() < 1e-15);
        assert!((fidelity(&s, &psi_minus()).unwrap() - 1.0).abs() < 1e-15);
        assert!(fidelity(&s, &phi_plus()).unwrap().abs() < 1e-15);
        assert!(TwoQubitState::new(*s.matrix()).is_ok());
    }

    #[test]
    fn werner_endpoints() {
        assert!(
            werner(1.0)
                .unwrap()
                .matrix()
                .max_abs_diff(singlet().matrix())
                < 1e-15
        );
        let mixed = werner(0.0).unwrap();
        assert!(
            mixed
                .matrix()
                .max_abs_diff(&Matrix4::from_real_diagonal([0.25; 4]))
                < 1e-15
        );
        assert!(werner(1.2).is_err());
        assert!(werner(-0.1).is_err());
    }

    #[test]
    fn werner_fidelity_is_affine() {
        for i in 0..=20 {
            let mu = i as f64 / 20.0;
            let f = fidelity(&werner(mu).unwrap(), &psi_minus()).unwrap();
            assert!((f - (1.0 + 3.0 * mu) / 4.0).abs() < 1e-14);
        }
    }

    #[test]
    fn mixed_state_fidelity_with_bell_states() {
        let m = TwoQubitState::maximally_mixed();
        for psi in [psi_minus(), psi_plus(), phi_plus(), phi_minus()] {
            assert!((fidelity(&m, &psi).unwrap() - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn fidelity_rejects_unnormalized() {
        let mut psi = psi_minus();
        psi[0] = C64::new(0.5, 0.0);
        assert!(matches!(
            fidelity(&singlet(), &psi),
            Err(Error::NotNormalized(_))
        ));
    }

    #[test]
    fn invalid_matrices_rejected() {
        let not_unit_trace = Matrix4::identity();
        assert!(matches!(
            TwoQubitState::new(not_unit_trace),
            Err(Error::InvalidState(_))
        ));
        let negative = Matrix4::from_real_diagonal([0.6, 0.6, -0.1, -0.1]);
        assert!(matches!(
            TwoQubitState::new(negative),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn zero_noise_is_identity_and_full_depolarizing_is_mixed() {
        let s = singlet();
        let same = apply_noise(&s, &NoiseSpec::none()).unwrap();
        assert!(same.matrix().max_abs_diff(s.matrix()) < 1e-15);
        let mixed = apply_noise(&s, &NoiseSpec::depolarizing(1.0)).unwrap();
        assert!(
            mixed
                .matrix()
                .max_abs_diff(TwoQubitState::maximally_mixed().matrix())
                < 1e-15
        );
    }

    #[test]
    fn noise_component_fidelities() {
        let s = singlet();
        // Depolarizing p: F = 1 - 3p/4.
        let f = fidelity(
            &apply_noise(&s, &NoiseSpec::depolarizing(0.2)).unwrap(),
            &psi_minus(),
        )
        .unwrap();
        assert!((f - 0.85).abs() < 1e-14);
        // Z-dephasing on B maps Psi- to -Psi+, so F = 1 - p/2.
        let spec = NoiseSpec {
            dephasing_p: 0.2,
            ..NoiseSpec::default()
        };
        let f = fidelity(&apply_noise(&s, &spec).unwrap(), &psi_minus()).unwrap();
        assert!((f - 0.9).abs() < 1e-14);
        // Rotation by alpha: F = cos^2(alpha/2).
        let spec = NoiseSpec {
            local_rotation: LocalRotation {
                axis: BlochVector::Y,
                angle: 0.3,
                party: Party::A,
            },
            ..NoiseSpec::default()
        };
        let f = fidelity(&apply_noise(&s, &spec).unwrap(), &psi_minus()).unwrap();
        assert!((f - libm::cos(0.15).powi(2)).abs() < 1e-14);
    }

    #[test]
    fn invalid_noise_rejected() {
        let s = singlet();
        assert!(apply_noise(&s, &NoiseSpec::depolarizing(1.5)).is_err());
        let spec = NoiseSpec {
            dephasing_axis: BlochVector::new(0.0, 0.0, 2.0),
            ..NoiseSpec::default()
        };
        assert!(matches!(
            apply_noise(&s, &spec),
            Err(Error::InvalidNoise(_))
        ));
    }

    #[test]
    fn flat_export_round_trip() {
        let w = werner(0.3).unwrap();
        let flat = w.to_flat();
        assert_eq!(flat.len(), 16);
        assert_eq!(flat[5], [w.matrix().get(1, 1).re, w.matrix().get(1, 1).im]);
        assert_eq!(TwoQubitState::from_flat(&flat).unwrap(), w);
    }

    #[test]
    fn noise_spec_json() {
        let spec: NoiseSpec = serde_json::from_str(
            r#"{"depolarizing_p":0.01,"dephasing_p":0.02,"dephasing_axis":[0,0,1],
                "local_rotation":{"axis":[0,1,0],"angle":0.1,"party":"B"}}"#,
        )
        .unwrap();
        assert_eq!(spec.local_rotation.party, Party::B);
        let partial: NoiseSpec = serde_json::from_str(r#"{"depolarizing_p":0.1}"#).unwrap();
        assert_eq!(partial.dephasing_axis, BlochVector::Z);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn noise_preserves_trace_and_positivity(
            dp in 0.0..=1.0f64, ph in 0.0..=1.0f64,
            polar in 0.0..core::f64::consts::PI, az in 0.0..core::f64::consts::TAU,
            rpolar in 0.0..core::f64::consts::PI, raz in 0.0..core::f64::consts::TAU,
            angle in -6.3..6.3f64, party_a in any::<bool>(), mu in 0.0..=1.0f64,
        ) {
            let spec = NoiseSpec {
                depolarizing_p: dp,
                dephasing_p: ph,
                dephasing_axis: BlochVector::from_spherical(polar, az),
                local_rotation: LocalRotation {
                    axis: BlochVector::from_spherical(rpolar, raz),
                    angle,
                    party: if party_a { Party::A } else { Party::B },
                },
            };
            let out = apply_noise(&werner(mu).unwrap(), &spec).unwrap();
            prop_assert!((out.matrix().trace().re - 1.0).abs() <= 1e-12);
            prop_assert!(out.matrix().is_psd());
        }
    }
}
