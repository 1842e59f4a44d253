//! Biphoton qutrit states, their two-qubit polarization embedding, and the
//! triplet/singlet decomposition.
//!
//! Basis orderings are fixed globally: qutrit `{|2,0>, |1,1>, |0,2>}` and
//! two-qubit `{|hh>, |hv>, |vh>, |vv>}`. Global phases are never observable;
//! comparisons go through `|<a|b>|`.

use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{eig_hermitian, CMatrix};

const NORM_TOL: f64 = 1e-10;
const SQRT_HALF: f64 = core::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateError {
    NotNormalized,
    UnknownName,
    InvalidDensity,
    NotUnitary,
}

impl fmt::Display for StateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateError::NotNormalized => write!(f, "state vector is not normalized"),
            StateError::UnknownName => write!(f, "unknown basis state name"),
            StateError::InvalidDensity => write!(f, "matrix is not a valid density operator"),
            StateError::NotUnitary => write!(f, "matrix is not unitary"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for StateError {}

/// Pure biphoton qutrit over `{|2,0>, |1,1>, |0,2>}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QutritState {
    amps: [Complex64; 3],
}

impl QutritState {
    pub fn new(amps: [Complex64; 3]) -> Result<Self, StateError> {
        let norm_sqr: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(StateError::NotNormalized);
        }
        Ok(QutritState { amps })
    }

    /// Normalizes an arbitrary nonzero amplitude triple.
    pub fn from_unnormalized(amps: [Complex64; 3]) -> Result<Self, StateError> {
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-14 {
            return Err(StateError::NotNormalized);
        }
        Ok(QutritState {
            amps: [amps[0] / norm, amps[1] / norm, amps[2] / norm],
        })
    }

    pub fn amps(&self) -> &[Complex64; 3] {
        &self.amps
    }

    pub fn inner(&self, other: &QutritState) -> Complex64 {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Phase-invariant overlap `|<self|other>|`.
    pub fn overlap(&self, other: &QutritState) -> f64 {
        self.inner(other).norm()
    }
}

/// Single-photon polarization Jones vector `(h, v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationState {
    amps: [Complex64; 2],
}

impl PolarizationState {
    pub fn new(amps: [Complex64; 2]) -> Result<Self, StateError> {
        let norm_sqr: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(StateError::NotNormalized);
        }
        Ok(PolarizationState { amps })
    }

    pub fn from_unnormalized(amps: [Complex64; 2]) -> Result<Self, StateError> {
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-14 {
            return Err(StateError::NotNormalized);
        }
        Ok(PolarizationState {
            amps: [amps[0] / norm, amps[1] / norm],
        })
    }

    pub fn horizontal() -> Self {
        PolarizationState {
            amps: [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        }
    }

    pub fn vertical() -> Self {
        PolarizationState {
            amps: [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        }
    }

    pub fn diagonal_plus() -> Self {
        PolarizationState {
            amps: [Complex64::new(SQRT_HALF, 0.0), Complex64::new(SQRT_HALF, 0.0)],
        }
    }

    pub fn diagonal_minus() -> Self {
        PolarizationState {
            amps: [Complex64::new(SQRT_HALF, 0.0), Complex64::new(-SQRT_HALF, 0.0)],
        }
    }

    pub fn circular_right() -> Self {
        PolarizationState {
            amps: [Complex64::new(SQRT_HALF, 0.0), Complex64::new(0.0, SQRT_HALF)],
        }
    }

    pub fn circular_left() -> Self {
        PolarizationState {
            amps: [Complex64::new(SQRT_HALF, 0.0), Complex64::new(0.0, -SQRT_HALF)],
        }
    }

    pub fn amps(&self) -> &[Complex64; 2] {
        &self.amps
    }

    pub fn inner(&self, other: &PolarizationState) -> Complex64 {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn overlap(&self, other: &PolarizationState) -> f64 {
        self.inner(other).norm()
    }
}

/// 4x4 two-photon polarization density operator over `{|hh>,|hv>,|vh>,|vv>}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhotonDensity {
    matrix: CMatrix,
}

impl TwoPhotonDensity {
    /// Validates Hermiticity, positivity, and unit trace. Eigenvalues in
    /// `[-1e-10, 0)` are clipped to zero and the operator renormalized.
    pub fn new(matrix: CMatrix) -> Result<Self, StateError> {
        if matrix.rows() != 4 || matrix.cols() != 4 {
            return Err(StateError::InvalidDensity);
        }
        if !matrix.is_hermitian(NORM_TOL) {
            return Err(StateError::InvalidDensity);
        }
        if (matrix.trace().re - 1.0).abs() > NORM_TOL {
            return Err(StateError::InvalidDensity);
        }
        let (vals, vecs) = eig_hermitian(&matrix).map_err(|_| StateError::InvalidDensity)?;
        if vals.iter().any(|&v| v < -NORM_TOL) {
            return Err(StateError::InvalidDensity);
        }
        if vals.iter().any(|&v| v < 0.0) {
            // Numerical PSD drift: clip and renormalize.
            let clipped: Vec<f64> = vals.iter().map(|&v| v.max(0.0)).collect();
            let total: f64 = clipped.iter().sum();
            let d = CMatrix::diag(
                &clipped
                    .iter()
                    .map(|&v| Complex64::new(v / total, 0.0))
                    .collect::<Vec<_>>(),
            );
            let m = &(&vecs * &d) * &vecs.adjoint();
            return Ok(TwoPhotonDensity { matrix: m });
        }
        Ok(TwoPhotonDensity { matrix })
    }

    /// Pure-state density `|psi><psi|` from a normalized 4-vector.
    pub fn from_pure(psi: &[Complex64; 4]) -> Result<Self, StateError> {
        let norm_sqr: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(StateError::NotNormalized);
        }
        Ok(TwoPhotonDensity {
            matrix: CMatrix::outer(psi),
        })
    }

    /// Maximally mixed two-qubit state `I/4`.
    pub fn maximally_mixed() -> Self {
        TwoPhotonDensity {
            matrix: CMatrix::identity(4).scale(Complex64::new(0.25, 0.0)),
        }
    }

    /// Convex mixture `w a + (1-w) b`.
    pub fn mix(a: &TwoPhotonDensity, b: &TwoPhotonDensity, w: f64) -> Self {
        assert!((0.0..=1.0).contains(&w));
        let m = &a.matrix.scale(Complex64::new(w, 0.0))
            + &b.matrix.scale(Complex64::new(1.0 - w, 0.0));
        TwoPhotonDensity { matrix: m }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
}

/// Singlet Bell vector `(|hv> - |vh>)/sqrt(2)`.
pub fn singlet_vector() -> [Complex64; 4] {
    let z = Complex64::new(0.0, 0.0);
    [z, Complex64::new(SQRT_HALF, 0.0), Complex64::new(-SQRT_HALF, 0.0), z]
}

/// Symmetric-subspace basis vectors in the two-qubit space, matching the
/// qutrit ordering: `|hh>`, `(|hv>+|vh>)/sqrt(2)`, `|vv>`.
pub fn triplet_vectors() -> [[Complex64; 4]; 3] {
    let z = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let s = Complex64::new(SQRT_HALF, 0.0);
    [[one, z, z, z], [z, s, s, z], [z, z, z, one]]
}

/// Triplet block, singlet population, and the coherence between them.
#[derive(Debug, Clone)]
pub struct SymmetricDecomposition {
    /// `P_sym rho P_sym` in the qutrit basis, unnormalized: its trace is the
    /// triplet population.
    pub qutrit_block: CMatrix,
    pub singlet_population: f64,
    /// Frobenius norm of the triplet-singlet off-diagonal block.
    pub cross_coherence_norm: f64,
}

/// Named neutrally polarized basis states plus the extremal `|2,0>`, `|0,2>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisState {
    PsiHv,
    PsiPm,
    PsiRl,
    TwoZero,
    ZeroTwo,
}

impl core::str::FromStr for BasisState {
    type Err = StateError;
    fn from_str(s: &str) -> Result<Self, StateError> {
        match s {
            "psi-hv" | "psi_hv" => Ok(BasisState::PsiHv),
            "psi-pm" | "psi_pm" => Ok(BasisState::PsiPm),
            "psi-rl" | "psi_rl" => Ok(BasisState::PsiRl),
            "2,0" | "2_0" => Ok(BasisState::TwoZero),
            "0,2" | "0_2" => Ok(BasisState::ZeroTwo),
            _ => Err(StateError::UnknownName),
        }
    }
}

pub fn basis_state(name: BasisState) -> QutritState {
    let z = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let s = Complex64::new(SQRT_HALF, 0.0);
    let amps = match name {
        BasisState::PsiHv => [z, one, z],
        BasisState::PsiPm => [s, z, -s],
        BasisState::PsiRl => [s, z, s],
        BasisState::TwoZero => [one, z, z],
        BasisState::ZeroTwo => [z, z, one],
    };
    QutritState { amps }
}

/// State emitted by the two-crystal source: `cos(2d)|2,0> + sin(2d)e^{i phi}|0,2>`
/// with the pump HWP at `delta` and compensator phase `phi`, both in degrees.
pub fn source_state(delta_deg: f64, phi_deg: f64) -> QutritState {
    let d = 2.0 * delta_deg.to_radians();
    let phi = phi_deg.to_radians();
    let amps = [
        Complex64::new(d.cos(), 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::from_polar(d.sin(), phi),
    ];
    QutritState::from_unnormalized(amps).expect("source amplitudes are never all zero")
}

/// Embeds a pure qutrit into the two-qubit symmetric subspace:
/// `|2,0> -> |hh>`, `|1,1> -> (|hv>+|vh>)/sqrt(2)`, `|0,2> -> |vv>`.
pub fn qutrit_to_density(q: &QutritState) -> TwoPhotonDensity {
    let a = q.amps();
    let s = Complex64::new(SQRT_HALF, 0.0);
    let psi = [a[0], a[1] * s, a[1] * s, a[2]];
    TwoPhotonDensity {
        matrix: CMatrix::outer(&psi),
    }
}

/// Splits a density operator into its triplet block (in the qutrit basis),
/// the singlet population, and the norm of the cross block.
pub fn decompose(rho: &TwoPhotonDensity) -> SymmetricDecomposition {
    let m = rho.matrix();
    let triplet = triplet_vectors();
    let singlet = singlet_vector();

    let mut block = CMatrix::zeros(3, 3);
    for i in 0..3 {
        for j in 0..3 {
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..4 {
                for c in 0..4 {
                    acc += triplet[i][r].conj() * m[(r, c)] * triplet[j][c];
                }
            }
            block[(i, j)] = acc;
        }
    }
    let singlet_population = m.quadratic_form(&singlet).re;
    let mut cross_sqr = 0.0;
    for i in 0..3 {
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..4 {
            for c in 0..4 {
                acc += triplet[i][r].conj() * m[(r, c)] * singlet[c];
            }
        }
        cross_sqr += acc.norm_sqr();
    }
    SymmetricDecomposition {
        qutrit_block: block,
        singlet_population,
        cross_coherence_norm: cross_sqr.sqrt(),
    }
}

/// `|<S_z>|` with `S_z = diag(+1, 0, -1)` in the qutrit basis; zero exactly
/// for neutrally polarized states.
pub fn neutral_polarization_defect(q: &QutritState) -> f64 {
    let a = q.amps();
    (a[0].norm_sqr() - a[2].norm_sqr()).abs()
}

/// Spin-1 lift of a single-photon unitary: the action of `u (x) u` restricted
/// to the symmetric subspace, expressed in the qutrit basis.
pub fn lift_unitary(u: &CMatrix) -> Result<CMatrix, StateError> {
    if u.rows() != 2 || u.cols() != 2 || !u.is_unitary(NORM_TOL) {
        return Err(StateError::NotUnitary);
    }
    let uu = crate::linalg::kron(u, u);
    let triplet = triplet_vectors();
    let mut out = CMatrix::zeros(3, 3);
    for j in 0..3 {
        let col = uu.apply(&triplet[j]);
        for i in 0..3 {
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..4 {
                acc += triplet[i][r].conj() * col[r];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// `Tr(rho^2)`.
pub fn purity(rho: &TwoPhotonDensity) -> f64 {
    let m = rho.matrix();
    (m * m).trace().re
}

/// `<psi| rho |psi>` for a rank-1 reference density.
pub fn fidelity_to_pure(
    rho: &TwoPhotonDensity,
    psi: &TwoPhotonDensity,
) -> Result<f64, StateError> {
    if (purity(psi) - 1.0).abs() > 1e-8 {
        return Err(StateError::InvalidDensity);
    }
    Ok((rho.matrix() * psi.matrix()).trace().re)
}
