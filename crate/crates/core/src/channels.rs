//! The three unital single-photon noise channels and their two-photon
//! application, plus the noise-probability calibration formulas.
//!
//! Pauli assignment: `sigma_1 = diag(1,-1)` (phase flip in the h/v basis),
//! `sigma_2` the x flip, `sigma_3` the y flip. The physical dephasing element
//! is a quartz-wedge delay of h against v, i.e. pure phase damping in the
//! computational basis, which this assignment reproduces.

use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{kron, pauli, CMatrix};
use crate::states::TwoPhotonDensity;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelError {
    InvalidP,
    UnknownKind,
    OutOfDomain,
}

impl fmt::Display for ChannelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelError::InvalidP => write!(f, "noise probability must lie in [0, 1]"),
            ChannelError::UnknownKind => write!(f, "unknown channel kind"),
            ChannelError::OutOfDomain => write!(f, "purity outside the invertible domain"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ChannelError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    Dephasing,
    TwoField,
    Isotropic,
}

impl ChannelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ChannelKind::Dephasing => "dephasing",
            ChannelKind::TwoField => "two-field",
            ChannelKind::Isotropic => "isotropic",
        }
    }

    /// Largest physically swept noise probability for this kind.
    pub fn physical_p_max(&self) -> f64 {
        match self {
            ChannelKind::Dephasing => 0.5,
            ChannelKind::TwoField => 1.0,
            ChannelKind::Isotropic => 0.75,
        }
    }
}

/// A channel kind together with its noise probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSpec {
    pub kind: ChannelKind,
    pub p: f64,
}

impl ChannelSpec {
    pub fn new(kind: ChannelKind, p: f64) -> Result<Self, ChannelError> {
        if !(0.0..=1.0).contains(&p) || !p.is_finite() {
            return Err(ChannelError::InvalidP);
        }
        Ok(ChannelSpec { kind, p })
    }
}

/// Parses CLI strings of the form `dephasing:0.2`, `two-field:0.3`,
/// `isotropic:0.1`.
impl core::str::FromStr for ChannelSpec {
    type Err = ChannelError;
    fn from_str(s: &str) -> Result<Self, ChannelError> {
        let (kind_str, p_str) = s.split_once(':').ok_or(ChannelError::UnknownKind)?;
        let kind = match kind_str {
            "dephasing" => ChannelKind::Dephasing,
            "two-field" => ChannelKind::TwoField,
            "isotropic" => ChannelKind::Isotropic,
            _ => return Err(ChannelError::UnknownKind),
        };
        let p: f64 = p_str.parse().map_err(|_| ChannelError::InvalidP)?;
        ChannelSpec::new(kind, p)
    }
}

/// Kraus operators of a single-photon channel.
#[derive(Debug, Clone)]
pub struct KrausSet {
    ops: Vec<CMatrix>,
}

impl KrausSet {
    pub fn ops(&self) -> &[CMatrix] {
        &self.ops
    }

    /// Max deviation of `sum K† K` from the identity.
    pub fn completeness_defect(&self) -> f64 {
        let mut acc = CMatrix::zeros(2, 2);
        for k in &self.ops {
            acc = &acc + &(&k.adjoint() * k);
        }
        acc.max_abs_diff(&CMatrix::identity(2))
    }

    /// Max deviation of `sum K K†` from the identity.
    pub fn unitality_defect(&self) -> f64 {
        let mut acc = CMatrix::zeros(2, 2);
        for k in &self.ops {
            acc = &acc + &(k * &k.adjoint());
        }
        acc.max_abs_diff(&CMatrix::identity(2))
    }
}

/// Kraus operators for the requested channel:
/// dephasing `{sqrt(1-P) I, sqrt(P) s1}`, two-field
/// `{sqrt(1-P) I, sqrt(P/2) s1, sqrt(P/2) s2}`, isotropic
/// `{sqrt(1-P) I, sqrt(P/3) s1, sqrt(P/3) s2, sqrt(P/3) s3}`.
pub fn kraus_set(spec: &ChannelSpec) -> KrausSet {
    let p = spec.p;
    let id = CMatrix::identity(2);
    let re = |x: f64| Complex64::new(x, 0.0);
    // sigma_1 = phase flip, sigma_2 = x flip, sigma_3 = y flip.
    let s1 = pauli(2);
    let s2 = pauli(0);
    let s3 = pauli(1);
    let mut ops = Vec::new();
    ops.push(id.scale(re((1.0 - p).sqrt())));
    match spec.kind {
        ChannelKind::Dephasing => {
            ops.push(s1.scale(re(p.sqrt())));
        }
        ChannelKind::TwoField => {
            ops.push(s1.scale(re((p / 2.0).sqrt())));
            ops.push(s2.scale(re((p / 2.0).sqrt())));
        }
        ChannelKind::Isotropic => {
            ops.push(s1.scale(re((p / 3.0).sqrt())));
            ops.push(s2.scale(re((p / 3.0).sqrt())));
            ops.push(s3.scale(re((p / 3.0).sqrt())));
        }
    }
    // Drop identically zero operators (P = 0 or P = 1 endpoints).
    ops.retain(|k| k.frobenius_norm() > 0.0);
    KrausSet { ops }
}

/// Applies the channel to a single-qubit operator: `sum K rho K†`.
pub fn apply_single_qubit(rho: &CMatrix, spec: &ChannelSpec) -> CMatrix {
    assert_eq!((rho.rows(), rho.cols()), (2, 2));
    let kraus = kraus_set(spec);
    let mut out = CMatrix::zeros(2, 2);
    for k in kraus.ops() {
        out = &out + &(&(k * rho) * &k.adjoint());
    }
    out
}

/// Applies the channel independently to both photons:
/// `rho' = sum_{ij} (K_i (x) K_j) rho (K_i (x) K_j)†`.
pub fn apply_two_photon(rho: &TwoPhotonDensity, spec: &ChannelSpec) -> TwoPhotonDensity {
    let kraus = kraus_set(spec);
    let mut out = CMatrix::zeros(4, 4);
    for ki in kraus.ops() {
        for kj in kraus.ops() {
            let op = kron(ki, kj);
            out = &out + &(&(&op * rho.matrix()) * &op.adjoint());
        }
    }
    TwoPhotonDensity::new(out).expect("Kraus application preserves density validity")
}

/// Wave-plate calibration for the two- and three-field channels:
/// `P = sin^2(2 theta)`.
pub fn p_from_hwp_angle(theta_deg: f64) -> f64 {
    let s = (2.0 * theta_deg.to_radians()).sin();
    s * s
}

/// Inverts the dephasing purity relation `2 Pi - 1 = (1 - 2P)^4`,
/// i.e. `P = (1 - (2 Pi - 1)^{1/4}) / 2`, valid on an ideal input with
/// `P <= 0.5`.
pub fn p_from_purity(pi: f64) -> Result<f64, ChannelError> {
    let x = 2.0 * pi - 1.0;
    if x <= 0.0 || pi > 1.0 + 1e-12 {
        return Err(ChannelError::OutOfDomain);
    }
    Ok((1.0 - x.min(1.0).powf(0.25)) / 2.0)
}
