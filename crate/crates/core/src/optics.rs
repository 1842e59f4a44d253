//! Jones calculus for the projection stage: wave-plate matrices, Stokes
//! vectors, and the compiler from an orthogonal polarization pair to the
//! QWP-HWP-QWP triple that rotates it onto (h, v).
//!
//! Conventions: QWP = diag(1, -i) and HWP = diag(1, -1) in the fast-axis
//! frame with a counterclockwise axis rotation; `|h>` sits at the +3 pole
//! of the Poincare sphere so the h-v line is the s3 axis.

use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{local_search_max, CMatrix, OptimizerConfig};
use crate::protocol::{majorana_decompose, ProjectionPair};
use crate::states::PolarizationState;
use crate::witnesses::Quintuplet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpticsError {
    NoConvergence,
    DegeneratePair,
}

impl fmt::Display for OpticsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OpticsError::NoConvergence => {
                write!(f, "wave-plate search did not reach the residual target")
            }
            OpticsError::DegeneratePair => {
                write!(f, "quintuplet state has no orthogonal Majorana pair")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for OpticsError {}

/// Fast-axis angles (degrees from horizontal) of the projection triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavePlateSetting {
    pub qwp_a: f64,
    pub hwp: f64,
    pub qwp_b: f64,
}

/// Poincare-sphere coordinates `(s1, s2, s3) = (<x>, <y>, <z>)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StokesVector {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl StokesVector {
    /// Distance from the h-v axis (the s3 axis).
    pub fn axis_distance(&self) -> f64 {
        (self.s1 * self.s1 + self.s2 * self.s2).sqrt()
    }

    /// Azimuth around the h-v axis, in radians.
    pub fn azimuth(&self) -> f64 {
        self.s2.atan2(self.s1)
    }
}

fn rotation(theta: f64) -> CMatrix {
    let (s, c) = theta.sin_cos();
    CMatrix::from_reals(2, 2, &[c, -s, s, c])
}

/// Half-wave plate with fast axis at `theta` degrees:
/// `R(theta) diag(1,-1) R(-theta)`.
pub fn hwp_matrix(theta_deg: f64) -> CMatrix {
    let t = theta_deg.to_radians();
    let retarder = CMatrix::diag(&[Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]);
    &(&rotation(t) * &retarder) * &rotation(-t)
}

/// Quarter-wave plate with fast axis at `theta` degrees:
/// `R(theta) diag(1,-i) R(-theta)`. The retardance sign pairs with the
/// counterclockwise rotation so that HWP(22.5) h = d+ and QWP(45) h = R
/// hold together; the opposite sign belongs to the conjugate solution
/// family.
pub fn qwp_matrix(theta_deg: f64) -> CMatrix {
    let t = theta_deg.to_radians();
    let retarder = CMatrix::diag(&[Complex64::new(1.0, 0.0), Complex64::new(0.0, -1.0)]);
    &(&rotation(t) * &retarder) * &rotation(-t)
}

/// Stokes vector of a pure polarization, `s_i = <p|sigma_i|p>`.
pub fn stokes(p: &PolarizationState) -> StokesVector {
    let a = p.amps();
    let cross = a[0].conj() * a[1];
    StokesVector {
        s1: 2.0 * cross.re,
        s2: 2.0 * cross.im,
        s3: a[0].norm_sqr() - a[1].norm_sqr(),
    }
}

fn setting_matrix_rad(qwp_a: f64, hwp: f64, qwp_b: f64) -> CMatrix {
    let deg = 180.0 / core::f64::consts::PI;
    &(&qwp_matrix(qwp_b * deg) * &hwp_matrix(hwp * deg)) * &qwp_matrix(qwp_a * deg)
}

fn projection_fidelity(u: &CMatrix, s: &PolarizationState) -> f64 {
    let out = u.apply(s.amps());
    out[0].norm_sqr()
}

/// Residual `|1 - |<h|U s>||` of a compiled setting.
pub fn setting_residual(setting: &WavePlateSetting, pair: &ProjectionPair) -> f64 {
    let u = &(&qwp_matrix(setting.qwp_b) * &hwp_matrix(setting.hwp)) * &qwp_matrix(setting.qwp_a);
    let out = u.apply(pair.s.amps());
    (1.0 - out[0].norm()).abs()
}

fn wrap_angle_deg(x: f64, period: f64) -> f64 {
    // Into (-period/2, period/2].
    let mut y = x % period;
    if y <= -period / 2.0 {
        y += period;
    } else if y > period / 2.0 {
        y -= period;
    }
    y
}

/// Budget for the wave-plate search; the tie-break penalty below picks the
/// Table-1-style `(a, h, -a)` representative out of the solution family.
pub fn default_compile_config(seed: u64) -> OptimizerConfig {
    OptimizerConfig::new(4000, 40, 1e-13, seed)
}

/// Finds QWP(a)/HWP/QWP(b) angles mapping `s -> |h>` and `t -> |v>` up to
/// global phase. The fidelity optimum is a one-parameter family; a small
/// `(a + b)^2` penalty selects the member closest to the `(a, h, -a)`
/// pattern, and a still smaller `a^2 + b^2` term prefers the representative
/// with the least quarter-wave action when several members reach the
/// pattern exactly. Neither disturbs the projection beyond the residual
/// target.
pub fn compile_projection(
    pair: &ProjectionPair,
    cfg: &OptimizerConfig,
) -> Result<WavePlateSetting, OpticsError> {
    let s = pair.s;
    let objective = |x: &[f64]| -> f64 {
        let u = setting_matrix_rad(x[0], x[1], x[2]);
        projection_fidelity(&u, &s)
            - 1e-4 * (x[0] + x[2]) * (x[0] + x[2])
            - 1e-7 * (x[0] * x[0] + x[2] * x[2])
    };
    let (x, _) = local_search_max(objective, &[0.0, 0.0, 0.0], cfg);

    let setting = WavePlateSetting {
        qwp_a: wrap_angle_deg(x[0].to_degrees(), 180.0),
        hwp: wrap_angle_deg(x[1].to_degrees(), 90.0),
        qwp_b: wrap_angle_deg(x[2].to_degrees(), 180.0),
    };
    if setting_residual(&setting, pair) > 1e-8 {
        return Err(OpticsError::NoConvergence);
    }
    Ok(setting)
}

/// One Majorana polarization of a quintuplet state on the Poincare sphere.
#[derive(Debug, Clone, Copy)]
pub struct PentagramEntry {
    /// Setting index 1..=5.
    pub k: usize,
    /// `true` for the `s_k` member of the pair, `false` for `t_k`.
    pub is_s: bool,
    pub stokes: StokesVector,
    pub axis_distance: f64,
}

/// Stokes vectors of all ten Majorana polarizations of a quintuplet with
/// their distances from the h-v axis.
pub fn pentagram_report(quint: &Quintuplet) -> Result<Vec<PentagramEntry>, OpticsError> {
    let mut entries = Vec::with_capacity(10);
    for (i, l) in quint.states().iter().enumerate() {
        let m = majorana_decompose(l);
        if m.degenerate {
            return Err(OpticsError::DegeneratePair);
        }
        for (state, is_s) in [(m.s, true), (m.t, false)] {
            let sv = stokes(&state);
            entries.push(PentagramEntry {
                k: i + 1,
                is_s,
                stokes: sv,
                axis_distance: sv.axis_distance(),
            });
        }
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{standard_normal, substream};
    use crate::witnesses::canonical_quintuplet;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hwp_basics() {
        let u = hwp_matrix(0.0);
        let h = u.apply(PolarizationState::horizontal().amps());
        assert_abs_diff_eq!(h[0].norm(), 1.0, epsilon = 1e-12);

        let u = hwp_matrix(22.5);
        let out = u.apply(PolarizationState::horizontal().amps());
        let out = PolarizationState::from_unnormalized([out[0], out[1]]).unwrap();
        assert!(out.overlap(&PolarizationState::diagonal_plus()) > 1.0 - 1e-12);
    }

    #[test]
    fn qwp_makes_circular_at_45() {
        let u = qwp_matrix(45.0);
        let out = u.apply(PolarizationState::horizontal().amps());
        let out = PolarizationState::from_unnormalized([out[0], out[1]]).unwrap();
        assert!(out.overlap(&PolarizationState::circular_right()) > 1.0 - 1e-12);
    }

    #[test]
    fn plate_periodicity_up_to_phase() {
        for i in 0..=180 {
            let t = i as f64;
            let h2 = &hwp_matrix(t) * &hwp_matrix(t);
            let q = qwp_matrix(t);
            let q4 = &(&q * &q) * &(&q * &q);
            // Compare against identity modulo global phase.
            let ph_h = h2[(0, 0)] + h2[(1, 1)];
            let ph_q = q4[(0, 0)] + q4[(1, 1)];
            assert!(h2.max_abs_diff(&CMatrix::identity(2).scale(ph_h / 2.0)) < 1e-10);
            assert!(q4.max_abs_diff(&CMatrix::identity(2).scale(ph_q / 2.0)) < 1e-10);
        }
    }

    #[test]
    fn stokes_cardinal_states() {
        let s = stokes(&PolarizationState::horizontal());
        assert_abs_diff_eq!(s.s3, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.s1, 0.0, epsilon = 1e-12);
        let s = stokes(&PolarizationState::diagonal_plus());
        assert_abs_diff_eq!(s.s1, 1.0, epsilon = 1e-12);
        let s = stokes(&PolarizationState::circular_right());
        assert_abs_diff_eq!(s.s2, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn compile_identity_pair() {
        let pair = ProjectionPair::new(
            PolarizationState::horizontal(),
            PolarizationState::vertical(),
            1,
        )
        .unwrap();
        let setting = compile_projection(&pair, &default_compile_config(5)).unwrap();
        assert!(setting_residual(&setting, &pair) <= 1e-8);
        // Identity-compatible family; the penalty pulls qwp_b toward -qwp_a.
        assert_abs_diff_eq!(setting.qwp_a + setting.qwp_b, 0.0, epsilon = 0.05);
    }

    #[test]
    fn compile_diagonal_pair() {
        let pair = ProjectionPair::new(
            PolarizationState::diagonal_plus(),
            PolarizationState::diagonal_minus(),
            2,
        )
        .unwrap();
        // The hwp = 22.5 solution family exists (a 45-degree quarter wave
        // holds d+ fixed, the half wave rotates it onto h) ...
        let manual = WavePlateSetting { qwp_a: 45.0, hwp: 22.5, qwp_b: 0.0 };
        assert!(setting_residual(&manual, &pair) <= 1e-12);
        // ... but the compiler's (a, h, -a) tie-break selects the member of
        // the solution set with balanced quarter-wave angles instead.
        let setting = compile_projection(&pair, &default_compile_config(6)).unwrap();
        assert!(setting_residual(&setting, &pair) <= 1e-8);
        assert!((setting.qwp_a + setting.qwp_b).abs() < 0.05);
    }

    #[test]
    fn compile_random_orthogonal_pairs() {
        let mut rng = substream(9, &[2]);
        for trial in 0..25 {
            let a = [
                Complex64::new(standard_normal(&mut rng), standard_normal(&mut rng)),
                Complex64::new(standard_normal(&mut rng), standard_normal(&mut rng)),
            ];
            let s = PolarizationState::from_unnormalized(a).unwrap();
            let t = PolarizationState::from_unnormalized([
                -s.amps()[1].conj(),
                s.amps()[0].conj(),
            ])
            .unwrap();
            let pair = ProjectionPair::new(s, t, 1).unwrap();
            let setting = compile_projection(&pair, &default_compile_config(trial)).unwrap();
            assert!(setting_residual(&setting, &pair) <= 1e-8, "trial {trial}");
            // t must land on |v> too.
            let u = &(&qwp_matrix(setting.qwp_b) * &hwp_matrix(setting.hwp))
                * &qwp_matrix(setting.qwp_a);
            let out = u.apply(t.amps());
            assert!(out[1].norm() > 1.0 - 1e-7);
        }
    }

    #[test]
    fn pentagram_geometry() {
        let entries = pentagram_report(&canonical_quintuplet()).unwrap();
        assert_eq!(entries.len(), 10);
        let d0 = entries[0].axis_distance;
        for e in &entries {
            assert_abs_diff_eq!(e.axis_distance, d0, epsilon = 1e-8);
        }
        // The five s_k azimuths form a regular pentagon.
        let mut az: Vec<f64> = entries
            .iter()
            .filter(|e| e.is_s)
            .map(|e| e.stokes.azimuth())
            .collect();
        az.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for i in 0..5 {
            let next = az[(i + 1) % 5] + if i == 4 { core::f64::consts::TAU } else { 0.0 };
            let gap = next - az[i];
            assert_abs_diff_eq!(gap, core::f64::consts::TAU / 5.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn pentagram_on_axis_states_have_zero_distance() {
        assert_abs_diff_eq!(
            stokes(&PolarizationState::horizontal()).axis_distance(),
            0.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            stokes(&PolarizationState::vertical()).axis_distance(),
            0.0,
            epsilon = 1e-12
        );
    }
}
