//! Simulated coincidence-count tomography of the two-photon state:
//! separable projector sets, Poisson count generation, linear inversion,
//! Cholesky-parametrized maximum-likelihood reconstruction, and Monte-Carlo
//! error propagation.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{eig_hermitian, local_search_max, CMatrix, OptimizerConfig};
use crate::sampling::{poisson, substream};
use crate::states::{PolarizationState, TwoPhotonDensity};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TomoError {
    RankDeficient,
    EmptyRecords,
    LabelMismatch,
    TooFewResamples,
    InvalidExposure,
}

impl fmt::Display for TomoError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TomoError::RankDeficient => write!(f, "tomography design matrix is rank deficient"),
            TomoError::EmptyRecords => write!(f, "no tomography records provided"),
            TomoError::LabelMismatch => write!(f, "records do not match the setting list"),
            TomoError::TooFewResamples => write!(f, "Monte-Carlo needs at least 100 resamples"),
            TomoError::InvalidExposure => write!(f, "exposure must be at least 1"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for TomoError {}

/// Separable two-photon projector with a human-readable label like `"hd"`.
#[derive(Debug, Clone)]
pub struct TomoSetting {
    pub first: PolarizationState,
    pub second: PolarizationState,
    pub label: String,
}

/// One measured setting: counts collected over `exposure` emitted pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TomoRecord {
    pub label: String,
    pub count: u64,
    pub exposure: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TomoScheme {
    /// The 16 projectors over `{h, v, d, r}` per photon; minimal for linear
    /// inversion.
    Minimal16,
    /// All 36 pairs over `{h, v, d, a, r, l}`.
    Overcomplete36,
}

fn single_photon_states(scheme: TomoScheme) -> Vec<(char, PolarizationState)> {
    let mut base = alloc::vec![
        ('h', PolarizationState::horizontal()),
        ('v', PolarizationState::vertical()),
        ('d', PolarizationState::diagonal_plus()),
        ('r', PolarizationState::circular_right()),
    ];
    if matches!(scheme, TomoScheme::Overcomplete36) {
        base.insert(3, ('a', PolarizationState::diagonal_minus()));
        base.push(('l', PolarizationState::circular_left()));
    }
    base
}

pub fn tomo_settings(scheme: TomoScheme) -> Vec<TomoSetting> {
    let singles = single_photon_states(scheme);
    let mut out = Vec::with_capacity(singles.len() * singles.len());
    for (c1, s1) in &singles {
        for (c2, s2) in &singles {
            out.push(TomoSetting {
                first: *s1,
                second: *s2,
                label: format!("{c1}{c2}"),
            });
        }
    }
    out
}

/// `<p1 p2| rho |p1 p2>` for a separable projector.
pub fn setting_probability(rho: &TwoPhotonDensity, setting: &TomoSetting) -> f64 {
    let a = setting.first.amps();
    let b = setting.second.amps();
    let v = [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]];
    rho.matrix().quadratic_form(&v).re
}

/// Poisson counts around `exposure * probability`, one substream per setting.
pub fn simulate_tomo(
    rho: &TwoPhotonDensity,
    settings: &[TomoSetting],
    exposure: u64,
    seed: u64,
) -> Result<Vec<TomoRecord>, TomoError> {
    if exposure == 0 {
        return Err(TomoError::InvalidExposure);
    }
    Ok(settings
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let p = setting_probability(rho, s).max(0.0);
            let mut rng = substream(seed, &[0x746f_6d6f, i as u64]);
            TomoRecord {
                label: s.label.clone(),
                count: poisson(&mut rng, exposure as f64 * p),
                exposure,
            }
        })
        .collect())
}

// Hermitian basis: E_ii, then (E_ij + E_ji) and i(E_ij - E_ji) for i < j.
fn hermitian_basis() -> [CMatrix; 16] {
    let mut out: Vec<CMatrix> = Vec::with_capacity(16);
    for i in 0..4 {
        let mut m = CMatrix::zeros(4, 4);
        m[(i, i)] = Complex64::new(1.0, 0.0);
        out.push(m);
    }
    for i in 0..4 {
        for j in (i + 1)..4 {
            let mut re = CMatrix::zeros(4, 4);
            re[(i, j)] = Complex64::new(1.0, 0.0);
            re[(j, i)] = Complex64::new(1.0, 0.0);
            out.push(re);
            let mut im = CMatrix::zeros(4, 4);
            im[(i, j)] = Complex64::new(0.0, 1.0);
            im[(j, i)] = Complex64::new(0.0, -1.0);
            out.push(im);
        }
    }
    out.try_into().expect("exactly 16 basis matrices")
}

/// Solves the dense symmetric system by Gaussian elimination with partial
/// pivoting; a vanishing pivot signals a rank-deficient design.
fn solve_real(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>, TomoError> {
    let n = b.len();
    let scale: f64 = a
        .iter()
        .flat_map(|row| row.iter().map(|x| x.abs()))
        .fold(0.0, f64::max)
        .max(1e-300);
    for col in 0..n {
        let mut piv = col;
        for r in (col + 1)..n {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        if a[piv][col].abs() < 1e-10 * scale {
            return Err(TomoError::RankDeficient);
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in (col + 1)..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = alloc::vec![0.0; n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for c in (col + 1)..n {
            acc -= a[col][c] * x[c];
        }
        x[col] = acc / a[col][col];
    }
    Ok(x)
}

fn pair_records<'a>(
    settings: &'a [TomoSetting],
    records: &'a [TomoRecord],
) -> Result<Vec<(&'a TomoSetting, &'a TomoRecord)>, TomoError> {
    if records.is_empty() {
        return Err(TomoError::EmptyRecords);
    }
    records
        .iter()
        .map(|r| {
            settings
                .iter()
                .find(|s| s.label == r.label)
                .map(|s| (s, r))
                .ok_or(TomoError::LabelMismatch)
        })
        .collect()
}

/// Least-squares solution of `<proj_i|rho|proj_i> = count_i / exposure_i`.
/// Hermitian by construction, but possibly non-PSD and off-trace under
/// noise; callers decide whether to project.
pub fn linear_inversion(
    settings: &[TomoSetting],
    records: &[TomoRecord],
) -> Result<CMatrix, TomoError> {
    let pairs = pair_records(settings, records)?;
    let basis = hermitian_basis();
    let n = pairs.len();
    let mut design = alloc::vec![alloc::vec![0.0; 16]; n];
    let mut rhs = alloc::vec![0.0; n];
    for (row, (s, r)) in pairs.iter().enumerate() {
        let a = s.first.amps();
        let b = s.second.amps();
        let v = [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]];
        for (m, bm) in basis.iter().enumerate() {
            design[row][m] = bm.quadratic_form(&v).re;
        }
        rhs[row] = r.count as f64 / r.exposure as f64;
    }
    // Normal equations; 16x16 is trivial at this scale.
    let mut gram = alloc::vec![alloc::vec![0.0; 16]; 16];
    let mut gb = alloc::vec![0.0; 16];
    for row in 0..n {
        for i in 0..16 {
            gb[i] += design[row][i] * rhs[row];
            for j in 0..16 {
                gram[i][j] += design[row][i] * design[row][j];
            }
        }
    }
    let x = solve_real(gram, gb)?;
    let mut h = CMatrix::zeros(4, 4);
    for (m, bm) in basis.iter().enumerate() {
        h = &h + &bm.scale(Complex64::new(x[m], 0.0));
    }
    Ok(h)
}

/// Clips negative eigenvalues and renormalizes the trace.
pub fn psd_project(h: &CMatrix) -> Result<TwoPhotonDensity, TomoError> {
    let (vals, vecs) = eig_hermitian(h).map_err(|_| TomoError::RankDeficient)?;
    let clipped: Vec<f64> = vals.iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if total <= 0.0 {
        return Ok(TwoPhotonDensity::maximally_mixed());
    }
    let d = CMatrix::diag(
        &clipped
            .iter()
            .map(|&v| Complex64::new(v / total, 0.0))
            .collect::<Vec<_>>(),
    );
    let m = &(&vecs * &d) * &vecs.adjoint();
    TwoPhotonDensity::new(m).map_err(|_| TomoError::RankDeficient)
}

// Lower-triangular factor G with rho = G†G / Tr(G†G): 4 real diagonal
// parameters followed by (re, im) for each subdiagonal entry.
fn factor_from_params(p: &[f64]) -> CMatrix {
    debug_assert_eq!(p.len(), 16);
    let mut g = CMatrix::zeros(4, 4);
    for i in 0..4 {
        g[(i, i)] = Complex64::new(p[i], 0.0);
    }
    let mut idx = 4;
    for i in 0..4 {
        for j in 0..i {
            g[(i, j)] = Complex64::new(p[idx], p[idx + 1]);
            idx += 2;
        }
    }
    g
}

fn density_from_params(p: &[f64]) -> TwoPhotonDensity {
    let g = factor_from_params(p);
    let gg = &g.adjoint() * &g;
    let tr = gg.trace().re.max(1e-300);
    TwoPhotonDensity::new(gg.scale(Complex64::new(1.0 / tr, 0.0)))
        .expect("G†G/Tr is a valid density")
}

/// Inverts `rho = G†G` for a strictly positive density, giving the warm
/// start. Works through the basis-reversed Cholesky factorization.
fn params_from_density(rho: &TwoPhotonDensity) -> [f64; 16] {
    // rho = G†G with G lower  <=>  J rho J = U†U with U upper, U = J G J.
    let m = rho.matrix();
    let mut rev = CMatrix::zeros(4, 4);
    for i in 0..4 {
        for j in 0..4 {
            rev[(i, j)] = m[(3 - i, 3 - j)];
        }
    }
    // Cholesky of the reversed matrix: rev = L L†.
    let mut l = CMatrix::zeros(4, 4);
    for i in 0..4 {
        for j in 0..=i {
            let mut acc = rev[(i, j)];
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)].conj();
            }
            if i == j {
                l[(i, i)] = Complex64::new(acc.re.max(1e-15).sqrt(), 0.0);
            } else {
                l[(i, j)] = acc / l[(j, j)];
            }
        }
    }
    // rev = L L† = (L†)† L†, so U = L† is upper and G = J U J is lower.
    let u = l.adjoint();
    let mut g = CMatrix::zeros(4, 4);
    for i in 0..4 {
        for j in 0..4 {
            g[(i, j)] = u[(3 - i, 3 - j)];
        }
    }
    let mut p = [0.0; 16];
    for i in 0..4 {
        p[i] = g[(i, i)].re;
    }
    let mut idx = 4;
    for i in 0..4 {
        for j in 0..i {
            p[idx] = g[(i, j)].re;
            p[idx + 1] = g[(i, j)].im;
            idx += 2;
        }
    }
    p
}

/// Default budget for the likelihood refinement: one start (the PSD-projected
/// linear inversion) plus a handful of random restarts.
pub fn default_mle_config(seed: u64) -> OptimizerConfig {
    OptimizerConfig::new(6000, 1, 1e-10, seed)
}

fn poisson_log_likelihood(
    pairs: &[(&TomoSetting, &TomoRecord)],
    rho: &TwoPhotonDensity,
) -> f64 {
    pairs
        .iter()
        .map(|(s, r)| {
            let p = setting_probability(rho, s).max(1e-15);
            let lambda = r.exposure as f64 * p;
            r.count as f64 * lambda.ln() - lambda
        })
        .sum()
}

/// Maximum-likelihood density: `rho = G†G / Tr(G†G)` with `G` lower
/// triangular, maximizing the Poisson log-likelihood from the
/// PSD-projected linear-inversion start. PSD and trace-1 by construction;
/// the likelihood never drops below the start's.
pub fn mle_reconstruct(
    settings: &[TomoSetting],
    records: &[TomoRecord],
    cfg: &OptimizerConfig,
) -> Result<TwoPhotonDensity, TomoError> {
    let pairs = pair_records(settings, records)?;
    let start_density = match linear_inversion(settings, records) {
        Ok(h) => psd_project(&h)?,
        Err(TomoError::RankDeficient) => TwoPhotonDensity::maximally_mixed(),
        Err(e) => return Err(e),
    };
    // Tiny admixture keeps the Cholesky strictly positive.
    let start = TwoPhotonDensity::mix(&TwoPhotonDensity::maximally_mixed(), &start_density, 1e-9);
    let x0 = params_from_density(&start);

    let objective = |p: &[f64]| -> f64 {
        let rho = density_from_params(p);
        poisson_log_likelihood(&pairs, &rho)
    };
    let (x, _) = local_search_max(objective, &x0, cfg);
    Ok(density_from_params(&x))
}

/// Monte-Carlo error of an estimator under Poisson count resampling: each
/// resample redraws every count around its observation, reconstructs by MLE,
/// and evaluates the estimator; returns sample mean and standard deviation.
pub fn mc_error<F>(
    settings: &[TomoSetting],
    records: &[TomoRecord],
    estimator: F,
    n: usize,
    cfg: &OptimizerConfig,
    seed: u64,
) -> Result<(f64, f64), TomoError>
where
    F: Fn(&TwoPhotonDensity) -> f64,
{
    if n < 100 {
        return Err(TomoError::TooFewResamples);
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for r in 0..n {
        let mut rng = substream(seed, &[0x6d63_746f_6d6f, r as u64]);
        let resampled: Vec<TomoRecord> = records
            .iter()
            .map(|rec| TomoRecord {
                label: rec.label.clone(),
                count: poisson(&mut rng, rec.count as f64),
                exposure: rec.exposure,
            })
            .collect();
        let mut sub_cfg = *cfg;
        sub_cfg.seed = seed ^ (r as u64).wrapping_mul(0x2545_f491_4f6c_dd1d);
        let rho = mle_reconstruct(settings, &resampled, &sub_cfg)?;
        let v = estimator(&rho);
        sum += v;
        sum_sq += v * v;
    }
    let nf = n as f64;
    let mean = sum / nf;
    let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
    Ok((mean, var.sqrt()))
}

/// Exact-probability records (the infinite-exposure limit, no sampling).
pub fn exact_records(
    rho: &TwoPhotonDensity,
    settings: &[TomoSetting],
    exposure: u64,
) -> Vec<TomoRecord> {
    settings
        .iter()
        .map(|s| TomoRecord {
            label: s.label.clone(),
            count: (setting_probability(rho, s).max(0.0) * exposure as f64).round() as u64,
            exposure,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::standard_normal;
    use crate::states::{basis_state, fidelity_to_pure, qutrit_to_density, BasisState};
    use approx::assert_abs_diff_eq;

    fn random_density(seed: u64) -> TwoPhotonDensity {
        let mut rng = substream(seed, &[404]);
        let mut g = CMatrix::zeros(4, 4);
        for i in 0..4 {
            for j in 0..4 {
                g[(i, j)] = Complex64::new(standard_normal(&mut rng), standard_normal(&mut rng));
            }
        }
        let gg = &g * &g.adjoint();
        let tr = gg.trace().re;
        TwoPhotonDensity::new(gg.scale(Complex64::new(1.0 / tr, 0.0))).unwrap()
    }

    #[test]
    fn setting_counts() {
        assert_eq!(tomo_settings(TomoScheme::Minimal16).len(), 16);
        assert_eq!(tomo_settings(TomoScheme::Overcomplete36).len(), 36);
    }

    #[test]
    fn minimal16_design_has_full_rank() {
        // Full rank <=> noiseless inversion reproduces an arbitrary state.
        let settings = tomo_settings(TomoScheme::Minimal16);
        let rho = random_density(1);
        let records = exact_records(&rho, &settings, 1_000_000_000_000);
        let h = linear_inversion(&settings, &records).unwrap();
        assert!(h.max_abs_diff(rho.matrix()) < 1e-6);
    }

    #[test]
    fn simulate_tomo_edge_probabilities() {
        let hh = TwoPhotonDensity::from_pure(&[
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        ])
        .unwrap();
        let settings = tomo_settings(TomoScheme::Minimal16);
        let records = simulate_tomo(&hh, &settings, 1_000_000, 3).unwrap();
        let by_label = |l: &str| records.iter().find(|r| r.label == l).unwrap().count;
        let n_hh = by_label("hh") as f64;
        assert!((n_hh - 1e6).abs() < 5.0 * 1e3, "hh count {n_hh}");
        assert_eq!(by_label("vv"), 0);
        assert_eq!(
            simulate_tomo(&hh, &settings, 0, 3).unwrap_err(),
            TomoError::InvalidExposure
        );
    }

    #[test]
    fn linear_inversion_exact_round_trip() {
        let settings = tomo_settings(TomoScheme::Overcomplete36);
        for seed in [2, 3, 4] {
            let rho = random_density(seed);
            // Exact probabilities via huge exposure to dodge rounding.
            let records = exact_records(&rho, &settings, 1_000_000_000_000);
            let h = linear_inversion(&settings, &records).unwrap();
            assert!(h.max_abs_diff(rho.matrix()) < 1e-6);
        }
    }

    #[test]
    fn linear_inversion_detects_rank_deficiency() {
        let settings = tomo_settings(TomoScheme::Minimal16);
        let rho = random_density(5);
        let records = exact_records(&rho, &settings[..8], 1_000_000);
        assert_eq!(
            linear_inversion(&settings, &records).unwrap_err(),
            TomoError::RankDeficient
        );
    }

    #[test]
    fn cholesky_parametrization_round_trip() {
        let rho = random_density(6);
        let p = params_from_density(&rho);
        let rebuilt = density_from_params(&p);
        assert!(rebuilt.matrix().max_abs_diff(rho.matrix()) < 1e-10);
    }

    #[test]
    fn mle_noiseless_recovers_truth() {
        let settings = tomo_settings(TomoScheme::Overcomplete36);
        let truth = qutrit_to_density(&basis_state(BasisState::PsiHv));
        let records = exact_records(&truth, &settings, 1_000_000_000_000);
        let rho = mle_reconstruct(&settings, &records, &default_mle_config(1)).unwrap();
        let f = fidelity_to_pure(&rho, &truth).unwrap();
        assert!(f >= 1.0 - 1e-6, "fidelity {f}");
    }

    #[test]
    fn mle_simulated_high_exposure_fidelity() {
        let settings = tomo_settings(TomoScheme::Overcomplete36);
        let truth = qutrit_to_density(&basis_state(BasisState::PsiHv));
        let records = simulate_tomo(&truth, &settings, 100_000, 11).unwrap();
        let rho = mle_reconstruct(&settings, &records, &default_mle_config(2)).unwrap();
        let f = fidelity_to_pure(&rho, &truth).unwrap();
        assert!(f >= 0.99, "fidelity {f}");
    }

    #[test]
    fn mle_never_below_start_likelihood() {
        let settings = tomo_settings(TomoScheme::Overcomplete36);
        let truth = random_density(9);
        let records = simulate_tomo(&truth, &settings, 2_000, 13).unwrap();
        let pairs = pair_records(&settings, &records).unwrap();
        let start = psd_project(&linear_inversion(&settings, &records).unwrap()).unwrap();
        let rho = mle_reconstruct(&settings, &records, &default_mle_config(3)).unwrap();
        assert!(
            poisson_log_likelihood(&pairs, &rho)
                >= poisson_log_likelihood(&pairs, &start) - 1e-6
        );
    }

    #[test]
    fn mc_error_requires_enough_resamples() {
        let settings = tomo_settings(TomoScheme::Minimal16);
        let truth = random_density(10);
        let records = simulate_tomo(&truth, &settings, 1_000, 17).unwrap();
        assert_eq!(
            mc_error(&settings, &records, crate::states::purity, 10,
                     &default_mle_config(4), 1)
                .unwrap_err(),
            TomoError::TooFewResamples
        );
    }
}
