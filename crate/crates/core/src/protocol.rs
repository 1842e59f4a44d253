//! Direct KCBS projection protocol: split the biphoton at a beam splitter,
//! project each port on one polarization of the Majorana pair, average the
//! two orders, and subtract the singlet population from every rate.
//!
//! Probabilities are conditioned on split pairs (one photon per port); the
//! 50% biphoton splitting loss is absorbed into the effective pair rate and
//! never enters the KCBS value.

use core::fmt;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::sampling::{poisson, substream, truncated_normal_unit};
use crate::states::{PolarizationState, QutritState, TwoPhotonDensity};
use crate::witnesses::Quintuplet;

const ORTH_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolError {
    NotOrthogonal,
    InvalidIndex,
    NotNeutrallyPolarized,
    InvalidPairCount,
    TooFewMcSamples,
}

impl fmt::Display for ProtocolError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProtocolError::NotOrthogonal => write!(f, "projection pair is not orthogonal"),
            ProtocolError::InvalidIndex => write!(f, "setting index must lie in 1..=5"),
            ProtocolError::NotNeutrallyPolarized => {
                write!(f, "quintuplet state has no orthogonal Majorana pair")
            }
            ProtocolError::InvalidPairCount => write!(f, "pairs_per_setting must be at least 1"),
            ProtocolError::TooFewMcSamples => write!(f, "mc_samples must be at least 100"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ProtocolError {}

/// Orthogonal single-photon pair realizing one quintuplet projection.
#[derive(Debug, Clone, Copy)]
pub struct ProjectionPair {
    pub s: PolarizationState,
    pub t: PolarizationState,
    pub k: usize,
}

impl ProjectionPair {
    pub fn new(s: PolarizationState, t: PolarizationState, k: usize) -> Result<Self, ProtocolError> {
        if s.overlap(&t) > ORTH_TOL {
            return Err(ProtocolError::NotOrthogonal);
        }
        if !(1..=5).contains(&k) {
            return Err(ProtocolError::InvalidIndex);
        }
        Ok(ProjectionPair { s, t, k })
    }
}

/// Majorana factorization of a pure qutrit into two single-photon
/// polarizations whose symmetrized product reproduces it.
#[derive(Debug, Clone, Copy)]
pub struct MajoranaPair {
    pub s: PolarizationState,
    pub t: PolarizationState,
    /// Set when the two Majorana points coincide (`s = t`); the pair is
    /// still returned.
    pub degenerate: bool,
}

fn stereographic_state(z: Complex64) -> PolarizationState {
    PolarizationState::from_unnormalized([Complex64::new(1.0, 0.0), -z])
        .expect("(1, -z) is never the zero vector")
}

/// Decomposes a qutrit as the symmetrized product of two polarizations. The
/// Majorana points are the roots of `a0 z^2 + sqrt(2) a1 z + a2` in the
/// stereographic coordinate; a degenerate leading coefficient contributes a
/// root at infinity, i.e. `|v>`.
pub fn majorana_decompose(q: &QutritState) -> MajoranaPair {
    let amps = q.amps();
    let a = amps[0];
    let b = amps[1] * Complex64::new(core::f64::consts::SQRT_2, 0.0);
    let c = amps[2];

    let (s, t) = if a.norm() < 1e-12 {
        if b.norm() < 1e-12 {
            (PolarizationState::vertical(), PolarizationState::vertical())
        } else {
            (stereographic_state(-c / b), PolarizationState::vertical())
        }
    } else {
        let disc = (b * b - a * c * 4.0).sqrt();
        // Pick the sign that avoids cancellation in -(b + disc)/2.
        let disc = if (b.conj() * disc).re < 0.0 { -disc } else { disc };
        let qq = -(b + disc) * 0.5;
        let z1 = qq / a;
        let z2 = if qq.norm() > 1e-14 { c / qq } else { z1 };
        (stereographic_state(z1), stereographic_state(z2))
    };
    let degenerate = s.overlap(&t) > 1.0 - 1e-8;
    MajoranaPair { s, t, degenerate }
}

/// Symmetrized product of two polarizations as a qutrit, for round trips.
pub fn symmetrize(s: &PolarizationState, t: &PolarizationState) -> Result<QutritState, ProtocolError> {
    let (sh, sv) = (s.amps()[0], s.amps()[1]);
    let (th, tv) = (t.amps()[0], t.amps()[1]);
    let sq = Complex64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
    QutritState::from_unnormalized([sh * th, (sh * tv + sv * th) * sq, sv * tv])
        .map_err(|_| ProtocolError::NotNeutrallyPolarized)
}

/// Coincidence probabilities for the two projection orders,
/// `p_st = <s t| rho |s t>` and `p_ts = <t s| rho |t s>`.
pub fn coincidence_probs(rho: &TwoPhotonDensity, pair: &ProjectionPair) -> (f64, f64) {
    let (sh, sv) = (pair.s.amps()[0], pair.s.amps()[1]);
    let (th, tv) = (pair.t.amps()[0], pair.t.amps()[1]);
    let st = [sh * th, sh * tv, sv * th, sv * tv];
    let ts = [th * sh, th * sv, tv * sh, tv * sv];
    let p_st = rho.matrix().quadratic_form(&st).re;
    let p_ts = rho.matrix().quadratic_form(&ts).re;
    (p_st, p_ts)
}

/// Order-averaged, singlet-subtracted KCBS estimator:
/// `K = sum_k [p_st + p_ts - singlet_pop]`.
///
/// For any density this equals the direct quintuplet value exactly, because
/// `|s t> = (|l_st> + e^{i g}|Psi->)/sqrt(2)` makes the singlet contribute
/// `singlet_pop` per setting while the cross terms cancel in the order sum.
pub fn kcbs_estimator(probs: &[(f64, f64); 5], singlet_pop: f64) -> f64 {
    assert!((0.0..=1.0).contains(&singlet_pop));
    probs
        .iter()
        .map(|&(p_st, p_ts)| p_st + p_ts - singlet_pop)
        .sum()
}

/// Simulated coincidence counts for the five settings and both orders.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProtocolCounts {
    /// `(n_st, n_ts)` for k = 1..5.
    pub counts: [(u64, u64); 5],
    pub pairs_per_setting: u64,
    pub seed: u64,
}

/// Draws Poisson counts around the exact coincidence probabilities,
/// one independent substream per `(seed, k, order)`.
pub fn simulate_counts(
    rho: &TwoPhotonDensity,
    quint: &Quintuplet,
    pairs_per_setting: u64,
    seed: u64,
) -> Result<ProtocolCounts, ProtocolError> {
    if pairs_per_setting == 0 {
        return Err(ProtocolError::InvalidPairCount);
    }
    let mut counts = [(0u64, 0u64); 5];
    for (k, l) in quint.states().iter().enumerate() {
        let m = majorana_decompose(l);
        if m.degenerate {
            return Err(ProtocolError::NotNeutrallyPolarized);
        }
        let pair = ProjectionPair::new(m.s, m.t, k + 1)
            .map_err(|_| ProtocolError::NotNeutrallyPolarized)?;
        let (p_st, p_ts) = coincidence_probs(rho, &pair);
        let mut rng_st = substream(seed, &[k as u64, 0]);
        let mut rng_ts = substream(seed, &[k as u64, 1]);
        let n_st = poisson(&mut rng_st, pairs_per_setting as f64 * p_st);
        let n_ts = poisson(&mut rng_ts, pairs_per_setting as f64 * p_ts);
        // Keep the per-setting budget: a joint overshoot of the Poisson
        // draws beyond the emitted pairs is unphysical.
        let n_st = n_st.min(pairs_per_setting);
        let n_ts = n_ts.min(pairs_per_setting - n_st);
        counts[k] = (n_st, n_ts);
    }
    Ok(ProtocolCounts {
        counts,
        pairs_per_setting,
        seed,
    })
}

/// Point estimate and Monte-Carlo error of the KCBS value from counts.
///
/// Counts are resampled Poisson around the observations and the singlet
/// population normal around its estimate (truncated to `[0,1]`), mirroring
/// how the error on the measured density matrix propagates.
pub fn kcbs_from_counts(
    counts: &ProtocolCounts,
    singlet_pop: f64,
    singlet_pop_sigma: f64,
    mc_samples: usize,
    seed: u64,
) -> Result<(f64, f64), ProtocolError> {
    if mc_samples < 100 {
        return Err(ProtocolError::TooFewMcSamples);
    }
    let pairs = counts.pairs_per_setting as f64;
    let estimate = |cs: &[(f64, f64); 5], pop: f64| -> f64 {
        cs.iter().map(|&(a, b)| (a + b) / pairs - pop).sum()
    };
    let observed: [(f64, f64); 5] =
        core::array::from_fn(|k| (counts.counts[k].0 as f64, counts.counts[k].1 as f64));
    let k_value = estimate(&observed, singlet_pop);

    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for m in 0..mc_samples {
        let mut rng = substream(seed, &[0x6d63_7265_73, m as u64]);
        let resampled: [(f64, f64); 5] = core::array::from_fn(|k| {
            let (a, b) = counts.counts[k];
            (
                poisson(&mut rng, a as f64) as f64,
                poisson(&mut rng, b as f64) as f64,
            )
        });
        let pop = truncated_normal_unit(&mut rng, singlet_pop, singlet_pop_sigma);
        let km = estimate(&resampled, pop);
        sum += km;
        sum_sq += km * km;
    }
    let n = mc_samples as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok((k_value, var.sqrt()))
}
