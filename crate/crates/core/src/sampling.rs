//! Seeded random streams and the count statistics used by the simulated
//! measurements.
//!
//! Every consumer derives an independent substream from `(seed, tags...)`,
//! so parallel evaluation order can never change the drawn numbers.

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// splitmix64 step, used to fold tags into a stream key.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic substream derived from a base seed and a tag path.
pub fn substream(seed: u64, tags: &[u64]) -> ChaCha12Rng {
    let mut state = seed;
    let mut key = splitmix64(&mut state);
    for &t in tags {
        state ^= t.wrapping_mul(0xff51_afd7_ed55_8ccd);
        key ^= splitmix64(&mut state);
    }
    ChaCha12Rng::seed_from_u64(key)
}

/// Standard normal deviate by Box-Muller.
pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (core::f64::consts::TAU * u2).cos()
}

/// Poisson deviate: multiplicative inversion below mean 30, rounded
/// normal approximation above (negligible bias at the count scales here).
pub fn poisson<R: Rng>(rng: &mut R, mean: f64) -> u64 {
    assert!(mean >= 0.0 && mean.is_finite());
    if mean == 0.0 {
        return 0;
    }
    if mean < 30.0 {
        let limit = (-mean).exp();
        let mut k: u64 = 0;
        let mut p: f64 = 1.0;
        loop {
            p *= rng.gen::<f64>();
            if p <= limit {
                return k;
            }
            k += 1;
        }
    } else {
        let z = standard_normal(rng);
        let x = mean + mean.sqrt() * z;
        if x < 0.0 {
            0
        } else {
            (x + 0.5).floor() as u64
        }
    }
}

/// Normal deviate truncated to `[0, 1]` by redraw, clamped after 100 tries.
pub fn truncated_normal_unit<R: Rng>(rng: &mut R, mean: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return mean.clamp(0.0, 1.0);
    }
    for _ in 0..100 {
        let x = mean + sigma * standard_normal(rng);
        if (0.0..=1.0).contains(&x) {
            return x;
        }
    }
    (mean + sigma * standard_normal(rng)).clamp(0.0, 1.0)
}
