//! Monte-Carlo oracle for the full collision integral at a single momentum.
//!
//! The two delta constraints are resolved analytically: the momentum delta
//! eliminates p2; with total momentum P = p1 + p2 the energy delta pins the
//! outgoing pair to the sphere p3,4 = P/2 +- k Omega with k = |p1 - p2|/2,
//! leaving
//!
//! ```text
//! I(p1) = 4 pi  int dp2 (|p1 - p2| / 8) int_{S^2} dOmega q[f]
//! ```
//!
//! p2 is sampled uniformly in the ball of radius sqrt(2 eps_max) that
//! contains the integrand support, Omega uniformly on the sphere. Each
//! sample derives its randomness from a counter-based stream keyed by
//! (seed, sample index), so the estimate is independent of threading, and
//! chunk sums are reduced in fixed order so it is bit-identical for any
//! worker count.

use rayon::prelude::*;

use crate::collision::{q_factor, q_factor_classical, CollisionConfig};
use crate::error::KineticsError;
use crate::grid::DistributionIso;

const CHUNK: u64 = 1 << 16;

/// SplitMix64 stream keyed by (seed, counter); each call advances the
/// per-sample state.
#[derive(Clone, Copy)]
struct SampleRng {
    state: u64,
}

impl SampleRng {
    #[inline]
    fn for_sample(seed: u64, index: u64) -> Self {
        // decorrelate the per-sample starting state with one mix round
        let mut r = SampleRng {
            state: seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15),
        };
        r.next_u64();
        r
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    #[inline]
    fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Unbiased Monte-Carlo estimate of the collision rate at momentum `p1`,
/// with its standard error.
pub fn collision_mc(
    f: &DistributionIso,
    p1: f64,
    n_samples: u64,
    seed: u64,
    cfg: &CollisionConfig,
) -> Result<(f64, f64), KineticsError> {
    cfg.validate()?;
    if n_samples < 1000 {
        return Err(KineticsError::Domain(format!(
            "n_samples = {n_samples} below the 10^3 minimum"
        )));
    }
    let grid = f.grid();
    let (lo, hi) = (grid.eps_min().sqrt(), grid.eps_max().sqrt());
    if !(p1 >= lo && p1 <= hi) {
        return Err(KineticsError::OutsideSupport { p: p1, lo, hi });
    }
    let r_ball = (2.0 * grid.eps_max()).sqrt();
    let c = cfg.occupancy_c;
    let classical = cfg.classical;
    let f1 = f.interp_at_momentum(p1);
    let prefactor = 8.0 * std::f64::consts::PI.powi(3) * r_ball.powi(3) / 3.0;

    let n_chunks = n_samples.div_ceil(CHUNK);
    let partials: Vec<(f64, f64)> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let start = chunk * CHUNK;
            let end = (start + CHUNK).min(n_samples);
            let mut sum = 0.0;
            let mut sum2 = 0.0;
            for idx in start..end {
                let mut rng = SampleRng::for_sample(seed, idx);
                let r = r_ball * rng.uniform().cbrt();
                let ct = 2.0 * rng.uniform() - 1.0;
                let ph = 2.0 * std::f64::consts::PI * rng.uniform();
                let st = (1.0 - ct * ct).sqrt();
                let p2 = [r * st * ph.cos(), r * st * ph.sin(), r * ct];
                let ct2 = 2.0 * rng.uniform() - 1.0;
                let ph2 = 2.0 * std::f64::consts::PI * rng.uniform();
                let st2 = (1.0 - ct2 * ct2).sqrt();
                let om = [st2 * ph2.cos(), st2 * ph2.sin(), ct2];

                // p1 along z
                let rel = [-p2[0], -p2[1], p1 - p2[2]];
                let rel_norm = (rel[0] * rel[0] + rel[1] * rel[1] + rel[2] * rel[2]).sqrt();
                let k = 0.5 * rel_norm;
                let half_p = [p2[0] * 0.5, p2[1] * 0.5, (p1 + p2[2]) * 0.5];
                let p3sq = (half_p[0] + k * om[0]).powi(2)
                    + (half_p[1] + k * om[1]).powi(2)
                    + (half_p[2] + k * om[2]).powi(2);
                let p4sq = (half_p[0] - k * om[0]).powi(2)
                    + (half_p[1] - k * om[1]).powi(2)
                    + (half_p[2] - k * om[2]).powi(2);
                let f2 = f.interp_linear(r * r);
                let f3 = f.interp_linear(p3sq);
                let f4 = f.interp_linear(p4sq);
                let q = if classical {
                    q_factor_classical(f1, f2, f3, f4, c)
                } else {
                    q_factor(f1, f2, f3, f4, c)
                };
                let x = prefactor * rel_norm * q;
                sum += x;
                sum2 += x * x;
            }
            (sum, sum2)
        })
        .collect();

    let mut sum = 0.0;
    let mut sum2 = 0.0;
    for (s, s2) in partials {
        sum += s;
        sum2 += s2;
    }
    let n = n_samples as f64;
    let mean = sum / n;
    let var = ((sum2 - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok((mean, (var / n).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bose::{initial_bose, ThetaProfile};
    use crate::collision::{collision_rhs_iso, equilibrium};
    use crate::grid::RadialGrid;

    #[test]
    fn vacuum_gives_exact_zero() {
        let g = RadialGrid::geometric(64, 1e-4, 1e2).unwrap();
        let f = DistributionIso::zero(g);
        let (est, se) = collision_mc(&f, 1.0, 2000, 1, &CollisionConfig::default()).unwrap();
        assert_eq!(est, 0.0);
        assert_eq!(se, 0.0);
    }

    #[test]
    fn equilibrium_within_three_sigma_of_zero() {
        let g = RadialGrid::geometric(256, 1e-4, 1e2).unwrap();
        let f = equilibrium(1.0, -0.5, 1.0, &g).unwrap();
        let (est, se) = collision_mc(&f, 1.0, 200_000, 3, &CollisionConfig::default()).unwrap();
        // the MC's own linear-interpolation bias also enters; allow it room
        assert!(est.abs() < 3.0 * se + 2e-2, "est {est} se {se}");
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let g = RadialGrid::geometric(128, 1e-4, 1e2).unwrap();
        let f = initial_bose(0.9, ThetaProfile::Tilted { a: 1.0 }, &g).unwrap();
        let a = collision_mc(&f, 1.0, 50_000, 42, &CollisionConfig::default()).unwrap();
        let b = collision_mc(&f, 1.0, 50_000, 42, &CollisionConfig::default()).unwrap();
        assert_eq!(a.0.to_bits(), b.0.to_bits());
        assert_eq!(a.1.to_bits(), b.1.to_bits());
    }

    #[test]
    fn agrees_with_deterministic_operator() {
        let g = RadialGrid::geometric(128, 1e-4, 1e2).unwrap();
        let f = initial_bose(0.5, ThetaProfile::Tilted { a: 1.0 }, &g).unwrap();
        let cfg = CollisionConfig::default();
        let det = collision_rhs_iso(&f, &cfg).unwrap();
        for &p in &[0.5f64, 1.0] {
            let i = g
                .sqrt_nodes()
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - p).abs().total_cmp(&(b.1 - p).abs()))
                .unwrap()
                .0;
            let (est, se) = collision_mc(&f, g.sqrt_nodes()[i], 150_000, 7, &cfg).unwrap();
            let z = (det.rate[i] - est) / se;
            assert!(z.abs() < 4.0, "p={p}: det {} mc {est} se {se} z {z}", det.rate[i]);
        }
    }

    #[test]
    fn outside_support_rejected() {
        let g = RadialGrid::geometric(64, 1e-4, 1e2).unwrap();
        let f = DistributionIso::zero(g);
        assert!(collision_mc(&f, 11.0, 2000, 1, &CollisionConfig::default()).is_err());
        assert!(collision_mc(&f, 1e-3, 2000, 1, &CollisionConfig::default()).is_err());
        assert!(collision_mc(&f, 1.0, 10, 1, &CollisionConfig::default()).is_err());
    }
}
