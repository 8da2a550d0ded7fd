//! Bose-like family of initial distributions,
//! f0(eps) = z Theta(eps) / (1 - z Theta(eps)).
//!
//! The energy profile Theta is configuration: the plain exponential
//! reproduces a Bose-Einstein distribution with fugacity z, while the
//! polynomial-tilted variant gives genuinely non-equilibrium data.

use std::sync::Arc;

use crate::error::KineticsError;
use crate::grid::{DistributionIso, RadialGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaProfile {
    /// Theta(u) = exp(-u). Note f0 is then exactly Bose-Einstein with
    /// mu = ln z, theta = 1.
    Exponential,
    /// Theta(u) = exp(-u) (1 + a u); a > 0 tilts occupation toward
    /// moderate energies and leaves equilibrium.
    Tilted { a: f64 },
}

impl ThetaProfile {
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            ThetaProfile::Exponential => (-u).exp(),
            ThetaProfile::Tilted { a } => (-u).exp() * (1.0 + a * u),
        }
    }
}

/// Build the initial distribution on `grid`. Fails with a condensed-data
/// error when z Theta reaches 1 anywhere on the grid.
pub fn initial_bose(
    z: f64,
    theta: ThetaProfile,
    grid: &Arc<RadialGrid>,
) -> Result<DistributionIso, KineticsError> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(KineticsError::ParamDomain {
            what: "fugacity z",
            value: z,
            constraint: "must be finite and > 0",
        });
    }
    if let ThetaProfile::Tilted { a } = theta {
        if !(a >= 0.0) || !a.is_finite() {
            return Err(KineticsError::ParamDomain {
                what: "theta profile tilt a",
                value: a,
                constraint: "must be finite and >= 0",
            });
        }
    }
    let mut worst = (0.0f64, 0.0f64);
    let values: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&eps| {
            let zt = z * theta.eval(eps);
            if zt > worst.0 {
                worst = (zt, eps);
            }
            zt / (1.0 - zt)
        })
        .collect();
    if worst.0 >= 1.0 {
        return Err(KineticsError::CondensedInitialData {
            max: worst.0,
            at: worst.1,
        });
    }
    DistributionIso::new(grid.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid() -> Arc<RadialGrid> {
        RadialGrid::geometric(64, 1e-3, 30.0).unwrap()
    }

    #[test]
    fn vacuum_limit() {
        let f = initial_bose(1e-300, ThetaProfile::Exponential, &grid()).unwrap();
        assert!(f.values().iter().all(|&v| v < 1e-250));
    }

    #[test]
    fn forced_value_at_origin() {
        // Theta(0) = 1, z = 0.5 -> f = 0.5/0.5 = 1 at eps -> 0
        let g = RadialGrid::uniform(16, 0.0, 1.0).unwrap();
        let f = initial_bose(0.5, ThetaProfile::Exponential, &g).unwrap();
        assert_relative_eq!(f.values()[0], 1.0, max_relative = 1e-14);
    }

    #[test]
    fn hand_value_z09_eps1() {
        // z = 0.9, Theta = e^-1: 0.33109.../0.66890... (hand arithmetic)
        let g = RadialGrid::uniform(11, 0.0, 2.0).unwrap();
        let f = initial_bose(0.9, ThetaProfile::Exponential, &g).unwrap();
        let i = g.nodes().iter().position(|&e| (e - 1.0).abs() < 1e-12).unwrap();
        assert_relative_eq!(f.values()[i], 0.4949727736996255, max_relative = 1e-12);
    }

    #[test]
    fn condensed_data_rejected() {
        let g = RadialGrid::uniform(16, 0.0, 1.0).unwrap();
        let err = initial_bose(1.0, ThetaProfile::Exponential, &g).unwrap_err();
        match err {
            KineticsError::CondensedInitialData { .. } => {}
            other => panic!("expected condensed-data error, got {other}"),
        }
    }

    #[test]
    fn monotone_in_z_pointwise() {
        let g = grid();
        let f1 = initial_bose(0.3, ThetaProfile::Tilted { a: 0.7 }, &g).unwrap();
        let f2 = initial_bose(0.6, ThetaProfile::Tilted { a: 0.7 }, &g).unwrap();
        for (a, b) in f1.values().iter().zip(f2.values()) {
            assert!(b > a);
        }
    }

    #[test]
    fn monotone_in_eps_for_monotone_theta() {
        let f = initial_bose(0.8, ThetaProfile::Exponential, &grid()).unwrap();
        for w in f.values().windows(2) {
            assert!(w[1] <= w[0]);
        }
    }
}
