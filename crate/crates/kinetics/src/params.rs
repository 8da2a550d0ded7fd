//! Physical parameters of the weakly interacting Bose gas and their
//! reduction to the dimensionless system used by the solvers.

use crate::error::KineticsError;

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;

/// Physical inputs in SI units.
///
/// The de Broglie length plays the role of the typical thermal wavelength
/// `hbar / sqrt(2 m k_B T)`; the temperature here is only a characteristic
/// energy scale of the initial data, not a thermodynamic temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Particle mass, kg.
    pub mass: f64,
    /// s-wave scattering length, m. Zero is allowed (free gas) but degenerate.
    pub scattering_length: f64,
    /// de Broglie length lambda, m.
    pub de_broglie: f64,
    /// Mean interparticle distance d, m.
    pub interparticle: f64,
    /// Number density, m^-3. Must equal d^-3 when both are given.
    pub density: Option<f64>,
    /// Characteristic temperature scale, K.
    pub temp_scale: Option<f64>,
}

impl PhysicalParams {
    pub fn new(
        mass: f64,
        scattering_length: f64,
        de_broglie: f64,
        interparticle: f64,
    ) -> Result<Self, KineticsError> {
        let p = PhysicalParams {
            mass,
            scattering_length,
            de_broglie,
            interparticle,
            density: None,
            temp_scale: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_density(mut self, n: f64) -> Result<Self, KineticsError> {
        self.density = Some(n);
        self.validate()?;
        Ok(self)
    }

    pub fn with_temp_scale(mut self, t: f64) -> Result<Self, KineticsError> {
        self.temp_scale = Some(t);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), KineticsError> {
        let positive = [
            ("mass", self.mass),
            ("de_broglie", self.de_broglie),
            ("interparticle", self.interparticle),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(KineticsError::ParamDomain {
                    what: name,
                    value: v,
                    constraint: "must be finite and > 0",
                });
            }
        }
        if self.scattering_length < 0.0 || !self.scattering_length.is_finite() {
            return Err(KineticsError::ParamDomain {
                what: "scattering_length",
                value: self.scattering_length,
                constraint: "must be finite and >= 0",
            });
        }
        if let Some(n) = self.density {
            if !(n > 0.0) {
                return Err(KineticsError::ParamDomain {
                    what: "density",
                    value: n,
                    constraint: "must be > 0",
                });
            }
            let implied = self.interparticle.powi(-3);
            if ((n - implied) / implied).abs() > 1e-12 {
                return Err(KineticsError::ParamDomain {
                    what: "density",
                    value: n,
                    constraint: "must equal interparticle^-3 to 1e-12 relative",
                });
            }
        }
        if let Some(t) = self.temp_scale {
            if !(t > 0.0) {
                return Err(KineticsError::ParamDomain {
                    what: "temp_scale",
                    value: t,
                    constraint: "must be > 0",
                });
            }
        }
        Ok(())
    }

    /// Contact coupling g = 4 pi a hbar^2 / m, J m^3.
    pub fn coupling(&self) -> f64 {
        4.0 * std::f64::consts::PI * self.scattering_length * HBAR * HBAR / self.mass
    }

    /// Number density, from the explicit field or d^-3.
    pub fn number_density(&self) -> f64 {
        self.density.unwrap_or_else(|| self.interparticle.powi(-3))
    }
}

/// Derived dimensionless parameters and the scale factors mapping back
/// to SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonDimParams {
    /// The small parameter eps = 8 pi a lambda^2 / d^3.
    pub epsilon: f64,
    /// Kinetic time unit 2 m lambda^2 / (hbar eps^2), s.
    pub time_scale: f64,
    /// Length unit lambda, m.
    pub length_scale: f64,
    /// Momentum unit hbar / lambda, kg m/s.
    pub momentum_scale: f64,
    /// Occupancy constant (d / (2 pi lambda))^3 replacing 1 in the
    /// stimulated factors.
    pub occupancy_c: f64,
    /// Set when eps >= 0.3: the weak-coupling assumption is strained.
    pub weak_coupling_strained: bool,
    /// Set when eps == 0: free gas, the kinetic time scale degenerates.
    pub free_gas: bool,
}

/// Reduce physical inputs to the dimensionless parameter set.
pub fn nondimensionalize(params: &PhysicalParams) -> Result<NonDimParams, KineticsError> {
    params.validate()?;
    let lam = params.de_broglie;
    let d = params.interparticle;
    let epsilon = 8.0 * std::f64::consts::PI * params.scattering_length * lam * lam / d.powi(3);
    let free_gas = epsilon == 0.0;
    let time_scale = if free_gas {
        f64::INFINITY
    } else {
        2.0 * params.mass * lam * lam / (HBAR * epsilon * epsilon)
    };
    Ok(NonDimParams {
        epsilon,
        time_scale,
        length_scale: lam,
        momentum_scale: HBAR / lam,
        occupancy_c: (d / (2.0 * std::f64::consts::PI * lam)).powi(3),
        weak_coupling_strained: epsilon >= 0.3,
        free_gas,
    })
}

impl NonDimParams {
    /// Map a dimensionless momentum magnitude to kg m/s.
    pub fn momentum_to_si(&self, p: f64) -> f64 {
        p * self.momentum_scale
    }

    /// Map a physical momentum magnitude to the dimensionless value.
    pub fn momentum_from_si(&self, p_si: f64) -> f64 {
        p_si / self.momentum_scale
    }
}
