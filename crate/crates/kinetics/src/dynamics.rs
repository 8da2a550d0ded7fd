//! Time integration of the isotropic kinetic equation up to blow-up.
//!
//! Explicit Dormand-Prince 5(4) embedded pair with PI step control. Near
//! blow-up the right-hand side stiffens like 1/(T-t); the controller shrinks
//! the step proportionally, so the run reaches the singular time in
//! logarithmically many steps and terminates on an explicit, reproducible
//! rule: occupation ceiling reached, or step floor hit while the maximum has
//! grown (a step-floor hit without growth is reported as stiffness failure).

use crate::collision::{collision_rhs_iso, moments, CollisionConfig, MomentReport};
use crate::error::KineticsError;
use crate::grid::DistributionIso;

#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub max_steps: usize,
    /// Store a full snapshot every this many accepted steps (>= 1).
    pub snapshot_every: usize,
    /// Declare blow-up when max f reaches this multiple of the initial max.
    pub blowup_ceiling: f64,
    /// Growth factor that counts as a blow-up signature when the step
    /// floor is hit.
    pub growth_signature: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            rtol: 1e-6,
            atol: 1e-10,
            dt_init: 1e-4,
            dt_min: 1e-12,
            dt_max: 0.1,
            max_steps: 2_000_000,
            snapshot_every: 1,
            blowup_ceiling: 1e6,
            growth_signature: 10.0,
        }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<(), KineticsError> {
        for (what, v) in [
            ("rtol", self.rtol),
            ("atol", self.atol),
            ("dt_init", self.dt_init),
            ("dt_min", self.dt_min),
            ("dt_max", self.dt_max),
        ] {
            if !(v > 0.0) {
                return Err(KineticsError::ParamDomain {
                    what,
                    value: v,
                    constraint: "must be > 0",
                });
            }
        }
        if self.snapshot_every == 0 {
            return Err(KineticsError::ParamDomain {
                what: "snapshot_every",
                value: 0.0,
                constraint: "must be >= 1",
            });
        }
        Ok(())
    }
}

/// Per accepted step diagnostics; the maximum-occupation series drives
/// blow-up detection without storing every snapshot.
#[derive(Debug, Clone, Copy)]
pub struct StepDiag {
    pub t: f64,
    pub dt: f64,
    pub f_max: f64,
    pub entropy: f64,
    pub number: f64,
    pub energy: f64,
    /// Number functional of occupation clipped to zero during this step.
    pub clipped_mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EndState {
    ReachedTEnd,
    BlowUp { t: f64 },
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<(f64, DistributionIso, MomentReport)>,
    pub steps: Vec<StepDiag>,
    pub end: EndState,
    pub clipped_total: f64,
    pub rhs_evals: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &DistributionIso {
        &self.samples.last().expect("trajectory has samples").1
    }

    /// The (t, max f) series at accepted-step resolution.
    pub fn fmax_series(&self) -> Vec<(f64, f64)> {
        self.steps.iter().map(|s| (s.t, s.f_max)).collect()
    }

    /// Rebuild a trajectory from stored snapshots (resume, external files).
    pub fn from_snapshots(
        samples: Vec<(f64, DistributionIso, MomentReport)>,
        end: EndState,
    ) -> Self {
        let steps = samples
            .iter()
            .map(|(t, f, m)| StepDiag {
                t: *t,
                dt: 0.0,
                f_max: f.max_value(),
                entropy: m.entropy,
                number: m.number,
                energy: m.energy,
                clipped_mass: 0.0,
            })
            .collect();
        Trajectory {
            samples,
            steps,
            end,
            clipped_total: 0.0,
            rhs_evals: 0,
        }
    }
}

const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate the kinetic equation from `f0` to `t_end` (or blow-up).
pub fn evolve(
    f0: &DistributionIso,
    t_end: f64,
    ctrl: &StepControl,
    cfg: &CollisionConfig,
) -> Result<Trajectory, KineticsError> {
    ctrl.validate()?;
    cfg.validate()?;
    if !(t_end > 0.0) {
        return Err(KineticsError::ParamDomain {
            what: "t_end",
            value: t_end,
            constraint: "must be > 0",
        });
    }
    let grid = f0.grid().clone();
    let n = grid.len();
    let fmax0 = f0.max_value().max(1e-300);

    let mut y = f0.values().to_vec();
    let mut t = 0.0f64;
    let mut dt = ctrl.dt_init.min(ctrl.dt_max).min(t_end);
    let mut err_prev: f64 = 1.0;
    let mut rhs_evals = 0usize;
    let mut clipped_total = 0.0;

    let mut eval = |vals: &[f64], clipped: &mut f64| -> Result<Vec<f64>, KineticsError> {
        let mut v = vals.to_vec();
        let mut c = 0.0;
        for (i, x) in v.iter_mut().enumerate() {
            if *x < 0.0 {
                c += -*x * grid.weights()[i] * grid.sqrt_nodes()[i];
                *x = 0.0;
            }
        }
        *clipped += c * 2.0 * std::f64::consts::PI;
        let f = DistributionIso::new(grid.clone(), v)?;
        rhs_evals += 1;
        Ok(collision_rhs_iso(&f, cfg)?.rate)
    };

    let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
    let mut step_clip = 0.0;
    k.push(eval(&y, &mut step_clip)?);

    let record = |t: f64, vals: &[f64], clip: f64, dt: f64| -> (StepDiag, DistributionIso) {
        let f = DistributionIso::new(grid.clone(), vals.to_vec()).expect("clipped state valid");
        let m = moments(&f, cfg.occupancy_c);
        (
            StepDiag {
                t,
                dt,
                f_max: f.max_value(),
                entropy: m.entropy,
                number: m.number,
                energy: m.energy,
                clipped_mass: clip,
            },
            f,
        )
    };

    let (d0, fsnap0) = record(0.0, &y, 0.0, dt);
    let m0 = moments(&fsnap0, cfg.occupancy_c);
    let mut samples = vec![(0.0, fsnap0, m0)];
    let mut steps = vec![d0];

    let mut accepted_since_snapshot = 0usize;
    let mut end = EndState::ReachedTEnd;
    let mut nsteps = 0usize;

    'outer: while t < t_end {
        if nsteps >= ctrl.max_steps {
            return Err(KineticsError::Numerical(format!(
                "step budget {} exhausted at t = {t}",
                ctrl.max_steps
            )));
        }
        nsteps += 1;
        dt = dt.min(t_end - t).min(ctrl.dt_max);

        // stages 2..7
        let mut ytmp = vec![0.0; n];
        for s in 0..6 {
            for i in 0..n {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s + 1) {
                    let a = A[s][j];
                    if a != 0.0 {
                        acc += dt * a * kj[i];
                    }
                }
                ytmp[i] = acc;
            }
            if k.len() < s + 2 {
                k.push(eval(&ytmp, &mut step_clip)?);
            } else {
                k[s + 1] = eval(&ytmp, &mut step_clip)?;
            }
        }

        // 5th order solution and embedded error
        let mut ynew = vec![0.0; n];
        let mut err = 0.0;
        for i in 0..n {
            let mut acc5 = y[i];
            let mut acc4 = y[i];
            for s in 0..7 {
                acc5 += dt * B5[s] * k[s][i];
                acc4 += dt * B4[s] * k[s][i];
            }
            ynew[i] = acc5;
            let scale = ctrl.atol + ctrl.rtol * acc5.abs().max(y[i].abs());
            let e = (acc5 - acc4) / scale;
            err += e * e;
        }
        err = (err / n as f64).sqrt();

        if err <= 1.0 || dt <= ctrl.dt_min {
            // accept
            let mut clip_here = 0.0;
            for (i, x) in ynew.iter_mut().enumerate() {
                if *x < 0.0 {
                    clip_here +=
                        -*x * grid.weights()[i] * grid.sqrt_nodes()[i] * 2.0 * std::f64::consts::PI;
                    *x = 0.0;
                }
            }
            clipped_total += clip_here + step_clip;
            t += dt;
            y = ynew;
            let (diag, fsnap) = record(t, &y, clip_here + step_clip, dt);
            step_clip = 0.0;
            let fmax = diag.f_max;
            steps.push(diag);
            accepted_since_snapshot += 1;
            if accepted_since_snapshot >= ctrl.snapshot_every || t >= t_end {
                let m = moments(&fsnap, cfg.occupancy_c);
                samples.push((t, fsnap, m));
                accepted_since_snapshot = 0;
            }

            if fmax >= ctrl.blowup_ceiling * fmax0 {
                end = EndState::BlowUp { t };
                break 'outer;
            }

            // FSAL: stage 7 was evaluated at the (clipped) accepted state
            let k7 = k.pop().expect("seven stages");
            k.clear();
            k.push(k7);

            let fac = 0.9 * err.max(1e-10).powf(-0.2) * err_prev.max(1e-10).powf(0.04);
            err_prev = err.max(1e-10);
            dt = (dt * fac.clamp(0.2, 5.0)).min(ctrl.dt_max);
            if dt < ctrl.dt_min {
                if fmax >= ctrl.growth_signature * fmax0 {
                    end = EndState::BlowUp { t };
                    break 'outer;
                }
                return Err(KineticsError::StiffnessFailure { t, dt });
            }
        } else {
            // reject
            step_clip = 0.0;
            let fac = 0.9 * err.powf(-0.2);
            dt *= fac.clamp(0.1, 0.9);
            if dt < ctrl.dt_min {
                let fmax = y.iter().cloned().fold(0.0, f64::max);
                if fmax >= ctrl.growth_signature * fmax0 {
                    end = EndState::BlowUp { t };
                    break 'outer;
                }
                return Err(KineticsError::StiffnessFailure { t, dt });
            }
        }
    }

    // ensure the final state is stored
    if samples.last().map(|(ts, _, _)| *ts) != Some(t) {
        let f = DistributionIso::new(grid.clone(), y.clone())?;
        let m = moments(&f, cfg.occupancy_c);
        samples.push((t, f, m));
    }

    Ok(Trajectory {
        samples,
        steps,
        end,
        clipped_total,
        rhs_evals,
    })
}
