use thiserror::Error;

#[derive(Debug, Error)]
pub enum KineticsError {
    #[error("parameter {what} = {value}: {constraint}")]
    ParamDomain {
        what: &'static str,
        value: f64,
        constraint: &'static str,
    },

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("condensed initial data: z*Theta reaches {max} >= 1 at eps = {at}")]
    CondensedInitialData { max: f64, at: f64 },

    #[error("distribution is negative at eps = {at} (f = {value}); clip or reject before calling")]
    NegativeDistribution { at: f64, value: f64 },

    #[error("momentum p = {p} outside grid support [{lo}, {hi}]")]
    OutsideSupport { p: f64, lo: f64, hi: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("capacity: {need_bytes} bytes needed for {what}, budget is {budget_bytes}")]
    Capacity {
        what: &'static str,
        need_bytes: usize,
        budget_bytes: usize,
    },

    #[error("stiffness failure: step size {dt} below floor at t = {t} without blow-up signature")]
    StiffnessFailure { t: f64, dt: f64 },

    #[error("history resolution: {0}")]
    HistoryResolution(String),

    #[error("fit window: {0}")]
    FitWindow(String),

    #[error("resolution: {0}")]
    Resolution(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}
