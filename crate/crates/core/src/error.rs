use thiserror::Error;

/// Errors raised by the model, the dynamical engines and the protocols.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate couplings: V_A and V_C coincide while the atom and cavity are detuned")]
    DegenerateCouplings,

    #[error("the waveguide couplings are both zero")]
    ZeroCoupling,

    #[error("singular denominator in the three-mode embedded-eigenstate condition ({value:e})")]
    SingularDenominator { value: f64 },

    #[error("no real atom-cavity coupling satisfies the three-mode condition (g^2 = {g_squared:e})")]
    NoRealCoupling { g_squared: f64 },

    #[error("pulse centred at {center} with width {sigma} does not fit inside the grid with a 5-sigma margin")]
    PulseOutOfDomain { center: f64, sigma: f64 },

    #[error("support violation: {0}")]
    SupportViolation(String),

    #[error("time step {dt} must equal the cell size {dx}")]
    StepMismatch { dt: f64, dx: f64 },

    #[error("amplitude {amplitude:e} reached the grid boundary at t = {t}")]
    BoundaryReached { t: f64, amplitude: f64 },

    #[error("bosonic symmetry drift {drift:e} at t = {t}")]
    SymmetryDrift { t: f64, drift: f64 },

    #[error("norm drift {drift:e} at t = {t}")]
    NormDrift { t: f64, drift: f64 },

    #[error("residual stored population {residual} exceeds the extraction threshold {threshold}")]
    ResidualTooLarge { residual: f64, threshold: f64 },

    #[error("steady state not reached before t = {t_max}")]
    NoSteadyState { t_max: f64 },

    #[error("Fock truncation breached: top-level population {population:e} at t = {t}")]
    TruncationBreach { t: f64, population: f64 },

    #[error("trace drift {drift:e} at t = {t}")]
    TraceDrift { t: f64, drift: f64 },

    #[error("density matrix lost positivity at t = {t}")]
    PositivityLost { t: f64 },

    #[error("no width in the scan reached the residual target {target}")]
    TargetNotMet { target: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("calibration of the two-excitation local block failed (residual {residual:e})")]
    CalibrationFailed { residual: f64 },

    #[error("linear algebra failure: {0}")]
    Numerical(String),

    #[error("i/o: {0}")]
    Io(String),

    #[error("malformed grid file: {0}")]
    Format(String),
}

impl Error {
    /// Short stable name used in CLI diagnostics and run manifests.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "InvalidParameter",
            Error::DegenerateCouplings => "DegenerateCouplings",
            Error::ZeroCoupling => "ZeroCoupling",
            Error::SingularDenominator { .. } => "SingularDenominator",
            Error::NoRealCoupling { .. } => "NoRealCoupling",
            Error::PulseOutOfDomain { .. } => "PulseOutOfDomain",
            Error::SupportViolation(_) => "SupportViolation",
            Error::StepMismatch { .. } => "StepMismatch",
            Error::BoundaryReached { .. } => "BoundaryReached",
            Error::SymmetryDrift { .. } => "SymmetryDrift",
            Error::NormDrift { .. } => "NormDrift",
            Error::ResidualTooLarge { .. } => "ResidualTooLarge",
            Error::NoSteadyState { .. } => "NoSteadyState",
            Error::TruncationBreach { .. } => "TruncationBreach",
            Error::TraceDrift { .. } => "TraceDrift",
            Error::PositivityLost { .. } => "PositivityLost",
            Error::TargetNotMet { .. } => "TargetNotMet",
            Error::GridMismatch(_) => "GridMismatch",
            Error::CalibrationFailed { .. } => "CalibrationFailed",
            Error::Numerical(_) => "Numerical",
            Error::Io(_) => "Io",
            Error::Format(_) => "Format",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
