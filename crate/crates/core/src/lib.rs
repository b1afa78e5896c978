pub mod error;
pub mod fit;
pub mod grid;
pub mod linalg;
pub mod local;
pub mod model;
pub mod coherent;
pub mod onephoton;
pub mod protocols;
pub mod scalar;
pub mod trajectory;
pub mod twophoton;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::{Cx, Real};

/// Double-precision instantiations used by the protocols and the CLI.
pub type Params = model::SystemParams<f64>;
pub type ThreeModeParams = model::ThreeModeParams<f64>;
pub type Grid = grid::GridSpec<f64>;
pub type Pulse = grid::PulseSpec<f64>;
pub type SingleState = onephoton::SingleExcState<f64>;
pub type PairState = twophoton::TwoPhotonState<f64>;
pub type PairPulse = twophoton::TwoPhotonPulse<f64>;
pub type Spectrum = model::SpectralSummary<f64>;

/// Single-precision variants for memory-bound two-photon runs.
pub type Params32 = model::SystemParams<f32>;
pub type Grid32 = grid::GridSpec<f32>;
pub type PairState32 = twophoton::TwoPhotonState<f32>;
