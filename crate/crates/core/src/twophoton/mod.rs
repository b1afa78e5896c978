//! Real-space dynamics of two excitations shared between the waveguide, the
//! atom and the cavity.

mod engine;
mod io;
mod state;

pub use engine::{
    evolve_two_photon, evolve_until_steady, SteadyOutcome, SteadyStateRule, TwoPhotonEngine, TwoPhotonOptions, Watch,
    TWO_PHOTON_COLUMNS,
};
pub use io::{load_ee2p, read_ee2p, save_ee2p, write_ee2p, EE2P_MAGIC, EE2P_VERSION};
pub use state::{
    build_gaussian_two_photon, bunching_reference, extract_outgoing, make_release_state, p_ee, time_reverse, Observables,
    PulseDescriptor, TwoPhotonPulse, TwoPhotonState,
};

#[cfg(test)]
mod tests;
