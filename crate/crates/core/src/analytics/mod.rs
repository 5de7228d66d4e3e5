//! Closed-form leading-order results: thermal moments, correlators,
//! impulse and general-coupling probabilities, inequalities, asymptotics
//! and enhancement maps.

pub mod amplitudes;
pub mod checks;
pub mod correlators;
pub mod moments;
pub mod quadrature;
pub mod region;
pub mod work;

pub use amplitudes::{compute_amplitudes, Amplitudes};
pub use correlators::{correlator_dist, correlator_indist, single_avg, single_avg_as_printed, CorrelatorValue};
pub use moments::{moment_f, moment_h, MomentSet};
pub use work::{compare, general_probability, general_work, impulse_work, Comparison, Method, WorkRecord};
