//! Slot-level Monte Carlo of sensing and MAC behaviour.

mod mac;
pub mod scheduler;
mod sensing;
pub mod stats;
pub mod traffic;

pub use mac::{run_mac_sim, MacSimConfig, MacSimReport, ResumePolicy};
pub use scheduler::switch_scheduler;
pub use sensing::{run_sensing_sim, SensingSimConfig, SensingSimReport};
pub use stats::{batch_means, SimEstimate};
pub use traffic::{generate_pu_sequence, DurationLaw, PuProcess, PuTraffic};
