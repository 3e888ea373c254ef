//! Device description, control schedules and quantum-state containers.

mod noise;
mod profile;
mod schedule;
mod state;

pub use noise::{apply_noise, NoiseScope, NoiseSpec, Sign};
pub use profile::{load_profile, DeviceProfile, ExchangeModeName};
pub use schedule::{DriveTone, FrameEvent, PulseSegment, Schedule};
pub use state::{basis_labels, DensityMatrix, QuantumState};
