//! Generic piecewise-deterministic Markov process machinery.

pub mod ctmc;
pub mod engine;
pub mod field;
pub mod ode;
pub mod rate;
pub mod trajectory;

pub use ctmc::{simulate_ctmc, EnvClock, EnvPath, EnvSource};
pub use engine::{
    simulate_pdmp, simulate_pdmp_on_path, Boundary, JumpKernel, JumpRate, Jumps, PdmpModel, Recording, SwitchedSystem,
};
pub use field::{
    ConstantField, FnField, LinearField, LotkaVolterra, MixtureField, ScaledField, SharedField, VectorField, ZeroField,
};
pub use ode::{hit_time, integrate_flow, Crossing, IntegratorConfig, Region, StepControl};
pub use rate::RateMatrix;
pub use trajectory::{Event, EventKind, Trajectory};
