//! Hartree-Fock-Bogoliubov ground states of radially symmetric systems of
//! attractive fermions, discretized on piecewise-linear radial elements.

pub mod basis;
pub mod chempot;
pub mod driver;
pub mod error;
pub mod interaction;
pub mod linalg;
pub mod model;
pub mod reference;
pub mod scf;
pub mod state;

pub use basis::{GridKind, Origin, RadialBasis, RadialGrid};
pub use chempot::{MuOptions, MuStrategy, Pencil};
pub use driver::{KernelConfig, RunConfig, RunSummary, SweepParameter};
pub use error::{HfbError, Result};
pub use interaction::{NuclearKernel, TwoBodyTensor};
pub use model::Model;
pub use scf::{Algorithm, ConvergenceReport, Mode, ScfConfig, Status};
pub use state::{EnergyBreakdown, FockFamily, HfbState};
