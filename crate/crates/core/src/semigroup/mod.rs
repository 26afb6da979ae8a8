//! Finite-dimensional semigroups: damped waves, resolvent scans, decay fits,
//! cutoff identities and a diagonal example with slow orbit decay.

pub mod cutoff;
pub mod decay;
pub mod diagonal;
pub mod evolve;
pub mod scan;
pub mod wave;

pub use cutoff::{cutoff_transform_check, CutoffProblem, CutoffReport};
pub use decay::{rate_sandwich_check, weighted_decay_suite, SandwichReport, TabulatedRate, WeightedDecayReport};
pub use diagonal::{c0_example_suite, DiagonalReport, DiagonalSemigroup};
pub use evolve::{energy_derivative_check, evolve, EnergyCheck, Trajectory};
pub use scan::{resolvent_norm_scan, DecaySeries, ResolventScan};
pub use wave::{assemble_damped_wave, BoundaryCondition, DampedWaveSystem, Damping, EnergyFrame};
