//! Lacunary sums of atom blocks: the weighted-divergence counterexamples and
//! the shift-semigroup vector.

pub mod divergence;
pub mod schedule;
pub mod shift;
pub mod sum;

pub use divergence::{divergence_scan, divergence_suite, fit_window_constants, DivergenceReport, WindowConstants, WindowReport};
pub use schedule::{select_k_sequence, GammaSchedule, GrowthRule};
pub use shift::{shift_semigroup_suite, ShiftReport, ShiftSuiteConfig};
pub use sum::{f_sum_eval, g_sum_eval, Construction, CounterexampleSpec, Target};
