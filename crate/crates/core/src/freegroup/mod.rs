//! Two-parameter recurrence families, the scalar recurrence `f_n(z)` and its
//! convergence region, free-group word averages, the Hilbert-space operator
//! experiment, and the dominance and smoothing estimates.
//!
//! The forward coefficient `p_fwd` multiplies the `n + 1` term throughout.

pub mod family;
pub mod dominance;
pub mod recurrence;
pub mod vnwalker;
pub mod words;

pub use family::{make_family, partial_sum, square_sum, Recurrence, RecurrenceFamily};
pub use dominance::{dominance_check, minimal_dominating_constant, power_average, smoothing_decay, SmoothingRow};
pub use recurrence::{cesaro_scalar, characteristic_roots, dp_membership, dp_raster, f_sequence, scalar_oracle, DpQuery, DpRow, ScalarOracle};
pub use vnwalker::{vnwalker_experiment, vnwalker_instance, VnWalkerReport, VnWalkerRow};
pub use words::{free_group_experiment, free_group_family, free_group_p, free_group_words, multi_free_group_sim, word_averaging_operator, FreeGroupSim, ReducedWords};
