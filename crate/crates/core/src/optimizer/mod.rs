//! Cache placement optimizers.

pub mod baseline;
pub mod greedy;
pub mod joint;
pub mod lp;
pub mod relaxed;

pub use baseline::{brute_force_placement, mplp_baseline, BruteForceResult, BRUTE_FORCE_LIMIT};
pub use greedy::{check_stability, greedy_round_alg1, z_table, GreedyOutcome, StabilityReport};
pub use joint::{alternating_alg2, equal_cluster_budgets, JointOptions, JointSolution};
pub use lp::{lp_solve, LpProblem, LpRow, LpSolution, Simplex};
pub use relaxed::{solve_relaxed_placement, RelaxOptions, RelaxedPlacement};
