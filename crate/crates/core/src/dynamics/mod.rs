//! Word dynamics: the exact freeness oracle, reduced-length statistics,
//! Lyapunov exponents and the two-operator growth bound.

mod lyapunov;
mod oracle;
mod stats;
mod twoops;

pub use lyapunov::{estimate_lyapunov, estimate_lyapunov_pair, LyapunovEstimate, EXACT_CHECK_BELOW, RENORM_EVERY};
pub use oracle::{falsify_freeness, MAX_ORACLE_LEN};
pub use stats::{exact_mean_reduced_ratio, reduced_length_stats, WordStats};
pub use twoops::{check_twoops, TwoOpsReport, TwoOpsStatus};
