//! Freeness certificates for two-generator subgroups of `SL_n(Z)`.

pub mod certify;
pub mod dynamics;
pub mod error;
pub mod haar;
pub mod harness;
pub mod matrix;
pub mod rng;
pub mod sampler;
pub mod spectral;
pub mod wedge;
pub mod word;

pub use certify::{
    choose_k, epsilon_contracting, hausdorff_upper_bound, ping_pong_pair, schottky_sl2, very_proximal,
    ContractionWitness, PingPongCertificate, Refusal, SchottkyCertificate,
};
pub use dynamics::{check_twoops, estimate_lyapunov, falsify_freeness, reduced_length_stats, LyapunovEstimate};
pub use error::{Error, Result};
pub use haar::{gap_fraction, haar_density, integrate_region, CartanRegion, Quadrature};
pub use harness::{emit_report, run_experiment, ExperimentConfig, ExperimentReport, ExperimentRow, ReportFormat};
pub use matrix::IntMatrix;
pub use sampler::{enumerate_ball, sample_pairs, BallEnumeration, BallSpec};
pub use spectral::{singular_gap, spectral_norm, svd, SvdTriple, DELTA_NUM};
pub use wedge::{attractor_repeller, point_hyperplane_distance, proj_distance, wedge_matrix, ProjElement, WedgeVector};
pub use word::{evaluate_word, free_reduce, GroupWord, Letter};
