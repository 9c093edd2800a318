//! Freeness certificates.
//!
//! Two routes: ping-pong on `P(wedge^k R^n)` driven by singular value gaps, and
//! Schottky configurations of isometric circles for `SL_2`. Every certifying
//! inequality carries the slack [`DELTA_NUM`](crate::spectral::DELTA_NUM).

mod contraction;
mod schottky;

pub use contraction::{
    choose_k, empirical_contraction, epsilon_contracting, ping_pong_check, ping_pong_pair,
    very_proximal, ContractionWitness, PingPongCertificate, DEFAULT_EPS, DEFAULT_R_FACTOR,
};
pub use schottky::{
    hausdorff_bound_from_circles, hausdorff_upper_bound, schottky_check, schottky_sl2,
    sl2_fixed_points, Circle, FixedPoints, SchottkyCertificate, BOUNDARY_SAMPLES, HAUSDORFF_K,
};

use serde::{Deserialize, Serialize};

/// Why a certificate was not issued: the first condition that failed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Refusal {
    pub condition: String,
    pub detail: String,
}

impl Refusal {
    pub(crate) fn new(condition: impl Into<String>, detail: impl Into<String>) -> Self {
        Self {
            condition: condition.into(),
            detail: detail.into(),
        }
    }
}

impl std::fmt::Display for Refusal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.condition, self.detail)
    }
}
