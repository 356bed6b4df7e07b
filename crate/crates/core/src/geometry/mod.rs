//! Two-tier network geometry and the analytic coverage/rate expressions.

pub mod analytic;
pub mod quad;

pub use analytic::*;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGeometry {
    pub lambda_s: f64,
    pub lambda_m: f64,
    pub alpha_s: f64,
    pub alpha_m: f64,
    /// Outer radius of each cluster annulus, meters.
    pub radii: Vec<f64>,
    /// Cumulative serving-SBS counts `S_1 < S_2 < ...`.
    pub cumulative_counts: Vec<usize>,
    pub p_s: f64,
    pub p_m: f64,
    pub w_s: f64,
    pub w_m: f64,
    pub gamma_s: f64,
    pub gamma_m: f64,
}

impl NetworkGeometry {
    pub fn validate(&self) -> Result<()> {
        if self.radii.is_empty() || self.radii.len() != self.cumulative_counts.len() {
            return Err(invalid("cluster radii and counts must be nonempty and the same length"));
        }
        if !(self.radii[0] > 0.0) || self.radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("cluster radii must be positive and strictly increasing"));
        }
        if self.cumulative_counts[0] == 0 || self.cumulative_counts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("cumulative cluster counts must be strictly increasing from >= 1"));
        }
        if !(self.lambda_s > 0.0 && self.lambda_m > 0.0) {
            return Err(invalid("densities must be positive"));
        }
        if !(self.alpha_s > 2.0 && self.alpha_m > 2.0) {
            return Err(invalid("path-loss exponents must exceed 2"));
        }
        for (name, v) in [("P_s", self.p_s), ("P_m", self.p_m), ("W_s", self.w_s), ("W_m", self.w_m)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(format!("{name} must be positive")));
            }
        }
        if !(self.gamma_s > 0.0 && self.gamma_m > 0.0) {
            return Err(invalid("SIR thresholds must be positive"));
        }
        Ok(())
    }

    pub fn cluster_count(&self) -> usize {
        self.radii.len()
    }

    /// Number of SBSs in cluster `k` (0-based).
    pub fn cluster_size(&self, k: usize) -> usize {
        let prev = if k == 0 { 0 } else { self.cumulative_counts[k - 1] };
        self.cumulative_counts[k] - prev
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        (0..self.cluster_count()).map(|k| self.cluster_size(k)).collect()
    }

    pub fn inner_radius(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.radii[k - 1]
        }
    }

    pub fn with_cluster_sizes(&self, sizes: &[usize]) -> NetworkGeometry {
        let mut acc = 0;
        let cumulative_counts = sizes
            .iter()
            .map(|s| {
                acc += s;
                acc
            })
            .collect();
        NetworkGeometry { cumulative_counts, ..self.clone() }
    }

    pub fn r_ref_s(&self) -> f64 {
        self.w_s * (1.0 + self.gamma_s).log2()
    }

    pub fn r_ref_m(&self) -> f64 {
        self.w_m * (1.0 + self.gamma_m).log2()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub half_width_95: f64,
    pub samples: usize,
}

impl McEstimate {
    pub fn from_samples(xs: &[f64]) -> McEstimate {
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        McEstimate { mean, half_width_95: 1.96 * (var / n as f64).sqrt(), samples: n }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub max_depth: u32,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig { abs_tol: 1e-8, max_depth: 50 }
    }
}
