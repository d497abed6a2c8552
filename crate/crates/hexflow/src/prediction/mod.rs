//! Temporal prediction of the velocity posterior.
//!
//! Two engines advance the per-node velocity distributions between
//! measurements:
//!
//! * [`KernelEngine`] applies the discrete Gaussian prior in one shot: every
//!   source node and channel throws a straight-trajectory, constant-velocity
//!   Gaussian plume forward by the time increment. Exact in the sense of the
//!   prior, but the connection range grows with speed.
//! * [`PdeEngine`] integrates the local forward (Fokker-Planck) equation
//!   with explicit finite differences: velocity diffusion on the polar mesh,
//!   spatial diffusion plus drift on the six hex neighbours, and the
//!   mean-flux normalization coupling. Only nearest-neighbour connections,
//!   many small steps.
//!
//! The two agree in the limit of small steps, which `validate` checks by
//! running them side by side on small instances.

mod kernel;
mod pde;
mod stability;

pub use kernel::{predict_kernel, KernelEngine};
pub use pde::{predict_pde_step, PdeEngine, PdeOptions, SpeedBoundary};
pub use stability::stability_max_dt;

use crate::error::{Error, Result};

/// Threshold below which a negative field value is treated as round-off and
/// clamped; anything more negative is a real positivity failure.
pub const NEGATIVE_CLAMP: f64 = 1e-12;

/// Covariance parameters of the temporal-coherence prior.
///
/// `sigma_x_*` (jumps) bound how far a dot may stray from its straight
/// trajectory per unit time; `sigma_v_*` (jps) bound how fast its velocity
/// may wander. Longitudinal components act along the channel direction.
/// Zeros are accepted so degenerate configurations (pure drift, single-term
/// diffusion) can be exercised; the experiment harness insists on strictly
/// positive values for real runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorParams {
    pub sigma_x_l: f64,
    pub sigma_x_t: f64,
    pub sigma_v_l: f64,
    pub sigma_v_t: f64,
}

impl PriorParams {
    pub fn new(sigma_x_l: f64, sigma_x_t: f64, sigma_v_l: f64, sigma_v_t: f64) -> Result<Self> {
        let all = [sigma_x_l, sigma_x_t, sigma_v_l, sigma_v_t];
        if all.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::invalid("prior sigmas must be finite and non-negative"));
        }
        Ok(Self {
            sigma_x_l,
            sigma_x_t,
            sigma_v_l,
            sigma_v_t,
        })
    }
}

impl Default for PriorParams {
    /// 0.6/0.3 jumps spatially, 0.8/0.4 jps in velocity.
    fn default() -> Self {
        Self {
            sigma_x_l: 0.6,
            sigma_x_t: 0.3,
            sigma_v_l: 0.8,
            sigma_v_t: 0.4,
        }
    }
}

/// Per-node probability distribution over velocity channels.
///
/// Node-major storage; every node's `M` activities are non-negative and sum
/// to one after every public operation. `time` carries the simulation clock
/// in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityField {
    data: Vec<f64>,
    n_nodes: usize,
    n_channels: usize,
    time: f64,
}

impl ProbabilityField {
    /// Maximum-entropy initial state: `1/M` on every channel of every node.
    pub fn uniform(n_nodes: usize, n_channels: usize) -> Self {
        assert!(n_nodes > 0 && n_channels > 0);
        Self {
            data: vec![1.0 / n_channels as f64; n_nodes * n_channels],
            n_nodes,
            n_channels,
            time: 0.0,
        }
    }

    /// Build from raw per-node vectors, normalizing each node.
    pub fn from_node_vectors(vectors: &[Vec<f64>]) -> Result<Self> {
        if vectors.is_empty() || vectors[0].is_empty() {
            return Err(Error::invalid("field needs at least one node and channel"));
        }
        let m = vectors[0].len();
        let mut data = Vec::with_capacity(vectors.len() * m);
        for (node, v) in vectors.iter().enumerate() {
            if v.len() != m {
                return Err(Error::invalid("ragged node vectors"));
            }
            let sum: f64 = v.iter().sum();
            if !(sum > 0.0) || v.iter().any(|&a| a < 0.0) {
                return Err(Error::invalid(format!(
                    "node {node} vector is not a valid unnormalized distribution"
                )));
            }
            data.extend(v.iter().map(|&a| a / sum));
        }
        Ok(Self {
            data,
            n_nodes: vectors.len(),
            n_channels: m,
            time: 0.0,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    pub fn node(&self, node: usize) -> &[f64] {
        &self.data[node * self.n_channels..(node + 1) * self.n_channels]
    }

    pub fn node_mut(&mut self, node: usize) -> &mut [f64] {
        &mut self.data[node * self.n_channels..(node + 1) * self.n_channels]
    }

    pub(crate) fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub(crate) fn blank_like(&self) -> Self {
        Self {
            data: vec![0.0; self.data.len()],
            n_nodes: self.n_nodes,
            n_channels: self.n_channels,
            time: self.time,
        }
    }

    /// Largest per-node deviation of the channel sum from one.
    pub fn max_normalization_error(&self) -> f64 {
        (0..self.n_nodes)
            .map(|n| (self.node(n).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Smallest activity anywhere in the field.
    pub fn min_activity(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Clamp round-off negatives and renormalize every node.
    ///
    /// Negative values with magnitude above [`NEGATIVE_CLAMP`] are reported
    /// as errors rather than silently repaired.
    pub fn normalize(&mut self) -> Result<()> {
        self.repair_with(NEGATIVE_CLAMP)
    }

    /// Like [`repair`](Self::repair) with an explicit clamp tolerance.
    pub(crate) fn repair_with(&mut self, clamp_tol: f64) -> Result<()> {
        let m = self.n_channels;
        for node in 0..self.n_nodes {
            let slice = &mut self.data[node * m..(node + 1) * m];
            let mut sum = 0.0;
            for (channel, a) in slice.iter_mut().enumerate() {
                if *a < 0.0 {
                    if *a < -clamp_tol {
                        return Err(Error::NegativeProbability {
                            node,
                            channel,
                            value: *a,
                        });
                    }
                    *a = 0.0;
                }
                sum += *a;
            }
            if !(sum > 0.0) {
                return Err(Error::DegenerateUpdate { node, norm: sum });
            }
            for a in slice.iter_mut() {
                *a /= sum;
            }
        }
        Ok(())
    }
}
