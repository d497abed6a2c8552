//! Robust likelihood over velocity channels.
//!
//! The likelihood of the observation activities under channel `mu` is the
//! dot product of the activities with a tuning curve centred on `v_mu`. The
//! tuning curves are Gaussians over the channel set, normalized so each
//! column sums to one, and strictly positive: no observation, however
//! discrepant, can drive any hypothesis to zero. That positive floor is what
//! lets the estimator shrug off outliers instead of being captured by them.

use crate::error::{Error, Result};
use crate::gauss::{self, Frame};
use crate::geometry::VelocityGrid;
use crate::measurement::MeasurementField;

/// Tuning curves of the likelihood stage: `F[i][mu] = f_i(v_mu)`, stored
/// row-major (`i * M + mu`), each column summing to one.
#[derive(Debug, Clone)]
pub struct TuningMatrix {
    data: Vec<f64>,
    m: usize,
    pub sigma_lv_l: f64,
    pub sigma_lv_t: f64,
}

impl TuningMatrix {
    pub fn n_channels(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, i: usize, mu: usize) -> f64 {
        self.data[i * self.m + mu]
    }

    /// Smallest entry; a lower bound for any likelihood of a normalized
    /// observation vector.
    pub fn min_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Build the tuning matrix for a velocity grid.
///
/// `F[i][mu] = G(v_i - v_mu; Sigma(theta_mu)) / sum_j G(v_j - v_mu; ...)`,
/// with the covariance diagonal in the frame of the hypothesis direction
/// `theta_mu` (longitudinal variance `sigma_lv_l^2`, transverse
/// `sigma_lv_t^2`). Longitudinal is expected to dominate; a transverse
/// sigma larger than the longitudinal one is accepted but logged, since it
/// inverts the intended direction-over-speed weighting.
pub fn tuning_matrix(vgrid: &VelocityGrid, sigma_lv_l: f64, sigma_lv_t: f64) -> Result<TuningMatrix> {
    if !(sigma_lv_l > 0.0) || !(sigma_lv_t > 0.0) {
        return Err(Error::invalid("likelihood sigmas must be positive"));
    }
    if sigma_lv_l < sigma_lv_t {
        log::warn!(
            "likelihood anisotropy inverted: sigma_lv_l = {sigma_lv_l} < sigma_lv_t = {sigma_lv_t}"
        );
    }
    let m = vgrid.n_channels();
    let mut data = vec![0.0; m * m];
    for mu in 0..m {
        let hyp = vgrid.channel(mu);
        let frame = Frame::new(hyp.direction);
        let mut col_sum = 0.0;
        for i in 0..m {
            let vi = vgrid.channel(i);
            let w = gauss::weight(&frame, [vi.vx - hyp.vx, vi.vy - hyp.vy], sigma_lv_l, sigma_lv_t);
            data[i * m + mu] = w;
            col_sum += w;
        }
        for i in 0..m {
            data[i * m + mu] /= col_sum;
        }
    }
    Ok(TuningMatrix {
        data,
        m,
        sigma_lv_l,
        sigma_lv_t,
    })
}

/// Per-node likelihood vectors, node-major storage. Entries are strictly
/// positive but not normalized; any per-node positive rescaling leaves the
/// Bayes update unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodField {
    data: Vec<f64>,
    n_nodes: usize,
    n_channels: usize,
}

impl LikelihoodField {
    /// Constant likelihood `1/M` everywhere: the no-information case.
    pub fn uniform(n_nodes: usize, n_channels: usize) -> Self {
        Self {
            data: vec![1.0 / n_channels as f64; n_nodes * n_channels],
            n_nodes,
            n_channels,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn node(&self, node: usize) -> &[f64] {
        &self.data[node * self.n_channels..(node + 1) * self.n_channels]
    }

    pub fn node_mut(&mut self, node: usize) -> &mut [f64] {
        &mut self.data[node * self.n_channels..(node + 1) * self.n_channels]
    }
}

/// Evaluate the likelihood of every channel at every node:
/// `L_mu(x) = sum_i phi_i(x) F[i][mu]`.
pub fn evaluate(phi: &MeasurementField, tuning: &TuningMatrix) -> Result<LikelihoodField> {
    let m = tuning.n_channels();
    if phi.n_channels() != m {
        return Err(Error::invalid(format!(
            "measurement field has {} channels, tuning matrix {}",
            phi.n_channels(),
            m
        )));
    }
    let n = phi.n_nodes();
    let mut out = LikelihoodField {
        data: vec![0.0; n * m],
        n_nodes: n,
        n_channels: m,
    };
    for node in 0..n {
        let acts = phi.node(node);
        let like = out.node_mut(node);
        for (i, &a) in acts.iter().enumerate() {
            let row = &tuning.data[i * m..(i + 1) * m];
            for (l, &f) in like.iter_mut().zip(row) {
                *l += a * f;
            }
        }
    }
    Ok(out)
}
