//! Bayes fusion of prediction and likelihood, plus readout metrics.
//!
//! The update multiplies each node's predicted distribution by its
//! likelihood vector and renormalizes; the normalizer is reported as the
//! node's *confidence*, the probability the model assigned to the incoming
//! observation. Sharpness is the divergence of a node's distribution from
//! uniform: zero when nothing is known, `ln M` for a one-hot belief.

use crate::error::{Error, Result};
use crate::geometry::VelocityGrid;
use crate::likelihood::LikelihoodField;
use crate::prediction::ProbabilityField;

/// Per-node readout of a distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeMetrics {
    /// Divergence from uniform, in nats; range `[0, ln M]`.
    pub sharpness: f64,
    /// Probability of the latest observation under the prediction.
    pub confidence: f64,
    /// Posterior mean velocity, jps.
    pub mean_velocity: [f64; 2],
    /// Channel with the largest activity.
    pub peak_channel: usize,
}

/// Multiply prediction by likelihood and renormalize per node.
///
/// Returns the posterior field and the per-node normalizers
/// `N(x) = sum_nu alpha_pred_nu(x) L_nu(x)` (the confidence factors).
/// The update is invariant to any positive per-node rescaling of `L`.
pub fn update(
    alpha_pred: &ProbabilityField,
    likelihood: &LikelihoodField,
) -> Result<(ProbabilityField, Vec<f64>)> {
    update_masked(alpha_pred, likelihood, None)
}

/// [`update`] with an optional per-node mask of occluded nodes.
///
/// Masked nodes keep their predicted distribution untouched and report the
/// confidence of a flat observation, `1/M` exactly: skipping the update is
/// algebraically the same as observing uniform activities, whose constant
/// likelihood cancels out of the Bayes ratio.
pub fn update_masked(
    alpha_pred: &ProbabilityField,
    likelihood: &LikelihoodField,
    masked: Option<&[bool]>,
) -> Result<(ProbabilityField, Vec<f64>)> {
    if alpha_pred.n_nodes() != likelihood.n_nodes()
        || alpha_pred.n_channels() != likelihood.n_channels()
    {
        return Err(Error::invalid("prediction and likelihood dimensions differ"));
    }
    if let Some(mask) = masked {
        if mask.len() != alpha_pred.n_nodes() {
            return Err(Error::invalid("mask length does not match node count"));
        }
    }
    let m = alpha_pred.n_channels() as f64;
    let mut posterior = alpha_pred.clone();
    let mut confidence = vec![0.0; alpha_pred.n_nodes()];
    for node in 0..alpha_pred.n_nodes() {
        if masked.is_some_and(|mask| mask[node]) {
            confidence[node] = 1.0 / m;
            continue;
        }
        let like = likelihood.node(node);
        if like.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::invalid(format!(
                "likelihood must be strictly positive (node {node})"
            )));
        }
        let acts = posterior.node_mut(node);
        let mut norm = 0.0;
        for (a, &l) in acts.iter_mut().zip(like) {
            *a *= l;
            norm += *a;
        }
        if norm < 1e-300 {
            return Err(Error::DegenerateUpdate { node, norm });
        }
        for a in acts.iter_mut() {
            *a /= norm;
        }
        confidence[node] = norm;
    }
    Ok((posterior, confidence))
}

/// Divergence of a normalized distribution from uniform:
/// `ln M + sum_mu alpha_mu ln alpha_mu`, with `0 ln 0 = 0`.
pub fn sharpness(alpha: &[f64]) -> Result<f64> {
    let sum: f64 = alpha.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::invalid(format!(
            "sharpness needs a normalized distribution, sum = {sum}"
        )));
    }
    let m = alpha.len() as f64;
    let neg_entropy: f64 = alpha
        .iter()
        .filter(|&&a| a > 0.0)
        .map(|&a| a * a.ln())
        .sum();
    Ok((m.ln() + neg_entropy).max(0.0))
}

/// Node holding the largest single-channel activity in the field, with its
/// lattice position. Ties break to the lowest node index.
pub fn peak_track(
    alpha: &ProbabilityField,
    lattice: &crate::geometry::SpatialLattice,
) -> (usize, [f64; 2]) {
    let mut best_node = 0;
    let mut best = f64::NEG_INFINITY;
    for node in 0..alpha.n_nodes() {
        let peak = alpha.node(node).iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if peak > best {
            best = peak;
            best_node = node;
        }
    }
    (best_node, lattice.position(best_node))
}

/// Posterior mean velocity `sum_mu alpha_mu v_mu`, jps.
pub fn mean_velocity(alpha: &[f64], vgrid: &VelocityGrid) -> [f64; 2] {
    debug_assert_eq!(alpha.len(), vgrid.n_channels());
    let mut v = [0.0, 0.0];
    for (a, ch) in alpha.iter().zip(vgrid.channels()) {
        v[0] += a * ch.vx;
        v[1] += a * ch.vy;
    }
    v
}

/// All per-node metrics in one pass.
pub fn node_metrics(
    alpha: &ProbabilityField,
    confidence: &[f64],
    node: usize,
    vgrid: &VelocityGrid,
) -> Result<NodeMetrics> {
    let acts = alpha.node(node);
    let peak_channel = acts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0);
    Ok(NodeMetrics {
        sharpness: sharpness(acts)?,
        confidence: confidence[node],
        mean_velocity: mean_velocity(acts, vgrid),
        peak_channel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_hex_lattice, build_velocity_grid};
    use std::f64::consts::TAU;

    fn grid30() -> VelocityGrid {
        build_velocity_grid(6, 5, TAU / 6.0, 2.0, 2.0).unwrap()
    }

    #[test]
    fn uniform_likelihood_leaves_the_field_unchanged() {
        let m = 30;
        let mut field = ProbabilityField::uniform(4, m);
        field.node_mut(1).fill(1e-3);
        field.node_mut(1)[3] = 1.0;
        field.normalize().unwrap();
        let like = LikelihoodField::uniform(4, m);
        let (post, conf) = update(&field, &like).unwrap();
        for node in 0..4 {
            for mu in 0..m {
                assert!((post.node(node)[mu] - field.node(node)[mu]).abs() < 1e-12);
            }
            assert!((conf[node] - 1.0 / m as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_prediction_returns_normalized_likelihood() {
        let m = 30;
        let field = ProbabilityField::uniform(2, m);
        let mut like = LikelihoodField::uniform(2, m);
        for mu in 0..m {
            like.node_mut(0)[mu] = (mu + 1) as f64;
        }
        let (post, conf) = update(&field, &like).unwrap();
        let lsum: f64 = like.node(0).iter().sum();
        for mu in 0..m {
            assert!((post.node(0)[mu] - like.node(0)[mu] / lsum).abs() < 1e-12);
        }
        assert!((conf[0] - lsum / m as f64).abs() < 1e-12);
    }

    #[test]
    fn matches_multiply_then_normalize_oracle() {
        let m = 18;
        let mut field = ProbabilityField::uniform(3, m);
        let mut like = LikelihoodField::uniform(3, m);
        for node in 0..3 {
            for mu in 0..m {
                field.node_mut(node)[mu] = (((node * 13 + mu * 5 + 3) % 23) + 1) as f64;
                like.node_mut(node)[mu] = (((node * 7 + mu * 11 + 1) % 19) + 1) as f64;
            }
        }
        field.normalize().unwrap();
        let (post, conf) = update(&field, &like).unwrap();
        for node in 0..3 {
            let prods: Vec<f64> = field
                .node(node)
                .iter()
                .zip(like.node(node))
                .map(|(a, l)| a * l)
                .collect();
            let norm: f64 = prods.iter().sum();
            for mu in 0..m {
                assert!((post.node(node)[mu] - prods[mu] / norm).abs() < 1e-12);
            }
            assert!((conf[node] - norm).abs() < 1e-12);
        }
    }

    #[test]
    fn update_is_invariant_to_positive_likelihood_rescaling() {
        let m = 12;
        let mut field = ProbabilityField::uniform(1, m);
        field.node_mut(0)[2] = 0.5;
        field.normalize().unwrap();
        let mut like = LikelihoodField::uniform(1, m);
        for mu in 0..m {
            like.node_mut(0)[mu] = 0.1 + mu as f64;
        }
        let mut scaled = like.clone();
        for l in scaled.node_mut(0) {
            *l *= 42.0;
        }
        let (a, _) = update(&field, &like).unwrap();
        let (b, _) = update(&field, &scaled).unwrap();
        for mu in 0..m {
            assert!((a.node(0)[mu] - b.node(0)[mu]).abs() < 1e-14);
        }
    }

    #[test]
    fn repeated_concentrated_likelihood_sharpens_to_a_fixed_point() {
        let m = 30;
        let mut field = ProbabilityField::uniform(1, m);
        let mut like = LikelihoodField::uniform(1, m);
        for mu in 0..m {
            like.node_mut(0)[mu] = if mu == 4 { 1.0 } else { 0.01 };
        }
        let mut prev = sharpness(field.node(0)).unwrap();
        for _ in 0..200 {
            let (next, _) = update(&field, &like).unwrap();
            field = next;
            let cur = sharpness(field.node(0)).unwrap();
            assert!(cur >= prev - 1e-12);
            if cur - prev < 1e-6 {
                break;
            }
            prev = cur;
        }
        assert!((sharpness(field.node(0)).unwrap() - (m as f64).ln()).abs() < 1e-3);
    }

    #[test]
    fn sharpness_of_uniform_is_zero() {
        let alpha = vec![1.0 / 30.0; 30];
        assert!(sharpness(&alpha).unwrap().abs() < 1e-12);
    }

    #[test]
    fn sharpness_of_one_hot_is_ln_m() {
        let mut alpha = vec![0.0; 30];
        alpha[7] = 1.0;
        let s = sharpness(&alpha).unwrap();
        assert!((s - 30.0f64.ln()).abs() < 1e-12);
        assert!((s - 3.4012).abs() < 1e-4);
    }

    #[test]
    fn sharpness_of_two_point_distribution() {
        let mut alpha = vec![0.0; 30];
        alpha[3] = 0.5;
        alpha[19] = 0.5;
        let s = sharpness(&alpha).unwrap();
        assert!((s - 15.0f64.ln()).abs() < 1e-12);
        assert!((s - 2.7081).abs() < 1e-4);
    }

    #[test]
    fn sharpness_rejects_unnormalized_input() {
        let alpha = vec![0.1; 30];
        assert!(sharpness(&alpha).is_err());
    }

    #[test]
    fn peak_track_finds_bump_and_breaks_ties_low() {
        let lat = build_hex_lattice(4, 4).unwrap();
        let mut field = ProbabilityField::uniform(lat.n_nodes(), 6);
        let x0 = lat.index(2, 1);
        field.node_mut(x0)[3] = 2.0;
        field.normalize().unwrap();
        assert_eq!(peak_track(&field, &lat).0, x0);
        let uniform = ProbabilityField::uniform(lat.n_nodes(), 6);
        assert_eq!(peak_track(&uniform, &lat).0, 0);
    }

    #[test]
    fn mean_velocity_examples() {
        let vg = grid30();
        let m = vg.n_channels();
        // One-hot at (6 jps, 0 deg).
        let mut alpha = vec![0.0; m];
        alpha[vg.channel_index(2, 0)] = 1.0;
        let v = mean_velocity(&alpha, &vg);
        assert!((v[0] - 6.0).abs() < 1e-12 && v[1].abs() < 1e-12);
        // Uniform over a direction-symmetric grid.
        let uniform = vec![1.0 / m as f64; m];
        let v = mean_velocity(&uniform, &vg);
        assert!(v[0].abs() < 1e-12 && v[1].abs() < 1e-12);
        // Opposite channels cancel.
        let mut pair = vec![0.0; m];
        pair[vg.channel_index(0, 0)] = 0.5;
        pair[vg.channel_index(0, 3)] = 0.5;
        let v = mean_velocity(&pair, &vg);
        assert!(v[0].abs() < 1e-12 && v[1].abs() < 1e-12);
    }

    #[test]
    fn degenerate_update_is_reported() {
        let m = 4;
        let mut field = ProbabilityField::uniform(1, m);
        field.node_mut(0).copy_from_slice(&[1.0, 0.0, 0.0, 0.0]);
        let mut like = LikelihoodField::uniform(1, m);
        like.node_mut(0).copy_from_slice(&[1e-305, 1.0, 1.0, 1.0]);
        assert!(matches!(
            update(&field, &like),
            Err(Error::DegenerateUpdate { .. })
        ));
    }
}
