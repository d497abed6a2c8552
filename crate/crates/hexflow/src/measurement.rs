//! Measurement layer: converts a frame of moving dots into normalized
//! observation activities.
//!
//! Each node carries a bank of `M` cells, one per velocity channel. A dot
//! contributes to a cell in proportion to a spatial Gaussian around the node
//! and a velocity-tuning Gaussian around the channel velocity, both diagonal
//! in the frame aligned with the channel direction. A small constant floor
//! keeps activities positive everywhere; with no dots in range the floor is
//! all there is and the normalized activities are exactly uniform, so the
//! downstream Bayes update is a no-op in empty regions.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gauss::{self, Frame};
use crate::geometry::{SpatialLattice, VelocityGrid};
use crate::stimuli::Dot;

/// Receptive-field parameters of the measurement cells.
///
/// Spatial profile sigmas are in jumps, velocity tuning sigmas in jps;
/// longitudinal means along the channel direction. `floor_eps` is the
/// baseline activity relative to a centered dot's unit peak response, and
/// `cutoff_radius` (jumps) bounds each cell's spatial support.
#[derive(Debug, Clone, Copy)]
pub struct MeasurementParams {
    pub sigma_mx_l: f64,
    pub sigma_mx_t: f64,
    pub sigma_mv_l: f64,
    pub sigma_mv_t: f64,
    pub floor_eps: f64,
    pub cutoff_radius: f64,
}

impl MeasurementParams {
    pub fn new(
        sigma_mx_l: f64,
        sigma_mx_t: f64,
        sigma_mv_l: f64,
        sigma_mv_t: f64,
        floor_eps: f64,
        cutoff_radius: f64,
    ) -> Result<Self> {
        if [sigma_mx_l, sigma_mx_t, sigma_mv_l, sigma_mv_t].iter().any(|&s| !(s > 0.0)) {
            return Err(Error::invalid("measurement sigmas must be positive"));
        }
        if !(floor_eps > 0.0) {
            return Err(Error::invalid("floor_eps must be positive"));
        }
        if !(cutoff_radius > 0.0) {
            return Err(Error::invalid("cutoff_radius must be positive"));
        }
        Ok(Self {
            sigma_mx_l,
            sigma_mx_t,
            sigma_mv_l,
            sigma_mv_t,
            floor_eps,
            cutoff_radius,
        })
    }
}

impl Default for MeasurementParams {
    /// Spatial 0.8/0.4 jumps, velocity tuning 3.2/2.6 jps, floor 1e-3 of the
    /// unit peak response, cutoff 2 jumps.
    fn default() -> Self {
        Self {
            sigma_mx_l: 0.8,
            sigma_mx_t: 0.4,
            sigma_mv_l: 3.2,
            sigma_mv_t: 2.6,
            floor_eps: 1e-3,
            cutoff_radius: 2.0,
        }
    }
}

/// Per-node normalized observation activities, node-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementField {
    data: Vec<f64>,
    n_nodes: usize,
    n_channels: usize,
}

impl MeasurementField {
    /// Exactly uniform activities `1/M` everywhere.
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

/// Respond to one stimulus frame.
///
/// Raw activity of channel `mu` at node `x`:
/// `a_mu(x) = floor_eps + sum_dots G(dot_pos - x) * G(dot_vel - v_mu)`,
/// with both Gaussians diagonal in the channel-direction frame and dots
/// farther than `cutoff_radius` from the node contributing nothing. The
/// returned activities are the `a_mu` normalized to sum to one per node.
pub fn respond(
    dots: &[Dot],
    lattice: &SpatialLattice,
    vgrid: &VelocityGrid,
    params: &MeasurementParams,
) -> Result<MeasurementField> {
    let m = vgrid.n_channels();
    if m == 0 {
        return Err(Error::invalid("velocity grid has no channels"));
    }
    for dot in dots {
        if !(dot.pos[0].is_finite() && dot.pos[1].is_finite()) {
            return Err(Error::invalid("dot position must be finite"));
        }
        if !(dot.vel[0].is_finite() && dot.vel[1].is_finite()) {
            return Err(Error::invalid("dot velocity must be finite"));
        }
    }
    let frames: Vec<Frame> = vgrid.channels().iter().map(|c| Frame::new(c.direction)).collect();
    // Velocity tuning depends on the dot alone, not the node: hoist it.
    let vel_weights: Vec<Vec<f64>> = dots
        .iter()
        .map(|dot| {
            vgrid
                .channels()
                .iter()
                .zip(&frames)
                .map(|(ch, fr)| {
                    gauss::weight(
                        fr,
                        [dot.vel[0] - ch.vx, dot.vel[1] - ch.vy],
                        params.sigma_mv_l,
                        params.sigma_mv_t,
                    )
                })
                .collect()
        })
        .collect();

    let n = lattice.n_nodes();
    let cutoff2 = params.cutoff_radius * params.cutoff_radius;
    let mut field = MeasurementField {
        data: vec![0.0; n * m],
        n_nodes: n,
        n_channels: m,
    };
    field
        .data
        .par_chunks_mut(m)
        .enumerate()
        .for_each(|(node, acts)| {
            acts.fill(params.floor_eps);
            let node_pos = lattice.position(node);
            let mut touched = false;
            for (dot, vw) in dots.iter().zip(&vel_weights) {
                let d = lattice.periodic_delta(node_pos, dot.pos);
                if d[0] * d[0] + d[1] * d[1] > cutoff2 {
                    continue;
                }
                touched = true;
                for mu in 0..m {
                    acts[mu] += gauss::weight(&frames[mu], d, params.sigma_mx_l, params.sigma_mx_t)
                        * vw[mu];
                }
            }
            if touched {
                let total: f64 = acts.iter().sum();
                for a in acts.iter_mut() {
                    *a /= total;
                }
            } else {
                // Floor only: exactly uniform, which makes the downstream
                // update an exact no-op at this node.
                acts.fill(1.0 / m as f64);
            }
        });
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_hex_lattice, build_velocity_grid};
    use std::f64::consts::TAU;

    fn setup() -> (SpatialLattice, VelocityGrid, MeasurementParams) {
        (
            build_hex_lattice(8, 8).unwrap(),
            build_velocity_grid(6, 5, TAU / 6.0, 2.0, 2.0).unwrap(),
            MeasurementParams::default(),
        )
    }

    #[test]
    fn no_dots_gives_exactly_uniform_activities() {
        let (lat, vg, params) = setup();
        let phi = respond(&[], &lat, &vg, &params).unwrap();
        let m = vg.n_channels() as f64;
        for node in 0..lat.n_nodes() {
            for &a in phi.node(node) {
                assert_eq!(a, 1.0 / m);
            }
        }
    }

    #[test]
    fn dot_on_channel_tuning_peaks_at_that_channel() {
        let (lat, vg, params) = setup();
        let node = lat.index(4, 4);
        let mu0 = vg.channel_index(2, 0); // 6 jps, direction 0
        let ch = vg.channel(mu0);
        let dot = Dot {
            pos: lat.position(node),
            vel: [ch.vx, ch.vy],
        };
        let phi = respond(&[dot], &lat, &vg, &params).unwrap();
        let acts = phi.node(node);
        let argmax = acts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(argmax, mu0);
    }

    #[test]
    fn per_node_sums_are_one() {
        let (lat, vg, params) = setup();
        let dots = vec![
            Dot { pos: [1.3, 2.1], vel: [4.0, 1.0] },
            Dot { pos: [5.9, 0.4], vel: [-2.0, 3.0] },
        ];
        let phi = respond(&dots, &lat, &vg, &params).unwrap();
        for node in 0..lat.n_nodes() {
            let sum: f64 = phi.node(node).iter().sum();
            assert!((sum - 1.0).abs() < 1e-12, "node {node}: {sum}");
        }
    }

    #[test]
    fn activities_are_positive() {
        let (lat, vg, params) = setup();
        let dots = vec![Dot { pos: [3.0, 3.0], vel: [6.0, 0.0] }];
        let phi = respond(&dots, &lat, &vg, &params).unwrap();
        for node in 0..lat.n_nodes() {
            assert!(phi.node(node).iter().all(|&a| a > 0.0));
        }
    }

    #[test]
    fn shift_equivariance_under_lattice_translation() {
        // Translating the dot by one horizontal lattice vector permutes the
        // field by the east-neighbour permutation, exactly.
        let (lat, vg, params) = setup();
        let dot = Dot { pos: [2.2, 3.4], vel: [5.0, 2.0] };
        let shifted = Dot { pos: [3.2, 3.4], vel: [5.0, 2.0] };
        let phi = respond(&[dot], &lat, &vg, &params).unwrap();
        let phi_shift = respond(&[shifted], &lat, &vg, &params).unwrap();
        for node in 0..lat.n_nodes() {
            let east = lat.neighbors(node)[0];
            assert_eq!(phi.node(node), phi_shift.node(east));
        }
    }

    #[test]
    fn closer_velocity_does_not_decrease_target_activity() {
        let (lat, vg, params) = setup();
        let node = lat.index(4, 4);
        let mu0 = vg.channel_index(2, 0);
        let ch = vg.channel(mu0);
        let far = Dot { pos: lat.position(node), vel: [ch.vx - 2.0, ch.vy] };
        let near = Dot { pos: lat.position(node), vel: [ch.vx - 1.0, ch.vy] };
        let phi_far = respond(&[far], &lat, &vg, &params).unwrap();
        let phi_near = respond(&[near], &lat, &vg, &params).unwrap();
        assert!(phi_near.node(node)[mu0] >= phi_far.node(node)[mu0]);
    }

    #[test]
    fn determinism() {
        let (lat, vg, params) = setup();
        let dots = vec![
            Dot { pos: [1.0, 1.0], vel: [2.0, 0.0] },
            Dot { pos: [6.5, 4.2], vel: [0.0, -6.0] },
        ];
        let a = respond(&dots, &lat, &vg, &params).unwrap();
        let b = respond(&dots, &lat, &vg, &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn non_finite_dot_rejected() {
        let (lat, vg, params) = setup();
        let dot = Dot { pos: [f64::NAN, 0.0], vel: [0.0, 0.0] };
        assert!(respond(&[dot], &lat, &vg, &params).is_err());
    }
}
