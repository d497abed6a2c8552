//! Discrete Gaussian-prior prediction.
//!
//! One application moves probability from every source (node, channel) pair
//! to every destination within reach: a constant-velocity Gaussian around
//! the channel velocity, times a straight-trajectory Gaussian around the
//! drifted source position, both diagonal in the source-channel frame. The
//! transition into each destination is normalized over its sources, so a
//! per-node uniform field is an exact fixed point for any parameters, and a
//! final per-node normalization keeps each node a distribution.
//!
//! With `scale_covariances` the covariances are multiplied by the time
//! increment, which turns a single application into a first-order solution
//! of the forward equation over that increment; this is the reference the
//! finite-difference engine is validated against. Without the flag the
//! covariances are taken per application, the convention for frame-length
//! steps.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gauss::{self, Frame};
use crate::geometry::{SpatialLattice, VelocityGrid, ROW_PITCH};

use super::{PriorParams, ProbabilityField};

#[derive(Debug, Clone, Copy)]
struct Tap {
    dcol: i32,
    drow: i32,
    w: f64,
}

/// Precomputed transition tables for one (lattice, grid, prior, delta).
pub struct KernelEngine<'a> {
    lattice: &'a SpatialLattice,
    vgrid: &'a VelocityGrid,
    delta: f64,
    /// `vel_trans[mu * M + nu]`: velocity transition weight from source
    /// channel `nu` to destination channel `mu`.
    vel_trans: Vec<f64>,
    /// `taps[row][nu]`: spatial correlation taps for destinations in `row`.
    taps: Vec<Vec<Vec<Tap>>>,
    /// `row_denom[row * M + mu]`: per-destination source normalization.
    row_denom: Vec<f64>,
}

impl<'a> KernelEngine<'a> {
    pub fn new(
        lattice: &'a SpatialLattice,
        vgrid: &'a VelocityGrid,
        params: &PriorParams,
        delta: f64,
        scale_covariances: bool,
    ) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::invalid("delta must be positive"));
        }
        let scale = if scale_covariances { delta.sqrt() } else { 1.0 };
        let (sxl, sxt) = (params.sigma_x_l * scale, params.sigma_x_t * scale);
        let (svl, svt) = (params.sigma_v_l * scale, params.sigma_v_t * scale);
        if [sxl, sxt, svl, svt].iter().any(|&s| !(s > 0.0)) {
            return Err(Error::invalid(
                "kernel prediction needs strictly positive prior sigmas",
            ));
        }
        let m = vgrid.n_channels();
        let frames: Vec<Frame> = vgrid.channels().iter().map(|c| Frame::new(c.direction)).collect();

        let mut vel_trans = vec![0.0; m * m];
        for nu in 0..m {
            let src = vgrid.channel(nu);
            for mu in 0..m {
                let dst = vgrid.channel(mu);
                vel_trans[mu * m + nu] =
                    gauss::weight(&frames[nu], [dst.vx - src.vx, dst.vy - src.vy], svl, svt);
            }
        }

        // Truncation: 4 positional standard deviations plus the largest
        // drift displacement; truncation error is below 1e-6 of the mass.
        let radius = 4.0 * sxl.max(sxt) + delta * vgrid.s_max();
        let radius2 = radius * radius;
        let enum_reach = radius + delta * vgrid.s_max();
        let kcol = enum_reach.ceil() as i32 + 1;
        let krow = (enum_reach / ROW_PITCH).ceil() as i32 + 1;
        let height = lattice.height();

        let taps: Vec<Vec<Vec<Tap>>> = (0..height)
            .into_par_iter()
            .map(|row| {
                let p_dst = (row % 2) as f64;
                (0..m)
                    .map(|nu| {
                        let ch = vgrid.channel(nu);
                        let drift = [delta * ch.vx, delta * ch.vy];
                        let mut list = Vec::new();
                        for drow in -krow..=krow {
                            let src_row =
                                (row as i64 + drow as i64).rem_euclid(height as i64) as usize;
                            let p_src = (src_row % 2) as f64;
                            let off_y = drow as f64 * ROW_PITCH;
                            for dcol in -kcol..=kcol {
                                let off_x = dcol as f64 + 0.5 * (p_src - p_dst);
                                // Displacement in the trajectory Gaussian:
                                // destination minus drifted source.
                                let u = [-off_x - drift[0], -off_y - drift[1]];
                                if u[0] * u[0] + u[1] * u[1] > radius2 {
                                    continue;
                                }
                                let w = gauss::weight(&frames[nu], u, sxl, sxt);
                                if w > 0.0 {
                                    list.push(Tap { dcol, drow, w });
                                }
                            }
                        }
                        list
                    })
                    .collect()
            })
            .collect();

        let mut row_denom = vec![0.0; height * m];
        for row in 0..height {
            let wsums: Vec<f64> = (0..m).map(|nu| taps[row][nu].iter().map(|t| t.w).sum()).collect();
            for mu in 0..m {
                let mut d = 0.0;
                for nu in 0..m {
                    d += vel_trans[mu * m + nu] * wsums[nu];
                }
                row_denom[row * m + mu] = d;
            }
        }

        Ok(Self {
            lattice,
            vgrid,
            delta,
            vel_trans,
            taps,
            row_denom,
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Apply the prior once, advancing the field by `delta` seconds.
    pub fn step(&self, field: &ProbabilityField) -> Result<ProbabilityField> {
        let m = self.vgrid.n_channels();
        let n = self.lattice.n_nodes();
        if field.n_nodes() != n || field.n_channels() != m {
            return Err(Error::invalid("field does not match engine geometry"));
        }
        let width = self.lattice.width() as i64;
        let height = self.lattice.height() as i64;
        let src = field.data();

        // Spatial correlations per source channel, node-major.
        let corr: Vec<f64> = (0..n)
            .into_par_iter()
            .flat_map_iter(|node| {
                let col = (node % self.lattice.width()) as i64;
                let row = node / self.lattice.width();
                let taps = &self.taps[row];
                (0..m).map(move |nu| {
                    let mut acc = 0.0;
                    for t in &taps[nu] {
                        let sc = (col + t.dcol as i64).rem_euclid(width) as usize;
                        let sr = (row as i64 + t.drow as i64).rem_euclid(height) as usize;
                        acc += t.w * src[(sr * width as usize + sc) * m + nu];
                    }
                    acc
                })
            })
            .collect();

        let mut out = field.blank_like();
        out.data_mut()
            .par_chunks_mut(m)
            .enumerate()
            .for_each(|(node, dst)| {
                let row = node / self.lattice.width();
                let t = &corr[node * m..(node + 1) * m];
                let mut total = 0.0;
                for mu in 0..m {
                    let vt = &self.vel_trans[mu * m..(mu + 1) * m];
                    let mut num = 0.0;
                    for (nu, &c) in t.iter().enumerate() {
                        num += vt[nu] * c;
                    }
                    let v = num / self.row_denom[row * m + mu];
                    dst[mu] = v;
                    total += v;
                }
                for v in dst.iter_mut() {
                    *v /= total;
                }
            });
        out.set_time(field.time() + self.delta);
        Ok(out)
    }
}

/// One-shot convenience wrapper around [`KernelEngine::step`].
pub fn predict_kernel(
    alpha: &ProbabilityField,
    params: &PriorParams,
    delta: f64,
    scale_covariances: bool,
    lattice: &SpatialLattice,
    vgrid: &VelocityGrid,
) -> Result<ProbabilityField> {
    KernelEngine::new(lattice, vgrid, params, delta, scale_covariances)?.step(alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_hex_lattice, build_velocity_grid};
    use crate::prediction::{PdeEngine, PdeOptions};
    use std::f64::consts::TAU;

    fn inputs() -> (SpatialLattice, VelocityGrid) {
        (
            build_hex_lattice(8, 8).unwrap(),
            build_velocity_grid(6, 3, TAU / 6.0, 2.0, 2.0).unwrap(),
        )
    }

    #[test]
    fn uniform_field_is_an_exact_fixed_point() {
        let (lat, vg) = inputs();
        for params in [
            PriorParams::default(),
            PriorParams::new(1.5, 0.2, 3.0, 0.1).unwrap(),
        ] {
            let field = ProbabilityField::uniform(lat.n_nodes(), vg.n_channels());
            let out = predict_kernel(&field, &params, 1.0 / 6.0, false, &lat, &vg).unwrap();
            let expect = 1.0 / vg.n_channels() as f64;
            for node in 0..lat.n_nodes() {
                for &a in out.node(node) {
                    assert!((a - expect).abs() < 1e-12, "{a} vs {expect}");
                }
            }
        }
    }

    #[test]
    fn per_node_sums_are_one() {
        let (lat, vg) = inputs();
        let mut field = ProbabilityField::uniform(lat.n_nodes(), vg.n_channels());
        field.node_mut(5).fill(1e-4);
        field.node_mut(5)[7] = 1.0;
        field.normalize().unwrap();
        let out = predict_kernel(&field, &PriorParams::default(), 1.0 / 6.0, false, &lat, &vg)
            .unwrap();
        assert!(out.max_normalization_error() < 1e-9);
        assert!(out.min_activity() >= 0.0);
    }

    #[test]
    fn narrow_prior_moves_mass_to_the_pointed_at_neighbor() {
        // Near-delta covariances, one-sixth of a second at 6 jps: exactly
        // one jump along the east axis.
        let (lat, vg) = inputs();
        let params = PriorParams::new(0.05, 0.05, 0.05, 0.05).unwrap();
        let delta = 1.0 / 6.0;
        let mu = vg.channel_index(2, 0); // 6 jps east
        let x0 = lat.index(3, 4);
        let x1 = lat.neighbors(x0)[0]; // east neighbour
        let mut field = ProbabilityField::uniform(lat.n_nodes(), vg.n_channels());
        for node in 0..lat.n_nodes() {
            field.node_mut(node).fill(1e-12);
        }
        field.node_mut(x0)[mu] = 1.0;
        field.normalize().unwrap();
        let out = predict_kernel(&field, &params, delta, false, &lat, &vg).unwrap();
        // Strongest node for channel mu is the east neighbour, and the
        // channel profile there still peaks at mu.
        let peak_node = (0..lat.n_nodes())
            .max_by(|&a, &b| out.node(a)[mu].partial_cmp(&out.node(b)[mu]).unwrap())
            .unwrap();
        assert_eq!(peak_node, x1);
        let peak_channel = (0..vg.n_channels())
            .max_by(|&a, &b| out.node(x1)[a].partial_cmp(&out.node(x1)[b]).unwrap())
            .unwrap();
        assert_eq!(peak_channel, mu);
    }

    #[test]
    fn column_translation_equivariance() {
        let (lat, vg) = inputs();
        let mut field = ProbabilityField::uniform(lat.n_nodes(), vg.n_channels());
        field.node_mut(lat.index(2, 3)).fill(0.002);
        field.node_mut(lat.index(2, 3))[4] = 1.0;
        field.normalize().unwrap();
        let perm: Vec<usize> = (0..lat.n_nodes()).map(|n| lat.neighbors(n)[0]).collect();
        let mut translated = field.clone();
        for n in 0..lat.n_nodes() {
            let v = field.node(n).to_vec();
            translated.node_mut(perm[n]).copy_from_slice(&v);
        }
        let engine =
            KernelEngine::new(&lat, &vg, &PriorParams::default(), 1.0 / 6.0, false).unwrap();
        let out = engine.step(&field).unwrap();
        let out_t = engine.step(&translated).unwrap();
        for n in 0..lat.n_nodes() {
            for mu in 0..vg.n_channels() {
                assert!((out.node(n)[mu] - out_t.node(perm[n])[mu]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_sigma_rejected() {
        let (lat, vg) = inputs();
        let field = ProbabilityField::uniform(lat.n_nodes(), vg.n_channels());
        let params = PriorParams::new(0.0, 0.3, 0.8, 0.4).unwrap();
        assert!(predict_kernel(&field, &params, 0.1, false, &lat, &vg).is_err());
    }

    fn smooth_test_field(lat: &SpatialLattice, vg: &VelocityGrid) -> ProbabilityField {
        let center = lat.position(lat.index(4, 4));
        let v0 = vg.channel(vg.channel_index(1, 1));
        let mut field = ProbabilityField::uniform(lat.n_nodes(), vg.n_channels());
        for node in 0..lat.n_nodes() {
            let d = lat.periodic_delta(center, lat.position(node));
            let sp = (-(d[0] * d[0] + d[1] * d[1]) / (2.0 * 2.0 * 2.0)).exp();
            let acts = field.node_mut(node);
            for (mu, a) in acts.iter_mut().enumerate() {
                let ch = vg.channel(mu);
                let dv2 = (ch.vx - v0.vx).powi(2) + (ch.vy - v0.vy).powi(2);
                *a = 0.05 + sp * (-dv2 / (2.0 * 2.5 * 2.5)).exp();
            }
        }
        field.normalize().unwrap();
        field
    }

    fn mean_l1(a: &ProbabilityField, b: &ProbabilityField) -> f64 {
        let mut worst = 0.0f64;
        for node in 0..a.n_nodes() {
            let l1: f64 = a
                .node(node)
                .iter()
                .zip(b.node(node))
                .map(|(x, y)| (x - y).abs())
                .sum();
            worst = worst.max(l1);
        }
        worst
    }

    #[test]
    fn pde_steps_match_scaled_covariance_kernel_prediction() {
        // n finite-difference steps against one kernel application with
        // time-scaled covariances over the same horizon; halving the step
        // must shrink the gap.
        let (lat, vg) = inputs();
        let params = PriorParams::default();
        let field = smooth_test_field(&lat, &vg);
        let engine = PdeEngine::new(&lat, &vg, &params, PdeOptions::default());
        let total = 0.064;
        let oracle = predict_kernel(&field, &params, total, true, &lat, &vg).unwrap();

        let run_pde = |n: usize| {
            let dt = total / n as f64;
            let mut f = field.clone();
            for _ in 0..n {
                f = engine.step(&f, dt).unwrap();
            }
            f
        };
        let coarse = run_pde(32);
        let fine = run_pde(64);
        let err_coarse = mean_l1(&coarse, &oracle);
        let err_fine = mean_l1(&fine, &oracle);
        assert!(err_coarse < 0.05, "coarse L1 = {err_coarse}");
        assert!(err_fine < err_coarse, "fine {err_fine} !< coarse {err_coarse}");
    }
}
