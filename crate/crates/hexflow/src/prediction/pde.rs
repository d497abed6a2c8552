//! Local finite-difference engine for the forward (Fokker-Planck) equation.
//!
//! One explicit Euler step of size `dt` is split into three substeps applied
//! in order, each reading the output of the previous one:
//!
//! 1. **velocity operator** on the polar (speed, direction) mesh. Written in
//!    density-per-channel variables the operator is
//!    `(w_l^2/2) d2/dr2 + (w_t^2/(2 r)) d/dr + (w_t^2/(2 r^2)) d2/dtheta2`,
//!    the polar form of the anisotropic covariance contracted with the
//!    velocity Hessian. Every term is a pure difference of channel values,
//!    so a per-node uniform distribution is an exact fixed point of the
//!    discrete substep on any speed boundary.
//! 2. **spatial operator** on the six hex neighbours: anisotropic diffusion
//!    (the channel-direction covariance resolved onto the three lattice
//!    axes) plus central-difference drift at the channel velocity. An upwind
//!    option trades the scheme's symmetry for positivity at large CFL
//!    ratios.
//! 3. **mean-flux normalization**: each channel gains its velocity-space
//!    cell fraction of the divergence of the node mean velocity. Summed over
//!    channels this exactly offsets the mass the drift term moves between
//!    nodes, because the grid volume equals the sum of the cell areas. It is
//!    switched together with drift, since both arise from the same
//!    trajectory shift in the prior.
//!
//! After the three substeps each node is renormalized to repair the small
//! normalization drift of the anisotropic spatial terms.
//!
//! Periodic boundaries everywhere by default, including the speed axis
//! (fastest wraps to slowest); a reflecting speed boundary is available as
//! an option.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{SpatialLattice, VelocityGrid, AXES};

use super::{stability_max_dt, PriorParams, ProbabilityField};

/// Boundary handling on the speed axis of the velocity mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpeedBoundary {
    /// The fastest speed row wraps to the slowest. Physically odd but kept
    /// as the default behaviour of the scheme.
    #[default]
    Periodic,
    /// Zero-gradient ghost rows beyond the slowest and fastest speeds.
    NoFlux,
}

/// Switches of the finite-difference engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdeOptions {
    /// Apply the drift term.
    pub drift: bool,
    /// Apply the mean-flux normalization term (third substep). It repays
    /// the node mass the drift term moves around and only runs when `drift`
    /// does; switching it off gives a pure-transport configuration for
    /// advection oracles.
    pub mean_flux: bool,
    pub speed_boundary: SpeedBoundary,
    /// One-sided drift differences instead of central ones.
    pub upwind: bool,
    /// Largest negative magnitude repaired by clamping; anything more
    /// negative is reported as a positivity failure. Central differencing at
    /// the cell Peclet numbers of the default parameters undershoots by up
    /// to about 1e-4 of a node's mass in ordinary operation, so the default
    /// gives that headroom while still catching runaway growth.
    pub clamp_tol: f64,
}

impl Default for PdeOptions {
    fn default() -> Self {
        Self {
            drift: true,
            mean_flux: true,
            speed_boundary: SpeedBoundary::Periodic,
            upwind: false,
            clamp_tol: 1e-3,
        }
    }
}

/// Resolve the rotated spatial covariance of one channel direction onto
/// second-difference weights along the three lattice axes. `sum_a w_a D2_a`
/// reproduces `(1/2) Sigma_x(theta) : Hessian` to second order, using that
/// the axis outer products sum to `3/2` times the identity.
pub(super) fn spatial_diffusion_weights(params: &PriorParams, direction: f64) -> [f64; 3] {
    let (c, s) = (direction.cos(), direction.sin());
    let (l2, t2) = (
        params.sigma_x_l * params.sigma_x_l,
        params.sigma_x_t * params.sigma_x_t,
    );
    let sxx = l2 * c * c + t2 * s * s;
    let sxy = (l2 - t2) * s * c;
    let syy = l2 * s * s + t2 * c * c;
    let inv_sqrt3 = 1.0 / 3.0f64.sqrt();
    [
        0.5 * (sxx - syy / 3.0),
        0.5 * (2.0 * sxy * inv_sqrt3 + 2.0 * syy / 3.0),
        0.5 * (-2.0 * sxy * inv_sqrt3 + 2.0 * syy / 3.0),
    ]
}

/// Precomputed stencil tables for one (lattice, grid, prior) triple.
pub struct PdeEngine<'a> {
    lattice: &'a SpatialLattice,
    vgrid: &'a VelocityGrid,
    opts: PdeOptions,
    max_dt: f64,
    /// Per channel: second-difference weights along the three axes.
    diff_w: Vec<[f64; 3]>,
    /// Per channel: drift weights `(2/3) v . e_a` along the three axes.
    drift_w: Vec<[f64; 3]>,
    /// Per speed row: radial stencil (plus, minus, diagonal).
    radial: Vec<[f64; 3]>,
    /// Per speed row: angular second-difference coefficient.
    angular: Vec<f64>,
    /// Per channel: velocity-space cell fraction for the normalization term.
    cell_fraction: Vec<f64>,
}

impl<'a> PdeEngine<'a> {
    pub fn new(
        lattice: &'a SpatialLattice,
        vgrid: &'a VelocityGrid,
        params: &PriorParams,
        opts: PdeOptions,
    ) -> Self {
        let m = vgrid.n_channels();
        let mut diff_w = Vec::with_capacity(m);
        let mut drift_w = Vec::with_capacity(m);
        let mut cell_fraction = Vec::with_capacity(m);
        for ch in vgrid.channels() {
            diff_w.push(spatial_diffusion_weights(params, ch.direction));
            drift_w.push([
                2.0 / 3.0 * (ch.vx * AXES[0][0] + ch.vy * AXES[0][1]),
                2.0 / 3.0 * (ch.vx * AXES[1][0] + ch.vy * AXES[1][1]),
                2.0 / 3.0 * (ch.vx * AXES[2][0] + ch.vy * AXES[2][1]),
            ]);
            cell_fraction.push(ch.speed * vgrid.dr() * vgrid.dtheta() / vgrid.volume());
        }
        let dr = vgrid.dr();
        let dtheta = vgrid.dtheta();
        let (svl2, svt2) = (
            params.sigma_v_l * params.sigma_v_l,
            params.sigma_v_t * params.sigma_v_t,
        );
        let mut radial = Vec::with_capacity(vgrid.n_speeds());
        let mut angular = Vec::with_capacity(vgrid.n_speeds());
        for k in 0..vgrid.n_speeds() {
            let s = vgrid.s_min() + k as f64 * dr;
            let diff = svl2 / (2.0 * dr * dr);
            let adv = svt2 / (4.0 * s * dr);
            radial.push([diff + adv, diff - adv, -2.0 * diff]);
            angular.push(svt2 / (2.0 * s * s * dtheta * dtheta));
        }
        let max_dt = stability_max_dt(params, lattice, vgrid, &opts);
        Self {
            lattice,
            vgrid,
            opts,
            max_dt,
            diff_w,
            drift_w,
            radial,
            angular,
            cell_fraction,
        }
    }

    /// The largest accepted step, from the von Neumann analysis.
    pub fn max_dt(&self) -> f64 {
        self.max_dt
    }

    /// Advance the field by one explicit step of size `dt`.
    pub fn step(&self, field: &ProbabilityField, dt: f64) -> Result<ProbabilityField> {
        if !(dt > 0.0) {
            return Err(Error::invalid("dt must be positive"));
        }
        if dt > self.max_dt * (1.0 + 1e-9) {
            return Err(Error::StabilityViolation {
                dt,
                max_dt: self.max_dt,
            });
        }
        if field.n_nodes() != self.lattice.n_nodes()
            || field.n_channels() != self.vgrid.n_channels()
        {
            return Err(Error::invalid("field does not match engine geometry"));
        }
        let mut a = self.velocity_substep(field, dt);
        let mut b = self.spatial_substep(&a, dt);
        if self.opts.drift && self.opts.mean_flux {
            self.normalization_substep(&mut a, &b, dt);
            a.repair_with(self.opts.clamp_tol)?;
            a.set_time(field.time() + dt);
            Ok(a)
        } else {
            b.repair_with(self.opts.clamp_tol)?;
            b.set_time(field.time() + dt);
            Ok(b)
        }
    }

    /// Advance across a macroscopic interval in `ceil(interval / dt_hint)`
    /// equal substeps.
    pub fn advance(&self, field: &ProbabilityField, interval: f64, dt_hint: f64) -> Result<ProbabilityField> {
        let n = (interval / dt_hint).ceil().max(1.0) as usize;
        let dt = interval / n as f64;
        let mut out = self.step(field, dt)?;
        for _ in 1..n {
            out = self.step(&out, dt)?;
        }
        Ok(out)
    }

    fn velocity_substep(&self, field: &ProbabilityField, dt: f64) -> ProbabilityField {
        let m = self.vgrid.n_channels();
        let n_dirs = self.vgrid.n_dirs();
        let n_speeds = self.vgrid.n_speeds();
        let mut out = field.blank_like();
        out.data_mut()
            .par_chunks_mut(m)
            .zip(field.data().par_chunks(m))
            .for_each(|(dst, src)| {
                for k in 0..n_speeds {
                    let (kp, km) = match self.opts.speed_boundary {
                        SpeedBoundary::Periodic => ((k + 1) % n_speeds, (k + n_speeds - 1) % n_speeds),
                        SpeedBoundary::NoFlux => (
                            if k + 1 < n_speeds { k + 1 } else { k },
                            if k > 0 { k - 1 } else { k },
                        ),
                    };
                    let [rp, rm, rd] = self.radial[k];
                    let ang = self.angular[k];
                    for d in 0..n_dirs {
                        let dp = (d + 1) % n_dirs;
                        let dm = (d + n_dirs - 1) % n_dirs;
                        let mu = k * n_dirs + d;
                        let center = src[mu];
                        let lv = rp * src[kp * n_dirs + d]
                            + rm * src[km * n_dirs + d]
                            + rd * center
                            + ang * (src[k * n_dirs + dp] - 2.0 * center + src[k * n_dirs + dm]);
                        dst[mu] = center + dt * lv;
                    }
                }
            });
        out
    }

    fn spatial_substep(&self, field: &ProbabilityField, dt: f64) -> ProbabilityField {
        let m = self.vgrid.n_channels();
        let src = field.data();
        let mut out = field.blank_like();
        out.data_mut()
            .par_chunks_mut(m)
            .enumerate()
            .for_each(|(node, dst)| {
                let nb = self.lattice.neighbors(node);
                let center = &src[node * m..(node + 1) * m];
                for mu in 0..m {
                    let c = center[mu];
                    let mut rate = 0.0;
                    for axis in 0..3 {
                        let plus = src[nb[2 * axis] * m + mu];
                        let minus = src[nb[2 * axis + 1] * m + mu];
                        rate += self.diff_w[mu][axis] * (plus - 2.0 * c + minus);
                        if self.opts.drift {
                            let w = self.drift_w[mu][axis];
                            rate -= if !self.opts.upwind {
                                w * (plus - minus) * 0.5
                            } else if w > 0.0 {
                                w * (c - minus)
                            } else {
                                w * (plus - c)
                            };
                        }
                    }
                    dst[mu] = c + dt * rate;
                }
            });
        out
    }

    /// Third substep, written into `dst` from the post-spatial field `src`.
    fn normalization_substep(&self, dst: &mut ProbabilityField, src: &ProbabilityField, dt: f64) {
        let m = self.vgrid.n_channels();
        let channels = self.vgrid.channels();
        let mean_flux: Vec<[f64; 2]> = src
            .data()
            .par_chunks(m)
            .map(|acts| {
                let mut mx = 0.0;
                let mut my = 0.0;
                for (a, ch) in acts.iter().zip(channels) {
                    mx += a * ch.vx;
                    my += a * ch.vy;
                }
                [mx, my]
            })
            .collect();
        dst.data_mut()
            .par_chunks_mut(m)
            .enumerate()
            .for_each(|(node, out)| {
                let nb = self.lattice.neighbors(node);
                let mut div = 0.0;
                for axis in 0..3 {
                    let p = mean_flux[nb[2 * axis]];
                    let q = mean_flux[nb[2 * axis + 1]];
                    div += (p[0] - q[0]) * AXES[axis][0] + (p[1] - q[1]) * AXES[axis][1];
                }
                // (2/3) sum_a e_a . (m_+ - m_-) / (2 h).
                div /= 3.0;
                let center = &src.data()[node * m..(node + 1) * m];
                for mu in 0..m {
                    out[mu] = center[mu] + dt * self.cell_fraction[mu] * div;
                }
            });
    }
}

/// One-shot convenience wrapper around [`PdeEngine::step`].
pub fn predict_pde_step(
    alpha: &ProbabilityField,
    params: &PriorParams,
    dt: f64,
    lattice: &SpatialLattice,
    vgrid: &VelocityGrid,
    opts: PdeOptions,
) -> Result<ProbabilityField> {
    PdeEngine::new(lattice, vgrid, params, opts).step(alpha, dt)
}
