//! Explicit time-step bound from eigenmode (von Neumann) analysis.
//!
//! Each finite-difference term contributes a condition on `dt`; the bound is
//! the conservative minimum over all velocity channels and both substeps.
//! With all covariances zero and drift on, only the advection condition
//! survives and the bound reduces to the plain CFL limit `h / s_max`.

use crate::geometry::{SpatialLattice, VelocityGrid};

use super::pde::{spatial_diffusion_weights, PdeOptions};
use super::PriorParams;

/// Largest non-amplifying explicit Euler step for the forward-equation
/// scheme, in seconds.
pub fn stability_max_dt(
    params: &PriorParams,
    lattice: &SpatialLattice,
    vgrid: &VelocityGrid,
    opts: &PdeOptions,
) -> f64 {
    let h = lattice.spacing();
    let mut bound = f64::INFINITY;
    let min = |b: f64, cond: f64| if cond.is_finite() { b.min(cond) } else { b };

    // Spatial substep, per channel.
    for ch in vgrid.channels() {
        let w = spatial_diffusion_weights(params, ch.direction);
        let wsum: f64 = w.iter().map(|c| c.abs()).sum();
        if wsum > 0.0 {
            // Diffusion: |1 - dt * 4 wsum / h^2| <= 1.
            bound = min(bound, h * h / (2.0 * wsum));
        }
        if opts.drift {
            // Advection CFL.
            bound = min(bound, h / ch.speed);
            if !opts.upwind && params.sigma_x_l > 0.0 {
                // Central advection needs longitudinal diffusion to damp the
                // odd-even mode: dt <= 2 D_L / s^2 with D_L = sigma_x_l^2/2.
                bound = min(bound, params.sigma_x_l * params.sigma_x_l / (ch.speed * ch.speed));
            }
        }
    }

    // Velocity substep, per speed row.
    let dr = vgrid.dr();
    let dtheta = vgrid.dtheta();
    let (svl2, svt2) = (
        params.sigma_v_l * params.sigma_v_l,
        params.sigma_v_t * params.sigma_v_t,
    );
    if svl2 > 0.0 {
        bound = min(bound, dr * dr / svl2);
    }
    if svt2 > 0.0 {
        for k in 0..vgrid.n_speeds() {
            let s = vgrid.s_min() + k as f64 * dr;
            // Angular diffusion with coefficient sigma_v_t^2 / (2 s^2).
            bound = min(bound, (s * dtheta) * (s * dtheta) / svt2);
            // Radial first-derivative term acts as advection at speed
            // sigma_v_t^2 / (2 s).
            bound = min(bound, 2.0 * s * dr / svt2);
            if svl2 > 0.0 {
                // Balance of that advection against radial diffusion.
                bound = min(bound, 4.0 * s * s * svl2 / (svt2 * svt2));
            }
        }
    }

    bound
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_hex_lattice, build_velocity_grid};
    use std::f64::consts::TAU;

    fn defaults() -> (PriorParams, SpatialLattice, VelocityGrid) {
        (
            PriorParams::default(),
            build_hex_lattice(32, 32).unwrap(),
            build_velocity_grid(6, 5, TAU / 6.0, 2.0, 2.0).unwrap(),
        )
    }

    #[test]
    fn default_configuration_accepts_0p6_ms() {
        let (p, lat, vg) = defaults();
        let bound = stability_max_dt(&p, &lat, &vg, &PdeOptions::default());
        assert!(bound >= 6e-4, "bound = {bound}");
    }

    #[test]
    fn doubling_longitudinal_velocity_variance_halves_that_component() {
        // Make the radial velocity-diffusion condition dominant by turning
        // everything else off.
        let lat = build_hex_lattice(8, 8).unwrap();
        let vg = build_velocity_grid(6, 3, TAU / 6.0, 2.0, 2.0).unwrap();
        let p1 = PriorParams::new(0.0, 0.0, 1.0, 0.0).unwrap();
        let p2 = PriorParams::new(0.0, 0.0, 2.0f64.sqrt(), 0.0).unwrap();
        let opts = PdeOptions {
            drift: false,
            ..PdeOptions::default()
        };
        let b1 = stability_max_dt(&p1, &lat, &vg, &opts);
        let b2 = stability_max_dt(&p2, &lat, &vg, &opts);
        assert!((b1 - vg.dr() * vg.dr()).abs() < 1e-12);
        assert!((b2 - b1 / 2.0).abs() < 1e-12, "b1 = {b1}, b2 = {b2}");
    }

    #[test]
    fn zero_covariances_reduce_to_advection_cfl() {
        let lat = build_hex_lattice(8, 8).unwrap();
        let vg = build_velocity_grid(6, 5, TAU / 6.0, 2.0, 2.0).unwrap();
        let p = PriorParams::new(0.0, 0.0, 0.0, 0.0).unwrap();
        let bound = stability_max_dt(&p, &lat, &vg, &PdeOptions::default());
        assert!((bound - lat.spacing() / vg.s_max()).abs() < 1e-12, "bound = {bound}");
    }
}
