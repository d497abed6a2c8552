//! Numerical validation of the prediction engines on small instances.
//!
//! Four families of checks, all cheap enough for a desk run:
//!
//! * finite-difference steps against one time-scaled kernel application
//!   over the same horizon (the two routes to the same prior), including a
//!   step-halving convergence probe;
//! * velocity-only diffusion of a bump against the analytic heat-kernel
//!   variance growth, on a refined polar mesh;
//! * spatial-only diffusion against the same analytic law on the hex
//!   lattice;
//! * drift of a bump at a channel velocity against exact transport, and
//!   uniform-field fixed-point preservation for both engines.
//!
//! Failures are report content, not errors: the caller gets a measured
//! value, a threshold, and a verdict per check.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::{build_hex_lattice, build_velocity_grid};
use crate::prediction::{
    predict_kernel, PdeEngine, PdeOptions, PriorParams, ProbabilityField,
};

use super::ExperimentConfig;

/// One validation check outcome.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub measured: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    fn below(name: &'static str, measured: f64, threshold: f64) -> Self {
        Self {
            name,
            measured,
            threshold,
            pass: measured < threshold,
        }
    }
}

/// Collected validation results.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{} {:<34} measured={:<12.4e} threshold={:.4e}",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.measured,
                c.threshold
            );
        }
        let _ = writeln!(
            out,
            "{} of {} checks passed",
            self.checks.iter().filter(|c| c.pass).count(),
            self.checks.len()
        );
        out
    }
}

/// Run every validation check for a small configuration.
///
/// The configuration's lattice may be at most 8x8 and its velocity grid at
/// most 18 channels; the analytic diffusion checks build their own refined
/// grids internally.
pub fn validate(config: &ExperimentConfig) -> Result<ValidationReport> {
    if config.lattice_width > 8 || config.lattice_height > 8 {
        return Err(Error::invalid("validation lattice is limited to 8x8"));
    }
    if config.n_dirs * config.n_speeds > 18 {
        return Err(Error::invalid("validation grid is limited to 18 channels"));
    }
    let mut checks = Vec::new();
    checks.extend(kernel_oracle_checks(config)?);
    checks.push(velocity_diffusion_check()?);
    checks.push(spatial_diffusion_check()?);
    checks.push(advection_check()?);
    checks.extend(uniform_fixed_point_checks(config)?);
    Ok(ValidationReport { checks })
}

fn smooth_field(
    lattice: &crate::geometry::SpatialLattice,
    vgrid: &crate::geometry::VelocityGrid,
) -> ProbabilityField {
    let center = lattice.position(lattice.n_nodes() / 2);
    let v0 = vgrid.channel(vgrid.n_channels() / 2);
    let mut field = ProbabilityField::uniform(lattice.n_nodes(), vgrid.n_channels());
    for node in 0..lattice.n_nodes() {
        let d = lattice.periodic_delta(center, lattice.position(node));
        let sp = (-(d[0] * d[0] + d[1] * d[1]) / 8.0).exp();
        let acts = field.node_mut(node);
        for (mu, a) in acts.iter_mut().enumerate() {
            let ch = vgrid.channel(mu);
            let dv2 = (ch.vx - v0.vx).powi(2) + (ch.vy - v0.vy).powi(2);
            *a = 0.05 + sp * (-dv2 / 12.5).exp();
        }
    }
    field.normalize().unwrap();
    field
}

fn worst_node_l1(a: &ProbabilityField, b: &ProbabilityField) -> f64 {
    (0..a.n_nodes())
        .map(|node| {
            a.node(node)
                .iter()
                .zip(b.node(node))
                .map(|(x, y)| (x - y).abs())
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// Finite-difference steps vs one scaled-covariance kernel application.
fn kernel_oracle_checks(config: &ExperimentConfig) -> Result<Vec<Check>> {
    let lattice = config.lattice()?;
    let vgrid = config.velocity_grid()?;
    let params = config.prior;
    let engine = PdeEngine::new(&lattice, &vgrid, &params, config.pde_options());
    let field = smooth_field(&lattice, &vgrid);

    let total = 0.064;
    let oracle = predict_kernel(&field, &params, total, true, &lattice, &vgrid)?;
    let run_steps = |n: usize| -> Result<ProbabilityField> {
        let dt = total / n as f64;
        let mut f = field.clone();
        for _ in 0..n {
            f = engine.step(&f, dt)?;
        }
        Ok(f)
    };
    let err_coarse = worst_node_l1(&run_steps(32)?, &oracle);
    let err_fine = worst_node_l1(&run_steps(64)?, &oracle);
    Ok(vec![
        Check::below("pde_vs_kernel_worst_node_l1", err_coarse, 0.05),
        Check {
            name: "pde_error_shrinks_when_dt_halves",
            measured: err_fine,
            threshold: err_coarse,
            pass: err_fine < err_coarse,
        },
    ])
}

/// Isotropic velocity diffusion on a refined polar mesh against the
/// analytic covariance-trace growth `2 sigma^2 t`.
fn velocity_diffusion_check() -> Result<Check> {
    let lattice = build_hex_lattice(2, 2)?;
    let n_dirs = 48;
    let n_speeds = 40;
    let dr = 0.25;
    let vgrid = build_velocity_grid(n_dirs, n_speeds, TAU / n_dirs as f64, dr, 4.0)?;
    let sigma = 0.6;
    let params = PriorParams::new(0.0, 0.0, sigma, sigma)?;
    let opts = PdeOptions {
        drift: false,
        ..PdeOptions::default()
    };
    let engine = PdeEngine::new(&lattice, &vgrid, &params, opts);

    let center_speed = vgrid.channel(vgrid.channel_index(n_speeds / 2, 0)).speed;
    let mut field = ProbabilityField::uniform(lattice.n_nodes(), vgrid.n_channels());
    for node in 0..lattice.n_nodes() {
        for (mu, a) in field.node_mut(node).iter_mut().enumerate() {
            let ch = vgrid.channel(mu);
            let d2 = (ch.vx - center_speed).powi(2) + ch.vy.powi(2);
            *a = (-d2 / 0.5).exp();
        }
    }
    field.normalize().unwrap();

    // Continuum moments use polar cell-area quadrature weights.
    let trace = |f: &ProbabilityField| -> f64 {
        let acts = f.node(0);
        let mut wsum = 0.0;
        let mut mean = [0.0, 0.0];
        for (mu, &a) in acts.iter().enumerate() {
            let w = a * vgrid.cell_area(mu);
            let ch = vgrid.channel(mu);
            wsum += w;
            mean[0] += w * ch.vx;
            mean[1] += w * ch.vy;
        }
        mean[0] /= wsum;
        mean[1] /= wsum;
        let mut tr = 0.0;
        for (mu, &a) in acts.iter().enumerate() {
            let w = a * vgrid.cell_area(mu);
            let ch = vgrid.channel(mu);
            tr += w * ((ch.vx - mean[0]).powi(2) + (ch.vy - mean[1]).powi(2));
        }
        tr / wsum
    };

    let t_total = 0.2;
    let dt = (engine.max_dt() * 0.5).min(t_total / 50.0);
    let n = (t_total / dt).round().max(1.0) as usize;
    let tr0 = trace(&field);
    for _ in 0..n {
        field = engine.step(&field, dt)?;
    }
    let rate = (trace(&field) - tr0) / (n as f64 * dt);
    let rel = (rate - 2.0 * sigma * sigma).abs() / (2.0 * sigma * sigma);
    Ok(Check::below("velocity_diffusion_variance_rate", rel, 0.05))
}

/// Isotropic spatial diffusion on the hex lattice against the analytic
/// covariance-trace growth.
fn spatial_diffusion_check() -> Result<Check> {
    let lattice = build_hex_lattice(32, 32)?;
    let vgrid = build_velocity_grid(2, 1, TAU / 2.0, 1.0, 1.0)?;
    let sigma = 0.5;
    let params = PriorParams::new(sigma, sigma, 0.0, 0.0)?;
    let opts = PdeOptions {
        drift: false,
        ..PdeOptions::default()
    };
    let engine = PdeEngine::new(&lattice, &vgrid, &params, opts);

    let center = lattice.position(lattice.index(16, 16));
    let mut field = ProbabilityField::uniform(lattice.n_nodes(), vgrid.n_channels());
    for node in 0..lattice.n_nodes() {
        let d = lattice.periodic_delta(center, lattice.position(node));
        let bump = 0.5 * (-(d[0] * d[0] + d[1] * d[1]) / 4.5).exp();
        field.node_mut(node)[0] = 0.25 + bump;
        field.node_mut(node)[1] = 0.75 - bump;
    }
    field.normalize().unwrap();

    let trace = |f: &ProbabilityField| -> f64 {
        let mut wsum = 0.0;
        let mut mean = [0.0, 0.0];
        for node in 0..lattice.n_nodes() {
            let w = f.node(node)[0] - 0.25;
            let d = lattice.periodic_delta(center, lattice.position(node));
            wsum += w;
            mean[0] += w * d[0];
            mean[1] += w * d[1];
        }
        mean[0] /= wsum;
        mean[1] /= wsum;
        let mut tr = 0.0;
        for node in 0..lattice.n_nodes() {
            let w = f.node(node)[0] - 0.25;
            let d = lattice.periodic_delta(center, lattice.position(node));
            tr += w * ((d[0] - mean[0]).powi(2) + (d[1] - mean[1]).powi(2));
        }
        tr / wsum
    };

    let t_total = 2.0;
    let dt = engine.max_dt() * 0.5;
    let n = (t_total / dt).ceil() as usize;
    let tr0 = trace(&field);
    for _ in 0..n {
        field = engine.step(&field, dt)?;
    }
    let rate = (trace(&field) - tr0) / (n as f64 * dt);
    let rel = (rate - 2.0 * sigma * sigma).abs() / (2.0 * sigma * sigma);
    Ok(Check::below("spatial_diffusion_variance_rate", rel, 0.05))
}

/// Zero covariances, drift only: a resolved bump must travel at its channel
/// velocity to within half a node spacing.
fn advection_check() -> Result<Check> {
    let lattice = build_hex_lattice(32, 24)?;
    let vgrid = build_velocity_grid(6, 3, TAU / 6.0, 2.0, 2.0)?;
    let params = PriorParams::new(0.0, 0.0, 0.0, 0.0)?;
    let opts = PdeOptions {
        clamp_tol: 1e-2,
        ..PdeOptions::default()
    };
    let engine = PdeEngine::new(&lattice, &vgrid, &params, opts);
    let mu = vgrid.channel_index(2, 0); // 6 jps east
    let start = lattice.index(6, 12);
    let sigma0 = 2.0;
    let mut field = ProbabilityField::uniform(lattice.n_nodes(), vgrid.n_channels());
    for node in 0..lattice.n_nodes() {
        let d = lattice.periodic_delta(lattice.position(start), lattice.position(node));
        let bump = 0.2 * (-(d[0] * d[0] + d[1] * d[1]) / (2.0 * sigma0 * sigma0)).exp();
        let acts = field.node_mut(node);
        acts.fill(0.01);
        acts[mu] += bump;
    }
    field.normalize().unwrap();

    let t_total = 0.5f64;
    let n = 16;
    let dt = t_total / n as f64;
    for _ in 0..n {
        field = engine.step(&field, dt)?;
    }
    let peak = (0..lattice.n_nodes())
        .max_by(|&a, &b| field.node(a)[mu].partial_cmp(&field.node(b)[mu]).unwrap())
        .unwrap();
    let expect = [lattice.position(start)[0] + 6.0 * t_total, lattice.position(start)[1]];
    let d = lattice.periodic_delta(lattice.position(peak), lattice.wrap_position(expect));
    let err = (d[0] * d[0] + d[1] * d[1]).sqrt();
    Ok(Check {
        name: "advection_peak_displacement_error",
        measured: err,
        threshold: 0.5,
        pass: err <= 0.5 + 1e-9,
    })
}

/// A uniform field must be an exact fixed point of both engines.
fn uniform_fixed_point_checks(config: &ExperimentConfig) -> Result<Vec<Check>> {
    let lattice = config.lattice()?;
    let vgrid = config.velocity_grid()?;
    let uniform = ProbabilityField::uniform(lattice.n_nodes(), vgrid.n_channels());
    let expect = 1.0 / vgrid.n_channels() as f64;
    let deviation = |f: &ProbabilityField| {
        f.data()
            .iter()
            .map(|a| (a - expect).abs())
            .fold(0.0, f64::max)
    };

    let engine = PdeEngine::new(&lattice, &vgrid, &config.prior, config.pde_options());
    let mut f = uniform.clone();
    for _ in 0..10 {
        f = engine.step(&f, (engine.max_dt() * 0.5).min(config.dt))?;
    }
    let pde_dev = deviation(&f);

    let kernel_out = predict_kernel(
        &uniform,
        &config.prior,
        config.frame_interval,
        false,
        &lattice,
        &vgrid,
    )?;
    let kernel_dev = deviation(&kernel_out);
    Ok(vec![
        Check::below("uniform_fixed_point_pde", pde_dev, 1e-12),
        Check::below("uniform_fixed_point_kernel", kernel_dev, 1e-12),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig::parse("lattice_width 8\nlattice_height 8\nn_speeds 3\n").unwrap()
    }

    #[test]
    fn default_small_config_passes_all_checks() {
        let report = validate(&small_config()).unwrap();
        assert!(report.all_pass(), "{}", report.render());
    }

    #[test]
    fn oversized_lattice_rejected() {
        let cfg = ExperimentConfig::parse("lattice_width 16\nlattice_height 8\n").unwrap();
        assert!(validate(&cfg).is_err());
    }

    #[test]
    fn report_renders_one_line_per_check() {
        let report = validate(&small_config()).unwrap();
        let text = report.render();
        assert_eq!(text.lines().count(), report.checks.len() + 1);
        assert!(text.contains("pde_vs_kernel_worst_node_l1"));
    }
}
