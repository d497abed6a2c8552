//! Flat key-value experiment configuration.
//!
//! One `key value` (or `key = value`) pair per line, `#` comments. Unknown
//! keys are rejected so typos fail loudly. Every parameter has a default
//! drawn from the standard experiment setup, so a minimal config is just a
//! stimulus choice.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::{SpatialLattice, VelocityGrid, ROW_PITCH};
use crate::measurement::MeasurementParams;
use crate::prediction::{PdeOptions, PriorParams, SpeedBoundary};
use crate::stimuli::{
    gen_black_occluder, gen_circular, gen_motion_occluder, gen_outlier, gen_single_dot,
    SequenceParams, StimulusSequence,
};

/// Which prediction engine a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineKind {
    Kernel,
    Pde,
}

/// Which stimulus a run plays.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StimulusKind {
    SingleDot,
    Circular,
    BlackOccluder,
    MotionOccluder,
    Outlier,
}

/// Complete description of one experiment run.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub lattice_width: usize,
    pub lattice_height: usize,
    pub n_dirs: usize,
    pub n_speeds: usize,
    pub dr: f64,
    pub s_min: f64,

    pub measurement: MeasurementParams,
    pub sigma_lv_l: f64,
    pub sigma_lv_t: f64,
    pub prior: PriorParams,

    pub frame_interval: f64,
    pub dt: f64,
    pub engine: EngineKind,
    pub speed_boundary: SpeedBoundary,
    pub upwind: bool,
    pub clamp_tol: f64,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub snapshot_frames: Vec<usize>,

    pub stimulus: StimulusKind,
    pub n_frames: usize,
    pub speed: f64,
    pub direction: f64,
    pub start: Option<[f64; 2]>,
    pub radius: f64,
    pub angular_speed: f64,
    pub occluder_y: [f64; 2],
    pub band_x: [f64; 2],
    pub distractor_speed: f64,
    pub distractor_direction: f64,
    pub density: f64,
    pub n_distractors: usize,
    pub brownian_sigma: f64,

    pub base_speed: f64,
    pub dv_grid: Vec<f64>,
    pub n_jumps_list: Vec<usize>,
    pub trials: usize,
    pub jitter_sigma: f64,
    pub decision_window: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            lattice_width: 32,
            lattice_height: 32,
            n_dirs: 6,
            n_speeds: 5,
            dr: 2.0,
            s_min: 2.0,
            measurement: MeasurementParams::default(),
            sigma_lv_l: 2.2,
            sigma_lv_t: 1.1,
            prior: PriorParams::default(),
            frame_interval: 1.0 / 6.0,
            dt: 6e-4,
            engine: EngineKind::Pde,
            speed_boundary: SpeedBoundary::Periodic,
            upwind: false,
            clamp_tol: 1e-3,
            seed: 0,
            out_dir: None,
            snapshot_frames: Vec::new(),
            stimulus: StimulusKind::SingleDot,
            n_frames: 30,
            speed: 6.0,
            direction: 0.0,
            start: None,
            radius: 8.0,
            angular_speed: 0.75,
            occluder_y: [15.0, 22.0],
            band_x: [12.0, 20.0],
            distractor_speed: 6.0,
            distractor_direction: TAU / 4.0,
            density: 0.5,
            n_distractors: 30,
            brownian_sigma: 1.0,
            base_speed: 2.0,
            dv_grid: default_dv_grid(),
            n_jumps_list: vec![2, 4, 8],
            trials: 100,
            jitter_sigma: 0.25,
            decision_window: 3,
        }
    }
}

/// Nine points log-spaced over [0.05, 1.0].
pub fn default_dv_grid() -> Vec<f64> {
    let n = 9;
    let (lo, hi) = (0.05f64.ln(), 1.0f64.ln());
    (0..n)
        .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cleaned = line.replacen('=', " ", 1);
            let mut it = cleaned.split_whitespace();
            let key = it.next().unwrap().to_string();
            let value: String = it.collect::<Vec<_>>().join(" ");
            if value.is_empty() {
                return Err(Error::Config(format!("line {}: key `{key}` has no value", ln + 1)));
            }
            if map.insert(key.clone(), value).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", ln + 1)));
            }
        }
        Self::from_map(map)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    fn from_map(mut map: BTreeMap<String, String>) -> Result<Self> {
        let mut cfg = Self::default();
        let mut take = |key: &str| map.remove(key);
        macro_rules! set {
            ($key:literal, $target:expr, $parse:expr) => {
                if let Some(v) = take($key) {
                    $target = $parse(&v)
                        .ok_or_else(|| Error::Config(format!("bad value for {}: {v}", $key)))?;
                }
            };
        }
        let num = |v: &str| v.parse::<f64>().ok().filter(|x| x.is_finite());
        let int = |v: &str| v.parse::<usize>().ok();

        set!("lattice_width", cfg.lattice_width, int);
        set!("lattice_height", cfg.lattice_height, int);
        set!("n_dirs", cfg.n_dirs, int);
        set!("n_speeds", cfg.n_speeds, int);
        set!("dr", cfg.dr, num);
        set!("s_min", cfg.s_min, num);

        set!("sigma_mx_l", cfg.measurement.sigma_mx_l, num);
        set!("sigma_mx_t", cfg.measurement.sigma_mx_t, num);
        set!("sigma_mv_l", cfg.measurement.sigma_mv_l, num);
        set!("sigma_mv_t", cfg.measurement.sigma_mv_t, num);
        set!("floor_eps", cfg.measurement.floor_eps, num);
        set!("cutoff_radius", cfg.measurement.cutoff_radius, num);
        set!("sigma_lv_l", cfg.sigma_lv_l, num);
        set!("sigma_lv_t", cfg.sigma_lv_t, num);
        set!("sigma_x_l", cfg.prior.sigma_x_l, num);
        set!("sigma_x_t", cfg.prior.sigma_x_t, num);
        set!("sigma_v_l", cfg.prior.sigma_v_l, num);
        set!("sigma_v_t", cfg.prior.sigma_v_t, num);

        set!("frame_interval", cfg.frame_interval, num);
        set!("dt", cfg.dt, num);
        set!("engine", cfg.engine, |v: &str| match v {
            "kernel" => Some(EngineKind::Kernel),
            "pde" => Some(EngineKind::Pde),
            _ => None,
        });
        set!("speed_boundary", cfg.speed_boundary, |v: &str| match v {
            "periodic" => Some(SpeedBoundary::Periodic),
            "noflux" => Some(SpeedBoundary::NoFlux),
            _ => None,
        });
        set!("upwind", cfg.upwind, |v: &str| v.parse::<bool>().ok());
        set!("clamp_tol", cfg.clamp_tol, num);
        set!("seed", cfg.seed, |v: &str| v.parse::<u64>().ok());
        if let Some(v) = take("out") {
            cfg.out_dir = Some(PathBuf::from(v));
        }
        set!("snapshot_frames", cfg.snapshot_frames, parse_usize_list);

        set!("stimulus", cfg.stimulus, |v: &str| match v {
            "single_dot" => Some(StimulusKind::SingleDot),
            "circular" => Some(StimulusKind::Circular),
            "black_occluder" => Some(StimulusKind::BlackOccluder),
            "motion_occluder" => Some(StimulusKind::MotionOccluder),
            "outlier" => Some(StimulusKind::Outlier),
            _ => None,
        });
        set!("n_frames", cfg.n_frames, int);
        set!("speed", cfg.speed, num);
        if let Some(v) = take("direction_deg") {
            cfg.direction = num(&v)
                .ok_or_else(|| Error::Config(format!("bad value for direction_deg: {v}")))?
                .to_radians();
        }
        let mut start = [f64::NAN, f64::NAN];
        set!("start_x", start[0], num);
        set!("start_y", start[1], num);
        if start[0].is_finite() || start[1].is_finite() {
            let default_start = cfg.default_start();
            cfg.start = Some([
                if start[0].is_finite() { start[0] } else { default_start[0] },
                if start[1].is_finite() { start[1] } else { default_start[1] },
            ]);
        }
        set!("radius", cfg.radius, num);
        set!("angular_speed", cfg.angular_speed, num);
        set!("occluder_y_min", cfg.occluder_y[0], num);
        set!("occluder_y_max", cfg.occluder_y[1], num);
        set!("band_x_min", cfg.band_x[0], num);
        set!("band_x_max", cfg.band_x[1], num);
        set!("distractor_speed", cfg.distractor_speed, num);
        if let Some(v) = take("distractor_direction_deg") {
            cfg.distractor_direction = num(&v)
                .ok_or_else(|| Error::Config(format!("bad value for distractor_direction_deg: {v}")))?
                .to_radians();
        }
        set!("density", cfg.density, num);
        set!("n_distractors", cfg.n_distractors, int);
        set!("brownian_sigma", cfg.brownian_sigma, num);

        set!("base_speed", cfg.base_speed, num);
        set!("dv_grid", cfg.dv_grid, parse_f64_list);
        set!("n_jumps_list", cfg.n_jumps_list, parse_usize_list);
        set!("trials", cfg.trials, int);
        set!("jitter_sigma", cfg.jitter_sigma, num);
        set!("decision_window", cfg.decision_window, int);

        if let Some(key) = map.keys().next() {
            return Err(Error::Config(format!("unknown key `{key}`")));
        }
        cfg.validate_values()?;
        Ok(cfg)
    }

    fn validate_values(&self) -> Result<()> {
        let positive = [
            ("sigma_mx_l", self.measurement.sigma_mx_l),
            ("sigma_mx_t", self.measurement.sigma_mx_t),
            ("sigma_mv_l", self.measurement.sigma_mv_l),
            ("sigma_mv_t", self.measurement.sigma_mv_t),
            ("sigma_lv_l", self.sigma_lv_l),
            ("sigma_lv_t", self.sigma_lv_t),
            ("sigma_x_l", self.prior.sigma_x_l),
            ("sigma_x_t", self.prior.sigma_x_t),
            ("sigma_v_l", self.prior.sigma_v_l),
            ("sigma_v_t", self.prior.sigma_v_t),
            ("frame_interval", self.frame_interval),
            ("dt", self.dt),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.n_frames == 0 {
            return Err(Error::Config("n_frames must be at least 1".into()));
        }
        Ok(())
    }

    pub fn lattice(&self) -> Result<SpatialLattice> {
        SpatialLattice::hexagonal(self.lattice_width, self.lattice_height)
    }

    pub fn velocity_grid(&self) -> Result<VelocityGrid> {
        VelocityGrid::polar(
            self.n_dirs,
            self.n_speeds,
            TAU / self.n_dirs as f64,
            self.dr,
            self.s_min,
        )
    }

    pub fn pde_options(&self) -> PdeOptions {
        PdeOptions {
            drift: true,
            mean_flux: true,
            speed_boundary: self.speed_boundary,
            upwind: self.upwind,
            clamp_tol: self.clamp_tol,
        }
    }

    pub fn sequence_params(&self) -> SequenceParams {
        SequenceParams::new(self.lattice_width, self.lattice_height, self.frame_interval, self.seed)
    }

    fn default_start(&self) -> [f64; 2] {
        let ey = self.lattice_height as f64 * ROW_PITCH;
        let mid_row_y = (ey / 2.0 / ROW_PITCH).round() * ROW_PITCH;
        match self.stimulus {
            // Vertical runs start at the bottom, horizontal runs at the left
            // edge, both centred on the other axis.
            StimulusKind::BlackOccluder => [self.lattice_width as f64 / 2.0, 0.0],
            _ => [0.5, mid_row_y],
        }
    }

    /// Build the configured stimulus with its ground-truth target path.
    pub fn build_stimulus(&self) -> Result<StimulusSequence> {
        let sp = self.sequence_params();
        let start = self.start.unwrap_or_else(|| self.default_start());
        Ok(match self.stimulus {
            StimulusKind::SingleDot => {
                gen_single_dot(&sp, self.speed, self.direction, start, self.n_frames)
            }
            StimulusKind::Circular => {
                gen_circular(&sp, self.radius, self.angular_speed, self.n_frames)
            }
            StimulusKind::BlackOccluder => {
                // Vertical trajectory through a horizontal band.
                let base =
                    gen_single_dot(&sp, self.speed, TAU / 4.0, start, self.n_frames);
                gen_black_occluder(&base, self.occluder_y[0], self.occluder_y[1])
            }
            StimulusKind::MotionOccluder => {
                let base = gen_single_dot(&sp, self.speed, 0.0, start, self.n_frames);
                gen_motion_occluder(
                    &base,
                    self.band_x[0],
                    self.band_x[1],
                    self.distractor_speed,
                    self.distractor_direction,
                    self.density,
                )
            }
            StimulusKind::Outlier => gen_outlier(
                &sp,
                self.speed,
                self.n_distractors,
                self.brownian_sigma,
                self.n_frames,
            ),
        })
    }
}

fn parse_f64_list(v: &str) -> Option<Vec<f64>> {
    let items: Option<Vec<f64>> = v
        .split(|c| c == ',' || c == ' ')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().ok())
        .collect();
    items.filter(|list| !list.is_empty())
}

fn parse_usize_list(v: &str) -> Option<Vec<usize>> {
    let items: Option<Vec<usize>> = v
        .split(|c| c == ',' || c == ' ')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().ok())
        .collect();
    items.filter(|list| !list.is_empty())
}
