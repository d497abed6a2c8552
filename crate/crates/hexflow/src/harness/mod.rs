//! Experiment orchestration: predict-measure loops over stimuli, per-frame
//! metrics, the speed-discrimination task, output emission, and numerical
//! validation.

mod config;
mod discrimination;
mod emit;
mod validate;

pub use config::{default_dv_grid, EngineKind, ExperimentConfig, StimulusKind};
pub use discrimination::{
    chance_rate, curves_csv, speed_discrimination, thresholds_csv, DiscriminationCell, Threshold,
};
pub use emit::{emit, metrics_csv, sharpness_pgm, snapshot_json};
pub use validate::{validate, Check, ValidationReport};

use crate::error::{Error, Result};
use crate::estimation::{self, update_masked};
use crate::geometry::{SpatialLattice, VelocityGrid};
use crate::likelihood::{evaluate, tuning_matrix, LikelihoodField, TuningMatrix};
use crate::measurement::respond;
use crate::prediction::{KernelEngine, PdeEngine, ProbabilityField};
use crate::stimuli::{StimFrame, StimulusSequence};

/// Metrics recorded at the target node for one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameMetrics {
    pub frame: usize,
    /// Divergence from uniform at the target node, nats.
    pub sharpness: f64,
    /// Probability of the frame's observation under the prediction at the
    /// target node.
    pub confidence: f64,
    /// Node holding the strongest single-channel activity in the field.
    pub peak_node: usize,
    /// Lattice position of that node, jumps.
    pub peak_pos: [f64; 2],
    /// Posterior mean velocity at the target node, jps.
    pub mean_velocity: [f64; 2],
    /// Node nearest the ground-truth dot position this frame.
    pub target_node: usize,
}

/// Complete record of one run: per-frame metrics plus full-field snapshots
/// at the configured frames.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub frames: Vec<FrameMetrics>,
    pub snapshots: Vec<(usize, ProbabilityField)>,
}

/// The predict stage of the cycle, behind one interface for both engines.
enum Predictor<'a> {
    Pde { engine: PdeEngine<'a>, dt: f64 },
    Kernel(KernelEngine<'a>),
}

impl Predictor<'_> {
    fn advance(&self, field: &ProbabilityField, interval: f64) -> Result<ProbabilityField> {
        match self {
            Predictor::Pde { engine, dt } => engine.advance(field, interval, *dt),
            Predictor::Kernel(engine) => engine.step(field),
        }
    }
}

/// Shared state of one configured experiment.
pub struct Session {
    pub config: ExperimentConfig,
    pub lattice: SpatialLattice,
    pub vgrid: VelocityGrid,
    pub tuning: TuningMatrix,
}

impl Session {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        let lattice = config.lattice()?;
        let vgrid = config.velocity_grid()?;
        let tuning = tuning_matrix(&vgrid, config.sigma_lv_l, config.sigma_lv_t)?;
        Ok(Self {
            config,
            lattice,
            vgrid,
            tuning,
        })
    }

    fn predictor(&self) -> Result<Predictor<'_>> {
        match self.config.engine {
            EngineKind::Pde => {
                let engine = PdeEngine::new(
                    &self.lattice,
                    &self.vgrid,
                    &self.config.prior,
                    self.config.pde_options(),
                );
                if self.config.dt > engine.max_dt() * (1.0 + 1e-9) {
                    return Err(Error::StabilityViolation {
                        dt: self.config.dt,
                        max_dt: engine.max_dt(),
                    });
                }
                Ok(Predictor::Pde {
                    engine,
                    dt: self.config.dt,
                })
            }
            EngineKind::Kernel => Ok(Predictor::Kernel(KernelEngine::new(
                &self.lattice,
                &self.vgrid,
                &self.config.prior,
                self.config.frame_interval,
                false,
            )?)),
        }
    }

    /// Nodes whose y coordinate falls inside an occluder band this frame.
    pub fn occluder_mask(&self, frame: &StimFrame) -> Option<Vec<bool>> {
        if frame.occluders.is_empty() {
            return None;
        }
        Some(
            (0..self.lattice.n_nodes())
                .map(|node| frame.occluded(self.lattice.position(node)[1]))
                .collect(),
        )
    }

    /// Run the full predict-measure loop over a stimulus sequence.
    pub fn run_sequence(&self, seq: &StimulusSequence) -> Result<RunRecord> {
        let target_path = seq
            .target_path
            .as_ref()
            .ok_or_else(|| Error::invalid("stimulus carries no ground-truth target path"))?;
        let predictor = self.predictor()?;
        let mut alpha =
            ProbabilityField::uniform(self.lattice.n_nodes(), self.vgrid.n_channels());
        let mut record = RunRecord {
            frames: Vec::with_capacity(seq.n_frames()),
            snapshots: Vec::new(),
        };
        for (k, frame) in seq.frames.iter().enumerate() {
            if k > 0 {
                alpha = predictor.advance(&alpha, self.config.frame_interval)?;
            }
            let phi = respond(&frame.dots, &self.lattice, &self.vgrid, &self.config.measurement)?;
            let like = evaluate(&phi, &self.tuning)?;
            let mask = self.occluder_mask(frame);
            let (posterior, confidence) = update_masked(&alpha, &like, mask.as_deref())?;
            alpha = posterior;

            let target_node = self.lattice.nearest_node(target_path[k]);
            let (peak_node, peak_pos) = estimation::peak_track(&alpha, &self.lattice);
            record.frames.push(FrameMetrics {
                frame: k,
                sharpness: estimation::sharpness(alpha.node(target_node))?,
                confidence: confidence[target_node],
                peak_node,
                peak_pos,
                mean_velocity: estimation::mean_velocity(alpha.node(target_node), &self.vgrid),
                target_node,
            });
            if self.config.snapshot_frames.contains(&k) {
                record.snapshots.push((k, alpha.clone()));
            }
        }
        Ok(record)
    }

    /// Final posterior mean speed at the target node, averaged over the
    /// last `window` frames: the discrimination decision statistic.
    pub fn decision_speed(&self, record: &RunRecord, window: usize) -> f64 {
        let n = record.frames.len();
        let w = window.min(n).max(1);
        record.frames[n - w..]
            .iter()
            .map(|f| (f.mean_velocity[0].powi(2) + f.mean_velocity[1].powi(2)).sqrt())
            .sum::<f64>()
            / w as f64
    }

    /// Likelihood field of one stimulus frame, exposed for validation.
    pub fn likelihood_of(&self, frame: &StimFrame) -> Result<LikelihoodField> {
        let phi = respond(&frame.dots, &self.lattice, &self.vgrid, &self.config.measurement)?;
        evaluate(&phi, &self.tuning)
    }
}

/// Run the experiment described by a configuration.
pub fn run(config: &ExperimentConfig) -> Result<RunRecord> {
    let session = Session::new(config.clone())?;
    let seq = config.build_stimulus()?;
    session.run_sequence(&seq)
}
