use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::matrix::OrthonormalFrame;

/// One observation of a solver run.
///
/// `iter` counts inner iterations within `epoch`; `iter == 0` marks an
/// epoch boundary, i.e. the anchor state after `epoch` completed epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub epoch: usize,
    pub iter: usize,
    pub potential: Option<f64>,
    pub residual: Option<f64>,
    pub samples: u64,
    pub elapsed_s: Option<f64>,
}

impl TraceRecord {
    pub fn is_boundary(&self) -> bool {
        self.iter == 0
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceTrace {
    pub records: Vec<TraceRecord>,
    pub final_frame: OrthonormalFrame,
}

impl ConvergenceTrace {
    pub fn boundaries(&self) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter().filter(|r| r.is_boundary())
    }

    /// Potentials at epoch boundaries, starting with the initial frame.
    /// Empty when the run had no reference.
    pub fn epoch_potentials(&self) -> Vec<f64> {
        self.boundaries().filter_map(|r| r.potential).collect()
    }

    pub fn final_potential(&self) -> Option<f64> {
        self.records.last().and_then(|r| r.potential)
    }

    pub fn final_residual(&self) -> Option<f64> {
        self.boundaries().last().and_then(|r| r.residual)
    }

    pub fn samples(&self) -> u64 {
        self.records.last().map_or(0, |r| r.samples)
    }
}

/// Optional wall clock. Disabled clocks report `None`, which keeps traces
/// byte-reproducible.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Stopwatch(Option<Instant>);

impl Stopwatch {
    pub fn start(enabled: bool) -> Self {
        Stopwatch(enabled.then(Instant::now))
    }

    pub fn elapsed(&self) -> Option<f64> {
        self.0.map(|t| t.elapsed().as_secs_f64())
    }
}
