use nalgebra::DMatrix;

use crate::matrix::{residual_energy, residual_given_product, OrthonormalFrame};
use crate::trace::{ConvergenceTrace, Stopwatch, TraceRecord};

/// Collects trace records for one run.
pub(crate) struct Recorder<'a> {
    reference: Option<&'a OrthonormalFrame>,
    clock: Stopwatch,
    records: Vec<TraceRecord>,
}

impl<'a> Recorder<'a> {
    pub fn new(reference: Option<&'a OrthonormalFrame>, wall_time: bool) -> Self {
        Recorder {
            reference,
            clock: Stopwatch::start(wall_time),
            records: Vec::new(),
        }
    }

    fn potential(&self, w: &DMatrix<f64>) -> Option<f64> {
        self.reference.map(|v| residual_energy(v, w).min(w.ncols() as f64))
    }

    /// Records an epoch boundary. `aw` is the operator applied to `w`, used
    /// for the Rayleigh residual.
    pub fn boundary(&mut self, epoch: usize, w: &DMatrix<f64>, aw: &DMatrix<f64>, samples: u64) -> &TraceRecord {
        let rec = TraceRecord {
            epoch,
            iter: 0,
            potential: self.potential(w),
            residual: Some(residual_given_product(w, aw)),
            samples,
            elapsed_s: self.clock.elapsed(),
        };
        self.records.push(rec);
        self.records.last().unwrap()
    }

    pub fn inner(&mut self, epoch: usize, iter: usize, w: &DMatrix<f64>, samples: u64) {
        let rec = TraceRecord {
            epoch,
            iter,
            potential: self.potential(w),
            residual: None,
            samples,
            elapsed_s: self.clock.elapsed(),
        };
        self.records.push(rec);
    }

    pub fn finish(self, final_frame: OrthonormalFrame) -> ConvergenceTrace {
        ConvergenceTrace {
            records: self.records,
            final_frame,
        }
    }
}

/// Early-exit metric: potential when a reference exists, otherwise the
/// Rayleigh residual.
pub(crate) fn metric(rec: &TraceRecord) -> f64 {
    rec.potential.or(rec.residual).unwrap_or(f64::INFINITY)
}
