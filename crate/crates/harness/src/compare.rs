//! VR-PCA against the plain stochastic and deterministic baselines at
//! matched sample budgets.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use vrpca::{
    oja_baseline, orthogonal_iteration, vrpca_block, vrpca_vector, ConvergenceTrace, OjaSchedule, OrthonormalFrame,
};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::experiment::{initialize, prepare, run_burn_in, solver_config, write_json, Prepared};

/// Potentials below this are rounding noise and are left out of the
/// orthogonal-iteration rate check.
const RATE_FLOOR: f64 = 1e-20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub samples: u64,
    pub potential: Option<f64>,
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub method: String,
    pub points: Vec<SeriesPoint>,
}

impl Series {
    fn from_trace(method: &str, trace: &ConvergenceTrace) -> Self {
        Series {
            method: method.to_string(),
            points: trace
                .records
                .iter()
                .map(|r| SeriesPoint {
                    samples: r.samples,
                    potential: r.potential,
                    residual: r.residual,
                })
                .collect(),
        }
    }

    pub fn final_potential(&self) -> Option<f64> {
        self.points.last().and_then(|p| p.potential)
    }
}

/// Block solver at `k = 1` next to the vector solver with the same seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceRow {
    pub vector_final_potential: Option<f64>,
    pub block_final_potential: Option<f64>,
    /// Largest entrywise difference of the final frames after sign alignment.
    pub max_frame_difference: f64,
}

/// Per-sweep decay of the orthogonal-iteration potential against the
/// power-method rate `(s_{k+1}/s_k)²`.
///
/// The observed rate is fitted over the second half of the sweeps that stay
/// above the rounding floor, once the faster-decaying directions are gone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCheck {
    pub eigenvalue_ratio: f64,
    pub sweep_from: usize,
    pub sweep_to: usize,
    pub observed_rate: f64,
    pub predicted_rate: f64,
    /// `observed_rate / predicted_rate`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRun {
    pub seed: u64,
    pub samples: u64,
    pub oja_schedule: Option<OjaSchedule>,
    pub orthogonal_sweeps: usize,
    pub series: Vec<Series>,
    pub equivalence: Option<EquivalenceRow>,
    pub rate: Option<RateCheck>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub config: ExperimentConfig,
    pub runs: Vec<ComparisonRun>,
}

/// Runs VR-PCA, Oja (`k = 1` only) for the same number of samples, and
/// orthogonal iteration for as many full passes as that budget buys. All
/// three start from the same frame. Writes `compare.json` when an output
/// directory is set.
pub fn compare_baselines(cfg: &ExperimentConfig) -> Result<ComparisonReport> {
    let prepared = prepare(cfg)?;
    let runs = cfg
        .seeds
        .par_iter()
        .map(|&seed| compare_seed(cfg, &prepared, seed))
        .collect::<Result<Vec<_>>>()?;
    let report = ComparisonReport {
        config: ExperimentConfig {
            output_dir: None,
            ..cfg.clone()
        },
        runs,
    };
    if let Some(dir) = &cfg.output_dir {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        write_json(&dir.join("compare.json"), &report)?;
    }
    Ok(report)
}

fn frame_difference(a: &OrthonormalFrame, b: &OrthonormalFrame) -> f64 {
    let (a, b) = (a.as_matrix(), b.as_matrix());
    (0..a.ncols())
        .map(|j| {
            let (x, y) = (a.column(j), b.column(j));
            let y = if x.dot(&y) < 0.0 { -y } else { y.into_owned() };
            (x - y).abs().max()
        })
        .fold(0.0, f64::max)
}

fn compare_seed(cfg: &ExperimentConfig, p: &Prepared, seed: u64) -> Result<ComparisonRun> {
    let x = &p.data;
    let k = cfg.k;
    let reference = p.reference.as_ref();
    let mut warnings = p.warnings.clone();

    let (w0, _) = initialize(cfg, p, seed)?;
    let (w0, _, burn_warning) = run_burn_in(cfg, p, w0, seed)?;
    warnings.extend(burn_warning);
    let scfg = solver_config(cfg, p, seed)?;

    let vr = if k == 1 {
        vrpca_vector(x, &w0, &scfg, reference)?
    } else {
        vrpca_block(x, &w0, &scfg, reference)?
    };
    let samples = vr.samples();
    let mut series = vec![Series::from_trace("vrpca", &vr)];

    let equivalence = if k == 1 {
        let block = vrpca_block(x, &w0, &scfg, reference)?;
        Some(EquivalenceRow {
            vector_final_potential: vr.final_potential(),
            block_final_potential: block.final_potential(),
            max_frame_difference: frame_difference(&vr.final_frame, &block.final_frame),
        })
    } else {
        None
    };

    let oja_schedule = if k == 1 {
        // η_t = 1/(λ(t + r/λ)), so the first step is about 1/r.
        let schedule = OjaSchedule {
            c: 1.0 / p.lambda,
            offset: x.r() / p.lambda,
        };
        let oja = oja_baseline(x, &w0, schedule, samples, seed, (samples / 100).max(1), reference)?;
        series.push(Series::from_trace("oja", &oja));
        Some(schedule)
    } else {
        warnings.push("the Oja baseline is single-vector; skipped for k > 1".into());
        None
    };

    let sweeps = ((samples / x.len() as u64) as usize).max(1);
    let orth = orthogonal_iteration(x, &w0, sweeps, reference)?;
    series.push(Series::from_trace("orthogonal_iteration", &orth));

    let rate = match &p.eigenvalues {
        Some(ev) if k < ev.len() && ev[k - 1] > 0.0 => {
            let rho = ev[k] / ev[k - 1];
            let pots = orth.epoch_potentials();
            let last = pots.iter().rposition(|q| *q > RATE_FLOOR).unwrap_or(0);
            let first = last / 2;
            (last > first && pots[first] > 0.0).then(|| {
                let observed = (pots[last] / pots[first]).powf(1.0 / (last - first) as f64);
                let predicted = rho * rho;
                RateCheck {
                    eigenvalue_ratio: rho,
                    sweep_from: first,
                    sweep_to: last,
                    observed_rate: observed,
                    predicted_rate: predicted,
                    ratio: observed / predicted,
                }
            })
        }
        _ => None,
    };

    Ok(ComparisonRun {
        seed,
        samples,
        oja_schedule,
        orthogonal_sweeps: sweeps,
        series,
        equivalence,
        rate,
        warnings,
    })
}
