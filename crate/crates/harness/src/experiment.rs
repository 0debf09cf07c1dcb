//! The seeded solve pipeline behind `vrpca solve`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use vrpca::init::{alignment, numerical_rank};
use vrpca::oracle::DENSE_LIMIT;
use vrpca::{
    burn_in, deflation_solve, dense_eigh, gaussian_init, leading_subspace, potential, power_warm_start,
    rayleigh_residual, rescale_dataset, select_parameters, synthesize_dataset, vrpca_block, vrpca_vector, BurnInConfig,
    BurnInStop, DataMatrix, InitMethod, OrthonormalFrame, SolverConfig, TraceRecord,
};

use crate::config::{DatasetSource, ExperimentConfig, InitChoice, SolverChoice};
use crate::error::{HarnessError, Result};
use crate::io::{load_dataset, save_dataset, DatasetFormat};

/// Offsets added to a run's seed for the initialization and burn-in
/// streams. The solver itself uses the run seed unchanged.
pub const INIT_SEED_OFFSET: u64 = 100;
pub const BURN_IN_SEED_OFFSET: u64 = 200;

/// `d k (n + r² k³ / λ²) ln(1/ε)`, the predicted operation count of a solve
/// to accuracy `ε`.
pub fn runtime_model(d: usize, k: usize, n: usize, r: f64, lambda: f64, epsilon: f64) -> f64 {
    let (d, k, n) = (d as f64, k as f64, n as f64);
    d * k * (n + r * r * k.powi(3) / (lambda * lambda)) * (1.0 / epsilon).ln()
}

/// The data a run operates on, with everything that depends only on the
/// dataset (and not on the seed) computed once.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub data: DataMatrix,
    /// `r` of the data as loaded, before any rescaling.
    pub r_input: f64,
    /// Exact top-`k` subspace when verification is on.
    pub reference: Option<OrthonormalFrame>,
    /// Gap in the units of `data`, from the configuration or the oracle.
    pub lambda: f64,
    /// Gap of the exact spectrum, in the units of `data`.
    pub lambda_true: Option<f64>,
    /// Exact eigenvalues in descending order, in the units of `data`.
    pub eigenvalues: Option<Vec<f64>>,
    pub warnings: Vec<String>,
}

pub fn load_source(source: &DatasetSource) -> Result<(DataMatrix, Option<vrpca::SyntheticData>)> {
    match source {
        DatasetSource::File { path, format } => {
            let format = format.unwrap_or_else(|| DatasetFormat::from_path(path));
            Ok((load_dataset(path, format)?, None))
        }
        DatasetSource::Synthetic(s) => {
            let syn = synthesize_dataset(&s.spectrum(), s.n, s.seed)?;
            Ok((syn.data.clone(), Some(syn)))
        }
    }
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    cfg.validate()?;
    let source = cfg.dataset.as_ref().expect("validated");
    let (data, synthetic) = load_source(source)?;
    let k = cfg.k;
    if k == 0 || k > data.dim() {
        return Err(HarnessError::Config(format!("k = {k} must lie in [1, {}]", data.dim())));
    }
    let mut warnings = Vec::new();

    let (reference, eigenvalues) = match (&synthetic, cfg.verify) {
        (Some(syn), _) => (
            cfg.verify.then(|| syn.leading(k)).transpose()?,
            Some(syn.eigenvalues.clone()),
        ),
        (None, true) => {
            if data.dim() > DENSE_LIMIT {
                warnings.push(format!(
                    "d = {} is above the dense limit; skipping verification",
                    data.dim()
                ));
                (None, None)
            } else {
                let spec = dense_eigh(&data)?;
                let lead = leading_subspace(&spec, k)?;
                warnings.extend(lead.warning);
                (Some(lead.frame), Some(spec.eigenvalues))
            }
        }
        (None, false) => (None, None),
    };

    let r_input = data.r();
    let (data, scale) = if cfg.rescale {
        let (x, r0) = rescale_dataset(&data)?;
        (x, r0)
    } else {
        (data, 1.0)
    };
    let eigenvalues: Option<Vec<f64>> = eigenvalues.map(|e| e.iter().map(|s| s / scale).collect());
    let lambda_true = eigenvalues
        .as_ref()
        .map(|e| e[k - 1] - e.get(k).copied().unwrap_or(0.0));
    let lambda = match (cfg.lambda, lambda_true) {
        (Some(l), _) => l / scale,
        (None, Some(l)) => l,
        (None, None) => {
            return Err(HarnessError::Config(
                "no eigengap: set lambda or enable verification so the oracle can supply it".into(),
            ))
        }
    };
    if (lambda.is_nan() || lambda <= 0.0) && (cfg.eta.is_none() || cfg.m.is_none() || cfg.burn_in.is_some()) {
        return Err(vrpca::Error::NonPositiveGap(lambda).into());
    }
    Ok(Prepared {
        data,
        r_input,
        reference,
        lambda,
        lambda_true,
        eigenvalues,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitSummary {
    pub method: InitMethod,
    /// `‖VᵀW₀‖²/k` against the exact subspace, when verification is on.
    pub alignment_sq: Option<f64>,
    /// Numerical rank `‖A‖_F² / ‖A‖²`, reported with the warm start.
    pub nrank: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurnInSummary {
    pub eta: f64,
    pub budget: u64,
    pub iterations: u64,
    /// `None` when the budget ran out.
    pub stop: Option<BurnInStop>,
    pub converged: bool,
    pub potential: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub solver: SolverChoice,
    pub d: usize,
    pub n: usize,
    pub k: usize,
    /// `max ‖x_i‖²` of the data the solver saw.
    pub r: f64,
    /// `max ‖x_i‖²` as loaded.
    pub r_input: f64,
    pub lambda: f64,
    pub lambda_true: Option<f64>,
    pub init: InitSummary,
    pub burn_in: Option<BurnInSummary>,
    pub eta: f64,
    pub m: usize,
    pub epochs: usize,
    pub epoch_potentials: Vec<f64>,
    pub epoch_residuals: Vec<f64>,
    pub final_potential: Option<f64>,
    pub final_residual: f64,
    pub samples: u64,
    /// Only present when wall-clock recording is on.
    pub elapsed_s: Option<f64>,
    pub runtime_model: f64,
    pub warnings: Vec<String>,
    pub trace_path: Option<PathBuf>,
    pub frame_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub runs: Vec<RunReport>,
}

/// Runs every seed of `cfg` in parallel. With an output directory, each run
/// writes `trace_seed<S>.jsonl` and `frame_seed<S>.vrpc`, and the combined
/// report goes to `report.json`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let prepared = prepare(cfg)?;
    if let Some(dir) = &cfg.output_dir {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    let runs = cfg
        .seeds
        .par_iter()
        .map(|&seed| run_seed(cfg, &prepared, seed))
        .collect::<Result<Vec<_>>>()?;
    // The echoed config leaves out the output directory so that reports
    // written to different places are byte-identical.
    let report = ExperimentReport {
        config: ExperimentConfig {
            output_dir: None,
            ..cfg.clone()
        },
        runs,
    };
    if let Some(dir) = &cfg.output_dir {
        write_json(&dir.join("report.json"), &report)?;
    }
    Ok(report)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

/// One JSON object per line.
pub fn write_trace(path: &Path, records: &[TraceRecord]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for rec in records {
        serde_json::to_writer(&mut out, rec)?;
        out.write_all(b"\n").map_err(|e| HarnessError::io(path, e))?;
    }
    out.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRecord>> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| HarnessError::Parse {
                path: path.to_path_buf(),
                line: Some(i as u64 + 1),
                offset: None,
                message: e.to_string(),
            })
        })
        .collect()
}

pub(crate) fn initialize(cfg: &ExperimentConfig, p: &Prepared, seed: u64) -> Result<(OrthonormalFrame, InitSummary)> {
    let (d, k) = (p.data.dim(), cfg.k);
    let init_seed = seed.wrapping_add(INIT_SEED_OFFSET);
    let (frame, method) = match cfg.init {
        InitChoice::Gaussian => (gaussian_init(d, k, init_seed)?, InitMethod::Gaussian),
        InitChoice::Power => {
            let rep = power_warm_start(&p.data, k, init_seed, None)?;
            (rep.frame, rep.method)
        }
    };
    let alignment_sq = p.reference.as_ref().map(|v| alignment(v, &frame)).transpose()?;
    let nrank = match cfg.init {
        InitChoice::Power if d.min(p.data.len()) <= DENSE_LIMIT => Some(numerical_rank(&p.data)?),
        _ => None,
    };
    Ok((
        frame,
        InitSummary {
            method,
            alignment_sq,
            nrank,
        },
    ))
}

pub(crate) fn run_burn_in(
    cfg: &ExperimentConfig,
    p: &Prepared,
    w0: OrthonormalFrame,
    seed: u64,
) -> Result<(OrthonormalFrame, Option<BurnInSummary>, Option<String>)> {
    let Some(settings) = &cfg.burn_in else {
        return Ok((w0, None, None));
    };
    let bcfg = BurnInConfig {
        lambda: p.lambda,
        delta: cfg.delta,
        zeta: settings.zeta.unwrap_or(1.0 / p.data.dim() as f64),
        consts: cfg.constants,
        eta_override: settings.eta,
        epoch_len: None,
        seed: seed.wrapping_add(BURN_IN_SEED_OFFSET),
        plateau_tol: settings.plateau_tol,
    };
    let eta = settings.eta.unwrap_or_else(|| bcfg.step_size(p.data.r()));
    match burn_in(&p.data, &w0, &bcfg, p.reference.as_ref()) {
        Ok(out) => {
            let potential = out.trace.final_potential();
            let summary = BurnInSummary {
                eta: out.eta,
                budget: out.budget,
                iterations: out.iterations,
                stop: Some(out.stop),
                converged: true,
                potential,
            };
            Ok((out.frame, Some(summary), None))
        }
        Err(vrpca::Error::NonConvergence {
            iterations,
            budget,
            trace,
        }) => {
            let msg = format!("burn-in did not converge within {budget} iterations; continuing from its last iterate");
            log::warn!("seed {seed}: {msg}");
            let summary = BurnInSummary {
                eta,
                budget,
                iterations,
                stop: None,
                converged: false,
                potential: trace.final_potential(),
            };
            Ok((trace.final_frame, Some(summary), Some(msg)))
        }
        Err(e) => Err(e.into()),
    }
}

/// Solver settings for one seed; `eta` and `m` come from the eigengap
/// when the configuration leaves them unset.
pub fn solver_config(cfg: &ExperimentConfig, p: &Prepared, seed: u64) -> Result<SolverConfig> {
    let k = cfg.k;
    let (eta, m) = match (cfg.eta, cfg.m) {
        (Some(eta), Some(m)) => (eta, m),
        (eta, m) => {
            let sp = select_parameters(p.lambda, p.data.r(), k, cfg.delta, &cfg.constants)?;
            (eta.unwrap_or(sp.eta), m.unwrap_or(sp.m))
        }
    };
    Ok(SolverConfig {
        k,
        eta,
        m,
        epochs: cfg.epochs,
        seed,
        delta: cfg.delta,
        epsilon: cfg.epsilon,
        use_rotation: cfg.use_rotation,
        early_exit: cfg.early_exit,
        record_wall_time: cfg.record_wall_time,
    })
}

fn run_seed(cfg: &ExperimentConfig, p: &Prepared, seed: u64) -> Result<RunReport> {
    let start = Instant::now();
    let x = &p.data;
    let (d, n, k) = (x.dim(), x.len(), cfg.k);
    let mut warnings = p.warnings.clone();

    let (w0, init) = initialize(cfg, p, seed)?;
    let (w0, burn, burn_warning) = run_burn_in(cfg, p, w0, seed)?;
    warnings.extend(burn_warning);

    let scfg = solver_config(cfg, p, seed)?;
    let (eta, m) = (scfg.eta, scfg.m);

    let reference = p.reference.as_ref();
    let (records, frame, epoch_potentials, epoch_residuals) = match cfg.solver {
        SolverChoice::Vector | SolverChoice::Block => {
            let trace = if cfg.solver == SolverChoice::Vector {
                vrpca_vector(x, &w0, &scfg, reference)?
            } else {
                vrpca_block(x, &w0, &scfg, reference)?
            };
            let potentials = trace.epoch_potentials();
            let residuals = trace.boundaries().filter_map(|r| r.residual).collect();
            (trace.records, trace.final_frame, potentials, residuals)
        }
        SolverChoice::Deflation => {
            let res = deflation_solve(x, k, &w0, &scfg)?;
            warnings.extend(res.warnings);
            let records: Vec<TraceRecord> = res.traces.into_iter().flat_map(|t| t.records).collect();
            (records, res.frame, Vec::new(), Vec::new())
        }
    };

    // Deflation stages measure against deflated data, so its final numbers
    // are recomputed on the full problem.
    let from_trace = cfg.solver != SolverChoice::Deflation;
    let final_potential = match records.last().and_then(|r| r.potential).filter(|_| from_trace) {
        Some(v) => Some(v),
        None => reference.map(|v| potential(v, &frame)).transpose()?,
    };
    let final_residual = match epoch_residuals.last() {
        Some(&v) if from_trace => v,
        _ => rayleigh_residual(x, &frame)?,
    };
    let samples = match cfg.solver {
        SolverChoice::Deflation => {
            // Stage traces each count from zero.
            let mut total = 0;
            let mut last = 0;
            for r in &records {
                if r.samples < last {
                    total += last;
                }
                last = r.samples;
            }
            total + last
        }
        _ => records.last().map_or(0, |r| r.samples),
    };

    let (trace_path, frame_path) = match &cfg.output_dir {
        Some(dir) => {
            // Reports name the files relative to the output directory.
            let tp = PathBuf::from(format!("trace_seed{seed}.jsonl"));
            let fp = PathBuf::from(format!("frame_seed{seed}.vrpc"));
            write_trace(&dir.join(&tp), &records)?;
            let fm = DataMatrix::new(frame.as_matrix().clone())?;
            save_dataset(&fm, &dir.join(&fp), DatasetFormat::F64le)?;
            (Some(tp), Some(fp))
        }
        None => (None, None),
    };

    Ok(RunReport {
        seed,
        solver: cfg.solver,
        d,
        n,
        k,
        r: x.r(),
        r_input: p.r_input,
        lambda: p.lambda,
        lambda_true: p.lambda_true,
        init,
        burn_in: burn,
        eta,
        m,
        epochs: cfg.epochs,
        epoch_potentials,
        epoch_residuals,
        final_potential,
        final_residual,
        samples,
        elapsed_s: cfg.record_wall_time.then(|| start.elapsed().as_secs_f64()),
        runtime_model: runtime_model(d, k, n, x.r(), p.lambda, cfg.epsilon),
        warnings,
        trace_path,
        frame_path,
    })
}
