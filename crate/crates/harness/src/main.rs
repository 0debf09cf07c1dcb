use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vrpca::synthesize_dataset;
use vrpca_harness::experiment::write_json;
use vrpca_harness::{
    compare_baselines, geometry_report, load_dataset, run_experiment, save_dataset, BurnInSettings, DatasetFormat,
    DatasetSource, ExperimentConfig, HarnessError, InitChoice, Result, SolverChoice, SyntheticSource,
};

#[derive(Parser)]
#[command(name = "vrpca", version, about = "Variance-reduced stochastic PCA experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the solve pipeline for every seed and write traces and a report.
    Solve(ExperimentArgs),
    /// Run VR-PCA, Oja and orthogonal iteration at matched budgets.
    Compare(ExperimentArgs),
    /// Report the landscape diagnostics for a given gap and slack.
    Geometry {
        #[arg(long, default_value_t = 0.2)]
        lambda: f64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic dataset with a prescribed covariance spectrum.
    Synth {
        /// Leading eigenvalues, comma-separated.
        #[arg(long, value_delimiter = ',', required = true)]
        head: Vec<f64>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long, default_value_t = 0.5)]
        tail_ratio: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        format: Option<DatasetFormat>,
    },
    /// Convert a dataset between CSV and the binary format.
    Convert {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, value_enum)]
        from: Option<DatasetFormat>,
        #[arg(long, value_enum)]
        to: Option<DatasetFormat>,
    },
}

/// Every flag overrides the matching field of the `--config` file.
#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset file.
    #[arg(long, conflicts_with = "head")]
    dataset: Option<PathBuf>,
    #[arg(long, value_enum, requires = "dataset")]
    format: Option<DatasetFormat>,
    /// Synthetic spectrum head, comma-separated.
    #[arg(long, value_delimiter = ',')]
    head: Option<Vec<f64>>,
    #[arg(long, requires = "head")]
    dim: Option<usize>,
    #[arg(long, requires = "head")]
    tail_ratio: Option<f64>,
    #[arg(long, requires = "head")]
    n: Option<usize>,
    #[arg(long, requires = "head")]
    data_seed: Option<u64>,
    #[arg(long, value_enum)]
    solver: Option<SolverChoice>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    use_rotation: Option<bool>,
    #[arg(long)]
    early_exit: Option<bool>,
    #[arg(long)]
    record_wall_time: Option<bool>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, value_enum)]
    init: Option<InitChoice>,
    /// Run burn-in before the solver (k = 1).
    #[arg(long)]
    burn_in: bool,
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long)]
    burn_in_eta: Option<f64>,
    #[arg(long)]
    rescale: Option<bool>,
    #[arg(long)]
    verify: Option<bool>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
}

impl ExperimentArgs {
    fn into_config(self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(path) = self.dataset {
            cfg.dataset = Some(DatasetSource::File {
                path,
                format: self.format,
            });
        }
        if let Some(head) = self.head {
            let n = self.n.ok_or_else(|| HarnessError::Config("--head needs --n".into()))?;
            cfg.dataset = Some(DatasetSource::Synthetic(SyntheticSource {
                head,
                dim: self.dim,
                tail_ratio: self.tail_ratio.unwrap_or(0.5),
                n,
                seed: self.data_seed.unwrap_or(0),
            }));
        }
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field {
                    cfg.$field = v;
                }
            )*};
        }
        set!(
            solver,
            k,
            epochs,
            delta,
            epsilon,
            use_rotation,
            early_exit,
            record_wall_time,
            init,
            rescale,
            verify,
            seeds
        );
        if self.eta.is_some() {
            cfg.eta = self.eta;
        }
        if self.m.is_some() {
            cfg.m = self.m;
        }
        if self.lambda.is_some() {
            cfg.lambda = self.lambda;
        }
        if self.output_dir.is_some() {
            cfg.output_dir = self.output_dir;
        }
        if self.burn_in || self.zeta.is_some() || self.burn_in_eta.is_some() {
            let b = cfg.burn_in.get_or_insert_with(BurnInSettings::default);
            if self.zeta.is_some() {
                b.zeta = self.zeta;
            }
            if self.burn_in_eta.is_some() {
                b.eta = self.burn_in_eta;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve(args) => {
            let cfg = args.into_config()?;
            let report = run_experiment(&cfg)?;
            if cfg.output_dir.is_none() {
                return print_json(&report);
            }
            for r in &report.runs {
                let pot = r.final_potential.map_or("n/a".to_string(), |p| format!("{p:.3e}"));
                println!(
                    "seed {}: potential {pot}, residual {:.3e}, {} samples",
                    r.seed, r.final_residual, r.samples
                );
            }
            Ok(())
        }
        Command::Compare(args) => {
            let cfg = args.into_config()?;
            let report = compare_baselines(&cfg)?;
            if cfg.output_dir.is_none() {
                return print_json(&report);
            }
            for run in &report.runs {
                let finals: Vec<String> = run
                    .series
                    .iter()
                    .map(|s| match s.final_potential() {
                        Some(p) => format!("{} {p:.3e}", s.method),
                        None => format!("{} n/a", s.method),
                    })
                    .collect();
                println!("seed {}: {} samples; {}", run.seed, run.samples, finals.join(", "));
            }
            Ok(())
        }
        Command::Geometry { lambda, eps, seed, out } => {
            let report = geometry_report(lambda, eps, seed)?;
            match out {
                Some(path) => write_json(&path, &report),
                None => print_json(&report),
            }
        }
        Command::Synth {
            head,
            dim,
            tail_ratio,
            n,
            seed,
            out,
            format,
        } => {
            let source = SyntheticSource {
                head,
                dim,
                tail_ratio,
                n,
                seed,
            };
            let syn = synthesize_dataset(&source.spectrum(), n, seed)?;
            let format = format.unwrap_or_else(|| DatasetFormat::from_path(&out));
            save_dataset(&syn.data, &out, format)
        }
        Command::Convert {
            input,
            output,
            from,
            to,
        } => {
            let from = from.unwrap_or_else(|| DatasetFormat::from_path(&input));
            let to = to.unwrap_or_else(|| DatasetFormat::from_path(&output));
            let x = load_dataset(&input, from)?;
            save_dataset(&x, &output, to)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // clap exits with 2 on usage errors; 2 is reserved for solver degeneracy.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
