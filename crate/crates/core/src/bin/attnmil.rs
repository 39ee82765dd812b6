use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use attnmil::bench::{
    compare, crossval, evaluate_dataset, explain, explain_table, generate_synth, gradcheck_all, train_full,
    write_comparison, write_report, DataFormat, Execution, GradCheckSettings, RunConfig, TrainedModel,
};
use attnmil::mildata::SynthConfig;
use attnmil::milnet::HeadPlacement;
use attnmil::milpool::PoolingKind;
use attnmil::Result;

#[derive(Parser)]
#[command(name = "attnmil", version, about = "Attention-based multiple instance learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Repeated stratified k-fold cross-validation of one pooling kind
    Crossval(Common),
    /// Paired cross-validation of several pooling kinds over shared folds
    Compare {
        #[command(flatten)]
        common: Common,
        /// Comma-separated pooling kinds
        #[arg(long, value_delimiter = ',', default_value = "mean,max,attention,gated")]
        kinds: Vec<PoolingKind>,
    },
    /// Train on the whole dataset and write a model file
    Train(Common),
    /// Evaluate a saved model
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
    },
    /// Rank instances of each bag by attention weight
    Explain {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
    },
    /// Finite-difference check of the full model for every pooling kind
    Gradcheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
        /// Corrupt the classifier gradient by this factor (checker sanity test)
        #[arg(long, hide = true)]
        fault: Option<f64>,
    },
    /// Write a synthetic witness dataset as bag-CSV
    Synth {
        #[arg(long, default_value_t = 100)]
        bags: usize,
        #[arg(long, default_value_t = 10)]
        d_feat: usize,
        #[arg(long, default_value_t = 0.1)]
        witness_rate: f64,
        #[arg(long, default_value_t = 6.0)]
        separation: f64,
        #[arg(long, default_value_t = 5)]
        min_size: usize,
        #[arg(long, default_value_t = 15)]
        max_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: DataFormat,
    #[arg(long, default_value = "attention")]
    pooling: PoolingKind,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    temperature: Option<f64>,
    /// Backbone widths, e.g. 256,128,64
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    /// Apply the classifier per instance and pool the probabilities
    #[arg(long)]
    classify_then_pool: bool,
    #[arg(long)]
    no_normalize: bool,
    /// Run folds one after another instead of on the rayon pool
    #[arg(long)]
    serial: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    top: usize,
}

impl Common {
    fn run_config(&self) -> RunConfig {
        let mut cfg = RunConfig {
            data: self.data.clone(),
            format: self.format,
            folds: self.folds,
            repeats: self.repeats,
            seed: self.seed,
            normalize: !self.no_normalize,
            out: self.out.clone(),
            ..RunConfig::default()
        }
        .with_pooling(self.pooling);
        if let Some(e) = self.epochs {
            cfg.train.epochs = e;
        }
        if let Some(lr) = self.lr {
            cfg.train.learning_rate = lr;
        }
        if let Some(wd) = self.weight_decay {
            cfg.train.weight_decay = wd;
        }
        if let Some(d) = self.dropout {
            cfg.dropout = d;
        }
        if let Some(t) = self.temperature {
            cfg.pooling.temperature = t;
        }
        if let Some(h) = &self.hidden {
            cfg.hidden = h.clone();
        }
        if self.classify_then_pool {
            cfg.head_placement = HeadPlacement::ClassifyThenPool;
        }
        cfg
    }

    fn execution(&self) -> Execution {
        if self.serial {
            Execution::Serial
        } else {
            Execution::Parallel
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Crossval(common) => {
            let cfg = common.run_config();
            let dataset = cfg.load_data()?;
            let report = crossval(&dataset, &cfg, common.execution())?;
            println!("{}", report.summary_line());
            if let Some(out) = &cfg.out {
                let table = write_report(&report, out)?;
                eprintln!("wrote {} and {}", out.display(), table.display());
            }
        }
        Command::Compare { common, kinds } => {
            let cfg = common.run_config();
            let dataset = cfg.load_data()?;
            let comparison = compare(&dataset, &cfg, &kinds, common.execution())?;
            print!("{}", comparison.summary_table());
            if let Some(out) = &cfg.out {
                let table = write_comparison(&comparison, out)?;
                eprintln!("wrote {} and {}", out.display(), table.display());
            }
        }
        Command::Train(common) => {
            let cfg = common.run_config();
            let dataset = cfg.load_data()?;
            let (trained, history) = train_full(&dataset, &cfg)?;
            println!("final training loss {:.6} after {} steps", history.final_loss().unwrap_or(f64::NAN), history.steps);
            let out = cfg.out.unwrap_or_else(|| PathBuf::from("model.attnmil"));
            trained.save(&out)?;
            eprintln!("wrote {}", out.display());
        }
        Command::Eval { common, model } => {
            let cfg = common.run_config();
            let dataset = cfg.load_data()?;
            let metrics = evaluate_dataset(&TrainedModel::load(&model)?, &dataset)?;
            let json = serde_json::to_string_pretty(&metrics).expect("metrics serialize");
            println!("{json}");
            if let Some(out) = &cfg.out {
                std::fs::write(out, json).map_err(|e| attnmil::Error::Io { path: out.clone(), source: e })?;
            }
        }
        Command::Explain { common, model } => {
            let cfg = common.run_config();
            let dataset = cfg.load_data()?;
            let rows = explain(&TrainedModel::load(&model)?, &dataset, common.top)?;
            let table = explain_table(&rows);
            print!("{table}");
            if let Some(out) = &cfg.out {
                std::fs::write(out, table).map_err(|e| attnmil::Error::Io { path: out.clone(), source: e })?;
            }
        }
        Command::Gradcheck { common, tolerance, fault } => {
            let cfg = common.run_config();
            let settings = GradCheckSettings {
                tolerance,
                seed: cfg.seed,
                fault,
                ..GradCheckSettings::default()
            };
            let checks = gradcheck_all(&cfg, &settings, &PoolingKind::ALL)?;
            let mut ok = true;
            for c in &checks {
                println!(
                    "{:<10} max relative error {:.3e} over {} entries (worst {}) {}",
                    c.pooling.as_str(),
                    c.max_relative_error,
                    c.entries_checked,
                    c.worst_param.as_deref().unwrap_or("-"),
                    if c.passed { "ok" } else { "FAIL" }
                );
                ok &= c.passed;
            }
            return Ok(ok);
        }
        Command::Synth {
            bags,
            d_feat,
            witness_rate,
            separation,
            min_size,
            max_size,
            seed,
            out,
        } => {
            let config = SynthConfig {
                n_bags: bags,
                bag_size_range: (min_size, max_size),
                d_feat,
                witness_rate,
                cluster_separation: separation,
                ..SynthConfig::default()
            };
            let (dataset, sidecar) = generate_synth(&config, seed, &out)?;
            println!("wrote {} bags to {}", dataset.len(), out.display());
            if let Some(s) = sidecar {
                println!("instance labels in {}", s.display());
            }
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
