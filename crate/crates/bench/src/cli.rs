use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use osc_core::activation::ActivationId;
use osc_core::report::ReportOptions;

use crate::bench::{cmd_bench, BenchConfig, DEFAULT_EPOCHS};
use crate::error::BenchError;
use crate::plots::cmd_emit_plots;
use crate::properties::cmd_properties;
use crate::xor_demo::cmd_xor;

pub const DATA_DIR_ENV: &str = "OSC_DATA_DIR";

#[derive(Debug, Parser)]
#[command(name = "osc", version, about = "Activation property reports, XOR certificates and CNN benchmarks")]
pub struct Cli {
    /// Directory for all outputs.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,

    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Zero out wall-clock fields so reruns are byte-identical.
    #[arg(long, global = true)]
    pub deterministic: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scan every activation and compare against its descriptor.
    Properties {
        /// Skip the brute-force XOR search column.
        #[arg(long)]
        no_xor: bool,
    },
    /// Fit a single neuron to bipolar XOR and export its decision boundary.
    Xor {
        /// Comma-separated names, or `all`.
        #[arg(long, value_delimiter = ',', default_value = "sine,squ,ncu,ssu,gcu,dsu")]
        activations: Vec<String>,
    },
    /// Train the activation × depth matrix on CIFAR-10.
    Bench(BenchArgs),
    /// Turn a records file into long-format CSV series.
    EmitPlots {
        /// Defaults to `<out-dir>/records.jsonl`.
        #[arg(long)]
        records: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// CIFAR-10 binary batch directory.
    #[arg(long, env = DATA_DIR_ENV)]
    pub data_dir: PathBuf,

    #[arg(long, value_delimiter = ',', default_value = "all")]
    pub activations: Vec<String>,

    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
    pub conv_layers: Vec<usize>,

    #[arg(long, default_value_t = DEFAULT_EPOCHS)]
    pub epochs: usize,

    #[arg(long, default_value_t = 64)]
    pub batch: usize,

    #[arg(long, default_value_t = 1e-4)]
    pub lr: f64,

    /// Stratified training subset size (multiple of 10).
    #[arg(long)]
    pub subset: Option<usize>,

    /// Stratified test subset size (multiple of 10).
    #[arg(long)]
    pub test_subset: Option<usize>,
}

/// Resolves names (case-insensitive, with aliases) and the `all` keyword.
pub fn parse_activations(names: &[String]) -> Result<Vec<ActivationId>, BenchError> {
    let mut out = Vec::new();
    for name in names.iter().map(|n| n.trim()).filter(|n| !n.is_empty()) {
        if name.eq_ignore_ascii_case("all") {
            out.extend(ActivationId::CATALOG);
            continue;
        }
        let id = name
            .parse::<ActivationId>()
            .map_err(|_| BenchError::Config(format!("unknown activation {name:?}")))?;
        out.push(id);
    }
    let mut seen = Vec::with_capacity(out.len());
    out.retain(|id| {
        let fresh = !seen.contains(id);
        seen.push(*id);
        fresh
    });
    if out.is_empty() {
        return Err(BenchError::Config("no activations given".into()));
    }
    Ok(out)
}

impl Cli {
    pub fn bench_config(&self, args: &BenchArgs) -> Result<BenchConfig, BenchError> {
        let cfg = BenchConfig {
            activations: parse_activations(&args.activations)?,
            conv_layers: args.conv_layers.clone(),
            epochs: args.epochs,
            batch: args.batch,
            lr: args.lr,
            subset: args.subset,
            test_subset: args.test_subset,
            seed: self.seed,
            out_dir: self.out_dir.clone(),
            data_dir: args.data_dir.clone(),
            deterministic: self.deterministic,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn run(cli: &Cli) -> Result<(), BenchError> {
    match &cli.command {
        Command::Properties { no_xor } => {
            let opts = ReportOptions {
                with_xor: !no_xor,
                ..ReportOptions::default()
            };
            let out = cmd_properties(&cli.out_dir, &opts)?;
            eprintln!("wrote {} and {}", out.json.display(), out.csv.display());
        }
        Command::Xor { activations } => {
            let ids = parse_activations(activations)?;
            cmd_xor(&ids, &cli.out_dir, cli.seed)?;
        }
        Command::Bench(args) => {
            let cfg = cli.bench_config(args)?;
            let out = cmd_bench(&cfg)?;
            eprintln!(
                "{} runs; wrote {} and {}",
                out.summary.len(),
                out.records_path.display(),
                out.summary_path.display()
            );
        }
        Command::EmitPlots { records } => {
            let records = records
                .clone()
                .unwrap_or_else(|| cli.out_dir.join(crate::bench::RECORDS_FILE));
            let out = cmd_emit_plots(&records, &cli.out_dir)?;
            eprintln!("{} series; wrote {}", out.series, out.epoch_csv.display());
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_is_well_formed() {
        Cli::command().debug_assert();
    }

    #[test]
    fn activation_lists() {
        let ids = parse_activations(&["ReLU".into(), "ssu".into(), "relu".into()]).unwrap();
        assert_eq!(ids, vec![ActivationId::ReLU, ActivationId::SSU]);
        assert_eq!(parse_activations(&["all".into()]).unwrap().len(), 27);
        assert!(matches!(parse_activations(&["nope".into()]), Err(BenchError::Config(_))));
    }

    #[test]
    fn bench_flags() {
        let cli = Cli::try_parse_from([
            "osc", "bench", "--data-dir", "/d", "--activations", "relu,gcu", "--conv-layers", "2",
            "--epochs", "10", "--subset", "5000", "--test-subset", "1000", "--seed", "3", "--deterministic",
        ])
        .unwrap();
        let Command::Bench(args) = &cli.command else { panic!() };
        let cfg = cli.bench_config(args).unwrap();
        assert_eq!(cfg.activations, vec![ActivationId::ReLU, ActivationId::GCU]);
        assert_eq!(cfg.conv_layers, vec![2]);
        assert_eq!((cfg.epochs, cfg.batch, cfg.lr), (10, 64, 1e-4));
        assert_eq!((cfg.subset, cfg.test_subset, cfg.seed), (Some(5000), Some(1000), 3));
        assert!(cfg.deterministic);
    }
}
