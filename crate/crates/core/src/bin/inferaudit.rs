//! Command-line front end: train target models and run the inference
//! experiments against them.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use inferaudit::config::{AlphaRule, DataSource, ModelKind, RunConfig, UnknownRule};
use inferaudit::dataset::SynthKind;
use inferaudit::experiment::{AttackSelection, ExperimentReport};
use inferaudit::ingest::{DatasetSpec, LabelRule};
use inferaudit::model::{Activation, MlpConfig, OptimizerKind};
use inferaudit::run::{self, SeparationConfig};
use inferaudit::space::DomainKind;

#[derive(Parser)]
#[command(
    name = "inferaudit",
    version,
    about = "Train tabular classifiers and measure membership / attribute inference leakage"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct DataArgs {
    /// CSV dataset path; omit to use a generated synthetic dataset.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Label column name, or derive:kmeans(k).
    #[arg(long, default_value = "label")]
    label: String,
    /// Feature domain of the dataset.
    #[arg(long, value_parser = parse_domain, default_value = "binary")]
    domain: DomainKind,
    /// Min-max normalize continuous features to [-1, 1].
    #[arg(long)]
    normalize: bool,
    #[arg(long, default_value_t = 0.34)]
    train_fraction: f64,
    #[arg(long, default_value_t = 0.33)]
    test_fraction: f64,
    /// Synthetic fallback dataset shape: m,n,k,spread.
    #[arg(long, default_value = "600,6000,20,0.3")]
    synth: String,
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Classifier family.
    #[arg(long, value_parser = parse_model_kind, default_value = "mlp")]
    model: ModelKind,
    /// Load this checkpoint instead of training.
    #[arg(long)]
    model_in: Option<PathBuf>,
    /// Hidden layer widths, comma separated.
    #[arg(long, default_value = "128")]
    hidden: String,
    #[arg(long, value_parser = parse_activation, default_value = "tanh")]
    activation: Activation,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    learning_rate: f64,
    #[arg(long, value_parser = parse_optimizer, default_value = "adam")]
    optimizer: OptimizerKind,
}

#[derive(Args, Clone)]
struct AttackArgs {
    /// Membership attack: conf, loss or shadow.
    #[arg(long, value_parser = parse_attack, default_value = "conf")]
    attack: AttackSelection,
    #[arg(long, default_value_t = 4)]
    n_shadows: usize,
    /// One attack head per class instead of a shared head.
    #[arg(long)]
    per_class_heads: bool,
}

#[derive(Args, Clone)]
struct CommonArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Two-column plot-data output path (group, AUC).
    #[arg(long)]
    plot_out: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Member / non-member sample sizes.
    #[arg(long, default_value_t = 1000)]
    members: usize,
    #[arg(long, default_value_t = 1000)]
    nonmembers: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Train a target model and write its checkpoint.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        common: CommonArgs,
        /// Checkpoint output path.
        #[arg(long)]
        model_out: Option<PathBuf>,
    },
    /// Membership inference experiment.
    Mi {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        attack: AttackArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Strong membership inference at a radius.
    Smi {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        attack: AttackArgs,
        #[command(flatten)]
        common: CommonArgs,
        /// Neighborhood radius r.
        #[arg(long, default_value_t = 5.0)]
        radius: f64,
    },
    /// Attribute inference (exact attributes).
    Ai {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        attack: AttackArgs,
        #[command(flatten)]
        common: CommonArgs,
        /// Masked feature set: mrmr:k or explicit indices i,j,k.
        #[arg(long, default_value = "mrmr:15")]
        unknown: String,
        /// Value bins per masked feature.
        #[arg(long, default_value_t = 2)]
        bins: usize,
    },
    /// Approximate attribute inference (success within alpha).
    Aai {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        attack: AttackArgs,
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value = "mrmr:15")]
        unknown: String,
        #[arg(long, default_value_t = 2)]
        bins: usize,
        /// Success tolerance: random-guess or a fixed distance.
        #[arg(long, default_value = "random-guess")]
        alpha: String,
    },
    /// Overfitting sweep over training-set sizes.
    Sweep {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        attack: AttackArgs,
        #[command(flatten)]
        common: CommonArgs,
        /// Training sizes, ascending.
        #[arg(long, default_value = "500,1000,2000,4000")]
        sizes: String,
        #[arg(long, default_value = "mrmr:15")]
        unknown: String,
        #[arg(long, default_value_t = 2)]
        bins: usize,
        #[arg(long, default_value = "random-guess")]
        alpha: String,
    },
    /// Constructive separation: membership inference succeeds while strong
    /// membership inference stays at chance.
    Theorem1 {
        #[arg(long, default_value_t = 64)]
        m: usize,
        /// Number of codewords.
        #[arg(long, default_value_t = 1000)]
        n_codewords: usize,
        #[arg(long, default_value_t = 1)]
        r: usize,
        #[arg(long, default_value_t = 4)]
        k: usize,
        /// Training sample size n.
        #[arg(long, default_value_t = 100)]
        n_train: usize,
        #[arg(long, default_value_t = 20000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic clustered dataset as CSV.
    Synth {
        /// binary-clusters or continuous-clusters.
        #[arg(long, value_parser = parse_synth_kind, default_value = "binary-clusters")]
        kind: SynthKind,
        #[arg(long, default_value_t = 600)]
        m: usize,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        k: usize,
        #[arg(long, default_value_t = 0.3)]
        spread: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate per-class decision-region volumes.
    Dr {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        common: CommonArgs,
        /// Uniform samples drawn from the feature space.
        #[arg(long, default_value_t = 1_000_000)]
        region_samples: usize,
    },
}

fn parse_domain(s: &str) -> Result<DomainKind, String> {
    match s {
        "binary" => Ok(DomainKind::Binary),
        "continuous" => Ok(DomainKind::Continuous),
        _ => Err(format!("unknown domain {s:?}, want binary|continuous")),
    }
}

fn parse_model_kind(s: &str) -> Result<ModelKind, String> {
    match s {
        "mlp" => Ok(ModelKind::Mlp),
        "logistic" => Ok(ModelKind::Logistic),
        _ => Err(format!("unknown model {s:?}, want mlp|logistic")),
    }
}

fn parse_activation(s: &str) -> Result<Activation, String> {
    match s {
        "tanh" => Ok(Activation::Tanh),
        "relu" => Ok(Activation::Relu),
        _ => Err(format!("unknown activation {s:?}, want tanh|relu")),
    }
}

fn parse_optimizer(s: &str) -> Result<OptimizerKind, String> {
    match s {
        "sgd" => Ok(OptimizerKind::Sgd),
        "adam" => Ok(OptimizerKind::Adam),
        _ => Err(format!("unknown optimizer {s:?}, want sgd|adam")),
    }
}

fn parse_attack(s: &str) -> Result<AttackSelection, String> {
    match s {
        "conf" => Ok(AttackSelection::Conf),
        "loss" => Ok(AttackSelection::Loss),
        "shadow" => Ok(AttackSelection::Shadow),
        _ => Err(format!("unknown attack {s:?}, want conf|loss|shadow")),
    }
}

fn parse_synth_kind(s: &str) -> Result<SynthKind, String> {
    match s {
        "binary-clusters" => Ok(SynthKind::BinaryClusters),
        "continuous-clusters" => Ok(SynthKind::ContinuousClusters),
        _ => Err(format!(
            "unknown kind {s:?}, want binary-clusters|continuous-clusters"
        )),
    }
}

fn parse_usize_list(s: &str) -> anyhow::Result<Vec<usize>> {
    s.split(',')
        .map(|v| v.trim().parse::<usize>().map_err(Into::into))
        .collect()
}

fn build_config(
    data: &DataArgs,
    model: &ModelArgs,
    attack: Option<&AttackArgs>,
    common: &CommonArgs,
) -> anyhow::Result<RunConfig> {
    let source = match &data.data {
        Some(path) => DataSource::Csv(DatasetSpec {
            path: path.clone(),
            label: LabelRule::parse(&data.label).context("config: label rule")?,
            domain: data.domain,
            train_fraction: data.train_fraction,
            test_fraction: data.test_fraction,
            normalize: data.normalize,
        }),
        None => {
            let parts: Vec<&str> = data.synth.split(',').collect();
            anyhow::ensure!(
                parts.len() == 4,
                "config: --synth wants m,n,k,spread, got {:?}",
                data.synth
            );
            DataSource::Synth {
                kind: match data.domain {
                    DomainKind::Binary => SynthKind::BinaryClusters,
                    DomainKind::Continuous => SynthKind::ContinuousClusters,
                },
                m: parts[0].trim().parse()?,
                n: parts[1].trim().parse()?,
                k: parts[2].trim().parse()?,
                spread: parts[3].trim().parse()?,
                train_fraction: data.train_fraction,
                test_fraction: data.test_fraction,
            }
        }
    };
    let hidden = parse_usize_list(&model.hidden).context("config: --hidden")?;
    let mlp = MlpConfig {
        hidden_layers: hidden,
        activation: model.activation,
        epochs: model.epochs,
        batch_size: model.batch_size,
        learning_rate: model.learning_rate,
        optimizer: model.optimizer,
        seed: 0,
    };
    let mut config = RunConfig {
        data: source,
        model_kind: model.model,
        model: mlp,
        model_in: model.model_in.clone(),
        trials: common.trials,
        members: common.members,
        nonmembers: common.nonmembers,
        seed: common.seed,
        ..Default::default()
    };
    if let Some(a) = attack {
        config.attack = a.attack;
        config.n_shadows = a.n_shadows;
        config.per_class_heads = a.per_class_heads;
    }
    Ok(config)
}

fn emit(report: &ExperimentReport, common: &CommonArgs) -> anyhow::Result<()> {
    let doc = report.to_document().context("report: serialize")?;
    match &common.out {
        Some(path) => {
            std::fs::write(path, doc.as_bytes())
                .with_context(|| format!("report: write {}", path.display()))?;
            println!("report written to {}", path.display());
        }
        None => print!("{doc}"),
    }
    if let Some(plot) = &common.plot_out {
        run::write_distance_plot(report, plot).context("report: plot data")?;
        println!("plot data written to {}", plot.display());
    }
    Ok(())
}

fn real_main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Train {
            data,
            model,
            common,
            model_out,
        } => {
            let config = build_config(&data, &model, None, &common)?;
            let report =
                run::run_train(&config, model_out.as_deref()).context("stage: train")?;
            emit(&report, &common)
        }
        Command::Mi {
            data,
            model,
            attack,
            common,
        } => {
            let config = build_config(&data, &model, Some(&attack), &common)?;
            let report = run::run_mi(&config).context("stage: mi")?;
            emit(&report, &common)
        }
        Command::Smi {
            data,
            model,
            attack,
            common,
            radius,
        } => {
            let mut config = build_config(&data, &model, Some(&attack), &common)?;
            config.radius = radius;
            let report = run::run_smi(&config).context("stage: smi")?;
            emit(&report, &common)
        }
        Command::Ai {
            data,
            model,
            attack,
            common,
            unknown,
            bins,
        } => {
            let mut config = build_config(&data, &model, Some(&attack), &common)?;
            config.unknown = UnknownRule::parse(&unknown).context("config: --unknown")?;
            config.bins = bins;
            let report = run::run_ai(&config).context("stage: ai")?;
            emit(&report, &common)
        }
        Command::Aai {
            data,
            model,
            attack,
            common,
            unknown,
            bins,
            alpha,
        } => {
            let mut config = build_config(&data, &model, Some(&attack), &common)?;
            config.unknown = UnknownRule::parse(&unknown).context("config: --unknown")?;
            config.bins = bins;
            config.alpha = AlphaRule::parse(&alpha).context("config: --alpha")?;
            let report = run::run_aai(&config).context("stage: aai")?;
            emit(&report, &common)
        }
        Command::Sweep {
            data,
            model,
            attack,
            common,
            sizes,
            unknown,
            bins,
            alpha,
        } => {
            let mut config = build_config(&data, &model, Some(&attack), &common)?;
            config.sweep_sizes = parse_usize_list(&sizes).context("config: --sizes")?;
            config.unknown = UnknownRule::parse(&unknown).context("config: --unknown")?;
            config.bins = bins;
            config.alpha = AlphaRule::parse(&alpha).context("config: --alpha")?;
            let report = run::run_sweep(&config).context("stage: sweep")?;
            emit(&report, &common)
        }
        Command::Theorem1 {
            m,
            n_codewords,
            r,
            k,
            n_train,
            trials,
            seed,
            out,
        } => {
            let config = SeparationConfig {
                m,
                n_codewords,
                r,
                k,
                n_train,
                trials,
                seed,
            };
            let report = run::run_separation(&config).context("stage: theorem1")?;
            let common = CommonArgs {
                seed,
                out,
                plot_out: None,
                trials,
                members: 0,
                nonmembers: 0,
            };
            emit(&report, &common)
        }
        Command::Synth {
            kind,
            m,
            n,
            k,
            spread,
            seed,
            out,
        } => {
            let ds = inferaudit::dataset::synth_dataset(kind, m, n, k, spread, seed)
                .context("stage: synth")?;
            inferaudit::ingest::write_dataset_csv(&out, &ds).context("stage: synth-write")?;
            println!("dataset written to {}", out.display());
            Ok(())
        }
        Command::Dr {
            data,
            model,
            common,
            region_samples,
        } => {
            let mut config = build_config(&data, &model, None, &common)?;
            config.region_samples = region_samples;
            let report = run::run_decision_regions(&config).context("stage: dr")?;
            emit(&report, &common)
        }
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
