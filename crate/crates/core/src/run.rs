//! Experiment orchestration: resolve a run configuration into data, model,
//! attack and measurement, and emit the report.

use std::path::Path;

use crate::attack::{
    default_attack_config, fit_shadow_attack, train_shadows, ConfMi, LossMi, MembershipScorer,
    ShadowAttackModel,
};
use crate::config::{DataSource, ModelKind, RunConfig, UnknownRule};
use crate::dataset::{synth_dataset, LabeledDataset};
use crate::error::{Error, Result};
use crate::experiment::report::{format_group_key, write_plot_data};
use crate::experiment::{
    ai_aai_evaluate, decision_region_volumes, distance_stratified_auc, mi_experiment,
    mrmr_select, overfitting_sweep, smi_experiment, synthesize_nonmembers_binary,
    synthesize_nonmembers_continuous, AttackSelection, DistanceGrouping, ExperimentKind,
    ExperimentReport, PerturbNeighborSampler, SweepConfig,
};
use crate::model::{finish_report, train_logistic, train_mlp, TrainedModel};
use crate::seed::derive_seed;
use crate::space::{DomainKind, FeatureVector, Metric};

/// Train/test data resolved from a run configuration.
pub struct PreparedData {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    pub full: LabeledDataset,
}

pub fn prepare_data(config: &RunConfig) -> Result<PreparedData> {
    match &config.data {
        DataSource::Csv(spec) => {
            let loaded = crate::ingest::load_dataset(spec, config.seed)?;
            Ok(PreparedData {
                train: loaded.train,
                test: loaded.test,
                full: loaded.full,
            })
        }
        DataSource::Synth {
            kind,
            m,
            n,
            k,
            spread,
            train_fraction,
            test_fraction,
        } => {
            let full = synth_dataset(
                *kind,
                *m,
                *n,
                *k,
                *spread,
                derive_seed(config.seed, "synth-data"),
            )?;
            let (train, test) = full.split_fractions(
                *train_fraction,
                *test_fraction,
                derive_seed(config.seed, "split"),
            )?;
            Ok(PreparedData { train, test, full })
        }
    }
}

pub fn prepare_model(config: &RunConfig, train: &LabeledDataset) -> Result<TrainedModel> {
    if let Some(path) = &config.model_in {
        return crate::checkpoint::load_model(path);
    }
    let cfg = config
        .model
        .clone()
        .with_seed(derive_seed(config.seed, "train-model"));
    let k = train.n_classes();
    let (model, _) = match config.model_kind {
        ModelKind::Mlp => train_mlp(train, k, &cfg)?,
        ModelKind::Logistic => train_logistic(train, k, &cfg)?,
    };
    Ok(model)
}

fn resolve_unknown(config: &RunConfig, data: &PreparedData) -> Result<Vec<usize>> {
    match &config.unknown {
        UnknownRule::Mrmr(k) => mrmr_select(&data.full, *k, 10),
        UnknownRule::Explicit(indices) => {
            let m = data.full.domain().dimension();
            if indices.is_empty() || indices.iter().any(|&i| i >= m) {
                return Err(Error::InvalidParameter(
                    "explicit unknown set empty or out of range".into(),
                ));
            }
            Ok(indices.clone())
        }
    }
}

/// The scorer named by the configuration, training shadows when needed.
pub fn prepare_scorer(
    config: &RunConfig,
    pool: &LabeledDataset,
) -> Result<(Box<dyn MembershipScorer>, Option<ShadowAttackModel>)> {
    match config.attack {
        AttackSelection::Conf => Ok((Box::new(ConfMi), None)),
        AttackSelection::Loss => Ok((Box::new(LossMi), None)),
        AttackSelection::Shadow => {
            let records = train_shadows(
                pool,
                config.n_shadows,
                &config.model,
                derive_seed(config.seed, "shadow"),
            )?;
            let attack = fit_shadow_attack(
                &records,
                &default_attack_config(),
                config.per_class_heads,
                derive_seed(config.seed, "shadow"),
            )?;
            Ok((Box::new(attack.clone()), Some(attack)))
        }
    }
}

fn config_snapshot(config: &RunConfig) -> serde_json::Value {
    serde_json::to_value(config).unwrap_or(serde_json::Value::Null)
}

fn member_sample(config: &RunConfig, data: &PreparedData) -> (LabeledDataset, LabeledDataset) {
    let members = data
        .train
        .sample(config.members, derive_seed(config.seed, "member-sample"));
    let nonmembers = data
        .test
        .sample(config.nonmembers, derive_seed(config.seed, "nonmember-sample"));
    (members, nonmembers)
}

/// Shadow pool: the part of the dataset outside train and test.
fn shadow_pool(data: &PreparedData) -> LabeledDataset {
    let used = data.train.len() + data.test.len();
    let rest: Vec<usize> = (used..data.full.len()).collect();
    if rest.is_empty() {
        // fall back to the test split when nothing was held out
        data.test.clone()
    } else {
        // full was shuffled by the split; take the residual records
        data.full.subset(&rest)
    }
}

pub fn run_mi(config: &RunConfig) -> Result<ExperimentReport> {
    let data = prepare_data(config)?;
    let model = prepare_model(config, &data.train)?;
    let pool = shadow_pool(&data);
    let (scorer, _) = prepare_scorer(config, &pool)?;
    let (members, nonmembers) = member_sample(config, &data);
    let mut report = mi_experiment(
        &model,
        &members,
        &nonmembers,
        scorer.as_ref(),
        config.trials,
        config.seed,
    )?;
    // per-distance AUC over the original non-members
    let metric = Metric::default_for(model.domain().kind());
    let grouping = DistanceGrouping::default_for(metric);
    let strata = distance_stratified_auc(
        &model,
        &members,
        &data.train,
        nonmembers.records(),
        scorer.as_ref(),
        metric,
        grouping,
    )?;
    report.auc_per_distance = Some(
        strata
            .groups
            .values()
            .map(|g| (format_group_key(g.distance), g.auc))
            .collect(),
    );
    report.config = config_snapshot(config);
    Ok(report)
}

pub fn run_smi(config: &RunConfig) -> Result<ExperimentReport> {
    let data = prepare_data(config)?;
    let model = prepare_model(config, &data.train)?;
    let pool = shadow_pool(&data);
    let (scorer, _) = prepare_scorer(config, &pool)?;
    let (members, _) = member_sample(config, &data);
    let sampler = PerturbNeighborSampler::default();
    let metric = Metric::default_for(model.domain().kind());
    let mut report = smi_experiment(
        &model,
        &members,
        config.radius,
        metric,
        scorer.as_ref(),
        &sampler,
        config.trials,
        config.seed,
    )?;

    // distance-stratified AUC over synthetic non-members up to the radius
    let synth_seed = derive_seed(config.seed, "smi-synth");
    let bases = members.sample(200.min(members.len()), derive_seed(config.seed, "smi-bases"));
    let mut candidates: Vec<FeatureVector> = Vec::new();
    for (i, base) in bases.iter().enumerate() {
        let generated = match model.domain().kind() {
            DomainKind::Binary => {
                let max_d = (config.radius.floor() as usize)
                    .clamp(1, model.domain().dimension());
                let distances: Vec<usize> = (1..=max_d).collect();
                synthesize_nonmembers_binary(
                    base,
                    &members,
                    &distances,
                    1,
                    derive_seed(synth_seed, &format!("base-{i}")),
                )
            }
            DomainKind::Continuous => synthesize_nonmembers_continuous(
                base,
                &members,
                config.radius,
                0.05,
                1,
                derive_seed(synth_seed, &format!("base-{i}")),
            ),
        };
        match generated {
            Ok(list) => candidates.extend(list.into_iter().map(|s| s.vector)),
            Err(Error::SamplingExhausted(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    let grouping = DistanceGrouping::default_for(metric);
    if !candidates.is_empty() {
        let strata = distance_stratified_auc(
            &model,
            &members,
            &members,
            &candidates,
            scorer.as_ref(),
            metric,
            grouping,
        )?;
        report.auc_per_distance = Some(
            strata
                .groups
                .values()
                .map(|g| (format_group_key(g.distance), g.auc))
                .collect(),
        );
    }
    report.config = config_snapshot(config);
    Ok(report)
}

fn run_ai_like(config: &RunConfig, alpha_override: Option<f64>) -> Result<ExperimentReport> {
    let data = prepare_data(config)?;
    let model = prepare_model(config, &data.train)?;
    let pool = shadow_pool(&data);
    let (scorer, _) = prepare_scorer(config, &pool)?;
    let unknown = resolve_unknown(config, &data)?;
    let metric = Metric::default_for(model.domain().kind());
    let alpha = match alpha_override {
        Some(a) => a,
        None => config.alpha.resolve(metric, unknown.len())?,
    };
    let (members, nonmembers) = member_sample(config, &data);
    let results = ai_aai_evaluate(
        &model,
        &[scorer.as_ref()],
        &members,
        &nonmembers,
        &unknown,
        config.bins,
        alpha,
        metric,
        config.seed,
        config.members.max(config.nonmembers),
    )?;
    let r = &results[0];
    let kind = if alpha == 0.0 {
        ExperimentKind::Ai
    } else {
        ExperimentKind::Aai
    };
    let mut report = ExperimentReport::new(kind, config.seed);
    report.scorer = Some(r.scorer.clone());
    report.advantage = Some(if alpha == 0.0 {
        r.ai_advantage
    } else {
        r.aai_advantage
    });
    report.tie_stats = Some(r.tie_stats);
    report.trials = Some(r.tie_stats.total_challenges);
    report.extra.insert(
        "unknown_features".into(),
        serde_json::to_value(&unknown).unwrap(),
    );
    report
        .extra
        .insert("alpha".into(), serde_json::Value::from(alpha));
    report.extra.insert(
        "member_success_rate".into(),
        serde_json::Value::from(if alpha == 0.0 {
            r.member_ai_rate
        } else {
            r.member_aai_rate
        }),
    );
    report.extra.insert(
        "nonmember_success_rate".into(),
        serde_json::Value::from(if alpha == 0.0 {
            r.nonmember_ai_rate
        } else {
            r.nonmember_aai_rate
        }),
    );
    report.config = config_snapshot(config);
    Ok(report)
}

pub fn run_ai(config: &RunConfig) -> Result<ExperimentReport> {
    run_ai_like(config, Some(0.0))
}

pub fn run_aai(config: &RunConfig) -> Result<ExperimentReport> {
    run_ai_like(config, None)
}

pub fn run_sweep(config: &RunConfig) -> Result<ExperimentReport> {
    let data = prepare_data(config)?;
    let unknown = resolve_unknown(config, &data)?;
    let metric = Metric::default_for(data.full.domain().kind());
    let alpha = config.alpha.resolve(metric, unknown.len())?;
    let sweep_cfg = SweepConfig {
        model: config.model.clone(),
        attack: config.attack,
        n_shadows: config.n_shadows,
        shadow_pool: shadow_pool(&data).len().max(config.n_shadows * 2),
        test_ratio: 1.0,
        challenges: config.members.min(500),
        bins: config.bins,
    };
    let rows = overfitting_sweep(
        &data.full,
        &config.sweep_sizes,
        &sweep_cfg,
        &unknown,
        alpha,
        config.seed,
    )?;
    let mut report = ExperimentReport::new(ExperimentKind::Sweep, config.seed);
    report.scorer = Some(config.attack.to_string());
    report
        .extra
        .insert("rows".into(), serde_json::to_value(&rows).unwrap());
    report
        .extra
        .insert("alpha".into(), serde_json::Value::from(alpha));
    report.config = config_snapshot(config);
    Ok(report)
}

pub fn run_decision_regions(config: &RunConfig) -> Result<ExperimentReport> {
    let data = prepare_data(config)?;
    let model = prepare_model(config, &data.train)?;
    let profile = decision_region_volumes(
        &model,
        config.region_samples,
        derive_seed(config.seed, "regions"),
    )?;
    let mut report = ExperimentReport::new(ExperimentKind::DecisionRegions, config.seed);
    report.extra.insert(
        "volumes".into(),
        serde_json::to_value(profile.volumes()).unwrap(),
    );
    report.extra.insert(
        "most_dominant".into(),
        serde_json::Value::from(profile.most_dominant()),
    );
    report.config = config_snapshot(config);
    Ok(report)
}

/// Parameters of the constructive MI/SMI separation run.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SeparationConfig {
    pub m: usize,
    pub n_codewords: usize,
    pub r: usize,
    pub k: usize,
    pub n_train: usize,
    pub trials: usize,
    pub seed: u64,
}

pub fn run_separation(config: &SeparationConfig) -> Result<ExperimentReport> {
    let code = crate::separation::sample_spread_codewords(
        config.m,
        config.n_codewords,
        config.r,
        config.k,
        Metric::Hamming,
        derive_seed(config.seed, "spread-code"),
    )?;
    let outcome =
        crate::separation::theorem1_experiment(&code, config.n_train, config.trials, config.seed)?;
    let mut report = ExperimentReport::new(ExperimentKind::Theorem1, config.seed);
    report.trials = Some(config.trials as u64);
    report.extra.insert(
        "mi_advantage".into(),
        serde_json::Value::from(outcome.mi_advantage),
    );
    report.extra.insert(
        "smi_advantage".into(),
        serde_json::Value::from(outcome.smi_advantage),
    );
    report.extra.insert(
        "advantage_floor".into(),
        serde_json::Value::from(0.5 * (config.k - 1) as f64 / config.k as f64),
    );
    report.config = serde_json::to_value(config).unwrap_or(serde_json::Value::Null);
    Ok(report)
}

/// Train a model per the configuration, write the checkpoint if asked, and
/// report train/test metrics.
pub fn run_train(config: &RunConfig, model_out: Option<&Path>) -> Result<ExperimentReport> {
    let data = prepare_data(config)?;
    let cfg = config
        .model
        .clone()
        .with_seed(derive_seed(config.seed, "train-model"));
    let k = data.train.n_classes();
    let (model, mut train_report) = match config.model_kind {
        ModelKind::Mlp => train_mlp(&data.train, k, &cfg)?,
        ModelKind::Logistic => train_logistic(&data.train, k, &cfg)?,
    };
    finish_report(&mut train_report, &model, &data.train, &data.test)?;
    if let Some(path) = model_out {
        crate::checkpoint::save_model(path, &model)?;
    }
    let mut report = ExperimentReport::new(ExperimentKind::Train, config.seed);
    report.extra.insert(
        "train_report".into(),
        serde_json::to_value(&train_report).unwrap(),
    );
    report.extra.insert(
        "architecture".into(),
        serde_json::Value::from(model.architecture()),
    );
    report.config = config_snapshot(config);
    Ok(report)
}

/// Write the per-distance AUC table of a report as two-column plot data.
pub fn write_distance_plot(report: &ExperimentReport, path: &Path) -> Result<()> {
    let rows: Vec<(String, f64)> = report
        .auc_per_distance
        .as_ref()
        .map(|m| m.iter().map(|(k, v)| (k.clone(), *v)).collect())
        .unwrap_or_default();
    write_plot_data(path, &rows)
}
