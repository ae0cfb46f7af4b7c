//! Black-box membership scorers behind one interface: prediction
//! confidence, prediction loss, and shadow-model attacks.
//!
//! Scores follow the convention higher = more member-like, so the loss
//! scorer negates the loss.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::{pack_bits, LabeledDataset, PackedBinarySet};
use crate::error::{Error, Result};
use crate::model::{cross_entropy_loss, MlpConfig, TrainedModel};
use crate::nn::{self, Network, OutputKind, Scratch, TrainParams};
use crate::seed::{derive_seed, rng_from_seed};
use crate::space::{DomainKind, FeatureVector};

/// A membership score with the identity of the scorer that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MembershipScore {
    pub score: f64,
    pub scorer: String,
}

/// Reusable buffers for the sibling-scoring hot path.
#[derive(Default)]
pub struct ScorerScratch {
    pub(crate) input: Vec<f64>,
    pub(crate) sorted: Vec<f64>,
    pub(crate) net_scratch: Scratch,
}

/// Uniform interface mapping (vector, true label, model) to a real-valued
/// membership score.
pub trait MembershipScorer: Sync {
    fn name(&self) -> &str;

    /// Membership score of `x`; higher = more member-like.
    fn score(&self, model: &TrainedModel, x: &FeatureVector, label: usize) -> Result<f64>;

    /// Hard membership decision for advantage estimation.
    fn decide(&self, model: &TrainedModel, x: &FeatureVector, label: usize) -> Result<bool>;

    /// Score used to rank siblings in attribute inference. Defaults to the
    /// membership score.
    fn ai_score(&self, model: &TrainedModel, x: &FeatureVector, label: usize) -> Result<f64> {
        self.score(model, x, label)
    }

    /// Sibling-ranking score from a precomputed confidence vector; `None`
    /// when the scorer needs more than the model output (e.g. test oracles
    /// that look at the raw vector), in which case drivers fall back to
    /// [`MembershipScorer::ai_score`].
    fn ai_score_from_confidences(
        &self,
        _model: &TrainedModel,
        _confs: &[f64],
        _label: usize,
        _ws: &mut ScorerScratch,
    ) -> Option<f64> {
        None
    }
}

/// Confidence attack: the largest predicted class confidence, true label
/// ignored.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConfMi;

impl MembershipScorer for ConfMi {
    fn name(&self) -> &str {
        "conf"
    }

    fn score(&self, model: &TrainedModel, x: &FeatureVector, _label: usize) -> Result<f64> {
        let probs = model.predict_proba(x)?;
        Ok(probs.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
    }

    fn decide(&self, model: &TrainedModel, x: &FeatureVector, label: usize) -> Result<bool> {
        Ok(self.score(model, x, label)? >= 0.5)
    }

    fn ai_score_from_confidences(
        &self,
        _model: &TrainedModel,
        confs: &[f64],
        _label: usize,
        _ws: &mut ScorerScratch,
    ) -> Option<f64> {
        Some(confs.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
    }
}

/// Loss attack: negated prediction loss; the hard decision thresholds at
/// the target model's stored mean training loss. For attribute inference
/// it ranks siblings by closeness of their loss to that training loss.
#[derive(Debug, Clone, Copy, Default)]
pub struct LossMi;

impl MembershipScorer for LossMi {
    fn name(&self) -> &str {
        "loss"
    }

    fn score(&self, model: &TrainedModel, x: &FeatureVector, label: usize) -> Result<f64> {
        let probs = model.predict_proba(x)?;
        Ok(-cross_entropy_loss(&probs, label)?)
    }

    fn decide(&self, model: &TrainedModel, x: &FeatureVector, label: usize) -> Result<bool> {
        Ok(self.score(model, x, label)? >= -model.train_loss_mean())
    }

    fn ai_score(&self, model: &TrainedModel, x: &FeatureVector, label: usize) -> Result<f64> {
        let probs = model.predict_proba(x)?;
        let loss = cross_entropy_loss(&probs, label)?;
        Ok(-(loss - model.train_loss_mean()).abs())
    }

    fn ai_score_from_confidences(
        &self,
        model: &TrainedModel,
        confs: &[f64],
        label: usize,
        _ws: &mut ScorerScratch,
    ) -> Option<f64> {
        let loss = -confs[label].max(nn::CONFIDENCE_FLOOR).ln();
        Some(-(loss - model.train_loss_mean()).abs())
    }
}

/// The confidence attack as a spec-shaped operation.
pub fn conf_mi_score(model: &TrainedModel, x: &FeatureVector) -> Result<MembershipScore> {
    Ok(MembershipScore {
        score: ConfMi.score(model, x, 0)?,
        scorer: "conf".into(),
    })
}

/// The loss attack as a spec-shaped operation.
pub fn loss_mi_score(
    model: &TrainedModel,
    x: &FeatureVector,
    true_label: usize,
) -> Result<MembershipScore> {
    if true_label >= model.n_classes() {
        return Err(Error::LabelOutOfRange {
            label: true_label,
            classes: model.n_classes(),
        });
    }
    Ok(MembershipScore {
        score: LossMi.score(model, x, true_label)?,
        scorer: "loss".into(),
    })
}

/// Attack heads of a shadow-model attack: either a single network over
/// (sorted confidences ++ one-hot label), or one network per class over the
/// sorted confidences alone.
#[derive(Debug, Clone)]
pub(crate) enum AttackHeads {
    Shared(Network),
    PerClass(Vec<Network>),
}

/// A trained shadow-model membership attack.
#[derive(Debug, Clone)]
pub struct ShadowAttackModel {
    pub(crate) n_classes: usize,
    pub(crate) n_shadows: usize,
    pub(crate) heads: AttackHeads,
}

impl ShadowAttackModel {
    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_shadows(&self) -> usize {
        self.n_shadows
    }

    pub fn per_class_heads(&self) -> bool {
        matches!(self.heads, AttackHeads::PerClass(_))
    }

    /// Membership probability in [0,1] from a confidence vector and the
    /// true label.
    pub fn membership_probability(&self, confs: &[f64], label: usize) -> Result<f64> {
        if confs.len() != self.n_classes {
            return Err(Error::DimensionMismatch {
                expected: self.n_classes,
                got: confs.len(),
            });
        }
        if label >= self.n_classes {
            return Err(Error::LabelOutOfRange {
                label,
                classes: self.n_classes,
            });
        }
        let mut ws = ScorerScratch::default();
        Ok(self.probability_into(confs, label, &mut ws))
    }

    pub(crate) fn probability_into(
        &self,
        confs: &[f64],
        label: usize,
        ws: &mut ScorerScratch,
    ) -> f64 {
        let k = self.n_classes;
        ws.sorted.clear();
        ws.sorted.extend_from_slice(confs);
        ws.sorted.sort_unstable_by(|a, b| b.total_cmp(a));
        match &self.heads {
            AttackHeads::Shared(net) => {
                ws.input.clear();
                ws.input.extend_from_slice(&ws.sorted);
                ws.input.resize(2 * k, 0.0);
                ws.input[k + label] = 1.0;
                net.forward(&ws.input, &mut ws.net_scratch)[0]
            }
            AttackHeads::PerClass(nets) => {
                nets[label].forward(&ws.sorted, &mut ws.net_scratch)[0]
            }
        }
    }
}

impl MembershipScorer for ShadowAttackModel {
    fn name(&self) -> &str {
        "shadow"
    }

    fn score(&self, model: &TrainedModel, x: &FeatureVector, label: usize) -> Result<f64> {
        let confs = model.predict_proba(x)?;
        self.membership_probability(&confs, label)
    }

    fn decide(&self, model: &TrainedModel, x: &FeatureVector, label: usize) -> Result<bool> {
        Ok(self.score(model, x, label)? >= 0.5)
    }

    fn ai_score_from_confidences(
        &self,
        _model: &TrainedModel,
        confs: &[f64],
        label: usize,
        ws: &mut ScorerScratch,
    ) -> Option<f64> {
        Some(self.probability_into(confs, label, ws))
    }
}

/// Score `x` with a shadow attack.
pub fn shadow_mi_score(
    attack: &ShadowAttackModel,
    model: &TrainedModel,
    x: &FeatureVector,
    true_label: usize,
) -> Result<MembershipScore> {
    if model.n_classes() != attack.n_classes {
        return Err(Error::DimensionMismatch {
            expected: attack.n_classes,
            got: model.n_classes(),
        });
    }
    Ok(MembershipScore {
        score: attack.score(model, x, true_label)?,
        scorer: "shadow".into(),
    })
}

/// One trained shadow model with its member (in) and held-out (out) halves.
pub struct ShadowFold {
    pub model: TrainedModel,
    pub members: LabeledDataset,
    pub outsiders: LabeledDataset,
}

/// The shadow models and the labeled attack-training records they induce.
pub struct ShadowRecords {
    pub folds: Vec<ShadowFold>,
    n_classes: usize,
}

struct AttackRecord {
    confs: Vec<f64>,
    label: usize,
    member: bool,
}

const STRATIFY_ATTEMPTS: usize = 10;

/// Split the pool into `n_shadows` disjoint (in, out) halves and train one
/// shadow model per fold. Retries with class-stratified deals when a fold's
/// training half misses a class.
pub fn train_shadows(
    pool: &LabeledDataset,
    n_shadows: usize,
    target_cfg: &MlpConfig,
    seed: u64,
) -> Result<ShadowRecords> {
    if n_shadows == 0 {
        return Err(Error::InvalidParameter("need at least one shadow".into()));
    }
    let k = pool.n_classes();
    let needed = n_shadows * 2 * k.max(1);
    if pool.len() < needed {
        return Err(Error::PoolTooSmall {
            pool: pool.len(),
            needed,
        });
    }
    let half = pool.len() / n_shadows / 2;

    let mut chosen: Option<Vec<Vec<usize>>> = None;
    let mut missing_class = 0;
    for attempt in 0..STRATIFY_ATTEMPTS {
        let slots = deal_folds(pool, n_shadows, half, attempt, seed);
        // every fold's training half must contain every class
        let mut ok = true;
        'folds: for fold in slots.iter().step_by(2) {
            let mut seen = vec![false; k];
            for &i in fold {
                seen[pool.label_of(i)] = true;
            }
            if let Some(c) = seen.iter().position(|s| !s) {
                missing_class = c;
                ok = false;
                break 'folds;
            }
        }
        if ok {
            chosen = Some(slots);
            break;
        }
    }
    let slots = chosen.ok_or(Error::StratificationFailed {
        attempts: STRATIFY_ATTEMPTS,
        class: missing_class,
    })?;

    let mut folds = Vec::with_capacity(n_shadows);
    for s in 0..n_shadows {
        let members = pool.subset(&slots[2 * s]);
        let outsiders = pool.subset(&slots[2 * s + 1]);
        // per-shadow derived seed: seed xor shadow index
        let cfg = target_cfg.clone().with_seed(seed ^ s as u64);
        let (model, _) = crate::model::train_mlp(&members, k, &cfg)?;
        folds.push(ShadowFold {
            model,
            members,
            outsiders,
        });
    }
    Ok(ShadowRecords {
        folds,
        n_classes: k,
    })
}

/// Deal pool indices into `2 * n_shadows` slots (shadow 0 in, shadow 0 out,
/// shadow 1 in, ...), each of size `half`. Attempt 0 is a plain shuffle;
/// later attempts deal class-by-class round robin.
fn deal_folds(
    pool: &LabeledDataset,
    n_shadows: usize,
    half: usize,
    attempt: usize,
    seed: u64,
) -> Vec<Vec<usize>> {
    let n_slots = 2 * n_shadows;
    let mut rng = rng_from_seed(derive_seed(seed, &format!("shadow-split-{attempt}")));
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.shuffle(&mut rng);
    let mut slots: Vec<Vec<usize>> = vec![Vec::with_capacity(half); n_slots];
    if attempt == 0 {
        for (j, &i) in order.iter().enumerate() {
            let slot = j / half;
            if slot >= n_slots {
                break;
            }
            slots[slot].push(i);
        }
    } else {
        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); pool.n_classes()];
        for &i in &order {
            by_class[pool.label_of(i)].push(i);
        }
        let mut cursor = attempt; // vary the starting slot between attempts
        for class_records in by_class {
            for i in class_records {
                // find the next slot with room
                for _ in 0..n_slots {
                    let slot = cursor % n_slots;
                    cursor += 1;
                    if slots[slot].len() < half {
                        slots[slot].push(i);
                        break;
                    }
                }
            }
        }
    }
    slots
}

fn collect_records(records: &ShadowRecords) -> Vec<AttackRecord> {
    let mut out = Vec::new();
    let mut scratch = Scratch::default();
    for fold in &records.folds {
        for rec in fold.members.iter() {
            let confs = fold.model.predict_proba_into(rec.values(), &mut scratch);
            out.push(AttackRecord {
                confs: confs.to_vec(),
                label: rec.label().unwrap(),
                member: true,
            });
        }
        for rec in fold.outsiders.iter() {
            let confs = fold.model.predict_proba_into(rec.values(), &mut scratch);
            out.push(AttackRecord {
                confs: confs.to_vec(),
                label: rec.label().unwrap(),
                member: false,
            });
        }
    }
    out
}

fn fit_attack_heads(
    records: &[AttackRecord],
    n_classes: usize,
    n_shadows: usize,
    attack_cfg: &MlpConfig,
    per_class: bool,
    seed: u64,
) -> Result<ShadowAttackModel> {
    let k = n_classes;
    let params = TrainParams {
        epochs: attack_cfg.epochs,
        batch_size: attack_cfg.batch_size,
        learning_rate: attack_cfg.learning_rate,
        optimizer: attack_cfg.optimizer,
    };
    let heads = if per_class {
        let mut nets = Vec::with_capacity(k);
        for class in 0..k {
            let inputs: Vec<Vec<f64>> = records
                .iter()
                .filter(|r| r.label == class)
                .map(|r| {
                    let mut v = r.confs.clone();
                    v.sort_unstable_by(|a, b| b.total_cmp(a));
                    v
                })
                .collect();
            let targets: Vec<usize> = records
                .iter()
                .filter(|r| r.label == class)
                .map(|r| r.member as usize)
                .collect();
            let mut dims = vec![k];
            dims.extend_from_slice(&attack_cfg.hidden_layers);
            dims.push(1);
            let head_seed = derive_seed(seed, &format!("attack-head-{class}"));
            let mut rng = rng_from_seed(head_seed);
            let mut net =
                Network::new_seeded(&dims, attack_cfg.activation, OutputKind::Sigmoid, &mut rng)?;
            if !inputs.is_empty() {
                let refs: Vec<&[f64]> = inputs.iter().map(|v| v.as_slice()).collect();
                nn::train_network(&mut net, &refs, &targets, &params, &mut rng)?;
            }
            nets.push(net);
        }
        AttackHeads::PerClass(nets)
    } else {
        let inputs: Vec<Vec<f64>> = records
            .iter()
            .map(|r| {
                let mut v = r.confs.clone();
                v.sort_unstable_by(|a, b| b.total_cmp(a));
                v.resize(2 * k, 0.0);
                v[k + r.label] = 1.0;
                v
            })
            .collect();
        let targets: Vec<usize> = records.iter().map(|r| r.member as usize).collect();
        let mut dims = vec![2 * k];
        dims.extend_from_slice(&attack_cfg.hidden_layers);
        dims.push(1);
        let mut rng = rng_from_seed(derive_seed(seed, "attack-head"));
        let mut net =
            Network::new_seeded(&dims, attack_cfg.activation, OutputKind::Sigmoid, &mut rng)?;
        let refs: Vec<&[f64]> = inputs.iter().map(|v| v.as_slice()).collect();
        nn::train_network(&mut net, &refs, &targets, &params, &mut rng)?;
        AttackHeads::Shared(net)
    };
    Ok(ShadowAttackModel {
        n_classes: k,
        n_shadows,
        heads,
    })
}

/// The attack-head architecture used throughout: one 64-unit hidden layer
/// with a sigmoid output.
pub fn default_attack_config() -> MlpConfig {
    MlpConfig {
        hidden_layers: vec![64],
        epochs: 30,
        ..Default::default()
    }
}

/// Train a shadow-model membership attack with a shared attack head.
pub fn train_shadow_attack(
    shadow_pool: &LabeledDataset,
    n_shadows: usize,
    target_cfg: &MlpConfig,
    attack_cfg: &MlpConfig,
    seed: u64,
) -> Result<ShadowAttackModel> {
    let records = train_shadows(shadow_pool, n_shadows, target_cfg, seed)?;
    fit_shadow_attack(&records, attack_cfg, false, seed)
}

/// Fit attack heads over already-trained shadows.
pub fn fit_shadow_attack(
    records: &ShadowRecords,
    attack_cfg: &MlpConfig,
    per_class_heads: bool,
    seed: u64,
) -> Result<ShadowAttackModel> {
    let recs = collect_records(records);
    fit_attack_heads(
        &recs,
        records.n_classes,
        records.folds.len(),
        attack_cfg,
        per_class_heads,
        seed,
    )
}

/// How many synthetic non-members to add per attack-training vector:
/// `per_distance` vectors at every Hamming distance `1..=max_distance`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SynthAugmentConfig {
    pub per_distance: usize,
    pub max_distance: usize,
}

impl Default for SynthAugmentConfig {
    fn default() -> Self {
        // two synthetic vectors at all Hamming distances up to 10
        Self {
            per_distance: 2,
            max_distance: 10,
        }
    }
}

/// Retrain the attack heads with extra synthetic non-member records flipped
/// out of both member and non-member attack-training vectors. With
/// `per_distance = 0` this reproduces the untuned attack exactly.
pub fn augment_attack_training(
    records: &ShadowRecords,
    attack_cfg: &MlpConfig,
    synth: &SynthAugmentConfig,
    seed: u64,
) -> Result<ShadowAttackModel> {
    let mut recs = collect_records(records);
    if synth.per_distance > 0 {
        let domain = records.folds[0].members.domain();
        if domain.kind() != DomainKind::Binary {
            return Err(Error::InvalidParameter(
                "synthetic tuning flips bits and needs a binary domain".into(),
            ));
        }
        let m = domain.dimension();
        if synth.max_distance == 0 || synth.max_distance > m {
            return Err(Error::InvalidParameter(
                "synthetic tuning distance must satisfy 1 <= d <= m".into(),
            ));
        }
        let mut rng = rng_from_seed(derive_seed(seed, "attack-augment"));
        let mut scratch = Scratch::default();
        let words = m.div_ceil(64);
        let mut query = vec![0u64; words];
        for fold in &records.folds {
            let packed = PackedBinarySet::build(&fold.members)?;
            let bases: Vec<&FeatureVector> =
                fold.members.iter().chain(fold.outsiders.iter()).collect();
            for base in bases {
                for d in 1..=synth.max_distance {
                    for _ in 0..synth.per_distance {
                        let mut values = base.values().to_vec();
                        let mut produced = false;
                        for _ in 0..100 {
                            values.copy_from_slice(base.values());
                            flip_coords(&mut values, d, &mut rng);
                            pack_bits(&values, &mut query);
                            if packed.nearest(&query).0 > 0 {
                                produced = true;
                                break;
                            }
                        }
                        if !produced {
                            continue; // cannot leave the member set at this distance
                        }
                        let confs = fold.model.predict_proba_into(&values, &mut scratch);
                        recs.push(AttackRecord {
                            confs: confs.to_vec(),
                            label: base.label().unwrap(),
                            member: false,
                        });
                    }
                }
            }
        }
    }
    fit_attack_heads(
        &recs,
        records.n_classes,
        records.folds.len(),
        attack_cfg,
        false,
        seed,
    )
}

pub(crate) fn flip_coords(values: &mut [f64], d: usize, rng: &mut rand_chacha::ChaCha8Rng) {
    let m = values.len();
    let picks = rand::seq::index::sample(rng, m, d);
    for i in picks {
        values[i] = 1.0 - values[i];
    }
}

/// Baseline scorers used as oracles and controls in tests and reports.
pub mod baseline {
    use super::*;
    use crate::space::{distance_to_set, Metric};

    /// Scores 1 for exact members of a reference set, 0 otherwise.
    pub struct MembershipOracle {
        members: LabeledDataset,
    }

    impl MembershipOracle {
        pub fn new(members: LabeledDataset) -> Self {
            Self { members }
        }

        fn is_member(&self, x: &FeatureVector) -> bool {
            self.members.iter().any(|r| r.values() == x.values())
        }
    }

    impl MembershipScorer for MembershipOracle {
        fn name(&self) -> &str {
            "membership-oracle"
        }

        fn score(&self, _model: &TrainedModel, x: &FeatureVector, _label: usize) -> Result<f64> {
            Ok(if self.is_member(x) { 1.0 } else { 0.0 })
        }

        fn decide(&self, model: &TrainedModel, x: &FeatureVector, label: usize) -> Result<bool> {
            Ok(self.score(model, x, label)? >= 0.5)
        }
    }

    /// Scores by negated distance to a reference set; members score 0,
    /// everything else negative.
    pub struct TrainDistanceOracle {
        train: LabeledDataset,
        metric: Metric,
    }

    impl TrainDistanceOracle {
        pub fn new(train: LabeledDataset, metric: Metric) -> Self {
            Self { train, metric }
        }
    }

    impl MembershipScorer for TrainDistanceOracle {
        fn name(&self) -> &str {
            "distance-oracle"
        }

        fn score(&self, _model: &TrainedModel, x: &FeatureVector, _label: usize) -> Result<f64> {
            let (d, _) = distance_to_set(x, &self.train, self.metric)?;
            Ok(-d)
        }

        fn decide(&self, model: &TrainedModel, x: &FeatureVector, label: usize) -> Result<bool> {
            Ok(self.score(model, x, label)? == 0.0)
        }
    }

    /// Scores every vector the same.
    pub struct ConstantScorer(pub f64);

    impl MembershipScorer for ConstantScorer {
        fn name(&self) -> &str {
            "constant"
        }

        fn score(&self, _model: &TrainedModel, _x: &FeatureVector, _label: usize) -> Result<f64> {
            Ok(self.0)
        }

        fn decide(&self, _model: &TrainedModel, _x: &FeatureVector, _label: usize) -> Result<bool> {
            Ok(self.0 >= 0.5)
        }
    }
}
