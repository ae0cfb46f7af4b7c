//! Attribute inference and approximate attribute inference.
//!
//! An attack receives a portion (a vector with a masked feature set S) and
//! its true class label, scores every sibling with a membership scorer, and
//! flags the top-scoring set. Exact success requires the truth's bin
//! pattern to be flagged; approximate success requires a flagged candidate
//! within distance alpha of the truth. Ties earn fractional credit 1/t.

use rayon::prelude::*;

use crate::attack::{MembershipScorer, ScorerScratch};
use crate::error::{Error, Result};
use crate::model::{MaskedPredictor, TrainedModel};
use crate::seed::derive_seed;
use crate::space::{
    enumerate_siblings, make_portion, FeatureVector, Metric, Portion, SiblingSet,
};

use super::report::TieStats;

/// Default challenge budget per side when the supplied sets are larger.
pub const DEFAULT_CHALLENGES: usize = 1000;

/// Result of one attribute-inference attack on one portion.
#[derive(Debug, Clone)]
pub struct AiOutcome {
    /// Candidate indices of the top-score tie set.
    pub flagged: Vec<u64>,
    /// Fractional success weight against the supplied truth: 1/t when the
    /// truth is among t tied top candidates, 0 otherwise.
    pub success_weight: f64,
    pub tie_size: u64,
}

/// Exact and approximate success weights of one challenge for one scorer.
#[derive(Debug, Clone, Copy)]
pub struct AiAaiOutcome {
    pub ai_weight: f64,
    pub aai_weight: f64,
    pub tie_size: u64,
}

struct ScorerState {
    best: f64,
    tie: u64,
    truth_in_tie: bool,
    tie_within_alpha: u64,
    flagged: Vec<u64>,
}

impl ScorerState {
    fn new() -> Self {
        Self {
            best: f64::NEG_INFINITY,
            tie: 0,
            truth_in_tie: false,
            tie_within_alpha: 0,
            flagged: Vec::new(),
        }
    }
}

struct SiblingScan<'a> {
    siblings: &'a SiblingSet,
    truth_index: u64,
    /// truth values at the masked slots, aligned with `unknown_indices`
    truth_masked: Vec<f64>,
}

impl SiblingScan<'_> {
    /// Distance between a candidate assignment and the truth, restricted to
    /// the masked slots (the known features agree by construction).
    fn masked_distance(&self, assignment: &[f64], metric: Metric) -> f64 {
        match metric {
            Metric::Hamming => assignment
                .iter()
                .zip(&self.truth_masked)
                .filter(|(a, t)| a != t)
                .count() as f64,
            Metric::Manhattan => assignment
                .iter()
                .zip(&self.truth_masked)
                .map(|(a, t)| (a - t).abs())
                .sum(),
            Metric::Euclidean => assignment
                .iter()
                .zip(&self.truth_masked)
                .map(|(a, t)| (a - t) * (a - t))
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Whether a candidate counts as an approximate success. At alpha = 0
    /// this degenerates to the exact (same-bin) success rule.
    fn within_alpha(&self, index: u64, assignment: &[f64], alpha: f64, metric: Metric) -> bool {
        if alpha <= 0.0 {
            index == self.truth_index
        } else {
            self.masked_distance(assignment, metric) <= alpha
        }
    }
}

/// Score every sibling of `portion` with each scorer and track the
/// top-score tie sets. One confidence evaluation per sibling is shared by
/// all scorers.
fn scan_siblings(
    model: &TrainedModel,
    scorers: &[&dyn MembershipScorer],
    portion: &Portion,
    bins: usize,
    truth: &FeatureVector,
    alpha: Option<(f64, Metric)>,
    track_flagged: bool,
) -> Result<Vec<(AiAaiOutcome, Vec<u64>)>> {
    let label = portion
        .label()
        .ok_or_else(|| Error::Dataset("portion must carry the true class label".into()))?;
    if label >= model.n_classes() {
        return Err(Error::LabelOutOfRange {
            label,
            classes: model.n_classes(),
        });
    }
    let siblings = enumerate_siblings(portion, bins)?;
    let unknown = portion.unknown_indices();
    let scan = SiblingScan {
        truth_index: siblings.index_of(truth)?,
        truth_masked: unknown.iter().map(|&i| truth.values()[i]).collect(),
        siblings: &siblings,
    };

    let mut predictor = MaskedPredictor::new(model, portion.known_values(), unknown)?;
    let mut ws = ScorerScratch::default();
    let mut states: Vec<ScorerState> = scorers.iter().map(|_| ScorerState::new()).collect();
    let mut digits = vec![0usize; unknown.len()];
    let mut assignment = vec![0.0f64; unknown.len()];
    // materialized candidate for scorers without a confidence fast path
    let needs_full: Vec<bool> = scorers
        .iter()
        .map(|s| {
            s.ai_score_from_confidences(model, &vec![0.5; model.n_classes()], label, &mut ws)
                .is_none()
        })
        .collect();
    let any_full = needs_full.iter().any(|&b| b);

    for index in 0..scan.siblings.cardinality() {
        scan.siblings.assignment(index, &mut digits, &mut assignment);
        let confs = predictor.probabilities(&assignment);
        let full: Option<FeatureVector> = if any_full {
            Some(scan.siblings.candidate(index))
        } else {
            None
        };
        for (si, scorer) in scorers.iter().enumerate() {
            let score = if needs_full[si] {
                scorer.ai_score(model, full.as_ref().unwrap(), label)?
            } else {
                scorer
                    .ai_score_from_confidences(model, confs, label, &mut ws)
                    .expect("fast path vanished mid-scan")
            };
            let state = &mut states[si];
            if score > state.best {
                state.best = score;
                state.tie = 1;
                state.truth_in_tie = index == scan.truth_index;
                state.tie_within_alpha = alpha
                    .map(|(a, metric)| scan.within_alpha(index, &assignment, a, metric) as u64)
                    .unwrap_or(0);
                if track_flagged {
                    state.flagged.clear();
                    state.flagged.push(index);
                }
            } else if score == state.best {
                state.tie += 1;
                state.truth_in_tie |= index == scan.truth_index;
                if let Some((a, metric)) = alpha {
                    state.tie_within_alpha +=
                        scan.within_alpha(index, &assignment, a, metric) as u64;
                }
                if track_flagged {
                    state.flagged.push(index);
                }
            }
        }
        // `confs` borrows the predictor; drop before the next iteration
        let _ = confs;
    }

    Ok(states
        .into_iter()
        .map(|s| {
            let ai_weight = if s.truth_in_tie {
                1.0 / s.tie as f64
            } else {
                0.0
            };
            let aai_weight = s.tie_within_alpha as f64 / s.tie as f64;
            (
                AiAaiOutcome {
                    ai_weight,
                    aai_weight,
                    tie_size: s.tie,
                },
                s.flagged,
            )
        })
        .collect())
}

/// Run one attribute-inference attack: score all siblings of `portion`,
/// return the flagged (top-score) candidate set and the fractional success
/// weight against `truth`.
pub fn ai_attack(
    model: &TrainedModel,
    scorer: &dyn MembershipScorer,
    portion: &Portion,
    bins: usize,
    truth: &FeatureVector,
) -> Result<AiOutcome> {
    let mut results = scan_siblings(model, &[scorer], portion, bins, truth, None, true)?;
    let (outcome, flagged) = results.pop().unwrap();
    Ok(AiOutcome {
        flagged,
        success_weight: outcome.ai_weight,
        tie_size: outcome.tie_size,
    })
}

/// Reconstruction for the reduction wrapper: the lowest-index top-scoring
/// sibling, materialized.
pub(crate) fn reconstruct_best_sibling(
    model: &TrainedModel,
    scorer: &dyn MembershipScorer,
    portion: &Portion,
    bins: usize,
) -> Result<FeatureVector> {
    // scan against an arbitrary reference; only the flagged set is used
    let reference = {
        let siblings = enumerate_siblings(portion, bins)?;
        siblings.candidate(0)
    };
    let mut results = scan_siblings(model, &[scorer], portion, bins, &reference, None, true)?;
    let (_, flagged) = results.pop().unwrap();
    let siblings = enumerate_siblings(portion, bins)?;
    Ok(siblings.candidate(flagged[0]))
}

fn challenge_indices(n: usize, max: usize, seed: u64) -> Vec<usize> {
    if n <= max {
        (0..n).collect()
    } else {
        let mut rng = crate::seed::rng_from_seed(seed);
        rand::seq::index::sample(&mut rng, n, max).into_vec()
    }
}

/// Advantage of one scorer against one member/non-member challenge pair of
/// sets, for both exact and approximate success.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScorerAdvantage {
    pub scorer: String,
    pub ai_advantage: f64,
    pub aai_advantage: f64,
    pub member_ai_rate: f64,
    pub nonmember_ai_rate: f64,
    pub member_aai_rate: f64,
    pub nonmember_aai_rate: f64,
    pub tie_stats: TieStats,
}

use serde::{Deserialize, Serialize};

/// Evaluate several scorers' AI and AAI advantages over the same
/// challenges, sharing one sibling scan per challenge.
///
/// At most `max_challenges` members and non-members are drawn (seeded) from
/// the supplied sets. Challenges evaluate in parallel; results do not
/// depend on the parallelism degree.
#[allow(clippy::too_many_arguments)]
pub fn ai_aai_evaluate(
    model: &TrainedModel,
    scorers: &[&dyn MembershipScorer],
    members: &crate::dataset::LabeledDataset,
    nonmembers: &crate::dataset::LabeledDataset,
    unknown: &[usize],
    bins: usize,
    alpha: f64,
    metric: Metric,
    seed: u64,
    max_challenges: usize,
) -> Result<Vec<ScorerAdvantage>> {
    if members.is_empty() || nonmembers.is_empty() {
        return Err(Error::EmptySet);
    }
    metric.check_domain(model.domain().kind())?;
    let member_idx = challenge_indices(members.len(), max_challenges, derive_seed(seed, "ai-members"));
    let nonmember_idx = challenge_indices(
        nonmembers.len(),
        max_challenges,
        derive_seed(seed, "ai-nonmembers"),
    );

    let run_side = |set: &crate::dataset::LabeledDataset,
                    idx: &[usize]|
     -> Result<Vec<Vec<AiAaiOutcome>>> {
        idx.par_iter()
            .map(|&i| {
                let truth = set.get(i);
                let portion = make_portion(truth, unknown)?;
                let results = scan_siblings(
                    model,
                    scorers,
                    &portion,
                    bins,
                    truth,
                    Some((alpha, metric)),
                    false,
                )?;
                Ok(results.into_iter().map(|(o, _)| o).collect())
            })
            .collect()
    };

    let member_outcomes = run_side(members, &member_idx)?;
    let nonmember_outcomes = run_side(nonmembers, &nonmember_idx)?;

    let mut out = Vec::with_capacity(scorers.len());
    for (si, scorer) in scorers.iter().enumerate() {
        let mut tie_stats = TieStats::default();
        let mut rate = |outcomes: &[Vec<AiAaiOutcome>]| -> (f64, f64) {
            let mut ai = 0.0;
            let mut aai = 0.0;
            for row in outcomes {
                let o = &row[si];
                ai += o.ai_weight;
                aai += o.aai_weight;
                tie_stats.total_challenges += 1;
                if o.tie_size > 1 {
                    tie_stats.tied_challenges += 1;
                }
                tie_stats.max_tie = tie_stats.max_tie.max(o.tie_size);
            }
            let n = outcomes.len() as f64;
            (ai / n, aai / n)
        };
        let (member_ai_rate, member_aai_rate) = rate(&member_outcomes);
        let (nonmember_ai_rate, nonmember_aai_rate) = rate(&nonmember_outcomes);
        out.push(ScorerAdvantage {
            scorer: scorer.name().to_string(),
            ai_advantage: member_ai_rate - nonmember_ai_rate,
            aai_advantage: member_aai_rate - nonmember_aai_rate,
            member_ai_rate,
            nonmember_ai_rate,
            member_aai_rate,
            nonmember_aai_rate,
            tie_stats,
        });
    }
    Ok(out)
}

/// Exact attribute-inference advantage of one scorer: member success rate
/// minus non-member success rate, tie-normalized.
#[allow(clippy::too_many_arguments)]
pub fn ai_advantage(
    model: &TrainedModel,
    scorer: &dyn MembershipScorer,
    members: &crate::dataset::LabeledDataset,
    nonmembers: &crate::dataset::LabeledDataset,
    unknown: &[usize],
    bins: usize,
    seed: u64,
) -> Result<f64> {
    let metric = Metric::default_for(model.domain().kind());
    let report = ai_aai_evaluate(
        model,
        &[scorer],
        members,
        nonmembers,
        unknown,
        bins,
        0.0,
        metric,
        seed,
        DEFAULT_CHALLENGES,
    )?;
    Ok(report[0].ai_advantage)
}

/// Approximate attribute-inference advantage at tolerance `alpha`.
#[allow(clippy::too_many_arguments)]
pub fn aai_advantage(
    model: &TrainedModel,
    scorer: &dyn MembershipScorer,
    members: &crate::dataset::LabeledDataset,
    nonmembers: &crate::dataset::LabeledDataset,
    unknown: &[usize],
    bins: usize,
    alpha: f64,
    metric: Metric,
    seed: u64,
) -> Result<f64> {
    if alpha < 0.0 {
        return Err(Error::InvalidParameter("alpha must be non-negative".into()));
    }
    let report = ai_aai_evaluate(
        model,
        &[scorer],
        members,
        nonmembers,
        unknown,
        bins,
        alpha,
        metric,
        seed,
        DEFAULT_CHALLENGES,
    )?;
    Ok(report[0].aai_advantage)
}
