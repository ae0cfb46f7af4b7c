//! Constructive separation of membership inference from strong membership
//! inference, and the reduction that turns an attribute-inference adversary
//! into a strong membership inference adversary.
//!
//! The construction samples binary codewords pairwise further than 3r
//! apart, pairs each with one r-neighbor, and defines a ball classifier
//! over a training sample of that support. A label-agreement adversary then
//! infers membership almost perfectly while strong membership inference
//! stays at chance: every r-neighbor of a member gets the member's label by
//! construction.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::TrainedModel;
use crate::seed::{derive_seed, rng_from_seed};
use crate::space::{make_portion, FeatureVector, Metric, Portion};

/// Compact binary word with xor/popcount Hamming distance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryWord {
    bits: Vec<u64>,
    len: usize,
}

impl BinaryWord {
    pub fn random(m: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut bits = vec![0u64; m.div_ceil(64)];
        for (i, w) in bits.iter_mut().enumerate() {
            *w = rng.random::<u64>();
            let used = (m - i * 64).min(64);
            if used < 64 {
                *w &= (1u64 << used) - 1;
            }
        }
        Self { bits, len: m }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn hamming(&self, other: &Self) -> u32 {
        self.bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| (a ^ b).count_ones())
            .sum()
    }

    pub fn flip(&mut self, index: usize) {
        self.bits[index / 64] ^= 1u64 << (index % 64);
    }

    pub fn to_feature_vector(&self, label: Option<usize>) -> Result<FeatureVector> {
        let domain = crate::space::FeatureDomain::binary(self.len)?;
        let values: Vec<f64> = (0..self.len)
            .map(|i| ((self.bits[i / 64] >> (i % 64)) & 1) as f64)
            .collect();
        FeatureVector::new(domain, values, label)
    }
}

/// Codewords pairwise further than 3r apart, each paired with one
/// r-neighbor and a class label shared by the pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpreadCode {
    pub m: usize,
    pub r: usize,
    pub k: usize,
    codewords: Vec<BinaryWord>,
    partners: Vec<BinaryWord>,
    labels: Vec<usize>,
}

impl SpreadCode {
    pub fn n_codewords(&self) -> usize {
        self.codewords.len()
    }

    /// Support size |S| = 2N.
    pub fn support_size(&self) -> usize {
        2 * self.codewords.len()
    }

    /// Element `i` of the support: codewords first, then partners.
    pub fn element(&self, i: usize) -> &BinaryWord {
        let n = self.codewords.len();
        if i < n {
            &self.codewords[i]
        } else {
            &self.partners[i - n]
        }
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i % self.codewords.len()]
    }

    /// The unique r-neighbor of support element `i`.
    pub fn partner_of(&self, i: usize) -> usize {
        let n = self.codewords.len();
        if i < n {
            i + n
        } else {
            i - n
        }
    }

    pub fn codewords(&self) -> &[BinaryWord] {
        &self.codewords
    }

    pub fn partners(&self) -> &[BinaryWord] {
        &self.partners
    }

    /// Exhaustively verify the construction invariants: pairwise codeword
    /// distance above 3r, partners within r, and exactly one r-neighbor in
    /// the support for every element.
    pub fn verify(&self) -> Result<()> {
        let n = self.codewords.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let d = self.codewords[i].hamming(&self.codewords[j]);
                if d as usize <= 3 * self.r {
                    return Err(Error::InfeasibleCode(format!(
                        "codewords {i},{j} at distance {d} <= 3r"
                    )));
                }
            }
        }
        for (i, (c, p)) in self.codewords.iter().zip(&self.partners).enumerate() {
            let d = c.hamming(p);
            if d == 0 || d as usize > self.r {
                return Err(Error::InfeasibleCode(format!(
                    "partner {i} at distance {d}, want 1..={}",
                    self.r
                )));
            }
        }
        let total = self.support_size();
        for i in 0..total {
            let mut neighbors = 0;
            for j in 0..total {
                if i != j && self.element(i).hamming(self.element(j)) as usize <= self.r {
                    neighbors += 1;
                }
            }
            if neighbors != 1 {
                return Err(Error::InfeasibleCode(format!(
                    "support element {i} has {neighbors} r-neighbors, want exactly 1"
                )));
            }
        }
        Ok(())
    }
}

/// Number of codewords the Gilbert-Varshamov argument guarantees for
/// minimum distance > `d` on m-bit words, in log2.
fn gilbert_varshamov_log2_bound(m: usize, d: usize) -> f64 {
    // log2( 2^m / sum_{i=0}^{d} C(m, i) )
    let mut ball_log2 = f64::NEG_INFINITY;
    let mut log2_binom = 0.0f64; // log2 C(m, 0)
    for i in 0..=d.min(m) {
        if i > 0 {
            log2_binom += ((m - i + 1) as f64).log2() - (i as f64).log2();
        }
        // log2(a + b) with running maximum
        if ball_log2 == f64::NEG_INFINITY {
            ball_log2 = log2_binom;
        } else {
            let hi = ball_log2.max(log2_binom);
            ball_log2 = hi + ((ball_log2 - hi).exp2() + (log2_binom - hi).exp2()).log2();
        }
    }
    m as f64 - ball_log2
}

/// Sample `n_codewords` binary codewords pairwise further than 3r apart by
/// rejection, pair each with a uniform r-neighbor, and label pairs
/// uniformly over `k` classes.
pub fn sample_spread_codewords(
    m: usize,
    n_codewords: usize,
    r: usize,
    k: usize,
    metric: Metric,
    seed: u64,
) -> Result<SpreadCode> {
    sample_spread_codewords_with_budget(m, n_codewords, r, k, metric, seed, 100 * n_codewords)
}

pub fn sample_spread_codewords_with_budget(
    m: usize,
    n_codewords: usize,
    r: usize,
    k: usize,
    metric: Metric,
    seed: u64,
    attempt_budget: usize,
) -> Result<SpreadCode> {
    if metric != Metric::Hamming {
        return Err(Error::MetricDomainMismatch {
            metric: metric.to_string(),
            domain: "spread-code construction".into(),
        });
    }
    if m == 0 || n_codewords == 0 || r == 0 || k < 2 {
        return Err(Error::InvalidParameter(
            "need m >= 1, N >= 1, r >= 1, k >= 2".into(),
        ));
    }
    if n_codewords >= 2 && 3 * r >= m {
        return Err(Error::InfeasibleCode(format!(
            "3r = {} reaches the diameter of {{0,1}}^{m}",
            3 * r
        )));
    }
    let guaranteed_log2 = gilbert_varshamov_log2_bound(m, 3 * r);
    if (n_codewords as f64).log2() > guaranteed_log2 {
        return Err(Error::InfeasibleCode(format!(
            "{n_codewords} codewords exceed the guaranteed 2^{guaranteed_log2:.1}"
        )));
    }

    let mut rng = rng_from_seed(seed);
    let mut codewords: Vec<BinaryWord> = Vec::with_capacity(n_codewords);
    let mut attempts = 0usize;
    while codewords.len() < n_codewords {
        if attempts >= attempt_budget {
            return Err(Error::SamplingExhausted(format!(
                "{} of {n_codewords} codewords after {attempts} attempts",
                codewords.len()
            )));
        }
        attempts += 1;
        let candidate = BinaryWord::random(m, &mut rng);
        if codewords
            .iter()
            .all(|c| c.hamming(&candidate) as usize > 3 * r)
        {
            codewords.push(candidate);
        }
    }

    // uniform draw from the punctured r-ball: pick the flip count by ball
    // shell weights, then the coordinates
    let mut shell_sizes = Vec::with_capacity(r);
    let mut binom = 1.0f64;
    for i in 1..=r {
        binom = binom * (m - i + 1) as f64 / i as f64;
        shell_sizes.push(binom);
    }
    let total_shell: f64 = shell_sizes.iter().sum();
    let mut partners = Vec::with_capacity(n_codewords);
    for c in &codewords {
        let mut pick = rng.random_range(0.0..total_shell);
        let mut flips = r;
        for (i, &s) in shell_sizes.iter().enumerate() {
            if pick < s {
                flips = i + 1;
                break;
            }
            pick -= s;
        }
        let mut partner = c.clone();
        for index in rand::seq::index::sample(&mut rng, m, flips) {
            partner.flip(index);
        }
        partners.push(partner);
    }
    let labels = (0..n_codewords).map(|_| rng.random_range(0..k)).collect();
    Ok(SpreadCode {
        m,
        r,
        k,
        codewords,
        partners,
        labels,
    })
}

/// Nearest-ball lookup classifier over a training sample of the support:
/// queries within r of a training point get that point's label, everything
/// else falls back to class 0.
#[derive(Debug, Clone)]
pub struct BallClassifier<'c> {
    code: &'c SpreadCode,
    /// Training multiset X as indices into the support.
    train_indices: Vec<usize>,
    fallback: usize,
}

impl BallClassifier<'_> {
    pub fn train_indices(&self) -> &[usize] {
        &self.train_indices
    }

    pub fn classify(&self, x: &BinaryWord) -> usize {
        for &i in &self.train_indices {
            if self.code.element(i).hamming(x) as usize <= self.code.r {
                return self.code.label(i);
            }
        }
        self.fallback
    }
}

/// Draw X as `n` i.i.d. uniform support elements and build the ball
/// classifier around them.
pub fn build_ball_classifier(code: &SpreadCode, n: usize, seed: u64) -> Result<BallClassifier<'_>> {
    if n == 0 || n > code.support_size() {
        return Err(Error::InvalidParameter(format!(
            "training size {n} invalid for support of {}",
            code.support_size()
        )));
    }
    let mut rng = rng_from_seed(seed);
    let train_indices = (0..n)
        .map(|_| rng.random_range(0..code.support_size()))
        .collect();
    Ok(BallClassifier {
        code,
        train_indices,
        fallback: 0,
    })
}

/// Empirical advantages of the label-agreement adversary in the membership
/// and strong-membership experiments over the same classifier.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SeparationOutcome {
    pub mi_advantage: f64,
    pub smi_advantage: f64,
    pub trials: usize,
}

/// Run both experiments with the adversary that answers "member" exactly
/// when the classifier reproduces the true label.
pub fn theorem1_experiment(
    code: &SpreadCode,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<SeparationOutcome> {
    if trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    let classifier = build_ball_classifier(code, n, derive_seed(seed, "ball-train"))?;
    let agree = |i: usize| classifier.classify(code.element(i)) == code.label(i);

    let mut rng = rng_from_seed(derive_seed(seed, "separation-trials"));
    let mut mi = [[0u64; 2]; 2]; // [branch][decision]
    let mut smi = [[0u64; 2]; 2];
    for _ in 0..trials {
        // membership: member branch draws from X, the other from the support
        let member_branch = rng.random::<bool>();
        let i = if member_branch {
            classifier.train_indices[rng.random_range(0..classifier.train_indices.len())]
        } else {
            rng.random_range(0..code.support_size())
        };
        mi[member_branch as usize][agree(i) as usize] += 1;

        // strong membership: challenge is a member or its designated r-neighbor
        let member_branch = rng.random::<bool>();
        let x0 = classifier.train_indices[rng.random_range(0..classifier.train_indices.len())];
        let i = if member_branch {
            x0
        } else {
            code.partner_of(x0)
        };
        smi[member_branch as usize][agree(i) as usize] += 1;
    }
    let advantage = |table: [[u64; 2]; 2]| {
        let tpr = table[1][1] as f64 / (table[1][0] + table[1][1]).max(1) as f64;
        let fpr = table[0][1] as f64 / (table[0][0] + table[0][1]).max(1) as f64;
        tpr - fpr
    };
    Ok(SeparationOutcome {
        mi_advantage: advantage(mi),
        smi_advantage: advantage(smi),
        trials,
    })
}

/// An attribute-inference adversary: completes a portion to a full vector.
pub trait AiAdversary: Sync {
    fn reconstruct(&self, model: &TrainedModel, portion: &Portion) -> Result<FeatureVector>;
}

/// Any membership scorer acts as an AI adversary by flagging its
/// top-scoring sibling (lowest index on ties).
pub struct ScorerAiAdversary<'a> {
    pub scorer: &'a dyn crate::attack::MembershipScorer,
    pub bins: usize,
}

impl AiAdversary for ScorerAiAdversary<'_> {
    fn reconstruct(&self, model: &TrainedModel, portion: &Portion) -> Result<FeatureVector> {
        crate::experiment::reconstruct_best_sibling(model, self.scorer, portion, self.bins)
    }
}

/// The strong-membership adversary built from an attribute-inference
/// adversary: mask one uniformly random feature, ask the adversary to
/// reconstruct, and answer "member" exactly on a full reconstruction match.
pub struct ReducedSmiAdversary<'a, A: AiAdversary> {
    adversary: &'a A,
    model: &'a TrainedModel,
    rng: ChaCha8Rng,
}

/// Wrap an AI adversary as a strong-membership decision rule.
pub fn smi_from_ai_reduction<'a, A: AiAdversary>(
    ai_adversary: &'a A,
    model: &'a TrainedModel,
    seed: u64,
) -> ReducedSmiAdversary<'a, A> {
    ReducedSmiAdversary {
        adversary: ai_adversary,
        model,
        rng: rng_from_seed(derive_seed(seed, "smi-reduction")),
    }
}

impl<A: AiAdversary> ReducedSmiAdversary<'_, A> {
    /// Decide membership of one challenge vector (with its true label).
    pub fn decide(&mut self, x: &FeatureVector) -> Result<bool> {
        let index = self.rng.random_range(0..x.len());
        let portion = make_portion(x, &[index])?;
        let reconstruction = self.adversary.reconstruct(self.model, &portion)?;
        Ok(reconstruction.values() == x.values())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::MembershipScorer;
    use crate::dataset::{synth_dataset, SynthKind};
    use crate::model::{train_mlp, MlpConfig};
    use crate::space::enumerate_siblings;

    #[test]
    fn spread_code_verifies_exhaustively() {
        let code = sample_spread_codewords(64, 120, 1, 4, Metric::Hamming, 181).unwrap();
        code.verify().unwrap();
        for i in 0..code.n_codewords() {
            for j in (i + 1)..code.n_codewords() {
                assert!(code.codewords()[i].hamming(&code.codewords()[j]) >= 4);
            }
        }
    }

    #[test]
    fn single_codeword_is_trivially_valid() {
        let code = sample_spread_codewords(16, 1, 2, 3, Metric::Hamming, 183).unwrap();
        code.verify().unwrap();
    }

    #[test]
    fn infeasible_radius_is_rejected() {
        assert!(matches!(
            sample_spread_codewords(9, 2, 3, 2, Metric::Hamming, 1),
            Err(Error::InfeasibleCode(_))
        ));
    }

    #[test]
    fn ball_classifier_labels_members_and_their_neighbors() {
        let code = sample_spread_codewords(48, 40, 1, 4, Metric::Hamming, 185).unwrap();
        let classifier = build_ball_classifier(&code, 20, 3).unwrap();
        for &i in classifier.train_indices() {
            assert_eq!(classifier.classify(code.element(i)), code.label(i));
            let neighbor = code.element(code.partner_of(i));
            assert_eq!(classifier.classify(neighbor), code.label(i));
        }
    }

    #[test]
    fn uncovered_queries_fall_back_to_class_zero() {
        let code = sample_spread_codewords(48, 40, 1, 4, Metric::Hamming, 187).unwrap();
        // train on only the first support element; a far codeword with a
        // nonzero label must hit the fallback
        let classifier = BallClassifier {
            code: &code,
            train_indices: vec![0],
            fallback: 0,
        };
        let far = (1..code.n_codewords())
            .find(|&i| code.label(i) != 0)
            .expect("some codeword has a nonzero label");
        assert_eq!(classifier.classify(code.element(far)), 0);
    }

    #[test]
    fn separation_shows_mi_without_smi() {
        let code = sample_spread_codewords(64, 400, 1, 4, Metric::Hamming, 189).unwrap();
        let outcome = theorem1_experiment(&code, 60, 6000, 7).unwrap();
        let sigma = (0.5f64 / (6000.0 / 2.0)).sqrt();
        assert!(
            outcome.mi_advantage >= 0.375 - 3.0 * sigma,
            "mi advantage {}",
            outcome.mi_advantage
        );
        assert!(
            outcome.smi_advantage.abs() <= 3.0 * sigma,
            "smi advantage {}",
            outcome.smi_advantage
        );
    }

    #[test]
    fn two_class_bound_holds() {
        let code = sample_spread_codewords(64, 300, 1, 2, Metric::Hamming, 191).unwrap();
        let outcome = theorem1_experiment(&code, 40, 6000, 9).unwrap();
        let sigma = (0.5f64 / 3000.0).sqrt();
        assert!(outcome.mi_advantage >= 0.25 - 3.0 * sigma);
    }

    /// AI adversary that fills every masked slot with zero.
    struct ZeroFiller;

    impl AiAdversary for ZeroFiller {
        fn reconstruct(&self, _model: &TrainedModel, portion: &Portion) -> Result<FeatureVector> {
            FeatureVector::new(
                portion.domain(),
                portion.known_values().to_vec(),
                portion.label(),
            )
        }
    }

    #[test]
    fn reduction_only_accepts_exact_reconstructions() {
        let ds = synth_dataset(SynthKind::BinaryClusters, 12, 40, 2, 0.4, 193).unwrap();
        let (model, _) = train_mlp(
            &ds,
            2,
            &MlpConfig {
                hidden_layers: vec![4],
                epochs: 10,
                ..Default::default()
            },
        )
        .unwrap();
        let mut reduced = smi_from_ai_reduction(&ZeroFiller, &model, 5);
        for rec in ds.iter().take(30) {
            let decision = reduced.decide(rec).unwrap();
            // ZeroFiller reconstructs correctly only when the masked bit was 0
            if decision {
                // decision=true requires the reconstruction to equal rec, so
                // rec must contain at least one zero that was the masked slot
                assert!(rec.values().iter().any(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn reduction_matches_hand_simulation_on_all_three_bit_vectors() {
        // tiny binary model; a conf scorer adversary over m=3, one masked bit
        let ds = synth_dataset(SynthKind::BinaryClusters, 3, 8, 2, 0.5, 195).unwrap();
        let (model, _) = train_mlp(
            &ds,
            2,
            &MlpConfig {
                hidden_layers: vec![4],
                epochs: 20,
                ..Default::default()
            },
        )
        .unwrap();
        let scorer = crate::attack::ConfMi;
        let adversary = ScorerAiAdversary {
            scorer: &scorer,
            bins: 2,
        };
        let domain = crate::space::FeatureDomain::binary(3).unwrap();
        for pattern in 0..8u8 {
            let values: Vec<f64> = (0..3).map(|b| ((pattern >> b) & 1) as f64).collect();
            let x = FeatureVector::new(domain, values, Some(0)).unwrap();
            let mut reduced = smi_from_ai_reduction(&adversary, &model, 1000 + pattern as u64);
            // replicate the adversary's masked index choice with the same rng
            let mut rng = rng_from_seed(derive_seed(1000 + pattern as u64, "smi-reduction"));
            let index = rng.random_range(0..3usize);
            let decision = reduced.decide(&x).unwrap();

            // hand simulation: enumerate both completions, pick the highest
            // max-confidence (lowest index on ties), compare to x
            let portion = make_portion(&x, &[index]).unwrap();
            let sibs = enumerate_siblings(&portion, 2).unwrap();
            let mut best_idx = 0u64;
            let mut best = f64::NEG_INFINITY;
            for (i, sib) in sibs.iter().enumerate() {
                let score = scorer.ai_score(&model, &sib, 0).unwrap();
                if score > best {
                    best = score;
                    best_idx = i as u64;
                }
            }
            let expected = sibs.candidate(best_idx).values() == x.values();
            assert_eq!(decision, expected, "pattern {pattern:03b} masked {index}");
        }
    }
}
