//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! Criteria mixing analytic checks, oracle equivalences and seeded
//! qualitative-trend fixtures. Every tolerance is pinned here.

use std::time::Instant;

use inferaudit::attack::{
    default_attack_config, fit_shadow_attack, train_shadows, ConfMi, LossMi, MembershipScorer,
};
use inferaudit::dataset::{synth_dataset, LabeledDataset, SynthKind};
use inferaudit::experiment::{
    ai_aai_evaluate, auc, decision_region_volumes, distance_stratified_auc, mrmr_select,
    overfitting_sweep, synthesize_nonmembers_binary, AttackSelection, DistanceGrouping,
    SweepConfig,
};
use inferaudit::model::{
    generalization_error, train_mlp, Activation, MlpConfig, TrainedModel,
};
use inferaudit::seed::rng_from_seed;
use inferaudit::separation::{sample_spread_codewords, theorem1_experiment};
use inferaudit::space::{
    distance, expected_random_guess_distance, enumerate_siblings_capped, make_portion,
    radius_for_unknowns, FeatureDomain, FeatureVector, Metric,
};
use rand::seq::SliceRandom;
use rand::Rng;

fn criterion(id: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {id:2} {}: {name} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {id} failed: {name} ({detail})");
}

/// The shared overfit fixture: binary clusters wide enough that a
/// 64-unit MLP memorizes its 2000 training records while test accuracy
/// stays low.
fn overfit_fixture() -> (TrainedModel, LabeledDataset, LabeledDataset, LabeledDataset) {
    let ds = synth_dataset(SynthKind::BinaryClusters, 600, 8000, 20, 0.45, 1001).unwrap();
    let (trainplus, pool) = ds.split_sizes(4000, 4000, 2).unwrap();
    let (train, test) = trainplus.split_sizes(2000, 2000, 3).unwrap();
    let cfg = MlpConfig {
        hidden_layers: vec![64],
        epochs: 40,
        batch_size: 32,
        ..Default::default()
    };
    let (model, _) = train_mlp(&train, 20, &cfg).unwrap();
    (model, train, test, pool)
}

#[test]
fn criterion_01_separation_of_membership_from_strong_membership() {
    let t0 = Instant::now();
    let code = sample_spread_codewords(64, 1000, 1, 4, Metric::Hamming, 11).unwrap();
    let outcome = theorem1_experiment(&code, 100, 20_000, 11).unwrap();
    let elapsed = t0.elapsed().as_secs_f64();
    let sigma = (0.25f64 / 20_000.0).sqrt();
    let mi_ok = outcome.mi_advantage >= 0.375 - 3.0 * sigma;
    let smi_ok = outcome.smi_advantage.abs() <= 3.0 * sigma;
    let time_ok = elapsed < 30.0;
    criterion(
        1,
        "membership advantage without strong-membership advantage",
        mi_ok && smi_ok && time_ok,
        &format!(
            "mi={:+.4} (floor {:.4}), smi={:+.4} (band {:.4}), {elapsed:.1}s",
            outcome.mi_advantage,
            0.375 - 3.0 * sigma,
            outcome.smi_advantage,
            3.0 * sigma
        ),
    );
}

/// Scores whose threshold advantage is gamma at every interior threshold:
/// an atom of mass gamma at the top (members) / bottom (non-members), the
/// rest a shared uniform grid.
fn constant_advantage_scores(gamma: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let atoms = (gamma * n as f64).round() as usize;
    let grid: Vec<f64> = (0..n - atoms)
        .map(|i| (i + 1) as f64 / (n - atoms + 1) as f64)
        .collect();
    let mut members = grid.clone();
    members.extend(std::iter::repeat(1.0).take(atoms));
    let mut nonmembers = grid;
    nonmembers.extend(std::iter::repeat(0.0).take(atoms));
    (members, nonmembers)
}

#[test]
fn criterion_02_auc_equals_half_plus_advantage() {
    let n = 10_000usize;
    let mut detail = String::new();
    let mut all_ok = true;
    for gamma in [0.1f64, 0.3, 0.5] {
        let (members, nonmembers) = constant_advantage_scores(gamma, n);
        // the construction really does have constant advantage gamma at
        // every interior threshold
        for tau in [0.1, 0.25, 0.5, 0.75, 0.9] {
            let tpr = members.iter().filter(|&&s| s >= tau).count() as f64 / n as f64;
            let fpr = nonmembers.iter().filter(|&&s| s >= tau).count() as f64 / n as f64;
            assert!(
                ((tpr - fpr) - gamma).abs() < 2.0 / n as f64,
                "construction broke at tau={tau}: {}",
                tpr - fpr
            );
        }
        let measured = auc(&members, &nonmembers).unwrap();
        let ok = (measured - (0.5 + gamma)).abs() <= 0.01;
        all_ok &= ok;
        detail.push_str(&format!(
            "gamma={gamma}: auc={measured:.4} target={:.2}+-0.01{}; ",
            0.5 + gamma,
            if ok { "" } else { " MISSED" }
        ));
    }
    // Note: a proper ROC satisfies TPR <= min(1, FPR + gamma) when the
    // advantage never exceeds gamma, capping the AUC at
    // 0.5 + gamma - gamma^2/2. The targets above are therefore structurally
    // out of reach once gamma^2/2 > 0.01 (gamma > ~0.14); the measured
    // values sit exactly at that cap.
    criterion(
        2,
        "constant-advantage scorer AUC is half plus the advantage",
        all_ok,
        detail.trim_end_matches("; "),
    );
}

#[test]
fn criterion_03_random_guess_distance_monte_carlo() {
    let mut rng = rng_from_seed(33);
    let samples = 1_000_000usize;

    let mut manhattan_total = 0.0;
    for _ in 0..samples {
        let mut d = 0.0;
        for _ in 0..5 {
            let a: f64 = rng.random_range(-1.0..=1.0);
            let b: f64 = rng.random_range(-1.0..=1.0);
            d += (a - b).abs();
        }
        manhattan_total += d;
    }
    let manhattan_mean = manhattan_total / samples as f64;
    let manhattan_target = expected_random_guess_distance(Metric::Manhattan, 5).unwrap();

    let mut hamming_total = 0u64;
    for _ in 0..samples {
        for _ in 0..15 {
            if rng.random_range(0..2) != rng.random_range(0..2) {
                hamming_total += 1;
            }
        }
    }
    let hamming_mean = hamming_total as f64 / samples as f64;
    let hamming_target = expected_random_guess_distance(Metric::Hamming, 15).unwrap();

    let m_ok = (manhattan_mean - manhattan_target).abs() / manhattan_target < 0.01;
    let h_ok = (hamming_mean - hamming_target).abs() / hamming_target < 0.01;
    criterion(
        3,
        "expected random-guess distances",
        m_ok && h_ok,
        &format!(
            "manhattan(5)={manhattan_mean:.4} vs {manhattan_target:.4}, hamming(15)={hamming_mean:.4} vs {hamming_target}"
        ),
    );
}

#[test]
fn criterion_04_sibling_containment_radii() {
    let m = 30usize;
    let binary = FeatureDomain::binary(m).unwrap();
    let continuous = FeatureDomain::continuous(m).unwrap();
    let mut rng = rng_from_seed(44);
    let mut violations = 0u64;
    let mut cases = 0u64;
    let mut spot_checks = 0u64;

    for case in 0..10_000usize {
        let unknowns = rng.random_range(1..=15usize);
        let mut indices: Vec<usize> = (0..m).collect();
        indices.shuffle(&mut rng);
        let s = &indices[..unknowns];
        let is_binary = case % 2 == 0;

        let (x, bins) = if is_binary {
            let values: Vec<f64> = (0..m).map(|_| rng.random_range(0..2) as f64).collect();
            (FeatureVector::new(binary, values, None).unwrap(), 2usize)
        } else {
            let values: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..=1.0)).collect();
            // largest bin count keeping the enumeration cheap
            let bins = (2..=10usize)
                .rev()
                .find(|b| (*b as f64).powi(unknowns as i32) <= 4096.0)
                .unwrap_or(2);
            (FeatureVector::new(continuous, values, None).unwrap(), bins)
        };
        let portion = make_portion(&x, s).unwrap();
        let siblings = enumerate_siblings_capped(&portion, bins, 1 << 16).unwrap();
        let metrics: &[Metric] = if is_binary {
            &[Metric::Hamming]
        } else {
            &[Metric::Manhattan, Metric::Euclidean]
        };
        let truth_masked: Vec<f64> = s.iter().map(|&i| x.values()[i]).collect();
        let mut digits = vec![0usize; unknowns];
        let mut assignment = vec![0.0f64; unknowns];
        for index in 0..siblings.cardinality() {
            siblings.assignment(index, &mut digits, &mut assignment);
            for &metric in metrics {
                // siblings agree with x outside S, so the full distance is
                // the distance restricted to the masked slots
                let d = match metric {
                    Metric::Hamming => assignment
                        .iter()
                        .zip(&truth_masked)
                        .filter(|(a, t)| a != t)
                        .count() as f64,
                    Metric::Manhattan => assignment
                        .iter()
                        .zip(&truth_masked)
                        .map(|(a, t)| (a - t).abs())
                        .sum(),
                    Metric::Euclidean => assignment
                        .iter()
                        .zip(&truth_masked)
                        .map(|(a, t)| (a - t) * (a - t))
                        .sum::<f64>()
                        .sqrt(),
                };
                if d > radius_for_unknowns(metric, unknowns).unwrap() {
                    violations += 1;
                }
                cases += 1;
            }
        }
        // spot-check a few candidates through the full distance operation
        if case % 200 == 0 {
            let sib = siblings.candidate(rng.random_range(0..siblings.cardinality()));
            for &metric in metrics {
                let d = distance(&x, &sib, metric).unwrap();
                assert!(d <= radius_for_unknowns(metric, unknowns).unwrap());
                spot_checks += 1;
            }
        }
    }
    criterion(
        4,
        "every sibling lies within the containment radius",
        violations == 0,
        &format!("{cases} sibling-metric checks, {spot_checks} full-distance spot checks, {violations} violations"),
    );
}

#[test]
fn criterion_05_strong_membership_auc_rises_with_distance() {
    let t0 = Instant::now();
    let (model, train, test, _) = overfit_fixture();
    let gap = generalization_error(&model, &train, &test).unwrap();
    assert!(
        gap.accuracy_gap >= 0.2,
        "fixture must be overfit, gap {}",
        gap.accuracy_gap
    );

    let members = train.sample(1000, 77);
    let bases = members.sample(200, 78);
    let nominal: Vec<usize> = vec![1, 2, 3, 150, 200, 250, 300, 350, 400, 450, 500, 550];
    let mut candidates: Vec<FeatureVector> = Vec::new();
    for (i, base) in bases.iter().enumerate() {
        for (j, &d) in nominal.iter().enumerate() {
            // far distance groups can die to the nearest-neighbor label
            // rule; skip those bases rather than fail
            if let Ok(list) =
                synthesize_nonmembers_binary(base, &train, &[d], 2, 9000 + (i * 32 + j) as u64)
            {
                candidates.extend(list.into_iter().map(|s| s.vector));
            }
        }
    }
    let strat = distance_stratified_auc(
        &model,
        &members,
        &train,
        &candidates,
        &ConfMi,
        Metric::Hamming,
        DistanceGrouping::Unit,
    )
    .unwrap();
    let near = strat.auc_in_key_range(1, 2).unwrap();
    let max_key = strat.max_key().unwrap();
    let decile_floor = (max_key as f64 * 0.9).ceil() as u32;
    let far = strat.auc_in_key_range(decile_floor, max_key).unwrap();
    let elapsed = t0.elapsed().as_secs_f64();

    let near_ok = (0.45..=0.62).contains(&near);
    let far_ok = far >= near + 0.10;
    let time_ok = elapsed < 300.0;
    criterion(
        5,
        "near-dataset AUC at chance, far AUC clearly above",
        near_ok && far_ok && time_ok,
        &format!(
            "gap={:.3}, auc(1..2)={near:.3}, auc({decile_floor}..{max_key})={far:.3}, {elapsed:.0}s",
            gap.accuracy_gap
        ),
    );
}

#[test]
fn criterion_06_exact_attribute_inference_fails_approximate_succeeds() {
    let (model, train, test, pool) = overfit_fixture();
    let full = {
        // the mRMR ranking is computed over the entire dataset
        synth_dataset(SynthKind::BinaryClusters, 600, 8000, 20, 0.45, 1001).unwrap()
    };
    let unknown = mrmr_select(&full, 15, 2).unwrap();
    let alpha = expected_random_guess_distance(Metric::Hamming, unknown.len()).unwrap();
    assert_eq!(alpha, 7.5);

    let target_cfg = MlpConfig {
        hidden_layers: vec![64],
        epochs: 40,
        batch_size: 32,
        ..Default::default()
    };
    let records = train_shadows(&pool, 4, &target_cfg, 17).unwrap();
    let shadow = fit_shadow_attack(&records, &default_attack_config(), false, 17).unwrap();
    let scorers: Vec<&dyn MembershipScorer> = vec![&ConfMi, &LossMi, &shadow];
    let results = ai_aai_evaluate(
        &model,
        &scorers,
        &train,
        &test,
        &unknown,
        2,
        alpha,
        Metric::Hamming,
        99,
        500,
    )
    .unwrap();

    let mut detail = String::new();
    let mut ai_ok = true;
    let mut gained = 0;
    for r in &results {
        ai_ok &= r.ai_advantage.abs() <= 0.03;
        if r.aai_advantage >= r.ai_advantage + 0.02 {
            gained += 1;
        }
        detail.push_str(&format!(
            "{}: ai={:+.4} aai={:+.4}; ",
            r.scorer, r.ai_advantage, r.aai_advantage
        ));
    }
    criterion(
        6,
        "exact attribute inference negligible, approximate clearly better",
        ai_ok && gained >= 2,
        &format!("{} ({gained}/3 attacks gained >= 0.02)", detail.trim_end_matches("; ")),
    );
}

#[test]
fn criterion_07_overfitting_drives_approximate_attribute_inference() {
    let ds = synth_dataset(SynthKind::BinaryClusters, 600, 12_000, 20, 0.45, 1001).unwrap();
    let unknown = mrmr_select(&ds, 15, 2).unwrap();
    let cfg = SweepConfig {
        model: MlpConfig {
            hidden_layers: vec![64],
            epochs: 40,
            batch_size: 32,
            ..Default::default()
        },
        attack: AttackSelection::Shadow,
        n_shadows: 4,
        shadow_pool: 4000,
        test_ratio: 1.0,
        challenges: 250,
        bins: 2,
    };
    let rows = overfitting_sweep(&ds, &[500, 1000, 2000, 4000], &cfg, &unknown, 7.5, 42).unwrap();

    let gaps: Vec<f64> = rows.iter().map(|r| r.generalization_error).collect();
    let aai: Vec<f64> = rows.iter().map(|r| r.aai_advantage).collect();
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    let rho = spearman(&gaps, &aai);
    let detail: Vec<String> = rows
        .iter()
        .map(|r| format!("n={}: gap={:.3} aai={:+.3}", r.size, r.generalization_error, r.aai_advantage))
        .collect();
    criterion(
        7,
        "generalization error falls with size and tracks approximate attribute inference",
        decreasing && rho > 0.0,
        &format!("{}; spearman={rho:.2}", detail.join(", ")),
    );
}

fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut out = vec![0.0; v.len()];
        for (rank, &i) in idx.iter().enumerate() {
            out[i] = rank as f64;
        }
        out
    }
    let ra = ranks(a);
    let rb = ranks(b);
    let n = a.len() as f64;
    let d2: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - y) * (x - y)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

#[test]
fn criterion_08_oracle_equivalences() {
    let mut rng = rng_from_seed(88);

    // AUC against brute-force pair counting
    let mut auc_exact = 0;
    for _ in 0..200 {
        let n = rng.random_range(1..=100usize);
        let m = rng.random_range(1..=100usize);
        let members: Vec<f64> = (0..n)
            .map(|_| rng.random_range(-20i32..20) as f64 / 4.0)
            .collect();
        let nonmembers: Vec<f64> = (0..m)
            .map(|_| rng.random_range(-20i32..20) as f64 / 4.0)
            .collect();
        let mut wins = 0u64;
        let mut ties = 0u64;
        for &a in &members {
            for &b in &nonmembers {
                if a > b {
                    wins += 1;
                } else if a == b {
                    ties += 1;
                }
            }
        }
        let oracle = (2 * wins + ties) as f64 / (2 * (n as u64) * (m as u64)) as f64;
        if auc(&members, &nonmembers).unwrap() == oracle {
            auc_exact += 1;
        }
    }

    // distance_to_set against an exhaustive scan
    let domain = FeatureDomain::binary(24).unwrap();
    let mut dist_exact = 0;
    for _ in 0..200 {
        let n = rng.random_range(1..=40usize);
        let records: Vec<FeatureVector> = (0..n)
            .map(|_| {
                let bits: Vec<f64> = (0..24).map(|_| rng.random_range(0..2) as f64).collect();
                FeatureVector::new(domain, bits, Some(0)).unwrap()
            })
            .collect();
        let set = LabeledDataset::new(domain, 1, records.clone()).unwrap();
        let bits: Vec<f64> = (0..24).map(|_| rng.random_range(0..2) as f64).collect();
        let x = FeatureVector::new(domain, bits, None).unwrap();
        let mut best = f64::INFINITY;
        let mut best_i = 0;
        for (i, r) in records.iter().enumerate() {
            let d = r
                .values()
                .iter()
                .zip(x.values())
                .filter(|(a, b)| a != b)
                .count() as f64;
            if d < best {
                best = d;
                best_i = i;
            }
        }
        if inferaudit::space::distance_to_set(&x, &set, Metric::Hamming).unwrap()
            == (best, best_i)
        {
            dist_exact += 1;
        }
    }

    // mRMR first pick against exhaustive maximum mutual information
    let mut mrmr_exact = 0;
    for fixture in 0..50 {
        let m = 12usize;
        let n = 150usize;
        let domain = FeatureDomain::binary(m).unwrap();
        let informative = rng.random_range(0..m);
        let noise_rate = rng.random_range(0.05..0.35);
        let records: Vec<FeatureVector> = (0..n)
            .map(|_| {
                let label = rng.random_range(0..2usize);
                let bits: Vec<f64> = (0..m)
                    .map(|j| {
                        if j == informative {
                            if rng.random::<f64>() < noise_rate {
                                1.0 - label as f64
                            } else {
                                label as f64
                            }
                        } else {
                            rng.random_range(0..2) as f64
                        }
                    })
                    .collect();
                FeatureVector::new(domain, bits, Some(label)).unwrap()
            })
            .collect();
        let data = LabeledDataset::new(domain, 2, records.clone()).unwrap();
        // oracle: histogram mutual information per feature, argmax with
        // lowest index on ties
        let mut best_j = 0;
        let mut best_mi = f64::NEG_INFINITY;
        for j in 0..m {
            let mut joint = [[0.0f64; 2]; 2];
            for r in &records {
                joint[r.values()[j] as usize][r.label().unwrap()] += 1.0;
            }
            let total: f64 = n as f64;
            let mut mi = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    let pxy = joint[a][b] / total;
                    if pxy > 0.0 {
                        let px = (joint[a][0] + joint[a][1]) / total;
                        let py = (joint[0][b] + joint[1][b]) / total;
                        mi += pxy * (pxy / (px * py)).ln();
                    }
                }
            }
            if mi > best_mi {
                best_mi = mi;
                best_j = j;
            }
        }
        let picked = mrmr_select(&data, 1, 2).unwrap();
        if picked[0] == best_j {
            mrmr_exact += 1;
        } else {
            eprintln!("fixture {fixture}: picked {} oracle {best_j}", picked[0]);
        }
    }

    criterion(
        8,
        "auc, nearest-distance and mRMR agree with their oracles",
        auc_exact == 200 && dist_exact == 200 && mrmr_exact == 50,
        &format!("auc {auc_exact}/200, distance {dist_exact}/200, mrmr {mrmr_exact}/50"),
    );
}

#[test]
fn criterion_09_gradients_and_region_volumes_are_sound() {
    let mut rng = rng_from_seed(99);
    let mut max_rel = 0.0f64;
    for _ in 0..20 {
        let inputs = rng.random_range(2..=6usize);
        let classes = rng.random_range(2..=4usize);
        let hidden: Vec<usize> = (0..rng.random_range(1..=2usize))
            .map(|_| rng.random_range(3..=8usize))
            .collect();
        let domain = FeatureDomain::continuous(inputs).unwrap();
        let mut dims = vec![inputs];
        dims.extend(&hidden);
        dims.push(classes);
        let n_params: usize = dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        let params: Vec<f64> = (0..n_params).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let mut model = TrainedModel::from_parts(
            domain,
            classes,
            &hidden,
            Activation::Tanh,
            &params,
            0.0,
        )
        .unwrap();
        let n_samples = rng.random_range(8..=15usize);
        let records: Vec<FeatureVector> = (0..n_samples)
            .map(|i| {
                let values: Vec<f64> =
                    (0..inputs).map(|_| rng.random_range(-1.0..=1.0)).collect();
                FeatureVector::new(domain, values, Some(i % classes)).unwrap()
            })
            .collect();
        let data = LabeledDataset::new(domain, classes, records).unwrap();

        let analytic = model.loss_gradients(&data).unwrap();
        // central finite differences on the mean loss
        let step = 1e-4;
        let base = model.parameters();
        for j in 0..base.len() {
            let mut p = base.clone();
            p[j] = base[j] + step;
            model.set_parameters(&p).unwrap();
            let up = model.mean_loss(&data).unwrap();
            p[j] = base[j] - step;
            model.set_parameters(&p).unwrap();
            let down = model.mean_loss(&data).unwrap();
            model.set_parameters(&base).unwrap();
            let numeric = (up - down) / (2.0 * step);
            let rel = (analytic[j] - numeric).abs() / analytic[j].abs().max(numeric.abs()).max(1e-6);
            max_rel = max_rel.max(rel);
        }
    }

    // decision-region volumes sum to exactly one on every run
    let mut sums_exact = true;
    for seed in [1u64, 2, 3] {
        let ds = synth_dataset(SynthKind::BinaryClusters, 24, 120, 3, 0.3, seed).unwrap();
        let (model, _) = train_mlp(
            &ds,
            3,
            &MlpConfig {
                hidden_layers: vec![8],
                epochs: 15,
                ..Default::default()
            }
            .with_seed(seed),
        )
        .unwrap();
        let profile = decision_region_volumes(&model, 100_000, seed).unwrap();
        let total: f64 = profile.volumes().iter().sum();
        sums_exact &= total == 1.0;
        sums_exact &= profile.counts().iter().sum::<u64>() == 100_000;
    }

    criterion(
        9,
        "backprop matches finite differences; region volumes sum to one",
        max_rel <= 1e-3 && sums_exact,
        &format!("max relative gradient error {max_rel:.2e}, volume sums exact: {sums_exact}"),
    );
}

#[test]
fn criterion_10_cli_runs_are_byte_deterministic() {
    let bin = env!("CARGO_BIN_EXE_inferaudit");
    let dir = tempfile::tempdir().unwrap();
    let mut all_ok = true;
    let mut detail = String::new();

    let runs: Vec<(&str, Vec<String>)> = vec![
        (
            "mi",
            vec![
                "mi".into(),
                "--synth".into(),
                "40,600,4,0.3".into(),
                "--hidden".into(),
                "16".into(),
                "--epochs".into(),
                "30".into(),
                "--trials".into(),
                "300".into(),
                "--members".into(),
                "100".into(),
                "--nonmembers".into(),
                "100".into(),
                "--seed".into(),
                "9".into(),
            ],
        ),
        (
            "theorem1",
            vec![
                "theorem1".into(),
                "--m".into(),
                "64".into(),
                "--n-codewords".into(),
                "200".into(),
                "--r".into(),
                "1".into(),
                "--k".into(),
                "4".into(),
                "--n-train".into(),
                "40".into(),
                "--trials".into(),
                "4000".into(),
                "--seed".into(),
                "9".into(),
            ],
        ),
        (
            "dr",
            vec![
                "dr".into(),
                "--synth".into(),
                "30,400,3,0.3".into(),
                "--hidden".into(),
                "8".into(),
                "--epochs".into(),
                "10".into(),
                "--region-samples".into(),
                "50000".into(),
                "--seed".into(),
                "9".into(),
            ],
        ),
    ];
    for (name, args) in &runs {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let out_path = dir.path().join(format!("{name}-{rep}.json"));
            let mut cmd = std::process::Command::new(bin);
            cmd.args(args).arg("--out").arg(&out_path);
            let status = cmd.status().expect("spawn CLI");
            assert!(status.success(), "{name} run {rep} failed");
            outputs.push(std::fs::read(&out_path).unwrap());
        }
        let same = outputs[0] == outputs[1];
        all_ok &= same;
        detail.push_str(&format!("{name}: {}; ", if same { "identical" } else { "DIFFERS" }));
    }
    criterion(
        10,
        "identical config and seed reproduce report bytes",
        all_ok,
        detail.trim_end_matches("; "),
    );
}
