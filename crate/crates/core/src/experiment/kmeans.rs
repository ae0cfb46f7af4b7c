//! Lloyd's k-means with seeded random-point initialization, used to derive
//! class labels for unlabeled tabular data.

use rand::seq::index;

use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Cluster `data` into `k` groups and return one label per row.
///
/// Initial centroids are `k` distinct rows chosen by the seed; assignment
/// ties break to the lowest centroid index; an emptied cluster is reseeded
/// to the point farthest from its assigned centroid. `iters = 0` returns
/// the assignment under the initial centroids.
pub fn kmeans_labels(data: &[Vec<f64>], k: usize, iters: usize, seed: u64) -> Result<Vec<usize>> {
    let n = data.len();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "k of {k} invalid for {n} rows"
        )));
    }
    if k == 1 {
        return Ok(vec![0; n]);
    }
    let dim = data[0].len();
    if data.iter().any(|row| row.len() != dim) {
        return Err(Error::Dataset("ragged rows in clustering input".into()));
    }

    let mut rng = rng_from_seed(seed);
    let mut centroids: Vec<Vec<f64>> = index::sample(&mut rng, n, k)
        .into_iter()
        .map(|i| data[i].clone())
        .collect();

    let assign = |centroids: &[Vec<f64>]| -> (Vec<usize>, f64) {
        let mut labels = vec![0usize; n];
        let mut objective = 0.0;
        for (i, row) in data.iter().enumerate() {
            let mut best = f64::INFINITY;
            let mut best_c = 0;
            for (c, centroid) in centroids.iter().enumerate() {
                let d = squared_euclidean(row, centroid);
                if d < best {
                    best = d;
                    best_c = c;
                }
            }
            labels[i] = best_c;
            objective += best;
        }
        (labels, objective)
    };

    let (mut labels, mut objective) = assign(&centroids);
    for _ in 0..iters {
        // update step
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (row, &label) in data.iter().zip(&labels) {
            counts[label] += 1;
            for (s, v) in sums[label].iter_mut().zip(row) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for s in sums[c].iter_mut() {
                    *s /= counts[c] as f64;
                }
                centroids[c] = sums[c].clone();
            } else {
                // reseed an empty cluster to the point farthest from its centroid
                let far = (0..n)
                    .max_by(|&a, &b| {
                        squared_euclidean(&data[a], &centroids[labels[a]])
                            .total_cmp(&squared_euclidean(&data[b], &centroids[labels[b]]))
                    })
                    .unwrap();
                centroids[c] = data[far].clone();
            }
        }
        let (new_labels, new_objective) = assign(&centroids);
        let converged = new_labels == labels;
        labels = new_labels;
        objective = new_objective;
        if converged {
            break;
        }
    }
    let _ = objective;
    Ok(labels)
}
