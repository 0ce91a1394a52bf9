//! Model scoring: R-squared and k-fold cross-validation.

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::demand::{gbrt_train, FeatureMatrix, GbrtHyperparams};
use crate::error::{Error, Result};

/// Coefficient of determination, `1 - SS_res / SS_tot`.
pub fn r_squared(pred: &[f64], actual: &[f64]) -> Result<f64> {
    if pred.is_empty() || actual.is_empty() {
        return Err(Error::EmptyInput("r_squared inputs"));
    }
    if pred.len() != actual.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predictions vs {} actuals",
            pred.len(),
            actual.len()
        )));
    }
    let mean = actual.iter().sum::<f64>() / actual.len() as f64;
    let ss_tot: f64 = actual.iter().map(|a| (a - mean) * (a - mean)).sum();
    if ss_tot == 0.0 {
        return Err(Error::ConstantTarget);
    }
    let ss_res: f64 = pred
        .iter()
        .zip(actual)
        .map(|(p, a)| (a - p) * (a - p))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Shuffle `n` row indices with the given seed and cut them into `k`
/// contiguous folds. The first `n % k` folds get one extra row.
pub fn kfold_partition(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidParameter("k must be >= 2".into()));
    }
    if k > n {
        return Err(Error::InvalidParameter(format!(
            "k = {k} exceeds row count {n}"
        )));
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);

    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for fold in 0..k {
        let len = base + usize::from(fold < extra);
        folds.push(indices[start..start + len].to_vec());
        start += len;
    }
    Ok(folds)
}

/// Cross-validation scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub k: usize,
    pub seed: u64,
    pub scores: Vec<f64>,
    pub mean: f64,
}

/// Seeded k-fold cross-validation: train on k-1 folds, score R-squared on
/// the held-out fold. Deterministic for a fixed seed.
pub fn kfold_cv(
    features: &FeatureMatrix,
    targets: &[f64],
    hp: &GbrtHyperparams,
    k: usize,
    seed: u64,
) -> Result<CvReport> {
    let n = features.rows();
    if n != targets.len() {
        return Err(Error::DimensionMismatch(format!(
            "{n} feature rows vs {} targets",
            targets.len()
        )));
    }
    let folds = kfold_partition(n, k, seed)?;
    let mut scores = Vec::with_capacity(k);
    for held_out in &folds {
        let mut train_rows: Vec<usize> = Vec::with_capacity(n - held_out.len());
        for fold in &folds {
            if !std::ptr::eq(fold, held_out) {
                train_rows.extend_from_slice(fold);
            }
        }
        let train_features = features.select_rows(&train_rows);
        let train_targets: Vec<f64> = train_rows.iter().map(|&r| targets[r]).collect();
        let model = gbrt_train(&train_features, &train_targets, hp)?;

        let mut pred = Vec::with_capacity(held_out.len());
        let mut actual = Vec::with_capacity(held_out.len());
        for &r in held_out {
            pred.push(model.predict(features.row(r))?);
            actual.push(targets[r]);
        }
        scores.push(r_squared(&pred, &actual)?);
    }
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    Ok(CvReport {
        k,
        seed,
        scores,
        mean,
    })
}
