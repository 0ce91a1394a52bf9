//! Gradient-boosted regression trees for demand prediction.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::demand::tree::{RegressionTree, TreeParams};
use crate::demand::FeatureMatrix;
use crate::error::{Error, Result};

/// Training hyperparameters. Defaults are the tuned values the demand model
/// ships with (non-integer tuned depth floored to 14).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbrtHyperparams {
    pub learning_rate: f64,
    pub n_estimators: usize,
    /// Fraction of feature dimensions sampled as split candidates, (0, 1].
    pub max_features: f64,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub seed: u64,
}

impl Default for GbrtHyperparams {
    fn default() -> Self {
        Self {
            learning_rate: 0.038,
            n_estimators: 6_873,
            max_features: 0.894,
            max_depth: 14,
            min_samples_split: 30,
            min_samples_leaf: 1,
            seed: 0,
        }
    }
}

impl GbrtHyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "learning_rate {} must be > 0",
                self.learning_rate
            )));
        }
        if !(self.max_features > 0.0 && self.max_features <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "max_features {} must be in (0, 1]",
                self.max_features
            )));
        }
        if self.max_depth < 1 {
            return Err(Error::InvalidParameter("max_depth must be >= 1".into()));
        }
        if self.min_samples_leaf < 1 {
            return Err(Error::InvalidParameter(
                "min_samples_leaf must be >= 1".into(),
            ));
        }
        Ok(())
    }

    fn tree_params(&self, n_features: usize) -> TreeParams {
        let m = (self.max_features * n_features as f64).ceil() as usize;
        TreeParams {
            max_depth: self.max_depth,
            min_samples_split: self.min_samples_split.max(2),
            min_samples_leaf: self.min_samples_leaf,
            n_candidate_features: m.clamp(1, n_features),
        }
    }
}

/// Additive ensemble: initial mean plus learning-rate-weighted trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbrtModel {
    pub init_value: f64,
    pub learning_rate: f64,
    pub n_features: usize,
    pub trees: Vec<RegressionTree>,
    /// Split-gain totals per feature, normalized to sum to 1 (all zero when
    /// no split was ever made).
    pub importances: Vec<f64>,
}

impl GbrtModel {
    /// Predict with only the first `stages` trees.
    pub fn predict_with_stages(&self, x: &[f64], stages: usize) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch(format!(
                "model expects {} features, got {}",
                self.n_features,
                x.len()
            )));
        }
        let stages = stages.min(self.trees.len());
        let boost: f64 = self.trees[..stages].iter().map(|t| t.predict(x)).sum();
        Ok(self.init_value + self.learning_rate * boost)
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        self.predict_with_stages(x, self.trees.len())
    }
}

/// Train an ensemble on `targets`.
///
/// Stage `k` fits a depth-limited least-squares tree to the residuals of the
/// first `k - 1` stages, sampling candidate features per split from a
/// generator seeded with `hp.seed`.
pub fn gbrt_train(
    features: &FeatureMatrix,
    targets: &[f64],
    hp: &GbrtHyperparams,
) -> Result<GbrtModel> {
    hp.validate()?;
    let n = features.rows();
    if n == 0 || targets.is_empty() {
        return Err(Error::EmptyInput("training data"));
    }
    if n != targets.len() {
        return Err(Error::DimensionMismatch(format!(
            "{n} feature rows vs {} targets",
            targets.len()
        )));
    }
    if n < 2 {
        return Err(Error::InvalidParameter(
            "training needs at least 2 rows".into(),
        ));
    }

    let d = features.cols();
    let init_value = targets.iter().sum::<f64>() / n as f64;
    let mut preds = vec![init_value; n];
    let mut residuals = vec![0.0; n];
    let mut trees = Vec::with_capacity(hp.n_estimators);
    let mut gains = vec![0.0; d];
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let params = hp.tree_params(d);

    for _ in 0..hp.n_estimators {
        for i in 0..n {
            residuals[i] = targets[i] - preds[i];
        }
        let tree = RegressionTree::fit(features, &residuals, params, &mut rng, &mut gains);
        for i in 0..n {
            preds[i] += hp.learning_rate * tree.predict(features.row(i));
        }
        trees.push(tree);
    }

    let total_gain: f64 = gains.iter().sum();
    let importances = if total_gain > 0.0 {
        gains.iter().map(|g| g / total_gain).collect()
    } else {
        vec![0.0; d]
    };

    Ok(GbrtModel {
        init_value,
        learning_rate: hp.learning_rate,
        n_features: d,
        trees,
        importances,
    })
}

/// Convenience wrapper matching the operation name.
pub fn gbrt_predict(model: &GbrtModel, x: &[f64]) -> Result<f64> {
    model.predict(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hp(n_estimators: usize, learning_rate: f64, max_depth: usize) -> GbrtHyperparams {
        GbrtHyperparams {
            learning_rate,
            n_estimators,
            max_features: 1.0,
            max_depth,
            min_samples_split: 2,
            min_samples_leaf: 1,
            seed: 0,
        }
    }

    #[test]
    fn zero_estimators_predict_the_target_mean() {
        let data = FeatureMatrix::from_vec(3, 1, vec![0.0, 1.0, 2.0]).unwrap();
        let m = gbrt_train(&data, &[3.0, 6.0, 9.0], &hp(0, 0.1, 3)).unwrap();
        assert_eq!(m.predict(&[0.0]).unwrap(), 6.0);
        assert_eq!(m.predict(&[100.0]).unwrap(), 6.0);
        assert_eq!(m.importances, vec![0.0]);
    }

    #[test]
    fn single_stump_with_unit_rate_fits_two_points() {
        let data = FeatureMatrix::from_vec(2, 1, vec![0.0, 1.0]).unwrap();
        let m = gbrt_train(&data, &[0.0, 1.0], &hp(1, 1.0, 1)).unwrap();
        // init 0.5, stump residuals -0.5 / +0.5
        assert_eq!(m.predict(&[0.0]).unwrap(), 0.0);
        assert_eq!(m.predict(&[1.0]).unwrap(), 1.0);
    }

    #[test]
    fn half_rate_moves_halfway() {
        let data = FeatureMatrix::from_vec(2, 1, vec![0.0, 1.0]).unwrap();
        let m = gbrt_train(&data, &[0.0, 1.0], &hp(1, 0.5, 1)).unwrap();
        assert_eq!(m.predict(&[0.0]).unwrap(), 0.25);
        assert_eq!(m.predict(&[1.0]).unwrap(), 0.75);
    }

    #[test]
    fn constant_targets_predict_that_constant() {
        let data = FeatureMatrix::from_vec(4, 2, vec![1.0; 8]).unwrap();
        let m = gbrt_train(&data, &[5.0; 4], &hp(10, 0.5, 3)).unwrap();
        assert_eq!(m.predict(&[0.0, 9.0]).unwrap(), 5.0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let data = FeatureMatrix::from_vec(2, 2, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let m = gbrt_train(&data, &[0.0, 1.0], &hp(1, 1.0, 1)).unwrap();
        assert!(m.predict(&[1.0]).is_err());
    }

    #[test]
    fn empty_data_is_an_error() {
        let data = FeatureMatrix::from_vec(0, 1, vec![]).unwrap();
        assert!(gbrt_train(&data, &[], &hp(1, 1.0, 1)).is_err());
    }

    #[test]
    fn importances_are_normalized_and_concentrated_on_the_signal() {
        // Feature 0 carries the signal, feature 1 is constant noise.
        let n = 40;
        let mut cells = Vec::with_capacity(n * 2);
        let mut targets = Vec::with_capacity(n);
        for i in 0..n {
            let x = i as f64 / n as f64;
            cells.push(x);
            cells.push(0.5);
            targets.push(2.0 * x);
        }
        let data = FeatureMatrix::from_vec(n, 2, cells).unwrap();
        let m = gbrt_train(&data, &targets, &hp(20, 0.5, 3)).unwrap();
        let total: f64 = m.importances.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(m.importances[0] > 0.99);
    }
}
