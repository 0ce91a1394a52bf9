//! Rank-based normalization to [0, 1].
//!
//! Maps a value to its empirical-CDF position with linear interpolation
//! between stored reference quantiles. Heavy-tailed inputs (energy use,
//! traffic counts) come out uniformly spread, which is what the demand
//! model is trained on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fitted quantile transform for a set of feature dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileTransform {
    /// Per-dimension non-decreasing reference values.
    references: Vec<Vec<f64>>,
    pub n_quantiles: usize,
}

impl QuantileTransform {
    /// Fit one transform per dimension.
    ///
    /// `n_quantiles` is capped at the smallest dimension's sample count.
    /// Each dimension needs at least 2 values.
    pub fn fit(values_per_dim: &[Vec<f64>], n_quantiles: usize) -> Result<Self> {
        if values_per_dim.is_empty() {
            return Err(Error::EmptyInput("quantile dimensions"));
        }
        if n_quantiles < 2 {
            return Err(Error::InvalidParameter(
                "n_quantiles must be >= 2".to_string(),
            ));
        }
        let min_len = values_per_dim.iter().map(Vec::len).min().unwrap();
        if min_len < 2 {
            return Err(Error::InvalidParameter(
                "quantile fit needs at least 2 values per dimension".to_string(),
            ));
        }
        let nq = n_quantiles.min(min_len);
        let references = values_per_dim
            .iter()
            .map(|vals| {
                let mut sorted = vals.clone();
                sorted.sort_by(f64::total_cmp);
                empirical_quantiles(&sorted, nq)
            })
            .collect();
        Ok(Self {
            references,
            n_quantiles: nq,
        })
    }

    pub fn dims(&self) -> usize {
        self.references.len()
    }

    /// Reference values for one dimension.
    pub fn references(&self, dim: usize) -> &[f64] {
        &self.references[dim]
    }

    /// Empirical-CDF value of `x` in [0, 1] for dimension `dim`.
    ///
    /// At or below the minimum maps to 0, at or above the maximum to 1.
    /// Inside a run of tied reference values the midpoint rank is returned,
    /// which keeps the map monotone.
    pub fn transform(&self, x: f64, dim: usize) -> f64 {
        let refs = &self.references[dim];
        let n = refs.len();
        let pos = |i: usize| i as f64 / (n - 1) as f64;
        if x <= refs[0] {
            return 0.0;
        }
        if x >= refs[n - 1] {
            return 1.0;
        }
        // First index with refs[i] >= x and first with refs[i] > x.
        let lo = refs.partition_point(|r| *r < x);
        let hi = refs.partition_point(|r| *r <= x);
        if lo < hi {
            // Exact hit on refs[lo..hi].
            (pos(lo) + pos(hi - 1)) / 2.0
        } else {
            let (x0, x1) = (refs[lo - 1], refs[lo]);
            pos(lo - 1) + (x - x0) / (x1 - x0) * (pos(lo) - pos(lo - 1))
        }
    }

    /// Transform a full feature vector; dimensions must match the fit.
    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.dims() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} dims, got {}",
                self.dims(),
                row.len()
            )));
        }
        Ok(row
            .iter()
            .enumerate()
            .map(|(d, x)| self.transform(*x, d))
            .collect())
    }
}

/// Linear-interpolation quantiles of sorted data at `nq` evenly spaced levels.
fn empirical_quantiles(sorted: &[f64], nq: usize) -> Vec<f64> {
    let n = sorted.len();
    if nq == n {
        return sorted.to_vec();
    }
    (0..nq)
        .map(|i| {
            let t = i as f64 / (nq - 1) as f64 * (n - 1) as f64;
            let lo = t.floor() as usize;
            let hi = t.ceil() as usize;
            if lo == hi {
                sorted[lo]
            } else {
                let frac = t - lo as f64;
                sorted[lo] + frac * (sorted[hi] - sorted[lo])
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fit1(vals: &[f64]) -> QuantileTransform {
        QuantileTransform::fit(&[vals.to_vec()], 1000).unwrap()
    }

    #[test]
    fn sorted_input_is_stored_as_is() {
        let t = fit1(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(t.references(0), &[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(t.n_quantiles, 5);
    }

    #[test]
    fn unsorted_input_is_sorted() {
        let t = fit1(&[5.0, 1.0, 3.0]);
        assert_eq!(t.references(0), &[1.0, 3.0, 5.0]);
    }

    #[test]
    fn endpoints_map_to_zero_and_one() {
        let t = fit1(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(t.transform(1.0, 0), 0.0);
        assert_eq!(t.transform(5.0, 0), 1.0);
        assert_eq!(t.transform(0.0, 0), 0.0);
        assert_eq!(t.transform(9.0, 0), 1.0);
    }

    #[test]
    fn median_maps_to_half() {
        let t = fit1(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(t.transform(3.0, 0), 0.5);
    }

    #[test]
    fn interpolates_between_ranks() {
        let t = fit1(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(t.transform(2.5, 0), 0.375);
    }

    #[test]
    fn uniform_sample_median_lands_near_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let vals: Vec<f64> = (0..1000).map(|_| rng.gen::<f64>()).collect();
        let t = QuantileTransform::fit(&[vals.clone()], 1000).unwrap();
        let mut sorted = vals;
        sorted.sort_by(f64::total_cmp);
        let median = (sorted[499] + sorted[500]) / 2.0;
        let u = t.transform(median, 0);
        assert!((0.45..=0.55).contains(&u), "median mapped to {u}");
    }

    #[test]
    fn fewer_than_two_values_is_an_error() {
        assert!(QuantileTransform::fit(&[vec![1.0]], 10).is_err());
    }

    #[test]
    fn subsampled_quantiles_keep_endpoints() {
        let vals: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let t = QuantileTransform::fit(&[vals], 11).unwrap();
        assert_eq!(t.n_quantiles, 11);
        assert_eq!(t.references(0).first(), Some(&0.0));
        assert_eq!(t.references(0).last(), Some(&99.0));
        assert_eq!(t.transform(0.0, 0), 0.0);
        assert_eq!(t.transform(99.0, 0), 1.0);
    }

    #[test]
    fn tied_references_use_midpoint_rank() {
        let t = fit1(&[1.0, 2.0, 2.0, 2.0, 3.0]);
        // Run of 2.0 spans ranks 0.25..0.75; midpoint 0.5.
        assert_eq!(t.transform(2.0, 0), 0.5);
        // Still monotone around the run.
        assert!(t.transform(1.9, 0) < 0.5);
        assert!(t.transform(2.1, 0) > 0.5);
    }
}
