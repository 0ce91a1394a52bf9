//! The demand raster the placement agent works on.

use serde::{Deserialize, Serialize};

use crate::demand::{GbrtModel, QuantileTransform};
use crate::error::{Error, Result};
use crate::ingest::{
    build_features, haversine_distance, offset_equirectangular, GeoPoint, RegionData,
};

/// Default cell side length in meters.
pub const DEFAULT_CELL_SIZE_M: f64 = 250.0;

/// Square grid of nonnegative per-cell demand, anchored at its NW corner.
/// Cells are indexed row-major: `cell = row * n + col`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandGrid {
    pub n: usize,
    /// Cell side length, meters.
    pub cell_size: f64,
    /// NW corner of the grid.
    pub origin: GeoPoint,
    pub normalized: bool,
    /// Row-major demand values, length `n * n`.
    pub demand: Vec<f64>,
}

impl DemandGrid {
    pub fn new(n: usize, cell_size: f64, origin: GeoPoint, demand: Vec<f64>) -> Result<Self> {
        let grid = Self {
            n,
            cell_size,
            origin,
            normalized: false,
            demand,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("grid side must be >= 1".into()));
        }
        if self.demand.len() != self.n * self.n {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} grid with {} demand values",
                self.n,
                self.n,
                self.demand.len()
            )));
        }
        if !(self.cell_size > 0.0) {
            return Err(Error::InvalidParameter("cell_size must be > 0".into()));
        }
        for (i, v) in self.demand.iter().enumerate() {
            if !v.is_finite() || *v < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "demand[{i}] = {v} must be finite and >= 0"
                )));
            }
            if self.normalized && *v > 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "normalized grid has demand[{i}] = {v} > 1"
                )));
            }
        }
        Ok(())
    }

    pub fn cells(&self) -> usize {
        self.n * self.n
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.demand[row * self.n + col]
    }

    /// Geographic center of cell (row, col), offset from the NW origin.
    pub fn cell_center(&self, row: usize, col: usize) -> GeoPoint {
        offset_equirectangular(
            self.origin,
            (col as f64 + 0.5) * self.cell_size,
            (row as f64 + 0.5) * self.cell_size,
        )
    }

    /// Serialize to the grid JSON format.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let grid: DemandGrid = serde_json::from_str(s)?;
        grid.validate()?;
        Ok(grid)
    }

    /// Plain-text PGM (P2, maxval 255) heatmap; values are
    /// `round(255 * normalized demand)`.
    pub fn to_pgm(&self) -> String {
        let norm;
        let values = if self.normalized {
            &self.demand
        } else {
            norm = minmax_normalize(self).demand;
            &norm
        };
        render_pgm(self.n, values.iter().map(|v| (v * 255.0).round() as u32))
    }
}

pub(crate) fn render_pgm(n: usize, values: impl Iterator<Item = u32>) -> String {
    let mut out = format!("P2\n{n} {n}\n255\n");
    let mut col = 0;
    for v in values {
        out.push_str(&v.to_string());
        col += 1;
        if col == n {
            out.push('\n');
            col = 0;
        } else {
            out.push(' ');
        }
    }
    out
}

/// Min-max normalize to [0, 1]. A constant grid maps to all zeros.
pub fn minmax_normalize(grid: &DemandGrid) -> DemandGrid {
    let min = grid.demand.iter().copied().fold(f64::INFINITY, f64::min);
    let max = grid.demand.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    let demand = if range > 0.0 {
        grid.demand.iter().map(|v| (v - min) / range).collect()
    } else {
        vec![0.0; grid.demand.len()]
    };
    DemandGrid {
        n: grid.n,
        cell_size: grid.cell_size,
        origin: grid.origin,
        normalized: true,
        demand,
    }
}

/// Predict demand for a hypothetical charger at the center of every cell.
///
/// Each cell synthesizes a station with the given port counts, builds its
/// feature vector against the region, applies the model's quantile transform
/// when one was fitted, and clamps negative predictions to zero. The ZIP
/// code for EV density is borrowed from the nearest real station, if any.
pub fn build_demand_grid(
    model: &GbrtModel,
    transform: Option<&QuantileTransform>,
    region: &RegionData,
    n: usize,
    cell_size: f64,
    origin: GeoPoint,
    ports: (u32, u32),
) -> Result<DemandGrid> {
    if n == 0 {
        return Err(Error::InvalidParameter("grid side must be >= 1".into()));
    }
    let grid = DemandGrid {
        n,
        cell_size,
        origin,
        normalized: false,
        demand: vec![0.0; n * n],
    };
    let mut demand = Vec::with_capacity(n * n);
    for row in 0..n {
        for col in 0..n {
            let site = grid.cell_center(row, col);
            let zip = nearest_station_zip(region, site);
            let features = build_features(region, site, zip, ports)?;
            let raw = features.to_vector();
            let pred = match transform {
                Some(t) => model.predict(&t.transform_row(&raw)?)?,
                None => model.predict(&raw)?,
            };
            demand.push(pred.max(0.0));
        }
    }
    Ok(DemandGrid { demand, ..grid })
}

fn nearest_station_zip(region: &RegionData, site: GeoPoint) -> Option<&str> {
    region
        .stations
        .iter()
        .enumerate()
        .map(|(i, s)| (haversine_distance(site, s.location), i))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, i)| region.stations[i].zip.as_str())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn origin() -> GeoPoint {
        GeoPoint::new(42.7, -73.8).unwrap()
    }

    fn grid_from(values: Vec<f64>, n: usize) -> DemandGrid {
        DemandGrid::new(n, 250.0, origin(), values).unwrap()
    }

    #[test]
    fn minmax_matches_hand_example() {
        let g = grid_from(vec![0.0, 10.0, 5.0, 10.0], 2);
        let norm = minmax_normalize(&g);
        assert_eq!(norm.demand, vec![0.0, 1.0, 0.5, 1.0]);
        assert!(norm.normalized);
    }

    #[test]
    fn constant_grid_normalizes_to_zeros() {
        let g = grid_from(vec![7.0; 4], 2);
        assert_eq!(minmax_normalize(&g).demand, vec![0.0; 4]);
    }

    #[test]
    fn random_grid_normalizes_to_full_range() {
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let vals: Vec<f64> = (0..49).map(|_| rng.gen::<f64>() * 100.0).collect();
        let norm = minmax_normalize(&grid_from(vals, 7));
        let min = norm.demand.iter().copied().fold(f64::INFINITY, f64::min);
        let max = norm.demand.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(min, 0.0);
        assert_eq!(max, 1.0);
    }

    #[test]
    fn grid_spans_expected_extent() {
        // 26 cells of 250 m: 6.5 km per side, 676 cells.
        let g = grid_from(vec![0.0; 26 * 26], 26);
        assert_eq!(g.cells(), 676);
        let nw = g.origin;
        let last_center = g.cell_center(25, 25);
        let east = haversine_distance(nw, GeoPoint::new(nw.lat, last_center.lon).unwrap());
        let south = haversine_distance(nw, GeoPoint::new(last_center.lat, nw.lon).unwrap());
        // Last cell center sits 6,375 m (25.5 cells) from the origin edge.
        assert!((east - 6_375.0).abs() < 5.0, "east extent {east}");
        assert!((south - 6_375.0).abs() < 5.0, "south extent {south}");
    }

    #[test]
    fn pgm_renders_normalized_values() {
        let g = minmax_normalize(&grid_from(vec![0.0, 10.0, 5.0, 10.0], 2));
        let pgm = g.to_pgm();
        assert_eq!(pgm, "P2\n2 2\n255\n0 255\n128 255\n");
    }

    #[test]
    fn json_round_trips() {
        let g = grid_from(vec![1.0, 2.0, 3.0, 4.0], 2);
        let back = DemandGrid::from_json(&g.to_json().unwrap()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn rejects_negative_demand() {
        assert!(DemandGrid::new(2, 250.0, origin(), vec![1.0, -0.5, 0.0, 0.0]).is_err());
    }

    #[test]
    fn rejects_wrong_cell_count() {
        assert!(DemandGrid::new(3, 250.0, origin(), vec![0.0; 8]).is_err());
    }
}
