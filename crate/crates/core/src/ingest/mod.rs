//! Region data and station feature construction.
//!
//! Parses the five region CSV inputs and builds, for each real or
//! hypothetical charging station, the 18-dimensional feature vector
//! (traffic density, EV density, nearby stations, port counts, and
//! 13 POI-category frequencies) plus the disaggregated energy target.

mod csv_io;
mod geo;

pub use csv_io::{
    load_region, read_ev_registrations, read_feature_rows, read_pois, read_roads,
    read_stations, read_zip_energy, write_feature_rows,
};
pub use geo::{haversine_distance, offset_equirectangular, GeoPoint, EARTH_RADIUS_M};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Radius for POI frequency counting, meters.
pub const POI_RADIUS_M: f64 = 500.0;
/// Radius for the nearby-station count, meters.
pub const STATION_RADIUS_M: f64 = 1_000.0;
/// Number of nearest roads averaged into the traffic-density feature.
pub const NEAREST_ROADS: usize = 3;

/// The 13 POI categories counted around a station.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoiCategory {
    FoodBeverage,
    Sustenance,
    OutdoorSport,
    Entertainment,
    Financial,
    Education,
    Healthcare,
    Tourism,
    Leisure,
    PublicBuilding,
    GeneralShop,
    Transportation,
    Worship,
}

pub const POI_CATEGORY_COUNT: usize = 13;

impl PoiCategory {
    pub const ALL: [PoiCategory; POI_CATEGORY_COUNT] = [
        PoiCategory::FoodBeverage,
        PoiCategory::Sustenance,
        PoiCategory::OutdoorSport,
        PoiCategory::Entertainment,
        PoiCategory::Financial,
        PoiCategory::Education,
        PoiCategory::Healthcare,
        PoiCategory::Tourism,
        PoiCategory::Leisure,
        PoiCategory::PublicBuilding,
        PoiCategory::GeneralShop,
        PoiCategory::Transportation,
        PoiCategory::Worship,
    ];

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|c| *c == self).unwrap()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PoiCategory::FoodBeverage => "food_beverage",
            PoiCategory::Sustenance => "sustenance",
            PoiCategory::OutdoorSport => "outdoor_sport",
            PoiCategory::Entertainment => "entertainment",
            PoiCategory::Financial => "financial",
            PoiCategory::Education => "education",
            PoiCategory::Healthcare => "healthcare",
            PoiCategory::Tourism => "tourism",
            PoiCategory::Leisure => "leisure",
            PoiCategory::PublicBuilding => "public_building",
            PoiCategory::GeneralShop => "general_shop",
            PoiCategory::Transportation => "transportation",
            PoiCategory::Worship => "worship",
        }
    }
}

impl FromStr for PoiCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown POI category `{s}`")))
    }
}

impl fmt::Display for PoiCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An existing charging station.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Station {
    pub id: String,
    pub location: GeoPoint,
    pub zip: String,
    pub level2_ports: u32,
    pub dcfc_ports: u32,
}

/// A road represented by a single point with its annual average daily traffic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Road {
    pub id: u64,
    pub location: GeoPoint,
    pub aadt: f64,
}

/// A point of interest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Poi {
    pub id: String,
    pub location: GeoPoint,
    pub category: PoiCategory,
}

/// Everything the feature builder needs about a region.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RegionData {
    pub stations: Vec<Station>,
    pub roads: Vec<Road>,
    pub pois: Vec<Poi>,
    /// ZIP code -> registered EV count.
    pub ev_registrations: BTreeMap<String, u64>,
    /// ZIP code -> total monthly charging energy, kWh.
    pub zip_energy: BTreeMap<String, f64>,
}

/// Number of input dimensions in a feature vector.
pub const FEATURE_DIM: usize = 5 + POI_CATEGORY_COUNT;

/// Column names for the 18 features, in vector order.
pub const FEATURE_NAMES: [&str; FEATURE_DIM] = [
    "t_s", "v_s", "n_s", "p_c", "p_d", "i_1", "i_2", "i_3", "i_4", "i_5", "i_6", "i_7",
    "i_8", "i_9", "i_10", "i_11", "i_12", "i_13",
];

/// The feature vector for one (real or hypothetical) station.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationFeatures {
    /// Average AADT of the 3 nearest roads.
    pub t_s: f64,
    /// EV registrations in the station's ZIP code.
    pub v_s: f64,
    /// Stations strictly within 1 km (a station at the exact site is excluded).
    pub n_s: f64,
    /// Level 2 port count.
    pub p_c: f64,
    /// DCFC port count.
    pub p_d: f64,
    /// POI counts strictly within 500 m, indexed by category.
    pub poi_counts: [f64; POI_CATEGORY_COUNT],
    /// Monthly energy target, kWh. Absent for hypothetical stations.
    pub target_kwh: Option<f64>,
}

impl StationFeatures {
    /// The 18 inputs in `FEATURE_NAMES` order.
    pub fn to_vector(&self) -> [f64; FEATURE_DIM] {
        let mut v = [0.0; FEATURE_DIM];
        v[0] = self.t_s;
        v[1] = self.v_s;
        v[2] = self.n_s;
        v[3] = self.p_c;
        v[4] = self.p_d;
        v[5..].copy_from_slice(&self.poi_counts);
        v
    }
}

/// Build the feature vector for a station at `site`.
///
/// `zip` is the ZIP code the site belongs to (`None` leaves EV density at 0);
/// `ports` is the (Level 2, DCFC) port pair of the station being scored.
pub fn build_features(
    region: &RegionData,
    site: GeoPoint,
    zip: Option<&str>,
    ports: (u32, u32),
) -> Result<StationFeatures> {
    if region.roads.len() < NEAREST_ROADS {
        return Err(Error::InsufficientRoads(region.roads.len()));
    }

    // Average AADT of the 3 nearest roads; ties broken by road id ascending.
    let mut by_distance: Vec<(f64, u64, f64)> = region
        .roads
        .iter()
        .map(|r| (haversine_distance(site, r.location), r.id, r.aadt))
        .collect();
    by_distance.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let t_s = by_distance[..NEAREST_ROADS]
        .iter()
        .map(|(_, _, aadt)| aadt)
        .sum::<f64>()
        / NEAREST_ROADS as f64;

    let v_s = match zip {
        Some(z) => match region.ev_registrations.get(z) {
            Some(count) => *count as f64,
            None => {
                log::warn!("ZIP {z} missing from EV registrations; using 0");
                0.0
            }
        },
        None => 0.0,
    };

    // Stations strictly within 1 km, excluding any station at the exact site.
    let n_s = region
        .stations
        .iter()
        .filter(|s| s.location != site)
        .filter(|s| haversine_distance(site, s.location) < STATION_RADIUS_M)
        .count() as f64;

    let mut poi_counts = [0.0; POI_CATEGORY_COUNT];
    for poi in &region.pois {
        if haversine_distance(site, poi.location) < POI_RADIUS_M {
            poi_counts[poi.category.index()] += 1.0;
        }
    }

    Ok(StationFeatures {
        t_s,
        v_s,
        n_s,
        p_c: f64::from(ports.0),
        p_d: f64::from(ports.1),
        poi_counts,
        target_kwh: None,
    })
}

/// How a ZIP code's total energy is split among its chargers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyMode {
    /// Shares of the AADT sum; per-station shares add up to the total.
    Proportional,
    /// AADT divided by the mean AADT; shares add up to n times the total.
    PaperLiteral,
}

impl Default for EnergyMode {
    fn default() -> Self {
        EnergyMode::Proportional
    }
}

impl FromStr for EnergyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proportional" => Ok(EnergyMode::Proportional),
            "paper-literal" => Ok(EnergyMode::PaperLiteral),
            other => Err(Error::InvalidParameter(format!(
                "unknown energy mode `{other}` (expected proportional|paper-literal)"
            ))),
        }
    }
}

/// Split a ZIP code's total monthly energy across its chargers by traffic.
pub fn disaggregate_energy(e_total: f64, aadts: &[f64], mode: EnergyMode) -> Result<Vec<f64>> {
    if aadts.is_empty() {
        return Err(Error::EmptyInput("aadts"));
    }
    if !(e_total >= 0.0) {
        return Err(Error::NegativeEnergy(e_total));
    }
    let sum: f64 = aadts.iter().sum();
    if sum <= 0.0 {
        return Err(Error::ZeroAadt);
    }
    let shares = match mode {
        EnergyMode::Proportional => aadts.iter().map(|a| e_total * a / sum).collect(),
        EnergyMode::PaperLiteral => {
            let mean = sum / aadts.len() as f64;
            aadts.iter().map(|a| e_total * a / mean).collect()
        }
    };
    Ok(shares)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lat, lon).unwrap()
    }

    fn road(id: u64, lat: f64, lon: f64, aadt: f64) -> Road {
        Road {
            id,
            location: p(lat, lon),
            aadt,
        }
    }

    fn region_with_roads(roads: Vec<Road>) -> RegionData {
        RegionData {
            roads,
            ..RegionData::default()
        }
    }

    #[test]
    fn mean_of_all_roads_when_exactly_three() {
        let site = p(42.0, -73.0);
        let region = region_with_roads(vec![
            road(1, 42.0, -73.0001, 100.0),
            road(2, 42.0001, -73.0, 200.0),
            road(3, 42.0, -72.9999, 300.0),
        ]);
        let f = build_features(&region, site, None, (0, 0)).unwrap();
        assert_eq!(f.t_s, 200.0);
    }

    #[test]
    fn fewer_than_three_roads_is_an_error() {
        let region = region_with_roads(vec![road(1, 42.0, -73.0, 10.0)]);
        let err = build_features(&region, p(42.0, -73.0), None, (0, 0)).unwrap_err();
        assert!(err.to_string().contains("insufficient road data"));
    }

    #[test]
    fn empty_neighborhood_has_zero_poi_counts() {
        let mut region = region_with_roads(vec![
            road(1, 42.0, -73.0, 1.0),
            road(2, 42.1, -73.0, 2.0),
            road(3, 42.2, -73.0, 3.0),
        ]);
        // One POI roughly 1.1 km away: outside the 500 m radius.
        region.pois.push(Poi {
            id: "x".into(),
            location: p(42.01, -73.0),
            category: PoiCategory::Education,
        });
        let f = build_features(&region, p(42.0, -73.0), None, (0, 0)).unwrap();
        assert_eq!(f.poi_counts, [0.0; POI_CATEGORY_COUNT]);
    }

    #[test]
    fn three_nearest_of_five_roads_match_brute_force() {
        let site = p(42.65, -73.75);
        let roads = vec![
            road(1, 42.6500, -73.7510, 120.0),
            road(2, 42.6530, -73.7500, 80.0),
            road(3, 42.6400, -73.7400, 500.0),
            road(4, 42.6501, -73.7501, 60.0),
            road(5, 42.7000, -73.8000, 900.0),
        ];
        // Brute-force oracle: full distance sort, take 3.
        let mut dist: Vec<(f64, f64)> = roads
            .iter()
            .map(|r| (haversine_distance(site, r.location), r.aadt))
            .collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0));
        let expect = (dist[0].1 + dist[1].1 + dist[2].1) / 3.0;

        let region = region_with_roads(roads);
        let f = build_features(&region, site, None, (0, 0)).unwrap();
        assert_eq!(f.t_s, expect);
    }

    #[test]
    fn station_at_exact_site_is_excluded_from_n_s() {
        let site = p(42.65, -73.75);
        let mut region = region_with_roads(vec![
            road(1, 42.65, -73.75, 1.0),
            road(2, 42.66, -73.75, 1.0),
            road(3, 42.64, -73.75, 1.0),
        ]);
        let station = |id: &str, lat: f64, lon: f64| Station {
            id: id.into(),
            location: p(lat, lon),
            zip: "12210".into(),
            level2_ports: 2,
            dcfc_ports: 0,
        };
        region.stations.push(station("self", 42.65, -73.75));
        region.stations.push(station("near", 42.6530, -73.75)); // ~330 m
        region.stations.push(station("far", 42.70, -73.75)); // ~5.6 km
        let f = build_features(&region, site, None, (0, 0)).unwrap();
        assert_eq!(f.n_s, 1.0);
    }

    #[test]
    fn missing_zip_yields_zero_ev_density() {
        let region = region_with_roads(vec![
            road(1, 42.0, -73.0, 1.0),
            road(2, 42.1, -73.0, 1.0),
            road(3, 42.2, -73.0, 1.0),
        ]);
        let f = build_features(&region, p(42.0, -73.0), Some("99999"), (1, 2)).unwrap();
        assert_eq!(f.v_s, 0.0);
        assert_eq!((f.p_c, f.p_d), (1.0, 2.0));
    }

    #[test]
    fn feature_vector_has_18_dimensions() {
        let f = StationFeatures {
            t_s: 1.0,
            v_s: 2.0,
            n_s: 3.0,
            p_c: 4.0,
            p_d: 5.0,
            poi_counts: [1.0; POI_CATEGORY_COUNT],
            target_kwh: None,
        };
        let v = f.to_vector();
        assert_eq!(v.len(), 18);
        assert_eq!(v[0], 1.0);
        assert_eq!(v[5], 1.0);
        assert_eq!(v[17], 1.0);
    }

    #[test]
    fn single_charger_takes_the_whole_total_in_both_modes() {
        for mode in [EnergyMode::Proportional, EnergyMode::PaperLiteral] {
            let shares = disaggregate_energy(321.5, &[77.0], mode).unwrap();
            assert_eq!(shares, vec![321.5]);
        }
    }

    #[test]
    fn symmetric_pair_splits_evenly() {
        // 11,036 kWh: a quarterly total reported for New York County chargers.
        let shares =
            disaggregate_energy(11_036.0, &[1000.0, 1000.0], EnergyMode::Proportional).unwrap();
        assert_eq!(shares, vec![5_518.0, 5_518.0]);
    }

    #[test]
    fn both_modes_match_hand_arithmetic() {
        let prop = disaggregate_energy(100.0, &[1000.0, 3000.0], EnergyMode::Proportional).unwrap();
        assert_eq!(prop, vec![25.0, 75.0]);
        let lit = disaggregate_energy(100.0, &[1000.0, 3000.0], EnergyMode::PaperLiteral).unwrap();
        assert_eq!(lit, vec![50.0, 150.0]);
    }

    #[test]
    fn all_zero_aadt_is_an_error() {
        let err = disaggregate_energy(10.0, &[0.0, 0.0], EnergyMode::Proportional).unwrap_err();
        assert!(err.to_string().contains("cannot apportion energy"));
    }

    #[test]
    fn poi_category_round_trips() {
        for c in PoiCategory::ALL {
            assert_eq!(c.as_str().parse::<PoiCategory>().unwrap(), c);
        }
        assert!("mall".parse::<PoiCategory>().is_err());
    }
}
