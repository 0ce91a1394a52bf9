//! CSV readers for the five region inputs and the station feature table.
//!
//! All files are UTF-8, comma-delimited, with a required header row.
//! A malformed row aborts with the file and line number in the error.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::ingest::{
    GeoPoint, Poi, PoiCategory, Road, RegionData, Station, StationFeatures, FEATURE_NAMES,
    POI_CATEGORY_COUNT,
};

fn open_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::Io {
                path: path.display().to_string(),
                source: std::io::Error::other(e.to_string()),
            },
            _ => malformed(path, 1, e.to_string()),
        })
}

fn malformed(path: &Path, line: u64, msg: impl Into<String>) -> Error {
    Error::MalformedRow {
        file: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

struct RowReader {
    path: std::path::PathBuf,
    headers: Vec<String>,
}

impl RowReader {
    fn new(path: &Path, rdr: &mut csv::Reader<std::fs::File>) -> Result<Self> {
        let headers = rdr
            .headers()
            .map_err(|e| malformed(path, 1, e.to_string()))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        Ok(Self {
            path: path.to_path_buf(),
            headers,
        })
    }

    fn field<'r>(&self, record: &'r csv::StringRecord, name: &str) -> Result<&'r str> {
        let idx = self
            .headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| malformed(&self.path, 1, format!("missing column `{name}`")))?;
        record
            .get(idx)
            .map(str::trim)
            .ok_or_else(|| malformed(&self.path, self.line(record), format!("missing field `{name}`")))
    }

    fn parse<T: std::str::FromStr>(
        &self,
        record: &csv::StringRecord,
        name: &str,
    ) -> Result<T> {
        let raw = self.field(record, name)?;
        raw.parse::<T>().map_err(|_| {
            malformed(
                &self.path,
                self.line(record),
                format!("cannot parse `{raw}` in column `{name}`"),
            )
        })
    }

    fn line(&self, record: &csv::StringRecord) -> u64 {
        record.position().map(|p| p.line()).unwrap_or(0)
    }

    fn geo_point(&self, record: &csv::StringRecord) -> Result<GeoPoint> {
        let lat: f64 = self.parse(record, "lat")?;
        let lon: f64 = self.parse(record, "lon")?;
        GeoPoint::new(lat, lon)
            .map_err(|e| malformed(&self.path, self.line(record), e.to_string()))
    }
}

/// Read `stations.csv`: id,lat,lon,zip,level2_ports,dcfc_ports
pub fn read_stations(path: &Path) -> Result<Vec<Station>> {
    let mut rdr = open_reader(path)?;
    let rows = RowReader::new(path, &mut rdr)?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| malformed(path, 0, e.to_string()))?;
        out.push(Station {
            id: rows.field(&record, "id")?.to_string(),
            location: rows.geo_point(&record)?,
            zip: rows.field(&record, "zip")?.to_string(),
            level2_ports: rows.parse(&record, "level2_ports")?,
            dcfc_ports: rows.parse(&record, "dcfc_ports")?,
        });
    }
    Ok(out)
}

/// Read `roads.csv`: id,lat,lon,aadt
pub fn read_roads(path: &Path) -> Result<Vec<Road>> {
    let mut rdr = open_reader(path)?;
    let rows = RowReader::new(path, &mut rdr)?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| malformed(path, 0, e.to_string()))?;
        let aadt: f64 = rows.parse(&record, "aadt")?;
        if !(aadt >= 0.0) {
            return Err(malformed(
                path,
                rows.line(&record),
                format!("aadt {aadt} must be >= 0"),
            ));
        }
        out.push(Road {
            id: rows.parse(&record, "id")?,
            location: rows.geo_point(&record)?,
            aadt,
        });
    }
    Ok(out)
}

/// Read `pois.csv`: id,lat,lon,category
pub fn read_pois(path: &Path) -> Result<Vec<Poi>> {
    let mut rdr = open_reader(path)?;
    let rows = RowReader::new(path, &mut rdr)?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| malformed(path, 0, e.to_string()))?;
        let category: PoiCategory = rows
            .field(&record, "category")?
            .parse()
            .map_err(|e: Error| malformed(path, rows.line(&record), e.to_string()))?;
        out.push(Poi {
            id: rows.field(&record, "id")?.to_string(),
            location: rows.geo_point(&record)?,
            category,
        });
    }
    Ok(out)
}

/// Read `ev_registrations.csv`: zip,count
pub fn read_ev_registrations(path: &Path) -> Result<BTreeMap<String, u64>> {
    let mut rdr = open_reader(path)?;
    let rows = RowReader::new(path, &mut rdr)?;
    let mut out = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| malformed(path, 0, e.to_string()))?;
        let zip = rows.field(&record, "zip")?.to_string();
        let count: u64 = rows.parse(&record, "count")?;
        out.insert(zip, count);
    }
    Ok(out)
}

/// Read `zip_energy.csv`: zip,kwh_month
pub fn read_zip_energy(path: &Path) -> Result<BTreeMap<String, f64>> {
    let mut rdr = open_reader(path)?;
    let rows = RowReader::new(path, &mut rdr)?;
    let mut out = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| malformed(path, 0, e.to_string()))?;
        let zip = rows.field(&record, "zip")?.to_string();
        let kwh: f64 = rows.parse(&record, "kwh_month")?;
        if !(kwh >= 0.0) {
            return Err(malformed(
                path,
                rows.line(&record),
                format!("kwh_month {kwh} must be >= 0"),
            ));
        }
        out.insert(zip, kwh);
    }
    Ok(out)
}

/// Load all five inputs into one `RegionData`.
pub fn load_region(
    stations: &Path,
    roads: &Path,
    pois: &Path,
    ev_registrations: &Path,
    zip_energy: &Path,
) -> Result<RegionData> {
    Ok(RegionData {
        stations: read_stations(stations)?,
        roads: read_roads(roads)?,
        pois: read_pois(pois)?,
        ev_registrations: read_ev_registrations(ev_registrations)?,
        zip_energy: read_zip_energy(zip_energy)?,
    })
}

/// A row of the feature table: station id plus its features and target.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub station_id: String,
    pub features: StationFeatures,
}

/// Write the feature table produced by the `features` stage.
pub fn write_feature_rows<W: Write>(mut w: W, rows: &[FeatureRow]) -> std::io::Result<()> {
    write!(w, "station_id")?;
    for name in FEATURE_NAMES {
        write!(w, ",{name}")?;
    }
    writeln!(w, ",target_kwh")?;
    for row in rows {
        write!(w, "{}", row.station_id)?;
        for v in row.features.to_vector() {
            write!(w, ",{v}")?;
        }
        match row.features.target_kwh {
            Some(t) => writeln!(w, ",{t}")?,
            None => writeln!(w, ",")?,
        }
    }
    Ok(())
}

/// Read a feature table back (the `train-demand` input).
pub fn read_feature_rows(path: &Path) -> Result<Vec<FeatureRow>> {
    let mut rdr = open_reader(path)?;
    let rows = RowReader::new(path, &mut rdr)?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| malformed(path, 0, e.to_string()))?;
        let mut poi_counts = [0.0; POI_CATEGORY_COUNT];
        for (k, slot) in poi_counts.iter_mut().enumerate() {
            *slot = rows.parse(&record, FEATURE_NAMES[5 + k])?;
        }
        let target_raw = rows.field(&record, "target_kwh")?;
        let target_kwh = if target_raw.is_empty() {
            None
        } else {
            Some(target_raw.parse::<f64>().map_err(|_| {
                malformed(
                    path,
                    rows.line(&record),
                    format!("cannot parse `{target_raw}` in column `target_kwh`"),
                )
            })?)
        };
        out.push(FeatureRow {
            station_id: rows.field(&record, "station_id")?.to_string(),
            features: StationFeatures {
                t_s: rows.parse(&record, "t_s")?,
                v_s: rows.parse(&record, "v_s")?,
                n_s: rows.parse(&record, "n_s")?,
                p_c: rows.parse(&record, "p_c")?,
                p_d: rows.parse(&record, "p_d")?,
                poi_counts,
                target_kwh,
            },
        });
    }
    Ok(out)
}
