//! The precomputed profiles schema: one row per author with the supplied
//! scalars followed by seven columns per indicator family.
//!
//! Column names are `<dimension>_<suffix>` where the suffix is the family
//! name lowercased. Reading maps a suffix back to the uppercased family
//! name, so family names are expected to be uppercase.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde_json::{Map, Value};

use super::{Format, IngestError, Position, ScalarMetrics, NA};
use crate::model::{IndicatorName, IndicatorProfile, ModelError};

pub const SCALAR_KEYS: [&str; 3] = ["papers", "cites", "h"];
/// P, I, R, P/I, P/R, I/R, (P+I)/2R.
pub const DIMENSION_KEYS: [&str; 7] = ["p", "i", "r", "pi", "pr", "ir", "pi2r"];

pub fn family_suffix(family: &IndicatorName) -> String {
    family.as_str().to_lowercase()
}

/// One family's dimensions and ratios as stored in a profiles row.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FamilyValues {
    pub p: Option<f64>,
    pub i: Option<f64>,
    pub r: Option<f64>,
    pub p_over_i: Option<f64>,
    pub p_over_r: Option<f64>,
    pub i_over_r: Option<f64>,
    pub pi_over_2r: Option<f64>,
}

impl FamilyValues {
    pub fn from_profile(p: &IndicatorProfile) -> Self {
        Self {
            p: p.p,
            i: p.i,
            r: p.r,
            p_over_i: p.ratios.p_over_i,
            p_over_r: p.ratios.p_over_r,
            i_over_r: p.ratios.i_over_r,
            pi_over_2r: p.ratios.pi_over_2r,
        }
    }

    /// In [`DIMENSION_KEYS`] order.
    pub fn to_array(&self) -> [Option<f64>; 7] {
        [
            self.p,
            self.i,
            self.r,
            self.p_over_i,
            self.p_over_r,
            self.i_over_r,
            self.pi_over_2r,
        ]
    }

    pub fn from_array(v: [Option<f64>; 7]) -> Self {
        Self {
            p: v[0],
            i: v[1],
            r: v[2],
            p_over_i: v[3],
            p_over_r: v[4],
            i_over_r: v[5],
            pi_over_2r: v[6],
        }
    }

    pub fn get(&self, key: &str) -> Option<Option<f64>> {
        DIMENSION_KEYS
            .iter()
            .position(|k| *k == key)
            .map(|i| self.to_array()[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileRecord {
    pub author_id: String,
    pub group: Option<String>,
    pub scalars: Option<ScalarMetrics>,
    pub families: BTreeMap<IndicatorName, FamilyValues>,
}

impl ProfileRecord {
    /// Value of a column key such as `papers` or `pi_sjr`. The outer `None`
    /// means the column does not exist, the inner one that the cell is
    /// undefined.
    pub fn value(&self, key: &str) -> Option<Option<f64>> {
        if let Some(i) = SCALAR_KEYS.iter().position(|k| *k == key) {
            return Some(self.scalars.map(|m| [m.papers, m.cites, m.h][i] as f64));
        }
        let (dim, suffix) = key.split_once('_')?;
        let (_, values) = self.families.iter().find(|(f, _)| family_suffix(f) == suffix)?;
        values.get(dim)
    }
}

/// A profiles file: family order plus rows in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileTable {
    families: Vec<IndicatorName>,
    rows: Vec<ProfileRecord>,
}

impl ProfileTable {
    /// Every row must carry exactly the listed families.
    pub fn new(families: Vec<IndicatorName>, rows: Vec<ProfileRecord>) -> Result<Self, IngestError> {
        for (i, row) in rows.iter().enumerate() {
            let ok = row.families.len() == families.len() && families.iter().all(|f| row.families.contains_key(f));
            if !ok {
                return Err(IngestError::Validation(format!(
                    "profile row {} (`{}`) does not carry exactly the families {:?}",
                    i + 1,
                    row.author_id,
                    families.iter().map(IndicatorName::as_str).collect::<Vec<_>>()
                )));
            }
        }
        Ok(Self { families, rows })
    }

    pub fn families(&self) -> &[IndicatorName] {
        &self.families
    }

    pub fn rows(&self) -> &[ProfileRecord] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<ProfileRecord> {
        self.rows
    }

    /// All numeric column keys in file order.
    pub fn columns(&self) -> Vec<String> {
        let mut out: Vec<String> = SCALAR_KEYS.iter().map(|s| s.to_string()).collect();
        for f in &self.families {
            let s = family_suffix(f);
            out.extend(DIMENSION_KEYS.iter().map(|d| format!("{d}_{s}")));
        }
        out
    }

    fn header(&self) -> Vec<String> {
        let mut h = vec!["author_id".to_string(), "group".to_string()];
        h.extend(self.columns());
        h
    }
}

fn render(v: Option<f64>) -> String {
    match v {
        Some(x) => x.to_string(),
        None => NA.to_string(),
    }
}

/// Writes at full precision so that reading back reproduces every value.
pub fn write_profiles(mut writer: impl Write, table: &ProfileTable, format: Format) -> Result<(), IngestError> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut writer);
            let wrap = |e: csv::Error| IngestError::Syntax(e.to_string());
            w.write_record(table.header()).map_err(wrap)?;
            for row in &table.rows {
                let mut rec = vec![row.author_id.clone(), row.group.clone().unwrap_or_default()];
                match row.scalars {
                    Some(m) => rec.extend([m.papers, m.cites, m.h].map(|v| v.to_string())),
                    None => rec.extend([NA; 3].map(str::to_string)),
                }
                for f in &table.families {
                    rec.extend(row.families[f].to_array().map(render));
                }
                w.write_record(&rec).map_err(wrap)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|row| {
                    let mut m = Map::new();
                    m.insert("author_id".into(), row.author_id.clone().into());
                    m.insert("group".into(), row.group.clone().map_or(Value::Null, Value::from));
                    for (i, k) in SCALAR_KEYS.iter().enumerate() {
                        let v = row.scalars.map(|s| [s.papers, s.cites, s.h][i]);
                        m.insert(k.to_string(), v.map_or(Value::Null, Value::from));
                    }
                    for f in &table.families {
                        let s = family_suffix(f);
                        for (k, v) in DIMENSION_KEYS.iter().zip(row.families[f].to_array()) {
                            m.insert(format!("{k}_{s}"), v.map_or(Value::Null, Value::from));
                        }
                    }
                    Value::Object(m)
                })
                .collect();
            serde_json::to_writer_pretty(&mut writer, &rows).map_err(|e| IngestError::Syntax(e.to_string()))?;
            writer.write_all(b"\n")?;
        }
    }
    Ok(())
}

fn families_from_keys<'a>(keys: impl Iterator<Item = &'a str>) -> Vec<String> {
    keys.filter_map(|k| k.strip_prefix("p_")).map(str::to_string).collect()
}

fn parse_cell(at: Position, column: &str, cell: &str) -> Result<Option<f64>, IngestError> {
    if cell == NA || cell.is_empty() {
        return Ok(None);
    }
    cell.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .map(Some)
        .ok_or_else(|| IngestError::Malformed {
            at,
            message: format!("column `{column}`: `{cell}` is not a number or {NA}"),
        })
}

fn parse_count(at: Position, column: &'static str, v: Option<f64>) -> Result<Option<u64>, IngestError> {
    match v {
        None => Ok(None),
        Some(x) if x < 0.0 => Err(IngestError::Negative {
            at,
            column,
            value: x as i64,
        }),
        Some(x) if x.fract() != 0.0 => Err(IngestError::Malformed {
            at,
            message: format!("column `{column}`: `{x}` is not an integer"),
        }),
        Some(x) => Ok(Some(x as u64)),
    }
}

/// Builds a record from cells addressed by column key.
fn build_record(
    at: Position,
    author_id: String,
    group: Option<String>,
    suffixes: &[String],
    mut cell: impl FnMut(&str) -> Result<Option<f64>, IngestError>,
) -> Result<ProfileRecord, IngestError> {
    if author_id.is_empty() {
        return Err(IngestError::Invalid {
            at,
            source: ModelError::EmptyAuthor,
        });
    }
    let counts = [
        parse_count(at, "papers", cell("papers")?)?,
        parse_count(at, "cites", cell("cites")?)?,
        parse_count(at, "h", cell("h")?)?,
    ];
    let scalars = match counts {
        [Some(papers), Some(cites), Some(h)] => Some(ScalarMetrics { papers, cites, h }),
        [None, None, None] => None,
        _ => {
            return Err(IngestError::Malformed {
                at,
                message: "papers, cites and h must be all present or all NA".into(),
            })
        }
    };
    let mut families = BTreeMap::new();
    for s in suffixes {
        let name = IndicatorName::new(s.to_uppercase()).map_err(|source| IngestError::Invalid { at, source })?;
        let mut vals = [None; 7];
        for (slot, d) in vals.iter_mut().zip(DIMENSION_KEYS) {
            *slot = cell(&format!("{d}_{s}"))?;
        }
        families.insert(name, FamilyValues::from_array(vals));
    }
    Ok(ProfileRecord {
        author_id,
        group: group.filter(|g| !g.is_empty()),
        scalars,
        families,
    })
}

pub fn read_profiles(reader: impl Read, format: Format) -> Result<ProfileTable, IngestError> {
    match format {
        Format::Csv => read_csv(reader),
        Format::Json => read_json(reader),
    }
}

fn read_csv(reader: impl Read) -> Result<ProfileTable, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| IngestError::Syntax(e.to_string()))?.clone();
    let suffixes = families_from_keys(headers.iter());
    let expected = {
        let mut h = vec!["author_id".to_string(), "group".to_string()];
        h.extend(SCALAR_KEYS.iter().map(|s| s.to_string()));
        for s in &suffixes {
            h.extend(DIMENSION_KEYS.iter().map(|d| format!("{d}_{s}")));
        }
        h
    };
    if let Some(missing) = expected.iter().find(|k| !headers.iter().any(|h| h == k.as_str())) {
        return Err(IngestError::MissingColumn(missing.clone()));
    }
    let index: BTreeMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| IngestError::Syntax(e.to_string()))?;
        let at = Position::Line(record.position().map_or(0, |p| p.line()));
        let get = |k: &str| record.get(index[k]).unwrap_or("");
        let row = build_record(
            at,
            get("author_id").to_string(),
            Some(get("group").to_string()),
            &suffixes,
            |k| parse_cell(at, k, get(k)),
        )?;
        rows.push(row);
    }
    let families = suffixes
        .iter()
        .map(|s| IndicatorName::new(s.to_uppercase()).expect("non-empty"))
        .collect();
    ProfileTable::new(families, rows)
}

fn read_json(reader: impl Read) -> Result<ProfileTable, IngestError> {
    let values: Vec<Map<String, Value>> =
        serde_json::from_reader(reader).map_err(|e| IngestError::Syntax(e.to_string()))?;
    let mut suffixes = values
        .first()
        .map(|m| families_from_keys(m.keys().map(String::as_str)))
        .unwrap_or_default();
    // object keys carry no order; fall back to name order
    suffixes.sort();
    let mut rows = Vec::new();
    for (i, obj) in values.iter().enumerate() {
        let at = Position::Record(i as u64 + 1);
        let text = |k: &str| match obj.get(k) {
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(Value::Null) | None => Ok(None),
            Some(other) => Err(IngestError::Malformed {
                at,
                message: format!("column `{k}`: expected a string, got {other}"),
            }),
        };
        let author_id = text("author_id")?.ok_or_else(|| IngestError::MissingColumn("author_id".into()))?;
        let group = text("group")?;
        let row = build_record(at, author_id, group, &suffixes, |k| match obj.get(k) {
            None => Err(IngestError::MissingColumn(k.to_string())),
            Some(Value::Null) => Ok(None),
            Some(Value::Number(n)) => Ok(n.as_f64()),
            Some(Value::String(s)) => parse_cell(at, k, s),
            Some(other) => Err(IngestError::Malformed {
                at,
                message: format!("column `{k}`: unexpected {other}"),
            }),
        })?;
        rows.push(row);
    }
    let families = suffixes
        .iter()
        .map(|s| IndicatorName::new(s.to_uppercase()).expect("non-empty"))
        .collect();
    ProfileTable::new(families, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "author_id,group,papers,cites,h,p_sjr,i_sjr,r_sjr,pi_sjr,pr_sjr,ir_sjr,pi2r_sjr\n\
                          a,G,10,20,3,1.5,1,2,1.5,0.75,0.5,0.625\n\
                          b,,NA,NA,NA,1,0,NA,NA,NA,NA,NA\n";

    #[test]
    fn reads_values_and_sentinels() {
        let t = read_profiles(SAMPLE.as_bytes(), Format::Csv).unwrap();
        assert_eq!(t.families(), &[IndicatorName::sjr()]);
        let a = &t.rows()[0];
        assert_eq!(a.value("papers"), Some(Some(10.0)));
        assert_eq!(a.value("pi2r_sjr"), Some(Some(0.625)));
        assert_eq!(a.value("pi_snip"), None);
        let b = &t.rows()[1];
        assert_eq!(b.group, None);
        assert_eq!(b.scalars, None);
        assert_eq!(b.value("i_sjr"), Some(Some(0.0)));
        assert_eq!(b.value("pi_sjr"), Some(None));
    }

    #[test]
    fn round_trip_both_formats() {
        let t = read_profiles(SAMPLE.as_bytes(), Format::Csv).unwrap();
        let mut csv_out = Vec::new();
        write_profiles(&mut csv_out, &t, Format::Csv).unwrap();
        assert_eq!(String::from_utf8(csv_out.clone()).unwrap(), SAMPLE);
        let mut json_out = Vec::new();
        write_profiles(&mut json_out, &t, Format::Json).unwrap();
        assert_eq!(read_profiles(json_out.as_slice(), Format::Json).unwrap(), t);
    }

    #[test]
    fn malformed_profiles() {
        let bad = SAMPLE.replace("1.5,1,2", "x,1,2");
        assert!(matches!(
            read_profiles(bad.as_bytes(), Format::Csv),
            Err(IngestError::Malformed {
                at: Position::Line(2),
                ..
            })
        ));
        let bad = SAMPLE.replace(",pi2r_sjr", ",other");
        assert!(matches!(
            read_profiles(bad.as_bytes(), Format::Csv),
            Err(IngestError::MissingColumn(c)) if c == "pi2r_sjr"
        ));
        let bad = SAMPLE.replace("10,20,3", "10,NA,3");
        assert!(read_profiles(bad.as_bytes(), Format::Csv).is_err());
    }

    #[test]
    fn rows_must_carry_every_family() {
        let r = ProfileRecord {
            author_id: "a".into(),
            group: None,
            scalars: None,
            families: BTreeMap::new(),
        };
        assert!(ProfileTable::new(vec![IndicatorName::sjr()], vec![r]).is_err());
    }
}
