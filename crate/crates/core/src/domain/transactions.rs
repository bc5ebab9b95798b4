use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One apartment sale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transaction {
    /// 1-based data row in the source file.
    pub row: usize,
    pub parcel_id: String,
    pub bloc_id: String,
    pub city_id: String,
    pub building_id: Option<String>,
    /// Nominal price.
    pub price: f64,
    /// Square meters.
    pub area: f64,
    pub floor: u32,
    /// Number of floors in the building.
    pub height: u32,
    pub construction_year: i32,
    pub transaction_date: NaiveDate,
    pub legal_status: Option<u8>,
    pub ownership_share: f64,
    pub single_family: bool,
    pub x: Option<f64>,
    pub y: Option<f64>,
    /// Real, cost-adjusted log price per square meter.
    pub log_price: Option<f64>,
    /// `log_price` net of floor/height premia and construction-timing effects.
    pub adjusted_log_price: Option<f64>,
}

impl Transaction {
    pub fn building_key(&self) -> String {
        match &self.building_id {
            Some(id) => id.clone(),
            None => format!("{}:{}:{}", self.parcel_id, self.height, self.construction_year),
        }
    }

    /// Transaction year minus construction year.
    pub fn years_after_construction(&self) -> i32 {
        use chrono::Datelike;
        self.transaction_date.year() - self.construction_year
    }

    pub fn day(&self) -> f64 {
        super::day_number(self.transaction_date)
    }

    pub fn coordinates(&self) -> Option<(f64, f64)> {
        self.x.zip(self.y)
    }
}

/// Source column names for each transaction field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMapping {
    pub parcel_id: String,
    pub bloc_id: String,
    pub city_id: String,
    pub building_id: String,
    pub price: String,
    pub area: String,
    pub floor: String,
    pub height: String,
    pub construction_year: String,
    pub transaction_date: String,
    pub legal_status: String,
    pub ownership_share: String,
    pub single_family: String,
    pub x: String,
    pub y: String,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        Self {
            parcel_id: "parcel_id".into(),
            bloc_id: "bloc_id".into(),
            city_id: "city_id".into(),
            building_id: "building_id".into(),
            price: "price".into(),
            area: "area".into(),
            floor: "floor".into(),
            height: "height".into(),
            construction_year: "construction_year".into(),
            transaction_date: "transaction_date".into(),
            legal_status: "legal_status".into(),
            ownership_share: "ownership_share".into(),
            single_family: "single_family".into(),
            x: "x".into(),
            y: "y".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectReason {
    Unparseable(String),
    FloorAboveHeight,
    NonPositivePrice,
    NonPositiveArea,
    ZeroHeight,
}

impl RejectReason {
    fn is_parse_failure(&self) -> bool {
        matches!(self, RejectReason::Unparseable(_))
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::Unparseable(field) => write!(f, "unparseable:{field}"),
            RejectReason::FloorAboveHeight => f.write_str("floor_above_height"),
            RejectReason::NonPositivePrice => f.write_str("non_positive_price"),
            RejectReason::NonPositiveArea => f.write_str("non_positive_area"),
            RejectReason::ZeroHeight => f.write_str("zero_height"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reject {
    pub row: usize,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, Default)]
pub struct LoadOutcome {
    pub transactions: Vec<Transaction>,
    pub rejects: Vec<Reject>,
}

struct Columns {
    index: HashMap<String, usize>,
}

impl Columns {
    fn required(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    fn optional(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }
}

fn field<'a>(record: &'a csv::StringRecord, idx: Option<usize>) -> Option<&'a str> {
    idx.and_then(|i| record.get(i)).map(str::trim).filter(|s| !s.is_empty())
}

fn parse<T: std::str::FromStr>(
    record: &csv::StringRecord,
    idx: usize,
    name: &str,
) -> std::result::Result<T, RejectReason> {
    field(record, Some(idx))
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| RejectReason::Unparseable(name.to_string()))
}

fn parse_optional<T: std::str::FromStr>(
    record: &csv::StringRecord,
    idx: Option<usize>,
    name: &str,
) -> std::result::Result<Option<T>, RejectReason> {
    match field(record, idx) {
        None => Ok(None),
        Some(s) => s
            .parse()
            .map(Some)
            .map_err(|_| RejectReason::Unparseable(name.to_string())),
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "y" => Some(true),
        "0" | "false" | "no" | "n" => Some(false),
        _ => None,
    }
}

struct RowParser {
    parcel: usize,
    bloc: usize,
    city: usize,
    building: Option<usize>,
    price: usize,
    area: usize,
    floor: usize,
    height: usize,
    construction_year: usize,
    date: usize,
    legal: Option<usize>,
    share: Option<usize>,
    single_family: Option<usize>,
    x: Option<usize>,
    y: Option<usize>,
    mapping: ColumnMapping,
}

impl RowParser {
    fn new(headers: &csv::StringRecord, mapping: &ColumnMapping) -> Result<Self> {
        let cols = Columns {
            index: headers
                .iter()
                .enumerate()
                .map(|(i, h)| (h.trim().to_string(), i))
                .collect(),
        };
        Ok(Self {
            parcel: cols.required(&mapping.parcel_id)?,
            bloc: cols.required(&mapping.bloc_id)?,
            city: cols.required(&mapping.city_id)?,
            building: cols.optional(&mapping.building_id),
            price: cols.required(&mapping.price)?,
            area: cols.required(&mapping.area)?,
            floor: cols.required(&mapping.floor)?,
            height: cols.required(&mapping.height)?,
            construction_year: cols.required(&mapping.construction_year)?,
            date: cols.required(&mapping.transaction_date)?,
            legal: cols.optional(&mapping.legal_status),
            share: cols.optional(&mapping.ownership_share),
            single_family: cols.optional(&mapping.single_family),
            x: cols.optional(&mapping.x),
            y: cols.optional(&mapping.y),
            mapping: mapping.clone(),
        })
    }

    fn parse(
        &self,
        row: usize,
        record: &csv::StringRecord,
    ) -> std::result::Result<Transaction, RejectReason> {
        let m = &self.mapping;
        let text = |idx: usize, name: &str| {
            field(record, Some(idx))
                .map(str::to_string)
                .ok_or_else(|| RejectReason::Unparseable(name.to_string()))
        };
        let date_text = text(self.date, &m.transaction_date)?;
        let transaction_date = NaiveDate::parse_from_str(&date_text, "%Y-%m-%d")
            .map_err(|_| RejectReason::Unparseable(m.transaction_date.clone()))?;
        let single_family = match field(record, self.single_family) {
            None => false,
            Some(s) => parse_bool(s).ok_or_else(|| RejectReason::Unparseable(m.single_family.clone()))?,
        };
        let tx = Transaction {
            row,
            parcel_id: text(self.parcel, &m.parcel_id)?,
            bloc_id: text(self.bloc, &m.bloc_id)?,
            city_id: text(self.city, &m.city_id)?,
            building_id: field(record, self.building).map(str::to_string),
            price: parse(record, self.price, &m.price)?,
            area: parse(record, self.area, &m.area)?,
            floor: parse(record, self.floor, &m.floor)?,
            height: parse(record, self.height, &m.height)?,
            construction_year: parse(record, self.construction_year, &m.construction_year)?,
            transaction_date,
            legal_status: parse_optional(record, self.legal, &m.legal_status)?,
            ownership_share: parse_optional(record, self.share, &m.ownership_share)?.unwrap_or(1.0),
            single_family,
            x: parse_optional(record, self.x, &m.x)?,
            y: parse_optional(record, self.y, &m.y)?,
            log_price: None,
            adjusted_log_price: None,
        };
        if !(tx.price > 0.0) {
            return Err(RejectReason::NonPositivePrice);
        }
        if !(tx.area > 0.0) {
            return Err(RejectReason::NonPositiveArea);
        }
        if tx.height == 0 {
            return Err(RejectReason::ZeroHeight);
        }
        if tx.floor > tx.height {
            return Err(RejectReason::FloorAboveHeight);
        }
        Ok(tx)
    }
}

/// Read transactions from any delimited source. Invariant violations and
/// unparseable rows land in `rejects`; if unparseable rows exceed
/// `max_unparseable_fraction` of all rows the load aborts.
pub fn read_transactions<R: Read>(
    reader: R,
    mapping: &ColumnMapping,
    max_unparseable_fraction: f64,
) -> Result<LoadOutcome> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let parser = RowParser::new(&headers, mapping)?;
    let mut out = LoadOutcome::default();
    let mut total = 0usize;
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        total += 1;
        let parsed = match record {
            Ok(rec) => parser.parse(row, &rec),
            Err(_) => Err(RejectReason::Unparseable("record".into())),
        };
        match parsed {
            Ok(tx) => out.transactions.push(tx),
            Err(reason) => out.rejects.push(Reject { row, reason }),
        }
    }
    let unparseable = out.rejects.iter().filter(|r| r.reason.is_parse_failure()).count();
    if total > 0 && unparseable as f64 > max_unparseable_fraction * total as f64 {
        return Err(Error::RejectThreshold {
            rejected: unparseable,
            total,
            threshold: 100.0 * max_unparseable_fraction,
        });
    }
    Ok(out)
}

pub fn load_transactions(
    path: &Path,
    mapping: &ColumnMapping,
    max_unparseable_fraction: f64,
) -> Result<LoadOutcome> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_transactions(file, mapping, max_unparseable_fraction)
}

/// Rejects report: `row,reason`.
pub fn write_rejects<W: Write>(writer: W, rejects: &[Reject]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["row", "reason"])?;
    for r in rejects {
        w.write_record([r.row.to_string(), r.reason.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<rejects>", e))?;
    Ok(())
}

/// Write transactions with the default column names.
pub fn write_transactions<W: Write>(writer: W, txs: &[Transaction]) -> Result<()> {
    let m = ColumnMapping::default();
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        &m.parcel_id,
        &m.bloc_id,
        &m.city_id,
        &m.building_id,
        &m.price,
        &m.area,
        &m.floor,
        &m.height,
        &m.construction_year,
        &m.transaction_date,
        &m.legal_status,
        &m.ownership_share,
        &m.single_family,
        &m.x,
        &m.y,
    ])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for t in txs {
        w.write_record([
            t.parcel_id.clone(),
            t.bloc_id.clone(),
            t.city_id.clone(),
            t.building_id.clone().unwrap_or_default(),
            t.price.to_string(),
            t.area.to_string(),
            t.floor.to_string(),
            t.height.to_string(),
            t.construction_year.to_string(),
            t.transaction_date.format("%Y-%m-%d").to_string(),
            t.legal_status.map(|v| v.to_string()).unwrap_or_default(),
            t.ownership_share.to_string(),
            if t.single_family { "1".into() } else { "0".into() },
            opt(t.x),
            opt(t.y),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<transactions>", e))?;
    Ok(())
}
