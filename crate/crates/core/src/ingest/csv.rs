use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maps logical fields onto the column names of a particular export.
///
/// The source site renames columns from time to time, so nothing here is
/// hard-coded beyond the defaults in [`Schema::agmarknet`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schema {
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    pub date: String,
    pub commodity: String,
    pub modal_price: String,
    #[serde(default)]
    pub market: Option<String>,
    /// Market name to use when the export carries no market column
    /// (single-market downloads).
    #[serde(default)]
    pub market_name: Option<String>,
    #[serde(default)]
    pub state: Option<String>,
    #[serde(default)]
    pub district: Option<String>,
    #[serde(default)]
    pub variety: Option<String>,
    #[serde(default)]
    pub min_price: Option<String>,
    #[serde(default)]
    pub max_price: Option<String>,
    #[serde(default)]
    pub arrivals: Option<String>,
}

fn default_delimiter() -> char {
    ','
}

impl Schema {
    /// Column names of the Agmarknet price report download.
    pub fn agmarknet() -> Self {
        Schema {
            delimiter: ',',
            date: "Price Date".into(),
            commodity: "Commodity".into(),
            modal_price: "Modal Price (Rs./Quintal)".into(),
            market: Some("Market Name".into()),
            market_name: None,
            state: None,
            district: Some("District Name".into()),
            variety: Some("Variety".into()),
            min_price: Some("Min Price (Rs./Quintal)".into()),
            max_price: Some("Max Price (Rs./Quintal)".into()),
            arrivals: Some("Arrivals (Tonnes)".into()),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let schema: Schema = toml::from_str(text).map_err(|e| Error::InvalidConfig(format!("schema: {e}")))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.delimiter.is_ascii() {
            return Err(Error::InvalidConfig(format!(
                "delimiter must be a single ASCII character, got {:?}",
                self.delimiter
            )));
        }
        if self.market.is_none() && self.market_name.is_none() {
            return Err(Error::InvalidConfig(
                "schema needs either a `market` column or a fixed `market_name`".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub date: NaiveDate,
    pub state: Option<String>,
    pub district: Option<String>,
    pub market: String,
    pub commodity: String,
    pub variety: Option<String>,
    pub min_price: Option<f64>,
    pub max_price: Option<f64>,
    pub modal_price: f64,
    pub arrivals: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IssueKind {
    FieldCount { expected: usize, found: usize },
    Unreadable(String),
    BadDate(String),
    EmptyField(&'static str),
    NonNumericPrice { field: &'static str, value: String },
    NonPositivePrice(&'static str),
    PriceOrdering,
    BadArrivals(String),
}

impl fmt::Display for IssueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IssueKind::FieldCount { expected, found } => write!(f, "expected {expected} fields, found {found}"),
            IssueKind::Unreadable(e) => write!(f, "unreadable row: {e}"),
            IssueKind::BadDate(v) => write!(f, "unrecognised date {v:?}"),
            IssueKind::EmptyField(name) => write!(f, "empty {name}"),
            IssueKind::NonNumericPrice { field, value } => write!(f, "non-numeric {field} {value:?}"),
            IssueKind::NonPositivePrice(field) => write!(f, "non-positive {field}"),
            IssueKind::PriceOrdering => f.write_str("min <= modal <= max violated"),
            IssueKind::BadArrivals(v) => write!(f, "bad arrivals {v:?}"),
        }
    }
}

/// A row that could not be turned into a record. `row` is the 1-based data
/// row (the header is not counted).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseIssue {
    pub row: usize,
    pub kind: IssueKind,
}

impl fmt::Display for ParseIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "row {}: {}", self.row, self.kind)
    }
}

/// Accepts `DD/MM/YYYY` and `YYYY-MM-DD`.
pub fn parse_date(text: &str) -> Option<NaiveDate> {
    let t = text.trim();
    if t.len() != 10 {
        return None;
    }
    NaiveDate::parse_from_str(t, "%d/%m/%Y")
        .or_else(|_| NaiveDate::parse_from_str(t, "%Y-%m-%d"))
        .ok()
}

struct Columns {
    date: usize,
    commodity: usize,
    modal: usize,
    market: Option<usize>,
    state: Option<usize>,
    district: Option<usize>,
    variety: Option<usize>,
    min: Option<usize>,
    max: Option<usize>,
    arrivals: Option<usize>,
}

fn resolve_columns(header: &csv::StringRecord, schema: &Schema) -> Result<Columns> {
    let mut missing = Vec::new();
    let mut find = |name: &str| {
        let pos = header.iter().position(|h| h.trim() == name);
        if pos.is_none() {
            missing.push(name.to_string());
        }
        pos
    };
    let date = find(&schema.date);
    let commodity = find(&schema.commodity);
    let modal = find(&schema.modal_price);
    let mut optional = |name: &Option<String>| name.as_deref().and_then(&mut find);
    let market = optional(&schema.market);
    let state = optional(&schema.state);
    let district = optional(&schema.district);
    let variety = optional(&schema.variety);
    let min = optional(&schema.min_price);
    let max = optional(&schema.max_price);
    let arrivals = optional(&schema.arrivals);
    if !missing.is_empty() {
        return Err(Error::MissingColumns(missing));
    }
    Ok(Columns {
        date: date.unwrap(),
        commodity: commodity.unwrap(),
        modal: modal.unwrap(),
        market,
        state,
        district,
        variety,
        min,
        max,
        arrivals,
    })
}

fn text(row: &csv::StringRecord, col: Option<usize>) -> Option<String> {
    col.and_then(|c| row.get(c))
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
}

fn price(row: &csv::StringRecord, col: usize, field: &'static str) -> std::result::Result<Option<f64>, IssueKind> {
    let raw = row.get(col).unwrap_or("").trim();
    if raw.is_empty() {
        return Ok(None);
    }
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => {
            if v > 0.0 {
                Ok(Some(v))
            } else {
                Err(IssueKind::NonPositivePrice(field))
            }
        }
        _ => Err(IssueKind::NonNumericPrice {
            field,
            value: raw.to_string(),
        }),
    }
}

fn record_from_row(row: &csv::StringRecord, cols: &Columns, schema: &Schema) -> std::result::Result<RawRecord, IssueKind> {
    let date_text = row.get(cols.date).unwrap_or("");
    let date = parse_date(date_text).ok_or_else(|| IssueKind::BadDate(date_text.trim().to_string()))?;
    let commodity = text(row, Some(cols.commodity)).ok_or(IssueKind::EmptyField("commodity"))?;
    let market = match cols.market {
        Some(c) => text(row, Some(c)).ok_or(IssueKind::EmptyField("market"))?,
        None => schema.market_name.clone().unwrap_or_default(),
    };
    let modal_price = price(row, cols.modal, "modal_price")?.ok_or(IssueKind::EmptyField("modal_price"))?;
    let min_price = match cols.min {
        Some(c) => price(row, c, "min_price")?,
        None => None,
    };
    let max_price = match cols.max {
        Some(c) => price(row, c, "max_price")?,
        None => None,
    };
    if let (Some(lo), Some(hi)) = (min_price, max_price) {
        if !(lo <= modal_price && modal_price <= hi) {
            return Err(IssueKind::PriceOrdering);
        }
    }
    let arrivals = match cols.arrivals.and_then(|c| row.get(c)).map(str::trim) {
        None | Some("") | Some("-") | Some("NR") | Some("N/A") => None,
        Some(v) => match v.parse::<f64>() {
            Ok(a) if a.is_finite() && a >= 0.0 => Some(a),
            _ => return Err(IssueKind::BadArrivals(v.to_string())),
        },
    };
    Ok(RawRecord {
        date,
        state: text(row, cols.state),
        district: text(row, cols.district),
        market,
        commodity,
        variety: text(row, cols.variety),
        min_price,
        max_price,
        modal_price,
        arrivals,
    })
}

/// Parse a delimited export. Malformed rows become [`ParseIssue`]s; only a
/// header lacking required columns fails the whole file.
pub fn parse_csv(content: &[u8], schema: &Schema) -> Result<(Vec<RawRecord>, Vec<ParseIssue>)> {
    schema.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter as u8)
        .flexible(true)
        .has_headers(true)
        .from_reader(content);
    let header = reader.headers()?.clone();
    let cols = resolve_columns(&header, schema)?;

    let mut records = Vec::new();
    let mut issues = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                issues.push(ParseIssue {
                    row: row_no,
                    kind: IssueKind::Unreadable(e.to_string()),
                });
                continue;
            }
        };
        if row.len() != header.len() {
            issues.push(ParseIssue {
                row: row_no,
                kind: IssueKind::FieldCount {
                    expected: header.len(),
                    found: row.len(),
                },
            });
            continue;
        }
        match record_from_row(&row, &cols, schema) {
            Ok(r) => records.push(r),
            Err(kind) => issues.push(ParseIssue { row: row_no, kind }),
        }
    }
    Ok((records, issues))
}
