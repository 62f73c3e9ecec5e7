use std::fmt::Write as _;
use std::io::Write;

use serde_json::Value;

use crate::ingest::{Format, NA};

/// Rounds the shortest decimal representation of `x` to `decimals` places,
/// ties to even. Working on the decimal string means a value printed as
/// `0.0625` is treated as an exact tie.
pub fn round_half_even(x: f64, decimals: usize) -> String {
    assert!(x.is_finite(), "cannot render non-finite value {x}");
    let s = x.abs().to_string();
    let (int, frac) = s.split_once('.').unwrap_or((&s, ""));
    let mut digits: Vec<u8> = int.bytes().chain(frac.bytes()).map(|b| b - b'0').collect();
    let int_len = int.len();
    // pad so there are at least `decimals` fraction digits
    digits.resize(digits.len().max(int_len + decimals), 0);
    let keep = int_len + decimals;
    let round_up = match digits.get(keep) {
        None => false,
        Some(&d) if d > 5 => true,
        Some(&d) if d < 5 => false,
        Some(_) => {
            let rest_nonzero = digits[keep + 1..].iter().any(|&d| d != 0);
            let last_odd = keep > 0 && digits[keep - 1] % 2 == 1;
            rest_nonzero || last_odd
        }
    };
    digits.truncate(keep);
    let mut int_len = int_len;
    if round_up {
        let mut i = digits.len();
        loop {
            if i == 0 {
                digits.insert(0, 1);
                int_len += 1;
                break;
            }
            i -= 1;
            if digits[i] == 9 {
                digits[i] = 0;
            } else {
                digits[i] += 1;
                break;
            }
        }
    }
    let mut out = String::new();
    if x.is_sign_negative() && digits.iter().any(|&d| d != 0) {
        out.push('-');
    }
    for d in &digits[..int_len] {
        out.push((b'0' + d) as char);
    }
    if decimals > 0 {
        out.push('.');
        for d in &digits[int_len..] {
            out.push((b'0' + d) as char);
        }
    }
    out
}

pub fn format_number(v: Option<f64>, decimals: usize) -> String {
    v.map_or_else(|| NA.to_string(), |x| round_half_even(x, decimals))
}

/// Decimal places for dimensions, ratios and their statistics.
pub const VALUE_DECIMALS: usize = 3;
/// Decimal places for correlation coefficients.
pub const CORRELATION_DECIMALS: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Integer(Option<u64>),
    Number { value: Option<f64>, decimals: usize },
    Empty,
}

impl Cell {
    pub fn text(s: impl Into<String>) -> Self {
        Cell::Text(s.into())
    }

    pub fn value(v: Option<f64>) -> Self {
        Cell::Number {
            value: v,
            decimals: VALUE_DECIMALS,
        }
    }

    pub fn render(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Integer(v) => v.map_or_else(|| NA.to_string(), |n| n.to_string()),
            Cell::Number { value, decimals } => format_number(*value, *decimals),
            Cell::Empty => String::new(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Integer(v) => v.map_or(Value::Null, Value::from),
            // the rounded decimal string, re-read, so JSON and CSV agree
            Cell::Number {
                value: Some(x),
                decimals,
            } => Value::from(
                round_half_even(*x, *decimals)
                    .parse::<f64>()
                    .expect("rendered numbers parse"),
            ),
            Cell::Number { value: None, .. } => Value::Null,
            Cell::Empty => Value::from(""),
        }
    }

    fn is_numeric(&self) -> bool {
        matches!(self, Cell::Integer(_) | Cell::Number { .. })
    }
}

/// A rendered table: named columns, rows of cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl ReportTable {
    pub fn new(columns: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write(&self, writer: impl Write, format: Format) -> std::io::Result<()> {
        match format {
            Format::Csv => self.write_csv(writer),
            Format::Json => self.write_json(writer),
        }
    }

    pub fn write_csv(&self, writer: impl Write) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()
    }

    /// `{"columns": [...], "rows": [[...], ...]}`; column order is kept.
    pub fn write_json(&self, mut writer: impl Write) -> std::io::Result<()> {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Array(r.iter().map(Cell::to_json).collect()))
            .collect();
        let doc = serde_json::json!({ "columns": self.columns, "rows": rows });
        serde_json::to_writer_pretty(&mut writer, &doc)?;
        writer.write_all(b"\n")
    }

    /// Space-aligned columns; numbers right-aligned, text left-aligned.
    pub fn to_text(&self) -> String {
        let rendered: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(Cell::render).collect()).collect();
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|c| {
                rendered
                    .iter()
                    .map(|r| r[c].chars().count())
                    .chain([self.columns[c].chars().count()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let numeric: Vec<bool> = (0..self.columns.len())
            .map(|c| self.rows.iter().all(|r| r[c].is_numeric() || r[c] == Cell::Empty) && !self.rows.is_empty())
            .collect();
        let mut out = String::new();
        let line = |out: &mut String, cells: &[String]| {
            let parts: Vec<String> = cells
                .iter()
                .enumerate()
                .map(|(c, s)| {
                    if numeric[c] {
                        format!("{s:>w$}", w = widths[c])
                    } else {
                        format!("{s:<w$}", w = widths[c])
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(&mut out, &self.columns);
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        let _ = writeln!(out, "{}", rule.join("  "));
        for r in &rendered {
            line(&mut out, r);
        }
        out
    }
}
