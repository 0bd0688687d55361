//! Tabular schemas, CSV ingestion and value type detection.

use std::fmt;
use std::fs::File;
use std::io::Read;
use std::path::Path;
use std::sync::LazyLock;

use chrono::{NaiveDate, NaiveDateTime};
use rand::seq::index;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub const DEFAULT_ROW_CAP: usize = 100;
pub const DEFAULT_TEXT_SAMPLE: usize = 20;

/// Share of non-empty cells a label needs before it is assigned to the column.
pub const COLUMN_TYPE_SHARE: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    /// Raw cells; the empty string marks a missing cell.
    pub values: Vec<String>,
}

impl Column {
    pub fn new(name: impl Into<String>, values: Vec<String>) -> Self {
        Self {
            name: name.into(),
            values,
        }
    }

    pub fn from_strs(name: &str, values: &[&str]) -> Self {
        Self::new(name, values.iter().map(|v| v.to_string()).collect())
    }

    pub fn non_empty(&self) -> impl Iterator<Item = &str> {
        self.values
            .iter()
            .map(String::as_str)
            .filter(|v| !is_missing(v))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub name: String,
    pub columns: Vec<Column>,
}

impl Schema {
    pub fn new(name: impl Into<String>, columns: Vec<Column>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::Data("schema has zero columns".into()));
        }
        Ok(Self {
            name: name.into(),
            columns,
        })
    }

    /// Builds a schema from a header and whole rows, sampling down to `row_cap` rows.
    pub fn from_rows(
        name: impl Into<String>,
        header: &[String],
        rows: Vec<Vec<String>>,
        row_cap: usize,
        seed: u64,
    ) -> Result<Self> {
        if header.is_empty() {
            return Err(Error::Data("schema has zero columns".into()));
        }
        let rows = sample_rows(rows, row_cap, seed);
        let columns = header
            .iter()
            .enumerate()
            .map(|(i, h)| {
                let name = if h.trim().is_empty() {
                    format!("col{i}")
                } else {
                    h.clone()
                };
                let values = rows
                    .iter()
                    .map(|r| r.get(i).cloned().unwrap_or_default())
                    .collect();
                Column { name, values }
            })
            .collect();
        Self::new(name, columns)
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn row_count(&self) -> usize {
        self.columns.iter().map(|c| c.values.len()).max().unwrap_or(0)
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    /// Row-major view of the cells.
    pub fn rows(&self) -> Vec<Vec<String>> {
        (0..self.row_count())
            .map(|r| {
                self.columns
                    .iter()
                    .map(|c| c.values.get(r).cloned().unwrap_or_default())
                    .collect()
            })
            .collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        writer
            .write_record(self.columns.iter().map(|c| c.name.as_str()))
            .map_err(|e| csv_error(path, e))?;
        for row in self.rows() {
            writer.write_record(&row).map_err(|e| csv_error(path, e))?;
        }
        writer.flush().map_err(|e| Error::io(path, e))
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::Io(_) => match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        },
        _ => Error::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        },
    }
}

/// Keeps a uniform random subset of whole rows, in their original order.
fn sample_rows(rows: Vec<Vec<String>>, row_cap: usize, seed: u64) -> Vec<Vec<String>> {
    if rows.len() <= row_cap {
        return rows;
    }
    let mut rng = seed::rng(seed, seed::ROW_SAMPLING);
    let mut keep = index::sample(&mut rng, rows.len(), row_cap).into_vec();
    keep.sort_unstable();
    let mut keep = keep.into_iter().peekable();
    rows.into_iter()
        .enumerate()
        .filter_map(|(i, row)| {
            if keep.peek() == Some(&i) {
                keep.next();
                Some(row)
            } else {
                None
            }
        })
        .collect()
}

/// Reads an RFC 4180 CSV file with a header row.
pub fn load_csv(path: &Path, row_cap: usize, seed: u64) -> Result<Schema> {
    if row_cap == 0 {
        return Err(Error::Config("row cap must be positive".into()));
    }
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| Error::io(path, e))?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(&text);
    if let Some(pos) = unbalanced_quote(text) {
        return Err(Error::Csv {
            path: path.to_path_buf(),
            message: format!("unterminated quoted field starting at byte {pos}"),
        });
    }

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header: Vec<String> = match records.next() {
        Some(r) => r.map_err(|e| csv_error(path, e))?.iter().map(str::to_owned).collect(),
        None => {
            return Err(Error::Csv {
                path: path.to_path_buf(),
                message: "missing header row".into(),
            })
        }
    };
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::Csv {
            path: path.to_path_buf(),
            message: "zero columns".into(),
        });
    }
    let mut rows = Vec::new();
    for record in records {
        let record = record.map_err(|e| csv_error(path, e))?;
        rows.push(record.iter().map(str::to_owned).collect());
    }

    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Schema::from_rows(name, &header, rows, row_cap, seed)
}

/// Byte offset of a quoted field that never closes, if any.
fn unbalanced_quote(text: &str) -> Option<usize> {
    let mut chars = text.char_indices().peekable();
    let mut field_start = true;
    let mut open_at = None;
    while let Some((i, c)) = chars.next() {
        if open_at.is_some() {
            if c == '"' {
                if matches!(chars.peek(), Some((_, '"'))) {
                    chars.next();
                } else {
                    open_at = None;
                    field_start = false;
                }
            }
            continue;
        }
        match c {
            '"' if field_start => open_at = Some(i),
            ',' | '\n' | '\r' => field_start = true,
            _ => field_start = false,
        }
    }
    open_at
}

pub fn is_missing(cell: &str) -> bool {
    cell.trim().is_empty()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum DataTypeLabel {
    Url,
    Numeric,
    Date,
    String,
}

impl fmt::Display for DataTypeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DataTypeLabel::Url => "URL",
            DataTypeLabel::Numeric => "NUMERIC",
            DataTypeLabel::Date => "DATE",
            DataTypeLabel::String => "STRING",
        })
    }
}

/// Date patterns accepted by [`detect_cell_type`], in chrono syntax.
pub const DATE_FORMATS: &[&str] = &[
    "%Y-%m-%d",
    "%Y/%m/%d",
    "%d-%m-%Y",
    "%d/%m/%Y",
    "%m/%d/%Y",
    "%Y-%m-%d %H:%M",
    "%Y-%m-%d %H:%M:%S",
    "%d %b %Y",
    "%b %d, %Y",
    "%d %B %Y",
    "%B %d, %Y",
];

// chrono is lenient about field widths, so each format is guarded by a shape check.
static DATE_SHAPES: LazyLock<Vec<Regex>> = LazyLock::new(|| {
    [
        r"^\d{4}-\d{1,2}-\d{1,2}$",
        r"^\d{4}/\d{1,2}/\d{1,2}$",
        r"^\d{1,2}-\d{1,2}-\d{4}$",
        r"^\d{1,2}/\d{1,2}/\d{4}$",
        r"^\d{1,2}/\d{1,2}/\d{4}$",
        r"^\d{4}-\d{1,2}-\d{1,2} \d{1,2}:\d{2}$",
        r"^\d{4}-\d{1,2}-\d{1,2} \d{1,2}:\d{2}:\d{2}$",
        r"^\d{1,2} [A-Za-z]{3} \d{4}$",
        r"^[A-Za-z]{3} \d{1,2}, \d{4}$",
        r"^\d{1,2} [A-Za-z]{4,9} \d{4}$",
        r"^[A-Za-z]{4,9} \d{1,2}, \d{4}$",
    ]
    .iter()
    .map(|p| Regex::new(p).unwrap())
    .collect()
});

static DECIMAL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$").unwrap());

pub fn is_date(cell: &str) -> bool {
    let cell = cell.trim();
    DATE_FORMATS.iter().zip(DATE_SHAPES.iter()).any(|(fmt, shape)| {
        shape.is_match(cell)
            && if fmt.contains("%H") {
                NaiveDateTime::parse_from_str(cell, fmt).is_ok()
            } else {
                NaiveDate::parse_from_str(cell, fmt).is_ok()
            }
    })
}

pub fn is_url(cell: &str) -> bool {
    let lower = cell.trim().to_ascii_lowercase();
    ["http://", "https://", "ftp://"].iter().any(|scheme| {
        lower.strip_prefix(scheme).is_some_and(|rest| {
            let authority = rest.split(['/', '?', '#']).next().unwrap_or("");
            !authority.is_empty() && !authority.chars().any(char::is_whitespace)
        })
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParsedNumber {
    pub value: f64,
    pub currency: Option<char>,
}

const CURRENCY_SYMBOLS: [char; 4] = ['$', '€', '£', '¥'];

/// Parses a numeric cell: optional sign, one currency symbol, thousands commas, `%` suffix.
pub fn parse_number(cell: &str) -> Option<ParsedNumber> {
    let mut s = cell.trim();
    let mut negative = false;
    let mut signed = false;
    let mut take_sign = |s: &mut &str| {
        if let Some(rest) = s.strip_prefix('-') {
            negative = true;
            *s = rest;
            true
        } else if let Some(rest) = s.strip_prefix('+') {
            *s = rest;
            true
        } else {
            false
        }
    };
    signed |= take_sign(&mut s);
    let mut currency = None;
    if let Some(c) = s.chars().next().filter(|c| CURRENCY_SYMBOLS.contains(c)) {
        currency = Some(c);
        s = &s[c.len_utf8()..];
        if !signed {
            take_sign(&mut s);
        }
    }
    let s = s.strip_suffix('%').unwrap_or(s);
    let digits: String = s.chars().filter(|&c| c != ',').collect();
    if !DECIMAL.is_match(&digits) {
        return None;
    }
    let value: f64 = digits.parse().ok()?;
    if !value.is_finite() {
        return None;
    }
    Some(ParsedNumber {
        value: if negative { -value } else { value },
        currency,
    })
}

pub fn detect_cell_type(cell: &str) -> DataTypeLabel {
    if is_missing(cell) {
        DataTypeLabel::String
    } else if is_url(cell) {
        DataTypeLabel::Url
    } else if is_date(cell) {
        DataTypeLabel::Date
    } else if parse_number(cell).is_some() {
        DataTypeLabel::Numeric
    } else {
        DataTypeLabel::String
    }
}

pub fn detect_column_type(col: &Column) -> DataTypeLabel {
    let (mut total, mut url, mut date, mut numeric) = (0usize, 0usize, 0usize, 0usize);
    for cell in col.non_empty() {
        total += 1;
        match detect_cell_type(cell) {
            DataTypeLabel::Url => url += 1,
            DataTypeLabel::Date => date += 1,
            DataTypeLabel::Numeric => numeric += 1,
            DataTypeLabel::String => {}
        }
    }
    if total == 0 {
        return DataTypeLabel::String;
    }
    let share = |n: usize| n as f64 / total as f64 >= COLUMN_TYPE_SHARE;
    if share(url) {
        DataTypeLabel::Url
    } else if share(date) {
        DataTypeLabel::Date
    } else if share(numeric) {
        DataTypeLabel::Numeric
    } else {
        DataTypeLabel::String
    }
}

/// Uniform sample without replacement of up to `k` non-empty cells, in column order.
pub fn sample_text_values(col: &Column, k: usize, seed: u64) -> Vec<String> {
    let cells: Vec<&str> = col.non_empty().collect();
    if cells.len() <= k {
        return cells.into_iter().map(str::to_owned).collect();
    }
    let mut rng = seed::rng(seed, seed::VALUE_SAMPLING);
    let mut picked = index::sample(&mut rng, cells.len(), k).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| cells[i].to_owned()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_small_table() {
        let mut text = String::from("a,b,c\n");
        for i in 0..10 {
            text.push_str(&format!("{i},x{i},\"q, {i}\"\n"));
        }
        let f = write_tmp(&text);
        let s = load_csv(f.path(), 100, 1).unwrap();
        assert_eq!(s.len(), 3);
        assert!(s.columns.iter().all(|c| c.values.len() == 10));
        assert_eq!(s.columns[2].values[3], "q, 3");
    }

    #[test]
    fn empty_header_cells_are_named_by_index() {
        let f = write_tmp("a,,b\n1,2,3\n");
        let s = load_csv(f.path(), 100, 1).unwrap();
        assert_eq!(s.column_names(), vec!["a", "col1", "b"]);
    }

    #[test]
    fn row_sampling_is_deterministic_and_aligned() {
        let mut text = String::from("k,v\n");
        for i in 0..50 {
            text.push_str(&format!("{i},v{i}\n"));
        }
        let f = write_tmp(&text);
        let a = load_csv(f.path(), 5, 9).unwrap();
        let b = load_csv(f.path(), 5, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.row_count(), 5);
        for (k, v) in a.columns[0].values.iter().zip(&a.columns[1].values) {
            assert_eq!(format!("v{k}"), *v);
        }
    }

    #[test]
    fn embedded_newlines_are_kept() {
        let f = write_tmp("a,b\n\"line1\nline2\",2\n");
        let s = load_csv(f.path(), 100, 1).unwrap();
        assert_eq!(s.columns[0].values, vec!["line1\nline2"]);
    }

    #[test]
    fn unbalanced_quotes_are_rejected() {
        let f = write_tmp("a,b\n\"open,2\n3,4\n");
        assert!(matches!(load_csv(f.path(), 100, 1), Err(Error::Csv { .. })));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_csv(Path::new("/nonexistent/x.csv"), 100, 1).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("/nonexistent/x.csv"));
    }

    #[test]
    fn empty_file_has_no_columns() {
        let f = write_tmp("");
        assert!(load_csv(f.path(), 100, 1).is_err());
    }

    #[test]
    fn cell_types() {
        assert_eq!(detect_cell_type("https://www.dcard.tw/f"), DataTypeLabel::Url);
        assert_eq!(detect_cell_type("ftp://host"), DataTypeLabel::Url);
        assert_eq!(detect_cell_type("http://"), DataTypeLabel::String);
        assert_eq!(detect_cell_type("$199"), DataTypeLabel::Numeric);
        assert_eq!(detect_cell_type("-$1,250.50"), DataTypeLabel::Numeric);
        assert_eq!(detect_cell_type("12.5%"), DataTypeLabel::Numeric);
        assert_eq!(detect_cell_type("2023-05-01"), DataTypeLabel::Date);
        assert_eq!(detect_cell_type("2023-05-01 13:45"), DataTypeLabel::Date);
        assert_eq!(detect_cell_type("5 Mar 2021"), DataTypeLabel::Date);
        assert_eq!(detect_cell_type("March 5, 2021"), DataTypeLabel::Date);
        assert_eq!(detect_cell_type("2023"), DataTypeLabel::Numeric);
        assert_eq!(detect_cell_type("2023-13-01"), DataTypeLabel::String);
        assert_eq!(detect_cell_type("inf"), DataTypeLabel::String);
        assert_eq!(detect_cell_type("NaN"), DataTypeLabel::String);
        assert_eq!(detect_cell_type(""), DataTypeLabel::String);
        assert_eq!(detect_cell_type("hello"), DataTypeLabel::String);
    }

    #[test]
    fn iso_date_matches_exactly_one_format() {
        // Enumerate the format list with chrono directly.
        let hits = DATE_FORMATS
            .iter()
            .filter(|f| {
                NaiveDate::parse_from_str("2023-05-01", f).is_ok()
                    || NaiveDateTime::parse_from_str("2023-05-01", f).is_ok()
            })
            .count();
        assert_eq!(hits, 1);
    }

    #[test]
    fn currency_is_reported() {
        let p = parse_number("$199").unwrap();
        assert_eq!(p.value, 199.0);
        assert_eq!(p.currency, Some('$'));
        assert_eq!(parse_number("1,000").unwrap().value, 1000.0);
        assert_eq!(parse_number("-3").unwrap().value, -3.0);
    }

    #[test]
    fn column_types() {
        let c = Column::from_strs("like", &["4123", "281842", "13"]);
        assert_eq!(detect_column_type(&c), DataTypeLabel::Numeric);
        let c = Column::from_strs("x", &["a", "b", "c"]);
        assert_eq!(detect_column_type(&c), DataTypeLabel::String);
        let c = Column::from_strs("x", &["1", "2", "x", "y"]);
        assert_eq!(detect_column_type(&c), DataTypeLabel::String);
        let c = Column::from_strs("x", &["", " "]);
        assert_eq!(detect_column_type(&c), DataTypeLabel::String);
        // Digit-only dates must not fall through to numeric.
        let c = Column::from_strs("d", &["2020-01-01", "2021-02-03", ""]);
        assert_eq!(detect_column_type(&c), DataTypeLabel::Date);
    }

    #[test]
    fn text_sampling() {
        let c = Column::from_strs("x", &["a", "", "b", "c", "d", "e"]);
        assert_eq!(sample_text_values(&c, 20, 1), vec!["a", "b", "c", "d", "e"]);
        let c = Column::from_strs("x", &["a"]);
        assert_eq!(sample_text_values(&c, 1, 3), vec!["a"]);
        let values: Vec<String> = (0..100).map(|i| format!("v{i}")).collect();
        let c = Column::new("x", values);
        let a = sample_text_values(&c, 20, 5);
        assert_eq!(a.len(), 20);
        assert_eq!(a, sample_text_values(&c, 20, 5));
        let mut uniq = a.clone();
        uniq.dedup();
        assert_eq!(uniq.len(), 20);
    }
}
