//! Series input from CSV.

use std::path::{Path, PathBuf};

use aldar_core::SeriesSample;
use serde::Serialize;

use crate::config::Config;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeaderMode {
    Auto,
    Present,
    Absent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataOptions {
    pub path: PathBuf,
    /// Header name or 1-based index; the last column when unset.
    pub column: Option<String>,
    pub header: HeaderMode,
    /// Header name, 1-based index or `none`; detected when unset.
    pub date_column: Option<String>,
    /// Treat values as prices and use `100·Δln p`.
    pub log_returns: bool,
    /// Subtract the full-sample mean.
    pub center: bool,
}

pub const DATA_KEYS: &[&str] = &["data", "column", "header", "date_column", "log_returns", "center"];

impl DataOptions {
    pub fn from_config(cfg: &Config) -> CliResult<Self> {
        let path = cfg.path("data").ok_or_else(|| CliError::Usage("missing required key `data`".into()))?;
        let header = match cfg.str("header").unwrap_or("auto") {
            "auto" => HeaderMode::Auto,
            "true" | "yes" => HeaderMode::Present,
            "false" | "no" => HeaderMode::Absent,
            other => return Err(CliError::Parse(format!("`header`: expected auto, true or false, got `{other}`"))),
        };
        let log_returns = cfg.bool_or("log_returns", false)?;
        Ok(Self {
            path,
            column: cfg.str("column").map(String::from),
            header,
            date_column: cfg.str("date_column").map(String::from),
            log_returns,
            center: cfg.bool_or("center", log_returns)?,
        })
    }
}

/// The series handed to the model, with provenance for reports.
#[derive(Debug, Clone, Serialize)]
pub struct InputSeries {
    pub path: String,
    pub column: String,
    pub rows: usize,
    pub n: usize,
    pub log_returns: bool,
    pub centered: bool,
    /// Dates aligned with the series values, when the file has a date column.
    #[serde(skip)]
    pub dates: Option<Vec<String>>,
    pub first_date: Option<String>,
    pub last_date: Option<String>,
    #[serde(skip)]
    pub series: SeriesSample,
}

struct Row {
    line: u64,
    fields: Vec<String>,
}

fn read_rows(path: &Path) -> CliResult<Vec<Row>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::io(path, e))?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            CliError::Parse(format!("{} line {line}: {e}", path.display()))
        })?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        rows.push(Row { line, fields: rec.iter().map(String::from).collect() });
    }
    Ok(rows)
}

fn resolve_column(spec: &str, header: Option<&[String]>, width: usize, what: &str) -> CliResult<usize> {
    if let Ok(i) = spec.parse::<usize>() {
        if i == 0 || i > width {
            return Err(CliError::Usage(format!("{what} index {i} outside 1..={width}")));
        }
        return Ok(i - 1);
    }
    header
        .and_then(|h| h.iter().position(|c| c.eq_ignore_ascii_case(spec)))
        .ok_or_else(|| CliError::Usage(format!("{what} `{spec}` not found in header")))
}

pub fn read_series(opts: &DataOptions) -> CliResult<InputSeries> {
    let path = &opts.path;
    let rows = read_rows(path)?;
    let Some(first) = rows.first() else {
        return Err(CliError::Parse(format!("{}: no data rows", path.display())));
    };
    let width = first.fields.len();
    let looks_numeric = |s: &str| s.parse::<f64>().is_ok();

    let has_header = match opts.header {
        HeaderMode::Present => true,
        HeaderMode::Absent => false,
        HeaderMode::Auto => !looks_numeric(first.fields.last().map(String::as_str).unwrap_or("")),
    };
    let header = has_header.then(|| first.fields.clone());
    let data = &rows[usize::from(has_header)..];
    if data.is_empty() {
        return Err(CliError::Parse(format!("{}: no data rows after the header", path.display())));
    }

    let value_col = match &opts.column {
        Some(c) => resolve_column(c, header.as_deref(), width, "column")?,
        None => width - 1,
    };
    let date_col = match opts.date_column.as_deref() {
        Some("none") => None,
        Some(c) => Some(resolve_column(c, header.as_deref(), width, "date column")?),
        None => {
            let named = header.as_deref().and_then(|h| h.iter().position(|c| c.eq_ignore_ascii_case("date")));
            named.or_else(|| (width > 1 && value_col != 0 && !looks_numeric(&data[0].fields[0])).then_some(0))
        }
    };
    let column = header.as_ref().map(|h| h[value_col].clone()).unwrap_or_else(|| (value_col + 1).to_string());

    let mut values = Vec::with_capacity(data.len());
    let mut dates = date_col.map(|_| Vec::with_capacity(data.len()));
    for row in data {
        let cell = row.fields.get(value_col).ok_or_else(|| {
            CliError::Parse(format!("{} line {}: expected at least {} fields, found {}", path.display(), row.line, value_col + 1, row.fields.len()))
        })?;
        let v: f64 = cell
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| CliError::Parse(format!("{} line {}: cannot parse `{cell}` as a finite number", path.display(), row.line)))?;
        values.push(v);
        if let (Some(d), Some(c)) = (dates.as_mut(), date_col) {
            d.push(row.fields.get(c).cloned().unwrap_or_default());
        }
    }

    let rows_read = values.len();
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "series".into());
    let series = if opts.log_returns {
        if let Some(d) = dates.as_mut() {
            d.remove(0);
        }
        SeriesSample::from_prices(&values, opts.center, name)?
    } else {
        if opts.center {
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            values.iter_mut().for_each(|v| *v -= mean);
        }
        SeriesSample::new(values, name)?
    };
    Ok(InputSeries {
        path: path.display().to_string(),
        column,
        rows: rows_read,
        n: series.len(),
        log_returns: opts.log_returns,
        centered: opts.center,
        first_date: dates.as_ref().and_then(|d| d.first().cloned()),
        last_date: dates.as_ref().and_then(|d| d.last().cloned()),
        dates,
        series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    fn opts(path: &Path) -> DataOptions {
        DataOptions { path: path.into(), column: None, header: HeaderMode::Auto, date_column: None, log_returns: false, center: false }
    }

    #[test]
    fn single_column_without_header() {
        let f = file("1.5\n-2\n0.25\n");
        let s = read_series(&opts(f.path())).unwrap();
        assert_eq!(s.series.values, vec![1.5, -2.0, 0.25]);
        assert!(s.dates.is_none());
    }

    #[test]
    fn header_dates_and_crlf() {
        let f = file("Date,Open,Close\r\n2020-01-03,1,100\r\n2020-01-10,1,110\r\n2020-01-17,1,99\r\n");
        let s = read_series(&DataOptions { column: Some("close".into()), ..opts(f.path()) }).unwrap();
        assert_eq!(s.series.values, vec![100.0, 110.0, 99.0]);
        assert_eq!(s.dates.as_ref().unwrap()[2], "2020-01-17");
        assert_eq!(s.column, "Close");
    }

    #[test]
    fn log_returns_drop_first_date() {
        let f = file("date,price\n2020-01-03,100\n2020-01-10,110\n2020-01-17,99\n");
        let s = read_series(&DataOptions { log_returns: true, center: true, ..opts(f.path()) }).unwrap();
        assert_eq!(s.n, 2);
        assert_eq!(s.first_date.as_deref(), Some("2020-01-10"));
        assert!(s.series.values.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn bad_value_names_line() {
        let f = file("y\n1\n2\nabc\n4\n");
        let e = read_series(&opts(f.path())).unwrap_err();
        assert!(matches!(e, CliError::Parse(_)));
        assert!(e.to_string().contains("line 4"), "{e}");
    }

    #[test]
    fn missing_column_is_usage_error() {
        let f = file("a,b\n1,2\n");
        let e = read_series(&DataOptions { column: Some("close".into()), ..opts(f.path()) }).unwrap_err();
        assert!(matches!(e, CliError::Usage(_)));
    }
}
