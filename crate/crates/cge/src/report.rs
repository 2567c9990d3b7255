//! JSON, JSON-lines and CSV report emission.

use std::collections::BTreeMap;

use serde::Serialize;

pub const TOOL: &str = "cge";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("no records to emit")]
    Empty,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Top-level report: tool identity, resolved configuration and result.
#[derive(Debug, Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config: &'a BTreeMap<String, String>,
    pub field_hash: Option<&'a str>,
    pub pass: Option<bool>,
    pub result: &'a T,
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(
    command: &str,
    config: &BTreeMap<String, String>,
    field_hash: Option<&str>,
    pass: Option<bool>,
    result: &T,
) -> Result<String, ReportError> {
    let env = Envelope { tool: TOOL, version: VERSION, command, config, field_hash, pass, result };
    let mut s = serde_json::to_string_pretty(&env)?;
    s.push('\n');
    Ok(s)
}

/// One compact JSON object per line.
pub fn to_jsonl<T: Serialize>(records: &[T]) -> Result<String, ReportError> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

fn csv_string<T: Serialize>(rows: &[T]) -> Result<String, ReportError> {
    if rows.is_empty() {
        return Err(ReportError::Empty);
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub field: String,
    /// The swept parameter (Λ, generation, seed, ...).
    pub param: f64,
    pub theta: f64,
    pub log_ratio: Option<f64>,
    pub pass: bool,
}

/// Summary CSV: `field, param, theta, log_ratio, pass`.
pub fn summary_csv(rows: &[SummaryRow]) -> Result<String, ReportError> {
    csv_string(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlotPoint {
    pub x: f64,
    pub y: f64,
    pub series: String,
    pub field_hash: String,
}

/// Plot data with columns `x, y, series, field_hash`.
pub fn plot_csv(points: &[PlotPoint]) -> Result<String, ReportError> {
    csv_string(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plot_columns_and_empty_input() {
        assert!(matches!(plot_csv(&[]), Err(ReportError::Empty)));
        let pts = [
            PlotPoint { x: 1.0, y: 0.127, series: "sharpness".into(), field_hash: "ab".into() },
            PlotPoint { x: 2.0, y: 0.252, series: "a,b".into(), field_hash: "cd".into() },
        ];
        let s = plot_csv(&pts).unwrap();
        assert_eq!(s, "x,y,series,field_hash\r\n1.0,0.127,sharpness,ab\r\n2.0,0.252,\"a,b\",cd\r\n");
    }

    #[test]
    fn summary_and_json() {
        let row = SummaryRow { field: "f".into(), param: 4.0, theta: 4.0, log_ratio: None, pass: true };
        assert_eq!(summary_csv(&[row.clone()]).unwrap(), "field,param,theta,log_ratio,pass\r\n f,4.0,4.0,,true\r\n".replace(' ', ""));
        let cfg = BTreeMap::from([("s".to_string(), "0.4".to_string())]);
        let a = to_json("audit", &cfg, Some("00"), Some(true), &row).unwrap();
        assert_eq!(a, to_json("audit", &cfg, Some("00"), Some(true), &row).unwrap());
        let v: serde_json::Value = serde_json::from_str(&a).unwrap();
        assert_eq!(v["tool"], "cge");
        assert_eq!(v["config"]["s"], "0.4");
        assert_eq!(to_jsonl(&[1, 2]).unwrap(), "1\n2\n");
    }
}
