//! CSV and JSON persistence for count records.
//!
//! Column order is fixed: `k,s,N,method,count,seconds,threads,seed`. Counts are
//! decimal strings so 128-bit values survive every reader.

use pv_core::counting::{CountRecord, Method};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Row {
    k: u32,
    s: u32,
    #[serde(rename = "N")]
    n: u32,
    method: Method,
    count: String,
    seconds: f64,
    threads: usize,
    seed: Option<u64>,
}

impl From<&CountRecord> for Row {
    fn from(r: &CountRecord) -> Self {
        Row {
            k: r.k,
            s: r.s,
            n: r.n,
            method: r.method,
            count: r.count.to_string(),
            seconds: r.seconds,
            threads: r.threads,
            seed: r.seed,
        }
    }
}

impl TryFrom<Row> for CountRecord {
    type Error = CliError;

    fn try_from(r: Row) -> Result<Self, CliError> {
        let count = r
            .count
            .trim()
            .parse::<u128>()
            .map_err(|_| CliError::Usage(format!("count '{}' is not a nonnegative integer", r.count)))?;
        Ok(CountRecord {
            k: r.k,
            s: r.s,
            n: r.n,
            method: r.method,
            count,
            seconds: r.seconds,
            threads: r.threads,
            seed: r.seed,
        })
    }
}

pub fn to_csv(records: &[CountRecord]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(Row::from(r)).map_err(|e| CliError::Failure(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Failure(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Failure(e.to_string()))
}

pub fn from_csv(text: &str) -> Result<Vec<CountRecord>, CliError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers().map_err(|e| CliError::Usage(format!("malformed CSV: {e}")))?;
    let expected = ["k", "s", "N", "method", "count", "seconds", "threads", "seed"];
    if headers.iter().ne(expected) {
        return Err(CliError::Usage(format!(
            "malformed CSV: header must be {}",
            expected.join(",")
        )));
    }
    r.deserialize::<Row>()
        .map(|row| {
            row.map_err(|e| CliError::Usage(format!("malformed CSV: {e}")))
                .and_then(CountRecord::try_from)
        })
        .collect()
}

pub fn to_json(records: &[CountRecord]) -> Result<String, CliError> {
    let rows: Vec<Row> = records.iter().map(Row::from).collect();
    let mut s = serde_json::to_string_pretty(&rows).map_err(|e| CliError::Failure(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn from_json(text: &str) -> Result<Vec<CountRecord>, CliError> {
    let rows: Vec<Row> =
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("malformed JSON: {e}")))?;
    rows.into_iter().map(CountRecord::try_from).collect()
}
