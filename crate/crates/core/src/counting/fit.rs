use serde::Serialize;

use super::CountRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub stderr: f64,
    pub points: usize,
}

/// Least-squares slope of `ln count` against `ln N`.
///
/// Requires at least three records sharing `(k, s, method)` with distinct `N`.
pub fn exponent_fit(records: &[CountRecord]) -> Result<ExponentFit> {
    if records.len() < 3 {
        return Err(Error::invalid(format!(
            "exponent fit needs at least 3 records, got {}",
            records.len()
        )));
    }
    let first = &records[0];
    if records
        .iter()
        .any(|r| (r.k, r.s, r.method) != (first.k, first.s, first.method))
    {
        return Err(Error::invalid("records must share k, s and method"));
    }
    let mut ns: Vec<u32> = records.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() != records.len() {
        return Err(Error::invalid("records must have distinct N"));
    }
    if records.iter().any(|r| r.n == 0 || r.count == 0) {
        return Err(Error::invalid("N and count must be positive"));
    }

    let xs: Vec<f64> = records.iter().map(|r| f64::from(r.n).ln()).collect();
    let ys: Vec<f64> = records.iter().map(|r| (r.count as f64).ln()).collect();
    let m = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / m;
    let ybar = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let stderr = (ssr / (m - 2.0) / sxx).sqrt();
    Ok(ExponentFit {
        slope,
        stderr,
        points: records.len(),
    })
}
