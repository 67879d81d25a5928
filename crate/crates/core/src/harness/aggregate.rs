use super::output::trace_columns;
use crate::error::{Error, Result};
use crate::losses::RegretTrace;

/// z-value of a two-sided 95% normal interval.
const Z95: f64 = 1.96;

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryColumn {
    pub name: String,
    pub mean: Vec<f64>,
    /// Band edges, absent when only one trace was aggregated.
    pub lo: Option<Vec<f64>>,
    pub hi: Option<Vec<f64>>,
}

/// Per-step means across instances with 95% confidence bands.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub t: Vec<usize>,
    pub columns: Vec<SummaryColumn>,
}

impl Summary {
    pub fn column(&self, name: &str) -> Option<&SummaryColumn> {
        self.columns.iter().find(|c| c.name == name)
    }
}

pub fn aggregate(traces: &[RegretTrace]) -> Result<Summary> {
    let Some(first) = traces.first() else {
        return Err(Error::Config("nothing to aggregate".into()));
    };
    let len = first.len();
    if traces.iter().any(|t| t.len() != len) {
        return Err(Error::Dimension("traces differ in length".into()));
    }
    let k = traces.len();
    if k == 1 {
        log::warn!("a single trace has no spread; confidence bands omitted");
    }
    let per_trace: Vec<Vec<(String, Vec<Option<f64>>)>> = traces.iter().map(trace_columns).collect();

    let mut columns = Vec::new();
    for (c, (name, _)) in per_trace[0].iter().enumerate() {
        let complete = per_trace.iter().all(|cols| cols[c].1.iter().all(Option::is_some));
        if !complete {
            log::warn!("metric {name} is unavailable for some steps; omitted from the summary");
            continue;
        }
        let mut mean = vec![0.0; len];
        let mut lo = vec![0.0; len];
        let mut hi = vec![0.0; len];
        for t in 0..len {
            let vals: Vec<f64> = per_trace.iter().map(|cols| cols[c].1[t].expect("checked")).collect();
            let m = vals.iter().sum::<f64>() / k as f64;
            mean[t] = m;
            if k > 1 {
                let var = vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (k - 1) as f64;
                let half = Z95 * var.sqrt() / (k as f64).sqrt();
                lo[t] = m - half;
                hi[t] = m + half;
            }
        }
        let (lo, hi) = if k > 1 { (Some(lo), Some(hi)) } else { (None, None) };
        columns.push(SummaryColumn { name: name.clone(), mean, lo, hi });
    }
    Ok(Summary { t: first.records.iter().map(|r| r.t).collect(), columns })
}
