//! CSV and SVG writers for traces and summaries.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use super::aggregate::{Summary, SummaryColumn};
use crate::error::{Error, Result};
use crate::losses::{LossKind, LossSeries, RegretTrace};

/// A named column with a value per step; `None` where undefined.
type Column = (String, Vec<Option<f64>>);

fn series_columns(
    records: &[crate::losses::LossRecord],
    series: &[LossSeries; 4],
    suffix: &str,
) -> (Vec<Column>, Vec<Column>) {
    let losses = LossKind::ALL
        .iter()
        .map(|k| (format!("loss_{}{suffix}", k.name()), records.iter().map(|r| Some(r.get(*k))).collect()))
        .collect();
    let regrets = LossKind::ALL
        .iter()
        .zip(series)
        .map(|(k, s)| (format!("avg_regret_{}{suffix}", k.name()), s.avg_regret.clone()))
        .collect();
    (losses, regrets)
}

/// Every per-step metric of a trace, in output order. Entries are `None`
/// where a regret is unavailable.
pub fn trace_columns(trace: &RegretTrace) -> Vec<Column> {
    let (mut cols, regrets) = series_columns(&trace.records, &trace.series, "");
    cols.extend(regrets);
    cols.push(("step_ms".into(), trace.step_ms.iter().map(|v| Some(*v)).collect()));
    if let Some((recs, series)) = &trace.attrue {
        let (l, r) = series_columns(recs, series, "_attrue");
        cols.extend(l);
        cols.extend(r);
    }
    cols
}

fn num(v: f64) -> String {
    // Display for f64 is the shortest string that parses back exactly.
    v.to_string()
}

/// One row per (instance, t). Columns unavailable for every instance are
/// dropped with a warning.
pub fn write_traces_csv<W: Write>(out: W, traces: &[RegretTrace]) -> Result<()> {
    let Some(first) = traces.first() else {
        return Err(Error::Config("no traces to write".into()));
    };
    let template = trace_columns(first);
    let keep: Vec<bool> = (0..template.len())
        .map(|c| traces.iter().any(|tr| trace_columns(tr)[c].1.iter().any(Option::is_some)))
        .collect();
    for (c, (name, _)) in template.iter().enumerate() {
        if !keep[c] {
            log::warn!("column {name} has no values; omitted");
        }
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let mut header = vec!["instance".to_string(), "t".to_string()];
    header.extend(template.iter().zip(&keep).filter(|(_, k)| **k).map(|((n, _), _)| n.clone()));
    w.write_record(&header)?;
    for tr in traces {
        let cols = trace_columns(tr);
        for (i, rec) in tr.records.iter().enumerate() {
            let mut row = vec![tr.instance.to_string(), rec.t.to_string()];
            for (c, (_, vals)) in cols.iter().enumerate() {
                if keep[c] {
                    row.push(vals[i].map(num).unwrap_or_default());
                }
            }
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `t` then `<metric>_mean`, `<metric>_lo`, `<metric>_hi` per metric.
pub fn write_summary_csv<W: Write>(out: W, summary: &Summary) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let mut header = vec!["t".to_string()];
    for c in &summary.columns {
        header.push(format!("{}_mean", c.name));
        if c.lo.is_some() {
            header.push(format!("{}_lo", c.name));
            header.push(format!("{}_hi", c.name));
        }
    }
    w.write_record(&header)?;
    for (i, t) in summary.t.iter().enumerate() {
        let mut row = vec![t.to_string()];
        for c in &summary.columns {
            row.push(num(c.mean[i]));
            if let (Some(lo), Some(hi)) = (&c.lo, &c.hi) {
                row.push(num(lo[i]));
                row.push(num(hi[i]));
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary_csv(path: &Path) -> Result<Summary> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let parse = |s: &str, line: usize| -> Result<f64> {
        s.parse().map_err(|_| Error::Parse { line, msg: format!("bad number {s:?}") })
    };
    let mut t = Vec::new();
    let mut raw: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        t.push(rec[0].parse().map_err(|_| Error::Parse { line: line + 2, msg: "bad step".into() })?);
        for c in 1..header.len() {
            raw[c].push(parse(&rec[c], line + 2)?);
        }
    }
    let mut columns: Vec<SummaryColumn> = Vec::new();
    for (c, h) in header.iter().enumerate().skip(1) {
        let vals = std::mem::take(&mut raw[c]);
        if let Some(name) = h.strip_suffix("_mean") {
            columns.push(SummaryColumn { name: name.to_string(), mean: vals, lo: None, hi: None });
        } else if h.ends_with("_lo") {
            columns.last_mut().ok_or_else(|| Error::Parse { line: 1, msg: "orphan band".into() })?.lo = Some(vals);
        } else if h.ends_with("_hi") {
            columns.last_mut().ok_or_else(|| Error::Parse { line: 1, msg: "orphan band".into() })?.hi = Some(vals);
        } else {
            return Err(Error::Parse { line: 1, msg: format!("unexpected column {h:?}") });
        }
    }
    Ok(Summary { t, columns })
}

#[derive(Debug, Clone)]
pub struct PlotSpec {
    pub title: String,
    pub metrics: Vec<String>,
    pub log_scale: bool,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN: f64 = 60.0;

/// Line plot of summary means with shaded bands.
///
/// On a log axis non-positive values are drawn at a floor one decade below
/// the smallest positive value; the floor is stored in the root element's
/// `data-log-floor` attribute and mentioned in the legend.
pub fn render_svg(summary: &Summary, spec: &PlotSpec) -> Result<String> {
    let cols: Vec<&SummaryColumn> = spec
        .metrics
        .iter()
        .filter_map(|m| {
            let c = summary.column(m);
            if c.is_none() {
                log::warn!("metric {m} not in summary; skipped in plot");
            }
            c
        })
        .collect();
    if cols.is_empty() || summary.t.is_empty() {
        return Err(Error::Config("nothing to plot".into()));
    }
    let all_vals =
        cols.iter().flat_map(|c| c.mean.iter().chain(c.lo.iter().flatten()).chain(c.hi.iter().flatten()).cloned());
    let vals: Vec<f64> = all_vals.collect();
    let min_pos = vals.iter().cloned().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
    let floor = if min_pos.is_finite() { min_pos / 10.0 } else { 1e-12 };
    let clamped = vals.iter().any(|v| *v <= 0.0);
    let tf = |v: f64| if spec.log_scale { v.max(floor).log10() } else { v };
    let ys: Vec<f64> = vals.iter().map(|v| tf(*v)).collect();
    let (mut ymin, mut ymax) = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    if ymax - ymin < 1e-12 {
        ymin -= 0.5;
        ymax += 0.5;
    }
    let (t0, t1) = (summary.t[0] as f64, *summary.t.last().expect("nonempty") as f64);
    let tspan = if t1 > t0 { t1 - t0 } else { 1.0 };
    let px = |t: f64| MARGIN + (t - t0) / tspan * (WIDTH - 2.0 * MARGIN);
    let py = |v: f64| HEIGHT - MARGIN - (tf(v) - ymin) / (ymax - ymin) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    write!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}""#
    )
    .ok();
    if spec.log_scale {
        write!(s, r#" data-log-floor="{floor}""#).ok();
    }
    s.push_str(">\n");
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).ok();
    writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
        WIDTH / 2.0,
        xml_escape(&spec.title)
    )
    .ok();
    let (x0, x1, yb, yt) = (MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, MARGIN);
    writeln!(s, r#"<path d="M{x0} {yt} L{x0} {yb} L{x1} {yb}" stroke="black" fill="none"/>"#).ok();
    let ylabel = |v: f64| if spec.log_scale { format!("1e{v:.1}") } else { format!("{v:.3e}") };
    for (v, y) in [(ymin, yb), (ymax, yt)] {
        writeln!(
            s,
            r#"<text x="{}" y="{y}" text-anchor="end" font-family="sans-serif" font-size="11">{}</text>"#,
            x0 - 4.0,
            ylabel(v)
        )
        .ok();
    }
    writeln!(s, r#"<text x="{x0}" y="{}" font-family="sans-serif" font-size="11">t = {t0}</text>"#, yb + 16.0).ok();
    writeln!(
        s,
        r#"<text x="{x1}" y="{}" text-anchor="end" font-family="sans-serif" font-size="11">t = {t1}</text>"#,
        yb + 16.0
    )
    .ok();

    for (ci, c) in cols.iter().enumerate() {
        let color = PALETTE[ci % PALETTE.len()];
        if let (Some(lo), Some(hi)) = (&c.lo, &c.hi) {
            let mut d = String::new();
            for (i, t) in summary.t.iter().enumerate() {
                write!(d, "{}{:.3} {:.3} ", if i == 0 { "M" } else { "L" }, px(*t as f64), py(hi[i])).ok();
            }
            for (i, t) in summary.t.iter().enumerate().rev() {
                write!(d, "L{:.3} {:.3} ", px(*t as f64), py(lo[i])).ok();
            }
            writeln!(s, r#"<path d="{}Z" fill="{color}" fill-opacity="0.2" stroke="none"/>"#, d).ok();
        }
        let mut d = String::new();
        for (i, t) in summary.t.iter().enumerate() {
            write!(d, "{}{:.3} {:.3} ", if i == 0 { "M" } else { "L" }, px(*t as f64), py(c.mean[i])).ok();
        }
        writeln!(s, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, d.trim_end()).ok();
        writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="{color}">{}</text>"#,
            x1 - 150.0,
            yt + 16.0 * (ci as f64 + 1.0),
            xml_escape(&c.name)
        )
        .ok();
    }
    if spec.log_scale && clamped {
        writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">values ≤ 0 drawn at floor {floor:e}</text>"#,
            x1 - 150.0,
            yt + 16.0 * (cols.len() as f64 + 1.0)
        )
        .ok();
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
