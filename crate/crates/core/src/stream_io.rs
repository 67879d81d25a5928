//! Line-oriented text format for instance streams.
//!
//! ```text
//! # comment
//! theta_true simplex <p> v_1 … v_p
//! theta_true box <lo> <hi> <p> v_1 … v_p
//! step <t> <utility> <domain>
//! ```
//!
//! Utilities: `quad <n> P_1 … P_n`, `ces`, `bilinear`, `cobb <floor>`,
//! `custom obscuring|linear`.
//! Domains: `ck <n> p_1 … p_n b`, `bk <n> p_1 … p_n b`, `eck <n> p_1 … p_n b`,
//! `cp <m> <n> A_11 … A_mn c_1 … c_m` (A row-major), `interval <lo> <hi>`.
//!
//! Numbers use Rust's shortest round-trip formatting, so a write/read cycle
//! is lossless.

use std::io::{BufRead, Write};

use crate::domain::{Custom1d, Domain, Instance, ParameterPoint, UtilityForm};
use crate::error::{Error, Result};

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn utility_spec(u: &UtilityForm) -> String {
    match u {
        UtilityForm::QuadDiag { p } => format!("quad {} {}", p.len(), join(p)),
        UtilityForm::Ces => "ces".into(),
        UtilityForm::Bilinear => "bilinear".into(),
        UtilityForm::CobbDouglas { floor } => format!("cobb {floor}"),
        UtilityForm::Custom1d(Custom1d::Obscuring) => "custom obscuring".into(),
        UtilityForm::Custom1d(Custom1d::Linear) => "custom linear".into(),
    }
}

fn domain_spec(d: &Domain) -> String {
    match d {
        Domain::ContKnapsack { prices, budget }
        | Domain::BinKnapsack { prices, budget }
        | Domain::EqKnapsack { prices, budget } => {
            format!("{} {} {} {budget}", d.tag(), prices.len(), join(prices))
        }
        Domain::Polytope { rows, rhs } => {
            let flat: Vec<f64> = rows.iter().flatten().cloned().collect();
            format!("cp {} {} {} {}", rows.len(), rows[0].len(), join(&flat), join(rhs))
        }
        Domain::Interval { lo, hi } => format!("interval {lo} {hi}"),
    }
}

pub fn write_stream<W: Write>(mut out: W, theta_true: Option<&ParameterPoint>, instances: &[Instance]) -> Result<()> {
    if let Some(th) = theta_true {
        match th.space() {
            crate::domain::ParamSpace::Simplex => {
                writeln!(out, "theta_true simplex {} {}", th.dim(), join(th.values()))?
            }
            crate::domain::ParamSpace::Box { lo, hi } => {
                writeln!(out, "theta_true box {lo} {hi} {} {}", th.dim(), join(th.values()))?
            }
        }
    }
    for inst in instances {
        writeln!(out, "step {} {} {}", inst.t, utility_spec(&inst.utility), domain_spec(&inst.domain))?;
    }
    Ok(())
}

struct Tokens<'a> {
    it: std::str::SplitWhitespace<'a>,
    line: usize,
}

impl<'a> Tokens<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { line: self.line, msg: msg.into() }
    }

    fn word(&mut self) -> Result<&'a str> {
        let line = self.line;
        self.it.next().ok_or_else(|| Error::Parse { line, msg: "unexpected end of line".into() })
    }

    fn num(&mut self) -> Result<f64> {
        let w = self.word()?;
        let v: f64 = w.parse().map_err(|_| self.err(format!("expected a number, got {w:?}")))?;
        if !v.is_finite() {
            return Err(self.err(format!("non-finite number {w:?}")));
        }
        Ok(v)
    }

    fn count(&mut self) -> Result<usize> {
        let w = self.word()?;
        w.parse().map_err(|_| self.err(format!("expected a count, got {w:?}")))
    }

    fn nums(&mut self, k: usize) -> Result<Vec<f64>> {
        (0..k).map(|_| self.num()).collect()
    }

    fn finish(&mut self) -> Result<()> {
        match self.it.next() {
            Some(w) => Err(self.err(format!("trailing token {w:?}"))),
            None => Ok(()),
        }
    }
}

fn parse_utility(tk: &mut Tokens) -> Result<UtilityForm> {
    let kind = tk.word()?;
    Ok(match kind {
        "quad" => {
            let n = tk.count()?;
            UtilityForm::quad_diag(tk.nums(n)?)?
        }
        "ces" => UtilityForm::Ces,
        "bilinear" => UtilityForm::Bilinear,
        "cobb" => UtilityForm::CobbDouglas { floor: tk.num()? },
        "custom" => match tk.word()? {
            "obscuring" => UtilityForm::Custom1d(Custom1d::Obscuring),
            "linear" => UtilityForm::Custom1d(Custom1d::Linear),
            other => return Err(tk.err(format!("unknown custom utility {other:?}"))),
        },
        other => return Err(tk.err(format!("unknown utility {other:?}"))),
    })
}

fn parse_domain(tk: &mut Tokens) -> Result<Domain> {
    let kind = tk.word()?;
    Ok(match kind {
        "ck" | "bk" | "eck" => {
            let n = tk.count()?;
            let prices = tk.nums(n)?;
            let budget = tk.num()?;
            match kind {
                "ck" => Domain::cont_knapsack(prices, budget)?,
                "bk" => Domain::bin_knapsack(prices, budget)?,
                _ => Domain::eq_knapsack(prices, budget)?,
            }
        }
        "cp" => {
            let m = tk.count()?;
            let n = tk.count()?;
            let flat = tk.nums(m * n)?;
            let rhs = tk.nums(m)?;
            Domain::polytope(flat.chunks(n.max(1)).map(|r| r.to_vec()).collect(), rhs)?
        }
        "interval" => Domain::interval(tk.num()?, tk.num()?)?,
        other => return Err(tk.err(format!("unknown domain {other:?}"))),
    })
}

/// Reads a stream; validation errors carry the offending line number.
pub fn read_stream<R: BufRead>(input: R) -> Result<(Option<ParameterPoint>, Vec<Instance>)> {
    let mut theta_true = None;
    let mut instances = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tk = Tokens { it: trimmed.split_whitespace(), line: idx + 1 };
        let at_line = |e: Error| match e {
            e @ Error::Parse { .. } => e,
            other => Error::Parse { line: idx + 1, msg: other.to_string() },
        };
        match tk.word()? {
            "theta_true" => {
                let point = match tk.word()? {
                    "simplex" => {
                        let p = tk.count()?;
                        ParameterPoint::simplex(tk.nums(p)?)
                    }
                    "box" => {
                        let (lo, hi) = (tk.num()?, tk.num()?);
                        let p = tk.count()?;
                        ParameterPoint::in_box(tk.nums(p)?, lo, hi)
                    }
                    other => return Err(tk.err(format!("unknown parameter space {other:?}"))),
                };
                theta_true = Some(point.map_err(at_line)?);
            }
            "step" => {
                let t = tk.count()?;
                let utility = parse_utility(&mut tk).map_err(at_line)?;
                let domain = parse_domain(&mut tk).map_err(at_line)?;
                instances.push(Instance::new(t, utility, domain).map_err(at_line)?);
            }
            other => return Err(tk.err(format!("unknown record {other:?}"))),
        }
        tk.finish()?;
    }
    Ok((theta_true, instances))
}
