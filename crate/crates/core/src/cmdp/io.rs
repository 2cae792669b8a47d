//! Plain-text CMDP documents.
//!
//! ```text
//! cmdp
//! n_states 1
//! n_actions 2
//! n_features 2
//! gamma 0.0
//! mu0 1.0
//! transitions            # n_states*n_actions rows of n_states values
//! 1.0
//! 1.0
//! features               # n_states*n_actions rows of n_features values
//! 1.0 0.0
//! 0.0 1.0
//! constraints 1          # optional: weights | threshold
//! 1.0 0.0 | 0.5
//! demos 1                # optional: provenance then values
//! exact 0.5 0.5
//! end
//! ```
//!
//! Rows are ordered by `(state, action)` with the action varying fastest.
//! Numbers are written in Rust's shortest round-trip notation, so reading a
//! document and writing it again reproduces the same text.

use std::fmt::Write as _;

use super::{FeatureExpectations, LinearObjective, Provenance, TabularCmdp};
use crate::error::{Error, Result};

/// A CMDP with optional true constraints and demonstrations.
#[derive(Clone, Debug, PartialEq)]
pub struct CmdpDocument {
    pub cmdp: TabularCmdp,
    pub constraints: Vec<LinearObjective>,
    pub demos: Vec<FeatureExpectations>,
}

pub(crate) fn fmt_num(v: f64) -> String {
    format!("{v:?}")
}

pub(crate) fn fmt_row(values: &[f64]) -> String {
    values.iter().map(|v| fmt_num(*v)).collect::<Vec<_>>().join(" ")
}

pub fn write_cmdp(doc: &CmdpDocument) -> String {
    let c = &doc.cmdp;
    let mut out = String::new();
    out.push_str("cmdp\n");
    let _ = writeln!(out, "n_states {}", c.n_states());
    let _ = writeln!(out, "n_actions {}", c.n_actions());
    let _ = writeln!(out, "n_features {}", c.n_features());
    let _ = writeln!(out, "gamma {}", fmt_num(c.discount()));
    let _ = writeln!(out, "mu0 {}", fmt_row(c.initial_dist()));
    out.push_str("transitions\n");
    for row in c.transitions().chunks_exact(c.n_states()) {
        let _ = writeln!(out, "{}", fmt_row(row));
    }
    out.push_str("features\n");
    for row in c.features().chunks_exact(c.n_features()) {
        let _ = writeln!(out, "{}", fmt_row(row));
    }
    if !doc.constraints.is_empty() {
        let _ = writeln!(out, "constraints {}", doc.constraints.len());
        for con in &doc.constraints {
            let t = con.threshold.map(fmt_num).unwrap_or_else(|| "none".into());
            let _ = writeln!(out, "{} | {}", fmt_row(&con.weights), t);
        }
    }
    if !doc.demos.is_empty() {
        let _ = writeln!(out, "demos {}", doc.demos.len());
        for demo in &doc.demos {
            let tag = match demo.provenance {
                Provenance::Exact => "exact".to_string(),
                Provenance::Estimated { n_traj } => format!("estimated:{n_traj}"),
            };
            let _ = writeln!(out, "{} {}", tag, fmt_row(&demo.values));
        }
    }
    out.push_str("end\n");
    out
}

/// Line cursor that skips blanks and `#` comments.
pub(crate) struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    pub(crate) line_no: usize,
}

impl<'a> Lines<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        Self { inner: text.lines().enumerate(), line_no: 0 }
    }

    pub(crate) fn next_line(&mut self) -> Result<&'a str> {
        for (i, raw) in self.inner.by_ref() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if !line.is_empty() {
                self.line_no = i + 1;
                return Ok(line);
            }
        }
        Err(self.err("unexpected end of document"))
    }

    pub(crate) fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { line: self.line_no, msg: msg.into() }
    }

    pub(crate) fn keyword(&mut self, key: &str) -> Result<&'a str> {
        let line = self.next_line()?;
        let mut parts = line.splitn(2, char::is_whitespace);
        if parts.next() != Some(key) {
            return Err(self.err(format!("expected `{key}`, found `{line}`")));
        }
        Ok(parts.next().unwrap_or("").trim())
    }

    pub(crate) fn numbers(&self, text: &str, expected: usize) -> Result<Vec<f64>> {
        let values = text
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| self.err(format!("not a number: `{t}`"))))
            .collect::<Result<Vec<_>>>()?;
        if values.len() != expected {
            return Err(self.err(format!("expected {expected} values, found {}", values.len())));
        }
        Ok(values)
    }

    pub(crate) fn count(&self, text: &str) -> Result<usize> {
        text.parse().map_err(|_| self.err(format!("not a count: `{text}`")))
    }
}

pub fn read_cmdp(text: &str) -> Result<CmdpDocument> {
    let mut lines = Lines::new(text);
    lines.keyword("cmdp")?;
    let n_states = {
        let v = lines.keyword("n_states")?;
        lines.count(v)?
    };
    let n_actions = {
        let v = lines.keyword("n_actions")?;
        lines.count(v)?
    };
    let d = {
        let v = lines.keyword("n_features")?;
        lines.count(v)?
    };
    let gamma = {
        let v = lines.keyword("gamma")?;
        lines.numbers(v, 1)?[0]
    };
    let mu0 = {
        let v = lines.keyword("mu0")?;
        lines.numbers(v, n_states)?
    };
    let sa = n_states * n_actions;
    lines.keyword("transitions")?;
    let mut transitions = Vec::with_capacity(sa * n_states);
    for _ in 0..sa {
        let l = lines.next_line()?;
        transitions.extend(lines.numbers(l, n_states)?);
    }
    lines.keyword("features")?;
    let mut features = Vec::with_capacity(sa * d);
    for _ in 0..sa {
        let l = lines.next_line()?;
        features.extend(lines.numbers(l, d)?);
    }
    let cmdp = TabularCmdp::new(n_states, n_actions, transitions, mu0, gamma, features)
        .map_err(|e| lines.err(e.to_string()))?;

    let mut constraints = Vec::new();
    let mut demos = Vec::new();
    loop {
        let line = lines.next_line()?;
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("end") => break,
            Some("constraints") => {
                let n = lines.count(parts.next().unwrap_or(""))?;
                for _ in 0..n {
                    let l = lines.next_line()?;
                    let (w, t) = l.split_once('|').ok_or_else(|| lines.err("constraint row needs `|`"))?;
                    let weights = lines.numbers(w, d)?;
                    let t = t.trim();
                    let threshold = if t == "none" { None } else { Some(lines.numbers(t, 1)?[0]) };
                    constraints.push(LinearObjective { weights, threshold });
                }
            }
            Some("demos") => {
                let n = lines.count(parts.next().unwrap_or(""))?;
                for _ in 0..n {
                    let l = lines.next_line()?;
                    let (tag, rest) = l.split_once(char::is_whitespace).unwrap_or((l, ""));
                    let provenance = parse_provenance(tag).ok_or_else(|| lines.err(format!("bad provenance `{tag}`")))?;
                    let values = lines.numbers(rest, d)?;
                    demos.push(FeatureExpectations { values, provenance, confidence_box: None });
                }
            }
            _ => return Err(lines.err(format!("unexpected line `{line}`"))),
        }
    }
    Ok(CmdpDocument { cmdp, constraints, demos })
}

fn parse_provenance(tag: &str) -> Option<Provenance> {
    if tag == "exact" {
        return Some(Provenance::Exact);
    }
    let n = tag.strip_prefix("estimated:")?.parse().ok()?;
    Some(Provenance::Estimated { n_traj: n })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc() -> CmdpDocument {
        let cmdp = TabularCmdp::with_indicator_features(1, 2, vec![1.0, 1.0], vec![1.0], 0.0).unwrap();
        CmdpDocument {
            cmdp,
            constraints: vec![LinearObjective::constraint(vec![1.0, 0.0], 0.5)],
            demos: vec![
                FeatureExpectations::exact(vec![0.5, 0.5]),
                FeatureExpectations {
                    values: vec![0.1, 0.9],
                    provenance: Provenance::Estimated { n_traj: 30 },
                    confidence_box: None,
                },
            ],
        }
    }

    #[test]
    fn text_round_trip() {
        let text = write_cmdp(&doc());
        let back = read_cmdp(&text).unwrap();
        assert_eq!(back, doc());
        assert_eq!(write_cmdp(&back), text);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = write_cmdp(&doc()).replace("features\n", "# the feature map\n\nfeatures\n");
        assert_eq!(read_cmdp(&text).unwrap(), doc());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = write_cmdp(&doc()).replace("mu0 1.0", "mu0 x");
        match read_cmdp(&text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("unexpected {other:?}"),
        }
        let text = write_cmdp(&doc()).replace("end\n", "");
        assert!(read_cmdp(&text).is_err());
    }
}
