//! Model export in LP and fixed MPS text formats, plus an LP reader used
//! to round-trip exported documents.
//!
//! LP documents carry the model's own variable and row names and exact
//! shortest-roundtrip numbers, one row per line. MPS documents mangle
//! names to eight characters (`V0000001`, `R0000001`) and come with a
//! mangling table mapping them back; MPS numbers are capped to twelve
//! significant digits by the fixed field width.

use std::collections::BTreeMap;

use crate::model::{MilpModel, Sense, VarKind};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportFormat {
    Lp,
    Mps,
}

/// Formats a linear expression as `c1 name1 + c2 name2 - c3 name3`.
fn write_terms(out: &mut String, coeffs: &[(usize, f64)], names: &[String]) {
    let mut first = true;
    for &(j, c) in coeffs {
        if c == 0.0 {
            continue;
        }
        if first {
            if c < 0.0 {
                out.push_str("- ");
            }
            first = false;
        } else if c < 0.0 {
            out.push_str(" - ");
        } else {
            out.push_str(" + ");
        }
        out.push_str(&format!("{} {}", c.abs(), names[j]));
    }
}

/// Serializes the model as an LP-format document.
pub fn export_lp(model: &MilpModel) -> String {
    let names: Vec<String> = model.vars.iter().map(|v| v.name.clone()).collect();
    let mut out = String::new();
    out.push_str("\\ minimum-power task placement model\n");
    out.push_str("Minimize\n obj: ");
    let obj_terms: Vec<(usize, f64)> = model
        .vars
        .iter()
        .enumerate()
        .filter(|(_, v)| v.obj != 0.0)
        .map(|(j, v)| (j, v.obj))
        .collect();
    write_terms(&mut out, &obj_terms, &names);
    out.push_str("\nSubject To\n");
    for c in &model.constraints {
        out.push_str(&format!(" {}: ", c.name));
        write_terms(&mut out, &c.coeffs, &names);
        let sense = match c.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        out.push_str(&format!(" {} {}\n", sense, c.rhs));
    }
    out.push_str("Bounds\n");
    for v in &model.vars {
        if v.lb == v.ub {
            out.push_str(&format!(" {} = {}\n", v.name, v.lb));
        } else {
            out.push_str(&format!(" {} <= {} <= {}\n", v.lb, v.name, v.ub));
        }
    }
    out.push_str("Binary\n");
    for v in &model.vars {
        if v.kind == VarKind::Binary {
            out.push_str(&format!(" {}\n", v.name));
        }
    }
    out.push_str("End\n");
    out
}

/// Formats a number into the 12-character MPS value field.
fn mps_num(v: f64) -> String {
    let s = format!("{v}");
    if s.len() <= 12 {
        s
    } else {
        format!("{v:.6e}")
    }
}

fn mps_line(f1: &str, f2: &str, f3: &str, f4: &str) -> String {
    let mut line = format!(" {:<2} {:<8}  {:<8}  {}", f1, f2, f3, f4);
    while line.ends_with(' ') {
        line.pop();
    }
    line.push('\n');
    line
}

/// Serializes the model as a fixed-format MPS document plus the name
/// mangling table (one `short long` pair per line).
pub fn export_mps(model: &MilpModel) -> (String, String) {
    let vname = |j: usize| format!("V{:07}", j + 1);
    let rname = |r: usize| format!("R{:07}", r + 1);
    let mut table = String::new();
    for (j, v) in model.vars.iter().enumerate() {
        table.push_str(&format!("{} {}\n", vname(j), v.name));
    }
    for (r, c) in model.constraints.iter().enumerate() {
        table.push_str(&format!("{} {}\n", rname(r), c.name));
    }

    let mut out = String::new();
    out.push_str("NAME          PLACEMENT\n");
    out.push_str("ROWS\n");
    out.push_str(" N  COST\n");
    for (r, c) in model.constraints.iter().enumerate() {
        let t = match c.sense {
            Sense::Le => "L",
            Sense::Ge => "G",
            Sense::Eq => "E",
        };
        out.push_str(&format!(" {}  {}\n", t, rname(r)));
    }

    // Column-major entries: objective first, then rows in order.
    let mut col_entries: Vec<Vec<(String, f64)>> = vec![Vec::new(); model.vars.len()];
    for (j, v) in model.vars.iter().enumerate() {
        if v.obj != 0.0 {
            col_entries[j].push(("COST".to_string(), v.obj));
        }
    }
    for (r, c) in model.constraints.iter().enumerate() {
        let mut folded: BTreeMap<usize, f64> = BTreeMap::new();
        for &(j, k) in &c.coeffs {
            *folded.entry(j).or_insert(0.0) += k;
        }
        for (j, k) in folded {
            if k != 0.0 {
                col_entries[j].push((rname(r), k));
            }
        }
    }
    out.push_str("COLUMNS\n");
    let mut integral = false;
    let mut marker = 0usize;
    for (j, v) in model.vars.iter().enumerate() {
        let want = v.kind == VarKind::Binary;
        if want != integral {
            let kind = if want { "'INTORG'" } else { "'INTEND'" };
            out.push_str(&format!(
                "    MARKER{marker:02}                 'MARKER'                 {kind}\n"
            ));
            marker += 1;
            integral = want;
        }
        for (row, k) in &col_entries[j] {
            out.push_str(&mps_line("", &vname(j), row, &mps_num(*k)));
        }
        if col_entries[j].is_empty() {
            // Fixed MPS requires every column to appear at least once.
            out.push_str(&mps_line("", &vname(j), "COST", "0"));
        }
    }
    if integral {
        out.push_str(&format!(
            "    MARKER{marker:02}                 'MARKER'                 'INTEND'\n"
        ));
    }
    out.push_str("RHS\n");
    for (r, c) in model.constraints.iter().enumerate() {
        if c.rhs != 0.0 {
            out.push_str(&mps_line("", "RHS", &rname(r), &mps_num(c.rhs)));
        }
    }
    out.push_str("BOUNDS\n");
    for (j, v) in model.vars.iter().enumerate() {
        if v.lb == v.ub {
            out.push_str(&mps_line("FX", "BND", &vname(j), &mps_num(v.lb)));
        } else {
            if v.lb != 0.0 {
                out.push_str(&mps_line("LO", "BND", &vname(j), &mps_num(v.lb)));
            }
            if v.ub.is_finite() {
                out.push_str(&mps_line("UP", "BND", &vname(j), &mps_num(v.ub)));
            }
        }
    }
    out.push_str("ENDATA\n");
    (out, table)
}

/// Serializes the model in the requested format. The MPS mangling table
/// is available through [`export_mps`].
pub fn export_model(model: &MilpModel, format: ExportFormat) -> String {
    match format {
        ExportFormat::Lp => export_lp(model),
        ExportFormat::Mps => export_mps(model).0,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParsedVar {
    pub name: String,
    pub lb: f64,
    pub ub: f64,
    pub binary: bool,
    pub obj: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParsedRow {
    pub name: String,
    pub coeffs: Vec<(String, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// An LP document read back into matrix form. Variables appear in first
/// reference order with LP defaults (bounds [0, inf), objective 0) until a
/// Bounds or objective entry overrides them.
#[derive(Clone, Debug, Default)]
pub struct ParsedLp {
    pub vars: Vec<ParsedVar>,
    pub rows: Vec<ParsedRow>,
}

impl ParsedLp {
    pub fn var(&self, name: &str) -> Option<&ParsedVar> {
        self.vars.iter().find(|v| v.name == name)
    }

    pub fn row(&self, name: &str) -> Option<&ParsedRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    fn var_mut(&mut self, name: &str) -> &mut ParsedVar {
        if let Some(i) = self.vars.iter().position(|v| v.name == name) {
            return &mut self.vars[i];
        }
        self.vars.push(ParsedVar {
            name: name.to_string(),
            lb: 0.0,
            ub: f64::INFINITY,
            binary: false,
            obj: 0.0,
        });
        self.vars.last_mut().unwrap()
    }
}

fn parse_num(tok: &str, line: &str) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| Error::Config(format!("bad number {tok:?} in line {line:?}")))
}

/// Parses a linear expression of the form emitted by [`export_lp`]:
/// `[-] c name (+|- c name)*`. Returns the terms and the tokens consumed.
fn parse_terms(tokens: &[&str], line: &str) -> Result<(Vec<(String, f64)>, usize)> {
    let mut terms = Vec::new();
    let mut i = 0;
    let mut sign = 1.0;
    while i < tokens.len() {
        match tokens[i] {
            "+" => {
                sign = 1.0;
                i += 1;
            }
            "-" => {
                sign = -1.0;
                i += 1;
            }
            "<=" | ">=" | "=" => break,
            tok => {
                if let Ok(c) = tok.parse::<f64>() {
                    let name = *tokens.get(i + 1).ok_or_else(|| {
                        Error::Config(format!("dangling coefficient in line {line:?}"))
                    })?;
                    terms.push((name.to_string(), sign * c));
                    i += 2;
                } else {
                    // Bare variable, implicit coefficient 1.
                    terms.push((tok.to_string(), sign));
                    i += 1;
                }
                sign = 1.0;
            }
        }
    }
    Ok((terms, i))
}

/// Reads an LP document produced by [`export_lp`] (one row per line).
pub fn parse_lp(text: &str) -> Result<ParsedLp> {
    #[derive(PartialEq)]
    enum Section {
        Preamble,
        Objective,
        Rows,
        Bounds,
        Binary,
        Done,
    }
    let mut section = Section::Preamble;
    let mut lp = ParsedLp::default();
    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('\\') {
            continue;
        }
        let lower = line.to_ascii_lowercase();
        match lower.as_str() {
            "minimize" | "minimise" | "min" => {
                section = Section::Objective;
                continue;
            }
            "subject to" | "st" | "s.t." => {
                section = Section::Rows;
                continue;
            }
            "bounds" => {
                section = Section::Bounds;
                continue;
            }
            "binary" | "binaries" | "bin" => {
                section = Section::Binary;
                continue;
            }
            "end" => {
                section = Section::Done;
                continue;
            }
            _ => {}
        }
        match section {
            Section::Preamble | Section::Done => {
                return Err(Error::Config(format!("unexpected line {line:?}")));
            }
            Section::Objective => {
                let body = line.split_once(':').map(|(_, b)| b).unwrap_or(line);
                let tokens: Vec<&str> = body.split_whitespace().collect();
                let (terms, used) = parse_terms(&tokens, line)?;
                if used != tokens.len() {
                    return Err(Error::Config(format!(
                        "trailing tokens in objective {line:?}"
                    )));
                }
                for (name, c) in terms {
                    lp.var_mut(&name).obj += c;
                }
            }
            Section::Rows => {
                let (name, body) = line
                    .split_once(':')
                    .ok_or_else(|| Error::Config(format!("row without name: {line:?}")))?;
                let tokens: Vec<&str> = body.split_whitespace().collect();
                let (terms, used) = parse_terms(&tokens, line)?;
                if tokens.len() - used != 2 {
                    return Err(Error::Config(format!("malformed row {line:?}")));
                }
                let sense = match tokens[used] {
                    "<=" => Sense::Le,
                    ">=" => Sense::Ge,
                    "=" => Sense::Eq,
                    other => {
                        return Err(Error::Config(format!(
                            "unknown sense {other:?} in {line:?}"
                        )))
                    }
                };
                let rhs = parse_num(tokens[used + 1], line)?;
                for (name, _) in &terms {
                    lp.var_mut(name);
                }
                lp.rows.push(ParsedRow {
                    name: name.trim().to_string(),
                    coeffs: terms,
                    sense,
                    rhs,
                });
            }
            Section::Bounds => {
                let tokens: Vec<&str> = line.split_whitespace().collect();
                match tokens.as_slice() {
                    // lb <= name <= ub
                    [lb, "<=", name, "<=", ub] => {
                        let lo = parse_num(lb, line)?;
                        let hi = parse_num(ub, line)?;
                        let v = lp.var_mut(name);
                        v.lb = lo;
                        v.ub = hi;
                    }
                    // name = v
                    [name, "=", val] => {
                        let x = parse_num(val, line)?;
                        let v = lp.var_mut(name);
                        v.lb = x;
                        v.ub = x;
                    }
                    _ => return Err(Error::Config(format!("malformed bound {line:?}"))),
                }
            }
            Section::Binary => {
                lp.var_mut(line).binary = true;
            }
        }
    }
    Ok(lp)
}
