//! CPLEX-style LP text for MILP problems.
//!
//! ```text
//! \ selectors 2
//! Minimize
//!  obj: +0.3 v0 +0.55 v1 +0.8 y0_1
//! Subject To
//!  c0: +1 y0_1 -1 v0 <= 0
//! Bounds
//!  0 <= v0 <= 1
//! Binaries
//!  v0 v1
//! End
//! ```
//!
//! Every variable appears in `Bounds`, in declaration order, which fixes
//! the variable order on reading. Terms are `<signed coefficient> <name>`
//! pairs; senses are `<=`, `>=` and `=`. Lines starting with `\` are
//! comments, except `\ selectors <n>`.

use std::collections::HashMap;
use std::fmt::Write as _;

use primdisc_core::solver::{Constraint, MilpProblem, Sense, VarKind};

use crate::error::{FormatError, Result};

fn terms_text(terms: &[(usize, f64)], problem: &MilpProblem) -> String {
    let parts: Vec<String> = terms.iter().map(|&(j, a)| format!("{a:+} {}", problem.variables[j].name)).collect();
    parts.join(" ")
}

pub fn write_lp(problem: &MilpProblem) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "\\ selectors {}", problem.selectors);
    let _ = writeln!(s, "Minimize");
    let _ = writeln!(s, " obj: {}", terms_text(&problem.objective, problem));
    let _ = writeln!(s, "Subject To");
    for (r, c) in problem.constraints.iter().enumerate() {
        let sense = match c.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(s, " c{r}: {} {sense} {}", terms_text(&c.terms, problem), c.rhs);
    }
    let _ = writeln!(s, "Bounds");
    for v in &problem.variables {
        let _ = writeln!(s, " {} <= {} <= {}", v.lower, v.name, v.upper);
    }
    let bins: Vec<&str> =
        problem.variables.iter().filter(|v| v.kind == VarKind::Binary).map(|v| v.name.as_str()).collect();
    if !bins.is_empty() {
        let _ = writeln!(s, "Binaries");
        for chunk in bins.chunks(16) {
            let _ = writeln!(s, " {}", chunk.join(" "));
        }
    }
    let _ = writeln!(s, "End");
    s
}

#[derive(PartialEq)]
enum Section {
    Start,
    Objective,
    Constraints,
    Bounds,
    Binaries,
    End,
}

fn number(tok: &str, ln: usize) -> Result<f64> {
    tok.parse().map_err(|_| FormatError::parse(ln, format!("invalid number '{tok}'")))
}

fn parse_terms(tokens: &[&str], ln: usize) -> Result<Vec<(f64, String)>> {
    if tokens.len() % 2 != 0 {
        return Err(FormatError::parse(ln, "terms must be coefficient/name pairs"));
    }
    tokens.chunks(2).map(|p| Ok((number(p[0], ln)?, p[1].to_string()))).collect()
}

fn strip_label(line: &str) -> &str {
    match line.split_once(':') {
        Some((_, rest)) => rest,
        None => line,
    }
}

/// Reads the subset written by [`write_lp`].
pub fn parse_lp(text: &str) -> Result<MilpProblem> {
    let mut section = Section::Start;
    let mut selectors = 0usize;
    let mut objective_raw: Vec<(f64, String)> = Vec::new();
    let mut constraints_raw: Vec<(Vec<(f64, String)>, Sense, f64, usize)> = Vec::new();
    let mut problem = MilpProblem::default();
    let mut index: HashMap<String, usize> = HashMap::new();

    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('\\') {
            let t: Vec<&str> = comment.split_whitespace().collect();
            if t.len() == 2 && t[0] == "selectors" {
                selectors = number(t[1], ln)? as usize;
            }
            continue;
        }
        match line.to_ascii_lowercase().as_str() {
            "minimize" => {
                section = Section::Objective;
                continue;
            }
            "subject to" => {
                section = Section::Constraints;
                continue;
            }
            "bounds" => {
                section = Section::Bounds;
                continue;
            }
            "binaries" => {
                section = Section::Binaries;
                continue;
            }
            "end" => {
                section = Section::End;
                continue;
            }
            _ => {}
        }
        let tokens: Vec<&str> = strip_label(line).split_whitespace().collect();
        match section {
            Section::Objective => objective_raw.extend(parse_terms(&tokens, ln)?),
            Section::Constraints => {
                if tokens.len() < 2 {
                    return Err(FormatError::parse(ln, "constraint needs a sense and a right-hand side"));
                }
                let sense = match tokens[tokens.len() - 2] {
                    "<=" => Sense::Le,
                    ">=" => Sense::Ge,
                    "=" => Sense::Eq,
                    other => return Err(FormatError::parse(ln, format!("unknown sense '{other}'"))),
                };
                let rhs = number(tokens[tokens.len() - 1], ln)?;
                constraints_raw.push((parse_terms(&tokens[..tokens.len() - 2], ln)?, sense, rhs, ln));
            }
            Section::Bounds => {
                if tokens.len() != 5 || tokens[1] != "<=" || tokens[3] != "<=" {
                    return Err(FormatError::parse(ln, "bounds take the form 'lo <= name <= hi'"));
                }
                let name = tokens[2].to_string();
                if index.contains_key(&name) {
                    return Err(FormatError::parse(ln, format!("variable '{name}' declared twice")));
                }
                let j = problem.add_variable(name.clone(), VarKind::Continuous, number(tokens[0], ln)?, number(tokens[4], ln)?);
                index.insert(name, j);
            }
            Section::Binaries => {
                for name in tokens {
                    let j = *index.get(name).ok_or_else(|| FormatError::parse(ln, format!("undeclared variable '{name}'")))?;
                    problem.variables[j].kind = VarKind::Binary;
                }
            }
            Section::Start | Section::End => {
                return Err(FormatError::parse(ln, "content outside a section"));
            }
        }
    }
    if section != Section::End {
        return Err(FormatError::parse(text.lines().count(), "missing End"));
    }
    let resolve = |terms: Vec<(f64, String)>, ln: usize| -> Result<Vec<(usize, f64)>> {
        terms
            .into_iter()
            .map(|(a, name)| {
                index
                    .get(&name)
                    .map(|&j| (j, a))
                    .ok_or_else(|| FormatError::parse(ln, format!("undeclared variable '{name}'")))
            })
            .collect()
    };
    problem.objective = resolve(objective_raw, 0)?;
    for (terms, sense, rhs, ln) in constraints_raw {
        problem.constraints.push(Constraint::new(resolve(terms, ln)?, sense, rhs));
    }
    problem.selectors = selectors;
    problem.audit()?;
    Ok(problem)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut p = MilpProblem::default();
        p.add_variable("v0".into(), VarKind::Binary, 0.0, 1.0);
        p.add_variable("v1".into(), VarKind::Binary, 0.0, 1.0);
        p.add_variable("y0_1".into(), VarKind::Continuous, 0.0, 1.0);
        p.selectors = 2;
        p.objective = vec![(0, 0.1), (1, -1.0 / 3.0), (2, 2e-17)];
        p.constraints.push(Constraint::new(vec![(2, 1.0), (0, -1.0), (1, -1.0)], Sense::Ge, -1.0));
        p.constraints.push(Constraint::new(vec![(2, 1.0), (0, -1.0)], Sense::Le, 0.0));
        p.constraints.push(Constraint::new(vec![(0, 1.0)], Sense::Eq, 1.0));
        assert_eq!(parse_lp(&write_lp(&p)).unwrap(), p);
    }

    #[test]
    fn undeclared_variable() {
        let text = "Minimize\n obj: +1 x\nSubject To\nBounds\n 0 <= y <= 1\nEnd\n";
        assert!(parse_lp(text).is_err());
    }
}
