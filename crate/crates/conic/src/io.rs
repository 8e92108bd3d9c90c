//! Plain-text serialization of conic programs.
//!
//! The format is line-oriented and designed for debugging and golden tests:
//!
//! ```text
//! conicprogram v1
//! var <lb> <ub> <bin|cont> <name>
//! min <expr>
//! row <eq|le|ge> <rhs> <expr>
//! soc <head expr> : <elem expr> : <elem expr> ...
//! end
//! ```
//!
//! where `<expr>` is `<constant> [index:coeff]*` with variable indices in
//! declaration order. Floats are written with Rust's shortest-round-trip
//! formatting, so export → import reproduces the program exactly.

use thiserror::Error;

use crate::expr::LinExpr;
use crate::program::{ConicProgram, Sense, VarId};

/// Errors raised while parsing the text form.
#[derive(Debug, Error)]
pub enum TextFormatError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: {source}")]
    Program {
        line: usize,
        source: crate::program::ProgramError,
    },
}

fn write_expr(out: &mut String, e: &LinExpr) {
    out.push_str(&format!("{}", e.constant_part()));
    for (v, c) in e.terms() {
        out.push_str(&format!(" {}:{}", v.index(), c));
    }
}

/// Renders a program to the text format.
pub fn to_text(p: &ConicProgram) -> String {
    let mut out = String::new();
    out.push_str("conicprogram v1\n");
    for info in &p.vars {
        let kind = if info.binary { "bin" } else { "cont" };
        out.push_str(&format!("var {} {} {} {}\n", info.lb, info.ub, kind, info.name));
    }
    out.push_str("min ");
    write_expr(&mut out, &p.objective);
    out.push('\n');
    for row in &p.rows {
        let sense = match row.sense {
            Sense::Eq => "eq",
            Sense::Le => "le",
            Sense::Ge => "ge",
        };
        out.push_str(&format!("row {} {} ", sense, row.rhs));
        write_expr(&mut out, &row.expr);
        out.push('\n');
    }
    for cone in &p.socs {
        out.push_str("soc ");
        write_expr(&mut out, &cone.head);
        for e in &cone.elems {
            out.push_str(" : ");
            write_expr(&mut out, e);
        }
        out.push('\n');
    }
    out.push_str("end\n");
    out
}

fn parse_f64(tok: &str, line: usize) -> Result<f64, TextFormatError> {
    tok.parse::<f64>().map_err(|_| TextFormatError::Parse {
        line,
        msg: format!("expected a float, got {tok:?}"),
    })
}

fn parse_expr(tokens: &[&str], line: usize) -> Result<LinExpr, TextFormatError> {
    if tokens.is_empty() {
        return Err(TextFormatError::Parse {
            line,
            msg: "expected an expression".into(),
        });
    }
    let mut e = LinExpr::constant(parse_f64(tokens[0], line)?);
    for tok in &tokens[1..] {
        let (idx, coeff) = tok.split_once(':').ok_or_else(|| TextFormatError::Parse {
            line,
            msg: format!("expected index:coeff, got {tok:?}"),
        })?;
        let idx: u32 = idx.parse().map_err(|_| TextFormatError::Parse {
            line,
            msg: format!("bad variable index {idx:?}"),
        })?;
        e.add_term(VarId::from_index(idx), parse_f64(coeff, line)?);
    }
    Ok(e)
}

/// Parses the text format back into a program.
pub fn from_text(text: &str) -> Result<ConicProgram, TextFormatError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == "conicprogram v1" => {}
        other => {
            return Err(TextFormatError::Parse {
                line: 1,
                msg: format!("expected header 'conicprogram v1', got {:?}", other.map(|(_, l)| l)),
            })
        }
    }
    let mut p = ConicProgram::new();
    let mut saw_end = false;
    for (i, raw) in lines {
        let line = i + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = l.split_whitespace().collect();
        match toks[0] {
            "var" => {
                if toks.len() != 5 {
                    return Err(TextFormatError::Parse {
                        line,
                        msg: "var lines are 'var <lb> <ub> <bin|cont> <name>'".into(),
                    });
                }
                let lb = parse_f64(toks[1], line)?;
                let ub = parse_f64(toks[2], line)?;
                let res = match toks[3] {
                    "bin" => p.add_binary(toks[4]),
                    "cont" => p.add_var(toks[4], lb, ub),
                    other => {
                        return Err(TextFormatError::Parse {
                            line,
                            msg: format!("unknown variable kind {other:?}"),
                        })
                    }
                };
                res.map_err(|source| TextFormatError::Program { line, source })?;
            }
            "min" => {
                let e = parse_expr(&toks[1..], line)?;
                p.set_objective(e)
                    .map_err(|source| TextFormatError::Program { line, source })?;
            }
            "row" => {
                if toks.len() < 4 {
                    return Err(TextFormatError::Parse {
                        line,
                        msg: "row lines are 'row <sense> <rhs> <expr>'".into(),
                    });
                }
                let sense = match toks[1] {
                    "eq" => Sense::Eq,
                    "le" => Sense::Le,
                    "ge" => Sense::Ge,
                    other => {
                        return Err(TextFormatError::Parse {
                            line,
                            msg: format!("unknown sense {other:?}"),
                        })
                    }
                };
                let rhs = parse_f64(toks[2], line)?;
                let e = parse_expr(&toks[3..], line)?;
                p.add_linear(e, sense, rhs)
                    .map_err(|source| TextFormatError::Program { line, source })?;
            }
            "soc" => {
                let mut groups: Vec<Vec<&str>> = vec![Vec::new()];
                for t in &toks[1..] {
                    if *t == ":" {
                        groups.push(Vec::new());
                    } else {
                        groups.last_mut().unwrap().push(t);
                    }
                }
                if groups.len() < 2 {
                    return Err(TextFormatError::Parse {
                        line,
                        msg: "soc lines need a head and at least one member".into(),
                    });
                }
                let head = parse_expr(&groups[0], line)?;
                let elems = groups[1..]
                    .iter()
                    .map(|g| parse_expr(g, line))
                    .collect::<Result<Vec<_>, _>>()?;
                p.add_soc(head, elems)
                    .map_err(|source| TextFormatError::Program { line, source })?;
            }
            "end" => {
                saw_end = true;
                break;
            }
            other => {
                return Err(TextFormatError::Parse {
                    line,
                    msg: format!("unknown directive {other:?}"),
                })
            }
        }
    }
    if !saw_end {
        return Err(TextFormatError::Parse {
            line: 0,
            msg: "missing 'end' line".into(),
        });
    }
    Ok(p)
}
