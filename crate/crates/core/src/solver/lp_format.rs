//! CPLEX LP text export.
//!
//! Output is a pure function of the model: variables and rows appear in
//! declaration order and numbers use Rust's shortest round-trip formatting.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{ModelInstance, Sense, VarId};

const TERMS_PER_LINE: usize = 6;
const CONSTANT_VAR: &str = "obj_constant";

/// LP names may not contain whitespace or operator characters.
pub(crate) fn sanitize(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "_.!\"#$%&()/,;?@`'{}|~".contains(c) { c } else { '_' })
        .collect();
    match s.chars().next() {
        Some(c) if c.is_ascii_digit() || c == '.' => format!("_{s}"),
        None => "_".into(),
        _ => s,
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn write_terms(out: &mut String, names: &[String], terms: impl Iterator<Item = (VarId, f64)>) {
    let mut first = true;
    let mut count = 0;
    for (v, a) in terms {
        if a == 0.0 {
            continue;
        }
        if count > 0 && count % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if a < 0.0 { "-" } else if first { "" } else { "+" };
        let mag = a.abs();
        if first {
            if sign.is_empty() {
                let _ = write!(out, " {} {}", num(mag), names[v.0]);
            } else {
                let _ = write!(out, " - {} {}", num(mag), names[v.0]);
            }
        } else {
            let _ = write!(out, " {} {} {}", sign, num(mag), names[v.0]);
        }
        first = false;
        count += 1;
    }
    if first {
        out.push_str(" 0");
    }
}

/// Renders `model` in CPLEX LP format.
pub fn write_lp_string(model: &ModelInstance) -> String {
    let names: Vec<String> = model.vars.iter().map(|v| sanitize(&v.name)).collect();
    let mut out = String::new();
    let _ = writeln!(out, "\\ Model: {}", sanitize(&model.name));
    out.push_str("Minimize\n obj:");
    let mut obj: Vec<(VarId, f64)> =
        model.objective.iter().enumerate().map(|(j, &c)| (VarId(j), c)).collect();
    let mut all_names = names.clone();
    let has_constant = model.objective_constant != 0.0;
    if has_constant {
        all_names.push(CONSTANT_VAR.to_string());
        obj.push((VarId(model.num_vars()), model.objective_constant));
    }
    write_terms(&mut out, &all_names, obj.into_iter());
    out.push_str("\nSubject To\n");
    for (r, row) in model.rows.iter().enumerate() {
        let _ = write!(out, " r{}_{}:", r, sanitize(&row.name));
        write_terms(&mut out, &names, row.terms.iter().copied());
        let op = match row.sense {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        };
        let _ = writeln!(out, " {} {}", op, num(row.rhs));
    }
    out.push_str("Bounds\n");
    for (v, name) in model.vars.iter().zip(&names) {
        match (v.lower.is_finite(), v.upper.is_finite()) {
            (false, false) => {
                let _ = writeln!(out, " {name} free");
            }
            (true, true) if v.lower == v.upper => {
                let _ = writeln!(out, " {name} = {}", num(v.lower));
            }
            (true, true) => {
                let _ = writeln!(out, " {} <= {name} <= {}", num(v.lower), num(v.upper));
            }
            (true, false) => {
                let _ = writeln!(out, " {name} >= {}", num(v.lower));
            }
            (false, true) => {
                let _ = writeln!(out, " -inf <= {name} <= {}", num(v.upper));
            }
        }
    }
    if has_constant {
        let _ = writeln!(out, " {CONSTANT_VAR} = 1");
    }
    let ints: Vec<&String> = model.vars.iter().zip(&names).filter(|(v, _)| v.integer).map(|(_, n)| n).collect();
    if !ints.is_empty() {
        out.push_str("Generals\n");
        for chunk in ints.chunks(8) {
            out.push(' ');
            out.push_str(&chunk.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(" "));
            out.push('\n');
        }
    }
    out.push_str("End\n");
    out
}

pub fn export_lp_file(model: &ModelInstance, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_lp_string(model)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_variable_has_one_bounds_entry() {
        let mut m = ModelInstance::new("one");
        m.add_var("x", 0.0, 10.0, 2.0);
        let s = write_lp_string(&m);
        let bounds = s.split("Bounds\n").nth(1).unwrap().split("End").next().unwrap();
        assert_eq!(bounds.lines().filter(|l| l.contains('x')).count(), 1);
        assert!(s.contains("0 <= x <= 10"));
    }

    #[test]
    fn names_are_sanitized() {
        assert_eq!(sanitize("p[g1,t2]"), "p_g1,t2_");
        assert_eq!(sanitize("1abc"), "_1abc");
    }

    #[test]
    fn integer_section_and_constant() {
        let mut m = ModelInstance::new("m");
        let z = m.add_binary("z", 1.0);
        let x = m.add_var("x", f64::NEG_INFINITY, f64::INFINITY, -1.0);
        m.objective_constant = 3.5;
        m.add_row("c", [(x, 1.0), (z, -4.0)], Sense::Le, 0.0);
        let s = write_lp_string(&m);
        assert!(s.contains("Generals\n z\n"));
        assert!(s.contains(" x free"));
        assert!(s.contains("obj_constant = 1"));
        assert!(s.contains(" r0_c: 1 x - 4 z <= 0"));
    }
}
