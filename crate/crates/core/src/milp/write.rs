//! CPLEX-LP and free-MPS emission. Output order is the model's declaration
//! order, so identical models produce identical bytes.

use std::fmt::Write;

use super::model::{MilpModel, Sense, VarKind};

const TERMS_PER_LINE: usize = 6;

/// Formats a number with at most 12 significant digits.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.fract() == 0.0 && x.abs() < 1e15 {
        return format!("{}", x as i64);
    }
    let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    format!("{rounded}")
}

fn write_terms(out: &mut String, model: &MilpModel, terms: &[(usize, f64)]) {
    for (k, &(var, coef)) in terms.iter().enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let name = &model.variables()[var].name;
        let sign = if coef < 0.0 { "-" } else { "+" };
        if k == 0 && coef >= 0.0 {
            let _ = write!(out, " {} {}", format_number(coef), name);
        } else {
            let _ = write!(out, " {sign} {} {}", format_number(coef.abs()), name);
        }
    }
}

/// Emits the model in CPLEX LP format.
pub fn emit_lp(model: &MilpModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ Problem: {}", model.name);
    out.push_str("Minimize\n obj:");
    let objective: Vec<(usize, f64)> = model
        .variables()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.objective != 0.0)
        .map(|(i, v)| (i, v.objective))
        .collect();
    write_terms(&mut out, model, &objective);
    out.push_str("\nSubject To\n");
    for row in model.constraints() {
        let _ = write!(out, " {}:", row.name);
        if row.terms.is_empty() {
            let _ = write!(out, " 0 {}", model.variables()[0].name);
        } else {
            write_terms(&mut out, model, &row.terms);
        }
        let _ = writeln!(out, " {} {}", row.sense.symbol(), format_number(row.rhs));
    }
    out.push_str("Bounds\n");
    for v in model.variables() {
        if v.kind == VarKind::Binary {
            continue;
        }
        match (v.lower, v.upper) {
            (0.0, None) => {}
            (l, None) => {
                let _ = writeln!(out, " {} >= {}", v.name, format_number(l));
            }
            (l, Some(u)) => {
                let _ = writeln!(out, " {} <= {} <= {}", format_number(l), v.name, format_number(u));
            }
        }
    }
    for (section, kind) in [("Generals", VarKind::Integer), ("Binaries", VarKind::Binary)] {
        let names: Vec<&str> = model.variables().iter().filter(|v| v.kind == kind).map(|v| v.name.as_str()).collect();
        if names.is_empty() {
            continue;
        }
        let _ = writeln!(out, "{section}");
        for chunk in names.chunks(TERMS_PER_LINE) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}

/// Emits the model in free MPS format.
pub fn emit_mps(model: &MilpModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "NAME {}", model.name);
    out.push_str("ROWS\n N obj\n");
    for row in model.constraints() {
        let tag = match row.sense {
            Sense::Le => "L",
            Sense::Eq => "E",
            Sense::Ge => "G",
        };
        let _ = writeln!(out, " {tag} {}", row.name);
    }

    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.variables().len()];
    for (r, row) in model.constraints().iter().enumerate() {
        for &(var, coef) in &row.terms {
            columns[var].push((r, coef));
        }
    }
    out.push_str("COLUMNS\n");
    let mut in_integer_block = false;
    let mut markers = 0;
    for (v, var) in model.variables().iter().enumerate() {
        let integral = var.kind != VarKind::Continuous;
        if integral != in_integer_block {
            let tag = if integral { "INTORG" } else { "INTEND" };
            let _ = writeln!(out, "    M{markers:05} 'MARKER' '{tag}'");
            markers += 1;
            in_integer_block = integral;
        }
        if var.objective != 0.0 || columns[v].is_empty() {
            let _ = writeln!(out, "    {} obj {}", var.name, format_number(var.objective));
        }
        for &(r, coef) in &columns[v] {
            let _ = writeln!(out, "    {} {} {}", var.name, model.constraints()[r].name, format_number(coef));
        }
    }
    if in_integer_block {
        let _ = writeln!(out, "    M{markers:05} 'MARKER' 'INTEND'");
    }

    out.push_str("RHS\n");
    for row in model.constraints() {
        if row.rhs != 0.0 {
            let _ = writeln!(out, "    RHS {} {}", row.name, format_number(row.rhs));
        }
    }
    out.push_str("BOUNDS\n");
    for v in model.variables() {
        match v.kind {
            VarKind::Binary => {
                let _ = writeln!(out, " BV BND {}", v.name);
            }
            VarKind::Integer | VarKind::Continuous => {
                if v.lower != 0.0 {
                    let _ = writeln!(out, " LO BND {} {}", v.name, format_number(v.lower));
                }
                match v.upper {
                    Some(u) => {
                        let _ = writeln!(out, " UP BND {} {}", v.name, format_number(u));
                    }
                    // Some readers give marker integers an upper bound of 1.
                    None if v.kind == VarKind::Integer => {
                        let _ = writeln!(out, " PL BND {}", v.name);
                    }
                    None => {}
                }
            }
        }
    }
    out.push_str("ENDATA\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_keep_twelve_significant_digits() {
        assert_eq!(format_number(3.0), "3");
        assert_eq!(format_number(-0.0), "0");
        assert_eq!(format_number(0.1), "0.1");
        assert_eq!(format_number(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_number(26.282 / 22.4), "1.17330357143");
        assert_eq!(format_number(1e8), "100000000");
    }

    #[test]
    fn empty_model_has_all_sections() {
        let m = MilpModel::new("empty");
        let lp = emit_lp(&m);
        assert_eq!(lp, "\\ Problem: empty\nMinimize\n obj:\nSubject To\nBounds\nEnd\n");
        let mps = emit_mps(&m);
        assert_eq!(mps, "NAME empty\nROWS\n N obj\nCOLUMNS\nRHS\nBOUNDS\nENDATA\n");
    }

    #[test]
    fn small_model_lp_text() {
        let mut m = MilpModel::new("toy");
        let x = m.add_variable("x", VarKind::Binary, 0.0, Some(1.0), 2.0).unwrap();
        let n = m.add_variable("n", VarKind::Integer, 0.0, None, 1.5).unwrap();
        let u = m.add_variable("u", VarKind::Continuous, 0.0, Some(4.0), 0.0).unwrap();
        m.add_constraint("cap", vec![(x, 3.0), (n, -55.0), (u, -1.0)], Sense::Le, 0.0).unwrap();
        m.add_constraint("one", vec![(x, 1.0)], Sense::Eq, 1.0).unwrap();
        let lp = emit_lp(&m);
        assert_eq!(
            lp,
            "\\ Problem: toy\nMinimize\n obj: 2 x + 1.5 n\nSubject To\n cap: 3 x - 55 n - 1 u <= 0\n one: 1 x = 1\n\
             Bounds\n 0 <= u <= 4\nGenerals\n n\nBinaries\n x\nEnd\n"
        );
        let mps = emit_mps(&m);
        assert!(mps.contains(" L cap\n E one\n"));
        assert!(mps.contains("    M00000 'MARKER' 'INTORG'\n    x obj 2\n    x cap 3\n    x one 1\n"));
        assert!(mps.contains(" PL BND n\n UP BND u 4\n"));
    }
}
