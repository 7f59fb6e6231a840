use std::fmt::Write as _;

use super::{LpInstance, Sense, VarKind};
use crate::rational::Rational;

fn decimal(r: &Rational) -> String {
    if r.is_integer() {
        r.to_string()
    } else {
        format!("{:.12}", r.to_f64())
    }
}

fn term_list(out: &mut String, coeffs: &[(usize, Rational)]) {
    if coeffs.is_empty() {
        out.push_str(" 0 x0");
    }
    for (j, c) in coeffs {
        let sign = if c.is_negative() { '-' } else { '+' };
        let _ = write!(out, " {sign} {} x{j}", decimal(&c.abs()));
    }
}

/// Renders the instance in CPLEX LP text format. Coefficients are written as
/// fixed-point decimals; rows with non-integral data carry the exact
/// rationals in a trailing comment.
pub fn write_lp(inst: &LpInstance) -> String {
    let mut out = String::new();
    out.push_str("\\ variables:\n");
    for (j, name) in inst.names.iter().enumerate() {
        let _ = writeln!(out, "\\   x{j} = {name}");
    }
    out.push_str(if inst.objective.is_empty() { "Minimize\n obj:" } else { "Maximize\n obj:" });
    term_list(&mut out, &inst.objective);
    out.push_str("\nSubject To\n");
    for (i, row) in inst.rows.iter().enumerate() {
        let exact = row.coeffs.iter().all(|(_, c)| c.is_integer()) && row.rhs.is_integer();
        if !exact {
            let _ = write!(out, "\\ exact:");
            for (j, c) in &row.coeffs {
                let _ = write!(out, " {c}*x{j}");
            }
            let _ = writeln!(out, " rhs {}", row.rhs);
        }
        let _ = write!(out, " r{i}:");
        term_list(&mut out, &row.coeffs);
        let op = match row.sense {
            Sense::Eq => "=",
            Sense::Le => "<=",
            Sense::Ge => ">=",
        };
        let _ = writeln!(out, " {op} {}", decimal(&row.rhs));
    }
    out.push_str("Bounds\n");
    for (j, k) in inst.kinds.iter().enumerate() {
        if *k == VarKind::Free {
            let _ = writeln!(out, " x{j} free");
        }
    }
    out.push_str("End\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn renders_rows_and_bounds() {
        let mut lp = LpInstance::new();
        let x = lp.add_var("f_1", VarKind::Free);
        let l = lp.add_var("lambda_0", VarKind::NonNeg);
        lp.add_row(vec![(x, rat(1, 3)), (l, rat(-2, 1))], Sense::Eq, rat(0, 1), "m");
        lp.set_objective(vec![(x, rat(1, 1))]);
        let text = write_lp(&lp);
        assert!(text.contains("Maximize"));
        assert!(text.contains("x0 free"));
        assert!(text.contains("\\ exact: 1/3*x0 -2*x1 rhs 0"));
        assert!(text.contains("- 2 x1 = 0"));
    }
}
