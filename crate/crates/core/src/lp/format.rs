use std::fmt::Write;

use super::{LinearProgram, Relation, VarId};

/// Writes `lp` in CPLEX LP text format so it can be cross-checked with an
/// external solver. Variable and row names are sanitized and made unique by
/// prefixing their index.
pub fn write_lp_format(lp: &LinearProgram, out: &mut impl Write) -> std::fmt::Result {
    let var = |v: VarId| format!("x{}_{}", v.0, clean(&lp.variables[v.0].name));
    let terms = |coeffs: &[(VarId, f64)]| -> String {
        if coeffs.is_empty() {
            return "0 x0_".to_string() + &clean(lp.variables.first().map_or("", |v| &v.name));
        }
        let mut s = String::new();
        for (i, &(v, c)) in coeffs.iter().enumerate() {
            let sign = if c < 0.0 { "- " } else if i > 0 { "+ " } else { "" };
            let _ = write!(s, "{}{sign}{:e} {}", if i > 0 { " " } else { "" }, c.abs(), var(v));
        }
        s
    };

    writeln!(out, "\\ {}", lp.name)?;
    writeln!(out, "Maximize")?;
    if lp.objective.is_empty() || lp.variables.is_empty() {
        writeln!(out, " obj: 0")?;
    } else {
        writeln!(out, " obj: {}", terms(&lp.objective))?;
    }
    writeln!(out, "Subject To")?;
    for (i, c) in lp.constraints.iter().enumerate() {
        if c.coeffs.is_empty() || lp.variables.is_empty() {
            continue;
        }
        let rel = match c.relation {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        };
        writeln!(out, " r{}_{}: {} {} {:e}", i, clean(&c.name), terms(&c.coeffs), rel, c.rhs)?;
    }
    writeln!(out, "Bounds")?;
    for (j, v) in lp.variables.iter().enumerate() {
        let name = var(VarId(j));
        match (v.lower.is_finite(), v.upper.is_finite()) {
            (false, false) => writeln!(out, " {name} free")?,
            (true, true) if v.lower == v.upper => writeln!(out, " {name} = {:e}", v.lower)?,
            (true, true) => writeln!(out, " {:e} <= {name} <= {:e}", v.lower, v.upper)?,
            (true, false) => writeln!(out, " {name} >= {:e}", v.lower)?,
            (false, true) => writeln!(out, " -inf <= {name} <= {:e}", v.upper)?,
        }
    }
    writeln!(out, "End")
}

fn clean(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '.' { c } else { '_' })
        .collect()
}
