//! Fixed-format MPS export.
//!
//! Field layout: type in columns 2-3, names in 5-12, 15-22 and 40-47,
//! numbers right-aligned in 25-36 and 50-61. Integer columns are wrapped in
//! `MARKER` / `INTORG` ... `INTEND` lines and get `BV` bounds when they are
//! 0/1.

use std::fmt::Write as _;
use std::io;

use super::lp::{LinearProgram, RowKind, Sense};
use crate::error::{Error, Result};

const NAME_WIDTH: usize = 8;
const NUMBER_WIDTH: usize = 12;

/// Shortest decimal that fits twelve characters.
fn number(v: f64) -> String {
    let plain = format!("{v}");
    if plain.len() <= NUMBER_WIDTH {
        return plain;
    }
    for digits in (0..=8).rev() {
        let s = format!("{v:.digits$e}");
        if s.len() <= NUMBER_WIDTH {
            return s;
        }
    }
    format!("{v:.0e}")
}

fn check_name(kind: &str, name: &str) -> Result<()> {
    if name.is_empty() || name.len() > NAME_WIDTH || name.contains(char::is_whitespace) {
        return Err(Error::Precondition(format!(
            "{kind} name {name:?} does not fit the fixed MPS layout"
        )));
    }
    Ok(())
}

fn entry(out: &mut String, kind: &str, first: &str, pairs: &[(&str, f64)]) {
    let mut line = format!(" {kind:<2} {first:<8}");
    for (i, (name, value)) in pairs.iter().enumerate() {
        let sep = if i == 0 { "  " } else { "   " };
        let _ = write!(line, "{sep}{name:<8}  {:>12}", number(*value));
    }
    out.push_str(line.trim_end());
    out.push('\n');
}

/// Renders `lp` as fixed-format MPS.
pub fn to_mps(lp: &LinearProgram) -> Result<String> {
    check_name("model", &lp.name)?;
    for v in &lp.variables {
        check_name("column", &v.name)?;
    }
    for c in &lp.constraints {
        check_name("row", &c.name)?;
    }

    let mut out = String::new();
    let _ = writeln!(out, "NAME          {}", lp.name);
    if lp.sense == Sense::Maximize {
        out.push_str("OBJSENSE\n    MAX\n");
    }
    out.push_str("ROWS\n N  OBJ\n");
    for c in &lp.constraints {
        let kind = match c.kind {
            RowKind::Le => "L",
            RowKind::Ge => "G",
            RowKind::Eq => "E",
        };
        let _ = writeln!(out, " {kind}  {}", c.name);
    }

    let mut columns: Vec<Vec<(&str, f64)>> = vec![Vec::new(); lp.num_variables()];
    for c in &lp.constraints {
        for &(j, a) in &c.coefs {
            columns[j].push((c.name.as_str(), a));
        }
    }
    out.push_str("COLUMNS\n");
    let mut in_block = false;
    let mut markers = 0;
    for (j, v) in lp.variables.iter().enumerate() {
        if v.integer != in_block {
            let tag = if v.integer { "'INTORG'" } else { "'INTEND'" };
            let _ = writeln!(out, "    MARKER{markers:<4}'MARKER'                 {tag}");
            markers += 1;
            in_block = v.integer;
        }
        let mut items: Vec<(&str, f64)> = Vec::new();
        if v.objective != 0.0 {
            items.push(("OBJ", v.objective));
        }
        items.extend(columns[j].iter().copied());
        if items.is_empty() {
            items.push(("OBJ", 0.0));
        }
        for pair in items.chunks(2) {
            entry(&mut out, "", &v.name, pair);
        }
    }
    if in_block {
        let _ = writeln!(
            out,
            "    MARKER{markers:<4}'MARKER'                 'INTEND'"
        );
    }

    out.push_str("RHS\n");
    let rhs: Vec<(&str, f64)> = lp
        .constraints
        .iter()
        .filter(|c| c.rhs != 0.0)
        .map(|c| (c.name.as_str(), c.rhs))
        .collect();
    for pair in rhs.chunks(2) {
        entry(&mut out, "", "RHS", pair);
    }

    out.push_str("BOUNDS\n");
    for v in &lp.variables {
        let binary = v.integer && v.lower == 0.0 && v.upper == 1.0;
        if binary {
            entry(&mut out, "BV", "BND", &[(&v.name, 1.0)]);
            continue;
        }
        match (v.lower.is_finite(), v.upper.is_finite()) {
            (false, false) => {
                let _ = writeln!(out, " FR BND       {}", v.name);
            }
            (false, true) => {
                let _ = writeln!(out, " MI BND       {}", v.name);
                entry(&mut out, "UP", "BND", &[(&v.name, v.upper)]);
            }
            (true, upper) => {
                if v.lower == v.upper {
                    entry(&mut out, "FX", "BND", &[(&v.name, v.lower)]);
                    continue;
                }
                if v.lower != 0.0 || (v.integer && !upper) {
                    entry(&mut out, "LO", "BND", &[(&v.name, v.lower)]);
                }
                if upper {
                    entry(&mut out, "UP", "BND", &[(&v.name, v.upper)]);
                } else if v.integer {
                    let _ = writeln!(out, " PL BND       {}", v.name);
                }
            }
        }
    }
    out.push_str("ENDATA\n");
    Ok(out)
}

pub fn write_mps<W: io::Write>(lp: &LinearProgram, mut w: W) -> Result<()> {
    let text = to_mps(lp)?;
    w.write_all(text.as_bytes())
        .map_err(|e| Error::Internal(format!("writing MPS output failed: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> LinearProgram {
        let mut lp = LinearProgram::new("TOY", Sense::Maximize);
        let z = lp.add_variable("z", 0.0, 1.0, 2.0, true);
        let x = lp.add_variable("x", 0.0, 3.5, 1.0, false);
        let y = lp.add_variable("y", -1.0, f64::INFINITY, 0.0, false);
        lp.add_constraint("r1", [(x, 1.0), (z, 4.0)], RowKind::Le, 4.5);
        lp.add_constraint("r2", [(x, 1.0), (y, -1.0)], RowKind::Ge, 0.0);
        lp
    }

    #[test]
    fn layout() {
        let text = to_mps(&toy()).unwrap();
        let expected = "\
NAME          TOY
OBJSENSE
    MAX
ROWS
 N  OBJ
 L  r1
 G  r2
COLUMNS
    MARKER0   'MARKER'                 'INTORG'
    z         OBJ                  2   r1                   4
    MARKER1   'MARKER'                 'INTEND'
    x         OBJ                  1   r1                   1
    x         r2                   1
    y         r2                  -1
RHS
    RHS       r1                 4.5
BOUNDS
 BV BND       z                    1
 UP BND       x                  3.5
 LO BND       y                   -1
ENDATA
";
        assert_eq!(text, expected);
    }

    #[test]
    fn field_positions() {
        let text = to_mps(&toy()).unwrap();
        let line = text.lines().find(|l| l.starts_with("    z")).unwrap();
        assert_eq!(&line[4..12], "z       ");
        assert_eq!(&line[14..22], "OBJ     ");
        assert_eq!(line[24..36].trim(), "2");
        assert_eq!(&line[39..47], "r1      ");
        assert_eq!(line[49..61].trim(), "4");
    }

    #[test]
    fn numbers_fit() {
        for v in [1.0 / 3.0, -2.0 / 7.0, 1e-300, 123456789.123, -1e22] {
            let s = number(v);
            assert!(s.len() <= 12, "{s}");
            let back: f64 = s.parse().unwrap();
            assert!((back - v).abs() <= 1e-6 * v.abs());
        }
    }

    #[test]
    fn long_names_rejected() {
        let mut lp = toy();
        lp.variables[0].name = "toolongname".into();
        assert!(matches!(to_mps(&lp), Err(Error::Precondition(_))));
    }
}
