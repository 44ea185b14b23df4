//! Plain-text dumps of single states.

use std::fmt::Write as _;

use splitting_core::StateField;

/// One line per node: coordinates then value, preceded by a header.
pub fn state_to_text(u: &StateField) -> String {
    let g = u.grid();
    let mut out = String::new();
    match g.dim() {
        1 => out.push_str("x,u\n"),
        _ => out.push_str("x,y,u\n"),
    }
    for (k, v) in u.values().iter().enumerate() {
        let p = g.point(k);
        match g.dim() {
            1 => writeln!(out, "{:.17e},{:.17e}", p[0], v).unwrap(),
            _ => writeln!(out, "{:.17e},{:.17e},{:.17e}", p[0], p[1], v).unwrap(),
        }
    }
    out
}
