//! Minimal CSV helpers; every float is written with 17 significant digits so
//! values round-trip exactly.

/// Formats `v` in scientific notation with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Formats an optional value, leaving the field empty when absent.
pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Renders a header and a single data row.
pub fn single_row(header: &[&str], row: &[String]) -> String {
    debug_assert_eq!(header.len(), row.len());
    format!("{}\n{}\n", header.join(","), row.join(","))
}
