//! Plain-text formatting shared by the CSV writers.

/// Scientific notation with 12 significant digits.
pub fn fmt_float(x: f64) -> String {
    if x == 0.0 {
        // avoid "-0.00000000000e0" for negative zero
        return format!("{:.11e}", 0.0);
    }
    format!("{x:.11e}")
}

/// Joins already formatted fields into one CSV line with a trailing newline.
pub fn csv_line<S: AsRef<str>>(fields: &[S]) -> String {
    let mut line = fields.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(",");
    line.push('\n');
    line
}
