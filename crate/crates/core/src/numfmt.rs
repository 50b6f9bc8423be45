//! Number formatting shared by the CSV writers.

/// Shortest round-trip representation, switching to scientific notation for
/// `0 < |v| < 1e-4` and `|v| >= 1e6`.
pub fn format_value(v: f64) -> String {
    let m = v.abs();
    if v.is_finite() && m != 0.0 && !(1e-4..1e6).contains(&m) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}
