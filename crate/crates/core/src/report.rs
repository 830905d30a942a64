//! Number formatting shared by the machine-readable reports.

/// Rounds to 9 decimal places.
pub fn round9(x: f64) -> f64 {
    round_to(x, 9)
}

/// Rounds to 6 decimal places.
pub fn round6(x: f64) -> f64 {
    round_to(x, 6)
}

pub fn round_to(x: f64, digits: i32) -> f64 {
    let scale = 10f64.powi(digits);
    let r = (x * scale).round() / scale;
    // avoid emitting "-0.0"
    if r == 0.0 {
        0.0
    } else {
        r
    }
}
