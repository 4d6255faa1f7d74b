//! Deterministic number formatting for CSV and plot files.

/// Shortest round-trip representation, switching to exponent form outside
/// `[1e-4, 1e15)` so tiny values stay readable.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 {
        "0".to_string()
    } else if !x.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}
