//! Deterministic text serialisation helpers.

/// 17 significant digits in scientific notation (round-trip safe).
pub fn fmt17(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{x:.16e}")
    }
}

/// JSON has no infinities; clamp them to the largest finite double.
pub fn json_finite(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(-f64::MAX, f64::MAX)
    }
}

/// Write rows of numbers as CSV with the given header.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(fmt17).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, std::f64::consts::PI] {
            assert_eq!(fmt17(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt17(f64::NEG_INFINITY), "-inf");
        assert_eq!(json_finite(f64::INFINITY), f64::MAX);
    }

    #[test]
    fn csv_layout() {
        let s = csv(&["r", "value"], vec![vec![0.0, 1.0]]);
        assert_eq!(s, "r,value\n0.0000000000000000e0,1.0000000000000000e0\n");
    }
}
