//! Number formatting shared by the CSV writers.

/// Formats like C's `%.{digits}g`: `digits` significant digits, trailing
/// zeros trimmed, scientific notation outside `1e-4 <= |x| < 10^digits`.
/// Infinities print as `inf`/`-inf`, NaN as `NA`.
pub fn sig(x: f64, digits: usize) -> String {
    assert!(digits >= 1);
    if x.is_nan() {
        return "NA".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    // Round once in scientific form so the exponent reflects any carry.
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -4 || exp >= digits as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_owned()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Nine significant digits, the precision of prediction outputs.
pub fn sig9(x: f64) -> String {
    sig(x, 9)
}

/// Formats an optional value, writing `NA` when absent.
pub fn opt9(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".into(), sig9)
}

/// Shortest form of a grid coefficient such as `-0.8` or `0`.
pub fn beta_label(beta: f64) -> String {
    let b = if beta == 0.0 { 0.0 } else { beta };
    format!("{b}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g() {
        assert_eq!(sig9(0.0), "0");
        assert_eq!(sig9(1.0), "1");
        assert_eq!(sig9(-1.224744871391589), "-1.22474487");
        assert_eq!(sig9(0.674489750196), "0.67448975");
        assert_eq!(sig9(123456789.4), "123456789");
        assert_eq!(sig9(1234567890.0), "1.23456789e+09");
        assert_eq!(sig9(0.000012345), "1.2345e-05");
        assert_eq!(sig9(0.0001), "0.0001");
        assert_eq!(sig9(9.9999999999), "10");
        assert_eq!(sig9(f64::INFINITY), "inf");
        assert_eq!(sig9(f64::NAN), "NA");
        assert_eq!(sig(2.5, 3), "2.5");
    }

    #[test]
    fn beta_labels() {
        assert_eq!(beta_label(-0.8), "-0.8");
        assert_eq!(beta_label(-0.0), "0");
        assert_eq!(beta_label(1.0), "1");
    }
}
