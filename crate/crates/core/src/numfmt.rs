//! Fixed-precision number formatting for CSV and model files.

/// Formats `x` with `digits` significant digits in the style of C's `%g`:
/// trailing zeros are dropped and scientific notation is used for very small
/// or very large magnitudes.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    // Round once in scientific form so the exponent reflects the rounding.
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        format!("{}e{}", trim_zeros(mantissa), exp)
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Round-trip representation with 17 significant digits.
pub fn fmt_exact(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn matches_printf_g() {
        assert_eq!(fmt_sig(93.33333333333333, 6), "93.3333");
        assert_eq!(fmt_sig(100.0, 6), "100");
        assert_eq!(fmt_sig(2.5, 6), "2.5");
        assert_eq!(fmt_sig(0.0001234567, 6), "0.000123457");
        assert_eq!(fmt_sig(0.00001234567, 6), "1.23457e-5");
        assert_eq!(fmt_sig(1234567.0, 6), "1.23457e6");
        assert_eq!(fmt_sig(999999.5, 6), "1e6");
        assert_eq!(fmt_sig(-0.5, 12), "-0.5");
        assert_eq!(fmt_sig(0.0, 6), "0");
    }

    proptest! {
        #[test]
        fn exact_format_round_trips(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL) {
            prop_assert_eq!(fmt_exact(x).parse::<f64>().unwrap(), x);
        }

        #[test]
        fn sig_format_is_close(x in -1e6f64..1e6) {
            let back: f64 = fmt_sig(x, 12).parse().unwrap();
            prop_assert!((back - x).abs() <= 1e-11 * x.abs().max(1e-300));
        }
    }
}
