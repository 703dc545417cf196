//! Decimal formatting for output files.

/// Shortest decimal string that parses back to exactly `v`.
///
/// Plain notation in the usual range, scientific notation outside it, so
/// that tiny or huge values do not expand into hundreds of digits.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-5..1e16).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn short_forms() {
        assert_eq!(fmt_f64(0.2), "0.2");
        assert_eq!(fmt_f64(1e-300), "1e-300");
        assert_eq!(fmt_f64(-3.0), "-3");
    }

    proptest! {
        #[test]
        fn round_trips(bits in any::<u64>()) {
            let v = f64::from_bits(bits);
            prop_assume!(v.is_finite());
            prop_assert_eq!(fmt_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }
}
