//! Exact rational scalars and the few float conversions the crate allows.
//!
//! Masses are exact rationals everywhere inside the library. JSON inputs may
//! carry floats; those are converted *exactly* (every finite binary float is a
//! rational), so downstream arithmetic stays exact and only explicitly
//! documented operations (sampling cumulative tables, budget formulas with
//! logarithms) ever round.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

/// Exact rational scalar used for all masses, weights, and distances.
pub type Rat = num_rational::BigRational;

/// Tolerance for invariants that must admit float-derived inputs
/// (e.g. "total mass at most one").
pub const MASS_TOL: f64 = 1e-12;

/// `n / d` as an exact rational. Panics if `d == 0`.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// `n` as an exact rational.
pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Best-effort float view of a rational (used only for reporting and for
/// building sampling tables; never fed back into exact arithmetic).
pub fn mass_to_f64(x: &Rat) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        // Fall back to separate numerator/denominator conversion; good enough
        // for the magnitudes this crate produces.
        let n = x.numer().to_f64().unwrap_or(f64::MAX);
        let d = x.denom().to_f64().unwrap_or(f64::MAX);
        n / d
    })
}

/// Renders a rational in the canonical `"num/den"` form used by every JSON
/// and CSV artifact (integers still carry the `/1`).
pub fn render_mass(x: &Rat) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Parses a mass entry: either a `"num/den"` string or a JSON float.
/// Floats convert exactly; negative or non-finite values are rejected here so
/// that constructors can assume well-formed scalars.
pub fn parse_mass(value: &serde_json::Value) -> Result<Rat, String> {
    let r = match value {
        serde_json::Value::String(s) => {
            let (n, d) = s
                .split_once('/')
                .ok_or_else(|| format!("mass string `{s}` is not of the form num/den"))?;
            let n: BigInt = n
                .trim()
                .parse()
                .map_err(|_| format!("bad numerator in `{s}`"))?;
            let d: BigInt = d
                .trim()
                .parse()
                .map_err(|_| format!("bad denominator in `{s}`"))?;
            if d.is_zero() {
                return Err(format!("zero denominator in `{s}`"));
            }
            Rat::new(n, d)
        }
        serde_json::Value::Number(num) => {
            if let Some(i) = num.as_i64() {
                rat_int(i)
            } else {
                let f = num
                    .as_f64()
                    .ok_or_else(|| format!("mass `{num}` is not representable"))?;
                Rat::from_float(f).ok_or_else(|| format!("mass `{f}` is not finite"))?
            }
        }
        other => return Err(format!("mass entry `{other}` is neither string nor number")),
    };
    if r.is_negative() {
        return Err(format!("negative mass {}", render_mass(&r)));
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_round_trip() {
        let x = rat(3, 12);
        assert_eq!(render_mass(&x), "1/4");
        assert_eq!(mass_to_f64(&x), 0.25);
    }

    #[test]
    fn parse_mass_accepts_strings_and_floats() {
        let s = serde_json::json!("7/56");
        assert_eq!(parse_mass(&s).unwrap(), rat(1, 8));
        let f = serde_json::json!(0.125);
        assert_eq!(parse_mass(&f).unwrap(), rat(1, 8));
        let i = serde_json::json!(1);
        assert_eq!(parse_mass(&i).unwrap(), rat_int(1));
    }

    #[test]
    fn parse_mass_converts_floats_exactly() {
        // 0.1 is not 1/10 in binary; the conversion must preserve the float's
        // exact value rather than silently re-rounding.
        let f = serde_json::json!(0.1);
        let r = parse_mass(&f).unwrap();
        assert_eq!(mass_to_f64(&r), 0.1);
        assert_ne!(r, rat(1, 10));
    }

    #[test]
    fn parse_mass_rejects_garbage() {
        assert!(parse_mass(&serde_json::json!("1/0")).is_err());
        assert!(parse_mass(&serde_json::json!("-1/4")).is_err());
        assert!(parse_mass(&serde_json::json!([1, 2])).is_err());
    }
}
