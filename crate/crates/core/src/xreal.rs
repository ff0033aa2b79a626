//! Extended real numbers with the conventions used throughout the library.
//!
//! An [`XReal`] is a finite real, `+inf` or `-inf`. NaN is never representable:
//! every constructor and operation that could produce it either applies one of
//! the conventions below or returns an error.
//!
//! * `0 * (+-inf) = 0`
//! * `a / 0` is `+inf`, `-inf` or `0` according to the sign of `a`
//! * `a / (+-inf) = 0` for finite `a`
//! * `log 0 = -inf`, `log(+inf) = +inf`

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An extended real number. Never NaN.
#[derive(Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct XReal(f64);

impl XReal {
    pub const ZERO: XReal = XReal(0.0);
    pub const ONE: XReal = XReal(1.0);
    pub const INF: XReal = XReal(f64::INFINITY);
    pub const NEG_INF: XReal = XReal(f64::NEG_INFINITY);

    /// Wraps a float, rejecting NaN.
    pub fn new(v: f64) -> Result<XReal> {
        if v.is_nan() {
            Err(Error::NotANumber { context: "XReal::new" })
        } else {
            Ok(XReal(v))
        }
    }

    /// Wraps a float that is known not to be NaN.
    ///
    /// # Panics
    /// Panics on NaN.
    pub fn from_f64(v: f64) -> XReal {
        assert!(!v.is_nan(), "XReal cannot hold NaN");
        XReal(v)
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    pub fn is_pos_inf(self) -> bool {
        self.0 == f64::INFINITY
    }

    pub fn is_neg_inf(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    /// Product with `0 * inf = 0`.
    pub fn xmul(self, other: XReal) -> XReal {
        XReal(xmul(self.0, other.0))
    }

    /// Quotient with the division-by-zero and division-by-infinity conventions.
    /// `inf / inf` is undefined and reported as an error.
    pub fn xdiv(self, other: XReal) -> Result<XReal> {
        xdiv(self.0, other.0).map(XReal)
    }

    /// Natural logarithm, defined on `[0, +inf]`.
    pub fn xlog(self) -> Result<XReal> {
        if self.0 < 0.0 {
            return Err(Error::Undefined("log of a negative number"));
        }
        Ok(XReal(self.0.ln()))
    }

    pub fn xexp(self) -> XReal {
        XReal(self.0.exp())
    }

    /// Sum; `inf + (-inf)` is an error.
    pub fn xadd(self, other: XReal) -> Result<XReal> {
        xadd(self.0, other.0).map(XReal)
    }

    pub fn max(self, other: XReal) -> XReal {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn min(self, other: XReal) -> XReal {
        if self <= other {
            self
        } else {
            other
        }
    }
}

/// Product of floats with `0 * inf = 0`.
pub fn xmul(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

/// Quotient of floats with `a/0 = sign(a) inf`, `0/0 = 0` and `a/inf = 0`.
pub fn xdiv(a: f64, b: f64) -> Result<f64> {
    if a.is_nan() || b.is_nan() {
        return Err(Error::NotANumber { context: "xdiv" });
    }
    if b == 0.0 {
        return Ok(if a > 0.0 {
            f64::INFINITY
        } else if a < 0.0 {
            f64::NEG_INFINITY
        } else {
            0.0
        });
    }
    if b.is_infinite() {
        if a.is_infinite() {
            return Err(Error::Undefined("infinity divided by infinity"));
        }
        return Ok(0.0);
    }
    Ok(a / b)
}

/// Sum of floats; opposite infinities are an error.
pub fn xadd(a: f64, b: f64) -> Result<f64> {
    let s = a + b;
    if s.is_nan() {
        Err(Error::Undefined("infinity minus infinity"))
    } else {
        Ok(s)
    }
}

impl Eq for XReal {}

impl Ord for XReal {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.partial_cmp(&other.0).expect("XReal is never NaN")
    }
}

#[allow(clippy::derived_hash_with_manual_eq)]
impl std::hash::Hash for XReal {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        let v = if self.0 == 0.0 { 0.0f64 } else { self.0 };
        v.to_bits().hash(state);
    }
}

impl std::ops::Neg for XReal {
    type Output = XReal;
    fn neg(self) -> XReal {
        XReal(-self.0)
    }
}

impl TryFrom<f64> for XReal {
    type Error = Error;
    fn try_from(v: f64) -> Result<XReal> {
        XReal::new(v)
    }
}

impl From<XReal> for f64 {
    fn from(x: XReal) -> f64 {
        x.0
    }
}

impl fmt::Debug for XReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for XReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == f64::INFINITY {
            write!(f, "inf")
        } else if self.0 == f64::NEG_INFINITY {
            write!(f, "-inf")
        } else {
            fmt::Display::fmt(&self.0, f)
        }
    }
}

impl std::str::FromStr for XReal {
    type Err = Error;
    fn from_str(s: &str) -> Result<XReal> {
        match s.trim() {
            "inf" | "+inf" | "Infinity" | "+Infinity" => Ok(XReal::INF),
            "-inf" | "-Infinity" => Ok(XReal::NEG_INF),
            t => t
                .parse::<f64>()
                .map_err(|_| Error::Invalid(format!("cannot parse {t:?} as a number")))
                .and_then(XReal::new),
        }
    }
}

impl Serialize for XReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str(&self.to_string())
        }
    }
}

impl<'de> Deserialize<'de> for XReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<XReal, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => XReal::new(v).map_err(serde::de::Error::custom),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// `log(sum(exp(w)))` over a slice, returning `-inf` for an empty slice or all `-inf`.
pub fn log_sum_exp(ws: &[f64]) -> f64 {
    log_sum_exp_iter(ws.iter().copied())
}

/// Iterator form of [`log_sum_exp`]. Consumes a clonable iterator twice.
pub fn log_sum_exp_iter<I>(ws: I) -> f64
where
    I: Iterator<Item = f64> + Clone,
{
    let m = ws.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if m == f64::INFINITY {
        return f64::INFINITY;
    }
    let s: f64 = ws.map(|w| (w - m).exp()).sum();
    m + s.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiplication_table() {
        let vals = [f64::NEG_INFINITY, -2.0, 0.0, 3.0, f64::INFINITY];
        for &a in &vals {
            for &b in &vals {
                let p = xmul(a, b);
                assert!(!p.is_nan());
                if a == 0.0 || b == 0.0 {
                    assert_eq!(p, 0.0);
                } else {
                    assert_eq!(p.signum(), a.signum() * b.signum());
                }
            }
        }
    }

    #[test]
    fn division_table() {
        assert_eq!(xdiv(1.0, 0.0).unwrap(), f64::INFINITY);
        assert_eq!(xdiv(-1.0, 0.0).unwrap(), f64::NEG_INFINITY);
        assert_eq!(xdiv(0.0, 0.0).unwrap(), 0.0);
        assert_eq!(xdiv(5.0, f64::INFINITY).unwrap(), 0.0);
        assert_eq!(xdiv(-5.0, f64::NEG_INFINITY).unwrap(), 0.0);
        assert_eq!(xdiv(f64::INFINITY, 2.0).unwrap(), f64::INFINITY);
        assert_eq!(xdiv(f64::INFINITY, -2.0).unwrap(), f64::NEG_INFINITY);
        assert_eq!(xdiv(f64::INFINITY, 0.0).unwrap(), f64::INFINITY);
        assert!(xdiv(f64::INFINITY, f64::INFINITY).is_err());
        assert_eq!(xdiv(6.0, 3.0).unwrap(), 2.0);
    }

    #[test]
    fn log_conventions() {
        assert_eq!(XReal::ZERO.xlog().unwrap(), XReal::NEG_INF);
        assert_eq!(XReal::INF.xlog().unwrap(), XReal::INF);
        assert_eq!(XReal::ZERO.xmul(XReal::ZERO.xlog().unwrap()), XReal::ZERO);
        assert!(XReal::from_f64(-1.0).xlog().is_err());
    }

    #[test]
    fn addition_rejects_opposite_infinities() {
        assert!(XReal::INF.xadd(XReal::NEG_INF).is_err());
        assert_eq!(XReal::INF.xadd(XReal::from_f64(-3.0)).unwrap(), XReal::INF);
    }

    #[test]
    fn ordering_and_nan() {
        assert!(XReal::new(f64::NAN).is_err());
        let mut v = vec![XReal::INF, XReal::from_f64(1.0), XReal::NEG_INF, XReal::ZERO];
        v.sort();
        assert_eq!(v, vec![XReal::NEG_INF, XReal::ZERO, XReal::from_f64(1.0), XReal::INF]);
    }

    #[test]
    fn text_round_trip() {
        for x in [XReal::INF, XReal::NEG_INF, XReal::from_f64(-0.25)] {
            let back: XReal = x.to_string().parse().unwrap();
            assert_eq!(back, x);
        }
        let json = serde_json::to_string(&vec![XReal::INF, XReal::ONE]).unwrap();
        assert_eq!(json, "[\"inf\",1.0]");
        let back: Vec<XReal> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, vec![XReal::INF, XReal::ONE]);
    }

    #[test]
    fn lse_edge_cases() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[0.0, 0.0]) - 2f64.ln()).abs() < 1e-15);
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }
}
