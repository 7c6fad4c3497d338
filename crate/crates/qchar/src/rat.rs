//! Small helpers around `BigRational`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{QError, QResult};

pub type Rat = BigRational;

pub fn r(n: i64, d: i64) -> Rat {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn ri(n: i64) -> Rat {
    BigRational::from_integer(BigInt::from(n))
}

/// Always prints `num/den`, even for integers.
pub fn fmt_rat(x: &Rat) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

pub fn parse_rat(s: &str) -> QResult<Rat> {
    let s = s.trim();
    let bad = || QError::Parse(format!("bad rational '{s}'"));
    if let Some((a, b)) = s.split_once('/') {
        let n: BigInt = a.trim().parse().map_err(|_| bad())?;
        let d: BigInt = b.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        Ok(BigRational::new(n, d))
    } else {
        let n: BigInt = s.parse().map_err(|_| bad())?;
        Ok(BigRational::from_integer(n))
    }
}

pub fn to_f64(x: &Rat) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        let n = x.numer().to_f64().unwrap_or(f64::NAN);
        let d = x.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Denominator as i64 (panics only on absurd sizes).
pub fn den_i64(x: &Rat) -> i64 {
    x.denom().to_i64().expect("denominator fits i64")
}

pub fn num_i64(x: &Rat) -> Option<i64> {
    x.numer().to_i64()
}

pub fn lcm(a: i64, b: i64) -> i64 {
    a.lcm(&b)
}

pub fn gcd(a: i64, b: i64) -> i64 {
    a.gcd(&b)
}

/// Express `x` on grid `d`: returns k with x = k/d, if exact.
pub fn on_grid(x: &Rat, d: i64) -> Option<i64> {
    let v = x * ri(d);
    if v.is_integer() {
        v.to_integer().to_i64()
    } else {
        None
    }
}

pub fn floor_i64(x: &Rat) -> i64 {
    x.floor().to_integer().to_i64().expect("floor fits i64")
}

pub fn ceil_i64(x: &Rat) -> i64 {
    x.ceil().to_integer().to_i64().expect("ceil fits i64")
}

pub fn is_nonneg_int(x: &Rat) -> bool {
    x.is_integer() && !x.is_negative()
}

pub fn one() -> Rat {
    Rat::one()
}

pub fn zero() -> Rat {
    Rat::zero()
}

pub fn rat_vec(v: &[i64]) -> Vec<Rat> {
    v.iter().map(|&x| ri(x)).collect()
}

pub fn rat_mat(m: &[&[i64]]) -> Vec<Vec<Rat>> {
    m.iter().map(|row| rat_vec(row)).collect()
}

pub fn scale_mat(m: &[Vec<Rat>], s: &Rat) -> Vec<Vec<Rat>> {
    m.iter().map(|row| row.iter().map(|x| x * s).collect()).collect()
}

/// A rational that serialises as the string "num/den" (integers are accepted on input).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RatS(pub Rat);

impl From<Rat> for RatS {
    fn from(x: Rat) -> Self {
        RatS(x)
    }
}

impl serde::Serialize for RatS {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_rat(&self.0))
    }
}

impl<'de> serde::Deserialize<'de> for RatS {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = RatS;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a rational \"num/den\" or an integer")
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<RatS, E> {
                parse_rat(v).map(RatS).map_err(E::custom)
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<RatS, E> {
                Ok(RatS(ri(v)))
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<RatS, E> {
                i64::try_from(v).map(|x| RatS(ri(x))).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print() {
        assert_eq!(parse_rat("3/6").unwrap(), r(1, 2));
        assert_eq!(parse_rat("-4").unwrap(), ri(-4));
        assert_eq!(fmt_rat(&ri(5)), "5/1");
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("x").is_err());
    }

    #[test]
    fn grid() {
        assert_eq!(on_grid(&r(1, 3), 6), Some(2));
        assert_eq!(on_grid(&r(1, 4), 6), None);
    }
}
