use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A flux-like quantity: exact when written as a string (`"1/2"`, `"-3"`,
/// `"0.25"`), a plain float when written as a TOML float.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Number {
    Exact(Ratio<i64>),
    Float(f64),
}

impl Number {
    pub fn value(&self) -> f64 {
        match *self {
            Number::Exact(r) => *r.numer() as f64 / *r.denom() as f64,
            Number::Float(v) => v,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Number::Exact(_))
    }

    pub fn integer(n: i64) -> Self {
        Number::Exact(Ratio::from_integer(n))
    }
}

impl From<Ratio<i64>> for Number {
    fn from(r: Ratio<i64>) -> Self {
        Number::Exact(r)
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Exact(r) => write!(f, "{r}"),
            Number::Float(v) => write!(f, "{v:?}"),
        }
    }
}

fn parse_decimal(s: &str) -> Option<Ratio<i64>> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = body.split_once('.')?;
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) || frac.len() > 15 {
        return None;
    }
    let denom = 10i64.checked_pow(frac.len() as u32)?;
    let whole: i64 = if int.is_empty() { 0 } else { int.parse().ok()? };
    let part: i64 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
    let numer = whole.checked_mul(denom)?.checked_add(part)?;
    Some(Ratio::new(if neg { -numer } else { numer }, denom))
}

impl FromStr for Number {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let bad = || format!("{s:?} is not a rational number (expected forms like \"1/2\", \"-3\" or \"0.25\")");
        if let Some((n, d)) = t.split_once('/') {
            let n: i64 = n.trim().parse().map_err(|_| bad())?;
            let d: i64 = d.trim().parse().map_err(|_| bad())?;
            if d == 0 {
                return Err(format!("{s:?} has a zero denominator"));
            }
            return Ok(Number::Exact(Ratio::new(n, d)));
        }
        if let Ok(n) = t.parse::<i64>() {
            return Ok(Number::integer(n));
        }
        parse_decimal(t).map(Number::Exact).ok_or_else(bad)
    }
}

impl Serialize for Number {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Number::Exact(r) => s.serialize_str(&r.to_string()),
            Number::Float(v) => s.serialize_f64(*v),
        }
    }
}

struct NumberVisitor;

impl Visitor<'_> for NumberVisitor {
    type Value = Number;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a rational string such as \"1/2\", an integer, or a float")
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Number, E> {
        v.parse().map_err(E::custom)
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Number, E> {
        Ok(Number::integer(v))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Number, E> {
        i64::try_from(v).map(Number::integer).map_err(E::custom)
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Number, E> {
        if v.is_finite() {
            Ok(Number::Float(v))
        } else {
            Err(E::custom(format!("{v} is not finite")))
        }
    }
}

impl<'de> Deserialize<'de> for Number {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        d.deserialize_any(NumberVisitor)
    }
}

/// Comma-separated list, as taken by `--delta-alpha-list`.
pub fn parse_list(s: &str) -> Result<Vec<Number>, String> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(str::parse).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_strings_are_exact() {
        assert_eq!("1/2".parse::<Number>().unwrap(), Number::Exact(Ratio::new(1, 2)));
        assert_eq!("-6/4".parse::<Number>().unwrap(), Number::Exact(Ratio::new(-3, 2)));
        assert_eq!("7".parse::<Number>().unwrap(), Number::integer(7));
        assert_eq!("0.25".parse::<Number>().unwrap(), Number::Exact(Ratio::new(1, 4)));
        assert_eq!("-1.3".parse::<Number>().unwrap(), Number::Exact(Ratio::new(-13, 10)));
        assert!("1/0".parse::<Number>().is_err());
        assert!("half".parse::<Number>().is_err());
        assert!(".".parse::<Number>().is_err());
    }

    #[test]
    fn list_parsing() {
        let v = parse_list("0, 1/4,0.5 ,1").unwrap();
        assert_eq!(v.len(), 4);
        assert_eq!(v[1].value(), 0.25);
        assert!(parse_list("0,x").is_err());
    }

    #[test]
    fn toml_forms() {
        #[derive(Deserialize, Serialize, PartialEq, Debug)]
        struct T {
            a: Number,
            b: Number,
            c: Number,
        }
        let t: T = toml::from_str("a = \"1/2\"\nb = 3\nc = 0.3\n").unwrap();
        assert_eq!(t.a, Number::Exact(Ratio::new(1, 2)));
        assert_eq!(t.b, Number::integer(3));
        assert_eq!(t.c, Number::Float(0.3));
        let back: T = toml::from_str(&toml::to_string(&t).unwrap()).unwrap();
        assert_eq!(back, t);
    }
}
