//! Serde adapters: complex numbers are serialized as two-element
//! arrays [re, im] everywhere (configs, reports, fixtures).

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub mod cpx {
    use super::*;

    pub fn serialize<S: Serializer>(c: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [c.re, c.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let v = <[f64; 2]>::deserialize(d)?;
        Ok(Complex64::new(v[0], v[1]))
    }
}

pub mod cpx_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = v.iter().map(|c| [c.re, c.im]).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(pairs.into_iter().map(|v| Complex64::new(v[0], v[1])).collect())
    }
}

/// Parses "re" or "re,im" or "[re,im]" into a complex number.
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let t = s.trim().trim_start_matches('[').trim_end_matches(']');
    let parts: Vec<&str> = t.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [re] => re
            .parse::<f64>()
            .map(|x| Complex64::new(x, 0.0))
            .map_err(|e| e.to_string()),
        [re, im] => {
            let re = re.parse::<f64>().map_err(|e| e.to_string())?;
            let im = im.parse::<f64>().map_err(|e| e.to_string())?;
            Ok(Complex64::new(re, im))
        }
        _ => Err(format!("cannot parse complex number from {s:?}")),
    }
}

/// A complex value in wire format; used where a bare field is convenient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WireComplex(#[serde(with = "cpx")] pub Complex64);

impl From<Complex64> for WireComplex {
    fn from(c: Complex64) -> Self {
        WireComplex(c)
    }
}

impl<'de> WireComplex {
    pub fn get(self) -> Complex64 {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_roundtrip_as_pair() {
        let c = WireComplex(Complex64::new(1.5, -2.25));
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(s, "[1.5,-2.25]");
        let back: WireComplex = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn parse_complex_forms() {
        assert_eq!(parse_complex("0.5").unwrap(), Complex64::new(0.5, 0.0));
        assert_eq!(parse_complex("0.5,1").unwrap(), Complex64::new(0.5, 1.0));
        assert_eq!(parse_complex("[0.5, 1]").unwrap(), Complex64::new(0.5, 1.0));
        assert!(parse_complex("a,b").is_err());
    }
}
