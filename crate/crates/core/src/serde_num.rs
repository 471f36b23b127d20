//! JSON writes non-finite floats as `null`; this reads them back as NaN.

use serde::{Deserialize, Deserializer};

#[derive(Deserialize)]
#[serde(untagged)]
enum Num {
    F(f64),
    S(String),
    Null(()),
}

pub fn f64_or_nan<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(match Option::<Num>::deserialize(d)? {
        Some(Num::F(v)) => v,
        Some(Num::S(s)) => s.parse().map_err(serde::de::Error::custom)?,
        Some(Num::Null(())) | None => f64::NAN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Deserialize)]
    struct W {
        #[serde(deserialize_with = "f64_or_nan")]
        v: f64,
    }

    #[test]
    fn null_number_and_string() {
        let w: W = serde_json::from_str(r#"{"v": null}"#).unwrap();
        assert!(w.v.is_nan());
        let w: W = serde_json::from_str(r#"{"v": -2.5e-3}"#).unwrap();
        assert_eq!(w.v, -2.5e-3);
        let w: W = serde_json::from_str(r#"{"v": "inf"}"#).unwrap();
        assert_eq!(w.v, f64::INFINITY);
    }
}
