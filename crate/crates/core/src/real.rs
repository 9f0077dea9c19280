//! Scalar abstraction shared by the numerical modules.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Floating point type the numerical core can run on (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + FftNum + Sum + Default + Display + Debug + Send + Sync + 'static
{
    /// Largest out-of-band energy fraction accepted when certifying a band limit.
    const BAND_TOL: f64;
    /// Relative tolerance for spectral round trips.
    const ROUNDTRIP_TOL: f64;

    fn of(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite f64")
    }

    fn f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    const BAND_TOL: f64 = 1e-12;
    const ROUNDTRIP_TOL: f64 = 1e-12;
}

impl Real for f32 {
    const BAND_TOL: f64 = 1e-9;
    const ROUNDTRIP_TOL: f64 = 1e-5;
}

/// `2^e` computed exactly for moderate exponents.
pub fn pow2(e: i32) -> f64 {
    2f64.powi(e)
}

/// Serde adapter writing infinite exponents as the string `"inf"`.
pub mod extended_float {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Wire {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Wire::deserialize(d)? {
            Wire::Num(v) => Ok(v),
            Wire::Text(t) => parse(&t).map_err(de::Error::custom),
        }
    }

    /// Parses a number or `inf` / `infinity`.
    pub fn parse(t: &str) -> Result<f64, String> {
        match t.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "+inf" => Ok(f64::INFINITY),
            other => other.parse::<f64>().map_err(|e| format!("bad exponent {t:?}: {e}")),
        }
    }
}
