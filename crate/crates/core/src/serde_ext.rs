//! Serde adapter for floats that may be infinite. JSON has no representation
//! for infinities, so non-finite values are written as the strings
//! `"inf"`, `"-inf"` and `"nan"`.

use serde::{Deserialize, Deserializer, Serializer};

use crate::Scalar;

#[derive(Deserialize)]
#[serde(untagged)]
enum Repr {
    Num(f64),
    Text(String),
}

pub fn serialize<T: Scalar, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        v.serialize(s)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if v.is_sign_positive() {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

pub fn deserialize<'de, T: Scalar, D: Deserializer<'de>>(d: D) -> Result<T, D::Error> {
    match Repr::deserialize(d)? {
        Repr::Num(v) => Ok(T::lit(v)),
        Repr::Text(t) => match t.as_str() {
            "inf" | "+inf" => Ok(T::infinity()),
            "-inf" => Ok(T::neg_infinity()),
            "nan" => Ok(T::nan()),
            other => Err(serde::de::Error::custom(format!("not a number: {other}"))),
        },
    }
}

use serde::Serialize;

/// Same adapter for `Vec<T>`.
pub mod vec {
    use super::*;
    use serde::ser::SerializeSeq;

    struct Wrap<'a, T>(&'a T);

    impl<T: Scalar> Serialize for Wrap<'_, T> {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            super::serialize(self.0, s)
        }
    }

    pub fn serialize<T: Scalar, S: Serializer>(v: &[T], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            seq.serialize_element(&Wrap(x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, T: Scalar, D: Deserializer<'de>>(d: D) -> Result<Vec<T>, D::Error> {
        #[derive(Deserialize)]
        struct Item<T: Scalar>(#[serde(with = "super")] T);
        Ok(Vec::<Item<T>>::deserialize(d)?
            .into_iter()
            .map(|Item(v)| v)
            .collect())
    }
}
