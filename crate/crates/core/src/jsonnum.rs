//! JSON encoding for series that may hold infinities.
//!
//! Finite values are plain numbers, `+inf` is the string `"inf"`, `-inf` is
//! `"-inf"` and a missing value is `null`.

pub mod opt_vec {
    use serde::de::{self, Deserializer, SeqAccess, Visitor};
    use serde::ser::{SerializeSeq, Serializer};
    use serde::Deserialize;

    pub fn serialize<S: Serializer>(values: &[Option<f64>], ser: S) -> Result<S::Ok, S::Error> {
        let mut seq = ser.serialize_seq(Some(values.len()))?;
        for v in values {
            match v {
                None => seq.serialize_element(&None::<f64>)?,
                Some(x) if x.is_finite() => seq.serialize_element(x)?,
                Some(x) if *x > 0.0 => seq.serialize_element("inf")?,
                Some(x) if *x < 0.0 => seq.serialize_element("-inf")?,
                Some(_) => seq.serialize_element(&None::<f64>)?,
            }
        }
        seq.end()
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Cell {
        Num(f64),
        Text(String),
        Null(()),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<Option<f64>>, D::Error> {
        struct SeqVisitor;

        impl<'de> Visitor<'de> for SeqVisitor {
            type Value = Vec<Option<f64>>;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("an array of numbers, \"inf\", \"-inf\" or null")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Self::Value, A::Error> {
                let mut out = Vec::with_capacity(seq.size_hint().unwrap_or(0));
                while let Some(cell) = seq.next_element::<Option<Cell>>()? {
                    out.push(match cell {
                        None | Some(Cell::Null(())) => None,
                        Some(Cell::Num(x)) => Some(x),
                        Some(Cell::Text(s)) => match s.as_str() {
                            "inf" => Some(f64::INFINITY),
                            "-inf" => Some(f64::NEG_INFINITY),
                            other => {
                                return Err(de::Error::custom(format!("unexpected string {other:?}")))
                            }
                        },
                    });
                }
                Ok(out)
            }
        }

        de.deserialize_seq(SeqVisitor)
    }
}
