//! Serializers writing big integers and rationals as decimal strings.

use num_bigint::BigUint;
use num_rational::BigRational;
use serde::ser::SerializeSeq;
use serde::Serializer;

pub fn biguint_vec<S: Serializer>(xs: &[BigUint], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for x in xs {
        seq.serialize_element(&x.to_string())?;
    }
    seq.end()
}

pub fn ratio<S: Serializer>(x: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(x)
}
