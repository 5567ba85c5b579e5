//! Serde helpers writing complex numbers as `{"re": .., "im": ..}`.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReIm {
    re: f64,
    im: f64,
}

pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
    ReIm { re: z.re, im: z.im }.serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
    let ReIm { re, im } = ReIm::deserialize(d)?;
    Ok(Complex64::new(re, im))
}

/// Same encoding for a sequence of complex numbers.
pub mod vec {
    use super::ReIm;
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        let items: Vec<ReIm> = v.iter().map(|z| ReIm { re: z.re, im: z.im }).collect();
        items.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let items = Vec::<ReIm>::deserialize(d)?;
        Ok(items
            .into_iter()
            .map(|c| Complex64::new(c.re, c.im))
            .collect())
    }
}

/// A 2x2 complex matrix as nested rows.
pub mod mat2 {
    use super::ReIm;
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &[[Complex64; 2]; 2], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<ReIm>> = m
            .iter()
            .map(|row| row.iter().map(|z| ReIm { re: z.re, im: z.im }).collect())
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[[Complex64; 2]; 2], D::Error> {
        use serde::de::Error;
        let rows = Vec::<Vec<ReIm>>::deserialize(d)?;
        if rows.len() != 2 || rows.iter().any(|r| r.len() != 2) {
            return Err(D::Error::custom("matrix must be 2x2"));
        }
        let z = |r: usize, c: usize| Complex64::new(rows[r][c].re, rows[r][c].im);
        Ok([[z(0, 0), z(0, 1)], [z(1, 0), z(1, 1)]])
    }
}
