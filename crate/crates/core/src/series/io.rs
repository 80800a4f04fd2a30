//! JSON-lines interchange: one header record followed by one record per term.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{MassSpec, MonomialKey, NormParams, TFSeries};
use crate::error::SeriesError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesHeader {
    pub n_max: u32,
    pub drop_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<MassSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm: Option<NormParams>,
    pub terms: usize,
}

#[derive(Serialize, Deserialize)]
struct TermRecord {
    #[serde(rename = "A")]
    support: Vec<u32>,
    l: Vec<i32>,
    alpha: Vec<u32>,
    re: f64,
    im: f64,
}

pub fn write_series<W: Write>(
    w: &mut W,
    h: &TFSeries,
    mass: Option<&MassSpec>,
    norm: Option<&NormParams>,
) -> Result<(), SeriesError> {
    let header = SeriesHeader {
        n_max: h.n_max(),
        drop_tol: h.drop_tol(),
        mass: mass.cloned(),
        norm: norm.copied(),
        terms: h.len(),
    };
    let line = serde_json::to_string(&header).map_err(|e| fmt_err(0, e))?;
    writeln!(w, "{line}")?;
    for (k, c) in h.iter() {
        let rec = TermRecord {
            support: k.support().collect(),
            l: k.factors().iter().map(|f| f.l).collect(),
            alpha: k.factors().iter().map(|f| f.alpha).collect(),
            re: c.re,
            im: c.im,
        };
        let line = serde_json::to_string(&rec).map_err(|e| fmt_err(0, e))?;
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Reads a series written by [`write_series`]. Blank lines and lines
/// starting with `#` are skipped, so a provenance block may precede the data.
pub fn read_series<R: BufRead>(r: R) -> Result<(SeriesHeader, TFSeries), SeriesError> {
    let mut header: Option<SeriesHeader> = None;
    let mut series = TFSeries::zero(0);
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        match &header {
            None => {
                let h: SeriesHeader = serde_json::from_str(t).map_err(|e| fmt_err(i + 1, e))?;
                series = TFSeries::zero(h.n_max).with_drop_tol(h.drop_tol);
                header = Some(h);
            }
            Some(_) => {
                let rec: TermRecord = serde_json::from_str(t).map_err(|e| fmt_err(i + 1, e))?;
                let key = MonomialKey::from_parts(&rec.support, &rec.l, &rec.alpha).map_err(|e| SeriesError::Format {
                    line: i + 1,
                    msg: e.to_string(),
                })?;
                series
                    .try_add_term(key, Complex64::new(rec.re, rec.im))
                    .map_err(|e| SeriesError::Format {
                        line: i + 1,
                        msg: e.to_string(),
                    })?;
            }
        }
    }
    let header = header.ok_or(SeriesError::Format {
        line: 0,
        msg: "missing header record".into(),
    })?;
    if header.terms != series.len() {
        return Err(SeriesError::Format {
            line: 0,
            msg: format!("header announces {} terms, found {}", header.terms, series.len()),
        });
    }
    Ok((header, series))
}

fn fmt_err(line: usize, e: serde_json::Error) -> SeriesError {
    SeriesError::Format {
        line,
        msg: e.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut h = TFSeries::zero(4);
        h.add_term(
            MonomialKey::from_parts(&[1, 3], &[2, -1], &[0, 1]).unwrap(),
            Complex64::new(0.1 + 0.2, -1.0 / 3.0),
        );
        h.add_term(MonomialKey::action(4), Complex64::new(f64::MIN_POSITIVE, 1e300));
        h.add_term(MonomialKey::constant(), Complex64::new(std::f64::consts::PI, 0.0));
        let mass = MassSpec::Exp { kappa: 1.0, n_max: 4 };
        let mut buf = Vec::new();
        write_series(&mut buf, &h, Some(&mass), None).unwrap();
        let (hdr, back) = read_series(buf.as_slice()).unwrap();
        assert_eq!(hdr.mass, Some(mass));
        assert_eq!(back.len(), h.len());
        for (k, c) in h.iter() {
            let d = back.coeff(k);
            assert_eq!(d.re.to_bits(), c.re.to_bits());
            assert_eq!(d.im.to_bits(), c.im.to_bits());
        }
    }

    #[test]
    fn rejects_bad_records() {
        let text = "{\"n_max\":2,\"drop_tol\":0.0,\"terms\":1}\n{\"A\":[3],\"l\":[1],\"alpha\":[0],\"re\":1.0,\"im\":0.0}\n";
        assert!(read_series(text.as_bytes()).is_err());
        assert!(read_series("".as_bytes()).is_err());
    }
}
