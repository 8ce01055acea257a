//! Slopes on a torus, their intersection numbers, the surgery set `V`, and
//! prong counts of surgery cores.

use std::fmt;
use std::ops::RangeInclusive;

use num_integer::Integer;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SlopeError {
    #[error("0/0 is not a slope")]
    Zero,
    #[error("domain error: {0}")]
    Domain(String),
    #[error(
        "degeneracy slope {0} is neither 1/0 nor of the form r/1; the meridian must meet it at \
         most once"
    )]
    Degeneracy(Slope),
}

/// An unoriented simple closed curve class `a/b`, stored with `b >= 0`,
/// `gcd(|a|, b) = 1`, and `1/0` as the only infinite slope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "(i64, i64)", into = "(i64, i64)")]
pub struct Slope {
    a: i64,
    b: i64,
}

impl Slope {
    pub const INFINITY: Slope = Slope { a: 1, b: 0 };

    pub fn new(a: i64, b: i64) -> Result<Self, SlopeError> {
        if a == 0 && b == 0 {
            return Err(SlopeError::Zero);
        }
        let g = a.gcd(&b);
        let (mut a, mut b) = (a / g, b / g);
        if b < 0 || (b == 0 && a < 0) {
            a = -a;
            b = -b;
        }
        Ok(Slope { a, b })
    }

    pub fn integer(r: i64) -> Self {
        Slope { a: r, b: 1 }
    }

    pub fn numerator(&self) -> i64 {
        self.a
    }

    pub fn denominator(&self) -> i64 {
        self.b
    }

    pub fn is_infinite(&self) -> bool {
        self.b == 0
    }

    /// Image under an integer matrix acting on `(a, b)` column vectors.
    pub fn transform(&self, m: [[i64; 2]; 2]) -> Result<Slope, SlopeError> {
        Slope::new(
            m[0][0] * self.a + m[0][1] * self.b,
            m[1][0] * self.a + m[1][1] * self.b,
        )
    }
}

impl TryFrom<(i64, i64)> for Slope {
    type Error = SlopeError;

    fn try_from(v: (i64, i64)) -> Result<Self, SlopeError> {
        Slope::new(v.0, v.1)
    }
}

impl From<Slope> for (i64, i64) {
    fn from(s: Slope) -> Self {
        (s.a, s.b)
    }
}

impl fmt::Display for Slope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.a, self.b)
    }
}

/// `|a_u b_v - b_u a_v|`.
pub fn intersection_number(u: Slope, v: Slope) -> u64 {
    (u.a as i128 * v.b as i128 - u.b as i128 * v.a as i128).unsigned_abs() as u64
}

/// Membership in `V = { p/q : gcd(p, q) = 1, q >= 6, p mod q not in {0, ±1, ±2} }`.
#[allow(non_snake_case)]
pub fn in_V(p: i64, q: i64) -> Result<bool, SlopeError> {
    if q <= 0 {
        return Err(SlopeError::Domain(format!(
            "denominator must be positive, got {q}"
        )));
    }
    if p == 0 || p.gcd(&q) != 1 || q < 6 {
        return Ok(false);
    }
    let m = p.rem_euclid(q);
    Ok(!(m <= 2 || m >= q - 2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurgeryVerdict {
    pub slope: Slope,
    pub degeneracy: Slope,
    pub iota: u64,
    pub blows_down: bool,
    pub singular_core: bool,
}

/// Prong count of the surgery core for surgery slope `slope` against the
/// degeneracy slope, which must be `1/0` or `r/1`.
pub fn surgery_verdict(slope: Slope, degeneracy: Slope) -> Result<SurgeryVerdict, SlopeError> {
    if !(degeneracy.b == 0 || degeneracy.b == 1) {
        return Err(SlopeError::Degeneracy(degeneracy));
    }
    let iota = intersection_number(degeneracy, slope);
    Ok(SurgeryVerdict {
        slope,
        degeneracy,
        iota,
        blows_down: iota >= 2,
        singular_core: iota >= 3,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub slopes: usize,
    pub v_members: usize,
    pub rows: usize,
    /// Minimum `iota` over `V` members and all degeneracy slopes.
    pub min_iota_over_v: Option<u64>,
    pub argmin: Option<(Slope, Slope)>,
    /// Every `V` member has `iota >= 3` against every degeneracy slope.
    pub bound_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanResult {
    pub rows: Vec<SurgeryVerdict>,
    pub summary: ScanSummary,
}

/// All reduced `p/q` with `p`, `q` in range (`q >= 1`) against `1/0` and
/// every `r/1`. Rows are ordered by `(q, p, r)` with `1/0` last.
pub fn scan_slopes(
    p_range: RangeInclusive<i64>,
    q_range: RangeInclusive<i64>,
    r_range: RangeInclusive<i64>,
) -> ScanResult {
    let q_lo = (*q_range.start()).max(1);
    let qs: Vec<i64> = (q_lo..=*q_range.end()).collect();
    let mut degeneracies: Vec<Slope> = r_range.clone().map(Slope::integer).collect();
    degeneracies.push(Slope::INFINITY);

    let per_q: Vec<(usize, usize, Vec<SurgeryVerdict>)> = qs
        .par_iter()
        .map(|&q| {
            let mut rows = Vec::new();
            let (mut slopes, mut members) = (0, 0);
            for p in p_range.clone() {
                if p.gcd(&q) != 1 {
                    continue;
                }
                slopes += 1;
                if in_V(p, q).unwrap_or(false) {
                    members += 1;
                }
                let s = Slope { a: p, b: q };
                for &d in &degeneracies {
                    rows.push(surgery_verdict(s, d).expect("admitted degeneracy"));
                }
            }
            (slopes, members, rows)
        })
        .collect();

    let mut rows = Vec::new();
    let (mut slopes, mut v_members) = (0, 0);
    for (s, m, r) in per_q {
        slopes += s;
        v_members += m;
        rows.extend(r);
    }
    let mut min_iota_over_v = None;
    let mut argmin = None;
    for v in &rows {
        if in_V(v.slope.a, v.slope.b).unwrap_or(false) && min_iota_over_v.is_none_or(|m| v.iota < m)
        {
            min_iota_over_v = Some(v.iota);
            argmin = Some((v.slope, v.degeneracy));
        }
    }
    let summary = ScanSummary {
        slopes,
        v_members,
        rows: rows.len(),
        min_iota_over_v,
        argmin,
        bound_holds: min_iota_over_v.is_none_or(|m| m >= 3),
    };
    ScanResult { rows, summary }
}

pub const SCAN_CSV_HEADER: [&str; 6] = ["p", "q", "r", "iota", "blows_down", "singular_core"];

pub fn write_scan_csv<W: std::io::Write>(rows: &[SurgeryVerdict], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SCAN_CSV_HEADER)?;
    for v in rows {
        let r = if v.degeneracy.is_infinite() {
            "inf".to_string()
        } else {
            v.degeneracy.a.to_string()
        };
        w.write_record([
            v.slope.a.to_string(),
            v.slope.b.to_string(),
            r,
            v.iota.to_string(),
            v.blows_down.to_string(),
            v.singular_core.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(a: i64, b: i64) -> Slope {
        Slope::new(a, b).unwrap()
    }

    #[test]
    fn normalization() {
        assert_eq!(s(-2, -4), s(1, 2));
        assert_eq!(s(-3, 0), Slope::INFINITY);
        assert_eq!(s(0, -5), s(0, 1));
        assert_eq!(Slope::new(0, 0), Err(SlopeError::Zero));
        assert_eq!(s(3, -7).numerator(), -3);
    }

    #[test]
    fn intersection_examples() {
        assert_eq!(intersection_number(Slope::INFINITY, s(10, 7)), 7);
        assert_eq!(intersection_number(Slope::integer(1), s(10, 7)), 3);
        assert_eq!(intersection_number(s(10, 7), s(10, 7)), 0);
    }

    #[test]
    fn membership_examples() {
        assert!(!in_V(7, 6).unwrap());
        assert!(in_V(10, 7).unwrap());
        assert!(!in_V(9, 7).unwrap());
        assert!(!in_V(5, 7).unwrap());
        assert!(!in_V(3, 5).unwrap());
        assert!(matches!(in_V(1, 0), Err(SlopeError::Domain(_))));
    }

    #[test]
    fn verdict_examples() {
        let v = surgery_verdict(s(10, 7), Slope::INFINITY).unwrap();
        assert_eq!((v.iota, v.singular_core), (7, true));
        let v = surgery_verdict(s(10, 7), Slope::integer(1)).unwrap();
        assert_eq!((v.iota, v.singular_core), (3, true));
        let v = surgery_verdict(s(3, 1), Slope::integer(3)).unwrap();
        assert_eq!((v.iota, v.blows_down), (0, false));
        assert_eq!(
            surgery_verdict(s(10, 7), s(1, 2)),
            Err(SlopeError::Degeneracy(s(1, 2)))
        );
    }

    #[test]
    fn scan_edges() {
        #[allow(clippy::reversed_empty_ranges)]
        let empty = scan_slopes(1..=0, 1..=5, -2..=2);
        assert!(empty.rows.is_empty());
        assert_eq!(empty.summary.min_iota_over_v, None);
        let single = scan_slopes(10..=10, 7..=7, -20..=20);
        assert_eq!(single.rows.len(), 42);
        assert!(single.rows.iter().all(|v| v.iota >= 3));
        assert!(single.rows.last().unwrap().degeneracy.is_infinite());
    }

    #[test]
    fn serde_normalizes() {
        let v: Slope = serde_json::from_str("[-4, -6]").unwrap();
        assert_eq!(v, s(2, 3));
        assert!(serde_json::from_str::<Slope>("[0, 0]").is_err());
    }
}
