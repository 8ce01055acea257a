//! The q-variable chain algebra of rational SFT: graded variables,
//! Koszul-sign canonical forms, partitioned q-monomials, gluing against
//! the Hamiltonian `h`, and an independent brute-force gluing oracle.

mod product;
mod suite;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use product::{MatchingRecord, BRUTE_FORCE_CAP};
pub use suite::{random_instance, run_suite, Instance, Suite, SuiteReport};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SftError {
    #[error("unknown orbit `{0}`")]
    UnknownOrbit(String),
    #[error("orbit `{0}` is bad and cannot carry a variable")]
    BadOrbit(String),
    #[error("invalid orbit table: {0}")]
    Table(String),
    #[error("homology exponent has length {found}, the table has rank {expected}")]
    Homology { expected: usize, found: usize },
    #[error("invalid monomial: {0}")]
    Monomial(String),
    #[error("term {index} of h has even parity")]
    EvenTerm { index: usize },
    #[error("brute force is capped at {cap} variables, got {size}")]
    SizeCap { size: usize, cap: usize },
}

pub type Result<T> = std::result::Result<T, SftError>;

/// Rationals travel through JSON as `"a/b"` or `"a"` strings.
pub(crate) mod rational {
    use super::*;

    pub fn serialize<S: Serializer>(v: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<BigRational, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(n) => Ok(BigRational::from_integer(BigInt::from(n))),
            Raw::Text(t) => BigRational::from_str(t.trim()).map_err(serde::de::Error::custom),
        }
    }
}

fn one() -> BigRational {
    BigRational::one()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitSym {
    pub id: String,
    /// Grading mod 2 of both `p_gamma` and `q_gamma`.
    pub parity: u8,
    #[serde(default = "default_true")]
    pub good: bool,
    #[serde(with = "rational", default = "one")]
    pub kappa: BigRational,
    /// Free part of the class in `H_2`; informational.
    #[serde(default)]
    pub homology: Vec<i64>,
}

fn default_true() -> bool {
    true
}

impl OrbitSym {
    pub fn new(id: &str, parity: u8, kappa: BigRational) -> Self {
        Self {
            id: id.to_string(),
            parity,
            good: true,
            kappa,
            homology: Vec::new(),
        }
    }
}

/// An `S^1` Morse-Bott family splits into a positive hyperbolic orbit (odd)
/// and an elliptic one (even), named `{id}.h` and `{id}.e`.
pub fn morse_bott_pair(id: &str, kappa: BigRational, homology: Vec<i64>) -> [OrbitSym; 2] {
    let mk = |suffix: &str, parity| OrbitSym {
        id: format!("{id}.{suffix}"),
        parity,
        good: true,
        kappa: kappa.clone(),
        homology: homology.clone(),
    };
    [mk("h", 1), mk("e", 0)]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tag {
    P,
    Q,
}

/// `p_gamma` or `q_gamma`; serialized as `"p:gamma"` / `"q:gamma"`.
/// Ordering is by orbit id, then tag.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    pub orbit: String,
    pub tag: Tag,
}

impl Var {
    pub fn p(orbit: &str) -> Self {
        Self {
            orbit: orbit.into(),
            tag: Tag::P,
        }
    }

    pub fn q(orbit: &str) -> Self {
        Self {
            orbit: orbit.into(),
            tag: Tag::Q,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = match self.tag {
            Tag::P => "p",
            Tag::Q => "q",
        };
        write!(f, "{t}:{}", self.orbit)
    }
}

impl FromStr for Var {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.split_once(':') {
            Some(("p", o)) if !o.is_empty() => Ok(Var::p(o)),
            Some(("q", o)) if !o.is_empty() => Ok(Var::q(o)),
            _ => Err(format!("expected `p:<orbit>` or `q:<orbit>`, got `{s}`")),
        }
    }
}

impl Serialize for Var {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Var {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// `coefficient * e^homology * vars[0] vars[1] ...`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Word {
    pub vars: Vec<Var>,
    #[serde(with = "rational", default = "one")]
    pub coefficient: BigRational,
    #[serde(default)]
    pub homology: Vec<i64>,
}

impl Word {
    pub fn new(vars: Vec<Var>) -> Self {
        Self {
            vars,
            coefficient: one(),
            homology: Vec::new(),
        }
    }

    pub fn with_coefficient(mut self, c: BigRational) -> Self {
        self.coefficient = c;
        self
    }

    pub fn with_homology(mut self, h: Vec<i64>) -> Self {
        self.homology = h;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.coefficient.is_zero()
    }

    fn zero(rank: usize) -> Self {
        Self {
            vars: Vec::new(),
            coefficient: BigRational::zero(),
            homology: vec![0; rank],
        }
    }
}

/// A q-word with a partition of its positions (0-based) into blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QMonomial {
    pub word: Word,
    pub blocks: Vec<Vec<usize>>,
}

impl QMonomial {
    pub fn empty() -> Self {
        Self {
            word: Word::new(Vec::new()),
            blocks: Vec::new(),
        }
    }

    /// Every letter in its own block.
    pub fn singletons(word: Word) -> Self {
        let blocks = (0..word.vars.len()).map(|i| vec![i]).collect();
        Self { word, blocks }
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_zero(&self) -> bool {
        self.word.is_zero()
    }
}

/// `h`: a finite sum of canonical words, each of odd total parity unless
/// the check was explicitly waived.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HPoly {
    terms: Vec<Word>,
}

impl HPoly {
    pub fn new(table: &OrbitTable, terms: Vec<Word>, allow_even: bool) -> Result<Self> {
        let mut out = Vec::with_capacity(terms.len());
        for (index, t) in terms.into_iter().enumerate() {
            let t = table.canonicalize(&t)?;
            if t.is_zero() {
                continue;
            }
            if !allow_even && table.word_parity(&t)? == 0 {
                return Err(SftError::EvenTerm { index });
            }
            out.push(t);
        }
        Ok(Self { terms: out })
    }

    pub fn terms(&self) -> &[Word] {
        &self.terms
    }
}

/// Orbit data plus the Novikov truncation: terms whose homology exponent
/// has L1 norm above `novikov_cap` are dropped and flagged.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitTable {
    #[serde(default)]
    pub rank: usize,
    pub orbits: Vec<OrbitSym>,
    #[serde(default)]
    pub novikov_cap: Option<u64>,
    #[serde(skip)]
    index: BTreeMap<String, usize>,
}

impl OrbitTable {
    pub fn new(rank: usize, orbits: Vec<OrbitSym>) -> Result<Self> {
        let mut t = Self {
            rank,
            orbits,
            novikov_cap: None,
            index: BTreeMap::new(),
        };
        t.reindex()?;
        Ok(t)
    }

    pub fn with_novikov_cap(mut self, cap: Option<u64>) -> Self {
        self.novikov_cap = cap;
        self
    }

    /// Rebuild the id index after deserialization and validate.
    pub fn reindex(&mut self) -> Result<()> {
        self.index.clear();
        for (i, o) in self.orbits.iter().enumerate() {
            if o.id.is_empty() || o.id.contains(':') {
                return Err(SftError::Table(format!("invalid orbit id `{}`", o.id)));
            }
            if o.parity > 1 {
                return Err(SftError::Table(format!(
                    "orbit `{}` has parity {}",
                    o.id, o.parity
                )));
            }
            if !o.kappa.is_positive() {
                return Err(SftError::Table(format!(
                    "orbit `{}` has nonpositive weight",
                    o.id
                )));
            }
            if !o.homology.is_empty() && o.homology.len() != self.rank {
                return Err(SftError::Homology {
                    expected: self.rank,
                    found: o.homology.len(),
                });
            }
            if self.index.insert(o.id.clone(), i).is_some() {
                return Err(SftError::Table(format!("duplicate orbit id `{}`", o.id)));
            }
        }
        Ok(())
    }

    pub fn orbit(&self, id: &str) -> Result<&OrbitSym> {
        let i = self
            .index
            .get(id)
            .ok_or_else(|| SftError::UnknownOrbit(id.to_string()))?;
        let o = &self.orbits[*i];
        if !o.good {
            return Err(SftError::BadOrbit(id.to_string()));
        }
        Ok(o)
    }

    pub fn parity(&self, v: &Var) -> Result<u8> {
        Ok(self.orbit(&v.orbit)?.parity)
    }

    pub fn word_parity(&self, w: &Word) -> Result<u8> {
        let mut total = 0;
        for v in &w.vars {
            total ^= self.parity(v)?;
        }
        Ok(total)
    }

    fn homology(&self, h: &[i64]) -> Result<Vec<i64>> {
        if h.is_empty() {
            Ok(vec![0; self.rank])
        } else if h.len() == self.rank {
            Ok(h.to_vec())
        } else {
            Err(SftError::Homology {
                expected: self.rank,
                found: h.len(),
            })
        }
    }

    /// Sort into canonical order and return the permutation used:
    /// `perm[k]` is the input position of output letter `k`.
    fn sort_word(&self, w: &Word) -> Result<(Word, Vec<usize>)> {
        let parities: Vec<u8> = w
            .vars
            .iter()
            .map(|v| self.parity(v))
            .collect::<Result<_>>()?;
        let homology = self.homology(&w.homology)?;
        if w.is_zero() {
            return Ok((Word::zero(self.rank), Vec::new()));
        }
        let mut perm: Vec<usize> = (0..w.vars.len()).collect();
        let mut negative = false;
        // Insertion sort by adjacent swaps; equal keys never swap, so it is stable.
        for i in 1..perm.len() {
            let mut j = i;
            while j > 0 && w.vars[perm[j - 1]] > w.vars[perm[j]] {
                if parities[perm[j - 1]] & parities[perm[j]] == 1 {
                    negative = !negative;
                }
                perm.swap(j - 1, j);
                j -= 1;
            }
        }
        let vars: Vec<Var> = perm.iter().map(|&k| w.vars[k].clone()).collect();
        let odd_square = vars
            .windows(2)
            .any(|p| p[0] == p[1] && self.parity(&p[0]).unwrap_or(0) == 1);
        if odd_square {
            return Ok((Word::zero(self.rank), Vec::new()));
        }
        let mut coefficient = w.coefficient.clone();
        if negative {
            coefficient = -coefficient;
        }
        Ok((
            Word {
                vars,
                coefficient,
                homology,
            },
            perm,
        ))
    }

    /// Koszul-canonical form; a repeated odd variable gives the zero word.
    pub fn canonicalize(&self, w: &Word) -> Result<Word> {
        Ok(self.sort_word(w)?.0)
    }

    pub fn canonicalize_monomial(&self, m: &QMonomial) -> Result<QMonomial> {
        let n = m.word.vars.len();
        if let Some(v) = m.word.vars.iter().find(|v| v.tag != Tag::Q) {
            return Err(SftError::Monomial(format!("{v} is not a q-variable")));
        }
        let mut seen = vec![false; n];
        for b in &m.blocks {
            if b.is_empty() {
                return Err(SftError::Monomial("empty block".into()));
            }
            for &i in b {
                if i >= n || seen[i] {
                    return Err(SftError::Monomial(format!(
                        "blocks must partition 0..{n}; position {i} is out of range or repeated"
                    )));
                }
                seen[i] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(SftError::Monomial(
                "blocks do not cover every position".into(),
            ));
        }
        let (word, perm) = self.sort_word(&m.word)?;
        if word.is_zero() {
            return Ok(QMonomial {
                word,
                blocks: Vec::new(),
            });
        }
        let mut block_of = vec![0; n];
        for (b, block) in m.blocks.iter().enumerate() {
            for &i in block {
                block_of[i] = b;
            }
        }
        // Letters with equal variables are interchangeable (they are even), so
        // the partition is determined by the multiset of block contents.
        let mut contents: Vec<Vec<Var>> = vec![Vec::new(); m.blocks.len()];
        for &k in &perm {
            contents[block_of[k]].push(m.word.vars[k].clone());
        }
        contents.iter_mut().for_each(|c| c.sort());
        contents.sort();
        let mut used = vec![false; n];
        let mut blocks: Vec<Vec<usize>> = contents
            .iter()
            .map(|c| {
                c.iter()
                    .map(|v| {
                        let pos = (0..n)
                            .find(|&i| !used[i] && word.vars[i] == *v)
                            .expect("block letters come from the word");
                        used[pos] = true;
                        pos
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        blocks.iter_mut().for_each(|b| b.sort_unstable());
        blocks.sort_by_key(|b| b[0]);
        Ok(QMonomial { word, blocks })
    }
}

impl<'de> Deserialize<'de> for HPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            terms: Vec<Word>,
        }
        // Validation needs the orbit table; see `HPoly::new`.
        Ok(HPoly {
            terms: Raw::deserialize(d)?.terms,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Key {
    vars: Vec<Var>,
    blocks: Vec<Vec<usize>>,
    homology: Vec<i64>,
}

/// A linear combination of canonical q-monomials.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QSum {
    terms: BTreeMap<Key, BigRational>,
    /// Set when a term above the Novikov cap was discarded.
    pub truncated: bool,
}

impl QSum {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add a canonical monomial, honoring the Novikov cap.
    pub fn add(&mut self, m: QMonomial, cap: Option<u64>) {
        if m.is_zero() {
            return;
        }
        if let Some(c) = cap {
            let degree: u64 = m.word.homology.iter().map(|x| x.unsigned_abs()).sum();
            if degree > c {
                self.truncated = true;
                return;
            }
        }
        let key = Key {
            vars: m.word.vars,
            blocks: m.blocks,
            homology: m.word.homology,
        };
        let entry = self.terms.entry(key).or_insert_with(BigRational::zero);
        *entry += m.word.coefficient;
        self.terms.retain(|_, c| !c.is_zero());
    }

    pub fn extend(&mut self, other: QSum) {
        self.truncated |= other.truncated;
        for (k, c) in other.terms {
            let entry = self.terms.entry(k).or_insert_with(BigRational::zero);
            *entry += c;
        }
        self.terms.retain(|_, c| !c.is_zero());
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> Vec<QMonomial> {
        self.terms
            .iter()
            .map(|(k, c)| QMonomial {
                word: Word {
                    vars: k.vars.clone(),
                    coefficient: c.clone(),
                    homology: k.homology.clone(),
                },
                blocks: k.blocks.clone(),
            })
            .collect()
    }

    /// Largest absolute coefficient, zero for the empty sum.
    pub fn max_abs(&self) -> BigRational {
        self.terms
            .values()
            .map(|c| c.abs())
            .max()
            .unwrap_or_else(BigRational::zero)
    }
}

impl Serialize for QSum {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Out {
            terms: Vec<QMonomial>,
            truncated: bool,
        }
        Out {
            terms: self.terms(),
            truncated: self.truncated,
        }
        .serialize(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn int(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    fn table() -> OrbitTable {
        OrbitTable::new(
            1,
            vec![
                OrbitSym::new("a", 1, int(1)),
                OrbitSym::new("b", 1, int(2)),
                OrbitSym::new("c", 0, int(3)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn odd_transposition_flips_sign() {
        let t = table();
        let w = t
            .canonicalize(&Word::new(vec![Var::q("b"), Var::q("a")]))
            .unwrap();
        assert_eq!(w.vars, vec![Var::q("a"), Var::q("b")]);
        assert_eq!(w.coefficient, int(-1));
        assert_eq!(w.homology, vec![0]);
    }

    #[test]
    fn odd_square_vanishes() {
        let t = table();
        let w = t
            .canonicalize(&Word::new(vec![Var::q("a"), Var::q("c"), Var::q("a")]))
            .unwrap();
        assert!(w.is_zero());
        let w = t
            .canonicalize(&Word::new(vec![Var::q("c"), Var::q("c")]))
            .unwrap();
        assert_eq!(w.coefficient, int(1));
    }

    #[test]
    fn even_variables_commute() {
        let t = table();
        for vars in [
            vec![Var::q("c"), Var::q("a")],
            vec![Var::q("a"), Var::q("c")],
        ] {
            let w = t.canonicalize(&Word::new(vars)).unwrap();
            assert_eq!(w.vars, vec![Var::q("a"), Var::q("c")]);
            assert_eq!(w.coefficient, int(1));
        }
    }

    #[test]
    fn p_and_q_of_one_orbit_are_distinct_letters() {
        let t = table();
        let w = t
            .canonicalize(&Word::new(vec![Var::q("a"), Var::p("a")]))
            .unwrap();
        assert_eq!(w.vars, vec![Var::p("a"), Var::q("a")]);
        assert_eq!(w.coefficient, int(-1));
    }

    #[test]
    fn monomial_relabels_blocks() {
        let t = table();
        let m = QMonomial {
            word: Word::new(vec![Var::q("c"), Var::q("b"), Var::q("a")]),
            blocks: vec![vec![2], vec![0, 1]],
        };
        let c = t.canonicalize_monomial(&m).unwrap();
        assert_eq!(c.word.vars, vec![Var::q("a"), Var::q("b"), Var::q("c")]);
        assert_eq!(c.blocks, vec![vec![0], vec![1, 2]]);
        assert_eq!(c.word.coefficient, int(-1));
        assert_eq!(t.canonicalize_monomial(&c).unwrap(), c);
    }

    #[test]
    fn equal_even_letters_are_interchangeable() {
        let t = table();
        let w = Word::new(vec![Var::q("c"), Var::q("c"), Var::q("a")]);
        let m1 = QMonomial {
            word: w.clone(),
            blocks: vec![vec![0, 2], vec![1]],
        };
        let m2 = QMonomial {
            word: w,
            blocks: vec![vec![1, 2], vec![0]],
        };
        assert_eq!(
            t.canonicalize_monomial(&m1).unwrap(),
            t.canonicalize_monomial(&m2).unwrap()
        );
    }

    #[test]
    fn invalid_inputs() {
        let t = table();
        let bad_partition = QMonomial {
            word: Word::new(vec![Var::q("a"), Var::q("b")]),
            blocks: vec![vec![0]],
        };
        assert!(matches!(
            t.canonicalize_monomial(&bad_partition),
            Err(SftError::Monomial(_))
        ));
        let p_letter = QMonomial::singletons(Word::new(vec![Var::p("a")]));
        assert!(t.canonicalize_monomial(&p_letter).is_err());
        assert_eq!(
            t.canonicalize(&Word::new(vec![Var::q("z")])),
            Err(SftError::UnknownOrbit("z".into()))
        );
        let mut orbits = table().orbits;
        orbits.push(OrbitSym {
            good: false,
            ..OrbitSym::new("d", 0, int(1))
        });
        let t = OrbitTable::new(1, orbits).unwrap();
        assert_eq!(
            t.canonicalize(&Word::new(vec![Var::q("d")])),
            Err(SftError::BadOrbit("d".into()))
        );
        let w = Word::new(vec![]).with_homology(vec![1, 2]);
        assert!(matches!(t.canonicalize(&w), Err(SftError::Homology { .. })));
    }

    #[test]
    fn h_parity_is_enforced() {
        let t = table();
        let even = Word::new(vec![Var::p("a"), Var::q("b")]);
        assert_eq!(
            HPoly::new(&t, vec![even.clone()], false),
            Err(SftError::EvenTerm { index: 0 })
        );
        assert!(HPoly::new(&t, vec![even], true).is_ok());
    }

    #[test]
    fn morse_bott_family() {
        let [h, e] = morse_bott_pair("T", int(2), vec![1]);
        assert_eq!((h.id.as_str(), h.parity), ("T.h", 1));
        assert_eq!((e.id.as_str(), e.parity), ("T.e", 0));
        assert!(OrbitTable::new(1, vec![h, e]).is_ok());
    }

    #[test]
    fn json_shape() {
        let text = r#"{"rank": 1, "orbits": [{"id": "a", "parity": 1, "kappa": "3/2"}]}"#;
        let mut t: OrbitTable = serde_json::from_str(text).unwrap();
        t.reindex().unwrap();
        assert_eq!(t.orbit("a").unwrap().kappa, int(3) / int(2));
        let m: QMonomial =
            serde_json::from_str(r#"{"word": {"vars": ["q:a"]}, "blocks": [[0]]}"#).unwrap();
        let back = serde_json::to_string(&m).unwrap();
        assert_eq!(
            back,
            r#"{"word":{"vars":["q:a"],"coefficient":"1","homology":[]},"blocks":[[0]]}"#
        );
        assert!(serde_json::from_str::<OrbitTable>(r#"{"orbits": [], "extra": 1}"#).is_err());
    }
}
