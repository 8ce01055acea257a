use num_rational::BigRational;
use rayon::prelude::*;
use serde::Serialize;

use super::{HPoly, OrbitTable, QMonomial, QSum, Result, SftError, Tag, Var, Word};

/// Largest `|x| + |y|` the brute-force oracle accepts.
pub const BRUTE_FORCE_CAP: usize = 8;

/// One admissible assignment found by the oracle, before terms are combined.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MatchingRecord {
    /// `(p position in y, q position in x)`.
    pub pairs: Vec<(usize, usize)>,
    pub matched_blocks: usize,
    /// Whether the merged block keeps at least one letter.
    pub merged_nonempty: bool,
    pub result: QMonomial,
}

fn add_homology(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn block_of(x: &QMonomial) -> Vec<usize> {
    let mut out = vec![0; x.word.vars.len()];
    for (b, block) in x.blocks.iter().enumerate() {
        for &i in block {
            out[i] = b;
        }
    }
    out
}

/// Remaining letters after annihilation, with x's untouched blocks kept and
/// everything else merged. `survivors` lists `(letter, Some(x block) | None)`.
fn assemble(
    table: &OrbitTable,
    survivors: Vec<(Var, Option<usize>)>,
    matched: &[usize],
    coefficient: BigRational,
    homology: Vec<i64>,
) -> Result<(QMonomial, bool)> {
    let mut labels: Vec<usize> = Vec::new();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let merged_label = usize::MAX;
    let mut merged_nonempty = false;
    for (pos, (_, b)) in survivors.iter().enumerate() {
        let label = match b {
            Some(b) if !matched.contains(b) => *b,
            _ => {
                merged_nonempty = true;
                merged_label
            }
        };
        match labels.iter().position(|&l| l == label) {
            Some(k) => blocks[k].push(pos),
            None => {
                labels.push(label);
                blocks.push(vec![pos]);
            }
        }
    }
    let m = QMonomial {
        word: Word {
            vars: survivors.into_iter().map(|(v, _)| v).collect(),
            coefficient,
            homology,
        },
        blocks,
    };
    Ok((table.canonicalize_monomial(&m)?, merged_nonempty))
}

impl OrbitTable {
    fn prepare(&self, x: &QMonomial, y: &Word) -> Result<(QMonomial, Word)> {
        let x = self.canonicalize_monomial(x)?;
        let y = self.canonicalize(y)?;
        Ok((x, y))
    }

    /// All ways to glue the p-ends of `y` onto distinct blocks of `x`.
    pub fn glue_product(&self, x: &QMonomial, y: &Word) -> Result<QSum> {
        let (x, y) = self.prepare(x, y)?;
        let mut out = QSum::new();
        if x.is_zero() || y.is_zero() {
            return Ok(out);
        }
        let blocks = block_of(&x);
        let ps: Vec<usize> = (0..y.vars.len())
            .filter(|&j| y.vars[j].tag == Tag::P)
            .collect();
        let mut choice: Vec<usize> = Vec::with_capacity(ps.len());
        let mut used = vec![false; x.blocks.len()];
        let mut found = Vec::new();
        search(&x, &y, &ps, &blocks, &mut used, &mut choice, &mut found);
        for pick in found {
            out.add(
                self.glue_one(&x, &y, &ps, &blocks, &pick)?,
                self.novikov_cap,
            );
        }
        Ok(out)
    }

    /// Slide each `p` left until it sits just right of its `q`, then cancel.
    fn glue_one(
        &self,
        x: &QMonomial,
        y: &Word,
        ps: &[usize],
        blocks: &[usize],
        pick: &[usize],
    ) -> Result<QMonomial> {
        #[derive(PartialEq)]
        enum From {
            X(usize),
            Y(usize),
        }
        let mut seq: Vec<(From, u8)> = Vec::new();
        for (i, v) in x.word.vars.iter().enumerate() {
            seq.push((From::X(i), self.parity(v)?));
        }
        for (j, v) in y.vars.iter().enumerate() {
            seq.push((From::Y(j), self.parity(v)?));
        }
        let mut coefficient = &x.word.coefficient * &y.coefficient;
        let mut negative = false;
        for (&j, &i) in ps.iter().zip(pick) {
            let at_p = seq
                .iter()
                .position(|s| s.0 == From::Y(j))
                .expect("p present");
            let at_q = seq
                .iter()
                .position(|s| s.0 == From::X(i))
                .expect("q present");
            let passed: u8 = seq[at_q + 1..at_p].iter().fold(0, |acc, s| acc ^ s.1);
            if passed & seq[at_p].1 == 1 {
                negative = !negative;
            }
            seq.remove(at_p);
            seq.remove(at_q);
            coefficient *= &self.orbit(&y.vars[j].orbit)?.kappa;
        }
        if negative {
            coefficient = -coefficient;
        }
        let survivors = seq
            .into_iter()
            .map(|(from, _)| match from {
                From::X(i) => (x.word.vars[i].clone(), Some(blocks[i])),
                From::Y(j) => (y.vars[j].clone(), None),
            })
            .collect();
        let matched: Vec<usize> = pick.iter().map(|&i| blocks[i]).collect();
        let homology = add_homology(&x.word.homology, &y.homology);
        Ok(assemble(self, survivors, &matched, coefficient, homology)?.0)
    }

    /// `x . h`, summed over the terms of `h`.
    pub fn differential(&self, x: &QMonomial, h: &HPoly) -> Result<QSum> {
        let parts: Vec<QSum> = h
            .terms()
            .par_iter()
            .map(|t| self.glue_product(x, t))
            .collect::<Result<_>>()?;
        let mut out = QSum::new();
        for p in parts {
            out.extend(p);
        }
        Ok(out)
    }

    /// `d` extended linearly to a sum.
    pub fn differential_of_sum(&self, s: &QSum, h: &HPoly) -> Result<QSum> {
        let mut out = QSum::new();
        out.truncated = s.truncated;
        for m in s.terms() {
            out.extend(self.differential(&m, h)?);
        }
        Ok(out)
    }

    /// `d(d x)` for each probe. Zero exactly when the master equation holds
    /// on those probes.
    pub fn d_squared_residual(&self, h: &HPoly, probes: &[QMonomial]) -> Result<Vec<QSum>> {
        probes
            .iter()
            .map(|x| self.differential_of_sum(&self.differential(x, h)?, h))
            .collect()
    }

    /// Canonical monomials on at most `max_letters` q-letters over the good
    /// orbits, with every partition of their positions.
    pub fn probes(&self, max_letters: usize) -> Result<Vec<QMonomial>> {
        let letters: Vec<Var> = self
            .orbits
            .iter()
            .filter(|o| o.good)
            .map(|o| Var::q(&o.id))
            .collect();
        let mut words: Vec<Vec<Var>> = vec![Vec::new()];
        let mut frontier: Vec<(Vec<Var>, usize)> = vec![(Vec::new(), 0)];
        for _ in 0..max_letters {
            let mut next = Vec::new();
            for (w, start) in &frontier {
                for (k, v) in letters.iter().enumerate().skip(*start) {
                    let odd = self.parity(v)? == 1;
                    if odd && w.last() == Some(v) {
                        continue;
                    }
                    let mut w2 = w.clone();
                    w2.push(v.clone());
                    next.push((w2.clone(), if odd { k + 1 } else { k }));
                    words.push(w2);
                }
            }
            frontier = next;
        }
        let mut out: Vec<QMonomial> = Vec::new();
        for w in words {
            for blocks in set_partitions(w.len()) {
                let m = self.canonicalize_monomial(&QMonomial {
                    word: Word::new(w.clone()).with_homology(vec![0; self.rank]),
                    blocks,
                })?;
                if !out.contains(&m) {
                    out.push(m);
                }
            }
        }
        Ok(out)
    }

    /// Independent oracle: every function from p-positions to q-positions,
    /// filtered, with signs from the permutation parity of the odd letters.
    pub fn brute_force_product(&self, x: &QMonomial, y: &Word) -> Result<QSum> {
        let mut out = QSum::new();
        for r in self.brute_force_matchings(x, y)? {
            out.add(r.result, self.novikov_cap);
        }
        Ok(out)
    }

    pub fn brute_force_matchings(&self, x: &QMonomial, y: &Word) -> Result<Vec<MatchingRecord>> {
        let size = x.word.vars.len() + y.vars.len();
        if size > BRUTE_FORCE_CAP {
            return Err(SftError::SizeCap {
                size,
                cap: BRUTE_FORCE_CAP,
            });
        }
        let (x, y) = self.prepare(x, y)?;
        if x.is_zero() || y.is_zero() {
            return Ok(Vec::new());
        }
        let nx = x.word.vars.len();
        let blocks = block_of(&x);
        let full: Vec<&Var> = x.word.vars.iter().chain(&y.vars).collect();
        let parity: Vec<u8> = full.iter().map(|v| self.parity(v)).collect::<Result<_>>()?;
        let ps: Vec<usize> = (0..y.vars.len())
            .filter(|&j| y.vars[j].tag == Tag::P)
            .collect();
        let k = ps.len();
        let total = nx.checked_pow(k as u32).unwrap_or(0);
        let mut records = Vec::new();
        for code in 0..total.max(if k == 0 { 1 } else { 0 }) {
            let mut f = Vec::with_capacity(k);
            let mut c = code;
            for _ in 0..k {
                f.push(c % nx.max(1));
                c /= nx.max(1);
            }
            let ok = ps
                .iter()
                .zip(&f)
                .all(|(&j, &i)| x.word.vars[i].orbit == y.vars[j].orbit);
            let mut bs: Vec<usize> = f.iter().map(|&i| blocks[i]).collect();
            bs.sort_unstable();
            bs.dedup();
            if !ok || bs.len() != k {
                continue;
            }
            // Target order: q_1 p_1 q_2 p_2 ... followed by the survivors.
            let mut order: Vec<usize> = Vec::with_capacity(size);
            for (&j, &i) in ps.iter().zip(&f) {
                order.push(i);
                order.push(nx + j);
            }
            let rest: Vec<usize> = (0..size).filter(|p| !order.contains(p)).collect();
            order.extend(&rest);
            let odd: Vec<usize> = order.iter().copied().filter(|&p| parity[p] == 1).collect();
            let mut inversions = 0usize;
            for a in 0..odd.len() {
                for b in a + 1..odd.len() {
                    if odd[a] > odd[b] {
                        inversions += 1;
                    }
                }
            }
            let mut coefficient = &x.word.coefficient * &y.coefficient;
            for &j in &ps {
                coefficient *= &self.orbit(&y.vars[j].orbit)?.kappa;
            }
            if inversions % 2 == 1 {
                coefficient = -coefficient;
            }
            let survivors: Vec<(Var, Option<usize>)> = rest
                .iter()
                .map(|&p| {
                    if p < nx {
                        (x.word.vars[p].clone(), Some(blocks[p]))
                    } else {
                        (y.vars[p - nx].clone(), None)
                    }
                })
                .collect();
            let homology = add_homology(&x.word.homology, &y.homology);
            let (result, merged_nonempty) = assemble(self, survivors, &bs, coefficient, homology)?;
            records.push(MatchingRecord {
                pairs: ps.iter().copied().zip(f.iter().copied()).collect(),
                matched_blocks: k,
                merged_nonempty,
                result,
            });
        }
        Ok(records)
    }
}

fn search(
    x: &QMonomial,
    y: &Word,
    ps: &[usize],
    blocks: &[usize],
    used: &mut Vec<bool>,
    choice: &mut Vec<usize>,
    found: &mut Vec<Vec<usize>>,
) {
    let depth = choice.len();
    if depth == ps.len() {
        found.push(choice.clone());
        return;
    }
    let want = &y.vars[ps[depth]].orbit;
    for (i, v) in x.word.vars.iter().enumerate() {
        if &v.orbit != want || used[blocks[i]] {
            continue;
        }
        used[blocks[i]] = true;
        choice.push(i);
        search(x, y, ps, blocks, used, choice, found);
        choice.pop();
        used[blocks[i]] = false;
    }
}

/// Set partitions of `0..n` via restricted growth strings.
pub(crate) fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    let mut rgs = vec![0usize; n];
    loop {
        let m = rgs.iter().copied().max().map_or(0, |x| x + 1);
        let mut blocks = vec![Vec::new(); m];
        for (i, &b) in rgs.iter().enumerate() {
            blocks[b].push(i);
        }
        out.push(blocks);
        // Next restricted growth string.
        let mut i = n;
        loop {
            if i <= 1 {
                return out;
            }
            i -= 1;
            let prefix_max = rgs[..i].iter().copied().max().unwrap_or(0);
            if rgs[i] <= prefix_max {
                rgs[i] += 1;
                for r in rgs.iter_mut().skip(i + 1) {
                    *r = 0;
                }
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use num_bigint::BigInt;

    use super::*;
    use crate::sftq::OrbitSym;

    fn int(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    fn table(parities: &[(&str, u8, i64)]) -> OrbitTable {
        let orbits = parities
            .iter()
            .map(|&(id, p, k)| OrbitSym::new(id, p, int(k)))
            .collect();
        OrbitTable::new(0, orbits).unwrap()
    }

    fn both(t: &OrbitTable, x: &QMonomial, y: &Word) -> Vec<QMonomial> {
        let fast = t.glue_product(x, y).unwrap();
        assert_eq!(fast, t.brute_force_product(x, y).unwrap());
        fast.terms()
    }

    #[test]
    fn single_end_into_single_orbit() {
        let t = table(&[("a", 1, 3)]);
        let x = QMonomial::singletons(Word::new(vec![Var::q("a")]));
        let out = both(&t, &x, &Word::new(vec![Var::p("a")]));
        assert_eq!(out.len(), 1);
        assert!(out[0].word.vars.is_empty());
        assert_eq!(out[0].block_count(), 0);
        assert_eq!(out[0].word.coefficient, int(3));
    }

    #[test]
    fn two_equal_even_letters_give_two_matchings() {
        let t = table(&[("a", 0, 5)]);
        let x = QMonomial::singletons(Word::new(vec![Var::q("a"), Var::q("a")]));
        let y = Word::new(vec![Var::p("a")]);
        let out = both(&t, &x, &y);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].word.vars, vec![Var::q("a")]);
        assert_eq!(out[0].blocks, vec![vec![0]]);
        assert_eq!(out[0].word.coefficient, int(10));
        assert_eq!(t.brute_force_matchings(&x, &y).unwrap().len(), 2);
    }

    #[test]
    fn one_block_cannot_take_two_ends() {
        let t = table(&[("a", 0, 1), ("b", 1, 1)]);
        let x = QMonomial {
            word: Word::new(vec![Var::q("a"), Var::q("b")]),
            blocks: vec![vec![0, 1]],
        };
        assert!(both(&t, &x, &Word::new(vec![Var::p("a"), Var::p("b")])).is_empty());
    }

    #[test]
    fn differential_examples() {
        let t = table(&[("a", 1, 2), ("b", 1, 1)]);
        let h = HPoly::new(
            &t,
            vec![Word::new(vec![Var::p("a"), Var::q("a"), Var::q("b")])],
            true,
        )
        .unwrap();
        assert!(t.differential(&QMonomial::empty(), &h).unwrap().is_empty());

        let h = HPoly::new(&t, vec![Word::new(vec![Var::p("a"), Var::q("b")])], true).unwrap();
        let x = QMonomial::singletons(Word::new(vec![Var::q("a")]));
        let out = t.differential(&x, &h).unwrap().terms();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].word.vars, vec![Var::q("b")]);
        assert_eq!(out[0].blocks, vec![vec![0]]);
        assert_eq!(out[0].word.coefficient, int(2));
    }

    #[test]
    fn falling_factorial_count() {
        let t = table(&[("a", 0, 1)]);
        for n in 1..=5usize {
            let x = QMonomial::singletons(Word::new(vec![Var::q("a"); n]));
            for k in 0..=n.min(3) {
                let y = Word::new(vec![Var::p("a"); k]);
                let count = t.brute_force_matchings(&x, &y).unwrap().len();
                let expect: usize = (0..k).map(|i| n - i).product();
                assert_eq!(count, expect, "n = {n}, k = {k}");
                let out = both(&t, &x, &y);
                let total: BigRational = out.iter().map(|m| m.word.coefficient.clone()).sum();
                assert_eq!(total, int(expect as i64));
            }
        }
    }

    #[test]
    fn brute_force_refuses_large_inputs() {
        let t = table(&[("a", 0, 1)]);
        let x = QMonomial::singletons(Word::new(vec![Var::q("a"); 5]));
        let y = Word::new(vec![Var::p("a"); 4]);
        assert_eq!(
            t.brute_force_product(&x, &y),
            Err(SftError::SizeCap { size: 9, cap: 8 })
        );
        assert!(t.glue_product(&x, &y).is_ok());
    }

    #[test]
    fn novikov_cap_truncates() {
        let t = OrbitTable::new(1, vec![OrbitSym::new("a", 0, int(1))])
            .unwrap()
            .with_novikov_cap(Some(2));
        let x = QMonomial::singletons(Word::new(vec![Var::q("a")]).with_homology(vec![2]));
        let low = Word::new(vec![Var::p("a")]).with_homology(vec![0]);
        let high = Word::new(vec![Var::p("a")]).with_homology(vec![1]);
        let out = t.glue_product(&x, &low).unwrap();
        assert_eq!((out.len(), out.truncated), (1, false));
        let out = t.glue_product(&x, &high).unwrap();
        assert_eq!((out.len(), out.truncated), (0, true));
    }

    #[test]
    fn set_partition_counts_are_bell_numbers() {
        let bell = [1, 1, 2, 5, 15, 52];
        for (n, &b) in bell.iter().enumerate() {
            assert_eq!(set_partitions(n).len(), b);
        }
    }

    #[test]
    fn independent_gluings_cancel_in_d_squared() {
        // Two odd curves on different blocks: the two orders of gluing come
        // with opposite Koszul signs.
        for (pa, pb) in [(0, 1), (1, 0), (1, 1), (0, 0)] {
            let t = table(&[
                ("a", pa, 2),
                ("b", pb, 3),
                ("c", 1 ^ pa, 1),
                ("e", 1 ^ pb, 1),
            ]);
            let h = HPoly::new(
                &t,
                vec![
                    Word::new(vec![Var::p("a"), Var::q("c")]),
                    Word::new(vec![Var::p("b"), Var::q("e")]),
                ],
                false,
            )
            .unwrap();
            let probes = t.probes(3).unwrap();
            assert!(probes.len() > 20);
            for r in t.d_squared_residual(&h, &probes).unwrap() {
                assert!(r.is_empty(), "parities ({pa}, {pb}): {r:?}");
            }
        }
    }

    #[test]
    fn composed_gluings_cancel_by_weights() {
        // d^2 q_a = k_a (d q_b + d q_c) = k_a (k_b - k_c (k_b / k_c)) q_d.
        let t = table(&[("a", 0, 2), ("b", 1, 3), ("c", 1, 5), ("d", 0, 1)]);
        let h = HPoly::new(
            &t,
            vec![
                Word::new(vec![Var::p("a"), Var::q("b")]),
                Word::new(vec![Var::p("a"), Var::q("c")]),
                Word::new(vec![Var::p("b"), Var::q("d")]),
                Word::new(vec![Var::p("c"), Var::q("d")]).with_coefficient(int(-3) / int(5)),
            ],
            false,
        )
        .unwrap();
        let probes = t.probes(2).unwrap();
        for r in t.d_squared_residual(&h, &probes).unwrap() {
            assert!(r.is_empty(), "{r:?}");
        }
        // Breaking the balance leaves a residual.
        let h = HPoly::new(
            &t,
            vec![
                Word::new(vec![Var::p("a"), Var::q("b")]),
                Word::new(vec![Var::p("b"), Var::q("d")]),
            ],
            false,
        )
        .unwrap();
        let x = QMonomial::singletons(Word::new(vec![Var::q("a")]));
        let r = &t.d_squared_residual(&h, &[x]).unwrap()[0];
        assert_eq!(r.max_abs(), int(6));
    }
}
