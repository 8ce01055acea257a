use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{HPoly, OrbitSym, OrbitTable, QMonomial, Result, Var, Word};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    /// `glue_product` against the oracle, plus block-count and homology laws.
    Oracle,
    /// Sign coherence of canonical forms.
    Koszul,
    /// `gr(dx) = gr(x) + 1` for odd `h`.
    Parity,
}

impl std::str::FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "oracle" => Ok(Suite::Oracle),
            "koszul" => Ok(Suite::Koszul),
            "parity" => Ok(Suite::Parity),
            _ => Err(format!("unknown suite `{s}` (oracle, koszul, parity)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub cases: usize,
    /// Individual assertions evaluated.
    pub checks: usize,
    /// Cases with a nonzero result, i.e. not passing vacuously.
    pub nontrivial_cases: usize,
    pub failure_count: usize,
    /// The first few failures, for diagnosis.
    pub failures: Vec<String>,
    pub pass: bool,
}

/// One random gluing problem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Instance {
    pub table: OrbitTable,
    pub x: QMonomial,
    pub y: Word,
}

const IDS: [&str; 3] = ["a", "b", "c"];
const RANK: usize = 2;

fn ratio(rng: &mut ChaCha8Rng, signed: bool) -> BigRational {
    let n: i64 = rng.random_range(1..=4);
    let d: i64 = rng.random_range(1..=3);
    let s = if signed && rng.random_bool(0.5) {
        -1
    } else {
        1
    };
    BigRational::new(BigInt::from(s * n), BigInt::from(d))
}

fn homology(rng: &mut ChaCha8Rng) -> Vec<i64> {
    (0..RANK).map(|_| rng.random_range(-2..=2)).collect()
}

fn random_table(rng: &mut ChaCha8Rng) -> OrbitTable {
    let orbits = IDS
        .iter()
        .map(|id| OrbitSym {
            homology: homology(rng),
            ..OrbitSym::new(id, rng.random_range(0..=1), ratio(rng, false))
        })
        .collect();
    OrbitTable::new(RANK, orbits).expect("valid random table")
}

fn random_partition(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<usize>> {
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let b = rng.random_range(0..=blocks.len());
        if b == blocks.len() {
            blocks.push(vec![i]);
        } else {
            blocks[b].push(i);
        }
    }
    blocks
}

fn random_x(rng: &mut ChaCha8Rng, letters: usize) -> QMonomial {
    let vars: Vec<Var> = (0..letters)
        .map(|_| Var::q(IDS[rng.random_range(0..3)]))
        .collect();
    let word = Word::new(vars)
        .with_coefficient(ratio(rng, true))
        .with_homology(homology(rng));
    QMonomial {
        blocks: random_partition(rng, letters),
        word,
    }
}

/// A random `y` word that mostly asks for orbits present in `x`.
fn random_y(rng: &mut ChaCha8Rng, x: &QMonomial, letters: usize, p_bias: f64) -> Word {
    let vars = (0..letters)
        .map(|_| {
            if rng.random_bool(p_bias) {
                let orbit = if !x.word.vars.is_empty() && rng.random_bool(0.85) {
                    x.word.vars[rng.random_range(0..x.word.vars.len())]
                        .orbit
                        .clone()
                } else {
                    IDS[rng.random_range(0..3)].to_string()
                };
                Var::p(&orbit)
            } else {
                Var::q(IDS[rng.random_range(0..3)])
            }
        })
        .collect();
    Word::new(vars)
        .with_coefficient(ratio(rng, true))
        .with_homology(homology(rng))
}

/// At most `max_vars` letters in `x` and `y` together, mixed parities.
pub fn random_instance(rng: &mut ChaCha8Rng, max_vars: usize) -> Instance {
    let table = random_table(rng);
    let nx = rng.random_range(0..=max_vars.min(4));
    let ny = rng.random_range(0..=max_vars - nx);
    let x = random_x(rng, nx);
    let y = random_y(rng, &x, ny, 0.6);
    Instance { table, x, y }
}

struct Tally {
    checks: usize,
    nontrivial: usize,
    failure_count: usize,
    failures: Vec<String>,
}

impl Tally {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failure_count += 1;
            if self.failures.len() < 10 {
                self.failures.push(what());
            }
        }
    }
}

fn oracle_case(inst: &Instance, case: usize, t: &mut Tally) -> Result<()> {
    let table = &inst.table;
    let fast = table.glue_product(&inst.x, &inst.y)?;
    let slow = table.brute_force_product(&inst.x, &inst.y)?;
    t.nontrivial += usize::from(!fast.is_empty());
    t.check(fast == slow, || {
        format!(
            "case {case}: glue_product and oracle differ ({} vs {} terms)",
            fast.len(),
            slow.len()
        )
    });
    let x = table.canonicalize_monomial(&inst.x)?;
    let y = table.canonicalize(&inst.y)?;
    let expect: Vec<i64> = x
        .word
        .homology
        .iter()
        .zip(&y.homology)
        .map(|(a, b)| a + b)
        .collect();
    for r in table.brute_force_matchings(&inst.x, &inst.y)? {
        if r.result.is_zero() {
            continue;
        }
        let law = x.block_count() - r.matched_blocks + usize::from(r.merged_nonempty);
        t.check(r.result.block_count() == law, || {
            format!(
                "case {case}: {} blocks, expected {law} from {} - {} + {}",
                r.result.block_count(),
                x.block_count(),
                r.matched_blocks,
                u8::from(r.merged_nonempty)
            )
        });
    }
    for m in fast.terms() {
        t.check(m.word.homology == expect, || {
            format!(
                "case {case}: homology {:?}, expected {expect:?}",
                m.word.homology
            )
        });
    }
    Ok(())
}

/// Sign of the permutation restricted to odd letters.
fn koszul_sign(perm: &[usize], odd: &[bool]) -> i64 {
    let idx: Vec<usize> = perm.iter().copied().filter(|&i| odd[i]).collect();
    let mut inv = 0;
    for a in 0..idx.len() {
        for b in a + 1..idx.len() {
            inv += usize::from(idx[a] > idx[b]);
        }
    }
    if inv % 2 == 0 {
        1
    } else {
        -1
    }
}

fn random_word(rng: &mut ChaCha8Rng, len: usize) -> Word {
    let vars = (0..len)
        .map(|_| {
            let id = IDS[rng.random_range(0..3)];
            if rng.random_bool(0.5) {
                Var::p(id)
            } else {
                Var::q(id)
            }
        })
        .collect();
    Word::new(vars).with_homology(vec![0; RANK])
}

fn koszul_case(rng: &mut ChaCha8Rng, case: usize, t: &mut Tally) -> Result<()> {
    let table = random_table(rng);
    let len = rng.random_range(0..=6);
    let w = random_word(rng, len);
    let c = table.canonicalize(&w)?;
    t.nontrivial += usize::from(!c.is_zero() && len >= 2);
    t.check(table.canonicalize(&c)? == c, || {
        format!("case {case}: canonical form is not idempotent")
    });

    let mut perm: Vec<usize> = (0..len).collect();
    perm.shuffle(rng);
    let shuffled =
        Word::new(perm.iter().map(|&i| w.vars[i].clone()).collect()).with_homology(vec![0; RANK]);
    let odd: Vec<bool> = w
        .vars
        .iter()
        .map(|v| table.parity(v).map(|p| p == 1))
        .collect::<Result<_>>()?;
    let sign = koszul_sign(&perm, &odd);
    let mut expect = c.clone();
    expect.coefficient *= BigRational::from_integer(BigInt::from(sign));
    t.check(table.canonicalize(&shuffled)? == expect, || {
        format!("case {case}: permuted word does not carry the Koszul sign {sign}")
    });

    let split = rng.random_range(0..=len);
    let u = Word::new(w.vars[..split].to_vec()).with_homology(vec![0; RANK]);
    let v = Word::new(w.vars[split..].to_vec()).with_homology(vec![0; RANK]);
    let (pu, pv) = (table.word_parity(&u)?, table.word_parity(&v)?);
    let uv = table.canonicalize(&Word::new([u.vars.clone(), v.vars.clone()].concat()))?;
    let mut vu = table.canonicalize(&Word::new([v.vars, u.vars].concat()))?;
    if pu & pv == 1 {
        vu.coefficient = -vu.coefficient;
    }
    t.check(uv == vu, || {
        format!("case {case}: uv and vu are not Koszul related")
    });
    Ok(())
}

fn parity_case(rng: &mut ChaCha8Rng, case: usize, t: &mut Tally) -> Result<()> {
    let mut table = random_table(rng);
    // An all-even table has no odd terms to offer.
    if table.orbits.iter().all(|o| o.parity == 0) {
        table.orbits[2].parity = 1;
    }
    let nx = rng.random_range(0..=4);
    let x = random_x(rng, nx);
    let mut terms = Vec::new();
    while terms.len() < 3 {
        let len = rng.random_range(1..=3);
        let y = random_y(rng, &x, len, 0.7);
        if table.word_parity(&y)? == 1 {
            terms.push(y);
        }
    }
    let h = HPoly::new(&table, terms, false)?;
    let gx = table.word_parity(&x.word)?;
    let dx = table.differential(&x, &h)?;
    t.nontrivial += usize::from(!dx.is_empty());
    for m in dx.terms() {
        let g = table.word_parity(&m.word)?;
        t.check(g == gx ^ 1, || {
            format!("case {case}: gr(dx) = {g}, gr(x) = {gx}")
        });
    }
    Ok(())
}

/// Run `cases` seeded random instances of `suite`.
pub fn run_suite(suite: Suite, seed: u64, cases: usize) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally {
        checks: 0,
        nontrivial: 0,
        failure_count: 0,
        failures: Vec::new(),
    };
    for case in 0..cases {
        match suite {
            Suite::Oracle => oracle_case(&random_instance(&mut rng, 6), case, &mut t)?,
            Suite::Koszul => koszul_case(&mut rng, case, &mut t)?,
            Suite::Parity => parity_case(&mut rng, case, &mut t)?,
        }
    }
    Ok(SuiteReport {
        suite,
        seed,
        cases,
        checks: t.checks,
        nontrivial_cases: t.nontrivial,
        failure_count: t.failure_count,
        failures: t.failures,
        pass: t.failure_count == 0,
    })
}
