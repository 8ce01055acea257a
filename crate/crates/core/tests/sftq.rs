use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use shsverify::sftq::{
    random_instance, run_suite, HPoly, OrbitSym, OrbitTable, QMonomial, SftError, Suite, Var, Word,
};

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn table(parities: &[(&str, u8, i64)]) -> OrbitTable {
    let orbits = parities
        .iter()
        .map(|&(id, p, k)| OrbitSym::new(id, p, rat(k, 1)))
        .collect();
    OrbitTable::new(0, orbits).unwrap()
}

#[test]
fn two_equal_even_letters_glue_two_ways() {
    let t = table(&[("a", 0, 3)]);
    let x = QMonomial::singletons(Word::new(vec![Var::q("a"), Var::q("a")]));
    let out = t.glue_product(&x, &Word::new(vec![Var::p("a")])).unwrap();
    let terms = out.terms();
    assert_eq!(terms.len(), 1);
    assert_eq!(terms[0].word.vars, vec![Var::q("a")]);
    assert_eq!(terms[0].word.coefficient, rat(6, 1));
    assert_eq!(terms[0].block_count(), 1);
}

#[test]
fn odd_chain_differential() {
    let t = table(&[("a", 1, 2), ("b", 1, 1)]);
    let term = Word::new(vec![Var::p("a"), Var::q("b")]);
    // p_a q_b with both orbits odd is an even term; it needs the override.
    assert!(matches!(
        HPoly::new(&t, vec![term.clone()], false),
        Err(SftError::EvenTerm { index: 0 })
    ));
    let h = HPoly::new(&t, vec![term], true).unwrap();
    let x = QMonomial::singletons(Word::new(vec![Var::q("a")]));
    let dx = t.differential(&x, &h).unwrap().terms();
    assert_eq!(dx.len(), 1);
    assert_eq!(dx[0].word.vars, vec![Var::q("b")]);
    assert_eq!(dx[0].word.coefficient, rat(2, 1));
}

#[test]
fn falling_factorial_many_terms() {
    // Distinct even orbits, k ends: one term per injective choice.
    let ids = ["a", "b", "c", "d", "e"];
    let t = table(&ids.map(|i| (i, 0, 1)));
    for k in 0..=3usize {
        let x = QMonomial::singletons(Word::new(ids.iter().map(|i| Var::q(i)).collect()));
        let y = Word::new(ids[..k].iter().map(|i| Var::p(i)).collect());
        let out = t.glue_product(&x, &y).unwrap();
        let records = t.brute_force_matchings(&x, &y).unwrap();
        assert_eq!(records.iter().filter(|r| !r.result.is_zero()).count(), 1);
        assert_eq!(out.len(), 1);
    }
}

#[test]
fn bad_orbits_never_carry_variables() {
    let mut t = table(&[("a", 0, 1)]);
    t.orbits[0].good = false;
    t.reindex().unwrap();
    let w = Word::new(vec![Var::q("a")]);
    assert!(matches!(t.canonicalize(&w), Err(SftError::BadOrbit(_))));
}

#[test]
fn seeded_suites_pass() {
    for (suite, cases) in [
        (Suite::Oracle, 500),
        (Suite::Koszul, 300),
        (Suite::Parity, 200),
    ] {
        let rep = run_suite(suite, 7, cases).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.nontrivial_cases > 0);
        assert_eq!(run_suite(suite, 7, cases).unwrap(), rep);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn glue_product_matches_oracle(seed in any::<u64>()) {
        let inst = random_instance(&mut ChaCha8Rng::seed_from_u64(seed), 6);
        let t = &inst.table;
        prop_assert_eq!(
            t.glue_product(&inst.x, &inst.y).unwrap(),
            t.brute_force_product(&inst.x, &inst.y).unwrap()
        );
    }

    #[test]
    fn outputs_are_canonical_partitions(seed in any::<u64>()) {
        let inst = random_instance(&mut ChaCha8Rng::seed_from_u64(seed), 6);
        let t = &inst.table;
        for m in t.glue_product(&inst.x, &inst.y).unwrap().terms() {
            prop_assert_eq!(&t.canonicalize_monomial(&m).unwrap(), &m);
            let mut seen: Vec<usize> = m.blocks.iter().flatten().copied().collect();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..m.word.vars.len()).collect::<Vec<_>>());
            let leads: Vec<usize> = m.blocks.iter().map(|b| b[0]).collect();
            let mut sorted = leads.clone();
            sorted.sort_unstable();
            prop_assert_eq!(leads, sorted);
        }
    }

    #[test]
    fn canonical_form_is_idempotent(seed in any::<u64>()) {
        let inst = random_instance(&mut ChaCha8Rng::seed_from_u64(seed), 6);
        let t = &inst.table;
        let c = t.canonicalize(&inst.y).unwrap();
        prop_assert_eq!(t.canonicalize(&c).unwrap(), c.clone());
        let sorted = c.vars.windows(2).all(|w| w[0] <= w[1]);
        prop_assert!(c.is_zero() || sorted);
    }
}
