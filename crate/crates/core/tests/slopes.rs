use proptest::prelude::*;

use shsverify::slopes::{in_V, intersection_number, scan_slopes, surgery_verdict, Slope};

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

#[test]
fn scan_minimum_is_three() {
    let scan = scan_slopes(-200..=200, 1..=50, -20..=20);
    assert!(scan.summary.bound_holds);
    assert_eq!(scan.summary.min_iota_over_v, Some(3));
}

#[test]
fn one_member_gives_one_row_per_degeneracy() {
    let scan = scan_slopes(17..=17, 7..=7, -3..=3);
    assert_eq!(scan.rows.len(), 1 + 7);
    assert!(scan.rows.iter().all(|v| v.iota >= 3 && v.singular_core));
}

proptest! {
    #[test]
    fn slopes_are_reduced(a in -500i64..500, b in -500i64..500) {
        prop_assume!((a, b) != (0, 0));
        let s = Slope::new(a, b).unwrap();
        prop_assert_eq!(gcd(s.numerator(), s.denominator()), 1);
        prop_assert!(s.denominator() >= 0);
        if s.denominator() == 0 {
            prop_assert_eq!(s, Slope::INFINITY);
        }
    }

    #[test]
    fn iota_is_symmetric_and_sl2_invariant(
        a in -50i64..50, b in 1i64..50, c in -50i64..50, d in 1i64..50, k in -5i64..5,
    ) {
        prop_assume!(gcd(a, b) == 1 && gcd(c, d) == 1);
        let (u, v) = (Slope::new(a, b).unwrap(), Slope::new(c, d).unwrap());
        prop_assert_eq!(intersection_number(u, v), intersection_number(v, u));
        let m = [[1, k], [0, 1]];
        let (tu, tv) = (u.transform(m).unwrap(), v.transform(m).unwrap());
        prop_assert_eq!(intersection_number(tu, tv), intersection_number(u, v));
    }

    #[test]
    fn iota_identities(p in -300i64..300, q in 1i64..80, r in -30i64..30) {
        prop_assume!(gcd(p, q) == 1);
        let s = Slope::new(p, q).unwrap();
        prop_assert_eq!(intersection_number(Slope::INFINITY, s), q as u64);
        prop_assert_eq!(intersection_number(Slope::integer(r), s), (p - r * q).unsigned_abs());
    }

    #[test]
    fn members_of_v_have_a_singular_core(p in -300i64..300, q in 1i64..80, r in -30i64..30) {
        prop_assume!(gcd(p, q) == 1);
        if in_V(p, q).unwrap() {
            let s = Slope::new(p, q).unwrap();
            for deg in [Slope::INFINITY, Slope::integer(r)] {
                let v = surgery_verdict(s, deg).unwrap();
                prop_assert!(v.iota >= 3);
                prop_assert!(v.singular_core && v.blows_down);
            }
        }
    }
}
