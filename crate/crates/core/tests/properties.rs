//! Property tests against brute-force oracles.

mod common;

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use proptest::prelude::*;
use toricfrob::atlas;
use toricfrob::cohomology::cohomology;
use toricfrob::collections::{koszul_closure, ClosureBounds};
use toricfrob::divisor::{canonical, class_of, round_down, round_up, QDivisor};
use toricfrob::frobenius::{stable_summands, summands};
use toricfrob::intersection::is_nef;
use toricfrob::linalg::floor_div;
use toricfrob::{DivisorClass, Fan, TorusDivisor};

const IDS: &[&str] = &["p2", "hirzebruch-0", "hirzebruch-2", "hirzebruch-3", "y3", "fano3-8", "fano3-11", "fano3-18", "p3"];

fn fan(i: usize) -> Fan {
    atlas::get(IDS[i]).unwrap().fan
}

fn fan_and_divisor(range: i64) -> impl Strategy<Value = (usize, Vec<i64>)> {
    (0..IDS.len(), prop::collection::vec(-range..=range, 8))
}

fn truncate(f: &Fan, coeffs: &[i64]) -> TorusDivisor {
    TorusDivisor::new(coeffs[..f.num_rays()].to_vec())
}

fn character_divisor(f: &Fan, u: &[i64]) -> TorusDivisor {
    TorusDivisor::new(f.rays().iter().map(|v| v.iter().zip(u).map(|(a, b)| a * b).sum()).collect())
}

/// Summand multiset straight from the floor formula, in the standard basis.
fn naive_summands(f: &Fan, w: &TorusDivisor, m: i64) -> BTreeMap<DivisorClass, u64> {
    let n = f.dim();
    for (k, &r) in f.base_rays().iter().enumerate() {
        let e: Vec<i64> = (0..n).map(|j| i64::from(j == k)).collect();
        assert_eq!(f.ray(r).to_vec(), e, "oracle needs a standard base");
    }
    let mut out = BTreeMap::new();
    let mut u = vec![0i64; n];
    loop {
        let q: Vec<i64> = f
            .rays()
            .iter()
            .zip(w.coeffs())
            .map(|(v, wi)| {
                let s: i64 = v.iter().zip(&u).map(|(a, b)| a * b).sum();
                (s + wi).div_euclid(m)
            })
            .collect();
        *out.entry(class_of(f, &TorusDivisor::new(q)).unwrap()).or_insert(0) += 1;
        let mut k = 0;
        while k < n {
            u[k] += 1;
            if u[k] < m {
                break;
            }
            u[k] = 0;
            k += 1;
        }
        if k == n {
            return out;
        }
    }
}

/// Lattice points of `{u : <u, v_i> >= -a_i}` in a box, or `None` when the
/// box boundary is hit.
fn naive_h0(f: &Fan, d: &TorusDivisor, r: i64) -> Option<u64> {
    let n = f.dim();
    let mut u = vec![-r; n];
    let mut count = 0;
    loop {
        let inside = f
            .rays()
            .iter()
            .zip(d.coeffs())
            .all(|(v, a)| v.iter().zip(&u).map(|(x, y)| x * y).sum::<i64>() >= -a);
        if inside {
            if u.iter().any(|x| x.abs() == r) {
                return None;
            }
            count += 1;
        }
        let mut k = 0;
        while k < n {
            u[k] += 1;
            if u[k] <= r {
                break;
            }
            u[k] = -r;
            k += 1;
        }
        if k == n {
            return Some(count);
        }
    }
}

proptest! {
    #[test]
    fn floor_div_brackets(a in -10_000i64..10_000, b in 1i64..50) {
        let q = floor_div(a, b);
        prop_assert!(q * b <= a && a < (q + 1) * b);
    }

    #[test]
    fn rounding_brackets(nums in prop::collection::vec(-200i64..200, 1..6), den in 1i64..12) {
        let q = QDivisor::from_fractions(&nums, den).unwrap();
        let up = round_up(&q).unwrap();
        let down = round_down(&q).unwrap();
        for (i, x) in q.coeffs().iter().enumerate() {
            let (u, d) = (BigRational::from_integer(up.coeffs()[i].into()), BigRational::from_integer(down.coeffs()[i].into()));
            prop_assert!(&d <= x && x <= &u);
            prop_assert!(up.coeffs()[i] - down.coeffs()[i] == i64::from(nums[i] % den != 0));
        }
    }

    #[test]
    fn class_is_linear_and_idempotent((i, a) in fan_and_divisor(5), b in prop::collection::vec(-5i64..=5, 8)) {
        let f = fan(i);
        let (a, b) = (truncate(&f, &a), truncate(&f, &b));
        let ca = class_of(&f, &a).unwrap();
        let cb = class_of(&f, &b).unwrap();
        prop_assert_eq!(class_of(&f, &(&a + &b)).unwrap(), &ca + &cb);
        prop_assert_eq!(class_of(&f, &-&a).unwrap(), -&ca);
        prop_assert_eq!(class_of(&f, &ca.to_divisor()).unwrap(), ca.clone());
        for &r in f.base_rays() {
            prop_assert_eq!(ca.coeffs()[r], 0);
        }
    }

    #[test]
    fn principal_divisors_are_trivial(i in 0..IDS.len(), u in prop::collection::vec(-6i64..=6, 4)) {
        let f = fan(i);
        let d = character_divisor(&f, &u[..f.dim()]);
        prop_assert!(class_of(&f, &d).unwrap().is_zero());
    }

    #[test]
    fn summands_match_floor_formula((i, w) in fan_and_divisor(3), m in 1i64..6) {
        let f = fan(i);
        let w = truncate(&f, &w);
        let s = summands(&f, &w, m).unwrap();
        prop_assert_eq!(s.total_multiplicity(), (m as u64).pow(f.dim() as u32));
        prop_assert_eq!(s.classes, naive_summands(&f, &w, m));
    }

    #[test]
    fn summands_shift_with_multiples((i, w) in fan_and_divisor(2), e in prop::collection::vec(-1i64..=1, 8), m in 2i64..5) {
        let f = fan(i);
        let (w, e) = (truncate(&f, &w), truncate(&f, &e));
        let shifted = summands(&f, &(&w + &e.scale(m)), m).unwrap().class_set();
        let ce = class_of(&f, &e).unwrap();
        let expected: BTreeSet<_> = summands(&f, &w, m).unwrap().class_set().iter().map(|c| c + &ce).collect();
        prop_assert_eq!(shifted, expected);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn serre_duality((i, d) in fan_and_divisor(2)) {
        let f = fan(i);
        let d = truncate(&f, &d);
        let h = cohomology(&f, &d).unwrap();
        let mut dual = cohomology(&f, &(&canonical(&f) - &d)).unwrap().h;
        dual.reverse();
        prop_assert_eq!(h.h, dual);
    }

    #[test]
    fn global_sections_count_lattice_points((i, d) in fan_and_divisor(2)) {
        let f = fan(i);
        let d = truncate(&f, &d);
        let r = if f.dim() == 2 { 30 } else { 14 };
        let oracle = naive_h0(&f, &d, r);
        prop_assume!(oracle.is_some());
        prop_assert_eq!(cohomology(&f, &d).unwrap().h[0], oracle.unwrap());
    }

    #[test]
    fn cohomology_depends_on_class_only((i, d) in fan_and_divisor(2), u in prop::collection::vec(-2i64..=2, 3)) {
        let f = fan(i);
        let d = truncate(&f, &d);
        let moved = &d + &character_divisor(&f, &u[..f.dim()]);
        prop_assert_eq!(cohomology(&f, &d).unwrap().h, cohomology(&f, &moved).unwrap().h);
    }

    #[test]
    fn nef_divisors_have_no_higher_cohomology((i, d) in fan_and_divisor(3)) {
        let f = fan(i);
        let d = truncate(&f, &d);
        prop_assume!(is_nef(&f, &d).unwrap());
        prop_assert!(cohomology(&f, &d).unwrap().higher_vanish());
    }
}

fn small_bounds() -> ClosureBounds {
    ClosureBounds { coefficient_bound: 3, twist_bound: 3 }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn closure_is_monotone_and_idempotent(keep in prop::collection::vec(any::<bool>(), 6), extra in prop::collection::vec(-2i64..=2, 6)) {
        let f = atlas::get("y3").unwrap().fan;
        let all: Vec<DivisorClass> = stable_summands(&f, &TorusDivisor::zero(6)).unwrap().class_list();
        let small: Vec<DivisorClass> = all.iter().zip(&keep).filter(|(_, k)| **k).map(|(c, _)| c.clone()).collect();
        let mut large = small.clone();
        large.push(class_of(&f, &TorusDivisor::new(extra)).unwrap());
        let cs = koszul_closure(&f, &small, small_bounds()).unwrap().classes;
        let cl = koszul_closure(&f, &large, small_bounds()).unwrap().classes;
        prop_assert!(cs.is_subset(&cl));
        let again: Vec<_> = cs.iter().cloned().collect();
        prop_assert_eq!(koszul_closure(&f, &again, small_bounds()).unwrap().classes, cs);
    }
}

#[test]
fn empty_seed_has_empty_closure() {
    let f = atlas::get("fano3-11").unwrap().fan;
    assert!(koszul_closure(&f, &[], ClosureBounds::default()).unwrap().classes.is_empty());
}

#[test]
fn common_parser_round_trips() {
    let d = common::divisor(6, "-D4-D5+2D6");
    assert_eq!(d.to_string(), "-D4-D5+2D6");
}
