//! Helpers shared by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeSet;

use toricfrob::divisor::{class_of, TorusDivisor};
use toricfrob::{DivisorClass, Fan};

/// Parses `"-D4-D5+2D6"` (1-based labels, `"0"` for the trivial divisor).
pub fn divisor(len: usize, s: &str) -> TorusDivisor {
    let mut coeffs = vec![0i64; len];
    let s = s.replace(' ', "");
    if s == "0" {
        return TorusDivisor::new(coeffs);
    }
    let mut rest = s.as_str();
    while !rest.is_empty() {
        let sign = match rest.as_bytes()[0] {
            b'-' => {
                rest = &rest[1..];
                -1
            }
            b'+' => {
                rest = &rest[1..];
                1
            }
            _ => 1,
        };
        let d = rest.find('D').expect("term without D");
        let k: i64 = if d == 0 { 1 } else { rest[..d].parse().unwrap() };
        rest = &rest[d + 1..];
        let end = rest.find(['+', '-']).unwrap_or(rest.len());
        let idx: usize = rest[..end].parse().unwrap();
        coeffs[idx - 1] += sign * k;
        rest = &rest[end..];
    }
    TorusDivisor::new(coeffs)
}

pub fn class(fan: &Fan, s: &str) -> DivisorClass {
    class_of(fan, &divisor(fan.num_rays(), s)).unwrap()
}

pub fn classes(fan: &Fan, items: &[&str]) -> BTreeSet<DivisorClass> {
    items.iter().map(|s| class(fan, s)).collect()
}

pub fn show(set: &BTreeSet<DivisorClass>) -> Vec<String> {
    set.iter().map(|c| c.to_divisor().to_string()).collect()
}
