//! Torus-invariant divisors and their classes in the Picard group.
//!
//! A class is stored in normal form: the representative whose coefficients
//! vanish on the fan's base rays. The normal form is linear in the divisor,
//! so sums and negations of normal forms are again normal forms.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fan::{Blowdown, Fan};
use crate::linalg;

/// `D = sum a_i D_i`, indexed like the fan's rays.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TorusDivisor(Vec<i64>);

impl TorusDivisor {
    pub fn new(coeffs: Vec<i64>) -> Self {
        Self(coeffs)
    }

    pub fn zero(len: usize) -> Self {
        Self(vec![0; len])
    }

    /// The prime divisor `D_i`.
    pub fn prime(len: usize, i: usize) -> Self {
        let mut v = vec![0; len];
        v[i] = 1;
        Self(v)
    }

    /// Sparse constructor from `(ray, coefficient)` pairs.
    pub fn from_terms(len: usize, terms: &[(usize, i64)]) -> Self {
        let mut v = vec![0; len];
        for &(i, c) in terms {
            v[i] += c;
        }
        Self(v)
    }

    /// `-K = sum D_i`.
    pub fn anticanonical(len: usize) -> Self {
        Self(vec![1; len])
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scale(&self, k: i64) -> Self {
        Self(self.0.iter().map(|a| a * k).collect())
    }

    pub fn max_abs(&self) -> i64 {
        self.0.iter().map(|a| a.abs()).max().unwrap_or(0)
    }
}

impl Add for &TorusDivisor {
    type Output = TorusDivisor;
    fn add(self, rhs: &TorusDivisor) -> TorusDivisor {
        TorusDivisor(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &TorusDivisor {
    type Output = TorusDivisor;
    fn sub(self, rhs: &TorusDivisor) -> TorusDivisor {
        TorusDivisor(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &TorusDivisor {
    type Output = TorusDivisor;
    fn neg(self) -> TorusDivisor {
        TorusDivisor(self.0.iter().map(|a| -a).collect())
    }
}

impl fmt::Display for TorusDivisor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_terms(f, &self.0)
    }
}

/// Linear equivalence class in normal form.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DivisorClass(Vec<i64>);

impl DivisorClass {
    pub fn coeffs(&self) -> &[i64] {
        &self.0
    }

    pub fn to_divisor(&self) -> TorusDivisor {
        TorusDivisor(self.0.clone())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    /// Largest coefficient magnitude of the normal form.
    pub fn norm(&self) -> i64 {
        self.0.iter().map(|a| a.abs()).max().unwrap_or(0)
    }

    /// Wraps coefficients already known to be in normal form.
    pub(crate) fn from_normal(coeffs: Vec<i64>) -> Self {
        Self(coeffs)
    }
}

impl Add for &DivisorClass {
    type Output = DivisorClass;
    fn add(self, rhs: &DivisorClass) -> DivisorClass {
        DivisorClass(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &DivisorClass {
    type Output = DivisorClass;
    fn sub(self, rhs: &DivisorClass) -> DivisorClass {
        DivisorClass(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &DivisorClass {
    type Output = DivisorClass;
    fn neg(self) -> DivisorClass {
        DivisorClass(self.0.iter().map(|a| -a).collect())
    }
}

impl fmt::Display for DivisorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_terms(f, &self.0)
    }
}

/// Writes `-D4-D5+2D6` style text with 1-based labels, `0` when empty.
fn write_terms(f: &mut fmt::Formatter<'_>, coeffs: &[i64]) -> fmt::Result {
    let mut first = true;
    for (i, &a) in coeffs.iter().enumerate() {
        if a == 0 {
            continue;
        }
        let sign = if a < 0 { "-" } else if first { "" } else { "+" };
        let mag = a.abs();
        if mag == 1 {
            write!(f, "{sign}D{}", i + 1)?;
        } else {
            write!(f, "{sign}{mag}D{}", i + 1)?;
        }
        first = false;
    }
    if first {
        write!(f, "0")?;
    }
    Ok(())
}

/// Rational combination of the `D_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QDivisor(Vec<BigRational>);

impl QDivisor {
    pub fn new(coeffs: Vec<BigRational>) -> Self {
        Self(coeffs)
    }

    /// Builds `sum (num_i / den) D_i`.
    pub fn from_fractions(nums: &[i64], den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidArgument("zero denominator".into()));
        }
        Ok(Self(
            nums.iter()
                .map(|&n| BigRational::new(BigInt::from(n), BigInt::from(den)))
                .collect(),
        ))
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.0
    }
}

fn round_with(d: &QDivisor, f: impl Fn(&BigRational) -> BigRational) -> Result<TorusDivisor> {
    d.0.iter()
        .map(|x| f(x).to_integer().to_i64().ok_or(Error::Overflow("rounding")))
        .collect::<Result<Vec<_>>>()
        .map(TorusDivisor)
}

pub fn round_up(d: &QDivisor) -> Result<TorusDivisor> {
    round_with(d, BigRational::ceil)
}

pub fn round_down(d: &QDivisor) -> Result<TorusDivisor> {
    round_with(d, BigRational::floor)
}

fn check_len(fan: &Fan, coeffs: &[i64]) -> Result<()> {
    if coeffs.len() != fan.num_rays() {
        return Err(Error::LengthMismatch {
            expected: fan.num_rays(),
            got: coeffs.len(),
        });
    }
    Ok(())
}

/// Character `u` with `<u, v_i> = a_i` on the base rays.
fn base_character(fan: &Fan, coeffs: &[i64]) -> Result<Vec<i64>> {
    let a_base: Vec<i64> = fan.base_rays().iter().map(|&r| coeffs[r]).collect();
    linalg::mat_vec(fan.base_inverse(), &a_base)
}

/// Normal form of `D`: subtract `div(chi^u)` so the base coefficients vanish.
pub fn class_of(fan: &Fan, d: &TorusDivisor) -> Result<DivisorClass> {
    class_of_coeffs(fan, d.coeffs())
}

pub fn class_of_coeffs(fan: &Fan, coeffs: &[i64]) -> Result<DivisorClass> {
    check_len(fan, coeffs)?;
    let u = base_character(fan, coeffs)?;
    let mut out = Vec::with_capacity(coeffs.len());
    for (a, v) in coeffs.iter().zip(fan.rays()) {
        let c = a
            .checked_sub(linalg::checked_dot(v, &u)?)
            .ok_or(Error::Overflow("class normal form"))?;
        out.push(c);
    }
    for &r in fan.base_rays() {
        debug_assert_eq!(out[r], 0);
        out[r] = 0;
    }
    Ok(DivisorClass(out))
}

pub fn linearly_equivalent(fan: &Fan, d1: &TorusDivisor, d2: &TorusDivisor) -> Result<bool> {
    Ok(class_of(fan, d1)? == class_of(fan, d2)?)
}

/// `K = -sum D_i`.
pub fn canonical(fan: &Fan) -> TorusDivisor {
    TorusDivisor(vec![-1; fan.num_rays()])
}

/// `<u_sigma, v>` where `sigma` contains `v` and `<u_sigma, v_i> = -a_i` on
/// the rays of `sigma`.
pub fn support_value(fan: &Fan, d: &TorusDivisor, v: &[i64]) -> Result<i64> {
    check_len(fan, d.coeffs())?;
    fan.require_smooth_complete()?;
    let (k, coords) = fan.locate(v)?;
    let cone = &fan.max_cones()[k];
    let mut total = 0i64;
    for (&r, &c) in cone.rays().iter().zip(&coords) {
        total = c
            .checked_mul(d.coeffs()[r])
            .and_then(|p| total.checked_sub(p))
            .ok_or(Error::Overflow("support value"))?;
    }
    Ok(total)
}

/// Drops the exceptional coefficient.
pub fn pushforward(blowdown: &Blowdown, d: &TorusDivisor) -> Result<TorusDivisor> {
    let l = blowdown.target.num_rays() + 1;
    if d.len() != l {
        return Err(Error::LengthMismatch { expected: l, got: d.len() });
    }
    Ok(TorusDivisor(
        d.0.iter()
            .enumerate()
            .filter(|(i, _)| *i != blowdown.exceptional)
            .map(|(_, a)| *a)
            .collect(),
    ))
}

/// Pulls `D` back along the blowdown; the exceptional coefficient is the
/// value of the Cartier data of `D` at the new ray.
pub fn pullback(blowdown: &Blowdown, d: &TorusDivisor) -> Result<TorusDivisor> {
    let y = &blowdown.target;
    check_len(y, d.coeffs())?;
    let mut v_e = vec![0i64; y.dim()];
    for r in blowdown.target_center().rays() {
        for (x, c) in v_e.iter_mut().zip(y.ray(*r).iter()) {
            *x += c;
        }
    }
    let a_e = -support_value(y, d, &v_e)?;
    let mut out = d.0.clone();
    out.insert(blowdown.exceptional, a_e);
    Ok(TorusDivisor(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fan::Cone;

    fn p2() -> Fan {
        Fan::from_data("P2", &[&[1, 0], &[0, 1], &[-1, -1]], &[&[0, 1], &[1, 2], &[0, 2]]).unwrap()
    }

    fn hirzebruch(d: i64) -> Fan {
        Fan::from_data(
            "F",
            &[&[1, 0], &[0, 1], &[-1, d], &[0, -1]],
            &[&[0, 1], &[1, 2], &[2, 3], &[0, 3]],
        )
        .unwrap()
    }

    #[test]
    fn hyperplane_classes_on_p2() {
        let f = p2();
        let h = class_of(&f, &TorusDivisor::prime(3, 0)).unwrap();
        assert_eq!(h.coeffs(), &[0, 0, 1]);
        assert_eq!(class_of(&f, &TorusDivisor::prime(3, 2)).unwrap(), h);
        let k = class_of(&f, &canonical(&f)).unwrap();
        assert_eq!(k.coeffs(), &[0, 0, -3]);
    }

    #[test]
    fn hirzebruch_d2_relation() {
        for d in 0..4 {
            let f = hirzebruch(d);
            let c = class_of(&f, &TorusDivisor::prime(4, 1)).unwrap();
            assert_eq!(c.coeffs(), &[0, 0, -d, 1]);
            assert!(!linearly_equivalent(&f, &TorusDivisor::prime(4, 2), &TorusDivisor::prime(4, 3)).unwrap());
        }
    }

    #[test]
    fn wrong_length_rejected() {
        assert!(matches!(
            class_of(&p2(), &TorusDivisor::zero(4)),
            Err(Error::LengthMismatch { expected: 3, got: 4 })
        ));
    }

    #[test]
    fn rounding() {
        let q = QDivisor::from_fractions(&[1, -1], 2).unwrap();
        assert_eq!(round_up(&q).unwrap().coeffs(), &[1, 0]);
        assert_eq!(round_down(&q).unwrap().coeffs(), &[0, -1]);
        let z = QDivisor::from_fractions(&[4, -6], 2).unwrap();
        assert_eq!(round_up(&z).unwrap().coeffs(), &[2, -3]);
        assert_eq!(round_down(&z).unwrap().coeffs(), &[2, -3]);
    }

    #[test]
    fn support_values_on_p2() {
        let f = p2();
        let h = TorusDivisor::prime(3, 2);
        assert_eq!(support_value(&f, &h, &[1, 0]).unwrap(), 0);
        assert_eq!(support_value(&f, &h, &[-1, -1]).unwrap(), -1);
        let k = canonical(&f);
        for r in f.rays() {
            assert_eq!(support_value(&f, &k, r).unwrap(), 1);
            assert_eq!(support_value(&f, &(-&k), r).unwrap(), -1);
        }
    }

    #[test]
    fn pullback_along_point_blowup() {
        let (x, e) = p2().star_subdivide(&Cone::new(vec![0, 1])).unwrap();
        let bd = x.blowdowns().unwrap().into_iter().find(|b| b.exceptional == e).unwrap();
        let line = TorusDivisor::prime(3, 0);
        let up = pullback(&bd, &line).unwrap();
        assert_eq!(up.coeffs(), &[1, 0, 0, 1]);
        let down = pushforward(&bd, &up).unwrap();
        assert_eq!(class_of(&bd.target, &down).unwrap(), class_of(&bd.target, &line).unwrap());
    }

    #[test]
    fn display_terms() {
        assert_eq!(TorusDivisor::new(vec![0, 0, 0, -1, -1, 2]).to_string(), "-D4-D5+2D6");
        assert_eq!(TorusDivisor::zero(3).to_string(), "0");
    }
}
