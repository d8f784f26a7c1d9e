//! Line-bundle summands of the push-forward of `O(D)` along the toric
//! multiplication map `F_m`, computed with the floor formula on residues.
//!
//! For a lattice basis `sigma` of rays and `u` in `[0, m)^n` the summand is
//! `O(sum q_i D_i)` with `q_i = floor((<v_i, A_sigma^{-1}(u - w_sigma)> + w_i) / m)`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::divisor::{class_of_coeffs, DivisorClass, TorusDivisor};
use crate::error::{Error, Result};
use crate::fan::{Cone, Fan};
use crate::linalg::{self, IntMatrix};

/// A point of `[0, m)^n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResidueVector {
    u: Vec<i64>,
    m: i64,
}

impl ResidueVector {
    pub fn new(u: Vec<i64>, m: i64) -> Result<Self> {
        if m < 1 {
            return Err(Error::InvalidArgument(format!("m must be positive, got {m}")));
        }
        if let Some(x) = u.iter().find(|&&x| !(0..m).contains(&x)) {
            return Err(Error::InvalidArgument(format!("residue {x} outside [0, {m})")));
        }
        Ok(Self { u, m })
    }

    pub fn coords(&self) -> &[i64] {
        &self.u
    }

    pub fn modulus(&self) -> i64 {
        self.m
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummandSet {
    /// Multiplicity of every summand class; these sum to `m_used^n`.
    pub classes: BTreeMap<DivisorClass, u64>,
    pub m_used: i64,
    pub w: TorusDivisor,
}

impl SummandSet {
    pub fn class_set(&self) -> BTreeSet<DivisorClass> {
        self.classes.keys().cloned().collect()
    }

    pub fn class_list(&self) -> Vec<DivisorClass> {
        self.classes.keys().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn contains(&self, c: &DivisorClass) -> bool {
        self.classes.contains_key(c)
    }

    pub fn total_multiplicity(&self) -> u64 {
        self.classes.values().sum()
    }
}

/// Data shared by all residues for one choice of basis.
struct Kernel {
    /// `A * A_sigma^{-1}`, one row per ray.
    c: IntMatrix,
    /// `w_sigma`.
    w_sigma: Vec<i64>,
    w: Vec<i64>,
    m: i64,
}

impl Kernel {
    fn new(fan: &Fan, basis: &[usize], w: &TorusDivisor, m: i64) -> Result<Self> {
        if w.len() != fan.num_rays() {
            return Err(Error::LengthMismatch { expected: fan.num_rays(), got: w.len() });
        }
        if m < 1 {
            return Err(Error::InvalidArgument(format!("m must be positive, got {m}")));
        }
        let rows: IntMatrix = basis.iter().map(|&r| fan.ray(r).to_vec()).collect();
        let inv = linalg::unimodular_inverse(&rows)?
            .ok_or_else(|| Error::InvalidBase { rays: basis.to_vec() })?;
        let a: IntMatrix = fan.rays().iter().map(|r| r.to_vec()).collect();
        Ok(Self {
            c: linalg::mat_mul(&a, &inv)?,
            w_sigma: basis.iter().map(|&r| w.coeffs()[r]).collect(),
            w: w.coeffs().to_vec(),
            m,
        })
    }

    fn q_into(&self, u: &[i64], shifted: &mut [i64], q: &mut [i64]) -> Result<()> {
        for ((s, x), ws) in shifted.iter_mut().zip(u).zip(&self.w_sigma) {
            *s = x - ws;
        }
        for ((qi, row), wi) in q.iter_mut().zip(&self.c).zip(&self.w) {
            let t = linalg::checked_dot(row, shifted)?
                .checked_add(*wi)
                .ok_or(Error::Overflow("summand exponent"))?;
            *qi = linalg::floor_div(t, self.m);
        }
        Ok(())
    }
}

/// Exponent vector `q` for residue `u` computed in the basis of `sigma`.
pub fn q_vector(fan: &Fan, sigma: &Cone, u: &ResidueVector, w: &TorusDivisor) -> Result<Vec<i64>> {
    if sigma.len() != fan.dim() || u.coords().len() != fan.dim() {
        return Err(Error::NotACone(sigma.rays().to_vec()));
    }
    let k = Kernel::new(fan, sigma.rays(), w, u.modulus())?;
    let mut shifted = vec![0; fan.dim()];
    let mut q = vec![0; fan.num_rays()];
    k.q_into(u.coords(), &mut shifted, &mut q)?;
    Ok(q)
}

/// Summands of `F_{m*} O(w)` using the fan's base rays.
pub fn summands(fan: &Fan, w: &TorusDivisor, m: i64) -> Result<SummandSet> {
    summands_in_basis(fan, fan.base_rays(), w, m)
}

/// Summands computed in an arbitrary lattice basis of rays.
pub fn summands_in_basis(fan: &Fan, basis: &[usize], w: &TorusDivisor, m: i64) -> Result<SummandSet> {
    let kernel = Kernel::new(fan, basis, w, m)?;
    let n = fan.dim();
    let l = fan.num_rays();
    let normal = Cone::new(basis.to_vec()).rays() == fan.base_rays();
    m.checked_pow(n as u32).ok_or(Error::Overflow("residue count"))?;

    let partials: Vec<Result<HashMap<Vec<i64>, u64>>> = (0..m)
        .into_par_iter()
        .map(|first| {
            let mut counts: HashMap<Vec<i64>, u64> = HashMap::new();
            let mut u = vec![0i64; n];
            u[0] = first;
            let mut shifted = vec![0i64; n];
            let mut q = vec![0i64; l];
            loop {
                kernel.q_into(&u, &mut shifted, &mut q)?;
                if let Some(c) = counts.get_mut(&q) {
                    *c += 1;
                } else {
                    counts.insert(q.clone(), 1);
                }
                // Odometer over coordinates 1..n.
                let mut i = n;
                loop {
                    if i == 1 {
                        return Ok(counts);
                    }
                    i -= 1;
                    u[i] += 1;
                    if u[i] < m {
                        break;
                    }
                    u[i] = 0;
                }
            }
        })
        .collect();

    let mut classes: BTreeMap<DivisorClass, u64> = BTreeMap::new();
    for part in partials {
        for (q, count) in part? {
            let class = if normal {
                DivisorClass::from_normal(q)
            } else {
                class_of_coeffs(fan, &q)?
            };
            *classes.entry(class).or_insert(0) += count;
        }
    }
    Ok(SummandSet { classes, m_used: m, w: w.clone() })
}

/// Environment variable overriding [`StabilizationConfig::m_max`].
pub const MMAX_ENV: &str = "TORICFROB_MMAX";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilizationConfig {
    pub m0: i64,
    pub m_max: i64,
}

impl Default for StabilizationConfig {
    fn default() -> Self {
        Self { m0: 6, m_max: 768 }
    }
}

impl StabilizationConfig {
    /// Defaults, with `m_max` taken from the environment when set.
    pub fn from_env() -> Self {
        let mut cfg = Self::default();
        if let Some(v) = std::env::var(MMAX_ENV).ok().and_then(|s| s.trim().parse().ok()) {
            cfg.m_max = v;
        }
        cfg
    }
}

/// Doubles `m` until two consecutive summand class sets agree.
pub fn stable_summands(fan: &Fan, w: &TorusDivisor) -> Result<SummandSet> {
    stable_summands_with(fan, w, StabilizationConfig::from_env())
}

pub fn stable_summands_with(fan: &Fan, w: &TorusDivisor, cfg: StabilizationConfig) -> Result<SummandSet> {
    let mut m = cfg.m0.max(1);
    while m <= w.max_abs() {
        m *= 2;
    }
    if m > cfg.m_max {
        return Err(Error::NoStabilization { m_max: cfg.m_max });
    }
    let mut prev = summands(fan, w, m)?;
    loop {
        let next_m = m.checked_mul(2).ok_or(Error::Overflow("stabilization"))?;
        if next_m > cfg.m_max {
            return Err(Error::NoStabilization { m_max: cfg.m_max });
        }
        let cur = summands(fan, w, next_m)?;
        if cur.classes.keys().eq(prev.classes.keys()) {
            return Ok(cur);
        }
        prev = cur;
        m = next_m;
    }
}

/// `{-c : c in D(w)_m} == D(-w + (m-1) * 1)_m`.
pub fn dual_identity_check(fan: &Fan, w: &TorusDivisor, m: i64) -> Result<bool> {
    let lhs: BTreeSet<DivisorClass> = summands(fan, w, m)?.classes.keys().map(|c| -c).collect();
    let shifted = &(-w) + &TorusDivisor::anticanonical(fan.num_rays()).scale(m - 1);
    Ok(lhs == summands(fan, &shifted, m)?.class_set())
}

/// Recomputes the summand multiset with every maximal cone as basis.
pub fn sigma_independence_check(fan: &Fan, w: &TorusDivisor, m: i64) -> Result<bool> {
    let reference = summands(fan, w, m)?;
    for cone in fan.max_cones() {
        if summands_in_basis(fan, cone.rays(), w, m)?.classes != reference.classes {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `D(w)_m` is contained in `D(l w)_{l m}`.
pub fn divisibility_check(fan: &Fan, w: &TorusDivisor, l: i64, m: i64) -> Result<bool> {
    let small = summands(fan, w, m)?;
    let large = summands(fan, &w.scale(l), l * m)?;
    Ok(small.classes.keys().all(|c| large.contains(c)))
}

/// Non-negative coefficients become 0, negative ones -1.
pub fn bondal_reduce(d: &TorusDivisor) -> TorusDivisor {
    TorusDivisor::new(d.coeffs().iter().map(|&a| if a < 0 { -1 } else { 0 }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p1() -> Fan {
        Fan::from_data("P1", &[&[1], &[-1]], &[&[0], &[1]]).unwrap()
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
    fn p1_m3() {
        let s = summands(&p1(), &TorusDivisor::zero(2), 3).unwrap();
        let got: Vec<(Vec<i64>, u64)> = s.classes.iter().map(|(c, k)| (c.coeffs().to_vec(), *k)).collect();
        assert_eq!(got, vec![(vec![0, -1], 2), (vec![0, 0], 1)]);
    }

    #[test]
    fn hirzebruch_q_vector_matches_floor_formula() {
        let d = 3;
        let f = hirzebruch(d);
        let m = 7;
        let base = Cone::new(vec![0, 1]);
        for x in 0..m {
            for y in 0..m {
                let u = ResidueVector::new(vec![x, y], m).unwrap();
                let q = q_vector(&f, &base, &u, &TorusDivisor::zero(4)).unwrap();
                assert_eq!(q, vec![0, 0, (-x + d * y).div_euclid(m), (-y).div_euclid(m)]);
            }
        }
    }

    #[test]
    fn residue_bounds() {
        assert!(ResidueVector::new(vec![3], 3).is_err());
        assert!(ResidueVector::new(vec![0], 0).is_err());
    }

    #[test]
    fn m1_is_identity() {
        let f = hirzebruch(2);
        let w = TorusDivisor::new(vec![1, -2, 3, 0]);
        let s = summands(&f, &w, 1).unwrap();
        assert_eq!(s.class_list(), vec![class_of_coeffs(&f, w.coeffs()).unwrap()]);
    }

    #[test]
    fn bondal() {
        assert_eq!(bondal_reduce(&TorusDivisor::new(vec![3, -2, 0])).coeffs(), &[0, -1, 0]);
        assert_eq!(bondal_reduce(&TorusDivisor::anticanonical(4)).coeffs(), &[0, 0, 0, 0]);
    }

    #[test]
    fn structural_identities_small() {
        let f = hirzebruch(1);
        let w = TorusDivisor::zero(4);
        assert!(sigma_independence_check(&f, &w, 4).unwrap());
        assert!(dual_identity_check(&f, &w, 3).unwrap());
        assert!(divisibility_check(&f, &w, 2, 3).unwrap());
    }

    #[test]
    fn stabilization_cap() {
        let cfg = StabilizationConfig { m0: 6, m_max: 6 };
        assert!(matches!(
            stable_summands_with(&p1(), &TorusDivisor::zero(2), cfg),
            Err(Error::NoStabilization { m_max: 6 })
        ));
    }
}
