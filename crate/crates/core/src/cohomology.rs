//! Sheaf cohomology of line bundles on smooth complete toric varieties.
//!
//! `H^p(X, O(D))` splits over characters `u`; the `u`-graded piece is the
//! reduced cohomology `H~^{p-1}` of the subcomplex of the fan's face complex
//! induced on the rays with `<u, v_i> < -a_i`.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::divisor::{class_of, DivisorClass, TorusDivisor};
use crate::error::{Error, Result};
use crate::fan::Fan;
use crate::intersection;
use crate::linalg;

/// Faces of the fan as ray bitmasks, grouped by number of rays.
pub(crate) struct FaceComplex {
    /// `faces[k]` holds the faces with `k + 1` rays, sorted.
    faces: Vec<Vec<u64>>,
}

impl FaceComplex {
    fn build(fan: &Fan) -> Self {
        let n = fan.dim();
        let mut by_size: Vec<std::collections::BTreeSet<u64>> = vec![Default::default(); n];
        for cone in fan.max_cones() {
            let rays = cone.rays();
            for sub in 1u32..(1 << rays.len()) {
                let mut mask = 0u64;
                for (j, &r) in rays.iter().enumerate() {
                    if sub & (1 << j) != 0 {
                        mask |= 1 << r;
                    }
                }
                by_size[sub.count_ones() as usize - 1].insert(mask);
            }
        }
        Self { faces: by_size.into_iter().map(|s| s.into_iter().collect()).collect() }
    }
}

/// Dimensions of `H~^{p-1}` for `p = 0..=n` of the subcomplex on `vertices`.
fn reduced_betti(faces: &FaceComplex, n: usize, vertices: u64) -> Result<Vec<u64>> {
    let mut out = vec![0u64; n + 1];
    if vertices == 0 {
        out[0] = 1;
        return Ok(out);
    }
    let sub: Vec<Vec<u64>> = faces
        .faces
        .iter()
        .map(|level| level.iter().copied().filter(|f| f & !vertices == 0).collect())
        .collect();
    // rank of d_k : C_k -> C_{k-1}, k = number of rays minus one.
    let mut ranks = vec![0usize; n + 1];
    ranks[0] = 1;
    if n >= 2 {
        ranks[1] = edge_rank(&sub[0], &sub[1]);
    }
    for k in 2..n {
        ranks[k] = boundary_rank(&sub[k - 1], &sub[k])?;
    }
    for k in 0..n {
        let c_k = sub[k].len();
        let next = if k + 1 < n { ranks[k + 1] } else { 0 };
        out[k + 1] = (c_k - ranks[k] - next) as u64;
    }
    Ok(out)
}

/// Rank of the vertex-edge boundary: vertices minus connected components.
fn edge_rank(vertices: &[u64], edges: &[u64]) -> usize {
    let index: HashMap<u64, usize> = vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut parent: Vec<usize> = (0..vertices.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut rank = 0;
    for &e in edges {
        let lo = e & e.wrapping_neg();
        let hi = e ^ lo;
        let (a, b) = (find(&mut parent, index[&lo]), find(&mut parent, index[&hi]));
        if a != b {
            parent[a] = b;
            rank += 1;
        }
    }
    rank
}

fn boundary_rank(lower: &[u64], upper: &[u64]) -> Result<usize> {
    if lower.is_empty() || upper.is_empty() {
        return Ok(0);
    }
    let index: HashMap<u64, usize> = lower.iter().enumerate().map(|(i, &f)| (f, i)).collect();
    let mut rows: Vec<Vec<i64>> = Vec::with_capacity(upper.len());
    for &face in upper {
        let mut row = vec![0i64; lower.len()];
        let mut sign = 1;
        let mut rest = face;
        while rest != 0 {
            let bit = rest & rest.wrapping_neg();
            row[index[&(face ^ bit)]] = sign;
            sign = -sign;
            rest ^= bit;
        }
        rows.push(row);
    }
    linalg::rank(&rows)
}

/// Per-coordinate bounds of the character lattice region examined.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeBox {
    pub lower: Vec<i64>,
    pub upper: Vec<i64>,
}

impl DegreeBox {
    /// Bounding box of the vertices `u_sigma`, widened by one.
    pub fn seed(fan: &Fan, d: &TorusDivisor) -> Result<Self> {
        let n = fan.dim();
        let mut lower = vec![i64::MAX; n];
        let mut upper = vec![i64::MIN; n];
        for (cone, inv) in fan.max_cones().iter().zip(fan.cone_inverses()?) {
            let rhs: Vec<i64> = cone.rays().iter().map(|&r| -d.coeffs()[r]).collect();
            let u = linalg::mat_vec(inv, &rhs)?;
            for i in 0..n {
                lower[i] = lower[i].min(u[i]);
                upper[i] = upper[i].max(u[i]);
            }
        }
        Ok(Self {
            lower: lower.into_iter().map(|x| x - 1).collect(),
            upper: upper.into_iter().map(|x| x + 1).collect(),
        })
    }

    pub fn grow(&self) -> Self {
        Self {
            lower: self.lower.iter().map(|x| x - 1).collect(),
            upper: self.upper.iter().map(|x| x + 1).collect(),
        }
    }

    pub fn contains(&self, u: &[i64]) -> bool {
        u.iter().zip(self.lower.iter().zip(&self.upper)).all(|(x, (lo, hi))| lo <= x && x <= hi)
    }

    fn points_with_first(&self, first: i64) -> impl Iterator<Item = Vec<i64>> + '_ {
        let n = self.lower.len();
        let mut cur: Option<Vec<i64>> = if self.lower[1..].iter().zip(&self.upper[1..]).all(|(l, u)| l <= u) {
            let mut v = self.lower.clone();
            v[0] = first;
            Some(v)
        } else {
            None
        };
        std::iter::from_fn(move || {
            let out = cur.clone()?;
            let mut next = out.clone();
            let mut i = n;
            loop {
                if i == 1 {
                    cur = None;
                    break;
                }
                i -= 1;
                next[i] += 1;
                if next[i] <= self.upper[i] {
                    cur = Some(next);
                    break;
                }
                next[i] = self.lower[i];
            }
            Some(out)
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CohomologyTable {
    /// `h[i] = dim H^i`, for `i = 0..=n`.
    pub h: Vec<u64>,
    /// Number of characters contributing to some `h^i`.
    pub support_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree_support: Option<Vec<Vec<i64>>>,
    #[serde(skip)]
    pub certified_box: Option<DegreeBox>,
}

impl CohomologyTable {
    pub fn higher_vanish(&self) -> bool {
        self.h[1..].iter().all(|&x| x == 0)
    }

    pub fn is_zero(&self) -> bool {
        self.h.iter().all(|&x| x == 0)
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.h
            .iter()
            .enumerate()
            .map(|(i, &x)| if i % 2 == 0 { x as i64 } else { -(x as i64) })
            .sum()
    }
}

/// Box expansions tried before giving up on certification.
pub const MAX_EXPANSIONS: usize = 16;

fn violation_mask(fan: &Fan, a: &[i64], u: &[i64]) -> u64 {
    let mut mask = 0u64;
    for (i, v) in fan.rays().iter().enumerate() {
        let s: i64 = v.iter().zip(u).map(|(x, y)| x * y).sum();
        if s < -a[i] {
            mask |= 1 << i;
        }
    }
    mask
}

/// Masks of characters in `outer` but not in `inner`.
fn collect_masks(fan: &Fan, a: &[i64], outer: &DegreeBox, inner: Option<&DegreeBox>) -> HashMap<u64, Vec<Vec<i64>>> {
    let parts: Vec<HashMap<u64, Vec<Vec<i64>>>> = (outer.lower[0]..=outer.upper[0])
        .into_par_iter()
        .map(|first| {
            let mut local: HashMap<u64, Vec<Vec<i64>>> = HashMap::new();
            for u in outer.points_with_first(first) {
                if inner.is_some_and(|b| b.contains(&u)) {
                    continue;
                }
                local.entry(violation_mask(fan, a, &u)).or_default().push(u);
            }
            local
        })
        .collect();
    let mut all: HashMap<u64, Vec<Vec<i64>>> = HashMap::new();
    for part in parts {
        for (k, mut v) in part {
            all.entry(k).or_default().append(&mut v);
        }
    }
    all
}

fn betti_cached(fan: &Fan, mask: u64) -> Result<Vec<u64>> {
    if let Some(b) = fan.cache.betti.lock().expect("betti cache").get(&mask) {
        return Ok(b.clone());
    }
    let faces = fan.cache.faces.get_or_init(|| FaceComplex::build(fan));
    let b = reduced_betti(faces, fan.dim(), mask)?;
    fan.cache.betti.lock().expect("betti cache").insert(mask, b.clone());
    Ok(b)
}

fn accumulate(fan: &Fan, masks: HashMap<u64, Vec<Vec<i64>>>, h: &mut [u64], support: &mut Vec<Vec<i64>>) -> Result<()> {
    let mut keys: Vec<u64> = masks.keys().copied().collect();
    keys.sort_unstable();
    for k in keys {
        let b = betti_cached(fan, k)?;
        if b.iter().all(|&x| x == 0) {
            continue;
        }
        let points = &masks[&k];
        for (hi, bi) in h.iter_mut().zip(&b) {
            *hi += bi * points.len() as u64;
        }
        support.extend(points.iter().cloned());
    }
    Ok(())
}

/// Cohomology of `O(D)`, with the contributing characters when requested.
pub fn cohomology_with_support(fan: &Fan, d: &TorusDivisor, keep_support: bool) -> Result<CohomologyTable> {
    fan.require_smooth_complete()?;
    if d.len() != fan.num_rays() {
        return Err(Error::LengthMismatch { expected: fan.num_rays(), got: d.len() });
    }
    let n = fan.dim();
    let a = d.coeffs();
    let mut bx = DegreeBox::seed(fan, d)?;
    let mut h = vec![0u64; n + 1];
    let mut support = Vec::new();
    accumulate(fan, collect_masks(fan, a, &bx, None), &mut h, &mut support)?;
    for _ in 0..MAX_EXPANSIONS {
        let outer = bx.grow();
        let mut shell_h = vec![0u64; n + 1];
        let mut shell_support = Vec::new();
        accumulate(fan, collect_masks(fan, a, &outer, Some(&bx)), &mut shell_h, &mut shell_support)?;
        if shell_h.iter().all(|&x| x == 0) {
            support.sort();
            return Ok(CohomologyTable {
                h,
                support_size: support.len(),
                degree_support: keep_support.then_some(support),
                certified_box: Some(bx),
            });
        }
        for (x, y) in h.iter_mut().zip(&shell_h) {
            *x += y;
        }
        support.extend(shell_support);
        bx = outer;
    }
    Err(Error::BoxCertification { expansions: MAX_EXPANSIONS })
}

pub fn cohomology(fan: &Fan, d: &TorusDivisor) -> Result<CohomologyTable> {
    cohomology_with_support(fan, d, false)
}

/// `Hom^i(O(L1), O(L2)) = H^i(O(L2 - L1))`.
pub fn ext_dims(fan: &Fan, l1: &DivisorClass, l2: &DivisorClass) -> Result<CohomologyTable> {
    cohomology(fan, &(l2 - l1).to_divisor())
}

/// Cohomology of every difference `classes[j] - classes[i]`, each distinct
/// difference computed once. Entry `[i][j]` is `Hom^*(E_i, E_j)`.
pub fn ext_table(fan: &Fan, classes: &[DivisorClass]) -> Result<Vec<Vec<CohomologyTable>>> {
    let mut diffs: BTreeMap<DivisorClass, Option<CohomologyTable>> = BTreeMap::new();
    for a in classes {
        for b in classes {
            diffs.insert(b - a, None);
        }
    }
    let keys: Vec<DivisorClass> = diffs.keys().cloned().collect();
    let computed: Vec<Result<CohomologyTable>> =
        keys.par_iter().map(|k| cohomology(fan, &k.to_divisor())).collect();
    for (k, t) in keys.into_iter().zip(computed) {
        diffs.insert(k, Some(t?));
    }
    Ok(classes
        .iter()
        .map(|a| {
            classes
                .iter()
                .map(|b| diffs[&(b - a)].clone().expect("difference computed"))
                .collect()
        })
        .collect())
}

/// `M[i][j] = dim Hom(E_i, E_j)`.
pub fn hom_matrix(fan: &Fan, classes: &[DivisorClass]) -> Result<Vec<Vec<u64>>> {
    Ok(ext_table(fan, classes)?
        .into_iter()
        .map(|row| row.into_iter().map(|t| t.h[0]).collect())
        .collect())
}

pub fn euler_pairing(fan: &Fan, l1: &DivisorClass, l2: &DivisorClass) -> Result<i64> {
    Ok(ext_dims(fan, l1, l2)?.euler_characteristic())
}

pub fn gram_matrix(fan: &Fan, classes: &[DivisorClass]) -> Result<Vec<Vec<i64>>> {
    Ok(ext_table(fan, classes)?
        .into_iter()
        .map(|row| row.into_iter().map(|t| t.euler_characteristic()).collect())
        .collect())
}

/// When `D` is nef its higher cohomology must vanish.
pub fn nef_vanishing_check(fan: &Fan, d: &TorusDivisor) -> Result<bool> {
    if !intersection::is_nef(fan, d)? {
        return Ok(true);
    }
    Ok(cohomology(fan, d)?.higher_vanish())
}

/// Cohomology of the class of `D` (identical to that of `D`).
pub fn cohomology_of_class(fan: &Fan, d: &TorusDivisor) -> Result<CohomologyTable> {
    cohomology(fan, &class_of(fan, d)?.to_divisor())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p2() -> Fan {
        Fan::from_data("P2", &[&[1, 0], &[0, 1], &[-1, -1]], &[&[0, 1], &[1, 2], &[0, 2]]).unwrap()
    }

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
    fn projective_plane() {
        let f = p2();
        assert_eq!(cohomology(&f, &TorusDivisor::new(vec![0, 0, 2])).unwrap().h, vec![6, 0, 0]);
        assert_eq!(cohomology(&f, &TorusDivisor::new(vec![0, 0, -3])).unwrap().h, vec![0, 0, 1]);
        assert_eq!(cohomology(&f, &TorusDivisor::new(vec![0, 0, -5])).unwrap().h, vec![0, 0, 6]);
        assert_eq!(cohomology(&f, &TorusDivisor::new(vec![0, 0, -1])).unwrap().h, vec![0, 0, 0]);
    }

    #[test]
    fn projective_line() {
        let f = p1();
        for k in -5..5i64 {
            let t = cohomology(&f, &TorusDivisor::new(vec![0, k])).unwrap();
            assert_eq!(t.h, vec![(k + 1).max(0) as u64, (-k - 1).max(0) as u64]);
        }
    }

    #[test]
    fn hirzebruch_h1() {
        let t = cohomology(&hirzebruch(2), &TorusDivisor::new(vec![0, 0, -2, 1])).unwrap();
        assert_eq!(t.h, vec![1, 1, 0]);
    }

    #[test]
    fn hom_matrix_p1() {
        let f = p1();
        let c = vec![
            class_of(&f, &TorusDivisor::zero(2)).unwrap(),
            class_of(&f, &TorusDivisor::new(vec![0, -1])).unwrap(),
        ];
        assert_eq!(hom_matrix(&f, &c).unwrap(), vec![vec![1, 0], vec![2, 1]]);
    }

    #[test]
    fn sphere_betti() {
        let f = p2();
        let faces = FaceComplex::build(&f);
        assert_eq!(reduced_betti(&faces, 2, 0b111).unwrap(), vec![0, 0, 1]);
        assert_eq!(reduced_betti(&faces, 2, 0b101).unwrap(), vec![0, 0, 0]);
        assert_eq!(reduced_betti(&faces, 2, 0).unwrap(), vec![1, 0, 0]);
        let g = hirzebruch(0);
        let faces = FaceComplex::build(&g);
        // two opposite rays: two points
        assert_eq!(reduced_betti(&faces, 2, 0b0101).unwrap(), vec![0, 1, 0]);
    }
}
