//! Rational simplicial fans: validation, walls, star subdivisions,
//! blowdowns, products, primitive collections and isomorphism.
//!
//! A [`Fan`] is immutable once built. Derived data (cone inverses, walls,
//! the face complex used for cohomology) is computed lazily and cached.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::ops::Deref;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, IntMatrix};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatticeVector(Vec<i64>);

impl LatticeVector {
    pub fn new(coords: Vec<i64>) -> Self {
        Self(coords)
    }

    pub fn zero(dim: usize) -> Self {
        Self(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_primitive(&self) -> bool {
        linalg::gcd_all(&self.0) == 1
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_add(*b).ok_or(Error::Overflow("lattice vector sum")))
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    pub fn neg(&self) -> Self {
        Self(self.0.iter().map(|x| -x).collect())
    }

    pub fn into_inner(self) -> Vec<i64> {
        self.0
    }
}

impl Deref for LatticeVector {
    type Target = [i64];
    fn deref(&self) -> &[i64] {
        &self.0
    }
}

impl From<Vec<i64>> for LatticeVector {
    fn from(v: Vec<i64>) -> Self {
        Self(v)
    }
}

/// A cone given by a strictly increasing list of ray indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Cone(Vec<usize>);

impl Cone {
    pub fn new(mut rays: Vec<usize>) -> Self {
        rays.sort_unstable();
        rays.dedup();
        Self(rays)
    }

    pub fn rays(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, ray: usize) -> bool {
        self.0.binary_search(&ray).is_ok()
    }

    pub fn is_face_of(&self, other: &Cone) -> bool {
        self.0.iter().all(|r| other.contains(*r))
    }

    pub fn without(&self, ray: usize) -> Cone {
        Cone(self.0.iter().copied().filter(|&r| r != ray).collect())
    }

    pub fn with(&self, ray: usize) -> Cone {
        let mut v = self.0.clone();
        v.push(ray);
        Cone::new(v)
    }

    pub fn union(&self, other: &Cone) -> Cone {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Cone::new(v)
    }

    pub fn mask(&self) -> u64 {
        self.0.iter().fold(0u64, |m, &r| m | (1u64 << r))
    }
}

impl fmt::Display for Cone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub smooth: bool,
    pub complete: bool,
    pub simplicial: bool,
    pub errors: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.smooth && self.complete && self.simplicial && self.errors.is_empty()
    }
}

/// A codimension-one cone shared by two maximal cones, together with the
/// relation `v_a + v_b + sum_j alpha_j v_j = 0` over its rays.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Wall {
    pub ridge: Cone,
    pub apex_a: usize,
    pub apex_b: usize,
    /// Indexed like `ridge.rays()`.
    pub alphas: Vec<i64>,
    pub cones: (usize, usize),
}

impl Wall {
    pub fn alpha_of(&self, ray: usize) -> Option<i64> {
        self.ridge.rays().iter().position(|&r| r == ray).map(|i| self.alphas[i])
    }
}

#[derive(Default)]
pub(crate) struct FanCache {
    validation: OnceLock<ValidationReport>,
    cone_inverses: OnceLock<Result<Vec<IntMatrix>>>,
    walls: OnceLock<Result<Vec<Wall>>>,
    pub(crate) faces: OnceLock<crate::cohomology::FaceComplex>,
    pub(crate) betti: Mutex<HashMap<u64, Vec<u64>>>,
}

pub struct Fan {
    name: String,
    dim: usize,
    rays: Vec<LatticeVector>,
    max_cones: Vec<Cone>,
    base_rays: Vec<usize>,
    base_inverse: IntMatrix,
    pub(crate) cache: FanCache,
}

impl Clone for Fan {
    fn clone(&self) -> Self {
        Self {
            name: self.name.clone(),
            dim: self.dim,
            rays: self.rays.clone(),
            max_cones: self.max_cones.clone(),
            base_rays: self.base_rays.clone(),
            base_inverse: self.base_inverse.clone(),
            cache: FanCache::default(),
        }
    }
}

impl fmt::Debug for Fan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fan")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("rays", &self.rays)
            .field("max_cones", &self.max_cones)
            .field("base_rays", &self.base_rays)
            .finish()
    }
}

impl PartialEq for Fan {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.dim == other.dim
            && self.rays == other.rays
            && self.max_cones == other.max_cones
            && self.base_rays == other.base_rays
    }
}

impl Eq for Fan {}

impl Fan {
    /// Builds a fan from rays and maximal cones.
    ///
    /// `base_rays` selects the lattice basis that anchors divisor class
    /// normal forms. When `None`, the first `n` rays are used if they span a
    /// maximal cone, otherwise the first maximal cone.
    pub fn new(
        name: impl Into<String>,
        rays: Vec<LatticeVector>,
        max_cones: Vec<Cone>,
        base_rays: Option<Vec<usize>>,
    ) -> Result<Self> {
        let name = name.into();
        let dim = rays.first().map(|r| r.dim()).ok_or_else(|| Error::Malformed("no rays".into()))?;
        if dim == 0 || dim > 8 {
            return Err(Error::Malformed(format!("unsupported dimension {dim}")));
        }
        if rays.len() > 63 {
            return Err(Error::Malformed("at most 63 rays are supported".into()));
        }
        if let Some(bad) = rays.iter().position(|r| r.dim() != dim) {
            return Err(Error::Malformed(format!("ray {bad} has length {}, expected {dim}", rays[bad].dim())));
        }
        if max_cones.is_empty() {
            return Err(Error::Malformed("no maximal cones".into()));
        }
        for c in &max_cones {
            if c.len() != dim {
                return Err(Error::Malformed(format!("cone {c} is not full-dimensional")));
            }
            if let Some(&r) = c.rays().iter().find(|&&r| r >= rays.len()) {
                return Err(Error::Malformed(format!("cone {c} references missing ray {r}")));
            }
        }
        let base_rays = match base_rays {
            Some(b) => Cone::new(b).0,
            None => {
                let first: Cone = Cone::new((0..dim).collect());
                if max_cones.contains(&first) {
                    first.0
                } else {
                    max_cones[0].0.clone()
                }
            }
        };
        if base_rays.len() != dim || base_rays.iter().any(|&r| r >= rays.len()) {
            return Err(Error::InvalidBase { rays: base_rays });
        }
        let base_matrix: IntMatrix = base_rays.iter().map(|&r| rays[r].to_vec()).collect();
        let base_inverse = linalg::unimodular_inverse(&base_matrix)?
            .ok_or_else(|| Error::InvalidBase { rays: base_rays.clone() })?;
        Ok(Self {
            name,
            dim,
            rays,
            max_cones,
            base_rays,
            base_inverse,
            cache: FanCache::default(),
        })
    }

    /// Convenience constructor from plain integer data.
    pub fn from_data(name: &str, rays: &[&[i64]], cones: &[&[usize]]) -> Result<Self> {
        Self::new(
            name,
            rays.iter().map(|r| LatticeVector::new(r.to_vec())).collect(),
            cones.iter().map(|c| Cone::new(c.to_vec())).collect(),
            None,
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(&self, name: impl Into<String>) -> Fan {
        let mut f = self.clone();
        f.name = name.into();
        f
    }

    pub fn with_base_rays(&self, base: Vec<usize>) -> Result<Fan> {
        Fan::new(self.name.clone(), self.rays.clone(), self.max_cones.clone(), Some(base))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rays(&self) -> &[LatticeVector] {
        &self.rays
    }

    pub fn ray(&self, i: usize) -> &LatticeVector {
        &self.rays[i]
    }

    pub fn num_rays(&self) -> usize {
        self.rays.len()
    }

    pub fn max_cones(&self) -> &[Cone] {
        &self.max_cones
    }

    pub fn base_rays(&self) -> &[usize] {
        &self.base_rays
    }

    /// Inverse of the matrix whose rows are the base rays.
    pub fn base_inverse(&self) -> &IntMatrix {
        &self.base_inverse
    }

    /// Index of the base among the maximal cones, if it is one.
    pub fn base_cone_index(&self) -> Option<usize> {
        let base = Cone(self.base_rays.clone());
        self.max_cones.iter().position(|c| *c == base)
    }

    pub fn picard_rank(&self) -> usize {
        self.rays.len() - self.dim
    }

    pub fn cone_matrix(&self, cone: &Cone) -> IntMatrix {
        cone.rays().iter().map(|&r| self.rays[r].to_vec()).collect()
    }

    /// True if `cone` is a face of some maximal cone.
    pub fn contains_cone(&self, cone: &Cone) -> bool {
        self.max_cones.iter().any(|m| cone.is_face_of(m))
    }

    pub fn validate(&self) -> &ValidationReport {
        self.cache.validation.get_or_init(|| validate_fan(self))
    }

    pub fn require_smooth_complete(&self) -> Result<()> {
        let r = self.validate();
        if r.is_ok() {
            Ok(())
        } else {
            Err(Error::NotSmoothComplete {
                name: self.name.clone(),
                reason: if r.errors.is_empty() {
                    "not smooth".to_string()
                } else {
                    r.errors.join("; ")
                },
            })
        }
    }

    /// Integer inverses of the maximal-cone matrices (rows = rays), in the
    /// order of [`Fan::max_cones`].
    pub fn cone_inverses(&self) -> Result<&[IntMatrix]> {
        self.cache
            .cone_inverses
            .get_or_init(|| {
                self.max_cones
                    .iter()
                    .map(|c| {
                        linalg::unimodular_inverse(&self.cone_matrix(c))?.ok_or_else(|| {
                            Error::NotSmoothComplete {
                                name: self.name.clone(),
                                reason: format!("cone {c} is not unimodular"),
                            }
                        })
                    })
                    .collect()
            })
            .as_deref()
            .map_err(Clone::clone)
    }

    /// Index of a maximal cone containing `v`, with the (non-negative,
    /// integral) coordinates of `v` in that cone's rays.
    pub fn locate(&self, v: &[i64]) -> Result<(usize, Vec<i64>)> {
        let inverses = self.cone_inverses()?;
        for (k, inv) in inverses.iter().enumerate() {
            // v = sum c_j v_j  <=>  c = v^T A^{-1}
            let c: Vec<i64> = (0..self.dim)
                .map(|j| {
                    (0..self.dim).try_fold(0i64, |acc, i| {
                        v[i].checked_mul(inv[i][j])
                            .and_then(|p| acc.checked_add(p))
                            .ok_or(Error::Overflow("cone location"))
                    })
                })
                .collect::<Result<_>>()?;
            if c.iter().all(|&x| x >= 0) {
                return Ok((k, c));
            }
        }
        Err(Error::NotInSupport(v.to_vec()))
    }

    /// Every wall of a smooth complete fan, ordered by ridge.
    pub fn walls(&self) -> Result<&[Wall]> {
        self.cache
            .walls
            .get_or_init(|| compute_walls(self))
            .as_deref()
            .map_err(Clone::clone)
    }

    /// Star subdivision along `tau`; the new ray is appended last.
    pub fn star_subdivide(&self, tau: &Cone) -> Result<(Fan, usize)> {
        if tau.len() < 2 || !self.contains_cone(tau) {
            return Err(Error::NotACone(tau.rays().to_vec()));
        }
        let mut new_ray = LatticeVector::zero(self.dim);
        for &r in tau.rays() {
            new_ray = new_ray.checked_add(&self.rays[r])?;
        }
        let idx = self.rays.len();
        let mut rays = self.rays.clone();
        rays.push(new_ray);
        let mut cones = Vec::new();
        for c in &self.max_cones {
            if tau.is_face_of(c) {
                for &j in tau.rays() {
                    cones.push(c.without(j).with(idx));
                }
            } else {
                cones.push(c.clone());
            }
        }
        let name = format!("{}*{}", self.name, tau);
        let fan = Fan::new(name, rays, cones, Some(self.base_rays.clone()))?;
        Ok((fan, idx))
    }

    /// All equivariant blowdowns: rays `e` with `v_e` equal to the sum of the
    /// rays of a non-cone `tau` of size 2..=n whose star subdivision gives
    /// back this fan.
    pub fn blowdowns(&self) -> Result<Vec<Blowdown>> {
        self.require_smooth_complete()?;
        let n = self.dim;
        let mut out = Vec::new();
        for e in 0..self.rays.len() {
            let neighbors: BTreeSet<usize> = self
                .max_cones
                .iter()
                .filter(|c| c.contains(e))
                .flat_map(|c| c.rays().iter().copied())
                .filter(|&r| r != e)
                .collect();
            let neighbors: Vec<usize> = neighbors.into_iter().collect();
            for size in 2..=n {
                for subset in combinations(&neighbors, size) {
                    let tau = Cone::new(subset);
                    let mut sum = LatticeVector::zero(n);
                    for &r in tau.rays() {
                        sum = sum.checked_add(&self.rays[r])?;
                    }
                    if sum != self.rays[e] {
                        continue;
                    }
                    if let Some(target) = self.try_blowdown(e, &tau)? {
                        out.push(Blowdown {
                            exceptional: e,
                            center: tau,
                            target,
                        });
                    }
                }
            }
        }
        Ok(out)
    }

    fn try_blowdown(&self, e: usize, tau: &Cone) -> Result<Option<Fan>> {
        let remap = |r: usize| if r > e { r - 1 } else { r };
        let rays: Vec<LatticeVector> = self
            .rays
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != e)
            .map(|(_, r)| r.clone())
            .collect();
        let mut cones: BTreeSet<Cone> = BTreeSet::new();
        for c in &self.max_cones {
            let c2 = if c.contains(e) { c.without(e).union(tau) } else { c.clone() };
            if c2.len() != self.dim {
                return Ok(None);
            }
            cones.insert(Cone::new(c2.rays().iter().map(|&r| remap(r)).collect()));
        }
        let cones: Vec<Cone> = cones.into_iter().collect();
        let base = if self.base_rays.contains(&e) {
            cones[0].rays().to_vec()
        } else {
            self.base_rays.iter().map(|&r| remap(r)).collect()
        };
        let name = format!("{}/{}", self.name, e);
        let Ok(target) = Fan::new(name, rays, cones, Some(base)) else {
            return Ok(None);
        };
        if !target.validate().is_ok() {
            return Ok(None);
        }
        let tau_target = Cone::new(tau.rays().iter().map(|&r| remap(r)).collect());
        if !target.contains_cone(&tau_target) {
            return Ok(None);
        }
        let (back, _) = target.star_subdivide(&tau_target)?;
        if !same_cones_by_vectors(&back, self) {
            return Ok(None);
        }
        Ok(Some(target))
    }

    /// Minimal sets of rays that do not span a cone.
    pub fn primitive_collections(&self) -> Vec<Cone> {
        let masks: Vec<u64> = self.max_cones.iter().map(Cone::mask).collect();
        let is_face = |m: u64| masks.iter().any(|c| m & !c == 0);
        let all: Vec<usize> = (0..self.rays.len()).collect();
        let mut out = Vec::new();
        for size in 2..=self.dim + 1 {
            for subset in combinations(&all, size) {
                let m = Cone::new(subset.clone()).mask();
                if is_face(m) {
                    continue;
                }
                if subset.iter().all(|&r| is_face(m & !(1u64 << r))) {
                    out.push(Cone::new(subset));
                }
            }
        }
        out
    }

    /// Ray coordinates for file output.
    pub fn to_file(&self) -> FanFile {
        FanFile {
            name: self.name.clone(),
            dim: self.dim,
            rays: self.rays.iter().map(|r| r.to_vec()).collect(),
            max_cones: self.max_cones.iter().map(|c| c.rays().to_vec()).collect(),
            base_cone: self.base_cone_index(),
            base_rays: if self.base_cone_index().is_some() {
                None
            } else {
                Some(self.base_rays.clone())
            },
        }
    }

    pub fn from_file(file: FanFile) -> Result<Fan> {
        let rays: Vec<LatticeVector> = file.rays.into_iter().map(LatticeVector::new).collect();
        if rays.iter().any(|r| r.dim() != file.dim) {
            return Err(Error::Malformed(format!("ray length differs from dim {}", file.dim)));
        }
        let cones: Vec<Cone> = file.max_cones.into_iter().map(Cone::new).collect();
        let base = match (file.base_rays, file.base_cone) {
            (Some(b), _) => Some(b),
            (None, Some(k)) => Some(
                cones
                    .get(k)
                    .ok_or_else(|| Error::Malformed(format!("base_cone {k} out of range")))?
                    .rays()
                    .to_vec(),
            ),
            (None, None) => None,
        };
        Fan::new(file.name, rays, cones, base)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("fan serialization")
    }

    pub fn from_json(s: &str) -> Result<Fan> {
        let file: FanFile = serde_json::from_str(s).map_err(|e| Error::Json(e.to_string()))?;
        Fan::from_file(file)
    }
}

/// Wire format of a fan; indices are 0-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FanFile {
    pub dim: usize,
    pub rays: Vec<Vec<i64>>,
    pub max_cones: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_cone: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_rays: Option<Vec<usize>>,
    #[serde(default)]
    pub name: String,
}

#[derive(Clone, Debug)]
pub struct Blowdown {
    /// Ray of the exceptional divisor, indexed in the source fan.
    pub exceptional: usize,
    /// Blowup center, indexed in the source fan.
    pub center: Cone,
    pub target: Fan,
}

impl Blowdown {
    /// Index in the target fan of a source ray other than the exceptional one.
    pub fn target_index(&self, source_ray: usize) -> Option<usize> {
        match source_ray.cmp(&self.exceptional) {
            std::cmp::Ordering::Less => Some(source_ray),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(source_ray - 1),
        }
    }

    pub fn target_center(&self) -> Cone {
        Cone::new(self.center.rays().iter().filter_map(|&r| self.target_index(r)).collect())
    }

    /// Curve center (`|tau| = n - 1`) as opposed to a point or a larger locus.
    pub fn center_dim(&self) -> usize {
        self.target.dim() - self.center.len()
    }
}

/// Block-diagonal product of two fans.
pub fn product(f1: &Fan, f2: &Fan) -> Result<Fan> {
    let (n1, n2, l1) = (f1.dim, f2.dim, f1.rays.len());
    let mut rays = Vec::with_capacity(l1 + f2.rays.len());
    for r in &f1.rays {
        let mut v = r.to_vec();
        v.extend(std::iter::repeat_n(0, n2));
        rays.push(LatticeVector::new(v));
    }
    for r in &f2.rays {
        let mut v = vec![0; n1];
        v.extend_from_slice(r);
        rays.push(LatticeVector::new(v));
    }
    let mut cones = Vec::new();
    for a in &f1.max_cones {
        for b in &f2.max_cones {
            let mut v = a.rays().to_vec();
            v.extend(b.rays().iter().map(|r| r + l1));
            cones.push(Cone::new(v));
        }
    }
    let mut base = f1.base_rays.clone();
    base.extend(f2.base_rays.iter().map(|r| r + l1));
    Fan::new(format!("{} x {}", f1.name, f2.name), rays, cones, Some(base))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FanIsomorphism {
    /// Rows of `M` with `M v_i = w_{ray_map[i]}`.
    pub matrix: IntMatrix,
    pub ray_map: Vec<usize>,
}

/// Searches for a lattice automorphism carrying `f1` onto `f2`.
pub fn isomorphic(f1: &Fan, f2: &Fan) -> Result<Option<FanIsomorphism>> {
    if f1.dim != f2.dim || f1.rays.len() != f2.rays.len() || f1.max_cones.len() != f2.max_cones.len() {
        return Ok(None);
    }
    let n = f1.dim;
    let source = &f1.max_cones[0];
    let source_cols = linalg::transpose(&f1.cone_matrix(source));
    let Some(source_inv) = linalg::unimodular_inverse(&source_cols)? else {
        return Ok(None);
    };
    let target_index: HashMap<&[i64], usize> =
        f2.rays.iter().enumerate().map(|(i, r)| (&r[..], i)).collect();
    let target_cones: HashSet<&Cone> = f2.max_cones.iter().collect();
    for tc in &f2.max_cones {
        for perm in permutations(tc.rays()) {
            let image_cols: IntMatrix = linalg::transpose(
                &perm.iter().map(|&r| f2.rays[r].to_vec()).collect::<Vec<_>>(),
            );
            let m = linalg::mat_mul(&image_cols, &source_inv)?;
            if linalg::determinant(&m)?.abs() != 1 {
                continue;
            }
            let mut ray_map = Vec::with_capacity(f1.rays.len());
            let mut ok = true;
            for r in &f1.rays {
                let img = linalg::mat_vec(&m, r)?;
                match target_index.get(&img[..]) {
                    Some(&j) => ray_map.push(j),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                continue;
            }
            let all_cones_map = f1.max_cones.iter().all(|c| {
                let img = Cone::new(c.rays().iter().map(|&r| ray_map[r]).collect());
                img.len() == n && target_cones.contains(&img)
            });
            if all_cones_map {
                return Ok(Some(FanIsomorphism { matrix: m, ray_map }));
            }
        }
    }
    Ok(None)
}

/// Builds the face fan of the convex hull of `rays`, which must be the
/// vertices of a simplicial polytope containing the origin in its interior.
pub fn face_fan(name: &str, rays: Vec<LatticeVector>, base: Option<Vec<usize>>) -> Result<Fan> {
    let n = rays.first().map(|r| r.dim()).ok_or_else(|| Error::Malformed("no rays".into()))?;
    let all: Vec<usize> = (0..rays.len()).collect();
    let mut cones = Vec::new();
    for subset in combinations(&all, n) {
        let rows: IntMatrix = subset.iter().map(|&i| rays[i].to_vec()).collect();
        let Some(normal) = linalg::solve_rational(&rows, &vec![1; n]) else {
            continue;
        };
        let one = num_rational::BigRational::from_integer(1.into());
        let mut facet = true;
        let mut coplanar = false;
        for (j, r) in rays.iter().enumerate() {
            if subset.contains(&j) {
                continue;
            }
            let value: num_rational::BigRational = r
                .iter()
                .zip(&normal)
                .map(|(a, b)| b * num_bigint::BigInt::from(*a))
                .sum();
            if value > one {
                facet = false;
                break;
            }
            coplanar |= value == one;
        }
        if facet && coplanar {
            return Err(Error::Malformed(format!("{name}: polytope has a non-simplicial facet")));
        }
        if facet {
            cones.push(Cone::new(subset));
        }
    }
    Fan::new(name, rays, cones, base)
}

/// Compares two fans by their cones as sets of ray vectors, ignoring indices.
pub fn same_cones_by_vectors(f1: &Fan, f2: &Fan) -> bool {
    let key = |f: &Fan| -> BTreeSet<BTreeSet<LatticeVector>> {
        f.max_cones
            .iter()
            .map(|c| c.rays().iter().map(|&r| f.rays[r].clone()).collect())
            .collect()
    };
    f1.dim == f2.dim && key(f1) == key(f2)
}

pub(crate) fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    fn rec(items: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            if items.len() - i < k - cur.len() {
                break;
            }
            cur.push(items[i]);
            rec(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= items.len() {
        rec(items, k, 0, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

fn compute_walls(fan: &Fan) -> Result<Vec<Wall>> {
    fan.require_smooth_complete()?;
    let inverses = fan.cone_inverses()?;
    let mut by_ridge: BTreeMap<Cone, Vec<(usize, usize)>> = BTreeMap::new();
    for (k, c) in fan.max_cones.iter().enumerate() {
        for &r in c.rays() {
            by_ridge.entry(c.without(r)).or_default().push((k, r));
        }
    }
    let mut walls = Vec::with_capacity(by_ridge.len());
    for (ridge, sides) in by_ridge {
        let [(ka, a), (kb, b)] = sides[..] else {
            return Err(Error::NotSmoothComplete {
                name: fan.name.clone(),
                reason: format!("ridge {ridge} lies in {} maximal cones", sides.len()),
            });
        };
        // Coordinates of v_a in the basis of cone kb.
        let inv = &inverses[kb];
        let cone_b = &fan.max_cones[kb];
        let va = &fan.rays[a];
        let coords: Vec<i64> = (0..fan.dim)
            .map(|j| (0..fan.dim).map(|i| va[i] * inv[i][j]).sum())
            .collect();
        let pos_b = cone_b.rays().iter().position(|&r| r == b).expect("apex in cone");
        if coords[pos_b] != -1 {
            return Err(Error::NotSmoothComplete {
                name: fan.name.clone(),
                reason: format!("wall {ridge}: apex coefficient {} != -1", coords[pos_b]),
            });
        }
        let alphas = ridge
            .rays()
            .iter()
            .map(|r| {
                let p = cone_b.rays().iter().position(|x| x == r).expect("ridge ray in cone");
                -coords[p]
            })
            .collect();
        walls.push(Wall {
            ridge,
            apex_a: a,
            apex_b: b,
            alphas,
            cones: (ka, kb),
        });
    }
    Ok(walls)
}

fn validate_fan(fan: &Fan) -> ValidationReport {
    let mut errors = Vec::new();
    let n = fan.dim;

    let mut seen: HashMap<&LatticeVector, usize> = HashMap::new();
    for (i, r) in fan.rays.iter().enumerate() {
        if r.iter().all(|&x| x == 0) {
            errors.push(format!("ray {i} is zero"));
        } else if !r.is_primitive() {
            errors.push(format!("ray {i} {:?} is not primitive", &r[..]));
        }
        if let Some(j) = seen.insert(r, i) {
            errors.push(format!("rays {j} and {i} coincide"));
        }
    }
    let mut cone_set = HashSet::new();
    for c in &fan.max_cones {
        if !cone_set.insert(c) {
            errors.push(format!("cone {c} listed twice"));
        }
    }
    for i in 0..fan.rays.len() {
        if !fan.max_cones.iter().any(|c| c.contains(i)) {
            errors.push(format!("ray {i} lies in no maximal cone"));
        }
    }

    let mut simplicial = true;
    let mut smooth = true;
    for c in &fan.max_cones {
        match linalg::determinant(&fan.cone_matrix(c)) {
            Ok(0) => {
                simplicial = false;
                smooth = false;
                errors.push(format!("cone {c} is degenerate"));
            }
            Ok(d) if d.abs() != 1 => smooth = false,
            Ok(_) => {}
            Err(e) => {
                simplicial = false;
                smooth = false;
                errors.push(e.to_string());
            }
        }
    }

    let structural_ok = errors.is_empty();
    let complete = simplicial && structural_ok && completeness_errors(fan, &mut errors);
    let _ = n;
    ValidationReport {
        smooth: smooth && structural_ok,
        complete,
        simplicial,
        errors,
    }
}

/// Wall pairing, opposite sides, facet connectivity and probe location.
/// Pushes diagnostics and returns whether the fan is complete.
fn completeness_errors(fan: &Fan, errors: &mut Vec<String>) -> bool {
    let n = fan.dim;
    let before = errors.len();
    let mut by_ridge: BTreeMap<Cone, Vec<(usize, usize)>> = BTreeMap::new();
    for (k, c) in fan.max_cones.iter().enumerate() {
        for &r in c.rays() {
            by_ridge.entry(c.without(r)).or_default().push((k, r));
        }
    }
    let mut parent: Vec<usize> = (0..fan.max_cones.len()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut x = x;
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (ridge, sides) in &by_ridge {
        if sides.len() != 2 {
            errors.push(format!("ridge {ridge} lies in {} maximal cones", sides.len()));
            continue;
        }
        let side = |apex: usize| -> i64 {
            let mut rows = fan.cone_matrix(ridge);
            rows.push(fan.rays[apex].to_vec());
            linalg::determinant(&rows).unwrap_or(0).signum()
        };
        let (sa, sb) = (side(sides[0].1), side(sides[1].1));
        if sa == 0 || sb == 0 || sa == sb {
            errors.push(format!("cones {} and {} overlap across ridge {ridge}", sides[0].0, sides[1].0));
        }
        let (x, y) = (find(&mut parent, sides[0].0), find(&mut parent, sides[1].0));
        parent[x] = y;
    }
    let root = find(&mut parent, 0);
    if (0..fan.max_cones.len()).any(|k| find(&mut parent, k) != root) {
        errors.push("maximal cones are not facet-connected".into());
    }
    if errors.len() > before {
        return false;
    }

    let cone_bases: Vec<IntMatrix> = fan.max_cones.iter().map(|c| fan.cone_matrix(c)).collect();
    let signs_of = |p: &[i64]| -> Vec<Vec<i32>> {
        cone_bases
            .iter()
            .map(|b| {
                linalg::coordinates_in_basis(b, p)
                    .map(|c| c.iter().map(linalg::sign).collect())
                    .unwrap_or_default()
            })
            .collect()
    };

    let mut probes: Vec<Vec<i64>> = Vec::new();
    let total = 3usize.pow(n as u32);
    for code in 0..total {
        let mut c = code;
        let v: Vec<i64> = (0..n)
            .map(|_| {
                let d = (c % 3) as i64 - 1;
                c /= 3;
                d
            })
            .collect();
        if v.iter().any(|&x| x != 0) {
            probes.push(v);
        }
    }
    probes.extend(fan.rays.iter().map(|r| r.neg().into_inner()));
    for p in &probes {
        let covered = signs_of(p).iter().any(|s| !s.is_empty() && s.iter().all(|&x| x >= 0));
        if !covered {
            errors.push(format!("probe {p:?} lies outside the support"));
        }
    }

    // Generic probes must sit in the interior of exactly one cone.
    const GENERIC: [i64; 8] = [97, -89, 83, -79, 73, -71, 67, -61];
    let mut interior_checked = 0;
    for shift in 0..4 {
        let p: Vec<i64> = (0..n)
            .map(|i| GENERIC[(i + shift) % 8] * if (i * shift) % 2 == 0 { 1 } else { -1 } + i as i64)
            .collect();
        let signs = signs_of(&p);
        if signs.iter().any(|s| s.contains(&0) && s.iter().all(|&x| x >= 0)) {
            continue;
        }
        interior_checked += 1;
        let count = signs.iter().filter(|s| !s.is_empty() && s.iter().all(|&x| x > 0)).count();
        if count != 1 {
            errors.push(format!("generic probe {p:?} lies in {count} cone interiors"));
        }
    }
    if interior_checked == 0 {
        errors.push("no generic probe avoided cone boundaries".into());
    }
    errors.len() == before
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
    fn p2_is_smooth_complete() {
        let r = p2().validate().clone();
        assert!(r.smooth && r.complete && r.simplicial, "{r:?}");
    }

    #[test]
    fn missing_cone_is_incomplete() {
        let f = Fan::from_data("P2-", &[&[1, 0], &[0, 1], &[-1, -1]], &[&[0, 1], &[1, 2]]).unwrap();
        let r = f.validate();
        assert!(!r.complete);
        assert!(r.errors.iter().any(|e| e.contains("lies in 1")));
    }

    #[test]
    fn non_primitive_and_duplicate_rays_reported() {
        let f = Fan::from_data("bad", &[&[1, 0], &[0, 1], &[-2, -2], &[0, 1]], &[&[0, 1], &[1, 2], &[0, 2]])
            .unwrap();
        let r = f.validate();
        assert!(r.errors.iter().any(|e| e.contains("not primitive")));
        assert!(r.errors.iter().any(|e| e.contains("coincide")));
        assert!(!r.smooth);
    }

    #[test]
    fn overlapping_cones_detected() {
        // Two triangulations of the plane glued with the wrong orientation.
        let f = Fan::from_data(
            "twice",
            &[&[1, 0], &[0, 1], &[-1, 0], &[0, -1], &[1, 1]],
            &[&[0, 1], &[1, 2], &[2, 3], &[0, 3], &[0, 4], &[1, 4]],
        )
        .unwrap();
        assert!(!f.validate().complete);
    }

    #[test]
    fn singular_cone_not_smooth() {
        let f = Fan::from_data("P(1,1,2)", &[&[1, 0], &[0, 1], &[-1, -2]], &[&[0, 1], &[1, 2], &[0, 2]])
            .unwrap();
        let r = f.validate();
        assert!(!r.smooth);
        assert!(r.complete, "{r:?}");
    }

    #[test]
    fn hirzebruch_wall_at_v2() {
        for d in 0..4 {
            let f = hirzebruch(d);
            let w = f.walls().unwrap().iter().find(|w| w.ridge.rays() == [1]).unwrap().clone();
            assert_eq!(w.alphas, vec![-d]);
            let (a, b) = (&f.rays()[w.apex_a], &f.rays()[w.apex_b]);
            let v2 = &f.rays()[1];
            for i in 0..2 {
                assert_eq!(a[i] + b[i] + w.alphas[0] * v2[i], 0);
            }
        }
    }

    #[test]
    fn p1_walls_have_empty_ridge() {
        let w = p1().walls().unwrap().to_vec();
        assert_eq!(w.len(), 1);
        assert!(w[0].ridge.is_empty());
    }

    #[test]
    fn subdividing_p2_gives_sigma1() {
        let (f, idx) = p2().star_subdivide(&Cone::new(vec![0, 1])).unwrap();
        assert_eq!(idx, 3);
        assert_eq!(&f.rays()[3][..], &[1, 1]);
        assert!(f.validate().is_ok());
        assert!(isomorphic(&f, &hirzebruch(1)).unwrap().is_some());
    }

    #[test]
    fn star_subdivide_rejects_non_cones() {
        let f = hirzebruch(1);
        assert!(matches!(f.star_subdivide(&Cone::new(vec![0, 2])), Err(Error::NotACone(_))));
        assert!(f.star_subdivide(&Cone::new(vec![0])).is_err());
    }

    #[test]
    fn sigma1_has_unique_blowdown() {
        let f = hirzebruch(1);
        let bd = f.blowdowns().unwrap();
        assert_eq!(bd.len(), 1);
        assert_eq!(bd[0].exceptional, 1);
        assert!(isomorphic(&bd[0].target, &p2()).unwrap().is_some());
        assert!(hirzebruch(2).blowdowns().unwrap().is_empty());
        assert!(p2().blowdowns().unwrap().is_empty());
    }

    #[test]
    fn products() {
        let f = product(&p1(), &p1()).unwrap();
        assert!(f.validate().is_ok());
        assert!(isomorphic(&f, &hirzebruch(0)).unwrap().is_some());
        let f3 = product(&f, &p1()).unwrap();
        assert_eq!(f3.max_cones().len(), 8);
        assert!(f3.validate().is_ok());
    }

    #[test]
    fn primitive_collections_small() {
        assert_eq!(p2().primitive_collections(), vec![Cone::new(vec![0, 1, 2])]);
        assert_eq!(
            hirzebruch(3).primitive_collections(),
            vec![Cone::new(vec![0, 2]), Cone::new(vec![1, 3])]
        );
    }

    #[test]
    fn isomorphism_search() {
        let f = p2();
        let id = isomorphic(&f, &f).unwrap().unwrap();
        assert_eq!(id.matrix, vec![vec![1, 0], vec![0, 1]]);
        // g = [[2,1],[1,1]]
        let g = [[2i64, 1], [1, 1]];
        let rays: Vec<LatticeVector> = f
            .rays()
            .iter()
            .map(|r| LatticeVector::new(vec![g[0][0] * r[0] + g[0][1] * r[1], g[1][0] * r[0] + g[1][1] * r[1]]))
            .collect();
        let h = Fan::new("gP2", rays, f.max_cones().to_vec(), None).unwrap();
        let iso = isomorphic(&f, &h).unwrap().unwrap();
        for (i, r) in f.rays().iter().enumerate() {
            assert_eq!(linalg::mat_vec(&iso.matrix, r).unwrap(), h.rays()[iso.ray_map[i]].to_vec());
        }
        assert!(isomorphic(&hirzebruch(1), &hirzebruch(2)).unwrap().is_none());
    }

    #[test]
    fn json_round_trip() {
        let f = hirzebruch(2);
        let back = Fan::from_json(&f.to_json()).unwrap();
        assert_eq!(f, back);
        assert!(Fan::from_json("{\"dim\": 2}").is_err());
        assert!(Fan::from_json("garbage").is_err());
    }

    #[test]
    fn face_fan_of_p3() {
        let rays = vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1], vec![-1, -1, -1]];
        let f = face_fan("P3", rays.into_iter().map(LatticeVector::new).collect(), None).unwrap();
        assert_eq!(f.max_cones().len(), 4);
        assert!(f.validate().is_ok());
    }
}
