//! Exceptional, strong and full collections of line bundles.
//!
//! Fullness is certified by closing a set of classes under Koszul moves:
//! for a primitive collection `P` the divisors `D_j, j in P` have empty
//! intersection, so the twisted Koszul complex with terms
//! `O(L - sum_{j in T} D_j)`, `T` a subset of `P`, is exact. If every term
//! but one lies in the span, so does the remaining one.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashSet};

use serde::{Deserialize, Serialize};

use crate::cohomology::{ext_table, CohomologyTable};
use crate::divisor::{class_of_coeffs, pushforward, DivisorClass, TorusDivisor};
use crate::error::Result;
use crate::fan::{combinations, Blowdown, Cone, Fan};
use crate::frobenius::{stable_summands, summands, SummandSet};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtWitness {
    pub from: usize,
    pub to: usize,
    pub degree: usize,
    pub dim: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Fullness {
    Certified {
        bounds: ClosureBounds,
        closure_size: usize,
        trace: Vec<KoszulStep>,
    },
    Inconclusive {
        bounds: ClosureBounds,
        missing: Vec<DivisorClass>,
    },
}

impl Fullness {
    pub fn is_certified(&self) -> bool {
        matches!(self, Fullness::Certified { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectionReport {
    pub classes: Vec<DivisorClass>,
    pub is_exceptional_each: Vec<bool>,
    pub strong: bool,
    pub witnesses: Vec<ExtWitness>,
    /// Exceptional order as a permutation of input indices.
    pub order: Option<Vec<usize>>,
    /// Indices forming a cycle of nonzero Homs when no order exists.
    pub cycle: Option<Vec<usize>>,
    pub size: usize,
    pub expected_size: usize,
    pub size_matches_rank: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fullness: Option<Fullness>,
}

impl CollectionReport {
    /// Strong, ordered and of the right size.
    pub fn passes(&self) -> bool {
        self.is_exceptional_each.iter().all(|&b| b)
            && self.strong
            && self.order.is_some()
            && self.size_matches_rank
    }
}

/// Ordered-pair table of `Hom^*(E_i, E_j)`.
pub struct ExtTable {
    table: Vec<Vec<CohomologyTable>>,
}

impl ExtTable {
    pub fn new(fan: &Fan, classes: &[DivisorClass]) -> Result<Self> {
        Ok(Self { table: ext_table(fan, classes)? })
    }

    pub fn get(&self, i: usize, j: usize) -> &CohomologyTable {
        &self.table[i][j]
    }

    pub fn hom_matrix(&self) -> Vec<Vec<u64>> {
        self.table.iter().map(|r| r.iter().map(|t| t.h[0]).collect()).collect()
    }

    fn witnesses(&self, subset: &[usize]) -> Vec<ExtWitness> {
        let mut out = Vec::new();
        for &i in subset {
            for &j in subset {
                for (p, &dim) in self.table[i][j].h.iter().enumerate().skip(1) {
                    if dim != 0 {
                        out.push(ExtWitness { from: i, to: j, degree: p, dim });
                    }
                }
            }
        }
        out
    }

    /// Topological order with `i` before `j` whenever `Hom^*(E_i, E_j) != 0`;
    /// smallest available index first.
    fn order(&self, subset: &[usize]) -> std::result::Result<Vec<usize>, Vec<usize>> {
        let k = subset.len();
        let edge = |a: usize, b: usize| a != b && !self.table[subset[a]][subset[b]].is_zero();
        let mut indeg = vec![0usize; k];
        for a in 0..k {
            for (b, d) in indeg.iter_mut().enumerate() {
                if edge(a, b) {
                    *d += 1;
                }
            }
        }
        let mut ready: BTreeSet<usize> = (0..k).filter(|&b| indeg[b] == 0).collect();
        let mut out = Vec::with_capacity(k);
        while let Some(a) = ready.pop_first() {
            out.push(subset[a]);
            for (b, d) in indeg.iter_mut().enumerate() {
                if edge(a, b) {
                    *d -= 1;
                    if *d == 0 {
                        ready.insert(b);
                    }
                }
            }
        }
        if out.len() == k {
            return Ok(out);
        }
        // Walk backwards along edges inside the remaining vertices.
        let remaining: Vec<usize> = (0..k).filter(|&b| indeg[b] > 0).collect();
        let mut path = vec![remaining[0]];
        let mut seen = HashSet::from([remaining[0]]);
        loop {
            let cur = *path.last().expect("non-empty path");
            let prev = remaining
                .iter()
                .copied()
                .find(|&a| edge(a, cur))
                .expect("remaining vertex has an incoming edge");
            if !seen.insert(prev) {
                let start = path.iter().position(|&x| x == prev).expect("cycle start");
                let mut cycle: Vec<usize> = path[start..].iter().map(|&x| subset[x]).collect();
                cycle.reverse();
                return Err(cycle);
            }
            path.push(prev);
        }
    }
}

fn report_from_table(
    fan: &Fan,
    classes: &[DivisorClass],
    table: &ExtTable,
    subset: &[usize],
) -> CollectionReport {
    let is_exceptional_each = subset
        .iter()
        .map(|&i| {
            let t = table.get(i, i);
            t.h[0] == 1 && t.higher_vanish()
        })
        .collect();
    let witnesses = table.witnesses(subset);
    let (order, cycle) = match table.order(subset) {
        Ok(o) => (Some(o), None),
        Err(c) => (None, Some(c)),
    };
    let expected_size = fan.max_cones().len();
    CollectionReport {
        classes: subset.iter().map(|&i| classes[i].clone()).collect(),
        is_exceptional_each,
        strong: witnesses.is_empty(),
        witnesses,
        order,
        cycle,
        size: subset.len(),
        expected_size,
        size_matches_rank: subset.len() == expected_size,
        fullness: None,
    }
}

/// Checks exceptionality, strongness, order and size of `classes`.
///
/// Witness and order indices refer to positions in `classes`.
pub fn check_collection(fan: &Fan, classes: &[DivisorClass]) -> Result<CollectionReport> {
    let table = ExtTable::new(fan, classes)?;
    let all: Vec<usize> = (0..classes.len()).collect();
    Ok(report_from_table(fan, classes, &table, &all))
}

/// All `k`-subsets (as sorted index lists) that are strong and ordered.
pub fn find_strong_subsets(fan: &Fan, classes: &[DivisorClass], k: usize) -> Result<Vec<Vec<usize>>> {
    let table = ExtTable::new(fan, classes)?;
    let all: Vec<usize> = (0..classes.len()).collect();
    Ok(combinations(&all, k)
        .into_iter()
        .filter(|s| table.witnesses(s).is_empty() && table.order(s).is_ok())
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosureBounds {
    /// Largest coefficient magnitude of a class admitted to the closure.
    pub coefficient_bound: i64,
    /// Largest coefficient magnitude of a twist.
    pub twist_bound: i64,
}

impl Default for ClosureBounds {
    fn default() -> Self {
        Self { coefficient_bound: 8, twist_bound: 8 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KoszulStep {
    pub collection: Cone,
    pub twist: DivisorClass,
    pub added: DivisorClass,
    /// Homological position `|T|` of the added term.
    pub position: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Closure {
    pub classes: BTreeSet<DivisorClass>,
    pub trace: Vec<KoszulStep>,
    pub bounds: ClosureBounds,
}

struct KoszulContext<'a> {
    collections: Vec<Cone>,
    /// For each collection, subsets `T` as (size, class of `sum_{j in T} D_j`).
    subsets: Vec<Vec<(usize, DivisorClass)>>,
    bounds: ClosureBounds,
    set: BTreeSet<DivisorClass>,
    trace: Vec<KoszulStep>,
    queue: BinaryHeap<Reverse<(i64, DivisorClass, usize)>>,
    queued: HashSet<(DivisorClass, usize)>,
    _fan: &'a Fan,
}

impl<'a> KoszulContext<'a> {
    fn new(fan: &'a Fan, bounds: ClosureBounds) -> Result<Self> {
        let l = fan.num_rays();
        let collections = fan.primitive_collections();
        let mut subsets = Vec::with_capacity(collections.len());
        for p in &collections {
            let mut v = Vec::new();
            for size in 0..=p.len() {
                for t in combinations(p.rays(), size) {
                    let d = TorusDivisor::from_terms(l, &t.iter().map(|&j| (j, 1)).collect::<Vec<_>>());
                    v.push((size, class_of_coeffs(fan, d.coeffs())?));
                }
            }
            subsets.push(v);
        }
        Ok(Self {
            collections,
            subsets,
            bounds,
            set: BTreeSet::new(),
            trace: Vec::new(),
            queue: BinaryHeap::new(),
            queued: HashSet::new(),
            _fan: fan,
        })
    }

    fn enqueue_around(&mut self, c: &DivisorClass) {
        for p in 0..self.collections.len() {
            for k in 0..self.subsets[p].len() {
                let twist = c + &self.subsets[p][k].1;
                if twist.norm() > self.bounds.twist_bound {
                    continue;
                }
                if self.queued.insert((twist.clone(), p)) {
                    self.queue.push(Reverse((twist.norm(), twist, p)));
                }
            }
        }
    }

    fn insert(&mut self, c: DivisorClass) {
        if self.set.insert(c.clone()) {
            self.enqueue_around(&c);
        }
    }

    /// Applies the move for `(twist, p)` if exactly one class is unknown
    /// and it occupies a single homological position.
    fn apply(&mut self, twist: &DivisorClass, p: usize) -> Option<KoszulStep> {
        let mut unknown: Option<(DivisorClass, usize)> = None;
        for (size, shift) in &self.subsets[p] {
            let term = twist - shift;
            if self.set.contains(&term) {
                continue;
            }
            match &unknown {
                None => unknown = Some((term, *size)),
                Some((c, s)) if *c == term && *s == *size => {}
                Some(_) => return None,
            }
        }
        let (added, position) = unknown?;
        if added.norm() > self.bounds.coefficient_bound {
            return None;
        }
        Some(KoszulStep {
            collection: self.collections[p].clone(),
            twist: twist.clone(),
            added,
            position,
        })
    }

    fn run(&mut self, targets: Option<&BTreeSet<DivisorClass>>) {
        let covered = |set: &BTreeSet<DivisorClass>| targets.is_some_and(|t| t.is_subset(set));
        while !covered(&self.set) {
            let Some(Reverse((_, twist, p))) = self.queue.pop() else {
                break;
            };
            self.queued.remove(&(twist.clone(), p));
            if let Some(step) = self.apply(&twist, p) {
                let added = step.added.clone();
                self.trace.push(step);
                self.insert(added);
            }
        }
    }
}

/// Fixpoint of Koszul moves starting from `seed`, within `bounds`.
pub fn koszul_closure(fan: &Fan, seed: &[DivisorClass], bounds: ClosureBounds) -> Result<Closure> {
    koszul_closure_until(fan, seed, bounds, None)
}

/// As [`koszul_closure`], stopping early once every target is reached.
pub fn koszul_closure_until(
    fan: &Fan,
    seed: &[DivisorClass],
    bounds: ClosureBounds,
    targets: Option<&BTreeSet<DivisorClass>>,
) -> Result<Closure> {
    fan.require_smooth_complete()?;
    let mut ctx = KoszulContext::new(fan, bounds)?;
    for c in seed {
        ctx.insert(c.clone());
    }
    ctx.run(targets);
    Ok(Closure { classes: ctx.set, trace: ctx.trace, bounds })
}

/// Summand classes of `F_{m*} O(-i K)` for `i = 0..=n`, at a common `m`.
pub fn generator_targets(fan: &Fan) -> Result<(i64, BTreeSet<DivisorClass>)> {
    let l = fan.num_rays();
    let n = fan.dim() as i64;
    let mut m = 1;
    for i in 0..=n {
        m = m.max(stable_summands(fan, &TorusDivisor::anticanonical(l).scale(i))?.m_used);
    }
    let mut out = BTreeSet::new();
    for i in 0..=n {
        out.extend(summands(fan, &TorusDivisor::anticanonical(l).scale(i), m)?.class_set());
    }
    Ok((m, out))
}

/// Certified when the Koszul closure of `classes` contains every summand of
/// `F_{m*}` of `O, -K, ..., -nK`; otherwise inconclusive with the missing
/// classes. Never claims that a collection is not full.
pub fn fullness_certificate(fan: &Fan, classes: &[DivisorClass], bounds: ClosureBounds) -> Result<Fullness> {
    let (_, targets) = generator_targets(fan)?;
    fullness_against(fan, classes, bounds, &targets)
}

pub fn fullness_against(
    fan: &Fan,
    classes: &[DivisorClass],
    bounds: ClosureBounds,
    targets: &BTreeSet<DivisorClass>,
) -> Result<Fullness> {
    let closure = koszul_closure_until(fan, classes, bounds, Some(targets))?;
    let missing: Vec<DivisorClass> = targets.difference(&closure.classes).cloned().collect();
    Ok(if missing.is_empty() {
        Fullness::Certified {
            bounds,
            closure_size: closure.classes.len(),
            trace: closure.trace,
        }
    } else {
        Fullness::Inconclusive { bounds, missing }
    })
}

/// Pushes a class on the source of `blowdown` down to its target.
pub fn pushforward_class(blowdown: &Blowdown, c: &DivisorClass) -> Result<DivisorClass> {
    let d = pushforward(blowdown, &c.to_divisor())?;
    class_of_coeffs(&blowdown.target, d.coeffs())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PushforwardReport {
    pub source: String,
    pub target: String,
    pub exceptional: usize,
    pub center: Cone,
    pub pushed: Vec<DivisorClass>,
    pub target_summands: Vec<DivisorClass>,
    pub equal: bool,
}

/// Compares pushed-forward summand classes of `source` with the summand
/// classes of the blowdown target.
pub fn pushforward_collection_check(source: &Fan, blowdown: &Blowdown) -> Result<PushforwardReport> {
    let x = stable_summands(source, &TorusDivisor::zero(source.num_rays()))?;
    let y = stable_summands(&blowdown.target, &TorusDivisor::zero(blowdown.target.num_rays()))?;
    pushforward_report(source, blowdown, &x, &y)
}

pub fn pushforward_report(
    source: &Fan,
    blowdown: &Blowdown,
    x: &SummandSet,
    y: &SummandSet,
) -> Result<PushforwardReport> {
    let pushed: BTreeSet<DivisorClass> = x
        .classes
        .keys()
        .map(|c| pushforward_class(blowdown, c))
        .collect::<Result<_>>()?;
    let target_summands = y.class_set();
    Ok(PushforwardReport {
        source: source.name().to_string(),
        target: blowdown.target.name().to_string(),
        exceptional: blowdown.exceptional,
        center: blowdown.center.clone(),
        equal: pushed == target_summands,
        pushed: pushed.into_iter().collect(),
        target_summands: target_summands.into_iter().collect(),
    })
}

/// Coefficient comparison behind the blowdown compatibility of summands.
///
/// Working in a maximal cone shared by source and target, for every residue
/// the source summand agrees with the pullback of the target summand away
/// from the exceptional ray and exceeds it there by `a`. Returns the
/// smallest `a` over all residues; it is never negative.
pub fn blowdown_excess_minimum(source: &Fan, blowdown: &Blowdown, m: i64) -> Result<i64> {
    use crate::divisor::pullback;
    use crate::error::Error;
    use crate::frobenius::{q_vector, ResidueVector};

    let e = blowdown.exceptional;
    let y = &blowdown.target;
    let center = blowdown.target_center();
    let sigma_y = y
        .max_cones()
        .iter()
        .find(|c| !center.is_face_of(c))
        .ok_or_else(|| Error::InvalidArgument("every target cone contains the center".into()))?
        .clone();
    let sigma_x = Cone::new(sigma_y.rays().iter().map(|&r| if r >= e { r + 1 } else { r }).collect());
    let wx = TorusDivisor::zero(source.num_rays());
    let wy = TorusDivisor::zero(y.num_rays());
    let n = source.dim();
    let mut u = vec![0i64; n];
    let mut min_a = i64::MAX;
    loop {
        let res = ResidueVector::new(u.clone(), m)?;
        let qx = q_vector(source, &sigma_x, &res, &wx)?;
        let qy = q_vector(y, &sigma_y, &res, &wy)?;
        let back = pullback(blowdown, &TorusDivisor::new(qy))?;
        if let Some(i) = (0..qx.len()).find(|&i| i != e && qx[i] != back.coeffs()[i]) {
            return Err(Error::InvalidArgument(format!(
                "summands differ away from the exceptional ray at ray {i}"
            )));
        }
        min_a = min_a.min(qx[e] - back.coeffs()[e]);
        let mut i = 0;
        loop {
            if i == n {
                return Ok(min_a);
            }
            u[i] += 1;
            if u[i] < m {
                break;
            }
            u[i] = 0;
            i += 1;
        }
    }
}
