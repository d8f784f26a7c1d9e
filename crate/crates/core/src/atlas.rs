//! Built-in varieties: projective spaces, Hirzebruch and del Pezzo
//! surfaces, the smooth toric Fano threefolds, a Fano fourfold and a flop.
//!
//! Threefolds without explicit ray data are produced by blowing down the
//! three maximal ones and labeled by isomorphism with reference
//! constructions, falling back to their blowdown targets.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fan::{face_fan, isomorphic, product, Cone, Fan, LatticeVector};
use crate::intersection::{double_weight_table, is_fano};

#[derive(Clone, Debug)]
pub struct VarietyEntry {
    pub id: String,
    pub fan: Fan,
    pub rho: usize,
    pub max_cones: usize,
    pub note: String,
}

impl VarietyEntry {
    fn new(id: &str, fan: Fan, note: &str) -> Self {
        let fan = fan.with_name(id);
        Self {
            id: id.to_string(),
            rho: fan.picard_rank(),
            max_cones: fan.max_cones().len(),
            fan,
            note: note.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtlasListing {
    pub id: String,
    pub dim: usize,
    pub rho: usize,
    pub max_cones: usize,
    pub fano: bool,
}

fn vecs(rays: &[&[i64]]) -> Vec<LatticeVector> {
    rays.iter().map(|r| LatticeVector::new(r.to_vec())).collect()
}

/// Complete 2-dimensional fan from rays listed in cyclic order.
fn cyclic_surface(name: &str, rays: &[&[i64]]) -> Result<Fan> {
    let l = rays.len();
    let cones = (0..l).map(|i| Cone::new(vec![i, (i + 1) % l])).collect();
    Fan::new(name, vecs(rays), cones, Some(vec![0, 1]))
}

pub fn projective_line() -> Fan {
    Fan::from_data("p1", &[&[1], &[-1]], &[&[0], &[1]]).expect("p1")
}

pub fn projective_space(n: usize) -> Result<Fan> {
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let mut rays: Vec<LatticeVector> = (0..n)
        .map(|i| {
            let mut v = vec![0; n];
            v[i] = 1;
            LatticeVector::new(v)
        })
        .collect();
    rays.push(LatticeVector::new(vec![-1; n]));
    let cones = (0..=n).map(|skip| Cone::new((0..=n).filter(|&i| i != skip).collect())).collect();
    Fan::new(format!("p{n}"), rays, cones, Some((0..n).collect()))
}

/// Rays `v1 = (1,0)`, `v2 = (0,1)`, `v3 = (-1,d)`, `v4 = (0,-1)`.
pub fn hirzebruch(d: i64) -> Result<Fan> {
    cyclic_surface(&format!("hirzebruch-{d}"), &[&[1, 0], &[0, 1], &[-1, d], &[0, -1]])
}

pub fn y2() -> Result<Fan> {
    cyclic_surface("y2", &[&[1, 0], &[1, 1], &[0, 1], &[-1, 0], &[-1, -1]])
}

pub fn y3() -> Result<Fan> {
    cyclic_surface("y3", &[&[1, 0], &[0, 1], &[-1, 1], &[-1, 0], &[0, -1], &[1, -1]])
}

fn fano3_8() -> Result<Fan> {
    face_fan(
        "fano3-8",
        vecs(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1], &[-1, 0, -1], &[1, -1, 0], &[-1, 0, 0]]),
        Some(vec![0, 1, 2]),
    )
}

fn fano3_11() -> Result<Fan> {
    face_fan(
        "fano3-11",
        vecs(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1], &[1, 0, -1], &[0, 0, -1], &[-1, -1, 2]]),
        Some(vec![0, 1, 2]),
    )
}

fn fano3_17() -> Result<Fan> {
    product(&projective_line(), &y3()?)
}

fn fano3_18() -> Result<Fan> {
    face_fan(
        "fano3-18",
        vecs(&[
            &[1, 0, 0],
            &[0, 1, 0],
            &[0, 0, 1],
            &[0, -1, 1],
            &[0, -1, 0],
            &[0, 0, -1],
            &[0, 1, -1],
            &[-1, 1, 0],
        ]),
        Some(vec![0, 1, 2]),
    )
}

/// Face fan of `+-e_i` and `+-(1,1,1,1)`; the base is `e_1..e_4`.
pub fn v4() -> Result<Fan> {
    let mut rays: Vec<Vec<i64>> = Vec::new();
    for sign in [1, -1] {
        for i in 0..4 {
            let mut v = vec![0; 4];
            v[i] = sign;
            rays.push(v);
        }
    }
    rays.push(vec![1; 4]);
    rays.push(vec![-1; 4]);
    face_fan("v4", rays.into_iter().map(LatticeVector::new).collect(), Some(vec![0, 1, 2, 3]))
}

/// Reference constructions used to label blowdown results.
fn reference_fano3() -> Result<Vec<(usize, Fan)>> {
    let p1 = projective_line();
    let bundle_over_p2 = |a: i64| {
        face_fan(
            "ref",
            vecs(&[&[1, 0, 0], &[0, 1, 0], &[-1, -1, a], &[0, 0, 1], &[0, 0, -1]]),
            None,
        )
    };
    Ok(vec![
        (1, projective_space(3)?),
        (2, product(&projective_space(2)?, &p1)?),
        (3, bundle_over_p2(1)?),
        (4, bundle_over_p2(2)?),
        (
            5,
            face_fan(
                "ref",
                vecs(&[&[0, 1, 0], &[0, 0, 1], &[0, -1, -1], &[1, 0, 0], &[-1, 1, 0]]),
                None,
            )?,
        ),
        (6, product(&product(&p1, &p1)?, &p1)?),
        (
            7,
            face_fan(
                "ref",
                vecs(&[&[1, 0, 0], &[-1, 0, 1], &[0, 1, 0], &[0, -1, 1], &[0, 0, 1], &[0, 0, -1]]),
                None,
            )?,
        ),
        (8, fano3_8()?),
        (9, product(&p1, &hirzebruch(1)?)?),
        (
            10,
            face_fan(
                "ref",
                vecs(&[&[1, 0, 1], &[0, 1, 1], &[-1, 1, 0], &[0, -1, 0], &[0, 0, 1], &[0, 0, -1]]),
                None,
            )?,
        ),
        (11, fano3_11()?),
        (13, product(&p1, &y2()?)?),
        (17, fano3_17()?),
        (18, fano3_18()?),
    ])
}

/// Fano blowdown targets of the threefolds without a reference
/// construction, read off the birational diagram.
const DIAGRAM_TARGETS: &[(usize, &[usize])] = &[(14, &[7, 9]), (15, &[8, 9, 10, 12]), (16, &[10])];

/// Blowdown edges `(source, target, point_center)` of the birational
/// diagram of the Fano threefolds.
pub const DIAGRAM_EDGES: &[(usize, usize, bool)] = &[
    (3, 1, true),
    (5, 1, false),
    (8, 5, false),
    (9, 2, false),
    (10, 3, false),
    (10, 5, false),
    (11, 3, false),
    (11, 4, false),
    (12, 2, false),
    (12, 3, false),
    (12, 5, true),
    (13, 6, false),
    (13, 9, false),
    (14, 7, false),
    (14, 9, false),
    (15, 8, false),
    (15, 9, false),
    (15, 10, false),
    (15, 12, false),
    (16, 10, false),
    (17, 13, false),
    (18, 14, false),
    (18, 15, false),
    (18, 16, false),
];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlowdownEdge {
    pub from: String,
    pub to: String,
    pub exceptional: usize,
    pub center: Cone,
    /// `"curve"` or `"point"`.
    pub center_kind: String,
}

#[derive(Clone, Debug)]
pub struct Enumeration {
    pub entries: Vec<VarietyEntry>,
    pub edges: Vec<BlowdownEdge>,
    /// Differences between computed edges and the diagram edges.
    pub discrepancies: Vec<String>,
    pub log: Vec<String>,
}

impl Enumeration {
    pub fn entry(&self, id: &str) -> Option<&VarietyEntry> {
        self.entries.iter().find(|e| e.id == id)
    }
}

fn invariant_key(fan: &Fan) -> Result<(usize, Vec<i64>)> {
    Ok((fan.picard_rank(), double_weight_table(fan)?.weight_multiset()))
}

fn find_class(classes: &[Fan], keys: &[(usize, Vec<i64>)], fan: &Fan) -> Result<Option<usize>> {
    let key = invariant_key(fan)?;
    for (i, c) in classes.iter().enumerate() {
        if keys[i] == key && isomorphic(c, fan)?.is_some() {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

/// Blowdown closure of the maximal Fano threefolds.
pub fn enumerate_fano3() -> Result<&'static Enumeration> {
    static CACHE: OnceLock<Result<Enumeration>> = OnceLock::new();
    CACHE.get_or_init(build_enumeration).as_ref().map_err(Clone::clone)
}

fn build_enumeration() -> Result<Enumeration> {
    let mut log = Vec::new();
    let mut classes: Vec<Fan> = Vec::new();
    let mut keys: Vec<(usize, Vec<i64>)> = Vec::new();
    let mut raw_edges: Vec<(usize, usize, usize, Cone)> = Vec::new();
    let mut queue: Vec<usize> = Vec::new();

    for root in [fano3_11()?, fano3_17()?, fano3_18()?] {
        if find_class(&classes, &keys, &root)?.is_none() {
            keys.push(invariant_key(&root)?);
            classes.push(root);
            queue.push(classes.len() - 1);
        }
    }
    let mut head = 0;
    while head < queue.len() {
        let src = queue[head];
        head += 1;
        let source = classes[src].clone();
        for bd in source.blowdowns()? {
            if !is_fano(&bd.target)? {
                log.push(format!("{}: blowdown of ray {} is not Fano", source.name(), bd.exceptional));
                continue;
            }
            let dst = match find_class(&classes, &keys, &bd.target)? {
                Some(i) => i,
                None => {
                    keys.push(invariant_key(&bd.target)?);
                    classes.push(bd.target.clone());
                    queue.push(classes.len() - 1);
                    classes.len() - 1
                }
            };
            raw_edges.push((src, dst, bd.exceptional, bd.center.clone()));
        }
    }

    // Label by isomorphism with the reference constructions.
    let mut labels: Vec<Option<usize>> = vec![None; classes.len()];
    for (label, reference) in reference_fano3()? {
        if !reference.validate().is_ok() {
            log.push(format!("reference ({label}) does not validate"));
            continue;
        }
        match find_class(&classes, &keys, &reference)? {
            Some(i) if labels[i].is_none() => labels[i] = Some(label),
            Some(i) => log.push(format!("reference ({label}) collides with ({})", labels[i].unwrap_or(0))),
            None => log.push(format!("reference ({label}) not reached by blowdowns")),
        }
    }
    let unlabeled_rho3: Vec<usize> =
        (0..classes.len()).filter(|&i| labels[i].is_none() && classes[i].picard_rank() == 3).collect();
    if let [only] = unlabeled_rho3[..] {
        labels[only] = Some(12);
    } else {
        log.push(format!("{} unlabeled classes of Picard rank 3", unlabeled_rho3.len()));
    }
    let targets_of = |i: usize, labels: &[Option<usize>]| -> BTreeSet<Option<usize>> {
        raw_edges.iter().filter(|e| e.0 == i).map(|e| labels[e.1]).collect()
    };
    let mut assigned = Vec::new();
    for (label, expected) in DIAGRAM_TARGETS {
        let want: BTreeSet<Option<usize>> = expected.iter().map(|&x| Some(x)).collect();
        let hits: Vec<usize> = (0..classes.len())
            .filter(|&i| labels[i].is_none() && targets_of(i, &labels) == want)
            .collect();
        if let [only] = hits[..] {
            assigned.push((only, *label));
        } else {
            log.push(format!("({label}) matched {} candidates by blowdown targets", hits.len()));
        }
    }
    for (i, label) in assigned {
        labels[i] = Some(label);
    }

    let mut order: Vec<usize> = (0..classes.len()).collect();
    let canon = |f: &Fan| -> Vec<Vec<i64>> {
        let mut r: Vec<Vec<i64>> = f.rays().iter().map(|v| v.to_vec()).collect();
        r.sort();
        r
    };
    order.sort_by(|&a, &b| {
        (keys[a].clone(), canon(&classes[a])).cmp(&(keys[b].clone(), canon(&classes[b])))
    });
    let mut unlabeled = 0;
    let mut ids = vec![String::new(); classes.len()];
    for &i in &order {
        ids[i] = match labels[i] {
            Some(l) => format!("fano3-{l}"),
            None => {
                unlabeled += 1;
                format!("unlabeled-{unlabeled}")
            }
        };
    }
    let entries: Vec<VarietyEntry> = order
        .iter()
        .map(|&i| VarietyEntry::new(&ids[i], classes[i].clone(), "blowdown closure of (11), (17), (18)"))
        .collect();
    let mut edges: Vec<BlowdownEdge> = raw_edges
        .iter()
        .map(|(s, d, e, c)| BlowdownEdge {
            from: ids[*s].clone(),
            to: ids[*d].clone(),
            exceptional: *e,
            center: c.clone(),
            center_kind: if c.len() == 2 { "curve".into() } else { "point".into() },
        })
        .collect();
    edges.sort_by(|a, b| (&a.from, &a.to, a.exceptional).cmp(&(&b.from, &b.to, b.exceptional)));

    let computed: BTreeSet<(usize, usize, bool)> = raw_edges
        .iter()
        .filter_map(|(s, d, _, c)| Some((labels[*s]?, labels[*d]?, c.len() == 3)))
        .collect();
    let expected: BTreeSet<(usize, usize, bool)> = DIAGRAM_EDGES.iter().copied().collect();
    let mut discrepancies = Vec::new();
    for (a, b, point) in expected.difference(&computed) {
        discrepancies.push(format!("diagram edge ({a}) -> ({b}) point={point} not found"));
    }
    for (a, b, point) in computed.difference(&expected) {
        discrepancies.push(format!("computed edge ({a}) -> ({b}) point={point} absent from the diagram"));
    }
    Ok(Enumeration { entries, edges, discrepancies, log })
}

/// The two blowdowns of ray `v_2` of (18), rebased to a common basis.
pub struct FlopPair {
    pub plus: VarietyEntry,
    pub minus: VarietyEntry,
    /// Coefficient vectors are transported unchanged between the sides.
    pub transport: Vec<usize>,
}

pub fn flop_pair() -> Result<FlopPair> {
    let x = fano3_18()?;
    let bds = x.blowdowns()?;
    let pick = |center: [usize; 2]| {
        bds.iter()
            .find(|b| b.exceptional == 1 && b.center.rays() == center)
            .map(|b| b.target.clone())
            .ok_or_else(|| Error::InvalidArgument(format!("no blowdown of v2 with center {center:?}")))
    };
    let plus = pick([0, 7])?;
    let minus = pick([2, 6])?;
    let shared: BTreeSet<&Cone> = plus.max_cones().iter().collect();
    let base = minus
        .max_cones()
        .iter()
        .filter(|c| shared.contains(c))
        .min()
        .ok_or_else(|| Error::InvalidArgument("flop sides share no maximal cone".into()))?
        .rays()
        .to_vec();
    let plus = plus.with_base_rays(base.clone())?;
    let minus = minus.with_base_rays(base)?;
    Ok(FlopPair {
        transport: (0..plus.num_rays()).collect(),
        plus: VarietyEntry::new("flop-plus", plus, "blowdown of D2 on (18) with center {v1, v8}"),
        minus: VarietyEntry::new("flop-minus", minus, "blowdown of D2 on (18) with center {v3, v7}"),
    })
}

/// Identifiers accepted by [`get`].
pub fn list_ids() -> Vec<String> {
    let mut ids: Vec<String> = ["p1", "p2", "p3"].iter().map(|s| s.to_string()).collect();
    ids.extend((0..=3).map(|d| format!("hirzebruch-{d}")));
    ids.extend(["y2", "y3"].iter().map(|s| s.to_string()));
    ids.extend((1..=18).map(|k| format!("fano3-{k}")));
    ids.extend(["v4", "flop-plus", "flop-minus"].iter().map(|s| s.to_string()));
    ids
}

pub fn list() -> Result<Vec<AtlasListing>> {
    list_ids()
        .into_iter()
        .map(|id| {
            let e = get(&id)?;
            Ok(AtlasListing {
                dim: e.fan.dim(),
                rho: e.rho,
                max_cones: e.max_cones,
                fano: is_fano(&e.fan)?,
                id,
            })
        })
        .collect()
}

pub fn get(id: &str) -> Result<VarietyEntry> {
    let unknown = || Error::UnknownVariety(id.to_string());
    let entry = match id {
        "p1" => VarietyEntry::new(id, projective_line(), "projective line"),
        "p2" => VarietyEntry::new(id, projective_space(2)?, "projective plane"),
        "p3" => VarietyEntry::new(id, projective_space(3)?, "projective space"),
        "y1" => VarietyEntry::new(id, hirzebruch(1)?, "blowup of the plane at one point"),
        "y2" => VarietyEntry::new(id, y2()?, "blowup of the plane at two torus-fixed points"),
        "y3" => VarietyEntry::new(id, y3()?, "blowup of the plane at three torus-fixed points"),
        "v4" => VarietyEntry::new(id, v4()?, "face fan of the rays +-e_i, +-(1,1,1,1)"),
        "fano3-8" => VarietyEntry::new(id, fano3_8()?, "explicit rays"),
        "fano3-11" => VarietyEntry::new(id, fano3_11()?, "explicit rays"),
        "fano3-17" => VarietyEntry::new(id, fano3_17()?, "product of p1 and y3"),
        "fano3-18" => VarietyEntry::new(id, fano3_18()?, "explicit rays"),
        "flop-plus" => flop_pair()?.plus,
        "flop-minus" => flop_pair()?.minus,
        _ => {
            if let Some(d) = id.strip_prefix("hirzebruch-") {
                let d: i64 = d.parse().map_err(|_| unknown())?;
                if d < 0 {
                    return Err(unknown());
                }
                VarietyEntry::new(id, hirzebruch(d)?, "Hirzebruch surface")
            } else if id.starts_with("fano3-") || id.starts_with("unlabeled-") {
                enumerate_fano3()?.entry(id).cloned().ok_or_else(unknown)?
            } else {
                return Err(unknown());
            }
        }
    };
    Ok(entry)
}

/// Labels of the enumerated classes keyed by id, with Picard rank.
pub fn enumeration_summary() -> Result<BTreeMap<String, usize>> {
    Ok(enumerate_fano3()?.entries.iter().map(|e| (e.id.clone(), e.rho)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_entries_validate() {
        for id in ["p1", "p2", "p3", "hirzebruch-0", "hirzebruch-3", "y2", "y3", "fano3-8", "fano3-11", "fano3-17", "fano3-18"] {
            let e = get(id).unwrap();
            assert!(e.fan.validate().is_ok(), "{id}: {:?}", e.fan.validate());
        }
    }

    #[test]
    fn fano11_rays_are_explicit() {
        let e = get("fano3-11").unwrap();
        let rays: Vec<Vec<i64>> = e.fan.rays().iter().map(|r| r.to_vec()).collect();
        assert_eq!(
            rays,
            vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1], vec![1, 0, -1], vec![0, 0, -1], vec![-1, -1, 2]]
        );
        assert_eq!(e.max_cones, 8);
    }

    #[test]
    fn hirzebruch0_is_product() {
        let h = get("hirzebruch-0").unwrap().fan;
        let p = product(&projective_line(), &projective_line()).unwrap();
        assert!(isomorphic(&h, &p).unwrap().is_some());
    }

    #[test]
    fn unknown_ids() {
        assert!(matches!(get("nope"), Err(Error::UnknownVariety(_))));
        assert!(get("hirzebruch--1").is_err());
        assert!(get("fano3-19").is_err());
    }

    #[test]
    fn references_validate_and_are_fano() {
        for (label, f) in reference_fano3().unwrap() {
            assert!(f.validate().is_ok(), "({label})");
            assert!(is_fano(&f).unwrap(), "({label})");
            assert_eq!(f.max_cones().len(), 2 * f.picard_rank() + 2, "({label})");
        }
    }
}
