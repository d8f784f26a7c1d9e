//! Degrees of divisors on torus-invariant curves, read off the wall
//! relations, and the nef/ample/Fano tests built on them.

use serde::{Deserialize, Serialize};

use crate::divisor::TorusDivisor;
use crate::error::{Error, Result};
use crate::fan::{Fan, Wall};

/// Degree of `D` on the curve of `wall`.
pub fn curve_degree(wall: &Wall, d: &TorusDivisor) -> i64 {
    let a = d.coeffs();
    let ridge: i64 = wall.ridge.rays().iter().zip(&wall.alphas).map(|(&r, al)| al * a[r]).sum();
    a[wall.apex_a] + a[wall.apex_b] + ridge
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveDegreeProfile {
    /// Indexed like [`Fan::walls`].
    pub degrees: Vec<i64>,
}

impl CurveDegreeProfile {
    pub fn is_nef(&self) -> bool {
        self.degrees.iter().all(|&x| x >= 0)
    }

    pub fn is_ample(&self) -> bool {
        self.degrees.iter().all(|&x| x > 0)
    }
}

pub fn curve_degrees(fan: &Fan, d: &TorusDivisor) -> Result<CurveDegreeProfile> {
    if d.len() != fan.num_rays() {
        return Err(Error::LengthMismatch { expected: fan.num_rays(), got: d.len() });
    }
    Ok(CurveDegreeProfile {
        degrees: fan.walls()?.iter().map(|w| curve_degree(w, d)).collect(),
    })
}

pub fn is_nef(fan: &Fan, d: &TorusDivisor) -> Result<bool> {
    Ok(curve_degrees(fan, d)?.is_nef())
}

pub fn is_ample(fan: &Fan, d: &TorusDivisor) -> Result<bool> {
    Ok(curve_degrees(fan, d)?.is_ample())
}

pub fn is_fano(fan: &Fan) -> Result<bool> {
    is_ample(fan, &TorusDivisor::anticanonical(fan.num_rays()))
}

/// Degrees `(alpha_2, alpha_3)` of `N = O(alpha_2) + O(alpha_3)` for the
/// curve of a wall in a threefold.
pub fn normal_bundle_degrees(fan: &Fan, wall: &Wall) -> Result<(i64, i64)> {
    if fan.dim() != 3 || wall.alphas.len() != 2 {
        return Err(Error::InvalidArgument("normal bundle degrees need a threefold".into()));
    }
    Ok((wall.alphas[0], wall.alphas[1]))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightRow {
    pub ridge: Vec<usize>,
    pub apex_a: usize,
    pub apex_b: usize,
    pub alphas: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightTable {
    pub variety: String,
    pub rows: Vec<WeightRow>,
}

impl WeightTable {
    /// Tab-separated rows with 1-based ray labels.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("ridge\tapex_a\tapex_b\talphas\n");
        let join = |v: &[i64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        for r in &self.rows {
            let ridge: Vec<i64> = r.ridge.iter().map(|&x| x as i64 + 1).collect();
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                join(&ridge),
                r.apex_a + 1,
                r.apex_b + 1,
                join(&r.alphas)
            ));
        }
        out
    }

    /// Sorted multiset of all alphas, an isomorphism invariant.
    pub fn weight_multiset(&self) -> Vec<i64> {
        let mut v: Vec<i64> = self.rows.iter().flat_map(|r| r.alphas.iter().copied()).collect();
        v.sort_unstable();
        v
    }
}

pub fn double_weight_table(fan: &Fan) -> Result<WeightTable> {
    Ok(WeightTable {
        variety: fan.name().to_string(),
        rows: fan
            .walls()?
            .iter()
            .map(|w| WeightRow {
                ridge: w.ridge.rays().to_vec(),
                apex_a: w.apex_a,
                apex_b: w.apex_b,
                alphas: w.alphas.clone(),
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hirzebruch(d: i64) -> Fan {
        Fan::from_data(
            "F",
            &[&[1, 0], &[0, 1], &[-1, d], &[0, -1]],
            &[&[0, 1], &[1, 2], &[2, 3], &[0, 3]],
        )
        .unwrap()
    }

    #[test]
    fn self_intersection_of_negative_section() {
        for d in 0..4 {
            let f = hirzebruch(d);
            let w = f.walls().unwrap().iter().find(|w| w.ridge.rays() == [1]).unwrap().clone();
            assert_eq!(curve_degree(&w, &TorusDivisor::prime(4, 1)), -d);
            assert_eq!(curve_degree(&w, &TorusDivisor::prime(4, w.apex_a)), 1);
        }
    }

    #[test]
    fn fano_surfaces() {
        assert!(is_fano(&hirzebruch(0)).unwrap());
        assert!(is_fano(&hirzebruch(1)).unwrap());
        assert!(!is_fano(&hirzebruch(2)).unwrap());
        let zero = TorusDivisor::zero(4);
        assert!(is_nef(&hirzebruch(1), &zero).unwrap());
        assert!(!is_ample(&hirzebruch(1), &zero).unwrap());
    }

    #[test]
    fn weight_table_pattern() {
        let t = double_weight_table(&hirzebruch(3)).unwrap();
        assert_eq!(t.weight_multiset(), vec![-3, 0, 0, 3]);
        assert!(t.to_tsv().starts_with("ridge\t"));
    }
}
