//! Small exact integer and rational linear algebra.
//!
//! Matrices are row lists. Everything here is sized for fans of dimension
//! at most four or five, so clarity wins over asymptotics.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type IntMatrix = Vec<Vec<i64>>;

pub fn checked_dot(a: &[i64], b: &[i64]) -> Result<i64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).try_fold(0i64, |acc, (x, y)| {
        x.checked_mul(*y)
            .and_then(|p| acc.checked_add(p))
            .ok_or(Error::Overflow("dot product"))
    })
}

/// Floor division rounding towards negative infinity.
#[inline]
pub fn floor_div(a: i64, b: i64) -> i64 {
    Integer::div_floor(&a, &b)
}

pub fn gcd_all(v: &[i64]) -> i64 {
    v.iter().fold(0i64, |g, x| g.gcd(x))
}

/// Determinant by Bareiss elimination in `i128`.
pub fn determinant(rows: &[Vec<i64>]) -> Result<i64> {
    let n = rows.len();
    if n == 0 {
        return Ok(1);
    }
    let mut a: Vec<Vec<i128>> = rows
        .iter()
        .map(|r| {
            assert_eq!(r.len(), n, "determinant of a non-square matrix");
            r.iter().map(|&x| x as i128).collect()
        })
        .collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&i| a[i][k] != 0) {
                Some(i) => {
                    a.swap(k, i);
                    sign = -sign;
                }
                None => return Ok(0),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let t = a[i][j]
                    .checked_mul(a[k][k])
                    .and_then(|x| a[i][k].checked_mul(a[k][j]).and_then(|y| x.checked_sub(y)))
                    .ok_or(Error::Overflow("determinant"))?;
                a[i][j] = t / prev;
            }
            a[i][k] = 0;
        }
        prev = a[k][k];
    }
    (sign * a[n - 1][n - 1])
        .to_i64()
        .ok_or(Error::Overflow("determinant"))
}

fn to_rational_matrix(rows: &[Vec<i64>]) -> Vec<Vec<BigRational>> {
    rows.iter()
        .map(|r| r.iter().map(|&x| BigRational::from_integer(BigInt::from(x))).collect())
        .collect()
}

/// Gauss-Jordan on an augmented rational matrix; returns `None` when the
/// square part is singular.
fn gauss_jordan(mut a: Vec<Vec<BigRational>>, n: usize) -> Option<Vec<Vec<BigRational>>> {
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        let inv = a[col][col].recip();
        for x in a[col].iter_mut() {
            *x = &*x * &inv;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                let pivot_row = a[col].clone();
                for (x, p) in a[r].iter_mut().zip(pivot_row.iter()) {
                    *x = &*x - &f * p;
                }
            }
        }
    }
    Some(a)
}

/// Solves `M x = rhs` exactly for square nonsingular `M`.
pub fn solve_rational(rows: &[Vec<i64>], rhs: &[i64]) -> Option<Vec<BigRational>> {
    let n = rows.len();
    let mut a = to_rational_matrix(rows);
    for (r, b) in a.iter_mut().zip(rhs) {
        r.push(BigRational::from_integer(BigInt::from(*b)));
    }
    let a = gauss_jordan(a, n)?;
    Some(a.into_iter().map(|r| r[n].clone()).collect())
}

/// Coordinates of `v` in the basis given by `basis` (one vector per row).
pub fn coordinates_in_basis(basis: &[Vec<i64>], v: &[i64]) -> Option<Vec<BigRational>> {
    solve_rational(&transpose(basis), v)
}

pub fn transpose(rows: &[Vec<i64>]) -> IntMatrix {
    if rows.is_empty() {
        return Vec::new();
    }
    (0..rows[0].len())
        .map(|j| rows.iter().map(|r| r[j]).collect())
        .collect()
}

/// Integer inverse of a matrix with determinant ±1, or `None` otherwise.
pub fn unimodular_inverse(rows: &[Vec<i64>]) -> Result<Option<IntMatrix>> {
    let n = rows.len();
    if n == 0 {
        return Ok(Some(Vec::new()));
    }
    if determinant(rows)?.abs() != 1 {
        return Ok(None);
    }
    let mut a = to_rational_matrix(rows);
    for (i, r) in a.iter_mut().enumerate() {
        for j in 0..n {
            r.push(if i == j { BigRational::one() } else { BigRational::zero() });
        }
    }
    let a = gauss_jordan(a, n).ok_or(Error::Overflow("unimodular inverse"))?;
    a.into_iter()
        .map(|r| {
            r[n..]
                .iter()
                .map(|x| {
                    debug_assert!(x.is_integer());
                    x.to_integer().to_i64().ok_or(Error::Overflow("unimodular inverse"))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

/// `M v` for `M` given by rows.
pub fn mat_vec(rows: &[Vec<i64>], v: &[i64]) -> Result<Vec<i64>> {
    rows.iter().map(|r| checked_dot(r, v)).collect()
}

pub fn mat_mul(a: &[Vec<i64>], b: &[Vec<i64>]) -> Result<IntMatrix> {
    let bt = transpose(b);
    a.iter()
        .map(|r| bt.iter().map(|c| checked_dot(r, c)).collect())
        .collect()
}

/// Rank over the rationals, computed fraction-free in `i128` with each row
/// divided by its content after every elimination step.
pub fn rank(rows: &[Vec<i64>]) -> Result<usize> {
    let mut a: Vec<Vec<i128>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| x as i128).collect())
        .collect();
    let ncols = a.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for col in 0..ncols {
        let Some(p) = (rank..a.len()).find(|&r| a[r][col] != 0) else {
            continue;
        };
        a.swap(rank, p);
        let pivot_row = a[rank].clone();
        let pv = pivot_row[col];
        for row in a.iter_mut().skip(rank + 1) {
            let f = row[col];
            if f == 0 {
                continue;
            }
            let mut content = 0i128;
            for j in col..ncols {
                let t = row[j]
                    .checked_mul(pv)
                    .and_then(|x| f.checked_mul(pivot_row[j]).and_then(|y| x.checked_sub(y)))
                    .ok_or(Error::Overflow("rank"))?;
                row[j] = t;
                content = content.gcd(&t);
            }
            if content > 1 {
                for x in row[col..].iter_mut() {
                    *x /= content;
                }
            }
        }
        rank += 1;
    }
    Ok(rank)
}

/// Exact sign of a rational.
pub fn sign(x: &BigRational) -> i32 {
    if x.is_zero() {
        0
    } else if x.is_positive() {
        1
    } else {
        -1
    }
}
