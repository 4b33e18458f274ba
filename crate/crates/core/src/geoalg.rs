//! Determinant volumes, generalized cross products and the distances built
//! from them.
//!
//! The generalized cross product of `d - 1` vectors in `R^d` is the vector
//! `w` dual to the map `u -> det(u; v_1; ...; v_{d-1})`, i.e. the Hodge star
//! of their wedge. It is orthogonal to every input and its Euclidean norm is
//! the `(d - 1)`-volume of the parallelotope they span.

use crate::error::{check_dim, Error, Result};
use crate::scalar::{dot, norm_l1, norm_l2, Real};

/// Magnitudes below this (after scaling by input norms) count as exact zero.
pub const DEGENERACY_EPS: f64 = 1e-12;

fn validate_square<T: Real, V: AsRef<[T]>>(rows: &[V]) -> Result<usize> {
    let d = rows.len();
    if d == 0 {
        return Err(Error::InvalidInput("determinant of an empty matrix".into()));
    }
    for r in rows {
        check_dim(d, r.as_ref().len())?;
    }
    Ok(d)
}

/// Determinant of the `d x d` matrix whose rows are `rows`.
///
/// `|signed_volume|` is the volume of the parallelotope spanned by the rows.
pub fn signed_volume<T: Real, V: AsRef<[T]>>(rows: &[V]) -> Result<T> {
    let d = validate_square(rows)?;
    let r = |i: usize| rows[i].as_ref();
    Ok(match d {
        1 => r(0)[0],
        2 => det2(r(0)[0], r(0)[1], r(1)[0], r(1)[1]),
        3 => det3([r(0), r(1), r(2)]),
        4 => {
            // expansion along the first row
            let mut acc = T::zero();
            for col in 0..4 {
                let minor: Vec<[T; 3]> = (1..4)
                    .map(|i| {
                        let mut m = [T::zero(); 3];
                        let mut k = 0;
                        for (j, &v) in r(i).iter().enumerate() {
                            if j != col {
                                m[k] = v;
                                k += 1;
                            }
                        }
                        m
                    })
                    .collect();
                let c = det3([&minor[0], &minor[1], &minor[2]]);
                if col % 2 == 0 {
                    acc = acc + r(0)[col] * c;
                } else {
                    acc = acc - r(0)[col] * c;
                }
            }
            acc
        }
        _ => det_lu(rows),
    })
}

fn det2<T: Real>(a: T, b: T, c: T, d: T) -> T {
    a * d - b * c
}

fn det3<T: Real>(m: [&[T]; 3]) -> T {
    m[0][0] * det2(m[1][1], m[1][2], m[2][1], m[2][2])
        - m[0][1] * det2(m[1][0], m[1][2], m[2][0], m[2][2])
        + m[0][2] * det2(m[1][0], m[1][1], m[2][0], m[2][1])
}

/// LU factorisation with partial pivoting.
fn det_lu<T: Real, V: AsRef<[T]>>(rows: &[V]) -> T {
    let d = rows.len();
    let mut a: Vec<Vec<T>> = rows.iter().map(|r| r.as_ref().to_vec()).collect();
    let mut det = T::one();
    for k in 0..d {
        let pivot = (k..d)
            .max_by(|&i, &j| a[i][k].abs().partial_cmp(&a[j][k].abs()).unwrap())
            .unwrap();
        if a[pivot][k] == T::zero() {
            return T::zero();
        }
        if pivot != k {
            a.swap(pivot, k);
            det = -det;
        }
        let p = a[k][k];
        det = det * p;
        for i in (k + 1)..d {
            let f = a[i][k] / p;
            if f != T::zero() {
                for j in k..d {
                    let v = a[k][j];
                    a[i][j] = a[i][j] - f * v;
                }
            }
        }
    }
    det
}

/// Generalized cross product of `k = d - 1` vectors in `R^d`.
///
/// Returns `w` with `dot(u, w) = det(u; vs)` for every `u`. For `d = 1` the
/// tuple is empty and `w = e_1`.
pub fn generalized_cross<T: Real, V: AsRef<[T]>>(vs: &[V]) -> Result<Vec<T>> {
    let d = vs.len() + 1;
    for v in vs {
        check_dim(d, v.as_ref().len())?;
    }
    if d == 1 {
        return Ok(vec![T::one()]);
    }
    let mut w = Vec::with_capacity(d);
    let mut minor: Vec<Vec<T>> = vec![Vec::with_capacity(d - 1); d - 1];
    for col in 0..d {
        for (row, v) in minor.iter_mut().zip(vs) {
            row.clear();
            row.extend(
                v.as_ref()
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != col)
                    .map(|(_, &x)| x),
            );
        }
        let c = signed_volume(&minor)?;
        w.push(if col % 2 == 0 { c } else { -c });
    }
    Ok(w)
}

/// `||v_1 ^ ... ^ v_{d-1}||_2`, the `(d - 1)`-volume of the base parallelotope.
pub fn wedge_l2_norm<T: Real, V: AsRef<[T]>>(vs: &[V]) -> Result<T> {
    Ok(norm_l2(&generalized_cross(vs)?))
}

/// `||x||_2 / ||x||_1`, which lies in `[1/sqrt(d), 1]`.
pub fn sparsity_factor<T: Real>(x: &[T]) -> Result<T> {
    let l1 = norm_l1(x);
    if l1 == T::zero() {
        return Err(Error::InvalidInput("sparsity factor of the zero vector".into()));
    }
    Ok(norm_l2(x) / l1)
}

/// Euclidean distance from `x` to the hyperplane through `base` with normal `normal`.
pub fn dist_to_hyperplane<T: Real>(x: &[T], base: &[T], normal: &[T]) -> Result<T> {
    check_dim(x.len(), base.len())?;
    check_dim(x.len(), normal.len())?;
    let n2 = norm_l2(normal);
    if n2 == T::zero() {
        return Err(Error::InvalidInput("hyperplane normal is zero".into()));
    }
    let offset: T = x.iter().zip(base).zip(normal).map(|((&a, &b), &n)| (a - b) * n).sum();
    Ok(offset.abs() / n2)
}

/// Whether a cross product is numerically zero relative to the product of its
/// input norms.
pub fn is_degenerate<T: Real, V: AsRef<[T]>>(cross: &[T], inputs: &[V]) -> bool {
    let scale = inputs
        .iter()
        .fold(T::one(), |acc, v| acc * norm_l2(v.as_ref()));
    norm_l1(cross) <= T::lit(DEGENERACY_EPS) * scale
}

/// Cosine-normalised inner product `|w . v| / (||w|| ||v||)`; zero if either is zero.
pub fn normalized_dot<T: Real>(w: &[T], v: &[T]) -> T {
    let den = norm_l2(w) * norm_l2(v);
    if den == T::zero() {
        T::zero()
    } else {
        dot(w, v).abs() / den
    }
}
