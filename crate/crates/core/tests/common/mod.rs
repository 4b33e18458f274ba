//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reflecto::Dataset;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random dataset with coordinates in [-2, 2] and labels in [-1, 1].
pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Dataset {
    let x = (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let y = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    Dataset::new(x, y).unwrap()
}

pub fn app_b1_three() -> Dataset {
    Dataset::new(vec![vec![2.0, 0.0], vec![0.0, 0.0]], vec![2.0, 0.0]).unwrap()
}

pub fn app_b1_four() -> Dataset {
    Dataset::new(
        vec![vec![2.0, 0.0], vec![0.0, 0.0], vec![-1.0, 0.0]],
        vec![2.0, 0.0, -1.0],
    )
    .unwrap()
}

/// Solves `m x = b` by Gaussian elimination with partial pivoting; `None`
/// when a pivot is negligible.
pub fn solve_linear(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[p][col].abs() <= 1e-10 * scale {
            return None;
        }
        m.swap(col, p);
        b.swap(col, p);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for c in col..n {
                m[r][c] -= f * m[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / m[r][r];
    }
    Some(x)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Exact Lasso optimum by enumerating supports and sign patterns.
///
/// For a support `S` with signs `s`, stationarity on centered data reads
/// `G_S z_S = A_S^T y - beta s`; candidates whose solution has the assumed
/// signs are feasible points, and the optimum is among them.
pub fn lasso_oracle(columns: &[Vec<f64>], y: &[f64], beta: f64) -> f64 {
    let f = columns.len();
    assert!(f <= 12, "oracle is exponential in the column count");
    let ym = mean(y);
    let yc: Vec<f64> = y.iter().map(|v| v - ym).collect();
    let cc: Vec<Vec<f64>> = columns
        .iter()
        .map(|c| {
            let m = mean(c);
            c.iter().map(|v| v - m).collect()
        })
        .collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut best = 0.5 * dot(&yc, &yc);
    for mask in 1u32..(1 << f) {
        let support: Vec<usize> = (0..f).filter(|j| mask >> j & 1 == 1).collect();
        let k = support.len();
        let gram: Vec<Vec<f64>> = support
            .iter()
            .map(|&i| support.iter().map(|&j| dot(&cc[i], &cc[j])).collect())
            .collect();
        let aty: Vec<f64> = support.iter().map(|&i| dot(&cc[i], &yc)).collect();
        for signs in 0u32..(1 << k) {
            let s: Vec<f64> = (0..k).map(|i| if signs >> i & 1 == 1 { -1.0 } else { 1.0 }).collect();
            let rhs: Vec<f64> = aty.iter().zip(&s).map(|(a, si)| a - beta * si).collect();
            let Some(z) = solve_linear(gram.clone(), rhs) else {
                continue;
            };
            if z.iter().zip(&s).any(|(zi, si)| zi * si <= 0.0) {
                continue;
            }
            let mut r = yc.clone();
            for (&j, &zj) in support.iter().zip(&z) {
                for (ri, a) in r.iter_mut().zip(&cc[j]) {
                    *ri -= zj * a;
                }
            }
            let obj = 0.5 * dot(&r, &r) + beta * z.iter().map(|v| v.abs()).sum::<f64>();
            best = best.min(obj);
        }
    }
    best
}

/// Distance from `v` to the span of `basis`, by modified Gram-Schmidt.
pub fn height_over_span(basis: &[Vec<f64>], v: &[f64]) -> f64 {
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    for b in basis {
        let mut u = b.clone();
        for q in &ortho {
            let p: f64 = u.iter().zip(q).map(|(a, b)| a * b).sum();
            for (ui, qi) in u.iter_mut().zip(q) {
                *ui -= p * qi;
            }
        }
        let n = u.iter().map(|a| a * a).sum::<f64>().sqrt();
        ortho.push(u.iter().map(|a| a / n).collect());
    }
    let mut r = v.to_vec();
    for q in &ortho {
        let p: f64 = r.iter().zip(q).map(|(a, b)| a * b).sum();
        for (ri, qi) in r.iter_mut().zip(q) {
            *ri -= p * qi;
        }
    }
    r.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub fn gaussian_vectors(rng: &mut ChaCha8Rng, count: usize, d: usize) -> Vec<Vec<f64>> {
    use rand_distr::{Distribution, StandardNormal};
    (0..count)
        .map(|_| (0..d).map(|_| StandardNormal.sample(rng)).collect())
        .collect()
}
