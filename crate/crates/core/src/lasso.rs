//! Lasso with an unpenalised intercept, and minimum-l1-norm interpolation.
//!
//! `min_{z, xi} 0.5 ||A z + xi 1 - y||^2 + beta ||z||_1`
//!
//! The intercept is eliminated by centering the columns and labels, after
//! which cyclic coordinate descent with soft-thresholding solves for `z`.

use serde::{Deserialize, Serialize};

use crate::dict::Dictionary;
use crate::error::{check_dim, Error, Result};
use crate::scalar::{dot, mean, norm_l1, Real};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_SWEEPS: usize = 100_000;
pub const DEFAULT_BETA_FLOOR: f64 = 1e-7;

const FISTA_MAX_ITERS: usize = 20_000;
const POWER_ITERS: usize = 200;
/// Ratio between consecutive penalties on the warm-start path.
const PATH_FACTOR: f64 = 2.0;

/// Columns of `A` stored column-major, labels and regularisation weight.
#[derive(Clone, Debug, PartialEq)]
pub struct LassoProblem<T> {
    columns: Vec<Vec<T>>,
    y: Vec<T>,
    beta: T,
}

impl<T: Real> LassoProblem<T> {
    pub fn new(columns: Vec<Vec<T>>, y: Vec<T>, beta: T) -> Result<Self> {
        if !(beta > T::zero()) || !beta.is_finite() {
            return Err(Error::InvalidInput(format!("beta must be positive and finite, got {beta}")));
        }
        if y.is_empty() {
            return Err(Error::InvalidInput("empty label vector".into()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("labels".into()));
        }
        for (j, c) in columns.iter().enumerate() {
            check_dim(y.len(), c.len())?;
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("column {j}")));
            }
        }
        Ok(Self { columns, y, beta })
    }

    pub fn from_dictionary(dict: &Dictionary<T>, y: &[T], beta: T) -> Result<Self> {
        check_dim(dict.n, y.len())?;
        Self::new(dict.matrix(), y.to_vec(), beta)
    }

    pub fn columns(&self) -> &[Vec<T>] {
        &self.columns
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    fn with_beta(&self, beta: T) -> Self {
        Self {
            columns: self.columns.clone(),
            y: self.y.clone(),
            beta,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Stop once the largest coefficient change in a sweep and the KKT residual are both below this.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_sweeps: DEFAULT_MAX_SWEEPS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LassoSolution<T> {
    pub z: Vec<T>,
    pub xi: T,
    pub objective: T,
    pub iterations: usize,
    pub converged: bool,
    /// KKT residual for [`solve`]; the interpolation gap `||Az + xi 1 - y||_inf`
    /// for [`solve_min_norm`].
    pub kkt_residual: T,
    /// Objective after every sweep.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub history: Vec<T>,
}

/// `A z + xi 1`.
pub fn fit<T: Real>(columns: &[Vec<T>], z: &[T], xi: T, n: usize) -> Result<Vec<T>> {
    check_dim(columns.len(), z.len())?;
    let mut out = vec![xi; n];
    for (c, &zj) in columns.iter().zip(z) {
        check_dim(n, c.len())?;
        if zj != T::zero() {
            for (o, &a) in out.iter_mut().zip(c) {
                *o = *o + zj * a;
            }
        }
    }
    Ok(out)
}

/// `0.5 ||A z + xi 1 - y||^2 + beta ||z||_1`.
pub fn objective<T: Real>(columns: &[Vec<T>], z: &[T], xi: T, y: &[T], beta: T) -> Result<T> {
    let f = fit(columns, z, xi, y.len())?;
    let rss: T = f.iter().zip(y).map(|(&a, &b)| (a - b) * (a - b)).sum();
    Ok(T::lit(0.5) * rss + beta * norm_l1(z))
}

/// `max_j` of `(|A_j^T r| - beta)_+` over zero coefficients and
/// `|A_j^T r - beta sign(z_j)|` over non-zero ones, with `r = y - A z - xi 1`.
pub fn kkt_residual<T: Real>(columns: &[Vec<T>], z: &[T], xi: T, y: &[T], beta: T) -> Result<T> {
    let f = fit(columns, z, xi, y.len())?;
    let r: Vec<T> = y.iter().zip(&f).map(|(&a, &b)| a - b).collect();
    Ok(kkt_from_residual(columns, z, &r, beta))
}

fn kkt_from_residual<T: Real>(columns: &[Vec<T>], z: &[T], r: &[T], beta: T) -> T {
    columns.iter().zip(z).fold(T::zero(), |m, (c, &zj)| {
        let g = dot(c, r);
        let v = if zj == T::zero() {
            (g.abs() - beta).max(T::zero())
        } else {
            (g - beta * zj.signum()).abs()
        };
        m.max(v)
    })
}

/// Indices with `|z_j| > tol`, ascending.
pub fn active_set<T: Real>(z: &[T], tol: T) -> Vec<usize> {
    z.iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > tol)
        .map(|(i, _)| i)
        .collect()
}

fn soft_threshold<T: Real>(x: T, t: T) -> T {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        T::zero()
    }
}

/// Centered copy of the problem: the optimal intercept for any `z` is
/// `mean(y) - sum_j mean(A_j) z_j`.
struct Centered<T> {
    cols: Vec<Vec<T>>,
    col_means: Vec<T>,
    norms_sq: Vec<T>,
    yc: Vec<T>,
    y_mean: T,
}

impl<T: Real> Centered<T> {
    fn new(p: &LassoProblem<T>) -> Self {
        let y_mean = mean(&p.y);
        let yc = p.y.iter().map(|&v| v - y_mean).collect();
        let mut cols = Vec::with_capacity(p.columns.len());
        let mut col_means = Vec::with_capacity(p.columns.len());
        let mut norms_sq = Vec::with_capacity(p.columns.len());
        for c in &p.columns {
            let m = mean(c);
            let cc: Vec<T> = c.iter().map(|&v| v - m).collect();
            norms_sq.push(dot(&cc, &cc));
            cols.push(cc);
            col_means.push(m);
        }
        Self {
            cols,
            col_means,
            norms_sq,
            yc,
            y_mean,
        }
    }

    fn intercept(&self, z: &[T]) -> T {
        self.y_mean - dot(&self.col_means, z)
    }

    fn residual(&self, z: &[T]) -> Vec<T> {
        let mut r = self.yc.clone();
        for (c, &zj) in self.cols.iter().zip(z) {
            if zj != T::zero() {
                for (ri, &a) in r.iter_mut().zip(c) {
                    *ri = *ri - zj * a;
                }
            }
        }
        r
    }

    fn objective(&self, r: &[T], z: &[T], beta: T) -> T {
        T::lit(0.5) * dot(r, r) + beta * norm_l1(z)
    }

    /// Columns that are constant over the samples carry no information.
    fn usable(&self, j: usize) -> bool {
        self.norms_sq[j] > T::zero()
    }

    /// One coordinate-descent pass over `idx`; returns the largest change.
    fn sweep(&self, idx: &[usize], z: &mut [T], r: &mut [T], beta: T) -> T {
        let mut max_change = T::zero();
        for &j in idx {
            if !self.usable(j) {
                continue;
            }
            let c = &self.cols[j];
            let old = z[j];
            let rho = dot(c, r) + self.norms_sq[j] * old;
            let new = soft_threshold(rho, beta) / self.norms_sq[j];
            let delta = new - old;
            if delta != T::zero() {
                for (ri, &a) in r.iter_mut().zip(c) {
                    *ri = *ri - delta * a;
                }
                z[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        max_change
    }

    /// Largest eigenvalue of `Ac^T Ac` by power iteration, padded slightly.
    /// Falls back to the Frobenius bound when the start vector is annihilated.
    fn lipschitz(&self) -> T {
        let frobenius: T = self.norms_sq.iter().copied().sum();
        let mut v = vec![T::one(); self.cols.len()];
        let mut lambda = T::zero();
        for _ in 0..POWER_ITERS {
            let u = self.apply(&v);
            let w: Vec<T> = self.cols.iter().map(|c| dot(c, &u)).collect();
            let norm = dot(&w, &w).sqrt();
            if norm == T::zero() {
                return frobenius;
            }
            lambda = norm / dot(&v, &v).sqrt();
            v = w.iter().map(|&x| x / norm).collect();
        }
        (lambda * T::lit(1.01)).min(frobenius)
    }

    /// `Ac v`.
    fn apply(&self, v: &[T]) -> Vec<T> {
        let mut u = vec![T::zero(); self.yc.len()];
        for (c, &vj) in self.cols.iter().zip(v) {
            for (ui, &a) in u.iter_mut().zip(c) {
                *ui = *ui + vj * a;
            }
        }
        u
    }

    /// Accelerated proximal gradient from `z = 0`. Every step treats columns
    /// symmetrically, so identical columns end with identical weights.
    fn fista(&self, beta: T, tol: T) -> Vec<T> {
        let f = self.cols.len();
        let lip = self.lipschitz();
        let mut z = vec![T::zero(); f];
        if lip == T::zero() {
            return z;
        }
        let step = T::one() / lip;
        let mut yk = z.clone();
        let mut t = T::one();
        for _ in 0..FISTA_MAX_ITERS {
            let r = self.residual(&yk);
            let mut next = Vec::with_capacity(f);
            let mut change = T::zero();
            for (j, c) in self.cols.iter().enumerate() {
                let g = dot(c, &r);
                let v = soft_threshold(yk[j] + step * g, beta * step);
                change = change.max((v - z[j]).abs());
                next.push(v);
            }
            let t_next = (T::one() + (T::one() + T::lit(4.0) * t * t).sqrt()) / T::lit(2.0);
            let momentum = (t - T::one()) / t_next;
            yk = next
                .iter()
                .zip(&z)
                .map(|(&a, &b)| a + momentum * (a - b))
                .collect();
            z = next;
            t = t_next;
            if change <= tol {
                break;
            }
        }
        z
    }
}

/// Cyclic coordinate descent from `z = 0`.
///
/// Small penalties are reached along a geometric path of penalties starting
/// at the smallest one with an all-zero solution, each stage warm-started
/// from the last. Only the final stage is recorded in `history`; `iterations`
/// counts every sweep.
pub fn solve<T: Real>(problem: &LassoProblem<T>, opts: &SolverOptions) -> Result<LassoSolution<T>> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let centered = Centered::new(problem);
    let beta_max = centered
        .cols
        .iter()
        .fold(T::zero(), |m, c| m.max(dot(c, &centered.yc).abs()));
    let step = T::lit(PATH_FACTOR);
    let mut z = vec![T::zero(); problem.n_features()];
    let mut b = beta_max / step;
    let mut spent = 0;
    while b > problem.beta && spent < opts.max_sweeps {
        let stage_opts = SolverOptions { tol: opts.tol, max_sweeps: opts.max_sweeps - spent };
        let stage = run_cd(&problem.with_beta(b), &centered, &stage_opts, z)?;
        spent += stage.iterations;
        z = stage.z;
        b = b / step;
    }
    let rest = SolverOptions { tol: opts.tol, max_sweeps: opts.max_sweeps.saturating_sub(spent).max(1) };
    let mut sol = run_cd(problem, &centered, &rest, z)?;
    sol.iterations += spent;
    Ok(sol)
}

/// Cyclic coordinate descent warm-started at `z0`.
///
/// Sweeps alternate between the current active set and the full coordinate
/// list; the run stops once a full sweep moves no coefficient by more than
/// `tol` and the KKT residual is at most `tol`.
pub fn solve_from<T: Real>(problem: &LassoProblem<T>, opts: &SolverOptions, z0: &[T]) -> Result<LassoSolution<T>> {
    check_dim(problem.n_features(), z0.len())?;
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let centered = Centered::new(problem);
    run_cd(problem, &centered, opts, z0.to_vec())
}

fn run_cd<T: Real>(
    problem: &LassoProblem<T>,
    centered: &Centered<T>,
    opts: &SolverOptions,
    mut z: Vec<T>,
) -> Result<LassoSolution<T>> {
    let beta = problem.beta;
    let tol = T::lit(opts.tol);
    let all: Vec<usize> = (0..z.len()).collect();
    let mut r = centered.residual(&z);
    let mut history = Vec::new();
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < opts.max_sweeps {
        let change = centered.sweep(&all, &mut z, &mut r, beta);
        sweeps += 1;
        history.push(centered.objective(&r, &z, beta));
        if change <= tol {
            r = centered.residual(&z);
            if kkt_from_residual(&centered.cols, &z, &r, beta) <= tol {
                converged = true;
                break;
            }
            continue;
        }
        // settle the active coordinates before the next full pass
        let active = active_set(&z, T::zero());
        while sweeps < opts.max_sweeps {
            let change = centered.sweep(&active, &mut z, &mut r, beta);
            sweeps += 1;
            history.push(centered.objective(&r, &z, beta));
            if change <= tol {
                break;
            }
        }
        r = centered.residual(&z);
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("coordinate descent diverged".into()));
    }
    let xi = centered.intercept(&z);
    let objective = objective(&problem.columns, &z, xi, &problem.y, beta)?;
    let kkt = kkt_residual(&problem.columns, &z, xi, &problem.y, beta)?;
    Ok(LassoSolution {
        z,
        xi,
        objective,
        iterations: sweeps,
        converged,
        kkt_residual: kkt,
        history,
    })
}

/// Minimum-l1-norm interpolation through a decreasing `beta` sequence.
///
/// Starts a factor 10 below the smallest `beta` with an all-zero solution and
/// divides by 10 down to `beta_floor`, warm-starting each stage. The first
/// stage is seeded with accelerated proximal gradient, which spreads weight
/// evenly over interchangeable columns. The returned `kkt_residual` is the
/// interpolation gap; non-interpolable data shows up as a large gap.
pub fn solve_min_norm<T: Real>(
    columns: &[Vec<T>],
    y: &[T],
    beta_floor: T,
    opts: &SolverOptions,
) -> Result<LassoSolution<T>> {
    let base = LassoProblem::new(columns.to_vec(), y.to_vec(), beta_floor)?;
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let centered = Centered::new(&base);
    let beta_max = centered
        .cols
        .iter()
        .fold(T::zero(), |m, c| m.max(dot(c, &centered.yc).abs()));
    let ten = T::lit(10.0);
    let mut betas = Vec::new();
    let mut b = beta_max / ten;
    while b > beta_floor {
        betas.push(b);
        b = b / ten;
    }
    betas.push(beta_floor);

    let mut z = centered.fista(betas[0], T::lit(opts.tol));
    let mut total = 0;
    let mut history = Vec::new();
    let mut last = None;
    for &beta in &betas {
        let stage = base.with_beta(beta);
        let sol = run_cd(&stage, &centered, opts, z)?;
        total += sol.iterations;
        history.extend_from_slice(&sol.history);
        z = sol.z.clone();
        last = Some(sol);
    }
    let mut sol = last.expect("at least one stage");
    let f = fit(columns, &sol.z, sol.xi, y.len())?;
    sol.kkt_residual = f
        .iter()
        .zip(y)
        .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()));
    sol.iterations = total;
    sol.history = history;
    Ok(sol)
}

/// Export form of a solution: non-zero coefficients only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseSolution {
    pub n_features: usize,
    pub beta: f64,
    pub z: Vec<(usize, f64)>,
    pub xi: f64,
    pub objective: f64,
    pub active_set: Vec<usize>,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SparseSolution {
    pub fn from_solution<T: Real>(sol: &LassoSolution<T>, beta: T) -> Self {
        let z: Vec<(usize, f64)> = sol
            .z
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != T::zero())
            .map(|(i, v)| (i, v.to_f64_lossy()))
            .collect();
        Self {
            n_features: sol.z.len(),
            beta: beta.to_f64_lossy(),
            active_set: z.iter().map(|e| e.0).collect(),
            z,
            xi: sol.xi.to_f64_lossy(),
            objective: sol.objective.to_f64_lossy(),
            kkt_residual: sol.kkt_residual.to_f64_lossy(),
            iterations: sol.iterations,
            converged: sol.converged,
        }
    }

    pub fn to_solution(&self) -> Result<LassoSolution<f64>> {
        let mut z = vec![0.0; self.n_features];
        for &(i, v) in &self.z {
            let slot = z.get_mut(i).ok_or_else(|| {
                Error::InvalidInput(format!("coefficient index {i} out of range {}", self.n_features))
            })?;
            *slot = v;
        }
        Ok(LassoSolution {
            z,
            xi: self.xi,
            objective: self.objective,
            iterations: self.iterations,
            converged: self.converged,
            kkt_residual: self.kkt_residual,
            history: Vec::new(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
