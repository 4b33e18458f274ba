//! Deep narrow absolute-value networks.
//!
//! Unit `i` computes `| ... ||x.W1 + b1| w2 + b2| ... w_{L-1} + b_{L-1}|` with a
//! vector first-layer weight and scalar inner weights; the network output is
//! `sum_i alpha_i * unit_i(x) + xi`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::dict::{Activation, Dictionary};
use crate::error::{check_dim, Error, Result};
use crate::lasso::LassoSolution;
use crate::scalar::{dot, norm_l1, sign0, Real};

pub const DEFAULT_PRUNE_TOL: f64 = 1e-10;
pub const DEFAULT_LR: f64 = 5e-3;
pub const DEFAULT_WEIGHT_DECAY: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Unit<T> {
    pub w1: Vec<T>,
    pub inner_w: Vec<T>,
    pub biases: Vec<T>,
    pub alpha: T,
}

impl<T: Real> Unit<T> {
    /// Nested absolute value before the output weight.
    pub fn activation(&self, x: &[T]) -> T {
        let mut a = (dot(x, &self.w1) + self.biases[0]).abs();
        for (&w, &b) in self.inner_w.iter().zip(&self.biases[1..]) {
            a = (a * w + b).abs();
        }
        a
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams<T> {
    pub depth: usize,
    pub dim: usize,
    pub units: Vec<Unit<T>>,
    pub xi: T,
}

impl<T: Real> NetworkParams<T> {
    pub fn new(depth: usize, dim: usize, units: Vec<Unit<T>>, xi: T) -> Result<Self> {
        let p = Self { depth, dim, units, xi };
        p.validate()?;
        Ok(p)
    }

    /// Network that outputs `xi` everywhere.
    pub fn constant(depth: usize, dim: usize, xi: T) -> Result<Self> {
        Self::new(depth, dim, Vec::new(), xi)
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth < 2 {
            return Err(Error::InvalidInput(format!("network depth {} < 2", self.depth)));
        }
        for u in &self.units {
            check_dim(self.dim, u.w1.len())?;
            check_dim(self.depth - 2, u.inner_w.len())?;
            check_dim(self.depth - 1, u.biases.len())?;
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.units.len()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(s)?;
        p.validate()?;
        Ok(p)
    }

    /// Parameters as one vector: per unit `[w1, inner_w, biases, alpha]`, then `xi`.
    pub fn flatten(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.m() * unit_len(self.depth, self.dim) + 1);
        for u in &self.units {
            out.extend_from_slice(&u.w1);
            out.extend_from_slice(&u.inner_w);
            out.extend_from_slice(&u.biases);
            out.push(u.alpha);
        }
        out.push(self.xi);
        out
    }

    /// Inverse of [`flatten`](Self::flatten) for the same shape.
    pub fn unflatten(depth: usize, dim: usize, m: usize, flat: &[T]) -> Result<Self> {
        let k = unit_len(depth, dim);
        check_dim(m * k + 1, flat.len())?;
        let units = flat[..m * k]
            .chunks(k)
            .map(|c| Unit {
                w1: c[..dim].to_vec(),
                inner_w: c[dim..dim + depth - 2].to_vec(),
                biases: c[dim + depth - 2..k - 1].to_vec(),
                alpha: c[k - 1],
            })
            .collect();
        Self::new(depth, dim, units, flat[m * k])
    }
}

fn unit_len(depth: usize, dim: usize) -> usize {
    dim + (depth - 2) + (depth - 1) + 1
}

/// Network output at `x`.
pub fn forward<T: Real>(params: &NetworkParams<T>, x: &[T]) -> Result<T> {
    check_dim(params.dim, x.len())?;
    Ok(forward_unchecked(params, x))
}

fn forward_unchecked<T: Real>(params: &NetworkParams<T>, x: &[T]) -> T {
    params
        .units
        .iter()
        .fold(params.xi, |acc, u| acc + u.alpha * u.activation(x))
}

/// Weight penalty `(1/L) sum_i (|alpha_i|^L + ||W1_i||_1^L + sum_l |w_il|^L)`.
pub fn weight_penalty<T: Real>(params: &NetworkParams<T>) -> T {
    let l = T::from_usize_lossy(params.depth);
    let p = params.depth as i32;
    let total: T = params
        .units
        .iter()
        .map(|u| {
            u.alpha.abs().powi(p)
                + norm_l1(&u.w1).powi(p)
                + u.inner_w.iter().map(|w| w.abs().powi(p)).sum::<T>()
        })
        .sum();
    total / l
}

/// `0.5 ||f(X) - y||^2 + beta * weight_penalty`.
pub fn training_objective<T: Real>(params: &NetworkParams<T>, ds: &Dataset<T>, beta: T) -> Result<T> {
    check_dim(params.dim, ds.dim())?;
    let rss: T = ds
        .x()
        .iter()
        .zip(ds.y())
        .map(|(x, &y)| {
            let e = forward_unchecked(params, x) - y;
            e * e
        })
        .sum();
    Ok(T::lit(0.5) * rss + beta * weight_penalty(params))
}

/// Objective and its subgradient in [`NetworkParams::flatten`] order, with
/// the derivative of `|t|` taken as 0 at `t = 0`.
pub fn objective_gradient<T: Real>(params: &NetworkParams<T>, ds: &Dataset<T>, beta: T) -> Result<(T, Vec<T>)> {
    check_dim(params.dim, ds.dim())?;
    let (depth, dim) = (params.depth, params.dim);
    let k = unit_len(depth, dim);
    let m = params.m();
    let mut grad = vec![T::zero(); m * k + 1];
    let mut rss = T::zero();
    let mut pre = vec![T::zero(); depth - 1];
    let mut act = vec![T::zero(); depth - 1];
    for (x, &y) in ds.x().iter().zip(ds.y()) {
        let out = forward_unchecked(params, x);
        let r = out - y;
        rss = rss + r * r;
        grad[m * k] = grad[m * k] + r;
        for (i, u) in params.units.iter().enumerate() {
            let g = &mut grad[i * k..(i + 1) * k];
            pre[0] = dot(x, &u.w1) + u.biases[0];
            act[0] = pre[0].abs();
            for l in 1..depth - 1 {
                pre[l] = act[l - 1] * u.inner_w[l - 1] + u.biases[l];
                act[l] = pre[l].abs();
            }
            g[k - 1] = g[k - 1] + r * act[depth - 2];
            let mut up = r * u.alpha;
            for l in (1..depth - 1).rev() {
                let dp = up * sign0(pre[l]);
                g[dim + depth - 2 + l] = g[dim + depth - 2 + l] + dp;
                g[dim + l - 1] = g[dim + l - 1] + dp * act[l - 1];
                up = dp * u.inner_w[l - 1];
            }
            let dp = up * sign0(pre[0]);
            g[dim + depth - 2] = g[dim + depth - 2] + dp;
            for (gj, &xj) in g[..dim].iter_mut().zip(x) {
                *gj = *gj + dp * xj;
            }
        }
    }
    let p = depth as i32;
    for (i, u) in params.units.iter().enumerate() {
        let g = &mut grad[i * k..(i + 1) * k];
        let l1 = norm_l1(&u.w1);
        for (gj, &w) in g[..dim].iter_mut().zip(&u.w1) {
            *gj = *gj + beta * l1.powi(p - 1) * sign0(w);
        }
        for (l, &w) in u.inner_w.iter().enumerate() {
            g[dim + l] = g[dim + l] + beta * w.abs().powi(p - 1) * sign0(w);
        }
        g[k - 1] = g[k - 1] + beta * u.alpha.abs().powi(p - 1) * sign0(u.alpha);
    }
    Ok((T::lit(0.5) * rss + beta * weight_penalty(params), grad))
}

/// Network realising `sum_j z_j f_j(x) + xi` from a Lasso solution.
///
/// Every column with `|z_j| > prune_tol` becomes one unit. With
/// `gamma = |z_j|^(1/L)` the first-layer weight is `gamma w`, inner weights are
/// `gamma` times the feature's inner signs, the `l`-th bias is scaled by
/// `gamma^l` and `alpha = sign(z_j) gamma`, so the unit's penalty is `|z_j|`.
pub fn reconstruct<T: Real>(sol: &LassoSolution<T>, dict: &Dictionary<T>, prune_tol: T) -> Result<NetworkParams<T>> {
    check_dim(dict.len(), sol.z.len())?;
    let depth = dict.depth;
    let inv_l = T::one() / T::from_usize_lossy(depth);
    let mut units = Vec::new();
    for (col, &z) in dict.columns.iter().zip(&sol.z) {
        if z.abs() <= prune_tol {
            continue;
        }
        let spec = &col.spec;
        spec.validate()?;
        if spec.depth != depth {
            return Err(Error::InvalidInput(format!(
                "column of depth {} in a depth-{depth} dictionary",
                spec.depth
            )));
        }
        if spec.activation != Activation::Abs {
            return Err(Error::InvalidInput(
                "only absolute-value features can be reconstructed".into(),
            ));
        }
        check_dim(dict.d, spec.w.len())?;
        let gamma = z.abs().powf(inv_l);
        let mut pow = T::one();
        let biases = spec
            .bias_chain
            .iter()
            .map(|&b| {
                pow = pow * gamma;
                b * pow
            })
            .collect();
        units.push(Unit {
            w1: spec.w.iter().map(|&w| w * gamma).collect(),
            inner_w: spec.inner_signs.iter().map(|&s| s * gamma).collect(),
            biases,
            alpha: z.signum() * gamma,
        });
    }
    NetworkParams::new(depth, dict.d, units, sol.xi)
}

/// Network with a shared width-1 trunk and a final hidden layer of width `m`.
///
/// For `L = 2` the final layer reads `x` directly (weights of length `d`) and
/// the trunk is empty. For `L >= 3` the trunk is `t_1 = |x.w1 + b1|`,
/// `t_l = |t_{l-1} w_l + b_l|` for `l = 2..L-2`, and the final layer reads the
/// scalar `t_{L-2}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StandardParams<T> {
    pub depth: usize,
    pub dim: usize,
    pub w1: Vec<T>,
    pub b1: T,
    /// `(w_l, b_l)` for `l = 2..L-2`.
    pub trunk: Vec<(T, T)>,
    pub final_weights: Vec<Vec<T>>,
    pub final_biases: Vec<T>,
    pub alpha: Vec<T>,
    pub xi: T,
}

impl<T: Real> StandardParams<T> {
    pub fn validate(&self) -> Result<()> {
        if self.depth < 2 {
            return Err(Error::InvalidInput(format!("network depth {} < 2", self.depth)));
        }
        let m = self.alpha.len();
        check_dim(m, self.final_weights.len())?;
        check_dim(m, self.final_biases.len())?;
        let fan_in = if self.depth == 2 {
            check_dim(0, self.w1.len())?;
            self.dim
        } else {
            check_dim(self.dim, self.w1.len())?;
            1
        };
        check_dim(self.depth.saturating_sub(3), self.trunk.len())?;
        for w in &self.final_weights {
            check_dim(fan_in, w.len())?;
        }
        Ok(())
    }
}

pub fn forward_standard<T: Real>(params: &StandardParams<T>, x: &[T]) -> Result<T> {
    params.validate()?;
    check_dim(params.dim, x.len())?;
    let input: Vec<T> = if params.depth == 2 {
        x.to_vec()
    } else {
        let mut t = (dot(x, &params.w1) + params.b1).abs();
        for &(w, b) in &params.trunk {
            t = (t * w + b).abs();
        }
        vec![t]
    };
    Ok(params
        .final_weights
        .iter()
        .zip(&params.final_biases)
        .zip(&params.alpha)
        .fold(params.xi, |acc, ((w, &b), &a)| acc + a * (dot(&input, w) + b).abs()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub depth: usize,
    pub units: usize,
    pub beta: f64,
    pub lr: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(depth: usize, units: usize, beta: f64) -> Self {
        Self {
            depth,
            units,
            beta,
            lr: DEFAULT_LR,
            weight_decay: DEFAULT_WEIGHT_DECAY,
            epochs: 1000,
            seed: 0,
        }
    }
}

/// Seeded initialisation: every weight and bias is standard normal divided by
/// the square root of its layer's fan-in, and `xi = 0`.
pub fn init_params<T: Real>(depth: usize, dim: usize, m: usize, seed: u64) -> Result<NetworkParams<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |fan_in: usize| {
        let v: f64 = StandardNormal.sample(&mut rng);
        T::lit(v / (fan_in as f64).sqrt())
    };
    let units = (0..m)
        .map(|_| {
            let w1 = (0..dim).map(|_| draw(dim)).collect();
            let inner_w = (0..depth - 2).map(|_| draw(1)).collect();
            let biases = (0..depth - 1).map(|l| draw(if l == 0 { dim } else { 1 })).collect();
            let alpha = draw(m);
            Unit {
                w1,
                inner_w,
                biases,
                alpha,
            }
        })
        .collect();
    NetworkParams::new(depth, dim, units, T::zero())
}

/// Full-batch Adam on the training objective, with weight decay added to the
/// gradient. Units of `pre_init` replace the first random units and its `xi`
/// replaces the initial intercept.
pub fn train_baseline<T: Real>(
    ds: &Dataset<T>,
    cfg: &TrainConfig,
    pre_init: Option<&NetworkParams<T>>,
) -> Result<NetworkParams<T>> {
    if cfg.units == 0 {
        return Err(Error::InvalidInput("baseline needs at least one unit".into()));
    }
    if !(cfg.beta > 0.0) || !(cfg.lr >= 0.0) || !(cfg.weight_decay >= 0.0) {
        return Err(Error::InvalidInput("beta must be positive, lr and decay non-negative".into()));
    }
    let mut params = init_params(cfg.depth, ds.dim(), cfg.units, cfg.seed)?;
    if let Some(pre) = pre_init {
        if pre.depth != cfg.depth || pre.dim != ds.dim() || pre.m() > cfg.units {
            return Err(Error::InvalidInput(format!(
                "pre-initialisation has depth {}, dim {}, {} units; run has depth {}, dim {}, {} units",
                pre.depth,
                pre.dim,
                pre.m(),
                cfg.depth,
                ds.dim(),
                cfg.units
            )));
        }
        params.units[..pre.m()].clone_from_slice(&pre.units);
        params.xi = pre.xi;
    }
    let (depth, dim, m) = (params.depth, params.dim, params.m());
    let mut theta = params.flatten();
    let mut m1 = vec![T::zero(); theta.len()];
    let mut m2 = vec![T::zero(); theta.len()];
    let (b1, b2, eps) = (T::lit(0.9), T::lit(0.999), T::lit(1e-8));
    let (lr, decay, beta) = (T::lit(cfg.lr), T::lit(cfg.weight_decay), T::lit(cfg.beta));
    let (mut b1t, mut b2t) = (T::one(), T::one());
    for epoch in 0..cfg.epochs {
        let current = NetworkParams::unflatten(depth, dim, m, &theta)?;
        let (_, grad) = objective_gradient(&current, ds, beta)?;
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!("gradient at epoch {epoch}")));
        }
        b1t = b1t * b1;
        b2t = b2t * b2;
        for i in 0..theta.len() {
            let g = grad[i] + decay * theta[i];
            m1[i] = b1 * m1[i] + (T::one() - b1) * g;
            m2[i] = b2 * m2[i] + (T::one() - b2) * g * g;
            let mh = m1[i] / (T::one() - b1t);
            let vh = m2[i] / (T::one() - b2t);
            theta[i] = theta[i] - lr * mh / (vh.sqrt() + eps);
        }
    }
    NetworkParams::unflatten(depth, dim, m, &theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dict::{evaluate, BuildOptions};
    use crate::lasso::{solve, LassoProblem, SolverOptions};
    use approx::assert_relative_eq;

    fn unit(w1: Vec<f64>, inner_w: Vec<f64>, biases: Vec<f64>, alpha: f64) -> Unit<f64> {
        Unit {
            w1,
            inner_w,
            biases,
            alpha,
        }
    }

    #[test]
    fn forward_examples() {
        let p = NetworkParams::new(2, 1, vec![unit(vec![1.0], vec![], vec![0.0], 1.0)], 0.0).unwrap();
        assert_eq!(forward(&p, &[-3.0]).unwrap(), 3.0);
        let q = NetworkParams::new(3, 2, vec![unit(vec![1.0, 2.0], vec![1.0], vec![0.5, -1.0], 0.0)], 4.0).unwrap();
        assert_eq!(forward(&q, &[7.0, -2.0]).unwrap(), 4.0);
        assert!(forward(&q, &[1.0]).is_err());
    }

    #[test]
    fn shape_validation() {
        assert!(NetworkParams::new(3, 1, vec![unit(vec![1.0], vec![], vec![0.0, 0.0], 1.0)], 0.0).is_err());
        assert!(NetworkParams::new(1, 1, vec![], 0.0).is_err());
    }

    #[test]
    fn objective_examples() {
        let ds = Dataset::new(vec![vec![1.0], vec![2.0]], vec![3.0, 4.0]).unwrap();
        let zero = NetworkParams::new(2, 1, vec![unit(vec![0.0], vec![], vec![0.0], 0.0)], 0.0).unwrap();
        assert_eq!(training_objective(&zero, &ds, 0.3).unwrap(), 12.5);

        // feature vanishes on the data, so doubling alpha only moves the penalty
        let ds = Dataset::new(vec![vec![1.0]], vec![0.0]).unwrap();
        let a = NetworkParams::new(2, 1, vec![unit(vec![1.0], vec![], vec![-1.0], 1.5)], 0.0).unwrap();
        let mut b = a.clone();
        b.units[0].alpha = 3.0;
        let beta = 0.2;
        let diff = training_objective(&b, &ds, beta).unwrap() - training_objective(&a, &ds, beta).unwrap();
        assert_relative_eq!(diff, beta / 2.0 * (3.0f64.powi(2) - 1.5f64.powi(2)), epsilon = 1e-12);
    }

    #[test]
    fn flatten_round_trip() {
        let p = init_params::<f64>(4, 3, 2, 9).unwrap();
        let back = NetworkParams::unflatten(4, 3, 2, &p.flatten()).unwrap();
        assert_eq!(p, back);
        assert!(NetworkParams::<f64>::unflatten(4, 3, 2, &[0.0; 3]).is_err());
    }

    fn app3() -> Dataset<f64> {
        Dataset::new(vec![vec![2.0, 0.0], vec![0.0, 0.0]], vec![2.0, 0.0]).unwrap()
    }

    #[test]
    fn reconstruct_single_feature() {
        let ds = app3();
        let dict = crate::dict::build_3layer_absval(&ds, &BuildOptions::default()).unwrap();
        let j = dict.columns.iter().position(|c| c.values == vec![2.0, 0.0]).unwrap();
        for z in [8.0, -1.0] {
            let mut sol = solve(&LassoProblem::from_dictionary(&dict, ds.y(), 1.0).unwrap(), &SolverOptions::default()).unwrap();
            sol.z = vec![0.0; dict.len()];
            sol.z[j] = z;
            sol.xi = 0.25;
            let net = reconstruct(&sol, &dict, 1e-10).unwrap();
            assert_eq!(net.m(), 1);
            let gamma = f64::abs(z).powf(1.0 / 3.0);
            assert_relative_eq!(net.units[0].alpha, z.signum() * gamma, epsilon = 1e-12);
            for k in 0..100 {
                let x = [k as f64 * 0.37 - 15.0, (k as f64 * 1.3).sin() * 7.0];
                let expect = z * evaluate(&dict.columns[j].spec, &x).unwrap() + 0.25;
                assert_relative_eq!(forward(&net, &x).unwrap(), expect, epsilon = 1e-9, max_relative = 1e-12);
            }
            let lasso = crate::lasso::objective(&dict.matrix(), &sol.z, sol.xi, ds.y(), 0.1).unwrap();
            assert_relative_eq!(training_objective(&net, &ds, 0.1).unwrap(), lasso, max_relative = 1e-12);
        }
    }

    #[test]
    fn reconstruct_zero_is_constant() {
        let ds = app3();
        let dict = crate::dict::build_3layer_absval(&ds, &BuildOptions::default()).unwrap();
        let sol = LassoSolution {
            z: vec![0.0; dict.len()],
            xi: 1.25,
            objective: 0.0,
            iterations: 0,
            converged: true,
            kkt_residual: 0.0,
            history: vec![],
        };
        let net = reconstruct(&sol, &dict, 1e-10).unwrap();
        assert_eq!(net.m(), 0);
        assert_eq!(forward(&net, &[3.0, -1.0]).unwrap(), 1.25);
        let short = LassoSolution { z: vec![1.0], ..sol };
        assert!(reconstruct(&short, &dict, 1e-10).is_err());
    }

    #[test]
    fn standard_reduces_to_unit() {
        let s = StandardParams {
            depth: 4,
            dim: 2,
            w1: vec![0.5, -1.0],
            b1: 0.3,
            trunk: vec![(1.5, -0.2)],
            final_weights: vec![vec![-0.7]],
            final_biases: vec![0.4],
            alpha: vec![2.0],
            xi: -1.0,
        };
        let n = NetworkParams::new(
            4,
            2,
            vec![unit(vec![0.5, -1.0], vec![1.5, -0.7], vec![0.3, -0.2, 0.4], 2.0)],
            -1.0,
        )
        .unwrap();
        for x in [[0.0, 0.0], [1.0, 2.0], [-3.0, 0.5]] {
            assert_relative_eq!(forward_standard(&s, &x).unwrap(), forward(&n, &x).unwrap(), epsilon = 1e-14);
        }
        let flat = StandardParams {
            alpha: vec![0.0],
            ..s.clone()
        };
        assert_eq!(forward_standard(&flat, &[1.0, 1.0]).unwrap(), -1.0);
        let bad = StandardParams {
            final_weights: vec![vec![1.0, 1.0]],
            ..s
        };
        assert!(forward_standard(&bad, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn standard_two_layer() {
        let s = StandardParams {
            depth: 2,
            dim: 2,
            w1: vec![],
            b1: 0.0,
            trunk: vec![],
            final_weights: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            final_biases: vec![0.0, -1.0],
            alpha: vec![1.0, -2.0],
            xi: 0.5,
        };
        assert_eq!(forward_standard(&s, &[-2.0, 3.0]).unwrap(), 2.0 - 4.0 + 0.5);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let ds = Dataset::new(
            vec![vec![0.3, -1.2], vec![1.1, 0.4], vec![-0.7, 0.9]],
            vec![1.0, -0.5, 0.25],
        )
        .unwrap();
        for depth in 2..=4 {
            let p = init_params::<f64>(depth, 2, 3, depth as u64).unwrap();
            let (_, g) = objective_gradient(&p, &ds, 0.05).unwrap();
            let theta = p.flatten();
            let h = 1e-6;
            for i in 0..theta.len() {
                let mut up = theta.clone();
                let mut dn = theta.clone();
                up[i] += h;
                dn[i] -= h;
                let fu = training_objective(&NetworkParams::unflatten(depth, 2, 3, &up).unwrap(), &ds, 0.05).unwrap();
                let fd = training_objective(&NetworkParams::unflatten(depth, 2, 3, &dn).unwrap(), &ds, 0.05).unwrap();
                let fdg = (fu - fd) / (2.0 * h);
                assert!((fdg - g[i]).abs() <= 1e-4 * fdg.abs().max(1.0), "depth {depth} coord {i}: {fdg} vs {}", g[i]);
            }
        }
    }

    #[test]
    fn zero_lr_keeps_init() {
        let ds = app3();
        let mut cfg = TrainConfig::new(3, 2, 0.1);
        cfg.lr = 0.0;
        cfg.epochs = 5;
        let p = train_baseline(&ds, &cfg, None).unwrap();
        assert_eq!(p, init_params(3, 2, 2, cfg.seed).unwrap());
        cfg.epochs = 0;
        cfg.lr = 0.1;
        assert_eq!(train_baseline(&ds, &cfg, None).unwrap(), p);
    }

    #[test]
    fn training_is_seeded_and_descends() {
        let ds = app3();
        let mut cfg = TrainConfig::new(3, 3, 1e-3);
        cfg.epochs = 300;
        cfg.seed = 4;
        let a = train_baseline(&ds, &cfg, None).unwrap();
        let b = train_baseline(&ds, &cfg, None).unwrap();
        assert_eq!(a, b);
        let start = training_objective(&init_params(3, 2, 3, 4).unwrap(), &ds, 1e-3).unwrap();
        assert!(training_objective(&a, &ds, 1e-3).unwrap() < start);
    }

    #[test]
    fn non_finite_gradient_aborts() {
        let ds = Dataset::new(vec![vec![1e200]], vec![0.0]).unwrap();
        let cfg = TrainConfig::new(3, 1, 1.0);
        assert!(matches!(train_baseline(&ds, &cfg, None), Err(Error::NonFinite(_))));
    }

    #[test]
    fn json_round_trip() {
        let p = init_params::<f64>(3, 2, 2, 1).unwrap();
        assert_eq!(NetworkParams::from_json(&p.to_json().unwrap()).unwrap(), p);
    }
}
