//! Numerical checks of the structural properties of dictionaries, solutions
//! and reconstructed networks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{order_k_reflections, reflect, Dataset};
use crate::dict::{evaluate, full_dictionary, AnchorKind, BuilderKind, Dictionary, FeatureSpec};
use crate::error::{check_dim, Error, Result};
use crate::geoalg::{dist_to_hyperplane, normalized_dot};
use crate::lasso::{self, LassoProblem, SolverOptions};
use crate::network::{forward, reconstruct, training_objective, DEFAULT_PRUNE_TOL};
use crate::scalar::{dot, norm_l1, norm_l2, Real};

pub const FIT_TOL: f64 = 1e-8;
pub const OBJECTIVE_REL_TOL: f64 = 1e-6;
pub const DISTANCE_REL_TOL: f64 = 1e-8;
pub const ORTHOGONALITY_TOL: f64 = 1e-10;
pub const BREAKPOINT_GRID: usize = 4096;
pub const BREAKPOINT_TOL: f64 = 1e-6;
/// Breakpoints must lie within this fraction of the scanned range of a reflection.
pub const MEMBERSHIP_REL_TOL: f64 = 1e-6;
pub const RANGE_PADDING: f64 = 0.25;
const REFINE_STEPS: u32 = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    /// The identity or property being checked.
    pub statement: String,
}

impl Check {
    /// Passing iff `measured <= tolerance`.
    pub fn at_most(name: &str, measured: f64, tolerance: f64, statement: &str) -> Self {
        Self {
            name: name.to_string(),
            passed: measured <= tolerance,
            measured,
            tolerance,
            statement: statement.to_string(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn single(check: Check) -> Self {
        Self { checks: vec![check] }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Concatenates reports and orders the checks by name; equal names keep input order.
    pub fn merge(reports: impl IntoIterator<Item = VerificationReport>) -> Self {
        let mut checks: Vec<Check> = reports.into_iter().flat_map(|r| r.checks).collect();
        checks.sort_by(|a, b| a.name.cmp(&b.name));
        Self { checks }
    }

    pub fn summary(&self) -> String {
        self.checks
            .iter()
            .map(|c| {
                format!(
                    "{} {}: measured {:.3e}, tolerance {:.3e} ({})\n",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.measured,
                    c.tolerance,
                    c.statement
                )
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn relative_gap(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Builds the full depth-2 or depth-3 dictionary, solves the Lasso,
/// reconstructs the network and compares it with the Lasso fit and objective.
pub fn check_equivalence<T: Real>(ds: &Dataset<T>, depth: usize, beta: T, opts: &SolverOptions) -> Result<VerificationReport> {
    let dict = full_dictionary(ds, depth)?;
    let problem = LassoProblem::from_dictionary(&dict, ds.y(), beta)?;
    let sol = lasso::solve(&problem, opts)?;
    let net = reconstruct(&sol, &dict, T::lit(DEFAULT_PRUNE_TOL))?;
    let fitted = lasso::fit(problem.columns(), &sol.z, sol.xi, ds.n())?;
    let mut dev = 0.0f64;
    for (x, &f) in ds.x().iter().zip(&fitted) {
        dev = dev.max((forward(&net, x)? - f).abs().to_f64_lossy());
    }
    let lasso_obj = sol.objective.to_f64_lossy();
    let net_obj = training_objective(&net, ds, beta)?.to_f64_lossy();
    Ok(VerificationReport {
        checks: vec![
            Check::at_most(
                "equivalence.fit",
                dev,
                FIT_TOL,
                "reconstructed network reproduces A z + xi on the data",
            ),
            Check::at_most(
                "equivalence.objective",
                relative_gap(net_obj, lasso_obj),
                OBJECTIVE_REL_TOL,
                "network training objective equals the Lasso objective",
            ),
        ],
    })
}

/// Samples `samples` points uniformly in `[-half_width, half_width]^d` and
/// compares a 3-layer feature with `r(n) * min(dist(x, H), dist(x, H'))`.
///
/// `n` is the raw cross product, `H` the hyperplane through the pivot with
/// normal `n`, and `H'` its reflection about the anchor: through the reflected
/// pivot when the anchor is the leading sample, through the leading sample
/// when the anchor is the midpoint.
pub fn check_distance_formula<T: Real>(
    spec: &FeatureSpec<T>,
    samples: usize,
    half_width: f64,
    seed: u64,
) -> Result<VerificationReport> {
    spec.validate()?;
    let prov = &spec.provenance;
    let missing = |what: &str| Error::MissingProvenance(format!("feature lacks {what}"));
    if prov.builder != BuilderKind::AbsVal3 {
        return Err(missing("3-layer builder provenance"));
    }
    let anchor = prov.anchor.ok_or_else(|| missing("anchor kind"))?;
    let anchor_point = prov.anchor_point.as_ref().ok_or_else(|| missing("anchor point"))?;
    let lead = prov.lead_point.as_ref().ok_or_else(|| missing("leading sample"))?;
    let pivot = prov.pivot_point.as_ref().ok_or_else(|| missing("pivot sample"))?;
    let normal = prov.normal.as_ref().ok_or_else(|| missing("raw normal"))?;
    let d = spec.dim();
    check_dim(d, normal.len())?;
    let mirror = match anchor {
        AnchorKind::Sample => reflect(pivot, anchor_point)?,
        AnchorKind::Midpoint => lead.clone(),
    };
    let r = norm_l2(normal) / norm_l1(normal);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let x: Vec<T> = (0..d)
            .map(|_| T::lit(rng.random_range(-half_width..=half_width)))
            .collect();
        let f = evaluate(spec, &x)?;
        let dist = dist_to_hyperplane(&x, pivot, normal)?.min(dist_to_hyperplane(&x, &mirror, normal)?);
        let expect = r * dist;
        let dev = ((f - expect).abs() / expect.abs().max(T::one())).to_f64_lossy();
        worst = worst.max(dev);
    }
    Ok(VerificationReport::single(Check::at_most(
        "distance_formula",
        worst,
        DISTANCE_REL_TOL,
        "feature equals r(w) times the distance to the nearer of the two reflection planes",
    )))
}

/// Kinks of a function on `[lo, hi]`.
///
/// Slopes on a uniform grid of `grid_n` points are compared pairwise; a change
/// larger than `tol * max(1, |slope|)` flags a kink. Runs of flagged grid
/// points are one kink, located by bisection between the straight pieces on
/// either side down to width `(hi - lo) / grid_n / 2^10`, then snapped to the
/// intersection of those two lines when it falls inside the bracket.
pub fn detect_breakpoints_1d<T: Real, F: Fn(T) -> T>(f: F, lo: T, hi: T, grid_n: usize, tol: T) -> Vec<T> {
    if !(lo < hi) || grid_n < 3 {
        return Vec::new();
    }
    let h = (hi - lo) / T::from_usize_lossy(grid_n - 1);
    let ts: Vec<T> = (0..grid_n).map(|i| lo + h * T::from_usize_lossy(i)).collect();
    let vs: Vec<T> = ts.iter().map(|&t| f(t)).collect();
    let slopes: Vec<T> = vs.windows(2).map(|w| (w[1] - w[0]) / h).collect();
    let flagged: Vec<bool> = (0..grid_n)
        .map(|i| {
            if i == 0 || i == grid_n - 1 {
                return false;
            }
            let (a, b) = (slopes[i - 1], slopes[i]);
            (b - a).abs() > tol * T::one().max(a.abs()).max(b.abs())
        })
        .collect();
    let width = (hi - lo) / T::from_usize_lossy(grid_n) / T::lit(2f64.powi(REFINE_STEPS as i32));
    let mut out = Vec::new();
    let mut i = 1;
    while i < grid_n - 1 {
        if !flagged[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < grid_n - 1 && flagged[i + 1] {
            i += 1;
        }
        out.push(refine(&f, &ts, &vs, &slopes, start, i, width));
        i += 1;
    }
    out
}

fn refine<T: Real, F: Fn(T) -> T>(f: &F, ts: &[T], vs: &[T], slopes: &[T], first: usize, last: usize, width: T) -> T {
    let (sl, sr) = (slopes[first - 1], slopes[last]);
    let left = |t: T| vs[first] + sl * (t - ts[first]);
    let (mut a, mut b) = (ts[first], ts[last]);
    if first == last {
        // kink sits on the grid point itself
        a = ts[first - 1].max(a - width);
        b = ts[last + 1].min(b + width);
    }
    while b - a > width {
        let c = (a + b) / T::lit(2.0);
        let fc = f(c);
        if (fc - left(c)).abs() <= T::lit(1e-10) * T::one().max(fc.abs()) {
            a = c;
        } else {
            b = c;
        }
    }
    if sl != sr {
        let t = (vs[last] - vs[first] + sl * ts[first] - sr * ts[last]) / (sl - sr);
        if t >= a - width && t <= b + width {
            return t;
        }
    }
    (a + b) / T::lit(2.0)
}

/// Reflection order bound for a depth-`L` data feature.
pub fn reflection_order_bound(depth: usize) -> usize {
    match depth {
        0..=2 => 0,
        3 => 1,
        l => 2 * (l - 3),
    }
}

/// Largest distance from a detected breakpoint of `t -> f(t w/|w|)` to the
/// projected reflection closure, relative to the scanned range.
fn reflection_violation<T: Real>(spec: &FeatureSpec<T>, ds: &Dataset<T>, order: usize) -> Result<f64> {
    spec.validate()?;
    check_dim(ds.dim(), spec.dim())?;
    let wn = norm_l2(&spec.w);
    if wn == T::zero() {
        return Err(Error::InvalidInput("feature has a zero weight".into()));
    }
    let dir: Vec<T> = spec.w.iter().map(|&w| w / wn).collect();
    let projected: Vec<Vec<T>> = ds.x().iter().map(|x| vec![dot(x, &dir)]).collect();
    let closure: Vec<T> = order_k_reflections(&projected, order)?
        .into_iter()
        .map(|node| node.point[0])
        .collect();
    let (min, max) = closure
        .iter()
        .fold((closure[0], closure[0]), |(lo, hi), &p| (lo.min(p), hi.max(p)));
    let span = (max - min).max(T::one());
    let pad = T::lit(RANGE_PADDING) * span;
    let (lo, hi) = (min - pad, max + pad);
    let g = |t: T| {
        let x: Vec<T> = dir.iter().map(|&v| v * t).collect();
        evaluate(spec, &x).unwrap_or(T::nan())
    };
    let kinks = detect_breakpoints_1d(g, lo, hi, BREAKPOINT_GRID, T::lit(BREAKPOINT_TOL));
    let range = (hi - lo).to_f64_lossy();
    Ok(kinks
        .iter()
        .map(|&k| {
            closure
                .iter()
                .map(|&p| (k - p).abs().to_f64_lossy())
                .fold(f64::INFINITY, f64::min)
                / range
        })
        .fold(0.0, f64::max))
}

/// Breakpoints of a depth-`L` feature along its weight direction all lie in
/// the projected closure of reflections of order up to `0`, `1` or `2(L-3)`.
pub fn check_reflection_order<T: Real>(spec: &FeatureSpec<T>, ds: &Dataset<T>) -> Result<VerificationReport> {
    check_reflection_order_at(spec, ds, reflection_order_bound(spec.depth))
}

/// [`check_reflection_order`] against an explicit closure order.
pub fn check_reflection_order_at<T: Real>(spec: &FeatureSpec<T>, ds: &Dataset<T>, order: usize) -> Result<VerificationReport> {
    let v = reflection_violation(spec, ds, order)?;
    Ok(VerificationReport::single(Check::at_most(
        "reflection_order",
        v,
        MEMBERSHIP_REL_TOL,
        "breakpoints lie at projected reflections of bounded order",
    )))
}

/// [`check_reflection_order`] over every column, reporting the worst one.
pub fn check_reflection_order_dictionary<T: Real>(dict: &Dictionary<T>, ds: &Dataset<T>) -> Result<VerificationReport> {
    let order = reflection_order_bound(dict.depth);
    let worst = dict
        .columns
        .par_iter()
        .map(|c| reflection_violation(&c.spec, ds, order))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(VerificationReport::single(Check::at_most(
        "reflection_order",
        worst,
        MEMBERSHIP_REL_TOL,
        "breakpoints of every feature lie at projected reflections of bounded order",
    )))
}

/// Largest `|w.D| / (|w| |D|)` over all columns and recorded spanning differences.
pub fn check_orthogonality<T: Real>(dict: &Dictionary<T>) -> Result<VerificationReport> {
    let mut worst = 0.0f64;
    for (j, col) in dict.columns.iter().enumerate() {
        let prov = &col.spec.provenance;
        let needs = matches!(prov.builder, BuilderKind::AbsVal3 | BuilderKind::ReluNoBias);
        if needs && prov.spanning.len() + 1 != dict.d {
            return Err(Error::MissingProvenance(format!(
                "column {j} records {} spanning differences, expected {}",
                prov.spanning.len(),
                dict.d - 1
            )));
        }
        for delta in &prov.spanning {
            check_dim(dict.d, delta.len())?;
            worst = worst.max(normalized_dot(&col.spec.w, delta).abs().to_f64_lossy());
        }
    }
    Ok(VerificationReport::single(Check::at_most(
        "orthogonality",
        worst,
        ORTHOGONALITY_TOL,
        "first-layer weights are orthogonal to their spanning differences",
    )))
}
