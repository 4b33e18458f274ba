mod common;

use proptest::prelude::*;
use reflecto::dict::{build_3layer_absval, count_bound, full_dictionary, BuildOptions, Subsample};
use reflecto::lasso::{self, LassoProblem, SolverOptions};
use reflecto::network::{forward, objective_gradient, reconstruct, training_objective, NetworkParams, Unit};
use reflecto::verify::detect_breakpoints_1d;
use reflecto::Dataset;

fn matrix(n: usize, f: usize) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (
        prop::collection::vec(prop::collection::vec(-2.0..2.0f64, n), f),
        prop::collection::vec(-2.0..2.0f64, n),
    )
}

fn problem(max_n: usize, max_f: usize) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>, f64)> {
    (2..=max_n, 1..=max_f, -3.0..0.5f64)
        .prop_flat_map(|(n, f, lb)| (matrix(n, f), Just(10f64.powf(lb))))
        .prop_map(|((a, y), beta)| (a, y, beta))
}

fn dataset(max_n: usize, max_d: usize) -> impl Strategy<Value = Dataset> {
    (2..=max_n, 1..=max_d).prop_flat_map(|(n, d)| {
        (
            prop::collection::vec(prop::collection::vec(-2.0..2.0f64, d), n),
            prop::collection::vec(-1.0..1.0f64, n),
        )
            .prop_map(|(x, y)| Dataset::new(x, y).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sweeps_never_increase_the_objective((a, y, beta) in problem(20, 200)) {
        let sol = lasso::solve(&LassoProblem::new(a, y, beta).unwrap(), &SolverOptions::default()).unwrap();
        for w in sol.history.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0));
        }
    }

    #[test]
    fn converged_solutions_certify_kkt((a, y, beta) in problem(20, 200)) {
        let opts = SolverOptions::default();
        let sol = lasso::solve(&LassoProblem::new(a.clone(), y.clone(), beta).unwrap(), &opts).unwrap();
        prop_assert!(sol.converged, "no convergence after {} sweeps", sol.iterations);
        prop_assert!(sol.kkt_residual <= 10.0 * opts.tol);
        let recomputed = lasso::objective(&a, &sol.z, sol.xi, &y, beta).unwrap();
        prop_assert!((recomputed - sol.objective).abs() <= 1e-10);
    }

    #[test]
    fn solver_matches_support_enumeration((a, y, beta) in problem(8, 8)) {
        let oracle = common::lasso_oracle(&a, &y, beta);
        let sol = lasso::solve(&LassoProblem::new(a, y, beta).unwrap(), &SolverOptions::default()).unwrap();
        prop_assert!((sol.objective - oracle).abs() <= 1e-6 * oracle.abs().max(1e-12), "{} vs {oracle}", sol.objective);
    }

    #[test]
    fn duplicate_columns_leave_the_optimum_unchanged((a, y, beta) in problem(10, 12), pick in any::<prop::sample::Index>()) {
        let opts = SolverOptions::default();
        let base = lasso::solve(&LassoProblem::new(a.clone(), y.clone(), beta).unwrap(), &opts).unwrap();
        let mut dup = a.clone();
        dup.push(a[pick.index(a.len())].clone());
        let with = lasso::solve(&LassoProblem::new(dup, y, beta).unwrap(), &opts).unwrap();
        prop_assert!((base.objective - with.objective).abs() <= 1e-9 * base.objective.max(1e-12));
    }

    #[test]
    fn reconstruction_reproduces_the_lasso(ds in dataset(5, 3), three in any::<bool>(), large in any::<bool>()) {
        let depth = if three { 3 } else { 2 };
        let beta = if large { 1e-1 } else { 1e-3 };
        let dict = full_dictionary(&ds, depth).unwrap();
        let sol = lasso::solve(&LassoProblem::from_dictionary(&dict, ds.y(), beta).unwrap(), &SolverOptions::default()).unwrap();
        let net = reconstruct(&sol, &dict, 1e-10).unwrap();
        let fit = lasso::fit(&dict.matrix(), &sol.z, sol.xi, ds.n()).unwrap();
        for (x, f) in ds.x().iter().zip(&fit) {
            prop_assert!((forward(&net, x).unwrap() - f).abs() <= 1e-8);
        }
        let obj = training_objective(&net, &ds, beta).unwrap();
        prop_assert!((obj - sol.objective).abs() <= 1e-6 * sol.objective.abs());
    }

    #[test]
    fn two_layer_units_are_positively_homogeneous(
        w in prop::collection::vec(-2.0..2.0f64, 3),
        b in -2.0..2.0f64,
        x in prop::collection::vec(-3.0..3.0f64, 3),
        c in 0.01..10.0f64,
    ) {
        let unit = |s: f64| Unit { w1: w.iter().map(|v| v * s).collect(), inner_w: vec![], biases: vec![b * s], alpha: 1.3 };
        let one = NetworkParams::new(2, 3, vec![unit(1.0)], 0.0).unwrap();
        let scaled = NetworkParams::new(2, 3, vec![unit(c)], 0.0).unwrap();
        let (f1, fc) = (forward(&one, &x).unwrap(), forward(&scaled, &x).unwrap());
        prop_assert!((fc - c * f1).abs() <= 1e-12 * (1.0 + fc.abs()));
    }

    #[test]
    fn gradients_match_central_differences(theta in prop::collection::vec(-1.5..1.5f64, 2 * 6 + 1), beta in 0.01..1.0f64) {
        let ds = Dataset::new(vec![vec![0.4, -1.0], vec![1.2, 0.3], vec![-0.8, 0.9]], vec![0.5, -1.0, 1.0]).unwrap();
        let p = NetworkParams::unflatten(3, 2, 2, &theta).unwrap();
        // stay away from kinks, where the subgradient is not a derivative
        for x in ds.x() {
            for u in &p.units {
                let pre1 = x[0] * u.w1[0] + x[1] * u.w1[1] + u.biases[0];
                let pre2 = pre1.abs() * u.inner_w[0] + u.biases[1];
                prop_assume!(pre1.abs() > 1e-3 && pre2.abs() > 1e-3);
            }
        }
        prop_assume!(theta.iter().all(|v| v.abs() > 1e-3));
        let (_, g) = objective_gradient(&p, &ds, beta).unwrap();
        let h = 1e-6;
        for i in 0..theta.len() {
            let mut up = theta.clone();
            let mut dn = theta.clone();
            up[i] += h;
            dn[i] -= h;
            let fu = training_objective(&NetworkParams::unflatten(3, 2, 2, &up).unwrap(), &ds, beta).unwrap();
            let fd = training_objective(&NetworkParams::unflatten(3, 2, 2, &dn).unwrap(), &ds, beta).unwrap();
            let num = (fu - fd) / (2.0 * h);
            prop_assert!((num - g[i]).abs() <= 1e-4 * num.abs().max(1.0), "coord {i}: {num} vs {}", g[i]);
        }
    }

    #[test]
    fn detector_finds_separated_kinks(
        cells in prop::collection::vec(4usize..60, 1..6),
        jumps in prop::collection::vec(0.2..3.0f64, 6),
        flips in prop::collection::vec(any::<bool>(), 6),
        offsets in prop::collection::vec(0.0..1.0f64, 6),
    ) {
        let (lo, hi, grid) = (-5.0, 5.0, 1024usize);
        let h = (hi - lo) / (grid - 1) as f64;
        let mut kinks = Vec::new();
        let mut pos = 4usize;
        for (k, c) in cells.iter().enumerate() {
            pos += c;
            if pos + 5 >= grid {
                break;
            }
            kinks.push((lo + (pos as f64 + offsets[k]) * h, if flips[k] { -jumps[k] } else { jumps[k] }));
        }
        let f = |t: f64| 0.7 * t + kinks.iter().map(|(k, s)| s * (t - k).abs()).sum::<f64>();
        let found = detect_breakpoints_1d(f, lo, hi, grid, 1e-6);
        let width = (hi - lo) / grid as f64 / 1024.0;
        prop_assert_eq!(found.len(), kinks.len());
        for (a, (b, _)) in found.iter().zip(&kinks) {
            prop_assert!((a - b).abs() <= width, "{a} vs {b}");
        }
    }

    #[test]
    fn dictionaries_respect_the_count_bound(ds in dataset(4, 3)) {
        let dict = build_3layer_absval(&ds, &BuildOptions::default()).unwrap();
        let bound = count_bound(ds.n(), ds.dim()).unwrap();
        prop_assert!(dict.len() as u128 <= bound);
        prop_assert_eq!(dict.raw_candidates as u128, bound);
    }

    #[test]
    fn subsampling_is_seeded_and_a_subset(ds in dataset(3, 2), seed in any::<u64>(), fraction in 0.05..1.0f64) {
        let opts = BuildOptions { subsample: Some(Subsample { fraction, seed }) };
        let a = build_3layer_absval(&ds, &opts).unwrap();
        prop_assert_eq!(&a, &build_3layer_absval(&ds, &opts).unwrap());
        let full = build_3layer_absval(&ds, &BuildOptions::default()).unwrap();
        for col in &a.columns {
            prop_assert!(full.columns.iter().any(|c| c
                .values
                .iter()
                .zip(&col.values)
                .all(|(x, y)| (x - y).abs() <= 1e-9 * (1.0 + x.abs()))));
        }
    }
}
