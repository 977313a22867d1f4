//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.
//!
//! Pass criterion numbers as arguments to run a subset, for example
//! `cargo test --test acceptance -- 7 8`.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use ndarray::{Array1, Array2};
use num_rational::Ratio;
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestCaseError, TestRunner};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

use shrinklasso::analysis::{run_prostate, ProstateConfig};
use shrinklasso::lasso::{LassoConfig, LassoFit, LassoProblem};
use shrinklasso::model::{gram, standardize, Dataset};
use shrinklasso::prostate::bundled;
use shrinklasso::shrinkage::{shrink, stein_condition_value, stein_constant, stein_constant_exact, SteinInputs};
use shrinklasso::simulation::{
    c_from_r2, coefficients_from_alpha, generate_replication, replication_losses, run_simulation, LambdaRule, SimConfig,
};
use shrinklasso::{Estimator, ShrinkageVariant};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

fn normal_matrix(r: &mut StdRng, n: usize, p: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, p), |_| r.sample(StandardNormal))
}

fn normal_vector(r: &mut StdRng, n: usize) -> Array1<f64> {
    Array1::from_shape_fn(n, |_| r.sample(StandardNormal))
}

// ---------------------------------------------------------------------------
// Test-side oracles (plain loops, no library calls)

/// Orthonormal columns by classical Gram-Schmidt applied twice.
fn orthonormalize(x: &Array2<f64>) -> Array2<f64> {
    let (n, p) = x.dim();
    let mut q = x.clone();
    for j in 0..p {
        for _ in 0..2 {
            for k in 0..j {
                let dot: f64 = (0..n).map(|i| q[[i, k]] * q[[i, j]]).sum();
                for i in 0..n {
                    q[[i, j]] -= dot * q[[i, k]];
                }
            }
        }
        let norm = (0..n).map(|i| q[[i, j]] * q[[i, j]]).sum::<f64>().sqrt();
        for i in 0..n {
            q[[i, j]] /= norm;
        }
    }
    q
}

fn objective(x: &Array2<f64>, y: &Array1<f64>, b: &[f64], lambda: f64) -> f64 {
    let (n, p) = x.dim();
    let rss: f64 = (0..n)
        .map(|i| {
            let r = y[i] - (0..p).map(|j| x[[i, j]] * b[j]).sum::<f64>();
            r * r
        })
        .sum();
    rss + lambda * b.iter().map(|v| v.abs()).sum::<f64>()
}

/// Solves `a z = rhs` by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Vec<f64> {
    let m = rhs.len();
    for col in 0..m {
        let piv = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        rhs.swap(col, piv);
        for row in col + 1..m {
            let f = a[row][col] / a[col][col];
            for k in col..m {
                a[row][k] -= f * a[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut z = vec![0.0; m];
    for row in (0..m).rev() {
        let acc: f64 = (row + 1..m).map(|k| a[row][k] * z[k]).sum();
        z[row] = (rhs[row] - acc) / a[row][row];
    }
    z
}

/// Centers (and scales to unit sample sd) by explicit loops.
fn center_scale(x: &Array2<f64>, y: &Array1<f64>, scale: bool) -> (Vec<Vec<f64>>, Vec<f64>) {
    let (n, p) = x.dim();
    let ybar = y.iter().sum::<f64>() / n as f64;
    let yc: Vec<f64> = y.iter().map(|v| v - ybar).collect();
    let mut cols = vec![vec![0.0; n]; p];
    for (j, col) in cols.iter_mut().enumerate() {
        let mean = (0..n).map(|i| x[[i, j]]).sum::<f64>() / n as f64;
        let sd = if scale {
            ((0..n).map(|i| (x[[i, j]] - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            1.0
        };
        for i in 0..n {
            col[i] = (x[[i, j]] - mean) / sd;
        }
    }
    (cols, yc)
}

fn gram_brute(cols: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let p = cols.len();
    let n = cols[0].len();
    let mut g = vec![vec![0.0; p]; p];
    for j in 0..p {
        for k in 0..p {
            for i in 0..n {
                g[j][k] += cols[j][i] * cols[k][i];
            }
        }
    }
    g
}

fn quad_brute(g: &[Vec<f64>], b: &[f64]) -> f64 {
    let p = b.len();
    (0..p).map(|j| (0..p).map(|k| b[j] * g[j][k] * b[k]).sum::<f64>()).sum()
}

/// OLS residual variance `RSS / (n - p)` through the normal equations.
fn sigma2_brute(cols: &[Vec<f64>], yc: &[f64]) -> f64 {
    let (n, p) = (yc.len(), cols.len());
    let g = gram_brute(cols);
    let xty: Vec<f64> = cols.iter().map(|c| c.iter().zip(yc).map(|(a, b)| a * b).sum()).collect();
    let b = solve(g, xty);
    let rss: f64 = (0..n)
        .map(|i| {
            let r = yc[i] - (0..p).map(|j| cols[j][i] * b[j]).sum::<f64>();
            r * r
        })
        .sum();
    rss / (n - p) as f64
}

/// Correlated random design with column-specific offsets and scales.
fn random_dataset(r: &mut StdRng, n: usize, p: usize) -> Dataset<f64> {
    let z = normal_matrix(r, n, p);
    let shared = normal_vector(r, n);
    let rho: f64 = r.random_range(0.0..0.7);
    let mut x = Array2::zeros((n, p));
    for j in 0..p {
        let offset: f64 = r.random_range(-3.0..3.0);
        let scale: f64 = r.random_range(0.3..4.0);
        for i in 0..n {
            x[[i, j]] = offset + scale * (rho * shared[i] + (1.0 - rho * rho).sqrt() * z[[i, j]]);
        }
    }
    let beta = Array1::from_shape_fn(p, |j| if j % 2 == 0 { r.random_range(-2.0..2.0) } else { 0.0 });
    let noise = normal_vector(r, n) * r.random_range(0.3..2.0);
    let y = x.dot(&beta) + noise;
    Dataset::unnamed(x, y).unwrap()
}

// ---------------------------------------------------------------------------

fn criterion_1() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..100u64 {
        let mut r = rng(1_000 + i);
        let p = 1 + (i as usize % 6);
        let n = p + r.random_range(3..30);
        let x = orthonormalize(&normal_matrix(&mut r, n, p));
        let y = normal_vector(&mut r, n) * 2.0 + x.dot(&normal_vector(&mut r, p));
        let xty: Vec<f64> = (0..p).map(|j| (0..n).map(|k| x[[k, j]] * y[k]).sum()).collect();
        let zmax = xty.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let lambda = r.random_range(0.0..1.2) * 2.0 * zmax;
        let fit = LassoProblem::new(x.view(), y.view())
            .unwrap()
            .fit(&LassoConfig::default().with_lambda(lambda), None)
            .unwrap();
        for j in 0..p {
            let closed = xty[j].signum() * (xty[j].abs() - lambda / 2.0).max(0.0);
            let err = (fit.slopes[j] - closed).abs();
            worst = worst.max(err);
            ensure(err <= 1e-8, || format!("orthonormal problem {i}: coefficient {j} off by {err:e}"))?;
        }
    }

    let mut worst_gain = f64::NEG_INFINITY;
    for i in 0..50u64 {
        let mut r = rng(2_000 + i);
        let p = 1 + (i as usize % 2);
        let n = r.random_range(4..25);
        let mut x = normal_matrix(&mut r, n, p);
        if p == 2 {
            let rho: f64 = r.random_range(-0.9..0.9);
            for k in 0..n {
                x[[k, 1]] = rho * x[[k, 0]] + (1.0 - rho * rho).sqrt() * x[[k, 1]];
            }
        }
        let y = normal_vector(&mut r, n) + x.dot(&normal_vector(&mut r, p));
        let problem = LassoProblem::new(x.view(), y.view()).unwrap();
        let lambda = r.random_range(0.0..1.0) * problem.lambda_max();
        let fit = problem.fit(&LassoConfig::default().with_lambda(lambda), None).unwrap();
        let solver = objective(&x, &y, fit.slopes.as_slice().unwrap(), lambda);

        let radius = 2.0 * fit.slopes.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let axis: Vec<f64> = (0..201).map(|k| fit.slopes[0] - radius + radius * k as f64 / 100.0).collect();
        let axis2: Vec<f64> = if p == 2 {
            (0..201).map(|k| fit.slopes[1] - radius + radius * k as f64 / 100.0).collect()
        } else {
            vec![f64::NAN]
        };
        for &b0 in &axis {
            for &b1 in &axis2 {
                let b = if p == 2 { vec![b0, b1] } else { vec![b0] };
                let gain = solver - objective(&x, &y, &b, lambda);
                worst_gain = worst_gain.max(gain);
                ensure(gain <= 1e-6, || format!("grid problem {i}: point {b:?} beats solver by {gain:e}"))?;
            }
        }
    }
    Ok(format!(
        "max closed-form error {worst:.1e}; best grid improvement over solver {worst_gain:.1e}"
    ))
}

fn criterion_2() -> Outcome {
    let exact = stein_constant_exact(50, 10).map_err(|e| e.to_string())?;
    ensure(exact == Ratio::new(320, 42), || format!("stein_constant_exact(50, 10) = {exact}"))?;
    let float = stein_constant::<f64>(50, 10).map_err(|e| e.to_string())?;
    ensure(float == 320.0 / 42.0, || format!("stein_constant(50, 10) = {float}"))?;

    let mut worst = 0.0f64;
    for i in 0..100u64 {
        let mut r = rng(3_000 + i);
        let p = r.random_range(3..9);
        let n = p + r.random_range(5..50);
        let d = random_dataset(&mut r, n, p);
        let scale = i % 2 == 0;
        let sd = standardize(&d, scale).unwrap();
        let problem = LassoProblem::from_standardized(&sd);
        let fit = problem
            .fit(&LassoConfig::default().with_lambda(r.random_range(0.0..0.8) * problem.lambda_max()), None)
            .unwrap();
        let w = SteinInputs::from_fit(&sd, &fit).map_err(|e| e.to_string())?.w;

        let x = d.x().to_owned();
        let y = d.y().to_owned();
        let (cols, yc) = center_scale(&x, &y, scale);
        let g = gram_brute(&cols);
        let brute = quad_brute(&g, fit.slopes.as_slice().unwrap()) / sigma2_brute(&cols, &yc);
        let err = (w - brute).abs();
        worst = worst.max(err);
        ensure(err <= 1e-10, || format!("instance {i}: W_n = {w}, brute force = {brute}"))?;
    }
    Ok(format!("a(50,10) = {exact}; max |W_n - brute force| = {worst:.1e} over 100 instances"))
}

fn check_algebra(fit: &LassoFit<f64>, inputs: &SteinInputs<f64>) -> Result<(), TestCaseError> {
    let sl = shrink(fit, ShrinkageVariant::Sl, inputs);
    let prsl = shrink(fit, ShrinkageVariant::Prsl, inputs);
    let sl2 = shrink(fit, ShrinkageVariant::Sl2, inputs);
    if inputs.w >= inputs.a {
        prop_assert_eq!(&prsl.slopes, &sl.slopes);
    } else {
        prop_assert!(prsl.slopes.iter().all(|v| *v == 0.0), "PRSL nonzero with W < a");
    }
    if inputs.w > 0.0 {
        prop_assert!(sl.factor < sl2.factor, "SL factor {} >= SL2 factor {}", sl.factor, sl2.factor);
        prop_assert!(sl2.factor < 1.0, "SL2 factor {} >= 1", sl2.factor);
    }
    for v in ShrinkageVariant::ALL {
        let s = shrink(fit, v, inputs);
        for (j, (&b, &t)) in fit.slopes.iter().zip(&s.slopes).enumerate() {
            if b == 0.0 {
                prop_assert!(t == 0.0, "{} moved zero coefficient {}", v, j);
            }
        }
    }
    Ok(())
}

fn criterion_3() -> Outcome {
    let cases = 600;
    let mut runner = TestRunner::new(PropConfig {
        cases,
        failure_persistence: None,
        ..PropConfig::default()
    });
    let counts = std::cell::Cell::new((0usize, 0usize));
    runner
        .run(&(any::<u64>(), 3usize..10, 1usize..60, 0.0f64..1.05), |(seed, p, extra, frac)| {
            let mut r = rng(seed);
            let d = random_dataset(&mut r, p + extra, p);
            let sd = standardize(&d, seed % 2 == 0).unwrap();
            let problem = LassoProblem::from_standardized(&sd);
            let fit = problem
                .fit(&LassoConfig::default().with_lambda(frac * problem.lambda_max()), None)
                .unwrap();
            let inputs = SteinInputs::from_fit(&sd, &fit);
            // exact fits (n - 1 = p after centering) have no residual variance
            prop_assume!(inputs.is_ok());
            let inputs = inputs.unwrap();
            let (lo, hi) = counts.get();
            counts.set(if inputs.w < inputs.a { (lo + 1, hi) } else { (lo, hi + 1) });
            check_algebra(&fit, &inputs)
        })
        .map_err(|e| format!("fitted case: {e}"))?;

    let mut runner = TestRunner::new(PropConfig {
        cases,
        failure_persistence: None,
        ..PropConfig::default()
    });
    runner
        .run(
            &(
                prop::collection::vec(prop_oneof![Just(0.0), -5.0f64..5.0], 3..12),
                0.01f64..40.0,
                prop_oneof![Just(0.0), 0.0f64..2.0, 0.0f64..200.0],
            ),
            |(slopes, a, w)| {
                let p = slopes.len();
                let fit = LassoFit {
                    slopes: Array1::from(slopes),
                    lambda: 1.0,
                    sweeps_used: 1,
                    converged: true,
                    objective: 0.0,
                };
                let inputs = SteinInputs {
                    a,
                    w,
                    sigma2: 1.0,
                    n: p + 10,
                    p,
                    rank_deficient: false,
                };
                check_algebra(&fit, &inputs)
            },
        )
        .map_err(|e| format!("synthetic case: {e}"))?;
    let (lo, hi) = counts.get();
    Ok(format!(
        "{cases} fitted cases ({lo} with W < a, {hi} with W >= a) and {cases} synthetic cases"
    ))
}

fn criterion_4() -> Outcome {
    let (n, p, reps) = (50usize, 10usize, 2000u64);
    let dense = coefficients_from_alpha(p, 0.1, c_from_r2(0.3).unwrap());
    let mut sparse = Array1::zeros(p);
    sparse[0] = dense[0];
    sparse[1] = dense[1];
    let configs = [("zero", Array1::zeros(p)), ("dense", dense), ("sparse", sparse)];
    let estimators = [Estimator::Lasso, Estimator::Shrunk(ShrinkageVariant::Sl), Estimator::Shrunk(ShrinkageVariant::Prsl)];
    let rule = LambdaRule::default();
    let mut lines = Vec::new();
    for (k, (label, beta)) in configs.iter().enumerate() {
        let mut diffs = Vec::with_capacity(reps as usize);
        let (mut sum_sl, mut sum_prsl) = (0.0, 0.0);
        for rep in 0..reps {
            let mut r = rng(40_000 * (k as u64 + 1) + rep);
            let d = generate_replication(n, beta, &mut r);
            let l = replication_losses(&d, beta, &estimators, &rule, &LassoConfig::default(), false, r.random())
                .map_err(|e| e.to_string())?;
            sum_sl += l.losses[1];
            sum_prsl += l.losses[2];
            diffs.push(l.losses[2] - l.losses[1]);
        }
        let m = reps as f64;
        let mean_diff = diffs.iter().sum::<f64>() / m;
        let var = diffs.iter().map(|d| (d - mean_diff).powi(2)).sum::<f64>() / (m - 1.0);
        let se = (var / m).sqrt();
        let (mse_sl, mse_prsl) = (sum_sl / m, sum_prsl / m);
        ensure(mse_prsl <= mse_sl + 2.0 * se, || {
            format!("{label}: MSE(PRSL) = {mse_prsl} > MSE(SL) = {mse_sl} + 2 * {se}")
        })?;
        lines.push(format!("{label}: PRSL {mse_prsl:.4} vs SL {mse_sl:.4} (SE diff {se:.1e})"));
    }
    Ok(lines.join("; "))
}

fn criterion_5() -> Outcome {
    let (n, p) = (50usize, 10usize);
    let mut worst = 0.0f64;
    let (mut above, mut negative) = (0usize, 0usize);
    let mut sampled = 0usize;
    let mut seed = 5_000u64;
    while sampled < 100 {
        seed += 1;
        let mut r = rng(seed);
        let r2 = 0.05 + 0.75 * (sampled % 10) as f64 / 9.0;
        let beta = coefficients_from_alpha(p, [0.1, 0.5, 1.0][sampled % 3], c_from_r2(r2).unwrap());
        let d = generate_replication(n, &beta, &mut r);
        let sd = standardize(&d, false).unwrap();
        let problem = LassoProblem::from_standardized(&sd);
        let fit = problem
            .fit(&LassoConfig::default().with_lambda(r.random_range(0.02..0.7) * problem.lambda_max()), None)
            .unwrap();
        if fit.slopes.iter().all(|v| *v == 0.0) {
            continue;
        }
        sampled += 1;
        let inputs = SteinInputs::from_fit(&sd, &fit).map_err(|e| e.to_string())?;
        let g = gram(&sd);
        let b = fit.slopes.as_slice().unwrap();
        let step = 1e-4 * b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let fd = stein_condition_value(fit.slopes.view(), &g, inputs.sigma2, inputs.a, step).map_err(|e| e.to_string())?;

        let (x, y) = (d.x().to_owned(), d.y().to_owned());
        let (cols, _) = center_scale(&x, &y, false);
        let q = quad_brute(&gram_brute(&cols), b);
        let norm_sq: f64 = b.iter().map(|v| v * v).sum();
        let (a, s2) = (inputs.a, inputs.sigma2);
        let analytic = a * a * s2 * s2 * norm_sq / (q * q) - 2.0 * a * s2 * (p as f64 - 2.0) / q;
        let rel = (fd - analytic).abs() / analytic.abs();
        worst = worst.max(rel);
        ensure(rel <= 1e-4, || format!("fit {sampled}: finite difference {fd} vs analytic {analytic}"))?;
        if inputs.w > 2.0 * a {
            above += 1;
            ensure(fd < 0.0, || format!("fit {sampled}: W_n = {} > 2a but value {fd} >= 0", inputs.w))?;
        }
        if fd < 0.0 {
            negative += 1;
        }
    }
    ensure(above > 0, || "no sampled fit had W_n > 2a".into())?;
    Ok(format!(
        "max relative error {worst:.1e}; {above} fits with W_n > 2a all negative ({negative} negative overall)"
    ))
}

fn criterion_6() -> Outcome {
    let estimators = vec![Estimator::Lasso, Estimator::Shrunk(ShrinkageVariant::Prsl)];
    let mut low = SimConfig::<f64>::new(50, 20, 0.1, 0.5);
    low.replications = 500;
    low.estimators = estimators.clone();
    let res = run_simulation(&low).map_err(|e| e.to_string())?;
    let mut seen = Vec::new();
    for pt in res.points.iter().filter(|pt| pt.r2 <= 0.1) {
        let rmse = pt.cells[1].rmse;
        ensure(rmse < 1.0, || format!("RMSE(PRSL) = {rmse} at R2 = {}", pt.r2))?;
        seen.push(format!("{:.3}:{rmse:.3}", pt.r2));
    }
    ensure(!seen.is_empty(), || "no grid point with R2 <= 0.1".into())?;

    let mut high = SimConfig::<f64>::new(50, 20, 0.1, 0.8);
    high.replications = 500;
    high.estimators = estimators;
    let res = run_simulation(&high).map_err(|e| e.to_string())?;
    let last = res.points.last().unwrap();
    let rmse = last.cells[1].rmse;
    ensure((rmse - 1.0).abs() <= 0.1, || format!("RMSE(PRSL) = {rmse} at R2 = {}", last.r2))?;
    Ok(format!(
        "RMSE(PRSL) at R2 <= 0.1: [{}]; at R2 = {}: {rmse:.4}",
        seen.join(", "),
        last.r2
    ))
}

fn prostate_analysis(replicates: usize) -> shrinklasso::analysis::ProstateAnalysis<f64> {
    let cfg = ProstateConfig {
        bootstrap_replicates: replicates,
        ..ProstateConfig::default()
    };
    run_prostate(&bundled::<f64>(), &cfg).expect("prostate analysis runs")
}

fn criterion_7() -> Outcome {
    let a = prostate_analysis(0);
    let t = &a.table;
    let expected = ["lcavol", "lweight", "svi"];
    for (e, slopes) in t.estimators.iter().zip(&t.slopes) {
        for (name, v) in t.feature_names.iter().zip(slopes) {
            let want = expected.contains(&name.as_str());
            ensure((*v != 0.0) == want, || format!("{e}: {name} = {v}"))?;
        }
    }
    ensure(t.estimators.len() == 1 + ShrinkageVariant::ALL.len(), || "missing estimators".into())?;
    ensure((0.34..=0.54).contains(&a.selected_s), || format!("selected s = {}", a.selected_s))?;
    Ok(format!("s_hat = {:.4}; support {{lcavol, lweight, svi}} for all {} estimators", a.selected_s, t.estimators.len()))
}

fn criterion_8() -> Outcome {
    let a = prostate_analysis(0);
    let t = &a.table;
    ensure(t.shrink_intercept, || "intercept shrink mode is off".into())?;
    let (lasso_b0, lasso) = t.column(Estimator::Lasso).unwrap();
    let (prsl_b0, prsl) = t.column(Estimator::Shrunk(ShrinkageVariant::Prsl)).unwrap();
    let factor = prsl_b0 / lasso_b0;
    let scale = lasso.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (j, (&l, &s)) in lasso.iter().zip(prsl).enumerate() {
        ensure((s - factor * l).abs() <= 1e-12 * scale, || {
            format!("slope {j}: PRSL {s} is not {factor} x LASSO {l}")
        })?;
    }
    ensure((0.85..=0.98).contains(&factor), || format!("factor {factor}"))?;
    Ok(format!("common factor {factor:.4} on intercept and slopes"))
}

fn criterion_9() -> Outcome {
    let a = prostate_analysis(200);
    let b = a.bootstrap.as_ref().unwrap();
    let variants = [
        ShrinkageVariant::Prsl,
        ShrinkageVariant::Sl2,
        ShrinkageVariant::Sl3Sqrt,
        ShrinkageVariant::Sl3Log,
    ];
    let rpe: Vec<(ShrinkageVariant, f64)> = variants
        .iter()
        .map(|&v| (v, b.get(Estimator::Shrunk(v)).unwrap().rpe))
        .collect();
    let shown = rpe.iter().map(|(v, r)| format!("{v} {r:.3}")).collect::<Vec<_>>().join(", ");
    for (v, r) in &rpe {
        ensure(*r < 1.0, || format!("RPE({v}) = {r:.4} >= 1 [{shown}]"))?;
    }
    let best = rpe.iter().min_by(|x, y| x.1.total_cmp(&y.1)).unwrap().0;
    ensure(best == ShrinkageVariant::Sl3Log, || format!("smallest RPE is {best} [{shown}]"))?;
    Ok(shown)
}

fn run_cli(args: &[&str], out: &Path, workers: u32) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_shrinklasso"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .arg("--workers")
        .arg(workers.to_string())
        .output()
        .map_err(|e| e.to_string())?;
    ensure(status.status.success(), || {
        format!("{args:?} failed: {}", String::from_utf8_lossy(&status.stderr))
    })
}

/// Every output file by name, plus the manifest with timing and worker count removed.
fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let bytes = fs::read(&path).unwrap();
        if name == "manifest.json" {
            let mut v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
            let obj = v.as_object_mut().unwrap();
            obj.remove("duration_seconds");
            obj.remove("workers");
            files.insert(name, serde_json::to_vec(&v).unwrap());
        } else {
            files.insert(name, bytes);
        }
    }
    files
}

fn criterion_10() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let runs: [(&str, Vec<&str>); 3] = [
        ("fit", vec!["fit", "--s", "0.44", "--format", "table+svg"]),
        (
            "simulate",
            vec!["simulate", "--n", "40", "--p", "6", "--replications", "12", "--grid-points", "3", "--format", "table+svg"],
        ),
        ("prostate", vec!["prostate", "--bootstrap", "12", "--s-grid", "41", "--format", "table+svg"]),
    ];
    let mut summary = Vec::new();
    for (name, args) in &runs {
        let dirs: Vec<_> = [(1, "a"), (4, "b"), (1, "c")]
            .iter()
            .map(|(w, tag)| (*w, tmp.path().join(format!("{name}-{tag}"))))
            .collect();
        for (w, dir) in &dirs {
            run_cli(args, dir, *w)?;
        }
        let replay = tmp.path().join(format!("{name}-replay"));
        let manifest = dirs[0].1.join("manifest.json");
        run_cli(&[name, "--manifest", manifest.to_str().unwrap()], &replay, 4)?;

        let reference = snapshot(&dirs[0].1);
        ensure(reference.len() > 1, || format!("{name}: no outputs"))?;
        for dir in dirs.iter().skip(1).map(|d| &d.1).chain([&replay]) {
            let other = snapshot(dir);
            ensure(other.keys().eq(reference.keys()), || format!("{name}: file sets differ in {}", dir.display()))?;
            for (file, bytes) in &reference {
                ensure(&other[file] == bytes, || format!("{name}: `{file}` differs in {}", dir.display()))?;
            }
        }
        summary.push(format!("{name} ({} files)", reference.len()));
    }
    Ok(format!("byte-identical across workers 1/4, repeats and manifest replay: {}", summary.join(", ")))
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome); 10] = [
        (1, "solver correctness", criterion_1),
        (2, "Stein constant and W_n", criterion_2),
        (3, "shrinkage algebra", criterion_3),
        (4, "PRSL risk <= SL risk", criterion_4),
        (5, "Stein condition", criterion_5),
        (6, "simulation trends", criterion_6),
        (7, "prostate sparsity", criterion_7),
        (8, "prostate shrinkage factor", criterion_8),
        (9, "bootstrap RPE ordering", criterion_9),
        (10, "CLI determinism", criterion_10),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (id, name, run) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {id:>2} PASS  {name} ({secs:.1}s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {id:>2} FAIL  {name} ({secs:.1}s): {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
