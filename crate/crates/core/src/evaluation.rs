//! Cross-validated prediction error, the one-standard-error rule and the
//! case-resampling bootstrap of prediction error.
//!
//! All statistics (centering, scaling, penalty selection, Stein constants)
//! are computed on training rows only; held-out rows are touched only when
//! predicting.

use std::fmt;

use ndarray::{Array1, Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lasso::{LassoConfig, LassoFit, LassoPath, LassoProblem};
use crate::model::{standardize, Dataset, StandardizedDataset};
use crate::rng::{derive_seed, stream, DOMAIN_BOOTSTRAP, DOMAIN_FOLDS};
use crate::scalar::Scalar;
use crate::shrinkage::{shrink, ShrinkageVariant, SteinInputs};

/// Assignment of rows to `k` cross-validation folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub assignment: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn test_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.assignment[i] == fold).collect()
    }

    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.assignment[i] != fold).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Random partition of `0..n` into `k` folds whose sizes differ by at most one.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 || k > n {
        return Err(Error::Config(format!("fold count must satisfy 2 <= k <= n, got k = {k}, n = {n}")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut stream(seed, DOMAIN_FOLDS, 0));
    let mut assignment = vec![0; n];
    for (pos, &row) in perm.iter().enumerate() {
        assignment[row] = pos % k;
    }
    Ok(FoldPlan { k, assignment, seed })
}

/// What produces predictions from a trained pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Estimator {
    /// Training-mean predictor.
    Baseline,
    Lasso,
    Shrunk(ShrinkageVariant),
}

impl Estimator {
    /// LASSO followed by every shrinkage variant.
    pub fn all() -> Vec<Estimator> {
        std::iter::once(Estimator::Lasso)
            .chain(ShrinkageVariant::ALL.iter().map(|&v| Estimator::Shrunk(v)))
            .collect()
    }

    pub fn name(&self) -> &'static str {
        match self {
            Estimator::Baseline => "MEAN",
            Estimator::Lasso => "LASSO",
            Estimator::Shrunk(v) => v.name(),
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "LASSO" => Ok(Estimator::Lasso),
            "MEAN" | "BASELINE" => Ok(Estimator::Baseline),
            _ => s.parse().map(Estimator::Shrunk),
        }
    }
}

/// How the LASSO penalty is fixed inside a pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tuning<F> {
    Lambda(F),
    /// Standardized bound relative to the densest fit of the training path.
    S(F),
}

/// standardize -> LASSO -> optional shrinkage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pipeline<F> {
    pub tuning: Tuning<F>,
    pub scale_columns: bool,
    pub lasso: LassoConfig<F>,
    pub grid_count: usize,
    pub grid_ratio: F,
}

impl<F: Scalar> Pipeline<F> {
    pub fn new(tuning: Tuning<F>, scale_columns: bool) -> Self {
        Self {
            tuning,
            scale_columns,
            lasso: LassoConfig::default(),
            grid_count: 100,
            grid_ratio: F::c(1e-3),
        }
    }

    pub fn with_tuning(self, tuning: Tuning<F>) -> Self {
        Self { tuning, ..self }
    }

    pub fn penalty_path(&self, problem: &LassoProblem<F>) -> Result<LassoPath<F>> {
        problem.path(&problem.lambda_grid(self.grid_count, self.grid_ratio)?, &self.lasso)
    }
}

/// A pipeline fitted on one set of training rows.
#[derive(Debug, Clone)]
pub struct TrainedModel<F> {
    pub sd: StandardizedDataset<F>,
    pub fit: LassoFit<F>,
    /// Standardized bound of `fit` on its training path (`NaN` under `Tuning::Lambda`).
    pub s: F,
    /// `None` when the Stein constants are unavailable (e.g. `n <= p`);
    /// shrinkage estimators then fall back to the LASSO.
    pub stein: Option<SteinInputs<F>>,
}

impl<F: Scalar> TrainedModel<F> {
    pub fn train(d: &Dataset<F>, pipeline: &Pipeline<F>) -> Result<Self> {
        let sd = standardize(d, pipeline.scale_columns)?;
        let problem = LassoProblem::from_standardized(&sd);
        let (fit, s) = match pipeline.tuning {
            Tuning::Lambda(lambda) => (problem.fit(&pipeline.lasso.with_lambda(lambda), None)?, F::nan()),
            Tuning::S(target) => {
                let path = pipeline.penalty_path(&problem)?;
                let pt = problem.fit_at_s(&path, target, &pipeline.lasso)?;
                (pt.fit, pt.s)
            }
        };
        let stein = stein_or_none(&sd, &fit, problem.gram())?;
        Ok(Self { sd, fit, s, stein })
    }

    pub fn is_stein_degenerate(&self) -> bool {
        self.stein.is_none()
    }

    /// Slopes on the standardized scale.
    pub fn slopes(&self, estimator: Estimator) -> Array1<F> {
        match (estimator, &self.stein) {
            (Estimator::Baseline, _) => Array1::zeros(self.fit.slopes.len()),
            (Estimator::Lasso, _) | (Estimator::Shrunk(_), None) => self.fit.slopes.clone(),
            (Estimator::Shrunk(v), Some(inp)) => shrink(&self.fit, v, inp).slopes,
        }
    }

    pub fn predict(&self, raw: ArrayView2<'_, F>, estimator: Estimator) -> Result<Array1<F>> {
        self.sd.predict_raw(raw, self.slopes(estimator).view())
    }
}

/// Stein inputs when they exist; `Ok(None)` for the recoverable degenerate cases.
pub(crate) fn stein_or_none<F: Scalar>(
    sd: &StandardizedDataset<F>,
    fit: &LassoFit<F>,
    g: &Array2<F>,
) -> Result<Option<SteinInputs<F>>> {
    match SteinInputs::from_parts(sd, fit, g) {
        Ok(s) => Ok(Some(s)),
        Err(Error::Domain(_)) | Err(Error::Numerical(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Trains the pipeline on every row outside `fold`.
pub fn train_fold<F: Scalar>(d: &Dataset<F>, plan: &FoldPlan, fold: usize, pipeline: &Pipeline<F>) -> Result<TrainedModel<F>> {
    check_plan(d, plan)?;
    TrainedModel::train(&d.select_rows(&plan.train_rows(fold)), pipeline)
}

fn check_plan<F: Scalar>(d: &Dataset<F>, plan: &FoldPlan) -> Result<()> {
    if plan.n() != d.n() {
        return Err(Error::Dimension(format!("fold plan covers {} rows, dataset has {}", plan.n(), d.n())));
    }
    Ok(())
}

/// Cross-validated squared prediction error of one estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome<F> {
    pub estimator: Estimator,
    /// Mean squared error over all held-out rows.
    pub pe_mean: F,
    /// Standard deviation of the per-fold errors divided by `sqrt(k)`.
    pub pe_se: F,
    pub fold_pe: Vec<F>,
    /// Folds where the Stein constants were unavailable and the LASSO was used.
    pub degenerate_folds: usize,
}

fn mean_and_se<F: Scalar>(values: &[F]) -> (F, F) {
    let k = F::from_usize_exact(values.len());
    let mean = values.iter().copied().sum::<F>() / k;
    if values.len() < 2 {
        return (mean, F::zero());
    }
    let var = values.iter().map(|&v| (v - mean) * (v - mean)).sum::<F>() / (k - F::one());
    (mean, (var / k).sqrt())
}

fn sq_err<F: Scalar>(pred: &Array1<F>, truth: &Array1<F>) -> F {
    pred.iter().zip(truth.iter()).map(|(&a, &b)| (a - b) * (a - b)).sum()
}

/// Cross-validated prediction error for several estimators sharing one
/// LASSO fit per fold.
pub fn cv_prediction_errors<F: Scalar>(
    d: &Dataset<F>,
    estimators: &[Estimator],
    plan: &FoldPlan,
    pipeline: &Pipeline<F>,
) -> Result<Vec<CvOutcome<F>>> {
    check_plan(d, plan)?;
    let m = estimators.len();
    let mut sse = vec![F::zero(); m];
    let mut fold_pe = vec![Vec::with_capacity(plan.k); m];
    let mut degenerate = 0;
    for fold in 0..plan.k {
        let model = train_fold(d, plan, fold, pipeline)?;
        if model.is_stein_degenerate() {
            degenerate += 1;
        }
        let test = d.select_rows(&plan.test_rows(fold));
        let truth = test.y().to_owned();
        for (e, est) in estimators.iter().enumerate() {
            let err = sq_err(&model.predict(test.x(), *est)?, &truth);
            sse[e] = sse[e] + err;
            fold_pe[e].push(err / F::from_usize_exact(test.n()));
        }
    }
    let n = F::from_usize_exact(d.n());
    Ok(estimators
        .iter()
        .enumerate()
        .map(|(e, &estimator)| {
            let (_, se) = mean_and_se(&fold_pe[e]);
            let uses_stein = matches!(estimator, Estimator::Shrunk(_));
            CvOutcome {
                estimator,
                pe_mean: sse[e] / n,
                pe_se: se,
                fold_pe: std::mem::take(&mut fold_pe[e]),
                degenerate_folds: if uses_stein { degenerate } else { 0 },
            }
        })
        .collect())
}

pub fn cv_prediction_error<F: Scalar>(
    d: &Dataset<F>,
    estimator: Estimator,
    plan: &FoldPlan,
    pipeline: &Pipeline<F>,
) -> Result<CvOutcome<F>> {
    Ok(cv_prediction_errors(d, &[estimator], plan, pipeline)?.remove(0))
}

/// One point of a cross-validation curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvPoint<F> {
    pub pe_mean: F,
    pub pe_se: F,
}

fn curve_from_sse<F: Scalar>(sse: Vec<F>, fold_pe: Vec<Vec<F>>, n: usize) -> Vec<CvPoint<F>> {
    let n = F::from_usize_exact(n);
    sse.into_iter()
        .zip(fold_pe)
        .map(|(s, f)| CvPoint {
            pe_mean: s / n,
            pe_se: mean_and_se(&f).1,
        })
        .collect()
}

/// LASSO CV error at each standardized bound of `s_grid`; the bound is
/// measured on each training fold's own path.
pub fn cv_curve_s<F: Scalar>(d: &Dataset<F>, s_grid: &[F], plan: &FoldPlan, pipeline: &Pipeline<F>) -> Result<Vec<CvPoint<F>>> {
    check_plan(d, plan)?;
    let mut sse = vec![F::zero(); s_grid.len()];
    let mut fold_pe = vec![Vec::with_capacity(plan.k); s_grid.len()];
    for fold in 0..plan.k {
        let sd = standardize(&d.select_rows(&plan.train_rows(fold)), pipeline.scale_columns)?;
        let problem = LassoProblem::from_standardized(&sd);
        let path = problem.path_at_s(&pipeline.penalty_path(&problem)?, s_grid, &pipeline.lasso)?;
        let test = d.select_rows(&plan.test_rows(fold));
        let truth = test.y().to_owned();
        let xs = sd.transform(test.x())?;
        for (i, pt) in path.points().iter().enumerate() {
            let pred = xs.dot(&pt.fit.slopes).mapv(|v| v + sd.y_mean());
            let err = sq_err(&pred, &truth);
            sse[i] = sse[i] + err;
            fold_pe[i].push(err / F::from_usize_exact(test.n()));
        }
    }
    Ok(curve_from_sse(sse, fold_pe, d.n()))
}

/// LASSO CV error along a fixed decreasing penalty grid.
pub fn cv_curve_lambda<F: Scalar>(
    d: &Dataset<F>,
    grid: &[F],
    plan: &FoldPlan,
    pipeline: &Pipeline<F>,
) -> Result<Vec<CvPoint<F>>> {
    check_plan(d, plan)?;
    let mut sse = vec![F::zero(); grid.len()];
    let mut fold_pe = vec![Vec::with_capacity(plan.k); grid.len()];
    for fold in 0..plan.k {
        let sd = standardize(&d.select_rows(&plan.train_rows(fold)), pipeline.scale_columns)?;
        let problem = LassoProblem::from_standardized(&sd);
        let path = problem.path(grid, &pipeline.lasso)?;
        let test = d.select_rows(&plan.test_rows(fold));
        let truth = test.y().to_owned();
        let xs = sd.transform(test.x())?;
        for (i, pt) in path.points().iter().enumerate() {
            let pred = xs.dot(&pt.fit.slopes).mapv(|v| v + sd.y_mean());
            let err = sq_err(&pred, &truth);
            sse[i] = sse[i] + err;
            fold_pe[i].push(err / F::from_usize_exact(test.n()));
        }
    }
    Ok(curve_from_sse(sse, fold_pe, d.n()))
}

/// Index of the first minimum of a CV curve.
pub fn argmin_pe<F: Scalar>(curve: &[CvPoint<F>]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, c) in curve.iter().enumerate() {
        if best.is_none_or(|b| c.pe_mean < curve[b].pe_mean) {
            best = Some(i);
        }
    }
    best
}

/// Smallest `s` whose CV error is within one standard error of the best.
pub fn one_se_rule<F: Scalar>(path: &LassoPath<F>, curve: &[CvPoint<F>]) -> Result<F> {
    if curve.is_empty() || curve.len() != path.len() {
        return Err(Error::Dimension(format!(
            "CV curve has {} points, path has {}",
            curve.len(),
            path.len()
        )));
    }
    let best = argmin_pe(curve).expect("non-empty curve");
    let threshold = curve[best].pe_mean + curve[best].pe_se;
    path.points()
        .iter()
        .zip(curve)
        .filter(|(_, c)| c.pe_mean <= threshold)
        .map(|(p, _)| p.s)
        .fold(None, |acc: Option<F>, s| Some(acc.map_or(s, |a| a.min(s))))
        .ok_or_else(|| Error::Numerical("no CV point within one standard error".into()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapConfig<F> {
    pub replicates: usize,
    pub seed: u64,
    pub folds: usize,
    /// Bound used inside every replicate (selected once on the original data).
    pub s_hat: F,
    /// Re-run the one-SE selection inside every replicate instead of using `s_hat`.
    pub reselect: bool,
    /// Grid for per-replicate reselection.
    pub s_grid_points: usize,
    pub workers: usize,
}

/// Bootstrap prediction-error summary for one estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorReport<F> {
    pub estimator: Estimator,
    pub pe_mean: F,
    pub pe_se: F,
    /// `pe_mean / pe_mean(LASSO)`; below one means lower error than the LASSO.
    pub rpe: F,
    pub bootstrap_pe: Vec<F>,
    /// One row of standardized-scale slopes per retained replicate.
    pub bootstrap_coefficients: Array2<F>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport<F> {
    pub estimators: Vec<EstimatorReport<F>>,
    pub selected_s: F,
    pub replicates: usize,
    pub skipped: usize,
    pub degenerate_folds: usize,
    pub feature_names: Vec<String>,
}

impl<F: Scalar> EvalReport<F> {
    pub fn get(&self, estimator: Estimator) -> Option<&EstimatorReport<F>> {
        self.estimators.iter().find(|e| e.estimator == estimator)
    }
}

struct ReplicateOutcome<F> {
    pe: Vec<F>,
    coefficients: Vec<Array1<F>>,
    degenerate_folds: usize,
}

fn is_degenerate_design(e: &Error) -> bool {
    matches!(e, Error::ZeroVariance(_) | Error::Domain(_))
}

fn run_replicate<F: Scalar>(
    d: &Dataset<F>,
    estimators: &[Estimator],
    cfg: &BootstrapConfig<F>,
    pipeline: &Pipeline<F>,
    b: usize,
) -> Result<Option<ReplicateOutcome<F>>> {
    let mut rng = stream(cfg.seed, DOMAIN_BOOTSTRAP, b as u64);
    let n = d.n();
    let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let sample = d.select_rows(&rows);
    let plan = kfold_split(n, cfg.folds, derive_seed(cfg.seed, DOMAIN_BOOTSTRAP, b as u64))?;

    let attempt = || -> Result<ReplicateOutcome<F>> {
        let s = if cfg.reselect {
            select_s_one_se(&sample, &plan, pipeline, cfg.s_grid_points)?.0
        } else {
            cfg.s_hat
        };
        let pipe = pipeline.with_tuning(Tuning::S(s));
        let cv = cv_prediction_errors(&sample, estimators, &plan, &pipe)?;
        let full = TrainedModel::train(&sample, &pipe)?;
        Ok(ReplicateOutcome {
            pe: cv.iter().map(|c| c.pe_mean).collect(),
            coefficients: estimators.iter().map(|&e| full.slopes(e)).collect(),
            degenerate_folds: cv.iter().map(|c| c.degenerate_folds).max().unwrap_or(0),
        })
    };
    match attempt() {
        Ok(o) => Ok(Some(o)),
        Err(e) if is_degenerate_design(&e) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Evenly spaced `s` grid `0, 1/(m-1), ..., 1`.
pub fn s_grid<F: Scalar>(points: usize) -> Vec<F> {
    let last = F::from_usize_exact(points.max(2) - 1);
    (0..points.max(2)).map(|i| F::from_usize_exact(i) / last).collect()
}

/// Runs CV over an even `s` grid on `d` and applies the one-SE rule.
/// Returns the selected bound together with the full-data `s` path and curve.
pub fn select_s_one_se<F: Scalar>(
    d: &Dataset<F>,
    plan: &FoldPlan,
    pipeline: &Pipeline<F>,
    grid_points: usize,
) -> Result<(F, LassoPath<F>, Vec<CvPoint<F>>)> {
    let grid = s_grid::<F>(grid_points);
    let sd = standardize(d, pipeline.scale_columns)?;
    let problem = LassoProblem::from_standardized(&sd);
    let path = problem.path_at_s(&pipeline.penalty_path(&problem)?, &grid, &pipeline.lasso)?;
    let curve = cv_curve_s(d, &grid, plan, pipeline)?;
    let s = one_se_rule(&path, &curve)?;
    Ok((s, path, curve))
}

/// Case-resampling bootstrap of k-fold CV prediction error.
///
/// LASSO is always evaluated (it is inserted first when missing) because
/// every RPE is relative to it.
pub fn bootstrap_evaluate<F: Scalar>(
    d: &Dataset<F>,
    estimators: &[Estimator],
    cfg: &BootstrapConfig<F>,
    pipeline: &Pipeline<F>,
) -> Result<EvalReport<F>> {
    if cfg.replicates == 0 {
        return Err(Error::Config("bootstrap needs at least one replicate".into()));
    }
    let mut ests: Vec<Estimator> = estimators.to_vec();
    if !ests.contains(&Estimator::Lasso) {
        ests.insert(0, Estimator::Lasso);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let outcomes: Vec<Option<ReplicateOutcome<F>>> = pool.install(|| {
        (0..cfg.replicates)
            .into_par_iter()
            .map(|b| run_replicate(d, &ests, cfg, pipeline, b))
            .collect::<Result<Vec<_>>>()
    })?;

    let kept: Vec<ReplicateOutcome<F>> = outcomes.into_iter().flatten().collect();
    let skipped = cfg.replicates - kept.len();
    if skipped * 100 > cfg.replicates || kept.is_empty() {
        return Err(Error::Numerical(format!(
            "{skipped} of {} bootstrap replicates had a degenerate design (limit 1%)",
            cfg.replicates
        )));
    }
    let p = d.p();
    let mut reports: Vec<EstimatorReport<F>> = ests
        .iter()
        .enumerate()
        .map(|(e, &estimator)| {
            let pe: Vec<F> = kept.iter().map(|o| o.pe[e]).collect();
            let (pe_mean, pe_se) = mean_and_se(&pe);
            let mut coefs = Array2::zeros((kept.len(), p));
            for (r, o) in kept.iter().enumerate() {
                coefs.row_mut(r).assign(&o.coefficients[e]);
            }
            EstimatorReport {
                estimator,
                pe_mean,
                pe_se,
                rpe: F::nan(),
                bootstrap_pe: pe,
                bootstrap_coefficients: coefs,
            }
        })
        .collect();
    let lasso_pe = reports
        .iter()
        .find(|r| r.estimator == Estimator::Lasso)
        .map(|r| r.pe_mean)
        .expect("LASSO is always evaluated");
    for r in &mut reports {
        r.rpe = if r.estimator == Estimator::Lasso {
            F::one()
        } else {
            r.pe_mean / lasso_pe
        };
    }
    Ok(EvalReport {
        estimators: reports,
        selected_s: cfg.s_hat,
        replicates: cfg.replicates,
        skipped,
        degenerate_folds: kept.iter().map(|o| o.degenerate_folds).sum(),
        feature_names: d.feature_names().to_vec(),
    })
}
