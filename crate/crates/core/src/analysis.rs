//! End-to-end prostate workflow: coefficient paths over `s`, one-SE
//! selection of `s`, the coefficient table at the selected bound and the
//! bootstrap prediction-error comparison.

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::evaluation::{
    bootstrap_evaluate, kfold_split, select_s_one_se, BootstrapConfig, CvPoint, Estimator, EvalReport, Pipeline,
    TrainedModel, Tuning,
};
use crate::lasso::LassoPath;
use crate::model::{gram, standardize, Dataset};
use crate::scalar::Scalar;
use crate::shrinkage::{shrink, ShrinkageVariant, SteinInputs};

/// Default seed for fold plans and bootstrap streams.
pub const DEFAULT_SEED: u64 = 20_170_101;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariantDiagnostics<F> {
    pub variant: ShrinkageVariant,
    pub factor: F,
    pub degenerate_w: bool,
    pub expansion: bool,
}

/// Coefficients of the LASSO and each requested variant at one tuning value,
/// on the standardized scale of the fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitTable<F> {
    pub feature_names: Vec<String>,
    pub estimators: Vec<Estimator>,
    pub intercepts: Vec<F>,
    pub slopes: Vec<Array1<F>>,
    pub lambda: F,
    pub s: F,
    pub stein: Option<SteinInputs<F>>,
    pub diagnostics: Vec<VariantDiagnostics<F>>,
    pub shrink_intercept: bool,
}

impl<F: Scalar> FitTable<F> {
    pub fn column(&self, estimator: Estimator) -> Option<(F, &Array1<F>)> {
        let i = self.estimators.iter().position(|e| *e == estimator)?;
        Some((self.intercepts[i], &self.slopes[i]))
    }

    pub fn diagnostics_for(&self, v: ShrinkageVariant) -> Option<&VariantDiagnostics<F>> {
        self.diagnostics.iter().find(|d| d.variant == v)
    }
}

/// Fits the pipeline on all of `d` and tabulates LASSO plus `variants`.
pub fn fit_table<F: Scalar>(
    d: &Dataset<F>,
    pipeline: &Pipeline<F>,
    variants: &[ShrinkageVariant],
    shrink_intercept: bool,
) -> Result<FitTable<F>> {
    let model = TrainedModel::train(d, pipeline)?;
    let y_mean = model.sd.y_mean();
    let mut estimators = vec![Estimator::Lasso];
    let mut intercepts = vec![y_mean];
    let mut slopes = vec![model.fit.slopes.clone()];
    let mut diagnostics = Vec::new();
    if !variants.is_empty() {
        let stein = model.stein.as_ref().ok_or_else(|| {
            Error::Numerical(format!(
                "Stein constants unavailable for n = {}, p = {}",
                model.sd.n(),
                model.sd.p()
            ))
        })?;
        for &v in variants {
            let s = shrink(&model.fit, v, stein);
            estimators.push(Estimator::Shrunk(v));
            intercepts.push(s.intercept(y_mean, shrink_intercept));
            diagnostics.push(VariantDiagnostics {
                variant: v,
                factor: s.factor,
                degenerate_w: s.degenerate_w,
                expansion: s.expansion,
            });
            slopes.push(s.slopes);
        }
    }
    Ok(FitTable {
        feature_names: d.feature_names().to_vec(),
        estimators,
        intercepts,
        slopes,
        lambda: model.fit.lambda,
        s: model.s,
        stein: model.stein,
        diagnostics,
        shrink_intercept,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProstateConfig<F> {
    pub seed: u64,
    pub folds: usize,
    /// Points of the even `s` grid used for the path and the CV curve.
    pub s_grid_points: usize,
    pub scale_columns: bool,
    pub shrink_intercept: bool,
    pub variants: Vec<ShrinkageVariant>,
    /// 0 skips the bootstrap.
    pub bootstrap_replicates: usize,
    pub reselect_per_replicate: bool,
    pub workers: usize,
    pub pipeline: Pipeline<F>,
}

impl<F: Scalar> Default for ProstateConfig<F> {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            folds: 10,
            s_grid_points: 101,
            scale_columns: true,
            shrink_intercept: true,
            variants: ShrinkageVariant::ALL.to_vec(),
            bootstrap_replicates: 1000,
            reselect_per_replicate: false,
            workers: 1,
            pipeline: Pipeline::new(Tuning::S(F::one()), true),
        }
    }
}

/// Coefficients of every estimator along the `s` path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRow<F> {
    pub s: F,
    pub estimator: Estimator,
    pub slopes: Array1<F>,
}

#[derive(Debug, Clone)]
pub struct ProstateAnalysis<F> {
    pub s_path: LassoPath<F>,
    pub path_rows: Vec<PathRow<F>>,
    pub cv_curve: Vec<CvPoint<F>>,
    pub selected_s: F,
    pub table: FitTable<F>,
    pub bootstrap: Option<EvalReport<F>>,
}

/// Coefficients of LASSO and each variant at every point of `path`.
pub fn path_rows<F: Scalar>(
    d: &Dataset<F>,
    path: &LassoPath<F>,
    variants: &[ShrinkageVariant],
    scale_columns: bool,
) -> Result<Vec<PathRow<F>>> {
    let sd = standardize(d, scale_columns)?;
    let g = gram(&sd);
    let mut rows = Vec::new();
    for pt in path.points() {
        rows.push(PathRow {
            s: pt.s,
            estimator: Estimator::Lasso,
            slopes: pt.fit.slopes.clone(),
        });
        let stein = SteinInputs::from_parts(&sd, &pt.fit, &g)?;
        for &v in variants {
            rows.push(PathRow {
                s: pt.s,
                estimator: Estimator::Shrunk(v),
                slopes: shrink(&pt.fit, v, &stein).slopes,
            });
        }
    }
    Ok(rows)
}

pub fn run_prostate<F: Scalar>(d: &Dataset<F>, cfg: &ProstateConfig<F>) -> Result<ProstateAnalysis<F>> {
    let mut pipeline = cfg.pipeline;
    pipeline.scale_columns = cfg.scale_columns;
    let plan = kfold_split(d.n(), cfg.folds, cfg.seed)?;
    let (selected_s, s_path, cv_curve) = select_s_one_se(d, &plan, &pipeline, cfg.s_grid_points)?;
    let pipeline = pipeline.with_tuning(Tuning::S(selected_s));
    let table = fit_table(d, &pipeline, &cfg.variants, cfg.shrink_intercept)?;
    let rows = path_rows(d, &s_path, &cfg.variants, cfg.scale_columns)?;
    let bootstrap = if cfg.bootstrap_replicates > 0 {
        let mut estimators = vec![Estimator::Lasso];
        estimators.extend(cfg.variants.iter().map(|&v| Estimator::Shrunk(v)));
        let bcfg = BootstrapConfig {
            replicates: cfg.bootstrap_replicates,
            seed: cfg.seed,
            folds: cfg.folds,
            s_hat: selected_s,
            reselect: cfg.reselect_per_replicate,
            s_grid_points: cfg.s_grid_points,
            workers: cfg.workers,
        };
        Some(bootstrap_evaluate(d, &estimators, &bcfg, &pipeline)?)
    } else {
        None
    };
    Ok(ProstateAnalysis {
        s_path,
        path_rows: rows,
        cv_curve,
        selected_s,
        table,
        bootstrap,
    })
}
