//! Monte Carlo study of coefficient-estimation risk relative to the LASSO.
//!
//! Data follow `y = X b + e` with standard normal covariates and errors and
//! `b_j = c sqrt(2 alpha) j^(-alpha/2)`, where `c = sqrt(R2 / (1 - R2))` for
//! each point of an even grid of population `R2` values in `[0, r2_max]`.
//! The risk of an estimator is `E ||b_hat - b||^2`, reported relative to the
//! LASSO.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evaluation::{argmin_pe, cv_curve_lambda, kfold_split, stein_or_none, Estimator, Pipeline, Tuning};
use crate::lasso::{LassoConfig, LassoProblem};
use crate::model::{destandardize, standardize, Dataset};
use crate::rng::{derive_seed, stream, DOMAIN_CV_LAMBDA, DOMAIN_SIMULATION};
use crate::scalar::Scalar;
use crate::shrinkage::shrink;

/// How the penalty of each replication is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaRule<F> {
    /// k-fold CV over a log grid of `count` penalties down to `ratio * lambda_max`,
    /// taking the penalty with the smallest CV error.
    CvMin { folds: usize, count: usize, ratio: F },
    /// The same penalty for every replication.
    Fixed(F),
    /// `fraction * lambda_max` of each replication.
    FractionOfMax(F),
}

impl<F: Scalar> Default for LambdaRule<F> {
    fn default() -> Self {
        LambdaRule::CvMin {
            folds: 10,
            count: 100,
            ratio: F::c(1e-3),
        }
    }
}

impl<F: Scalar> LambdaRule<F> {
    pub fn describe(&self) -> String {
        match self {
            LambdaRule::CvMin { folds, count, ratio } => {
                format!("cv-min(folds={folds},grid={count},ratio={ratio})")
            }
            LambdaRule::Fixed(l) => format!("fixed(lambda={l})"),
            LambdaRule::FractionOfMax(f) => format!("fraction-of-max({f})"),
        }
    }
}

/// One cell of the simulation design.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig<F> {
    pub n: usize,
    pub p: usize,
    pub alpha: F,
    pub r2_max: F,
    pub grid_points: usize,
    pub replications: usize,
    pub seed: u64,
    /// Estimators reported; the LASSO is always fitted as the RMSE denominator.
    pub estimators: Vec<Estimator>,
    pub lambda_rule: LambdaRule<F>,
    pub lasso: LassoConfig<F>,
    /// Simulated covariates are already standard normal, so scaling is off by default.
    pub scale_columns: bool,
    pub workers: usize,
}

impl<F: Scalar> SimConfig<F> {
    pub fn new(n: usize, p: usize, alpha: F, r2_max: F) -> Self {
        Self {
            n,
            p,
            alpha,
            r2_max,
            grid_points: 20,
            replications: 1000,
            seed: 20_170_101,
            estimators: Estimator::all(),
            lambda_rule: LambdaRule::default(),
            lasso: LassoConfig::default(),
            scale_columns: false,
            workers: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n > self.p && self.p >= 3) {
            return Err(Error::Config(format!("need n > p >= 3, got n = {}, p = {}", self.n, self.p)));
        }
        if !(self.r2_max > F::zero() && self.r2_max < F::one()) {
            return Err(Error::Config(format!("r2_max must lie in (0, 1), got {}", self.r2_max)));
        }
        if !(self.alpha > F::zero()) {
            return Err(Error::Config(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if self.grid_points < 2 {
            return Err(Error::Config("grid_points must be >= 2".into()));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be >= 1".into()));
        }
        if let LambdaRule::CvMin { folds, count, ratio } = self.lambda_rule {
            if folds < 2 || folds > self.n || count < 2 || !(ratio > F::zero() && ratio < F::one()) {
                return Err(Error::Config(format!("invalid lambda rule {}", self.lambda_rule.describe())));
            }
        }
        self.lasso.validate()
    }

    /// Population `R2` values `0, r2_max/(m-1), ..., r2_max`.
    pub fn r2_grid(&self) -> Vec<F> {
        let last = F::from_usize_exact(self.grid_points - 1);
        (0..self.grid_points)
            .map(|i| self.r2_max * F::from_usize_exact(i) / last)
            .collect()
    }
}

/// Monte Carlo summary of one estimator at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimCell<F> {
    pub estimator: Estimator,
    pub mse: F,
    pub rmse: F,
    /// Standard error of `mse` over replications.
    pub mc_standard_error: F,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimGridPoint<F> {
    pub r2: F,
    pub c: F,
    /// `||b||^2` actually used; differs from `c^2` unless `2 alpha sum j^-alpha = 1`.
    pub beta_norm_sq: F,
    pub cells: Vec<SimCell<F>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult<F> {
    pub config: SimConfig<F>,
    pub points: Vec<SimGridPoint<F>>,
    pub lambda_rule: String,
    /// Replications whose final LASSO fit hit `max_sweeps`.
    pub nonconverged: usize,
    /// Replications where the Stein constants were unavailable (`W_n` or `sigma2` zero).
    pub degenerate_stein: usize,
}

/// `mse / lasso_mse`; when the LASSO risk is exactly zero, equal risk counts
/// as 1 and any positive risk as infinite.
fn relative_risk<F: Scalar>(is_lasso: bool, mse: F, lasso_mse: F) -> F {
    if is_lasso || mse == lasso_mse {
        F::one()
    } else if lasso_mse == F::zero() {
        F::infinity()
    } else {
        mse / lasso_mse
    }
}

/// `c = sqrt(R2 / (1 - R2))`, the inverse of `R2 = c^2 / (1 + c^2)`.
pub fn c_from_r2<F: Scalar>(r2: F) -> Result<F> {
    if !(r2 >= F::zero() && r2 < F::one()) {
        return Err(Error::Domain(format!("R2 must lie in [0, 1), got {r2}")));
    }
    Ok((r2 / (F::one() - r2)).sqrt())
}

/// `b_j = c sqrt(2 alpha) j^(-alpha/2)` for `j = 1..=p`.
pub fn coefficients_from_alpha<F: Scalar>(p: usize, alpha: F, c: F) -> Array1<F> {
    let scale = c * (F::c(2.0) * alpha).sqrt();
    let half = alpha / F::c(2.0);
    Array1::from_shape_fn(p, |j| scale * F::from_usize_exact(j + 1).powf(-half))
}

/// `n` rows of standard normal covariates and `y = X b + e`, `e ~ N(0, 1)`.
pub fn generate_replication<F: Scalar, R: Rng + ?Sized>(n: usize, beta: &Array1<F>, rng: &mut R) -> Dataset<F>
where
    StandardNormal: Distribution<F>,
{
    let p = beta.len();
    let x = Array2::from_shape_fn((n, p), |_| StandardNormal.sample(rng));
    let noise = Array1::from_shape_fn(n, |_| StandardNormal.sample(rng));
    let y = x.dot(beta) + noise;
    Dataset::unnamed(x, y).expect("simulated data are finite")
}

/// Squared estimation errors of every estimator on one simulated dataset.
#[derive(Debug, Clone)]
pub struct ReplicationLosses<F> {
    /// Indexed like the estimator list passed in; LASSO is at `lasso_index`.
    pub losses: Vec<F>,
    pub lasso_converged: bool,
    pub stein_degenerate: bool,
    pub lambda: F,
}

/// Fits the LASSO under `rule`, applies each estimator and returns
/// `||b_hat - b||^2` in the original covariate units.
pub fn replication_losses<F: Scalar>(
    d: &Dataset<F>,
    beta: &Array1<F>,
    estimators: &[Estimator],
    rule: &LambdaRule<F>,
    lasso: &LassoConfig<F>,
    scale_columns: bool,
    cv_seed: u64,
) -> Result<ReplicationLosses<F>> {
    let sd = standardize(d, scale_columns)?;
    let problem = LassoProblem::from_standardized(&sd);
    let fit = match *rule {
        LambdaRule::Fixed(lambda) => problem.fit(&lasso.with_lambda(lambda), None)?,
        LambdaRule::FractionOfMax(f) => problem.fit(&lasso.with_lambda(f * problem.lambda_max()), None)?,
        LambdaRule::CvMin { folds, count, ratio } => {
            let grid = problem.lambda_grid(count, ratio)?;
            let plan = kfold_split(d.n(), folds, cv_seed)?;
            let mut pipe = Pipeline::new(Tuning::Lambda(F::zero()), scale_columns);
            pipe.lasso = *lasso;
            let curve = cv_curve_lambda(d, &grid, &plan, &pipe)?;
            let best = argmin_pe(&curve).expect("non-empty grid");
            let path = problem.path(&grid[..=best], lasso)?;
            path.points()[best].fit.clone()
        }
    };
    let stein = stein_or_none(&sd, &fit, problem.gram())?;
    let losses = estimators
        .iter()
        .map(|&e| {
            let slopes = match (e, &stein) {
                (Estimator::Baseline, _) => Array1::zeros(beta.len()),
                (Estimator::Lasso, _) | (Estimator::Shrunk(_), None) => fit.slopes.clone(),
                (Estimator::Shrunk(v), Some(inp)) => shrink(&fit, v, inp).slopes,
            };
            let orig = destandardize(slopes.view(), &sd)?.slopes;
            Ok(orig.iter().zip(beta.iter()).map(|(&a, &b)| (a - b) * (a - b)).sum())
        })
        .collect::<Result<Vec<F>>>()?;
    Ok(ReplicationLosses {
        losses,
        lasso_converged: fit.converged,
        stein_degenerate: stein.is_none(),
        lambda: fit.lambda,
    })
}

fn mean_se<F: Scalar>(v: &[F]) -> (F, F) {
    let k = F::from_usize_exact(v.len());
    let m = v.iter().copied().sum::<F>() / k;
    if v.len() < 2 {
        return (m, F::zero());
    }
    let var = v.iter().map(|&x| (x - m) * (x - m)).sum::<F>() / (k - F::one());
    (m, (var / k).sqrt())
}

/// Runs every grid point and replication. Each `(grid point, replication)`
/// pair draws from its own random stream, so the result is bit-identical
/// for any worker count.
pub fn run_simulation<F: Scalar>(cfg: &SimConfig<F>) -> Result<SimResult<F>>
where
    StandardNormal: Distribution<F>,
{
    cfg.validate()?;
    let mut fitted: Vec<Estimator> = vec![Estimator::Lasso];
    fitted.extend(cfg.estimators.iter().copied().filter(|e| *e != Estimator::Lasso));
    let r2s = cfg.r2_grid();
    let betas: Vec<(F, Array1<F>)> = r2s
        .iter()
        .map(|&r2| {
            let c = c_from_r2(r2)?;
            Ok((c, coefficients_from_alpha(cfg.p, cfg.alpha, c)))
        })
        .collect::<Result<_>>()?;

    let reps = cfg.replications;
    let units = r2s.len() * reps;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let outcomes: Vec<ReplicationLosses<F>> = pool.install(|| {
        (0..units)
            .into_par_iter()
            .map(|unit| {
                let (gp, _) = (unit / reps, unit % reps);
                let beta = &betas[gp].1;
                let mut rng = stream(cfg.seed, DOMAIN_SIMULATION, unit as u64);
                let d = generate_replication(cfg.n, beta, &mut rng);
                replication_losses(
                    &d,
                    beta,
                    &fitted,
                    &cfg.lambda_rule,
                    &cfg.lasso,
                    cfg.scale_columns,
                    derive_seed(cfg.seed, DOMAIN_CV_LAMBDA, unit as u64),
                )
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut points = Vec::with_capacity(r2s.len());
    for (gp, &r2) in r2s.iter().enumerate() {
        let chunk = &outcomes[gp * reps..(gp + 1) * reps];
        let stats: Vec<(F, F)> = (0..fitted.len())
            .map(|e| mean_se(&chunk.iter().map(|o| o.losses[e]).collect::<Vec<_>>()))
            .collect();
        let lasso_mse = stats[0].0;
        let cells = cfg
            .estimators
            .iter()
            .map(|est| {
                let e = fitted.iter().position(|f| f == est).expect("estimator fitted");
                let (mse, se) = stats[e];
                SimCell {
                    estimator: *est,
                    mse,
                    rmse: relative_risk(e == 0, mse, lasso_mse),
                    mc_standard_error: se,
                }
            })
            .collect();
        let (c, beta) = &betas[gp];
        points.push(SimGridPoint {
            r2,
            c: *c,
            beta_norm_sq: beta.dot(beta),
            cells,
        });
    }
    Ok(SimResult {
        config: cfg.clone(),
        points,
        lambda_rule: cfg.lambda_rule.describe(),
        nonconverged: outcomes.iter().filter(|o| !o.lasso_converged).count(),
        degenerate_stein: outcomes.iter().filter(|o| o.stein_degenerate).count(),
    })
}

pub const RMSE_TABLE_HEADER: [&str; 5] = ["r2", "estimator", "mse", "rmse", "mc_se"];

/// One parsed line of an RMSE table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmseRow<F> {
    pub r2: F,
    pub estimator: Estimator,
    pub mse: F,
    pub rmse: F,
    pub mc_se: F,
}

pub fn rmse_rows<F: Scalar>(result: &SimResult<F>) -> Vec<RmseRow<F>> {
    result
        .points
        .iter()
        .flat_map(|pt| {
            pt.cells.iter().map(move |c| RmseRow {
                r2: pt.r2,
                estimator: c.estimator,
                mse: c.mse,
                rmse: c.rmse,
                mc_se: c.mc_standard_error,
            })
        })
        .collect()
}

/// Comma-separated `r2,estimator,mse,rmse,mc_se` with shortest round-trip numbers.
pub fn export_rmse_table<F: Scalar>(result: &SimResult<F>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RMSE_TABLE_HEADER)?;
    for r in rmse_rows(result) {
        w.write_record([
            r.r2.to_string(),
            r.estimator.name().to_string(),
            r.mse.to_string(),
            r.rmse.to_string(),
            r.mc_se.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn parse_rmse_table<F: Scalar>(text: &str) -> Result<Vec<RmseRow<F>>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != RMSE_TABLE_HEADER {
        return Err(Error::Schema(format!("unexpected RMSE table header {header:?}")));
    }
    let num = |rec: &csv::StringRecord, i: usize, line: usize| -> Result<F> {
        rec[i].parse::<F>().map_err(|_| Error::Data {
            line,
            column: RMSE_TABLE_HEADER[i].into(),
            message: format!("not a number: `{}`", &rec[i]),
        })
    };
    r.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec?;
            let line = i + 2;
            Ok(RmseRow {
                r2: num(&rec, 0, line)?,
                estimator: rec[1].parse()?,
                mse: num(&rec, 2, line)?,
                rmse: num(&rec, 3, line)?,
                mc_se: num(&rec, 4, line)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shrinkage::ShrinkageVariant;

    fn small(estimators: Vec<Estimator>) -> SimConfig<f64> {
        SimConfig {
            grid_points: 3,
            replications: 4,
            estimators,
            lambda_rule: LambdaRule::CvMin {
                folds: 5,
                count: 20,
                ratio: 1e-2,
            },
            ..SimConfig::new(30, 5, 0.5, 0.5)
        }
    }

    #[test]
    fn c_from_r2_values() {
        assert_eq!(c_from_r2(0.0).unwrap(), 0.0);
        assert_eq!(c_from_r2(0.5).unwrap(), 1.0);
        assert!((c_from_r2::<f64>(0.8).unwrap() - 2.0).abs() < 1e-15);
        assert!(c_from_r2(1.0).is_err());
        assert!(c_from_r2(-0.1).is_err());
    }

    #[test]
    fn coefficient_law() {
        assert!(coefficients_from_alpha(4, 0.5, 0.0).iter().all(|&b| b == 0.0));
        assert!((coefficients_from_alpha::<f64>(1, 1.0, 1.0)[0] - 2f64.sqrt()).abs() < 1e-15);
        let b = coefficients_from_alpha::<f64>(2, 0.5, 2.0);
        assert!((b[0] - 2.0).abs() < 1e-15);
        assert!((b[1] - 2.0 * 2f64.powf(-0.25)).abs() < 1e-15);
        let b = coefficients_from_alpha(10, 0.1, 1.0);
        assert!(b.windows(2).into_iter().all(|w| w[1] < w[0]));
    }

    #[test]
    fn replication_is_seed_deterministic() {
        let beta = coefficients_from_alpha(4, 0.5, 1.0);
        let a: Dataset<f64> = generate_replication(20, &beta, &mut stream(1, 1, 0));
        let b: Dataset<f64> = generate_replication(20, &beta, &mut stream(1, 1, 0));
        assert_eq!(a, b);
    }

    #[test]
    fn pure_noise_variance() {
        let beta = Array1::zeros(3);
        let n = 4000;
        let d: Dataset<f64> = generate_replication(n, &beta, &mut stream(3, 1, 0));
        let m = d.y().mean().unwrap();
        let var = d.y().iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64;
        assert!((var - 1.0).abs() < 3.0 / (n as f64).sqrt() * 2f64.sqrt());
    }

    #[test]
    fn config_validation() {
        let base = small(Estimator::all());
        assert!(base.validate().is_ok());
        assert!(SimConfig { p: 2, ..base.clone() }.validate().is_err());
        assert!(SimConfig { n: 5, ..base.clone() }.validate().is_err());
        assert!(SimConfig { r2_max: 1.0, ..base.clone() }.validate().is_err());
        assert!(SimConfig { grid_points: 1, ..base.clone() }.validate().is_err());
        assert!(SimConfig { replications: 0, ..base }.validate().is_err());
    }

    #[test]
    fn lasso_only_rmse_is_one() {
        let res = run_simulation(&small(vec![Estimator::Lasso])).unwrap();
        assert!(res.points.iter().all(|p| p.cells.len() == 1 && p.cells[0].rmse == 1.0));
        assert_eq!(res.points[0].r2, 0.0);
        assert_eq!(res.points[0].beta_norm_sq, 0.0);
    }

    #[test]
    fn deterministic_across_workers() {
        let cfg = small(Estimator::all());
        let a = run_simulation(&cfg).unwrap();
        let b = run_simulation(&SimConfig { workers: 4, ..cfg }).unwrap();
        assert_eq!(a.points, b.points);
        assert!(a.points.iter().flat_map(|p| &p.cells).all(|c| c.mse >= 0.0 && c.mse.is_finite()));
    }

    #[test]
    fn table_shape_and_round_trip() {
        let empty = run_simulation(&small(vec![])).unwrap();
        assert_eq!(export_rmse_table(&empty).unwrap(), "r2,estimator,mse,rmse,mc_se\n");

        let est = vec![Estimator::Lasso, Estimator::Shrunk(ShrinkageVariant::Prsl)];
        let res = run_simulation(&small(est)).unwrap();
        let text = export_rmse_table(&res).unwrap();
        let rows: Vec<RmseRow<f64>> = parse_rmse_table(&text).unwrap();
        assert_eq!(rows.len(), 3 * 2);
        assert_eq!(rows, rmse_rows(&res));
        assert!(parse_rmse_table::<f64>("a,b\n").is_err());
    }
}
