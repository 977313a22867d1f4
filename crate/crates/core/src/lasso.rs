//! LASSO by cyclic coordinate descent.
//!
//! The objective is the unnormalized penalized residual sum of squares
//!
//! ```text
//! Q(b) = sum_i (y_i - x_i' b)^2 + lambda * sum_j |b_j|
//! ```
//!
//! on a centered design, so `lambda` keeps the scale of the raw criterion.
//! In the more common `1/(2n) * RSS + alpha * |b|_1` convention the same fit
//! is obtained with `alpha = lambda / (2n)`.
//!
//! Each coordinate update is `b_j <- S(rho_j, lambda/2) / (x_j' x_j)` with
//! `rho_j = x_j'(y - X b) + x_j' x_j b_j` and `S` the soft-threshold
//! operator. Updates work on the Gram matrix `X'X` and `X'y` so a sweep costs
//! `O(p^2)` regardless of `n`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::model::{gram_of, StandardizedDataset};
use crate::scalar::{sign, Scalar};

/// `sign(z) * max(|z| - t, 0)`.
pub fn soft_threshold<F: Scalar>(z: F, t: F) -> F {
    debug_assert!(t >= F::zero());
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        F::zero()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoConfig<F> {
    pub lambda: F,
    /// Convergence threshold on the largest absolute coefficient change in a sweep.
    pub tol: F,
    pub max_sweeps: usize,
}

impl<F: Scalar> Default for LassoConfig<F> {
    fn default() -> Self {
        Self {
            lambda: F::zero(),
            // 1e-7 in double precision; single precision cannot resolve that
            tol: F::c(1e-7).max(F::epsilon() * F::c(64.0)),
            max_sweeps: 10_000,
        }
    }
}

impl<F: Scalar> LassoConfig<F> {
    pub fn new(lambda: F, tol: F, max_sweeps: usize) -> Result<Self> {
        let cfg = Self {
            lambda,
            tol,
            max_sweeps,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_lambda(self, lambda: F) -> Self {
        Self { lambda, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= F::zero()) || !self.lambda.is_finite() {
            return Err(Error::Config(format!("lambda must be finite and >= 0, got {}", self.lambda)));
        }
        if !(self.tol > F::zero()) {
            return Err(Error::Config(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_sweeps == 0 {
            return Err(Error::Config("max_sweeps must be >= 1".into()));
        }
        Ok(())
    }
}

/// Solver output at one penalty value.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit<F> {
    pub slopes: Array1<F>,
    pub lambda: F,
    pub sweeps_used: usize,
    pub converged: bool,
    pub objective: F,
}

impl<F: Scalar> LassoFit<F> {
    pub fn l1_norm(&self) -> F {
        self.slopes.iter().map(|b| b.abs()).sum()
    }

    /// Indices of nonzero slopes.
    pub fn support(&self) -> Vec<usize> {
        self.slopes
            .iter()
            .enumerate()
            .filter(|(_, b)| **b != F::zero())
            .map(|(j, _)| j)
            .collect()
    }
}

/// Sufficient statistics of a centered least-squares problem.
#[derive(Debug, Clone)]
pub struct LassoProblem<F> {
    gram: Array2<F>,
    xty: Array1<F>,
    yty: F,
}

impl<F: Scalar> LassoProblem<F> {
    pub fn new(x: ArrayView2<'_, F>, y: ArrayView1<'_, F>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::Dimension(format!(
                "design has {} rows, response has {}",
                x.nrows(),
                y.len()
            )));
        }
        Ok(Self {
            gram: gram_of(x),
            xty: x.t().dot(&y),
            yty: y.dot(&y),
        })
    }

    pub fn from_standardized(sd: &StandardizedDataset<F>) -> Self {
        Self::new(sd.x(), sd.y()).expect("standardized dataset has consistent dimensions")
    }

    pub fn p(&self) -> usize {
        self.xty.len()
    }

    pub fn gram(&self) -> &Array2<F> {
        &self.gram
    }

    pub fn xty(&self) -> &Array1<F> {
        &self.xty
    }

    /// Smallest penalty at which the all-zero vector is optimal: `2 max_j |x_j'y|`.
    pub fn lambda_max(&self) -> F {
        F::c(2.0) * self.xty.iter().fold(F::zero(), |m, v| m.max(v.abs()))
    }

    pub fn rss(&self, beta: ArrayView1<'_, F>) -> F {
        let gb = self.gram.dot(&beta);
        (self.yty - F::c(2.0) * beta.dot(&self.xty) + beta.dot(&gb)).max(F::zero())
    }

    pub fn objective(&self, beta: ArrayView1<'_, F>, lambda: F) -> F {
        self.rss(beta) + lambda * beta.iter().map(|b| b.abs()).sum::<F>()
    }

    pub fn fit(&self, cfg: &LassoConfig<F>, warm_start: Option<ArrayView1<'_, F>>) -> Result<LassoFit<F>> {
        self.fit_impl(cfg, warm_start, None)
    }

    /// Like [`fit`](Self::fit) but also returns the objective after every sweep
    /// (the first entry is the objective at the starting point).
    pub fn fit_traced(
        &self,
        cfg: &LassoConfig<F>,
        warm_start: Option<ArrayView1<'_, F>>,
    ) -> Result<(LassoFit<F>, Vec<F>)> {
        let mut trace = Vec::new();
        let fit = self.fit_impl(cfg, warm_start, Some(&mut trace))?;
        Ok((fit, trace))
    }

    fn fit_impl(
        &self,
        cfg: &LassoConfig<F>,
        warm_start: Option<ArrayView1<'_, F>>,
        mut trace: Option<&mut Vec<F>>,
    ) -> Result<LassoFit<F>> {
        cfg.validate()?;
        let p = self.p();
        let mut beta = match warm_start {
            Some(w) if w.len() != p => {
                return Err(Error::Dimension(format!("warm start has length {}, expected {p}", w.len())))
            }
            Some(w) => w.to_owned(),
            None => Array1::zeros(p),
        };
        let half_lambda = cfg.lambda / F::c(2.0);
        // corr = X'y - X'X beta
        let mut corr = &self.xty - &self.gram.dot(&beta);

        let mut last_obj = F::zero();
        if let Some(t) = trace.as_deref_mut() {
            last_obj = self.objective(beta.view(), cfg.lambda);
            t.push(last_obj);
        }
        let mut converged = false;
        let mut sweeps = 0;
        while sweeps < cfg.max_sweeps {
            sweeps += 1;
            let mut max_change = F::zero();
            for j in 0..p {
                let gjj = self.gram[[j, j]];
                let old = beta[j];
                let new = if gjj > F::zero() {
                    soft_threshold(corr[j] + gjj * old, half_lambda) / gjj
                } else {
                    F::zero()
                };
                let delta = new - old;
                if delta != F::zero() {
                    beta[j] = new;
                    corr.scaled_add(-delta, &self.gram.column(j));
                    max_change = max_change.max(delta.abs());
                }
            }
            if let Some(t) = trace.as_deref_mut() {
                let obj = self.objective(beta.view(), cfg.lambda);
                let slack = F::epsilon() * F::c(1e3) * (F::one() + last_obj.abs() + self.yty);
                debug_assert!(
                    obj <= last_obj + slack,
                    "objective increased from {last_obj} to {obj} at sweep {sweeps}"
                );
                t.push(obj);
                last_obj = obj;
            }
            if max_change < cfg.tol {
                converged = true;
                break;
            }
        }
        let objective = self.objective(beta.view(), cfg.lambda);
        Ok(LassoFit {
            slopes: beta,
            lambda: cfg.lambda,
            sweeps_used: sweeps,
            converged,
            objective,
        })
    }

    /// Largest coordinate-wise optimality residual of `beta` at `lambda`,
    /// expressed in coefficient units: `|b_j - S(rho_j, lambda/2) / x_j'x_j|`.
    /// Zero exactly when the KKT conditions hold.
    pub fn kkt_violation(&self, beta: ArrayView1<'_, F>, lambda: F) -> F {
        let corr = &self.xty - &self.gram.dot(&beta);
        let half = lambda / F::c(2.0);
        (0..self.p())
            .map(|j| {
                let gjj = self.gram[[j, j]];
                if gjj > F::zero() {
                    (beta[j] - soft_threshold(corr[j] + gjj * beta[j], half) / gjj).abs()
                } else {
                    beta[j].abs()
                }
            })
            .fold(F::zero(), F::max)
    }

    /// KKT residual in gradient units: `|dRSS/db_j + lambda sign(b_j)|` on the
    /// support and `max(0, |dRSS/db_j| - lambda)` off it.
    pub fn kkt_gradient_violation(&self, beta: ArrayView1<'_, F>, lambda: F) -> F {
        let corr = &self.xty - &self.gram.dot(&beta);
        (0..self.p())
            .map(|j| {
                let grad = -F::c(2.0) * corr[j];
                if beta[j] != F::zero() {
                    (grad + lambda * sign(beta[j])).abs()
                } else {
                    (grad.abs() - lambda).max(F::zero())
                }
            })
            .fold(F::zero(), F::max)
    }

    /// Log-spaced decreasing penalties from `lambda_max` to `ratio * lambda_max`.
    pub fn lambda_grid(&self, count: usize, ratio: F) -> Result<Vec<F>> {
        if count < 2 {
            return Err(Error::Config(format!("grid count must be >= 2, got {count}")));
        }
        if !(ratio > F::zero() && ratio < F::one()) {
            return Err(Error::Config(format!("grid ratio must lie in (0, 1), got {ratio}")));
        }
        let lmax = self.lambda_max();
        if !(lmax > F::zero()) {
            return Err(Error::Domain("response is orthogonal to every column; lambda_max = 0".into()));
        }
        let last = F::from_usize_exact(count - 1);
        let mut grid: Vec<F> = (0..count)
            .map(|k| lmax * ratio.powf(F::from_usize_exact(k) / last))
            .collect();
        grid[0] = lmax;
        grid[count - 1] = ratio * lmax;
        Ok(grid)
    }

    /// Warm-started fits along a strictly decreasing penalty grid.
    pub fn path(&self, grid: &[F], cfg: &LassoConfig<F>) -> Result<LassoPath<F>> {
        if grid.is_empty() {
            return Err(Error::Config("empty lambda grid".into()));
        }
        if grid.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::Config("lambda grid must be strictly decreasing".into()));
        }
        let mut fits: Vec<LassoFit<F>> = Vec::with_capacity(grid.len());
        for &lambda in grid {
            let warm = fits.last().map(|f| f.slopes.view());
            let fit = self.fit(&cfg.with_lambda(lambda), warm)?;
            fits.push(fit);
        }
        Ok(LassoPath::from_fits(fits))
    }

    /// Fit whose standardized bound equals `target` relative to the
    /// densest fit of `path`. Solved by safeguarded false position on
    /// `lambda` between the two path points that bracket the target.
    pub fn fit_at_s(&self, path: &LassoPath<F>, target: F, cfg: &LassoConfig<F>) -> Result<PathPoint<F>> {
        let pts = path.points();
        if target <= F::zero() || pts.len() == 1 {
            return Ok(pts[0].clone());
        }
        let reference = path.reference_norm();
        if target >= pts[pts.len() - 1].s {
            return Ok(pts[pts.len() - 1].clone());
        }
        // first point with s >= target; the one before has s < target
        let hi_idx = pts.iter().position(|pt| pt.s >= target).expect("target below last s");
        if pts[hi_idx].s == target {
            return Ok(pts[hi_idx].clone());
        }
        let (mut lo, mut hi) = (pts[hi_idx - 1].clone(), pts[hi_idx].clone());
        let s_tol = F::c(1e-9).max(F::epsilon() * F::c(16.0));
        let mut best = if (lo.s - target).abs() < (hi.s - target).abs() { lo.clone() } else { hi.clone() };
        for iter in 0..200 {
            // lo: larger lambda, s below target; hi: smaller lambda, s above
            let width = lo.lambda - hi.lambda;
            if width <= F::epsilon() * lo.lambda {
                break;
            }
            let lambda = if iter % 3 == 2 {
                (lo.lambda + hi.lambda) / F::c(2.0)
            } else {
                let t = (target - lo.s) / (hi.s - lo.s);
                let l = lo.lambda - t * width;
                l.max(hi.lambda + width * F::c(1e-3)).min(lo.lambda - width * F::c(1e-3))
            };
            let fit = self.fit(&cfg.with_lambda(lambda), Some(hi.fit.slopes.view()))?;
            let s = s_value(&fit, reference);
            let pt = PathPoint { lambda, s, fit };
            if (pt.s - target).abs() < (best.s - target).abs() {
                best = pt.clone();
            }
            if (pt.s - target).abs() <= s_tol {
                break;
            }
            if pt.s < target {
                lo = pt;
            } else {
                hi = pt;
            }
        }
        Ok(best)
    }

    /// Path evaluated at increasing standardized bounds `s_grid`, using a
    /// dense penalty path to bracket each target. Every returned point
    /// carries `s` measured against the densest fit of the penalty path.
    pub fn path_at_s(&self, penalty_path: &LassoPath<F>, s_grid: &[F], cfg: &LassoConfig<F>) -> Result<LassoPath<F>> {
        if s_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("s grid must be strictly increasing".into()));
        }
        let reference = penalty_path.reference_norm();
        let points = s_grid
            .iter()
            .map(|&s| self.fit_at_s(penalty_path, s, cfg))
            .collect::<Result<Vec<_>>>()?;
        Ok(LassoPath { points, reference })
    }
}

/// `||slopes||_1 / reference_norm`, or 0 when the reference is 0.
pub fn s_value<F: Scalar>(fit: &LassoFit<F>, reference_norm: F) -> F {
    if reference_norm == F::zero() {
        F::zero()
    } else {
        fit.l1_norm() / reference_norm
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathPoint<F> {
    pub lambda: F,
    pub fit: LassoFit<F>,
    pub s: F,
}

/// Fits ordered by decreasing penalty with their standardized bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoPath<F> {
    points: Vec<PathPoint<F>>,
    reference: F,
}

impl<F: Scalar> LassoPath<F> {
    fn from_fits(fits: Vec<LassoFit<F>>) -> Self {
        let reference = fits.last().map(|f| f.l1_norm()).unwrap_or_else(F::zero);
        let points = fits
            .into_iter()
            .map(|fit| PathPoint {
                lambda: fit.lambda,
                s: s_value(&fit, reference),
                fit,
            })
            .collect();
        Self { points, reference }
    }

    pub fn points(&self) -> &[PathPoint<F>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// L1 norm of the densest fit, the denominator of every `s`.
    pub fn reference_norm(&self) -> F {
        self.reference
    }

    pub fn s_values(&self) -> Vec<F> {
        self.points.iter().map(|p| p.s).collect()
    }
}

pub fn fit_lasso<F: Scalar>(
    sd: &StandardizedDataset<F>,
    cfg: &LassoConfig<F>,
    warm_start: Option<ArrayView1<'_, F>>,
) -> Result<LassoFit<F>> {
    LassoProblem::from_standardized(sd).fit(cfg, warm_start)
}

pub fn lambda_grid<F: Scalar>(sd: &StandardizedDataset<F>, count: usize, ratio: F) -> Result<Vec<F>> {
    LassoProblem::from_standardized(sd).lambda_grid(count, ratio)
}

pub fn compute_path<F: Scalar>(
    sd: &StandardizedDataset<F>,
    grid: &[F],
    cfg: &LassoConfig<F>,
) -> Result<LassoPath<F>> {
    LassoProblem::from_standardized(sd).path(grid, cfg)
}
