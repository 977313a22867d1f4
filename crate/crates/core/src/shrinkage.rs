//! Stein-type rescaling of a LASSO fit.
//!
//! Every variant multiplies all LASSO slopes by one common factor built from
//! the Stein constant `a = (n-p)(p-2)/(n-p+2)` and the signal statistic
//! `W_n = b' X'X b / sigma2_hat`:
//!
//! | variant  | factor                         |
//! |----------|--------------------------------|
//! | SL       | `1 - a / W`                    |
//! | PRSL     | `max(0, 1 - a / W)`            |
//! | SL2      | `1 - a / (W + 1)`              |
//! | SL3(sqrt)| `1 - a * sqrt(W) / W`          |
//! | SL3(log) | `1 - a * ln|W| / W`            |

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1};
use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::lasso::LassoFit;
use crate::linalg::least_squares;
use crate::model::{gram, StandardizedDataset};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ShrinkageVariant {
    Sl,
    Prsl,
    Sl2,
    Sl3Sqrt,
    Sl3Log,
}

impl ShrinkageVariant {
    pub const ALL: [ShrinkageVariant; 5] = [
        ShrinkageVariant::Sl,
        ShrinkageVariant::Prsl,
        ShrinkageVariant::Sl2,
        ShrinkageVariant::Sl3Sqrt,
        ShrinkageVariant::Sl3Log,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ShrinkageVariant::Sl => "SL",
            ShrinkageVariant::Prsl => "PRSL",
            ShrinkageVariant::Sl2 => "SL2",
            ShrinkageVariant::Sl3Sqrt => "SL3_SQRT",
            ShrinkageVariant::Sl3Log => "SL3_LOG",
        }
    }

    /// Multiplicative factor, or `None` when `W = 0` makes it undefined.
    pub fn factor<F: Scalar>(self, a: F, w: F) -> Option<F> {
        let one = F::one();
        match self {
            ShrinkageVariant::Sl2 => Some(one - a / (w + one)),
            _ if w == F::zero() => None,
            ShrinkageVariant::Sl => Some(one - a / w),
            ShrinkageVariant::Prsl => Some((one - a / w).max(F::zero())),
            ShrinkageVariant::Sl3Sqrt => Some(one - a * w.sqrt() / w),
            ShrinkageVariant::Sl3Log => Some(one - a * w.abs().ln() / w),
        }
    }
}

impl fmt::Display for ShrinkageVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ShrinkageVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace(['-', '(', ')'], "_");
        match norm.trim_end_matches('_') {
            "SL" => Ok(ShrinkageVariant::Sl),
            "PRSL" => Ok(ShrinkageVariant::Prsl),
            "SL2" => Ok(ShrinkageVariant::Sl2),
            "SL3_SQRT" | "SL3SQRT" => Ok(ShrinkageVariant::Sl3Sqrt),
            "SL3_LOG" | "SL3LOG" => Ok(ShrinkageVariant::Sl3Log),
            _ => Err(Error::Config(format!(
                "unknown shrinkage variant `{s}` (expected SL, PRSL, SL2, SL3_SQRT or SL3_LOG)"
            ))),
        }
    }
}

/// `a = (n-p)(p-2)/(n-p+2)` as an exact fraction.
pub fn stein_constant_exact(n: usize, p: usize) -> Result<Ratio<u64>> {
    if p < 3 {
        return Err(Error::Domain(format!(
            "Stein shrinkage needs at least 3 coefficients, got p = {p}"
        )));
    }
    if n <= p {
        return Err(Error::Domain(format!(
            "Stein constant needs n > p, got n = {n}, p = {p}"
        )));
    }
    let (n, p) = (n as u64, p as u64);
    Ok(Ratio::new((n - p) * (p - 2), n - p + 2))
}

pub fn stein_constant<F: Scalar>(n: usize, p: usize) -> Result<F> {
    let r = stein_constant_exact(n, p)?;
    Ok(F::c(*r.numer() as f64) / F::c(*r.denom() as f64))
}

/// Residual variance estimate together with rank information.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sigma2<F> {
    pub value: F,
    pub rank: usize,
    /// Set when the design was rank deficient and a minimum-norm projection was used.
    pub rank_deficient: bool,
}

/// OLS residual variance `RSS / (n - p)` on the centered design.
pub fn sigma2_hat<F: Scalar>(sd: &StandardizedDataset<F>) -> Result<Sigma2<F>> {
    let (n, p) = (sd.n(), sd.p());
    if n <= p {
        return Err(Error::Domain(format!(
            "residual variance needs n > p, got n = {n}, p = {p}"
        )));
    }
    let ls = least_squares(sd.x(), sd.y())?;
    // residuals at rounding level mean an exact fit
    let floor = (F::epsilon() * F::c(64.0) * F::from_usize_exact(n)).powi(2) * sd.y().dot(&sd.y());
    let rss = if ls.rss <= floor { F::zero() } else { ls.rss };
    Ok(Sigma2 {
        value: rss / F::from_usize_exact(n - p),
        rank: ls.rank,
        rank_deficient: !ls.is_full_rank(),
    })
}

/// `W_n = b' G b / sigma2`.
pub fn wn_statistic<F: Scalar>(slopes: ArrayView1<'_, F>, g: &Array2<F>, sigma2: F) -> Result<F> {
    if !(sigma2 > F::zero()) {
        return Err(Error::Domain(format!("sigma2 must be > 0, got {sigma2}")));
    }
    if g.dim() != (slopes.len(), slopes.len()) {
        return Err(Error::Dimension(format!(
            "Gram matrix is {:?}, slopes have length {}",
            g.dim(),
            slopes.len()
        )));
    }
    let q = slopes.dot(&g.dot(&slopes));
    Ok(q.max(F::zero()) / sigma2)
}

/// Constants shared by every shrinkage variant for one fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteinInputs<F> {
    pub a: F,
    pub w: F,
    pub sigma2: F,
    pub n: usize,
    pub p: usize,
    pub rank_deficient: bool,
}

impl<F: Scalar> SteinInputs<F> {
    /// Computes `a`, `sigma2_hat` and `W_n` for `fit` on `sd`.
    pub fn from_fit(sd: &StandardizedDataset<F>, fit: &LassoFit<F>) -> Result<Self> {
        let g = gram(sd);
        Self::from_parts(sd, fit, &g)
    }

    /// Same as [`from_fit`](Self::from_fit) with a precomputed Gram matrix.
    pub fn from_parts(sd: &StandardizedDataset<F>, fit: &LassoFit<F>, g: &Array2<F>) -> Result<Self> {
        let (n, p) = (sd.n(), sd.p());
        if fit.slopes.len() != p {
            return Err(Error::Dimension(format!("fit has {} slopes for p = {p}", fit.slopes.len())));
        }
        let a = stein_constant(n, p)?;
        let s2 = sigma2_hat(sd)?;
        if !(s2.value > F::zero()) {
            return Err(Error::Numerical(
                "least-squares residual variance is zero; W_n is undefined".into(),
            ));
        }
        let w = wn_statistic(fit.slopes.view(), g, s2.value)?;
        Ok(Self {
            a,
            w,
            sigma2: s2.value,
            n,
            p,
            rank_deficient: s2.rank_deficient,
        })
    }
}

/// A LASSO fit after multiplicative Stein-type shrinkage.
#[derive(Debug, Clone, PartialEq)]
pub struct ShrunkenFit<F> {
    pub base: LassoFit<F>,
    pub variant: ShrinkageVariant,
    pub factor: F,
    pub slopes: Array1<F>,
    pub inputs: SteinInputs<F>,
    /// `W_n = 0`: the variant is undefined and the zero vector is returned.
    pub degenerate_w: bool,
    /// The factor exceeds 1 (SL3 with `ln` and `0 < W_n < 1`).
    pub expansion: bool,
}

impl<F: Scalar> ShrunkenFit<F> {
    /// Intercept on the centered scale: `y_mean`, multiplied by the factor
    /// when `shrink_intercept` is set.
    pub fn intercept(&self, y_mean: F, shrink_intercept: bool) -> F {
        if shrink_intercept {
            self.factor * y_mean
        } else {
            y_mean
        }
    }
}

pub fn shrink<F: Scalar>(fit: &LassoFit<F>, variant: ShrinkageVariant, inputs: &SteinInputs<F>) -> ShrunkenFit<F> {
    let (factor, degenerate_w) = match variant.factor(inputs.a, inputs.w) {
        Some(f) => (f, false),
        None => (F::zero(), true),
    };
    ShrunkenFit {
        base: fit.clone(),
        variant,
        factor,
        slopes: fit.slopes.mapv(|b| factor * b),
        inputs: *inputs,
        degenerate_w,
        expansion: factor > F::one(),
    }
}

/// `||g(b)||^2 + 2 div g(b)` for `g(b) = -(a sigma2 / b'Gb) b`, with the
/// divergence taken by central differences of width `2 * step`. Negative
/// values certify the risk-improvement inequality at `b`.
pub fn stein_condition_value<F: Scalar>(
    slopes: ArrayView1<'_, F>,
    g: &Array2<F>,
    sigma2: F,
    a: F,
    step: F,
) -> Result<F> {
    let p = slopes.len();
    if g.dim() != (p, p) {
        return Err(Error::Dimension(format!("Gram matrix is {:?} for p = {p}", g.dim())));
    }
    if !(step > F::zero()) {
        return Err(Error::Domain(format!("finite-difference step must be > 0, got {step}")));
    }
    let coef = a * sigma2;
    let quad = |b: &Array1<F>| b.dot(&g.dot(b));
    let q0 = quad(&slopes.to_owned());
    if !(q0 > F::zero()) {
        return Err(Error::Domain("b'Gb = 0 (all-zero fit); g is singular".into()));
    }
    let gfun = |b: &Array1<F>, j: usize| -coef / quad(b) * b[j];

    let norm_sq = slopes.dot(&slopes) * (coef / q0) * (coef / q0);
    let two = F::c(2.0);
    let mut div = F::zero();
    let mut b = slopes.to_owned();
    for j in 0..p {
        let orig = b[j];
        b[j] = orig + step;
        let plus = gfun(&b, j);
        b[j] = orig - step;
        let minus = gfun(&b, j);
        b[j] = orig;
        div = div + (plus - minus) / (two * step);
    }
    Ok(norm_sq + two * div)
}
