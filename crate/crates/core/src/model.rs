//! Regression data model: raw datasets, centering/scaling and the Gram matrix.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A raw regression problem `y = b0 + X b + e`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<F> {
    y: Array1<F>,
    x: Array2<F>,
    feature_names: Vec<String>,
    row_labels: Option<Vec<String>>,
    train_flags: Option<Vec<bool>>,
}

impl<F: Scalar> Dataset<F> {
    pub fn new(x: Array2<F>, y: Array1<F>, feature_names: Vec<String>) -> Result<Self> {
        let (n, p) = x.dim();
        if n == 0 || p == 0 {
            return Err(Error::Dimension(format!(
                "design must have at least one row and one column, got {n}x{p}"
            )));
        }
        if y.len() != n {
            return Err(Error::Dimension(format!(
                "response has length {} but design has {n} rows",
                y.len()
            )));
        }
        if feature_names.len() != p {
            return Err(Error::Dimension(format!(
                "{} feature names for {p} columns",
                feature_names.len()
            )));
        }
        for (j, col) in x.axis_iter(Axis(1)).enumerate() {
            if let Some(row) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    column: feature_names[j].clone(),
                    row,
                });
            }
        }
        if let Some(row) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                column: "<response>".into(),
                row,
            });
        }
        Ok(Self {
            y,
            x,
            feature_names,
            row_labels: None,
            train_flags: None,
        })
    }

    /// Builds a dataset with generated names `x1..xp`.
    pub fn unnamed(x: Array2<F>, y: Array1<F>) -> Result<Self> {
        let names = (1..=x.ncols()).map(|j| format!("x{j}")).collect();
        Self::new(x, y, names)
    }

    pub fn with_row_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n() {
            return Err(Error::Dimension(format!(
                "{} row labels for {} rows",
                labels.len(),
                self.n()
            )));
        }
        self.row_labels = Some(labels);
        Ok(self)
    }

    pub fn with_train_flags(mut self, flags: Vec<bool>) -> Result<Self> {
        if flags.len() != self.n() {
            return Err(Error::Dimension(format!(
                "{} train flags for {} rows",
                flags.len(),
                self.n()
            )));
        }
        self.train_flags = Some(flags);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> ArrayView2<'_, F> {
        self.x.view()
    }

    pub fn y(&self) -> ArrayView1<'_, F> {
        self.y.view()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn row_labels(&self) -> Option<&[String]> {
        self.row_labels.as_deref()
    }

    pub fn train_flags(&self) -> Option<&[bool]> {
        self.train_flags.as_deref()
    }

    /// Rows in the given order; indices may repeat (bootstrap resampling).
    pub fn select_rows(&self, rows: &[usize]) -> Dataset<F> {
        let x = self.x.select(Axis(0), rows);
        let y = self.y.select(Axis(0), rows);
        Dataset {
            x,
            y,
            feature_names: self.feature_names.clone(),
            row_labels: self
                .row_labels
                .as_ref()
                .map(|l| rows.iter().map(|&i| l[i].clone()).collect()),
            train_flags: self
                .train_flags
                .as_ref()
                .map(|f| rows.iter().map(|&i| f[i]).collect()),
        }
    }
}

/// Centered (and optionally unit-scaled) copy of a [`Dataset`] together with
/// the statistics needed to map coefficients back to the original units.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedDataset<F> {
    x: Array2<F>,
    y: Array1<F>,
    column_means: Array1<F>,
    column_scales: Array1<F>,
    y_mean: F,
    scaled: bool,
    feature_names: Vec<String>,
}

impl<F: Scalar> StandardizedDataset<F> {
    pub fn x(&self) -> ArrayView2<'_, F> {
        self.x.view()
    }

    pub fn y(&self) -> ArrayView1<'_, F> {
        self.y.view()
    }

    pub fn column_means(&self) -> ArrayView1<'_, F> {
        self.column_means.view()
    }

    pub fn column_scales(&self) -> ArrayView1<'_, F> {
        self.column_scales.view()
    }

    pub fn y_mean(&self) -> F {
        self.y_mean
    }

    pub fn is_scaled(&self) -> bool {
        self.scaled
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Applies the stored centering/scaling to raw covariate rows.
    pub fn transform(&self, raw: ArrayView2<'_, F>) -> Result<Array2<F>> {
        if raw.ncols() != self.p() {
            return Err(Error::Dimension(format!(
                "expected {} columns, got {}",
                self.p(),
                raw.ncols()
            )));
        }
        let mut out = raw.to_owned();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (m, s) = (self.column_means[j], self.column_scales[j]);
            col.mapv_inplace(|v| (v - m) / s);
        }
        Ok(out)
    }

    /// Predictions on raw rows from slopes expressed on the standardized scale.
    pub fn predict_raw(&self, raw: ArrayView2<'_, F>, slopes: ArrayView1<'_, F>) -> Result<Array1<F>> {
        let xs = self.transform(raw)?;
        Ok(xs.dot(&slopes).mapv(|v| v + self.y_mean))
    }
}

/// Intercept and slopes in the original units of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector<F> {
    pub intercept: F,
    pub slopes: Array1<F>,
}

impl<F: Scalar> CoefficientVector<F> {
    pub fn predict(&self, x: ArrayView2<'_, F>) -> Result<Array1<F>> {
        if x.ncols() != self.slopes.len() {
            return Err(Error::Dimension(format!(
                "expected {} columns, got {}",
                self.slopes.len(),
                x.ncols()
            )));
        }
        Ok(x.dot(&self.slopes).mapv(|v| v + self.intercept))
    }
}

fn mean<F: Scalar>(v: ArrayView1<'_, F>) -> F {
    let n = F::from_usize_exact(v.len());
    let m = v.sum() / n;
    // second pass removes most of the rounding left by the first
    let corr = v.iter().map(|&x| x - m).sum::<F>() / n;
    m + corr
}

/// Centers every column of `X` and the response; optionally scales columns
/// to unit sample standard deviation (divisor `n - 1`).
pub fn standardize<F: Scalar>(d: &Dataset<F>, scale_columns: bool) -> Result<StandardizedDataset<F>> {
    let (n, p) = (d.n(), d.p());
    let mut x = d.x.clone();
    let mut means = Array1::zeros(p);
    let mut scales = Array1::ones(p);
    for (j, mut col) in x.axis_iter_mut(Axis(1)).enumerate() {
        let m = mean(col.view());
        means[j] = m;
        col.mapv_inplace(|v| v - m);
        if scale_columns {
            let max_abs = d.x.column(j).iter().fold(F::zero(), |a, &v| a.max(v.abs()));
            let ss: F = col.iter().map(|&v| v * v).sum();
            let sd = if n > 1 {
                (ss / F::from_usize_exact(n - 1)).sqrt()
            } else {
                F::zero()
            };
            if sd <= F::c(16.0) * F::epsilon() * max_abs || sd == F::zero() {
                return Err(Error::ZeroVariance(d.feature_names[j].clone()));
            }
            scales[j] = sd;
            col.mapv_inplace(|v| v / sd);
        }
    }
    let y_mean = mean(d.y.view());
    let y = d.y.mapv(|v| v - y_mean);
    Ok(StandardizedDataset {
        x,
        y,
        column_means: means,
        column_scales: scales,
        y_mean,
        scaled: scale_columns,
        feature_names: d.feature_names.clone(),
    })
}

/// Maps slopes fitted on the standardized design back to original units.
pub fn destandardize<F: Scalar>(
    fit_slopes: ArrayView1<'_, F>,
    sd: &StandardizedDataset<F>,
) -> Result<CoefficientVector<F>> {
    if fit_slopes.len() != sd.p() {
        return Err(Error::Dimension(format!(
            "{} slopes for {} columns",
            fit_slopes.len(),
            sd.p()
        )));
    }
    let slopes = Array1::from_iter(
        fit_slopes
            .iter()
            .zip(sd.column_scales.iter())
            .map(|(&b, &s)| b / s),
    );
    let shift: F = slopes
        .iter()
        .zip(sd.column_means.iter())
        .map(|(&b, &m)| b * m)
        .sum();
    Ok(CoefficientVector {
        intercept: sd.y_mean - shift,
        slopes,
    })
}

/// `X_c' X_c`, built from the upper triangle so the result is exactly symmetric.
pub fn gram<F: Scalar>(sd: &StandardizedDataset<F>) -> Array2<F> {
    gram_of(sd.x.view())
}

pub(crate) fn gram_of<F: Scalar>(x: ArrayView2<'_, F>) -> Array2<F> {
    let p = x.ncols();
    let mut g = Array2::zeros((p, p));
    for j in 0..p {
        for k in j..p {
            let v = x.column(j).dot(&x.column(k));
            g[[j, k]] = v;
            g[[k, j]] = v;
        }
    }
    g
}
