//! Dense least squares for the small designs used here.

use ndarray::{Array1, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Ordinary least-squares solution computed by a re-orthogonalized
/// modified Gram-Schmidt QR. Columns numerically dependent on earlier ones
/// are dropped, which yields the minimum-RSS projection even when `X` is
/// rank deficient (their coefficients are reported as zero).
#[derive(Debug, Clone)]
pub struct LeastSquares<F> {
    pub coefficients: Array1<F>,
    pub rss: F,
    pub rank: usize,
}

impl<F: Scalar> LeastSquares<F> {
    pub fn is_full_rank(&self) -> bool {
        self.rank == self.coefficients.len()
    }
}

pub fn least_squares<F: Scalar>(x: ArrayView2<'_, F>, y: ArrayView1<'_, F>) -> Result<LeastSquares<F>> {
    let (n, p) = x.dim();
    if y.len() != n {
        return Err(Error::Dimension(format!("response length {} vs {n} rows", y.len())));
    }
    let drop_tol = F::epsilon() * F::from_usize_exact(n.max(p)) * F::c(64.0);

    let mut q: Vec<Array1<F>> = Vec::with_capacity(p);
    let mut kept: Vec<usize> = Vec::with_capacity(p);
    // r[k][c] = coefficient of kept column c on basis vector k
    let mut r: Vec<Vec<F>> = Vec::with_capacity(p);

    for j in 0..p {
        let col = x.column(j);
        let col_norm = col.dot(&col).sqrt();
        let mut v = col.to_owned();
        let mut proj = vec![F::zero(); q.len()];
        for _ in 0..2 {
            for (k, qk) in q.iter().enumerate() {
                let c = qk.dot(&v);
                proj[k] = proj[k] + c;
                v.scaled_add(-c, qk);
            }
        }
        let norm = v.dot(&v).sqrt();
        if col_norm == F::zero() || norm <= drop_tol * col_norm {
            continue;
        }
        v.mapv_inplace(|e| e / norm);
        for (k, c) in proj.into_iter().enumerate() {
            r[k].push(c);
        }
        let mut row = vec![F::zero(); kept.len()];
        row.push(norm);
        r.push(row);
        q.push(v);
        kept.push(j);
    }

    let mut resid = y.to_owned();
    let mut qty = vec![F::zero(); q.len()];
    for _ in 0..2 {
        for (k, qk) in q.iter().enumerate() {
            let c = qk.dot(&resid);
            qty[k] = qty[k] + c;
            resid.scaled_add(-c, qk);
        }
    }
    let rss = resid.dot(&resid);

    // back substitution on the kept block: r[k][c] is upper triangular in (k, c)
    let m = kept.len();
    let mut b = vec![F::zero(); m];
    for k in (0..m).rev() {
        let mut acc = qty[k];
        for c in (k + 1)..m {
            acc = acc - r[k][c] * b[c];
        }
        b[k] = acc / r[k][k];
    }
    let mut coefficients = Array1::zeros(p);
    for (c, &j) in kept.iter().enumerate() {
        coefficients[j] = b[c];
    }
    Ok(LeastSquares {
        coefficients,
        rss,
        rank: m,
    })
}
