//! Small dense solves on cross-product matrices.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Pivots below this (after row/column equilibration) count as singular.
pub const PIVOT_TOL: f64 = 1e-10;

/// LU factorisation of an equilibrated square matrix `D_r A D_c`, kept so
/// several right-hand sides can be solved against the original `A`.
pub(crate) struct Factored {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    row_scale: DVector<f64>,
    col_scale: DVector<f64>,
}

impl Factored {
    /// Factors `a`, rejecting it when the smallest equilibrated pivot is
    /// below [`PIVOT_TOL`].
    pub(crate) fn new(a: &DMatrix<f64>) -> Result<Self> {
        let k = a.nrows();
        debug_assert_eq!(k, a.ncols());
        let row_scale = DVector::from_fn(k, |i, _| inv_norm(a.row(i).iter()));
        let col_scale = DVector::from_fn(k, |j, _| inv_norm(a.column(j).iter()));
        let scaled = DMatrix::from_fn(k, k, |i, j| a[(i, j)] * row_scale[i] * col_scale[j]);
        if scaled.iter().any(|v| !v.is_finite()) {
            return Err(Error::RankDeficient { smallest_pivot: f64::NAN });
        }
        let lu = scaled.lu();
        let smallest = lu
            .u()
            .diagonal()
            .iter()
            .fold(f64::INFINITY, |acc, p| acc.min(p.abs()));
        if !(smallest >= PIVOT_TOL) {
            return Err(Error::RankDeficient {
                smallest_pivot: smallest,
            });
        }
        Ok(Self {
            lu,
            row_scale,
            col_scale,
        })
    }

    /// Solves `A x = b`.
    pub(crate) fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let scaled_b = b.component_mul(&self.row_scale);
        let sol = self
            .lu
            .solve(&scaled_b)
            .expect("factor checked nonsingular");
        sol.component_mul(&self.col_scale)
    }

    pub(crate) fn inverse(&self) -> DMatrix<f64> {
        let k = self.row_scale.len();
        let mut out = DMatrix::zeros(k, k);
        for j in 0..k {
            let mut e = DVector::zeros(k);
            e[j] = 1.0;
            out.set_column(j, &self.solve(&e));
        }
        out
    }
}

fn inv_norm<'a>(it: impl Iterator<Item = &'a f64>) -> f64 {
    let m = it.fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if m > 0.0 {
        1.0 / m
    } else {
        f64::INFINITY
    }
}
