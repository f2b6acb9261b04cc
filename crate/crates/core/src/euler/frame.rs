use nalgebra::{DMatrix, DVector};

use crate::atlas::ChartId;
use crate::connection::MetricField;
use crate::error::{GeometryError, Result};

/// Columns are `g`-orthonormal vectors in the coordinate basis.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthonormalFrame {
    pub matrix: DMatrix<f64>,
    pub positive: bool,
}

impl OrthonormalFrame {
    /// `max |Fᵀ g F − Id|`.
    pub fn orthonormality_defect(&self, g: &DMatrix<f64>) -> f64 {
        let n = g.nrows();
        (self.matrix.transpose() * g * &self.matrix - DMatrix::<f64>::identity(n, n))
            .abs()
            .max()
    }
}

/// Gram–Schmidt on the coordinate basis vectors taken in `order`, with respect to `g`.
/// Column `k` of the result comes from `∂_{order[k]}`.
pub fn gram_schmidt(g: &DMatrix<f64>, order: &[usize]) -> Result<DMatrix<f64>> {
    let n = g.nrows();
    if order.len() != n {
        return Err(GeometryError::DimensionMismatch {
            expected: n,
            got: order.len(),
        });
    }
    let mut f = DMatrix::<f64>::zeros(n, n);
    for (k, &axis) in order.iter().enumerate() {
        let mut v = DVector::<f64>::zeros(n);
        v[axis] = 1.0;
        // modified Gram–Schmidt, applied twice for stability
        for _ in 0..2 {
            for j in 0..k {
                let e = f.column(j);
                let proj = (e.transpose() * g * &v)[(0, 0)];
                v -= proj * e;
            }
        }
        let norm2 = (v.transpose() * g * &v)[(0, 0)];
        if norm2.is_nan() || norm2 <= 0.0 || norm2.is_infinite() {
            return Err(GeometryError::NotPositiveDefinite(norm2));
        }
        f.set_column(k, &(v / norm2.sqrt()));
    }
    Ok(f)
}

/// Positively oriented orthonormal frame from Gram–Schmidt in coordinate order.
pub fn orthonormal_frame(
    metric: &MetricField,
    chart: ChartId,
    x: &[f64],
) -> Result<OrthonormalFrame> {
    let order: Vec<usize> = (0..metric.dim()).collect();
    orthonormal_frame_ordered(metric, chart, x, &order)
}

/// As [`orthonormal_frame`], with the coordinate vectors taken in `order`. The last column
/// is negated when needed so that `det F > 0`.
pub fn orthonormal_frame_ordered(
    metric: &MetricField,
    chart: ChartId,
    x: &[f64],
    order: &[usize],
) -> Result<OrthonormalFrame> {
    positive_frame(&metric.value(chart, x), order)
}

pub(crate) fn positive_frame(g: &DMatrix<f64>, order: &[usize]) -> Result<OrthonormalFrame> {
    let mut f = gram_schmidt(g, order)?;
    let n = f.ncols();
    if f.determinant() < 0.0 {
        let flipped = -f.column(n - 1);
        f.set_column(n - 1, &flipped);
    }
    Ok(OrthonormalFrame {
        positive: f.determinant() > 0.0,
        matrix: f,
    })
}
