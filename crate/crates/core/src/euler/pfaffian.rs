use nalgebra::DMatrix;

use super::curvature::CurvatureMatrix;
use super::forms::Form;
use crate::error::{GeometryError, Result};

/// Largest `|Ω_ab + Ω_ba|` accepted by [`pfaffian`].
pub const SKEW_TOLERANCE: f64 = 1e-6;

/// Pfaffian by expansion along the first row, `Pf(A) = Σ_j (−1)^{j+1} a_0j Pf(A_{0̂ĵ})`,
/// for any entries that commute under `mul`.
fn expand<T: Clone>(
    entries: &dyn Fn(usize, usize) -> T,
    rows: &[usize],
    one: &T,
    mul: &dyn Fn(&T, &T) -> T,
    add: &dyn Fn(&T, &T, f64) -> T,
) -> T {
    if rows.is_empty() {
        return one.clone();
    }
    let first = rows[0];
    let mut acc: Option<T> = None;
    for (pos, &j) in rows.iter().enumerate().skip(1) {
        let rest: Vec<usize> = rows[1..].iter().copied().filter(|&r| r != j).collect();
        let term = mul(&entries(first, j), &expand(entries, &rest, one, mul, add));
        let sign = if pos % 2 == 1 { 1.0 } else { -1.0 };
        acc = Some(match acc {
            None => add(&mul(&term, one), &term, sign - 1.0),
            Some(a) => add(&a, &term, sign),
        });
    }
    acc.expect("even number of rows")
}

/// Pfaffian of a real skew matrix, normalised so that `[[0, 1], [−1, 0]]` has Pfaffian 1.
pub fn pfaffian_scalar(m: &DMatrix<f64>) -> Result<f64> {
    let n = m.nrows();
    if n % 2 == 1 {
        return Err(GeometryError::OddDimension(n));
    }
    let skew = (m + m.transpose()).abs().max();
    if skew > SKEW_TOLERANCE {
        return Err(GeometryError::SkewnessViolation(skew));
    }
    let rows: Vec<usize> = (0..n).collect();
    Ok(expand(
        &|i, j| m[(i, j)],
        &rows,
        &1.0,
        &|a, b| a * b,
        &|a, b, s| a + s * b,
    ))
}

/// `Pf(Ω)` as a top-degree form, the wedge analogue of [`pfaffian_scalar`].
pub fn pfaffian(omega: &CurvatureMatrix) -> Result<Form> {
    let n = omega.n;
    if n % 2 == 1 {
        return Err(GeometryError::OddDimension(n));
    }
    let skew = omega.skew_defect();
    if skew > SKEW_TOLERANCE {
        return Err(GeometryError::SkewnessViolation(skew));
    }
    let forms: Vec<Vec<Form>> = (0..n)
        .map(|a| (0..n).map(|b| omega.form(a, b)).collect())
        .collect();
    let rows: Vec<usize> = (0..n).collect();
    Ok(expand(
        &|i, j| forms[i][j].clone(),
        &rows,
        &Form::scalar(n, 1.0),
        &|a, b| a.wedge(b),
        &|a, b, s| a + &(b * s),
    ))
}
