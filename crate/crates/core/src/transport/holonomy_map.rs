use nalgebra::DMatrix;
use serde::Serialize;

use super::curve::Curve;
use super::ode::OdeTolerance;
use super::parallel::{holonomy, matrix_rows};
use crate::connection::{convex_combine, ChristoffelField};
use crate::error::{GeometryError, Result};

#[derive(Clone, Debug, Serialize)]
pub struct PairEvidence {
    /// Pairs whose first holonomies agree within `epsilon`.
    pub pairs: usize,
    /// Largest disagreement of the second holonomies over those pairs.
    pub max_defect: f64,
}

/// Evidence about the map `A_t : H_{D(t)}(γ) ↦ H_D(γ)` over a family of co-based loops.
#[derive(Clone, Debug, Serialize)]
pub struct HolonomyMapReport {
    pub t: f64,
    pub epsilon: f64,
    pub loops: usize,
    pub holonomy_t: Vec<Vec<Vec<f64>>>,
    pub holonomy_d: Vec<Vec<Vec<f64>>>,
    /// `H_{D(t)}(α) ≈ H_{D(t)}(β) ⇒ H_D(α) ≈ H_D(β)`.
    pub well_defined: PairEvidence,
    /// `H_D(α) ≈ H_D(β) ⇒ H_{D(t)}(α) ≈ H_{D(t)}(β)`.
    pub injective: PairEvidence,
    /// `max ‖H(α·β) − H(β) H(α)‖` over consecutive loop pairs, for both connections.
    pub homomorphism_defect: f64,
}

fn frobenius_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm()
}

fn pair_evidence(first: &[DMatrix<f64>], second: &[DMatrix<f64>], eps: f64) -> PairEvidence {
    let mut pairs = 0;
    let mut max_defect = 0.0_f64;
    for i in 0..first.len() {
        for j in i + 1..first.len() {
            if frobenius_diff(&first[i], &first[j]) <= eps {
                pairs += 1;
                max_defect = max_defect.max(frobenius_diff(&second[i], &second[j]));
            }
        }
    }
    PairEvidence { pairs, max_defect }
}

/// Computes `H_{D(t)}` and `H_D` for every loop, with `D(t) = (1 − t)∇ + tD`, and
/// gathers evidence that `A_t` is a well-defined injective homomorphism.
pub fn holonomy_map_experiment(
    conn_nabla: &ChristoffelField,
    conn_d: &ChristoffelField,
    t: f64,
    loops: &[Curve],
    tol: &OdeTolerance,
    epsilon: f64,
) -> Result<HolonomyMapReport> {
    let Some(first) = loops.first() else {
        return Err(GeometryError::InvalidParameter("no loops supplied".into()));
    };
    let (c0, p0) = first.start();
    for l in loops {
        let (c, p) = l.start();
        let gap = p
            .iter()
            .zip(&p0)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        if c != c0 || gap > 1e-10 * p0.iter().fold(1.0_f64, |m, v| m.max(v.abs())) {
            return Err(GeometryError::LoopsNotCoBased);
        }
    }
    let conn_t = convex_combine(conn_nabla, conn_d, t)?;
    let h_t = loops
        .iter()
        .map(|l| Ok(holonomy(&conn_t, l, tol)?.matrix))
        .collect::<Result<Vec<_>>>()?;
    let h_d = loops
        .iter()
        .map(|l| Ok(holonomy(conn_d, l, tol)?.matrix))
        .collect::<Result<Vec<_>>>()?;

    let mut homomorphism_defect = 0.0_f64;
    for i in 0..loops.len().saturating_sub(1) {
        let joined = loops[i].then(&loops[i + 1])?;
        for (conn, h) in [(&conn_t, &h_t), (conn_d, &h_d)] {
            let product = holonomy(conn, &joined, tol)?.matrix;
            homomorphism_defect =
                homomorphism_defect.max(frobenius_diff(&product, &(&h[i + 1] * &h[i])));
        }
    }

    Ok(HolonomyMapReport {
        t,
        epsilon,
        loops: loops.len(),
        holonomy_t: h_t.iter().map(matrix_rows).collect(),
        holonomy_d: h_d.iter().map(matrix_rows).collect(),
        well_defined: pair_evidence(&h_t, &h_d, epsilon),
        injective: pair_evidence(&h_d, &h_t, epsilon),
        homomorphism_defect,
    })
}
