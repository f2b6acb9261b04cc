//! Differential forms at a point, with coefficients over the coordinate co-basis.

use std::ops::{Add, Mul, Neg, Sub};

/// A form at a point, stored densely by blade: bit `i` of the index marks `dx^i`, and
/// the coefficient multiplies `dx^{i_1} ∧ … ∧ dx^{i_k}` with `i_1 < … < i_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Form {
    n: usize,
    coeffs: Vec<f64>,
}

impl Form {
    pub fn zero(n: usize) -> Self {
        assert!(n < 16, "dimension too large for dense forms");
        Self {
            n,
            coeffs: vec![0.0; 1 << n],
        }
    }

    pub fn scalar(n: usize, value: f64) -> Self {
        let mut f = Self::zero(n);
        f.coeffs[0] = value;
        f
    }

    /// `Σ_m c_m dx^m`.
    pub fn one_form(coeffs: &[f64]) -> Self {
        let mut f = Self::zero(coeffs.len());
        for (m, c) in coeffs.iter().enumerate() {
            f.coeffs[1 << m] = *c;
        }
        f
    }

    /// `c dx^i ∧ dx^j`.
    pub fn two_form(n: usize, i: usize, j: usize, c: f64) -> Self {
        let mut f = Self::zero(n);
        if i != j {
            let sign = if i < j { 1.0 } else { -1.0 };
            f.coeffs[(1 << i) | (1 << j)] = sign * c;
        }
        f
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn coeff(&self, blade: usize) -> f64 {
        self.coeffs[blade]
    }

    /// Coefficient of `dx^i ∧ dx^j`, antisymmetric in `(i, j)`.
    pub fn two_coeff(&self, i: usize, j: usize) -> f64 {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => self.coeffs[(1 << i) | (1 << j)],
            std::cmp::Ordering::Greater => -self.coeffs[(1 << i) | (1 << j)],
            std::cmp::Ordering::Equal => 0.0,
        }
    }

    /// Coefficient of `dx^1 ∧ … ∧ dx^n`.
    pub fn top(&self) -> f64 {
        self.coeffs[(1 << self.n) - 1]
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn wedge(&self, other: &Form) -> Form {
        assert_eq!(self.n, other.n);
        let mut out = Form::zero(self.n);
        for (a, &ca) in self.coeffs.iter().enumerate() {
            if ca == 0.0 {
                continue;
            }
            for (b, &cb) in other.coeffs.iter().enumerate() {
                if cb == 0.0 || a & b != 0 {
                    continue;
                }
                out.coeffs[a | b] += blade_sign(a, b) * ca * cb;
            }
        }
        out
    }
}

/// Sign of reordering `blade(a) ∧ blade(b)` into increasing index order: one factor of
/// −1 for every pair `i ∈ a`, `j ∈ b` with `i > j`.
fn blade_sign(a: usize, b: usize) -> f64 {
    let mut swaps = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        rest &= rest - 1;
        swaps += (a >> (j + 1)).count_ones();
    }
    if swaps.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

impl Add for &Form {
    type Output = Form;
    fn add(self, rhs: &Form) -> Form {
        Form {
            n: self.n,
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &Form {
    type Output = Form;
    fn sub(self, rhs: &Form) -> Form {
        Form {
            n: self.n,
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Neg for &Form {
    type Output = Form;
    fn neg(self) -> Form {
        Form {
            n: self.n,
            coeffs: self.coeffs.iter().map(|a| -a).collect(),
        }
    }
}

impl Mul<f64> for &Form {
    type Output = Form;
    fn mul(self, rhs: f64) -> Form {
        Form {
            n: self.n,
            coeffs: self.coeffs.iter().map(|a| a * rhs).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wedge_signs() {
        let dx = Form::one_form(&[1.0, 0.0, 0.0]);
        let dy = Form::one_form(&[0.0, 1.0, 0.0]);
        let dz = Form::one_form(&[0.0, 0.0, 1.0]);
        assert_eq!(dx.wedge(&dy).two_coeff(0, 1), 1.0);
        assert_eq!(dy.wedge(&dx).two_coeff(0, 1), -1.0);
        assert_eq!(dx.wedge(&dx).max_abs(), 0.0);
        assert_eq!(dz.wedge(&dx).wedge(&dy).top(), 1.0);
        assert_eq!(dy.wedge(&dx).wedge(&dz).top(), -1.0);
    }

    #[test]
    fn two_forms_commute() {
        let a = &Form::two_form(4, 0, 2, 1.5) + &Form::two_form(4, 1, 3, -0.5);
        let b = &Form::two_form(4, 1, 3, 2.0) + &Form::two_form(4, 0, 1, 0.7);
        assert_eq!(a.wedge(&b), b.wedge(&a));
    }
}
