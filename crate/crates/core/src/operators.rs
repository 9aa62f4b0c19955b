//! Pointwise h-homogeneous infinity Laplacian on jets and the viscosity
//! inequality cases for sub- and supersolutions.
//!
//! Everything here uses the `u_t - Delta^h_inf u = 0` sign convention: the
//! value returned is `Delta^h_inf`, and residuals are `a - Delta^h_inf`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calculus::{check_symmetric, CalculusError, Jet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("homogeneity exponent must satisfy h >= 1, got {0}")]
    BadExponent(f64),
    #[error("relaxed operator is defined for 1 < h < 3, got {0}")]
    OutsideRelaxedRange(f64),
    #[error("gradient norm {norm:e} is at or below the threshold {threshold:e} and h = {h} < 3; use the relaxed operator")]
    SingularGradient { norm: f64, threshold: f64, h: f64 },
    #[error("gradient length {grad} does not match matrix size {matrix}")]
    Shape { grad: usize, matrix: usize },
    #[error(transparent)]
    Matrix(#[from] CalculusError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorParams {
    h: f64,
    gradient_zero_threshold: f64,
}

impl OperatorParams {
    pub fn new(h: f64) -> Result<Self, OperatorError> {
        Self::with_threshold(h, 0.0)
    }

    pub fn with_threshold(h: f64, gradient_zero_threshold: f64) -> Result<Self, OperatorError> {
        if !(h >= 1.0 && h.is_finite()) {
            return Err(OperatorError::BadExponent(h));
        }
        Ok(Self { h, gradient_zero_threshold: gradient_zero_threshold.max(0.0) })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn gradient_zero_threshold(&self) -> f64 {
        self.gradient_zero_threshold
    }

    fn is_zero(&self, norm: f64) -> bool {
        norm <= self.gradient_zero_threshold
    }
}

fn check_shape(grad: &DVector<f64>, x: &DMatrix<f64>) -> Result<(), OperatorError> {
    if x.nrows() != grad.len() || x.ncols() != grad.len() {
        return Err(OperatorError::Shape { grad: grad.len(), matrix: x.nrows() });
    }
    Ok(())
}

/// `|grad|^{h-3} <X grad, grad>`.
pub fn infinity_laplacian(params: &OperatorParams, grad: &DVector<f64>, x: &DMatrix<f64>) -> Result<f64, OperatorError> {
    check_shape(grad, x)?;
    let norm = grad.norm();
    let quad = grad.dot(&(x * grad));
    if params.h == 3.0 {
        return Ok(quad);
    }
    if params.is_zero(norm) {
        if params.h > 3.0 {
            return Ok(0.0);
        }
        return Err(OperatorError::SingularGradient {
            norm,
            threshold: params.gradient_zero_threshold,
            h: params.h,
        });
    }
    Ok(norm.powf(params.h - 3.0) * quad)
}

/// Continuous extension for `1 < h < 3`: zero where the gradient vanishes.
pub fn evaluate_relaxed(params: &OperatorParams, grad: &DVector<f64>, x: &DMatrix<f64>) -> Result<f64, OperatorError> {
    if !(params.h > 1.0 && params.h < 3.0) {
        return Err(OperatorError::OutsideRelaxedRange(params.h));
    }
    check_shape(grad, x)?;
    if params.is_zero(grad.norm()) {
        return Ok(0.0);
    }
    infinity_laplacian(params, grad, x)
}

/// Smallest and largest values of `<X e, e>` over unit vectors `e`.
pub fn extreme_directional_second(x: &DMatrix<f64>) -> Result<(f64, f64), OperatorError> {
    Ok(extreme_eigenpairs(x)?.map(|(v, _)| v).into())
}

/// Extreme eigenvalues with their unit eigenvectors, `[min, max]`.
pub fn extreme_eigenpairs(x: &DMatrix<f64>) -> Result<[(f64, DVector<f64>); 2], OperatorError> {
    check_symmetric(x)?;
    let n = x.nrows();
    if n == 0 {
        return Ok([(0.0, DVector::zeros(0)), (0.0, DVector::zeros(0))]);
    }
    let eig = SymmetricEigen::new(x.clone());
    let (mut lo, mut hi) = (0, 0);
    for i in 1..n {
        if eig.eigenvalues[i] < eig.eigenvalues[lo] {
            lo = i;
        }
        if eig.eigenvalues[i] > eig.eigenvalues[hi] {
            hi = i;
        }
    }
    Ok([
        (eig.eigenvalues[lo], eig.eigenvectors.column(lo).into_owned()),
        (eig.eigenvalues[hi], eig.eigenvectors.column(hi).into_owned()),
    ])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Sub,
    Super,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Verdict {
    Satisfied { residual: f64 },
    Violated { residual: f64 },
}

impl Verdict {
    pub fn residual(&self) -> f64 {
        match *self {
            Self::Satisfied { residual } | Self::Violated { residual } => residual,
        }
    }

    pub fn is_satisfied(&self) -> bool {
        matches!(self, Self::Satisfied { .. })
    }
}

/// Checks the viscosity inequality for a jet of a test function.
///
/// Subsolutions need `residual <= 0`, supersolutions `residual >= 0`;
/// equality counts as satisfied.
pub fn viscosity_inequality(
    params: &OperatorParams,
    role: Role,
    jet: &Jet,
    grad_is_zero: bool,
) -> Result<Verdict, OperatorError> {
    let grad = jet.horizontal_gradient();
    let h = params.h;
    let residual = if !grad_is_zero {
        let exact = OperatorParams { h, gradient_zero_threshold: 0.0 };
        jet.a - infinity_laplacian(&exact, &grad, &jet.x)?
    } else if h == 1.0 {
        let (lo, hi) = extreme_directional_second(&jet.x)?;
        match role {
            Role::Sub => jet.a - hi,
            Role::Super => jet.a - lo,
        }
    } else {
        // 1 < h < 3 (relaxed branch) and h >= 3 (continuous operator) both vanish.
        jet.a
    };
    let ok = match role {
        Role::Sub => residual <= 0.0,
        Role::Super => residual >= 0.0,
    };
    Ok(if ok { Verdict::Satisfied { residual } } else { Verdict::Violated { residual } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(x)
    }

    fn m(n: usize, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(n, n, x)
    }

    fn swap() -> DMatrix<f64> {
        m(2, &[0.0, 1.0, 1.0, 0.0])
    }

    #[test]
    fn operator_values() {
        let p3 = OperatorParams::new(3.0).unwrap();
        assert_eq!(infinity_laplacian(&p3, &v(&[1.0, 0.0]), &DMatrix::identity(2, 2)).unwrap(), 1.0);
        assert_eq!(infinity_laplacian(&p3, &v(&[-2.0, 1.0]), &swap()).unwrap(), -4.0);
        let p1 = OperatorParams::new(1.0).unwrap();
        let val = infinity_laplacian(&p1, &v(&[3.0, 4.0]), &m(2, &[1.0, 0.0, 0.0, 2.0])).unwrap();
        assert_abs_diff_eq!(val, 1.64, epsilon = 1e-15);
        let p4 = OperatorParams::new(4.0).unwrap();
        let val = infinity_laplacian(&p4, &v(&[-2.0, 1.0]), &swap()).unwrap();
        assert_abs_diff_eq!(val, -4.0 * 5f64.sqrt(), epsilon = 1e-12);
        assert_eq!(infinity_laplacian(&p3, &v(&[0.0, 0.0]), &swap()).unwrap(), 0.0);
    }

    #[test]
    fn singular_gradient_rejected_below_three() {
        let p2 = OperatorParams::new(2.0).unwrap();
        let err = infinity_laplacian(&p2, &v(&[0.0, 0.0]), &swap()).unwrap_err();
        assert!(matches!(err, OperatorError::SingularGradient { .. }));
        assert!(matches!(OperatorParams::new(0.5), Err(OperatorError::BadExponent(_))));
    }

    #[test]
    fn relaxed_values() {
        let p2 = OperatorParams::new(2.0).unwrap();
        assert_eq!(evaluate_relaxed(&p2, &v(&[0.0, 0.0]), &swap()).unwrap(), 0.0);
        assert_eq!(evaluate_relaxed(&p2, &v(&[1.0, 0.0]), &DMatrix::identity(2, 2)).unwrap(), 1.0);
        let thr = OperatorParams::with_threshold(2.0, 1e-12).unwrap();
        assert_eq!(evaluate_relaxed(&thr, &v(&[1e-30, 0.0]), &DMatrix::identity(2, 2)).unwrap(), 0.0);
        let p3 = OperatorParams::new(3.0).unwrap();
        assert!(matches!(
            evaluate_relaxed(&p3, &v(&[1.0, 0.0]), &swap()),
            Err(OperatorError::OutsideRelaxedRange(_))
        ));
    }

    #[test]
    fn extremes() {
        assert_eq!(extreme_directional_second(&m(2, &[1.0, 0.0, 0.0, 2.0])).unwrap(), (1.0, 2.0));
        let (lo, hi) = extreme_directional_second(&swap()).unwrap();
        assert_abs_diff_eq!(lo, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(hi, 1.0, epsilon = 1e-15);
        assert_eq!(extreme_directional_second(&DMatrix::zeros(2, 2)).unwrap(), (0.0, 0.0));
        assert!(extreme_directional_second(&m(2, &[0.0, 1.0, 0.0, 0.0])).is_err());
    }

    #[test]
    fn viscosity_cases() {
        let jet = |a: f64, g: &[f64], x: DMatrix<f64>| Jet::new(a, v(g), x).unwrap();
        let p2 = OperatorParams::new(2.0).unwrap();
        let r = viscosity_inequality(&p2, Role::Sub, &jet(-0.5, &[0.0, 0.0, 0.0], swap()), true).unwrap();
        assert_eq!(r, Verdict::Satisfied { residual: -0.5 });
        let p1 = OperatorParams::new(1.0).unwrap();
        let r = viscosity_inequality(&p1, Role::Sub, &jet(0.5, &[0.0, 0.0, 0.0], swap()), true).unwrap();
        assert!(r.is_satisfied());
        assert_abs_diff_eq!(r.residual(), -0.5, epsilon = 1e-15);
        let p3 = OperatorParams::new(3.0).unwrap();
        let r = viscosity_inequality(&p3, Role::Sub, &jet(1.0, &[1.0, 0.0, 0.0], DMatrix::identity(2, 2)), false)
            .unwrap();
        assert_eq!(r, Verdict::Satisfied { residual: 0.0 });
        let r = viscosity_inequality(&p3, Role::Super, &jet(0.5, &[1.0, 0.0, 0.0], DMatrix::identity(2, 2)), false)
            .unwrap();
        assert_eq!(r, Verdict::Violated { residual: -0.5 });
        // h = 1 supersolution at a critical point uses the smallest eigenvalue.
        let r = viscosity_inequality(&p1, Role::Super, &jet(-0.5, &[0.0, 0.0, 0.0], swap()), true).unwrap();
        assert!(r.is_satisfied());
        // h >= 3 at a critical point compares against zero.
        let r = viscosity_inequality(&p3, Role::Super, &jet(-0.1, &[0.0, 0.0, 0.0], swap()), true).unwrap();
        assert!(!r.is_satisfied());
    }

    fn sym2() -> impl Strategy<Value = DMatrix<f64>> {
        (-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0).prop_map(|(a, b, c)| m(2, &[a, b, b, c]))
    }

    proptest! {
        #[test]
        fn homogeneity_in_lambda(g0 in -2.0f64..2.0, g1 in -2.0f64..2.0, x in sym2(),
                                 lambda in 0.1f64..10.0, h in 1.0f64..6.0) {
            let grad = v(&[g0, g1]);
            prop_assume!(grad.norm() > 1e-3);
            let p = OperatorParams::new(h).unwrap();
            let base = infinity_laplacian(&p, &grad, &x).unwrap();
            let scaled = infinity_laplacian(&p, &(&grad * lambda), &(&x * lambda)).unwrap();
            let expect = lambda.powf(h) * base;
            prop_assert!((scaled - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
        }

        #[test]
        fn extremes_attained_by_unit_vectors(x in sym2()) {
            let [(lo, vlo), (hi, vhi)] = extreme_eigenpairs(&x).unwrap();
            prop_assert!((vlo.dot(&(&x * &vlo)) - lo).abs() <= 1e-12 * (1.0 + lo.abs()));
            prop_assert!((vhi.dot(&(&x * &vhi)) - hi).abs() <= 1e-12 * (1.0 + hi.abs()));
            prop_assert!((vlo.norm() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn h_one_is_h_three_over_norm_squared(g0 in -2.0f64..2.0, g1 in -2.0f64..2.0, x in sym2()) {
            let grad = v(&[g0, g1]);
            prop_assume!(grad.norm() > 1e-3);
            let one = infinity_laplacian(&OperatorParams::new(1.0).unwrap(), &grad, &x).unwrap();
            let three = infinity_laplacian(&OperatorParams::new(3.0).unwrap(), &grad, &x).unwrap();
            prop_assert!((one - three / grad.norm_squared()).abs() <= 1e-12 * (1.0 + one.abs()));
        }

        #[test]
        fn unit_gradient_h_three_is_quadratic_form(theta in 0.0f64..6.3, x in sym2()) {
            let grad = v(&[theta.cos(), theta.sin()]);
            let val = infinity_laplacian(&OperatorParams::new(3.0).unwrap(), &grad, &x).unwrap();
            prop_assert_eq!(val, grad.dot(&(&x * &grad)));
        }
    }
}
