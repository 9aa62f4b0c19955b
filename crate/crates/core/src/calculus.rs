//! Horizontal calculus: left-invariant frames, horizontal derivatives of
//! scalar fields, Euclidean-to-Carnot jet twisting and the doubling penalty.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::algebra::{AlgebraError, CarnotGroup, GroupPoint};
use crate::poly::Poly;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalculusError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("field evaluation produced a non-finite value at {point:?}, t = {time}")]
    NonFinite { point: Vec<f64>, time: f64 },
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    Asymmetric(f64),
    #[error("polynomial field has {got} variables, expected {expected} (space coordinates then t)")]
    FieldArity { expected: usize, got: usize },
    #[error("jet gradient has length {got}, expected {expected}")]
    JetShape { expected: usize, got: usize },
    #[error("penalty exponent must be an even integer >= 4, got {0}")]
    BadExponent(u32),
    #[error("penalty weight tau must be positive and finite, got {0}")]
    BadTau(f64),
}

type Callable = dyn Fn(&[f64], f64) -> f64 + Send + Sync;

/// A scalar field of space and time.
///
/// Numeric callables must be deterministic and safe to call concurrently.
#[derive(Clone)]
pub enum ScalarField {
    /// Polynomial in the space coordinates followed by `t`.
    Polynomial(Poly),
    Numeric(Arc<Callable>),
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Polynomial(p) => write!(f, "Polynomial({p:?})"),
            Self::Numeric(_) => write!(f, "Numeric(..)"),
        }
    }
}

impl ScalarField {
    pub fn numeric(f: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Numeric(Arc::new(f))
    }

    /// Polynomial in the space coordinates only (time-independent).
    pub fn spatial_polynomial(p: Poly) -> Self {
        let n = p.nvars();
        Self::Polynomial(p.lift(n + 1))
    }

    pub fn constant(c: f64) -> Self {
        Self::numeric(move |_, _| c)
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self, Self::Polynomial(_))
    }

    pub fn eval(&self, p: &[f64], t: f64) -> f64 {
        match self {
            Self::Polynomial(poly) => {
                let mut x = Vec::with_capacity(p.len() + 1);
                x.extend_from_slice(p);
                x.push(t);
                poly.eval(&x)
            }
            Self::Numeric(f) => f(p, t),
        }
    }

    fn eval_checked(&self, p: &[f64], t: f64) -> Result<f64, CalculusError> {
        let v = self.eval(p, t);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(CalculusError::NonFinite { point: p.to_vec(), time: t })
        }
    }

    /// `c * self + shift`, preserving analyticity.
    pub fn affine_map(&self, c: f64, shift: f64) -> Self {
        match self {
            Self::Polynomial(p) => {
                Self::Polynomial(&p.scale(c) + &Poly::constant(p.nvars(), shift))
            }
            Self::Numeric(f) => {
                let f = Arc::clone(f);
                Self::numeric(move |x, t| c * f(x, t) + shift)
            }
        }
    }

    /// Time-independent field obtained by freezing `t`.
    pub fn frozen_at(&self, t0: f64) -> Self {
        let f = self.clone();
        Self::numeric(move |x, _| f.eval(x, t0))
    }

    fn poly_for(&self, g: &CarnotGroup) -> Result<Option<&Poly>, CalculusError> {
        match self {
            Self::Polynomial(p) if p.nvars() != g.total_dim() + 1 => {
                Err(CalculusError::FieldArity { expected: g.total_dim() + 1, got: p.nvars() })
            }
            Self::Polynomial(p) => Ok(Some(p)),
            Self::Numeric(_) => Ok(None),
        }
    }
}

/// Frame matrices at a point: rows of `a` are the horizontal fields X_i,
/// rows of `b` the second-layer fields Y_i, both in coordinate components.
#[derive(Clone, Debug, PartialEq)]
pub struct HorizontalFrame {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub base_point: GroupPoint,
}

/// Parabolic second-order jet `(a, eta, X)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub a: f64,
    /// Semi-horizontal gradient, length `n1 + n2`.
    pub eta: DVector<f64>,
    /// Symmetric `n1 x n1` horizontal Hessian.
    pub x: DMatrix<f64>,
}

impl Jet {
    pub fn new(a: f64, eta: DVector<f64>, x: DMatrix<f64>) -> Result<Self, CalculusError> {
        check_symmetric(&x)?;
        Ok(Self { a, eta, x: symmetrize(&x) })
    }

    /// The horizontal part of `eta`.
    pub fn horizontal_gradient(&self) -> DVector<f64> {
        self.eta.rows(0, self.x.nrows()).into_owned()
    }
}

/// Exponent and weight of the doubling penalty.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PenaltySpec {
    m: u32,
    tau: f64,
}

impl PenaltySpec {
    pub fn new(m: u32, tau: f64) -> Result<Self, CalculusError> {
        if m < 4 || m % 2 != 0 {
            return Err(CalculusError::BadExponent(m));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(CalculusError::BadTau(tau));
        }
        Ok(Self { m, tau })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn with_tau(self, tau: f64) -> Result<Self, CalculusError> {
        Self::new(self.m, tau)
    }
}

pub(crate) fn check_symmetric(x: &DMatrix<f64>) -> Result<(), CalculusError> {
    if !x.is_square() {
        return Err(CalculusError::Asymmetric(f64::INFINITY));
    }
    let scale = 1.0 + x.amax();
    let asym = (x - x.transpose()).amax();
    if asym > 1e-12 * scale {
        return Err(CalculusError::Asymmetric(asym));
    }
    Ok(())
}

fn symmetrize(x: &DMatrix<f64>) -> DMatrix<f64> {
    (x + x.transpose()) * 0.5
}

pub fn frame_at(g: &CarnotGroup, p: &GroupPoint) -> Result<HorizontalFrame, CalculusError> {
    g.check_point(p)?;
    let n = g.total_dim();
    let (n1, n2) = (g.n1(), g.n2());
    let rows = g.frame_polys();
    let x = p.coords();
    let a = DMatrix::from_fn(n1, n, |i, j| rows[i][j].eval(x));
    let b = DMatrix::from_fn(n2, n, |i, j| rows[n1 + i][j].eval(x));
    Ok(HorizontalFrame { a, b, base_point: p.clone() })
}

/// `d a_ij / d x_l` at `p`, indexed `[i][j][l]` for the horizontal rows.
fn frame_partials_at(g: &CarnotGroup, x: &[f64]) -> Vec<Vec<Vec<f64>>> {
    g.frame_partial_polys()[..g.n1()]
        .iter()
        .map(|row| row.iter().map(|d| d.iter().map(|q| q.eval(x)).collect()).collect())
        .collect()
}

const EPS: f64 = f64::EPSILON;

/// Euclidean spatial gradient of `f` at `p`.
fn euclidean_gradient(g: &CarnotGroup, f: &ScalarField, p: &[f64], t: f64) -> Result<DVector<f64>, CalculusError> {
    let n = g.total_dim();
    if let Some(poly) = f.poly_for(g)? {
        let mut x = p.to_vec();
        x.push(t);
        let v = DVector::from_fn(n, |k, _| poly.derivative(k).eval(&x));
        return finite_vec(v, p, t);
    }
    let mut grad = DVector::zeros(n);
    let mut q = p.to_vec();
    for k in 0..n {
        let h = EPS.cbrt() * (1.0 + p[k].abs());
        q[k] = p[k] + h;
        let fp = f.eval_checked(&q, t)?;
        q[k] = p[k] - h;
        let fm = f.eval_checked(&q, t)?;
        q[k] = p[k];
        grad[k] = (fp - fm) / (2.0 * h);
    }
    Ok(grad)
}

fn finite_vec(v: DVector<f64>, p: &[f64], t: f64) -> Result<DVector<f64>, CalculusError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(v)
    } else {
        Err(CalculusError::NonFinite { point: p.to_vec(), time: t })
    }
}

/// `grad_0 f = (X_1 f, ..., X_{n1} f)`.
pub fn horizontal_gradient(
    g: &CarnotGroup,
    f: &ScalarField,
    p: &GroupPoint,
    t: f64,
) -> Result<DVector<f64>, CalculusError> {
    let frame = frame_at(g, p)?;
    let grad = euclidean_gradient(g, f, p.coords(), t)?;
    Ok(&frame.a * grad)
}

/// `grad_1 f = (X_1 f, ..., X_{n1} f, Y_1 f, ..., Y_{n2} f)`.
pub fn semi_horizontal_gradient(
    g: &CarnotGroup,
    f: &ScalarField,
    p: &GroupPoint,
    t: f64,
) -> Result<DVector<f64>, CalculusError> {
    let frame = frame_at(g, p)?;
    let grad = euclidean_gradient(g, f, p.coords(), t)?;
    let top = &frame.a * &grad;
    let bottom = &frame.b * &grad;
    Ok(DVector::from_iterator(top.len() + bottom.len(), top.iter().chain(bottom.iter()).copied()))
}

/// Applies the horizontal field `X_i` to a polynomial field (N+1 variables).
fn apply_field(g: &CarnotGroup, i: usize, f: &Poly) -> Poly {
    let n = g.total_dim();
    let row = &g.frame_polys()[i];
    let mut out = Poly::zero(n + 1);
    for (k, a) in row.iter().enumerate() {
        if a.is_zero() {
            continue;
        }
        out = &out + &(&a.lift(n + 1) * &f.derivative(k));
    }
    out
}

/// `((D^2 f)^*)_ij = 1/2 (X_i X_j f + X_j X_i f)`.
pub fn symmetrized_hessian(
    g: &CarnotGroup,
    f: &ScalarField,
    p: &GroupPoint,
    t: f64,
) -> Result<DMatrix<f64>, CalculusError> {
    g.check_point(p)?;
    let n1 = g.n1();
    let mut raw = DMatrix::zeros(n1, n1);
    if let Some(poly) = f.poly_for(g)? {
        let mut x = p.coords().to_vec();
        x.push(t);
        let first: Vec<Poly> = (0..n1).map(|j| apply_field(g, j, poly)).collect();
        for i in 0..n1 {
            for j in 0..n1 {
                raw[(i, j)] = apply_field(g, i, &first[j]).eval(&x);
            }
        }
    } else {
        let x = p.coords();
        let h = EPS.powf(0.25) * (1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        let step = |base: &[f64], i: usize, s: f64| {
            let mut e = vec![0.0; base.len()];
            e[i] = s;
            g.multiply_coords(base, &e)
        };
        let f0 = f.eval_checked(x, t)?;
        for i in 0..n1 {
            let fp = f.eval_checked(&step(x, i, h), t)?;
            let fm = f.eval_checked(&step(x, i, -h), t)?;
            raw[(i, i)] = (fp - 2.0 * f0 + fm) / (h * h);
            for j in 0..n1 {
                if i == j {
                    continue;
                }
                let mut acc = 0.0;
                for (si, sj, w) in [(h, h, 1.0), (h, -h, -1.0), (-h, h, -1.0), (-h, -h, 1.0)] {
                    acc += w * f.eval_checked(&step(&step(x, i, si), j, sj), t)?;
                }
                raw[(i, j)] = acc / (4.0 * h * h);
            }
        }
    }
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(CalculusError::NonFinite { point: p.coords().to_vec(), time: t });
    }
    Ok(symmetrize(&raw))
}

/// Time slope, spatial gradient and spatial Hessian in coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct EuclideanJet {
    pub a: f64,
    pub eta: DVector<f64>,
    pub x: DMatrix<f64>,
}

/// Euclidean jet of a polynomial field, computed by symbolic differentiation.
pub fn euclidean_jet(g: &CarnotGroup, f: &Poly, p: &GroupPoint, t: f64) -> Result<EuclideanJet, CalculusError> {
    g.check_point(p)?;
    let n = g.total_dim();
    if f.nvars() != n + 1 {
        return Err(CalculusError::FieldArity { expected: n + 1, got: f.nvars() });
    }
    let mut x = p.coords().to_vec();
    x.push(t);
    let a = f.derivative(n).eval(&x);
    let eta = DVector::from_fn(n, |k, _| f.derivative(k).eval(&x));
    let hess = DMatrix::from_fn(n, n, |k, l| f.derivative(k).derivative(l).eval(&x));
    Ok(EuclideanJet { a, eta, x: hess })
}

/// The direct Carnot jet `(f_t, grad_1 f, (D^2 f)^*)` of a field.
pub fn carnot_jet(g: &CarnotGroup, f: &ScalarField, p: &GroupPoint, t: f64) -> Result<Jet, CalculusError> {
    let a = match f.poly_for(g)? {
        Some(poly) => {
            let mut x = p.coords().to_vec();
            x.push(t);
            poly.derivative(g.total_dim()).eval(&x)
        }
        None => {
            let h = EPS.cbrt() * (1.0 + t.abs());
            (f.eval_checked(p.coords(), t + h)? - f.eval_checked(p.coords(), t - h)?) / (2.0 * h)
        }
    };
    let eta = semi_horizontal_gradient(g, f, p, t)?;
    let x = symmetrized_hessian(g, f, p, t)?;
    Ok(Jet { a, eta, x })
}

/// Converts a Euclidean jet at `p` into a Carnot jet:
/// `(a, A eta (+) B eta, A X A^T + M)` with
/// `M_ij = 1/2 sum_{k,l} (a_il d_l a_jk + a_jl d_l a_ik) eta_k`.
pub fn twist_jet(g: &CarnotGroup, p: &GroupPoint, jet: &EuclideanJet) -> Result<Jet, CalculusError> {
    let n = g.total_dim();
    if jet.eta.len() != n {
        return Err(CalculusError::JetShape { expected: n, got: jet.eta.len() });
    }
    if jet.x.shape() != (n, n) {
        return Err(CalculusError::Asymmetric(f64::INFINITY));
    }
    check_symmetric(&jet.x)?;
    let frame = frame_at(g, p)?;
    let partials = frame_partials_at(g, p.coords());
    let (a, eta) = (&frame.a, &jet.eta);
    let n1 = g.n1();
    let mut m = DMatrix::zeros(n1, n1);
    for i in 0..n1 {
        for j in 0..n1 {
            let mut s = 0.0;
            for k in 0..n {
                for l in 0..n {
                    s += (a[(i, l)] * partials[j][k][l] + a[(j, l)] * partials[i][k][l]) * eta[k];
                }
            }
            m[(i, j)] = 0.5 * s;
        }
    }
    let top = a * eta;
    let bottom = &frame.b * eta;
    let eta_c = DVector::from_iterator(top.len() + bottom.len(), top.iter().chain(bottom.iter()).copied());
    let x = a * &jet.x * a.transpose() + m;
    Ok(Jet { a: jet.a, eta: eta_c, x: symmetrize(&x) })
}

/// `phi(p, q) = (1/m) sum_i ((p . q^{-1})_i)^m`; the weight `tau` is not applied.
pub fn doubling_penalty(
    g: &CarnotGroup,
    spec: &PenaltySpec,
    p: &GroupPoint,
    q: &GroupPoint,
) -> Result<f64, CalculusError> {
    let qinv = g.inverse(q)?;
    let d = g.multiply(p, &qinv)?;
    Ok(penalty_coords(spec.m, d.coords()))
}

pub(crate) fn penalty_coords(m: u32, d: &[f64]) -> f64 {
    d.iter().map(|x| x.powi(m as i32)).sum::<f64>() / m as f64
}
