//! Stratified Lie algebras and Carnot group arithmetic in exponential
//! coordinates of the first kind.
//!
//! The group law is the Baker-Campbell-Hausdorff series truncated at the
//! nilpotency step, which makes it exact:
//!
//! ```text
//! p . q = p + q + 1/2 [p,q] + 1/12 ([p,[p,q]] - [q,[p,q]])
//! ```
//!
//! Only groups of step at most three are supported.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::Poly;

/// Tolerance used when validating user-supplied structure constants.
const STRUCTURE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("antisymmetry violated: c[{i}][{j}][{k}] = {cij} but c[{j}][{i}][{k}] = {cji}")]
    Antisymmetry { i: usize, j: usize, k: usize, cij: f64, cji: f64 },
    #[error("grading violated: [E_{i}, E_{j}] has a component along E_{k} outside layer V_{expected}")]
    Grading { i: usize, j: usize, k: usize, expected: usize },
    #[error("Jacobi identity violated on (E_{i}, E_{j}, E_{k}): residual {residual:e}")]
    Jacobi { i: usize, j: usize, k: usize, residual: f64 },
    #[error("step {0} is not supported (at most 3 layers)")]
    StepTooLarge(usize),
    #[error("invalid layer dimensions {0:?}: need at least one layer and every layer non-empty")]
    BadLayers(Vec<usize>),
    #[error("structure constant index ({i},{j},{k}) out of range for dimension {dim}")]
    IndexOutOfRange { i: usize, j: usize, k: usize, dim: usize },
    #[error("structure constant c[{i}][{j}][{k}] is not finite")]
    NonFiniteConstant { i: usize, j: usize, k: usize },
    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point has a non-finite coordinate at index {0}")]
    NonFinitePoint(usize),
    #[error("dilation factor must be positive and finite, got {0}")]
    BadDilation(f64),
    #[error("unknown group preset `{0}`")]
    UnknownPreset(String),
}

/// A point of the group in exponential coordinates, ordered by layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupPoint(Vec<f64>);

impl GroupPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    pub fn origin(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn max_abs_diff(&self, other: &GroupPoint) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

impl From<Vec<f64>> for GroupPoint {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl<const N: usize> From<[f64; N]> for GroupPoint {
    fn from(v: [f64; N]) -> Self {
        Self(v.to_vec())
    }
}

/// Built-in groups.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroupPreset {
    /// Abelian R^n.
    Euclidean(usize),
    /// First Heisenberg group, layers (2,1), [X,Y] = Z.
    Heisenberg,
    /// Engel group, layers (2,1,1), [X1,X2] = X3, [X1,X3] = X4.
    Engel,
}

impl GroupPreset {
    /// Parses `euclidean(n)`, `euclideanN`, `heisenberg1` / `heisenberg`, `engel`.
    pub fn parse(name: &str) -> Result<Self, AlgebraError> {
        let s = name.trim().to_ascii_lowercase();
        match s.as_str() {
            "heisenberg" | "heisenberg1" => return Ok(Self::Heisenberg),
            "engel" => return Ok(Self::Engel),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("euclidean") {
            let digits = rest.trim_start_matches('(').trim_end_matches(')');
            if let Ok(n) = digits.parse::<usize>() {
                if n > 0 {
                    return Ok(Self::Euclidean(n));
                }
            }
        }
        Err(AlgebraError::UnknownPreset(name.to_string()))
    }
}

/// User-facing description of a custom group: layer sizes plus the
/// non-zero structure constants `[E_i, E_j] = sum_k c * E_k` (0-based
/// global basis indices). Both `(i,j,k,c)` and `(j,i,k,-c)` must be listed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CustomGroupSpec {
    pub label: String,
    pub layer_dims: Vec<usize>,
    pub structure_constants: Vec<(usize, usize, usize, f64)>,
}

/// A validated stratified Lie algebra together with the symbolic
/// left-invariant frame derived from its group law.
#[derive(Clone)]
pub struct CarnotGroup {
    label: String,
    layer_dims: Vec<usize>,
    layer_of: Vec<usize>,
    total_dim: usize,
    homogeneous_dim: usize,
    constants: BTreeMap<(usize, usize, usize), f64>,
    entries: Vec<(usize, usize, usize, f64)>,
    /// `frame[i][j]` = j-th coordinate of the left-invariant field of basis
    /// vector `i`, as a polynomial in the base point. Rows cover layers 1 and 2.
    frame: Vec<Vec<Poly>>,
    /// `frame_partials[i][j][l]` = d frame[i][j] / d x_l.
    frame_partials: Vec<Vec<Vec<Poly>>>,
}

impl fmt::Debug for CarnotGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CarnotGroup")
            .field("label", &self.label)
            .field("layer_dims", &self.layer_dims)
            .field("homogeneous_dim", &self.homogeneous_dim)
            .field("constants", &self.constants)
            .finish()
    }
}

impl PartialEq for CarnotGroup {
    fn eq(&self, other: &Self) -> bool {
        self.layer_dims == other.layer_dims && self.constants == other.constants
    }
}

fn antisym(table: &mut Vec<(usize, usize, usize, f64)>, i: usize, j: usize, k: usize, c: f64) {
    table.push((i, j, k, c));
    table.push((j, i, k, -c));
}

impl CarnotGroup {
    pub fn preset(preset: GroupPreset) -> Self {
        let (label, layers, table) = match preset {
            GroupPreset::Euclidean(n) => (format!("euclidean({n})"), vec![n], Vec::new()),
            GroupPreset::Heisenberg => {
                let mut t = Vec::new();
                antisym(&mut t, 0, 1, 2, 1.0);
                ("heisenberg1".to_string(), vec![2, 1], t)
            }
            GroupPreset::Engel => {
                let mut t = Vec::new();
                antisym(&mut t, 0, 1, 2, 1.0);
                antisym(&mut t, 0, 2, 3, 1.0);
                ("engel".to_string(), vec![2, 1, 1], t)
            }
        };
        Self::new(label, layers, table).expect("preset groups are valid")
    }

    pub fn euclidean(n: usize) -> Self {
        Self::preset(GroupPreset::Euclidean(n))
    }

    pub fn heisenberg() -> Self {
        Self::preset(GroupPreset::Heisenberg)
    }

    pub fn engel() -> Self {
        Self::preset(GroupPreset::Engel)
    }

    pub fn custom(spec: &CustomGroupSpec) -> Result<Self, AlgebraError> {
        Self::new(spec.label.clone(), spec.layer_dims.clone(), spec.structure_constants.clone())
    }

    /// Validates the structure constants (antisymmetry, grading, Jacobi) and
    /// builds the group.
    pub fn new(
        label: impl Into<String>,
        layer_dims: Vec<usize>,
        structure_constants: Vec<(usize, usize, usize, f64)>,
    ) -> Result<Self, AlgebraError> {
        if layer_dims.is_empty() || layer_dims.contains(&0) {
            return Err(AlgebraError::BadLayers(layer_dims));
        }
        if layer_dims.len() > 3 {
            return Err(AlgebraError::StepTooLarge(layer_dims.len()));
        }
        let total_dim: usize = layer_dims.iter().sum();
        let layer_of: Vec<usize> = layer_dims
            .iter()
            .enumerate()
            .flat_map(|(layer, &n)| std::iter::repeat(layer + 1).take(n))
            .collect();

        let mut constants = BTreeMap::new();
        for &(i, j, k, c) in &structure_constants {
            if i >= total_dim || j >= total_dim || k >= total_dim {
                return Err(AlgebraError::IndexOutOfRange { i, j, k, dim: total_dim });
            }
            if !c.is_finite() {
                return Err(AlgebraError::NonFiniteConstant { i, j, k });
            }
            *constants.entry((i, j, k)).or_insert(0.0) += c;
        }
        constants.retain(|_, c| *c != 0.0);

        for (&(i, j, k), &c) in &constants {
            let cji = constants.get(&(j, i, k)).copied().unwrap_or(0.0);
            if (c + cji).abs() > STRUCTURE_TOL {
                return Err(AlgebraError::Antisymmetry { i, j, k, cij: c, cji });
            }
            let expected = layer_of[i] + layer_of[j];
            if layer_of[k] != expected {
                return Err(AlgebraError::Grading { i, j, k, expected });
            }
        }

        let entries: Vec<_> = constants.iter().map(|(&(i, j, k), &c)| (i, j, k, c)).collect();
        let basis = |i: usize| {
            let mut v = vec![0.0; total_dim];
            v[i] = 1.0;
            v
        };
        for i in 0..total_dim {
            for j in 0..total_dim {
                for m in 0..total_dim {
                    let (ei, ej, em) = (basis(i), basis(j), basis(m));
                    let a = bracket_with(&entries, total_dim, &ei, &bracket_with(&entries, total_dim, &ej, &em));
                    let b = bracket_with(&entries, total_dim, &ej, &bracket_with(&entries, total_dim, &em, &ei));
                    let c = bracket_with(&entries, total_dim, &em, &bracket_with(&entries, total_dim, &ei, &ej));
                    let residual = (0..total_dim).map(|k| (a[k] + b[k] + c[k]).abs()).fold(0.0, f64::max);
                    if residual > STRUCTURE_TOL {
                        return Err(AlgebraError::Jacobi { i, j, k: m, residual });
                    }
                }
            }
        }

        let homogeneous_dim = layer_dims.iter().enumerate().map(|(i, n)| (i + 1) * n).sum();
        let mut group = Self {
            label: label.into(),
            layer_dims,
            layer_of,
            total_dim,
            homogeneous_dim,
            constants,
            entries,
            frame: Vec::new(),
            frame_partials: Vec::new(),
        };
        group.build_frame();
        Ok(group)
    }

    /// Left-invariant field of `E_i` at `p`: d/ds (p . s E_i) at s = 0,
    /// i.e. `E_i + 1/2 [p, E_i] + 1/12 [p, [p, E_i]]`.
    fn build_frame(&mut self) {
        let n = self.total_dim;
        let rows = self.n1() + self.n2();
        let p: Vec<Poly> = (0..n).map(|i| Poly::var(n, i)).collect();
        self.frame = (0..rows)
            .map(|i| {
                let e: Vec<Poly> = (0..n).map(|k| Poly::constant(n, if k == i { 1.0 } else { 0.0 })).collect();
                let b1 = self.bracket_poly(&p, &e);
                let b2 = self.bracket_poly(&p, &b1);
                (0..n).map(|k| &(&e[k] + &b1[k].scale(0.5)) + &b2[k].scale(1.0 / 12.0)).collect()
            })
            .collect();
        self.frame_partials = self
            .frame
            .iter()
            .map(|row| row.iter().map(|a| (0..n).map(|l| a.derivative(l)).collect()).collect())
            .collect();
    }

    fn bracket_poly(&self, p: &[Poly], q: &[Poly]) -> Vec<Poly> {
        let n = self.total_dim;
        let mut out: Vec<Poly> = (0..n).map(|_| Poly::zero(n)).collect();
        for &(i, j, k, c) in &self.entries {
            let term = (&p[i] * &q[j]).scale(c);
            out[k] = &out[k] + &term;
        }
        out
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    /// Layer (1-based) of each basis vector.
    pub fn layer_of(&self) -> &[usize] {
        &self.layer_of
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn step(&self) -> usize {
        self.layer_dims.len()
    }

    /// Cached `Q = sum_i i * dim V_i`.
    pub fn homogeneous_dim(&self) -> usize {
        self.homogeneous_dim
    }

    /// Horizontal dimension `n_1`.
    pub fn n1(&self) -> usize {
        self.layer_dims[0]
    }

    /// Dimension of the second layer (0 for abelian groups).
    pub fn n2(&self) -> usize {
        self.layer_dims.get(1).copied().unwrap_or(0)
    }

    pub fn structure_constant(&self, i: usize, j: usize, k: usize) -> f64 {
        self.constants.get(&(i, j, k)).copied().unwrap_or(0.0)
    }

    pub fn structure_constants(&self) -> &[(usize, usize, usize, f64)] {
        &self.entries
    }

    pub(crate) fn frame_polys(&self) -> &[Vec<Poly>] {
        &self.frame
    }

    pub(crate) fn frame_partial_polys(&self) -> &[Vec<Vec<Poly>>] {
        &self.frame_partials
    }

    pub fn check_point(&self, p: &GroupPoint) -> Result<(), AlgebraError> {
        if p.dim() != self.total_dim {
            return Err(AlgebraError::DimensionMismatch { expected: self.total_dim, got: p.dim() });
        }
        if let Some(i) = p.coords().iter().position(|x| !x.is_finite()) {
            return Err(AlgebraError::NonFinitePoint(i));
        }
        Ok(())
    }

    pub fn origin(&self) -> GroupPoint {
        GroupPoint::origin(self.total_dim)
    }

    /// Lie bracket of two algebra elements given in coordinates.
    pub fn bracket(&self, p: &[f64], q: &[f64]) -> Vec<f64> {
        bracket_with(&self.entries, self.total_dim, p, q)
    }

    /// Group law on raw coordinate slices (no validation).
    pub fn multiply_coords(&self, p: &[f64], q: &[f64]) -> Vec<f64> {
        let n = self.total_dim;
        let mut out: Vec<f64> = p.iter().zip(q).map(|(a, b)| a + b).collect();
        if self.entries.is_empty() {
            return out;
        }
        let pq = self.bracket(p, q);
        for k in 0..n {
            out[k] += 0.5 * pq[k];
        }
        if self.step() >= 3 {
            let diff: Vec<f64> = p.iter().zip(q).map(|(a, b)| a - b).collect();
            let third = self.bracket(&diff, &pq);
            for k in 0..n {
                out[k] += third[k] / 12.0;
            }
        }
        out
    }

    pub fn multiply(&self, p: &GroupPoint, q: &GroupPoint) -> Result<GroupPoint, AlgebraError> {
        self.check_point(p)?;
        self.check_point(q)?;
        Ok(GroupPoint(self.multiply_coords(p.coords(), q.coords())))
    }

    /// In exponential coordinates the inverse is coordinate negation.
    pub fn inverse(&self, p: &GroupPoint) -> Result<GroupPoint, AlgebraError> {
        self.check_point(p)?;
        Ok(GroupPoint(p.coords().iter().map(|x| -x).collect()))
    }

    /// Homogeneous gauge `(sum_i |zeta_i|^{2 l!/i})^{1/(2 l!)}`.
    pub fn gauge_norm(&self, p: &GroupPoint) -> Result<f64, AlgebraError> {
        self.check_point(p)?;
        Ok(self.gauge_norm_coords(p.coords()))
    }

    pub fn gauge_norm_coords(&self, p: &[f64]) -> f64 {
        let l = self.step();
        let big: u32 = 2 * (1..=l as u32).product::<u32>();
        let mut sum = 0.0;
        let mut offset = 0;
        for (i, &n) in self.layer_dims.iter().enumerate() {
            let sq: f64 = p[offset..offset + n].iter().map(|x| x * x).sum();
            // |zeta|^{big/i} = (|zeta|^2)^{big/(2i)}; big/(2i) is an integer for i <= l.
            let e = big / (2 * (i as u32 + 1));
            sum += sq.powi(e as i32);
            offset += n;
        }
        sum.powf(1.0 / big as f64)
    }

    /// `d(p, q) = N(p^{-1} . q)`.
    pub fn gauge_distance(&self, p: &GroupPoint, q: &GroupPoint) -> Result<f64, AlgebraError> {
        let pinv = self.inverse(p)?;
        let d = self.multiply(&pinv, q)?;
        self.gauge_norm(&d)
    }

    /// Anisotropic dilation: layer i is scaled by r^i.
    pub fn dilate(&self, r: f64, p: &GroupPoint) -> Result<GroupPoint, AlgebraError> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(AlgebraError::BadDilation(r));
        }
        self.check_point(p)?;
        Ok(GroupPoint(
            p.coords().iter().zip(&self.layer_of).map(|(x, &layer)| x * r.powi(layer as i32)).collect(),
        ))
    }

    /// Injects a horizontal vector as a group element with zero higher layers.
    pub fn embed_horizontal(&self, v: &[f64]) -> Result<GroupPoint, AlgebraError> {
        if v.len() != self.n1() {
            return Err(AlgebraError::DimensionMismatch { expected: self.n1(), got: v.len() });
        }
        let mut out = vec![0.0; self.total_dim];
        out[..v.len()].copy_from_slice(v);
        Ok(GroupPoint(out))
    }
}

fn bracket_with(entries: &[(usize, usize, usize, f64)], n: usize, p: &[f64], q: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for &(i, j, k, c) in entries {
        out[k] += c * p[i] * q[j];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn preset_dimensions() {
        let e = CarnotGroup::euclidean(2);
        assert_eq!((e.total_dim(), e.step(), e.homogeneous_dim()), (2, 1, 2));
        let h = CarnotGroup::heisenberg();
        assert_eq!((h.total_dim(), h.step(), h.homogeneous_dim()), (3, 2, 4));
        let g = CarnotGroup::engel();
        assert_eq!((g.total_dim(), g.step(), g.homogeneous_dim()), (4, 3, 7));
    }

    #[test]
    fn heisenberg_products() {
        let h = CarnotGroup::heisenberg();
        let r = h.multiply(&[1.0, 0.0, 0.0].into(), &[0.0, 1.0, 0.0].into()).unwrap();
        assert_eq!(r.coords(), &[1.0, 1.0, 0.5]);
        let r = h.multiply(&[2.0, 0.0, 1.0].into(), &[0.0, 3.0, 0.0].into()).unwrap();
        assert_eq!(r.coords(), &[2.0, 3.0, 4.0]);
    }

    #[test]
    fn euclidean_product_and_inverse() {
        let e = CarnotGroup::euclidean(2);
        let r = e.multiply(&[1.0, 2.0].into(), &[3.0, 4.0].into()).unwrap();
        assert_eq!(r.coords(), &[4.0, 6.0]);
        assert_eq!(e.inverse(&[5.0, -1.0].into()).unwrap().coords(), &[-5.0, 1.0]);
        assert_eq!(e.gauge_distance(&[1.0, 1.0].into(), &[4.0, 5.0].into()).unwrap(), 5.0);
    }

    #[test]
    fn gauge_values() {
        let h = CarnotGroup::heisenberg();
        assert_abs_diff_eq!(h.gauge_norm(&[3.0, 4.0, 0.0].into()).unwrap(), 5.0, epsilon = 1e-14);
        assert_abs_diff_eq!(h.gauge_norm(&[0.0, 0.0, 2.0].into()).unwrap(), 2f64.sqrt(), epsilon = 1e-14);
        assert_eq!(h.gauge_norm(&h.origin()).unwrap(), 0.0);
    }

    #[test]
    fn dilation_and_embedding() {
        let h = CarnotGroup::heisenberg();
        assert_eq!(h.dilate(2.0, &[1.0, 1.0, 1.0].into()).unwrap().coords(), &[2.0, 2.0, 4.0]);
        assert_eq!(h.embed_horizontal(&[0.5, -1.0]).unwrap().coords(), &[0.5, -1.0, 0.0]);
        assert_eq!(CarnotGroup::engel().embed_horizontal(&[1.0, 2.0]).unwrap().coords(), &[1.0, 2.0, 0.0, 0.0]);
        assert_eq!(CarnotGroup::euclidean(2).embed_horizontal(&[3.0, 4.0]).unwrap().coords(), &[3.0, 4.0]);
        assert!(matches!(h.dilate(0.0, &h.origin()), Err(AlgebraError::BadDilation(_))));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let h = CarnotGroup::heisenberg();
        let err = h.multiply(&[1.0, 2.0].into(), &[0.0, 0.0, 0.0].into()).unwrap_err();
        assert_eq!(err, AlgebraError::DimensionMismatch { expected: 3, got: 2 });
        assert!(matches!(h.inverse(&[f64::NAN, 0.0, 0.0].into()), Err(AlgebraError::NonFinitePoint(0))));
    }

    #[test]
    fn custom_group_validation() {
        // Missing antisymmetric partner.
        let err = CarnotGroup::new("bad", vec![2, 1], vec![(0, 1, 2, 1.0)]).unwrap_err();
        assert!(matches!(err, AlgebraError::Antisymmetry { .. }), "{err}");
        // Bracket lands in the wrong layer.
        let err = CarnotGroup::new("bad", vec![2, 1], vec![(0, 1, 0, 1.0), (1, 0, 0, -1.0)]).unwrap_err();
        assert!(matches!(err, AlgebraError::Grading { .. }), "{err}");
        // Free step-2 algebra on two generators with an extra third layer.
        let mut t = Vec::new();
        antisym(&mut t, 0, 1, 2, 1.0); // [X1,X2] = Y1
        antisym(&mut t, 0, 2, 4, 1.0); // [X1,Y1] = Z
        antisym(&mut t, 1, 3, 4, 1.0); // [X2,Y2] = Z
        antisym(&mut t, 1, 2, 4, 1.0); // [X2,Y1] = Z
        assert!(CarnotGroup::new("ok", vec![2, 2, 1], t).is_ok());

        let mut t = Vec::new();
        antisym(&mut t, 0, 1, 2, 1.0); // [X1,X2] = Y
        antisym(&mut t, 0, 2, 3, 1.0); // [X1,Y] = Z1
        antisym(&mut t, 1, 2, 3, 1.0); // [X2,Y] = Z1
        assert!(CarnotGroup::new("ok2", vec![2, 1, 2], t).is_ok());
        assert!(matches!(
            CarnotGroup::new("deep", vec![1, 1, 1, 1], vec![]),
            Err(AlgebraError::StepTooLarge(4))
        ));
    }

    #[test]
    fn jacobi_violation_detected() {
        // With n1 = 3, [Xa,Xb] = c_ab Y and [Xa,Y] = d_a Z, the cyclic sum on
        // (X1,X2,X3) is (c_23 d_1 + c_31 d_2 + c_12 d_3) Z.
        let mut t = Vec::new();
        antisym(&mut t, 0, 1, 3, 1.0); // [X1,X2] = Y
        antisym(&mut t, 1, 2, 3, 1.0); // [X2,X3] = Y
        antisym(&mut t, 0, 3, 4, 1.0); // [X1,Y] = Z
        antisym(&mut t, 2, 3, 4, 1.0); // [X3,Y] = Z
        let err = CarnotGroup::new("nonjacobi", vec![3, 1, 1], t).unwrap_err();
        assert!(matches!(err, AlgebraError::Jacobi { .. }), "{err}");
    }

    #[test]
    fn q_matches_recomputation() {
        for g in [CarnotGroup::euclidean(3), CarnotGroup::heisenberg(), CarnotGroup::engel()] {
            let q: usize = g.layer_of().iter().sum();
            assert_eq!(q, g.homogeneous_dim());
        }
    }

    #[test]
    fn preset_parsing() {
        assert_eq!(GroupPreset::parse("euclidean(3)").unwrap(), GroupPreset::Euclidean(3));
        assert_eq!(GroupPreset::parse("Heisenberg1").unwrap(), GroupPreset::Heisenberg);
        assert_eq!(GroupPreset::parse("engel").unwrap(), GroupPreset::Engel);
        assert!(GroupPreset::parse("euclidean(0)").is_err());
        assert!(GroupPreset::parse("sl2").is_err());
    }

    fn point(dim: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-2.0f64..2.0, dim)
    }

    proptest! {
        #[test]
        fn engel_inverse_cancels(p in point(4)) {
            let g = CarnotGroup::engel();
            let p = GroupPoint::new(p);
            let e = g.multiply(&p, &g.inverse(&p).unwrap()).unwrap();
            prop_assert!(e.max_abs_diff(&g.origin()) <= 1e-14);
        }

        #[test]
        fn gauge_is_homogeneous_and_symmetric(p in point(4), r in 0.1f64..5.0) {
            let g = CarnotGroup::engel();
            let p = GroupPoint::new(p);
            let n = g.gauge_norm(&p).unwrap();
            let nd = g.gauge_norm(&g.dilate(r, &p).unwrap()).unwrap();
            prop_assert!((nd - r * n).abs() <= 1e-12 * (1.0 + r * n));
            let ni = g.gauge_norm(&g.inverse(&p).unwrap()).unwrap();
            prop_assert!((ni - n).abs() <= 1e-15 * (1.0 + n));
        }

        #[test]
        fn heisenberg_distance_left_invariant(p in point(3), q in point(3), a in point(3)) {
            let h = CarnotGroup::heisenberg();
            let (p, q, a) = (GroupPoint::new(p), GroupPoint::new(q), GroupPoint::new(a));
            let d = h.gauge_distance(&p, &q).unwrap();
            let ap = h.multiply(&a, &p).unwrap();
            let aq = h.multiply(&a, &q).unwrap();
            prop_assert!((h.gauge_distance(&ap, &aq).unwrap() - d).abs() <= 1e-12);
            prop_assert_eq!(h.gauge_distance(&p, &p).unwrap(), 0.0);
        }
    }
}
