//! Precomputed semi-Lagrangian stencils and the monotone update.

use std::sync::Arc;

use rayon::prelude::*;

use super::grid::{GridFunction, GridSpec};
use super::{CauchyDirichletProblem, SolverConfig, SolverError};
use crate::calculus::ScalarField;

/// `|s|^(h-1) s`
#[inline]
pub(crate) fn signed_power(s: f64, h: f64) -> f64 {
    if h == 1.0 {
        s
    } else {
        s.abs().powf(h - 1.0) * s
    }
}

/// Monotone rate from the centre value and the extreme neighbour values.
///
/// With `a = max - u0` and `b = u0 - min` the rate is
/// `(phi(a) - phi(b)) / (h delta^(h+1))`, `phi(s) = |s|^(h-1) s`.
#[inline]
pub fn monotone_rate(h: f64, delta: f64, u0: f64, max: f64, min: f64) -> f64 {
    let a = max - u0;
    let b = u0 - min;
    if h == 1.0 {
        return (a - b) / (delta * delta);
    }
    (signed_power(a, h) - signed_power(b, h)) / (h * delta.powf(h + 1.0))
}

/// Unit sample directions in the first layer. The set is closed under negation.
pub fn sample_directions(n1: usize, m: usize) -> Vec<Vec<f64>> {
    match n1 {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => {
            let half = m / 2;
            let mut dirs: Vec<Vec<f64>> = (0..half)
                .map(|k| {
                    let theta = std::f64::consts::PI * k as f64 / half as f64;
                    let snap = |v: f64| if v.abs() < 1e-15 { 0.0 } else { v };
                    vec![snap(theta.cos()), snap(theta.sin())]
                })
                .collect();
            let neg: Vec<Vec<f64>> = dirs.iter().map(|d| d.iter().map(|x| -x).collect()).collect();
            dirs.extend(neg);
            dirs
        }
        _ => {
            let total = 3usize.pow(n1 as u32);
            (0..total)
                .filter(|&code| code != (total - 1) / 2)
                .map(|mut code| {
                    let mut v = Vec::with_capacity(n1);
                    for _ in 0..n1 {
                        v.push((code % 3) as f64 - 1.0);
                        code /= 3;
                    }
                    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    v.iter().map(|x| x / norm).collect()
                })
                .collect()
        }
    }
}

/// One stencil evaluation over all interior nodes.
#[derive(Clone, Debug)]
pub struct Evaluation {
    /// Rate per interior node, in [`Scheme::interior`] order.
    pub rates: Vec<f64>,
    /// Largest `|u(target) - u(node)| / delta` over all stencils.
    pub max_slope: f64,
    /// Range of lateral data sampled at off-domain targets.
    pub data_range: (f64, f64),
}

/// Stencil table for a problem. Flow targets depend only on geometry, so they
/// are located once and reused at every time level.
pub struct Scheme {
    grid: Arc<GridSpec>,
    g: ScalarField,
    h: f64,
    delta: f64,
    cfl_factor: f64,
    directions: Vec<Vec<f64>>,
    interior: Vec<usize>,
    boundary: Vec<usize>,
    /// Target `j` reads `weights[spans[j]..spans[j + 1]]` at `nodes[..]`;
    /// an empty span marks an off-domain target.
    spans: Vec<u32>,
    nodes: Vec<u32>,
    weights: Vec<f64>,
    /// Clamped points of off-domain targets, sorted by target index.
    exterior: Vec<(u32, Vec<f64>)>,
}

/// Stencil of one interior node: interpolation entries per direction.
struct NodeStencil {
    spans: Vec<u32>,
    nodes: Vec<u32>,
    weights: Vec<f64>,
    exterior: Vec<(u32, Vec<f64>)>,
}

impl Scheme {
    pub fn new(problem: &CauchyDirichletProblem, config: &SolverConfig) -> Result<Self, SolverError> {
        config.validate()?;
        let grid = Arc::clone(problem.grid());
        let group = problem.group();
        let n = grid.dim();
        let delta = grid.delta();
        let directions = sample_directions(group.n1(), config.direction_samples);
        let interior = grid.interior_nodes();
        let boundary = grid.boundary_nodes();
        let corners = grid.corner_offsets();
        let per_node: Vec<NodeStencil> = interior
            .par_iter()
            .map(|&node| {
                let p = grid.node_coords(node);
                let mut st = NodeStencil {
                    spans: Vec::with_capacity(directions.len()),
                    nodes: Vec::new(),
                    weights: Vec::new(),
                    exterior: Vec::new(),
                };
                let mut step = vec![0.0; n];
                for (j, eta) in directions.iter().enumerate() {
                    for (s, e) in step.iter_mut().zip(eta) {
                        *s = delta * e;
                    }
                    let q = group.multiply_coords(&p, &step);
                    st.spans.push(st.nodes.len() as u32);
                    if grid.contains(&q) {
                        let (base, frac) = grid.locate(&q);
                        for (mask, off) in corners.iter().enumerate() {
                            let w: f64 = frac
                                .iter()
                                .enumerate()
                                .map(|(d, &f)| if mask >> d & 1 == 1 { f } else { 1.0 - f })
                                .product();
                            if w != 0.0 {
                                st.nodes.push((base + off) as u32);
                                st.weights.push(w);
                            }
                        }
                    } else {
                        st.exterior.push((j as u32, grid.clamp(&q)));
                    }
                }
                st
            })
            .collect();
        let m = directions.len();
        let mut spans = Vec::with_capacity(interior.len() * m + 1);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let mut exterior = Vec::new();
        for (k, st) in per_node.into_iter().enumerate() {
            let offset = nodes.len() as u32;
            spans.extend(st.spans.iter().map(|s| s + offset));
            nodes.extend(st.nodes);
            weights.extend(st.weights);
            exterior.extend(st.exterior.into_iter().map(|(j, q)| ((k * m) as u32 + j, q)));
        }
        spans.push(nodes.len() as u32);
        if u32::try_from(grid.node_count()).is_err() || u32::try_from(interior.len() * m).is_err() {
            return Err(SolverError::Grid("grid too large for 32-bit stencil indices".into()));
        }
        Ok(Self {
            g: problem.g().clone(),
            h: problem.h(),
            delta,
            cfl_factor: config.cfl_factor,
            directions,
            interior,
            boundary,
            spans,
            nodes,
            weights,
            exterior,
            grid,
        })
    }

    pub fn grid(&self) -> &Arc<GridSpec> {
        &self.grid
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn outside_target_count(&self) -> usize {
        self.exterior.len()
    }

    /// Clamped boundary points read by off-domain targets, deduplicated.
    pub fn exterior_points(&self) -> Vec<Vec<f64>> {
        let mut pts: Vec<Vec<f64>> = self.exterior.iter().map(|(_, q)| q.clone()).collect();
        pts.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
        pts.dedup();
        pts
    }

    /// Extreme neighbour values of interior node `k` (index into `interior`)
    /// plus the range of lateral data sampled off-domain.
    fn extremes(&self, values: &[f64], k: usize, t: f64) -> (f64, f64, f64, f64) {
        let m = self.directions.len();
        let (mut max, mut min) = (f64::NEG_INFINITY, f64::INFINITY);
        let (mut dlo, mut dhi) = (f64::INFINITY, f64::NEG_INFINITY);
        for j in k * m..(k + 1) * m {
            let (lo, hi) = (self.spans[j] as usize, self.spans[j + 1] as usize);
            let v = if lo == hi {
                let v = self.exterior_value(j, t);
                dlo = dlo.min(v);
                dhi = dhi.max(v);
                v
            } else {
                self.nodes[lo..hi].iter().zip(&self.weights[lo..hi]).map(|(&n, &w)| w * values[n as usize]).sum()
            };
            max = max.max(v);
            min = min.min(v);
        }
        (max, min, dlo, dhi)
    }

    #[cold]
    fn exterior_value(&self, j: usize, t: f64) -> f64 {
        let i = self.exterior.partition_point(|(jj, _)| (*jj as usize) < j);
        self.g.eval(&self.exterior[i].1, t)
    }

    pub fn evaluate(&self, u: &GridFunction) -> Evaluation {
        let values = u.values();
        let t = u.time();
        let per_node: Vec<(f64, f64, f64, f64)> = (0..self.interior.len())
            .into_par_iter()
            .map(|k| {
                let u0 = values[self.interior[k]];
                let (max, min, dlo, dhi) = self.extremes(values, k, t);
                let slope = (max - u0).abs().max((u0 - min).abs()) / self.delta;
                (monotone_rate(self.h, self.delta, u0, max, min), slope, dlo, dhi)
            })
            .collect();
        let mut rates = Vec::with_capacity(per_node.len());
        let mut max_slope: f64 = 0.0;
        let mut data_range = (f64::INFINITY, f64::NEG_INFINITY);
        for (r, s, lo, hi) in per_node {
            rates.push(r);
            max_slope = max_slope.max(s);
            data_range = (data_range.0.min(lo), data_range.1.max(hi));
        }
        Evaluation { rates, max_slope, data_range }
    }

    /// Largest step certified monotone for stencil slopes up to `max_slope`.
    pub fn cfl_dt(&self, max_slope: f64) -> f64 {
        self.cfl_factor * self.delta * self.delta / (2.0 * max_slope.powf(self.h - 1.0).max(1.0))
    }

    /// Explicit Euler update; boundary nodes take the lateral datum at `t + dt`.
    pub fn advance(&self, u: &GridFunction, eval: &Evaluation, dt: f64) -> Result<GridFunction, SolverError> {
        let t1 = u.time() + dt;
        let mut next = u.values().to_vec();
        for (k, &node) in self.interior.iter().enumerate() {
            next[node] += dt * eval.rates[k];
        }
        for &node in &self.boundary {
            next[node] = self.g.eval(&self.grid.node_coords(node), t1);
        }
        GridFunction::new(Arc::clone(&self.grid), next, t1)
    }

    /// One midrange relaxation sweep `U <- (max + min) / 2` with lateral data
    /// frozen at time `t`. Returns the new level and the sup-norm change.
    pub fn midrange_sweep(&self, u: &GridFunction) -> (GridFunction, f64) {
        let values = u.values();
        let updates: Vec<f64> = (0..self.interior.len())
            .into_par_iter()
            .map(|k| {
                let (max, min, _, _) = self.extremes(values, k, u.time());
                0.5 * (max + min)
            })
            .collect();
        let mut next = values.to_vec();
        let mut change: f64 = 0.0;
        for (k, &node) in self.interior.iter().enumerate() {
            change = change.max((updates[k] - next[node]).abs());
            next[node] = updates[k];
        }
        let out = GridFunction::new(Arc::clone(&self.grid), next, u.time())
            .expect("midrange of finite values is finite");
        (out, change)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directions_are_symmetric_units() {
        for (n1, m) in [(1, 16), (2, 4), (2, 16), (2, 10), (3, 16)] {
            let dirs = sample_directions(n1, m);
            for d in &dirs {
                let norm: f64 = d.iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!((norm - 1.0).abs() < 1e-15);
                let neg: Vec<f64> = d.iter().map(|x| -x).collect();
                assert!(dirs.contains(&neg), "{n1} {m}: {d:?}");
            }
        }
        assert_eq!(sample_directions(2, 16).len(), 16);
        assert_eq!(sample_directions(3, 16).len(), 26);
        assert_eq!(sample_directions(2, 4)[1], vec![0.0, 1.0]);
    }

    #[test]
    fn rate_reduces_to_midrange_for_h1() {
        let r = monotone_rate(1.0, 0.5, 1.0, 3.0, 0.0);
        assert_eq!(r, (3.0 + 0.0 - 2.0) / 0.25);
    }

    #[test]
    fn rate_is_monotone_in_neighbours() {
        let base = monotone_rate(3.0, 0.1, 0.2, 0.5, -0.1);
        assert!(monotone_rate(3.0, 0.1, 0.2, 0.6, -0.1) > base);
        assert!(monotone_rate(3.0, 0.1, 0.2, 0.5, 0.0) > base);
        assert!(monotone_rate(3.0, 0.1, 0.25, 0.5, -0.1) < base);
    }
}
