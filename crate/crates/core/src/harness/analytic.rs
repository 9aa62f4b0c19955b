//! Checks that need no time stepping: group law, jet twisting, the doubling
//! penalty and consistency of the discrete operator.

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ExperimentReport, HarnessError};
use crate::algebra::{CarnotGroup, GroupPoint};
use crate::calculus::{carnot_jet, euclidean_jet, penalty_coords, twist_jet, PenaltySpec, ScalarField};
use crate::operators::{infinity_laplacian, OperatorParams};
use crate::poly::Poly;
use crate::solver::{discrete_operator, CauchyDirichletProblem, GridFunction, GridSpec, SolverConfig};

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Associativity, inverse and identity of the group law on random triples.
pub fn algebra_exactness_experiment(
    groups: &[CarnotGroup],
    triples: usize,
    seed: u64,
) -> Result<ExperimentReport, HarnessError> {
    let started = Instant::now();
    let labels: Vec<&str> = groups.iter().map(|g| g.label()).collect();
    let mut r = ExperimentReport::new(
        "algebra_exactness",
        format!("groups={} triples={triples} seed={seed}", labels.join(",")),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for g in groups {
        let n = g.total_dim();
        let zero = vec![0.0; n];
        let (mut assoc, mut inv, mut ident): (f64, f64, f64) = (0.0, 0.0, 0.0);
        for _ in 0..triples {
            let mut draw = || (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
            let (p, q, s) = (draw(), draw(), draw());
            let left = g.multiply_coords(&g.multiply_coords(&p, &q), &s);
            let right = g.multiply_coords(&p, &g.multiply_coords(&q, &s));
            assoc = assoc.max(max_abs_diff(&left, &right));
            let pinv = g.inverse(&GroupPoint::new(p.clone()))?.into_coords();
            inv = inv.max(max_abs_diff(&g.multiply_coords(&p, &pinv), &zero));
            inv = inv.max(max_abs_diff(&g.multiply_coords(&pinv, &p), &zero));
            ident = ident.max(max_abs_diff(&g.multiply_coords(&p, &zero), &p));
            ident = ident.max(max_abs_diff(&g.multiply_coords(&zero, &p), &p));
        }
        r.measure(format!("{}:associativity", g.label()), assoc)
            .measure(format!("{}:inverse", g.label()), inv)
            .measure(format!("{}:identity", g.label()), ident);
        worst = worst.max(assoc).max(inv).max(ident);
    }
    r.measure("max_error", worst);
    Ok(r.finish(Some(1e-12), worst <= 1e-12, started))
}

/// Monomials of total degree 1..=3 plus a time-dependent term, and the
/// polynomial power of the gauge for step-two groups.
fn twist_corpus(g: &CarnotGroup) -> Vec<Poly> {
    let n = g.total_dim();
    let mut corpus = Vec::new();
    let mut exps = vec![vec![0u32; n + 1]];
    for _ in 0..3 {
        let mut next = Vec::new();
        for e in &exps {
            for i in 0..n {
                let mut f = e.clone();
                f[i] += 1;
                if !next.contains(&f) {
                    next.push(f);
                }
            }
        }
        corpus.extend(next.iter().map(|e| Poly::monomial(1.0, e)));
        exps = next;
    }
    let mut te = vec![0u32; n + 1];
    te[0] = 1;
    te[n] = 1;
    let mut t2 = vec![0u32; n + 1];
    t2[n] = 2;
    corpus.push(&Poly::monomial(1.0, &te) + &Poly::monomial(-0.5, &t2));
    if g.step() == 2 {
        // (|z_1|^2)^2 + |z_2|^2
        let mut sq1 = Poly::zero(n + 1);
        let mut sq2 = Poly::zero(n + 1);
        for (i, &layer) in g.layer_of().iter().enumerate() {
            let x = Poly::var(n + 1, i);
            if layer == 1 {
                sq1 = &sq1 + &(&x * &x);
            } else {
                sq2 = &sq2 + &(&x * &x);
            }
        }
        corpus.push(&(&sq1 * &sq1) + &sq2);
    }
    corpus
}

/// Twisted Euclidean jets against jets computed directly from the frame.
pub fn jet_twist_experiment(group: &CarnotGroup, points: usize, seed: u64) -> Result<ExperimentReport, HarnessError> {
    let started = Instant::now();
    let corpus = twist_corpus(group);
    let n = group.total_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sample: Vec<(GroupPoint, f64)> = (0..points)
        .map(|_| {
            let p = GroupPoint::new((0..n).map(|_| rng.gen_range(-1.5..1.5)).collect());
            (p, rng.gen_range(0.0..1.0))
        })
        .collect();
    let mut worst: f64 = 0.0;
    let mut where_worst = String::new();
    for (k, f) in corpus.iter().enumerate() {
        let field = ScalarField::Polynomial(f.clone());
        for (p, t) in &sample {
            let twisted = twist_jet(group, p, &euclidean_jet(group, f, p, *t)?)?;
            let direct = carnot_jet(group, &field, p, *t)?;
            let err = (twisted.a - direct.a)
                .abs()
                .max((&twisted.eta - &direct.eta).amax())
                .max((&twisted.x - &direct.x).amax());
            if err > worst {
                worst = err;
                where_worst = format!("corpus[{k}] = {f:?} at {:?}, t = {t}", p.coords());
            }
        }
    }
    let mut r = ExperimentReport::new(
        "jet_twist",
        format!("group={} corpus={} points={points} seed={seed}", group.label(), corpus.len()),
    );
    r.measure("max_error", worst).measure("corpus_size", corpus.len() as f64);
    let passed = worst <= 1e-8;
    if !passed {
        r.detail(where_worst);
    }
    Ok(r.finish(Some(1e-8), passed, started))
}

/// Node subset with every index a multiple of the smallest stride that keeps
/// at most `limit` nodes.
fn strided_nodes(grid: &GridSpec, limit: usize) -> Vec<usize> {
    let mut stride = 1;
    loop {
        let count: usize = (0..grid.dim()).map(|d| (grid.nodes_per_axis(d) - 1) / stride + 1).product();
        if count <= limit {
            break;
        }
        stride += 1;
    }
    (0..grid.node_count()).filter(|&n| grid.multi_index(n).iter().all(|i| i % stride == 0)).collect()
}

/// Maximises `u(p) - v(q) - tau phi(p, q)` over node pairs for each `tau`
/// and follows `tau phi` at the maximiser.
pub fn doubling_penalty_experiment(
    group: &CarnotGroup,
    u: &GridFunction,
    v: &GridFunction,
    m: u32,
    taus: &[f64],
) -> Result<ExperimentReport, HarnessError> {
    let started = Instant::now();
    let grid = Arc::clone(u.grid());
    if v.grid() != &grid || grid.dim() != group.total_dim() {
        return Err(HarnessError::Invalid("u and v must share a grid matching the group".into()));
    }
    if taus.is_empty() {
        return Err(HarnessError::Invalid("empty tau sequence".into()));
    }
    for &tau in taus {
        PenaltySpec::new(m, tau)?;
    }
    let nodes = strided_nodes(&grid, 2500);
    let coords: Vec<Vec<f64>> = nodes.iter().map(|&n| grid.node_coords(n)).collect();
    let k = nodes.len();
    let mut phi = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            let qinv: Vec<f64> = coords[j].iter().map(|x| -x).collect();
            phi[i * k + j] = penalty_coords(m, &group.multiply_coords(&coords[i], &qinv));
        }
    }
    let delta = grid.delta();
    let mut r = ExperimentReport::new(
        "doubling_penalty",
        format!("group={} m={m} nodes={k} delta={delta:.6}", group.label()),
    );
    let mut weighted = Vec::with_capacity(taus.len());
    let mut penalties = Vec::with_capacity(taus.len());
    let mut distances = Vec::with_capacity(taus.len());
    for &tau in taus {
        let mut best = (f64::NEG_INFINITY, f64::INFINITY, 0, 0);
        for i in 0..k {
            let ui = u.value(nodes[i]);
            for j in 0..k {
                let f = phi[i * k + j];
                let val = ui - v.value(nodes[j]) - tau * f;
                if val > best.0 || (val == best.0 && f < best.1) {
                    best = (val, f, i, j);
                }
            }
        }
        let (_, f, i, j) = best;
        let dist = group.gauge_distance(&GroupPoint::new(coords[i].clone()), &GroupPoint::new(coords[j].clone()))?;
        r.measure(format!("tau_phi(tau={tau:e})"), tau * f).measure(format!("gauge_dist(tau={tau:e})"), dist);
        weighted.push(tau * f);
        penalties.push(f);
        distances.push(dist);
    }
    let phi_monotone = penalties.windows(2).all(|w| w[1] <= w[0]);
    r.measure("phi_non_increasing", if phi_monotone { 1.0 } else { 0.0 });
    let mut passed = true;
    for (k, w) in weighted.windows(2).enumerate().skip(1) {
        if w[1] > w[0] * (1.0 + 1e-12) + 1e-15 {
            passed = false;
            let mut text = format!("tau * phi increased from tau = {:e} to tau = {:e}", taus[k], taus[k + 1]);
            if penalties[k + 1] == penalties[k] {
                text.push_str(&format!(
                    "; the maximising pair kept the same penalty (distance {:.6}) so tau * phi grew with tau",
                    distances[k + 1]
                ));
            }
            r.detail(text);
        }
    }
    let last = *weighted.last().expect("non-empty");
    if last > 10.0 * delta {
        passed = false;
        r.detail(format!("final tau * phi {last:e} exceeds 10 delta"));
    }
    Ok(r.finish(Some(10.0 * delta), passed, started))
}

/// Refinement study for [`consistency_experiment`].
#[derive(Clone, Debug)]
pub struct ConsistencyCase {
    pub group: CarnotGroup,
    pub h: f64,
    /// Spatial polynomial.
    pub field: Poly,
    pub bounds: (f64, f64),
    /// Nodes per axis on the coarsest grid.
    pub base_nodes: usize,
    /// Number of grids; each halves the spacing and doubles the direction count.
    pub levels: usize,
    pub base_directions: usize,
    /// Sample points need `|grad_0 u|` at least this large.
    pub min_gradient: f64,
}

/// Sup error of the discrete operator against the closed form over
/// nondegenerate coarse nodes, and the fitted convergence order.
pub fn consistency_experiment(case: &ConsistencyCase, config: &SolverConfig) -> Result<ExperimentReport, HarnessError> {
    let started = Instant::now();
    let g = &case.group;
    let n = g.total_dim();
    if case.field.nvars() != n || case.levels < 2 {
        return Err(HarnessError::Invalid("field arity must match the group and levels >= 2".into()));
    }
    let field = ScalarField::spatial_polynomial(case.field.clone());
    let params = OperatorParams::new(case.h)?;
    let (lo, hi) = case.bounds;
    let coarse = GridSpec::cube(n, lo, hi, case.base_nodes, 1.0)?;
    let margin = 2.0 * coarse.delta();
    let mut samples = Vec::new();
    for node in coarse.interior_nodes() {
        let p = coarse.node_coords(node);
        if p.iter().any(|&x| x < lo + margin || x > hi - margin) {
            continue;
        }
        let jet = carnot_jet(g, &field, &GroupPoint::new(p.clone()), 0.0)?;
        let grad = jet.horizontal_gradient();
        if grad.norm() >= case.min_gradient {
            let exact = infinity_laplacian(&params, &grad, &jet.x)?;
            samples.push((p, exact));
        }
    }
    if samples.is_empty() {
        return Err(HarnessError::Invalid("no nondegenerate sample points".into()));
    }
    let mut r = ExperimentReport::new(
        "consistency",
        format!("group={} h={} field={:?} samples={}", g.label(), case.h, case.field, samples.len()),
    );
    let mut errors = Vec::with_capacity(case.levels);
    let mut deltas = Vec::with_capacity(case.levels);
    for level in 0..case.levels {
        let nodes = (case.base_nodes - 1) * (1 << level) + 1;
        let grid = GridSpec::cube(n, lo, hi, nodes, 1.0)?;
        let cfg = SolverConfig { direction_samples: case.base_directions << level, ..config.clone() };
        let problem = CauchyDirichletProblem::new(g.clone(), grid, case.h, field.clone(), field.clone())?;
        let u = GridFunction::from_fn(Arc::clone(problem.grid()), 0.0, |x| field.eval(x, 0.0))?;
        let grid = problem.grid();
        let mut err: f64 = 0.0;
        for (p, exact) in &samples {
            let idx: Vec<usize> =
                p.iter().enumerate().map(|(d, &x)| ((x - lo) / grid.spacing(d)).round() as usize).collect();
            let value = discrete_operator(&problem, &cfg, &u, grid.flat_index(&idx));
            err = err.max((value - exact).abs());
        }
        r.measure(format!("error(delta={:.5})", grid.delta()), err);
        errors.push(err);
        deltas.push(grid.delta());
    }
    if errors[0] < 1e-11 {
        r.detail("discrete operator is exact on this field up to rounding");
        r.measure("order", f64::INFINITY);
        return Ok(r.finish(Some(0.9), true, started));
    }
    for (k, w) in errors.windows(2).enumerate() {
        r.measure(format!("order[{k}]"), (w[0] / w[1]).log2());
    }
    let xs: Vec<f64> = deltas.iter().map(|d| d.log2()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.max(f64::MIN_POSITIVE).log2()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let order = sxy / sxx;
    r.measure("order", order);
    Ok(r.finish(Some(0.9), order >= 0.9, started))
}
