//! Convex-clustering mixup.
//!
//! For a penalty level `t = lambda / (1 - lambda)` the mixtures minimise
//!
//! ```text
//! sum_i  rho_fid(U_i, W_i)  +  t * sum_{i<j} w_ij * rho_fus(U_i, U_j)
//! ```
//!
//! with `rho_fid` the summed per-level squared-L2 integral and `rho_fus` the
//! summed per-level L1 integral. On a shared step grid both integrals are
//! cell-volume-weighted sums over cells, and a cell's volume multiplies both
//! terms, so the program splits into independent scalar problems, one per
//! canonical (sorted) cell:
//!
//! ```text
//! min_u  sum_i (u_i - a_i)^2 + t * sum_{i<j} w_ij |u_i - u_j|
//! ```
//!
//! Each is solved by ADMM over auxiliary differences `v_ij = u_i - u_j`,
//! warm-started along the lambda grid. Since the difference operator covers
//! every pair, its Gram matrix is `T I - 1 1^T` and the `u` step is closed
//! form.

use serde::Serialize;

use super::{MixupConfig, PairWeights};
use crate::complexon::{CanonicalCells, StepComplexon};
use crate::error::{Error, Result};
use crate::simplicial::SoftLabel;

/// Upper end of the default lambda grid (t = 999).
const LAMBDA_MAX: f64 = 0.999;
/// Lower end of the default geometric grid in t.
const T_MIN: f64 = 1e-3;

/// `0` followed by `size - 1` points whose penalty `t = lambda / (1 - lambda)`
/// is geometrically spaced from `1e-3` to `999` (`lambda = 0.999`).
pub fn default_lambda_grid(size: usize) -> Vec<f64> {
    let mut grid = vec![0.0];
    let t_max = LAMBDA_MAX / (1.0 - LAMBDA_MAX);
    let steps = size.saturating_sub(1);
    for k in 0..steps {
        let frac = if steps == 1 { 1.0 } else { k as f64 / (steps - 1) as f64 };
        let t = T_MIN * (t_max / T_MIN).powf(frac);
        grid.push(if k + 1 == steps { LAMBDA_MAX } else { t / (1.0 + t) });
    }
    grid
}

/// Per-lambda convergence summary across all cells.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverStats {
    pub lambda: f64,
    pub max_iterations: usize,
    pub total_iterations: usize,
    pub max_primal_residual: f64,
    pub max_dual_residual: f64,
}

/// The solution family across a lambda grid. Solutions are kept on canonical
/// cells and expanded to full complexons on request.
#[derive(Clone, Debug)]
pub struct Clusterpath {
    n: usize,
    layouts: Vec<CanonicalCells>,
    /// Per canonical coordinate: `volume * multiplicity`.
    cell_weight: Vec<f64>,
    lambdas: Vec<f64>,
    num_samples: usize,
    inputs: Vec<f64>,
    /// One `num_samples * coords` block per lambda, sample-major.
    solutions: Vec<Vec<f64>>,
    groups: Vec<Vec<usize>>,
    mean: StepComplexon,
    stats: Vec<SolverStats>,
}

impl Clusterpath {
    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn num_samples(&self) -> usize {
        self.num_samples
    }

    fn coords(&self) -> usize {
        self.cell_weight.len()
    }

    /// `U_i` at grid position `k`.
    pub fn solution(&self, k: usize, i: usize) -> StepComplexon {
        let p = self.coords();
        self.expand(&self.solutions[k][i * p..(i + 1) * p])
    }

    /// The inputs `W_i` as seen by the solver.
    pub fn input(&self, i: usize) -> StepComplexon {
        let p = self.coords();
        self.expand(&self.inputs[i * p..(i + 1) * p])
    }

    /// Group id per sample at grid position `k`; ids are the smallest member
    /// index of each group.
    pub fn groups(&self, k: usize) -> &[usize] {
        &self.groups[k]
    }

    /// Members of sample `i`'s fused group at grid position `k`.
    pub fn group_members(&self, k: usize, i: usize) -> Vec<usize> {
        let g = self.groups[k][i];
        (0..self.num_samples).filter(|&j| self.groups[k][j] == g).collect()
    }

    /// The grand mean, which is the mixture for every sample at lambda = 1.
    pub fn mean(&self) -> &StepComplexon {
        &self.mean
    }

    pub fn stats(&self) -> &[SolverStats] {
        &self.stats
    }

    fn expand(&self, canon: &[f64]) -> StepComplexon {
        let mut offset = 0;
        let mut levels = Vec::with_capacity(self.layouts.len());
        for layout in &self.layouts {
            let vals = &canon[offset..offset + layout.tuples.len()];
            levels.push(layout.of_flat.iter().map(|&k| vals[k].clamp(0.0, 1.0)).collect());
            offset += layout.tuples.len();
        }
        StepComplexon::new(self.n, levels).expect("canonical expansion is symmetric")
    }

    /// Summed per-level L1 distance between two canonical vectors.
    fn weighted_l1(&self, a: &[f64], b: &[f64]) -> f64 {
        self.cell_weight
            .iter()
            .zip(a.iter().zip(b))
            .map(|(w, (x, y))| w * (x - y).abs())
            .sum()
    }

    /// Mean over samples of the weighted-L1 deviation from the inputs at
    /// grid position `k`.
    pub fn mean_deviation(&self, k: usize) -> f64 {
        let p = self.coords();
        let total: f64 = (0..self.num_samples)
            .map(|i| {
                let r = i * p..(i + 1) * p;
                self.weighted_l1(&self.solutions[k][r.clone()], &self.inputs[r])
            })
            .sum();
        total / self.num_samples as f64
    }

    /// Nearest grid position to `lambda`; `None` means the lambda = 1
    /// endpoint is nearest.
    fn nearest(&self, lambda: f64) -> Option<usize> {
        let mut best = 0;
        for (k, &l) in self.lambdas.iter().enumerate() {
            if (l - lambda).abs() < (self.lambdas[best] - lambda).abs() {
                best = k;
            }
        }
        if (1.0 - lambda).abs() < (self.lambdas[best] - lambda).abs() {
            None
        } else {
            Some(best)
        }
    }

    /// Data behind clusterpath plots.
    pub fn export(&self) -> ClusterpathExport {
        let partitions = (0..self.lambdas.len())
            .map(|k| {
                let mut ids: Vec<usize> = self.groups[k].clone();
                ids.sort_unstable();
                ids.dedup();
                ids.iter()
                    .map(|&g| (0..self.num_samples).filter(|&i| self.groups[k][i] == g).collect())
                    .collect()
            })
            .collect();
        ClusterpathExport {
            lambda_grid: self.lambdas.clone(),
            partitions,
            mean_abs_deviation: (0..self.lambdas.len()).map(|k| self.mean_deviation(k)).collect(),
            solver: self.stats.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ClusterpathExport {
    pub lambda_grid: Vec<f64>,
    pub partitions: Vec<Vec<Vec<usize>>>,
    pub mean_abs_deviation: Vec<f64>,
    pub solver: Vec<SolverStats>,
}

/// Connected components of the relation `||U_i - U_j||_1 < eps_fuse`, where
/// the norm is the summed per-level L1 integral. Ids are smallest members.
pub fn fused_groups(mixtures: &[StepComplexon], eps_fuse: f64) -> Result<Vec<usize>> {
    let t = mixtures.len();
    let mut dist = vec![0.0; t * t];
    for i in 0..t {
        for j in i + 1..t {
            let d = mixtures[i].l1_distance(&mixtures[j])?;
            dist[i * t + j] = d;
            dist[j * t + i] = d;
        }
    }
    Ok(components(t, |i, j| dist[i * t + j] < eps_fuse))
}

fn components(t: usize, linked: impl Fn(usize, usize) -> bool) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..t).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..t {
        for j in i + 1..t {
            if linked(i, j) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                // Keep the smaller index as root so ids are smallest members.
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    (0..t).map(|i| find(&mut parent, i)).collect()
}

/// Scalar fused problem data shared by every cell.
struct PairSystem {
    size: usize,
    first: Vec<usize>,
    second: Vec<usize>,
    weight: Vec<f64>,
}

impl PairSystem {
    fn new(weights: &PairWeights) -> Self {
        let pairs = weights.pairs();
        PairSystem {
            size: weights.len(),
            first: pairs.iter().map(|p| p.0).collect(),
            second: pairs.iter().map(|p| p.1).collect(),
            weight: pairs.iter().map(|p| p.2).collect(),
        }
    }

    fn len(&self) -> usize {
        self.weight.len()
    }

    /// `out = D^T x` where `(D u)_p = u_first - u_second`.
    fn adjoint(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for p in 0..x.len() {
            out[self.first[p]] += x[p];
            out[self.second[p]] -= x[p];
        }
    }
}

/// ADMM iterate for one cell, carried along the lambda grid.
struct CellState {
    u: Vec<f64>,
    v: Vec<f64>,
    /// Scaled dual variable.
    z: Vec<f64>,
    rho: f64,
}

impl CellState {
    fn at_inputs(sys: &PairSystem, a: &[f64]) -> Self {
        let v = (0..sys.len()).map(|p| a[sys.first[p]] - a[sys.second[p]]).collect();
        CellState {
            u: a.to_vec(),
            v,
            z: vec![0.0; sys.len()],
            rho: 2.0 / sys.size as f64,
        }
    }
}

struct Scratch {
    rhs: Vec<f64>,
    dt: Vec<f64>,
    dv: Vec<f64>,
    dz: Vec<f64>,
    diff_v: Vec<f64>,
}

/// Absolute residual floor, relative to the configured tolerance.
const ABS_TOL_FACTOR: f64 = 1e-3;
/// Residual-balancing parameters.
const BALANCE_RATIO: f64 = 10.0;
const BALANCE_FACTOR: f64 = 2.0;
const BALANCE_EVERY: usize = 10;

/// Returns (iterations, primal residual, dual residual).
fn solve_cell(
    sys: &PairSystem,
    a: &[f64],
    t: f64,
    state: &mut CellState,
    scratch: &mut Scratch,
    config: &MixupConfig,
) -> Result<(usize, f64, f64)> {
    let size = sys.size;
    let npairs = sys.len();
    if t == 0.0 {
        *state = CellState::at_inputs(sys, a);
        return Ok((0, 0.0, 0.0));
    }
    let abs_tol = config.tolerance * ABS_TOL_FACTOR;
    let (mut r_norm, mut s_norm) = (f64::INFINITY, f64::INFINITY);
    for iter in 1..=config.max_iterations {
        let rho = state.rho;
        // u-step: (2 I + rho (T I - 1 1^T)) u = 2 a + rho D^T (v - z).
        for p in 0..npairs {
            scratch.diff_v[p] = state.v[p] - state.z[p];
        }
        sys.adjoint(&scratch.diff_v, &mut scratch.dt);
        let mut sum_b = 0.0;
        for i in 0..size {
            scratch.rhs[i] = 2.0 * a[i] + rho * scratch.dt[i];
            sum_b += scratch.rhs[i];
        }
        let shift = rho * sum_b / 2.0;
        let denom = 2.0 + rho * size as f64;
        for i in 0..size {
            state.u[i] = (scratch.rhs[i] + shift) / denom;
        }

        // v-step (soft threshold) and dual update.
        let (mut r2, mut du2, mut v2) = (0.0, 0.0, 0.0);
        for p in 0..npairs {
            let du = state.u[sys.first[p]] - state.u[sys.second[p]];
            let x = du + state.z[p];
            let kappa = t * sys.weight[p] / rho;
            let v_new = if x > kappa {
                x - kappa
            } else if x < -kappa {
                x + kappa
            } else {
                0.0
            };
            scratch.diff_v[p] = v_new - state.v[p];
            state.v[p] = v_new;
            state.z[p] = x - v_new;
            r2 += (du - v_new) * (du - v_new);
            du2 += du * du;
            v2 += v_new * v_new;
        }
        sys.adjoint(&scratch.diff_v, &mut scratch.dv);
        sys.adjoint(&state.z, &mut scratch.dz);
        r_norm = r2.sqrt();
        s_norm = rho * norm(&scratch.dv);
        let eps_pri = (npairs as f64).sqrt() * abs_tol + config.tolerance * du2.sqrt().max(v2.sqrt());
        let eps_dual = (size as f64).sqrt() * abs_tol + config.tolerance * rho * norm(&scratch.dz);
        if r_norm <= eps_pri && s_norm <= eps_dual {
            return Ok((iter, r_norm, s_norm));
        }
        if iter % BALANCE_EVERY == 0 {
            if r_norm > BALANCE_RATIO * s_norm {
                state.rho *= BALANCE_FACTOR;
                state.z.iter_mut().for_each(|z| *z /= BALANCE_FACTOR);
            } else if s_norm > BALANCE_RATIO * r_norm {
                state.rho /= BALANCE_FACTOR;
                state.z.iter_mut().for_each(|z| *z *= BALANCE_FACTOR);
            }
        }
    }
    Err(Error::NonConvergence {
        iterations: config.max_iterations,
        primal: r_norm,
        dual: s_norm,
    })
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Solves the convex-clustering problem at every lambda in `lambda_grid`
/// (ascending, within `[0, 1)`), warm-starting each cell along the grid.
pub fn clusterpath(
    ws: &[StepComplexon],
    weights: &PairWeights,
    lambda_grid: &[f64],
    config: &MixupConfig,
) -> Result<Clusterpath> {
    config.validate()?;
    let t = ws.len();
    if t < 2 {
        return Err(Error::domain("convex clustering needs at least two complexons"));
    }
    if weights.len() != t {
        return Err(Error::shape(format!("{} weights rows for {t} complexons", weights.len())));
    }
    for w in ws {
        if !w.same_shape(&ws[0]) {
            return Err(Error::shape("complexons must share a grid; resample first"));
        }
    }
    if lambda_grid.is_empty()
        || lambda_grid.iter().any(|l| !(0.0..1.0).contains(l))
        || lambda_grid.windows(2).any(|p| p[0] >= p[1])
    {
        return Err(Error::domain("lambda grid must be strictly ascending within [0, 1)"));
    }

    let n = ws[0].resolution();
    let max_dim = ws[0].max_dim();
    let layouts: Vec<CanonicalCells> = (1..=max_dim).map(|c| CanonicalCells::new(n, c + 1)).collect();
    let mut cell_weight = Vec::new();
    let mut reps = Vec::new();
    for (l, layout) in layouts.iter().enumerate() {
        let mut mult = vec![0usize; layout.tuples.len()];
        for &k in &layout.of_flat {
            mult[k] += 1;
        }
        let volume = 1.0 / layout.of_flat.len() as f64;
        for (k, tuple) in layout.tuples.iter().enumerate() {
            cell_weight.push(mult[k] as f64 * volume);
            reps.push((l + 1, tuple.clone()));
        }
    }
    let coords = cell_weight.len();

    let mut inputs = vec![0.0; t * coords];
    for (i, w) in ws.iter().enumerate() {
        for (p, (c, tuple)) in reps.iter().enumerate() {
            inputs[i * coords + p] = w.cell(*c, tuple);
        }
    }

    let sys = PairSystem::new(weights);
    let mut solutions = vec![vec![0.0; t * coords]; lambda_grid.len()];
    let mut stats: Vec<SolverStats> = lambda_grid
        .iter()
        .map(|&lambda| SolverStats {
            lambda,
            max_iterations: 0,
            total_iterations: 0,
            max_primal_residual: 0.0,
            max_dual_residual: 0.0,
        })
        .collect();
    let mut scratch = Scratch {
        rhs: vec![0.0; t],
        dt: vec![0.0; t],
        dv: vec![0.0; t],
        dz: vec![0.0; t],
        diff_v: vec![0.0; sys.len()],
    };
    let mut a = vec![0.0; t];
    for p in 0..coords {
        for i in 0..t {
            a[i] = inputs[i * coords + p];
        }
        let mut state = CellState::at_inputs(&sys, &a);
        for (k, &lambda) in lambda_grid.iter().enumerate() {
            let penalty = lambda / (1.0 - lambda);
            let (iters, r, s) = solve_cell(&sys, &a, penalty, &mut state, &mut scratch, config)?;
            let st = &mut stats[k];
            st.max_iterations = st.max_iterations.max(iters);
            st.total_iterations += iters;
            st.max_primal_residual = st.max_primal_residual.max(r);
            st.max_dual_residual = st.max_dual_residual.max(s);
            for i in 0..t {
                solutions[k][i * coords + p] = state.u[i];
            }
        }
    }

    let mean_gammas = vec![1.0 / t as f64; t];
    let mean = crate::complexon::convex_combination(ws, &mean_gammas)?;

    let mut path = Clusterpath {
        n,
        layouts,
        cell_weight,
        lambdas: lambda_grid.to_vec(),
        num_samples: t,
        inputs,
        solutions,
        groups: Vec::new(),
        mean,
        stats,
    };
    path.groups = (0..lambda_grid.len())
        .map(|k| {
            let sol = &path.solutions[k];
            components(t, |i, j| {
                path.weighted_l1(&sol[i * coords..(i + 1) * coords], &sol[j * coords..(j + 1) * coords])
                    < config.eps_fuse
            })
        })
        .collect();
    Ok(path)
}

/// Objective value of candidate mixtures `us` at penalty `t`, evaluated from
/// full arrays.
pub fn clusterpath_objective(us: &[StepComplexon], ws: &[StepComplexon], weights: &PairWeights, t: f64) -> Result<f64> {
    let mut fid = 0.0;
    for (u, w) in us.iter().zip(ws) {
        if !u.same_shape(w) {
            return Err(Error::shape("mixture and input grids differ"));
        }
        for c in 1..=u.max_dim() {
            let (x, y) = (u.level(c), w.level(c));
            fid += x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum::<f64>() / x.len() as f64;
        }
    }
    let mut fus = 0.0;
    for (i, j, wij) in weights.pairs() {
        fus += wij * us[i].l1_distance(&us[j])?;
    }
    Ok(fid + t * fus)
}

/// The mixture of `i`'s fused group at the grid point nearest `lambda`
/// (the lambda = 1 endpoint maps to the grand mean), together with the group
/// members. A group is represented by the average of its members'
/// solutions, so fused samples share one mixture; a singleton gets `U_i`.
pub fn select_mixture(path: &Clusterpath, lambda: f64, i: usize) -> Result<(StepComplexon, Vec<usize>)> {
    if i >= path.num_samples {
        return Err(Error::domain(format!(
            "sample {i} out of range for {} samples",
            path.num_samples
        )));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::domain(format!("lambda must lie in [0, 1], got {lambda}")));
    }
    Ok(match path.nearest(lambda) {
        Some(k) => {
            let members = path.group_members(k, i);
            let mixture = if members.len() == 1 {
                path.solution(k, i)
            } else {
                let us: Vec<StepComplexon> = members.iter().map(|&m| path.solution(k, m)).collect();
                let g = vec![1.0 / members.len() as f64; members.len()];
                crate::complexon::convex_combination(&us, &g)?
            };
            (mixture, members)
        }
        None => (path.mean.clone(), (0..path.num_samples).collect()),
    })
}

/// Uniform average of the labels in `i`'s fused group at `lambda`.
pub fn clusterpath_labels(
    path: &Clusterpath,
    labels: &[SoftLabel],
    lambda: f64,
    i: usize,
) -> Result<SoftLabel> {
    if labels.len() != path.num_samples {
        return Err(Error::shape(format!(
            "{} labels for {} samples",
            labels.len(),
            path.num_samples
        )));
    }
    let (_, members) = select_mixture(path, lambda, i)?;
    let classes = labels[i].num_classes();
    let mut acc = vec![0.0; classes];
    for &m in &members {
        if labels[m].num_classes() != classes {
            return Err(Error::shape("labels have different class counts"));
        }
        for (a, p) in acc.iter_mut().zip(labels[m].probs()) {
            *a += p;
        }
    }
    SoftLabel::normalized(acc)
}
