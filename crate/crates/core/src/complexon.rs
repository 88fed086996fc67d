//! Piecewise-constant complexons on a uniform grid.
//!
//! Level `c` (for `c` in `1..=max_dim`) is a dense, row-major array over
//! `n^(c+1)` cells. Dimension 0 is the constant 1 and is not stored.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::simplicial::{check_pattern_size, simplices_by_last_vertex, SimplicialComplex};

/// Symmetry tolerance used when validating externally supplied arrays.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct StepComplexon {
    n: usize,
    levels: Vec<Vec<f64>>,
}

/// Row-major flat offset of a multi-index.
fn flat(n: usize, idx: &[usize]) -> usize {
    idx.iter().fold(0, |acc, &b| acc * n + b)
}

/// Decodes a flat offset into `out`.
fn unflat(n: usize, mut f: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = f % n;
        f /= n;
    }
}

/// The non-decreasing multi-indices of length `arity` over `0..n`, together
/// with a lookup from every flat offset to the position of its sorted tuple.
#[derive(Clone, Debug)]
pub(crate) struct CanonicalCells {
    pub tuples: Vec<Vec<usize>>,
    pub of_flat: Vec<usize>,
}

impl CanonicalCells {
    pub fn new(n: usize, arity: usize) -> Self {
        let total = n.pow(arity as u32);
        let mut position = vec![usize::MAX; total];
        let mut tuples = Vec::new();
        let mut idx = vec![0usize; arity];
        for f in 0..total {
            unflat(n, f, &mut idx);
            if idx.windows(2).all(|w| w[0] <= w[1]) {
                position[f] = tuples.len();
                tuples.push(idx.clone());
            }
        }
        let mut of_flat = vec![0; total];
        let mut sorted = vec![0usize; arity];
        for (f, slot) in of_flat.iter_mut().enumerate() {
            unflat(n, f, &mut sorted);
            sorted.sort_unstable();
            *slot = position[flat(n, &sorted)];
        }
        CanonicalCells { tuples, of_flat }
    }
}

impl StepComplexon {
    /// Validates lengths, range, and symmetry of full arrays.
    pub fn new(n: usize, levels: Vec<Vec<f64>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("resolution must be at least 1"));
        }
        for (i, level) in levels.iter().enumerate() {
            let c = i + 1;
            let expected = n.pow(c as u32 + 1);
            if level.len() != expected {
                return Err(Error::shape(format!(
                    "level {c} has {} entries, expected {expected}",
                    level.len()
                )));
            }
            if let Some(v) = level.iter().find(|v| !(**v >= 0.0 && **v <= 1.0)) {
                return Err(Error::domain(format!("level {c} has entry {v} outside [0, 1]")));
            }
            let cells = CanonicalCells::new(n, c + 1);
            for (f, &canon) in cells.of_flat.iter().enumerate() {
                let rep = flat(n, &cells.tuples[canon]);
                if (level[f] - level[rep]).abs() > SYMMETRY_TOLERANCE {
                    return Err(Error::domain(format!("level {c} is not symmetric")));
                }
            }
        }
        Ok(StepComplexon { n, levels })
    }

    /// Fills every level from a function of the sorted cell index, so the
    /// result is symmetric by construction. Values are clamped to `[0, 1]`.
    pub fn from_fn(n: usize, max_dim: usize, mut f: impl FnMut(usize, &[usize]) -> f64) -> Self {
        assert!(n >= 1, "resolution must be at least 1");
        let levels = (1..=max_dim)
            .map(|c| {
                let cells = CanonicalCells::new(n, c + 1);
                let values: Vec<f64> = cells
                    .tuples
                    .iter()
                    .map(|t| f(c, t).clamp(0.0, 1.0))
                    .collect();
                cells.of_flat.iter().map(|&k| values[k]).collect()
            })
            .collect();
        StepComplexon { n, levels }
    }

    /// Constant `values[c - 1]` at level `c`.
    pub fn constant(n: usize, values: &[f64]) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && **v <= 1.0)) {
            return Err(Error::domain(format!("constant {v} outside [0, 1]")));
        }
        if n == 0 {
            return Err(Error::domain("resolution must be at least 1"));
        }
        Ok(Self::from_fn(n, values.len(), |c, _| values[c - 1]))
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn max_dim(&self) -> usize {
        self.levels.len()
    }

    /// Full row-major array for level `c`.
    pub fn level(&self, c: usize) -> &[f64] {
        &self.levels[c - 1]
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.levels
    }

    /// Value on the cell with bin multi-index `idx` (length `c + 1`).
    pub fn cell(&self, c: usize, idx: &[usize]) -> f64 {
        self.levels[c - 1][flat(self.n, idx)]
    }

    /// Pads with zero levels or drops levels so that `max_dim() == d`.
    pub fn with_max_dim(mut self, d: usize) -> Self {
        self.levels.truncate(d);
        while self.levels.len() < d {
            let c = self.levels.len() + 1;
            self.levels.push(vec![0.0; self.n.pow(c as u32 + 1)]);
        }
        self
    }

    /// True when both objects live on the same grid with the same levels.
    pub fn same_shape(&self, other: &Self) -> bool {
        self.n == other.n && self.levels.len() == other.levels.len()
    }

    fn require_same_shape(&self, other: &Self) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::shape(format!(
                "(n={}, D={}) vs (n={}, D={})",
                self.n,
                self.max_dim(),
                other.n,
                other.max_dim()
            )))
        }
    }

    /// Value of `W^(c)` at `zeta`; coordinate 1.0 falls in the last bin.
    pub fn evaluate(&self, c: usize, zeta: &[f64]) -> Result<f64> {
        if c == 0 || c > self.max_dim() {
            return Err(Error::domain(format!(
                "dimension {c} outside 1..={}",
                self.max_dim()
            )));
        }
        if zeta.len() != c + 1 {
            return Err(Error::shape(format!(
                "dimension {c} takes {} coordinates, got {}",
                c + 1,
                zeta.len()
            )));
        }
        if let Some(z) = zeta.iter().find(|z| !(**z >= 0.0 && **z <= 1.0)) {
            return Err(Error::domain(format!("coordinate {z} outside [0, 1]")));
        }
        let idx: Vec<usize> = zeta.iter().map(|&z| self.bin_of(z)).collect();
        Ok(self.cell(c, &idx))
    }

    pub(crate) fn bin_of(&self, z: f64) -> usize {
        ((z * self.n as f64) as usize).min(self.n - 1)
    }

    /// Exact integral of `|W1^(c) - W2^(c)|`.
    pub fn l1_level(&self, other: &Self, c: usize) -> Result<f64> {
        self.require_same_shape(other)?;
        let (a, b) = (self.level(c), other.level(c));
        Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64)
    }

    /// Sum over levels of the per-level L1 distance.
    pub fn l1_distance(&self, other: &Self) -> Result<f64> {
        (1..=self.max_dim()).map(|c| self.l1_level(other, c)).sum()
    }

    /// Volume-weighted average of the step function over a new grid of
    /// `n_target` bins per axis.
    pub fn resample(&self, n_target: usize) -> Result<Self> {
        if n_target == 0 {
            return Err(Error::domain("target resolution must be at least 1"));
        }
        if n_target == self.n {
            return Ok(self.clone());
        }
        let (n, m) = (self.n, n_target);
        // Measure axis intervals in units of 1 / (n * m) so overlaps are
        // integers: source bin s spans [s*m, (s+1)*m), target t spans
        // [t*n, (t+1)*n). The weight is the overlap as a fraction of t.
        let mut weights = vec![vec![]; m];
        for (t, row) in weights.iter_mut().enumerate() {
            let (lo, hi) = (t * n, (t + 1) * n);
            for s in 0..n {
                let overlap = hi.min((s + 1) * m).saturating_sub(lo.max(s * m));
                if overlap > 0 {
                    row.push((s, overlap as f64 / n as f64));
                }
            }
        }
        let levels = self
            .levels
            .iter()
            .enumerate()
            .map(|(i, src)| {
                let arity = i + 2;
                let mut cur = src.clone();
                // Contract one axis at a time; axes before `axis` are already
                // on the target grid.
                for axis in 0..arity {
                    let outer = m.pow(axis as u32);
                    let inner = n.pow((arity - axis - 1) as u32);
                    let mut next = vec![0.0; outer * m * inner];
                    for o in 0..outer {
                        for (t, row) in weights.iter().enumerate() {
                            let dst = (o * m + t) * inner;
                            for &(s, w) in row {
                                let src = (o * n + s) * inner;
                                for k in 0..inner {
                                    next[dst + k] += w * cur[src + k];
                                }
                            }
                        }
                    }
                    cur = next;
                }
                cur.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
                cur
            })
            .collect();
        Ok(StepComplexon { n: m, levels })
    }
}

/// Entrywise weighted average `sum_i gammas[i] * Ws[i]`.
pub fn convex_combination(ws: &[StepComplexon], gammas: &[f64]) -> Result<StepComplexon> {
    let first = ws.first().ok_or_else(|| Error::domain("no complexons to combine"))?;
    if ws.len() != gammas.len() {
        return Err(Error::shape(format!(
            "{} complexons but {} weights",
            ws.len(),
            gammas.len()
        )));
    }
    check_simplex_weights(gammas)?;
    for w in ws {
        first.require_same_shape(w)?;
    }
    let levels = (0..first.max_dim())
        .map(|l| {
            let mut acc = vec![0.0; first.levels[l].len()];
            for (w, &g) in ws.iter().zip(gammas) {
                if g != 0.0 {
                    for (a, v) in acc.iter_mut().zip(&w.levels[l]) {
                        *a += g * v;
                    }
                }
            }
            acc.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
            acc
        })
        .collect();
    Ok(StepComplexon {
        n: first.n,
        levels,
    })
}

pub(crate) fn check_simplex_weights(gammas: &[f64]) -> Result<()> {
    if let Some(g) = gammas.iter().find(|g| !(**g >= 0.0)) {
        return Err(Error::domain(format!("negative mixture weight {g}")));
    }
    let sum: f64 = gammas.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::domain(format!("mixture weights sum to {sum}, expected 1")));
    }
    Ok(())
}

/// One node per bin; a cell is 1 exactly when its indices are distinct and
/// name a simplex of `k`.
pub fn induce_from_complex(k: &SimplicialComplex) -> Result<StepComplexon> {
    let n = k.num_nodes();
    if n == 0 {
        return Err(Error::domain("cannot induce a complexon from a complex with no nodes"));
    }
    Ok(StepComplexon::from_fn(n, k.max_dim().max(1), |_, idx| {
        let distinct = idx.windows(2).all(|w| w[0] < w[1]);
        if distinct && k.contains(idx) {
            1.0
        } else {
            0.0
        }
    }))
}

/// `t(F, W)`: the exact integral of the product of `W` over the simplices of
/// `F`, computed by summing over all assignments of pattern vertices to bins.
pub fn hom_density_in_complexon(f: &SimplicialComplex, w: &StepComplexon) -> Result<f64> {
    check_pattern_size(f)?;
    if f.max_dim() > w.max_dim() {
        return Err(Error::domain(format!(
            "pattern has dimension {} but complexon stops at {}",
            f.max_dim(),
            w.max_dim()
        )));
    }
    let by_last = simplices_by_last_vertex(f);
    let mut bins = vec![0usize; f.num_nodes()];
    let mut idx = Vec::with_capacity(8);
    let total = sum_assignments(0, 1.0, &mut bins, &by_last, w, &mut idx);
    Ok(total / (w.n as f64).powi(f.num_nodes() as i32))
}

fn sum_assignments(
    v: usize,
    partial: f64,
    bins: &mut [usize],
    by_last: &[Vec<crate::simplicial::Simplex>],
    w: &StepComplexon,
    idx: &mut Vec<usize>,
) -> f64 {
    if v == bins.len() {
        return partial;
    }
    let mut total = 0.0;
    for b in 0..w.n {
        bins[v] = b;
        let mut p = partial;
        for s in &by_last[v] {
            idx.clear();
            idx.extend(s.vertices().iter().map(|&u| bins[u]));
            p *= w.cell(s.dim(), idx);
            if p == 0.0 {
                break;
            }
        }
        if p != 0.0 {
            total += sum_assignments(v + 1, p, bins, by_last, w, idx);
        }
    }
    total
}

/// `sum_c betas[c-1] * ||W1^(c) - W2^(c)||_1`. Each L1 term bounds the cut
/// norm at that level from above.
pub fn cut_distance_surrogate(w1: &StepComplexon, w2: &StepComplexon, betas: &[f64]) -> Result<f64> {
    w1.require_same_shape(w2)?;
    if betas.len() != w1.max_dim() {
        return Err(Error::shape(format!(
            "{} weights for {} levels",
            betas.len(),
            w1.max_dim()
        )));
    }
    if let Some(b) = betas.iter().find(|b| !(**b >= 0.0)) {
        return Err(Error::domain(format!("negative level weight {b}")));
    }
    let mut total = 0.0;
    for (i, &beta) in betas.iter().enumerate() {
        if beta != 0.0 {
            total += beta * w1.l1_level(w2, i + 1)?;
        }
    }
    Ok(total)
}

/// Largest resolution accepted by [`cut_norm_dim1_exact`].
pub const MAX_CUT_NORM_BINS: usize = 14;

/// Exact cut norm of `W1^(1) - W2^(1)`. For step functions the supremum over
/// measurable sets is attained on unions of bins, so enumerating bin subsets
/// `S` and picking the best `T` per `S` is exact.
pub fn cut_norm_dim1_exact(w1: &StepComplexon, w2: &StepComplexon) -> Result<f64> {
    if w1.n != w2.n || w1.max_dim() == 0 || w2.max_dim() == 0 {
        return Err(Error::shape("cut norm needs dimension-1 levels on a shared grid"));
    }
    let n = w1.n;
    if n > MAX_CUT_NORM_BINS {
        return Err(Error::Capability(format!(
            "exact cut norm enumerates 2^n subsets; n = {n} exceeds {MAX_CUT_NORM_BINS}"
        )));
    }
    let diff: Vec<f64> = w1.level(1).iter().zip(w2.level(1)).map(|(a, b)| a - b).collect();
    let mut col = vec![0.0; n];
    let mut best = 0.0f64;
    // Gray-code walk over S: one row enters or leaves per step.
    let mut prev_gray = 0usize;
    for step in 1..(1usize << n) {
        let gray = step ^ (step >> 1);
        let row = (gray ^ prev_gray).trailing_zeros() as usize;
        let sign = if gray & (1 << row) != 0 { 1.0 } else { -1.0 };
        for (t, c) in col.iter_mut().enumerate() {
            *c += sign * diff[row * n + t];
        }
        prev_gray = gray;
        let pos: f64 = col.iter().filter(|c| **c > 0.0).sum();
        let neg: f64 = col.iter().filter(|c| **c < 0.0).sum();
        best = best.max(pos).max(-neg);
    }
    Ok(best / (n * n) as f64)
}

/// Outcome of checking the interpolation bound for one pattern and one
/// mixture.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl BoundReport {
    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }
}

/// Compares `|t(F, sum_i gamma_i W_i) - t(F, W_j)|` against
/// `sum_{i != j} gamma_i * surrogate(W_i, W_j; beta)` with
/// `beta^(c) = |F^(c)|`.
pub fn check_interpolation_bound(
    ws: &[StepComplexon],
    gammas: &[f64],
    j: usize,
    f: &SimplicialComplex,
) -> Result<BoundReport> {
    if j >= ws.len() {
        return Err(Error::domain(format!("index {j} out of range for {} complexons", ws.len())));
    }
    let mixture = convex_combination(ws, gammas)?;
    let lhs = (hom_density_in_complexon(f, &mixture)? - hom_density_in_complexon(f, &ws[j])?).abs();
    let betas: Vec<f64> = (1..=ws[j].max_dim()).map(|c| f.count(c) as f64).collect();
    let mut rhs = 0.0;
    for (i, (w, &g)) in ws.iter().zip(gammas).enumerate() {
        if i != j && g != 0.0 {
            rhs += g * cut_distance_surrogate(w, &ws[j], &betas)?;
        }
    }
    Ok(BoundReport {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-12,
    })
}
