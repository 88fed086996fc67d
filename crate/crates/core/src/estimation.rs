//! Step-complexon estimation from a single complex: sort nodes by a
//! dimension-weighted degree sum, count simplices in histogram cells, then
//! divide out the lower-dimensional faces.

use crate::complexon::StepComplexon;
use crate::error::{Error, Result};
use crate::simplicial::SimplicialComplex;

pub const DEFAULT_TAU: f64 = 0.5;

/// Default bin size `ceil(sqrt(N))`.
pub fn default_bin_size(num_nodes: usize) -> usize {
    ((num_nodes as f64).sqrt().ceil() as usize).max(1)
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("tau must lie in (0, 1), got {tau}")))
    }
}

/// `D_i = sum_c tau^c * degree(i, c)` over `c = 1..=max_dim`.
pub fn degree_sum(k: &SimplicialComplex, tau: f64) -> Result<Vec<f64>> {
    check_tau(tau)?;
    let mut scores = vec![0.0; k.num_nodes()];
    for c in 1..=k.max_dim() {
        let weight = tau.powi(c as i32);
        for (s, d) in scores.iter_mut().zip(k.degrees(c)) {
            *s += weight * d as f64;
        }
    }
    Ok(scores)
}

/// Relabels nodes so degree sums are non-increasing; ties keep the original
/// order. Returns the sorted complex and `new_id[old]`.
pub fn sort_nodes(k: &SimplicialComplex, tau: f64) -> Result<(SimplicialComplex, Vec<usize>)> {
    let scores = degree_sum(k, tau)?;
    let mut order: Vec<usize> = (0..k.num_nodes()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut new_id = vec![0; order.len()];
    for (rank, &old) in order.iter().enumerate() {
        new_id[old] = rank;
    }
    Ok((k.relabel(&new_id)?, new_id))
}

/// Histogram of simplex frequencies on `floor(N / h)` bins of `h` nodes each.
/// Trailing nodes beyond the last full bin are dropped. The cell value is the
/// fraction of ordered node tuples (one node per bin coordinate) that form a
/// simplex; tuples with a repeated node never do.
///
/// Output levels are faceted: they estimate the probability that a simplex
/// *and all of its faces* are present.
pub fn histogram_estimate(k: &SimplicialComplex, h: usize) -> Result<StepComplexon> {
    let n_nodes = k.num_nodes();
    if h == 0 || h > n_nodes {
        return Err(Error::domain(format!(
            "bin size {h} must lie in 1..={n_nodes}"
        )));
    }
    let m = n_nodes / h;
    let kept = m * h;
    let max_dim = k.max_dim().max(1);
    let mut levels = Vec::with_capacity(max_dim);
    for c in 1..=max_dim {
        let mut counts = vec![0.0; m.pow(c as u32 + 1)];
        let mut bins = Vec::with_capacity(c + 1);
        for s in k.simplices(c) {
            if s.vertices().iter().any(|&v| v >= kept) {
                continue;
            }
            bins.clear();
            bins.extend(s.vertices().iter().map(|&v| v / h));
            // Each ordering of the simplex's vertices over the coordinates is
            // one indicator hit in the ordered-tuple sum.
            for_each_permutation(&mut bins, &mut |perm| {
                let f = perm.iter().fold(0, |acc, &b| acc * m + b);
                counts[f] += 1.0;
            });
        }
        let norm = (h as f64).powi(c as i32 + 1);
        counts.iter_mut().for_each(|v| *v /= norm);
        levels.push(counts);
    }
    StepComplexon::new(m, levels)
}

/// Heap's algorithm; visits every ordering of `items` (with repeats when
/// entries coincide, which is what the ordered-tuple count needs).
fn for_each_permutation(items: &mut [usize], visit: &mut impl FnMut(&[usize])) {
    let n = items.len();
    let mut c = vec![0usize; n];
    visit(items);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                items.swap(0, i);
            } else {
                items.swap(c[i], i);
            }
            visit(items);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Converts faceted levels into conditional ones: each level-`c` cell (for
/// `c >= 2`) is divided by the faceted values on every coordinate subset of
/// size `2..=c`. A zero factor yields 0 and quotients are clamped to `[0, 1]`.
pub fn facet_correction(faceted: &StepComplexon) -> StepComplexon {
    let n = faceted.resolution();
    StepComplexon::from_fn(n, faceted.max_dim(), |c, idx| {
        let raw = faceted.cell(c, idx);
        if c == 1 {
            return raw;
        }
        let arity = c + 1;
        let mut denom = 1.0;
        let mut sub = Vec::with_capacity(arity);
        for mask in 1u32..(1 << arity) - 1 {
            let size = mask.count_ones() as usize;
            if size < 2 {
                continue;
            }
            sub.clear();
            sub.extend((0..arity).filter(|p| mask >> p & 1 == 1).map(|p| idx[p]));
            let factor = faceted.cell(size - 1, &sub);
            if factor == 0.0 {
                return 0.0;
            }
            denom *= factor;
        }
        (raw / denom).clamp(0.0, 1.0)
    })
}

/// Sort, histogram, correct.
pub fn estimate_complexon(k: &SimplicialComplex, tau: f64, h: usize) -> Result<StepComplexon> {
    let (sorted, _) = sort_nodes(k, tau)?;
    Ok(facet_correction(&histogram_estimate(&sorted, h)?))
}
