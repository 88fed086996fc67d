//! Finite simplicial complexes on nodes `0..n`.
//!
//! Dimension 0 is implicit: every node is present. Levels `d >= 1` hold
//! canonical (sorted, duplicate-free) vertex tuples.

use std::borrow::Borrow;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Largest pattern accepted by the exhaustive homomorphism routines.
pub const MAX_PATTERN_NODES: usize = 6;

/// A simplex stored as a strictly increasing list of node ids.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Simplex(SmallVec<[usize; 4]>);

impl Simplex {
    /// Builds a simplex from arbitrary-order vertices. Rejects empty input and
    /// repeated vertices.
    pub fn new(vertices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut v: SmallVec<[usize; 4]> = vertices.into_iter().collect();
        if v.is_empty() {
            return Err(Error::domain("a simplex needs at least one vertex"));
        }
        v.sort_unstable();
        if v.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::domain(format!("repeated vertex in simplex {v:?}")));
        }
        Ok(Simplex(v))
    }

    /// Caller guarantees `sorted` is strictly increasing.
    pub(crate) fn from_sorted(sorted: &[usize]) -> Self {
        debug_assert!(sorted.windows(2).all(|w| w[0] < w[1]));
        Simplex(SmallVec::from_slice(sorted))
    }

    pub fn vertices(&self) -> &[usize] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len() - 1
    }

    /// The codimension-1 faces, obtained by dropping one vertex at a time.
    pub fn facets(&self) -> impl Iterator<Item = Simplex> + '_ {
        let k = self.0.len();
        (0..if k > 1 { k } else { 0 }).map(move |skip| {
            Simplex(
                self.0
                    .iter()
                    .enumerate()
                    .filter(|&(p, _)| p != skip)
                    .map(|(_, &x)| x)
                    .collect(),
            )
        })
    }
}

impl Borrow<[usize]> for Simplex {
    fn borrow(&self) -> &[usize] {
        &self.0
    }
}

impl fmt::Debug for Simplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

/// A simplicial complex. `levels[d - 1]` holds the `d`-simplices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SimplicialComplex {
    num_nodes: usize,
    levels: Vec<BTreeSet<Simplex>>,
}

impl SimplicialComplex {
    pub fn empty(num_nodes: usize) -> Self {
        SimplicialComplex {
            num_nodes,
            levels: Vec::new(),
        }
    }

    /// Collects simplices of dimension >= 1 without checking closure.
    /// Singletons are ignored since nodes are implicit.
    pub fn from_raw<I, S>(num_nodes: usize, simplices: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: IntoIterator<Item = usize>,
    {
        let mut k = SimplicialComplex::empty(num_nodes);
        for s in simplices {
            let s = Simplex::new(s)?;
            if let Some(&v) = s.vertices().iter().find(|&&v| v >= num_nodes) {
                return Err(Error::domain(format!(
                    "vertex {v} out of range for {num_nodes} nodes"
                )));
            }
            k.insert(s);
        }
        Ok(k)
    }

    /// Like [`from_raw`](Self::from_raw) but rejects input that is not closed
    /// under restriction.
    pub fn from_simplices<I, S>(num_nodes: usize, simplices: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: IntoIterator<Item = usize>,
    {
        let k = Self::from_raw(num_nodes, simplices)?;
        match k.first_missing_face() {
            None => Ok(k),
            Some((s, face)) => Err(Error::domain(format!(
                "not closed under restriction: {s:?} is present but its face {face:?} is not"
            ))),
        }
    }

    /// Builds the smallest complex containing the given simplices and all of
    /// their faces.
    pub fn closure_of<I, S>(num_nodes: usize, simplices: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: IntoIterator<Item = usize>,
    {
        let mut k = Self::from_raw(num_nodes, simplices)?;
        for d in (2..=k.max_dim()).rev() {
            let faces: Vec<Simplex> = k.levels[d - 1].iter().flat_map(|s| s.facets()).collect();
            for f in faces {
                k.insert(f);
            }
        }
        Ok(k)
    }

    pub(crate) fn insert(&mut self, s: Simplex) {
        let d = s.dim();
        if d == 0 {
            return;
        }
        while self.levels.len() < d {
            self.levels.push(BTreeSet::new());
        }
        self.levels[d - 1].insert(s);
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Largest `d` with a nonempty level; 0 when there are no edges.
    pub fn max_dim(&self) -> usize {
        self.levels
            .iter()
            .rposition(|l| !l.is_empty())
            .map_or(0, |p| p + 1)
    }

    /// The `d`-simplices in lexicographic order. For `d == 0` this yields the
    /// nodes as singletons.
    pub fn simplices(&self, d: usize) -> Box<dyn Iterator<Item = Simplex> + '_> {
        if d == 0 {
            Box::new((0..self.num_nodes).map(|v| Simplex::from_sorted(&[v])))
        } else {
            match self.levels.get(d - 1) {
                Some(l) => Box::new(l.iter().cloned()),
                None => Box::new(std::iter::empty()),
            }
        }
    }

    pub(crate) fn level(&self, d: usize) -> Option<&BTreeSet<Simplex>> {
        debug_assert!(d >= 1);
        self.levels.get(d - 1)
    }

    /// Number of `d`-simplices (`d = 0` counts nodes).
    pub fn count(&self, d: usize) -> usize {
        if d == 0 {
            self.num_nodes
        } else {
            self.levels.get(d - 1).map_or(0, |l| l.len())
        }
    }

    /// Per-dimension counts `[|K^(1)|, ..., |K^(max_dim)|]`.
    pub fn counts(&self) -> Vec<usize> {
        (1..=self.max_dim()).map(|d| self.count(d)).collect()
    }

    /// Membership of a sorted vertex tuple. Singletons are nodes.
    pub fn contains(&self, sorted: &[usize]) -> bool {
        match sorted.len() {
            0 => false,
            1 => sorted[0] < self.num_nodes,
            k => self
                .levels
                .get(k - 2)
                .is_some_and(|l| l.contains(sorted)),
        }
    }

    fn first_missing_face(&self) -> Option<(Simplex, Simplex)> {
        for level in self.levels.iter().skip(1) {
            for s in level {
                for f in s.facets() {
                    if !self.contains(f.vertices()) {
                        return Some((s.clone(), f));
                    }
                }
            }
        }
        None
    }

    /// True iff every codimension-1 face of every simplex is present, which
    /// by induction covers every proper face.
    pub fn validate_closure(&self) -> bool {
        self.first_missing_face().is_none()
    }

    /// Number of `d`-simplices incident to node `i`.
    pub fn degree(&self, i: usize, d: usize) -> Result<usize> {
        if i >= self.num_nodes {
            return Err(Error::domain(format!(
                "node {i} out of range for {} nodes",
                self.num_nodes
            )));
        }
        if d == 0 {
            return Err(Error::domain("degree is defined for dimensions d >= 1"));
        }
        Ok(self
            .level(d)
            .map_or(0, |l| l.iter().filter(|s| s.vertices().contains(&i)).count()))
    }

    /// Degrees of every node at dimension `d`, in one pass.
    pub fn degrees(&self, d: usize) -> Vec<usize> {
        let mut deg = vec![0; self.num_nodes];
        if d >= 1 {
            if let Some(l) = self.level(d) {
                for s in l {
                    for &v in s.vertices() {
                        deg[v] += 1;
                    }
                }
            }
        }
        deg
    }

    /// Dense boolean adjacency of the 1-skeleton, row-major.
    pub fn adjacency(&self) -> Vec<bool> {
        let n = self.num_nodes;
        let mut adj = vec![false; n * n];
        if let Some(edges) = self.level(1) {
            for e in edges {
                let (a, b) = (e.vertices()[0], e.vertices()[1]);
                adj[a * n + b] = true;
                adj[b * n + a] = true;
            }
        }
        adj
    }

    /// Renames node `v` to `new_id[v]`. `new_id` must be a permutation.
    pub fn relabel(&self, new_id: &[usize]) -> Result<Self> {
        if new_id.len() != self.num_nodes {
            return Err(Error::shape(format!(
                "relabeling has {} entries for {} nodes",
                new_id.len(),
                self.num_nodes
            )));
        }
        let mut seen = vec![false; self.num_nodes];
        for &v in new_id {
            if v >= self.num_nodes || std::mem::replace(&mut seen[v], true) {
                return Err(Error::domain("relabeling is not a permutation"));
            }
        }
        let mut out = SimplicialComplex::empty(self.num_nodes);
        for level in &self.levels {
            for s in level {
                out.insert(Simplex::new(s.vertices().iter().map(|&v| new_id[v]))?);
            }
        }
        Ok(out)
    }

    /// All simplices of dimension >= 1 as plain vectors, lowest dimension
    /// first.
    pub fn to_lists(&self) -> Vec<Vec<usize>> {
        self.levels
            .iter()
            .flat_map(|l| l.iter().map(|s| s.vertices().to_vec()))
            .collect()
    }
}

/// Extends the `(d-1)`-simplices of `k` to all `d`-sets whose faces are all
/// present, in lexicographic order. `adj` is the dense 1-skeleton.
pub(crate) fn clique_candidates(k: &SimplicialComplex, adj: &[bool], d: usize) -> Vec<Simplex> {
    let n = k.num_nodes();
    let mut out = Vec::new();
    let Some(lower) = k.level(d - 1) else {
        return out;
    };
    let mut buf: SmallVec<[usize; 6]> = SmallVec::new();
    for s in lower {
        let verts = s.vertices();
        let last = *verts.last().expect("nonempty simplex");
        for v in last + 1..n {
            if !verts.iter().all(|&u| adj[u * n + v]) {
                continue;
            }
            // Faces containing v other than edges need an explicit lookup.
            let ok = d < 3 || {
                (0..verts.len()).all(|skip| {
                    buf.clear();
                    buf.extend(verts.iter().enumerate().filter(|&(p, _)| p != skip).map(|(_, &x)| x));
                    buf.push(v);
                    k.contains(&buf)
                })
            };
            if ok {
                let mut full: SmallVec<[usize; 6]> = SmallVec::from_slice(verts);
                full.push(v);
                out.push(Simplex::from_sorted(&full));
            }
        }
    }
    out
}

/// Vietoris–Rips complex of a planar point cloud: an edge joins points at
/// Euclidean distance `<= eps`, and higher simplices are the cliques of that
/// graph up to `max_dim`.
pub fn vietoris_rips(points: &[[f64; 2]], eps: f64, max_dim: usize) -> Result<SimplicialComplex> {
    if points.len() < 2 {
        return Err(Error::domain("Vietoris-Rips needs at least two points"));
    }
    if !(eps > 0.0) {
        return Err(Error::domain(format!("radius must be positive, got {eps}")));
    }
    if max_dim < 1 {
        return Err(Error::domain("max_dim must be at least 1"));
    }
    let n = points.len();
    let mut k = SimplicialComplex::empty(n);
    let mut adj = vec![false; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let dx = points[i][0] - points[j][0];
            let dy = points[i][1] - points[j][1];
            if (dx * dx + dy * dy).sqrt() <= eps {
                adj[i * n + j] = true;
                adj[j * n + i] = true;
                k.insert(Simplex::from_sorted(&[i, j]));
            }
        }
    }
    for d in 2..=max_dim {
        let next = clique_candidates(&k, &adj, d);
        if next.is_empty() {
            break;
        }
        for s in next {
            k.insert(s);
        }
    }
    Ok(k)
}

/// Simplices of `f` grouped by the largest vertex they contain, so that a
/// depth-first vertex assignment can check each simplex as soon as it is fully
/// mapped.
pub(crate) fn simplices_by_last_vertex(f: &SimplicialComplex) -> Vec<Vec<Simplex>> {
    let mut by_last = vec![Vec::new(); f.num_nodes()];
    for d in 1..=f.max_dim() {
        for s in f.simplices(d) {
            let last = *s.vertices().last().expect("nonempty simplex");
            by_last[last].push(s);
        }
    }
    by_last
}

pub(crate) fn check_pattern_size(f: &SimplicialComplex) -> Result<()> {
    if f.num_nodes() > MAX_PATTERN_NODES {
        return Err(Error::Capability(format!(
            "pattern has {} nodes; exhaustive enumeration is capped at {MAX_PATTERN_NODES}",
            f.num_nodes()
        )));
    }
    Ok(())
}

/// Counts maps `phi: F^(0) -> K^(0)` under which every simplex of `F` lands
/// on a simplex of `K` of the same dimension (no collapsing).
pub fn homomorphism_count(f: &SimplicialComplex, k: &SimplicialComplex) -> Result<u64> {
    check_pattern_size(f)?;
    let by_last = simplices_by_last_vertex(f);
    let adj = k.adjacency();
    let mut phi = vec![0usize; f.num_nodes()];
    Ok(count_extensions(0, &mut phi, &by_last, k, &adj))
}

fn count_extensions(
    v: usize,
    phi: &mut [usize],
    by_last: &[Vec<Simplex>],
    k: &SimplicialComplex,
    adj: &[bool],
) -> u64 {
    if v == phi.len() {
        return 1;
    }
    let n = k.num_nodes();
    let mut total = 0;
    let mut image: SmallVec<[usize; 6]> = SmallVec::new();
    'targets: for target in 0..n {
        phi[v] = target;
        for s in &by_last[v] {
            let verts = s.vertices();
            if verts.len() == 2 {
                if !adj[phi[verts[0]] * n + target] {
                    continue 'targets;
                }
                continue;
            }
            image.clear();
            image.extend(verts.iter().map(|&u| phi[u]));
            image.sort_unstable();
            if image.windows(2).any(|w| w[0] == w[1]) || !k.contains(&image) {
                continue 'targets;
            }
        }
        total += count_extensions(v + 1, phi, by_last, k, adj);
    }
    total
}

/// `hom(F, K) / |K^(0)|^{|F^(0)|}`: the fraction of all vertex maps that are
/// homomorphisms.
pub fn homomorphism_density(f: &SimplicialComplex, k: &SimplicialComplex) -> Result<f64> {
    let count = homomorphism_count(f, k)?;
    if k.num_nodes() == 0 {
        return Err(Error::domain("homomorphism density into a complex with no nodes"));
    }
    Ok(count as f64 / (k.num_nodes() as f64).powi(f.num_nodes() as i32))
}

/// A probability vector over classes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SoftLabel(Vec<f64>);

impl SoftLabel {
    pub const TOLERANCE: f64 = 1e-9;

    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::domain("label must have at least one class"));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::domain(format!("label entries must be >= 0, got {probs:?}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > Self::TOLERANCE {
            return Err(Error::domain(format!("label sums to {sum}, expected 1")));
        }
        Ok(SoftLabel(probs))
    }

    pub fn one_hot(class: usize, num_classes: usize) -> Self {
        let mut p = vec![0.0; num_classes];
        p[class] = 1.0;
        SoftLabel(p)
    }

    /// Scales a nonnegative vector to sum 1.
    pub fn normalized(mut probs: Vec<f64>) -> Result<Self> {
        let sum: f64 = probs.iter().sum();
        if !(sum > 0.0) {
            return Err(Error::domain("cannot normalize a zero label"));
        }
        probs.iter_mut().for_each(|p| *p /= sum);
        SoftLabel::new(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn num_classes(&self) -> usize {
        self.0.len()
    }

    /// Index of the largest entry; the lowest index wins ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (c, &p) in self.0.iter().enumerate() {
            if p > self.0[best] {
                best = c;
            }
        }
        best
    }
}

/// A complex or complexon paired with its label.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSample<P> {
    pub id: String,
    pub payload: P,
    pub label: SoftLabel,
}
