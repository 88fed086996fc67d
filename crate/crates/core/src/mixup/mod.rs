//! Pairwise and convex-clustering mixup of complexons, and label mixing.

mod clusterpath;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::complexon::{convex_combination, StepComplexon};
use crate::error::{Error, Result};
use crate::simplicial::SoftLabel;

pub use clusterpath::{
    clusterpath, clusterpath_labels, clusterpath_objective, default_lambda_grid, fused_groups,
    select_mixture,
    Clusterpath, ClusterpathExport, SolverStats,
};

/// Knobs for both mixup styles.
#[derive(Clone, Debug, PartialEq)]
pub struct MixupConfig {
    /// Fusion weight between samples of different classes.
    pub epsilon_crossclass: f64,
    pub lambda_grid_size: usize,
    /// Relative primal/dual residual target of the splitting solver.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Two mixtures are fused when their summed per-level L1 distance is
    /// below this.
    pub eps_fuse: f64,
    pub label_scheme: LabelScheme,
    /// Sharpness `a` of the sigmoid and logit label maps.
    pub sharpness: f64,
}

impl Default for MixupConfig {
    fn default() -> Self {
        MixupConfig {
            epsilon_crossclass: 0.1,
            lambda_grid_size: 50,
            tolerance: 1e-6,
            max_iterations: 5000,
            eps_fuse: 1e-5,
            label_scheme: LabelScheme::ConvexClustering,
            sharpness: 2.0,
        }
    }
}

impl MixupConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("epsilon", self.epsilon_crossclass),
            ("tolerance", self.tolerance),
            ("eps_fuse", self.eps_fuse),
            ("sharpness", self.sharpness),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        if self.lambda_grid_size < 2 {
            return Err(Error::domain("lambda grid needs at least two points"));
        }
        if self.max_iterations == 0 {
            return Err(Error::domain("max_iterations must be positive"));
        }
        Ok(())
    }
}

/// How a synthetic label is formed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LabelScheme {
    Linear,
    Sigmoid,
    Logit,
    /// Average label of the fused group the mixture belongs to.
    ConvexClustering,
}

impl LabelScheme {
    pub const ALL: [LabelScheme; 4] = [
        LabelScheme::Linear,
        LabelScheme::Sigmoid,
        LabelScheme::Logit,
        LabelScheme::ConvexClustering,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LabelScheme::Linear => "linear",
            LabelScheme::Sigmoid => "sigmoid",
            LabelScheme::Logit => "logit",
            LabelScheme::ConvexClustering => "cvx",
        }
    }
}

impl fmt::Display for LabelScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LabelScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(LabelScheme::Linear),
            "sigmoid" => Ok(LabelScheme::Sigmoid),
            "logit" => Ok(LabelScheme::Logit),
            "cvx" | "cvx-clust" | "convex-clustering" => Ok(LabelScheme::ConvexClustering),
            other => Err(Error::domain(format!("unknown label scheme {other:?}"))),
        }
    }
}

/// How synthetic complexons are formed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DataScheme {
    Linear,
    ConvexClustering,
}

impl DataScheme {
    pub const ALL: [DataScheme; 2] = [DataScheme::Linear, DataScheme::ConvexClustering];

    pub fn name(self) -> &'static str {
        match self {
            DataScheme::Linear => "linear",
            DataScheme::ConvexClustering => "cvx",
        }
    }
}

impl fmt::Display for DataScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DataScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(DataScheme::Linear),
            "cvx" | "cvx-clust" | "convex-clustering" | "clusterpath" => {
                Ok(DataScheme::ConvexClustering)
            }
            other => Err(Error::domain(format!("unknown data scheme {other:?}"))),
        }
    }
}

impl Serialize for DataScheme {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl Serialize for LabelScheme {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

/// `(1 - lambda) * wi + lambda * wj`.
pub fn linear_mixup(wi: &StepComplexon, wj: &StepComplexon, lambda: f64) -> Result<StepComplexon> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::domain(format!("lambda must lie in [0, 1], got {lambda}")));
    }
    convex_combination(&[wi.clone(), wj.clone()], &[1.0 - lambda, lambda])
}

/// Symmetric fusion weights: 1 within a class (by argmax), `epsilon` across.
#[derive(Clone, Debug, PartialEq)]
pub struct PairWeights {
    size: usize,
    values: Vec<f64>,
}

impl PairWeights {
    /// Builds weights from a full symmetric matrix (diagonal ignored).
    pub fn from_matrix(size: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != size * size {
            return Err(Error::shape(format!(
                "weight matrix has {} entries, expected {}",
                values.len(),
                size * size
            )));
        }
        for i in 0..size {
            for j in 0..size {
                let w = values[i * size + j];
                if i != j && (!(w >= 0.0) || w != values[j * size + i]) {
                    return Err(Error::domain("weights must be nonnegative and symmetric"));
                }
            }
        }
        Ok(PairWeights { size, values })
    }

    pub fn uniform(size: usize, w: f64) -> Self {
        PairWeights {
            size,
            values: vec![w; size * size],
        }
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size + j]
    }

    /// `(i, j, w_ij)` for `i < j`, row by row.
    pub fn pairs(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.size * self.size.saturating_sub(1) / 2);
        for i in 0..self.size {
            for j in i + 1..self.size {
                out.push((i, j, self.get(i, j)));
            }
        }
        out
    }
}

pub fn class_weights(labels: &[SoftLabel], epsilon: f64) -> Result<PairWeights> {
    if !(epsilon > 0.0) {
        return Err(Error::domain(format!("epsilon must be positive, got {epsilon}")));
    }
    let t = labels.len();
    let classes: Vec<usize> = labels.iter().map(SoftLabel::argmax).collect();
    let mut values = vec![0.0; t * t];
    for i in 0..t {
        for j in 0..t {
            if i != j {
                values[i * t + j] = if classes[i] == classes[j] { 1.0 } else { epsilon };
            }
        }
    }
    Ok(PairWeights { size: t, values })
}

/// `g(lambda)` for the three closed-form schemes. The logit map is clamped to
/// `[0, 1]`; the second value reports whether clamping happened.
pub fn label_map(scheme: LabelScheme, lambda: f64, a: f64) -> Result<(f64, bool)> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::domain(format!("lambda must lie in [0, 1], got {lambda}")));
    }
    match scheme {
        LabelScheme::Linear => Ok((lambda, false)),
        LabelScheme::Sigmoid | LabelScheme::Logit if !(a > 0.0) => {
            Err(Error::domain(format!("sharpness must be positive, got {a}")))
        }
        LabelScheme::Sigmoid => Ok((1.0 / (1.0 + (-a * (2.0 * lambda - 1.0)).exp()), false)),
        LabelScheme::Logit => {
            let g = (lambda / (1.0 - lambda)).ln() / (2.0 * a) + 0.5;
            if g.is_nan() {
                return Err(Error::domain("logit map undefined"));
            }
            let clamped = g.clamp(0.0, 1.0);
            Ok((clamped, clamped != g))
        }
        LabelScheme::ConvexClustering => Err(Error::domain(
            "convex-clustering labels come from a clusterpath, not a closed-form map",
        )),
    }
}

/// `(1 - g(lambda)) * yi + g(lambda) * yj`.
pub fn mix_labels(
    yi: &SoftLabel,
    yj: &SoftLabel,
    lambda: f64,
    scheme: LabelScheme,
    a: f64,
) -> Result<SoftLabel> {
    if yi.num_classes() != yj.num_classes() {
        return Err(Error::shape("labels have different class counts"));
    }
    let (g, clamped) = label_map(scheme, lambda, a)?;
    let mixed: Vec<f64> = yi
        .probs()
        .iter()
        .zip(yj.probs())
        .map(|(p, q)| (1.0 - g) * p + g * q)
        .collect();
    if clamped {
        SoftLabel::normalized(mixed)
    } else {
        SoftLabel::new(mixed)
    }
}
