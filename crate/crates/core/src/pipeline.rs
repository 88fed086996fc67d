//! End-to-end augmentation: estimate a complexon per training complex, mix
//! complexons, sample new complexes, and mix labels.

use rand::Rng;
use serde::Serialize;

use crate::complexon::StepComplexon;
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::estimation::{default_bin_size, estimate_complexon};
use crate::io::complexon_hash;
use crate::mixup::{
    class_weights, clusterpath, clusterpath_labels, default_lambda_grid, linear_mixup, mix_labels,
    select_mixture, Clusterpath, DataScheme, LabelScheme,
};
use crate::sampling::{derive_seed, rng_from_seed, sample_complex};
use crate::simplicial::{LabeledSample, SimplicialComplex, SoftLabel};

/// Where a synthetic complex came from.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SyntheticProvenance {
    /// SHA-256 of the mixture complexon the complex was sampled from.
    pub source_hash: String,
    pub lambda: f64,
    pub data_scheme: DataScheme,
    pub label_scheme: LabelScheme,
    /// Seed passed to the sampler for this complex.
    pub seed: u64,
    /// Ids of the training samples the mixture was built from.
    pub parents: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSample {
    pub sample: LabeledSample<SimplicialComplex>,
    pub provenance: SyntheticProvenance,
}

/// Brings complexons onto the finest resolution and the largest dimension
/// among them.
pub fn align_complexons(ws: &[StepComplexon]) -> Result<Vec<StepComplexon>> {
    let n = ws.iter().map(StepComplexon::resolution).max().unwrap_or(0);
    let d = ws.iter().map(StepComplexon::max_dim).max().unwrap_or(0);
    ws.iter()
        .map(|w| Ok(w.resample(n)?.with_max_dim(d)))
        .collect()
}

/// A mixed complexon with its label, before any complex is sampled from it.
#[derive(Clone, Debug, PartialEq)]
pub struct Mixture {
    pub complexon: StepComplexon,
    pub label: SoftLabel,
    pub lambda: f64,
    /// Indices of the inputs the mixture was built from.
    pub parents: Vec<usize>,
    /// Seed reserved for sampling from this mixture.
    pub sample_seed: u64,
}

/// Aligned complexons with labels, with the clusterpath computed on first
/// use.
pub struct Augmenter {
    ids: Vec<String>,
    config: PipelineConfig,
    estimates: Vec<StepComplexon>,
    labels: Vec<SoftLabel>,
    mean_label: SoftLabel,
    pairs: Vec<(usize, usize)>,
    nodes: usize,
    path: Option<Clusterpath>,
}

impl Augmenter {
    /// Estimates a complexon for every training complex. Sampled complexes get
    /// the configured node count, or the training-set mean.
    pub fn new(train: &[LabeledSample<SimplicialComplex>], config: &PipelineConfig) -> Result<Self> {
        config.validate()?;
        let mut estimates = Vec::with_capacity(train.len());
        for s in train {
            let k = &s.payload;
            let h = config
                .bin_size
                .unwrap_or_else(|| default_bin_size(k.num_nodes()))
                .min(k.num_nodes());
            estimates.push(estimate_complexon(k, config.tau, h)?);
        }
        let total: usize = train.iter().map(|s| s.payload.num_nodes()).sum();
        let nodes = config.nodes.unwrap_or_else(|| {
            ((total as f64) / (train.len().max(1) as f64)).round().max(1.0) as usize
        });
        Augmenter::from_complexons(
            train.iter().map(|s| s.id.clone()).collect(),
            estimates,
            train.iter().map(|s| s.label.clone()).collect(),
            nodes,
            config,
        )
    }

    /// Starts from existing complexons, which are aligned to a common grid.
    pub fn from_complexons(
        ids: Vec<String>,
        complexons: Vec<StepComplexon>,
        labels: Vec<SoftLabel>,
        nodes: usize,
        config: &PipelineConfig,
    ) -> Result<Self> {
        config.validate()?;
        if complexons.len() < 2 {
            return Err(Error::domain("augmentation needs at least two training samples"));
        }
        if ids.len() != complexons.len() || labels.len() != complexons.len() {
            return Err(Error::shape("ids, complexons and labels differ in length"));
        }
        if nodes == 0 {
            return Err(Error::domain("sampled complexes need at least one node"));
        }
        let estimates = align_complexons(&complexons)?;
        let classes = labels[0].num_classes();
        let mut sum = vec![0.0; classes];
        for y in &labels {
            if y.num_classes() != classes {
                return Err(Error::shape("labels have different class counts"));
            }
            for (a, p) in sum.iter_mut().zip(y.probs()) {
                *a += p;
            }
        }
        let mean_label = SoftLabel::normalized(sum)?;

        let t = complexons.len();
        let all: Vec<(usize, usize)> = (0..t).flat_map(|i| (i + 1..t).map(move |j| (i, j))).collect();
        let discordant: Vec<(usize, usize)> = all
            .iter()
            .copied()
            .filter(|&(i, j)| labels[i].argmax() != labels[j].argmax())
            .collect();
        let pairs = if discordant.is_empty() { all } else { discordant };
        Ok(Augmenter {
            ids,
            config: config.clone(),
            estimates,
            labels,
            mean_label,
            pairs,
            nodes,
            path: None,
        })
    }

    pub fn estimates(&self) -> &[StepComplexon] {
        &self.estimates
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// Node count of every synthetic complex.
    pub fn nodes(&self) -> usize {
        self.nodes
    }

    /// The clusterpath over the aligned complexons, solved on first call.
    pub fn clusterpath(&mut self) -> Result<&Clusterpath> {
        if self.path.is_none() {
            let weights = class_weights(&self.labels, self.config.mixup.epsilon_crossclass)?;
            let grid = default_lambda_grid(self.config.mixup.lambda_grid_size);
            self.path = Some(clusterpath(&self.estimates, &weights, &grid, &self.config.mixup)?);
        }
        Ok(self.path.as_ref().expect("just set"))
    }

    /// `count` mixtures. Item `k` draws all of its randomness from
    /// `derive_seed(seed, k)`.
    ///
    /// Linear data mixup picks a class-discordant pair `(i, j)` (any pair if
    /// only one class is present) and mixes with `lambda ~ U[0, 1]`.
    /// Clusterpath data mixup picks `i` uniformly and takes `i`'s mixture at
    /// the grid point nearest `lambda`. Closed-form label schemes then mix
    /// `y_i` with `y_j` (linear data) or with the mean label (clusterpath
    /// data). Convex-clustering labels average `i`'s fused group, and for
    /// linear data blend the group averages of `i` and `j` by `lambda`.
    pub fn mix(
        &mut self,
        data: DataScheme,
        labels: LabelScheme,
        count: usize,
        seed: u64,
    ) -> Result<Vec<Mixture>> {
        self.mix_with(data, labels, count, seed, None)
    }

    /// [`mix`](Self::mix) with every `lambda` replaced by `fixed_lambda` when
    /// given. The random stream is consumed identically either way.
    pub fn mix_with(
        &mut self,
        data: DataScheme,
        labels: LabelScheme,
        count: usize,
        seed: u64,
        fixed_lambda: Option<f64>,
    ) -> Result<Vec<Mixture>> {
        if let Some(l) = fixed_lambda {
            if !(0.0..=1.0).contains(&l) {
                return Err(Error::domain(format!("lambda must lie in [0, 1], got {l}")));
            }
        }
        if data == DataScheme::ConvexClustering || labels == LabelScheme::ConvexClustering {
            self.clusterpath()?;
        }
        let path = self.path.as_ref();
        let a = self.config.mixup.sharpness;
        let mut out = Vec::with_capacity(count);
        for k in 0..count {
            let mut rng = rng_from_seed(derive_seed(seed, k as u64));
            let drawn: f64 = rng.random();
            let lambda = fixed_lambda.unwrap_or(drawn);
            let (complexon, label, parents) = match data {
                DataScheme::Linear => {
                    let (mut i, mut j) = self.pairs[rng.random_range(0..self.pairs.len())];
                    if rng.random::<bool>() {
                        std::mem::swap(&mut i, &mut j);
                    }
                    let w = linear_mixup(&self.estimates[i], &self.estimates[j], lambda)?;
                    let y = match labels {
                        LabelScheme::ConvexClustering => {
                            let p = path.expect("solved above");
                            let yi = clusterpath_labels(p, &self.labels, lambda, i)?;
                            let yj = clusterpath_labels(p, &self.labels, lambda, j)?;
                            mix_labels(&yi, &yj, lambda, LabelScheme::Linear, a)?
                        }
                        s => mix_labels(&self.labels[i], &self.labels[j], lambda, s, a)?,
                    };
                    (w, y, vec![i, j])
                }
                DataScheme::ConvexClustering => {
                    let p = path.expect("solved above");
                    let i = rng.random_range(0..self.estimates.len());
                    let (w, _) = select_mixture(p, lambda, i)?;
                    let y = match labels {
                        LabelScheme::ConvexClustering => {
                            clusterpath_labels(p, &self.labels, lambda, i)?
                        }
                        s => mix_labels(&self.labels[i], &self.mean_label, lambda, s, a)?,
                    };
                    (w, y, vec![i])
                }
            };
            out.push(Mixture {
                complexon,
                label,
                lambda,
                parents,
                sample_seed: rng.random(),
            });
        }
        Ok(out)
    }

    /// [`mix`](Self::mix), then one complex sampled from each mixture.
    pub fn generate(
        &mut self,
        data: DataScheme,
        labels: LabelScheme,
        count: usize,
        seed: u64,
    ) -> Result<Vec<SyntheticSample>> {
        let mixtures = self.mix(data, labels, count, seed)?;
        mixtures
            .into_iter()
            .enumerate()
            .map(|(k, m)| {
                Ok(SyntheticSample {
                    sample: LabeledSample {
                        id: format!("syn-{k:05}"),
                        payload: sample_complex(&m.complexon, self.nodes, m.sample_seed)?,
                        label: m.label,
                    },
                    provenance: SyntheticProvenance {
                        source_hash: complexon_hash(&m.complexon),
                        lambda: m.lambda,
                        data_scheme: data,
                        label_scheme: labels,
                        seed: m.sample_seed,
                        parents: m.parents.iter().map(|&p| self.ids[p].clone()).collect(),
                    },
                })
            })
            .collect()
    }
}

/// Synthetic samples for `train` under the configured schemes; the count
/// defaults to the training-set size.
pub fn augment(
    train: &[LabeledSample<SimplicialComplex>],
    config: &PipelineConfig,
    seed: u64,
) -> Result<Vec<SyntheticSample>> {
    let count = config.synthetic.unwrap_or(train.len());
    Augmenter::new(train, config)?.generate(config.data_scheme, config.label_scheme(), count, seed)
}
