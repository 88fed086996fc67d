//! Motif-density features, a soft-label linear classifier, a synthetic
//! circle-versus-lemniscate task, and the augmentation experiment.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::mixup::{DataScheme, LabelScheme};
use crate::pipeline::Augmenter;
use crate::sampling::{derive_seed, rng_from_seed};
use crate::simplicial::{homomorphism_density, vietoris_rips, LabeledSample, SimplicialComplex, SoftLabel};

/// Small reference complexes whose homomorphism densities serve as features.
#[derive(Clone, Debug, PartialEq)]
pub struct MotifBank {
    pub motifs: Vec<(String, SimplicialComplex)>,
}

impl MotifBank {
    /// Node, edge, 2-path, hollow triangle, filled triangle, and two filled
    /// triangles sharing an edge, in that order.
    pub fn standard() -> Self {
        let mk = |n: usize, s: &[&[usize]]| {
            SimplicialComplex::closure_of(n, s.iter().map(|v| v.to_vec())).expect("valid motif")
        };
        let motifs = vec![
            ("node", mk(1, &[])),
            ("edge", mk(2, &[&[0, 1]])),
            ("path2", mk(3, &[&[0, 1], &[1, 2]])),
            ("hollow_triangle", mk(3, &[&[0, 1], &[1, 2], &[0, 2]])),
            ("filled_triangle", mk(3, &[&[0, 1, 2]])),
            ("triangle_pair", mk(4, &[&[0, 1, 2], &[1, 2, 3]])),
        ];
        MotifBank {
            motifs: motifs.into_iter().map(|(n, k)| (n.to_string(), k)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.motifs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.motifs.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.motifs.iter().map(|(n, _)| n.as_str())
    }

    pub fn complexes(&self) -> impl Iterator<Item = &SimplicialComplex> {
        self.motifs.iter().map(|(_, k)| k)
    }
}

/// Homomorphism density of every motif in `k`.
pub fn featurize(k: &SimplicialComplex, bank: &MotifBank) -> Result<Vec<f64>> {
    bank.complexes().map(|f| homomorphism_density(f, k)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    /// Penalty on non-bias weights.
    pub l2: f64,
    /// Upper bound on the step size; the step actually used is capped at the
    /// inverse smoothness constant so the loss cannot increase.
    pub step: f64,
    pub iterations: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            l2: 1e-3,
            step: 1.0,
            iterations: 1000,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::domain(format!("l2 must be non-negative, got {}", self.l2)));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::domain(format!("step must be positive, got {}", self.step)));
        }
        Ok(())
    }
}

/// Multinomial logistic model on standardized features.
#[derive(Clone, Debug, PartialEq)]
pub struct SoftClassifier {
    classes: usize,
    mean: Vec<f64>,
    scale: Vec<f64>,
    /// `classes x (features + 1)`, bias last.
    params: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub model: SoftClassifier,
    /// Objective before the first step and after each step.
    pub losses: Vec<f64>,
    pub step: f64,
}

impl TrainOutcome {
    pub fn final_loss(&self) -> f64 {
        *self.losses.last().expect("at least the initial loss")
    }
}

fn softmax_into(logits: &mut [f64]) {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for l in logits.iter_mut() {
        *l = (*l - max).exp();
        sum += *l;
    }
    for l in logits.iter_mut() {
        *l /= sum;
    }
}

/// Mean soft cross-entropy plus `l2 / 2` times the squared non-bias weights,
/// and its gradient. Rows of `xs` carry the bias input as their last entry;
/// `params` is `classes x xs[0].len()` row-major.
pub fn loss_and_grad(params: &[f64], xs: &[Vec<f64>], ys: &[&[f64]], l2: f64) -> (f64, Vec<f64>) {
    let dim = xs[0].len();
    let classes = params.len() / dim;
    let mut grad = vec![0.0; params.len()];
    let mut loss = 0.0;
    let mut p = vec![0.0; classes];
    for (x, y) in xs.iter().zip(ys) {
        for (k, pk) in p.iter_mut().enumerate() {
            *pk = params[k * dim..(k + 1) * dim].iter().zip(x).map(|(w, v)| w * v).sum();
        }
        let max = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + p.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
        for k in 0..classes {
            loss -= y[k] * (p[k] - lse);
        }
        softmax_into(&mut p);
        for k in 0..classes {
            let r = p[k] - y[k];
            for (g, v) in grad[k * dim..(k + 1) * dim].iter_mut().zip(x) {
                *g += r * v;
            }
        }
    }
    let n = xs.len() as f64;
    loss /= n;
    for g in grad.iter_mut() {
        *g /= n;
    }
    for k in 0..classes {
        for f in 0..dim - 1 {
            let w = params[k * dim + f];
            loss += 0.5 * l2 * w * w;
            grad[k * dim + f] += l2 * w;
        }
    }
    (loss, grad)
}

impl SoftClassifier {
    fn design_row(&self, x: &[f64]) -> Vec<f64> {
        let mut row: Vec<f64> = x
            .iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect();
        row.push(1.0);
        row
    }

    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        let row = self.design_row(x);
        let dim = row.len();
        let mut p: Vec<f64> = (0..self.classes)
            .map(|k| self.params[k * dim..(k + 1) * dim].iter().zip(&row).map(|(w, v)| w * v).sum())
            .collect();
        softmax_into(&mut p);
        p
    }

    /// Most probable class; ties go to the lowest index.
    pub fn predict(&self, x: &[f64]) -> usize {
        let p = self.probabilities(x);
        let mut best = 0;
        for (k, v) in p.iter().enumerate() {
            if *v > p[best] {
                best = k;
            }
        }
        best
    }

    /// Fraction of rows whose prediction equals the label's argmax.
    pub fn accuracy(&self, xs: &[Vec<f64>], ys: &[SoftLabel]) -> f64 {
        if xs.is_empty() {
            return 0.0;
        }
        let hits = xs.iter().zip(ys).filter(|(x, y)| self.predict(x) == y.argmax()).count();
        hits as f64 / xs.len() as f64
    }
}

/// Full-batch gradient descent from zero weights. Fails if fewer than two
/// classes appear as label argmaxes, or if the loss ever increases.
pub fn train_soft_classifier(
    features: &[Vec<f64>],
    labels: &[SoftLabel],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if features.len() != labels.len() {
        return Err(Error::shape(format!("{} feature rows for {} labels", features.len(), labels.len())));
    }
    let Some(first) = features.first() else {
        return Err(Error::domain("no training data"));
    };
    let nf = first.len();
    if features.iter().any(|x| x.len() != nf) {
        return Err(Error::shape("feature rows differ in length"));
    }
    let classes = labels[0].num_classes();
    if labels.iter().any(|y| y.num_classes() != classes) {
        return Err(Error::shape("labels have different class counts"));
    }
    let mut seen = vec![false; classes];
    for y in labels {
        seen[y.argmax()] = true;
    }
    if seen.iter().filter(|s| **s).count() < 2 {
        return Err(Error::domain("training data covers fewer than two classes"));
    }

    let n = features.len() as f64;
    let mean: Vec<f64> = (0..nf).map(|f| features.iter().map(|x| x[f]).sum::<f64>() / n).collect();
    let scale: Vec<f64> = (0..nf)
        .map(|f| {
            let var = features.iter().map(|x| (x[f] - mean[f]).powi(2)).sum::<f64>() / n;
            if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 }
        })
        .collect();
    let mut model = SoftClassifier {
        classes,
        mean,
        scale,
        params: vec![0.0; classes * (nf + 1)],
    };
    let xs: Vec<Vec<f64>> = features.iter().map(|x| model.design_row(x)).collect();
    let ys: Vec<&[f64]> = labels.iter().map(|y| y.probs()).collect();

    // The softmax cross-entropy Hessian in the logits is at most 1/2.
    let smooth = 0.5 * xs.iter().map(|x| x.iter().map(|v| v * v).sum::<f64>()).sum::<f64>() / n + config.l2;
    let step = config.step.min(1.0 / smooth);

    let (mut loss, mut grad) = loss_and_grad(&model.params, &xs, &ys, config.l2);
    let mut losses = Vec::with_capacity(config.iterations + 1);
    losses.push(loss);
    for it in 0..config.iterations {
        for (w, g) in model.params.iter_mut().zip(&grad) {
            *w -= step * g;
        }
        let (next, next_grad) = loss_and_grad(&model.params, &xs, &ys, config.l2);
        if next > loss + 1e-12 * loss.abs().max(1.0) {
            return Err(Error::domain(format!(
                "training loss increased at iteration {it}: {loss} -> {next}"
            )));
        }
        loss = next;
        grad = next_grad;
        losses.push(loss);
    }
    Ok(TrainOutcome { model, losses, step })
}

/// Circle-versus-lemniscate Vietoris–Rips task.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthVrConfig {
    pub n_per_class: usize,
    pub points: usize,
    /// Rips scale; `None` calibrates it so the mean edge density is
    /// [`TARGET_EDGE_DENSITY`].
    pub eps: Option<f64>,
    /// Standard deviation of the radial noise.
    pub noise: f64,
    /// Diameter of the lemniscate; the circle has radius 1.
    pub lemniscate_diameter: f64,
}

pub const TARGET_EDGE_DENSITY: f64 = 0.25;

impl Default for SynthVrConfig {
    fn default() -> Self {
        SynthVrConfig {
            n_per_class: 50,
            points: 40,
            eps: None,
            noise: 0.05,
            lemniscate_diameter: 1.0,
        }
    }
}

fn curve_points(class: usize, cfg: &SynthVrConfig, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = rng_from_seed(seed);
    (0..cfg.points)
        .map(|_| {
            let t = rng.random::<f64>() * 2.0 * PI;
            let p = if class == 0 {
                [t.cos(), t.sin()]
            } else {
                // (cos t, sin t cos t) has diameter 2.
                let s = cfg.lemniscate_diameter / 2.0;
                [s * t.cos(), s * t.sin() * t.cos()]
            };
            let z: f64 = rng.sample(StandardNormal);
            let r = p[0].hypot(p[1]);
            let dir = if r > 0.0 { [p[0] / r, p[1] / r] } else { [1.0, 0.0] };
            [p[0] + cfg.noise * z * dir[0], p[1] + cfg.noise * z * dir[1]]
        })
        .collect()
}

/// Smallest scale at which the pooled fraction of point pairs within distance
/// `eps` reaches `density`.
pub fn calibrate_eps(clouds: &[Vec<[f64; 2]>], density: f64) -> Result<f64> {
    let mut d: Vec<f64> = Vec::new();
    for pts in clouds {
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                d.push((pts[i][0] - pts[j][0]).hypot(pts[i][1] - pts[j][1]));
            }
        }
    }
    if d.is_empty() {
        return Err(Error::domain("calibration needs at least one point pair"));
    }
    let k = ((density * d.len() as f64).ceil() as usize).clamp(1, d.len()) - 1;
    let (_, v, _) = d.select_nth_unstable_by(k, f64::total_cmp);
    Ok(v.max(f64::MIN_POSITIVE))
}

/// Class 0 (circle) samples first, then class 1 (lemniscate); returns the
/// dataset and the Rips scale used.
pub fn synth_vr(cfg: &SynthVrConfig, seed: u64) -> Result<(Vec<LabeledSample<SimplicialComplex>>, f64)> {
    if cfg.points == 0 {
        return Err(Error::domain("points per complex must be positive"));
    }
    if !(cfg.noise >= 0.0) || !(cfg.lemniscate_diameter > 0.0) {
        return Err(Error::domain("noise must be non-negative and the diameter positive"));
    }
    let mut clouds = Vec::with_capacity(2 * cfg.n_per_class);
    for class in 0..2 {
        for k in 0..cfg.n_per_class {
            let item = (class * cfg.n_per_class + k) as u64;
            clouds.push((class, k, curve_points(class, cfg, derive_seed(seed, item))));
        }
    }
    let eps = match cfg.eps {
        Some(e) if e > 0.0 => e,
        Some(e) => return Err(Error::domain(format!("eps must be positive, got {e}"))),
        None if clouds.is_empty() => 1.0,
        None => {
            let pts: Vec<Vec<[f64; 2]>> = clouds.iter().map(|c| c.2.clone()).collect();
            calibrate_eps(&pts, TARGET_EDGE_DENSITY)?
        }
    };
    let names = ["circle", "lemniscate"];
    let data = clouds
        .into_iter()
        .map(|(class, k, pts)| {
            Ok(LabeledSample {
                id: format!("{}-{k:04}", names[class]),
                payload: vietoris_rips(&pts, eps, 2)?,
                label: SoftLabel::one_hot(class, 2),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((data, eps))
}

/// [`synth_vr`] with a unit-diameter lemniscate.
pub fn synth_vr_dataset(
    n_per_class: usize,
    points_per_complex: usize,
    eps: Option<f64>,
    noise: f64,
    seed: u64,
) -> Result<Vec<LabeledSample<SimplicialComplex>>> {
    let cfg = SynthVrConfig {
        n_per_class,
        points: points_per_complex,
        eps,
        noise,
        ..SynthVrConfig::default()
    };
    Ok(synth_vr(&cfg, seed)?.0)
}

/// Per-class split: each class's indices are shuffled and the first
/// `round(fraction * size)` go to training (at least one, and at least one
/// left for testing when the class has two or more members).
pub fn stratified_split(labels: &[SoftLabel], fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let classes = labels.first().map_or(0, SoftLabel::num_classes);
    let mut rng = rng_from_seed(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for c in 0..classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i].argmax() == c).collect();
        if idx.is_empty() {
            continue;
        }
        idx.shuffle(&mut rng);
        let mut take = (fraction * idx.len() as f64).round() as usize;
        take = take.clamp(1, idx.len().saturating_sub(1).max(1));
        train.extend_from_slice(&idx[..take]);
        test.extend_from_slice(&idx[take..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// One line of the metrics table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricRow {
    pub data_scheme: String,
    pub label_scheme: String,
    pub seed: u64,
    pub baseline_acc: f64,
    pub augmented_acc: f64,
}

/// Mean and sample standard deviation over seeds for one scheme pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub data_scheme: String,
    pub label_scheme: String,
    pub seeds: usize,
    pub baseline_mean: f64,
    pub baseline_std: f64,
    pub augmented_mean: f64,
    pub augmented_std: f64,
}

/// Every data scheme crossed with every label scheme.
pub fn all_scheme_pairs() -> Vec<(DataScheme, LabelScheme)> {
    DataScheme::ALL
        .iter()
        .flat_map(|&d| LabelScheme::ALL.iter().map(move |&l| (d, l)))
        .collect()
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Groups rows by scheme pair, in order of first appearance.
pub fn summarize(rows: &[MetricRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(&str, &str)> = Vec::new();
    for r in rows {
        let key = (r.data_scheme.as_str(), r.label_scheme.as_str());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(d, l)| {
            let sel: Vec<&MetricRow> = rows.iter().filter(|r| r.data_scheme == d && r.label_scheme == l).collect();
            let (bm, bs) = mean_std(&sel.iter().map(|r| r.baseline_acc).collect::<Vec<_>>());
            let (am, as_) = mean_std(&sel.iter().map(|r| r.augmented_acc).collect::<Vec<_>>());
            SummaryRow {
                data_scheme: d.to_string(),
                label_scheme: l.to_string(),
                seeds: sel.len(),
                baseline_mean: bm,
                baseline_std: bs,
                augmented_mean: am,
                augmented_std: as_,
            }
        })
        .collect()
}

/// A featurized dataset ready for repeated train/test runs.
pub struct Experiment<'a> {
    dataset: &'a [LabeledSample<SimplicialComplex>],
    features: Vec<Vec<f64>>,
    labels: Vec<SoftLabel>,
    bank: MotifBank,
    config: PipelineConfig,
}

impl<'a> Experiment<'a> {
    pub fn new(dataset: &'a [LabeledSample<SimplicialComplex>], config: &PipelineConfig) -> Result<Self> {
        config.validate()?;
        let bank = MotifBank::standard();
        let features = dataset
            .iter()
            .map(|s| featurize(&s.payload, &bank))
            .collect::<Result<Vec<_>>>()?;
        Ok(Experiment {
            dataset,
            features,
            labels: dataset.iter().map(|s| s.label.clone()).collect(),
            bank,
            config: config.clone(),
        })
    }

    /// One baseline row (schemes `none`/`none`) followed by one row per
    /// scheme pair. The split uses stream 0 of `seed`; every scheme pair
    /// shares the augmentation stream 1.
    pub fn run_seed(&self, schemes: &[(DataScheme, LabelScheme)], seed: u64) -> Result<Vec<MetricRow>> {
        let (train_idx, test_idx) =
            stratified_split(&self.labels, self.config.train_fraction, derive_seed(seed, 0));
        let pick = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<SoftLabel>) {
            (
                idx.iter().map(|&i| self.features[i].clone()).collect(),
                idx.iter().map(|&i| self.labels[i].clone()).collect(),
            )
        };
        let (train_x, train_y) = pick(&train_idx);
        let (test_x, test_y) = pick(&test_idx);
        let baseline = train_soft_classifier(&train_x, &train_y, &self.config.train)?
            .model
            .accuracy(&test_x, &test_y);
        let mut rows = vec![MetricRow {
            data_scheme: "none".into(),
            label_scheme: "none".into(),
            seed,
            baseline_acc: baseline,
            augmented_acc: baseline,
        }];
        if schemes.is_empty() {
            return Ok(rows);
        }

        let train: Vec<LabeledSample<SimplicialComplex>> =
            train_idx.iter().map(|&i| self.dataset[i].clone()).collect();
        let count = self.config.synthetic.unwrap_or(train.len());
        let mut augmenter = Augmenter::new(&train, &self.config)?;
        for &(data, labels) in schemes {
            let synthetic = augmenter.generate(data, labels, count, derive_seed(seed, 1))?;
            let (mut xs, mut ys) = (train_x.clone(), train_y.clone());
            for s in &synthetic {
                xs.push(featurize(&s.sample.payload, &self.bank)?);
                ys.push(s.sample.label.clone());
            }
            let acc = train_soft_classifier(&xs, &ys, &self.config.train)?
                .model
                .accuracy(&test_x, &test_y);
            rows.push(MetricRow {
                data_scheme: data.to_string(),
                label_scheme: labels.to_string(),
                seed,
                baseline_acc: baseline,
                augmented_acc: acc,
            });
        }
        Ok(rows)
    }
}

/// Runs every scheme pair for each seed in turn.
pub fn run_experiment(
    dataset: &[LabeledSample<SimplicialComplex>],
    config: &PipelineConfig,
    seeds: &[u64],
) -> Result<Vec<MetricRow>> {
    let exp = Experiment::new(dataset, config)?;
    let schemes = all_scheme_pairs();
    let mut rows = Vec::new();
    for &seed in seeds {
        rows.extend(exp.run_seed(&schemes, seed)?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn motif_bank_is_closed_and_small() {
        let bank = MotifBank::standard();
        assert_eq!(bank.len(), 6);
        for k in bank.complexes() {
            assert!(k.validate_closure());
            assert!(k.num_nodes() <= 6);
        }
    }

    #[test]
    fn featurize_examples() {
        let bank = MotifBank::standard();
        assert_eq!(featurize(&SimplicialComplex::empty(5), &bank).unwrap(), vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let full = SimplicialComplex::closure_of(3, [vec![0, 1, 2]]).unwrap();
        let f = featurize(&full, &bank).unwrap();
        assert_eq!(f[0], 1.0);
        assert_relative_eq!(f[1], 2.0 / 3.0, epsilon = 1e-15);
        // Paths a-b-c with a != b != c: 3 * 2 * 2 = 12 of 27 maps.
        assert_relative_eq!(f[2], 12.0 / 27.0, epsilon = 1e-15);
        assert_relative_eq!(f[4], 6.0 / 27.0, epsilon = 1e-15);
    }

    #[test]
    fn separable_data_is_fit_exactly() {
        let xs: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i % 3) as f64]).collect();
        let ys: Vec<SoftLabel> = (0..20).map(|i| SoftLabel::one_hot(usize::from(i >= 10), 2)).collect();
        let out = train_soft_classifier(&xs, &ys, &TrainConfig::default()).unwrap();
        assert_eq!(out.model.accuracy(&xs, &ys), 1.0);
        assert!(out.losses.windows(2).all(|w| w[1] <= w[0]));
        assert!(out.final_loss() < out.losses[0]);
    }

    #[test]
    fn identical_features_give_majority_accuracy() {
        let xs = vec![vec![0.3, 0.3]; 10];
        let ys: Vec<SoftLabel> = (0..10).map(|i| SoftLabel::one_hot(usize::from(i >= 7), 2)).collect();
        let out = train_soft_classifier(&xs, &ys, &TrainConfig::default()).unwrap();
        assert_relative_eq!(out.model.accuracy(&xs, &ys), 0.7);
    }

    #[test]
    fn single_class_rejected() {
        let xs = vec![vec![0.0], vec![1.0]];
        let ys = vec![SoftLabel::one_hot(0, 2), SoftLabel::new(vec![0.6, 0.4]).unwrap()];
        assert!(matches!(
            train_soft_classifier(&xs, &ys, &TrainConfig::default()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn split_is_stratified_and_disjoint() {
        let ys: Vec<SoftLabel> = (0..30).map(|i| SoftLabel::one_hot(usize::from(i % 3 == 0), 2)).collect();
        let (tr, te) = stratified_split(&ys, 0.5, 4);
        assert_eq!(tr.len() + te.len(), 30);
        assert!(tr.iter().all(|i| !te.contains(i)));
        assert_eq!(tr.iter().filter(|&&i| ys[i].argmax() == 1).count(), 5);
        assert_eq!(tr.iter().filter(|&&i| ys[i].argmax() == 0).count(), 10);
        assert_eq!(stratified_split(&ys, 0.5, 4), (tr, te));
    }

    #[test]
    fn synth_vr_shapes() {
        assert!(synth_vr_dataset(0, 10, None, 0.05, 1).unwrap().is_empty());
        let cfg = SynthVrConfig {
            n_per_class: 3,
            points: 12,
            ..SynthVrConfig::default()
        };
        let (ds, eps) = synth_vr(&cfg, 2).unwrap();
        assert_eq!(ds.len(), 6);
        assert!(eps > 0.0);
        assert_eq!(ds[0].label.argmax(), 0);
        assert_eq!(ds[5].label.argmax(), 1);
        assert!(ds.iter().all(|s| s.payload.validate_closure() && s.payload.max_dim() <= 2));
        assert_eq!(synth_vr(&cfg, 2).unwrap().0, ds);
    }

    #[test]
    fn calibration_hits_the_quantile() {
        let line: Vec<[f64; 2]> = (0..5).map(|i| [i as f64, 0.0]).collect();
        // Ten pairwise distances: four at 1, three at 2, two at 3, one at 4.
        assert_eq!(calibrate_eps(&[line.clone()], 0.4).unwrap(), 1.0);
        assert_eq!(calibrate_eps(&[line], 0.5).unwrap(), 2.0);
    }

    #[test]
    fn summary_statistics() {
        let row = |seed, b, a| MetricRow {
            data_scheme: "cvx".into(),
            label_scheme: "cvx".into(),
            seed,
            baseline_acc: b,
            augmented_acc: a,
        };
        let s = summarize(&[row(0, 0.5, 0.6), row(1, 0.7, 0.8)]);
        assert_eq!(s.len(), 1);
        assert_relative_eq!(s[0].baseline_mean, 0.6, epsilon = 1e-15);
        assert_relative_eq!(s[0].augmented_std, 0.02f64.sqrt(), epsilon = 1e-12);
    }
}
