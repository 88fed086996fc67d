//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Lines go straight to the stderr handle so they show up even when the
//! harness captures test output.

use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::Rng;

use cxmix::complexon::{
    check_interpolation_bound, cut_norm_dim1_exact, hom_density_in_complexon, induce_from_complex,
    StepComplexon,
};
use cxmix::config::PipelineConfig;
use cxmix::estimation::{default_bin_size, estimate_complexon, DEFAULT_TAU};
use cxmix::eval::{loss_and_grad, synth_vr, Experiment, MotifBank, SynthVrConfig};
use cxmix::mixup::{
    class_weights, clusterpath, default_lambda_grid, label_map, mix_labels, DataScheme, LabelScheme,
    MixupConfig, PairWeights,
};
use cxmix::sampling::{
    derive_seed, random_complexon, random_simplex_weights, rng_from_seed, sample_complex, sample_recorded,
};
use cxmix::simplicial::{homomorphism_density, SimplicialComplex, SoftLabel};

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: usize, name: &str, o: &Outcome) {
    let status = if o.pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "[{status}] {id:>2} {name}: {}", o.detail);
}

fn random_complex<R: Rng>(n: usize, rng: &mut R) -> SimplicialComplex {
    let mut tops = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < 0.5 {
                tops.push(vec![i, j]);
            }
            for k in j + 1..n {
                if rng.random::<f64>() < 0.25 {
                    tops.push(vec![i, j, k]);
                }
            }
        }
    }
    SimplicialComplex::closure_of(n, tops).unwrap()
}

fn closure_suite() -> Outcome {
    let start = Instant::now();
    let mut rng = rng_from_seed(101);
    let (mut total, mut bad) = (0, 0);
    for c in 0..50u64 {
        let n = rng.random_range(1..=5);
        let d = rng.random_range(1..=3);
        let w = random_complexon(n, d, &mut rng);
        for k in 0..200u64 {
            let nodes = rng.random_range(5..=25);
            let kx = sample_complex(&w, nodes, derive_seed(c, k)).unwrap();
            total += 1;
            if !kx.validate_closure() {
                bad += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: total == 10_000 && bad == 0 && secs < 60.0,
        detail: format!("{total} complexes, {bad} not closed, {secs:.1}s"),
    }
}

fn oracle_equivalence() -> Outcome {
    let bank = MotifBank::standard();
    let mut rng = rng_from_seed(202);
    let mut worst: f64 = 0.0;
    let mut checks = 0;
    for _ in 0..20 {
        let n = rng.random_range(1..=6);
        let k = random_complex(n, &mut rng);
        let w = induce_from_complex(&k).unwrap();
        for f in bank.complexes() {
            // The induced complexon is zero above the complex's dimension.
            let w = w.clone().with_max_dim(w.max_dim().max(f.max_dim()));
            let a = hom_density_in_complexon(f, &w).unwrap();
            let b = homomorphism_density(f, &k).unwrap();
            worst = worst.max((a - b).abs());
            checks += 1;
        }
    }
    Outcome {
        pass: checks == 120 && worst <= 1e-12,
        detail: format!("{checks} motif/complex pairs, max |diff| {worst:.2e}"),
    }
}

fn interpolation_bound() -> Outcome {
    let bank = MotifBank::standard();
    let motifs: Vec<&SimplicialComplex> = bank.complexes().collect();
    // Node, edge, 2-path, hollow triangle: patterns without 2-simplices.
    let graph_motifs = &motifs[..4];
    let mut rng = rng_from_seed(303);
    let (mut violations, mut pairwise, mut min_slack) = (0, 0, f64::INFINITY);
    for draw in 0..500 {
        let dim1_pair = draw % 5 == 0;
        let (m, d) = if dim1_pair { (2, 1) } else { (rng.random_range(2..=4), rng.random_range(1..=2)) };
        let n = rng.random_range(1..=4);
        let ws: Vec<StepComplexon> = (0..m).map(|_| random_complexon(n, d, &mut rng)).collect();
        let gammas = random_simplex_weights(m, &mut rng);
        let j = rng.random_range(0..m);
        let pool = if d == 1 { graph_motifs } else { &motifs[..] };
        let f = pool[rng.random_range(0..pool.len())];
        let r = check_interpolation_bound(&ws, &gammas, j, f).unwrap();
        if !r.holds {
            violations += 1;
        }
        min_slack = min_slack.min(r.slack());
        if dim1_pair {
            // With two graphons the mixture differs from W_j by gamma_i (W_i - W_j),
            // so the counting lemma bounds the gap by |E(F)| gamma_i ||W_i - W_j||_cut.
            let i = 1 - j;
            let cut = cut_norm_dim1_exact(&ws[i], &ws[j]).unwrap();
            let tight = f.count(1) as f64 * gammas[i] * cut;
            if r.lhs > tight + 1e-12 {
                violations += 1;
            }
            pairwise += 1;
        }
    }
    Outcome {
        pass: violations == 0,
        detail: format!("500 draws ({pairwise} pairwise dimension-1 with exact cut norm), {violations} violations, min slack {min_slack:.3e}"),
    }
}

fn clusterpath_endpoints() -> Outcome {
    let mut rng = rng_from_seed(404);
    let grid = default_lambda_grid(50);
    let last = grid.len() - 1;
    let (mut worst0, mut worst1) = (0.0f64, 0.0f64);
    let mut instances = 0;
    for t in [3usize, 5, 8] {
        for _ in 0..10 {
            let n = rng.random_range(1..=3);
            let ws: Vec<StepComplexon> = (0..t).map(|_| random_complexon(n, 2, &mut rng)).collect();
            let labels: Vec<SoftLabel> = (0..t).map(|_| SoftLabel::one_hot(rng.random_range(0..2), 2)).collect();
            let weights = class_weights(&labels, 0.1).unwrap();
            let path = clusterpath(&ws, &weights, &grid, &MixupConfig::default()).unwrap();
            for (i, w) in ws.iter().enumerate() {
                worst0 = worst0.max(path.solution(0, i).l1_distance(w).unwrap());
                worst1 = worst1.max(path.solution(last, i).l1_distance(path.mean()).unwrap());
            }
            instances += 1;
        }
    }
    Outcome {
        pass: worst0 <= 1e-5 && worst1 <= 1e-3,
        detail: format!(
            "{instances} instances; max deviation at lambda=0 {worst0:.2e}, at lambda={} {worst1:.2e}",
            grid[last]
        ),
    }
}

fn scalar_oracle() -> Outcome {
    let ws = [
        StepComplexon::constant(1, &[0.2]).unwrap(),
        StepComplexon::constant(1, &[0.8]).unwrap(),
    ];
    let grid = default_lambda_grid(50);
    let path = clusterpath(&ws, &PairWeights::uniform(2, 1.0), &grid, &MixupConfig::default()).unwrap();
    let mut worst: f64 = 0.0;
    for (k, &l) in grid.iter().enumerate() {
        let t = l / (1.0 - l);
        let (u0, u1) = if t < 0.6 { (0.2 + t / 2.0, 0.8 - t / 2.0) } else { (0.5, 0.5) };
        worst = worst.max((path.solution(k, 0).level(1)[0] - u0).abs());
        worst = worst.max((path.solution(k, 1).level(1)[0] - u1).abs());
    }
    Outcome {
        pass: worst <= 1e-5,
        detail: format!("{} grid points, max error {worst:.2e}", grid.len()),
    }
}

/// Block A covers [0, 0.3) and has the larger degrees, so degree sorting puts
/// it first and the truth needs no rearrangement.
fn two_block_truth() -> StepComplexon {
    StepComplexon::from_fn(10, 2, |c, idx| {
        let in_a = idx.iter().filter(|&&b| b < 3).count();
        match (c, in_a) {
            (1, 2) => 0.8,
            (1, 1) => 0.3,
            (1, _) => 0.1,
            (2, 3) => 0.7,
            (2, 2) => 0.5,
            (2, 1) => 0.3,
            _ => 0.2,
        }
    })
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}

fn estimation_consistency() -> Outcome {
    let truth = two_block_truth();
    let sizes = [100usize, 200, 400];
    let mut means = vec![[0.0f64; 2]; sizes.len()];
    for (s, &n_nodes) in sizes.iter().enumerate() {
        for seed in 0..10u64 {
            let k = sample_complex(&truth, n_nodes, derive_seed(600 + s as u64, seed)).unwrap();
            let est = estimate_complexon(&k, DEFAULT_TAU, default_bin_size(n_nodes)).unwrap();
            let est = est.with_max_dim(2);
            let (a, b) = (est.resolution(), truth.resolution());
            let fine = a / gcd(a, b) * b;
            let (e, t) = (est.resample(fine).unwrap(), truth.resample(fine).unwrap());
            for c in 1..=2 {
                means[s][c - 1] += e.l1_level(&t, c).unwrap() / 10.0;
            }
        }
    }
    let mut inversions = [0usize; 2];
    for c in 0..2 {
        for s in 1..sizes.len() {
            if means[s][c] > means[s - 1][c] {
                inversions[c] += 1;
            }
        }
    }
    let final_ok = means[sizes.len() - 1].iter().all(|e| *e <= 0.2);
    let fmt: Vec<String> = sizes
        .iter()
        .zip(&means)
        .map(|(n, m)| format!("N={n}: {:.3}/{:.3}", m[0], m[1]))
        .collect();
    Outcome {
        pass: inversions.iter().all(|&i| i <= 1) && final_ok,
        detail: format!(
            "mean L1 error per level (edges/triangles) {}; inversions {:?}",
            fmt.join(", "),
            inversions
        ),
    }
}

fn sampling_calibration() -> Outcome {
    let w = StepComplexon::new(
        2,
        vec![
            vec![0.2, 0.6, 0.6, 0.9],
            vec![0.3, 0.5, 0.5, 0.8, 0.5, 0.8, 0.8, 0.4],
        ],
    )
    .unwrap();
    let (mut edge_n, mut edge_hit) = ([0u64; 3], [0u64; 3]);
    let (mut tri_n, mut tri_hit) = ([0u64; 4], [0u64; 4]);
    for s in 0..500u64 {
        let rec = sample_recorded(&w, 12, derive_seed(707, s)).unwrap();
        let bins: Vec<usize> = rec.latents.iter().map(|z| usize::from(*z >= 0.5)).collect();
        let k = &rec.complex;
        let n = bins.len();
        for i in 0..n {
            for j in i + 1..n {
                let cell = bins[i] + bins[j];
                edge_n[cell] += 1;
                if k.contains(&[i, j]) {
                    edge_hit[cell] += 1;
                }
                for l in j + 1..n {
                    if k.contains(&[i, j]) && k.contains(&[i, l]) && k.contains(&[j, l]) {
                        let cell = bins[i] + bins[j] + bins[l];
                        tri_n[cell] += 1;
                        if k.contains(&[i, j, l]) {
                            tri_hit[cell] += 1;
                        }
                    }
                }
            }
        }
    }
    let edge_p = [0.2, 0.6, 0.9];
    let tri_p = [0.3, 0.5, 0.8, 0.4];
    let mut worst_z: f64 = 0.0;
    let mut ok = true;
    let cells = edge_n.iter().zip(&edge_hit).zip(&edge_p).chain(tri_n.iter().zip(&tri_hit).zip(&tri_p));
    for ((&n, &hit), &p) in cells {
        if n == 0 {
            ok = false;
            continue;
        }
        let se = (p * (1.0 - p) / n as f64).sqrt();
        let z = ((hit as f64 / n as f64) - p).abs() / se;
        worst_z = worst_z.max(z);
    }
    Outcome {
        pass: ok && worst_z <= 3.0,
        detail: format!("7 cells over 500 samples, worst deviation {worst_z:.2} standard errors"),
    }
}

fn label_mixup() -> Outcome {
    let mut rng = rng_from_seed(808);
    let mut worst_mid: f64 = 0.0;
    for _ in 0..20 {
        let yi = SoftLabel::normalized((0..3).map(|_| rng.random::<f64>()).collect()).unwrap();
        let yj = SoftLabel::normalized((0..3).map(|_| rng.random::<f64>()).collect()).unwrap();
        for scheme in [LabelScheme::Linear, LabelScheme::Sigmoid, LabelScheme::Logit] {
            let y = mix_labels(&yi, &yj, 0.5, scheme, 2.0).unwrap();
            for ((a, b), m) in yi.probs().iter().zip(yj.probs()).zip(y.probs()) {
                worst_mid = worst_mid.max((m - (a + b) / 2.0).abs());
            }
        }
    }
    let mut worst_rt: f64 = 0.0;
    for a in [0.5, 1.0, 2.0, 4.0] {
        for k in 1..100 {
            let l = k as f64 / 100.0;
            let (s, _) = label_map(LabelScheme::Sigmoid, l, a).unwrap();
            let (back, clamped) = label_map(LabelScheme::Logit, s, a).unwrap();
            assert!(!clamped);
            worst_rt = worst_rt.max((back - l).abs());
        }
    }
    Outcome {
        pass: worst_mid <= 1e-12 && worst_rt <= 1e-9,
        detail: format!("midpoint error {worst_mid:.2e}, sigmoid/logit round trip {worst_rt:.2e}"),
    }
}

fn directional_experiment() -> Outcome {
    let start = Instant::now();
    let task = SynthVrConfig {
        n_per_class: 100,
        points: 40,
        ..SynthVrConfig::default()
    };
    let (data, eps) = synth_vr(&task, 909).unwrap();
    let cfg = PipelineConfig::default();
    let exp = Experiment::new(&data, &cfg).unwrap();
    let schemes = [(DataScheme::ConvexClustering, LabelScheme::ConvexClustering)];
    let (mut base, mut aug) = (0.0, 0.0);
    let seeds = 10;
    for seed in 0..seeds {
        let rows = exp.run_seed(&schemes, seed).unwrap();
        base += rows[1].baseline_acc / seeds as f64;
        aug += rows[1].augmented_acc / seeds as f64;
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: aug >= base && secs < 600.0,
        detail: format!(
            "{seeds} seeds, 50+50 training complexes (eps {eps:.3}): baseline {base:.3}, cvx/cvx {aug:.3}, {secs:.1}s"
        ),
    }
}

fn gradient_check() -> Outcome {
    let mut rng = rng_from_seed(1010);
    let (rows, dim, classes) = (15, 7, 3);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let xs: Vec<Vec<f64>> = (0..rows)
            .map(|_| {
                let mut x: Vec<f64> = (0..dim - 1).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
                x.push(1.0);
                x
            })
            .collect();
        let labels: Vec<SoftLabel> = (0..rows)
            .map(|_| SoftLabel::normalized((0..classes).map(|_| rng.random::<f64>()).collect()).unwrap())
            .collect();
        let ys: Vec<&[f64]> = labels.iter().map(|y| y.probs()).collect();
        let params: Vec<f64> = (0..classes * dim).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
        let l2 = 0.1;
        let (_, grad) = loss_and_grad(&params, &xs, &ys, l2);
        let h = 1e-5;
        let numeric: Vec<f64> = (0..params.len())
            .map(|p| {
                let (mut up, mut down) = (params.clone(), params.clone());
                up[p] += h;
                down[p] -= h;
                (loss_and_grad(&up, &xs, &ys, l2).0 - loss_and_grad(&down, &xs, &ys, l2).0) / (2.0 * h)
            })
            .collect();
        let diff: f64 = grad.iter().zip(&numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = grad.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-12);
        worst = worst.max(diff / scale);
    }
    Outcome {
        pass: worst <= 1e-5,
        detail: format!("10 random points, max relative error {worst:.2e}"),
    }
}

fn run_cli(dir: &Path, args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_cxmix"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "off")
        .status()
        .map(|s| s.success())
        .unwrap_or(false)
}

fn end_to_end(dir: &Path) -> Option<Vec<Vec<u8>>> {
    let steps: [&[&str]; 3] = [
        &["--seed", "5", "synth-vr", "--n-per-class", "12", "--points", "20", "-o", "data.jsonl"],
        &["--seed", "6", "augment", "-i", "data.jsonl", "-o", "aug.jsonl"],
        &[
            "--seed", "7", "eval", "-i", "data.jsonl", "--metrics", "m.csv", "--summary", "s.json", "--seeds", "3",
        ],
    ];
    for s in steps {
        if !run_cli(dir, s) {
            return None;
        }
    }
    ["data.jsonl", "aug.jsonl", "m.csv", "s.json"]
        .iter()
        .map(|f| std::fs::read(dir.join(f)).ok())
        .collect()
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    match (end_to_end(a.path()), end_to_end(b.path())) {
        (Some(x), Some(y)) => {
            let bytes: usize = x.iter().map(Vec::len).sum();
            Outcome {
                pass: x == y,
                detail: format!("synth-vr + augment + eval twice, 4 artifacts ({bytes} bytes), identical: {}", x == y),
            }
        }
        _ => Outcome {
            pass: false,
            detail: "a CLI step failed".into(),
        },
    }
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("closure of sampled complexes", closure_suite),
        ("density oracle equivalence", oracle_equivalence),
        ("interpolation bound", interpolation_bound),
        ("clusterpath endpoints", clusterpath_endpoints),
        ("scalar clusterpath oracle", scalar_oracle),
        ("estimation consistency", estimation_consistency),
        ("sampling calibration", sampling_calibration),
        ("label mixup identities", label_mixup),
        ("augmentation direction", directional_experiment),
        ("classifier gradient check", gradient_check),
        ("end-to-end determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        report(i + 1, name, &o);
        if !o.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
