//! `cxmix`: dataset generation, complexon estimation, mixup, sampling,
//! augmentation, evaluation, and bound checking from the command line.

use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use cxmix::complexon::check_interpolation_bound;
use cxmix::config::PipelineConfig;
use cxmix::eval::{all_scheme_pairs, featurize, summarize, synth_vr, Experiment, MotifBank, SynthVrConfig};
use cxmix::io::{
    complexon_hash, header_line, read_complexons, read_dataset, rows_to_csv, sha256_hex,
    write_complexons, write_dataset, ComplexonFile, Dataset,
};
use cxmix::mixup::{DataScheme, LabelScheme};
use cxmix::pipeline::{align_complexons, Augmenter};
use cxmix::sampling::{derive_seed, random_complexon, random_simplex_weights, rng_from_seed, sample_complex};
use cxmix::simplicial::{LabeledSample, SoftLabel};
use cxmix::{estimation, Error};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_BOUND: u8 = 4;

#[derive(Parser)]
#[command(name = "cxmix", version, about = "Mixup augmentation for labeled simplicial complexes")]
struct Cli {
    /// Master seed; a random one is drawn and logged when omitted.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores). Outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Flat key=value config file; explicit flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct ConfigFlags {
    #[arg(long)]
    tau: Option<String>,
    /// Histogram bin size, or `auto`.
    #[arg(long)]
    h: Option<String>,
    /// Cross-class fusion weight.
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    eps_fuse: Option<String>,
    #[arg(long)]
    lambda_grid: Option<String>,
    /// linear, sigmoid, logit, or cvx.
    #[arg(long)]
    label_scheme: Option<String>,
    /// linear or cvx.
    #[arg(long)]
    data_scheme: Option<String>,
    /// Node count of sampled complexes, or `auto`.
    #[arg(long)]
    nodes: Option<String>,
    /// Number of synthetic samples, or `auto`.
    #[arg(long)]
    synthetic: Option<String>,
    /// Any config key, as key=value; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigFlags {
    fn pairs(&self) -> Vec<(String, String)> {
        let typed = [
            ("tau", &self.tau),
            ("h", &self.h),
            ("epsilon", &self.epsilon),
            ("eps_fuse", &self.eps_fuse),
            ("lambda_grid", &self.lambda_grid),
            ("label_scheme", &self.label_scheme),
            ("data_scheme", &self.data_scheme),
            ("nodes", &self.nodes),
            ("synthetic", &self.synthetic),
        ];
        let mut out: Vec<(String, String)> = typed
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect();
        for kv in &self.set {
            match kv.split_once('=') {
                Some((k, v)) => out.push((k.to_string(), v.to_string())),
                None => out.push((kv.clone(), String::new())),
            }
        }
        out
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate the circle-versus-lemniscate Vietoris-Rips dataset.
    SynthVr {
        #[arg(long, default_value_t = 50)]
        n_per_class: usize,
        #[arg(long, default_value_t = 40)]
        points: usize,
        /// Rips scale; calibrated to edge density 0.25 when omitted.
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        #[arg(long, default_value_t = 1.0)]
        lemniscate_diameter: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Estimate one complexon per complex of a dataset.
    Estimate {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        flags: ConfigFlags,
    },
    /// Mix labeled complexons pairwise or along the clusterpath.
    Mixup {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Number of mixtures (defaults to the number of inputs).
        #[arg(long)]
        count: Option<usize>,
        /// Use this lambda for every mixture instead of drawing it.
        #[arg(long)]
        lambda: Option<f64>,
        /// Also write the clusterpath summary here.
        #[arg(long)]
        export: Option<PathBuf>,
        #[command(flatten)]
        flags: ConfigFlags,
    },
    /// Sample complexes from complexons.
    Sample {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Samples per complexon.
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[command(flatten)]
        flags: ConfigFlags,
    },
    /// Estimate, mix, sample, and mix labels: original plus synthetic samples.
    Augment {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        flags: ConfigFlags,
    },
    /// Baseline versus augmented test accuracy over several seeds.
    Eval {
        #[arg(short, long)]
        input: PathBuf,
        /// Per-seed metrics CSV.
        #[arg(long)]
        metrics: PathBuf,
        /// Mean and standard deviation per scheme pair, JSON.
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Seeds used are seed, seed + 1, ...
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        /// `all`, or a comma-separated list of data/label pairs such as
        /// `cvx/cvx,linear/sigmoid`.
        #[arg(long, default_value = "all")]
        schemes: String,
        #[command(flatten)]
        flags: ConfigFlags,
    },
    /// Check the interpolation bound on random mixtures; exits 4 on any
    /// violation.
    CheckBound {
        /// Complexons to mix; random ones are drawn when omitted.
        #[arg(short, long)]
        input: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 100)]
        draws: usize,
        /// Number of random complexons when no input is given.
        #[arg(long, default_value_t = 4)]
        random: usize,
        #[arg(long, default_value_t = 3)]
        resolution: usize,
        #[arg(long, default_value_t = 2)]
        max_dim: usize,
    },
    /// Motif homomorphism densities of every complex in a dataset, as CSV.
    Homdensity {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn data(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_DATA,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NonConvergence { .. } => EXIT_SOLVER,
            _ => EXIT_DATA,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::data(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::data(e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

/// Everything a command needs besides its own flags.
struct Context {
    command: &'static str,
    seed: u64,
    config: PipelineConfig,
    inputs: Vec<(String, String)>,
}

impl Context {
    fn read_input(&mut self, path: &Path) -> CliResult<Vec<u8>> {
        let bytes = fs::read(path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
        self.inputs.push((path.display().to_string(), sha256_hex(&bytes)));
        Ok(bytes)
    }

    fn read_dataset(&mut self, path: &Path) -> CliResult<Dataset> {
        let bytes = self.read_input(path)?;
        read_dataset(BufReader::new(bytes.as_slice()))
            .map_err(|e| Failure::data(format!("{}: {e}", path.display())))
    }

    fn read_complexons(&mut self, path: &Path) -> CliResult<Vec<ComplexonFile>> {
        let bytes = self.read_input(path)?;
        read_complexons(BufReader::new(bytes.as_slice()))
            .map_err(|e| Failure::data(format!("{}: {e}", path.display())))
    }

    fn provenance(&self) -> Value {
        let config: Map<String, Value> = self
            .config
            .render()
            .lines()
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.to_string(), Value::String(v.to_string())))
            .collect();
        let inputs: Vec<Value> = self
            .inputs
            .iter()
            .map(|(p, h)| json!({"path": p, "sha256": h}))
            .collect();
        json!({
            "tool": "cxmix",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "seed": self.seed,
            "config": config,
            "inputs": inputs,
        })
    }
}

/// Writes every output to a temporary file next to its target and renames
/// them into place only after all contents are ready.
fn write_outputs(outputs: Vec<(&Path, Vec<u8>)>) -> CliResult<()> {
    let mut staged = Vec::with_capacity(outputs.len());
    for (path, bytes) in outputs {
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(&dir)
            .map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
        tmp.write_all(&bytes)?;
        tmp.flush()?;
        staged.push((tmp, path));
    }
    for (tmp, path) in staged {
        tmp.persist(path)
            .map_err(|e| Failure::data(format!("{}: {}", path.display(), e.error)))?;
    }
    Ok(())
}

fn json_pretty(v: &Value) -> CliResult<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(v)?;
    out.push(b'\n');
    Ok(out)
}

fn dataset_bytes(provenance: &Value, samples: &[LabeledSample<cxmix::simplicial::SimplicialComplex>], per_record: &[Option<Value>]) -> CliResult<Vec<u8>> {
    let mut out = header_line(provenance)?.into_bytes();
    write_dataset(&mut out, samples, per_record)?;
    Ok(out)
}

fn parse_schemes(text: &str) -> CliResult<Vec<(DataScheme, LabelScheme)>> {
    if text == "all" {
        return Ok(all_scheme_pairs());
    }
    text.split(',')
        .map(|pair| {
            let (d, l) = pair
                .split_once('/')
                .ok_or_else(|| Failure::usage(format!("scheme pair {pair:?} is not data/label")))?;
            let d: DataScheme = d.trim().parse().map_err(|e: Error| Failure::usage(e.to_string()))?;
            let l: LabelScheme = l.trim().parse().map_err(|e: Error| Failure::usage(e.to_string()))?;
            Ok((d, l))
        })
        .collect()
}

fn load_config(path: Option<&Path>, flags: Option<&ConfigFlags>) -> CliResult<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    if let Some(p) = path {
        let text = fs::read_to_string(p).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?;
        cfg.merge_text(&text)
            .map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?;
    }
    if let Some(flags) = flags {
        for (k, v) in flags.pairs() {
            cfg.set(&k, &v).map_err(|e| Failure::usage(e.to_string()))?;
        }
    }
    cfg.validate().map_err(|e| Failure::usage(e.to_string()))?;
    Ok(cfg)
}

fn command_flags(c: &Command) -> (&'static str, Option<&ConfigFlags>) {
    match c {
        Command::SynthVr { .. } => ("synth-vr", None),
        Command::Estimate { flags, .. } => ("estimate", Some(flags)),
        Command::Mixup { flags, .. } => ("mixup", Some(flags)),
        Command::Sample { flags, .. } => ("sample", Some(flags)),
        Command::Augment { flags, .. } => ("augment", Some(flags)),
        Command::Eval { flags, .. } => ("eval", Some(flags)),
        Command::CheckBound { .. } => ("check-bound", None),
        Command::Homdensity { .. } => ("homdensity", None),
    }
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::usage(e.to_string()))?;
    }
    let (name, flags) = command_flags(&cli.command);
    let config = load_config(cli.config.as_deref(), flags)?;
    let seed = cli.seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        log::info!("no --seed given; using {s}");
        s
    });
    let mut ctx = Context {
        command: name,
        seed,
        config,
        inputs: Vec::new(),
    };
    match cli.command {
        Command::SynthVr {
            n_per_class,
            points,
            eps,
            noise,
            lemniscate_diameter,
            output,
        } => {
            let cfg = SynthVrConfig {
                n_per_class,
                points,
                eps,
                noise,
                lemniscate_diameter,
            };
            let (data, eps) = synth_vr(&cfg, seed)?;
            let mut prov = ctx.provenance();
            prov["synth_vr"] = json!({
                "n_per_class": n_per_class,
                "points": points,
                "eps": eps,
                "noise": noise,
                "lemniscate_diameter": lemniscate_diameter,
            });
            write_outputs(vec![(&output, dataset_bytes(&prov, &data, &[])?)])
        }
        Command::Estimate { input, output, .. } => {
            let data = ctx.read_dataset(&input)?;
            let cfg = &ctx.config;
            let files = data
                .par_iter()
                .map(|s| {
                    let n = s.payload.num_nodes();
                    let h = cfg.bin_size.unwrap_or_else(|| estimation::default_bin_size(n)).min(n);
                    let w = estimation::estimate_complexon(&s.payload, cfg.tau, h)?;
                    Ok(ComplexonFile {
                        complexon: w,
                        id: Some(s.id.clone()),
                        label: Some(s.label.clone()),
                        provenance: Some(json!({"source": s.id, "nodes": n, "h": h})),
                    })
                })
                .collect::<Result<Vec<_>, Error>>()?;
            let mut out = header_line(&ctx.provenance())?.into_bytes();
            write_complexons(&mut out, &files)?;
            write_outputs(vec![(&output, out)])
        }
        Command::Mixup {
            input,
            output,
            count,
            lambda,
            export,
            ..
        } => {
            let files = ctx.read_complexons(&input)?;
            let mut ids = Vec::with_capacity(files.len());
            let mut labels = Vec::with_capacity(files.len());
            for (k, f) in files.iter().enumerate() {
                ids.push(f.id.clone().unwrap_or_else(|| format!("w{k}")));
                labels.push(f.label.clone().ok_or_else(|| {
                    Failure::data(format!("complexon {} has no label; mixup needs labels", k + 1))
                })?);
            }
            let ws: Vec<_> = files.into_iter().map(|f| f.complexon).collect();
            let count = count.unwrap_or(ws.len());
            let (data_scheme, label_scheme) = (ctx.config.data_scheme, ctx.config.label_scheme());
            let mut aug = Augmenter::from_complexons(ids, ws, labels, ctx.config.nodes.unwrap_or(1), &ctx.config)?;
            let mixtures = aug.mix_with(data_scheme, label_scheme, count, seed, lambda)?;
            let ids = aug.ids().to_vec();
            let records: Vec<ComplexonFile> = mixtures
                .into_iter()
                .enumerate()
                .map(|(k, m)| ComplexonFile {
                    provenance: Some(json!({
                        "lambda": m.lambda,
                        "data_scheme": data_scheme,
                        "label_scheme": label_scheme,
                        "parents": m.parents.iter().map(|&p| ids[p].clone()).collect::<Vec<_>>(),
                        "seed": m.sample_seed,
                    })),
                    complexon: m.complexon,
                    id: Some(format!("mix-{k:05}")),
                    label: Some(m.label),
                })
                .collect();
            let prov = ctx.provenance();
            let mut out = header_line(&prov)?.into_bytes();
            write_complexons(&mut out, &records)?;
            let mut outputs = vec![(output.as_path(), out)];
            if let Some(path) = &export {
                let path_export = serde_json::to_value(aug.clusterpath()?.export())?;
                let mut doc = json!({"provenance": prov});
                doc["clusterpath"] = path_export;
                outputs.push((path.as_path(), json_pretty(&doc)?));
            }
            write_outputs(outputs)
        }
        Command::Sample { input, output, count, .. } => {
            if count == 0 {
                return Err(Failure::usage("--count must be at least 1"));
            }
            let nodes = ctx
                .config
                .nodes
                .ok_or_else(|| Failure::usage("sample needs --nodes"))?;
            let files = ctx.read_complexons(&input)?;
            let per_file = files
                .par_iter()
                .enumerate()
                .map(|(r, f)| {
                    let master = derive_seed(seed, r as u64);
                    let hash = complexon_hash(&f.complexon);
                    let base = f.id.clone().unwrap_or_else(|| format!("w{r}"));
                    let label = f.label.clone().unwrap_or_else(|| SoftLabel::one_hot(0, 1));
                    let from = |key: &str| f.provenance.as_ref().and_then(|p| p.get(key)).cloned();
                    (0..count)
                        .map(|k| {
                            let item_seed = derive_seed(master, k as u64);
                            let complex = sample_complex(&f.complexon, nodes, item_seed)?;
                            let prov = json!({
                                "source_hash": hash,
                                "lambda": from("lambda"),
                                "data_scheme": from("data_scheme"),
                                "seed": item_seed,
                            });
                            Ok((
                                LabeledSample {
                                    id: format!("{base}-s{k:04}"),
                                    payload: complex,
                                    label: label.clone(),
                                },
                                Some(prov),
                            ))
                        })
                        .collect::<Result<Vec<_>, Error>>()
                })
                .collect::<Result<Vec<_>, Error>>()?;
            let (samples, prov): (Vec<_>, Vec<_>) = per_file.into_iter().flatten().unzip();
            write_outputs(vec![(&output, dataset_bytes(&ctx.provenance(), &samples, &prov)?)])
        }
        Command::Augment { input, output, .. } => {
            let data = ctx.read_dataset(&input)?;
            let cfg = &ctx.config;
            let count = cfg.synthetic.unwrap_or(data.len());
            let mut aug = Augmenter::new(&data, cfg)?;
            let synthetic = aug.generate(cfg.data_scheme, cfg.label_scheme(), count, seed)?;
            let mut samples = data.clone();
            let mut prov = vec![None; data.len()];
            for s in synthetic {
                samples.push(s.sample);
                prov.push(Some(serde_json::to_value(&s.provenance)?));
            }
            write_outputs(vec![(&output, dataset_bytes(&ctx.provenance(), &samples, &prov)?)])
        }
        Command::Eval {
            input,
            metrics,
            summary,
            seeds,
            schemes,
            ..
        } => {
            let schemes = parse_schemes(&schemes)?;
            if seeds == 0 {
                return Err(Failure::usage("--seeds must be at least 1"));
            }
            let data = ctx.read_dataset(&input)?;
            let exp = Experiment::new(&data, &ctx.config)?;
            let seed_list: Vec<u64> = (0..seeds).map(|k| seed.wrapping_add(k)).collect();
            let rows: Vec<_> = seed_list
                .par_iter()
                .map(|&s| exp.run_seed(&schemes, s))
                .collect::<Result<Vec<_>, Error>>()?
                .into_iter()
                .flatten()
                .collect();
            let prov = ctx.provenance();
            let mut outputs = vec![(metrics.as_path(), rows_to_csv(&rows, Some(&prov))?.into_bytes())];
            if let Some(path) = &summary {
                let doc = json!({"provenance": prov, "summary": summarize(&rows)});
                outputs.push((path.as_path(), json_pretty(&doc)?));
            }
            write_outputs(outputs)
        }
        Command::CheckBound {
            input,
            output,
            draws,
            random,
            resolution,
            max_dim,
        } => {
            let ws = match &input {
                Some(p) => ctx.read_complexons(p)?.into_iter().map(|f| f.complexon).collect(),
                None => {
                    if random < 2 || resolution == 0 || max_dim == 0 {
                        return Err(Failure::usage(
                            "need --random >= 2, --resolution >= 1, --max-dim >= 1",
                        ));
                    }
                    let mut rng = rng_from_seed(derive_seed(seed, u64::MAX));
                    (0..random)
                        .map(|_| random_complexon(resolution, max_dim, &mut rng))
                        .collect::<Vec<_>>()
                }
            };
            if ws.len() < 2 {
                return Err(Failure::data("need at least two complexons to mix"));
            }
            let ws = align_complexons(&ws)?;
            let bank = MotifBank::standard();
            let names: Vec<&str> = bank.names().collect();
            let motifs: Vec<_> = bank.complexes().collect();
            let results = (0..draws)
                .into_par_iter()
                .map(|d| {
                    let mut rng = rng_from_seed(derive_seed(seed, d as u64));
                    let gammas = random_simplex_weights(ws.len(), &mut rng);
                    let j = rand::Rng::random_range(&mut rng, 0..ws.len());
                    let m = d % motifs.len();
                    let r = check_interpolation_bound(&ws, &gammas, j, motifs[m])?;
                    Ok(json!({
                        "draw": d,
                        "motif": names[m],
                        "j": j,
                        "lhs": r.lhs,
                        "rhs": r.rhs,
                        "slack": r.slack(),
                        "holds": r.holds,
                    }))
                })
                .collect::<Result<Vec<_>, Error>>()?;
            let violations = results.iter().filter(|r| r["holds"] == false).count();
            let min_slack = results
                .iter()
                .filter_map(|r| r["slack"].as_f64())
                .fold(f64::INFINITY, f64::min);
            let doc = json!({
                "provenance": ctx.provenance(),
                "draws": draws,
                "violations": violations,
                "min_slack": if draws > 0 { json!(min_slack) } else { Value::Null },
                "results": results,
            });
            write_outputs(vec![(&output, json_pretty(&doc)?)])?;
            if violations > 0 {
                return Err(Failure {
                    code: EXIT_BOUND,
                    message: format!("{violations} of {draws} draws violate the bound"),
                });
            }
            Ok(())
        }
        Command::Homdensity { input, output } => {
            let data = ctx.read_dataset(&input)?;
            let bank = MotifBank::standard();
            let mut rows: Vec<Vec<String>> = vec![std::iter::once("id")
                .chain(bank.names())
                .map(String::from)
                .collect()];
            let feats = data
                .par_iter()
                .map(|s| featurize(&s.payload, &bank))
                .collect::<Result<Vec<_>, Error>>()?;
            for (s, f) in data.iter().zip(feats) {
                rows.push(std::iter::once(s.id.clone()).chain(f.iter().map(f64::to_string)).collect());
            }
            let prov = ctx.provenance();
            write_outputs(vec![(&output, rows_to_csv(&rows, Some(&prov))?.into_bytes())])
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
