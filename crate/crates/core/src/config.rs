//! Flat `key=value` pipeline configuration.
//!
//! Lines are `key=value`; blank lines and lines starting with `#` are
//! ignored. `auto` selects the data-dependent default for `h`, `nodes`, and
//! `synthetic`.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::estimation::DEFAULT_TAU;
use crate::eval::TrainConfig;
use crate::mixup::{DataScheme, LabelScheme, MixupConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    /// Weight of higher-dimensional degrees in the node ordering.
    pub tau: f64,
    /// Histogram bin size; `None` uses the square root of the node count.
    pub bin_size: Option<usize>,
    pub mixup: MixupConfig,
    pub data_scheme: DataScheme,
    /// Node count of sampled complexes; `None` uses the training-set mean.
    pub nodes: Option<usize>,
    /// Synthetic samples per augmentation; `None` uses the training-set size.
    pub synthetic: Option<usize>,
    pub train: TrainConfig,
    /// Fraction of each class placed in the training split.
    pub train_fraction: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            tau: DEFAULT_TAU,
            bin_size: None,
            mixup: MixupConfig::default(),
            data_scheme: DataScheme::ConvexClustering,
            nodes: None,
            synthetic: None,
            train: TrainConfig::default(),
            train_fraction: 0.5,
        }
    }
}

pub const KEYS: [&str; 16] = [
    "tau",
    "h",
    "epsilon",
    "eps_fuse",
    "lambda_grid",
    "tol",
    "max_iter",
    "label_scheme",
    "data_scheme",
    "sharpness",
    "nodes",
    "synthetic",
    "l2",
    "step",
    "iterations",
    "train_fraction",
];

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::domain(format!("{key}: cannot parse {value:?}")))
}

fn auto_or<T: FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    if value == "auto" {
        Ok(None)
    } else {
        num(key, value).map(Some)
    }
}

fn show<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "auto".to_string(), |x| x.to_string())
}

impl PipelineConfig {
    /// Sets one key. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "tau" => self.tau = num(key, value)?,
            "h" => self.bin_size = auto_or(key, value)?,
            "epsilon" => self.mixup.epsilon_crossclass = num(key, value)?,
            "eps_fuse" => self.mixup.eps_fuse = num(key, value)?,
            "lambda_grid" => self.mixup.lambda_grid_size = num(key, value)?,
            "tol" => self.mixup.tolerance = num(key, value)?,
            "max_iter" => self.mixup.max_iterations = num(key, value)?,
            "label_scheme" => self.mixup.label_scheme = value.parse()?,
            "data_scheme" => self.data_scheme = value.parse()?,
            "sharpness" => self.mixup.sharpness = num(key, value)?,
            "nodes" => self.nodes = auto_or(key, value)?,
            "synthetic" => self.synthetic = auto_or(key, value)?,
            "l2" => self.train.l2 = num(key, value)?,
            "step" => self.train.step = num(key, value)?,
            "iterations" => self.train.iterations = num(key, value)?,
            "train_fraction" => self.train_fraction = num(key, value)?,
            other => return Err(Error::domain(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Applies every `key=value` line of `text` on top of `self`.
    pub fn merge_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected key=value, got {line:?}"),
            })?;
            self.set(k, v).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        cfg.merge_text(text)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::domain(format!("tau must lie in (0, 1), got {}", self.tau)));
        }
        if self.bin_size == Some(0) {
            return Err(Error::domain("h must be positive"));
        }
        if self.nodes == Some(0) {
            return Err(Error::domain("nodes must be positive"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::domain("train_fraction must lie in (0, 1)"));
        }
        self.mixup.validate()?;
        self.train.validate()
    }

    /// Effective configuration as `key=value` lines in [`KEYS`] order; parses
    /// back to an equal config.
    pub fn render(&self) -> String {
        let m = &self.mixup;
        let values = [
            self.tau.to_string(),
            show(self.bin_size),
            m.epsilon_crossclass.to_string(),
            m.eps_fuse.to_string(),
            m.lambda_grid_size.to_string(),
            m.tolerance.to_string(),
            m.max_iterations.to_string(),
            m.label_scheme.to_string(),
            self.data_scheme.to_string(),
            m.sharpness.to_string(),
            show(self.nodes),
            show(self.synthetic),
            self.train.l2.to_string(),
            self.train.step.to_string(),
            self.train.iterations.to_string(),
            self.train_fraction.to_string(),
        ];
        let mut out = String::new();
        for (k, v) in KEYS.iter().zip(values) {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    /// The label scheme in use.
    pub fn label_scheme(&self) -> LabelScheme {
        self.mixup.label_scheme
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_parses_back() {
        let mut cfg = PipelineConfig::default();
        cfg.bin_size = Some(7);
        cfg.mixup.label_scheme = LabelScheme::Sigmoid;
        cfg.train.l2 = 0.25;
        let text = cfg.render();
        assert_eq!(PipelineConfig::parse(&text).unwrap(), cfg);
        assert_eq!(text.lines().count(), KEYS.len());
    }

    #[test]
    fn commented_file_with_defaults() {
        let cfg = PipelineConfig::parse(
            "# comment\ntau=0.5\nh=auto\nepsilon=0.1\neps_fuse=1e-5\nlambda_grid=50\n\n",
        )
        .unwrap();
        assert_eq!(cfg, PipelineConfig::default());
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert!(matches!(
            PipelineConfig::parse("tau=0.5\nbogus=1"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            PipelineConfig::parse("tau"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(PipelineConfig::parse("h=-3").is_err());
    }

    #[test]
    fn validate_catches_ranges() {
        let mut cfg = PipelineConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.train_fraction = 1.0;
        assert!(cfg.validate().is_err());
    }
}
