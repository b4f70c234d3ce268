//! Flat `key = value` experiment configuration with typed validation.
//!
//! The same keys exist as CLI flags; a config file provides the base and
//! flags override it. The parsed config is echoed verbatim into run outputs
//! so every artifact records its full provenance.

use std::path::{Path, PathBuf};

use crate::dataset::{SplitMode, SplitSpec};
use crate::error::{Error, Result};
use crate::model::ScoringMode;
use crate::sampling::{SamplerConfig, Strategy};
use crate::train::{LossConfig, LossKind};

/// When the first FN-disclosure event fires.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FirstDisclosure {
    /// First epoch whose best validation recall stands unbeaten for 20
    /// subsequent epochs.
    Auto,
    Epoch(usize),
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    pub split: SplitMode,
    pub model: ScoringMode,
    pub dim: usize,
    pub layers: usize,
    pub strategy: Strategy,
    pub h: usize,
    pub alpha: f64,
    pub beta: f64,
    pub lr: f64,
    pub lambda: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub eval_every: usize,
    pub k: usize,
    pub seed: u64,
    pub mask_val: bool,
    pub lr_after_epoch: Option<(usize, f64)>,
    pub trace: bool,
    /// False coefficient: fraction of the FN set disclosed over the run.
    pub fn_c: f64,
    pub disclosure_gap: usize,
    pub first_disclosure: FirstDisclosure,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: PathBuf::new(),
            split: SplitMode::Temporal,
            model: ScoringMode::Mf,
            dim: 32,
            layers: 3,
            strategy: Strategy::Dns,
            h: 32,
            alpha: 0.9,
            beta: 0.1,
            lr: 0.001,
            lambda: 0.001,
            batch_size: 2048,
            epochs: 300,
            eval_every: 1,
            k: 50,
            seed: 42,
            mask_val: true,
            lr_after_epoch: None,
            trace: false,
            fn_c: 0.0,
            disclosure_gap: 50,
            first_disclosure: FirstDisclosure::Auto,
        }
    }
}

impl ExperimentConfig {
    pub fn parse_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("config line {}: expected `key = value`", lineno + 1))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Set one field from its textual form; errors name the field.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("field `{key}`: cannot parse {value:?}")))
        }
        match key {
            "dataset" => self.dataset = PathBuf::from(value),
            "split" => {
                self.split = match value {
                    "temporal" => SplitMode::Temporal,
                    "fn-synthetic" => SplitMode::FnSynthetic,
                    _ => {
                        return Err(Error::Config(format!(
                            "field `split`: expected temporal|fn-synthetic, got {value:?}"
                        )))
                    }
                }
            }
            "model" => {
                self.model = match value {
                    "mf" => ScoringMode::Mf,
                    "lightgcn" => ScoringMode::LightGcn,
                    _ => {
                        return Err(Error::Config(format!(
                            "field `model`: expected mf|lightgcn, got {value:?}"
                        )))
                    }
                }
            }
            "dim" => self.dim = num(key, value)?,
            "layers" => self.layers = num(key, value)?,
            "strategy" => {
                self.strategy = match value {
                    "rns" => Strategy::Rns,
                    "dns" => Strategy::Dns,
                    "pdns-mixing" => Strategy::PdnsMixing,
                    "pdns-soft" => Strategy::PdnsSoft,
                    _ => {
                        return Err(Error::Config(format!(
                            "field `strategy`: expected rns|dns|pdns-mixing|pdns-soft, got {value:?}"
                        )))
                    }
                }
            }
            "h" => self.h = num(key, value)?,
            "alpha" => self.alpha = num(key, value)?,
            "beta" => self.beta = num(key, value)?,
            "lr" => self.lr = num(key, value)?,
            "lambda" => self.lambda = num(key, value)?,
            "batch_size" => self.batch_size = num(key, value)?,
            "epochs" => self.epochs = num(key, value)?,
            "eval_every" => self.eval_every = num(key, value)?,
            "k" => self.k = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "mask_val" => self.mask_val = num(key, value)?,
            "trace" => self.trace = num(key, value)?,
            "lr_after_epoch" => {
                let (e, lr) = value.split_once(':').ok_or_else(|| {
                    Error::Config("field `lr_after_epoch`: expected `epoch:lr`".into())
                })?;
                self.lr_after_epoch = Some((num("lr_after_epoch", e.trim())?, num("lr_after_epoch", lr.trim())?));
            }
            "fn_c" => self.fn_c = num(key, value)?,
            "disclosure_gap" => self.disclosure_gap = num(key, value)?,
            "first_disclosure" => {
                self.first_disclosure = if value == "auto" {
                    FirstDisclosure::Auto
                } else {
                    FirstDisclosure::Epoch(num(key, value)?)
                };
            }
            _ => return Err(Error::Config(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.dataset.as_os_str().is_empty() {
            return Err(Error::Config("field `dataset`: path is required".into()));
        }
        if self.dim == 0 {
            return Err(Error::Config("field `dim`: must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.fn_c) {
            return Err(Error::Config(format!(
                "field `fn_c`: must be in [0,1], got {}",
                self.fn_c
            )));
        }
        if self.disclosure_gap == 0 {
            return Err(Error::Config("field `disclosure_gap`: must be >= 1".into()));
        }
        if self.k == 0 {
            return Err(Error::Config("field `k`: must be >= 1".into()));
        }
        self.sampler_config().validate()?;
        self.loss_config().validate()?;
        if !(self.lr > 0.0) {
            return Err(Error::Config(format!("field `lr`: must be > 0, got {}", self.lr)));
        }
        Ok(())
    }

    pub fn sampler_config(&self) -> SamplerConfig {
        SamplerConfig {
            strategy: self.strategy,
            h: self.h,
            alpha: self.alpha,
        }
    }

    pub fn loss_config(&self) -> LossConfig {
        let kind = match self.strategy {
            Strategy::PdnsSoft => LossKind::SoftBpr,
            _ => LossKind::Bpr,
        };
        LossConfig {
            kind,
            beta: self.beta,
            lambda: self.lambda,
            batch_size: self.batch_size,
        }
    }

    pub fn split_spec(&self) -> SplitSpec {
        match self.split {
            SplitMode::Temporal => SplitSpec::temporal(),
            SplitMode::FnSynthetic => SplitSpec::fn_synthetic(),
        }
    }

    /// Canonical `key = value` echo, parseable back into the same config.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let mut push = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        push("dataset", self.dataset.display().to_string());
        push(
            "split",
            match self.split {
                SplitMode::Temporal => "temporal".into(),
                SplitMode::FnSynthetic => "fn-synthetic".into(),
            },
        );
        push("model", self.model.to_string());
        push("dim", self.dim.to_string());
        push("layers", self.layers.to_string());
        push("strategy", self.strategy.to_string());
        push("h", self.h.to_string());
        push("alpha", self.alpha.to_string());
        push("beta", self.beta.to_string());
        push("lr", self.lr.to_string());
        push("lambda", self.lambda.to_string());
        push("batch_size", self.batch_size.to_string());
        push("epochs", self.epochs.to_string());
        push("eval_every", self.eval_every.to_string());
        push("k", self.k.to_string());
        push("seed", self.seed.to_string());
        push("mask_val", self.mask_val.to_string());
        push("trace", self.trace.to_string());
        if let Some((e, lr)) = self.lr_after_epoch {
            push("lr_after_epoch", format!("{e}:{lr}"));
        }
        push("fn_c", self.fn_c.to_string());
        push("disclosure_gap", self.disclosure_gap.to_string());
        push(
            "first_disclosure",
            match self.first_disclosure {
                FirstDisclosure::Auto => "auto".into(),
                FirstDisclosure::Epoch(e) => e.to_string(),
            },
        );
        s
    }
}
