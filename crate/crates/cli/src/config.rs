//! Run configuration file.
//!
//! A flat TOML document. Relative paths are resolved against the directory
//! holding the config file. Unknown keys and invalid values are all
//! reported together.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use hdpan_core::models::MlpSpec;
use hdpan_core::pudata::Binarize;
use hdpan_core::trainer::TrainConfig;
use hdpan_core::{ObjectiveKind, Reduction};

use crate::error::CliError;

/// Every recognised key with its default, as shown in `hdpan train --help`.
pub const KEYS_HELP: &str = "\
Config keys (flat TOML; relative paths are resolved against the config file):
  dataset          path to a dataset root with train/ val/ test/   (required)
  split            directory written by `hdpan make-pu`             (default: draw from n_positive and seed)
  n_positive       labeled positives to draw                        (default: per dataset name, else required)
  binarize         auto | direct | parity                           (default: auto)
  arch             mlp | cnn                                        (default: mlp)
  hidden           two MLP hidden widths                            (default: [300, 300])
  objective        holder | kl                                      (default: holder)
  alpha            Hölder exponent, > 1                             (default: 2.0)
  lambda           adversarial weight, >= 0                         (default: 0.1)
  lr               SGD learning rate, > 0                           (default: 0.5)
  batch            mini-batch size                                  (default: 64)
  k                discriminator updates per classifier update      (default: 1)
  max_epochs       epoch limit                                      (default: 200)
  early_stop       stop when validation F1 stalls                   (default: true)
  patience_window  epochs in the early-stop window                  (default: 15)
  min_delta        minimum F1 gain over the window                  (default: 0.01)
  reduction        mean | sum                                       (default: mean)
  d_lambda_terms   include the λ terms in the discriminator update  (default: true)
  seed             run seed                                         (default: 0)
  out_dir          output directory                                 (default: run)";

const KNOWN_KEYS: [&str; 20] = [
    "dataset",
    "split",
    "n_positive",
    "binarize",
    "arch",
    "hidden",
    "objective",
    "alpha",
    "lambda",
    "lr",
    "batch",
    "k",
    "max_epochs",
    "early_stop",
    "patience_window",
    "min_delta",
    "reduction",
    "d_lambda_terms",
    "seed",
    "out_dir",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArchChoice {
    Mlp { hidden: [usize; 2] },
    Cnn,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub split: Option<PathBuf>,
    pub n_positive: Option<usize>,
    pub binarize: Binarize,
    pub arch: ArchChoice,
    pub train: TrainConfig,
    pub out_dir: PathBuf,
    /// The parsed document.
    pub table: toml::Table,
}

/// Collects typed values out of the table, recording every problem.
struct Reader<'a> {
    table: &'a toml::Table,
    base: &'a Path,
    problems: Vec<String>,
}

impl Reader<'_> {
    fn get<T>(&mut self, key: &str, what: &str, convert: impl Fn(&toml::Value) -> Option<T>) -> Option<T> {
        let v = self.table.get(key)?;
        let out = convert(v);
        if out.is_none() {
            self.problems.push(format!("`{key}`: expected {what}, got {v}"));
        }
        out
    }

    fn float(&mut self, key: &str, default: f64) -> f64 {
        self.get(key, "a number", |v| v.as_float().or_else(|| v.as_integer().map(|i| i as f64)))
            .unwrap_or(default)
    }

    fn count(&mut self, key: &str, default: usize) -> usize {
        self.get(key, "a non-negative integer", |v| v.as_integer().and_then(|i| usize::try_from(i).ok()))
            .unwrap_or(default)
    }

    fn flag(&mut self, key: &str, default: bool) -> bool {
        self.get(key, "true or false", toml::Value::as_bool).unwrap_or(default)
    }

    fn path(&mut self, key: &str) -> Option<PathBuf> {
        let base = self.base.to_path_buf();
        self.get(key, "a path string", |v| v.as_str().map(|s| base.join(s)))
    }

    fn choice<T>(&mut self, key: &str, options: &[(&str, T)], default: T) -> T
    where
        T: Copy,
    {
        let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
        let what = format!("one of {}", names.join(" | "));
        self.get(key, &what, |v| {
            let s = v.as_str()?;
            options.iter().find(|(n, _)| *n == s).map(|(_, t)| *t)
        })
        .unwrap_or(default)
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        let mut r = Reader {
            table: &table,
            base,
            problems: Vec::new(),
        };
        let mut unknown: Vec<&str> = table.keys().map(String::as_str).filter(|k| !KNOWN_KEYS.contains(k)).collect();
        unknown.sort_unstable();
        for k in unknown {
            r.problems.push(format!("unknown key `{k}`"));
        }

        let dataset = r.path("dataset");
        if !table.contains_key("dataset") {
            r.problems.push("missing required key `dataset`".into());
        }
        let split = r.path("split");
        let n_positive = r.get("n_positive", "a positive integer", |v| {
            v.as_integer().and_then(|i| usize::try_from(i).ok()).filter(|&n| n > 0)
        });
        let binarize = r.choice(
            "binarize",
            &[("auto", Binarize::Auto), ("direct", Binarize::Direct), ("parity", Binarize::Parity)],
            Binarize::Auto,
        );
        let is_cnn = r.choice("arch", &[("mlp", false), ("cnn", true)], false);
        let hidden = r
            .get("hidden", "an array of two positive integers", |v| {
                let a = v.as_array()?;
                let w: Vec<usize> = a
                    .iter()
                    .map(|x| x.as_integer().and_then(|i| usize::try_from(i).ok()).filter(|&n| n > 0))
                    .collect::<Option<_>>()?;
                <[usize; 2]>::try_from(w).ok()
            })
            .unwrap_or(MlpSpec::DEFAULT_HIDDEN);
        if is_cnn && table.contains_key("hidden") {
            r.problems.push("`hidden` only applies to arch = \"mlp\"".into());
        }
        let defaults = TrainConfig::default();
        let train = TrainConfig {
            objective: r.choice(
                "objective",
                &[("holder", ObjectiveKind::Holder), ("kl", ObjectiveKind::Kl)],
                defaults.objective,
            ),
            alpha: r.float("alpha", defaults.alpha),
            lambda: r.float("lambda", defaults.lambda),
            lr: r.float("lr", defaults.lr),
            batch: r.count("batch", defaults.batch),
            k: r.count("k", defaults.k),
            max_epochs: r.count("max_epochs", defaults.max_epochs),
            early_stop: r.flag("early_stop", defaults.early_stop),
            patience_window: r.count("patience_window", defaults.patience_window),
            min_delta: r.float("min_delta", defaults.min_delta),
            seed: r
                .get("seed", "a non-negative integer", |v| v.as_integer().and_then(|i| u64::try_from(i).ok()))
                .unwrap_or(defaults.seed),
            reduction: r.choice("reduction", &[("mean", Reduction::Mean), ("sum", Reduction::Sum)], defaults.reduction),
            d_lambda_terms: r.flag("d_lambda_terms", defaults.d_lambda_terms),
        };
        if let Err(e) = train.validate() {
            let msg = e.to_string();
            let detail = msg.strip_prefix("invalid training config: ").unwrap_or(&msg);
            r.problems.extend(detail.split("; ").map(String::from));
        }
        let out_dir = r.path("out_dir").unwrap_or_else(|| base.join("run"));
        let problems = r.problems;
        if !problems.is_empty() {
            return Err(CliError::Config(format!(
                "{} problem(s):\n  {}",
                problems.len(),
                problems.join("\n  ")
            )));
        }
        Ok(Self {
            dataset: dataset.expect("checked above"),
            split,
            n_positive,
            binarize,
            arch: if is_cnn { ArchChoice::Cnn } else { ArchChoice::Mlp { hidden } },
            train,
            out_dir,
            table,
        })
    }

    /// Every key with the value in effect, defaults included.
    pub fn effective(&self) -> toml::Table {
        let t = &self.train;
        let path = |p: &Path| toml::Value::from(p.display().to_string());
        let mut m = toml::Table::new();
        m.insert("dataset".into(), path(&self.dataset));
        if let Some(s) = &self.split {
            m.insert("split".into(), path(s));
        }
        if let Some(n) = self.n_positive {
            m.insert("n_positive".into(), (n as i64).into());
        }
        m.insert("binarize".into(), crate::data::rule_name(self.binarize).into());
        match self.arch {
            ArchChoice::Mlp { hidden } => {
                m.insert("arch".into(), "mlp".into());
                m.insert("hidden".into(), toml::Value::Array(hidden.iter().map(|&h| (h as i64).into()).collect()));
            }
            ArchChoice::Cnn => {
                m.insert("arch".into(), "cnn".into());
            }
        }
        let objective = match t.objective {
            ObjectiveKind::Holder => "holder",
            ObjectiveKind::Kl => "kl",
        };
        m.insert("objective".into(), objective.into());
        m.insert("alpha".into(), t.alpha.into());
        m.insert("lambda".into(), t.lambda.into());
        m.insert("lr".into(), t.lr.into());
        m.insert("batch".into(), (t.batch as i64).into());
        m.insert("k".into(), (t.k as i64).into());
        m.insert("max_epochs".into(), (t.max_epochs as i64).into());
        m.insert("early_stop".into(), t.early_stop.into());
        m.insert("patience_window".into(), (t.patience_window as i64).into());
        m.insert("min_delta".into(), t.min_delta.into());
        let reduction = match t.reduction {
            Reduction::Mean => "mean",
            Reduction::Sum => "sum",
        };
        m.insert("reduction".into(), reduction.into());
        m.insert("d_lambda_terms".into(), t.d_lambda_terms.into());
        m.insert("seed".into(), (t.seed as i64).into());
        m.insert("out_dir".into(), path(&self.out_dir));
        m
    }

    /// SHA-256 of the parsed document, independent of formatting and key
    /// order.
    pub fn hash(&self) -> String {
        let canonical = toml::to_string(&sorted(&self.table)).expect("table serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

fn sorted(table: &toml::Table) -> BTreeMap<&String, &toml::Value> {
    table.iter().collect()
}
