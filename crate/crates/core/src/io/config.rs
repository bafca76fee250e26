use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::lasso::Backend;
use crate::numerics::DenseMatrix;
use crate::separation::{FilterSpec, SolverConfig};
use crate::synth::{gen_filter, FilterKind, SparseValues};

/// Parsed `key = value` pairs; `#` starts a comment.
pub type ConfigMap = BTreeMap<String, String>;

pub fn parse_config(text: &str) -> Result<ConfigMap> {
    let mut map = ConfigMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", no + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", no + 1)));
        }
        if map.insert(key.to_string(), value.to_string()).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key `{key}`", no + 1)));
        }
    }
    Ok(map)
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn value<T: FromStr>(map: &mut ConfigMap, key: &str) -> Result<Option<T>> {
    match map.remove(key) {
        None => Ok(None),
        Some(v) => v
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{v}`"))),
    }
}

fn list(map: &mut ConfigMap, key: &str) -> Result<Option<Vec<f64>>> {
    match map.remove(key) {
        None => Ok(None),
        Some(v) => v
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(Some)
            .map_err(|_| Error::Config(format!("`{key}`: expected a comma-separated list of numbers"))),
    }
}

fn reject_rest(map: ConfigMap) -> Result<()> {
    match map.keys().next() {
        Some(k) => Err(Error::Config(format!("unknown key `{k}`"))),
        None => Ok(()),
    }
}

/// Run settings read from a config file. Absent keys keep the defaults of
/// the subcommand.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    pub lambda: Option<f64>,
    pub rho_outer: Option<f64>,
    pub rho_inner: Option<f64>,
    pub max_outer: Option<usize>,
    pub max_inner: Option<usize>,
    pub tol_outer: Option<f64>,
    pub tol_inner: Option<f64>,
    pub warm_start_inner: Option<bool>,
    pub rank_rtol: Option<f64>,
    pub backend: Option<Backend>,
    pub seed: Option<u64>,
    /// `gaussian`, `circulant_diff`, `paper_blur` or `identity`.
    pub filter: Option<String>,
    /// Rows of `S` (columns of `H`) for Gaussian filters.
    pub filter_cols: Option<usize>,
    /// Rows of `M₀`.
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    pub rank_ratio: Option<f64>,
    pub sparsity_ratio: Option<f64>,
    pub sparse_model: Option<SparseValues>,
    pub rank_ratios: Option<Vec<f64>>,
    pub sparsity_ratios: Option<Vec<f64>>,
    pub trials: Option<usize>,
    pub threshold: Option<f64>,
    pub size: Option<usize>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = parse_config(text)?;
        let m = &mut map;
        let cfg = Self {
            lambda: value(m, "lambda")?,
            rho_outer: value(m, "rho_outer")?,
            rho_inner: value(m, "rho_inner")?,
            max_outer: value(m, "max_outer")?,
            max_inner: value(m, "max_inner")?,
            tol_outer: value(m, "tol_outer")?,
            tol_inner: value(m, "tol_inner")?,
            warm_start_inner: value(m, "warm_start_inner")?,
            rank_rtol: value(m, "rank_rtol")?,
            backend: match m.remove("backend") {
                Some(b) => Some(b.parse().map_err(|_| Error::Config(format!("`backend`: unknown value `{b}`")))?),
                None => None,
            },
            seed: value(m, "seed")?,
            filter: m.remove("filter"),
            filter_cols: value(m, "filter_cols")?,
            rows: value(m, "rows")?,
            cols: value(m, "cols")?,
            rank_ratio: value(m, "rank_ratio")?,
            sparsity_ratio: value(m, "sparsity_ratio")?,
            sparse_model: match m.remove("sparse_model") {
                Some(s) => Some(s.parse().map_err(|_| Error::Config(format!("`sparse_model`: unknown value `{s}`")))?),
                None => None,
            },
            rank_ratios: list(m, "rank_ratios")?,
            sparsity_ratios: list(m, "sparsity_ratios")?,
            trials: value(m, "trials")?,
            threshold: value(m, "threshold")?,
            size: value(m, "size")?,
        };
        reject_rest(map)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?)
    }

    /// `base` with every solver key present in the file overridden.
    pub fn solver_config(&self, base: SolverConfig) -> Result<SolverConfig> {
        let cfg = SolverConfig {
            lambda: self.lambda.or(base.lambda),
            rho_outer: self.rho_outer.unwrap_or(base.rho_outer),
            rho_inner: self.rho_inner.unwrap_or(base.rho_inner),
            max_outer: self.max_outer.unwrap_or(base.max_outer),
            max_inner: self.max_inner.unwrap_or(base.max_inner),
            tol_outer: self.tol_outer.unwrap_or(base.tol_outer),
            tol_inner: self.tol_inner.unwrap_or(base.tol_inner),
            warm_start_inner: self.warm_start_inner.unwrap_or(base.warm_start_inner),
            rank_rtol: self.rank_rtol.unwrap_or(base.rank_rtol),
            backend: self.backend.unwrap_or(base.backend),
        };
        cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }
}

/// A filter stored on disk, as written next to a synthetic bundle.
///
/// Keys: `kind` (`dense`, `circulant`, `circulant_diff`, `identity`,
/// `gaussian`, `paper_blur`), `path` (tensor file holding the dense matrix
/// or the circulant first column, relative to the descriptor), `n`, `m`,
/// `p`, `m1`, `m2`, `seed`.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterDescriptor {
    pub kind: String,
    pub path: Option<PathBuf>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub p: Option<usize>,
    pub m1: Option<usize>,
    pub m2: Option<usize>,
    pub seed: Option<u64>,
}

impl FilterDescriptor {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = parse_config(text)?;
        let m = &mut map;
        let desc = Self {
            kind: m
                .remove("kind")
                .ok_or_else(|| Error::Config("filter descriptor needs a `kind`".into()))?,
            path: m.remove("path").map(PathBuf::from),
            n: value(m, "n")?,
            m: value(m, "m")?,
            p: value(m, "p")?,
            m1: value(m, "m1")?,
            m2: value(m, "m2")?,
            seed: value(m, "seed")?,
        };
        reject_rest(map)?;
        Ok(desc)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("kind = {}\n", self.kind);
        if let Some(p) = &self.path {
            out.push_str(&format!("path = {}\n", p.display()));
        }
        for (k, v) in [("n", self.n), ("m", self.m), ("p", self.p), ("m1", self.m1), ("m2", self.m2)] {
            if let Some(v) = v {
                out.push_str(&format!("{k} = {v}\n"));
            }
        }
        if let Some(s) = self.seed {
            out.push_str(&format!("seed = {s}\n"));
        }
        out
    }

    fn need(v: Option<usize>, key: &str) -> Result<usize> {
        v.ok_or_else(|| Error::Config(format!("filter descriptor needs `{key}`")))
    }

    /// Builds the filter; relative paths resolve against `base_dir`.
    pub fn build(&self, base_dir: &Path) -> Result<FilterSpec> {
        let load = || -> Result<DenseMatrix> {
            let p = self
                .path
                .as_ref()
                .ok_or_else(|| Error::Config(format!("`{}` filter needs a `path`", self.kind)))?;
            super::read_matrix(&base_dir.join(p))
        };
        let spec = match self.kind.as_str() {
            "dense" => FilterSpec::Dense(load()?),
            "circulant" => FilterSpec::Circulant(load()?.into_data()),
            "circulant_diff" => gen_filter(&FilterKind::CirculantDiff { n: Self::need(self.n, "n")? }, 0)?,
            "identity" => gen_filter(&FilterKind::Identity { n: Self::need(self.n, "n")? }, 0)?,
            "gaussian" => gen_filter(
                &FilterKind::Gaussian {
                    m: Self::need(self.m, "m")?,
                    p: Self::need(self.p, "p")?,
                },
                self.seed.unwrap_or(0),
            )?,
            "paper_blur" => gen_filter(
                &FilterKind::PaperBlur {
                    m1: Self::need(self.m1, "m1")?,
                    m2: Self::need(self.m2, "m2")?,
                },
                0,
            )?,
            other => return Err(Error::Config(format!("unknown filter kind `{other}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<FilterSpec> {
        let desc = Self::parse(&read_text(path)?)?;
        desc.build(path.parent().unwrap_or(Path::new(".")))
    }
}
