use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Activation, Algorithm, AlgorithmKind, FitError, MlpParams, SplitMode, SvrParams, TreeParams};

/// A single hyperparameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
    IntList(Vec<i64>),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Bool(b) => write!(f, "{b}"),
            Self::Int(i) => write!(f, "{i}"),
            Self::Float(v) => write!(f, "{v}"),
            Self::Text(s) => f.write_str(s),
            Self::IntList(l) => {
                let parts: Vec<String> = l.iter().map(|v| v.to_string()).collect();
                write!(f, "({})", parts.join(" "))
            }
        }
    }
}

impl From<f64> for ParamValue {
    fn from(v: f64) -> Self {
        Self::Float(v)
    }
}

impl From<i64> for ParamValue {
    fn from(v: i64) -> Self {
        Self::Int(v)
    }
}

impl From<&str> for ParamValue {
    fn from(v: &str) -> Self {
        Self::Text(v.to_string())
    }
}

impl From<bool> for ParamValue {
    fn from(v: bool) -> Self {
        Self::Bool(v)
    }
}

impl From<Vec<i64>> for ParamValue {
    fn from(v: Vec<i64>) -> Self {
        Self::IntList(v)
    }
}

/// Named hyperparameters of one configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Hyperparams(pub BTreeMap<String, ParamValue>);

impl Hyperparams {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, v: impl Into<ParamValue>) -> Self {
        self.0.insert(name.to_string(), v.into());
        self
    }

    pub fn get(&self, name: &str) -> Option<&ParamValue> {
        self.0.get(name)
    }

    fn f64_or(&self, name: &str, default: f64) -> Result<f64, FitError> {
        match self.get(name) {
            None => Ok(default),
            Some(ParamValue::Float(v)) => Ok(*v),
            Some(ParamValue::Int(v)) => Ok(*v as f64),
            Some(v) => Err(FitError::InvalidParameter(format!("{name} must be numeric, got {v}"))),
        }
    }

    fn usize_or(&self, name: &str, default: usize) -> Result<usize, FitError> {
        self.opt_usize(name).map(|v| v.unwrap_or(default))
    }

    fn opt_usize(&self, name: &str) -> Result<Option<usize>, FitError> {
        match self.get(name) {
            None => Ok(None),
            Some(ParamValue::Int(v)) if *v >= 0 => Ok(Some(*v as usize)),
            Some(ParamValue::Float(v)) if *v >= 0.0 && v.fract() == 0.0 => Ok(Some(*v as usize)),
            Some(ParamValue::Text(s)) if s == "none" => Ok(None),
            Some(v) => Err(FitError::InvalidParameter(format!("{name} must be a non-negative integer, got {v}"))),
        }
    }

    fn str_or<'a>(&'a self, name: &str, default: &'a str) -> Result<&'a str, FitError> {
        match self.get(name) {
            None => Ok(default),
            Some(ParamValue::Text(s)) => Ok(s),
            Some(v) => Err(FitError::InvalidParameter(format!("{name} must be a string, got {v}"))),
        }
    }

    fn list_or(&self, name: &str, default: &[usize]) -> Result<Vec<usize>, FitError> {
        match self.get(name) {
            None => Ok(default.to_vec()),
            Some(ParamValue::Int(v)) if *v > 0 => Ok(vec![*v as usize]),
            Some(ParamValue::IntList(l)) if !l.is_empty() && l.iter().all(|v| *v > 0) => {
                Ok(l.iter().map(|v| *v as usize).collect())
            }
            Some(v) => Err(FitError::InvalidParameter(format!("{name} must be a positive integer or list, got {v}"))),
        }
    }

    /// Compact `name=value` rendering used in result tables.
    pub fn label(&self) -> String {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
        parts.join(";")
    }
}

/// Candidate values per hyperparameter; expands to the Cartesian product.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HyperparamGrid(pub BTreeMap<String, Vec<ParamValue>>);

impl HyperparamGrid {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, values: Vec<ParamValue>) -> Self {
        self.0.insert(name.to_string(), values);
        self
    }

    /// All combinations, in lexicographic order of parameter names with the
    /// last name varying fastest. An empty grid yields one empty combination.
    pub fn combinations(&self) -> Result<Vec<Hyperparams>, FitError> {
        if let Some((name, _)) = self.0.iter().find(|(_, v)| v.is_empty()) {
            return Err(FitError::InvalidParameter(format!("grid entry `{name}` is empty")));
        }
        let mut out = vec![Hyperparams::new()];
        for (name, values) in &self.0 {
            out = out
                .into_iter()
                .flat_map(|base| {
                    values.iter().map(move |v| {
                        let mut h = base.clone();
                        h.0.insert(name.clone(), v.clone());
                        h
                    })
                })
                .collect();
        }
        Ok(out)
    }
}

const TREE_KEYS: &[&str] = &["max_depth", "min_samples_leaf", "ccp_alpha", "split_mode", "features_per_split"];

fn check_keys(kind: AlgorithmKind, p: &Hyperparams, allowed: &[&str]) -> Result<(), FitError> {
    for k in p.0.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(FitError::InvalidParameter(format!("`{k}` is not a parameter of {kind}")));
        }
    }
    Ok(())
}

fn tree_params(p: &Hyperparams, defaults: TreeParams) -> Result<TreeParams, FitError> {
    let split_mode = match p.str_or("split_mode", defaults.split_mode.name())? {
        "exhaustive" => SplitMode::Exhaustive,
        "random" => SplitMode::Random,
        other => return Err(FitError::InvalidParameter(format!("unknown split_mode `{other}`"))),
    };
    let max_depth = match p.get("max_depth") {
        None => defaults.max_depth,
        Some(_) => p.opt_usize("max_depth")?,
    };
    let features_per_split = match p.get("features_per_split") {
        None => defaults.features_per_split,
        Some(_) => p.opt_usize("features_per_split")?,
    };
    Ok(TreeParams {
        max_depth,
        min_samples_leaf: p.usize_or("min_samples_leaf", defaults.min_samples_leaf)?,
        ccp_alpha: p.f64_or("ccp_alpha", defaults.ccp_alpha)?,
        split_mode,
        features_per_split,
    })
}

fn with_keys<'a>(extra: &[&'a str]) -> Vec<&'a str> {
    let mut keys: Vec<&str> = TREE_KEYS.to_vec();
    keys.extend_from_slice(extra);
    keys
}

pub(super) fn build(kind: AlgorithmKind, p: &Hyperparams) -> Result<Algorithm, FitError> {
    use AlgorithmKind as K;
    let alg = match kind {
        K::Ols => {
            check_keys(kind, p, &[])?;
            Algorithm::Ols
        }
        K::Ridge => {
            check_keys(kind, p, &["lambda"])?;
            Algorithm::Ridge { lambda: p.f64_or("lambda", 1.0)? }
        }
        K::Lasso => {
            check_keys(kind, p, &["lambda"])?;
            Algorithm::Lasso { lambda: p.f64_or("lambda", 1.0)? }
        }
        K::ElasticNet => {
            check_keys(kind, p, &["lambda", "l1_ratio"])?;
            Algorithm::ElasticNet { lambda: p.f64_or("lambda", 1.0)?, alpha: p.f64_or("l1_ratio", 0.5)? }
        }
        K::Knn => {
            check_keys(kind, p, &["n_neighbors"])?;
            Algorithm::Knn { k: p.usize_or("n_neighbors", 5)? }
        }
        K::Tree => {
            check_keys(kind, p, TREE_KEYS)?;
            Algorithm::Tree(tree_params(p, TreeParams::default())?)
        }
        K::RandomForest => {
            check_keys(kind, p, &with_keys(&["n_estimators"]))?;
            Algorithm::RandomForest {
                n_estimators: p.usize_or("n_estimators", 16)?,
                tree: tree_params(p, TreeParams::default())?,
            }
        }
        K::ExtraTrees => {
            check_keys(kind, p, &with_keys(&["n_estimators"]))?;
            let defaults = TreeParams { split_mode: SplitMode::Random, ..TreeParams::default() };
            Algorithm::ExtraTrees { n_estimators: p.usize_or("n_estimators", 16)?, tree: tree_params(p, defaults)? }
        }
        K::AdaBoost => {
            check_keys(kind, p, &with_keys(&["n_estimators"]))?;
            Algorithm::AdaBoost {
                n_estimators: p.usize_or("n_estimators", 16)?,
                base: tree_params(p, TreeParams::shallow(3))?,
            }
        }
        K::GradientBoosting => {
            check_keys(kind, p, &with_keys(&["n_estimators", "learning_rate"]))?;
            Algorithm::GradientBoosting {
                n_estimators: p.usize_or("n_estimators", 16)?,
                learning_rate: p.f64_or("learning_rate", 1.0)?,
                base: tree_params(p, TreeParams::shallow(3))?,
            }
        }
        K::Svr => {
            check_keys(kind, p, &["kernel", "C", "epsilon", "gamma", "epochs", "learning_rate"])?;
            let kernel = p.str_or("kernel", "linear")?;
            if kernel != "linear" {
                return Err(FitError::UnsupportedKernel(kernel.to_string()));
            }
            let d = SvrParams::default();
            // gamma only affects non-linear kernels.
            p.f64_or("gamma", 0.0)?;
            Algorithm::Svr(SvrParams {
                c: p.f64_or("C", d.c)?,
                epsilon: p.f64_or("epsilon", d.epsilon)?,
                epochs: p.usize_or("epochs", d.epochs)?,
                learning_rate: p.f64_or("learning_rate", d.learning_rate)?,
                ..d
            })
        }
        K::Mlp => {
            check_keys(
                kind,
                p,
                &["activation", "hidden_layer_sizes", "alpha", "learning_rate", "epochs", "batch_size"],
            )?;
            let d = MlpParams::default();
            let activation = match p.str_or("activation", d.activation.name())? {
                "tanh" => Activation::Tanh,
                "relu" => Activation::Relu,
                other => return Err(FitError::InvalidParameter(format!("unknown activation `{other}`"))),
            };
            Algorithm::Mlp(MlpParams {
                hidden_sizes: p.list_or("hidden_layer_sizes", &d.hidden_sizes)?,
                activation,
                l2_alpha: p.f64_or("alpha", d.l2_alpha)?,
                learning_rate: p.f64_or("learning_rate", d.learning_rate)?,
                epochs: p.usize_or("epochs", d.epochs)?,
                batch_size: p.usize_or("batch_size", d.batch_size)?,
            })
        }
    };
    Ok(alg)
}

fn describe_tree(h: Hyperparams, t: &TreeParams) -> Hyperparams {
    let h = match t.max_depth {
        Some(d) => h.with("max_depth", d as i64),
        None => h.with("max_depth", "none"),
    };
    let h = match t.features_per_split {
        Some(f) => h.with("features_per_split", f as i64),
        None => h.with("features_per_split", "none"),
    };
    h.with("min_samples_leaf", t.min_samples_leaf as i64)
        .with("ccp_alpha", t.ccp_alpha)
        .with("split_mode", t.split_mode.name())
}

/// Full hyperparameter record of a configured learner, defaults included.
pub(super) fn describe(alg: &Algorithm) -> Hyperparams {
    let h = Hyperparams::new();
    match alg {
        Algorithm::Ols => h,
        Algorithm::Ridge { lambda } | Algorithm::Lasso { lambda } => h.with("lambda", *lambda),
        Algorithm::ElasticNet { lambda, alpha } => h.with("lambda", *lambda).with("l1_ratio", *alpha),
        Algorithm::Knn { k } => h.with("n_neighbors", *k as i64),
        Algorithm::Tree(t) => describe_tree(h, t),
        Algorithm::RandomForest { n_estimators, tree }
        | Algorithm::ExtraTrees { n_estimators, tree }
        | Algorithm::AdaBoost { n_estimators, base: tree } => {
            describe_tree(h.with("n_estimators", *n_estimators as i64), tree)
        }
        Algorithm::GradientBoosting { n_estimators, learning_rate, base } => {
            describe_tree(h.with("n_estimators", *n_estimators as i64).with("learning_rate", *learning_rate), base)
        }
        Algorithm::Svr(p) => h
            .with("kernel", "linear")
            .with("C", p.c)
            .with("epsilon", p.epsilon)
            .with("epochs", p.epochs as i64)
            .with("learning_rate", p.learning_rate),
        Algorithm::Mlp(p) => h
            .with("activation", p.activation.name())
            .with("hidden_layer_sizes", p.hidden_sizes.iter().map(|v| *v as i64).collect::<Vec<_>>())
            .with("alpha", p.l2_alpha)
            .with("learning_rate", p.learning_rate)
            .with("epochs", p.epochs as i64)
            .with("batch_size", p.batch_size as i64),
    }
}
