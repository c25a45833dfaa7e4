//! Learner families, hyperparameter keys and their typed resolution.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ensemble::ForestParams;
use super::linear::{LinearParams, Loss, PaParams};
use super::mlp::MlpParams;
use super::tree::{MaxFeatures, ThresholdMode, TreeParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Family {
    KNeighbors,
    NearestCentroid,
    LogisticRegression,
    #[serde(rename = "SGD")]
    Sgd,
    PassiveAggressive,
    #[serde(rename = "GaussianNB")]
    GaussianNb,
    #[serde(rename = "MultinomialNB")]
    MultinomialNb,
    DecisionTree,
    RandomForest,
    ExtraTrees,
    AdaBoost,
    GradientBoosting,
    #[serde(rename = "MLP")]
    Mlp,
}

impl Family {
    pub const ALL: [Family; 13] = [
        Family::KNeighbors,
        Family::NearestCentroid,
        Family::LogisticRegression,
        Family::Sgd,
        Family::PassiveAggressive,
        Family::GaussianNb,
        Family::MultinomialNb,
        Family::DecisionTree,
        Family::RandomForest,
        Family::ExtraTrees,
        Family::AdaBoost,
        Family::GradientBoosting,
        Family::Mlp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::KNeighbors => "KNeighbors",
            Family::NearestCentroid => "NearestCentroid",
            Family::LogisticRegression => "LogisticRegression",
            Family::Sgd => "SGD",
            Family::PassiveAggressive => "PassiveAggressive",
            Family::GaussianNb => "GaussianNB",
            Family::MultinomialNb => "MultinomialNB",
            Family::DecisionTree => "DecisionTree",
            Family::RandomForest => "RandomForest",
            Family::ExtraTrees => "ExtraTrees",
            Family::AdaBoost => "AdaBoost",
            Family::GradientBoosting => "GradientBoosting",
            Family::Mlp => "MLP",
        }
    }

    /// Hyperparameter keys this family accepts.
    pub fn keys(self) -> &'static [&'static str] {
        match self {
            Family::KNeighbors => &["knn.k"],
            Family::NearestCentroid => &[],
            Family::LogisticRegression => &["lin.lr", "lin.l2", "lin.epochs", "lin.decay", "lin.tol", "lin.pos_weight"],
            Family::Sgd => &["lin.lr", "lin.l2", "lin.epochs", "lin.decay", "lin.pos_weight", "sgd.loss"],
            Family::PassiveAggressive => &["pa.C", "lin.epochs", "lin.pos_weight"],
            Family::GaussianNb => &["nb.var_floor"],
            Family::MultinomialNb => &["nb.alpha"],
            Family::DecisionTree => &["tree.max_depth", "tree.min_leaf", "tree.max_features"],
            Family::RandomForest | Family::ExtraTrees => &[
                "forest.trees",
                "forest.max_features",
                "forest.bootstrap",
                "forest.pos_weight",
                "tree.max_depth",
                "tree.min_leaf",
            ],
            Family::AdaBoost => &["ada.stages", "ada.depth"],
            Family::GradientBoosting => &["gb.stages", "gb.lr", "gb.depth"],
            Family::Mlp => &["mlp.h1", "mlp.h2", "mlp.layers", "mlp.lr", "mlp.decay", "mlp.batch", "mlp.epochs"],
        }
    }

    pub fn default_preprocessing(self) -> Preprocessing {
        match self {
            Family::LogisticRegression | Family::Sgd | Family::PassiveAggressive | Family::Mlp => {
                Preprocessing::Standardize
            }
            _ => Preprocessing::MinMax,
        }
    }

    pub fn default_mode(self) -> MultilabelMode {
        match self {
            Family::KNeighbors | Family::Mlp | Family::RandomForest | Family::ExtraTrees | Family::DecisionTree => {
                MultilabelMode::Native
            }
            _ => MultilabelMode::OneVsRest,
        }
    }

    pub fn supports_native(self) -> bool {
        matches!(
            self,
            Family::KNeighbors
                | Family::NearestCentroid
                | Family::DecisionTree
                | Family::RandomForest
                | Family::ExtraTrees
                | Family::Mlp
        )
    }

    /// Families that update in place as samples arrive.
    pub fn is_incremental(self) -> bool {
        matches!(self, Family::Sgd | Family::PassiveAggressive)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase();
        let fam = match norm.as_str() {
            "kneighbors" | "knn" => Family::KNeighbors,
            "nearestcentroid" | "nearestcentroidovr" | "nc" => Family::NearestCentroid,
            "logisticregression" | "logreg" => Family::LogisticRegression,
            "sgd" => Family::Sgd,
            "passiveaggressive" | "pa" => Family::PassiveAggressive,
            "gaussiannb" => Family::GaussianNb,
            "multinomialnb" => Family::MultinomialNb,
            "decisiontree" => Family::DecisionTree,
            "randomforest" => Family::RandomForest,
            "extratrees" => Family::ExtraTrees,
            "adaboost" => Family::AdaBoost,
            "gradientboosting" => Family::GradientBoosting,
            "mlp" => Family::Mlp,
            _ => return Err(Error::Config(format!("unknown learner family `{s}`"))),
        };
        Ok(fam)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preprocessing {
    MinMax,
    Standardize,
}

impl FromStr for Preprocessing {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "minmax" => Ok(Preprocessing::MinMax),
            "standardize" => Ok(Preprocessing::Standardize),
            other => Err(Error::Config(format!("unknown preprocessing `{other}`"))),
        }
    }
}

impl fmt::Display for Preprocessing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preprocessing::MinMax => "minmax",
            Preprocessing::Standardize => "standardize",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MultilabelMode {
    #[serde(rename = "native")]
    Native,
    #[serde(rename = "one_vs_rest")]
    OneVsRest,
}

impl FromStr for MultilabelMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "native" => Ok(MultilabelMode::Native),
            "one_vs_rest" | "ovr" => Ok(MultilabelMode::OneVsRest),
            other => Err(Error::Config(format!("unknown multilabel mode `{other}`"))),
        }
    }
}

impl fmt::Display for MultilabelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MultilabelMode::Native => "native",
            MultilabelMode::OneVsRest => "one_vs_rest",
        })
    }
}

/// A learner family with its hyperparameters, preprocessing, multi-label
/// strategy and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerSpec {
    pub family: Family,
    pub hyperparams: BTreeMap<String, String>,
    pub preprocessing: Preprocessing,
    pub mode: MultilabelMode,
    pub seed: u64,
}

impl LearnerSpec {
    pub fn new(family: Family) -> Self {
        LearnerSpec {
            family,
            hyperparams: BTreeMap::new(),
            preprocessing: family.default_preprocessing(),
            mode: family.default_mode(),
            seed: 0,
        }
    }

    /// Sets a hyperparameter; the key must belong to the family.
    pub fn with(mut self, key: &str, value: impl ToString) -> Result<Self> {
        self.set(key, value)?;
        Ok(self)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> Result<()> {
        match key {
            "mode" => self.mode = value.to_string().parse()?,
            "preprocessing" => self.preprocessing = value.to_string().parse()?,
            _ => {
                if !self.family.keys().contains(&key) {
                    return Err(Error::Config(format!(
                        "`{key}` is not a hyperparameter of {} (accepted: {})",
                        self.family,
                        self.family.keys().join(", ")
                    )));
                }
                self.hyperparams.insert(key.to_string(), value.to_string());
            }
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_mode(mut self, mode: MultilabelMode) -> Self {
        self.mode = mode;
        self
    }

    /// Every setting that differs from the family defaults, as key/value
    /// pairs accepted by [`LearnerSpec::set`].
    pub fn settings(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        if self.mode != self.family.default_mode() {
            out.push(("mode".to_string(), self.mode.to_string()));
        }
        if self.preprocessing != self.family.default_preprocessing() {
            out.push(("preprocessing".to_string(), self.preprocessing.to_string()));
        }
        out.extend(self.hyperparams.iter().map(|(k, v)| (k.clone(), v.clone())));
        out
    }

    /// Compact `key=value;...` rendering used in result records.
    pub fn params_string(&self) -> String {
        self.settings()
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }

    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.hyperparams.get(key) {
            None => Ok(default),
            Some(v) => v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{}: bad value `{v}` for `{key}`", self.family))),
        }
    }

    fn positive<T: FromStr + PartialOrd + Default + fmt::Display>(&self, key: &str, default: T) -> Result<T> {
        let v = self.get(key, default)?;
        if v <= T::default() {
            return Err(Error::Config(format!("{}: `{key}` must be positive, got {v}", self.family)));
        }
        Ok(v)
    }

    fn non_negative(&self, key: &str, default: f64) -> Result<f64> {
        let v: f64 = self.get(key, default)?;
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::Config(format!("{}: `{key}` must be finite and >= 0, got {v}", self.family)));
        }
        Ok(v)
    }

    fn max_depth(&self) -> Result<Option<usize>> {
        match self.hyperparams.get("tree.max_depth").map(|s| s.trim()) {
            None | Some("none") => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("{}: bad tree.max_depth `{v}`", self.family))),
        }
    }

    fn max_features(&self, key: &str, default: MaxFeatures) -> Result<MaxFeatures> {
        match self.hyperparams.get(key) {
            None => Ok(default),
            Some(v) => v.parse(),
        }
    }

    fn linear(&self, default_epochs: usize) -> Result<LinearParams> {
        let loss = match self.hyperparams.get("sgd.loss").map(|s| s.trim()) {
            None | Some("log") => Loss::Log,
            Some("hinge") => Loss::Hinge,
            Some(other) => return Err(Error::Config(format!("SGD: unknown loss `{other}`"))),
        };
        Ok(LinearParams {
            lr: self.non_negative("lin.lr", 0.1)?,
            decay: self.non_negative("lin.decay", 0.01)?,
            l2: self.non_negative("lin.l2", 1e-4)?,
            epochs: self.get("lin.epochs", default_epochs)?,
            tol: self.non_negative("lin.tol", 1e-6)?,
            loss,
            pos_weight: self.positive("lin.pos_weight", 1.0)?,
        })
    }

    /// Validates every hyperparameter and fills defaults.
    pub fn resolve(&self) -> Result<FamilyParams> {
        if let Some(k) = self.hyperparams.keys().find(|k| !self.family.keys().contains(&k.as_str())) {
            return Err(Error::Config(format!("`{k}` is not a hyperparameter of {}", self.family)));
        }
        if self.mode == MultilabelMode::Native && !self.family.supports_native() {
            return Err(Error::Config(format!(
                "{} has no native multi-label mode; use one_vs_rest",
                self.family
            )));
        }
        let tree = |default_features: MaxFeatures, mode: ThresholdMode, feature_key: &str| -> Result<TreeParams> {
            Ok(TreeParams {
                max_depth: self.max_depth()?,
                min_leaf: self.positive("tree.min_leaf", 1usize)?,
                max_features: self.max_features(feature_key, default_features)?,
                threshold_mode: mode,
            })
        };
        let p = match self.family {
            Family::KNeighbors => FamilyParams::Knn {
                k: self.positive("knn.k", 5usize)?,
            },
            Family::NearestCentroid => FamilyParams::NearestCentroid,
            Family::LogisticRegression => FamilyParams::Logistic(self.linear(100)?),
            Family::Sgd => FamilyParams::Sgd(self.linear(20)?),
            Family::PassiveAggressive => FamilyParams::PassiveAggressive(PaParams {
                c: self.positive("pa.C", 1.0f64)?,
                epochs: self.get("lin.epochs", 10usize)?,
                pos_weight: self.positive("lin.pos_weight", 1.0)?,
            }),
            Family::GaussianNb => FamilyParams::GaussianNb {
                var_floor: self.non_negative("nb.var_floor", 1e-9)?,
            },
            Family::MultinomialNb => FamilyParams::MultinomialNb {
                alpha: self.positive("nb.alpha", 1.0f64)?,
            },
            Family::DecisionTree => FamilyParams::Tree(tree(MaxFeatures::All, ThresholdMode::Best, "tree.max_features")?),
            Family::RandomForest | Family::ExtraTrees => {
                let extra = self.family == Family::ExtraTrees;
                let mode = if extra { ThresholdMode::Random } else { ThresholdMode::Best };
                let pos_weight = self.positive("forest.pos_weight", 1.0)?;
                if pos_weight != 1.0 && self.mode == MultilabelMode::Native {
                    return Err(Error::Config(format!(
                        "{}: forest.pos_weight needs one_vs_rest mode",
                        self.family
                    )));
                }
                FamilyParams::Forest(ForestParams {
                    trees: self.positive("forest.trees", 100usize)?,
                    bootstrap: self.get("forest.bootstrap", !extra)?,
                    tree: tree(MaxFeatures::Sqrt, mode, "forest.max_features")?,
                    pos_weight,
                })
            }
            Family::AdaBoost => FamilyParams::AdaBoost {
                stages: self.get("ada.stages", 100usize)?,
                depth: self.positive("ada.depth", 1usize)?,
            },
            Family::GradientBoosting => FamilyParams::GradientBoosting {
                stages: self.get("gb.stages", 100usize)?,
                lr: self.non_negative("gb.lr", 0.1)?,
                depth: self.positive("gb.depth", 3usize)?,
            },
            Family::Mlp => {
                let layers: usize = self.get("mlp.layers", 2)?;
                let h1 = self.positive("mlp.h1", 128usize)?;
                let h2 = self.positive("mlp.h2", 128usize)?;
                let hidden = match layers {
                    1 => vec![h1],
                    2 => vec![h1, h2],
                    other => return Err(Error::Config(format!("MLP: mlp.layers must be 1 or 2, got {other}"))),
                };
                FamilyParams::Mlp(MlpParams {
                    hidden,
                    lr: self.non_negative("mlp.lr", 0.01)?,
                    decay: self.non_negative("mlp.decay", 0.001)?,
                    batch: self.positive("mlp.batch", 32usize)?,
                    epochs: self.get("mlp.epochs", 200usize)?,
                })
            }
        };
        Ok(p)
    }
}

/// Typed, validated hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilyParams {
    Knn { k: usize },
    NearestCentroid,
    Logistic(LinearParams),
    Sgd(LinearParams),
    PassiveAggressive(PaParams),
    GaussianNb { var_floor: f64 },
    MultinomialNb { alpha: f64 },
    Tree(TreeParams),
    Forest(ForestParams),
    AdaBoost { stages: usize, depth: usize },
    GradientBoosting { stages: usize, lr: f64, depth: usize },
    Mlp(MlpParams),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_names_round_trip() {
        for f in Family::ALL {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
            let spec = LearnerSpec::new(f);
            spec.resolve().unwrap();
        }
        assert_eq!("NearestCentroidOvR".parse::<Family>().unwrap(), Family::NearestCentroid);
        assert!("Perceptron".parse::<Family>().is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(LearnerSpec::new(Family::KNeighbors).with("mlp.h1", 3).is_err());
        let spec = LearnerSpec::new(Family::KNeighbors).with("knn.k", 0).unwrap();
        assert!(spec.resolve().is_err());
        let spec = LearnerSpec::new(Family::Mlp).with("mlp.layers", 3).unwrap();
        assert!(spec.resolve().is_err());
    }

    #[test]
    fn native_mode_requires_support() {
        let spec = LearnerSpec::new(Family::Sgd).with_mode(MultilabelMode::Native);
        assert!(spec.resolve().is_err());
        let spec = LearnerSpec::new(Family::NearestCentroid).with_mode(MultilabelMode::Native);
        assert!(spec.resolve().is_ok());
    }

    #[test]
    fn defaults() {
        assert_eq!(Family::NearestCentroid.default_mode(), MultilabelMode::OneVsRest);
        assert_eq!(Family::RandomForest.default_mode(), MultilabelMode::Native);
        assert_eq!(Family::Mlp.default_preprocessing(), Preprocessing::Standardize);
        assert_eq!(Family::ExtraTrees.default_preprocessing(), Preprocessing::MinMax);
        match LearnerSpec::new(Family::ExtraTrees).resolve().unwrap() {
            FamilyParams::Forest(p) => {
                assert_eq!(p.trees, 100);
                assert!(!p.bootstrap);
                assert_eq!(p.tree.threshold_mode, ThresholdMode::Random);
            }
            other => panic!("{other:?}"),
        }
    }
}
