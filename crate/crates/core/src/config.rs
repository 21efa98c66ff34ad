//! TOML run configuration: group, step distribution, coset action and
//! command parameters. Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coset::{parse_permutation, CosetAction};
use crate::entropy::DEFAULT_MAX_BIAS;
use crate::error::{Error, Result};
use crate::group::GroupModel;
use crate::measure::{FinMeasure, DEFAULT_SUPPORT_CAP};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub group: GroupSpec,
    pub measure: MeasureSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<ActionSpec>,
    #[serde(default)]
    pub params: Params,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupKindSpec {
    Free,
    Abelian,
    Permutation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub kind: GroupKindSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    /// Permutation groups: number of points.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    /// Permutation groups: generating permutations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<Vec<String>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKindSpec {
    /// Uniform on generators and their inverses.
    Srw,
    Weights,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    pub kind: MeasureKindSpec,
    /// `[word, "p/q"]` pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<[String; 2]>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionSpec {
    /// Number of cosets; required when any table uses cycle notation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cosets: Option<usize>,
    /// One permutation of the cosets per generator.
    pub generators: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    /// Time horizon `N` for hitting truncations.
    pub horizon: usize,
    /// Largest convolution power for entropy sequences.
    pub n_max: usize,
    /// Largest `n` for exact avoidance tails.
    pub tail_n_max: usize,
    pub samples: usize,
    pub seed: u64,
    pub support_cap: usize,
    pub max_bias: f64,
    /// Walk length for the Shannon–McMillan estimate.
    pub smb_n: usize,
    /// Radius of the ball used for boundary tables.
    pub radius: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            horizon: 20,
            n_max: 6,
            tail_n_max: 50,
            samples: 100_000,
            seed: 0,
            support_cap: DEFAULT_SUPPORT_CAP,
            max_bias: DEFAULT_MAX_BIAS,
            smb_n: 2,
            radius: 3,
            workers: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

/// The objects a configuration describes.
#[derive(Clone, Debug)]
pub struct Setup {
    pub model: GroupModel,
    pub mu: FinMeasure,
    pub action: CosetAction,
}

fn config_err(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(config_err)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(config_err)
    }

    pub fn model(&self) -> Result<GroupModel> {
        let g = &self.group;
        let need = |v: Option<usize>, what: &str| v.ok_or_else(|| Error::Config(format!("group.{what} is required")));
        match g.kind {
            GroupKindSpec::Free => GroupModel::free(need(g.rank, "rank")?),
            GroupKindSpec::Abelian => GroupModel::free_abelian(need(g.rank, "rank")?),
            GroupKindSpec::Permutation => {
                let degree = need(g.degree, "degree")?;
                let gens = g
                    .generators
                    .as_ref()
                    .ok_or_else(|| Error::Config("group.generators is required".into()))?
                    .iter()
                    .map(|s| parse_permutation(s, degree))
                    .collect::<Result<Vec<_>>>()?;
                GroupModel::permutation(degree, gens)
            }
        }
    }

    pub fn measure(&self, model: &GroupModel) -> Result<FinMeasure> {
        match (self.measure.kind, &self.measure.weights) {
            (MeasureKindSpec::Srw, None) => Ok(FinMeasure::simple_random_walk(model)),
            (MeasureKindSpec::Weights, Some(w)) => {
                let pairs: Vec<(&str, &str)> = w.iter().map(|[a, b]| (a.as_str(), b.as_str())).collect();
                let mu = FinMeasure::from_words(model, &pairs)?;
                if !mu.is_probability() {
                    return Err(Error::Config(format!("measure weights sum to {}, not 1", mu.mass())));
                }
                Ok(mu)
            }
            (MeasureKindSpec::Srw, Some(_)) => Err(Error::Config("measure.weights given for kind = \"srw\"".into())),
            (MeasureKindSpec::Weights, None) => Err(Error::Config("measure.weights is required".into())),
        }
    }

    pub fn action(&self, model: &GroupModel) -> Result<CosetAction> {
        let Some(spec) = &self.action else {
            return CosetAction::trivial(model);
        };
        let size = match spec.cosets {
            Some(n) => n,
            None => {
                let first = spec.generators.first().ok_or_else(|| Error::Config("action.generators is empty".into()))?;
                if first.trim_start().starts_with('(') {
                    return Err(Error::Config("action.cosets is required with cycle notation".into()));
                }
                first.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).count()
            }
        };
        let tables = spec.generators.iter().map(|s| parse_permutation(s, size)).collect::<Result<Vec<_>>>()?;
        CosetAction::new(model, tables)
    }

    pub fn setup(&self) -> Result<Setup> {
        let model = self.model()?;
        let mu = self.measure(&model)?;
        let action = self.action(&model)?;
        Ok(Setup { model, mu, action })
    }
}
