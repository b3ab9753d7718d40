use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::barycenters::BarycentricMap;
use crate::condexp::{FiniteProbabilitySpace, Partition, RandomVariable};
use crate::error::{Error, Result};
use crate::geometry::Space;
use crate::ldp::{Event, IidModel};
use crate::martingales::Filtration;
use crate::measures::DiscreteMeasure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Wasserstein,
    Barycenter,
    Condexp,
    Martingale,
    Ergodic,
    Semiflow,
    Mapdist,
    Ldp,
    Audit,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 9] = [
        ExperimentKind::Wasserstein,
        ExperimentKind::Barycenter,
        ExperimentKind::Condexp,
        ExperimentKind::Martingale,
        ExperimentKind::Ergodic,
        ExperimentKind::Semiflow,
        ExperimentKind::Mapdist,
        ExperimentKind::Ldp,
        ExperimentKind::Audit,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Wasserstein => "wasserstein",
            ExperimentKind::Barycenter => "barycenter",
            ExperimentKind::Condexp => "condexp",
            ExperimentKind::Martingale => "martingale",
            ExperimentKind::Ergodic => "ergodic",
            ExperimentKind::Semiflow => "semiflow",
            ExperimentKind::Mapdist => "mapdist",
            ExperimentKind::Ldp => "ldp",
            ExperimentKind::Audit => "audit",
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::input(format!("unknown experiment kind '{s}'")))
    }
}

fn one() -> f64 {
    1.0
}

fn semiflow_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WassersteinConfig {
    pub mu: DiscreteMeasure,
    pub nu: DiscreteMeasure,
    #[serde(default = "one")]
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarycenterConfig {
    pub map: BarycentricMap,
    pub measure: DiscreteMeasure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CondexpConfig {
    pub map: BarycentricMap,
    pub probability: FiniteProbabilitySpace,
    pub phi: RandomVariable,
    pub partition: Partition,
    /// Also run the variational solver and compare.
    #[serde(default)]
    pub sturm: bool,
    /// Coarser partition for the tower-law probe.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coarse: Option<Partition>,
    #[serde(default = "one")]
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MartingaleConfig {
    pub map: BarycentricMap,
    pub probability: FiniteProbabilitySpace,
    pub phi: RandomVariable,
    pub filtration: Filtration,
    #[serde(default = "one")]
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErgodicConfig {
    pub map: BarycentricMap,
    pub probability: FiniteProbabilitySpace,
    pub phi: RandomVariable,
    /// Permutation array of `T`.
    pub transformation: Vec<usize>,
    pub n_max: usize,
    #[serde(default = "one")]
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemiflowConfig {
    pub map: BarycentricMap,
    pub measure: DiscreteMeasure,
    pub ts: Vec<f64>,
    #[serde(default = "semiflow_tol")]
    pub tol: f64,
    /// Compare against the canonical barycenter as `t → 0`.
    #[serde(default)]
    pub limit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapdistConfig {
    pub left: BarycentricMap,
    pub right: BarycentricMap,
    pub space: Space,
    pub budget: usize,
    pub max_n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub n: usize,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SllnConfig {
    pub n_max: usize,
    pub trials: usize,
    pub epsilon: f64,
    #[serde(default)]
    pub checkpoints: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LdpConfig {
    pub model: IidModel,
    pub event: Event,
    pub ns: Vec<usize>,
    pub grid_resolution: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<MonteCarloConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slln: Option<SllnConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditKind {
    Contractivity,
    Monotonicity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    pub audit: AuditKind,
    pub map: BarycentricMap,
    pub space: Space,
    pub trials: usize,
    #[serde(default = "one")]
    pub p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// One experiment, tagged by `"kind"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentConfig {
    Wasserstein(WassersteinConfig),
    Barycenter(BarycenterConfig),
    Condexp(CondexpConfig),
    Martingale(MartingaleConfig),
    Ergodic(ErgodicConfig),
    Semiflow(SemiflowConfig),
    Mapdist(MapdistConfig),
    Ldp(LdpConfig),
    Audit(AuditConfig),
}

impl ExperimentConfig {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            ExperimentConfig::Wasserstein(_) => ExperimentKind::Wasserstein,
            ExperimentConfig::Barycenter(_) => ExperimentKind::Barycenter,
            ExperimentConfig::Condexp(_) => ExperimentKind::Condexp,
            ExperimentConfig::Martingale(_) => ExperimentKind::Martingale,
            ExperimentConfig::Ergodic(_) => ExperimentKind::Ergodic,
            ExperimentConfig::Semiflow(_) => ExperimentKind::Semiflow,
            ExperimentConfig::Mapdist(_) => ExperimentKind::Mapdist,
            ExperimentConfig::Ldp(_) => ExperimentKind::Ldp,
            ExperimentConfig::Audit(_) => ExperimentKind::Audit,
        }
    }

    pub fn is_randomized(&self) -> bool {
        match self {
            ExperimentConfig::Mapdist(_) | ExperimentConfig::Audit(_) => true,
            ExperimentConfig::Ldp(c) => c.monte_carlo.is_some() || c.slln.is_some(),
            _ => false,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            ExperimentConfig::Mapdist(c) => c.seed,
            ExperimentConfig::Audit(c) => c.seed,
            ExperimentConfig::Ldp(c) => c.seed,
            _ => None,
        }
    }

    /// Overrides the seed of a randomized experiment; a no-op otherwise.
    pub fn set_seed(&mut self, seed: u64) {
        match self {
            ExperimentConfig::Mapdist(c) => c.seed = Some(seed),
            ExperimentConfig::Audit(c) => c.seed = Some(seed),
            ExperimentConfig::Ldp(c) if c.monte_carlo.is_some() || c.slln.is_some() => c.seed = Some(seed),
            _ => {}
        }
    }

    /// Required seed of a randomized experiment.
    pub(crate) fn require_seed(&self) -> Result<u64> {
        self.seed()
            .ok_or_else(|| Error::input(format!("{} experiment needs a seed", self.kind().as_str())))
    }

    /// Parses a JSON config. A missing `"kind"` is filled in from `kind`; a
    /// present one must agree with it.
    pub fn parse(text: &str, kind: Option<ExperimentKind>) -> Result<Self> {
        let mut value: Value =
            serde_json::from_str(text).map_err(|e| Error::input(format!("config is not valid JSON: {e}")))?;
        let obj = value
            .as_object_mut()
            .ok_or_else(|| Error::input("config must be a JSON object"))?;
        match (obj.get("kind"), kind) {
            (None, Some(k)) => {
                obj.insert("kind".into(), Value::String(k.as_str().into()));
            }
            (None, None) => return Err(Error::input("config has no \"kind\"")),
            (Some(found), Some(k)) if found.as_str() != Some(k.as_str()) => {
                return Err(Error::input(format!(
                    "config kind {found} does not match the '{}' command",
                    k.as_str()
                )));
            }
            _ => {}
        }
        serde_json::from_value(value).map_err(|e| Error::input(format!("invalid config: {e}")))
    }
}
