//! JSON instance format.

use std::path::Path;

use adsignal::rv::{FiniteSupport, MarketShape};
use adsignal::{AuctionInstance, SingleMindedStructure};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleMindedSpec {
    pub groups: Vec<usize>,
    pub deltas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionSpec {
    pub matrices: Vec<Vec<Vec<f64>>>,
    pub probs: Vec<f64>,
}

/// An auction with either known valuations or a finite distribution over
/// valuation matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub m: usize,
    pub lambdas: Vec<f64>,
    pub prior: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valuations: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub single_minded: Option<SingleMindedSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<DistributionSpec>,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

impl InstanceFile {
    pub fn parse(text: &str) -> CliResult<Self> {
        let file: Self =
            serde_json::from_str(text).map_err(|e| invalid(format!("malformed instance: {e}")))?;
        file.validate()?;
        Ok(file)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("cannot read {}", path.display()), e))?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.to_json())
            .map_err(|e| CliError::io(format!("cannot write {}", path.display()), e))
    }

    /// Checks every structural invariant, naming the offending field.
    pub fn validate(&self) -> CliResult<()> {
        if self.m != self.lambdas.len() {
            return Err(invalid(format!(
                "invalid m: {} does not match the {} entries of lambdas",
                self.m,
                self.lambdas.len()
            )));
        }
        match (&self.valuations, &self.distribution) {
            (Some(_), Some(_)) => {
                return Err(invalid(
                    "invalid distribution: \"distribution\" and \"valuations\" are mutually exclusive",
                ))
            }
            (None, None) if self.single_minded.is_none() => {
                return Err(invalid(
                    "invalid valuations: one of \"valuations\", \"single_minded\" or \"distribution\" is required",
                ))
            }
            _ => {}
        }
        if self.distribution.is_some() {
            if self.single_minded.is_some() {
                return Err(invalid(
                    "invalid single_minded: not supported together with \"distribution\"",
                ));
            }
            self.oracle()?;
            self.shape()?;
        } else {
            self.instance()?;
        }
        Ok(())
    }

    pub fn has_distribution(&self) -> bool {
        self.distribution.is_some()
    }

    pub fn single_minded(&self) -> CliResult<Option<SingleMindedStructure>> {
        self.single_minded
            .as_ref()
            .map(|sm| SingleMindedStructure::new(sm.groups.clone(), sm.deltas.clone()))
            .transpose()
            .map_err(CliError::from)
    }

    /// The known-valuations instance; valuations may be omitted when a
    /// single-minded structure induces them.
    pub fn instance(&self) -> CliResult<AuctionInstance> {
        let sm = self.single_minded()?;
        let valuations = match (&self.valuations, &sm) {
            (Some(v), _) => v.clone(),
            (None, Some(sm)) => sm.induced_valuations(),
            (None, None) => {
                return Err(invalid(
                    "invalid valuations: this instance only has a distribution",
                ))
            }
        };
        let instance = AuctionInstance::new(self.lambdas.clone(), self.prior.clone(), valuations)?;
        if let Some(sm) = &sm {
            sm.check_instance(&instance)?;
        }
        Ok(instance)
    }

    pub fn oracle(&self) -> CliResult<FiniteSupport<f64>> {
        let dist = self
            .distribution
            .as_ref()
            .ok_or_else(|| invalid("invalid distribution: missing"))?;
        let oracle = FiniteSupport::new(dist.matrices.clone(), dist.probs.clone())?;
        if dist.matrices[0][0].len() != self.prior.len() {
            return Err(invalid(format!(
                "invalid distribution.matrices: {} states, but the prior has {}",
                dist.matrices[0][0].len(),
                self.prior.len()
            )));
        }
        if self.m > dist.matrices[0].len() {
            return Err(invalid(format!(
                "invalid m: {} slots exceed the {} bidders",
                self.m,
                dist.matrices[0].len()
            )));
        }
        Ok(oracle)
    }

    pub fn shape(&self) -> CliResult<MarketShape<f64>> {
        Ok(MarketShape::new(self.lambdas.clone(), self.prior.clone())?)
    }
}
