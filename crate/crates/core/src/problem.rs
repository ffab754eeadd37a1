//! Serializable description of one equation: Hamiltonian, named media, diffusion.

use crate::error::Result;
use crate::hamiltonian::{HamiltonianDoc, HamiltonianSpec};
use crate::media::{sample_medium, MediumSample, MediumSpec};
use crate::solver::Diffusion;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub hamiltonian: HamiltonianDoc,
    /// Media referenced by `medium_ref` in the Hamiltonian pieces.
    #[serde(default)]
    pub media: BTreeMap<String, MediumSpec>,
    /// Diffusion root `sigma` (`A = sigma^2`); absent means `A = 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<MediumSpec>,
}

/// A problem with every medium sampled.
#[derive(Clone, Debug)]
pub struct Realized {
    pub hamiltonian: HamiltonianSpec,
    pub diffusion: Diffusion,
    pub seed: u64,
}

impl ProblemSpec {
    /// Sample every medium with `seed`, unless its spec pins a seed of its own.
    pub fn realize(&self, seed: u64) -> Result<Realized> {
        let mut media = BTreeMap::new();
        for (name, spec) in &self.media {
            let m = sample_medium(spec, spec.seed.unwrap_or(seed))?;
            media.insert(name.clone(), Arc::new(m));
        }
        let hamiltonian = HamiltonianSpec::from_doc(&self.hamiltonian, &media)?;
        let diffusion = match &self.sigma {
            Some(spec) => Diffusion::sigma(sample_medium(spec, spec.seed.unwrap_or(seed))?),
            None => Diffusion::none(),
        };
        Ok(Realized {
            hamiltonian,
            diffusion,
            seed,
        })
    }

    /// Whether any ingredient can vary with the seed.
    pub fn is_random(&self) -> bool {
        self.media
            .values()
            .chain(self.sigma.iter())
            .any(|m| m.seed.is_none() && m.is_seed_dependent())
    }
}

impl Realized {
    pub fn new(hamiltonian: HamiltonianSpec, diffusion: Diffusion) -> Self {
        Self {
            hamiltonian,
            diffusion,
            seed: 0,
        }
    }

    pub fn with_hamiltonian(&self, hamiltonian: HamiltonianSpec) -> Self {
        Self {
            hamiltonian,
            diffusion: self.diffusion.clone(),
            seed: self.seed,
        }
    }
}

impl From<MediumSample> for Diffusion {
    fn from(sigma: MediumSample) -> Self {
        Diffusion::sigma(sigma)
    }
}
