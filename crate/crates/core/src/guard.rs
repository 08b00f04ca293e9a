//! Size guards for the exhaustive searches.

use thiserror::Error;

/// Limits that keep exhaustive searches at desk scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Guards {
    /// Maximum `log2` of the coloring space `k^pairs` for arrow decisions.
    pub arrow_log2: u32,
    /// Maximum chain length accepted by good-set construction.
    pub good_chain: usize,
    /// Node budget for one good-set construction.
    pub good_steps: u64,
    /// Maximum subset size for regressive-map search.
    pub diag_nodes: usize,
    /// Maximum ambient size for materialized families.
    pub extensional_nodes: usize,
    /// Maximum number of chains in a chain tree.
    pub chains: usize,
}

impl Default for Guards {
    fn default() -> Self {
        Self {
            arrow_log2: 26,
            good_chain: 30,
            good_steps: 50_000_000,
            diag_nodes: 40,
            extensional_nodes: 12,
            chains: crate::poset::DEFAULT_MAX_CHAINS,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("bad guard specification {0:?}: expected `off` or `key=value,...`")]
pub struct GuardSpecError(pub String);

impl Guards {
    pub fn unlimited() -> Self {
        Self {
            arrow_log2: u32::MAX,
            good_chain: usize::MAX,
            good_steps: u64::MAX,
            diag_nodes: usize::MAX,
            extensional_nodes: 24,
            chains: usize::MAX,
        }
    }

    /// Parses `off` or a comma list such as `arrow=30,chains=5000000`.
    /// Keys: `arrow`, `good_chain`, `good_steps`, `diag`, `extensional`,
    /// `chains`. Unmentioned keys keep their defaults.
    pub fn parse(spec: &str) -> Result<Self, GuardSpecError> {
        let spec = spec.trim();
        if spec.eq_ignore_ascii_case("off") {
            return Ok(Self::unlimited());
        }
        let err = || GuardSpecError(spec.to_string());
        let mut g = Self::default();
        for item in spec.split(',').filter(|s| !s.trim().is_empty()) {
            let (key, value) = item.split_once('=').ok_or_else(err)?;
            let value = value.trim();
            match key.trim() {
                "arrow" => g.arrow_log2 = value.parse().map_err(|_| err())?,
                "good_chain" => g.good_chain = value.parse().map_err(|_| err())?,
                "good_steps" => g.good_steps = value.parse().map_err(|_| err())?,
                "diag" => g.diag_nodes = value.parse().map_err(|_| err())?,
                "extensional" => g.extensional_nodes = value.parse().map_err(|_| err())?,
                "chains" => g.chains = value.parse().map_err(|_| err())?,
                _ => return Err(err()),
            }
        }
        Ok(g)
    }
}
