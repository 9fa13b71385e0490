use num_rational::Ratio;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Species {
    Deuteron,
    AlphaParticle,
}

impl std::str::FromStr for Species {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "deuteron" | "d" => Ok(Species::Deuteron),
            "alpha" | "alpha_particle" => Ok(Species::AlphaParticle),
            other => Err(format!("unknown species {other:?}; expected deuteron or alpha_particle")),
        }
    }
}

/// Charge of the species in units of `e` (magnitude).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpeciesChargeRule {
    pub species: Species,
}

impl SpeciesChargeRule {
    pub fn new(species: Species) -> Self {
        Self { species }
    }

    pub fn charge_multiple(&self) -> i64 {
        match self.species {
            Species::Deuteron => 1,
            Species::AlphaParticle => 2,
        }
    }
}

/// `Δα` for fluxes quantized as `2eΦ = 2πn`: `q·(n_B − n_A)/2` with `q` the
/// charge multiple, exactly.
pub fn quantized_delta_alpha(n_a: i64, n_b: i64, rule: SpeciesChargeRule) -> Ratio<i64> {
    Ratio::new(rule.charge_multiple() * (n_b - n_a), 2)
}
