use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::plant::{Fuel, PowerPlantSpec, Technology};
use super::MarketError;

pub const SEGMENTS_PER_DAY: usize = 24;
const DAYS_PER_YEAR: f64 = 365.0;

const DEFAULT_SCENARIO: &str = include_str!("../../scenarios/default.toml");

/// Piecewise-linear curve through `[year, value]` points, flat beyond the
/// ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct PriceCurve(pub Vec<(i32, f64)>);

impl PriceCurve {
    pub fn at(&self, year: i32) -> f64 {
        let p = &self.0;
        if year <= p[0].0 {
            return p[0].1;
        }
        for w in p.windows(2) {
            let ((y0, v0), (y1, v1)) = (w[0], w[1]);
            if year <= y1 {
                return v0 + (v1 - v0) * f64::from(year - y0) / f64::from(y1 - y0);
            }
        }
        p[p.len() - 1].1
    }

    pub fn last_value(&self) -> f64 {
        self.0[self.0.len() - 1].1
    }

    fn validate(&self, what: &str) -> Result<(), MarketError> {
        if self.0.is_empty() {
            return Err(MarketError::InvalidScenario(format!("{what}: curve is empty")));
        }
        if self.0.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(MarketError::InvalidScenario(format!("{what}: years must increase strictly")));
        }
        if self.0.iter().any(|&(_, v)| !(v.is_finite() && v >= 0.0)) {
            return Err(MarketError::InvalidScenario(format!("{what}: values must be finite and >= 0")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Economics {
    #[serde(default = "default_horizon")]
    pub forward_horizon_years: u32,
    #[serde(default = "default_thermal_delay")]
    pub construction_delay_thermal_years: u32,
    #[serde(default = "default_renewable_delay")]
    pub construction_delay_renewable_years: u32,
    /// Settlement price when demand goes unserved; defaults to ten times
    /// the year's most expensive SRMC.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_of_lost_load_per_mwh: Option<f64>,
    /// Calibrated expected electricity price; its last value prices years
    /// past the forward horizon.
    pub reference_price_per_mwh: PriceCurve,
}

fn default_horizon() -> u32 {
    10
}
fn default_thermal_delay() -> u32 {
    2
}
fn default_renewable_delay() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandConfig {
    pub growth_per_year: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarbonConfig {
    /// Observed prices before the simulation starts.
    pub history_per_tonne: PriceCurve,
    /// Realised prices during the simulation.
    pub curve_per_tonne: PriceCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentativeDay {
    pub name: String,
    /// Days of the year this profile stands for.
    pub weight_days: f64,
    pub demand_mw: Vec<f64>,
    /// Hourly availability per technology; absent technologies are fully
    /// available.
    #[serde(default)]
    pub capacity_factors: BTreeMap<Technology, Vec<f64>>,
}

impl RepresentativeDay {
    pub fn capacity_factor(&self, tech: Technology, hour: usize) -> f64 {
        self.capacity_factors.get(&tech).map_or(1.0, |cf| cf[hour])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenCoConfig {
    pub id: String,
    pub cash: f64,
    pub discount_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantConfig {
    pub owner: String,
    #[serde(flatten)]
    pub spec: PowerPlantSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub start_year: i32,
    pub end_year: i32,
    pub economics: Economics,
    pub demand: DemandConfig,
    pub fuels: BTreeMap<Fuel, PriceCurve>,
    pub carbon: CarbonConfig,
    pub representative_days: Vec<RepresentativeDay>,
    pub gencos: Vec<GenCoConfig>,
    pub plants: Vec<PlantConfig>,
    pub candidates: Vec<PowerPlantSpec>,
}

impl Scenario {
    /// The shipped desk-scale scenario: 4 representative days, 7 plants and
    /// 3 GenCos, 2018–2035.
    pub fn default_scenario() -> Self {
        Self::from_toml(DEFAULT_SCENARIO).expect("shipped scenario is valid")
    }

    pub fn default_toml() -> &'static str {
        DEFAULT_SCENARIO
    }

    pub fn from_toml(text: &str) -> Result<Self, MarketError> {
        let s: Self = toml::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, MarketError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenarios always serialize")
    }

    pub fn fuel_price(&self, fuel: Fuel, year: i32) -> Option<f64> {
        self.fuels.get(&fuel).map(|c| c.at(year))
    }

    /// Representative-day demand scaled by growth since the start year.
    pub fn demand_mw(&self, day: usize, hour: usize, year: i32) -> f64 {
        let growth = (1.0 + self.demand.growth_per_year).powi(year - self.start_year);
        self.representative_days[day].demand_mw[hour] * growth
    }

    pub fn construction_delay(&self, tech: Technology) -> u32 {
        if tech.is_intermittent() {
            self.economics.construction_delay_renewable_years
        } else {
            self.economics.construction_delay_thermal_years
        }
    }

    pub fn validate(&self) -> Result<(), MarketError> {
        let bad = |msg: String| Err(MarketError::InvalidScenario(msg));
        if self.end_year < self.start_year {
            return bad("end_year precedes start_year".into());
        }
        if self.representative_days.is_empty() {
            return bad("no representative days".into());
        }
        let weights: f64 = self.representative_days.iter().map(|d| d.weight_days).sum();
        if (weights - DAYS_PER_YEAR).abs() > 1e-6 {
            return bad(format!("representative-day weights sum to {weights}, expected 365"));
        }
        for d in &self.representative_days {
            if !(d.weight_days > 0.0) {
                return bad(format!("day {}: weight_days must be positive", d.name));
            }
            if d.demand_mw.len() != SEGMENTS_PER_DAY || d.demand_mw.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return bad(format!("day {}: demand_mw needs 24 finite values >= 0", d.name));
            }
            for (tech, cf) in &d.capacity_factors {
                if cf.len() != SEGMENTS_PER_DAY || cf.iter().any(|v| !(0.0..=1.0).contains(v)) {
                    return bad(format!("day {}: {tech} capacity factors need 24 values in [0, 1]", d.name));
                }
            }
        }
        if !(self.demand.growth_per_year > -1.0) {
            return bad("demand growth_per_year must exceed -1".into());
        }
        for (fuel, curve) in &self.fuels {
            curve.validate(&format!("fuel {fuel}"))?;
        }
        self.carbon.history_per_tonne.validate("carbon history")?;
        self.carbon.curve_per_tonne.validate("carbon curve")?;
        self.economics.reference_price_per_mwh.validate("reference price")?;
        if let Some(v) = self.economics.value_of_lost_load_per_mwh {
            if !(v.is_finite() && v > 0.0) {
                return bad("value_of_lost_load_per_mwh must be positive".into());
            }
        }
        let mut ids = BTreeSet::new();
        for g in &self.gencos {
            if !ids.insert(g.id.as_str()) {
                return bad(format!("duplicate genco id {}", g.id));
            }
            if !(g.discount_rate > -1.0 && g.cash.is_finite()) {
                return bad(format!("genco {}: invalid cash or discount rate", g.id));
            }
        }
        if self.gencos.is_empty() {
            return bad("no gencos".into());
        }
        if self.candidates.is_empty() {
            return bad("no candidate technologies".into());
        }
        for p in &self.plants {
            if !ids.contains(p.owner.as_str()) {
                return bad(format!("plant owner {} is not a genco", p.owner));
            }
        }
        for spec in self.plants.iter().map(|p| &p.spec).chain(&self.candidates) {
            spec.validate()?;
            if let Some(fuel) = spec.fuel {
                if !self.fuels.contains_key(&fuel) {
                    return Err(MarketError::MissingFuelPrice { technology: spec.technology, fuel });
                }
            }
        }
        Ok(())
    }
}
