use std::fmt;

use serde::{Deserialize, Serialize};

use super::MarketError;

/// Generation technologies; declaration order is the investment tie-break
/// order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Technology {
    Ccgt,
    Coal,
    Nuclear,
    OnshoreWind,
    OffshoreWind,
    Photovoltaic,
    RecipGas,
}

impl Technology {
    pub const ALL: [Technology; 7] = [
        Self::Ccgt,
        Self::Coal,
        Self::Nuclear,
        Self::OnshoreWind,
        Self::OffshoreWind,
        Self::Photovoltaic,
        Self::RecipGas,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Ccgt => "ccgt",
            Self::Coal => "coal",
            Self::Nuclear => "nuclear",
            Self::OnshoreWind => "onshore_wind",
            Self::OffshoreWind => "offshore_wind",
            Self::Photovoltaic => "photovoltaic",
            Self::RecipGas => "recip_gas",
        }
    }

    /// Weather-driven output that cannot be scheduled.
    pub fn is_intermittent(self) -> bool {
        matches!(self, Self::OnshoreWind | Self::OffshoreWind | Self::Photovoltaic)
    }
}

impl fmt::Display for Technology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fuel {
    Gas,
    Coal,
    Uranium,
}

impl fmt::Display for Fuel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Gas => "gas",
            Self::Coal => "coal",
            Self::Uranium => "uranium",
        })
    }
}

/// A plant, or a candidate template when `commission_year` is unset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerPlantSpec {
    pub technology: Technology,
    pub capacity_mw: f64,
    /// Thermal plants only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub efficiency: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fuel: Option<Fuel>,
    pub variable_opex_per_mwh: f64,
    pub fixed_opex_per_mw_year: f64,
    pub capex_per_mw: f64,
    pub carbon_intensity_t_per_mwh: f64,
    pub lifetime_years: u32,
    #[serde(default)]
    pub commission_year: i32,
    pub dispatchable: bool,
}

impl PowerPlantSpec {
    pub fn is_thermal(&self) -> bool {
        self.fuel.is_some()
    }

    /// Last year the plant may operate.
    pub fn end_year(&self) -> i32 {
        self.commission_year + self.lifetime_years as i32
    }

    pub fn operating_in(&self, year: i32) -> bool {
        self.commission_year <= year && year <= self.end_year()
    }

    pub fn validate(&self) -> Result<(), MarketError> {
        let bad = |msg: &str| Err(MarketError::InvalidScenario(format!("{} plant: {msg}", self.technology)));
        if !(self.capacity_mw > 0.0 && self.capacity_mw.is_finite()) {
            return bad("capacity_mw must be positive");
        }
        if self.fuel.is_some() != self.efficiency.is_some() {
            return bad("thermal plants need both fuel and efficiency, others neither");
        }
        if let Some(e) = self.efficiency {
            if !(e > 0.0 && e <= 1.0) {
                return bad("efficiency must lie in (0, 1]");
            }
        }
        if self.technology.is_intermittent() && (self.dispatchable || self.fuel.is_some()) {
            return bad("intermittent plants are non-dispatchable and burn no fuel");
        }
        if !(self.carbon_intensity_t_per_mwh >= 0.0) {
            return bad("carbon_intensity_t_per_mwh must be >= 0");
        }
        let costs = [self.variable_opex_per_mwh, self.fixed_opex_per_mw_year, self.capex_per_mw];
        if costs.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return bad("costs must be finite and >= 0");
        }
        if self.lifetime_years == 0 {
            return bad("lifetime_years must be positive");
        }
        Ok(())
    }
}

/// Short-run marginal cost in currency/MWh.
pub fn srmc(plant: &PowerPlantSpec, fuel_price: Option<f64>, carbon_price: f64) -> Result<f64, MarketError> {
    match (plant.fuel, plant.efficiency) {
        (Some(fuel), Some(eff)) => {
            let price = fuel_price.ok_or(MarketError::MissingFuelPrice { technology: plant.technology, fuel })?;
            Ok(price / eff + plant.carbon_intensity_t_per_mwh * carbon_price + plant.variable_opex_per_mwh)
        }
        _ => Ok(plant.variable_opex_per_mwh),
    }
}
