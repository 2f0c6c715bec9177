//! Agent-based long-term electricity market: SRMC bids cleared in merit
//! order over representative-day hours, GenCos investing on forward NPV,
//! carbon accounting, and demand perturbed by sampled forecast error.

mod dispatch;
mod finance;
mod output;
mod plant;
mod scenario;
mod sim;
mod sweep;

use thiserror::Error;

pub use dispatch::{merit_order_dispatch, Dispatch, Offer};
pub use finance::{forecast_carbon_price, npv, CarbonTrend};
pub use output::{write_simulation_facets, write_sweep_facets, FACETS};
pub use plant::{srmc, Fuel, PowerPlantSpec, Technology};
pub use scenario::{
    CarbonConfig, DemandConfig, Economics, GenCoConfig, PlantConfig, PriceCurve, RepresentativeDay, Scenario,
    SEGMENTS_PER_DAY,
};
pub use sim::{
    perturb_demand, quantize_mw, run_simulation, GenCo, Investment, Market, Perturbation, Plant, PlantYear, Retirement,
    SegmentRecord, SimulationResult, YearRecord,
};
pub use sweep::{default_sigmas, distribution_sweep, sensitivity_sweep, SweepRow, SweepTable};

use crate::residuals::ResidualError;

#[derive(Debug, Error)]
pub enum MarketError {
    #[error("{technology} burns {fuel} but the scenario has no {fuel} price")]
    MissingFuelPrice { technology: Technology, fuel: Fuel },
    #[error("carbon price history needs at least two distinct years")]
    DegenerateHistory,
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Residual(#[from] ResidualError),
    #[error("scenario file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
