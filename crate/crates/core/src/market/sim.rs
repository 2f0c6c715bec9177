use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::dispatch::{merit_order_dispatch, Dispatch, Offer};
use super::finance::{npv, CarbonTrend};
use super::plant::{srmc, PowerPlantSpec, Technology};
use super::scenario::{Scenario, SEGMENTS_PER_DAY};
use super::MarketError;
use crate::residuals::ResidualDistribution;
use crate::rng::{stream, stream_seed, streams, StreamRng};

const MW_QUANTUM: f64 = 1024.0;
const VOLL_MULTIPLE: f64 = 10.0;
/// Dispatch id of the candidate in forward valuation: last among equal bids.
const CANDIDATE_ID: usize = usize::MAX;

/// Rounds down to a multiple of 1/1024 MW. Sums and differences of such
/// values are exact in f64 below 2^43 MW, which makes segment energy
/// balances exact.
pub fn quantize_mw(mw: f64) -> f64 {
    (mw * MW_QUANTUM).floor() / MW_QUANTUM
}

fn to_cents(x: f64) -> i64 {
    (x * 100.0).round() as i64
}

/// Demand noise applied to every segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Perturbation {
    None,
    PointMass { value_mw: f64 },
    Distribution(ResidualDistribution),
}

impl Perturbation {
    /// `Normal(0, σ)`; σ = 0 gives the point mass at zero.
    pub fn normal(sigma_mw: f64) -> Result<Self, MarketError> {
        if sigma_mw == 0.0 {
            return Ok(Self::PointMass { value_mw: 0.0 });
        }
        Ok(Self::Distribution(ResidualDistribution::normal(0.0, sigma_mw)?))
    }

    pub fn draw(&self, rng: &mut StreamRng) -> f64 {
        match self {
            Self::None => 0.0,
            Self::PointMass { value_mw } => *value_mw,
            Self::Distribution(d) => d.draw(rng),
        }
    }
}

/// `(max(0, demand + draw), draw)`.
pub fn perturb_demand(demand_mw: f64, perturbation: &Perturbation, rng: &mut StreamRng) -> (f64, f64) {
    let draw = perturbation.draw(rng);
    ((demand_mw + draw).max(0.0), draw)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plant {
    pub id: usize,
    /// Index into the market's GenCos.
    pub owner: usize,
    pub spec: PowerPlantSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenCo {
    pub id: String,
    pub cash_cents: i64,
    pub discount_rate: f64,
    /// Operating plants and plants under construction.
    pub portfolio: Vec<Plant>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Investment {
    pub year: i32,
    pub genco: String,
    pub plant_id: usize,
    pub technology: Technology,
    pub capacity_mw: f64,
    pub npv: f64,
    pub capex_cents: i64,
    pub commission_year: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Retirement {
    pub year: i32,
    pub genco: String,
    pub plant_id: usize,
    pub technology: Technology,
    pub capacity_mw: f64,
}

/// One representative-day hour in one year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub day: usize,
    pub hour: usize,
    pub base_demand_mw: f64,
    pub draw_mw: f64,
    /// Perturbed, floored at zero and quantised.
    pub demand_mw: f64,
    pub dispatched_mw: f64,
    pub unserved_mw: f64,
    pub clearing_price: f64,
    /// Clearing price, or the value of lost load when demand goes unserved.
    pub settlement_price: f64,
}

/// One operating plant's year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantYear {
    pub plant_id: usize,
    pub genco: String,
    pub technology: Technology,
    pub capacity_mw: f64,
    pub carbon_intensity_t_per_mwh: f64,
    pub srmc: f64,
    pub dispatch_mwh: f64,
    pub available_mwh: f64,
    pub carbon_t: f64,
    pub revenue_cents: i64,
    pub fuel_cents: i64,
    pub carbon_cents: i64,
    pub opex_cents: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearRecord {
    pub year: i32,
    pub carbon_price: f64,
    pub value_of_lost_load: f64,
    pub segments: Vec<SegmentRecord>,
    /// Ordered by plant id.
    pub plants: Vec<PlantYear>,
    pub dispatch_mwh: BTreeMap<Technology, f64>,
    pub available_mwh: BTreeMap<Technology, f64>,
    pub capacity_mw: BTreeMap<Technology, f64>,
    pub carbon_t: f64,
    pub unserved_mwh: f64,
    pub investments: Vec<Investment>,
    pub retirements: Vec<Retirement>,
    pub revenue_cents: i64,
    pub cost_cents: i64,
    pub capex_cents: i64,
    /// Per GenCo, in scenario order.
    pub cash_start_cents: Vec<i64>,
    pub cash_end_cents: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub seed: u64,
    pub years: Vec<YearRecord>,
    /// Mean yearly energy per technology over the run.
    pub mean_dispatch_mwh: BTreeMap<Technology, f64>,
    pub invested_mw: BTreeMap<Technology, f64>,
    pub mean_carbon_t: f64,
    pub unserved_mwh: f64,
}

impl SimulationResult {
    /// Mean yearly carbon relative to `baseline`.
    pub fn relative_mean_carbon(&self, baseline: &SimulationResult) -> f64 {
        self.mean_carbon_t / baseline.mean_carbon_t
    }
}

fn per_technology() -> BTreeMap<Technology, f64> {
    Technology::ALL.iter().map(|&t| (t, 0.0)).collect()
}

fn settlement_price(d: &Dispatch, voll: f64) -> f64 {
    if d.unserved_mw > 0.0 {
        voll
    } else {
        d.clearing_price
    }
}

/// Mutable market state: GenCos, their fleets and observed carbon prices.
#[derive(Debug, Clone)]
pub struct Market<'a> {
    pub scenario: &'a Scenario,
    pub gencos: Vec<GenCo>,
    next_id: usize,
    carbon_observed: Vec<(i32, f64)>,
}

impl<'a> Market<'a> {
    pub fn new(scenario: &'a Scenario) -> Result<Self, MarketError> {
        scenario.validate()?;
        let mut gencos: Vec<GenCo> = scenario
            .gencos
            .iter()
            .map(|g| GenCo {
                id: g.id.clone(),
                cash_cents: to_cents(g.cash),
                discount_rate: g.discount_rate,
                portfolio: Vec::new(),
            })
            .collect();
        for (id, p) in scenario.plants.iter().enumerate() {
            let owner = scenario.gencos.iter().position(|g| g.id == p.owner).expect("validated owner");
            gencos[owner].portfolio.push(Plant { id, owner, spec: p.spec.clone() });
        }
        let carbon_observed =
            scenario.carbon.history_per_tonne.0.iter().copied().filter(|&(y, _)| y < scenario.start_year).collect();
        Ok(Self { scenario, gencos, next_id: scenario.plants.len(), carbon_observed })
    }

    /// Every plant in every portfolio, by id.
    pub fn plants(&self) -> Vec<&Plant> {
        let mut v: Vec<&Plant> = self.gencos.iter().flat_map(|g| &g.portfolio).collect();
        v.sort_by_key(|p| p.id);
        v
    }

    /// Carbon prices the GenCos have seen so far.
    pub fn carbon_observed(&self) -> &[(i32, f64)] {
        &self.carbon_observed
    }

    fn plant_srmc(&self, spec: &PowerPlantSpec, year: i32, carbon: f64) -> Result<f64, MarketError> {
        srmc(spec, spec.fuel.and_then(|f| self.scenario.fuel_price(f, year)), carbon)
    }

    fn value_of_lost_load(&self, year: i32, carbon: f64) -> Result<f64, MarketError> {
        if let Some(v) = self.scenario.economics.value_of_lost_load_per_mwh {
            return Ok(v);
        }
        let mut max = 0.0f64;
        for spec in self.plants().into_iter().map(|p| &p.spec).chain(&self.scenario.candidates) {
            max = max.max(self.plant_srmc(spec, year, carbon)?);
        }
        Ok(VOLL_MULTIPLE * max)
    }

    fn available_mw(&self, spec: &PowerPlantSpec, day: usize, hour: usize) -> f64 {
        quantize_mw(spec.capacity_mw * self.scenario.representative_days[day].capacity_factor(spec.technology, hour))
    }

    /// Cashflows of building `candidate` now: `−capex·MW` in year 0, then
    /// yearly margins over its lifetime. The first `forward_horizon_years`
    /// come from a merit-order dispatch of the frozen current fleet plus the
    /// candidate under reference demand and forecast carbon prices; later
    /// years sell at the reference price's final value.
    pub fn candidate_cashflows(&self, candidate: &PowerPlantSpec, year: i32) -> Result<Vec<f64>, MarketError> {
        let sc = self.scenario;
        let trend = CarbonTrend::fit(&self.carbon_observed)?;
        let lifetime = candidate.lifetime_years;
        let horizon = sc.economics.forward_horizon_years.min(lifetime);
        let fixed = candidate.fixed_opex_per_mw_year * candidate.capacity_mw;
        let plants = self.plants();
        let mut flows = Vec::with_capacity(lifetime as usize + 1);
        flows.push(-candidate.capex_per_mw * candidate.capacity_mw);

        for t in 1..=horizon as i32 {
            let y = year + t;
            let carbon = trend.price_at(y);
            let own = self.plant_srmc(candidate, y, carbon)?;
            let fleet: Vec<&Plant> = plants.iter().copied().filter(|p| p.spec.operating_in(y)).collect();
            let mut offers = fleet
                .iter()
                .map(|p| Ok(Offer { id: p.id, srmc: self.plant_srmc(&p.spec, y, carbon)?, available_mw: 0.0 }))
                .collect::<Result<Vec<_>, MarketError>>()?;
            offers.push(Offer { id: CANDIDATE_ID, srmc: own, available_mw: 0.0 });
            let voll = self.value_of_lost_load(y, carbon)?;
            let mut margin = 0.0;
            for (d, day) in sc.representative_days.iter().enumerate() {
                for h in 0..SEGMENTS_PER_DAY {
                    for (o, p) in offers.iter_mut().zip(&fleet) {
                        o.available_mw = self.available_mw(&p.spec, d, h);
                    }
                    offers.last_mut().expect("candidate offer").available_mw = self.available_mw(candidate, d, h);
                    let disp = merit_order_dispatch(&offers, quantize_mw(sc.demand_mw(d, h, y)));
                    let price = settlement_price(&disp, voll);
                    let q = disp.dispatch_mw[offers.len() - 1];
                    margin += (price - own).max(0.0) * q * day.weight_days;
                }
            }
            flows.push(margin - fixed);
        }

        if lifetime > horizon {
            let y = year + horizon as i32;
            let own = self.plant_srmc(candidate, y, trend.price_at(y))?;
            let price = sc.economics.reference_price_per_mwh.last_value();
            let mut margin = 0.0;
            for (d, day) in sc.representative_days.iter().enumerate() {
                for h in 0..SEGMENTS_PER_DAY {
                    margin += (price - own).max(0.0) * self.available_mw(candidate, d, h) * day.weight_days;
                }
            }
            flows.extend(std::iter::repeat_n(margin - fixed, (lifetime - horizon) as usize));
        }
        Ok(flows)
    }

    pub fn expected_plant_npv(
        &self,
        candidate: &PowerPlantSpec,
        year: i32,
        discount_rate: f64,
    ) -> Result<f64, MarketError> {
        npv(&self.candidate_cashflows(candidate, year)?, discount_rate)
    }

    /// GenCos in a shuffled order each consider every candidate and build
    /// the best one when its NPV is positive and they can pay for it.
    pub fn investment_step(&mut self, year: i32, rng: &mut StreamRng) -> Result<Vec<Investment>, MarketError> {
        let mut order: Vec<usize> = (0..self.gencos.len()).collect();
        order.shuffle(rng);
        let candidates = &self.scenario.candidates;
        let mut flows: Option<Vec<Vec<f64>>> = None;
        let mut made = Vec::new();
        for g in order {
            if flows.is_none() {
                flows = Some(candidates.iter().map(|c| self.candidate_cashflows(c, year)).collect::<Result<_, _>>()?);
            }
            let rate = self.gencos[g].discount_rate;
            let mut best: Option<(usize, f64)> = None;
            for (i, f) in flows.as_ref().expect("just filled").iter().enumerate() {
                let v = npv(f, rate)?;
                let better = match best {
                    None => true,
                    Some((j, bv)) => v > bv || (v == bv && candidates[i].technology < candidates[j].technology),
                };
                if better {
                    best = Some((i, v));
                }
            }
            let Some((i, value)) = best else { continue };
            let spec = &candidates[i];
            let capex_cents = to_cents(spec.capex_per_mw * spec.capacity_mw);
            if !(value > 0.0) || self.gencos[g].cash_cents < capex_cents {
                continue;
            }
            let mut spec = spec.clone();
            spec.commission_year = year + self.scenario.construction_delay(spec.technology) as i32;
            let plant = Plant { id: self.next_id, owner: g, spec };
            self.next_id += 1;
            made.push(Investment {
                year,
                genco: self.gencos[g].id.clone(),
                plant_id: plant.id,
                technology: plant.spec.technology,
                capacity_mw: plant.spec.capacity_mw,
                npv: value,
                capex_cents,
                commission_year: plant.spec.commission_year,
            });
            self.gencos[g].cash_cents -= capex_cents;
            self.gencos[g].portfolio.push(plant);
            flows = None;
        }
        Ok(made)
    }

    fn retire(&mut self, year: i32) -> Vec<Retirement> {
        let mut out = Vec::new();
        for g in &mut self.gencos {
            let id = g.id.clone();
            g.portfolio.retain(|p| {
                let keep = p.spec.end_year() >= year;
                if !keep {
                    out.push(Retirement {
                        year,
                        genco: id.clone(),
                        plant_id: p.id,
                        technology: p.spec.technology,
                        capacity_mw: p.spec.capacity_mw,
                    });
                }
                keep
            });
        }
        out.sort_by_key(|r| r.plant_id);
        out
    }

    /// Retire, clear every segment, settle cash, then invest.
    pub fn step_year(
        &mut self,
        year: i32,
        perturbation: &Perturbation,
        demand_rng: &mut StreamRng,
        invest_rng: &mut StreamRng,
    ) -> Result<YearRecord, MarketError> {
        let sc = self.scenario;
        let retirements = self.retire(year);
        let cash_start_cents: Vec<i64> = self.gencos.iter().map(|g| g.cash_cents).collect();
        let carbon_price = sc.carbon.curve_per_tonne.at(year);
        let voll = self.value_of_lost_load(year, carbon_price)?;

        let operating: Vec<Plant> = self.plants().into_iter().filter(|p| p.spec.operating_in(year)).cloned().collect();
        let mut offers = operating
            .iter()
            .map(|p| Ok(Offer { id: p.id, srmc: self.plant_srmc(&p.spec, year, carbon_price)?, available_mw: 0.0 }))
            .collect::<Result<Vec<_>, MarketError>>()?;
        let mut mwh = vec![0.0; operating.len()];
        let mut avail_mwh = vec![0.0; operating.len()];
        let mut revenue = vec![0.0; operating.len()];
        let mut segments = Vec::with_capacity(sc.representative_days.len() * SEGMENTS_PER_DAY);
        let mut unserved_mwh = 0.0;
        for (d, day) in sc.representative_days.iter().enumerate() {
            for h in 0..SEGMENTS_PER_DAY {
                for (o, p) in offers.iter_mut().zip(&operating) {
                    o.available_mw = self.available_mw(&p.spec, d, h);
                }
                let base = sc.demand_mw(d, h, year);
                let (perturbed, draw) = perturb_demand(base, perturbation, demand_rng);
                let demand = quantize_mw(perturbed);
                let disp = merit_order_dispatch(&offers, demand);
                let price = settlement_price(&disp, voll);
                for i in 0..operating.len() {
                    mwh[i] += disp.dispatch_mw[i] * day.weight_days;
                    avail_mwh[i] += offers[i].available_mw * day.weight_days;
                    revenue[i] += price * disp.dispatch_mw[i] * day.weight_days;
                }
                unserved_mwh += disp.unserved_mw * day.weight_days;
                segments.push(SegmentRecord {
                    day: d,
                    hour: h,
                    base_demand_mw: base,
                    draw_mw: draw,
                    demand_mw: demand,
                    dispatched_mw: disp.dispatched_mw(),
                    unserved_mw: disp.unserved_mw,
                    clearing_price: disp.clearing_price,
                    settlement_price: price,
                });
            }
        }

        let mut plants = Vec::with_capacity(operating.len());
        let (mut revenue_cents, mut cost_cents) = (0i64, 0i64);
        for (i, p) in operating.iter().enumerate() {
            let s = &p.spec;
            let fuel_cost = match (s.fuel, s.efficiency) {
                (Some(f), Some(eff)) => mwh[i] / eff * sc.fuel_price(f, year).expect("validated fuel"),
                _ => 0.0,
            };
            let carbon_t = mwh[i] * s.carbon_intensity_t_per_mwh;
            let py = PlantYear {
                plant_id: p.id,
                genco: self.gencos[p.owner].id.clone(),
                technology: s.technology,
                capacity_mw: s.capacity_mw,
                carbon_intensity_t_per_mwh: s.carbon_intensity_t_per_mwh,
                srmc: offers[i].srmc,
                dispatch_mwh: mwh[i],
                available_mwh: avail_mwh[i],
                carbon_t,
                revenue_cents: to_cents(revenue[i]),
                fuel_cents: to_cents(fuel_cost),
                carbon_cents: to_cents(carbon_t * carbon_price),
                opex_cents: to_cents(mwh[i] * s.variable_opex_per_mwh + s.capacity_mw * s.fixed_opex_per_mw_year),
            };
            let cost = py.fuel_cents + py.carbon_cents + py.opex_cents;
            self.gencos[p.owner].cash_cents += py.revenue_cents - cost;
            revenue_cents += py.revenue_cents;
            cost_cents += cost;
            plants.push(py);
        }

        let carbon_t = plants.iter().map(|p| p.carbon_t).sum();
        let mut dispatch_mwh = per_technology();
        let mut available = per_technology();
        let mut capacity = per_technology();
        for p in &plants {
            *dispatch_mwh.get_mut(&p.technology).expect("all technologies") += p.dispatch_mwh;
            *available.get_mut(&p.technology).expect("all technologies") += p.available_mwh;
            *capacity.get_mut(&p.technology).expect("all technologies") += p.capacity_mw;
        }

        self.carbon_observed.push((year, carbon_price));
        let investments = self.investment_step(year, invest_rng)?;
        let capex_cents = investments.iter().map(|i| i.capex_cents).sum();
        Ok(YearRecord {
            year,
            carbon_price,
            value_of_lost_load: voll,
            segments,
            plants,
            dispatch_mwh,
            available_mwh: available,
            capacity_mw: capacity,
            carbon_t,
            unserved_mwh,
            investments,
            retirements,
            revenue_cents,
            cost_cents,
            capex_cents,
            cash_start_cents,
            cash_end_cents: self.gencos.iter().map(|g| g.cash_cents).collect(),
        })
    }
}

/// Runs the yearly loop from `start_year` to `end_year` inclusive. The
/// result is a pure function of the arguments.
pub fn run_simulation(
    scenario: &Scenario,
    perturbation: &Perturbation,
    seed: u64,
) -> Result<SimulationResult, MarketError> {
    let mut market = Market::new(scenario)?;
    let base = stream_seed(seed, streams::SIMULATE);
    let mut demand_rng = stream(base, "demand");
    let mut invest_rng = stream(base, "invest");
    let years = (scenario.start_year..=scenario.end_year)
        .map(|y| market.step_year(y, perturbation, &mut demand_rng, &mut invest_rng))
        .collect::<Result<Vec<_>, _>>()?;

    let n = years.len() as f64;
    let mut mean_dispatch_mwh = per_technology();
    let mut invested_mw = per_technology();
    for y in &years {
        for (t, v) in &y.dispatch_mwh {
            *mean_dispatch_mwh.get_mut(t).expect("all technologies") += v / n;
        }
        for i in &y.investments {
            *invested_mw.get_mut(&i.technology).expect("all technologies") += i.capacity_mw;
        }
    }
    let mean_carbon_t = years.iter().map(|y| y.carbon_t).sum::<f64>() / n;
    let unserved_mwh = years.iter().map(|y| y.unserved_mwh).sum();
    Ok(SimulationResult { seed, years, mean_dispatch_mwh, invested_mw, mean_carbon_t, unserved_mwh })
}
