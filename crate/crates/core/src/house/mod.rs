//! House-level scheduling.
//!
//! A home chooses appliance placements (integer) and battery dispatch (continuous,
//! with a per-step charge/discharge mode bit) to minimise its net energy cost under
//! the utility tariff and, when offered, a peer-to-peer price. The integer part is
//! searched best-first by [`solve_house`]; [`brute_force_house`] enumerates it
//! exhaustively and serves as the oracle for small instances.

mod dispatch;
mod search;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::devices::{DeviceError, HomeSpec};
use crate::model::{ModelError, TariffSchedule, TimeGrid, TimeSeries};

pub use dispatch::{exchange_cost, optimal_dispatch, Dispatch, Mode, StepPrices, Storage};
pub use search::{brute_force_house, solve_house, MAX_ORACLE_BINARIES};

/// Two costs closer than this are treated as ties.
pub const COST_TOLERANCE: f64 = 1e-9;
/// Power-balance tolerance for reported schedules (kW).
pub const BALANCE_TOLERANCE_KW: f64 = 1e-9;
/// Price of unserved energy for an islanded home with no peer market ($/kWh).
const SHORTFALL_PENALTY: f64 = 1e4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HouseError {
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("home `{home}` is infeasible: {constraint}")]
    Infeasible { home: String, constraint: String },
    #[error("{count} binaries exceed the brute-force limit of {max}")]
    TooManyBinaries { count: usize, max: usize },
    #[error("price {price} at step {step} is outside the acceptable band [{low}, {high}]")]
    RejectedPrice {
        step: usize,
        price: f64,
        low: f64,
        high: f64,
    },
    #[error("initial state of charge {soc_kwh} kWh is outside the battery range")]
    InitialSoc { soc_kwh: f64 },
}

/// Everything one home needs to schedule a horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HouseProblem {
    pub home: HomeSpec,
    pub tariff: TariffSchedule,
    pub p2p_price: Option<TimeSeries>,
    /// No utility exchange when set.
    pub islanded: bool,
    pub initial_soc_kwh: f64,
    /// Optional $ per kWh of appliance energy placed at each step.
    pub discomfort: Option<TimeSeries>,
}

impl HouseProblem {
    pub fn new(home: HomeSpec, tariff: TariffSchedule) -> Self {
        Self {
            home,
            tariff,
            p2p_price: None,
            islanded: false,
            initial_soc_kwh: 0.0,
            discomfort: None,
        }
    }

    pub fn with_p2p_price(mut self, price: TimeSeries) -> Self {
        self.p2p_price = Some(price);
        self
    }

    pub fn grid(&self) -> &TimeGrid {
        self.home.fixed_load.grid()
    }

    /// Integer decision count: appliance indicators plus one mode bit per step with storage.
    pub fn binary_count(&self) -> usize {
        let appliances: usize = self.home.appliances.iter().map(|a| a.binary_count()).sum();
        let modes = if self.home.bess.is_some() {
            self.grid().n_steps()
        } else {
            0
        };
        appliances + modes
    }

    pub fn validate(&self) -> Result<(), HouseError> {
        self.home.validate()?;
        let grid = self.grid();
        if self.tariff.grid() != grid {
            return Err(ModelError::GridMismatch.into());
        }
        for series in [&self.p2p_price, &self.discomfort].into_iter().flatten() {
            if series.grid() != grid {
                return Err(ModelError::GridMismatch.into());
            }
        }
        let cap = self.home.bess.as_ref().map_or(0.0, |b| b.capacity_kwh);
        if !(0.0..=cap).contains(&self.initial_soc_kwh) {
            return Err(HouseError::InitialSoc {
                soc_kwh: self.initial_soc_kwh,
            });
        }
        Ok(())
    }
}

/// Decisions and resulting exchanges, one entry per step unless noted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    /// Placement chosen for each appliance, as an index into `Appliance::placements`.
    pub appliance_choice: Vec<usize>,
    /// First on-step of each appliance.
    pub appliance_starts: Vec<usize>,
    /// On-steps of each appliance.
    pub appliance_steps: Vec<Vec<usize>>,
    /// Battery command: charging input (> 0) or drawn power (< 0), kW.
    pub bess_commands: Vec<f64>,
    pub soc_kwh: Vec<f64>,
    /// Utility exchange, import > 0 (kW).
    pub utility_exchange: Vec<f64>,
    /// Peer-to-peer exchange, import > 0 (kW).
    pub p2p_exchange: Vec<f64>,
    /// Surplus with no outlet (islanded homes only).
    pub curtailed_kw: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HouseResponse {
    pub home_id: String,
    pub schedule: Schedule,
    /// Net export to the DC bus (kW): `-(utility_exchange + p2p_exchange)`.
    pub injection: TimeSeries,
    /// Exchange the home is indifferent between routing to peers or the utility
    /// (signed like `p2p_exchange`). Currently routed to the utility.
    pub p2p_flexible_kw: Vec<f64>,
    pub cost: f64,
    /// Marginal cost of one more kWh of demand at each step ($/kWh).
    pub marginal_value: TimeSeries,
    pub solar_kw: TimeSeries,
    /// Fixed load plus scheduled appliances.
    pub load_kw: TimeSeries,
}

impl HouseResponse {
    /// Worst power-balance residual over the horizon (kW).
    pub fn balance_residual(&self, discharge_eff: f64) -> f64 {
        let s = &self.schedule;
        (0..self.injection.len())
            .map(|t| {
                let cmd = s.bess_commands[t];
                let (charge, delivered) = if cmd >= 0.0 {
                    (cmd, 0.0)
                } else {
                    (0.0, -cmd * discharge_eff)
                };
                let supply = self.solar_kw.get(t) + delivered + s.utility_exchange[t] + s.p2p_exchange[t];
                let demand = self.load_kw.get(t) + charge + s.curtailed_kw[t];
                (supply - demand).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Net import over both channels (kW).
    pub fn net_import(&self, t: usize) -> f64 {
        self.schedule.utility_exchange[t] + self.schedule.p2p_exchange[t]
    }
}

/// Per-step external options after comparing the utility with the peer price.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Outlet {
    pub buy: f64,
    pub sell: f64,
    pub buy_p2p: bool,
    pub sell_p2p: bool,
    pub buy_indifferent: bool,
    pub sell_indifferent: bool,
    /// Nothing can supply a deficit (islanded, no peers).
    pub no_source: bool,
    /// Surplus is curtailed rather than exported.
    pub curtail: bool,
}

fn same_price(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12
}

impl Outlet {
    fn at(problem: &HouseProblem, t: usize) -> Self {
        let import = problem.tariff.import_rates()[t];
        let export = problem.tariff.export_rates()[t];
        let p2p = problem.p2p_price.as_ref().map(|p| p.get(t));
        match (problem.islanded, p2p) {
            (false, None) => Self {
                buy: import,
                sell: export,
                buy_p2p: false,
                sell_p2p: false,
                buy_indifferent: false,
                sell_indifferent: false,
                no_source: false,
                curtail: false,
            },
            (false, Some(p)) => Self {
                // ties go to the utility
                buy: import.min(p),
                sell: export.max(p),
                buy_p2p: p < import && !same_price(p, import),
                sell_p2p: p > export && !same_price(p, export),
                buy_indifferent: same_price(p, import),
                sell_indifferent: same_price(p, export),
                no_source: false,
                curtail: false,
            },
            (true, Some(p)) => Self {
                buy: p,
                sell: p.max(0.0),
                buy_p2p: true,
                sell_p2p: p > 0.0,
                buy_indifferent: false,
                sell_indifferent: same_price(p, 0.0),
                no_source: false,
                curtail: !(p > 0.0),
            },
            (true, None) => Self {
                buy: SHORTFALL_PENALTY,
                sell: 0.0,
                buy_p2p: false,
                sell_p2p: false,
                buy_indifferent: false,
                sell_indifferent: false,
                no_source: true,
                curtail: true,
            },
        }
    }
}

/// Problem data precomputed once per solve.
pub(crate) struct Prepared<'a> {
    pub problem: &'a HouseProblem,
    pub step_hours: f64,
    pub solar: TimeSeries,
    pub outlets: Vec<Outlet>,
    pub placements: Vec<Vec<Vec<usize>>>,
    pub storage: Option<Storage>,
    pub discharge_eff: f64,
}

impl<'a> Prepared<'a> {
    pub fn new(problem: &'a HouseProblem) -> Result<Self, HouseError> {
        problem.validate()?;
        let grid = *problem.grid();
        let solar = problem.home.solar_output()?;
        let outlets = (0..grid.n_steps()).map(|t| Outlet::at(problem, t)).collect();
        let placements = problem.home.appliances.iter().map(|a| a.placements()).collect();
        let storage = problem.home.bess.as_ref().map(|b| Storage {
            capacity_kwh: b.capacity_kwh,
            power_kw: b.continuous_power_kw,
            charge_eff: b.charge_efficiency(),
            discharge_eff: b.discharge_efficiency(),
            initial_soc_kwh: problem.initial_soc_kwh,
        });
        Ok(Self {
            problem,
            step_hours: grid.step_hours(),
            solar,
            outlets,
            placements,
            storage,
            discharge_eff: storage.map_or(1.0, |s| s.discharge_eff),
        })
    }

    pub fn n_steps(&self) -> usize {
        self.outlets.len()
    }

    /// Fixed load plus the appliances placed so far.
    pub fn consumption(&self, choice: &[usize]) -> Vec<f64> {
        let mut load = self.problem.home.fixed_load.values().to_vec();
        for (a, &c) in choice.iter().enumerate() {
            let power = self.problem.home.appliances[a].power_kw;
            for &t in &self.placements[a][c] {
                load[t] += power;
            }
        }
        load
    }

    /// First step where the partial placement breaks the service limit.
    pub fn service_violation(&self, load: &[f64]) -> Option<usize> {
        let limit = self.problem.home.service_limit_kw;
        load.iter().position(|&l| l > limit + BALANCE_TOLERANCE_KW)
    }

    pub fn step_prices(&self, load: &[f64]) -> Vec<StepPrices> {
        let limit = self.problem.home.service_limit_kw;
        (0..self.n_steps())
            .map(|t| StepPrices {
                net_kw: load[t] - self.solar.get(t),
                buy: self.outlets[t].buy,
                sell: self.outlets[t].sell,
                charge_limit_kw: (limit - load[t]).max(0.0),
            })
            .collect()
    }

    /// Discomfort charge for one appliance placement.
    pub fn placement_penalty(&self, appliance: usize, placement: usize) -> f64 {
        let Some(disc) = &self.problem.discomfort else {
            return 0.0;
        };
        let power = self.problem.home.appliances[appliance].power_kw;
        self.placements[appliance][placement]
            .iter()
            .map(|&t| disc.get(t) * power * self.step_hours)
            .sum()
    }

    /// Cheapest conceivable cost of an appliance not yet placed: its energy valued at
    /// the sell price, which is the lowest marginal cost any step can offer.
    pub fn appliance_lower_bound(&self, appliance: usize) -> f64 {
        let power = self.problem.home.appliances[appliance].power_kw;
        (0..self.placements[appliance].len())
            .map(|p| {
                self.placements[appliance][p]
                    .iter()
                    .map(|&t| self.outlets[t].sell * power * self.step_hours)
                    .sum::<f64>()
                    + self.placement_penalty(appliance, p)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Turns a full placement plus dispatch into a response, costed from the
    /// schedule itself.
    pub fn response(&self, choice: &[usize], load: &[f64], dispatch: &Dispatch) -> Candidate {
        let h = self.step_hours;
        let n = self.n_steps();
        let mut utility = vec![0.0; n];
        let mut p2p = vec![0.0; n];
        let mut curtailed = vec![0.0; n];
        let mut flexible = vec![0.0; n];
        let mut marginal = vec![0.0; n];
        let mut cost = 0.0;
        let mut shortfall: Option<usize> = None;
        let mut commands = vec![0.0; n];
        for t in 0..n {
            let o = &self.outlets[t];
            let (c, d) = (dispatch.charge_kw[t], dispatch.draw_kw[t]);
            commands[t] = if d > c { -d } else { c };
            let mut g = load[t] - self.solar.get(t) + c - self.discharge_eff * d;
            if g.abs() < 1e-12 {
                g = 0.0;
            }
            if g > 0.0 {
                if o.no_source {
                    if g > BALANCE_TOLERANCE_KW && shortfall.is_none() {
                        shortfall = Some(t);
                    }
                    utility[t] = g;
                } else if o.buy_p2p {
                    p2p[t] = g;
                } else {
                    utility[t] = g;
                    if o.buy_indifferent {
                        flexible[t] = g;
                    }
                }
                cost += o.buy * g * h;
                marginal[t] = o.buy;
            } else if g < 0.0 {
                if o.sell_p2p {
                    p2p[t] = g;
                } else if o.curtail {
                    curtailed[t] = -g;
                } else {
                    utility[t] = g;
                }
                if o.sell_indifferent {
                    flexible[t] = g;
                }
                cost += o.sell * g * h;
                marginal[t] = o.sell;
            } else {
                marginal[t] = o.sell;
            }
        }
        cost += choice
            .iter()
            .enumerate()
            .map(|(a, &p)| self.placement_penalty(a, p))
            .sum::<f64>();
        let problem = self.problem;
        let grid = *problem.grid();
        let injection: Vec<f64> = (0..n).map(|t| -(utility[t] + p2p[t])).collect();
        let appliances = &problem.home.appliances;
        let response = HouseResponse {
            home_id: problem.home.id.clone(),
            schedule: Schedule {
                appliance_choice: choice.to_vec(),
                appliance_starts: choice
                    .iter()
                    .enumerate()
                    .map(|(a, &p)| self.placements[a][p][0])
                    .collect(),
                appliance_steps: choice
                    .iter()
                    .enumerate()
                    .map(|(a, &p)| self.placements[a][p].clone())
                    .collect(),
                bess_commands: commands,
                soc_kwh: dispatch.soc_kwh.clone(),
                utility_exchange: utility,
                p2p_exchange: p2p,
                curtailed_kw: curtailed,
            },
            injection: TimeSeries::new(grid, injection).expect("finite injection"),
            p2p_flexible_kw: flexible,
            cost,
            marginal_value: TimeSeries::new(grid, marginal).expect("finite prices"),
            solar_kw: self.solar.clone(),
            load_kw: TimeSeries::new(grid, load.to_vec()).expect("finite load"),
        };
        debug_assert_eq!(appliances.len(), choice.len());
        Candidate { response, shortfall }
    }
}

pub(crate) struct Candidate {
    pub response: HouseResponse,
    /// First step an islanded home could not cover.
    pub shortfall: Option<usize>,
}

/// Schedules the home against a peer price, which must lie inside the tariff band.
pub fn respond_to_price(problem: &HouseProblem, p2p_price: &TimeSeries) -> Result<HouseResponse, HouseError> {
    if p2p_price.grid() != problem.grid() {
        return Err(ModelError::GridMismatch.into());
    }
    check_band(&problem.tariff, p2p_price)?;
    let priced = HouseProblem {
        p2p_price: Some(p2p_price.clone()),
        ..problem.clone()
    };
    solve_house(&priced)
}

pub(crate) fn check_band(tariff: &TariffSchedule, price: &TimeSeries) -> Result<(), HouseError> {
    for (step, &p) in price.values().iter().enumerate() {
        let (low, high) = (tariff.export_rates()[step], tariff.import_rates()[step]);
        if p < low - 1e-12 || p > high + 1e-12 {
            return Err(HouseError::RejectedPrice {
                step,
                price: p,
                low,
                high,
            });
        }
    }
    Ok(())
}
