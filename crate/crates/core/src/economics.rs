//! Cashflow analysis and the three residential case studies.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::devices::{bess_charge_time, bess_step, solar_profile, BessSpec, BessState, DeviceError, SolarArraySpec};
use crate::model::{integrate_energy, TimeGrid};

/// Relative slack when comparing cumulative benefit against cost.
const PAYBACK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EconomicsError {
    #[error("discount rate {0} must be > -1")]
    RateBelowMinusOne(f64),
    #[error("discount rate {0} must be >= 0 for payback")]
    NegativeRate(f64),
    #[error("annual benefit {0} is not positive: the investment never pays back")]
    NoPayback(f64),
    #[error("invalid cashflow schedule: {0}")]
    InvalidSchedule(String),
    #[error("unknown case id {0}; expected 1, 2 or 3")]
    UnknownCase(u8),
    #[error("unknown parameter `{key}` for case {case}; known: {known}")]
    UnknownParameter { case: u8, key: String, known: String },
    #[error("parameter `{key}`: cannot parse `{value}` as a number")]
    BadValue { key: String, value: String },
    #[error("parameter `{key}` = {value}: {reason}")]
    OutOfRange {
        key: String,
        value: f64,
        reason: &'static str,
    },
    #[error(transparent)]
    Device(#[from] DeviceError),
}

/// Σ cashflow_t / (1+rate)^t, year 0 first.
pub fn npv(cashflows: &[f64], rate: f64) -> Result<f64, EconomicsError> {
    if !(rate > -1.0) {
        return Err(EconomicsError::RateBelowMinusOne(rate));
    }
    let base = 1.0 + rate;
    Ok(cashflows
        .iter()
        .enumerate()
        .map(|(t, cf)| cf / base.powi(t as i32))
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AnnualBenefit {
    Constant(f64),
    PerYear(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CashflowSchedule {
    pub initial_cost: f64,
    pub annual_benefit: AnnualBenefit,
    pub horizon_years: u32,
}

impl CashflowSchedule {
    pub fn constant(initial_cost: f64, annual_benefit: f64, horizon_years: u32) -> Self {
        Self {
            initial_cost,
            annual_benefit: AnnualBenefit::Constant(annual_benefit),
            horizon_years,
        }
    }

    pub fn validate(&self) -> Result<(), EconomicsError> {
        if !(self.initial_cost >= 0.0) || !self.initial_cost.is_finite() {
            return Err(EconomicsError::InvalidSchedule(format!(
                "initial cost {} must be finite and >= 0",
                self.initial_cost
            )));
        }
        if self.horizon_years == 0 {
            return Err(EconomicsError::InvalidSchedule("horizon must be >= 1 year".into()));
        }
        match &self.annual_benefit {
            AnnualBenefit::Constant(b) if !b.is_finite() => {
                Err(EconomicsError::InvalidSchedule(format!("benefit {b} is not finite")))
            }
            AnnualBenefit::PerYear(list) if list.len() != self.horizon_years as usize => {
                Err(EconomicsError::InvalidSchedule(format!(
                    "{} yearly benefits for a {}-year horizon",
                    list.len(),
                    self.horizon_years
                )))
            }
            AnnualBenefit::PerYear(list) if list.iter().any(|b| !b.is_finite()) => {
                Err(EconomicsError::InvalidSchedule("yearly benefits must be finite".into()))
            }
            _ => Ok(()),
        }
    }

    /// Benefit at the end of year `t` (1-based).
    pub fn benefit(&self, t: u32) -> f64 {
        match &self.annual_benefit {
            AnnualBenefit::Constant(b) => *b,
            AnnualBenefit::PerYear(list) => list.get(t as usize - 1).copied().unwrap_or(0.0),
        }
    }

    /// Year-0 cost followed by the benefits over the horizon.
    pub fn cashflows(&self) -> Vec<f64> {
        std::iter::once(-self.initial_cost)
            .chain((1..=self.horizon_years).map(|t| self.benefit(t)))
            .collect()
    }
}

/// Years until undiscounted benefits cover the cost (fractional).
///
/// Constant benefits give `cost / benefit` regardless of horizon; yearly lists are
/// interpolated within the crossing year.
pub fn simple_payback(schedule: &CashflowSchedule) -> Result<f64, EconomicsError> {
    schedule.validate()?;
    let cost = schedule.initial_cost;
    if cost == 0.0 {
        return Ok(0.0);
    }
    match &schedule.annual_benefit {
        AnnualBenefit::Constant(b) if *b > 0.0 => Ok(cost / b),
        AnnualBenefit::Constant(b) => Err(EconomicsError::NoPayback(*b)),
        AnnualBenefit::PerYear(list) => {
            let mut cumulative = 0.0;
            for (i, &b) in list.iter().enumerate() {
                if b > 0.0 && cumulative + b >= cost {
                    return Ok(i as f64 + (cost - cumulative) / b);
                }
                cumulative += b;
            }
            Err(EconomicsError::NoPayback(list.iter().sum::<f64>() / list.len() as f64))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Payback {
    Years(u32),
    NotReached,
}

impl Payback {
    pub fn years(self) -> Option<u32> {
        match self {
            Self::Years(n) => Some(n),
            Self::NotReached => None,
        }
    }
}

impl std::fmt::Display for Payback {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Years(n) => write!(f, "{n}"),
            Self::NotReached => f.write_str("not reached"),
        }
    }
}

fn covers(cumulative: f64, cost: f64) -> bool {
    cumulative >= cost * (1.0 - PAYBACK_TOLERANCE)
}

/// Smallest whole year `n ≤ horizon` whose cumulative discounted benefit covers the cost.
pub fn discounted_payback(schedule: &CashflowSchedule, rate: f64) -> Result<Payback, EconomicsError> {
    schedule.validate()?;
    if !(rate >= 0.0) {
        return Err(EconomicsError::NegativeRate(rate));
    }
    let cost = schedule.initial_cost;
    if cost == 0.0 {
        return Ok(Payback::Years(0));
    }
    let mut cumulative = 0.0;
    for t in 1..=schedule.horizon_years {
        cumulative += schedule.benefit(t) / (1.0 + rate).powi(t as i32);
        if covers(cumulative, cost) {
            return Ok(Payback::Years(t));
        }
    }
    Ok(Payback::NotReached)
}

/// Discounted payback interpolated linearly inside the crossing year.
pub fn discounted_payback_exact(schedule: &CashflowSchedule, rate: f64) -> Result<Option<f64>, EconomicsError> {
    let Payback::Years(n) = discounted_payback(schedule, rate)? else {
        return Ok(None);
    };
    if n == 0 {
        return Ok(Some(0.0));
    }
    let before: f64 = (1..n).map(|t| schedule.benefit(t) / (1.0 + rate).powi(t as i32)).sum();
    let last = schedule.benefit(n) / (1.0 + rate).powi(n as i32);
    let fraction = ((schedule.initial_cost - before) / last).clamp(0.0, 1.0);
    Ok(Some((n - 1) as f64 + fraction))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePayback {
    pub rate: f64,
    pub payback: Payback,
    /// Interpolated within the crossing year.
    pub payback_exact_years: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseStudyReport {
    pub case_id: u8,
    pub title: String,
    /// Cost shown in the summary table ($).
    pub cost: f64,
    /// Cost the paybacks are computed against ($).
    pub payback_basis_cost: f64,
    pub daily_benefit: f64,
    /// Daily benefit before any presentation rounding.
    pub computed_daily_benefit: f64,
    pub annual_benefit: f64,
    pub simple_payback_years: f64,
    pub simple_payback_days: f64,
    pub discounted: Vec<RatePayback>,
    pub goal_years: Option<f64>,
    pub goal_met: Option<bool>,
    pub assumptions: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl CaseStudyReport {
    pub fn discount_rates(&self) -> Vec<f64> {
        self.discounted.iter().map(|d| d.rate).collect()
    }

    pub fn discounted_payback_years(&self) -> Vec<Payback> {
        self.discounted.iter().map(|d| d.payback).collect()
    }
}

type Params = BTreeMap<&'static str, f64>;

fn defaults(case: u8) -> Result<Params, EconomicsError> {
    let solar: [(&'static str, f64); 10] = [
        ("array_kw", 5.0),
        ("cost_per_watt", 2.76),
        ("tax_credit", 0.26),
        ("daylight_hours", 12.0),
        ("angle_factor", 0.63),
        ("peak_hour", 15.0),
        ("energy_rate", 0.24),
        ("sunny_days", 250.0),
        ("outage_days", 0.0),
        ("round_to_half_dollar", 0.0),
    ];
    let storage: [(&'static str, f64); 5] = [
        ("capacity_kwh", 13.5),
        ("power_kw", 5.6),
        ("round_trip_efficiency", 0.85),
        ("arbitrage_rate", 0.30),
        ("trading_days", 365.0),
    ];
    let mut p: Params = BTreeMap::new();
    match case {
        1 => {
            p.extend(solar);
            p.extend([("discount_rate", 0.08), ("horizon_years", 25.0)]);
        }
        2 => {
            p.extend(solar);
            p.extend(storage);
            p.extend([
                ("device_cost", 8500.0),
                ("hardware_cost", 1000.0),
                ("installed_cost", 12000.0),
                ("discount_rate_low", 0.05),
                ("discount_rate_high", 0.08),
                ("horizon_years", 30.0),
                ("round_to_half_dollar", 1.0),
            ]);
        }
        3 => {
            p.extend(solar);
            p.extend(storage);
            p.extend([
                ("n_homes", 10.0),
                ("storage_kwh_per_home", 13.5),
                ("storage_cost_per_kwh", 12000.0 / 13.5),
                ("scale_discount", 0.25),
                ("regulation_revenue", 0.0),
                ("discount_rate", 0.05),
                ("goal_years", 6.0),
                ("horizon_years", 30.0),
            ]);
        }
        other => return Err(EconomicsError::UnknownCase(other)),
    }
    Ok(p)
}

fn parse_value(key: &str, value: &str) -> Result<f64, EconomicsError> {
    match value.trim() {
        "true" | "on" => Ok(1.0),
        "false" | "off" => Ok(0.0),
        v => v
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| EconomicsError::BadValue {
                key: key.to_string(),
                value: value.to_string(),
            }),
    }
}

fn apply_overrides(case: u8, params: &mut Params, overrides: &BTreeMap<String, String>) -> Result<(), EconomicsError> {
    for (key, value) in overrides {
        let Some(slot) = params.get_mut(key.as_str()) else {
            return Err(EconomicsError::UnknownParameter {
                case,
                key: key.clone(),
                known: params.keys().copied().collect::<Vec<_>>().join(", "),
            });
        };
        *slot = parse_value(key, value)?;
    }
    for (&key, &value) in params.iter() {
        let bad = |reason| {
            Err(EconomicsError::OutOfRange {
                key: key.to_string(),
                value,
                reason,
            })
        };
        match key {
            "tax_credit" | "scale_discount" | "round_to_half_dollar" if !(0.0..=1.0).contains(&value) => {
                return bad("must be in [0, 1]")
            }
            "round_trip_efficiency" if !(value > 0.0 && value <= 1.0) => return bad("must be in (0, 1]"),
            "sunny_days" | "trading_days" | "outage_days" if !(0.0..=366.0).contains(&value) => {
                return bad("must be in [0, 366]")
            }
            "horizon_years" | "n_homes" if !(value >= 1.0 && value.fract() == 0.0) => {
                return bad("must be a whole number >= 1")
            }
            k if k.starts_with("discount_rate") && !(value >= 0.0) => return bad("must be >= 0"),
            _ if value < 0.0 => return bad("must be >= 0"),
            _ => {}
        }
    }
    if params.get("outage_days") > params.get("sunny_days") {
        return Err(EconomicsError::OutOfRange {
            key: "outage_days".into(),
            value: params["outage_days"],
            reason: "cannot exceed sunny_days",
        });
    }
    Ok(())
}

/// Rounds to the nearest half dollar, as the published figures do.
fn half_dollar(x: f64) -> f64 {
    (x * 2.0).round() / 2.0
}

struct SolarCase {
    daily_energy_kwh: f64,
    daily_revenue: f64,
    net_cost: f64,
}

fn solar_case(p: &Params) -> Result<SolarCase, EconomicsError> {
    let spec = SolarArraySpec {
        peak_kw: p["array_kw"],
        daylight_hours: p["daylight_hours"],
        angle_factor: p["angle_factor"],
        peak_hour: p["peak_hour"],
        haze_factor: None,
    };
    let profile = solar_profile(&spec, &TimeGrid::hourly_day())?;
    let daily_energy_kwh = integrate_energy(&profile);
    Ok(SolarCase {
        daily_energy_kwh,
        daily_revenue: daily_energy_kwh * p["energy_rate"],
        net_cost: p["array_kw"] * 1000.0 * p["cost_per_watt"] * (1.0 - p["tax_credit"]),
    })
}

/// Energy delivered by one full charge/discharge cycle from empty, through the battery model.
fn cycle_energy(p: &Params) -> Result<(f64, f64), EconomicsError> {
    let spec = BessSpec {
        capacity_kwh: p["capacity_kwh"],
        continuous_power_kw: p["power_kw"],
        round_trip_efficiency: p["round_trip_efficiency"],
        discharge_applies_loss: true,
    };
    let hours = bess_charge_time(&spec);
    let full = bess_step(&spec, BessState::empty(), spec.continuous_power_kw, hours)?;
    let out = bess_step(&spec, full.state, -spec.continuous_power_kw, hours)?;
    Ok((hours, out.delivered_kwh))
}

fn paybacks(schedule: &CashflowSchedule, rates: &[f64]) -> Result<Vec<RatePayback>, EconomicsError> {
    rates
        .iter()
        .map(|&rate| {
            Ok(RatePayback {
                rate,
                payback: discounted_payback(schedule, rate)?,
                payback_exact_years: discounted_payback_exact(schedule, rate)?,
            })
        })
        .collect()
}

/// Builds the report for case 1 (solar), 2 (solar + home battery) or 3 (community storage).
///
/// `overrides` replace named default parameters; unknown names are rejected.
pub fn run_case_study(case_id: u8, overrides: &BTreeMap<String, String>) -> Result<CaseStudyReport, EconomicsError> {
    let mut p = defaults(case_id)?;
    apply_overrides(case_id, &mut p, overrides)?;
    let rounding = p["round_to_half_dollar"] >= 0.5;
    let horizon = p["horizon_years"] as u32;
    let solar = solar_case(&p)?;
    let producing_days = p["sunny_days"] - p["outage_days"];
    let mut assumptions: BTreeMap<String, f64> = p.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    assumptions.insert("daily_solar_energy_kwh".into(), solar.daily_energy_kwh);
    assumptions.insert("solar_net_cost".into(), solar.net_cost);
    let mut notes = Vec::new();

    let report = match case_id {
        1 => {
            let computed = solar.daily_revenue;
            let daily = if rounding { half_dollar(computed) } else { computed };
            let annual = daily * producing_days;
            let schedule = CashflowSchedule::constant(solar.net_cost, annual, horizon);
            let simple = simple_payback(&schedule)?;
            CaseStudyReport {
                case_id,
                title: "Solar panel on home".into(),
                cost: solar.net_cost,
                payback_basis_cost: solar.net_cost,
                daily_benefit: daily,
                computed_daily_benefit: computed,
                annual_benefit: annual,
                simple_payback_years: simple,
                simple_payback_days: simple * 365.0,
                discounted: paybacks(&schedule, &[p["discount_rate"]])?,
                goal_years: None,
                goal_met: None,
                assumptions,
                notes,
            }
        }
        2 => {
            let (charge_hours, delivered) = cycle_energy(&p)?;
            assumptions.insert("charge_time_hours".into(), charge_hours);
            assumptions.insert("cycle_energy_kwh".into(), delivered);
            let computed = delivered * p["arbitrage_rate"];
            let daily = if rounding { half_dollar(computed) } else { computed };
            let annual = daily * p["trading_days"];
            let cost = p["installed_cost"];
            let schedule = CashflowSchedule::constant(cost, annual, horizon);
            let simple = simple_payback(&schedule)?;
            notes.push(format!(
                "paybacks use the incremental battery cost {cost:.2} against arbitrage only; \
                 the cost column adds the solar system ({:.2})",
                solar.net_cost
            ));
            CaseStudyReport {
                case_id,
                title: "Add BESS to Case 1".into(),
                cost: solar.net_cost + cost,
                payback_basis_cost: cost,
                daily_benefit: daily,
                computed_daily_benefit: computed,
                annual_benefit: annual,
                simple_payback_years: simple,
                simple_payback_days: cost / daily,
                discounted: paybacks(&schedule, &[p["discount_rate_low"], p["discount_rate_high"]])?,
                goal_years: None,
                goal_met: None,
                assumptions,
                notes,
            }
        }
        _ => {
            let n = p["n_homes"];
            let (_, delivered) = cycle_energy(&BTreeMap::from([
                ("capacity_kwh", p["storage_kwh_per_home"]),
                ("power_kw", p["power_kw"]),
                ("round_trip_efficiency", p["round_trip_efficiency"]),
            ]))?;
            let storage_cost = n * p["storage_kwh_per_home"] * p["storage_cost_per_kwh"] * (1.0 - p["scale_discount"]);
            let cost = n * solar.net_cost + storage_cost;
            let computed = n * (solar.daily_revenue + delivered * p["arbitrage_rate"]);
            let daily = if rounding { half_dollar(computed) } else { computed };
            let annual = n * solar.daily_revenue * producing_days
                + n * delivered * p["arbitrage_rate"] * p["trading_days"]
                + p["regulation_revenue"];
            assumptions.insert("community_storage_cost".into(), storage_cost);
            let schedule = CashflowSchedule::constant(cost, annual, horizon);
            let simple = simple_payback(&schedule)?;
            let discounted = paybacks(&schedule, &[p["discount_rate"]])?;
            let goal = p["goal_years"];
            let met = discounted[0].payback.years().is_some_and(|y| (y as f64) < goal);
            notes.push(format!(
                "target: payback < {goal} years at {}%",
                p["discount_rate"] * 100.0
            ));
            CaseStudyReport {
                case_id,
                title: "Community Energy storage".into(),
                cost,
                payback_basis_cost: cost,
                daily_benefit: daily,
                computed_daily_benefit: computed,
                annual_benefit: annual,
                simple_payback_years: simple,
                simple_payback_days: simple * 365.0,
                discounted,
                goal_years: Some(goal),
                goal_met: Some(met),
                assumptions,
                notes,
            }
        }
    };
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn set(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn npv_examples() {
        assert_eq!(npv(&[-100.0, 60.0, 60.0], 0.0).unwrap(), 20.0);
        assert_abs_diff_eq!(npv(&[-100.0, 60.0, 60.0], 0.10).unwrap(), 4.1322, epsilon = 1e-4);
        let six: Vec<f64> = std::iter::once(-10212.0).chain([2250.0; 6]).collect();
        assert!(npv(&six, 0.08).unwrap() > 0.0);
        assert!(npv(&six[..6], 0.08).unwrap() < 0.0);
        assert!(npv(&[1.0], -1.0).is_err());
    }

    #[test]
    fn simple_payback_examples() {
        assert_abs_diff_eq!(
            simple_payback(&CashflowSchedule::constant(10212.0, 2250.0, 25)).unwrap(),
            4.5387,
            epsilon = 1e-4
        );
        let days = simple_payback(&CashflowSchedule::constant(12000.0, 3.50, 5000)).unwrap();
        assert_abs_diff_eq!(days, 3428.571, epsilon = 1e-3);
        assert_eq!(simple_payback(&CashflowSchedule::constant(0.0, 100.0, 1)).unwrap(), 0.0);
        assert!(matches!(
            simple_payback(&CashflowSchedule::constant(10.0, 0.0, 5)),
            Err(EconomicsError::NoPayback(_))
        ));
    }

    #[test]
    fn discounted_payback_examples() {
        let case1 = CashflowSchedule::constant(10212.0, 2250.0, 25);
        assert_eq!(discounted_payback(&case1, 0.08).unwrap(), Payback::Years(6));
        let case2 = CashflowSchedule::constant(12000.0, 1277.5, 30);
        assert_eq!(discounted_payback(&case2, 0.05).unwrap(), Payback::Years(13));
        assert_eq!(discounted_payback(&case2, 0.08).unwrap(), Payback::Years(19));
        let short = CashflowSchedule::constant(12000.0, 1277.5, 10);
        assert_eq!(discounted_payback(&short, 0.05).unwrap(), Payback::NotReached);
        assert!(discounted_payback(&case1, -0.01).is_err());
    }

    #[test]
    fn yearly_benefits() {
        let s = CashflowSchedule {
            initial_cost: 150.0,
            annual_benefit: AnnualBenefit::PerYear(vec![100.0, 100.0, 0.0]),
            horizon_years: 3,
        };
        assert_abs_diff_eq!(simple_payback(&s).unwrap(), 1.5);
        assert_eq!(discounted_payback(&s, 0.0).unwrap(), Payback::Years(2));
        assert_eq!(s.cashflows(), vec![-150.0, 100.0, 100.0, 0.0]);
    }

    #[test]
    fn case_one_defaults() {
        let r = run_case_study(1, &BTreeMap::new()).unwrap();
        assert_abs_diff_eq!(r.cost, 10212.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r.assumptions["daily_solar_energy_kwh"], 37.8, epsilon = 1e-9);
        assert_abs_diff_eq!(r.daily_benefit, 9.072, epsilon = 1e-9);
        assert_abs_diff_eq!(r.annual_benefit, r.daily_benefit * 250.0, epsilon = 1e-9);
        assert_eq!(r.discounted[0].payback, Payback::Years(6));
    }

    #[test]
    fn case_one_rounding_flag() {
        let r = run_case_study(1, &set(&[("round_to_half_dollar", "true")])).unwrap();
        assert_eq!(r.daily_benefit, 9.0);
        assert_eq!(r.annual_benefit, 2250.0);
    }

    #[test]
    fn case_one_without_sun_never_pays() {
        let err = run_case_study(1, &set(&[("sunny_days", "0")])).unwrap_err();
        assert!(matches!(err, EconomicsError::NoPayback(_)));
    }

    #[test]
    fn outage_days_cost_a_day_of_revenue_each() {
        let base = run_case_study(1, &BTreeMap::new()).unwrap();
        let out = run_case_study(1, &set(&[("outage_days", "5")])).unwrap();
        assert_abs_diff_eq!(base.annual_benefit - out.annual_benefit, 5.0 * 9.072, epsilon = 1e-9);
    }

    #[test]
    fn case_two_defaults() {
        let r = run_case_study(2, &BTreeMap::new()).unwrap();
        assert_abs_diff_eq!(r.cost, 22212.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r.computed_daily_benefit, 3.4425, epsilon = 1e-12);
        assert_eq!(r.daily_benefit, 3.5);
        assert_abs_diff_eq!(r.simple_payback_days, 3428.571, epsilon = 1e-3);
        assert_eq!(
            r.discounted_payback_years(),
            vec![Payback::Years(13), Payback::Years(19)]
        );
    }

    #[test]
    fn case_three_report() {
        let r = run_case_study(3, &BTreeMap::new()).unwrap();
        assert!(r.cost > 100_000.0);
        assert_eq!(r.goal_years, Some(6.0));
        let cheaper = run_case_study(3, &set(&[("storage_cost_per_kwh", "600")])).unwrap();
        assert!(cheaper.discounted[0].payback_exact_years < r.discounted[0].payback_exact_years);
    }

    #[test]
    fn bad_overrides() {
        assert!(matches!(
            run_case_study(1, &set(&[("sunny", "3")])),
            Err(EconomicsError::UnknownParameter { .. })
        ));
        assert!(matches!(
            run_case_study(1, &set(&[("sunny_days", "lots")])),
            Err(EconomicsError::BadValue { .. })
        ));
        assert!(matches!(
            run_case_study(1, &set(&[("tax_credit", "1.5")])),
            Err(EconomicsError::OutOfRange { .. })
        ));
        assert!(matches!(
            run_case_study(4, &BTreeMap::new()),
            Err(EconomicsError::UnknownCase(4))
        ));
    }

    proptest! {
        #[test]
        fn npv_falls_with_rate(cost in 1.0..1e5f64, b in 1.0..1e4f64, n in 1u32..40, r in 0.0..0.5f64, dr in 1e-4..0.5f64) {
            let flows = CashflowSchedule::constant(cost, b, n).cashflows();
            prop_assert!(npv(&flows, r + dr).unwrap() < npv(&flows, r).unwrap());
        }

        #[test]
        fn payback_certifies_npv(cost in 1.0..1e5f64, b in 1.0..1e4f64, r in 0.0..0.3f64) {
            let s = CashflowSchedule::constant(cost, b, 60);
            if let Payback::Years(n) = discounted_payback(&s, r).unwrap() {
                let truncated = CashflowSchedule::constant(cost, b, n).cashflows();
                prop_assert!(npv(&truncated, r).unwrap() >= -cost * 1e-9);
                if n > 1 {
                    let before = CashflowSchedule::constant(cost, b, n - 1).cashflows();
                    prop_assert!(npv(&before, r).unwrap() < 0.0);
                }
            }
        }
    }
}
