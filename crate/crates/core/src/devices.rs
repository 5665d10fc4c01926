//! Solar arrays, battery storage and household loads.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{integrate_energy, ModelError, TimeGrid, TimeSeries};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeviceError {
    #[error("invalid {field}: {value} ({reason})")]
    InvalidParameter {
        field: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("battery command {command_kw} kW exceeds the {rating_kw} kW rating")]
    CommandOverRating { command_kw: f64, rating_kw: f64 },
    #[error("state of charge {soc_kwh} kWh outside [0, {capacity_kwh}]")]
    SocOutOfRange { soc_kwh: f64, capacity_kwh: f64 },
    #[error("appliance `{name}`: {reason}")]
    InvalidAppliance { name: String, reason: String },
    #[error("home `{home}`: fixed load {load_kw} kW at step {step} exceeds the {limit_kw} kW service limit")]
    LoadOverServiceLimit {
        home: String,
        step: usize,
        load_kw: f64,
        limit_kw: f64,
    },
    #[error("home `{home}`: {reason}")]
    InvalidHome { home: String, reason: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn check(field: &'static str, value: f64, ok: bool, reason: &'static str) -> Result<(), DeviceError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(DeviceError::InvalidParameter { field, value, reason })
    }
}

/// Rooftop array with a clear-sky half-sine daily shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolarArraySpec {
    pub peak_kw: f64,
    pub daylight_hours: f64,
    /// Mean-to-peak output ratio over the daylight window.
    pub angle_factor: f64,
    pub peak_hour: f64,
    /// Pointwise multipliers in [0, 1] for clouds or haze.
    pub haze_factor: Option<TimeSeries>,
}

impl Default for SolarArraySpec {
    fn default() -> Self {
        Self {
            peak_kw: 5.0,
            daylight_hours: 12.0,
            angle_factor: 0.63,
            peak_hour: 15.0,
            haze_factor: None,
        }
    }
}

impl SolarArraySpec {
    pub fn validate(&self) -> Result<(), DeviceError> {
        check("peak_kw", self.peak_kw, self.peak_kw >= 0.0, "must be >= 0")?;
        check(
            "angle_factor",
            self.angle_factor,
            self.angle_factor > 0.0 && self.angle_factor <= 1.0,
            "must be in (0, 1]",
        )?;
        check(
            "daylight_hours",
            self.daylight_hours,
            self.daylight_hours > 0.0 && self.daylight_hours <= 24.0,
            "must be in (0, 24]",
        )?;
        check("peak_hour", self.peak_hour, true, "must be finite")?;
        if let Some(haze) = &self.haze_factor {
            for &h in haze.values() {
                check(
                    "haze_factor",
                    h,
                    (0.0..=1.0).contains(&h),
                    "multipliers must be in [0, 1]",
                )?;
            }
        }
        Ok(())
    }

    pub fn sunrise(&self) -> f64 {
        self.peak_hour - self.daylight_hours / 2.0
    }

    pub fn sunset(&self) -> f64 {
        self.peak_hour + self.daylight_hours / 2.0
    }

    /// Clear-sky daily energy over a grid covering the daylight window.
    pub fn clear_sky_energy_kwh(&self) -> f64 {
        self.angle_factor * self.peak_kw * self.daylight_hours
    }
}

/// Shape amplitude `c` such that `min(1, c sin θ)` over `[0, π]` has mean `factor`.
///
/// Returns `None` for `factor >= 1` (flat top across the whole window).
fn shape_amplitude(factor: f64) -> Option<f64> {
    if factor >= 1.0 {
        return None;
    }
    if factor <= 2.0 / PI {
        return Some(factor * PI / 2.0);
    }
    // clipped sine: total(θc) = 2(1 - cos θc)/sin θc + π - 2θc, decreasing in θc
    let target = factor * PI;
    let total = |tc: f64| 2.0 * (1.0 - tc.cos()) / tc.sin() + PI - 2.0 * tc;
    let (mut lo, mut hi) = (1e-300_f64, PI / 2.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(1.0 / (0.5 * (lo + hi)).sin())
}

/// `∫ min(1, c sin θ) dθ` over `[a, b] ⊆ [0, π]`; `None` amplitude means the constant 1.
fn shape_integral(amplitude: Option<f64>, a: f64, b: f64) -> f64 {
    let sine = |lo: f64, hi: f64, c: f64| if hi > lo { c * (lo.cos() - hi.cos()) } else { 0.0 };
    match amplitude {
        None => b - a,
        Some(c) if c <= 1.0 => sine(a, b, c),
        Some(c) => {
            let tc = (1.0 / c).asin();
            let rise = sine(a, b.min(tc), c);
            let flat = (b.min(PI - tc) - a.max(tc)).max(0.0);
            let fall = sine(a.max(PI - tc), b, c);
            rise + flat + fall
        }
    }
}

/// Solar output per step, the step average of the clear-sky shape times any haze.
pub fn solar_profile(spec: &SolarArraySpec, grid: &TimeGrid) -> Result<TimeSeries, DeviceError> {
    spec.validate()?;
    if spec.peak_kw == 0.0 {
        return Ok(TimeSeries::zeros(*grid));
    }
    let amplitude = shape_amplitude(spec.angle_factor);
    let (rise, set) = (spec.sunrise(), spec.sunset());
    let to_angle = |hour: f64| PI * (hour - rise) / spec.daylight_hours;
    let step = grid.step_hours();
    let mut values = Vec::with_capacity(grid.n_steps());
    for i in 0..grid.n_steps() {
        let a = grid.hour_of(i).max(rise);
        let b = (grid.hour_of(i) + step).min(set);
        let v = if b > a {
            let area = shape_integral(amplitude, to_angle(a), to_angle(b));
            (spec.peak_kw * spec.daylight_hours / PI * area / step).clamp(0.0, spec.peak_kw)
        } else {
            0.0
        };
        values.push(v);
    }
    let mut profile = TimeSeries::new(*grid, values)?;
    if let Some(haze) = &spec.haze_factor {
        profile = profile.zip_with(haze, |p, h| p * h)?;
    }
    Ok(profile)
}

/// Battery energy storage system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BessSpec {
    pub capacity_kwh: f64,
    pub continuous_power_kw: f64,
    pub round_trip_efficiency: f64,
    /// Apply the whole round-trip loss on discharge. When false the loss is split
    /// evenly, `sqrt(η)` on each leg.
    pub discharge_applies_loss: bool,
}

impl Default for BessSpec {
    fn default() -> Self {
        Self {
            capacity_kwh: 13.5,
            continuous_power_kw: 5.6,
            round_trip_efficiency: 0.85,
            discharge_applies_loss: true,
        }
    }
}

impl BessSpec {
    pub fn validate(&self) -> Result<(), DeviceError> {
        check(
            "capacity_kwh",
            self.capacity_kwh,
            self.capacity_kwh > 0.0,
            "must be > 0",
        )?;
        check(
            "continuous_power_kw",
            self.continuous_power_kw,
            self.continuous_power_kw > 0.0,
            "must be > 0",
        )?;
        check(
            "round_trip_efficiency",
            self.round_trip_efficiency,
            self.round_trip_efficiency > 0.0 && self.round_trip_efficiency <= 1.0,
            "must be in (0, 1]",
        )
    }

    /// Fraction of charging input that ends up stored.
    pub fn charge_efficiency(&self) -> f64 {
        if self.discharge_applies_loss {
            1.0
        } else {
            self.round_trip_efficiency.sqrt()
        }
    }

    /// Fraction of drawn stored energy delivered to the bus.
    pub fn discharge_efficiency(&self) -> f64 {
        if self.discharge_applies_loss {
            self.round_trip_efficiency
        } else {
            self.round_trip_efficiency.sqrt()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BessState {
    pub soc_kwh: f64,
}

impl BessState {
    pub fn empty() -> Self {
        Self { soc_kwh: 0.0 }
    }

    pub fn new(spec: &BessSpec, soc_kwh: f64) -> Result<Self, DeviceError> {
        if !(0.0..=spec.capacity_kwh).contains(&soc_kwh) {
            return Err(DeviceError::SocOutOfRange {
                soc_kwh,
                capacity_kwh: spec.capacity_kwh,
            });
        }
        Ok(Self { soc_kwh })
    }
}

/// Result of one battery step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BessStep {
    pub state: BessState,
    /// Energy taken from the bus while charging.
    pub absorbed_kwh: f64,
    /// Energy handed to the bus while discharging.
    pub delivered_kwh: f64,
    /// Requested bus energy that could not be honoured because of SoC limits.
    pub truncated_kwh: f64,
}

/// Nominal time to fill an empty battery at continuous power.
pub fn bess_charge_time(spec: &BessSpec) -> f64 {
    spec.capacity_kwh / spec.continuous_power_kw
}

/// Advances the battery by one step; `command_kw > 0` charges, `< 0` discharges.
pub fn bess_step(spec: &BessSpec, state: BessState, command_kw: f64, step_hours: f64) -> Result<BessStep, DeviceError> {
    spec.validate()?;
    check("step_hours", step_hours, step_hours > 0.0, "must be > 0")?;
    check("command_kw", command_kw, true, "must be finite")?;
    let rating = spec.continuous_power_kw;
    if command_kw.abs() > rating * (1.0 + 1e-12) {
        return Err(DeviceError::CommandOverRating {
            command_kw,
            rating_kw: rating,
        });
    }
    let soc = state.soc_kwh;
    if command_kw >= 0.0 {
        let requested = command_kw * step_hours;
        let eta = spec.charge_efficiency();
        let headroom = (spec.capacity_kwh - soc).max(0.0);
        let (stored, absorbed) = if requested * eta > headroom {
            (headroom, headroom / eta)
        } else {
            (requested * eta, requested)
        };
        Ok(BessStep {
            state: BessState {
                soc_kwh: (soc + stored).min(spec.capacity_kwh),
            },
            absorbed_kwh: absorbed,
            delivered_kwh: 0.0,
            truncated_kwh: requested - absorbed,
        })
    } else {
        let requested = -command_kw * step_hours;
        let drawn = requested.min(soc);
        Ok(BessStep {
            state: BessState {
                soc_kwh: (soc - drawn).max(0.0),
            },
            absorbed_kwh: 0.0,
            delivered_kwh: drawn * spec.discharge_efficiency(),
            truncated_kwh: requested - drawn,
        })
    }
}

/// Grid power that can top up charging while the array is at peak.
pub fn grid_assist_headroom(bess: &BessSpec, solar: &SolarArraySpec) -> f64 {
    (bess.continuous_power_kw - solar.peak_kw).max(0.0)
}

/// A schedulable household load block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Appliance {
    pub name: String,
    pub power_kw: f64,
    pub duration_steps: usize,
    /// First step the appliance may run in.
    pub earliest_step: usize,
    /// Last step the appliance may run in (inclusive).
    pub latest_step: usize,
    pub interruptible: bool,
}

impl Appliance {
    pub fn window_len(&self) -> usize {
        (self.latest_step + 1).saturating_sub(self.earliest_step)
    }

    pub fn validate(&self, grid: &TimeGrid) -> Result<(), DeviceError> {
        let bad = |reason: String| DeviceError::InvalidAppliance {
            name: self.name.clone(),
            reason,
        };
        if !(self.power_kw >= 0.0) || !self.power_kw.is_finite() {
            return Err(bad(format!("power {} kW must be >= 0", self.power_kw)));
        }
        if self.duration_steps == 0 {
            return Err(bad("duration must be at least one step".into()));
        }
        if self.latest_step >= grid.n_steps() {
            return Err(bad(format!(
                "window ends at step {} but the grid has {} steps",
                self.latest_step,
                grid.n_steps()
            )));
        }
        if self.earliest_step > self.latest_step || self.window_len() < self.duration_steps {
            return Err(bad(format!(
                "window [{}, {}] cannot fit {} steps",
                self.earliest_step, self.latest_step, self.duration_steps
            )));
        }
        Ok(())
    }

    /// Every admissible set of on-steps, in lexicographic order (earliest first).
    pub fn placements(&self) -> Vec<Vec<usize>> {
        let d = self.duration_steps;
        if !self.interruptible {
            return (self.earliest_step..=self.latest_step + 1 - d)
                .map(|s| (s..s + d).collect())
                .collect();
        }
        let window: Vec<usize> = (self.earliest_step..=self.latest_step).collect();
        let mut out = Vec::new();
        let mut idx: Vec<usize> = (0..d).collect();
        loop {
            out.push(idx.iter().map(|&i| window[i]).collect());
            // advance to the next combination
            let mut k = d;
            while k > 0 && idx[k - 1] == window.len() - d + k - 1 {
                k -= 1;
            }
            if k == 0 {
                break;
            }
            idx[k - 1] += 1;
            for j in k..d {
                idx[j] = idx[j - 1] + 1;
            }
        }
        out
    }

    /// Number of 0/1 indicators in the scheduling model (one per start slot, or per
    /// window step when interruptible).
    pub fn binary_count(&self) -> usize {
        if self.interruptible {
            self.window_len()
        } else {
            self.window_len() + 1 - self.duration_steps
        }
    }
}

/// One node of the neighborhood: loads plus optional solar and storage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomeSpec {
    pub id: String,
    pub fixed_load: TimeSeries,
    pub appliances: Vec<Appliance>,
    pub solar: Option<SolarArraySpec>,
    pub bess: Option<BessSpec>,
    pub service_limit_kw: f64,
}

pub const DEFAULT_SERVICE_LIMIT_KW: f64 = 24.0;

impl HomeSpec {
    /// A home with only a fixed load and the default service limit.
    pub fn with_load(id: impl Into<String>, fixed_load: TimeSeries) -> Self {
        Self {
            id: id.into(),
            fixed_load,
            appliances: Vec::new(),
            solar: None,
            bess: None,
            service_limit_kw: DEFAULT_SERVICE_LIMIT_KW,
        }
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        let grid = self.fixed_load.grid();
        if !(self.service_limit_kw > 0.0) {
            return Err(DeviceError::InvalidHome {
                home: self.id.clone(),
                reason: format!("service limit {} kW must be > 0", self.service_limit_kw),
            });
        }
        for (step, &load) in self.fixed_load.values().iter().enumerate() {
            if load < 0.0 {
                return Err(DeviceError::InvalidHome {
                    home: self.id.clone(),
                    reason: format!("negative fixed load {load} kW at step {step}"),
                });
            }
            if load > self.service_limit_kw {
                return Err(DeviceError::LoadOverServiceLimit {
                    home: self.id.clone(),
                    step,
                    load_kw: load,
                    limit_kw: self.service_limit_kw,
                });
            }
        }
        for a in &self.appliances {
            a.validate(grid)?;
        }
        if let Some(solar) = &self.solar {
            solar.validate()?;
        }
        if let Some(bess) = &self.bess {
            bess.validate()?;
        }
        Ok(())
    }

    pub fn solar_output(&self) -> Result<TimeSeries, DeviceError> {
        match &self.solar {
            Some(spec) => solar_profile(spec, self.fixed_load.grid()),
            None => Ok(TimeSeries::zeros(*self.fixed_load.grid())),
        }
    }

    pub fn daily_solar_energy(&self) -> Result<f64, DeviceError> {
        Ok(integrate_energy(&self.solar_output()?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn default_array_delivers_clear_day_energy() {
        let profile = solar_profile(&SolarArraySpec::default(), &TimeGrid::hourly_day()).unwrap();
        assert_abs_diff_eq!(integrate_energy(&profile), 0.63 * 5.0 * 12.0, epsilon = 1e-9);
        assert_abs_diff_eq!(integrate_energy(&profile), 37.8, epsilon = 1e-9);
        // dark before 09:00 and after 21:00
        for i in (0..9).chain(21..24) {
            assert_eq!(profile.get(i), 0.0);
        }
        // the 14:00-15:00 and 15:00-16:00 blocks straddle the peak symmetrically
        assert_abs_diff_eq!(profile.get(14), profile.get(15), epsilon = 1e-12);
    }

    #[test]
    fn zero_peak_is_dark_and_haze_scales() {
        let grid = TimeGrid::hourly_day();
        let dark = SolarArraySpec {
            peak_kw: 0.0,
            ..Default::default()
        };
        assert!(solar_profile(&dark, &grid).unwrap().values().iter().all(|&v| v == 0.0));
        let hazy = SolarArraySpec {
            haze_factor: Some(TimeSeries::constant(grid, 0.5)),
            ..Default::default()
        };
        assert_abs_diff_eq!(
            integrate_energy(&solar_profile(&hazy, &grid).unwrap()),
            18.9,
            epsilon = 1e-9
        );
    }

    #[test]
    fn quarter_hour_grid_matches_hourly_energy() {
        let grid = TimeGrid::new(0.0, 0.25, 96).unwrap();
        let profile = solar_profile(&SolarArraySpec::default(), &grid).unwrap();
        assert_abs_diff_eq!(integrate_energy(&profile), 37.8, epsilon = 1e-9);
    }

    #[test]
    fn analytic_ratio_needs_no_rescaling() {
        // with angle factor 2/π the profile is the bare half-sine step average
        let spec = SolarArraySpec {
            angle_factor: 2.0 / PI,
            ..Default::default()
        };
        let grid = TimeGrid::new(0.0, 0.5, 48).unwrap();
        let profile = solar_profile(&spec, &grid).unwrap();
        for i in 0..48 {
            let (a, b) = (grid.hour_of(i).max(9.0), (grid.hour_of(i) + 0.5).min(21.0));
            let expected = if b > a {
                5.0 * 12.0 / PI * ((PI * (a - 9.0) / 12.0).cos() - (PI * (b - 9.0) / 12.0).cos()) / 0.5
            } else {
                0.0
            };
            assert_abs_diff_eq!(profile.get(i), expected, epsilon = 1e-12);
        }
        assert!((2.0 / PI - 0.63).abs() / 0.63 < 0.011);
    }

    #[test]
    fn high_angle_factor_clips_at_peak() {
        for factor in [0.7, 0.9, 0.99, 1.0] {
            let spec = SolarArraySpec {
                angle_factor: factor,
                ..Default::default()
            };
            let profile = solar_profile(&spec, &TimeGrid::hourly_day()).unwrap();
            assert_abs_diff_eq!(integrate_energy(&profile), factor * 60.0, epsilon = 1e-8);
            assert!(profile.max() <= 5.0 + 1e-12);
        }
    }

    #[test]
    fn charge_time_cases() {
        assert_abs_diff_eq!(bess_charge_time(&BessSpec::default()), 13.5 / 5.6);
        assert!((bess_charge_time(&BessSpec::default()) - 2.41).abs() < 0.005);
        let b = |c, p| BessSpec {
            capacity_kwh: c,
            continuous_power_kw: p,
            ..Default::default()
        };
        assert_eq!(bess_charge_time(&b(10.0, 5.0)), 2.0);
        assert_eq!(bess_charge_time(&b(13.5, 13.5)), 1.0);
    }

    #[test]
    fn fill_discharge_and_truncate() {
        let spec = BessSpec::default();
        let full = bess_step(&spec, BessState::empty(), 5.6, bess_charge_time(&spec)).unwrap();
        assert_abs_diff_eq!(full.state.soc_kwh, 13.5, epsilon = 1e-12);
        assert_abs_diff_eq!(full.truncated_kwh, 0.0, epsilon = 1e-12);

        let empty = bess_step(&spec, full.state, -5.6, bess_charge_time(&spec)).unwrap();
        assert_abs_diff_eq!(empty.delivered_kwh, 11.475, epsilon = 1e-9);
        assert_abs_diff_eq!(empty.state.soc_kwh, 0.0, epsilon = 1e-9);

        let topped = bess_step(&spec, BessState { soc_kwh: 13.5 }, 1.0, 1.0).unwrap();
        assert_eq!(topped.state.soc_kwh, 13.5);
        assert_eq!(topped.absorbed_kwh, 0.0);
        assert_eq!(topped.truncated_kwh, 1.0);
    }

    #[test]
    fn command_over_rating_is_an_error() {
        let err = bess_step(&BessSpec::default(), BessState::empty(), 6.0, 1.0).unwrap_err();
        assert!(matches!(err, DeviceError::CommandOverRating { .. }));
    }

    #[test]
    fn assist_headroom() {
        let solar = SolarArraySpec::default();
        assert_abs_diff_eq!(grid_assist_headroom(&BessSpec::default(), &solar), 0.6, epsilon = 1e-12);
        let with_power = |p| BessSpec {
            continuous_power_kw: p,
            ..Default::default()
        };
        assert_eq!(grid_assist_headroom(&with_power(5.0), &solar), 0.0);
        assert_eq!(grid_assist_headroom(&with_power(4.0), &solar), 0.0);
    }

    #[test]
    fn placements_enumerate_windows() {
        let oven = Appliance {
            name: "oven".into(),
            power_kw: 10.0,
            duration_steps: 2,
            earliest_step: 3,
            latest_step: 6,
            interruptible: false,
        };
        assert_eq!(oven.placements(), vec![vec![3, 4], vec![4, 5], vec![5, 6]]);
        assert_eq!(oven.binary_count(), 3);
        let flexible = Appliance {
            interruptible: true,
            ..oven
        };
        assert_eq!(flexible.placements().len(), 6);
        assert_eq!(flexible.placements()[0], vec![3, 4]);
        assert_eq!(flexible.binary_count(), 4);
    }

    #[test]
    fn appliance_window_must_fit() {
        let grid = TimeGrid::hourly_day();
        let a = Appliance {
            name: "ac".into(),
            power_kw: 5.0,
            duration_steps: 4,
            earliest_step: 12,
            latest_step: 14,
            interruptible: false,
        };
        assert!(matches!(a.validate(&grid), Err(DeviceError::InvalidAppliance { .. })));
    }

    fn charge_then_drain(spec: &BessSpec, energy: f64) -> (f64, f64) {
        let mut state = BessState::empty();
        let p = spec.continuous_power_kw;
        let mut left = energy;
        let mut absorbed = 0.0;
        while left > 1e-12 {
            let h = (left / p).min(1.0);
            let s = bess_step(spec, state, p, h).unwrap();
            absorbed += s.absorbed_kwh;
            left -= s.absorbed_kwh;
            state = s.state;
            if s.absorbed_kwh == 0.0 {
                break;
            }
        }
        let mut delivered = 0.0;
        while state.soc_kwh > 1e-12 {
            let s = bess_step(spec, state, -p, 1.0).unwrap();
            delivered += s.delivered_kwh;
            state = s.state;
        }
        (absorbed, delivered)
    }

    proptest! {
        #[test]
        fn soc_stays_in_bounds(cmds in prop::collection::vec(-5.6..5.6f64, 1..60), h in 0.1..2.0f64) {
            let spec = BessSpec::default();
            let mut state = BessState::empty();
            for c in cmds {
                state = bess_step(&spec, state, c, h).unwrap().state;
                prop_assert!(state.soc_kwh >= 0.0 && state.soc_kwh <= spec.capacity_kwh);
            }
        }

        #[test]
        fn full_cycle_conserves(energy in 0.1..13.5f64, eta in 0.5..1.0f64, split in any::<bool>()) {
            let spec = BessSpec { round_trip_efficiency: eta, discharge_applies_loss: !split, ..Default::default() };
            let (absorbed, delivered) = charge_then_drain(&spec, energy);
            prop_assert!((delivered - eta * absorbed).abs() < 1e-9);
        }

        #[test]
        fn profile_bounded_and_dark_outside_window(
            peak in 0.0..10.0f64,
            daylight in 4.0..14.0f64,
            factor in 0.2..1.0f64,
            peak_hour in 10.0..16.0f64,
        ) {
            let spec = SolarArraySpec { peak_kw: peak, daylight_hours: daylight, angle_factor: factor, peak_hour, haze_factor: None };
            let grid = TimeGrid::new(0.0, 0.5, 48).unwrap();
            let profile = solar_profile(&spec, &grid).unwrap();
            for i in 0..48 {
                let v = profile.get(i);
                prop_assert!(v >= 0.0 && v <= peak + 1e-12);
                if grid.hour_of(i) + 0.5 <= spec.sunrise() || grid.hour_of(i) >= spec.sunset() {
                    prop_assert_eq!(v, 0.0);
                }
            }
        }
    }
}
