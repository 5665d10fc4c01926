//! Time grids, power/price series and tariff schedules.
//!
//! Every quantity that varies over a day lives on a [`TimeGrid`]. Power is in kW,
//! prices in $/kWh, and energy is obtained by left-rectangle integration, which is
//! exact for the piecewise-constant series used throughout the crate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("time grid step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("time grid needs at least one step")]
    EmptyGrid,
    #[error("time grid start hour {0} outside [0, 24)")]
    StartOutOfDay(f64),
    #[error("single-day grid ends at hour {end}, past 24")]
    PastMidnight { end: f64 },
    #[error("series has {got} values but the grid has {expected} steps")]
    LengthMismatch { expected: usize, got: usize },
    #[error("series value at step {step} is not finite")]
    NonFinite { step: usize },
    #[error("series are defined on different time grids")]
    GridMismatch,
    #[error("negative {direction} rate {rate} at step {step}")]
    NegativeRate {
        step: usize,
        direction: Direction,
        rate: f64,
    },
    #[error("export rate {export} exceeds import rate {import} at step {step}")]
    ExportAboveImport { step: usize, export: f64, import: f64 },
    #[error("step index {index} out of range for a grid of {n_steps} steps")]
    StepOutOfRange { index: usize, n_steps: usize },
    #[error("time-of-use period [{start}, {end}) is empty or outside the day")]
    BadPeriod { start: f64, end: f64 },
}

/// Uniform sampling of a day (or several days when `multi_day` is set).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    start_hour: f64,
    step_hours: f64,
    n_steps: usize,
    multi_day: bool,
}

impl TimeGrid {
    pub fn new(start_hour: f64, step_hours: f64, n_steps: usize) -> Result<Self, ModelError> {
        Self::build(start_hour, step_hours, n_steps, false)
    }

    /// A grid allowed to run past midnight (multi-day horizons).
    pub fn multi_day(start_hour: f64, step_hours: f64, n_steps: usize) -> Result<Self, ModelError> {
        Self::build(start_hour, step_hours, n_steps, true)
    }

    fn build(start_hour: f64, step_hours: f64, n_steps: usize, multi_day: bool) -> Result<Self, ModelError> {
        if !(step_hours > 0.0) || !step_hours.is_finite() {
            return Err(ModelError::NonPositiveStep(step_hours));
        }
        if n_steps == 0 {
            return Err(ModelError::EmptyGrid);
        }
        if !(0.0..24.0).contains(&start_hour) {
            return Err(ModelError::StartOutOfDay(start_hour));
        }
        let end = start_hour + step_hours * n_steps as f64;
        if !multi_day && end > 24.0 + 1e-9 {
            return Err(ModelError::PastMidnight { end });
        }
        Ok(Self {
            start_hour,
            step_hours,
            n_steps,
            multi_day,
        })
    }

    /// 24 one-hour steps starting at midnight.
    pub fn hourly_day() -> Self {
        Self {
            start_hour: 0.0,
            step_hours: 1.0,
            n_steps: 24,
            multi_day: false,
        }
    }

    pub fn start_hour(&self) -> f64 {
        self.start_hour
    }

    pub fn step_hours(&self) -> f64 {
        self.step_hours
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn is_multi_day(&self) -> bool {
        self.multi_day
    }

    pub fn end_hour(&self) -> f64 {
        self.start_hour + self.step_hours * self.n_steps as f64
    }

    /// Hour at which step `i` begins.
    pub fn hour_of(&self, i: usize) -> f64 {
        self.start_hour + self.step_hours * i as f64
    }

    /// Index of the step containing `hour`, if any.
    pub fn step_at_hour(&self, hour: f64) -> Option<usize> {
        let offset = (hour - self.start_hour) / self.step_hours;
        // absorb float noise when hour lands on a step boundary
        let idx = (offset + 1e-9).floor();
        if idx < 0.0 || idx >= self.n_steps as f64 {
            None
        } else {
            Some(idx as usize)
        }
    }

    pub fn check_index(&self, index: usize) -> Result<(), ModelError> {
        if index < self.n_steps {
            Ok(())
        } else {
            Err(ModelError::StepOutOfRange {
                index,
                n_steps: self.n_steps,
            })
        }
    }
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self::hourly_day()
    }
}

/// Values sampled on a [`TimeGrid`], one per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self, ModelError> {
        if values.len() != grid.n_steps() {
            return Err(ModelError::LengthMismatch {
                expected: grid.n_steps(),
                got: values.len(),
            });
        }
        if let Some(step) = values.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite { step });
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: TimeGrid, value: f64) -> Self {
        assert!(value.is_finite(), "constant series value must be finite");
        Self {
            grid,
            values: vec![value; grid.n_steps()],
        }
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn from_fn(grid: TimeGrid, f: impl FnMut(usize) -> f64) -> Result<Self, ModelError> {
        Self::new(grid, (0..grid.n_steps()).map(f).collect())
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self, ModelError> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two series on the same grid.
    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self, ModelError> {
        if self.grid != other.grid {
            return Err(ModelError::GridMismatch);
        }
        Self::new(
            self.grid,
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        )
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Energy in kWh of a power series in kW (left-rectangle rule).
pub fn integrate_energy(series: &TimeSeries) -> f64 {
    let step = series.grid().step_hours();
    series.values().iter().map(|v| v * step).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TariffKind {
    Flat,
    TimeOfUse,
    NetMetering,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Import,
    Export,
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Direction::Import => f.write_str("import"),
            Direction::Export => f.write_str("export"),
        }
    }
}

/// One block of a time-of-use tariff, `[start_hour, end_hour)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TouPeriod {
    pub start_hour: f64,
    pub end_hour: f64,
    pub import_rate: f64,
    pub export_rate: f64,
}

/// Utility import and export rates per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TariffSchedule {
    kind: TariffKind,
    grid: TimeGrid,
    import_rate: Vec<f64>,
    export_rate: Vec<f64>,
}

impl TariffSchedule {
    pub fn new(
        kind: TariffKind,
        grid: TimeGrid,
        import_rate: Vec<f64>,
        export_rate: Vec<f64>,
    ) -> Result<Self, ModelError> {
        for (rates, _) in [(&import_rate, Direction::Import), (&export_rate, Direction::Export)] {
            if rates.len() != grid.n_steps() {
                return Err(ModelError::LengthMismatch {
                    expected: grid.n_steps(),
                    got: rates.len(),
                });
            }
        }
        for (step, (&imp, &exp)) in import_rate.iter().zip(&export_rate).enumerate() {
            if !imp.is_finite() || !exp.is_finite() {
                return Err(ModelError::NonFinite { step });
            }
            if imp < 0.0 {
                return Err(ModelError::NegativeRate {
                    step,
                    direction: Direction::Import,
                    rate: imp,
                });
            }
            if exp < 0.0 {
                return Err(ModelError::NegativeRate {
                    step,
                    direction: Direction::Export,
                    rate: exp,
                });
            }
            if exp > imp {
                return Err(ModelError::ExportAboveImport {
                    step,
                    export: exp,
                    import: imp,
                });
            }
        }
        Ok(Self {
            kind,
            grid,
            import_rate,
            export_rate,
        })
    }

    pub fn flat(grid: TimeGrid, import_rate: f64, export_rate: f64) -> Result<Self, ModelError> {
        let n = grid.n_steps();
        Self::new(TariffKind::Flat, grid, vec![import_rate; n], vec![export_rate; n])
    }

    /// Exports credited at the retail import rate.
    pub fn net_metering(grid: TimeGrid, rate: f64) -> Result<Self, ModelError> {
        let n = grid.n_steps();
        Self::new(TariffKind::NetMetering, grid, vec![rate; n], vec![rate; n])
    }

    /// Base rates everywhere, overridden by each period covering a step's start hour.
    /// Later periods win where periods overlap.
    pub fn time_of_use(
        grid: TimeGrid,
        base_import: f64,
        base_export: f64,
        periods: &[TouPeriod],
    ) -> Result<Self, ModelError> {
        for p in periods {
            if !(p.start_hour < p.end_hour) || p.start_hour < 0.0 || p.end_hour > 24.0 {
                return Err(ModelError::BadPeriod {
                    start: p.start_hour,
                    end: p.end_hour,
                });
            }
        }
        let mut import_rate = vec![base_import; grid.n_steps()];
        let mut export_rate = vec![base_export; grid.n_steps()];
        for i in 0..grid.n_steps() {
            let hour = grid.hour_of(i).rem_euclid(24.0);
            for p in periods {
                if hour + 1e-9 >= p.start_hour && hour + 1e-9 < p.end_hour {
                    import_rate[i] = p.import_rate;
                    export_rate[i] = p.export_rate;
                }
            }
        }
        Self::new(TariffKind::TimeOfUse, grid, import_rate, export_rate)
    }

    pub fn kind(&self) -> TariffKind {
        self.kind
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn import_rates(&self) -> &[f64] {
        &self.import_rate
    }

    pub fn export_rates(&self) -> &[f64] {
        &self.export_rate
    }

    pub fn rate_at(&self, step: usize, direction: Direction) -> Result<f64, ModelError> {
        self.grid.check_index(step)?;
        Ok(match direction {
            Direction::Import => self.import_rate[step],
            Direction::Export => self.export_rate[step],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_power_energy() {
        let grid = TimeGrid::new(0.0, 1.0, 2).unwrap();
        assert_eq!(integrate_energy(&TimeSeries::constant(grid, 5.0)), 10.0);
        assert_eq!(integrate_energy(&TimeSeries::zeros(TimeGrid::hourly_day())), 0.0);
    }

    #[test]
    fn grid_validation() {
        assert_eq!(TimeGrid::new(0.0, 0.0, 4), Err(ModelError::NonPositiveStep(0.0)));
        assert_eq!(TimeGrid::new(0.0, 1.0, 0), Err(ModelError::EmptyGrid));
        assert!(matches!(
            TimeGrid::new(20.0, 1.0, 6),
            Err(ModelError::PastMidnight { .. })
        ));
        assert!(TimeGrid::multi_day(20.0, 1.0, 48).is_ok());
        let quarter = TimeGrid::new(0.0, 0.25, 96).unwrap();
        assert_eq!(quarter.step_at_hour(18.0), Some(72));
        assert_eq!(quarter.step_at_hour(24.0), None);
    }

    #[test]
    fn series_rejects_bad_values() {
        let grid = TimeGrid::new(0.0, 1.0, 3).unwrap();
        assert!(matches!(
            TimeSeries::new(grid, vec![1.0, 2.0]),
            Err(ModelError::LengthMismatch { expected: 3, got: 2 })
        ));
        assert_eq!(
            TimeSeries::new(grid, vec![1.0, f64::NAN, 0.0]),
            Err(ModelError::NonFinite { step: 1 })
        );
    }

    #[test]
    fn flat_and_net_metering_rates() {
        let grid = TimeGrid::hourly_day();
        let flat = TariffSchedule::flat(grid, 0.24, 0.10).unwrap();
        assert_eq!(flat.rate_at(7, Direction::Import).unwrap(), 0.24);
        let nm = TariffSchedule::net_metering(grid, 0.24).unwrap();
        for step in 0..24 {
            assert_eq!(nm.rate_at(step, Direction::Export).unwrap(), 0.24);
            assert_eq!(nm.rate_at(step, Direction::Import).unwrap(), 0.24);
        }
        assert_eq!(
            nm.rate_at(24, Direction::Import),
            Err(ModelError::StepOutOfRange { index: 24, n_steps: 24 })
        );
    }

    #[test]
    fn time_of_use_peak_block() {
        let grid = TimeGrid::hourly_day();
        let tou = TariffSchedule::time_of_use(
            grid,
            0.15,
            0.05,
            &[TouPeriod {
                start_hour: 17.0,
                end_hour: 19.0,
                import_rate: 0.30,
                export_rate: 0.05,
            }],
        )
        .unwrap();
        let at18 = grid.step_at_hour(18.0).unwrap();
        assert_eq!(tou.rate_at(at18, Direction::Import).unwrap(), 0.30);
        assert_eq!(tou.rate_at(19, Direction::Import).unwrap(), 0.15);
        assert_eq!(tou.rate_at(16, Direction::Import).unwrap(), 0.15);
    }

    #[test]
    fn export_above_import_rejected() {
        let grid = TimeGrid::hourly_day();
        assert!(matches!(
            TariffSchedule::flat(grid, 0.10, 0.20),
            Err(ModelError::ExportAboveImport { step: 0, .. })
        ));
        assert!(matches!(
            TariffSchedule::flat(grid, -0.1, -0.2),
            Err(ModelError::NegativeRate { .. })
        ));
    }

    fn series_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..48).prop_flat_map(|n| {
            (
                prop::collection::vec(-50.0..50.0f64, n),
                prop::collection::vec(-50.0..50.0f64, n),
            )
        })
    }

    proptest! {
        #[test]
        fn integration_is_linear((x, y) in series_pair(), a in -3.0..3.0f64, b in -3.0..3.0f64) {
            let grid = TimeGrid::multi_day(0.0, 0.5, x.len()).unwrap();
            let xs = TimeSeries::new(grid, x).unwrap();
            let ys = TimeSeries::new(grid, y).unwrap();
            let combo = xs.zip_with(&ys, |p, q| a * p + b * q).unwrap();
            let lhs = integrate_energy(&combo);
            let rhs = a * integrate_energy(&xs) + b * integrate_energy(&ys);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
        }

        #[test]
        fn nonnegative_series_has_nonnegative_energy(v in prop::collection::vec(0.0..20.0f64, 1..96)) {
            let grid = TimeGrid::multi_day(0.0, 0.25, v.len()).unwrap();
            prop_assert!(integrate_energy(&TimeSeries::new(grid, v).unwrap()) >= 0.0);
        }

        #[test]
        fn export_never_above_import(
            base in 0.0..0.5f64,
            spread in 0.0..0.5f64,
            peak_start in 0u32..23,
            peak_len in 1u32..6,
            peak_extra in 0.0..0.5f64,
        ) {
            let grid = TimeGrid::hourly_day();
            let end = (peak_start + peak_len).min(24) as f64;
            let export = (base - spread).max(0.0);
            let tou = TariffSchedule::time_of_use(grid, base, export, &[TouPeriod {
                start_hour: peak_start as f64,
                end_hour: end,
                import_rate: base + peak_extra,
                export_rate: export,
            }]).unwrap();
            for step in 0..24 {
                prop_assert!(tou.rate_at(step, Direction::Export).unwrap()
                    <= tou.rate_at(step, Direction::Import).unwrap());
            }
        }
    }
}
