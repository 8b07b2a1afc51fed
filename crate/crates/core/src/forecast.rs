//! Day-ahead transformer load forecasting.
//!
//! The model is a ridge-regularised linear autoregression over three lag groups
//! (recent slots, the same slot on previous days, the same slot in previous weeks),
//! a one-hot day of week, the slot temperature and an intercept. Day-ahead
//! forecasts are produced recursively: recent lags inside the forecast day are
//! filled with earlier predictions while daily and weekly lags always read history.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const DAYS_PER_WEEK: usize = 7;

/// Lag counts for the recent, daily and weekly groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LagSpec {
    pub recent: usize,
    pub daily: usize,
    pub weekly: usize,
}

impl Default for LagSpec {
    fn default() -> Self {
        LagSpec {
            recent: 12,
            daily: 3,
            weekly: 2,
        }
    }
}

impl LagSpec {
    pub fn new(recent: usize, daily: usize, weekly: usize) -> Result<Self> {
        let spec = LagSpec {
            recent,
            daily,
            weekly,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.recent + self.daily + self.weekly == 0 {
            return Err(Error::Config("at least one lag is required".into()));
        }
        Ok(())
    }

    /// Lags, seven day-of-week indicators, temperature and intercept.
    pub fn feature_count(&self) -> usize {
        self.recent + self.daily + self.weekly + DAYS_PER_WEEK + 2
    }

    /// Number of past slots the features of one target reach back.
    pub fn lookback(&self, slots_per_day: usize) -> usize {
        self.recent
            .max(self.daily * slots_per_day)
            .max(self.weekly * DAYS_PER_WEEK * slots_per_day)
    }
}

/// Exogenous inputs aligned with the load history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExogenousFeatures {
    slots_per_day: usize,
    temperature: Option<Vec<f64>>,
    day_of_week: Vec<u8>,
}

impl ExogenousFeatures {
    /// `day_of_week[d]` is 0 (Monday) to 6 (Sunday) for day `d`; temperature, when
    /// present, has one value per slot.
    pub fn new(slots_per_day: usize, temperature: Option<Vec<f64>>, day_of_week: Vec<u8>) -> Result<Self> {
        if slots_per_day == 0 {
            return Err(Error::Config("slots_per_day must be positive".into()));
        }
        if let Some(d) = day_of_week.iter().find(|d| **d > 6) {
            return Err(Error::OutOfRange(format!("day of week {d} not in 0..=6")));
        }
        if let Some(temp) = &temperature {
            if temp.len() != day_of_week.len() * slots_per_day {
                return Err(Error::LengthMismatch {
                    what: "temperature series",
                    expected: day_of_week.len() * slots_per_day,
                    actual: temp.len(),
                });
            }
            if temp.iter().any(|v| !v.is_finite()) {
                return Err(Error::OutOfRange("non-finite temperature".into()));
            }
        }
        Ok(ExogenousFeatures {
            slots_per_day,
            temperature,
            day_of_week,
        })
    }

    /// Consecutive days starting on `first_day_of_week`.
    pub fn calendar(slots_per_day: usize, days: usize, first_day_of_week: u8, temperature: Option<Vec<f64>>) -> Result<Self> {
        let dow = (0..days).map(|d| ((first_day_of_week as usize + d) % DAYS_PER_WEEK) as u8).collect();
        Self::new(slots_per_day, temperature, dow)
    }

    pub fn slots(&self) -> usize {
        self.day_of_week.len() * self.slots_per_day
    }

    pub fn slots_per_day(&self) -> usize {
        self.slots_per_day
    }

    pub fn has_temperature(&self) -> bool {
        self.temperature.is_some()
    }

    fn temperature_at(&self, t: usize) -> f64 {
        self.temperature.as_ref().map_or(0.0, |v| v[t])
    }

    pub fn day_of_week_at(&self, t: usize) -> u8 {
        self.day_of_week[t / self.slots_per_day]
    }
}

/// Fitted coefficients, laid out like [`build_features`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastModel {
    pub lag_spec: LagSpec,
    pub ridge: f64,
    pub slots_per_day: usize,
    pub coefficients: Vec<f64>,
}

impl ForecastModel {
    pub fn validate(&self) -> Result<()> {
        self.lag_spec.validate()?;
        if self.coefficients.len() != self.lag_spec.feature_count() {
            return Err(Error::LengthMismatch {
                what: "model coefficients",
                expected: self.lag_spec.feature_count(),
                actual: self.coefficients.len(),
            });
        }
        if self.slots_per_day == 0 {
            return Err(Error::Config("model slots_per_day must be positive".into()));
        }
        if !(self.ridge.is_finite() && self.ridge >= 0.0) || self.coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::OutOfRange("model parameters must be finite".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: ForecastModel = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }

    /// Coefficient on the temperature feature.
    pub fn temperature_coefficient(&self) -> f64 {
        self.coefficients[self.coefficients.len() - 2]
    }

    fn predict_one(&self, features: &[f64]) -> f64 {
        self.coefficients.iter().zip(features).map(|(w, f)| w * f).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastResult {
    pub mean: Vec<f64>,
    pub deviation: Vec<f64>,
}

/// Writes the feature vector of `target` into `out`. `series[k]` holds the load at
/// global slot `offset + k`.
fn fill_features(
    out: &mut [f64],
    series: &[f64],
    offset: usize,
    target: usize,
    spec: &LagSpec,
    exog: &ExogenousFeatures,
) {
    let td = exog.slots_per_day;
    let at = |t: usize| series[t - offset];
    let mut k = 0;
    for lag in 1..=spec.recent {
        out[k] = at(target - lag);
        k += 1;
    }
    for lag in 1..=spec.daily {
        out[k] = at(target - lag * td);
        k += 1;
    }
    for lag in 1..=spec.weekly {
        out[k] = at(target - lag * DAYS_PER_WEEK * td);
        k += 1;
    }
    let dow = exog.day_of_week_at(target) as usize;
    for d in 0..DAYS_PER_WEEK {
        out[k + d] = if d == dow { 1.0 } else { 0.0 };
    }
    k += DAYS_PER_WEEK;
    out[k] = exog.temperature_at(target);
    out[k + 1] = 1.0;
}

fn check_target(history_len: usize, target: usize, spec: &LagSpec, exog: &ExogenousFeatures) -> Result<()> {
    let need = spec.lookback(exog.slots_per_day);
    if target < need {
        return Err(Error::InsufficientHistory(format!(
            "target slot {target} needs {need} slots of history"
        )));
    }
    if target > history_len {
        return Err(Error::InsufficientHistory(format!(
            "target slot {target} is beyond the {history_len} known slots"
        )));
    }
    if target >= exog.slots() {
        return Err(Error::LengthMismatch {
            what: "exogenous features",
            expected: target + 1,
            actual: exog.slots(),
        });
    }
    Ok(())
}

/// Feature vector for predicting `history[target]` from earlier slots.
///
/// Layout: recent lags, daily lags, weekly lags, day-of-week one-hot,
/// temperature, intercept.
pub fn build_features(history: &[f64], target: usize, spec: &LagSpec, exog: &ExogenousFeatures) -> Result<Vec<f64>> {
    check_target(history.len(), target, spec, exog)?;
    let mut out = vec![0.0; spec.feature_count()];
    fill_features(&mut out, history, 0, target, spec, exog);
    Ok(out)
}

/// Fits on every slot of `history` that has a full set of lags.
pub fn fit(history: &[f64], exog: &ExogenousFeatures, spec: &LagSpec, ridge: f64) -> Result<ForecastModel> {
    let start = spec.lookback(exog.slots_per_day);
    fit_range(history, exog, spec, ridge, start..history.len())
}

/// Fits using `targets` as training rows; lags may reach before `targets.start`.
pub fn fit_range(
    history: &[f64],
    exog: &ExogenousFeatures,
    spec: &LagSpec,
    ridge: f64,
    targets: std::ops::Range<usize>,
) -> Result<ForecastModel> {
    spec.validate()?;
    if !(ridge.is_finite() && ridge >= 0.0) {
        return Err(Error::Config(format!("ridge penalty must be nonnegative, got {ridge}")));
    }
    let td = exog.slots_per_day;
    if spec.weekly > 0 && targets.end < 8 * DAYS_PER_WEEK * td {
        return Err(Error::InsufficientHistory(format!(
            "weekly lags need eight weeks of history, got {} slots",
            targets.end
        )));
    }
    if targets.end > history.len() {
        return Err(Error::InsufficientHistory(format!(
            "training range ends at {} but history has {} slots",
            targets.end,
            history.len()
        )));
    }
    let p = spec.feature_count();
    if targets.len() < p {
        return Err(Error::InsufficientHistory(format!(
            "{} training rows for {p} coefficients",
            targets.len()
        )));
    }
    check_target(history.len(), targets.start, spec, exog)?;
    check_target(history.len(), targets.end - 1, spec, exog)?;

    let mut gram = vec![0.0; p * p];
    let mut rhs = vec![0.0; p];
    let mut row = vec![0.0; p];
    for t in targets {
        fill_features(&mut row, history, 0, t, spec, exog);
        accumulate(&mut gram, &mut rhs, &row, history[t]);
    }
    let penalized: Vec<bool> = (0..p).map(|j| j + 1 < p).collect();
    let coefficients = solve_ridge_normal(gram, rhs, ridge, &penalized)?;
    Ok(ForecastModel {
        lag_spec: *spec,
        ridge,
        slots_per_day: td,
        coefficients,
    })
}

fn accumulate(gram: &mut [f64], rhs: &mut [f64], row: &[f64], y: f64) {
    let p = row.len();
    for i in 0..p {
        let ri = row[i];
        if ri == 0.0 {
            continue;
        }
        rhs[i] += ri * y;
        let g = &mut gram[i * p..i * p + i + 1];
        for (gij, rj) in g.iter_mut().zip(&row[..=i]) {
            *gij += ri * rj;
        }
    }
}

/// Ridge regression on an explicit design matrix; `penalized[j]` selects which
/// coefficients receive the penalty.
pub fn ridge_regression(design: &[Vec<f64>], target: &[f64], ridge: f64, penalized: &[bool]) -> Result<Vec<f64>> {
    if design.len() != target.len() {
        return Err(Error::LengthMismatch {
            what: "ridge targets",
            expected: design.len(),
            actual: target.len(),
        });
    }
    let p = penalized.len();
    let mut gram = vec![0.0; p * p];
    let mut rhs = vec![0.0; p];
    for (row, &y) in design.iter().zip(target) {
        if row.len() != p {
            return Err(Error::LengthMismatch {
                what: "design row",
                expected: p,
                actual: row.len(),
            });
        }
        accumulate(&mut gram, &mut rhs, row, y);
    }
    solve_ridge_normal(gram, rhs, ridge, penalized)
}

/// Solves `(G + ridge * P) w = b` by Cholesky, where only the lower triangle of the
/// row-major `gram` is populated.
fn solve_ridge_normal(mut gram: Vec<f64>, mut rhs: Vec<f64>, ridge: f64, penalized: &[bool]) -> Result<Vec<f64>> {
    let p = rhs.len();
    let original_diag: Vec<f64> = (0..p).map(|j| gram[j * p + j]).collect();
    for (j, pen) in penalized.iter().enumerate() {
        if *pen {
            gram[j * p + j] += ridge;
        }
    }
    // In-place Cholesky, lower triangle.
    for j in 0..p {
        let mut d = gram[j * p + j];
        for k in 0..j {
            d -= gram[j * p + k] * gram[j * p + k];
        }
        let collapsed = if ridge > 0.0 {
            !(d > 0.0)
        } else {
            !(d > 1e-10 * original_diag[j]) || original_diag[j] == 0.0
        };
        if collapsed {
            return Err(Error::Singular { pivot: j });
        }
        let l = d.sqrt();
        gram[j * p + j] = l;
        for i in j + 1..p {
            let mut v = gram[i * p + j];
            for k in 0..j {
                v -= gram[i * p + k] * gram[j * p + k];
            }
            gram[i * p + j] = v / l;
        }
    }
    for i in 0..p {
        let mut v = rhs[i];
        for k in 0..i {
            v -= gram[i * p + k] * rhs[k];
        }
        rhs[i] = v / gram[i * p + i];
    }
    for i in (0..p).rev() {
        let mut v = rhs[i];
        for k in i + 1..p {
            v -= gram[k * p + i] * rhs[k];
        }
        rhs[i] = v / gram[i * p + i];
    }
    Ok(rhs)
}

/// One-step-ahead fitted values over `targets` (teacher forcing).
pub fn fitted_values(
    model: &ForecastModel,
    history: &[f64],
    exog: &ExogenousFeatures,
    targets: std::ops::Range<usize>,
) -> Result<Vec<f64>> {
    let mut row = vec![0.0; model.lag_spec.feature_count()];
    let mut out = Vec::with_capacity(targets.len());
    for t in targets {
        check_target(history.len(), t, &model.lag_spec, exog)?;
        fill_features(&mut row, history, 0, t, &model.lag_spec, exog);
        out.push(model.predict_one(&row));
    }
    Ok(out)
}

/// Forecasts the day that starts at slot `day_start`, using only `history[..day_start]`.
pub fn predict_day(model: &ForecastModel, history: &[f64], exog: &ExogenousFeatures, day_start: usize) -> Result<Vec<f64>> {
    model.validate()?;
    let td = exog.slots_per_day;
    if model.slots_per_day != td {
        return Err(Error::Config(format!(
            "model fitted for {} slots per day, features have {td}",
            model.slots_per_day
        )));
    }
    let spec = &model.lag_spec;
    let lookback = spec.lookback(td);
    if day_start < lookback || day_start > history.len() {
        return Err(Error::InsufficientHistory(format!(
            "forecast from slot {day_start} needs {lookback} slots of history ({} known)",
            history.len()
        )));
    }
    if day_start + td > exog.slots() {
        return Err(Error::LengthMismatch {
            what: "exogenous features",
            expected: day_start + td,
            actual: exog.slots(),
        });
    }
    let offset = day_start - lookback;
    let mut window = Vec::with_capacity(lookback + td);
    window.extend_from_slice(&history[offset..day_start]);
    let mut row = vec![0.0; spec.feature_count()];
    let mut out = Vec::with_capacity(td);
    for t in day_start..day_start + td {
        fill_features(&mut row, &window, offset, t, spec, exog);
        let y = model.predict_one(&row);
        window.push(y);
        out.push(y.max(0.0));
    }
    Ok(out)
}

/// Per-slot deviation `multiplier * std` of the residuals at the same slot of day over
/// the trailing `window_days` days. `residuals[d][k]` is day `d`, slot `k`.
pub fn estimate_deviation(residuals: &[Vec<f64>], window_days: usize, multiplier: f64) -> Result<Vec<f64>> {
    if window_days < DAYS_PER_WEEK {
        return Err(Error::Config(format!(
            "deviation window must cover at least 7 days, got {window_days}"
        )));
    }
    if !(multiplier.is_finite() && multiplier >= 0.0) {
        return Err(Error::Config(format!("deviation multiplier must be nonnegative, got {multiplier}")));
    }
    if residuals.len() < DAYS_PER_WEEK {
        return Err(Error::InsufficientHistory(format!(
            "{} residual days, need at least 7",
            residuals.len()
        )));
    }
    let used = &residuals[residuals.len().saturating_sub(window_days)..];
    let slots = used[0].len();
    if let Some(bad) = used.iter().find(|d| d.len() != slots) {
        return Err(Error::LengthMismatch {
            what: "residual day",
            expected: slots,
            actual: bad.len(),
        });
    }
    let n = used.len() as f64;
    Ok((0..slots)
        .map(|k| {
            let mean = used.iter().map(|d| d[k]).sum::<f64>() / n;
            let var = used.iter().map(|d| (d[k] - mean).powi(2)).sum::<f64>() / n;
            multiplier * var.sqrt()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mape {
    pub percent: f64,
    pub included: usize,
    /// Slots skipped because the actual value is zero.
    pub excluded: usize,
}

/// Mean absolute percentage error over slots with nonzero actual load.
pub fn mape(actual: &[f64], forecast: &[f64]) -> Result<Mape> {
    if actual.len() != forecast.len() {
        return Err(Error::LengthMismatch {
            what: "forecast",
            expected: actual.len(),
            actual: forecast.len(),
        });
    }
    let mut sum = 0.0;
    let mut included = 0;
    for (a, f) in actual.iter().zip(forecast) {
        if *a != 0.0 {
            sum += ((a - f) / a).abs();
            included += 1;
        }
    }
    if included == 0 {
        return Err(Error::Empty("MAPE slots with nonzero actual load"));
    }
    Ok(Mape {
        percent: 100.0 * sum / included as f64,
        included,
        excluded: actual.len() - included,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TD: usize = 24;

    fn calendar(days: usize) -> ExogenousFeatures {
        ExogenousFeatures::calendar(TD, days, 0, None).unwrap()
    }

    #[test]
    fn feature_layout() {
        let spec = LagSpec::new(2, 1, 1).unwrap();
        let days = 9;
        let history: Vec<f64> = (0..days * TD).map(|t| t as f64).collect();
        let exog = ExogenousFeatures::calendar(TD, days, 3, Some(vec![-4.0; days * TD])).unwrap();
        let t = 8 * TD + 5;
        let f = build_features(&history, t, &spec, &exog).unwrap();
        assert_eq!(f.len(), spec.feature_count());
        assert_eq!(f[0], (t - 1) as f64);
        assert_eq!(f[1], (t - 2) as f64);
        assert_eq!(f[2], (t - TD) as f64);
        assert_eq!(f[3], (t - 7 * TD) as f64);
        // day 8 with day 0 = Thursday(3) -> (3 + 8) % 7 = 4
        assert_eq!(&f[4..11], &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(f[11], -4.0);
        assert_eq!(f[12], 1.0);
    }

    #[test]
    fn constant_history_gives_constant_lags() {
        let spec = LagSpec::default();
        let exog = ExogenousFeatures::calendar(288, 15, 0, None).unwrap();
        let history = vec![3.5; 15 * 288];
        let f = build_features(&history, 14 * 288, &spec, &exog).unwrap();
        assert!(f[..spec.recent + spec.daily + spec.weekly].iter().all(|&v| v == 3.5));
        // daily lag reads exactly one day back
        let ramp: Vec<f64> = (0..15 * 288).map(|t| t as f64).collect();
        let f = build_features(&ramp, 14 * 288 + 7, &LagSpec::new(0, 1, 0).unwrap(), &exog).unwrap();
        assert_eq!(f[0], (14 * 288 + 7 - 288) as f64);
    }

    #[test]
    fn insufficient_history_rejected() {
        let spec = LagSpec::new(2, 1, 1).unwrap();
        let exog = calendar(9);
        let history = vec![1.0; 9 * TD];
        assert!(matches!(
            build_features(&history, 7 * TD - 1, &spec, &exog),
            Err(Error::InsufficientHistory(_))
        ));
        assert!(LagSpec::new(0, 0, 0).is_err());
    }

    #[test]
    fn constant_load_is_reproduced() {
        let spec = LagSpec::new(2, 1, 1).unwrap();
        let days = 60;
        let exog = calendar(days);
        let history = vec![7.25; days * TD];
        let model = fit(&history, &exog, &spec, 1e-9).unwrap();
        let start = spec.lookback(TD);
        let fitted = fitted_values(&model, &history, &exog, start..history.len()).unwrap();
        for y in fitted {
            assert!((y - 7.25).abs() < 1e-6, "{y}");
        }
    }

    #[test]
    fn zero_ridge_is_singular() {
        // day-of-week indicators always sum to the intercept column
        let spec = LagSpec::new(1, 0, 0).unwrap();
        let exog = calendar(10);
        let history: Vec<f64> = (0..10 * TD).map(|t| (t % 5) as f64).collect();
        assert!(matches!(fit(&history, &exog, &spec, 0.0), Err(Error::Singular { .. })));
        assert!(fit(&history, &exog, &spec, 1e-6).is_ok());
    }

    #[test]
    fn noise_free_linear_process_is_recovered() {
        // y(t) = 0.5 y(t-1) + 0.3 y(t-TD) + 0.1 * temp(t) + 2 + weekday bump
        let days = 20;
        let temp: Vec<f64> = (0..days * TD).map(|t| ((t * 7919) % 23) as f64 - 11.0).collect();
        let exog = ExogenousFeatures::calendar(TD, days, 0, Some(temp.clone())).unwrap();
        let mut y = vec![0.0; days * TD];
        for t in 0..days * TD {
            let bump = if exog.day_of_week_at(t) >= 5 { 1.5 } else { 0.0 };
            let prev = if t >= 1 { y[t - 1] } else { 0.0 };
            let daily = if t >= TD { y[t - TD] } else { 0.0 };
            y[t] = 0.5 * prev + 0.3 * daily + 0.1 * temp[t] + 2.0 + bump;
        }
        let spec = LagSpec::new(1, 1, 0).unwrap();
        let model = fit_range(&y, &exog, &spec, 1e-10, TD..y.len()).unwrap();
        let fitted = fitted_values(&model, &y, &exog, TD..y.len()).unwrap();
        let worst = fitted.iter().zip(&y[TD..]).map(|(f, a)| (f - a).abs()).fold(0.0, f64::max);
        assert!(worst <= 1e-8, "worst residual {worst}");
        assert!((model.temperature_coefficient() - 0.1).abs() < 1e-8);
    }

    #[test]
    fn periodic_history_repeats_last_day() {
        let days = 12;
        let day: Vec<f64> = (0..TD).map(|k| 10.0 + 5.0 * (k as f64 / TD as f64 * std::f64::consts::TAU).sin()).collect();
        let history: Vec<f64> = (0..days).flat_map(|_| day.clone()).collect();
        let exog = calendar(days + 1);
        let spec = LagSpec::new(2, 1, 0).unwrap();
        let model = fit(&history, &exog, &spec, 1e-6).unwrap();
        let pred = predict_day(&model, &history, &exog, days * TD).unwrap();
        assert_eq!(pred.len(), TD);
        for (p, a) in pred.iter().zip(&day) {
            assert!((p - a).abs() < 1e-3, "{p} vs {a}");
        }
    }

    #[test]
    fn zero_history_predicts_zero_and_clamps() {
        let days = 10;
        let exog = calendar(days + 1);
        let spec = LagSpec::new(1, 1, 0).unwrap();
        let zeros = vec![0.0; days * TD];
        let model = fit(&zeros, &exog, &spec, 1e-3).unwrap();
        assert!(predict_day(&model, &zeros, &exog, days * TD).unwrap().iter().all(|&v| v == 0.0));

        let negative = ForecastModel {
            lag_spec: spec,
            ridge: 0.0,
            slots_per_day: TD,
            coefficients: {
                let mut c = vec![0.0; spec.feature_count()];
                *c.last_mut().unwrap() = -5.0;
                c
            },
        };
        let pred = predict_day(&negative, &zeros, &exog, days * TD).unwrap();
        assert!(pred.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn predict_day_checks_inputs() {
        let exog = calendar(3);
        let spec = LagSpec::new(1, 1, 0).unwrap();
        let model = ForecastModel {
            lag_spec: spec,
            ridge: 0.0,
            slots_per_day: TD,
            coefficients: vec![0.0; spec.feature_count()],
        };
        let h = vec![1.0; 3 * TD];
        assert!(matches!(predict_day(&model, &h, &exog, 0), Err(Error::InsufficientHistory(_))));
        assert!(matches!(predict_day(&model, &h, &exog, 3 * TD), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn model_json_round_trip_and_validation() {
        let spec = LagSpec::new(1, 1, 0).unwrap();
        let model = ForecastModel {
            lag_spec: spec,
            ridge: 1e-3,
            slots_per_day: TD,
            coefficients: (0..spec.feature_count()).map(|i| i as f64 * 0.25).collect(),
        };
        let text = model.to_json().unwrap();
        assert_eq!(ForecastModel::from_json(&text).unwrap(), model);
        let bad = text.replace("\"slots_per_day\": 24", "\"slots_per_day\": 0");
        assert!(ForecastModel::from_json(&bad).is_err());
    }

    #[test]
    fn deviation_examples() {
        let zeros = vec![vec![0.0; 4]; 10];
        assert_eq!(estimate_deviation(&zeros, 28, 1.5).unwrap(), vec![0.0; 4]);

        let constant = vec![vec![3.0, -1.0]; 8];
        assert_eq!(estimate_deviation(&constant, 28, 1.0).unwrap(), vec![0.0, 0.0]);

        let alternating: Vec<Vec<f64>> = (0..8).map(|d| vec![if d % 2 == 0 { -2.5 } else { 2.5 }]).collect();
        let s = estimate_deviation(&alternating, 8, 1.0).unwrap();
        assert!((s[0] - 2.5).abs() < 1e-15);

        assert!(matches!(estimate_deviation(&zeros, 6, 1.0), Err(Error::Config(_))));
        assert!(matches!(estimate_deviation(&zeros[..6], 28, 1.0), Err(Error::InsufficientHistory(_))));
    }

    #[test]
    fn deviation_uses_trailing_window() {
        let mut r: Vec<Vec<f64>> = (0..7).map(|d| vec![if d % 2 == 0 { -100.0 } else { 100.0 }]).collect();
        r.extend(std::iter::repeat_n(vec![1.0], 7));
        assert_eq!(estimate_deviation(&r, 7, 2.0).unwrap(), vec![0.0]);
    }

    #[test]
    fn mape_examples() {
        assert_eq!(mape(&[5.0, 6.0], &[5.0, 6.0]).unwrap().percent, 0.0);
        assert!((mape(&[100.0; 4], &[90.0; 4]).unwrap().percent - 10.0).abs() < 1e-12);
        assert!((mape(&[100.0, 200.0], &[110.0, 180.0]).unwrap().percent - 10.0).abs() < 1e-12);
        let m = mape(&[0.0, 50.0], &[3.0, 25.0]).unwrap();
        assert_eq!((m.included, m.excluded), (1, 1));
        assert!((m.percent - 50.0).abs() < 1e-12);
        assert!(matches!(mape(&[0.0], &[1.0]), Err(Error::Empty(_))));
        assert!(mape(&[1.0], &[1.0, 2.0]).is_err());
    }
}
