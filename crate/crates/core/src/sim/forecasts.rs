use rayon::prelude::*;

use super::dataset::Dataset;
use crate::config::ForecastConfig;
use crate::forecast::{estimate_deviation, fit_range, mape, predict_day, ExogenousFeatures, Mape};
use crate::{Error, Result};

/// Day-ahead forecasts and deviation bands for a run of consecutive days.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastSet {
    pub first_day: usize,
    pub days: usize,
    pub slots_per_day: usize,
    /// `mean[unit]` holds `days * slots_per_day` values.
    mean: Vec<Vec<f64>>,
    sigma: Vec<Vec<f64>>,
    /// Forecast error per transformer over the run, `None` when every actual is zero.
    pub mape: Vec<Option<Mape>>,
    /// Error of copying the previous day, for comparison.
    pub persistence_mape: Vec<Option<Mape>>,
}

impl ForecastSet {
    pub fn mean(&self, unit: usize, day: usize) -> &[f64] {
        let k = day - self.first_day;
        &self.mean[unit][k * self.slots_per_day..(k + 1) * self.slots_per_day]
    }

    pub fn sigma(&self, unit: usize, day: usize) -> &[f64] {
        let k = day - self.first_day;
        &self.sigma[unit][k * self.slots_per_day..(k + 1) * self.slots_per_day]
    }

    pub fn units(&self) -> usize {
        self.mean.len()
    }

    #[cfg(test)]
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        first_day: usize,
        days: usize,
        slots_per_day: usize,
        mean: Vec<Vec<f64>>,
        sigma: Vec<Vec<f64>>,
        mape: Vec<Option<Mape>>,
        persistence_mape: Vec<Option<Mape>>,
    ) -> Self {
        ForecastSet {
            first_day,
            days,
            slots_per_day,
            mean,
            sigma,
            mape,
            persistence_mape,
        }
    }

    /// Actual loads as the forecast with zero deviation.
    pub fn perfect(data: &Dataset, first_day: usize, days: usize) -> Result<Self> {
        check_span(data, first_day, days)?;
        let td = data.slots_per_day();
        let range = first_day * td..(first_day + days) * td;
        let mean: Vec<Vec<f64>> = data.loads.iter().map(|l| l.values()[range.clone()].to_vec()).collect();
        let sigma = vec![vec![0.0; range.len()]; data.loads.len()];
        let errors = mean.iter().map(|m| mape(m, m).ok()).collect();
        let persistence = data
            .loads
            .iter()
            .map(|l| {
                let v = l.values();
                (first_day > 0)
                    .then(|| mape(&v[range.clone()], &v[range.start - td..range.end - td]).ok())
                    .flatten()
            })
            .collect();
        Ok(ForecastSet {
            first_day,
            days,
            slots_per_day: td,
            mape: errors,
            persistence_mape: persistence,
            mean,
            sigma,
        })
    }
}

fn check_span(data: &Dataset, first_day: usize, days: usize) -> Result<()> {
    if days == 0 || first_day + days > data.days() {
        return Err(Error::InsufficientHistory(format!(
            "days {first_day}..{} outside the {} days of data",
            first_day + days,
            data.days()
        )));
    }
    Ok(())
}

/// Rolling day-ahead forecasts for days `first_day..first_day + days`.
///
/// The model is refitted every `refit_every_days` on the trailing training window.
/// Deviation bands come from the residuals of earlier day-ahead forecasts; the
/// first bands use a backcast over the last warmup days.
pub fn prepare_forecasts(data: &Dataset, cfg: &ForecastConfig, first_day: usize, days: usize) -> Result<ForecastSet> {
    cfg.validate()?;
    check_span(data, first_day, days)?;
    let td = data.slots_per_day();
    let lookback_days = cfg.lags.lookback(td).div_ceil(td);
    let backcast_from = first_day.saturating_sub(cfg.deviation_window_days).max(lookback_days);
    if first_day < backcast_from + 7 {
        return Err(Error::InsufficientWarmup(format!(
            "{first_day} warmup days leave fewer than 7 days to estimate deviations"
        )));
    }
    let exog = ExogenousFeatures::calendar(td, data.days(), data.first_day_of_week(), data.temperature.clone())?;

    let per_unit: Vec<Result<(Vec<f64>, Vec<f64>, Option<Mape>, Option<Mape>)>> = data
        .loads
        .par_iter()
        .map(|series| {
            let history = series.values();
            let lookback = cfg.lags.lookback(td);
            let mut mean = Vec::with_capacity(days * td);
            let mut sigma = Vec::with_capacity(days * td);
            let mut residuals: Vec<Vec<f64>> = Vec::new();
            let mut model = None;
            for k in 0..days {
                let d = first_day + k;
                if k % cfg.refit_every_days == 0 {
                    let end = d * td;
                    let start = end.saturating_sub(cfg.training_window_days * td).max(lookback);
                    let m = fit_range(&history[..end], &exog, &cfg.lags, cfg.ridge, start..end)?;
                    if k == 0 {
                        for b in backcast_from..d {
                            let pred = predict_day(&m, history, &exog, b * td)?;
                            residuals.push(residual(&history[b * td..(b + 1) * td], &pred));
                        }
                    }
                    model = Some(m);
                }
                let m = model.as_ref().expect("fitted on the first day");
                let pred = predict_day(m, history, &exog, d * td)?;
                sigma.extend(estimate_deviation(&residuals, cfg.deviation_window_days, cfg.deviation_multiplier)?);
                residuals.push(residual(&history[d * td..(d + 1) * td], &pred));
                if residuals.len() > cfg.deviation_window_days {
                    residuals.remove(0);
                }
                mean.extend(pred);
            }
            let actual = &history[first_day * td..(first_day + days) * td];
            let previous = &history[(first_day - 1) * td..(first_day + days - 1) * td];
            let err = mape(actual, &mean).ok();
            Ok((mean, sigma, err, mape(actual, previous).ok()))
        })
        .collect();

    let mut set = ForecastSet {
        first_day,
        days,
        slots_per_day: td,
        mean: Vec::with_capacity(per_unit.len()),
        sigma: Vec::with_capacity(per_unit.len()),
        mape: Vec::with_capacity(per_unit.len()),
        persistence_mape: Vec::with_capacity(per_unit.len()),
    };
    for r in per_unit {
        let (m, s, e, p) = r?;
        set.mean.push(m);
        set.sigma.push(s);
        set.mape.push(e);
        set.persistence_mape.push(p);
    }
    Ok(set)
}

fn residual(actual: &[f64], forecast: &[f64]) -> Vec<f64> {
    actual.iter().zip(forecast).map(|(a, f)| a - f).collect()
}
