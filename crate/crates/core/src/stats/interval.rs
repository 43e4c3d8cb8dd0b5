//! Confidence intervals and five-number summaries.

use super::StatsError;
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

fn check_level(level: f64) -> Result<(), StatsError> {
    if !(level > 0.0 && level < 1.0) {
        return Err(StatsError::Validation(format!(
            "confidence level must lie in (0, 1), got {level}"
        )));
    }
    Ok(())
}

/// Normal-approximation interval for a binomial proportion:
/// `p_hat ± z sqrt(p_hat (1 - p_hat) / n)`, clipped to [0, 1]. At the 0.95
/// level z = 1.959964. Degenerate counts (k = 0 or k = n) collapse to a
/// zero-width interval at the point estimate.
pub fn proportion_ci(k: usize, n: usize, level: f64) -> Result<(f64, f64, f64), StatsError> {
    if n == 0 {
        return Err(StatsError::Validation("no trials".into()));
    }
    if k > n {
        return Err(StatsError::Validation(format!(
            "{k} successes out of {n} trials"
        )));
    }
    check_level(level)?;
    let p_hat = k as f64 / n as f64;
    let z = Normal::new(0.0, 1.0)
        .expect("unit normal")
        .inverse_cdf(1.0 - (1.0 - level) / 2.0);
    let half = z * (p_hat * (1.0 - p_hat) / n as f64).sqrt();
    Ok((p_hat, (p_hat - half).max(0.0), (p_hat + half).min(1.0)))
}

/// Student-t interval for a mean: `mean ± t_{n-1} s / sqrt(n)`. Needs at
/// least two values; a constant sample yields a zero-width interval.
pub fn mean_ci(values: &[f64], level: f64) -> Result<(f64, f64, f64), StatsError> {
    if values.len() < 2 {
        return Err(StatsError::InsufficientData(format!(
            "a mean interval needs at least 2 values, got {}",
            values.len()
        )));
    }
    if !values.iter().all(|v| v.is_finite()) {
        return Err(StatsError::Validation("non-finite value".into()));
    }
    check_level(level)?;
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let t = StudentsT::new(0.0, 1.0, n - 1.0)
        .expect("t distribution")
        .inverse_cdf(1.0 - (1.0 - level) / 2.0);
    let half = t * (var / n).sqrt();
    Ok((mean, mean - half, mean + half))
}

/// Five-number summary plus whiskers and outliers for one group.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxplotSummary {
    pub group: String,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    /// Most extreme values still within 1.5 IQR of the quartiles — where
    /// the whisker caps are drawn.
    pub whisker_low: f64,
    pub whisker_high: f64,
    /// Values beyond the whiskers, ascending.
    pub outliers: Vec<f64>,
}

/// Box-plot statistics per group. Quartiles interpolate linearly between
/// order statistics (at h = (n-1)q); whiskers extend to the last value
/// within 1.5 IQR of the box and everything beyond them is an outlier.
pub fn boxplot_stats(groups: &[(String, Vec<f64>)]) -> Result<Vec<BoxplotSummary>, StatsError> {
    groups
        .iter()
        .map(|(name, values)| {
            if values.is_empty() {
                return Err(StatsError::Validation(format!("group `{name}` is empty")));
            }
            if !values.iter().all(|v| v.is_finite()) {
                return Err(StatsError::Validation(format!(
                    "non-finite value in group `{name}`"
                )));
            }
            let mut sorted = values.clone();
            sorted.sort_by(f64::total_cmp);
            let q1 = quantile(&sorted, 0.25);
            let median = quantile(&sorted, 0.5);
            let q3 = quantile(&sorted, 0.75);
            let reach = 1.5 * (q3 - q1);
            let (lo_fence, hi_fence) = (q1 - reach, q3 + reach);
            let whisker_low = *sorted
                .iter()
                .find(|&&v| v >= lo_fence)
                .expect("q1 is within the fences");
            let whisker_high = *sorted
                .iter()
                .rev()
                .find(|&&v| v <= hi_fence)
                .expect("q3 is within the fences");
            let outliers = sorted
                .iter()
                .copied()
                .filter(|&v| v < lo_fence || v > hi_fence)
                .collect();
            Ok(BoxplotSummary {
                group: name.clone(),
                min: sorted[0],
                q1,
                median,
                q3,
                max: sorted[sorted.len() - 1],
                whisker_low,
                whisker_high,
                outliers,
            })
        })
        .collect()
}

/// Linear interpolation between order statistics: index h = (n-1)q.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if frac == 0.0 || lo + 1 == sorted.len() {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}
