//! Growth rates of cylinder counts, and the zero-exponent set.
//!
//! Under expansivity, `(n, ε)`-separated sets can be read off depth-`n`
//! cylinders, so every entropy here is a growth rate of counts of cylinders
//! passing a predicate.

use std::ops::RangeInclusive;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::maps::sweep::{sweep, Node};
use crate::maps::{check_sweep_budget, MapModel};
use crate::numeric::linear_fit;
use crate::pressure::{d_zero, DZero, PressureEngine, PressureOptions};
use crate::symbolic::{Language, DEFAULT_MAX_WORDS};

pub const EPSILON_LADDER: [f64; 4] = [0.2, 0.1, 0.05, 0.02];
pub const DEFAULT_DEPTHS: RangeInclusive<usize> = 6..=16;

/// Counts of depth-`n` cylinders passing `keep`, for every `n` in `depths`.
pub fn count_cylinders(
    model: &MapModel,
    lang: &Language,
    depths: RangeInclusive<usize>,
    keep: impl Fn(&Node) -> bool + Sync,
) -> Result<Vec<u128>> {
    let (lo, hi) = (*depths.start(), *depths.end());
    if lo == 0 || hi < lo {
        return Err(Error::Precondition(format!("bad depth range {lo}..={hi}")));
    }
    check_sweep_budget(lang, hi, DEFAULT_MAX_WORDS)?;
    let parts = sweep(
        model,
        lang,
        hi,
        2,
        || vec![0u128; hi + 1],
        |acc: &mut Vec<u128>, node| {
            if node.depth >= lo && keep(node) {
                acc[node.depth] += 1;
            }
        },
    );
    Ok((lo..=hi)
        .map(|n| parts.iter().map(|p| p[n]).sum())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthRates {
    /// Least-squares slope of `log max(count, 1)` on the top half.
    pub slope: f64,
    /// Smallest and largest successive log-count difference on the top half.
    pub lower: f64,
    pub upper: f64,
}

fn growth(depths: &[usize], counts: &[u128]) -> GrowthRates {
    let half = depths.len() / 2;
    let xs: Vec<f64> = depths[half..].iter().map(|&n| n as f64).collect();
    let ys: Vec<f64> = counts[half..].iter().map(|&c| (c.max(1) as f64).ln()).collect();
    let slope = if xs.len() >= 2 { linear_fit(&xs, &ys).0 } else { 0.0 };
    let start = half.max(1);
    let mut lower = f64::INFINITY;
    let mut upper = f64::NEG_INFINITY;
    for k in start..counts.len() {
        let step = (depths[k] - depths[k - 1]) as f64;
        let r = ((counts[k].max(1) as f64).ln() - (counts[k - 1].max(1) as f64).ln()) / step;
        lower = lower.min(r);
        upper = upper.max(r);
    }
    if !lower.is_finite() {
        lower = slope;
        upper = slope;
    }
    GrowthRates { slope, lower, upper }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverCount {
    pub epsilon: f64,
    pub depths: Vec<usize>,
    pub counts: Vec<u128>,
    pub rates: GrowthRates,
    /// `log(1 + ε)`.
    pub bound: f64,
}

impl CoverCount {
    /// Whether `count ≤ 2 |I| (1+ε)^n` at every depth.
    pub fn within_certificate(&self, interval_length: f64) -> bool {
        self.depths.iter().zip(&self.counts).all(|(&n, &c)| {
            (c as f64) <= 2.0 * interval_length * (1.0 + self.epsilon).powi(n as i32)
        })
    }
}

/// Depth-`n` cylinders with `|Δ_n| ≥ (1+ε)^{-n}`.
pub fn level0_cover_count(model: &MapModel, epsilon: f64, depths: RangeInclusive<usize>) -> Result<CoverCount> {
    if !(epsilon > 0.0) {
        return Err(Error::Precondition(format!("ε must be positive, got {epsilon}")));
    }
    let log_base = (1.0 + epsilon).ln();
    let counts = count_cylinders(model, &model.language(), depths.clone(), |node| {
        node.length().ln() >= -(node.depth as f64) * log_base
    })?;
    let ds: Vec<usize> = depths.collect();
    Ok(CoverCount {
        epsilon,
        rates: growth(&ds, &counts),
        depths: ds,
        counts,
        bound: log_base,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacitiveEntropy {
    pub depths: Vec<usize>,
    pub counts: Vec<u128>,
    pub lower: f64,
    pub upper: f64,
    pub slope: f64,
}

/// Lower and upper growth rates of the cylinders selected by `keep`, which
/// sees the word and the cylinder endpoints.
pub fn capacitive_entropy(
    model: &MapModel,
    lang: &Language,
    depths: RangeInclusive<usize>,
    keep: impl Fn(&[usize], f64, f64) -> bool + Sync,
) -> Result<CapacitiveEntropy> {
    let counts = count_cylinders(model, lang, depths.clone(), |node| {
        let w = node.word();
        keep(w.symbols(), node.lo(), node.hi())
    })?;
    let ds: Vec<usize> = depths.collect();
    let g = growth(&ds, &counts);
    Ok(CapacitiveEntropy {
        depths: ds,
        counts,
        lower: g.lower,
        upper: g.upper,
        slope: g.slope,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem2Report {
    pub model: String,
    pub level0_empty: bool,
    pub d0: DZero,
    /// `dim_H Λ` when the map tiles its interval, `None` otherwise.
    pub dim_lambda: Option<f64>,
    pub ladder: Vec<CoverCount>,
    /// Slopes nonincreasing as `ε` shrinks.
    pub slopes_monotone: bool,
}

impl Theorem2Report {
    pub fn f0_contains_dim(&self) -> Option<bool> {
        self.dim_lambda.map(|d| self.d0.contains(d))
    }
}

pub fn theorem2_report(
    model: &MapModel,
    ladder: &[f64],
    depths: RangeInclusive<usize>,
    opts: &PressureOptions,
    d0_tol: f64,
) -> Result<Theorem2Report> {
    let engine = PressureEngine::new(model, opts.clone())?;
    let d0 = d_zero(&engine, d0_tol)?;
    let level0_empty = !model.is_parabolic();
    let counts = ladder
        .iter()
        .map(|&eps| level0_cover_count(model, eps, depths.clone()))
        .collect::<Result<Vec<_>>>()?;
    let mut sorted: Vec<&CoverCount> = counts.iter().collect();
    sorted.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon));
    let slopes_monotone = sorted
        .windows(2)
        .all(|w| w[1].rates.slope <= w[0].rates.slope + 1e-12);
    Ok(Theorem2Report {
        model: model.name().to_string(),
        level0_empty,
        d0,
        dim_lambda: model.full_interval().then_some(1.0),
        ladder: counts,
        slopes_monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_shift_rates() {
        let g = MapModel::gc24();
        let c = capacitive_entropy(&g, &g.language(), 4..=12, |_, _, _| true).unwrap();
        assert!((c.lower - 2f64.ln()).abs() < 1e-12 && (c.upper - 2f64.ln()).abs() < 1e-12);
        let f = MapModel::fibonacci();
        let c = capacitive_entropy(&f, &f.language(), 6..=16, |_, _, _| true).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((c.slope - phi.ln()).abs() < 1e-3);
    }

    #[test]
    fn doubling_has_no_slow_cylinders() {
        let c = level0_cover_count(&MapModel::doubling(), 0.2, 4..=12).unwrap();
        assert!(c.counts.iter().all(|&x| x == 0));
    }

    #[test]
    fn mp_slopes_below_bound() {
        let m = MapModel::manneville_pomeau(1.0).unwrap();
        let c = level0_cover_count(&m, 0.2, 6..=14).unwrap();
        assert!(c.rates.slope <= c.bound + 0.05);
        assert!(c.within_certificate(1.0));
    }
}
