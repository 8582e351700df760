//! Topological pressure of `φ_d = -d log|f'|`.
//!
//! [`PressureEngine`] owns one cylinder sweep of a model (or of a hyperbolic
//! subsystem) and answers pressure queries for any `d` from it:
//!
//! * `upper(n) = (1/n) log Σ_w sup_{Δ_w} exp(S_n φ_d)` is subadditive in `n`
//!   and bounds `P` from above at every depth;
//! * `lower(n)` uses infima instead and, when the language needs `k` steps to
//!   connect any two states, pads each block with `k - 1` connecting symbols
//!   of minimal weight, which makes it a bound from below at every depth.
//!
//! The reported value comes from a geometric extrapolation of the
//! depth-to-depth increments for linear models and from the induced
//! first-return operator for parabolic ones, clamped into the bracket.

pub mod induced;
pub mod oracle;

use std::collections::HashMap;
use std::sync::Mutex;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::maps::sweep::SweepTable;
use crate::maps::{check_sweep_budget, MapModel, DEFAULT_GRID};
use crate::numeric::brent_root;
use crate::symbolic::{Automaton, Language, DEFAULT_MAX_WORDS};

pub use induced::InducedPressure;
pub use oracle::pressure_matrix_oracle;

/// Cap on cylinders visited by a default-depth sweep.
const SWEEP_BUDGET: u128 = 1 << 22;

#[derive(Debug, Clone, PartialEq)]
pub struct PressureOptions {
    /// Deepest level of the cylinder ladder; `None` picks 20 for linear and
    /// 18 for nonlinear models, reduced to fit the sweep budget.
    pub depth: Option<usize>,
    pub min_depth: usize,
    pub grid: usize,
    pub max_words: u64,
    /// Large-`|d|` cutoff for exponent endpoints and Legendre searches.
    pub d_big: f64,
    pub induced_nodes: usize,
    pub induced_terms: usize,
}

impl Default for PressureOptions {
    fn default() -> Self {
        Self {
            depth: None,
            min_depth: 4,
            grid: DEFAULT_GRID,
            max_words: DEFAULT_MAX_WORDS,
            d_big: 40.0,
            induced_nodes: induced::DEFAULT_NODES,
            induced_terms: induced::DEFAULT_TERMS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PressurePoint {
    pub d: f64,
    pub lower: f64,
    pub upper: f64,
    pub value: f64,
    pub err: f64,
    pub depth: usize,
    pub warning: Option<String>,
}

/// Hyperbolic subsystem obtained by forbidding `m` consecutive parabolic
/// symbols.
#[derive(Debug, Clone)]
pub struct Subsystem {
    pub level: usize,
    pub language: Language,
    pub uniformly_hyperbolic: bool,
    /// `min log|(f^m)'|` over the surviving depth-`m` cylinders.
    pub min_log_deriv: f64,
}

pub fn subsystem(model: &MapModel, m: usize) -> Result<Subsystem> {
    if !model.is_parabolic() {
        return Err(Error::Precondition(format!(
            "{} has no parabolic point to truncate",
            model.name()
        )));
    }
    if m < 2 {
        return Err(Error::Precondition(format!("truncation level {m} < 2")));
    }
    let mut lang = model.language();
    for p in model.parabolic_points() {
        lang = lang.forbid_run(p.symbol, m)?;
    }
    let min_log_deriv = crate::maps::sweep::sweep(
        model,
        &lang,
        m,
        2,
        || f64::INFINITY,
        |acc: &mut f64, node| {
            if node.depth == m {
                *acc = acc.min(node.smin);
            }
        },
    )
    .into_iter()
    .fold(f64::INFINITY, f64::min);
    Ok(Subsystem {
        level: m,
        language: lang,
        uniformly_hyperbolic: min_log_deriv > 0.0,
        min_log_deriv,
    })
}

pub struct PressureEngine {
    model: MapModel,
    lang: Language,
    level: Option<usize>,
    opts: PressureOptions,
    table: SweepTable,
    connect: usize,
    log_deriv_range: (f64, f64),
    induced: Option<InducedPressure>,
    cache: Mutex<HashMap<u64, PressurePoint>>,
}

impl std::fmt::Debug for PressureEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PressureEngine")
            .field("model", &self.model.name())
            .field("level", &self.level)
            .field("depth", &self.depth())
            .finish()
    }
}

fn choose_depth(model: &MapModel, lang: &Language, opts: &PressureOptions) -> Result<usize> {
    match opts.depth {
        Some(n) => {
            if n == 0 {
                return Err(Error::Precondition("pressure depth must be at least 1".into()));
            }
            check_sweep_budget(lang, n, opts.max_words)?;
            Ok(n)
        }
        None => {
            let want = if model.is_linear() { 20 } else { 18 };
            let mut total = 0u128;
            let mut n = 0;
            while n < want {
                total += lang.count_words(n + 1);
                if total > SWEEP_BUDGET && n >= opts.min_depth + 2 {
                    break;
                }
                n += 1;
            }
            Ok(n.max(1))
        }
    }
}

impl PressureEngine {
    pub fn new(model: &MapModel, opts: PressureOptions) -> Result<Self> {
        Self::build(model, model.language(), None, opts)
    }

    pub fn for_subsystem(model: &MapModel, sub: &Subsystem, opts: PressureOptions) -> Result<Self> {
        Self::build(model, sub.language.clone(), Some(sub.level), opts)
    }

    /// Engine on an arbitrary sub-language, e.g. a sub-alphabet.
    pub fn on_language(model: &MapModel, lang: Language, opts: PressureOptions) -> Result<Self> {
        if !model.is_linear() && !lang.is_unrestricted() {
            return Err(Error::Precondition(
                "restricted languages on nonlinear models go through subsystems".into(),
            ));
        }
        Self::build(model, lang, None, opts)
    }

    fn build(model: &MapModel, lang: Language, level: Option<usize>, opts: PressureOptions) -> Result<Self> {
        let depth = choose_depth(model, &lang, &opts)?;
        let grid = if model.is_linear() { 2 } else { opts.grid.max(2) };
        let table = SweepTable::build(model, &lang, depth, grid);
        let aut = Automaton::new(&lang);
        let connect = aut
            .primitivity_exponent()
            .ok_or_else(|| Error::Precondition("language is not mixing".into()))?
            - 1;
        let mut log_deriv_range = (f64::INFINITY, f64::NEG_INFINITY);
        for s in lang.allowed_symbols() {
            let b = &model.branches()[s];
            log_deriv_range.0 = log_deriv_range.0.min(b.min_log_deriv());
            log_deriv_range.1 = log_deriv_range.1.max(b.max_log_deriv());
        }
        let induced = if model.is_parabolic() && lang.allowed_symbols().len() == model.alphabet_size() {
            Some(InducedPressure::new(
                model,
                opts.induced_nodes,
                opts.induced_terms,
                level,
            )?)
        } else {
            None
        };
        Ok(Self {
            model: model.clone(),
            lang,
            level,
            opts,
            table,
            connect,
            log_deriv_range,
            induced,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn model(&self) -> &MapModel {
        &self.model
    }

    pub fn language(&self) -> &Language {
        &self.lang
    }

    pub fn level(&self) -> Option<usize> {
        self.level
    }

    pub fn options(&self) -> &PressureOptions {
        &self.opts
    }

    pub fn depth(&self) -> usize {
        self.table.max_depth()
    }

    pub fn table(&self) -> &SweepTable {
        &self.table
    }

    pub fn log_deriv_range(&self) -> (f64, f64) {
        self.log_deriv_range
    }

    /// Whether the pressure can vanish on an interval: true for parabolic
    /// systems that are not truncated.
    pub fn is_parabolic(&self) -> bool {
        self.model.is_parabolic() && self.level.is_none()
    }

    /// `ρ̂_n` from the stored sweep.
    pub fn distortion(&self, n: usize) -> f64 {
        self.table.at(n).spread / n as f64
    }

    fn min_potential(&self, d: f64) -> f64 {
        let (lo, hi) = self.log_deriv_range;
        if d >= 0.0 {
            -d * hi
        } else {
            -d * lo
        }
    }

    /// `(upper, lower)` bounds at depth `n`.
    pub fn pressure_at(&self, d: f64, n: usize) -> Result<(f64, f64)> {
        if n == 0 || n > self.depth() {
            return Err(Error::ResourceLimit(format!(
                "depth {n} outside the swept range 1..={}",
                self.depth()
            )));
        }
        let sums = self.table.at(n);
        let upper = sums.log_sum(d, true) / n as f64;
        let k = self.connect as f64;
        let lower = (sums.log_sum(d, false) + k * self.min_potential(d)) / (n as f64 + k);
        Ok((upper, lower))
    }

    pub fn value(&self, d: f64) -> f64 {
        self.extrapolated(d).value
    }

    /// Bracketed and extrapolated pressure at `d`, cached per `d`.
    pub fn extrapolated(&self, d: f64) -> PressurePoint {
        if let Some(p) = self.cache.lock().unwrap().get(&d.to_bits()) {
            return p.clone();
        }
        let p = self.compute(d);
        self.cache.lock().unwrap().insert(d.to_bits(), p.clone());
        p
    }

    fn compute(&self, d: f64) -> PressurePoint {
        let depth = self.depth();
        let first = self.opts.min_depth.clamp(1, depth);
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        let mut widths = Vec::new();
        for n in first..=depth {
            let (u, l) = self.pressure_at(d, n).expect("depth in range");
            lo = lo.max(l);
            hi = hi.min(u);
            widths.push(u - l);
        }
        let rounding = 1e-12 * (1.0 + d.abs() * self.log_deriv_range.1.abs().max(self.log_deriv_range.0.abs()));
        lo -= rounding;
        hi += rounding;
        if self.is_parabolic() {
            lo = lo.max(0.0);
        }
        let mut warning = None;
        let growing = widths.windows(2).map(|w| w[1] > w[0] + rounding).collect::<Vec<_>>();
        if growing.windows(3).any(|w| w.iter().all(|&g| g)) {
            warning = Some(format!(
                "bracket width grew over three consecutive depths at d = {d}"
            ));
        }
        let (raw, raw_err) = match &self.induced {
            Some(ind) => match ind.pressure(d, (lo, hi)) {
                Ok(v) => v,
                Err(e) => {
                    warning = Some(e.to_string());
                    (0.5 * (lo + hi), f64::INFINITY)
                }
            },
            None => self.richardson(d, rounding),
        };
        let value = raw.clamp(lo, hi);
        let cert = (value - lo).max(hi - value);
        let err = (raw_err + (raw - value).abs()).min(cert);
        PressurePoint {
            d,
            lower: lo,
            upper: hi,
            value,
            err,
            depth,
            warning,
        }
    }

    fn richardson(&self, d: f64, rounding: f64) -> (f64, f64) {
        let depth = self.depth();
        let first = self.opts.min_depth.clamp(1, depth);
        let log_z = |n: usize, max: bool| -> f64 {
            if n == 0 {
                0.0
            } else {
                self.table.at(n).log_sum(d, max)
            }
        };
        let mut incs = Vec::new();
        for n in first.max(2)..=depth {
            let rmax = log_z(n, true) - log_z(n - 1, true);
            let rmin = log_z(n, false) - log_z(n - 1, false);
            incs.push((0.5 * (rmax + rmin), 0.5 * (rmax - rmin).abs()));
        }
        let Some(&(v, half)) = incs.last() else {
            return (self.pressure_at(d, depth).map(|x| 0.5 * (x.0 + x.1)).unwrap_or(0.0), f64::INFINITY);
        };
        if incs.len() < 3 {
            return (v, f64::INFINITY);
        }
        let k = incs.len();
        let d1 = (incs[k - 1].0 - incs[k - 2].0).abs();
        let d0 = (incs[k - 2].0 - incs[k - 3].0).abs();
        let tail = if d1 <= rounding {
            0.0
        } else if d0 > 0.0 && d1 / d0 < 0.9 {
            let theta = d1 / d0;
            2.0 * d1 * theta / (1.0 - theta)
        } else {
            f64::INFINITY
        };
        (v, tail + half + rounding)
    }

    /// Pressure values on a uniform grid.
    pub fn curve(&self, d_min: f64, d_max: f64, steps: usize) -> Vec<PressurePoint> {
        grid(d_min, d_max, steps)
            .into_iter()
            .map(|d| self.extrapolated(d))
            .collect()
    }
}

pub fn grid(a: f64, b: f64, steps: usize) -> Vec<f64> {
    if steps <= 1 {
        return vec![a];
    }
    (0..steps)
        .map(|k| a + (b - a) * k as f64 / (steps - 1) as f64)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DZero {
    pub lo: f64,
    pub hi: f64,
    pub estimate: f64,
}

impl DZero {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Bracket `[lo, hi]` on `d₀ = inf{d : P(d) = 0}` with `P(lo)` provably
/// positive and `P(hi)` not distinguishable from a nonpositive value.
pub fn d_zero(engine: &PressureEngine, tol: f64) -> Result<DZero> {
    let positive = |d: f64| {
        let p = engine.extrapolated(d);
        p.value - p.err > 0.0
    };
    let mut lo = 0.0;
    if !positive(lo) {
        return Err(Error::Numerical("pressure at d = 0 is not positive".into()));
    }
    let mut hi = 1.0;
    while positive(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 64.0 {
            return Err(Error::Unbounded(hi));
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if positive(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let estimate = if engine.value(hi) < 0.0 {
        brent_root(|d| engine.value(d), lo, hi, 1e-15).unwrap_or(0.5 * (lo + hi))
    } else {
        hi
    };
    Ok(DZero { lo, hi, estimate })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaBounds {
    pub minus: f64,
    pub plus: f64,
    /// Extremes of `(1/n) S_n log|f'|` over periodic orbits.
    pub periodic_minus: f64,
    pub periodic_plus: f64,
    pub degenerate: bool,
}

/// `α± = -lim P(d)/d` as `d -> ±∞`, from slopes at `±d_big`.
pub fn alpha_bounds(engine: &PressureEngine) -> AlphaBounds {
    let big = engine.options().d_big;
    let minus = -(engine.value(big) - engine.value(big - 1.0));
    let plus = -(engine.value(-big + 1.0) - engine.value(-big));
    let (pmin, pmax) = periodic_exponents(engine.model(), engine.language(), 8);
    AlphaBounds {
        minus,
        plus,
        periodic_minus: pmin,
        periodic_plus: pmax,
        degenerate: (plus - minus).abs() < 1e-6,
    }
}

/// Minimum and maximum Lyapunov exponent over periodic orbits of period up
/// to `max_period`.
pub fn periodic_exponents(model: &MapModel, lang: &Language, max_period: usize) -> (f64, f64) {
    let parabolic: Vec<usize> = model.parabolic_points().iter().map(|p| p.symbol).collect();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for n in 1..=max_period {
        let Ok(words) = crate::symbolic::enumerate_language(lang, n, 1 << 16) else {
            break;
        };
        for w in words {
            let s = w.symbols();
            let mut twice = s.to_vec();
            twice.extend_from_slice(s);
            if !lang.is_admissible(&twice) {
                continue;
            }
            let x = if s.iter().all(|c| parabolic.contains(c)) && s.iter().all(|&c| c == s[0]) {
                model
                    .parabolic_points()
                    .iter()
                    .find(|p| p.symbol == s[0])
                    .map(|p| p.x)
                    .unwrap_or(0.0)
            } else {
                let mut x = 0.5 * (model.interval().0 + model.interval().1);
                for _ in 0..400 {
                    let mut y = x;
                    for &c in s.iter().rev() {
                        y = model.branches()[c].inverse(y);
                    }
                    if (y - x).abs() < 1e-16 {
                        x = y;
                        break;
                    }
                    x = y;
                }
                x
            };
            let mut sum = 0.0;
            let mut y = x;
            for &c in s {
                let b = &model.branches()[c];
                sum += b.log_deriv(y);
                y = b.forward(y);
            }
            let l = sum / n as f64;
            lo = lo.min(l);
            hi = hi.max(l);
        }
    }
    (lo, hi)
}

/// Whether `P` is affine on a test grid, i.e. `log|f'|` is cohomologous to a
/// constant.
pub fn degeneracy_test(engine: &PressureEngine) -> bool {
    let p0 = engine.value(0.0);
    let p1 = engine.value(1.0);
    [-2.0, -1.0, -0.5, 0.25, 0.5, 0.75, 1.5, 2.0]
        .iter()
        .all(|&d| (engine.value(d) - (p0 + d * (p1 - p0))).abs() < 1e-6)
}

#[derive(Debug, Clone, Serialize)]
pub struct PmRow {
    pub m: usize,
    pub point: PressurePoint,
}

#[derive(Debug, Clone, Serialize)]
pub struct PmTable {
    pub d: f64,
    pub rows: Vec<PmRow>,
    pub full: PressurePoint,
    pub gap: f64,
    /// `P_m` nondecreasing in `m` within error bars.
    pub monotone: bool,
    pub warnings: Vec<String>,
}

pub fn check_pm_convergence(model: &MapModel, d: f64, levels: &[usize], opts: &PressureOptions) -> Result<PmTable> {
    let full = PressureEngine::new(model, opts.clone())?.extrapolated(d);
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for &m in levels {
        let sub = subsystem(model, m)?;
        let point = PressureEngine::for_subsystem(model, &sub, opts.clone())?.extrapolated(d);
        if let Some(w) = &point.warning {
            warnings.push(format!("m = {m}: {w}"));
        }
        rows.push(PmRow { m, point });
    }
    Ok(pm_table(d, rows, full, warnings))
}

pub(crate) fn pm_table(d: f64, rows: Vec<PmRow>, full: PressurePoint, warnings: Vec<String>) -> PmTable {
    let monotone = rows.windows(2).all(|w| {
        w[1].point.value + w[1].point.err >= w[0].point.value - w[0].point.err
    });
    let gap = rows
        .last()
        .map(|r| full.value - r.point.value)
        .unwrap_or(f64::NAN);
    PmTable {
        d,
        rows,
        full,
        gap,
        monotone,
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn engine(m: &MapModel) -> PressureEngine {
        PressureEngine::new(m, PressureOptions::default()).unwrap()
    }

    #[test]
    fn gc24_depth3_hand_value() {
        let e = engine(&MapModel::gc24());
        let (u, l) = e.pressure_at(1.0, 3).unwrap();
        assert!((u - 0.75f64.ln()).abs() < 1e-14);
        assert!((l - 0.75f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn counting_at_zero() {
        let e = engine(&MapModel::fibonacci());
        let (u, _) = e.pressure_at(0.0, 10).unwrap();
        assert!((u - (144f64).ln() / 10.0).abs() < 1e-14);
    }

    #[test]
    fn gc24_half() {
        let e = engine(&MapModel::gc24());
        let p = e.extrapolated(0.5);
        let exact = (2f64.powf(-0.5) + 4f64.powf(-0.5)).ln();
        assert!((p.value - exact).abs() < 1e-12);
        assert!(p.err < 1e-10);
        assert!(p.lower <= exact && exact <= p.upper);
    }

    #[test]
    fn doubling_affine() {
        let e = engine(&MapModel::doubling());
        for d in [0.0, 0.5, 1.0, 2.0] {
            assert!((e.value(d) - (1.0 - d) * 2f64.ln()).abs() < 1e-12);
        }
        assert!(degeneracy_test(&e));
        assert!(!degeneracy_test(&engine(&MapModel::gc24())));
    }

    #[test]
    fn fibonacci_bracket_contains_oracle() {
        let f = MapModel::fibonacci();
        let e = engine(&f);
        for d in [-2.0, -1.0, 0.0, 0.5, 1.0, 2.0] {
            let exact = pressure_matrix_oracle(&f, &f.language(), d).unwrap();
            for n in 1..=e.depth() {
                let (u, l) = e.pressure_at(d, n).unwrap();
                assert!(l <= exact + 1e-13 && exact <= u + 1e-13, "d={d} n={n}: {l} {exact} {u}");
            }
            let p = e.extrapolated(d);
            assert!((p.value - exact).abs() <= p.err, "d={d}: {p:?} vs {exact}");
            assert!(p.err <= 1e-6);
        }
    }

    #[test]
    fn d_zero_gc24_and_doubling() {
        let z = d_zero(&engine(&MapModel::gc24()), 1e-3).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!(z.contains(phi.log2()) && z.width() <= 1e-3);
        assert!((z.estimate - phi.log2()).abs() < 1e-12);
        let z = d_zero(&engine(&MapModel::doubling()), 1e-3).unwrap();
        assert!(z.contains(1.0));
        assert!((z.estimate - 1.0).abs() < 1e-12);
    }

    #[test]
    fn alpha_bounds_linear() {
        let a = alpha_bounds(&engine(&MapModel::gc24()));
        assert!((a.minus - 2f64.ln()).abs() < 1e-9);
        assert!((a.plus - 4f64.ln()).abs() < 1e-9);
        assert!((a.periodic_minus - 2f64.ln()).abs() < 1e-12);
        assert!(!a.degenerate);
        let a = alpha_bounds(&engine(&MapModel::doubling()));
        assert!(a.degenerate);
    }

    #[test]
    fn subsystem_words() {
        let m = MapModel::manneville_pomeau(1.0).unwrap();
        let s3 = subsystem(&m, 3).unwrap();
        assert_eq!(s3.language.count_words(4), 13);
        assert!(s3.uniformly_hyperbolic);
        let s2 = subsystem(&m, 2).unwrap();
        assert!(s2.language.is_admissible(&[0, 1, 0, 1, 1]));
        assert!(!s2.language.is_admissible(&[1, 0, 0]));
        assert!(subsystem(&MapModel::gc24(), 3).is_err());
    }
}
