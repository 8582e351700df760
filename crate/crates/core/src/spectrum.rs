//! Legendre transform of the pressure curve and the level-set dimension
//! formulas built on it.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::maps::MapModel;
use crate::numeric::golden_min;
use crate::pressure::{
    d_zero, degeneracy_test, oracle::pressure_matrix_oracle, subsystem, DZero, PressureEngine,
    PressureOptions,
};
use crate::symbolic::Language;

const D_TOL: f64 = 1e-10;
const ENDPOINT_TOL: f64 = 1e-6;
const CASE_STEP: f64 = 1e-3;
const CASE_THRESHOLD: f64 = 1e-2;

/// Anything that can evaluate `d ↦ P(-d log|f'|)`.
pub trait PressureSource: Sync {
    fn pressure(&self, d: f64) -> f64;

    fn d_big(&self) -> f64 {
        40.0
    }

    /// `(α⁻, α⁺)` from the slopes of `P` at `±d_big`.
    fn exponent_range(&self) -> (f64, f64) {
        let b = self.d_big();
        (
            -(self.pressure(b) - self.pressure(b - 1.0)),
            -(self.pressure(-b + 1.0) - self.pressure(-b)),
        )
    }
}

impl PressureSource for PressureEngine {
    fn pressure(&self, d: f64) -> f64 {
        self.value(d)
    }

    fn d_big(&self) -> f64 {
        self.options().d_big
    }
}

/// Exact pressure of a piecewise linear model through the matrix oracle.
pub struct OraclePressure {
    pub model: MapModel,
    pub language: Language,
}

impl OraclePressure {
    pub fn new(model: &MapModel) -> Result<Self> {
        if !model.is_linear() {
            return Err(Error::Precondition("matrix oracle needs a piecewise linear model".into()));
        }
        Ok(Self {
            model: model.clone(),
            language: model.language(),
        })
    }
}

impl PressureSource for OraclePressure {
    fn pressure(&self, d: f64) -> f64 {
        pressure_matrix_oracle(&self.model, &self.language, d).unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LegendreValue {
    pub alpha: f64,
    /// `-inf` outside the spectrum.
    pub f: f64,
    pub minimizer: f64,
    /// False when the minimizer sits on `±d_big`, i.e. `F` is a limit value.
    pub attained: bool,
}

fn infimum(src: &dyn PressureSource, alpha: f64) -> LegendreValue {
    let big = src.d_big();
    let g = |d: f64| src.pressure(d) + alpha * d;
    let (d, v) = golden_min(g, -big, big, D_TOL);
    let edge = g(big.copysign(d));
    let attained = edge > v + 1e-9 * (1.0 + v.abs());
    LegendreValue {
        alpha,
        f: v / alpha,
        minimizer: d,
        attained,
    }
}

/// `F(α) = (1/α) inf_d (P(d) + αd)`.
pub fn legendre_f(src: &dyn PressureSource, alpha: f64) -> Result<LegendreValue> {
    legendre_f_in(src, alpha, src.exponent_range())
}

pub fn legendre_f_in(src: &dyn PressureSource, alpha: f64, range: (f64, f64)) -> Result<LegendreValue> {
    if !(alpha > 0.0) {
        return Err(Error::Precondition(format!("Legendre transform needs α > 0, got {alpha}")));
    }
    let tol = ENDPOINT_TOL * (1.0 + range.1.abs());
    if alpha < range.0 - tol || alpha > range.1 + tol {
        return Ok(LegendreValue {
            alpha,
            f: f64::NEG_INFINITY,
            minimizer: f64::NAN,
            attained: false,
        });
    }
    Ok(infimum(src, alpha))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumCase {
    Hyperbolic,
    ParabolicI,
    ParabolicII,
}

impl std::fmt::Display for SpectrumCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SpectrumCase::Hyperbolic => "hyperbolic",
            SpectrumCase::ParabolicI => "parabolic-I",
            SpectrumCase::ParabolicII => "parabolic-II",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumCurve {
    pub points: Vec<LegendreValue>,
    pub f0: DZero,
    pub alpha_minus: f64,
    pub alpha_plus: f64,
    pub case: SpectrumCase,
    /// One-sided finite-difference `P'(d₀⁻)`, parabolic systems only.
    pub left_derivative: Option<f64>,
    pub alpha_plateau: Option<f64>,
}

impl SpectrumCurve {
    pub fn max_f(&self) -> f64 {
        self.points.iter().map(|p| p.f).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Midpoint concavity on consecutive triples.
    pub fn is_concave(&self, tol: f64) -> bool {
        self.points
            .windows(3)
            .all(|w| w[1].f + tol >= 0.5 * (w[0].f + w[2].f))
    }
}

/// Case classification from the left derivative of `P` at `d₀`.
pub fn classify(engine: &PressureEngine, f0: &DZero) -> (SpectrumCase, Option<f64>, Option<f64>) {
    if !engine.is_parabolic() {
        return (SpectrumCase::Hyperbolic, None, None);
    }
    let d0 = f0.hi;
    let slope = (engine.value(d0) - engine.value(d0 - CASE_STEP)) / CASE_STEP;
    if slope.abs() < CASE_THRESHOLD {
        (SpectrumCase::ParabolicI, Some(slope), None)
    } else {
        (SpectrumCase::ParabolicII, Some(slope), Some(-slope))
    }
}

pub fn spectrum_curve(engine: &PressureEngine, steps: usize) -> Result<SpectrumCurve> {
    if degeneracy_test(engine) {
        return Err(Error::Degenerate(format!(
            "{}: log|f'| is cohomologous to a constant, so the spectrum is a single point",
            engine.model().name()
        )));
    }
    let f0 = d_zero(engine, 1e-3)?;
    let (alpha_minus, alpha_plus) = engine.exponent_range();
    let (case, left_derivative, alpha_plateau) = classify(engine, &f0);
    let alphas = crate::pressure::grid(alpha_minus, alpha_plus, steps.max(2));
    let points = alphas
        .par_iter()
        .map(|&a| {
            if a <= 0.0 {
                Ok(LegendreValue {
                    alpha: 0.0,
                    f: f0.estimate,
                    minimizer: f0.estimate,
                    attained: false,
                })
            } else {
                legendre_f_in(engine, a, (alpha_minus, alpha_plus))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumCurve {
        points,
        f0,
        alpha_minus,
        alpha_plus,
        case,
        left_derivative,
        alpha_plateau,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelSetDims {
    /// `dim 𝓛̂(α, β) = max F` on the interval.
    pub irregular: f64,
    /// `dim 𝓛(α, β) = min F` on the interval.
    pub regular: f64,
    pub argmax: f64,
}

/// Dimensions of the level sets with exponents between `alpha` and `beta`.
///
/// `F` is concave, so the minimum over an interval sits at an endpoint and
/// the maximum is found by golden-section search.
pub fn dim_level_sets(engine: &PressureEngine, alpha: f64, beta: f64) -> Result<LevelSetDims> {
    if !(alpha >= 0.0 && beta >= alpha && beta > 0.0) {
        return Err(Error::Precondition(format!("need 0 ≤ α ≤ β, β > 0; got ({alpha}, {beta})")));
    }
    let (am, ap) = engine.exponent_range();
    let tol = ENDPOINT_TOL * (1.0 + ap.abs());
    let a = alpha.max(am);
    let b = beta.min(ap);
    if a > b + tol {
        return Err(Error::EmptyLevelSet(alpha, beta));
    }
    let b = b.max(a);
    let f0 = if a <= 0.0 { Some(d_zero(engine, 1e-3)?.estimate) } else { None };
    let f = |x: f64| -> f64 {
        if x <= 0.0 {
            f0.unwrap_or(f64::NAN)
        } else {
            legendre_f_in(engine, x, (am, ap)).map(|v| v.f).unwrap_or(f64::NAN)
        }
    };
    let fa = f(a);
    let fb = f(b);
    let (argmax, fmax) = if b - a < 1e-12 {
        (a, fa)
    } else {
        let (x, neg) = golden_min(|x| -f(x), a, b, 1e-9);
        let inner = -neg;
        [(a, fa), (b, fb), (x, inner)]
            .into_iter()
            .fold((a, f64::NEG_INFINITY), |acc, p| if p.1 > acc.1 { p } else { acc })
    };
    Ok(LevelSetDims {
        irregular: fmax,
        regular: fa.min(fb),
        argmax,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FmTable {
    pub alpha: f64,
    pub rows: Vec<(usize, LegendreValue)>,
    pub full: LegendreValue,
    pub gap: f64,
    pub monotone: bool,
}

/// `F_m(α)` along a ladder of subsystems.
pub fn check_fm_convergence(model: &MapModel, alpha: f64, levels: &[usize], opts: &PressureOptions) -> Result<FmTable> {
    let full_engine = PressureEngine::new(model, opts.clone())?;
    let (am, ap) = full_engine.exponent_range();
    if !(alpha > am && alpha < ap) {
        return Err(Error::Precondition(format!(
            "α = {alpha} outside the open spectrum ({am}, {ap})"
        )));
    }
    let full = legendre_f_in(&full_engine, alpha, (am, ap))?;
    let mut rows = Vec::new();
    for &m in levels {
        let sub = subsystem(model, m)?;
        let e = PressureEngine::for_subsystem(model, &sub, opts.clone())?;
        rows.push((m, legendre_f(&e, alpha)?));
    }
    let monotone = rows.windows(2).all(|w| w[1].1.f >= w[0].1.f - 1e-6);
    let gap = rows.last().map(|r| full.f - r.1.f).unwrap_or(f64::NAN);
    Ok(FmTable {
        alpha,
        rows,
        full,
        gap,
        monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gc24_stationary_point() {
        let e = PressureEngine::new(&MapModel::gc24(), PressureOptions::default()).unwrap();
        let v = legendre_f(&e, 1.5 * 2f64.ln()).unwrap();
        assert!((v.f - 2.0 / 3.0).abs() < 1e-9);
        assert!(v.minimizer.abs() < 1e-6 && v.attained, "{v:?}");
        let end = legendre_f(&e, 2f64.ln()).unwrap();
        assert!(end.f.abs() < 1e-3 && !end.attained);
        assert_eq!(legendre_f(&e, 0.5).unwrap().f, f64::NEG_INFINITY);
    }

    #[test]
    fn doubling_is_refused() {
        let e = PressureEngine::new(&MapModel::doubling(), PressureOptions::default()).unwrap();
        let v = legendre_f(&e, 2f64.ln()).unwrap();
        assert!((v.f - 1.0).abs() < 1e-9);
        assert!(matches!(spectrum_curve(&e, 10), Err(Error::Degenerate(_))));
    }

    #[test]
    fn oracle_source_agrees() {
        let g = MapModel::gc24();
        let o = OraclePressure::new(&g).unwrap();
        let e = PressureEngine::new(&g, PressureOptions::default()).unwrap();
        for a in [0.75, 0.9, 1.1, 1.3] {
            let x = legendre_f(&o, a).unwrap().f;
            let y = legendre_f(&e, a).unwrap().f;
            assert!((x - y).abs() < 1e-8);
        }
    }
}
