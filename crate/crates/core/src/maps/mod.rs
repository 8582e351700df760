//! Markov interval maps: branch geometry, cylinders, Birkhoff sums of
//! `log|f'|` and distortion estimates.

mod branch;
pub mod sweep;

pub use branch::Branch;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::symbolic::{Language, TransitionMatrix, Word};

/// Default number of grid points per cylinder.
pub const DEFAULT_GRID: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParabolicPoint {
    pub symbol: usize,
    pub x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    MannevillePomeau { s: f64 },
    LinearSft,
    ParabolicLinearBlend { s: f64, split: f64 },
}

#[derive(Debug, Clone)]
pub struct MapModel {
    name: String,
    family: Family,
    matrix: TransitionMatrix,
    branches: Vec<Branch>,
    parabolic: Vec<ParabolicPoint>,
    full_interval: bool,
    interval: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cylinder {
    pub lo: f64,
    pub hi: f64,
}

impl Cylinder {
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, other: &Cylinder) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitSum {
    pub sum: f64,
    pub average: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistortionEstimate {
    pub depths: Vec<usize>,
    pub rho: Vec<f64>,
}

impl DistortionEstimate {
    pub fn at(&self, n: usize) -> Option<f64> {
        self.depths.iter().position(|&d| d == n).map(|k| self.rho[k])
    }
}

/// Positive root of `x + x^(1+s) = 1`.
pub fn mp_branch_point(s: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut x = 0.6f64;
    for _ in 0..200 {
        let r = x + x.powf(1.0 + s) - 1.0;
        if r > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let mut next = x - r / (1.0 + (1.0 + s) * x.powf(s));
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() < 1e-17 {
            return next;
        }
        x = next;
    }
    x
}

impl MapModel {
    fn validated(
        name: &str,
        family: Family,
        matrix: TransitionMatrix,
        branches: Vec<Branch>,
    ) -> Result<Self> {
        if branches.len() != matrix.size() {
            return Err(Error::Schema(format!(
                "{} branches for a {}-symbol transition matrix",
                branches.len(),
                matrix.size()
            )));
        }
        let lo = branches.iter().map(|b| b.domain().0).fold(f64::INFINITY, f64::min);
        let hi = branches
            .iter()
            .map(|b| b.domain().1)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut order: Vec<usize> = (0..branches.len()).collect();
        order.sort_by(|&a, &b| branches[a].domain().0.total_cmp(&branches[b].domain().0));
        for (k, b) in branches.iter().enumerate() {
            let (a, e) = b.domain();
            if !(a.is_finite() && e.is_finite() && a < e) {
                return Err(Error::Schema(format!("branch {k} has an empty domain [{a}, {e}]")));
            }
        }
        for w in order.windows(2) {
            if branches[w[0]].domain().1 > branches[w[1]].domain().0 + 1e-15 {
                return Err(Error::Schema(format!(
                    "branch intervals {} and {} have overlapping interiors",
                    w[0], w[1]
                )));
            }
        }
        let mut parabolic = Vec::new();
        for (k, b) in branches.iter().enumerate() {
            match *b {
                Branch::Linear { domain, slope, base } => {
                    if !(slope > 1.0) {
                        return Err(Error::Schema(format!(
                            "branch {k} has slope {slope} <= 1 without a parabolic point"
                        )));
                    }
                    if domain.0 + (hi - base) / slope > domain.1 + 1e-12 {
                        return Err(Error::Schema(format!(
                            "branch {k} with slope {slope} cannot map [{}, {}] onto the hull [{lo}, {hi}]",
                            domain.0, domain.1
                        )));
                    }
                }
                Branch::Power {
                    domain,
                    coef,
                    s,
                    shift,
                } => {
                    if !(coef > 0.0 && s > 0.0 && domain.0 >= 0.0) {
                        return Err(Error::Schema(format!(
                            "branch {k} needs positive coefficient and exponent on a nonnegative domain"
                        )));
                    }
                    if domain.0 == 0.0 {
                        if shift != 0.0 {
                            return Err(Error::Schema(format!(
                                "branch {k} has unit derivative at 0 but 0 is not fixed"
                            )));
                        }
                        parabolic.push(ParabolicPoint { symbol: k, x: 0.0 });
                    }
                }
            }
            let (a, e) = b.domain();
            let (ga, ge) = (b.inverse(lo), b.inverse(hi));
            if b.forward(ga) < lo - 1e-12 || b.forward(ge) > hi + 1e-12 || ga < a || ge > e {
                return Err(Error::Schema(format!(
                    "inverse of branch {k} does not map [{lo}, {hi}] into its domain"
                )));
            }
            for t in [0.1, 0.37, 0.5, 0.81] {
                let x = a + t * (e - a);
                let y = b.forward(x);
                if (lo..=hi).contains(&y) && (b.inverse(y) - x).abs() > 1e-12 {
                    return Err(Error::Schema(format!(
                        "branch {k} fails the inverse round trip at x = {x}"
                    )));
                }
            }
        }
        let covered: f64 = branches.iter().map(|b| b.domain().1 - b.domain().0).sum();
        let onto = branches.iter().all(|b| {
            let (a, e) = b.domain();
            (b.forward(a) - lo).abs() < 1e-12 && (b.forward(e) - hi).abs() < 1e-12
        });
        let full_interval = matrix.is_full() && onto && (covered - (hi - lo)).abs() < 1e-12;
        Ok(Self {
            name: name.to_string(),
            family,
            matrix,
            branches,
            parabolic,
            full_interval,
            interval: (lo, hi),
        })
    }

    /// `x -> x + x^(1+s) mod 1`.
    pub fn manneville_pomeau(s: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::Schema(format!("Manneville-Pomeau exponent must be positive, got {s}")));
        }
        let c = mp_branch_point(s);
        Self::validated(
            &format!("manneville_pomeau(s={s})"),
            Family::MannevillePomeau { s },
            TransitionMatrix::full(2)?,
            vec![
                Branch::Power {
                    domain: (0.0, c),
                    coef: 1.0,
                    s,
                    shift: 0.0,
                },
                Branch::Power {
                    domain: (c, 1.0),
                    coef: 1.0,
                    s,
                    shift: 1.0,
                },
            ],
        )
    }

    /// Piecewise linear Markov map. Branch `i` has slope `slopes[i]` and its
    /// inverse sends the hull of all branch intervals onto the start of
    /// `intervals[i]`.
    pub fn linear_sft(
        slopes: &[f64],
        matrix: TransitionMatrix,
        intervals: &[(f64, f64)],
    ) -> Result<Self> {
        if slopes.len() != intervals.len() {
            return Err(Error::Schema(format!(
                "{} slopes but {} branch intervals",
                slopes.len(),
                intervals.len()
            )));
        }
        let base = intervals.iter().map(|i| i.0).fold(f64::INFINITY, f64::min);
        let branches = slopes
            .iter()
            .zip(intervals)
            .map(|(&slope, &domain)| Branch::Linear { domain, slope, base })
            .collect();
        Self::validated("linear_sft", Family::LinearSft, matrix, branches)
    }

    /// Full two-branch map: `x + b x^(1+s)` on `[0, split]` with `b` chosen so
    /// the branch is onto, and an affine branch on `[split, 1]`.
    pub fn parabolic_linear_blend(s: f64, split: f64) -> Result<Self> {
        if !(s > 0.0 && split > 0.0 && split < 1.0) {
            return Err(Error::Schema(format!(
                "blend needs s > 0 and 0 < split < 1, got s={s}, split={split}"
            )));
        }
        let coef = (1.0 - split) / split.powf(1.0 + s);
        Self::validated(
            &format!("parabolic_linear_blend(s={s},split={split})"),
            Family::ParabolicLinearBlend { s, split },
            TransitionMatrix::full(2)?,
            vec![
                Branch::Power {
                    domain: (0.0, split),
                    coef,
                    s,
                    shift: 0.0,
                },
                Branch::Linear {
                    domain: (split, 1.0),
                    slope: 1.0 / (1.0 - split),
                    base: 0.0,
                },
            ],
        )
    }

    pub fn gc24() -> Self {
        Self::linear_sft(
            &[2.0, 4.0],
            TransitionMatrix::full(2).unwrap(),
            &[(0.0, 0.5), (0.75, 1.0)],
        )
        .unwrap()
        .named("gc24")
    }

    pub fn doubling() -> Self {
        Self::linear_sft(
            &[2.0, 2.0],
            TransitionMatrix::full(2).unwrap(),
            &[(0.0, 0.5), (0.5, 1.0)],
        )
        .unwrap()
        .named("doubling")
    }

    /// Golden-mean shift (no `11`) with slopes 2 and 2.
    pub fn fibonacci() -> Self {
        Self::linear_sft(
            &[2.0, 2.0],
            TransitionMatrix::new(vec![vec![true, true], vec![true, false]]).unwrap(),
            &[(0.0, 0.5), (0.5, 1.0)],
        )
        .unwrap()
        .named("fibonacci")
    }

    /// Three linear branches with slopes 2, 4, 8. The uniform measure on
    /// all three symbols and the uniform measure on `{0, 2}` have the same
    /// exponent `2 log 2` but different entropies.
    pub fn eq_exponent_triple() -> Self {
        Self::linear_sft(
            &[2.0, 4.0, 8.0],
            TransitionMatrix::full(3).unwrap(),
            &[(0.0, 0.5), (0.5, 0.75), (0.875, 1.0)],
        )
        .unwrap()
        .named("eq-exponent-triple")
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn matrix(&self) -> &TransitionMatrix {
        &self.matrix
    }

    pub fn language(&self) -> Language {
        Language::new(self.matrix.clone())
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn alphabet_size(&self) -> usize {
        self.branches.len()
    }

    pub fn parabolic_points(&self) -> &[ParabolicPoint] {
        &self.parabolic
    }

    pub fn is_parabolic(&self) -> bool {
        !self.parabolic.is_empty()
    }

    pub fn is_linear(&self) -> bool {
        self.branches.iter().all(Branch::is_linear)
    }

    pub fn full_interval(&self) -> bool {
        self.full_interval
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    /// Slopes of a linear model.
    pub fn slopes(&self) -> Option<Vec<f64>> {
        self.branches
            .iter()
            .map(|b| match *b {
                Branch::Linear { slope, .. } => Some(slope),
                Branch::Power { .. } => None,
            })
            .collect()
    }

    /// Branch containing `x`; shared endpoints go to the left branch.
    pub fn branch_of(&self, x: f64) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (k, b) in self.branches.iter().enumerate() {
            if b.contains(x) && best.map_or(true, |j| b.domain().0 < self.branches[j].domain().0) {
                best = Some(k);
            }
        }
        best
    }

    pub fn cylinder(&self, word: &Word) -> Result<Cylinder> {
        self.cylinder_in(&self.language(), word)
    }

    pub fn cylinder_in(&self, lang: &Language, word: &Word) -> Result<Cylinder> {
        let w = word.symbols();
        if w.is_empty() || !lang.is_admissible(w) {
            return Err(Error::Inadmissible(w.to_vec()));
        }
        let (mut lo, mut hi) = self.branches[w[w.len() - 1]].domain();
        for &s in w[..w.len() - 1].iter().rev() {
            let b = &self.branches[s];
            lo = b.inverse(lo);
            hi = b.inverse(hi);
        }
        Ok(Cylinder { lo, hi })
    }

    /// `S_n log|f'|(x)` along the forward orbit and its average.
    pub fn log_deriv_sum(&self, x: f64, n: usize) -> Result<OrbitSum> {
        let (lo, hi) = self.interval;
        let mut y = x;
        let mut sum = 0.0;
        for _ in 0..n {
            let k = self.branch_of(y).ok_or(Error::ItineraryUndefined(x))?;
            let b = &self.branches[k];
            sum += b.log_deriv(y);
            y = b.forward(y).clamp(lo, hi);
        }
        Ok(OrbitSum {
            sum,
            average: if n == 0 { 0.0 } else { sum / n as f64 },
        })
    }

    /// Forward image `f^n(x)`.
    pub fn iterate(&self, x: f64, n: usize) -> Result<f64> {
        let (lo, hi) = self.interval;
        let mut y = x;
        for _ in 0..n {
            let k = self.branch_of(y).ok_or(Error::ItineraryUndefined(x))?;
            y = self.branches[k].forward(y).clamp(lo, hi);
        }
        Ok(y)
    }

    /// `ρ̂_n`: the largest spread of `S_n log|f'|` over the grid of any
    /// depth-`n` cylinder, divided by `n`.
    pub fn estimate_distortion(&self, depths: &[usize], grid: usize) -> Result<DistortionEstimate> {
        self.estimate_distortion_in(&self.language(), depths, grid)
    }

    pub fn estimate_distortion_in(
        &self,
        lang: &Language,
        depths: &[usize],
        grid: usize,
    ) -> Result<DistortionEstimate> {
        let max = depths.iter().copied().max().unwrap_or(0);
        check_sweep_budget(lang, max, crate::symbolic::DEFAULT_MAX_WORDS)?;
        if self.is_linear() {
            return Ok(DistortionEstimate {
                depths: depths.to_vec(),
                rho: vec![0.0; depths.len()],
            });
        }
        let parts = sweep::sweep(
            self,
            lang,
            max,
            grid.max(2),
            || vec![0.0f64; max],
            |acc: &mut Vec<f64>, node| {
                let v = &mut acc[node.depth - 1];
                *v = v.max(node.smax - node.smin);
            },
        );
        let rho = depths
            .iter()
            .map(|&n| {
                if n == 0 {
                    return 0.0;
                }
                let spread = parts.iter().map(|p| p[n - 1]).fold(0.0, f64::max);
                spread / n as f64
            })
            .collect();
        Ok(DistortionEstimate {
            depths: depths.to_vec(),
            rho,
        })
    }

    /// `(1/n) log|Δ_n|` for the first `n` symbols of `word`.
    pub fn zero_exponent_rate(&self, word: &Word, n: usize) -> Result<f64> {
        if n == 0 || n > word.len() {
            return Err(Error::Precondition(format!(
                "depth {n} outside 1..={}",
                word.len()
            )));
        }
        let c = self.cylinder(&Word(word.symbols()[..n].to_vec()))?;
        Ok(c.length().ln() / n as f64)
    }

    /// Smallest and largest `log|f'|` over all branches.
    pub fn log_deriv_range(&self) -> (f64, f64) {
        self.branches.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), br| {
            (a.min(br.min_log_deriv()), b.max(br.max_log_deriv()))
        })
    }
}

pub(crate) fn check_sweep_budget(lang: &Language, depth: usize, max_words: u64) -> Result<()> {
    let total: u128 = (1..=depth).map(|n| lang.count_words(n)).sum();
    if total > 2 * max_words as u128 {
        return Err(Error::ResourceLimit(format!(
            "sweep to depth {depth} visits {total} cylinders, over the cap of {max_words}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mp_branch_point_golden() {
        let m = MapModel::manneville_pomeau(1.0).unwrap();
        let c = m.cylinder(&Word(vec![0])).unwrap();
        assert_eq!(c.lo, 0.0);
        assert!((c.hi - 0.618_033_988_749_894_9).abs() < 1e-15);
        assert!(m.full_interval());
        assert_eq!(m.parabolic_points(), &[ParabolicPoint { symbol: 0, x: 0.0 }]);
        assert!((m.branches()[0].deriv(0.3) - 1.6).abs() < 1e-15);
    }

    #[test]
    fn linear_cylinders() {
        let g = MapModel::gc24();
        let c = g.cylinder(&Word(vec![0, 1])).unwrap();
        assert_eq!((c.lo, c.hi), (0.375, 0.5));
        assert!(!g.full_interval());
        let d = MapModel::doubling();
        let c = d.cylinder(&Word(vec![0, 1])).unwrap();
        assert_eq!((c.lo, c.hi), (0.25, 0.5));
        assert!(d.full_interval());
    }

    #[test]
    fn inadmissible_word() {
        let f = MapModel::fibonacci();
        assert!(matches!(
            f.cylinder(&Word(vec![1, 1])),
            Err(Error::Inadmissible(_))
        ));
        assert!(f.cylinder(&Word(vec![])).is_err());
    }

    #[test]
    fn orbit_sums() {
        let d = MapModel::doubling();
        let r = d.log_deriv_sum(0.3141, 10).unwrap();
        assert!((r.average - 2f64.ln()).abs() < 1e-15);
        let g = MapModel::gc24();
        let r = g.log_deriv_sum(1.0, 7).unwrap();
        assert!((r.average - 4f64.ln()).abs() < 1e-15);
        let m = MapModel::manneville_pomeau(1.0).unwrap();
        assert_eq!(m.log_deriv_sum(0.0, 50).unwrap().average, 0.0);
        assert!(matches!(
            g.log_deriv_sum(0.6, 3),
            Err(Error::ItineraryUndefined(_))
        ));
    }

    #[test]
    fn invalid_models() {
        let a = TransitionMatrix::full(2).unwrap();
        assert!(MapModel::linear_sft(&[1.0, 3.0], a.clone(), &[(0.0, 0.5), (0.6, 1.0)]).is_err());
        assert!(MapModel::linear_sft(&[2.0, 3.0], a.clone(), &[(0.0, 0.6), (0.5, 1.0)]).is_err());
        assert!(MapModel::linear_sft(&[2.0, 3.0], a, &[(0.0, 0.4), (0.6, 1.0)]).is_err());
        assert!(MapModel::manneville_pomeau(0.0).is_err());
        assert!(MapModel::parabolic_linear_blend(1.0, 1.5).is_err());
    }

    #[test]
    fn distortion_zero_for_linear() {
        let d = MapModel::gc24().estimate_distortion(&[1, 5, 10], 5).unwrap();
        assert!(d.rho.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn zero_exponent_rates() {
        let d = MapModel::doubling();
        let w = Word(vec![1, 0, 1, 1, 0, 0, 1]);
        assert!((d.zero_exponent_rate(&w, 7).unwrap() + 2f64.ln()).abs() < 1e-14);
        let g = MapModel::gc24();
        assert!((g.zero_exponent_rate(&Word::repeat(1, 9), 9).unwrap() + 4f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn blend_is_onto() {
        let b = MapModel::parabolic_linear_blend(1.0, 0.5).unwrap();
        assert!(b.full_interval());
        assert!(b.is_parabolic());
        assert!((b.branches()[0].forward(0.5) - 1.0).abs() < 1e-15);
    }
}
