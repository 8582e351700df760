//! Gibbs states on hyperbolic hosts and conformal cylinder masses.
//!
//! Every Gibbs state is carried by a finite stationary Markov chain. On
//! piecewise linear hosts the chain runs on the language automaton and is
//! exact. On nonlinear subsystems the states are admissible words of length
//! `n_rep - 1` and the potential is frozen at the midpoint of the depth
//! `n_rep` cylinder, so the chain is the exact Gibbs state of a locally
//! constant approximation whose error is covered by the measured constant
//! `D`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::maps::MapModel;
use crate::numeric::brent_root;
use crate::pressure::oracle::{perron, SparseMatrix};
use crate::pressure::subsystem;
use crate::symbolic::{enumerate_language, Automaton, Language, Word};

pub const DEFAULT_N_REP: usize = 10;
/// Longest words used when measuring the Gibbs constant.
const GIBBS_CHECK_DEPTH: usize = 8;

/// Uniformly hyperbolic system carrying Gibbs states.
#[derive(Debug, Clone)]
pub struct Host {
    pub model: MapModel,
    pub language: Language,
    pub level: Option<usize>,
    pub n_rep: usize,
}

impl Host {
    pub fn new(model: &MapModel) -> Result<Self> {
        Self::with_language(model, model.language(), None)
    }

    pub fn subsystem(model: &MapModel, m: usize) -> Result<Self> {
        let sub = subsystem(model, m)?;
        if !sub.uniformly_hyperbolic {
            return Err(Error::Precondition(format!("subsystem m = {m} is not uniformly expanding")));
        }
        Self::with_language(model, sub.language, Some(m))
    }

    pub fn with_language(model: &MapModel, language: Language, level: Option<usize>) -> Result<Self> {
        for p in model.parabolic_points() {
            if language.symbol_allowed(p.symbol) && language.max_run(p.symbol).is_none() {
                return Err(Error::Precondition(format!(
                    "{} is not hyperbolic: runs of the parabolic symbol {} are unbounded",
                    model.name(),
                    p.symbol
                )));
            }
        }
        Ok(Self {
            model: model.clone(),
            language,
            level,
            n_rep: DEFAULT_N_REP,
        })
    }

    pub fn with_n_rep(mut self, n_rep: usize) -> Self {
        self.n_rep = n_rep.max(2);
        self
    }

    fn block_length(&self) -> usize {
        let longest_run = (0..self.language.size())
            .filter_map(|s| self.language.max_run(s))
            .max()
            .unwrap_or(0);
        (self.n_rep - 1).max(longest_run)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Edge {
    pub to: usize,
    pub prob: f64,
    /// `log|f'|` charged on this step.
    pub log_deriv: f64,
}

/// Stationary Markov chain whose state sequence emits symbols.
#[derive(Debug, Clone)]
pub struct MarkovChain {
    pub emit: Vec<usize>,
    pub edges: Vec<Vec<Edge>>,
    pub stationary: Vec<f64>,
}

impl MarkovChain {
    pub fn len(&self) -> usize {
        self.emit.len()
    }

    pub fn is_empty(&self) -> bool {
        self.emit.is_empty()
    }

    /// Exact chain probability of the cylinder `[word]`.
    pub fn cylinder_mass(&self, word: &[usize]) -> f64 {
        let Some((&first, rest)) = word.split_first() else {
            return 1.0;
        };
        let mut alpha: Vec<f64> = (0..self.len())
            .map(|s| if self.emit[s] == first { self.stationary[s] } else { 0.0 })
            .collect();
        for &c in rest {
            let mut next = vec![0.0; self.len()];
            for (s, &a) in alpha.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for e in &self.edges[s] {
                    if self.emit[e.to] == c {
                        next[e.to] += a * e.prob;
                    }
                }
            }
            alpha = next;
        }
        alpha.iter().sum()
    }

    pub fn entropy(&self) -> f64 {
        let mut h = 0.0;
        for (s, es) in self.edges.iter().enumerate() {
            for e in es {
                if e.prob > 0.0 {
                    h -= self.stationary[s] * e.prob * e.prob.ln();
                }
            }
        }
        h
    }

    pub fn exponent(&self) -> f64 {
        self.edges
            .iter()
            .enumerate()
            .map(|(s, es)| self.stationary[s] * es.iter().map(|e| e.prob * e.log_deriv).sum::<f64>())
            .sum()
    }
}

struct WeightedGraph {
    emit: Vec<usize>,
    /// `(to, log_deriv)` per state.
    edges: Vec<Vec<(usize, f64)>>,
}

fn automaton_graph(host: &Host, slopes: &[f64]) -> WeightedGraph {
    let aut = Automaton::new(&host.language);
    let emit = aut.states().iter().map(|s| s.symbol).collect();
    let edges = (0..aut.len())
        .map(|s| {
            let ld = slopes[aut.state(s).symbol].ln();
            aut.successors(s).map(|(_, t)| (t, ld)).collect()
        })
        .collect();
    WeightedGraph { emit, edges }
}

fn block_graph(host: &Host) -> Result<WeightedGraph> {
    let l = host.block_length();
    let words = enumerate_language(&host.language, l, 1 << 20)?;
    let index: std::collections::HashMap<Vec<usize>, usize> = words
        .iter()
        .enumerate()
        .map(|(k, w)| (w.symbols().to_vec(), k))
        .collect();
    let p = host.language.size();
    let mut edges = Vec::with_capacity(words.len());
    for w in &words {
        let mut out = Vec::new();
        for c in 0..p {
            let mut long = w.symbols().to_vec();
            long.push(c);
            if !host.language.is_admissible(&long) {
                continue;
            }
            let cyl = host.model.cylinder_in(&host.language, &Word(long.clone()))?;
            let ld = host.model.branches()[long[0]].log_deriv(cyl.midpoint());
            let to = index[&long[1..]];
            out.push((to, ld));
        }
        edges.push(out);
    }
    Ok(WeightedGraph {
        emit: words.iter().map(|w| w.symbols()[0]).collect(),
        edges,
    })
}

fn host_graph(host: &Host) -> Result<WeightedGraph> {
    match host.model.slopes() {
        Some(slopes) => Ok(automaton_graph(host, &slopes)),
        None => block_graph(host),
    }
}

/// Normalised Gibbs chain of `ψ = -q log|f'|` on a weighted graph, with
/// `log ρ` of the transfer matrix.
fn gibbs_chain(g: &WeightedGraph, q: f64) -> Result<(MarkovChain, f64)> {
    let shift = g
        .edges
        .iter()
        .flatten()
        .map(|&(_, ld)| -q * ld)
        .fold(f64::NEG_INFINITY, f64::max);
    let m = SparseMatrix {
        n: g.emit.len(),
        rows: g
            .edges
            .iter()
            .map(|es| es.iter().map(|&(t, ld)| (t, (-q * ld - shift).exp())).collect())
            .collect(),
    };
    let pf = perron(&m, 1e-14)?;
    let rho = pf.log_rho.exp();
    let edges = g
        .edges
        .iter()
        .enumerate()
        .map(|(s, es)| {
            let mut out: Vec<Edge> = es
                .iter()
                .map(|&(t, ld)| Edge {
                    to: t,
                    prob: (-q * ld - shift).exp() * pf.right[t] / (rho * pf.right[s]),
                    log_deriv: ld,
                })
                .collect();
            let total: f64 = out.iter().map(|e| e.prob).sum();
            out.iter_mut().for_each(|e| e.prob /= total);
            out
        })
        .collect();
    let mut stationary: Vec<f64> = pf.left.iter().zip(&pf.right).map(|(a, b)| a * b).collect();
    let total: f64 = stationary.iter().sum();
    stationary.iter_mut().for_each(|x| *x /= total);
    Ok((
        MarkovChain {
            emit: g.emit.clone(),
            edges,
            stationary,
        },
        pf.log_rho + shift,
    ))
}

#[derive(Debug, Clone)]
pub struct GibbsMeasure {
    pub host: Host,
    pub q: f64,
    /// Pressure of `-q log|f'|` on the host, as seen by the chain.
    pub pressure: f64,
    pub chain: MarkovChain,
    /// Measured Gibbs constant over words up to `gibbs_depth`.
    pub gibbs_constant: f64,
    pub gibbs_depth: usize,
    pub entropy: f64,
    pub exponent: f64,
}

impl GibbsMeasure {
    pub fn mass(&self, word: &[usize]) -> f64 {
        if !self.host.language.is_admissible(word) {
            return 0.0;
        }
        self.chain.cylinder_mass(word)
    }

    pub fn dimension(&self) -> f64 {
        self.entropy / self.exponent
    }

    /// `μ(Δ_w) / exp(-nP + S_n ψ)` with `S_n ψ` at the cylinder midpoint.
    pub fn gibbs_ratio(&self, word: &[usize]) -> Result<f64> {
        let cyl = self.host.model.cylinder_in(&self.host.language, &Word(word.to_vec()))?;
        let s = self.host.model.log_deriv_sum(cyl.midpoint(), word.len())?.sum;
        let n = word.len() as f64;
        Ok((self.mass(word).ln() + n * self.pressure + self.q * s).exp())
    }
}

pub fn gibbs_measure(host: &Host, q: f64) -> Result<GibbsMeasure> {
    let g = host_graph(host)?;
    let (chain, pressure) = gibbs_chain(&g, q)?;
    let entropy = chain.entropy();
    let exponent = chain.exponent();
    let mut mu = GibbsMeasure {
        host: host.clone(),
        q,
        pressure,
        chain,
        gibbs_constant: 1.0,
        gibbs_depth: 0,
        entropy,
        exponent,
    };
    let mut depth = 0;
    let mut worst = 1.0f64;
    for n in 1..=GIBBS_CHECK_DEPTH {
        let Ok(words) = enumerate_language(&host.language, n, 1 << 12) else {
            break;
        };
        for w in words {
            let r = mu.gibbs_ratio(w.symbols())?;
            worst = worst.max(r).max(1.0 / r);
        }
        depth = n;
    }
    mu.gibbs_constant = worst;
    mu.gibbs_depth = depth;
    Ok(mu)
}

/// `χ(μ_q)` at `q = ±d_big`, the reachable exponent interval.
pub fn exponent_interval(host: &Host, d_big: f64) -> Result<(f64, f64)> {
    let g = host_graph(host)?;
    let lo = gibbs_chain(&g, d_big)?.0.exponent();
    let hi = gibbs_chain(&g, -d_big)?.0.exponent();
    Ok((lo, hi))
}

/// Equilibrium state with exponent `alpha`.
pub fn equilibrium_for_exponent(host: &Host, alpha: f64) -> Result<(f64, GibbsMeasure)> {
    let big = 40.0;
    let g = host_graph(host)?;
    let chi = |q: f64| gibbs_chain(&g, q).map(|c| c.0.exponent()).unwrap_or(f64::NAN);
    let (lo, hi) = (chi(big), chi(-big));
    if !(alpha > lo && alpha < hi) {
        return Err(Error::Precondition(format!(
            "α = {alpha} outside the open exponent interval ({lo}, {hi})"
        )));
    }
    let q = brent_root(|q| chi(q) - alpha, -big, big, 1e-13)
        .ok_or_else(|| Error::Numerical("exponent equation has no sign change".into()))?;
    let mu = gibbs_measure(host, q)?;
    if (mu.exponent - alpha).abs() > 1e-8 {
        return Err(Error::Numerical(format!(
            "exponent {} misses target {alpha}",
            mu.exponent
        )));
    }
    Ok((q, mu))
}

pub fn measure_dimension(mu: &GibbsMeasure) -> Result<f64> {
    if !(mu.exponent > 0.0) {
        return Err(Error::Precondition("measure has zero exponent".into()));
    }
    Ok(mu.dimension())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConformalMass {
    pub word: String,
    pub center: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Conformal cylinder masses `e^{-nP} |(f^n)'|^{-d}` with distortion bounds
/// from the measured spread of `S_n log|f'|` at each depth.
#[derive(Debug, Clone)]
pub struct ConformalMasses {
    model: MapModel,
    language: Language,
    d: f64,
    pressure: f64,
    spread: Vec<f64>,
}

impl ConformalMasses {
    pub fn new(model: &MapModel, d: f64, pressure: f64, depth: usize) -> Result<Self> {
        Self::in_language(model, model.language(), d, pressure, depth)
    }

    pub fn in_language(model: &MapModel, language: Language, d: f64, pressure: f64, depth: usize) -> Result<Self> {
        let depths: Vec<usize> = (1..=depth).collect();
        let est = model.estimate_distortion_in(&language, &depths, crate::maps::DEFAULT_GRID)?;
        let spread = depths.iter().zip(&est.rho).map(|(&n, r)| n as f64 * r).collect();
        Ok(Self {
            model: model.clone(),
            language,
            d,
            pressure,
            spread,
        })
    }

    pub fn mass(&self, word: &Word) -> Result<ConformalMass> {
        let n = word.len();
        if n == 0 || n > self.spread.len() {
            return Err(Error::Precondition(format!("word length {n} outside 1..={}", self.spread.len())));
        }
        let cyl = self.model.cylinder_in(&self.language, word)?;
        let s = self.model.log_deriv_sum(cyl.midpoint(), n)?.sum;
        let log_c = -(n as f64) * self.pressure - self.d * s;
        let slack = self.d.abs() * self.spread[n - 1];
        Ok(ConformalMass {
            word: word.to_string(),
            center: log_c.exp(),
            lo: (log_c - slack).exp(),
            hi: (log_c + slack).exp(),
        })
    }

    pub fn level(&self, n: usize) -> Result<Vec<ConformalMass>> {
        enumerate_language(&self.language, n, 1 << 24)?
            .iter()
            .map(|w| self.mass(w))
            .collect()
    }
}

pub fn conformal_mass(model: &MapModel, d: f64, word: &Word, pressure: f64) -> Result<ConformalMass> {
    ConformalMasses::new(model, d, pressure, word.len())?.mass(word)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gc24_golden_weights() {
        let g = MapModel::gc24();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let d0 = phi.log2();
        let mu = gibbs_measure(&Host::new(&g).unwrap(), d0).unwrap();
        assert!((mu.mass(&[0]) - 1.0 / phi).abs() < 1e-12);
        assert!((mu.mass(&[1, 0]) - 1.0 / phi.powi(3)).abs() < 1e-12);
        assert!((measure_dimension(&mu).unwrap() - d0).abs() < 1e-10);
        assert!(mu.pressure.abs() < 1e-12);
        assert!((mu.gibbs_constant - 1.0).abs() < 1e-10);
    }

    #[test]
    fn parry_measure() {
        let f = MapModel::fibonacci();
        let mu = gibbs_measure(&Host::new(&f).unwrap(), 0.0).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((mu.entropy - phi.ln()).abs() < 1e-12);
        assert_eq!(mu.mass(&[1, 1]), 0.0);
    }

    #[test]
    fn parabolic_host_rejected() {
        let m = MapModel::manneville_pomeau(1.0).unwrap();
        assert!(Host::new(&m).is_err());
        let h = Host::subsystem(&m, 3).unwrap();
        let mu = gibbs_measure(&h, 1.0).unwrap();
        let total: f64 = [0usize, 1].iter().map(|&s| mu.mass(&[s])).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(mu.gibbs_constant.is_finite() && mu.gibbs_constant < 20.0);
    }

    #[test]
    fn exponent_targeting() {
        let h = Host::new(&MapModel::gc24()).unwrap();
        let alpha = 0.9 * 2f64.ln() + 0.1 * 4f64.ln();
        let (q, mu) = equilibrium_for_exponent(&h, alpha).unwrap();
        assert!((q - 9f64.log2()).abs() < 1e-8);
        assert!((mu.mass(&[0]) - 0.9).abs() < 1e-9);
        assert!(equilibrium_for_exponent(&h, 2f64.ln()).is_err());
    }

    #[test]
    fn doubling_lebesgue() {
        let m = ConformalMasses::new(&MapModel::doubling(), 1.0, 0.0, 6).unwrap();
        let c = m.mass(&Word(vec![0, 1, 1, 0, 1, 0])).unwrap();
        assert!((c.center / 2f64.powi(-6) - 1.0).abs() < 1e-14);
        assert_eq!(c.lo, c.hi);
    }
}
