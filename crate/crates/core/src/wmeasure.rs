//! Concatenated Gibbs blocks whose exponents and entropies oscillate.
//!
//! A schedule lists stage measures `μ_i` and switch times `m_i`. A sampled
//! word follows `μ_1` up to `m_1`, then `μ_{i+1}` on `(m_i, m_{i+1}]`,
//! conditioned on the junction being admissible. All stage measures are
//! Markov chains, so the junction normaliser and every cylinder mass of the
//! glued measure are exact.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::MapModel;
use crate::measures::{equilibrium_for_exponent, gibbs_measure, GibbsMeasure, Host, MarkovChain};
use crate::symbolic::Word;

pub const DEFAULT_BUDGET: usize = 10_000_000;
/// Lookahead depth for `L_m` on nonlinear maps.
const LOOKAHEAD: usize = 24;
const CHECKPOINTS_PER_DECADE: f64 = 20.0;
/// Depth at which stage distortion is measured.
const RHO_DEPTH: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageTarget {
    Q(f64),
    Alpha(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSpec {
    pub level: Option<usize>,
    pub symbols: Option<Vec<usize>>,
    pub target: StageTarget,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthPolicy {
    /// `m_{i+1} ≥ factor · m_i`.
    pub factor: f64,
    /// Also require `m_{i+1} ≥ i · m_i`.
    pub index_growth: bool,
    pub first: usize,
    pub budget: usize,
}

impl Default for GrowthPolicy {
    fn default() -> Self {
        Self {
            factor: 10.0,
            index_growth: true,
            first: 100,
            budget: DEFAULT_BUDGET,
        }
    }
}

impl GrowthPolicy {
    fn minimum_next(&self, i: usize, m: usize) -> usize {
        let a = (self.factor * m as f64).ceil() as usize;
        let b = if self.index_growth { i * m } else { 0 };
        a.max(b)
    }
}

#[derive(Debug, Clone)]
pub struct Stage {
    pub spec: StageSpec,
    pub measure: GibbsMeasure,
    pub q: f64,
    pub switch: usize,
    pub h: f64,
    pub chi: f64,
    pub d: f64,
    /// `ρ̂` of the stage host at depth `min(m_i, 12)`.
    pub rho: f64,
}

#[derive(Debug, Clone)]
pub struct WSchedule {
    pub model: MapModel,
    pub stages: Vec<Stage>,
    pub policy: GrowthPolicy,
    pub warnings: Vec<String>,
}

impl WSchedule {
    pub fn switch_times(&self) -> Vec<usize> {
        self.stages.iter().map(|s| s.switch).collect()
    }

    pub fn length(&self) -> usize {
        self.stages.last().map_or(0, |s| s.switch)
    }

    /// 1-based index of the stage whose block contains position `m`.
    pub fn stage_of(&self, m: usize) -> usize {
        self.stages.iter().position(|s| m <= s.switch).unwrap_or(self.stages.len() - 1) + 1
    }
}

fn stage_host(model: &MapModel, spec: &StageSpec) -> Result<Host> {
    let (lang, level) = match spec.level {
        Some(m) => (Host::subsystem(model, m)?.language, Some(m)),
        None => (model.language(), None),
    };
    let lang = match &spec.symbols {
        Some(keep) => lang.restrict_symbols(keep)?,
        None => lang,
    };
    Host::with_language(model, lang, level)
}

pub fn build_schedule(
    model: &MapModel,
    specs: &[StageSpec],
    times: Option<&[usize]>,
    policy: GrowthPolicy,
) -> Result<WSchedule> {
    if specs.is_empty() {
        return Err(Error::Schema("schedule needs at least one stage".into()));
    }
    if model.alphabet_size() > u8::MAX as usize {
        return Err(Error::Schema("alphabet too large for the sampler".into()));
    }
    let levels: Vec<usize> = specs.iter().filter_map(|s| s.level).collect();
    if levels.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Precondition("subsystem levels must be nondecreasing".into()));
    }
    let switch = match times {
        Some(t) => {
            if t.len() != specs.len() {
                return Err(Error::Schema(format!(
                    "{} switch times for {} stages",
                    t.len(),
                    specs.len()
                )));
            }
            t.to_vec()
        }
        None => {
            let mut t = vec![policy.first.max(1)];
            for i in 1..specs.len() {
                let next = policy.minimum_next(i, t[i - 1]);
                t.push(next);
            }
            t
        }
    };
    if switch[0] == 0 {
        return Err(Error::Precondition("first switch time must be positive".into()));
    }
    for (i, w) in switch.windows(2).enumerate() {
        let need = policy.minimum_next(i + 1, w[0]);
        if w[1] <= w[0] || w[1] < need {
            return Err(Error::Precondition(format!(
                "switch time m_{} = {} violates the growth policy (needs ≥ {need} after {})",
                i + 2,
                w[1],
                w[0]
            )));
        }
    }
    let total = *switch.last().unwrap();
    if total > policy.budget {
        return Err(Error::ResourceLimit(format!(
            "schedule length {total} exceeds the budget {}",
            policy.budget
        )));
    }
    let mut stages = Vec::with_capacity(specs.len());
    for (spec, &m) in specs.iter().zip(&switch) {
        let host = stage_host(model, spec)?;
        let (q, measure) = match spec.target {
            StageTarget::Q(q) => (q, gibbs_measure(&host, q)?),
            StageTarget::Alpha(a) => equilibrium_for_exponent(&host, a)?,
        };
        let rho = if model.is_linear() {
            0.0
        } else {
            let n = m.min(RHO_DEPTH);
            model.estimate_distortion_in(&host.language, &[n], crate::maps::DEFAULT_GRID)?.rho[0]
        };
        stages.push(Stage {
            spec: spec.clone(),
            q,
            switch: m,
            h: measure.entropy,
            chi: measure.exponent,
            d: measure.entropy / measure.exponent,
            rho,
            measure,
        });
    }
    let mut warnings = Vec::new();
    if model.is_parabolic() {
        let ratios: Vec<f64> = stages.iter().map(|s| s.rho / s.chi).collect();
        if ratios.windows(2).any(|w| w[1] > w[0] + 1e-12) {
            warnings.push(format!("distortion-to-exponent ratios not nonincreasing: {ratios:?}"));
        }
    }
    Ok(WSchedule {
        model: model.clone(),
        stages,
        policy,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Checkpoint {
    pub m: usize,
    pub l: f64,
    pub h: f64,
    pub stage: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WSampleTrace {
    pub seed: u64,
    pub word: Vec<u8>,
    pub checkpoints: Vec<Checkpoint>,
    /// `log Z` at each junction, `Z` being the admissible share of `μ_{i+1}`.
    pub junction_log_norm: Vec<f64>,
}

impl WSampleTrace {
    pub fn at(&self, m: usize) -> Option<&Checkpoint> {
        self.checkpoints.iter().find(|c| c.m == m)
    }
}

fn checkpoint_positions(schedule: &WSchedule) -> Vec<usize> {
    let n = schedule.length();
    let mut pts: Vec<usize> = schedule.switch_times();
    let mut k = 0.0;
    loop {
        let m = 10f64.powf(k / CHECKPOINTS_PER_DECADE).round() as usize;
        if m > n {
            break;
        }
        pts.push(m.max(1));
        k += 1.0;
    }
    pts.sort_unstable();
    pts.dedup();
    pts
}

fn pick(rng: &mut ChaCha8Rng, weights: impl Iterator<Item = f64> + Clone, total: f64) -> usize {
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (k, w) in weights.enumerate() {
        if w > 0.0 {
            last = k;
            acc += w;
            if u < acc {
                return k;
            }
        }
    }
    last
}

/// Forward filter over chain states for the emitted prefix of one block.
struct Filter {
    support: Vec<(usize, f64)>,
    scratch: Vec<f64>,
}

impl Filter {
    fn new(n: usize) -> Self {
        Self {
            support: Vec::new(),
            scratch: vec![0.0; n],
        }
    }

    /// Starts the block at the first emitted symbol; returns its log mass.
    fn start(&mut self, chain: &MarkovChain, symbol: usize) -> f64 {
        self.support = (0..chain.len())
            .filter(|&s| chain.emit[s] == symbol)
            .map(|s| (s, chain.stationary[s]))
            .collect();
        self.renormalise()
    }

    fn step(&mut self, chain: &MarkovChain, symbol: usize) -> f64 {
        let mut touched = Vec::new();
        for &(s, a) in &self.support {
            for e in &chain.edges[s] {
                if chain.emit[e.to] == symbol {
                    if self.scratch[e.to] == 0.0 {
                        touched.push(e.to);
                    }
                    self.scratch[e.to] += a * e.prob;
                }
            }
        }
        self.support = touched
            .into_iter()
            .map(|t| (t, std::mem::take(&mut self.scratch[t])))
            .collect();
        self.renormalise()
    }

    fn renormalise(&mut self) -> f64 {
        let total: f64 = self.support.iter().map(|x| x.1).sum();
        self.support.iter_mut().for_each(|x| x.1 /= total);
        total.ln()
    }
}

pub fn sample_w_word(schedule: &WSchedule, seed: u64) -> Result<WSampleTrace> {
    let n = schedule.length();
    if n > schedule.policy.budget {
        return Err(Error::ResourceLimit(format!("trace length {n} over budget")));
    }
    let lang = schedule.model.language();
    let matrix = lang.matrix();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let marks = checkpoint_positions(schedule);
    let mut log_mass_at = Vec::with_capacity(marks.len());
    let mut next_mark = 0;
    let mut word: Vec<u8> = Vec::with_capacity(n);
    let mut log_mass = 0.0;
    let mut junctions = Vec::new();
    let mut start = 0;
    for stage in &schedule.stages {
        let chain = &stage.measure.chain;
        let mut filter = Filter::new(chain.len());
        let allowed = |s: usize| match word.last() {
            Some(&prev) => matrix.allows(prev as usize, chain.emit[s]),
            None => true,
        };
        let weights = (0..chain.len()).map(|s| if allowed(s) { chain.stationary[s] } else { 0.0 });
        let z: f64 = weights.clone().sum();
        if !(z > 0.0) {
            return Err(Error::Numerical("junction has no admissible continuation".into()));
        }
        if !word.is_empty() {
            junctions.push(z.ln());
            log_mass -= z.ln();
        }
        let mut state = pick(&mut rng, weights, z);
        for pos in start..stage.switch {
            if pos > start {
                let es = &chain.edges[state];
                let k = pick(&mut rng, es.iter().map(|e| e.prob), 1.0);
                state = es[k].to;
            }
            let sym = chain.emit[state];
            word.push(sym as u8);
            log_mass += if pos == start {
                filter.start(chain, sym)
            } else {
                filter.step(chain, sym)
            };
            while next_mark < marks.len() && marks[next_mark] == pos + 1 {
                log_mass_at.push(log_mass);
                next_mark += 1;
            }
        }
        start = stage.switch;
    }
    let log_derivs = lyapunov_increments(&schedule.model, &word)?;
    let mut checkpoints = Vec::with_capacity(marks.len());
    let mut sum = 0.0;
    let mut j = 0;
    for (k, &m) in marks.iter().enumerate() {
        while j < m {
            sum += log_derivs[j];
            j += 1;
        }
        checkpoints.push(Checkpoint {
            m,
            l: sum / m as f64,
            h: -log_mass_at[k] / m as f64,
            stage: schedule.stage_of(m),
        });
    }
    Ok(WSampleTrace {
        seed,
        word,
        checkpoints,
        junction_log_norm: junctions,
    })
}

/// `log|f'(f^j x)|` for every position, exact on linear maps and taken at
/// the midpoint of the lookahead cylinder otherwise.
fn lyapunov_increments(model: &MapModel, word: &[u8]) -> Result<Vec<f64>> {
    if let Some(slopes) = model.slopes() {
        let logs: Vec<f64> = slopes.iter().map(|s| s.ln()).collect();
        return Ok(word.iter().map(|&s| logs[s as usize]).collect());
    }
    let syms: Vec<usize> = word.iter().map(|&s| s as usize).collect();
    (0..syms.len())
        .into_par_iter()
        .map(|j| {
            let end = (j + LOOKAHEAD).min(syms.len());
            let cyl = model.cylinder(&Word(syms[j..end].to_vec()))?;
            Ok(model.branches()[syms[j]].log_deriv(cyl.midpoint()))
        })
        .collect()
}

pub fn sample_many(schedule: &WSchedule, seeds: &[u64]) -> Result<Vec<WSampleTrace>> {
    seeds.par_iter().map(|&s| sample_w_word(schedule, s)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageReport {
    pub index: usize,
    pub m: usize,
    pub chi: f64,
    pub h: f64,
    pub d: f64,
    pub l_at: f64,
    pub h_at: f64,
    /// `|L_{m_i} - χ_i| / χ_i`.
    pub l_dev: f64,
    /// `|H_{m_i} - h_i| / h_i`, absolute when `h_i = 0`.
    pub h_dev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowReport {
    /// Window `(m_i, m_{i+1}]`.
    pub index: usize,
    pub l_residual: f64,
    pub h_residual: f64,
    pub min_ratio: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OscillationReport {
    pub seed: u64,
    pub stages: Vec<StageReport>,
    pub windows: Vec<WindowReport>,
    /// Minimum of `H_m / L_m` for `m > m_2`.
    pub late_min_ratio: f64,
    pub d_floor: f64,
    /// Smallest and largest stage `L_{m_i}` over the last two stages.
    pub realized: (f64, f64),
    pub chi_range: (f64, f64),
}

impl OscillationReport {
    pub fn max_stage_dev_from(&self, first: usize) -> f64 {
        self.stages
            .iter()
            .filter(|s| s.index >= first)
            .map(|s| s.l_dev)
            .fold(0.0, f64::max)
    }
}

pub fn verify_oscillation(trace: &WSampleTrace, schedule: &WSchedule) -> OscillationReport {
    let stages: Vec<StageReport> = schedule
        .stages
        .iter()
        .enumerate()
        .filter_map(|(k, st)| {
            let c = trace.at(st.switch)?;
            Some(StageReport {
                index: k + 1,
                m: st.switch,
                chi: st.chi,
                h: st.h,
                d: st.d,
                l_at: c.l,
                h_at: c.h,
                l_dev: (c.l - st.chi).abs() / st.chi,
                h_dev: if st.h > 0.0 { (c.h - st.h).abs() / st.h } else { c.h.abs() },
            })
        })
        .collect();
    let mut windows = Vec::new();
    for i in 0..schedule.stages.len().saturating_sub(1) {
        let (a, b) = (&schedule.stages[i], &schedule.stages[i + 1]);
        let mi = a.switch as f64;
        let mut lr = 0.0f64;
        let mut hr = 0.0f64;
        let mut ratio = f64::INFINITY;
        for c in trace.checkpoints.iter().filter(|c| c.m > a.switch && c.m <= b.switch) {
            let m = c.m as f64;
            let w = mi / m;
            lr = lr.max((c.l - (w * a.chi + (1.0 - w) * b.chi)).abs());
            hr = hr.max((c.h - (w * a.h + (1.0 - w) * b.h)).abs());
            ratio = ratio.min(c.h / c.l);
        }
        windows.push(WindowReport {
            index: i + 1,
            l_residual: lr,
            h_residual: hr,
            min_ratio: ratio,
            bound: a.d.min(b.d),
        });
    }
    let late_from = schedule.stages.get(1).map_or(0, |s| s.switch);
    let late_min_ratio = trace
        .checkpoints
        .iter()
        .filter(|c| c.m > late_from)
        .map(|c| c.h / c.l)
        .fold(f64::INFINITY, f64::min);
    let d_floor = schedule.stages.iter().map(|s| s.d).fold(f64::INFINITY, f64::min);
    let tail = &stages[stages.len().saturating_sub(2)..];
    let realized = tail
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| (a.min(s.l_at), b.max(s.l_at)));
    let chi_range = schedule
        .stages
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| (a.min(s.chi), b.max(s.chi)));
    OscillationReport {
        seed: trace.seed,
        stages,
        windows,
        late_min_ratio,
        d_floor,
        realized,
        chi_range,
    }
}
