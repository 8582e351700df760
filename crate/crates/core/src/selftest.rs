//! Invariant checks run by `lyapspec selftest`.

use serde::Serialize;

use crate::entropy::level0_cover_count;
use crate::maps::sweep::sweep;
use crate::maps::MapModel;
use crate::measures::{gibbs_measure, ConformalMasses, Host};
use crate::pressure::{pressure_matrix_oracle, PressureEngine, PressureOptions};
use crate::spectrum::{legendre_f, spectrum_curve};
use crate::symbolic::{enumerate_language, Word};
use crate::wmeasure::{build_schedule, sample_w_word, GrowthPolicy, StageSpec, StageTarget};
use crate::Result;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(suite: &'static str, name: impl Into<String>, passed: bool, detail: String) -> Check {
    Check {
        suite,
        name: name.into(),
        passed,
        detail,
    }
}

fn failed(suite: &'static str, name: impl Into<String>, e: crate::Error) -> Check {
    check(suite, name, false, format!("error: {e}"))
}

pub const SUITES: [&str; 7] = ["maps", "pressure", "spectrum", "measures", "wmeasure", "entropy", "determinism"];

pub fn run(suites: &[String]) -> Vec<Check> {
    let want = |s: &str| suites.is_empty() || suites.iter().any(|x| x == s);
    let mut out = Vec::new();
    if want("maps") {
        out.extend(maps_suite());
    }
    if want("pressure") {
        out.extend(pressure_suite());
    }
    if want("spectrum") {
        out.extend(spectrum_suite());
    }
    if want("measures") {
        out.extend(measures_suite());
    }
    if want("wmeasure") {
        out.extend(wmeasure_suite());
    }
    if want("entropy") {
        out.extend(entropy_suite());
    }
    if want("determinism") {
        out.extend(determinism_suite());
    }
    out
}

fn models() -> Vec<MapModel> {
    vec![
        MapModel::gc24(),
        MapModel::doubling(),
        MapModel::fibonacci(),
        MapModel::eq_exponent_triple(),
        MapModel::manneville_pomeau(1.0).unwrap(),
        MapModel::manneville_pomeau(0.5).unwrap(),
        MapModel::parabolic_linear_blend(1.0, 0.5).unwrap(),
    ]
}

fn maps_suite() -> Vec<Check> {
    let mut out = Vec::new();
    for m in models() {
        let n = 10;
        let lang = m.language();
        let parts = sweep(
            &m,
            &lang,
            n,
            3,
            || (0.0f64, 0.0f64),
            |acc: &mut (f64, f64), node| {
                if node.depth == n {
                    acc.0 += node.length();
                }
                for (&x, &s) in node.points.iter().zip(node.sums) {
                    if x > node.lo() && x < node.hi() {
                        if let Ok(f) = m.log_deriv_sum(x, node.depth) {
                            acc.1 = acc.1.max((f.sum - s).abs());
                        }
                    }
                }
            },
        );
        let total: f64 = parts.iter().map(|p| p.0).sum();
        let chain = parts.iter().map(|p| p.1).fold(0.0, f64::max);
        if m.full_interval() {
            let (a, b) = m.interval();
            let err = (total - (b - a)).abs();
            out.push(check("maps", format!("tiling {}", m.name()), err < 1e-8, format!("|Σ|Δ_10| - |I|| = {err:.3e}")));
        } else if let Some(sl) = m.slopes() {
            let mut z = vec![0.0; sl.len()];
            z.iter_mut().zip(&sl).for_each(|(z, s)| *z = 1.0 / s);
            let expect = (1..=n).fold(None::<Vec<f64>>, |acc, _| {
                Some(match acc {
                    None => z.clone(),
                    Some(v) => {
                        let rows = m.matrix().rows();
                        (0..sl.len())
                            .map(|i| z[i] * (0..sl.len()).filter(|&j| rows[i][j]).map(|j| v[j]).sum::<f64>())
                            .collect()
                    }
                })
            });
            let e: f64 = expect.unwrap().iter().sum();
            let err = (total - e).abs();
            out.push(check("maps", format!("cylinder lengths {}", m.name()), err < 1e-8, format!("error {err:.3e}")));
        }
        out.push(check(
            "maps",
            format!("chain rule {}", m.name()),
            chain < 1e-9,
            format!("max |backward - forward S_n| = {chain:.3e}"),
        ));
    }
    out
}

fn pressure_suite() -> Vec<Check> {
    let mut out = Vec::new();
    let ds: Vec<f64> = (-8..=8).map(|k| k as f64 * 0.25).collect();
    for m in models() {
        let e = match PressureEngine::new(&m, PressureOptions::default()) {
            Ok(e) => e,
            Err(err) => {
                out.push(failed("pressure", m.name().to_string(), err));
                continue;
            }
        };
        let pts: Vec<_> = ds.iter().map(|&d| e.extrapolated(d)).collect();
        let mono = pts.windows(2).all(|w| w[1].value <= w[0].value + w[0].err + w[1].err);
        let convex = pts
            .windows(3)
            .all(|w| w[0].value + w[2].value - 2.0 * w[1].value >= -2.0 * (w[0].err + w[1].err + w[2].err) - 1e-12);
        let brackets = pts.iter().all(|p| p.lower <= p.value && p.value <= p.upper);
        out.push(check("pressure", format!("monotone {}", m.name()), mono, String::new()));
        out.push(check("pressure", format!("convex {}", m.name()), convex, String::new()));
        out.push(check("pressure", format!("value inside bracket {}", m.name()), brackets, String::new()));
        if m.is_linear() {
            let mut worst = 0.0f64;
            let mut inside = true;
            for p in &pts {
                let exact = pressure_matrix_oracle(&m, &m.language(), p.d).unwrap_or(f64::NAN);
                worst = worst.max((exact - p.value).abs());
                inside &= p.lower <= exact && exact <= p.upper && (exact - p.value).abs() <= p.err;
            }
            out.push(check(
                "pressure",
                format!("matrix oracle {}", m.name()),
                inside && worst < 1e-6,
                format!("max deviation {worst:.3e}"),
            ));
        }
    }
    out
}

fn spectrum_suite() -> Vec<Check> {
    let mut out = Vec::new();
    let g = MapModel::gc24();
    let e = match PressureEngine::new(&g, PressureOptions::default()) {
        Ok(e) => e,
        Err(err) => return vec![failed("spectrum", "gc24", err)],
    };
    match spectrum_curve(&e, 41) {
        Ok(c) => {
            out.push(check("spectrum", "concave gc24", c.is_concave(1e-6), String::new()));
            let mut worst = 0.0f64;
            for p in c.points.iter().filter(|p| p.attained) {
                let h = 1e-4;
                let slope = (e.value(p.minimizer + h) - e.value(p.minimizer - h)) / (2.0 * h);
                worst = worst.max((slope + p.alpha).abs());
            }
            out.push(check("spectrum", "duality gc24", worst <= 1e-3, format!("max |P'(d*) + α| = {worst:.3e}")));
            let mut bern = 0.0f64;
            for k in 1..=20 {
                let p = k as f64 / 21.0;
                let h = -(p * p.ln() + (1.0 - p) * (1.0 - p).ln());
                let chi = p * 2f64.ln() + (1.0 - p) * 4f64.ln();
                let f = legendre_f(&e, chi).map(|v| v.f).unwrap_or(f64::NAN);
                bern = bern.max((f - h / chi).abs());
            }
            out.push(check("spectrum", "Bernoulli spectrum gc24", bern < 1e-6, format!("max deviation {bern:.3e}")));
        }
        Err(err) => out.push(failed("spectrum", "curve gc24", err)),
    }
    out
}

fn measures_suite() -> Vec<Check> {
    let mut out = Vec::new();
    for m in [MapModel::gc24(), MapModel::fibonacci(), MapModel::eq_exponent_triple()] {
        let host = Host::new(&m).unwrap();
        let mut worst = 0.0f64;
        let mut sums = 0.0f64;
        for q in [-2.0, -0.5, 0.0, 0.7, 1.5, 3.0] {
            match gibbs_measure(&host, q) {
                Ok(mu) => {
                    let p = pressure_matrix_oracle(&m, &m.language(), q).unwrap_or(f64::NAN);
                    worst = worst.max((mu.entropy - q * mu.exponent - p).abs());
                    for n in 1..=8 {
                        let words = enumerate_language(&host.language, n, 1 << 16).unwrap_or_default();
                        let s: f64 = words.iter().map(|w| mu.mass(w.symbols())).sum();
                        sums = sums.max((s - 1.0).abs());
                    }
                }
                Err(e) => out.push(failed("measures", format!("gibbs {} q={q}", m.name()), e)),
            }
        }
        out.push(check("measures", format!("equilibrium identity {}", m.name()), worst < 1e-8, format!("max |h - qχ - P| = {worst:.3e}")));
        out.push(check("measures", format!("masses sum to one {}", m.name()), sums < 1e-10, format!("{sums:.3e}")));
    }
    let g = MapModel::gc24();
    let d = 0.8;
    let p = pressure_matrix_oracle(&g, &g.language(), d).unwrap();
    let cm = ConformalMasses::new(&g, d, p, 6).unwrap();
    let mut worst = 0.0f64;
    for w in enumerate_language(&g.language(), 5, 1 << 10).unwrap() {
        for i in 0..2 {
            let mut iw = vec![i];
            iw.extend_from_slice(w.symbols());
            let a = cm.mass(&w).unwrap().center;
            let b = cm.mass(&Word(iw)).unwrap().center;
            let lam = [2f64, 4.0][i];
            worst = worst.max((a / (p.exp() * lam.powf(d) * b) - 1.0).abs());
        }
    }
    out.push(check("measures", "conformal Jacobian gc24", worst < 1e-12, format!("{worst:.3e}")));
    match Host::subsystem(&MapModel::manneville_pomeau(1.0).unwrap(), 4).and_then(|h| gibbs_measure(&h, 0.8)) {
        Ok(mu) => {
            let ok = (1..=mu.gibbs_depth).all(|n| {
                enumerate_language(&mu.host.language, n, 1 << 12)
                    .unwrap_or_default()
                    .iter()
                    .all(|w| {
                        let r = mu.gibbs_ratio(w.symbols()).unwrap_or(f64::NAN);
                        r <= mu.gibbs_constant * (1.0 + 1e-12) && r * mu.gibbs_constant >= 1.0 - 1e-12
                    })
            });
            out.push(check("measures", "Gibbs sandwich mp subsystem", ok, format!("D = {:.4}", mu.gibbs_constant)));
        }
        Err(e) => out.push(failed("measures", "Gibbs sandwich mp subsystem", e)),
    }
    out
}

fn alternating_schedule() -> Result<crate::wmeasure::WSchedule> {
    let a = 0.9 * 2f64.ln() + 0.1 * 4f64.ln();
    let b = 0.1 * 2f64.ln() + 0.9 * 4f64.ln();
    let specs: Vec<StageSpec> = [a, b, a, b]
        .iter()
        .map(|&x| StageSpec {
            level: None,
            symbols: None,
            target: StageTarget::Alpha(x),
        })
        .collect();
    build_schedule(&MapModel::gc24(), &specs, Some(&[100, 1000, 10_000, 100_000]), GrowthPolicy::default())
}

fn wmeasure_suite() -> Vec<Check> {
    let s = match alternating_schedule() {
        Ok(s) => s,
        Err(e) => return vec![failed("wmeasure", "schedule", e)],
    };
    let mut out = Vec::new();
    match sample_w_word(&s, 11) {
        Ok(t) => {
            let mu = &s.stages[0].measure;
            let w: Vec<usize> = t.word[..100].iter().map(|&x| x as usize).collect();
            let h = -mu.mass(&w).ln() / 100.0;
            let c = t.at(100).unwrap();
            out.push(check("wmeasure", "H_m is the exact cylinder mass", (h - c.h).abs() < 1e-12, format!("{:.3e}", (h - c.h).abs())));
            let ok = t.checkpoints.iter().all(|c| c.h >= 0.0 && c.l >= 2f64.ln() - 1e-12 && c.l <= 4f64.ln() + 1e-12);
            out.push(check("wmeasure", "trace ranges", ok, String::new()));
            let junction = t.junction_log_norm.iter().all(|&z| z <= 1e-15);
            out.push(check("wmeasure", "junction normaliser ≤ 1", junction, String::new()));
        }
        Err(e) => out.push(failed("wmeasure", "sample", e)),
    }
    out
}

fn entropy_suite() -> Vec<Check> {
    let m = MapModel::manneville_pomeau(1.0).unwrap();
    let mut out = Vec::new();
    let mut prev: Option<(f64, Vec<u128>)> = None;
    let mut ok = true;
    for eps in [0.2, 0.1, 0.05, 0.02] {
        match level0_cover_count(&m, eps, 6..=14) {
            Ok(c) => {
                if let Some((_, pc)) = &prev {
                    ok &= c.counts.iter().zip(pc).all(|(a, b)| a <= b);
                }
                out.push(check(
                    "entropy",
                    format!("certificate ε = {eps}"),
                    c.within_certificate(1.0) && c.rates.slope <= c.bound + 0.05,
                    format!("slope {:.4} bound {:.4}", c.rates.slope, c.bound),
                ));
                prev = Some((eps, c.counts));
            }
            Err(e) => out.push(failed("entropy", format!("ε = {eps}"), e)),
        }
    }
    out.push(check("entropy", "counts monotone in ε", ok, String::new()));
    out
}

fn determinism_suite() -> Vec<Check> {
    let mut out = Vec::new();
    let m = MapModel::manneville_pomeau(1.0).unwrap();
    let opts = PressureOptions {
        depth: Some(12),
        ..PressureOptions::default()
    };
    let run = |threads: usize| -> Option<Vec<u64>> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().ok()?;
        pool.install(|| {
            let e = PressureEngine::new(&m, opts.clone()).ok()?;
            Some([-1.0, 0.3, 0.9].iter().flat_map(|&d| {
                let p = e.extrapolated(d);
                [p.value.to_bits(), p.lower.to_bits(), p.upper.to_bits()]
            }).collect())
        })
    };
    let a = run(1);
    let b = run(3);
    out.push(check("determinism", "pressure independent of thread count", a.is_some() && a == b, String::new()));
    if let Ok(s) = alternating_schedule() {
        let t1 = sample_w_word(&s, 5).ok();
        let t2 = sample_w_word(&s, 5).ok();
        out.push(check("determinism", "w-sampler reproducible from seed", t1.is_some() && t1 == t2, String::new()));
    }
    out
}

