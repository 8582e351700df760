//! One line per acceptance criterion. Exits nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use lyapspec::entropy::{theorem2_report, EPSILON_LADDER};
use lyapspec::maps::MapModel;
use lyapspec::numeric::golden_min;
use lyapspec::pressure::{check_pm_convergence, d_zero, pressure_matrix_oracle, PressureEngine, PressureOptions};
use lyapspec::spectrum::{check_fm_convergence, dim_level_sets, legendre_f, spectrum_curve};
use lyapspec::wmeasure::{build_schedule, sample_many, verify_oscillation, GrowthPolicy, StageSpec, StageTarget};

const ORACLE_TOL: f64 = 1e-6;
const GC24_D0_WIDTH: f64 = 1e-3;
const GC24_D0: f64 = 0.694242;
const DOUBLING_TOL: f64 = 1e-12;
const MP_D0_WIDTH: f64 = 2e-2;
const SPECTRUM_TOL: f64 = 1e-6;
const ENDPOINT_F: f64 = 1e-3;
const FM_GAP: f64 = 0.05;
const REGULAR_TOL: f64 = 1e-3;
const W_DEV: f64 = 0.10;
const W_SEED_SHARE: f64 = 0.90;
const W_RATIO_SLACK: f64 = 0.05;
const ENTROPY_SLACK: f64 = 0.05;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn timed(limit: Duration, start: Instant, mut o: Outcome) -> Outcome {
    let t = start.elapsed();
    o.detail = format!("{} [{:.1}s / {}s]", o.detail, t.as_secs_f64(), limit.as_secs());
    o.pass &= t < limit;
    o
}

fn mp(s: f64) -> MapModel {
    MapModel::manneville_pomeau(s).unwrap()
}

fn engine(model: &MapModel) -> PressureEngine {
    PressureEngine::new(model, PressureOptions::default()).unwrap()
}

fn pressure_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut contained = true;
    for model in [MapModel::gc24(), MapModel::fibonacci()] {
        let opts = PressureOptions {
            depth: Some(20),
            ..PressureOptions::default()
        };
        let e = PressureEngine::new(&model, opts).unwrap();
        for d in [-2.0, -1.0, 0.0, 0.5, 1.0, 2.0] {
            let exact = pressure_matrix_oracle(&model, &model.language(), d).unwrap();
            let p = e.extrapolated(d);
            worst = worst.max((p.value - exact).abs());
            contained &= p.lower <= exact && exact <= p.upper;
        }
    }
    timed(
        Duration::from_secs(10),
        start,
        outcome(
            worst < ORACLE_TOL && contained,
            format!("max |P - oracle| = {worst:.2e}, brackets contain oracle: {contained}"),
        ),
    )
}

fn d_zero_roots() -> Outcome {
    let start = Instant::now();
    let g = d_zero(&engine(&MapModel::gc24()), GC24_D0_WIDTH).unwrap();
    let dbl = d_zero(&engine(&MapModel::doubling()), 1e-3).unwrap();
    let m = d_zero(&engine(&mp(1.0)), 1e-3).unwrap();
    let ok = g.width() <= GC24_D0_WIDTH
        && g.contains(GC24_D0)
        && (dbl.estimate - 1.0).abs() <= DOUBLING_TOL
        && m.contains(1.0)
        && m.width() <= MP_D0_WIDTH;
    timed(
        Duration::from_secs(60),
        start,
        outcome(
            ok,
            format!(
                "gc24 [{:.6}, {:.6}], doubling {}, mp(1) [{:.6}, {:.6}]",
                g.lo, g.hi, dbl.estimate, m.lo, m.hi
            ),
        ),
    )
}

fn bernoulli_spectrum(alpha: f64) -> f64 {
    let (l2, l4) = (2f64.ln(), 4f64.ln());
    let p = (l4 - alpha) / (l4 - l2);
    let h = -p * p.ln() - (1.0 - p) * (1.0 - p).ln();
    h / alpha
}

fn legendre_vs_closed_form() -> Outcome {
    let start = Instant::now();
    let e = engine(&MapModel::gc24());
    let curve = spectrum_curve(&e, 22).unwrap();
    let interior = &curve.points[1..curve.points.len() - 1];
    let worst = interior
        .iter()
        .map(|p| (p.f - bernoulli_spectrum(p.alpha)).abs())
        .fold(0.0, f64::max);
    let ends = [2f64.ln(), 4f64.ln()].map(|a| legendre_f(&e, a).unwrap().f);
    let (lo, hi) = (curve.alpha_minus, curve.alpha_plus);
    let (_, neg_max) = golden_min(|a| -legendre_f(&e, a).map_or(f64::NEG_INFINITY, |v| v.f), lo, hi, 1e-9);
    let max_f = -neg_max;
    let ok = interior.len() == 20
        && worst < SPECTRUM_TOL
        && ends.iter().all(|f| *f <= ENDPOINT_F)
        && curve.f0.contains(max_f);
    timed(
        Duration::from_secs(30),
        start,
        outcome(
            ok,
            format!(
                "{} interior points, max dev {worst:.2e}, F(log2) = {:.1e}, F(log4) = {:.1e}, max F = {max_f:.6} in [{:.6}, {:.6}]",
                interior.len(),
                ends[0],
                ends[1],
                curve.f0.lo,
                curve.f0.hi
            ),
        ),
    )
}

const LEVELS: [usize; 4] = [2, 3, 4, 5];

fn pressure_ladder() -> Outcome {
    let start = Instant::now();
    let model = mp(1.0);
    let mut bad = Vec::new();
    for d in [-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0] {
        let t = check_pm_convergence(&model, d, &LEVELS, &PressureOptions::default()).unwrap();
        if !t.monotone {
            bad.push(d);
        }
    }
    timed(
        Duration::from_secs(300),
        start,
        outcome(bad.is_empty(), format!("P_m(d) nondecreasing for m = 2..5; violations at d = {bad:?}")),
    )
}

fn spectrum_ladder() -> Outcome {
    let start = Instant::now();
    let t = check_fm_convergence(&mp(1.0), 0.5, &LEVELS, &PressureOptions::default()).unwrap();
    let rows: Vec<String> = t.rows.iter().map(|(m, v)| format!("F_{m} = {}", v.f)).collect();
    timed(
        Duration::from_secs(300),
        start,
        outcome(
            t.monotone && t.gap < FM_GAP,
            format!(
                "{}, F = {:.6}, gap {} (needs < {FM_GAP})",
                rows.join(", "),
                t.full.f,
                t.gap
            ),
        ),
    )
}

fn level_sets() -> Outcome {
    let start = Instant::now();
    let e = engine(&MapModel::gc24());
    let z = d_zero(&e, GC24_D0_WIDTH).unwrap();
    let r = dim_level_sets(&e, 2f64.ln(), 4f64.ln()).unwrap();
    let ok = z.contains(r.irregular) && r.regular.abs() <= REGULAR_TOL;
    timed(
        Duration::from_secs(10),
        start,
        outcome(
            ok,
            format!(
                "irregular {:.6} in [{:.6}, {:.6}], regular {:.1e}",
                r.irregular, z.lo, z.hi, r.regular
            ),
        ),
    )
}

fn w_sampler() -> Outcome {
    let start = Instant::now();
    let a = 0.9 * 2f64.ln() + 0.1 * 4f64.ln();
    let b = 0.1 * 2f64.ln() + 0.9 * 4f64.ln();
    let specs: Vec<StageSpec> = [a, b, a, b, a]
        .iter()
        .map(|&x| StageSpec {
            level: None,
            symbols: None,
            target: StageTarget::Alpha(x),
        })
        .collect();
    let times = [100, 1_000, 10_000, 100_000, 1_000_000];
    let sched = build_schedule(&MapModel::gc24(), &specs, Some(&times), GrowthPolicy::default()).unwrap();
    let seeds: Vec<u64> = (1..=20).collect();
    let traces = sample_many(&sched, &seeds).unwrap();
    let reports: Vec<_> = traces.iter().map(|t| verify_oscillation(t, &sched)).collect();
    let good = reports.iter().filter(|r| r.max_stage_dev_from(3) < W_DEV).count();
    let worst_dev = reports.iter().map(|r| r.max_stage_dev_from(3)).fold(0.0, f64::max);
    let ratio_ok = reports.iter().all(|r| r.late_min_ratio >= r.d_floor - W_RATIO_SLACK);
    let min_ratio = reports.iter().map(|r| r.late_min_ratio).fold(f64::INFINITY, f64::min);
    let share = good as f64 / seeds.len() as f64;
    timed(
        Duration::from_secs(300),
        start,
        outcome(
            share >= W_SEED_SHARE && ratio_ok,
            format!(
                "{good}/{} seeds within {W_DEV} (worst {worst_dev:.4}), late min H/L {min_ratio:.4} vs floor {:.4}",
                seeds.len(),
                reports[0].d_floor
            ),
        ),
    )
}

fn entropy_ladder() -> Outcome {
    let start = Instant::now();
    let r = theorem2_report(&mp(1.0), &EPSILON_LADDER, 6..=16, &PressureOptions::default(), 1e-3).unwrap();
    let slopes_ok = r.ladder.iter().all(|c| c.rates.slope <= c.bound + ENTROPY_SLACK);
    let bounds_decrease = r.ladder.windows(2).all(|w| w[1].bound < w[0].bound);
    let detail: Vec<String> = r
        .ladder
        .iter()
        .map(|c| format!("eps {}: {:.4} <= {:.4}", c.epsilon, c.rates.slope, c.bound + ENTROPY_SLACK))
        .collect();
    timed(
        Duration::from_secs(120),
        start,
        outcome(
            slopes_ok && bounds_decrease && r.slopes_monotone,
            format!("{}; slopes monotone {}", detail.join(", "), r.slopes_monotone),
        ),
    )
}

fn zero_exponent_dimension() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut ok = true;
    for s in [0.5, 1.0] {
        let z = d_zero(&engine(&mp(s)), 1e-3).unwrap();
        ok &= z.contains(1.0);
        parts.push(format!("mp({s}) F(0) in [{:.6}, {:.6}]", z.lo, z.hi));
    }
    let g = theorem2_report(&MapModel::gc24(), &EPSILON_LADDER, 6..=16, &PressureOptions::default(), 1e-3).unwrap();
    ok &= g.level0_empty;
    parts.push(format!("gc24 level set empty: {}", g.level0_empty));
    timed(Duration::from_secs(60), start, outcome(ok, parts.join(", ")))
}

fn selftest() -> Outcome {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_lyapspec")).arg("selftest").output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    let total = text.lines().count();
    let failed: Vec<&str> = text.lines().filter(|l| l.starts_with("FAIL")).collect();
    timed(
        Duration::from_secs(600),
        start,
        outcome(
            out.status.success() && failed.is_empty() && total > 0,
            format!("{} checks, {} failed {:?}", total, failed.len(), failed),
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("1 pressure oracle equivalence", pressure_oracle),
        ("2 d0 roots", d_zero_roots),
        ("3 Legendre spectrum vs closed form", legendre_vs_closed_form),
        ("4 pressure ladder P_m", pressure_ladder),
        ("4 spectrum ladder F_m(0.5)", spectrum_ladder),
        ("5 level sets at the endpoints", level_sets),
        ("6 w-sampler oscillation", w_sampler),
        ("7 zero-exponent entropy", entropy_ladder),
        ("8 zero-exponent dimension", zero_exponent_dimension),
        ("9 selftest suites", selftest),
    ];
    let mut failures = 0;
    for (name, run) in criteria {
        let o = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|e| outcome(false, format!("panicked: {e:?}")));
        failures += usize::from(!o.pass);
        println!("{} criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
