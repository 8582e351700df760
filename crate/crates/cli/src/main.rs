mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use lyapspec::config::{MapConfig, Numerics, ScheduleConfig};
use lyapspec::entropy::{theorem2_report, DEFAULT_DEPTHS, EPSILON_LADDER};
use lyapspec::measures::{equilibrium_for_exponent, gibbs_measure, ConformalMasses, GibbsMeasure, Host};
use lyapspec::pressure::{grid, pressure_matrix_oracle, subsystem, PressureEngine, PressureOptions};
use lyapspec::spectrum::{spectrum_curve, SpectrumCurve};
use lyapspec::wmeasure::{build_schedule, sample_many, verify_oscillation};
use lyapspec::MapModel;

use output::{float, sibling, Csv, Manifest};

#[derive(Parser)]
#[command(name = "lyapspec", version, about = "Lyapunov spectra of Markov interval maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct MapArgs {
    /// TOML map description.
    #[arg(long, conflicts_with = "preset")]
    map_config: Option<PathBuf>,
    /// Built-in model: gc24, doubling, fibonacci, eq-exponent-triple.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Pressure curve P(d) with certified brackets.
    Pressure {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, default_value_t = -2.0, allow_negative_numbers = true)]
        d_min: f64,
        #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
        d_max: f64,
        #[arg(long, default_value_t = 81)]
        d_steps: usize,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Legendre spectrum F(α) and case classification.
    Spectrum {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, default_value_t = 41)]
        alpha_steps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Conformal cylinder masses and Gibbs state invariants.
    Measure {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, allow_negative_numbers = true, conflicts_with = "alpha", required_unless_present = "alpha")]
        q: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        /// Subsystem level for parabolic maps.
        #[arg(long)]
        level: Option<usize>,
        #[arg(long, default_value_t = 6)]
        depth: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample words of a w-measure schedule.
    Wsample {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long)]
        schedule_config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cylinder counts for the zero-exponent set.
    Entropy {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long)]
        epsilon: Vec<f64>,
        #[arg(long, default_value_t = *DEFAULT_DEPTHS.start())]
        depth_min: usize,
        #[arg(long, default_value_t = *DEFAULT_DEPTHS.end())]
        depth_max: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Aligned pressure and spectrum curves for plotting.
    FigureData {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, default_value_t = -2.0, allow_negative_numbers = true)]
        d_min: f64,
        #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
        d_max: f64,
        #[arg(long, default_value_t = 101)]
        d_steps: usize,
        #[arg(long, default_value_t = 41)]
        alpha_steps: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run the invariant suites.
    Selftest {
        #[arg(long)]
        suite: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Loaded {
    model: MapModel,
    numerics: Numerics,
}

fn load_map(args: &MapArgs, manifest: &mut Manifest) -> Result<Loaded> {
    let cfg = match (&args.map_config, &args.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            manifest.config_text("map_config", &text);
            MapConfig::from_toml_str(&text)?
        }
        (None, Some(name)) => {
            manifest.input("preset", name);
            MapConfig::preset(name)
        }
        (None, None) => return Err(lyapspec::Error::Schema("one of --map-config or --preset is required".into()).into()),
    };
    let model = cfg.build()?;
    manifest.input("model", model.name());
    Ok(Loaded {
        model,
        numerics: cfg.numerics,
    })
}

fn options(l: &Loaded, depth: Option<usize>) -> Result<PressureOptions> {
    let mut o = l.numerics.pressure_options()?;
    if depth.is_some() {
        o.depth = depth;
    }
    Ok(o)
}

fn cmd_pressure(map: &MapArgs, d_min: f64, d_max: f64, steps: usize, depth: Option<usize>, out: &Path) -> Result<()> {
    let mut man = Manifest::new("pressure");
    let l = load_map(map, &mut man)?;
    let opts = options(&l, depth)?;
    man.input("d", [d_min, d_max, steps as f64]);
    man.input("options", format!("{opts:?}"));
    let engine = PressureEngine::new(&l.model, opts)?;
    let mut csv = Csv::new(&["d", "P_lower", "P_upper", "P_extrapolated", "err", "depth"]);
    for d in grid(d_min, d_max, steps) {
        let p = engine.extrapolated(d);
        csv.row(&[float(d), float(p.lower), float(p.upper), float(p.value), float(p.err), p.depth.to_string()]);
        man.quantity(&format!("P({d})"), p.value, p.err);
        if let Some(w) = p.warning {
            man.warn(w);
        }
    }
    csv.write(out)?;
    man.write(&sibling(out, ".manifest.json"))?;
    println!("{}: {} rows at depth {} -> {}", l.model.name(), steps, engine.depth(), out.display());
    Ok(())
}

#[derive(Serialize)]
struct SpectrumSide {
    alpha_minus: f64,
    alpha_plus: f64,
    d0_lo: f64,
    d0_hi: f64,
    d0_estimate: f64,
    case: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha_plateau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    left_derivative: Option<f64>,
}

fn spectrum_side(c: &SpectrumCurve) -> SpectrumSide {
    SpectrumSide {
        alpha_minus: c.alpha_minus,
        alpha_plus: c.alpha_plus,
        d0_lo: c.f0.lo,
        d0_hi: c.f0.hi,
        d0_estimate: c.f0.estimate,
        case: c.case.to_string(),
        alpha_plateau: c.alpha_plateau,
        left_derivative: c.left_derivative,
    }
}

fn spectrum_csv(c: &SpectrumCurve) -> Csv {
    let mut csv = Csv::new(&["alpha", "F", "minimizer_d", "attained_flag"]);
    for p in &c.points {
        csv.row(&[float(p.alpha), float(p.f), float(p.minimizer), (p.attained as u8).to_string()]);
    }
    csv
}

fn record_spectrum(man: &mut Manifest, c: &SpectrumCurve) {
    man.quantity("d0", c.f0.estimate, c.f0.width());
    man.record("d0_bracket", [c.f0.lo, c.f0.hi]);
    man.record("alpha_minus", c.alpha_minus);
    man.record("alpha_plus", c.alpha_plus);
    man.record("case", c.case.to_string());
    if let Some(a) = c.alpha_plateau {
        man.record("alpha_plateau", a);
    }
}

fn cmd_spectrum(map: &MapArgs, steps: usize, out: &Path) -> Result<()> {
    let mut man = Manifest::new("spectrum");
    let l = load_map(map, &mut man)?;
    man.input("alpha_steps", steps);
    let engine = PressureEngine::new(&l.model, options(&l, None)?)?;
    let curve = spectrum_curve(&engine, steps)?;
    spectrum_csv(&curve).write(out)?;
    output::write(&sibling(out, ".side.toml"), &toml_string(&spectrum_side(&curve))?)?;
    record_spectrum(&mut man, &curve);
    man.write(&sibling(out, ".manifest.json"))?;
    println!(
        "{}: case {}, d0 in [{:.6}, {:.6}], alpha in [{:.6}, {:.6}] -> {}",
        l.model.name(),
        curve.case,
        curve.f0.lo,
        curve.f0.hi,
        curve.alpha_minus,
        curve.alpha_plus,
        out.display()
    );
    Ok(())
}

fn toml_string(v: &impl Serialize) -> Result<String> {
    Ok(toml::to_string(v)?)
}

fn cmd_measure(map: &MapArgs, q: Option<f64>, alpha: Option<f64>, level: Option<usize>, depth: usize, out: &Path) -> Result<()> {
    let mut man = Manifest::new("measure");
    let l = load_map(map, &mut man)?;
    man.input("q", q);
    man.input("alpha", alpha);
    man.input("level", level);
    man.input("depth", depth);
    let host = match level {
        Some(m) => Some(Host::subsystem(&l.model, m)?),
        None => Host::new(&l.model).ok(),
    }
    .map(|h| h.with_n_rep(l.numerics.n_rep()));
    let (q, gibbs): (f64, Option<GibbsMeasure>) = match (q, alpha) {
        (_, Some(a)) => {
            let Some(h) = &host else {
                bail!(lyapspec::Error::Precondition(
                    "targeting an exponent on a parabolic map needs --level".into()
                ));
            };
            let (q, mu) = equilibrium_for_exponent(h, a)?;
            (q, Some(mu))
        }
        (Some(q), None) => (q, host.as_ref().map(|h| gibbs_measure(h, q)).transpose()?),
        (None, None) => unreachable!("clap requires --q or --alpha"),
    };
    let opts = options(&l, None)?;
    let (lang, pressure, perr) = match level {
        Some(m) => {
            let sub = subsystem(&l.model, m)?;
            let p = PressureEngine::for_subsystem(&l.model, &sub, opts)?.extrapolated(q);
            (sub.language, p.value, p.err)
        }
        None if l.model.is_linear() => (l.model.language(), pressure_matrix_oracle(&l.model, &l.model.language(), q)?, 0.0),
        None => {
            let p = PressureEngine::new(&l.model, opts)?.extrapolated(q);
            (l.model.language(), p.value, p.err)
        }
    };
    let masses = ConformalMasses::in_language(&l.model, lang, q, pressure, depth)?;
    let mut csv = Csv::new(&["word", "mass_center", "mass_lo", "mass_hi"]);
    for m in masses.level(depth)? {
        csv.row(&[m.word, float(m.center), float(m.lo), float(m.hi)]);
    }
    csv.write(out)?;
    man.quantity("q", q, 0.0);
    man.quantity("pressure", pressure, perr);
    if let Some(mu) = &gibbs {
        man.quantity("entropy", mu.entropy, 0.0);
        man.quantity("exponent", mu.exponent, 0.0);
        man.quantity("dimension", mu.dimension(), 0.0);
        man.record("gibbs_constant", mu.gibbs_constant);
        man.record("gibbs_pressure", mu.pressure);
        println!(
            "q = {q:.10}: h = {:.10}, chi = {:.10}, dim = {:.10}, D = {:.4}",
            mu.entropy,
            mu.exponent,
            mu.dimension(),
            mu.gibbs_constant
        );
    }
    man.write(&sibling(out, ".manifest.json"))?;
    Ok(())
}

fn cmd_wsample(map: &MapArgs, schedule: &Path, seed: Option<u64>, seeds: u64, out: &Path) -> Result<()> {
    let mut man = Manifest::new("wsample");
    let l = load_map(map, &mut man)?;
    let text = std::fs::read_to_string(schedule).with_context(|| format!("reading {}", schedule.display()))?;
    man.config_text("schedule_config", &text);
    let cfg = ScheduleConfig::from_toml_str(&text)?;
    let Some(seed) = seed.or(cfg.seed) else {
        bail!(lyapspec::Error::Schema("sampling needs a seed: pass --seed or set seed in the schedule".into()));
    };
    if seeds == 0 {
        bail!(lyapspec::Error::Schema("--seeds must be positive".into()));
    }
    man.input("seed", seed);
    man.input("seeds", seeds);
    let policy = cfg.policy()?;
    let sched = build_schedule(&l.model, &cfg.stages()?, cfg.switch_times.as_deref(), policy)?;
    man.record("policy", policy);
    man.record("switch_times", sched.switch_times());
    for w in &sched.warnings {
        man.warn(w.clone());
    }
    let stages: Vec<_> = sched
        .stages
        .iter()
        .map(|s| serde_json::json!({"q": s.q, "h": s.h, "chi": s.chi, "d": s.d, "rho": s.rho, "m": s.switch, "gibbs_constant": s.measure.gibbs_constant}))
        .collect();
    man.record("stages", stages);
    let seed_list: Vec<u64> = (0..seeds).map(|k| seed.wrapping_add(k)).collect();
    let traces = sample_many(&sched, &seed_list)?;
    let mut csv = Csv::new(&["seed", "m", "L_m", "H_m", "stage_index"]);
    let mut summary = Csv::new(&["seed", "stage", "m", "chi", "h", "L", "H", "l_dev", "h_dev"]);
    let mut reports = Vec::new();
    for t in &traces {
        for c in &t.checkpoints {
            csv.row(&[t.seed.to_string(), c.m.to_string(), float(c.l), float(c.h), c.stage.to_string()]);
        }
        let r = verify_oscillation(t, &sched);
        for s in &r.stages {
            summary.row(&[
                t.seed.to_string(),
                s.index.to_string(),
                s.m.to_string(),
                float(s.chi),
                float(s.h),
                float(s.l_at),
                float(s.h_at),
                float(s.l_dev),
                float(s.h_dev),
            ]);
        }
        reports.push(r);
    }
    csv.write(out)?;
    summary.write(&sibling(out, ".summary.csv"))?;
    man.record("reports", &reports);
    man.write(&sibling(out, ".manifest.json"))?;
    for r in &reports {
        println!(
            "seed {}: max stage deviation (i>=3) {:.4}, late min H/L {:.4} (floor {:.4})",
            r.seed,
            r.max_stage_dev_from(3),
            r.late_min_ratio,
            r.d_floor
        );
    }
    Ok(())
}

fn cmd_entropy(map: &MapArgs, eps: &[f64], dmin: usize, dmax: usize, out: &Path) -> Result<()> {
    let mut man = Manifest::new("entropy");
    let l = load_map(map, &mut man)?;
    let ladder: Vec<f64> = if eps.is_empty() { EPSILON_LADDER.to_vec() } else { eps.to_vec() };
    man.input("epsilon", &ladder);
    man.input("depths", [dmin, dmax]);
    let r = theorem2_report(&l.model, &ladder, dmin..=dmax, &options(&l, None)?, l.numerics.d0_tol()?)?;
    let (a, b) = l.model.interval();
    let mut csv = Csv::new(&["epsilon", "n", "count", "bound"]);
    for c in &r.ladder {
        for (&n, &k) in c.depths.iter().zip(&c.counts) {
            let bound = 2.0 * (b - a) * (1.0 + c.epsilon).powi(n as i32);
            csv.row(&[float(c.epsilon), n.to_string(), k.to_string(), float(bound)]);
        }
        man.record(&format!("slope(eps={})", c.epsilon), c.rates);
        println!("eps {:<6} slope {:.6} bound log(1+eps) = {:.6}", c.epsilon, c.rates.slope, c.bound);
    }
    csv.write(out)?;
    man.quantity("d0", r.d0.estimate, r.d0.width());
    man.record("d0_bracket", [r.d0.lo, r.d0.hi]);
    man.record("level0_empty", r.level0_empty);
    man.record("dim_lambda", r.dim_lambda);
    man.record("slopes_monotone", r.slopes_monotone);
    man.write(&sibling(out, ".manifest.json"))?;
    if r.level0_empty {
        println!("{}: uniformly expanding, zero-exponent set is empty", l.model.name());
    }
    println!("d0 in [{:.6}, {:.6}]", r.d0.lo, r.d0.hi);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_figure(map: &MapArgs, d_min: f64, d_max: f64, steps: usize, alpha_steps: usize, dir: &Path) -> Result<()> {
    let mut man = Manifest::new("figure-data");
    let l = load_map(map, &mut man)?;
    man.input("d", [d_min, d_max, steps as f64]);
    man.input("alpha_steps", alpha_steps);
    let engine = PressureEngine::new(&l.model, options(&l, None)?)?;
    let curve = spectrum_curve(&engine, alpha_steps)?;
    let mut csv = Csv::new(&["d", "P", "err"]);
    for d in grid(d_min, d_max, steps) {
        let p = engine.extrapolated(d);
        csv.row(&[float(d), float(p.value), float(p.err)]);
    }
    csv.write(&dir.join("pressure.csv"))?;
    spectrum_csv(&curve).write(&dir.join("spectrum.csv"))?;
    record_spectrum(&mut man, &curve);
    man.write(&dir.join("manifest.json"))?;
    println!("{}: case {} -> {}", l.model.name(), curve.case, dir.display());
    Ok(())
}

fn cmd_selftest(suites: &[String], out: Option<&Path>) -> Result<bool> {
    for s in suites {
        if !lyapspec::selftest::SUITES.contains(&s.as_str()) {
            bail!(lyapspec::Error::Schema(format!(
                "unknown suite {s:?}; known: {}",
                lyapspec::selftest::SUITES.join(", ")
            )));
        }
    }
    let checks = lyapspec::selftest::run(suites);
    let mut ok = true;
    for c in &checks {
        ok &= c.passed;
        println!("{} [{}] {} {}", if c.passed { "PASS" } else { "FAIL" }, c.suite, c.name, c.detail);
    }
    if let Some(p) = out {
        output::write(p, &(serde_json::to_string_pretty(&checks)? + "\n"))?;
    }
    Ok(ok)
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("LYAPSPEC_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| lyapspec::Error::Schema(format!("LYAPSPEC_THREADS must be a positive integer, got {v:?}")))?;
        if n == 0 {
            bail!(lyapspec::Error::Schema("LYAPSPEC_THREADS must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    configure_threads()?;
    match &cli.command {
        Command::Pressure { map, d_min, d_max, d_steps, depth, out } => cmd_pressure(map, *d_min, *d_max, *d_steps, *depth, out)?,
        Command::Spectrum { map, alpha_steps, out } => cmd_spectrum(map, *alpha_steps, out)?,
        Command::Measure { map, q, alpha, level, depth, out } => cmd_measure(map, *q, *alpha, *level, *depth, out)?,
        Command::Wsample { map, schedule_config, seed, seeds, out } => cmd_wsample(map, schedule_config, *seed, *seeds, out)?,
        Command::Entropy { map, epsilon, depth_min, depth_max, out } => cmd_entropy(map, epsilon, *depth_min, *depth_max, out)?,
        Command::FigureData { map, d_min, d_max, d_steps, alpha_steps, out_dir } => {
            cmd_figure(map, *d_min, *d_max, *d_steps, *alpha_steps, out_dir)?
        }
        Command::Selftest { suite, out } => return cmd_selftest(suite, out.as_deref()),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<lyapspec::Error>().map_or(1, |x| x.exit_code());
            ExitCode::from(code as u8)
        }
    }
}
