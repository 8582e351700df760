use std::sync::OnceLock;

use proptest::prelude::*;

use lyapspec::config::{parse_transition_matrix, MapConfig, ScheduleConfig};
use lyapspec::maps::MapModel;
use lyapspec::measures::{gibbs_measure, Host};
use lyapspec::pressure::{PressureEngine, PressureOptions};
use lyapspec::symbolic::{enumerate_language, Language, TransitionMatrix};

fn mp_engine() -> &'static PressureEngine {
    static E: OnceLock<PressureEngine> = OnceLock::new();
    E.get_or_init(|| {
        let m = MapModel::manneville_pomeau(1.0).unwrap();
        let opts = PressureOptions {
            depth: Some(14),
            ..PressureOptions::default()
        };
        PressureEngine::new(&m, opts).unwrap()
    })
}

fn fib_engine() -> &'static PressureEngine {
    static E: OnceLock<PressureEngine> = OnceLock::new();
    E.get_or_init(|| PressureEngine::new(&MapModel::fibonacci(), PressureOptions::default()).unwrap())
}

fn matrix() -> impl Strategy<Value = Vec<Vec<bool>>> {
    (2usize..5).prop_flat_map(|n| prop::collection::vec(prop::collection::vec(any::<bool>(), n), n))
}

fn brute_force_count(lang: &Language, alphabet: usize, n: usize) -> u128 {
    let mut total = 0;
    let mut word = vec![0usize; n];
    loop {
        if lang.is_admissible(&word) {
            total += 1;
        }
        let mut k = 0;
        loop {
            if k == n {
                return total;
            }
            word[k] += 1;
            if word[k] < alphabet {
                break;
            }
            word[k] = 0;
            k += 1;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn word_counts_match_brute_force(rows in matrix(), n in 1usize..6) {
        let Ok(m) = TransitionMatrix::new(rows) else { return Ok(()) };
        let size = m.size();
        let lang = Language::new(m);
        let count = lang.count_words(n);
        prop_assert_eq!(count, brute_force_count(&lang, size, n));
        prop_assert_eq!(enumerate_language(&lang, n, 1 << 20).unwrap().len() as u128, count);
    }

    #[test]
    fn run_limits_match_brute_force(m in 1usize..4, n in 1usize..9) {
        let lang = Language::new(TransitionMatrix::full(2).unwrap()).forbid_run(0, m).unwrap();
        let count = lang.count_words(n);
        prop_assert_eq!(count, brute_force_count(&lang, 2, n));
        for w in enumerate_language(&lang, n, 1 << 12).unwrap() {
            prop_assert!(w.symbols().windows(m).all(|r| r.iter().any(|&s| s != 0)));
        }
    }

    #[test]
    fn mp_pressure_monotone_and_convex(a in -2.0f64..3.0, b in -2.0f64..3.0, t in 0.0f64..1.0) {
        let e = mp_engine();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let slack = 1e-7;
        prop_assert!(e.value(hi) <= e.value(lo) + slack);
        let mid = lo + t * (hi - lo);
        prop_assert!(e.value(mid) <= (1.0 - t) * e.value(lo) + t * e.value(hi) + slack);
    }

    #[test]
    fn brackets_contain_value(d in -2.0f64..3.0) {
        let p = fib_engine().extrapolated(d);
        prop_assert!(p.lower <= p.value && p.value <= p.upper);
        prop_assert!(p.err >= 0.0);
    }

    #[test]
    fn gibbs_masses_are_consistent(q in -2.0f64..3.0, word in prop::collection::vec(0usize..2, 1..7)) {
        let f = MapModel::fibonacci();
        let mu = gibbs_measure(&Host::new(&f).unwrap(), q).unwrap();
        let m = mu.mass(&word);
        let children: f64 = (0..2).map(|s| {
            let mut w = word.clone();
            w.push(s);
            mu.mass(&w)
        }).sum();
        prop_assert!((m - children).abs() <= 1e-12 * m.max(1e-300));
        if m > 0.0 {
            let r = mu.gibbs_ratio(&word).unwrap();
            prop_assert!(r >= 1.0 / mu.gibbs_constant - 1e-9 && r <= mu.gibbs_constant + 1e-9);
        }
    }

    #[test]
    fn mp_config_round_trip(s in 0.05f64..4.0) {
        let text = format!("family = \"manneville-pomeau\"\ns = {s:?}\n\n[numerics]\ndepth = 12\n");
        let c = MapConfig::from_toml_str(&text).unwrap();
        let again = MapConfig::from_toml_str(&toml::to_string(&c).unwrap()).unwrap();
        prop_assert_eq!(&c, &again);
        prop_assert!(c.build().is_ok());
    }

    #[test]
    fn matrix_text_round_trip(rows in matrix()) {
        let text = format!("[{}]", rows.iter().map(|r| format!("[{}]", r.iter().map(|&b| if b { "1" } else { "0" }).collect::<Vec<_>>().join(", "))).collect::<Vec<_>>().join(", "));
        match (parse_transition_matrix(&text), TransitionMatrix::new(rows.clone())) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a.rows(), b.rows()),
            (Err(a), Err(_)) => prop_assert_eq!(a.exit_code(), 2),
            (a, b) => prop_assert!(false, "disagree: {:?} vs {:?}", a.is_ok(), b.is_ok()),
        }
    }

    #[test]
    fn schedule_stage_count(repeat in 1usize..10, qs in prop::collection::vec(-1.0f64..2.0, 1..5)) {
        let mut text = format!("repeat = {repeat}\n");
        for q in &qs {
            text.push_str(&format!("[[stage]]\nq = {q:?}\n"));
        }
        let c = ScheduleConfig::from_toml_str(&text).unwrap();
        prop_assert_eq!(c.stages().unwrap().len(), repeat * qs.len());
    }
}

#[test]
fn config_rejects_bad_input() {
    for text in [
        "family = \"linear-sft\"\nslopes = [2.0]\n",
        "family = \"preset\"\npreset = \"gc24\"\ns = 1.0\n",
        "family = \"nope\"\n",
        "family = \"preset\"\npreset = \"gc24\"\n[numerics]\ngrid = 1\n",
    ] {
        let e = MapConfig::from_toml_str(text).and_then(|c| c.build()).unwrap_err();
        assert_eq!(e.exit_code(), 2, "{text}: {e}");
    }
    let zero = parse_transition_matrix("[]").unwrap_err();
    assert_eq!(zero.exit_code(), 2);
}
