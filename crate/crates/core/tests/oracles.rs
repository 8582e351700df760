//! Values checked against independent closed forms and brute-force sums.

use lyapspec::maps::MapModel;
use lyapspec::measures::{gibbs_measure, Host};
use lyapspec::pressure::{d_zero, PressureEngine, PressureOptions};
use lyapspec::spectrum::{legendre_f, spectrum_curve, OraclePressure};
use lyapspec::symbolic::enumerate_language;

fn gc24_pressure(d: f64) -> f64 {
    (2f64.powf(-d) + 4f64.powf(-d)).ln()
}

/// Largest eigenvalue of a nonnegative 2x2 matrix.
fn spectral_radius_2x2(m: [[f64; 2]; 2]) -> f64 {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    (tr + (tr * tr - 4.0 * det).sqrt()) / 2.0
}

fn fibonacci_pressure(model: &MapModel, d: f64) -> f64 {
    let slopes = model.slopes().unwrap();
    let rows = model.matrix().rows();
    let mut m = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            if rows[i][j] {
                m[i][j] = slopes[j].powf(-d);
            }
        }
    }
    spectral_radius_2x2(m).ln()
}

#[test]
fn gc24_pressure_closed_form() {
    let e = PressureEngine::new(&MapModel::gc24(), PressureOptions::default()).unwrap();
    for d in [-2.0, -1.0, 0.0, 0.5, 1.0, 2.0] {
        let p = e.extrapolated(d);
        let exact = gc24_pressure(d);
        assert!((p.value - exact).abs() < 1e-9, "d={d}: {} vs {exact}", p.value);
        assert!(p.lower <= exact && exact <= p.upper);
    }
}

#[test]
fn fibonacci_pressure_matches_eigenvalue() {
    let f = MapModel::fibonacci();
    let e = PressureEngine::new(&f, PressureOptions::default()).unwrap();
    for d in [-1.0, 0.0, 0.3, 1.0, 2.0] {
        let exact = fibonacci_pressure(&f, d);
        let p = e.extrapolated(d);
        assert!((p.value - exact).abs() < 1e-6, "d={d}: {} vs {exact}", p.value);
        assert!(p.lower <= exact + 1e-12 && exact <= p.upper + 1e-12);
    }
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    assert!((fibonacci_pressure(&f, 0.0) - golden.ln()).abs() < 1e-12);
}

#[test]
fn gc24_d0_solves_moran_equation() {
    // 2^-d + 4^-d = 1  =>  2^-d = (sqrt5 - 1)/2
    let exact = -(((5f64.sqrt() - 1.0) / 2.0).log2());
    let e = PressureEngine::new(&MapModel::gc24(), PressureOptions::default()).unwrap();
    let z = d_zero(&e, 1e-6).unwrap();
    assert!(z.contains(exact), "{z:?} vs {exact}");
    assert!((0.694242 - exact).abs() < 1e-6);
}

#[test]
fn gc24_spectrum_is_entropy_over_exponent() {
    let e = PressureEngine::new(&MapModel::gc24(), PressureOptions::default()).unwrap();
    let (l2, l4) = (2f64.ln(), 4f64.ln());
    for k in 1..10 {
        let p = k as f64 / 10.0;
        let chi = p * l2 + (1.0 - p) * l4;
        let h = -p * p.ln() - (1.0 - p) * (1.0 - p).ln();
        let f = legendre_f(&e, chi).unwrap();
        assert!((f.f - h / chi).abs() < 1e-6, "p={p}: {} vs {}", f.f, h / chi);
        assert!(f.attained);
    }
}

#[test]
fn three_slope_legendre_against_oracle() {
    let f = MapModel::eq_exponent_triple();
    let e = PressureEngine::new(&f, PressureOptions::default()).unwrap();
    let o = OraclePressure::new(&f).unwrap();
    let (lo, hi) = {
        let c = spectrum_curve(&e, 5).unwrap();
        (c.alpha_minus, c.alpha_plus)
    };
    for k in 1..8 {
        let a = lo + (hi - lo) * k as f64 / 8.0;
        let x = legendre_f(&e, a).unwrap().f;
        let y = legendre_f(&o, a).unwrap().f;
        assert!((x - y).abs() < 1e-6, "alpha={a}: {x} vs {y}");
    }
}

#[test]
fn gibbs_masses_are_bernoulli_on_gc24() {
    let g = MapModel::gc24();
    let host = Host::new(&g).unwrap();
    for q in [-1.0, 0.0, 0.7, 2.0] {
        let mu = gibbs_measure(&host, q).unwrap();
        let w = [2f64.powf(-q), 4f64.powf(-q)];
        let z = w[0] + w[1];
        assert!((mu.pressure - z.ln()).abs() < 1e-10);
        for word in enumerate_language(&g.language(), 5, 1 << 10).unwrap() {
            let exact: f64 = word.symbols().iter().map(|&s| w[s] / z).product();
            let m = mu.mass(word.symbols());
            assert!((m - exact).abs() < 1e-12 * exact.max(1e-300) + 1e-15, "{word}: {m} vs {exact}");
        }
    }
}

#[test]
fn mp_pressure_at_zero_is_log2_and_vanishes_past_one() {
    let m = MapModel::manneville_pomeau(1.0).unwrap();
    let e = PressureEngine::new(&m, PressureOptions::default()).unwrap();
    let p0 = e.extrapolated(0.0);
    assert!((p0.value - 2f64.ln()).abs() < 1e-9);
    for d in [1.5, 2.0, 3.0] {
        let p = e.extrapolated(d);
        assert!(p.value.abs() <= p.err.max(1e-9), "P({d}) = {}", p.value);
    }
}
