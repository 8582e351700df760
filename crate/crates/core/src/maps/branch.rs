use serde::{Deserialize, Serialize};

/// One monotone increasing branch `f_i : I_i -> I` of an interval map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Branch {
    /// `f(x) = base + slope * (x - lo)`, so the inverse maps `[base, ..]`
    /// affinely into the domain starting at `lo`.
    Linear {
        domain: (f64, f64),
        slope: f64,
        base: f64,
    },
    /// `f(x) = x + coef * x^(1+s) - shift` on a domain inside `[0, inf)`.
    Power {
        domain: (f64, f64),
        coef: f64,
        s: f64,
        shift: f64,
    },
}

const NEWTON_TOL: f64 = 1e-15;

impl Branch {
    pub fn domain(&self) -> (f64, f64) {
        match *self {
            Branch::Linear { domain, .. } | Branch::Power { domain, .. } => domain,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let (a, b) = self.domain();
        a <= x && x <= b
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, Branch::Linear { .. })
    }

    pub fn forward(&self, x: f64) -> f64 {
        match *self {
            Branch::Linear { domain, slope, base } => base + slope * (x - domain.0),
            Branch::Power { coef, s, shift, .. } => x + coef * x.powf(1.0 + s) - shift,
        }
    }

    /// `|f'(x)|`.
    pub fn deriv(&self, x: f64) -> f64 {
        match *self {
            Branch::Linear { slope, .. } => slope,
            Branch::Power { coef, s, .. } => 1.0 + coef * (1.0 + s) * x.max(0.0).powf(s),
        }
    }

    pub fn log_deriv(&self, x: f64) -> f64 {
        match *self {
            Branch::Linear { slope, .. } => slope.ln(),
            Branch::Power { coef, s, .. } => (coef * (1.0 + s) * x.max(0.0).powf(s)).ln_1p(),
        }
    }

    pub fn min_log_deriv(&self) -> f64 {
        let (a, b) = self.domain();
        self.log_deriv(a).min(self.log_deriv(b))
    }

    pub fn max_log_deriv(&self) -> f64 {
        let (a, b) = self.domain();
        self.log_deriv(a).max(self.log_deriv(b))
    }

    /// Inverse branch `g(y)`, clamped to the domain.
    pub fn inverse(&self, y: f64) -> f64 {
        match *self {
            Branch::Linear { domain, slope, base } => {
                (domain.0 + (y - base) / slope).clamp(domain.0, domain.1)
            }
            Branch::Power {
                domain,
                coef,
                s,
                shift,
            } => power_inverse(domain, coef, s, y + shift),
        }
    }
}

/// Solves `x + coef * x^(1+s) = target` on `domain` by Newton iteration from
/// the right, falling back to bisection when a step leaves the bracket.
fn power_inverse(domain: (f64, f64), coef: f64, s: f64, target: f64) -> f64 {
    let (mut lo, mut hi) = domain;
    let h = |x: f64| x + coef * x.powf(1.0 + s);
    if target <= h(lo) {
        return lo;
    }
    if target >= h(hi) {
        return hi;
    }
    let mut x = target.min(hi).max(lo);
    for _ in 0..100 {
        let resid = (x - target) + coef * x.powf(1.0 + s);
        if resid > 0.0 {
            hi = x;
        } else if resid < 0.0 {
            lo = x;
        } else {
            return x;
        }
        let d = 1.0 + coef * (1.0 + s) * x.powf(s);
        let mut next = x - resid / d;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= NEWTON_TOL * x.abs().max(f64::MIN_POSITIVE) {
            return next;
        }
        x = next;
        if hi - lo <= NEWTON_TOL * hi.abs() {
            break;
        }
    }
    x
}
