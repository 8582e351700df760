//! Pressure of parabolic full-branch maps through the first-return system on
//! the complement of the parabolic branch.
//!
//! Orbits decompose into blocks `i 0^k` (`i` non-parabolic) with inverse
//! branches `g_i ∘ g_0^k` and return time `k + 1`. The pressure `P(d)` is the
//! zero of `p ↦ Φ(d, p)`, the log spectral radius of
//!
//! ```text
//! L h(z) = Σ_{i,k} exp(-p (k+1)) |(g_i ∘ g_0^k)'(z)|^d h(g_i ∘ g_0^k z)
//! ```
//!
//! or `0` when `Φ(d, 0) <= 0`. The operator is discretised on Chebyshev
//! nodes; blocks with `k` beyond the explicit range use the power law
//! `|(g_0^k)'| ~ C k^{-(1+s)/s}` summed in closed form. Forbidding `0^m`
//! truncates the sum at `k = m - 1`, which gives the subsystem pressures
//! exactly.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::maps::{Branch, MapModel};
use crate::numeric::brent_root;

pub const DEFAULT_NODES: usize = 24;
pub const DEFAULT_TERMS: usize = 4096;
const EXPLICIT_TERMS: usize = 256;
const BUCKET_RATIO: f64 = 1.02;

#[derive(Debug, Clone)]
struct Discretisation {
    m: usize,
    /// Node positions, interval after interval.
    nodes: Vec<f64>,
    /// Number of non-parabolic target intervals.
    targets: usize,
    terms: usize,
    buckets: Vec<(usize, usize)>,
    /// `logder[(row * targets + i) * terms + k]`.
    logder: Vec<f64>,
    /// `rows[((row * targets + i) * buckets + b) * m + c]`.
    interp: Vec<f64>,
    /// Tail constant `c` per `(row, target)` and interpolation row at the
    /// limit point per target.
    tail_c: Vec<f64>,
    tail_row: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct InducedPressure {
    fine: Discretisation,
    coarse: Discretisation,
    gamma: f64,
    truncated: bool,
}

#[derive(Debug, Clone, Copy)]
struct PhiValue {
    value: f64,
    tail_share: f64,
}

fn chebyshev(m: usize, (a, b): (f64, f64)) -> (Vec<f64>, Vec<f64>) {
    let pi = std::f64::consts::PI;
    let t: Vec<f64> = (0..m)
        .map(|j| ((2 * j + 1) as f64 * pi / (2 * m) as f64).cos())
        .collect();
    let w = (0..m)
        .map(|j| {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * ((2 * j + 1) as f64 * pi / (2 * m) as f64).sin()
        })
        .collect();
    let x = t.iter().map(|&t| 0.5 * (a + b) + 0.5 * (b - a) * t).collect();
    (x, w)
}

fn bary_row(x: f64, nodes: &[f64], weights: &[f64]) -> Vec<f64> {
    if let Some(k) = nodes.iter().position(|&n| (x - n).abs() < 1e-15) {
        let mut r = vec![0.0; nodes.len()];
        r[k] = 1.0;
        return r;
    }
    let q: Vec<f64> = nodes.iter().zip(weights).map(|(n, w)| w / (x - n)).collect();
    let s: f64 = q.iter().sum();
    q.into_iter().map(|v| v / s).collect()
}

fn buckets(terms: usize) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = (0..terms.min(EXPLICIT_TERMS)).map(|k| (k, k + 1)).collect();
    let mut k = EXPLICIT_TERMS;
    while k < terms {
        let end = (((k as f64) * BUCKET_RATIO).ceil() as usize).max(k + 1).min(terms);
        out.push((k, end));
        k = end;
    }
    out
}

impl Discretisation {
    fn new(model: &MapModel, parabolic: usize, m: usize, terms: usize, with_tail: bool) -> Self {
        let br = model.branches();
        let g0 = &br[parabolic];
        let targets: Vec<usize> = (0..br.len()).filter(|&i| i != parabolic).collect();
        let mut nodes = Vec::new();
        let mut per_target = Vec::new();
        for &i in &targets {
            let (x, w) = chebyshev(m, br[i].domain());
            nodes.extend_from_slice(&x);
            per_target.push((x, w));
        }
        let bks = buckets(terms);
        let nt = targets.len();
        let rows_n = nodes.len();
        let mut logder = vec![0.0; rows_n * nt * terms];
        let mut interp = vec![0.0; rows_n * nt * bks.len() * m];
        let mut tail_c = vec![0.0; rows_n * nt];
        let gamma = power_gamma(g0);
        for (r, &z) in nodes.iter().enumerate() {
            let mut orbit = Vec::with_capacity(terms);
            let mut x = z;
            let mut acc = 0.0;
            for k in 0..terms {
                if k > 0 {
                    x = g0.inverse(x);
                    acc += g0.log_deriv(x);
                }
                orbit.push((x, acc));
            }
            for (ti, &i) in targets.iter().enumerate() {
                let (ref tn, ref tw) = per_target[ti];
                let base = (r * nt + ti) * terms;
                let mut pos = Vec::with_capacity(terms);
                for (k, &(x, acc)) in orbit.iter().enumerate() {
                    let y = br[i].inverse(x);
                    logder[base + k] = -(acc + br[i].log_deriv(y));
                    pos.push(y);
                }
                for (b, &(lo, hi)) in bks.iter().enumerate() {
                    let mid = if hi - lo == 1 {
                        pos[lo]
                    } else {
                        // geometric centre of the bucket
                        let kc = (((lo as f64) * (hi as f64 - 1.0)).sqrt()).round() as usize;
                        pos[kc.clamp(lo, hi - 1)]
                    };
                    let row = bary_row(mid, tn, tw);
                    let off = ((r * nt + ti) * bks.len() + b) * m;
                    interp[off..off + m].copy_from_slice(&row);
                }
                if with_tail {
                    let last = terms - 1;
                    tail_c[r * nt + ti] = logder[base + last] + gamma * (last as f64).ln();
                }
            }
        }
        let mut tail_row = Vec::with_capacity(nt * m);
        for (ti, &i) in targets.iter().enumerate() {
            let (ref tn, ref tw) = per_target[ti];
            tail_row.extend(bary_row(br[i].inverse(0.0), tn, tw));
        }
        Self {
            m,
            nodes,
            targets: nt,
            terms,
            buckets: bks,
            logder,
            interp,
            tail_c: if with_tail { tail_c } else { Vec::new() },
            tail_row,
        }
    }

    fn phi(&self, d: f64, p: f64, gamma: f64) -> PhiValue {
        let n = self.nodes.len();
        let nt = self.targets;
        let m = self.m;
        let terms = self.terms;
        let log_tail = if self.tail_c.is_empty() {
            f64::NEG_INFINITY
        } else {
            log_tail_sum(p, gamma * d, terms as f64 - 0.5)
        };
        if log_tail == f64::INFINITY {
            return PhiValue {
                value: f64::INFINITY,
                tail_share: 1.0,
            };
        }
        let mut shift = f64::NEG_INFINITY;
        for r in 0..n {
            for ti in 0..nt {
                let base = (r * nt + ti) * terms;
                for k in 0..terms {
                    shift = shift.max(-p * (k + 1) as f64 + d * self.logder[base + k]);
                }
                if !self.tail_c.is_empty() {
                    shift = shift.max(d * self.tail_c[r * nt + ti] + log_tail);
                }
            }
        }
        let mut mat = DMatrix::<f64>::zeros(n, n);
        let mut wb = vec![0.0; self.buckets.len()];
        let mut tail_total = 0.0;
        let mut total = 0.0;
        for r in 0..n {
            for ti in 0..nt {
                let base = (r * nt + ti) * terms;
                for (b, &(lo, hi)) in self.buckets.iter().enumerate() {
                    let mut s = 0.0;
                    for k in lo..hi {
                        s += (-p * (k + 1) as f64 + d * self.logder[base + k] - shift).exp();
                    }
                    wb[b] = s;
                }
                let col0 = ti * m;
                for (b, &w) in wb.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    total += w;
                    let off = ((r * nt + ti) * self.buckets.len() + b) * m;
                    for c in 0..m {
                        mat[(r, col0 + c)] += w * self.interp[off + c];
                    }
                }
                if !self.tail_c.is_empty() {
                    let w = (d * self.tail_c[r * nt + ti] + log_tail - shift).exp();
                    tail_total += w;
                    total += w;
                    for c in 0..m {
                        mat[(r, col0 + c)] += w * self.tail_row[ti * m + c];
                    }
                }
            }
        }
        let lead = mat
            .complex_eigenvalues()
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        PhiValue {
            value: if lead > 0.0 { lead.ln() + shift } else { f64::NEG_INFINITY },
            tail_share: if total > 0.0 { tail_total / total } else { 0.0 },
        }
    }
}

fn power_gamma(b: &Branch) -> f64 {
    match *b {
        Branch::Power { s, .. } => (1.0 + s) / s,
        Branch::Linear { .. } => f64::INFINITY,
    }
}

/// `log Σ_{k >= K} exp(-p (k+1)) k^{-a}`, approximated by the integral from
/// `x0 = K - 1/2`.
pub(crate) fn log_tail_sum(p: f64, a: f64, x0: f64) -> f64 {
    if p <= 0.0 {
        if a <= 1.0 {
            return f64::INFINITY;
        }
        return (1.0 - a) * x0.ln() - (a - 1.0).ln() - p;
    }
    // x = x0 e^v, integrand exp(phi(v)) with phi concave.
    let phi = |v: f64| -p * (x0 * v.exp() + 1.0) + (1.0 - a) * (x0.ln() + v);
    let vmax = if a < 1.0 {
        ((1.0 - a) / (p * x0)).ln().max(0.0)
    } else {
        0.0
    };
    let top = phi(vmax);
    let mut end = vmax + 1.0;
    while phi(end) > top - 45.0 {
        end = vmax + 2.0 * (end - vmax);
        if end > 1e4 {
            break;
        }
    }
    let n = 1600;
    let h = end / n as f64;
    let mut s = 0.0;
    for j in 0..=n {
        let w = if j == 0 || j == n {
            1.0
        } else if j % 2 == 1 {
            4.0
        } else {
            2.0
        };
        s += w * (phi(j as f64 * h) - top).exp();
    }
    top + (s * h / 3.0).ln()
}

impl InducedPressure {
    /// Full system (`truncate = None`) or the subsystem forbidding
    /// `0^m` (`truncate = Some(m)`).
    pub fn new(model: &MapModel, nodes: usize, terms: usize, truncate: Option<usize>) -> Result<Self> {
        let par = model.parabolic_points();
        if par.len() != 1 || par[0].x != 0.0 || !model.matrix().is_full() {
            return Err(Error::Precondition(
                "induced evaluator needs a full-branch map with one parabolic fixed point at 0".into(),
            ));
        }
        let sym = par[0].symbol;
        let (k, tail) = match truncate {
            Some(m) if m >= 1 => (m, false),
            Some(m) => return Err(Error::Precondition(format!("truncation level {m} < 1"))),
            None => (terms, true),
        };
        let fine = Discretisation::new(model, sym, nodes, k, tail);
        let coarse = Discretisation::new(model, sym, (2 * nodes / 3).max(6), k, tail);
        Ok(Self {
            gamma: power_gamma(&model.branches()[sym]),
            fine,
            coarse,
            truncated: truncate.is_some(),
        })
    }

    fn phi(&self, d: f64, p: f64) -> f64 {
        self.fine.phi(d, p, self.gamma).value
    }

    fn phi_error(&self, d: f64, p: f64) -> f64 {
        let f = self.fine.phi(d, p, self.gamma);
        let c = self.coarse.phi(d, p, self.gamma);
        let k = self.fine.terms as f64;
        let tail_rel = if self.truncated {
            0.0
        } else {
            self.gamma * d.abs() * 2.0 * (k.ln() + 1.0) / k
        };
        (f.value - c.value).abs() + f.tail_share * tail_rel + 1e-14
    }

    /// `(P(d), error)` using `hint` as an initial bracket for the root.
    pub fn pressure(&self, d: f64, hint: (f64, f64)) -> Result<(f64, f64)> {
        let phi0 = if self.truncated { f64::NAN } else { self.phi(d, 0.0) };
        if !self.truncated && phi0.is_finite() && phi0 <= 0.0 {
            let e = self.phi_error(d, 0.0);
            if phi0 < -e {
                return Ok((0.0, 0.0));
            }
            let h = 1e-7;
            let slope = ((self.phi(d, h) - phi0) / h).abs().max(1e-300);
            return Ok((0.0, e / slope));
        }
        let (mut a, mut b) = (hint.0.min(hint.1), hint.0.max(hint.1));
        if !(a.is_finite() && b.is_finite()) {
            a = 0.0;
            b = 1.0;
        }
        a -= 1e-9 * (1.0 + a.abs());
        b += 1e-9 * (1.0 + b.abs());
        if !self.truncated {
            a = a.max(0.0);
            b = b.max(1e-12);
        }
        let mut fa = self.phi(d, a);
        let mut step = 1.0 + (b - a);
        let mut guard = 0;
        while !(fa > 0.0) {
            if self.truncated {
                a -= step;
                step *= 2.0;
            } else if a > 0.0 {
                a *= 0.5;
                if a < 1e-300 {
                    a = 0.0;
                }
            } else {
                break;
            }
            fa = self.phi(d, a);
            guard += 1;
            if guard > 2000 {
                break;
            }
        }
        if a == 0.0 && !(fa > 0.0) {
            return Ok((0.0, self.phi_error(d, 0.0)));
        }
        if fa == f64::INFINITY {
            // log-divergent at this `a`; move right until finite.
            let mut t = a.max(1e-300);
            while self.phi(d, t) == f64::INFINITY {
                t *= 2.0;
            }
            a = t;
        }
        let mut fb = self.phi(d, b);
        step = 1.0 + (b - a);
        while fb > 0.0 {
            b += step;
            step *= 2.0;
            fb = self.phi(d, b);
        }
        let root = brent_root(|p| self.phi(d, p), a, b, 1e-15)
            .ok_or_else(|| Error::Numerical(format!("no pressure root for d = {d}")))?;
        let err_phi = self.phi_error(d, root);
        let h = 1e-6 * (1.0 + root.abs());
        let lo = if self.truncated { root - h } else { (root - h).max(0.0) };
        let slope = ((self.phi(d, root + h) - self.phi(d, lo)) / (root + h - lo)).abs();
        Ok((root, err_phi / slope.max(1e-300)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_closed_form_matches_quadrature() {
        let a = 2.0;
        let x0 = 100.0;
        let exact = (1.0 - a) * f64::ln(x0) - f64::ln(a - 1.0);
        let q = log_tail_sum(1e-12, a, x0);
        assert!((q - exact).abs() < 1e-6, "{q} vs {exact}");
        // p > 0, a = 0: integral is exp(-p (x0 + 1)) / p
        let p = 0.3;
        let q = log_tail_sum(p, 0.0, x0);
        assert!((q - (-p * (x0 + 1.0) - p.ln())).abs() < 1e-9);
    }

    #[test]
    fn mp_entropy_and_tiling() {
        let m = MapModel::manneville_pomeau(1.0).unwrap();
        let ip = InducedPressure::new(&m, DEFAULT_NODES, DEFAULT_TERMS, None).unwrap();
        let (p0, e0) = ip.pressure(0.0, (0.5, 0.8)).unwrap();
        assert!((p0 - 2f64.ln()).abs() < 1e-8, "{p0} +- {e0}");
        let (p1, _) = ip.pressure(1.0, (0.0, 0.1)).unwrap();
        assert!(p1.abs() < 1e-6);
        let (p5, _) = ip.pressure(0.5, (0.0, 1.0)).unwrap();
        assert!((p5 - 0.30450).abs() < 2e-4, "{p5}");
    }

    #[test]
    fn truncated_golden_mean() {
        let m = MapModel::manneville_pomeau(1.0).unwrap();
        let ip = InducedPressure::new(&m, DEFAULT_NODES, DEFAULT_TERMS, Some(2)).unwrap();
        let (p, _) = ip.pressure(0.0, (0.0, 1.0)).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((p - phi.ln()).abs() < 1e-10);
    }
}
