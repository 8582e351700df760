//! Perron data of nonnegative sparse matrices and the exact pressure of
//! piecewise linear models.

use crate::error::{Error, Result};
use crate::maps::MapModel;
use crate::symbolic::{Automaton, Language};

/// Row-sparse nonnegative matrix.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    pub n: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl SparseMatrix {
    fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(j, w)| w * v[j]).sum())
            .collect()
    }

    fn apply_transpose(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, w) in r {
                out[j] += w * v[i];
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Perron {
    pub log_rho: f64,
    /// Right eigenvector, normalised so that `left · right = 1`.
    pub right: Vec<f64>,
    pub left: Vec<f64>,
    /// Width of the final Collatz-Wielandt bracket on `rho`, relative.
    pub rel_width: f64,
}

struct PowerRun {
    rho: f64,
    vector: Vec<f64>,
    width: f64,
    converged: bool,
}

/// Power iteration on `M + c I`, which has the same Perron vector as `M`.
/// A positive `c` damps the near-periodic part of the spectrum.
fn power(m: &SparseMatrix, transpose: bool, tol: f64, c: f64) -> Result<PowerRun> {
    let mut v = vec![1.0; m.n];
    let mut last_width = f64::INFINITY;
    let mut rho = f64::NAN;
    for it in 0..200_000 {
        let mut w = if transpose {
            m.apply_transpose(&v)
        } else {
            m.apply(&v)
        };
        w.iter_mut().zip(&v).for_each(|(a, b)| *a += c * b);
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (a, b) in w.iter().zip(&v) {
            let r = a / b;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        let norm = w.iter().copied().fold(0.0, f64::max);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Numerical("power iteration lost positivity".into()));
        }
        v = w.into_iter().map(|x| (x / norm).max(1e-300)).collect();
        rho = 0.5 * (lo + hi) - c;
        let width = (hi - lo) / (lo - c);
        if width <= tol || (it > 1000 && width >= last_width && width < 1e2 * tol) {
            return Ok(PowerRun {
                rho,
                vector: v,
                width,
                converged: true,
            });
        }
        last_width = width;
    }
    Ok(PowerRun {
        rho,
        vector: v,
        width: last_width,
        converged: false,
    })
}

fn power_damped(m: &SparseMatrix, transpose: bool, tol: f64) -> Result<PowerRun> {
    let plain = power(m, transpose, tol, 0.0)?;
    if plain.converged {
        return Ok(plain);
    }
    let damped = power(m, transpose, tol, plain.rho)?;
    if damped.converged {
        return Ok(damped);
    }
    Err(Error::Numerical(format!(
        "power iteration did not reach relative width {tol}"
    )))
}

/// Perron root and eigenvectors of a primitive nonnegative matrix, with the
/// root bracketed by Collatz-Wielandt quotients to relative width `tol`.
pub fn perron(m: &SparseMatrix, tol: f64) -> Result<Perron> {
    let r = power_damped(m, false, tol)?;
    let l = power_damped(m, true, tol)?;
    let (rho, mut right, width, mut left, width_l) = (r.rho, r.vector, r.width, l.vector, l.width);
    let dot: f64 = left.iter().zip(&right).map(|(a, b)| a * b).sum();
    let s = dot.sqrt();
    right.iter_mut().for_each(|x| *x /= s);
    left.iter_mut().for_each(|x| *x /= s);
    Ok(Perron {
        log_rho: rho.ln(),
        right,
        left,
        rel_width: width.max(width_l),
    })
}

/// Weighted automaton matrix `M[s][t] = λ_{sym(s)}^{-d}`, scaled by
/// `exp(-shift)`. Returns the matrix and the shift.
pub fn weighted_matrix(aut: &Automaton, slopes: &[f64], d: f64) -> (SparseMatrix, f64) {
    let logw: Vec<f64> = aut
        .states()
        .iter()
        .map(|st| -d * slopes[st.symbol].ln())
        .collect();
    let shift = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let rows = (0..aut.len())
        .map(|s| {
            let w = (logw[s] - shift).exp();
            aut.successors(s).map(|(_, t)| (t, w)).collect()
        })
        .collect();
    (SparseMatrix { n: aut.len(), rows }, shift)
}

/// Exact pressure `log ρ(M)` of a piecewise linear model on `lang`.
pub fn pressure_matrix_oracle(model: &MapModel, lang: &Language, d: f64) -> Result<f64> {
    let slopes = model
        .slopes()
        .ok_or_else(|| Error::Precondition("matrix oracle needs a piecewise linear model".into()))?;
    let aut = Automaton::new(lang);
    let (m, shift) = weighted_matrix(&aut, &slopes, d);
    Ok(perron(&m, 1e-13)?.log_rho + shift)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_and_golden() {
        let g = MapModel::gc24();
        let v = pressure_matrix_oracle(&g, &g.language(), 1.0).unwrap();
        assert!((v - 0.75f64.ln()).abs() < 1e-14);
        let f = MapModel::fibonacci();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let v1 = pressure_matrix_oracle(&f, &f.language(), 1.0).unwrap();
        assert!((v1 - (phi / 2.0).ln()).abs() < 1e-13);
        let v0 = pressure_matrix_oracle(&f, &f.language(), 0.0).unwrap();
        assert!((v0 - phi.ln()).abs() < 1e-13);
    }

    #[test]
    fn rejects_nonlinear() {
        let m = MapModel::manneville_pomeau(1.0).unwrap();
        assert!(pressure_matrix_oracle(&m, &m.language(), 1.0).is_err());
    }
}
