//! Depth-first traversal of every admissible cylinder up to a fixed depth.
//!
//! Cylinders are built right to left: a depth-`n` node holds a grid of points
//! in `Δ_w` obtained by pushing a grid on `I_{w_n}` through inverse branches,
//! together with the Birkhoff sums `S_n log|f'|` at those points. Prepending a
//! symbol costs one inverse-branch evaluation per grid point.

use rayon::prelude::*;

use super::MapModel;
use crate::symbolic::{Language, Word};

/// View of one cylinder during a sweep.
pub struct Node<'a> {
    pub depth: usize,
    /// Symbols of the word, last symbol first.
    pub reversed: &'a [usize],
    pub points: &'a [f64],
    pub sums: &'a [f64],
    pub smin: f64,
    pub smax: f64,
}

impl Node<'_> {
    pub fn word(&self) -> Word {
        Word(self.reversed.iter().rev().copied().collect())
    }

    pub fn lo(&self) -> f64 {
        self.points[0]
    }

    pub fn hi(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    pub fn length(&self) -> f64 {
        self.hi() - self.lo()
    }

    pub fn first_symbol(&self) -> usize {
        self.reversed[self.reversed.len() - 1]
    }
}

struct Frame {
    reversed: Vec<usize>,
    run: usize,
    points: Vec<f64>,
    sums: Vec<f64>,
}

fn extremes(sums: &[f64]) -> (f64, f64) {
    sums.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &s| (a.min(s), b.max(s)))
}

fn emit<T>(acc: &mut T, f: &Frame, visit: &impl Fn(&mut T, &Node)) {
    let (smin, smax) = extremes(&f.sums);
    visit(
        acc,
        &Node {
            depth: f.reversed.len(),
            reversed: &f.reversed,
            points: &f.points,
            sums: &f.sums,
            smin,
            smax,
        },
    );
}

fn children(model: &MapModel, lang: &Language, f: &Frame) -> Vec<Frame> {
    let first = *f.reversed.last().unwrap();
    let mut out = Vec::new();
    for sym in 0..lang.size() {
        let Some(run) = lang.prepend(sym, first, f.run) else {
            continue;
        };
        let br = &model.branches()[sym];
        let points: Vec<f64> = f.points.iter().map(|&y| br.inverse(y)).collect();
        let sums = points
            .iter()
            .zip(&f.sums)
            .map(|(&x, &s)| br.log_deriv(x) + s)
            .collect();
        let mut reversed = f.reversed.clone();
        reversed.push(sym);
        out.push(Frame {
            reversed,
            run,
            points,
            sums,
        });
    }
    out
}

fn roots(model: &MapModel, lang: &Language, grid: usize) -> Vec<Frame> {
    lang.allowed_symbols()
        .into_iter()
        .map(|sym| {
            let br = &model.branches()[sym];
            let (a, b) = br.domain();
            let points: Vec<f64> = (0..grid)
                .map(|k| {
                    if k + 1 == grid {
                        b
                    } else {
                        a + (b - a) * k as f64 / (grid - 1) as f64
                    }
                })
                .collect();
            let sums = points.iter().map(|&x| br.log_deriv(x)).collect();
            Frame {
                reversed: vec![sym],
                run: 1,
                points,
                sums,
            }
        })
        .collect()
}

fn descend<T>(
    model: &MapModel,
    lang: &Language,
    depth: usize,
    frame: &Frame,
    acc: &mut T,
    visit: &impl Fn(&mut T, &Node),
) {
    if frame.reversed.len() >= depth {
        return;
    }
    for child in children(model, lang, frame) {
        emit(acc, &child, visit);
        descend(model, lang, depth, &child, acc, visit);
    }
}

/// Visits every admissible cylinder of depth `1..=depth`, with `grid` points
/// per cylinder (endpoints included).
///
/// Work is split into independent subtrees processed in parallel; the
/// returned accumulators are in a fixed order, so any order-insensitive
/// reduction over them is deterministic.
pub fn sweep<T: Send>(
    model: &MapModel,
    lang: &Language,
    depth: usize,
    grid: usize,
    init: impl Fn() -> T + Sync,
    visit: impl Fn(&mut T, &Node) + Sync,
) -> Vec<T> {
    assert!(grid >= 2, "grid needs both endpoints");
    let mut head = init();
    if depth == 0 {
        return vec![head];
    }
    let target = 4 * rayon::current_num_threads().max(1) * 8;
    let mut frontier = roots(model, lang, grid);
    for f in &frontier {
        emit(&mut head, f, &visit);
    }
    while frontier.len() < target && frontier[0].reversed.len() < depth {
        let next: Vec<Frame> = frontier
            .iter()
            .flat_map(|f| children(model, lang, f))
            .collect();
        for f in &next {
            emit(&mut head, f, &visit);
        }
        frontier = next;
    }
    let mut out: Vec<T> = frontier
        .par_iter()
        .map(|f| {
            let mut acc = init();
            descend(model, lang, depth, f, &mut acc, &visit);
            acc
        })
        .collect();
    out.insert(0, head);
    out
}

/// Cylinder sums at a single depth, compressed by merging entries with equal
/// extremes.
#[derive(Debug, Clone, Default)]
pub struct DepthSums {
    /// `(min S_n, max S_n, multiplicity)` per distinct cylinder class.
    pub entries: Vec<(f64, f64, f64)>,
    pub count: u64,
    /// Largest `max S_n - min S_n` over cylinders of this depth.
    pub spread: f64,
    /// Sum of cylinder lengths.
    pub total_length: f64,
}

impl DepthSums {
    /// `log Σ_w exp(sup_{Δ_w} -d S_n)` over the grid when `use_max`, else the
    /// corresponding infimum.
    pub fn log_sum(&self, d: f64, use_max: bool) -> f64 {
        let pick = |&(smin, smax, _): &(f64, f64, f64)| {
            let low = (d >= 0.0) == use_max;
            -d * if low { smin } else { smax }
        };
        let top = self
            .entries
            .iter()
            .map(pick)
            .fold(f64::NEG_INFINITY, f64::max);
        if !top.is_finite() {
            return top;
        }
        let s: f64 = self
            .entries
            .iter()
            .map(|e| e.2 * (pick(e) - top).exp())
            .sum();
        top + s.ln()
    }
}

/// Per-depth sums for depths `1..=depth`.
#[derive(Debug, Clone)]
pub struct SweepTable {
    pub depths: Vec<DepthSums>,
}

impl SweepTable {
    pub fn build(model: &MapModel, lang: &Language, depth: usize, grid: usize) -> Self {
        let parts = sweep(
            model,
            lang,
            depth,
            grid,
            || vec![(Vec::new(), 0.0f64, 0.0f64); depth],
            |acc: &mut Vec<(Vec<(f64, f64)>, f64, f64)>, node| {
                let slot = &mut acc[node.depth - 1];
                slot.0.push((node.smin, node.smax));
                slot.1 = slot.1.max(node.smax - node.smin);
                slot.2 += node.length();
            },
        );
        let mut depths = Vec::with_capacity(depth);
        for n in 0..depth {
            let mut raw: Vec<(f64, f64)> = Vec::new();
            let mut spread = 0.0f64;
            let mut total_length = 0.0;
            for p in &parts {
                raw.extend_from_slice(&p[n].0);
                spread = spread.max(p[n].1);
                total_length += p[n].2;
            }
            let count = raw.len() as u64;
            raw.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
            let mut entries: Vec<(f64, f64, f64)> = Vec::new();
            for (smin, smax) in raw {
                if let Some(last) = entries.last_mut() {
                    let tol = 1e-12 * (1.0 + smin.abs());
                    if (smin - last.0).abs() <= tol && (smax - last.1).abs() <= tol {
                        last.2 += 1.0;
                        continue;
                    }
                }
                entries.push((smin, smax, 1.0));
            }
            depths.push(DepthSums {
                entries,
                count,
                spread,
                total_length,
            });
        }
        Self { depths }
    }

    pub fn max_depth(&self) -> usize {
        self.depths.len()
    }

    pub fn at(&self, n: usize) -> &DepthSums {
        &self.depths[n - 1]
    }
}
