//! Shift spaces over finite alphabets.
//!
//! A [`TransitionMatrix`] fixes which symbol pairs may follow each other. A
//! [`Language`] adds two optional restrictions on top of it: a sub-alphabet
//! mask and a bound on the length of runs of a repeated symbol. Both kinds of
//! restriction are tracked by the [`Automaton`], whose states are
//! `(symbol, current run length)` pairs.

use std::fmt;

use crate::error::{Error, Result};

/// Default cap on the number of words a single enumeration may produce.
pub const DEFAULT_MAX_WORDS: u64 = 1 << 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Alphabet {
    size: usize,
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::Schema(format!(
                "alphabet needs at least 2 symbols, got {size}"
            )));
        }
        Ok(Self { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }
}

/// Square 0/1 matrix of allowed transitions. Construction enforces that the
/// matrix has no empty row or column and is primitive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionMatrix {
    size: usize,
    allowed: Vec<bool>,
}

impl TransitionMatrix {
    pub fn full(size: usize) -> Result<Self> {
        Self::new(vec![vec![true; size]; size])
    }

    pub fn new(rows: Vec<Vec<bool>>) -> Result<Self> {
        let size = rows.len();
        Alphabet::new(size)?;
        if rows.iter().any(|r| r.len() != size) {
            return Err(Error::Schema("transition matrix must be square".into()));
        }
        for i in 0..size {
            if !rows[i].iter().any(|&b| b) {
                return Err(Error::Schema(format!(
                    "transition matrix row {i} is all zeros; every symbol needs a successor for the shift to be topologically mixing"
                )));
            }
            if !rows.iter().any(|r| r[i]) {
                return Err(Error::Schema(format!(
                    "transition matrix column {i} is all zeros; every symbol needs a predecessor for the shift to be topologically mixing"
                )));
            }
        }
        let m = Self {
            size,
            allowed: rows.into_iter().flatten().collect(),
        };
        if m.primitivity_exponent().is_none() {
            return Err(Error::Schema(format!(
                "transition matrix is not topologically mixing: no power up to {} is strictly positive",
                size * size
            )));
        }
        Ok(m)
    }

    pub fn from_integers(rows: &[Vec<i64>]) -> Result<Self> {
        let mut out = Vec::with_capacity(rows.len());
        for row in rows {
            let mut r = Vec::with_capacity(row.len());
            for &v in row {
                match v {
                    0 => r.push(false),
                    1 => r.push(true),
                    _ => {
                        return Err(Error::Schema(format!(
                            "transition matrix entries must be 0 or 1, got {v}"
                        )))
                    }
                }
            }
            out.push(r);
        }
        Self::new(out)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn allows(&self, from: usize, to: usize) -> bool {
        self.allowed[from * self.size + to]
    }

    pub fn is_full(&self) -> bool {
        self.allowed.iter().all(|&b| b)
    }

    pub fn rows(&self) -> Vec<Vec<bool>> {
        self.allowed.chunks(self.size).map(|c| c.to_vec()).collect()
    }

    /// Smallest `k <= p^2` with `A^k` strictly positive.
    pub fn primitivity_exponent(&self) -> Option<usize> {
        let n = self.size;
        boolean_primitivity(n, |i, j| self.allows(i, j), n * n)
    }
}

fn boolean_primitivity(n: usize, edge: impl Fn(usize, usize) -> bool, max_power: usize) -> Option<usize> {
    let base: Vec<bool> = (0..n * n).map(|k| edge(k / n, k % n)).collect();
    let mut power = base.clone();
    for k in 1..=max_power {
        if power.iter().all(|&b| b) {
            return Some(k);
        }
        let mut next = vec![false; n * n];
        for i in 0..n {
            for l in 0..n {
                if !power[i * n + l] {
                    continue;
                }
                for j in 0..n {
                    if base[l * n + j] {
                        next[i * n + j] = true;
                    }
                }
            }
        }
        if next == power {
            return None;
        }
        power = next;
    }
    None
}

/// Finite sequence of symbols.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word(pub Vec<usize>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    pub fn repeat(symbol: usize, n: usize) -> Self {
        Word(vec![symbol; n])
    }

    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.contains(',') {
            s.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::Schema(format!("bad symbol {t:?} in word")))
                })
                .collect::<Result<Vec<_>>>()
                .map(Word)
        } else {
            s.chars()
                .map(|c| {
                    c.to_digit(10)
                        .map(|d| d as usize)
                        .ok_or_else(|| Error::Schema(format!("bad symbol {c:?} in word")))
                })
                .collect::<Result<Vec<_>>>()
                .map(Word)
        }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.iter().all(|&s| s < 10) {
            for s in &self.0 {
                write!(f, "{s}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
            write!(f, "{}", parts.join(","))
        }
    }
}

impl From<Vec<usize>> for Word {
    fn from(v: Vec<usize>) -> Self {
        Word(v)
    }
}

/// Admissible words of a transition matrix, optionally restricted to a
/// sub-alphabet and with bounded runs of selected symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct Language {
    matrix: TransitionMatrix,
    symbols: Vec<bool>,
    /// `max_run[i] = Some(r)` forbids `r + 1` consecutive copies of `i`.
    max_run: Vec<Option<usize>>,
}

impl Language {
    pub fn new(matrix: TransitionMatrix) -> Self {
        let p = matrix.size();
        Self {
            matrix,
            symbols: vec![true; p],
            max_run: vec![None; p],
        }
    }

    /// Forbids the block `symbol^m`.
    pub fn forbid_run(mut self, symbol: usize, m: usize) -> Result<Self> {
        if m == 0 || symbol >= self.size() {
            return Err(Error::Precondition(format!(
                "cannot forbid run {symbol}^{m}"
            )));
        }
        let bound = m - 1;
        self.max_run[symbol] = Some(self.max_run[symbol].map_or(bound, |b| b.min(bound)));
        if bound == 0 {
            self.symbols[symbol] = false;
        }
        self.check_nonempty()?;
        Ok(self)
    }

    pub fn restrict_symbols(mut self, keep: &[usize]) -> Result<Self> {
        let p = self.size();
        let mut mask = vec![false; p];
        for &s in keep {
            if s >= p {
                return Err(Error::Schema(format!("symbol {s} outside alphabet of size {p}")));
            }
            mask[s] = true;
        }
        for (m, k) in self.symbols.iter_mut().zip(mask) {
            *m = *m && k;
        }
        self.check_nonempty()?;
        Ok(self)
    }

    fn check_nonempty(&self) -> Result<()> {
        let aut = Automaton::new(self);
        if aut.len() == 0 || aut.primitivity_exponent().is_none() {
            return Err(Error::Precondition(
                "restriction leaves no mixing subshift".into(),
            ));
        }
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.matrix.size()
    }

    pub fn matrix(&self) -> &TransitionMatrix {
        &self.matrix
    }

    pub fn symbol_allowed(&self, s: usize) -> bool {
        self.symbols[s]
    }

    pub fn allowed_symbols(&self) -> Vec<usize> {
        (0..self.size()).filter(|&s| self.symbols[s]).collect()
    }

    pub fn max_run(&self, s: usize) -> Option<usize> {
        self.max_run[s]
    }

    pub fn is_unrestricted(&self) -> bool {
        self.symbols.iter().all(|&b| b) && self.max_run.iter().all(|r| r.is_none())
    }

    pub fn is_admissible(&self, word: &[usize]) -> bool {
        let mut run = 0usize;
        for (k, &s) in word.iter().enumerate() {
            if s >= self.size() || !self.symbols[s] {
                return false;
            }
            if k > 0 {
                let prev = word[k - 1];
                if !self.matrix.allows(prev, s) {
                    return false;
                }
                run = if prev == s { run + 1 } else { 1 };
            } else {
                run = 1;
            }
            if let Some(r) = self.max_run[s] {
                if run > r {
                    return false;
                }
            }
        }
        true
    }

    /// Whether `symbol` may be prepended to a word starting with `first`
    /// whose leading run has length `run`. Returns the new leading run.
    pub fn prepend(&self, symbol: usize, first: usize, run: usize) -> Option<usize> {
        if !self.symbols[symbol] || !self.matrix.allows(symbol, first) {
            return None;
        }
        let new_run = if symbol == first { run + 1 } else { 1 };
        match self.max_run[symbol] {
            Some(r) if new_run > r => None,
            _ => Some(new_run),
        }
    }

    pub fn count_words(&self, n: usize) -> u128 {
        Automaton::new(self).count_words(n)
    }
}

/// Deterministic automaton recognising a [`Language`].
#[derive(Debug, Clone)]
pub struct Automaton {
    states: Vec<State>,
    /// `next[s * p + j]` is the successor of state `s` on symbol `j`.
    next: Vec<Option<usize>>,
    alphabet: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct State {
    pub symbol: usize,
    /// Current run length; `0` when the symbol's runs are unbounded.
    pub run: usize,
}

impl Automaton {
    pub fn new(lang: &Language) -> Self {
        let p = lang.size();
        let mut states = Vec::new();
        for s in 0..p {
            if !lang.symbols[s] {
                continue;
            }
            match lang.max_run[s] {
                Some(r) => states.extend((1..=r).map(|run| State { symbol: s, run })),
                None => states.push(State { symbol: s, run: 0 }),
            }
        }
        let index = |st: State| states.iter().position(|&x| x == st);
        let mut next = vec![None; states.len() * p];
        for (k, st) in states.iter().enumerate() {
            for j in 0..p {
                if !lang.symbols[j] || !lang.matrix.allows(st.symbol, j) {
                    continue;
                }
                let target = if j == st.symbol {
                    match lang.max_run[j] {
                        Some(_) => State { symbol: j, run: st.run + 1 },
                        None => *st,
                    }
                } else {
                    State {
                        symbol: j,
                        run: usize::from(lang.max_run[j].is_some()),
                    }
                };
                next[k * p + j] = index(target);
            }
        }
        Self { states, next, alphabet: p }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn state(&self, k: usize) -> State {
        self.states[k]
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn step(&self, state: usize, symbol: usize) -> Option<usize> {
        self.next[state * self.alphabet + symbol]
    }

    /// State reached after reading a single symbol from scratch.
    pub fn initial(&self, symbol: usize) -> Option<usize> {
        self.states
            .iter()
            .position(|st| st.symbol == symbol && st.run <= 1)
    }

    pub fn successors(&self, state: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.alphabet).filter_map(move |j| self.step(state, j).map(|t| (j, t)))
    }

    pub fn primitivity_exponent(&self) -> Option<usize> {
        let n = self.len();
        if n == 0 {
            return None;
        }
        boolean_primitivity(
            n,
            |i, j| (0..self.alphabet).any(|s| self.step(i, s) == Some(j)),
            n * n + 1,
        )
    }

    /// Number of accepted words of length `n`.
    pub fn count_words(&self, n: usize) -> u128 {
        if n == 0 {
            return 1;
        }
        let mut v = vec![0u128; self.len()];
        for s in 0..self.alphabet {
            if let Some(k) = self.initial(s) {
                v[k] += 1;
            }
        }
        for _ in 1..n {
            let mut w = vec![0u128; self.len()];
            for (k, &c) in v.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                for (_, t) in self.successors(k) {
                    w[t] = w[t].saturating_add(c);
                }
            }
            v = w;
        }
        v.iter().fold(0u128, |a, &b| a.saturating_add(b))
    }
}

/// Number of admissible words of length `n` for `matrix`.
pub fn count_words(matrix: &TransitionMatrix, n: usize) -> u128 {
    if n == 0 {
        return 1;
    }
    let p = matrix.size();
    let mut v = vec![1u128; p];
    for _ in 1..n {
        let mut w = vec![0u128; p];
        for i in 0..p {
            for j in 0..p {
                if matrix.allows(i, j) {
                    w[j] = w[j].saturating_add(v[i]);
                }
            }
        }
        v = w;
    }
    v.iter().fold(0u128, |a, &b| a.saturating_add(b))
}

/// Admissible words of length `n` in lexicographic order.
pub fn enumerate_words(matrix: &TransitionMatrix, n: usize, max_words: u64) -> Result<Vec<Word>> {
    enumerate_language(&Language::new(matrix.clone()), n, max_words)
}

pub fn enumerate_language(lang: &Language, n: usize, max_words: u64) -> Result<Vec<Word>> {
    let total = lang.count_words(n);
    if total > max_words as u128 {
        return Err(Error::ResourceLimit(format!(
            "{total} words at depth {n} exceeds the cap of {max_words}"
        )));
    }
    let mut out = Vec::with_capacity(total as usize);
    if n == 0 {
        out.push(Word::empty());
        return Ok(out);
    }
    let aut = Automaton::new(lang);
    let mut stack: Vec<usize> = Vec::with_capacity(n);
    let mut word: Vec<usize> = Vec::with_capacity(n);
    fn rec(
        aut: &Automaton,
        n: usize,
        state: Option<usize>,
        word: &mut Vec<usize>,
        stack: &mut Vec<usize>,
        out: &mut Vec<Word>,
    ) {
        if word.len() == n {
            out.push(Word(word.clone()));
            return;
        }
        for s in 0..aut.alphabet() {
            let next = match state {
                None => aut.initial(s),
                Some(k) => aut.step(k, s),
            };
            if let Some(t) = next {
                word.push(s);
                stack.push(t);
                rec(aut, n, Some(t), word, stack, out);
                stack.pop();
                word.pop();
            }
        }
    }
    rec(&aut, n, None, &mut word, &mut stack, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fib() -> TransitionMatrix {
        TransitionMatrix::new(vec![vec![true, true], vec![true, false]]).unwrap()
    }

    #[test]
    fn full_shift_words() {
        let a = TransitionMatrix::full(2).unwrap();
        let w = enumerate_words(&a, 3, DEFAULT_MAX_WORDS).unwrap();
        assert_eq!(w.len(), 8);
        assert_eq!(w[0].to_string(), "000");
        assert_eq!(w[7].to_string(), "111");
        assert_eq!(count_words(&a, 10), 1024);
    }

    #[test]
    fn golden_mean_words() {
        let w = enumerate_words(&fib(), 3, DEFAULT_MAX_WORDS).unwrap();
        let names: Vec<String> = w.iter().map(|w| w.to_string()).collect();
        assert_eq!(names, ["000", "001", "010", "100", "101"]);
        assert_eq!(count_words(&fib(), 5), 13);
    }

    #[test]
    fn empty_word() {
        for a in [TransitionMatrix::full(3).unwrap(), fib()] {
            let w = enumerate_words(&a, 0, DEFAULT_MAX_WORDS).unwrap();
            assert_eq!(w, vec![Word::empty()]);
            assert_eq!(count_words(&a, 0), 1);
        }
    }

    #[test]
    fn depth_cap() {
        let a = TransitionMatrix::full(2).unwrap();
        assert!(matches!(
            enumerate_words(&a, 31, DEFAULT_MAX_WORDS),
            Err(Error::ResourceLimit(_))
        ));
    }

    #[test]
    fn rejects_zero_row_and_reducible() {
        let e = TransitionMatrix::new(vec![vec![true, true], vec![false, false]]).unwrap_err();
        assert!(e.to_string().contains("mixing"));
        let e = TransitionMatrix::new(vec![vec![false, true], vec![true, false]]).unwrap_err();
        assert!(e.to_string().contains("mixing"));
        assert!(TransitionMatrix::from_integers(&[vec![1, 2], vec![1, 1]]).is_err());
    }

    #[test]
    fn run_bound_language() {
        let lang = Language::new(TransitionMatrix::full(2).unwrap())
            .forbid_run(0, 3)
            .unwrap();
        assert_eq!(lang.count_words(4), 13);
        let lang2 = Language::new(TransitionMatrix::full(2).unwrap())
            .forbid_run(0, 2)
            .unwrap();
        let w = enumerate_language(&lang2, 3, DEFAULT_MAX_WORDS).unwrap();
        let names: Vec<String> = w.iter().map(|w| w.to_string()).collect();
        assert_eq!(names, ["010", "011", "101", "110", "111"]);
    }

    #[test]
    fn word_parse_display() {
        assert_eq!(Word::parse("0110").unwrap(), Word(vec![0, 1, 1, 0]));
        assert_eq!(Word::parse("0,12,3").unwrap().to_string(), "0,12,3");
        assert!(Word::parse("0x").is_err());
    }
}
