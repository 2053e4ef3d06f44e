//! Product-operator expansions.
//!
//! A [`ProductTerm`] is a tensor word over `{E, Ix, Iy, Iz}` and denotes
//! `2^(q−1)·(⊗ single-spin operators)`, where `q` is the number of non-`E`
//! letters. Single-spin terms are therefore plain `Ix`, two-spin terms are
//! `2IxIz`, and so on. Every word is a monomial matrix (one nonzero per row)
//! and `Tr(P·P) = 2^(n−2)` for all words, so coefficients are recovered
//! exactly with `c_P = Tr(m·P) / 2^(n−2)`.
//!
//! Rendering sorts terms by their active `(spin, letter)` list; inside a word
//! transverse factors are written before longitudinal ones, which yields the
//! familiar `2Iy^{C2}Iz^{C1}` form.

use std::collections::BTreeMap;
use std::fmt;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::linalg::{hermiticity_deviation, spin_bit, spins_for_dim};
use crate::{Matrix, C64};

/// Coefficients smaller than this are dropped by [`OperatorExpansion::from_dense`].
pub const DEFAULT_PRUNE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Letter {
    E,
    X,
    Y,
    Z,
}

impl Letter {
    pub const ALL: [Letter; 4] = [Letter::E, Letter::X, Letter::Y, Letter::Z];

    fn flips(self) -> bool {
        matches!(self, Letter::X | Letter::Y)
    }

    /// `⟨row| I_letter |row ⊕ flip⟩` for a single spin with `row` bit `bit`.
    fn element(self, bit: bool) -> C64 {
        match (self, bit) {
            (Letter::E, _) => C64::new(1.0, 0.0),
            (Letter::X, _) => C64::new(0.5, 0.0),
            (Letter::Y, false) => C64::new(0.0, -0.5),
            (Letter::Y, true) => C64::new(0.0, 0.5),
            (Letter::Z, false) => C64::new(0.5, 0.0),
            (Letter::Z, true) => C64::new(-0.5, 0.0),
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Letter::E => "E",
            Letter::X => "Ix",
            Letter::Y => "Iy",
            Letter::Z => "Iz",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProductTerm {
    letters: Vec<Letter>,
}

impl ProductTerm {
    pub fn new(letters: Vec<Letter>) -> Self {
        ProductTerm { letters }
    }

    pub fn identity(n: usize) -> Self {
        ProductTerm::new(vec![Letter::E; n])
    }

    /// `I_letter` on spin `k` of `n`.
    pub fn single(n: usize, k: usize, letter: Letter) -> Self {
        ProductTerm::from_factors(n, &[(k, letter)])
    }

    /// Word with the given `(spin, letter)` factors and `E` elsewhere.
    ///
    /// Panics if a spin index is out of range.
    pub fn from_factors(n: usize, factors: &[(usize, Letter)]) -> Self {
        let mut letters = vec![Letter::E; n];
        for &(k, l) in factors {
            letters[k] = l;
        }
        ProductTerm::new(letters)
    }

    /// Parses a word written with spin labels, e.g. `2Iy^{C2}Iz^{C1}`,
    /// `Iz^{H1}` or `E`. A leading integer, if present, must equal the
    /// normalisation `2^(q−1)`.
    pub fn parse_labeled(text: &str, labels: &[&str]) -> Result<Self> {
        let bad = || Error::InvalidTerm(text.to_string());
        let s = text.trim();
        let n = labels.len();
        if s == "E" {
            return Ok(ProductTerm::identity(n));
        }
        let digits = s.chars().take_while(char::is_ascii_digit).count();
        let prefix = if digits > 0 {
            Some(s[..digits].parse::<u64>().map_err(|_| bad())?)
        } else {
            None
        };
        let mut rest = &s[digits..];
        let mut letters = vec![Letter::E; n];
        let mut q = 0;
        while !rest.is_empty() {
            let letter = match rest.get(..2) {
                Some("Ix") => Letter::X,
                Some("Iy") => Letter::Y,
                Some("Iz") => Letter::Z,
                _ => return Err(bad()),
            };
            rest = rest[2..].strip_prefix("^{").ok_or_else(bad)?;
            let close = rest.find('}').ok_or_else(bad)?;
            let label = &rest[..close];
            rest = &rest[close + 1..];
            let k = labels
                .iter()
                .position(|l| *l == label)
                .ok_or_else(|| Error::UnknownLabel(label.to_string()))?;
            if letters[k] != Letter::E {
                return Err(bad());
            }
            letters[k] = letter;
            q += 1;
        }
        if q == 0 {
            return Err(bad());
        }
        let norm = 1u64 << (q - 1);
        match prefix {
            Some(p) if p != norm => Err(bad()),
            None if norm != 1 => Err(bad()),
            _ => Ok(ProductTerm::new(letters)),
        }
    }

    pub fn n_spins(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    /// Number of non-`E` letters.
    pub fn order(&self) -> usize {
        self.letters.iter().filter(|&&l| l != Letter::E).count()
    }

    pub fn normalization(&self) -> f64 {
        2f64.powi(self.order() as i32 - 1)
    }

    fn flip_mask(&self) -> usize {
        let n = self.n_spins();
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, l)| l.flips())
            .fold(0, |m, (k, _)| m | spin_bit(n, k))
    }

    /// Nonzero entry of row `row`: `(column, value)`.
    fn row_entry(&self, row: usize) -> (usize, C64) {
        let n = self.n_spins();
        let value = self
            .letters
            .iter()
            .enumerate()
            .fold(C64::new(self.normalization(), 0.0), |acc, (k, l)| {
                acc * l.element(row & spin_bit(n, k) != 0)
            });
        (row ^ self.flip_mask(), value)
    }

    /// `Tr(m·P)`.
    pub fn trace_with(&self, m: &Matrix) -> C64 {
        // Tr(mP) = Σ_r m[r, c(r)]·P[c(r), r], and P[c, r] is row c's entry.
        let n = self.n_spins();
        let flip = self.flip_mask();
        let norm = C64::new(self.normalization(), 0.0);
        let active: Vec<(usize, Letter)> = self
            .letters
            .iter()
            .enumerate()
            .filter(|(_, l)| **l != Letter::E)
            .map(|(k, l)| (spin_bit(n, k), *l))
            .collect();
        (0..m.nrows())
            .map(|r| {
                let p = active
                    .iter()
                    .fold(norm, |acc, &(bit, l)| acc * l.element(r & bit != 0));
                m[[r ^ flip, r]] * p
            })
            .sum()
    }

    fn sort_key(&self) -> Vec<(usize, Letter)> {
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, l)| **l != Letter::E)
            .map(|(k, l)| (k, *l))
            .collect()
    }

    /// Renders the word with spin labels, e.g. `2Ix^{C2}Iz^{C1}`.
    pub fn display_with(&self, labels: &[&str]) -> String {
        let mut factors = self.sort_key();
        if factors.is_empty() {
            return "E".into();
        }
        factors.sort_by_key(|&(k, l)| (l == Letter::Z, k));
        let mut out = String::new();
        if factors.len() > 1 {
            out.push_str(&format!("{}", 1u64 << (factors.len() - 1)));
        }
        for (k, l) in factors {
            out.push_str(&format!("{l}^{{{}}}", labels[k]));
        }
        out
    }
}

/// Sparse map from product terms to real coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorExpansion {
    n_spins: usize,
    terms: BTreeMap<ProductTerm, f64>,
}

impl OperatorExpansion {
    pub fn new(n_spins: usize) -> Self {
        OperatorExpansion {
            n_spins,
            terms: BTreeMap::new(),
        }
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds `coefficient` to `term`; a term that cancels to exactly zero is removed.
    ///
    /// Panics if the word length does not match.
    pub fn add(&mut self, term: ProductTerm, coefficient: f64) {
        assert_eq!(term.n_spins(), self.n_spins, "product term length mismatch");
        let entry = self.terms.entry(term).or_insert(0.0);
        *entry += coefficient;
        if *entry == 0.0 {
            self.terms.retain(|_, c| *c != 0.0);
        }
    }

    pub fn with(mut self, term: ProductTerm, coefficient: f64) -> Self {
        self.add(term, coefficient);
        self
    }

    /// Coefficient of `term`, zero if absent.
    pub fn get(&self, term: &ProductTerm) -> f64 {
        self.terms.get(term).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ProductTerm, f64)> {
        self.terms.iter().map(|(t, c)| (t, *c))
    }

    pub fn prune(&mut self, tol: f64) {
        self.terms.retain(|_, c| c.abs() >= tol);
    }

    /// Largest coefficient difference over the union of both term sets.
    pub fn max_difference(&self, other: &OperatorExpansion) -> f64 {
        self.terms
            .keys()
            .chain(other.terms.keys())
            .map(|t| (self.get(t) - other.get(t)).abs())
            .fold(0.0, f64::max)
    }

    /// `Σ c_P·P` as a dense `2^n × 2^n` matrix.
    pub fn to_dense(&self) -> Matrix {
        let dim = 1 << self.n_spins;
        let mut m = Array2::zeros((dim, dim));
        for (term, c) in &self.terms {
            for r in 0..dim {
                let (col, v) = term.row_entry(r);
                m[[r, col]] += v * *c;
            }
        }
        m
    }

    /// Expands a Hermitian matrix; coefficients below `tol` are dropped.
    pub fn from_dense(m: &Matrix, tol: f64) -> Result<Self> {
        let n = dims_to_spins(m)?;
        let dev = hermiticity_deviation(m);
        if dev > tol {
            return Err(Error::NotHermitian(dev));
        }
        let norm = 2f64.powi(n as i32 - 2);
        let mut exp = OperatorExpansion::new(n);
        let mut letters = vec![Letter::E; n];
        for code in 0..(1usize << (2 * n)) {
            for (k, l) in letters.iter_mut().enumerate() {
                *l = Letter::ALL[(code >> (2 * (n - 1 - k))) & 3];
            }
            let term = ProductTerm::new(letters.clone());
            let c = term.trace_with(m).re / norm;
            if c.abs() >= tol {
                exp.terms.insert(term, c);
            }
        }
        Ok(exp)
    }

    /// Coefficient of a single term in a dense matrix.
    pub fn coefficient_in(m: &Matrix, term: &ProductTerm) -> Result<f64> {
        let n = dims_to_spins(m)?;
        if term.n_spins() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: term.n_spins(),
            });
        }
        Ok(term.trace_with(m).re / 2f64.powi(n as i32 - 2))
    }

    /// Deterministic rendering such as `1.000·Iz^{C1} + 0.707·2Ix^{C2}Iz^{C1}`.
    ///
    /// Panics if `labels` does not have one entry per spin.
    pub fn format(&self, labels: &[&str]) -> String {
        assert_eq!(labels.len(), self.n_spins, "one label per spin");
        let mut terms: Vec<_> = self.terms.iter().collect();
        terms.sort_by_key(|t| t.0.sort_key());
        if terms.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (i, (term, c)) in terms.into_iter().enumerate() {
            let sign = if *c < 0.0 { '-' } else { '+' };
            match (i, sign) {
                (0, '-') => out.push('-'),
                (0, _) => {}
                _ => out.push_str(&format!(" {sign} ")),
            }
            out.push_str(&format!("{:.3}·{}", c.abs(), term.display_with(labels)));
        }
        out
    }
}

fn dims_to_spins(m: &Matrix) -> Result<usize> {
    let (rows, cols) = m.dim();
    if rows != cols {
        return Err(Error::DimensionMismatch {
            expected: rows,
            found: cols,
        });
    }
    spins_for_dim(rows).ok_or(Error::NotPowerOfTwo(rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn single_iz_dense() {
        let m = OperatorExpansion::new(1)
            .with(ProductTerm::single(1, 0, Letter::Z), 1.0)
            .to_dense();
        assert_eq!(m[[0, 0]], c(0.5));
        assert_eq!(m[[1, 1]], c(-0.5));
        assert_eq!(m[[0, 1]], c(0.0));
    }

    #[test]
    fn two_spin_zz_dense() {
        let zz = ProductTerm::new(vec![Letter::Z, Letter::Z]);
        let m = OperatorExpansion::new(2).with(zz, 1.0).to_dense();
        let diag: Vec<f64> = (0..4).map(|i| m[[i, i]].re).collect();
        assert_eq!(diag, [0.5, -0.5, -0.5, 0.5]);
        assert_eq!(
            crate::linalg::max_abs(&(m.clone() - Array2::from_diag(&m.diag().to_owned()))),
            0.0
        );
    }

    #[test]
    fn iy_matrix_elements() {
        let m = OperatorExpansion::new(1)
            .with(ProductTerm::single(1, 0, Letter::Y), 1.0)
            .to_dense();
        assert_eq!(m[[0, 1]], C64::new(0.0, -0.5));
        assert_eq!(m[[1, 0]], C64::new(0.0, 0.5));
    }

    #[test]
    fn from_dense_simple() {
        let mut m = Array2::zeros((2, 2));
        m[[0, 0]] = c(0.5);
        m[[1, 1]] = c(-0.5);
        let exp = OperatorExpansion::from_dense(&m, DEFAULT_PRUNE_TOL).unwrap();
        assert_eq!(exp.len(), 1);
        assert!((exp.get(&ProductTerm::single(1, 0, Letter::Z)) - 1.0).abs() < 1e-15);

        let two = OperatorExpansion::new(2)
            .with(ProductTerm::single(2, 0, Letter::Z), 1.0)
            .with(ProductTerm::single(2, 1, Letter::Z), 3.977);
        let back = OperatorExpansion::from_dense(&two.to_dense(), DEFAULT_PRUNE_TOL).unwrap();
        assert_eq!(back.len(), 2);
        assert!(back.max_difference(&two) < 1e-14);
    }

    #[test]
    fn from_dense_errors() {
        let m: Matrix = Array2::zeros((3, 3));
        assert!(matches!(
            OperatorExpansion::from_dense(&m, 1e-9),
            Err(Error::NotPowerOfTwo(3))
        ));
        let mut h: Matrix = Array2::zeros((2, 2));
        h[[0, 1]] = c(1.0);
        assert!(matches!(
            OperatorExpansion::from_dense(&h, 1e-9),
            Err(Error::NotHermitian(_))
        ));
    }

    #[test]
    fn words_are_trace_orthogonal() {
        let n = 2;
        let words: Vec<ProductTerm> = (0..16)
            .map(|code| ProductTerm::new(vec![Letter::ALL[code >> 2], Letter::ALL[code & 3]]))
            .collect();
        for p in &words {
            let pm = OperatorExpansion::new(n).with(p.clone(), 1.0).to_dense();
            for q in &words {
                let t = q.trace_with(&pm);
                let expected = if p == q { 2f64.powi(n as i32 - 2) } else { 0.0 };
                assert!((t - c(expected)).norm() < 1e-15, "{p:?} {q:?} {t}");
            }
        }
    }

    #[test]
    fn parse_and_display_labeled() {
        let labels = ["C1", "C2"];
        let t = ProductTerm::parse_labeled("2Iy^{C2}Iz^{C1}", &labels).unwrap();
        assert_eq!(t, ProductTerm::new(vec![Letter::Z, Letter::Y]));
        assert_eq!(t.display_with(&labels), "2Iy^{C2}Iz^{C1}");
        assert_eq!(
            ProductTerm::parse_labeled("Iz^{C1}", &labels)
                .unwrap()
                .display_with(&labels),
            "Iz^{C1}"
        );
        assert!(ProductTerm::parse_labeled("Iy^{C2}Iz^{C1}", &labels).is_err());
        assert!(ProductTerm::parse_labeled("4Iy^{C2}Iz^{C1}", &labels).is_err());
        assert!(ProductTerm::parse_labeled("Iz^{C1}Ix^{C1}", &labels).is_err());
        assert!(matches!(
            ProductTerm::parse_labeled("Iz^{Q}", &labels),
            Err(Error::UnknownLabel(_))
        ));
    }

    #[test]
    fn format_examples() {
        let labels = ["C1", "C2"];
        let e = OperatorExpansion::new(2).with(ProductTerm::single(2, 0, Letter::Z), 1.0);
        assert_eq!(e.format(&labels), "1.000·Iz^{C1}");
        assert_eq!(OperatorExpansion::new(2).format(&labels), "0");
        let mixed = e
            .clone()
            .with(ProductTerm::new(vec![Letter::Z, Letter::Y]), -0.7072)
            .with(ProductTerm::new(vec![Letter::Z, Letter::X]), 0.25);
        assert_eq!(
            mixed.format(&labels),
            "1.000·Iz^{C1} + 0.250·2Ix^{C2}Iz^{C1} - 0.707·2Iy^{C2}Iz^{C1}"
        );
        let neg = OperatorExpansion::new(2).with(ProductTerm::single(2, 1, Letter::X), -1.0);
        assert_eq!(neg.format(&labels), "-1.000·Ix^{C2}");
    }

    fn arb_expansion(max_spins: usize) -> impl Strategy<Value = OperatorExpansion> {
        (1..=max_spins).prop_flat_map(|n| {
            prop::collection::vec((prop::collection::vec(0usize..4, n), -2.0f64..2.0), 0..12)
                .prop_map(move |terms| {
                    let mut exp = OperatorExpansion::new(n);
                    for (code, coef) in terms {
                        let word =
                            ProductTerm::new(code.into_iter().map(|i| Letter::ALL[i]).collect());
                        if coef.abs() > 1e-6 {
                            exp.add(word, coef);
                        }
                    }
                    exp.prune(1e-6);
                    exp
                })
        })
    }

    proptest! {
        #[test]
        fn dense_round_trip(exp in arb_expansion(4)) {
            let m = exp.to_dense();
            prop_assert!(hermiticity_deviation(&m) < 1e-12);
            let back = OperatorExpansion::from_dense(&m, 1e-12).unwrap();
            prop_assert!(back.max_difference(&exp) < 1e-10);
            let m2 = back.to_dense();
            prop_assert!(crate::linalg::max_abs(&(m2 - &m)) < 1e-10);
        }
    }
}
