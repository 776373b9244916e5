//! Two-level designs: parsing, projection, model matrices and aberration statistics.
//!
//! Factors are indexed from 0 inside the library. Error messages and the text
//! format use 1-based row/column numbers.

use std::cmp::Ordering;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::binomial;

/// An N×m matrix over {−1, +1}; one row per run, one column per factor.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Design {
    label: String,
    runs: usize,
    factors: usize,
    // column-major
    entries: Vec<i8>,
}

impl Design {
    /// Builds a design from row vectors.
    pub fn from_rows<R: AsRef<[i8]>>(label: impl Into<String>, rows: &[R]) -> Result<Self> {
        let runs = rows.len();
        if runs < 2 {
            return Err(Error::Dimension(format!("a design needs at least 2 runs, got {runs}")));
        }
        let factors = rows[0].as_ref().len();
        if factors == 0 {
            return Err(Error::Dimension("a design needs at least 1 factor".into()));
        }
        let mut entries = vec![0i8; runs * factors];
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != factors {
                return Err(Error::Dimension(format!(
                    "row {} has {} entries, expected {}",
                    i + 1,
                    row.len(),
                    factors
                )));
            }
            for (j, &x) in row.iter().enumerate() {
                if x != 1 && x != -1 {
                    return Err(Error::Format { row: i + 1, col: j + 1, token: x.to_string() });
                }
                entries[j * runs + i] = x;
            }
        }
        Ok(Self { label: label.into(), runs, factors, entries })
    }

    /// Builds a design from columns.
    pub fn from_columns(label: impl Into<String>, columns: Vec<Vec<i8>>) -> Result<Self> {
        let factors = columns.len();
        if factors == 0 {
            return Err(Error::Dimension("a design needs at least 1 factor".into()));
        }
        let runs = columns[0].len();
        if runs < 2 {
            return Err(Error::Dimension(format!("a design needs at least 2 runs, got {runs}")));
        }
        let mut entries = Vec::with_capacity(runs * factors);
        for (j, col) in columns.into_iter().enumerate() {
            if col.len() != runs {
                return Err(Error::Dimension(format!(
                    "column {} has {} entries, expected {}",
                    j + 1,
                    col.len(),
                    runs
                )));
            }
            if let Some(i) = col.iter().position(|&x| x != 1 && x != -1) {
                return Err(Error::Format { row: i + 1, col: j + 1, token: col[i].to_string() });
            }
            entries.extend(col);
        }
        Ok(Self { label: label.into(), runs, factors, entries })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Number of runs N.
    pub fn runs(&self) -> usize {
        self.runs
    }

    /// Number of factors m.
    pub fn factors(&self) -> usize {
        self.factors
    }

    pub fn column(&self, j: usize) -> &[i8] {
        &self.entries[j * self.runs..(j + 1) * self.runs]
    }

    pub(crate) fn column_mut(&mut self, j: usize) -> &mut [i8] {
        &mut self.entries[j * self.runs..(j + 1) * self.runs]
    }

    pub fn get(&self, row: usize, col: usize) -> i8 {
        self.entries[col * self.runs + row]
    }

    pub fn row(&self, i: usize) -> Vec<i8> {
        (0..self.factors).map(|j| self.get(i, j)).collect()
    }

    pub fn column_sum(&self, j: usize) -> i64 {
        self.column(j).iter().map(|&x| x as i64).sum()
    }

    /// Every column has equal numbers of +1 and −1.
    pub fn is_level_balanced(&self) -> bool {
        (0..self.factors).all(|j| self.column_sum(j) == 0)
    }

    /// Every column sum is 0 (even N) or ±1 (odd N).
    pub fn is_near_balanced(&self) -> bool {
        let target = (self.runs % 2) as i64;
        (0..self.factors).all(|j| self.column_sum(j).abs() == target)
    }

    /// Inner product of two design columns.
    pub fn column_inner(&self, a: usize, b: usize) -> i64 {
        self.column(a)
            .iter()
            .zip(self.column(b))
            .map(|(&x, &y)| (x * y) as i64)
            .sum()
    }

    /// Canonical text form: one row per line, comma separated.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.runs * self.factors * 3);
        for i in 0..self.runs {
            for j in 0..self.factors {
                if j > 0 {
                    out.push(',');
                }
                out.push_str(if self.get(i, j) > 0 { "1" } else { "-1" });
            }
            out.push('\n');
        }
        out
    }

    /// Swaps two rows of one column in place.
    pub(crate) fn swap_in_column(&mut self, col: usize, a: usize, b: usize) {
        self.column_mut(col).swap(a, b);
    }

    /// Permutes columns: column `j` of the result is column `order[j]` of `self`.
    pub(crate) fn permute_columns(&self, order: &[usize]) -> Design {
        let mut entries = Vec::with_capacity(self.entries.len());
        for &j in order {
            entries.extend_from_slice(self.column(j));
        }
        Design { label: self.label.clone(), runs: self.runs, factors: order.len(), entries }
    }
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Parses design text: one run per line, tokens separated by commas and/or
/// whitespace, `#` comment lines and blank lines ignored.
pub fn parse_design(label: impl Into<String>, text: &str) -> Result<Design> {
    let mut rows: Vec<Vec<i8>> = Vec::new();
    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let row_no = rows.len() + 1;
        let mut row = Vec::new();
        for (j, token) in trimmed
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .enumerate()
        {
            let level = match token {
                "1" | "+1" => 1,
                "-1" | "\u{2212}1" => -1,
                _ => return Err(Error::Format { row: row_no, col: j + 1, token: token.to_string() }),
            };
            row.push(level);
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Dimension(format!(
                    "row {} has {} entries, expected {}",
                    row_no,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Dimension("design text contains no rows".into()));
    }
    Design::from_rows(label, &rows)
}

/// The N×|cols| design made of the selected columns in the given order.
pub fn project(d: &Design, cols: &[usize]) -> Result<Design> {
    if cols.is_empty() {
        return Err(Error::Argument("projection needs at least one column".into()));
    }
    let mut seen = vec![false; d.factors()];
    for &c in cols {
        if c >= d.factors() {
            return Err(Error::Argument(format!(
                "column {} out of range for a design with {} factors",
                c + 1,
                d.factors()
            )));
        }
        if std::mem::replace(&mut seen[c], true) {
            return Err(Error::Argument(format!("column {} selected twice", c + 1)));
        }
    }
    Ok(d.permute_columns(cols))
}

/// One column of a model matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Effect {
    Intercept,
    Main(usize),
    /// Two-factor interaction, first factor < second.
    Interaction(usize, usize),
}

impl Effect {
    /// Factors the effect depends on.
    pub fn factors(&self) -> Vec<usize> {
        match *self {
            Effect::Intercept => vec![],
            Effect::Main(f) => vec![f],
            Effect::Interaction(f, g) => vec![f, g],
        }
    }

    fn max_factor(&self) -> Option<usize> {
        match *self {
            Effect::Intercept => None,
            Effect::Main(f) => Some(f),
            Effect::Interaction(_, g) => Some(g),
        }
    }

    /// Weight of the effect in the region-moment matrix over [−1, 1]^k.
    pub fn moment(&self) -> f64 {
        match self {
            Effect::Intercept => 1.0,
            Effect::Main(_) => 1.0 / 3.0,
            Effect::Interaction(..) => 1.0 / 9.0,
        }
    }

    /// Value of this effect's column in run `i`.
    #[inline]
    pub fn level(&self, d: &Design, i: usize) -> i8 {
        match *self {
            Effect::Intercept => 1,
            Effect::Main(f) => d.get(i, f),
            Effect::Interaction(f, g) => d.get(i, f) * d.get(i, g),
        }
    }
}

impl fmt::Display for Effect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Effect::Intercept => write!(f, "I"),
            Effect::Main(a) => write!(f, "{}", a + 1),
            Effect::Interaction(a, b) => write!(f, "{}:{}", a + 1, b + 1),
        }
    }
}

fn check_effects(d: &Design, effects: &[Effect]) -> Result<()> {
    for e in effects {
        if let Some(f) = e.max_factor() {
            if f >= d.factors() {
                return Err(Error::Argument(format!(
                    "effect {e} references factor {} but the design has {} factors",
                    f + 1,
                    d.factors()
                )));
            }
        }
        if let Effect::Interaction(a, b) = *e {
            if a >= b {
                return Err(Error::Argument(format!("interaction ({}, {}) must have first < second", a + 1, b + 1)));
            }
        }
    }
    Ok(())
}

/// Integer-valued N×p model matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl ModelMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }
}

/// Model matrix with columns in the order of `effects`.
pub fn model_matrix(d: &Design, effects: &[Effect]) -> Result<ModelMatrix> {
    check_effects(d, effects)?;
    let (rows, cols) = (d.runs(), effects.len());
    let mut data = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        data.extend(effects.iter().map(|e| e.level(d, i) as f64));
    }
    Ok(ModelMatrix { rows, cols, data })
}

/// Exact integer information matrix X′X (row-major, p×p) for the given effects.
pub fn gram(d: &Design, effects: &[Effect]) -> Result<Vec<i64>> {
    check_effects(d, effects)?;
    Ok(gram_unchecked(d, effects))
}

pub(crate) fn gram_unchecked(d: &Design, effects: &[Effect]) -> Vec<i64> {
    let n = d.runs();
    let p = effects.len();
    let columns: Vec<Vec<i8>> = effects
        .iter()
        .map(|e| (0..n).map(|i| e.level(d, i)).collect())
        .collect();
    let mut g = vec![0i64; p * p];
    for a in 0..p {
        g[a * p + a] = n as i64;
        for b in a + 1..p {
            let s: i64 = columns[a]
                .iter()
                .zip(&columns[b])
                .map(|(&x, &y)| (x * y) as i64)
                .sum();
            g[a * p + b] = s;
            g[b * p + a] = s;
        }
    }
    g
}

/// J-characteristic: |Σ_i Π_{j∈w} d_ij| for a nonempty factor subset `w`.
pub fn j_characteristic(d: &Design, w: &[usize]) -> Result<u64> {
    if w.is_empty() {
        return Err(Error::Argument("J-characteristic needs a nonempty factor subset".into()));
    }
    let mut seen = vec![false; d.factors()];
    for &f in w {
        if f >= d.factors() {
            return Err(Error::Argument(format!("factor {} out of range", f + 1)));
        }
        if std::mem::replace(&mut seen[f], true) {
            return Err(Error::Argument(format!("factor {} repeated", f + 1)));
        }
    }
    let s: i64 = (0..d.runs())
        .map(|i| w.iter().map(|&f| d.get(i, f)).product::<i8>() as i64)
        .sum();
    Ok(s.unsigned_abs())
}

/// Largest m for which [`gwlp`] computes every word length.
pub const FULL_GWLP_MAX_FACTORS: usize = 16;

/// Generalized wordlength pattern (b_1, …, b_L) for L ≤ m. b_0 = N is implicit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gwlp {
    /// Run count N.
    pub n: usize,
    /// b_l for l = 1..=len.
    pub b: Vec<f64>,
    /// Σ J_l(w)² per word length; b_l = sum_sq[l-1] / N².
    #[serde(skip)]
    sum_sq: Vec<u128>,
}

impl Gwlp {
    /// Builds a pattern from its exact squared-J sums.
    pub fn from_sums(n: usize, sum_sq: Vec<u128>) -> Self {
        let n2 = (n * n) as f64;
        let b = sum_sq.iter().map(|&s| s as f64 / n2).collect();
        Self { n, b, sum_sq }
    }

    /// Σ_{|w|=l} J_l(w)² for l = 1..=len, as exact integers.
    pub fn sum_sq(&self) -> &[u128] {
        &self.sum_sq
    }

    /// b_l for 1-based word length `l`; 0 beyond the computed prefix.
    pub fn word(&self, l: usize) -> f64 {
        if l == 0 {
            self.n as f64
        } else {
            self.b.get(l - 1).copied().unwrap_or(0.0)
        }
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }
}

/// GWLP of `d`: every word length when m ≤ 16, otherwise (b_1, …, b_4).
pub fn gwlp(d: &Design) -> Gwlp {
    let order = if d.factors() <= FULL_GWLP_MAX_FACTORS { d.factors() } else { 4 };
    gwlp_up_to(d, order)
}

/// (b_1, …, b_order) by direct enumeration of factor subsets.
pub fn gwlp_up_to(d: &Design, order: usize) -> Gwlp {
    let order = order.min(d.factors());
    let mut sums = vec![0u128; order];
    let n = d.runs();
    // depth-first over subsets in lexicographic order, carrying row products
    let mut stack: Vec<Vec<i8>> = vec![vec![1; n]];
    fn visit(d: &Design, start: usize, depth: usize, order: usize, stack: &mut Vec<Vec<i8>>, sums: &mut [u128]) {
        for f in start..d.factors() {
            let col = d.column(f);
            let prod: Vec<i8> = stack[depth].iter().zip(col).map(|(&a, &b)| a * b).collect();
            let j: i64 = prod.iter().map(|&x| x as i64).sum();
            sums[depth] += (j * j) as u128;
            if depth + 1 < order {
                stack.push(prod);
                visit(d, f + 1, depth + 1, order, stack, sums);
                stack.pop();
            }
        }
    }
    if order > 0 {
        visit(d, 0, 0, order, &mut stack, &mut sums);
    }
    Gwlp::from_sums(n, sums)
}

/// Outcome of a generalized-minimum-aberration comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GmaOrdering {
    Better,
    Worse,
    Tied,
}

/// Tolerance for equality of GWLP entries.
pub const GMA_TOLERANCE: f64 = 1e-9;

/// Lexicographic comparison of (b_1, …, b_m); `Better` means `w1` has less aberration.
pub fn gma_compare(w1: &Gwlp, w2: &Gwlp) -> Result<GmaOrdering> {
    if w1.b.len() != w2.b.len() {
        return Err(Error::Argument(format!(
            "GWLP lengths differ ({} vs {})",
            w1.b.len(),
            w2.b.len()
        )));
    }
    for (x, y) in w1.b.iter().zip(&w2.b) {
        if (x - y).abs() > GMA_TOLERANCE {
            return Ok(match x.partial_cmp(y) {
                Some(Ordering::Less) => GmaOrdering::Better,
                _ => GmaOrdering::Worse,
            });
        }
    }
    Ok(GmaOrdering::Tied)
}

/// E(s²) = Σ_{i<j} a_ij² / C(m, 2) over design columns.
pub fn e_s2(d: &Design) -> Result<f64> {
    let m = d.factors();
    if m < 2 {
        return Err(Error::Argument("E(s²) needs at least two factors".into()));
    }
    let mut total: u128 = 0;
    for a in 0..m {
        for b in a + 1..m {
            let s = d.column_inner(a, b);
            total += (s * s) as u128;
        }
    }
    Ok(total as f64 / binomial(m, 2) as f64)
}
