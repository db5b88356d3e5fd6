//! Non-adaptive test matrices.
//!
//! A [`TestDesign`] stores the binary `T x n` inclusion matrix sparsely, as
//! both per-test item lists (rows) and per-item test lists (cols). Indices are
//! 0-based in memory; the text file format is 1-based.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Geometric};

use crate::error::{param, Error, Result};
use crate::seed::{rng_from_seed, SimRng};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestDesign {
    n: usize,
    rows: Vec<Vec<usize>>,
    cols: Vec<Vec<usize>>,
    /// Raw per-item draw count for near-constant designs (before collapsing
    /// with-replacement duplicates).
    draws_per_item: Option<usize>,
}

impl TestDesign {
    /// Builds a design from per-test item lists. Each row must be strictly
    /// increasing with entries below `n`.
    pub fn from_rows(n: usize, rows: Vec<Vec<usize>>) -> Result<Self> {
        if n == 0 || rows.is_empty() {
            return param("a design needs at least one item and one test");
        }
        for (t, row) in rows.iter().enumerate() {
            check_sorted_in_range(row, n).map_err(|msg| Error::Param(format!("test {}: {msg}", t + 1)))?;
        }
        let cols = transpose(&rows, n);
        Ok(TestDesign { n, rows, cols, draws_per_item: None })
    }

    /// Builds a design from per-item test lists.
    pub fn from_cols(tests: usize, cols: Vec<Vec<usize>>) -> Result<Self> {
        if tests == 0 || cols.is_empty() {
            return param("a design needs at least one item and one test");
        }
        for (i, col) in cols.iter().enumerate() {
            check_sorted_in_range(col, tests).map_err(|msg| Error::Param(format!("item {}: {msg}", i + 1)))?;
        }
        let rows = transpose(&cols, tests);
        Ok(TestDesign { n: cols.len(), rows, cols, draws_per_item: None })
    }

    /// The `n x n` design testing every item on its own.
    pub fn identity(n: usize) -> Self {
        let rows: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        TestDesign { n, cols: rows.clone(), rows, draws_per_item: None }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tests(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, t: usize) -> &[usize] {
        &self.rows[t]
    }

    pub fn col(&self, i: usize) -> &[usize] {
        &self.cols[i]
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn cols(&self) -> &[Vec<usize>] {
        &self.cols
    }

    pub fn draws_per_item(&self) -> Option<usize> {
        self.draws_per_item
    }

    pub fn contains(&self, t: usize, i: usize) -> bool {
        self.rows[t].binary_search(&i).is_ok()
    }

    /// Number of nonzero entries.
    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Checks that rows and cols describe the same matrix.
    pub fn is_consistent(&self) -> bool {
        self.cols.len() == self.n
            && transpose(&self.rows, self.n) == self.cols
            && transpose(&self.cols, self.rows.len()) == self.rows
    }

    /// Returns the design with items relabelled by `perm` (old item `i`
    /// becomes `perm[i]`).
    pub fn relabel_items(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::Dimension { expected: self.n, found: perm.len() });
        }
        let mut cols = vec![Vec::new(); self.n];
        for (i, col) in self.cols.iter().enumerate() {
            cols[perm[i]] = col.clone();
        }
        let mut d = TestDesign::from_cols(self.tests(), cols)?;
        d.draws_per_item = self.draws_per_item;
        Ok(d)
    }
}

fn check_sorted_in_range(list: &[usize], bound: usize) -> std::result::Result<(), String> {
    for w in list.windows(2) {
        if w[0] >= w[1] {
            return Err(if w[0] == w[1] {
                format!("duplicate index {}", w[0] + 1)
            } else {
                "indices not sorted".to_string()
            });
        }
    }
    if let Some(&last) = list.last() {
        if last >= bound {
            return Err(format!("index {} out of range 1..={bound}", last + 1));
        }
    }
    Ok(())
}

fn transpose(lists: &[Vec<usize>], width: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); width];
    for (a, list) in lists.iter().enumerate() {
        for &b in list {
            out[b].push(a);
        }
    }
    out
}

/// Indices in `0..len` kept independently with probability `p`, generated by
/// geometric skipping so the cost is proportional to the output size.
pub(crate) fn bernoulli_indices(len: usize, p: f64, rng: &mut SimRng) -> Vec<usize> {
    if p >= 1.0 {
        return (0..len).collect();
    }
    if p <= 0.0 {
        return Vec::new();
    }
    let geo = Geometric::new(p).expect("p in (0,1)");
    let mut out = Vec::new();
    let mut pos: u64 = 0;
    loop {
        let skip = geo.sample(rng);
        pos = match pos.checked_add(skip) {
            Some(v) => v,
            None => break,
        };
        if pos >= len as u64 {
            break;
        }
        out.push(pos as usize);
        pos += 1;
    }
    out
}

/// Bernoulli design: every (test, item) entry is independently 1 with
/// probability `p`.
pub fn bernoulli_design(n: usize, tests: usize, p: f64, seed: u64) -> Result<TestDesign> {
    if !(p > 0.0 && p < 1.0) {
        return param(format!("inclusion probability must lie in (0,1), got {p}"));
    }
    if n == 0 || tests == 0 {
        return param("n and T must be positive");
    }
    let mut rng = rng_from_seed(seed);
    let rows = (0..tests).map(|_| bernoulli_indices(n, p, &mut rng)).collect();
    TestDesign::from_rows(n, rows)
}

/// Near-constant column weight design: every item draws `draws` tests
/// uniformly with replacement; repeated draws collapse into one inclusion.
pub fn ncc_design(n: usize, tests: usize, draws: usize, seed: u64) -> Result<TestDesign> {
    if draws == 0 || draws > tests {
        return param(format!("tests per item must satisfy 1 <= L <= T, got L={draws}, T={tests}"));
    }
    if n == 0 {
        return param("n must be positive");
    }
    let mut rng = rng_from_seed(seed);
    let cols = (0..n)
        .map(|_| {
            let mut col: Vec<usize> = (0..draws).map(|_| rng.random_range(0..tests)).collect();
            col.sort_unstable();
            col.dedup();
            col
        })
        .collect();
    let mut d = TestDesign::from_cols(tests, cols)?;
    d.draws_per_item = Some(draws);
    Ok(d)
}

/// Rounds to the nearest integer with ties going up.
pub fn round_half_up(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Density {
    /// Inclusion probability `nu / k`.
    Nu(f64),
    Probability(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ColumnWeight {
    /// Draw count `round(nu * T / k)`.
    Nu(f64),
    Draws(usize),
}

/// Recipe for a design; only one parameterization exists per kind.
#[derive(Debug, Clone, PartialEq)]
pub enum DesignSpec {
    Bernoulli(Density),
    NearConstant(ColumnWeight),
    Explicit(Arc<TestDesign>),
}

impl DesignSpec {
    pub fn bernoulli_default() -> Self {
        DesignSpec::Bernoulli(Density::Nu(std::f64::consts::LN_2))
    }

    pub fn ncc_default() -> Self {
        DesignSpec::NearConstant(ColumnWeight::Nu(std::f64::consts::LN_2))
    }

    /// Inclusion probability for a Bernoulli spec.
    pub fn probability(&self, k: usize) -> Option<f64> {
        match *self {
            DesignSpec::Bernoulli(Density::Probability(p)) => Some(p),
            DesignSpec::Bernoulli(Density::Nu(nu)) => Some(nu / k as f64),
            _ => None,
        }
    }

    /// Per-item draw count for a near-constant spec.
    pub fn draws(&self, k: usize, tests: usize) -> Option<i64> {
        match *self {
            DesignSpec::NearConstant(ColumnWeight::Draws(l)) => Some(l as i64),
            DesignSpec::NearConstant(ColumnWeight::Nu(nu)) => {
                Some(round_half_up(nu * tests as f64 / k as f64))
            }
            _ => None,
        }
    }

    pub fn build(&self, n: usize, k: usize, tests: usize, seed: u64) -> Result<TestDesign> {
        if k == 0 && !matches!(self, DesignSpec::Explicit(_)) {
            return param("k must be positive to derive design density");
        }
        match self {
            DesignSpec::Bernoulli(_) => bernoulli_design(n, tests, self.probability(k).unwrap(), seed),
            DesignSpec::NearConstant(_) => {
                let l = self.draws(k, tests).unwrap();
                if l < 1 {
                    return param(format!("derived tests-per-item L={l} is below 1"));
                }
                ncc_design(n, tests, l as usize, seed)
            }
            DesignSpec::Explicit(d) => {
                if d.n() != n || d.tests() != tests {
                    return param(format!(
                        "explicit design is {}x{}, requested {tests}x{n}",
                        d.tests(),
                        d.n()
                    ));
                }
                Ok((**d).clone())
            }
        }
    }

    /// Short label used in CSV output.
    pub fn label(&self) -> &'static str {
        match self {
            DesignSpec::Bernoulli(_) => "bernoulli",
            DesignSpec::NearConstant(_) => "ncc",
            DesignSpec::Explicit(_) => "explicit",
        }
    }
}

impl fmt::Display for TestDesign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.tests(), self.n)?;
        for row in &self.rows {
            let mut first = true;
            for &i in row {
                if !first {
                    f.write_str(" ")?;
                }
                write!(f, "{}", i + 1)?;
                first = false;
            }
            f.write_str("\n")?;
        }
        Ok(())
    }
}

/// Parses the text design format: a `T n` header followed by `T` lines of
/// sorted 1-based item indices.
pub fn parse_design(text: &str) -> Result<TestDesign> {
    let mut lines: Vec<&str> = text.split('\n').collect();
    if lines.last() == Some(&"") {
        lines.pop();
    }
    let perr = |line: usize, msg: String| Error::Parse { line, msg };
    let header = lines.first().ok_or_else(|| perr(1, "missing header".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 2 {
        return Err(perr(1, format!("header must be \"T n\", got {header:?}")));
    }
    let parse_pos = |s: &str| s.parse::<usize>().ok().filter(|&v| v > 0);
    let tests = parse_pos(fields[0]).ok_or_else(|| perr(1, format!("bad test count {:?}", fields[0])))?;
    let n = parse_pos(fields[1]).ok_or_else(|| perr(1, format!("bad item count {:?}", fields[1])))?;
    if lines.len() - 1 != tests {
        return Err(perr(
            lines.len().min(tests + 1) + 1,
            format!("header declares {tests} tests but body has {} rows", lines.len() - 1),
        ));
    }
    let mut rows = Vec::with_capacity(tests);
    for (idx, line) in lines.iter().enumerate().skip(1) {
        let lineno = idx + 1;
        let mut row = Vec::new();
        for tok in line.split_whitespace() {
            let v: usize = tok.parse().map_err(|_| perr(lineno, format!("bad index {tok:?}")))?;
            if v == 0 || v > n {
                return Err(perr(lineno, format!("index {v} out of range 1..={n}")));
            }
            if let Some(&prev) = row.last() {
                if v - 1 == prev {
                    return Err(perr(lineno, format!("duplicate index {v}")));
                }
                if v - 1 < prev {
                    return Err(perr(lineno, format!("index {v} out of order")));
                }
            }
            row.push(v - 1);
        }
        rows.push(row);
    }
    TestDesign::from_rows(n, rows)
}

pub fn load_design(path: impl AsRef<Path>) -> Result<TestDesign> {
    parse_design(&fs::read_to_string(path)?)
}

pub fn save_design(design: &TestDesign, path: impl AsRef<Path>) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(design.to_string().as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_consistent() {
        let d = TestDesign::identity(5);
        assert!(d.is_consistent());
        assert_eq!(d.nnz(), 5);
    }

    #[test]
    fn bernoulli_rejects_bad_probability() {
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(bernoulli_design(3, 2, p, 1), Err(Error::Param(_))));
        }
    }

    #[test]
    fn single_entry_is_reproducible() {
        let a = bernoulli_design(1, 1, 0.5, 99).unwrap();
        let b = bernoulli_design(1, 1, 0.5, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn near_one_probability_fills_matrix() {
        let d = bernoulli_design(3, 2, 0.999_999, 4).unwrap();
        assert_eq!(d.nnz(), 6);
    }

    #[test]
    fn ncc_single_test_is_all_ones() {
        let d = ncc_design(5, 1, 1, 3).unwrap();
        assert_eq!(d.row(0), &[0, 1, 2, 3, 4]);
        assert_eq!(d.draws_per_item(), Some(1));
    }

    #[test]
    fn ncc_rejects_bad_draws() {
        assert!(ncc_design(3, 10, 0, 1).is_err());
        assert!(ncc_design(3, 10, 11, 1).is_err());
    }

    #[test]
    fn ncc_columns_bounded_by_draws() {
        let d = ncc_design(50, 20, 6, 8).unwrap();
        assert!(d.cols().iter().all(|c| !c.is_empty() && c.len() <= 6));
        assert!(d.is_consistent());
    }

    #[test]
    fn draws_round_half_up() {
        let spec = DesignSpec::NearConstant(ColumnWeight::Nu(0.5));
        // 0.5 * 5 / 1 = 2.5 -> 3
        assert_eq!(spec.draws(1, 5), Some(3));
        assert_eq!(spec.draws(2, 5), Some(1)); // 1.25
    }

    #[test]
    fn text_round_trip() {
        let d = TestDesign::from_rows(4, vec![vec![0, 2], vec![], vec![1, 2, 3]]).unwrap();
        let text = d.to_string();
        assert_eq!(text, "3 4\n1 3\n\n2 3 4\n");
        assert_eq!(parse_design(&text).unwrap(), d);
    }

    #[test]
    fn parse_rejects_zero_index() {
        let err = parse_design("1 3\n0 2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn parse_rejects_row_count_mismatch() {
        assert!(matches!(parse_design("3 4\n1\n2\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse_design("1 4\n1\n2\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn parse_rejects_unsorted_and_duplicates() {
        assert!(matches!(parse_design("1 4\n2 1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_design("2 4\n1\n3 3\n"), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn parse_rejects_bad_header() {
        assert!(matches!(parse_design("x 4\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_design("2\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_design(""), Err(Error::Parse { line: 1, .. })));
    }
}
