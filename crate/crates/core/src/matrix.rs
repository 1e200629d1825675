//! Dense matrices, weight matrices, masked matrices, and the weighted
//! Frobenius objective.
//!
//! Entries with zero weight are skipped entirely by every accumulation, so a
//! zero-weighted residual never contributes — not even `0 * inf` — which keeps
//! the objective finite for factor pairs that blow up on masked positions.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Relative tolerance on 2x2 minors when classifying a weight matrix as
/// rank-one, and on witness consistency in the completion check.
pub const RANK_ONE_REL_TOL: f64 = 1e-12;

/// Dense real matrix, row-major, finite entries only.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    entries: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn new(rows: usize, cols: usize, entries: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Parameter(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if entries.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if let Some(pos) = entries.iter().position(|e| !e.is_finite()) {
            return Err(Error::Parameter(format!(
                "non-finite entry at position ({}, {})",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Matrix {
            rows,
            cols,
            entries,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix::new(rows, cols, vec![T::zero(); rows * cols]).expect("zero matrix is valid")
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Matrix::new(r, c, rows.into_iter().flatten().collect())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let entries = (0..rows * cols).map(|p| f(p / cols, p % cols)).collect();
        Matrix::new(rows, cols, entries).expect("generated matrix is valid")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[i * self.cols + j]
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn same_shape(&self, other: &Matrix<T>) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    /// Row-major `(i, j, value)` iterator.
    pub fn indexed(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        let cols = self.cols;
        self.entries
            .iter()
            .enumerate()
            .map(move |(p, &e)| (p / cols, p % cols, e))
    }
}

/// Nonnegative weights with cached structural flags.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix<T> {
    entries: Matrix<T>,
    is_binary: bool,
    is_positive: bool,
    is_rank_one: bool,
}

impl<T: Scalar> WeightMatrix<T> {
    pub fn new(entries: Matrix<T>) -> Result<Self> {
        if let Some((i, j, _)) = entries.indexed().find(|&(_, _, w)| w < T::zero()) {
            return Err(Error::Parameter(format!("negative weight at ({i}, {j})")));
        }
        let is_binary = entries
            .entries()
            .iter()
            .all(|&w| w == T::zero() || w == T::one());
        let is_positive = entries.entries().iter().all(|&w| w > T::zero());
        let is_rank_one = rank_one_flag(&entries);
        Ok(WeightMatrix {
            entries,
            is_binary,
            is_positive,
            is_rank_one,
        })
    }

    pub fn from_entries(rows: usize, cols: usize, entries: Vec<T>) -> Result<Self> {
        WeightMatrix::new(Matrix::new(rows, cols, entries)?)
    }

    pub fn all_ones(rows: usize, cols: usize) -> Self {
        WeightMatrix::new(Matrix::from_fn(rows, cols, |_, _| T::one()))
            .expect("all-ones weights are valid")
    }

    /// Outer product `s t^T` of two nonnegative vectors.
    pub fn rank_one(s: &[T], t: &[T]) -> Result<Self> {
        if s.iter().chain(t).any(|&x| x < T::zero()) {
            return Err(Error::Parameter(
                "rank-one weight factors must be nonnegative".into(),
            ));
        }
        WeightMatrix::new(Matrix::from_fn(s.len(), t.len(), |i, j| s[i] * t[j]))
    }

    pub fn rows(&self) -> usize {
        self.entries.rows()
    }

    pub fn cols(&self) -> usize {
        self.entries.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries.get(i, j)
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.entries
    }

    pub fn is_binary(&self) -> bool {
        self.is_binary
    }

    pub fn is_positive(&self) -> bool {
        self.is_positive
    }

    pub fn is_rank_one(&self) -> bool {
        self.is_rank_one
    }
}

/// Rank-one test via 2x2 minors against a fixed pivot. Vanishing of the
/// pivot minors `W_ij W_rc - W_ic W_rj` for all (i, j) is equivalent to the
/// vanishing of every minor when the pivot is a maximal entry.
fn rank_one_flag<T: Scalar>(w: &Matrix<T>) -> bool {
    let mut pivot = (0usize, 0usize, T::zero());
    for (i, j, v) in w.indexed() {
        if v.abs() > pivot.2.abs() {
            pivot = (i, j, v);
        }
    }
    let (pr, pc, pv) = pivot;
    if pv == T::zero() {
        return true; // zero matrix factors as 0 * t^T
    }
    let tol = T::of(RANK_ONE_REL_TOL);
    for (i, j, v) in w.indexed() {
        let lhs = v * pv;
        let rhs = w.get(i, pc) * w.get(pr, j);
        let scale = lhs.abs().max(rhs.abs());
        if (lhs - rhs).abs() > tol * scale {
            return false;
        }
    }
    true
}

/// Matrix with a known-entry mask; unknown values are canonicalized to zero
/// so equality of masked matrices is structural.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedMatrix<T> {
    values: Matrix<T>,
    known: Vec<bool>,
}

impl<T: Scalar> MaskedMatrix<T> {
    pub fn new(values: Matrix<T>, known: Vec<bool>) -> Result<Self> {
        if known.len() != values.rows() * values.cols() {
            return Err(Error::Dimension(format!(
                "mask length {} does not match {}x{} matrix",
                known.len(),
                values.rows(),
                values.cols()
            )));
        }
        let canonical = values
            .entries()
            .iter()
            .zip(&known)
            .map(|(&v, &k)| if k { v } else { T::zero() })
            .collect();
        let values = Matrix::new(values.rows(), values.cols(), canonical)?;
        Ok(MaskedMatrix { values, known })
    }

    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn cols(&self) -> usize {
        self.values.cols()
    }

    pub fn values(&self) -> &Matrix<T> {
        &self.values
    }

    pub fn is_known(&self, i: usize, j: usize) -> bool {
        self.known[i * self.values.cols() + j]
    }

    pub fn known_count(&self) -> usize {
        self.known.iter().filter(|&&k| k).count()
    }

    /// Binary weight matrix of the mask (1 = known, 0 = unknown).
    pub fn weight_matrix(&self) -> WeightMatrix<T> {
        let m = Matrix::from_fn(self.rows(), self.cols(), |i, j| {
            if self.is_known(i, j) {
                T::one()
            } else {
                T::zero()
            }
        });
        WeightMatrix::new(m).expect("binary mask weights are valid")
    }
}

/// Rank-r factor pair `(U, V)` approximating `M ~ U V^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPair<T> {
    u: Matrix<T>,
    v: Matrix<T>,
}

impl<T: Scalar> FactorPair<T> {
    pub fn new(u: Matrix<T>, v: Matrix<T>) -> Result<Self> {
        if u.cols() != v.cols() {
            return Err(Error::Dimension(format!(
                "factor ranks differ: U has {} columns, V has {}",
                u.cols(),
                v.cols()
            )));
        }
        Ok(FactorPair { u, v })
    }

    pub fn rank_one(u: Vec<T>, v: Vec<T>) -> Result<Self> {
        let m = u.len();
        let n = v.len();
        FactorPair::new(Matrix::new(m, 1, u)?, Matrix::new(n, 1, v)?)
    }

    pub fn zero_rank_one(m: usize, n: usize) -> Self {
        FactorPair::rank_one(vec![T::zero(); m], vec![T::zero(); n])
            .expect("zero factors are valid")
    }

    pub fn u(&self) -> &Matrix<T> {
        &self.u
    }

    pub fn v(&self) -> &Matrix<T> {
        &self.v
    }

    pub fn rank(&self) -> usize {
        self.u.cols()
    }

    /// `(U V^T)_{ij}`.
    pub fn product_entry(&self, i: usize, j: usize) -> T {
        (0..self.rank())
            .map(|k| self.u.get(i, k) * self.v.get(j, k))
            .sum()
    }

    pub fn product(&self) -> Matrix<T> {
        Matrix::from_fn(self.u.rows(), self.v.rows(), |i, j| {
            self.product_entry(i, j)
        })
    }

    /// Rank-one factors as plain vectors; errors when rank > 1.
    pub fn rank_one_vectors(&self) -> Result<(Vec<T>, Vec<T>)> {
        if self.rank() != 1 {
            return Err(Error::Parameter(format!(
                "expected rank-one factors, got rank {}",
                self.rank()
            )));
        }
        Ok((self.u.entries().to_vec(), self.v.entries().to_vec()))
    }
}

/// `sum_ij W_ij A_ij^2`; equals the squared Frobenius norm for all-ones W.
pub fn weighted_sq_norm<T: Scalar>(a: &Matrix<T>, w: &WeightMatrix<T>) -> Result<T> {
    if !a.same_shape(w.matrix()) {
        return Err(Error::Dimension(format!(
            "matrix is {}x{} but weights are {}x{}",
            a.rows(),
            a.cols(),
            w.rows(),
            w.cols()
        )));
    }
    let mut acc = T::zero();
    for (i, j, v) in a.indexed() {
        let wij = w.get(i, j);
        if wij != T::zero() {
            acc += wij * v * v;
        }
    }
    Ok(acc)
}

/// `sum_ij W_ij (M - U V^T)_ij^2`.
pub fn wlra_objective<T: Scalar>(
    m: &Matrix<T>,
    w: &WeightMatrix<T>,
    factors: &FactorPair<T>,
) -> Result<T> {
    if !m.same_shape(w.matrix()) {
        return Err(Error::Dimension(format!(
            "matrix is {}x{} but weights are {}x{}",
            m.rows(),
            m.cols(),
            w.rows(),
            w.cols()
        )));
    }
    if factors.u().rows() != m.rows() || factors.v().rows() != m.cols() {
        return Err(Error::Dimension(format!(
            "factors for a {}x{} matrix must have U with {} rows and V with {} rows, got {} and {}",
            m.rows(),
            m.cols(),
            m.rows(),
            m.cols(),
            factors.u().rows(),
            factors.v().rows()
        )));
    }
    let mut acc = T::zero();
    for (i, j, v) in m.indexed() {
        let wij = w.get(i, j);
        if wij != T::zero() {
            let r = v - factors.product_entry(i, j);
            acc += wij * r * r;
        }
    }
    Ok(acc)
}

/// Outcome of the rank-one exact completion check.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletionCheck<T> {
    pub feasible: bool,
    pub witness: Option<FactorPair<T>>,
}

/// Decides whether some rank-<=1 matrix agrees with every known entry of `m`,
/// and produces a witness factor pair when one exists.
///
/// A known nonzero entry forces both its row and column scales to be nonzero,
/// so the witness is built by propagating multiples from a pivot column
/// (the one with the most known nonzeros, ties to the lowest index) across
/// columns that share known rows, one connected component at a time; rows and
/// columns never reached carry scale zero. Consistency is then verified on
/// every known entry within `RANK_ONE_REL_TOL` relative.
pub fn rank_one_completion_check<T: Scalar>(m: &MaskedMatrix<T>) -> Result<CompletionCheck<T>> {
    let (rows, cols) = (m.rows(), m.cols());
    if m.known_count() == 0 {
        return Err(Error::DegenerateInput(
            "completion check needs at least one known entry".into(),
        ));
    }

    let known_nonzero = |i: usize, j: usize| m.is_known(i, j) && m.values().get(i, j) != T::zero();

    let mut row_has_nz = vec![false; rows];
    let mut col_nz_count = vec![0usize; cols];
    for i in 0..rows {
        for j in 0..cols {
            if known_nonzero(i, j) {
                row_has_nz[i] = true;
                col_nz_count[j] += 1;
            }
        }
    }

    // A known zero whose row and column both carry known nonzeros cannot be
    // reproduced: the row and column scales are both forced nonzero.
    for i in 0..rows {
        for j in 0..cols {
            if m.is_known(i, j)
                && m.values().get(i, j) == T::zero()
                && row_has_nz[i]
                && col_nz_count[j] > 0
            {
                return Ok(CompletionCheck {
                    feasible: false,
                    witness: None,
                });
            }
        }
    }

    let mut u: Vec<Option<T>> = vec![None; rows];
    let mut v: Vec<Option<T>> = vec![None; cols];

    // Pivot order: most known nonzeros first, then lowest index.
    let mut col_order: Vec<usize> = (0..cols).filter(|&j| col_nz_count[j] > 0).collect();
    col_order.sort_by_key(|&j| (std::cmp::Reverse(col_nz_count[j]), j));

    for &pivot in &col_order {
        if v[pivot].is_some() {
            continue;
        }
        v[pivot] = Some(T::one());
        let mut col_queue = vec![pivot];
        while let Some(j) = col_queue.pop() {
            let vj = v[j].expect("queued column has a scale");
            for i in 0..rows {
                if known_nonzero(i, j) && u[i].is_none() {
                    u[i] = Some(m.values().get(i, j) / vj);
                    let ui = u[i].unwrap();
                    for j2 in 0..cols {
                        if known_nonzero(i, j2) && v[j2].is_none() {
                            v[j2] = Some(m.values().get(i, j2) / ui);
                            col_queue.push(j2);
                        }
                    }
                }
            }
        }
    }

    let u: Vec<T> = u.into_iter().map(|x| x.unwrap_or_else(T::zero)).collect();
    let v: Vec<T> = v.into_iter().map(|x| x.unwrap_or_else(T::zero)).collect();

    let tol = T::of(RANK_ONE_REL_TOL);
    for i in 0..rows {
        for j in 0..cols {
            if m.is_known(i, j) {
                let target = m.values().get(i, j);
                let got = u[i] * v[j];
                let scale = target.abs().max(got.abs());
                if (got - target).abs() > tol * scale {
                    return Ok(CompletionCheck {
                        feasible: false,
                        witness: None,
                    });
                }
            }
        }
    }

    Ok(CompletionCheck {
        feasible: true,
        witness: Some(FactorPair::rank_one(u, v)?),
    })
}

// ---------------------------------------------------------------------------
// Matrix text format: first line `rows cols`, then `rows` lines of
// whitespace-separated tokens; `?` marks an unknown entry and is only legal
// when reading a MaskedMatrix.
// ---------------------------------------------------------------------------

fn parse_tokens<'a>(text: &'a str, path: &str) -> Result<(usize, usize, Vec<Vec<&'a str>>)> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "empty file"))?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    if dims.len() != 2 {
        return Err(Error::parse(path, hline + 1, "expected header `rows cols`"));
    }
    let rows: usize = dims[0]
        .parse()
        .map_err(|_| Error::parse(path, hline + 1, "invalid row count"))?;
    let cols: usize = dims[1]
        .parse()
        .map_err(|_| Error::parse(path, hline + 1, "invalid column count"))?;
    if rows == 0 || cols == 0 {
        return Err(Error::parse(path, hline + 1, "dimensions must be positive"));
    }
    let mut body = Vec::with_capacity(rows);
    for _ in 0..rows {
        let (lno, line) = lines.next().ok_or_else(|| {
            Error::parse(
                path,
                text.lines().count(),
                format!("expected {rows} data rows"),
            )
        })?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != cols {
            return Err(Error::parse(
                path,
                lno + 1,
                format!("expected {cols} entries, got {}", toks.len()),
            ));
        }
        body.push(toks);
    }
    if let Some((lno, _)) = lines.next() {
        return Err(Error::parse(path, lno + 1, "trailing data after last row"));
    }
    Ok((rows, cols, body))
}

fn parse_value<T: Scalar>(tok: &str, path: &str, line: usize) -> Result<T> {
    let val: f64 = tok
        .parse()
        .map_err(|_| Error::parse(path, line, format!("invalid number `{tok}`")))?;
    if !val.is_finite() {
        return Err(Error::parse(
            path,
            line,
            format!("non-finite value `{tok}`"),
        ));
    }
    Ok(T::of(val))
}

pub fn parse_matrix<T: Scalar>(text: &str, path: &str) -> Result<Matrix<T>> {
    let (rows, cols, body) = parse_tokens(text, path)?;
    let mut entries = Vec::with_capacity(rows * cols);
    for (r, toks) in body.iter().enumerate() {
        for &tok in toks {
            if tok == "?" {
                return Err(Error::parse(
                    path,
                    r + 2,
                    "`?` entries are only legal in masked matrices",
                ));
            }
            entries.push(parse_value(tok, path, r + 2)?);
        }
    }
    Matrix::new(rows, cols, entries)
}

pub fn parse_weight_matrix<T: Scalar>(text: &str, path: &str) -> Result<WeightMatrix<T>> {
    WeightMatrix::new(parse_matrix(text, path)?)
}

pub fn parse_masked_matrix<T: Scalar>(text: &str, path: &str) -> Result<MaskedMatrix<T>> {
    let (rows, cols, body) = parse_tokens(text, path)?;
    let mut entries = Vec::with_capacity(rows * cols);
    let mut known = Vec::with_capacity(rows * cols);
    for (r, toks) in body.iter().enumerate() {
        for &tok in toks {
            if tok == "?" {
                entries.push(T::zero());
                known.push(false);
            } else {
                entries.push(parse_value(tok, path, r + 2)?);
                known.push(true);
            }
        }
    }
    MaskedMatrix::new(Matrix::new(rows, cols, entries)?, known)
}

pub fn matrix_to_text<T: Scalar>(m: &Matrix<T>) -> String {
    let mut out = format!("{} {}\n", m.rows(), m.cols());
    for i in 0..m.rows() {
        let row: Vec<String> = (0..m.cols()).map(|j| format!("{}", m.get(i, j))).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn masked_to_text<T: Scalar>(m: &MaskedMatrix<T>) -> String {
    let mut out = format!("{} {}\n", m.rows(), m.cols());
    for i in 0..m.rows() {
        let row: Vec<String> = (0..m.cols())
            .map(|j| {
                if m.is_known(i, j) {
                    format!("{}", m.values().get(i, j))
                } else {
                    "?".to_string()
                }
            })
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_matrix<T: Scalar>(path: &Path) -> Result<Matrix<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix(&text, &path.display().to_string())
}

pub fn read_weight_matrix<T: Scalar>(path: &Path) -> Result<WeightMatrix<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_weight_matrix(&text, &path.display().to_string())
}

pub fn read_masked_matrix<T: Scalar>(path: &Path) -> Result<MaskedMatrix<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_masked_matrix(&text, &path.display().to_string())
}
