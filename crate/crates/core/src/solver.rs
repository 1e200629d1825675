//! Rank-one and rank-r WLRA by alternating minimization with multistart.
//!
//! Each half-sweep is an exact closed-form minimization over one factor, so
//! the objective is nonincreasing by construction. Factors are rebalanced to
//! equal norms after every sweep; the product is unchanged.
//!
//! When the weight matrix has zeros the infimum may be unattained: the
//! objective keeps decreasing while the factor product blows up on the
//! zero-weight positions. The solver tracks the imbalance ratio
//!
//! ```text
//! rho = max_{W_ij = 0} |(U V^T)_ij| / (1 + max_{W_ij > 0} |(U V^T)_ij|)
//! ```
//!
//! and flags a run as diverged when rho crosses the configured threshold, or
//! when the sweep budget runs out with the objective still strictly
//! decreasing and rho still growing past `DIVERGENCE_FLOOR`. The trailing
//! trend test exists because alternating minimization pushes rho up only
//! sublinearly, so no fixed threshold fires within a bounded sweep budget.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::error::{Error, Result};
use crate::matrix::{FactorPair, Matrix, WeightMatrix};
use crate::scalar::Scalar;

/// Terminal imbalance a run must exceed before the trend test may flag it.
pub const DIVERGENCE_FLOOR: f64 = 10.0;
/// Required growth of the imbalance ratio over the trailing quarter window.
const DIVERGENCE_GROWTH: f64 = 1.0001;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig<T> {
    /// Sweep budget per start.
    pub max_sweeps: usize,
    /// Stop when the relative objective decrease over one sweep drops below this.
    pub rel_tol: T,
    /// Number of multistart seeds; the first start is deterministic all-ones.
    pub starts: usize,
    /// RNG seed for start generation.
    pub seed: u64,
    /// Project factors onto componentwise absolute values when that helps.
    pub nonneg: bool,
    /// Hard cap on the imbalance ratio before a run is flagged as diverged.
    pub divergence_threshold: T,
    /// Worker threads for independent starts; the outcome is identical
    /// regardless of this value.
    pub threads: usize,
}

impl<T: Scalar> Default for SolveConfig<T> {
    fn default() -> Self {
        SolveConfig {
            max_sweeps: 2000,
            rel_tol: T::of(1e-12),
            starts: 64,
            seed: 42,
            nonneg: false,
            divergence_threshold: T::of(1e8),
            threads: 1,
        }
    }
}

impl<T: Scalar> SolveConfig<T> {
    fn validate(&self) -> Result<()> {
        if self.starts == 0 {
            return Err(Error::Parameter("need at least one start".into()));
        }
        if self.rel_tol <= T::zero() || self.divergence_threshold <= T::zero() {
            return Err(Error::Parameter("tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult<T> {
    pub factors: FactorPair<T>,
    pub objective: T,
    pub sweeps_used: usize,
    pub converged: bool,
    /// Unattained-infimum flag; never set together with `converged`.
    pub diverged: bool,
    pub start_index: usize,
    /// Objective after every half-sweep, starting from the initial value.
    pub trajectory: Vec<T>,
}

/// Best run plus the full per-start table.
#[derive(Debug, Clone, PartialEq)]
pub struct MultistartResult<T> {
    pub best: SolveResult<T>,
    pub runs: Vec<SolveResult<T>>,
}

impl<T: Scalar> MultistartResult<T> {
    /// JSON report: best objective, flags, factors, and the per-start table.
    pub fn to_report_json(&self) -> serde_json::Value {
        let factor_rows = |m: &Matrix<T>| -> Vec<Vec<f64>> {
            (0..m.rows())
                .map(|i| (0..m.cols()).map(|j| m.get(i, j).to_f64_lossy()).collect())
                .collect()
        };
        json!({
            "objective": self.best.objective.to_f64_lossy(),
            "converged": self.best.converged,
            "diverged": self.best.diverged,
            "sweeps_used": self.best.sweeps_used,
            "start_index": self.best.start_index,
            "factors": {
                "u": factor_rows(self.best.factors.u()),
                "v": factor_rows(self.best.factors.v()),
            },
            "per_start": self.runs.iter().map(|r| json!({
                "start_index": r.start_index,
                "objective": r.objective.to_f64_lossy(),
                "sweeps_used": r.sweeps_used,
                "converged": r.converged,
                "diverged": r.diverged,
            })).collect::<Vec<_>>(),
        })
    }
}

fn check_shapes<T: Scalar>(m: &Matrix<T>, w: &WeightMatrix<T>) -> Result<()> {
    if !m.same_shape(w.matrix()) {
        return Err(Error::Dimension(format!(
            "matrix is {}x{} but weights are {}x{}",
            m.rows(),
            m.cols(),
            w.rows(),
            w.cols()
        )));
    }
    if w.matrix().entries().iter().all(|&x| x == T::zero()) {
        return Err(Error::DegenerateInput(
            "weight matrix is identically zero".into(),
        ));
    }
    Ok(())
}

/// Columnwise minimizer of the objective for fixed `u`:
/// `v_j = sum_i W_ij M_ij u_i / sum_i W_ij u_i^2`, with `v_j = 0` when the
/// denominator vanishes (the minimum-norm choice; only possible when W has
/// zeros or u is zero).
pub fn closed_form_v<T: Scalar>(m: &Matrix<T>, w: &WeightMatrix<T>, u: &[T]) -> Result<Vec<T>> {
    check_shapes(m, w)?;
    if u.len() != m.rows() {
        return Err(Error::Dimension(format!(
            "u must have {} entries, got {}",
            m.rows(),
            u.len()
        )));
    }
    if w.is_positive() && u.iter().all(|&x| x == T::zero()) {
        return Err(Error::DegenerateInput(
            "u is identically zero, the objective does not depend on v".into(),
        ));
    }
    let mut v = vec![T::zero(); m.cols()];
    for (j, vj) in v.iter_mut().enumerate() {
        let mut num = T::zero();
        let mut den = T::zero();
        for i in 0..m.rows() {
            let wij = w.get(i, j);
            if wij != T::zero() {
                num += wij * m.get(i, j) * u[i];
                den += wij * u[i] * u[i];
            }
        }
        if den > T::zero() {
            *vj = num / den;
        }
    }
    Ok(v)
}

/// Rowwise minimizer for fixed `v`, symmetric to [`closed_form_v`].
pub fn closed_form_u<T: Scalar>(m: &Matrix<T>, w: &WeightMatrix<T>, v: &[T]) -> Result<Vec<T>> {
    check_shapes(m, w)?;
    if v.len() != m.cols() {
        return Err(Error::Dimension(format!(
            "v must have {} entries, got {}",
            m.cols(),
            v.len()
        )));
    }
    if w.is_positive() && v.iter().all(|&x| x == T::zero()) {
        return Err(Error::DegenerateInput(
            "v is identically zero, the objective does not depend on u".into(),
        ));
    }
    let mut u = vec![T::zero(); m.rows()];
    for (i, ui) in u.iter_mut().enumerate() {
        let mut num = T::zero();
        let mut den = T::zero();
        for j in 0..m.cols() {
            let wij = w.get(i, j);
            if wij != T::zero() {
                num += wij * m.get(i, j) * v[j];
                den += wij * v[j] * v[j];
            }
        }
        if den > T::zero() {
            *ui = num / den;
        }
    }
    Ok(u)
}

fn norm2<T: Scalar>(x: &[T]) -> T {
    x.iter().map(|&a| a * a).sum::<T>().sqrt()
}

fn rebalance<T: Scalar>(u: &mut [T], v: &mut [T]) {
    let nu = norm2(u);
    let nv = norm2(v);
    if nu > T::zero() && nv > T::zero() {
        let s = (nv / nu).sqrt();
        for x in u.iter_mut() {
            *x *= s;
        }
        for x in v.iter_mut() {
            *x /= s;
        }
    }
}

fn obj_rank_one<T: Scalar>(m: &Matrix<T>, w: &WeightMatrix<T>, u: &[T], v: &[T]) -> T {
    let mut acc = T::zero();
    for (i, j, mij) in m.indexed() {
        let wij = w.get(i, j);
        if wij != T::zero() {
            let r = mij - u[i] * v[j];
            acc += wij * r * r;
        }
    }
    acc
}

/// `max |u_i v_j|` over zero-weight positions against the same maximum over
/// supported positions; zero when W has no zeros.
fn imbalance_ratio<T: Scalar>(w: &WeightMatrix<T>, u: &[T], v: &[T]) -> T {
    let mut zero_peak = T::zero();
    let mut support_peak = T::zero();
    for i in 0..w.rows() {
        for j in 0..w.cols() {
            let p = (u[i] * v[j]).abs();
            if w.get(i, j) == T::zero() {
                zero_peak = zero_peak.max(p);
            } else {
                support_peak = support_peak.max(p);
            }
        }
    }
    zero_peak / (T::one() + support_peak)
}

fn terminal_divergence<T: Scalar>(rho_history: &[T]) -> bool {
    let n = rho_history.len();
    if n < 4 {
        return false;
    }
    let last = rho_history[n - 1];
    if last <= T::of(DIVERGENCE_FLOOR) {
        return false;
    }
    let window = (n / 4).max(2);
    let start = n - window;
    let nondecreasing = rho_history[start..].windows(2).all(|p| p[1] >= p[0]);
    nondecreasing && last > rho_history[start] * T::of(DIVERGENCE_GROWTH)
}

/// One alternating-minimization run from an explicit rank-one start.
pub fn solve_rank_one_from<T: Scalar>(
    m: &Matrix<T>,
    w: &WeightMatrix<T>,
    u0: Vec<T>,
    v0: Vec<T>,
    cfg: &SolveConfig<T>,
    start_index: usize,
) -> Result<SolveResult<T>> {
    check_shapes(m, w)?;
    cfg.validate()?;
    let m_nonneg = cfg.nonneg && m.entries().iter().all(|&x| x >= T::zero());
    let mut u = u0;
    let mut v = v0;
    rebalance(&mut u, &mut v);

    let mut prev = obj_rank_one(m, w, &u, &v);
    let mut trajectory = vec![prev];
    let mut rho_history: Vec<T> = Vec::new();
    let mut converged = false;
    let mut diverged = false;
    let mut sweeps_used = cfg.max_sweeps;

    for sweep in 1..=cfg.max_sweeps {
        v = closed_form_v(m, w, &u)?;
        trajectory.push(obj_rank_one(m, w, &u, &v));

        u = closed_form_u(m, w, &v)?;
        let mut obj = obj_rank_one(m, w, &u, &v);
        if m_nonneg {
            let au: Vec<T> = u.iter().map(|x| x.abs()).collect();
            let av: Vec<T> = v.iter().map(|x| x.abs()).collect();
            let abs_obj = obj_rank_one(m, w, &au, &av);
            if abs_obj <= obj {
                u = au;
                v = av;
                obj = abs_obj;
            }
        }
        trajectory.push(obj);
        rebalance(&mut u, &mut v);

        let rho = imbalance_ratio(w, &u, &v);
        rho_history.push(rho);
        if rho > cfg.divergence_threshold && obj < prev {
            diverged = true;
            sweeps_used = sweep;
            break;
        }
        if obj >= prev || prev - obj < cfg.rel_tol * prev {
            converged = true;
            sweeps_used = sweep;
            break;
        }
        prev = obj;
    }
    if !converged && !diverged {
        diverged = terminal_divergence(&rho_history);
    }

    let objective = *trajectory.last().expect("trajectory is never empty");
    Ok(SolveResult {
        factors: FactorPair::rank_one(u, v)?,
        objective,
        sweeps_used,
        converged,
        diverged,
        start_index,
        trajectory,
    })
}

fn random_start<T: Scalar>(rng: &mut ChaCha8Rng, len: usize) -> Vec<T> {
    (0..len).map(|_| T::of(rng.gen_range(-1.0..=1.0))).collect()
}

fn rank_one_start<T: Scalar>(
    m_rows: usize,
    m_cols: usize,
    seed: u64,
    start_index: usize,
) -> (Vec<T>, Vec<T>) {
    if start_index == 0 {
        return (vec![T::one(); m_rows], vec![T::one(); m_cols]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(start_index as u64);
    let u = random_start(&mut rng, m_rows);
    let v = random_start(&mut rng, m_cols);
    (u, v)
}

fn run_starts<T, F>(count: usize, threads: usize, run: F) -> Result<Vec<SolveResult<T>>>
where
    T: Scalar,
    F: Fn(usize) -> Result<SolveResult<T>> + Sync,
    SolveResult<T>: Send,
{
    let threads = threads.max(1).min(count);
    if threads == 1 {
        return (0..count).map(run).collect();
    }
    let chunk_len = count.div_ceil(threads);
    let mut slots: Vec<Option<Result<SolveResult<T>>>> = (0..count).map(|_| None).collect();
    std::thread::scope(|scope| {
        for (worker, chunk) in slots.chunks_mut(chunk_len).enumerate() {
            let run = &run;
            let base = worker * chunk_len;
            scope.spawn(move || {
                for (off, slot) in chunk.iter_mut().enumerate() {
                    *slot = Some(run(base + off));
                }
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.expect("every start is computed"))
        .collect()
}

fn pick_best<T: Scalar>(runs: Vec<SolveResult<T>>) -> MultistartResult<T> {
    let best = runs
        .iter()
        .min_by(|a, b| {
            (a.objective, a.start_index)
                .partial_cmp(&(b.objective, b.start_index))
                .expect("objectives are finite")
        })
        .expect("at least one start")
        .clone();
    MultistartResult { best, runs }
}

/// Multistart rank-one solve; deterministic for a fixed seed regardless of
/// the thread count.
pub fn solve_rank_one<T: Scalar>(
    m: &Matrix<T>,
    w: &WeightMatrix<T>,
    cfg: &SolveConfig<T>,
) -> Result<MultistartResult<T>> {
    check_shapes(m, w)?;
    cfg.validate()?;
    let runs = run_starts(cfg.starts, cfg.threads, |idx| {
        let (u0, v0) = rank_one_start::<T>(m.rows(), m.cols(), cfg.seed, idx);
        solve_rank_one_from(m, w, u0, v0, cfg, idx)
    })?;
    Ok(pick_best(runs))
}

// ---------------------------------------------------------------------------
// Rank-r alternating weighted least squares
// ---------------------------------------------------------------------------

/// Ridge added to the normal-equation diagonal when elimination meets an
/// exactly singular system.
const RANK_R_RIDGE: f64 = 1e-12;

/// Gaussian elimination with partial pivoting; `None` on an exactly singular
/// pivot column.
fn gaussian_solve<T: Scalar>(mut a: Vec<T>, mut b: Vec<T>, r: usize) -> Option<Vec<T>> {
    for col in 0..r {
        let pivot_row = (col..r)
            .max_by(|&p, &q| {
                a[p * r + col]
                    .abs()
                    .partial_cmp(&a[q * r + col].abs())
                    .expect("finite pivots")
            })
            .expect("nonempty pivot range");
        if a[pivot_row * r + col] == T::zero() {
            return None;
        }
        if pivot_row != col {
            for k in 0..r {
                a.swap(col * r + k, pivot_row * r + k);
            }
            b.swap(col, pivot_row);
        }
        let pivot = a[col * r + col];
        for row in (col + 1)..r {
            let factor = a[row * r + col] / pivot;
            if factor == T::zero() {
                continue;
            }
            for k in col..r {
                let delta = factor * a[col * r + k];
                a[row * r + k] -= delta;
            }
            let rhs_delta = factor * b[col];
            b[row] -= rhs_delta;
        }
    }
    let mut x = vec![T::zero(); r];
    for row in (0..r).rev() {
        let mut acc = b[row];
        for k in (row + 1)..r {
            acc -= a[row * r + k] * x[k];
        }
        x[row] = acc / a[row * r + row];
    }
    Some(x)
}

fn solve_normal_equations<T: Scalar>(a: Vec<T>, b: Vec<T>, r: usize) -> Vec<T> {
    if let Some(x) = gaussian_solve(a.clone(), b.clone(), r) {
        return x;
    }
    let ridge = T::of(RANK_R_RIDGE);
    let mut ridged = a;
    for k in 0..r {
        ridged[k * r + k] += ridge;
    }
    gaussian_solve(ridged, b, r).expect("ridged system is nonsingular")
}

fn obj_rank_r<T: Scalar>(m: &Matrix<T>, w: &WeightMatrix<T>, f: &FactorPair<T>) -> T {
    let mut acc = T::zero();
    for (i, j, mij) in m.indexed() {
        let wij = w.get(i, j);
        if wij != T::zero() {
            let r = mij - f.product_entry(i, j);
            acc += wij * r * r;
        }
    }
    acc
}

/// Updates every row of `V` (an n x r matrix regarded as row vectors) by
/// solving the r-variable weighted least-squares system of its column.
fn update_v_rows<T: Scalar>(m: &Matrix<T>, w: &WeightMatrix<T>, u: &Matrix<T>) -> Matrix<T> {
    let r = u.cols();
    let mut v_entries = Vec::with_capacity(m.cols() * r);
    for j in 0..m.cols() {
        let mut a = vec![T::zero(); r * r];
        let mut b = vec![T::zero(); r];
        for i in 0..m.rows() {
            let wij = w.get(i, j);
            if wij == T::zero() {
                continue;
            }
            for p in 0..r {
                let up = u.get(i, p);
                b[p] += wij * m.get(i, j) * up;
                for q in 0..r {
                    a[p * r + q] += wij * up * u.get(i, q);
                }
            }
        }
        v_entries.extend(solve_normal_equations(a, b, r));
    }
    Matrix::new(m.cols(), r, v_entries).expect("update preserves shape")
}

fn update_u_rows<T: Scalar>(m: &Matrix<T>, w: &WeightMatrix<T>, v: &Matrix<T>) -> Matrix<T> {
    let r = v.cols();
    let mut u_entries = Vec::with_capacity(m.rows() * r);
    for i in 0..m.rows() {
        let mut a = vec![T::zero(); r * r];
        let mut b = vec![T::zero(); r];
        for j in 0..m.cols() {
            let wij = w.get(i, j);
            if wij == T::zero() {
                continue;
            }
            for p in 0..r {
                let vp = v.get(j, p);
                b[p] += wij * m.get(i, j) * vp;
                for q in 0..r {
                    a[p * r + q] += wij * vp * v.get(j, q);
                }
            }
        }
        u_entries.extend(solve_normal_equations(a, b, r));
    }
    Matrix::new(m.rows(), r, u_entries).expect("update preserves shape")
}

fn rebalance_columns<T: Scalar>(u: &mut Matrix<T>, v: &mut Matrix<T>) {
    let r = u.cols();
    let mut ue = u.entries().to_vec();
    let mut ve = v.entries().to_vec();
    for k in 0..r {
        let nu = (0..u.rows())
            .map(|i| ue[i * r + k] * ue[i * r + k])
            .sum::<T>()
            .sqrt();
        let nv = (0..v.rows())
            .map(|j| ve[j * r + k] * ve[j * r + k])
            .sum::<T>()
            .sqrt();
        if nu > T::zero() && nv > T::zero() {
            let s = (nv / nu).sqrt();
            for i in 0..u.rows() {
                ue[i * r + k] *= s;
            }
            for j in 0..v.rows() {
                ve[j * r + k] /= s;
            }
        }
    }
    *u = Matrix::new(u.rows(), r, ue).expect("rebalance preserves shape");
    *v = Matrix::new(v.rows(), r, ve).expect("rebalance preserves shape");
}

fn imbalance_ratio_rank_r<T: Scalar>(w: &WeightMatrix<T>, f: &FactorPair<T>) -> T {
    let mut zero_peak = T::zero();
    let mut support_peak = T::zero();
    for i in 0..w.rows() {
        for j in 0..w.cols() {
            let p = f.product_entry(i, j).abs();
            if w.get(i, j) == T::zero() {
                zero_peak = zero_peak.max(p);
            } else {
                support_peak = support_peak.max(p);
            }
        }
    }
    zero_peak / (T::one() + support_peak)
}

/// One rank-r run from explicit starting factors.
pub fn solve_rank_r_from<T: Scalar>(
    m: &Matrix<T>,
    w: &WeightMatrix<T>,
    u0: Matrix<T>,
    v0: Matrix<T>,
    cfg: &SolveConfig<T>,
    start_index: usize,
) -> Result<SolveResult<T>> {
    check_shapes(m, w)?;
    cfg.validate()?;
    let m_nonneg = cfg.nonneg && m.entries().iter().all(|&x| x >= T::zero());
    let mut u = u0;
    let mut v = v0;
    rebalance_columns(&mut u, &mut v);

    let pair =
        |u: &Matrix<T>, v: &Matrix<T>| FactorPair::new(u.clone(), v.clone()).expect("ranks match");
    let mut prev = obj_rank_r(m, w, &pair(&u, &v));
    let mut trajectory = vec![prev];
    let mut rho_history: Vec<T> = Vec::new();
    let mut converged = false;
    let mut diverged = false;
    let mut sweeps_used = cfg.max_sweeps;

    for sweep in 1..=cfg.max_sweeps {
        v = update_v_rows(m, w, &u);
        trajectory.push(obj_rank_r(m, w, &pair(&u, &v)));

        u = update_u_rows(m, w, &v);
        let mut obj = obj_rank_r(m, w, &pair(&u, &v));
        if m_nonneg {
            let au = Matrix::from_fn(u.rows(), u.cols(), |i, k| u.get(i, k).abs());
            let av = Matrix::from_fn(v.rows(), v.cols(), |j, k| v.get(j, k).abs());
            let abs_obj = obj_rank_r(m, w, &pair(&au, &av));
            if abs_obj <= obj {
                u = au;
                v = av;
                obj = abs_obj;
            }
        }
        trajectory.push(obj);
        rebalance_columns(&mut u, &mut v);

        let rho = imbalance_ratio_rank_r(w, &pair(&u, &v));
        rho_history.push(rho);
        if rho > cfg.divergence_threshold && obj < prev {
            diverged = true;
            sweeps_used = sweep;
            break;
        }
        if obj >= prev || prev - obj < cfg.rel_tol * prev {
            converged = true;
            sweeps_used = sweep;
            break;
        }
        prev = obj;
    }
    if !converged && !diverged {
        diverged = terminal_divergence(&rho_history);
    }

    let objective = *trajectory.last().expect("trajectory is never empty");
    Ok(SolveResult {
        factors: pair(&u, &v),
        objective,
        sweeps_used,
        converged,
        diverged,
        start_index,
        trajectory,
    })
}

/// Multistart rank-r solve by alternating per-row weighted least squares.
/// The rank-one path agrees with [`solve_rank_one`] on the final objective.
pub fn solve_rank_r<T: Scalar>(
    m: &Matrix<T>,
    w: &WeightMatrix<T>,
    r: usize,
    cfg: &SolveConfig<T>,
) -> Result<MultistartResult<T>> {
    check_shapes(m, w)?;
    cfg.validate()?;
    if r == 0 || r > m.rows().min(m.cols()) {
        return Err(Error::Parameter(format!(
            "rank must lie in 1..={}, got {r}",
            m.rows().min(m.cols())
        )));
    }
    let runs = run_starts(cfg.starts, cfg.threads, |idx| {
        let (u0, v0) = if idx == 0 {
            (
                Matrix::from_fn(m.rows(), r, |_, _| T::one()),
                Matrix::from_fn(m.cols(), r, |_, _| T::one()),
            )
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(idx as u64);
            let ue: Vec<T> = random_start(&mut rng, m.rows() * r);
            let ve: Vec<T> = random_start(&mut rng, m.cols() * r);
            (
                Matrix::new(m.rows(), r, ue).expect("start shape"),
                Matrix::new(m.cols(), r, ve).expect("start shape"),
            )
        };
        solve_rank_r_from(m, w, u0, v0, cfg, idx)
    })?;
    Ok(pick_best(runs))
}

// ---------------------------------------------------------------------------
// Landscape grid over the normalized rank-one parametrization
// u(x, y) = (x, y, sqrt(1 - x^2 - y^2)) for 3-row matrices
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct LandscapePoint<T> {
    pub xi: usize,
    pub yi: usize,
    pub x: T,
    pub y: T,
    pub objective: T,
}

/// Evaluates the objective with the optimal `v` on the feasible part of the
/// `grid_n x grid_n` grid over `{x, y >= 0, x^2 + y^2 <= 1}`; infeasible
/// points are omitted.
pub fn landscape_grid<T: Scalar>(
    m: &Matrix<T>,
    w: &WeightMatrix<T>,
    grid_n: usize,
) -> Result<Vec<LandscapePoint<T>>> {
    check_shapes(m, w)?;
    if m.rows() != 3 {
        return Err(Error::Dimension(format!(
            "landscape parametrization needs exactly 3 rows, got {}",
            m.rows()
        )));
    }
    if grid_n < 2 {
        return Err(Error::Parameter(
            "grid must have at least 2 points per axis".into(),
        ));
    }
    let step = T::one() / T::of((grid_n - 1) as f64);
    let mut points = Vec::new();
    for yi in 0..grid_n {
        for xi in 0..grid_n {
            let x = step * T::of(xi as f64);
            let y = step * T::of(yi as f64);
            let rest = T::one() - x * x - y * y;
            if rest < -T::of(1e-12) {
                continue;
            }
            let z = rest.max(T::zero()).sqrt();
            let u = vec![x, y, z];
            let v = closed_form_v(m, w, &u)?;
            let objective = obj_rank_one(m, w, &u, &v);
            points.push(LandscapePoint {
                xi,
                yi,
                x,
                y,
                objective,
            });
        }
    }
    Ok(points)
}

/// Grid-local minima by 8-neighbor comparison with plateau handling: cells
/// whose objectives agree within 1e-9 relative merge into one plateau, and a
/// plateau is a minimum iff none of its cells has a strictly lower feasible
/// neighbor. Each minimal plateau is reported once, by its lowest cell (ties
/// to the smallest grid index). Returns indices into `points`.
pub fn landscape_local_minima<T: Scalar>(
    points: &[LandscapePoint<T>],
    grid_n: usize,
) -> Vec<usize> {
    let mut grid = vec![usize::MAX; grid_n * grid_n];
    for (idx, p) in points.iter().enumerate() {
        grid[p.yi * grid_n + p.xi] = idx;
    }
    let at = |xi: isize, yi: isize| -> Option<usize> {
        if xi < 0 || yi < 0 || xi >= grid_n as isize || yi >= grid_n as isize {
            return None;
        }
        let slot = grid[yi as usize * grid_n + xi as usize];
        (slot != usize::MAX).then_some(slot)
    };
    let close =
        |a: T, b: T| -> bool { (a - b).abs() <= T::of(1e-9) * (T::one() + a.abs().max(b.abs())) };

    let mut component = vec![usize::MAX; points.len()];
    let mut minima = Vec::new();
    for idx in 0..points.len() {
        if component[idx] != usize::MAX {
            continue;
        }
        // flood-fill the value plateau containing this cell
        component[idx] = idx;
        let mut stack = vec![idx];
        let mut members = Vec::new();
        while let Some(cur) = stack.pop() {
            members.push(cur);
            let p = &points[cur];
            for dy in -1..=1isize {
                for dx in -1..=1isize {
                    if let Some(q) = at(p.xi as isize + dx, p.yi as isize + dy) {
                        if component[q] == usize::MAX && close(points[q].objective, p.objective) {
                            component[q] = idx;
                            stack.push(q);
                        }
                    }
                }
            }
        }
        let has_descent = members.iter().any(|&cur| {
            let p = &points[cur];
            (-1..=1isize).any(|dy| {
                (-1..=1isize).any(|dx| {
                    at(p.xi as isize + dx, p.yi as isize + dy).is_some_and(|q| {
                        component[q] != idx
                            && points[q].objective < p.objective
                            && !close(points[q].objective, p.objective)
                    })
                })
            })
        });
        if !has_descent {
            let rep = members
                .into_iter()
                .min_by(|&a, &b| {
                    (points[a].objective, points[a].yi, points[a].xi)
                        .partial_cmp(&(points[b].objective, points[b].yi, points[b].xi))
                        .expect("finite objectives")
                })
                .expect("plateau is nonempty");
            minima.push(rep);
        }
    }
    minima.sort_by_key(|&i| (points[i].yi, points[i].xi));
    minima
}

/// CSV lines `x,y,objective` with 12 significant digits and a header row.
pub fn landscape_to_csv<T: Scalar>(points: &[LandscapePoint<T>]) -> String {
    let mut out = String::from("x,y,objective\n");
    for p in points {
        out.push_str(&format!(
            "{:.11e},{:.11e},{:.11e}\n",
            p.x.to_f64_lossy(),
            p.y.to_f64_lossy(),
            p.objective.to_f64_lossy()
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::wlra_objective;

    fn showcase_m() -> Matrix<f64> {
        Matrix::from_rows(vec![
            vec![1.0, 0.0, 1.0],
            vec![0.0, 1.0, 1.0],
            vec![1.0, 1.0, 1.0],
        ])
        .unwrap()
    }

    fn showcase_w() -> WeightMatrix<f64> {
        WeightMatrix::from_entries(3, 3, vec![1.0, 100.0, 2.0, 100.0, 1.0, 2.0, 1.0, 1.0, 1.0])
            .unwrap()
    }

    fn corner_mask() -> (Matrix<f64>, WeightMatrix<f64>) {
        let masked =
            crate::matrix::parse_masked_matrix::<f64>("2 2\n1 ?\n0 1\n", "inline").unwrap();
        (masked.values().clone(), masked.weight_matrix())
    }

    #[test]
    fn closed_form_v_examples() {
        let m = showcase_m();
        let w = showcase_w();
        let h = 0.5f64.sqrt();
        let v = closed_form_v(&m, &w, &[h, 0.0, h]).unwrap();
        let sqrt2 = 2.0f64.sqrt();
        assert!((v[0] - sqrt2).abs() < 2e-2);
        assert!(v[1].abs() < 2e-2);
        assert!((v[2] - sqrt2).abs() < 2e-2);

        // exact rank-one data with unit-norm u recovers w exactly
        let target = [3.0_f64, -1.0, 0.5, 2.0];
        let u = [0.6_f64, 0.8];
        let data = Matrix::from_fn(2, 4, |i, j| u[i] * target[j]);
        let ones = WeightMatrix::all_ones(2, 4);
        let v = closed_form_v(&data, &ones, &u).unwrap();
        for (got, want) in v.iter().zip(&target) {
            assert!((got - want).abs() < 1e-12);
        }

        // masked column with zero denominator takes the minimum-norm value
        let (m2, w2) = corner_mask();
        let v = closed_form_v(&m2, &w2, &[1.0, 0.0]).unwrap();
        assert_eq!(v, vec![1.0, 0.0]);

        assert!(matches!(
            closed_form_v(&m, &w, &[0.0, 0.0, 0.0]),
            Err(Error::DegenerateInput(_))
        ));
        assert!(matches!(
            closed_form_v(&m, &w, &[1.0, 1.0]),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn closed_form_v_is_columnwise_optimal() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20 {
            let m = Matrix::from_fn(3, 4, |_, _| rng.gen_range(-2.0..2.0));
            let w =
                WeightMatrix::new(Matrix::from_fn(3, 4, |_, _| rng.gen_range(0.1..3.0))).unwrap();
            let u: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if u.iter().all(|&x| x == 0.0) {
                continue;
            }
            let v = closed_form_v(&m, &w, &u).unwrap();
            let base = obj_rank_one(&m, &w, &u, &v);
            for j in 0..4 {
                for delta in [-1e-4, 1e-4] {
                    let mut vp = v.clone();
                    vp[j] += delta;
                    assert!(obj_rank_one(&m, &w, &u, &vp) >= base - 1e-15);
                }
            }
        }
    }

    #[test]
    fn exact_rank_one_recovery() {
        let u = [1.0, -2.0, 0.5];
        let v = [2.0, 1.0, -1.0, 0.25];
        let m = Matrix::from_fn(3, 4, |i, j| u[i] * v[j]);
        let w = WeightMatrix::all_ones(3, 4);
        let res = solve_rank_one(&m, &w, &SolveConfig::default()).unwrap();
        assert!(res.best.objective < 1e-10);
        assert!(res.best.converged && !res.best.diverged);
    }

    #[test]
    fn multistart_on_printed_weights_finds_the_global_cluster() {
        let cfg = SolveConfig {
            starts: 64,
            nonneg: true,
            ..SolveConfig::default()
        };
        let res = solve_rank_one(&showcase_m(), &showcase_w(), &cfg).unwrap();
        // global optimum sits in the all-rows / column-3 basin
        assert!(res.best.objective < 3.99);
        assert!(res.best.converged);
        let o = wlra_objective(&showcase_m(), &showcase_w(), &res.best.factors).unwrap();
        assert!((o - res.best.objective).abs() <= 1e-10 * (1.0 + o));
    }

    #[test]
    fn unattained_infimum_is_flagged() {
        let (m, w) = corner_mask();
        let cfg = SolveConfig {
            starts: 2,
            max_sweeps: 400_000,
            ..SolveConfig::default()
        };
        let res = solve_rank_one(&m, &w, &cfg).unwrap();
        assert!(
            res.best.objective < 1e-6,
            "objective {}",
            res.best.objective
        );
        assert!(res.best.diverged, "divergence not flagged");
        assert!(!res.best.converged);
    }

    #[test]
    fn completable_mask_converges_without_divergence_flag() {
        // rank-one completable pattern: the solver must converge cleanly
        let masked =
            crate::matrix::parse_masked_matrix::<f64>("2 2\n1 ?\n2 4\n", "inline").unwrap();
        let res = solve_rank_one(
            masked.values(),
            &masked.weight_matrix(),
            &SolveConfig {
                starts: 4,
                ..SolveConfig::default()
            },
        )
        .unwrap();
        assert!(res.best.objective < 1e-12);
        assert!(res.best.converged && !res.best.diverged);
    }

    #[test]
    fn trajectories_are_monotone_and_balanced() {
        let cfg = SolveConfig {
            starts: 8,
            ..SolveConfig::default()
        };
        let res = solve_rank_one(&showcase_m(), &showcase_w(), &cfg).unwrap();
        for run in &res.runs {
            for pair in run.trajectory.windows(2) {
                assert!(
                    pair[1] <= pair[0] + 1e-12 * (1.0 + pair[0]),
                    "objective increased within a sweep"
                );
            }
            let (u, v) = run.factors.rank_one_vectors().unwrap();
            let (nu, nv) = (norm2(&u), norm2(&v));
            assert!((nu - nv).abs() <= 1e-10 * (nu + nv));
        }
    }

    #[test]
    fn scale_invariant_trajectories() {
        let m = showcase_m();
        let w = showcase_w();
        let cfg = SolveConfig {
            max_sweeps: 50,
            ..SolveConfig::default()
        };
        let u0 = vec![0.3, -0.7, 0.9];
        let v0 = vec![0.2, 0.8, -0.5];
        let a = solve_rank_one_from(&m, &w, u0.clone(), v0.clone(), &cfg, 0).unwrap();
        let u2: Vec<f64> = u0.iter().map(|x| 2.0 * x).collect();
        let vh: Vec<f64> = v0.iter().map(|x| x / 2.0).collect();
        let b = solve_rank_one_from(&m, &w, u2, vh, &cfg, 0).unwrap();
        assert_eq!(a.trajectory.len(), b.trajectory.len());
        for (x, y) in a.trajectory.iter().zip(&b.trajectory) {
            assert!((x - y).abs() <= 1e-10 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn nonneg_projection_never_hurts_on_nonneg_data() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..50 {
            let m = Matrix::from_fn(3, 3, |_, _| rng.gen_range(0.0..2.0));
            let w =
                WeightMatrix::new(Matrix::from_fn(3, 3, |_, _| rng.gen_range(0.0..2.0))).unwrap();
            let u: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let v: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let au: Vec<f64> = u.iter().map(|x| x.abs()).collect();
            let av: Vec<f64> = v.iter().map(|x| x.abs()).collect();
            assert!(obj_rank_one(&m, &w, &au, &av) <= obj_rank_one(&m, &w, &u, &v) + 1e-14);
        }
    }

    #[test]
    fn rank_r_full_rank_reaches_zero() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let m = Matrix::from_fn(3, 4, |_, _| rng.gen_range(-2.0..2.0));
        let w = WeightMatrix::all_ones(3, 4);
        let cfg = SolveConfig {
            starts: 4,
            ..SolveConfig::default()
        };
        let res = solve_rank_r(&m, &w, 3, &cfg).unwrap();
        assert!(
            res.best.objective < 1e-8,
            "objective {}",
            res.best.objective
        );
    }

    #[test]
    fn rank_one_paths_agree() {
        let cfg = SolveConfig {
            starts: 8,
            ..SolveConfig::default()
        };
        let a = solve_rank_one(&showcase_m(), &showcase_w(), &cfg).unwrap();
        let b = solve_rank_r(&showcase_m(), &showcase_w(), 1, &cfg).unwrap();
        assert!(
            (a.best.objective - b.best.objective).abs() <= 1e-9 * (1.0 + a.best.objective),
            "rank-1 objectives disagree: {} vs {}",
            a.best.objective,
            b.best.objective
        );
    }

    #[test]
    fn rank_two_block_instance_beats_the_indicator_value() {
        use crate::biclique::{max_edge_biclique, BipartiteGraph};
        use crate::reductions::build_block_rank_r;
        let g = BipartiteGraph::from_biadjacency(&showcase_m()).unwrap();
        let inst = build_block_rank_r(&g, 2, 1000.0).unwrap();
        let best = max_edge_biclique(&g).unwrap();

        // oracle candidate: one biclique indicator per disconnected copy,
        // block-diagonal so the zero-weight cross blocks stay exact
        let (bu, bv) = best.best.indicators::<f64>(3, 3);
        let u0 = Matrix::from_fn(6, 2, |i, k| if i / 3 == k { bu[i % 3] } else { 0.0 });
        let v0 = Matrix::from_fn(6, 2, |j, k| if j / 3 == k { bv[j % 3] } else { 0.0 });
        let candidate = FactorPair::new(u0, v0).unwrap();
        let candidate_obj = wlra_objective(&inst.m, &inst.w, &candidate).unwrap();
        assert_eq!(candidate_obj, 2.0 * best.optimum as f64);

        let cfg = SolveConfig {
            starts: 64,
            ..SolveConfig::default()
        };
        let res = solve_rank_r(&inst.m, &inst.w, 2, &cfg).unwrap();
        assert!(
            res.best.objective <= candidate_obj + 1e-9,
            "solver best {} exceeds the indicator candidate value {candidate_obj}",
            res.best.objective
        );
    }

    #[test]
    fn rank_r_validates_rank() {
        let m = showcase_m();
        let w = showcase_w();
        assert!(matches!(
            solve_rank_r(&m, &w, 0, &SolveConfig::default()),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            solve_rank_r(&m, &w, 4, &SolveConfig::default()),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn threaded_solve_is_deterministic() {
        let cfg1 = SolveConfig {
            starts: 8,
            threads: 1,
            ..SolveConfig::default()
        };
        let cfg4 = SolveConfig {
            threads: 4,
            ..cfg1.clone()
        };
        let a = solve_rank_one(&showcase_m(), &showcase_w(), &cfg1).unwrap();
        let b = solve_rank_one(&showcase_m(), &showcase_w(), &cfg4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_weights_rejected() {
        let m = showcase_m();
        let w = WeightMatrix::from_entries(3, 3, vec![0.0; 9]).unwrap();
        assert!(matches!(
            solve_rank_one(&m, &w, &SolveConfig::default()),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn landscape_smoke_and_shape_error() {
        let m = showcase_m();
        let w = showcase_w();
        let pts = landscape_grid(&m, &w, 3).unwrap();
        assert!(pts.len() <= 9);
        assert!(pts.iter().all(|p| p.x * p.x + p.y * p.y <= 1.0 + 1e-12));

        let bad = Matrix::<f64>::zeros(2, 3);
        let wb = WeightMatrix::all_ones(2, 3);
        assert!(matches!(
            landscape_grid(&bad, &wb, 3),
            Err(Error::Dimension(_))
        ));

        let csv = landscape_to_csv(&pts);
        assert!(csv.starts_with("x,y,objective\n"));
        assert_eq!(csv.lines().count(), pts.len() + 1);
    }

    #[test]
    fn landscape_aligned_rank_one_has_single_minimum() {
        // data generated by u-direction (1, 0, 0): the objective depends on x
        // only, so the feasible arc is a plateau that must merge into the
        // single minimum at (1, 0)
        let wv = [2.0_f64, 1.0, 0.5];
        let m = Matrix::from_fn(3, 3, |i, j| if i == 0 { wv[j] } else { 0.0 });
        let w = WeightMatrix::all_ones(3, 3);
        let pts = landscape_grid(&m, &w, 201).unwrap();
        let minima = landscape_local_minima(&pts, 201);
        assert_eq!(minima.len(), 1, "expected a single merged minimum");
        let p = &pts[minima[0]];
        assert!((p.x - 1.0).abs() < 1e-12 && p.y.abs() < 1e-12);
        assert!(p.objective < 1e-12);
    }

    #[test]
    fn showcase_landscape_minima_locations() {
        let pts = landscape_grid(&showcase_m(), &showcase_w(), 201).unwrap();
        let minima = landscape_local_minima(&pts, 201);
        for &idx in &minima {
            let p = &pts[idx];
            eprintln!(
                "minimum at ({:.4}, {:.4}) objective {:.6}",
                p.x, p.y, p.objective
            );
        }
        assert_eq!(minima.len(), 4, "expected exactly 4 grid-local minima");
    }
}
