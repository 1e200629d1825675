//! Bound verification: checks the certified inequalities on concrete factor
//! pairs, extracts bicliques from factors by thresholding, and runs the
//! recovery formula that turns an approximate objective value into the
//! maximum biclique edge count.
//!
//! Every check emits a [`BoundReport`] rather than a bare boolean so the
//! verified quantities (worst-case product bounds, thresholds, margins) can
//! be logged and inspected.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::biclique::{max_edge_biclique, Biclique, BipartiteGraph};
use crate::error::{Error, Result};
use crate::matrix::{wlra_objective, FactorPair, WeightMatrix};
use crate::reductions::{missing_data_witness, ReductionInstance, ReductionKind, WitnessParams};
use crate::scalar::Scalar;

/// Seed of the uniform candidate sampler used by the lower-bound checks.
pub const SAMPLER_SEED: u64 = 42;

/// Outcome of one verified inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport<T> {
    pub name: String,
    /// Whether the check's hypothesis held (energy budget, d threshold, ...).
    pub hypothesis_ok: bool,
    pub lhs: T,
    pub rhs: T,
    pub satisfied: bool,
    pub margin: T,
}

impl<T: Scalar> BoundReport<T> {
    /// One JSON line per report.
    pub fn to_json_line(&self) -> String {
        json!({
            "name": self.name,
            "hypothesis_ok": self.hypothesis_ok,
            "lhs": self.lhs.to_f64_lossy(),
            "rhs": self.rhs.to_f64_lossy(),
            "satisfied": self.satisfied,
            "margin": self.margin.to_f64_lossy(),
        })
        .to_string()
    }
}

fn validate_c<T: Scalar>(c: T) -> Result<()> {
    if c <= T::zero() || c > T::one() {
        return Err(Error::Parameter(format!("c must lie in (0, 1], got {c}")));
    }
    Ok(())
}

fn validate_eps<T: Scalar>(eps: T) -> Result<()> {
    if eps <= T::zero() || eps > T::one() {
        return Err(Error::Parameter(format!(
            "eps must lie in (0, 1], got {eps}"
        )));
    }
    Ok(())
}

/// Vertex sets `{i : exists j, |u_i v_j| > c}` and `{j : exists i, |u_i v_j| > c}`
/// without any validity check against a graph.
pub fn omega_threshold_sets<T: Scalar>(u: &[T], v: &[T], c: T) -> (Vec<usize>, Vec<usize>) {
    let rows = (0..u.len())
        .filter(|&i| v.iter().any(|&vj| (u[i] * vj).abs() > c))
        .collect();
    let cols = (0..v.len())
        .filter(|&j| u.iter().any(|&ui| (ui * v[j]).abs() > c))
        .collect();
    (rows, cols)
}

/// Thresholded biclique extraction. The vertex-set pair is guaranteed to be
/// a biclique whenever the product bound holds at every zero entry; if it
/// covers a non-edge the chosen `c` was too small for this factor pair and a
/// constraint violation is raised.
pub fn extract_biclique<T: Scalar>(g: &BipartiteGraph, u: &[T], v: &[T], c: T) -> Result<Biclique> {
    validate_c(c)?;
    if u.len() != g.s() || v.len() != g.t() {
        return Err(Error::Dimension(format!(
            "expected graph-block factors of lengths {} and {}, got {} and {}",
            g.s(),
            g.t(),
            u.len(),
            v.len()
        )));
    }
    let (rows, cols) = omega_threshold_sets(u, v, c);
    let b = Biclique::new(rows, cols);
    if !b.is_valid_in(g) {
        return Err(Error::ConstraintViolation(
            "extracted vertex sets cover a non-edge; c is too small for this factor pair".into(),
        ));
    }
    Ok(b)
}

/// `min(max_k |u_i v_k|, max_p |u_p v_j|)` at one index pair.
fn row_col_peak_min<T: Scalar>(u: &[T], v: &[T], i: usize, j: usize) -> T {
    let row_peak = v
        .iter()
        .map(|&vk| (u[i] * vk).abs())
        .fold(T::zero(), T::max);
    let col_peak = u
        .iter()
        .map(|&up| (up * v[j]).abs())
        .fold(T::zero(), T::max);
    row_peak.min(col_peak)
}

/// Worst case of [`row_col_peak_min`] over a set of index pairs; zero when
/// the set is empty (vacuous satisfaction).
fn worst_zero_entry_peak<T: Scalar>(u: &[T], v: &[T], zeros: &[(usize, usize)]) -> T {
    zeros
        .iter()
        .map(|&(i, j)| row_col_peak_min(u, v, i, j))
        .fold(T::zero(), T::max)
}

/// Fourth-root product bound on positive-weight instances: for every zero
/// entry of the biadjacency matrix, under the energy hypothesis
/// `objective <= |E|`, the smaller of the row/column product peaks must stay
/// below `(4 |E|^2 / d)^(1/4)`.
pub fn check_fourth_root_bound<T: Scalar>(
    inst: &ReductionInstance<T>,
    u: &[T],
    v: &[T],
) -> Result<BoundReport<T>> {
    if inst.kind != ReductionKind::PositiveWeight {
        return Err(Error::Parameter(
            "the fourth-root bound applies to positive-weight instances".into(),
        ));
    }
    let f = FactorPair::rank_one(u.to_vec(), v.to_vec())?;
    let objective = wlra_objective(&inst.m, &inst.w, &f)?;
    let e = T::of(inst.source.edge_count() as f64);
    let hypothesis_ok = objective <= e;
    let lhs = worst_zero_entry_peak(u, v, &inst.source.zero_entries());
    let rhs = (T::of(4.0) * e * e / inst.d).powf(T::of(0.25));
    Ok(BoundReport {
        name: "fourth_root_bound".into(),
        hypothesis_ok,
        lhs,
        rhs,
        satisfied: lhs <= rhs,
        margin: rhs - lhs,
    })
}

/// Lower bound from the thresholded biclique: when the product bound holds
/// with constant `c` at every zero entry and `W = 1` on the edges, the
/// squared objective exceeds `p (1 - 2c)` where `p = |E| - |E*|`. The
/// squared form is the one the argument actually establishes, via
/// `objective >= (1 - c)^2 p`.
pub fn check_threshold_lower_bound<T: Scalar>(
    g: &BipartiteGraph,
    w: &WeightMatrix<T>,
    u: &[T],
    v: &[T],
    c: T,
) -> Result<BoundReport<T>> {
    validate_c(c)?;
    for i in 0..g.s() {
        for j in 0..g.t() {
            if g.has_edge(i, j) && w.get(i, j) != T::one() {
                return Err(Error::Parameter(
                    "weights must equal 1 on every edge of the graph".into(),
                ));
            }
        }
    }
    let f = FactorPair::rank_one(u.to_vec(), v.to_vec())?;
    let objective = wlra_objective(&g.biadjacency(), w, &f)?;
    let zeros = g.zero_entries();
    let hypothesis_ok = zeros
        .iter()
        .all(|&(i, j)| row_col_peak_min(u, v, i, j) <= c);
    let p = T::of(max_edge_biclique(g)?.optimum as f64);
    if p == T::zero() {
        // one-biclique graphs have nothing to bound
        return Ok(BoundReport {
            name: "threshold_lower_bound".into(),
            hypothesis_ok,
            lhs: T::zero(),
            rhs: objective,
            satisfied: true,
            margin: objective,
        });
    }
    let lhs = p * (T::one() - T::of(2.0) * c);
    Ok(BoundReport {
        name: "threshold_lower_bound".into(),
        hypothesis_ok,
        lhs,
        rhs: objective,
        satisfied: objective > lhs,
        margin: objective - lhs,
    })
}

/// Sandwich verification on a positive-weight instance:
/// `|E| - |E*| - eps < p_best <= |E| - |E*|` whenever `d` meets the
/// `2^6 |E|^6 / eps^4` threshold. `p_best` is the best candidate objective
/// found, which upper-bounds the true optimum.
pub fn check_sandwich_bounds<T: Scalar>(
    inst: &ReductionInstance<T>,
    eps: T,
    p_best: T,
) -> Result<BoundReport<T>> {
    if inst.kind != ReductionKind::PositiveWeight {
        return Err(Error::Parameter(
            "the sandwich bound applies to positive-weight instances".into(),
        ));
    }
    validate_eps(eps)?;
    let e_count = inst.source.edge_count();
    let p = T::of(max_edge_biclique(&inst.source)?.optimum as f64);
    let hypothesis_ok = if e_count == 0 {
        true // edgeless graph: p* = 0 for every d
    } else {
        inst.d >= crate::reductions::sandwich_d_threshold(e_count, eps)?
    };
    let lhs = p - eps;
    let rhs = p;
    let slack = T::of(1e-12) * (T::one() + rhs);
    let satisfied = lhs < p_best && p_best <= rhs + slack;
    Ok(BoundReport {
        name: "sandwich".into(),
        hypothesis_ok,
        lhs,
        rhs,
        satisfied,
        margin: rhs - p_best,
    })
}

/// Recovery formula `|E*| = |E| - ceil(p_bar + eps) + 1`. The caller must
/// supply a `p_bar` with `p* <= p_bar <= p* + 1 - eps`; that precondition is
/// not checkable here and a violation surfaces as an out-of-range result.
pub fn recover_biclique_count<T: Scalar>(e_count: usize, p_bar: T, eps: T) -> Result<usize> {
    validate_eps(eps)?;
    if p_bar < T::zero() || !p_bar.is_finite() {
        return Err(Error::Parameter(format!(
            "candidate objective must be a finite nonnegative value, got {p_bar}"
        )));
    }
    let recovered = e_count as i64 - (p_bar + eps).ceil().to_f64_lossy() as i64 + 1;
    if recovered < 0 || recovered > e_count as i64 {
        return Err(Error::Inconsistency(format!(
            "recovered edge count {recovered} lies outside [0, {e_count}]; \
             the accuracy precondition on p_bar was violated"
        )));
    }
    Ok(recovered as usize)
}

/// `sqrt(2) |E|^(3/4) / (d - sqrt(|E|))^(1/2)`, the missing-data analogue of
/// the fourth-root bound; requires `d > sqrt(|E|)`.
pub fn masked_peak_limit<T: Scalar>(e_count: usize, d: T) -> Result<T> {
    let e = T::of(e_count as f64);
    if d <= e.sqrt() {
        return Err(Error::Parameter(format!(
            "beta needs d > sqrt(|E|), got d = {d} with |E| = {e_count}"
        )));
    }
    Ok(T::of(2.0).sqrt() * e.powf(T::of(0.75)) / (d - e.sqrt()).sqrt())
}

/// Product bound on missing-data instances: for every zero entry of the
/// biadjacency block, under the energy hypothesis `objective <= |E|`, the
/// smaller of the row/column product peaks (taken over the full factor
/// vectors, tail coordinates included) stays below beta.
pub fn check_masked_peak_bound<T: Scalar>(
    inst: &ReductionInstance<T>,
    u: &[T],
    v: &[T],
) -> Result<BoundReport<T>> {
    if inst.kind != ReductionKind::MissingData {
        return Err(Error::Parameter(
            "this product bound applies to missing-data instances".into(),
        ));
    }
    let f = FactorPair::rank_one(u.to_vec(), v.to_vec())?;
    let objective = wlra_objective(&inst.m, &inst.w, &f)?;
    let e_count = inst.source.edge_count();
    let e = T::of(e_count as f64);
    let lhs = worst_zero_entry_peak(u, v, &inst.source.zero_entries());
    match masked_peak_limit(e_count, inst.d) {
        Ok(rhs) => Ok(BoundReport {
            name: "masked_peak_bound".into(),
            hypothesis_ok: objective <= e,
            lhs,
            rhs,
            satisfied: lhs <= rhs,
            margin: rhs - lhs,
        }),
        Err(_) => Ok(BoundReport {
            name: "masked_peak_bound".into(),
            hypothesis_ok: false,
            lhs,
            rhs: T::zero(),
            satisfied: false,
            margin: T::zero(),
        }),
    }
}

/// `8 |E|^(7/2) / eps^2 + sqrt(|E|)`: the instance parameter must strictly
/// exceed this for the missing-data lower bound to apply.
pub fn masked_d_threshold<T: Scalar>(e_count: usize, eps: T) -> Result<T> {
    validate_eps(eps)?;
    let e = T::of(e_count as f64);
    Ok(T::of(8.0) * e.powf(T::of(3.5)) / (eps * eps) + e.sqrt())
}

/// Missing-data lower bound battery: with `d` above the threshold every
/// candidate objective must exceed `|E| - |E*| - eps`, and the default
/// witness must certify the upper bound `|E| - |E*| + 2 Z d^(2 (1 - K))`.
pub fn check_masked_lower_bound<T: Scalar>(
    inst: &ReductionInstance<T>,
    eps: T,
    candidates: &[FactorPair<T>],
) -> Result<BoundReport<T>> {
    if inst.kind != ReductionKind::MissingData {
        return Err(Error::Parameter(
            "this lower bound applies to missing-data instances".into(),
        ));
    }
    validate_eps(eps)?;
    let e_count = inst.source.edge_count();
    let hypothesis_ok = inst.d > masked_d_threshold(e_count, eps)?;
    let best = max_edge_biclique(&inst.source)?;
    let p = T::of(best.optimum as f64);
    let lhs = p - eps;

    let mut min_obj = T::infinity();
    let mut all_above = true;
    for f in candidates {
        let obj = wlra_objective(&inst.m, &inst.w, f)?;
        min_obj = min_obj.min(obj);
        if obj <= lhs {
            all_above = false;
        }
    }

    let params = WitnessParams::default_for(inst)?;
    let witness = missing_data_witness(inst, &best.best, &params)?;
    let witness_obj = wlra_objective(&inst.m, &inst.w, &witness)?;
    let tail =
        T::of(2.0) * T::of(inst.z() as f64) * inst.d.powf(T::of(2.0) * (T::one() - params.k));
    let upper = p + tail;
    let witness_ok = witness_obj > lhs && witness_obj <= upper + T::of(1e-12) * (T::one() + upper);
    min_obj = min_obj.min(witness_obj);

    Ok(BoundReport {
        name: "masked_lower_bound".into(),
        hypothesis_ok,
        lhs,
        rhs: min_obj,
        satisfied: all_above && witness_ok,
        margin: min_obj - lhs,
    })
}

/// Uniform candidate draws in `[-2, 2]^(m+n)` for the sampling checks.
pub fn sample_candidates<T: Scalar>(
    m_rows: usize,
    n_cols: usize,
    count: usize,
    seed: u64,
) -> Vec<(Vec<T>, Vec<T>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let u = (0..m_rows)
                .map(|_| T::of(rng.gen_range(-2.0..=2.0)))
                .collect();
            let v = (0..n_cols)
                .map(|_| T::of(rng.gen_range(-2.0..=2.0)))
                .collect();
            (u, v)
        })
        .collect()
}
