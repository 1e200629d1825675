//! Builders for the biclique-to-WLRA reduction instances.
//!
//! Three constructions are supported:
//!
//! * positive-weight: weights 1 on edges and `d` on non-edges of the
//!   biadjacency matrix (rank-one, strictly positive weights),
//! * missing-data: the block instance with selector blocks `B1`/`B2` and a
//!   `d I_Z` diagonal tail (rank-one, binary weights),
//! * the rank-r block-diagonal instance made of `r` disconnected graph
//!   copies.
//!
//! Instances carry their source graph and the zero-entry enumeration so the
//! analysis checks can cross-reference them without re-deriving anything.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::biclique::{Biclique, BipartiteGraph};
use crate::error::{Error, Result};
use crate::matrix::{
    masked_to_text, matrix_to_text, read_masked_matrix, read_matrix, read_weight_matrix,
    wlra_objective, FactorPair, MaskedMatrix, Matrix, WeightMatrix,
};
use crate::scalar::Scalar;

/// Builders refuse `d` beyond this so `d^2` and the witness powers `d^K`
/// stay representable in double precision.
pub const D_MAX: f64 = 1e150;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionKind {
    PositiveWeight,
    MissingData,
    BlockRankR,
}

impl ReductionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ReductionKind::PositiveWeight => "positive_weight",
            ReductionKind::MissingData => "missing_data",
            ReductionKind::BlockRankR => "block_rank_r",
        }
    }
}

/// A WLRA instance produced by one of the reduction builders, with enough
/// provenance to audit it and to verify the certified bounds against it.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionInstance<T> {
    pub m: Matrix<T>,
    pub w: WeightMatrix<T>,
    pub rank: usize,
    pub d: T,
    pub kind: ReductionKind,
    pub source: BipartiteGraph,
    /// Row-major enumeration of the zero entries of the biadjacency matrix;
    /// index k of this list is the selector index of `B1`/`B2`. Present for
    /// missing-data instances.
    pub zero_index: Option<Vec<(usize, usize)>>,
    /// Set when a rescaling (`W/d` or `M/d`) has been applied, in which case
    /// the raw builder invariants no longer hold verbatim.
    pub rescaled: bool,
}

impl<T: Scalar> ReductionInstance<T> {
    /// Number of zero entries of the source biadjacency matrix.
    pub fn z(&self) -> usize {
        self.source.s() * self.source.t() - self.source.edge_count()
    }

    /// Masked view of a missing-data instance: unknown exactly where W = 0.
    pub fn masked_view(&self) -> Result<MaskedMatrix<T>> {
        if self.kind != ReductionKind::MissingData {
            return Err(Error::Parameter(
                "masked view only exists for missing-data instances".into(),
            ));
        }
        let known = self
            .w
            .matrix()
            .entries()
            .iter()
            .map(|&w| w != T::zero())
            .collect();
        MaskedMatrix::new(self.m.clone(), known)
    }

    /// Structural audit of the builder invariants for the instance kind.
    pub fn audit(&self) -> Result<()> {
        if self.rescaled {
            return Ok(()); // raw invariants are intentionally scaled away
        }
        match self.kind {
            ReductionKind::PositiveWeight => self.audit_positive_weight(),
            ReductionKind::MissingData => self.audit_missing_data(),
            ReductionKind::BlockRankR => self.audit_block(),
        }
    }

    fn audit_positive_weight(&self) -> Result<()> {
        let g = &self.source;
        if self.m != g.biadjacency() {
            return Err(Error::Inconsistency(
                "M is not the biadjacency matrix".into(),
            ));
        }
        for (i, j, w) in self.w.matrix().indexed() {
            let expect = if g.has_edge(i, j) { T::one() } else { self.d };
            if w != expect {
                return Err(Error::Inconsistency(format!(
                    "W({i}, {j}) = {w} violates the 1/d rule"
                )));
            }
        }
        Ok(())
    }

    fn audit_missing_data(&self) -> Result<()> {
        let g = &self.source;
        let (s, t, z) = (g.s(), g.t(), self.z());
        let zeros = self
            .zero_index
            .as_ref()
            .ok_or_else(|| Error::Inconsistency("missing zero-entry enumeration".into()))?;
        if zeros.len() != z {
            return Err(Error::Inconsistency(
                "zero enumeration has wrong length".into(),
            ));
        }
        if self.m.rows() != s + z || self.m.cols() != t + z {
            return Err(Error::Inconsistency("block dimensions are wrong".into()));
        }
        let mut b1_col_sums = vec![0usize; z];
        let mut b2_row_sums = vec![0usize; z];
        let mut w_units = 0usize;
        for (i, j, w) in self.w.matrix().indexed() {
            if w == T::one() {
                w_units += 1;
            } else if w != T::zero() {
                return Err(Error::Inconsistency("W must be binary".into()));
            }
            match (i < s, j < t) {
                (true, true) => {
                    if w != T::one() {
                        return Err(Error::Inconsistency(
                            "upper-left W block must be ones".into(),
                        ));
                    }
                }
                (true, false) => {
                    let k = j - t;
                    if w == T::one() {
                        b1_col_sums[k] += 1;
                        if zeros[k].0 != i {
                            return Err(Error::Inconsistency(format!(
                                "B1 unit in column {k} is at row {i}, expected {}",
                                zeros[k].0
                            )));
                        }
                    }
                }
                (false, true) => {
                    let k = i - s;
                    if w == T::one() {
                        b2_row_sums[k] += 1;
                        if zeros[k].1 != j {
                            return Err(Error::Inconsistency(format!(
                                "B2 unit in row {k} is at column {j}, expected {}",
                                zeros[k].1
                            )));
                        }
                    }
                }
                (false, false) => {
                    let expect = if i - s == j - t { T::one() } else { T::zero() };
                    if w != expect {
                        return Err(Error::Inconsistency(
                            "lower-right W block must be I_Z".into(),
                        ));
                    }
                }
            }
        }
        if b1_col_sums.iter().any(|&c| c != 1) || b2_row_sums.iter().any(|&c| c != 1) {
            return Err(Error::Inconsistency(
                "each B1 column and B2 row must hold exactly one unit".into(),
            ));
        }
        if w_units != s * t + 3 * z {
            return Err(Error::Inconsistency(format!(
                "W must have {} unit entries, found {w_units}",
                s * t + 3 * z
            )));
        }
        for (i, j, v) in self.m.indexed() {
            let expect = match (i < s, j < t) {
                (true, true) => {
                    if g.has_edge(i, j) {
                        T::one()
                    } else {
                        T::zero()
                    }
                }
                (false, false) if i - s == j - t => self.d,
                _ => T::zero(),
            };
            if v != expect {
                return Err(Error::Inconsistency(format!(
                    "M({i}, {j}) = {v} violates the block layout"
                )));
            }
        }
        Ok(())
    }

    fn audit_block(&self) -> Result<()> {
        let g = &self.source;
        let (s, t, r) = (g.s(), g.t(), self.rank);
        if self.m.rows() != r * s || self.m.cols() != r * t {
            return Err(Error::Inconsistency("block dimensions are wrong".into()));
        }
        for (i, j, v) in self.m.indexed() {
            let expect = if i / s == j / t && g.has_edge(i % s, j % t) {
                T::one()
            } else {
                T::zero()
            };
            if v != expect {
                return Err(Error::Inconsistency(
                    "M is not the block-diagonal copy".into(),
                ));
            }
            let w = self.w.get(i, j);
            let w_expect = if expect == T::one() { T::one() } else { self.d };
            if w != w_expect {
                return Err(Error::Inconsistency("W violates M' + d(1 - M')".into()));
            }
        }
        Ok(())
    }
}

fn validate_d<T: Scalar>(d: T, strict_gt_one: bool) -> Result<()> {
    if strict_gt_one {
        if d <= T::one() {
            return Err(Error::Parameter(format!("d must be > 1, got {d}")));
        }
    } else if d < T::one() {
        return Err(Error::Parameter(format!("d must be >= 1, got {d}")));
    }
    if d > T::of(D_MAX) {
        return Err(Error::Capacity(format!(
            "d = {d} exceeds the {D_MAX:e} cap"
        )));
    }
    Ok(())
}

/// Positive-weight instance: `M` is the biadjacency matrix, `W` is 1 on
/// edges and `d` off edges.
pub fn build_positive_weight<T: Scalar>(g: &BipartiteGraph, d: T) -> Result<ReductionInstance<T>> {
    validate_d(d, false)?;
    let m = g.biadjacency();
    let w = WeightMatrix::new(Matrix::from_fn(g.s(), g.t(), |i, j| {
        if g.has_edge(i, j) {
            T::one()
        } else {
            d
        }
    }))?;
    Ok(ReductionInstance {
        m,
        w,
        rank: 1,
        d,
        kind: ReductionKind::PositiveWeight,
        source: g.clone(),
        zero_index: None,
        rescaled: false,
    })
}

/// Smallest `d` certified by the sandwich bound: `2^6 |E|^6 / eps^4`.
pub fn sandwich_d_threshold<T: Scalar>(e_count: usize, eps: T) -> Result<T> {
    if e_count == 0 {
        return Err(Error::Parameter("edge count must be positive".into()));
    }
    if eps <= T::zero() || eps > T::one() {
        return Err(Error::Parameter(format!(
            "eps must lie in (0, 1], got {eps}"
        )));
    }
    let e = T::of(e_count as f64);
    Ok(T::of(64.0) * e.powi(6) / eps.powi(4))
}

/// Missing-data block instance:
/// `M = [[M_b, 0], [0, d I_Z]]`, `W = [[1, B1], [B2, I_Z]]`
/// with one selector column/row per zero entry of `M_b`, enumerated in
/// row-major order.
pub fn build_missing_data<T: Scalar>(g: &BipartiteGraph, d: T) -> Result<ReductionInstance<T>> {
    validate_d(d, true)?;
    let zeros = g.zero_entries();
    let z = zeros.len();
    if z == 0 {
        return Err(Error::DegenerateInstance(
            "biadjacency matrix has no zero entries; the optimum is 0 outright".into(),
        ));
    }
    let (s, t) = (g.s(), g.t());
    let m = Matrix::from_fn(s + z, t + z, |i, j| match (i < s, j < t) {
        (true, true) => {
            if g.has_edge(i, j) {
                T::one()
            } else {
                T::zero()
            }
        }
        (false, false) if i - s == j - t => d,
        _ => T::zero(),
    });
    let w = WeightMatrix::new(Matrix::from_fn(s + z, t + z, |i, j| {
        let unit = match (i < s, j < t) {
            (true, true) => true,
            (true, false) => zeros[j - t].0 == i, // B1
            (false, true) => zeros[i - s].1 == j, // B2
            (false, false) => i - s == j - t,     // I_Z
        };
        if unit {
            T::one()
        } else {
            T::zero()
        }
    }))?;
    Ok(ReductionInstance {
        m,
        w,
        rank: 1,
        d,
        kind: ReductionKind::MissingData,
        source: g.clone(),
        zero_index: Some(zeros),
        rescaled: false,
    })
}

/// Which binary indicator drives the selector-tail entries of the witness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessSide {
    /// The column indicator decides (the primary construction).
    UseV,
    /// The symmetric variant driven by the row indicator.
    UseU,
}

/// Parameters of the `d^K / d^{1-K}` witness construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessParams<T> {
    pub k: T,
    pub side: WitnessSide,
}

impl<T: Scalar> WitnessParams<T> {
    pub fn new(k: T, side: WitnessSide) -> Result<Self> {
        if k < T::one() {
            return Err(Error::Parameter(format!("K must be >= 1, got {k}")));
        }
        Ok(WitnessParams { k, side })
    }

    /// K large enough that the witness tail `2 Z d^{2(1-K)}` drops below
    /// 1e-9: `K = 1 + (9 + log10(2 Z)) / (2 log10 d)`.
    pub fn default_for(inst: &ReductionInstance<T>) -> Result<Self> {
        if inst.kind != ReductionKind::MissingData {
            return Err(Error::Parameter(
                "witness parameters apply to missing-data instances".into(),
            ));
        }
        let z = T::of(inst.z() as f64);
        let two_z = T::of(2.0) * z;
        let k = T::one() + (T::of(9.0) + two_z.log10()) / (T::of(2.0) * inst.d.log10());
        WitnessParams::new(k.max(T::one()), WitnessSide::UseV)
    }
}

/// Witness factor pair for a missing-data instance: binary indicators of `b` on the
/// graph block and `d^K / d^{1-K}` entries on the selector tail, arranged so
/// every tail diagonal product equals `d` exactly and every unit-weighted
/// cross product is at most `d^{1-K}`.
pub fn missing_data_witness<T: Scalar>(
    inst: &ReductionInstance<T>,
    b: &Biclique,
    params: &WitnessParams<T>,
) -> Result<FactorPair<T>> {
    if inst.kind != ReductionKind::MissingData {
        return Err(Error::Parameter(
            "witness construction applies to missing-data instances".into(),
        ));
    }
    if !b.is_valid_in(&inst.source) {
        return Err(Error::ConstraintViolation(
            "witness biclique covers a non-edge of the source graph".into(),
        ));
    }
    let zeros = inst
        .zero_index
        .as_ref()
        .expect("missing-data instances carry the zero enumeration");
    let (s, t) = (inst.source.s(), inst.source.t());
    let (u_b, v_b) = b.indicators::<T>(s, t);

    let high = inst.d.powf(params.k);
    let low = inst.d.powf(T::one() - params.k);

    let mut u = u_b;
    let mut v = v_b;
    u.reserve(zeros.len());
    v.reserve(zeros.len());
    for &(i, j) in zeros {
        let in_biclique = match params.side {
            WitnessSide::UseV => v[j] == T::one(),
            WitnessSide::UseU => u[i] == T::one(),
        };
        // the selected indicator is 0 on one side of every zero entry, which
        // silences the matching cross product
        let (ud, vd) = match (params.side, in_biclique) {
            (WitnessSide::UseV, false) => (high, low),
            (WitnessSide::UseV, true) => (low, high),
            (WitnessSide::UseU, false) => (low, high),
            (WitnessSide::UseU, true) => (high, low),
        };
        u.push(ud);
        v.push(vd);
    }
    FactorPair::rank_one(u, v)
}

/// Rank-r block instance: `r` disconnected copies of the graph with the same
/// 1-on-edges / d-off-edges weight rule, `W' = M' + d (1 - M')`.
pub fn build_block_rank_r<T: Scalar>(
    g: &BipartiteGraph,
    r: usize,
    d: T,
) -> Result<ReductionInstance<T>> {
    validate_d(d, false)?;
    if r == 0 {
        return Err(Error::Parameter("rank must be positive".into()));
    }
    let (s, t) = (g.s(), g.t());
    if (r * s).saturating_mul(r * t) > 10_000_000 {
        return Err(Error::Capacity(format!(
            "block instance would have {} entries",
            r * s * r * t
        )));
    }
    let on_copy = |i: usize, j: usize| -> bool { i / s == j / t && g.has_edge(i % s, j % t) };
    let m = Matrix::from_fn(r * s, r * t, |i, j| {
        if on_copy(i, j) {
            T::one()
        } else {
            T::zero()
        }
    });
    let w = WeightMatrix::new(Matrix::from_fn(r * s, r * t, |i, j| {
        if on_copy(i, j) {
            T::one()
        } else {
            d
        }
    }))?;
    Ok(ReductionInstance {
        m,
        w,
        rank: r,
        d,
        kind: ReductionKind::BlockRankR,
        source: g.clone(),
        zero_index: None,
        rescaled: false,
    })
}

/// Reduction of a rank-one weight matrix `W = s t^T` to an unweighted
/// problem on `M'_ij = sqrt(s_i t_j) M_ij`.
#[derive(Debug, Clone)]
pub struct RankOneWeightReduction<T> {
    pub scaled: Matrix<T>,
    row_scale: Vec<T>,
    col_scale: Vec<T>,
}

impl<T: Scalar> RankOneWeightReduction<T> {
    /// Maps factors of the unweighted problem back to the weighted one by
    /// dividing `U` rows by `sqrt(s_i)` and `V` rows by `sqrt(t_j)`.
    pub fn map_back(&self, factors: &FactorPair<T>) -> Result<FactorPair<T>> {
        let u = factors.u();
        let v = factors.v();
        if u.rows() != self.row_scale.len() || v.rows() != self.col_scale.len() {
            return Err(Error::Dimension(
                "factor shape does not match the reduction".into(),
            ));
        }
        let nu = Matrix::from_fn(u.rows(), u.cols(), |i, k| u.get(i, k) / self.row_scale[i]);
        let nv = Matrix::from_fn(v.rows(), v.cols(), |j, k| v.get(j, k) / self.col_scale[j]);
        FactorPair::new(nu, nv)
    }

    /// The rank-one weight matrix `s t^T` this reduction came from.
    pub fn weights(&self) -> WeightMatrix<T> {
        let s: Vec<T> = self.row_scale.iter().map(|&r| r * r).collect();
        let t: Vec<T> = self.col_scale.iter().map(|&c| c * c).collect();
        WeightMatrix::rank_one(&s, &t).expect("squares are nonnegative")
    }
}

pub fn rank_one_weight_reduce<T: Scalar>(
    m: &Matrix<T>,
    s: &[T],
    t: &[T],
) -> Result<RankOneWeightReduction<T>> {
    if s.len() != m.rows() || t.len() != m.cols() {
        return Err(Error::Dimension(format!(
            "weight factors must have lengths {} and {}",
            m.rows(),
            m.cols()
        )));
    }
    if s.iter().chain(t).any(|&x| x <= T::zero()) {
        return Err(Error::Parameter(
            "rank-one weight factors must be strictly positive".into(),
        ));
    }
    let row_scale: Vec<T> = s.iter().map(|&x| x.sqrt()).collect();
    let col_scale: Vec<T> = t.iter().map(|&x| x.sqrt()).collect();
    let scaled = Matrix::from_fn(m.rows(), m.cols(), |i, j| {
        row_scale[i] * col_scale[j] * m.get(i, j)
    });
    Ok(RankOneWeightReduction {
        scaled,
        row_scale,
        col_scale,
    })
}

/// Divides the weights of a positive-weight instance by `d`, which scales
/// every objective value by exactly `1/d`.
pub fn rescale_weights<T: Scalar>(inst: &ReductionInstance<T>) -> Result<ReductionInstance<T>> {
    if inst.kind != ReductionKind::PositiveWeight {
        return Err(Error::Parameter(
            "the weight rescaling applies to positive-weight instances".into(),
        ));
    }
    let w = WeightMatrix::new(Matrix::from_fn(inst.w.rows(), inst.w.cols(), |i, j| {
        inst.w.get(i, j) / inst.d
    }))?;
    Ok(ReductionInstance {
        w,
        rescaled: true,
        ..inst.clone()
    })
}

/// Divides the data matrix of a missing-data instance by `d`; with factors
/// `(u, v/d)` every objective value scales by exactly `1/d^2`.
pub fn rescale_data<T: Scalar>(inst: &ReductionInstance<T>) -> Result<ReductionInstance<T>> {
    if inst.kind != ReductionKind::MissingData {
        return Err(Error::Parameter(
            "the data rescaling applies to missing-data instances".into(),
        ));
    }
    let m = Matrix::from_fn(inst.m.rows(), inst.m.cols(), |i, j| {
        inst.m.get(i, j) / inst.d
    });
    Ok(ReductionInstance {
        m,
        rescaled: true,
        ..inst.clone()
    })
}

// ---------------------------------------------------------------------------
// Instance directories: M.txt, W.txt, meta.json. The data matrix of a
// missing-data instance is written in masked form, `?` at every W = 0
// position, which reproduces the printed block pattern.
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct InstanceMeta {
    kind: ReductionKind,
    d: f64,
    s: usize,
    t: usize,
    z: usize,
    rank: usize,
    /// 1-indexed zero entries in selector order; empty when not applicable.
    zero_order: Vec<(usize, usize)>,
    rescaled: bool,
}

pub fn write_instance_dir<T: Scalar>(inst: &ReductionInstance<T>, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let m_text = if inst.kind == ReductionKind::MissingData {
        masked_to_text(&inst.masked_view()?)
    } else {
        matrix_to_text(&inst.m)
    };
    let m_path = dir.join("M.txt");
    fs::write(&m_path, m_text).map_err(|e| Error::io(&m_path, e))?;
    let w_path = dir.join("W.txt");
    fs::write(&w_path, matrix_to_text(inst.w.matrix())).map_err(|e| Error::io(&w_path, e))?;
    let meta = InstanceMeta {
        kind: inst.kind,
        d: inst.d.to_f64_lossy(),
        s: inst.source.s(),
        t: inst.source.t(),
        z: inst.z(),
        rank: inst.rank,
        zero_order: inst
            .zero_index
            .as_ref()
            .map(|zs| zs.iter().map(|&(i, j)| (i + 1, j + 1)).collect())
            .unwrap_or_default(),
        rescaled: inst.rescaled,
    };
    let meta_path = dir.join("meta.json");
    let json = serde_json::to_string_pretty(&meta).expect("meta serializes");
    fs::write(&meta_path, json + "\n").map_err(|e| Error::io(&meta_path, e))?;
    Ok(())
}

pub fn read_instance_dir<T: Scalar>(dir: &Path) -> Result<ReductionInstance<T>> {
    let meta_path = dir.join("meta.json");
    let meta_text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: InstanceMeta = serde_json::from_str(&meta_text)
        .map_err(|e| Error::parse(&meta_path.display().to_string(), 0, e.to_string()))?;
    let w = read_weight_matrix::<T>(&dir.join("W.txt"))?;
    let m = if meta.kind == ReductionKind::MissingData {
        read_masked_matrix::<T>(&dir.join("M.txt"))?
            .values()
            .clone()
    } else {
        read_matrix::<T>(&dir.join("M.txt"))?
    };
    let source = match meta.kind {
        ReductionKind::PositiveWeight => BipartiteGraph::from_biadjacency(&m)?,
        ReductionKind::MissingData | ReductionKind::BlockRankR => {
            let block = Matrix::from_fn(meta.s, meta.t, |i, j| m.get(i, j));
            BipartiteGraph::from_biadjacency(&block)?
        }
    };
    let zero_index = if meta.zero_order.is_empty() {
        None
    } else {
        let zs: Vec<(usize, usize)> = meta
            .zero_order
            .iter()
            .map(|&(i, j)| (i - 1, j - 1))
            .collect();
        if zs.len() != meta.z {
            return Err(Error::Inconsistency(
                "zero_order length disagrees with z".into(),
            ));
        }
        Some(zs)
    };
    let inst = ReductionInstance {
        m,
        w,
        rank: meta.rank,
        d: T::of(meta.d),
        kind: meta.kind,
        source,
        zero_index,
        rescaled: meta.rescaled,
    };
    inst.audit()?;
    Ok(inst)
}

/// Objective of the binary indicator candidate; on an unrescaled
/// positive-weight instance it equals `|E| - |E(b)|` exactly.
pub fn indicator_objective<T: Scalar>(inst: &ReductionInstance<T>, b: &Biclique) -> Result<T> {
    let (u, v) = b.indicators::<T>(inst.m.rows(), inst.m.cols());
    let f = FactorPair::rank_one(u, v)?;
    wlra_objective(&inst.m, &inst.w, &f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::biclique::max_edge_biclique;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn showcase_graph() -> BipartiteGraph {
        BipartiteGraph::new(
            3,
            3,
            &[(0, 0), (0, 2), (1, 1), (1, 2), (2, 0), (2, 1), (2, 2)],
        )
        .unwrap()
    }

    fn identity_graph(n: usize) -> BipartiteGraph {
        let edges: Vec<(usize, usize)> = (0..n).map(|i| (i, i)).collect();
        BipartiteGraph::new(n, n, &edges).unwrap()
    }

    fn random_graph(rng: &mut ChaCha8Rng, max_side: usize) -> BipartiteGraph {
        loop {
            let s = rng.gen_range(1..=max_side);
            let t = rng.gen_range(1..=max_side);
            let edges: Vec<(usize, usize)> = (0..s)
                .flat_map(|i| (0..t).map(move |j| (i, j)))
                .filter(|_| rng.gen_bool(0.5))
                .collect();
            if !edges.is_empty() {
                return BipartiteGraph::new(s, t, &edges).unwrap();
            }
        }
    }

    #[test]
    fn positive_weight_builder_examples() {
        let inst = build_positive_weight(&identity_graph(2), 5.0).unwrap();
        assert_eq!(inst.w.matrix().entries(), &[1.0, 5.0, 5.0, 1.0]);
        assert_eq!(inst.rank, 1);
        inst.audit().unwrap();

        let inst = build_positive_weight(&showcase_graph(), 100.0).unwrap();
        assert_eq!(
            inst.w.matrix().entries(),
            &[1.0, 100.0, 1.0, 100.0, 1.0, 1.0, 1.0, 1.0, 1.0]
        );

        let inst = build_positive_weight(&BipartiteGraph::complete(2, 3).unwrap(), 42.0).unwrap();
        assert!(inst.w.matrix().entries().iter().all(|&w| w == 1.0));

        assert!(matches!(
            build_positive_weight(&identity_graph(2), 0.5),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            build_positive_weight(&identity_graph(2), 1e151),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn sandwich_threshold_values() {
        assert_eq!(sandwich_d_threshold::<f64>(7, 1.0).unwrap(), 7_529_536.0);
        assert_eq!(sandwich_d_threshold::<f64>(1, 1.0).unwrap(), 64.0);
        assert_eq!(sandwich_d_threshold::<f64>(7, 0.5).unwrap(), 120_472_576.0);
        assert!(matches!(
            sandwich_d_threshold::<f64>(7, 0.0),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            sandwich_d_threshold::<f64>(7, 1.5),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            sandwich_d_threshold::<f64>(0, 1.0),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn missing_data_block_layout_golden() {
        let inst = build_missing_data(&showcase_graph(), 10.0).unwrap();
        inst.audit().unwrap();
        assert_eq!(inst.z(), 2);
        assert_eq!((inst.m.rows(), inst.m.cols()), (5, 5));

        let expected_m = "5 5\n\
                          1 0 1 0 ?\n\
                          0 1 1 ? 0\n\
                          1 1 1 ? ?\n\
                          ? 0 ? 10 ?\n\
                          0 ? ? ? 10\n";
        assert_eq!(masked_to_text(&inst.masked_view().unwrap()), expected_m);

        let expected_w = Matrix::from_rows(vec![
            vec![1.0, 1.0, 1.0, 1.0, 0.0],
            vec![1.0, 1.0, 1.0, 0.0, 1.0],
            vec![1.0, 1.0, 1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 1.0, 0.0],
            vec![1.0, 0.0, 0.0, 0.0, 1.0],
        ])
        .unwrap();
        assert_eq!(inst.w.matrix(), &expected_w);
        assert!(inst.w.is_binary());
    }

    #[test]
    fn missing_data_identity_two_by_two() {
        let inst = build_missing_data(&identity_graph(2), 4.0).unwrap();
        inst.audit().unwrap();
        let expected_m = Matrix::from_rows(vec![
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 4.0, 0.0],
            vec![0.0, 0.0, 0.0, 4.0],
        ])
        .unwrap();
        let expected_w = Matrix::from_rows(vec![
            vec![1.0, 1.0, 1.0, 0.0],
            vec![1.0, 1.0, 0.0, 1.0],
            vec![0.0, 1.0, 1.0, 0.0],
            vec![1.0, 0.0, 0.0, 1.0],
        ])
        .unwrap();
        assert_eq!(&inst.m, &expected_m);
        assert_eq!(inst.w.matrix(), &expected_w);
        assert_eq!(inst.zero_index.as_deref(), Some(&[(0, 1), (1, 0)][..]));
    }

    #[test]
    fn single_zero_gives_elementary_selectors() {
        // complete 2x2 minus the (2, 2) edge
        let g = BipartiteGraph::new(2, 2, &[(0, 0), (0, 1), (1, 0)]).unwrap();
        let inst = build_missing_data(&g, 3.0).unwrap();
        inst.audit().unwrap();
        assert_eq!(inst.z(), 1);
        // B1 is the elementary column for row 2, B2 the elementary row for col 2
        assert_eq!(inst.w.get(0, 2), 0.0);
        assert_eq!(inst.w.get(1, 2), 1.0);
        assert_eq!(inst.w.get(2, 0), 0.0);
        assert_eq!(inst.w.get(2, 1), 1.0);
    }

    #[test]
    fn missing_data_rejects_degenerate_and_bad_d() {
        let complete = BipartiteGraph::complete(2, 2).unwrap();
        assert!(matches!(
            build_missing_data(&complete, 4.0),
            Err(Error::DegenerateInstance(_))
        ));
        assert!(matches!(
            build_missing_data(&identity_graph(2), 1.0),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn structural_audit_on_random_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..30 {
            let g = random_graph(&mut rng, 4);
            if g.zero_entries().is_empty() {
                continue;
            }
            let inst = build_missing_data(&g, 7.5).unwrap();
            inst.audit().unwrap();
        }
    }

    #[test]
    fn witness_matches_hand_computed_value() {
        let inst = build_missing_data(&showcase_graph(), 10.0_f64).unwrap();
        let b = Biclique::new(vec![1, 2], vec![1, 2]);
        let params = WitnessParams::new(2.0, WitnessSide::UseV).unwrap();
        let f = missing_data_witness(&inst, &b, &params).unwrap();
        let (u, v) = f.rank_one_vectors().unwrap();
        assert_eq!(u, vec![0.0, 1.0, 1.0, 0.1, 100.0]);
        assert_eq!(v, vec![0.0, 1.0, 1.0, 100.0, 0.1]);
        let obj = wlra_objective(&inst.m, &inst.w, &f).unwrap();
        assert!((obj - 3.02).abs() < 1e-10);
    }

    #[test]
    fn witness_k1_collapses_to_units() {
        let inst = build_missing_data(&showcase_graph(), 10.0).unwrap();
        let best = max_edge_biclique(&inst.source).unwrap();
        let params = WitnessParams::new(1.0, WitnessSide::UseV).unwrap();
        let f = missing_data_witness(&inst, &best.best, &params).unwrap();
        let (u, v) = f.rank_one_vectors().unwrap();
        for &x in u[3..].iter().chain(&v[3..]) {
            assert!(x == 1.0 || x == 10.0);
        }
        let obj = wlra_objective(&inst.m, &inst.w, &f).unwrap();
        let bound = best.optimum as f64 + 2.0 * inst.z() as f64;
        assert!(obj <= bound + 1e-12);
    }

    #[test]
    fn witness_identity_two_by_two_direct_value() {
        // both selector indices contribute one d^{2(1-K)} term here: the
        // k = (1,2) zero crosses B1 against row 1 of the biclique, and the
        // k = (2,1) zero crosses B2 against column 1
        let inst = build_missing_data(&identity_graph(2), 100.0).unwrap();
        let b = Biclique::new(vec![0], vec![0]);
        let params = WitnessParams::new(3.0, WitnessSide::UseV).unwrap();
        let f = missing_data_witness(&inst, &b, &params).unwrap();
        let obj = wlra_objective(&inst.m, &inst.w, &f).unwrap();
        let direct = 1.0 + 2.0 * 100.0f64.powi(-4);
        assert!((obj - direct).abs() <= 1e-12 * (1.0 + direct));
        // witness tail bound with Z = 2
        assert!(obj <= 1.0 + 4.0 * 100.0f64.powi(-4) + 1e-15);
    }

    #[test]
    fn witness_bound_and_monotonicity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..15 {
            let g = random_graph(&mut rng, 3);
            if g.zero_entries().is_empty() {
                continue;
            }
            let best = max_edge_biclique(&g).unwrap();
            for &d in &[2.0_f64, 10.0, 100.0] {
                let inst = build_missing_data(&g, d).unwrap();
                let p = best.optimum as f64;
                let z = inst.z() as f64;
                let mut previous = f64::INFINITY;
                for &k in &[1.0, 2.0, 5.0] {
                    let params = WitnessParams::new(k, WitnessSide::UseV).unwrap();
                    let f = missing_data_witness(&inst, &best.best, &params).unwrap();
                    let obj = wlra_objective(&inst.m, &inst.w, &f).unwrap();
                    let tail_bound = p + 2.0 * z * d.powf(2.0 * (1.0 - k));
                    assert!(
                        obj <= tail_bound + 1e-12 * (1.0 + tail_bound),
                        "witness tail bound failed"
                    );
                    assert!(
                        obj <= previous + 1e-12 * (1.0 + obj),
                        "K-monotonicity failed"
                    );
                    previous = obj;
                }
                // the symmetric variant obeys the same bound
                let params = WitnessParams::new(2.0, WitnessSide::UseU).unwrap();
                let f = missing_data_witness(&inst, &best.best, &params).unwrap();
                let obj = wlra_objective(&inst.m, &inst.w, &f).unwrap();
                let tail_bound = p + 2.0 * z * d.powf(-2.0);
                assert!(obj <= tail_bound + 1e-12 * (1.0 + tail_bound));
            }
        }
    }

    #[test]
    fn default_witness_k_meets_tail_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let g = random_graph(&mut rng, 3);
            if g.zero_entries().is_empty() {
                continue;
            }
            let inst = build_missing_data(&g, rng.gen_range(1.5_f64..2e4)).unwrap();
            let params = WitnessParams::default_for(&inst).unwrap();
            let tail = 2.0 * inst.z() as f64 * inst.d.powf(2.0 * (1.0 - params.k));
            assert!(tail <= 1e-9 * 1.0001, "tail {tail} exceeds budget");
        }
    }

    #[test]
    fn block_rank_r_examples() {
        let g = showcase_graph();
        let r1 = build_block_rank_r(&g, 1, 7.0).unwrap();
        let w1d = build_positive_weight(&g, 7.0).unwrap();
        assert_eq!(r1.m, w1d.m);
        assert_eq!(r1.w, w1d.w);

        let r2 = build_block_rank_r(&g, 2, 3.0).unwrap();
        r2.audit().unwrap();
        assert_eq!((r2.m.rows(), r2.m.cols()), (6, 6));
        let edge_count: f64 = r2.m.entries().iter().sum();
        assert_eq!(edge_count, 14.0);
        // off-diagonal blocks are zero with weight d
        assert_eq!(r2.m.get(0, 3), 0.0);
        assert_eq!(r2.w.get(0, 3), 3.0);
        assert_eq!(r2.m.get(4, 1), 0.0);
        assert_eq!(r2.w.get(4, 1), 3.0);

        assert!(matches!(
            build_block_rank_r(&g, 2000, 2.0),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn rank_one_weight_reduce_examples() {
        let m = Matrix::from_rows(vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let red = rank_one_weight_reduce(&m, &[1.0, 1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(red.scaled, m);
        let f = FactorPair::rank_one(vec![1.0, 2.0], vec![0.5, 0.25]).unwrap();
        assert_eq!(red.map_back(&f).unwrap(), f);

        let m = Matrix::from_rows(vec![vec![2.0]]).unwrap();
        let red = rank_one_weight_reduce(&m, &[4.0], &[9.0]).unwrap();
        assert_eq!(red.scaled.get(0, 0), 12.0);

        assert!(matches!(
            rank_one_weight_reduce(&m, &[0.0], &[9.0]),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn rank_one_weight_reduce_objective_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let m = Matrix::from_fn(3, 3, |_, _| rng.gen_range(-2.0..2.0));
        let s = [1.0, 4.0, 9.0];
        let t = [1.0, 1.0, 4.0];
        let red = rank_one_weight_reduce(&m, &s, &t).unwrap();
        let w = red.weights();
        for _ in 0..100 {
            let up: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let vp: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let fp = FactorPair::rank_one(up, vp).unwrap();
            let unweighted =
                wlra_objective(&red.scaled, &WeightMatrix::all_ones(3, 3), &fp).unwrap();
            let mapped = red.map_back(&fp).unwrap();
            let weighted = wlra_objective(&m, &w, &mapped).unwrap();
            assert!(
                (unweighted - weighted).abs() <= 1e-10 * (1.0 + unweighted.abs()),
                "objective identity violated"
            );
        }
    }

    #[test]
    fn weight_rescaling() {
        let inst = build_positive_weight(&identity_graph(2), 5.0).unwrap();
        let scaled = rescale_weights(&inst).unwrap();
        assert_eq!(scaled.w.matrix().entries(), &[0.2, 1.0, 1.0, 0.2]);
        assert!(scaled.rescaled);

        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let u: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let v: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let f = FactorPair::rank_one(u, v).unwrap();
            let before = wlra_objective(&inst.m, &inst.w, &f).unwrap();
            let after = wlra_objective(&scaled.m, &scaled.w, &f).unwrap();
            assert!((after - before / 5.0).abs() <= 1e-12 * (1.0 + before));
        }

        let noop =
            rescale_weights(&build_positive_weight(&identity_graph(2), 1.0).unwrap()).unwrap();
        assert_eq!(noop.w.matrix().entries(), &[1.0, 1.0, 1.0, 1.0]);

        let md = build_missing_data(&identity_graph(2), 4.0).unwrap();
        assert!(matches!(rescale_weights(&md), Err(Error::Parameter(_))));
    }

    #[test]
    fn data_rescaling() {
        let inst = build_missing_data(&showcase_graph(), 10.0).unwrap();
        let scaled = rescale_data(&inst).unwrap();
        // diagonal block becomes I_Z, binary block becomes 0.1 M_b
        assert_eq!(scaled.m.get(3, 3), 1.0);
        assert_eq!(scaled.m.get(4, 4), 1.0);
        assert_eq!(scaled.m.get(0, 0), 0.1);
        assert_eq!(scaled.m.get(0, 1), 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..100 {
            let u: Vec<f64> = (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let v: Vec<f64> = (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let before = wlra_objective(
                &inst.m,
                &inst.w,
                &FactorPair::rank_one(u.clone(), v.clone()).unwrap(),
            )
            .unwrap();
            let v_over_d: Vec<f64> = v.iter().map(|x| x / 10.0).collect();
            let after = wlra_objective(
                &scaled.m,
                &scaled.w,
                &FactorPair::rank_one(u, v_over_d).unwrap(),
            )
            .unwrap();
            assert!((after - before / 100.0).abs() <= 1e-12 * (1.0 + before));
        }

        let w1d = build_positive_weight(&identity_graph(2), 5.0).unwrap();
        assert!(matches!(rescale_data(&w1d), Err(Error::Parameter(_))));
    }

    #[test]
    fn penalty_identity_on_positive_weight_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..40 {
            let g = random_graph(&mut rng, 3);
            let d = rng.gen_range(1.0..1000.0);
            let inst = build_positive_weight(&g, d).unwrap();
            let u: Vec<f64> = (0..g.s()).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let v: Vec<f64> = (0..g.t()).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let f = FactorPair::rank_one(u.clone(), v.clone()).unwrap();
            let obj = wlra_objective(&inst.m, &inst.w, &f).unwrap();
            let mut penalty = 0.0;
            for i in 0..g.s() {
                for j in 0..g.t() {
                    let p = u[i] * v[j];
                    if g.has_edge(i, j) {
                        penalty += (1.0 - p) * (1.0 - p);
                    } else {
                        penalty += d * p * p;
                    }
                }
            }
            assert!((obj - penalty).abs() <= 1e-12 * (1.0 + penalty));
        }
    }

    #[test]
    fn instance_dir_round_trip() {
        let dir = std::env::temp_dir().join(format!("wlra-inst-{}", std::process::id()));

        let inst = build_missing_data(&showcase_graph(), 10.0).unwrap();
        write_instance_dir(&inst, &dir.join("md")).unwrap();
        let loaded: ReductionInstance<f64> = read_instance_dir(&dir.join("md")).unwrap();
        assert_eq!(loaded, inst);

        let inst = build_positive_weight(&showcase_graph(), 64.0).unwrap();
        write_instance_dir(&inst, &dir.join("w1d")).unwrap();
        let loaded: ReductionInstance<f64> = read_instance_dir(&dir.join("w1d")).unwrap();
        assert_eq!(loaded, inst);

        let m_text = fs::read_to_string(dir.join("md").join("M.txt")).unwrap();
        assert!(m_text.contains('?'));

        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn indicator_objective_equals_uncovered_edges() {
        let g = showcase_graph();
        let inst = build_positive_weight(&g, 7_529_536.0).unwrap();
        let best = max_edge_biclique(&g).unwrap();
        let obj = indicator_objective(&inst, &best.best).unwrap();
        assert_eq!(obj, 3.0);
    }
}
