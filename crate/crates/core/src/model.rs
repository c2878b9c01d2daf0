//! Generator and discriminator embedding tables with their connectivity
//! probabilities and closed-form gradients.
//!
//! Both modules score a node pair through the sigmoid of an inner product:
//! the generator tables give `G⁺(t|r) = σ(g_t·g_r)` and `G⁻ = 1 − G⁺`, the
//! discriminator gives `D⁺(v, r) = σ(d_v·d_r)` and `D⁻ = 1 − D⁺`.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{NodeId, Sign};
use crate::scalar::{dot, Scalar};

/// Dense `|V| × k` table; row `v` is the vector of node `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Scalar> EmbeddingTable<T> {
    pub fn zeros(num_nodes: usize, dim: usize) -> Self {
        EmbeddingTable { dim, data: vec![T::zero(); num_nodes * dim] }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::domain("embedding rows have unequal lengths"));
        }
        let data: Vec<T> = rows.into_iter().flatten().collect();
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("embedding entry".into()));
        }
        Ok(EmbeddingTable { dim, data })
    }

    /// Entries i.i.d. uniform on `[-0.5/k, 0.5/k]`.
    pub fn init_uniform<R: Rng + ?Sized>(num_nodes: usize, dim: usize, rng: &mut R) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("embedding dimension must be at least 1"));
        }
        let half = 0.5 / dim as f64;
        let data = (0..num_nodes * dim).map(|_| T::from_f64_lossy(rng.random_range(-half..=half))).collect();
        Ok(EmbeddingTable { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_rows(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn row(&self, v: NodeId) -> &[T] {
        &self.data[v * self.dim..(v + 1) * self.dim]
    }

    pub fn row_mut(&mut self, v: NodeId) -> &mut [T] {
        &mut self.data[v * self.dim..(v + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks(self.dim.max(1))
    }

    pub fn inner(&self, u: NodeId, v: NodeId) -> T {
        dot(self.row(u), self.row(v))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn cast<U: Scalar>(&self) -> EmbeddingTable<U> {
        EmbeddingTable { dim: self.dim, data: self.data.iter().map(|x| U::from_f64_lossy(x.as_f64())).collect() }
    }

    /// Text export: `num_nodes k`, then `node x1 ... xk` per row. Values are
    /// written with shortest round-trip formatting, so re-reading is exact.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {}", self.num_rows(), self.dim)?;
        for (v, row) in self.rows().enumerate() {
            write!(out, "{v}")?;
            for x in row {
                write!(out, " {x:?}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::Parse { line: 1, msg: "missing header".into() })?;
        let header = header?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|f| f.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse { line: 1, msg: format!("bad header {header:?}") })?;
        let &[n, k] = dims.as_slice() else {
            return Err(Error::Parse { line: 1, msg: format!("bad header {header:?}") });
        };
        let mut table = EmbeddingTable::zeros(n, k);
        let mut filled = vec![false; n];
        for (idx, line) in lines {
            let line = line?;
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let bad = |msg: String| Error::Parse { line: lineno, msg };
            let v: usize = fields.next().and_then(|f| f.parse().ok()).ok_or_else(|| bad("bad node id".into()))?;
            if v >= n {
                return Err(bad(format!("node {v} out of range")));
            }
            let row = table.row_mut(v);
            let mut count = 0;
            for (slot, f) in row.iter_mut().zip(fields.by_ref()) {
                let x: f64 = f.parse().map_err(|_| bad(format!("bad value {f:?}")))?;
                *slot = T::from_f64_lossy(x);
                count += 1;
            }
            if count != k || fields.next().is_some() {
                return Err(bad(format!("expected {k} values")));
            }
            filled[v] = true;
        }
        if let Some(missing) = filled.iter().position(|f| !f) {
            return Err(Error::Parse { line: 0, msg: format!("row for node {missing} missing") });
        }
        Ok(table)
    }
}

/// `G⁺(t | r) = σ(g_t·g_r)`.
pub fn gen_prob_pos<T: Scalar>(theta_g: &EmbeddingTable<T>, r: NodeId, t: NodeId) -> T {
    theta_g.inner(t, r).sigmoid()
}

/// `G⁻(t | r) = 1 − σ(g_t·g_r)`.
pub fn gen_prob_neg<T: Scalar>(theta_g: &EmbeddingTable<T>, r: NodeId, t: NodeId) -> T {
    (-theta_g.inner(t, r)).sigmoid()
}

/// `D⁺(v, r) = σ(d_v·d_r)`.
pub fn disc_prob_pos<T: Scalar>(theta_d: &EmbeddingTable<T>, r: NodeId, v: NodeId) -> T {
    theta_d.inner(v, r).sigmoid()
}

/// `D⁻(v, r) = 1 − σ(d_v·d_r)`.
pub fn disc_prob_neg<T: Scalar>(theta_d: &EmbeddingTable<T>, v: NodeId, r: NodeId) -> T {
    (-theta_d.inner(v, r)).sigmoid()
}

/// Role of a node pair in the discriminator objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeCase {
    RealPos,
    FakePos,
    RealNeg,
    FakeNeg,
}

impl EdgeCase {
    pub fn sign(self) -> Sign {
        match self {
            EdgeCase::RealPos | EdgeCase::FakePos => Sign::Positive,
            EdgeCase::RealNeg | EdgeCase::FakeNeg => Sign::Negative,
        }
    }

    pub fn is_fake(self) -> bool {
        matches!(self, EdgeCase::FakePos | EdgeCase::FakeNeg)
    }

    pub fn real(sign: Sign) -> Self {
        match sign {
            Sign::Positive => EdgeCase::RealPos,
            Sign::Negative => EdgeCase::RealNeg,
        }
    }

    pub fn fake(sign: Sign) -> Self {
        match sign {
            Sign::Positive => EdgeCase::FakePos,
            Sign::Negative => EdgeCase::FakeNeg,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            EdgeCase::RealPos => "real-pos",
            EdgeCase::FakePos => "fake-pos",
            EdgeCase::RealNeg => "real-neg",
            EdgeCase::FakeNeg => "fake-neg",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "real-pos" => Ok(EdgeCase::RealPos),
            "fake-pos" => Ok(EdgeCase::FakePos),
            "real-neg" => Ok(EdgeCase::RealNeg),
            "fake-neg" => Ok(EdgeCase::FakeNeg),
            other => Err(Error::domain(format!("unknown edge case {other:?}"))),
        }
    }

    /// Scalar `c` with `∂(log-term)/∂d_i = c · d_j` at inner product `x`.
    pub fn disc_coefficient<T: Scalar>(self, x: T) -> T {
        match self {
            EdgeCase::RealPos | EdgeCase::FakeNeg => T::one() - x.sigmoid(),
            EdgeCase::FakePos | EdgeCase::RealNeg => -x.sigmoid(),
        }
    }

    /// The discriminator log-term this case contributes to the joint loss.
    pub fn disc_log_term<T: Scalar>(self, x: T) -> T {
        match self {
            // log D⁺ and log(1 − D⁻)
            EdgeCase::RealPos | EdgeCase::FakeNeg => x.ln_sigmoid(),
            // log(1 − D⁺) and log D⁻
            EdgeCase::FakePos | EdgeCase::RealNeg => (-x).ln_sigmoid(),
        }
    }
}

/// One entry of a training batch: the pair `(i, j)` and its role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TaggedEdge {
    pub i: NodeId,
    pub j: NodeId,
    pub case: EdgeCase,
}

impl TaggedEdge {
    pub fn new(i: NodeId, j: NodeId, case: EdgeCase) -> Self {
        TaggedEdge { i, j, case }
    }
}

pub type EdgeBatch = [TaggedEdge];

/// Gradient of the `case` log-term with respect to `d_i`.
pub fn disc_grad<T: Scalar>(case: EdgeCase, theta_d: &EmbeddingTable<T>, i: NodeId, j: NodeId) -> Vec<T> {
    let c = case.disc_coefficient(theta_d.inner(i, j));
    theta_d.row(j).iter().map(|&x| c * x).collect()
}

/// Row-sparse gradient; rows are kept in ascending node order so reductions
/// are deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGrad<T> {
    dim: usize,
    rows: BTreeMap<NodeId, Vec<T>>,
}

impl<T: Scalar> SparseGrad<T> {
    pub fn new(dim: usize) -> Self {
        SparseGrad { dim, rows: BTreeMap::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `row(v) += scale · x`.
    pub fn add_scaled(&mut self, v: NodeId, scale: T, x: &[T]) {
        let dim = self.dim;
        let row = self.rows.entry(v).or_insert_with(|| vec![T::zero(); dim]);
        for (r, &xi) in row.iter_mut().zip(x) {
            *r = *r + scale * xi;
        }
    }

    pub fn row(&self, v: NodeId) -> Option<&[T]> {
        self.rows.get(&v).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &[T])> {
        self.rows.iter().map(|(&v, r)| (v, r.as_slice()))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (NodeId, &mut Vec<T>)> {
        self.rows.iter_mut().map(|(&v, r)| (v, r))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.rows.values().flatten().all(|x| x.is_finite())
    }
}

/// Per-node discriminator gradient of a batch: every entry `(i, j)`
/// contributes its log-term gradient to both `d_i` and `d_j`.
pub fn disc_batch_grad<T: Scalar>(batch: &EdgeBatch, theta_d: &EmbeddingTable<T>) -> SparseGrad<T> {
    let mut grad = SparseGrad::new(theta_d.dim());
    for e in batch {
        let c = e.case.disc_coefficient(theta_d.inner(e.i, e.j));
        grad.add_scaled(e.i, c, theta_d.row(e.j));
        grad.add_scaled(e.j, c, theta_d.row(e.i));
    }
    grad
}

/// Policy-gradient estimate for the generator over fake pairs `(r, t)`:
/// `∇ log G±(t|r) · log(1 − D±(t, r))`, applied to both `g_r` and `g_t`.
pub fn gen_grad<T: Scalar>(
    batch: &EdgeBatch,
    theta_g: &EmbeddingTable<T>,
    theta_d: &EmbeddingTable<T>,
) -> Result<SparseGrad<T>> {
    let mut grad = SparseGrad::new(theta_g.dim());
    for e in batch {
        let (r, t) = (e.i, e.j);
        let x_g = theta_g.inner(t, r);
        let x_d = theta_d.inner(t, r);
        // d log G / d(x_g), and the discriminator reward
        let (score, reward) = match e.case {
            EdgeCase::FakePos => (T::one() - x_g.sigmoid(), (-x_d).ln_sigmoid()),
            EdgeCase::FakeNeg => (-x_g.sigmoid(), x_d.ln_sigmoid()),
            other => return Err(Error::domain(format!("generator batches take fake pairs only, got {}", other.tag()))),
        };
        let c = score * reward;
        grad.add_scaled(r, c, theta_g.row(t));
        grad.add_scaled(t, c, theta_g.row(r));
    }
    Ok(grad)
}

/// The generator objective whose gradient [`gen_grad`] estimates, with the
/// rewards held fixed: `Σ log G±(t|r) · log(1 − D±(t, r))`.
pub fn gen_surrogate<T: Scalar>(batch: &EdgeBatch, theta_g: &EmbeddingTable<T>, theta_d: &EmbeddingTable<T>) -> T {
    batch
        .iter()
        .map(|e| {
            let x_g = theta_g.inner(e.j, e.i);
            let x_d = theta_d.inner(e.j, e.i);
            match e.case {
                EdgeCase::FakePos => x_g.ln_sigmoid() * (-x_d).ln_sigmoid(),
                _ => (-x_g).ln_sigmoid() * x_d.ln_sigmoid(),
            }
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Ascend,
    Descend,
}

/// `row(v) ±= lr · grad(v)` for every row of `grad`. The table is left
/// untouched if any gradient entry is non-finite.
pub fn apply_update<T: Scalar>(
    table: &mut EmbeddingTable<T>,
    grad: &SparseGrad<T>,
    learning_rate: T,
    direction: Direction,
) -> Result<()> {
    if grad.dim() != table.dim() {
        return Err(Error::domain("gradient and table dimensions differ"));
    }
    if let Some((v, _)) = grad.iter().find(|(_, r)| r.iter().any(|x| !x.is_finite())) {
        return Err(Error::NonFinite(format!("gradient row {v}; update rejected")));
    }
    if let Some((v, _)) = grad.iter().find(|&(v, _)| v >= table.num_rows()) {
        return Err(Error::domain(format!("gradient row {v} out of range")));
    }
    let step = match direction {
        Direction::Ascend => learning_rate,
        Direction::Descend => -learning_rate,
    };
    for (v, g) in grad.iter() {
        for (x, &gi) in table.row_mut(v).iter_mut().zip(g) {
            *x = *x + step * gi;
        }
    }
    Ok(())
}

/// Dense counterpart of [`apply_update`].
pub fn apply_dense<T: Scalar>(
    table: &mut EmbeddingTable<T>,
    grad: &EmbeddingTable<T>,
    learning_rate: T,
    direction: Direction,
) -> Result<()> {
    if grad.dim() != table.dim() || grad.num_rows() != table.num_rows() {
        return Err(Error::domain("gradient and table shapes differ"));
    }
    if !grad.is_finite() {
        return Err(Error::NonFinite("dense gradient; update rejected".into()));
    }
    let step = match direction {
        Direction::Ascend => learning_rate,
        Direction::Descend => -learning_rate,
    };
    for (x, &g) in table.as_mut_slice().iter_mut().zip(grad.as_slice()) {
        *x = *x + step * g;
    }
    Ok(())
}
