//! Tensor-ring decomposition of quaternion tensors.
//!
//! An order-N tensor is represented by N order-3 cores, core `n` of shape
//! `r_n × I_n × r_{n+1}` with the wrap-around convention `r_{N+1} = r₁`.
//! Entries are recovered by a trace over a cycle of lateral-slice products:
//!
//! ```text
//! T(i₁,…,i_N) = Tr{ Z₁(i₁) ·L Z₂(i₂) ·L … ·L Z_N(i_N) }
//! ```
//!
//! where `Z_n(i)` is the `r_n × r_{n+1}` lateral slice of core `n`. Cores are
//! chained by connection products that fuse neighboring tensor modes, and the
//! whole format is learned from a dense tensor by a sequence of truncated
//! quaternion SVDs ([`ring_svd`]).

use std::fs;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::qmat::{QuaternionMatrix, TruncationRule};
use crate::qtensor::QuaternionTensor;
use crate::quat::Quaternion;

/// Which run of consecutive cores a subchain covers, relative to a split
/// position `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subchain {
    /// Cores `1..k` (exclusive).
    Before,
    /// Cores `1..=k`.
    UpTo,
    /// Cores `k+1..=N`.
    After,
    /// Cores `k..=N`.
    From,
}

/// A quaternion tensor in ring format.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorRing {
    cores: Vec<QuaternionTensor>,
}

impl TensorRing {
    /// Validates core shapes: all order 3, adjacent ranks chained, and the
    /// last rank wrapping around to the first.
    pub fn new(cores: Vec<QuaternionTensor>) -> Result<Self> {
        if cores.is_empty() {
            return Err(Error::Argument(
                "a tensor ring needs at least one core".into(),
            ));
        }
        for (n, c) in cores.iter().enumerate() {
            if c.order() != 3 {
                return Err(Error::Shape(format!(
                    "core {} has order {}, expected 3",
                    n + 1,
                    c.order()
                )));
            }
        }
        for n in 0..cores.len() {
            let next = (n + 1) % cores.len();
            if cores[n].dims()[2] != cores[next].dims()[0] {
                return Err(Error::Shape(format!(
                    "core {} trailing rank {} does not match core {} leading rank {}",
                    n + 1,
                    cores[n].dims()[2],
                    next + 1,
                    cores[next].dims()[0]
                )));
            }
        }
        Ok(Self { cores })
    }

    /// Ring with uniform random cores of the given mode sizes and ranks
    /// (`ranks[n]` is the leading rank of core `n`).
    pub fn random<R: Rng + ?Sized>(dims: &[usize], ranks: &[usize], rng: &mut R) -> Result<Self> {
        if dims.len() != ranks.len() {
            return Err(Error::Argument(format!(
                "{} mode sizes but {} ranks",
                dims.len(),
                ranks.len()
            )));
        }
        let n = dims.len();
        let cores = (0..n)
            .map(|i| QuaternionTensor::random(&[ranks[i], dims[i], ranks[(i + 1) % n]], rng))
            .collect();
        Self::new(cores)
    }

    pub fn order(&self) -> usize {
        self.cores.len()
    }

    pub fn cores(&self) -> &[QuaternionTensor] {
        &self.cores
    }

    /// Mode sizes `(I₁,…,I_N)` of the represented tensor.
    pub fn dims(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.dims()[1]).collect()
    }

    /// Ranks `(r₁,…,r_N)`; the trailing rank of the last core equals `r₁`.
    pub fn ranks(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.dims()[0]).collect()
    }

    /// Single entry at zero-based `indices`, evaluated by multiplying the
    /// lateral slices around the ring and taking the trace.
    pub fn element(&self, indices: &[usize]) -> Result<Quaternion> {
        if indices.len() != self.cores.len() {
            return Err(Error::Argument(format!(
                "{} indices for an order-{} ring",
                indices.len(),
                self.cores.len()
            )));
        }
        for (n, (&i, c)) in indices.iter().zip(&self.cores).enumerate() {
            if i >= c.dims()[1] {
                return Err(Error::Argument(format!(
                    "index {i} out of range for mode {} of size {}",
                    n + 1,
                    c.dims()[1]
                )));
            }
        }
        let mut prod = lateral_slice(&self.cores[0], indices[0]);
        for (c, &i) in self.cores[1..].iter().zip(&indices[1..]) {
            prod = prod.mul_left(&lateral_slice(c, i))?;
        }
        let mut tr = Quaternion::ZERO;
        for s in 0..prod.rows() {
            tr += prod.at(s, s);
        }
        Ok(tr)
    }

    /// Left-connected product of a consecutive run of cores.
    pub fn subchain(&self, kind: Subchain, k: usize) -> Result<QuaternionTensor> {
        let n = self.cores.len();
        if k < 1 || k > n {
            return Err(Error::Argument(format!(
                "split position {k} out of range 1..={n}"
            )));
        }
        let range = match kind {
            Subchain::Before => 0..k - 1,
            Subchain::UpTo => 0..k,
            Subchain::After => k..n,
            Subchain::From => k - 1..n,
        };
        if range.is_empty() {
            return Err(Error::Argument("subchain selects no cores".into()));
        }
        let mut acc = self.cores[range.start].clone();
        for m in range.start + 1..range.end {
            acc = left_connect(&acc, &self.cores[m])?;
        }
        Ok(acc)
    }

    /// Dense tensor represented by the ring.
    pub fn reconstruct(&self) -> Result<QuaternionTensor> {
        let chain = self.subchain(Subchain::From, 1)?;
        Ok(QuaternionTensor::new(self.dims(), trace_map(&chain)))
    }

    /// Dense tensor of the ring with its cores cyclically shifted so core
    /// `n` comes first; equals the cyclic permutation of
    /// [`reconstruct`](Self::reconstruct) starting at mode `n`. The two core
    /// groups around the cut are joined with the right product.
    pub fn reconstruct_permuted(&self, n: usize) -> Result<QuaternionTensor> {
        let count = self.cores.len();
        if n < 1 || n > count {
            return Err(Error::Argument(format!(
                "mode {n} out of range 1..={count}"
            )));
        }
        if n == 1 {
            return self.reconstruct();
        }
        let head = self.subchain(Subchain::From, n)?;
        let tail = self.subchain(Subchain::Before, n)?;
        let chain = right_connect(&head, &tail)?;
        let dims: Vec<usize> = (0..count)
            .map(|t| self.cores[(n - 1 + t) % count].dims()[1])
            .collect();
        Ok(QuaternionTensor::new(dims, trace_map(&chain)))
    }

    /// `‖T − reconstruct‖_F / ‖T‖_F`.
    pub fn relative_error(&self, reference: &QuaternionTensor) -> Result<f64> {
        let den = reference.frobenius_norm();
        if den == 0.0 {
            return Err(Error::Domain("relative error against a zero tensor".into()));
        }
        Ok(self.reconstruct()?.sub(reference)?.frobenius_norm() / den)
    }

    /// Writes one QTNS file per core plus a `ring.txt` manifest into `dir`
    /// (created if missing).
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let ranks: Vec<String> = self.ranks().iter().map(|r| r.to_string()).collect();
        let manifest = format!("order={}\nranks={}\n", self.cores.len(), ranks.join(","));
        fs::write(dir.join("ring.txt"), manifest)?;
        for (n, core) in self.cores.iter().enumerate() {
            core.save(&dir.join(format!("core_{:02}.qtns", n + 1)))?;
        }
        Ok(())
    }

    /// Reads a ring written by [`save`](Self::save).
    pub fn load(dir: &Path) -> Result<Self> {
        let manifest = fs::read_to_string(dir.join("ring.txt"))?;
        let mut order = None;
        let mut ranks: Option<Vec<usize>> = None;
        for line in manifest.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("malformed manifest line: {line}")))?;
            match key.trim() {
                "order" => {
                    order = Some(
                        value
                            .trim()
                            .parse::<usize>()
                            .map_err(|_| Error::Format(format!("invalid order value: {value}")))?,
                    )
                }
                "ranks" => {
                    let parsed: std::result::Result<Vec<usize>, _> = value
                        .split(',')
                        .map(|v| v.trim().parse::<usize>())
                        .collect();
                    ranks = Some(
                        parsed
                            .map_err(|_| Error::Format(format!("invalid ranks value: {value}")))?,
                    );
                }
                other => {
                    return Err(Error::Format(format!("unknown manifest key: {other}")));
                }
            }
        }
        let order = order.ok_or_else(|| Error::Format("manifest missing order".into()))?;
        let ranks = ranks.ok_or_else(|| Error::Format("manifest missing ranks".into()))?;
        if ranks.len() != order {
            return Err(Error::Format(format!(
                "manifest lists {} ranks for order {order}",
                ranks.len()
            )));
        }
        let mut cores = Vec::with_capacity(order);
        for n in 0..order {
            cores.push(QuaternionTensor::load(
                &dir.join(format!("core_{:02}.qtns", n + 1)),
            )?);
        }
        let ring = Self::new(cores)?;
        if ring.ranks() != ranks {
            return Err(Error::Format(
                "manifest ranks do not match core shapes".into(),
            ));
        }
        Ok(ring)
    }
}

/// `r_a × I_a × r_b` lateral slice at mode index `i` (zero-based), as an
/// `r_a × r_b` matrix.
fn lateral_slice(core: &QuaternionTensor, i: usize) -> QuaternionMatrix {
    let d = core.dims();
    QuaternionMatrix::from_fn(d[0], d[2], |a, b| core.at(&[a, i, b]))
}

/// Traces the `r × r` slices of an `r × L × r` chain tensor into a length-L
/// entry buffer.
fn trace_map(chain: &QuaternionTensor) -> Vec<Quaternion> {
    let d = chain.dims();
    let (r, l) = (d[0], d[1]);
    debug_assert_eq!(d[2], r);
    let mut out = vec![Quaternion::ZERO; l];
    for (t, slot) in out.iter_mut().enumerate() {
        let mut tr = Quaternion::ZERO;
        for s in 0..r {
            tr += chain.at(&[s, t, s]);
        }
        *slot = tr;
    }
    out
}

fn connection_shapes(a: &QuaternionTensor, b: &QuaternionTensor) -> Result<()> {
    if a.order() != 3 || b.order() != 3 {
        return Err(Error::Shape(
            "connection products need order-3 tensors".into(),
        ));
    }
    if a.dims()[2] != b.dims()[0] {
        return Err(Error::Shape(format!(
            "chain mismatch: {} vs {}",
            a.dims()[2],
            b.dims()[0]
        )));
    }
    Ok(())
}

/// Left connection product: fuses the middle modes so that
/// `(A ∘ B)(:, (i_a,i_b), :) = A(i_a) ·L B(i_b)`.
pub fn left_connect(a: &QuaternionTensor, b: &QuaternionTensor) -> Result<QuaternionTensor> {
    connection_shapes(a, b)?;
    let (da, db) = (a.dims().to_vec(), b.dims().to_vec());
    let m = a.unfold(2)?.mul_left(&b.unfold(1)?)?;
    Ok(QuaternionTensor::new(
        vec![da[0], da[1] * db[1], db[2]],
        m.into_data(),
    ))
}

/// Right connection product: as [`left_connect`] with the right matrix
/// product joining the factors.
pub fn right_connect(a: &QuaternionTensor, b: &QuaternionTensor) -> Result<QuaternionTensor> {
    connection_shapes(a, b)?;
    let (da, db) = (a.dims().to_vec(), b.dims().to_vec());
    let m = a.unfold(2)?.mul_right(&b.unfold(1)?)?;
    Ok(QuaternionTensor::new(
        vec![da[0], da[1] * db[1], db[2]],
        m.into_data(),
    ))
}

/// Splits `r` into a factor pair `(r₁, r₂)` with `r₁·r₂ = r`, `r₁ ≤ r₂`, and
/// `r₂ − r₁` minimal; primes split as `(1, r)`.
fn balanced_split(r: usize) -> (usize, usize) {
    let mut a = (r as f64).sqrt().floor() as usize;
    while a > 1 && r % a != 0 {
        a -= 1;
    }
    (a.max(1), r / a.max(1))
}

/// Learns a tensor ring from a dense tensor by sequential truncated SVDs,
/// with a per-step threshold budget targeting
/// `‖T − reconstruct‖_F ≤ eps·‖T‖_F`.
///
/// The first unfolding is truncated at `√2·eps·‖T‖_F/√N` and its rank split
/// into the two ranks adjacent to the cut; every later step is truncated at
/// `eps·‖T‖_F/√N`.
pub fn ring_svd(t: &QuaternionTensor, eps: f64) -> Result<TensorRing> {
    ring_svd_with(t, eps, TruncationRule::default())
}

/// [`ring_svd`] with an explicit truncation rule.
pub fn ring_svd_with(t: &QuaternionTensor, eps: f64, rule: TruncationRule) -> Result<TensorRing> {
    let n = t.order();
    if n < 2 {
        return Err(Error::Argument(
            "ring learning needs an order of at least 2".into(),
        ));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::Argument(format!(
            "tolerance {eps} must be positive and finite"
        )));
    }
    let dims = t.dims().to_vec();
    let norm = t.frobenius_norm();
    if norm == 0.0 {
        let cores = dims
            .iter()
            .map(|&d| QuaternionTensor::zeros(&[1, d, 1]))
            .collect();
        return TensorRing::new(cores);
    }

    let budget = eps * norm / (n as f64).sqrt();
    let delta1 = std::f64::consts::SQRT_2 * budget;

    let (f, r12) = t.unfold(1)?.truncated_qsvd_with(delta1, rule)?;
    let (r1, r2) = balanced_split(r12);
    let rest_of_first = f.sigma_vh();

    let mut cores = Vec::with_capacity(n);
    let z1 = QuaternionTensor::new(vec![dims[0], r1, r2], f.u.into_data()).permute(&[2, 1, 3])?;
    cores.push(z1);

    // Remaining factor, kept as a buffer whose leading mode is the rank next
    // to the cut and whose trailing mode is r₁, ready for the next split.
    let mut tail_dims: Vec<usize> = Vec::with_capacity(n + 1);
    tail_dims.push(r1);
    tail_dims.push(r2);
    tail_dims.extend_from_slice(&dims[1..]);
    let tail = QuaternionTensor::new(tail_dims, rest_of_first.into_data());
    let order: Vec<usize> = (0..tail.order())
        .map(|m| (m + 1) % tail.order() + 1)
        .collect();
    let mut tail = tail.permute(&order)?;
    let mut r_lead = r2;

    for &mode in &dims[1..n - 1] {
        let rest: usize = tail.len() / (r_lead * mode);
        let m = QuaternionMatrix::new(r_lead * mode, rest, tail.into_data());
        let (f, r_next) = m.truncated_qsvd_with(budget, rule)?;
        let remainder = f.sigma_vh();
        cores.push(QuaternionTensor::new(
            vec![r_lead, mode, r_next],
            f.u.into_data(),
        ));
        tail = QuaternionTensor::new(vec![r_next, rest], remainder.into_data());
        r_lead = r_next;
    }

    cores.push(QuaternionTensor::new(
        vec![r_lead, dims[n - 1], r1],
        tail.into_data(),
    ));
    TensorRing::new(cores)
}
