//! Dense order-N quaternion tensors and their unfoldings.
//!
//! Storage is column-major (first index fastest): the linear position of the
//! one-based entry `(i₁,…,i_N)` is `multi_index((i₁,…,i_N)) − 1`. All mode
//! numbers at the API boundary are one-based to match the standard tensor
//! notation; element buffers use zero-based indices.
//!
//! Four unfolding schemes are provided, differing only in how the modes are
//! split and ordered between the row and the column index:
//!
//! * `unfold(k)`: rows `(i₁,…,i_k)`, columns `(i_{k+1},…,i_N)`; for
//!   column-major storage this is a metadata-only reshape.
//! * `mode_unfold(k)`: rows `i_k`, columns `(i_{k+1},…,i_N,i₁,…,i_{k−1})`.
//! * `classical_unfold(k)`: rows `i_k`, columns `(i₁,…,i_{k−1},i_{k+1},…,i_N)`.
//! * `circ_unfold(k,l)`: rows over `l` cyclically consecutive modes starting
//!   at `k`, columns over the remaining `N−l` modes continuing the cycle.
//!
//! Every unfolding has an exact-inverse fold built from the same index maps.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read as IoRead, Write as IoWrite};
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::qmat::QuaternionMatrix;
use crate::quat::Quaternion;

const QTNS_MAGIC: &[u8; 4] = b"QTNS";
const QTNS_VERSION: u32 = 1;

/// Dense quaternion tensor, column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct QuaternionTensor {
    dims: Vec<usize>,
    data: Vec<Quaternion>,
}

/// One-based multi-index value `i₁ + Σ_{n>1} (i_n − 1)·∏_{m<n} I_m`.
pub fn multi_index(indices: &[usize], dims: &[usize]) -> Result<usize> {
    if indices.len() != dims.len() {
        return Err(Error::Argument(format!(
            "index tuple of length {} does not match order {}",
            indices.len(),
            dims.len()
        )));
    }
    let mut t = 1;
    let mut stride = 1;
    for (n, (&i, &d)) in indices.iter().zip(dims).enumerate() {
        if i < 1 || i > d {
            return Err(Error::Argument(format!(
                "index {i} out of range 1..={d} in mode {}",
                n + 1
            )));
        }
        t += (i - 1) * stride;
        stride *= d;
    }
    Ok(t)
}

fn checked_len(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() {
        return Err(Error::Argument("tensor order must be at least 1".into()));
    }
    let mut len = 1usize;
    for &d in dims {
        if d == 0 {
            return Err(Error::Argument("tensor dimensions must be positive".into()));
        }
        len = len
            .checked_mul(d)
            .ok_or_else(|| Error::Argument("tensor size overflows".into()))?;
    }
    Ok(len)
}

impl QuaternionTensor {
    pub fn new(dims: Vec<usize>, data: Vec<Quaternion>) -> Self {
        let len = checked_len(&dims).expect("tensor dimensions must be positive");
        assert_eq!(data.len(), len, "buffer does not match dimensions");
        Self { dims, data }
    }

    pub fn zeros(dims: &[usize]) -> Self {
        let len = checked_len(dims).expect("tensor dimensions must be positive");
        Self {
            dims: dims.to_vec(),
            data: vec![Quaternion::ZERO; len],
        }
    }

    /// Tensor with components drawn uniformly from `[-1, 1)`.
    pub fn random<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Self {
        let mut t = Self::zeros(dims);
        for q in &mut t.data {
            *q = Quaternion::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
        }
        t
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.dims.len()
    }

    #[inline]
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[Quaternion] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [Quaternion] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Quaternion> {
        self.data
    }

    /// Element access with zero-based indices.
    pub fn at(&self, indices: &[usize]) -> Quaternion {
        self.data[self.linear(indices)]
    }

    /// Element assignment with zero-based indices.
    pub fn set(&mut self, indices: &[usize], v: Quaternion) {
        let t = self.linear(indices);
        self.data[t] = v;
    }

    fn linear(&self, indices: &[usize]) -> usize {
        debug_assert_eq!(indices.len(), self.dims.len());
        let mut t = 0;
        let mut stride = 1;
        for (&i, &d) in indices.iter().zip(&self.dims) {
            debug_assert!(i < d);
            t += i * stride;
            stride *= d;
        }
        t
    }

    /// Same buffer under new dimensions; the total size must match.
    pub fn reshape(&self, dims: &[usize]) -> Result<Self> {
        let len = checked_len(dims)?;
        if len != self.data.len() {
            return Err(Error::Shape(format!(
                "cannot reshape {} elements into {dims:?}",
                self.data.len()
            )));
        }
        Ok(Self {
            dims: dims.to_vec(),
            data: self.data.clone(),
        })
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.check_same_dims(rhs)?;
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| *a + *b)
            .collect();
        Ok(Self {
            dims: self.dims.clone(),
            data,
        })
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.check_same_dims(rhs)?;
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| *a - *b)
            .collect();
        Ok(Self {
            dims: self.dims.clone(),
            data,
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        let data = self.data.iter().map(|q| q.scale(s)).collect();
        Self {
            dims: self.dims.clone(),
            data,
        }
    }

    fn check_same_dims(&self, rhs: &Self) -> Result<()> {
        if self.dims != rhs.dims {
            return Err(Error::Shape(format!(
                "dimension mismatch: {:?} vs {:?}",
                self.dims, rhs.dims
            )));
        }
        Ok(())
    }

    /// `⟨X,Y⟩ = Σ conj(x)·y` over all entries.
    pub fn inner_product(&self, rhs: &Self) -> Result<Quaternion> {
        self.check_same_dims(rhs)?;
        let mut acc = Quaternion::ZERO;
        for (a, b) in self.data.iter().zip(&rhs.data) {
            acc.accum_mul(&a.conj(), b);
        }
        Ok(acc)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data
            .iter()
            .map(Quaternion::norm_sqr)
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs_diff(&self, rhs: &Self) -> Result<f64> {
        self.check_same_dims(rhs)?;
        Ok(self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max))
    }

    /// `‖self − reference‖_F / ‖reference‖_F`.
    pub fn relative_error(&self, reference: &Self) -> Result<f64> {
        let diff = self.sub(reference)?.frobenius_norm();
        let den = reference.frobenius_norm();
        if den == 0.0 {
            return Ok(if diff == 0.0 { 0.0 } else { f64::INFINITY });
        }
        Ok(diff / den)
    }

    /// Largest imaginary-component magnitude over all entries.
    pub fn max_imag(&self) -> f64 {
        self.data
            .iter()
            .map(|q| q.x.abs().max(q.y.abs()).max(q.z.abs()))
            .fold(0.0, f64::max)
    }

    fn check_mode(&self, k: usize) -> Result<()> {
        if k < 1 || k > self.dims.len() {
            return Err(Error::Argument(format!(
                "mode {k} out of range 1..={}",
                self.dims.len()
            )));
        }
        Ok(())
    }

    /// The `⟨k⟩` unfolding: rows over modes `1..=k`, columns over the rest,
    /// both in natural order. A metadata reshape for column-major storage.
    pub fn unfold(&self, k: usize) -> Result<QuaternionMatrix> {
        if k < 1 || k >= self.dims.len() {
            return Err(Error::Argument(format!(
                "unfolding position {k} out of range 1..{}",
                self.dims.len()
            )));
        }
        let rows: usize = self.dims[..k].iter().product();
        let cols: usize = self.dims[k..].iter().product();
        Ok(QuaternionMatrix::new(rows, cols, self.data.clone()))
    }

    /// Inverse of [`unfold`](Self::unfold).
    pub fn fold(mat: &QuaternionMatrix, k: usize, dims: &[usize]) -> Result<Self> {
        if k < 1 || k >= dims.len() {
            return Err(Error::Argument(format!(
                "unfolding position {k} out of range 1..{}",
                dims.len()
            )));
        }
        let rows: usize = dims[..k].iter().product();
        let cols: usize = dims[k..].iter().product();
        if mat.rows() != rows || mat.cols() != cols {
            return Err(Error::Shape(format!(
                "matrix {}x{} does not fold into {dims:?} at position {k}",
                mat.rows(),
                mat.cols()
            )));
        }
        Ok(Self::new(dims.to_vec(), mat.data().to_vec()))
    }

    /// Mode lists (zero-based) for the mode-k unfolding: rows `i_k`, columns
    /// cycling through `k+1,…,N,1,…,k−1`.
    fn mode_split(&self, k: usize) -> (Vec<usize>, Vec<usize>) {
        let n = self.dims.len();
        let rows = vec![k - 1];
        let cols = (1..n).map(|t| (k - 1 + t) % n).collect();
        (rows, cols)
    }

    /// The mode-k unfolding: `I_k × ∏_{n≠k} I_n` with columns indexed by
    /// `(i_{k+1},…,i_N,i₁,…,i_{k−1})`.
    pub fn mode_unfold(&self, k: usize) -> Result<QuaternionMatrix> {
        self.check_mode(k)?;
        let (r, c) = self.mode_split(k);
        Ok(self.gather_unfold(&r, &c))
    }

    /// Inverse of [`mode_unfold`](Self::mode_unfold).
    pub fn mode_fold(mat: &QuaternionMatrix, k: usize, dims: &[usize]) -> Result<Self> {
        let probe = Self {
            dims: dims.to_vec(),
            data: Vec::new(),
        };
        probe.check_mode(k)?;
        let (r, c) = probe.mode_split(k);
        Self::scatter_fold(mat, &r, &c, dims)
    }

    /// The classical mode-k unfolding: columns indexed by
    /// `(i₁,…,i_{k−1},i_{k+1},…,i_N)`.
    pub fn classical_unfold(&self, k: usize) -> Result<QuaternionMatrix> {
        self.check_mode(k)?;
        let n = self.dims.len();
        let rows = vec![k - 1];
        let cols: Vec<usize> = (0..n).filter(|&m| m != k - 1).collect();
        Ok(self.gather_unfold(&rows, &cols))
    }

    /// Inverse of [`classical_unfold`](Self::classical_unfold).
    pub fn classical_fold(mat: &QuaternionMatrix, k: usize, dims: &[usize]) -> Result<Self> {
        let probe = Self {
            dims: dims.to_vec(),
            data: Vec::new(),
        };
        probe.check_mode(k)?;
        let n = dims.len();
        let rows = vec![k - 1];
        let cols: Vec<usize> = (0..n).filter(|&m| m != k - 1).collect();
        Self::scatter_fold(mat, &rows, &cols, dims)
    }

    fn circ_split(dims_len: usize, k: usize, l: usize) -> Result<(Vec<usize>, Vec<usize>)> {
        let n = dims_len;
        if k < 1 || k > n {
            return Err(Error::Argument(format!("mode {k} out of range 1..={n}")));
        }
        if l < 1 || l >= n {
            return Err(Error::Argument(format!(
                "row mode count {l} out of range 1..{n}"
            )));
        }
        let cycle: Vec<usize> = (0..n).map(|t| (k - 1 + t) % n).collect();
        Ok((cycle[..l].to_vec(), cycle[l..].to_vec()))
    }

    /// The circular unfolding: rows over `l` cyclically consecutive modes
    /// `k,…,k+l−1` (positions taken modulo the order), columns over the
    /// remaining modes continuing the cycle.
    pub fn circ_unfold(&self, k: usize, l: usize) -> Result<QuaternionMatrix> {
        let (r, c) = Self::circ_split(self.dims.len(), k, l)?;
        Ok(self.gather_unfold(&r, &c))
    }

    /// Inverse of [`circ_unfold`](Self::circ_unfold).
    pub fn circ_fold(mat: &QuaternionMatrix, k: usize, l: usize, dims: &[usize]) -> Result<Self> {
        let (r, c) = Self::circ_split(dims.len(), k, l)?;
        Self::scatter_fold(mat, &r, &c, dims)
    }

    /// Row/column index strides for a mode list.
    fn mode_strides(dims: &[usize], modes: &[usize]) -> Vec<usize> {
        let mut strides = Vec::with_capacity(modes.len());
        let mut acc = 1;
        for &m in modes {
            strides.push(acc);
            acc *= dims[m];
        }
        strides
    }

    /// Builds the matrix whose row index runs over `row_modes` and column
    /// index over `col_modes` (both zero-based, together a permutation of the
    /// modes), each ordered first-listed-fastest.
    fn gather_unfold(&self, row_modes: &[usize], col_modes: &[usize]) -> QuaternionMatrix {
        debug_assert_eq!(row_modes.len() + col_modes.len(), self.dims.len());
        let rows: usize = row_modes.iter().map(|&m| self.dims[m]).product();
        let cols: usize = col_modes.iter().map(|&m| self.dims[m]).product();
        let rstr = Self::mode_strides(&self.dims, row_modes);
        let cstr = Self::mode_strides(&self.dims, col_modes);

        let mut out = vec![Quaternion::ZERO; rows * cols];
        let mut multi = vec![0usize; self.dims.len()];
        for (t, &val) in self.data.iter().enumerate() {
            // Decode t into the zero-based multi-index (first mode fastest).
            let mut rem = t;
            for (m, &d) in self.dims.iter().enumerate() {
                multi[m] = rem % d;
                rem /= d;
            }
            let mut p = 0;
            for (s, &m) in row_modes.iter().enumerate() {
                p += multi[m] * rstr[s];
            }
            let mut q = 0;
            for (s, &m) in col_modes.iter().enumerate() {
                q += multi[m] * cstr[s];
            }
            out[p + rows * q] = val;
        }
        QuaternionMatrix::new(rows, cols, out)
    }

    /// Exact inverse of [`gather_unfold`](Self::gather_unfold).
    fn scatter_fold(
        mat: &QuaternionMatrix,
        row_modes: &[usize],
        col_modes: &[usize],
        dims: &[usize],
    ) -> Result<Self> {
        let rows: usize = row_modes.iter().map(|&m| dims[m]).product();
        let cols: usize = col_modes.iter().map(|&m| dims[m]).product();
        if mat.rows() != rows || mat.cols() != cols {
            return Err(Error::Shape(format!(
                "matrix {}x{} does not fold into {dims:?}",
                mat.rows(),
                mat.cols()
            )));
        }
        let mut t = Self::zeros(dims);
        let mut multi = vec![0usize; dims.len()];
        let rstr = Self::mode_strides(dims, row_modes);
        let cstr = Self::mode_strides(dims, col_modes);
        for (lin, out) in t.data.iter_mut().enumerate() {
            let mut rem = lin;
            for (m, &d) in dims.iter().enumerate() {
                multi[m] = rem % d;
                rem /= d;
            }
            let mut p = 0;
            for (s, &m) in row_modes.iter().enumerate() {
                p += multi[m] * rstr[s];
            }
            let mut q = 0;
            for (s, &m) in col_modes.iter().enumerate() {
                q += multi[m] * cstr[s];
            }
            *out = mat.data()[p + rows * q];
        }
        Ok(t)
    }

    /// General permutation: `order` lists one-based source modes; the result
    /// has `dims_out[m] = dims[order[m]−1]` and
    /// `out(j₁,…,j_N) = self(j_{order⁻¹(1)},…)`, matching the usual
    /// array-permute semantics.
    pub fn permute(&self, order: &[usize]) -> Result<Self> {
        let n = self.dims.len();
        if order.len() != n {
            return Err(Error::Argument(format!(
                "permutation of length {} does not match order {n}",
                order.len()
            )));
        }
        let mut seen = vec![false; n];
        for &o in order {
            if o < 1 || o > n || seen[o - 1] {
                return Err(Error::Argument(format!("invalid permutation {order:?}")));
            }
            seen[o - 1] = true;
        }
        let new_dims: Vec<usize> = order.iter().map(|&o| self.dims[o - 1]).collect();
        let mut out = Self::zeros(&new_dims);
        let mut new_multi = vec![0usize; n];
        let old_strides = Self::mode_strides(&self.dims, &(0..n).collect::<Vec<_>>());
        for (lin, slot) in out.data.iter_mut().enumerate() {
            let mut rem = lin;
            for (m, &d) in new_dims.iter().enumerate() {
                new_multi[m] = rem % d;
                rem /= d;
            }
            let mut old_lin = 0;
            for (m, &o) in order.iter().enumerate() {
                old_lin += new_multi[m] * old_strides[o - 1];
            }
            *slot = self.data[old_lin];
        }
        Ok(out)
    }

    /// Cyclic permutation: mode `n` becomes the first mode, preserving the
    /// cyclic order of the rest.
    pub fn permute_cyclic(&self, n: usize) -> Result<Self> {
        self.check_mode(n)?;
        let len = self.dims.len();
        let order: Vec<usize> = (0..len).map(|t| (n - 1 + t) % len + 1).collect();
        self.permute(&order)
    }

    /// Serializes to the QTNS binary format.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(QTNS_MAGIC)?;
        w.write_all(&QTNS_VERSION.to_le_bytes())?;
        w.write_all(&(self.dims.len() as u32).to_le_bytes())?;
        for &d in &self.dims {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        for q in &self.data {
            for c in [q.w, q.x, q.y, q.z] {
                w.write_all(&c.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a tensor written by [`save`](Self::save).
    pub fn load(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| Error::Format("truncated tensor file".into()))?;
        if &magic != QTNS_MAGIC {
            return Err(Error::Format("not a QTNS tensor file".into()));
        }
        let version = read_u32(&mut r)?;
        if version != QTNS_VERSION {
            return Err(Error::Format(format!("unsupported QTNS version {version}")));
        }
        let order = read_u32(&mut r)? as usize;
        if order == 0 || order > 64 {
            return Err(Error::Format(format!("implausible tensor order {order}")));
        }
        let mut dims = Vec::with_capacity(order);
        for _ in 0..order {
            let d = read_u64(&mut r)?;
            if d == 0 || d > usize::MAX as u64 {
                return Err(Error::Format("invalid tensor dimension".into()));
            }
            dims.push(d as usize);
        }
        let len = checked_len(&dims).map_err(|_| Error::Format("tensor size overflows".into()))?;
        let mut data = Vec::with_capacity(len);
        let mut buf = [0u8; 32];
        for _ in 0..len {
            r.read_exact(&mut buf)
                .map_err(|_| Error::Format("truncated tensor data".into()))?;
            let f = |o: usize| f64::from_le_bytes(buf[o..o + 8].try_into().unwrap());
            data.push(Quaternion::new(f(0), f(8), f(16), f(24)));
        }
        let mut probe = [0u8; 1];
        if r.read(&mut probe)? != 0 {
            return Err(Error::Format("trailing bytes after tensor data".into()));
        }
        Ok(Self::new(dims, data))
    }
}

fn read_u32(r: &mut impl IoRead) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)
        .map_err(|_| Error::Format("truncated tensor header".into()))?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl IoRead) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)
        .map_err(|_| Error::Format("truncated tensor header".into()))?;
    Ok(u64::from_le_bytes(b))
}
