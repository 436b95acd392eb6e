//! Dense quaternion matrices.
//!
//! Because quaternion multiplication does not commute, a matrix product has
//! two inequivalent definitions, both used by the tensor-ring algebra:
//!
//! ```text
//! (A ·L B)(m,p) = Σ_n a(m,n) · b(n,p)      left product
//! (A ·R B)(m,p) = Σ_n b(n,p) · a(m,n)      right product
//! ```
//!
//! Each product is associative on its own, and `A ·R B = (Bᵀ ·L Aᵀ)ᵀ`, but
//! mixing the two is not associative in general.
//!
//! The singular value decomposition is computed through the complex adjoint
//! embedding: writing `A = A₁ + A₂·j` with complex blocks `A₁ = W + X·i`,
//! `A₂ = Y + Z·i`, the `2M×2N` complex matrix
//!
//! ```text
//! χ(A) = [  A₁    A₂ ]
//!        [ −Ā₂    Ā₁ ]
//! ```
//!
//! satisfies `χ(A ·L B) = χ(A)·χ(B)` and `χ(Aᴴ) = χ(A)ᴴ`, so a complex SVD of
//! `χ(A)` yields the quaternion SVD. Singular values of `χ(A)` come in
//! coincident pairs; one member of each pair is kept and the corresponding
//! quaternion singular vectors are recovered from the structured columns.

use num_complex::Complex64;
use rand::Rng;

use crate::cmat::{jacobi_svd, CMat};
use crate::error::{Error, Result};
use crate::quat::Quaternion;

/// Column-major dense quaternion matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct QuaternionMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Quaternion>,
}

impl QuaternionMatrix {
    /// Builds a matrix from a column-major buffer.
    pub fn new(rows: usize, cols: usize, data: Vec<Quaternion>) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        assert_eq!(data.len(), rows * cols, "buffer does not match dimensions");
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![Quaternion::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i + n * i] = Quaternion::ONE;
        }
        m
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Quaternion,
    ) -> Self {
        let mut m = Self::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m.data[i + rows * j] = f(i, j);
            }
        }
        m
    }

    /// Matrix with components drawn uniformly from `[-1, 1)`.
    pub fn random<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        Self::from_fn(rows, cols, |_, _| {
            Quaternion::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            )
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Quaternion {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i + self.rows * j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Quaternion) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i + self.rows * j] = v;
    }

    /// Column-major backing buffer.
    #[inline]
    pub fn data(&self) -> &[Quaternion] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Quaternion> {
        self.data
    }

    #[inline]
    fn col(&self, j: usize) -> &[Quaternion] {
        &self.data[self.rows * j..self.rows * (j + 1)]
    }

    fn check_product_shapes(&self, rhs: &Self) -> Result<()> {
        if self.cols != rhs.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(())
    }

    /// Left product: entries multiply in row-factor-first order.
    pub fn mul_left(&self, rhs: &Self) -> Result<Self> {
        self.check_product_shapes(rhs)?;
        let mut out = Self::zeros(self.rows, rhs.cols);
        for p in 0..rhs.cols {
            let out_col = &mut out.data[self.rows * p..self.rows * (p + 1)];
            for n in 0..self.cols {
                let b = rhs.at(n, p);
                let a_col = self.col(n);
                for i in 0..self.rows {
                    out_col[i].accum_mul(&a_col[i], &b);
                }
            }
        }
        Ok(out)
    }

    /// Right product: same index pattern, reversed factor order per entry.
    pub fn mul_right(&self, rhs: &Self) -> Result<Self> {
        self.check_product_shapes(rhs)?;
        let mut out = Self::zeros(self.rows, rhs.cols);
        for p in 0..rhs.cols {
            let out_col = &mut out.data[self.rows * p..self.rows * (p + 1)];
            for n in 0..self.cols {
                let b = rhs.at(n, p);
                let a_col = self.col(n);
                for i in 0..self.rows {
                    out_col[i].accum_mul(&b, &a_col[i]);
                }
            }
        }
        Ok(out)
    }

    /// Plain transpose, no conjugation.
    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.at(j, i))
    }

    /// Entrywise conjugate.
    pub fn conj(&self) -> Self {
        let data = self.data.iter().map(Quaternion::conj).collect();
        Self::new(self.rows, self.cols, data)
    }

    /// Conjugate transpose `Aᴴ`.
    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.at(j, i).conj())
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.check_same_shape(rhs)?;
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| *a + *b)
            .collect();
        Ok(Self::new(self.rows, self.cols, data))
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.check_same_shape(rhs)?;
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| *a - *b)
            .collect();
        Ok(Self::new(self.rows, self.cols, data))
    }

    fn check_same_shape(&self, rhs: &Self) -> Result<()> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::Shape(format!(
                "expected {}x{}, got {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(())
    }

    pub fn scale(&self, s: f64) -> Self {
        let data = self.data.iter().map(|q| q.scale(s)).collect();
        Self::new(self.rows, self.cols, data)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data
            .iter()
            .map(Quaternion::norm_sqr)
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs_diff(&self, rhs: &Self) -> Result<f64> {
        self.check_same_shape(rhs)?;
        Ok(self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max))
    }

    /// Largest imaginary-component magnitude; zero for a real matrix.
    pub fn max_imag(&self) -> f64 {
        self.data
            .iter()
            .map(|q| q.x.abs().max(q.y.abs()).max(q.z.abs()))
            .fold(0.0, f64::max)
    }

    /// Max-norm defect of `AᴴA` against the identity; small for a matrix
    /// with orthonormal columns.
    pub fn orthonormal_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for p in 0..self.cols {
            for q in 0..self.cols {
                let mut g = Quaternion::ZERO;
                let cp = self.col(p);
                let cq = self.col(q);
                for i in 0..self.rows {
                    g.accum_mul(&cp[i].conj(), &cq[i]);
                }
                let target = if p == q {
                    Quaternion::ONE
                } else {
                    Quaternion::ZERO
                };
                worst = worst.max(g.max_abs_diff(&target));
            }
        }
        worst
    }

    /// The complex adjoint `χ(A)`.
    fn complex_adjoint(&self) -> CMat {
        let (m, n) = (self.rows, self.cols);
        let mut chi = CMat::zeros(2 * m, 2 * n);
        for j in 0..n {
            for i in 0..m {
                let q = self.at(i, j);
                let a1 = Complex64::new(q.w, q.x);
                let a2 = Complex64::new(q.y, q.z);
                chi.set(i, j, a1);
                chi.set(i, j + n, a2);
                chi.set(i + m, j, -a2.conj());
                chi.set(i + m, j + n, a1.conj());
            }
        }
        chi
    }

    /// Quaternion singular value decomposition `A = U ·L diag(σ) ·L Vᴴ`
    /// with `min(M,N)` real, non-negative singular values in descending
    /// order and factors with orthonormal columns.
    pub fn qsvd(&self) -> Result<QsvdFactors> {
        let (m, n) = (self.rows, self.cols);
        let r = m.min(n);
        let f = jacobi_svd(&self.complex_adjoint())?;
        debug_assert_eq!(f.s.len(), 2 * r);
        let smax = f.s[0];

        // The adjoint's spectrum must consist of coincident pairs.
        for t in 0..r {
            if (f.s[2 * t] - f.s[2 * t + 1]).abs() > 1e-8 * smax {
                return Err(Error::Numerical(format!(
                    "adjoint singular values failed to pair up at index {t}"
                )));
            }
        }

        // Structured selection: one representative per pair. The antilinear
        // map v ↦ J·conj(v) sends a singular vector to its pair partner, so a
        // basis of the form {v_s, J·conj(v_s)} is enforced by projecting each
        // candidate against the previously selected vectors and their
        // partners. Left vectors are carried over through the coefficients of
        // the right vector in the complex SVD basis, which keeps the U–V
        // correspondence exact even inside degenerate clusters.
        let zero_cut = smax * 1e-13;

        // Pairs whose values coincide within the gap tolerance share one
        // numerically degenerate singular subspace; candidate vectors must be
        // drawn from the whole cluster, not a single pair, or the selection
        // runs dry once the leftover mass spreads thinly over its columns.
        let pair_sv: Vec<f64> = (0..r)
            .map(|t| 0.5 * (f.s[2 * t] + f.s[2 * t + 1]))
            .collect();
        let gap_tol = 1e-10 * smax;
        let mut cluster_cols: Vec<std::ops::Range<usize>> = vec![0..0; r];
        let mut begin = 0;
        for t in 0..r {
            if t + 1 == r || pair_sv[t] - pair_sv[t + 1] > gap_tol {
                for entry in cluster_cols.iter_mut().take(t + 1).skip(begin) {
                    *entry = 2 * begin..2 * (t + 1);
                }
                begin = t + 1;
            }
        }

        let mut sigma = Vec::with_capacity(r);
        let mut sel_v: Vec<Vec<Complex64>> = Vec::with_capacity(r);
        let mut sel_jv: Vec<Vec<Complex64>> = Vec::with_capacity(r);
        let mut sel_u: Vec<Vec<Complex64>> = Vec::with_capacity(r);
        let mut sel_ju: Vec<Vec<Complex64>> = Vec::with_capacity(r);

        for s_idx in 0..r {
            let sv = pair_sv[s_idx];
            sigma.push(sv);

            let x = pick_structured(&f.v, cluster_cols[s_idx].clone(), &sel_v, &sel_jv)?;
            let u_vec = if sv > zero_cut {
                let mut u_vec = vec![Complex64::ZERO; 2 * m];
                for t in 0..2 * r {
                    let mut gamma = Complex64::ZERO;
                    let vcol = f.v.col(t);
                    for i in 0..2 * n {
                        gamma += vcol[i].conj() * x[i];
                    }
                    if gamma.norm_sqr() > 0.0 {
                        let ucol = f.u.col(t);
                        for i in 0..2 * m {
                            u_vec[i] += ucol[i] * gamma;
                        }
                    }
                }
                let nrm = vec_norm(&u_vec);
                if nrm < 0.5 {
                    return Err(Error::Numerical("left singular vector collapsed".into()));
                }
                for c in &mut u_vec {
                    *c /= nrm;
                }
                u_vec
            } else {
                // Inside the null space the U columns are unrelated to V;
                // extract a structured basis directly.
                pick_structured(&f.u, cluster_cols[s_idx].clone(), &sel_u, &sel_ju)?
            };

            sel_jv.push(j_conj(&x));
            sel_v.push(x);
            sel_ju.push(j_conj(&u_vec));
            sel_u.push(u_vec);
        }

        let mut u = QuaternionMatrix::zeros(m, r);
        let mut v = QuaternionMatrix::zeros(n, r);
        for s_idx in 0..r {
            for i in 0..m {
                u.set(
                    i,
                    s_idx,
                    quat_from_halves(sel_u[s_idx][i], sel_u[s_idx][m + i]),
                );
            }
            for i in 0..n {
                v.set(
                    i,
                    s_idx,
                    quat_from_halves(sel_v[s_idx][i], sel_v[s_idx][n + i]),
                );
            }
        }

        // Gauge fixing: right-multiply each column pair by a unit quaternion
        // that makes the largest entry of the U column real and positive.
        // This removes the per-column phase ambiguity (deterministic output)
        // and makes real input produce real factors.
        for s_idx in 0..r {
            let mut best = 0;
            let mut best_norm = -1.0;
            for i in 0..m {
                let nq = u.at(i, s_idx).norm_sqr();
                if nq > best_norm + 1e-30 {
                    best_norm = nq;
                    best = i;
                }
            }
            let pivot = u.at(best, s_idx);
            let den = pivot.norm();
            if den == 0.0 {
                continue;
            }
            let g = pivot.conj().scale(1.0 / den);
            for i in 0..m {
                let q = u.at(i, s_idx);
                u.set(i, s_idx, q * g);
            }
            for i in 0..n {
                let q = v.at(i, s_idx);
                v.set(i, s_idx, q * g);
            }
        }

        Ok(QsvdFactors { u, sigma, v })
    }

    /// Truncated SVD: keeps the singular values at or above the threshold
    /// derived from `delta` by `rule`, but never less than one for a nonzero
    /// matrix. Returns the retained factorization and the retained count.
    pub fn truncated_qsvd_with(
        &self,
        delta: f64,
        rule: TruncationRule,
    ) -> Result<(QsvdFactors, usize)> {
        if delta < 0.0 || !delta.is_finite() {
            return Err(Error::Argument(format!(
                "truncation threshold {delta} must be finite and >= 0"
            )));
        }
        let f = self.qsvd()?;
        let threshold = match rule {
            TruncationRule::Delta => delta,
            TruncationRule::DeltaSquared => delta * delta,
        };
        let mut kept = f.sigma.iter().take_while(|&&s| s >= threshold).count();
        if kept == 0 && f.sigma.first().copied().unwrap_or(0.0) > 0.0 {
            kept = 1;
        }
        if kept == 0 {
            // Zero matrix: keep a single zero triplet so downstream shapes
            // stay well-formed.
            kept = 1;
        }
        Ok((f.truncate(kept), kept))
    }

    /// Truncated SVD under the default rule (`σ ≥ delta`).
    pub fn truncated_qsvd(&self, delta: f64) -> Result<(QsvdFactors, usize)> {
        self.truncated_qsvd_with(delta, TruncationRule::default())
    }

    /// Numerical rank: singular values above `1e-10 · σ_max · max(M,N)`.
    pub fn rank(&self) -> Result<usize> {
        let f = self.qsvd()?;
        let smax = f.sigma.first().copied().unwrap_or(0.0);
        if smax == 0.0 {
            return Ok(0);
        }
        let cut = 1e-10 * smax * self.rows.max(self.cols) as f64;
        Ok(f.sigma.iter().filter(|&&s| s > cut).count())
    }
}

/// Which comparison a truncation threshold uses.
///
/// The decomposition literature this crate follows states the rule as
/// "retain σ ≥ δ²"; taken literally that misbehaves on both sides of
/// `δ = 1` (over-truncating for δ > 1, keeping numerical noise for δ < 1),
/// so the plain `σ ≥ δ` comparison is the default and the literal squared
/// form remains available as an option.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TruncationRule {
    #[default]
    Delta,
    DeltaSquared,
}

/// Result of a quaternion SVD.
#[derive(Debug, Clone)]
pub struct QsvdFactors {
    /// `M × s` with orthonormal columns.
    pub u: QuaternionMatrix,
    /// Real non-negative singular values, descending.
    pub sigma: Vec<f64>,
    /// `N × s` with orthonormal columns.
    pub v: QuaternionMatrix,
}

impl QsvdFactors {
    /// Number of retained singular triplets.
    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    /// Keeps the leading `k` triplets.
    pub fn truncate(&self, k: usize) -> Self {
        assert!(k > 0 && k <= self.sigma.len());
        let take_cols = |m: &QuaternionMatrix| {
            QuaternionMatrix::new(m.rows(), k, m.data()[..m.rows() * k].to_vec())
        };
        Self {
            u: take_cols(&self.u),
            sigma: self.sigma[..k].to_vec(),
            v: take_cols(&self.v),
        }
    }

    /// `diag(σ) ·L Vᴴ`, the tail factor used when splitting a matrix into
    /// an orthonormal part and the rest.
    pub fn sigma_vh(&self) -> QuaternionMatrix {
        let k = self.sigma.len();
        let n = self.v.rows();
        QuaternionMatrix::from_fn(k, n, |i, j| self.v.at(j, i).conj().scale(self.sigma[i]))
    }

    /// `U ·L diag(σ) ·L Vᴴ`.
    pub fn reconstruct(&self) -> QuaternionMatrix {
        let k = self.sigma.len();
        let m = self.u.rows();
        let mut us = QuaternionMatrix::zeros(m, k);
        for j in 0..k {
            for i in 0..m {
                us.set(i, j, self.u.at(i, j).scale(self.sigma[j]));
            }
        }
        us.mul_left(&self.sigma_vh_unscaled())
            .expect("factor shapes are consistent by construction")
    }

    fn sigma_vh_unscaled(&self) -> QuaternionMatrix {
        let k = self.sigma.len();
        let n = self.v.rows();
        QuaternionMatrix::from_fn(k, n, |i, j| self.v.at(j, i).conj())
    }
}

/// The pair partner `J·conj(v)` of a structured complex vector, where `J`
/// swaps the two halves with a sign: `[c; d] ↦ [conj(d); −conj(c)]`.
fn j_conj(v: &[Complex64]) -> Vec<Complex64> {
    let h = v.len() / 2;
    let mut out = vec![Complex64::ZERO; v.len()];
    for i in 0..h {
        out[i] = v[h + i].conj();
        out[h + i] = -v[i].conj();
    }
    out
}

fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Picks a unit vector from the span of the `cluster` columns of `src`,
/// orthogonal to all previously selected vectors and their pair partners.
///
/// Candidates stay inside the cluster so degenerate singular subspaces are
/// never mixed. The column with the largest residual is taken: inside a
/// cluster of dimension D with d directions still unselected, the best
/// residual is at least √(d/D), so thinly spread leftovers (large null
/// spaces, high-multiplicity spectra) remain extractable where any fixed
/// per-column threshold would reject them all.
fn pick_structured(
    src: &CMat,
    cluster: std::ops::Range<usize>,
    sel: &[Vec<Complex64>],
    sel_j: &[Vec<Complex64>],
) -> Result<Vec<Complex64>> {
    let len = src.rows;
    let mut best: Option<(f64, Vec<Complex64>)> = None;
    for col in cluster {
        let mut x: Vec<Complex64> = src.col(col).to_vec();
        for _pass in 0..2 {
            for basis in sel.iter().chain(sel_j.iter()) {
                let mut proj = Complex64::ZERO;
                for i in 0..len {
                    proj += basis[i].conj() * x[i];
                }
                for i in 0..len {
                    let sub = basis[i] * proj;
                    x[i] -= sub;
                }
            }
        }
        let nrm = vec_norm(&x);
        if best.as_ref().is_none_or(|(b, _)| nrm > *b) {
            best = Some((nrm, x));
        }
    }
    match best {
        Some((nrm, mut x)) if nrm > 1e-6 => {
            let inv = 1.0 / nrm;
            for c in &mut x {
                *c *= inv;
            }
            Ok(x)
        }
        _ => Err(Error::Numerical(
            "failed to extract structured singular vectors".into(),
        )),
    }
}

/// Maps complex halves back to a quaternion: `v = c + (−conj(d))·j`.
fn quat_from_halves(c: Complex64, d: Complex64) -> Quaternion {
    Quaternion::new(c.re, c.im, -d.re, d.im)
}
