//! Minimal dense complex linear algebra.
//!
//! The quaternion SVD in [`crate::qmat`] works through the complex adjoint
//! embedding and therefore only needs one kernel: a complex SVD. It is
//! implemented here as a one-sided Jacobi iteration (Hestenes), which is
//! simple, unconditionally stable and accurate to machine precision at the
//! matrix sizes this crate works with. No external linear-algebra backend is
//! used.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Column-major dense complex matrix.
#[derive(Debug, Clone)]
pub(crate) struct CMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i + n * i] = Complex64::ONE;
        }
        m
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.data[i + self.rows * j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i + self.rows * j] = v;
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[Complex64] {
        &self.data[self.rows * j..self.rows * (j + 1)]
    }

    #[inline]
    fn col_mut(&mut self, j: usize) -> &mut [Complex64] {
        let r = self.rows;
        &mut self.data[r * j..r * (j + 1)]
    }

    pub fn conj_transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.set(j, i, self.at(i, j).conj());
            }
        }
        out
    }

    /// Splits the buffer at column `p`/`q` boundaries to hand out two
    /// disjoint mutable column slices.
    fn cols_pair_mut(&mut self, p: usize, q: usize) -> (&mut [Complex64], &mut [Complex64]) {
        debug_assert!(p < q);
        let r = self.rows;
        let (head, tail) = self.data.split_at_mut(r * q);
        (&mut head[r * p..r * (p + 1)], &mut tail[..r])
    }
}

pub(crate) struct CSvd {
    /// `rows × k` with orthonormal columns, `k = min(rows, cols)`.
    pub u: CMat,
    /// Singular values, descending.
    pub s: Vec<f64>,
    /// `cols × k` with orthonormal columns.
    pub v: CMat,
}

/// Economy-size SVD `a = u · diag(s) · vᴴ` by one-sided Jacobi.
///
/// Columns of the working copy are rotated in pairs until all of them are
/// mutually orthogonal; their norms are then the singular values. Zero (or
/// fully cancelled) columns of `u` are completed to an orthonormal basis so
/// the factor always has orthonormal columns, including for rank-deficient
/// and zero input.
pub(crate) fn jacobi_svd(a: &CMat) -> Result<CSvd> {
    if a.rows < a.cols {
        // Tall orientation wanted: factor the adjoint and swap the roles.
        let t = jacobi_svd(&a.conj_transpose())?;
        return Ok(CSvd {
            u: t.v,
            s: t.s,
            v: t.u,
        });
    }
    let m = a.rows;
    let n = a.cols;
    let mut w = a.clone();
    let mut v = CMat::identity(n);

    const MAX_SWEEPS: usize = 64;
    // Sweeps that must hold the strict threshold before relaxation starts.
    const STRICT_SWEEPS: usize = 24;
    // Relative off-diagonal tolerance; |<w_p, w_q>| below this (scaled by the
    // column norms) counts as orthogonal. A length-m inner product carries up
    // to ~m·ε of rounding noise relative to the column norms, so the
    // threshold must grow with m or structured inputs rotate forever.
    let base_tol = m as f64 * f64::EPSILON;

    // Columns below ε of the largest column contribute nothing representable
    // to the factorization, but clusters of such rounding dust stay strongly
    // correlated with each other and cycle forever under the relative
    // rotation criterion (their absolute Gram mass is too small for the
    // rotations to make global progress). Flush them against the initial
    // matrix scale; the subnormal guard stays as the lower bound so a zero
    // matrix still short-circuits.
    let max_app_initial = (0..n)
        .map(|j| w.col(j).iter().map(|c| c.norm_sqr()).sum::<f64>())
        .fold(0.0, f64::max);
    let flush_floor = f64::MIN_POSITIVE.max(max_app_initial * (f64::EPSILON * f64::EPSILON));

    let mut sweeps: usize = 0;
    loop {
        // Each rotation re-injects O(ε) into previously settled pairs, so a
        // wide matrix maintains a noise equilibrium that can sit right at
        // the strict threshold; a sweep then never comes back clean even
        // though the factorization is done to working accuracy. Cyclic
        // convergence normally takes well under STRICT_SWEEPS sweeps, so
        // once past that the threshold is doubled per sweep, settling at
        // the first level above the equilibrium instead of livelocking.
        let tol = base_tol * (1u64 << sweeps.saturating_sub(STRICT_SWEEPS).min(12)) as f64;
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = Complex64::ZERO;
                {
                    let wp = w.col(p);
                    let wq = w.col(q);
                    for i in 0..m {
                        app += wp[i].norm_sqr();
                        aqq += wq[i].norm_sqr();
                        apq += wp[i].conj() * wq[i];
                    }
                }
                if app <= flush_floor || aqq <= flush_floor {
                    if app <= flush_floor {
                        w.col_mut(p).fill(Complex64::ZERO);
                    }
                    if aqq <= flush_floor {
                        w.col_mut(q).fill(Complex64::ZERO);
                    }
                    continue;
                }
                let off = apq.norm();
                if off <= tol * (app.sqrt() * aqq.sqrt()) || off == 0.0 {
                    continue;
                }
                rotated = true;
                // Phase factor that makes the 2×2 Gram matrix real, then a
                // classical symmetric Jacobi rotation.
                let alpha = apq / off;
                let tau = (aqq - app) / (2.0 * off);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                let sa = alpha * sn;
                let sac = alpha.conj() * sn;
                let (wp, wq) = w.cols_pair_mut(p, q);
                for i in 0..m {
                    let a_i = wp[i];
                    let b_i = wq[i];
                    wp[i] = a_i * cs - b_i * sac;
                    wq[i] = a_i * sa + b_i * cs;
                }
                let (vp, vq) = v.cols_pair_mut(p, q);
                for i in 0..n {
                    let a_i = vp[i];
                    let b_i = vq[i];
                    vp[i] = a_i * cs - b_i * sac;
                    vq[i] = a_i * sa + b_i * cs;
                }
            }
        }
        if !rotated {
            break;
        }
        sweeps += 1;
        if sweeps > MAX_SWEEPS {
            return Err(Error::Numerical(
                "one-sided Jacobi SVD did not converge".into(),
            ));
        }
    }

    // Column norms, sorted descending with a stable permutation.
    let norms: Vec<f64> = (0..n)
        .map(|j| w.col(j).iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap().then(i.cmp(&j)));

    let mut u = CMat::zeros(m, n);
    let mut vs = CMat::zeros(n, n);
    let mut s = vec![0.0; n];
    for (dst, &src) in order.iter().enumerate() {
        s[dst] = norms[src];
        for i in 0..n {
            vs.set(i, dst, v.at(i, src));
        }
        if norms[src] > 0.0 {
            let inv = 1.0 / norms[src];
            for i in 0..m {
                u.set(i, dst, w.at(i, src) * inv);
            }
        }
    }
    // Orthonormal completion for exactly-zero columns.
    for j in 0..n {
        if s[j] > 0.0 {
            continue;
        }
        // The best basis residual can be as small as sqrt((m - filled)/m) when
        // the remaining complement is spread evenly across coordinates, so take
        // the argmax over all candidates rather than the first above a fixed
        // threshold (with an early exit when a candidate is clearly dominant).
        let mut best: Option<(f64, Vec<Complex64>)> = None;
        for basis in 0..m {
            let mut cand = vec![Complex64::ZERO; m];
            cand[basis] = Complex64::ONE;
            for _pass in 0..2 {
                for t in 0..n {
                    if t == j || (s[t] == 0.0 && t > j) {
                        continue;
                    }
                    let mut proj = Complex64::ZERO;
                    for i in 0..m {
                        proj += u.at(i, t).conj() * cand[i];
                    }
                    for i in 0..m {
                        let sub = u.at(i, t) * proj;
                        cand[i] -= sub;
                    }
                }
            }
            let nrm = cand.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if best.as_ref().is_none_or(|(b, _)| nrm > *b) {
                best = Some((nrm, cand));
            }
            if nrm > 0.9 {
                break;
            }
        }
        match best {
            Some((nrm, cand)) if nrm > 1e-6 => {
                let inv = 1.0 / nrm;
                for i in 0..m {
                    u.set(i, j, cand[i] * inv);
                }
            }
            _ => {
                return Err(Error::Numerical(
                    "failed to complete orthonormal basis".into(),
                ));
            }
        }
    }

    Ok(CSvd { u, s, v: vs })
}
