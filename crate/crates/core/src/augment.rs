//! Order-raising maps for quaternion matrices.
//!
//! A color image stored as an H×W quaternion matrix is lifted to an order-N
//! tensor by recursively splitting both axes into (possibly overlapping)
//! blocks: at every level each axis of length `L` splits into `b` blocks of
//! length `m` with overlap `o`, where `L = b·m − (b−1)·o`, and the level's
//! tensor mode enumerates the `b_row·b_col` block combinations. With all
//! overlaps zero this is a pure reshaping (every pixel copied once);
//! overlapping blocks duplicate boundary pixels, which helps low-rank models
//! by letting neighboring patches share pixels.
//!
//! The plan is an explicit index map target-entry → source-pixel. `forward`
//! copies pixels out, `inverse` mean-pools each pixel's copies (exact
//! round trip when the copies agree, the consensus average after they have
//! been modified independently).

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::qmat::QuaternionMatrix;
use crate::qtensor::QuaternionTensor;
use crate::quat::Quaternion;

/// One axis of one split level: `blocks` blocks of `block_len` entries,
/// consecutive starts `block_len − overlap` apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AxisSplit {
    pub blocks: usize,
    pub block_len: usize,
    pub overlap: usize,
}

impl AxisSplit {
    fn stride(&self) -> usize {
        self.block_len - self.overlap
    }
}

/// Row and column splits of one level; the level's tensor mode has size
/// `row.blocks · col.blocks`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelSplit {
    pub row: AxisSplit,
    pub col: AxisSplit,
}

/// A fully resolved augmentation: split chain plus flattened index map.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentPlan {
    rows: usize,
    cols: usize,
    target: Vec<usize>,
    levels: Vec<LevelSplit>,
    /// Per target entry (column-major), the source (row, col) it copies.
    map: Vec<(u32, u32)>,
    /// Per source pixel (row + rows·col), how many target entries copy it.
    multiplicity: Vec<usize>,
}

/// Feasible splits of an axis of length `len` into `b` blocks, smallest
/// overlap first. Overlaps range over 0..=2; a single block keeps the axis
/// whole.
fn axis_options(len: usize, b: usize) -> Vec<AxisSplit> {
    if b == 1 {
        return vec![AxisSplit {
            blocks: 1,
            block_len: len,
            overlap: 0,
        }];
    }
    let mut out = Vec::new();
    for o in 0..=2usize {
        let total = len + (b - 1) * o;
        if total % b == 0 {
            let m = total / b;
            if o < m {
                out.push(AxisSplit {
                    blocks: b,
                    block_len: m,
                    overlap: o,
                });
            }
        }
    }
    out
}

/// Factorizations `dim = b_row · b_col`, most balanced first, row-light on
/// ties.
fn factor_pairs(dim: usize) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = (1..=dim)
        .filter(|b| dim % b == 0)
        .map(|b| (b, dim / b))
        .collect();
    pairs.sort_by_key(|&(r, c)| (r.abs_diff(c), r));
    pairs
}

fn search(
    level: usize,
    rlen: usize,
    clen: usize,
    target: &[usize],
    chosen: &mut Vec<LevelSplit>,
    dead: &mut HashSet<(usize, usize, usize)>,
) -> bool {
    if level == target.len() {
        return rlen == 1 && clen == 1;
    }
    if dead.contains(&(level, rlen, clen)) {
        return false;
    }
    for (br, bc) in factor_pairs(target[level]) {
        for row in axis_options(rlen, br) {
            for col in axis_options(clen, bc) {
                chosen.push(LevelSplit { row, col });
                if search(
                    level + 1,
                    row.block_len,
                    col.block_len,
                    target,
                    chosen,
                    dead,
                ) {
                    return true;
                }
                chosen.pop();
            }
        }
    }
    dead.insert((level, rlen, clen));
    false
}

impl AugmentPlan {
    /// Plans the split chain for an H×W source and the requested target
    /// dimensions. Deterministic: the search prefers balanced row/column
    /// factor pairs and the smallest feasible overlap, backtracking when a
    /// choice strands an axis.
    pub fn new(rows: usize, cols: usize, target: &[usize]) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Argument("source dimensions must be positive".into()));
        }
        if rows > u32::MAX as usize || cols > u32::MAX as usize {
            return Err(Error::Argument("source dimensions too large".into()));
        }
        if target.is_empty() {
            return Err(Error::Argument(
                "target dimensions must be non-empty".into(),
            ));
        }
        if target.iter().any(|&d| d == 0) {
            return Err(Error::Argument("target dimensions must be positive".into()));
        }
        let mut levels = Vec::with_capacity(target.len());
        let mut dead = HashSet::new();
        if !search(0, rows, cols, target, &mut levels, &mut dead) {
            // Identify which axis cannot reach length 1 on its own to give a
            // more pointed message.
            let row_only = axis_feasible(rows, target);
            let col_only = axis_feasible(cols, target);
            let axis = match (row_only, col_only) {
                (false, true) => "rows cannot be split to the target",
                (true, false) => "columns cannot be split to the target",
                _ => "no joint row/column split reaches the target",
            };
            return Err(Error::Planning(format!(
                "no augmentation of {rows}x{cols} into {target:?}: {axis}"
            )));
        }

        let total: usize = target.iter().product();
        let mut map = Vec::with_capacity(total);
        let mut multiplicity = vec![0usize; rows * cols];
        for t in 0..total {
            let mut rem = t;
            let mut r = 0usize;
            let mut c = 0usize;
            for (lv, &dim) in levels.iter().zip(target) {
                let j = rem % dim;
                rem /= dim;
                let rb = j % lv.row.blocks;
                let cb = j / lv.row.blocks;
                r += rb * lv.row.stride();
                c += cb * lv.col.stride();
            }
            debug_assert!(r < rows && c < cols);
            map.push((r as u32, c as u32));
            multiplicity[r + rows * c] += 1;
        }
        if multiplicity.iter().any(|&m| m == 0) {
            return Err(Error::Planning(
                "split chain leaves source pixels uncovered".into(),
            ));
        }
        Ok(Self {
            rows,
            cols,
            target: target.to_vec(),
            levels,
            map,
            multiplicity,
        })
    }

    pub fn source_dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn target_dims(&self) -> &[usize] {
        &self.target
    }

    pub fn levels(&self) -> &[LevelSplit] {
        &self.levels
    }

    /// Target-entry → source-pixel copies, aligned with the column-major
    /// tensor buffer.
    pub fn map(&self) -> &[(u32, u32)] {
        &self.map
    }

    /// Copy counts per source pixel, indexed `row + rows·col`.
    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicity
    }

    /// Lifts a matrix into the planned tensor by copying pixels.
    pub fn forward(&self, img: &QuaternionMatrix) -> Result<QuaternionTensor> {
        if img.rows() != self.rows || img.cols() != self.cols {
            return Err(Error::Shape(format!(
                "image is {}x{}, plan expects {}x{}",
                img.rows(),
                img.cols(),
                self.rows,
                self.cols
            )));
        }
        let data = self
            .map
            .iter()
            .map(|&(r, c)| img.at(r as usize, c as usize))
            .collect();
        Ok(QuaternionTensor::new(self.target.clone(), data))
    }

    /// Projects a tensor back to the source matrix. A pixel whose copies all
    /// agree gets that exact value (bit-exact round trip); disagreeing copies
    /// are averaged.
    pub fn inverse(&self, t: &QuaternionTensor) -> Result<QuaternionMatrix> {
        if t.dims() != self.target.as_slice() {
            return Err(Error::Shape(format!(
                "tensor dims {:?} do not match plan target {:?}",
                t.dims(),
                self.target
            )));
        }
        let n = self.rows * self.cols;
        let mut first = vec![Quaternion::ZERO; n];
        let mut agree = vec![true; n];
        let mut sum = vec![Quaternion::ZERO; n];
        let mut seen = vec![false; n];
        for (&(r, c), &v) in self.map.iter().zip(t.data()) {
            let i = r as usize + self.rows * c as usize;
            if !seen[i] {
                seen[i] = true;
                first[i] = v;
            } else if agree[i] && v != first[i] {
                agree[i] = false;
            }
            sum[i] += v;
        }
        let mut out = QuaternionMatrix::zeros(self.rows, self.cols);
        for c in 0..self.cols {
            for r in 0..self.rows {
                let i = r + self.rows * c;
                let v = if agree[i] {
                    first[i]
                } else {
                    sum[i].scale(1.0 / self.multiplicity[i] as f64)
                };
                out.set(r, c, v);
            }
        }
        Ok(out)
    }

    /// Applies the index map to a boolean mask (column-major, length
    /// rows·cols): a target entry is observed iff its source pixel is.
    pub fn forward_mask(&self, mask: &[bool]) -> Result<Vec<bool>> {
        if mask.len() != self.rows * self.cols {
            return Err(Error::Shape(format!(
                "mask has {} entries, plan expects {}",
                mask.len(),
                self.rows * self.cols
            )));
        }
        Ok(self
            .map
            .iter()
            .map(|&(r, c)| mask[r as usize + self.rows * c as usize])
            .collect())
    }

    /// Writes a human-readable description of the split chain.
    pub fn write_manifest(&self, path: &Path) -> Result<()> {
        let mut text = String::new();
        text.push_str(&format!("source_rows={}\n", self.rows));
        text.push_str(&format!("source_cols={}\n", self.cols));
        let dims: Vec<String> = self.target.iter().map(|d| d.to_string()).collect();
        text.push_str(&format!("target={}\n", dims.join(",")));
        for (i, lv) in self.levels.iter().enumerate() {
            text.push_str(&format!(
                "level_{}_rows={},{},{}\n",
                i + 1,
                lv.row.blocks,
                lv.row.block_len,
                lv.row.overlap
            ));
            text.push_str(&format!(
                "level_{}_cols={},{},{}\n",
                i + 1,
                lv.col.blocks,
                lv.col.block_len,
                lv.col.overlap
            ));
        }
        fs::write(path, text)?;
        Ok(())
    }
}

/// Whether a single axis of length `len` can reach 1 through the target's
/// levels using any per-level block counts dividing the level dimensions.
fn axis_feasible(len: usize, target: &[usize]) -> bool {
    fn go(level: usize, len: usize, target: &[usize], dead: &mut HashSet<(usize, usize)>) -> bool {
        if level == target.len() {
            return len == 1;
        }
        if dead.contains(&(level, len)) {
            return false;
        }
        for b in (1..=target[level]).filter(|b| target[level] % b == 0) {
            for opt in axis_options(len, b) {
                if go(level + 1, opt.block_len, target, dead) {
                    return true;
                }
            }
        }
        dead.insert((level, len));
        false
    }
    go(0, len, target, &mut HashSet::new())
}

/// A target shape for an H×W source: both axes halve per level (overlap 1
/// where the length is odd) until they reach 1, so each level contributes a
/// mode of 4 while both axes are active and 2 after one axis finishes.
pub fn auto_target_dims(rows: usize, cols: usize) -> Vec<usize> {
    fn levels_to_one(mut len: usize) -> usize {
        let mut n = 0;
        while len > 1 {
            len = len.div_euclid(2) + len % 2;
            n += 1;
        }
        n
    }
    let nr = levels_to_one(rows);
    let nc = levels_to_one(cols);
    let n = nr.max(nc);
    let mut dims: Vec<usize> = (0..n)
        .map(|l| {
            let r = if l < nr { 2 } else { 1 };
            let c = if l < nc { 2 } else { 1 };
            r * c
        })
        .collect();
    while dims.len() < 2 {
        dims.push(1);
    }
    dims
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pure_image(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> QuaternionMatrix {
        QuaternionMatrix::from_fn(rows, cols, |_, _| {
            Quaternion::new(0.0, rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>())
        })
    }

    #[test]
    fn plans_the_square_image_shape() {
        let plan = AugmentPlan::new(256, 256, &[4; 9]).unwrap();
        assert_eq!(plan.levels().len(), 9);
        assert_eq!(plan.map().len(), 4usize.pow(9));
        assert!(plan.multiplicities().iter().all(|&m| m >= 1));
        assert!(plan.map().len() >= 256 * 256);

        let mut rng = ChaCha8Rng::seed_from_u64(81);
        let img = random_pure_image(256, 256, &mut rng);
        let t = plan.forward(&img).unwrap();
        let back = plan.inverse(&t).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn plans_the_rectangular_image_shape() {
        let plan = AugmentPlan::new(120, 165, &[4, 4, 4, 4, 4, 4, 5, 4]).unwrap();
        assert_eq!(plan.map().len(), 4usize.pow(7) * 5);

        let mut rng = ChaCha8Rng::seed_from_u64(82);
        let img = random_pure_image(120, 165, &mut rng);
        let t = plan.forward(&img).unwrap();
        let back = plan.inverse(&t).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn exact_factorization_needs_no_overlap() {
        let plan = AugmentPlan::new(4, 4, &[4, 4]).unwrap();
        for lv in plan.levels() {
            assert_eq!(lv.row.overlap, 0);
            assert_eq!(lv.col.overlap, 0);
        }
        assert!(plan.multiplicities().iter().all(|&m| m == 1));
        assert_eq!(plan.map().len(), 16);

        // Zero overlap means the forward map is a pure rearrangement.
        let mut rng = ChaCha8Rng::seed_from_u64(83);
        let img = random_pure_image(4, 4, &mut rng);
        let t = plan.forward(&img).unwrap();
        let mut from_tensor: Vec<u64> = t.data().iter().map(|q| q.y.to_bits()).collect();
        let mut from_image: Vec<u64> = img.data().iter().map(|q| q.y.to_bits()).collect();
        from_tensor.sort_unstable();
        from_image.sort_unstable();
        assert_eq!(from_tensor, from_image);
        assert_eq!(plan.inverse(&t).unwrap(), img);
    }

    #[test]
    fn constant_image_maps_to_constant_tensor() {
        let plan = AugmentPlan::new(8, 8, &auto_target_dims(8, 8)).unwrap();
        let v = Quaternion::new(0.0, 0.3, 0.6, 0.9);
        let img = QuaternionMatrix::from_fn(8, 8, |_, _| v);
        let t = plan.forward(&img).unwrap();
        assert!(t.data().iter().all(|&q| q == v));
    }

    #[test]
    fn perturbation_propagates_by_multiplicity() {
        let plan = AugmentPlan::new(6, 6, &[4, 4, 4]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(84);
        let img = random_pure_image(6, 6, &mut rng);
        let base = plan.forward(&img).unwrap();

        let (r, c) = (2, 3);
        let mut bumped = img.clone();
        bumped.set(r, c, img.at(r, c) + Quaternion::new(0.0, 1.0, 0.0, 0.0));
        let t2 = plan.forward(&bumped).unwrap();
        let changed = base
            .data()
            .iter()
            .zip(t2.data())
            .filter(|(a, b)| a != b)
            .count();
        assert_eq!(changed, plan.multiplicities()[r + 6 * c]);
    }

    #[test]
    fn mask_travels_through_the_same_map() {
        let plan = AugmentPlan::new(6, 6, &[4, 4, 4]).unwrap();
        let total = plan.map().len();
        assert_eq!(
            plan.forward_mask(&vec![true; 36]).unwrap(),
            vec![true; total]
        );
        assert_eq!(
            plan.forward_mask(&vec![false; 36]).unwrap(),
            vec![false; total]
        );

        let mut one = vec![false; 36];
        let (r, c) = (1, 4);
        one[r + 6 * c] = true;
        let lifted = plan.forward_mask(&one).unwrap();
        let observed = lifted.iter().filter(|&&b| b).count();
        assert_eq!(observed, plan.multiplicities()[r + 6 * c]);
    }

    #[test]
    fn disagreeing_copies_average() {
        let plan = AugmentPlan::new(6, 6, &[4, 4, 4]).unwrap();
        let (i, m) = plan
            .multiplicities()
            .iter()
            .enumerate()
            .find(|&(_, &m)| m == 2)
            .expect("the 6x6 plan has doubly covered pixels");
        assert_eq!(*m, 2);
        let positions: Vec<usize> = plan
            .map()
            .iter()
            .enumerate()
            .filter(|(_, &(r, c))| r as usize + 6 * c as usize == i)
            .map(|(t, _)| t)
            .collect();
        assert_eq!(positions.len(), 2);

        let mut t = plan.forward(&QuaternionMatrix::zeros(6, 6)).unwrap();
        t.data_mut()[positions[0]] = Quaternion::real(1.0);
        t.data_mut()[positions[1]] = Quaternion::real(2.0);
        let back = plan.inverse(&t).unwrap();
        let (r, c) = (i % 6, i / 6);
        assert!((back.at(r, c).w - 1.5).abs() < 1e-15);
    }

    #[test]
    fn planning_is_deterministic() {
        let a = AugmentPlan::new(120, 165, &[4, 4, 4, 4, 4, 4, 5, 4]).unwrap();
        let b = AugmentPlan::new(120, 165, &[4, 4, 4, 4, 4, 4, 5, 4]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn infeasible_targets_are_planning_errors() {
        assert!(matches!(
            AugmentPlan::new(7, 7, &[4, 4]),
            Err(Error::Planning(_))
        ));
        assert!(matches!(
            AugmentPlan::new(9, 9, &[2, 2]),
            Err(Error::Planning(_))
        ));
        assert!(matches!(
            AugmentPlan::new(0, 4, &[4]),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            AugmentPlan::new(4, 4, &[]),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn auto_dims_cover_common_sizes() {
        assert_eq!(auto_target_dims(64, 64), vec![4, 4, 4, 4, 4, 4]);
        assert_eq!(auto_target_dims(8, 8), vec![4, 4, 4]);

        for (h, w) in [(64, 64), (120, 165), (37, 53), (8, 8), (5, 9)] {
            let dims = auto_target_dims(h, w);
            let plan = AugmentPlan::new(h, w, &dims).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(85);
            let img = random_pure_image(h, w, &mut rng);
            let back = plan.inverse(&plan.forward(&img).unwrap()).unwrap();
            assert_eq!(back, img);
        }
    }

    #[test]
    fn manifest_lists_the_split_chain() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plan.txt");
        let plan = AugmentPlan::new(8, 8, &[4, 4, 4]).unwrap();
        plan.write_manifest(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("source_rows=8"));
        assert!(text.contains("target=4,4,4"));
        assert!(text.contains("level_3_cols="));
    }
}
