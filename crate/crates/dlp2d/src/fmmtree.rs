//! Adaptive quadtree over boundary points, FMM interaction lists, the
//! near-field sparse matrix, and p-moment low-rank factorizations of the
//! far-field level classes.
//!
//! Lists follow the standard adaptive-FMM conventions. For a leaf `b`, the
//! U-list holds all adjacent leaves (any level, including `b`); the V-list
//! of any box holds the children of its parent's colleagues that are not
//! adjacent to it; the W-list of a leaf holds descendants of its colleagues
//! whose parent touches the leaf but which do not themselves; `x ∈ X(b)`
//! iff `b ∈ W(x)`. Box adjacency is decided in exact integer coordinates.
//!
//! The operator decomposes per target leaf `b` as: direct part `D₀` from
//! `U(b)`, level class 1 from `V(b) ∪ W(b) ∪ X(b)`, and level class `ℓ ≥ 2`
//! from `V(a) ∪ X(a)` of the `(ℓ−1)`-th ancestor `a` of `b`. These classes
//! tile `D` exactly, which the tests verify by brute force.

use crate::linalg::CsrMatrix;
use crate::nystrom::DenseOperator;
use crate::{Error, Real, Result};
use ndarray::{Array1, Array2};
use num_complex::Complex;

const MAX_DEPTH: usize = 60;

#[derive(Debug, Clone)]
pub struct BoxNode<T> {
    pub level: usize,
    /// Integer cell coordinates within the level (cell size `2h`).
    pub ix: u64,
    pub iy: u64,
    pub center: (T, T),
    pub half_width: T,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// All point indices inside this box (whole subtree).
    pub points: Vec<usize>,
    pub is_leaf: bool,
    pub u_list: Vec<usize>,
    pub v_list: Vec<usize>,
    pub w_list: Vec<usize>,
    pub x_list: Vec<usize>,
}

/// Adaptive quadtree with pruned empty boxes. Immutable after construction.
#[derive(Debug, Clone)]
pub struct QuadTree<T> {
    pub boxes: Vec<BoxNode<T>>,
    pub leaf_capacity: usize,
    /// Leaf box index of every point.
    pub leaf_of: Vec<usize>,
    lists_built: bool,
}

impl<T: Real> QuadTree<T> {
    pub fn n_points(&self) -> usize {
        self.leaf_of.len()
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.boxes.len()).filter(|&i| self.boxes[i].is_leaf)
    }

    /// Maximum box level (root = 0).
    pub fn depth(&self) -> usize {
        self.boxes.iter().map(|b| b.level).max().unwrap_or(0)
    }

    pub fn lists_built(&self) -> bool {
        self.lists_built
    }

    /// `(ℓ)`-th ancestor of a box, if it exists.
    pub fn ancestor(&self, b: usize, ell: usize) -> Option<usize> {
        let mut cur = b;
        for _ in 0..ell {
            cur = self.boxes[cur].parent?;
        }
        Some(cur)
    }

    /// Largest level class with any interaction (see module docs).
    pub fn max_class(&self) -> usize {
        let mut best = 0;
        for b in self.leaves() {
            let mut ell = 1;
            let mut a = Some(b);
            while let Some(i) = a {
                if !self.boxes[i].v_list.is_empty()
                    || !self.boxes[i].x_list.is_empty()
                    || (ell == 1 && !self.boxes[i].w_list.is_empty())
                {
                    best = best.max(ell);
                }
                a = self.boxes[i].parent;
                ell += 1;
            }
        }
        best
    }

    /// Text dump, one box per line `level,cx,cy,halfwidth,npoints,is_leaf`.
    pub fn write_dump<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        for b in &self.boxes {
            writeln!(
                w,
                "{},{:.16e},{:.16e},{:.16e},{},{}",
                b.level,
                b.center.0,
                b.center.1,
                b.half_width,
                b.points.len(),
                b.is_leaf
            )?;
        }
        Ok(())
    }
}

/// Builds the adaptive quadtree: the root is the smallest axis-aligned
/// square containing all points (with a 1e−6 relative margin), boxes with
/// more than `s` points split, empty children are pruned. Ties on the
/// splitting lines go to the lower-left child.
pub fn build_tree<T: Real>(points: &[(T, T)], s: usize) -> Result<QuadTree<T>> {
    if points.is_empty() || s == 0 {
        return Err(Error::Tree("need at least one point and s >= 1".into()));
    }
    let mut lo = points[0];
    let mut hi = points[0];
    for &(x, y) in points {
        lo.0 = lo.0.minimum(x);
        lo.1 = lo.1.minimum(y);
        hi.0 = hi.0.maximum(x);
        hi.1 = hi.1.maximum(y);
    }
    let spread = (hi.0 - lo.0).maximum(hi.1 - lo.1).maximum(T::of(1e-300));
    let half = T::of(0.5) * spread * T::of(1.0 + 1e-6);
    let center = (
        T::of(0.5) * (lo.0 + hi.0),
        T::of(0.5) * (lo.1 + hi.1),
    );
    let root = BoxNode {
        level: 0,
        ix: 0,
        iy: 0,
        center,
        half_width: half,
        parent: None,
        children: Vec::new(),
        points: (0..points.len()).collect(),
        is_leaf: true,
        u_list: Vec::new(),
        v_list: Vec::new(),
        w_list: Vec::new(),
        x_list: Vec::new(),
    };
    let mut tree = QuadTree {
        boxes: vec![root],
        leaf_capacity: s,
        leaf_of: vec![0; points.len()],
        lists_built: false,
    };
    let mut stack = vec![0usize];
    while let Some(bi) = stack.pop() {
        if tree.boxes[bi].points.len() <= s {
            continue;
        }
        if tree.boxes[bi].level >= MAX_DEPTH {
            return Err(Error::Tree(format!(
                "box at depth {MAX_DEPTH} still holds {} points (more than s = {s} coincident points?)",
                tree.boxes[bi].points.len()
            )));
        }
        let (cx, cy) = tree.boxes[bi].center;
        let h = tree.boxes[bi].half_width * T::of(0.5);
        let level = tree.boxes[bi].level + 1;
        let (ix, iy) = (tree.boxes[bi].ix, tree.boxes[bi].iy);
        let mut buckets: [Vec<usize>; 4] = Default::default();
        for &p in &tree.boxes[bi].points {
            let right = points[p].0 > cx;
            let top = points[p].1 > cy;
            buckets[(top as usize) * 2 + right as usize].push(p);
        }
        tree.boxes[bi].is_leaf = false;
        for (q, bucket) in buckets.into_iter().enumerate() {
            if bucket.is_empty() {
                continue;
            }
            let right = q % 2 == 1;
            let top = q / 2 == 1;
            let child = BoxNode {
                level,
                ix: ix * 2 + right as u64,
                iy: iy * 2 + top as u64,
                center: (
                    cx + if right { h } else { -h },
                    cy + if top { h } else { -h },
                ),
                half_width: h,
                parent: Some(bi),
                children: Vec::new(),
                points: bucket,
                is_leaf: true,
                u_list: Vec::new(),
                v_list: Vec::new(),
                w_list: Vec::new(),
                x_list: Vec::new(),
            };
            let ci = tree.boxes.len();
            tree.boxes.push(child);
            tree.boxes[bi].children.push(ci);
            stack.push(ci);
        }
    }
    for (bi, b) in tree.boxes.iter().enumerate() {
        if b.is_leaf {
            for &p in &b.points {
                tree.leaf_of[p] = bi;
            }
        }
    }
    Ok(tree)
}

/// Exact closed-square adjacency of two (level, ix, iy) cells.
fn adjacent(la: usize, ixa: u64, iya: u64, lb: usize, ixb: u64, iyb: u64) -> bool {
    let touch_1d = |la: usize, a: u64, lb: usize, b: u64| -> bool {
        // compare [a, a+1]·2^{-la} with [b, b+1]·2^{-lb}
        let (a, b) = (a as u128, b as u128);
        if la <= lb {
            let shift = lb - la;
            b + 1 >= (a << shift) && b <= ((a + 1) << shift)
        } else {
            let shift = la - lb;
            a + 1 >= (b << shift) && a <= ((b + 1) << shift)
        }
    };
    touch_1d(la, ixa, lb, ixb) && touch_1d(la, iya, lb, iyb)
}

fn boxes_adjacent<T: Real>(tree: &QuadTree<T>, a: usize, b: usize) -> bool {
    let (ba, bb) = (&tree.boxes[a], &tree.boxes[b]);
    adjacent(ba.level, ba.ix, ba.iy, bb.level, bb.ix, bb.iy)
}

/// Populates the U/V/W/X lists of every box.
pub fn build_lists<T: Real>(mut tree: QuadTree<T>) -> QuadTree<T> {
    use std::collections::HashMap;
    let n_boxes = tree.boxes.len();
    // per-level map (ix, iy) -> box index
    let mut level_maps: Vec<HashMap<(u64, u64), usize>> = Vec::new();
    for (i, b) in tree.boxes.iter().enumerate() {
        while level_maps.len() <= b.level {
            level_maps.push(HashMap::new());
        }
        level_maps[b.level].insert((b.ix, b.iy), i);
    }
    // colleagues: same-level adjacent existing boxes, including self
    let colleagues: Vec<Vec<usize>> = (0..n_boxes)
        .map(|i| {
            let b = &tree.boxes[i];
            let mut out = Vec::new();
            for dx in -1i64..=1 {
                for dy in -1i64..=1 {
                    let nx = b.ix as i64 + dx;
                    let ny = b.iy as i64 + dy;
                    if nx < 0 || ny < 0 {
                        continue;
                    }
                    if let Some(&j) = level_maps[b.level].get(&(nx as u64, ny as u64)) {
                        out.push(j);
                    }
                }
            }
            out
        })
        .collect();

    // V-list: children of parent's colleagues not adjacent to the box
    for i in 0..n_boxes {
        if let Some(p) = tree.boxes[i].parent {
            let mut v = Vec::new();
            for &pc in &colleagues[p] {
                for &c in &tree.boxes[pc].children {
                    if !boxes_adjacent(&tree, i, c) {
                        v.push(c);
                    }
                }
            }
            v.sort_unstable();
            tree.boxes[i].v_list = v;
        }
    }

    // U-list (leaves): adjacent leaves of any level, including self.
    // W-list (leaves): descendants of colleagues whose parent touches the
    // leaf but which do not themselves.
    let leaf_ids: Vec<usize> = tree.leaves().collect();
    for &b in &leaf_ids {
        let mut u = Vec::new();
        let mut w = Vec::new();
        // walk down from the root, descending only through touching boxes
        let mut stack = vec![0usize];
        while let Some(d) = stack.pop() {
            if boxes_adjacent(&tree, b, d) {
                if tree.boxes[d].is_leaf {
                    u.push(d);
                } else {
                    for &c in &tree.boxes[d].children {
                        stack.push(c);
                    }
                }
            } else {
                // parent touched b (or d is the root, which always touches)
                let deeper = tree.boxes[d].level > tree.boxes[b].level;
                if deeper {
                    w.push(d);
                }
                // not touching: nothing below can touch either
            }
        }
        u.sort_unstable();
        w.sort_unstable();
        tree.boxes[b].u_list = u;
        tree.boxes[b].w_list = w;
    }

    // X-list by inversion: x ∈ X(v) iff v ∈ W(x)
    let mut x_lists: Vec<Vec<usize>> = vec![Vec::new(); n_boxes];
    for &leaf in &leaf_ids {
        for &w in &tree.boxes[leaf].w_list {
            x_lists[w].push(leaf);
        }
    }
    for (i, x) in x_lists.into_iter().enumerate() {
        tree.boxes[i].x_list = x;
    }
    tree.lists_built = true;
    tree
}

/// The near-field sparse matrix `D₀`: entries of `D_N` with target in a
/// leaf `b` and source in `T(U(b))`.
pub fn near_matrix<T: Real>(tree: &QuadTree<T>, op: &DenseOperator<T>) -> CsrMatrix<T> {
    assert!(tree.lists_built(), "call build_lists first");
    let n = op.len();
    let mut trip = Vec::new();
    for b in tree.leaves() {
        for &u in &tree.boxes[b].u_list {
            for &i in &tree.boxes[b].points {
                for &j in &tree.boxes[u].points {
                    trip.push((i, j, op.matrix[[i, j]]));
                }
            }
        }
    }
    CsrMatrix::from_triplets(n, n, trip)
}

/// One far-field interaction of a level class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairKind {
    /// Same-level interaction-list pair: compressible by source multipoles.
    VList,
    /// Adaptive W pair (source multipole valid, target too close for a
    /// local expansion); stored exactly.
    WList,
    /// Adaptive X pair (source too close for a multipole); stored exactly.
    XList,
}

#[derive(Debug, Clone)]
pub struct ClassPair {
    /// Target leaf whose points receive the interaction.
    pub target_leaf: usize,
    pub source_box: usize,
    pub kind: PairKind,
}

/// Interactions of level class `ell` (per target leaf; see module docs).
pub fn class_pairs<T: Real>(tree: &QuadTree<T>, ell: usize) -> Vec<ClassPair> {
    assert!(tree.lists_built(), "call build_lists first");
    assert!(ell >= 1);
    let mut out = Vec::new();
    for b in tree.leaves() {
        let Some(a) = tree.ancestor(b, ell - 1) else {
            continue;
        };
        for &v in &tree.boxes[a].v_list {
            out.push(ClassPair {
                target_leaf: b,
                source_box: v,
                kind: PairKind::VList,
            });
        }
        for &x in &tree.boxes[a].x_list {
            out.push(ClassPair {
                target_leaf: b,
                source_box: x,
                kind: PairKind::XList,
            });
        }
        if ell == 1 {
            for &w in &tree.boxes[b].w_list {
                out.push(ClassPair {
                    target_leaf: b,
                    source_box: w,
                    kind: PairKind::WList,
                });
            }
        }
    }
    out
}

/// Dense matrix of one level class (exact blocks copied from `D_N`).
pub fn class_matrix_dense<T: Real>(
    tree: &QuadTree<T>,
    op: &DenseOperator<T>,
    ell: usize,
) -> Array2<T> {
    let n = op.len();
    let mut m = Array2::zeros((n, n));
    for pair in class_pairs(tree, ell) {
        for &i in &tree.boxes[pair.target_leaf].points {
            for &j in &tree.boxes[pair.source_box].points {
                m[[i, j]] = op.matrix[[i, j]];
            }
        }
    }
    m
}

/// Low-rank factorization of a level class: `D_ℓ ≈ left · rightᵀ + extra`
/// with `p` complex multipole moments per source box (real-unpacked, so
/// `2p` columns per box) and the W/X pairs stored exactly in `extra`.
#[derive(Debug, Clone)]
pub struct LevelFactor<T> {
    pub level: usize,
    pub moments: usize,
    pub left: Array2<T>,
    pub right: Array2<T>,
    pub extra: Option<CsrMatrix<T>>,
}

impl<T: Real> LevelFactor<T> {
    pub fn apply(&self, v: &Array1<T>) -> Array1<T> {
        let mut out = self.left.dot(&self.right.t().dot(v));
        if let Some(e) = &self.extra {
            out += &e.matvec(v);
        }
        out
    }

    pub fn to_dense(&self) -> Array2<T> {
        let mut m = self.left.dot(&self.right.t());
        if let Some(e) = &self.extra {
            m += &e.to_dense();
        }
        m
    }

    /// Columns of the moment factor (`2p` per participating source box).
    pub fn n_columns(&self) -> usize {
        self.right.ncols()
    }
}

/// Builds the `p`-moment factorization of level class `ell ∈ {1, 2}`.
///
/// Moments are coefficients of the complex dipole expansion of the scaled
/// double-layer about each source box center: for sources in box `v`,
/// `a_m = Σ_k η_k · n_k w_k (y_k − z_v)^m / h^m`, and targets evaluate
/// `−(1/π)·Re Σ_m a_m · h^m (x_j − z_v)^{−(m+1)}` (the multipole-to-target
/// translation is absorbed in the left factor). W/X pairs go to `extra`
/// exactly.
pub fn compress_level<T: Real>(
    tree: &QuadTree<T>,
    op: &DenseOperator<T>,
    ell: usize,
    p: usize,
) -> Result<LevelFactor<T>> {
    if p < 1 {
        return Err(Error::InvalidParameter("moment count p must be >= 1".into()));
    }
    if !(ell == 1 || ell == 2) {
        return Err(Error::InvalidParameter(
            "compressed level classes are 1 and 2".into(),
        ));
    }
    let n = op.len();
    let grid = &op.grid;
    let pairs = class_pairs(tree, ell);
    // unique compressible source boxes, in stable order
    let mut source_boxes: Vec<usize> = pairs
        .iter()
        .filter(|q| q.kind == PairKind::VList)
        .map(|q| q.source_box)
        .collect();
    source_boxes.sort_unstable();
    source_boxes.dedup();
    let col_of: std::collections::HashMap<usize, usize> = source_boxes
        .iter()
        .enumerate()
        .map(|(c, &b)| (b, c))
        .collect();
    let cols = 2 * p * source_boxes.len();
    let mut right = Array2::zeros((n, cols));
    let mut left = Array2::zeros((n, cols));
    let inv_pi = -(T::one() / T::PI());
    for (c, &v) in source_boxes.iter().enumerate() {
        let bx = &tree.boxes[v];
        let zc = Complex::new(bx.center.0, bx.center.1);
        let h = bx.half_width;
        for &k in &bx.points {
            let nk = Complex::new(grid.normal_x[k], grid.normal_y[k]);
            let yk = Complex::new(grid.x[k], grid.y[k]);
            let base = nk * grid.weight(k);
            let mut pow = Complex::new(T::one(), T::zero());
            for m in 0..p {
                let cm = base * pow;
                right[[k, 2 * p * c + 2 * m]] = cm.re;
                right[[k, 2 * p * c + 2 * m + 1]] = cm.im;
                pow = pow * (yk - zc) / Complex::new(h, T::zero());
            }
        }
    }
    // evaluation rows: each target leaf that sees box v through a V pair
    let mut seen = std::collections::HashSet::new();
    for q in &pairs {
        if q.kind != PairKind::VList || !seen.insert((q.target_leaf, q.source_box)) {
            continue;
        }
        let c = col_of[&q.source_box];
        let bx = &tree.boxes[q.source_box];
        let zc = Complex::new(bx.center.0, bx.center.1);
        let h = Complex::new(bx.half_width, T::zero());
        for &j in &tree.boxes[q.target_leaf].points {
            let xj = Complex::new(grid.x[j], grid.y[j]);
            let dinv = (xj - zc).inv();
            let mut e = dinv; // h^m (x - z)^{-(m+1)} at m=0
            for m in 0..p {
                left[[j, 2 * p * c + 2 * m]] = inv_pi * e.re;
                left[[j, 2 * p * c + 2 * m + 1]] = -(inv_pi * e.im);
                e = e * h * dinv;
            }
        }
    }
    // exact sparse part: W and X pairs
    let mut trip = Vec::new();
    for q in &pairs {
        if q.kind == PairKind::VList {
            continue;
        }
        for &i in &tree.boxes[q.target_leaf].points {
            for &j in &tree.boxes[q.source_box].points {
                trip.push((i, j, op.matrix[[i, j]]));
            }
        }
    }
    let extra = if trip.is_empty() {
        None
    } else {
        Some(CsrMatrix::from_triplets(n, n, trip))
    };
    Ok(LevelFactor {
        level: ell,
        moments: p,
        left,
        right,
        extra,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, CurveSpec};
    use crate::nystrom::assemble;
    use ndarray_linalg::OperationNorm;

    fn grid_points(spec: CurveSpec<f64>, n: usize) -> Vec<(f64, f64)> {
        let g = build_grid(spec, n).unwrap();
        (0..n).map(|j| g.point(j)).collect()
    }

    #[test]
    fn few_points_make_single_leaf() {
        let pts = vec![(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)];
        let t = build_tree(&pts, 4).unwrap();
        assert_eq!(t.boxes.len(), 1);
        assert!(t.boxes[0].is_leaf);
        assert_eq!(t.depth(), 0);
    }

    #[test]
    fn leaves_partition_points() {
        let pts = grid_points(CurveSpec::Ellipse { aspect: 1.0 }, 64);
        let t = build_tree(&pts, 4).unwrap();
        let mut total = 0;
        for b in t.leaves() {
            assert!(t.boxes[b].points.len() <= 4);
            total += t.boxes[b].points.len();
        }
        assert_eq!(total, 64);
        for p in 0..64 {
            assert!(t.boxes[t.leaf_of[p]].points.contains(&p));
        }
    }

    #[test]
    fn flower8_tree_depth() {
        let pts = grid_points(CurveSpec::Flower { lobes: 8 }, 4096);
        let t = build_tree(&pts, 10).unwrap();
        let d = t.depth();
        assert!((9..=13).contains(&d), "depth {d}");
    }

    #[test]
    fn coincident_points_are_rejected() {
        let pts = vec![(0.5, 0.5); 10];
        assert!(build_tree(&pts, 4).is_err());
    }

    fn uniform_grid_tree(cells: usize) -> QuadTree<f64> {
        // one point per cell center of a cells×cells grid
        let mut pts = Vec::new();
        for i in 0..cells {
            for j in 0..cells {
                pts.push((
                    (i as f64 + 0.5) / cells as f64,
                    (j as f64 + 0.5) / cells as f64,
                ));
            }
        }
        build_lists(build_tree(&pts, 1).unwrap())
    }

    #[test]
    fn uniform_interior_u_list_is_nine() {
        let t = uniform_grid_tree(4);
        // pick the leaf holding the point nearest (0.375, 0.375): grid cell (1,1)
        let target = t
            .leaves()
            .find(|&b| t.boxes[b].ix == 1 && t.boxes[b].iy == 1 && t.boxes[b].level == 2)
            .unwrap();
        assert_eq!(t.boxes[target].u_list.len(), 9);
        assert!(t.boxes[target].u_list.contains(&target));
    }

    #[test]
    fn uniform_interior_v_list_is_27() {
        let t = uniform_grid_tree(8);
        let target = t
            .leaves()
            .find(|&b| t.boxes[b].ix == 3 && t.boxes[b].iy == 3 && t.boxes[b].level == 3)
            .unwrap();
        assert_eq!(t.boxes[target].v_list.len(), 27);
    }

    #[test]
    fn usual_lists_symmetry() {
        let pts = grid_points(CurveSpec::Flower { lobes: 4 }, 256);
        let t = build_lists(build_tree(&pts, 4).unwrap());
        for b in t.leaves() {
            assert!(t.boxes[b].u_list.contains(&b));
            for &u in &t.boxes[b].u_list {
                if t.boxes[u].level == t.boxes[b].level {
                    assert!(t.boxes[u].u_list.contains(&b), "U symmetry {b} {u}");
                }
            }
        }
    }

    #[test]
    fn coverage_partition_brute_force() {
        let pts = grid_points(CurveSpec::Flower { lobes: 4 }, 256);
        let n = pts.len();
        let t = build_lists(build_tree(&pts, 4).unwrap());
        for b in t.leaves() {
            let mut hits = vec![0usize; n];
            for &u in &t.boxes[b].u_list {
                for &j in &t.boxes[u].points {
                    hits[j] += 1;
                }
            }
            for &w in &t.boxes[b].w_list {
                for &j in &t.boxes[w].points {
                    hits[j] += 1;
                }
            }
            let mut a = Some(b);
            while let Some(i) = a {
                for &v in &t.boxes[i].v_list {
                    for &j in &t.boxes[v].points {
                        hits[j] += 1;
                    }
                }
                for &x in &t.boxes[i].x_list {
                    for &j in &t.boxes[x].points {
                        hits[j] += 1;
                    }
                }
                a = t.boxes[i].parent;
            }
            for (j, &h) in hits.iter().enumerate() {
                assert_eq!(h, 1, "target leaf {b}, source point {j} hit {h} times");
            }
        }
    }

    #[test]
    fn near_matrix_single_leaf_is_dense() {
        let g = build_grid(CurveSpec::<f64>::Ellipse { aspect: 1.0 }, 16).unwrap();
        let op = assemble(&g);
        let pts: Vec<_> = (0..16).map(|j| g.point(j)).collect();
        let t = build_lists(build_tree(&pts, 16).unwrap());
        let d0 = near_matrix(&t, &op);
        let diff = (&d0.to_dense() - &op.matrix).opnorm_fro().unwrap();
        assert!(diff < 1e-15);
    }

    #[test]
    fn near_matrix_sparsity_flower8() {
        let g = build_grid(CurveSpec::<f64>::Flower { lobes: 8 }, 4096).unwrap();
        let op = assemble(&g);
        let pts: Vec<_> = (0..4096).map(|j| g.point(j)).collect();
        let t = build_lists(build_tree(&pts, 10).unwrap());
        let d0 = near_matrix(&t, &op);
        let frac = d0.nnz() as f64 / (4096.0 * 4096.0);
        assert!(frac < 0.05, "nnz fraction {frac}");
    }

    #[test]
    fn exact_decomposition_reassembles_operator() {
        let g = build_grid(CurveSpec::<f64>::Flower { lobes: 4 }, 512).unwrap();
        let op = assemble(&g);
        let pts: Vec<_> = (0..512).map(|j| g.point(j)).collect();
        let t = build_lists(build_tree(&pts, 4).unwrap());
        let mut sum = near_matrix(&t, &op).to_dense();
        for ell in 1..=t.max_class() {
            sum += &class_matrix_dense(&t, &op, ell);
        }
        let err = (&sum - &op.matrix).opnorm_fro().unwrap();
        assert!(err < 1e-13, "reassembly error {err:e}");
    }

    #[test]
    fn compress_well_separated_clusters() {
        // two clusters of 32 points each, distance 8 x cluster radius
        let mut pts = Vec::new();
        for i in 0..32 {
            let a = 2.0 * std::f64::consts::PI * i as f64 / 32.0;
            pts.push((0.5 * a.cos(), 0.5 * a.sin()));
        }
        for i in 0..32 {
            let a = 2.0 * std::f64::consts::PI * i as f64 / 32.0;
            pts.push((8.0 + 0.5 * a.cos(), 0.5 * a.sin()));
        }
        // a fake grid carrying normals/weights for the kernel
        let g = build_grid(CurveSpec::<f64>::Ellipse { aspect: 1.0 }, 64).unwrap();
        let mut g2 = g.clone();
        for (j, &(x, y)) in pts.iter().enumerate() {
            g2.x[j] = x;
            g2.y[j] = y;
        }
        let op = assemble(&g2);
        let t = build_lists(build_tree(&pts, 32).unwrap());
        // find a V pair and compare the compressed block against the dense one
        let lf = compress_level(&t, &op, 1, 4).unwrap();
        let dense = class_matrix_dense(&t, &op, 1);
        if dense.opnorm_fro().unwrap() > 0.0 {
            let err = (&lf.to_dense() - &dense).opnorm_fro().unwrap() / dense.opnorm_fro().unwrap();
            assert!(err <= 1e-3, "relative error {err:e}");
        }
    }

    #[test]
    fn compression_error_is_nonincreasing_in_p() {
        let g = build_grid(CurveSpec::<f64>::Flower { lobes: 4 }, 256).unwrap();
        let op = assemble(&g);
        let pts: Vec<_> = (0..256).map(|j| g.point(j)).collect();
        let t = build_lists(build_tree(&pts, 4).unwrap());
        let dense = class_matrix_dense(&t, &op, 1);
        let mut last = f64::INFINITY;
        for p in [2usize, 4, 8, 16] {
            let lf = compress_level(&t, &op, 1, p).unwrap();
            let err = (&lf.to_dense() - &dense).opnorm_fro().unwrap();
            assert!(err <= last * (1.0 + 1e-12), "p={p}: {err:e} vs {last:e}");
            last = err;
        }
        // plenty of moments reconstructs the class to near machine accuracy
        let lf = compress_level(&t, &op, 1, 26).unwrap();
        let err = (&lf.to_dense() - &dense).opnorm_fro().unwrap() / dense.opnorm_fro().unwrap();
        assert!(err < 1e-10, "p=26 relative error {err:e}");
    }

    #[test]
    fn moment_column_accounting() {
        let g = build_grid(CurveSpec::<f64>::Flower { lobes: 4 }, 256).unwrap();
        let op = assemble(&g);
        let pts: Vec<_> = (0..256).map(|j| g.point(j)).collect();
        let t = build_lists(build_tree(&pts, 4).unwrap());
        let p = 4;
        let lf = compress_level(&t, &op, 1, p).unwrap();
        let mut boxes: Vec<usize> = class_pairs(&t, 1)
            .into_iter()
            .filter(|q| q.kind == PairKind::VList)
            .map(|q| q.source_box)
            .collect();
        boxes.sort_unstable();
        boxes.dedup();
        assert_eq!(lf.n_columns(), 2 * p * boxes.len());
    }

    #[test]
    fn zero_density_gives_zero_output() {
        let g = build_grid(CurveSpec::<f64>::Flower { lobes: 4 }, 128).unwrap();
        let op = assemble(&g);
        let pts: Vec<_> = (0..128).map(|j| g.point(j)).collect();
        let t = build_lists(build_tree(&pts, 4).unwrap());
        let lf = compress_level(&t, &op, 1, 4).unwrap();
        let z = Array1::zeros(128);
        assert!(lf.apply(&z).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn invalid_moments_rejected() {
        let g = build_grid(CurveSpec::<f64>::Ellipse { aspect: 1.0 }, 64).unwrap();
        let op = assemble(&g);
        let pts: Vec<_> = (0..64).map(|j| g.point(j)).collect();
        let t = build_lists(build_tree(&pts, 4).unwrap());
        assert!(compress_level(&t, &op, 1, 0).is_err());
        assert!(compress_level(&t, &op, 3, 4).is_err());
    }

    #[test]
    fn tree_dump_format() {
        let pts = grid_points(CurveSpec::Ellipse { aspect: 1.0 }, 16);
        let t = build_tree(&pts, 4).unwrap();
        let mut buf = Vec::new();
        t.write_dump(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let first = s.lines().next().unwrap();
        assert_eq!(first.split(',').count(), 6);
        assert!(first.starts_with("0,"));
    }
}
