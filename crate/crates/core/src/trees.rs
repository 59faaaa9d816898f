//! Rooted tree classes for the kernel bounds: enumeration of the admissible
//! classes with labeled external vertices, weight factors (products of heat
//! kernels over the lines), integrated and global weight factors with the
//! sup over internal line scales, the reduction procedure, and the chain
//! bound for twice-rooted classes.
//!
//! Admissibility: internal vertices have incidence > 1, externals exactly 1,
//! and v2 + [c1 = 1] <= 3l - 2 + s/2 with v2 the number of vertices of
//! incidence 2 (kept as an exact rational comparison). At l = 0 the class is
//! the v2 = 0 trees with root incidence >= 2, except that s = 2 keeps its
//! single-edge tree: the literal inequality would empty the s = 2 class
//! whose base shape the bounds rely on, while anything looser breaks the
//! reduction property that maps the (s+2, l-1) class into (s, l).

use crate::error::{Error, Result};
use crate::grid::GridHalfLine;
use crate::heatkernel::pb;
use crate::sum::NeumaierSum;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VertexKind {
    Root,
    /// Labeled external vertex y_k, 1-based label in 2..=s.
    External(usize),
    Internal,
}

/// Rooted tree with labeled externals. Vertex 0 is the root; every other
/// vertex stores its parent. Lines are identified by their child vertex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tree {
    pub vertices: Vec<VertexKind>,
    /// parent[v] for v >= 1; parent[0] is unused and set to 0.
    pub parent: Vec<usize>,
}

/// Scale assignment for a weight-factor evaluation.
#[derive(Debug, Clone)]
pub struct ScaleAssignment {
    /// Lambda_I per internal line (keyed by child vertex id, ascending).
    pub internal_scales: Vec<(usize, f64)>,
    /// Inflated external widths tau_{k,delta} keyed by external label.
    pub external_widths: Vec<(usize, f64)>,
}

impl Tree {
    pub fn children(&self, v: usize) -> Vec<usize> {
        (1..self.vertices.len()).filter(|&u| self.parent[u] == v).collect()
    }

    pub fn incidence(&self, v: usize) -> usize {
        let deg: usize = (1..self.vertices.len()).filter(|&u| self.parent[u] == v).count();
        if v == 0 {
            deg
        } else {
            deg + 1
        }
    }

    /// Number of vertices with incidence exactly 2 (root included).
    pub fn v2(&self) -> usize {
        (0..self.vertices.len()).filter(|&v| self.incidence(v) == 2).count()
    }

    pub fn root_incidence(&self) -> usize {
        self.incidence(0)
    }

    pub fn internal_count(&self) -> usize {
        self.vertices.iter().filter(|v| **v == VertexKind::Internal).count()
    }

    pub fn external_labels(&self) -> Vec<usize> {
        let mut labels: Vec<usize> = self
            .vertices
            .iter()
            .filter_map(|v| match v {
                VertexKind::External(k) => Some(*k),
                _ => None,
            })
            .collect();
        labels.sort_unstable();
        labels
    }

    /// Internal lines as child vertex ids (lines whose child is internal).
    pub fn internal_lines(&self) -> Vec<usize> {
        (1..self.vertices.len())
            .filter(|&v| self.vertices[v] == VertexKind::Internal)
            .collect()
    }

    /// External lines as (child vertex id, label).
    pub fn external_lines(&self) -> Vec<(usize, usize)> {
        (1..self.vertices.len())
            .filter_map(|v| match self.vertices[v] {
                VertexKind::External(k) => Some((v, k)),
                _ => None,
            })
            .collect()
    }

    /// Canonical parenthesized form: root-first, children sorted by code.
    pub fn canonical_string(&self) -> String {
        fn code(tree: &Tree, v: usize) -> String {
            match tree.vertices[v] {
                VertexKind::External(k) => format!("y{k}"),
                _ => {
                    let mut parts: Vec<String> =
                        tree.children(v).into_iter().map(|c| code(tree, c)).collect();
                    parts.sort();
                    format!("({})", parts.join(" "))
                }
            }
        }
        code(self, 0)
    }

    /// Admissibility of the (s, l) class. Exact rational comparison:
    /// 2 (v2 + [c1 = 1]) <= 6 l - 4 + s for l >= 1; v2 = 0 for l = 0.
    pub fn admissible(&self, s: usize, l: usize) -> bool {
        let labels = self.external_labels();
        if labels.len() + 1 != s || labels.windows(2).any(|w| w[0] == w[1]) {
            return false;
        }
        // Internal vertices must have incidence > 1 (guaranteed by shape:
        // every internal vertex has a parent and at least one child).
        let v2 = self.v2();
        if l == 0 {
            return v2 == 0 && (self.root_incidence() >= 2 || s == 2);
        }
        let c1 = if self.root_incidence() == 1 { 1 } else { 0 };
        2 * (v2 + c1) <= 6 * l + s - 4
    }
}

/// Maximal number of internal vertices an admissible (s, l) tree can carry:
/// the degree-sum identity gives at most s - 2 internals of incidence >= 3,
/// and the v2 budget caps the incidence-2 ones.
pub fn max_internal_vertices(s: usize, l: usize) -> usize {
    let v2_max = if l == 0 { 0 } else { (6 * l + s).saturating_sub(4) / 2 };
    v2_max + s.saturating_sub(2)
}

/// Recursive shape used during enumeration.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Shape {
    External(usize),
    Internal(Vec<Shape>),
}

/// All set partitions of `items` into at least one nonempty block.
fn set_partitions(items: &[usize]) -> Vec<Vec<Vec<usize>>> {
    if items.is_empty() {
        return vec![vec![]];
    }
    let first = items[0];
    let rest = &items[1..];
    let mut out = Vec::new();
    for mut partial in set_partitions(rest) {
        // Insert `first` into each existing block or a new one.
        for b in 0..partial.len() {
            let mut p = partial.clone();
            p[b].push(first);
            p[b].sort_unstable();
            out.push(p);
        }
        partial.push(vec![first]);
        out.push(partial);
    }
    out
}

/// All subtree shapes over the given label set using at most `budget`
/// internal vertices, paired with the internal count used.
fn gen_subtrees(labels: &[usize], budget: usize) -> Vec<(Shape, usize)> {
    let mut out = Vec::new();
    if labels.len() == 1 {
        out.push((Shape::External(labels[0]), 0));
    }
    if budget == 0 {
        return out;
    }
    for partition in set_partitions(labels) {
        if partition.len() == 1 && partition[0].len() == labels.len() {
            // Chain vertex: a single child spanning the same labels.
            for (child, used) in gen_subtrees(labels, budget - 1) {
                out.push((Shape::Internal(vec![child]), used + 1));
            }
        } else if partition.len() >= 2 {
            // Branching internal vertex with one child per block.
            let per_block: Vec<Vec<(Shape, usize)>> =
                partition.iter().map(|b| gen_subtrees(b, budget - 1)).collect();
            let mut stack: Vec<(usize, Vec<Shape>, usize)> = vec![(0, Vec::new(), 0)];
            while let Some((bi, acc, used)) = stack.pop() {
                if bi == per_block.len() {
                    out.push((Shape::Internal(acc), used + 1));
                    continue;
                }
                for (shape, u) in &per_block[bi] {
                    if used + u + 1 <= budget {
                        let mut acc2 = acc.clone();
                        acc2.push(shape.clone());
                        stack.push((bi + 1, acc2, used + u));
                    }
                }
            }
        }
    }
    out
}

fn shape_to_tree(root_children: &[Shape]) -> Tree {
    let mut vertices = vec![VertexKind::Root];
    let mut parent = vec![0usize];
    fn add(shape: &Shape, par: usize, vertices: &mut Vec<VertexKind>, parent: &mut Vec<usize>) {
        match shape {
            Shape::External(k) => {
                vertices.push(VertexKind::External(*k));
                parent.push(par);
            }
            Shape::Internal(children) => {
                vertices.push(VertexKind::Internal);
                parent.push(par);
                let me = vertices.len() - 1;
                for c in children {
                    add(c, me, vertices, parent);
                }
            }
        }
    }
    for c in root_children {
        add(c, 0, &mut vertices, &mut parent);
    }
    Tree { vertices, parent }
}

/// Enumerate the admissible class: all non-isomorphic rooted trees with
/// labeled externals y_2..y_s satisfying the (s, l) constraint, in canonical
/// (deterministic) order. `max_internal` caps the search; the class's own
/// derived bound must fit under it.
pub fn enumerate_trees(s: usize, l: usize, max_internal: usize) -> Result<Vec<Tree>> {
    if s < 1 {
        return Err(Error::domain("tree class needs s >= 1".to_string()));
    }
    if s == 1 {
        // The empty tree: a bare root.
        return Ok(vec![Tree { vertices: vec![VertexKind::Root], parent: vec![0] }]);
    }
    let need = max_internal_vertices(s, l);
    if need > max_internal {
        return Err(Error::Enumeration(format!(
            "class (s = {s}, l = {l}) can use up to {need} internal vertices; cap is {max_internal} \
             (constraint v2 <= 3l - 2 + s/2 plus s - 2 branching vertices)"
        )));
    }
    let labels: Vec<usize> = (2..=s).collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for partition in set_partitions(&labels) {
        let per_block: Vec<Vec<(Shape, usize)>> =
            partition.iter().map(|b| gen_subtrees(b, need)).collect();
        let mut stack: Vec<(usize, Vec<Shape>, usize)> = vec![(0, Vec::new(), 0)];
        while let Some((bi, acc, used)) = stack.pop() {
            if bi == per_block.len() {
                let mut children = acc.clone();
                children.sort();
                let tree = shape_to_tree(&children);
                if tree.admissible(s, l) {
                    let code = tree.canonical_string();
                    if seen.insert(code) {
                        out.push(tree);
                    }
                }
                continue;
            }
            for (shape, u) in &per_block[bi] {
                if used + u <= need {
                    let mut acc2 = acc.clone();
                    acc2.push(shape.clone());
                    stack.push((bi + 1, acc2, used + u));
                }
            }
        }
    }
    out.sort_by_key(|t| t.canonical_string());
    Ok(out)
}

/// Weight factor: product over internal lines of pb((1+delta)/Lambda_I^2)
/// and external lines of pb(tau_{k,delta}), at explicit vertex positions.
pub fn weight_factor(
    tree: &Tree,
    assignment: &ScaleAssignment,
    positions: &[f64],
    delta: f64,
) -> Result<f64> {
    if positions.len() != tree.vertices.len() {
        return Err(Error::shape(format!(
            "positions cover {} vertices, tree has {}",
            positions.len(),
            tree.vertices.len()
        )));
    }
    let mut value = 1.0;
    for v in tree.internal_lines() {
        let lam = assignment
            .internal_scales
            .iter()
            .find(|(id, _)| *id == v)
            .ok_or_else(|| Error::shape(format!("missing scale for internal line {v}")))?
            .1;
        value *= pb((1.0 + delta) / (lam * lam), positions[tree.parent[v]], positions[v])?;
    }
    for (v, label) in tree.external_lines() {
        let tau = assignment
            .external_widths
            .iter()
            .find(|(k, _)| *k == label)
            .ok_or_else(|| Error::shape(format!("missing width for external label {label}")))?
            .1;
        value *= pb(tau, positions[tree.parent[v]], positions[v])?;
    }
    Ok(value)
}

/// Integrate the weight factor over the internal vertex positions on the
/// half-line at fixed line scales, by leaf-to-root elimination on the grid.
/// `taus` and `anchors` are keyed by external label (2..=s).
fn integrate_positions(
    tree: &Tree,
    scales: &[(usize, f64)],
    taus: &[(usize, f64)],
    anchors: &[(usize, f64)],
    z1: f64,
    delta: f64,
    grid: &GridHalfLine,
) -> Result<f64> {
    let lookup = |table: &[(usize, f64)], key: usize| -> Result<f64> {
        table
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::shape(format!("missing entry for key {key}")))
    };
    // Edge width carried by the line above vertex v.
    let width = |v: usize| -> Result<f64> {
        match tree.vertices[v] {
            VertexKind::External(k) => Ok((1.0 + delta) * lookup(taus, k)?),
            VertexKind::Internal => {
                let lam = lookup(scales, v)?;
                Ok((1.0 + delta) / (lam * lam))
            }
            VertexKind::Root => Err(Error::shape("root has no parent line".to_string())),
        }
    };
    // Message of vertex v evaluated at parent position x:
    //   external: pb(w_v; x, y_v)
    //   internal: \int_0^inf dz pb(w_v; x, z) prod_children msg_c(z).
    // Internal products over the grid are cached bottom-up. A width of 0 is
    // the collapsed-line sentinel: the kernel acts as the half-line delta,
    // whose mass is 1 at interior points and 1/2 at the wall (strong Dirac
    // convention).
    fn message(
        tree: &Tree,
        v: usize,
        x: f64,
        width: &dyn Fn(usize) -> Result<f64>,
        anchors: &[(usize, f64)],
        grid: &GridHalfLine,
        cache: &mut Vec<Option<Vec<f64>>>,
    ) -> Result<f64> {
        match tree.vertices[v] {
            VertexKind::External(k) => {
                let y = anchors
                    .iter()
                    .find(|(kk, _)| *kk == k)
                    .map(|(_, y)| *y)
                    .ok_or_else(|| Error::shape(format!("missing anchor y{k}")))?;
                pb(width(v)?, x, y)
            }
            VertexKind::Internal => {
                let w = width(v)?;
                if w == 0.0 {
                    let mass = if x == 0.0 { 0.5 } else { 1.0 };
                    let mut prod = mass;
                    for c in tree.children(v) {
                        prod *= message(tree, c, x, width, anchors, grid, cache)?;
                    }
                    return Ok(prod);
                }
                if cache[v].is_none() {
                    let mut inner = vec![1.0; grid.len()];
                    for c in tree.children(v) {
                        for (j, val) in inner.iter_mut().enumerate() {
                            *val *= message(tree, c, grid.nodes[j], width, anchors, grid, cache)?;
                        }
                    }
                    cache[v] = Some(inner);
                }
                let inner = cache[v].as_ref().unwrap().clone();
                let mut acc = NeumaierSum::new();
                for (j, &gz) in grid.nodes.iter().enumerate() {
                    acc.add(grid.weights[j] * pb(w, x, gz)? * inner[j]);
                }
                Ok(acc.total())
            }
            VertexKind::Root => Err(Error::shape("message of the root is undefined".to_string())),
        }
    }
    let mut cache: Vec<Option<Vec<f64>>> = vec![None; tree.vertices.len()];
    let mut value = 1.0;
    for c in tree.children(0) {
        value *= message(tree, c, z1, &|v| width(v), anchors, grid, &mut cache)?;
    }
    Ok(value)
}

/// Integrated weight factor: sup over internal-line scales in
/// [Lambda, Lambda0] of the position-integrated weight. Per line the sup is
/// located by an 8-candidate log scan with golden-section refinement over
/// the grid-resolvable scale range, swept twice; scales beyond grid
/// resolution are represented by the exact collapsed-line limit (the kernel
/// becomes the half-line delta), so the far end of the range is handled
/// analytically instead of by unresolvable quadrature.
pub fn integrated_weight(
    lambda: f64,
    lambda0: f64,
    taus: &[(usize, f64)],
    tree: &Tree,
    z1: f64,
    anchors: &[(usize, f64)],
    delta: f64,
    grid: &GridHalfLine,
) -> Result<f64> {
    if !(lambda > 0.0 && lambda <= lambda0) {
        return Err(Error::domain(format!(
            "need 0 < Lambda <= Lambda0, got ({lambda}, {lambda0})"
        )));
    }
    let lines = tree.internal_lines();
    if lines.is_empty() {
        return integrate_positions(tree, &[], taus, anchors, z1, delta, grid);
    }
    // Kernels narrower than ~3 node spacings cannot be integrated on the
    // grid; the reference spacing is taken where kernels concentrate.
    let h_ref = grid.local_spacing(grid.zmax / 6.0);
    let lam_resolve = (1.0 + delta).sqrt() / (3.0 * h_ref);
    let hi = lambda0.min(1e3 * lambda).min(lam_resolve).max(lambda);
    let collapse_reachable = lambda0 > hi;
    let mut scales: Vec<(usize, f64)> = lines.iter().map(|&v| (v, lambda)).collect();
    let eval = |scales: &[(usize, f64)]| -> Result<f64> {
        integrate_positions(tree, scales, taus, anchors, z1, delta, grid)
    };
    let mut best = eval(&scales)?;
    for _sweep in 0..2 {
        for i in 0..scales.len() {
            let mut cand_best = (scales[i].1, best);
            // Log-spaced candidates plus the collapsed-line limit.
            for k in 0..8 {
                let lam_i = lambda * (hi / lambda).powf(k as f64 / 7.0);
                scales[i].1 = lam_i;
                let v = eval(&scales)?;
                if v > cand_best.1 {
                    cand_best = (lam_i, v);
                }
            }
            if collapse_reachable {
                scales[i].1 = f64::INFINITY;
                let v = eval(&scales)?;
                if v > cand_best.1 {
                    cand_best = (f64::INFINITY, v);
                }
            }
            if cand_best.0.is_finite() {
                // Golden-section refinement around the best finite candidate.
                let (mut lo, mut hi_l) =
                    ((cand_best.0 / 3.0).max(lambda), (cand_best.0 * 3.0).min(hi));
                let phi = 0.618_033_988_749_894_9;
                for _ in 0..24 {
                    let a = hi_l - phi * (hi_l - lo);
                    let b = lo + phi * (hi_l - lo);
                    scales[i].1 = a;
                    let fa = eval(&scales)?;
                    scales[i].1 = b;
                    let fb = eval(&scales)?;
                    if fa > fb {
                        hi_l = b;
                        if fa > cand_best.1 {
                            cand_best = (a, fa);
                        }
                    } else {
                        lo = a;
                        if fb > cand_best.1 {
                            cand_best = (b, fb);
                        }
                    }
                }
            }
            scales[i].1 = cand_best.0;
            best = cand_best.1.max(best);
        }
    }
    Ok(best)
}

/// Global weight factor: sum of integrated weights over the admissible
/// class. s = 1 is the empty tree with weight 1.
pub fn global_weight(
    lambda: f64,
    lambda0: f64,
    taus: &[(usize, f64)],
    s: usize,
    l: usize,
    z1: f64,
    anchors: &[(usize, f64)],
    delta: f64,
    grid: &GridHalfLine,
    max_internal: usize,
) -> Result<f64> {
    if s == 1 {
        return Ok(1.0);
    }
    let class = enumerate_trees(s, l, max_internal)?;
    let mut acc = NeumaierSum::new();
    for tree in &class {
        acc.add(integrated_weight(lambda, lambda0, taus, tree, z1, anchors, delta, grid)?);
    }
    Ok(acc.total())
}

/// Chain-form bound for the twice-rooted global weight factor:
/// sum over chain lengths n <= 3l - 2 of sup pb((1+delta)/Lambda_n^2; z1, z2)
/// with Lambda_n^{-2} = sum of the n line scales' inverse squares.
pub fn twice_rooted_chain_bound(
    lambda: f64,
    lambda0: f64,
    l: usize,
    z1: f64,
    z2: f64,
    delta: f64,
) -> Result<f64> {
    if l == 0 {
        return Ok(0.0);
    }
    let n_max = 3 * l - 2;
    let d2 = (z1 - z2) * (z1 - z2);
    let mut acc = NeumaierSum::new();
    for n in 1..=n_max {
        // Combined width range for n lines with scales in [Lambda, Lambda0].
        let w_lo = (1.0 + delta) * n as f64 / (lambda0 * lambda0);
        let w_hi = (1.0 + delta) * n as f64 / (lambda * lambda);
        // pb(w; d) is maximized at w = d^2, clamped to the admissible range.
        let w = d2.clamp(w_lo, w_hi);
        acc.add(pb(w, z1, z2)?);
    }
    Ok(acc.total())
}

/// Outcome of the reduction procedure.
#[derive(Debug, Clone)]
pub struct Reduction {
    /// None when the cascade consumed everything but the root.
    pub tree: Option<Tree>,
    pub removed_internals: usize,
    pub v2_before: usize,
    pub v2_after: usize,
}

/// Remove the two external vertices (by label) with their lines, then
/// repeatedly strip internal vertices of incidence 1 with their lines.
pub fn reduce_tree(tree: &Tree, label_i: usize, label_j: usize) -> Result<Reduction> {
    if label_i == label_j {
        return Err(Error::domain("reduction needs two distinct externals".to_string()));
    }
    let find = |label: usize| -> Result<usize> {
        tree.vertices
            .iter()
            .position(|v| *v == VertexKind::External(label))
            .ok_or_else(|| Error::domain(format!("no external vertex labeled y{label}")))
    };
    let (vi, vj) = (find(label_i)?, find(label_j)?);
    let v2_before = tree.v2();
    let mut alive = vec![true; tree.vertices.len()];
    alive[vi] = false;
    alive[vj] = false;
    let mut removed_internals = 0;
    loop {
        let mut changed = false;
        for v in 1..tree.vertices.len() {
            if !alive[v] || tree.vertices[v] != VertexKind::Internal {
                continue;
            }
            let live_children =
                (1..tree.vertices.len()).filter(|&u| alive[u] && tree.parent[u] == v).count();
            // Incidence of a live internal vertex: live children + parent line.
            if live_children == 0 {
                alive[v] = false;
                removed_internals += 1;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    // Rebuild with compacted ids.
    let mut map = vec![usize::MAX; tree.vertices.len()];
    let mut vertices = Vec::new();
    let mut parent = Vec::new();
    for v in 0..tree.vertices.len() {
        if alive[v] {
            map[v] = vertices.len();
            vertices.push(tree.vertices[v]);
            parent.push(if v == 0 { 0 } else { map[tree.parent[v]] });
        }
    }
    if vertices.len() == 1 {
        return Ok(Reduction { tree: None, removed_internals, v2_before, v2_after: 0 });
    }
    let reduced = Tree { vertices, parent };
    let v2_after = reduced.v2();
    Ok(Reduction { tree: Some(reduced), removed_internals, v2_before, v2_after })
}
