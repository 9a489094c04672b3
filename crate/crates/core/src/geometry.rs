//! Dyadic grids, cubes and the combinatorial predicates built on them:
//! deep embedding, goodness, maximal deep subcube decompositions, dilation
//! overlap counts, end/side classification and line shadows.
//!
//! A cube at level `k` has side `2^{-k}`; levels may be negative. All boxes
//! are half-open, `∏ [aᵢ, aᵢ + side)`, so a point lies in exactly one cube
//! per level and atom membership is deterministic.

use serde::{Deserialize, Serialize};

use crate::measure::{DiscreteMeasure, LineSpec};
use crate::{Error, Result};

/// Side length of a cube at the given level.
#[inline]
pub fn side_at_level(level: i32) -> f64 {
    f64::exp2(-(level as f64))
}

/// A translated dyadic grid together with the enumeration window used when
/// taking suprema: levels in `[level_min, level_max]`, confined to `root`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dimension: usize,
    /// Translation of the grid in units of the level-0 cube, componentwise in [0,1).
    pub shift: Vec<f64>,
    pub level_min: i32,
    pub level_max: i32,
    /// Integer coordinates of the root cube at `level_min`.
    pub root_coords: Vec<i64>,
}

impl GridSpec {
    pub fn new(
        dimension: usize,
        shift: Vec<f64>,
        level_min: i32,
        level_max: i32,
        root_coords: Vec<i64>,
    ) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Validation("grid dimension must be ≥ 1".into()));
        }
        if shift.len() != dimension || root_coords.len() != dimension {
            return Err(Error::Validation("grid shift/root dimension mismatch".into()));
        }
        if shift.iter().any(|s| !(0.0..1.0).contains(s)) {
            return Err(Error::Validation("grid shift must be in [0,1) componentwise".into()));
        }
        if level_min > level_max {
            return Err(Error::Validation("level_min must be ≤ level_max".into()));
        }
        Ok(GridSpec { dimension, shift, level_min, level_max, root_coords })
    }

    /// Grid whose root (at `level_min`) contains `anchor`.
    pub fn covering(
        dimension: usize,
        shift: Vec<f64>,
        level_min: i32,
        level_max: i32,
        anchor: &[f64],
    ) -> Result<Self> {
        let side = side_at_level(level_min);
        let root_coords = anchor
            .iter()
            .zip(&shift)
            .map(|(x, s)| ((x - s) / side).floor() as i64)
            .collect();
        GridSpec::new(dimension, shift, level_min, level_max, root_coords)
    }

    pub fn root(&self) -> Cube {
        Cube { level: self.level_min, coords: self.root_coords.clone() }
    }
}

/// A dyadic cube: level plus integer coordinates in its grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cube {
    pub level: i32,
    pub coords: Vec<i64>,
}

impl Cube {
    pub fn side(&self) -> f64 {
        side_at_level(self.level)
    }

    /// Lower (closed) corner of the half-open box.
    pub fn lower(&self, grid: &GridSpec) -> Vec<f64> {
        let side = self.side();
        self.coords
            .iter()
            .zip(&grid.shift)
            .map(|(m, s)| s + (*m as f64) * side)
            .collect()
    }

    /// Upper (open) corner of the half-open box.
    pub fn upper(&self, grid: &GridSpec) -> Vec<f64> {
        let side = self.side();
        self.lower(grid).into_iter().map(|a| a + side).collect()
    }

    pub fn center(&self, grid: &GridSpec) -> Vec<f64> {
        let half = self.side() * 0.5;
        self.lower(grid).into_iter().map(|a| a + half).collect()
    }

    /// |Q| = side^n.
    pub fn volume(&self, grid: &GridSpec) -> f64 {
        self.side().powi(grid.dimension as i32)
    }

    /// Half-open membership test.
    pub fn contains_point(&self, grid: &GridSpec, x: &[f64]) -> bool {
        let side = self.side();
        self.lower(grid).iter().zip(x).all(|(a, xi)| *a <= *xi && *xi < *a + side)
    }

    /// The 2ⁿ children, in lexicographic corner order.
    pub fn children(&self, grid: &GridSpec) -> Vec<Cube> {
        let n = grid.dimension;
        (0..(1usize << n))
            .map(|bits| Cube {
                level: self.level + 1,
                coords: self
                    .coords
                    .iter()
                    .enumerate()
                    .map(|(i, m)| 2 * m + ((bits >> i) & 1) as i64)
                    .collect(),
            })
            .collect()
    }

    /// Ancestor at the given (coarser or equal) level.
    pub fn ancestor_at(&self, level: i32) -> Cube {
        debug_assert!(level <= self.level);
        let k = (self.level - level) as u32;
        Cube { level, coords: self.coords.iter().map(|m| m >> k).collect() }
    }

    /// Non-strict dyadic inclusion `other ⊆ self` (same grid assumed).
    pub fn contains_cube(&self, other: &Cube) -> bool {
        self.level <= other.level && other.ancestor_at(self.level) == *self
    }

    /// Axis-aligned box with the same center and side `gamma`-times larger,
    /// kept half-open. This is the dilation `γJ`.
    pub fn dilated_box(&self, grid: &GridSpec, gamma: f64) -> (Vec<f64>, Vec<f64>) {
        let c = self.center(grid);
        let half = 0.5 * gamma * self.side();
        (c.iter().map(|v| v - half).collect(), c.iter().map(|v| v + half).collect())
    }
}

/// Half-open box membership used for dilations.
pub fn box_contains(lo: &[f64], hi: &[f64], x: &[f64]) -> bool {
    lo.iter().zip(hi).zip(x).all(|((a, b), xi)| *a <= *xi && *xi < *b)
}

/// Dyadic combinatorics knobs: goodness parameters r, ε, the dilation factors
/// γ > γ′ > 2, the axial/transverse split constant C₀ and the refinement cap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoodnessParams {
    pub r: u32,
    pub epsilon: f64,
    pub gamma: f64,
    pub gamma_prime: f64,
    pub c0: f64,
    pub ell_max: u32,
}

impl Default for GoodnessParams {
    fn default() -> Self {
        GoodnessParams { r: 4, epsilon: 0.5, gamma: 4.0, gamma_prime: 2.5, c0: 0.2, ell_max: 2 }
    }
}

impl GoodnessParams {
    /// Structural checks that do not depend on the scenario (n, α).
    pub fn validate(&self) -> Result<()> {
        if self.r == 0 {
            return Err(Error::Validation("goodness r must be a positive integer".into()));
        }
        if !(0.0 < self.epsilon && self.epsilon < 1.0) {
            return Err(Error::Validation("goodness epsilon must be in (0,1)".into()));
        }
        if self.gamma < 2.0 {
            return Err(Error::Validation("gamma must be ≥ 2".into()));
        }
        if !(2.0 < self.gamma_prime && self.gamma_prime < self.gamma) {
            return Err(Error::Validation("gamma_prime must satisfy 2 < γ' < γ".into()));
        }
        if self.c0 <= 0.0 {
            return Err(Error::Validation("c0 must be positive".into()));
        }
        Ok(())
    }

    /// γ ≥ sqrt(2/(n−α)), required by the end-region difference-quotient
    /// reversal.
    pub fn gamma_admissible(&self, n: usize, alpha: f64) -> bool {
        self.gamma >= (2.0 / (n as f64 - alpha)).sqrt()
    }

    /// C₀ ≤ (γ/2γ′)·(n−α)/(n+1−α), the axial-case constraint.
    pub fn c0_admissible(&self, n: usize, alpha: f64) -> bool {
        let na = n as f64 - alpha;
        self.c0 <= (self.gamma / (2.0 * self.gamma_prime)) * na / (na + 1.0)
    }

    /// (n+1−α)·{γ′/(γC₀) + (γ′/γ)²} ≤ (n−α)/2, the transverse-case
    /// constraint. Fails for the default γ; the strong reversal diagnostics
    /// require a dedicated large-γ parameter set.
    pub fn transverse_admissible(&self, n: usize, alpha: f64) -> bool {
        let na = n as f64 - alpha;
        let ratio = self.gamma_prime / self.gamma;
        (na + 1.0) * (self.gamma_prime / (self.gamma * self.c0) + ratio * ratio) <= 0.5 * na
    }
}

/// ℓ-fold dyadic parent, staying within the grid window.
pub fn parent(grid: &GridSpec, q: &Cube, ell: u32) -> Result<Cube> {
    let target = q.level - ell as i32;
    if target < grid.level_min {
        return Err(Error::Range(format!(
            "parent walk to level {target} underflows level_min {}",
            grid.level_min
        )));
    }
    Ok(q.ancestor_at(target))
}

/// Euclidean distance from the closed box of `j` to the boundary of the
/// closed box of `k`, assuming `j ⊆ k`. For nested axis-aligned boxes this is
/// the smallest face gap.
pub fn dist_to_boundary(grid: &GridSpec, j: &Cube, k: &Cube) -> f64 {
    let (jl, ju) = (j.lower(grid), j.upper(grid));
    let (kl, ku) = (k.lower(grid), k.upper(grid));
    let mut d = f64::INFINITY;
    for i in 0..grid.dimension {
        d = d.min(jl[i] - kl[i]).min(ku[i] - ju[i]);
    }
    d.max(0.0)
}

/// `J ⋐_r K`: J ⊂ K, side(J) ≤ 2^{-r} side(K) and
/// dist(J, ∂K) ≥ ½ side(J)^ε side(K)^{1-ε}.
pub fn is_deeply_embedded(grid: &GridSpec, j: &Cube, k: &Cube, p: &GoodnessParams) -> bool {
    if !k.contains_cube(j) || j == k {
        return false;
    }
    // Side ratio compares exactly on levels.
    if j.level < k.level + p.r as i32 {
        return false;
    }
    // ½ sideJ^ε sideK^{1-ε} = 2^{-ε kJ - (1-ε) kK - 1}; exp2 keeps the dyadic
    // boundary cases exact.
    let threshold =
        f64::exp2(-p.epsilon * j.level as f64 - (1.0 - p.epsilon) * k.level as f64 - 1.0);
    dist_to_boundary(grid, j, k) >= threshold
}

/// `J` is r-nearby in `K`: J ⊆ K with side(J) strictly greater than
/// 2^{-r} side(K). The good-cube test below uses the non-strict complement,
/// so the two predicates deliberately differ at exact equality.
pub fn is_nearby(j: &Cube, k: &Cube, p: &GoodnessParams) -> bool {
    k.contains_cube(j) && j.level < k.level + p.r as i32
}

/// (r,ε)-goodness of `j` relative to every dyadic supercube up to the grid
/// root: each strict supercube must either be within r levels or deeply
/// embed `j`.
pub fn is_good(grid: &GridSpec, j: &Cube, p: &GoodnessParams) -> bool {
    let root = grid.root();
    if !root.contains_cube(j) {
        // Outside the configured window the quantifier is vacuous.
        return true;
    }
    let mut level = j.level - 1;
    while level >= grid.level_min {
        // Supercubes within r levels satisfy the nearby arm automatically.
        if j.level - level > p.r as i32 {
            let sup = j.ancestor_at(level);
            if !is_deeply_embedded(grid, j, &sup, p) {
                return false;
            }
        }
        level -= 1;
    }
    true
}

/// The maximal r-deeply embedded dyadic subcubes of `k`, pruned to cubes
/// containing at least one atom of `support` and to levels ≤ `level_max`.
/// Pruned cubes contribute nothing downstream: every projection norm
/// vanishes on an atom-free cube.
pub fn maximal_deep_subcubes(
    grid: &GridSpec,
    k: &Cube,
    p: &GoodnessParams,
    support: &DiscreteMeasure,
) -> Vec<Cube> {
    let inside: Vec<usize> = (0..support.atoms.len())
        .filter(|&i| k.contains_point(grid, &support.atoms[i].location))
        .collect();
    let mut out = Vec::new();
    descend_deep(grid, k, k, p, support, &inside, &mut out);
    out
}

fn descend_deep(
    grid: &GridSpec,
    k: &Cube,
    q: &Cube,
    p: &GoodnessParams,
    support: &DiscreteMeasure,
    atoms: &[usize],
    out: &mut Vec<Cube>,
) {
    if atoms.is_empty() || q.level >= grid.level_max {
        return;
    }
    for child in q.children(grid) {
        let sub: Vec<usize> = atoms
            .iter()
            .copied()
            .filter(|&i| child.contains_point(grid, &support.atoms[i].location))
            .collect();
        if sub.is_empty() {
            continue;
        }
        if is_deeply_embedded(grid, &child, k, p) {
            out.push(child);
        } else {
            descend_deep(grid, k, &child, p, support, &sub, out);
        }
    }
}

/// The refined family `M^ℓ_deep(k)`: maximal deep subcubes of the ℓ-fold
/// parent of `k` that stay inside some maximal deep subcube of `k` itself.
/// For ℓ = 0 this is exactly `maximal_deep_subcubes(k)`.
pub fn refined_deep_subcubes(
    grid: &GridSpec,
    k: &Cube,
    ell: u32,
    p: &GoodnessParams,
    support: &DiscreteMeasure,
) -> Result<Vec<Cube>> {
    if ell > p.ell_max {
        return Err(Error::Validation(format!("ell {ell} exceeds ell_max {}", p.ell_max)));
    }
    if ell == 0 {
        return Ok(maximal_deep_subcubes(grid, k, p, support));
    }
    let up = parent(grid, k, ell)?;
    let outer = maximal_deep_subcubes(grid, &up, p, support);
    let inner = maximal_deep_subcubes(grid, k, p, support);
    Ok(outer
        .into_iter()
        .filter(|j| inner.iter().any(|l| l.contains_cube(j)))
        .collect())
}

/// Maximum overlap count β of the dilated family `{γJ}` over `k`:
/// max over sample points y ∈ k of Σ_J 1_{γJ}(y). Sampling the cell centers
/// and corners of the arrangement induced by the dilated boxes is exact for
/// half-open axis-aligned boxes.
pub fn overlap_constant(grid: &GridSpec, k: &Cube, family: &[Cube], gamma: f64) -> u32 {
    if family.is_empty() {
        return 0;
    }
    let n = grid.dimension;
    let boxes: Vec<(Vec<f64>, Vec<f64>)> =
        family.iter().map(|j| j.dilated_box(grid, gamma)).collect();
    let (kl, ku) = (k.lower(grid), k.upper(grid));

    // Per-axis arrangement endpoints, clipped to k.
    let mut axes: Vec<Vec<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut cuts: Vec<f64> = vec![kl[i], ku[i]];
        for (lo, hi) in &boxes {
            cuts.push(lo[i].clamp(kl[i], ku[i]));
            cuts.push(hi[i].clamp(kl[i], ku[i]));
        }
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup();
        axes.push(cuts);
    }

    // Sample points: every cell center and every arrangement corner.
    let mut samples_per_axis: Vec<Vec<f64>> = Vec::with_capacity(n);
    for cuts in &axes {
        let mut pts = cuts.clone();
        for w in cuts.windows(2) {
            pts.push(0.5 * (w[0] + w[1]));
        }
        samples_per_axis.push(pts);
    }

    let mut best = 0u32;
    let mut point = vec![0.0; n];
    sample_rec(&samples_per_axis, &boxes, &kl, &ku, 0, &mut point, &mut best);
    best
}

fn sample_rec(
    samples: &[Vec<f64>],
    boxes: &[(Vec<f64>, Vec<f64>)],
    kl: &[f64],
    ku: &[f64],
    axis: usize,
    point: &mut Vec<f64>,
    best: &mut u32,
) {
    if axis == samples.len() {
        if !box_contains(kl, ku, point) {
            return;
        }
        let count = boxes.iter().filter(|(lo, hi)| box_contains(lo, hi, point)).count() as u32;
        *best = (*best).max(count);
        return;
    }
    for &v in &samples[axis] {
        point[axis] = v;
        sample_rec(samples, boxes, kl, ku, axis + 1, point, best);
    }
}

/// Where a point sits in the end/side decomposition of `I ∖ γJ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Place {
    /// Inside the dilation J* = γJ (and not in the end cone).
    InsideJstar,
    /// In the flat cone along the x₁-axis: |y¹−c_J¹| ≥ (γ/2)·side(J) and
    /// |y′−c_J′| ≤ |y¹−c_J¹|/γ.
    End,
    /// Everything else inside I.
    Side,
    OutsideI,
}

/// Classify `y` relative to the decomposition `I = γJ ∪̇ E(J*) ∪̇ S(J*)`.
/// The end cone wins on its (measure-zero) overlap with γJ so the labels
/// partition I exactly.
pub fn end_side_classify(grid: &GridSpec, i: &Cube, j: &Cube, gamma: f64, y: &[f64]) -> Place {
    if !i.contains_point(grid, y) {
        return Place::OutsideI;
    }
    let c = j.center(grid);
    let axial = (y[0] - c[0]).abs();
    let transverse: f64 = (1..grid.dimension)
        .map(|t| (y[t] - c[t]) * (y[t] - c[t]))
        .sum::<f64>()
        .sqrt();
    if axial >= 0.5 * gamma * j.side() && transverse <= axial / gamma {
        return Place::End;
    }
    let (lo, hi) = j.dilated_box(grid, gamma);
    if box_contains(&lo, &hi, y) {
        Place::InsideJstar
    } else {
        Place::Side
    }
}

/// Interval on a line, parameterized by arc length from the line's base point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShadowInterval {
    pub center: f64,
    pub half_length: f64,
}

impl ShadowInterval {
    pub fn lo(&self) -> f64 {
        self.center - self.half_length
    }
    pub fn hi(&self) -> f64 {
        self.center + self.half_length
    }
}

/// Carleson shadow of `y` onto the line: the interval of length
/// 2γ·dist(y, L) centered at the point of L closest to y. Degenerates to a
/// single point when y lies on the line.
pub fn carleson_shadow(y: &[f64], gamma: f64, line: &LineSpec) -> ShadowInterval {
    let t = line.project_param(y);
    let foot = line.point_at(t);
    let d = crate::numeric::dist(y, &foot);
    ShadowInterval { center: t, half_length: gamma * d }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{Atom, DiscreteMeasure};

    fn grid1(level_max: i32) -> GridSpec {
        GridSpec::new(1, vec![0.0], 0, level_max, vec![0]).unwrap()
    }

    fn grid2(level_max: i32) -> GridSpec {
        GridSpec::new(2, vec![0.0, 0.0], 0, level_max, vec![0, 0]).unwrap()
    }

    fn cube(level: i32, coords: &[i64]) -> Cube {
        Cube { level, coords: coords.to_vec() }
    }

    fn atoms1(xs: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::new(1, xs.iter().map(|&x| Atom::new(vec![x], 1.0)).collect()).unwrap()
    }

    #[test]
    fn parent_walks_and_underflows() {
        let g = grid1(8);
        // [1/4, 1/2) at level 2 has coords 1.
        let j = cube(2, &[1]);
        assert_eq!(parent(&g, &j, 0).unwrap(), j);
        assert_eq!(parent(&g, &j, 1).unwrap(), cube(1, &[0])); // [0, 1/2)
        assert!(parent(&g, &j, 3).is_err());

        let g2 = grid2(8);
        let q = cube(2, &[0, 0]);
        assert_eq!(parent(&g2, &q, 2).unwrap(), cube(0, &[0, 0]));
    }

    #[test]
    fn half_open_children_tile_parent() {
        let g = grid2(8);
        let q = cube(1, &[1, 0]);
        let kids = q.children(&g);
        assert_eq!(kids.len(), 4);
        // Probe a lattice of points: each point of q is in exactly one child.
        for a in 0..10 {
            for b in 0..10 {
                let x = [0.5 + 0.05 * a as f64, 0.0 + 0.05 * b as f64];
                if q.contains_point(&g, &x) {
                    let hits = kids.iter().filter(|c| c.contains_point(&g, &x)).count();
                    assert_eq!(hits, 1);
                }
            }
        }
        for c in &kids {
            assert_eq!(parent(&g, c, 1).unwrap(), q);
        }
    }

    #[test]
    fn deep_embedding_hand_cases() {
        let p = GoodnessParams { r: 2, epsilon: 0.5, ..Default::default() };
        let g = grid1(8);
        let k = cube(0, &[0]); // [0,1)
        // [1/4,1/2): ratio 1/4 ≤ 1/4 and dist 1/4 ≥ ½·(1/4)^{1/2} = 1/4.
        assert!(is_deeply_embedded(&g, &cube(2, &[1]), &k, &p));
        // [0,1/4): touches the boundary.
        assert!(!is_deeply_embedded(&g, &cube(2, &[0]), &k, &p));

        // n = 2, r = 3: side-2⁻⁵ cube nearest the center of [0,1)².
        let p3 = GoodnessParams { r: 3, epsilon: 0.5, ..Default::default() };
        let g2 = grid2(8);
        let k2 = cube(0, &[0, 0]);
        let j2 = cube(5, &[16, 16]); // lower corner (1/2, 1/2), dist 15/32 to ∂K
        assert!(is_deeply_embedded(&g2, &j2, &k2, &p3));
    }

    #[test]
    fn nearby_is_strict_at_equality() {
        let p = GoodnessParams { r: 2, ..Default::default() };
        let k = cube(0, &[0]);
        assert!(is_nearby(&cube(1, &[0]), &k, &p)); // ratio 1/2 > 1/4
        assert!(!is_nearby(&cube(3, &[0]), &k, &p)); // ratio 1/8 ≤ 1/4
        assert!(!is_nearby(&cube(2, &[0]), &k, &p)); // ratio exactly 2^{-r}
    }

    #[test]
    fn goodness_enumerates_supercubes() {
        let p = GoodnessParams { r: 2, epsilon: 0.5, ..Default::default() };
        let g = grid1(8);
        // [0,1/8): fails deep embedding in [0,1).
        assert!(!is_good(&g, &cube(3, &[0]), &p));
        // [1/2,5/8): nearby in [1/2,3/4) and [1/2,1); deep in [0,1).
        assert!(is_good(&g, &cube(3, &[4]), &p));
        // The root is vacuously good.
        assert!(is_good(&g, &g.root(), &p));
    }

    #[test]
    fn maximal_deep_matches_hand_enumeration() {
        let p = GoodnessParams { r: 2, epsilon: 0.5, ..Default::default() };
        let g = grid1(8);
        let k = cube(0, &[0]);
        let support = atoms1(&[0.375, 0.625]);
        let got = maximal_deep_subcubes(&g, &k, &p, &support);
        assert_eq!(got, vec![cube(2, &[1]), cube(2, &[2])]);

        // Empty support prunes everything.
        let empty = DiscreteMeasure::new(1, vec![]).unwrap();
        assert!(maximal_deep_subcubes(&g, &k, &p, &empty).is_empty());
    }

    #[test]
    fn maximal_deep_brute_force_oracle() {
        // Independent oracle: enumerate every dyadic subcube to level_max,
        // keep the deeply embedded ones and filter to inclusion-maximal,
        // then restrict to atom-carrying cubes.
        let p = GoodnessParams { r: 2, epsilon: 0.5, ..Default::default() };
        let g = grid1(6);
        let k = cube(0, &[0]);
        let support = atoms1(&[0.1875]); // 3/16
        let mut all_deep = Vec::new();
        for level in 1..=g.level_max {
            for m in 0..(1i64 << level) {
                let j = cube(level, &[m]);
                if is_deeply_embedded(&g, &j, &k, &p) {
                    all_deep.push(j);
                }
            }
        }
        let maximal: Vec<Cube> = all_deep
            .iter()
            .filter(|j| !all_deep.iter().any(|l| *l != **j && l.contains_cube(j)))
            .filter(|j| support.atoms.iter().any(|a| j.contains_point(&g, &a.location)))
            .cloned()
            .collect();
        let got = maximal_deep_subcubes(&g, &k, &p, &support);
        assert_eq!(got, maximal);
        // The atom at 3/16 lands in [3/16, 1/4) under the half-open convention.
        assert_eq!(got, vec![cube(4, &[3])]);
    }

    #[test]
    fn refined_level_zero_equals_maximal() {
        let p = GoodnessParams { r: 2, epsilon: 0.5, ..Default::default() };
        let g = grid1(8);
        let k = cube(1, &[0]);
        let support = atoms1(&[0.15, 0.35, 0.42]);
        assert_eq!(
            refined_deep_subcubes(&g, &k, 0, &p, &support).unwrap(),
            maximal_deep_subcubes(&g, &k, &p, &support)
        );
        assert!(refined_deep_subcubes(&g, &k, 2, &p, &support).is_err()); // parent underflow
    }

    #[test]
    fn refined_cubes_have_dilation_inside_parent() {
        let p = GoodnessParams::default();
        let g = grid1(12);
        let support = atoms1(&[0.3, 0.32, 0.55, 0.71]);
        let k = cube(1, &[1]);
        for ell in 0..=1 {
            for j in refined_deep_subcubes(&g, &k, ell, &p, &support).unwrap() {
                let (lo, hi) = j.dilated_box(&g, p.gamma);
                let (kl, ku) = (k.lower(&g), k.upper(&g));
                for t in 0..g.dimension {
                    assert!(lo[t] >= kl[t] - 1e-12 && hi[t] <= ku[t] + 1e-12, "γJ ⊄ K");
                }
            }
        }
    }

    #[test]
    fn overlap_count_interval_arithmetic() {
        let g = grid1(8);
        let k = cube(0, &[0]);
        // Dilates [1/8,5/8) and [3/8,7/8) overlap on [3/8,5/8).
        let family = vec![cube(2, &[1]), cube(2, &[2])];
        assert_eq!(overlap_constant(&g, &k, &family, 2.0), 2);
        assert_eq!(overlap_constant(&g, &k, &family[..1], 2.0), 1);
        assert_eq!(overlap_constant(&g, &k, &[], 2.0), 0);
    }

    #[test]
    fn end_side_partition_examples() {
        // J centered at the origin with side 1, γ = 4; the root extends far
        // into the lower-left quadrant so both test points stay inside I.
        let g = GridSpec::new(2, vec![0.5, 0.5], -6, 8, vec![-1, -1]).unwrap();
        let j = cube(0, &[-1, -1]); // box [-0.5, 0.5)², center (0,0)
        assert_eq!(j.center(&g), vec![0.0, 0.0]);
        let i = g.root(); // [-63.5, 0.5)²
        assert_eq!(end_side_classify(&g, &i, &j, 4.0, &[-10.0, 0.0]), Place::End);
        assert_eq!(end_side_classify(&g, &i, &j, 4.0, &[0.0, -10.0]), Place::Side);
        assert_eq!(end_side_classify(&g, &i, &j, 4.0, &[0.1, -0.3]), Place::InsideJstar);
        assert_eq!(end_side_classify(&g, &i, &j, 4.0, &[1e6, 0.0]), Place::OutsideI);

        // Point-symmetric versions of the cone conditions at positive offset.
        assert_eq!(end_side_classify(&g, &i, &j, 4.0, &[-10.0, -2.4]), Place::End);
        assert_eq!(end_side_classify(&g, &i, &j, 4.0, &[-10.0, -2.6]), Place::Side);
    }

    #[test]
    fn shadow_intervals() {
        let line = LineSpec::x1_axis(2);
        let s = carleson_shadow(&[2.0, 1.0], 4.0, &line);
        assert_eq!((s.lo(), s.hi()), (-2.0, 6.0));
        let s0 = carleson_shadow(&[0.0, 0.0], 4.0, &line);
        assert_eq!((s0.lo(), s0.hi()), (0.0, 0.0));
        let s2 = carleson_shadow(&[5.0, -2.0], 2.0, &line);
        assert_eq!((s2.lo(), s2.hi()), (1.0, 9.0));
    }
}
