//! Finitely atomic measures, the scenario type bundling a measure pair with
//! its grids and parameters, and the rigid motion taking a supporting line to
//! the x₁-axis.

use serde::{Deserialize, Serialize};

use crate::geometry::{Cube, GoodnessParams, GridSpec};
use crate::numeric::dist;
use crate::transform::Truncation;
use crate::{Error, Result};

pub const LINE_TOL: f64 = 1e-12;

/// A single weighted point mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub location: Vec<f64>,
    pub mass: f64,
}

impl Atom {
    pub fn new(location: Vec<f64>, mass: f64) -> Self {
        Atom { location, mass }
    }
}

/// A finite positive atomic measure on ℝⁿ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteMeasure {
    pub dimension: usize,
    pub atoms: Vec<Atom>,
}

impl DiscreteMeasure {
    pub fn new(dimension: usize, atoms: Vec<Atom>) -> Result<Self> {
        let m = DiscreteMeasure { dimension, atoms };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for a in &self.atoms {
            if a.location.len() != self.dimension {
                return Err(Error::Validation("atom dimension mismatch".into()));
            }
            if !(a.mass > 0.0) || !a.mass.is_finite() {
                return Err(Error::Validation("atom mass must be finite and > 0".into()));
            }
            if a.location.iter().any(|x| !x.is_finite()) {
                return Err(Error::Validation("atom location must be finite".into()));
            }
        }
        for (i, a) in self.atoms.iter().enumerate() {
            for b in &self.atoms[i + 1..] {
                if a.location == b.location {
                    return Err(Error::Validation(format!(
                        "duplicate atom location {:?} within one measure",
                        a.location
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// |Q|_μ: total mass carried by the half-open box of `q`.
    pub fn mass_in(&self, grid: &GridSpec, q: &Cube) -> f64 {
        self.atoms
            .iter()
            .filter(|a| q.contains_point(grid, &a.location))
            .map(|a| a.mass)
            .sum()
    }

    /// Indices of atoms inside the half-open box of `q`.
    pub fn atoms_in(&self, grid: &GridSpec, q: &Cube) -> Vec<usize> {
        (0..self.atoms.len())
            .filter(|&i| q.contains_point(grid, &self.atoms[i].location))
            .collect()
    }

    /// New measure keeping the atoms whose location satisfies the predicate.
    pub fn restrict(&self, keep: impl Fn(&[f64]) -> bool) -> DiscreteMeasure {
        DiscreteMeasure {
            dimension: self.dimension,
            atoms: self.atoms.iter().filter(|a| keep(&a.location)).cloned().collect(),
        }
    }

    /// μ-average of coordinate `j` over `q`. Errors when |q|_μ = 0.
    pub fn mean(&self, grid: &GridSpec, q: &Cube, j: usize) -> Result<f64> {
        let mut mass = 0.0;
        let mut acc = 0.0;
        for a in &self.atoms {
            if q.contains_point(grid, &a.location) {
                mass += a.mass;
                acc += a.mass * a.location[j];
            }
        }
        if mass > 0.0 {
            Ok(acc / mass)
        } else {
            Err(Error::UndefinedMean(format!("cube {q:?} carries no mass")))
        }
    }

    /// Diameter of the support (0 for ≤ 1 atom).
    pub fn diameter_with(&self, other: &DiscreteMeasure) -> f64 {
        let pts: Vec<&Vec<f64>> = self
            .atoms
            .iter()
            .chain(other.atoms.iter())
            .map(|a| &a.location)
            .collect();
        let mut d = 0.0f64;
        for (i, a) in pts.iter().enumerate() {
            for b in &pts[i + 1..] {
                d = d.max(dist(a, b));
            }
        }
        d
    }
}

/// Checks that two measures share no atom location; returns the minimal
/// inter-measure atom distance (+∞ when either side is empty).
pub fn check_no_common_points(sigma: &DiscreteMeasure, omega: &DiscreteMeasure) -> Result<f64> {
    if sigma.dimension != omega.dimension {
        return Err(Error::Validation("measure dimension mismatch".into()));
    }
    let mut d_min = f64::INFINITY;
    for a in &sigma.atoms {
        for b in &omega.atoms {
            if a.location == b.location {
                return Err(Error::Validation(format!(
                    "common point mass at {:?}",
                    a.location
                )));
            }
            d_min = d_min.min(dist(&a.location, &b.location));
        }
    }
    Ok(d_min)
}

/// A line in ℝⁿ through `point` with unit `direction`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineSpec {
    pub point: Vec<f64>,
    pub direction: Vec<f64>,
}

impl LineSpec {
    pub fn new(point: Vec<f64>, direction: Vec<f64>) -> Result<Self> {
        let l = LineSpec { point, direction };
        l.validate()?;
        Ok(l)
    }

    pub fn x1_axis(dimension: usize) -> Self {
        let mut direction = vec![0.0; dimension];
        direction[0] = 1.0;
        LineSpec { point: vec![0.0; dimension], direction }
    }

    pub fn validate(&self) -> Result<()> {
        if self.point.len() != self.direction.len() {
            return Err(Error::Validation("line point/direction dimension mismatch".into()));
        }
        let norm = crate::numeric::norm(&self.direction);
        if (norm - 1.0).abs() > LINE_TOL {
            return Err(Error::Validation(format!(
                "line direction must be a unit vector (‖d‖ = {norm})"
            )));
        }
        Ok(())
    }

    pub fn is_x1_axis(&self) -> bool {
        self.point.iter().all(|&x| x == 0.0)
            && self.direction[0] == 1.0
            && self.direction[1..].iter().all(|&x| x == 0.0)
    }

    /// Arc-length parameter of the orthogonal projection of `y` onto the line.
    pub fn project_param(&self, y: &[f64]) -> f64 {
        y.iter()
            .zip(&self.point)
            .zip(&self.direction)
            .map(|((yi, pi), di)| (yi - pi) * di)
            .sum()
    }

    pub fn point_at(&self, t: f64) -> Vec<f64> {
        self.point
            .iter()
            .zip(&self.direction)
            .map(|(p, d)| p + t * d)
            .collect()
    }

    pub fn distance_to(&self, y: &[f64]) -> f64 {
        dist(y, &self.point_at(self.project_param(y)))
    }
}

/// Which measure a line supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WhichMeasure {
    Sigma,
    Omega,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineSupport {
    #[serde(flatten)]
    pub line: LineSpec,
    pub supports: WhichMeasure,
}

/// A full problem instance: dimension, fractional exponent, measure pair,
/// optional supporting line, dyadic machinery parameters and the grid family
/// used for every supremum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub dimension: usize,
    pub alpha: f64,
    pub sigma: DiscreteMeasure,
    pub omega: DiscreteMeasure,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<LineSupport>,
    pub goodness: GoodnessParams,
    pub grids: Vec<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<Truncation>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let n = self.dimension;
        if n == 0 {
            return Err(Error::Validation("dimension must be ≥ 1".into()));
        }
        if !(0.0 <= self.alpha && self.alpha < n as f64) {
            return Err(Error::Validation(format!(
                "alpha must satisfy 0 ≤ α < n (α = {}, n = {n})",
                self.alpha
            )));
        }
        if self.sigma.dimension != n || self.omega.dimension != n {
            return Err(Error::Validation("measure dimension mismatch with scenario".into()));
        }
        self.sigma.validate()?;
        self.omega.validate()?;
        check_no_common_points(&self.sigma, &self.omega)?;
        self.goodness.validate()?;
        if !self.goodness.gamma_admissible(n, self.alpha) {
            return Err(Error::Validation(format!(
                "gamma {} below sqrt(2/(n-α)) = {}",
                self.goodness.gamma,
                (2.0 / (n as f64 - self.alpha)).sqrt()
            )));
        }
        if !self.goodness.c0_admissible(n, self.alpha) {
            return Err(Error::Validation(
                "c0 exceeds (γ/2γ')·(n−α)/(n+1−α)".into(),
            ));
        }
        if self.grids.is_empty() {
            return Err(Error::Validation("scenario needs at least one grid".into()));
        }
        for g in &self.grids {
            if g.dimension != n {
                return Err(Error::Validation("grid dimension mismatch".into()));
            }
        }
        if let Some(ls) = &self.line {
            ls.line.validate()?;
            if ls.line.point.len() != n {
                return Err(Error::Validation("line dimension mismatch".into()));
            }
            let m = self.flagged_measure();
            for a in &m.atoms {
                if ls.line.distance_to(&a.location) > LINE_TOL {
                    return Err(Error::Validation(format!(
                        "flagged measure atom {:?} is off the declared line",
                        a.location
                    )));
                }
            }
        }
        if let Some(t) = &self.truncation {
            t.validate()?;
        }
        Ok(())
    }

    pub fn flagged_measure(&self) -> &DiscreteMeasure {
        match self.line.as_ref().map(|l| l.supports) {
            Some(WhichMeasure::Sigma) => &self.sigma,
            _ => &self.omega,
        }
    }

    /// Effective truncation: the explicit override, or the shielded default
    /// δ = d_min/2, R = 2·diam(supp σ ∪ supp ω). With the default, every
    /// atom pair falls in the pure power-law window so all constants equal
    /// their untruncated values.
    pub fn effective_truncation(&self) -> Result<Truncation> {
        if let Some(t) = &self.truncation {
            return Ok(t.clone());
        }
        let d_min = check_no_common_points(&self.sigma, &self.omega)?;
        let diam = self.sigma.diameter_with(&self.omega);
        let (delta, r_outer) = if d_min.is_finite() && d_min > 0.0 {
            (0.5 * d_min, (2.0 * diam).max(d_min * 4.0))
        } else {
            (1.0, 4.0)
        };
        Truncation::new(delta, r_outer, self.dimension, self.alpha)
    }

    /// Rigidly move both measures (and the line) so the flagged line becomes
    /// the x₁-axis. Kernels and Poisson integrals are isometry-covariant, so
    /// constants computed in the new frame are legitimate values for the
    /// original pair. Grids are re-imposed in the new frame.
    pub fn canonicalize_line(&self) -> Result<Scenario> {
        let support = self
            .line
            .as_ref()
            .ok_or_else(|| Error::Validation("scenario has no flagged line".into()))?;
        if support.line.is_x1_axis() {
            return Ok(self.clone());
        }
        let rotation = rotation_to_e1(&support.line.direction)?;
        let map = |x: &[f64]| -> Vec<f64> {
            let shifted: Vec<f64> =
                x.iter().zip(&support.line.point).map(|(xi, pi)| xi - pi).collect();
            rotation.iter().map(|row| row.iter().zip(&shifted).map(|(r, s)| r * s).sum()).collect()
        };
        let move_measure = |m: &DiscreteMeasure| DiscreteMeasure {
            dimension: m.dimension,
            atoms: m
                .atoms
                .iter()
                .map(|a| Atom::new(map(&a.location), a.mass))
                .collect(),
        };
        let mut out = self.clone();
        out.sigma = move_measure(&self.sigma);
        out.omega = move_measure(&self.omega);
        out.line = Some(LineSupport {
            line: LineSpec::x1_axis(self.dimension),
            supports: support.supports,
        });
        // Snap the flagged measure's transverse coordinates: they are zero up
        // to rotation round-off, and downstream cancellation tests are exact.
        let flagged = match support.supports {
            WhichMeasure::Sigma => &mut out.sigma,
            WhichMeasure::Omega => &mut out.omega,
        };
        for a in &mut flagged.atoms {
            for x in &mut a.location[1..] {
                if x.abs() <= LINE_TOL {
                    *x = 0.0;
                }
            }
        }
        out.validate()?;
        Ok(out)
    }
}

/// Orthogonal matrix (rows) whose first row is `direction`: the map x ↦ Qx
/// sends `direction` to e₁. Completed by Gram–Schmidt over the standard
/// basis, deterministically.
fn rotation_to_e1(direction: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = direction.len();
    let norm = crate::numeric::norm(direction);
    if norm < 1e-9 {
        return Err(Error::Validation("degenerate line direction".into()));
    }
    let mut rows: Vec<Vec<f64>> = vec![direction.iter().map(|d| d / norm).collect()];
    for i in 0..n {
        if rows.len() == n {
            break;
        }
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        for row in &rows {
            let proj: f64 = row.iter().zip(&v).map(|(r, x)| r * x).sum();
            for (vj, rj) in v.iter_mut().zip(row) {
                *vj -= proj * rj;
            }
        }
        let len = crate::numeric::norm(&v);
        if len > 1e-9 {
            rows.push(v.into_iter().map(|x| x / len).collect());
        }
    }
    if rows.len() != n {
        return Err(Error::Validation("failed to complete orthonormal basis".into()));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Cube;

    fn grid2() -> GridSpec {
        GridSpec::new(2, vec![0.0, 0.0], 0, 8, vec![0, 0]).unwrap()
    }

    #[test]
    fn mass_respects_half_open_boxes() {
        let g = grid2();
        let q = Cube { level: 0, coords: vec![0, 0] };
        let mu =
            DiscreteMeasure::new(2, vec![Atom::new(vec![0.5, 0.5], 2.0)]).unwrap();
        assert_eq!(mu.mass_in(&g, &q), 2.0);
        let on_edge = DiscreteMeasure::new(2, vec![Atom::new(vec![1.0, 0.0], 1.0)]).unwrap();
        assert_eq!(on_edge.mass_in(&g, &q), 0.0);
        let two = DiscreteMeasure::new(
            2,
            vec![Atom::new(vec![0.1, 0.1], 1.0), Atom::new(vec![0.9, 0.2], 3.0)],
        )
        .unwrap();
        assert_eq!(two.mass_in(&g, &q), 4.0);
    }

    #[test]
    fn mass_is_additive_over_children() {
        let g = grid2();
        let q = Cube { level: 1, coords: vec![1, 0] };
        let mu = DiscreteMeasure::new(
            2,
            vec![
                Atom::new(vec![0.52, 0.11], 1.0),
                Atom::new(vec![0.61, 0.43], 0.5),
                Atom::new(vec![0.99, 0.49], 2.5),
                Atom::new(vec![0.13, 0.13], 9.0), // outside q
            ],
        )
        .unwrap();
        let total: f64 = q.children(&g).iter().map(|c| mu.mass_in(&g, c)).sum();
        assert_eq!(total, mu.mass_in(&g, &q));
    }

    #[test]
    fn restriction_splits_mass() {
        let mu = DiscreteMeasure::new(
            1,
            vec![Atom::new(vec![0.2], 1.0), Atom::new(vec![0.8], 2.0)],
        )
        .unwrap();
        assert_eq!(mu.restrict(|_| true), mu);
        assert!(mu.restrict(|_| false).is_empty());
        let left = mu.restrict(|x| x[0] < 0.5);
        assert_eq!(left.atoms.len(), 1);
        assert_eq!(left.atoms[0].location, vec![0.2]);
        let right = mu.restrict(|x| x[0] >= 0.5);
        assert_eq!(left.total_mass() + right.total_mass(), mu.total_mass());
    }

    #[test]
    fn common_point_detection() {
        let a = DiscreteMeasure::new(2, vec![Atom::new(vec![1.0, 2.0], 1.0)]).unwrap();
        let b = DiscreteMeasure::new(2, vec![Atom::new(vec![1.0, 2.0], 3.0)]).unwrap();
        assert!(check_no_common_points(&a, &b).is_err());
        let c = DiscreteMeasure::new(2, vec![Atom::new(vec![0.0, 0.0], 1.0)]).unwrap();
        assert_eq!(check_no_common_points(&a, &c).unwrap(), (5.0f64).sqrt());
        let empty = DiscreteMeasure::new(2, vec![]).unwrap();
        assert_eq!(check_no_common_points(&a, &empty).unwrap(), f64::INFINITY);
    }

    #[test]
    fn weighted_means() {
        let g = grid2();
        let q = Cube { level: 0, coords: vec![0, 0] };
        let single = DiscreteMeasure::new(2, vec![Atom::new(vec![0.3, 0.4], 5.0)]).unwrap();
        assert_eq!(single.mean(&g, &q, 0).unwrap(), 0.3);
        let pair = DiscreteMeasure::new(
            2,
            vec![Atom::new(vec![0.0, 0.0], 1.0), Atom::new(vec![0.5, 0.0], 1.0)],
        )
        .unwrap();
        assert_eq!(pair.mean(&g, &q, 0).unwrap(), 0.25);
        let weighted = DiscreteMeasure::new(
            2,
            vec![Atom::new(vec![0.0, 0.0], 1.0), Atom::new(vec![0.5, 0.0], 3.0)],
        )
        .unwrap();
        assert_eq!(weighted.mean(&g, &q, 0).unwrap(), 0.375);
        let empty = DiscreteMeasure::new(2, vec![]).unwrap();
        assert!(empty.mean(&g, &q, 0).is_err());
    }

    fn scenario_with_line(direction: Vec<f64>, point: Vec<f64>, omega_atoms: Vec<Atom>) -> Scenario {
        Scenario {
            dimension: 2,
            alpha: 1.0,
            sigma: DiscreteMeasure::new(2, vec![Atom::new(vec![0.3, 0.7], 1.0)]).unwrap(),
            omega: DiscreteMeasure::new(2, omega_atoms).unwrap(),
            line: Some(LineSupport {
                line: LineSpec::new(point, direction).unwrap(),
                supports: WhichMeasure::Omega,
            }),
            goodness: GoodnessParams::default(),
            grids: vec![GridSpec::new(2, vec![0.0, 0.0], -1, 6, vec![0, 0]).unwrap()],
            truncation: None,
        }
    }

    #[test]
    fn canonicalize_rotates_vertical_line() {
        let s = scenario_with_line(
            vec![0.0, 1.0],
            vec![0.0, 0.0],
            vec![Atom::new(vec![0.0, 3.0], 1.0)],
        );
        let c = s.canonicalize_line().unwrap();
        assert_eq!(c.omega.atoms[0].location, vec![3.0, 0.0]);
        assert!(c.line.as_ref().unwrap().line.is_x1_axis());
    }

    #[test]
    fn canonicalize_translates_offset_line() {
        let s = scenario_with_line(
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![Atom::new(vec![2.0, 1.0], 1.5)],
        );
        let c = s.canonicalize_line().unwrap();
        assert_eq!(c.omega.atoms[0].location, vec![1.0, 0.0]);
        assert_eq!(c.omega.atoms[0].mass, 1.5);
    }

    #[test]
    fn canonicalize_preserves_pairwise_distances() {
        let s = scenario_with_line(
            vec![std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2],
            vec![0.25, 0.5],
            vec![
                Atom::new(vec![0.25, 0.5], 1.0),
                Atom::new(
                    vec![
                        0.25 + std::f64::consts::FRAC_1_SQRT_2,
                        0.5 + std::f64::consts::FRAC_1_SQRT_2,
                    ],
                    2.0,
                ),
            ],
        );
        let c = s.canonicalize_line().unwrap();
        let all_before: Vec<&Atom> = s.sigma.atoms.iter().chain(&s.omega.atoms).collect();
        let all_after: Vec<&Atom> = c.sigma.atoms.iter().chain(&c.omega.atoms).collect();
        for i in 0..all_before.len() {
            assert_eq!(all_before[i].mass, all_after[i].mass);
            for j in (i + 1)..all_before.len() {
                let before = dist(&all_before[i].location, &all_before[j].location);
                let after = dist(&all_after[i].location, &all_after[j].location);
                assert!((before - after).abs() <= 1e-12);
            }
        }
        for a in &c.omega.atoms {
            assert_eq!(a.location[1], 0.0);
        }
    }
}
