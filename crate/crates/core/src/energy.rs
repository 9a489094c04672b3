//! Haar martingale differences of the identity map and the full / good /
//! subgood projection norms they build up to.
//!
//! All recursions stop at atom-separating depth: once a cube holds at most
//! one atom every deeper martingale difference vanishes, which makes the
//! formally infinite Haar sums finite and exact for atomic measures. The
//! grid's `level_max` only caps enumeration families, not these sums.

use crate::geometry::{is_good, Cube, GoodnessParams, GridSpec};
use crate::measure::DiscreteMeasure;

fn mean_vector(mu: &DiscreteMeasure, atoms: &[usize]) -> (f64, Vec<f64>) {
    let n = mu.dimension;
    let mut mass = 0.0;
    let mut acc = vec![0.0; n];
    for &i in atoms {
        let a = &mu.atoms[i];
        mass += a.mass;
        for (s, x) in acc.iter_mut().zip(&a.location) {
            *s += a.mass * x;
        }
    }
    if mass > 0.0 {
        for s in acc.iter_mut() {
            *s /= mass;
        }
    }
    (mass, acc)
}

fn variance(mu: &DiscreteMeasure, atoms: &[usize]) -> f64 {
    if atoms.len() < 2 {
        return 0.0;
    }
    let (_, mean) = mean_vector(mu, atoms);
    atoms
        .iter()
        .map(|&i| {
            let a = &mu.atoms[i];
            a.mass
                * a.location
                    .iter()
                    .zip(&mean)
                    .map(|(x, m)| (x - m) * (x - m))
                    .sum::<f64>()
        })
        .sum()
}

/// Σ m·(x_j − 𝔼 x_j)² over the atoms of `mu` in `q` (one coordinate).
pub fn partial_variance(grid: &GridSpec, q: &Cube, mu: &DiscreteMeasure, j: usize) -> f64 {
    let atoms = mu.atoms_in(grid, q);
    if atoms.len() < 2 {
        return 0.0;
    }
    let (mass, _) = mean_vector(mu, &atoms);
    let mean_j: f64 =
        atoms.iter().map(|&i| mu.atoms[i].mass * mu.atoms[i].location[j]).sum::<f64>() / mass;
    atoms
        .iter()
        .map(|&i| {
            let a = &mu.atoms[i];
            a.mass * (a.location[j] - mean_j) * (a.location[j] - mean_j)
        })
        .sum()
}

/// ‖△_J^μ x‖²: the squared L²(μ) norm of the single-level martingale
/// difference of the identity map on `j`, summed over all coordinates.
/// Zero when `j` holds at most one atom.
pub fn haar_difference_norm_sq(grid: &GridSpec, j: &Cube, mu: &DiscreteMeasure) -> f64 {
    let atoms = mu.atoms_in(grid, j);
    haar_difference_on(grid, j, mu, &atoms)
}

fn haar_difference_on(grid: &GridSpec, j: &Cube, mu: &DiscreteMeasure, atoms: &[usize]) -> f64 {
    if atoms.len() < 2 {
        return 0.0;
    }
    let (_, parent_mean) = mean_vector(mu, atoms);
    let mut total = 0.0;
    for child in j.children(grid) {
        let sub: Vec<usize> = atoms
            .iter()
            .copied()
            .filter(|&i| child.contains_point(grid, &mu.atoms[i].location))
            .collect();
        if sub.is_empty() {
            continue;
        }
        let (mass, child_mean) = mean_vector(mu, &sub);
        let gap: f64 = child_mean
            .iter()
            .zip(&parent_mean)
            .map(|(c, p)| (c - p) * (c - p))
            .sum();
        total += mass * gap;
    }
    total
}

/// ‖P_K^μ x‖² = ∫_K |x − 𝔼_K x|² dμ, the full projection norm
/// (vector variance over all coordinates).
pub fn projection_norm_full(grid: &GridSpec, k: &Cube, mu: &DiscreteMeasure) -> f64 {
    let atoms = mu.atoms_in(grid, k);
    variance(mu, &atoms)
}

/// ‖P_K^{subgood,μ} x‖²: the variance summed over the maximal good subcubes
/// of `k`. The inner Haar sum below each maximal good cube telescopes to the
/// plain variance on that cube.
pub fn projection_norm_subgood(
    grid: &GridSpec,
    k: &Cube,
    mu: &DiscreteMeasure,
    p: &GoodnessParams,
) -> f64 {
    let atoms = mu.atoms_in(grid, k);
    subgood_on(grid, k, mu, p, &atoms)
}

fn subgood_on(
    grid: &GridSpec,
    k: &Cube,
    mu: &DiscreteMeasure,
    p: &GoodnessParams,
    atoms: &[usize],
) -> f64 {
    if atoms.len() < 2 {
        return 0.0;
    }
    if is_good(grid, k, p) {
        return variance(mu, atoms);
    }
    let mut total = 0.0;
    for child in k.children(grid) {
        let sub: Vec<usize> = atoms
            .iter()
            .copied()
            .filter(|&i| child.contains_point(grid, &mu.atoms[i].location))
            .collect();
        if sub.len() >= 2 {
            total += subgood_on(grid, &child, mu, p, &sub);
        }
    }
    total
}

/// ‖P_K^{good,μ} x‖²: Haar difference norms summed over every good subcube
/// of `k` (including `k` itself when good).
pub fn projection_norm_good(
    grid: &GridSpec,
    k: &Cube,
    mu: &DiscreteMeasure,
    p: &GoodnessParams,
) -> f64 {
    let atoms = mu.atoms_in(grid, k);
    good_on(grid, k, mu, p, &atoms)
}

fn good_on(
    grid: &GridSpec,
    k: &Cube,
    mu: &DiscreteMeasure,
    p: &GoodnessParams,
    atoms: &[usize],
) -> f64 {
    if atoms.len() < 2 {
        return 0.0;
    }
    let mut total = if is_good(grid, k, p) {
        haar_difference_on(grid, k, mu, atoms)
    } else {
        0.0
    };
    for child in k.children(grid) {
        let sub: Vec<usize> = atoms
            .iter()
            .copied()
            .filter(|&i| child.contains_point(grid, &mu.atoms[i].location))
            .collect();
        if sub.len() >= 2 {
            total += good_on(grid, &child, mu, p, &sub);
        }
    }
    total
}

/// All projection norms on one cube.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionNorms {
    pub full: f64,
    pub good: f64,
    pub subgood: f64,
}

pub fn projection_norms(
    grid: &GridSpec,
    k: &Cube,
    mu: &DiscreteMeasure,
    p: &GoodnessParams,
) -> ProjectionNorms {
    ProjectionNorms {
        full: projection_norm_full(grid, k, mu),
        good: projection_norm_good(grid, k, mu, p),
        subgood: projection_norm_subgood(grid, k, mu, p),
    }
}
