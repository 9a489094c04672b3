//! The fractional Riesz kernel, its tangent-line truncation, exact
//! evaluation of the truncated transform against atomic measures, and the
//! standard/reproducing Poisson integrals.
//!
//! Atomic measures make every integral a finite sum; nothing here uses
//! quadrature.

use serde::{Deserialize, Serialize};

use crate::geometry::{Cube, GridSpec};
use crate::measure::DiscreteMeasure;
use crate::numeric::{dist, pairwise_sum};
use crate::{Error, Result};

/// Kernel shape parameters: dimension, fractional exponent α ∈ [0, n) and
/// the normalization constant (1 by default; never used downstream).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelParams {
    pub dimension: usize,
    pub alpha: f64,
    #[serde(default = "default_c_norm")]
    pub c_norm: f64,
}

fn default_c_norm() -> f64 {
    1.0
}

impl KernelParams {
    pub fn new(dimension: usize, alpha: f64) -> Result<Self> {
        if dimension == 0 || !(0.0 <= alpha && alpha < dimension as f64) {
            return Err(Error::Validation(format!(
                "kernel needs n ≥ 1 and 0 ≤ α < n (n = {dimension}, α = {alpha})"
            )));
        }
        Ok(KernelParams { dimension, alpha, c_norm: 1.0 })
    }
}

/// Vector Riesz kernel K(w), component ℓ equal to c·wℓ/|w|^{n+1−α}.
/// Odd: K(−w) = −K(w). Errors at w = 0.
pub fn riesz_kernel(w: &[f64], p: &KernelParams) -> Result<Vec<f64>> {
    let r = crate::numeric::norm(w);
    if r == 0.0 {
        return Err(Error::Singularity("riesz kernel evaluated at 0".into()));
    }
    let scale = p.c_norm * r.powf(p.alpha - (p.dimension as f64 + 1.0));
    Ok(w.iter().map(|wi| wi * scale).collect())
}

/// Tangent-line truncation window. The radial profile is the pure power law
/// r^{α−n} on [δ, R], extended by its tangent lines on (0, δ) and (R, S),
/// where S is forced by C¹ matching and ψ(S) = 0:
/// S = R·(n−α+1)/(n−α).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Truncation {
    pub delta: f64,
    pub r_outer: f64,
    pub s_outer: f64,
}

impl Truncation {
    pub fn new(delta: f64, r_outer: f64, dimension: usize, alpha: f64) -> Result<Self> {
        let na = dimension as f64 - alpha;
        if na <= 0.0 {
            return Err(Error::Validation("truncation needs α < n".into()));
        }
        let t = Truncation { delta, r_outer, s_outer: r_outer * (na + 1.0) / na };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.delta && self.delta < self.r_outer && self.r_outer < self.s_outer) {
            return Err(Error::Validation(format!(
                "truncation must satisfy 0 < δ < R < S (δ = {}, R = {}, S = {})",
                self.delta, self.r_outer, self.s_outer
            )));
        }
        Ok(())
    }

    /// True when every distance in [lo, hi] lies in the power-law window, so
    /// the truncated transform agrees with the raw kernel.
    pub fn shields(&self, lo: f64, hi: f64) -> bool {
        self.delta <= lo && hi <= self.r_outer
    }
}

/// The radial profile ψ(r) of the tangent-line truncation.
pub fn truncation_profile(rdist: f64, t: &Truncation, p: &KernelParams) -> f64 {
    debug_assert!(rdist > 0.0);
    let e = p.alpha - p.dimension as f64; // α − n < 0
    if rdist < t.delta {
        t.delta.powf(e) + e * t.delta.powf(e - 1.0) * (rdist - t.delta)
    } else if rdist <= t.r_outer {
        rdist.powf(e)
    } else if rdist < t.s_outer {
        t.r_outer.powf(e) + e * t.r_outer.powf(e - 1.0) * (rdist - t.r_outer)
    } else {
        0.0
    }
}

/// Truncated kernel: component ℓ equals Ωℓ(w)·ψ(|w|) with Ωℓ(w) = wℓ/|w|,
/// scaled by c_norm. Writes into `out`; the w = 0 diagonal is conventionally
/// zero (odd kernel).
pub fn truncated_kernel_into(w: &[f64], t: &Truncation, p: &KernelParams, out: &mut [f64]) {
    let r = crate::numeric::norm(w);
    if r == 0.0 {
        out.fill(0.0);
        return;
    }
    let scale = p.c_norm * truncation_profile(r, t, p) / r;
    for (o, wi) in out.iter_mut().zip(w) {
        *o = wi * scale;
    }
}

/// Truncated transform of the weighted density `f dσ`, evaluated at each
/// point of `eval_points`. Returns one n-vector per point, as exact finite
/// sums in a fixed pairwise order.
pub fn apply_transform(
    f: &[f64],
    sigma: &DiscreteMeasure,
    eval_points: &[Vec<f64>],
    t: &Truncation,
    p: &KernelParams,
) -> Vec<Vec<f64>> {
    assert_eq!(f.len(), sigma.atoms.len(), "f must assign a value per σ-atom");
    let n = p.dimension;
    let mut kernel = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut terms: Vec<Vec<f64>> = vec![Vec::with_capacity(sigma.atoms.len()); n];
    eval_points
        .iter()
        .map(|x| {
            for buf in terms.iter_mut() {
                buf.clear();
            }
            for (a, fa) in sigma.atoms.iter().zip(f) {
                for (wi, (xi, ai)) in w.iter_mut().zip(x.iter().zip(&a.location)) {
                    *wi = xi - ai;
                }
                truncated_kernel_into(&w, t, p, &mut kernel);
                let weight = fa * a.mass;
                for (buf, k) in terms.iter_mut().zip(&kernel) {
                    buf.push(k * weight);
                }
            }
            terms.iter().map(|buf| pairwise_sum(buf)).collect()
        })
        .collect()
}

/// Standard Poisson integral P^α(Q, μ) = Σ m·ℓ(Q)/(ℓ(Q)+|x−x_Q|)^{n+1−α}.
pub fn poisson_standard(grid: &GridSpec, q: &Cube, mu: &DiscreteMeasure, p: &KernelParams) -> f64 {
    let side = q.side();
    let center = q.center(grid);
    let e = p.dimension as f64 + 1.0 - p.alpha;
    let terms: Vec<f64> = mu
        .atoms
        .iter()
        .map(|a| a.mass * side / (side + dist(&a.location, &center)).powf(e))
        .collect();
    pairwise_sum(&terms)
}

/// Reproducing Poisson integral 𝒫^α(Q, μ) = Σ m·(ℓ(Q)/(ℓ(Q)+|x−x_Q|)²)^{n−α}.
pub fn poisson_reproducing(
    grid: &GridSpec,
    q: &Cube,
    mu: &DiscreteMeasure,
    p: &KernelParams,
) -> f64 {
    let side = q.side();
    let center = q.center(grid);
    let e = p.dimension as f64 - p.alpha;
    let terms: Vec<f64> = mu
        .atoms
        .iter()
        .map(|a| {
            let denom = side + dist(&a.location, &center);
            a.mass * (side / (denom * denom)).powf(e)
        })
        .collect();
    pairwise_sum(&terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Atom;

    fn params(n: usize, alpha: f64) -> KernelParams {
        KernelParams::new(n, alpha).unwrap()
    }

    #[test]
    fn kernel_closed_forms() {
        let p = params(2, 1.0);
        let k = riesz_kernel(&[3.0, 4.0], &p).unwrap();
        assert!((k[0] - 0.12).abs() < 1e-15);
        assert!((k[1] - 0.16).abs() < 1e-15);

        let p0 = params(2, 0.0);
        assert_eq!(riesz_kernel(&[1.0, 0.0], &p0).unwrap(), vec![1.0, 0.0]);
        assert!(riesz_kernel(&[0.0, 0.0], &p).is_err());
    }

    #[test]
    fn kernel_is_odd() {
        let p = params(3, 1.3);
        let w = [0.4, -1.7, 2.2];
        let neg: Vec<f64> = w.iter().map(|x| -x).collect();
        let k1 = riesz_kernel(&w, &p).unwrap();
        let k2 = riesz_kernel(&neg, &p).unwrap();
        for (a, b) in k1.iter().zip(&k2) {
            assert_eq!(*a, -*b);
        }
    }

    #[test]
    fn truncation_shape() {
        let p = params(2, 1.0);
        let t = Truncation::new(0.1, 1.0, 2, 1.0).unwrap();
        // S = R(n−α+1)/(n−α) = 2R.
        assert!((t.s_outer - 2.0).abs() < 1e-15);
        assert!((truncation_profile(0.5, &t, &p) - 2.0).abs() < 1e-12);
        assert_eq!(truncation_profile(2.0, &t, &p), 0.0);
        assert!((truncation_profile(1.5, &t, &p) - 0.5).abs() < 1e-12);
        assert_eq!(truncation_profile(5.0, &t, &p), 0.0);
    }

    #[test]
    fn truncation_is_c1_at_junctions() {
        // One-sided finite differences at δ and R match to 1e-6 relative.
        let p = params(2, 0.5);
        let t = Truncation::new(0.25, 2.0, 2, 0.5).unwrap();
        let h = 1e-8;
        for r0 in [t.delta, t.r_outer] {
            let left =
                (truncation_profile(r0, &t, &p) - truncation_profile(r0 - h, &t, &p)) / h;
            let right =
                (truncation_profile(r0 + h, &t, &p) - truncation_profile(r0, &t, &p)) / h;
            assert!(
                (left - right).abs() <= 1e-6 * left.abs().max(1.0),
                "profile not C¹ at {r0}: {left} vs {right}"
            );
        }
    }

    #[test]
    fn transform_single_atom_matches_kernel() {
        let p = params(2, 1.0);
        let t = Truncation::new(0.1, 100.0, 2, 1.0).unwrap();
        let sigma = DiscreteMeasure::new(2, vec![Atom::new(vec![0.0, 0.0], 1.0)]).unwrap();
        let vals = apply_transform(&[1.0], &sigma, &[vec![3.0, 4.0]], &t, &p);
        assert!((vals[0][0] - 0.12).abs() < 1e-14);
        assert!((vals[0][1] - 0.16).abs() < 1e-14);

        let zero = apply_transform(&[0.0], &sigma, &[vec![3.0, 4.0]], &t, &p);
        assert_eq!(zero[0], vec![0.0, 0.0]);
    }

    #[test]
    fn transform_matches_raw_kernel_when_shielded() {
        let p = params(2, 0.7);
        let sigma = DiscreteMeasure::new(
            2,
            vec![
                Atom::new(vec![0.1, 0.2], 1.0),
                Atom::new(vec![0.9, 0.4], 2.5),
                Atom::new(vec![0.4, 0.8], 0.3),
            ],
        )
        .unwrap();
        let eval = vec![vec![2.0, 2.0], vec![-1.0, 0.5]];
        let t = Truncation::new(1e-3, 1e3, 2, 0.7).unwrap();
        let f = vec![1.0, -0.5, 2.0];
        let got = apply_transform(&f, &sigma, &eval, &t, &p);
        for (x, v) in eval.iter().zip(&got) {
            let mut raw = vec![0.0, 0.0];
            for (a, fa) in sigma.atoms.iter().zip(&f) {
                let w: Vec<f64> = x.iter().zip(&a.location).map(|(xi, ai)| xi - ai).collect();
                let k = riesz_kernel(&w, &p).unwrap();
                for (ri, ki) in raw.iter_mut().zip(&k) {
                    *ri += ki * fa * a.mass;
                }
            }
            for (gi, ri) in v.iter().zip(&raw) {
                assert!((gi - ri).abs() <= 1e-14 * (1.0 + ri.abs()));
            }
        }
    }

    #[test]
    fn axis_supported_pair_kills_second_component() {
        let p = params(2, 1.0);
        let t = Truncation::new(0.1, 100.0, 2, 1.0).unwrap();
        let sigma = DiscreteMeasure::new(
            2,
            vec![Atom::new(vec![0.2, 0.0], 1.0), Atom::new(vec![0.7, 0.0], 2.0)],
        )
        .unwrap();
        let eval = vec![vec![0.4, 0.0], vec![5.0, 0.0]];
        for v in apply_transform(&[1.0, 1.0], &sigma, &eval, &t, &p) {
            assert_eq!(v[1], 0.0);
        }
    }

    #[test]
    fn poisson_closed_forms() {
        let g = GridSpec::new(2, vec![0.5, 0.5], -5, 8, vec![0, 0]).unwrap();
        // Unit cube centered at the origin.
        let q = Cube { level: 0, coords: vec![-1, -1] };
        assert_eq!(q.center(&g), vec![0.0, 0.0]);
        let p1 = params(2, 1.0);
        let at_center = DiscreteMeasure::new(2, vec![Atom::new(vec![0.0, 0.0], 1.0)]).unwrap();
        assert!((poisson_standard(&g, &q, &at_center, &p1) - 1.0).abs() < 1e-15);
        assert!((poisson_reproducing(&g, &q, &at_center, &p1) - 1.0).abs() < 1e-15);

        let far = DiscreteMeasure::new(2, vec![Atom::new(vec![3.0, 0.0], 2.0)]).unwrap();
        assert!((poisson_standard(&g, &q, &far, &p1) - 0.125).abs() < 1e-15);
        let p0 = params(2, 0.0);
        assert!((poisson_standard(&g, &q, &far, &p0) - 0.03125).abs() < 1e-15);
        assert!((poisson_reproducing(&g, &q, &far, &p0) - 0.0078125).abs() < 1e-15);

        let empty = DiscreteMeasure::new(2, vec![]).unwrap();
        assert_eq!(poisson_reproducing(&g, &q, &empty, &p1), 0.0);
    }

    #[test]
    fn poisson_domination_in_high_alpha_regime() {
        // P^α ≤ 𝒫^α whenever α ≥ n − 1.
        let g = GridSpec::new(2, vec![0.0, 0.0], -2, 8, vec![0, 0]).unwrap();
        let mu = DiscreteMeasure::new(
            2,
            vec![
                Atom::new(vec![0.3, 0.4], 1.0),
                Atom::new(vec![2.5, 1.1], 0.2),
                Atom::new(vec![-1.0, 3.0], 5.0),
            ],
        )
        .unwrap();
        for alpha in [1.0, 1.5, 1.9] {
            let p = params(2, alpha);
            for level in -2..4 {
                for m in [-1i64, 0, 1, 3] {
                    let q = Cube { level, coords: vec![m, m] };
                    let std = poisson_standard(&g, &q, &mu, &p);
                    let rep = poisson_reproducing(&g, &q, &mu, &p);
                    assert!(std <= rep * (1.0 + 1e-12), "α={alpha} level={level}");
                }
            }
        }
    }
}
