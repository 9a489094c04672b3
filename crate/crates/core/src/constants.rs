//! The named two-weight constants as suprema over the configured cube and
//! partition families, each with its arg-max witness, plus the exact operator
//! norm of the truncated transform between the weighted spaces.
//!
//! Every supremum here is family-relative: the reported value is a lower
//! bound for the corresponding supremum over all cubes/grids/partitions,
//! which is not finitely computable. Enlarging the family never decreases a
//! reported value.

use std::collections::{BTreeSet, HashMap};
use std::rc::Rc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::energy::projection_norm_subgood;
use crate::geometry::{
    box_contains, maximal_deep_subcubes, overlap_constant, parent, Cube, GridSpec,
};
use crate::measure::{DiscreteMeasure, Scenario, WhichMeasure};
use crate::numeric::pairwise_sum;
use crate::transform::{truncated_kernel_into, KernelParams, Truncation};
use crate::{Error, Result};

/// Orientation of a constant: `Forward` tests σ against ω, `Backward` swaps
/// the roles everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    fn outer(self) -> WhichMeasure {
        match self {
            Direction::Forward => WhichMeasure::Sigma,
            Direction::Backward => WhichMeasure::Omega,
        }
    }
    fn proj(self) -> WhichMeasure {
        match self {
            Direction::Forward => WhichMeasure::Omega,
            Direction::Backward => WhichMeasure::Sigma,
        }
    }
}

/// How the subpartitions {I_r} of a candidate cube are sampled. The energy
/// functional is sensitive to the partition near nearby cubes, so an
/// adversarial (greedy) search is part of the default set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PartitionStrategy {
    /// The trivial partition {I}.
    Trivial,
    /// Every uniform partition of I into its depth-d descendants, 1 ≤ d ≤ depth.
    Uniform { depth: u32 },
    /// Seeded random recursive coin-split partitions.
    RandomSeeded { count: u32, seed: u64, max_depth: u32 },
    /// Repeatedly split the cell with the largest contribution while the
    /// functional increases.
    Greedy { max_rounds: u32 },
    /// Every mixed dyadic subpartition to the given depth. Exponential in
    /// `depth` and dimension; meant for small oracle comparisons.
    Exhaustive { depth: u32 },
}

impl PartitionStrategy {
    pub fn default_set() -> Vec<PartitionStrategy> {
        vec![
            PartitionStrategy::Trivial,
            PartitionStrategy::Uniform { depth: 3 },
            PartitionStrategy::RandomSeeded { count: 8, seed: 17, max_depth: 3 },
            PartitionStrategy::Greedy { max_rounds: 12 },
        ]
    }

    fn label(set: &[PartitionStrategy]) -> String {
        let names: Vec<String> = set
            .iter()
            .map(|s| match s {
                PartitionStrategy::Trivial => "trivial".to_string(),
                PartitionStrategy::Uniform { depth } => format!("uniform<={depth}"),
                PartitionStrategy::RandomSeeded { count, seed, max_depth } => {
                    format!("random{count}@{seed}<={max_depth}")
                }
                PartitionStrategy::Greedy { max_rounds } => format!("greedy{max_rounds}"),
                PartitionStrategy::Exhaustive { depth } => format!("exhaustive<={depth}"),
            })
            .collect();
        names.join("+")
    }
}

/// Arg-max certificate for a reported constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    Empty,
    Cube { grid: usize, cube: Cube },
    CubePair { grid_q: usize, q: Cube, grid_q_prime: usize, q_prime: Cube },
    Energy { grid: usize, i: Cube, partition: Vec<Cube>, ell: u32 },
}

/// One computed constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantEntry {
    pub value: f64,
    pub witness: Witness,
    pub family: String,
    pub strategy: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<u64>,
}

/// Every constant of the theory for one scenario. Field order is the
/// serialization order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub a2_classical: ConstantEntry,
    pub a2_forward: ConstantEntry,
    pub a2_backward: ConstantEntry,
    pub testing_forward: ConstantEntry,
    pub testing_backward: ConstantEntry,
    pub wbp: ConstantEntry,
    pub energy_forward: ConstantEntry,
    pub energy_backward: ConstantEntry,
    pub energy_plug_forward: ConstantEntry,
    pub energy_plug_backward: ConstantEntry,
    pub op_norm: ConstantEntry,
}

impl ConstantsReport {
    pub fn entries(&self) -> Vec<(&'static str, &ConstantEntry)> {
        vec![
            ("a2_classical", &self.a2_classical),
            ("a2_forward", &self.a2_forward),
            ("a2_backward", &self.a2_backward),
            ("testing_forward", &self.testing_forward),
            ("testing_backward", &self.testing_backward),
            ("wbp", &self.wbp),
            ("energy_forward", &self.energy_forward),
            ("energy_backward", &self.energy_backward),
            ("energy_plug_forward", &self.energy_plug_forward),
            ("energy_plug_backward", &self.energy_plug_backward),
            ("op_norm", &self.op_norm),
        ]
    }
}

type RoleTag = u8;

fn role_tag(which: WhichMeasure) -> RoleTag {
    match which {
        WhichMeasure::Sigma => 0,
        WhichMeasure::Omega => 1,
    }
}

/// Stateful evaluator for one scenario. Caches the per-cube quantities that
/// the energy suprema reuse heavily (subgood projection norms, maximal deep
/// decompositions, occupied-cube lists). All methods are deterministic; the
/// max reductions scan candidates in lexicographic order and keep the first
/// maximizer, so ties break toward the lexicographically smallest witness.
pub struct Evaluator<'a> {
    pub scenario: &'a Scenario,
    pub kernel: KernelParams,
    pub truncation: Truncation,
    pub wbp_comparability: f64,
    pub strategies: Vec<PartitionStrategy>,
    subgood_cache: HashMap<(usize, RoleTag, Cube), f64>,
    deep_cache: HashMap<(usize, RoleTag, Cube), Rc<Vec<Cube>>>,
    occupied: HashMap<(usize, RoleTag), Rc<Vec<Cube>>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(scenario: &'a Scenario) -> Result<Self> {
        scenario.validate()?;
        let kernel = KernelParams::new(scenario.dimension, scenario.alpha)?;
        let truncation = scenario.effective_truncation()?;
        // The comparability constant must grow with the goodness parameter r.
        let wbp_comparability = f64::exp2(scenario.goodness.r as f64);
        Ok(Evaluator {
            scenario,
            kernel,
            truncation,
            wbp_comparability,
            strategies: PartitionStrategy::default_set(),
            subgood_cache: HashMap::new(),
            deep_cache: HashMap::new(),
            occupied: HashMap::new(),
        })
    }

    pub fn with_strategies(mut self, strategies: Vec<PartitionStrategy>) -> Self {
        self.strategies = strategies;
        self
    }

    pub fn with_comparability(mut self, c: f64) -> Self {
        self.wbp_comparability = c;
        self
    }

    fn measure(&self, which: WhichMeasure) -> &'a DiscreteMeasure {
        match which {
            WhichMeasure::Sigma => &self.scenario.sigma,
            WhichMeasure::Omega => &self.scenario.omega,
        }
    }

    fn family_label(&self) -> String {
        let g = &self.scenario.grids;
        format!(
            "grids={} levels=[{},{}]",
            g.len(),
            g.iter().map(|s| s.level_min).min().unwrap_or(0),
            g.iter().map(|s| s.level_max).max().unwrap_or(0)
        )
    }

    /// Cubes of one grid's window containing at least one atom of the given
    /// measure, sorted lexicographically.
    fn occupied_cubes(&mut self, grid_idx: usize, which: WhichMeasure) -> Rc<Vec<Cube>> {
        let key = (grid_idx, role_tag(which));
        if let Some(v) = self.occupied.get(&key) {
            return Rc::clone(v);
        }
        let grid = &self.scenario.grids[grid_idx];
        let mu = self.measure(which);
        let root = grid.root();
        let mut set = BTreeSet::new();
        for a in &mu.atoms {
            if !root.contains_point(grid, &a.location) {
                continue;
            }
            for level in grid.level_min..=grid.level_max {
                set.insert(cube_at(grid, level, &a.location));
            }
        }
        let v = Rc::new(set.into_iter().collect::<Vec<_>>());
        self.occupied.insert(key, Rc::clone(&v));
        v
    }

    fn subgood(&mut self, grid_idx: usize, which: WhichMeasure, j: &Cube) -> f64 {
        let key = (grid_idx, role_tag(which), j.clone());
        if let Some(v) = self.subgood_cache.get(&key) {
            return *v;
        }
        let grid = &self.scenario.grids[grid_idx];
        let v = projection_norm_subgood(grid, j, self.measure(which), &self.scenario.goodness);
        self.subgood_cache.insert(key, v);
        v
    }

    fn deep(&mut self, grid_idx: usize, which: WhichMeasure, k: &Cube) -> Rc<Vec<Cube>> {
        let key = (grid_idx, role_tag(which), k.clone());
        if let Some(v) = self.deep_cache.get(&key) {
            return Rc::clone(v);
        }
        let grid = &self.scenario.grids[grid_idx];
        let v = Rc::new(maximal_deep_subcubes(
            grid,
            k,
            &self.scenario.goodness,
            self.measure(which),
        ));
        self.deep_cache.insert(key, Rc::clone(&v));
        v
    }

    /// M^ℓ of `k` pruned by the projection measure; empty when the ℓ-fold
    /// parent leaves the grid window (that ℓ contributes nothing to the sup).
    pub fn refined_deep(
        &mut self,
        grid_idx: usize,
        which: WhichMeasure,
        k: &Cube,
        ell: u32,
    ) -> Vec<Cube> {
        if ell == 0 {
            return self.deep(grid_idx, which, k).as_ref().clone();
        }
        let grid = &self.scenario.grids[grid_idx];
        let up = match parent(grid, k, ell) {
            Ok(c) => c,
            Err(_) => return Vec::new(),
        };
        let outer = self.deep(grid_idx, which, &up);
        let inner = self.deep(grid_idx, which, k);
        outer
            .iter()
            .filter(|j| inner.iter().any(|l| l.contains_cube(j)))
            .cloned()
            .collect()
    }

    /// Truncated kernel vector K^t(x − a).
    fn kernel_at(&self, x: &[f64], a: &[f64], out: &mut [f64]) {
        let w: Vec<f64> = x.iter().zip(a).map(|(xi, ai)| xi - ai).collect();
        truncated_kernel_into(&w, &self.truncation, &self.kernel, out);
    }

    // ----- A₂-type constants -------------------------------------------------

    /// Classical A₂^α: max |Q|_σ |Q|_ω / |Q|^{2(1-α/n)}.
    pub fn a2_classical(&mut self) -> Result<(f64, Witness)> {
        if self.scenario.grids.is_empty() {
            return Err(Error::Validation("empty cube family".into()));
        }
        let mut best = 0.0f64;
        let mut witness = Witness::Empty;
        for gi in 0..self.scenario.grids.len() {
            let sigma_cubes = self.occupied_cubes(gi, WhichMeasure::Sigma);
            let omega_cubes = self.occupied_cubes(gi, WhichMeasure::Omega);
            let omega_set: BTreeSet<&Cube> = omega_cubes.iter().collect();
            let grid = &self.scenario.grids[gi];
            for q in sigma_cubes.iter() {
                if !omega_set.contains(q) {
                    continue;
                }
                let ms = self.scenario.sigma.mass_in(grid, q);
                let mw = self.scenario.omega.mass_in(grid, q);
                let denom =
                    q.side().powf(2.0 * (self.kernel.dimension as f64 - self.kernel.alpha));
                let v = ms * mw / denom;
                if v > best {
                    best = v;
                    witness = Witness::Cube { grid: gi, cube: q.clone() };
                }
            }
        }
        Ok((best, witness))
    }

    /// One-sided 𝒜₂ constants: forward is max 𝒫^α(Q,σ)·|Q|_ω/|Q|^{1-α/n}.
    pub fn a2_onesided(&mut self, direction: Direction) -> Result<(f64, Witness)> {
        if self.scenario.grids.is_empty() {
            return Err(Error::Validation("empty cube family".into()));
        }
        let (poisson_measure, mass_measure) = match direction {
            Direction::Forward => (WhichMeasure::Sigma, WhichMeasure::Omega),
            Direction::Backward => (WhichMeasure::Omega, WhichMeasure::Sigma),
        };
        let mut best = 0.0f64;
        let mut witness = Witness::Empty;
        for gi in 0..self.scenario.grids.len() {
            let candidates = self.occupied_cubes(gi, mass_measure);
            let grid = &self.scenario.grids[gi];
            let pm = self.measure(poisson_measure);
            let mm = self.measure(mass_measure);
            for q in candidates.iter() {
                let mass = mm.mass_in(grid, q);
                if mass <= 0.0 {
                    continue;
                }
                let p = crate::transform::poisson_reproducing(grid, q, pm, &self.kernel);
                let v =
                    p * mass / q.side().powf(self.kernel.dimension as f64 - self.kernel.alpha);
                if v > best {
                    best = v;
                    witness = Witness::Cube { grid: gi, cube: q.clone() };
                }
            }
        }
        Ok((best, witness))
    }

    // ----- Testing and weak boundedness -------------------------------------

    /// Cube testing constant: forward is
    /// max_Q ((1/|Q|_σ) ∫_Q |R(1_Q σ)|² dω)^{1/2}; backward swaps the roles
    /// (the adjoint has the same odd kernel with opposite sign, which the
    /// squared norm ignores).
    pub fn testing_constant(&mut self, direction: Direction) -> Result<(f64, Witness)> {
        let source = direction.outer();
        let target = direction.proj();
        let mut best = 0.0f64;
        let mut witness = Witness::Empty;
        let n = self.kernel.dimension;
        let mut kbuf = vec![0.0; n];
        for gi in 0..self.scenario.grids.len() {
            let candidates = self.occupied_cubes(gi, source);
            let grid = &self.scenario.grids[gi];
            let src = self.measure(source);
            let tgt = self.measure(target);
            for q in candidates.iter() {
                let src_atoms = src.atoms_in(grid, q);
                let src_mass: f64 = src_atoms.iter().map(|&i| src.atoms[i].mass).sum();
                if src_mass <= 0.0 {
                    continue;
                }
                let tgt_atoms = tgt.atoms_in(grid, q);
                if tgt_atoms.is_empty() {
                    continue;
                }
                let mut integral_terms = Vec::with_capacity(tgt_atoms.len());
                for &bi in &tgt_atoms {
                    let b = &tgt.atoms[bi];
                    let mut field = vec![0.0; n];
                    for &ai in &src_atoms {
                        let a = &src.atoms[ai];
                        self.kernel_at(&b.location, &a.location, &mut kbuf);
                        for (f, k) in field.iter_mut().zip(&kbuf) {
                            *f += k * a.mass;
                        }
                    }
                    integral_terms.push(b.mass * field.iter().map(|x| x * x).sum::<f64>());
                }
                let v = pairwise_sum(&integral_terms) / src_mass;
                if v > best {
                    best = v;
                    witness = Witness::Cube { grid: gi, cube: q.clone() };
                }
            }
        }
        Ok((best.sqrt(), witness))
    }

    /// Weak boundedness constant over comparable adjacent cube pairs:
    /// max |∫_Q R(1_{Q'} σ) dω| / sqrt(|Q|_ω |Q'|_σ) over pairs with
    /// 1/C ≤ ℓ(Q)/ℓ(Q') ≤ C and Q ⊂ 3Q'∖Q' or Q' ⊂ 3Q∖Q. The bilinear
    /// integral keeps componentwise signs; the outer |·| is the Euclidean
    /// norm of the vector of integrals.
    pub fn wbp_constant(&mut self) -> Result<(f64, Witness)> {
        let c = self.wbp_comparability;
        if c < 1.0 {
            return Err(Error::Validation("comparability constant must be ≥ 1".into()));
        }
        let mut best = 0.0f64;
        let mut witness = Witness::Empty;
        let n = self.kernel.dimension;
        let mut kbuf = vec![0.0; n];
        let grids = self.scenario.grids.len();
        for gq in 0..grids {
            let q_cubes = self.occupied_cubes(gq, WhichMeasure::Omega);
            for gp in 0..grids {
                let p_cubes = self.occupied_cubes(gp, WhichMeasure::Sigma);
                let grid_q = &self.scenario.grids[gq];
                let grid_p = &self.scenario.grids[gp];
                for q in q_cubes.iter() {
                    let (qlo, qhi) = (q.lower(grid_q), q.upper(grid_q));
                    for qp in p_cubes.iter() {
                        let ratio = q.side() / qp.side();
                        if ratio < 1.0 / c || ratio > c {
                            continue;
                        }
                        let (plo, phi) = (qp.lower(grid_p), qp.upper(grid_p));
                        if !adjacent_disjoint(&qlo, &qhi, &plo, &phi) {
                            continue;
                        }
                        let omega = &self.scenario.omega;
                        let sigma = &self.scenario.sigma;
                        let w_atoms = omega.atoms_in(grid_q, q);
                        let s_atoms = sigma.atoms_in(grid_p, qp);
                        if w_atoms.is_empty() || s_atoms.is_empty() {
                            continue;
                        }
                        let mw: f64 = w_atoms.iter().map(|&i| omega.atoms[i].mass).sum();
                        let ms: f64 = s_atoms.iter().map(|&i| sigma.atoms[i].mass).sum();
                        let mut integral = vec![0.0; n];
                        for &bi in &w_atoms {
                            let b = &omega.atoms[bi];
                            for &ai in &s_atoms {
                                let a = &sigma.atoms[ai];
                                self.kernel_at(&b.location, &a.location, &mut kbuf);
                                for (acc, k) in integral.iter_mut().zip(&kbuf) {
                                    *acc += k * a.mass * b.mass;
                                }
                            }
                        }
                        let v = crate::numeric::norm(&integral) / (mw * ms).sqrt();
                        if v > best {
                            best = v;
                            witness = Witness::CubePair {
                                grid_q: gq,
                                q: q.clone(),
                                grid_q_prime: gp,
                                q_prime: qp.clone(),
                            };
                        }
                    }
                }
            }
        }
        Ok((best, witness))
    }

    // ----- Operator norm ------------------------------------------------------

    /// Exact operator norm of the truncated transform from L²(σ) to the
    /// n-component L²(ω): the largest singular value of the weighted kernel
    /// matrix (component blocks stacked as rows), via a cyclic Jacobi
    /// eigensolve of its Gram matrix.
    pub fn op_norm(&self) -> Result<f64> {
        crate::measure::check_no_common_points(&self.scenario.sigma, &self.scenario.omega)?;
        let sigma = &self.scenario.sigma;
        let omega = &self.scenario.omega;
        if sigma.is_empty() || omega.is_empty() {
            return Ok(0.0);
        }
        let n = self.kernel.dimension;
        let rows = n * omega.atoms.len();
        let cols = sigma.atoms.len();
        let mut a = vec![0.0f64; rows * cols];
        let mut kbuf = vec![0.0; n];
        for (i, b) in omega.atoms.iter().enumerate() {
            let wb = b.mass.sqrt();
            for (j, s) in sigma.atoms.iter().enumerate() {
                let ws = s.mass.sqrt();
                self.kernel_at(&b.location, &s.location, &mut kbuf);
                for (l, k) in kbuf.iter().enumerate() {
                    a[(l * omega.atoms.len() + i) * cols + j] = wb * k * ws;
                }
            }
        }
        let (gram, dim) = if cols <= rows {
            let mut g = vec![0.0f64; cols * cols];
            for c1 in 0..cols {
                for c2 in c1..cols {
                    let mut acc = 0.0;
                    for r in 0..rows {
                        acc += a[r * cols + c1] * a[r * cols + c2];
                    }
                    g[c1 * cols + c2] = acc;
                    g[c2 * cols + c1] = acc;
                }
            }
            (g, cols)
        } else {
            let mut g = vec![0.0f64; rows * rows];
            for r1 in 0..rows {
                for r2 in r1..rows {
                    let mut acc = 0.0;
                    for c in 0..cols {
                        acc += a[r1 * cols + c] * a[r2 * cols + c];
                    }
                    g[r1 * rows + r2] = acc;
                    g[r2 * rows + r1] = acc;
                }
            }
            (g, rows)
        };
        Ok(sym_eigen_max(gram, dim).max(0.0).sqrt())
    }

    // ----- Energy constants ---------------------------------------------------

    /// Energy constant ℰ (or the plugged variant ℰ^plug): square root of the
    /// max over grids, cubes I, sampled subpartitions {I_r} and 0 ≤ ℓ ≤ ℓ_max
    /// of (1/|I|_outer) Σ_r Σ_{J ∈ M^ℓ(I_r)} (P^α(J, ·)/ℓ(J))²·‖P^{subgood}_J x‖².
    pub fn energy_constant(&mut self, direction: Direction, plug: bool) -> Result<(f64, Witness)> {
        let outer = direction.outer();
        let proj = direction.proj();
        let ell_max = self.scenario.goodness.ell_max;
        let mut best = 0.0f64;
        let mut witness = Witness::Empty;
        let strategies = self.strategies.clone();
        for gi in 0..self.scenario.grids.len() {
            let outer_cubes = self.occupied_cubes(gi, outer);
            for i_cube in outer_cubes.iter() {
                // A positive term needs a deep subcube carrying ≥ 2 projection
                // atoms; levels must leave room for the r-deep gap.
                if i_cube.level + self.scenario.goodness.r as i32
                    > self.scenario.grids[gi].level_max
                {
                    continue;
                }
                let grid = &self.scenario.grids[gi];
                let proj_count = self.measure(proj).atoms_in(grid, i_cube).len();
                if proj_count < 2 {
                    continue;
                }
                let outer_mass = self.measure(outer).mass_in(grid, i_cube);
                if outer_mass <= 0.0 {
                    continue;
                }
                let mut ctx = EnergyContext::new(self, gi, i_cube.clone(), direction, plug);
                for strategy in &strategies {
                    match strategy {
                        PartitionStrategy::Greedy { max_rounds } => {
                            for ell in 0..=ell_max {
                                ctx.greedy(self, *max_rounds, ell, &mut best, &mut witness);
                            }
                        }
                        _ => {
                            for partition in ctx.generate(self, strategy) {
                                for ell in 0..=ell_max {
                                    let v = ctx.functional(self, &partition, ell);
                                    if v > best {
                                        best = v;
                                        witness = Witness::Energy {
                                            grid: gi,
                                            i: i_cube.clone(),
                                            partition: sorted(&partition),
                                            ell,
                                        };
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok((best.sqrt(), witness))
    }

    /// Re-evaluate the energy functional at an explicit witness; returns the
    /// square root so the result is comparable with `energy_constant`.
    pub fn energy_functional_at(
        &mut self,
        direction: Direction,
        plug: bool,
        grid: usize,
        i: &Cube,
        partition: &[Cube],
        ell: u32,
    ) -> Result<f64> {
        if grid >= self.scenario.grids.len() {
            return Err(Error::Validation("witness grid index out of range".into()));
        }
        let mut ctx = EnergyContext::new(self, grid, i.clone(), direction, plug);
        Ok(ctx.functional(self, partition, ell).sqrt())
    }

    /// Overlap count β of the dilated refined family at an energy witness.
    pub fn overlap_beta_at(
        &mut self,
        direction: Direction,
        grid: usize,
        i: &Cube,
        partition: &[Cube],
        ell: u32,
    ) -> u32 {
        let proj = direction.proj();
        let mut family = Vec::new();
        for cell in partition {
            family.extend(self.refined_deep(grid, proj, cell, ell));
        }
        let g = &self.scenario.grids[grid];
        overlap_constant(g, i, &family, self.scenario.goodness.gamma)
    }

    /// Compute the full report, in fixed order.
    pub fn compute_all(&mut self, timings: bool) -> Result<ConstantsReport> {
        let family = self.family_label();
        let strategy = PartitionStrategy::label(&self.strategies);
        let entry = |value: f64, witness: Witness, strategy: &str, started: Instant| {
            ConstantEntry {
                value,
                witness,
                family: family.clone(),
                strategy: strategy.to_string(),
                runtime_ms: timings.then(|| started.elapsed().as_millis() as u64),
            }
        };

        let t0 = Instant::now();
        let (v, w) = self.a2_classical()?;
        let a2_classical = entry(v, w, "cube-max", t0);
        let t0 = Instant::now();
        let (v, w) = self.a2_onesided(Direction::Forward)?;
        let a2_forward = entry(v, w, "cube-max", t0);
        let t0 = Instant::now();
        let (v, w) = self.a2_onesided(Direction::Backward)?;
        let a2_backward = entry(v, w, "cube-max", t0);
        let t0 = Instant::now();
        let (v, w) = self.testing_constant(Direction::Forward)?;
        let testing_forward = entry(v, w, "cube-max", t0);
        let t0 = Instant::now();
        let (v, w) = self.testing_constant(Direction::Backward)?;
        let testing_backward = entry(v, w, "cube-max", t0);
        let t0 = Instant::now();
        let (v, w) = self.wbp_constant()?;
        let wbp = entry(v, w, &format!("pairs C={}", self.wbp_comparability), t0);
        let t0 = Instant::now();
        let (v, w) = self.energy_constant(Direction::Forward, false)?;
        let energy_forward = entry(v, w, &strategy, t0);
        let t0 = Instant::now();
        let (v, w) = self.energy_constant(Direction::Backward, false)?;
        let energy_backward = entry(v, w, &strategy, t0);
        let t0 = Instant::now();
        let (v, w) = self.energy_constant(Direction::Forward, true)?;
        let energy_plug_forward = entry(v, w, &strategy, t0);
        let t0 = Instant::now();
        let (v, w) = self.energy_constant(Direction::Backward, true)?;
        let energy_plug_backward = entry(v, w, &strategy, t0);
        let t0 = Instant::now();
        let v = self.op_norm()?;
        let op_norm = entry(v, Witness::Empty, "svd", t0);

        Ok(ConstantsReport {
            a2_classical,
            a2_forward,
            a2_backward,
            testing_forward,
            testing_backward,
            wbp,
            energy_forward,
            energy_backward,
            energy_plug_forward,
            energy_plug_backward,
            op_norm,
        })
    }
}

fn sorted(cubes: &[Cube]) -> Vec<Cube> {
    let mut v = cubes.to_vec();
    v.sort();
    v
}

/// `q ⊂ 3q'∖q'` or `q' ⊂ 3q∖q` on half-open boxes.
fn adjacent_disjoint(qlo: &[f64], qhi: &[f64], plo: &[f64], phi: &[f64]) -> bool {
    let disjoint = qlo
        .iter()
        .zip(qhi)
        .zip(plo.iter().zip(phi))
        .any(|((ql, qh), (pl, ph))| qh <= pl || ph <= ql);
    if !disjoint {
        return false;
    }
    let inside = |lo: &[f64], hi: &[f64], olo: &[f64], ohi: &[f64]| -> bool {
        // The other box dilated by 3 around its center contains [lo, hi).
        lo.iter().zip(hi).zip(olo.iter().zip(ohi)).all(|((l, h), (ol, oh))| {
            let c = 0.5 * (ol + oh);
            let half = 1.5 * (oh - ol);
            c - half <= *l && *h <= c + half
        })
    };
    inside(qlo, qhi, plo, phi) || inside(plo, phi, qlo, qhi)
}

/// Per-candidate-I working state for the energy supremum: the outer-measure
/// atoms inside I and a cache of per-cell terms keyed by (cell, ℓ).
struct EnergyContext {
    grid_idx: usize,
    i_cube: Cube,
    direction: Direction,
    plug: bool,
    outer_atoms: Vec<(Vec<f64>, f64)>,
    outer_mass: f64,
    term_cache: HashMap<(Cube, u32), f64>,
}

impl EnergyContext {
    fn new(
        ev: &Evaluator<'_>,
        grid_idx: usize,
        i_cube: Cube,
        direction: Direction,
        plug: bool,
    ) -> Self {
        let grid = &ev.scenario.grids[grid_idx];
        let outer = ev.measure(direction.outer());
        let outer_atoms: Vec<(Vec<f64>, f64)> = outer
            .atoms
            .iter()
            .filter(|a| i_cube.contains_point(grid, &a.location))
            .map(|a| (a.location.clone(), a.mass))
            .collect();
        let outer_mass = outer_atoms.iter().map(|(_, m)| m).sum();
        EnergyContext {
            grid_idx,
            i_cube,
            direction,
            plug,
            outer_atoms,
            outer_mass,
            term_cache: HashMap::new(),
        }
    }

    /// Σ_{J ∈ M^ℓ(cell)} (P^α(J, 1_{I∖γJ}·outer)/ℓ(J))² ‖P^{subgood}_J x‖²,
    /// not yet normalized by |I|_outer. The plugged variant drops the γJ hole.
    fn term(&mut self, ev: &mut Evaluator<'_>, cell: &Cube, ell: u32) -> f64 {
        if let Some(v) = self.term_cache.get(&(cell.clone(), ell)) {
            return *v;
        }
        let proj = self.direction.proj();
        let family = ev.refined_deep(self.grid_idx, proj, cell, ell);
        let e = ev.kernel.dimension as f64 + 1.0 - ev.kernel.alpha;
        let gamma = ev.scenario.goodness.gamma;
        let mut total = 0.0;
        for j in &family {
            let sg = ev.subgood(self.grid_idx, proj, j);
            if sg <= 0.0 {
                continue;
            }
            let grid = &ev.scenario.grids[self.grid_idx];
            let side = j.side();
            let center = j.center(grid);
            let (hole_lo, hole_hi) = j.dilated_box(grid, gamma);
            let terms: Vec<f64> = self
                .outer_atoms
                .iter()
                .filter(|(x, _)| self.plug || !box_contains(&hole_lo, &hole_hi, x))
                .map(|(x, m)| m * side / (side + crate::numeric::dist(x, &center)).powf(e))
                .collect();
            let p = pairwise_sum(&terms);
            total += (p / side) * (p / side) * sg;
        }
        self.term_cache.insert((cell.clone(), ell), total);
        total
    }

    fn functional(&mut self, ev: &mut Evaluator<'_>, partition: &[Cube], ell: u32) -> f64 {
        if self.outer_mass <= 0.0 {
            return 0.0;
        }
        let mut acc = 0.0;
        for cell in partition {
            acc += self.term(ev, cell, ell);
        }
        acc / self.outer_mass
    }

    fn generate(&self, ev: &Evaluator<'_>, strategy: &PartitionStrategy) -> Vec<Vec<Cube>> {
        let grid = &ev.scenario.grids[self.grid_idx];
        let level_room = (grid.level_max - self.i_cube.level).max(0) as u32;
        match strategy {
            PartitionStrategy::Trivial => vec![vec![self.i_cube.clone()]],
            PartitionStrategy::Uniform { depth } => {
                let mut out = Vec::new();
                for d in 1..=(*depth).min(level_room) {
                    let mut cells = vec![self.i_cube.clone()];
                    for _ in 0..d {
                        cells = cells.iter().flat_map(|c| c.children(grid)).collect();
                    }
                    out.push(cells);
                }
                out
            }
            PartitionStrategy::RandomSeeded { count, seed, max_depth } => {
                let mut out = Vec::new();
                for idx in 0..*count {
                    // Per-candidate stream: independent of evaluation order.
                    let mut state = seed
                        .wrapping_mul(0x9e3779b97f4a7c15)
                        .wrapping_add(hash_cube(&self.i_cube))
                        .wrapping_add(idx as u64);
                    let mut cells = Vec::new();
                    random_split(
                        grid,
                        &self.i_cube,
                        (*max_depth).min(level_room),
                        &mut state,
                        &mut cells,
                    );
                    out.push(cells);
                }
                out
            }
            PartitionStrategy::Greedy { .. } => Vec::new(), // handled separately
            PartitionStrategy::Exhaustive { depth } => {
                let mut out = Vec::new();
                exhaustive_partitions(grid, &self.i_cube, (*depth).min(level_room), &mut out);
                out
            }
        }
    }

    /// Greedy refinement: split the cell with the largest term while that
    /// increases the functional; every accepted state is a candidate.
    fn greedy(
        &mut self,
        ev: &mut Evaluator<'_>,
        max_rounds: u32,
        ell: u32,
        best: &mut f64,
        witness: &mut Witness,
    ) {
        let level_max = ev.scenario.grids[self.grid_idx].level_max;
        let mut cells = vec![self.i_cube.clone()];
        let mut current: f64 = self.functional(ev, &cells, ell);
        self.offer(&cells, ell, current, best, witness);
        for _ in 0..max_rounds {
            // Pick the splittable cell with the largest term (first wins ties).
            let mut pick: Option<(usize, f64)> = None;
            for (idx, cell) in cells.iter().enumerate() {
                if cell.level >= level_max {
                    continue;
                }
                let t = self.term(ev, cell, ell);
                if pick.map(|(_, tv)| t > tv).unwrap_or(true) {
                    pick = Some((idx, t));
                }
            }
            let Some((idx, old_term)) = pick else { break };
            let children = {
                let grid = &ev.scenario.grids[self.grid_idx];
                cells[idx].children(grid)
            };
            let new_terms: f64 = children.iter().map(|c| self.term(ev, c, ell)).sum();
            if new_terms <= old_term {
                break;
            }
            cells.splice(idx..=idx, children);
            current += (new_terms - old_term) / self.outer_mass;
            self.offer(&cells, ell, current, best, witness);
        }
    }

    fn offer(&self, cells: &[Cube], ell: u32, value: f64, best: &mut f64, witness: &mut Witness) {
        if value > *best {
            *best = value;
            *witness = Witness::Energy {
                grid: self.grid_idx,
                i: self.i_cube.clone(),
                partition: sorted(cells),
                ell,
            };
        }
    }
}

fn hash_cube(c: &Cube) -> u64 {
    let mut h = 0xcbf29ce484222325u64 ^ (c.level as u64).wrapping_mul(0x100000001b3);
    for &m in &c.coords {
        h ^= m as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn next_u64(state: &mut u64) -> u64 {
    // splitmix64
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn random_split(grid: &GridSpec, cube: &Cube, depth: u32, state: &mut u64, out: &mut Vec<Cube>) {
    if depth == 0 || next_u64(state) % 2 == 0 {
        out.push(cube.clone());
        return;
    }
    for child in cube.children(grid) {
        random_split(grid, &child, depth - 1, state, out);
    }
}

/// Every mixed dyadic subpartition of `cube` to the given depth (the cube
/// itself, or any combination of recursively partitioned children).
pub fn exhaustive_partitions(grid: &GridSpec, cube: &Cube, depth: u32, out: &mut Vec<Vec<Cube>>) {
    out.push(vec![cube.clone()]);
    if depth == 0 {
        return;
    }
    let children = cube.children(grid);
    let mut per_child: Vec<Vec<Vec<Cube>>> = Vec::with_capacity(children.len());
    for child in &children {
        let mut sub = Vec::new();
        exhaustive_partitions(grid, child, depth - 1, &mut sub);
        per_child.push(sub);
    }
    // Cartesian product of the per-child partitions.
    let mut acc: Vec<Vec<Cube>> = vec![Vec::new()];
    for sub in per_child {
        let mut next = Vec::with_capacity(acc.len() * sub.len());
        for prefix in &acc {
            for choice in &sub {
                let mut cells = prefix.clone();
                cells.extend(choice.iter().cloned());
                next.push(cells);
            }
        }
        acc = next;
    }
    out.extend(acc);
}

/// Cube of the grid at `level` containing `x`.
pub fn cube_at(grid: &GridSpec, level: i32, x: &[f64]) -> Cube {
    let scale = f64::exp2(level as f64);
    Cube {
        level,
        coords: x
            .iter()
            .zip(&grid.shift)
            .map(|(xi, s)| ((xi - s) * scale).floor() as i64)
            .collect(),
    }
}

/// Largest eigenvalue of a symmetric matrix (row-major, size n), by cyclic
/// Jacobi rotations run to machine-precision convergence. Deterministic.
fn sym_eigen_max(mut g: Vec<f64>, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        let mut diag = 0.0;
        for i in 0..n {
            diag += g[i * n + i] * g[i * n + i];
            for j in (i + 1)..n {
                off += g[i * n + j] * g[i * n + j];
            }
        }
        if off <= 1e-30 * (diag + f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = g[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (g[q * n + q] - g[p * n + p]) / (2.0 * apq);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let gkp = g[k * n + p];
                    let gkq = g[k * n + q];
                    g[k * n + p] = c * gkp - s * gkq;
                    g[k * n + q] = s * gkp + c * gkq;
                }
                for k in 0..n {
                    let gpk = g[p * n + k];
                    let gqk = g[q * n + k];
                    g[p * n + k] = c * gpk - s * gqk;
                    g[q * n + k] = s * gpk + c * gqk;
                }
            }
        }
    }
    (0..n).map(|i| g[i * n + i]).fold(f64::NEG_INFINITY, f64::max)
}
