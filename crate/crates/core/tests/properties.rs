//! Property tests for the structural invariants: tiling, kernel symmetry,
//! restriction additivity, deep-embedding consequences, overlap invariance
//! under dyadic rescaling, and truncation transparency on shielded data.

use proptest::prelude::*;

use twoweight::constants::cube_at;
use twoweight::geometry::{
    is_deeply_embedded, maximal_deep_subcubes, overlap_constant, refined_deep_subcubes, Cube,
    GoodnessParams, GridSpec,
};
use twoweight::measure::{Atom, DiscreteMeasure};
use twoweight::transform::{
    apply_transform, poisson_standard, riesz_kernel, KernelParams, Truncation,
};

fn grid1() -> GridSpec {
    GridSpec::new(1, vec![0.0], 0, 10, vec![0]).unwrap()
}

fn grid2() -> GridSpec {
    GridSpec::new(2, vec![0.0, 0.0], 0, 8, vec![0, 0]).unwrap()
}

proptest! {
    #[test]
    fn point_lies_in_exactly_one_cube_per_level(
        x in 0.0f64..1.0,
        y in 0.0f64..1.0,
        level in 0i32..6,
    ) {
        let g = grid2();
        let q = cube_at(&g, level, &[x, y]);
        prop_assert!(q.contains_point(&g, &[x, y]));
        // The children tile q: exactly one contains the point, and each
        // child's parent is q.
        let children = q.children(&g);
        let hits = children.iter().filter(|c| c.contains_point(&g, &[x, y])).count();
        prop_assert_eq!(hits, 1);
        for c in &children {
            prop_assert_eq!(c.ancestor_at(level), q.clone());
        }
    }

    #[test]
    fn kernel_oddness_and_homogeneity(
        wx in -5.0f64..5.0,
        wy in -5.0f64..5.0,
        t in 0.01f64..100.0,
        alpha in 0.0f64..1.99,
    ) {
        prop_assume!(wx != 0.0 || wy != 0.0);
        let p = KernelParams::new(2, alpha).unwrap();
        let w = [wx, wy];
        let k = riesz_kernel(&w, &p).unwrap();
        let neg = riesz_kernel(&[-wx, -wy], &p).unwrap();
        for (a, b) in k.iter().zip(&neg) {
            prop_assert_eq!(*a, -*b);
        }
        // |K(tw)| = t^{α−n} |K(w)|.
        let scaled = riesz_kernel(&[t * wx, t * wy], &p).unwrap();
        let mag = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let expected = t.powf(alpha - 2.0) * mag(&k);
        prop_assert!((mag(&scaled) - expected).abs() <= 1e-9 * expected.max(1e-300));
    }

    #[test]
    fn restriction_partitions_total_mass(
        atoms in proptest::collection::vec((0.0f64..1.0, 0.1f64..10.0), 1..20),
        cut in 0.0f64..1.0,
    ) {
        let mut seen = std::collections::BTreeSet::new();
        let atoms: Vec<Atom> = atoms
            .into_iter()
            .filter(|(x, _)| seen.insert(x.to_bits()))
            .map(|(x, m)| Atom::new(vec![x], m))
            .collect();
        prop_assume!(!atoms.is_empty());
        let mu = DiscreteMeasure::new(1, atoms).unwrap();
        let left = mu.restrict(|p| p[0] < cut);
        let right = mu.restrict(|p| p[0] >= cut);
        let total = left.total_mass() + right.total_mass();
        prop_assert!((total - mu.total_mass()).abs() <= 1e-12 * mu.total_mass());
        prop_assert_eq!(left.atoms.len() + right.atoms.len(), mu.atoms.len());
    }

    #[test]
    fn deep_embedding_implies_subset_and_level_gap(
        jx in 0.0f64..1.0,
        jlevel in 1i32..8,
        klevel in 0i32..4,
        r in 1u32..4,
    ) {
        prop_assume!(klevel < jlevel);
        let g = grid1();
        let p = GoodnessParams { r, ..Default::default() };
        let j = cube_at(&g, jlevel, &[jx]);
        let k = cube_at(&g, klevel, &[jx]);
        if is_deeply_embedded(&g, &j, &k, &p) {
            prop_assert!(k.contains_cube(&j));
            prop_assert!(j.level >= k.level + r as i32);
        }
    }

    #[test]
    fn refined_zero_equals_maximal(
        atoms in proptest::collection::vec(0.0f64..1.0, 1..8),
        klevel in 0i32..3,
        kx in 0.0f64..1.0,
    ) {
        let g = grid1();
        let p = GoodnessParams { r: 2, ..Default::default() };
        let mut seen = std::collections::BTreeSet::new();
        let support = DiscreteMeasure::new(
            1,
            atoms
                .into_iter()
                .filter(|x| seen.insert(x.to_bits()))
                .map(|x| Atom::new(vec![x], 1.0))
                .collect(),
        )
        .unwrap();
        let k = cube_at(&g, klevel, &[kx]);
        let refined = refined_deep_subcubes(&g, &k, 0, &p, &support).unwrap();
        let maximal = maximal_deep_subcubes(&g, &k, &p, &support);
        prop_assert_eq!(refined, maximal);
    }

    #[test]
    fn overlap_count_is_dyadic_scale_invariant(
        levels in proptest::collection::vec(2i32..5, 1..6),
        offsets in proptest::collection::vec(0u8..16, 1..6),
        shift in -2i32..3,
    ) {
        // Disjoint subcubes of the unit interval, then the same configuration
        // rescaled by 2^{-shift}.
        let g = grid1();
        let k = g.root();
        let mut family = Vec::new();
        for (level, off) in levels.iter().zip(&offsets) {
            let cells = 1i64 << level;
            let c = Cube { level: *level, coords: vec![(*off as i64) % cells] };
            if !family.iter().any(|f: &Cube| f.contains_cube(&c) || c.contains_cube(f)) {
                family.push(c);
            }
        }
        let base = overlap_constant(&g, &k, &family, 2.0);
        let g2 = GridSpec::new(1, vec![0.0], 0 - shift, 12, vec![0]).unwrap();
        let k2 = Cube { level: k.level - shift, coords: vec![0] };
        let family2: Vec<Cube> = family
            .iter()
            .map(|c| Cube { level: c.level - shift, coords: c.coords.clone() })
            .collect();
        prop_assert_eq!(base, overlap_constant(&g2, &k2, &family2, 2.0));
    }

    #[test]
    fn shielded_truncation_matches_raw_kernel(
        atoms in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0.1f64..4.0), 1..10),
        ex in 2.0f64..4.0,
        ey in -3.0f64..-1.0,
        alpha in 0.0f64..1.9,
    ) {
        let mut seen = std::collections::BTreeSet::new();
        let atoms: Vec<Atom> = atoms
            .into_iter()
            .filter(|(x, y, _)| seen.insert((x.to_bits(), y.to_bits())))
            .map(|(x, y, m)| Atom::new(vec![x, y], m))
            .collect();
        let sigma = DiscreteMeasure::new(2, atoms).unwrap();
        let p = KernelParams::new(2, alpha).unwrap();
        // Every source-to-eval distance is at least 1 and at most ~7.
        let t = Truncation::new(0.5, 16.0, 2, alpha).unwrap();
        let f = vec![1.0; sigma.atoms.len()];
        let got = &apply_transform(&f, &sigma, &[vec![ex, ey]], &t, &p)[0];
        let mut raw = vec![0.0, 0.0];
        for a in &sigma.atoms {
            let w: Vec<f64> = [ex, ey].iter().zip(&a.location).map(|(e, l)| e - l).collect();
            let k = riesz_kernel(&w, &p).unwrap();
            raw[0] += k[0] * a.mass;
            raw[1] += k[1] * a.mass;
        }
        for (g, r) in got.iter().zip(&raw) {
            prop_assert!((g - r).abs() <= 1e-14 * (1.0 + r.abs()));
        }
    }

    #[test]
    fn poisson_is_monotone_in_the_measure(
        atoms in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0.1f64..4.0), 2..12),
        alpha in 0.0f64..1.9,
        level in 0i32..4,
    ) {
        let mut seen = std::collections::BTreeSet::new();
        let atoms: Vec<Atom> = atoms
            .into_iter()
            .filter(|(x, y, _)| seen.insert((x.to_bits(), y.to_bits())))
            .map(|(x, y, m)| Atom::new(vec![x, y], m))
            .collect();
        prop_assume!(atoms.len() >= 2);
        let g = grid2();
        let q = Cube { level, coords: vec![0, 0] };
        let p = KernelParams::new(2, alpha).unwrap();
        let all = DiscreteMeasure::new(2, atoms.clone()).unwrap();
        let fewer = DiscreteMeasure::new(2, atoms[..atoms.len() - 1].to_vec()).unwrap();
        prop_assert!(
            poisson_standard(&g, &q, &fewer, &p)
                <= poisson_standard(&g, &q, &all, &p) * (1.0 + 1e-12)
        );
    }
}
