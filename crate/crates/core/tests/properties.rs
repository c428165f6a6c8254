mod common;

use std::collections::{BTreeMap, BTreeSet};

use num_traits::One;
use proptest::prelude::*;
use sperner::chains::{build_nerve_poset, max_chain_length};
use sperner::covers::{
    colouring_to_cover, cover_to_colouring, g_sigma, max_multiplicity_point, random_box_cover,
    region_contains_closed_box, CoverError, CoverMember, RandomCoverParams,
};
use sperner::fixedpoint::{builtin_map, sign_labeling};
use sperner::formats::{parse_colouring, parse_cover, parse_simplicial, write_colouring, write_cover, write_simplicial};
use sperner::labelings::{
    boundedness_check, check_cubical_sperner, find_fully_labeled_cell, max_colours_per_cube,
    random_simplicial_labeling, random_sperner_colouring, ColourId, Colouring, PaletteMode,
};
use sperner::lattice::{
    ball, hat_ball, local_lebesgue, positive_cube, sup_distance, truncated_add, CoordSet, GridSet, Index,
};
use sperner::subdivision::{adaptive_subdivide, leaf_intervals, DyadicCube};

use common::Q;

fn index(dim: usize, n: u32) -> impl Strategy<Value = Index> {
    prop::collection::vec(0..=n, dim).prop_map(move |c| Index::new(n, c).unwrap())
}

fn shape() -> impl Strategy<Value = (usize, u32)> {
    (1usize..=5, 1u32..=4)
}

fn triple() -> impl Strategy<Value = (Index, Index, Index)> {
    shape().prop_flat_map(|(d, n)| (index(d, n), index(d, n), index(d, n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn truncated_add_laws((a, b, c) in triple()) {
        let ab = truncated_add(&a, &b).unwrap();
        prop_assert_eq!(&ab, &truncated_add(&b, &a).unwrap());
        prop_assert_eq!(
            truncated_add(&ab, &c).unwrap(),
            truncated_add(&a, &truncated_add(&b, &c).unwrap()).unwrap()
        );
        let zero = Index::zero(a.dim(), a.bound()).unwrap();
        prop_assert_eq!(truncated_add(&a, &zero).unwrap(), a);
    }

    #[test]
    fn positive_cube_size(sigma in (1usize..=12, 1u32..=3).prop_flat_map(|(d, n)| index(d, n))) {
        let free = sigma.coords().iter().filter(|&&c| c < sigma.bound()).count();
        let cube = positive_cube(&sigma);
        prop_assert_eq!(cube.len(), 1usize << free);
        prop_assert!(cube.iter().all(|t| sup_distance(t, &sigma).unwrap() <= 1));
    }

    #[test]
    fn sup_distance_is_a_metric((a, b, c) in triple()) {
        let d = |x: &Index, y: &Index| sup_distance(x, y).unwrap();
        prop_assert_eq!(d(&a, &a), 0);
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert_eq!(d(&a, &b) == 0, a == b);
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c));
    }

    #[test]
    fn balls_nest(
        (sigma, mask, k) in shape().prop_flat_map(|(d, n)| (index(d, n), 0u64..(1 << d), 0..n))
    ) {
        let a = CoordSet::from_mask(sigma.dim(), mask).unwrap();
        let small: BTreeSet<Index> = ball(&sigma, &a, k).unwrap().into_iter().collect();
        let large: BTreeSet<Index> = ball(&sigma, &a, k + 1).unwrap().into_iter().collect();
        prop_assert!(small.is_subset(&large));
        let hat: BTreeSet<Index> = hat_ball(&sigma, &a.complement(), k).unwrap().into_iter().collect();
        prop_assert!(small.is_subset(&hat));
        prop_assert!(small.iter().all(|t| sup_distance(t, &sigma).unwrap() <= k));
    }

    #[test]
    fn local_lebesgue_grows_with_fixed_axes(
        (seed, mask, extra, pick) in (0u64..1000, 0u64..8, 0u64..8, 0usize..1000)
    ) {
        let phi = random_sperner_colouring(3, 3, seed, PaletteMode::Mixed).unwrap();
        let grid = phi.grid();
        let cover: Vec<GridSet> = phi
            .palette()
            .into_iter()
            .map(|c| GridSet::from_predicate(grid, |s| phi.colour(s).unwrap() == c))
            .collect();
        let sigma = grid.unrank(pick % grid.len());
        let a = CoordSet::from_mask(3, mask).unwrap();
        let wider = a.union(&CoordSet::from_mask(3, extra).unwrap());
        let l = local_lebesgue(&sigma, &a, &cover).unwrap().unwrap();
        let l_wider = local_lebesgue(&sigma, &wider, &cover).unwrap().unwrap();
        prop_assert!(l <= l_wider);
    }
}

fn colouring_case() -> impl Strategy<Value = (usize, u32, u64)> {
    (1usize..=4, 1u32..=4, any::<u64>()).prop_filter("grid size", |(d, n, _)| (n + 1).pow(*d as u32) <= 700)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn valid_colourings_have_rich_cubes((dim, n, seed) in colouring_case()) {
        let phi = random_sperner_colouring(dim, n, seed, PaletteMode::Mixed).unwrap();
        let raw = common::raw_colours(&phi);
        prop_assert!(common::sperner_valid(dim, n, &raw));
        prop_assert!(check_cubical_sperner(&phi).is_valid());
        let count = max_colours_per_cube(&phi).count;
        prop_assert!(count > dim);
        prop_assert_eq!(count, common::max_cube_colours(dim, n, &raw));
    }

    #[test]
    fn generation_is_deterministic((dim, n, seed) in colouring_case()) {
        let a = random_sperner_colouring(dim, n, seed, PaletteMode::Mixed).unwrap();
        let b = random_sperner_colouring(dim, n, seed, PaletteMode::Mixed).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn cover_diameters_match_validity(
        (dim, n, seed, victim) in (1usize..=3, 2u32..=4, any::<u64>(), any::<usize>())
    ) {
        let phi = random_sperner_colouring(dim, n, seed, PaletteMode::Mixed).unwrap();
        let cover = colouring_to_cover(&phi).unwrap();
        prop_assert!(cover.max_diameter().unwrap() < Q::one());

        // recolour one corner-opposite pair alike to break the condition
        let grid = phi.grid();
        let mut colours = phi.colours().to_vec();
        let at = victim % grid.len();
        let sigma = grid.unrank(at);
        let mut opposite = sigma.coords().to_vec();
        opposite[0] = if sigma.coords()[0] == 0 { n } else { 0 };
        let partner = Index::new(n, opposite).unwrap();
        colours[grid.rank(&partner)] = colours[at];
        let bad = Colouring::from_vec(grid, colours.clone()).unwrap();
        let raw: Vec<u64> = colours.iter().map(|c| c.0).collect();
        let oracle = common::sperner_valid(dim, n, &raw);
        prop_assert_eq!(check_cubical_sperner(&bad).is_valid(), oracle);
        if !oracle {
            prop_assert!(matches!(colouring_to_cover(&bad), Err(CoverError::InvalidColouring(..))));
            let mut classes: BTreeMap<ColourId, Vec<_>> = BTreeMap::new();
            for (rank, s) in grid.iter().enumerate() {
                classes.entry(colours[rank]).or_default().push(g_sigma(&s));
            }
            let widest = classes
                .into_iter()
                .map(|(c, region)| CoverMember { label: c.0, region }.diameter().unwrap())
                .max()
                .unwrap();
            prop_assert!(widest >= Q::one());
        }
    }

    #[test]
    fn unit_grid_boxes_are_too_wide((dim, seed) in (1usize..=3, any::<u64>())) {
        // at n = 1 every G_σ spans a whole half-open unit interval
        let phi = random_sperner_colouring(dim, 1, seed, PaletteMode::Mixed).unwrap();
        let is_too_wide = matches!(colouring_to_cover(&phi), Err(CoverError::DiameterNotBelowOne { .. }));
        prop_assert!(is_too_wide);
    }

    #[test]
    fn fine_covers_colour_validly((dim, seed, n) in (1usize..=3, any::<u64>(), 1u32..=5)) {
        let cover = random_box_cover(dim, seed, &RandomCoverParams::default()).unwrap();
        prop_assert!(cover.max_diameter().unwrap() < Q::one());
        let phi = cover_to_colouring(&cover, n).unwrap();
        prop_assert!(check_cubical_sperner(&phi).is_valid());
    }

    #[test]
    fn valid_labelings_have_fully_labeled_cells((d, m, seed) in (1usize..=3, 1u32..=6, any::<u64>())) {
        let phi = random_simplicial_labeling(d, m, seed).unwrap();
        prop_assert!(common::simplicial_valid(&phi));
        let cell = find_fully_labeled_cell(&phi).unwrap();
        prop_assert!(phi.is_fully_labeled(&cell));
        prop_assert_eq!(common::count_fully_labeled(&phi) % 2, 1);
    }

    #[test]
    fn bounded_labelings_separate_corners(
        (d, m, seed, noise) in (1usize..=3, 1u32..=4, any::<u64>(), prop::collection::vec(0u32..4, 40))
    ) {
        // arbitrary labels, not necessarily valid
        let base = random_simplicial_labeling(d, m, seed).unwrap();
        let labels: Vec<u32> = base
            .labels()
            .iter()
            .enumerate()
            .map(|(i, &l)| if noise[i % noise.len()] == 0 { (l + 1) % (d as u32 + 1) } else { l })
            .collect();
        let phi = sperner::labelings::SimplicialColouring::new(base.complex().clone(), labels).unwrap();
        if boundedness_check(&phi) {
            let c = phi.complex();
            let corners: BTreeSet<u32> = (0..=d).map(|j| phi.labels()[c.corner(j)]).collect();
            prop_assert_eq!(corners.len(), d + 1);
        }
    }

    #[test]
    fn sign_labelings_are_valid((m, c0, c1, axis) in (1u32..=12, 0i64..=12, 0i64..=12, 0usize..2)) {
        for (name, arg) in [
            ("const", format!("{c0}/12,{c1}/12")),
            ("shift", format!("{axis},{}/12", c0 - 6)),
            ("poly", format!("{c0}/24,1/2;{c1}/24,0,1/2")),
            ("rotate", String::new()),
        ] {
            let f = builtin_map(name, 2, Some(&arg).filter(|a| !a.is_empty()).map(|a| a.as_str())).unwrap();
            prop_assert!(check_cubical_sperner(&sign_labeling(f.as_ref(), m).unwrap()).is_valid(), "{}", name);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn witness_matches_brute_force((dim, seed) in (1usize..=2, any::<u64>())) {
        let cover = random_box_cover(dim, seed, &RandomCoverParams::default()).unwrap();
        let w = max_multiplicity_point(&cover).unwrap();
        prop_assert_eq!(w.multiplicity(), common::brute_max_multiplicity(&cover));
        prop_assert_eq!(w.multiplicity(), common::multiplicity_at(&cover, &w.point));
    }

    #[test]
    fn nerve_chains_reach_multiplicity((dim, seed, max_size) in (1usize..=2, any::<u64>(), 1usize..=6)) {
        let cover = random_box_cover(dim, seed, &RandomCoverParams::default()).unwrap();
        let poset = build_nerve_poset(&cover, max_size, 1_000_000);
        prop_assert!(poset.is_downward_closed());
        let mult = max_multiplicity_point(&cover).unwrap().multiplicity();
        let chain = max_chain_length(&poset);
        prop_assert!(chain >= mult.min(max_size));
        if max_size >= mult {
            prop_assert_eq!(chain, mult);
        }
    }

    #[test]
    fn subdivision_refines_monotonically((dim, seed, level) in (1usize..=2, any::<u64>(), 0u32..4)) {
        let cover = random_box_cover(dim, seed, &RandomCoverParams::default()).unwrap();
        let coarse = leaf_intervals(&adaptive_subdivide(&cover, level).unwrap());
        let fine = leaf_intervals(&adaptive_subdivide(&cover, level + 1).unwrap());
        for (lo, hi, _) in &fine {
            let inside = coarse.iter().any(|(clo, chi, _)| {
                (0..dim).all(|k| clo[k] <= lo[k] && hi[k] <= chi[k])
            });
            prop_assert!(inside);
        }
        // accepted coarse leaves survive unchanged
        for leaf in coarse.iter().filter(|l| l.2.is_some()) {
            prop_assert!(fine.contains(leaf));
        }
    }

    #[test]
    fn depth_bounded_by_uniform_level((dim, seed) in (1usize..=2, any::<u64>())) {
        let cover = random_box_cover(dim, seed, &RandomCoverParams::default()).unwrap();
        // least level at which every dyadic cube sits inside some member
        let mut level = 0;
        let uniform = loop {
            let mut cubes = vec![DyadicCube::root(dim)];
            for _ in 0..level {
                cubes = cubes.iter().flat_map(|c| c.children()).collect();
            }
            if cubes.iter().all(|c| {
                cover.members().iter().any(|m| region_contains_closed_box(&m.region, &c.lower(), &c.upper()))
            }) {
                break level;
            }
            level += 1;
            prop_assert!(level <= 8, "no uniform level found");
        };
        let tree = adaptive_subdivide(&cover, 20).unwrap();
        prop_assert!(tree.depth() <= uniform);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn colouring_files_round_trip((dim, n, seed) in colouring_case()) {
        let phi = random_sperner_colouring(dim, n, seed, PaletteMode::Mixed).unwrap();
        prop_assert_eq!(parse_colouring(&write_colouring(&phi)).unwrap(), phi);
    }

    #[test]
    fn cover_files_round_trip((dim, seed) in (1usize..=3, any::<u64>())) {
        let cover = random_box_cover(dim, seed, &RandomCoverParams::default()).unwrap();
        prop_assert_eq!(parse_cover(&write_cover(&cover)).unwrap(), cover);
    }

    #[test]
    fn simplicial_files_round_trip((d, m, seed) in (1usize..=3, 1u32..=5, any::<u64>())) {
        let phi = random_simplicial_labeling(d, m, seed).unwrap();
        prop_assert_eq!(parse_simplicial(&write_simplicial(&phi)).unwrap(), phi);
    }
}
