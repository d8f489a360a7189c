use std::collections::BTreeSet;

use nfg_core::algebra::Alphabet;
use nfg_core::exterior::{eliminate, exterior_bruteforce, exterior_via_spa, EliminationOptions, KernelSet, SpaOptions};
use nfg_core::inference::{exterior_with, Algorithm};
use nfg_core::nfg::{classify, separated};
use nfg_core::random::{
    random_invertible_pair, random_model, random_nfg, random_tree, GraphShape, ModelKind, ModelShape,
};
use nfg_core::transform::{holographic_transform, HolographicSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn internal_pairs(g: &nfg_core::nfg::NfgGraph, rng: &mut ChaCha8Rng) -> HolographicSpec {
    let mut spec = HolographicSpec::default();
    for e in g.internal_edges() {
        let pair = random_invertible_pair(rng, &e.alphabet).unwrap();
        let ends = e.endpoints();
        spec.internal
            .insert(e.id.clone(), (pair, ends[rng.gen_range(0..2)].vertex.clone()));
    }
    spec
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn engines_agree(seed in any::<u64>()) {
        let g = random_nfg(&mut ChaCha8Rng::seed_from_u64(seed), &GraphShape::default()).unwrap();
        let z = exterior_bruteforce(&g).unwrap();
        let options = EliminationOptions { kernels: KernelSet::all(), ..Default::default() };
        let e = eliminate(&g, &options).unwrap().result.permute(&z.labels()).unwrap();
        prop_assert!(e.rel_diff(&z).unwrap() <= 1e-9);
    }

    #[test]
    fn spa_exterior_on_open_trees(seed in any::<u64>()) {
        let shape = GraphShape { max_vertices: 7, max_half: 3, max_alphabet: 3, ..Default::default() };
        let g = random_tree(&mut ChaCha8Rng::seed_from_u64(seed), &shape).unwrap();
        let z = exterior_bruteforce(&g).unwrap();
        let s = exterior_via_spa(&g, &SpaOptions::default()).unwrap().permute(&z.labels()).unwrap();
        prop_assert!(s.rel_diff(&z).unwrap() <= 1e-9);
        let scaled = exterior_via_spa(&g, &SpaOptions { scaled: true, ..Default::default() }).unwrap();
        prop_assert!(scaled.permute(&z.labels()).unwrap().rel_diff(&z).unwrap() <= 1e-9);
    }

    #[test]
    fn internal_transforms_preserve_exterior(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_nfg(&mut rng, &GraphShape::default()).unwrap();
        let spec = internal_pairs(&g, &mut rng);
        let h = holographic_transform(&g, &spec).unwrap();
        let (z, w) = (exterior_bruteforce(&g).unwrap(), exterior_bruteforce(&h).unwrap());
        prop_assert!(w.rel_diff(&z).unwrap() <= 1e-9);
    }

    #[test]
    fn separation_is_symmetric_and_monotone(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_nfg(&mut rng, &GraphShape::default()).unwrap();
        let ids: Vec<String> = g.vertex_ids().map(str::to_owned).collect();
        let mut pick = || -> BTreeSet<String> { ids.iter().filter(|_| rng.gen_bool(0.3)).cloned().collect() };
        let (a, b, s, extra) = (pick(), pick(), pick(), pick());
        prop_assume!(a.is_disjoint(&b) && a.is_disjoint(&s) && b.is_disjoint(&s));
        let ab = separated(&g, &a, &b, &s).unwrap();
        prop_assert_eq!(ab, separated(&g, &b, &a, &s).unwrap());
        let bigger: BTreeSet<String> = s.union(&extra).filter(|v| !a.contains(*v) && !b.contains(*v)).cloned().collect();
        if ab {
            prop_assert!(separated(&g, &a, &b, &bigger).unwrap());
        }
    }
}

#[test]
fn algorithms_agree_on_trees() {
    let shape = GraphShape {
        max_vertices: 8,
        max_half: 2,
        max_alphabet: 3,
        ..Default::default()
    };
    for seed in 0..30 {
        let g = random_tree(&mut ChaCha8Rng::seed_from_u64(seed), &shape).unwrap();
        let z = exterior_with(&g, Algorithm::BruteForce).unwrap();
        for algo in [Algorithm::Eliminate, Algorithm::Spa] {
            let w = exterior_with(&g, algo).unwrap().permute(&z.labels()).unwrap();
            assert!(w.rel_diff(&z).unwrap() <= 1e-9, "{} seed {seed}", algo.name());
        }
    }
}

/// Internal transforms keep constrained models constrained and extended
/// generative models extended generative; plain generative is not kept.
#[test]
fn model_classes_under_internal_transforms() {
    let shape = ModelShape::default();
    let mut generative_kept = 0;
    for seed in 0..40 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_model(&mut rng, ModelKind::Constrained, &shape).unwrap();
        let h = holographic_transform(&g, &internal_pairs(&g, &mut rng)).unwrap();
        assert!(classify(&h, 1e-9).constrained, "seed {seed}");

        let g = random_model(&mut rng, ModelKind::Generative, &shape).unwrap();
        let h = holographic_transform(&g, &internal_pairs(&g, &mut rng)).unwrap();
        let flags = classify(&h, 1e-9);
        assert!(flags.extended_generative, "seed {seed}");
        generative_kept += usize::from(flags.generative);
    }
    assert!(generative_kept < 40);
}

#[test]
fn cyclic_and_tree_classification() {
    let a = Alphabet::plain(2);
    let tri = nfg_core::gallery::triangle(&a, nfg_core::gallery::counting).unwrap();
    assert!(!classify(&tri, 1e-9).tree);
    let tree = nfg_core::gallery::spa_tree(&a, nfg_core::gallery::counting).unwrap();
    assert!(classify(&tree, 1e-9).tree);
}
