//! Worked examples through the public API, with small brute-force oracles.

use std::collections::BTreeMap;

use treekoszul::barkoszul::{
    bar_complex, bar_diagonal, iota, koszul_complex_pair, koszul_diagonal, verify_iota_cycle_with,
    BarChain,
};
use treekoszul::cobar::{cobar_hom_complex, CobarKind};
use treekoszul::diagrams::{
    ext, punctual, tensor_over_category, tor, validate_diagram, yoneda_contravariant,
    yoneda_covariant, Variance,
};
use treekoszul::homalg::{
    homology_ranks, homology_smith, verify_complex, CoefficientRing, FreeChainComplex, SparseMatrix,
};
use treekoszul::morphisms::{
    all_degree1_chains, compose, degree_one_from, factorizations, hom_set, truncate_morphism,
    MorphismError, TreeMorphism,
};
use treekoszul::signs::{koszul_sign, sgn, SignConvention};
use treekoszul::trees::{enumerate_trees, truncate_tree, PrunedTree, TreeError};

const Q: CoefficientRing = CoefficientRing::Rationals;

fn c(r: usize) -> PrunedTree {
    PrunedTree::corolla(r)
}

fn tree(text: &str) -> PrunedTree {
    PrunedTree::parse(text).unwrap()
}

/// Number of monotone surjections from a set of size `a` onto one of size `b`.
fn surjections(a: usize, b: usize) -> usize {
    if b == 0 || b > a {
        return 0;
    }
    // choose b - 1 cut points among the a - 1 gaps
    (0..b - 1).fold(1, |acc, i| acc * (a - 1 - i) / (i + 1))
}

/// Trees with `n` levels and a root of size one, counted level by level.
fn count_trees(n: usize, max_leaves: usize) -> usize {
    fn go(levels_left: usize, top: usize, max_leaves: usize) -> usize {
        if levels_left == 0 {
            return 1;
        }
        (top..=max_leaves)
            .map(|size| surjections(size, top) * go(levels_left - 1, size, max_leaves))
            .sum()
    }
    go(n, 1, max_leaves)
}

#[test]
fn tree_validation() {
    assert!(PrunedTree::new(vec![vec![1, 1, 1]]).is_ok());
    assert_eq!(
        PrunedTree::new(vec![vec![2, 1, 1], vec![1, 1]]),
        Err(TreeError::NotMonotone(1, 1))
    );
    assert!(PrunedTree::parse("2:[1,1,2];[1,2]").is_err());
    assert_eq!(c(3).encode(), "1:[1,1,1]");
}

#[test]
fn degrees_and_truncation() {
    let t = tree("4:[1,1,2];[1,2];[1,1];[1]");
    assert_eq!(t.sizes(), vec![3, 2, 2, 1, 1]);
    assert_eq!(t.degree(), 8);
    assert_eq!(truncate_tree(&t).unwrap().sizes(), vec![2, 2, 1, 1]);
    assert_eq!(PrunedTree::trunk(3).degree(), 3);
    assert_eq!(
        truncate_tree(&PrunedTree::trunk(3)).unwrap(),
        PrunedTree::trunk(2)
    );
    assert_eq!(c(4).degree(), 4);
    assert_eq!(truncate_tree(&c(2)), Err(TreeError::CannotTruncate));
}

#[test]
fn enumeration_counts() {
    assert_eq!(enumerate_trees(1, 3).unwrap().len(), 3);
    assert_eq!(enumerate_trees(2, 2).unwrap().len(), 3);
    assert_eq!(enumerate_trees(2, 3).unwrap().len(), 7);
    for n in 1..=3 {
        for leaves in 1..=5 {
            assert_eq!(
                enumerate_trees(n, leaves).unwrap().len(),
                count_trees(n, leaves)
            );
        }
    }
}

#[test]
fn morphism_validation() {
    let u = TreeMorphism::new(c(3), c(2), vec![vec![1, 1, 2], vec![1]]).unwrap();
    assert_eq!(u.degree(), 1);
    assert!(matches!(
        TreeMorphism::new(c(3), c(2), vec![vec![2, 1, 1], vec![1]]),
        Err(MorphismError::NotFiberMonotone { .. })
    ));
    assert_eq!(TreeMorphism::identity(&c(3)).degree(), 0);
}

#[test]
fn hom_sets_and_composition() {
    assert_eq!(hom_set(&c(3), &c(2)).unwrap().len(), surjections(3, 2));
    assert_eq!(hom_set(&c(4), &c(2)).unwrap().len(), surjections(4, 2));
    let to_point = hom_set(&c(3), &c(1)).unwrap();
    assert_eq!(to_point.len(), 1);
    for w in degree_one_from(&c(3)) {
        for v in degree_one_from(w.target()) {
            assert_eq!(&compose(&v, &w).unwrap(), &to_point[0]);
        }
    }
    for t in enumerate_trees(2, 3).unwrap() {
        let id = hom_set(&t, &t).unwrap();
        assert_eq!(id.len(), 1);
        assert!(id[0].is_identity());
        assert_eq!(hom_set(&t, &PrunedTree::trunk(2)).unwrap().len(), 1);
    }
}

#[test]
fn degree_one_morphisms() {
    assert_eq!(degree_one_from(&c(3)).len(), 2);
    // one level-0 merge, and three shuffles of the level-1 merge
    assert_eq!(degree_one_from(&tree("2:[1,1,2];[1,1]")).len(), 4);
    assert!(degree_one_from(&PrunedTree::trunk(3)).is_empty());
}

#[test]
fn factorizations_of_the_corolla_map() {
    let u = hom_set(&c(3), &c(1)).unwrap()[0].clone();
    assert_eq!(factorizations(&u, 1, 1).unwrap().len(), 2);
    assert_eq!(all_degree1_chains(&u).unwrap().len(), 2);
    let w = &degree_one_from(&c(3))[0];
    assert!(factorizations(w, 1, 1).unwrap().is_empty());
    assert_eq!(all_degree1_chains(w).unwrap(), vec![vec![w.clone()]]);
    let id = TreeMorphism::identity(&c(3));
    assert_eq!(
        all_degree1_chains(&id).unwrap(),
        vec![Vec::<TreeMorphism>::new()]
    );
}

#[test]
fn truncation_of_morphisms() {
    let t = tree("2:[1,1,2];[1,1]");
    for u in degree_one_from(&t) {
        let tu = truncate_morphism(&u).unwrap();
        assert_eq!(
            tu.is_identity(),
            u.drops().iter().all(|&(level, _)| level == 0)
        );
    }
}

#[test]
fn koszul_signs() {
    assert_eq!(koszul_sign(&[0, 1, 2], &[1, 1, 1]), 1);
    assert_eq!(koszul_sign(&[1, 0], &[1, 1]), -1);
    assert_eq!(koszul_sign(&[1, 0], &[0, 1]), 1);
}

#[test]
fn bar_complex_of_the_corolla_pair() {
    let b = bar_complex(&c(3), &c(1), Q).unwrap();
    assert_eq!(b.dims(), BTreeMap::from([(1, 1), (2, 2)]));
    verify_complex(&b).unwrap();
    let h = homology_ranks(&b).unwrap();
    assert_eq!((h[&1], h[&2]), (0, 1));
    let hz = homology_smith(&b.with_ring(CoefficientRing::Integers));
    assert_eq!(hz[&2].free, 1);
    assert_eq!(hz[&1].free, 0);
    assert!(hz[&1].torsion.is_empty());

    let unit = bar_complex(&c(2), &c(2), Q).unwrap();
    assert_eq!(unit.dims(), BTreeMap::from([(0, 1)]));
    assert_eq!(bar_complex(&c(2), &c(3), Q).unwrap().total_dim(), 0);
}

#[test]
fn koszul_generators() {
    assert_eq!(
        koszul_complex_pair(&c(3), &c(1), Q).unwrap().dims(),
        BTreeMap::from([(2, 1)])
    );
    assert_eq!(
        koszul_complex_pair(&c(4), &c(2), Q).unwrap().dims(),
        BTreeMap::from([(2, 3)])
    );
    assert_eq!(
        koszul_complex_pair(&c(2), &c(2), Q).unwrap().dims(),
        BTreeMap::from([(0, 1)])
    );
}

#[test]
fn iota_values() {
    let id = TreeMorphism::identity(&c(3));
    assert_eq!(iota(&id).unwrap(), vec![(BarChain::unit(&c(3)), 1)]);
    for w in degree_one_from(&c(3)) {
        assert_eq!(
            iota(&w).unwrap(),
            vec![(BarChain::from_maps(vec![w.clone()]), sgn(&w))]
        );
    }
    let u = hom_set(&c(3), &c(1)).unwrap()[0].clone();
    let terms = iota(&u).unwrap();
    assert_eq!(terms.len(), 2);
    assert_eq!(terms[0].1, -terms[1].1);
}

#[test]
fn dropping_the_shuffle_sign_is_detected_at_two_levels() {
    let caught = enumerate_trees(2, 3).unwrap().iter().any(|tau| {
        enumerate_trees(2, 3)
            .unwrap()
            .iter()
            .any(|sigma| verify_iota_cycle_with(tau, sigma, SignConvention::DropShuffle).is_err())
    });
    assert!(caught);
}

#[test]
fn diagonals() {
    let id = TreeMorphism::identity(&c(2));
    assert_eq!(
        koszul_diagonal(&id).unwrap(),
        vec![(id.clone(), id.clone())]
    );
    let w = degree_one_from(&c(3))[0].clone();
    assert_eq!(koszul_diagonal(&w).unwrap().len(), 2);
    let u = hom_set(&c(3), &c(1)).unwrap()[0].clone();
    // two unit terms and the two factorizations
    assert_eq!(koszul_diagonal(&u).unwrap().len(), 4);

    assert_eq!(bar_diagonal(&BarChain::unit(&c(3))).len(), 1);
    assert_eq!(bar_diagonal(&BarChain::from_maps(vec![w.clone()])).len(), 2);
    let chain = all_degree1_chains(&u).unwrap()[0].clone();
    assert_eq!(bar_diagonal(&BarChain::from_maps(chain)).len(), 3);
}

#[test]
fn homology_of_small_complexes() {
    let d = SparseMatrix::from_dense(&[vec![-1, -1]]);
    let cx = FreeChainComplex::new(
        Q,
        1,
        vec![vec!["a".into()], vec!["b".into(), "c".into()]],
        vec![SparseMatrix::zero(0, 1), d],
    )
    .unwrap();
    assert_eq!(
        homology_ranks(&cx).unwrap(),
        BTreeMap::from([(1, 0), (2, 1)])
    );

    let two = FreeChainComplex::new(
        CoefficientRing::Integers,
        0,
        vec![vec!["a".into()], vec!["b".into()]],
        vec![
            SparseMatrix::zero(0, 1),
            SparseMatrix::from_dense(&[vec![2]]),
        ],
    )
    .unwrap();
    let h = homology_smith(&two);
    assert_eq!(h[&0].free, 0);
    assert_eq!(h[&0].torsion, vec!["2".to_string()]);

    let bad = FreeChainComplex::new(
        Q,
        0,
        vec![vec!["a".into()], vec!["b".into()], vec!["c".into()]],
        vec![
            SparseMatrix::zero(0, 1),
            SparseMatrix::from_dense(&[vec![1]]),
            SparseMatrix::from_dense(&[vec![1]]),
        ],
    )
    .unwrap();
    assert_eq!(verify_complex(&bad).unwrap_err().degree, 2);
}

#[test]
fn yoneda_and_punctual_diagrams() {
    let y = yoneda_covariant(&c(3)).unwrap();
    assert_eq!(y.dim(&c(3)), 1);
    assert_eq!(y.dim(&c(2)), 2);
    assert_eq!(y.dim(&c(4)), 0);
    validate_diagram(&y).unwrap();
    let p = punctual(&c(2), Variance::Contravariant);
    assert_eq!(p.dim(&c(2)), 1);
    assert_eq!(p.dim(&c(1)), 0);
    validate_diagram(&p).unwrap();
}

#[test]
fn tensor_products_over_the_category() {
    let t = yoneda_covariant(&c(2)).unwrap();
    let s = yoneda_contravariant(&c(2), 3).unwrap();
    let total = |m: BTreeMap<i64, usize>| m.values().sum::<usize>();
    for tau in enumerate_trees(1, 3).unwrap() {
        let rep = yoneda_contravariant(&tau, 3).unwrap();
        assert_eq!(
            total(tensor_over_category(&rep, &t, Q).unwrap()),
            t.dim(&tau)
        );
        let corep = yoneda_covariant(&tau).unwrap();
        assert_eq!(
            total(tensor_over_category(&s, &corep, Q).unwrap()),
            s.dim(&tau)
        );
        for sigma in enumerate_trees(1, 3).unwrap() {
            let m = tensor_over_category(
                &punctual(&sigma, Variance::Contravariant),
                &punctual(&tau, Variance::Covariant),
                Q,
            )
            .unwrap();
            assert_eq!(total(m), usize::from(tau == sigma));
        }
    }
}

#[test]
fn tor_and_ext_of_punctual_diagrams() {
    let r = tor(
        &punctual(&c(1), Variance::Contravariant),
        &punctual(&c(3), Variance::Covariant),
        Q,
        true,
    )
    .unwrap();
    assert_eq!(r.koszul, BTreeMap::from([(2, 1)]));
    assert_eq!(r.agree, Some(true));

    let trunk = PrunedTree::trunk(2);
    for tau in enumerate_trees(2, 3).unwrap() {
        let e = ext(
            &punctual(&tau, Variance::Covariant),
            &punctual(&trunk, Variance::Covariant),
            Q,
        )
        .unwrap();
        let shift = tau.degree() as i64 - 2;
        assert_eq!(e.get(&shift), Some(&1), "{}", tau.encode());
    }
}

#[test]
fn cobar_hom_complexes() {
    let unit = cobar_hom_complex(CobarKind::Koszul, &c(2), &c(2), Q, 10_000).unwrap();
    assert_eq!(
        homology_ranks(&unit.complex).unwrap(),
        BTreeMap::from([(0, 1)])
    );
    let k = cobar_hom_complex(CobarKind::Koszul, &c(3), &c(1), Q, 10_000).unwrap();
    let h: BTreeMap<i64, usize> = homology_ranks(&k.complex)
        .unwrap()
        .into_iter()
        .filter(|&(_, r)| r > 0)
        .collect();
    assert_eq!(h, BTreeMap::from([(0, 1)]));
}
