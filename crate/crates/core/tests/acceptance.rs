//! End-to-end acceptance checks. Each criterion prints one line; the test
//! fails if any of them does.

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use treekoszul::acyclicity::{e1_recursion_check, l_complex};
use treekoszul::barkoszul::{
    koszulity_check, quadratic_relations, verify_iota_cycle, verify_iota_cycle_with, Configuration,
};
use treekoszul::cobar::verify_minimal_model;
use treekoszul::diagrams::{
    contracting_homotopy_check, ext, ext_via_bar, punctual, random_strict_diagram, tor,
    yoneda_contravariant, HomotopySign, Variance,
};
use treekoszul::homalg::{homology_ranks, CoefficientRing};
use treekoszul::iteratedbar::{compare_iterated, AlgebraPresentation, DEFAULT_TENSOR_CAP};
use treekoszul::morphisms::{compose, degree_one_from, hom_set, is_fiberwise_injective_level0};
use treekoszul::signs::SignConvention;
use treekoszul::trees::{enumerate_trees, PrunedTree};

const Q: CoefficientRing = CoefficientRing::Rationals;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn trees(n: usize, leaves: usize) -> Vec<PrunedTree> {
    enumerate_trees(n, leaves).unwrap()
}

/// Pairs (τ, σ) with at least one morphism τ → σ.
fn pairs(n: usize, leaves: usize) -> Vec<(PrunedTree, PrunedTree)> {
    let all = trees(n, leaves);
    let mut out = Vec::new();
    for tau in &all {
        for sigma in &all {
            if !hom_set(tau, sigma).unwrap().is_empty() {
                out.push((tau.clone(), sigma.clone()));
            }
        }
    }
    out
}

fn check(ok: bool, pass: String, fail: impl FnOnce() -> String) -> Outcome {
    if ok {
        Ok(pass)
    } else {
        Err(fail())
    }
}

fn iota_cycles() -> Outcome {
    let mut checked = 0;
    for (n, leaves) in [(1, 5), (2, 4)] {
        for (tau, sigma) in pairs(n, leaves) {
            if let Err(w) = verify_iota_cycle(&tau, &sigma) {
                return Err(format!("{} -> {}: {:?}", tau.encode(), sigma.encode(), w));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} pairs over Z"))
}

/// Brute-force count of the composites w then v equal to u, both of degree one.
fn count_factorizations(u: &treekoszul::morphisms::TreeMorphism) -> usize {
    degree_one_from(u.source())
        .iter()
        .map(|w| {
            degree_one_from(w.target())
                .iter()
                .filter(|v| compose(v, w).is_ok_and(|c| &c == u))
                .count()
        })
        .sum()
}

fn degree_two_factorizations() -> Outcome {
    let mut seen = BTreeSet::new();
    let mut total = 0;
    for (n, leaves) in [(1, 5), (2, 4), (3, 3)] {
        for tau in trees(n, leaves) {
            let rel = quadratic_relations(&tau).map_err(|e| e.to_string())?;
            let expected: usize = trees(n, leaves)
                .iter()
                .filter(|s| s.degree() + 2 == tau.degree())
                .map(|s| hom_set(&tau, s).unwrap().len())
                .sum();
            if rel.len() != expected {
                return Err(format!(
                    "{}: {} relations, {expected} morphisms",
                    tau.encode(),
                    rel.len()
                ));
            }
            for r in &rel {
                let u = treekoszul::morphisms::TreeMorphism::parse_key(&r.morphism).unwrap();
                let brute = count_factorizations(&u);
                let signs_ok = r.signs.len() == 2 && r.signs[0] * r.signs[1] == -1 && r.opposite;
                if r.factorizations.len() != 2 || brute != 2 || !signs_ok {
                    return Err(format!("{}: {r:?}, brute force {brute}", r.morphism));
                }
                seen.insert(format!("{:?}", r.configuration));
                total += 1;
            }
        }
    }
    let all: BTreeSet<String> = [
        Configuration::ConsecutiveTriple,
        Configuration::DisjointPairs,
        Configuration::Nested,
    ]
    .iter()
    .map(|c| format!("{c:?}"))
    .collect();
    check(
        seen == all,
        format!("{total} morphisms, configurations {seen:?}"),
        || format!("configurations seen: {seen:?}"),
    )
}

fn koszulity() -> Outcome {
    let mut list = pairs(1, 5);
    list.extend(pairs(2, 3));
    let mut counts = Vec::new();
    for ring in [
        Q,
        CoefficientRing::PrimeField(2),
        CoefficientRing::PrimeField(3),
    ] {
        let mut count = 0;
        for (tau, sigma) in &list {
            let r = koszulity_check(tau, sigma, ring).map_err(|e| e.to_string())?;
            if !r.ok {
                return Err(format!("{r:?}"));
            }
            count += 1;
        }
        counts.push(format!("{ring}: {count}"));
    }
    check(
        list.len() >= 30,
        format!("pairs {}", counts.join(", ")),
        || format!("only {} pairs", list.len()),
    )
}

fn l_acyclicity() -> Outcome {
    let mut checked = 0;
    for n in 1..=2 {
        for (tau, sigma) in pairs(n, 4) {
            for degrees in [vec![0; tau.leaves()], (0..tau.leaves() as i64).collect()] {
                let l = l_complex(&tau, &sigma, &degrees, Q).map_err(|e| e.to_string())?;
                let h: BTreeMap<i64, usize> = homology_ranks(&l.complex)
                    .map_err(|e| e.to_string())?
                    .into_iter()
                    .filter(|&(_, r)| r > 0)
                    .collect();
                let total: i64 = degrees.iter().sum();
                let expected = if tau == sigma {
                    BTreeMap::from([(total, 1)])
                } else {
                    BTreeMap::new()
                };
                if h != expected {
                    return Err(format!("{} -> {}: {h:?}", tau.encode(), sigma.encode()));
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} complexes"))
}

fn homotopy_jobs(leaves: usize) -> Vec<(PrunedTree, PrunedTree)> {
    let mut out = Vec::new();
    for n in 1..=2 {
        for (phi, sigma) in pairs(n, leaves) {
            out.push((sigma, phi));
        }
    }
    out
}

fn contracting_homotopy() -> Outcome {
    let mut checked = 0;
    for (sigma, phi) in homotopy_jobs(3) {
        let s = [
            punctual(&sigma, Variance::Contravariant),
            yoneda_contravariant(&sigma, 3).map_err(|e| e.to_string())?,
        ];
        for d in &s {
            if let Err(w) = contracting_homotopy_check(d, &phi, HomotopySign::Standard) {
                return Err(format!(
                    "sigma {} phi {}: {w:?}",
                    sigma.encode(),
                    phi.encode()
                ));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} checks"))
}

fn tor_ext() -> Outcome {
    let mut random = 0;
    for (n, leaves) in [(1, 3), (2, 3)] {
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_strict_diagram(Variance::Contravariant, n, leaves, &mut rng)
                .map_err(|e| e.to_string())?;
            let b = random_strict_diagram(Variance::Covariant, n, leaves, &mut rng)
                .map_err(|e| e.to_string())?;
            let r = tor(&a, &b, Q, true).map_err(|e| e.to_string())?;
            if r.agree != Some(true) {
                return Err(format!("tor seed {seed}, n={n}: {r:?}"));
            }
            let c = random_strict_diagram(Variance::Covariant, n, leaves, &mut rng)
                .map_err(|e| e.to_string())?;
            let k = ext(&b, &c, Q).map_err(|e| e.to_string())?;
            let v = ext_via_bar(&b, &c, Q).map_err(|e| e.to_string())?;
            if k != v {
                return Err(format!("ext seed {seed}, n={n}: {k:?} vs {v:?}"));
            }
            random += 1;
        }
    }
    let mut punctual_pairs = 0;
    for n in 1..=2 {
        for (tau, sigma) in pairs(n, 4) {
            let r = tor(
                &punctual(&sigma, Variance::Contravariant),
                &punctual(&tau, Variance::Covariant),
                Q,
                true,
            )
            .map_err(|e| e.to_string())?;
            let count = hom_set(&tau, &sigma).unwrap().len();
            let expected = BTreeMap::from([(tau.degree() as i64 - sigma.degree() as i64, count)]);
            if r.koszul != expected || r.agree != Some(true) {
                return Err(format!("{} -> {}: {r:?}", tau.encode(), sigma.encode()));
            }
            punctual_pairs += 1;
        }
    }
    Ok(format!(
        "{random} random pairs, {punctual_pairs} punctual pairs"
    ))
}

fn minimal_model() -> Outcome {
    let mut checked = 0;
    for n in 1..=2 {
        for (tau, sigma) in pairs(n, 3) {
            let r = verify_minimal_model(&tau, &sigma, Q).map_err(|e| e.to_string())?;
            if !(r.ok && r.decomposable && r.quasi_iso) {
                return Err(format!("{r:?}"));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} pairs"))
}

fn e1_recursion() -> Outcome {
    let mut checked = 0;
    for (tau, sigma) in pairs(2, 4) {
        let degrees = vec![0; tau.leaves()];
        for u in hom_set(&tau, &sigma).unwrap().iter() {
            if !is_fiberwise_injective_level0(u) {
                continue;
            }
            let r = e1_recursion_check(u, &degrees, Q).map_err(|e| e.to_string())?;
            if !(r.ok && r.broken_cycles == 0 && r.e1 == r.truncated) {
                return Err(format!("{r:?}"));
            }
            checked += 1;
        }
    }
    check(checked > 0, format!("{checked} morphisms"), || {
        "no morphisms".into()
    })
}

fn iterated_bar() -> Outcome {
    let mut checked = 0;
    for ring in [Q, CoefficientRing::PrimeField(2)] {
        let algebras = [
            ("dual numbers", AlgebraPresentation::dual_numbers(0, ring)),
            ("exterior", AlgebraPresentation::exterior(ring)),
        ];
        for (name, a) in &algebras {
            for n in 1..=2 {
                let r = compare_iterated(a, n, 3, DEFAULT_TENSOR_CAP).map_err(|e| e.to_string())?;
                if !r.equal {
                    return Err(format!("{name} over {ring}, n={n}: {r:?}"));
                }
                checked += 1;
            }
        }
        let once = compare_iterated(&algebras[0].1, 1, 3, DEFAULT_TENSOR_CAP).unwrap();
        if once.koszul != BTreeMap::from([(0, 1), (1, 1), (2, 1), (3, 1)]) {
            return Err(format!("dual numbers, n=1: {:?}", once.koszul));
        }
        let once = compare_iterated(&algebras[1].1, 1, 3, DEFAULT_TENSOR_CAP).unwrap();
        if once.koszul != BTreeMap::from([(0, 1), (2, 1)]) {
            return Err(format!("exterior, n=1: {:?}", once.koszul));
        }
    }
    Ok(format!("{checked} comparisons"))
}

fn negative_controls() -> Outcome {
    let iota_caught = [(1, 4), (2, 3)]
        .into_iter()
        .flat_map(|(n, leaves)| pairs(n, leaves))
        .find_map(|(tau, sigma)| {
            verify_iota_cycle_with(&tau, &sigma, SignConvention::DropShuffle).err()
        });
    let nu_caught = homotopy_jobs(3).into_iter().find_map(|(sigma, phi)| {
        let d = punctual(&sigma, Variance::Contravariant);
        contracting_homotopy_check(&d, &phi, HomotopySign::Flipped).err()
    });
    match (iota_caught, nu_caught) {
        (Some(i), Some(v)) => Ok(format!(
            "iota witness at {}, nu witness {:?}",
            i.morphism, v
        )),
        (i, v) => Err(format!(
            "iota caught: {}, nu caught: {}",
            i.is_some(),
            v.is_some()
        )),
    }
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("1 iota is a cycle", iota_cycles),
        ("2 degree-two factorizations", degree_two_factorizations),
        ("3 Koszulity over Q, F2, F3", koszulity),
        ("4 L acyclicity", l_acyclicity),
        ("5 contracting homotopy", contracting_homotopy),
        ("6 Tor and Ext", tor_ext),
        ("7 minimal model", minimal_model),
        ("8 Z-cycles and E1 ranks", e1_recursion),
        ("9 iterated bar", iterated_bar),
        ("10 negative controls", negative_controls),
    ];
    let outcomes: Vec<Outcome> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria.iter().map(|(_, f)| s.spawn(f)).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err("panicked".into())))
            .collect()
    });
    let mut failed = Vec::new();
    for ((name, _), outcome) in criteria.iter().zip(&outcomes) {
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                println!("FAIL criterion {name}: {detail}");
                failed.push(*name);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
