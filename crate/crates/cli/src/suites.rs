use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use treekoszul::acyclicity::{e1_recursion_check, l_complex};
use treekoszul::barkoszul::{
    bar_complex, koszulity_check, nerve_complex, quadratic_relations, verify_iota_cycle,
};
use treekoszul::cobar::verify_minimal_model;
use treekoszul::diagrams::{
    contracting_homotopy_check, ext, ext_via_bar, punctual, random_strict_diagram, tor,
    yoneda_contravariant, HomotopySign, Variance,
};
use treekoszul::homalg::{homology_ranks, CoefficientRing};
use treekoszul::iteratedbar::{compare_iterated, AlgebraPresentation};
use treekoszul::morphisms::{hom_set, is_fiberwise_injective_level0};
use treekoszul::trees::{enumerate_trees, PrunedTree};

use crate::report::{timed, Record, Status};

#[derive(Debug, Clone)]
pub struct Settings {
    pub n: usize,
    pub leaves: usize,
    pub ring: CoefficientRing,
    pub bound: usize,
    pub cap: usize,
    pub seed: u64,
    pub samples: usize,
}

fn trees(s: &Settings) -> Result<Vec<PrunedTree>, String> {
    enumerate_trees(s.n, s.leaves).map_err(|e| e.to_string())
}

fn pair_params(tau: &PrunedTree, sigma: &PrunedTree) -> Value {
    json!({ "tau": tau.encode(), "sigma": sigma.encode() })
}

/// Pairs with at least one morphism, or the single requested pair.
pub fn pairs(
    s: &Settings,
    only: Option<(PrunedTree, PrunedTree)>,
) -> Result<Vec<(PrunedTree, PrunedTree)>, String> {
    if let Some(p) = only {
        return Ok(vec![p]);
    }
    let all = trees(s)?;
    let mut out = Vec::new();
    for tau in &all {
        for sigma in &all {
            if hom_set(tau, sigma).is_ok_and(|h| !h.is_empty()) {
                out.push((tau.clone(), sigma.clone()));
            }
        }
    }
    Ok(out)
}

fn ranks_json(h: &BTreeMap<i64, usize>) -> Value {
    let m: serde_json::Map<String, Value> = h
        .iter()
        .filter(|(_, &r)| r > 0)
        .map(|(k, r)| (k.to_string(), json!(r)))
        .collect();
    Value::Object(m)
}

fn per_pair(
    pairs: &[(PrunedTree, PrunedTree)],
    f: impl Fn(&PrunedTree, &PrunedTree) -> Vec<Record> + Sync,
) -> Vec<Record> {
    pairs
        .par_iter()
        .map(|(tau, sigma)| f(tau, sigma))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

pub fn list_trees(s: &Settings) -> Vec<Record> {
    match trees(s) {
        Ok(all) => all
            .iter()
            .map(|t| Record {
                name: "tree".into(),
                params: json!({ "n": s.n }),
                status: Status::Info,
                result: json!({ "tree": t.encode(), "degree": t.degree(), "leaves": t.leaves() }),
                millis: 0.0,
            })
            .collect(),
        Err(e) => vec![timed("trees", json!({ "n": s.n }), || Err(e))],
    }
}

pub fn hom(pairs: &[(PrunedTree, PrunedTree)]) -> Vec<Record> {
    per_pair(pairs, |tau, sigma| {
        vec![timed("hom", pair_params(tau, sigma), || {
            let h = hom_set(tau, sigma).map_err(|e| e.to_string())?;
            let keys: Vec<String> = h.iter().map(|u| u.key()).collect();
            Ok::<_, String>((
                Status::Info,
                json!({ "count": keys.len(), "morphisms": keys }),
            ))
        })]
    })
}

pub fn bar(s: &Settings, pairs: &[(PrunedTree, PrunedTree)]) -> Vec<Record> {
    per_pair(pairs, |tau, sigma| {
        vec![timed("bar-homology", pair_params(tau, sigma), || {
            let c = bar_complex(tau, sigma, s.ring).map_err(|e| e.to_string())?;
            let h = homology_ranks(&c).map_err(|e| e.to_string())?;
            Ok::<_, String>((
                Status::Info,
                json!({ "chains": ranks_json(&c.dims()), "homology": ranks_json(&h) }),
            ))
        })]
    })
}

/// Nerve homology, checked against the bar complex.
pub fn nerve(s: &Settings, pairs: &[(PrunedTree, PrunedTree)]) -> Vec<Record> {
    per_pair(pairs, |tau, sigma| {
        vec![timed("nerve-homology", pair_params(tau, sigma), || {
            let nv = homology_ranks(&nerve_complex(tau, sigma, s.ring).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            let b = homology_ranks(&bar_complex(tau, sigma, s.ring).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            let (nv, b) = (ranks_json(&nv), ranks_json(&b));
            Ok::<_, String>((Status::of(nv == b), json!({ "nerve": nv, "bar": b })))
        })]
    })
}

pub fn koszul_check(s: &Settings, pairs: &[(PrunedTree, PrunedTree)]) -> Vec<Record> {
    per_pair(pairs, |tau, sigma| {
        let iota = timed("iota-cycle", pair_params(tau, sigma), || {
            Ok::<_, String>(match verify_iota_cycle(tau, sigma) {
                Ok(()) => (Status::Pass, json!({ "ring": "z" })),
                Err(w) => (Status::Fail, json!(w)),
            })
        });
        let koszul = timed("koszulity", pair_params(tau, sigma), || {
            let r = koszulity_check(tau, sigma, s.ring).map_err(|e| e.to_string())?;
            Ok::<_, String>((Status::of(r.ok), json!(r)))
        });
        vec![iota, koszul]
    })
}

pub fn relations(s: &Settings) -> Vec<Record> {
    let all = match trees(s) {
        Ok(t) => t,
        Err(e) => return vec![timed("relations", json!({}), || Err(e))],
    };
    all.par_iter()
        .map(|tau| {
            timed(
                "quadratic-relations",
                json!({ "tau": tau.encode() }),
                || {
                    let rel = quadratic_relations(tau).map_err(|e| e.to_string())?;
                    let ok = rel
                        .iter()
                        .all(|r| r.factorizations.len() == 2 && r.opposite);
                    Ok::<_, String>((Status::of(ok), json!(rel)))
                },
            )
        })
        .collect()
}

/// Tor via Koszul and bar on punctual pairs and seeded random pairs, and
/// the contracting homotopy of the bar resolution.
pub fn tor_suite(s: &Settings) -> Vec<Record> {
    let mut out = Vec::new();
    let pairs = match pairs(s, None) {
        Ok(p) => p,
        Err(e) => return vec![timed("tor", json!({}), || Err(e))],
    };
    out.extend(per_pair(&pairs, |tau, sigma| {
        vec![timed("tor-punctual", pair_params(tau, sigma), || {
            let r = tor(
                &punctual(sigma, Variance::Contravariant),
                &punctual(tau, Variance::Covariant),
                s.ring,
                true,
            )
            .map_err(|e| e.to_string())?;
            let count = hom_set(tau, sigma).map_err(|e| e.to_string())?.len();
            let expected = BTreeMap::from([(tau.degree() as i64 - sigma.degree() as i64, count)]);
            let ok = r.agree == Some(true) && r.koszul == expected;
            Ok::<_, String>((Status::of(ok), json!(r)))
        })]
    }));
    let samples: Vec<u64> = (0..s.samples as u64)
        .map(|i| s.seed.wrapping_add(i))
        .collect();
    out.extend(
        samples
            .par_iter()
            .map(|&seed| {
                timed(
                    "tor-random",
                    json!({ "seed": seed, "n": s.n, "leaves": s.leaves }),
                    || {
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        let a =
                            random_strict_diagram(Variance::Contravariant, s.n, s.leaves, &mut rng)
                                .map_err(|e| e.to_string())?;
                        let b = random_strict_diagram(Variance::Covariant, s.n, s.leaves, &mut rng)
                            .map_err(|e| e.to_string())?;
                        let r = tor(&a, &b, s.ring, true).map_err(|e| e.to_string())?;
                        Ok::<_, String>((Status::of(r.agree == Some(true)), json!(r)))
                    },
                )
            })
            .collect::<Vec<_>>(),
    );
    out.extend(homotopy(s));
    out
}

pub fn homotopy(s: &Settings) -> Vec<Record> {
    let all = match trees(s) {
        Ok(t) => t,
        Err(e) => return vec![timed("homotopy", json!({}), || Err(e))],
    };
    let mut jobs = Vec::new();
    for sigma in &all {
        for phi in &all {
            if hom_set(phi, sigma).is_ok_and(|h| !h.is_empty()) {
                jobs.push((sigma.clone(), phi.clone()));
            }
        }
    }
    jobs.par_iter()
        .flat_map_iter(|(sigma, phi)| {
            let point = punctual(sigma, Variance::Contravariant);
            let yoneda = yoneda_contravariant(sigma, s.leaves);
            [("pt", Ok(point)), ("yoneda", yoneda)]
                .into_iter()
                .map(move |(kind, d)| {
                    let params = json!({ "S": kind, "sigma": sigma.encode(), "phi": phi.encode() });
                    timed("contracting-homotopy", params, || {
                        let d = d.map_err(|e| e.to_string())?;
                        Ok::<_, String>(
                            match contracting_homotopy_check(&d, phi, HomotopySign::Standard) {
                                Ok(()) => (Status::Pass, Value::Null),
                                Err(w) => (Status::Fail, json!(w)),
                            },
                        )
                    })
                })
        })
        .collect()
}

pub fn ext_suite(s: &Settings) -> Vec<Record> {
    let samples: Vec<u64> = (0..s.samples as u64)
        .map(|i| s.seed.wrapping_add(i))
        .collect();
    samples
        .par_iter()
        .map(|&seed| {
            timed(
                "ext-random",
                json!({ "seed": seed, "n": s.n, "leaves": s.leaves }),
                || {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let a = random_strict_diagram(Variance::Covariant, s.n, s.leaves, &mut rng)
                        .map_err(|e| e.to_string())?;
                    let b = random_strict_diagram(Variance::Covariant, s.n, s.leaves, &mut rng)
                        .map_err(|e| e.to_string())?;
                    let k = ext(&a, &b, s.ring).map_err(|e| e.to_string())?;
                    let v = ext_via_bar(&a, &b, s.ring).map_err(|e| e.to_string())?;
                    let (k, v) = (ranks_json(&k), ranks_json(&v));
                    Ok::<_, String>((Status::of(k == v), json!({ "koszul": k, "bar": v })))
                },
            )
        })
        .collect()
}

pub fn acyclicity(s: &Settings, pairs: &[(PrunedTree, PrunedTree)]) -> Vec<Record> {
    per_pair(pairs, |tau, sigma| {
        let degrees = vec![0; tau.leaves()];
        let mut out = vec![timed("acyclicity", pair_params(tau, sigma), || {
            let l = l_complex(tau, sigma, &degrees, s.ring).map_err(|e| e.to_string())?;
            let h: BTreeMap<i64, usize> = homology_ranks(&l.complex)
                .map_err(|e| e.to_string())?
                .into_iter()
                .filter(|&(_, r)| r > 0)
                .collect();
            let expected = if tau == sigma {
                BTreeMap::from([(0, 1)])
            } else {
                BTreeMap::new()
            };
            Ok::<_, String>((
                Status::of(h == expected),
                json!({ "homology": ranks_json(&h) }),
            ))
        })];
        if tau.n() >= 2 {
            if let Ok(homs) = hom_set(tau, sigma) {
                for u in homs.iter().filter(|u| is_fiberwise_injective_level0(u)) {
                    out.push(timed("e1-recursion", json!({ "u": u.key() }), || {
                        let r =
                            e1_recursion_check(u, &degrees, s.ring).map_err(|e| e.to_string())?;
                        Ok::<_, String>((Status::of(r.ok), json!(r)))
                    }));
                }
            }
        }
        out
    })
}

pub fn cobar_check(s: &Settings, pairs: &[(PrunedTree, PrunedTree)]) -> Vec<Record> {
    per_pair(pairs, |tau, sigma| {
        vec![timed("minimal-model", pair_params(tau, sigma), || {
            let r = verify_minimal_model(tau, sigma, s.ring).map_err(|e| e.to_string())?;
            Ok::<_, String>((Status::of(r.ok), json!(r)))
        })]
    })
}

/// A built-in algebra name or a path to an algebra JSON file.
pub fn load_algebra(source: &str, ring: CoefficientRing) -> Result<AlgebraPresentation, String> {
    match source {
        "dual-numbers" => Ok(AlgebraPresentation::dual_numbers(0, ring)),
        "exterior" => Ok(AlgebraPresentation::exterior(ring)),
        "trivial" => Ok(AlgebraPresentation::trivial(ring)),
        path => {
            let text = std::fs::read_to_string(Path::new(path))
                .map_err(|e| format!("cannot read {path}: {e}"))?;
            let value: Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
            AlgebraPresentation::from_json(&value, ring).map_err(|e| e.to_string())
        }
    }
}

pub fn iterated_bar(s: &Settings, algebra: &str) -> Vec<Record> {
    let params = json!({ "algebra": algebra, "n": s.n, "bound": s.bound });
    vec![timed("iterated-bar", params, || {
        let a = load_algebra(algebra, s.ring)?;
        let r = compare_iterated(&a, s.n, s.bound, s.cap).map_err(|e| e.to_string())?;
        Ok::<_, String>((Status::of(r.equal), json!(r)))
    })]
}

/// Every verification suite at the configured size.
pub fn all(s: &Settings) -> Vec<Record> {
    let pairs = match pairs(s, None) {
        Ok(p) => p,
        Err(e) => return vec![timed("all", json!({}), || Err(e))],
    };
    let mut out = Vec::new();
    out.extend(koszul_check(s, &pairs));
    out.extend(nerve(s, &pairs));
    out.extend(relations(s));
    out.extend(tor_suite(s));
    out.extend(ext_suite(s));
    out.extend(acyclicity(s, &pairs));
    out.extend(cobar_check(s, &pairs));
    for algebra in ["dual-numbers", "exterior"] {
        out.extend(iterated_bar(s, algebra));
    }
    out
}
