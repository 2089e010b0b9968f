//! Brute-force cross-checks: bounded equivalence of grammars, an exact
//! height oracle for eq-restricted grammars, and a battery over the
//! fixtures.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::decision::{enumerate_support, is_support_empty, is_support_finite};
use crate::fixtures;
use crate::grammar::{index_classes, Wtgc};
use crate::homomorphism::{image_grammar, image_weight_oracle};
use crate::pumping::{grammar_height, separation_family};
use crate::semantics::{check_unambiguous_upto, Evaluator};
use crate::semiring::{Semiring, SemiringHom, Weight};
use crate::transforms::{
    boolean_finals, complement_support, constraint_determine, disambiguate, disjoint_union,
    eliminate_zero_derivations, hadamard, map_weights, normalize, support_automaton, DisambiguateOptions,
};
use crate::trees::{Name, Tree};

/// First tree of size at most `max_size` with `g(t) != expected(t)`, with
/// both values.
pub fn find_disagreement(g: &Wtgc, max_size: usize, expected: impl Fn(&Tree) -> Weight) -> Option<(Tree, Weight, Weight)> {
    let ev = Evaluator::new(g);
    g.alphabet().trees_up_to(max_size).into_iter().find_map(|t| {
        let (got, want) = (ev.evaluate(&t), expected(&t));
        (got != want).then_some((t, got, want))
    })
}

/// A tree of size at most `max_size` where `g` and `h` differ.
pub fn check_equivalent(g: &Wtgc, h: &Wtgc, max_size: usize) -> Option<Tree> {
    let eh = Evaluator::new(h);
    find_disagreement(g, max_size, |t| eh.evaluate(t)).map(|(t, _, _)| t)
}

/// For each nonterminal of an eq-restricted grammar, the heights of trees
/// it derives, exact up to `cap`; taller trees are recorded as `cap + 1`.
///
/// Works on heights directly: a production's tree height is the maximum of
/// its context's own depth and, per equality class, the deepest position
/// of the class plus the height chosen for the class's governing child.
pub fn derivable_heights(g: &Wtgc, cap: usize) -> Option<BTreeMap<Name, BTreeSet<usize>>> {
    let er = g.eq_restriction()?;
    let mut heights: BTreeMap<Name, BTreeSet<usize>> = BTreeMap::new();
    struct Shape {
        target: Name,
        context_depth: usize,
        classes: Vec<(Name, usize)>,
    }
    let shapes: Vec<Shape> = g
        .ids()
        .map(|(id, p)| {
            let dec = p.decompose();
            let context_depth = dec
                .context
                .positions()
                .into_iter()
                .filter(|w| dec.context.get(w).and_then(Tree::symbol).is_some())
                .map(|w| w.len())
                .max()
                .unwrap_or(0);
            let pairs = p.index_constraints().expect("classic");
            let classes = index_classes(dec.arity(), &pairs)
                .into_iter()
                .map(|class| {
                    let gov = er.governor(id, class[0]);
                    let depth = class.iter().map(|&i| dec.positions[i - 1].len()).max().unwrap_or(0);
                    (dec.states[gov - 1].clone(), depth)
                })
                .collect();
            Shape {
                target: p.target.clone(),
                context_depth,
                classes,
            }
        })
        .collect();
    loop {
        let mut changed = false;
        for shape in &shapes {
            let mut current: BTreeSet<usize> = BTreeSet::from([shape.context_depth.min(cap + 1)]);
            for (state, depth) in &shape.classes {
                let Some(options) = heights.get(state) else {
                    current.clear();
                    break;
                };
                current = current
                    .iter()
                    .flat_map(|&a| options.iter().map(move |&h| a.max(depth + h).min(cap + 1)))
                    .collect();
            }
            if current.is_empty() {
                continue;
            }
            let entry = heights.entry(shape.target.clone()).or_default();
            for h in current {
                changed |= entry.insert(h);
            }
        }
        if !changed {
            break;
        }
    }
    Some(heights)
}

/// Whether an eq-restricted grammar over a zero-divisor free semiring has
/// a supported tree taller than `bound`.
pub fn has_supported_tree_taller_than(g: &Wtgc, bound: usize) -> Option<bool> {
    let heights = derivable_heights(g, bound)?;
    Some(
        g.finals()
            .any(|(q, _)| heights.get(q).is_some_and(|hs| hs.iter().any(|&h| h > bound))),
    )
}

/// Whether some final nonterminal derives anything at all.
pub fn has_supported_tree(g: &Wtgc) -> Option<bool> {
    let heights = derivable_heights(g, 0)?;
    Some(g.finals().any(|(q, _)| heights.get(q).is_some_and(|hs| !hs.is_empty())))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for OracleCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{mark}  {:<40} {}", self.name, self.detail)
    }
}

fn check(name: impl Into<String>, result: Result<String, String>) -> OracleCheck {
    let (passed, detail) = match result {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    OracleCheck {
        name: name.into(),
        passed,
        detail,
    }
}

fn same(g: &Wtgc, h: &Wtgc, size: usize) -> Result<String, String> {
    match check_equivalent(g, h, size) {
        None => Ok(format!("agree on all trees up to size {size}")),
        Some(t) => Err(format!("differ on {t}")),
    }
}

/// Cross-semantics and cross-construction checks on the fixtures, with
/// trees up to `max_size`.
pub fn run_battery(max_size: usize) -> Vec<OracleCheck> {
    let mut out = Vec::new();
    let all: Vec<(&str, Wtgc)> = fixtures::GRAMMARS
        .iter()
        .map(|(n, _)| (*n, fixtures::grammar(n).expect("fixture")))
        .collect();
    for (name, g) in &all {
        out.push(check(format!("normalize {name}"), same(g, &normalize(g), max_size)));
        out.push(check(format!("boolean_finals {name}"), same(g, &boolean_finals(g), max_size)));
        let cd = constraint_determine(&normalize(g)).map_err(|e| e.to_string());
        out.push(check(format!("constraint_determine {name}"), cd.and_then(|d| same(g, &d, max_size))));
    }
    let fx6 = fixtures::grammar("fx6").expect("fixture");
    out.push(check(
        "eliminate_zero_derivations fx6",
        eliminate_zero_derivations(&fx6)
            .map_err(|e| e.to_string())
            .and_then(|z| same(&fx6, &z, max_size)),
    ));

    let g = fixtures::grammar("fx2_g").expect("fixture");
    let gp = fixtures::grammar("fx2_gprime").expect("fixture");
    let s = g.semiring();
    let (eg, egp) = (Evaluator::new(&g), Evaluator::new(&gp));
    out.push(check(
        "hadamard fx2",
        hadamard(&g, &gp).map_err(|e| e.to_string()).and_then(|p| {
            match find_disagreement(&p, max_size, |t| s.times(&eg.evaluate(t), &egp.evaluate(t))) {
                None => Ok(format!("product agrees up to size {max_size}")),
                Some((t, got, want)) => Err(format!("{t}: {got} != {want}")),
            }
        }),
    ));
    out.push(check(
        "disjoint_union fx2",
        disjoint_union(&g, &gp).map_err(|e| e.to_string()).and_then(|u| {
            match find_disagreement(&u, max_size, |t| s.plus(&eg.evaluate(t), &egp.evaluate(t))) {
                None => Ok(format!("sum agrees up to size {max_size}")),
                Some((t, got, want)) => Err(format!("{t}: {got} != {want}")),
            }
        }),
    ));
    let to_bool = |g: &Wtgc| map_weights(g, Semiring::Boolean, |_| Weight::Bool(true));
    out.push(check(
        "disambiguate fx2 union",
        disjoint_union(&to_bool(&g), &to_bool(&gp))
            .and_then(|u| {
                let d = disambiguate(&u, &SemiringHom::identity(Semiring::Boolean), DisambiguateOptions::default())?;
                Ok((u, d))
            })
            .map_err(|e| e.to_string())
            .and_then(|(u, d)| {
                if let Some(t) = check_unambiguous_upto(&d, max_size) {
                    return Err(format!("ambiguous on {t}"));
                }
                same(&u, &d, max_size).map(|m| format!("unambiguous; {m}"))
            }),
    ));

    for name in ["fx1", "fx2_g", "fx3", "fx5"] {
        let g = fixtures::grammar(name).expect("fixture");
        let s = g.semiring();
        let eg = Evaluator::new(&g);
        let result = support_automaton(&g)
            .and_then(|a| Ok((a, complement_support(&g)?)))
            .map_err(|e| e.to_string())
            .and_then(|(a, c)| {
                let inside = |t: &Tree| Weight::Bool(!s.is_zero(&eg.evaluate(t)));
                if let Some((t, _, _)) = find_disagreement(&a, max_size, inside) {
                    return Err(format!("support differs on {t}"));
                }
                let outside = |t: &Tree| Weight::Bool(s.is_zero(&eg.evaluate(t)));
                if let Some((t, _, _)) = find_disagreement(&c, max_size, outside) {
                    return Err(format!("complement differs on {t}"));
                }
                if let Some(t) = check_unambiguous_upto(&a, max_size) {
                    return Err(format!("support automaton ambiguous on {t}"));
                }
                Ok(format!("support and complement exact up to size {max_size}"))
            });
        out.push(check(format!("support/complement {name}"), result));
    }

    let fx3 = fixtures::grammar("fx3").expect("fixture");
    let hom = fixtures::fx3_hom();
    let image = image_grammar(&fx3, &hom);
    out.push(check(
        "image fx3 vs preimage sums",
        image.clone().map_err(|e| e.to_string()).and_then(|img| {
            let r = find_disagreement(&img, max_size, |u| {
                image_weight_oracle(&hom, &fx3, u).expect("finitary")
            });
            match r {
                None => Ok(format!("agree on all trees up to size {max_size}")),
                Some((t, got, want)) => Err(format!("{t}: {got} != {want}")),
            }
        }),
    ));

    let mut deciders: Vec<(String, Wtgc)> = vec![("fx4".into(), fixtures::grammar("fx4").expect("fixture"))];
    if let Ok(img) = image {
        deciders.push(("fx3 image".into(), img));
    }
    for (name, g) in &deciders {
        out.push(check(format!("decide {name}"), decision_agreement(g, max_size)));
    }

    let fx5 = fixtures::grammar("fx5").expect("fixture");
    let one = fx5.semiring().one();
    let ev5 = Evaluator::new(&fx5);
    let bad = (1..=4).find(|&n| {
        let (t, tb) = separation_family(n);
        ev5.evaluate(&t) != one || ev5.evaluate(&tb) != one
    });
    out.push(check(
        "separation family fx5",
        match bad {
            None => Ok("both trees weigh 1 for n = 1..4".into()),
            Some(n) => Err(format!("n = {n} has weight != 1")),
        },
    ));
    out
}

/// Decision procedures against the height oracle and bounded enumeration.
pub fn decision_agreement(g: &Wtgc, max_size: usize) -> Result<String, String> {
    let empty = is_support_empty(g).map_err(|e| e.to_string())?;
    let finite = is_support_finite(g).map_err(|e| e.to_string())?;
    let nonempty_oracle = has_supported_tree(g).ok_or("not eq-restricted")?;
    let bound = grammar_height(g);
    let tall_oracle = has_supported_tree_taller_than(g, bound).ok_or("not eq-restricted")?;
    let listed = enumerate_support(g, max_size);
    if empty == nonempty_oracle {
        return Err(format!("emptiness says {empty}, height oracle disagrees"));
    }
    if empty && !listed.is_empty() {
        return Err(format!("emptiness says empty but {} is supported", listed[0]));
    }
    if finite == tall_oracle {
        return Err(format!("finiteness says {finite}, height oracle disagrees"));
    }
    if finite {
        if let Some(t) = listed.iter().find(|t| t.height() > bound) {
            return Err(format!("finite but {t} is taller than {bound}"));
        }
    }
    Ok(format!(
        "empty={empty} finite={finite}; {} supported trees up to size {max_size}",
        listed.len()
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{random_eq_restricted, GenConfig};

    #[test]
    fn battery_passes() {
        for c in run_battery(6) {
            assert!(c.passed, "{c}");
        }
    }

    #[test]
    fn random_grammars_agree() {
        for seed in 0..40 {
            let g = random_eq_restricted(seed, GenConfig::default());
            decision_agreement(&g, 7).unwrap_or_else(|e| panic!("seed {seed}: {e}\n{g}"));
        }
    }
}
