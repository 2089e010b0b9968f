use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::grammar::{GrammarBuilder, Production, Wtgc};
use crate::semiring::{Semiring, SemiringError, Weight};
use crate::trees::{Name, Tree};

use super::{map_weights, normalize::boolean_finals, TransformError};

/// Capped exponent vector over the non-unit production weights.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DicksonVector(pub Vec<usize>);

impl fmt::Display for DicksonVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{x}")?;
        }
        f.write_str("]")
    }
}

/// Distinct non-unit production weights in a fixed order, with the cap `u`
/// such that a derivation weight is zero iff its capped exponent vector
/// maps to zero. `u = 0` when the semiring has no zero divisors.
pub fn zero_cap(g: &Wtgc) -> Result<(Vec<Weight>, usize), SemiringError> {
    let s = g.semiring();
    let mut weights: Vec<Weight> = g
        .productions()
        .iter()
        .map(|p| p.weight.clone())
        .filter(|w| !s.is_one(w))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    weights.sort_by_cached_key(|w| w.to_string());
    if s.flags().zero_divisor_free {
        return Ok((weights, 0));
    }
    let mut cap = 0;
    for w in &weights {
        let (pre, period) = s.power_profile(w)?;
        cap = cap.max(pre + period - 1);
    }
    Ok((weights, cap))
}

/// Equivalent grammar without derivations of weight zero.
///
/// States are pairs `<q,v>` where `v` counts (capped at `u`) how often each
/// non-unit weight was used; pairs whose vector evaluates to zero are never
/// built. Only bottom-up reachable pairs are materialized.
pub fn eliminate_zero_derivations(g: &Wtgc) -> Result<Wtgc, TransformError> {
    let s = g.semiring();
    let (weights, cap) = zero_cap(g)?;
    if cap == 0 {
        return Ok(g.clone());
    }
    let n = weights.len();
    let unit = |w: &Weight| -> DicksonVector {
        let mut v = vec![0; n];
        if let Some(i) = weights.iter().position(|x| x == w) {
            v[i] = 1;
        }
        DicksonVector(v)
    };
    let value = |v: &DicksonVector| -> Weight {
        s.product_all(
            weights
                .iter()
                .zip(&v.0)
                .map(|(w, &e)| s.pow(w, e))
                .collect::<Vec<_>>()
                .iter(),
        )
    };
    let decomposed: Vec<_> = g.productions().iter().map(|p| (p, p.decompose())).collect();
    let mut reached: BTreeMap<Name, BTreeSet<DicksonVector>> = BTreeMap::new();
    let mut out: BTreeSet<(usize, Vec<DicksonVector>, DicksonVector)> = BTreeSet::new();
    loop {
        let mut changed = false;
        for (idx, (p, dec)) in decomposed.iter().enumerate() {
            let options: Vec<Vec<DicksonVector>> = dec
                .states
                .iter()
                .map(|q| reached.get(q).map(|vs| vs.iter().cloned().collect()).unwrap_or_default())
                .collect();
            if options.iter().any(Vec::is_empty) {
                continue;
            }
            let own = unit(&p.weight);
            for_each_choice(&options, &mut |choice| {
                let mut v = own.clone();
                for c in choice {
                    for (a, b) in v.0.iter_mut().zip(&c.0) {
                        *a = (*a + b).min(cap);
                    }
                }
                if s.is_zero(&value(&v)) {
                    return;
                }
                if out.insert((idx, choice.to_vec(), v.clone())) {
                    changed = true;
                }
                if reached.entry(p.target.clone()).or_default().insert(v) {
                    changed = true;
                }
            });
        }
        if !changed {
            break;
        }
    }
    let state = |q: &Name, v: &DicksonVector| super::pair_name(q, v);
    let mut b = GrammarBuilder::new(s, g.alphabet().clone());
    for (q, vs) in &reached {
        for v in vs {
            b.nonterminal(state(q, v));
            b.add_final(state(q, v), g.final_weight(q));
        }
    }
    for (idx, choice, v) in out {
        let (p, dec) = &decomposed[idx];
        let args: Vec<Tree> = dec
            .states
            .iter()
            .zip(&choice)
            .map(|(q, cv)| Tree::nonterminal(&state(q, cv)))
            .collect();
        b.add(Production {
            lhs: dec.context.apply_args(&args),
            target: state(&p.target, &v),
            ..(*p).clone()
        });
    }
    Ok(b.build())
}

pub(crate) fn for_each_choice<T>(options: &[Vec<T>], f: &mut impl FnMut(&[T]))
where
    T: Clone,
{
    let mut current: Vec<T> = Vec::with_capacity(options.len());
    fn go<T: Clone>(options: &[Vec<T>], current: &mut Vec<T>, f: &mut impl FnMut(&[T])) {
        if current.len() == options.len() {
            f(current);
            return;
        }
        for o in &options[current.len()] {
            current.push(o.clone());
            go(options, current, f);
            current.pop();
        }
    }
    go(options, &mut current, f);
}

/// Boolean grammar recognizing the support of `g`. Requires a zero-sum
/// free semiring.
pub fn support_grammar(g: &Wtgc) -> Result<Wtgc, TransformError> {
    let s = g.semiring();
    if !s.flags().zero_sum_free {
        return Err(SemiringError::NotZeroSumFree(s).into());
    }
    let cleaned = eliminate_zero_derivations(&boolean_finals(g))?;
    Ok(map_weights(&cleaned, Semiring::Boolean, |w| Weight::Bool(!s.is_zero(w))))
}
