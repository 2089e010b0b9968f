//! Emptiness and finiteness of the support of eq-restricted positive
//! classic grammars over zero-sum free semirings.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::grammar::{EqRestriction, Wtgc};
use crate::semantics::Evaluator;
use crate::semiring::SemiringError;
use crate::transforms::{eliminate_zero_derivations, TransformError};
use crate::trees::{Name, Tree};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecisionError {
    #[error("grammar is not eq-restricted positive classic; emptiness and finiteness are only decided for that class")]
    NotEqRestricted,
    #[error(transparent)]
    Semiring(#[from] SemiringError),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ProductivityTable {
    /// Nonterminals deriving at least one tree.
    pub productive: BTreeSet<Name>,
    /// Productive nonterminals reachable from a productive final one
    /// through productions with productive children.
    pub reachable: BTreeSet<Name>,
}

impl ProductivityTable {
    pub fn compute(g: &Wtgc) -> Self {
        let mut productive = BTreeSet::new();
        loop {
            let before = productive.len();
            for p in g.productions() {
                if p.children().iter().all(|q| productive.contains(q)) {
                    productive.insert(p.target.clone());
                }
            }
            if productive.len() == before {
                break;
            }
        }
        let mut reachable: BTreeSet<Name> = g
            .finals()
            .map(|(q, _)| q.clone())
            .filter(|q| productive.contains(q))
            .collect();
        let mut stack: Vec<Name> = reachable.iter().cloned().collect();
        while let Some(q) = stack.pop() {
            for p in g.productions().iter().filter(|p| p.target == q) {
                let kids = p.children();
                if kids.iter().all(|c| productive.contains(c)) {
                    for c in kids {
                        if reachable.insert(c.clone()) {
                            stack.push(c);
                        }
                    }
                }
            }
        }
        ProductivityTable { productive, reachable }
    }
}

impl fmt::Display for ProductivityTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |s: &BTreeSet<Name>| s.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(" ");
        writeln!(f, "productive: {}", join(&self.productive))?;
        write!(f, "reachable:  {}", join(&self.reachable))
    }
}

/// A decided property with the data backing it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub holds: bool,
    pub table: ProductivityTable,
    /// A dependency cycle through reachable nonterminals, when one exists.
    pub cycle: Option<Vec<Name>>,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.table)?;
        match &self.cycle {
            Some(c) => write!(
                f,
                "cycle: {}",
                c.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(" -> ")
            ),
            None => write!(f, "cycle: none"),
        }
    }
}

fn prepare(g: &Wtgc) -> Result<(Wtgc, EqRestriction), DecisionError> {
    if g.eq_restriction().is_none() {
        return Err(DecisionError::NotEqRestricted);
    }
    let s = g.semiring();
    if !s.flags().zero_sum_free {
        return Err(SemiringError::NotZeroSumFree(s).into());
    }
    let cleaned = eliminate_zero_derivations(g)?;
    let er = cleaned.eq_restriction().ok_or(DecisionError::NotEqRestricted)?;
    Ok((cleaned, er))
}

/// Governing edges `q -> q_i` of productions with productive children,
/// restricted to reachable nonterminals; returns one cycle if any.
fn find_cycle(g: &Wtgc, er: &EqRestriction, table: &ProductivityTable) -> Option<Vec<Name>> {
    let mut edges: BTreeMap<&Name, BTreeSet<&Name>> = BTreeMap::new();
    for (id, p) in g.ids() {
        if !table.reachable.contains(&p.target) {
            continue;
        }
        let kids = p.children();
        if !kids.iter().all(|c| table.productive.contains(c)) {
            continue;
        }
        let dec = p.decompose();
        for i in 1..=dec.arity() {
            if er.is_governing(id, i) {
                let child = g.nonterminals().get(&dec.states[i - 1]).expect("declared");
                edges.entry(&p.target).or_default().insert(child);
            }
        }
    }
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Open,
        Done,
    }
    fn dfs<'a>(
        q: &'a Name,
        edges: &BTreeMap<&'a Name, BTreeSet<&'a Name>>,
        marks: &mut BTreeMap<&'a Name, Mark>,
        path: &mut Vec<&'a Name>,
    ) -> Option<Vec<Name>> {
        marks.insert(q, Mark::Open);
        path.push(q);
        for &next in edges.get(q).into_iter().flatten() {
            match marks.get(next) {
                Some(Mark::Open) => {
                    let start = path.iter().position(|x| *x == next).expect("on path");
                    let mut cycle: Vec<Name> = path[start..].iter().map(|q| (*q).clone()).collect();
                    cycle.push(next.clone());
                    return Some(cycle);
                }
                Some(Mark::Done) => {}
                None => {
                    if let Some(c) = dfs(next, edges, marks, path) {
                        return Some(c);
                    }
                }
            }
        }
        path.pop();
        marks.insert(q, Mark::Done);
        None
    }
    let mut marks = BTreeMap::new();
    for (q, _) in g.finals() {
        if table.productive.contains(q) && !marks.contains_key(q) {
            if let Some(c) = dfs(q, &edges, &mut marks, &mut Vec::new()) {
                return Some(c);
            }
        }
    }
    None
}

/// Decides `supp(g) = {}` with the productivity table as evidence.
pub fn explain_empty(g: &Wtgc) -> Result<Verdict, DecisionError> {
    let (g, _) = prepare(g)?;
    let table = ProductivityTable::compute(&g);
    Ok(Verdict {
        holds: table.reachable.is_empty(),
        table,
        cycle: None,
    })
}

/// Decides whether `supp(g)` is finite; a reachable dependency cycle is
/// the evidence for infinity.
pub fn explain_finite(g: &Wtgc) -> Result<Verdict, DecisionError> {
    let (g, er) = prepare(g)?;
    let table = ProductivityTable::compute(&g);
    let cycle = find_cycle(&g, &er, &table);
    Ok(Verdict {
        holds: cycle.is_none(),
        table,
        cycle,
    })
}

pub fn is_support_empty(g: &Wtgc) -> Result<bool, DecisionError> {
    Ok(explain_empty(g)?.holds)
}

pub fn is_support_finite(g: &Wtgc) -> Result<bool, DecisionError> {
    Ok(explain_finite(g)?.holds)
}

/// All trees of size at most `max_size` with nonzero weight, smallest first.
pub fn enumerate_support(g: &Wtgc, max_size: usize) -> Vec<Tree> {
    let ev = Evaluator::new(g);
    let s = g.semiring();
    g.alphabet()
        .trees_up_to(max_size)
        .into_iter()
        .filter(|t| !s.is_zero(&ev.evaluate(t)))
        .collect()
}
