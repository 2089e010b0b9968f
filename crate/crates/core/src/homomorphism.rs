//! Tree homomorphisms, their preimages, and the eq-restricted grammar for
//! the homomorphic image of a weighted tree automaton.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use indexmap::IndexMap;
use thiserror::Error;

use crate::grammar::{fresh_name, GrammarBuilder, Production, Wtgc};
use crate::semantics::Evaluator;
use crate::semiring::Weight;
use crate::syntax::{is_var_name, parse_alphabet_entries, resolve, strip_comment, Cursor, SyntaxError};
use crate::transforms::{relabel, Relabeling, TransformError};
use crate::trees::{normalize_pair, ConstraintSet, IndexedTree, Label, Name, Position, RankedAlphabet, Tree};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HomError {
    #[error("no image given for symbol `{0}`")]
    Missing(Name),
    #[error("image of `{symbol}` uses x{var} but the symbol has rank {rank}")]
    VarOutOfRange { symbol: Name, var: usize, rank: usize },
    #[error("image of `{symbol}`: {message}")]
    BadImage { symbol: Name, message: String },
    #[error("symbol `{0}` is not in the source alphabet")]
    UnknownSymbol(Name),
    #[error("homomorphism is deleting: image of `{0}` drops a variable")]
    Deleting(Name),
    #[error("homomorphism is erasing: image of `{0}` is a variable")]
    Erasing(Name),
    #[error("grammar alphabet differs from the homomorphism source")]
    AlphabetMismatch,
    #[error("grammar must be an unconstrained normalized automaton")]
    NotWta,
    #[error(transparent)]
    Transform(#[from] TransformError),
}

/// A tree homomorphism given by one right-hand side per source symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeHom {
    source: RankedAlphabet,
    target: RankedAlphabet,
    rules: IndexMap<Name, Tree>,
    nondeleting: bool,
    nonerasing: bool,
}

impl TreeHom {
    pub fn new(
        source: RankedAlphabet,
        target: RankedAlphabet,
        rules: impl IntoIterator<Item = (Name, Tree)>,
    ) -> Result<Self, HomError> {
        let rules: IndexMap<Name, Tree> = rules.into_iter().collect();
        for sym in rules.keys() {
            if !source.contains(sym) {
                return Err(HomError::UnknownSymbol(sym.clone()));
            }
        }
        let (mut nondeleting, mut nonerasing) = (true, true);
        for (sym, rank) in source.iter() {
            let rhs = rules.get(sym).ok_or_else(|| HomError::Missing(sym.clone()))?;
            check_rhs(sym, rank, rhs, &target)?;
            let vars: BTreeSet<usize> = var_positions(rhs).into_iter().map(|(i, _)| i).collect();
            nondeleting &= vars.len() == rank;
            nonerasing &= !matches!(rhs.label(), Label::Var(_));
        }
        Ok(TreeHom {
            source,
            target,
            rules,
            nondeleting,
            nonerasing,
        })
    }

    /// `sigma -> sigma(x1, ..., xk)` for every symbol.
    pub fn identity(alphabet: &RankedAlphabet) -> Self {
        let rules = alphabet
            .iter()
            .map(|(s, r)| (s.clone(), Tree::node(s, (1..=r).map(Tree::var).collect())))
            .collect::<Vec<_>>();
        TreeHom::new(alphabet.clone(), alphabet.clone(), rules).expect("identity is well formed")
    }

    pub fn source(&self) -> &RankedAlphabet {
        &self.source
    }

    pub fn target(&self) -> &RankedAlphabet {
        &self.target
    }

    pub fn rhs(&self, symbol: &str) -> Option<&Tree> {
        self.rules.get(symbol)
    }

    pub fn rules(&self) -> impl Iterator<Item = (&Name, &Tree)> {
        self.rules.iter()
    }

    pub fn is_nondeleting(&self) -> bool {
        self.nondeleting
    }

    pub fn is_nonerasing(&self) -> bool {
        self.nonerasing
    }

    fn check_finitary(&self) -> Result<(), HomError> {
        for (sym, rank) in self.source.iter() {
            let rhs = &self.rules[sym];
            if matches!(rhs.label(), Label::Var(_)) {
                return Err(HomError::Erasing(sym.clone()));
            }
            let vars: BTreeSet<usize> = var_positions(rhs).into_iter().map(|(i, _)| i).collect();
            if vars.len() != rank {
                return Err(HomError::Deleting(sym.clone()));
            }
        }
        Ok(())
    }

    pub fn apply(&self, t: &Tree) -> Result<Tree, HomError> {
        let sym = t
            .symbol()
            .ok_or_else(|| HomError::UnknownSymbol(Name::from(t.label().to_string())))?;
        let rhs = self.rules.get(sym).ok_or_else(|| HomError::UnknownSymbol(sym.clone()))?;
        let args = t.children().iter().map(|c| self.apply(c)).collect::<Result<Vec<_>, _>>()?;
        Ok(rhs.apply_args(&args))
    }

    /// All trees `t` with `apply(t) = u`, sorted.
    pub fn preimage(&self, u: &Tree) -> Result<Vec<Tree>, HomError> {
        self.check_finitary()?;
        let idx = IndexedTree::new(u);
        let mut memo: HashMap<usize, Vec<Tree>> = HashMap::new();
        let mut out = self.preimage_at(&idx, idx.root(), &mut memo);
        out.sort_by_cached_key(|t| (t.size(), t.to_string()));
        Ok(out)
    }

    fn preimage_at(&self, idx: &IndexedTree, node: usize, memo: &mut HashMap<usize, Vec<Tree>>) -> Vec<Tree> {
        let class = idx.class(node);
        if let Some(found) = memo.get(&class) {
            return found.clone();
        }
        let mut out = Vec::new();
        for (sym, rank) in self.source.iter() {
            let mut binding: Vec<Option<usize>> = vec![None; rank];
            if !match_rhs(idx, node, &self.rules[sym], &mut binding) {
                continue;
            }
            let options: Vec<Vec<Tree>> = binding
                .iter()
                .map(|b| self.preimage_at(idx, b.expect("nondeleting"), memo))
                .collect();
            crate::transforms::for_each_choice(&options, &mut |choice| {
                out.push(Tree::node(sym, choice.to_vec()));
            });
        }
        memo.insert(class, out.clone());
        out
    }
}

fn check_rhs(sym: &Name, rank: usize, rhs: &Tree, target: &RankedAlphabet) -> Result<(), HomError> {
    let bad = |message: String| HomError::BadImage {
        symbol: sym.clone(),
        message,
    };
    match rhs.label() {
        Label::Var(i) if *i == 0 || *i > rank => Err(HomError::VarOutOfRange {
            symbol: sym.clone(),
            var: *i,
            rank,
        }),
        Label::Var(_) => Ok(()),
        Label::Nonterminal(q) => Err(bad(format!("nonterminal `{q}` in right-hand side"))),
        Label::Symbol(d) => {
            match target.rank(d) {
                None => return Err(bad(format!("unknown target symbol `{d}`"))),
                Some(r) if r != rhs.children().len() => {
                    return Err(bad(format!("`{d}` has rank {r} but {} children", rhs.children().len())))
                }
                _ => {}
            }
            rhs.children().iter().try_for_each(|c| check_rhs(sym, rank, c, target))
        }
    }
}

/// Variable occurrences `(i, position)` in preorder.
fn var_positions(t: &Tree) -> Vec<(usize, Position)> {
    t.positions()
        .into_iter()
        .filter_map(|w| match t.get(&w).map(Tree::label) {
            Some(Label::Var(i)) => Some((*i, w)),
            _ => None,
        })
        .collect()
}

fn match_rhs(idx: &IndexedTree, node: usize, pattern: &Tree, binding: &mut [Option<usize>]) -> bool {
    match pattern.label() {
        Label::Var(i) => match binding[i - 1] {
            Some(prev) => idx.class(prev) == idx.class(node),
            None => {
                binding[i - 1] = Some(node);
                true
            }
        },
        label => {
            label == idx.label(node)
                && pattern.children().len() == idx.children(node).len()
                && pattern
                    .children()
                    .iter()
                    .zip(idx.children(node).to_vec())
                    .all(|(p, c)| match_rhs(idx, c, p, binding))
        }
    }
}

impl fmt::Display for TreeHom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "hom")?;
        let alpha = |a: &RankedAlphabet| a.iter().map(|(s, r)| format!(" {s}:{r}")).collect::<String>();
        writeln!(f, "source{}", alpha(&self.source))?;
        writeln!(f, "target{}", alpha(&self.target))?;
        for (s, rhs) in &self.rules {
            writeln!(f, "{s} -> {rhs}")?;
        }
        Ok(())
    }
}

/// Parses the `hom` file format: a `hom` header, `source` and `target`
/// alphabet lines, then one `symbol -> rhs` line per source symbol. In a
/// right-hand side the bare names `x1`, `x2`, ... are variables; quote them
/// to use a symbol of that name.
pub fn parse_hom(text: &str) -> Result<TreeHom, SyntaxError> {
    let mut source = RankedAlphabet::new();
    let mut target = RankedAlphabet::new();
    let mut header = false;
    let mut pending: Vec<(usize, String)> = Vec::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = strip_comment(raw_line).trim();
        if line.is_empty() {
            continue;
        }
        let mut c = Cursor::new(line, line_no);
        if !header {
            if line != "hom" {
                return Err(c.error("expected `hom` header"));
            }
            header = true;
            continue;
        }
        if c.eat("source ") || line == "source" {
            parse_alphabet_entries(&mut c, &mut source)?;
        } else if c.eat("target ") || line == "target" {
            parse_alphabet_entries(&mut c, &mut target)?;
        } else {
            pending.push((line_no, line.to_string()));
        }
    }
    if !header {
        return Err(SyntaxError {
            line: 1,
            column: 1,
            message: "expected `hom` header".into(),
        });
    }
    let mut rules: Vec<(Name, Tree)> = Vec::new();
    let mut seen = BTreeSet::new();
    for (line_no, line) in &pending {
        let mut c = Cursor::new(line, *line_no);
        let column = c.column();
        let (sym, _) = c.name()?;
        let Some(rank) = source.rank(&sym) else {
            return Err(c.error_at(column, format!("unknown source symbol `{sym}`")));
        };
        if !seen.insert(sym.clone()) {
            return Err(c.error_at(column, format!("duplicate image for `{sym}`")));
        }
        c.expect("->")?;
        let raw = c.term()?;
        c.expect_end()?;
        let rhs = resolve(&raw, &c, Some(&target), &|r| {
            if !r.quoted {
                if let Some(v) = is_var_name(&r.name) {
                    if v > rank {
                        return Err(format!("variable x{v} out of range for `{sym}` of rank {rank}"));
                    }
                    return Ok(Label::Var(v));
                }
            }
            Ok(Label::Symbol(r.name.clone()))
        })?;
        rules.push((sym, rhs));
    }
    TreeHom::new(source, target, rules).map_err(|e| SyntaxError {
        line: 1,
        column: 1,
        message: e.to_string(),
    })
}

/// `sum of g(t)` over the preimage of `u`.
pub fn image_weight_oracle(h: &TreeHom, g: &Wtgc, u: &Tree) -> Result<Weight, HomError> {
    let s = g.semiring();
    let ev = Evaluator::new(g);
    let pre = h.preimage(u)?;
    Ok(s.sum_all(pre.iter().map(|t| ev.evaluate(t)).collect::<Vec<_>>().iter()))
}

/// The intermediate grammar over annotated symbols and the relabeling that
/// turns it into the image grammar.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageOne {
    pub grammar: Wtgc,
    pub relabeling: Relabeling,
    pub sink: Name,
}

/// First stage of the image construction: one production per production
/// `p` of `g`, over the symbol `delta#p` where `delta` is the root of the
/// image of `p`'s symbol. The left-most occurrence of each variable becomes
/// the child state, every other occurrence the sink, and all occurrences of
/// one variable are tied by equality constraints.
pub fn image_stage_one(g: &Wtgc, h: &TreeHom) -> Result<StageOne, HomError> {
    if !g.classify().is_wta() {
        return Err(HomError::NotWta);
    }
    if !g.alphabet().same_symbols(h.source()) {
        return Err(HomError::AlphabetMismatch);
    }
    h.check_finitary()?;
    let s = g.semiring();
    let taken = |n: &str| g.is_nonterminal(n) || g.alphabet().contains(n) || h.target().contains(n);
    let bot = fresh_name("bot", &taken);

    let mut alphabet = h.target().clone();
    let mut map: BTreeMap<Name, Name> = h.target().iter().map(|(d, _)| (d.clone(), d.clone())).collect();
    let mut prods = Vec::new();
    for (id, p) in g.ids() {
        let sym = p.symbol().expect("normalized");
        let rhs = h.rhs(sym).expect("total");
        let delta = rhs.symbol().expect("nonerasing");
        let annotated = Name::from(format!("{}#{}", delta.as_str(), id));
        alphabet.insert(annotated.clone(), rhs.children().len());
        map.insert(annotated.clone(), delta.clone());

        let states = p.children();
        let occurrences = var_positions(rhs);
        let mut eq = ConstraintSet::new();
        for (i, w) in &occurrences {
            for (j, v) in &occurrences {
                if i == j && w < v {
                    eq.insert(normalize_pair(w.clone(), v.clone()));
                }
            }
        }
        let mut seen = BTreeSet::new();
        let body = rhs.map_vars(&mut |i| {
            if seen.insert(i) {
                Tree::nonterminal(&states[i - 1])
            } else {
                Tree::nonterminal(&bot)
            }
        });
        let lhs = Tree::node(&annotated, body.children().to_vec());
        let mut prod = Production::new(lhs, p.target.clone(), p.weight.clone());
        prod.eq = eq;
        prods.push(prod);
    }
    let mut b = GrammarBuilder::new(s, alphabet);
    for q in g.nonterminals() {
        b.nonterminal(q.clone());
    }
    for (q, w) in g.finals() {
        b.add_final(q.clone(), w.clone());
    }
    for p in prods {
        b.add(p);
    }
    b.add_sink(&bot);
    Ok(StageOne {
        grammar: b.build(),
        relabeling: Relabeling {
            map,
            target: h.target().clone(),
        },
        sink: bot,
    })
}

/// Eq-restricted positive classic grammar for the image `h(g)`.
pub fn image_grammar(g: &Wtgc, h: &TreeHom) -> Result<Wtgc, HomError> {
    let stage = image_stage_one(g, h)?;
    Ok(relabel(&stage.grammar, &stage.relabeling)?)
}
