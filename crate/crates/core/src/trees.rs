//! Ranked alphabets, trees, positions, substitution and constraint checks.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use indexmap::IndexMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("invalid position {position} in {tree}")]
    InvalidPosition { position: Position, tree: String },
    #[error("symbol `{0}` is not in the alphabet")]
    UnknownSymbol(Name),
    #[error("arity mismatch: `{symbol}` has rank {rank} but {found} children")]
    Arity {
        symbol: Name,
        rank: usize,
        found: usize,
    },
}

/// An interned-by-sharing identifier used for symbols and nonterminals.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Name(Arc<str>);

impl Name {
    pub fn new(s: &str) -> Self {
        Name(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Whether the name can be written without quotes.
    pub fn is_plain(&self) -> bool {
        is_plain_ident(&self.0)
    }
}

pub(crate) fn is_plain_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '#')
}

impl Deref for Name {
    type Target = str;
    fn deref(&self) -> &str {
        &self.0
    }
}

impl std::borrow::Borrow<str> for Name {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Name {
    fn from(s: &str) -> Self {
        Name::new(s)
    }
}

impl From<String> for Name {
    fn from(s: String) -> Self {
        Name(Arc::from(s))
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_plain() {
            f.write_str(&self.0)
        } else {
            f.write_str("\"")?;
            for c in self.0.chars() {
                if c == '"' || c == '\\' {
                    f.write_str("\\")?;
                }
                write!(f, "{c}")?;
            }
            f.write_str("\"")
        }
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Finite map from symbol to rank, in declaration order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RankedAlphabet {
    symbols: IndexMap<Name, usize>,
}

impl RankedAlphabet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, usize)>) -> Self {
        let mut a = Self::new();
        for (s, r) in pairs {
            a.insert(Name::new(s), r);
        }
        a
    }

    /// Adds a symbol; returns the previously declared rank if any.
    pub fn insert(&mut self, symbol: Name, rank: usize) -> Option<usize> {
        self.symbols.insert(symbol, rank)
    }

    pub fn rank(&self, symbol: &str) -> Option<usize> {
        self.symbols.get(symbol).copied()
    }

    pub fn contains(&self, symbol: &str) -> bool {
        self.symbols.contains_key(symbol)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, usize)> {
        self.symbols.iter().map(|(s, r)| (s, *r))
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn max_rank(&self) -> usize {
        self.symbols.values().copied().max().unwrap_or(0)
    }

    /// All trees over the alphabet with at most `max_size` nodes, ordered
    /// by size and then by their text form.
    pub fn trees_up_to(&self, max_size: usize) -> Vec<Tree> {
        self.trees_by_size(max_size).into_iter().flatten().collect()
    }

    /// `out[n]` holds the trees of size `n`, sorted by text form.
    pub fn trees_by_size(&self, max_size: usize) -> Vec<Vec<Tree>> {
        let mut by_size: Vec<Vec<Tree>> = vec![Vec::new(); max_size + 1];
        for n in 1..=max_size {
            let mut bucket = Vec::new();
            for (s, r) in self.iter() {
                if r == 0 {
                    if n == 1 {
                        bucket.push(Tree::new(Label::Symbol(s.clone()), Vec::new()));
                    }
                    continue;
                }
                if n < 1 + r {
                    continue;
                }
                let mut parts = Vec::with_capacity(r);
                compositions(n - 1, r, &mut parts, &mut |sizes| {
                    let mut combos: Vec<Vec<Tree>> = vec![Vec::new()];
                    for &k in sizes {
                        let mut next = Vec::new();
                        for prefix in &combos {
                            for t in &by_size[k] {
                                let mut c = prefix.clone();
                                c.push(t.clone());
                                next.push(c);
                            }
                        }
                        combos = next;
                    }
                    for children in combos {
                        bucket.push(Tree::new(Label::Symbol(s.clone()), children));
                    }
                });
            }
            bucket.sort_by_cached_key(|t| t.to_string());
            by_size[n] = bucket;
        }
        by_size
    }

    /// Same symbols with the same ranks, ignoring declaration order.
    pub fn same_symbols(&self, other: &RankedAlphabet) -> bool {
        self.len() == other.len() && self.iter().all(|(s, r)| other.rank(s) == Some(r))
    }
}

fn compositions(total: usize, parts: usize, acc: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if parts == 0 {
        if total == 0 {
            f(acc);
        }
        return;
    }
    let remaining = parts - 1;
    for first in 1..=total.saturating_sub(remaining) {
        acc.push(first);
        compositions(total - first, remaining, acc, f);
        acc.pop();
    }
}

/// Node label of a tree over `Sigma u Q u X`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Symbol(Name),
    Nonterminal(Name),
    /// Variable `x_i`, 1-based.
    Var(usize),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Symbol(n) | Label::Nonterminal(n) => write!(f, "{n}"),
            Label::Var(i) => write!(f, "x{i}"),
        }
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Symbol(n) => write!(f, "{n}"),
            Label::Nonterminal(n) => write!(f, "<{n}>"),
            Label::Var(i) => write!(f, "x{i}"),
        }
    }
}

/// A finite ordered ranked tree.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tree {
    label: Label,
    children: Vec<Tree>,
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label)?;
        if !self.children.is_empty() {
            f.write_str("(")?;
            for (i, c) in self.children.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{c}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.label)?;
        if !self.children.is_empty() {
            f.debug_list().entries(&self.children).finish()?;
        }
        Ok(())
    }
}

impl Tree {
    pub fn new(label: Label, children: Vec<Tree>) -> Self {
        Tree { label, children }
    }

    /// `symbol(children...)`
    pub fn node(symbol: &str, children: Vec<Tree>) -> Self {
        Tree::new(Label::Symbol(Name::new(symbol)), children)
    }

    pub fn leaf(symbol: &str) -> Self {
        Tree::node(symbol, Vec::new())
    }

    pub fn nonterminal(q: &Name) -> Self {
        Tree::new(Label::Nonterminal(q.clone()), Vec::new())
    }

    pub fn var(i: usize) -> Self {
        Tree::new(Label::Var(i), Vec::new())
    }

    /// `symbol^n(base)`
    pub fn chain(symbol: &str, n: usize, base: Tree) -> Self {
        (0..n).fold(base, |t, _| Tree::node(symbol, vec![t]))
    }

    pub fn label(&self) -> &Label {
        &self.label
    }

    pub fn children(&self) -> &[Tree] {
        &self.children
    }

    pub fn symbol(&self) -> Option<&Name> {
        match &self.label {
            Label::Symbol(s) => Some(s),
            _ => None,
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Tree::size).sum::<usize>()
    }

    /// `max |w|` over positions; a single node has height 0.
    pub fn height(&self) -> usize {
        self.children.iter().map(|c| c.height() + 1).max().unwrap_or(0)
    }

    pub fn height_and_size(&self) -> (usize, usize) {
        (self.height(), self.size())
    }

    /// All positions in preorder.
    pub fn positions(&self) -> Vec<Position> {
        let mut out = Vec::with_capacity(self.size());
        let mut path = Vec::new();
        self.collect_positions(&mut path, &mut out);
        out
    }

    fn collect_positions(&self, path: &mut Vec<u32>, out: &mut Vec<Position>) {
        out.push(Position(path.clone()));
        for (i, c) in self.children.iter().enumerate() {
            path.push(i as u32 + 1);
            c.collect_positions(path, out);
            path.pop();
        }
    }

    /// Positions whose label satisfies `pred`, in preorder.
    pub fn positions_where(&self, pred: impl Fn(&Label) -> bool) -> Vec<Position> {
        self.positions()
            .into_iter()
            .filter(|p| pred(&self.get(p).expect("own position").label))
            .collect()
    }

    pub fn get(&self, w: &Position) -> Option<&Tree> {
        let mut t = self;
        for &i in &w.0 {
            t = t.children.get((i as usize).checked_sub(1)?)?;
        }
        Some(t)
    }

    pub fn contains_position(&self, w: &Position) -> bool {
        self.get(w).is_some()
    }

    /// `t|_w`
    pub fn subtree(&self, w: &Position) -> Result<&Tree, TreeError> {
        self.get(w).ok_or_else(|| TreeError::InvalidPosition {
            position: w.clone(),
            tree: self.to_string(),
        })
    }

    /// `t[u]_w`
    pub fn replace(&self, u: Tree, w: &Position) -> Result<Tree, TreeError> {
        if !self.contains_position(w) {
            return Err(TreeError::InvalidPosition {
                position: w.clone(),
                tree: self.to_string(),
            });
        }
        let mut out = self.clone();
        let mut slot = &mut out;
        for &i in &w.0 {
            slot = &mut slot.children[i as usize - 1];
        }
        *slot = u;
        Ok(out)
    }

    /// Simultaneous substitution of variables; unbound variables stay.
    pub fn substitute(&self, theta: &HashMap<usize, Tree>) -> Tree {
        match &self.label {
            Label::Var(i) => theta.get(i).cloned().unwrap_or_else(|| self.clone()),
            _ => Tree::new(
                self.label.clone(),
                self.children.iter().map(|c| c.substitute(theta)).collect(),
            ),
        }
    }

    /// `c[t_1, ..., t_k]`: replaces `x_i` by `args[i-1]`.
    pub fn apply_args(&self, args: &[Tree]) -> Tree {
        match &self.label {
            Label::Var(i) => args.get(i - 1).cloned().unwrap_or_else(|| self.clone()),
            _ => Tree::new(
                self.label.clone(),
                self.children.iter().map(|c| c.apply_args(args)).collect(),
            ),
        }
    }

    /// Replaces variable leaves through `f`, visiting them left to right.
    pub fn map_vars(&self, f: &mut impl FnMut(usize) -> Tree) -> Tree {
        match &self.label {
            Label::Var(i) => f(*i),
            _ => Tree::new(
                self.label.clone(),
                self.children.iter().map(|c| c.map_vars(f)).collect(),
            ),
        }
    }

    /// Replaces nonterminal leaves through `f`.
    pub fn map_nonterminals(&self, f: &mut impl FnMut(&Name) -> Tree) -> Tree {
        match &self.label {
            Label::Nonterminal(q) => f(q),
            _ => Tree::new(
                self.label.clone(),
                self.children.iter().map(|c| c.map_nonterminals(f)).collect(),
            ),
        }
    }

    /// Relabels symbol nodes through `f`.
    pub fn map_symbols(&self, f: &impl Fn(&Name) -> Name) -> Tree {
        let label = match &self.label {
            Label::Symbol(s) => Label::Symbol(f(s)),
            other => other.clone(),
        };
        Tree::new(label, self.children.iter().map(|c| c.map_symbols(f)).collect())
    }

    /// Left-to-right sequence of leaves labelled by nonterminals or variables.
    pub fn yield_of(&self) -> Vec<Label> {
        let mut out = Vec::new();
        self.collect_yield(&mut out);
        out
    }

    fn collect_yield(&self, out: &mut Vec<Label>) {
        match &self.label {
            Label::Nonterminal(_) | Label::Var(_) => out.push(self.label.clone()),
            Label::Symbol(_) => self.children.iter().for_each(|c| c.collect_yield(out)),
        }
    }

    /// Whether the tree is in `C^_Sigma(X_k)`: its yield is exactly `x1 ... xk`.
    pub fn is_ordered_context(&self, k: usize) -> bool {
        let y = self.yield_of();
        y.len() == k && y.iter().enumerate().all(|(i, l)| *l == Label::Var(i + 1))
    }

    /// Highest variable index occurring in the tree.
    pub fn max_var(&self) -> usize {
        match self.label {
            Label::Var(i) => i,
            _ => self.children.iter().map(Tree::max_var).max().unwrap_or(0),
        }
    }

    /// Does `t` satisfy `v = v'`? Absent positions dissatisfy.
    pub fn satisfies(&self, c: &(Position, Position)) -> bool {
        match (self.get(&c.0), self.get(&c.1)) {
            (Some(a), Some(b)) => a == b,
            _ => false,
        }
    }

    pub fn satisfies_all(&self, cs: &ConstraintSet) -> bool {
        cs.iter().all(|c| self.satisfies(c))
    }

    pub fn dissatisfies_all(&self, cs: &ConstraintSet) -> bool {
        cs.iter().all(|c| !self.satisfies(c))
    }

    /// Checks ranks and that only symbols are inner nodes.
    pub fn check_ranks(&self, alphabet: &RankedAlphabet) -> Result<(), TreeError> {
        match &self.label {
            Label::Symbol(s) => {
                let rank = alphabet.rank(s).ok_or_else(|| TreeError::UnknownSymbol(s.clone()))?;
                if rank != self.children.len() {
                    return Err(TreeError::Arity {
                        symbol: s.clone(),
                        rank,
                        found: self.children.len(),
                    });
                }
            }
            Label::Nonterminal(n) if !self.children.is_empty() => {
                return Err(TreeError::Arity {
                    symbol: n.clone(),
                    rank: 0,
                    found: self.children.len(),
                })
            }
            _ => {}
        }
        self.children.iter().try_for_each(|c| c.check_ranks(alphabet))
    }

    pub fn is_ground(&self) -> bool {
        matches!(self.label, Label::Symbol(_)) && self.children.iter().all(Tree::is_ground)
    }
}

/// A path of 1-based child indices; the empty path is the root.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Position(pub Vec<u32>);

impl Position {
    pub fn root() -> Self {
        Position(Vec::new())
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, i: u32) -> Position {
        let mut p = self.0.clone();
        p.push(i);
        Position(p)
    }

    pub fn concat(&self, other: &Position) -> Position {
        let mut p = self.0.clone();
        p.extend_from_slice(&other.0);
        Position(p)
    }

    pub fn is_prefix_of(&self, other: &Position) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn strip_prefix(&self, prefix: &Position) -> Option<Position> {
        self.0.strip_prefix(prefix.0.as_slice()).map(|s| Position(s.to_vec()))
    }

    /// Parses `e` or dot-separated positive integers such as `1.2.1`.
    pub fn parse(s: &str) -> Option<Position> {
        let s = s.trim();
        if s == "e" || s == "ε" {
            return Some(Position::root());
        }
        s.split('.')
            .map(|part| part.parse::<u32>().ok().filter(|&i| i > 0))
            .collect::<Option<Vec<_>>>()
            .map(Position)
    }

    /// The derivation order: lexicographic, except that a proper prefix is
    /// larger than its extensions, so the root is the maximum.
    pub fn leftmost_cmp(&self, other: &Position) -> Ordering {
        for (a, b) in self.0.iter().zip(&other.0) {
            match a.cmp(b) {
                Ordering::Equal => {}
                o => return o,
            }
        }
        other.0.len().cmp(&self.0.len())
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("e");
        }
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{x}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Shorthand for building positions in code: `pos(&[1, 2])`.
pub fn pos(path: &[u32]) -> Position {
    Position(path.to_vec())
}

/// A finite set of position pairs.
pub type ConstraintSet = BTreeSet<(Position, Position)>;

/// Orders a pair so that the smaller position comes first; satisfaction
/// is symmetric so this does not change meaning.
pub fn normalize_pair(a: Position, b: Position) -> (Position, Position) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// A ground tree flattened into post-order with hash-consed node classes:
/// two nodes have the same `class` iff their subtrees are equal.
#[derive(Debug, Clone)]
pub struct IndexedTree {
    nodes: Vec<IndexedNode>,
}

#[derive(Debug, Clone)]
struct IndexedNode {
    label: Label,
    children: Vec<usize>,
    class: usize,
}

impl IndexedTree {
    pub fn new(t: &Tree) -> Self {
        let mut nodes = Vec::with_capacity(t.size());
        let mut classes = HashMap::new();
        Self::build(t, &mut nodes, &mut classes);
        IndexedTree { nodes }
    }

    fn build(
        t: &Tree,
        nodes: &mut Vec<IndexedNode>,
        classes: &mut HashMap<(Label, Vec<usize>), usize>,
    ) -> usize {
        let children: Vec<usize> = t.children.iter().map(|c| Self::build(c, nodes, classes)).collect();
        let key = (t.label.clone(), children.iter().map(|&c| nodes[c].class).collect());
        let next = classes.len();
        let class = *classes.entry(key).or_insert(next);
        nodes.push(IndexedNode {
            label: t.label.clone(),
            children,
            class,
        });
        nodes.len() - 1
    }

    pub fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn label(&self, n: usize) -> &Label {
        &self.nodes[n].label
    }

    pub fn children(&self, n: usize) -> &[usize] {
        &self.nodes[n].children
    }

    pub fn class(&self, n: usize) -> usize {
        self.nodes[n].class
    }

    pub fn node_at(&self, n: usize, w: &Position) -> Option<usize> {
        let mut cur = n;
        for &i in &w.0 {
            cur = *self.nodes[cur].children.get((i as usize).checked_sub(1)?)?;
        }
        Some(cur)
    }

    pub fn satisfies(&self, n: usize, c: &(Position, Position)) -> bool {
        match (self.node_at(n, &c.0), self.node_at(n, &c.1)) {
            (Some(a), Some(b)) => self.nodes[a].class == self.nodes[b].class,
            _ => false,
        }
    }

    /// Matches a context (variables at the leaves, symbols elsewhere) at
    /// node `n`; on success pushes the node bound to each variable in
    /// variable order into `out`.
    pub fn match_context(&self, n: usize, ctx: &Tree, out: &mut Vec<usize>) -> bool {
        let start = out.len();
        let mut bound: Vec<(usize, usize)> = Vec::new();
        if !self.match_rec(n, ctx, &mut bound) {
            return false;
        }
        bound.sort_unstable();
        out.truncate(start);
        out.extend(bound.into_iter().map(|(_, node)| node));
        true
    }

    fn match_rec(&self, n: usize, ctx: &Tree, bound: &mut Vec<(usize, usize)>) -> bool {
        match &ctx.label {
            Label::Var(i) => {
                bound.push((*i, n));
                true
            }
            label => {
                let node = &self.nodes[n];
                node.label == *label
                    && node.children.len() == ctx.children.len()
                    && node
                        .children
                        .iter()
                        .zip(&ctx.children)
                        .all(|(&c, sub)| self.match_rec(c, sub, bound))
            }
        }
    }

    pub fn to_tree(&self, n: usize) -> Tree {
        let node = &self.nodes[n];
        Tree::new(
            node.label.clone(),
            node.children.iter().map(|&c| self.to_tree(c)).collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn a() -> Tree {
        Tree::leaf("alpha")
    }
    fn b() -> Tree {
        Tree::leaf("beta")
    }
    fn g(t: Tree) -> Tree {
        Tree::node("gamma", vec![t])
    }
    fn s(l: Tree, r: Tree) -> Tree {
        Tree::node("sigma", vec![l, r])
    }

    #[test]
    fn positions_examples() {
        assert_eq!(a().positions(), vec![Position::root()]);
        let t = s(g(a()), a());
        assert_eq!(t.positions(), vec![pos(&[]), pos(&[1]), pos(&[1, 1]), pos(&[2])]);
        assert_eq!(s(g(g(a())), g(a())).positions().len(), 6);
    }

    #[test]
    fn subtree_examples() {
        let t = s(g(a()), b());
        assert_eq!(t.subtree(&Position::root()).unwrap(), &t);
        assert_eq!(t.subtree(&pos(&[1, 1])).unwrap(), &a());
        assert!(matches!(t.subtree(&pos(&[3])), Err(TreeError::InvalidPosition { .. })));
        assert!(t.subtree(&pos(&[2, 1])).is_err());
    }

    #[test]
    fn replace_examples() {
        let t = s(a(), a());
        assert_eq!(t.replace(g(a()), &Position::root()).unwrap(), g(a()));
        assert_eq!(t.replace(g(a()), &pos(&[2])).unwrap(), s(a(), g(a())));
        assert!(t.replace(g(a()), &pos(&[3])).is_err());
    }

    #[test]
    fn substitute_examples() {
        let theta: HashMap<_, _> = [(1, a())].into();
        assert_eq!(Tree::var(1).substitute(&theta), a());
        let theta: HashMap<_, _> = [(1, g(a()))].into();
        assert_eq!(
            s(Tree::var(1), Tree::var(1)).substitute(&theta),
            s(g(a()), g(a()))
        );
        let theta: HashMap<_, _> = [(1, a())].into();
        assert_eq!(
            s(Tree::var(1), Tree::var(2)).substitute(&theta),
            s(a(), Tree::var(2))
        );
    }

    #[test]
    fn yield_examples() {
        assert_eq!(Tree::var(1).yield_of(), vec![Label::Var(1)]);
        let c = s(Tree::var(1), g(Tree::var(2)));
        assert_eq!(c.yield_of(), vec![Label::Var(1), Label::Var(2)]);
        assert!(c.is_ordered_context(2));
        let swapped = s(Tree::var(2), Tree::var(1));
        assert_eq!(swapped.yield_of(), vec![Label::Var(2), Label::Var(1)]);
        assert!(!swapped.is_ordered_context(2));
    }

    #[test]
    fn height_and_size_examples() {
        assert_eq!(a().height_and_size(), (0, 1));
        assert_eq!(s(g(g(a())), g(a())).height_and_size(), (3, 6));
        for n in 0..6 {
            assert_eq!(Tree::chain("gamma", n, a()).height_and_size(), (n, n + 1));
        }
    }

    #[test]
    fn satisfaction_examples() {
        assert!(s(g(a()), g(a())).satisfies(&(pos(&[1]), pos(&[2]))));
        assert!(s(g(g(a())), g(a())).satisfies(&(pos(&[1, 1]), pos(&[2]))));
        assert!(!a().satisfies(&(pos(&[1]), pos(&[1]))));

        let any = s(a(), b());
        let empty = ConstraintSet::new();
        assert!(any.satisfies_all(&empty) && any.dissatisfies_all(&empty));

        let c: ConstraintSet = [(pos(&[1]), pos(&[2]))].into();
        assert!(s(a(), b()).dissatisfies_all(&c));

        let c: ConstraintSet = [(pos(&[1]), pos(&[2])), (pos(&[1]), pos(&[3]))].into();
        let t = s(a(), a());
        assert!(!t.satisfies_all(&c));
        assert!(!t.dissatisfies_all(&c));
    }

    #[test]
    fn leftmost_order() {
        let order = [
            pos(&[1, 1, 1]),
            pos(&[1, 1]),
            pos(&[1, 2]),
            pos(&[1]),
            pos(&[2, 1]),
            pos(&[2]),
            Position::root(),
        ];
        for w in order.windows(2) {
            assert_eq!(w[0].leftmost_cmp(&w[1]), Ordering::Less, "{} < {}", w[0], w[1]);
            assert_eq!(w[1].leftmost_cmp(&w[0]), Ordering::Greater);
        }
    }

    #[test]
    fn position_syntax() {
        assert_eq!(Position::parse("e"), Some(Position::root()));
        assert_eq!(Position::parse("1.12.3"), Some(pos(&[1, 12, 3])));
        assert_eq!(Position::parse("0"), None);
        assert_eq!(pos(&[2, 1]).to_string(), "2.1");
        assert_eq!(Position::root().to_string(), "e");
    }

    #[test]
    fn name_quoting() {
        assert_eq!(Name::new("sigma#p3").to_string(), "sigma#p3");
        assert_eq!(Name::new("<q,z>").to_string(), "\"<q,z>\"");
        assert_eq!(Name::new("a\"b").to_string(), "\"a\\\"b\"");
    }

    #[test]
    fn indexed_tree_matches_structure() {
        let t = s(g(a()), s(g(a()), b()));
        let ix = IndexedTree::new(&t);
        let r = ix.root();
        assert!(ix.satisfies(r, &(pos(&[1]), pos(&[2, 1]))));
        assert!(!ix.satisfies(r, &(pos(&[1]), pos(&[2]))));
        assert!(!ix.satisfies(r, &(pos(&[3]), pos(&[3]))));
        let ctx = s(Tree::var(1), s(g(Tree::var(2)), Tree::var(3)));
        let mut out = Vec::new();
        assert!(ix.match_context(r, &ctx, &mut out));
        let bound: Vec<Tree> = out.iter().map(|&n| ix.to_tree(n)).collect();
        assert_eq!(bound, vec![g(a()), a(), b()]);
        assert!(!ix.match_context(r, &g(Tree::var(1)), &mut out));
        assert_eq!(ix.to_tree(r), t);
    }

    #[test]
    fn enumeration_counts() {
        let alphabet = RankedAlphabet::from_pairs([("alpha", 0), ("gamma", 1), ("sigma", 2)]);
        let by = alphabet.trees_by_size(7);
        // Motzkin numbers count unary-binary trees by size.
        let counts: Vec<usize> = by.iter().skip(1).map(Vec::len).collect();
        assert_eq!(counts, vec![1, 1, 2, 4, 9, 21, 51]);
        for bucket in &by {
            for t in bucket {
                assert!(t.check_ranks(&alphabet).is_ok());
            }
            let strings: Vec<String> = bucket.iter().map(|t| t.to_string()).collect();
            let mut sorted = strings.clone();
            sorted.sort();
            assert_eq!(strings, sorted);
        }
    }

    fn arb_tree() -> impl Strategy<Value = Tree> {
        let leaf = prop_oneof![Just(a()), Just(b())];
        leaf.prop_recursive(5, 40, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(g),
                (inner.clone(), inner).prop_map(|(l, r)| s(l, r)),
            ]
        })
    }

    proptest! {
        #[test]
        fn positions_closed(t in arb_tree()) {
            let ps: BTreeSet<_> = t.positions().into_iter().collect();
            prop_assert_eq!(ps.len(), t.size());
            for p in &ps {
                if let Some((&last, init)) = p.0.split_last() {
                    prop_assert!(ps.contains(&Position(init.to_vec())));
                    for j in 1..last {
                        let mut q = init.to_vec();
                        q.push(j);
                        prop_assert!(ps.contains(&Position(q)));
                    }
                }
            }
            let kids: usize = t.children().iter().map(Tree::size).sum();
            prop_assert_eq!(t.size(), 1 + kids);
        }

        #[test]
        fn replace_then_subtree(t in arb_tree(), u in arb_tree(), pick in 0usize..64) {
            let ps = t.positions();
            let w = &ps[pick % ps.len()];
            let r = t.replace(u.clone(), w).unwrap();
            prop_assert_eq!(r.subtree(w).unwrap(), &u);
            let back = r.replace(t.subtree(w).unwrap().clone(), w).unwrap();
            prop_assert_eq!(back, t);
        }

        #[test]
        fn reflexive_constraint(t in arb_tree(), path in proptest::collection::vec(1u32..3, 0..4)) {
            let w = Position(path);
            prop_assert_eq!(t.satisfies(&(w.clone(), w.clone())), t.contains_position(&w));
        }

        #[test]
        fn indexed_equality_is_structural(t in arb_tree(), i in 0usize..64, j in 0usize..64) {
            let ps = t.positions();
            let (v, w) = (&ps[i % ps.len()], &ps[j % ps.len()]);
            let ix = IndexedTree::new(&t);
            prop_assert_eq!(ix.satisfies(ix.root(), &(v.clone(), w.clone())), t.satisfies(&(v.clone(), w.clone())));
        }
    }
}
