//! Text formats: terms, grammar files, and their canonical serialization.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::grammar::{Production, Wtgc};
use crate::semiring::{Semiring, Weight};
use crate::trees::{normalize_pair, ConstraintSet, Label, Name, Position, RankedAlphabet, Tree};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{message} at line {line}, column {column}")]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

/// A parsed term before names are resolved to symbols, nonterminals or
/// variables.
#[derive(Debug, Clone)]
pub(crate) struct RawTerm {
    pub name: Name,
    pub quoted: bool,
    pub column: usize,
    pub children: Vec<RawTerm>,
}

pub(crate) struct Cursor<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    _src: &'a str,
}

impl<'a> Cursor<'a> {
    pub fn new(src: &'a str, line: usize) -> Self {
        Cursor {
            chars: src.chars().collect(),
            pos: 0,
            line,
            _src: src,
        }
    }

    pub fn error(&self, message: impl Into<String>) -> SyntaxError {
        self.error_at(self.pos + 1, message)
    }

    pub fn error_at(&self, column: usize, message: impl Into<String>) -> SyntaxError {
        SyntaxError {
            line: self.line,
            column,
            message: message.into(),
        }
    }

    pub fn column(&self) -> usize {
        self.pos + 1
    }

    pub fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    pub fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    pub fn at_end(&mut self) -> bool {
        self.peek().is_none()
    }

    pub fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        let t: Vec<char> = token.chars().collect();
        if self.chars[self.pos..].starts_with(&t) {
            self.pos += t.len();
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, token: &str) -> Result<(), SyntaxError> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{token}`")))
        }
    }

    pub fn expect_end(&mut self) -> Result<(), SyntaxError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.error("unexpected trailing input"))
        }
    }

    /// The rest of the input, trimmed.
    pub fn rest(&mut self) -> String {
        self.skip_ws();
        let s: String = self.chars[self.pos..].iter().collect();
        self.pos = self.chars.len();
        s.trim().to_string()
    }

    /// Reads characters while `pred` holds.
    pub fn take_while(&mut self, pred: impl Fn(char) -> bool) -> String {
        self.skip_ws();
        let start = self.pos;
        while self.chars.get(self.pos).is_some_and(|&c| pred(c)) {
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().collect()
    }

    /// A plain identifier or a double-quoted name; returns whether quoted.
    pub fn name(&mut self) -> Result<(Name, bool), SyntaxError> {
        match self.peek() {
            Some('"') => {
                self.pos += 1;
                let mut s = String::new();
                loop {
                    match self.chars.get(self.pos) {
                        None => return Err(self.error("unterminated quoted name")),
                        Some('"') => {
                            self.pos += 1;
                            break;
                        }
                        Some('\\') => {
                            let c = *self
                                .chars
                                .get(self.pos + 1)
                                .ok_or_else(|| self.error("unterminated escape"))?;
                            s.push(c);
                            self.pos += 2;
                        }
                        Some(&c) => {
                            s.push(c);
                            self.pos += 1;
                        }
                    }
                }
                Ok((Name::from(s), true))
            }
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                let s = self.take_while(|c| c.is_ascii_alphanumeric() || c == '_' || c == '#');
                Ok((Name::from(s), false))
            }
            _ => Err(self.error("expected a name")),
        }
    }

    pub fn term(&mut self) -> Result<RawTerm, SyntaxError> {
        self.skip_ws();
        let column = self.column();
        let (name, quoted) = self.name()?;
        let mut children = Vec::new();
        if self.eat("(") && !self.eat(")") {
            loop {
                children.push(self.term()?);
                if self.eat(")") {
                    break;
                }
                self.expect(",")?;
            }
        }
        Ok(RawTerm {
            name,
            quoted,
            column,
            children,
        })
    }

    pub fn position(&mut self) -> Result<Position, SyntaxError> {
        let column = self.column();
        let s = self.take_while(|c| c.is_ascii_digit() || c == '.' || c == 'e');
        Position::parse(&s).ok_or_else(|| self.error_at(column, format!("invalid position `{s}`")))
    }
}

/// Strips a `#` comment that starts a line or follows whitespace, outside
/// quotes.
pub(crate) fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    let mut escaped = false;
    let mut prev_ws = true;
    for (i, c) in line.char_indices() {
        if quoted {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                quoted = false;
            }
        } else if c == '"' {
            quoted = true;
        } else if c == '#' && prev_ws {
            return &line[..i];
        }
        prev_ws = c.is_whitespace();
    }
    line
}

pub(crate) fn is_var_name(name: &str) -> Option<usize> {
    let digits = name.strip_prefix('x')?;
    if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) || digits.starts_with('0') {
        return None;
    }
    digits.parse().ok()
}

/// Resolves names through `classify`; checks ranks of symbols against
/// `alphabet` when given.
pub(crate) fn resolve(
    raw: &RawTerm,
    cursor: &Cursor<'_>,
    alphabet: Option<&RankedAlphabet>,
    classify: &impl Fn(&RawTerm) -> Result<Label, String>,
) -> Result<Tree, SyntaxError> {
    let label = classify(raw).map_err(|m| cursor.error_at(raw.column, m))?;
    match &label {
        Label::Symbol(s) => {
            if let Some(a) = alphabet {
                match a.rank(s) {
                    None => return Err(cursor.error_at(raw.column, format!("unknown symbol `{s}`"))),
                    Some(r) if r != raw.children.len() => {
                        return Err(cursor.error_at(
                            raw.column,
                            format!("arity mismatch: `{s}` has rank {r} but {} children", raw.children.len()),
                        ))
                    }
                    _ => {}
                }
            }
        }
        Label::Nonterminal(q) if !raw.children.is_empty() => {
            return Err(cursor.error_at(raw.column, format!("arity mismatch: nonterminal `{q}` has children")))
        }
        Label::Var(i) if !raw.children.is_empty() => {
            return Err(cursor.error_at(raw.column, format!("arity mismatch: variable x{i} has children")))
        }
        _ => {}
    }
    let children = raw
        .children
        .iter()
        .map(|c| resolve(c, cursor, alphabet, classify))
        .collect::<Result<_, _>>()?;
    Ok(Tree::new(label, children))
}

/// Parses a ground term such as `sigma(gamma(alpha), alpha)`.
pub fn parse_tree(text: &str) -> Result<Tree, SyntaxError> {
    parse_tree_impl(text, None)
}

/// Parses a ground term and checks it against `alphabet`.
pub fn parse_tree_over(text: &str, alphabet: &RankedAlphabet) -> Result<Tree, SyntaxError> {
    parse_tree_impl(text, Some(alphabet))
}

fn parse_tree_impl(text: &str, alphabet: Option<&RankedAlphabet>) -> Result<Tree, SyntaxError> {
    let mut c = Cursor::new(text, 1);
    let raw = c.term()?;
    c.expect_end()?;
    resolve(&raw, &c, alphabet, &|r| Ok(Label::Symbol(r.name.clone())))
}

pub(crate) fn parse_alphabet_entries(c: &mut Cursor<'_>, into: &mut RankedAlphabet) -> Result<(), SyntaxError> {
    while !c.at_end() {
        let column = c.column();
        let (name, _) = c.name()?;
        c.expect(":")?;
        let digits = c.take_while(|ch| ch.is_ascii_digit());
        let rank: usize = digits
            .parse()
            .map_err(|_| c.error(format!("expected a rank for `{name}`")))?;
        if let Some(old) = into.insert(name.clone(), rank) {
            if old != rank {
                return Err(c.error_at(column, format!("symbol `{name}` declared with ranks {old} and {rank}")));
            }
        }
    }
    Ok(())
}

/// Parses the line-oriented grammar format.
pub fn parse_grammar(text: &str) -> Result<Wtgc, SyntaxError> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, strip_comment(l).trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();

    let mut semiring: Option<Semiring> = None;
    let mut alphabet = RankedAlphabet::new();
    let mut nonterminals: BTreeSet<Name> = BTreeSet::new();
    let keyword = |l: &str| l.split_whitespace().next().unwrap_or("").to_string();

    for &(n, line) in &lines {
        let kw = keyword(line);
        let mut c = Cursor::new(line, n);
        c.eat(&kw);
        match kw.as_str() {
            "semiring" => {
                let rest = c.rest();
                if semiring.is_some() {
                    return Err(c.error_at(1, "semiring declared twice"));
                }
                semiring = Some(Semiring::parse(&rest).map_err(|e| c.error_at(kw.len() + 2, e.to_string()))?);
            }
            "alphabet" => parse_alphabet_entries(&mut c, &mut alphabet)?,
            "nonterminals" => {
                while !c.at_end() {
                    nonterminals.insert(c.name()?.0);
                }
            }
            "final" | "prod" => {}
            other => return Err(c.error_at(1, format!("unknown directive `{other}`"))),
        }
    }
    let semiring = semiring.ok_or(SyntaxError {
        line: 1,
        column: 1,
        message: "missing `semiring` declaration".into(),
    })?;
    for (s, _) in alphabet.iter() {
        if nonterminals.contains(s) {
            return Err(SyntaxError {
                line: 1,
                column: 1,
                message: format!("`{s}` is both a symbol and a nonterminal"),
            });
        }
    }

    let mut finals: BTreeMap<Name, Weight> = BTreeMap::new();
    let mut productions: Vec<Production> = Vec::new();
    let mut seen: BTreeMap<_, usize> = BTreeMap::new();
    for &(n, line) in &lines {
        let kw = keyword(line);
        let mut c = Cursor::new(line, n);
        c.eat(&kw);
        match kw.as_str() {
            "final" => {
                let column = c.column();
                let (q, _) = c.name()?;
                if !nonterminals.contains(&q) {
                    return Err(c.error_at(column, format!("undeclared nonterminal `{q}`")));
                }
                c.expect("=")?;
                let wc = c.column();
                let w = semiring
                    .parse_weight(&c.rest())
                    .map_err(|e| c.error_at(wc, e.to_string()))?;
                if finals.insert(q.clone(), w).is_some() {
                    return Err(c.error_at(column, format!("final weight of `{q}` given twice")));
                }
            }
            "prod" => {
                let p = parse_production(&mut c, semiring, &alphabet, &nonterminals)?;
                if let Some(prev) = seen.insert(p.key(), n) {
                    return Err(c.error_at(1, format!("duplicate production (first at line {prev})")));
                }
                productions.push(p);
            }
            _ => {}
        }
    }
    Ok(Wtgc::from_parts(semiring, alphabet, nonterminals, finals, productions))
}

fn parse_production(
    c: &mut Cursor<'_>,
    semiring: Semiring,
    alphabet: &RankedAlphabet,
    nonterminals: &BTreeSet<Name>,
) -> Result<Production, SyntaxError> {
    let raw = c.term()?;
    let lhs = resolve(&raw, c, Some(alphabet), &|r| {
        if nonterminals.contains(&r.name) {
            Ok(Label::Nonterminal(r.name.clone()))
        } else if alphabet.contains(&r.name) {
            Ok(Label::Symbol(r.name.clone()))
        } else {
            Err(format!("unknown name `{}`", r.name))
        }
    })?;
    if matches!(lhs.label(), Label::Nonterminal(_)) {
        return Err(c.error_at(raw.column, "lhs is a bare nonterminal"));
    }
    c.expect("->")?;
    let tc = c.column();
    let (target, _) = c.name()?;
    if !nonterminals.contains(&target) {
        return Err(c.error_at(tc, format!("undeclared nonterminal `{target}`")));
    }
    let mut eq = ConstraintSet::new();
    let mut ineq = ConstraintSet::new();
    while c.eat("[") {
        let set = if c.eat("eq") {
            &mut eq
        } else if c.eat("ne") {
            &mut ineq
        } else {
            return Err(c.error("expected `eq` or `ne`"));
        };
        if !c.eat("]") {
            loop {
                let a = c.position()?;
                c.expect("=")?;
                let b = c.position()?;
                set.insert(normalize_pair(a, b));
                if c.eat("]") {
                    break;
                }
                c.expect(",")?;
            }
        }
    }
    let weight = if c.eat("@") {
        let wc = c.column();
        let w = semiring
            .parse_weight(&c.rest())
            .map_err(|e| c.error_at(wc, e.to_string()))?;
        if semiring.is_zero(&w) {
            return Err(c.error_at(wc, "zero-weight production"));
        }
        w
    } else {
        c.expect_end()?;
        semiring.one()
    };
    Ok(Production {
        lhs,
        target,
        eq,
        ineq,
        weight,
    })
}

impl fmt::Display for Wtgc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "semiring {}", self.semiring())?;
        f.write_str("alphabet")?;
        for (s, r) in self.alphabet().iter() {
            write!(f, " {s}:{r}")?;
        }
        f.write_str("\nnonterminals")?;
        for q in self.nonterminals() {
            write!(f, " {q}")?;
        }
        f.write_str("\n")?;
        for (q, w) in self.finals() {
            writeln!(f, "final {q} = {w}")?;
        }
        for p in self.productions() {
            writeln!(f, "prod {p}")?;
        }
        Ok(())
    }
}

/// Canonical text form; `parse_grammar` inverts it exactly.
pub fn serialize_grammar(g: &Wtgc) -> String {
    g.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trees::pos;

    const FX1: &str = "semiring arctic
alphabet alpha:0 gamma:1 sigma:2
nonterminals q qf
final qf = 0                      # omitted nonterminals get the semiring zero
prod alpha -> q @ 0
prod gamma(q) -> q @ 1
prod sigma(gamma(q), q) -> qf [eq 1.1=2] @ 1
";

    #[test]
    fn parses_example_grammar() {
        let g = parse_grammar(FX1).unwrap();
        assert_eq!(g.productions().len(), 3);
        assert!(g.validate().is_empty());
        let p = g.productions().iter().find(|p| p.target.as_str() == "qf").unwrap();
        assert_eq!(p.eq, [(pos(&[1, 1]), pos(&[2]))].into());
        let c = g.classify();
        assert!(c.positive && c.classic && !c.normalized);
    }

    #[test]
    fn round_trip_is_identity() {
        let g = parse_grammar(FX1).unwrap();
        let text = serialize_grammar(&g);
        let g2 = parse_grammar(&text).unwrap();
        assert_eq!(g, g2);
        assert_eq!(serialize_grammar(&g2), text);
    }

    #[test]
    fn arity_errors_carry_line() {
        let bad = "semiring nat\nalphabet a:0 sigma:2\nnonterminals q\nprod sigma(q) -> q @ 1\n";
        let e = parse_grammar(bad).unwrap_err();
        assert!(e.to_string().starts_with("arity mismatch"), "{e}");
        assert!(e.to_string().contains("at line 4"), "{e}");
    }

    #[test]
    fn rejects_bare_and_zero() {
        let base = "semiring nat\nalphabet a:0\nnonterminals q r\n";
        let e = parse_grammar(&format!("{base}prod r -> q @ 1\n")).unwrap_err();
        assert!(e.message.contains("bare nonterminal"));
        let e = parse_grammar(&format!("{base}prod a -> q @ 0\n")).unwrap_err();
        assert!(e.message.contains("zero-weight"));
    }

    #[test]
    fn tree_syntax() {
        let t = parse_tree(" sigma( gamma(alpha) ,alpha ) ").unwrap();
        assert_eq!(t.to_string(), "sigma(gamma(alpha), alpha)");
        let a = RankedAlphabet::from_pairs([("alpha", 0), ("sigma", 2)]);
        assert!(parse_tree_over("sigma(alpha)", &a).is_err());
        assert!(parse_tree("sigma(alpha").is_err());
        let q = parse_tree("\"<q,z>\"(a)").unwrap();
        assert_eq!(q.to_string(), "\"<q,z>\"(a)");
    }

    #[test]
    fn comments_respect_names() {
        assert_eq!(strip_comment("prod gamma#p1(q) -> q # note"), "prod gamma#p1(q) -> q ");
        assert_eq!(strip_comment("# all"), "");
        assert_eq!(strip_comment("final \"a #b\" = 1"), "final \"a #b\" = 1");
    }
}
