//! `wtgc`: command-line front end for the wtgc library.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use wtgc::decision::{explain_empty, explain_finite};
use wtgc::oracle::{check_equivalent, find_disagreement, run_battery};
use wtgc::pumping::ensure_nonbot_child;
use wtgc::semantics::{check_unambiguous_upto, derivations};
use wtgc::transforms::{
    boolean_finals, complement_support, constraint_determine, disambiguate, disjoint_union, eliminate_zero_derivations,
    hadamard, normalize, relabel, restrict_support, support_automaton, support_grammar, DisambiguateOptions,
    Relabeling,
};
use wtgc::{
    image_grammar, image_weight_oracle, parse_grammar, parse_hom, parse_tree_over, pump, separation_family,
    serialize_grammar, support_hom, Evaluator, Name, RankedAlphabet, Semiring, SemiringHom, Tree, TreeHom, Weight,
    Wtgc,
};

/// Largest `--oracle-size` accepted; brute force beyond it is impractical.
const ORACLE_CAP: usize = 12;

#[derive(Parser)]
#[command(name = "wtgc", version, about = "Weighted tree grammars with subtree constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format for scalar results.
    #[arg(long, value_enum, global = true, default_value = "text")]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Weight of a tree.
    Eval {
        #[arg(long)]
        grammar: PathBuf,
        #[arg(long)]
        tree: String,
    },
    /// Complete left-most derivations of a tree, one per line.
    Derivs {
        #[arg(long)]
        grammar: PathBuf,
        #[arg(long)]
        tree: String,
        /// Target nonterminal; defaults to every final one.
        #[arg(long)]
        state: Option<String>,
    },
    /// Applies a single-grammar construction.
    Transform {
        name: TransformName,
        /// Symbol map `from=to` for `relabel`.
        maps: Vec<String>,
        #[arg(long)]
        grammar: PathBuf,
        /// File of `from=to` lines for `relabel`.
        #[arg(long)]
        map_file: Option<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
    /// Pointwise product of two grammars.
    Product {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Pointwise sum of two grammars.
    Union {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Grammar for the image of a tree automaton under a homomorphism.
    Image {
        #[arg(long)]
        grammar: PathBuf,
        #[arg(long)]
        hom: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Weight of a tree in the image language.
    ImageEval {
        #[arg(long)]
        grammar: PathBuf,
        #[arg(long)]
        hom: PathBuf,
        #[arg(long)]
        tree: String,
    },
    /// Unambiguous Boolean automaton for the support.
    Support {
        #[arg(long)]
        grammar: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Unambiguous Boolean automaton for the complement of the support.
    Complement {
        #[arg(long)]
        grammar: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Restricts a grammar to the support of another.
    Restrict {
        #[arg(long)]
        grammar: PathBuf,
        #[arg(long)]
        by: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Unambiguous grammar for the Boolean image of the weights.
    Disambiguate {
        #[arg(long)]
        grammar: PathBuf,
        /// Drop constraint splits without a witness tree of this size.
        #[arg(long)]
        prune_unsat: Option<usize>,
        #[arg(long, default_value_t = 1_000_000)]
        max_states: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Pumps a derivation of a tall tree.
    Pump {
        #[arg(long)]
        grammar: PathBuf,
        #[arg(long)]
        tree: String,
        #[arg(long, default_value_t = 3)]
        count: usize,
        /// Nonterminal to derive to; defaults to the first final one with a derivation.
        #[arg(long)]
        state: Option<String>,
    },
    /// Prints the n-th pair of the separating tree family.
    Separation {
        #[arg(long)]
        n: usize,
    },
    /// Decides emptiness or finiteness of the support.
    Decide {
        property: Property,
        #[arg(long)]
        grammar: PathBuf,
        #[arg(long)]
        explain: bool,
    },
    /// Runs the cross-construction checks on the shipped fixtures.
    Oracle {
        #[arg(long, default_value_t = 6)]
        oracle_size: usize,
    },
}

#[derive(Args)]
struct Output {
    /// Grammar output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Compare the result against brute force on all trees up to this size.
    #[arg(long)]
    oracle_size: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TransformName {
    Normalize,
    BooleanFinals,
    ConstraintDetermine,
    EliminateZero,
    SupportGrammar,
    NonbotChild,
    Relabel,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Property {
    Empty,
    Finite,
}

/// Brute-force comparison outcome; `Err` carries the mismatch.
type Check = std::result::Result<String, String>;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_grammar(path: &Path) -> Result<Wtgc> {
    parse_grammar(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn load_hom(path: &Path) -> Result<TreeHom> {
    parse_hom(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn load_tree(text: &str, alphabet: &RankedAlphabet) -> Result<Tree> {
    parse_tree_over(text, alphabet).context("in --tree")
}

fn oracle_size(size: Option<usize>) -> Result<Option<usize>> {
    match size {
        Some(n) if n > ORACLE_CAP => bail!("--oracle-size {n} exceeds the cap of {ORACLE_CAP}"),
        other => Ok(other),
    }
}

fn pointwise(out: &Wtgc, size: usize, expected: impl Fn(&Tree) -> Weight) -> Check {
    match find_disagreement(out, size, expected) {
        None => Ok(format!("agree on all trees up to size {size}")),
        Some((t, got, want)) => Err(format!("{t}: got {got}, expected {want}")),
    }
}

fn equivalent(input: &Wtgc, out: &Wtgc, size: usize) -> Check {
    match check_equivalent(input, out, size) {
        None => Ok(format!("agree on all trees up to size {size}")),
        Some(t) => Err(format!("differ on {t}")),
    }
}

fn support_check(input: &Wtgc, out: &Wtgc, size: usize, inside: bool) -> Check {
    let s = input.semiring();
    let ev = Evaluator::new(input);
    pointwise(out, size, |t| Weight::Bool(s.is_zero(&ev.evaluate(t)) != inside))
}

/// Writes the grammar and, if requested, the oracle verdict. Returns
/// whether the oracle passed.
fn emit(g: &Wtgc, out: &Output, oracle: impl FnOnce(usize) -> Check) -> Result<bool> {
    let size = oracle_size(out.oracle_size)?;
    let text = serialize_grammar(g);
    match &out.out {
        Some(path) => fs::write(path, &text).with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{text}"),
    }
    let Some(size) = size else { return Ok(true) };
    match oracle(size) {
        Ok(msg) => {
            eprintln!("oracle: {msg}");
            Ok(true)
        }
        Err(msg) => {
            eprintln!("oracle mismatch: {msg}");
            Ok(false)
        }
    }
}

fn print_weight(w: &Weight, format: Format) {
    match format {
        Format::Text => println!("{w}"),
        Format::Json => println!("{}", json!({ "weight": w.to_string() })),
    }
}

fn parse_maps(pairs: &[String], file: Option<&Path>) -> Result<BTreeMap<Name, Name>> {
    let mut lines: Vec<String> = pairs.to_vec();
    if let Some(path) = file {
        lines.extend(
            read(path)?
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(String::from),
        );
    }
    let mut map = BTreeMap::new();
    for entry in lines {
        let (from, to) = entry
            .split_once('=')
            .ok_or_else(|| anyhow!("relabeling entry `{entry}` is not of the form from=to"))?;
        let (from, to) = (Name::new(from.trim()), Name::new(to.trim()));
        if let Some(old) = map.insert(from.clone(), to.clone()) {
            if old != to {
                bail!("symbol `{from}` is mapped twice");
            }
        }
    }
    Ok(map)
}

/// The relabeling with the target alphabet read off the source ranks.
fn relabeling(g: &Wtgc, map: BTreeMap<Name, Name>) -> Result<Relabeling> {
    let mut target = RankedAlphabet::new();
    for (from, to) in &map {
        let rank = g
            .alphabet()
            .rank(from)
            .ok_or_else(|| anyhow!("`{from}` is not in the grammar's alphabet"))?;
        if let Some(other) = target.insert(to.clone(), rank) {
            if other != rank {
                bail!("`{to}` receives symbols of ranks {other} and {rank}");
            }
        }
    }
    Ok(Relabeling { map, target })
}

fn relabel_hom(g: &Wtgc, pi: &Relabeling) -> Result<TreeHom> {
    let rules = g.alphabet().iter().map(|(sym, rank)| {
        let image = pi.apply(sym).cloned().unwrap_or_else(|| sym.clone());
        (sym.clone(), Tree::node(&image, (1..=rank).map(Tree::var).collect()))
    });
    Ok(TreeHom::new(g.alphabet().clone(), pi.target.clone(), rules)?)
}

fn image_check(out: &Wtgc, hom: &TreeHom, source: &Wtgc, size: usize) -> Check {
    let failure = RefCell::new(None);
    let r = pointwise(out, size, |u| match image_weight_oracle(hom, source, u) {
        Ok(w) => w,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e.to_string());
            out.semiring().zero()
        }
    });
    match failure.into_inner() {
        Some(e) => Err(e),
        None => r,
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let format = cli.format;
    let passed = match cli.command {
        Command::Eval { grammar, tree } => {
            let g = load_grammar(&grammar)?;
            let t = load_tree(&tree, g.alphabet())?;
            print_weight(&Evaluator::new(&g).evaluate(&t), format);
            true
        }
        Command::Derivs { grammar, tree, state } => {
            let g = load_grammar(&grammar)?;
            let t = load_tree(&tree, g.alphabet())?;
            let states: Vec<Name> = match state {
                Some(q) if g.is_nonterminal(&q) => vec![Name::new(&q)],
                Some(q) => bail!("`{q}` is not a nonterminal"),
                None => g.finals().map(|(q, _)| q.clone()).collect(),
            };
            let lines: Vec<String> = states
                .iter()
                .flat_map(|q| derivations(&g, &t, q))
                .map(|d| d.to_string())
                .collect();
            match format {
                Format::Text => lines.iter().for_each(|l| println!("{l}")),
                Format::Json => println!("{}", json!({ "derivations": lines })),
            }
            true
        }
        Command::Transform {
            name,
            maps,
            grammar,
            map_file,
            out,
        } => {
            let g = load_grammar(&grammar)?;
            if name != TransformName::Relabel && (!maps.is_empty() || map_file.is_some()) {
                bail!("symbol maps are only accepted by `relabel`");
            }
            match name {
                TransformName::Normalize => emit(&normalize(&g), &out, |n| equivalent(&g, &normalize(&g), n))?,
                TransformName::BooleanFinals => {
                    let r = boolean_finals(&g);
                    emit(&r, &out, |n| equivalent(&g, &r, n))?
                }
                TransformName::ConstraintDetermine => {
                    let r = constraint_determine(&g)?;
                    emit(&r, &out, |n| equivalent(&g, &r, n))?
                }
                TransformName::EliminateZero => {
                    let r = eliminate_zero_derivations(&g)?;
                    emit(&r, &out, |n| equivalent(&g, &r, n))?
                }
                TransformName::SupportGrammar => {
                    let r = support_grammar(&g)?;
                    emit(&r, &out, |n| support_check(&g, &r, n, true))?
                }
                TransformName::NonbotChild => {
                    let r = ensure_nonbot_child(&g)?;
                    emit(&r, &out, |n| equivalent(&g, &r, n))?
                }
                TransformName::Relabel => {
                    let pi = relabeling(&g, parse_maps(&maps, map_file.as_deref())?)?;
                    let r = relabel(&g, &pi)?;
                    emit(&r, &out, |n| {
                        let hom = relabel_hom(&g, &pi).map_err(|e| e.to_string())?;
                        image_check(&r, &hom, &g, n)
                    })?
                }
            }
        }
        Command::Product { left, right, out } => {
            let (g, h) = (load_grammar(&left)?, load_grammar(&right)?);
            let r = hadamard(&g, &h)?;
            emit(&r, &out, |n| {
                let s = g.semiring();
                let (eg, eh) = (Evaluator::new(&g), Evaluator::new(&h));
                pointwise(&r, n, |t| s.times(&eg.evaluate(t), &eh.evaluate(t)))
            })?
        }
        Command::Union { left, right, out } => {
            let (g, h) = (load_grammar(&left)?, load_grammar(&right)?);
            let r = disjoint_union(&g, &h)?;
            emit(&r, &out, |n| {
                let s = g.semiring();
                let (eg, eh) = (Evaluator::new(&g), Evaluator::new(&h));
                pointwise(&r, n, |t| s.plus(&eg.evaluate(t), &eh.evaluate(t)))
            })?
        }
        Command::Image { grammar, hom, out } => {
            let (g, h) = (load_grammar(&grammar)?, load_hom(&hom)?);
            let r = image_grammar(&g, &h)?;
            emit(&r, &out, |n| image_check(&r, &h, &g, n))?
        }
        Command::ImageEval { grammar, hom, tree } => {
            let (g, h) = (load_grammar(&grammar)?, load_hom(&hom)?);
            let r = image_grammar(&g, &h)?;
            let t = load_tree(&tree, h.target())?;
            print_weight(&Evaluator::new(&r).evaluate(&t), format);
            true
        }
        Command::Support { grammar, out } => {
            let g = load_grammar(&grammar)?;
            let r = support_automaton(&g)?;
            emit(&r, &out, |n| {
                support_check(&g, &r, n, true).and_then(|m| unambiguous(&r, n).map(|u| format!("{u}; {m}")))
            })?
        }
        Command::Complement { grammar, out } => {
            let g = load_grammar(&grammar)?;
            let r = complement_support(&g)?;
            emit(&r, &out, |n| {
                support_check(&g, &r, n, false).and_then(|m| unambiguous(&r, n).map(|u| format!("{u}; {m}")))
            })?
        }
        Command::Restrict { grammar, by, out } => {
            let (g, h) = (load_grammar(&grammar)?, load_grammar(&by)?);
            let r = restrict_support(&g, &h)?;
            emit(&r, &out, |n| {
                let s = g.semiring();
                let (eg, eh) = (Evaluator::new(&g), Evaluator::new(&h));
                let hs = h.semiring();
                pointwise(&r, n, |t| if hs.is_zero(&eh.evaluate(t)) { s.zero() } else { eg.evaluate(t) })
            })?
        }
        Command::Disambiguate {
            grammar,
            prune_unsat,
            max_states,
            out,
        } => {
            let g = load_grammar(&grammar)?;
            let hom = boolean_hom(g.semiring())?;
            let opts = DisambiguateOptions {
                prune_unsat,
                max_states,
            };
            let r = disambiguate(&g, &hom, opts)?;
            emit(&r, &out, |n| {
                let ev = Evaluator::new(&g);
                pointwise(&r, n, |t| hom.apply(&ev.evaluate(t)))
                    .and_then(|m| unambiguous(&r, n).map(|u| format!("{u}; {m}")))
            })?
        }
        Command::Pump {
            grammar,
            tree,
            count,
            state,
        } => {
            let g = ensure_nonbot_child(&load_grammar(&grammar)?)?;
            let t = load_tree(&tree, g.alphabet())?;
            let candidates: Vec<Name> = match state {
                Some(q) => vec![Name::new(&q)],
                None => g.finals().map(|(q, _)| q.clone()).collect(),
            };
            let d = candidates
                .iter()
                .find_map(|q| derivations(&g, &t, q).into_iter().next())
                .ok_or_else(|| anyhow!("no derivation of the tree to the requested nonterminal"))?;
            let pumped = pump(&g, &t, &d, count)?;
            let lines: Vec<String> = pumped.iter().map(|(t, _)| t.to_string()).collect();
            match format {
                Format::Text => lines.iter().for_each(|l| println!("{l}")),
                Format::Json => println!("{}", json!({ "trees": lines })),
            }
            true
        }
        Command::Separation { n } => {
            if n == 0 {
                bail!("the family starts at n = 1");
            }
            let (t, tb) = separation_family(n);
            match format {
                Format::Text => println!("{t}\n{tb}"),
                Format::Json => println!("{}", json!({ "t": t.to_string(), "t_bar": tb.to_string() })),
            }
            true
        }
        Command::Decide {
            property,
            grammar,
            explain,
        } => {
            let g = load_grammar(&grammar)?;
            let (verdict, yes, no) = match property {
                Property::Empty => (explain_empty(&g)?, "support is empty", "support is not empty"),
                Property::Finite => (explain_finite(&g)?, "support is finite", "support is infinite"),
            };
            let scope = if image_shaped(&g) { "image" } else { "extension" };
            let text = if verdict.holds { yes } else { no };
            match format {
                Format::Text => {
                    println!("{text} ({scope})");
                    if explain {
                        println!("{verdict}");
                    }
                }
                Format::Json => {
                    let mut v = json!({ "holds": verdict.holds, "verdict": text, "scope": scope });
                    if explain {
                        v["explanation"] = json!(verdict.to_string());
                    }
                    println!("{v}");
                }
            }
            return Ok(if verdict.holds { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }
        Command::Oracle { oracle_size: size } => {
            let size = oracle_size(Some(size))?.unwrap_or_default();
            let checks = run_battery(size);
            for c in &checks {
                println!("{c}");
            }
            checks.iter().all(|c| c.passed)
        }
    };
    Ok(if passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn unambiguous(g: &Wtgc, size: usize) -> Check {
    match check_unambiguous_upto(g, size) {
        None => Ok("unambiguous".into()),
        Some(t) => Err(format!("ambiguous on {t}")),
    }
}

/// The identity on Boolean grammars, the support map otherwise.
fn boolean_hom(s: Semiring) -> Result<SemiringHom> {
    Ok(match s {
        Semiring::Boolean => SemiringHom::identity(s),
        _ => support_hom(s)?,
    })
}

/// Whether every sink child is tied to a sibling by equality, as in
/// grammars built for homomorphic images.
fn image_shaped(g: &Wtgc) -> bool {
    let Some(er) = g.eq_restriction() else { return false };
    g.ids().all(|(id, p)| {
        p.target == er.sink
            || p
                .children()
                .iter()
                .enumerate()
                .all(|(i, q)| *q != er.sink || !er.is_governing(id, i + 1))
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
