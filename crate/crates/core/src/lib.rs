//! Weighted tree grammars with subtree equality and inequality constraints
//! over commutative semirings: evaluation, closure constructions,
//! homomorphic images, pumping, and support decisions.

pub mod decision;
pub mod fixtures;
pub mod gen;
pub mod grammar;
pub mod homomorphism;
pub mod oracle;
pub mod pumping;
pub mod semantics;
pub mod semiring;
pub mod syntax;
pub mod transforms;
pub mod trees;

pub use decision::{enumerate_support, is_support_empty, is_support_finite, DecisionError, ProductivityTable};
pub use grammar::{Classification, EqRestriction, GrammarBuilder, GrammarError, Production, ProductionId, Wtgc};
pub use homomorphism::{image_grammar, image_weight_oracle, parse_hom, HomError, TreeHom};
pub use pumping::{grammar_height, pump, separation_family, substitute_derivation, PumpingError, SubstitutionSite};
pub use semantics::{evaluate, DerivTree, Derivation, Evaluator, SemanticsError, Step};
pub use semiring::{support_hom, Semiring, SemiringError, SemiringHom, Weight};
pub use syntax::{parse_grammar, parse_tree, parse_tree_over, serialize_grammar, SyntaxError};
pub use transforms::TransformError;
pub use trees::{ConstraintSet, Label, Name, Position, RankedAlphabet, Tree};
