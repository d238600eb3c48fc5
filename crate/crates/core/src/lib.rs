//! Tabled evaluation of logic programs with annotated disjunctions and of
//! possibilistic programs.
//!
//! Programs are parsed into [`ast::Program`], instrumented clause by clause
//! ([`transform`]) and evaluated by a tabling engine ([`engine::solve`])
//! parameterised by one of five uncertainty algebras ([`algebra::Mode`]).
//!
//! ```
//! use pita::{parse_program, parse_query, solve, EngineConfig, Mode, ParseMode};
//!
//! let program = parse_program("q :- a. q :- b. a:0.2. b:0.4.", ParseMode::Lpad).unwrap();
//! let goal = parse_query("q").unwrap();
//! let solution = solve(&program, Mode::Prob, &goal, &EngineConfig::default()).unwrap();
//! assert!((solution.answers[0].value.as_f64() - 0.52).abs() < 1e-12);
//! ```

pub mod algebra;
pub mod ast;
pub mod bench;
pub mod bdd;
pub mod engine;
pub mod format;
pub mod oracle;
pub mod parser;
pub mod transform;

pub use algebra::{Mode, Outcome};
pub use engine::{solve, Answer, EngineConfig, EngineError, Solution, Stats};
pub use parser::{parse_program, parse_query, ParseError, ParseMode};
