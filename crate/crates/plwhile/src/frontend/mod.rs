//! Concrete syntax: lexing, parsing, printing and proof scripts.

pub mod lexer;
pub mod parser;
pub mod printer;
pub mod script;

pub use lexer::ParseError;
pub use parser::{parse, Proof, SourceFile};
pub use printer::{print_assertion, print_expr, print_file};
pub use script::{check_script, run_tactics, Outcome};
