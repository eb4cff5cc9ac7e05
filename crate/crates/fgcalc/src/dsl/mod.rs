//! Textual expression language for contractions.
//!
//! Grammar, one term per line, `#` comments:
//!
//! ```text
//! term   := coeff? "*"? factor ("*" factor)* free?
//! factor := ("d" "(" labels ")")? KIND "[" labels "]"
//! KIND   := R | W | Ric | Scal | P | g | ginv | phi | ups | Om<k> | AmbR
//! free   := "free" "(" labels ")"
//! coeff  := rational function of n, e.g. ((n-4)/(n-3)) or -2
//! ```
//!
//! A label used in exactly two slots denotes a contraction of those slots;
//! labels `_0` and `_inf` denote fixed ambient values. Labels used once must
//! be declared in `free(...)`.

mod parse;
mod print;

pub use parse::{parse_coeff, parse_contraction, parse_lincomb, parse_term};
pub use print::{print_latex, print_structured, print_text, print_text_contraction};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DslError {
    #[error("parse error at {line}:{col}: {msg}")]
    ParseError { line: usize, col: usize, msg: String },
    #[error("{kind} takes {expected} bracket indices, got {got} (at {line}:{col})")]
    ArityError { kind: String, expected: usize, got: usize, line: usize, col: usize },
    #[error("label `{0}` is used {1} times and not declared free")]
    TripleLabel(String, usize),
    #[error("label `{0}` declared free but used {1} times")]
    FreeLabelMisuse(String, usize),
}
