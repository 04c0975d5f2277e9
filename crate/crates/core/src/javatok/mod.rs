//! Java lexing, parsing and def-use analysis shared by the corpus tools and
//! the metrics.

mod dataflow;
mod lexer;
mod parser;

pub use dataflow::{dataflow, DataFlowEdge};
pub use lexer::{
    is_keyword, is_marker, lex, lex_code, Token, TokenKind, JAVA_KEYWORDS, PIPE_MARKERS, TOKENIZER_VERSION,
    WORD_MARKERS,
};
pub use parser::{parse, parse_source, Node, NodeKind, ParseFailure, SyntaxTree};
