//! Maximal-munch lexer for the Java subset found in review-repair corpora.
//!
//! The lexer is total: every input produces a token sequence. Characters that
//! are not part of the Java lexical grammar come out as single-character
//! [`TokenKind::Operator`] tokens. Dataset markers (`START`, `|startfocus|`,
//! `|del|`, ...) are recognised as [`TokenKind::FocusMarker`].

use serde::{Deserialize, Serialize};

/// Reserved words of the Java language. `true`, `false` and `null` are
/// literals and deliberately absent.
pub const JAVA_KEYWORDS: &[&str] = &[
    "abstract",
    "assert",
    "boolean",
    "break",
    "byte",
    "case",
    "catch",
    "char",
    "class",
    "const",
    "continue",
    "default",
    "do",
    "double",
    "else",
    "enum",
    "extends",
    "final",
    "finally",
    "float",
    "for",
    "goto",
    "if",
    "implements",
    "import",
    "instanceof",
    "int",
    "interface",
    "long",
    "native",
    "new",
    "package",
    "private",
    "protected",
    "public",
    "return",
    "short",
    "static",
    "strictfp",
    "super",
    "switch",
    "synchronized",
    "this",
    "throw",
    "throws",
    "transient",
    "try",
    "void",
    "volatile",
    "while",
];

/// Word-shaped dataset markers.
pub const WORD_MARKERS: &[&str] = &["START", "END"];

/// Pipe-delimited dataset markers.
pub const PIPE_MARKERS: &[&str] = &["|startfocus|", "|endfocus|", "|del|", "|startcomment|", "|endcomment|"];

// Longest first so the scan below is maximal munch.
const OPERATORS: &[&str] = &[
    ">>>=", "<<=", ">>=", ">>>", "...", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=", ">=", "+=", "-=", "*=",
    "/=", "&=", "|=", "^=", "%=", "<<", ">>", "=", ">", "<", "!", "~", "?", ":", "+", "-", "*", "/", "&", "|", "^",
    "%", "@",
];

const SEPARATORS: &[char] = &['(', ')', '{', '}', '[', ']', ';', ',', '.'];

/// Version tag recorded in reports so scores stay comparable across releases.
pub const TOKENIZER_VERSION: &str = "javatok-1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    Identifier,
    Keyword,
    Literal,
    Operator,
    Separator,
    Comment,
    FocusMarker,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub kind: TokenKind,
}

impl Token {
    pub fn new(text: impl Into<String>, kind: TokenKind) -> Self {
        Self { text: text.into(), kind }
    }

    pub fn is_comment(&self) -> bool {
        self.kind == TokenKind::Comment
    }

    pub fn is(&self, text: &str) -> bool {
        self.text == text
    }
}

pub fn is_keyword(word: &str) -> bool {
    JAVA_KEYWORDS.contains(&word)
}

pub fn is_marker(word: &str) -> bool {
    WORD_MARKERS.contains(&word) || PIPE_MARKERS.contains(&word)
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '$'
}

fn is_ident_part(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}

/// Lex `source` into tokens. Whitespace is dropped; everything else is kept.
pub fn lex(source: &str) -> Vec<Token> {
    Lexer::new(source).run()
}

/// Lex and drop comment tokens, the view used by the metrics and the parser.
pub fn lex_code(source: &str) -> Vec<Token> {
    lex(source).into_iter().filter(|t| !t.is_comment()).collect()
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    out: Vec<Token>,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self { src, pos: 0, out: Vec::new() }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.rest().chars().nth(n)
    }

    fn emit(&mut self, start: usize, kind: TokenKind) {
        let text = &self.src[start..self.pos];
        debug_assert!(!text.is_empty());
        self.out.push(Token::new(text, kind));
    }

    fn run(mut self) -> Vec<Token> {
        while let Some(c) = self.peek() {
            let start = self.pos;
            if c.is_whitespace() {
                self.pos += c.len_utf8();
                continue;
            }
            if self.rest().starts_with("//") {
                self.take_line();
                self.emit(start, TokenKind::Comment);
            } else if self.rest().starts_with("/*") {
                self.take_block_comment();
                self.emit(start, TokenKind::Comment);
            } else if c == '|' && self.take_pipe_marker() {
                self.emit(start, TokenKind::FocusMarker);
            } else if self.rest().starts_with("\"\"\"") {
                self.take_text_block();
                self.emit(start, TokenKind::Literal);
            } else if c == '"' || c == '\'' {
                self.take_quoted(c);
                self.emit(start, TokenKind::Literal);
            } else if c.is_ascii_digit() || (c == '.' && self.peek_at(1).is_some_and(|d| d.is_ascii_digit())) {
                self.take_number();
                self.emit(start, TokenKind::Literal);
            } else if is_ident_start(c) {
                while self.peek().is_some_and(is_ident_part) {
                    self.pos += self.peek().map_or(0, char::len_utf8);
                }
                let word = &self.src[start..self.pos];
                let kind = if WORD_MARKERS.contains(&word) {
                    TokenKind::FocusMarker
                } else if is_keyword(word) {
                    TokenKind::Keyword
                } else if matches!(word, "true" | "false" | "null") {
                    TokenKind::Literal
                } else {
                    TokenKind::Identifier
                };
                self.emit(start, kind);
            } else if c == '.' && self.rest().starts_with("...") {
                self.pos += 3;
                self.emit(start, TokenKind::Operator);
            } else if SEPARATORS.contains(&c) {
                self.pos += 1;
                self.emit(start, TokenKind::Separator);
            } else if let Some(op) = OPERATORS.iter().find(|op| self.rest().starts_with(**op)) {
                self.pos += op.len();
                self.emit(start, TokenKind::Operator);
            } else {
                self.pos += c.len_utf8();
                self.emit(start, TokenKind::Operator);
            }
        }
        self.out
    }

    fn take_line(&mut self) {
        let len = self.rest().find('\n').unwrap_or(self.rest().len());
        self.pos += len;
    }

    fn take_block_comment(&mut self) {
        match self.rest()[2..].find("*/") {
            Some(i) => self.pos += i + 4,
            None => self.pos = self.src.len(),
        }
    }

    fn take_pipe_marker(&mut self) -> bool {
        match PIPE_MARKERS.iter().find(|m| self.rest().starts_with(**m)) {
            Some(m) => {
                self.pos += m.len();
                true
            }
            None => false,
        }
    }

    fn take_text_block(&mut self) {
        match self.rest()[3..].find("\"\"\"") {
            Some(i) => self.pos += i + 6,
            None => self.pos = self.src.len(),
        }
    }

    /// String or char literal. Stops at the closing quote, or just before a
    /// newline when unterminated.
    fn take_quoted(&mut self, quote: char) {
        self.pos += 1;
        while let Some(c) = self.peek() {
            match c {
                '\n' => return,
                '\\' => {
                    self.pos += 1;
                    match self.peek() {
                        Some('\n') | None => return,
                        Some(e) => self.pos += e.len_utf8(),
                    }
                }
                c if c == quote => {
                    self.pos += 1;
                    return;
                }
                c => self.pos += c.len_utf8(),
            }
        }
    }

    fn take_number(&mut self) {
        let bytes = self.src.as_bytes();
        let at = |i: usize| bytes.get(i).copied().unwrap_or(0);
        if at(self.pos) == b'0' && matches!(at(self.pos + 1), b'x' | b'X' | b'b' | b'B') {
            self.pos += 2;
            while at(self.pos).is_ascii_hexdigit() || at(self.pos) == b'_' {
                self.pos += 1;
            }
            if matches!(at(self.pos), b'l' | b'L') {
                self.pos += 1;
            }
            return;
        }
        let digits = |p: &mut usize| {
            while at(*p).is_ascii_digit() || at(*p) == b'_' {
                *p += 1;
            }
        };
        let mut p = self.pos;
        digits(&mut p);
        if at(p) == b'.' && at(p + 1).is_ascii_digit() {
            p += 1;
            digits(&mut p);
        } else if at(p) == b'.' && !at(p + 1).is_ascii_alphabetic() && at(p + 1) != b'.' {
            // `1.` is a valid double literal.
            p += 1;
        }
        if matches!(at(p), b'e' | b'E') {
            let mut q = p + 1;
            if matches!(at(q), b'+' | b'-') {
                q += 1;
            }
            if at(q).is_ascii_digit() {
                p = q;
                digits(&mut p);
            }
        }
        if matches!(at(p), b'l' | b'L' | b'f' | b'F' | b'd' | b'D') {
            p += 1;
        }
        self.pos = p;
    }
}
