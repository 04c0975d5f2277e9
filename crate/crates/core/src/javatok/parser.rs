//! Recursive-descent parser for a simplified method-level Java grammar.
//!
//! The grammar covers what shows up in single-method corpora: declarations,
//! the usual statements, expressions with Java precedence, lambdas, anonymous
//! classes and generics. Annotation arguments and enum bodies are kept as
//! opaque token spans. Anything else is a [`ParseFailure`], and callers are
//! expected to degrade gracefully.
//!
//! Every token becomes exactly one leaf, and every internal node spans the
//! concatenation of its children.

use std::fmt;
use std::ops::Range;

use serde::Serialize;

use super::lexer::{Token, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum NodeKind {
    Program,
    Leaf,
    Marker,
    ClassDeclaration,
    ClassBody,
    FieldDeclaration,
    MethodDeclaration,
    ConstructorDeclaration,
    Initializer,
    Modifiers,
    Annotation,
    Opaque,
    Type,
    TypeArguments,
    FormalParameters,
    FormalParameter,
    Throws,
    Block,
    LocalVariableDeclaration,
    VariableDeclarator,
    ArrayInitializer,
    IfStatement,
    WhileStatement,
    DoStatement,
    ForStatement,
    EnhancedForStatement,
    ReturnStatement,
    ThrowStatement,
    BreakStatement,
    ContinueStatement,
    YieldStatement,
    TryStatement,
    ResourceSpecification,
    CatchClause,
    FinallyClause,
    SwitchStatement,
    SwitchLabel,
    SynchronizedStatement,
    EmptyStatement,
    LabeledStatement,
    AssertStatement,
    ExpressionStatement,
    AssignmentExpression,
    ConditionalExpression,
    BinaryExpression,
    InstanceofExpression,
    UnaryExpression,
    PostfixExpression,
    CastExpression,
    LambdaExpression,
    LambdaParameters,
    MethodInvocation,
    Arguments,
    FieldAccess,
    ArrayAccess,
    ObjectCreation,
    ArrayCreation,
    ParenthesizedExpression,
    MethodReference,
    ClassLiteral,
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Node {
    pub kind: NodeKind,
    /// Half-open range of token indices covered by this node.
    pub span: Range<usize>,
    pub children: Vec<Node>,
}

impl Node {
    fn leaf(index: usize) -> Self {
        Self { kind: NodeKind::Leaf, span: index..index + 1, children: Vec::new() }
    }

    fn internal(kind: NodeKind, children: Vec<Node>) -> Self {
        debug_assert!(!children.is_empty(), "{kind} without children");
        let start = children.first().map_or(0, |c| c.span.start);
        let end = children.last().map_or(0, |c| c.span.end);
        Self { kind, span: start..end, children }
    }

    pub fn is_leaf(&self) -> bool {
        self.kind == NodeKind::Leaf
    }

    /// Token index of a leaf.
    pub fn token_index(&self) -> Option<usize> {
        self.is_leaf().then_some(self.span.start)
    }

    /// Pre-order traversal of this node and all descendants.
    pub fn walk(&self) -> impl Iterator<Item = &Node> {
        let mut stack = vec![self];
        std::iter::from_fn(move || {
            let node = stack.pop()?;
            stack.extend(node.children.iter().rev());
            Some(node)
        })
    }
}

/// A parsed token sequence. `tokens` holds the non-comment tokens the leaves
/// index into.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SyntaxTree {
    pub tokens: Vec<Token>,
    pub root: Node,
}

impl SyntaxTree {
    pub fn token(&self, leaf: &Node) -> Option<&Token> {
        leaf.token_index().and_then(|i| self.tokens.get(i))
    }

    pub fn leaves(&self) -> impl Iterator<Item = &Node> {
        self.root.walk().filter(|n| n.is_leaf())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("parse failure at token {index}: expected {expected}")]
pub struct ParseFailure {
    /// Index into the non-comment token sequence; equals its length at EOF.
    pub index: usize,
    pub expected: String,
}

type PResult<T = Node> = Result<T, ParseFailure>;

/// Parse a token sequence. Comment tokens are dropped before parsing.
pub fn parse(tokens: &[Token]) -> Result<SyntaxTree, ParseFailure> {
    let tokens: Vec<Token> = tokens.iter().filter(|t| !t.is_comment()).cloned().collect();
    let root = Parser::new(&tokens).program()?;
    Ok(SyntaxTree { tokens, root })
}

/// Lex and parse source text.
pub fn parse_source(source: &str) -> Result<SyntaxTree, ParseFailure> {
    parse(&super::lexer::lex(source))
}

const MODIFIERS: &[&str] = &[
    "public",
    "private",
    "protected",
    "static",
    "final",
    "abstract",
    "synchronized",
    "native",
    "transient",
    "volatile",
    "strictfp",
    "default",
];

const PRIMITIVES: &[&str] = &["boolean", "byte", "char", "short", "int", "long", "float", "double", "void"];

const ASSIGN_OPS: &[&str] = &["=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", ">>>="];

fn binary_precedence(op: &str) -> Option<u8> {
    Some(match op {
        "||" => 0,
        "&&" => 1,
        "|" => 2,
        "^" => 3,
        "&" => 4,
        "==" | "!=" => 5,
        "<" | ">" | "<=" | ">=" | "instanceof" => 6,
        "<<" | ">>" | ">>>" => 7,
        "+" | "-" => 8,
        "*" | "/" | "%" => 9,
        _ => return None,
    })
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    /// Closing `>` still owed by a `>>`/`>>>` token consumed in a nested
    /// type-argument list.
    pending_gt: usize,
    in_case_label: bool,
}

impl<'t> Parser<'t> {
    fn new(tokens: &'t [Token]) -> Self {
        Self { tokens, pos: 0, pending_gt: 0, in_case_label: false }
    }

    // ---- token helpers ----

    fn peek(&self) -> Option<&'t Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, n: usize) -> Option<&'t Token> {
        self.tokens.get(self.pos + n)
    }

    fn at(&self, text: &str) -> bool {
        self.pending_gt == 0 && self.peek().is_some_and(|t| t.text == text)
    }

    fn at_n(&self, n: usize, text: &str) -> bool {
        self.peek_at(n).is_some_and(|t| t.text == text)
    }

    fn at_kind(&self, kind: TokenKind) -> bool {
        self.pending_gt == 0 && self.peek().is_some_and(|t| t.kind == kind)
    }

    fn at_any(&self, texts: &[&str]) -> bool {
        self.pending_gt == 0 && self.peek().is_some_and(|t| texts.contains(&t.text.as_str()))
    }

    fn eof(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn fail<T>(&self, expected: &str) -> PResult<T> {
        Err(ParseFailure { index: self.pos, expected: expected.to_string() })
    }

    fn bump(&mut self) -> Node {
        let n = Node::leaf(self.pos);
        self.pos += 1;
        n
    }

    fn expect(&mut self, text: &str) -> PResult {
        if self.at(text) {
            Ok(self.bump())
        } else {
            self.fail(&format!("`{text}`"))
        }
    }

    fn ident(&mut self) -> PResult {
        if self.at_kind(TokenKind::Identifier) {
            Ok(self.bump())
        } else {
            self.fail("identifier")
        }
    }

    /// Run `f`, rewinding on failure.
    fn attempt<T>(&mut self, f: impl FnOnce(&mut Self) -> PResult<T>) -> Option<T> {
        let saved = (self.pos, self.pending_gt, self.in_case_label);
        match f(self) {
            Ok(v) => Some(v),
            Err(_) => {
                (self.pos, self.pending_gt, self.in_case_label) = saved;
                None
            }
        }
    }

    // ---- top level ----

    fn program(&mut self) -> PResult {
        let mut items = Vec::new();
        while !self.eof() {
            items.push(self.item()?);
        }
        if items.is_empty() {
            return Ok(Node { kind: NodeKind::Program, span: 0..0, children: Vec::new() });
        }
        Ok(Node::internal(NodeKind::Program, items))
    }

    fn item(&mut self) -> PResult {
        if self.at_kind(TokenKind::FocusMarker) {
            return Ok(self.marker());
        }
        if let Some(n) = self.attempt(|p| p.class_declaration()) {
            return Ok(n);
        }
        if let Some(n) = self.attempt(|p| p.method_declaration()) {
            return Ok(n);
        }
        self.block_statement()
    }

    fn marker(&mut self) -> Node {
        let leaf = self.bump();
        Node::internal(NodeKind::Marker, vec![leaf])
    }

    fn modifiers(&mut self) -> PResult<Option<Node>> {
        let mut kids = Vec::new();
        loop {
            if self.at("@") && !self.at_n(1, "interface") {
                kids.push(self.annotation()?);
            } else if self.at_any(MODIFIERS) && !(self.at("default") && self.at_n(1, ":")) {
                kids.push(self.bump());
            } else {
                break;
            }
        }
        Ok((!kids.is_empty()).then(|| Node::internal(NodeKind::Modifiers, kids)))
    }

    fn annotation(&mut self) -> PResult {
        let mut kids = vec![self.expect("@")?, self.ident()?];
        while self.at(".") && self.peek_at(1).is_some_and(|t| t.kind == TokenKind::Identifier) {
            kids.push(self.bump());
            kids.push(self.bump());
        }
        if self.at("(") {
            kids.push(self.opaque_balanced("(", ")")?);
        }
        Ok(Node::internal(NodeKind::Annotation, kids))
    }

    /// Consume a balanced bracket group as an opaque span of leaves.
    fn opaque_balanced(&mut self, open: &str, close: &str) -> PResult {
        let mut kids = vec![self.expect(open)?];
        let mut depth = 1usize;
        while depth > 0 {
            let Some(t) = self.peek() else {
                return self.fail(&format!("`{close}`"));
            };
            if t.text == open {
                depth += 1;
            } else if t.text == close {
                depth -= 1;
            }
            kids.push(self.bump());
        }
        Ok(Node::internal(NodeKind::Opaque, kids))
    }

    fn class_declaration(&mut self) -> PResult {
        let mut kids = Vec::new();
        kids.extend(self.modifiers()?);
        if !self.at_any(&["class", "interface", "enum"]) && !(self.at("@") && self.at_n(1, "interface")) {
            return self.fail("class declaration");
        }
        let is_enum = self.at("enum");
        if self.at("@") {
            kids.push(self.bump());
        }
        kids.push(self.bump());
        kids.push(self.ident()?);
        if self.at("<") {
            kids.push(self.type_arguments()?);
        }
        for kw in ["extends", "implements", "permits"] {
            if self.at(kw) {
                kids.push(self.bump());
                kids.push(self.type_ref()?);
                while self.at(",") {
                    kids.push(self.bump());
                    kids.push(self.type_ref()?);
                }
            }
        }
        if is_enum {
            kids.push(self.opaque_balanced("{", "}")?);
        } else {
            kids.push(self.class_body()?);
        }
        Ok(Node::internal(NodeKind::ClassDeclaration, kids))
    }

    fn class_body(&mut self) -> PResult {
        let mut kids = vec![self.expect("{")?];
        while !self.at("}") {
            if self.eof() {
                return self.fail("`}`");
            }
            kids.push(self.member()?);
        }
        kids.push(self.bump());
        Ok(Node::internal(NodeKind::ClassBody, kids))
    }

    fn member(&mut self) -> PResult {
        if self.at(";") {
            let semi = self.bump();
            return Ok(Node::internal(NodeKind::EmptyStatement, vec![semi]));
        }
        if self.at("{") || (self.at("static") && self.at_n(1, "{")) {
            let mut kids = Vec::new();
            if self.at("static") {
                kids.push(self.bump());
            }
            kids.push(self.block()?);
            return Ok(Node::internal(NodeKind::Initializer, kids));
        }
        if let Some(n) = self.attempt(|p| p.class_declaration()) {
            return Ok(n);
        }
        if let Some(n) = self.attempt(|p| p.method_declaration()) {
            return Ok(n);
        }
        let mut kids = Vec::new();
        kids.extend(self.modifiers()?);
        kids.push(self.type_ref()?);
        kids.extend(self.variable_declarators()?);
        kids.push(self.expect(";")?);
        Ok(Node::internal(NodeKind::FieldDeclaration, kids))
    }

    fn method_declaration(&mut self) -> PResult {
        let mut kids = Vec::new();
        kids.extend(self.modifiers()?);
        if self.at("<") {
            kids.push(self.type_arguments()?);
        }
        let kind = if self.at_kind(TokenKind::Identifier) && self.at_n(1, "(") {
            NodeKind::ConstructorDeclaration
        } else {
            kids.push(self.type_ref()?);
            NodeKind::MethodDeclaration
        };
        kids.push(self.ident()?);
        kids.push(self.formal_parameters()?);
        while self.at("[") && self.at_n(1, "]") {
            kids.push(self.bump());
            kids.push(self.bump());
        }
        if self.at("throws") {
            let mut t = vec![self.bump(), self.type_ref()?];
            while self.at(",") {
                t.push(self.bump());
                t.push(self.type_ref()?);
            }
            kids.push(Node::internal(NodeKind::Throws, t));
        }
        if self.at(";") {
            kids.push(self.bump());
        } else if self.at("default") {
            // annotation element default value
            kids.push(self.bump());
            kids.push(self.expression()?);
            kids.push(self.expect(";")?);
        } else {
            kids.push(self.block()?);
        }
        Ok(Node::internal(kind, kids))
    }

    fn formal_parameters(&mut self) -> PResult {
        let mut kids = vec![self.expect("(")?];
        if !self.at(")") {
            kids.push(self.formal_parameter()?);
            while self.at(",") {
                kids.push(self.bump());
                kids.push(self.formal_parameter()?);
            }
        }
        kids.push(self.expect(")")?);
        Ok(Node::internal(NodeKind::FormalParameters, kids))
    }

    fn formal_parameter(&mut self) -> PResult {
        let mut kids = Vec::new();
        kids.extend(self.modifiers()?);
        kids.push(self.type_ref()?);
        if self.at("...") {
            kids.push(self.bump());
        }
        if self.at("this") {
            kids.push(self.bump());
        } else {
            kids.push(self.ident()?);
        }
        while self.at("[") && self.at_n(1, "]") {
            kids.push(self.bump());
            kids.push(self.bump());
        }
        Ok(Node::internal(NodeKind::FormalParameter, kids))
    }

    // ---- types ----

    fn type_ref(&mut self) -> PResult {
        let mut kids = self.class_or_primitive_type()?;
        while self.at("[") && self.at_n(1, "]") {
            kids.push(self.bump());
            kids.push(self.bump());
        }
        Ok(Node::internal(NodeKind::Type, kids))
    }

    /// Type without array dimensions, as used after `new`.
    fn class_or_primitive_type(&mut self) -> PResult<Vec<Node>> {
        let mut kids = Vec::new();
        while self.at("@") {
            kids.push(self.annotation()?);
        }
        if self.at_any(PRIMITIVES) {
            kids.push(self.bump());
            return Ok(kids);
        }
        kids.push(self.ident()?);
        if self.at("<") {
            kids.push(self.type_arguments()?);
        }
        while self.at(".") && self.peek_at(1).is_some_and(|t| t.kind == TokenKind::Identifier) {
            kids.push(self.bump());
            kids.push(self.bump());
            if self.at("<") {
                kids.push(self.type_arguments()?);
            }
        }
        Ok(kids)
    }

    fn type_arguments(&mut self) -> PResult {
        let mut kids = vec![self.expect("<")?];
        if !self.at(">") {
            kids.push(self.type_argument()?);
            while self.at(",") {
                kids.push(self.bump());
                kids.push(self.type_argument()?);
            }
        }
        if self.pending_gt > 0 {
            // closed by a `>>` already consumed by an inner list
            self.pending_gt -= 1;
        } else if self.at(">") {
            kids.push(self.bump());
        } else if self.at(">>") {
            kids.push(self.bump());
            self.pending_gt = 1;
        } else if self.at(">>>") {
            kids.push(self.bump());
            self.pending_gt = 2;
        } else {
            return self.fail("`>`");
        }
        Ok(Node::internal(NodeKind::TypeArguments, kids))
    }

    fn type_argument(&mut self) -> PResult {
        let mut kids = Vec::new();
        if self.at("?") {
            kids.push(self.bump());
        } else {
            kids.push(self.type_ref()?);
        }
        if self.at_any(&["extends", "super"]) {
            kids.push(self.bump());
            kids.push(self.type_ref()?);
            while self.at("&") {
                kids.push(self.bump());
                kids.push(self.type_ref()?);
            }
        }
        if kids.len() == 1 && kids[0].kind == NodeKind::Type {
            return Ok(kids.pop().unwrap_or_else(|| unreachable!()));
        }
        Ok(Node::internal(NodeKind::Type, kids))
    }

    // ---- statements ----

    fn block(&mut self) -> PResult {
        let mut kids = vec![self.expect("{")?];
        while !self.at("}") {
            if self.eof() {
                return self.fail("`}`");
            }
            kids.push(self.block_statement()?);
        }
        kids.push(self.bump());
        Ok(Node::internal(NodeKind::Block, kids))
    }

    fn block_statement(&mut self) -> PResult {
        if self.at_any(&["class", "interface", "enum", "abstract"]) {
            if let Some(n) = self.attempt(|p| p.class_declaration()) {
                return Ok(n);
            }
        }
        if let Some(n) = self.attempt(|p| {
            let decl = p.local_variable_declaration()?;
            let semi = p.expect(";")?;
            let mut kids = decl;
            kids.push(semi);
            Ok(Node::internal(NodeKind::LocalVariableDeclaration, kids))
        }) {
            return Ok(n);
        }
        self.statement()
    }

    /// Modifiers, type and declarators without the trailing semicolon.
    fn local_variable_declaration(&mut self) -> PResult<Vec<Node>> {
        let mut kids = Vec::new();
        kids.extend(self.modifiers()?);
        kids.push(self.type_ref()?);
        kids.extend(self.variable_declarators()?);
        Ok(kids)
    }

    fn variable_declarators(&mut self) -> PResult<Vec<Node>> {
        let mut kids = vec![self.variable_declarator()?];
        while self.at(",") {
            kids.push(self.bump());
            kids.push(self.variable_declarator()?);
        }
        Ok(kids)
    }

    fn variable_declarator(&mut self) -> PResult {
        let mut kids = vec![self.ident()?];
        while self.at("[") && self.at_n(1, "]") {
            kids.push(self.bump());
            kids.push(self.bump());
        }
        if self.at("=") {
            kids.push(self.bump());
            kids.push(self.variable_initializer()?);
        }
        Ok(Node::internal(NodeKind::VariableDeclarator, kids))
    }

    fn variable_initializer(&mut self) -> PResult {
        if self.at("{") {
            self.array_initializer()
        } else {
            self.expression()
        }
    }

    fn array_initializer(&mut self) -> PResult {
        let mut kids = vec![self.expect("{")?];
        while !self.at("}") {
            kids.push(self.variable_initializer()?);
            if self.at(",") {
                kids.push(self.bump());
            } else {
                break;
            }
        }
        kids.push(self.expect("}")?);
        Ok(Node::internal(NodeKind::ArrayInitializer, kids))
    }

    fn statement(&mut self) -> PResult {
        let Some(tok) = self.peek() else {
            return self.fail("statement");
        };
        if tok.kind == TokenKind::FocusMarker {
            return Ok(self.marker());
        }
        match tok.text.as_str() {
            "{" => self.block(),
            ";" => {
                let semi = self.bump();
                Ok(Node::internal(NodeKind::EmptyStatement, vec![semi]))
            }
            "if" => {
                let mut kids = vec![self.bump()];
                kids.extend(self.paren_condition()?);
                kids.push(self.statement()?);
                if self.at("else") {
                    kids.push(self.bump());
                    kids.push(self.statement()?);
                }
                Ok(Node::internal(NodeKind::IfStatement, kids))
            }
            "while" => {
                let mut kids = vec![self.bump()];
                kids.extend(self.paren_condition()?);
                kids.push(self.statement()?);
                Ok(Node::internal(NodeKind::WhileStatement, kids))
            }
            "do" => {
                let mut kids = vec![self.bump(), self.statement()?, self.expect("while")?];
                kids.extend(self.paren_condition()?);
                kids.push(self.expect(";")?);
                Ok(Node::internal(NodeKind::DoStatement, kids))
            }
            "for" => self.for_statement(),
            "return" => {
                let mut kids = vec![self.bump()];
                if !self.at(";") {
                    kids.push(self.expression()?);
                }
                kids.push(self.expect(";")?);
                Ok(Node::internal(NodeKind::ReturnStatement, kids))
            }
            "throw" => {
                let kids = vec![self.bump(), self.expression()?, self.expect(";")?];
                Ok(Node::internal(NodeKind::ThrowStatement, kids))
            }
            "break" | "continue" => {
                let kind = if tok.text == "break" { NodeKind::BreakStatement } else { NodeKind::ContinueStatement };
                let mut kids = vec![self.bump()];
                if self.at_kind(TokenKind::Identifier) {
                    kids.push(self.bump());
                }
                kids.push(self.expect(";")?);
                Ok(Node::internal(kind, kids))
            }
            "try" => self.try_statement(),
            "switch" => self.switch_statement(),
            "synchronized" => {
                let mut kids = vec![self.bump()];
                kids.extend(self.paren_condition()?);
                kids.push(self.block()?);
                Ok(Node::internal(NodeKind::SynchronizedStatement, kids))
            }
            "assert" => {
                let mut kids = vec![self.bump(), self.expression()?];
                if self.at(":") {
                    kids.push(self.bump());
                    kids.push(self.expression()?);
                }
                kids.push(self.expect(";")?);
                Ok(Node::internal(NodeKind::AssertStatement, kids))
            }
            "yield" if !self.at_n(1, "=") && !self.at_n(1, "(") && !self.at_n(1, ".") => {
                let kids = vec![self.bump(), self.expression()?, self.expect(";")?];
                Ok(Node::internal(NodeKind::YieldStatement, kids))
            }
            _ if tok.kind == TokenKind::Identifier && self.at_n(1, ":") => {
                let kids = vec![self.bump(), self.bump(), self.statement()?];
                Ok(Node::internal(NodeKind::LabeledStatement, kids))
            }
            _ => {
                let kids = vec![self.expression()?, self.expect(";")?];
                Ok(Node::internal(NodeKind::ExpressionStatement, kids))
            }
        }
    }

    fn paren_condition(&mut self) -> PResult<Vec<Node>> {
        Ok(vec![self.expect("(")?, self.expression()?, self.expect(")")?])
    }

    fn for_statement(&mut self) -> PResult {
        let mut kids = vec![self.expect("for")?, self.expect("(")?];
        let enhanced = self.attempt(|p| {
            let mut head = Vec::new();
            head.extend(p.modifiers()?);
            head.push(p.type_ref()?);
            head.push(p.ident()?);
            head.push(p.expect(":")?);
            Ok(head)
        });
        if let Some(head) = enhanced {
            kids.extend(head);
            kids.push(self.expression()?);
            kids.push(self.expect(")")?);
            kids.push(self.statement()?);
            return Ok(Node::internal(NodeKind::EnhancedForStatement, kids));
        }
        if !self.at(";") {
            if let Some(decl) = self.attempt(|p| {
                let d = p.local_variable_declaration()?;
                if p.at(";") {
                    Ok(d)
                } else {
                    p.fail("`;`")
                }
            }) {
                kids.push(Node::internal(NodeKind::LocalVariableDeclaration, decl));
            } else {
                kids.extend(self.expression_list()?);
            }
        }
        kids.push(self.expect(";")?);
        if !self.at(";") {
            kids.push(self.expression()?);
        }
        kids.push(self.expect(";")?);
        if !self.at(")") {
            kids.extend(self.expression_list()?);
        }
        kids.push(self.expect(")")?);
        kids.push(self.statement()?);
        Ok(Node::internal(NodeKind::ForStatement, kids))
    }

    fn expression_list(&mut self) -> PResult<Vec<Node>> {
        let mut kids = vec![self.expression()?];
        while self.at(",") {
            kids.push(self.bump());
            kids.push(self.expression()?);
        }
        Ok(kids)
    }

    fn try_statement(&mut self) -> PResult {
        let mut kids = vec![self.expect("try")?];
        if self.at("(") {
            let mut res = vec![self.bump()];
            while !self.at(")") {
                let resource = self.attempt(|p| {
                    let d = p.local_variable_declaration()?;
                    if !p.at_any(&[";", ")"]) {
                        return p.fail("resource");
                    }
                    Ok(Node::internal(NodeKind::LocalVariableDeclaration, d))
                });
                match resource {
                    Some(r) => res.push(r),
                    None => res.push(self.expression()?),
                }
                if self.at(";") {
                    res.push(self.bump());
                } else {
                    break;
                }
            }
            res.push(self.expect(")")?);
            kids.push(Node::internal(NodeKind::ResourceSpecification, res));
        }
        kids.push(self.block()?);
        while self.at("catch") {
            let mut c = vec![self.bump(), self.expect("(")?];
            c.extend(self.modifiers()?);
            c.push(self.type_ref()?);
            while self.at("|") {
                c.push(self.bump());
                c.push(self.type_ref()?);
            }
            c.push(self.ident()?);
            c.push(self.expect(")")?);
            c.push(self.block()?);
            kids.push(Node::internal(NodeKind::CatchClause, c));
        }
        if self.at("finally") {
            let f = vec![self.bump(), self.block()?];
            kids.push(Node::internal(NodeKind::FinallyClause, f));
        }
        Ok(Node::internal(NodeKind::TryStatement, kids))
    }

    fn switch_statement(&mut self) -> PResult {
        let mut kids = vec![self.expect("switch")?];
        kids.extend(self.paren_condition()?);
        kids.push(self.switch_body()?);
        Ok(Node::internal(NodeKind::SwitchStatement, kids))
    }

    fn switch_body(&mut self) -> PResult {
        let mut kids = vec![self.expect("{")?];
        while !self.at("}") {
            if self.eof() {
                return self.fail("`}`");
            }
            if self.at("case") || (self.at("default") && (self.at_n(1, ":") || self.at_n(1, "->"))) {
                kids.push(self.switch_label()?);
            } else {
                kids.push(self.block_statement()?);
            }
        }
        kids.push(self.bump());
        Ok(Node::internal(NodeKind::Block, kids))
    }

    fn switch_label(&mut self) -> PResult {
        let is_case = self.at("case");
        let mut kids = vec![self.bump()];
        if is_case {
            let saved = self.in_case_label;
            self.in_case_label = true;
            let labels = (|| {
                let mut out = vec![self.ternary()?];
                while self.at(",") {
                    out.push(self.bump());
                    out.push(self.ternary()?);
                }
                Ok(out)
            })();
            self.in_case_label = saved;
            kids.extend(labels?);
        }
        if self.at(":") || self.at("->") {
            kids.push(self.bump());
        } else {
            return self.fail("`:` or `->`");
        }
        Ok(Node::internal(NodeKind::SwitchLabel, kids))
    }

    // ---- expressions ----

    fn expression(&mut self) -> PResult {
        if !self.in_case_label {
            if let Some(l) = self.attempt(|p| p.lambda()) {
                return Ok(l);
            }
        }
        let lhs = self.ternary()?;
        if self.at_any(ASSIGN_OPS) {
            let op = self.bump();
            let rhs = self.expression()?;
            return Ok(Node::internal(NodeKind::AssignmentExpression, vec![lhs, op, rhs]));
        }
        Ok(lhs)
    }

    fn lambda(&mut self) -> PResult {
        let params = if self.at_kind(TokenKind::Identifier) && self.at_n(1, "->") {
            self.bump()
        } else if self.at("(") {
            let mut kids = vec![self.bump()];
            if !self.at(")") {
                let typed = self.attempt(|p| {
                    let mut ps = vec![p.formal_parameter()?];
                    while p.at(",") {
                        ps.push(p.bump());
                        ps.push(p.formal_parameter()?);
                    }
                    if p.at(")") {
                        Ok(ps)
                    } else {
                        p.fail("`)`")
                    }
                });
                match typed {
                    Some(ps) => kids.extend(ps),
                    None => {
                        kids.push(self.ident()?);
                        while self.at(",") {
                            kids.push(self.bump());
                            kids.push(self.ident()?);
                        }
                    }
                }
            }
            kids.push(self.expect(")")?);
            Node::internal(NodeKind::LambdaParameters, kids)
        } else {
            return self.fail("lambda");
        };
        let arrow = self.expect("->")?;
        let body = if self.at("{") { self.block()? } else { self.expression()? };
        Ok(Node::internal(NodeKind::LambdaExpression, vec![params, arrow, body]))
    }

    fn ternary(&mut self) -> PResult {
        let cond = self.binary(0)?;
        if self.at("?") {
            let q = self.bump();
            let then = self.expression()?;
            let colon = self.expect(":")?;
            let otherwise = if !self.in_case_label {
                match self.attempt(|p| p.lambda()) {
                    Some(l) => l,
                    None => self.ternary()?,
                }
            } else {
                self.ternary()?
            };
            return Ok(Node::internal(NodeKind::ConditionalExpression, vec![cond, q, then, colon, otherwise]));
        }
        Ok(cond)
    }

    fn binary(&mut self, min_prec: u8) -> PResult {
        let mut left = self.unary()?;
        loop {
            if self.pending_gt > 0 {
                break;
            }
            let Some(tok) = self.peek() else { break };
            let Some(prec) = binary_precedence(&tok.text) else {
                break;
            };
            if prec < min_prec {
                break;
            }
            let op = self.bump();
            if self.tokens[op.span.start].text == "instanceof" {
                let mut kids = vec![left, op];
                if self.at("final") {
                    kids.push(self.bump());
                }
                kids.push(self.type_ref()?);
                if self.at_kind(TokenKind::Identifier) {
                    kids.push(self.bump());
                }
                left = Node::internal(NodeKind::InstanceofExpression, kids);
                continue;
            }
            let right = self.binary(prec + 1)?;
            left = Node::internal(NodeKind::BinaryExpression, vec![left, op, right]);
        }
        Ok(left)
    }

    fn unary(&mut self) -> PResult {
        if self.at_any(&["+", "-", "++", "--", "!", "~"]) {
            let op = self.bump();
            let operand = self.unary()?;
            return Ok(Node::internal(NodeKind::UnaryExpression, vec![op, operand]));
        }
        if self.at("(") {
            if let Some(cast) = self.attempt(|p| p.cast()) {
                return Ok(cast);
            }
        }
        self.postfix()
    }

    fn cast(&mut self) -> PResult {
        let open = self.expect("(")?;
        let primitive = self.at_any(PRIMITIVES);
        let mut kids = vec![open, self.type_ref()?];
        while self.at("&") {
            kids.push(self.bump());
            kids.push(self.type_ref()?);
        }
        kids.push(self.expect(")")?);
        let Some(next) = self.peek() else {
            return self.fail("cast operand");
        };
        let operand_start = matches!(next.kind, TokenKind::Identifier | TokenKind::Literal)
            || matches!(next.text.as_str(), "(" | "!" | "~" | "this" | "super" | "new")
            || PRIMITIVES.contains(&next.text.as_str())
            || (primitive && matches!(next.text.as_str(), "+" | "-" | "++" | "--"));
        if !operand_start {
            return self.fail("cast operand");
        }
        if !primitive && self.at_kind(TokenKind::Identifier) && self.at_n(1, "->") {
            return self.fail("cast operand");
        }
        let operand = match self.attempt(|p| p.lambda()) {
            Some(l) => l,
            None => self.unary()?,
        };
        kids.push(operand);
        Ok(Node::internal(NodeKind::CastExpression, kids))
    }

    fn postfix(&mut self) -> PResult {
        let mut expr = self.primary()?;
        loop {
            if self.at(".") {
                let dot = self.bump();
                if self.at("<") {
                    let targs = self.type_arguments()?;
                    let name = self.ident()?;
                    let args = self.arguments()?;
                    expr = Node::internal(NodeKind::MethodInvocation, vec![expr, dot, targs, name, args]);
                } else if self.at("new") {
                    let creation = self.creator()?;
                    expr = Node::internal(NodeKind::ObjectCreation, vec![expr, dot, creation]);
                } else if self.at("class") {
                    let kw = self.bump();
                    expr = Node::internal(NodeKind::ClassLiteral, vec![expr, dot, kw]);
                } else if self.at_any(&["this", "super"]) {
                    let kw = self.bump();
                    expr = Node::internal(NodeKind::FieldAccess, vec![expr, dot, kw]);
                } else {
                    let name = self.ident()?;
                    if self.at("(") {
                        let args = self.arguments()?;
                        expr = Node::internal(NodeKind::MethodInvocation, vec![expr, dot, name, args]);
                    } else {
                        expr = Node::internal(NodeKind::FieldAccess, vec![expr, dot, name]);
                    }
                }
            } else if self.at("[") {
                let kids = vec![expr, self.bump(), self.expression()?, self.expect("]")?];
                expr = Node::internal(NodeKind::ArrayAccess, kids);
            } else if self.at_any(&["++", "--"]) {
                let op = self.bump();
                expr = Node::internal(NodeKind::PostfixExpression, vec![expr, op]);
            } else if self.at("::") {
                let colons = self.bump();
                let name = if self.at("new") { self.bump() } else { self.ident()? };
                expr = Node::internal(NodeKind::MethodReference, vec![expr, colons, name]);
            } else {
                break;
            }
        }
        Ok(expr)
    }

    fn primary(&mut self) -> PResult {
        let Some(tok) = self.peek() else {
            return self.fail("expression");
        };
        if self.pending_gt > 0 {
            return self.fail("expression");
        }
        match tok.kind {
            TokenKind::Literal => return Ok(self.bump()),
            TokenKind::Identifier => {
                // generic type used as a method-reference target, e.g. List<String>::new
                if self.at_n(1, "<") {
                    if let Some(t) = self.attempt(|p| {
                        let t = p.type_ref()?;
                        if p.at("::") {
                            Ok(t)
                        } else {
                            p.fail("`::`")
                        }
                    }) {
                        return Ok(t);
                    }
                }
                if self.at_n(1, "[") && self.at_n(2, "]") {
                    // array type in `String[]::new` or `String[].class`
                    let t = self.type_ref()?;
                    return self.type_suffix(t);
                }
                let name = self.bump();
                if self.at("(") {
                    let args = self.arguments()?;
                    return Ok(Node::internal(NodeKind::MethodInvocation, vec![name, args]));
                }
                return Ok(name);
            }
            _ => {}
        }
        match tok.text.as_str() {
            "this" | "super" => {
                let kw = self.bump();
                if self.at("(") {
                    let args = self.arguments()?;
                    return Ok(Node::internal(NodeKind::MethodInvocation, vec![kw, args]));
                }
                Ok(kw)
            }
            "(" => {
                let kids = vec![self.bump(), self.expression()?, self.expect(")")?];
                Ok(Node::internal(NodeKind::ParenthesizedExpression, kids))
            }
            "new" => self.creator(),
            "{" => self.array_initializer(),
            "switch" => {
                let mut kids = vec![self.bump()];
                kids.extend(self.paren_condition()?);
                kids.push(self.switch_body()?);
                Ok(Node::internal(NodeKind::SwitchStatement, kids))
            }
            t if PRIMITIVES.contains(&t) => {
                let ty = self.type_ref()?;
                self.type_suffix(ty)
            }
            _ => self.fail("expression"),
        }
    }

    /// `.class` or `::` after a type in expression position.
    fn type_suffix(&mut self, ty: Node) -> PResult {
        if self.at(".") && self.at_n(1, "class") {
            let kids = vec![ty, self.bump(), self.bump()];
            return Ok(Node::internal(NodeKind::ClassLiteral, kids));
        }
        if self.at("::") {
            return Ok(ty);
        }
        self.fail("`.class` or `::`")
    }

    fn creator(&mut self) -> PResult {
        let mut kids = vec![self.expect("new")?];
        if self.at("<") {
            kids.push(self.type_arguments()?);
        }
        let ty = self.class_or_primitive_type()?;
        kids.push(Node::internal(NodeKind::Type, ty));
        if self.at("[") {
            while self.at("[") {
                kids.push(self.bump());
                if !self.at("]") {
                    kids.push(self.expression()?);
                }
                kids.push(self.expect("]")?);
            }
            if self.at("{") {
                kids.push(self.array_initializer()?);
            }
            return Ok(Node::internal(NodeKind::ArrayCreation, kids));
        }
        kids.push(self.arguments()?);
        if self.at("{") {
            kids.push(self.class_body()?);
        }
        Ok(Node::internal(NodeKind::ObjectCreation, kids))
    }

    fn arguments(&mut self) -> PResult {
        let mut kids = vec![self.expect("(")?];
        if !self.at(")") {
            let saved = self.in_case_label;
            self.in_case_label = false;
            let list = self.expression_list();
            self.in_case_label = saved;
            kids.extend(list?);
        }
        kids.push(self.expect(")")?);
        Ok(Node::internal(NodeKind::Arguments, kids))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree(src: &str) -> SyntaxTree {
        parse_source(src).unwrap_or_else(|e| panic!("{src:?}: {e}"))
    }

    fn kinds(t: &SyntaxTree) -> Vec<NodeKind> {
        t.root.walk().filter(|n| !n.is_leaf()).map(|n| n.kind).collect()
    }

    fn check_spans(node: &Node) {
        if node.is_leaf() {
            assert_eq!(node.span.len(), 1);
            return;
        }
        let mut cursor = node.span.start;
        for c in &node.children {
            assert_eq!(c.span.start, cursor, "{:?}", node.kind);
            cursor = c.span.end;
            check_spans(c);
        }
        assert_eq!(cursor, node.span.end);
    }

    #[test]
    fn return_statement() {
        let t = tree("return x ;");
        assert_eq!(t.root.children.len(), 1);
        let ret = &t.root.children[0];
        assert_eq!(ret.kind, NodeKind::ReturnStatement);
        assert_eq!(ret.span, 0..3);
        assert!(ret.children.iter().all(Node::is_leaf));
    }

    #[test]
    fn truncated_if_fails_at_eof() {
        let err = parse_source("if (").unwrap_err();
        assert_eq!(err.index, 2);
    }

    #[test]
    fn block_with_two_calls() {
        let t = tree("{ a(); b(); }");
        let block = &t.root.children[0];
        assert_eq!(block.kind, NodeKind::Block);
        let stmts: Vec<_> = block.children.iter().filter(|c| !c.is_leaf()).collect();
        assert_eq!(stmts.len(), 2);
        assert!(stmts.iter().all(|s| s.kind == NodeKind::ExpressionStatement));
    }

    #[test]
    fn method_declaration_with_generics() {
        let src = "private FirewallRule findById(List < FirewallRule > collection, String id) { \
                   FirewallRule result = null; for (FirewallRule rule: collection) { \
                   if (rule.id().equals(id)) { START result = rule; END } } return result; }";
        let t = tree(src);
        assert_eq!(t.root.children[0].kind, NodeKind::MethodDeclaration);
        let ks = kinds(&t);
        assert!(ks.contains(&NodeKind::EnhancedForStatement));
        assert!(ks.contains(&NodeKind::Marker));
        check_spans(&t.root);
    }

    #[test]
    fn nested_generics_close_with_shift_token() {
        let t = tree("Map<String, List<Integer>> m = new HashMap<>();");
        assert_eq!(t.root.children[0].kind, NodeKind::LocalVariableDeclaration);
        check_spans(&t.root);
        let t = tree("List<List<List<X>>> deep;");
        check_spans(&t.root);
    }

    #[test]
    fn expression_forms() {
        for src in [
            "x = a ? b : c;",
            "y += (int) z * 2 - f(a, b).g[3];",
            "list.forEach(e -> System.out.println(e));",
            "Runnable r = () -> { run(); };",
            "BiFunction<A, B, C> f = (A a, B b) -> a.combine(b);",
            "if (o instanceof String s && !s.isEmpty()) return;",
            "int[] arr = new int[] { 1, 2, 3 };",
            "Object o = new Object() { public String toString() { return \"x\"; } };",
            "Class<?> c = String.class;",
            "Supplier<List<String>> s = ArrayList::new;",
            "i++; --j; k = -k;",
            "this.value = value;",
            "super(a);",
            "String s = (String) map.get(key);",
            "x = (a) + b;",
            "a = b << 2 >> 1 >>> 3;",
        ] {
            let t = tree(src);
            check_spans(&t.root);
        }
    }

    #[test]
    fn statement_forms() {
        for src in [
            "for (int i = 0; i < n; i++) { sum += i; }",
            "for (;;) break;",
            "while (x) x--;",
            "do { x++; } while (x < 3);",
            "try (InputStream in = open()) { read(in); } catch (IOException | RuntimeException e) { log(e); } finally { close(); }",
            "switch (k) { case 1: a(); break; case 2, 3 -> b(); default: c(); }",
            "synchronized (lock) { n++; }",
            "outer: for (X x : xs) { continue outer; }",
            "assert x > 0 : \"positive\";",
            "throw new IllegalStateException(\"bad\");",
            "@Override public void run() { }",
            "@SuppressWarnings(\"unchecked\") public <T> T cast(Object o) throws ClassCastException { return (T) o; }",
            "public Foo(int a) { this.a = a; }",
            "class Local { int f = 1; void g() { } }",
            "|del|",
            ";",
        ] {
            let t = tree(src);
            check_spans(&t.root);
        }
    }

    #[test]
    fn failures_report_index() {
        for src in ["return", "x = ;", "if (a) {", "foo(", "a b c d"] {
            let err = parse_source(src).unwrap_err();
            assert!(err.index <= crate::javatok::lex(src).len(), "{src}");
        }
    }

    #[test]
    fn comments_are_dropped() {
        let t = tree("return /* c */ x ; // done");
        assert_eq!(t.tokens.len(), 3);
        assert_eq!(t.leaves().count(), 3);
    }

    #[test]
    fn empty_program() {
        let t = tree("");
        assert!(t.root.children.is_empty());
    }
}
