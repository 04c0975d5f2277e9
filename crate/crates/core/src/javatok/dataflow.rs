//! Def-use edges over a [`SyntaxTree`].
//!
//! Defs are declarations (locals, parameters, loop and catch variables,
//! lambda parameters) and assignment targets. Uses are identifier reads in
//! expression position. Each use is linked to the nearest preceding def of
//! the same name visible from its block. Names assigned without a visible
//! declaration (fields, globals) live in the outermost scope.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::lexer::TokenKind;
use super::parser::{Node, NodeKind, SyntaxTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct DataFlowEdge {
    pub def_position: usize,
    pub use_position: usize,
    /// Variable identity numbered by first appearance in token order.
    pub var_slot: usize,
}

/// Compute the def-use edges of `tree`, sorted by use position.
pub fn dataflow(tree: &SyntaxTree) -> Vec<DataFlowEdge> {
    let mut walker = Walker { tree, scopes: vec![HashMap::new()], raw_edges: Vec::new(), occurrences: BTreeMap::new() };
    walker.walk(&tree.root);

    let mut slots: HashMap<&str, usize> = HashMap::new();
    for name in walker.occurrences.values() {
        let next = slots.len();
        slots.entry(name).or_insert(next);
    }
    let mut edges: Vec<DataFlowEdge> = walker
        .raw_edges
        .iter()
        .map(|(def, usage, name)| DataFlowEdge { def_position: *def, use_position: *usage, var_slot: slots[name] })
        .collect();
    edges.sort_by_key(|e| (e.use_position, e.def_position));
    edges.dedup();
    edges
}

struct Walker<'t> {
    tree: &'t SyntaxTree,
    /// name -> position of its most recent def, one map per open scope
    scopes: Vec<HashMap<&'t str, usize>>,
    raw_edges: Vec<(usize, usize, &'t str)>,
    /// token position -> variable name, for every def and use
    occurrences: BTreeMap<usize, &'t str>,
}

impl<'t> Walker<'t> {
    fn ident_of(&self, node: &Node) -> Option<(usize, &'t str)> {
        let i = node.token_index()?;
        let tok = self.tree.tokens.get(i)?;
        (tok.kind == TokenKind::Identifier).then_some((i, tok.text.as_str()))
    }

    fn scoped(&mut self, f: impl FnOnce(&mut Self)) {
        self.scopes.push(HashMap::new());
        f(self);
        self.scopes.pop();
    }

    fn declare(&mut self, node: &Node) {
        if let Some((pos, name)) = self.ident_of(node) {
            self.occurrences.insert(pos, name);
            if let Some(scope) = self.scopes.last_mut() {
                scope.insert(name, pos);
            }
        }
    }

    fn assign(&mut self, pos: usize, name: &'t str) {
        self.occurrences.insert(pos, name);
        let owner = self.scopes.iter_mut().rev().find(|s| s.contains_key(name));
        match owner {
            Some(scope) => {
                scope.insert(name, pos);
            }
            None => {
                self.scopes[0].insert(name, pos);
            }
        }
    }

    fn read(&mut self, pos: usize, name: &'t str) {
        self.occurrences.insert(pos, name);
        let def = self.scopes.iter().rev().find_map(|s| s.get(name).copied());
        if let Some(def) = def {
            if def < pos {
                self.raw_edges.push((def, pos, name));
            }
        }
    }

    fn walk_children(&mut self, node: &'t Node) {
        for c in &node.children {
            self.walk(c);
        }
    }

    fn walk(&mut self, node: &'t Node) {
        use NodeKind::*;
        match node.kind {
            Leaf => {
                if let Some((pos, name)) = self.ident_of(node) {
                    self.read(pos, name);
                }
            }
            Type | TypeArguments | Annotation | Modifiers | Opaque | Throws | Marker | BreakStatement
            | ContinueStatement | ClassLiteral => {}
            Block | ForStatement | TryStatement | SwitchStatement | CatchClause => {
                self.scoped(|w| w.walk_catch_aware(node));
            }
            ClassDeclaration | ClassBody => self.scoped(|w| {
                for c in node.children.iter().filter(|c| !c.is_leaf()) {
                    w.walk(c);
                }
            }),
            MethodDeclaration | ConstructorDeclaration => self.scoped(|w| {
                for c in node.children.iter().filter(|c| !c.is_leaf()) {
                    w.walk(c);
                }
            }),
            FormalParameter => {
                if let Some(name) = node.children.iter().rev().find(|c| self.ident_of(c).is_some()) {
                    self.declare(name);
                }
            }
            LocalVariableDeclaration | FieldDeclaration => {
                for c in node.children.iter().filter(|c| c.kind == VariableDeclarator) {
                    self.walk(c);
                }
            }
            VariableDeclarator => {
                // name [dims] [= init]; only the initializer is read
                if let Some(eq) = node.children.iter().position(|c| self.leaf_text(c) == Some("=")) {
                    for c in &node.children[eq + 1..] {
                        self.walk(c);
                    }
                }
                if let Some(first) = node.children.first() {
                    self.declare(first);
                }
            }
            EnhancedForStatement => self.scoped(|w| {
                // for ( [mods] Type name : expr ) body
                let colon = node.children.iter().position(|c| w.leaf_text(c) == Some(":")).unwrap_or(0);
                if let Some(expr) = node.children.get(colon + 1) {
                    w.walk(expr);
                }
                if colon > 0 {
                    w.declare(&node.children[colon - 1]);
                }
                for c in node.children.iter().skip(colon + 2) {
                    if !c.is_leaf() {
                        w.walk(c);
                    }
                }
            }),
            AssignmentExpression => {
                let [lhs, op, rhs] = &node.children[..] else {
                    return self.walk_children(node);
                };
                self.walk(rhs);
                match self.ident_of(lhs) {
                    Some((pos, name)) => {
                        if self.leaf_text(op) != Some("=") {
                            self.read(pos, name);
                        }
                        self.assign(pos, name);
                    }
                    None => self.walk(lhs),
                }
            }
            UnaryExpression | PostfixExpression => {
                let operand = if node.kind == UnaryExpression { node.children.last() } else { node.children.first() };
                let is_step = node.children.iter().any(|c| matches!(self.leaf_text(c), Some("++" | "--")));
                match operand.and_then(|o| self.ident_of(o)) {
                    Some((pos, name)) if is_step => {
                        self.read(pos, name);
                        self.assign(pos, name);
                    }
                    _ => self.walk_children(node),
                }
            }
            MethodInvocation => {
                let args_at = node.children.iter().position(|c| c.kind == Arguments);
                for (i, c) in node.children.iter().enumerate() {
                    let is_name = args_at.is_some_and(|a| a == i + 1) && self.ident_of(c).is_some();
                    if !is_name {
                        self.walk(c);
                    }
                }
            }
            FieldAccess | MethodReference => {
                if let Some(target) = node.children.first() {
                    self.walk(target);
                }
            }
            InstanceofExpression => {
                if let Some(target) = node.children.first() {
                    self.walk(target);
                }
                if let Some(binding) = node.children.last().filter(|c| c.is_leaf()) {
                    self.declare(binding);
                }
            }
            LambdaExpression => self.scoped(|w| {
                let (params, body) = (&node.children[0], node.children.last());
                if params.is_leaf() {
                    w.declare(params);
                } else {
                    for p in &params.children {
                        if p.kind == FormalParameter {
                            w.walk(p);
                        } else {
                            w.declare(p);
                        }
                    }
                }
                if let Some(body) = body {
                    w.walk(body);
                }
            }),
            LabeledStatement => {
                for c in node.children.iter().skip(1) {
                    self.walk(c);
                }
            }
            _ => self.walk_children(node),
        }
    }

    /// Catch clauses declare their exception variable before the handler block.
    fn walk_catch_aware(&mut self, node: &'t Node) {
        if node.kind != NodeKind::CatchClause {
            return self.walk_children(node);
        }
        if let Some(close) = node.children.iter().position(|c| self.leaf_text(c) == Some(")")) {
            if close > 0 {
                self.declare(&node.children[close - 1]);
            }
        }
        if let Some(block) = node.children.last() {
            self.walk(block);
        }
    }

    fn leaf_text(&self, node: &Node) -> Option<&'t str> {
        let i = node.token_index()?;
        self.tree.tokens.get(i).map(|t| t.text.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::javatok::parse_source;

    fn edges(src: &str) -> Vec<DataFlowEdge> {
        dataflow(&parse_source(src).unwrap_or_else(|e| panic!("{src}: {e}")))
    }

    fn pairs(src: &str) -> Vec<(usize, usize)> {
        edges(src).iter().map(|e| (e.def_position, e.use_position)).collect()
    }

    #[test]
    fn single_chain() {
        // int a = 1 ; return a ;
        // 0   1 2 3 4 5      6 7
        assert_eq!(pairs("int a = 1; return a;"), [(1, 6)]);
    }

    #[test]
    fn no_variables() {
        assert!(edges("return 1;").is_empty());
    }

    #[test]
    fn two_step_chain() {
        // int a = 1 ; int b = a ; return b ;
        // 0   1 2 3 4 5   6 7 8 9 10     11 12
        let e = edges("int a=1; int b=a; return b;");
        assert_eq!(e.len(), 2);
        assert_eq!((e[0].def_position, e[0].use_position, e[0].var_slot), (1, 8, 0));
        assert_eq!((e[1].def_position, e[1].use_position, e[1].var_slot), (6, 11, 1));
    }

    #[test]
    fn def_precedes_use() {
        for src in [
            "int a = 1; a = a + 1; return a;",
            "x += 1; y = x;",
            "for (int i = 0; i < n; i++) { s += i; }",
            "for (String s : items) { print(s); }",
            "try { f(); } catch (Exception e) { log(e); }",
            "list.forEach(e -> use(e));",
        ] {
            for e in edges(src) {
                assert!(e.def_position < e.use_position, "{src}: {e:?}");
            }
        }
    }

    #[test]
    fn rhs_reads_previous_def() {
        // int a = 1 ; a = a + 1 ;
        // 0   1 2 3 4 5 6 7 8 9 10
        assert_eq!(pairs("int a = 1; a = a + 1;"), [(1, 7)]);
    }

    #[test]
    fn method_and_field_names_are_not_reads() {
        // obj.call(x) with no defs => nothing; defined obj => edge to obj only
        assert_eq!(pairs("Foo obj = make(); obj.call(obj.field);").len(), 2);
    }

    #[test]
    fn block_shadowing() {
        // inner declaration shadows; after the block the outer def is visible again
        let src = "int a = 1; { int a = 2; use(a); } use(a);";
        let p = pairs(src);
        // int a = 1 ; { int a = 2 ; use ( a  )  ;  }  use (  a  )  ;
        // 0   1 2 3 4 5 6   7 8 9 10 11 12 13 14 15 16 17  18 19 20 21
        assert_eq!(p, [(7, 13), (1, 19)]);
    }

    #[test]
    fn parameters_and_fields() {
        let src = "void set(int v) { value = v; log(value); }";
        let p = pairs(src);
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn rename_invariance() {
        let a = edges("int a=1; int b=a; return b;");
        let b = edges("int q=1; int zz=q; return zz;");
        assert_eq!(a, b);
    }
}
