//! Tree-definition text format (`.cbt` files).
//!
//! One s-expression per document:
//!
//! ```text
//! ; the main task
//! (parallel-sync
//!   (action Navigate)
//!   (action Seek))
//! ```
//!
//! Operator forms: `(seq child+)`, `(fallback child+)`,
//! `(parallel [:threshold INT] child+)`, `(parallel-sync child+)`,
//! `(parallel-mutex (child [:priority INT] subtree)+)`. Leaf forms:
//! `(action NAME)`, `(condition NAME)` with NAME matching
//! `[A-Za-z_][A-Za-z0-9_-]*`. `;` starts a line comment. Any node form may
//! carry `:id STRING` to override the auto-generated id; auto ids are
//! preorder paths ("0", "0.1", "0.1.2", ...).
//!
//! `serialize` emits the canonical form — two-space indentation, one child
//! per line, defaulted fields omitted — and `parse` of that form
//! reconstructs a structurally identical tree.

use crate::tree::{NodeId, NodeKind, NodeSpec};
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

/// Position of a token in the source text, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub span: Span,
    pub message: String,
}

impl ParseError {
    fn new(span: Span, message: impl Into<String>) -> ParseError {
        ParseError {
            span,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Open,
    Close,
    /// `:threshold`, `:priority`, `:id`
    Keyword(String),
    /// Bare atom: form names, leaf names, integers, unquoted id strings.
    Atom(String),
    /// Double-quoted string with `\"` and `\\` escapes resolved.
    Str(String),
}

struct Lexer<'a> {
    src: &'a str,
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Lexer<'a> {
        Lexer {
            src,
            chars: src.char_indices().peekable(),
            line: 1,
            column: 1,
        }
    }

    fn bump(&mut self) -> Option<(usize, char)> {
        let next = self.chars.next();
        if let Some((_, c)) = next {
            if c == '\n' {
                self.line += 1;
                self.column = 1;
            } else {
                self.column += 1;
            }
        }
        next
    }

    fn tokens(mut self) -> Result<Vec<(Token, Span)>, ParseError> {
        let mut out = Vec::new();
        loop {
            // Skip whitespace and comments.
            let (start, c) = loop {
                match self.chars.peek().copied() {
                    None => return Ok(out),
                    Some((_, c)) if c.is_whitespace() => {
                        self.bump();
                    }
                    Some((_, ';')) => {
                        while let Some((_, c)) = self.bump() {
                            if c == '\n' {
                                break;
                            }
                        }
                    }
                    Some((i, c)) => break (i, c),
                }
            };
            let span = Span {
                line: self.line,
                column: self.column,
            };
            match c {
                '(' => {
                    self.bump();
                    out.push((Token::Open, span));
                }
                ')' => {
                    self.bump();
                    out.push((Token::Close, span));
                }
                '"' => {
                    self.bump();
                    let mut s = String::new();
                    loop {
                        match self.bump() {
                            None => {
                                return Err(ParseError::new(span, "unterminated string literal"))
                            }
                            Some((_, '"')) => break,
                            Some((_, '\\')) => match self.bump() {
                                Some((_, '"')) => s.push('"'),
                                Some((_, '\\')) => s.push('\\'),
                                _ => {
                                    return Err(ParseError::new(
                                        span,
                                        "unsupported escape in string literal",
                                    ))
                                }
                            },
                            Some((_, c)) => s.push(c),
                        }
                    }
                    out.push((Token::Str(s), span));
                }
                _ => {
                    self.bump();
                    let mut end = start + c.len_utf8();
                    while let Some(&(i, c)) = self.chars.peek() {
                        if c.is_whitespace() || c == '(' || c == ')' || c == ';' || c == '"' {
                            break;
                        }
                        self.bump();
                        end = i + c.len_utf8();
                    }
                    let word = &self.src[start..end];
                    if let Some(kw) = word.strip_prefix(':') {
                        out.push((Token::Keyword(kw.to_owned()), span));
                    } else {
                        out.push((Token::Atom(word.to_owned()), span));
                    }
                }
            }
        }
    }
}

fn is_valid_name(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

struct Parser {
    tokens: Vec<(Token, Span)>,
    pos: usize,
    ids_seen: BTreeSet<String>,
    spans: Vec<(String, Span)>,
}

impl Parser {
    fn peek(&self) -> Option<&(Token, Span)> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<(Token, Span)> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eof_span(&self) -> Span {
        self.tokens
            .last()
            .map(|(_, s)| *s)
            .unwrap_or(Span { line: 1, column: 1 })
    }

    fn expect_open(&mut self) -> Result<Span, ParseError> {
        match self.next() {
            Some((Token::Open, span)) => Ok(span),
            Some((_, span)) => Err(ParseError::new(span, "expected `(`")),
            None => Err(ParseError::new(self.eof_span(), "unexpected end of input")),
        }
    }

    /// Parses an optional `:id` annotation and registers the chosen id.
    fn take_id(&mut self, auto: &NodeId, form_span: Span) -> Result<NodeId, ParseError> {
        let id = if matches!(self.peek(), Some((Token::Keyword(k), _)) if k == "id") {
            let (_, kw_span) = self.next().unwrap();
            match self.next() {
                Some((Token::Str(s), _)) | Some((Token::Atom(s), _)) => NodeId::new(s),
                _ => return Err(ParseError::new(kw_span, "`:id` expects a string")),
            }
        } else {
            auto.clone()
        };
        if !self.ids_seen.insert(id.as_str().to_owned()) {
            return Err(ParseError::new(
                form_span,
                format!("duplicate :id `{}`", id.as_str()),
            ));
        }
        self.spans.push((id.as_str().to_owned(), form_span));
        Ok(id)
    }

    fn take_int_keyword(&mut self, name: &str) -> Result<Option<u64>, ParseError> {
        if !matches!(self.peek(), Some((Token::Keyword(k), _)) if k == name) {
            return Ok(None);
        }
        let (_, kw_span) = self.next().unwrap();
        match self.next() {
            Some((Token::Atom(s), span)) => s.parse::<u64>().map(Some).map_err(|_| {
                ParseError::new(span, format!("`:{name}` expects a non-negative integer"))
            }),
            _ => Err(ParseError::new(
                kw_span,
                format!("`:{name}` expects an integer"),
            )),
        }
    }

    fn node(&mut self, auto_id: NodeId) -> Result<NodeSpec, ParseError> {
        let open = self.expect_open()?;
        let (head, head_span) = match self.next() {
            Some((Token::Atom(a), span)) => (a, span),
            Some((_, span)) => return Err(ParseError::new(span, "expected a form name")),
            None => return Err(ParseError::new(self.eof_span(), "unexpected end of input")),
        };
        match head.as_str() {
            "action" | "condition" => {
                let id = self.take_id(&auto_id, open)?;
                let name = match self.next() {
                    Some((Token::Atom(n), span)) => {
                        if !is_valid_name(&n) {
                            return Err(ParseError::new(span, format!("invalid leaf name `{n}`")));
                        }
                        n
                    }
                    Some((_, span)) => return Err(ParseError::new(span, "expected a leaf name")),
                    None => {
                        return Err(ParseError::new(self.eof_span(), "unexpected end of input"))
                    }
                };
                self.close(&head)?;
                let mut node = if head == "action" {
                    NodeSpec::action(id.as_str(), name)
                } else {
                    NodeSpec::condition(id.as_str(), name)
                };
                node.id = id;
                Ok(node)
            }
            "seq" | "fallback" | "parallel" | "parallel-sync" => {
                let kind = match head.as_str() {
                    "seq" => NodeKind::Sequence,
                    "fallback" => NodeKind::Fallback,
                    "parallel" => NodeKind::Parallel,
                    _ => NodeKind::ParallelSync,
                };
                let id = self.take_id(&auto_id, open)?;
                let threshold = if kind == NodeKind::Parallel {
                    self.take_int_keyword("threshold")?
                } else {
                    None
                };
                let mut children = Vec::new();
                while matches!(self.peek(), Some((Token::Open, _))) {
                    let child_auto = id_path_child(&id, &auto_id, children.len());
                    children.push(self.node(child_auto)?);
                }
                self.close(&head)?;
                if children.is_empty() {
                    return Err(ParseError::new(open, "operator requires >=1 child"));
                }
                let mut node = NodeSpec::operator(id.as_str(), kind, children);
                node.success_threshold = threshold.map(|t| t as usize);
                Ok(node)
            }
            "parallel-mutex" => {
                let id = self.take_id(&auto_id, open)?;
                let mut children = Vec::new();
                while matches!(self.peek(), Some((Token::Open, _))) {
                    children.push(self.mutex_child(&id, &auto_id, children.len())?);
                }
                self.close(&head)?;
                if children.is_empty() {
                    return Err(ParseError::new(open, "operator requires >=1 child"));
                }
                Ok(NodeSpec::operator(
                    id.as_str(),
                    NodeKind::ParallelMutex,
                    children,
                ))
            }
            other => Err(ParseError::new(
                head_span,
                format!("unknown form `{other}`"),
            )),
        }
    }

    /// `(child [:priority INT] subtree)` wrapper inside a parallel-mutex.
    fn mutex_child(
        &mut self,
        parent_id: &NodeId,
        parent_auto: &NodeId,
        index: usize,
    ) -> Result<NodeSpec, ParseError> {
        let open = self.expect_open()?;
        match self.next() {
            Some((Token::Atom(a), span)) if a == "child" => {
                let _ = span;
            }
            Some((_, span)) => {
                return Err(ParseError::new(
                    span,
                    "parallel-mutex children use the `(child ...)` form",
                ))
            }
            None => return Err(ParseError::new(self.eof_span(), "unexpected end of input")),
        }
        let priority = self.take_int_keyword("priority")?;
        let auto = id_path_child(parent_id, parent_auto, index);
        let mut subtree = self.node(auto)?;
        self.close("child")?;
        if let Some(p) = priority {
            subtree.base_priority = Some(p as u32);
        }
        let _ = open;
        Ok(subtree)
    }

    fn close(&mut self, form: &str) -> Result<(), ParseError> {
        match self.next() {
            Some((Token::Close, _)) => Ok(()),
            Some((_, span)) => Err(ParseError::new(
                span,
                format!("too many arguments in `{form}` form"),
            )),
            None => Err(ParseError::new(
                self.eof_span(),
                "unbalanced parentheses: missing `)`",
            )),
        }
    }
}

/// Auto id for the `index`-th child: extends the parent's preorder path.
/// When the parent carries an explicit id, children still follow their
/// positional path under it so that defaulted ids stay predictable.
fn id_path_child(parent_id: &NodeId, parent_auto: &NodeId, index: usize) -> NodeId {
    if parent_id == parent_auto {
        parent_auto.child_path(index)
    } else {
        parent_id.child_path(index)
    }
}

/// A parsed tree document: the source text, the tree, and the source span
/// of every node for positioned diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeDocument {
    pub source: String,
    pub tree: NodeSpec,
    spans: std::collections::BTreeMap<String, Span>,
}

impl TreeDocument {
    pub fn parse(text: &str) -> Result<TreeDocument, ParseError> {
        let tokens = Lexer::new(text).tokens()?;
        let mut parser = Parser {
            tokens,
            pos: 0,
            ids_seen: BTreeSet::new(),
            spans: Vec::new(),
        };
        if parser.peek().is_none() {
            return Err(ParseError::new(
                Span { line: 1, column: 1 },
                "empty document",
            ));
        }
        let tree = parser.node(NodeId::root_path())?;
        if let Some((_, span)) = parser.peek() {
            return Err(ParseError::new(
                *span,
                "trailing input after the tree expression",
            ));
        }
        Ok(TreeDocument {
            source: text.to_owned(),
            tree,
            spans: parser.spans.into_iter().collect(),
        })
    }

    /// Where the node with this id was written in the source.
    pub fn span_of(&self, id: &NodeId) -> Option<Span> {
        self.spans.get(id.as_str()).copied()
    }
}

/// Parses one tree document, returning just the tree.
pub fn parse(text: &str) -> Result<NodeSpec, ParseError> {
    TreeDocument::parse(text).map(|doc| doc.tree)
}

/// Serializes a tree to the canonical text form: two-space indentation, one
/// child per line, `:id` only when it differs from the auto-generated path,
/// `:threshold`/`:priority` only when they differ from their defaults.
pub fn serialize(tree: &NodeSpec) -> String {
    let mut out = String::new();
    write_node(tree, &NodeId::root_path(), 0, false, &mut out);
    out.push('\n');
    out
}

fn write_node(node: &NodeSpec, auto_id: &NodeId, indent: usize, in_mutex: bool, out: &mut String) {
    let pad = "  ".repeat(indent);
    out.push_str(&pad);
    if in_mutex {
        out.push_str("(child");
        if let Some(p) = node.base_priority.filter(|&p| p != 0) {
            out.push_str(&format!(" :priority {p}"));
        }
        out.push('\n');
        write_node(node, auto_id, indent + 1, false, out);
        out.push(')');
        return;
    }
    out.push('(');
    out.push_str(node.kind.name());
    if node.id != *auto_id {
        out.push_str(&format!(" :id {}", quote_id(node.id.as_str())));
    }
    match node.kind {
        NodeKind::Action | NodeKind::Condition => {
            let name = node.leaf_ref.as_deref().unwrap_or("_");
            out.push_str(&format!(" {name})"));
        }
        _ => {
            if node.kind == NodeKind::Parallel {
                if let Some(t) = node.success_threshold.filter(|&t| t != node.children.len()) {
                    out.push_str(&format!(" :threshold {t}"));
                }
            }
            let mutex = node.kind == NodeKind::ParallelMutex;
            for (i, child) in node.children.iter().enumerate() {
                out.push('\n');
                let child_auto = id_path_child(&node.id, auto_id, i);
                write_node(child, &child_auto, indent + 1, mutex, out);
            }
            out.push(')');
        }
    }
}

fn quote_id(id: &str) -> String {
    format!("\"{}\"", id.replace('\\', "\\\\").replace('"', "\\\""))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sync_pair() {
        let tree = parse("(parallel-sync (action Navigate) (action Seek))").unwrap();
        assert_eq!(tree.kind, NodeKind::ParallelSync);
        assert_eq!(tree.id.as_str(), "0");
        assert_eq!(tree.children.len(), 2);
        assert_eq!(tree.children[0].leaf_ref.as_deref(), Some("Navigate"));
        assert_eq!(tree.children[1].id.as_str(), "0.1");
    }

    #[test]
    fn parses_mutex_with_priorities() {
        let src = "(parallel-mutex\n  (child :priority 1 (action MonitorPeople))\n  (child (action MonitorLight)))";
        let tree = parse(src).unwrap();
        assert_eq!(tree.kind, NodeKind::ParallelMutex);
        assert_eq!(tree.children.len(), 2);
        assert_eq!(tree.children[0].base_priority, Some(1));
        assert_eq!(tree.children[1].base_priority, None);
    }

    #[test]
    fn single_child_mutex_is_valid() {
        let tree = parse("(parallel-mutex (child :priority 1 (action MonitorPeople)))").unwrap();
        assert_eq!(tree.children.len(), 1);
    }

    #[test]
    fn empty_operator_is_a_positioned_error() {
        let err = parse("(seq)").unwrap_err();
        assert!(err.message.contains(">=1 child"));
        assert_eq!(err.span, Span { line: 1, column: 1 });
    }

    #[test]
    fn unbalanced_parens_reported() {
        let err = parse("(seq (action A)").unwrap_err();
        assert!(err.message.contains("unbalanced"));
    }

    #[test]
    fn unknown_form_reported_with_position() {
        let err = parse("(seq\n  (widget A))").unwrap_err();
        assert!(err.message.contains("unknown form `widget`"));
        assert_eq!(err.span.line, 2);
        assert_eq!(err.span.column, 4);
    }

    #[test]
    fn duplicate_explicit_id_rejected() {
        let err = parse("(seq (action :id x A) (action :id x B))").unwrap_err();
        assert!(err.message.contains("duplicate :id"));
    }

    #[test]
    fn bad_leaf_name_rejected() {
        assert!(parse("(action 1bad)").is_err());
        assert!(parse("(action ok-name_2)").is_ok());
    }

    #[test]
    fn comments_and_whitespace_ignored() {
        let src = "; a tree\n(seq ; trailing\n  (action A)\n)";
        assert!(parse(src).is_ok());
    }

    #[test]
    fn threshold_parsed_and_leaf_serialized_exactly() {
        let tree = parse("(parallel :threshold 2 (action A) (action B) (action C))").unwrap();
        assert_eq!(tree.success_threshold, Some(2));
        assert_eq!(
            serialize(&NodeSpec::action("0", "Navigate")),
            "(action Navigate)\n"
        );
    }

    #[test]
    fn canonical_round_trip() {
        let src = "(parallel-mutex\n  (child :priority 1\n    (fallback\n      (condition NoPeopleInFront)\n      (action AskPeopleToMove)))\n  (child\n    (parallel-sync\n      (action Navigate)\n      (action Seek))))\n";
        let tree = parse(src).unwrap();
        let printed = serialize(&tree);
        assert_eq!(printed, src);
        let reparsed = parse(&printed).unwrap();
        assert!(reparsed.structurally_eq(&tree));
    }

    #[test]
    fn explicit_ids_round_trip() {
        let src = "(seq :id \"root\"\n  (action :id \"go\" A)\n  (action B))\n";
        let tree = parse(src).unwrap();
        assert_eq!(tree.id.as_str(), "root");
        assert_eq!(tree.children[0].id.as_str(), "go");
        // Child B keeps a positional path under the overridden parent id.
        assert_eq!(tree.children[1].id.as_str(), "root.1");
        let printed = serialize(&tree);
        let reparsed = parse(&printed).unwrap();
        assert!(reparsed.structurally_eq(&tree));
    }

    #[test]
    fn document_records_per_node_spans() {
        let doc = TreeDocument::parse("(seq\n  (action A)\n  (condition B))").unwrap();
        assert_eq!(
            doc.span_of(&NodeId::new("0")),
            Some(Span { line: 1, column: 1 })
        );
        assert_eq!(
            doc.span_of(&NodeId::new("0.1")),
            Some(Span { line: 3, column: 3 })
        );
        assert_eq!(doc.span_of(&NodeId::new("9")), None);
    }

    #[test]
    fn non_default_threshold_is_emitted() {
        let tree = NodeSpec::operator(
            "0",
            NodeKind::Parallel,
            vec![
                NodeSpec::action("0.0", "A"),
                NodeSpec::action("0.1", "B"),
                NodeSpec::action("0.2", "C"),
            ],
        )
        .with_threshold(2);
        let printed = serialize(&tree);
        assert!(printed.contains(":threshold 2"));
        assert!(parse(&printed).unwrap().structurally_eq(&tree));
    }
}
