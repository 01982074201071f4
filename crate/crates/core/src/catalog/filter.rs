//! Tag filter expressions.
//!
//! ```text
//! expr  := term (("and" | "or") term)*      "and" binds tighter than "or"
//! term  := "not"? atom
//! atom  := key "=" value | "*" | "(" expr ")" | word
//! ```
//!
//! Keys and values are bare words or double-quoted strings (`\"` and `\\`
//! escapes). A lone word `W` means `fclass=W`. Keywords are matched without
//! regard to case; quote a value to use a keyword literally.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::Tags;

/// Key a lone word is matched against.
pub const SHORTHAND_KEY: &str = "fclass";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TagFilter {
    Any,
    Eq { key: String, value: String },
    Not(Box<TagFilter>),
    And(Box<TagFilter>, Box<TagFilter>),
    Or(Box<TagFilter>, Box<TagFilter>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FilterError {
    #[error("empty filter expression")]
    Empty,
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
}

impl TagFilter {
    pub fn eq(key: impl Into<String>, value: impl Into<String>) -> Self {
        TagFilter::Eq { key: key.into(), value: value.into() }
    }

    pub fn and(self, other: TagFilter) -> Self {
        TagFilter::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: TagFilter) -> Self {
        TagFilter::Or(Box::new(self), Box::new(other))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        TagFilter::Not(Box::new(self))
    }

    pub fn matches(&self, tags: &Tags) -> bool {
        match self {
            TagFilter::Any => true,
            TagFilter::Eq { key, value } => tags.get(key).is_some_and(|v| v == value),
            TagFilter::Not(inner) => !inner.matches(tags),
            TagFilter::And(l, r) => l.matches(tags) && r.matches(tags),
            TagFilter::Or(l, r) => l.matches(tags) || r.matches(tags),
        }
    }

    /// The value of a single `Eq` leaf, if that is all the filter is.
    pub fn single_tag(&self) -> Option<&str> {
        match self {
            TagFilter::Eq { value, .. } => Some(value),
            _ => None,
        }
    }

    /// Every `Eq` leaf, left to right.
    pub fn leaves(&self) -> Vec<(&str, &str)> {
        fn walk<'a>(f: &'a TagFilter, out: &mut Vec<(&'a str, &'a str)>) {
            match f {
                TagFilter::Any => {}
                TagFilter::Eq { key, value } => out.push((key, value)),
                TagFilter::Not(inner) => walk(inner, out),
                TagFilter::And(l, r) | TagFilter::Or(l, r) => {
                    walk(l, out);
                    walk(r, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }
}

pub fn parse_filter(expr: &str) -> Result<TagFilter, FilterError> {
    let tokens = lex(expr)?;
    if tokens.is_empty() {
        return Err(FilterError::Empty);
    }
    let mut parser = Parser { tokens: &tokens, pos: 0, end: expr.len() };
    let filter = parser.expr()?;
    if let Some(tok) = parser.peek() {
        return Err(syntax(tok.at, format!("unexpected {}", tok.kind.describe())));
    }
    Ok(filter)
}

pub fn eval_filter(filter: &TagFilter, tags: &Tags) -> bool {
    filter.matches(tags)
}

impl FromStr for TagFilter {
    type Err = FilterError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_filter(s)
    }
}

fn syntax(position: usize, message: impl Into<String>) -> FilterError {
    FilterError::Syntax { position, message: message.into() }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Word(String),
    Quoted(String),
    Equals,
    Star,
    Open,
    Close,
    And,
    Or,
    Not,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Word(w) => format!("word '{w}'"),
            TokenKind::Quoted(s) => format!("string \"{s}\""),
            TokenKind::Equals => "'='".into(),
            TokenKind::Star => "'*'".into(),
            TokenKind::Open => "'('".into(),
            TokenKind::Close => "')'".into(),
            TokenKind::And => "'and'".into(),
            TokenKind::Or => "'or'".into(),
            TokenKind::Not => "'not'".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    at: usize,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | ':' | '/')
}

fn keyword(word: &str) -> Option<TokenKind> {
    if word.eq_ignore_ascii_case("and") {
        Some(TokenKind::And)
    } else if word.eq_ignore_ascii_case("or") {
        Some(TokenKind::Or)
    } else if word.eq_ignore_ascii_case("not") {
        Some(TokenKind::Not)
    } else {
        None
    }
}

fn lex(src: &str) -> Result<Vec<Token>, FilterError> {
    let mut tokens = Vec::new();
    let mut chars = src.char_indices().peekable();
    while let Some(&(at, c)) = chars.peek() {
        let kind = match c {
            c if c.is_whitespace() => {
                chars.next();
                continue;
            }
            '=' => {
                chars.next();
                TokenKind::Equals
            }
            '*' => {
                chars.next();
                TokenKind::Star
            }
            '(' => {
                chars.next();
                TokenKind::Open
            }
            ')' => {
                chars.next();
                TokenKind::Close
            }
            '"' => {
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        None => return Err(syntax(at, "unterminated string")),
                        Some((_, '"')) => break,
                        Some((esc, '\\')) => match chars.next() {
                            Some((_, '"')) => s.push('"'),
                            Some((_, '\\')) => s.push('\\'),
                            _ => return Err(syntax(esc, "invalid escape in string")),
                        },
                        Some((_, ch)) => s.push(ch),
                    }
                }
                TokenKind::Quoted(s)
            }
            c if is_word_char(c) => {
                let mut end = at;
                while let Some(&(i, ch)) = chars.peek() {
                    if !is_word_char(ch) {
                        break;
                    }
                    end = i + ch.len_utf8();
                    chars.next();
                }
                let word = &src[at..end];
                keyword(word).unwrap_or_else(|| TokenKind::Word(word.to_string()))
            }
            other => return Err(syntax(at, format!("unexpected character '{other}'"))),
        };
        tokens.push(Token { kind, at });
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn position(&self) -> usize {
        self.peek().map_or(self.end, |t| t.at)
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek().is_some_and(|t| &t.kind == kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<TagFilter, FilterError> {
        let mut lhs = self.conjunction()?;
        while self.eat(&TokenKind::Or) {
            let rhs = self.conjunction()?;
            lhs = lhs.or(rhs);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<TagFilter, FilterError> {
        let mut lhs = self.term()?;
        while self.eat(&TokenKind::And) {
            let rhs = self.term()?;
            lhs = lhs.and(rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<TagFilter, FilterError> {
        if self.eat(&TokenKind::Not) {
            Ok(self.atom()?.not())
        } else {
            self.atom()
        }
    }

    fn atom(&mut self) -> Result<TagFilter, FilterError> {
        let at = self.position();
        let Some(tok) = self.peek().cloned() else {
            return Err(syntax(at, "expected a tag, '*' or '('"));
        };
        self.pos += 1;
        match tok.kind {
            TokenKind::Star => Ok(TagFilter::Any),
            TokenKind::Open => {
                let inner = self.expr()?;
                if !self.eat(&TokenKind::Close) {
                    return Err(syntax(self.position(), "expected ')'"));
                }
                Ok(inner)
            }
            TokenKind::Word(first) | TokenKind::Quoted(first) => {
                if !self.eat(&TokenKind::Equals) {
                    if first.is_empty() {
                        return Err(syntax(at, "empty tag value"));
                    }
                    return Ok(TagFilter::eq(SHORTHAND_KEY, first));
                }
                if first.is_empty() {
                    return Err(syntax(at, "empty tag key"));
                }
                let vat = self.position();
                match self.peek().map(|t| t.kind.clone()) {
                    Some(TokenKind::Word(value)) | Some(TokenKind::Quoted(value)) => {
                        self.pos += 1;
                        Ok(TagFilter::eq(first, value))
                    }
                    _ => Err(syntax(vat, "expected a value after '='")),
                }
            }
            other => Err(syntax(at, format!("unexpected {}", other.describe()))),
        }
    }
}

fn write_literal(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    let bare = !s.is_empty() && s.chars().all(is_word_char) && keyword(s).is_none();
    if bare {
        return f.write_str(s);
    }
    f.write_str("\"")?;
    for ch in s.chars() {
        if matches!(ch, '"' | '\\') {
            f.write_str("\\")?;
        }
        write!(f, "{ch}")?;
    }
    f.write_str("\"")
}

fn write_wrapped(f: &mut fmt::Formatter<'_>, filter: &TagFilter, wrap: bool) -> fmt::Result {
    if wrap {
        write!(f, "({filter})")
    } else {
        write!(f, "{filter}")
    }
}

/// Canonical form: re-parses to an equal tree.
impl fmt::Display for TagFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TagFilter::Any => f.write_str("*"),
            TagFilter::Eq { key, value } => {
                write_literal(f, key)?;
                f.write_str("=")?;
                write_literal(f, value)
            }
            TagFilter::Not(inner) => {
                f.write_str("not ")?;
                let atomic = matches!(**inner, TagFilter::Any | TagFilter::Eq { .. });
                write_wrapped(f, inner, !atomic)
            }
            TagFilter::And(l, r) => {
                write_wrapped(f, l, matches!(**l, TagFilter::Or(..)))?;
                f.write_str(" and ")?;
                write_wrapped(f, r, matches!(**r, TagFilter::Or(..) | TagFilter::And(..)))
            }
            TagFilter::Or(l, r) => {
                write_wrapped(f, l, false)?;
                f.write_str(" or ")?;
                write_wrapped(f, r, matches!(**r, TagFilter::Or(..)))
            }
        }
    }
}
