//! Declaration-pattern recognition over the significant tokens of a snippet.
//!
//! This is not a parser. It recognizes the declaration shapes that occur in
//! method-scope code (method header, parameters, local variables, loop and
//! catch variables, lambda and comprehension parameters) and records each
//! declaration together with the region where it is in scope.

use std::collections::{BTreeMap, HashSet};

use super::{IdentKind, IdentifierInfo, Lang, Token, TokenKind};

const JAVA_PRIMITIVES: &[&str] = &[
    "boolean", "byte", "char", "short", "int", "long", "float", "double", "void",
];

const PY_COMPOUND: &[&str] = &[
    "if", "elif", "else", "for", "while", "with", "try", "except", "finally", "def", "class",
    "async",
];

const PY_RECEIVERS: &[&str] = &["self", "cls"];

#[derive(Debug, Clone)]
pub(crate) struct Decl {
    pub name: String,
    pub kind: IdentKind,
    /// Significant-token index of the declaring name.
    pub at: usize,
    /// Significant-token range `[start, end)` where the name is bound.
    pub scope: (usize, usize),
    /// The name slot holds a reserved word, which no compiler would accept.
    pub reserved: bool,
}

pub(crate) struct Analysis {
    tokens: Vec<Token>,
    lang: Lang,
    /// Indices into `tokens` of the non-trivia tokens.
    sig: Vec<usize>,
    matching: Vec<Option<usize>>,
    enclosing: Vec<Option<usize>>,
    balanced: bool,
    def_parens: HashSet<usize>,
    header_name: Option<usize>,
    pub decls: Vec<Decl>,
}

fn is_opener(s: &str) -> bool {
    matches!(s, "(" | "[" | "{")
}

fn closer_for(s: &str) -> &'static str {
    match s {
        "(" => ")",
        "[" => "]",
        _ => "}",
    }
}

impl Analysis {
    pub fn new(tokens: Vec<Token>, lang: Lang) -> Self {
        let sig: Vec<usize> = tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| !t.is_trivia())
            .map(|(i, _)| i)
            .collect();
        let mut an = Analysis {
            matching: vec![None; sig.len()],
            enclosing: vec![None; sig.len()],
            tokens,
            lang,
            sig,
            balanced: true,
            def_parens: HashSet::new(),
            header_name: None,
            decls: Vec::new(),
        };
        an.match_brackets();
        match lang {
            Lang::Java => an.analyze_java(),
            Lang::Python => an.analyze_python(),
        }
        an
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn sig_len(&self) -> usize {
        self.sig.len()
    }

    pub fn sig_token(&self, i: usize) -> &Token {
        &self.tokens[self.sig[i]]
    }

    pub fn balanced(&self) -> bool {
        self.balanced
    }

    pub fn text(&self, i: usize) -> &str {
        self.sig
            .get(i)
            .map(|&t| self.tokens[t].text.as_str())
            .unwrap_or("")
    }

    fn kind(&self, i: usize) -> Option<TokenKind> {
        self.sig.get(i).map(|&t| self.tokens[t].kind)
    }

    fn is_ident(&self, i: usize) -> bool {
        self.kind(i) == Some(TokenKind::Identifier)
    }

    /// Identifier or reserved word: anything that can sit in a name slot.
    fn is_word(&self, i: usize) -> bool {
        match self.kind(i) {
            Some(TokenKind::Identifier | TokenKind::Keyword) => true,
            Some(TokenKind::Literal) => matches!(self.text(i), "true" | "false" | "null"),
            _ => false,
        }
    }

    fn prev_text(&self, i: usize) -> &str {
        if i == 0 {
            ""
        } else {
            self.text(i - 1)
        }
    }

    fn close_of(&self, open: usize) -> usize {
        self.matching[open].unwrap_or(self.sig.len().saturating_sub(1))
    }

    fn match_brackets(&mut self) {
        let mut stack: Vec<usize> = Vec::new();
        for i in 0..self.sig.len() {
            self.enclosing[i] = stack.last().copied();
            let t = self.text(i).to_string();
            if is_opener(&t) {
                stack.push(i);
            } else if matches!(t.as_str(), ")" | "]" | "}") {
                match stack.last() {
                    Some(&open) if closer_for(self.text(open)) == t => {
                        stack.pop();
                        self.matching[open] = Some(i);
                        self.matching[i] = Some(open);
                    }
                    _ => self.balanced = false,
                }
            }
        }
        if !stack.is_empty() {
            self.balanced = false;
        }
    }

    fn declare(&mut self, at: usize, kind: IdentKind, scope: (usize, usize)) {
        if !self.is_word(at) {
            return;
        }
        self.decls.push(Decl {
            name: self.text(at).to_string(),
            kind,
            at,
            scope,
            reserved: !self.is_ident(at),
        });
    }

    /// Significant-token indices of every occurrence of a declared `name`.
    pub fn occurrence_indices(&self, name: &str) -> Vec<usize> {
        let decl_sites: HashSet<usize> = self
            .decls
            .iter()
            .filter(|d| d.name == name)
            .map(|d| d.at)
            .collect();
        let has_method = self
            .decls
            .iter()
            .any(|d| d.name == name && d.kind == IdentKind::MethodName);
        let has_var = self
            .decls
            .iter()
            .any(|d| d.name == name && d.kind != IdentKind::MethodName);
        (0..self.sig.len())
            .filter(|&i| self.is_ident(i) && self.text(i) == name)
            .filter(|&i| {
                if decl_sites.contains(&i) {
                    return true;
                }
                match self.lang {
                    Lang::Java => {
                        if matches!(self.prev_text(i), "." | "@" | "::") {
                            return false;
                        }
                        let call = self.text(i + 1) == "(";
                        (has_method && call) || (has_var && !call)
                    }
                    Lang::Python => {
                        if self.prev_text(i) == "." {
                            return false;
                        }
                        !self.is_keyword_argument(i)
                    }
                }
            })
            .collect()
    }

    fn is_keyword_argument(&self, i: usize) -> bool {
        if self.text(i + 1) != "=" {
            return false;
        }
        match self.enclosing[i] {
            Some(open) => self.text(open) == "(" && !self.def_parens.contains(&open),
            None => false,
        }
    }

    pub fn is_decl_site(&self, i: usize) -> bool {
        self.decls.iter().any(|d| d.at == i)
    }

    /// Declared identifiers grouped by name, ordered by first declaration.
    pub fn identifiers(&self) -> Vec<IdentifierInfo> {
        let mut first: BTreeMap<usize, (&str, IdentKind)> = BTreeMap::new();
        let mut seen = HashSet::new();
        let mut decls: Vec<&Decl> = self.decls.iter().filter(|d| !d.reserved).collect();
        decls.sort_by_key(|d| d.at);
        for d in decls {
            if seen.insert(d.name.as_str()) {
                first.insert(d.at, (d.name.as_str(), d.kind));
            }
        }
        first
            .into_values()
            .map(|(name, kind)| IdentifierInfo {
                name: name.to_string(),
                kind,
                occurrences: self
                    .occurrence_indices(name)
                    .into_iter()
                    .map(|i| self.sig_token(i).span)
                    .collect(),
                single_letter: name.chars().count() == 1,
            })
            .collect()
    }

    // ---------------------------------------------------------------- Java

    fn analyze_java(&mut self) {
        let n = self.sig.len();
        let mut i = 0;
        let mut body_from = 0;
        while i < n {
            match self.text(i) {
                "@" => {
                    i = self.skip_annotation(i);
                    continue;
                }
                "{" | ";" | "=" => break,
                "(" => {
                    if i > 0 && self.is_word(i - 1) {
                        self.header_name = Some(i - 1);
                        self.declare(i - 1, IdentKind::MethodName, (0, n));
                        self.java_params(i, (0, n));
                        body_from = self.close_of(i) + 1;
                    }
                    break;
                }
                _ => i += 1,
            }
        }
        self.java_body(body_from);
    }

    fn skip_annotation(&self, at: usize) -> usize {
        let mut j = at + 1;
        if self.is_ident(j) {
            j += 1;
            while self.text(j) == "." && self.is_ident(j + 1) {
                j += 2;
            }
        }
        if self.text(j) == "(" {
            j = self.close_of(j) + 1;
        }
        j
    }

    fn java_params(&mut self, open: usize, scope: (usize, usize)) {
        let close = self.close_of(open);
        let mut depth = 0i32;
        let mut seg_start = open + 1;
        let mut segments = Vec::new();
        for j in open + 1..close {
            match self.text(j) {
                "<" | "(" | "[" => depth += 1,
                ">" | ")" | "]" => depth -= 1,
                ">>" => depth -= 2,
                ">>>" => depth -= 3,
                "," if depth == 0 => {
                    segments.push((seg_start, j));
                    seg_start = j + 1;
                }
                _ => {}
            }
        }
        segments.push((seg_start, close));
        for (a, b) in segments {
            if b <= a + 1 {
                continue;
            }
            if let Some(k) = (a..b).rev().find(|&k| self.is_word(k)) {
                if k > a {
                    self.declare(k, IdentKind::Parameter, scope);
                }
            }
        }
    }

    fn java_body(&mut self, from: usize) {
        let n = self.sig.len();
        let mut braces: Vec<usize> = Vec::new();
        let mut case_label = false;
        let mut i = from;
        while i < n {
            let prev = self.prev_text(i).to_string();
            let stmt_start = i == from && from == 0
                || matches!(prev.as_str(), "{" | "}" | ";")
                || (prev == ":" && case_label)
                || (prev == "(" && i >= 2 && matches!(self.text(i - 2), "for" | "try"));
            if stmt_start {
                case_label = matches!(self.text(i), "case" | "default");
                self.java_local_decl(i, &braces);
            }
            match self.text(i) {
                "catch" if self.text(i + 1) == "(" => self.java_catch(i),
                "->" => self.java_lambda(i),
                "{" => braces.push(i),
                "}" => {
                    braces.pop();
                }
                _ => {}
            }
            i += 1;
        }
    }

    fn java_type(&self, j: usize) -> Option<usize> {
        if !(self.is_ident(j) || JAVA_PRIMITIVES.contains(&self.text(j))) {
            return None;
        }
        let mut k = j + 1;
        while self.text(k) == "." && self.is_ident(k + 1) {
            k += 2;
        }
        if self.text(k) == "<" {
            k = self.skip_type_args(k)?;
        }
        while self.text(k) == "[" && self.text(k + 1) == "]" {
            k += 2;
        }
        if self.text(k) == "..." {
            k += 1;
        }
        Some(k)
    }

    fn skip_type_args(&self, open: usize) -> Option<usize> {
        let mut depth = 0i32;
        let mut k = open;
        while k < self.sig.len() {
            let t = self.text(k);
            match t {
                "<" => depth += 1,
                ">" => depth -= 1,
                ">>" => depth -= 2,
                ">>>" => depth -= 3,
                "." | "," | "?" | "&" | "[" | "]" => {}
                "extends" | "super" => {}
                _ if self.is_ident(k) || JAVA_PRIMITIVES.contains(&t) => {}
                _ => return None,
            }
            if depth == 0 {
                return Some(k + 1);
            }
            if depth < 0 {
                return None;
            }
            k += 1;
        }
        None
    }

    /// Index of the first `,` / `;` / unmatched closer at nesting depth 0.
    fn skip_expr(&self, from: usize) -> usize {
        let mut depth = 0i32;
        let mut k = from;
        while k < self.sig.len() {
            match self.text(k) {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => {
                    if depth == 0 {
                        return k;
                    }
                    depth -= 1;
                }
                "," | ";" if depth == 0 => return k,
                _ => {}
            }
            k += 1;
        }
        k
    }

    fn java_local_decl(&mut self, start: usize, braces: &[usize]) {
        let mut j = start;
        loop {
            if self.text(j) == "final" {
                j += 1;
            } else if self.text(j) == "@" {
                j = self.skip_annotation(j);
            } else {
                break;
            }
        }
        let Some(mut k) = self.java_type(j) else {
            return;
        };
        let mut names = Vec::new();
        loop {
            if !self.is_word(k) {
                break;
            }
            let mut m = k + 1;
            while self.text(m) == "[" && self.text(m + 1) == "]" {
                m += 2;
            }
            if !matches!(self.text(m), "=" | ";" | "," | ":" | ")") {
                break;
            }
            names.push(k);
            if self.text(m) == "=" {
                m = self.skip_expr(m + 1);
            }
            if self.text(m) == "," {
                k = m + 1;
                continue;
            }
            break;
        }
        if names.is_empty() {
            return;
        }
        let scope = self.java_local_scope(start, braces);
        for at in names {
            self.declare(at, IdentKind::Variable, scope);
        }
    }

    fn java_local_scope(&self, start: usize, braces: &[usize]) -> (usize, usize) {
        let n = self.sig.len();
        if self.prev_text(start) == "(" && start >= 2 {
            let head = start - 2;
            let close = self.close_of(start - 1);
            let after = close + 1;
            match self.text(head) {
                "for" => {
                    let end = if self.text(after) == "{" {
                        self.close_of(after) + 1
                    } else {
                        (self.skip_semicolon(after) + 1).min(n)
                    };
                    return (head, end);
                }
                "try" => {
                    let end = if self.text(after) == "{" {
                        self.close_of(after) + 1
                    } else {
                        n
                    };
                    return (head, end);
                }
                _ => {}
            }
        }
        match braces.last() {
            Some(&open) => (open, self.close_of(open) + 1),
            None => (0, n),
        }
    }

    fn skip_semicolon(&self, from: usize) -> usize {
        let mut depth = 0i32;
        let mut k = from;
        while k < self.sig.len() {
            match self.text(k) {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => depth -= 1,
                ";" if depth == 0 => return k,
                _ => {}
            }
            k += 1;
        }
        k
    }

    fn java_catch(&mut self, at: usize) {
        let open = at + 1;
        let close = self.close_of(open);
        let mut j = open + 1;
        while self.text(j) == "final" || self.text(j) == "@" {
            j = if self.text(j) == "@" {
                self.skip_annotation(j)
            } else {
                j + 1
            };
        }
        let Some(mut k) = self.java_type(j) else {
            return;
        };
        while self.text(k) == "|" {
            match self.java_type(k + 1) {
                Some(next) => k = next,
                None => return,
            }
        }
        if k + 1 != close {
            return;
        }
        let end = if self.text(close + 1) == "{" {
            self.close_of(close + 1) + 1
        } else {
            self.sig.len()
        };
        self.declare(k, IdentKind::Variable, (at, end));
    }

    fn java_lambda(&mut self, arrow: usize) {
        if arrow == 0 {
            return;
        }
        let prev = arrow - 1;
        let body_end = if self.text(arrow + 1) == "{" {
            self.close_of(arrow + 1) + 1
        } else {
            self.skip_expr(arrow + 1)
        };
        if self.text(prev) == ")" {
            let Some(open) = self.matching[prev] else {
                return;
            };
            let params: Vec<usize> = (open + 1..prev)
                .filter(|&j| self.enclosing[j] == Some(open))
                .filter(|&j| self.is_word(j) && matches!(self.text(j + 1), "," | ")"))
                .collect();
            for j in params {
                self.declare(j, IdentKind::Variable, (open, body_end));
            }
        } else if self.is_ident(prev)
            && !matches!(self.prev_text(prev), "." | "case" | "default" | ",")
        {
            self.declare(prev, IdentKind::Variable, (prev, body_end));
        }
    }

    // -------------------------------------------------------------- Python

    fn analyze_python(&mut self) {
        let whole = (0, self.sig.len());
        let mut have_method = false;
        for stmt in self.python_statements() {
            let Some(&first) = stmt.first() else {
                continue;
            };
            let mut head = first;
            if self.text(head) == "async" {
                head += 1;
            }
            match self.text(head) {
                "def" => {
                    let name = head + 1;
                    let kind = if have_method {
                        IdentKind::Variable
                    } else {
                        IdentKind::MethodName
                    };
                    have_method = true;
                    if self.header_name.is_none() {
                        self.header_name = Some(name);
                    }
                    self.declare(name, kind, whole);
                    if self.text(name + 1) == "(" {
                        self.def_parens.insert(name + 1);
                        self.python_params(name + 1);
                    }
                }
                "class" => {}
                t if PY_COMPOUND.contains(&t) => {}
                _ => self.python_assignment(&stmt),
            }
            self.python_binders(&stmt);
        }
    }

    /// Splits the significant tokens into simple statements and compound headers.
    fn python_statements(&self) -> Vec<Vec<usize>> {
        let mut stmts: Vec<Vec<usize>> = Vec::new();
        let mut cur: Vec<usize> = Vec::new();
        let mut depth = 0i32;
        let mut lambdas = 0;
        let mut sig_pos = 0;
        let mut newline_pending = false;
        for (ti, tok) in self.tokens.iter().enumerate() {
            if tok.kind == TokenKind::Whitespace {
                if depth <= 0 && tok.text.contains('\n') && !tok.text.starts_with('\\') {
                    newline_pending = true;
                }
                continue;
            }
            if tok.kind == TokenKind::CommentTrivia {
                continue;
            }
            debug_assert_eq!(self.sig[sig_pos], ti);
            let i = sig_pos;
            sig_pos += 1;
            if newline_pending && !cur.is_empty() {
                stmts.push(std::mem::take(&mut cur));
                lambdas = 0;
            }
            newline_pending = false;
            cur.push(i);
            let t = tok.text.as_str();
            match t {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => depth -= 1,
                "lambda" if depth == 0 => lambdas += 1,
                ";" if depth == 0 => {
                    cur.pop();
                    stmts.push(std::mem::take(&mut cur));
                    lambdas = 0;
                }
                ":" if depth == 0 => {
                    if lambdas > 0 {
                        lambdas -= 1;
                    } else if PY_COMPOUND.contains(&self.text(cur[0])) {
                        stmts.push(std::mem::take(&mut cur));
                    }
                }
                _ => {}
            }
        }
        if !cur.is_empty() {
            stmts.push(cur);
        }
        stmts
    }

    fn python_params(&mut self, open: usize) {
        let close = self.close_of(open);
        let whole = (0, self.sig.len());
        let params: Vec<(usize, usize)> = self.split_depth0(open + 1, close, ",");
        for (a, b) in params {
            self.python_param(a, b, whole);
        }
    }

    fn python_param(&mut self, a: usize, b: usize, scope: (usize, usize)) {
        let mut j = a;
        while j < b && matches!(self.text(j), "*" | "**") {
            j += 1;
        }
        if j >= b || !self.is_word(j) || PY_RECEIVERS.contains(&self.text(j)) {
            return;
        }
        self.declare(j, IdentKind::Parameter, scope);
    }

    /// Splits `[from, to)` at depth-0 occurrences of `sep`.
    fn split_depth0(&self, from: usize, to: usize, sep: &str) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut depth = 0i32;
        let mut start = from;
        for j in from..to {
            match self.text(j) {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => depth -= 1,
                t if t == sep && depth == 0 => {
                    out.push((start, j));
                    start = j + 1;
                }
                _ => {}
            }
        }
        out.push((start, to));
        out
    }

    fn python_assignment(&mut self, stmt: &[usize]) {
        let whole = (0, self.sig.len());
        let (first, last) = (stmt[0], *stmt.last().expect("non-empty"));
        if stmt.len() >= 2 && self.is_word(first) && self.text(first + 1) == ":" {
            self.declare(first, IdentKind::Variable, whole);
            return;
        }
        let stop = stmt
            .iter()
            .copied()
            .find(|&j| self.text(j) == "lambda")
            .unwrap_or(last + 1);
        let segments = self.split_depth0(first, stop, "=");
        if segments.len() < 2 {
            return;
        }
        for &(a, b) in &segments[..segments.len() - 1] {
            self.declare_targets(a, b);
        }
    }

    /// Declares the bare names in a target list such as `a, (b, *c)`.
    fn declare_targets(&mut self, a: usize, b: usize) {
        let whole = (0, self.sig.len());
        let mut stack: Vec<bool> = Vec::new();
        let mut found = Vec::new();
        for j in a..b {
            let prev_ok = j == a || matches!(self.text(j - 1), "," | "(" | "[" | "*");
            match self.text(j) {
                "(" | "[" => stack.push(prev_ok && stack.iter().all(|&t| t)),
                ")" | "]" => {
                    stack.pop();
                }
                _ if self.is_word(j) => {
                    let next_ok = j + 1 == b || matches!(self.text(j + 1), "," | ")" | "]");
                    if prev_ok && next_ok && stack.iter().all(|&t| t) {
                        found.push(j);
                    }
                }
                _ => {}
            }
        }
        for j in found {
            self.declare(j, IdentKind::Variable, whole);
        }
    }

    /// `for` targets, `as` names, lambda parameters and walrus targets.
    fn python_binders(&mut self, stmt: &[usize]) {
        let whole = (0, self.sig.len());
        let (first, last) = (stmt[0], *stmt.last().expect("non-empty"));
        for j in first..=last {
            match self.text(j) {
                "for" => {
                    let depth = self.enclosing[j];
                    if let Some(end) =
                        (j + 1..=last).find(|&k| self.text(k) == "in" && self.enclosing[k] == depth)
                    {
                        self.declare_targets(j + 1, end);
                    }
                }
                "as" if self.is_word(j + 1) && self.text(j + 2) != "." => {
                    self.declare(j + 1, IdentKind::Variable, whole);
                }
                "lambda" => {
                    let depth = self.enclosing[j];
                    if let Some(colon) =
                        (j + 1..=last).find(|&k| self.text(k) == ":" && self.enclosing[k] == depth)
                    {
                        for (a, b) in self.split_depth0(j + 1, colon, ",") {
                            self.python_param(a, b, whole);
                        }
                    }
                }
                ":=" if j > first && self.is_word(j - 1) => {
                    self.declare(j - 1, IdentKind::Variable, whole);
                }
                _ => {}
            }
        }
    }
}
