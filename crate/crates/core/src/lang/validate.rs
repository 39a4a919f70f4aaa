//! Syntactic validity proxy.
//!
//! A snippet is valid when it lexes, its brackets balance, no declaration
//! slot holds a reserved word, and (Java) locals are neither redeclared in an
//! overlapping scope nor used before their declaration, or (Python) the
//! indentation structure is consistent. The mask token `<unk>` is exempt
//! from the Java scoping rules.

use super::analysis::Analysis;
use super::{tokenize, IdentKind, Lang, TokenKind, UNK};

pub fn validate(code: &str, lang: Lang) -> bool {
    let Ok(tokens) = tokenize(code, lang) else {
        return false;
    };
    let an = Analysis::new(tokens, lang);
    if an.sig_len() == 0 || !an.balanced() {
        return false;
    }
    if an.decls.iter().any(|d| d.reserved) || !operators_have_operands(&an, lang) {
        return false;
    }
    match lang {
        Lang::Java => java_scoping_ok(&an),
        Lang::Python => python_indentation_ok(&an),
    }
}

/// Rejects infix/assignment operators with nothing to their right,
/// as in `int x = ;` or `f(a +)`.
fn operators_have_operands(an: &Analysis, lang: Lang) -> bool {
    let exempt: &[&str] = match lang {
        Lang::Java => &["++", "--", ">", ">>", ">>>", "?", ":", "..."],
        Lang::Python => &["*", "**", ":", "..."],
    };
    let n = an.sig_len();
    (0..n).all(|i| {
        let tok = an.sig_token(i);
        if tok.kind != TokenKind::Operator || exempt.contains(&tok.text.as_str()) {
            return true;
        }
        i + 1 < n && !matches!(an.text(i + 1), ";" | ")" | "," | "]" | "}")
    })
}

fn java_scoping_ok(an: &Analysis) -> bool {
    let locals: Vec<_> = an
        .decls
        .iter()
        .filter(|d| d.kind != IdentKind::MethodName && d.name != UNK)
        .collect();
    for (i, a) in locals.iter().enumerate() {
        for b in &locals[i + 1..] {
            if a.name != b.name {
                continue;
            }
            let b_in_a = b.at >= a.scope.0 && b.at < a.scope.1;
            let a_in_b = a.at >= b.scope.0 && a.at < b.scope.1;
            if b_in_a || a_in_b {
                return false;
            }
        }
    }
    let mut names: Vec<&str> = locals.iter().map(|d| d.name.as_str()).collect();
    names.sort_unstable();
    names.dedup();
    for name in names {
        let decls: Vec<_> = locals.iter().filter(|d| d.name == name).collect();
        for u in an.occurrence_indices(name) {
            if an.is_decl_site(u) {
                continue;
            }
            let premature = decls.iter().any(|d| d.scope.0 <= u && u < d.at);
            let bound = decls
                .iter()
                .any(|d| d.at <= u && u < d.scope.1 && d.scope.0 <= u);
            if premature && !bound {
                return false;
            }
        }
    }
    true
}

fn indent_width(ws: &str) -> usize {
    let mut w = 0;
    for c in ws.chars() {
        match c {
            '\t' => w = (w / 8 + 1) * 8,
            ' ' | '\x0c' => w += 1,
            _ => {}
        }
    }
    w
}

/// Logical lines as (indent width, last significant token text).
fn python_logical_lines(an: &Analysis) -> Vec<(usize, String)> {
    let mut lines: Vec<(usize, String)> = Vec::new();
    let mut depth = 0i32;
    let mut pending: Option<usize> = Some(0);
    for tok in an.tokens() {
        match tok.kind {
            TokenKind::Whitespace => {
                if depth > 0 || tok.text.starts_with('\\') {
                    continue;
                }
                if let Some(pos) = tok.text.rfind('\n') {
                    pending = Some(indent_width(&tok.text[pos + 1..]));
                } else if lines.is_empty() {
                    pending = Some(indent_width(&tok.text));
                }
            }
            TokenKind::CommentTrivia => {}
            _ => {
                if let Some(width) = pending.take() {
                    lines.push((width, String::new()));
                }
                match tok.text.as_str() {
                    "(" | "[" | "{" => depth += 1,
                    ")" | "]" | "}" => depth -= 1,
                    _ => {}
                }
                if let Some(line) = lines.last_mut() {
                    line.1.clone_from(&tok.text);
                }
            }
        }
    }
    lines
}

fn python_indentation_ok(an: &Analysis) -> bool {
    let lines = python_logical_lines(an);
    let Some(&(base, _)) = lines.first() else {
        return false;
    };
    let mut stack = vec![base];
    let mut expect_block = false;
    for (width, last) in &lines {
        let top = *stack.last().expect("stack never empties");
        if expect_block {
            if *width <= top {
                return false;
            }
            stack.push(*width);
        } else if *width > top {
            return false;
        } else {
            while stack.last().is_some_and(|&w| w > *width) {
                stack.pop();
            }
            if stack.last() != Some(width) {
                return false;
            }
        }
        expect_block = last == ":";
    }
    !expect_block
}
