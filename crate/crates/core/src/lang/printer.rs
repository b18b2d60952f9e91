//! Canonical pretty-printer. Its output parses back to an equal syntax tree.

use std::fmt::Write as _;

use super::ast::*;
use super::parser::is_keyword;
use super::value::write_str_literal;

const ATOM: u8 = 7;
const UNARY: u8 = 6;

fn level(e: &Expr) -> u8 {
    match e {
        Expr::If(..) | Expr::Quant(..) => 0,
        Expr::Binary(op, ..) => op.precedence(),
        Expr::Unary(..) => UNARY,
        _ => ATOM,
    }
}

/// Identifier or quoted string, whichever the parser reads back.
pub fn print_name(name: &str) -> String {
    let plain = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        && name != "_"
        && !is_keyword(name);
    if plain {
        name.to_owned()
    } else {
        let mut s = String::new();
        let _ = write_str_literal(&mut s, name);
        s
    }
}

pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e);
    out
}

fn write_child(out: &mut String, e: &Expr, min: u8) {
    if level(e) < min {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    } else {
        write_expr(out, e);
    }
}

fn write_list(out: &mut String, items: &[Expr]) {
    for (i, e) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_expr(out, e);
    }
}

fn write_pattern(out: &mut String, p: &Pattern) {
    match p {
        Pattern::Bind(n) => out.push_str(n),
        Pattern::Wildcard => out.push('_'),
        Pattern::Tuple(ps) => {
            out.push('(');
            for (i, p) in ps.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_pattern(out, p);
            }
            if ps.len() == 1 {
                out.push(',');
            }
            out.push(')');
        }
    }
}

fn write_expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Unit => out.push_str("()"),
        Expr::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Expr::Int(n) => {
            let _ = write!(out, "{n}");
        }
        Expr::Str(s) => {
            let _ = write_str_literal(out, s);
        }
        Expr::Name(n) => out.push_str(n),
        Expr::PointerLit(p) => {
            let _ = write!(out, "@{p}");
        }
        Expr::Tuple(es) => {
            out.push('(');
            write_list(out, es);
            if es.len() == 1 {
                out.push(',');
            }
            out.push(')');
        }
        Expr::Set(es) => {
            out.push('{');
            write_list(out, es);
            out.push('}');
        }
        Expr::List(es) => {
            out.push('[');
            write_list(out, es);
            out.push(']');
        }
        Expr::Record(fs) => {
            out.push('{');
            for (i, (k, e)) in fs.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                let _ = write!(out, "{k}: ");
                write_expr(out, e);
            }
            out.push('}');
        }
        Expr::Field(inner, f) => {
            write_child(out, inner, ATOM);
            let _ = write!(out, ".{f}");
        }
        Expr::Index(inner, i) => {
            write_child(out, inner, ATOM);
            let _ = write!(out, ".{i}");
        }
        Expr::Unary(UnOp::Not, inner) => {
            out.push('!');
            write_child(out, inner, UNARY);
        }
        // `-5` would read back as a literal, so only names go unparenthesized.
        Expr::Unary(UnOp::Neg, inner) => {
            out.push('-');
            if let Expr::Name(n) = &**inner {
                out.push_str(n);
            } else {
                out.push('(');
                write_expr(out, inner);
                out.push(')');
            }
        }
        Expr::Binary(op, l, r) => {
            let p = op.precedence();
            write_child(out, l, p.max(1));
            let _ = write!(out, " {} ", op.symbol());
            write_child(out, r, p + 1);
        }
        Expr::If(c, a, b) => {
            out.push_str("if ");
            write_expr(out, c);
            out.push_str(" then ");
            write_expr(out, a);
            out.push_str(" else ");
            write_expr(out, b);
        }
        Expr::RefOf(n) => {
            let _ = write!(out, "ref({n})");
        }
        Expr::Len(inner) => {
            out.push_str("len(");
            write_expr(out, inner);
            out.push(')');
        }
        Expr::Tokens(places) => {
            out.push_str("tokens(");
            let names: Vec<String> = places.iter().map(|p| print_name(p)).collect();
            out.push_str(&names.join(", "));
            out.push(')');
        }
        Expr::Quant(q, pat, dom, body) => {
            out.push_str(match q {
                Quantifier::Forall => "forall ",
                Quantifier::Exists => "exists ",
            });
            write_pattern(out, pat);
            out.push_str(" in ");
            write_child(out, dom, BinOp::Add.precedence());
            out.push_str(": ");
            write_expr(out, body);
        }
    }
}

/// A bare single-token inscription must not start with `[`, which would
/// read back as a multiset.
fn print_inscription(i: &Inscription) -> String {
    match i {
        Inscription::Single(e) => {
            let s = print_expr(e);
            if s.starts_with('[') {
                format!("({s})")
            } else {
                s
            }
        }
        Inscription::Multiset(entries) => {
            let items: Vec<String> = entries
                .iter()
                .map(|(n, e)| if *n == 1 { print_expr(e) } else { format!("{n}`{}", print_expr(e)) })
                .collect();
            format!("[{}]", items.join(", "))
        }
    }
}

fn print_path(target: &str, path: &[String]) -> String {
    let mut s = target.to_owned();
    for f in path {
        s.push('.');
        s.push_str(f);
    }
    s
}

fn print_action(a: &Action) -> String {
    match a {
        Action::Skip => "skip".to_owned(),
        Action::Set { target, path, value } => format!("set {} := {}", print_path(target, path), print_expr(value)),
        Action::Append { target, path, value } => {
            format!("append {} to {}", print_expr(value), print_path(target, path))
        }
        Action::Insert { target, path, value } => {
            format!("insert {} into {}", print_expr(value), print_path(target, path))
        }
        Action::Alloc { var, value } => format!("alloc {var} := {}", print_expr(value)),
    }
}

/// Normalized model text: fixed section order, one declaration per line.
pub fn print_model(m: &ModelAst) -> String {
    let mut out = String::new();
    if let Some(name) = &m.name {
        let _ = writeln!(out, "model {};\n", print_name(name));
    }
    let mut section = |title: &str, lines: Vec<String>| {
        if lines.is_empty() {
            return;
        }
        let _ = writeln!(out, "{title}");
        for l in lines {
            let _ = writeln!(out, "  {l};");
        }
        out.push('\n');
    };
    section("types", m.types.iter().map(|d| format!("{} = {}", d.name, d.ty)).collect());
    section("consts", m.consts.iter().map(|d| format!("{} : {} = {}", d.name, d.ty, print_expr(&d.value))).collect());
    section("pointers", m.pointers.iter().map(|d| format!("{} : {} = {}", d.name, d.ty, print_expr(&d.init))).collect());
    section("vars", m.vars.iter().map(|d| format!("{} : {}", d.name, d.ty)).collect());
    section(
        "places",
        m.places
            .iter()
            .map(|d| {
                let mut s = print_name(&d.name);
                if let Some(ty) = &d.ty {
                    let _ = write!(s, " : {ty}");
                }
                if let Some(init) = &d.initial {
                    let _ = write!(s, " = {}", print_inscription(init));
                }
                s
            })
            .collect(),
    );
    section(
        "transitions",
        m.transitions
            .iter()
            .map(|d| {
                let mut s = print_name(&d.name);
                if let Some(g) = &d.guard {
                    let _ = write!(s, " guard: {}", print_expr(g));
                }
                if let Some(ops) = &d.op {
                    let acts: Vec<String> = ops.iter().map(print_action).collect();
                    let _ = write!(s, " op: {{ {} }}", acts.join("; "));
                }
                s
            })
            .collect(),
    );
    section(
        "arcs",
        m.arcs
            .iter()
            .map(|d| {
                let mut s = format!("{} -> {}", print_name(&d.from), print_name(&d.to));
                if let Some(i) = &d.inscription {
                    let _ = write!(s, " : {}", print_inscription(i));
                }
                s
            })
            .collect(),
    );
    section("invariants", m.invariants.iter().map(|d| format!("{} : {}", print_name(&d.name), print_expr(&d.expr))).collect());
    out
}
