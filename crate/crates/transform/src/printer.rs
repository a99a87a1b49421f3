//! Pretty printer producing parseable script text.

use ldk_core::Desc;

use crate::ast::{Def, Expr, Lit, Stmt};
use crate::builtins;

const INDENT: &str = "  ";
const UNARY: u8 = 6;
const POSTFIX: u8 = 7;

/// Prints a whole script. A top-level block prints as its statements.
pub fn pretty_print(e: &Expr) -> String {
    let mut out = String::new();
    match e {
        Expr::Block(stmts, result) => {
            for s in stmts {
                out.push_str(&stmt(s, 0));
                out.push('\n');
            }
            if !matches!(**result, Expr::Lit(Lit::Unit)) || stmts.is_empty() {
                out.push_str(&expr(result, 0, 0));
                out.push('\n');
            }
        }
        other => {
            out.push_str(&expr(other, 0, 0));
            out.push('\n');
        }
    }
    out
}

pub fn type_text(d: &Desc) -> String {
    d.to_string()
}

fn pad(level: usize) -> String {
    INDENT.repeat(level)
}

fn stmt(s: &Stmt, level: usize) -> String {
    match s {
        Stmt::Let(name, rhs) => format!("let {name} = {}", expr(rhs, 0, level)),
        Stmt::Expr(e) => expr(e, 0, level),
        Stmt::Def(d) => def(d, level),
    }
}

fn def(d: &Def, level: usize) -> String {
    let mut out = format!("def {}", d.name);
    if let Some(ps) = &d.params {
        out.push_str(&format!("({})", ps.join(", ")));
    }
    if let Some(t) = &d.domain {
        out.push_str(&format!(": {}", type_text(t)));
    }
    out.push_str(" = ");
    match &d.body {
        Expr::Block(..) => out.push_str(&braced(&d.body, level)),
        other => out.push_str(&expr(other, 0, level)),
    }
    out
}

/// `{ ... }` around the statements of `body`, closed at `level`.
fn braced(body: &Expr, level: usize) -> String {
    let inner = pad(level + 1);
    let mut out = String::from("{\n");
    match body {
        Expr::Block(stmts, result) => {
            for s in stmts {
                out.push_str(&format!("{inner}{}\n", stmt(s, level + 1)));
            }
            out.push_str(&format!("{inner}{}\n", expr(result, 0, level + 1)));
        }
        other => out.push_str(&format!("{inner}{}\n", expr(other, 0, level + 1))),
    }
    out.push_str(&pad(level));
    out.push('}');
    out
}

/// Braces on one line for short bodies, otherwise across lines.
fn body_text(body: &Expr, level: usize) -> String {
    if !matches!(body, Expr::Block(..)) {
        let one = expr(body, 0, level + 1);
        if !one.contains('\n') && one.len() <= 60 {
            return format!("{{ {one} }}");
        }
    }
    braced(body, level)
}

fn own_precedence(e: &Expr) -> u8 {
    match e {
        Expr::Throw(_) => 0,
        Expr::Binary(op, ..) => op.precedence(),
        Expr::Bang(_) | Expr::Neg(_) => UNARY,
        Expr::Lit(Lit::Int(i)) if *i < 0 => UNARY,
        Expr::Lit(Lit::Float(x)) if x.is_sign_negative() => UNARY,
        _ => POSTFIX,
    }
}

fn expr(e: &Expr, min: u8, level: usize) -> String {
    let text = raw(e, level);
    if own_precedence(e) < min {
        format!("({text})")
    } else {
        text
    }
}

fn list(items: &[Expr], level: usize) -> String {
    items
        .iter()
        .map(|a| expr(a, 0, level))
        .collect::<Vec<_>>()
        .join(", ")
}

fn raw(e: &Expr, level: usize) -> String {
    match e {
        Expr::Lit(l) => lit(l),
        Expr::Var(v) => v.clone(),
        Expr::Block(..) => braced(e, level),
        Expr::Bang(inner) => format!("!{}", expr(inner, UNARY, level)),
        Expr::Neg(inner) => {
            let text = expr(inner, UNARY, level);
            if text.starts_with(|c: char| c.is_ascii_digit()) {
                format!("-({text})")
            } else {
                format!("-{text}")
            }
        }
        Expr::Lambda(l) => {
            let ann = l
                .domain
                .as_ref()
                .map(|t| format!(": {}", type_text(t)))
                .unwrap_or_default();
            format!(
                "fun({}){ann} {}",
                l.params.join(", "),
                body_text(&l.body, level)
            )
        }
        Expr::ContLambda(c) => {
            let param = c
                .param
                .as_ref()
                .map(|p| format!("({p})"))
                .unwrap_or_default();
            let ann = c
                .domain
                .as_ref()
                .map(|t| format!(": {}", type_text(t)))
                .unwrap_or_default();
            format!("cont{param}{ann} {}", body_text(&c.body, level))
        }
        Expr::Handler(param, body) => {
            if !matches!(**body, Expr::Block(..)) {
                let one = expr(body, 0, level + 1);
                if !one.contains('\n') && one.len() <= 60 {
                    return format!("{{ {param} => {one} }}");
                }
            }
            let braced = braced(body, level);
            format!("{{ {param} =>{}", &braced[1..])
        }
        Expr::Apply(f, args) => format!("{}({})", expr(f, POSTFIX, level), list(args, level)),
        Expr::Builtin { name, types, args } => {
            let mut out = name.clone();
            if !types.is_empty() {
                let ts: Vec<String> = types.iter().map(type_text).collect();
                out.push_str(&format!("[{}]", ts.join(", ")));
            }
            if !args.is_empty() || !types.is_empty() || !builtins::is_constant(name) {
                out.push_str(&format!("({})", list(args, level)));
            }
            out
        }
        Expr::Binary(op, a, b) => {
            let p = op.precedence();
            format!(
                "{} {} {}",
                expr(a, p, level),
                op.symbol(),
                expr(b, p + 1, level)
            )
        }
        Expr::If(c, t, otherwise) => {
            let mut out = format!("if ({}) {}", expr(c, 0, level), braced(t, level));
            if let Some(o) = otherwise {
                out.push_str(&format!(" else {}", braced(o, level)));
            }
            out
        }
        Expr::While(c, body) => format!("while ({}) {}", expr(c, 0, level), braced(body, level)),
        Expr::Try {
            body,
            catch,
            finally,
        } => {
            let mut out = format!("try {}", braced(body, level));
            if let Some(c) = catch {
                out.push_str(&format!(" catch ({}) {}", c.name, braced(&c.body, level)));
            }
            if let Some(f) = finally {
                out.push_str(&format!(" finally {}", braced(f, level)));
            }
            out
        }
        Expr::Throw(inner) => format!("throw {}", expr(inner, 0, level)),
        Expr::Collection(kind, items) => format!("{}({})", kind.name(), list(items, level)),
        Expr::Reset(domain, body) => {
            let ann = domain
                .as_ref()
                .map(|t| format!(": {}", type_text(t)))
                .unwrap_or_default();
            format!("reset{ann} {}", braced(body, level))
        }
        Expr::CpsApply(k, h) => format!(
            "{}.cpsApply({})",
            expr(k, POSTFIX, level),
            expr(h, 0, level)
        ),
    }
}

fn lit(l: &Lit) -> String {
    match l {
        Lit::Unit => "()".into(),
        Lit::Bool(b) => b.to_string(),
        Lit::Int(i) => i.to_string(),
        Lit::Float(x) => format!("{x:?}"),
        Lit::Char(c) => format!("'{}'", escape(&c.to_string(), '\'')),
        Lit::Str(s) => format!("\"{}\"", escape(s, '"')),
    }
}

fn escape(s: &str, quote: char) -> String {
    let mut out = String::new();
    for c in s.chars() {
        match c {
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            '\0' => out.push_str("\\0"),
            '\\' => out.push_str("\\\\"),
            c if c == quote => {
                out.push('\\');
                out.push(c);
            }
            c => out.push(c),
        }
    }
    out
}
