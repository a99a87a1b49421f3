//! Recursive-descent parser. A line break ends a statement; binary
//! operators, calls and `.cpsApply` must start on the line of their left
//! operand.

use ldk_core::{CollectionKind, Desc};

use crate::ast::{BinOp, Catch, ContLambda, Def, Expr, Lambda, Lit, SeqKind, Stmt};
use crate::builtins;
use crate::error::ScriptError;
use crate::lexer::{tokenize, Tok, Token};

pub fn parse(src: &str) -> Result<Expr, ScriptError> {
    let mut p = Parser {
        toks: tokenize(src)?,
        pos: 0,
    };
    let (stmts, result) = p.statements(true)?;
    Ok(block(stmts, result))
}

/// Parses a domain descriptor such as `Stream[Int]` or `Double => String`.
pub fn parse_type(src: &str) -> Result<Desc, ScriptError> {
    let mut p = Parser {
        toks: tokenize(src)?,
        pos: 0,
    };
    let t = p.ty()?;
    p.expect_eof()?;
    Ok(t)
}

fn block(stmts: Vec<Stmt>, result: Expr) -> Expr {
    if stmts.is_empty() {
        result
    } else {
        Expr::Block(stmts, Box::new(result))
    }
}

const RESERVED: [&str; 15] = [
    "def", "let", "fun", "cont", "reset", "if", "else", "while", "try", "catch", "finally",
    "throw", "true", "false", "cpsApply",
];

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].tok
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ScriptError> {
        let t = self.peek();
        Err(ScriptError::syntax(t.line, t.col, msg))
    }

    fn is(&self, p: &str) -> bool {
        matches!(&self.peek().tok, Tok::Punct(q) if *q == p)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == w)
    }

    /// `p` on the same line as the previous token.
    fn is_inline(&self, p: &str) -> bool {
        self.is(p) && !self.peek().newline
    }

    fn eat(&mut self, p: &str) -> bool {
        if self.is(p) {
            self.next();
            true
        } else {
            false
        }
    }

    fn eat_word(&mut self, w: &str) -> bool {
        if self.is_word(w) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, p: &str) -> Result<(), ScriptError> {
        if self.eat(p) {
            Ok(())
        } else {
            self.err(format!(
                "expected `{p}`, found {}",
                describe(&self.peek().tok)
            ))
        }
    }

    fn expect_eof(&mut self) -> Result<(), ScriptError> {
        match self.peek().tok {
            Tok::Eof => Ok(()),
            ref t => {
                let d = describe(t);
                self.err(format!("unexpected {d}"))
            }
        }
    }

    fn name(&mut self) -> Result<String, ScriptError> {
        match self.peek().tok.clone() {
            Tok::Ident(s) if RESERVED.contains(&s.as_str()) => {
                self.err(format!("`{s}` is reserved"))
            }
            Tok::Ident(s) if builtins::lookup(&s).is_some() || SeqKind::from_name(&s).is_some() => {
                self.err(format!("`{s}` names a builtin and cannot be rebound"))
            }
            Tok::Ident(s) => {
                self.next();
                Ok(s)
            }
            Tok::Punct("_") => {
                self.next();
                Ok("_".into())
            }
            ref t => {
                let d = describe(t);
                self.err(format!("expected a name, found {d}"))
            }
        }
    }

    /// Statements up to `}` (or end of input at top level) and the block's
    /// result expression.
    fn statements(&mut self, top: bool) -> Result<(Vec<Stmt>, Expr), ScriptError> {
        let mut stmts = Vec::new();
        loop {
            while self.eat(";") {}
            let done = if top {
                matches!(self.peek().tok, Tok::Eof)
            } else {
                self.is("}")
            };
            if done {
                break;
            }
            let stmt = if self.is_word("def") {
                if !top {
                    return self.err("`def` is only allowed at top level");
                }
                self.def()?
            } else if self.eat_word("let") {
                let name = self.name()?;
                self.expect("=")?;
                Stmt::Let(name, self.expr()?)
            } else {
                Stmt::Expr(self.expr()?)
            };
            stmts.push(stmt);
            let t = self.peek();
            let ended = t.newline || matches!(t.tok, Tok::Eof | Tok::Punct(";") | Tok::Punct("}"));
            if !ended {
                return self.err(format!(
                    "expected `;` or line break, found {}",
                    describe(&t.tok)
                ));
            }
        }
        if !top && !matches!(self.peek().tok, Tok::Punct("}")) {
            return self.err("expected `}`");
        }
        let result = match stmts.last() {
            Some(Stmt::Expr(_)) => match stmts.pop() {
                Some(Stmt::Expr(e)) => e,
                _ => unreachable!(),
            },
            _ => Expr::unit(),
        };
        Ok((stmts, result))
    }

    fn def(&mut self) -> Result<Stmt, ScriptError> {
        self.next();
        let name = self.name()?;
        let params = if self.is("(") {
            Some(self.params()?)
        } else {
            None
        };
        let domain = if self.eat(":") {
            Some(self.ty()?)
        } else {
            None
        };
        self.expect("=")?;
        let body = self.expr()?;
        Ok(Stmt::Def(Box::new(Def {
            name,
            params,
            domain,
            body,
            reset: false,
        })))
    }

    fn params(&mut self) -> Result<Vec<String>, ScriptError> {
        self.expect("(")?;
        let mut out = Vec::new();
        if !self.eat(")") {
            loop {
                out.push(self.name()?);
                if self.eat(")") {
                    break;
                }
                self.expect(",")?;
            }
        }
        Ok(out)
    }

    fn braced(&mut self) -> Result<Expr, ScriptError> {
        self.expect("{")?;
        let (stmts, result) = self.statements(false)?;
        self.expect("}")?;
        Ok(block(stmts, result))
    }

    pub fn expr(&mut self) -> Result<Expr, ScriptError> {
        self.binary(1)
    }

    fn binary(&mut self, min: u8) -> Result<Expr, ScriptError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop().filter(|op| op.precedence() >= min) {
            self.next();
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn binop(&self) -> Option<BinOp> {
        if self.peek().newline {
            return None;
        }
        let Tok::Punct(p) = self.peek().tok else {
            return None;
        };
        Some(match p {
            "||" => BinOp::Or,
            "&&" => BinOp::And,
            "==" => BinOp::Eq,
            "!=" => BinOp::Ne,
            "<" => BinOp::Lt,
            "<=" => BinOp::Le,
            ">" => BinOp::Gt,
            ">=" => BinOp::Ge,
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            "/" => BinOp::Div,
            "%" => BinOp::Rem,
            _ => return None,
        })
    }

    fn unary(&mut self) -> Result<Expr, ScriptError> {
        if self.eat("!") {
            return Ok(Expr::Bang(Box::new(self.unary()?)));
        }
        if self.eat("-") {
            return Ok(match self.peek().tok {
                Tok::Int(i) => {
                    self.next();
                    Expr::Lit(Lit::Int(-i))
                }
                Tok::Float(x) => {
                    self.next();
                    Expr::Lit(Lit::Float(-x))
                }
                _ => Expr::Neg(Box::new(self.unary()?)),
            });
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<Expr, ScriptError> {
        let mut e = self.primary()?;
        loop {
            if self.is_inline("(") {
                let args = self.args()?;
                e = Expr::Apply(Box::new(e), args);
            } else if self.is_inline(".")
                && matches!(self.peek_at(1), Tok::Ident(s) if s == "cpsApply")
            {
                self.next();
                self.next();
                self.expect("(")?;
                let h = self.expr()?;
                self.expect(")")?;
                e = Expr::cps_apply(e, h);
            } else {
                return Ok(e);
            }
        }
    }

    fn args(&mut self) -> Result<Vec<Expr>, ScriptError> {
        self.expect("(")?;
        let mut out = Vec::new();
        if !self.eat(")") {
            loop {
                out.push(self.expr()?);
                if self.eat(")") {
                    break;
                }
                self.expect(",")?;
            }
        }
        Ok(out)
    }

    fn handler_ahead(&self) -> bool {
        matches!(
            (self.peek_at(1), self.peek_at(2)),
            (Tok::Ident(_) | Tok::Punct("_"), Tok::Punct("=>"))
        )
    }

    fn primary(&mut self) -> Result<Expr, ScriptError> {
        let tok = self.peek().tok.clone();
        match tok {
            Tok::Int(i) => {
                self.next();
                Ok(Expr::Lit(Lit::Int(i)))
            }
            Tok::Float(x) => {
                self.next();
                Ok(Expr::Lit(Lit::Float(x)))
            }
            Tok::Str(s) => {
                self.next();
                Ok(Expr::Lit(Lit::Str(s)))
            }
            Tok::Char(c) => {
                self.next();
                Ok(Expr::Lit(Lit::Char(c)))
            }
            Tok::Punct("(") => {
                self.next();
                if self.eat(")") {
                    return Ok(Expr::unit());
                }
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            Tok::Punct("{") if self.handler_ahead() => {
                self.next();
                let param = self.name()?;
                self.expect("=>")?;
                let (stmts, result) = self.statements(false)?;
                self.expect("}")?;
                Ok(Expr::Handler(param, Box::new(block(stmts, result))))
            }
            Tok::Punct("{") => self.braced(),
            Tok::Ident(word) => self.word(&word),
            Tok::Eof => self.err("unexpected end of input"),
            ref t => {
                let d = describe(t);
                self.err(format!("unexpected {d}"))
            }
        }
    }

    fn word(&mut self, word: &str) -> Result<Expr, ScriptError> {
        match word {
            "true" | "false" => {
                self.next();
                Ok(Expr::Lit(Lit::Bool(word == "true")))
            }
            "fun" => {
                self.next();
                let params = self.params()?;
                let domain = if self.eat(":") {
                    Some(self.ty()?)
                } else {
                    None
                };
                let body = self.braced()?;
                Ok(Expr::Lambda(Box::new(Lambda {
                    params,
                    domain,
                    body,
                    reset: false,
                })))
            }
            "cont" => {
                self.next();
                let param = if self.is("(") {
                    let mut ps = self.params()?;
                    if ps.len() != 1 {
                        return self.err("a continuation binds exactly one callback");
                    }
                    ps.pop()
                } else {
                    None
                };
                let domain = if self.eat(":") {
                    Some(self.ty()?)
                } else {
                    None
                };
                let body = self.braced()?;
                Ok(Expr::ContLambda(Box::new(ContLambda {
                    param,
                    domain,
                    body,
                    reset: false,
                })))
            }
            "reset" => {
                self.next();
                let domain = if self.eat(":") {
                    Some(self.ty()?)
                } else {
                    None
                };
                Ok(Expr::Reset(domain, Box::new(self.braced()?)))
            }
            "if" => {
                self.next();
                self.expect("(")?;
                let cond = self.expr()?;
                self.expect(")")?;
                let then = self.braced()?;
                let otherwise = if self.eat_word("else") {
                    Some(Box::new(if self.is_word("if") {
                        self.expr()?
                    } else {
                        self.braced()?
                    }))
                } else {
                    None
                };
                Ok(Expr::If(Box::new(cond), Box::new(then), otherwise))
            }
            "while" => {
                self.next();
                self.expect("(")?;
                let cond = self.expr()?;
                self.expect(")")?;
                Ok(Expr::While(Box::new(cond), Box::new(self.braced()?)))
            }
            "try" => {
                self.next();
                let body = self.braced()?;
                let catch = if self.eat_word("catch") {
                    self.expect("(")?;
                    let name = self.name()?;
                    self.expect(")")?;
                    Some(Box::new(Catch {
                        name,
                        body: self.braced()?,
                    }))
                } else {
                    None
                };
                let finally = if self.eat_word("finally") {
                    Some(Box::new(self.braced()?))
                } else {
                    None
                };
                if catch.is_none() && finally.is_none() {
                    return self.err("`try` needs `catch` or `finally`");
                }
                Ok(Expr::Try {
                    body: Box::new(body),
                    catch,
                    finally,
                })
            }
            "throw" => {
                self.next();
                Ok(Expr::Throw(Box::new(self.expr()?)))
            }
            w if RESERVED.contains(&w) => self.err(format!("unexpected `{w}`")),
            w => {
                if let Some(kind) = SeqKind::from_name(w) {
                    self.next();
                    return Ok(Expr::Collection(kind, self.args()?));
                }
                if let Some(sig) = builtins::lookup(w) {
                    return self.builtin(sig);
                }
                self.next();
                Ok(Expr::Var(w.to_string()))
            }
        }
    }

    fn builtin(&mut self, sig: &builtins::Signature) -> Result<Expr, ScriptError> {
        let at = self.next();
        let mut types = Vec::new();
        if self.is_inline("[") {
            self.next();
            loop {
                types.push(self.ty()?);
                if self.eat("]") {
                    break;
                }
                self.expect(",")?;
            }
        }
        let args = if self.is_inline("(") {
            self.args()?
        } else if sig.constant && types.is_empty() {
            Vec::new()
        } else {
            return Err(ScriptError::syntax(
                at.line,
                at.col,
                format!("`{}` must be called", sig.name),
            ));
        };
        if args.len() < sig.min || args.len() > sig.max {
            return Err(ScriptError::syntax(
                at.line,
                at.col,
                format!(
                    "`{}` takes {} argument(s), found {}",
                    sig.name,
                    arity_text(sig),
                    args.len()
                ),
            ));
        }
        Ok(Expr::Builtin {
            name: sig.name.to_string(),
            types,
            args,
        })
    }

    pub fn ty(&mut self) -> Result<Desc, ScriptError> {
        let param = self.ty_atom()?;
        if self.eat("=>") {
            let result = self.ty()?;
            return Ok(Desc::func(param, result));
        }
        Ok(param)
    }

    fn ty_atom(&mut self) -> Result<Desc, ScriptError> {
        if self.eat("(") {
            let t = self.ty()?;
            self.expect(")")?;
            return Ok(t);
        }
        let name = match self.peek().tok.clone() {
            Tok::Ident(s) => {
                self.next();
                s
            }
            ref t => {
                let d = describe(t);
                return self.err(format!("expected a type, found {d}"));
            }
        };
        let mut args = Vec::new();
        if self.is_inline("[") {
            self.next();
            loop {
                args.push(self.ty()?);
                if self.eat("]") {
                    break;
                }
                self.expect(",")?;
            }
        }
        let arity = |n: usize, this: &Self| -> Result<(), ScriptError> {
            if args.len() == n {
                Ok(())
            } else {
                this.err(format!("type `{name}` takes {n} argument(s)"))
            }
        };
        let mut it = args.clone().into_iter();
        let mut arg = || it.next().unwrap_or_else(Desc::any);
        Ok(match name.as_str() {
            "Unit" => {
                arity(0, self)?;
                Desc::Unit
            }
            "Stream" => {
                arity(1, self)?;
                Desc::stream(arg())
            }
            "Deferred" => {
                arity(1, self)?;
                Desc::deferred(arg())
            }
            "Trampoline" => {
                arity(1, self)?;
                Desc::trampoline(arg())
            }
            "Error" => {
                arity(1, self)?;
                Desc::error(arg())
            }
            "Task" => {
                arity(1, self)?;
                Desc::task(arg())
            }
            "Cont" => {
                arity(2, self)?;
                let answer = arg();
                Desc::cont(answer, arg())
            }
            other => match CollectionKind::from_name(other) {
                Some(kind) => {
                    arity(1, self)?;
                    Desc::collection(kind, arg())
                }
                None => {
                    arity(0, self)?;
                    Desc::scalar(other)
                }
            },
        })
    }
}

fn arity_text(sig: &builtins::Signature) -> String {
    if sig.min == sig.max {
        sig.min.to_string()
    } else {
        format!("{} to {}", sig.min, sig.max)
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Int(i) => format!("`{i}`"),
        Tok::Float(x) => format!("`{x}`"),
        Tok::Str(_) => "string literal".into(),
        Tok::Char(_) => "character literal".into(),
        Tok::Punct(p) => format!("`{p}`"),
        Tok::Eof => "end of input".into(),
    }
}
