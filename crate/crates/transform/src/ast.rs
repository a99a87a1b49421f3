//! Syntax tree of the script language.

use std::fmt;

use ldk_core::Desc;

#[derive(Debug, Clone, PartialEq)]
pub enum Lit {
    Unit,
    Bool(bool),
    Int(i64),
    Float(f64),
    Char(char),
    Str(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeqKind {
    List,
    Vector,
    Array,
    Set,
    Stream,
}

impl SeqKind {
    pub fn name(self) -> &'static str {
        match self {
            SeqKind::List => "List",
            SeqKind::Vector => "Vector",
            SeqKind::Array => "Array",
            SeqKind::Set => "Set",
            SeqKind::Stream => "Stream",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "List" => SeqKind::List,
            "Vector" => SeqKind::Vector,
            "Array" => SeqKind::Array,
            "Set" => SeqKind::Set,
            "Stream" => SeqKind::Stream,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
    Rem,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Or => "||",
            BinOp::And => "&&",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
        }
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 3,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 5,
        }
    }
}

/// `fun(params): domain { body }`. The body is a reset boundary once
/// `reset` is set; the domain is the declared return type.
#[derive(Debug, Clone, PartialEq)]
pub struct Lambda {
    pub params: Vec<String>,
    pub domain: Option<Desc>,
    pub body: Expr,
    pub reset: bool,
}

/// `cont: domain { body }`, a continuation whose final value goes to the
/// caller's callback. `param` names that callback once it is bound.
#[derive(Debug, Clone, PartialEq)]
pub struct ContLambda {
    pub param: Option<String>,
    pub domain: Option<Desc>,
    pub body: Expr,
    pub reset: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Catch {
    pub name: String,
    pub body: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Lit(Lit),
    Var(String),
    Block(Vec<Stmt>, Box<Expr>),
    Bang(Box<Expr>),
    Lambda(Box<Lambda>),
    ContLambda(Box<ContLambda>),
    /// `{ x => body }`: a continuation closure that shares the enclosing
    /// reset boundary.
    Handler(String, Box<Expr>),
    Apply(Box<Expr>, Vec<Expr>),
    Builtin {
        name: String,
        types: Vec<Desc>,
        args: Vec<Expr>,
    },
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    If(Box<Expr>, Box<Expr>, Option<Box<Expr>>),
    While(Box<Expr>, Box<Expr>),
    Try {
        body: Box<Expr>,
        catch: Option<Box<Catch>>,
        finally: Option<Box<Expr>>,
    },
    Throw(Box<Expr>),
    Collection(SeqKind, Vec<Expr>),
    Reset(Option<Desc>, Box<Expr>),
    CpsApply(Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Def {
    pub name: String,
    /// `None` for a parameterless definition evaluated on every reference.
    pub params: Option<Vec<String>>,
    pub domain: Option<Desc>,
    pub body: Expr,
    pub reset: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Let(String, Expr),
    Expr(Expr),
    Def(Box<Def>),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn unit() -> Expr {
        Expr::Lit(Lit::Unit)
    }

    pub fn apply(f: Expr, args: Vec<Expr>) -> Expr {
        Expr::Apply(Box::new(f), args)
    }

    pub fn handler(param: &str, body: Expr) -> Expr {
        Expr::Handler(param.to_string(), Box::new(body))
    }

    pub fn cps_apply(keyword: Expr, handler: Expr) -> Expr {
        Expr::CpsApply(Box::new(keyword), Box::new(handler))
    }

    /// `stmt` followed by `rest`, merged into `rest` when it is a block.
    pub fn prepend(stmt: Stmt, rest: Expr) -> Expr {
        match rest {
            Expr::Block(mut stmts, result) => {
                stmts.insert(0, stmt);
                Expr::Block(stmts, result)
            }
            other => Expr::Block(vec![stmt], Box::new(other)),
        }
    }

    /// Evaluating the expression has no effect beyond producing its value.
    pub fn is_atomic(&self) -> bool {
        match self {
            Expr::Lit(_)
            | Expr::Var(_)
            | Expr::Lambda(_)
            | Expr::ContLambda(_)
            | Expr::Handler(..) => true,
            Expr::Builtin { name, args, .. } => {
                args.is_empty() && crate::builtins::is_constant(name)
            }
            _ => false,
        }
    }

    /// Every sub-expression, including those behind reset boundaries.
    pub fn walk(&self, visit: &mut dyn FnMut(&Expr)) {
        visit(self);
        let mut each = |e: &Expr| e.walk(visit);
        match self {
            Expr::Lit(_) | Expr::Var(_) => {}
            Expr::Block(stmts, result) => {
                for s in stmts {
                    match s {
                        Stmt::Let(_, e) | Stmt::Expr(e) => each(e),
                        Stmt::Def(d) => each(&d.body),
                    }
                }
                each(result);
            }
            Expr::Bang(e)
            | Expr::Neg(e)
            | Expr::Throw(e)
            | Expr::Handler(_, e)
            | Expr::Reset(_, e) => each(e),
            Expr::Lambda(l) => each(&l.body),
            Expr::ContLambda(c) => each(&c.body),
            Expr::Apply(f, args) => {
                each(f);
                args.iter().for_each(each);
            }
            Expr::Builtin { args, .. } | Expr::Collection(_, args) => args.iter().for_each(each),
            Expr::Binary(_, a, b) | Expr::CpsApply(a, b) | Expr::While(a, b) => {
                each(a);
                each(b);
            }
            Expr::If(c, t, e) => {
                each(c);
                each(t);
                if let Some(e) = e {
                    each(e);
                }
            }
            Expr::Try {
                body,
                catch,
                finally,
            } => {
                each(body);
                if let Some(c) = catch {
                    each(&c.body);
                }
                if let Some(f) = finally {
                    each(f);
                }
            }
        }
    }

    /// Rebuilds the node with `f` applied to each immediate child,
    /// including bodies behind reset boundaries.
    pub fn map_children<E>(self, f: &mut dyn FnMut(Expr) -> Result<Expr, E>) -> Result<Expr, E> {
        let bx = |e: Box<Expr>, f: &mut dyn FnMut(Expr) -> Result<Expr, E>| f(*e).map(Box::new);
        Ok(match self {
            e @ (Expr::Lit(_) | Expr::Var(_)) => e,
            Expr::Block(stmts, result) => {
                let mut out = Vec::with_capacity(stmts.len());
                for s in stmts {
                    out.push(match s {
                        Stmt::Let(name, e) => Stmt::Let(name, f(e)?),
                        Stmt::Expr(e) => Stmt::Expr(f(e)?),
                        Stmt::Def(mut d) => {
                            d.body = f(d.body)?;
                            Stmt::Def(d)
                        }
                    });
                }
                Expr::Block(out, bx(result, f)?)
            }
            Expr::Bang(e) => Expr::Bang(bx(e, f)?),
            Expr::Neg(e) => Expr::Neg(bx(e, f)?),
            Expr::Throw(e) => Expr::Throw(bx(e, f)?),
            Expr::Handler(p, e) => Expr::Handler(p, bx(e, f)?),
            Expr::Reset(d, e) => Expr::Reset(d, bx(e, f)?),
            Expr::Lambda(mut l) => {
                l.body = f(l.body)?;
                Expr::Lambda(l)
            }
            Expr::ContLambda(mut c) => {
                c.body = f(c.body)?;
                Expr::ContLambda(c)
            }
            Expr::Apply(g, args) => {
                let g = bx(g, f)?;
                Expr::Apply(g, args.into_iter().map(&mut *f).collect::<Result<_, E>>()?)
            }
            Expr::Builtin { name, types, args } => Expr::Builtin {
                name,
                types,
                args: args.into_iter().map(&mut *f).collect::<Result<_, E>>()?,
            },
            Expr::Collection(kind, items) => Expr::Collection(
                kind,
                items.into_iter().map(&mut *f).collect::<Result<_, E>>()?,
            ),
            Expr::Binary(op, a, b) => {
                let a = bx(a, f)?;
                Expr::Binary(op, a, bx(b, f)?)
            }
            Expr::CpsApply(a, b) => {
                let a = bx(a, f)?;
                Expr::CpsApply(a, bx(b, f)?)
            }
            Expr::While(a, b) => {
                let a = bx(a, f)?;
                Expr::While(a, bx(b, f)?)
            }
            Expr::If(c, t, e) => {
                let c = bx(c, f)?;
                let t = bx(t, f)?;
                Expr::If(c, t, e.map(|e| bx(e, f)).transpose()?)
            }
            Expr::Try {
                body,
                catch,
                finally,
            } => {
                let body = bx(body, f)?;
                let catch = match catch {
                    Some(mut c) => {
                        c.body = f(c.body)?;
                        Some(c)
                    }
                    None => None,
                };
                Expr::Try {
                    body,
                    catch,
                    finally: finally.map(|e| bx(e, f)).transpose()?,
                }
            }
        })
    }

    pub fn count_bangs(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |e| {
            if matches!(e, Expr::Bang(_)) {
                n += 1;
            }
        });
        n
    }

    /// Whether `name` occurs as a variable anywhere inside.
    pub fn mentions(&self, name: &str) -> bool {
        let mut found = false;
        self.walk(&mut |e| {
            if matches!(e, Expr::Var(v) if v == name) {
                found = true;
            }
        });
        found
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::printer::pretty_print(self))
    }
}
