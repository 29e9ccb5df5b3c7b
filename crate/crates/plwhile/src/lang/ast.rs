//! Abstract syntax of plWhile programs.

use crate::lang::value::Conf;

/// Surface types. Finite types are referred to by name.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ty {
    Unit,
    Bool,
    /// An element of a declared finite type.
    Fin(String),
    /// A labeled value over a finite type.
    Lab(String),
    /// A total map from a finite type into labeled values or unset.
    Map(String, String),
    Conf,
    /// A distribution over a finite type, or unset.
    Origin(String),
}

impl Ty {
    /// Labeled values and labeled-codomain maps.
    pub fn is_labeled(&self) -> bool {
        matches!(self, Ty::Lab(_) | Ty::Map(_, _))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    /// A variable, an element constant, or a named distribution.
    Name(String),
    Bool(bool),
    Conf(Conf),
    /// The unset origin.
    Bot,
    /// The empty map.
    Empty,
    /// A distribution literal used as the origin component of a triple.
    Dist(DistExpr),
    Lookup(String, Box<Expr>),
    Eq(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Dom(String, Box<Expr>),
    Proj(u8, Box<Expr>),
    Triple(Box<Expr>, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn name(s: &str) -> Expr {
        Expr::Name(s.to_string())
    }

    pub fn lookup(map: &str, key: Expr) -> Expr {
        Expr::Lookup(map.to_string(), Box::new(key))
    }

    pub fn not(e: Expr) -> Expr {
        Expr::Not(Box::new(e))
    }

    pub fn proj(i: u8, e: Expr) -> Expr {
        Expr::Proj(i, Box::new(e))
    }

    pub fn triple(a: Expr, b: Expr, c: Expr) -> Expr {
        Expr::Triple(Box::new(a), Box::new(b), Box::new(c))
    }

    pub fn dom(map: &str, key: Expr) -> Expr {
        Expr::Dom(map.to_string(), Box::new(key))
    }

    /// Calls `f` on every identifier occurrence, maps included.
    pub fn for_each_ident(&self, f: &mut dyn FnMut(&str)) {
        match self {
            Expr::Name(n) => f(n),
            Expr::Bool(_) | Expr::Conf(_) | Expr::Bot | Expr::Empty => {}
            Expr::Dist(d) => d.for_each_ident(f),
            Expr::Lookup(m, k) | Expr::Dom(m, k) => {
                f(m);
                k.for_each_ident(f);
            }
            Expr::Eq(a, b) | Expr::And(a, b) => {
                a.for_each_ident(f);
                b.for_each_ident(f);
            }
            Expr::Not(a) | Expr::Proj(_, a) => a.for_each_ident(f),
            Expr::Triple(a, b, c) => {
                a.for_each_ident(f);
                b.for_each_ident(f);
                c.for_each_ident(f);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DistExpr {
    Uniform(String),
    Point(Box<Expr>),
    Named(String),
}

impl DistExpr {
    pub fn for_each_ident(&self, f: &mut dyn FnMut(&str)) {
        match self {
            DistExpr::Uniform(_) => {}
            DistExpr::Point(e) => e.for_each_ident(f),
            DistExpr::Named(n) => f(n),
        }
    }
}

/// Assignment targets.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LVal {
    Var(String),
    Index(String, Expr),
}

impl LVal {
    /// The variable or map written.
    pub fn base(&self) -> &str {
        match self {
            LVal::Var(v) | LVal::Index(v, _) => v,
        }
    }

    pub fn to_expr(&self) -> Expr {
        match self {
            LVal::Var(v) => Expr::Name(v.clone()),
            LVal::Index(m, k) => Expr::Lookup(m.clone(), Box::new(k.clone())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Command {
    Skip,
    Assign(LVal, Expr),
    Sample(LVal, DistExpr),
    If(Expr, Vec<Command>, Vec<Command>),
    While(Expr, Vec<Command>),
    /// `w <~ src`: reads a labeled source and marks it leaked.
    SecRead(LVal, LVal),
    /// `lv <~$ d`: samples into a labeled target as a secret.
    SecSample(LVal, DistExpr),
    /// Optional result target, module, procedure, arguments.
    Call(Option<LVal>, String, String, Vec<Expr>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Proc {
    pub name: String,
    pub params: Vec<(String, Ty)>,
    pub ret_ty: Option<Ty>,
    pub locals: Vec<(String, Ty)>,
    pub body: Vec<Command>,
    pub ret: Option<Expr>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Module {
    pub name: String,
    pub globals: Vec<(String, Ty)>,
    pub procs: Vec<Proc>,
}

impl Module {
    pub fn proc(&self, name: &str) -> Option<&Proc> {
        self.procs.iter().find(|p| p.name == name)
    }
}
