//! Relational assertions over pairs of memories.

use std::collections::BTreeSet;

use crate::interp::{eval_bool, eval_dist, eval_expr, exec_det, EvalError, Memory};
use crate::lang::ast::{Command, DistExpr, Expr, LVal};
use crate::lang::decls::Decls;
use crate::lang::value::{in_r, is_leaked, label_eq, Value};
use crate::lazy::sec_invariant_holds;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn index(self) -> u8 {
        match self {
            Side::Left => 1,
            Side::Right => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RelOp {
    Eq,
    Ne,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Assertion {
    True,
    False,
    /// `={x}`: the variable agrees on both sides.
    VarEq(String),
    /// Side-tagged expressions related by `=` or `<>`.
    Rel(Side, Expr, RelOp, Side, Expr),
    /// A boolean expression evaluated on one side.
    Test(Side, Expr),
    Leaked(Side, Expr),
    /// The labeled value was sampled from the distribution.
    From(Side, Expr, DistExpr),
    Dom(Side, String, Expr),
    /// Value and origin agree across sides, ignoring confidentiality.
    LabelEq(Expr, Expr),
    /// The secure-assignment invariant between a left map and a right map.
    SecInv(String, String, DistExpr),
    Not(Box<Assertion>),
    And(Vec<Assertion>),
    Or(Vec<Assertion>),
    Implies(Box<Assertion>, Box<Assertion>),
    Forall(String, String, Box<Assertion>),
    /// Holds after running deterministic assignments on one side.
    After(Side, Vec<Command>, Box<Assertion>),
}

impl Assertion {
    pub fn not(a: Assertion) -> Assertion {
        Assertion::Not(Box::new(a))
    }

    /// Conjunction, flattening a left-hand conjunction.
    pub fn and(a: Assertion, b: Assertion) -> Assertion {
        match a {
            Assertion::True => b,
            Assertion::And(mut xs) => {
                xs.push(b);
                Assertion::And(xs)
            }
            a => Assertion::And(vec![a, b]),
        }
    }

    /// Top-level conjuncts.
    pub fn conjuncts(&self) -> Vec<&Assertion> {
        match self {
            Assertion::And(xs) => xs.iter().flat_map(|x| x.conjuncts()).collect(),
            Assertion::True => vec![],
            a => vec![a],
        }
    }

    /// Every identifier mentioned, including map names and bound names.
    pub fn idents(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_idents(&mut out);
        out
    }

    fn collect_idents(&self, out: &mut BTreeSet<String>) {
        let mut add = |e: &Expr| e.for_each_ident(&mut |n| {
            out.insert(n.to_string());
        });
        match self {
            Assertion::True | Assertion::False => {}
            Assertion::VarEq(x) => {
                out.insert(x.clone());
            }
            Assertion::Rel(_, a, _, _, b) | Assertion::LabelEq(a, b) => {
                add(a);
                add(b);
            }
            Assertion::Test(_, e) | Assertion::Leaked(_, e) => add(e),
            Assertion::From(_, e, d) => {
                add(e);
                d.for_each_ident(&mut |n| {
                    out.insert(n.to_string());
                });
            }
            Assertion::Dom(_, t, k) => {
                add(k);
                out.insert(t.clone());
            }
            Assertion::SecInv(a, b, d) => {
                out.insert(a.clone());
                out.insert(b.clone());
                d.for_each_ident(&mut |n| {
                    out.insert(n.to_string());
                });
            }
            Assertion::Not(a) => a.collect_idents(out),
            Assertion::And(xs) | Assertion::Or(xs) => xs.iter().for_each(|x| x.collect_idents(out)),
            Assertion::Implies(a, b) => {
                a.collect_idents(out);
                b.collect_idents(out);
            }
            Assertion::Forall(v, _, a) => {
                out.insert(v.clone());
                a.collect_idents(out);
            }
            Assertion::After(_, cmds, a) => {
                for c in cmds {
                    if let Command::Assign(lv, e) = c {
                        out.insert(lv.base().to_string());
                        if let LVal::Index(_, k) = lv {
                            k.for_each_ident(&mut |n| {
                                out.insert(n.to_string());
                            });
                        }
                        e.for_each_ident(&mut |n| {
                            out.insert(n.to_string());
                        });
                    }
                }
                a.collect_idents(out);
            }
        }
    }
}

fn mem<'a>(side: Side, m1: &'a Memory, m2: &'a Memory) -> &'a Memory {
    match side {
        Side::Left => m1,
        Side::Right => m2,
    }
}

fn labeled(v: Value) -> Result<crate::lang::value::Labeled, EvalError> {
    match v {
        Value::Labeled(l) => Ok(l),
        v => Err(EvalError::Type(format!("expected a labeled value, got {v:?}"))),
    }
}

/// Truth of `a` on the pair `(m1, m2)`; `env` holds quantified names.
pub fn holds(decls: &Decls, a: &Assertion, m1: &Memory, m2: &Memory, env: &mut Vec<(String, Value)>) -> Result<bool, EvalError> {
    Ok(match a {
        Assertion::True => true,
        Assertion::False => false,
        Assertion::VarEq(x) => {
            let e = Expr::Name(x.clone());
            eval_expr(decls, &e, m1, env)? == eval_expr(decls, &e, m2, env)?
        }
        Assertion::Rel(s1, a, op, s2, b) => {
            let va = eval_expr(decls, a, mem(*s1, m1, m2), env)?;
            let vb = eval_expr(decls, b, mem(*s2, m1, m2), env)?;
            (va == vb) == (*op == RelOp::Eq)
        }
        Assertion::Test(s, e) => eval_bool(decls, e, mem(*s, m1, m2), env)?,
        Assertion::Leaked(s, e) => is_leaked(&labeled(eval_expr(decls, e, mem(*s, m1, m2), env)?)?),
        Assertion::From(s, e, d) => {
            let m = mem(*s, m1, m2);
            let l = labeled(eval_expr(decls, e, m, env)?)?;
            in_r(&l, &eval_dist(decls, d, m, env)?.dist)
        }
        Assertion::Dom(s, t, k) => {
            eval_bool(decls, &Expr::Dom(t.clone(), Box::new(k.clone())), mem(*s, m1, m2), env)?
        }
        Assertion::LabelEq(a, b) => {
            let la = labeled(eval_expr(decls, a, m1, env)?)?;
            let lb = labeled(eval_expr(decls, b, m2, env)?)?;
            label_eq(&la, &lb)
        }
        Assertion::SecInv(t1, t2, d) => {
            fn map<'m>(m: &'m Memory, t: &str) -> Result<&'m std::collections::BTreeMap<crate::lang::value::Elem, crate::lang::value::Labeled>, EvalError> {
                match m.get(t) {
                    Some(Value::Map(mp)) => Ok(mp),
                    Some(v) => Err(EvalError::Type(format!("`{t}` is not a map: {v:?}"))),
                    None => Err(EvalError::Unbound(t.to_string())),
                }
            }
            let o = eval_dist(decls, d, m1, env)?;
            sec_invariant_holds(map(m1, t1)?, map(m2, t2)?, &o.dist)
        }
        Assertion::Not(a) => !holds(decls, a, m1, m2, env)?,
        Assertion::And(xs) => {
            for x in xs {
                if !holds(decls, x, m1, m2, env)? {
                    return Ok(false);
                }
            }
            true
        }
        Assertion::Or(xs) => {
            for x in xs {
                if holds(decls, x, m1, m2, env)? {
                    return Ok(true);
                }
            }
            false
        }
        Assertion::Implies(a, b) => !holds(decls, a, m1, m2, env)? || holds(decls, b, m1, m2, env)?,
        Assertion::Forall(v, ty, body) => {
            let elems = decls
                .elements_named(ty)
                .ok_or_else(|| EvalError::Unbound(ty.clone()))?;
            for e in elems {
                env.push((v.clone(), Value::Elem(e)));
                let r = holds(decls, body, m1, m2, env);
                env.pop();
                if !r? {
                    return Ok(false);
                }
            }
            true
        }
        Assertion::After(s, cmds, body) => match s {
            Side::Left => {
                let m = exec_det(decls, cmds, m1, env)?;
                holds(decls, body, &m, m2, env)?
            }
            Side::Right => {
                let m = exec_det(decls, cmds, m2, env)?;
                holds(decls, body, m1, &m, env)?
            }
        },
    })
}

/// Replaces the variable `var` by `repl`; `None` when `var` is used as a map.
pub fn subst_expr(e: &Expr, var: &str, repl: &Expr) -> Option<Expr> {
    let rec = |x: &Expr| subst_expr(x, var, repl).map(Box::new);
    Some(match e {
        Expr::Name(n) if n == var => repl.clone(),
        Expr::Name(_) | Expr::Bool(_) | Expr::Conf(_) | Expr::Bot | Expr::Empty => e.clone(),
        Expr::Dist(d) => Expr::Dist(subst_dist(d, var, repl)?),
        Expr::Lookup(m, _) | Expr::Dom(m, _) if m == var => return None,
        Expr::Lookup(m, k) => Expr::Lookup(m.clone(), rec(k)?),
        Expr::Dom(m, k) => Expr::Dom(m.clone(), rec(k)?),
        Expr::Eq(a, b) => Expr::Eq(rec(a)?, rec(b)?),
        Expr::And(a, b) => Expr::And(rec(a)?, rec(b)?),
        Expr::Not(a) => Expr::Not(rec(a)?),
        Expr::Proj(i, a) => Expr::Proj(*i, rec(a)?),
        Expr::Triple(a, b, c) => Expr::Triple(rec(a)?, rec(b)?, rec(c)?),
    })
}

fn subst_dist(d: &DistExpr, var: &str, repl: &Expr) -> Option<DistExpr> {
    Some(match d {
        DistExpr::Point(e) => DistExpr::Point(Box::new(subst_expr(e, var, repl)?)),
        DistExpr::Named(n) if n == var => return None,
        d => d.clone(),
    })
}

fn expr_mentions(e: &Expr, name: &str) -> bool {
    let mut found = false;
    e.for_each_ident(&mut |n| found |= n == name);
    found
}

/// Substitutes `var := repl` on one side. `None` when the variable is used
/// as a map, is written by an `After` on that side, or would be captured.
pub fn subst(a: &Assertion, side: Side, var: &str, repl: &Expr) -> Option<Assertion> {
    let on = |s: Side, e: &Expr| if s == side { subst_expr(e, var, repl) } else { Some(e.clone()) };
    Some(match a {
        Assertion::True | Assertion::False => a.clone(),
        Assertion::VarEq(x) if x == var => {
            let (l, r) = match side {
                Side::Left => (repl.clone(), Expr::Name(x.clone())),
                Side::Right => (Expr::Name(x.clone()), repl.clone()),
            };
            Assertion::Rel(Side::Left, l, RelOp::Eq, Side::Right, r)
        }
        Assertion::VarEq(_) => a.clone(),
        Assertion::Rel(s1, x, op, s2, y) => Assertion::Rel(*s1, on(*s1, x)?, *op, *s2, on(*s2, y)?),
        Assertion::Test(s, e) => Assertion::Test(*s, on(*s, e)?),
        Assertion::Leaked(s, e) => Assertion::Leaked(*s, on(*s, e)?),
        Assertion::From(s, e, d) => {
            let d2 = if *s == side { subst_dist(d, var, repl)? } else { d.clone() };
            Assertion::From(*s, on(*s, e)?, d2)
        }
        Assertion::Dom(s, t, _) if *s == side && t == var => return None,
        Assertion::Dom(s, t, k) => Assertion::Dom(*s, t.clone(), on(*s, k)?),
        Assertion::LabelEq(x, y) => Assertion::LabelEq(on(Side::Left, x)?, on(Side::Right, y)?),
        Assertion::SecInv(t1, t2, d) => {
            let hit = match side {
                Side::Left => t1 == var,
                Side::Right => t2 == var,
            };
            if hit {
                return None;
            }
            Assertion::SecInv(t1.clone(), t2.clone(), subst_dist(d, var, repl)?)
        }
        Assertion::Not(x) => Assertion::Not(Box::new(subst(x, side, var, repl)?)),
        Assertion::And(xs) => Assertion::And(xs.iter().map(|x| subst(x, side, var, repl)).collect::<Option<_>>()?),
        Assertion::Or(xs) => Assertion::Or(xs.iter().map(|x| subst(x, side, var, repl)).collect::<Option<_>>()?),
        Assertion::Implies(x, y) => {
            Assertion::Implies(Box::new(subst(x, side, var, repl)?), Box::new(subst(y, side, var, repl)?))
        }
        Assertion::Forall(b, _, _) if b == var => a.clone(),
        Assertion::Forall(b, _, _) if expr_mentions(repl, b) => return None,
        Assertion::Forall(b, ty, body) => Assertion::Forall(b.clone(), ty.clone(), Box::new(subst(body, side, var, repl)?)),
        Assertion::After(s, cmds, body) if *s == side => {
            let mut out = Vec::new();
            for c in cmds {
                let Command::Assign(lv, e) = c else { return None };
                let lv = match lv {
                    LVal::Var(v) if v == var => return None,
                    LVal::Var(_) => lv.clone(),
                    LVal::Index(m, _) if m == var => return None,
                    LVal::Index(m, k) => LVal::Index(m.clone(), subst_expr(k, var, repl)?),
                };
                out.push(Command::Assign(lv, subst_expr(e, var, repl)?));
            }
            Assertion::After(*s, out, Box::new(subst(body, side, var, repl)?))
        }
        Assertion::After(s, cmds, body) => Assertion::After(*s, cmds.clone(), Box::new(subst(body, side, var, repl)?)),
    })
}

/// Weakest precondition of `lv <- e` on one side.
///
/// Variables are substituted syntactically; map entries, and anything the
/// substitution cannot express, become an `After` prefix.
pub fn wp_assign(side: Side, lv: &LVal, e: &Expr, q: Assertion) -> Assertion {
    if let LVal::Var(v) = lv {
        if let Some(a) = subst(&q, side, v, e) {
            return a;
        }
    }
    let cmd = Command::Assign(lv.clone(), e.clone());
    match q {
        Assertion::After(s, mut cmds, body) if s == side => {
            cmds.insert(0, cmd);
            Assertion::After(s, cmds, body)
        }
        q => Assertion::After(side, vec![cmd], Box::new(q)),
    }
}
