//! Proof rules as goal transformers.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::interp::{eval_dist, Memory};
use crate::lang::ast::{Command, DistExpr, Expr, LVal, Ty};
use crate::lang::check::{dist_ty, free_vars, rw_sets};
use crate::lang::decls::Decls;
use crate::lazy;
use crate::relational::assertion::{subst, wp_assign, Assertion, Side};
use crate::relational::goal::{discharge, Counterexample, Discharge, RelGoal};

#[derive(Clone, Debug, PartialEq)]
pub enum Tactic {
    /// Consume trailing deterministic assignments on both sides.
    Assign,
    /// Couple the final samples on both sides by the identity.
    Rnd,
    /// Exchange adjacent statements `i` and `j` (1-based) on one side.
    Swap(Side, usize, usize),
    /// Split after `k1` left and `k2` right statements at `mid`.
    Seq(usize, usize, Assertion),
    /// Split on a boolean condition of one side.
    Case(Side, Expr),
    /// Inline calls, optionally only to `M.p`.
    Inline(Option<(String, String)>),
    /// Both programs are empty; check `pre => post`.
    Skip,
    /// Decide the goal by enumeration.
    Auto,
    /// Assert that no goal remains.
    Done,
    Declassify(Side),
    Secrnd(Side),
    /// Map, key expression and fresh variable name.
    Secrndasgn(String, Expr, String),
}

#[derive(Clone, Debug, Error)]
pub enum TacticError {
    #[error("{0}")]
    Shape(String),
    #[error("statements cannot be swapped: {0}")]
    Swap(String),
    #[error("samples cannot be coupled: {0}")]
    Rnd(String),
    #[error("goal is false")]
    Refuted(Box<Counterexample>),
}

/// Every name a goal mentions, used to pick fresh identifiers.
pub fn goal_names(decls: &Decls, g: &RelGoal) -> Result<BTreeSet<String>, TacticError> {
    let mut names: BTreeSet<String> = g.vars.iter().chain(&g.locals).chain(&g.aug_left).map(|(n, _)| n.clone()).collect();
    names.extend(free_vars(decls, &g.left).map_err(TacticError::Shape)?);
    names.extend(free_vars(decls, &g.right).map_err(TacticError::Shape)?);
    names.extend(g.pre.idents());
    names.extend(g.post.idents());
    Ok(names)
}

/// `base#k` for the smallest `k` not already taken.
pub fn fresh(names: &BTreeSet<String>, base: &str) -> String {
    (0..)
        .map(|k| format!("{base}#{k}"))
        .find(|n| !names.contains(n))
        .expect("unbounded supply")
}

fn side_cmds(g: &RelGoal, side: Side) -> &Vec<Command> {
    match side {
        Side::Left => &g.left,
        Side::Right => &g.right,
    }
}

fn side_cmds_mut(g: &mut RelGoal, side: Side) -> &mut Vec<Command> {
    match side {
        Side::Left => &mut g.left,
        Side::Right => &mut g.right,
    }
}

/// Applies one tactic, returning the remaining subgoals.
pub fn apply_tactic(decls: &Decls, g: &RelGoal, t: &Tactic, fuel: u32) -> Result<Vec<RelGoal>, TacticError> {
    match t {
        Tactic::Assign => assign(g).map(|g| vec![g]),
        Tactic::Rnd => rnd(decls, g).map(|g| vec![g]),
        Tactic::Swap(side, i, j) => swap(decls, g, *side, *i, *j).map(|g| vec![g]),
        Tactic::Seq(k1, k2, mid) => seq(g, *k1, *k2, mid),
        Tactic::Case(side, e) => Ok(case(g, *side, e)),
        Tactic::Inline(target) => inline(decls, g, target.as_ref()).map(|g| vec![g]),
        Tactic::Skip => {
            if !g.left.is_empty() || !g.right.is_empty() {
                return Err(TacticError::Shape("skip needs both programs empty".into()));
            }
            auto(decls, g, fuel)
        }
        Tactic::Auto => auto(decls, g, fuel),
        Tactic::Done => Err(TacticError::Shape(format!("goal `{}` is still open", g.name))),
        Tactic::Declassify(side) => lazy::declassify(g, *side).map(|g| vec![g]),
        Tactic::Secrnd(side) => lazy::secrnd(decls, g, *side).map(|g| vec![g]),
        Tactic::Secrndasgn(t, x, v) => lazy::secrndasgn(decls, g, t, x, v),
    }
}

fn auto(decls: &Decls, g: &RelGoal, fuel: u32) -> Result<Vec<RelGoal>, TacticError> {
    match discharge(decls, g, fuel).map_err(TacticError::Shape)? {
        Discharge::Proven { .. } => Ok(vec![]),
        Discharge::Refuted(c) => Err(TacticError::Refuted(c)),
    }
}

fn pop_assigns(cmds: &mut Vec<Command>, side: Side, mut post: Assertion) -> (Assertion, bool) {
    let mut any = false;
    while let Some(Command::Assign(lv, e)) = cmds.last().cloned() {
        cmds.pop();
        post = wp_assign(side, &lv, &e, post);
        any = true;
    }
    (post, any)
}

fn assign(g: &RelGoal) -> Result<RelGoal, TacticError> {
    let mut g = g.clone();
    let (post, a) = pop_assigns(&mut g.left, Side::Left, g.post.clone());
    let (post, b) = pop_assigns(&mut g.right, Side::Right, post);
    if !a && !b {
        return Err(TacticError::Shape("no trailing assignment on either side".into()));
    }
    g.post = post;
    Ok(g)
}

fn rnd(decls: &Decls, g: &RelGoal) -> Result<RelGoal, TacticError> {
    let (Some(Command::Sample(LVal::Var(a), d1)), Some(Command::Sample(LVal::Var(b), d2))) = (g.left.last(), g.right.last()) else {
        return Err(TacticError::Rnd("both programs must end with a sample into a variable".into()));
    };
    let closed = |d: &DistExpr| {
        eval_dist(decls, d, &Memory::new(), &[]).map_err(|e| TacticError::Rnd(format!("distribution is not closed: {e}")))
    };
    if closed(d1)? != closed(d2)? {
        return Err(TacticError::Rnd("distributions differ".into()));
    }
    let vars: Vec<(String, Ty)> = g.vars.iter().chain(&g.locals).cloned().collect();
    let ty = dist_ty(decls, &vars, d1).map_err(TacticError::Rnd)?;
    let y = fresh(&goal_names(decls, g)?, "y");
    let ye = Expr::name(&y);
    let body = subst(&g.post, Side::Left, a, &ye)
        .and_then(|p| subst(&p, Side::Right, b, &ye))
        .ok_or_else(|| TacticError::Rnd("post condition cannot be rewritten".into()))?;
    let mut g = g.clone();
    g.left.pop();
    g.right.pop();
    g.post = Assertion::Forall(y, ty, Box::new(body));
    Ok(g)
}

fn swap(decls: &Decls, g: &RelGoal, side: Side, i: usize, j: usize) -> Result<RelGoal, TacticError> {
    let cmds = side_cmds(g, side);
    let (lo, hi) = (i.min(j), i.max(j));
    if lo == 0 || hi != lo + 1 || hi > cmds.len() {
        return Err(TacticError::Swap(format!("positions {i} and {j} are not adjacent statements")));
    }
    let rw = |c: &Command| rw_sets(decls, std::slice::from_ref(c)).map_err(TacticError::Swap);
    let a = rw(&cmds[lo - 1])?;
    let b = rw(&cmds[hi - 1])?;
    let b_all = b.all();
    let clash: BTreeSet<&String> = a
        .writes
        .intersection(&b_all)
        .chain(b.writes.intersection(&a.reads))
        .collect();
    if !clash.is_empty() {
        let names: Vec<&str> = clash.into_iter().map(|s| s.as_str()).collect();
        return Err(TacticError::Swap(format!("both touch {}", names.join(", "))));
    }
    let mut g = g.clone();
    side_cmds_mut(&mut g, side).swap(lo - 1, hi - 1);
    Ok(g)
}

fn seq(g: &RelGoal, k1: usize, k2: usize, mid: &Assertion) -> Result<Vec<RelGoal>, TacticError> {
    if k1 > g.left.len() || k2 > g.right.len() {
        return Err(TacticError::Shape("split point past the end of a program".into()));
    }
    let mut first = g.clone();
    first.name = format!("{}/1", g.name);
    first.left.truncate(k1);
    first.right.truncate(k2);
    first.post = mid.clone();
    let mut second = g.clone();
    second.name = format!("{}/2", g.name);
    second.left.drain(..k1);
    second.right.drain(..k2);
    second.pre = mid.clone();
    Ok(vec![first, second])
}

fn case(g: &RelGoal, side: Side, e: &Expr) -> Vec<RelGoal> {
    let neg = Expr::not(e.clone());
    [(e.clone(), true, "t"), (neg, false, "f")]
        .into_iter()
        .map(|(cond, positive, tag)| {
            let mut sub = g.clone();
            sub.name = format!("{}/{tag}", g.name);
            sub.pre = Assertion::and(g.pre.clone(), Assertion::Test(side, cond));
            let cmds = side_cmds_mut(&mut sub, side);
            if let Some(Command::If(c, th, el)) = cmds.first().cloned() {
                let branch = if c == *e {
                    Some(if positive { th } else { el })
                } else if c == Expr::not(e.clone()) {
                    Some(if positive { el } else { th })
                } else {
                    None
                };
                if let Some(b) = branch {
                    cmds.splice(0..1, b);
                }
            }
            sub
        })
        .collect()
}

fn inline(decls: &Decls, g: &RelGoal, target: Option<&(String, String)>) -> Result<RelGoal, TacticError> {
    let mut g = g.clone();
    let base = goal_names(decls, &g)?;
    let mut locals: Vec<(String, Ty)> = Vec::new();
    let mut changed = false;
    // Each side draws fresh names independently, so matching calls inline
    // to matching code.
    for side in [Side::Left, Side::Right] {
        let mut names = base.clone();
        let mut side_locals = Vec::new();
        let cmds = side_cmds(&g, side).clone();
        let out = inline_cmds(decls, &cmds, target, &mut names, &mut side_locals, &mut changed)?;
        *side_cmds_mut(&mut g, side) = out;
        for l in side_locals {
            if !locals.iter().any(|(n, _)| *n == l.0) {
                locals.push(l);
            }
        }
    }
    if !changed {
        return Err(TacticError::Shape("no call to inline".into()));
    }
    g.locals.extend(locals);
    Ok(g)
}

fn inline_cmds(
    decls: &Decls,
    cmds: &[Command],
    target: Option<&(String, String)>,
    names: &mut BTreeSet<String>,
    locals: &mut Vec<(String, Ty)>,
    changed: &mut bool,
) -> Result<Vec<Command>, TacticError> {
    let mut out = Vec::new();
    for c in cmds {
        match c {
            Command::Call(lv, m, p, args) if target.is_none_or(|(tm, tp)| tm == m && tp == p) => {
                let module = decls.module(m).ok_or_else(|| TacticError::Shape(format!("unknown module `{m}`")))?;
                let proc = module.proc(p).ok_or_else(|| TacticError::Shape(format!("unknown procedure `{m}.{p}`")))?;
                if proc.params.len() != args.len() {
                    return Err(TacticError::Shape(format!("`{m}.{p}` called with the wrong number of arguments")));
                }
                let written = rw_sets(decls, &proc.body).map_err(TacticError::Shape)?.writes;
                let mut ren: HashMap<String, Expr> = HashMap::new();
                for ((pn, pty), a) in proc.params.iter().zip(args) {
                    let mut arg_vars = BTreeSet::new();
                    a.for_each_ident(&mut |n| {
                        arg_vars.insert(n.to_string());
                    });
                    if !written.contains(pn) && arg_vars.is_disjoint(&written) {
                        ren.insert(pn.clone(), a.clone());
                    } else {
                        let n = fresh(names, pn);
                        names.insert(n.clone());
                        locals.push((n.clone(), pty.clone()));
                        out.push(Command::Assign(LVal::Var(n.clone()), a.clone()));
                        ren.insert(pn.clone(), Expr::Name(n));
                    }
                }
                for (ln, lty) in &proc.locals {
                    let n = fresh(names, ln);
                    names.insert(n.clone());
                    locals.push((n.clone(), lty.clone()));
                    ren.insert(ln.clone(), Expr::Name(n));
                }
                out.extend(rename_cmds(&proc.body, &ren));
                if let (Some(lv), Some(r)) = (lv, &proc.ret) {
                    out.push(Command::Assign(lv.clone(), rename_expr(r, &ren)));
                }
                *changed = true;
            }
            Command::If(e, a, b) => out.push(Command::If(
                e.clone(),
                inline_cmds(decls, a, target, names, locals, changed)?,
                inline_cmds(decls, b, target, names, locals, changed)?,
            )),
            Command::While(e, body) => {
                out.push(Command::While(e.clone(), inline_cmds(decls, body, target, names, locals, changed)?))
            }
            c => out.push(c.clone()),
        }
    }
    Ok(out)
}

fn rename_name(n: &str, ren: &HashMap<String, Expr>) -> String {
    match ren.get(n) {
        Some(Expr::Name(m)) => m.clone(),
        _ => n.to_string(),
    }
}

fn rename_expr(e: &Expr, ren: &HashMap<String, Expr>) -> Expr {
    let r = |x: &Expr| Box::new(rename_expr(x, ren));
    match e {
        Expr::Name(n) => ren.get(n).cloned().unwrap_or_else(|| e.clone()),
        Expr::Bool(_) | Expr::Conf(_) | Expr::Bot | Expr::Empty => e.clone(),
        Expr::Dist(d) => Expr::Dist(rename_dist(d, ren)),
        Expr::Lookup(m, k) => Expr::Lookup(rename_name(m, ren), r(k)),
        Expr::Dom(m, k) => Expr::Dom(rename_name(m, ren), r(k)),
        Expr::Eq(a, b) => Expr::Eq(r(a), r(b)),
        Expr::And(a, b) => Expr::And(r(a), r(b)),
        Expr::Not(a) => Expr::Not(r(a)),
        Expr::Proj(i, a) => Expr::Proj(*i, r(a)),
        Expr::Triple(a, b, c) => Expr::Triple(r(a), r(b), r(c)),
    }
}

fn rename_dist(d: &DistExpr, ren: &HashMap<String, Expr>) -> DistExpr {
    match d {
        DistExpr::Point(e) => DistExpr::Point(Box::new(rename_expr(e, ren))),
        d => d.clone(),
    }
}

fn rename_lval(lv: &LVal, ren: &HashMap<String, Expr>) -> LVal {
    match lv {
        LVal::Var(v) => LVal::Var(rename_name(v, ren)),
        LVal::Index(m, k) => LVal::Index(rename_name(m, ren), rename_expr(k, ren)),
    }
}

fn rename_cmds(cmds: &[Command], ren: &HashMap<String, Expr>) -> Vec<Command> {
    cmds.iter()
        .map(|c| match c {
            Command::Skip => Command::Skip,
            Command::Assign(lv, e) => Command::Assign(rename_lval(lv, ren), rename_expr(e, ren)),
            Command::Sample(lv, d) => Command::Sample(rename_lval(lv, ren), rename_dist(d, ren)),
            Command::SecSample(lv, d) => Command::SecSample(rename_lval(lv, ren), rename_dist(d, ren)),
            Command::SecRead(w, src) => Command::SecRead(rename_lval(w, ren), rename_lval(src, ren)),
            Command::If(e, a, b) => Command::If(rename_expr(e, ren), rename_cmds(a, ren), rename_cmds(b, ren)),
            Command::While(e, b) => Command::While(rename_expr(e, ren), rename_cmds(b, ren)),
            Command::Call(lv, m, p, args) => Command::Call(
                lv.as_ref().map(|lv| rename_lval(lv, ren)),
                m.clone(),
                p.clone(),
                args.iter().map(|a| rename_expr(a, ren)).collect(),
            ),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse;

    const SRC: &str = "type X = {x0, x1};
        module M { var g: X; proc id(a: X): X { var o: X; o <- a; return o; } }
        goal call { vars x: X, r: X; left { r <@ M.id(x); } right { r <- x; } pre ={x}; post ={r}; }
        goal ifs { vars x: X, r: X; left { if x == x0 { r <- x0; } else { r <- x1; } } right { r <- x; } pre ={x}; post ={r}; }";

    #[test]
    fn fresh_names_skip_taken_ones() {
        let taken: BTreeSet<String> = ["v#0".to_string(), "v#1".to_string()].into();
        assert_eq!(fresh(&taken, "v"), "v#2");
        assert_eq!(fresh(&BTreeSet::new(), "r"), "r#0");
    }

    #[test]
    fn inline_then_assign() {
        let f = parse(SRC).unwrap();
        let g = f.goal("call").unwrap();
        let g = apply_tactic(&f.decls, g, &Tactic::Inline(None), 8).unwrap().remove(0);
        assert!(!g.left.iter().any(|c| matches!(c, Command::Call(..))));
        let g = apply_tactic(&f.decls, &g, &Tactic::Assign, 8).unwrap().remove(0);
        assert!(g.left.is_empty() && g.right.is_empty());
        assert!(apply_tactic(&f.decls, &g, &Tactic::Skip, 8).unwrap().is_empty());
    }

    #[test]
    fn case_reduces_the_branch() {
        let f = parse(SRC).unwrap();
        let g = f.goal("ifs").unwrap();
        let cond = Expr::Eq(Box::new(Expr::name("x")), Box::new(Expr::name("x0")));
        let subs = apply_tactic(&f.decls, g, &Tactic::Case(Side::Left, cond), 8).unwrap();
        assert_eq!(subs.len(), 2);
        assert_eq!(subs[0].name, "ifs/t");
        for s in &subs {
            assert!(matches!(s.left[..], [Command::Assign(..)]));
            assert!(apply_tactic(&f.decls, s, &Tactic::Auto, 8).unwrap().is_empty());
        }
    }

    #[test]
    fn seq_splits_at_the_cut() {
        let f = parse(SRC).unwrap();
        let g = f.goal("ifs").unwrap();
        let subs = apply_tactic(&f.decls, g, &Tactic::Seq(0, 1, Assertion::VarEq("x".into())), 8).unwrap();
        assert_eq!(subs.len(), 2);
        assert!(subs[0].left.is_empty() && subs[0].right.len() == 1);
        assert_eq!(subs[1].pre, Assertion::VarEq("x".into()));
        assert!(apply_tactic(&f.decls, g, &Tactic::Seq(5, 0, Assertion::True), 8).is_err());
    }
}
