//! Lazy-sampling reasoning: the secure-assignment invariant and the
//! tactics that rewrite labeled reads and samples.

use std::collections::BTreeMap;

use crate::dist::Dist;
use crate::lang::ast::{Command, DistExpr, Expr, LVal, Ty};
use crate::lang::check::{dist_ty, rw_sets};
use crate::lang::decls::Decls;
use crate::lang::value::{in_r, is_leaked, Conf, Elem, Labeled};
use crate::relational::assertion::{Assertion, RelOp, Side};
use crate::relational::goal::RelGoal;
use crate::relational::tactics::{fresh, goal_names, TacticError};

/// Per-clause truth of the invariant between `t1` (eager side) and `t2`
/// (lazy side), for origin `d`:
///
/// 0. every set entry of `t2` comes from `d`;
/// 1. keys set in `t1` are set in `t2` with the same value;
/// 2. leaked entries of `t1` are identical in `t2`;
/// 3. entries set only in `t2` are secret.
pub fn sec_invariant_clauses(t1: &BTreeMap<Elem, Labeled>, t2: &BTreeMap<Elem, Labeled>, d: &Dist<Elem>) -> [bool; 4] {
    let mut out = [true; 4];
    for (k, l2) in t2 {
        if !in_r(l2, d) {
            out[0] = false;
        }
        if !t1.contains_key(k) && is_leaked(l2) {
            out[3] = false;
        }
    }
    for (k, l1) in t1 {
        match t2.get(k) {
            None => {
                out[1] = false;
                if is_leaked(l1) {
                    out[2] = false;
                }
            }
            Some(l2) => {
                if l1.value != l2.value {
                    out[1] = false;
                }
                if is_leaked(l1) && l1 != l2 {
                    out[2] = false;
                }
            }
        }
    }
    out
}

pub fn sec_invariant_holds(t1: &BTreeMap<Elem, Labeled>, t2: &BTreeMap<Elem, Labeled>, d: &Dist<Elem>) -> bool {
    sec_invariant_clauses(t1, t2, d).iter().all(|b| *b)
}

fn side_mut(g: &mut RelGoal, side: Side) -> &mut Vec<Command> {
    match side {
        Side::Left => &mut g.left,
        Side::Right => &mut g.right,
    }
}

/// Rewrites the first top-level labeled read `w <~ src` on `side` into
/// an explicit leak followed by a plain read.
pub fn declassify(g: &RelGoal, side: Side) -> Result<RelGoal, TacticError> {
    let mut g = g.clone();
    let cmds = side_mut(&mut g, side);
    let i = cmds
        .iter()
        .position(|c| matches!(c, Command::SecRead(..)))
        .ok_or_else(|| TacticError::Shape("no labeled read left to declassify".into()))?;
    let Command::SecRead(w, src) = cmds[i].clone() else { unreachable!() };
    let s = src.to_expr();
    let leak = Command::Assign(
        src.clone(),
        Expr::triple(Expr::proj(1, s.clone()), Expr::proj(2, s.clone()), Expr::Conf(Conf::Leaked)),
    );
    let read = Command::Assign(w, Expr::proj(1, s));
    cmds.splice(i..=i, [leak, read]);
    Ok(g)
}

fn dist_as_expr(d: &DistExpr) -> Expr {
    match d {
        DistExpr::Named(n) => Expr::Name(n.clone()),
        d => Expr::Dist(d.clone()),
    }
}

/// Rewrites the first top-level labeled sample `lv <~$ d` on `side` into a
/// plain sample into a fresh local followed by a secret assignment.
pub fn secrnd(decls: &Decls, g: &RelGoal, side: Side) -> Result<RelGoal, TacticError> {
    let names = goal_names(decls, g)?;
    let v = fresh(&names, "v");
    let mut g = g.clone();
    let vars: Vec<(String, Ty)> = g.vars.iter().chain(&g.locals).chain(&g.aug_left).cloned().collect();
    let cmds = side_mut(&mut g, side);
    let i = cmds
        .iter()
        .position(|c| matches!(c, Command::SecSample(..)))
        .ok_or_else(|| TacticError::Shape("no labeled sample left to rewrite".into()))?;
    let Command::SecSample(lv, d) = cmds[i].clone() else { unreachable!() };
    let ty = dist_ty(decls, &vars, &d).map_err(TacticError::Shape)?;
    let sample = Command::Sample(LVal::Var(v.clone()), d.clone());
    let assign = Command::Assign(lv, Expr::triple(Expr::name(&v), dist_as_expr(&d), Expr::Conf(Conf::Secret)));
    cmds.splice(i..=i, [sample, assign]);
    g.locals.push((v, Ty::Fin(ty)));
    Ok(g)
}

/// Relates a labeled sample on the left with a lazily kept secret on the
/// right. Expects exactly `t[x] <~$ d; r <~ t[x]` against `r <~ t[x]`.
///
/// The first subgoal checks that `v` can stand for the right-hand entry
/// before the read; the second replays the left program with `t[x] <- v`.
pub fn secrndasgn(decls: &Decls, g: &RelGoal, t: &str, x: &Expr, v: &str) -> Result<Vec<RelGoal>, TacticError> {
    let bad = |why: &str| Err(TacticError::Shape(format!("secrndasgn: {why}")));
    let entry = LVal::Index(t.to_string(), x.clone());
    let (d, r) = match g.left.as_slice() {
        [Command::SecSample(lv, d), Command::SecRead(r, src)] if *lv == entry && *src == entry => (d.clone(), r.clone()),
        _ => return bad("left program must be `t[x] <~$ d; r <~ t[x]`"),
    };
    match g.right.as_slice() {
        [Command::SecRead(r2, src)] if *r2 == r && *src == entry => {}
        _ => return bad("right program must be `r <~ t[x]` with the same target"),
    }
    let names = goal_names(decls, g)?;
    if names.contains(v) || decls.is_global_constant(v) {
        return bad(&format!("`{v}` is not fresh"));
    }
    let vars: Vec<(String, Ty)> = g.vars.iter().chain(&g.locals).cloned().collect();
    let ty = dist_ty(decls, &vars, &d).map_err(TacticError::Shape)?;

    let entry_e = entry.to_expr();
    let v_eq = Assertion::Rel(Side::Left, Expr::name(v), RelOp::Eq, Side::Right, entry_e.clone());
    let pre = Assertion::and(g.pre.clone(), v_eq.clone());

    let mut written = rw_sets(decls, &g.left).map_err(TacticError::Shape)?.writes;
    written.extend(rw_sets(decls, &g.right).map_err(TacticError::Shape)?.writes);
    let mut frame: Vec<Assertion> = g
        .post
        .conjuncts()
        .into_iter()
        .filter(|c| c.idents().is_disjoint(&written))
        .cloned()
        .collect();
    frame.extend([
        v_eq,
        Assertion::not(Assertion::Leaked(Side::Left, Expr::name(v))),
        Assertion::not(Assertion::Dom(Side::Left, t.to_string(), x.clone())),
        Assertion::Dom(Side::Right, t.to_string(), x.clone()),
    ]);

    let mut base = g.clone();
    base.pre = pre;
    base.aug_left.push((v.to_string(), Ty::Lab(ty)));
    base.sampled = Some((t.to_string(), x.clone()));

    let mut sub1 = base.clone();
    sub1.name = format!("{}/fresh", g.name);
    sub1.left = vec![];
    sub1.right = vec![];
    sub1.post = Assertion::And(frame);

    let mut sub2 = base;
    sub2.name = format!("{}/replay", g.name);
    sub2.left = vec![Command::Assign(entry.clone(), Expr::name(v)), Command::SecRead(r, entry)];
    sub2.post = Assertion::and(
        Assertion::and(g.post.clone(), Assertion::From(Side::Left, entry_e, d.clone())),
        Assertion::SecInv(t.to_string(), t.to_string(), d),
    );
    Ok(vec![sub1, sub2])
}
