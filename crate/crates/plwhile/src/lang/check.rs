//! Type checking, the label-usage guard, and free-variable analysis.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{One, Zero};

use crate::dist::Rational;
use crate::lang::ast::{Command, DistExpr, Expr, LVal, Module, Ty};
use crate::lang::decls::{Decls, DistDef};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeError {
    pub location: String,
    pub message: String,
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

/// A plain-syntax use of a labeled identifier.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GuardViolation {
    pub location: String,
    pub ident: String,
}

impl fmt::Display for GuardViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: labeled identifier `{}` used outside labeled syntax", self.location, self.ident)
    }
}

const ANY: &str = "";

fn compat(expected: &Ty, actual: &Ty) -> bool {
    match (expected, actual) {
        (Ty::Origin(a), Ty::Origin(b)) => a == b || a == ANY || b == ANY,
        (Ty::Map(a, b), Ty::Map(c, d)) => (a == c && b == d) || (c == ANY && d == ANY),
        (a, b) => a == b,
    }
}

fn lookup_var<'v>(vars: &'v [(String, Ty)], name: &str) -> Option<&'v Ty> {
    vars.iter().rev().find(|(n, _)| n == name).map(|(_, t)| t)
}

/// Type of an expression under `vars`; later bindings shadow earlier ones.
pub fn type_of(decls: &Decls, vars: &[(String, Ty)], e: &Expr) -> Result<Ty, String> {
    match e {
        Expr::Name(n) => {
            if let Some(t) = lookup_var(vars, n) {
                return Ok(t.clone());
            }
            if let Some(el) = decls.elem(n) {
                return Ok(Ty::Fin(decls.type_name(el.ty).to_string()));
            }
            if decls.dist(n).is_some() {
                return Ok(Ty::Origin(dist_ty(decls, vars, &DistExpr::Named(n.clone()))?));
            }
            Err(format!("unknown identifier `{n}`"))
        }
        Expr::Bool(_) => Ok(Ty::Bool),
        Expr::Conf(_) => Ok(Ty::Conf),
        Expr::Bot => Ok(Ty::Origin(ANY.into())),
        Expr::Empty => Ok(Ty::Map(ANY.into(), ANY.into())),
        Expr::Dist(d) => Ok(Ty::Origin(dist_ty(decls, vars, d)?)),
        Expr::Lookup(m, k) | Expr::Dom(m, k) => {
            let (kt, vt) = match lookup_var(vars, m) {
                Some(Ty::Map(kt, vt)) => (kt.clone(), vt.clone()),
                Some(t) => return Err(format!("`{m}` has type {t:?}, not a map")),
                None => return Err(format!("unknown identifier `{m}`")),
            };
            let got = type_of(decls, vars, k)?;
            if got != Ty::Fin(kt.clone()) {
                return Err(format!("key of `{m}` must have type {kt}, got {got:?}"));
            }
            Ok(if matches!(e, Expr::Dom(..)) { Ty::Bool } else { Ty::Lab(vt) })
        }
        Expr::Eq(a, b) => {
            let ta = type_of(decls, vars, a)?;
            let tb = type_of(decls, vars, b)?;
            if compat(&ta, &tb) || compat(&tb, &ta) {
                Ok(Ty::Bool)
            } else {
                Err(format!("cannot compare {ta:?} with {tb:?}"))
            }
        }
        Expr::Not(a) => expect_bool(decls, vars, a),
        Expr::And(a, b) => {
            expect_bool(decls, vars, a)?;
            expect_bool(decls, vars, b)
        }
        Expr::Proj(i, a) => match type_of(decls, vars, a)? {
            Ty::Lab(t) => Ok(match i {
                1 => Ty::Fin(t),
                2 => Ty::Origin(t),
                3 => Ty::Conf,
                _ => return Err(format!("no projection pi{i}")),
            }),
            t => Err(format!("projection of non-labeled {t:?}")),
        },
        Expr::Triple(a, b, c) => {
            let t = match type_of(decls, vars, a)? {
                Ty::Fin(t) => t,
                t => return Err(format!("labeled value over non-finite {t:?}")),
            };
            let tb = type_of(decls, vars, b)?;
            if !compat(&Ty::Origin(t.clone()), &tb) {
                return Err(format!("origin of type {tb:?} does not match {t}"));
            }
            if type_of(decls, vars, c)? != Ty::Conf {
                return Err("third component must be S or L".into());
            }
            Ok(Ty::Lab(t))
        }
    }
}

fn expect_bool(decls: &Decls, vars: &[(String, Ty)], e: &Expr) -> Result<Ty, String> {
    match type_of(decls, vars, e)? {
        Ty::Bool => Ok(Ty::Bool),
        t => Err(format!("expected bool, got {t:?}")),
    }
}

/// The finite type a distribution expression ranges over.
pub fn dist_ty(decls: &Decls, vars: &[(String, Ty)], d: &DistExpr) -> Result<String, String> {
    dist_ty_depth(decls, vars, d, 0)
}

fn dist_ty_depth(decls: &Decls, vars: &[(String, Ty)], d: &DistExpr, depth: usize) -> Result<String, String> {
    if depth > 32 {
        return Err("distribution bindings are cyclic".into());
    }
    match d {
        DistExpr::Uniform(t) => decls
            .type_id(t)
            .map(|_| t.clone())
            .ok_or_else(|| format!("unknown type `{t}`")),
        DistExpr::Point(e) => match type_of(decls, vars, e)? {
            Ty::Fin(t) => Ok(t),
            t => Err(format!("dirac over non-finite {t:?}")),
        },
        DistExpr::Named(n) => {
            let b = decls.dist(n).ok_or_else(|| format!("unknown distribution `{n}`"))?;
            match &b.def {
                DistDef::Expr(inner) => dist_ty_depth(decls, &[], inner, depth + 1),
                DistDef::Table(rows) => {
                    let first = rows.first().ok_or_else(|| format!("distribution `{n}` is empty"))?;
                    let el = decls
                        .elem(&first.0)
                        .ok_or_else(|| format!("unknown element `{}`", first.0))?;
                    Ok(decls.type_name(el.ty).to_string())
                }
            }
        }
    }
}

fn check_ty(decls: &Decls, t: &Ty) -> Result<(), String> {
    let need = |n: &str| {
        decls.type_id(n).map(|_| ()).ok_or_else(|| format!("unknown type `{n}`"))
    };
    match t {
        Ty::Unit | Ty::Bool | Ty::Conf => Ok(()),
        Ty::Fin(n) | Ty::Lab(n) | Ty::Origin(n) => need(n),
        Ty::Map(k, v) => {
            need(k)?;
            need(v)
        }
    }
}

/// Validates the distribution bindings of a file.
pub fn check_dists(decls: &Decls) -> Vec<TypeError> {
    let mut errs = Vec::new();
    for b in &decls.dists {
        let loc = format!("dist {}", b.name);
        if let Err(m) = dist_ty(decls, &[], &DistExpr::Named(b.name.clone())) {
            errs.push(TypeError { location: loc.clone(), message: m });
            continue;
        }
        if let DistDef::Table(rows) = &b.def {
            let mut total = Rational::zero();
            let mut ty = None;
            for (e, w) in rows {
                match decls.elem(e) {
                    Some(el) if ty.is_none() || ty == Some(el.ty) => ty = Some(el.ty),
                    Some(_) => errs.push(TypeError {
                        location: loc.clone(),
                        message: format!("element `{e}` has a different type"),
                    }),
                    None => errs.push(TypeError {
                        location: loc.clone(),
                        message: format!("unknown element `{e}`"),
                    }),
                }
                if *w < Rational::zero() {
                    errs.push(TypeError { location: loc.clone(), message: "negative weight".into() });
                }
                total += w;
            }
            if total > Rational::one() {
                errs.push(TypeError { location: loc, message: "weights sum above 1".into() });
            }
        }
    }
    errs
}

fn lval_ty(decls: &Decls, vars: &[(String, Ty)], lv: &LVal) -> Result<Ty, String> {
    match lv {
        LVal::Var(v) => lookup_var(vars, v)
            .cloned()
            .ok_or_else(|| format!("unknown variable `{v}`")),
        LVal::Index(m, k) => type_of(decls, vars, &Expr::Lookup(m.clone(), Box::new(k.clone()))),
    }
}

/// Type-checks a command list under `vars`, collecting every error.
pub fn check_commands(decls: &Decls, vars: &[(String, Ty)], cmds: &[Command], loc: &str) -> Vec<TypeError> {
    let mut errs = Vec::new();
    for (i, c) in cmds.iter().enumerate() {
        let here = format!("{loc} stmt {}", i + 1);
        check_command(decls, vars, c, &here, &mut errs);
    }
    errs
}

fn check_command(decls: &Decls, vars: &[(String, Ty)], c: &Command, loc: &str, errs: &mut Vec<TypeError>) {
    let mut err = |m: String| errs.push(TypeError { location: loc.to_string(), message: m });
    match c {
        Command::Skip => {}
        Command::Assign(lv, e) => match (lval_ty(decls, vars, lv), type_of(decls, vars, e)) {
            (Ok(tl), Ok(te)) if compat(&tl, &te) => {}
            (Ok(tl), Ok(te)) => err(format!("cannot assign {te:?} to {tl:?}")),
            (Err(m), _) | (_, Err(m)) => err(m),
        },
        Command::Sample(lv, d) => match (lval_ty(decls, vars, lv), dist_ty(decls, vars, d)) {
            (Ok(Ty::Fin(t)), Ok(dt)) if t == dt => {}
            (Ok(tl), Ok(dt)) => err(format!("cannot sample {dt} into {tl:?}")),
            (Err(m), _) | (_, Err(m)) => err(m),
        },
        Command::SecSample(lv, d) => match (lval_ty(decls, vars, lv), dist_ty(decls, vars, d)) {
            (Ok(Ty::Lab(t)), Ok(dt)) if t == dt => {}
            (Ok(tl), Ok(dt)) => err(format!("cannot securely sample {dt} into {tl:?}")),
            (Err(m), _) | (_, Err(m)) => err(m),
        },
        Command::SecRead(w, src) => match (lval_ty(decls, vars, w), lval_ty(decls, vars, src)) {
            (Ok(Ty::Fin(a)), Ok(Ty::Lab(b))) if a == b => {}
            (Ok(tw), Ok(ts)) => err(format!("cannot read {ts:?} into {tw:?}")),
            (Err(m), _) | (_, Err(m)) => err(m),
        },
        Command::If(cond, a, b) => {
            if let Err(m) = expect_bool(decls, vars, cond) {
                err(m);
            }
            errs.extend(check_commands(decls, vars, a, &format!("{loc} then")));
            errs.extend(check_commands(decls, vars, b, &format!("{loc} else")));
        }
        Command::While(cond, body) => {
            if let Err(m) = expect_bool(decls, vars, cond) {
                err(m);
            }
            errs.extend(check_commands(decls, vars, body, &format!("{loc} body")));
        }
        Command::Call(target, m, p, args) => {
            let Some(module) = decls.module(m) else {
                return err(format!("unknown module `{m}`"));
            };
            let Some(proc_) = module.proc(p) else {
                return err(format!("unknown procedure `{m}.{p}`"));
            };
            if proc_.params.len() != args.len() {
                return err(format!("`{m}.{p}` expects {} arguments", proc_.params.len()));
            }
            for ((_, pt), a) in proc_.params.iter().zip(args) {
                match type_of(decls, vars, a) {
                    Ok(t) if compat(pt, &t) => {}
                    Ok(t) => err(format!("argument of type {t:?} where {pt:?} expected")),
                    Err(msg) => err(msg),
                }
            }
            if let Some(lv) = target {
                match (lval_ty(decls, vars, lv), &proc_.ret_ty) {
                    (Ok(t), Some(rt)) if compat(&t, rt) => {}
                    (Ok(_), None) => err(format!("`{m}.{p}` returns nothing")),
                    (Ok(t), Some(rt)) => err(format!("cannot assign {rt:?} to {t:?}")),
                    (Err(msg), _) => err(msg),
                }
            }
        }
    }
}

/// Checks every declaration, command and expression of a module.
pub fn well_formed(decls: &Decls, module: &Module) -> Result<(), Vec<TypeError>> {
    let mut errs = Vec::new();
    let push = |errs: &mut Vec<TypeError>, loc: &str, m: String| {
        errs.push(TypeError { location: loc.into(), message: m })
    };
    let mname = &module.name;
    let mut seen = BTreeSet::new();
    for (g, t) in &module.globals {
        if let Err(m) = check_ty(decls, t) {
            push(&mut errs, mname, m);
        }
        if decls.is_global_constant(g) || !seen.insert(g.clone()) {
            push(&mut errs, mname, format!("name `{g}` is already declared"));
        }
    }
    for p in &module.procs {
        let loc = format!("{}.{}", mname, p.name);
        let mut vars = module.globals.clone();
        let mut local_names = BTreeSet::new();
        for (n, t) in p.params.iter().chain(&p.locals) {
            if let Err(m) = check_ty(decls, t) {
                push(&mut errs, &loc, m);
            }
            if decls.is_global_constant(n) || !local_names.insert(n.clone()) {
                push(&mut errs, &loc, format!("name `{n}` is already declared"));
            }
            vars.push((n.clone(), t.clone()));
        }
        errs.extend(check_commands(decls, &vars, &p.body, &loc));
        match (&p.ret_ty, &p.ret) {
            (Some(rt), Some(e)) => match type_of(decls, &vars, e) {
                Ok(t) if compat(rt, &t) => {}
                Ok(t) => errs.push(TypeError { location: loc.clone(), message: format!("returns {t:?}, declared {rt:?}") }),
                Err(m) => errs.push(TypeError { location: loc.clone(), message: m }),
            },
            (Some(_), None) => errs.push(TypeError { location: loc.clone(), message: "missing return".into() }),
            (None, Some(_)) => errs.push(TypeError { location: loc.clone(), message: "unexpected return value".into() }),
            (None, None) => {}
        }
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}

/// Rejects plain-syntax uses of labeled variables and labeled-codomain maps.
///
/// Allowed: sec-read sources, sec-sample targets, domain tests, and the
/// whole-map reset `t <- empty`.
pub fn guard_check(decls: &Decls, module: &Module) -> Result<(), Vec<GuardViolation>> {
    let mut out = Vec::new();
    for p in &module.procs {
        let labeled: BTreeSet<String> = module
            .globals
            .iter()
            .chain(&p.params)
            .chain(&p.locals)
            .filter(|(_, t)| t.is_labeled())
            .map(|(n, _)| n.clone())
            .collect();
        let g = Guard { decls, labeled: &labeled };
        let loc = format!("{}.{}", module.name, p.name);
        g.cmds(&p.body, &loc, &mut out);
        if let Some(e) = &p.ret {
            g.expr(e, &format!("{loc} return"), &mut out);
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

struct Guard<'a> {
    #[allow(dead_code)]
    decls: &'a Decls,
    labeled: &'a BTreeSet<String>,
}

impl Guard<'_> {
    fn flag(&self, ident: &str, loc: &str, out: &mut Vec<GuardViolation>) {
        if self.labeled.contains(ident) {
            out.push(GuardViolation { location: loc.to_string(), ident: ident.to_string() });
        }
    }

    fn expr(&self, e: &Expr, loc: &str, out: &mut Vec<GuardViolation>) {
        match e {
            Expr::Name(n) => self.flag(n, loc, out),
            Expr::Bool(_) | Expr::Conf(_) | Expr::Bot | Expr::Empty => {}
            Expr::Dist(d) => self.dist(d, loc, out),
            Expr::Lookup(m, k) => {
                self.flag(m, loc, out);
                self.expr(k, loc, out);
            }
            Expr::Dom(_, k) => self.expr(k, loc, out),
            Expr::Eq(a, b) | Expr::And(a, b) => {
                self.expr(a, loc, out);
                self.expr(b, loc, out);
            }
            Expr::Not(a) | Expr::Proj(_, a) => self.expr(a, loc, out),
            Expr::Triple(a, b, c) => {
                self.expr(a, loc, out);
                self.expr(b, loc, out);
                self.expr(c, loc, out);
            }
        }
    }

    fn dist(&self, d: &DistExpr, loc: &str, out: &mut Vec<GuardViolation>) {
        if let DistExpr::Point(e) = d {
            self.expr(e, loc, out);
        }
    }

    fn key(&self, lv: &LVal, loc: &str, out: &mut Vec<GuardViolation>) {
        if let LVal::Index(_, k) = lv {
            self.expr(k, loc, out);
        }
    }

    fn plain_target(&self, lv: &LVal, loc: &str, out: &mut Vec<GuardViolation>) {
        self.flag(lv.base(), loc, out);
        self.key(lv, loc, out);
    }

    fn cmds(&self, cmds: &[Command], loc: &str, out: &mut Vec<GuardViolation>) {
        for (i, c) in cmds.iter().enumerate() {
            let here = format!("{loc} stmt {}", i + 1);
            match c {
                Command::Skip => {}
                Command::Assign(LVal::Var(_), Expr::Empty) => {}
                Command::Assign(lv, e) => {
                    self.plain_target(lv, &here, out);
                    self.expr(e, &here, out);
                }
                Command::Sample(lv, d) => {
                    self.plain_target(lv, &here, out);
                    self.dist(d, &here, out);
                }
                Command::If(cond, a, b) => {
                    self.expr(cond, &here, out);
                    self.cmds(a, &format!("{here} then"), out);
                    self.cmds(b, &format!("{here} else"), out);
                }
                Command::While(cond, body) => {
                    self.expr(cond, &here, out);
                    self.cmds(body, &format!("{here} body"), out);
                }
                Command::SecRead(w, src) => {
                    self.plain_target(w, &here, out);
                    self.key(src, &here, out);
                }
                Command::SecSample(lv, d) => {
                    self.key(lv, &here, out);
                    self.dist(d, &here, out);
                }
                Command::Call(target, _, _, args) => {
                    if let Some(lv) = target {
                        self.plain_target(lv, &here, out);
                    }
                    for a in args {
                        self.expr(a, &here, out);
                    }
                }
            }
        }
    }
}

/// Identifiers read and written by a command list.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RwSets {
    pub reads: BTreeSet<String>,
    pub writes: BTreeSet<String>,
}

impl RwSets {
    pub fn all(&self) -> BTreeSet<String> {
        self.reads.union(&self.writes).cloned().collect()
    }
}

/// Read and write sets, following procedure calls transitively.
pub fn rw_sets(decls: &Decls, cmds: &[Command]) -> Result<RwSets, String> {
    let mut rw = RwSets::default();
    let mut stack = Vec::new();
    rw_cmds(decls, cmds, &mut rw, &mut stack)?;
    Ok(rw)
}

/// All variable and map identifiers a command list touches.
pub fn free_vars(decls: &Decls, cmds: &[Command]) -> Result<BTreeSet<String>, String> {
    Ok(rw_sets(decls, cmds)?.all())
}

fn expr_vars(decls: &Decls, e: &Expr, into: &mut BTreeSet<String>) {
    e.for_each_ident(&mut |n| {
        if !decls.is_global_constant(n) {
            into.insert(n.to_string());
        }
    });
}

fn dist_vars(decls: &Decls, d: &DistExpr, into: &mut BTreeSet<String>) {
    if let DistExpr::Point(e) = d {
        expr_vars(decls, e, into);
    }
}

fn key_vars(decls: &Decls, lv: &LVal, into: &mut BTreeSet<String>) {
    if let LVal::Index(_, k) = lv {
        expr_vars(decls, k, into);
    }
}

fn rw_cmds(decls: &Decls, cmds: &[Command], rw: &mut RwSets, stack: &mut Vec<String>) -> Result<(), String> {
    for c in cmds {
        match c {
            Command::Skip => {}
            Command::Assign(lv, e) => {
                rw.writes.insert(lv.base().to_string());
                key_vars(decls, lv, &mut rw.reads);
                expr_vars(decls, e, &mut rw.reads);
            }
            Command::Sample(lv, d) | Command::SecSample(lv, d) => {
                rw.writes.insert(lv.base().to_string());
                key_vars(decls, lv, &mut rw.reads);
                dist_vars(decls, d, &mut rw.reads);
            }
            Command::If(cond, a, b) => {
                expr_vars(decls, cond, &mut rw.reads);
                rw_cmds(decls, a, rw, stack)?;
                rw_cmds(decls, b, rw, stack)?;
            }
            Command::While(cond, body) => {
                expr_vars(decls, cond, &mut rw.reads);
                rw_cmds(decls, body, rw, stack)?;
            }
            Command::SecRead(w, src) => {
                rw.writes.insert(w.base().to_string());
                rw.writes.insert(src.base().to_string());
                rw.reads.insert(src.base().to_string());
                key_vars(decls, w, &mut rw.reads);
                key_vars(decls, src, &mut rw.reads);
            }
            Command::Call(target, m, p, args) => {
                for a in args {
                    expr_vars(decls, a, &mut rw.reads);
                }
                if let Some(lv) = target {
                    rw.writes.insert(lv.base().to_string());
                    key_vars(decls, lv, &mut rw.reads);
                }
                let key = format!("{m}.{p}");
                if stack.contains(&key) {
                    continue;
                }
                let proc_ = decls
                    .module(m)
                    .and_then(|md| md.proc(p))
                    .ok_or_else(|| format!("unresolved procedure call `{key}`"))?;
                stack.push(key);
                rw_cmds(decls, &proc_.body, rw, stack)?;
                if let Some(e) = &proc_.ret {
                    expr_vars(decls, e, &mut rw.reads);
                }
                for (n, _) in &proc_.params {
                    rw.writes.insert(n.clone());
                }
                stack.pop();
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse;

    const SRC: &str = "type X = {x0, x1}; type Y = {y0, y1};
        module M {
          var t: X -> lab Y;
          var r: Y;
          proc p(x: X) { if !(dom t x) { t[x] <~$ uniform Y; } r <~ t[x]; }
          proc q(x: X) { M.p(x); }
        }";

    #[test]
    fn calls_contribute_their_variables() {
        let f = parse(SRC).unwrap();
        let q = &f.decls.module("M").unwrap().proc("q").unwrap().body;
        let rw = rw_sets(&f.decls, q).unwrap();
        assert!(rw.writes.contains("t") && rw.writes.contains("r"));
        assert!(rw.reads.contains("x"));
    }

    #[test]
    fn labeled_syntax_passes_the_guard() {
        let f = parse(SRC).unwrap();
        assert!(guard_check(&f.decls, f.decls.module("M").unwrap()).is_ok());
    }

    #[test]
    fn labeled_values_do_not_flow_into_plain_ones() {
        let f = parse(SRC).unwrap();
        let vars = vec![("t".to_string(), Ty::Map("X".into(), "Y".into())), ("r".to_string(), Ty::Fin("Y".into()))];
        let bad = vec![Command::Assign(LVal::Var("r".into()), Expr::lookup("t", Expr::name("x0")))];
        assert_eq!(check_commands(&f.decls, &vars, &bad, "here").len(), 1);
    }
}
