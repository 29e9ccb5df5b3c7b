//! Exact denotational interpreter for plWhile.

use std::collections::BTreeMap;

use num_traits::One;
use thiserror::Error;

use crate::dist::Dist;
use crate::lang::ast::{Command, DistExpr, Expr, LVal, Ty};
use crate::lang::decls::{Decls, DistDef};
use crate::lang::value::{Conf, Elem, Labeled, Origin, Value};

/// Default loop budget.
pub const DEFAULT_FUEL: u32 = 64;

/// Variable bindings of one program state.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Memory(pub BTreeMap<String, Value>);

impl Memory {
    pub fn new() -> Memory {
        Memory::default()
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.0.get(name)
    }

    pub fn set(&mut self, name: &str, v: Value) {
        self.0.insert(name.to_string(), v);
    }

    pub fn with(mut self, name: &str, v: Value) -> Memory {
        self.set(name, v);
        self
    }

    pub fn remove(&mut self, name: &str) -> Option<Value> {
        self.0.remove(name)
    }

    /// Sorted `[var=value, ...]` form.
    pub fn render(&self, decls: &Decls) -> String {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|(k, v)| format!("{k}={}", decls.show_value(v)))
            .collect();
        format!("[{}]", parts.join(", "))
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("unbound identifier `{0}`")]
    Unbound(String),
    #[error("read of unset entry {map}[{key}]")]
    UnsetEntry { map: String, key: String },
    #[error("ill-typed value: {0}")]
    Type(String),
    #[error("unknown procedure `{0}`")]
    UnknownProc(String),
    #[error("`{0}` called with the wrong number of arguments")]
    Arity(String),
}

type Res<T> = Result<T, EvalError>;

/// Names bound outside memories, such as quantified variables.
pub type Env = Vec<(String, Value)>;

fn ty_err<T>(msg: impl Into<String>) -> Res<T> {
    Err(EvalError::Type(msg.into()))
}

/// Evaluates a deterministic expression.
pub fn eval_expr(decls: &Decls, e: &Expr, m: &Memory, env: &[(String, Value)]) -> Res<Value> {
    match e {
        Expr::Name(n) => {
            if let Some((_, v)) = env.iter().rev().find(|(k, _)| k == n) {
                return Ok(v.clone());
            }
            if let Some(v) = m.get(n) {
                return Ok(v.clone());
            }
            if let Some(el) = decls.elem(n) {
                return Ok(Value::Elem(el));
            }
            if decls.dist(n).is_some() {
                return Ok(Value::Origin(Some(eval_dist(decls, &DistExpr::Named(n.clone()), m, env)?)));
            }
            Err(EvalError::Unbound(n.clone()))
        }
        Expr::Bool(b) => Ok(Value::Bool(*b)),
        Expr::Conf(c) => Ok(Value::Conf(*c)),
        Expr::Bot => Ok(Value::Origin(None)),
        Expr::Empty => Ok(Value::Map(BTreeMap::new())),
        Expr::Dist(d) => Ok(Value::Origin(Some(eval_dist(decls, d, m, env)?))),
        Expr::Lookup(map, k) => {
            let key = eval_key(decls, k, m, env)?;
            match lookup_map(m, env, map)?.get(&key) {
                Some(l) => Ok(Value::Labeled(l.clone())),
                None => Err(EvalError::UnsetEntry {
                    map: map.clone(),
                    key: decls.elem_name(key).to_string(),
                }),
            }
        }
        Expr::Dom(map, k) => {
            let key = eval_key(decls, k, m, env)?;
            Ok(Value::Bool(lookup_map(m, env, map)?.contains_key(&key)))
        }
        Expr::Eq(a, b) => Ok(Value::Bool(eval_expr(decls, a, m, env)? == eval_expr(decls, b, m, env)?)),
        Expr::Not(a) => Ok(Value::Bool(!eval_bool(decls, a, m, env)?)),
        Expr::And(a, b) => Ok(Value::Bool(eval_bool(decls, a, m, env)? && eval_bool(decls, b, m, env)?)),
        Expr::Proj(i, a) => match eval_expr(decls, a, m, env)? {
            Value::Labeled(l) => Ok(match i {
                1 => Value::Elem(l.value),
                2 => Value::Origin(l.origin),
                _ => Value::Conf(l.conf),
            }),
            v => ty_err(format!("projection of {v:?}")),
        },
        Expr::Triple(a, b, c) => {
            let value = match eval_expr(decls, a, m, env)? {
                Value::Elem(e) => e,
                v => return ty_err(format!("labeled value {v:?}")),
            };
            let origin = match eval_expr(decls, b, m, env)? {
                Value::Origin(o) => o,
                v => return ty_err(format!("origin {v:?}")),
            };
            let conf = match eval_expr(decls, c, m, env)? {
                Value::Conf(c) => c,
                v => return ty_err(format!("confidentiality {v:?}")),
            };
            Ok(Value::Labeled(Labeled { value, origin, conf }))
        }
    }
}

pub fn eval_bool(decls: &Decls, e: &Expr, m: &Memory, env: &[(String, Value)]) -> Res<bool> {
    match eval_expr(decls, e, m, env)? {
        Value::Bool(b) => Ok(b),
        v => ty_err(format!("expected bool, got {v:?}")),
    }
}

fn eval_key(decls: &Decls, k: &Expr, m: &Memory, env: &[(String, Value)]) -> Res<Elem> {
    match eval_expr(decls, k, m, env)? {
        Value::Elem(e) => Ok(e),
        v => ty_err(format!("map key {v:?}")),
    }
}

fn lookup_map<'m>(m: &'m Memory, env: &'m [(String, Value)], map: &str) -> Res<&'m BTreeMap<Elem, Labeled>> {
    let v = env
        .iter()
        .rev()
        .find(|(k, _)| k == map)
        .map(|(_, v)| v)
        .or_else(|| m.get(map));
    match v {
        Some(Value::Map(t)) => Ok(t),
        Some(v) => ty_err(format!("`{map}` is not a map: {v:?}")),
        None => Err(EvalError::Unbound(map.to_string())),
    }
}

/// Evaluates a distribution expression to a named origin.
pub fn eval_dist(decls: &Decls, d: &DistExpr, m: &Memory, env: &[(String, Value)]) -> Res<Origin> {
    match d {
        DistExpr::Uniform(t) => {
            let elems = decls
                .elements_named(t)
                .ok_or_else(|| EvalError::Unbound(t.clone()))?;
            Ok(Origin::new(&format!("uniform {t}"), Dist::uniform(elems)))
        }
        DistExpr::Point(e) => match eval_expr(decls, e, m, env)? {
            Value::Elem(el) => Ok(Origin::new(&format!("dirac({})", decls.elem_name(el)), Dist::dirac(el))),
            v => ty_err(format!("dirac of {v:?}")),
        },
        DistExpr::Named(n) => {
            let b = decls.dist(n).ok_or_else(|| EvalError::Unbound(n.clone()))?;
            let dist = match &b.def {
                DistDef::Expr(inner) => (*eval_dist(decls, inner, &Memory::new(), &[])?.dist).clone(),
                DistDef::Table(rows) => {
                    let mut out = Vec::new();
                    for (e, w) in rows {
                        let el = decls.elem(e).ok_or_else(|| EvalError::Unbound(e.clone()))?;
                        out.push((el, w.clone()));
                    }
                    Dist::from_weights(out)
                }
            };
            Ok(Origin::new(n, dist))
        }
    }
}

fn write(decls: &Decls, m: &mut Memory, lv: &LVal, v: Value, env: &[(String, Value)]) -> Res<()> {
    match lv {
        LVal::Var(x) => {
            m.set(x, v);
            Ok(())
        }
        LVal::Index(map, k) => {
            let key = eval_key(decls, k, m, env)?;
            let l = match v {
                Value::Labeled(l) => l,
                v => return ty_err(format!("map entry {v:?}")),
            };
            match m.0.get_mut(map) {
                Some(Value::Map(t)) => {
                    t.insert(key, l);
                    Ok(())
                }
                Some(v) => ty_err(format!("`{map}` is not a map: {v:?}")),
                None => Err(EvalError::Unbound(map.clone())),
            }
        }
    }
}

/// Runs a list of deterministic assignments, with `env` in scope.
pub fn exec_det(decls: &Decls, cmds: &[Command], m: &Memory, env: &[(String, Value)]) -> Res<Memory> {
    let mut out = m.clone();
    for c in cmds {
        match c {
            Command::Skip => {}
            Command::Assign(lv, e) => {
                let v = eval_expr(decls, e, &out, env)?;
                write(decls, &mut out, lv, v, env)?;
            }
            other => return ty_err(format!("not a deterministic assignment: {other:?}")),
        }
    }
    Ok(out)
}

/// `[[cmds]] m` as a sub-distribution over memories.
pub fn exec(decls: &Decls, cmds: &[Command], m: &Memory, fuel: u32) -> Res<Dist<Memory>> {
    let mut d = Dist::dirac(m.clone());
    for c in cmds {
        d = d.try_bind(|mm| exec_cmd(decls, c, mm, fuel))?;
    }
    Ok(d)
}

fn exec_cmd(decls: &Decls, c: &Command, m: &Memory, fuel: u32) -> Res<Dist<Memory>> {
    match c {
        Command::Skip => Ok(Dist::dirac(m.clone())),
        Command::Assign(lv, e) => {
            let v = eval_expr(decls, e, m, &[])?;
            let mut out = m.clone();
            write(decls, &mut out, lv, v, &[])?;
            Ok(Dist::dirac(out))
        }
        Command::Sample(lv, d) => {
            let o = eval_dist(decls, d, m, &[])?;
            o.dist.try_bind(|e| {
                let mut out = m.clone();
                write(decls, &mut out, lv, Value::Elem(*e), &[])?;
                Ok(Dist::dirac(out))
            })
        }
        Command::SecSample(lv, d) => {
            let o = eval_dist(decls, d, m, &[])?;
            o.dist.try_bind(|e| {
                let mut out = m.clone();
                let l = Labeled { value: *e, origin: Some(o.clone()), conf: Conf::Secret };
                write(decls, &mut out, lv, Value::Labeled(l), &[])?;
                Ok(Dist::dirac(out))
            })
        }
        Command::SecRead(w, src) => {
            let mut l = match eval_expr(decls, &src.to_expr(), m, &[])? {
                Value::Labeled(l) => l,
                v => return ty_err(format!("sec-read of {v:?}")),
            };
            l.conf = Conf::Leaked;
            let value = l.value;
            let mut out = m.clone();
            write(decls, &mut out, src, Value::Labeled(l), &[])?;
            write(decls, &mut out, w, Value::Elem(value), &[])?;
            Ok(Dist::dirac(out))
        }
        Command::If(cond, a, b) => {
            if eval_bool(decls, cond, m, &[])? {
                exec(decls, a, m, fuel)
            } else {
                exec(decls, b, m, fuel)
            }
        }
        Command::While(cond, body) => exec_while(decls, cond, body, m, fuel, fuel),
        Command::Call(target, module, p, args) => {
            let vals = args
                .iter()
                .map(|a| eval_expr(decls, a, m, &[]))
                .collect::<Res<Vec<_>>>()?;
            let res = run_proc(decls, module, p, &vals, m, fuel)?;
            res.try_bind(|(mm, v)| {
                let mut out = mm.clone();
                if let Some(lv) = target {
                    write(decls, &mut out, lv, v.clone(), &[])?;
                }
                Ok(Dist::dirac(out))
            })
        }
    }
}

fn exec_while(decls: &Decls, cond: &Expr, body: &[Command], m: &Memory, fuel: u32, left: u32) -> Res<Dist<Memory>> {
    if !eval_bool(decls, cond, m, &[])? {
        return Ok(Dist::dirac(m.clone()));
    }
    if left == 0 {
        return Ok(Dist::empty());
    }
    exec(decls, body, m, fuel)?.try_bind(|mm| exec_while(decls, cond, body, mm, fuel, left - 1))
}

/// Calls `module.proc_name(args)` on `m`, pairing final memories with the
/// returned value (`()` when the procedure returns nothing).
///
/// Parameters and locals live only during the call; caller bindings with the
/// same names are restored afterwards.
pub fn run_proc(
    decls: &Decls,
    module: &str,
    proc_name: &str,
    args: &[Value],
    m: &Memory,
    fuel: u32,
) -> Res<Dist<(Memory, Value)>> {
    let full = format!("{module}.{proc_name}");
    let p = decls
        .module(module)
        .and_then(|md| md.proc(proc_name))
        .ok_or_else(|| EvalError::UnknownProc(full.clone()))?;
    if p.params.len() != args.len() {
        return Err(EvalError::Arity(full));
    }
    let scoped: Vec<&str> = p.params.iter().chain(&p.locals).map(|(n, _)| n.as_str()).collect();
    let saved: Vec<(&str, Option<Value>)> = scoped.iter().map(|n| (*n, m.get(n).cloned())).collect();
    let mut start = m.clone();
    for n in &scoped {
        start.remove(n);
    }
    for ((n, _), v) in p.params.iter().zip(args) {
        start.set(n, v.clone());
    }
    let after = exec(decls, &p.body, &start, fuel)?;
    after.try_bind(|mm| {
        let ret = match &p.ret {
            Some(e) => eval_expr(decls, e, mm, &[])?,
            None => Value::Unit,
        };
        let mut out = mm.clone();
        for (n, old) in &saved {
            match old {
                Some(v) => out.set(n, v.clone()),
                None => {
                    out.remove(n);
                }
            }
        }
        Ok(Dist::dirac((out, ret)))
    })
}

/// Candidate origins for labeled values over type `ty`: unset, each named
/// distribution over `ty`, and the uniform one, deduplicated by weights.
pub fn origins_for(decls: &Decls, ty: u16) -> Vec<Option<Origin>> {
    let mut out: Vec<Option<Origin>> = vec![None];
    let mut push = |o: Origin| {
        if o.dist.support().iter().all(|e| e.ty == ty) && !out.contains(&Some(o.clone())) {
            out.push(Some(o));
        }
    };
    for b in &decls.dists {
        if let Ok(o) = eval_dist(decls, &DistExpr::Named(b.name.clone()), &Memory::new(), &[]) {
            if !o.dist.is_empty() {
                push(o);
            }
        }
    }
    let name = decls.type_name(ty).to_string();
    push(Origin::new(&format!("uniform {name}"), Dist::uniform(decls.elements_of(ty))));
    out
}

fn labeled_values(decls: &Decls, ty: u16) -> Vec<Labeled> {
    let origins = origins_for(decls, ty);
    let mut out = Vec::new();
    for value in decls.elements_of(ty) {
        for origin in &origins {
            for conf in [Conf::Secret, Conf::Leaked] {
                out.push(Labeled { value, origin: origin.clone(), conf });
            }
        }
    }
    out
}

/// Every value of a type, in canonical order.
pub fn enumerate_values(decls: &Decls, ty: &Ty) -> Result<Vec<Value>, String> {
    let id = |n: &str| decls.type_id(n).ok_or_else(|| format!("unknown type `{n}`"));
    Ok(match ty {
        Ty::Unit => vec![Value::Unit],
        Ty::Bool => vec![Value::Bool(false), Value::Bool(true)],
        Ty::Conf => vec![Value::Conf(Conf::Secret), Value::Conf(Conf::Leaked)],
        Ty::Fin(n) => decls.elements_of(id(n)?).into_iter().map(Value::Elem).collect(),
        Ty::Origin(n) => origins_for(decls, id(n)?).into_iter().map(Value::Origin).collect(),
        Ty::Lab(n) => labeled_values(decls, id(n)?).into_iter().map(Value::Labeled).collect(),
        Ty::Map(k, v) => {
            let labs = labeled_values(decls, id(v)?);
            let mut maps = vec![BTreeMap::new()];
            for key in decls.elements_of(id(k)?) {
                let mut next = Vec::with_capacity(maps.len() * (labs.len() + 1));
                for mp in &maps {
                    next.push(mp.clone());
                    for l in &labs {
                        let mut m2 = mp.clone();
                        m2.insert(key, l.clone());
                        next.push(m2);
                    }
                }
                maps = next;
            }
            maps.into_iter().map(Value::Map).collect()
        }
    })
}

/// All memories over `vars`, first variable most significant.
pub fn enumerate_memories(decls: &Decls, vars: &[(String, Ty)]) -> Result<Vec<Memory>, String> {
    let mut mems = vec![Memory::new()];
    for (name, ty) in vars {
        let vals = enumerate_values(decls, ty)?;
        let mut next = Vec::with_capacity(mems.len() * vals.len());
        for m in &mems {
            for v in &vals {
                next.push(m.clone().with(name, v.clone()));
            }
        }
        mems = next;
    }
    Ok(mems)
}

/// True iff `cmds` terminates with mass one from every memory over `vars`.
pub fn lossless_check(decls: &Decls, cmds: &[Command], vars: &[(String, Ty)], fuel: u32) -> Result<bool, EvalError> {
    let mems = enumerate_memories(decls, vars).map_err(EvalError::Type)?;
    for m in &mems {
        if exec(decls, cmds, m, fuel)?.mass() != crate::dist::Rational::one() {
            return Ok(false);
        }
    }
    Ok(true)
}
