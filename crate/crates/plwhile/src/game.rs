//! Exact indistinguishability games between two oracle modules.
//!
//! A distinguisher makes at most `depth` adaptive queries to the exposed
//! procedures and sees only return values. The optimal advantage over all
//! deterministic decision trees is computed by a recursion over pairs of
//! unnormalized posteriors.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::dist::{Dist, Rational};
use crate::interp::{enumerate_values, exec, run_proc, EvalError, Memory};
use crate::lang::ast::Ty;
use crate::lang::decls::Decls;
use crate::lang::value::Value;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum GameError {
    #[error("module `{0}` is not declared")]
    UnknownModule(String),
    #[error("module `{0}` has no init procedure")]
    NoInit(String),
    #[error("`{0}` does not terminate with probability one")]
    NotLossless(String),
    #[error("modules expose different procedures: {0}")]
    Signature(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A module after `init`, exposing every other procedure.
#[derive(Clone, Debug)]
pub struct OracleSystem {
    pub module: String,
    pub exposed: Vec<String>,
    pub state: Dist<Memory>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Query {
    pub proc: String,
    pub args: Vec<Value>,
}

impl Query {
    pub fn render(&self, decls: &Decls) -> String {
        let args: Vec<String> = self.args.iter().map(|a| decls.show_value(a)).collect();
        format!("{}({})", self.proc, args.join(", "))
    }
}

/// Transcript-conditioned memory distributions for both sides.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BeliefState {
    pub left: Dist<Memory>,
    pub right: Dist<Memory>,
    pub depth: usize,
}

/// A deterministic adaptive distinguisher. Answers missing from a query
/// node reject.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Strategy {
    Leaf(bool),
    Query(Query, BTreeMap<Value, Strategy>),
}

impl Strategy {
    pub fn render(&self, decls: &Decls) -> String {
        let mut out = String::new();
        self.render_into(decls, 0, &mut out);
        out
    }

    fn render_into(&self, decls: &Decls, indent: usize, out: &mut String) {
        let pad = "  ".repeat(indent);
        match self {
            Strategy::Leaf(a) => {
                let _ = writeln!(out, "{pad}{}", if *a { "accept" } else { "reject" });
            }
            Strategy::Query(q, kids) => {
                let _ = writeln!(out, "{pad}{}", q.render(decls));
                for (ans, kid) in kids {
                    let _ = writeln!(out, "{pad}  = {}:", decls.show_value(ans));
                    kid.render_into(decls, indent + 2, out);
                }
            }
        }
    }
}

/// Runs `init` once from the empty memory.
pub fn init_system(decls: &Decls, module: &str, fuel: u32) -> Result<OracleSystem, GameError> {
    let m = decls.module(module).ok_or_else(|| GameError::UnknownModule(module.to_string()))?;
    let init = m.proc("init").ok_or_else(|| GameError::NoInit(module.to_string()))?;
    let state = exec(decls, &init.body, &Memory::new(), fuel)?;
    if state.mass() != Rational::one() {
        return Err(GameError::NotLossless(format!("{module}.init")));
    }
    let exposed = m.procs.iter().filter(|p| p.name != "init").map(|p| p.name.clone()).collect();
    Ok(OracleSystem { module: module.to_string(), exposed, state })
}

fn signature(decls: &Decls, module: &str) -> Result<Vec<(String, Vec<Ty>, Option<Ty>)>, GameError> {
    let m = decls.module(module).ok_or_else(|| GameError::UnknownModule(module.to_string()))?;
    Ok(m.procs
        .iter()
        .filter(|p| p.name != "init")
        .map(|p| (p.name.clone(), p.params.iter().map(|(_, t)| t.clone()).collect(), p.ret_ty.clone()))
        .collect())
}

/// Every query to the exposed procedures, in declaration then argument order.
pub fn query_alphabet(decls: &Decls, module: &str) -> Result<Vec<Query>, GameError> {
    let mut out = Vec::new();
    for (name, params, _) in signature(decls, module)? {
        let mut tuples: Vec<Vec<Value>> = vec![vec![]];
        for ty in &params {
            let vals = enumerate_values(decls, ty).map_err(|e| GameError::Eval(EvalError::Type(e)))?;
            tuples = tuples
                .iter()
                .flat_map(|t| {
                    vals.iter().map(move |v| {
                        let mut t = t.clone();
                        t.push(v.clone());
                        t
                    })
                })
                .collect();
        }
        out.extend(tuples.into_iter().map(|args| Query { proc: name.clone(), args }));
    }
    Ok(out)
}

/// Two oracle systems played against each other.
pub struct Game<'a> {
    pub decls: &'a Decls,
    pub left: OracleSystem,
    pub right: OracleSystem,
    pub alphabet: Vec<Query>,
    pub fuel: u32,
}

impl<'a> Game<'a> {
    pub fn new(decls: &'a Decls, m1: &str, m2: &str, fuel: u32) -> Result<Game<'a>, GameError> {
        // Return types may differ; the distinguisher sees whatever comes back.
        let params = |m: &str| -> Result<Vec<(String, Vec<Ty>)>, GameError> {
            Ok(signature(decls, m)?.into_iter().map(|(n, p, _)| (n, p)).collect())
        };
        if params(m1)? != params(m2)? {
            return Err(GameError::Signature(format!("{m1} and {m2}")));
        }
        Ok(Game {
            decls,
            left: init_system(decls, m1, fuel)?,
            right: init_system(decls, m2, fuel)?,
            alphabet: query_alphabet(decls, m1)?,
            fuel,
        })
    }

    pub fn swapped(&self) -> Game<'a> {
        Game {
            decls: self.decls,
            left: self.right.clone(),
            right: self.left.clone(),
            alphabet: self.alphabet.clone(),
            fuel: self.fuel,
        }
    }

    pub fn initial(&self, depth: usize) -> BeliefState {
        BeliefState { left: self.left.state.clone(), right: self.right.state.clone(), depth }
    }

    /// Possible answers to `q` on either side, by declared return type.
    pub fn answer_values(&self, q: &Query) -> Result<Vec<Value>, GameError> {
        let mut out = BTreeSet::new();
        for sys in [&self.left, &self.right] {
            let sig = signature(self.decls, &sys.module)?;
            let ret = sig.iter().find(|(n, _, _)| *n == q.proc).and_then(|(_, _, r)| r.clone());
            match ret {
                None => {
                    out.insert(Value::Unit);
                }
                Some(t) => out.extend(enumerate_values(self.decls, &t).map_err(|e| GameError::Eval(EvalError::Type(e)))?),
            }
        }
        Ok(out.into_iter().collect())
    }

    /// One interaction: the posterior pair for each observed answer.
    pub fn step(&self, b: &BeliefState, q: &Query) -> Result<BTreeMap<Value, BeliefState>, GameError> {
        let l = answer_split(self.decls, &self.left.module, &b.left, q, self.fuel)?;
        let r = answer_split(self.decls, &self.right.module, &b.right, q, self.fuel)?;
        let answers: BTreeSet<&Value> = l.keys().chain(r.keys()).collect();
        Ok(answers
            .into_iter()
            .map(|a| {
                let st = BeliefState {
                    left: l.get(a).cloned().unwrap_or_else(Dist::empty),
                    right: r.get(a).cloned().unwrap_or_else(Dist::empty),
                    depth: b.depth.saturating_sub(1),
                };
                (a.clone(), st)
            })
            .collect())
    }

    /// Best acceptance gap `Pr[accept | left] - Pr[accept | right]` from `b`.
    pub fn best(&self, b: &BeliefState) -> Result<(Rational, Strategy), GameError> {
        let gap = b.left.mass() - b.right.mass();
        let mut best = if gap > Rational::zero() {
            (gap, Strategy::Leaf(true))
        } else {
            (Rational::zero(), Strategy::Leaf(false))
        };
        if b.depth == 0 {
            return Ok(best);
        }
        for q in &self.alphabet {
            let mut total = Rational::zero();
            let mut kids = BTreeMap::new();
            for (a, next) in self.step(b, q)? {
                let (v, s) = self.best(&next)?;
                total += v;
                kids.insert(a, s);
            }
            if total > best.0 {
                best = (total, Strategy::Query(q.clone(), kids));
            }
        }
        Ok(best)
    }

    /// Best success probability of guessing the side, before the 1/2 prior.
    fn guess(&self, b: &BeliefState) -> Result<Rational, GameError> {
        let (ml, mr) = (b.left.mass(), b.right.mass());
        let mut best = if ml > mr { ml } else { mr };
        if b.depth == 0 {
            return Ok(best);
        }
        for q in &self.alphabet {
            let mut total = Rational::zero();
            for (_, next) in self.step(b, q)? {
                total += self.guess(&next)?;
            }
            if total > best {
                best = total;
            }
        }
        Ok(best)
    }
}

fn answer_split(decls: &Decls, module: &str, d: &Dist<Memory>, q: &Query, fuel: u32) -> Result<BTreeMap<Value, Dist<Memory>>, GameError> {
    let out = d.try_bind(|m| run_proc(decls, module, &q.proc, &q.args, m, fuel))?;
    if out.mass() != d.mass() {
        return Err(GameError::NotLossless(format!("{module}.{}", q.proc)));
    }
    let mut split: BTreeMap<Value, Dist<Memory>> = BTreeMap::new();
    for ((m, v), w) in out.iter() {
        split.entry(v.clone()).or_insert_with(Dist::empty).add_weight(m.clone(), w.clone());
    }
    Ok(split)
}

/// Optimal advantage and a witness strategy.
#[derive(Clone, Debug)]
pub struct Advantage {
    pub value: Rational,
    pub witness: Strategy,
    /// The witness accepts on the right-hand module rather than the left.
    pub swapped: bool,
}

/// Exact optimal advantage over distinguishers making at most `depth`
/// queries, taken in both directions.
pub fn optimal_advantage(decls: &Decls, m1: &str, m2: &str, depth: usize, fuel: u32) -> Result<Advantage, GameError> {
    let game = Game::new(decls, m1, m2, fuel)?;
    let (v1, s1) = game.best(&game.initial(depth))?;
    let rev = game.swapped();
    let (v2, s2) = rev.best(&rev.initial(depth))?;
    Ok(if v2 > v1 {
        Advantage { value: v2, witness: s2, swapped: true }
    } else {
        Advantage { value: v1, witness: s1, swapped: false }
    })
}

/// Success probability of the best distinguisher in the experiment where
/// a fair coin picks the module: `1/2 Pr[accept | m1] + 1/2 Pr[reject | m2]`.
pub fn experiment_value(decls: &Decls, m1: &str, m2: &str, depth: usize, fuel: u32) -> Result<Rational, GameError> {
    let game = Game::new(decls, m1, m2, fuel)?;
    Ok(game.guess(&game.initial(depth))? / Rational::from_integer(2.into()))
}

/// Distribution of answer sequences produced by a fixed strategy.
pub fn transcript_dist(decls: &Decls, sys: &OracleSystem, strategy: &Strategy, fuel: u32) -> Result<Dist<Vec<Value>>, GameError> {
    let mut out = Dist::empty();
    walk(decls, sys, &sys.state, strategy, &mut vec![], fuel, &mut |tr, d, _| {
        out.add_weight(tr.to_vec(), d.mass());
    })?;
    Ok(out)
}

/// Probability that the strategy accepts when run against `sys`.
pub fn accept_prob(decls: &Decls, sys: &OracleSystem, strategy: &Strategy, fuel: u32) -> Result<Rational, GameError> {
    let mut p = Rational::zero();
    walk(decls, sys, &sys.state, strategy, &mut vec![], fuel, &mut |_, d, acc| {
        if acc {
            p += d.mass();
        }
    })?;
    Ok(p)
}

fn walk(
    decls: &Decls,
    sys: &OracleSystem,
    d: &Dist<Memory>,
    s: &Strategy,
    tr: &mut Vec<Value>,
    fuel: u32,
    leaf: &mut dyn FnMut(&[Value], &Dist<Memory>, bool),
) -> Result<(), GameError> {
    match s {
        Strategy::Leaf(a) => {
            if !d.is_empty() {
                leaf(tr, d, *a);
            }
        }
        Strategy::Query(q, kids) => {
            for (ans, sub) in answer_split(decls, &sys.module, d, q, fuel)? {
                tr.push(ans.clone());
                let kid = kids.get(&ans).unwrap_or(&Strategy::Leaf(false));
                walk(decls, sys, &sub, kid, tr, fuel, leaf)?;
                tr.pop();
            }
        }
    }
    Ok(())
}
