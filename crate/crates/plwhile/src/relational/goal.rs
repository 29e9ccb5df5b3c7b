//! Relational judgments and their exhaustive discharge.

use std::collections::BTreeMap;

use num_traits::One;

use crate::dist::{Dist, Rational};
use crate::interp::{enumerate_memories, eval_expr, exec, EvalError, Memory};
use crate::lang::ast::{Command, Expr, Ty};
use crate::lang::decls::Decls;
use crate::lang::value::{Elem, Value};
use crate::relational::assertion::{holds, Assertion};
use crate::relational::lift::lift_check;

/// Index used to erase a sampled value when grouping memories.
const ERASED: u16 = u16::MAX;

/// A judgment `left ~ right : pre ==> post` over finite memories.
#[derive(Clone, Debug, PartialEq)]
pub struct RelGoal {
    pub name: String,
    pub left: Vec<Command>,
    pub right: Vec<Command>,
    pub pre: Assertion,
    pub post: Assertion,
    /// Variables quantified over on both sides.
    pub vars: Vec<(String, Ty)>,
    /// Scratch variables written before they are read.
    pub locals: Vec<(String, Ty)>,
    /// Extra variables quantified over on the left only.
    pub aug_left: Vec<(String, Ty)>,
    /// Map entry whose right-hand secret is mixed over its origin.
    pub sampled: Option<(String, Expr)>,
}

impl RelGoal {
    pub fn new(name: &str, left: Vec<Command>, right: Vec<Command>, pre: Assertion, post: Assertion, vars: Vec<(String, Ty)>) -> RelGoal {
        RelGoal {
            name: name.to_string(),
            left,
            right,
            pre,
            post,
            vars,
            locals: vec![],
            aug_left: vec![],
            sampled: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Counterexample {
    pub m1: Memory,
    pub m2: Memory,
    pub d1: Dist<Memory>,
    pub d2: Dist<Memory>,
    /// Failing post conjuncts, reported when both outputs are point masses.
    pub failed: Vec<Assertion>,
    pub lost_mass: bool,
    pub fault: Option<EvalError>,
}

#[derive(Clone, Debug)]
pub enum Discharge {
    Proven { checked: usize },
    Refuted(Box<Counterexample>),
}

impl Discharge {
    pub fn is_proven(&self) -> bool {
        matches!(self, Discharge::Proven { .. })
    }
}

enum Unit {
    Single(Memory, Memory),
    Group(Memory, Memory),
}

struct Group {
    origin: Dist<Elem>,
    members: BTreeMap<Elem, Vec<(Memory, Memory)>>,
}

fn erase(v: &Value) -> Value {
    match v {
        Value::Elem(e) => Value::Elem(Elem { idx: ERASED, ..*e }),
        Value::Labeled(l) => {
            let mut l = l.clone();
            l.value.idx = ERASED;
            Value::Labeled(l)
        }
        v => v.clone(),
    }
}

/// Decides a goal by enumerating every pair of memories satisfying `pre`.
///
/// With `sampled = (t, x)`, pairs whose right entry `t[x]` is secret with an
/// origin are grouped by everything except that entry's value and the
/// left-only variables; each group is checked on the mixture weighted by
/// the origin. Groups missing a value in the support are skipped.
pub fn discharge(decls: &Decls, g: &RelGoal, fuel: u32) -> Result<Discharge, String> {
    let mut left_vars = g.vars.clone();
    left_vars.extend(g.aug_left.iter().cloned());
    let lefts = enumerate_memories(decls, &left_vars)?;
    let rights = enumerate_memories(decls, &g.vars)?;

    let mut units = Vec::new();
    let mut groups: BTreeMap<(Memory, Memory), Group> = BTreeMap::new();
    for m1 in &lefts {
        for m2 in &rights {
            if !holds(decls, &g.pre, m1, m2, &mut vec![]).unwrap_or(false) {
                continue;
            }
            match group_key(decls, g, m1, m2) {
                Some((key, y, origin)) => {
                    let grp = groups.entry(key.clone()).or_insert_with(|| {
                        units.push(Unit::Group(key.0.clone(), key.1.clone()));
                        Group { origin, members: BTreeMap::new() }
                    });
                    grp.members.entry(y).or_default().push((m1.clone(), m2.clone()));
                }
                None => units.push(Unit::Single(m1.clone(), m2.clone())),
            }
        }
    }

    let mut checked = 0;
    for unit in units {
        match unit {
            Unit::Single(m1, m2) => {
                checked += 1;
                if let Some(cex) = check_pair(decls, g, &[(Rational::one(), m1, m2)], fuel) {
                    return Ok(Discharge::Refuted(Box::new(cex)));
                }
            }
            Unit::Group(k1, k2) => {
                let grp = &groups[&(k1, k2)];
                let support: Vec<(Elem, Rational)> = grp.origin.iter().map(|(e, w)| (*e, w.clone())).collect();
                let slots: Option<Vec<&Vec<(Memory, Memory)>>> =
                    support.iter().map(|(y, _)| grp.members.get(y)).collect();
                let Some(slots) = slots else { continue };
                let mut choice = vec![0usize; slots.len()];
                loop {
                    checked += 1;
                    let mix: Vec<(Rational, Memory, Memory)> = support
                        .iter()
                        .zip(&slots)
                        .zip(&choice)
                        .map(|(((_, w), s), &c)| (w.clone(), s[c].0.clone(), s[c].1.clone()))
                        .collect();
                    if let Some(cex) = check_pair(decls, g, &mix, fuel) {
                        return Ok(Discharge::Refuted(Box::new(cex)));
                    }
                    if !advance(&mut choice, &slots) {
                        break;
                    }
                }
            }
        }
    }
    Ok(Discharge::Proven { checked })
}

fn advance(choice: &mut [usize], slots: &[&Vec<(Memory, Memory)>]) -> bool {
    for i in (0..choice.len()).rev() {
        choice[i] += 1;
        if choice[i] < slots[i].len() {
            return true;
        }
        choice[i] = 0;
    }
    false
}

type GroupKey = ((Memory, Memory), Elem, Dist<Elem>);

fn group_key(decls: &Decls, g: &RelGoal, m1: &Memory, m2: &Memory) -> Option<GroupKey> {
    let (t, k) = g.sampled.as_ref()?;
    let key = eval_expr(decls, k, m2, &[]).ok()?.as_elem()?;
    let Some(Value::Map(map)) = m2.get(t) else { return None };
    let entry = map.get(&key)?;
    let origin = entry.origin.as_ref()?;
    if entry.conf != crate::lang::value::Conf::Secret || origin.dist.weight(&entry.value) == Rational::from_integer(0.into()) {
        return None;
    }
    let mut e1 = m1.clone();
    for (v, _) in &g.aug_left {
        if let Some(val) = m1.get(v) {
            e1.set(v, erase(val));
        }
    }
    let mut map2 = map.clone();
    map2.get_mut(&key).expect("entry present").value.idx = ERASED;
    let e2 = m2.clone().with(t, Value::Map(map2));
    Some(((e1, e2), entry.value, (*origin.dist).clone()))
}

/// Runs both programs on weighted inputs and lifts `post` to the outputs.
fn check_pair(decls: &Decls, g: &RelGoal, mix: &[(Rational, Memory, Memory)], fuel: u32) -> Option<Counterexample> {
    let (m1, m2) = (mix[0].1.clone(), mix[0].2.clone());
    let fail = |d1, d2, fault| {
        Some(Counterexample { m1: m1.clone(), m2: m2.clone(), d1, d2, failed: vec![], lost_mass: false, fault: Some(fault) })
    };
    let mut d1 = Dist::empty();
    let mut d2 = Dist::empty();
    for (w, a, b) in mix {
        match exec(decls, &g.left, a, fuel) {
            Ok(d) => d1 = d1.plus(&d.scale(w)),
            Err(e) => return fail(Dist::empty(), Dist::empty(), e),
        }
        match exec(decls, &g.right, b, fuel) {
            Ok(d) => d2 = d2.plus(&d.scale(w)),
            Err(e) => return fail(d1, Dist::empty(), e),
        }
    }
    let mut fault = None;
    let ok = lift_check(&d1, &d2, |a, b| match holds(decls, &g.post, a, b, &mut vec![]) {
        Ok(v) => v,
        Err(e) => {
            fault.get_or_insert(e);
            false
        }
    });
    if ok {
        return None;
    }
    let lost_mass = d1.mass() != Rational::one() || d2.mass() != Rational::one();
    let mut failed = vec![];
    if d1.len() == 1 && d2.len() == 1 {
        let (a, b) = (d1.iter().next().unwrap().0, d2.iter().next().unwrap().0);
        for c in g.post.conjuncts() {
            if !holds(decls, c, a, b, &mut vec![]).unwrap_or(false) {
                failed.push(c.clone());
            }
        }
    }
    Some(Counterexample { m1, m2, d1, d2, failed, lost_mass, fault })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse;

    #[test]
    fn skip_keeps_any_assertion() {
        let f = parse("type X = {x0, x1}; goal g { vars x: X; left { } right { } pre x@1 = x0@2; post x@1 = x0@2; }").unwrap();
        match discharge(&f.decls, &f.goals[0], 8).unwrap() {
            Discharge::Proven { checked } => assert_eq!(checked, 2),
            d => panic!("{d:?}"),
        }
    }

    #[test]
    fn first_failing_pair_is_reported() {
        let f = parse("type X = {x0, x1}; goal g { vars x: X; left { } right { } pre true; post ={x}; }").unwrap();
        let Discharge::Refuted(c) = discharge(&f.decls, &f.goals[0], 8).unwrap() else { panic!() };
        assert_eq!(c.m1.render(&f.decls), "[x=x0]");
        assert_eq!(c.m2.render(&f.decls), "[x=x1]");
        assert_eq!(c.failed, vec![Assertion::VarEq("x".into())]);
    }

    #[test]
    fn divergence_is_lost_mass() {
        let f = parse("type X = {x0}; goal g { vars x: X; left { while true { skip; } } right { } pre true; post true; }").unwrap();
        let Discharge::Refuted(c) = discharge(&f.decls, &f.goals[0], 4).unwrap() else { panic!() };
        assert!(c.lost_mass);
    }
}
