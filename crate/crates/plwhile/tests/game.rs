mod common;

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use common::load;
use plwhile::dist::{dist_eq, ratio};
use plwhile::frontend::parse;
use plwhile::game::{experiment_value, init_system, optimal_advantage, transcript_dist, Game, GameError, Query, Strategy};
use plwhile::interp::DEFAULT_FUEL;
use plwhile::lang::{Conf, Value};

fn adv(file: &str, m1: &str, m2: &str, depth: usize) -> plwhile::dist::Rational {
    let f = load(file);
    optimal_advantage(&f.decls, m1, m2, depth, DEFAULT_FUEL).unwrap().value
}

/// Trees that only ask questions; the leaf verdict is irrelevant.
fn query_trees(game: &Game, depth: usize) -> Vec<Strategy> {
    let mut out = vec![Strategy::Leaf(false)];
    if depth == 0 {
        return out;
    }
    let smaller = query_trees(game, depth - 1);
    for q in &game.alphabet {
        let mut partial = vec![BTreeMap::new()];
        for a in game.answer_values(q).unwrap() {
            partial = partial
                .iter()
                .flat_map(|m| {
                    smaller.iter().map(|s| {
                        let mut m: BTreeMap<Value, Strategy> = m.clone();
                        m.insert(a.clone(), s.clone());
                        m
                    })
                })
                .collect();
        }
        out.extend(partial.into_iter().map(|k| Strategy::Query(q.clone(), k)));
    }
    out
}

fn ask(proc: &str, x: &str, f: &plwhile::frontend::SourceFile, then: Strategy) -> Strategy {
    let q = Query { proc: proc.into(), args: vec![Value::Elem(f.decls.elem(x).unwrap())] };
    let kids = ["y0", "y1"].iter().map(|y| (Value::Elem(f.decls.elem(y).unwrap()), then.clone())).chain([(Value::Unit, then.clone())]).collect();
    Strategy::Query(q, kids)
}

#[test]
fn identical_modules_are_indistinguishable() {
    for k in 0..=3 {
        assert!(adv("example.plw", "P1", "P1", k).is_zero());
        assert!(adv("leaky.plw", "P2leaky", "P2leaky", k).is_zero());
    }
}

#[test]
fn advantage_is_symmetric() {
    for k in 0..=2 {
        assert_eq!(adv("leaky.plw", "P1", "P2leaky", k), adv("leaky.plw", "P2leaky", "P1", k));
        assert_eq!(adv("example.plw", "P1", "P2", k), adv("example.plw", "P2", "P1", k));
    }
}

#[test]
fn advantage_is_monotone_in_depth() {
    let mut last = plwhile::dist::Rational::zero();
    for k in 0..=3 {
        let a = adv("leaky.plw", "P1", "P2leaky", k);
        assert!(a >= last);
        last = a;
    }
    assert!(adv("leaky.plw", "P1", "P2leaky", 0).is_zero());
    assert_eq!(last, plwhile::dist::Rational::one());
}

#[test]
fn zero_advantage_matches_transcript_equality() {
    let f = load("example.plw");
    let game = Game::new(&f.decls, "P1", "P2", DEFAULT_FUEL).unwrap();
    for k in 0..=3 {
        let zero = optimal_advantage(&f.decls, "P1", "P2", k, DEFAULT_FUEL).unwrap().value.is_zero();
        let equal = query_trees(&game, k).iter().all(|s| {
            let l = transcript_dist(&f.decls, &game.left, s, DEFAULT_FUEL).unwrap();
            let r = transcript_dist(&f.decls, &game.right, s, DEFAULT_FUEL).unwrap();
            dist_eq(&l, &r)
        });
        assert!(zero && equal, "depth {k}");
    }

    let f = load("leaky.plw");
    let game = Game::new(&f.decls, "P1", "P2leaky", DEFAULT_FUEL).unwrap();
    for k in 0..=2 {
        let zero = optimal_advantage(&f.decls, "P1", "P2leaky", k, DEFAULT_FUEL).unwrap().value.is_zero();
        let equal = query_trees(&game, k).iter().all(|s| {
            dist_eq(&transcript_dist(&f.decls, &game.left, s, DEFAULT_FUEL).unwrap(), &transcript_dist(&f.decls, &game.right, s, DEFAULT_FUEL).unwrap())
        });
        assert_eq!(zero, equal, "depth {k}");
        assert_eq!(zero, k == 0);
    }
}

#[test]
fn transcripts_have_full_mass() {
    let f = load("example.plw");
    let game = Game::new(&f.decls, "P1", "P2", DEFAULT_FUEL).unwrap();
    for s in query_trees(&game, 2) {
        for sys in [&game.left, &game.right] {
            assert!(transcript_dist(&f.decls, sys, &s, DEFAULT_FUEL).unwrap().mass().is_one());
        }
    }
}

#[test]
fn empty_strategy_has_empty_transcript() {
    let f = load("example.plw");
    let sys = init_system(&f.decls, "P1", DEFAULT_FUEL).unwrap();
    let d = transcript_dist(&f.decls, &sys, &Strategy::Leaf(true), DEFAULT_FUEL).unwrap();
    assert_eq!(d.weight(&vec![]), ratio(1, 1));
    assert_eq!(d.len(), 1);
}

#[test]
fn repeated_query_is_memoized() {
    let f = load("example.plw");
    let sys = init_system(&f.decls, "P1", DEFAULT_FUEL).unwrap();
    let s = ask("f", "x0", &f, ask("f", "x0", &f, Strategy::Leaf(false)));
    let d = transcript_dist(&f.decls, &sys, &s, DEFAULT_FUEL).unwrap();
    assert_eq!(d.len(), 2);
    for (tr, w) in d.iter() {
        assert_eq!(tr[0], tr[1]);
        assert_eq!(*w, ratio(1, 2));
    }
}

#[test]
fn early_sampling_is_invisible() {
    let f = load("example.plw");
    let s = ask("g", "x0", &f, ask("f", "x0", &f, Strategy::Leaf(false)));
    let p1 = init_system(&f.decls, "P1", DEFAULT_FUEL).unwrap();
    let p2 = init_system(&f.decls, "P2", DEFAULT_FUEL).unwrap();
    let d1 = transcript_dist(&f.decls, &p1, &s, DEFAULT_FUEL).unwrap();
    let d2 = transcript_dist(&f.decls, &p2, &s, DEFAULT_FUEL).unwrap();
    assert!(dist_eq(&d1, &d2));
}

#[test]
fn single_steps() {
    let f = load("example.plw");
    let game = Game::new(&f.decls, "P1", "P2", DEFAULT_FUEL).unwrap();
    let b = game.initial(1);
    let x0 = Value::Elem(f.decls.elem("x0").unwrap());

    let out = game.step(&b, &Query { proc: "f".into(), args: vec![x0.clone()] }).unwrap();
    assert_eq!(out.len(), 2);
    for st in out.values() {
        assert_eq!(st.left.mass(), ratio(1, 2));
        assert_eq!(st.right.mass(), ratio(1, 2));
        assert_eq!(st.depth, 0);
    }

    let out = game.step(&b, &Query { proc: "g".into(), args: vec![x0.clone()] }).unwrap();
    assert_eq!(out.keys().collect::<Vec<_>>(), vec![&Value::Unit]);
    let st = &out[&Value::Unit];
    assert!(dist_eq(&st.left, &b.left));
    for (m, _) in st.right.iter() {
        let Some(Value::Map(t)) = m.get("t") else { panic!("t is not a map") };
        assert_eq!(t.len(), 1);
        assert!(t.values().all(|l| l.conf == Conf::Secret));
    }
}

#[test]
fn initial_systems_are_empty() {
    let f = load("example.plw");
    for m in ["P1", "P2"] {
        let sys = init_system(&f.decls, m, DEFAULT_FUEL).unwrap();
        assert_eq!(sys.state.len(), 1);
        let (mem, w) = sys.state.iter().next().unwrap();
        assert!(w.is_one());
        assert_eq!(mem.get("t"), Some(&Value::Map(BTreeMap::new())));
        assert_eq!(sys.exposed, vec!["f".to_string(), "g".to_string()]);
    }
}

#[test]
fn diverging_init_is_rejected() {
    let f = parse("module Stuck { var b: bool; proc init() { b <- true; while b { skip; } } }").unwrap();
    assert!(matches!(init_system(&f.decls, "Stuck", 8), Err(GameError::NotLossless(_))));
}

#[test]
fn experiment_reduction() {
    let f = load("example.plw");
    for k in 0..=3 {
        assert_eq!(experiment_value(&f.decls, "P1", "P2", k, DEFAULT_FUEL).unwrap(), ratio(1, 2));
    }
    let f = load("leaky.plw");
    let a = optimal_advantage(&f.decls, "P1", "P2leaky", 2, DEFAULT_FUEL).unwrap().value;
    let e = experiment_value(&f.decls, "P1", "P2leaky", 2, DEFAULT_FUEL).unwrap();
    assert_eq!(e, ratio(1, 2) + a / ratio(2, 1));
}

#[test]
fn mismatched_signatures_are_rejected() {
    let src = "type X = {x0}; module A { proc init() { } proc f(x: X) { } } module B { proc init() { } proc h(x: X) { } }";
    let f = parse(src).unwrap();
    assert!(matches!(Game::new(&f.decls, "A", "B", 8), Err(GameError::Signature(_))));
}
