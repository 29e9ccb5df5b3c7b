mod common;

use std::collections::BTreeSet;

use common::load;
use plwhile::dist::{ratio, Dist};
use plwhile::frontend::{parse, SourceFile};
use plwhile::game::{init_system, query_alphabet};
use plwhile::interp::{exec, run_proc, Memory, DEFAULT_FUEL};
use plwhile::lang::{free_vars, Command, Conf, Expr, LVal, Value};
use plwhile::relational::{apply_tactic, discharge, holds, lift_check, Assertion, Discharge, RelGoal, Side, Tactic, TacticError};

const COIN: &str = "
type C = {H, T};
goal coin {
  vars r: C;
  left { r <$ uniform C; }
  right { r <$ uniform C; if r == H { r <- T; } else { r <- H; } }
  pre true;
  post ={r};
}
goal copy {
  vars r: C, v: C;
  left { r <- v; }
  right { r <- v; }
  pre ={v};
  post ={r};
}
";

fn proven(f: &SourceFile, g: &RelGoal) -> bool {
    discharge(&f.decls, g, DEFAULT_FUEL).unwrap().is_proven()
}

/// Validity as the lazy-sampling rule reads it: a right-hand secret entry
/// at the queried key stands for a fresh sample.
fn valid(f: &SourceFile, g: &RelGoal) -> bool {
    let mut g = g.clone();
    let has = |v: &str| g.vars.iter().any(|(n, _)| n == v);
    if g.sampled.is_none() && has("t") && has("x") {
        g.sampled = Some(("t".into(), Expr::name("x")));
    }
    proven(f, &g)
}

#[test]
fn coin_flip_is_equivalent() {
    let f = parse(COIN).unwrap();
    let g = f.goal("coin").unwrap();
    assert!(proven(&f, g));
    let m = Memory::new().with("r", Value::Elem(f.decls.elem("H").unwrap()));
    let d1 = exec(&f.decls, &g.left, &m, DEFAULT_FUEL).unwrap();
    let d2 = exec(&f.decls, &g.right, &m, DEFAULT_FUEL).unwrap();
    assert!(lift_check(&d1, &d2, |a, b| a.get("r") == b.get("r")));
    assert!(!lift_check(&d1, &Dist::dirac(m.clone()), |a, b| a == b));
}

#[test]
fn assign_then_skip() {
    let f = parse(COIN).unwrap();
    let g = f.goal("copy").unwrap();
    let subs = apply_tactic(&f.decls, g, &Tactic::Assign, DEFAULT_FUEL).unwrap();
    assert_eq!(subs.len(), 1);
    assert!(subs[0].left.is_empty() && subs[0].right.is_empty());
    assert_eq!(subs[0].post, Assertion::Rel(Side::Left, Expr::name("v"), plwhile::relational::RelOp::Eq, Side::Right, Expr::name("v")));
    assert!(apply_tactic(&f.decls, &subs[0], &Tactic::Skip, DEFAULT_FUEL).unwrap().is_empty());
}

#[test]
fn rnd_closes_identical_samples() {
    let mut f = parse(COIN).unwrap();
    let mut g = f.goal("coin").unwrap().clone();
    g.right.truncate(1);
    f.goals.push(g.clone());
    let subs = apply_tactic(&f.decls, &g, &Tactic::Rnd, DEFAULT_FUEL).unwrap();
    assert!(matches!(subs[0].post, Assertion::Forall(..)));
    assert!(apply_tactic(&f.decls, &subs[0], &Tactic::Skip, DEFAULT_FUEL).unwrap().is_empty());
}

#[test]
fn rnd_rejects_different_distributions() {
    let src = "type C = {H, T}; dist biased = {H: 1/3, T: 2/3};
      goal g { vars r: C; left { r <$ uniform C; } right { r <$ biased; } pre true; post ={r}; }";
    let f = parse(src).unwrap();
    let g = f.goal("g").unwrap();
    assert!(matches!(apply_tactic(&f.decls, g, &Tactic::Rnd, DEFAULT_FUEL), Err(TacticError::Rnd(_))));
    assert!(!proven(&f, g));
}

#[test]
fn swap_respects_dependencies() {
    let f = load("sampling.plw");
    let g = f.goal("two_sided").unwrap();
    // w <- x and t[x] <~$ dY only share a read of x.
    assert!(apply_tactic(&f.decls, g, &Tactic::Swap(Side::Right, 1, 2), DEFAULT_FUEL).is_ok());
    // The sample writes t and the read consumes it.
    assert!(matches!(apply_tactic(&f.decls, g, &Tactic::Swap(Side::Left, 1, 2), DEFAULT_FUEL), Err(TacticError::Swap(_))));
    assert!(apply_tactic(&f.decls, g, &Tactic::Swap(Side::Right, 1, 3), DEFAULT_FUEL).is_err());
}

#[test]
fn secrndasgn_keeps_the_right_program() {
    let f = load("sampling.plw");
    let g = f.goal("borrowed").unwrap();
    let subs = apply_tactic(&f.decls, g, &Tactic::Secrndasgn("t".into(), Expr::name("x"), "v".into()), DEFAULT_FUEL).unwrap();
    assert_eq!(subs.len(), 2);
    for s in &subs {
        assert_eq!(s.aug_left.len(), 1);
    }
    // The fresh-entry obligation is skip against skip; the replay keeps
    // the right program verbatim.
    assert!(subs[0].left.is_empty() && subs[0].right.is_empty());
    assert_eq!(subs[1].right, g.right);
    assert!(matches!(subs[1].left[0], Command::Assign(LVal::Index(..), Expr::Name(_))));
    for s in &subs {
        assert!(proven(&f, s), "{}", s.name);
    }
}

#[test]
fn secrndasgn_checks_its_shape() {
    let f = load("sampling.plw");
    let g = f.goal("borrowed").unwrap();
    let other_key = Tactic::Secrndasgn("t".into(), Expr::name("y"), "v".into());
    assert!(apply_tactic(&f.decls, g, &other_key, DEFAULT_FUEL).is_err());
    let taken = Tactic::Secrndasgn("t".into(), Expr::name("x"), "r".into());
    assert!(apply_tactic(&f.decls, g, &taken, DEFAULT_FUEL).is_err());
    let two = f.goal("two_sided").unwrap();
    assert!(apply_tactic(&f.decls, two, &Tactic::Secrndasgn("t".into(), Expr::name("x"), "v".into()), DEFAULT_FUEL).is_err());
}

#[test]
fn declassify_consumes_one_read() {
    let f = load("sampling.plw");
    let g = f.goal("borrowed").unwrap();
    let once = apply_tactic(&f.decls, g, &Tactic::Declassify(Side::Right), DEFAULT_FUEL).unwrap().remove(0);
    assert_eq!(once.right.len(), 2);
    assert!(apply_tactic(&f.decls, &once, &Tactic::Declassify(Side::Right), DEFAULT_FUEL).is_err());
}

#[test]
fn secrnd_picks_a_fresh_name() {
    let f = load("sampling.plw");
    let g = f.goal("two_sided").unwrap();
    let before = free_vars(&f.decls, &g.left).unwrap();
    let out = apply_tactic(&f.decls, g, &Tactic::Secrnd(Side::Left), DEFAULT_FUEL).unwrap().remove(0);
    let Command::Sample(LVal::Var(v), _) = &out.left[0] else { panic!("{:?}", out.left) };
    assert_eq!(v, "v#0");
    assert!(!before.contains(v));
}

#[test]
fn holds_examples() {
    let f = load("example.plw");
    let x0 = Value::Elem(f.decls.elem("x0").unwrap());
    let m = Memory::new().with("x", x0).with("t", Value::Map(Default::default()));
    let inv = f.goal("g_equiv").unwrap().post.clone();
    assert!(holds(&f.decls, &Assertion::VarEq("x".into()), &m, &m, &mut vec![]).unwrap());
    assert!(holds(&f.decls, &inv, &m, &m, &mut vec![]).unwrap());
    let leaked = plwhile::lang::Labeled { value: f.decls.elem("y0").unwrap(), origin: None, conf: Conf::Leaked };
    let mut t = std::collections::BTreeMap::new();
    t.insert(f.decls.elem("x0").unwrap(), leaked);
    let m1 = m.clone().with("t", Value::Map(t));
    assert!(!holds(&f.decls, &inv, &m1, &m, &mut vec![]).unwrap());
}

#[test]
fn stripped_goal_has_a_counterexample() {
    let f = load("sampling.plw");
    let Discharge::Refuted(c) = discharge(&f.decls, f.goal("stripped").unwrap(), DEFAULT_FUEL).unwrap() else {
        panic!("stripped goal proven");
    };
    assert_eq!(c.d1.len(), 2);
    assert_eq!(c.d2.len(), 1);
    assert_eq!(c.d1.mass(), ratio(1, 1));
}

/// Replays each shipped proof. Whenever a tactic's subgoals are all valid,
/// so is the goal it was applied to.
#[test]
fn tactics_are_sound_on_the_corpus() {
    for (file, names) in [("example.plw", &["g_equiv", "f_equiv", "init"][..]), ("sampling.plw", &["two_sided"][..])] {
        let f = load(file);
        let mut steps = 0;
        for name in names {
            let mut open = vec![f.goal(name).unwrap().clone()];
            for t in &f.proof(name).unwrap().tactics {
                if matches!(t, Tactic::Done | Tactic::Auto | Tactic::Skip) {
                    if !open.is_empty() && !matches!(t, Tactic::Done) {
                        assert!(valid(&f, &open.remove(0)));
                    }
                    continue;
                }
                let g = open.remove(0);
                let subs = apply_tactic(&f.decls, &g, t, DEFAULT_FUEL).unwrap();
                if subs.iter().all(|s| valid(&f, s)) {
                    assert!(valid(&f, &g), "{file}: {} after {t:?}", g.name);
                    steps += 1;
                }
                open.splice(0..0, subs);
            }
            assert!(open.is_empty());
        }
        assert!(steps > 0);
    }
}

/// Every secret entry reachable through the oracle interface carries the
/// distribution it was sampled from.
#[test]
fn secret_labels_are_never_forged() {
    let f = load("example.plw");
    let dy = Dist::uniform(f.decls.elements_named("Y").unwrap());
    for module in ["P1", "P2"] {
        let sys = init_system(&f.decls, module, DEFAULT_FUEL).unwrap();
        let alphabet = query_alphabet(&f.decls, module).unwrap();
        let mut frontier: BTreeSet<Memory> = sys.state.support();
        let mut seen = frontier.clone();
        for _ in 0..4 {
            let mut next = BTreeSet::new();
            for m in &frontier {
                for q in &alphabet {
                    for ((m2, _), _) in run_proc(&f.decls, module, &q.proc, &q.args, m, DEFAULT_FUEL).unwrap().iter() {
                        if seen.insert(m2.clone()) {
                            next.insert(m2.clone());
                        }
                    }
                }
            }
            frontier = next;
        }
        assert!(seen.len() > 4);
        for m in &seen {
            let Some(Value::Map(t)) = m.get("t") else { panic!() };
            for l in t.values().filter(|l| l.conf == Conf::Secret) {
                assert_eq!(l.origin.as_ref().map(|o| &*o.dist), Some(&dy));
            }
        }
    }
}
