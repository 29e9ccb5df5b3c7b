mod common;

use std::collections::BTreeSet;

use common::load;
use plwhile::dist::{dist_eq, ratio, Dist};
use plwhile::frontend::parse;
use plwhile::interp::{enumerate_memories, enumerate_values, eval_expr, exec, lossless_check, run_proc, EvalError, Memory, DEFAULT_FUEL};
use plwhile::lang::{free_vars, guard_check, in_r, is_leaked, label_eq, proj, well_formed, Command, Conf, Expr, Labeled, Ty, Value};

const COIN: &str = "
type C = {H, T};
type X = {x0, x1};
type Y = {y0, y1};
module Coin {
  var r: C;
  var t: X -> lab Y;
  proc flip(x: C): C {
    var o: C;
    if x == H { o <- T; } else { o <- H; }
    return o;
  }
  proc spin() {
    while true { skip; }
  }
}
";

fn body(f: &plwhile::frontend::SourceFile, m: &str, p: &str) -> Vec<Command> {
    f.decls.module(m).unwrap().proc(p).unwrap().body.clone()
}

fn names(s: &[&str]) -> BTreeSet<String> {
    s.iter().map(|x| x.to_string()).collect()
}

#[test]
fn well_formedness() {
    let f = load("example.plw");
    for m in &f.decls.modules {
        assert!(well_formed(&f.decls, m).is_ok());
        assert!(guard_check(&f.decls, m).is_ok());
    }
    assert!(parse("module Empty { }").is_ok());
    let bad = "type X = {x0}; type Y = {y0}; module M { var t: X -> lab Y; var r: Y; proc p(x: X) { r <- t[x]; } }";
    let e = parse(bad).unwrap_err();
    assert!(e.message.contains("M.p"), "{e}");
}

#[test]
fn guard_rejects_label_inspection() {
    let f = load("forged.plw");
    assert!(guard_check(&f.decls, f.decls.module("Forged").unwrap()).is_err());
    let src = "type X = {x0}; type Y = {y0}; module M { var t: X -> lab Y; var b: bool;
      proc p(x: X) { if dom t x { if pi3 t[x] == S { b <- true; } else { skip; } } else { skip; } } }";
    let f = parse(src).unwrap();
    let v = guard_check(&f.decls, f.decls.module("M").unwrap()).unwrap_err();
    assert!(v.iter().any(|v| v.to_string().contains('t')));
}

#[test]
fn free_variables() {
    let f = load("example.plw");
    assert!(free_vars(&f.decls, &[Command::Skip]).unwrap().is_empty());
    let g = load("sampling.plw");
    assert_eq!(free_vars(&g.decls, &g.goal("borrowed").unwrap().left).unwrap(), names(&["r", "t", "x"]));
    assert_eq!(free_vars(&f.decls, &body(&f, "P2", "g")).unwrap(), names(&["t", "x"]));
    let call = vec![Command::Call(None, "P2".into(), "g".into(), vec![Expr::name("x")])];
    assert_eq!(free_vars(&f.decls, &call).unwrap(), names(&["t", "x"]));
}

#[test]
fn label_algebra() {
    let f = load("example.plw");
    let ys = f.decls.elements_named("Y").unwrap();
    let dy = Dist::uniform(ys.clone());
    let all = enumerate_values(&f.decls, &Ty::Lab("Y".into())).unwrap();
    let labs: Vec<&Labeled> = all.iter().filter_map(|v| v.as_labeled()).collect();
    assert_eq!(labs.len(), 8);
    for a in &labs {
        assert!(label_eq(a, a));
        assert_ne!(is_leaked(a), a.conf == Conf::Secret);
        assert!(matches!(proj(3, a), plwhile::lang::value::Projected::Conf(c) if c == a.conf));
        for b in &labs {
            assert_eq!(label_eq(a, b), label_eq(b, a));
            for c in &labs {
                if label_eq(a, b) && label_eq(b, c) {
                    assert!(label_eq(a, c));
                }
            }
        }
    }
    let secret = labs.iter().find(|l| l.conf == Conf::Secret && l.origin.is_some() && l.value == ys[0]).unwrap();
    assert!(!is_leaked(secret));
    assert!(in_r(secret, &dy));
    let mut open = (*secret).clone();
    open.conf = Conf::Leaked;
    assert!(label_eq(secret, &open));
}

#[test]
fn expressions() {
    let f = parse(COIN).unwrap();
    let h = Value::Elem(f.decls.elem("H").unwrap());
    let t = Value::Elem(f.decls.elem("T").unwrap());
    let m = Memory::new().with("x", h.clone()).with("t", Value::Map(Default::default()));
    assert_eq!(eval_expr(&f.decls, &Expr::name("x"), &m, &[]).unwrap(), h);
    assert_eq!(eval_expr(&f.decls, &Expr::dom("t", Expr::name("x0")), &m, &[]).unwrap(), Value::Bool(false));
    let out = run_proc(&f.decls, "Coin", "flip", &[h], &m, DEFAULT_FUEL).unwrap();
    assert_eq!(out.len(), 1);
    assert_eq!(out.iter().next().unwrap().0 .1, t);
    let read = plwhile::lang::Expr::lookup("t", Expr::name("x0"));
    assert!(matches!(eval_expr(&f.decls, &read, &m, &[]), Err(EvalError::UnsetEntry { .. })));
}

#[test]
fn commands() {
    let f = parse(COIN).unwrap();
    let d = &f.decls;
    let m = Memory::new().with("t", Value::Map(Default::default()));
    assert!(dist_eq(&exec(d, &[Command::Skip], &m, 8).unwrap(), &Dist::dirac(m.clone())));
    let coin = parse(&format!("{COIN} goal g {{ vars r: C, t: X -> lab Y; left {{ r <$ uniform C; t[x0] <~$ uniform Y; }} right {{ }} pre true; post true; }}")).unwrap();
    let g = coin.goal("g").unwrap();
    let one = exec(d, &g.left[..1], &m, 8).unwrap();
    assert_eq!(one.len(), 2);
    assert!(one.iter().all(|(_, w)| *w == ratio(1, 2)));
    let two = exec(d, &g.left[1..], &m, 8).unwrap();
    for (mem, w) in two.iter() {
        assert_eq!(*w, ratio(1, 2));
        let Some(Value::Map(t)) = mem.get("t") else { panic!() };
        let l = t.values().next().unwrap();
        assert_eq!(l.conf, Conf::Secret);
        assert_eq!(l.origin.as_ref().unwrap().dist.len(), 2);
    }
    let spin = body(&f, "Coin", "spin");
    assert!(exec(d, &spin, &m, 10).unwrap().is_empty());
    assert!(!lossless_check(d, &spin, &[], 10).unwrap());
    assert!(lossless_check(d, &[Command::Skip], &[], 10).unwrap());
}

#[test]
fn procedures() {
    let f = load("example.plw");
    let d = &f.decls;
    let x0 = Value::Elem(d.elem("x0").unwrap());
    let m = Memory::new().with("t", Value::Map(Default::default()));
    let init = run_proc(d, "P1", "init", &[], &Memory::new(), DEFAULT_FUEL).unwrap();
    assert!(dist_eq(&init, &Dist::dirac((m.clone(), Value::Unit))));
    let g = run_proc(d, "P1", "g", &[x0.clone()], &m, DEFAULT_FUEL).unwrap();
    assert!(dist_eq(&g, &Dist::dirac((m.clone(), Value::Unit))));

    // Hand composition: sample a secret entry, then read and leak it.
    let expected = Dist::from_weights(d.elements_named("Y").unwrap().into_iter().map(|y| {
        let l = Labeled { value: y, origin: Some(plwhile::lang::Origin::new("dY", Dist::uniform(d.elements_named("Y").unwrap()))), conf: Conf::Leaked };
        let t = [(d.elem("x0").unwrap(), l)].into_iter().collect();
        ((m.clone().with("t", Value::Map(t)), Value::Elem(y)), ratio(1, 2))
    }));
    assert!(dist_eq(&run_proc(d, "P1", "f", &[x0], &m, DEFAULT_FUEL).unwrap(), &expected));

    let vars = vec![("t".to_string(), Ty::Map("X".into(), "Y".into())), ("x".to_string(), Ty::Fin("X".into()))];
    assert!(lossless_check(d, &body(&f, "P2", "g"), &vars, DEFAULT_FUEL).unwrap());
}

/// Running a program in two halves and binding agrees with running it
/// whole, and repeated runs agree exactly.
#[test]
fn sequencing_and_determinism() {
    let f = load("example.plw");
    let d = &f.decls;
    let p = d.module("P2").unwrap().proc("f").unwrap();
    let vars: Vec<_> = [("t".to_string(), Ty::Map("X".into(), "Y".into()))].into_iter().chain(p.params.clone()).chain(p.locals.clone()).collect();
    let (c1, c2) = p.body.split_at(1);
    for m in enumerate_memories(d, &vars).unwrap() {
        let whole = exec(d, &p.body, &m, DEFAULT_FUEL).unwrap();
        let split = exec(d, c1, &m, DEFAULT_FUEL).unwrap().try_bind(|m| exec(d, c2, m, DEFAULT_FUEL)).unwrap();
        assert!(dist_eq(&whole, &split));
        assert_eq!(whole, exec(d, &p.body, &m, DEFAULT_FUEL).unwrap());
        assert_eq!(whole.render(|m| m.render(d)), split.render(|m| m.render(d)));
    }
}
