//! Concrete syntax for every AST node. Output reparses to the same tree.

use crate::dist::fmt_rational;
use crate::frontend::parser::{Proof, SourceFile};
use crate::lang::ast::{Command, DistExpr, Expr, LVal, Module, Proc, Ty};
use crate::lang::decls::DistDef;
use crate::lang::value::Conf;
use crate::relational::{Assertion, RelGoal, RelOp, Side, Tactic};

pub fn print_ty(t: &Ty) -> String {
    match t {
        Ty::Unit => "unit".into(),
        Ty::Bool => "bool".into(),
        Ty::Conf => "conf".into(),
        Ty::Fin(n) => n.clone(),
        Ty::Lab(n) => format!("lab {n}"),
        Ty::Origin(n) => format!("origin {n}"),
        Ty::Map(k, v) => format!("{k} -> lab {v}"),
    }
}

pub fn print_dist(d: &DistExpr) -> String {
    match d {
        DistExpr::Uniform(t) => format!("uniform {t}"),
        DistExpr::Point(e) => format!("dirac({})", print_expr(e)),
        DistExpr::Named(n) => n.clone(),
    }
}

fn operand(e: &Expr) -> String {
    match e {
        Expr::Eq(..) | Expr::And(..) => format!("({})", print_expr(e)),
        e => print_expr(e),
    }
}

pub fn print_expr(e: &Expr) -> String {
    match e {
        Expr::Name(n) => n.clone(),
        Expr::Bool(b) => b.to_string(),
        Expr::Conf(Conf::Secret) => "S".into(),
        Expr::Conf(Conf::Leaked) => "L".into(),
        Expr::Bot => "bot".into(),
        Expr::Empty => "empty".into(),
        Expr::Dist(d) => print_dist(d),
        Expr::Lookup(m, k) => format!("{m}[{}]", print_expr(k)),
        Expr::Dom(m, k) => format!("dom {m} {}", operand(k)),
        Expr::Not(a) => format!("!{}", operand(a)),
        Expr::Proj(i, a) => format!("pi{i} {}", operand(a)),
        Expr::Eq(a, b) => format!("{} == {}", operand(a), operand(b)),
        Expr::And(a, b) => {
            let rhs = match **b {
                Expr::And(..) => format!("({})", print_expr(b)),
                _ => print_expr(b),
            };
            format!("{} && {rhs}", print_expr(a))
        }
        Expr::Triple(a, b, c) => format!("({}, {}, {})", print_expr(a), print_expr(b), print_expr(c)),
    }
}

fn print_lval(lv: &LVal) -> String {
    match lv {
        LVal::Var(v) => v.clone(),
        LVal::Index(m, k) => format!("{m}[{}]", print_expr(k)),
    }
}

pub fn print_cmds(cmds: &[Command], indent: usize) -> String {
    cmds.iter().map(|c| print_cmd(c, indent)).collect()
}

fn print_block(cmds: &[Command], indent: usize) -> String {
    if cmds.is_empty() {
        return "{ }".into();
    }
    format!("{{\n{}{}}}", print_cmds(cmds, indent + 1), "  ".repeat(indent))
}

pub fn print_cmd(c: &Command, indent: usize) -> String {
    let pad = "  ".repeat(indent);
    let body = match c {
        Command::Skip => "skip;".into(),
        Command::Assign(lv, e) => format!("{} <- {};", print_lval(lv), print_expr(e)),
        Command::Sample(lv, d) => format!("{} <$ {};", print_lval(lv), print_dist(d)),
        Command::SecRead(w, s) => format!("{} <~ {};", print_lval(w), print_lval(s)),
        Command::SecSample(lv, d) => format!("{} <~$ {};", print_lval(lv), print_dist(d)),
        Command::If(e, a, b) => {
            let mut s = format!("if {} {}", print_expr(e), print_block(a, indent));
            if !b.is_empty() {
                s += &format!(" else {}", print_block(b, indent));
            }
            s
        }
        Command::While(e, b) => format!("while {} {}", print_expr(e), print_block(b, indent)),
        Command::Call(lv, m, p, args) => {
            let args: Vec<String> = args.iter().map(print_expr).collect();
            let call = format!("{m}.{p}({});", args.join(", "));
            match lv {
                Some(lv) => format!("{} <@ {call}", print_lval(lv)),
                None => call,
            }
        }
    };
    format!("{pad}{body}\n")
}

fn at(s: Side) -> &'static str {
    match s {
        Side::Left => "@1",
        Side::Right => "@2",
    }
}

fn side_word(s: Side) -> &'static str {
    match s {
        Side::Left => "left",
        Side::Right => "right",
    }
}

fn level(a: &Assertion) -> u8 {
    match a {
        Assertion::And(xs) | Assertion::Or(xs) if xs.len() == 1 => level(&xs[0]),
        Assertion::Implies(..) | Assertion::Forall(..) => 0,
        Assertion::Or(xs) if xs.len() > 1 => 1,
        Assertion::And(xs) if xs.len() > 1 && !all_var_eq(xs) => 2,
        Assertion::Not(_) | Assertion::After(..) => 3,
        _ => 4,
    }
}

fn all_var_eq(xs: &[Assertion]) -> bool {
    xs.iter().all(|x| matches!(x, Assertion::VarEq(_)))
}

fn at_least(a: &Assertion, min: u8) -> String {
    if level(a) < min {
        format!("({})", print_assertion(a))
    } else {
        print_assertion(a)
    }
}

fn tagged(e: &Expr, s: Side) -> String {
    let body = match e {
        Expr::Not(_) | Expr::Bool(_) => format!("({})", print_expr(e)),
        e => print_expr(e),
    };
    format!("{body}{}", at(s))
}

pub fn print_assertion(a: &Assertion) -> String {
    match a {
        Assertion::True => "true".into(),
        Assertion::False => "false".into(),
        Assertion::VarEq(x) => format!("={{{x}}}"),
        Assertion::Rel(s1, x, op, s2, y) => {
            let op = match op {
                RelOp::Eq => "=",
                RelOp::Ne => "<>",
            };
            format!("{} {op} {}", tagged(x, *s1), tagged(y, *s2))
        }
        Assertion::LabelEq(x, y) => format!("{} ~= {}", tagged(x, Side::Left), tagged(y, Side::Right)),
        Assertion::Test(s, e) => format!("test{}({})", at(*s), print_expr(e)),
        Assertion::Leaked(s, e) => format!("leaked{}({})", at(*s), print_expr(e)),
        Assertion::From(s, e, d) => format!("from{}({}, {})", at(*s), print_expr(e), print_dist(d)),
        Assertion::Dom(s, t, k) => format!("dom{}({t}, {})", at(*s), print_expr(k)),
        Assertion::SecInv(a, b, d) => format!("inv({a}, {b}, {})", print_dist(d)),
        Assertion::Not(x) => format!("!{}", at_least(x, 3)),
        Assertion::And(xs) if xs.is_empty() => "true".into(),
        Assertion::Or(xs) if xs.is_empty() => "false".into(),
        Assertion::And(xs) | Assertion::Or(xs) if xs.len() == 1 => print_assertion(&xs[0]),
        Assertion::And(xs) if all_var_eq(xs) => {
            let names: Vec<&str> = xs
                .iter()
                .map(|x| match x {
                    Assertion::VarEq(n) => n.as_str(),
                    _ => unreachable!(),
                })
                .collect();
            format!("={{{}}}", names.join(", "))
        }
        Assertion::And(xs) => xs.iter().map(|x| at_least(x, 3)).collect::<Vec<_>>().join(" /\\ "),
        Assertion::Or(xs) => xs.iter().map(|x| at_least(x, 2)).collect::<Vec<_>>().join(" \\/ "),
        Assertion::Implies(x, y) => format!("{} => {}", at_least(x, 1), print_assertion(y)),
        Assertion::Forall(v, t, body) => format!("forall {v}: {t}. {}", print_assertion(body)),
        Assertion::After(s, cmds, body) => {
            let inner: Vec<String> = cmds.iter().map(|c| print_cmd(c, 0).trim_end().to_string()).collect();
            format!("after{} {{ {} }} {}", at(*s), inner.join(" "), at_least(body, 3))
        }
    }
}

pub fn print_tactic(t: &Tactic) -> String {
    match t {
        Tactic::Assign => "assign".into(),
        Tactic::Rnd => "rnd".into(),
        Tactic::Skip => "skip".into(),
        Tactic::Auto => "auto".into(),
        Tactic::Done => "done".into(),
        Tactic::Swap(s, i, j) => format!("swap {} {i} {j}", side_word(*s)),
        Tactic::Seq(k1, k2, a) if k1 == k2 => format!("seq {k1} {{ {} }}", print_assertion(a)),
        Tactic::Seq(k1, k2, a) => format!("seq {k1} {k2} {{ {} }}", print_assertion(a)),
        Tactic::Case(s, e) => format!("case {} {}", side_word(*s), print_expr(e)),
        Tactic::Inline(None) => "inline".into(),
        Tactic::Inline(Some((m, p))) => format!("inline {m}.{p}"),
        Tactic::Declassify(s) => format!("declassify {}", side_word(*s)),
        Tactic::Secrnd(s) => format!("secrnd {}", side_word(*s)),
        Tactic::Secrndasgn(t, x, v) => {
            let key = match x {
                Expr::Eq(..) | Expr::And(..) => format!("({})", print_expr(x)),
                x => print_expr(x),
            };
            format!("secrndasgn {t} {key} {v}")
        }
    }
}

fn typed(xs: &[(String, Ty)]) -> String {
    xs.iter().map(|(n, t)| format!("{n}: {}", print_ty(t))).collect::<Vec<_>>().join(", ")
}

fn print_proc(p: &Proc) -> String {
    let ret = p.ret_ty.as_ref().map(|t| format!(": {}", print_ty(t))).unwrap_or_default();
    let mut s = format!("  proc {}({}){ret} {{\n", p.name, typed(&p.params));
    if !p.locals.is_empty() {
        s += &format!("    var {};\n", typed(&p.locals));
    }
    s += &print_cmds(&p.body, 2);
    if let Some(r) = &p.ret {
        s += &format!("    return {};\n", print_expr(r));
    }
    s + "  }\n"
}

pub fn print_module(m: &Module) -> String {
    let mut s = format!("module {} {{\n", m.name);
    if !m.globals.is_empty() {
        s += &format!("  var {};\n", typed(&m.globals));
    }
    for p in &m.procs {
        s += &print_proc(p);
    }
    s + "}\n"
}

pub fn print_goal(g: &RelGoal) -> String {
    let mut s = format!("goal {} {{\n", g.name);
    if !g.vars.is_empty() {
        s += &format!("  vars {};\n", typed(&g.vars));
    }
    if !g.locals.is_empty() {
        s += &format!("  locals {};\n", typed(&g.locals));
    }
    s += &format!("  left {}\n", print_block(&g.left, 1));
    s += &format!("  right {}\n", print_block(&g.right, 1));
    s += &format!("  pre {};\n", print_assertion(&g.pre));
    s += &format!("  post {};\n", print_assertion(&g.post));
    if let Some((t, k)) = &g.sampled {
        s += &format!("  sampled {t}[{}];\n", print_expr(k));
    }
    s + "}\n"
}

fn print_proof(p: &Proof) -> String {
    let mut s = format!("proof {} {{\n", p.goal);
    for t in &p.tactics {
        s += &format!("  {};\n", print_tactic(t));
    }
    s + "}\n"
}

pub fn print_file(f: &SourceFile) -> String {
    let mut parts = Vec::new();
    for t in &f.decls.types {
        parts.push(format!("type {} = {{{}}};\n", t.name, t.elements.join(", ")));
    }
    for d in &f.decls.dists {
        let def = match &d.def {
            DistDef::Expr(e) => print_dist(e),
            DistDef::Table(rows) => {
                let rows: Vec<String> = rows.iter().map(|(e, w)| format!("{e}: {}", fmt_rational(w))).collect();
                format!("{{{}}}", rows.join(", "))
            }
        };
        parts.push(format!("dist {} = {def};\n", d.name));
    }
    parts.extend(f.decls.modules.iter().map(print_module));
    parts.extend(f.goals.iter().map(print_goal));
    parts.extend(f.proofs.iter().map(print_proof));
    for (n, members) in &f.groups {
        parts.push(format!("group {n} = {};\n", members.join(", ")));
    }
    parts.join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relational::Side;

    #[test]
    fn operands_are_parenthesised() {
        let e = Expr::Eq(Box::new(Expr::Eq(Box::new(Expr::name("a")), Box::new(Expr::name("b")))), Box::new(Expr::Bool(true)));
        assert_eq!(print_expr(&e), "(a == b) == true");
        assert_eq!(print_expr(&Expr::not(Expr::dom("t", Expr::name("x")))), "!dom t x");
    }

    #[test]
    fn implication_binds_loosest() {
        let a = Assertion::Implies(
            Box::new(Assertion::Or(vec![Assertion::True, Assertion::False])),
            Box::new(Assertion::Leaked(Side::Left, Expr::name("v"))),
        );
        assert_eq!(print_assertion(&a), "true \\/ false => leaked@1(v)");
        let n = Assertion::not(Assertion::And(vec![Assertion::True, Assertion::False]));
        assert_eq!(print_assertion(&n), "!(true /\\ false)");
    }

    #[test]
    fn variable_sets_use_sugar() {
        let a = Assertion::And(vec![Assertion::VarEq("x".into()), Assertion::VarEq("y".into())]);
        assert_eq!(print_assertion(&a), "={x, y}");
    }
}
