use num_bigint::BigInt;

use crate::dist::Rational;
use crate::frontend::lexer::{lex, ParseError, Tok, Token};
use crate::lang::ast::{Command, DistExpr, Expr, LVal, Module, Proc, Ty};
use crate::lang::check::{check_commands, well_formed};
use crate::lang::decls::{Decls, DistBinding, DistDef, FiniteType};
use crate::lang::value::Conf;
use crate::relational::{Assertion, RelGoal, RelOp, Side, Tactic};

#[derive(Clone, Debug, PartialEq)]
pub struct Proof {
    pub goal: String,
    pub tactics: Vec<Tactic>,
}

/// A parsed `.plw` file.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceFile {
    pub decls: Decls,
    pub goals: Vec<RelGoal>,
    pub proofs: Vec<Proof>,
    pub groups: Vec<(String, Vec<String>)>,
}

impl SourceFile {
    pub fn goal(&self, name: &str) -> Option<&RelGoal> {
        self.goals.iter().find(|g| g.name == name)
    }

    pub fn proof(&self, name: &str) -> Option<&Proof> {
        self.proofs.iter().find(|p| p.goal == name)
    }

    pub fn group(&self, name: &str) -> Option<&[String]> {
        self.groups.iter().find(|(n, _)| n == name).map(|(_, g)| g.as_slice())
    }
}

const RESERVED: &[&str] = &["true", "false", "S", "L", "bot", "empty", "dom", "pi1", "pi2", "pi3", "uniform", "dirac"];

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    types: Vec<String>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let t = &self.toks[self.pos];
        Err(ParseError { line: t.line, col: t.col, message: msg.into() })
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, s: &str) -> bool {
        if self.is_kw(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn describe(&self) -> String {
        match self.peek() {
            Tok::Ident(s) | Tok::Num(s) => format!("`{s}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {}", self.describe()))
        }
    }

    fn expect_kw(&mut self, s: &str) -> PResult<()> {
        if self.eat_kw(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {}", self.describe()))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            _ => self.err(format!("expected an identifier, found {}", self.describe())),
        }
    }

    fn number(&mut self) -> PResult<usize> {
        match self.peek().clone() {
            Tok::Num(s) => {
                let n = s.parse().map_err(|_| ParseError {
                    line: self.toks[self.pos].line,
                    col: self.toks[self.pos].col,
                    message: format!("number `{s}` is too large"),
                })?;
                self.bump();
                Ok(n)
            }
            _ => self.err(format!("expected a number, found {}", self.describe())),
        }
    }

    fn type_name(&mut self) -> PResult<String> {
        let save = self.pos;
        let n = self.ident()?;
        if !self.types.contains(&n) {
            self.pos = save;
            return self.err(format!("unknown type `{n}`"));
        }
        Ok(n)
    }

    fn ty(&mut self) -> PResult<Ty> {
        if self.eat_kw("unit") {
            return Ok(Ty::Unit);
        }
        if self.eat_kw("bool") {
            return Ok(Ty::Bool);
        }
        if self.eat_kw("conf") {
            return Ok(Ty::Conf);
        }
        if self.eat_kw("lab") {
            return Ok(Ty::Lab(self.type_name()?));
        }
        if self.eat_kw("origin") {
            return Ok(Ty::Origin(self.type_name()?));
        }
        let k = self.type_name()?;
        if self.eat_sym("->") {
            self.expect_kw("lab")?;
            return Ok(Ty::Map(k, self.type_name()?));
        }
        Ok(Ty::Fin(k))
    }

    fn typed_list(&mut self) -> PResult<Vec<(String, Ty)>> {
        let mut out = Vec::new();
        if self.is_sym(";") || self.is_sym(")") {
            return Ok(out);
        }
        loop {
            let n = self.ident()?;
            self.expect_sym(":")?;
            out.push((n, self.ty()?));
            if !self.eat_sym(",") {
                return Ok(out);
            }
        }
    }

    // Expressions: `&&` binds loosest, then `==`, then prefix operators.

    fn expr(&mut self) -> PResult<Expr> {
        let mut e = self.eq_expr()?;
        while self.eat_sym("&&") {
            e = Expr::And(Box::new(e), Box::new(self.eq_expr()?));
        }
        Ok(e)
    }

    fn eq_expr(&mut self) -> PResult<Expr> {
        let e = self.unary()?;
        if self.eat_sym("==") {
            return Ok(Expr::Eq(Box::new(e), Box::new(self.unary()?)));
        }
        Ok(e)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat_sym("!") {
            return Ok(Expr::not(self.unary()?));
        }
        for (kw, i) in [("pi1", 1), ("pi2", 2), ("pi3", 3)] {
            if self.eat_kw(kw) {
                return Ok(Expr::proj(i, self.unary()?));
            }
        }
        if self.eat_kw("dom") {
            let t = self.ident()?;
            return Ok(Expr::dom(&t, self.unary()?));
        }
        self.atom()
    }

    fn atom(&mut self) -> PResult<Expr> {
        let lits = [
            ("true", Expr::Bool(true)),
            ("false", Expr::Bool(false)),
            ("S", Expr::Conf(Conf::Secret)),
            ("L", Expr::Conf(Conf::Leaked)),
            ("bot", Expr::Bot),
            ("empty", Expr::Empty),
        ];
        for (kw, e) in lits {
            if self.eat_kw(kw) {
                return Ok(e);
            }
        }
        if self.is_kw("uniform") || self.is_kw("dirac") {
            return Ok(Expr::Dist(self.dist_expr()?));
        }
        if self.eat_sym("(") {
            let a = self.expr()?;
            if self.eat_sym(",") {
                let b = self.expr()?;
                self.expect_sym(",")?;
                let c = self.expr()?;
                self.expect_sym(")")?;
                return Ok(Expr::triple(a, b, c));
            }
            self.expect_sym(")")?;
            return Ok(a);
        }
        let n = self.ident()?;
        if self.eat_sym("[") {
            let k = self.expr()?;
            self.expect_sym("]")?;
            return Ok(Expr::lookup(&n, k));
        }
        Ok(Expr::Name(n))
    }

    fn dist_expr(&mut self) -> PResult<DistExpr> {
        if self.eat_kw("uniform") {
            return Ok(DistExpr::Uniform(self.type_name()?));
        }
        if self.eat_kw("dirac") {
            self.expect_sym("(")?;
            let e = self.expr()?;
            self.expect_sym(")")?;
            return Ok(DistExpr::Point(Box::new(e)));
        }
        Ok(DistExpr::Named(self.ident()?))
    }

    fn lval(&mut self) -> PResult<LVal> {
        let n = self.ident()?;
        if self.eat_sym("[") {
            let k = self.expr()?;
            self.expect_sym("]")?;
            return Ok(LVal::Index(n, k));
        }
        Ok(LVal::Var(n))
    }

    fn block(&mut self) -> PResult<Vec<Command>> {
        self.expect_sym("{")?;
        let mut out = Vec::new();
        while !self.is_sym("}") {
            if self.is_kw("return") || matches!(self.peek(), Tok::Eof) {
                break;
            }
            out.push(self.command()?);
        }
        self.expect_sym("}")?;
        Ok(out)
    }

    fn call_tail(&mut self, target: Option<LVal>) -> PResult<Command> {
        let m = self.ident()?;
        self.expect_sym(".")?;
        let p = self.ident()?;
        self.expect_sym("(")?;
        let mut args = Vec::new();
        if !self.is_sym(")") {
            loop {
                args.push(self.expr()?);
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        self.expect_sym(";")?;
        Ok(Command::Call(target, m, p, args))
    }

    fn command(&mut self) -> PResult<Command> {
        if self.eat_kw("skip") {
            self.expect_sym(";")?;
            return Ok(Command::Skip);
        }
        if self.eat_kw("if") {
            let c = self.expr()?;
            let th = self.block()?;
            let el = if self.eat_kw("else") { self.block()? } else { vec![] };
            return Ok(Command::If(c, th, el));
        }
        if self.eat_kw("while") {
            let c = self.expr()?;
            return Ok(Command::While(c, self.block()?));
        }
        if matches!(self.peek_at(1), Tok::Sym(".")) {
            return self.call_tail(None);
        }
        let lv = self.lval()?;
        let cmd = match self.peek().clone() {
            Tok::Sym("<-") => {
                self.bump();
                Command::Assign(lv, self.expr()?)
            }
            Tok::Sym("<$") => {
                self.bump();
                Command::Sample(lv, self.dist_expr()?)
            }
            Tok::Sym("<~") => {
                self.bump();
                Command::SecRead(lv, self.lval()?)
            }
            Tok::Sym("<~$") => {
                self.bump();
                Command::SecSample(lv, self.dist_expr()?)
            }
            Tok::Sym("<@") => {
                self.bump();
                return self.call_tail(Some(lv));
            }
            _ => return self.err(format!("expected an assignment arrow, found {}", self.describe())),
        };
        self.expect_sym(";")?;
        Ok(cmd)
    }

    fn module(&mut self) -> PResult<Module> {
        let name = self.ident()?;
        self.expect_sym("{")?;
        let mut globals = Vec::new();
        let mut procs = Vec::new();
        while !self.eat_sym("}") {
            if self.eat_kw("var") {
                globals.extend(self.typed_list()?);
                self.expect_sym(";")?;
            } else if self.eat_kw("proc") {
                procs.push(self.proc()?);
            } else {
                return self.err(format!("expected `var`, `proc` or `}}`, found {}", self.describe()));
            }
        }
        Ok(Module { name, globals, procs })
    }

    fn proc(&mut self) -> PResult<Proc> {
        let name = self.ident()?;
        self.expect_sym("(")?;
        let params = self.typed_list()?;
        self.expect_sym(")")?;
        let ret_ty = if self.eat_sym(":") { Some(self.ty()?) } else { None };
        self.expect_sym("{")?;
        let mut locals = Vec::new();
        while self.eat_kw("var") {
            locals.extend(self.typed_list()?);
            self.expect_sym(";")?;
        }
        let mut body = Vec::new();
        let mut ret = None;
        loop {
            if self.eat_kw("return") {
                ret = Some(self.expr()?);
                self.expect_sym(";")?;
                self.expect_sym("}")?;
                break;
            }
            if self.eat_sym("}") {
                break;
            }
            body.push(self.command()?);
        }
        Ok(Proc { name, params, ret_ty, locals, body, ret })
    }

    fn side(&mut self) -> PResult<Side> {
        if self.eat_kw("left") {
            Ok(Side::Left)
        } else if self.eat_kw("right") {
            Ok(Side::Right)
        } else {
            self.err(format!("expected `left` or `right`, found {}", self.describe()))
        }
    }

    fn at_side(&mut self) -> PResult<Side> {
        self.expect_sym("@")?;
        match self.peek() {
            Tok::Num(n) if n == "1" => {
                self.bump();
                Ok(Side::Left)
            }
            Tok::Num(n) if n == "2" => {
                self.bump();
                Ok(Side::Right)
            }
            _ => self.err("expected side `1` or `2`"),
        }
    }

    // Assertions: `=>` (right associative) < `\/` < `/\` < prefix forms.

    fn assertion(&mut self) -> PResult<Assertion> {
        let a = self.disj()?;
        if self.eat_sym("=>") {
            return Ok(Assertion::Implies(Box::new(a), Box::new(self.assertion()?)));
        }
        Ok(a)
    }

    fn disj(&mut self) -> PResult<Assertion> {
        let a = self.conj()?;
        if !self.is_sym("\\/") {
            return Ok(a);
        }
        let mut xs = vec![a];
        while self.eat_sym("\\/") {
            xs.push(self.conj()?);
        }
        Ok(Assertion::Or(xs))
    }

    fn conj(&mut self) -> PResult<Assertion> {
        let a = self.prefix()?;
        if !self.is_sym("/\\") {
            return Ok(a);
        }
        let mut xs = vec![a];
        while self.eat_sym("/\\") {
            xs.push(self.prefix()?);
        }
        Ok(Assertion::And(xs))
    }

    fn prefix(&mut self) -> PResult<Assertion> {
        if self.eat_sym("!") {
            return Ok(Assertion::not(self.prefix()?));
        }
        if self.eat_kw("forall") {
            let v = self.ident()?;
            self.expect_sym(":")?;
            let ty = self.type_name()?;
            self.expect_sym(".")?;
            return Ok(Assertion::Forall(v, ty, Box::new(self.assertion()?)));
        }
        if self.eat_kw("after") {
            let s = self.at_side()?;
            let cmds = self.block()?;
            return Ok(Assertion::After(s, cmds, Box::new(self.prefix()?)));
        }
        self.atomic_assertion()
    }

    fn atomic_assertion(&mut self) -> PResult<Assertion> {
        if matches!(self.peek_at(1), Tok::Sym("@")) {
            for kw in ["leaked", "from", "dom", "test"] {
                if self.eat_kw(kw) {
                    let s = self.at_side()?;
                    self.expect_sym("(")?;
                    let a = match kw {
                        "leaked" => Assertion::Leaked(s, self.expr()?),
                        "test" => Assertion::Test(s, self.expr()?),
                        "from" => {
                            let e = self.expr()?;
                            self.expect_sym(",")?;
                            Assertion::From(s, e, self.dist_expr()?)
                        }
                        _ => {
                            let t = self.ident()?;
                            self.expect_sym(",")?;
                            Assertion::Dom(s, t, self.expr()?)
                        }
                    };
                    self.expect_sym(")")?;
                    return Ok(a);
                }
            }
        }
        if matches!(self.peek_at(1), Tok::Sym("@") | Tok::Sym("=") | Tok::Sym("<>") | Tok::Sym("~=")) {
            // an expression side tag follows, handled below
        } else if self.eat_kw("true") {
            return Ok(Assertion::True);
        } else if self.eat_kw("false") {
            return Ok(Assertion::False);
        }
        if self.is_kw("inv") && matches!(self.peek_at(1), Tok::Sym("(")) {
            self.bump();
            self.bump();
            let a = self.ident()?;
            self.expect_sym(",")?;
            let b = self.ident()?;
            self.expect_sym(",")?;
            let d = self.dist_expr()?;
            self.expect_sym(")")?;
            return Ok(Assertion::SecInv(a, b, d));
        }
        if self.is_sym("=") && matches!(self.peek_at(1), Tok::Sym("{")) {
            self.bump();
            self.bump();
            let mut xs = vec![self.ident()?];
            while self.eat_sym(",") {
                xs.push(self.ident()?);
            }
            self.expect_sym("}")?;
            return Ok(if xs.len() == 1 {
                Assertion::VarEq(xs.pop().unwrap())
            } else {
                Assertion::And(xs.into_iter().map(Assertion::VarEq).collect())
            });
        }
        if self.is_sym("(") {
            let save = self.pos;
            self.bump();
            if let Ok(a) = self.assertion() {
                if self.eat_sym(")") && !self.is_sym("@") {
                    return Ok(a);
                }
            }
            self.pos = save;
        }
        let a = self.expr()?;
        let s1 = self.at_side()?;
        let op = match self.peek() {
            Tok::Sym("=") => Some(RelOp::Eq),
            Tok::Sym("<>") => Some(RelOp::Ne),
            Tok::Sym("~=") => None,
            _ => return self.err(format!("expected `=`, `<>` or `~=`, found {}", self.describe())),
        };
        self.bump();
        let b = self.expr()?;
        let s2 = self.at_side()?;
        match op {
            Some(op) => Ok(Assertion::Rel(s1, a, op, s2, b)),
            None if s1 == Side::Left && s2 == Side::Right => Ok(Assertion::LabelEq(a, b)),
            None => self.err("`~=` relates a left expression to a right one"),
        }
    }

    fn tactic(&mut self) -> PResult<Tactic> {
        let name = match self.peek().clone() {
            Tok::Ident(n) => n,
            _ => return self.err(format!("expected a tactic, found {}", self.describe())),
        };
        let t = match name.as_str() {
            "assign" | "rnd" | "skip" | "auto" | "done" => {
                self.bump();
                match name.as_str() {
                    "assign" => Tactic::Assign,
                    "rnd" => Tactic::Rnd,
                    "skip" => Tactic::Skip,
                    "auto" => Tactic::Auto,
                    _ => Tactic::Done,
                }
            }
            "swap" => {
                self.bump();
                let s = self.side()?;
                let i = self.number()?;
                Tactic::Swap(s, i, self.number()?)
            }
            "seq" => {
                self.bump();
                let k1 = self.number()?;
                let k2 = if matches!(self.peek(), Tok::Num(_)) { self.number()? } else { k1 };
                self.expect_sym("{")?;
                let a = self.assertion()?;
                self.expect_sym("}")?;
                Tactic::Seq(k1, k2, a)
            }
            "case" => {
                self.bump();
                let s = self.side()?;
                Tactic::Case(s, self.expr()?)
            }
            "inline" => {
                self.bump();
                if self.is_sym(";") {
                    Tactic::Inline(None)
                } else {
                    let m = self.ident()?;
                    self.expect_sym(".")?;
                    Tactic::Inline(Some((m, self.ident()?)))
                }
            }
            "declassify" => {
                self.bump();
                Tactic::Declassify(self.side()?)
            }
            "secrnd" => {
                self.bump();
                Tactic::Secrnd(self.side()?)
            }
            "secrndasgn" => {
                self.bump();
                let t = self.ident()?;
                let x = self.unary()?;
                Tactic::Secrndasgn(t, x, self.ident()?)
            }
            _ => return self.err(format!("unknown tactic `{name}`")),
        };
        self.expect_sym(";")?;
        Ok(t)
    }

    fn goal(&mut self) -> PResult<RelGoal> {
        let name = self.ident()?;
        let mut g = RelGoal::new(&name, vec![], vec![], Assertion::True, Assertion::True, vec![]);
        self.expect_sym("{")?;
        while !self.eat_sym("}") {
            let kw = match self.peek().clone() {
                Tok::Ident(k) => k,
                _ => return self.err(format!("expected a goal clause, found {}", self.describe())),
            };
            match kw.as_str() {
                "vars" | "locals" => {
                    self.bump();
                    let l = self.typed_list()?;
                    self.expect_sym(";")?;
                    if kw == "vars" { g.vars.extend(l) } else { g.locals.extend(l) }
                }
                "left" => {
                    self.bump();
                    g.left = self.block()?;
                }
                "right" => {
                    self.bump();
                    g.right = self.block()?;
                }
                "pre" | "post" => {
                    self.bump();
                    let a = self.assertion()?;
                    self.expect_sym(";")?;
                    if kw == "pre" { g.pre = a } else { g.post = a }
                }
                "sampled" => {
                    self.bump();
                    let t = self.ident()?;
                    self.expect_sym("[")?;
                    let k = self.expr()?;
                    self.expect_sym("]")?;
                    self.expect_sym(";")?;
                    g.sampled = Some((t, k));
                }
                _ => return self.err(format!("unknown goal clause `{kw}`")),
            }
        }
        Ok(g)
    }

    fn weight(&mut self) -> PResult<Rational> {
        let n = self.number()?;
        let d = if self.eat_sym("/") { self.number()? } else { 1 };
        if d == 0 {
            return self.err("zero denominator");
        }
        Ok(Rational::new(BigInt::from(n), BigInt::from(d)))
    }

    fn dist_def(&mut self) -> PResult<DistDef> {
        if self.eat_sym("{") {
            let mut rows = Vec::new();
            loop {
                let e = self.ident()?;
                self.expect_sym(":")?;
                rows.push((e, self.weight()?));
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym("}")?;
            return Ok(DistDef::Table(rows));
        }
        Ok(DistDef::Expr(self.dist_expr()?))
    }
}

struct Raw {
    types: Vec<FiniteType>,
    dists: Vec<DistBinding>,
    modules: Vec<(Module, (usize, usize))>,
    goals: Vec<(RelGoal, (usize, usize))>,
    proofs: Vec<(Proof, (usize, usize))>,
    groups: Vec<((String, Vec<String>), (usize, usize))>,
}

fn at<T>(pos: (usize, usize), message: String) -> PResult<T> {
    Err(ParseError { line: pos.0, col: pos.1, message })
}

/// Parses and checks a source file.
pub fn parse(src: &str) -> Result<SourceFile, ParseError> {
    let mut p = Parser { toks: lex(src)?, pos: 0, types: vec![] };
    let mut raw = Raw { types: vec![], dists: vec![], modules: vec![], goals: vec![], proofs: vec![], groups: vec![] };
    loop {
        let pos = (p.toks[p.pos].line, p.toks[p.pos].col);
        if matches!(p.peek(), Tok::Eof) {
            break;
        }
        if p.eat_kw("type") {
            let name = p.ident()?;
            p.expect_sym("=")?;
            p.expect_sym("{")?;
            let mut elements = vec![p.ident()?];
            while p.eat_sym(",") {
                elements.push(p.ident()?);
            }
            p.expect_sym("}")?;
            p.expect_sym(";")?;
            p.types.push(name.clone());
            raw.types.push(FiniteType { name, elements });
        } else if p.eat_kw("dist") {
            let name = p.ident()?;
            p.expect_sym("=")?;
            let def = p.dist_def()?;
            p.expect_sym(";")?;
            raw.dists.push(DistBinding { name, def });
        } else if p.eat_kw("module") {
            raw.modules.push((p.module()?, pos));
        } else if p.eat_kw("goal") {
            raw.goals.push((p.goal()?, pos));
        } else if p.eat_kw("proof") {
            let goal = p.ident()?;
            p.expect_sym("{")?;
            let mut tactics = Vec::new();
            while !p.eat_sym("}") {
                tactics.push(p.tactic()?);
            }
            raw.proofs.push((Proof { goal, tactics }, pos));
        } else if p.eat_kw("group") {
            let name = p.ident()?;
            p.expect_sym("=")?;
            let mut members = vec![p.ident()?];
            while p.eat_sym(",") {
                members.push(p.ident()?);
            }
            p.expect_sym(";")?;
            raw.groups.push(((name, members), pos));
        } else {
            return p.err(format!("expected a declaration, found {}", p.describe()));
        }
    }
    resolve(raw)
}

fn resolve(raw: Raw) -> Result<SourceFile, ParseError> {
    let modules: Vec<Module> = raw.modules.iter().map(|(m, _)| m.clone()).collect();
    let decls = Decls::new(raw.types, raw.dists, modules).map_err(|m| ParseError { line: 1, col: 1, message: m })?;
    if let Some(e) = crate::lang::check::check_dists(&decls).first() {
        return at((1, 1), e.to_string());
    }
    for (m, pos) in &raw.modules {
        if let Err(errs) = well_formed(&decls, m) {
            return at(*pos, errs[0].to_string());
        }
    }
    let goals: Vec<RelGoal> = raw.goals.iter().map(|(g, _)| g.clone()).collect();
    for (g, pos) in &raw.goals {
        if goals.iter().filter(|h| h.name == g.name).count() > 1 {
            return at(*pos, format!("goal `{}` declared twice", g.name));
        }
        let vars: Vec<(String, Ty)> = g.vars.iter().chain(&g.locals).cloned().collect();
        for (side, cmds) in [("left", &g.left), ("right", &g.right)] {
            if let Some(e) = check_commands(&decls, &vars, cmds, &format!("goal {} {side}", g.name)).first() {
                return at(*pos, e.to_string());
            }
        }
    }
    for (pr, pos) in &raw.proofs {
        if !goals.iter().any(|g| g.name == pr.goal) {
            return at(*pos, format!("proof for unknown goal `{}`", pr.goal));
        }
    }
    for ((name, members), pos) in &raw.groups {
        for m in members {
            if !goals.iter().any(|g| g.name == *m) {
                return at(*pos, format!("group `{name}` names unknown goal `{m}`"));
            }
        }
    }
    Ok(SourceFile {
        decls,
        goals,
        proofs: raw.proofs.into_iter().map(|(p, _)| p).collect(),
        groups: raw.groups.into_iter().map(|(g, _)| g).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sides_must_be_one_and_two() {
        let head = "type X = {x0}; goal g { vars x: X; left { } right { } pre true; post ";
        assert!(parse(&format!("{head}x@1 = x@2; }}")).is_ok());
        let e = parse(&format!("{head}x@1 = x@3; }}")).unwrap_err();
        assert_eq!(e.line, 1);
    }

    #[test]
    fn varset_sugar_expands() {
        let f = parse("type X = {x0}; goal g { vars x: X, y: X; left { } right { } pre ={x, y}; post true; }").unwrap();
        assert_eq!(f.goals[0].pre, Assertion::And(vec![Assertion::VarEq("x".into()), Assertion::VarEq("y".into())]));
    }

    #[test]
    fn parenthesised_sides() {
        let f = parse("type X = {x0}; goal g { vars x: X; left { } right { } pre (x == x0)@1 = true@2; post (true); }").unwrap();
        assert!(matches!(f.goals[0].pre, Assertion::Rel(..)));
        assert_eq!(f.goals[0].post, Assertion::True);
    }

    #[test]
    fn unknown_proof_target() {
        assert!(parse("proof nope { auto; }").is_err());
    }
}
