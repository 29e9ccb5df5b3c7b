use std::collections::HashMap;

use crate::dist::Rational;
use crate::lang::ast::{DistExpr, Module, Ty};
use crate::lang::value::{Conf, Elem, Labeled, Origin, Value};

/// A declared finite type. Element order is the enumeration order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteType {
    pub name: String,
    pub elements: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DistDef {
    Expr(DistExpr),
    /// Explicit weights over elements of one type.
    Table(Vec<(String, Rational)>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistBinding {
    pub name: String,
    pub def: DistDef,
}

/// Types, distribution bindings and modules shared by a source file.
#[derive(Clone, Debug)]
pub struct Decls {
    pub types: Vec<FiniteType>,
    pub dists: Vec<DistBinding>,
    pub modules: Vec<Module>,
    type_ids: HashMap<String, u16>,
    elems: HashMap<String, Elem>,
}

impl PartialEq for Decls {
    fn eq(&self, other: &Self) -> bool {
        self.types == other.types && self.dists == other.dists && self.modules == other.modules
    }
}

impl Decls {
    /// Indexes the declarations; element names must be unique across types.
    pub fn new(
        types: Vec<FiniteType>,
        dists: Vec<DistBinding>,
        modules: Vec<Module>,
    ) -> Result<Decls, String> {
        let mut type_ids = HashMap::new();
        let mut elems = HashMap::new();
        for (ti, t) in types.iter().enumerate() {
            if t.elements.is_empty() {
                return Err(format!("type `{}` has no elements", t.name));
            }
            if type_ids.insert(t.name.clone(), ti as u16).is_some() {
                return Err(format!("type `{}` declared twice", t.name));
            }
            for (ei, e) in t.elements.iter().enumerate() {
                let elem = Elem { ty: ti as u16, idx: ei as u16 };
                if elems.insert(e.clone(), elem).is_some() {
                    return Err(format!("element `{e}` declared twice"));
                }
            }
        }
        let mut seen = HashMap::new();
        for d in &dists {
            if elems.contains_key(&d.name) || seen.insert(d.name.clone(), ()).is_some() {
                return Err(format!("distribution `{}` clashes with another name", d.name));
            }
        }
        let mut mods = HashMap::new();
        for m in &modules {
            if mods.insert(m.name.clone(), ()).is_some() {
                return Err(format!("module `{}` declared twice", m.name));
            }
        }
        Ok(Decls { types, dists, modules, type_ids, elems })
    }

    pub fn empty() -> Decls {
        Decls::new(vec![], vec![], vec![]).expect("empty declarations")
    }

    pub fn type_id(&self, name: &str) -> Option<u16> {
        self.type_ids.get(name).copied()
    }

    pub fn elem(&self, name: &str) -> Option<Elem> {
        self.elems.get(name).copied()
    }

    pub fn elements_of(&self, ty: u16) -> Vec<Elem> {
        (0..self.types[ty as usize].elements.len())
            .map(|i| Elem { ty, idx: i as u16 })
            .collect()
    }

    pub fn elements_named(&self, ty: &str) -> Option<Vec<Elem>> {
        self.type_id(ty).map(|t| self.elements_of(t))
    }

    pub fn elem_name(&self, e: Elem) -> &str {
        &self.types[e.ty as usize].elements[e.idx as usize]
    }

    pub fn type_name(&self, ty: u16) -> &str {
        &self.types[ty as usize].name
    }

    pub fn dist(&self, name: &str) -> Option<&DistBinding> {
        self.dists.iter().find(|d| d.name == name)
    }

    pub fn module(&self, name: &str) -> Option<&Module> {
        self.modules.iter().find(|m| m.name == name)
    }

    /// Whether `name` is a constant or distribution rather than a variable.
    pub fn is_global_constant(&self, name: &str) -> bool {
        self.elems.contains_key(name) || self.dist(name).is_some()
    }

    /// Finite domain of a surface type, when it has one.
    pub fn fin_id(&self, ty: &Ty) -> Option<u16> {
        match ty {
            Ty::Fin(n) | Ty::Lab(n) | Ty::Origin(n) => self.type_id(n),
            _ => None,
        }
    }

    pub fn show_origin(&self, o: &Option<Origin>) -> String {
        match o {
            Some(o) => o.name.to_string(),
            None => "⊥".to_string(),
        }
    }

    pub fn show_labeled(&self, l: &Labeled) -> String {
        format!(
            "({}, {}, {})",
            self.elem_name(l.value),
            self.show_origin(&l.origin),
            show_conf(l.conf)
        )
    }

    pub fn show_value(&self, v: &Value) -> String {
        match v {
            Value::Unit => "()".to_string(),
            Value::Bool(b) => b.to_string(),
            Value::Elem(e) => self.elem_name(*e).to_string(),
            Value::Conf(c) => show_conf(*c).to_string(),
            Value::Origin(o) => self.show_origin(o),
            Value::Labeled(l) => self.show_labeled(l),
            Value::Map(m) => {
                let parts: Vec<String> = m
                    .iter()
                    .map(|(k, l)| format!("{}: {}", self.elem_name(*k), self.show_labeled(l)))
                    .collect();
                format!("{{{}}}", parts.join(", "))
            }
        }
    }
}

pub fn show_conf(c: Conf) -> &'static str {
    match c {
        Conf::Secret => "S",
        Conf::Leaked => "L",
    }
}
