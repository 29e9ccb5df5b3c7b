//! Runtime values and the label algebra.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::sync::Arc;

use crate::dist::Dist;

/// An element of a declared finite type, ordered by declaration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Elem {
    pub ty: u16,
    pub idx: u16,
}

/// Confidentiality flag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Conf {
    Secret,
    Leaked,
}

/// An evaluated distribution of origin.
///
/// Equality and ordering look only at the weights; the name is kept for
/// printing.
#[derive(Clone, Debug)]
pub struct Origin {
    pub name: Arc<str>,
    pub dist: Arc<Dist<Elem>>,
}

impl Origin {
    pub fn new(name: &str, dist: Dist<Elem>) -> Origin {
        Origin { name: Arc::from(name), dist: Arc::new(dist) }
    }
}

impl PartialEq for Origin {
    fn eq(&self, other: &Self) -> bool {
        self.dist == other.dist
    }
}

impl Eq for Origin {}

impl PartialOrd for Origin {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Origin {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist.cmp(&other.dist)
    }
}

/// A value tagged with its origin distribution and a confidentiality flag.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Labeled {
    pub value: Elem,
    pub origin: Option<Origin>,
    pub conf: Conf,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Value {
    Unit,
    Bool(bool),
    Elem(Elem),
    Conf(Conf),
    Origin(Option<Origin>),
    Labeled(Labeled),
    /// Set entries of a labeled-codomain map; missing keys are unset.
    Map(BTreeMap<Elem, Labeled>),
}

/// One of the three projections of a labeled value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Projected {
    Value(Elem),
    Origin(Option<Origin>),
    Conf(Conf),
}

pub fn proj(i: u8, lv: &Labeled) -> Projected {
    match i {
        1 => Projected::Value(lv.value),
        2 => Projected::Origin(lv.origin.clone()),
        _ => Projected::Conf(lv.conf),
    }
}

pub fn is_leaked(lv: &Labeled) -> bool {
    lv.conf != Conf::Secret
}

/// Whether `lv` carries `d` as its origin, compared by weights.
pub fn in_r(lv: &Labeled, d: &Dist<Elem>) -> bool {
    lv.origin.as_ref().is_some_and(|o| *o.dist == *d)
}

/// Equality of value and origin, ignoring confidentiality.
pub fn label_eq(a: &Labeled, b: &Labeled) -> bool {
    a.value == b.value && a.origin == b.origin
}

impl Value {
    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_elem(&self) -> Option<Elem> {
        match self {
            Value::Elem(e) => Some(*e),
            _ => None,
        }
    }

    pub fn as_labeled(&self) -> Option<&Labeled> {
        match self {
            Value::Labeled(l) => Some(l),
            _ => None,
        }
    }
}
