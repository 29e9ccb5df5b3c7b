//! Exact finite-support sub-probability measures.
//!
//! Weights are [`BigRational`] values kept in lowest terms. Outcomes with a
//! zero weight are never stored, so two distributions are extensionally equal
//! exactly when their weight maps are equal.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Exact rational number used for every probability in the crate.
pub type Rational = BigRational;

/// Builds `num/den` as a [`Rational`].
pub fn ratio(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Prints a rational in the canonical `num/den` form, with `den > 0`.
pub fn fmt_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// A finite map from outcomes to positive rational weights.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Dist<T: Ord> {
    weights: BTreeMap<T, Rational>,
}

impl<T: Ord> Default for Dist<T> {
    fn default() -> Self {
        Dist { weights: BTreeMap::new() }
    }
}

impl<T: Ord + Clone> Dist<T> {
    /// The null measure (mass 0).
    pub fn empty() -> Self {
        Dist::default()
    }

    pub fn dirac(v: T) -> Self {
        let mut weights = BTreeMap::new();
        weights.insert(v, Rational::one());
        Dist { weights }
    }

    /// Uniform distribution over the distinct items of `items`.
    ///
    /// An empty iterator gives the null measure.
    pub fn uniform<I: IntoIterator<Item = T>>(items: I) -> Self {
        let set: BTreeSet<T> = items.into_iter().collect();
        if set.is_empty() {
            return Dist::empty();
        }
        let w = ratio(1, set.len() as i64);
        Dist { weights: set.into_iter().map(|v| (v, w.clone())).collect() }
    }

    /// Collects weighted outcomes, merging duplicates and dropping zeros.
    pub fn from_weights<I: IntoIterator<Item = (T, Rational)>>(items: I) -> Self {
        let mut d = Dist::empty();
        for (v, w) in items {
            d.add_weight(v, w);
        }
        d
    }

    /// Adds `w` to the weight of `v`.
    pub fn add_weight(&mut self, v: T, w: Rational) {
        if w.is_zero() {
            return;
        }
        let slot = self.weights.entry(v.clone()).or_insert_with(Rational::zero);
        *slot += w;
        if slot.is_zero() {
            self.weights.remove(&v);
        }
    }

    /// Monadic bind: the weight of `z` is `sum_v d(v) * f(v)(z)`.
    pub fn bind<U: Ord + Clone, F: FnMut(&T) -> Dist<U>>(&self, mut f: F) -> Dist<U> {
        let mut out = Dist::empty();
        for (v, w) in &self.weights {
            for (z, wz) in f(v).weights {
                out.add_weight(z, w * wz);
            }
        }
        out
    }

    /// Fallible bind; stops at the first error.
    pub fn try_bind<U, E, F>(&self, mut f: F) -> Result<Dist<U>, E>
    where
        U: Ord + Clone,
        F: FnMut(&T) -> Result<Dist<U>, E>,
    {
        let mut out = Dist::empty();
        for (v, w) in &self.weights {
            for (z, wz) in f(v)?.weights {
                out.add_weight(z, w * wz);
            }
        }
        Ok(out)
    }

    /// Pushforward along `f`.
    pub fn map<U: Ord + Clone, F: FnMut(&T) -> U>(&self, mut f: F) -> Dist<U> {
        Dist::from_weights(self.weights.iter().map(|(v, w)| (f(v), w.clone())))
    }

    /// Keeps the outcomes satisfying `pred`.
    pub fn filter<F: FnMut(&T) -> bool>(&self, mut pred: F) -> Dist<T> {
        Dist {
            weights: self
                .weights
                .iter()
                .filter(|(v, _)| pred(v))
                .map(|(v, w)| (v.clone(), w.clone()))
                .collect(),
        }
    }

    /// Multiplies every weight by `k`.
    pub fn scale(&self, k: &Rational) -> Dist<T> {
        if k.is_zero() {
            return Dist::empty();
        }
        Dist { weights: self.weights.iter().map(|(v, w)| (v.clone(), w * k)).collect() }
    }

    /// Pointwise sum of two measures.
    pub fn plus(&self, other: &Dist<T>) -> Dist<T> {
        let mut out = self.clone();
        for (v, w) in &other.weights {
            out.add_weight(v.clone(), w.clone());
        }
        out
    }

    pub fn mass(&self) -> Rational {
        self.weights.values().fold(Rational::zero(), |acc, w| acc + w)
    }

    pub fn support(&self) -> BTreeSet<T> {
        self.weights.keys().cloned().collect()
    }

    pub fn weight(&self, v: &T) -> Rational {
        self.weights.get(v).cloned().unwrap_or_else(Rational::zero)
    }

    /// True when every weight is positive and the total mass is at most one.
    pub fn is_subprob(&self) -> bool {
        self.weights.values().all(|w| *w > Rational::zero()) && self.mass() <= Rational::one()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&T, &Rational)> {
        self.weights.iter()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Canonical text `{outcome: num/den, ...}` using `show` for outcomes.
    pub fn render<F: FnMut(&T) -> String>(&self, mut show: F) -> String {
        let parts: Vec<String> = self
            .weights
            .iter()
            .map(|(v, w)| format!("{}: {}", show(v), fmt_rational(w)))
            .collect();
        format!("{{{}}}", parts.join(", "))
    }
}

/// Extensional equality of weight maps.
pub fn dist_eq<T: Ord + Clone>(a: &Dist<T>, b: &Dist<T>) -> bool {
    a == b
}

impl<T: Ord + Clone + fmt::Display> fmt::Display for Dist<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(|v| v.to_string()))
    }
}

impl<T: Ord + Clone + fmt::Debug> fmt::Debug for Dist<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(|v| format!("{v:?}")))
    }
}
