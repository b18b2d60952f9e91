//! Finite multisets (bags) with the usual algebra: sum, union (pointwise
//! max), truncated subtraction and inclusion.
//!
//! The multiplicity type is generic over any unsigned [`Count`]; `u64` is the
//! default, `num_bigint::BigUint` gives unbounded exact counts and small
//! widths such as `u8` are handy for exercising overflow.

use std::collections::btree_map::{self, BTreeMap};
use std::fmt;
use std::hash::Hash;

use num_bigint::BigUint;
use num_traits::{CheckedAdd, CheckedSub, FromPrimitive, ToPrimitive, Unsigned};
use thiserror::Error;

/// Natural-number multiplicities.
pub trait Count:
    Unsigned
    + CheckedAdd
    + CheckedSub
    + FromPrimitive
    + ToPrimitive
    + Clone
    + Ord
    + Hash
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
{
}

impl Count for u8 {}
impl Count for u16 {}
impl Count for u32 {}
impl Count for u64 {}
impl Count for u128 {}
impl Count for usize {}
impl Count for BigUint {}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MultisetError {
    #[error("multiplicity overflow for element {element}")]
    Overflow { element: String },
}

/// A finite multiset. Elements with multiplicity zero are never stored.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Multiset<T: Ord, C: Count = u64> {
    entries: BTreeMap<T, C>,
}

impl<T: Ord, C: Count> Default for Multiset<T, C> {
    fn default() -> Self {
        Self { entries: BTreeMap::new() }
    }
}

impl<T: Ord + fmt::Debug, C: Count> fmt::Debug for Multiset<T, C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.entries.iter()).finish()
    }
}

impl<T: Ord + Clone + fmt::Debug, C: Count> Multiset<T, C> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton(element: T) -> Self {
        let mut m = Self::new();
        m.entries.insert(element, C::one());
        m
    }

    /// Builds a multiset from `(element, count)` pairs. Zero counts are
    /// dropped; repeated elements accumulate.
    pub fn from_counts<I>(pairs: I) -> Result<Self, MultisetError>
    where
        I: IntoIterator<Item = (T, C)>,
    {
        let mut m = Self::new();
        for (element, n) in pairs {
            m.insert_n(element, n)?;
        }
        Ok(m)
    }

    /// Multiplicity of `element` (zero when absent).
    pub fn count(&self, element: &T) -> C {
        self.entries.get(element).cloned().unwrap_or_else(C::zero)
    }

    pub fn contains(&self, element: &T) -> bool {
        self.entries.contains_key(element)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of distinct elements.
    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    /// Total size, the sum of all multiplicities.
    pub fn size(&self) -> Result<C, MultisetError> {
        let mut total = C::zero();
        for (element, n) in &self.entries {
            total = total.checked_add(n).ok_or_else(|| overflow(element))?;
        }
        Ok(total)
    }

    pub fn insert(&mut self, element: T) -> Result<(), MultisetError> {
        self.insert_n(element, C::one())
    }

    pub fn insert_n(&mut self, element: T, n: C) -> Result<(), MultisetError> {
        if n.is_zero() {
            return Ok(());
        }
        match self.entries.entry(element) {
            btree_map::Entry::Vacant(v) => {
                v.insert(n);
            }
            btree_map::Entry::Occupied(mut o) => {
                let sum = o.get().checked_add(&n).ok_or_else(|| overflow(o.key()))?;
                *o.get_mut() = sum;
            }
        }
        Ok(())
    }

    /// Removes up to `n` copies; returns how many were actually removed.
    pub fn remove_n(&mut self, element: &T, n: C) -> C {
        let Some(have) = self.entries.get(element).cloned() else {
            return C::zero();
        };
        if n >= have {
            self.entries.remove(element);
            have
        } else {
            self.entries.insert(element.clone(), have - n.clone());
            n
        }
    }

    /// `(a + b)(s) = a(s) + b(s)`.
    pub fn sum(&self, other: &Self) -> Result<Self, MultisetError> {
        let mut out = self.clone();
        for (element, n) in &other.entries {
            out.insert_n(element.clone(), n.clone())?;
        }
        Ok(out)
    }

    /// `(a ∪ b)(s) = max(a(s), b(s))`.
    pub fn union(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (element, n) in &other.entries {
            match out.entries.get_mut(element) {
                Some(have) if *have < *n => *have = n.clone(),
                Some(_) => {}
                None => {
                    out.entries.insert(element.clone(), n.clone());
                }
            }
        }
        out
    }

    /// Truncated subtraction: `(a - b)(s) = max(a(s) - b(s), 0)`.
    pub fn subtract(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (element, n) in &other.entries {
            out.remove_n(element, n.clone());
        }
        out
    }

    /// Inclusion: `a(s) <= b(s)` for every `s`.
    pub fn is_subset(&self, other: &Self) -> bool {
        self.entries
            .iter()
            .all(|(element, n)| other.entries.get(element).is_some_and(|m| n <= m))
    }

    /// Distinct elements with their multiplicities, in element order.
    pub fn iter(&self) -> impl Iterator<Item = (&T, &C)> {
        self.entries.iter()
    }

    pub fn elements(&self) -> impl Iterator<Item = &T> {
        self.entries.keys()
    }

    /// Maps every element, merging multiplicities of collisions.
    pub fn map<U, F>(&self, mut f: F) -> Result<Multiset<U, C>, MultisetError>
    where
        U: Ord + Clone + fmt::Debug,
        F: FnMut(&T) -> U,
    {
        Multiset::from_counts(self.entries.iter().map(|(e, n)| (f(e), n.clone())))
    }
}

impl<T: Ord + Clone + fmt::Debug + fmt::Display, C: Count> Multiset<T, C> {
    /// `(element, count)` pairs ordered by the element's rendered form.
    /// This is the serialization order used in every file format.
    pub fn canonical_pairs(&self) -> Vec<(String, C)> {
        let mut pairs: Vec<(String, C)> =
            self.entries.iter().map(|(e, n)| (e.to_string(), n.clone())).collect();
        pairs.sort();
        pairs
    }
}

impl<T: Ord + fmt::Display, C: Count> fmt::Display for Multiset<T, C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut pairs: Vec<(String, &C)> =
            self.entries.iter().map(|(e, n)| (e.to_string(), n)).collect();
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        let parts: Vec<String> = pairs
            .into_iter()
            .map(|(e, n)| if n.is_one() { e } else { format!("{n}`{e}") })
            .collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

fn overflow<T: fmt::Debug>(element: &T) -> MultisetError {
    MultisetError::Overflow { element: format!("{element:?}") }
}

impl<T: Ord + Clone + fmt::Debug, C: Count> FromIterator<T> for Multiset<T, C> {
    /// Panics if a multiplicity overflows `C`; use [`Multiset::from_counts`]
    /// when that matters.
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        Self::from_counts(iter.into_iter().map(|e| (e, C::one())))
            .expect("multiplicity overflow")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ms(pairs: &[(&'static str, u64)]) -> Multiset<&'static str> {
        Multiset::from_counts(pairs.iter().copied()).unwrap()
    }

    #[test]
    fn sum_examples() {
        assert_eq!(ms(&[("x", 2), ("y", 1)]).sum(&ms(&[("x", 1)])).unwrap(), ms(&[("x", 3), ("y", 1)]));
        assert_eq!(ms(&[]).sum(&ms(&[])).unwrap(), ms(&[]));
        assert_eq!(ms(&[("x", 1)]).sum(&ms(&[("y", 1)])).unwrap(), ms(&[("x", 1), ("y", 1)]));
    }

    #[test]
    fn union_examples() {
        assert_eq!(ms(&[("x", 2)]).union(&ms(&[("x", 1), ("y", 3)])), ms(&[("x", 2), ("y", 3)]));
        let a = ms(&[("x", 4), ("q", 1)]);
        assert_eq!(a.union(&a), a);
        assert_eq!(ms(&[]).union(&ms(&[("z", 1)])), ms(&[("z", 1)]));
    }

    #[test]
    fn subtract_examples() {
        assert_eq!(ms(&[("x", 1)]).subtract(&ms(&[("x", 3)])), ms(&[]));
        assert_eq!(ms(&[("x", 3), ("y", 1)]).subtract(&ms(&[("x", 1)])), ms(&[("x", 2), ("y", 1)]));
        let a = ms(&[("a", 2)]);
        assert_eq!(a.subtract(&ms(&[])), a);
    }

    #[test]
    fn inclusion_examples() {
        assert!(ms(&[("x", 1)]).is_subset(&ms(&[("x", 2), ("y", 1)])));
        assert!(!ms(&[("x", 3)]).is_subset(&ms(&[("x", 2)])));
        assert!(ms(&[]).is_subset(&ms(&[("w", 9)])));
        assert!(ms(&[]).is_subset(&ms(&[])));
    }

    #[test]
    fn zero_counts_are_not_stored() {
        let m = Multiset::<_, u64>::from_counts([("a", 0), ("b", 2)]).unwrap();
        assert!(!m.contains(&"a"));
        assert_eq!(m.support_len(), 1);
        let mut m = m;
        assert_eq!(m.remove_n(&"b", 5), 2);
        assert!(m.is_empty());
        assert_eq!(m.size().unwrap(), 0);
    }

    #[test]
    fn overflow_is_reported() {
        let a = Multiset::<_, u8>::from_counts([("t", 200)]).unwrap();
        assert!(matches!(a.sum(&a), Err(MultisetError::Overflow { .. })));
        let b = Multiset::<_, u8>::from_counts([("t", 200), ("u", 100)]).unwrap();
        assert!(b.size().is_err());
    }

    #[test]
    fn big_counts_do_not_overflow() {
        let big = BigUint::from(u64::MAX);
        let a = Multiset::<_, BigUint>::from_counts([("t", big.clone())]).unwrap();
        let s = a.sum(&a).unwrap();
        assert_eq!(s.count(&"t"), big.clone() + big);
    }

    #[test]
    fn display_uses_backtick_multiplicity() {
        let m = ms(&[("b", 1), ("a", 3)]);
        assert_eq!(m.to_string(), "[3`a, b]");
    }
}
