//! Reflexive, symmetric similarity operators.
//!
//! Operators declare whether they are transitive and whether the domain holds
//! an infinite family of mutually dissimilar values. The classifier and the
//! chase branch on these flags; [`flag_counterexample`] checks them on samples.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::{Error, Result};

pub trait Similarity: fmt::Debug + Send + Sync {
    fn name(&self) -> String;
    fn similar(&self, a: &str, b: &str) -> bool;
    fn is_transitive(&self) -> bool;
    fn has_infinite_dissimilar_family(&self) -> bool;
    /// `count` values that are pairwise dissimilar and dissimilar to every
    /// value of `avoid`. `prefix` names generated constants where the
    /// operator allows free naming.
    fn fresh_values(&self, avoid: &[&str], count: usize, prefix: &str) -> Result<Vec<String>>;
}

/// Plain equality.
#[derive(Debug, Clone, Copy)]
pub struct Equality;

impl Similarity for Equality {
    fn name(&self) -> String {
        "eq".to_owned()
    }
    fn similar(&self, a: &str, b: &str) -> bool {
        a == b
    }
    fn is_transitive(&self) -> bool {
        true
    }
    fn has_infinite_dissimilar_family(&self) -> bool {
        true
    }
    fn fresh_values(&self, avoid: &[&str], count: usize, prefix: &str) -> Result<Vec<String>> {
        let avoid: BTreeSet<&str> = avoid.iter().copied().collect();
        let mut out = Vec::with_capacity(count);
        let mut i = 0usize;
        while out.len() < count {
            let v = format!("{prefix}{i}");
            if !avoid.contains(v.as_str()) {
                out.push(v);
            }
            i += 1;
        }
        Ok(out)
    }
}

/// Alphabet of first characters for [`FirstChar`].
pub const PREFIX_ALPHABET: &str = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";

/// Strings are similar iff they start with the same character. The domain is
/// strings over [`PREFIX_ALPHABET`], so only 62 dissimilar classes exist.
#[derive(Debug, Clone, Copy)]
pub struct FirstChar;

impl Similarity for FirstChar {
    fn name(&self) -> String {
        "prefix1".to_owned()
    }
    fn similar(&self, a: &str, b: &str) -> bool {
        a.chars().next() == b.chars().next()
    }
    fn is_transitive(&self) -> bool {
        true
    }
    fn has_infinite_dissimilar_family(&self) -> bool {
        false
    }
    fn fresh_values(&self, avoid: &[&str], count: usize, _prefix: &str) -> Result<Vec<String>> {
        let used: BTreeSet<Option<char>> = avoid.iter().map(|v| v.chars().next()).collect();
        let out: Vec<String> = PREFIX_ALPHABET
            .chars()
            .filter(|c| !used.contains(&Some(*c)))
            .take(count)
            .map(String::from)
            .collect();
        if out.len() < count {
            return Err(Error::CapacityExhausted(self.name()));
        }
        Ok(out)
    }
}

/// Bit strings are similar iff they are equal or hold a 1 at a common index.
/// Equality is included so that the all-zeros string stays reflexive.
#[derive(Debug, Clone, Copy)]
pub struct BitShare;

impl BitShare {
    fn ones(v: &str) -> impl Iterator<Item = usize> + '_ {
        v.bytes()
            .enumerate()
            .filter(|(_, b)| *b == b'1')
            .map(|(i, _)| i)
    }
}

/// Unit bit string of length `len` with its 1 at index `at`.
pub fn unit_bits(len: usize, at: usize) -> String {
    (0..len).map(|i| if i == at { '1' } else { '0' }).collect()
}

impl Similarity for BitShare {
    fn name(&self) -> String {
        "bitshare".to_owned()
    }
    fn similar(&self, a: &str, b: &str) -> bool {
        a == b
            || a
                .bytes()
                .zip(b.bytes())
                .any(|(x, y)| x == b'1' && y == b'1')
    }
    fn is_transitive(&self) -> bool {
        false
    }
    fn has_infinite_dissimilar_family(&self) -> bool {
        true
    }
    fn fresh_values(&self, avoid: &[&str], count: usize, _prefix: &str) -> Result<Vec<String>> {
        let width = avoid.iter().map(|v| v.len()).max().unwrap_or(0);
        let mut taken = alloc::vec![false; width];
        for v in avoid {
            for i in Self::ones(v) {
                taken[i] = true;
            }
        }
        let mut out: Vec<String> = (0..width)
            .filter(|i| !taken[*i])
            .take(count)
            .map(|i| unit_bits(width, i))
            .collect();
        let zeros = "0".repeat(width);
        if out.len() < count && width > 0 && !avoid.contains(&zeros.as_str()) {
            out.push(zeros);
        }
        if out.len() < count {
            // Widen: indices past every avoided string are free.
            let extra = count - out.len();
            let len = width + extra;
            out.extend((width..len).map(|i| unit_bits(len, i)));
        }
        Ok(out)
    }
}

/// Edit distance at most `k`.
#[derive(Debug, Clone, Copy)]
pub struct Levenshtein(pub usize);

/// Classic dynamic-programming edit distance over chars.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = alloc::vec![0; b.len() + 1];
    for (i, ca) in a.chars().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != *cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

impl Similarity for Levenshtein {
    fn name(&self) -> String {
        format!("lev{}", self.0)
    }
    fn similar(&self, a: &str, b: &str) -> bool {
        edit_distance(a, b) <= self.0
    }
    fn is_transitive(&self) -> bool {
        self.0 == 0
    }
    fn has_infinite_dissimilar_family(&self) -> bool {
        true
    }
    fn fresh_values(&self, avoid: &[&str], count: usize, _prefix: &str) -> Result<Vec<String>> {
        // Runs of distinct private-use characters, longer than anything in
        // `avoid` by more than k: every pair is more than k edits apart.
        let longest = avoid.iter().map(|v| v.chars().count()).max().unwrap_or(0);
        let len = longest + self.0 + 1;
        (0..count)
            .map(|i| {
                char::from_u32(0xE000 + i as u32)
                    .filter(|_| i < 0x1900)
                    .map(|c| core::iter::repeat_n(c, len).collect())
                    .ok_or_else(|| Error::CapacityExhausted(self.name()))
            })
            .collect()
    }
}

/// Every pair of values is similar. The domain is one similarity class that
/// is already inhabited, so no value is fresh.
#[derive(Debug, Clone, Copy)]
pub struct Total;

impl Similarity for Total {
    fn name(&self) -> String {
        "all".to_owned()
    }
    fn similar(&self, _a: &str, _b: &str) -> bool {
        true
    }
    fn is_transitive(&self) -> bool {
        true
    }
    fn has_infinite_dissimilar_family(&self) -> bool {
        false
    }
    fn fresh_values(&self, _avoid: &[&str], count: usize, _prefix: &str) -> Result<Vec<String>> {
        if count == 0 {
            Ok(Vec::new())
        } else {
            Err(Error::CapacityExhausted(self.name()))
        }
    }
}

/// Named operators. `levK` names are resolved on demand for any K.
#[derive(Clone, Debug)]
pub struct Registry {
    ops: Vec<Arc<dyn Similarity>>,
}

impl Default for Registry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl Registry {
    pub fn builtin() -> Self {
        Registry {
            ops: alloc::vec![
                Arc::new(Equality) as Arc<dyn Similarity>,
                Arc::new(FirstChar),
                Arc::new(BitShare),
                Arc::new(Total),
            ],
        }
    }

    /// Adds or replaces an operator under its own name.
    pub fn register(&mut self, op: Arc<dyn Similarity>) {
        let name = op.name();
        self.ops.retain(|o| o.name() != name);
        self.ops.push(op);
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn Similarity>> {
        if let Some(op) = self.ops.iter().find(|o| o.name() == name) {
            return Some(op.clone());
        }
        let k = name.strip_prefix("lev")?;
        if k.is_empty() || !k.bytes().all(|b| b.is_ascii_digit()) || (k.len() > 1 && k.starts_with('0')) {
            return None;
        }
        Some(Arc::new(Levenshtein(k.parse().ok()?)))
    }

    pub fn names(&self) -> Vec<String> {
        self.ops.iter().map(|o| o.name()).collect()
    }
}

/// A violation of an operator's declared properties.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FlagViolation {
    Reflexivity(String),
    Symmetry(String, String),
    Transitivity(String, String, String),
}

/// Exhaustively checks reflexivity, symmetry and, when declared,
/// transitivity over `samples`.
pub fn flag_counterexample(op: &dyn Similarity, samples: &[String]) -> Option<FlagViolation> {
    for u in samples {
        if !op.similar(u, u) {
            return Some(FlagViolation::Reflexivity(u.clone()));
        }
    }
    for u in samples {
        for v in samples {
            if op.similar(u, v) != op.similar(v, u) {
                return Some(FlagViolation::Symmetry(u.clone(), v.clone()));
            }
        }
    }
    if op.is_transitive() {
        for u in samples {
            for v in samples.iter().filter(|v| op.similar(u, v)) {
                for w in samples.iter().filter(|w| op.similar(v, w)) {
                    if !op.similar(u, w) {
                        return Some(FlagViolation::Transitivity(u.clone(), v.clone(), w.clone()));
                    }
                }
            }
        }
    }
    None
}

/// Whether `values` are pairwise dissimilar and dissimilar to all of `avoid`.
pub fn mutually_dissimilar(op: &dyn Similarity, values: &[String], avoid: &[&str]) -> bool {
    values.iter().enumerate().all(|(i, u)| {
        values[i + 1..].iter().all(|v| !op.similar(u, v)) && avoid.iter().all(|a| !op.similar(u, a))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn bit_strings(len: usize) -> Vec<String> {
        (0..1usize << len)
            .map(|x| (0..len).map(|i| if x >> (len - 1 - i) & 1 == 1 { '1' } else { '0' }).collect())
            .collect()
    }

    fn words() -> Vec<String> {
        ["", "a", "b", "ab", "ba", "abc", "abd", "bcd", "xyz", "aa", "a1", "Z9", "zz"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    #[test]
    fn bitshare_examples() {
        assert!(BitShare.similar("011", "010"));
        assert!(!BitShare.similar("010", "100"));
        assert!(BitShare.similar("110", "011"));
        assert!(BitShare.similar("011", "001"));
        assert!(!BitShare.similar("110", "001"));
    }

    #[test]
    fn bitshare_non_transitivity_found_by_scan() {
        let s = bit_strings(3);
        let mut witness = None;
        'outer: for u in &s {
            for v in &s {
                for w in &s {
                    if BitShare.similar(u, v) && BitShare.similar(v, w) && !BitShare.similar(u, w) {
                        witness = Some((u.clone(), v.clone(), w.clone()));
                        break 'outer;
                    }
                }
            }
        }
        assert!(witness.is_some());
    }

    #[test]
    fn declared_flags_hold_on_samples() {
        let reg = Registry::builtin();
        let mut samples = words();
        samples.extend(bit_strings(3));
        for name in ["eq", "prefix1", "bitshare", "all", "lev1", "lev2", "lev0"] {
            let op = reg.get(name).unwrap();
            assert_eq!(flag_counterexample(op.as_ref(), &samples), None, "{name}");
        }
    }

    #[test]
    fn fresh_eq_avoids_values() {
        let f = Equality.fresh_values(&["a", "b", "_f0"], 2, "_f").unwrap();
        assert_eq!(f, ["_f1", "_f2"]);
        assert!(mutually_dissimilar(&Equality, &f, &["a", "b", "_f0"]));
    }

    #[test]
    fn fresh_bitshare_unit_vectors() {
        for n in 1..6 {
            let f = BitShare.fresh_values(&[], n, "").unwrap();
            let expected: Vec<String> = (0..n).map(|i| unit_bits(n, i)).collect();
            assert_eq!(f, expected);
            assert!(mutually_dissimilar(&BitShare, &f, &[]));
        }
        let f = BitShare.fresh_values(&["100", "010"], 3, "").unwrap();
        assert!(mutually_dissimilar(&BitShare, &f, &["100", "010"]));
        assert_eq!(f[0], "001");
        assert_eq!(f[1], "000");
    }

    #[test]
    fn fresh_capacity() {
        assert_eq!(Total.fresh_values(&[], 1, ""), Err(Error::CapacityExhausted("all".into())));
        let all: Vec<String> = PREFIX_ALPHABET.chars().map(String::from).collect();
        let refs: Vec<&str> = all.iter().map(|s| s.as_str()).collect();
        assert!(FirstChar.fresh_values(&refs[1..], 1, "").is_ok());
        assert!(FirstChar.fresh_values(&refs, 1, "").is_err());
    }

    #[test]
    fn fresh_lev_is_far() {
        let avoid = ["abc", "hello"];
        let f = Levenshtein(2).fresh_values(&avoid, 3, "").unwrap();
        assert!(mutually_dissimilar(&Levenshtein(2), &f, &avoid));
    }

    #[test]
    fn edit_distance_basics() {
        assert_eq!(edit_distance("kitten", "sitting"), 3);
        assert_eq!(edit_distance("", "abc"), 3);
        assert_eq!(edit_distance("abc", "abc"), 0);
    }

    #[test]
    fn registry_lev_names() {
        let reg = Registry::builtin();
        assert_eq!(reg.get("lev3").unwrap().name(), "lev3");
        assert!(reg.get("lev").is_none());
        assert!(reg.get("lev03").is_none());
        assert!(reg.get("nope").is_none());
    }
}
