//! Ordinals below epsilon-zero in Cantor normal form.
//!
//! Only what partition-goal bookkeeping needs: comparison, addition, the
//! `w^b` constructor, natural-number multiples of finite ordinals, and the
//! one-colour pigeonhole goals.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OrdinalError {
    #[error("zero is not a valid argument here")]
    Zero,
    #[error("arithmetic overflow")]
    Overflow,
    #[error("cannot parse ordinal {input:?}: {reason}")]
    Parse { input: String, reason: String },
}

/// An ordinal `w^e1*c1 + w^e2*c2 + ...` with `e1 > e2 > ...` and every
/// coefficient at least 1. The empty term list is zero.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Ordinal {
    terms: Vec<(Ordinal, u64)>,
}

impl Ordinal {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn finite(n: u64) -> Self {
        if n == 0 {
            Self::zero()
        } else {
            Self {
                terms: vec![(Self::zero(), n)],
            }
        }
    }

    pub fn omega() -> Self {
        Self::omega_pow(Self::finite(1))
    }

    /// `w^exponent`.
    pub fn omega_pow(exponent: Ordinal) -> Self {
        Self {
            terms: vec![(exponent, 1)],
        }
    }

    /// Builds from terms, rejecting non-canonical lists.
    pub fn from_terms(terms: Vec<(Ordinal, u64)>) -> Option<Self> {
        let canonical = terms.iter().all(|(_, c)| *c >= 1)
            && terms.windows(2).all(|w| w[0].0 > w[1].0);
        canonical.then_some(Self { terms })
    }

    pub fn terms(&self) -> &[(Ordinal, u64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_finite(&self) -> Option<u64> {
        match self.terms.as_slice() {
            [] => Some(0),
            [(e, c)] if e.is_zero() => Some(*c),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.as_finite().is_some()
    }

    /// True iff `self` is a power of omega. Zero is rejected.
    pub fn is_indecomposable(&self) -> Result<bool, OrdinalError> {
        if self.is_zero() {
            return Err(OrdinalError::Zero);
        }
        Ok(self.terms.len() == 1 && self.terms[0].1 == 1)
    }

    /// Ordinal sum: terms of `self` below the leading exponent of `other`
    /// are absorbed.
    pub fn add(&self, other: &Ordinal) -> Ordinal {
        let Some((lead, lead_coef)) = other.terms.first() else {
            return self.clone();
        };
        let mut terms: Vec<(Ordinal, u64)> = Vec::new();
        let mut carry = 0;
        for (e, c) in &self.terms {
            match e.cmp(lead) {
                Ordering::Greater => terms.push((e.clone(), *c)),
                Ordering::Equal => carry = *c,
                Ordering::Less => break,
            }
        }
        terms.push((lead.clone(), lead_coef + carry));
        terms.extend(other.terms[1..].iter().cloned());
        Ordinal { terms }
    }

    /// `self - 1` for a finite successor, used by the pigeonhole formula.
    fn finite_pred(&self) -> Option<u64> {
        self.as_finite().and_then(|n| n.checked_sub(1))
    }
}

impl Ord for Ordinal {
    fn cmp(&self, other: &Self) -> Ordering {
        for ((ea, ca), (eb, cb)) in self.terms.iter().zip(other.terms.iter()) {
            match ea.cmp(eb).then(ca.cmp(cb)) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        self.terms.len().cmp(&other.terms.len())
    }
}

impl PartialOrd for Ordinal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<u64> for Ordinal {
    fn from(n: u64) -> Self {
        Self::finite(n)
    }
}

/// A goal `rho` with `rho -> (xi)^1_m`: the least one, `(xi-1)*m + 1`, for
/// finite `xi`, and `w^xi` otherwise (sufficient, not least).
pub fn pigeonhole_goal(xi: &Ordinal, m: u64) -> Result<Ordinal, OrdinalError> {
    if xi.is_zero() || m == 0 {
        return Err(OrdinalError::Zero);
    }
    match xi.finite_pred() {
        Some(p) => p
            .checked_mul(m)
            .and_then(|v| v.checked_add(1))
            .map(Ordinal::finite)
            .ok_or(OrdinalError::Overflow),
        None => Ok(Ordinal::omega_pow(xi.clone())),
    }
}

/// Whether every map `0..rho -> 0..m` has a fiber of size at least `xi`,
/// by the counting criterion `rho > (xi-1)*m`.
pub fn verify_pigeonhole_finite(rho: u64, xi: u64, m: u64) -> bool {
    u128::from(rho) > u128::from(xi.saturating_sub(1)) * u128::from(m)
}

/// The same question answered by enumerating every map `0..rho -> 0..m`.
/// Only feasible for tiny arguments (`m^rho` maps).
pub fn verify_pigeonhole_exhaustive(rho: u64, xi: u64, m: u64) -> bool {
    if xi == 0 {
        return true;
    }
    if m == 0 {
        // No maps exist when rho > 0, so the claim holds vacuously; for
        // rho = 0 the empty map has no fibers.
        return rho > 0;
    }
    let rho = rho as usize;
    let mut digits = vec![0u64; rho];
    let mut counts = vec![0u64; m as usize];
    counts[0] = rho as u64;
    loop {
        if counts.iter().all(|&c| c < xi) {
            return false;
        }
        // Next map in base m, keeping the fiber sizes current.
        let mut i = 0;
        loop {
            if i == rho {
                return true;
            }
            counts[digits[i] as usize] -= 1;
            digits[i] += 1;
            if digits[i] < m {
                counts[digits[i] as usize] += 1;
                break;
            }
            digits[i] = 0;
            counts[0] += 1;
            i += 1;
        }
    }
}

impl fmt::Display for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if e.is_zero() {
                write!(f, "{c}")?;
                continue;
            }
            if e.as_finite() == Some(1) {
                write!(f, "w")?;
            } else if e.is_finite() || *e == Ordinal::omega() {
                write!(f, "w^{e}")?;
            } else {
                write!(f, "w^({e})")?;
            }
            if *c != 1 {
                write!(f, "*{c}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Ordinal({self})")
    }
}

impl FromStr for Ordinal {
    type Err = OrdinalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = Parser {
            input: s,
            chars: s.chars().filter(|c| !c.is_whitespace()).collect(),
            pos: 0,
        };
        let v = p.sum()?;
        if p.pos != p.chars.len() {
            return Err(p.error("trailing input"));
        }
        Ok(v)
    }
}

struct Parser<'a> {
    input: &'a str,
    chars: Vec<char>,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, reason: &str) -> OrdinalError {
        OrdinalError::Parse {
            input: self.input.to_string(),
            reason: format!("{reason} at offset {}", self.pos),
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    // sum := term ('+' term)*
    fn sum(&mut self) -> Result<Ordinal, OrdinalError> {
        let mut acc = self.term()?;
        while self.peek() == Some('+') {
            self.pos += 1;
            let t = self.term()?;
            acc = acc.add(&t);
        }
        Ok(acc)
    }

    // term := int | 'w' ('^' atom)? ('*' int)?
    fn term(&mut self) -> Result<Ordinal, OrdinalError> {
        match self.peek() {
            Some(c) if c.is_ascii_digit() => Ok(Ordinal::finite(self.int()?)),
            Some('w') | Some('ω') => {
                self.pos += 1;
                let exponent = if self.peek() == Some('^') {
                    self.pos += 1;
                    self.atom()?
                } else {
                    Ordinal::finite(1)
                };
                let coef = if self.peek() == Some('*') {
                    self.pos += 1;
                    self.int()?
                } else {
                    1
                };
                if coef == 0 {
                    return Ok(Ordinal::zero());
                }
                Ok(Ordinal {
                    terms: vec![(exponent, coef)],
                })
            }
            _ => Err(self.error("expected a number or 'w'")),
        }
    }

    // atom := int | 'w' | '(' sum ')'
    fn atom(&mut self) -> Result<Ordinal, OrdinalError> {
        match self.peek() {
            Some(c) if c.is_ascii_digit() => Ok(Ordinal::finite(self.int()?)),
            Some('w') | Some('ω') => {
                self.pos += 1;
                Ok(Ordinal::omega())
            }
            Some('(') => {
                self.pos += 1;
                let v = self.sum()?;
                if self.peek() != Some(')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.error("expected exponent")),
        }
    }

    fn int(&mut self) -> Result<u64, OrdinalError> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected digits"));
        }
        let digits: String = self.chars[start..self.pos].iter().collect();
        digits.parse().map_err(|_| self.error("integer too large"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn o(s: &str) -> Ordinal {
        s.parse().unwrap()
    }

    /// Evaluates the ordinal with omega replaced by `base`, hereditarily.
    /// Order preserving whenever `base` exceeds every coefficient and every
    /// finite exponent that appears.
    fn eval_at(a: &Ordinal, base: u128) -> u128 {
        a.terms()
            .iter()
            .map(|(e, c)| u128::from(*c) * base.pow(eval_at(e, base) as u32))
            .sum()
    }

    /// Well orders below w^3 as sequences of blocks (0: a point, 1: a copy
    /// of w, 2: a copy of w^2). Concatenation followed by absorption of any
    /// block sitting right before a strictly larger block computes the order
    /// type of the sum.
    fn blocks(a: &Ordinal) -> Vec<u8> {
        let mut v = Vec::new();
        for (e, c) in a.terms() {
            let k = e.as_finite().unwrap() as u8;
            v.extend(std::iter::repeat_n(k, *c as usize));
        }
        v
    }

    fn concat_type(a: &[u8], b: &[u8]) -> Vec<u8> {
        let mut seq: Vec<u8> = a.iter().chain(b.iter()).copied().collect();
        let mut i = 0;
        while i + 1 < seq.len() {
            if seq[i] < seq[i + 1] {
                seq.remove(i);
                i = i.saturating_sub(1);
            } else {
                i += 1;
            }
        }
        seq
    }

    #[test]
    fn compare_examples() {
        assert_eq!(o("5").cmp(&o("w")), Ordering::Less);
        assert_eq!(o("w*2 + 1").cmp(&o("w*2")), Ordering::Greater);
        assert_eq!(o("w^w").cmp(&o("w^3*9")), Ordering::Greater);
        // independent check: w^w -> 10^10, w^3*9 -> 9000
        assert!(eval_at(&o("w^w"), 10) > eval_at(&o("w^3*9"), 10));
    }

    #[test]
    fn add_examples() {
        let a = o("w^2 + w");
        assert_eq!(Ordinal::zero().add(&a), a);
        assert_eq!(o("1").add(&o("w")), o("w"));
        assert_eq!(a.add(&o("w*3")), o("w^2 + w*4"));
        assert_eq!(
            concat_type(&blocks(&a), &blocks(&o("w*3"))),
            blocks(&o("w^2 + w*4"))
        );
    }

    #[test]
    fn indecomposable_examples() {
        assert!(o("w").is_indecomposable().unwrap());
        assert!(!o("w+1").is_indecomposable().unwrap());
        assert!(o("1").is_indecomposable().unwrap());
        assert_eq!(Ordinal::zero().is_indecomposable(), Err(OrdinalError::Zero));
    }

    #[test]
    fn indecomposable_iff_no_smaller_summands_finite() {
        for a in 1..=12u64 {
            let decomposes =
                (0..a).any(|b| (0..a).any(|c| Ordinal::finite(b).add(&Ordinal::finite(c)) == Ordinal::finite(a)));
            assert_eq!(Ordinal::finite(a).is_indecomposable().unwrap(), !decomposes, "a={a}");
        }
    }

    #[test]
    fn single_terms_absorb_smaller_summands() {
        // b + w^e = w^e for every b < w^e, sampled over small b.
        for e in ["1", "2", "w", "w+1"] {
            let target = Ordinal::omega_pow(o(e));
            for b in ["0", "1", "7", "w", "w*5+3", "w^2+1", "w^w*2"] {
                let b = o(b);
                if b < target {
                    assert_eq!(b.add(&target), target);
                    assert!(target.add(&b) >= target);
                }
            }
        }
    }

    #[test]
    fn pigeonhole_goal_examples() {
        assert_eq!(pigeonhole_goal(&o("3"), 2).unwrap(), o("5"));
        assert_eq!(pigeonhole_goal(&o("1"), 7).unwrap(), o("1"));
        assert_eq!(pigeonhole_goal(&o("w"), 3).unwrap(), o("w^w"));
        assert_eq!(pigeonhole_goal(&o("0"), 3), Err(OrdinalError::Zero));
        assert_eq!(pigeonhole_goal(&o("2"), 0), Err(OrdinalError::Zero));
    }

    #[test]
    fn pigeonhole_verify_examples() {
        assert!(verify_pigeonhole_finite(5, 3, 2));
        assert!(!verify_pigeonhole_finite(4, 3, 2));
        assert!(!verify_pigeonhole_exhaustive(4, 3, 2));
        assert!(verify_pigeonhole_finite(1, 1, 9));
    }

    #[test]
    fn counting_matches_exhaustive() {
        for rho in 0..=7 {
            for xi in 1..=5 {
                for m in 1..=4 {
                    assert_eq!(
                        verify_pigeonhole_finite(rho, xi, m),
                        verify_pigeonhole_exhaustive(rho, xi, m),
                        "rho={rho} xi={xi} m={m}"
                    );
                }
            }
        }
    }

    #[test]
    fn goal_is_minimal() {
        for xi in 1..=4u64 {
            for m in 1..=4u64 {
                let rho = pigeonhole_goal(&Ordinal::finite(xi), m).unwrap().as_finite().unwrap();
                assert!(rho >= xi);
                assert!(verify_pigeonhole_exhaustive(rho, xi, m));
                if rho > 1 {
                    assert!(!verify_pigeonhole_exhaustive(rho - 1, xi, m));
                }
            }
        }
    }

    #[test]
    fn text_round_trip() {
        for s in ["0", "5", "w", "w^2 + w*4", "w^w", "w^(w + 1)*3 + w^2 + 7", "w^(w^w)"] {
            assert_eq!(o(s).to_string(), s);
        }
        assert!("w^".parse::<Ordinal>().is_err());
        assert!("w*".parse::<Ordinal>().is_err());
        assert!("3w".parse::<Ordinal>().is_err());
        // non-canonical input is normalized
        assert_eq!(o("1 + w + w^2"), o("w^2"));
    }

    /// Canonical ordinals below w^(w+2) with small coefficients.
    fn arb_ordinal() -> impl Strategy<Value = Ordinal> {
        let exps = prop::sample::select(vec![
            o("0"), o("1"), o("2"), o("3"), o("w"), o("w+1"),
        ]);
        prop::collection::vec((exps, 1u64..4), 0..4).prop_map(|mut ts| {
            ts.sort_by(|a, b| b.0.cmp(&a.0));
            ts.dedup_by(|a, b| a.0 == b.0);
            Ordinal::from_terms(ts).unwrap()
        })
    }

    proptest! {
        #[test]
        fn add_is_associative(a in arb_ordinal(), b in arb_ordinal(), c in arb_ordinal()) {
            prop_assert_eq!(a.add(&b).add(&c), a.add(&b.add(&c)));
        }

        #[test]
        fn add_never_decreases(a in arb_ordinal(), b in arb_ordinal()) {
            let s = a.add(&b);
            prop_assert!(s >= a);
            prop_assert_eq!(s == a, b.is_zero());
        }

        #[test]
        fn compare_agrees_with_evaluation(a in arb_ordinal(), b in arb_ordinal()) {
            // base 20 exceeds all coefficients (< 12 after sums) and exponents.
            prop_assert_eq!(a.cmp(&b), eval_at(&a, 20).cmp(&eval_at(&b, 20)));
        }

        #[test]
        fn display_parses_back(a in arb_ordinal()) {
            prop_assert_eq!(a.to_string().parse::<Ordinal>().unwrap(), a);
        }
    }
}
