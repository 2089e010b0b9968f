//! Commutative semirings with exact carriers.
//!
//! A [`Semiring`] is a runtime descriptor; [`Weight`] values are plain
//! scalars whose meaning depends on the descriptor they are used with.
//! Tropical and arctic values use `None` for their respective infinity.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SemiringError {
    #[error("weight {weight} is not an element of {semiring}")]
    NotInCarrier { weight: String, semiring: Semiring },
    #[error("invalid weight literal `{literal}` for {semiring}")]
    BadLiteral { literal: String, semiring: Semiring },
    #[error("unknown semiring `{0}`")]
    UnknownSemiring(String),
    #[error("modulus must be at least 2, got {0}")]
    BadModulus(u64),
    #[error("{0} is not zero-sum free")]
    NotZeroSumFree(Semiring),
    #[error("{0} is not zero-divisor free")]
    NotZeroDivisorFree(Semiring),
    #[error("homomorphism law violated: {0}")]
    HomViolation(String),
}

/// Descriptor of one of the shipped commutative semirings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Semiring {
    /// `({0,1}, or, and, 0, 1)`
    Boolean,
    /// `(N, +, *, 0, 1)` with arbitrary precision.
    Natural,
    /// `(N u {inf}, min, +, inf, 0)`
    Tropical,
    /// `(N u {-inf}, max, +, -inf, 0)`
    Arctic,
    /// Integers modulo `m`, `m >= 2`.
    ZMod(u64),
}

/// An element of some [`Semiring`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Weight {
    Bool(bool),
    Nat(BigUint),
    /// `None` is `inf`.
    Tropical(Option<u64>),
    /// `None` is `-inf`.
    Arctic(Option<u64>),
    ZMod(u64),
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weight::Bool(b) => write!(f, "{}", u8::from(*b)),
            Weight::Nat(n) => write!(f, "{n}"),
            Weight::Tropical(None) => f.write_str("inf"),
            Weight::Arctic(None) => f.write_str("-inf"),
            Weight::Tropical(Some(v)) | Weight::Arctic(Some(v)) | Weight::ZMod(v) => {
                write!(f, "{v}")
            }
        }
    }
}

impl fmt::Display for Semiring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Semiring::Boolean => f.write_str("boolean"),
            Semiring::Natural => f.write_str("nat"),
            Semiring::Tropical => f.write_str("tropical"),
            Semiring::Arctic => f.write_str("arctic"),
            Semiring::ZMod(m) => write!(f, "zmod {m}"),
        }
    }
}

/// Structural flags of a semiring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SemiringFlags {
    pub zero_sum_free: bool,
    pub zero_divisor_free: bool,
    pub finite: bool,
}

fn is_prime(m: u64) -> bool {
    m >= 2 && (2..).take_while(|d| d * d <= m).all(|d| !m.is_multiple_of(d))
}

impl Semiring {
    pub fn zmod(m: u64) -> Result<Self, SemiringError> {
        if m < 2 {
            return Err(SemiringError::BadModulus(m));
        }
        Ok(Semiring::ZMod(m))
    }

    /// Parses `boolean`, `nat`, `tropical`, `arctic` or `zmod <m>`.
    pub fn parse(text: &str) -> Result<Self, SemiringError> {
        let mut words = text.split_whitespace();
        let head = words.next().unwrap_or("");
        let sr = match head {
            "boolean" | "bool" => Semiring::Boolean,
            "nat" | "natural" => Semiring::Natural,
            "tropical" => Semiring::Tropical,
            "arctic" => Semiring::Arctic,
            "zmod" => {
                let m = words
                    .next()
                    .and_then(|w| w.parse::<u64>().ok())
                    .ok_or_else(|| SemiringError::UnknownSemiring(text.to_string()))?;
                Semiring::zmod(m)?
            }
            _ => return Err(SemiringError::UnknownSemiring(text.to_string())),
        };
        if words.next().is_some() {
            return Err(SemiringError::UnknownSemiring(text.to_string()));
        }
        Ok(sr)
    }

    pub fn flags(&self) -> SemiringFlags {
        match *self {
            Semiring::Boolean => SemiringFlags {
                zero_sum_free: true,
                zero_divisor_free: true,
                finite: true,
            },
            Semiring::Natural | Semiring::Tropical | Semiring::Arctic => SemiringFlags {
                zero_sum_free: true,
                zero_divisor_free: true,
                finite: false,
            },
            Semiring::ZMod(m) => SemiringFlags {
                zero_sum_free: false,
                zero_divisor_free: is_prime(m),
                finite: true,
            },
        }
    }

    pub fn zero(&self) -> Weight {
        match *self {
            Semiring::Boolean => Weight::Bool(false),
            Semiring::Natural => Weight::Nat(BigUint::zero()),
            Semiring::Tropical => Weight::Tropical(None),
            Semiring::Arctic => Weight::Arctic(None),
            Semiring::ZMod(_) => Weight::ZMod(0),
        }
    }

    pub fn one(&self) -> Weight {
        match *self {
            Semiring::Boolean => Weight::Bool(true),
            Semiring::Natural => Weight::Nat(BigUint::one()),
            Semiring::Tropical => Weight::Tropical(Some(0)),
            Semiring::Arctic => Weight::Arctic(Some(0)),
            Semiring::ZMod(_) => Weight::ZMod(1),
        }
    }

    pub fn is_zero(&self, w: &Weight) -> bool {
        *w == self.zero()
    }

    pub fn is_one(&self, w: &Weight) -> bool {
        *w == self.one()
    }

    pub fn contains(&self, w: &Weight) -> bool {
        match (self, w) {
            (Semiring::Boolean, Weight::Bool(_))
            | (Semiring::Natural, Weight::Nat(_))
            | (Semiring::Tropical, Weight::Tropical(_))
            | (Semiring::Arctic, Weight::Arctic(_)) => true,
            (Semiring::ZMod(m), Weight::ZMod(v)) => v < m,
            _ => false,
        }
    }

    fn check(&self, w: &Weight) -> Result<(), SemiringError> {
        if self.contains(w) {
            Ok(())
        } else {
            Err(SemiringError::NotInCarrier {
                weight: format!("{w:?}"),
                semiring: *self,
            })
        }
    }

    /// Checked semiring sum.
    pub fn sum(&self, a: &Weight, b: &Weight) -> Result<Weight, SemiringError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.plus(a, b))
    }

    /// Checked semiring product.
    pub fn product(&self, a: &Weight, b: &Weight) -> Result<Weight, SemiringError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.times(a, b))
    }

    /// Unchecked sum; both operands must lie in the carrier.
    pub fn plus(&self, a: &Weight, b: &Weight) -> Weight {
        debug_assert!(self.contains(a) && self.contains(b), "{a:?} + {b:?} in {self}");
        match (self, a, b) {
            (_, Weight::Bool(x), Weight::Bool(y)) => Weight::Bool(*x || *y),
            (_, Weight::Nat(x), Weight::Nat(y)) => Weight::Nat(x + y),
            (_, Weight::Tropical(x), Weight::Tropical(y)) => Weight::Tropical(match (x, y) {
                (None, v) | (v, None) => *v,
                (Some(x), Some(y)) => Some(*x.min(y)),
            }),
            (_, Weight::Arctic(x), Weight::Arctic(y)) => Weight::Arctic((*x).max(*y)),
            (Semiring::ZMod(m), Weight::ZMod(x), Weight::ZMod(y)) => Weight::ZMod((x + y) % m),
            _ => panic!("weights {a:?} and {b:?} are not elements of {self}"),
        }
    }

    /// Unchecked product; both operands must lie in the carrier.
    pub fn times(&self, a: &Weight, b: &Weight) -> Weight {
        debug_assert!(self.contains(a) && self.contains(b), "{a:?} * {b:?} in {self}");
        match (self, a, b) {
            (_, Weight::Bool(x), Weight::Bool(y)) => Weight::Bool(*x && *y),
            (_, Weight::Nat(x), Weight::Nat(y)) => Weight::Nat(x * y),
            (_, Weight::Tropical(x), Weight::Tropical(y)) => Weight::Tropical(match (x, y) {
                (Some(x), Some(y)) => Some(x.checked_add(*y).expect("tropical weight overflow")),
                _ => None,
            }),
            (_, Weight::Arctic(x), Weight::Arctic(y)) => Weight::Arctic(match (x, y) {
                (Some(x), Some(y)) => Some(x.checked_add(*y).expect("arctic weight overflow")),
                _ => None,
            }),
            (Semiring::ZMod(m), Weight::ZMod(x), Weight::ZMod(y)) => {
                Weight::ZMod(((*x as u128 * *y as u128) % *m as u128) as u64)
            }
            _ => panic!("weights {a:?} and {b:?} are not elements of {self}"),
        }
    }

    pub fn sum_all<'a>(&self, items: impl IntoIterator<Item = &'a Weight>) -> Weight {
        items.into_iter().fold(self.zero(), |acc, w| self.plus(&acc, w))
    }

    pub fn product_all<'a>(&self, items: impl IntoIterator<Item = &'a Weight>) -> Weight {
        items.into_iter().fold(self.one(), |acc, w| self.times(&acc, w))
    }

    pub fn pow(&self, a: &Weight, n: usize) -> Weight {
        (0..n).fold(self.one(), |acc, _| self.times(&acc, a))
    }

    /// Parses an element literal: `0|1`, decimal integers, `inf`, `-inf`.
    pub fn parse_weight(&self, literal: &str) -> Result<Weight, SemiringError> {
        let bad = || SemiringError::BadLiteral {
            literal: literal.to_string(),
            semiring: *self,
        };
        let lit = literal.trim();
        let w = match self {
            Semiring::Boolean => match lit {
                "0" => Weight::Bool(false),
                "1" => Weight::Bool(true),
                _ => return Err(bad()),
            },
            Semiring::Natural => Weight::Nat(lit.parse::<BigUint>().map_err(|_| bad())?),
            Semiring::Tropical => match lit {
                "inf" => Weight::Tropical(None),
                _ => Weight::Tropical(Some(lit.parse().map_err(|_| bad())?)),
            },
            Semiring::Arctic => match lit {
                "-inf" => Weight::Arctic(None),
                _ => Weight::Arctic(Some(lit.parse().map_err(|_| bad())?)),
            },
            Semiring::ZMod(_) => Weight::ZMod(lit.parse().map_err(|_| bad())?),
        };
        self.check(&w).map_err(|_| bad())?;
        Ok(w)
    }

    /// Builds the element denoted by a small natural number `n`
    /// (the `n`-fold sum of one for `nat`/`zmod`, the value itself for
    /// tropical/arctic, `n != 0` for boolean).
    pub fn from_u64(&self, n: u64) -> Weight {
        match *self {
            Semiring::Boolean => Weight::Bool(n != 0),
            Semiring::Natural => Weight::Nat(BigUint::from(n)),
            Semiring::Tropical => Weight::Tropical(Some(n)),
            Semiring::Arctic => Weight::Arctic(Some(n)),
            Semiring::ZMod(m) => Weight::ZMod(n % m),
        }
    }

    /// Sample elements used by law checks: the whole carrier when it is
    /// finite, a fixed spread of small values otherwise.
    pub fn samples(&self) -> Vec<Weight> {
        match *self {
            Semiring::Boolean => vec![Weight::Bool(false), Weight::Bool(true)],
            Semiring::ZMod(m) => (0..m).map(Weight::ZMod).collect(),
            Semiring::Natural => (0..6u64).chain([17, 1000]).map(|n| self.from_u64(n)).collect(),
            Semiring::Tropical | Semiring::Arctic => std::iter::once(self.zero())
                .chain((0..6u64).chain([17, 1000]).map(|n| self.from_u64(n)))
                .collect(),
        }
    }

    /// `(preperiod, period)` of the power sequence of `a`.
    ///
    /// Finite carriers are enumerated directly. For the infinite carriers
    /// the elements `0` and `1` get their honest profile and every other
    /// element (infinite multiplicative order) gets the declared cap `(0, 1)`,
    /// which is only sound because those carriers are zero-divisor free.
    pub fn power_profile(&self, a: &Weight) -> Result<(usize, usize), SemiringError> {
        self.check(a)?;
        if self.flags().finite {
            let mut seen: Vec<Weight> = Vec::new();
            let mut cur = self.one();
            loop {
                if let Some(k) = seen.iter().position(|w| *w == cur) {
                    return Ok((k, seen.len() - k));
                }
                seen.push(cur.clone());
                cur = self.times(&cur, a);
            }
        }
        if self.is_one(a) {
            Ok((0, 1))
        } else if self.is_zero(a) {
            Ok((1, 1))
        } else {
            Ok((0, 1))
        }
    }
}

/// A semiring homomorphism `source -> target`.
#[derive(Clone)]
pub struct SemiringHom {
    source: Semiring,
    target: Semiring,
    map: Arc<dyn Fn(&Weight) -> Weight + Send + Sync>,
}

impl fmt::Debug for SemiringHom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SemiringHom")
            .field("source", &self.source)
            .field("target", &self.target)
            .finish_non_exhaustive()
    }
}

impl SemiringHom {
    /// Wraps `map` after checking the homomorphism laws on the sample
    /// elements of `source`.
    pub fn new(
        source: Semiring,
        target: Semiring,
        map: impl Fn(&Weight) -> Weight + Send + Sync + 'static,
    ) -> Result<Self, SemiringError> {
        let hom = SemiringHom {
            source,
            target,
            map: Arc::new(map),
        };
        hom.verify()?;
        Ok(hom)
    }

    /// The identity on `s`.
    pub fn identity(s: Semiring) -> Self {
        SemiringHom {
            source: s,
            target: s,
            map: Arc::new(|w: &Weight| w.clone()),
        }
    }

    pub fn source(&self) -> Semiring {
        self.source
    }

    pub fn target(&self) -> Semiring {
        self.target
    }

    pub fn apply(&self, w: &Weight) -> Weight {
        (self.map)(w)
    }

    /// Checks `h(0)`, `h(1)`, additivity and multiplicativity on samples.
    pub fn verify(&self) -> Result<(), SemiringError> {
        let (s, t) = (self.source, self.target);
        let violation = |msg: String| Err(SemiringError::HomViolation(msg));
        if self.apply(&s.zero()) != t.zero() {
            return violation("h(0) != 0".into());
        }
        if self.apply(&s.one()) != t.one() {
            return violation("h(1) != 1".into());
        }
        let samples = s.samples();
        for a in &samples {
            if !t.contains(&self.apply(a)) {
                return violation(format!("h({a}) leaves the target carrier"));
            }
            for b in &samples {
                let (ha, hb) = (self.apply(a), self.apply(b));
                if self.apply(&s.plus(a, b)) != t.plus(&ha, &hb) {
                    return violation(format!("h({a} + {b}) != h({a}) + h({b})"));
                }
                if self.apply(&s.times(a, b)) != t.times(&ha, &hb) {
                    return violation(format!("h({a} * {b}) != h({a}) * h({b})"));
                }
            }
        }
        Ok(())
    }
}

/// The support homomorphism `s -> (s != 0)` into the Boolean semiring.
pub fn support_hom(d: Semiring) -> Result<SemiringHom, SemiringError> {
    let flags = d.flags();
    if !flags.zero_divisor_free {
        return Err(SemiringError::NotZeroDivisorFree(d));
    }
    if !flags.zero_sum_free {
        return Err(SemiringError::NotZeroSumFree(d));
    }
    SemiringHom::new(d, Semiring::Boolean, move |w| Weight::Bool(!d.is_zero(w)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all() -> Vec<Semiring> {
        vec![
            Semiring::Boolean,
            Semiring::Natural,
            Semiring::Tropical,
            Semiring::Arctic,
            Semiring::ZMod(4),
            Semiring::ZMod(5),
            Semiring::ZMod(6),
        ]
    }

    #[test]
    fn sum_examples() {
        let a = Semiring::Arctic;
        assert_eq!(a.sum(&a.from_u64(2), &a.from_u64(3)).unwrap(), a.from_u64(3));
        let z = Semiring::ZMod(4);
        assert_eq!(z.sum(&Weight::ZMod(3), &Weight::ZMod(3)).unwrap(), Weight::ZMod(2));
        for s in all() {
            for x in s.samples() {
                assert_eq!(s.sum(&s.zero(), &x).unwrap(), x);
            }
        }
    }

    #[test]
    fn product_examples() {
        let t = Semiring::Tropical;
        assert_eq!(t.product(&t.from_u64(2), &t.from_u64(3)).unwrap(), t.from_u64(5));
        let z = Semiring::ZMod(4);
        assert_eq!(z.product(&Weight::ZMod(2), &Weight::ZMod(2)).unwrap(), Weight::ZMod(0));
        for s in all() {
            for x in s.samples() {
                assert_eq!(s.product(&s.one(), &x).unwrap(), x);
                assert_eq!(s.product(&s.zero(), &x).unwrap(), s.zero());
            }
        }
    }

    #[test]
    fn mismatch_is_an_error() {
        let z = Semiring::ZMod(4);
        assert!(z.sum(&Weight::ZMod(7), &Weight::ZMod(1)).is_err());
        assert!(Semiring::Natural.product(&Weight::Bool(true), &Weight::Bool(true)).is_err());
    }

    #[test]
    fn laws_on_samples() {
        for s in all() {
            let xs = s.samples();
            for a in &xs {
                for b in &xs {
                    assert_eq!(s.plus(a, b), s.plus(b, a), "{s}");
                    assert_eq!(s.times(a, b), s.times(b, a), "{s}");
                    for c in &xs {
                        assert_eq!(s.plus(&s.plus(a, b), c), s.plus(a, &s.plus(b, c)), "{s}");
                        assert_eq!(s.times(&s.times(a, b), c), s.times(a, &s.times(b, c)), "{s}");
                        assert_eq!(
                            s.times(a, &s.plus(b, c)),
                            s.plus(&s.times(a, b), &s.times(a, c)),
                            "{s}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn flags_match_the_carrier() {
        for s in all() {
            let f = s.flags();
            let xs = s.samples();
            let nz: Vec<_> = xs.iter().filter(|x| !s.is_zero(x)).collect();
            let sum_free = nz.iter().all(|a| nz.iter().all(|b| !s.is_zero(&s.plus(a, b))));
            let div_free = nz.iter().all(|a| nz.iter().all(|b| !s.is_zero(&s.times(a, b))));
            assert_eq!(f.zero_sum_free, sum_free, "{s}");
            assert_eq!(f.zero_divisor_free, div_free, "{s}");
        }
    }

    #[test]
    fn support_hom_examples() {
        let h = support_hom(Semiring::Arctic).unwrap();
        assert_eq!(h.apply(&Weight::Arctic(None)), Weight::Bool(false));
        assert_eq!(h.apply(&Weight::Arctic(Some(5))), Weight::Bool(true));
        assert!(matches!(
            support_hom(Semiring::ZMod(4)),
            Err(SemiringError::NotZeroDivisorFree(_))
        ));
        assert!(matches!(
            support_hom(Semiring::ZMod(5)),
            Err(SemiringError::NotZeroSumFree(_))
        ));
        assert!(support_hom(Semiring::Natural).is_ok());
        assert!(support_hom(Semiring::Tropical).is_ok());
    }

    #[test]
    fn bad_hom_is_rejected() {
        // parity is a homomorphism N -> Z2 but not into B
        assert!(SemiringHom::new(Semiring::Natural, Semiring::ZMod(2), |w| match w {
            Weight::Nat(n) => Weight::ZMod((n % 2u32).try_into().unwrap()),
            _ => unreachable!(),
        })
        .is_ok());
        assert!(SemiringHom::new(Semiring::Natural, Semiring::Boolean, |w| match w {
            Weight::Nat(n) => Weight::Bool(n % 2u32 == BigUint::one()),
            _ => unreachable!(),
        })
        .is_err());
    }

    #[test]
    fn power_profiles() {
        let z = Semiring::ZMod(4);
        assert_eq!(z.power_profile(&Weight::ZMod(2)).unwrap(), (2, 1));
        assert_eq!(z.power_profile(&Weight::ZMod(3)).unwrap(), (0, 2));
        assert_eq!(Semiring::Boolean.power_profile(&Weight::Bool(true)).unwrap(), (0, 1));
        assert_eq!(Semiring::Natural.power_profile(&Semiring::Natural.from_u64(3)).unwrap(), (0, 1));
        for s in [Semiring::ZMod(4), Semiring::ZMod(6), Semiring::ZMod(8), Semiring::Boolean] {
            for a in s.samples() {
                let (k, p) = s.power_profile(&a).unwrap();
                assert_eq!(s.pow(&a, k + p), s.pow(&a, k), "{s} {a}");
                // minimality of the preperiod
                if k > 0 {
                    assert_ne!(s.pow(&a, k - 1 + p), s.pow(&a, k - 1), "{s} {a}");
                }
            }
        }
    }

    #[test]
    fn literals() {
        assert_eq!(Semiring::parse("zmod 4").unwrap(), Semiring::ZMod(4));
        assert_eq!(Semiring::parse("arctic").unwrap(), Semiring::Arctic);
        assert!(Semiring::parse("zmod 1").is_err());
        assert!(Semiring::parse("reals").is_err());
        let t = Semiring::Tropical;
        assert_eq!(t.parse_weight("inf").unwrap(), t.zero());
        assert_eq!(Semiring::Arctic.parse_weight("-inf").unwrap(), Semiring::Arctic.zero());
        assert!(Semiring::ZMod(4).parse_weight("4").is_err());
        assert!(Semiring::Boolean.parse_weight("2").is_err());
        for s in all() {
            for x in s.samples() {
                assert_eq!(s.parse_weight(&x.to_string()).unwrap(), x);
            }
        }
    }
}
