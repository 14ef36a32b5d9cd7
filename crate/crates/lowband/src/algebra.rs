//! Semirings over a single machine word.
//!
//! Every value moved by the simulator is an [`Element`]: one `u64` payload
//! whose meaning is fixed by the ambient [`Semiring`]. Four kinds are
//! supported:
//!
//! | kind      | domain            | add        | mul        | zero    | one |
//! |-----------|-------------------|------------|------------|---------|-----|
//! | `bool`    | {0, 1}            | or         | and        | 0       | 1   |
//! | `minplus` | naturals + inf    | min        | +          | inf     | 0   |
//! | `int`     | u64 (wrapping)    | +          | *          | 0       | 1   |
//! | `gfp:p`   | [0, p), p prime   | + mod p    | * mod p    | 0       | 1   |
//!
//! The tropical zero is the reserved sentinel word `u64::MAX`, never a value
//! produced by saturating arithmetic. Integer arithmetic wraps mod 2^64,
//! which keeps the semiring laws exact for arbitrary payloads.

use std::fmt;

use rand::Rng;

/// One value: a single machine word interpreted by a [`Semiring`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Element(pub u64);

impl fmt::Debug for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Reserved payload for the tropical zero (plus infinity).
pub const MINPLUS_INF: u64 = u64::MAX;

/// Largest admissible prime modulus; products must fit in one u64 word.
pub const MAX_MODULUS: u64 = 1 << 32;

/// The supported semiring kinds.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SemiringKind {
    /// Boolean or/and.
    Bool,
    /// Tropical min/plus over naturals with an infinity sentinel.
    MinPlus,
    /// Integers with wrapping plus/times.
    Int,
    /// Prime field GF(p), reduced after every operation.
    Gfp(u64),
}

/// A runtime-pluggable semiring.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Semiring {
    kind: SemiringKind,
}

#[derive(Debug, PartialEq, Eq)]
pub enum AlgebraError {
    NonPrimeModulus(u64),
    ModulusTooLarge(u64),
    UnknownToken(String),
}

impl fmt::Display for AlgebraError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlgebraError::NonPrimeModulus(p) => write!(f, "modulus {p} is not prime"),
            AlgebraError::ModulusTooLarge(p) => {
                write!(f, "modulus {p} exceeds the one-word limit {MAX_MODULUS}")
            }
            AlgebraError::UnknownToken(t) => write!(f, "unknown semiring token {t:?}"),
        }
    }
}

impl std::error::Error for AlgebraError {}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut q = 2u64;
    while q * q <= p {
        if p % q == 0 {
            return false;
        }
        q += 1;
    }
    true
}

/// Builds a semiring, validating the modulus for `Gfp`.
pub fn make_semiring(kind: SemiringKind) -> Result<Semiring, AlgebraError> {
    if let SemiringKind::Gfp(p) = kind {
        if p >= MAX_MODULUS {
            return Err(AlgebraError::ModulusTooLarge(p));
        }
        if !is_prime(p) {
            return Err(AlgebraError::NonPrimeModulus(p));
        }
    }
    Ok(Semiring { kind })
}

impl Semiring {
    /// Parses a CLI token: `bool`, `minplus`, `int` or `gfp:<p>`.
    pub fn from_token(tok: &str) -> Result<Semiring, AlgebraError> {
        match tok {
            "bool" => make_semiring(SemiringKind::Bool),
            "minplus" => make_semiring(SemiringKind::MinPlus),
            "int" => make_semiring(SemiringKind::Int),
            _ => match tok.strip_prefix("gfp:") {
                Some(p) => {
                    let p: u64 = p
                        .parse()
                        .map_err(|_| AlgebraError::UnknownToken(tok.to_string()))?;
                    make_semiring(SemiringKind::Gfp(p))
                }
                None => Err(AlgebraError::UnknownToken(tok.to_string())),
            },
        }
    }

    pub fn token(&self) -> String {
        match self.kind {
            SemiringKind::Bool => "bool".to_string(),
            SemiringKind::MinPlus => "minplus".to_string(),
            SemiringKind::Int => "int".to_string(),
            SemiringKind::Gfp(p) => format!("gfp:{p}"),
        }
    }

    pub fn kind(&self) -> SemiringKind {
        self.kind
    }

    /// Additive identity; annihilates under `mul`.
    pub fn zero(&self) -> Element {
        match self.kind {
            SemiringKind::MinPlus => Element(MINPLUS_INF),
            _ => Element(0),
        }
    }

    /// Multiplicative identity.
    pub fn one(&self) -> Element {
        match self.kind {
            SemiringKind::MinPlus => Element(0),
            _ => Element(1),
        }
    }

    pub fn add(&self, a: Element, b: Element) -> Element {
        match self.kind {
            SemiringKind::Bool => Element(a.0 | b.0),
            SemiringKind::MinPlus => Element(a.0.min(b.0)),
            SemiringKind::Int => Element(a.0.wrapping_add(b.0)),
            SemiringKind::Gfp(p) => Element((a.0 + b.0) % p),
        }
    }

    pub fn mul(&self, a: Element, b: Element) -> Element {
        match self.kind {
            SemiringKind::Bool => Element(a.0 & b.0),
            SemiringKind::MinPlus => {
                if a.0 == MINPLUS_INF || b.0 == MINPLUS_INF {
                    Element(MINPLUS_INF)
                } else {
                    // Stay strictly below the sentinel even on overflow.
                    let s = a.0.saturating_add(b.0);
                    Element(if s == MINPLUS_INF { MINPLUS_INF - 1 } else { s })
                }
            }
            SemiringKind::Int => Element(a.0.wrapping_mul(b.0)),
            SemiringKind::Gfp(p) => Element((a.0 * b.0) % p),
        }
    }

    /// Maps an arbitrary payload word into the semiring's domain.
    pub fn canon(&self, raw: Element) -> Element {
        match self.kind {
            SemiringKind::Bool => Element((raw.0 != 0) as u64),
            SemiringKind::MinPlus => raw,
            SemiringKind::Int => raw,
            SemiringKind::Gfp(p) => Element(raw.0 % p),
        }
    }

    /// Draws a domain element. Tropical draws include the occasional infinity
    /// so sentinel handling stays exercised.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Element {
        match self.kind {
            SemiringKind::Bool => Element(rng.gen_range(0..2u64)),
            SemiringKind::MinPlus => {
                if rng.gen_range(0..16) == 0 {
                    Element(MINPLUS_INF)
                } else {
                    Element(rng.gen_range(0..1u64 << 20))
                }
            }
            SemiringKind::Int => Element(rng.gen::<u64>()),
            SemiringKind::Gfp(p) => Element(rng.gen_range(0..p)),
        }
    }

    pub fn display(&self, e: Element) -> String {
        match self.kind {
            SemiringKind::MinPlus if e.0 == MINPLUS_INF => "inf".to_string(),
            _ => e.0.to_string(),
        }
    }
}

/// Folds `sum += a * b` over the pairs, starting from zero.
pub fn dot_accumulate<I>(sr: &Semiring, pairs: I) -> Element
where
    I: IntoIterator<Item = (Element, Element)>,
{
    let mut acc = sr.zero();
    for (a, b) in pairs {
        acc = sr.add(acc, sr.mul(a, b));
    }
    acc
}
