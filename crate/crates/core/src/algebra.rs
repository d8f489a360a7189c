//! Finite alphabets and the algebraic structure some of them carry.
//!
//! Symbols are always the integers `0..size`. An [`OrderedAlphabet`] is a
//! product of chains ordered componentwise; a [`GroupAlphabet`] is a direct
//! product of cyclic groups. Both encode tuples as mixed-radix integers with
//! the first component most significant.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::error::{NfgError, Result};

/// Mixed-radix decoding of `x`, first component most significant.
pub fn decode_mixed(radices: &[usize], mut x: usize) -> Vec<usize> {
    let mut digits = vec![0; radices.len()];
    for (d, &r) in digits.iter_mut().zip(radices).rev() {
        *d = x % r;
        x /= r;
    }
    digits
}

/// Inverse of [`decode_mixed`].
pub fn encode_mixed(radices: &[usize], digits: &[usize]) -> usize {
    radices.iter().zip(digits).fold(0, |acc, (&r, &d)| acc * r + d)
}

/// Product of chains `{0..r_1} x ... x {0..r_m}` under the componentwise order.
///
/// A single chain of size `n` has `radices == [n]`. Rank of a symbol in a
/// single chain is `symbol + 1`, so the top element has rank `size`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OrderedAlphabet {
    radices: Vec<usize>,
}

impl OrderedAlphabet {
    pub fn new(radices: &[usize]) -> Result<Self> {
        if radices.is_empty() || radices.contains(&0) {
            return Err(NfgError::InvalidAlphabet(format!(
                "ordered radices must be nonempty and positive, got {radices:?}"
            )));
        }
        Ok(Self {
            radices: radices.to_vec(),
        })
    }

    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    pub fn size(&self) -> usize {
        self.radices.iter().product()
    }

    pub fn decode(&self, x: usize) -> Vec<usize> {
        decode_mixed(&self.radices, x)
    }

    pub fn encode(&self, digits: &[usize]) -> usize {
        encode_mixed(&self.radices, digits)
    }

    /// The all-top element.
    pub fn top(&self) -> usize {
        self.size() - 1
    }

    /// Componentwise `a <= b`.
    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.decode(a).iter().zip(self.decode(b)).all(|(x, y)| *x <= y)
    }

    /// Componentwise maximum.
    pub fn max(&self, a: usize, b: usize) -> usize {
        let m: Vec<usize> = self
            .decode(a)
            .iter()
            .zip(self.decode(b))
            .map(|(x, y)| (*x).max(y))
            .collect();
        self.encode(&m)
    }
}

/// Direct product of cyclic groups `Z_m1 x ... x Z_mr`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroupAlphabet {
    moduli: Vec<usize>,
}

impl GroupAlphabet {
    pub fn new(moduli: &[usize]) -> Result<Self> {
        if moduli.is_empty() || moduli.iter().any(|&m| m < 2) {
            return Err(NfgError::InvalidAlphabet(format!(
                "group moduli must be nonempty and >= 2, got {moduli:?}"
            )));
        }
        Ok(Self {
            moduli: moduli.to_vec(),
        })
    }

    pub fn cyclic(m: usize) -> Result<Self> {
        Self::new(&[m])
    }

    pub fn moduli(&self) -> &[usize] {
        &self.moduli
    }

    pub fn size(&self) -> usize {
        self.moduli.iter().product()
    }

    fn check(&self, x: usize) -> Result<()> {
        if x >= self.size() {
            return Err(NfgError::OutOfRange {
                value: x,
                size: self.size(),
            });
        }
        Ok(())
    }

    pub fn decode(&self, x: usize) -> Result<Vec<usize>> {
        self.check(x)?;
        Ok(decode_mixed(&self.moduli, x))
    }

    pub fn encode(&self, digits: &[usize]) -> Result<usize> {
        if digits.len() != self.moduli.len() {
            return Err(NfgError::InvalidAlphabet(format!(
                "expected {} components, got {}",
                self.moduli.len(),
                digits.len()
            )));
        }
        for (&d, &m) in digits.iter().zip(&self.moduli) {
            if d >= m {
                return Err(NfgError::OutOfRange { value: d, size: m });
            }
        }
        Ok(encode_mixed(&self.moduli, digits))
    }

    pub fn add(&self, a: usize, b: usize) -> Result<usize> {
        let (da, db) = (self.decode(a)?, self.decode(b)?);
        let sum: Vec<usize> = da
            .iter()
            .zip(&db)
            .zip(&self.moduli)
            .map(|((x, y), m)| (x + y) % m)
            .collect();
        Ok(encode_mixed(&self.moduli, &sum))
    }

    pub fn neg(&self, a: usize) -> Result<usize> {
        let neg: Vec<usize> = self
            .decode(a)?
            .iter()
            .zip(&self.moduli)
            .map(|(x, m)| (m - x) % m)
            .collect();
        Ok(encode_mixed(&self.moduli, &neg))
    }

    pub fn sub(&self, a: usize, b: usize) -> Result<usize> {
        self.add(a, self.neg(b)?)
    }

    /// Standard pairing `prod_i exp(2 pi i x_i xhat_i / m_i)`.
    pub fn character(&self, x: usize, xhat: usize) -> Result<Complex64> {
        let (dx, dh) = (self.decode(x)?, self.decode(xhat)?);
        Ok(dx
            .iter()
            .zip(&dh)
            .zip(&self.moduli)
            .map(|((a, b), &m)| root_of_unity((a * b) % m, m))
            .product())
    }

    /// Inverse kernel `kappa(x, -xhat) / |G|`.
    pub fn dual_character(&self, x: usize, xhat: usize) -> Result<Complex64> {
        Ok(self.character(x, self.neg(xhat)?)? / self.size() as f64)
    }
}

/// `exp(2 pi i r / m)`, exact at quarter turns.
fn root_of_unity(r: usize, m: usize) -> Complex64 {
    if (4 * r).is_multiple_of(m) {
        return match 4 * r / m {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    Complex64::from_polar(1.0, 2.0 * PI * r as f64 / m as f64)
}

/// A finite alphabet attached to an edge or factor axis.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Alphabet {
    Plain(usize),
    Ordered(OrderedAlphabet),
    Group(GroupAlphabet),
}

impl Alphabet {
    /// # Panics
    /// If `size == 0`.
    pub fn plain(size: usize) -> Self {
        assert!(size >= 1, "alphabet size must be positive");
        Alphabet::Plain(size)
    }

    /// A single chain of `size` symbols.
    ///
    /// # Panics
    /// If `size == 0`.
    pub fn ordered(size: usize) -> Self {
        Alphabet::Ordered(OrderedAlphabet::new(&[size]).expect("positive size"))
    }

    /// # Panics
    /// On empty or zero radices.
    pub fn ordered_product(radices: &[usize]) -> Self {
        Alphabet::Ordered(OrderedAlphabet::new(radices).expect("valid radices"))
    }

    /// # Panics
    /// If `m < 2`.
    pub fn cyclic(m: usize) -> Self {
        Alphabet::Group(GroupAlphabet::cyclic(m).expect("modulus >= 2"))
    }

    /// # Panics
    /// On invalid moduli.
    pub fn group(moduli: &[usize]) -> Self {
        Alphabet::Group(GroupAlphabet::new(moduli).expect("valid moduli"))
    }

    pub fn try_plain(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(NfgError::InvalidAlphabet("size must be positive".into()));
        }
        Ok(Alphabet::Plain(size))
    }

    pub fn size(&self) -> usize {
        match self {
            Alphabet::Plain(n) => *n,
            Alphabet::Ordered(o) => o.size(),
            Alphabet::Group(g) => g.size(),
        }
    }

    pub fn as_group(&self) -> Option<&GroupAlphabet> {
        match self {
            Alphabet::Group(g) => Some(g),
            _ => None,
        }
    }

    pub fn as_ordered(&self) -> Option<&OrderedAlphabet> {
        match self {
            Alphabet::Ordered(o) => Some(o),
            _ => None,
        }
    }

    /// Alphabets are interchangeable for contraction when their sizes agree.
    pub fn compatible(&self, other: &Alphabet) -> bool {
        self.size() == other.size()
    }

    pub fn check(&self, value: usize) -> Result<()> {
        if value >= self.size() {
            return Err(NfgError::OutOfRange {
                value,
                size: self.size(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Alphabet::Plain(n) => write!(f, "plain({n})"),
            Alphabet::Ordered(o) => write!(f, "ordered{:?}", o.radices()),
            Alphabet::Group(g) => write!(f, "group{:?}", g.moduli()),
        }
    }
}

/// One named axis of a [`ProductDomain`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Axis {
    pub label: String,
    pub alphabet: Alphabet,
}

impl Axis {
    pub fn new(label: impl Into<String>, alphabet: Alphabet) -> Self {
        Self {
            label: label.into(),
            alphabet,
        }
    }

    pub fn size(&self) -> usize {
        self.alphabet.size()
    }
}

/// Cartesian product of labelled alphabets, row-major with the last axis fastest.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct ProductDomain {
    axes: Vec<Axis>,
}

impl ProductDomain {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        for (i, a) in axes.iter().enumerate() {
            if axes[..i].iter().any(|b| b.label == a.label) {
                return Err(NfgError::DuplicateLabel(a.label.clone()));
            }
        }
        Ok(Self { axes })
    }

    /// Size-1 domain with no axes.
    pub fn scalar() -> Self {
        Self { axes: Vec::new() }
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn rank(&self) -> usize {
        self.axes.len()
    }

    pub fn size(&self) -> usize {
        self.axes.iter().map(Axis::size).product()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.axes.iter().map(Axis::size).collect()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.axes.iter().map(|a| a.label.as_str())
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.axes.iter().position(|a| a.label == label)
    }

    pub fn axis(&self, label: &str) -> Option<&Axis> {
        self.axes.iter().find(|a| a.label == label)
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.axes.len()];
        for i in (0..self.axes.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.axes[i + 1].size();
        }
        strides
    }

    pub fn linear_index(&self, coords: &[usize]) -> Result<usize> {
        if coords.len() != self.axes.len() {
            return Err(NfgError::ShapeMismatch {
                expected: self.axes.len(),
                got: coords.len(),
            });
        }
        let mut idx = 0;
        for (a, &c) in self.axes.iter().zip(coords) {
            a.alphabet.check(c)?;
            idx = idx * a.size() + c;
        }
        Ok(idx)
    }

    pub fn coords(&self, index: usize) -> Vec<usize> {
        decode_mixed(&self.sizes(), index)
    }

    pub(crate) fn with_axes(axes: Vec<Axis>) -> Self {
        Self { axes }
    }
}

/// Builds a product domain from `(label, alphabet)` pairs.
pub fn make_product_domain<S: Into<String>>(axes: impl IntoIterator<Item = (S, Alphabet)>) -> Result<ProductDomain> {
    ProductDomain::new(axes.into_iter().map(|(l, a)| Axis::new(l, a)).collect())
}
