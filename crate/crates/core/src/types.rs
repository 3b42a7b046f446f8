//! Simple types over the single ground type `o`.

use std::fmt;
use std::sync::Arc;

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum SimpleType {
    Ground,
    Arrow(Arc<SimpleType>, Arc<SimpleType>),
}

impl SimpleType {
    pub fn ground() -> Self {
        SimpleType::Ground
    }

    pub fn arrow(domain: SimpleType, codomain: SimpleType) -> Self {
        SimpleType::Arrow(Arc::new(domain), Arc::new(codomain))
    }

    /// Builds `args[0] -> ... -> args[n-1] -> o`.
    pub fn function<I>(args: I) -> Self
    where
        I: IntoIterator<Item = SimpleType>,
        I::IntoIter: DoubleEndedIterator,
    {
        args.into_iter()
            .rev()
            .fold(SimpleType::Ground, |acc, arg| SimpleType::arrow(arg, acc))
    }

    /// Builds `args[0] -> ... -> args[n-1] -> result`.
    pub fn function_to<I>(args: I, result: SimpleType) -> Self
    where
        I: IntoIterator<Item = SimpleType>,
        I::IntoIter: DoubleEndedIterator,
    {
        args.into_iter()
            .rev()
            .fold(result, |acc, arg| SimpleType::arrow(arg, acc))
    }

    pub fn is_ground(&self) -> bool {
        matches!(self, SimpleType::Ground)
    }

    /// Argument types of `α₁ → … → α_k → o`, in order.
    pub fn args(&self) -> Vec<&SimpleType> {
        let mut out = Vec::new();
        let mut cur = self;
        while let SimpleType::Arrow(dom, cod) = cur {
            out.push(dom.as_ref());
            cur = cod.as_ref();
        }
        out
    }

    /// Number of arguments before reaching `o`.
    pub fn arity(&self) -> usize {
        let mut n = 0;
        let mut cur = self;
        while let SimpleType::Arrow(_, cod) = cur {
            n += 1;
            cur = cod.as_ref();
        }
        n
    }

    /// The type left after supplying `n` arguments, if there are that many.
    pub fn drop_args(&self, n: usize) -> Option<&SimpleType> {
        let mut cur = self;
        for _ in 0..n {
            match cur {
                SimpleType::Arrow(_, cod) => cur = cod.as_ref(),
                SimpleType::Ground => return None,
            }
        }
        Some(cur)
    }

    pub fn order(&self) -> usize {
        self.args()
            .into_iter()
            .map(|a| a.order() + 1)
            .max()
            .unwrap_or(0)
    }

    /// Splits `α₁ → … → α_k ⇒ oˡ → o` into the prefix `[α₁ … α_k]` (whose last
    /// element is not ground) and the ground arity `ℓ`.
    pub fn decompose(&self) -> (Vec<SimpleType>, usize) {
        let args = self.args();
        let ell = args.iter().rev().take_while(|a| a.is_ground()).count();
        let prefix = args[..args.len() - ell].iter().map(|a| (*a).clone()).collect();
        (prefix, ell)
    }

    /// Inverse of [`SimpleType::decompose`].
    pub fn recompose(prefix: &[SimpleType], ell: usize) -> SimpleType {
        SimpleType::function(
            prefix
                .iter()
                .cloned()
                .chain(std::iter::repeat_n(SimpleType::Ground, ell))
                .collect::<Vec<_>>(),
        )
    }

    /// Ground arity: the number of trailing `o` arguments.
    pub fn gar(&self) -> usize {
        self.args().iter().rev().take_while(|a| a.is_ground()).count()
    }

    /// Largest arity among all subtypes (the type itself, and recursively both
    /// sides of every arrow).
    pub fn max_subtype_arity(&self) -> usize {
        match self {
            SimpleType::Ground => 0,
            SimpleType::Arrow(dom, cod) => self
                .arity()
                .max(dom.max_subtype_arity())
                .max(cod.max_subtype_arity()),
        }
    }
}

impl fmt::Display for SimpleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimpleType::Ground => f.write_str("o"),
            SimpleType::Arrow(dom, cod) => {
                if dom.is_ground() {
                    write!(f, "o -> {cod}")
                } else {
                    write!(f, "({dom}) -> {cod}")
                }
            }
        }
    }
}

impl fmt::Debug for SimpleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
