use crate::error::{Error, Result};
use crate::prob::Space;

/// The finite element domain `X`.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    space: Space,
}

impl Domain {
    pub fn new<I, S>(elements: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let space = Space::labeled(elements)
            .ok_or_else(|| Error::InvalidArguments("domain elements must be unique".into()))?;
        if space.is_empty() {
            return Err(Error::InvalidArguments("domain must be non-empty".into()));
        }
        Ok(Self { space })
    }

    /// Elements `"0"`..`"{size-1}"`.
    pub fn numbered(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidArguments("domain must be non-empty".into()));
        }
        Ok(Self {
            space: Space::numbered(size),
        })
    }

    pub fn from_space(space: Space) -> Result<Self> {
        if space.is_empty() || space.labels().is_none() {
            return Err(Error::InvalidArguments(
                "domain must be a non-empty labeled space".into(),
            ));
        }
        Ok(Self { space })
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn size(&self) -> usize {
        self.space.len()
    }
}

/// Enumeration limits. Exceeding them is an error, never a silent approximation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    /// Maximum number of sample tuples `|X|^n`.
    pub max_tuples: u128,
    /// Maximum number of ordered tuple pairs visited by pairwise certifiers.
    pub max_pairs: u128,
    /// Maximum number of cells `|X|^n · |R|` of a set-level joint table.
    pub max_cells: u128,
    /// Maximum number of positive-mass views in an adaptive enumeration.
    pub max_views: u128,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            max_tuples: 1 << 20,
            max_pairs: 1 << 28,
            max_cells: 1 << 25,
            max_views: 1 << 20,
        }
    }
}

impl Budget {
    pub fn with_max_tuples(max_tuples: u128) -> Self {
        Self {
            max_tuples,
            ..Self::default()
        }
    }

    pub(crate) fn check(&self, what: &str, size: u128, budget: u128) -> Result<()> {
        if size > budget {
            return Err(Error::BudgetExceeded {
                what: what.to_string(),
                size,
                budget,
            });
        }
        Ok(())
    }
}

/// Mixed-radix indexing of ordered sample tuples `X^n`.
///
/// Position 0 is the most significant digit, so index order is lexicographic.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TupleSpace {
    base: usize,
    n: usize,
    count: usize,
}

impl TupleSpace {
    pub fn new(base: usize, n: usize, budget: &Budget) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArguments("sample size must be positive".into()));
        }
        let size = (base as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
        budget.check("sample tuple space", size, budget.max_tuples)?;
        Ok(Self {
            base,
            n,
            count: size as usize,
        })
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn decode_into(&self, mut idx: usize, out: &mut [usize]) {
        for slot in out.iter_mut().rev() {
            *slot = idx % self.base;
            idx /= self.base;
        }
    }

    pub fn decode(&self, idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.n];
        self.decode_into(idx, &mut out);
        out
    }

    pub fn encode(&self, tuple: &[usize]) -> Result<usize> {
        if tuple.len() != self.n {
            return Err(Error::ArityMismatch {
                expected: self.n,
                found: tuple.len(),
            });
        }
        let mut idx = 0usize;
        for &x in tuple {
            if x >= self.base {
                return Err(Error::InvalidArguments(format!(
                    "element index {x} outside a domain of size {}",
                    self.base
                )));
            }
            idx = idx * self.base + x;
        }
        Ok(idx)
    }

    /// Per-element occurrence counts of tuple `idx`.
    pub fn counts_into(&self, mut idx: usize, out: &mut [u32]) {
        out.iter_mut().for_each(|c| *c = 0);
        for _ in 0..self.n {
            out[idx % self.base] += 1;
            idx /= self.base;
        }
    }

    /// Weight of digit `pos` (for neighbor enumeration).
    pub(crate) fn place_value(&self, pos: usize) -> usize {
        self.base.pow((self.n - 1 - pos) as u32)
    }

    pub fn space(&self) -> Space {
        Space::anonymous(self.count)
    }
}

/// A domain together with a sample size: everything a mechanism constructor needs.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleFrame {
    domain: Domain,
    tuples: TupleSpace,
}

impl SampleFrame {
    pub fn new(domain: Domain, n: usize, budget: &Budget) -> Result<Self> {
        let tuples = TupleSpace::new(domain.size(), n, budget)?;
        Ok(Self { domain, tuples })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn n(&self) -> usize {
        self.tuples.n()
    }

    pub fn tuples(&self) -> &TupleSpace {
        &self.tuples
    }

    pub fn tuple_label(&self, idx: usize) -> String {
        let t = self.tuples.decode(idx);
        let parts: Vec<String> = t.iter().map(|&x| self.domain.space().label(x)).collect();
        format!("({})", parts.join(","))
    }
}
