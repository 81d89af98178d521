use crate::scalar::Real;

/// Neumaier (improved Kahan–Babuška) running sum.
///
/// `sum` holds the rounded partial sum and `comp` the accumulated rounding
/// residue; the best estimate of the exact sum is `sum + comp`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum<T> {
    sum: T,
    comp: T,
}

impl<T: Real> CompensatedSum<T> {
    pub fn new() -> Self {
        Self { sum: T::zero(), comp: T::zero() }
    }

    /// Rebuilds an accumulator from a persisted `(sum, comp)` pair.
    pub fn from_parts(sum: T, comp: T) -> Self {
        Self { sum, comp }
    }

    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp = self.comp + ((self.sum - t) + x);
        } else {
            self.comp = self.comp + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum + self.comp
    }

    pub fn sum(&self) -> T {
        self.sum
    }

    pub fn comp(&self) -> T {
        self.comp
    }
}

impl<T: Real> FromIterator<T> for CompensatedSum<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut acc = Self::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}
