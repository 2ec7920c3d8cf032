//! Index bookkeeping for tensor-factored spaces. The first subsystem is the
//! most significant digit of a flat index.

use crate::error::{Error, Result};

pub(crate) fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.is_empty() {
        return Err(Error::BadSize("dims must be nonempty".into()));
    }
    if dims.contains(&0) {
        return Err(Error::BadDimension("subsystem dimension 0".into()));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Layout {
    dims: Vec<usize>,
    strides: Vec<usize>,
}

/// Flat offsets contributed by the kept and by the traced subsystems; every
/// full index is exactly one `kept + traced` sum.
pub(crate) struct Split {
    pub kept_offsets: Vec<usize>,
    pub traced_offsets: Vec<usize>,
}

impl Layout {
    pub fn new(dims: &[usize]) -> Self {
        let mut strides = vec![1; dims.len()];
        for s in (0..dims.len().saturating_sub(1)).rev() {
            strides[s] = strides[s + 1] * dims[s + 1];
        }
        Self { dims: dims.to_vec(), strides }
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn stride(&self, subsystem: usize) -> usize {
        self.strides[subsystem]
    }

    pub fn digit(&self, index: usize, subsystem: usize) -> usize {
        (index / self.strides[subsystem]) % self.dims[subsystem]
    }

    pub fn digits(&self, index: usize) -> Vec<usize> {
        (0..self.dims.len()).map(|s| self.digit(index, s)).collect()
    }

    pub fn index(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.strides).map(|(d, s)| d * s).sum()
    }

    /// Replaces the digit of `subsystem` in `index`.
    pub fn with_digit(&self, index: usize, subsystem: usize, value: usize) -> usize {
        index - self.digit(index, subsystem) * self.strides[subsystem] + value * self.strides[subsystem]
    }

    /// Offsets enumerating `keep` (in the given order, first slowest) and the
    /// complement (ascending).
    pub(crate) fn split(&self, keep: &[usize]) -> Result<Split> {
        let n = self.dims.len();
        if keep.is_empty() {
            return Err(Error::BadSubsystem("keep list is empty".into()));
        }
        let mut seen = vec![false; n];
        for &k in keep {
            if k >= n {
                return Err(Error::BadSubsystem(format!("subsystem {k} of {n}")));
            }
            if seen[k] {
                return Err(Error::BadSubsystem(format!("subsystem {k} listed twice")));
            }
            seen[k] = true;
        }
        let traced: Vec<usize> = (0..n).filter(|&s| !seen[s]).collect();
        Ok(Split { kept_offsets: self.offsets(keep), traced_offsets: self.offsets(&traced) })
    }

    fn offsets(&self, subsystems: &[usize]) -> Vec<usize> {
        let mut out = vec![0usize];
        for &s in subsystems {
            let mut next = Vec::with_capacity(out.len() * self.dims[s]);
            for &o in &out {
                for d in 0..self.dims[s] {
                    next.push(o + d * self.strides[s]);
                }
            }
            out = next;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digits_round_trip() {
        let l = Layout::new(&[2, 3, 2]);
        assert_eq!(l.total(), 12);
        for i in 0..12 {
            assert_eq!(l.index(&l.digits(i)), i);
        }
        assert_eq!(l.digits(7), vec![1, 0, 1]);
        assert_eq!(l.with_digit(7, 1, 2), l.index(&[1, 2, 1]));
    }

    #[test]
    fn split_covers_every_index_once() {
        let l = Layout::new(&[2, 3, 2]);
        let s = l.split(&[2, 0]).unwrap();
        let mut all: Vec<usize> =
            s.kept_offsets.iter().flat_map(|k| s.traced_offsets.iter().map(move |t| k + t)).collect();
        all.sort();
        assert_eq!(all, (0..12).collect::<Vec<_>>());
    }
}
