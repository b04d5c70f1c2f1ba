/// Transition kernel storage: one row per `(x, u, w)`.
#[derive(Clone, Debug, PartialEq)]
pub enum Kernel {
    /// Row-major `rows × width` matrix.
    Dense { width: usize, probs: Vec<f64> },
    /// Compressed rows of `(next_state, probability)` sorted by state.
    Sparse { starts: Vec<usize>, entries: Vec<(usize, f64)> },
}

impl Kernel {
    pub(crate) fn dense(rows: Vec<Vec<(usize, f64)>>, width: usize) -> Self {
        let mut probs = vec![0.0; rows.len() * width];
        for (r, row) in rows.iter().enumerate() {
            for &(next, p) in row {
                probs[r * width + next] = p;
            }
        }
        Kernel::Dense { width, probs }
    }

    pub(crate) fn sparse(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut starts = Vec::with_capacity(rows.len() + 1);
        let mut entries = Vec::new();
        starts.push(0);
        for row in rows {
            entries.extend(row);
            starts.push(entries.len());
        }
        Kernel::Sparse { starts, entries }
    }

    #[inline]
    pub fn row(&self, r: usize) -> KernelRow<'_> {
        match self {
            Kernel::Dense { width, probs } => KernelRow::Dense(&probs[r * width..(r + 1) * width]),
            Kernel::Sparse { starts, entries } => {
                KernelRow::Sparse(&entries[starts[r]..starts[r + 1]])
            }
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, Kernel::Sparse { .. })
    }
}

/// Borrowed view of one kernel row.
#[derive(Clone, Copy, Debug)]
pub enum KernelRow<'a> {
    Dense(&'a [f64]),
    Sparse(&'a [(usize, f64)]),
}

impl<'a> KernelRow<'a> {
    /// Nonzero `(next_state, probability)` entries in state order.
    pub fn iter(&self) -> RowIter<'a> {
        match *self {
            KernelRow::Dense(p) => RowIter::Dense(p.iter().enumerate()),
            KernelRow::Sparse(e) => RowIter::Sparse(e.iter()),
        }
    }

    /// `Σ_{x'} P(x') v(x')`.
    #[inline]
    pub fn expect(&self, v: &[f64]) -> f64 {
        match *self {
            KernelRow::Dense(p) => p.iter().zip(v).map(|(a, b)| a * b).sum(),
            KernelRow::Sparse(e) => e.iter().map(|&(i, p)| p * v[i]).sum(),
        }
    }

    /// Single successor if the row is a point mass.
    pub fn deterministic_successor(&self) -> Option<usize> {
        let mut it = self.iter();
        match (it.next(), it.next()) {
            (Some((next, p)), None) if p == 1.0 => Some(next),
            _ => None,
        }
    }
}

pub enum RowIter<'a> {
    Dense(std::iter::Enumerate<std::slice::Iter<'a, f64>>),
    Sparse(std::slice::Iter<'a, (usize, f64)>),
}

impl Iterator for RowIter<'_> {
    type Item = (usize, f64);

    fn next(&mut self) -> Option<Self::Item> {
        match self {
            RowIter::Dense(it) => it.find(|(_, &p)| p != 0.0).map(|(i, &p)| (i, p)),
            RowIter::Sparse(it) => it.next().copied(),
        }
    }
}
