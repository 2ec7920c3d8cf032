//! Measurement basis, postselection basis and the weak-measurement device table.

use crate::error::{Error, Result};
use crate::qcore::{check_dims, ComplexMatrix, Layout, PureState};
use crate::scalar::{re, Cx, Real};

/// Ordered orthonormal basis with labels.
///
/// When every vector is a product state, `factors[k][p]` is the factor of
/// vector `k` on party `p`. The estimator postselects marginals with these.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet<T: Real> {
    dims: Vec<usize>,
    vectors: Vec<PureState<T>>,
    labels: Vec<String>,
    factors: Option<Vec<Vec<PureState<T>>>>,
}

impl<T: Real> BasisSet<T> {
    pub fn new(dims: Vec<usize>, vectors: Vec<PureState<T>>, labels: Vec<String>) -> Result<Self> {
        check_dims(&dims)?;
        let total: usize = dims.iter().product();
        if vectors.len() != total || labels.len() != total {
            return Err(Error::BadSize(format!(
                "{} vectors and {} labels for dimension {total}",
                vectors.len(),
                labels.len()
            )));
        }
        if let Some(v) = vectors.iter().find(|v| v.dims() != dims.as_slice()) {
            return Err(Error::ShapeMismatch(format!("vector dims {:?} vs basis dims {dims:?}", v.dims())));
        }
        let tol = T::structural_tol();
        for (a, va) in vectors.iter().enumerate() {
            for (b, vb) in vectors.iter().enumerate().skip(a) {
                let want = if a == b { T::one() } else { T::zero() };
                let got = va.inner(vb);
                if (got - re(want)).norm() > tol {
                    return Err(Error::Invariant(format!("orthonormality: <{a}|{b}> = {got}")));
                }
            }
        }
        Ok(Self { dims, vectors, labels, factors: None })
    }

    /// Attaches per-party product factors after checking they tensor back to each vector.
    pub fn with_factors(mut self, factors: Vec<Vec<PureState<T>>>) -> Result<Self> {
        if factors.len() != self.vectors.len() {
            return Err(Error::BadSize("one factor list per basis vector".into()));
        }
        for (k, (v, fs)) in self.vectors.iter().zip(&factors).enumerate() {
            if fs.len() != self.dims.len() || fs.iter().zip(&self.dims).any(|(f, &d)| f.dims() != [d]) {
                return Err(Error::ShapeMismatch(format!("factors of vector {k} do not match party dims")));
            }
            let prod = tensor_all(fs);
            let defect = prod
                .amplitudes()
                .iter()
                .zip(v.amplitudes())
                .map(|(a, b)| (a - b).norm())
                .fold(T::zero(), T::max);
            if defect > T::structural_tol() {
                return Err(Error::NonFactorablePostselection(format!("vector {k} differs from its factors by {defect}")));
            }
        }
        self.factors = Some(factors);
        Ok(self)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[PureState<T>] {
        &self.vectors
    }

    pub fn vector(&self, k: usize) -> &PureState<T> {
        &self.vectors[k]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn factors(&self) -> Option<&[Vec<PureState<T>>]> {
        self.factors.as_deref()
    }

    pub fn factor(&self, k: usize, party: usize) -> Option<&PureState<T>> {
        self.factors.as_ref().map(|f| &f[k][party])
    }

    pub fn is_product(&self) -> bool {
        self.factors.is_some()
    }

    /// Applies a single-party unitary to every vector (and its factor on `party`).
    pub fn apply_local(&self, party: usize, unitary: &ComplexMatrix<T>) -> Result<Self> {
        if party >= self.dims.len() {
            return Err(Error::BadSubsystem(format!("party {party} of {}", self.dims.len())));
        }
        let full = embed_local(&self.dims, party, unitary)?;
        let vectors = self.vectors.iter().map(|v| v.apply(&full)).collect::<Result<Vec<_>>>()?;
        let mut out = Self::new(self.dims.clone(), vectors, self.labels.clone())?;
        if let Some(factors) = &self.factors {
            let mut f2 = factors.clone();
            for fs in &mut f2 {
                fs[party] = fs[party].apply(unitary)?;
            }
            out = out.with_factors(f2)?;
        }
        Ok(out)
    }
}

fn tensor_all<T: Real>(states: &[PureState<T>]) -> PureState<T> {
    let mut it = states.iter();
    let first = it.next().expect("at least one factor").clone();
    it.fold(first, |acc, s| acc.tensor(s))
}

/// `I ⊗ ⋯ ⊗ U ⊗ ⋯ ⊗ I` with `U` on `party`.
pub fn embed_local<T: Real>(dims: &[usize], party: usize, unitary: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    if party >= dims.len() {
        return Err(Error::BadSubsystem(format!("party {party} of {}", dims.len())));
    }
    if unitary.rows() != dims[party] || unitary.cols() != dims[party] {
        return Err(Error::ShapeMismatch("local operator does not match party dimension".into()));
    }
    let mut acc = ComplexMatrix::identity(1);
    for (p, &d) in dims.iter().enumerate() {
        let f = if p == party { unitary.clone() } else { ComplexMatrix::identity(d) };
        acc = acc.kron(&f);
    }
    Ok(acc)
}

fn digit_label(digits: &[usize], dims: &[usize]) -> String {
    if dims.iter().all(|&d| d <= 10) {
        digits.iter().map(|d| char::from_digit(*d as u32, 10).unwrap()).collect()
    } else {
        digits.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",")
    }
}

/// Standard basis in lexicographic order, first party most significant.
pub fn computational_basis<T: Real>(dims: &[usize]) -> Result<BasisSet<T>> {
    check_dims(dims)?;
    let layout = Layout::new(dims);
    let mut vectors = Vec::with_capacity(layout.total());
    let mut labels = Vec::with_capacity(layout.total());
    let mut factors = Vec::with_capacity(layout.total());
    for i in 0..layout.total() {
        let digits = layout.digits(i);
        vectors.push(PureState::basis(dims.to_vec(), i)?);
        labels.push(digit_label(&digits, dims));
        factors.push(
            digits.iter().zip(dims).map(|(&x, &d)| PureState::basis(vec![d], x)).collect::<Result<Vec<_>>>()?,
        );
    }
    BasisSet::new(dims.to_vec(), vectors, labels)?.with_factors(factors)
}

/// Tensor products of `(|0⟩ ± |1⟩)/√2`.
///
/// Bit `b` of the zero-based index `k` picks the sign on the qubit `b` places
/// from the last, so the amplitude on `|x⟩` is `(−1)^popcount(k & x) / √2ⁿ`.
/// Labels are the per-qubit sign patterns, e.g. `++-`.
pub fn hadamard_mub<T: Real>(n_qubits: usize) -> Result<BasisSet<T>> {
    if n_qubits < 1 {
        return Err(Error::BadSize("hadamard_mub needs at least one qubit".into()));
    }
    if n_qubits >= usize::BITS as usize {
        return Err(Error::BadSize(format!("{n_qubits} qubits")));
    }
    let d = 1usize << n_qubits;
    let dims = vec![2; n_qubits];
    let amp = T::one() / T::from_usize(d).unwrap().sqrt();
    let h = T::FRAC_1_SQRT_2();
    let plus = PureState::from_raw(vec![2], vec![re(h), re(h)]);
    let minus = PureState::from_raw(vec![2], vec![re(h), re(-h)]);
    let mut vectors = Vec::with_capacity(d);
    let mut labels = Vec::with_capacity(d);
    let mut factors = Vec::with_capacity(d);
    for k in 0..d {
        let amps: Vec<Cx<T>> =
            (0..d).map(|x| if (k & x).count_ones() % 2 == 0 { re(amp) } else { re(-amp) }).collect();
        vectors.push(PureState::new(dims.clone(), amps)?);
        let signs: Vec<bool> = (0..n_qubits).map(|p| (k >> (n_qubits - 1 - p)) & 1 == 1).collect();
        labels.push(signs.iter().map(|&neg| if neg { '-' } else { '+' }).collect());
        factors.push(signs.iter().map(|&neg| if neg { minus.clone() } else { plus.clone() }).collect());
    }
    BasisSet::new(dims, vectors, labels)?.with_factors(factors)
}

/// True iff every cross overlap satisfies `|⟨b|a⟩|² = 1/d` within `tol`.
pub fn is_mutually_unbiased<T: Real>(a: &BasisSet<T>, b: &BasisSet<T>, tol: T) -> Result<bool> {
    if a.dims() != b.dims() {
        return Err(Error::ShapeMismatch(format!("dims {:?} vs {:?}", a.dims(), b.dims())));
    }
    let target = T::one() / T::from_usize(a.len()).unwrap();
    Ok(a.vectors().iter().all(|va| b.vectors().iter().all(|vb| (vb.inner(va).norm_sqr() - target).abs() <= tol)))
}

/// Weak-measured projector at one position of the device table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeviceOperator {
    /// `|a_i⟩⟨a_i|` on all parties (line 1).
    Joint { column: usize },
    /// `|digit⟩⟨digit|` on a single party (lines 2 and beyond).
    Party { party: usize, digit: usize },
}

/// The matrix of weak-coupling devices: one joint line plus one line per party,
/// one column per computational basis vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceTable {
    dims: Vec<usize>,
    party_bits: Vec<Vec<usize>>,
    labels: Vec<String>,
}

impl DeviceTable {
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn parties(&self) -> usize {
        self.dims.len()
    }

    pub fn lines(&self) -> usize {
        1 + self.dims.len()
    }

    pub fn columns(&self) -> usize {
        self.party_bits.len()
    }

    pub fn device_count(&self) -> usize {
        self.lines() * self.columns()
    }

    /// Digits column `i` assigns to each party.
    pub fn party_bits(&self, column: usize) -> &[usize] {
        &self.party_bits[column]
    }

    pub fn column_label(&self, column: usize) -> &str {
        &self.labels[column]
    }

    /// Lines are zero-based here: line 0 is the joint line.
    pub fn operator(&self, line: usize, column: usize) -> DeviceOperator {
        assert!(line < self.lines() && column < self.columns(), "device ({line},{column}) out of range");
        if line == 0 {
            DeviceOperator::Joint { column }
        } else {
            let party = line - 1;
            DeviceOperator::Party { party, digit: self.party_bits[column][party] }
        }
    }

    /// Dense projector of a device; joint-line operators act on the full
    /// space, party-line operators on that party alone.
    pub fn projector<T: Real>(&self, line: usize, column: usize) -> ComplexMatrix<T> {
        match self.operator(line, column) {
            DeviceOperator::Joint { column } => {
                let d = self.columns();
                diag_unit(d, column)
            }
            DeviceOperator::Party { party, digit } => diag_unit(self.dims[party], digit),
        }
    }

    /// Ket-bra rendering, e.g. `|010><010|` or `|1><1|`.
    pub fn render(&self, line: usize, column: usize) -> String {
        match self.operator(line, column) {
            DeviceOperator::Joint { column } => {
                let l = &self.labels[column];
                format!("|{l}><{l}|")
            }
            DeviceOperator::Party { digit, .. } => format!("|{digit}><{digit}|"),
        }
    }

    /// `A_1i = A_2i ⊗ A_3i ⊗ ⋯` for every column.
    pub fn reconstruction_holds(&self) -> bool {
        (0..self.columns()).all(|i| {
            let joint: ComplexMatrix<f64> = self.projector(0, i);
            let product = (1..self.lines())
                .fold(ComplexMatrix::identity(1), |acc, j| acc.kron(&self.projector::<f64>(j, i)));
            joint == product
        })
    }
}

fn diag_unit<T: Real>(d: usize, at: usize) -> ComplexMatrix<T> {
    ComplexMatrix::from_fn(d, d, |r, c| if r == at && c == at { re(T::one()) } else { re(T::zero()) })
}

pub fn device_table(dims: &[usize]) -> Result<DeviceTable> {
    check_dims(dims)?;
    let layout = Layout::new(dims);
    let party_bits: Vec<Vec<usize>> = (0..layout.total()).map(|i| layout.digits(i)).collect();
    let labels = party_bits.iter().map(|d| digit_label(d, dims)).collect();
    Ok(DeviceTable { dims: dims.to_vec(), party_bits, labels })
}
