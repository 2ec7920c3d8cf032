use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::matrix::ComplexMatrix;
use super::subsystems::{check_dims, Layout};
use crate::bases::BasisSet;
use crate::error::{Error, Result};
use crate::scalar::{cx, re, Cx, Real};

/// Normalized state vector on a tensor-factored space.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState<T: Real> {
    dims: Vec<usize>,
    amplitudes: Vec<Cx<T>>,
}

impl<T: Real> PureState<T> {
    pub fn new(dims: Vec<usize>, amplitudes: Vec<Cx<T>>) -> Result<Self> {
        check_dims(&dims)?;
        let total: usize = dims.iter().product();
        if amplitudes.len() != total {
            return Err(Error::ShapeMismatch(format!(
                "{} amplitudes for total dimension {total}",
                amplitudes.len()
            )));
        }
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Invariant("state has non-finite amplitudes".into()));
        }
        let norm2 = norm_sqr(&amplitudes);
        if (norm2 - T::one()).abs() > T::structural_tol() {
            return Err(Error::Invariant(format!("normalization: squared norm is {norm2}")));
        }
        Ok(Self { dims, amplitudes })
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(dims: Vec<usize>, amplitudes: Vec<Cx<T>>) -> Result<Self> {
        let norm2 = norm_sqr(&amplitudes);
        if !(norm2.is_finite() && norm2 > T::zero()) {
            return Err(Error::Invariant("cannot normalize a zero or non-finite vector".into()));
        }
        let s = re(T::one() / norm2.sqrt());
        Self::new(dims, amplitudes.into_iter().map(|z| z * s).collect())
    }

    /// Computational basis vector `|index⟩`.
    pub fn basis(dims: Vec<usize>, index: usize) -> Result<Self> {
        check_dims(&dims)?;
        let total: usize = dims.iter().product();
        if index >= total {
            return Err(Error::BadSize(format!("basis index {index} out of range {total}")));
        }
        let mut amps = vec![re(T::zero()); total];
        amps[index] = re(T::one());
        Ok(Self { dims, amplitudes: amps })
    }

    pub(crate) fn from_raw(dims: Vec<usize>, amplitudes: Vec<Cx<T>>) -> Self {
        Self { dims, amplitudes }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Cx<T>] {
        &self.amplitudes
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for &a in &self.amplitudes {
            for &b in &other.amplitudes {
                amps.push(a * b);
            }
        }
        let dims = self.dims.iter().chain(&other.dims).copied().collect();
        Self { dims, amplitudes: amps }
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &Self) -> Cx<T> {
        inner(&self.amplitudes, &other.amplitudes)
    }

    pub fn projector(&self) -> ComplexMatrix<T> {
        ComplexMatrix::outer(&self.amplitudes, &self.amplitudes)
    }

    pub fn to_density(&self) -> DensityMatrix<T> {
        DensityMatrix::from_raw(self.dims.clone(), self.projector())
    }

    pub fn apply(&self, unitary: &ComplexMatrix<T>) -> Result<Self> {
        if unitary.rows() != self.dim() || unitary.cols() != self.dim() {
            return Err(Error::ShapeMismatch("unitary does not match state dimension".into()));
        }
        Self::new(self.dims.clone(), unitary.mul_vec(&self.amplitudes))
    }
}

pub(crate) fn inner<T: Real>(u: &[Cx<T>], v: &[Cx<T>]) -> Cx<T> {
    u.iter().zip(v).fold(re(T::zero()), |acc, (&a, &b)| acc + a.conj() * b)
}

fn norm_sqr<T: Real>(v: &[Cx<T>]) -> T {
    v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
}

/// Hermitian, unit-trace, positive semidefinite operator on a tensor-factored space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T: Real> {
    dims: Vec<usize>,
    matrix: ComplexMatrix<T>,
}

impl<T: Real> DensityMatrix<T> {
    /// Validates every density-matrix invariant, naming the first one violated.
    pub fn new(dims: Vec<usize>, matrix: ComplexMatrix<T>) -> Result<Self> {
        let rho = Self::checked_shape(dims, matrix)?;
        rho.validate()?;
        Ok(rho)
    }

    fn checked_shape(dims: Vec<usize>, matrix: ComplexMatrix<T>) -> Result<Self> {
        check_dims(&dims)?;
        let total: usize = dims.iter().product();
        if matrix.rows() != total || matrix.cols() != total {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} matrix for total dimension {total}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        Ok(Self { dims, matrix })
    }

    pub(crate) fn from_raw(dims: Vec<usize>, matrix: ComplexMatrix<T>) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), matrix.rows());
        Self { dims, matrix }
    }

    pub fn validate(&self) -> Result<()> {
        let herm = self.matrix.hermiticity_defect();
        if herm > T::structural_tol() {
            return Err(Error::Invariant(format!("hermiticity: defect {herm}")));
        }
        let tr = self.matrix.trace();
        if (tr.re - T::one()).abs() > T::structural_tol() || tr.im.abs() > T::structural_tol() {
            return Err(Error::Invariant(format!("unit-trace: trace is {tr}")));
        }
        let min = self.matrix.hermitian_eigenvalues()?.first().copied().unwrap_or_else(T::zero);
        if min < -T::spectral_tol() {
            return Err(Error::Invariant(format!("positive-semidefinite: eigenvalue {min}")));
        }
        Ok(())
    }

    /// `Σ p_n |ψ_n⟩⟨ψ_n|`
    pub fn from_mixture(terms: &[(T, PureState<T>)]) -> Result<Self> {
        let Some((_, first)) = terms.first() else {
            return Err(Error::BadSize("empty pure-state decomposition".into()));
        };
        let dims = first.dims().to_vec();
        let mut acc = ComplexMatrix::zeros(first.dim(), first.dim());
        for (p, psi) in terms {
            if psi.dims() != dims.as_slice() {
                return Err(Error::ShapeMismatch("decomposition members differ in dims".into()));
            }
            acc = &acc + &psi.projector().scale(re(*p));
        }
        Self::new(dims, acc)
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims)?;
        let d: usize = dims.iter().product();
        let w = re(T::one() / T::from_usize(d).unwrap());
        Ok(Self::from_raw(dims, ComplexMatrix::identity(d).scale(w)))
    }

    /// State diagonal in the computational basis with the given populations.
    pub fn classical(dims: Vec<usize>, populations: &[T]) -> Result<Self> {
        let d: usize = dims.iter().product();
        if populations.len() != d {
            return Err(Error::ShapeMismatch("population count differs from dimension".into()));
        }
        let m = ComplexMatrix::from_fn(d, d, |r, c| if r == c { re(populations[r]) } else { re(T::zero()) });
        Self::new(dims, m)
    }

    /// Seeded `GG†/tr(GG†)` with `G` a complex Gaussian matrix.
    pub fn random(dims: &[usize], seed: u64) -> Result<Self> {
        check_dims(dims)?;
        if dims.iter().any(|&d| d < 2) {
            return Err(Error::BadDimension("random states need every subsystem of dimension >= 2".into()));
        }
        let d: usize = dims.iter().product();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = ComplexMatrix::from_fn(d, d, |_, _| {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            cx(T::lit(a), T::lit(b))
        });
        let gg = &g * &g.adjoint();
        let tr = gg.trace().re;
        Ok(Self::from_raw(dims.to_vec(), gg.scale(re(T::one() / tr))))
    }

    /// Seeded state with Gaussian-random populations and no coherences.
    pub fn random_diagonal(dims: &[usize], seed: u64) -> Result<Self> {
        let full = Self::random(dims, seed)?;
        let pops: Vec<T> = full.populations();
        Self::classical(dims.to_vec(), &pops)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    pub fn element(&self, r: usize, c: usize) -> Cx<T> {
        self.matrix.get(r, c)
    }

    /// Computational-basis diagonal.
    pub fn populations(&self) -> Vec<T> {
        self.matrix.diagonal().into_iter().map(|z| z.re).collect()
    }

    pub fn eigenvalues(&self) -> Result<Vec<T>> {
        self.matrix.hermitian_eigenvalues()
    }

    /// `⟨v|ρ|v⟩`
    pub fn expectation_in(&self, v: &[Cx<T>]) -> T {
        self.matrix.sandwich(v, v).re
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let dims = self.dims.iter().chain(&other.dims).copied().collect();
        Self::from_raw(dims, self.matrix.kron(&other.matrix))
    }

    /// Reduced state on `keep`, in the order given.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        let layout = Layout::new(&self.dims);
        let split = layout.split(keep)?;
        let kd = split.kept_offsets.len();
        let mut out = ComplexMatrix::zeros(kd, kd);
        for (r, &ro) in split.kept_offsets.iter().enumerate() {
            for (c, &co) in split.kept_offsets.iter().enumerate() {
                let mut acc = re(T::zero());
                for &to in &split.traced_offsets {
                    acc = acc + self.matrix.get(ro + to, co + to);
                }
                out.set(r, c, acc);
            }
        }
        let dims = keep.iter().map(|&k| self.dims[k]).collect();
        Ok(Self::from_raw(dims, out))
    }

    /// Single-party marginal.
    pub fn marginal(&self, party: usize) -> Result<Self> {
        self.partial_trace(&[party])
    }

    /// `ρ_1 ⊗ ρ_2 ⊗ ⋯` built from this state's own single-party marginals.
    pub fn product_of_marginals(&self) -> Result<Self> {
        let mut acc: Option<Self> = None;
        for p in 0..self.dims.len() {
            let m = self.marginal(p)?;
            acc = Some(match acc {
                None => m,
                Some(a) => a.tensor(&m),
            });
        }
        Ok(acc.expect("dims are nonempty"))
    }

    /// `UρU†`
    pub fn conjugate_by(&self, unitary: &ComplexMatrix<T>) -> Result<Self> {
        if unitary.rows() != self.dim() || unitary.cols() != self.dim() {
            return Err(Error::ShapeMismatch("unitary does not match state dimension".into()));
        }
        Ok(Self::from_raw(self.dims.clone(), &(unitary * &self.matrix) * &unitary.adjoint()))
    }

    /// Relabels computational basis states through the bijection `map`.
    pub(crate) fn permute_basis(&self, map: impl Fn(usize) -> usize) -> Self {
        let d = self.dim();
        let perm: Vec<usize> = (0..d).map(&map).collect();
        let mut out = ComplexMatrix::zeros(d, d);
        for r in 0..d {
            for c in 0..d {
                out.set(perm[r], perm[c], self.matrix.get(r, c));
            }
        }
        Self::from_raw(self.dims.clone(), out)
    }

    /// Projects `subsystem` onto computational label `label` and removes it.
    ///
    /// Returns the Born probability and the renormalized remainder.
    pub(crate) fn project_and_remove(&self, subsystem: usize, label: usize) -> Result<(T, Self)> {
        let layout = Layout::new(&self.dims);
        if subsystem >= self.dims.len() {
            return Err(Error::BadSubsystem(format!("subsystem {subsystem} of {}", self.dims.len())));
        }
        if label >= self.dims[subsystem] {
            return Err(Error::BadSize(format!("label {label} on a subsystem of dimension {}", self.dims[subsystem])));
        }
        if self.dims.len() == 1 {
            return Err(Error::BadSubsystem("cannot remove the only subsystem".into()));
        }
        let keep: Vec<usize> = (0..self.dims.len()).filter(|&s| s != subsystem).collect();
        let split = layout.split(&keep)?;
        let fixed = label * layout.stride(subsystem);
        let kd = split.kept_offsets.len();
        let mut out = ComplexMatrix::zeros(kd, kd);
        let mut prob = T::zero();
        for (r, &ro) in split.kept_offsets.iter().enumerate() {
            for (c, &co) in split.kept_offsets.iter().enumerate() {
                let z = self.matrix.get(ro + fixed, co + fixed);
                if r == c {
                    prob = prob + z.re;
                }
                out.set(r, c, z);
            }
        }
        if prob <= T::null_threshold() {
            return Err(Error::ImpossibleOutcome(format!(
                "label {label} on subsystem {subsystem} has probability {prob}"
            )));
        }
        let dims = keep.iter().map(|&k| self.dims[k]).collect();
        Ok((prob, Self::from_raw(dims, out.scale(re(T::one() / prob)))))
    }

    /// Trace distance `½ Σ |λ(ρ − σ)|`.
    pub fn trace_distance(&self, other: &Self) -> Result<T> {
        self.same_shape(other)?;
        let diff = &self.matrix - &other.matrix;
        let half = T::lit(0.5);
        let d = diff.hermitian_eigenvalues()?.into_iter().fold(T::zero(), |acc, e| acc + e.abs()) * half;
        Ok(d.min(T::one()))
    }

    /// `½ Σ_i |⟨a_i|ρ|a_i⟩ − ⟨a_i|σ|a_i⟩|` over the vectors of `basis`.
    pub fn diagonal_distance(&self, other: &Self, basis: &BasisSet<T>) -> Result<T> {
        self.same_shape(other)?;
        if basis.dims() != self.dims.as_slice() {
            return Err(Error::ShapeMismatch("basis does not span this space".into()));
        }
        let sum = basis.vectors().iter().fold(T::zero(), |acc, v| {
            acc + (self.expectation_in(v.amplitudes()) - other.expectation_in(v.amplitudes())).abs()
        });
        Ok(sum * T::lit(0.5))
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::ShapeMismatch(format!("dims {:?} vs {:?}", self.dims, other.dims)));
        }
        Ok(())
    }
}
