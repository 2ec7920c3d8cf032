//! Weak values, matrix-element reconstruction and the correlation functional
//! `C = Σ_k P_k Σ_i |W_1ki − Π_j W_jki|`.

use serde::{Deserialize, Serialize};

use crate::bases::{device_table, BasisSet};
use crate::conveyance::{broadcast_all, convey, ConveyMode};
use crate::error::{Error, Result};
use crate::pointer::{couple_all, postselect_and_read, weak_limit, LineLayout, PointerConfig};
use crate::qcore::{inner, ComplexMatrix, DensityMatrix, Layout, PureState};
use crate::scalar::{re, Cx, Real};

/// How weak values are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Closed-form weak values of the conveyed state and its marginals.
    #[default]
    Analytic,
    /// Full pipeline: conveyance, broadcast, pointer coupling, postselection, readout.
    Circuit,
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Backend::Analytic => "analytic",
            Backend::Circuit => "circuit",
        })
    }
}

/// `⟨ψ_fin|A|ψ_in⟩ / ⟨ψ_fin|ψ_in⟩`
pub fn weak_value_pure<T: Real>(psi_in: &PureState<T>, psi_fin: &PureState<T>, a: &ComplexMatrix<T>) -> Result<Cx<T>> {
    if psi_in.dims() != psi_fin.dims() || a.rows() != psi_in.dim() || a.cols() != psi_in.dim() {
        return Err(Error::ShapeMismatch("weak value operands differ in shape".into()));
    }
    let overlap = psi_fin.inner(psi_in);
    if overlap.norm() <= T::null_threshold() {
        return Err(Error::NullPostselection(overlap.norm().to_f64().unwrap_or(f64::NAN)));
    }
    Ok(a.sandwich(psi_fin.amplitudes(), psi_in.amplitudes()) / overlap)
}

/// `tr(|b⟩⟨b|ρ)`
pub fn postselection_probability<T: Real>(rho: &DensityMatrix<T>, b: &PureState<T>) -> Result<T> {
    if rho.dims() != b.dims() {
        return Err(Error::ShapeMismatch(format!("state dims {:?} vs postselection dims {:?}", rho.dims(), b.dims())));
    }
    Ok(rho.expectation_in(b.amplitudes()).max(T::zero()).min(T::one()))
}

/// `tr(|b⟩⟨b| A ρ) / tr(|b⟩⟨b| ρ)`
pub fn analytic_weak_value<T: Real>(rho: &DensityMatrix<T>, a: &ComplexMatrix<T>, b: &PureState<T>) -> Result<Cx<T>> {
    if a.rows() != rho.dim() || a.cols() != rho.dim() {
        return Err(Error::ShapeMismatch("observable does not match the state".into()));
    }
    let p = postselection_probability(rho, b)?;
    if p < T::null_threshold() {
        return Err(Error::NullPostselection(p.to_f64().unwrap_or(f64::NAN)));
    }
    let rho_b = rho.matrix().mul_vec(b.amplitudes());
    let a_rho_b = a.mul_vec(&rho_b);
    Ok(inner(b.amplitudes(), &a_rho_b) / re(p))
}

/// Weak value of the computational projector `|i⟩⟨i|`, skipping the dense product.
fn computational_weak_value<T: Real>(rho: &DensityMatrix<T>, i: usize, b: &[Cx<T>], p: T) -> Cx<T> {
    let row_i: Cx<T> = (0..rho.dim()).fold(re(T::zero()), |acc, c| acc + rho.element(i, c) * b[c]);
    b[i].conj() * row_i / re(p)
}

/// `⟨a_i|ρ|a_j⟩` recovered as `Σ_k P_k (β_kj / β_ki) W_ki` with `β_kx = ⟨b_k|a_x⟩`.
pub fn reconstruct_element<T: Real>(
    i: usize,
    j: usize,
    rho: &DensityMatrix<T>,
    measured: &BasisSet<T>,
    postselected: &BasisSet<T>,
) -> Result<Cx<T>> {
    if measured.dims() != rho.dims() || postselected.dims() != rho.dims() {
        return Err(Error::ShapeMismatch("bases do not match the state".into()));
    }
    if i >= measured.len() || j >= measured.len() {
        return Err(Error::BadSize(format!("element ({i},{j}) out of range {}", measured.len())));
    }
    let (ai, aj) = (measured.vector(i), measured.vector(j));
    let projector = ai.projector();
    let mut acc = re(T::zero());
    for (k, b) in postselected.vectors().iter().enumerate() {
        let beta_i = b.inner(ai);
        if beta_i.norm() <= T::null_threshold() {
            return Err(Error::UnbiasednessViolation(format!("<b_{k}|a_{i}> vanishes")));
        }
        let p = postselection_probability(rho, b)?;
        if p < T::null_threshold() {
            continue;
        }
        let w = analytic_weak_value(rho, &projector, b)?;
        acc = acc + re(p) * (b.inner(aj) / beta_i) * w;
    }
    Ok(acc)
}

/// Every `⟨a_i|ρ|a_j⟩` by [`reconstruct_element`].
pub fn reconstruct_matrix<T: Real>(
    rho: &DensityMatrix<T>,
    measured: &BasisSet<T>,
    postselected: &BasisSet<T>,
) -> Result<ComplexMatrix<T>> {
    let d = measured.len();
    let mut entries = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            entries.push(reconstruct_element(i, j, rho, measured, postselected)?);
        }
    }
    ComplexMatrix::new(d, d, entries)
}

/// `Σ_i |ρ_ii − Π_X (ρ_X)_{x_i x_i}|`, twice the computational-basis diagonal
/// distance between `ρ` and the product of its marginals.
pub fn correlation_oracle_diag<T: Real>(rho: &DensityMatrix<T>) -> Result<T> {
    let layout = Layout::new(rho.dims());
    let marginals: Vec<Vec<T>> =
        (0..rho.dims().len()).map(|p| rho.marginal(p).map(|m| m.populations())).collect::<Result<_>>()?;
    Ok(rho.populations().iter().enumerate().fold(T::zero(), |acc, (i, &rii)| {
        let prod = layout.digits(i).iter().zip(&marginals).fold(T::one(), |pr, (&x, m)| pr * m[x]);
        acc + (rii - prod).abs()
    }))
}

/// Weak values `W[line][k][column]` and postselection probabilities `P[k]`.
/// Skipped postselections have no weak values.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakValueTable<T: Real> {
    pub lines: usize,
    pub columns: usize,
    pub probabilities: Vec<T>,
    /// `values[k]` is `[line][column]`, `None` when `k` was skipped.
    pub values: Vec<Option<Vec<Vec<Cx<T>>>>>,
}

impl<T: Real> WeakValueTable<T> {
    pub fn get(&self, line: usize, k: usize, column: usize) -> Option<Cx<T>> {
        self.values[k].as_ref().map(|v| v[line][column])
    }

    /// `max_i |Σ_k P_k W_1ki − ⟨a_i|ρ|a_i⟩|`
    pub fn completeness_residual(&self, line_state: &DensityMatrix<T>) -> T {
        let pops = line_state.populations();
        (0..self.columns).fold(T::zero(), |worst, i| {
            let sum = self
                .values
                .iter()
                .zip(&self.probabilities)
                .filter_map(|(v, &p)| v.as_ref().map(|v| v[0][i] * re(p)))
                .fold(re(T::zero()), |a, b| a + b);
            worst.max((sum - re(pops[i])).norm())
        })
    }
}

/// Ancilla readings used along the pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcomes {
    /// One reading per conveyed party (all but the last).
    pub convey: Vec<usize>,
    /// Common reading of every broadcast meter.
    pub broadcast: usize,
}

impl Outcomes {
    pub fn zero(parties: usize) -> Self {
        Self { convey: vec![0; parties.saturating_sub(1)], broadcast: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct CorrelationOptions<T: Real> {
    pub backend: Backend,
    pub mode: ConveyMode,
    pub pointer: PointerConfig<T>,
    pub outcomes: Outcomes,
    /// Couple the single-party lines straight to the line-1 particles.
    pub skip_broadcast: bool,
    /// Product basis unbiased to the computational one; Hadamard products when `None`.
    pub postselection: Option<BasisSet<T>>,
}

impl<T: Real> CorrelationOptions<T> {
    pub fn new(backend: Backend, mode: ConveyMode, pointer: PointerConfig<T>, parties: usize) -> Self {
        Self { backend, mode, pointer, outcomes: Outcomes::zero(parties), skip_broadcast: false, postselection: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PostselectionTerm<T: Real> {
    pub k: usize,
    pub label: String,
    pub probability: T,
    /// `Σ_i |W_1ki − Π_j W_jki|`; zero when skipped.
    pub deviation: T,
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport<T: Real> {
    pub value: T,
    pub terms: Vec<PostselectionTerm<T>>,
    pub weak_values: WeakValueTable<T>,
    pub backend: Backend,
    pub mode: ConveyMode,
    pub outcomes: Outcomes,
    pub conveyance_probability: T,
    pub oracle_diag: T,
    pub skipped: Vec<usize>,
    pub max_completeness_residual: T,
    pub min_postselection_probability: T,
    /// Circuit backend: `max |W(g) − W(g → 0)|` over all devices and
    /// postselections on the same coupled state. Zero for the analytic backend.
    pub weak_limit_residual: T,
}

/// Runs the protocol on `rho` and assembles the correlation functional.
pub fn correlation<T: Real>(rho: &DensityMatrix<T>, opts: &CorrelationOptions<T>) -> Result<CorrelationReport<T>> {
    let dims = rho.dims().to_vec();
    let n = dims.len();
    let basis = match &opts.postselection {
        Some(b) => b.clone(),
        None => {
            if dims.iter().any(|&d| d != 2) {
                return Err(Error::BadDimension("the built-in postselection basis needs qubit parties".into()));
            }
            crate::bases::hadamard_mub(n)?
        }
    };
    if basis.dims() != dims.as_slice() {
        return Err(Error::ShapeMismatch(format!("postselection dims {:?} vs state dims {dims:?}", basis.dims())));
    }
    let table = device_table(&dims)?;
    let record = convey(rho, &opts.outcomes.convey, opts.mode)?;
    let conveyed = record.state;
    let mut probability = record.probability;

    let lines = table.lines();
    let columns = table.columns();
    let mut probabilities = Vec::with_capacity(basis.len());
    let mut values = Vec::with_capacity(basis.len());
    let mut limit_residual = T::zero();

    let line_state = match opts.backend {
        Backend::Analytic => {
            if !basis.is_product() {
                return Err(Error::NonFactorablePostselection(
                    "the analytic backend needs product postselection states".into(),
                ));
            }
            let marginals: Vec<DensityMatrix<T>> = (0..n).map(|p| conveyed.marginal(p)).collect::<Result<_>>()?;
            for (k, b) in basis.vectors().iter().enumerate() {
                let p = postselection_probability(&conveyed, b)?;
                probabilities.push(p);
                values.push(analytic_row(&conveyed, &marginals, &basis, &table, k, p)?);
            }
            conveyed
        }
        Backend::Circuit => {
            let (state, layout) = if opts.skip_broadcast {
                (conveyed, LineLayout::Direct)
            } else {
                let wide = broadcast_all(&conveyed, opts.outcomes.broadcast)?;
                probability = probability * wide.probability;
                (wide.state, LineLayout::Copies)
            };
            let bs = couple_all(&state, &table, layout)?;
            for b in basis.vectors() {
                match postselect_and_read(&bs, b, &opts.pointer) {
                    Ok(r) => {
                        let w = r.weak_values(&opts.pointer);
                        if let Ok((limit, _)) = weak_limit(&bs, b) {
                            for (row, lrow) in w.iter().zip(&limit) {
                                for (x, y) in row.iter().zip(lrow) {
                                    limit_residual = limit_residual.max((*x - *y).norm());
                                }
                            }
                        }
                        probabilities.push(r.postselection_probability);
                        values.push(Some(w));
                    }
                    Err(Error::NullPostselection(p)) => {
                        probabilities.push(T::lit(p.max(0.0)));
                        values.push(None);
                    }
                    Err(e) => return Err(e),
                }
            }
            bs.line_state()?
        }
    };

    let weak_values = WeakValueTable { lines, columns, probabilities, values };
    let mut terms = Vec::with_capacity(basis.len());
    let mut total = T::zero();
    for (k, label) in basis.labels().iter().enumerate() {
        let p = weak_values.probabilities[k];
        let (deviation, skipped) = match &weak_values.values[k] {
            None => (T::zero(), true),
            Some(w) => {
                let dev = (0..columns).fold(T::zero(), |acc, i| {
                    let prod = (1..lines).fold(re(T::one()), |pr, j| pr * w[j][i]);
                    acc + (w[0][i] - prod).norm()
                });
                (dev, false)
            }
        };
        total = total + p * deviation;
        terms.push(PostselectionTerm { k, label: label.clone(), probability: p, deviation, skipped });
    }
    let skipped = terms.iter().filter(|t| t.skipped).map(|t| t.k).collect();
    let min_p = weak_values.probabilities.iter().copied().fold(T::infinity(), T::min);
    Ok(CorrelationReport {
        value: total,
        max_completeness_residual: weak_values.completeness_residual(&line_state),
        weak_values,
        terms,
        backend: opts.backend,
        mode: opts.mode,
        outcomes: opts.outcomes.clone(),
        conveyance_probability: probability,
        oracle_diag: correlation_oracle_diag(rho)?,
        skipped,
        min_postselection_probability: min_p,
        weak_limit_residual: limit_residual,
    })
}

/// Line 1 from the joint state, lines 2.. from each marginal postselected on
/// its own factor of `b_k`. `None` when `b_k` (or a factor) is never seen.
fn analytic_row<T: Real>(
    joint: &DensityMatrix<T>,
    marginals: &[DensityMatrix<T>],
    basis: &BasisSet<T>,
    table: &crate::bases::DeviceTable,
    k: usize,
    p: T,
) -> Result<Option<Vec<Vec<Cx<T>>>>> {
    if p < T::null_threshold() {
        return Ok(None);
    }
    let b = basis.vector(k).amplitudes();
    let mut rows = vec![(0..table.columns()).map(|i| computational_weak_value(joint, i, b, p)).collect::<Vec<_>>()];
    for (party, marginal) in marginals.iter().enumerate() {
        let factor = basis.factor(k, party).expect("product basis");
        let pf = postselection_probability(marginal, factor)?;
        if pf < T::null_threshold() {
            return Ok(None);
        }
        let per_digit: Vec<Cx<T>> =
            (0..marginal.dim()).map(|x| computational_weak_value(marginal, x, factor.amplitudes(), pf)).collect();
        rows.push((0..table.columns()).map(|i| per_digit[table.party_bits(i)[party]]).collect());
    }
    Ok(Some(rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bases::{computational_basis, hadamard_mub};
    use crate::scalar::cx;

    fn ket(dims: &[usize], amps: &[f64]) -> PureState<f64> {
        PureState::normalized(dims.to_vec(), amps.iter().map(|&a| re(a)).collect()).unwrap()
    }

    fn ghz() -> DensityMatrix<f64> {
        ket(&[2, 2, 2], &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]).to_density()
    }

    fn proj(dim: usize, i: usize) -> ComplexMatrix<f64> {
        PureState::basis(vec![dim], i).unwrap().projector()
    }

    #[test]
    fn pure_weak_values() {
        let plus = ket(&[2], &[1.0, 1.0]);
        let a = proj(2, 0);
        let expect = weak_value_pure(&plus, &plus, &a).unwrap();
        assert!((expect - re(0.5)).norm() < 1e-15);
        // ⟨f|0⟩⟨0|+⟩/⟨f|+⟩ = (2/√5 · 1/√2) / (1/√5 · 1/√2)
        let fin = ket(&[2], &[2.0, -1.0]);
        assert!((weak_value_pure(&plus, &fin, &a).unwrap() - re(2.0)).norm() < 1e-14);
        let zero = ket(&[2], &[1.0, 0.0]);
        let one = ket(&[2], &[0.0, 1.0]);
        assert_eq!(weak_value_pure(&zero, &one, &a).unwrap_err().code(), "null-postselection");
    }

    #[test]
    fn ghz_weak_values_and_probabilities() {
        let had = hadamard_mub::<f64>(3).unwrap();
        let rho = ghz();
        let w = analytic_weak_value(&rho, &proj(8, 0), had.vector(0)).unwrap();
        assert!((w - re(0.5)).norm() < 1e-15);
        let w = analytic_weak_value(&rho, &proj(8, 2), had.vector(0)).unwrap();
        assert!(w.norm() < 1e-15);
        assert_eq!(analytic_weak_value(&rho, &proj(8, 0), had.vector(1)).unwrap_err().code(), "null-postselection");

        assert!((postselection_probability(&rho, had.vector(0)).unwrap() - 0.25).abs() < 1e-15);
        assert!(postselection_probability(&rho, had.vector(1)).unwrap().abs() < 1e-15);
        let mixed = DensityMatrix::maximally_mixed(vec![2, 2, 2]).unwrap();
        for b in had.vectors() {
            assert!((postselection_probability(&mixed, b).unwrap() - 0.125).abs() < 1e-15);
        }
    }

    #[test]
    fn reconstruction_of_ghz_coherence() {
        let comp = computational_basis::<f64>(&[2, 2, 2]).unwrap();
        let had = hadamard_mub::<f64>(3).unwrap();
        let rho = ghz();
        assert!((reconstruct_element(0, 7, &rho, &comp, &had).unwrap() - re(0.5)).norm() < 1e-14);
        assert!((reconstruct_element(3, 3, &rho, &comp, &had).unwrap()).norm() < 1e-14);
        // a basis that is not unbiased to the computational one
        assert_eq!(reconstruct_element(0, 7, &rho, &comp, &comp).unwrap_err().code(), "unbiasedness-violation");
    }

    #[test]
    fn oracle_diag_fixtures() {
        assert!((correlation_oracle_diag(&ghz()).unwrap() - 1.5).abs() < 1e-15);
        let classical = DensityMatrix::<f64>::classical(vec![2, 2, 2], &[0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5]).unwrap();
        assert!((correlation_oracle_diag(&classical).unwrap() - 1.5).abs() < 1e-15);
        let product = ket(&[2], &[0.3, 0.7])
            .to_density()
            .tensor(&ket(&[2], &[1.0, 0.2]).to_density())
            .tensor(&DensityMatrix::maximally_mixed(vec![2]).unwrap());
        assert!(correlation_oracle_diag(&product).unwrap() < 1e-15);
    }

    #[test]
    fn ghz_report_skips_zero_overlap_rows() {
        let cfg = PointerConfig::with_default_sigma(1e-3).unwrap();
        let opts = CorrelationOptions::new(Backend::Analytic, ConveyMode::Idealized, cfg, 3);
        let report = correlation(&ghz(), &opts).unwrap();
        assert!((report.value - 1.5).abs() < 1e-12);
        assert_eq!(report.skipped, vec![1, 2, 4, 7]);
        assert!(report.max_completeness_residual < 1e-12);
    }

    #[test]
    fn analytic_backend_rejects_entangled_postselection() {
        let comp = computational_basis::<f64>(&[2, 2]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell: Vec<PureState<f64>> = [[h, 0.0, 0.0, h], [h, 0.0, 0.0, -h], [0.0, h, h, 0.0], [0.0, h, -h, 0.0]]
            .iter()
            .map(|a| PureState::new(vec![2, 2], a.iter().map(|&x| re(x)).collect()).unwrap())
            .collect();
        let basis = BasisSet::new(vec![2, 2], bell, comp.labels().to_vec()).unwrap();
        let cfg = PointerConfig::with_default_sigma(1e-3).unwrap();
        let mut opts = CorrelationOptions::new(Backend::Analytic, ConveyMode::Idealized, cfg, 2);
        opts.postselection = Some(basis.clone());
        let rho = DensityMatrix::<f64>::random(&[2, 2], 1).unwrap();
        assert_eq!(correlation(&rho, &opts).unwrap_err().code(), "non-factorable-postselection");
        opts.backend = Backend::Circuit;
        assert!(correlation(&rho, &opts).is_ok());
    }

    #[test]
    fn complex_weak_values_enter_through_the_modulus() {
        let psi = PureState::normalized(vec![2, 2], vec![re(1.0), cx(0.0, 1.0), re(0.5), cx(0.3, -0.2)]).unwrap();
        let cfg = PointerConfig::with_default_sigma(1e-3).unwrap();
        let opts = CorrelationOptions::new(Backend::Analytic, ConveyMode::Idealized, cfg, 2);
        let report = correlation(&psi.to_density(), &opts).unwrap();
        let has_complex = report.weak_values.values.iter().flatten().flatten().flatten().any(|w: &Cx<f64>| w.im.abs() > 1e-3);
        assert!(has_complex);
        assert!(report.value >= 0.0);
    }
}
