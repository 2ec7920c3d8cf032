//! Strong-coupling state conveyance and broadcast fan-out.
//!
//! Conveyance moves every party but the last onto ancillas held by the last
//! party's owner: each party is shifted into half of a maximally entangled
//! pair, the shifted half is measured, and the original particle is discarded.
//! Broadcast equips a particle with a computational-basis-correlated copy the
//! same way, keeping the original.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{DensityMatrix, Layout, PureState};
use crate::scalar::{re, Real};

/// Which maximally entangled pair the ancillas start in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AncillaVariant {
    /// `Σ_m |m⟩|m⟩ / √l`
    #[default]
    Standard,
    /// `Σ_m |m⟩|m+1⟩ / √l`; for qubits `(|01⟩ + |10⟩)/√2`.
    Flip,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AncillaPair<T: Real> {
    pub dim: usize,
    pub variant: AncillaVariant,
    pub state: PureState<T>,
}

/// How the conveyed state is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConveyMode {
    /// Run the ancilla circuit gate by gate.
    Literal,
    /// Relabel the input directly: identity for zero outcomes, a local
    /// computational shift by each outcome otherwise.
    #[default]
    Idealized,
}

impl std::fmt::Display for ConveyMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ConveyMode::Literal => "literal",
            ConveyMode::Idealized => "idealized",
        })
    }
}

/// Post-measurement state together with the outcomes that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ConveyanceRecord<T: Real> {
    pub state: DensityMatrix<T>,
    pub outcomes: Vec<usize>,
    /// Born probability of `outcomes`.
    pub probability: T,
}

pub fn bell_state<T: Real>(l: usize, variant: AncillaVariant) -> Result<AncillaPair<T>> {
    if l < 2 {
        return Err(Error::BadDimension(format!("ancilla dimension {l} < 2")));
    }
    let amp = re(T::one() / T::from_usize(l).unwrap().sqrt());
    let mut amps = vec![re(T::zero()); l * l];
    for m in 0..l {
        let partner = match variant {
            AncillaVariant::Standard => m,
            AncillaVariant::Flip => (m + 1) % l,
        };
        amps[m * l + partner] = amp;
    }
    Ok(AncillaPair { dim: l, variant, state: PureState::new(vec![l, l], amps)? })
}

/// Controlled shift `|x⟩|m⟩ → |x⟩|m + x mod l⟩`, then a projective measurement
/// of `target` onto `outcome`. The measured subsystem is removed.
pub fn strong_couple_and_measure<T: Real>(
    joint: &DensityMatrix<T>,
    control: usize,
    target: usize,
    outcome: usize,
) -> Result<ConveyanceRecord<T>> {
    let dims = joint.dims();
    if control >= dims.len() || target >= dims.len() {
        return Err(Error::BadSubsystem(format!("control {control} / target {target} of {}", dims.len())));
    }
    if control == target {
        return Err(Error::BadSubsystem("control and target coincide".into()));
    }
    if dims[control] != dims[target] {
        return Err(Error::BadDimension(format!(
            "control dimension {} differs from target dimension {}",
            dims[control], dims[target]
        )));
    }
    let shifted = controlled_shift(joint, control, target);
    let (probability, state) = shifted.project_and_remove(target, outcome)?;
    Ok(ConveyanceRecord { state, outcomes: vec![outcome], probability })
}

fn controlled_shift<T: Real>(rho: &DensityMatrix<T>, control: usize, target: usize) -> DensityMatrix<T> {
    let layout = Layout::new(rho.dims());
    let l = rho.dims()[target];
    rho.permute_basis(|i| {
        let x = layout.digit(i, control);
        let m = layout.digit(i, target);
        layout.with_digit(i, target, (m + x) % l)
    })
}

/// Conveys an n-party state (n ≥ 2) onto the last party's side.
///
/// `outcomes[p]` is the ancilla reading for party `p < n − 1`. The result
/// keeps the original party order: the image of party `p` sits at index `p`.
pub fn convey<T: Real>(rho: &DensityMatrix<T>, outcomes: &[usize], mode: ConveyMode) -> Result<ConveyanceRecord<T>> {
    convey_with(rho, outcomes, mode, AncillaVariant::Standard)
}

pub fn convey_with<T: Real>(
    rho: &DensityMatrix<T>,
    outcomes: &[usize],
    mode: ConveyMode,
    variant: AncillaVariant,
) -> Result<ConveyanceRecord<T>> {
    let dims = rho.dims().to_vec();
    let n = dims.len();
    if n < 2 {
        return Err(Error::BadSize("conveyance needs at least two parties".into()));
    }
    if outcomes.len() != n - 1 {
        return Err(Error::BadSize(format!("{} outcomes for {} conveyed parties", outcomes.len(), n - 1)));
    }
    for (p, &nu) in outcomes.iter().enumerate() {
        if nu >= dims[p] {
            return Err(Error::BadSize(format!("outcome {nu} for party {p} of dimension {}", dims[p])));
        }
    }
    match mode {
        ConveyMode::Idealized => {
            let layout = Layout::new(&dims);
            let state = rho.permute_basis(|i| {
                (0..n - 1).fold(i, |idx, p| {
                    let x = layout.digit(idx, p);
                    layout.with_digit(idx, p, (x + outcomes[p]) % dims[p])
                })
            });
            let probability = dims[..n - 1].iter().fold(T::one(), |acc, &d| acc / T::from_usize(d).unwrap());
            Ok(ConveyanceRecord { state, outcomes: outcomes.to_vec(), probability })
        }
        ConveyMode::Literal => {
            // layout: parties, then (A_N, C_N) for each conveyed party
            let mut state = rho.clone();
            for &d in &dims[..n - 1] {
                state = state.tensor(&bell_state::<T>(d, variant)?.state.to_density());
            }
            let mut probability = T::one();
            for p in (0..n - 1).rev() {
                let rec = strong_couple_and_measure(&state, p, n + 2 * p, outcomes[p])?;
                probability = probability * rec.probability;
                state = rec.state;
            }
            // now: parties 0..n, then C_N for parties 0..n-1
            let keep: Vec<usize> = (0..n - 1).map(|p| n + p).chain(std::iter::once(n - 1)).collect();
            let state = state.partial_trace(&keep)?;
            Ok(ConveyanceRecord { state, outcomes: outcomes.to_vec(), probability })
        }
    }
}

/// Every outcome vector of a conveyance of a state with party dims `dims`.
pub fn convey_outcomes(dims: &[usize]) -> Vec<Vec<usize>> {
    let conveyed = &dims[..dims.len().saturating_sub(1)];
    let mut out = vec![Vec::new()];
    for &d in conveyed {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<usize>| {
                (0..d).map(move |x| {
                    let mut v = prefix.clone();
                    v.push(x);
                    v
                })
            })
            .collect();
    }
    out
}

/// Attaches a copy of `party` at the end of the dims list.
pub fn broadcast<T: Real>(rho: &DensityMatrix<T>, party: usize, outcome: usize) -> Result<ConveyanceRecord<T>> {
    broadcast_with(rho, party, outcome, AncillaVariant::Standard)
}

pub fn broadcast_with<T: Real>(
    rho: &DensityMatrix<T>,
    party: usize,
    outcome: usize,
    variant: AncillaVariant,
) -> Result<ConveyanceRecord<T>> {
    let n = rho.dims().len();
    if party >= n {
        return Err(Error::BadSubsystem(format!("party {party} of {n}")));
    }
    let pair = bell_state::<T>(rho.dims()[party], variant)?;
    // layout: ..., C', C''
    let extended = rho.tensor(&pair.state.to_density());
    strong_couple_and_measure(&extended, party, n + 1, outcome)
}

/// Broadcasts every party in order with the same reading `outcome`.
///
/// The result has the original parties first, then one copy per party.
pub fn broadcast_all<T: Real>(rho: &DensityMatrix<T>, outcome: usize) -> Result<ConveyanceRecord<T>> {
    let n = rho.dims().len();
    let mut state = rho.clone();
    let mut probability = T::one();
    for p in 0..n {
        let rec = broadcast(&state, p, outcome)?;
        probability = probability * rec.probability;
        state = rec.state;
    }
    Ok(ConveyanceRecord { state, outcomes: vec![outcome; n], probability })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::ComplexMatrix;
    use crate::scalar::{cx, Cx};

    fn ket(dims: &[usize], amps: &[f64]) -> PureState<f64> {
        PureState::normalized(dims.to_vec(), amps.iter().map(|&a| re(a)).collect()).unwrap()
    }

    #[test]
    fn bell_states() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let close = |got: &[Cx<f64>], want: [f64; 4]| got.iter().zip(want).all(|(z, w)| (z - re(w)).norm() < 1e-15);
        let b = bell_state::<f64>(2, AncillaVariant::Standard).unwrap();
        assert!(close(b.state.amplitudes(), [h, 0.0, 0.0, h]));
        let f = bell_state::<f64>(2, AncillaVariant::Flip).unwrap();
        assert!(close(f.state.amplitudes(), [0.0, h, h, 0.0]));
        let t = bell_state::<f64>(3, AncillaVariant::Standard).unwrap();
        let nz: Vec<usize> = (0..9).filter(|&i| t.state.amplitudes()[i].norm() > 0.0).collect();
        assert_eq!(nz, [0, 4, 8]);
        assert!((t.state.amplitudes()[4].re - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!(matches!(bell_state::<f64>(1, AncillaVariant::Standard), Err(Error::BadDimension(_))));
    }

    #[test]
    fn one_party_conveyed_onto_its_ancilla() {
        let (alpha, beta) = (0.6, 0.8);
        let input = ket(&[2], &[alpha, beta]).to_density();
        let pair = bell_state::<f64>(2, AncillaVariant::Standard).unwrap().state.to_density();
        let joint = input.tensor(&pair); // A, A_N, C_N1
        let rec = strong_couple_and_measure(&joint, 0, 1, 0).unwrap();
        assert!((rec.probability - 0.5).abs() < 1e-15);
        let want = ket(&[2, 2], &[alpha, 0.0, 0.0, beta]).to_density();
        assert!(rec.state.matrix().max_abs_diff(want.matrix()) < 1e-15);
    }

    #[test]
    fn classical_control_and_forbidden_branch() {
        let zero = ket(&[2], &[1.0, 0.0]).to_density();
        let pair = bell_state::<f64>(2, AncillaVariant::Standard).unwrap().state.to_density();
        let joint = zero.tensor(&pair);
        let rec = strong_couple_and_measure(&joint, 0, 1, 0).unwrap();
        assert!((rec.probability - 0.5).abs() < 1e-15);
        let want = ket(&[2, 2], &[1.0, 0.0, 0.0, 0.0]).to_density();
        assert!(rec.state.matrix().max_abs_diff(want.matrix()) < 1e-15);

        let single = ket(&[2, 2], &[1.0, 0.0, 0.0, 0.0]).to_density();
        let err = strong_couple_and_measure(&single, 0, 1, 1).unwrap_err();
        assert_eq!(err.code(), "impossible-outcome");
        assert_eq!(strong_couple_and_measure(&single, 1, 1, 0).unwrap_err().code(), "bad-subsystem");
    }

    #[test]
    fn literal_convey_of_classical_and_ghz_inputs() {
        let basis000 = PureState::<f64>::basis(vec![2, 2, 2], 0).unwrap().to_density();
        let rec = convey(&basis000, &[0, 0], ConveyMode::Literal).unwrap();
        assert!((rec.probability - 0.25).abs() < 1e-15);
        assert!(rec.state.matrix().max_abs_diff(basis000.matrix()) < 1e-15);

        let ghz = ket(&[2, 2, 2], &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]).to_density();
        let rec = convey(&ghz, &[0, 0], ConveyMode::Literal).unwrap();
        let pops = rec.state.populations();
        let want = [0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5];
        assert!(pops.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-15));
        // the coherence |000><111| does not survive the literal circuit
        assert!(rec.state.element(0, 7).norm() < 1e-15);
    }

    #[test]
    fn idealized_convey_is_identity_or_local_shift() {
        let rho = DensityMatrix::<f64>::random(&[2, 2, 2], 4).unwrap();
        let rec = convey(&rho, &[0, 0], ConveyMode::Idealized).unwrap();
        assert_eq!(rec.state, rho);
        let shifted = convey(&rho, &[1, 0], ConveyMode::Idealized).unwrap().state;
        let x = ComplexMatrix::new(2, 2, vec![cx(0.0, 0.0), cx(1.0, 0.0), cx(1.0, 0.0), cx(0.0, 0.0)]).unwrap();
        let u = crate::bases::embed_local(&[2, 2, 2], 0, &x).unwrap();
        assert!(shifted.matrix().max_abs_diff(rho.conjugate_by(&u).unwrap().matrix()) < 1e-15);
        assert!(convey(&rho, &[0], ConveyMode::Idealized).is_err());
        assert!(convey(&rho, &[0, 2], ConveyMode::Literal).is_err());
    }

    #[test]
    fn literal_and_idealized_agree_on_populations_for_every_outcome() {
        let rho = DensityMatrix::<f64>::random(&[2, 2, 2], 9).unwrap();
        for nu in convey_outcomes(rho.dims()) {
            let lit = convey(&rho, &nu, ConveyMode::Literal).unwrap();
            let ide = convey(&rho, &nu, ConveyMode::Idealized).unwrap();
            assert!((lit.probability - ide.probability).abs() < 1e-15);
            for (a, b) in lit.state.populations().iter().zip(ide.state.populations()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn flip_variant_conveys_a_relabeled_state() {
        let rho = DensityMatrix::<f64>::random(&[2, 2, 2], 2).unwrap();
        let rec = convey_with(&rho, &[0, 0], ConveyMode::Literal, AncillaVariant::Flip).unwrap();
        let ide = convey(&rho, &[1, 1], ConveyMode::Idealized).unwrap();
        for (a, b) in rec.state.populations().iter().zip(ide.state.populations()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn broadcast_examples() {
        let zero = ket(&[2], &[1.0, 0.0]).to_density();
        let rec = broadcast(&zero, 0, 0).unwrap();
        assert!((rec.probability - 0.5).abs() < 1e-15);
        let want = PureState::<f64>::basis(vec![2, 2], 0).unwrap().to_density();
        assert!(rec.state.matrix().max_abs_diff(want.matrix()) < 1e-15);

        let plus = ket(&[2], &[1.0, 1.0]).to_density();
        let rec = broadcast(&plus, 0, 0).unwrap();
        let bell = ket(&[2, 2], &[1.0, 0.0, 0.0, 1.0]).to_density();
        assert!(rec.state.matrix().max_abs_diff(bell.matrix()) < 1e-15);
        assert_eq!(broadcast(&plus, 1, 0).unwrap_err().code(), "bad-subsystem");
    }

    #[test]
    fn broadcast_all_appends_copies_in_party_order() {
        let rho = DensityMatrix::<f64>::random(&[2, 2, 2], 5).unwrap();
        let rec = broadcast_all(&rho, 0).unwrap();
        assert_eq!(rec.state.dims(), &[2; 6]);
        assert!((rec.probability - 0.125).abs() < 1e-15);
        let line = rec.state.partial_trace(&[0, 1, 2]).unwrap();
        let copies = rec.state.partial_trace(&[3, 4, 5]).unwrap();
        for ((a, b), c) in rho.populations().iter().zip(line.populations()).zip(copies.populations()) {
            assert!((a - b).abs() < 1e-12 && (a - c).abs() < 1e-12);
        }
    }
}
