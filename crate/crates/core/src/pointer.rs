//! Weak-coupling device matrix with Gaussian pointers.
//!
//! Every weak-measured observable is a computational-basis projector `A`, so
//! `exp(−i g A ⊗ P)` translates the pointer by `g` on the support of `A` and
//! leaves it alone elsewhere. The joint state after all couplings is therefore
//! `Σ ρ_LL' |L⟩⟨L'| ⊗ ⨂_d |φ(g s_d(L))⟩⟨φ(g s_d(L'))|` with `s_d(L) ∈ {0, 1}`,
//! and every pointer moment follows from Gaussian overlaps. Nothing is
//! truncated in `g`.

use crate::bases::{DeviceOperator, DeviceTable};
use crate::error::{Error, Result};
use crate::qcore::{ComplexMatrix, DensityMatrix, Layout, PureState};
use crate::scalar::{cx, re, Cx, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointerConfig<T: Real> {
    /// Coupling strength (pointer-position units).
    pub g: T,
    /// Initial position spread of the Gaussian pointer.
    pub sigma: T,
}

impl<T: Real> PointerConfig<T> {
    pub fn new(g: T, sigma: T) -> Result<Self> {
        if !(g.is_finite() && g > T::zero()) {
            return Err(Error::Invariant(format!("pointer coupling g must be positive, got {g}")));
        }
        if !(sigma.is_finite() && sigma > T::zero()) {
            return Err(Error::Invariant(format!("pointer spread sigma must be positive, got {sigma}")));
        }
        Ok(Self { g, sigma })
    }

    /// `σ = 1/√2`, for which `Im W = δp / g`.
    pub fn with_default_sigma(g: T) -> Result<Self> {
        Self::new(g, T::FRAC_1_SQRT_2())
    }

    /// `⟨φ_a|φ_b⟩` for pointers translated by `a` and `b`.
    pub fn overlap(&self, a: T, b: T) -> T {
        let d = a - b;
        (-(d * d) / (T::lit(8.0) * self.sigma * self.sigma)).exp()
    }
}

/// Where the single-party device lines find their particles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineLayout {
    /// State is `line-1 parties ⊗ one copy per party`; lines 2.. read the copies.
    Copies,
    /// State is the line-1 parties only; every line couples to them directly.
    Direct,
}

/// The coupled system–pointer state in closed form.
#[derive(Debug, Clone)]
pub struct BranchState<T: Real> {
    table: DeviceTable,
    layout: LineLayout,
    state: DensityMatrix<T>,
    line_dim: usize,
    copy_dim: usize,
    device_count: usize,
    /// `shifts[L * device_count + d]`
    shifts: Vec<bool>,
}

/// One computational label of the coupled state with nonzero population.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch<T: Real> {
    pub index: usize,
    pub label: String,
    pub weight: T,
    /// Pointer translation count (0 or 1) per device, `[line][column]`.
    pub shifts: Vec<Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceReadings<T: Real> {
    /// Mean position shift per device, `[line][column]`.
    pub delta_q: Vec<Vec<T>>,
    /// Mean momentum shift per device, `[line][column]`.
    pub delta_p: Vec<Vec<T>>,
    pub postselection_probability: T,
}

impl<T: Real> DeviceReadings<T> {
    pub fn weak_values(&self, cfg: &PointerConfig<T>) -> Vec<Vec<Cx<T>>> {
        self.delta_q
            .iter()
            .zip(&self.delta_p)
            .map(|(qs, ps)| qs.iter().zip(ps).map(|(&q, &p)| extract_weak_value(q, p, cfg)).collect())
            .collect()
    }
}

/// Couples every device of `table` to its own pointer.
pub fn couple_all<T: Real>(
    state: &DensityMatrix<T>,
    table: &DeviceTable,
    layout: LineLayout,
) -> Result<BranchState<T>> {
    let all: Vec<(usize, usize)> =
        (0..table.lines()).flat_map(|j| (0..table.columns()).map(move |i| (j, i))).collect();
    couple_selected(state, table, layout, &all)
}

/// Couples only the listed `(line, column)` devices; the rest keep their
/// pointers at rest.
pub fn couple_selected<T: Real>(
    state: &DensityMatrix<T>,
    table: &DeviceTable,
    layout: LineLayout,
    devices: &[(usize, usize)],
) -> Result<BranchState<T>> {
    let parties = table.dims();
    let expected: Vec<usize> = match layout {
        LineLayout::Copies => parties.iter().chain(parties).copied().collect(),
        LineLayout::Direct => parties.to_vec(),
    };
    if state.dims() != expected.as_slice() {
        return Err(Error::LayoutMismatch(format!(
            "state dims {:?}, device table expects {expected:?}",
            state.dims()
        )));
    }
    let n = parties.len();
    let line_dim = table.columns();
    let copy_dim = state.dim() / line_dim;
    let device_count = table.device_count();
    let full = Layout::new(state.dims());
    let mut active = vec![false; device_count];
    for &(j, i) in devices {
        if j >= table.lines() || i >= table.columns() {
            return Err(Error::LayoutMismatch(format!("device ({j},{i}) outside the table")));
        }
        active[j * table.columns() + i] = true;
    }
    let mut shifts = vec![false; state.dim() * device_count];
    for idx in 0..state.dim() {
        let line_label = idx / copy_dim;
        for (d, &on) in active.iter().enumerate() {
            if !on {
                continue;
            }
            let (j, i) = (d / table.columns(), d % table.columns());
            let hit = match table.operator(j, i) {
                DeviceOperator::Joint { column } => line_label == column,
                DeviceOperator::Party { party, digit } => {
                    let sub = match layout {
                        LineLayout::Copies => n + party,
                        LineLayout::Direct => party,
                    };
                    full.digit(idx, sub) == digit
                }
            };
            shifts[idx * device_count + d] = hit;
        }
    }
    Ok(BranchState {
        table: table.clone(),
        layout,
        state: state.clone(),
        line_dim,
        copy_dim,
        device_count,
        shifts,
    })
}

impl<T: Real> BranchState<T> {
    pub fn table(&self) -> &DeviceTable {
        &self.table
    }

    pub fn layout(&self) -> LineLayout {
        self.layout
    }

    /// System state before any coupling.
    pub fn system_state(&self) -> &DensityMatrix<T> {
        &self.state
    }

    /// Reduced state of the line-1 particles (copies traced).
    pub fn line_state(&self) -> Result<DensityMatrix<T>> {
        match self.layout {
            LineLayout::Direct => Ok(self.state.clone()),
            LineLayout::Copies => self.state.partial_trace(&(0..self.table.parties()).collect::<Vec<_>>()),
        }
    }

    #[inline]
    fn shift(&self, idx: usize, device: usize) -> bool {
        self.shifts[idx * self.device_count + device]
    }

    fn hamming(&self, a: usize, b: usize) -> usize {
        let ra = &self.shifts[a * self.device_count..(a + 1) * self.device_count];
        let rb = &self.shifts[b * self.device_count..(b + 1) * self.device_count];
        ra.iter().zip(rb).filter(|(x, y)| x != y).count()
    }

    pub fn branches(&self) -> Vec<Branch<T>> {
        let full = Layout::new(self.state.dims());
        let cols = self.table.columns();
        self.state
            .populations()
            .into_iter()
            .enumerate()
            .filter(|(_, w)| *w > T::zero())
            .map(|(index, weight)| Branch {
                index,
                label: full.digits(index).iter().map(|d| d.to_string()).collect(),
                weight,
                shifts: (0..self.table.lines())
                    .map(|j| (0..cols).map(|i| self.shift(index, j * cols + i) as u8).collect())
                    .collect(),
            })
            .collect()
    }

    /// System state with every pointer traced out: coherences between labels
    /// whose pointers ended apart are damped by the pointer overlaps.
    pub fn reduced_system_state(&self, cfg: &PointerConfig<T>) -> DensityMatrix<T> {
        let damp = cfg.overlap(cfg.g, T::zero());
        let m = self.state.matrix();
        let out = ComplexMatrix::from_fn(m.rows(), m.cols(), |r, c| {
            let h = self.hamming(r, c) as i32;
            m.get(r, c) * re(damp.powi(h))
        });
        DensityMatrix::from_raw(self.state.dims().to_vec(), out)
    }

    /// `Σ_c ⟨b, c| · |b, c⟩` coefficients `w_{LL'}` for labels sharing copy `c`.
    fn conditioned_pairs<'a>(&'a self, b: &'a [Cx<T>]) -> impl Iterator<Item = (usize, usize, Cx<T>)> + 'a {
        let m = self.state.matrix();
        (0..self.copy_dim).flat_map(move |c| {
            (0..self.line_dim).flat_map(move |l1| {
                (0..self.line_dim).filter_map(move |l2| {
                    let (r, s) = (l1 * self.copy_dim + c, l2 * self.copy_dim + c);
                    let w = b[l1].conj() * m.get(r, s) * b[l2];
                    (w.re != T::zero() || w.im != T::zero()).then_some((r, s, w))
                })
            })
        })
    }

    fn check_postselection(&self, b: &PureState<T>) -> Result<()> {
        if b.dims() != self.table.dims() {
            return Err(Error::LayoutMismatch(format!(
                "postselection state dims {:?}, line-1 dims {:?}",
                b.dims(),
                self.table.dims()
            )));
        }
        Ok(())
    }
}

/// Projects the line-1 particles onto `b`, traces the copies, and reads the
/// mean position and momentum of every pointer.
pub fn postselect_and_read<T: Real>(
    bs: &BranchState<T>,
    b: &PureState<T>,
    cfg: &PointerConfig<T>,
) -> Result<DeviceReadings<T>> {
    bs.check_postselection(b)?;
    let dc = bs.device_count;
    let g = cfg.g;
    let half = T::lit(0.5);
    let p_scale = g / (T::lit(4.0) * cfg.sigma * cfg.sigma);
    let damp = cfg.overlap(g, T::zero());
    let mut den = re(T::zero());
    let mut q_num = vec![re(T::zero()); dc];
    let mut p_num = vec![re(T::zero()); dc];
    for (ket, bra, w) in bs.conditioned_pairs(b.amplitudes()) {
        let wt = w * re(damp.powi(bs.hamming(ket, bra) as i32));
        den = den + wt;
        for d in 0..dc {
            let (sk, sb) = (bs.shift(ket, d), bs.shift(bra, d));
            if !sk && !sb {
                continue;
            }
            // ⟨φ_x|q|φ_y⟩ = (x + y)/2 · O,  ⟨φ_x|p|φ_y⟩ = i(x − y)/(4σ²) · O  (x bra, y ket)
            let sum = T::from_u8(sk as u8 + sb as u8).unwrap();
            q_num[d] = q_num[d] + wt * re(g * sum * half);
            let diff = T::from_i8(sb as i8 - sk as i8).unwrap();
            p_num[d] = p_num[d] + wt * cx(T::zero(), p_scale * diff);
        }
    }
    let prob = den.re;
    if prob.is_nan() || prob < T::null_threshold() {
        return Err(Error::NullPostselection(prob.to_f64().unwrap_or(f64::NAN)));
    }
    let cols = bs.table.columns();
    let reshape = |v: Vec<Cx<T>>| -> Vec<Vec<T>> {
        v.chunks(cols).map(|row| row.iter().map(|z| (*z / den).re).collect()).collect()
    };
    Ok(DeviceReadings { delta_q: reshape(q_num), delta_p: reshape(p_num), postselection_probability: prob })
}

/// `Re W = δq/g`, `Im W = 2σ² δp/g`.
pub fn extract_weak_value<T: Real>(delta_q: T, delta_p: T, cfg: &PointerConfig<T>) -> Cx<T> {
    cx(delta_q / cfg.g, T::lit(2.0) * cfg.sigma * cfg.sigma * delta_p / cfg.g)
}

/// Weak values of every device's projector on the coupled system state, with
/// no pointer: `tr(Π_b A_d ρ) / tr(Π_b ρ)` with `Π_b` acting on line 1.
/// This is the `g → 0` limit of [`postselect_and_read`] composed with
/// [`extract_weak_value`].
pub fn weak_limit<T: Real>(bs: &BranchState<T>, b: &PureState<T>) -> Result<(Vec<Vec<Cx<T>>>, T)> {
    bs.check_postselection(b)?;
    let dc = bs.device_count;
    let mut den = re(T::zero());
    let mut num = vec![re(T::zero()); dc];
    for (ket, _, w) in bs.conditioned_pairs(b.amplitudes()) {
        den = den + w;
        // A is diagonal and acts on the row label of ρ
        for (d, n) in num.iter_mut().enumerate() {
            if bs.shift(ket, d) {
                *n = *n + w;
            }
        }
    }
    let prob = den.re;
    if prob.is_nan() || prob < T::null_threshold() {
        return Err(Error::NullPostselection(prob.to_f64().unwrap_or(f64::NAN)));
    }
    let cols = bs.table.columns();
    Ok((num.chunks(cols).map(|row| row.iter().map(|z| *z / den).collect()).collect(), prob))
}
