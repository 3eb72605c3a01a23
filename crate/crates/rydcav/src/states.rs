//! Factories for initial and target states: localized and normal-mode Fock
//! states, coherent products, collective atomic states, superpositions, plus
//! fidelity and export utilities.
//!
//! Every constructor returns a normalized state whose global phase is fixed by
//! the convention that the first nonzero amplitude in basis order is real and
//! positive. That makes state equality testable.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::hilbert::{annihilation_normal, top_fock_population, AtomicLabel, HilbertSpace};
use crate::{Error, Result};

/// Largest acceptable probability lost to the Fock truncation when building
/// coherent states.
pub const COHERENT_TAIL_TOL: f64 = 1e-6;

/// Pure state vector or density matrix over the shared basis.
#[derive(Debug, Clone)]
pub enum StateRepr {
    Pure(DVector<C64>),
    Density(DMatrix<C64>),
}

/// A quantum state tied to its [`HilbertSpace`].
#[derive(Debug, Clone)]
pub struct QuantumState {
    space: HilbertSpace,
    repr: StateRepr,
}

impl QuantumState {
    /// Wrap a pure state vector; the norm must already be 1 within 1e-10.
    pub fn pure(space: HilbertSpace, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                left: amplitudes.len(),
                right: space.dim(),
            });
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::NotPure);
        }
        Ok(Self {
            space,
            repr: StateRepr::Pure(amplitudes),
        })
    }

    /// Wrap a raw vector without the norm check (evolution snapshots under
    /// non-Hermitian dynamics legitimately have norm below one).
    pub(crate) fn pure_unchecked(space: HilbertSpace, amplitudes: DVector<C64>) -> Self {
        Self {
            space,
            repr: StateRepr::Pure(amplitudes),
        }
    }

    /// Wrap a density matrix. Checked for Hermiticity and unit trace.
    pub fn density(space: HilbertSpace, rho: DMatrix<C64>) -> Result<Self> {
        if rho.nrows() != space.dim() || rho.ncols() != space.dim() {
            return Err(Error::DimensionMismatch {
                left: rho.nrows(),
                right: space.dim(),
            });
        }
        let trace: C64 = rho.diagonal().iter().sum();
        if (trace.re - 1.0).abs() > 1e-10
            || trace.im.abs() > 1e-10
            || crate::linalg::hermiticity_residual(&rho) > 1e-10
        {
            return Err(Error::NotPure);
        }
        Ok(Self {
            space,
            repr: StateRepr::Density(rho),
        })
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.repr, StateRepr::Pure(_))
    }

    pub fn repr(&self) -> &StateRepr {
        &self.repr
    }

    /// Amplitude vector of a pure state.
    pub fn amplitudes(&self) -> Result<&DVector<C64>> {
        match &self.repr {
            StateRepr::Pure(v) => Ok(v),
            StateRepr::Density(_) => Err(Error::NotPure),
        }
    }

    pub fn norm(&self) -> f64 {
        match &self.repr {
            StateRepr::Pure(v) => v.norm(),
            StateRepr::Density(rho) => rho.diagonal().iter().map(|z| z.re).sum::<f64>().sqrt(),
        }
    }

    /// Probability mass on the top Fock level of either localized mode.
    pub fn top_fock_population(&self) -> f64 {
        match &self.repr {
            StateRepr::Pure(v) => top_fock_population(&self.space, v),
            StateRepr::Density(rho) => {
                let n_max = self.space.n_max();
                (0..self.space.dim())
                    .filter(|&i| {
                        let (_, _, n1, n2) = self.space.unindex(i);
                        n1 == n_max || n2 == n_max
                    })
                    .map(|i| rho[(i, i)].re)
                    .sum()
            }
        }
    }

    /// Snapshot export: one `atom1,atom2,n_a1,n_a2,re,im` row per basis state.
    pub fn export_csv(&self) -> Result<String> {
        let v = self.amplitudes()?;
        let mut out = String::from("atom1,atom2,n_a1,n_a2,re,im\n");
        for (idx, amp) in v.iter().enumerate() {
            let label = self.space.label(idx);
            out.push_str(&format!("{},{},{}\n", label, amp.re, amp.im));
        }
        Ok(out)
    }
}

/// Fix the global phase: first nonzero amplitude real positive.
fn fix_phase(v: &mut DVector<C64>) {
    for amp in v.iter() {
        if amp.norm() > 1e-12 {
            let phase = amp / amp.norm();
            let correction = phase.conj();
            for x in v.iter_mut() {
                *x *= correction;
            }
            return;
        }
    }
}

fn normalized_state(space: HilbertSpace, mut v: DVector<C64>) -> QuantumState {
    let norm = v.norm();
    debug_assert!(norm > 0.0);
    v /= C64::new(norm, 0.0);
    fix_phase(&mut v);
    QuantumState::pure_unchecked(space, v)
}

/// Product of an atomic label with a field-factor vector.
fn atom_field_product(
    space: &HilbertSpace,
    atoms: AtomicLabel,
    field: &DVector<C64>,
) -> DVector<C64> {
    let nff = space.fock_dim() * space.fock_dim();
    debug_assert_eq!(field.len(), nff);
    let amps = atoms.amplitudes();
    let mut v = DVector::zeros(space.dim());
    for (s, a) in amps.iter().enumerate() {
        if a.norm() == 0.0 {
            continue;
        }
        for (k, f) in field.iter().enumerate() {
            v[s * nff + k] = a * f;
        }
    }
    v
}

/// `|atoms> (x) |n1>_a1 |n2>_a2` in the localized Fock basis.
pub fn localized_fock(
    space: &HilbertSpace,
    atoms: AtomicLabel,
    n1: usize,
    n2: usize,
) -> Result<QuantumState> {
    for n in [n1, n2] {
        if n > space.n_max() {
            return Err(Error::PhotonAboveCutoff {
                n,
                n_max: space.n_max(),
            });
        }
    }
    let nf = space.fock_dim();
    let mut field = DVector::zeros(nf * nf);
    field[n1 * nf + n2] = C64::new(1.0, 0.0);
    Ok(normalized_state(
        *space,
        atom_field_product(space, atoms, &field),
    ))
}

/// `|atoms> (x) |n_c1>_c1 |n_c2>_c2`, built by applying normal-mode creation
/// operators to the vacuum and expanding in the localized basis.
pub fn normal_mode_fock(
    space: &HilbertSpace,
    atoms: AtomicLabel,
    n_c1: usize,
    n_c2: usize,
) -> Result<QuantumState> {
    let total = n_c1 + n_c2;
    if total > space.n_max() {
        return Err(Error::QuantaExceedCutoff {
            total,
            n_max: space.n_max(),
        });
    }
    let c1 = annihilation_normal(space, 1)?.entries;
    let c2 = annihilation_normal(space, 2)?.entries;
    let mut v = localized_fock(space, atoms, 0, 0)?.amplitudes()?.clone();
    for _ in 0..n_c1 {
        v = c1.adjoint() * v;
    }
    for _ in 0..n_c2 {
        v = c2.adjoint() * v;
    }
    Ok(normalized_state(*space, v))
}

/// Truncated coherent amplitudes `e^{-|alpha|^2/2} alpha^n / sqrt(n!)` and the
/// captured probability.
fn coherent_amplitudes(alpha: C64, nf: usize) -> (Vec<C64>, f64) {
    let pref = (-alpha.norm_sqr() / 2.0).exp();
    let mut amps = Vec::with_capacity(nf);
    let mut cur = C64::new(pref, 0.0);
    let mut captured = 0.0;
    for n in 0..nf {
        if n > 0 {
            cur = cur * alpha / C64::new((n as f64).sqrt(), 0.0);
        }
        captured += cur.norm_sqr();
        amps.push(cur);
    }
    (amps, captured)
}

/// `|atoms> (x) |alpha>_a1 |beta>_a2`, truncated and renormalized. Errors when
/// the truncation tail exceeds [`COHERENT_TAIL_TOL`].
pub fn coherent_product(
    space: &HilbertSpace,
    atoms: AtomicLabel,
    alpha: C64,
    beta: C64,
) -> Result<QuantumState> {
    let nf = space.fock_dim();
    let (ca, pa) = coherent_amplitudes(alpha, nf);
    let (cb, pb) = coherent_amplitudes(beta, nf);
    let tail = 1.0 - pa * pb;
    if tail > COHERENT_TAIL_TOL {
        return Err(Error::CoherentTail { tail });
    }
    let mut field = DVector::zeros(nf * nf);
    for n1 in 0..nf {
        for n2 in 0..nf {
            field[n1 * nf + n2] = ca[n1] * cb[n2];
        }
    }
    Ok(normalized_state(
        *space,
        atom_field_product(space, atoms, &field),
    ))
}

/// Normalized superposition `sum_k coeff_k |state_k>`.
pub fn superposition(terms: &[(C64, &QuantumState)]) -> Result<QuantumState> {
    let space = *terms
        .first()
        .ok_or(Error::DimensionMismatch { left: 0, right: 1 })?
        .1
        .space();
    let mut v = DVector::zeros(space.dim());
    for (coeff, state) in terms {
        if *state.space() != space {
            return Err(Error::DimensionMismatch {
                left: state.space().dim(),
                right: space.dim(),
            });
        }
        v += state.amplitudes()? * *coeff;
    }
    Ok(normalized_state(space, v))
}

/// `|<target|state>|^2` for pure states over the same space.
pub fn fidelity(state: &QuantumState, target: &QuantumState) -> Result<f64> {
    let a = state.amplitudes()?;
    let b = target.amplitudes()?;
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(b.dotc(a).norm_sqr())
}
