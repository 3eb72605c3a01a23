//! Truncated tensor-product Hilbert space and the elementary operators living
//! on it.
//!
//! The composite system is two two-level atoms `{|g>, |r>}` and two cavity
//! modes truncated at `n_max` photons each. The basis is lexicographic in
//! `(atom1, atom2, n_a1, n_a2)` with `|g> = 0`, `|r> = 1`:
//!
//! ```text
//! index = ((s1*2 + s2)*(n_max+1) + n_a1)*(n_max+1) + n_a2
//! ```
//!
//! Every operator and state vector in the crate uses this ordering. The
//! collective atomic states are derived vectors over the product basis, not a
//! second basis:
//!
//! ```text
//! |G> = |gg>,  |R> = |rr>,
//! |S> = (|gr> + |rg>)/sqrt(2),  |A> = (|rg> - |gr>)/sqrt(2).
//! ```
//!
//! The overall sign of `|A>` is a convention; it is fixed here so that the
//! collective-operator assembly of the Hamiltonian reproduces the
//! product-basis form exactly (see [`crate::model::build_h_collective`]).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::linalg;
use crate::{Error, Result};

/// Tolerance for the Hermiticity check on flagged operators.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Descriptor of the truncated tensor-product space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HilbertSpace {
    n_max: usize,
}

impl HilbertSpace {
    /// A space with photon cutoff `n_max` per localized mode. The two-photon
    /// physics requires `n_max >= 2`.
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 2 {
            return Err(Error::CutoffTooSmall(n_max));
        }
        Ok(Self { n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Dimension of one mode factor, `n_max + 1`.
    pub fn fock_dim(&self) -> usize {
        self.n_max + 1
    }

    /// Total dimension `4 (n_max+1)^2`.
    pub fn dim(&self) -> usize {
        4 * self.fock_dim() * self.fock_dim()
    }

    /// Basis index of the product state `|s1, s2, n1, n2>`.
    pub fn index(&self, s1: usize, s2: usize, n1: usize, n2: usize) -> usize {
        debug_assert!(s1 < 2 && s2 < 2 && n1 <= self.n_max && n2 <= self.n_max);
        let nf = self.fock_dim();
        ((s1 * 2 + s2) * nf + n1) * nf + n2
    }

    /// Inverse of [`HilbertSpace::index`].
    pub fn unindex(&self, idx: usize) -> (usize, usize, usize, usize) {
        let nf = self.fock_dim();
        let n2 = idx % nf;
        let rest = idx / nf;
        let n1 = rest % nf;
        let atoms = rest / nf;
        (atoms / 2, atoms % 2, n1, n2)
    }

    /// Human-readable label of a basis index, e.g. `g,r,2,0`.
    pub fn label(&self, idx: usize) -> String {
        let (s1, s2, n1, n2) = self.unindex(idx);
        let sym = |s: usize| if s == 0 { 'g' } else { 'r' };
        format!("{},{},{},{}", sym(s1), sym(s2), n1, n2)
    }
}

/// Dense complex matrix over the shared basis, tagged with a Hermiticity flag.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub entries: DMatrix<C64>,
    pub hermitian: bool,
}

impl OperatorMatrix {
    /// Wrap a matrix that is Hermitian by construction. Panics if the residual
    /// `max|M - M^dag|` exceeds [`HERMITICITY_TOL`]; that is a programming
    /// error in the caller, not a data error.
    pub fn hermitian(entries: DMatrix<C64>) -> Self {
        let resid = linalg::hermiticity_residual(&entries);
        assert!(
            resid < HERMITICITY_TOL,
            "operator flagged hermitian has residual {resid:.3e}"
        );
        Self {
            entries,
            hermitian: true,
        }
    }

    /// Wrap a matrix with no Hermiticity claim.
    pub fn general(entries: DMatrix<C64>) -> Self {
        Self {
            entries,
            hermitian: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// `max|M - M^dag|`.
    pub fn hermiticity_residual(&self) -> f64 {
        linalg::hermiticity_residual(&self.entries)
    }

    /// Adjoint with the same Hermiticity flag.
    pub fn dagger(&self) -> Self {
        Self {
            entries: self.entries.adjoint(),
            hermitian: self.hermitian,
        }
    }
}

/// Collective and product labels for the two-atom state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomicLabel {
    /// `|gg>`
    G,
    /// `(|gr> + |rg>)/sqrt(2)`
    S,
    /// `(|rg> - |gr>)/sqrt(2)`
    A,
    /// `|rr>`
    R,
    /// product `|g>_1 |r>_2`
    Gr,
    /// product `|r>_1 |g>_2`
    Rg,
}

impl AtomicLabel {
    /// Amplitudes over the atomic product basis `(gg, gr, rg, rr)`.
    pub fn amplitudes(&self) -> [C64; 4] {
        let o = C64::new(1.0, 0.0);
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let z = C64::new(0.0, 0.0);
        match self {
            AtomicLabel::G => [o, z, z, z],
            AtomicLabel::S => [z, h, h, z],
            AtomicLabel::A => [z, -h, h, z],
            AtomicLabel::R => [z, z, z, o],
            AtomicLabel::Gr => [z, o, z, z],
            AtomicLabel::Rg => [z, z, o, z],
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "G" => Some(AtomicLabel::G),
            "S" => Some(AtomicLabel::S),
            "A" => Some(AtomicLabel::A),
            "R" => Some(AtomicLabel::R),
            "gr" => Some(AtomicLabel::Gr),
            "rg" => Some(AtomicLabel::Rg),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AtomicLabel::G => "G",
            AtomicLabel::S => "S",
            AtomicLabel::A => "A",
            AtomicLabel::R => "R",
            AtomicLabel::Gr => "gr",
            AtomicLabel::Rg => "rg",
        }
    }
}

/// Requested atomic operator for [`atomic_operator`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomicKind {
    /// `|r><g|` on atom k (1 or 2).
    Raise(usize),
    /// Projector onto `|G>`.
    ProjG,
    /// Projector onto `|S>`.
    ProjS,
    /// Projector onto `|A>`.
    ProjA,
    /// Projector onto `|R>`.
    ProjR,
    /// `|r><r|` on atom k (1 or 2).
    ProjRr(usize),
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Single-mode annihilator on the `nf`-dimensional Fock factor.
pub(crate) fn mode_annihilator(nf: usize) -> DMatrix<C64> {
    let mut a = DMatrix::zeros(nf, nf);
    for n in 1..nf {
        a[(n - 1, n)] = c((n as f64).sqrt());
    }
    a
}

/// Embed a pure field-factor operator (identity on both atoms).
pub(crate) fn embed_field(f: &DMatrix<C64>) -> DMatrix<C64> {
    DMatrix::<C64>::identity(4, 4).kronecker(f)
}

/// Embed a pure atomic operator (identity on the field factor).
pub(crate) fn embed_atomic(space: &HilbertSpace, a: &DMatrix<C64>) -> DMatrix<C64> {
    let nff = space.fock_dim() * space.fock_dim();
    a.kronecker(&DMatrix::<C64>::identity(nff, nff))
}

/// Outer product `|u><v|` as a 4x4 atomic matrix.
fn atomic_outer(u: &[C64; 4], v: &[C64; 4]) -> DMatrix<C64> {
    DMatrix::from_fn(4, 4, |i, j| u[i] * v[j].conj())
}

/// Annihilator of localized mode 1 or 2, embedded in the full space.
pub fn annihilation_local(space: &HilbertSpace, which: usize) -> Result<OperatorMatrix> {
    let nf = space.fock_dim();
    let a = mode_annihilator(nf);
    let id = DMatrix::<C64>::identity(nf, nf);
    let f = match which {
        1 => a.kronecker(&id),
        2 => id.kronecker(&a),
        _ => return Err(Error::InvalidMode(which)),
    };
    Ok(OperatorMatrix::general(embed_field(&f)))
}

/// Annihilator of normal mode `c1 = (a1+a2)/sqrt(2)` or `c2 = (a1-a2)/sqrt(2)`.
pub fn annihilation_normal(space: &HilbertSpace, which: usize) -> Result<OperatorMatrix> {
    let a1 = annihilation_local(space, 1)?.entries;
    let a2 = annihilation_local(space, 2)?.entries;
    let s = c(std::f64::consts::FRAC_1_SQRT_2);
    let m = match which {
        1 => (&a1 + &a2) * s,
        2 => (&a1 - &a2) * s,
        _ => return Err(Error::InvalidMode(which)),
    };
    Ok(OperatorMatrix::general(m))
}

/// Atomic raising operators and projectors, embedded in the full space.
pub fn atomic_operator(space: &HilbertSpace, kind: AtomicKind) -> Result<OperatorMatrix> {
    let raise2x2 = {
        let mut m = DMatrix::<C64>::zeros(2, 2);
        m[(1, 0)] = c(1.0);
        m
    };
    let proj_r2x2 = {
        let mut m = DMatrix::<C64>::zeros(2, 2);
        m[(1, 1)] = c(1.0);
        m
    };
    let id2 = DMatrix::<C64>::identity(2, 2);
    let m4 = match kind {
        AtomicKind::Raise(1) => raise2x2.kronecker(&id2),
        AtomicKind::Raise(2) => id2.kronecker(&raise2x2),
        AtomicKind::Raise(k) => return Err(Error::InvalidAtom(k)),
        AtomicKind::ProjRr(1) => proj_r2x2.kronecker(&id2),
        AtomicKind::ProjRr(2) => id2.kronecker(&proj_r2x2),
        AtomicKind::ProjRr(k) => return Err(Error::InvalidAtom(k)),
        AtomicKind::ProjG => {
            let v = AtomicLabel::G.amplitudes();
            atomic_outer(&v, &v)
        }
        AtomicKind::ProjS => {
            let v = AtomicLabel::S.amplitudes();
            atomic_outer(&v, &v)
        }
        AtomicKind::ProjA => {
            let v = AtomicLabel::A.amplitudes();
            atomic_outer(&v, &v)
        }
        AtomicKind::ProjR => {
            let v = AtomicLabel::R.amplitudes();
            atomic_outer(&v, &v)
        }
    };
    let full = embed_atomic(space, &m4);
    Ok(match kind {
        AtomicKind::Raise(_) => OperatorMatrix::general(full),
        _ => OperatorMatrix::hermitian(full),
    })
}

/// Atomic transition operator `|u><v|` over collective labels, embedded in
/// the full space. Building block for the collective Hamiltonian assembly.
pub fn atomic_transition(
    space: &HilbertSpace,
    to: AtomicLabel,
    from: AtomicLabel,
) -> OperatorMatrix {
    let m4 = atomic_outer(&to.amplitudes(), &from.amplitudes());
    OperatorMatrix::general(embed_atomic(space, &m4))
}

/// Conserved charge `N = a1^dag a1 + a2^dag a2 + sum_k |r>_kk<r|`.
pub fn total_excitation(space: &HilbertSpace) -> OperatorMatrix {
    let nf = space.fock_dim();
    let a = mode_annihilator(nf);
    let n_mode = a.adjoint() * &a;
    let id_f = DMatrix::<C64>::identity(nf, nf);
    let n_field = n_mode.kronecker(&id_f) + id_f.kronecker(&n_mode);
    let r1 = atomic_operator(space, AtomicKind::ProjRr(1))
        .expect("atom 1")
        .entries;
    let r2 = atomic_operator(space, AtomicKind::ProjRr(2))
        .expect("atom 2")
        .entries;
    OperatorMatrix::hermitian(embed_field(&n_field) + r1 + r2)
}

/// Probability mass on the top Fock level of either localized mode. Callers
/// evolving truncated states can assert this stays below their tail budget
/// (1e-6 in the figure recipes).
pub fn top_fock_population(space: &HilbertSpace, amplitudes: &DVector<C64>) -> f64 {
    let n_max = space.n_max();
    let mut p = 0.0;
    for (idx, amp) in amplitudes.iter().enumerate() {
        let (_, _, n1, n2) = space.unindex(idx);
        if n1 == n_max || n2 == n_max {
            p += amp.norm_sqr();
        }
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutator, max_abs, max_abs_diff};

    fn space4() -> HilbertSpace {
        HilbertSpace::new(4).unwrap()
    }

    fn basis_vec(space: &HilbertSpace, idx: usize) -> DVector<C64> {
        let mut v = DVector::zeros(space.dim());
        v[idx] = C64::new(1.0, 0.0);
        v
    }

    #[test]
    fn dimension_and_index_roundtrip() {
        let sp = space4();
        assert_eq!(sp.dim(), 4 * 25);
        for idx in 0..sp.dim() {
            let (s1, s2, n1, n2) = sp.unindex(idx);
            assert_eq!(sp.index(s1, s2, n1, n2), idx);
        }
        assert!(HilbertSpace::new(1).is_err());
    }

    #[test]
    fn annihilation_matrix_elements() {
        let sp = space4();
        let a1 = annihilation_local(&sp, 1).unwrap().entries;

        // a1 |g,g,1,0> = |g,g,0,0>
        let v = basis_vec(&sp, sp.index(0, 0, 1, 0));
        let w = &a1 * v;
        assert!((w[sp.index(0, 0, 0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((w.norm() - 1.0).abs() < 1e-15);

        // vacuum annihilates
        let v0 = basis_vec(&sp, sp.index(0, 0, 0, 0));
        assert!((&a1 * v0).norm() < 1e-15);

        // <n_a1> on |g,g,2,1> = 2
        let n1 = a1.adjoint() * &a1;
        let v21 = basis_vec(&sp, sp.index(0, 0, 2, 1));
        let exp = (v21.adjoint() * &n1 * &v21)[(0, 0)];
        assert!((exp.re - 2.0).abs() < 1e-14 && exp.im.abs() < 1e-14);

        assert!(annihilation_local(&sp, 3).is_err());
        assert!(annihilation_normal(&sp, 0).is_err());
    }

    #[test]
    fn canonical_commutator_below_cutoff() {
        let sp = space4();
        let a1 = annihilation_local(&sp, 1).unwrap().entries;
        let a2 = annihilation_local(&sp, 2).unwrap().entries;
        let comm = &a1 * a2.adjoint() - a2.adjoint() * &a1;
        assert!(max_abs(&comm) < 1e-14, "[a1, a2^dag] = 0");

        // [a1, a1^dag] = 1 on states with n_a1 <= n_max - 1
        let comm11 = &a1 * a1.adjoint() - a1.adjoint() * &a1;
        for idx in 0..sp.dim() {
            let (_, _, n1, _) = sp.unindex(idx);
            if n1 < sp.n_max() {
                let d = (comm11[(idx, idx)] - C64::new(1.0, 0.0)).norm();
                assert!(d < 1e-14);
            }
        }
    }

    #[test]
    fn normal_mode_commutator_below_cutoff() {
        let sp = space4();
        let c1 = annihilation_normal(&sp, 1).unwrap().entries;
        let comm = &c1 * c1.adjoint() - c1.adjoint() * &c1;
        // identity on the sub-block with n_a1 + n_a2 <= n_max - 1
        for i in 0..sp.dim() {
            let (_, _, m1, m2) = sp.unindex(i);
            if m1 + m2 > sp.n_max() - 1 {
                continue;
            }
            for j in 0..sp.dim() {
                let (_, _, k1, k2) = sp.unindex(j);
                if k1 + k2 > sp.n_max() - 1 {
                    continue;
                }
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((comm[(i, j)] - C64::new(want, 0.0)).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn normal_mode_rotation_preserves_total_number() {
        let sp = space4();
        let a1 = annihilation_local(&sp, 1).unwrap().entries;
        let a2 = annihilation_local(&sp, 2).unwrap().entries;
        let c1 = annihilation_normal(&sp, 1).unwrap().entries;
        let c2 = annihilation_normal(&sp, 2).unwrap().entries;
        let lhs = c1.adjoint() * &c1 + c2.adjoint() * &c2;
        let rhs = a1.adjoint() * &a1 + a2.adjoint() * &a2;
        assert!(max_abs_diff(&lhs, &rhs) < 1e-13);
    }

    #[test]
    fn normal_mode_number_on_one_one() {
        // |1,1>_a = (|2,0>_c - |0,2>_c)/sqrt(2), so <n_c1> = 1 by symmetry.
        let sp = space4();
        let c1 = annihilation_normal(&sp, 1).unwrap().entries;
        let n_c1 = c1.adjoint() * &c1;
        let v = basis_vec(&sp, sp.index(0, 0, 1, 1));
        let exp = (v.adjoint() * &n_c1 * &v)[(0, 0)];
        assert!((exp.re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn projector_completeness_and_idempotence() {
        let sp = space4();
        let kinds = [
            AtomicKind::ProjG,
            AtomicKind::ProjS,
            AtomicKind::ProjA,
            AtomicKind::ProjR,
        ];
        let mut sum = DMatrix::<C64>::zeros(sp.dim(), sp.dim());
        for k in kinds {
            let p = atomic_operator(&sp, k).unwrap().entries;
            assert!(max_abs_diff(&(&p * &p), &p) < 1e-14, "P^2 = P for {k:?}");
            sum += p;
        }
        let id = DMatrix::<C64>::identity(sp.dim(), sp.dim());
        assert!(max_abs_diff(&sum, &id) < 1e-14);
    }

    #[test]
    fn proj_s_on_product_state() {
        let sp = space4();
        let p_s = atomic_operator(&sp, AtomicKind::ProjS).unwrap().entries;
        // |g>_1 |r>_2 (x) |0,0>
        let v = basis_vec(&sp, sp.index(0, 1, 0, 0));
        let w = &p_s * v;
        // amplitude 1/sqrt(2) on the |S> component
        assert!((w.norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn proj_r_fixes_doubly_excited_state() {
        let sp = space4();
        let p_r = atomic_operator(&sp, AtomicKind::ProjR).unwrap().entries;
        let v = basis_vec(&sp, sp.index(1, 1, 2, 0));
        let w = &p_r * &v;
        assert!(
            max_abs_diff(
                &DMatrix::from_column_slice(sp.dim(), 1, w.as_slice()),
                &DMatrix::from_column_slice(sp.dim(), 1, v.as_slice())
            ) < 1e-15
        );
    }

    #[test]
    fn total_excitation_eigenvalues() {
        let sp = space4();
        let n = total_excitation(&sp).entries;
        let v = basis_vec(&sp, sp.index(0, 0, 1, 1));
        let e = (v.adjoint() * &n * &v)[(0, 0)];
        assert!((e.re - 2.0).abs() < 1e-14);
        let v = basis_vec(&sp, sp.index(1, 1, 0, 0));
        let e = (v.adjoint() * &n * &v)[(0, 0)];
        assert!((e.re - 2.0).abs() < 1e-14);
    }

    #[test]
    fn disjoint_subsystem_operators_commute() {
        let sp = space4();
        let a1 = annihilation_local(&sp, 1).unwrap().entries;
        let a2 = annihilation_local(&sp, 2).unwrap().entries;
        let r1 = atomic_operator(&sp, AtomicKind::Raise(1)).unwrap().entries;
        let r2 = atomic_operator(&sp, AtomicKind::Raise(2)).unwrap().entries;
        for (x, y) in [(&a1, &a2), (&a1, &r1), (&a2, &r2), (&r1, &r2)] {
            assert!(max_abs(&commutator(x, y)) < 1e-13);
        }
    }

    #[test]
    fn hermitian_flag_checks_residual() {
        let sp = space4();
        let n = total_excitation(&sp);
        assert!(n.hermitian);
        assert!(n.hermiticity_residual() < HERMITICITY_TOL);
    }

    #[test]
    fn top_fock_population_counts_edge_levels() {
        let sp = space4();
        let mut v = DVector::<C64>::zeros(sp.dim());
        v[sp.index(0, 0, 4, 0)] = C64::new(0.6, 0.0);
        v[sp.index(0, 0, 1, 1)] = C64::new(0.8, 0.0);
        assert!((top_fock_population(&sp, &v) - 0.36).abs() < 1e-14);
    }
}
