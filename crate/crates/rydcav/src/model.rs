//! Hamiltonian builders, derived coupling constants, resonance conditions,
//! and decoherence estimates.
//!
//! All builders are pure functions of `(SystemParams, HilbertSpace)` and
//! return immutable matrices that are safe to share across sweep workers.
//!
//! Two equivalent assemblies of the interaction Hamiltonian are provided:
//! [`build_h_interaction`] works in the localized product basis, while
//! [`build_h_collective`] assembles the same operator from collective atomic
//! states and normal modes. They agree entrywise to rounding; the pair serves
//! as a cross-check oracle for both.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::hilbert::{AtomicLabel, HilbertSpace, OperatorMatrix};
use crate::{Error, Result};

/// Physical couplings and decoherence rates, all in units of `g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Cavity coupling; sets the frequency scale.
    pub g: f64,
    /// Laser Rabi frequency `Omega`.
    pub omega: f64,
    /// Single-photon detuning `delta`.
    pub delta: f64,
    /// Photon hopping rate `J`.
    pub j: f64,
    /// Rydberg-Rydberg shift `V_dd`.
    pub v_dd: f64,
    /// Cavity decay rate `kappa`.
    pub kappa: f64,
    /// Spontaneous emission rate `gamma` of the eliminated level.
    pub gamma: f64,
    /// Rydberg-state decay rate `gamma_r`.
    pub gamma_r: f64,
}

impl SystemParams {
    /// Unit-`g` parameter set with no decoherence.
    pub fn unit_g(omega: f64, delta: f64, j: f64, v_dd: f64) -> Self {
        Self {
            g: 1.0,
            omega,
            delta,
            j,
            v_dd,
            kappa: 0.0,
            gamma: 0.0,
            gamma_r: 0.0,
        }
    }

    pub fn with_decay(mut self, kappa: f64, gamma: f64, gamma_r: f64) -> Self {
        self.kappa = kappa;
        self.gamma = gamma;
        self.gamma_r = gamma_r;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.g <= 0.0 || self.g.is_nan() {
            return Err(Error::NonPositiveCoupling(self.g));
        }
        for (name, value) in [
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("gamma_r", self.gamma_r),
        ] {
            if value < 0.0 {
                return Err(Error::NegativeRate { name, value });
            }
        }
        Ok(())
    }

    /// Non-fatal warnings about the validity regime of the adiabatic
    /// elimination behind the effective couplings.
    pub fn validity_warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        let scale = self.g.abs().max(self.omega.abs());
        if self.delta.abs() < 5.0 * scale {
            w.push(format!(
                "adiabatic elimination assumes |delta| >> omega, g; \
                 |delta| = {} is below 5 max(g, omega) = {}",
                self.delta.abs(),
                5.0 * scale
            ));
        }
        w
    }
}

/// Effective couplings derived from the adiabatic elimination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedCouplings {
    /// Two-photon coupling `lambda = Omega g / delta`.
    pub lambda: f64,
    /// Photon Stark coefficient `lambda' = g^2 / delta`.
    pub lambda_p: f64,
    /// Rydberg Stark coefficient `lambda'' = Omega^2 / delta`.
    pub lambda_pp: f64,
    /// Bare two-photon rate `xi = lambda^2 / J`.
    pub xi: f64,
    /// Corrected rate `xi' = lambda^2 / (J + lambda/2)` for `V_dd = +2J`.
    pub xi_prime_plus: f64,
    /// Corrected rate `xi' = lambda^2 / (J - lambda/2)` for `V_dd = -2J`.
    pub xi_prime_minus: f64,
}

/// All six derived constants. Errors when `delta` or `J` vanishes.
pub fn derived_couplings(params: &SystemParams) -> Result<DerivedCouplings> {
    params.validate()?;
    if params.delta == 0.0 {
        return Err(Error::ZeroDetuning);
    }
    if params.j == 0.0 {
        return Err(Error::ZeroHopping);
    }
    let lambda = params.omega * params.g / params.delta;
    Ok(DerivedCouplings {
        lambda,
        lambda_p: params.g * params.g / params.delta,
        lambda_pp: params.omega * params.omega / params.delta,
        xi: lambda * lambda / params.j,
        xi_prime_plus: lambda * lambda / (params.j + lambda / 2.0),
        xi_prime_minus: lambda * lambda / (params.j - lambda / 2.0),
    })
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Small-factor building blocks for the Hamiltonian terms. Every term of
/// every builder acts as (4x4 atomic operator) x (two-mode field operator),
/// so products are taken at factor level and lifted with one Kronecker
/// product per term; the result is entrywise identical to forming the dense
/// full-dimension products, at a fraction of the cost.
struct FactorOps {
    id4: DMatrix<C64>,
    id_ff: DMatrix<C64>,
    /// `a1^dag a2` on the field factor.
    hop: DMatrix<C64>,
    n1: DMatrix<C64>,
    n2: DMatrix<C64>,
    a1: DMatrix<C64>,
    a2: DMatrix<C64>,
    c1: DMatrix<C64>,
    c2: DMatrix<C64>,
    n_c1: DMatrix<C64>,
    n_c2: DMatrix<C64>,
    /// `c1^dag c2` on the field factor.
    conv: DMatrix<C64>,
}

impl FactorOps {
    fn new(space: &HilbertSpace) -> Self {
        let nf = space.fock_dim();
        let a = crate::hilbert::mode_annihilator(nf);
        let id = DMatrix::<C64>::identity(nf, nf);
        let a1 = a.kronecker(&id);
        let a2 = id.kronecker(&a);
        let c1 = (&a1 + &a2) * c(std::f64::consts::FRAC_1_SQRT_2);
        let c2 = (&a1 - &a2) * c(std::f64::consts::FRAC_1_SQRT_2);
        Self {
            id4: DMatrix::identity(4, 4),
            id_ff: DMatrix::identity(nf * nf, nf * nf),
            hop: a1.adjoint() * &a2,
            n1: a1.adjoint() * &a1,
            n2: a2.adjoint() * &a2,
            n_c1: c1.adjoint() * &c1,
            n_c2: c2.adjoint() * &c2,
            conv: c1.adjoint() * &c2,
            a1,
            a2,
            c1,
            c2,
        }
    }
}

/// 4x4 atomic outer product `|to><from|` over collective labels.
fn atom4(to: AtomicLabel, from: AtomicLabel) -> DMatrix<C64> {
    let u = to.amplitudes();
    let v = from.amplitudes();
    DMatrix::from_fn(4, 4, |i, j| u[i] * v[j].conj())
}

/// 4x4 single-atom operator `op` on atom `k` (1-based).
fn single_atom4(op: &DMatrix<C64>, k: usize) -> DMatrix<C64> {
    let id2 = DMatrix::<C64>::identity(2, 2);
    match k {
        1 => op.kronecker(&id2),
        _ => id2.kronecker(op),
    }
}

fn raise2x2() -> DMatrix<C64> {
    let mut m = DMatrix::<C64>::zeros(2, 2);
    m[(1, 0)] = c(1.0);
    m
}

fn proj_g2x2() -> DMatrix<C64> {
    let mut m = DMatrix::<C64>::zeros(2, 2);
    m[(0, 0)] = c(1.0);
    m
}

fn proj_r2x2() -> DMatrix<C64> {
    let mut m = DMatrix::<C64>::zeros(2, 2);
    m[(1, 1)] = c(1.0);
    m
}

/// Interaction-picture Hamiltonian in the localized product basis:
///
/// ```text
/// H = J(a1^dag a2 + h.c.) + V_dd |rr><rr|
///   + [lambda sum_k |r>_kk<g| a_k + h.c.]
///   + lambda' sum_k a_k^dag a_k |g>_kk<g|
///   + lambda'' sum_k |r>_kk<r|
/// ```
pub fn build_h_interaction(params: &SystemParams, space: &HilbertSpace) -> Result<OperatorMatrix> {
    let dc = derived_couplings(params)?;
    let f = FactorOps::new(space);
    let p_rr = atom4(AtomicLabel::R, AtomicLabel::R);
    let raise = raise2x2();
    let prr = proj_r2x2();
    let pg = proj_g2x2();

    let hop_sym = &f.hop + f.hop.adjoint();
    let mut h = f.id4.kronecker(&(hop_sym * c(params.j)));
    h += p_rr.kronecker(&f.id_ff) * c(params.v_dd);
    let flip = single_atom4(&raise, 1).kronecker(&f.a1) + single_atom4(&raise, 2).kronecker(&f.a2);
    let flip = flip * c(dc.lambda);
    h += &flip + flip.adjoint();
    h += (single_atom4(&pg, 1).kronecker(&f.n1) + single_atom4(&pg, 2).kronecker(&f.n2))
        * c(dc.lambda_p);
    h += (single_atom4(&prr, 1) + single_atom4(&prr, 2)).kronecker(&f.id_ff) * c(dc.lambda_pp);
    Ok(OperatorMatrix::hermitian(h))
}

/// The same Hamiltonian assembled from collective atomic states and normal
/// modes:
///
/// ```text
/// H = J(c1^dag c1 - c2^dag c2) + V_dd |R><R|
///   + [lambda c1 (|S><G| + |R><S|) + lambda c2 (|A><G| - |R><A|)
///      - (lambda'/2)(c1^dag c2 + c2^dag c1)|S><A| + h.c.]
///   + ((lambda'/2)(c1^dag c1 + c2^dag c2) + lambda'')(|S><S| + |A><A|)
///   + lambda'(c1^dag c1 + c2^dag c2)|G><G| + 2 lambda''|R><R|
/// ```
///
/// With the `|A>` sign convention of [`crate::hilbert::AtomicLabel`] this is
/// algebraically identical to [`build_h_interaction`], entry by entry.
pub fn build_h_collective(params: &SystemParams, space: &HilbertSpace) -> Result<OperatorMatrix> {
    let dc = derived_couplings(params)?;
    let f = FactorOps::new(space);
    let n_tot = &f.n_c1 + &f.n_c2;
    let p_g = atom4(AtomicLabel::G, AtomicLabel::G);
    let p_s = atom4(AtomicLabel::S, AtomicLabel::S);
    let p_a = atom4(AtomicLabel::A, AtomicLabel::A);
    let p_r = atom4(AtomicLabel::R, AtomicLabel::R);

    let mut h = f.id4.kronecker(&((&f.n_c1 - &f.n_c2) * c(params.j)));
    h += p_r.kronecker(&f.id_ff) * c(params.v_dd);

    let trans = (atom4(AtomicLabel::S, AtomicLabel::G) + atom4(AtomicLabel::R, AtomicLabel::S))
        .kronecker(&f.c1)
        + (atom4(AtomicLabel::A, AtomicLabel::G) - atom4(AtomicLabel::R, AtomicLabel::A))
            .kronecker(&f.c2);
    let trans = trans * c(dc.lambda);
    h += &trans + trans.adjoint();

    let conv = atom4(AtomicLabel::S, AtomicLabel::A).kronecker(&(&f.conv + f.conv.adjoint()))
        * c(-dc.lambda_p / 2.0);
    h += &conv + conv.adjoint();

    h += (&p_s + &p_a).kronecker(&(&n_tot * c(dc.lambda_p / 2.0) + &f.id_ff * c(dc.lambda_pp)));
    h += p_g.kronecker(&(&n_tot * c(dc.lambda_p)));
    h += p_r.kronecker(&f.id_ff) * c(2.0 * dc.lambda_pp);
    Ok(OperatorMatrix::hermitian(h))
}

/// Rotating-frame Hamiltonian `H'(t) = H_tr(t) + H_st` with respect to
/// `H0 = J(c1^dag c1 - c2^dag c2) + V_dd |R><R|`. The transition part carries
/// the explicit phase factors
///
/// ```text
/// H_tr = lambda c1 e^{-iJt}|S><G| + lambda c2 e^{iJt}|A><G|
///      + lambda c1 e^{i(V_dd-J)t}|R><S| - lambda c2 e^{i(V_dd+J)t}|R><A|
///      - (lambda'/2)(c1^dag c2 e^{2iJt} + c2^dag c1 e^{-2iJt})|S><A| + h.c.
/// ```
///
/// and `H_st` collects the photon-number-dependent Stark shifts.
pub struct RotatingHamiltonian {
    blocks: Vec<(DMatrix<C64>, f64)>,
    h_st: DMatrix<C64>,
    dim: usize,
}

impl RotatingHamiltonian {
    pub fn new(params: &SystemParams, space: &HilbertSpace) -> Result<Self> {
        let dc = derived_couplings(params)?;
        let f = FactorOps::new(space);
        let n_tot = &f.n_c1 + &f.n_c2;
        let p_g = atom4(AtomicLabel::G, AtomicLabel::G);
        let p_s = atom4(AtomicLabel::S, AtomicLabel::S);
        let p_a = atom4(AtomicLabel::A, AtomicLabel::A);
        let p_r = atom4(AtomicLabel::R, AtomicLabel::R);
        let t_sa = atom4(AtomicLabel::S, AtomicLabel::A);

        let (j, v) = (params.j, params.v_dd);
        // (coefficient matrix, phase frequency w) pairs; the full transition
        // part is sum_k M_k e^{i w_k t} + h.c.
        let blocks = vec![
            (
                atom4(AtomicLabel::S, AtomicLabel::G).kronecker(&f.c1) * c(dc.lambda),
                -j,
            ),
            (
                atom4(AtomicLabel::A, AtomicLabel::G).kronecker(&f.c2) * c(dc.lambda),
                j,
            ),
            (
                atom4(AtomicLabel::R, AtomicLabel::S).kronecker(&f.c1) * c(dc.lambda),
                v - j,
            ),
            (
                atom4(AtomicLabel::R, AtomicLabel::A).kronecker(&f.c2) * c(-dc.lambda),
                v + j,
            ),
            (t_sa.kronecker(&f.conv) * c(-dc.lambda_p / 2.0), 2.0 * j),
            (
                t_sa.kronecker(&f.conv.adjoint()) * c(-dc.lambda_p / 2.0),
                -2.0 * j,
            ),
        ];
        let h_st = (&p_s + &p_a)
            .kronecker(&(&n_tot * c(dc.lambda_p / 2.0) + &f.id_ff * c(dc.lambda_pp)))
            + p_g.kronecker(&(&n_tot * c(dc.lambda_p)))
            + p_r.kronecker(&f.id_ff) * c(2.0 * dc.lambda_pp);
        Ok(Self {
            blocks,
            h_st,
            dim: space.dim(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Static Stark part `H_st`.
    pub fn stark(&self) -> &DMatrix<C64> {
        &self.h_st
    }

    /// Hamiltonian matrix at time `t`.
    pub fn at(&self, t: f64) -> DMatrix<C64> {
        let mut h = self.h_st.clone();
        for (m, w) in &self.blocks {
            let term = m * C64::from_polar(1.0, w * t);
            h += &term + term.adjoint();
        }
        h
    }

    /// Conservative bound on `max_t ||H(t)||_inf`, used to pick integrator
    /// steps.
    pub fn norm_bound(&self) -> f64 {
        let row_sum = |m: &DMatrix<C64>| -> f64 {
            (0..m.nrows())
                .map(|i| m.row(i).iter().map(|z| z.norm()).sum::<f64>())
                .fold(0.0, f64::max)
        };
        self.blocks
            .iter()
            .map(|(m, _)| 2.0 * row_sum(m))
            .sum::<f64>()
            + row_sum(&self.h_st)
    }
}

/// One-shot rotating-frame Hamiltonian at time `t`. Hermitian for every `t`.
pub fn build_h_rotating(
    params: &SystemParams,
    space: &HilbertSpace,
    t: f64,
) -> Result<OperatorMatrix> {
    let rot = RotatingHamiltonian::new(params, space)?;
    Ok(OperatorMatrix::hermitian(rot.at(t)))
}

/// Which normal mode carries the two-photon transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `c1`, resonant near `V_dd = +2J`.
    C1,
    /// `c2`, resonant near `V_dd = -2J`.
    C2,
}

impl Branch {
    pub fn mode_index(&self) -> usize {
        match self {
            Branch::C1 => 1,
            Branch::C2 => 2,
        }
    }

    /// Sign of the resonant shift, `V_dd = sign * 2J + ...`.
    pub fn sign(&self) -> f64 {
        match self {
            Branch::C1 => 1.0,
            Branch::C2 => -1.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Branch::C1 => "c1",
            Branch::C2 => "c2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "c1" => Some(Branch::C1),
            "c2" => Some(Branch::C2),
            _ => None,
        }
    }
}

/// Coupling constant used by the effective two-photon Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CouplingConstant {
    /// Bare `xi = lambda^2 / J`.
    Xi,
    /// Corrected `xi' = lambda^2 / (J +- lambda/2)`, sign set by the branch.
    /// This is the rate that governs the observed oscillation periods.
    #[default]
    XiPrime,
}

/// Optional pieces of the effective Hamiltonian.
#[derive(Debug, Clone, Copy, Default)]
pub struct EffectiveOptions {
    /// Add the photon-number-dependent Stark shifts `H_st`.
    pub include_stark: bool,
    /// Add the second-order Stark remainder
    /// `(lambda^2/J)[(c1^dag c1 - c2^dag c2)|G><G| + |R><R|(c1 c1^dag + c2 c2^dag / 3)]`
    /// (mirrored by `c1 <-> c2` for the other branch).
    pub include_residual_stark: bool,
    pub coupling: CouplingConstant,
}

/// Effective two-photon Hamiltonian
/// `H_eff = xi (|G><R| c_b^dag^2 + |R><G| c_b^2)` on the selected branch,
/// embedded in the full space.
pub fn build_h_effective(
    params: &SystemParams,
    space: &HilbertSpace,
    branch: Branch,
    options: &EffectiveOptions,
) -> Result<OperatorMatrix> {
    let dc = derived_couplings(params)?;
    let resonant_vdd = branch.sign() * 2.0 * params.j;
    if (params.v_dd - resonant_vdd).abs() > 0.1 * params.j.abs() {
        log::warn!(
            "effective Hamiltonian on branch {} assumes V_dd near {resonant_vdd}; got {}",
            branch.name(),
            params.v_dd
        );
    }
    let rate = match options.coupling {
        CouplingConstant::Xi => dc.xi,
        CouplingConstant::XiPrime => match branch {
            Branch::C1 => dc.xi_prime_plus,
            Branch::C2 => dc.xi_prime_minus,
        },
    };
    let f = FactorOps::new(space);
    let (cb, cother, n_cb, n_cother) = match branch {
        Branch::C1 => (&f.c1, &f.c2, &f.n_c1, &f.n_c2),
        Branch::C2 => (&f.c2, &f.c1, &f.n_c2, &f.n_c1),
    };
    let half = atom4(AtomicLabel::R, AtomicLabel::G).kronecker(&(cb * cb)) * c(rate);
    let mut h = half.adjoint() + half;

    if options.include_stark {
        let rot = RotatingHamiltonian::new(params, space)?;
        h += &rot.h_st;
    }
    if options.include_residual_stark {
        let p_g = atom4(AtomicLabel::G, AtomicLabel::G);
        let p_r = atom4(AtomicLabel::R, AtomicLabel::R);
        let shift = p_g.kronecker(&(n_cb - n_cother))
            + p_r.kronecker(&(cb * cb.adjoint() + cother * cother.adjoint() / c(3.0)));
        h += shift * c(dc.lambda * dc.lambda / params.j);
    }
    Ok(OperatorMatrix::hermitian(h))
}

/// Conditional no-jump Hamiltonian
/// `H_NH = H_I - i kappa/2 (a1^dag a1 + a2^dag a2)`.
pub fn build_h_nonhermitian(params: &SystemParams, space: &HilbertSpace) -> Result<OperatorMatrix> {
    let h = build_h_interaction(params, space)?.entries;
    let f = FactorOps::new(space);
    let n_tot = f.id4.kronecker(&(&f.n1 + &f.n2));
    let m = h + n_tot * C64::new(0.0, -params.kappa / 2.0);
    Ok(if params.kappa > 0.0 {
        OperatorMatrix::general(m)
    } else {
        OperatorMatrix::hermitian(m)
    })
}

/// Photon-number-dependent two-photon resonance condition
/// `V_dd = +-2J + (n - 2) lambda`, stated for `Omega = g`.
pub fn resonance_vdd(params: &SystemParams, n_photons: usize, branch: Branch) -> Result<f64> {
    let dc = derived_couplings(params)?;
    if (params.omega - params.g).abs() > 1e-12 * params.g.abs() {
        log::warn!(
            "resonance condition assumes Omega = g; got Omega = {}, g = {}",
            params.omega,
            params.g
        );
    }
    Ok(branch.sign() * 2.0 * params.j + (n_photons as f64 - 2.0) * dc.lambda)
}

/// Decoherence estimates for a run of duration `t`.
#[derive(Debug, Clone, Copy)]
pub struct DecoherenceEstimates {
    /// Effective decay rate of the eliminated level,
    /// `gamma_e = (g^2/delta^2 + omega^2/delta^2) gamma`.
    pub gamma_e: f64,
    /// Accumulated error estimate `E = (gamma_e + gamma_r + kappa) t`.
    pub error_e: f64,
    kappa: f64,
    t: f64,
}

impl DecoherenceEstimates {
    /// No-jump survival probability `e^{-n_bar kappa t}` for mean photon
    /// number `n_bar` in the coupled cavities.
    pub fn survival(&self, n_bar: f64) -> f64 {
        (-n_bar * self.kappa * self.t).exp()
    }
}

pub fn decoherence_estimates(params: &SystemParams, t: f64) -> DecoherenceEstimates {
    let d2 = params.delta * params.delta;
    let gamma_e = (params.g * params.g / d2 + params.omega * params.omega / d2) * params.gamma;
    DecoherenceEstimates {
        gamma_e,
        error_e: (gamma_e + params.gamma_r + params.kappa) * t,
        kappa: params.kappa,
        t,
    }
}

/// Dispersive-regime warnings evaluated against the initial photon numbers.
/// Never fatal; the figure recipes log them.
pub fn dispersive_warnings(params: &SystemParams, n_c1: f64, n_c2: f64) -> Vec<String> {
    let mut w = Vec::new();
    let dc = match derived_couplings(params) {
        Ok(dc) => dc,
        Err(_) => return w,
    };
    let conversion = (n_c1 * n_c2).sqrt() * dc.lambda_p / 2.0;
    if 2.0 * params.j.abs() < 10.0 * conversion {
        w.push(format!(
            "up-conversion suppression needs 2J >> sqrt(n_c1 n_c2) lambda'/2; \
             2J = {}, conversion scale = {conversion}",
            2.0 * params.j.abs()
        ));
    }
    let drive = n_c1.max(n_c2).sqrt() * dc.lambda;
    if params.j.abs() < 10.0 * drive {
        w.push(format!(
            "two-photon elimination needs J >> sqrt(n) lambda; J = {}, drive scale = {drive}",
            params.j.abs()
        ));
    }
    w
}
