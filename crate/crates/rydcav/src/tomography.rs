//! Reduced densities, projective atomic measurement (the quantum filter),
//! photon-number statistics, Wigner functions, and nonclassicality metrics.
//!
//! Quadrature convention: `x = (a + a^dag)/sqrt(2)`, `p = (a - a^dag)/(i
//! sqrt(2))`, `hbar = 1`, so the vacuum variance is 1/2, the vacuum Wigner
//! peak is `1/pi`, and `integral W dx dp = 1`.
//!
//! For the `V_dd = +2J` parameter sets used by the coherent-field recipes,
//! the two-photon oscillation runs between `|G> (x) |2>_c1 |0>_c2` and
//! `|R> (x) |0>_c1 |0>_c2`; the `c2` mode stays dark throughout, so the
//! single-mode reductions below target `c1` by default.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::hilbert::{AtomicLabel, HilbertSpace};
use crate::states::{QuantumState, StateRepr};
use crate::{linalg, Error, Result};

/// Which single mode to reduce onto.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    A1,
    A2,
    C1,
    C2,
}

impl Mode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "a1" => Some(Mode::A1),
            "a2" => Some(Mode::A2),
            "c1" => Some(Mode::C1),
            "c2" => Some(Mode::C2),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Mode::A1 => "a1",
            Mode::A2 => "a2",
            Mode::C1 => "c1",
            Mode::C2 => "c2",
        }
    }
}

/// Density matrix of a single mode over `n_max + 1` Fock levels.
#[derive(Debug, Clone)]
pub struct ModeDensity {
    entries: DMatrix<C64>,
}

impl ModeDensity {
    /// Validates Hermiticity, unit trace, and positive semidefiniteness
    /// (eigenvalues above -1e-10).
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::DimensionMismatch {
                left: entries.nrows(),
                right: entries.ncols(),
            });
        }
        if linalg::hermiticity_residual(&entries) > 1e-10 {
            return Err(Error::NotPure);
        }
        let trace: C64 = entries.diagonal().iter().sum();
        if (trace.re - 1.0).abs() > 1e-10 || trace.im.abs() > 1e-10 {
            return Err(Error::NotPure);
        }
        let (eigs, _) = linalg::hermitian_eigen(&entries);
        if eigs.iter().any(|&e| e < -1e-10) {
            return Err(Error::NotPure);
        }
        Ok(Self { entries })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    /// Pure Fock state `|n><n|`.
    pub fn fock(dim: usize, n: usize) -> Result<Self> {
        if n >= dim {
            return Err(Error::PhotonAboveCutoff { n, n_max: dim - 1 });
        }
        let mut m = DMatrix::zeros(dim, dim);
        m[(n, n)] = C64::new(1.0, 0.0);
        Self::new(m)
    }

    /// Truncated coherent state `|alpha><alpha|`, renormalized.
    pub fn coherent(dim: usize, alpha: C64) -> Result<Self> {
        let pref = (-alpha.norm_sqr() / 2.0).exp();
        let mut amps = DVector::zeros(dim);
        let mut cur = C64::new(pref, 0.0);
        for n in 0..dim {
            if n > 0 {
                cur = cur * alpha / C64::new((n as f64).sqrt(), 0.0);
            }
            amps[n] = cur;
        }
        let norm = amps.norm();
        amps /= C64::new(norm, 0.0);
        let rho = DMatrix::from_fn(dim, dim, |i, j| amps[i] * amps[j].conj());
        Self::new(rho)
    }

    /// `m,n,re,im` rows for every matrix entry.
    pub fn export_csv(&self) -> String {
        let mut out = String::from("m,n,re,im\n");
        for m in 0..self.dim() {
            for n in 0..self.dim() {
                let z = self.entries[(m, n)];
                out.push_str(&format!("{},{},{},{}\n", m, n, z.re, z.im));
            }
        }
        out
    }
}

/// 50/50 beam-splitter unitary on the two-mode field factor, mapping
/// normal-mode Fock coordinates onto the localized Fock grid:
/// `B |m1, m2>_c = e_(m1, m2)`.
fn beam_splitter(space: &HilbertSpace) -> DMatrix<C64> {
    let nf = space.fock_dim();
    let a = crate::hilbert::mode_annihilator(nf);
    let id = DMatrix::<C64>::identity(nf, nf);
    let a1 = a.kronecker(&id);
    let a2 = id.kronecker(&a);
    let gen =
        (a1.adjoint() * &a2 - a2.adjoint() * &a1) * C64::new(std::f64::consts::FRAC_PI_4, 0.0);
    linalg::expm(&gen)
}

/// Partial trace over the atoms and one mode, yielding the reduced density of
/// the requested mode. Normal-mode reductions conjugate the field factor with
/// the 50/50 beam splitter first; exact for states inside the rotation-closed
/// sector (total photons <= n_max), which the coherent-tail budget guarantees
/// for the figure recipes.
pub fn reduce_to_mode(state: &QuantumState, mode: Mode) -> Result<ModeDensity> {
    let space = *state.space();
    let nf = space.fock_dim();
    let nff = nf * nf;

    // accumulate rho[m, n] = sum_{s, k} psi[s; (m,k)] conj(psi[s; (n,k)])
    // (first-mode reduction; the second mode swaps the index roles)
    let reduce_first = |blocks: &[DVector<C64>]| -> DMatrix<C64> {
        let mut rho = DMatrix::zeros(nf, nf);
        for blk in blocks {
            for m in 0..nf {
                for n in 0..nf {
                    let mut acc = C64::new(0.0, 0.0);
                    for k in 0..nf {
                        acc += blk[m * nf + k] * blk[n * nf + k].conj();
                    }
                    rho[(m, n)] += acc;
                }
            }
        }
        rho
    };
    let reduce_second = |blocks: &[DVector<C64>]| -> DMatrix<C64> {
        let mut rho = DMatrix::zeros(nf, nf);
        for blk in blocks {
            for m in 0..nf {
                for n in 0..nf {
                    let mut acc = C64::new(0.0, 0.0);
                    for k in 0..nf {
                        acc += blk[k * nf + m] * blk[k * nf + n].conj();
                    }
                    rho[(m, n)] += acc;
                }
            }
        }
        rho
    };

    let rho = match state.repr() {
        StateRepr::Pure(psi) => {
            let mut blocks: Vec<DVector<C64>> = (0..4)
                .map(|s| DVector::from_fn(nff, |k, _| psi[s * nff + k]))
                .collect();
            match mode {
                Mode::A1 => reduce_first(&blocks),
                Mode::A2 => reduce_second(&blocks),
                Mode::C1 | Mode::C2 => {
                    let b = beam_splitter(&space);
                    for blk in blocks.iter_mut() {
                        *blk = &b * &*blk;
                    }
                    match mode {
                        Mode::C1 => reduce_first(&blocks),
                        _ => reduce_second(&blocks),
                    }
                }
            }
        }
        StateRepr::Density(rho_full) => {
            let rho_full = match mode {
                Mode::A1 | Mode::A2 => rho_full.clone(),
                Mode::C1 | Mode::C2 => {
                    let b_full = DMatrix::<C64>::identity(4, 4).kronecker(&beam_splitter(&space));
                    &b_full * rho_full * b_full.adjoint()
                }
            };
            let mut rho = DMatrix::zeros(nf, nf);
            for s in 0..4 {
                for m in 0..nf {
                    for n in 0..nf {
                        let mut acc = C64::new(0.0, 0.0);
                        for k in 0..nf {
                            let (i, j) = match mode {
                                Mode::A1 | Mode::C1 => (s * nff + m * nf + k, s * nff + n * nf + k),
                                Mode::A2 | Mode::C2 => (s * nff + k * nf + m, s * nff + k * nf + n),
                            };
                            acc += rho_full[(i, j)];
                        }
                        rho[(m, n)] += acc;
                    }
                }
            }
            rho
        }
    };
    ModeDensity::new(rho)
}

/// Outcome of a projective atomic measurement.
#[derive(Debug, Clone)]
pub struct ProjectionOutcome {
    pub probability: f64,
    pub state: QuantumState,
}

/// Project the atoms of a pure state onto a collective label and collapse.
/// Errors when the branch probability falls below 1e-12.
pub fn project_atoms(state: &QuantumState, label: AtomicLabel) -> Result<ProjectionOutcome> {
    let space = *state.space();
    let psi = state.amplitudes()?;
    let nff = space.fock_dim() * space.fock_dim();
    let v = label.amplitudes();

    let mut coef = DVector::<C64>::zeros(nff);
    for (s, vs) in v.iter().enumerate() {
        if vs.norm() == 0.0 {
            continue;
        }
        for k in 0..nff {
            coef[k] += vs.conj() * psi[s * nff + k];
        }
    }
    let probability = coef.norm_squared();
    if probability < 1e-12 {
        return Err(Error::ProjectionUnderflow { p: probability });
    }
    let scale = C64::new(probability.sqrt(), 0.0);
    let mut collapsed = DVector::<C64>::zeros(space.dim());
    for (s, vs) in v.iter().enumerate() {
        if vs.norm() == 0.0 {
            continue;
        }
        for k in 0..nff {
            collapsed[s * nff + k] = vs * coef[k] / scale;
        }
    }
    Ok(ProjectionOutcome {
        probability,
        state: QuantumState::pure(space, collapsed)?,
    })
}

/// Photon-number distribution `p(n)`, the diagonal of the mode density.
pub fn photon_distribution(rho: &ModeDensity) -> Vec<f64> {
    rho.entries().diagonal().iter().map(|z| z.re).collect()
}

/// Rectangular quadrature grid for the Wigner function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WignerGridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub n_x: usize,
    pub n_p: usize,
}

impl Default for WignerGridSpec {
    fn default() -> Self {
        Self {
            x_min: -4.0,
            x_max: 4.0,
            p_min: -4.0,
            p_max: 4.0,
            n_x: 81,
            n_p: 81,
        }
    }
}

/// Sampled Wigner function `W(x, p)`; `values[ix][ip]` pairs with
/// `x_axis[ix]`, `p_axis[ip]`.
#[derive(Debug, Clone)]
pub struct WignerGrid {
    pub x_axis: Vec<f64>,
    pub p_axis: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl WignerGrid {
    pub fn dx(&self) -> f64 {
        self.x_axis[1] - self.x_axis[0]
    }

    pub fn dp(&self) -> f64 {
        self.p_axis[1] - self.p_axis[0]
    }

    /// Grid-integrated `W` (rectangle rule).
    pub fn integral(&self) -> f64 {
        let cell = self.dx() * self.dp();
        self.values
            .iter()
            .map(|row| row.iter().sum::<f64>())
            .sum::<f64>()
            * cell
    }

    /// Marginal `integral W dp` as a function of x.
    pub fn x_marginal(&self) -> Vec<f64> {
        let dp = self.dp();
        self.values
            .iter()
            .map(|row| row.iter().sum::<f64>() * dp)
            .collect()
    }

    /// `x,p,W` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,p,W\n");
        for (ix, &x) in self.x_axis.iter().enumerate() {
            for (ip, &p) in self.p_axis.iter().enumerate() {
                out.push_str(&format!("{},{},{}\n", x, p, self.values[ix][ip]));
            }
        }
        out
    }
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let dx = (hi - lo) / (n - 1) as f64;
    (0..n).map(|k| lo + k as f64 * dx).collect()
}

/// Matrix element `<n|D(beta)|m>` of the displacement operator.
fn displacement_element(n: usize, m: usize, beta: C64, beta_sq: f64, gauss: f64) -> C64 {
    // <n|D|m> = sqrt(m!/n!) beta^(n-m) e^{-|beta|^2/2} L_m^(n-m)(|beta|^2), n >= m
    // <n|D|m> = sqrt(n!/m!) (-conj(beta))^(m-n) e^{-|beta|^2/2} L_n^(m-n)(|beta|^2), n < m
    let (lo, diff, pre) = if n >= m {
        (m, n - m, beta.powu((n - m) as u32))
    } else {
        (n, m - n, (-beta.conj()).powu((m - n) as u32))
    };
    let mut ratio = 1.0;
    for j in (lo + 1)..=(lo + diff) {
        ratio /= j as f64;
    }
    let lag = laguerre(lo, diff as f64, beta_sq);
    pre * C64::new(ratio.sqrt() * gauss * lag, 0.0)
}

/// Associated Laguerre polynomial `L_k^(a)(z)` by three-term recurrence.
fn laguerre(k: usize, a: f64, z: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let mut lm1 = 1.0;
    let mut l = 1.0 + a - z;
    for j in 1..k {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + a - z) * l - (jf + a) * lm1) / (jf + 1.0);
        lm1 = l;
        l = next;
    }
    l
}

/// Wigner value at phase-space point `alpha = (x + ip)/sqrt(2)` from the
/// displaced-parity identity `W(alpha) = (2/pi) Tr[rho D(2 alpha) Pi]`, with
/// the displacement expanded in Laguerre kernels.
pub fn wigner_point(rho: &ModeDensity, x: f64, p: f64) -> f64 {
    let dim = rho.dim();
    let alpha = C64::new(x, p) / C64::new(2f64.sqrt(), 0.0);
    let beta = alpha * 2.0;
    let beta_sq = beta.norm_sqr();
    let gauss = (-beta_sq / 2.0).exp();
    let mut acc = C64::new(0.0, 0.0);
    for m in 0..dim {
        let parity = if m % 2 == 0 { 1.0 } else { -1.0 };
        for n in 0..dim {
            let rho_mn = rho.entries()[(m, n)];
            if rho_mn.norm() == 0.0 {
                continue;
            }
            acc += rho_mn * displacement_element(n, m, beta, beta_sq, gauss) * parity;
        }
    }
    // the xp-density is half the alpha-density (d^2 alpha = dx dp / 2)
    acc.re / std::f64::consts::PI
}

/// Wigner function over the grid. Errors when the grid fails to capture the
/// state (integrated W off by more than 0.01).
pub fn wigner(rho: &ModeDensity, spec: &WignerGridSpec) -> Result<WignerGrid> {
    if spec.n_x < 2 || spec.n_p < 2 {
        return Err(Error::BadGrid(format!(
            "wigner grid needs at least 2x2 points, got {}x{}",
            spec.n_x, spec.n_p
        )));
    }
    let x_axis = axis(spec.x_min, spec.x_max, spec.n_x);
    let p_axis = axis(spec.p_min, spec.p_max, spec.n_p);
    let values: Vec<Vec<f64>> = x_axis
        .iter()
        .map(|&x| p_axis.iter().map(|&p| wigner_point(rho, x, p)).collect())
        .collect();
    let grid = WignerGrid {
        x_axis,
        p_axis,
        values,
    };
    let integral = grid.integral();
    if (integral - 1.0).abs() > 0.01 {
        return Err(Error::GridTooSmall { integral });
    }
    Ok(grid)
}

/// Nonclassicality metrics of a Wigner grid.
#[derive(Debug, Clone, Copy)]
pub struct NegativityMetrics {
    /// Minimum of `W` over the grid.
    pub min_value: f64,
    /// `integral |W|` over the region `W < 0` (midpoint quadrature).
    pub negative_volume: f64,
}

pub fn negativity_metrics(grid: &WignerGrid) -> NegativityMetrics {
    let cell = grid.dx() * grid.dp();
    let mut min_value = f64::INFINITY;
    let mut negative_volume = 0.0;
    for row in &grid.values {
        for &w in row {
            min_value = min_value.min(w);
            if w < 0.0 {
                negative_volume += -w * cell;
            }
        }
    }
    NegativityMetrics {
        min_value,
        negative_volume,
    }
}
