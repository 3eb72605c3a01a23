//! Time evolution and observable extraction: spectral propagation for
//! time-independent Hamiltonians, fixed-step RK4 for the rotating frame,
//! stepping-exponential propagation for the non-Hermitian no-jump branch,
//! time-averaged absorption/emission, resonance sweeps, and the NOON-state
//! protocol.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::hilbert::{HilbertSpace, OperatorMatrix};
use crate::model::{self, Branch, SystemParams};
use crate::states::{self, QuantumState};
use crate::{linalg, Error, Result};

/// Default sample count for trapezoidal time averages.
pub const DEFAULT_AVG_SAMPLES: usize = 2001;

/// Uniform sampling grid over `[t_start, t_end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub n_samples: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n_samples: usize) -> Result<Self> {
        if t_end <= t_start || !(t_end - t_start).is_finite() {
            return Err(Error::BadGrid(format!(
                "t_end = {t_end} must exceed t_start = {t_start}"
            )));
        }
        if n_samples < 2 {
            return Err(Error::BadGrid(format!(
                "need at least 2 samples, got {n_samples}"
            )));
        }
        Ok(Self {
            t_start,
            t_end,
            n_samples,
        })
    }

    /// Grid over `[0, t_end]`.
    pub fn from_duration(t_end: f64, n_samples: usize) -> Result<Self> {
        Self::new(0.0, t_end, n_samples)
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t_start) / (self.n_samples - 1) as f64
    }

    pub fn times(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..self.n_samples)
            .map(|k| self.t_start + k as f64 * dt)
            .collect()
    }
}

/// Sampled observables along a trajectory.
///
/// `norm` is the squared state norm, i.e. the survival probability of the
/// no-jump branch; it is identically 1 for unitary runs.
#[derive(Debug, Clone)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub p_g: Vec<f64>,
    pub p_s: Vec<f64>,
    pub p_a: Vec<f64>,
    pub p_r: Vec<f64>,
    pub n_a1: Vec<f64>,
    pub n_a2: Vec<f64>,
    pub n_c1: Vec<f64>,
    pub n_c2: Vec<f64>,
    pub norm: Vec<f64>,
}

pub const CSV_HEADER: &str = "t,P_G,P_S,P_A,P_R,n_a1,n_a2,n_c1,n_c2,norm";

impl TimeSeries {
    fn with_capacity(n: usize) -> Self {
        Self {
            times: Vec::with_capacity(n),
            p_g: Vec::with_capacity(n),
            p_s: Vec::with_capacity(n),
            p_a: Vec::with_capacity(n),
            p_r: Vec::with_capacity(n),
            n_a1: Vec::with_capacity(n),
            n_a2: Vec::with_capacity(n),
            n_c1: Vec::with_capacity(n),
            n_c2: Vec::with_capacity(n),
            norm: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        match name {
            "P_G" => Some(&self.p_g),
            "P_S" => Some(&self.p_s),
            "P_A" => Some(&self.p_a),
            "P_R" => Some(&self.p_r),
            "n_a1" => Some(&self.n_a1),
            "n_a2" => Some(&self.n_a2),
            "n_c1" => Some(&self.n_c1),
            "n_c2" => Some(&self.n_c2),
            "norm" => Some(&self.norm),
            _ => None,
        }
    }

    /// Full-precision CSV with the header
    /// `t,P_G,P_S,P_A,P_R,n_a1,n_a2,n_c1,n_c2,norm`.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.len() * 96);
        out.push_str(CSV_HEADER);
        out.push('\n');
        for k in 0..self.len() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                self.times[k],
                self.p_g[k],
                self.p_s[k],
                self.p_a[k],
                self.p_r[k],
                self.n_a1[k],
                self.n_a2[k],
                self.n_c1[k],
                self.n_c2[k],
                self.norm[k],
            ));
        }
        out
    }
}

/// Per-sample observable extraction straight from amplitudes, O(dim) per
/// sample. Normal-mode numbers use
/// `n_c1,2 = (n_a1 + n_a2)/2 +- Re<a1^dag a2>`.
#[derive(Debug, Clone)]
pub struct Observables {
    space: HilbertSpace,
}

#[derive(Debug, Clone, Copy)]
pub struct ObsRow {
    pub p_g: f64,
    pub p_s: f64,
    pub p_a: f64,
    pub p_r: f64,
    pub n_a1: f64,
    pub n_a2: f64,
    pub n_c1: f64,
    pub n_c2: f64,
    pub norm: f64,
}

impl Observables {
    pub fn new(space: HilbertSpace) -> Self {
        Self { space }
    }

    pub fn row(&self, psi: &DVector<C64>) -> ObsRow {
        let nf = self.space.fock_dim();
        let nff = nf * nf;
        let half = std::f64::consts::FRAC_1_SQRT_2;
        let (mut p_g, mut p_s, mut p_a, mut p_r) = (0.0, 0.0, 0.0, 0.0);
        let (mut n_a1, mut n_a2, mut norm) = (0.0, 0.0, 0.0);
        let mut hop = C64::new(0.0, 0.0);
        for n1 in 0..nf {
            for n2 in 0..nf {
                let f = n1 * nf + n2;
                let gg = psi[f];
                let gr = psi[nff + f];
                let rg = psi[2 * nff + f];
                let rr = psi[3 * nff + f];
                p_g += gg.norm_sqr();
                p_r += rr.norm_sqr();
                let s_amp = (gr + rg) * half;
                let a_amp = (rg - gr) * half;
                p_s += s_amp.norm_sqr();
                p_a += a_amp.norm_sqr();
                let w = gg.norm_sqr() + gr.norm_sqr() + rg.norm_sqr() + rr.norm_sqr();
                n_a1 += n1 as f64 * w;
                n_a2 += n2 as f64 * w;
                norm += w;
                // <a1^dag a2>: pairs (n1, n2) -> (n1 + 1, n2 - 1)
                if n1 + 1 < nf && n2 >= 1 {
                    let amp = ((n1 + 1) as f64 * n2 as f64).sqrt();
                    let gp = (n1 + 1) * nf + (n2 - 1);
                    for s in 0..4 {
                        hop += psi[s * nff + gp].conj() * psi[s * nff + f] * amp;
                    }
                }
            }
        }
        let sym = (n_a1 + n_a2) / 2.0;
        ObsRow {
            p_g,
            p_s,
            p_a,
            p_r,
            n_a1,
            n_a2,
            n_c1: sym + hop.re,
            n_c2: sym - hop.re,
            norm,
        }
    }
}

fn push_row(series: &mut TimeSeries, t: f64, row: ObsRow) {
    series.times.push(t);
    series.p_g.push(row.p_g);
    series.p_s.push(row.p_s);
    series.p_a.push(row.p_a);
    series.p_r.push(row.p_r);
    series.n_a1.push(row.n_a1);
    series.n_a2.push(row.n_a2);
    series.n_c1.push(row.n_c1);
    series.n_c2.push(row.n_c2);
    series.norm.push(row.norm);
}

/// Exact propagator for a time-independent Hermitian Hamiltonian, backed by
/// its eigendecomposition.
pub struct SpectralPropagator {
    eigvals: DVector<f64>,
    eigvecs: DMatrix<C64>,
    coeffs: DVector<C64>,
}

impl SpectralPropagator {
    pub fn new(h: &OperatorMatrix, psi0: &DVector<C64>) -> Result<Self> {
        if h.dim() != psi0.len() {
            return Err(Error::DimensionMismatch {
                left: h.dim(),
                right: psi0.len(),
            });
        }
        if !h.hermitian {
            return Err(Error::StepSize(
                "spectral propagation requires a Hermitian Hamiltonian".into(),
            ));
        }
        let (eigvals, eigvecs) = linalg::hermitian_eigen(&h.entries);
        let coeffs = eigvecs.adjoint() * psi0;
        Ok(Self {
            eigvals,
            eigvecs,
            coeffs,
        })
    }

    pub fn state_at(&self, t: f64) -> DVector<C64> {
        let rotated = DVector::from_fn(self.coeffs.len(), |k, _| {
            self.coeffs[k] * C64::from_polar(1.0, -self.eigvals[k] * t)
        });
        &self.eigvecs * rotated
    }
}

/// Full trajectory: sampled observables plus the state snapshot at every
/// sample point.
pub struct Trajectory {
    pub series: TimeSeries,
    pub states: Vec<DVector<C64>>,
}

impl Trajectory {
    pub fn final_state(&self) -> &DVector<C64> {
        self.states.last().expect("grid has at least two samples")
    }
}

/// Evolve under a time-independent Hamiltonian. Hermitian operators are
/// propagated by spectral decomposition (exact up to diagonalization error);
/// operators flagged non-Hermitian are propagated by repeated application of
/// the step exponential with no renormalization, so the norm channel tracks
/// the no-jump survival probability.
pub fn evolve(h: &OperatorMatrix, psi0: &QuantumState, grid: &TimeGrid) -> Result<Trajectory> {
    let space = *psi0.space();
    let v0 = psi0.amplitudes()?;
    if h.dim() != v0.len() {
        return Err(Error::DimensionMismatch {
            left: h.dim(),
            right: v0.len(),
        });
    }
    let obs = Observables::new(space);
    let times = grid.times();
    let mut series = TimeSeries::with_capacity(times.len());
    let mut snapshots = Vec::with_capacity(times.len());

    if h.hermitian {
        let prop = SpectralPropagator::new(h, v0)?;
        for &t in &times {
            let psi = prop.state_at(t);
            push_row(&mut series, t, obs.row(&psi));
            snapshots.push(psi);
        }
    } else {
        let step = linalg::expm(&(&h.entries * C64::new(0.0, -grid.dt())));
        let mut psi = if grid.t_start == 0.0 {
            v0.clone()
        } else {
            linalg::expm(&(&h.entries * C64::new(0.0, -grid.t_start))) * v0
        };
        for &t in &times {
            push_row(&mut series, t, obs.row(&psi));
            snapshots.push(psi.clone());
            psi = &step * psi;
        }
    }
    Ok(Trajectory {
        series,
        states: snapshots,
    })
}

/// Infinity norm (max row sum) of a complex matrix.
fn inf_norm(m: &DMatrix<C64>) -> f64 {
    (0..m.nrows())
        .map(|i| m.row(i).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Evolve under a time-dependent Hamiltonian with fixed-step RK4. The
/// internal step satisfies `||H|| dt <= 0.015` (and `dt <= dt_max`), which
/// keeps the norm drift below 1e-6 per unit time.
pub fn evolve_td<F>(
    h_of_t: F,
    psi0: &QuantumState,
    grid: &TimeGrid,
    dt_max: f64,
) -> Result<Trajectory>
where
    F: Fn(f64) -> DMatrix<C64>,
{
    if dt_max <= 0.0 || !dt_max.is_finite() {
        return Err(Error::StepSize(format!(
            "dt_max = {dt_max} must be positive and finite"
        )));
    }
    let space = *psi0.space();
    let v0 = psi0.amplitudes()?;
    let h0 = h_of_t(grid.t_start);
    if h0.nrows() != v0.len() {
        return Err(Error::DimensionMismatch {
            left: h0.nrows(),
            right: v0.len(),
        });
    }
    // 1.5x headroom over the t_start norm; the rotating-frame phase factors
    // leave row sums nearly constant in time.
    let bound = (1.5 * inf_norm(&h0)).max(1e-12);
    let dt_target = (0.015 / bound).min(dt_max);

    let obs = Observables::new(space);
    let times = grid.times();
    let sample_dt = grid.dt();
    let substeps = (sample_dt / dt_target).ceil().max(1.0) as usize;
    let dt = sample_dt / substeps as f64;

    let mi = C64::new(0.0, -1.0);
    let deriv = |t: f64, psi: &DVector<C64>| -> DVector<C64> { h_of_t(t) * psi * mi };

    let mut series = TimeSeries::with_capacity(times.len());
    let mut snapshots = Vec::with_capacity(times.len());
    let mut psi = v0.clone();
    push_row(&mut series, times[0], obs.row(&psi));
    snapshots.push(psi.clone());
    let mut t = times[0];
    for &t_next in &times[1..] {
        for _ in 0..substeps {
            let k1 = deriv(t, &psi);
            let k2 = deriv(t + dt / 2.0, &(&psi + &k1 * C64::new(dt / 2.0, 0.0)));
            let k3 = deriv(t + dt / 2.0, &(&psi + &k2 * C64::new(dt / 2.0, 0.0)));
            let k4 = deriv(t + dt, &(&psi + &k3 * C64::new(dt, 0.0)));
            psi += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4)
                * C64::new(dt / 6.0, 0.0);
            t += dt;
        }
        // land exactly on the sample point to avoid accumulation drift
        t = t_next;
        push_row(&mut series, t_next, obs.row(&psi));
        snapshots.push(psi.clone());
    }
    Ok(Trajectory {
        series,
        states: snapshots,
    })
}

/// Averaging window for the absorption/emission figures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Window {
    /// `2 pi / (sqrt(n(n-1)) xi)`, the resonant two-photon period for the
    /// initial photon number `n`. The formula diverges at `n = 1`; that point
    /// falls back to `2 pi / xi` by convention and is flagged in logs.
    PerPhoton,
    /// Fixed `2 pi / (sqrt(2) xi)`, the `n = 2` resonance period.
    TwoPhoton,
    /// Explicit duration.
    Fixed(f64),
}

impl Window {
    pub fn duration(&self, xi: f64, n: usize) -> Result<f64> {
        let tau = std::f64::consts::TAU;
        match self {
            Window::PerPhoton => match n {
                0 => Err(Error::WindowUndefined(0)),
                1 => {
                    log::warn!(
                        "per-photon window diverges at n = 1; using 2 pi / xi by convention"
                    );
                    Ok(tau / xi)
                }
                _ => Ok(tau / ((n as f64 * (n as f64 - 1.0)).sqrt() * xi)),
            },
            Window::TwoPhoton => Ok(tau / (2f64.sqrt() * xi)),
            Window::Fixed(t) => {
                if *t > 0.0 {
                    Ok(*t)
                } else {
                    Err(Error::BadGrid(format!(
                        "window duration {t} must be positive"
                    )))
                }
            }
        }
    }
}

/// Trapezoidal mean of uniformly sampled values.
pub fn trapezoid_mean(values: &[f64]) -> f64 {
    let n = values.len();
    debug_assert!(n >= 2);
    let interior: f64 = values[1..n - 1].iter().sum();
    (0.5 * values[0] + interior + 0.5 * values[n - 1]) / (n - 1) as f64
}

fn branch_channel(branch: Branch) -> &'static str {
    match branch {
        Branch::C1 => "n_c1",
        Branch::C2 => "n_c2",
    }
}

fn branch_fock(
    space: &HilbertSpace,
    atoms: crate::hilbert::AtomicLabel,
    branch: Branch,
    n: usize,
) -> Result<QuantumState> {
    match branch {
        Branch::C1 => states::normal_mode_fock(space, atoms, n, 0),
        Branch::C2 => states::normal_mode_fock(space, atoms, 0, n),
    }
}

/// Time-averaged photon absorption `n(0) - mean_t <n_cb(t)>` for the initial
/// state `|G> (x) |n>_cb |0>_other`, evolved under the full interaction
/// Hamiltonian.
pub fn time_averaged_absorption(
    params: &SystemParams,
    space: &HilbertSpace,
    branch: Branch,
    n_init: usize,
    window: Window,
    n_samples: usize,
) -> Result<f64> {
    let dc = model::derived_couplings(params)?;
    let duration = window.duration(dc.xi, n_init)?;
    let psi0 = branch_fock(space, crate::hilbert::AtomicLabel::G, branch, n_init)?;
    let h = model::build_h_interaction(params, space)?;
    let grid = TimeGrid::from_duration(duration, n_samples.max(2))?;
    let traj = evolve(&h, &psi0, &grid)?;
    let mean = trapezoid_mean(traj.series.channel(branch_channel(branch)).unwrap());
    Ok(n_init as f64 - mean)
}

/// Time-averaged photon emission for the initial state `|R> (x) |n>_cb |0>`.
#[derive(Debug, Clone, Copy)]
pub struct Emission {
    /// `mean_t <n_cb(t)> - n(0)`.
    pub raw: f64,
    /// `raw / n(0)`, defined for `n(0) >= 1`.
    pub normalized: Option<f64>,
}

pub fn time_averaged_emission(
    params: &SystemParams,
    space: &HilbertSpace,
    branch: Branch,
    n_init: usize,
    window: Window,
    n_samples: usize,
) -> Result<Emission> {
    let dc = model::derived_couplings(params)?;
    let duration = window.duration(dc.xi, n_init.max(2))?;
    let psi0 = branch_fock(space, crate::hilbert::AtomicLabel::R, branch, n_init)?;
    let h = model::build_h_interaction(params, space)?;
    let grid = TimeGrid::from_duration(duration, n_samples.max(2))?;
    let traj = evolve(&h, &psi0, &grid)?;
    let mean = trapezoid_mean(traj.series.channel(branch_channel(branch)).unwrap());
    let raw = mean - n_init as f64;
    Ok(Emission {
        raw,
        normalized: (n_init >= 1).then(|| raw / n_init as f64),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub vdd_over_j: f64,
    pub absorption: f64,
}

/// Absorption versus `V_dd/J`, with the argmax location.
#[derive(Debug, Clone)]
pub struct SweepCurve {
    pub points: Vec<SweepPoint>,
    pub argmax: SweepPoint,
    pub grid_step: f64,
}

/// Sweep the Rydberg shift over `vdd_over_j = [lo, hi]` at `n_points` evenly
/// spaced values. Points are independent full-model evolutions and run in
/// parallel; the output ordering is by input index. Ties in the argmax go to
/// the lowest `V_dd`.
pub fn sweep_vdd(
    params: &SystemParams,
    space: &HilbertSpace,
    branch: Branch,
    n_init: usize,
    vdd_over_j: (f64, f64),
    n_points: usize,
    n_samples: usize,
) -> Result<SweepCurve> {
    if n_points < 2 {
        return Err(Error::BadGrid(format!(
            "sweep needs at least 2 points, got {n_points}"
        )));
    }
    let (lo, hi) = vdd_over_j;
    if hi <= lo || !(hi - lo).is_finite() {
        return Err(Error::BadGrid(format!("sweep range [{lo}, {hi}] is empty")));
    }
    let step = (hi - lo) / (n_points - 1) as f64;
    let points: Vec<SweepPoint> = (0..n_points)
        .into_par_iter()
        .map(|k| {
            let x = lo + k as f64 * step;
            let mut p = *params;
            p.v_dd = x * params.j;
            let absorption =
                time_averaged_absorption(&p, space, branch, n_init, Window::PerPhoton, n_samples)?;
            Ok(SweepPoint {
                vdd_over_j: x,
                absorption,
            })
        })
        .collect::<Result<_>>()?;
    let argmax = points
        .iter()
        .copied()
        .reduce(|best, p| {
            if p.absorption > best.absorption {
                p
            } else {
                best
            }
        })
        .expect("n_points >= 2");
    Ok(SweepCurve {
        points,
        argmax,
        grid_step: step,
    })
}

/// Outcome of the NOON-state scan.
#[derive(Debug, Clone, Copy)]
pub struct NoonResult {
    /// Interaction time maximizing the fidelity.
    pub time: f64,
    /// Peak fidelity against `(|2,0>_c + |0,2>_c)/sqrt(2)` with the atoms in
    /// `|G>` (global phase removed).
    pub fidelity: f64,
    /// Effective-model period estimate `pi / (sqrt(2) xi')` used to center
    /// the scan.
    pub period_estimate: f64,
}

/// Scan within the first two effective Rabi periods of the `|G>|1,1>_a`
/// evolution for the time maximizing the fidelity to the two-photon NOON
/// state. The scan brackets the first full return of the two-photon envelope
/// (`t` near `pi / (sqrt(2) xi')`), where the transferred component comes
/// back with a pi phase; the fast hopping phase at `4J` is aligned inside
/// that window. (Bare photon hopping alone already maps `|1,1>_a` onto a
/// NOON state at the much earlier quarter-hopping time `pi/4J`; that
/// beam-splitter conversion is not this protocol and is excluded by the
/// window.) Errors with a wrong-regime diagnosis when the fidelity ceiling
/// stays below 0.5.
pub fn noon_protocol(params: &SystemParams, space: &HilbertSpace) -> Result<NoonResult> {
    let dc = model::derived_couplings(params)?;
    let xi_eff = if params.v_dd >= 0.0 {
        dc.xi_prime_plus
    } else {
        dc.xi_prime_minus
    };
    let period = std::f64::consts::PI / (2f64.sqrt() * xi_eff.abs());

    let psi0 = states::localized_fock(space, crate::hilbert::AtomicLabel::G, 1, 1)?;
    let h = model::build_h_interaction(params, space)?;
    let prop = SpectralPropagator::new(&h, psi0.amplitudes()?)?;

    let half = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let plus = states::normal_mode_fock(space, crate::hilbert::AtomicLabel::G, 2, 0)?;
    let minus = states::normal_mode_fock(space, crate::hilbert::AtomicLabel::G, 0, 2)?;
    let target = states::superposition(&[(half, &plus), (half, &minus)])?;

    // <target|psi(t)> = sum_k conj(tau_k) c_k e^{-i E_k t} in the eigenbasis,
    // O(dim) per scanned time
    let tau = prop.eigvecs.adjoint() * target.amplitudes()?;
    let weights: Vec<(C64, f64)> = tau
        .iter()
        .zip(prop.coeffs.iter())
        .zip(prop.eigvals.iter())
        .map(|((t_k, c_k), &e_k)| (t_k.conj() * c_k, e_k))
        .collect();
    let fid_at = |t: f64| -> f64 {
        weights
            .iter()
            .map(|&(w, e)| w * C64::from_polar(1.0, -e * t))
            .sum::<C64>()
            .norm_sqr()
    };

    // The fidelity carries a fast phase at ~4J on top of the slow Rabi
    // envelope, so the scan step must resolve the fast scale.
    let fast_step =
        (std::f64::consts::TAU / (4.0 * params.j.abs().max(1e-6)) / 16.0).min(period / 400.0);
    let mut best_t = 0.0;
    let mut best_f = 0.0;
    let mut t = 0.6 * period;
    while t <= 1.4 * period {
        let f = fid_at(t);
        if f > best_f {
            best_f = f;
            best_t = t;
        }
        t += fast_step;
    }
    // refine around the coarse peak
    let fine = fast_step / 40.0;
    let mut t = best_t - fast_step;
    while t <= best_t + fast_step {
        let f = fid_at(t);
        if f > best_f {
            best_f = f;
            best_t = t;
        }
        t += fine;
    }
    if best_f < 0.5 {
        return Err(Error::WrongRegime { fidelity: best_f });
    }
    Ok(NoonResult {
        time: best_t,
        fidelity: best_f,
        period_estimate: period,
    })
}

/// Fit the dominant oscillation period of a sampled channel by scanning the
/// windowed Fourier magnitude around `period_hint` (a sin^2 oscillation of
/// period T has its spectral line at angular frequency 2 pi / T).
pub fn fit_period(times: &[f64], values: &[f64], period_hint: f64) -> Option<f64> {
    if times.len() != values.len() || times.len() < 8 || period_hint <= 0.0 || period_hint.is_nan()
    {
        return None;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let power = |omega: f64| -> f64 {
        let mut acc = C64::new(0.0, 0.0);
        for (&t, &y) in times.iter().zip(values) {
            acc += C64::from_polar(y - mean, omega * t);
        }
        acc.norm()
    };
    let w_hint = std::f64::consts::TAU / period_hint;
    let scan = |lo: f64, hi: f64, n: usize| -> f64 {
        let mut best = (0.0, lo);
        for k in 0..=n {
            let w = lo + (hi - lo) * k as f64 / n as f64;
            let p = power(w);
            if p > best.0 {
                best = (p, w);
            }
        }
        best.1
    };
    let w1 = scan(0.5 * w_hint, 1.5 * w_hint, 600);
    let dw = w_hint / 600.0;
    let w2 = scan(w1 - dw, w1 + dw, 200);
    Some(std::f64::consts::TAU / w2)
}

/// Largest absolute drift of `<N_total>` along a trajectory.
pub fn total_excitation_drift(space: &HilbertSpace, traj: &Trajectory) -> f64 {
    let n_op = crate::hilbert::total_excitation(space).entries;
    let mut reference = None;
    let mut worst: f64 = 0.0;
    for psi in &traj.states {
        let val = (psi.adjoint() * &n_op * psi)[(0, 0)].re;
        match reference {
            None => reference = Some(val),
            Some(r) => worst = worst.max((val - r).abs()),
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::AtomicLabel;
    use crate::model::{
        build_h_effective, build_h_interaction, build_h_nonhermitian, derived_couplings,
        resonance_vdd, CouplingConstant, EffectiveOptions, RotatingHamiltonian,
    };

    fn fig2_params() -> SystemParams {
        SystemParams::unit_g(1.0, 10.0, 10.0, 20.0)
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(0.0, 0.0, 10).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 1).is_err());
        let g = TimeGrid::new(0.0, 1.0, 11).unwrap();
        assert!((g.dt() - 0.1).abs() < 1e-15);
        assert_eq!(g.times().len(), 11);
    }

    #[test]
    fn zero_hamiltonian_is_stationary() {
        let sp = HilbertSpace::new(2).unwrap();
        let h = OperatorMatrix::hermitian(DMatrix::zeros(sp.dim(), sp.dim()));
        let psi0 = states::localized_fock(&sp, AtomicLabel::S, 1, 0).unwrap();
        let grid = TimeGrid::from_duration(5.0, 21).unwrap();
        let traj = evolve(&h, &psi0, &grid).unwrap();
        for psi in &traj.states {
            let d = (psi - psi0.amplitudes().unwrap()).norm();
            assert!(d < 1e-12);
        }
        for &v in &traj.series.norm {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_level_rabi_matches_closed_form() {
        // Under the bare effective Hamiltonian the pair {|G,2>_c1, |R,0>} is
        // an exact two-level system: P_R(t) = sin^2(sqrt(2) xi' t).
        let sp = HilbertSpace::new(3).unwrap();
        let p = fig2_params();
        let dc = derived_couplings(&p).unwrap();
        let h = build_h_effective(
            &p,
            &sp,
            Branch::C1,
            &EffectiveOptions {
                coupling: CouplingConstant::XiPrime,
                ..Default::default()
            },
        )
        .unwrap();
        let psi0 = states::normal_mode_fock(&sp, AtomicLabel::G, 2, 0).unwrap();
        let quarter = std::f64::consts::FRAC_PI_2 / (2f64.sqrt() * dc.xi_prime_plus);
        let grid = TimeGrid::from_duration(2.0 * quarter, 101).unwrap();
        let traj = evolve(&h, &psi0, &grid).unwrap();
        for (k, &t) in traj.series.times.iter().enumerate() {
            let expect = (2f64.sqrt() * dc.xi_prime_plus * t).sin().powi(2);
            assert!(
                (traj.series.p_r[k] - expect).abs() < 1e-9,
                "t = {t}: {} vs {expect}",
                traj.series.p_r[k]
            );
        }
    }

    #[test]
    fn observables_match_operator_expectations() {
        let sp = HilbertSpace::new(3).unwrap();
        let a = states::normal_mode_fock(&sp, AtomicLabel::S, 2, 1).unwrap();
        let b = states::localized_fock(&sp, AtomicLabel::R, 1, 0).unwrap();
        let st =
            states::superposition(&[(C64::new(0.8, 0.1), &a), (C64::new(0.0, 0.55), &b)]).unwrap();
        let v = st.amplitudes().unwrap();
        let obs = Observables::new(sp).row(v);

        let check = |got: f64, op: DMatrix<C64>| {
            let want = (v.adjoint() * op * v)[(0, 0)].re;
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        };
        use crate::hilbert::{
            annihilation_local, annihilation_normal, atomic_operator, AtomicKind,
        };
        let a1 = annihilation_local(&sp, 1).unwrap().entries;
        let a2 = annihilation_local(&sp, 2).unwrap().entries;
        let c1 = annihilation_normal(&sp, 1).unwrap().entries;
        let c2 = annihilation_normal(&sp, 2).unwrap().entries;
        check(obs.n_a1, a1.adjoint() * &a1);
        check(obs.n_a2, a2.adjoint() * &a2);
        check(obs.n_c1, c1.adjoint() * &c1);
        check(obs.n_c2, c2.adjoint() * &c2);
        check(
            obs.p_g,
            atomic_operator(&sp, AtomicKind::ProjG).unwrap().entries,
        );
        check(
            obs.p_s,
            atomic_operator(&sp, AtomicKind::ProjS).unwrap().entries,
        );
        check(
            obs.p_a,
            atomic_operator(&sp, AtomicKind::ProjA).unwrap().entries,
        );
        check(
            obs.p_r,
            atomic_operator(&sp, AtomicKind::ProjR).unwrap().entries,
        );
        assert!((obs.norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fig2_regime_small_cutoff() {
        let sp = HilbertSpace::new(3).unwrap();
        let p = fig2_params();
        let dc = derived_couplings(&p).unwrap();
        let period = std::f64::consts::PI / (2f64.sqrt() * dc.xi_prime_plus);
        let psi0 = states::localized_fock(&sp, AtomicLabel::G, 1, 1).unwrap();
        let h = build_h_interaction(&p, &sp).unwrap();
        let grid = TimeGrid::from_duration(2.0 * period, 1501).unwrap();
        let traj = evolve(&h, &psi0, &grid).unwrap();

        let max = |ch: &[f64]| ch.iter().copied().fold(f64::MIN, f64::max);
        assert!((0.40..=0.55).contains(&max(&traj.series.p_r)));
        assert!(max(&traj.series.p_s) < 0.1);
        assert!(max(&traj.series.p_a) < 0.1);
        for k in 0..traj.series.len() {
            assert!((traj.series.n_a1[k] - traj.series.n_a2[k]).abs() < 1e-8);
            assert!((traj.series.norm[k] - 1.0).abs() < 1e-9);
            assert!((traj.series.n_c2[k] - 1.0).abs() < 0.05);
        }
        assert!(total_excitation_drift(&sp, &traj) < 1e-9);

        let fitted = fit_period(&traj.series.times, &traj.series.p_r, period).unwrap();
        assert!(
            (fitted / period - 1.0).abs() < 0.1,
            "fitted {fitted} vs {period}"
        );
    }

    #[test]
    fn constant_h_td_matches_spectral() {
        let sp = HilbertSpace::new(2).unwrap();
        let p = SystemParams::unit_g(1.0, 10.0, 2.0, 4.0);
        let h = build_h_interaction(&p, &sp).unwrap();
        let psi0 = states::localized_fock(&sp, AtomicLabel::G, 1, 1).unwrap();
        let grid = TimeGrid::from_duration(5.0, 26).unwrap();
        let spectral = evolve(&h, &psi0, &grid).unwrap();
        let td = evolve_td(|_| h.entries.clone(), &psi0, &grid, 0.05).unwrap();
        for k in 0..grid.n_samples {
            let d = (&spectral.states[k] - &td.states[k]).norm();
            assert!(d < 1e-6, "sample {k}: {d:.3e}");
        }
        assert!(evolve_td(|_| h.entries.clone(), &psi0, &grid, 0.0).is_err());
    }

    #[test]
    fn rotating_frame_reproduces_commuting_observables() {
        // P_R and n_c1 commute with the frame generator, so the rotating-frame
        // evolution must reproduce them.
        let sp = HilbertSpace::new(3).unwrap();
        let p = SystemParams::unit_g(1.0, 10.0, 1.0, 2.0);
        let psi0 = states::localized_fock(&sp, AtomicLabel::G, 1, 1).unwrap();
        let grid = TimeGrid::from_duration(40.0, 81).unwrap();

        let h = build_h_interaction(&p, &sp).unwrap();
        let lab = evolve(&h, &psi0, &grid).unwrap();

        let rot = RotatingHamiltonian::new(&p, &sp).unwrap();
        let framed = evolve_td(|t| rot.at(t), &psi0, &grid, 0.05).unwrap();

        for k in 0..grid.n_samples {
            assert!(
                (lab.series.p_r[k] - framed.series.p_r[k]).abs() < 1e-4,
                "P_R mismatch at sample {k}"
            );
            assert!(
                (lab.series.n_c1[k] - framed.series.n_c1[k]).abs() < 1e-4,
                "n_c1 mismatch at sample {k}"
            );
        }
    }

    #[test]
    fn absorption_resonant_and_dispersive() {
        let sp = HilbertSpace::new(4).unwrap();
        let mut p = fig2_params();
        p.v_dd = resonance_vdd(&p, 2, Branch::C1).unwrap();
        let on = time_averaged_absorption(&p, &sp, Branch::C1, 2, Window::PerPhoton, 1001).unwrap();
        assert!((on - 1.0).abs() < 0.1, "resonant absorption {on}");

        p.v_dd = 0.0;
        let off =
            time_averaged_absorption(&p, &sp, Branch::C1, 2, Window::PerPhoton, 1001).unwrap();
        assert!(off.abs() < 0.05, "dispersive absorption {off}");
    }

    #[test]
    fn absorption_average_converges() {
        let sp = HilbertSpace::new(3).unwrap();
        let p = fig2_params();
        let full =
            time_averaged_absorption(&p, &sp, Branch::C1, 2, Window::PerPhoton, 2001).unwrap();
        let half =
            time_averaged_absorption(&p, &sp, Branch::C1, 2, Window::PerPhoton, 1001).unwrap();
        assert!((full - half).abs() < 1e-3, "{full} vs {half}");
    }

    #[test]
    fn emission_vacuum_and_stationary_ground() {
        let sp = HilbertSpace::new(4).unwrap();
        let p = fig2_params();
        let vac = time_averaged_emission(&p, &sp, Branch::C1, 0, Window::TwoPhoton, 1001).unwrap();
        assert!((vac.raw - 1.0).abs() < 0.1, "vacuum emission {}", vac.raw);
        assert!(vac.normalized.is_none());

        // |G> with zero photons is stationary: nothing to emit
        let h = build_h_interaction(&p, &sp).unwrap();
        let psi0 = states::localized_fock(&sp, AtomicLabel::G, 0, 0).unwrap();
        let dc = derived_couplings(&p).unwrap();
        let grid =
            TimeGrid::from_duration(Window::TwoPhoton.duration(dc.xi, 0).unwrap(), 201).unwrap();
        let traj = evolve(&h, &psi0, &grid).unwrap();
        let mean = trapezoid_mean(&traj.series.n_c1);
        assert!(mean.abs() < 1e-10);
    }

    #[test]
    fn normalized_emission_decreases() {
        let sp = HilbertSpace::new(5).unwrap();
        let p = fig2_params();
        let e2 = time_averaged_emission(&p, &sp, Branch::C1, 2, Window::TwoPhoton, 1001)
            .unwrap()
            .normalized
            .unwrap();
        let e3 = time_averaged_emission(&p, &sp, Branch::C1, 3, Window::TwoPhoton, 1001)
            .unwrap()
            .normalized
            .unwrap();
        assert!(e2 > e3, "normalized emission should fall: {e2} vs {e3}");
    }

    #[test]
    fn sweep_finds_resonance() {
        let sp = HilbertSpace::new(4).unwrap();
        let p = fig2_params();
        let curve = sweep_vdd(&p, &sp, Branch::C1, 2, (1.8, 2.2), 9, 801).unwrap();
        assert_eq!(curve.points.len(), 9);
        assert!((curve.argmax.vdd_over_j - 2.0).abs() < 1e-12);
        assert!((curve.grid_step - 0.05).abs() < 1e-12);
        // deterministic ordering by input index
        for (k, pt) in curve.points.iter().enumerate() {
            assert!((pt.vdd_over_j - (1.8 + 0.05 * k as f64)).abs() < 1e-12);
        }
        assert!(sweep_vdd(&p, &sp, Branch::C1, 2, (2.0, 1.0), 5, 100).is_err());
    }

    #[test]
    fn noon_scan_small_cutoff() {
        let sp = HilbertSpace::new(3).unwrap();
        let p = fig2_params();
        let res = noon_protocol(&p, &sp).unwrap();
        assert!(res.fidelity > 0.95, "NOON fidelity {}", res.fidelity);
        assert!(
            (res.time / res.period_estimate - 1.0).abs() < 0.1,
            "time {} vs period {}",
            res.time,
            res.period_estimate
        );

        // fidelity at t = 0 vanishes: the (+) and (-) superpositions are
        // orthogonal
        let h = build_h_interaction(&p, &sp).unwrap();
        let psi0 = states::localized_fock(&sp, AtomicLabel::G, 1, 1).unwrap();
        let prop = SpectralPropagator::new(&h, psi0.amplitudes().unwrap()).unwrap();
        let half = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let plus = states::normal_mode_fock(&sp, AtomicLabel::G, 2, 0).unwrap();
        let minus = states::normal_mode_fock(&sp, AtomicLabel::G, 0, 2).unwrap();
        let target = states::superposition(&[(half, &plus), (half, &minus)]).unwrap();
        let f0 = target
            .amplitudes()
            .unwrap()
            .dotc(&prop.state_at(0.0))
            .norm_sqr();
        assert!(f0 < 1e-20);
    }

    #[test]
    fn nonhermitian_norm_decay() {
        let sp = HilbertSpace::new(3).unwrap();
        let kappa = 1e-3;
        let p = fig2_params().with_decay(kappa, 0.0, 0.0);
        let h = build_h_nonhermitian(&p, &sp).unwrap();
        assert!(!h.hermitian);
        let psi0 = states::localized_fock(&sp, AtomicLabel::G, 1, 1).unwrap();
        let grid = TimeGrid::from_duration(50.0, 101).unwrap();
        let traj = evolve(&h, &psi0, &grid).unwrap();

        // monotone non-increasing survival
        for w in traj.series.norm.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        // initial slope = -kappa <n_a1 + n_a2>(0)
        let slope = (traj.series.norm[1] - traj.series.norm[0]) / grid.dt();
        let expect = -kappa * (traj.series.n_a1[0] + traj.series.n_a2[0]);
        assert!(
            (slope / expect - 1.0).abs() < 0.01,
            "slope {slope} vs {expect}"
        );
        // survival tracks exp(-n_bar kappa t) with n_bar = 2 before the
        // two-photon absorption sets in
        for (k, &t) in traj.series.times.iter().enumerate() {
            let pred = (-2.0 * kappa * t).exp();
            assert!(
                (traj.series.norm[k] - pred).abs() / pred < 0.1,
                "t = {t}: {} vs {pred}",
                traj.series.norm[k]
            );
        }
    }

    #[test]
    fn fit_period_on_synthetic_data() {
        let period = 37.0;
        let omega = std::f64::consts::PI / period;
        let times: Vec<f64> = (0..2000).map(|k| k as f64 * 0.05).collect();
        let values: Vec<f64> = times
            .iter()
            .map(|&t| (omega * t).sin().powi(2) + 0.01 * (13.0 * t).sin())
            .collect();
        let fitted = fit_period(&times, &values, 30.0).unwrap();
        assert!((fitted - period).abs() / period < 0.01, "fitted {fitted}");
    }

    #[test]
    fn window_conventions() {
        let xi = 0.01;
        assert!(matches!(
            Window::PerPhoton.duration(xi, 0),
            Err(Error::WindowUndefined(0))
        ));
        let w1 = Window::PerPhoton.duration(xi, 1).unwrap();
        assert!((w1 - std::f64::consts::TAU / xi).abs() < 1e-12);
        let w2 = Window::PerPhoton.duration(xi, 2).unwrap();
        let fixed = Window::TwoPhoton.duration(xi, 7).unwrap();
        assert!((w2 - fixed).abs() < 1e-12);
        assert!(Window::Fixed(-1.0).duration(xi, 2).is_err());
    }

    #[test]
    fn csv_round_trip_shape() {
        let sp = HilbertSpace::new(2).unwrap();
        let p = SystemParams::unit_g(1.0, 10.0, 2.0, 4.0);
        let h = build_h_interaction(&p, &sp).unwrap();
        let psi0 = states::localized_fock(&sp, AtomicLabel::G, 1, 1).unwrap();
        let grid = TimeGrid::from_duration(1.0, 5).unwrap();
        let traj = evolve(&h, &psi0, &grid).unwrap();
        let csv = traj.series.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 6);
        for line in &lines[1..] {
            assert_eq!(line.split(',').count(), 10);
        }
    }
}
