//! Invariant validation suite: Hermiticity, builder equivalence, conservation
//! laws, frame equivalence, effective-model agreement, Wigner normalization
//! and marginals, and non-Hermitian norm behavior. The CLI `validate`
//! subcommand runs every check and exits nonzero on any failure.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{self, TimeGrid};
use crate::hilbert::{
    annihilation_local, annihilation_normal, atomic_operator, AtomicKind, AtomicLabel, HilbertSpace,
};
use crate::linalg::{commutator, hermiticity_residual, max_abs, max_abs_diff};
use crate::model::{
    build_h_collective, build_h_effective, build_h_interaction, build_h_nonhermitian,
    build_h_rotating, derived_couplings, Branch, EffectiveOptions, RotatingHamiltonian,
    SystemParams,
};
use crate::states;
use crate::tomography::{wigner, ModeDensity, WignerGridSpec};

/// One validation check: measured residual against its tolerance.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub residual: f64,
    pub tolerance: f64,
}

impl CheckResult {
    pub fn pass(&self) -> bool {
        self.residual < self.tolerance
    }
}

/// Hook for fault-injection tests: mutates the interaction Hamiltonian before
/// the Hermiticity measurement.
pub type MutationHook<'a> = &'a dyn Fn(&mut DMatrix<C64>);

fn fig2_params() -> SystemParams {
    SystemParams::unit_g(1.0, 10.0, 10.0, 20.0)
}

fn random_params(rng: &mut ChaCha8Rng) -> SystemParams {
    SystemParams {
        g: 1.0,
        omega: rng.random_range(0.5..2.0),
        delta: rng.random_range(5.0..20.0),
        j: rng.random_range(0.5..15.0),
        v_dd: rng.random_range(-30.0..30.0),
        kappa: 0.0,
        gamma: 0.0,
        gamma_r: 0.0,
    }
}

/// Run the full suite. `mutation` lets tests corrupt the Hamiltonian fed to
/// the Hermiticity check, proving the check can fail.
pub fn run_all(mutation: Option<MutationHook>) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let sp = HilbertSpace::new(3).expect("n_max = 3");
    let mut rng = ChaCha8Rng::seed_from_u64(2024);

    // builder equivalence over randomized parameters
    {
        let mut worst: f64 = 0.0;
        for _ in 0..10 {
            let p = random_params(&mut rng);
            let hi = build_h_interaction(&p, &sp).unwrap().entries;
            let hc = build_h_collective(&p, &sp).unwrap().entries;
            worst = worst.max(max_abs_diff(&hi, &hc));
        }
        out.push(CheckResult {
            name: "builder_equivalence",
            residual: worst,
            tolerance: 1e-12,
        });
    }

    // Hermiticity of every builder (with the optional fault injection)
    {
        let p = fig2_params();
        let mut h = build_h_interaction(&p, &sp).unwrap().entries;
        if let Some(hook) = mutation {
            hook(&mut h);
        }
        let mut worst = hermiticity_residual(&h);
        worst = worst.max(build_h_collective(&p, &sp).unwrap().hermiticity_residual());
        worst = worst.max(
            build_h_rotating(&p, &sp, 0.37)
                .unwrap()
                .hermiticity_residual(),
        );
        worst = worst.max(
            build_h_effective(&p, &sp, Branch::C1, &EffectiveOptions::default())
                .unwrap()
                .hermiticity_residual(),
        );
        out.push(CheckResult {
            name: "hermiticity",
            residual: worst,
            tolerance: 1e-12,
        });
    }

    // [H, N_total] = 0
    {
        let p = fig2_params();
        let h = build_h_interaction(&p, &sp).unwrap().entries;
        let n = crate::hilbert::total_excitation(&sp).entries;
        out.push(CheckResult {
            name: "excitation_commutes",
            residual: max_abs(&commutator(&h, &n)),
            tolerance: 1e-12,
        });
    }

    // canonical commutators on the sub-cutoff block
    {
        let a1 = annihilation_local(&sp, 1).unwrap().entries;
        let a2 = annihilation_local(&sp, 2).unwrap().entries;
        let cross = max_abs(&(&a1 * a2.adjoint() - a2.adjoint() * &a1));
        let comm11 = &a1 * a1.adjoint() - a1.adjoint() * &a1;
        let mut diag: f64 = 0.0;
        for idx in 0..sp.dim() {
            let (_, _, n1, _) = sp.unindex(idx);
            if n1 < sp.n_max() {
                diag = diag.max((comm11[(idx, idx)] - C64::new(1.0, 0.0)).norm());
            }
        }
        out.push(CheckResult {
            name: "canonical_commutators",
            residual: cross.max(diag),
            tolerance: 1e-13,
        });
    }

    // normal-mode rotation preserves the total photon number operator
    {
        let a1 = annihilation_local(&sp, 1).unwrap().entries;
        let a2 = annihilation_local(&sp, 2).unwrap().entries;
        let c1 = annihilation_normal(&sp, 1).unwrap().entries;
        let c2 = annihilation_normal(&sp, 2).unwrap().entries;
        let lhs = c1.adjoint() * &c1 + c2.adjoint() * &c2;
        let rhs = a1.adjoint() * &a1 + a2.adjoint() * &a2;
        out.push(CheckResult {
            name: "normal_mode_rotation",
            residual: max_abs_diff(&lhs, &rhs),
            tolerance: 1e-13,
        });
    }

    // projector completeness and idempotence
    {
        let kinds = [
            AtomicKind::ProjG,
            AtomicKind::ProjS,
            AtomicKind::ProjA,
            AtomicKind::ProjR,
        ];
        let mut sum = DMatrix::<C64>::zeros(sp.dim(), sp.dim());
        let mut worst: f64 = 0.0;
        for k in kinds {
            let p = atomic_operator(&sp, k).unwrap().entries;
            worst = worst.max(max_abs_diff(&(&p * &p), &p));
            sum += p;
        }
        worst = worst.max(max_abs_diff(&sum, &DMatrix::identity(sp.dim(), sp.dim())));
        out.push(CheckResult {
            name: "projector_algebra",
            residual: worst,
            tolerance: 1e-14,
        });
    }

    // unitary-run conservation laws on a fig2-like trajectory
    {
        let p = fig2_params();
        let dc = derived_couplings(&p).unwrap();
        let period = std::f64::consts::PI / (2f64.sqrt() * dc.xi_prime_plus);
        let psi0 = states::localized_fock(&sp, AtomicLabel::G, 1, 1).unwrap();
        let h = build_h_interaction(&p, &sp).unwrap();
        let grid = TimeGrid::from_duration(2.0 * period, 801).unwrap();
        let traj = dynamics::evolve(&h, &psi0, &grid).unwrap();
        let norm_drift = traj
            .series
            .norm
            .iter()
            .map(|&x| (x - 1.0).abs())
            .fold(0.0, f64::max);
        out.push(CheckResult {
            name: "norm_conservation",
            residual: norm_drift,
            tolerance: 1e-9,
        });
        out.push(CheckResult {
            name: "excitation_conservation",
            residual: dynamics::total_excitation_drift(&sp, &traj),
            tolerance: 1e-9,
        });
    }

    // frame equivalence: commuting observables agree between the static and
    // rotating-frame evolutions
    {
        let p = SystemParams::unit_g(1.0, 10.0, 1.0, 2.0);
        let psi0 = states::localized_fock(&sp, AtomicLabel::G, 1, 1).unwrap();
        let grid = TimeGrid::from_duration(40.0, 81).unwrap();
        let h = build_h_interaction(&p, &sp).unwrap();
        let lab = dynamics::evolve(&h, &psi0, &grid).unwrap();
        let rot = RotatingHamiltonian::new(&p, &sp).unwrap();
        let framed = dynamics::evolve_td(|t| rot.at(t), &psi0, &grid, 0.05).unwrap();
        let mut worst: f64 = 0.0;
        for k in 0..grid.n_samples {
            worst = worst.max((lab.series.p_r[k] - framed.series.p_r[k]).abs());
            worst = worst.max((lab.series.n_c1[k] - framed.series.n_c1[k]).abs());
        }
        out.push(CheckResult {
            name: "frame_equivalence",
            residual: worst,
            tolerance: 1e-4,
        });
    }

    // effective two-photon model tracks the full model over one Rabi period
    {
        let p = fig2_params();
        let dc = derived_couplings(&p).unwrap();
        let period = std::f64::consts::PI / (2f64.sqrt() * dc.xi_prime_plus);
        let psi0 = states::localized_fock(&sp, AtomicLabel::G, 1, 1).unwrap();
        let grid = TimeGrid::from_duration(period, 601).unwrap();
        let full = dynamics::evolve(&build_h_interaction(&p, &sp).unwrap(), &psi0, &grid).unwrap();
        let h_eff = build_h_effective(&p, &sp, Branch::C1, &EffectiveOptions::default()).unwrap();
        let eff = dynamics::evolve(&h_eff, &psi0, &grid).unwrap();
        let mut worst: f64 = 0.0;
        for k in 0..grid.n_samples {
            worst = worst.max((full.series.p_r[k] - eff.series.p_r[k]).abs());
        }
        out.push(CheckResult {
            name: "effective_vs_full",
            residual: worst,
            tolerance: 0.05,
        });
    }

    // Wigner normalization and marginals
    {
        let vac = ModeDensity::fock(8, 0).unwrap();
        let two = ModeDensity::fock(8, 2).unwrap();
        let spec = WignerGridSpec::default();
        let mut worst_norm: f64 = 0.0;
        for rho in [&vac, &two] {
            let grid = wigner(rho, &spec).unwrap();
            worst_norm = worst_norm.max((grid.integral() - 1.0).abs());
        }
        out.push(CheckResult {
            name: "wigner_normalization",
            residual: worst_norm,
            tolerance: 0.01,
        });

        // vacuum marginal is the ground-state position density e^{-x^2}/sqrt(pi);
        // the Fock-1 marginal is 2 x^2 e^{-x^2}/sqrt(pi)
        let one = ModeDensity::fock(8, 1).unwrap();
        let mut worst: f64 = 0.0;
        for (rho, f) in [
            (
                &vac,
                Box::new(|x: f64| (-x * x).exp() / std::f64::consts::PI.sqrt())
                    as Box<dyn Fn(f64) -> f64>,
            ),
            (
                &one,
                Box::new(|x: f64| 2.0 * x * x * (-x * x).exp() / std::f64::consts::PI.sqrt()),
            ),
        ] {
            let grid = wigner(rho, &spec).unwrap();
            let marginal = grid.x_marginal();
            for (ix, &x) in grid.x_axis.iter().enumerate() {
                worst = worst.max((marginal[ix] - f(x)).abs());
            }
        }
        out.push(CheckResult {
            name: "wigner_marginals",
            residual: worst,
            tolerance: 1e-3,
        });
    }

    // non-Hermitian runs: survival is non-increasing with the right initial
    // slope
    {
        let kappa = 1e-3;
        let p = fig2_params().with_decay(kappa, 0.0, 0.0);
        let h = build_h_nonhermitian(&p, &sp).unwrap();
        let psi0 = states::localized_fock(&sp, AtomicLabel::G, 1, 1).unwrap();
        let grid = TimeGrid::from_duration(50.0, 101).unwrap();
        let traj = dynamics::evolve(&h, &psi0, &grid).unwrap();
        let growth = traj
            .series
            .norm
            .windows(2)
            .map(|w| (w[1] - w[0]).max(0.0))
            .fold(0.0, f64::max);
        out.push(CheckResult {
            name: "nonhermitian_monotone",
            residual: growth,
            tolerance: 1e-12,
        });
        let slope = (traj.series.norm[1] - traj.series.norm[0]) / grid.dt();
        let expect = -kappa * (traj.series.n_a1[0] + traj.series.n_a2[0]);
        out.push(CheckResult {
            name: "nonhermitian_initial_slope",
            residual: (slope / expect - 1.0).abs(),
            tolerance: 0.01,
        });
    }

    out
}
