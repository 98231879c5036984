//! Ground-state observables, truncation convergence and degeneracy diagnostics.

use serde::{Deserialize, Serialize};

use crate::eigen::{lowest_eigenpairs, SolverOptions, SpectralResult};
use crate::error::{Error, Result};
use crate::hamiltonians::{
    a2_params, anisotropic_params, build_anisotropic_effective, build_effective, build_effective_a2, build_full,
    build_squeezed_rabi, effective_params, ModelParams,
};
use crate::hilbert::{BasisDescriptor, Factor, Operator, Truncation, C64, ZERO};

/// Default threshold (in units of `omega_b`) below which the two lowest levels
/// count as quasi-degenerate.
pub const DEGENERACY_TOL: f64 = 1e-3;

/// How raw occupations are turned into order parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rescaling {
    /// Squeeze entering `exp(-4 r) omega_b / omega_q`.
    pub r: f64,
    /// Squeeze of the frame the Hamiltonian was written in; lab-frame moments
    /// use `b_lab = b cosh(frame_r) + b^dag sinh(frame_r)`.
    pub frame_r: f64,
    pub omega_q: f64,
    pub omega_b: f64,
}

impl Rescaling {
    pub fn none(omega_q: f64) -> Self {
        Self {
            r: 0.0,
            frame_r: 0.0,
            omega_q,
            omega_b: 1.0,
        }
    }

    pub fn factor(&self) -> f64 {
        (-4.0 * self.r).exp() * self.omega_b / self.omega_q
    }
}

/// Hamiltonians that can be diagonalized at a parameter point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Full,
    Effective,
    SqueezedRabi,
    EffectiveA2 { d_tilde: f64 },
    Anisotropic { j1: f64, j2: f64 },
}

impl Model {
    pub fn needs_mode_a(&self) -> bool {
        matches!(self, Model::Full)
    }

    /// Lab-frame rescaling for this model at `p`.
    pub fn rescaling(&self, p: &ModelParams) -> Result<Rescaling> {
        let base = Rescaling::none(p.omega_q());
        Ok(match *self {
            Model::Full | Model::Effective => Rescaling {
                r: effective_params(p)?.r,
                ..base
            },
            Model::SqueezedRabi => {
                let r = effective_params(p)?.r;
                Rescaling { r, frame_r: r, ..base }
            }
            Model::EffectiveA2 { d_tilde } => {
                let r = a2_params(p, d_tilde)?.r_frame;
                Rescaling { r, frame_r: r, ..base }
            }
            Model::Anisotropic { j1, j2 } => Rescaling {
                r: anisotropic_params(p, j1, j2)?.r_prime,
                ..base
            },
        })
    }

    pub fn build(&self, p: &ModelParams, trunc: &Truncation) -> Result<Operator> {
        match *self {
            Model::Full => build_full(p, trunc),
            Model::Effective => build_effective(p, trunc),
            Model::SqueezedRabi => build_squeezed_rabi(p, trunc),
            Model::EffectiveA2 { d_tilde } => build_effective_a2(p, d_tilde, trunc),
            Model::Anisotropic { j1, j2 } => build_anisotropic_effective(p, j1, j2, trunc),
        }
    }
}

/// A Hamiltonian together with the information needed to read observables off it.
#[derive(Clone, Debug)]
pub struct BuiltModel {
    pub hamiltonian: Operator,
    pub rescaling: Rescaling,
    pub truncation: Truncation,
}

pub fn build_model(model: &Model, p: &ModelParams, trunc: &Truncation) -> Result<BuiltModel> {
    Ok(BuiltModel {
        hamiltonian: model.build(p, trunc)?,
        rescaling: model.rescaling(p)?,
        truncation: *trunc,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroundStateResult {
    pub energy: f64,
    /// Lowest eigenvalues found (at least two).
    pub energies: Vec<f64>,
    /// `exp(-4 r) (omega_b / omega_q) <b^dag b>` on the ground vector (lab frame).
    pub n_b_rescaled: f64,
    /// Same rescaling applied to `<a^dag a>`; absent without the auxiliary mode.
    pub n_a_rescaled: Option<f64>,
    /// Raw lab-frame `<b^dag b>`.
    pub b_occupation: f64,
    /// Lab-frame `<b>` on the ground vector (near zero for parity eigenstates).
    pub b_coherence: C64,
    /// Maximal-|<b>| state of the two-dimensional ground subspace; only when
    /// the lowest pair is quasi-degenerate.
    pub b_coherence_broken: Option<C64>,
    /// Rescaled `|<b>|^2` of that broken-symmetry state.
    pub n_b_coherent: Option<f64>,
    pub parity_expectation: f64,
    pub gap_01: f64,
    pub quasi_degenerate: bool,
    pub truncation_used: Truncation,
    pub converged: bool,
    #[serde(skip)]
    pub ground_state: Vec<C64>,
    #[serde(skip)]
    pub first_excited: Vec<C64>,
}

/// `(<n>, <x>, <x^2>)` with `x` the lowering operator of `factor`.
pub fn mode_moments(basis: &BasisDescriptor, psi: &[C64], factor: Factor) -> Option<(f64, C64, C64)> {
    let pos = basis.position(factor)?;
    let stride = basis.strides()[pos];
    let d = basis.factors()[pos].1;
    let mut n = 0.0;
    let mut a1 = ZERO;
    let mut a2 = ZERO;
    for (i, amp) in psi.iter().enumerate() {
        if *amp == ZERO {
            continue;
        }
        let k = (i / stride) % d;
        if k == 0 {
            continue;
        }
        n += k as f64 * amp.norm_sqr();
        // <psi| a |psi> collects psi*_{k-1} sqrt(k) psi_k.
        a1 += psi[i - stride].conj() * (k as f64).sqrt() * amp;
        if k >= 2 {
            a2 += psi[i - 2 * stride].conj() * ((k * (k - 1)) as f64).sqrt() * amp;
        }
    }
    Some((n, a1, a2))
}

/// Lab-frame `(<b^dag b>, <b>)` given frame moments and the frame squeeze.
pub fn lab_moments(n: f64, a1: C64, a2: C64, frame_r: f64) -> (f64, C64) {
    if frame_r == 0.0 {
        return (n, a1);
    }
    let (c, s) = (frame_r.cosh(), frame_r.sinh());
    let occ = c * c * n + s * s * (n + 1.0) + 2.0 * c * s * a2.re;
    (occ, a1 * c + a1.conj() * s)
}

fn parity_expectation(basis: &BasisDescriptor, psi: &[C64]) -> f64 {
    basis
        .parity_signs()
        .iter()
        .zip(psi)
        .map(|(s, a)| f64::from(*s) * a.norm_sqr())
        .sum()
}

/// Matrix `<psi_i| b |psi_j>` of the mode-b lowering operator.
fn lowering_matrix(basis: &BasisDescriptor, states: [&[C64]; 2], frame_r: f64) -> [[C64; 2]; 2] {
    let pos = basis.position(Factor::ModeB).expect("mode b present");
    let stride = basis.strides()[pos];
    let d = basis.factors()[pos].1;
    let elem = |bra: &[C64], ket: &[C64]| {
        let mut lower = ZERO;
        let mut raise = ZERO;
        for i in 0..ket.len() {
            let k = (i / stride) % d;
            if k > 0 {
                lower += bra[i - stride].conj() * (k as f64).sqrt() * ket[i];
            }
            if k + 1 < d {
                raise += bra[i + stride].conj() * ((k + 1) as f64).sqrt() * ket[i];
            }
        }
        if frame_r == 0.0 {
            lower
        } else {
            lower * frame_r.cosh() + raise * frame_r.sinh()
        }
    };
    [
        [elem(states[0], states[0]), elem(states[0], states[1])],
        [elem(states[1], states[0]), elem(states[1], states[1])],
    ]
}

/// `<phi|B|phi>` for the unit vector `phi` in a two-dimensional space that
/// maximizes its modulus (numerical-radius attainer). The sign is fixed so the
/// real part is non-negative.
fn numerical_radius(m: [[C64; 2]; 2]) -> C64 {
    let value_at = |phi: f64| {
        // top eigenvector of Re(e^{i phi} M)
        let e = C64::from_polar(1.0, phi);
        let h00 = (e * m[0][0]).re;
        let h11 = (e * m[1][1]).re;
        let h01 = (e * m[0][1] + (e * m[1][0]).conj()) * 0.5;
        let mean = 0.5 * (h00 + h11);
        let half = 0.5 * (h00 - h11);
        let rad = (half * half + h01.norm_sqr()).sqrt();
        let top = mean + rad;
        let v = if h01.norm() > 1e-300 {
            let (x, y) = (h01, C64::new(top - h00, 0.0));
            let nn = (x.norm_sqr() + y.norm_sqr()).sqrt();
            [x / nn, y / nn]
        } else if h00 >= h11 {
            [C64::new(1.0, 0.0), ZERO]
        } else {
            [ZERO, C64::new(1.0, 0.0)]
        };
        let mut z = ZERO;
        for i in 0..2 {
            for j in 0..2 {
                z += v[i].conj() * m[i][j] * v[j];
            }
        }
        (top, z)
    };
    let steps = 720;
    let mut best = (f64::NEG_INFINITY, ZERO, 0.0);
    for k in 0..steps {
        let phi = 2.0 * std::f64::consts::PI * k as f64 / steps as f64;
        let (t, z) = value_at(phi);
        if t > best.0 {
            best = (t, z, phi);
        }
    }
    // Golden-section refinement around the best grid angle.
    let h = 2.0 * std::f64::consts::PI / steps as f64;
    let (mut lo, mut hi) = (best.2 - h, best.2 + h);
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let a = hi - gr * (hi - lo);
        let b = lo + gr * (hi - lo);
        if value_at(a).0 > value_at(b).0 {
            hi = b;
        } else {
            lo = a;
        }
    }
    let (t, z) = value_at(0.5 * (lo + hi));
    let z = if t >= best.0 { z } else { best.1 };
    if z.re < 0.0 || (z.re == 0.0 && z.im < 0.0) {
        -z
    } else {
        z
    }
}

/// Observables of the ground state from a solved spectrum.
pub fn observables_from_spectrum(
    built: &BuiltModel,
    spectrum: &SpectralResult,
    degeneracy_tol: f64,
) -> Result<GroundStateResult> {
    if spectrum.eigenvalues.len() < 2 {
        return Err(Error::InvalidParameter("ground observables need at least two eigenpairs".into()));
    }
    let basis = built.hamiltonian.basis();
    let psi = &spectrum.eigenvectors[0];
    let resc = &built.rescaling;
    let (n, a1, a2) = mode_moments(basis, psi, Factor::ModeB)
        .ok_or_else(|| Error::InvalidParameter("model has no mode b".into()))?;
    let (occ, coh) = lab_moments(n, a1, a2, resc.frame_r);
    let n_a = mode_moments(basis, psi, Factor::ModeA).map(|(na, _, _)| na * resc.factor());
    let gap = spectrum.eigenvalues[1] - spectrum.eigenvalues[0];
    let quasi = gap < degeneracy_tol * resc.omega_b;
    let (broken, n_coh) = if quasi {
        let m = lowering_matrix(basis, [psi, &spectrum.eigenvectors[1]], resc.frame_r);
        let z = numerical_radius(m);
        (Some(z), Some(z.norm_sqr() * resc.factor()))
    } else {
        (None, None)
    };
    Ok(GroundStateResult {
        energy: spectrum.eigenvalues[0],
        energies: spectrum.eigenvalues.clone(),
        n_b_rescaled: occ * resc.factor(),
        n_a_rescaled: n_a,
        b_occupation: occ,
        b_coherence: coh,
        b_coherence_broken: broken,
        n_b_coherent: n_coh,
        parity_expectation: parity_expectation(basis, psi),
        gap_01: gap.max(0.0),
        quasi_degenerate: quasi,
        truncation_used: built.truncation,
        converged: true,
        ground_state: psi.clone(),
        first_excited: spectrum.eigenvectors[1].clone(),
    })
}

/// Solves for the `k >= 2` lowest states and evaluates ground observables.
pub fn ground_observables(built: &BuiltModel, k: usize, opts: &SolverOptions) -> Result<GroundStateResult> {
    let spectrum = lowest_eigenpairs(&built.hamiltonian, k.max(2), opts)?;
    observables_from_spectrum(built, &spectrum, DEGENERACY_TOL)
}

/// Escalates the truncation until `n_b` and the energy both move by less than
/// `obs_tol` between consecutive schedule entries.
pub fn converge_in_truncation<F>(
    builder: F,
    schedule: &[Truncation],
    obs_tol: f64,
    opts: &SolverOptions,
) -> Result<GroundStateResult>
where
    F: Fn(&Truncation) -> Result<BuiltModel>,
{
    if schedule.len() < 2 {
        return Err(Error::InvalidParameter("truncation schedule needs at least two entries".into()));
    }
    for w in schedule.windows(2) {
        let grows = w[1].n_b_max() >= w[0].n_b_max()
            && w[1].n_a_max() >= w[0].n_a_max()
            && (w[1].n_b_max() > w[0].n_b_max() || w[1].n_a_max() > w[0].n_a_max());
        if !grows || w[0].include_a() != w[1].include_a() {
            return Err(Error::InvalidParameter(format!(
                "truncation schedule must be strictly increasing: {} then {}",
                w[0], w[1]
            )));
        }
    }
    let mut prev: Option<GroundStateResult> = None;
    for t in schedule {
        let built = builder(t)?;
        let cur = ground_observables(&built, 2, opts)?;
        if let Some(p) = &prev {
            if (cur.n_b_rescaled - p.n_b_rescaled).abs() < obs_tol && (cur.energy - p.energy).abs() < obs_tol {
                return Ok(cur);
            }
        }
        prev = Some(cur);
    }
    let mut last = prev.expect("schedule is non-empty");
    last.converged = false;
    Ok(last)
}

/// Ground-to-first gap and whether it is below `tol * omega_b`.
pub fn degeneracy_gap(h: &Operator, tol: f64, opts: &SolverOptions) -> Result<(f64, bool)> {
    let s = lowest_eigenpairs(h, 2, opts)?;
    let gap = (s.eigenvalues[1] - s.eigenvalues[0]).max(0.0);
    Ok((gap, gap < tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criticality::{excitation_energies, sp_solution, Branch};

    fn point(g_tilde: f64) -> ModelParams {
        ModelParams::from_dimensionless(40.0, 5.0, g_tilde, 0.95).unwrap()
    }

    #[test]
    fn decoupled_point() {
        let p = ModelParams::in_units_of_omega_b(40.0, 5.0, 0.0, 0.0).unwrap();
        let built = build_model(&Model::Full, &p, &Truncation::full(3, 5)).unwrap();
        let r = ground_observables(&built, 2, &SolverOptions::default()).unwrap();
        assert!((r.energy + 2.5).abs() < 1e-12);
        assert_eq!(r.n_b_rescaled, 0.0);
        assert_eq!(r.n_a_rescaled, Some(0.0));
        assert!((r.parity_expectation - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lab_moments_of_squeezed_vacuum() {
        // frame vacuum: n = 0, <b^2> = 0
        let (occ, coh) = lab_moments(0.0, ZERO, ZERO, 0.5);
        assert!((occ - 0.5f64.sinh().powi(2)).abs() < 1e-15);
        assert_eq!(coh, ZERO);
    }

    #[test]
    fn frames_agree_on_lab_observables() {
        let p = point(0.2);
        let opts = SolverOptions::default();
        let a = ground_observables(&build_model(&Model::Effective, &p, &Truncation::effective(130)).unwrap(), 2, &opts)
            .unwrap();
        let b = ground_observables(
            &build_model(&Model::SqueezedRabi, &p, &Truncation::effective(130)).unwrap(),
            2,
            &opts,
        )
        .unwrap();
        assert!((a.energy - b.energy).abs() < 1e-4);
        assert!((a.n_b_rescaled - b.n_b_rescaled).abs() < 1e-4, "{} {}", a.n_b_rescaled, b.n_b_rescaled);
    }

    #[test]
    fn normal_phase_gap_and_parity() {
        let p = point(0.2);
        let built = build_model(&Model::Effective, &p, &Truncation::effective(100)).unwrap();
        let r = ground_observables(&built, 2, &SolverOptions::default()).unwrap();
        assert!((r.parity_expectation - 1.0).abs() < 1e-8);
        let eps = excitation_energies(&p).unwrap().normal.unwrap();
        assert!(!r.quasi_degenerate);
        assert!((r.gap_01 - eps).abs() / eps < 0.2, "{} vs {}", r.gap_01, eps);
    }

    #[test]
    fn deep_superradiant_pair_is_degenerate_and_broken_coherence_matches() {
        let p = point(0.6);
        let h = build_effective(&p, &Truncation::effective(200)).unwrap();
        let (gap, quasi) = degeneracy_gap(&h, DEGENERACY_TOL, &SolverOptions::default()).unwrap();
        assert!(quasi, "gap {gap}");
        let built = build_model(&Model::Effective, &p, &Truncation::effective(200)).unwrap();
        let r = ground_observables(&built, 3, &SolverOptions::default()).unwrap();
        let z = r.b_coherence_broken.unwrap();
        assert!(r.b_coherence.norm() < 1e-6);
        let predicted = sp_solution(&p, Branch::Plus).unwrap().coherence();
        assert!((z.norm() - predicted).abs() / predicted < 0.1, "{z} vs {predicted}");
        // the third level sits an excitation quantum above the doublet
        let eps = excitation_energies(&p).unwrap().superradiant.unwrap();
        let third = r.energies[2] - r.energies[0];
        assert!((third - eps).abs() / eps < 0.3, "{third} vs {eps}");
    }

    #[test]
    fn convergence_schedule_behaviour() {
        let opts = SolverOptions::default();
        let bare = ModelParams::in_units_of_omega_b(40.0, 5.0, 0.0, 0.0).unwrap();
        let sched = [Truncation::effective(10), Truncation::effective(20), Truncation::effective(30)];
        let r = converge_in_truncation(|t| build_model(&Model::Effective, &bare, t), &sched, 1e-3, &opts).unwrap();
        assert!(r.converged);
        assert_eq!(r.truncation_used, Truncation::effective(20));

        let deep = point(0.65);
        let tiny = [Truncation::effective(4), Truncation::effective(6)];
        let r = converge_in_truncation(|t| build_model(&Model::Effective, &deep, t), &tiny, 1e-3, &opts).unwrap();
        assert!(!r.converged);

        let bad = [Truncation::effective(6), Truncation::effective(6)];
        assert!(converge_in_truncation(|t| build_model(&Model::Effective, &deep, t), &bad, 1e-3, &opts).is_err());
    }

    #[test]
    fn convergence_independent_of_schedule_granularity() {
        let opts = SolverOptions::default();
        let p = point(0.5);
        let coarse: Vec<Truncation> = [100, 200, 300].into_iter().map(Truncation::effective).collect();
        let fine: Vec<Truncation> = [100, 140, 180, 220, 260, 300].into_iter().map(Truncation::effective).collect();
        let a = converge_in_truncation(|t| build_model(&Model::Effective, &p, t), &coarse, 1e-3, &opts).unwrap();
        let b = converge_in_truncation(|t| build_model(&Model::Effective, &p, t), &fine, 1e-3, &opts).unwrap();
        assert!(a.converged && b.converged);
        assert!((a.n_b_rescaled - b.n_b_rescaled).abs() < 2e-3);
    }

    #[test]
    fn ground_energy_close_to_frame_prediction() {
        let p = point(0.5);
        let built = build_model(&Model::Effective, &p, &Truncation::effective(120)).unwrap();
        let r = ground_observables(&built, 2, &SolverOptions::default()).unwrap();
        let predicted = sp_solution(&p, Branch::Plus).unwrap().e_g_tilde;
        assert!((r.energy - predicted).abs() / predicted.abs() < 0.02, "{} vs {}", r.energy, predicted);
    }
}
