//! Closed-form critical couplings, order parameters and ground-state frames.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::{a2_params, effective_params, ModelParams};

/// Default half-width of the BOUNDARY band around `B = 1`.
pub const BOUNDARY_TOL: f64 = 1e-6;

/// Radicands within this relative band of zero are treated as zero.
const RADICAND_BAND: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PhaseLabel {
    #[serde(rename = "NP")]
    Normal,
    #[serde(rename = "SP")]
    Superradiant,
    #[serde(rename = "UP")]
    Unstable,
    #[serde(rename = "BOUNDARY")]
    Boundary,
}

impl PhaseLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            PhaseLabel::Normal => "NP",
            PhaseLabel::Superradiant => "SP",
            PhaseLabel::Unstable => "UP",
            PhaseLabel::Boundary => "BOUNDARY",
        }
    }
}

impl std::fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `g_tilde_c = sqrt(1 - j_tilde^2) / j_tilde` (large-detuning, classical-oscillator limit).
pub fn critical_coupling_dimensionless(j_tilde: f64) -> Result<f64> {
    if !(j_tilde > 0.0 && j_tilde < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "j_tilde must lie in (0, 1) for a finite critical coupling, got {j_tilde}"
        )));
    }
    Ok((1.0 - j_tilde * j_tilde).sqrt() / j_tilde)
}

/// Dimensional critical qubit coupling at the model's frequencies and hopping.
pub fn critical_coupling_dimensional(p: &ModelParams) -> Result<f64> {
    effective_params(p)?;
    if p.j() == 0.0 {
        return Err(Error::InvalidParameter("no hopping: the transition is absent".into()));
    }
    let sum_b = 1.0 / p.delta_b() + 1.0 / p.eta_b();
    let sum_q = 1.0 / p.delta_q() + 1.0 / p.eta_q();
    let stiffness = p.omega_b() - 2.0 * p.j() * p.j() * sum_b;
    Ok((p.omega_q() * stiffness).sqrt() / (p.j() * (sum_b + sum_q)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderParameterForm {
    Dimensionless,
    Exact,
}

/// Order parameter in the classical-oscillator limit.
pub fn order_parameter_dimensionless(g_tilde: f64, j_tilde: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&j_tilde) || !(g_tilde >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "order parameter needs 0 <= j_tilde < 1 and g_tilde >= 0 (got {g_tilde}, {j_tilde})"
        )));
    }
    if j_tilde == 0.0 || g_tilde <= critical_coupling_dimensionless(j_tilde)? {
        return Ok(0.0);
    }
    let gj2 = g_tilde * g_tilde * j_tilde * j_tilde;
    let s = 1.0 - j_tilde * j_tilde;
    Ok((gj2 / (4.0 * s) - s / (4.0 * gj2)).max(0.0))
}

/// `(chi'^2 - chi'^-2) / 4` above threshold, with `chi' = 2 chi_r / sqrt(omega_r omega_q)`.
pub fn chi_prime_order(chi_prime: f64) -> f64 {
    if chi_prime <= 1.0 {
        0.0
    } else {
        let c2 = chi_prime * chi_prime;
        (c2 - 1.0 / c2) / 4.0
    }
}

/// Order parameter from the finite-frequency frame coefficients.
pub fn order_parameter_exact(p: &ModelParams) -> Result<f64> {
    Ok(chi_prime_order(chi_prime(p)?))
}

pub fn order_parameter_analytic(p: &ModelParams, form: OrderParameterForm) -> Result<f64> {
    match form {
        OrderParameterForm::Dimensionless => {
            effective_params(p)?;
            let d = p.dimensionless();
            order_parameter_dimensionless(d.g_tilde, d.j_tilde)
        }
        OrderParameterForm::Exact => order_parameter_exact(p),
    }
}

/// `2 chi_r / sqrt(omega_r omega_q)`; exceeds 1 in the superradiant phase.
pub fn chi_prime(p: &ModelParams) -> Result<f64> {
    let e = effective_params(p)?;
    Ok(2.0 * e.chi_r / (e.omega_r * p.omega_q()).sqrt())
}

fn banded_sqrt(radicand: f64, scale: f64) -> Option<f64> {
    if radicand.abs() <= RADICAND_BAND * scale {
        Some(0.0)
    } else if radicand > 0.0 {
        Some(radicand.sqrt())
    } else {
        None
    }
}

/// Lowest excitation energies of the two phases; each is absent off its branch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcitationEnergies {
    pub normal: Option<f64>,
    pub superradiant: Option<f64>,
}

pub fn excitation_energies(p: &ModelParams) -> Result<ExcitationEnergies> {
    let e = effective_params(p)?;
    let (wr, cr, wq) = (e.omega_r, e.chi_r, p.omega_q());
    let scale = wr * wr;
    let normal = banded_sqrt(wr * wr - 4.0 * cr * cr * wr / wq, scale);
    let superradiant = if cr == 0.0 {
        None
    } else {
        banded_sqrt(wr * wr - wq * wq * wr.powi(4) / (16.0 * cr.powi(4)), scale)
    };
    Ok(ExcitationEnergies { normal, superradiant })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NpSolution {
    pub epsilon_np: f64,
    pub e_g: f64,
    pub r_np: f64,
    pub chi_prime: f64,
    /// Frame squeeze; the ground state is `S(r + r_np)|0>|down>`.
    pub r: f64,
}

pub fn np_solution(p: &ModelParams) -> Result<NpSolution> {
    let e = effective_params(p)?;
    let cp = chi_prime(p)?;
    let eps = excitation_energies(p)?;
    let epsilon_np = match eps.normal {
        Some(v) => v,
        None => {
            return Err(Error::WrongPhase {
                requested: PhaseLabel::Normal,
                actual: PhaseLabel::Superradiant,
            })
        }
    };
    let argument = 1.0 - 4.0 * e.chi_r * e.chi_r / (p.omega_q() * e.omega_r);
    let r_np = if argument > 0.0 { -0.25 * argument.ln() } else { f64::INFINITY };
    Ok(NpSolution {
        epsilon_np,
        e_g: (epsilon_np - e.omega_r) / 2.0 - p.omega_q() / 2.0 + e.c_r,
        r_np,
        chi_prime: cp,
        r: e.r,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpSolution {
    pub branch: Branch,
    /// Signed displacement in the squeezed frame; positive on the plus branch.
    pub alpha: f64,
    pub theta: f64,
    pub r_sp: f64,
    pub epsilon_sp: f64,
    pub e_g_tilde: f64,
    /// Amplitudes of the rotated low spin state on `(|up>, |down>)`.
    pub spin_minus_coeffs: [f64; 2],
    pub chi_prime: f64,
    pub r: f64,
}

impl SpSolution {
    /// Predicted lab-frame `<b>` on this branch.
    pub fn coherence(&self) -> f64 {
        self.r.exp() * self.alpha
    }
}

pub fn sp_solution(p: &ModelParams, branch: Branch) -> Result<SpSolution> {
    let e = effective_params(p)?;
    let cp = chi_prime(p)?;
    let eps = excitation_energies(p)?;
    let epsilon_sp = match eps.superradiant {
        Some(v) if cp >= 1.0 || v == 0.0 => v,
        _ => {
            return Err(Error::WrongPhase {
                requested: PhaseLabel::Superradiant,
                actual: PhaseLabel::Normal,
            })
        }
    };
    let (wr, cr, wq) = (e.omega_r, e.chi_r, p.omega_q());
    let c2 = cp * cp;
    let alpha = branch.sign() * (wq / (4.0 * wr) * (c2 - 1.0 / c2)).max(0.0).sqrt();
    let theta = 0.5 * (-4.0 * cr * alpha / wq).atan();
    let ratio = (wr * wq / (4.0 * cr * cr)).min(1.0);
    let argument = 1.0 - wq * wq * wr * wr / (16.0 * cr.powi(4));
    let r_sp = if argument > 0.0 { -0.25 * argument.ln() } else { f64::INFINITY };
    let e_g_tilde = 0.5 * (epsilon_sp - wr) - cr * cr / wr - wq * wq * wr / (16.0 * cr * cr) + e.c_r;
    Ok(SpSolution {
        branch,
        alpha,
        theta,
        r_sp,
        epsilon_sp,
        e_g_tilde,
        spin_minus_coeffs: [
            branch.sign() * (0.5 * (1.0 - ratio)).sqrt(),
            (0.5 * (1.0 + ratio)).sqrt(),
        ],
        chi_prime: cp,
        r: e.r,
    })
}

/// Left-hand side `B` of the approximate A^2 phase boundary; NP for `B < 1`.
pub fn a2_boundary_value(g_tilde: f64, j_tilde: f64, d_tilde: f64) -> Result<f64> {
    let s = 1.0 + d_tilde * g_tilde * g_tilde;
    let argument = 1.0 - j_tilde * j_tilde / s;
    if argument <= 0.0 {
        return Err(Error::UnstablePhase { argument });
    }
    Ok(g_tilde * j_tilde / s / argument.sqrt())
}

/// Finite-frequency counterpart of [`a2_boundary_value`], `2 chi_r^A / sqrt(omega_r^A omega_q)`.
pub fn a2_boundary_exact(p: &ModelParams, d_tilde: f64) -> Result<f64> {
    let a = a2_params(p, d_tilde)?;
    Ok(2.0 * a.chi_r_a / (a.omega_r_a * p.omega_q()).sqrt())
}

/// Order parameter with the A^2 term, zero for `B <= 1`.
pub fn a2_order_parameter(g_tilde: f64, j_tilde: f64, d_tilde: f64) -> Result<f64> {
    let b = a2_boundary_value(g_tilde, j_tilde, d_tilde)?;
    if b <= 1.0 {
        return Ok(0.0);
    }
    let s = 1.0 + d_tilde * g_tilde * g_tilde;
    let gj2 = g_tilde * g_tilde * j_tilde * j_tilde;
    let q = s * (s - j_tilde * j_tilde);
    Ok((gj2 / (4.0 * q) - q / (4.0 * gj2)).max(0.0))
}

/// A^2 order parameter from the frame-exact coupling.
pub fn a2_order_parameter_exact(p: &ModelParams, d_tilde: f64) -> Result<f64> {
    Ok(chi_prime_order(a2_boundary_exact(p, d_tilde)?))
}

pub fn classify_phase(g_tilde: f64, j_tilde: f64, d_tilde: f64, tol: f64) -> PhaseLabel {
    match a2_boundary_value(g_tilde, j_tilde, d_tilde) {
        Err(_) => PhaseLabel::Unstable,
        Ok(b) => label_from_boundary(b, tol),
    }
}

/// NP/SP/BOUNDARY from a boundary value whose critical level is 1.
pub fn label_from_boundary(b: f64, tol: f64) -> PhaseLabel {
    if (b - 1.0).abs() <= tol {
        PhaseLabel::Boundary
    } else if b < 1.0 {
        PhaseLabel::Normal
    } else {
        PhaseLabel::Superradiant
    }
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Couplings in `(0, g_max]` where the approximate A^2 boundary is crossed,
/// ascending. Points in the unstable region are skipped.
pub fn a2_crossings(j_tilde: f64, d_tilde: f64, g_max: f64) -> Vec<f64> {
    let f = |g: f64| a2_boundary_value(g, j_tilde, d_tilde).map(|b| b - 1.0).ok();
    let steps = 4000;
    let mut out = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for k in 1..=steps {
        let g = g_max * k as f64 / steps as f64;
        match f(g) {
            Some(v) => {
                if let Some((g0, v0)) = prev {
                    if v == 0.0 {
                        out.push(g);
                    } else if v0 != 0.0 && (v0 > 0.0) != (v > 0.0) {
                        out.push(bisect(g0, g, |x| f(x).unwrap_or(f64::INFINITY)));
                    }
                }
                prev = Some((g, v));
            }
            None => prev = None,
        }
    }
    out
}

/// Smallest `j_tilde` for which the approximate A^2 boundary reaches down to
/// `g_min`, i.e. the solution of `B(g_min, j_tilde, d_tilde) = 1`. Above it the
/// superradiant region covers the whole window from `g_min` up to its upper
/// crossing.
pub fn a2_threshold_j_tilde(d_tilde: f64, g_min: f64) -> Result<f64> {
    if !(g_min > 0.0) || !(d_tilde >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold search needs g_min > 0 and d_tilde >= 0 (got {g_min}, {d_tilde})"
        )));
    }
    let s = 1.0 + d_tilde * g_min * g_min;
    // B grows monotonically in j_tilde up to the unstable edge sqrt(s).
    let hi = s.sqrt() * (1.0 - 1e-15);
    let f = |j: f64| a2_boundary_value(g_min, j, d_tilde).map(|b| b - 1.0).unwrap_or(f64::INFINITY);
    Ok(bisect(0.0, hi, f))
}
