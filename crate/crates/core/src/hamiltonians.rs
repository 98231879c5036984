//! Model parameters, frame coefficients and Hamiltonian builders.
//!
//! All frequencies are stored in units of `omega_b`, which is therefore 1
//! internally. Quadratic boson terms are built as compressions of the exact
//! operator (see [`crate::hilbert::compressed_product`]), so `b b^dag` equals
//! `b^dag b + 1` on every retained level.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    compressed_product, fock_lowering, fock_number, fock_position, fock_position_squared, pauli, Factor,
    Operator, OperatorBuilder, Pauli, Truncation, C64,
};

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}

fn check_non_negative(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::InvalidParameter(format!("{name} must be non-negative and finite, got {v}")));
    }
    Ok(())
}

/// Frequencies and couplings of the full three-body model, in units of `omega_b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    omega_a: f64,
    omega_b: f64,
    omega_q: f64,
    g: f64,
    j: f64,
}

/// `g_tilde = 2 g / sqrt(omega_a omega_q)`, `j_tilde = 2 J / sqrt(omega_a omega_b)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionlessCouplings {
    pub g_tilde: f64,
    pub j_tilde: f64,
}

impl ModelParams {
    /// Dimensional inputs in any unit; everything is rescaled by `omega_b`.
    pub fn from_physical(omega_a: f64, omega_b: f64, omega_q: f64, g: f64, j: f64) -> Result<Self> {
        check_positive("omega_b", omega_b)?;
        Self::in_units_of_omega_b(omega_a / omega_b, omega_q / omega_b, g / omega_b, j / omega_b)
    }

    pub fn in_units_of_omega_b(omega_a: f64, omega_q: f64, g: f64, j: f64) -> Result<Self> {
        check_positive("omega_a", omega_a)?;
        check_positive("omega_q", omega_q)?;
        check_non_negative("g", g)?;
        check_non_negative("J", j)?;
        Ok(Self {
            omega_a,
            omega_b: 1.0,
            omega_q,
            g,
            j,
        })
    }

    /// Frequency ratios `omega_a / omega_b`, `omega_q / omega_b` plus dimensionless couplings.
    pub fn from_dimensionless(omega_a: f64, omega_q: f64, g_tilde: f64, j_tilde: f64) -> Result<Self> {
        check_positive("omega_a", omega_a)?;
        check_positive("omega_q", omega_q)?;
        check_non_negative("g_tilde", g_tilde)?;
        check_non_negative("j_tilde", j_tilde)?;
        let g = g_tilde * (omega_a * omega_q).sqrt() / 2.0;
        let j = j_tilde * omega_a.sqrt() / 2.0;
        Self::in_units_of_omega_b(omega_a, omega_q, g, j)
    }

    pub fn omega_a(&self) -> f64 {
        self.omega_a
    }
    pub fn omega_b(&self) -> f64 {
        self.omega_b
    }
    pub fn omega_q(&self) -> f64 {
        self.omega_q
    }
    pub fn g(&self) -> f64 {
        self.g
    }
    pub fn j(&self) -> f64 {
        self.j
    }

    pub fn with_g(&self, g: f64) -> Result<Self> {
        Self::in_units_of_omega_b(self.omega_a, self.omega_q, g, self.j)
    }

    pub fn with_j(&self, j: f64) -> Result<Self> {
        Self::in_units_of_omega_b(self.omega_a, self.omega_q, self.g, j)
    }

    pub fn delta_b(&self) -> f64 {
        self.omega_a - self.omega_b
    }
    pub fn delta_q(&self) -> f64 {
        self.omega_a - self.omega_q
    }
    pub fn eta_b(&self) -> f64 {
        self.omega_a + self.omega_b
    }
    pub fn eta_q(&self) -> f64 {
        self.omega_a + self.omega_q
    }

    pub fn dimensionless(&self) -> DimensionlessCouplings {
        DimensionlessCouplings {
            g_tilde: 2.0 * self.g / (self.omega_a * self.omega_q).sqrt(),
            j_tilde: 2.0 * self.j / (self.omega_a * self.omega_b).sqrt(),
        }
    }

    fn require_large_detuning(&self) -> Result<()> {
        if self.delta_b() <= 0.0 || self.delta_q() <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "auxiliary mode must be blue-detuned from both partners (delta_b = {}, delta_q = {})",
                self.delta_b(),
                self.delta_q()
            )));
        }
        Ok(())
    }
}

/// Size of the two neglected second-order terms relative to the retained ones.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FnDiagnostic {
    /// `|C| / xi` (0 when both vanish).
    pub c_ratio: f64,
    /// `|F| / chi` (0 when both vanish).
    pub f_ratio: f64,
}

impl FnDiagnostic {
    pub const LIMIT: f64 = 0.2;

    fn new(c: f64, xi: f64, f: f64, chi: f64) -> Self {
        let ratio = |num: f64, den: f64| {
            if num == 0.0 {
                0.0
            } else if den == 0.0 {
                f64::INFINITY
            } else {
                (num / den).abs()
            }
        };
        Self {
            c_ratio: ratio(c, xi),
            f_ratio: ratio(f, chi),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.c_ratio < Self::LIMIT && self.f_ratio < Self::LIMIT
    }
}

/// Coefficients of the auxiliary-mode elimination and of the squeezed frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveParams {
    pub mu_q: f64,
    pub nu_q: f64,
    pub mu_b: f64,
    pub nu_b: f64,
    pub chi: f64,
    pub xi: f64,
    pub c_coeff: f64,
    pub f_coeff: f64,
    pub r: f64,
    pub omega_r: f64,
    pub chi_r: f64,
    pub c_r: f64,
}

impl EffectiveParams {
    pub fn fn_diagnostic(&self) -> FnDiagnostic {
        FnDiagnostic::new(self.c_coeff, self.xi, self.f_coeff, self.chi)
    }
}

pub fn effective_params(p: &ModelParams) -> Result<EffectiveParams> {
    p.require_large_detuning()?;
    let (db, dq, eb, eq) = (p.delta_b(), p.delta_q(), p.eta_b(), p.eta_q());
    let (g, j, wb) = (p.g, p.j, p.omega_b);
    let chi = g * j * (1.0 / db + 1.0 / eb + 1.0 / dq + 1.0 / eq) / 2.0;
    let xi = j * j * (1.0 / db + 1.0 / eb) / 2.0;
    let argument = 1.0 - 4.0 * xi / wb;
    if argument <= 0.0 {
        return Err(Error::SqueezedFrameUnstable { argument });
    }
    let r = -0.25 * argument.ln();
    Ok(EffectiveParams {
        mu_q: g / eq,
        nu_q: g / dq,
        mu_b: j / eb,
        nu_b: j / db,
        chi,
        xi,
        c_coeff: j * j / 2.0 * (1.0 / db - 1.0 / eb),
        f_coeff: -g * g / 2.0 * (1.0 / dq - 1.0 / eq),
        r,
        omega_r: wb * (-2.0 * r).exp(),
        chi_r: chi * r.exp(),
        c_r: wb / 2.0 * ((-2.0 * r).exp() - 1.0),
    })
}

fn spin_z_term(b: &mut OperatorBuilder, omega_q: f64) -> Result<()> {
    b.add_term(re(omega_q / 2.0), &[(Factor::Spin, &pauli(Pauli::Z))])?;
    Ok(())
}

fn require_effective(trunc: &Truncation) -> Result<()> {
    if trunc.include_a() {
        return Err(Error::InvalidParameter(
            "effective models act on (mode_b x spin); use a truncation without mode_a".into(),
        ));
    }
    Ok(())
}

/// Rabi-type Hamiltonian `(wq/2) sz + w n - lambda X sx - kappa X^2 + c`.
fn rabi_like(trunc: &Truncation, omega_q: f64, omega: f64, lambda: f64, kappa: f64, constant: f64) -> Result<Operator> {
    require_effective(trunc)?;
    let n = trunc.n_b_max();
    let mut b = OperatorBuilder::new(trunc.basis());
    spin_z_term(&mut b, omega_q)?;
    b.add_term(re(omega), &[(Factor::ModeB, &fock_number(n))])?;
    if lambda != 0.0 {
        b.add_term(
            re(-lambda),
            &[(Factor::ModeB, &fock_position(n)), (Factor::Spin, &pauli(Pauli::X))],
        )?;
    }
    if kappa != 0.0 {
        b.add_term(re(-kappa), &[(Factor::ModeB, &fock_position_squared(n))])?;
    }
    b.add_identity(re(constant));
    Ok(b.build().with_parity_symmetry())
}

/// Three-body Hamiltonian on `mode_a x mode_b x spin`.
pub fn build_full(p: &ModelParams, trunc: &Truncation) -> Result<Operator> {
    if !trunc.include_a() {
        return Err(Error::FullModelRequiresModeA);
    }
    let (na, nb) = (trunc.n_a_max(), trunc.n_b_max());
    let xa = fock_position(na);
    let mut b = OperatorBuilder::new(trunc.basis());
    spin_z_term(&mut b, p.omega_q)?;
    b.add_term(re(p.omega_a), &[(Factor::ModeA, &fock_number(na))])?;
    b.add_term(re(p.omega_b), &[(Factor::ModeB, &fock_number(nb))])?;
    if p.g != 0.0 {
        b.add_term(re(p.g), &[(Factor::ModeA, &xa), (Factor::Spin, &pauli(Pauli::X))])?;
    }
    if p.j != 0.0 {
        b.add_term(re(p.j), &[(Factor::ModeA, &xa), (Factor::ModeB, &fock_position(nb))])?;
    }
    Ok(b.build().with_parity_symmetry())
}

/// Spin-boson model left after eliminating the auxiliary mode.
pub fn build_effective(p: &ModelParams, trunc: &Truncation) -> Result<Operator> {
    let e = effective_params(p)?;
    rabi_like(trunc, p.omega_q, p.omega_b, e.chi, e.xi, 0.0)
}

/// The effective model after the squeeze that removes its quadratic term,
/// including the frame constant.
pub fn build_squeezed_rabi(p: &ModelParams, trunc: &Truncation) -> Result<Operator> {
    let e = effective_params(p)?;
    rabi_like(trunc, p.omega_q, e.omega_r, e.chi_r, 0.0, e.c_r)
}

/// Renormalized quantities of the model with an added `D (a + a^dag)^2` term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct A2Params {
    pub d_tilde: f64,
    /// `D = d_tilde g^2 / omega_q`.
    pub d_coeff: f64,
    pub r_a: f64,
    pub omega_a_bar: f64,
    pub g_bar: f64,
    pub j_bar: f64,
    /// Squeeze parameter of the effective frame.
    pub r_frame: f64,
    pub omega_r_a: f64,
    pub chi_r_a: f64,
    /// Effective coupling, squeezing and neglected-term coefficients built
    /// from the renormalized quantities.
    pub chi_bar: f64,
    pub xi_bar: f64,
    pub c_bar: f64,
    pub f_bar: f64,
}

impl A2Params {
    pub fn fn_diagnostic(&self) -> FnDiagnostic {
        FnDiagnostic::new(self.c_bar, self.xi_bar, self.f_bar, self.chi_bar)
    }
}

pub fn a2_params(p: &ModelParams, d_tilde: f64) -> Result<A2Params> {
    check_non_negative("d_tilde", d_tilde)?;
    let d_coeff = d_tilde * p.g * p.g / p.omega_q;
    let r_a = -0.25 * (1.0 + 4.0 * d_coeff / p.omega_a).ln();
    let omega_a_bar = p.omega_a * (-2.0 * r_a).exp();
    let g_bar = p.g * r_a.exp();
    let j_bar = p.j * r_a.exp();
    let (db, dq) = (omega_a_bar - p.omega_b, omega_a_bar - p.omega_q);
    let (eb, eq) = (omega_a_bar + p.omega_b, omega_a_bar + p.omega_q);
    if db <= 0.0 || dq <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "renormalized auxiliary mode must be blue-detuned (delta_b = {db}, delta_q = {dq})"
        )));
    }
    let sum_b = 1.0 / db + 1.0 / eb;
    let sum_q = 1.0 / dq + 1.0 / eq;
    let argument = 1.0 - 2.0 * j_bar * j_bar * sum_b / p.omega_b;
    if argument <= 0.0 {
        return Err(Error::UnstablePhase { argument });
    }
    let r_frame = -0.25 * argument.ln();
    Ok(A2Params {
        d_tilde,
        d_coeff,
        r_a,
        omega_a_bar,
        g_bar,
        j_bar,
        r_frame,
        omega_r_a: p.omega_b * (-2.0 * r_frame).exp(),
        chi_r_a: g_bar * j_bar * r_frame.exp() * (sum_q + sum_b) / 2.0,
        chi_bar: g_bar * j_bar * (sum_q + sum_b) / 2.0,
        xi_bar: j_bar * j_bar * sum_b / 2.0,
        c_bar: j_bar * j_bar / 2.0 * (1.0 / db - 1.0 / eb),
        f_bar: -g_bar * g_bar / 2.0 * (1.0 / dq - 1.0 / eq),
    })
}

/// Squeezed-frame Rabi model of the A^2-augmented system (no frame constant).
pub fn build_effective_a2(p: &ModelParams, d_tilde: f64, trunc: &Truncation) -> Result<Operator> {
    let a = a2_params(p, d_tilde)?;
    rabi_like(trunc, p.omega_q, a.omega_r_a, a.chi_r_a, 0.0, 0.0)
}

/// Coefficients for unequal rotating (`j1`) and counter-rotating (`j2`) hopping.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnisotropicParams {
    pub j1: f64,
    pub j2: f64,
    pub chi1: f64,
    pub chi2: f64,
    pub xi1: f64,
    pub xi2: f64,
    pub r_prime: f64,
    pub omega_r_prime: f64,
    pub chi1r: f64,
    pub chi2r: f64,
    pub c_r_prime: f64,
    /// Neglected-term coefficients, evaluated with the larger hopping.
    pub c_coeff: f64,
    pub f_coeff: f64,
}

impl AnisotropicParams {
    pub fn fn_diagnostic(&self) -> FnDiagnostic {
        FnDiagnostic::new(self.c_coeff, self.xi1.min(self.xi2), self.f_coeff, self.chi1.min(self.chi2))
    }

    /// Squeezed-frame analogue of `2 chi_r / sqrt(omega_r omega_q)`.
    pub fn chi_prime(&self, omega_q: f64) -> f64 {
        (self.chi1r + self.chi2r) / (self.omega_r_prime * omega_q).sqrt()
    }
}

pub fn anisotropic_params(p: &ModelParams, j1: f64, j2: f64) -> Result<AnisotropicParams> {
    check_non_negative("j1", j1)?;
    check_non_negative("j2", j2)?;
    p.require_large_detuning()?;
    let (db, dq, eb, eq) = (p.delta_b(), p.delta_q(), p.eta_b(), p.eta_q());
    let (g, wb) = (p.g, p.omega_b);
    let chi1 = (g * j2 / eb + g * j1 / db + g * j2 / eq + g * j1 / dq) / 2.0;
    let chi2 = (g * j2 / eb + g * j1 / db + g * j2 / dq + g * j1 / eq) / 2.0;
    let xi1 = (j2 * j2 / eb + j1 * j1 / db) / 2.0;
    let xi2 = j1 * j2 * (1.0 / db + 1.0 / eb) / 2.0;
    let denominator = wb - 2.0 * xi1 + 2.0 * xi2;
    let argument = if denominator > 0.0 {
        1.0 - 4.0 * xi2 / denominator
    } else {
        denominator
    };
    if argument <= 0.0 {
        return Err(Error::UnstableRegime { argument });
    }
    let r_prime = -0.25 * argument.ln();
    let (c2, s2) = ((2.0 * r_prime).cosh(), (2.0 * r_prime).sinh());
    let omega_r_prime = (wb - 2.0 * xi1) * c2 - 2.0 * xi2 * s2;
    if omega_r_prime <= 0.0 {
        return Err(Error::UnstableRegime { argument: omega_r_prime });
    }
    let jm = j1.max(j2);
    Ok(AnisotropicParams {
        j1,
        j2,
        chi1,
        chi2,
        xi1,
        xi2,
        r_prime,
        omega_r_prime,
        chi1r: chi1 * r_prime.cosh() + chi2 * r_prime.sinh(),
        chi2r: chi1 * r_prime.sinh() + chi2 * r_prime.cosh(),
        c_r_prime: wb / 2.0 * (c2 - 1.0) - xi1 * c2 - xi2 * s2,
        c_coeff: jm * jm / 2.0 * (1.0 / db - 1.0 / eb),
        f_coeff: -g * g / 2.0 * (1.0 / dq - 1.0 / eq),
    })
}

/// Effective model with anisotropic hopping, before any squeeze.
pub fn build_anisotropic_effective(p: &ModelParams, j1: f64, j2: f64, trunc: &Truncation) -> Result<Operator> {
    let ap = anisotropic_params(p, j1, j2)?;
    require_effective(trunc)?;
    let n = trunc.n_b_max();
    let a = fock_lowering(n);
    let ad = a.adjoint();
    let (sp, sm) = (pauli(Pauli::Plus), pauli(Pauli::Minus));
    let lower = |k: usize| fock_lowering(k);
    let raise = |k: usize| fock_lowering(k).adjoint();
    let aa = compressed_product(n, &[&lower, &lower]);
    let adad = compressed_product(n, &[&raise, &raise]);
    let ada = compressed_product(n, &[&raise, &lower]);
    let aad = compressed_product(n, &[&lower, &raise]);
    let sym: DMatrix<C64> = ada + aad;

    let mut b = OperatorBuilder::new(trunc.basis());
    spin_z_term(&mut b, p.omega_q)?;
    b.add_term(re(p.omega_b), &[(Factor::ModeB, &fock_number(n))])?;
    b.add_term(re(-ap.chi2), &[(Factor::ModeB, &ad), (Factor::Spin, &sp)])?;
    b.add_term(re(-ap.chi2), &[(Factor::ModeB, &a), (Factor::Spin, &sm)])?;
    b.add_term(re(-ap.chi1), &[(Factor::ModeB, &ad), (Factor::Spin, &sm)])?;
    b.add_term(re(-ap.chi1), &[(Factor::ModeB, &a), (Factor::Spin, &sp)])?;
    b.add_term(re(-ap.xi2), &[(Factor::ModeB, &(adad + aa))])?;
    b.add_term(re(-ap.xi1), &[(Factor::ModeB, &sym)])?;
    Ok(b.build().with_parity_symmetry())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::parity_operator;

    fn paper_point(g_tilde: f64) -> ModelParams {
        ModelParams::from_dimensionless(40.0, 5.0, g_tilde, 0.95).unwrap()
    }

    fn lowest(op: &Operator, k: usize) -> Vec<f64> {
        let mut ev: Vec<f64> = op.to_dense().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev.truncate(k);
        ev
    }

    #[test]
    fn dimensionless_round_trip() {
        let p = ModelParams::from_dimensionless(40.0, 5.0, 0.37, 0.91).unwrap();
        let d = p.dimensionless();
        assert!((d.g_tilde - 0.37).abs() < 1e-12);
        assert!((d.j_tilde - 0.91).abs() < 1e-12);
        let q = ModelParams::from_physical(40e9, 1e9, 5e9, p.g() * 1e9, p.j() * 1e9).unwrap();
        assert!((q.g() - p.g()).abs() < 1e-12 && (q.j() - p.j()).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(ModelParams::in_units_of_omega_b(-1.0, 5.0, 1.0, 1.0).is_err());
        assert!(ModelParams::in_units_of_omega_b(40.0, 5.0, -1.0, 1.0).is_err());
        assert!(ModelParams::in_units_of_omega_b(40.0, 5.0, f64::NAN, 1.0).is_err());
        let red = ModelParams::in_units_of_omega_b(0.5, 5.0, 1.0, 0.1).unwrap();
        assert!(effective_params(&red).is_err());
    }

    #[test]
    fn effective_coefficients_at_reference_point() {
        let e = effective_params(&paper_point(0.5)).unwrap();
        assert!((e.xi - 0.2258).abs() < 1e-4, "xi = {}", e.xi);
        assert!((e.r - 0.5838).abs() < 2e-3, "r = {}", e.r);
        assert!((e.chi - 0.5355).abs() < 1e-3, "chi = {}", e.chi);
        assert!((e.omega_r - (-2.0 * e.r).exp()).abs() < 1e-15);
        assert!(e.c_r < 0.0);
    }

    #[test]
    fn no_hopping_means_identity_frame() {
        let p = ModelParams::in_units_of_omega_b(40.0, 5.0, 2.0, 0.0).unwrap();
        let e = effective_params(&p).unwrap();
        assert_eq!((e.chi, e.xi, e.r, e.omega_r), (0.0, 0.0, 0.0, 1.0));
        let t = Truncation::effective(12);
        let diff = build_effective(&p, &t)
            .unwrap()
            .sub(&build_squeezed_rabi(&p, &t).unwrap())
            .unwrap();
        assert_eq!(diff.max_abs(), 0.0);
    }

    #[test]
    fn unstable_frame_is_an_error() {
        let p = ModelParams::from_dimensionless(40.0, 5.0, 0.3, 1.05).unwrap();
        assert!(matches!(effective_params(&p), Err(Error::SqueezedFrameUnstable { .. })));
    }

    #[test]
    fn full_model_matrix_elements() {
        let p = ModelParams::in_units_of_omega_b(40.0, 5.0, 0.7, 0.3).unwrap();
        let t = Truncation::full(3, 4);
        let h = build_full(&p, &t).unwrap();
        let basis = t.basis();
        let up_1a = basis.encode(&[1, 0, 0]);
        let down_0 = basis.encode(&[0, 0, 1]);
        assert!((h.element(up_1a, down_0) - re(0.7)).norm() < 1e-15);
        assert!(h.hermiticity_defect() < 1e-12);
        assert!(matches!(
            build_full(&p, &Truncation::effective(4)),
            Err(Error::FullModelRequiresModeA)
        ));
    }

    #[test]
    fn decoupled_full_model_is_diagonal() {
        let p = ModelParams::in_units_of_omega_b(40.0, 5.0, 0.0, 0.0).unwrap();
        let h = build_full(&p, &Truncation::full(2, 3)).unwrap().to_dense();
        for i in 0..h.nrows() {
            for j in 0..h.ncols() {
                if i != j {
                    assert_eq!(h[(i, j)], re(0.0));
                }
            }
        }
        assert!((lowest(&build_full(&p, &Truncation::full(2, 3)).unwrap(), 1)[0] + 2.5).abs() < 1e-14);
    }

    #[test]
    fn full_model_commutes_with_parity() {
        let p = paper_point(0.5);
        let t = Truncation::full(10, 60);
        let h = build_full(&p, &t).unwrap();
        assert!(h.commutator(&parity_operator(&t)).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn effective_models_commute_with_parity() {
        let p = paper_point(0.5);
        let t = Truncation::effective(40);
        let pi = parity_operator(&t);
        for h in [
            build_effective(&p, &t).unwrap(),
            build_squeezed_rabi(&p, &t).unwrap(),
            build_effective_a2(&p, 0.5, &t).unwrap(),
            build_anisotropic_effective(&p, 2.5, 3.5, &t).unwrap(),
        ] {
            assert!(h.commutator(&pi).unwrap().max_abs() < 1e-10);
            assert!(h.hermiticity_defect() < 1e-12);
        }
    }

    #[test]
    fn effective_ground_energy_is_variationally_bounded() {
        for g in [0.0, 0.2, 0.5] {
            let e0 = lowest(&build_effective(&paper_point(g), &Truncation::effective(40)).unwrap(), 1)[0];
            assert!(e0 <= -2.5 + 1e-12);
        }
    }

    #[test]
    fn squeezed_frame_spectrum_matches_effective() {
        let p = paper_point(0.2);
        let a = lowest(&build_effective(&p, &Truncation::effective(120)).unwrap(), 5);
        let b = lowest(&build_squeezed_rabi(&p, &Truncation::effective(120)).unwrap(), 5);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-4, "{x} vs {y}");
        }
    }

    #[test]
    fn a2_reduces_to_bare_model() {
        let p = paper_point(0.4);
        let a = a2_params(&p, 0.0).unwrap();
        let e = effective_params(&p).unwrap();
        assert_eq!(a.r_a, 0.0);
        assert_eq!(a.omega_a_bar, p.omega_a());
        assert_eq!(a.g_bar, p.g());
        assert_eq!(a.j_bar, p.j());
        assert!((a.r_frame - e.r).abs() < 1e-14);
        assert!((a.chi_r_a - e.chi_r).abs() < 1e-14);
        let t = Truncation::effective(30);
        let diff = build_squeezed_rabi(&p, &t)
            .unwrap()
            .sub(&build_effective_a2(&p, 0.0, &t).unwrap())
            .unwrap();
        let id = Operator::identity(t.basis()).scaled(re(e.c_r));
        assert!(diff.sub(&id).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn a2_stability() {
        let p = ModelParams::from_dimensionless(40.0, 5.0, 0.25, 1.03).unwrap();
        let a = a2_params(&p, 1.5).unwrap();
        assert!(a.omega_r_a > 0.0 && a.r_a < 0.0);
        // J_tilde above sqrt(1 + D g^2)
        let p = ModelParams::from_dimensionless(40.0, 5.0, 0.1, 1.03).unwrap();
        assert!(matches!(a2_params(&p, 1.5), Err(Error::UnstablePhase { .. })));
        let p = ModelParams::from_dimensionless(40.0, 5.0, 0.0, 0.9).unwrap();
        let h = build_effective_a2(&p, 1.0, &Truncation::effective(10)).unwrap();
        let ev = lowest(&h, 1);
        assert!((ev[0] + 2.5).abs() < 1e-12);
    }

    #[test]
    fn anisotropic_symmetric_case_matches_isotropic() {
        let p = ModelParams::in_units_of_omega_b(40.0, 5.0, 2.5, 3.0).unwrap();
        let a = anisotropic_params(&p, 3.0, 3.0).unwrap();
        let e = effective_params(&p).unwrap();
        assert!((a.chi1 - e.chi).abs() < 1e-12 && (a.chi2 - e.chi).abs() < 1e-12);
        assert_eq!(a.chi2r / a.chi1r, 1.0);
        assert!((a.omega_r_prime - e.omega_r).abs() < 1e-10);
        assert!((a.r_prime - e.r).abs() < 1e-10);
        assert!((a.c_r_prime - e.c_r).abs() < 1e-10);
        let t = Truncation::effective(40);
        let diff = build_anisotropic_effective(&p, 3.0, 3.0, &t)
            .unwrap()
            .sub(&build_effective(&p, &t).unwrap())
            .unwrap();
        assert!(diff.max_abs() < 1e-12);
    }

    #[test]
    fn anisotropic_ratio_and_trivial_frame() {
        let p = ModelParams::in_units_of_omega_b(40.0, 5.0, 2.5, 0.0).unwrap();
        let a = anisotropic_params(&p, 2.5, 3.5).unwrap();
        let ratio = a.chi2r / a.chi1r;
        assert!(ratio > 0.9 && ratio < 1.1, "{ratio}");
        let a = anisotropic_params(&p, 3.0, 0.0).unwrap();
        assert_eq!(a.xi2, 0.0);
        assert_eq!(a.r_prime, 0.0);
        let bare = ModelParams::in_units_of_omega_b(40.0, 5.0, 0.0, 0.0).unwrap();
        let t = Truncation::effective(8);
        let h = build_anisotropic_effective(&bare, 0.0, 0.0, &t).unwrap();
        let h0 = build_effective(&bare, &t).unwrap();
        assert_eq!(h.sub(&h0).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn neglected_terms_are_small_at_reference_points() {
        for g in [0.0, 0.2, 0.5, 0.65] {
            let d = effective_params(&paper_point(g)).unwrap().fn_diagnostic();
            assert!(d.is_valid(), "{d:?}");
            assert!((d.c_ratio - 1.0 / 40.0).abs() < 1e-12 || g == 0.0);
        }
    }
}
