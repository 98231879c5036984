//! Reduced states, qubit projections, Wigner functions and the analytic
//! squeezed cat state.
//!
//! Quadratures follow `x = (b + b^dag)/sqrt2`, `y = (b - b^dag)/(sqrt2 i)`, and
//! the Wigner function is normalized so that its integral over `dx dy` is one
//! (vacuum peak `1/pi`).

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criticality::{sp_solution, Branch};
use crate::error::{Error, Result};
use crate::hamiltonians::{effective_params, ModelParams};
use crate::hilbert::{fock_lowering, BasisDescriptor, Factor, Truncation, C64, ONE, ZERO};

const NORM_TOL: f64 = 1e-6;
const MIN_PROBABILITY: f64 = 1e-12;
const TAIL_LIMIT: f64 = 1e-4;
const CAT_DEFECT_LIMIT: f64 = 1e-3;

#[derive(Clone, Debug)]
pub struct DensityMatrix {
    basis: BasisDescriptor,
    matrix: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn from_matrix(basis: BasisDescriptor, matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != basis.dim() || matrix.ncols() != basis.dim() {
            return Err(Error::DimensionMismatch {
                context: "density matrix",
                expected: basis.dim(),
                found: matrix.nrows(),
            });
        }
        Ok(Self { basis, matrix })
    }

    pub fn pure(basis: BasisDescriptor, psi: &[C64]) -> Result<Self> {
        let v = DVector::from_column_slice(psi);
        Self::from_matrix(basis, &v * v.adjoint())
    }

    pub fn basis(&self) -> &BasisDescriptor {
        &self.basis
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|x| x.norm_sqr()).sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Weights and orthonormal vectors of the spectral decomposition, dropping
    /// negligible weights.
    pub fn components(&self) -> Vec<(f64, Vec<C64>)> {
        let h = (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
        let eig = h.symmetric_eigen();
        let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
        let mut out: Vec<(f64, Vec<C64>)> = (0..eig.eigenvalues.len())
            .filter(|&k| eig.eigenvalues[k] > 1e-14 * top.max(1e-300))
            .map(|k| (eig.eigenvalues[k], eig.eigenvectors.column(k).iter().copied().collect()))
            .collect();
        out.sort_by(|a, b| b.0.total_cmp(&a.0));
        out
    }

    /// Population of the top ten percent of Fock levels.
    pub fn tail_population(&self) -> f64 {
        let d = self.dim();
        let top = d.div_ceil(10);
        (d - top..d).map(|i| self.matrix[(i, i)].re).sum()
    }
}

fn state_norm(psi: &[C64]) -> f64 {
    psi.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Partial trace of a pure composite state onto one factor.
pub fn reduce(psi: &[C64], basis: &BasisDescriptor, keep: Factor) -> Result<DensityMatrix> {
    if psi.len() != basis.dim() {
        return Err(Error::DimensionMismatch {
            context: "reduce",
            expected: basis.dim(),
            found: psi.len(),
        });
    }
    let norm = state_norm(psi);
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::StateNorm { norm });
    }
    let pos = basis
        .position(keep)
        .ok_or_else(|| Error::InvalidParameter(format!("factor {keep} is not part of this basis")))?;
    let d = basis.factors()[pos].1;
    let rest = basis.dim() / d;
    // Rows indexed by the kept factor, columns by the rest in basis order.
    let mut m = DMatrix::from_element(d, rest, ZERO);
    let mut col_counter = vec![0usize; d];
    for (i, amp) in psi.iter().enumerate() {
        let local = basis.decode(i);
        let k = local[pos];
        m[(k, col_counter[k])] = *amp;
        col_counter[k] += 1;
    }
    let rho = &m * m.adjoint();
    DensityMatrix::from_matrix(BasisDescriptor::single(keep, d), rho)
}

/// Projects the spin onto `spinor` (components on `(|up>, |down>)`).
/// Returns the renormalized conditional state on the remaining factors and
/// the outcome probability.
pub fn project_qubit(psi: &[C64], basis: &BasisDescriptor, spinor: [C64; 2]) -> Result<(Vec<C64>, f64, BasisDescriptor)> {
    let sn = (spinor[0].norm_sqr() + spinor[1].norm_sqr()).sqrt();
    if (sn - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParameter(format!("spinor norm {sn} is not 1")));
    }
    if psi.len() != basis.dim() {
        return Err(Error::DimensionMismatch {
            context: "project_qubit",
            expected: basis.dim(),
            found: psi.len(),
        });
    }
    if basis.position(Factor::Spin) != Some(basis.factors().len() - 1) {
        return Err(Error::InvalidParameter("basis has no spin factor".into()));
    }
    let rest = basis.without(Factor::Spin).ok_or_else(|| Error::InvalidParameter("nothing left after projection".into()))?;
    let mut out: Vec<C64> = (0..rest.dim())
        .map(|i| spinor[0].conj() * psi[2 * i] + spinor[1].conj() * psi[2 * i + 1])
        .collect();
    let probability = out.iter().map(|x| x.norm_sqr()).sum::<f64>();
    if probability < MIN_PROBABILITY {
        return Err(Error::VanishingProbability { probability });
    }
    let s = 1.0 / probability.sqrt();
    out.iter_mut().for_each(|x| *x *= s);
    Ok((out, probability, rest))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub y_min: f64,
    pub y_max: f64,
    pub ny: usize,
}

impl GridSpec {
    pub fn square(half_width: f64, n: usize) -> Self {
        Self {
            x_min: -half_width,
            x_max: half_width,
            nx: n,
            y_min: -half_width,
            y_max: half_width,
            ny: n,
        }
    }

    fn axis(min: f64, max: f64, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![min];
        }
        (0..n).map(|k| min + (max - min) * k as f64 / (n - 1) as f64).collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WignerGrid {
    pub x_values: Vec<f64>,
    pub y_values: Vec<f64>,
    /// Row-major, one row per `y` value.
    pub values: Vec<f64>,
    /// Population of the top ten percent of Fock levels of the input.
    pub tail_population: f64,
    /// Set when the tail population exceeds the adequacy limit.
    pub tail_warning: bool,
    /// Largest imaginary part met while evaluating the parity trace.
    pub max_imaginary: f64,
}

impl WignerGrid {
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.x_values.len() + ix]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn spacing(v: &[f64]) -> f64 {
        if v.len() < 2 {
            1.0
        } else {
            v[1] - v[0]
        }
    }

    /// Trapezoidal integral over the grid.
    pub fn integral(&self) -> f64 {
        let (nx, ny) = (self.x_values.len(), self.y_values.len());
        let w = |k: usize, n: usize| if k == 0 || k + 1 == n { 0.5 } else { 1.0 };
        let mut s = 0.0;
        for iy in 0..ny {
            for ix in 0..nx {
                s += w(ix, nx) * w(iy, ny) * self.at(ix, iy);
            }
        }
        s * Self::spacing(&self.x_values) * Self::spacing(&self.y_values)
    }

    /// Position of the maximum with `x < 0` and with `x > 0`.
    pub fn lobe_peaks(&self) -> (Option<(f64, f64)>, Option<(f64, f64)>) {
        let mut left: Option<(f64, (f64, f64))> = None;
        let mut right: Option<(f64, (f64, f64))> = None;
        for (iy, &y) in self.y_values.iter().enumerate() {
            for (ix, &x) in self.x_values.iter().enumerate() {
                let v = self.at(ix, iy);
                let slot = if x < 0.0 {
                    &mut left
                } else if x > 0.0 {
                    &mut right
                } else {
                    continue;
                };
                if slot.is_none_or(|(best, _)| v > best) {
                    *slot = Some((v, (x, y)));
                }
            }
        }
        (left.map(|l| l.1), right.map(|r| r.1))
    }

    /// `max |W(x, y) - W(-x, y)|` on a grid symmetric about `x = 0`.
    pub fn mirror_defect(&self) -> f64 {
        let nx = self.x_values.len();
        let mut worst = 0.0f64;
        for iy in 0..self.y_values.len() {
            for ix in 0..nx {
                worst = worst.max((self.at(ix, iy) - self.at(nx - 1 - ix, iy)).abs());
            }
        }
        worst
    }

    /// `integral W(x, y) dy` at every grid `x` (trapezoid rule).
    pub fn x_marginal(&self) -> Vec<f64> {
        let (nx, ny) = (self.x_values.len(), self.y_values.len());
        let dy = Self::spacing(&self.y_values);
        (0..nx)
            .map(|ix| {
                (0..ny)
                    .map(|iy| {
                        let w = if iy == 0 || iy + 1 == ny { 0.5 } else { 1.0 };
                        w * self.at(ix, iy)
                    })
                    .sum::<f64>()
                    * dy
            })
            .collect()
    }

    /// Maxima of the `x` marginal on each side of `x = 0`, refined by a
    /// parabola through the neighbouring samples. Unlike [`Self::lobe_peaks`]
    /// this is insensitive to interference fringes, which integrate out.
    pub fn marginal_peaks(&self) -> (Option<f64>, Option<f64>) {
        let m = self.x_marginal();
        let xs = &self.x_values;
        let refine = |k: usize| -> f64 {
            if k == 0 || k + 1 == m.len() {
                return xs[k];
            }
            let (a, b, c) = (m[k - 1], m[k], m[k + 1]);
            let denom = a - 2.0 * b + c;
            if denom.abs() < f64::MIN_POSITIVE {
                xs[k]
            } else {
                xs[k] + 0.5 * (a - c) / denom * Self::spacing(xs)
            }
        };
        let best = |pred: &dyn Fn(f64) -> bool| {
            (0..xs.len())
                .filter(|&k| pred(xs[k]))
                .max_by(|&i, &j| m[i].total_cmp(&m[j]))
                .map(refine)
        };
        (best(&|x| x < 0.0), best(&|x| x > 0.0))
    }
}

/// Eigen-decomposition of `X = b + b^dag` on `m` levels.
struct QuadratureBasis {
    eigenvalues: Vec<f64>,
    /// Columns are eigenvectors.
    vectors: DMatrix<f64>,
    /// Nonzero entries of `V^T Pi V`.
    parity: Vec<(usize, usize, f64)>,
}

impl QuadratureBasis {
    fn new(m: usize) -> Self {
        let x = DMatrix::from_fn(m, m, |i, j| {
            if j == i + 1 {
                (j as f64).sqrt()
            } else if i == j + 1 {
                (i as f64).sqrt()
            } else {
                0.0
            }
        });
        let eig = x.symmetric_eigen();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, order[c])]);
        let signed = DMatrix::from_fn(m, m, |r, c| if r % 2 == 0 { vectors[(r, c)] } else { -vectors[(r, c)] });
        let q = vectors.transpose() * signed;
        let mut parity = Vec::new();
        for c in 0..m {
            for r in 0..m {
                let v = q[(r, c)];
                if v.abs() > 1e-13 {
                    parity.push((r, c, v));
                }
            }
        }
        Self {
            eigenvalues,
            vectors,
            parity,
        }
    }
}

fn real_times(m: &DMatrix<f64>, v: &[C64], transpose: bool) -> Vec<C64> {
    let n = m.nrows();
    let mut out = vec![ZERO; n];
    if transpose {
        for (c, o) in out.iter_mut().enumerate() {
            let col = m.column(c);
            let mut acc = ZERO;
            for (r, x) in col.iter().enumerate() {
                acc += v[r] * *x;
            }
            *o = acc;
        }
    } else {
        for (c, vc) in v.iter().enumerate() {
            if *vc == ZERO {
                continue;
            }
            for (r, x) in m.column(c).iter().enumerate() {
                out[r] += vc * *x;
            }
        }
    }
    out
}

/// Wigner function of a single-mode density matrix via the displaced-parity
/// formula `W(x, y) = (1/pi) Tr[rho D(beta) Pi D(beta)^dag]`, `beta = (x + i y)/sqrt2`.
pub fn wigner(rho: &DensityMatrix, grid: &GridSpec) -> Result<WignerGrid> {
    if grid.nx == 0 || grid.ny == 0 || !(grid.x_max >= grid.x_min) || !(grid.y_max >= grid.y_min) {
        return Err(Error::InvalidParameter("empty or inverted Wigner grid".into()));
    }
    let n = rho.dim();
    let xs = GridSpec::axis(grid.x_min, grid.x_max, grid.nx);
    let ys = GridSpec::axis(grid.y_min, grid.y_max, grid.ny);
    let reach = ((grid.x_min.abs().max(grid.x_max.abs())).powi(2) + (grid.y_min.abs().max(grid.y_max.abs())).powi(2))
        .sqrt()
        / std::f64::consts::SQRT_2;
    let m = (((n as f64).sqrt() + reach + 3.0).powi(2) + 10.0).ceil() as usize;
    let m = m.max(n + 10);
    let qb = QuadratureBasis::new(m);

    // Phase-rotation R = diag((-i)^n) maps X to P = i(b^dag - b).
    let rot: Vec<C64> = (0..m)
        .map(|k| match k % 4 {
            0 => ONE,
            1 => C64::new(0.0, -1.0),
            2 => -ONE,
            _ => C64::new(0.0, 1.0),
        })
        .collect();

    let comps: Vec<(f64, Vec<C64>)> = rho
        .components()
        .into_iter()
        .map(|(w, v)| {
            let mut padded = vec![ZERO; m];
            padded[..n].copy_from_slice(&v);
            (w, real_times(&qb.vectors, &padded, true))
        })
        .collect();

    let rows: Vec<(Vec<f64>, f64)> = ys
        .par_iter()
        .map(|&y| {
            let bi = y / std::f64::consts::SQRT_2;
            let mut row = vec![0.0; xs.len()];
            let mut max_im = 0.0f64;
            for (weight, psi_x) in &comps {
                let u: Vec<C64> = psi_x
                    .iter()
                    .zip(&qb.eigenvalues)
                    .map(|(a, &lam)| a * C64::from_polar(1.0, -bi * lam))
                    .collect();
                let mut s = real_times(&qb.vectors, &u, false);
                s.iter_mut().zip(&rot).for_each(|(a, r)| *a *= r);
                let t = real_times(&qb.vectors, &s, true);
                for (ix, &x) in xs.iter().enumerate() {
                    let br = x / std::f64::consts::SQRT_2;
                    let chi: Vec<C64> = t
                        .iter()
                        .zip(&qb.eigenvalues)
                        .map(|(a, &lam)| a * C64::from_polar(1.0, br * lam))
                        .collect();
                    let mut acc = ZERO;
                    for &(r, c, q) in &qb.parity {
                        acc += chi[r].conj() * q * chi[c];
                    }
                    max_im = max_im.max(acc.im.abs());
                    row[ix] += weight * acc.re / std::f64::consts::PI;
                }
            }
            (row, max_im)
        })
        .collect();

    let mut values = Vec::with_capacity(xs.len() * ys.len());
    let mut max_imaginary = 0.0f64;
    for (row, im) in rows {
        values.extend(row);
        max_imaginary = max_imaginary.max(im);
    }
    let tail = rho.tail_population();
    Ok(WignerGrid {
        x_values: xs,
        y_values: ys,
        values,
        tail_population: tail,
        tail_warning: tail > TAIL_LIMIT,
        max_imaginary,
    })
}

/// `exp(G)` applied to `v` for anti-Hermitian `G`, through the spectrum of `iG`.
fn expm_apply(g: &DMatrix<C64>, v: &[C64]) -> Vec<C64> {
    let ig = g * C64::new(0.0, 1.0);
    let ig = (&ig + ig.adjoint()) * C64::new(0.5, 0.0);
    let eig = ig.symmetric_eigen();
    let vv = &eig.eigenvectors;
    let coeffs = vv.adjoint() * DVector::from_column_slice(v);
    let scaled = DVector::from_fn(coeffs.len(), |k, _| coeffs[k] * C64::from_polar(1.0, -eig.eigenvalues[k]));
    (vv * scaled).iter().copied().collect()
}

fn squeeze_generator(levels: usize, q: f64) -> DMatrix<C64> {
    let a = fock_lowering(levels - 1);
    let ad = a.adjoint();
    (&ad * &ad - &a * &a) * C64::new(q / 2.0, 0.0)
}

fn displacement_generator(levels: usize, alpha: f64) -> DMatrix<C64> {
    let a = fock_lowering(levels - 1);
    (a.adjoint() - a) * C64::new(alpha, 0.0)
}

/// `S(q) psi` with `S(q) = exp[q (b^dag^2 - b^2)/2]`, which stretches the `x`
/// quadrature by `exp(q)`. Evaluated on a padded space and cut back to the
/// input length; returns the state and the norm lost to the cut.
pub fn squeeze_state(psi: &[C64], q: f64) -> (Vec<C64>, f64) {
    let n = psi.len();
    let m = 2 * n + 40;
    let mut padded = vec![ZERO; m];
    padded[..n].copy_from_slice(psi);
    let out = expm_apply(&squeeze_generator(m, q), &padded);
    let kept: Vec<C64> = out[..n].to_vec();
    let defect = (state_norm(psi).powi(2) - state_norm(&kept).powi(2)).max(0.0);
    (kept, defect)
}

/// Applies `S(q)` to mode b of a state on `(mode b, spin)`, one spin
/// component at a time. Returns the state and the norm lost to the cut.
pub fn squeeze_mode_b(psi: &[C64], basis: &BasisDescriptor, q: f64) -> Result<(Vec<C64>, f64)> {
    let f = basis.factors();
    if f.len() != 2 || f[0].0 != Factor::ModeB || f[1].0 != Factor::Spin {
        return Err(Error::InvalidParameter("squeeze_mode_b expects a (mode b, spin) basis".into()));
    }
    if psi.len() != basis.dim() {
        return Err(Error::DimensionMismatch {
            context: "squeeze_mode_b",
            expected: basis.dim(),
            found: psi.len(),
        });
    }
    let mut out = vec![ZERO; psi.len()];
    let mut defect = 0.0;
    for s in 0..2 {
        let comp: Vec<C64> = psi.iter().skip(s).step_by(2).copied().collect();
        let (sq, d) = squeeze_state(&comp, q);
        defect += d;
        for (n, x) in sq.into_iter().enumerate() {
            out[2 * n + s] = x;
        }
    }
    Ok((out, defect))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WignerFrame {
    /// The state of mode b as built, with the frame squeeze included.
    Lab,
    /// The frame squeeze undone.
    Squeezed,
}

#[derive(Clone, Debug)]
pub struct AnalyticCatState {
    pub truncation: Truncation,
    /// Normalized equal-weight superposition of the two branches.
    pub state: Vec<C64>,
    /// Normalized `S(r) D(+-alpha) S(r_sp)|0> |down>_+-`.
    pub branches: [Vec<C64>; 2],
    pub renormalization_defect: f64,
    pub alpha: f64,
    pub r: f64,
    pub r_sp: f64,
}

impl AnalyticCatState {
    pub fn branch_overlap(&self) -> C64 {
        self.branches[0].iter().zip(&self.branches[1]).map(|(a, b)| a.conj() * b).sum()
    }
}

/// Materializes `S(r) D(+-alpha) S(r_sp)|0>` tensored with the spin states
/// `spin_plus = (up, down)` and its mirror `(-up, down)`, on `0..=cutoff`.
pub fn cat_from_parts(alpha: f64, r: f64, r_sp: f64, spin_plus: [f64; 2], cutoff: usize) -> Result<AnalyticCatState> {
    let levels = cutoff + 1;
    let m = 2 * levels + 40;
    let mut vac = vec![ZERO; m];
    vac[0] = ONE;
    let inner = expm_apply(&squeeze_generator(m, r_sp), &vac);
    let mut bosonic = Vec::with_capacity(2);
    let mut defect = 0.0f64;
    for sign in [1.0, -1.0] {
        let displaced = expm_apply(&displacement_generator(m, sign * alpha), &inner);
        let outer = expm_apply(&squeeze_generator(m, r), &displaced);
        let kept: Vec<C64> = outer[..levels].to_vec();
        let nrm = state_norm(&kept);
        defect = defect.max(1.0 - nrm * nrm);
        bosonic.push(kept.into_iter().map(|x| x / nrm).collect::<Vec<_>>());
    }
    if defect > CAT_DEFECT_LIMIT {
        return Err(Error::CutoffTooSmall { defect });
    }
    let spin_norm = (spin_plus[0].powi(2) + spin_plus[1].powi(2)).sqrt();
    let spins = [
        [spin_plus[0] / spin_norm, spin_plus[1] / spin_norm],
        [-spin_plus[0] / spin_norm, spin_plus[1] / spin_norm],
    ];
    let branch = |k: usize| -> Vec<C64> {
        let mut v = vec![ZERO; 2 * levels];
        for n in 0..levels {
            v[2 * n] = bosonic[k][n] * spins[k][0];
            v[2 * n + 1] = bosonic[k][n] * spins[k][1];
        }
        v
    };
    let branches = [branch(0), branch(1)];
    let mut state: Vec<C64> = branches[0].iter().zip(&branches[1]).map(|(a, b)| a + b).collect();
    let nrm = state_norm(&state);
    state.iter_mut().for_each(|x| *x /= nrm);
    Ok(AnalyticCatState {
        truncation: Truncation::effective(cutoff),
        state,
        branches,
        renormalization_defect: defect,
        alpha,
        r,
        r_sp,
    })
}

/// Analytic superradiant ground state of the effective model at `p`.
pub fn analytic_cat(p: &ModelParams, cutoff: usize, frame: WignerFrame) -> Result<AnalyticCatState> {
    let sp = sp_solution(p, Branch::Plus)?;
    let r = match frame {
        WignerFrame::Lab => effective_params(p)?.r,
        WignerFrame::Squeezed => 0.0,
    };
    cat_from_parts(sp.alpha, r, sp.r_sp, sp.spin_minus_coeffs, cutoff)
}

fn orthonormal_pair(a: &[C64], b: &[C64]) -> Option<[Vec<C64>; 2]> {
    let na = state_norm(a);
    if na < 1e-14 {
        return None;
    }
    let q0: Vec<C64> = a.iter().map(|x| x / na).collect();
    let c: C64 = q0.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let mut q1: Vec<C64> = b.iter().zip(&q0).map(|(y, x)| y - c * x).collect();
    let n1 = state_norm(&q1);
    if n1 < 1e-14 {
        return None;
    }
    q1.iter_mut().for_each(|x| *x /= n1);
    Some([q0, q1])
}

/// Mean squared cosine of the principal angles between two two-dimensional
/// subspaces.
pub fn subspace_overlap(first: [&[C64]; 2], second: [&[C64]; 2]) -> Result<f64> {
    let d = first[0].len();
    for v in first.iter().chain(second.iter()) {
        if v.len() != d {
            return Err(Error::DimensionMismatch {
                context: "subspace_overlap",
                expected: d,
                found: v.len(),
            });
        }
    }
    let p = orthonormal_pair(first[0], first[1])
        .ok_or_else(|| Error::InvalidParameter("first pair is linearly dependent".into()))?;
    let q = orthonormal_pair(second[0], second[1])
        .ok_or_else(|| Error::InvalidParameter("second pair is linearly dependent".into()))?;
    let mut s = 0.0;
    for a in &p {
        for b in &q {
            let ip: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
            s += ip.norm_sqr();
        }
    }
    Ok((s / 2.0).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spin_mode(cutoff: usize) -> BasisDescriptor {
        Truncation::effective(cutoff).basis()
    }

    fn coherent(beta: f64, cutoff: usize) -> Vec<C64> {
        let mut v = vec![ZERO; cutoff + 1];
        let mut c = (-beta * beta / 2.0).exp();
        for (n, x) in v.iter_mut().enumerate() {
            if n > 0 {
                c *= beta / (n as f64).sqrt();
            }
            *x = C64::new(c, 0.0);
        }
        v
    }

    #[test]
    fn reduce_product_and_entangled_states() {
        let basis = spin_mode(3);
        let mut psi = vec![ZERO; basis.dim()];
        psi[basis.encode(&[0, 1])] = ONE;
        let rho = reduce(&psi, &basis, Factor::ModeB).unwrap();
        assert_eq!(rho.matrix()[(0, 0)], ONE);
        assert!((rho.purity() - 1.0).abs() < 1e-14);

        let mut psi = vec![ZERO; basis.dim()];
        let h = C64::new(0.5f64.sqrt(), 0.0);
        psi[basis.encode(&[0, 1])] = h;
        psi[basis.encode(&[1, 0])] = h;
        let rho = reduce(&psi, &basis, Factor::ModeB).unwrap();
        assert!((rho.matrix()[(0, 0)].re - 0.5).abs() < 1e-14);
        assert!((rho.matrix()[(1, 1)].re - 0.5).abs() < 1e-14);
        assert!(rho.matrix()[(0, 1)].norm() < 1e-14);
        let spin = reduce(&psi, &basis, Factor::Spin).unwrap();
        assert!((spin.trace() - 1.0).abs() < 1e-14);

        psi[0] = C64::new(0.3, 0.0);
        assert!(matches!(reduce(&psi, &basis, Factor::ModeB), Err(Error::StateNorm { .. })));
    }

    #[test]
    fn projection() {
        let basis = spin_mode(4);
        let phi = coherent(0.8, 4);
        let nrm = state_norm(&phi);
        let mut psi = vec![ZERO; basis.dim()];
        for (n, x) in phi.iter().enumerate() {
            psi[basis.encode(&[n, 1])] = x / nrm;
        }
        let (out, prob, rest) = project_qubit(&psi, &basis, [ZERO, ONE]).unwrap();
        assert!((prob - 1.0).abs() < 1e-12);
        assert_eq!(rest.dim(), 5);
        for (a, b) in out.iter().zip(&phi) {
            assert!((a - b / nrm).norm() < 1e-12);
        }
        assert!(matches!(
            project_qubit(&psi, &basis, [ONE, ZERO]),
            Err(Error::VanishingProbability { .. })
        ));
    }

    #[test]
    fn vacuum_and_coherent_wigner() {
        let b = BasisDescriptor::single(Factor::ModeB, 20);
        let mut vac = vec![ZERO; 20];
        vac[0] = ONE;
        let rho = DensityMatrix::pure(b.clone(), &vac).unwrap();
        let w = wigner(&rho, &GridSpec::square(4.0, 41)).unwrap();
        assert!((w.at(20, 20) - 1.0 / std::f64::consts::PI).abs() < 1e-10);
        let (x, y) = (w.x_values[27], w.y_values[15]);
        let expected = (-x * x - y * y).exp() / std::f64::consts::PI;
        assert!((w.at(27, 15) - expected).abs() < 1e-10);
        assert!((w.integral() - 1.0).abs() < 0.02);
        assert!(w.max_imaginary < 1e-10);

        let beta0 = 1.2;
        let c = coherent(beta0, 40);
        let nrm = state_norm(&c);
        let c: Vec<C64> = c.iter().map(|x| x / nrm).collect();
        let rho = DensityMatrix::pure(BasisDescriptor::single(Factor::ModeB, 41), &c).unwrap();
        let w = wigner(&rho, &GridSpec::square(5.0, 101)).unwrap();
        let (_, right) = w.lobe_peaks();
        let (px, py) = right.unwrap();
        assert!((px - std::f64::consts::SQRT_2 * beta0).abs() < 0.06, "{px}");
        assert!(py.abs() < 1e-12);
        assert!(w.min() > -1e-8);
    }

    #[test]
    fn mixed_state_wigner_is_average() {
        let b = BasisDescriptor::single(Factor::ModeB, 6);
        let mut m = DMatrix::from_element(6, 6, ZERO);
        m[(0, 0)] = C64::new(0.5, 0.0);
        m[(1, 1)] = C64::new(0.5, 0.0);
        let rho = DensityMatrix::from_matrix(b, m).unwrap();
        let w = wigner(&rho, &GridSpec::square(1.0, 3)).unwrap();
        // W_0(0) = 1/pi, W_1(0) = -1/pi
        assert!(w.at(1, 1).abs() < 1e-12);
        assert!(w.min() >= -2.0 / std::f64::consts::PI - 1e-8);
    }

    #[test]
    fn cat_reduces_to_vacuum_without_displacement() {
        let cat = cat_from_parts(0.0, 0.0, 0.0, [0.0, 1.0], 10).unwrap();
        let basis = spin_mode(10);
        let i = basis.encode(&[0, 1]);
        assert!((cat.state[i] - ONE).norm() < 1e-12);
        assert!((state_norm(&cat.state) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cat_rejects_small_cutoff() {
        assert!(matches!(
            cat_from_parts(4.0, 0.5, 0.3, [0.3, 0.95], 10),
            Err(Error::CutoffTooSmall { .. })
        ));
    }

    #[test]
    fn squeeze_stretches_x() {
        let mut vac = vec![ZERO; 80];
        vac[0] = ONE;
        let (s, defect) = squeeze_state(&vac, 0.5);
        assert!(defect < 1e-10);
        let n: f64 = s.iter().enumerate().map(|(k, x)| k as f64 * x.norm_sqr()).sum();
        assert!((n - 0.5f64.sinh().powi(2)).abs() < 1e-10);
        // <x^2> = exp(2q)/2 for the stretched quadrature: <b^2> = +cosh sinh
        let b2: C64 = (2..80).map(|k| s[k - 2].conj() * ((k * (k - 1)) as f64).sqrt() * s[k]).sum();
        assert!((b2.re - 0.5f64.sinh() * 0.5f64.cosh()).abs() < 1e-10);
    }

    #[test]
    fn overlap_limits() {
        let e = |k: usize| {
            let mut v = vec![ZERO; 4];
            v[k] = ONE;
            v
        };
        let (a, b, c, d) = (e(0), e(1), e(2), e(3));
        assert!((subspace_overlap([&a, &b], [&b, &a]).unwrap() - 1.0).abs() < 1e-14);
        assert!(subspace_overlap([&a, &b], [&c, &d]).unwrap().abs() < 1e-14);
        let short = vec![ONE; 3];
        assert!(subspace_overlap([&a, &b], [&short, &short]).is_err());
    }
}
