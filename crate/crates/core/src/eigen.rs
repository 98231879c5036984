//! Lowest eigenpairs of Hermitian operators.
//!
//! The iterative path is a thick-restart Lanczos (Krylov-Schur style) method
//! with full re-orthogonalization and a deterministic all-ones start vector.
//! Parity-symmetric operators are split into their two Z2 sectors first, which
//! keeps the exponentially small superradiant splittings from stalling the
//! iteration.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{Operator, C64, ZERO};

/// Relative Hermiticity defect accepted by the solver.
pub const HERMITICITY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Dense below [`SolverOptions::dense_below`], iterative above.
    Auto,
    Dense,
    Krylov,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub method: Method,
    /// Residual tolerance `||H v - lambda v||`, relative to `max(1, ||H||_max)`.
    pub tol: f64,
    pub max_restarts: usize,
    pub dense_below: usize,
    /// Solve parity sectors separately when the operator is flagged symmetric.
    pub use_parity: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            method: Method::Auto,
            tol: 1e-9,
            max_restarts: 2000,
            dense_below: 160,
            use_parity: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SpectralResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<C64>>,
    pub residual_norms: Vec<f64>,
    /// Z2 sector of each eigenvector when the solve was sector-resolved.
    pub parities: Option<Vec<i8>>,
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(y: &mut [C64], alpha: C64, x: &[C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn scale(x: &mut [C64], s: f64) {
    x.iter_mut().for_each(|v| *v *= s);
}

/// Fixes the global phase so the first component of maximal modulus is real
/// and positive.
fn fix_phase(v: &mut [C64]) {
    let mut best = 0;
    let mut best_abs = -1.0;
    for (i, x) in v.iter().enumerate() {
        let a = x.norm();
        if a > best_abs * (1.0 + 1e-10) {
            best = i;
            best_abs = a;
        }
    }
    if best_abs > 0.0 {
        let ph = v[best].conj() / best_abs;
        v.iter_mut().for_each(|x| *x *= ph);
    }
}

/// Classical Gram-Schmidt twice against `basis`; returns the remaining norm.
fn orthogonalize(w: &mut [C64], basis: &[Vec<C64>]) -> f64 {
    for _ in 0..2 {
        let coeffs: Vec<C64> = basis.iter().map(|v| dot(v, w)).collect();
        for (v, c) in basis.iter().zip(coeffs) {
            axpy(w, -c, v);
        }
    }
    norm(w)
}

fn residual(op: &Operator, v: &[C64], lambda: f64) -> f64 {
    let mut hv = op.apply_vec(v);
    axpy(&mut hv, C64::new(-lambda, 0.0), v);
    norm(&hv)
}

fn sorted_hermitian_eigen(m: DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

fn dense_lowest(op: &Operator, k: usize) -> (Vec<f64>, Vec<Vec<C64>>) {
    let (values, vectors) = sorted_hermitian_eigen(op.to_dense());
    let k = k.min(values.len());
    let vecs = (0..k)
        .map(|c| {
            let mut v: Vec<C64> = vectors.column(c).iter().copied().collect();
            fix_phase(&mut v);
            v
        })
        .collect();
    (values[..k].to_vec(), vecs)
}

fn krylov_lowest(op: &Operator, k: usize, tol: f64, max_restarts: usize) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    let n = op.dim();
    let m = (2 * k + 40).min(n);
    let keep = (k + 12).min(m / 2).max(k);

    let mut start = vec![C64::new(1.0, 0.0); n];
    scale(&mut start, 1.0 / (n as f64).sqrt());

    let mut v: Vec<Vec<C64>> = vec![start];
    let mut w: Vec<Vec<C64>> = Vec::new();
    let mut best_residual = f64::INFINITY;

    for _restart in 0..max_restarts {
        // Expand to m vectors, storing H v alongside each basis vector.
        let mut exhausted = false;
        while w.len() < v.len() {
            w.push(op.apply_vec(&v[w.len()]));
        }
        while v.len() < m {
            let mut next = w.last().unwrap().clone();
            let nrm = orthogonalize(&mut next, &v);
            if nrm < 1e-12 * norm(w.last().unwrap()).max(1e-300) {
                exhausted = true;
                break;
            }
            scale(&mut next, 1.0 / nrm);
            w.push(op.apply_vec(&next));
            v.push(next);
        }

        let size = v.len();
        let t = DMatrix::from_fn(size, size, |i, j| dot(&v[i], &w[j]));
        let t = (&t + t.adjoint()) * C64::new(0.5, 0.0);
        let (theta, y) = sorted_hermitian_eigen(t);

        let combine = |basis: &[Vec<C64>], col: usize| {
            let mut out = vec![ZERO; n];
            for (b, c) in basis.iter().zip(y.column(col).iter()) {
                axpy(&mut out, *c, b);
            }
            out
        };

        let want = k.min(size);
        let mut ritz_v = Vec::with_capacity(keep.min(size));
        let mut ritz_w = Vec::with_capacity(keep.min(size));
        let mut worst = 0.0f64;
        let mut first_unconverged: Option<Vec<C64>> = None;
        for c in 0..keep.min(size) {
            let x = combine(&v, c);
            let hx = combine(&w, c);
            if c < want {
                let mut r = hx.clone();
                axpy(&mut r, C64::new(-theta[c], 0.0), &x);
                let rn = norm(&r);
                worst = worst.max(rn);
                if rn > tol && first_unconverged.is_none() {
                    first_unconverged = Some(r);
                }
            }
            ritz_v.push(x);
            ritz_w.push(hx);
        }
        best_residual = best_residual.min(worst);

        if worst <= tol || (exhausted && size == n) || (exhausted && first_unconverged.is_none()) {
            let vals = theta[..want].to_vec();
            let vecs = ritz_v.into_iter().take(want).collect();
            return Ok((vals, vecs));
        }

        // Thick restart: keep the lowest Ritz pairs and continue from the
        // residual of the first unconverged one.
        v = ritz_v;
        w = ritz_w;
        let mut next = match first_unconverged {
            Some(r) => r,
            None => {
                // Krylov space was exhausted without reaching the wanted pairs:
                // continue from a fresh deterministic direction.
                (0..n).map(|i| C64::new(((i * 7919) % 101) as f64 - 50.0, 0.0)).collect()
            }
        };
        let nrm = orthogonalize(&mut next, &v);
        if nrm < 1e-14 {
            let vals = theta[..want].to_vec();
            let vecs = v.into_iter().take(want).collect();
            return Ok((vals, vecs));
        }
        scale(&mut next, 1.0 / nrm);
        w.push(op.apply_vec(&next));
        v.push(next);
    }
    Err(Error::NoConvergence {
        iterations: max_restarts,
        best_residual,
    })
}

fn solve_block(op: &Operator, k: usize, opts: &SolverOptions, abs_tol: f64) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    let use_dense = match opts.method {
        Method::Dense => true,
        Method::Krylov => op.dim() <= k,
        Method::Auto => op.dim() < opts.dense_below || op.dim() <= 2 * k + 40,
    };
    if use_dense {
        return Ok(dense_lowest(op, k));
    }
    let (vals, mut vecs) = krylov_lowest(op, k, abs_tol, opts.max_restarts)?;
    for v in vecs.iter_mut() {
        let nv = norm(v);
        scale(v, 1.0 / nv);
        fix_phase(v);
    }
    Ok((vals, vecs))
}

/// The `k` lowest eigenpairs of a Hermitian operator, ascending.
pub fn lowest_eigenpairs(op: &Operator, k: usize, opts: &SolverOptions) -> Result<SpectralResult> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let defect = op.hermiticity_defect();
    if defect > HERMITICITY_TOL {
        return Err(Error::NotHermitian { defect });
    }
    let k = k.min(op.dim());
    let abs_tol = opts.tol * op.max_abs().max(1.0);

    let (values, vectors, parities) = if opts.use_parity && op.is_parity_symmetric() {
        let signs = op.basis().parity_signs();
        let mut merged: Vec<(f64, i8, Vec<C64>)> = Vec::new();
        for sector in [1i8, -1] {
            let idx: Vec<usize> = (0..op.dim()).filter(|&i| signs[i] == sector).collect();
            if idx.is_empty() {
                continue;
            }
            let sub = op.restrict(&idx);
            let (vals, vecs) = solve_block(&sub, k.min(idx.len()), opts, abs_tol)?;
            for (val, sv) in vals.into_iter().zip(vecs) {
                let mut full = vec![ZERO; op.dim()];
                for (&i, &x) in idx.iter().zip(&sv) {
                    full[i] = x;
                }
                merged.push((val, sector, full));
            }
        }
        // Stable: on exact ties the even sector comes first.
        merged.sort_by(|a, b| a.0.total_cmp(&b.0));
        merged.truncate(k);
        let mut values = Vec::with_capacity(k);
        let mut vectors = Vec::with_capacity(k);
        let mut parities = Vec::with_capacity(k);
        for (val, s, v) in merged {
            values.push(val);
            parities.push(s);
            vectors.push(v);
        }
        (values, vectors, Some(parities))
    } else {
        let (values, vectors) = solve_block(op, k, opts, abs_tol)?;
        (values, vectors, None)
    };

    let residual_norms = values
        .iter()
        .zip(&vectors)
        .map(|(l, v)| residual(op, v, *l))
        .collect();
    Ok(SpectralResult {
        eigenvalues: values,
        eigenvectors: vectors,
        residual_norms,
        parities,
    })
}

/// All eigenvalues by dense diagonalization, ascending.
pub fn dense_eigenvalues(op: &Operator) -> Vec<f64> {
    sorted_hermitian_eigen(op.to_dense()).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::{build_effective, build_full, ModelParams};
    use crate::hilbert::{BasisDescriptor, Factor, OperatorBuilder, Truncation};

    fn krylov() -> SolverOptions {
        SolverOptions {
            method: Method::Krylov,
            ..SolverOptions::default()
        }
    }

    #[test]
    fn diagonal_operator() {
        let basis = BasisDescriptor::single(Factor::ModeB, 300);
        let diag: Vec<C64> = (0..300).map(|i| C64::new(((i * 37) % 300) as f64 * 0.1 - 3.0, 0.0)).collect();
        let mut b = OperatorBuilder::new(basis);
        b.add_diagonal(&diag).unwrap();
        let op = b.build();
        let res = lowest_eigenpairs(&op, 3, &krylov()).unwrap();
        let mut sorted: Vec<f64> = diag.iter().map(|c| c.re).collect();
        sorted.sort_by(f64::total_cmp);
        for i in 0..3 {
            assert!((res.eigenvalues[i] - sorted[i]).abs() < 1e-10);
            let peak = res.eigenvectors[i].iter().map(|x| x.norm()).fold(0.0, f64::max);
            assert!((peak - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn two_level_block() {
        let basis = BasisDescriptor::single(Factor::Spin, 2);
        let (wq, chi) = (5.0, 0.7);
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[C64::new(wq / 2.0, 0.0), C64::new(-chi, 0.0), C64::new(-chi, 0.0), C64::new(-wq / 2.0, 0.0)],
        );
        let op = Operator::from_dense(basis, m).unwrap();
        let res = lowest_eigenpairs(&op, 2, &SolverOptions::default()).unwrap();
        let e = (wq * wq / 4.0 + chi * chi).sqrt();
        assert!((res.eigenvalues[0] + e).abs() < 1e-12);
        assert!((res.eigenvalues[1] - e).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian() {
        let basis = BasisDescriptor::single(Factor::Spin, 2);
        let m = DMatrix::from_row_slice(2, 2, &[ZERO, C64::new(1.0, 0.0), ZERO, ZERO]);
        let op = Operator::from_dense(basis, m).unwrap();
        assert!(matches!(
            lowest_eigenpairs(&op, 1, &SolverOptions::default()),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn krylov_matches_dense_with_and_without_sectors() {
        let p = ModelParams::from_dimensionless(40.0, 5.0, 0.45, 0.95).unwrap();
        let t = Truncation::full(5, 40);
        assert!(t.dim() <= 512);
        let h = build_full(&p, &t).unwrap();
        let exact = dense_eigenvalues(&h);
        for use_parity in [true, false] {
            let opts = SolverOptions {
                use_parity,
                ..krylov()
            };
            let res = lowest_eigenpairs(&h, 4, &opts).unwrap();
            for (a, b) in res.eigenvalues.iter().zip(&exact) {
                assert!((a - b).abs() <= 1e-8 * b.abs().max(1.0), "{a} vs {b}");
            }
            for r in &res.residual_norms {
                assert!(*r < 1e-6);
            }
        }
    }

    #[test]
    fn eigenvectors_are_orthonormal_and_deterministic() {
        let p = ModelParams::from_dimensionless(40.0, 5.0, 0.5, 0.95).unwrap();
        let h = build_effective(&p, &Truncation::effective(150)).unwrap();
        let a = lowest_eigenpairs(&h, 4, &krylov()).unwrap();
        let b = lowest_eigenpairs(&h, 4, &krylov()).unwrap();
        assert_eq!(a.eigenvalues, b.eigenvalues);
        for i in 0..4 {
            assert_eq!(a.eigenvectors[i], b.eigenvectors[i]);
            for j in 0..4 {
                let d = dot(&a.eigenvectors[i], &a.eigenvectors[j]);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((d - C64::new(expect, 0.0)).norm() < 1e-10);
            }
        }
        assert!(a.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }
}
