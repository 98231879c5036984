//! Truncated Fock-space operator algebra.
//!
//! Every composite space is an ordered tensor product of the factors
//! `(mode_a, mode_b, spin)` with row-major index flattening, so the spin index
//! varies fastest. The spin basis is ordered `(|up>, |down>)` and `sigma_z`
//! is `diag(+1, -1)`.
//!
//! Operators are stored densely for small composite dimensions and in CSR form
//! above [`DENSE_LIMIT`]; both sit behind [`Operator`].

use nalgebra::DMatrix;
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Composite dimension at and above which operators are stored sparse.
pub const DENSE_LIMIT: usize = 512;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    ModeA,
    ModeB,
    Spin,
}

impl Factor {
    pub fn is_bosonic(self) -> bool {
        !matches!(self, Factor::Spin)
    }
}

impl std::fmt::Display for Factor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Factor::ModeA => "mode_a",
            Factor::ModeB => "mode_b",
            Factor::Spin => "spin",
        })
    }
}

/// Fock cutoffs of the composite space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Truncation {
    n_a_max: usize,
    n_b_max: usize,
    include_a: bool,
}

impl Truncation {
    /// Space `mode_a x mode_b x spin`.
    pub fn full(n_a_max: usize, n_b_max: usize) -> Self {
        Self {
            n_a_max,
            n_b_max,
            include_a: true,
        }
    }

    /// Space `mode_b x spin`, used by every effective model.
    pub fn effective(n_b_max: usize) -> Self {
        Self {
            n_a_max: 0,
            n_b_max,
            include_a: false,
        }
    }

    pub fn n_a_max(&self) -> usize {
        self.n_a_max
    }

    pub fn n_b_max(&self) -> usize {
        self.n_b_max
    }

    pub fn include_a(&self) -> bool {
        self.include_a
    }

    pub fn dim(&self) -> usize {
        let a = if self.include_a { self.n_a_max + 1 } else { 1 };
        a * (self.n_b_max + 1) * 2
    }

    pub fn basis(&self) -> BasisDescriptor {
        let mut factors = Vec::with_capacity(3);
        if self.include_a {
            factors.push((Factor::ModeA, self.n_a_max + 1));
        }
        factors.push((Factor::ModeB, self.n_b_max + 1));
        factors.push((Factor::Spin, 2));
        BasisDescriptor { factors }
    }
}

impl std::fmt::Display for Truncation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.include_a {
            write!(f, "(n_a={}, n_b={})", self.n_a_max, self.n_b_max)
        } else {
            write!(f, "(n_b={})", self.n_b_max)
        }
    }
}

/// Ordered factor list of a composite space.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisDescriptor {
    factors: Vec<(Factor, usize)>,
}

impl BasisDescriptor {
    /// Factors must appear in the canonical order `(mode_a, mode_b, spin)`,
    /// each at most once.
    pub fn new(factors: Vec<(Factor, usize)>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidParameter("basis needs at least one factor".into()));
        }
        for w in factors.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(Error::InvalidParameter(format!(
                    "factors must follow the order (mode_a, mode_b, spin); got {} before {}",
                    w[0].0, w[1].0
                )));
            }
        }
        if let Some(&(f, _)) = factors.iter().find(|(_, d)| *d == 0) {
            return Err(Error::InvalidParameter(format!("factor {f} has zero dimension")));
        }
        Ok(Self { factors })
    }

    pub fn single(factor: Factor, dim: usize) -> Self {
        Self {
            factors: vec![(factor, dim)],
        }
    }

    pub fn factors(&self) -> &[(Factor, usize)] {
        &self.factors
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().map(|(_, d)| d).product()
    }

    pub fn position(&self, factor: Factor) -> Option<usize> {
        self.factors.iter().position(|(f, _)| *f == factor)
    }

    pub fn local_dim(&self, factor: Factor) -> Option<usize> {
        self.position(factor).map(|p| self.factors[p].1)
    }

    /// Stride of each factor in the flattened index.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.factors.len()];
        for p in (0..self.factors.len().saturating_sub(1)).rev() {
            strides[p] = strides[p + 1] * self.factors[p + 1].1;
        }
        strides
    }

    pub fn encode(&self, local: &[usize]) -> usize {
        debug_assert_eq!(local.len(), self.factors.len());
        local
            .iter()
            .zip(&self.factors)
            .fold(0, |acc, (&n, &(_, d))| acc * d + n)
    }

    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        let mut local = vec![0; self.factors.len()];
        for (p, &(_, d)) in self.factors.iter().enumerate().rev() {
            local[p] = index % d;
            index /= d;
        }
        local
    }

    /// The same basis with `factor` removed.
    pub fn without(&self, factor: Factor) -> Option<Self> {
        let p = self.position(factor)?;
        let mut factors = self.factors.clone();
        factors.remove(p);
        if factors.is_empty() {
            None
        } else {
            Some(Self { factors })
        }
    }

    /// Z2 parity `(-1)^(sum of Fock numbers + [spin is up])` of every basis state.
    pub fn parity_signs(&self) -> Vec<i8> {
        (0..self.dim())
            .map(|i| {
                let local = self.decode(i);
                let excitations: usize = local
                    .iter()
                    .zip(&self.factors)
                    .map(|(&n, &(f, _))| match f {
                        Factor::Spin => usize::from(n == 0),
                        _ => n,
                    })
                    .sum();
                if excitations.is_multiple_of(2) {
                    1
                } else {
                    -1
                }
            })
            .collect()
    }
}

/// Lowering operator on Fock levels `0..=cutoff`.
pub fn fock_lowering(cutoff: usize) -> DMatrix<C64> {
    let d = cutoff + 1;
    DMatrix::from_fn(d, d, |i, j| {
        if j == i + 1 {
            C64::new((j as f64).sqrt(), 0.0)
        } else {
            ZERO
        }
    })
}

pub fn fock_number(cutoff: usize) -> DMatrix<C64> {
    DMatrix::from_fn(cutoff + 1, cutoff + 1, |i, j| {
        if i == j {
            C64::new(i as f64, 0.0)
        } else {
            ZERO
        }
    })
}

/// Exact matrix elements of `a^2`, `a^dag a^dag`, `(a + a^dag)^2`, ... on the
/// retained levels: the product is formed on a larger space and then cut back,
/// so no boundary artifacts appear in the top level.
pub fn compressed_product(cutoff: usize, factors: &[&dyn Fn(usize) -> DMatrix<C64>]) -> DMatrix<C64> {
    let pad = factors.len();
    let big = cutoff + pad;
    let mut acc = DMatrix::<C64>::identity(big + 1, big + 1);
    for f in factors {
        acc *= f(big);
    }
    acc.view((0, 0), (cutoff + 1, cutoff + 1)).into_owned()
}

/// `(a + a^dag)` on levels `0..=cutoff`.
pub fn fock_position(cutoff: usize) -> DMatrix<C64> {
    let a = fock_lowering(cutoff);
    &a + a.adjoint()
}

/// Exact `(a + a^dag)^2` on the retained levels.
pub fn fock_position_squared(cutoff: usize) -> DMatrix<C64> {
    compressed_product(cutoff, &[&fock_position, &fock_position])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
    Plus,
    Minus,
}

/// Pauli and ladder matrices in the ordered basis `(|up>, |down>)`.
pub fn pauli(which: Pauli) -> DMatrix<C64> {
    let i = C64::new(0.0, 1.0);
    let m = |a: C64, b: C64, c: C64, d: C64| DMatrix::from_row_slice(2, 2, &[a, b, c, d]);
    match which {
        Pauli::X => m(ZERO, ONE, ONE, ZERO),
        Pauli::Y => m(ZERO, -i, i, ZERO),
        Pauli::Z => m(ONE, ZERO, ZERO, -ONE),
        Pauli::Plus => m(ZERO, ONE, ZERO, ZERO),
        Pauli::Minus => m(ZERO, ZERO, ONE, ZERO),
    }
}

#[derive(Clone, Debug)]
pub enum Storage {
    Dense(DMatrix<C64>),
    Sparse(CsrMatrix<C64>),
}

/// A square operator on a composite space.
///
/// Hamiltonian builders mark their output as parity-symmetric; the eigensolver
/// then diagonalizes each Z2 sector separately.
#[derive(Clone, Debug)]
pub struct Operator {
    basis: BasisDescriptor,
    storage: Storage,
    parity_symmetric: bool,
}

/// Accumulates Kronecker-product terms into an [`Operator`].
pub struct OperatorBuilder {
    basis: BasisDescriptor,
    coo: CooMatrix<C64>,
}

impl OperatorBuilder {
    pub fn new(basis: BasisDescriptor) -> Self {
        let d = basis.dim();
        Self {
            basis,
            coo: CooMatrix::new(d, d),
        }
    }

    /// Adds `coeff * (op_1 x op_2 x ...)`, with identities on absent factors.
    pub fn add_term(&mut self, coeff: C64, locals: &[(Factor, &DMatrix<C64>)]) -> Result<&mut Self> {
        let n = self.basis.factors.len();
        let mut per_slot: Vec<Option<Vec<(usize, usize, C64)>>> = vec![None; n];
        for &(factor, op) in locals {
            let p = self.basis.position(factor).ok_or_else(|| {
                Error::InvalidParameter(format!("factor {factor} is not part of this basis"))
            })?;
            let d = self.basis.factors[p].1;
            if op.nrows() != d || op.ncols() != d {
                return Err(Error::DimensionMismatch {
                    context: "embed",
                    expected: d,
                    found: op.nrows().max(op.ncols()),
                });
            }
            if per_slot[p].is_some() {
                return Err(Error::InvalidParameter(format!("factor {factor} listed twice in one term")));
            }
            let nz = (0..d)
                .flat_map(|i| (0..d).map(move |j| (i, j)))
                .filter_map(|(i, j)| {
                    let v = op[(i, j)];
                    (v != ZERO).then_some((i, j, v))
                })
                .collect();
            per_slot[p] = Some(nz);
        }
        let slots: Vec<Vec<(usize, usize, C64)>> = per_slot
            .into_iter()
            .enumerate()
            .map(|(p, s)| s.unwrap_or_else(|| (0..self.basis.factors[p].1).map(|i| (i, i, ONE)).collect()))
            .collect();
        let strides = self.basis.strides();
        // Cartesian product over the per-factor nonzeros.
        let mut acc: Vec<(usize, usize, C64)> = vec![(0, 0, coeff)];
        for (p, nz) in slots.iter().enumerate() {
            let s = strides[p];
            let mut next = Vec::with_capacity(acc.len() * nz.len());
            for &(r, c, v) in &acc {
                for &(i, j, w) in nz {
                    next.push((r + i * s, c + j * s, v * w));
                }
            }
            acc = next;
        }
        for (r, c, v) in acc {
            if v != ZERO {
                self.coo.push(r, c, v);
            }
        }
        Ok(self)
    }

    pub fn add_identity(&mut self, coeff: C64) -> &mut Self {
        if coeff != ZERO {
            for i in 0..self.basis.dim() {
                self.coo.push(i, i, coeff);
            }
        }
        self
    }

    pub fn add_diagonal(&mut self, diag: &[C64]) -> Result<&mut Self> {
        if diag.len() != self.basis.dim() {
            return Err(Error::DimensionMismatch {
                context: "diagonal",
                expected: self.basis.dim(),
                found: diag.len(),
            });
        }
        for (i, &v) in diag.iter().enumerate() {
            if v != ZERO {
                self.coo.push(i, i, v);
            }
        }
        Ok(self)
    }

    pub fn build(self) -> Operator {
        let csr = CsrMatrix::from(&self.coo);
        Operator::from_csr(self.basis, csr)
    }
}

impl Operator {
    pub fn from_csr(basis: BasisDescriptor, csr: CsrMatrix<C64>) -> Self {
        let storage = if basis.dim() < DENSE_LIMIT {
            Storage::Dense(csr_to_dense(&csr))
        } else {
            Storage::Sparse(csr)
        };
        Self {
            basis,
            storage,
            parity_symmetric: false,
        }
    }

    pub fn from_dense(basis: BasisDescriptor, m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != basis.dim() || m.ncols() != basis.dim() {
            return Err(Error::DimensionMismatch {
                context: "operator from dense matrix",
                expected: basis.dim(),
                found: m.nrows(),
            });
        }
        if basis.dim() < DENSE_LIMIT {
            Ok(Self {
                basis,
                storage: Storage::Dense(m),
                parity_symmetric: false,
            })
        } else {
            Ok(Self::from_csr(basis, dense_to_csr(&m)))
        }
    }

    pub fn identity(basis: BasisDescriptor) -> Self {
        let mut b = OperatorBuilder::new(basis);
        b.add_identity(ONE);
        b.build()
    }

    /// Declares that this operator commutes with the Z2 parity of its basis.
    pub fn with_parity_symmetry(mut self) -> Self {
        self.parity_symmetric = true;
        self
    }

    pub fn is_parity_symmetric(&self) -> bool {
        self.parity_symmetric
    }

    pub fn basis(&self) -> &BasisDescriptor {
        &self.basis
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        match &self.storage {
            Storage::Dense(m) => {
                let n = m.nrows();
                y.iter_mut().for_each(|v| *v = ZERO);
                // Column-major: accumulate column by column.
                for (j, &xj) in x.iter().enumerate().take(n) {
                    if xj == ZERO {
                        continue;
                    }
                    let col = m.column(j);
                    for (yi, &mij) in y.iter_mut().zip(col.iter()) {
                        *yi += mij * xj;
                    }
                }
            }
            Storage::Sparse(csr) => {
                let (offsets, cols, vals) = csr.csr_data();
                for (i, yi) in y.iter_mut().enumerate() {
                    let mut acc = ZERO;
                    for k in offsets[i]..offsets[i + 1] {
                        acc += vals[k] * x[cols[k]];
                    }
                    *yi = acc;
                }
            }
        }
    }

    pub fn apply_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.dim()];
        self.apply(x, &mut y);
        y
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            Storage::Sparse(csr) => csr_to_dense(csr),
        }
    }

    pub fn to_csr(&self) -> CsrMatrix<C64> {
        match &self.storage {
            Storage::Dense(m) => dense_to_csr(m),
            Storage::Sparse(csr) => csr.clone(),
        }
    }

    pub fn element(&self, row: usize, col: usize) -> C64 {
        match &self.storage {
            Storage::Dense(m) => m[(row, col)],
            Storage::Sparse(csr) => csr
                .get_entry(row, col)
                .map(|e| e.into_value())
                .unwrap_or(ZERO),
        }
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.dim()).map(|i| self.element(i, i)).collect()
    }

    pub fn trace(&self) -> C64 {
        self.diagonal().into_iter().sum()
    }

    pub fn adjoint(&self) -> Operator {
        let storage = match &self.storage {
            Storage::Dense(m) => Storage::Dense(m.adjoint()),
            Storage::Sparse(csr) => {
                let mut t = csr.transpose();
                t.values_mut().iter_mut().for_each(|v| *v = v.conj());
                Storage::Sparse(t)
            }
        };
        Operator {
            basis: self.basis.clone(),
            storage,
            parity_symmetric: self.parity_symmetric,
        }
    }

    fn check_same_basis(&self, other: &Operator, context: &'static str) -> Result<()> {
        if self.basis != other.basis {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    pub fn scaled(&self, c: C64) -> Operator {
        let storage = match &self.storage {
            Storage::Dense(m) => Storage::Dense(m * c),
            Storage::Sparse(csr) => {
                let mut s = csr.clone();
                s.values_mut().iter_mut().for_each(|v| *v *= c);
                Storage::Sparse(s)
            }
        };
        Operator {
            basis: self.basis.clone(),
            storage,
            parity_symmetric: self.parity_symmetric,
        }
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        self.check_same_basis(other, "operator sum")?;
        let storage = match (&self.storage, &other.storage) {
            (Storage::Dense(a), Storage::Dense(b)) => Storage::Dense(a + b),
            _ => Storage::Sparse(&self.to_csr() + &other.to_csr()),
        };
        Ok(Operator {
            basis: self.basis.clone(),
            storage,
            parity_symmetric: self.parity_symmetric && other.parity_symmetric,
        })
    }

    pub fn sub(&self, other: &Operator) -> Result<Operator> {
        self.add(&other.scaled(-ONE))
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &Operator) -> Result<Operator> {
        self.check_same_basis(other, "operator product")?;
        let storage = match (&self.storage, &other.storage) {
            (Storage::Dense(a), Storage::Dense(b)) => Storage::Dense(a * b),
            _ => Storage::Sparse(&self.to_csr() * &other.to_csr()),
        };
        Ok(Operator {
            basis: self.basis.clone(),
            storage,
            parity_symmetric: self.parity_symmetric && other.parity_symmetric,
        })
    }

    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        self.matmul(other)?.sub(&other.matmul(self)?)
    }

    /// Largest element modulus.
    pub fn max_abs(&self) -> f64 {
        match &self.storage {
            Storage::Dense(m) => m.iter().map(|v| v.norm()).fold(0.0, f64::max),
            Storage::Sparse(csr) => csr.values().iter().map(|v| v.norm()).fold(0.0, f64::max),
        }
    }

    /// `max |M - M^dag| / max |M|` (zero for the zero operator).
    pub fn hermiticity_defect(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let diff = match &self.storage {
            Storage::Dense(m) => (m - m.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max),
            Storage::Sparse(_) => self
                .sub(&self.adjoint())
                .map(|d| d.max_abs())
                .unwrap_or(f64::INFINITY),
        };
        diff / scale
    }

    pub fn expectation(&self, psi: &[C64]) -> C64 {
        let h = self.apply_vec(psi);
        psi.iter().zip(&h).map(|(a, b)| a.conj() * b).sum()
    }

    /// Compression onto the basis states listed in `indices`.
    pub fn restrict(&self, indices: &[usize]) -> Operator {
        let n = indices.len();
        let basis = BasisDescriptor::single(Factor::ModeB, n.max(1));
        match &self.storage {
            Storage::Dense(m) => {
                let sub = DMatrix::from_fn(n, n, |i, j| m[(indices[i], indices[j])]);
                Operator {
                    basis,
                    storage: Storage::Dense(sub),
                    parity_symmetric: false,
                }
            }
            Storage::Sparse(csr) => {
                let mut inverse = vec![usize::MAX; self.dim()];
                for (k, &i) in indices.iter().enumerate() {
                    inverse[i] = k;
                }
                let (offsets, cols, vals) = csr.csr_data();
                let mut coo = CooMatrix::new(n, n);
                for (r, &i) in indices.iter().enumerate() {
                    for k in offsets[i]..offsets[i + 1] {
                        let c = inverse[cols[k]];
                        if c != usize::MAX {
                            coo.push(r, c, vals[k]);
                        }
                    }
                }
                Operator::from_csr(basis, CsrMatrix::from(&coo))
            }
        }
    }
}

fn csr_to_dense(csr: &CsrMatrix<C64>) -> DMatrix<C64> {
    let mut m = DMatrix::from_element(csr.nrows(), csr.ncols(), ZERO);
    for (i, j, v) in csr.triplet_iter() {
        m[(i, j)] += *v;
    }
    m
}

fn dense_to_csr(m: &DMatrix<C64>) -> CsrMatrix<C64> {
    let mut coo = CooMatrix::new(m.nrows(), m.ncols());
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v != ZERO {
                coo.push(i, j, v);
            }
        }
    }
    CsrMatrix::from(&coo)
}

/// Tensors a single-factor operator with identities on the other factors.
pub fn embed(op: &DMatrix<C64>, slot: Factor, trunc: &Truncation) -> Result<Operator> {
    let basis = trunc.basis();
    let mut b = OperatorBuilder::new(basis);
    b.add_term(ONE, &[(slot, op)])?;
    Ok(b.build())
}

/// `exp{i pi [a^dag a + b^dag b + (1 + sigma_z)/2]}` as a diagonal operator.
pub fn parity_operator(trunc: &Truncation) -> Operator {
    let basis = trunc.basis();
    let diag: Vec<C64> = basis
        .parity_signs()
        .into_iter()
        .map(|s| C64::new(f64::from(s), 0.0))
        .collect();
    let mut b = OperatorBuilder::new(basis);
    b.add_diagonal(&diag).expect("diagonal length matches basis");
    b.build().with_parity_symmetry()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn max_abs(m: &DMatrix<C64>) -> f64 {
        m.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn lowering_matrix_elements() {
        assert_eq!(fock_lowering(0), DMatrix::from_element(1, 1, ZERO));
        let a = fock_lowering(2);
        assert_eq!(a[(0, 1)], ONE);
        assert!((a[(1, 2)].re - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(a[(1, 0)], ZERO);
        assert_eq!(a[(0, 2)], ZERO);
    }

    #[test]
    fn ladder_commutator_only_fails_in_top_level() {
        let n = 20;
        let a = fock_lowering(n);
        let comm = &a * a.adjoint() - a.adjoint() * &a;
        for i in 0..=n {
            for j in 0..=n {
                let expected = if i == j && i < n { 1.0 } else { 0.0 };
                if i == n && j == n {
                    assert!((comm[(i, j)].re + n as f64).abs() < 1e-12);
                } else {
                    assert!((comm[(i, j)] - C64::new(expected, 0.0)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn compressed_square_has_exact_top_level() {
        let x2 = fock_position_squared(5);
        for n in 0..=5 {
            assert!((x2[(n, n)].re - (2 * n + 1) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn pauli_algebra() {
        let z = pauli(Pauli::Z);
        assert_eq!(z[(0, 0)], ONE);
        assert_eq!(z[(1, 1)], -ONE);
        let x = pauli(Pauli::X);
        assert!(max_abs(&(&x * &x - DMatrix::identity(2, 2))) < 1e-15);
        let y = pauli(Pauli::Y);
        let plus = (&x + &y * C64::new(0.0, 1.0)) * C64::new(0.5, 0.0);
        assert!(max_abs(&(plus - pauli(Pauli::Plus))) < 1e-15);
        let minus = (&x - &y * C64::new(0.0, 1.0)) * C64::new(0.5, 0.0);
        assert!(max_abs(&(minus - pauli(Pauli::Minus))) < 1e-15);
    }

    #[test]
    fn embed_identity_and_trace() {
        let t = Truncation::full(3, 4);
        let id = embed(&DMatrix::identity(5, 5), Factor::ModeB, &t).unwrap();
        assert!(id.sub(&Operator::identity(t.basis())).unwrap().max_abs() < 1e-15);
        let sz = embed(&pauli(Pauli::Z), Factor::Spin, &t).unwrap();
        assert!(sz.trace().norm() < 1e-15);
    }

    #[test]
    fn embedded_number_operators_commute() {
        let t = Truncation::full(4, 6);
        let nb = embed(&fock_number(6), Factor::ModeB, &t).unwrap();
        let na = embed(&fock_number(4), Factor::ModeA, &t).unwrap();
        assert_eq!(nb.commutator(&na).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn embed_rejects_wrong_dimension() {
        let t = Truncation::effective(4);
        let err = embed(&fock_lowering(2), Factor::ModeB, &t).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }), "{err}");
        assert!(embed(&fock_lowering(2), Factor::ModeA, &t).is_err());
    }

    #[test]
    fn embed_places_factor_in_canonical_order() {
        let t = Truncation::full(1, 2);
        let basis = t.basis();
        let a = embed(&fock_lowering(1), Factor::ModeA, &t).unwrap();
        // a |n_a=1, n_b=2, down> = |0, 2, down>
        let from = basis.encode(&[1, 2, 1]);
        let to = basis.encode(&[0, 2, 1]);
        assert_eq!(a.element(to, from), ONE);
    }

    #[test]
    fn parity_examples() {
        let t = Truncation::full(3, 3);
        let basis = t.basis();
        let p = parity_operator(&t);
        // |down, 0_a, 0_b>
        let i = basis.encode(&[0, 0, 1]);
        assert_eq!(p.element(i, i), ONE);
        // |up, 0_a, 1_b>
        let i = basis.encode(&[0, 1, 0]);
        assert_eq!(p.element(i, i), ONE);
        let i = basis.encode(&[0, 1, 1]);
        assert_eq!(p.element(i, i), -ONE);
        let sq = p.matmul(&p).unwrap();
        assert_eq!(sq.sub(&Operator::identity(basis)).unwrap().max_abs(), 0.0);
        assert_eq!(p.hermiticity_defect(), 0.0);
    }

    #[test]
    fn storage_switches_at_dense_limit() {
        assert!(!parity_operator(&Truncation::effective(10)).is_sparse());
        assert!(parity_operator(&Truncation::full(10, 40)).is_sparse());
    }

    #[test]
    fn restrict_matches_dense_submatrix() {
        let t = Truncation::full(10, 30);
        let x = embed(&fock_position(30), Factor::ModeB, &t).unwrap();
        assert!(x.is_sparse());
        let idx: Vec<usize> = (0..t.dim()).step_by(3).collect();
        let r = x.restrict(&idx).to_dense();
        let d = x.to_dense();
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                assert_eq!(r[(a, b)], d[(i, j)]);
            }
        }
    }

    #[test]
    fn basis_rejects_bad_order() {
        assert!(BasisDescriptor::new(vec![(Factor::Spin, 2), (Factor::ModeB, 3)]).is_err());
        assert!(BasisDescriptor::new(vec![(Factor::ModeB, 3), (Factor::Spin, 2)]).is_ok());
    }

    proptest! {
        #[test]
        fn flattening_is_a_bijection(na in 0usize..6, nb in 0usize..9, with_a: bool) {
            let t = if with_a { Truncation::full(na, nb) } else { Truncation::effective(nb) };
            let basis = t.basis();
            prop_assert_eq!(basis.dim(), t.dim());
            let mut seen = vec![false; basis.dim()];
            for i in 0..basis.dim() {
                let local = basis.decode(i);
                prop_assert_eq!(basis.encode(&local), i);
                for (n, &(_, d)) in local.iter().zip(basis.factors()) {
                    prop_assert!(*n < d);
                }
                seen[i] = true;
            }
            prop_assert!(seen.into_iter().all(|s| s));
        }

        #[test]
        fn embed_preserves_operator_norm(cutoff in 1usize..8, nb in 1usize..5, re in -2.0f64..2.0, im in -2.0f64..2.0) {
            let local = fock_lowering(cutoff) * C64::new(re, im) + fock_number(cutoff);
            let t = Truncation::full(cutoff, nb);
            let op = embed(&local, Factor::ModeA, &t).unwrap();
            let s_local = local.singular_values().max();
            let s_full = op.to_dense().singular_values().max();
            prop_assert!((s_local - s_full).abs() <= 1e-10 * s_local.max(1.0));
        }
    }
}
