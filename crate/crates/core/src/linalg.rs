//! Dense complex linear algebra over small multi-qubit registers.
//!
//! Basis convention: row-major with the leftmost subsystem most significant,
//! so a ket string |b1 b2 ... bn> maps to the integer b1*2^(n-1) + ... + bn.
//! Subsystem indices in the public API are 1-based.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Max-norm tolerance accepted before an eigensolve; inputs within it are
/// symmetrized as (h + h^dag)/2.
pub const HERMITICITY_TOL: f64 = 1e-9;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl std::fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows.min(8) {
            write!(f, "  ")?;
            for c in 0..self.cols.min(8) {
                let z = self.get(r, c);
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries, rejecting NaN/Inf.
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "matrix dimensions must be >= 1, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, ONE);
        }
        m
    }

    /// Builds from a nested row slice; convenient for literals in tests.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map(|row| row.len()).unwrap_or(0);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::new(r, c, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == ZERO {
                    continue;
                }
                let row_off = k * other.cols;
                let out_off = i * other.cols;
                for j in 0..other.cols {
                    out.data[out_off + j] += a * other.data[row_off + j];
                }
            }
        }
        out
    }

    pub fn add(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn sub(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn scale(&self, s: C64) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c).conj());
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        assert!(self.is_square());
        (0..self.rows).map(|i| self.get(i, i)).sum()
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        let mut out = vec![ZERO; self.rows];
        for (i, o) in out.iter_mut().enumerate() {
            let off = i * self.cols;
            let mut acc = ZERO;
            for (j, x) in v.iter().enumerate() {
                acc += self.data[off + j] * x;
            }
            *o = acc;
        }
        out
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Max-norm deviation from Hermiticity, max |h[i][j] - conj(h[j][i])|.
    pub fn hermitian_deviation(&self) -> f64 {
        assert!(self.is_square());
        let mut dev: f64 = 0.0;
        for r in 0..self.rows {
            for c in r..self.cols {
                dev = dev.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        dev
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let prod = self.dagger().matmul(self);
        prod.max_abs_diff(&ComplexMatrix::identity(self.rows)) < tol
    }
}

/// (m + m^dag)/2; exact Hermitian part of a square matrix.
pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    assert!(m.is_square());
    let n = m.rows();
    let mut out = ComplexMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            out.set(r, c, (m.get(r, c) + m.get(c, r).conj()) * 0.5);
        }
    }
    out
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::new(2, 2, vec![ZERO, ONE, ONE, ZERO]).unwrap()
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::new(2, 2, vec![ZERO, -I, I, ZERO]).unwrap()
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::new(2, 2, vec![ONE, ZERO, ZERO, -ONE]).unwrap()
}

/// Ordered list of subsystem labels and dimensions; fixes the index semantics
/// of every embed, SWAP and partial trace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemLayout {
    subsystems: Vec<Subsystem>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subsystem {
    pub label: String,
    pub dim: usize,
}

impl SystemLayout {
    pub fn new<L: Into<String>>(subsystems: Vec<(L, usize)>) -> Result<Self> {
        let subsystems: Vec<Subsystem> = subsystems
            .into_iter()
            .map(|(label, dim)| Subsystem {
                label: label.into(),
                dim,
            })
            .collect();
        if subsystems.is_empty() {
            return Err(Error::InvalidState(
                "layout needs at least one subsystem".into(),
            ));
        }
        for s in &subsystems {
            if s.dim < 2 {
                return Err(Error::DimensionMismatch(format!(
                    "subsystem {} has dim {}, need >= 2",
                    s.label, s.dim
                )));
            }
        }
        for (i, s) in subsystems.iter().enumerate() {
            if subsystems[i + 1..].iter().any(|t| t.label == s.label) {
                return Err(Error::InvalidState(format!("duplicate label {}", s.label)));
            }
        }
        Ok(Self { subsystems })
    }

    /// n qubits labeled q1..qn.
    pub fn qubits(n: usize) -> Self {
        Self::new((1..=n).map(|i| (format!("q{i}"), 2)).collect()).unwrap()
    }

    /// Physical register (A, B1, .., BM) for M receivers.
    pub fn physical(m: usize) -> Self {
        let mut subsystems = vec![("A".to_string(), 2)];
        subsystems.extend((1..=m).map(|i| (format!("B{i}"), 2)));
        Self::new(subsystems).unwrap()
    }

    /// Protocol-ordered lab register (B1, A, B2, C2, .., BM, CM): 2M qubits,
    /// receiver i occupying slots (2i-1, 2i), the routed slot at index 2 and
    /// auxiliary |0> slots at 4, 6, ...
    pub fn protocol(m: usize) -> Self {
        assert!(m >= 2, "protocol layout needs at least two receivers");
        let mut subsystems = vec![("B1".to_string(), 2), ("A".to_string(), 2)];
        for i in 2..=m {
            subsystems.push((format!("B{i}"), 2));
            subsystems.push((format!("C{i}"), 2));
        }
        Self::new(subsystems).unwrap()
    }

    pub fn num_subsystems(&self) -> usize {
        self.subsystems.len()
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    pub fn total_dim(&self) -> usize {
        self.subsystems.iter().map(|s| s.dim).product()
    }

    /// Dimension of the 1-based subsystem `index`.
    pub fn dim_of(&self, index: usize) -> Result<usize> {
        self.check_index(index)?;
        Ok(self.subsystems[index - 1].dim)
    }

    pub fn labels(&self) -> Vec<String> {
        self.subsystems.iter().map(|s| s.label.clone()).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.subsystems.iter().map(|s| s.dim).collect()
    }

    /// Appends a subsystem, e.g. the routing control.
    pub fn with_appended(&self, label: impl Into<String>, dim: usize) -> Result<Self> {
        let mut subsystems: Vec<(String, usize)> = self
            .subsystems
            .iter()
            .map(|s| (s.label.clone(), s.dim))
            .collect();
        subsystems.push((label.into(), dim));
        Self::new(subsystems)
    }

    /// Layout restricted to the kept 1-based subsystems (in layout order).
    pub fn restricted(&self, keep: &[usize]) -> Result<Self> {
        let keep = self.normalize_indices(keep)?;
        Self::new(
            keep.iter()
                .map(|&k| {
                    let s = &self.subsystems[k];
                    (s.label.clone(), s.dim)
                })
                .collect(),
        )
    }

    fn check_index(&self, index: usize) -> Result<()> {
        if index == 0 || index > self.subsystems.len() {
            return Err(Error::IndexOutOfRange(format!(
                "subsystem {index} of {}",
                self.subsystems.len()
            )));
        }
        Ok(())
    }

    /// Validates 1-based indices, converts to 0-based, sorts and dedups.
    fn normalize_indices(&self, indices: &[usize]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(indices.len());
        for &i in indices {
            self.check_index(i)?;
            out.push(i - 1);
        }
        out.sort_unstable();
        out.dedup();
        if out.len() != indices.len() {
            return Err(Error::IndexOutOfRange("repeated subsystem index".into()));
        }
        Ok(out)
    }

    /// Row-major strides: stride[k] = product of dims right of k.
    fn strides(&self) -> Vec<usize> {
        let n = self.subsystems.len();
        let mut strides = vec![1usize; n];
        for k in (0..n.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.subsystems[k + 1].dim;
        }
        strides
    }
}

/// Kronecker product; the left factor is the more significant register.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(a.rows() * b.rows(), a.cols() * b.cols());
    for ia in 0..a.rows() {
        for ja in 0..a.cols() {
            let va = a.get(ia, ja);
            if va == ZERO {
                continue;
            }
            for ib in 0..b.rows() {
                for jb in 0..b.cols() {
                    let vb = b.get(ib, jb);
                    if vb != ZERO {
                        out.set(ia * b.rows() + ib, ja * b.cols() + jb, va * vb);
                    }
                }
            }
        }
    }
    out
}

/// Kronecker product of state vectors.
pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x * y);
        }
    }
    out
}

/// Embeds `op` so it acts on the 1-based `targets` (in the given order) and as
/// identity elsewhere.
pub fn embed_operator(
    op: &ComplexMatrix,
    layout: &SystemLayout,
    targets: &[usize],
) -> Result<ComplexMatrix> {
    if targets.is_empty() {
        return Err(Error::IndexOutOfRange("empty target list".into()));
    }
    let mut seen = Vec::new();
    for &t in targets {
        layout.check_index(t)?;
        if seen.contains(&t) {
            return Err(Error::IndexOutOfRange(format!("repeated target {t}")));
        }
        seen.push(t);
    }
    let target0: Vec<usize> = targets.iter().map(|&t| t - 1).collect();
    let target_dims: Vec<usize> = target0.iter().map(|&t| layout.subsystems[t].dim).collect();
    let op_dim: usize = target_dims.iter().product();
    if !op.is_square() || op.rows() != op_dim {
        return Err(Error::DimensionMismatch(format!(
            "operator is {}x{} but targets span dimension {op_dim}",
            op.rows(),
            op.cols()
        )));
    }

    let strides = layout.strides();
    let total = layout.total_dim();
    let n = layout.num_subsystems();

    // Offsets contributed by every joint target digit assignment.
    let mut target_offsets = vec![0usize; op_dim];
    for (flat, off) in target_offsets.iter_mut().enumerate() {
        let mut rem = flat;
        let mut acc = 0usize;
        for k in (0..target0.len()).rev() {
            let digit = rem % target_dims[k];
            rem /= target_dims[k];
            acc += digit * strides[target0[k]];
        }
        *off = acc;
    }

    // Enumerate the non-target digits.
    let rest: Vec<usize> = (0..n).filter(|k| !target0.contains(k)).collect();
    let rest_total: usize = rest.iter().map(|&k| layout.subsystems[k].dim).product();

    let mut out = ComplexMatrix::zeros(total, total);
    for rest_flat in 0..rest_total {
        let mut rem = rest_flat;
        let mut base = 0usize;
        for &k in rest.iter().rev() {
            let d = layout.subsystems[k].dim;
            base += (rem % d) * strides[k];
            rem /= d;
        }
        for (r, r_off) in target_offsets.iter().enumerate() {
            for (c, c_off) in target_offsets.iter().enumerate() {
                let v = op.get(r, c);
                if v != ZERO {
                    out.set(base + r_off, base + c_off, v);
                }
            }
        }
    }
    Ok(out)
}

/// Unitary permuting subsystems i and j (1-based); i = j yields the identity.
pub fn swap_operator(layout: &SystemLayout, i: usize, j: usize) -> Result<ComplexMatrix> {
    layout.check_index(i)?;
    layout.check_index(j)?;
    let total = layout.total_dim();
    if i == j {
        return Ok(ComplexMatrix::identity(total));
    }
    let (di, dj) = (layout.subsystems[i - 1].dim, layout.subsystems[j - 1].dim);
    if di != dj {
        return Err(Error::DimensionMismatch(format!(
            "cannot swap subsystems of dims {di} and {dj}"
        )));
    }
    let strides = layout.strides();
    let (si, sj) = (strides[i - 1], strides[j - 1]);
    let mut out = ComplexMatrix::zeros(total, total);
    for idx in 0..total {
        let a = (idx / si) % di;
        let b = (idx / sj) % dj;
        let new = idx - a * si - b * sj + b * si + a * sj;
        out.set(new, idx, ONE);
    }
    Ok(out)
}

/// Partial trace keeping the 1-based subsystems in `keep` (layout order).
pub fn partial_trace(
    rho: &ComplexMatrix,
    layout: &SystemLayout,
    keep: &[usize],
) -> Result<ComplexMatrix> {
    if keep.is_empty() {
        return Err(Error::IndexOutOfRange("empty keep set".into()));
    }
    let keep0 = layout.normalize_indices(keep)?;
    let total = layout.total_dim();
    if !rho.is_square() || rho.rows() != total {
        return Err(Error::DimensionMismatch(format!(
            "density operator is {}x{} but layout dimension is {total}",
            rho.rows(),
            rho.cols()
        )));
    }
    let n = layout.num_subsystems();
    let strides = layout.strides();
    let traced: Vec<usize> = (0..n).filter(|k| !keep0.contains(k)).collect();
    if traced.is_empty() {
        return Ok(rho.clone());
    }

    let keep_dims: Vec<usize> = keep0.iter().map(|&k| layout.subsystems[k].dim).collect();
    let out_dim: usize = keep_dims.iter().product();
    let traced_total: usize = traced.iter().map(|&k| layout.subsystems[k].dim).product();

    let offset_of = |flat: usize, subsys: &[usize], dims_of: &dyn Fn(usize) -> usize| -> usize {
        let mut rem = flat;
        let mut acc = 0usize;
        for &k in subsys.iter().rev() {
            let d = dims_of(k);
            acc += (rem % d) * strides[k];
            rem /= d;
        }
        acc
    };
    let layout_dim = |k: usize| layout.subsystems[k].dim;

    let mut keep_offsets = vec![0usize; out_dim];
    for (flat, off) in keep_offsets.iter_mut().enumerate() {
        *off = offset_of(flat, &keep0, &layout_dim);
    }
    let mut traced_offsets = vec![0usize; traced_total];
    for (flat, off) in traced_offsets.iter_mut().enumerate() {
        *off = offset_of(flat, &traced, &layout_dim);
    }

    let mut out = ComplexMatrix::zeros(out_dim, out_dim);
    for (r, r_off) in keep_offsets.iter().enumerate() {
        for (c, c_off) in keep_offsets.iter().enumerate() {
            let mut acc = ZERO;
            for t_off in &traced_offsets {
                acc += rho.get(r_off + t_off, c_off + t_off);
            }
            out.set(r, c, acc);
        }
    }
    Ok(out)
}

/// Real eigenvalues of a Hermitian matrix, sorted descending.
///
/// Inputs within [`HERMITICITY_TOL`] of Hermitian (max-norm) are symmetrized
/// first; anything further off is rejected.
pub fn hermitian_spectrum(h: &ComplexMatrix) -> Result<Vec<f64>> {
    let (mut values, _) = jacobi_eigen(h, false)?;
    values.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(values)
}

/// Eigenvalues (descending) and matching orthonormal eigenvector columns.
pub fn hermitian_eigen(h: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let (values, vectors) = jacobi_eigen(h, true)?;
    let vectors = vectors.expect("eigenvectors requested");
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap());
    let sorted_values: Vec<f64> = order.iter().map(|&k| values[k]).collect();
    let mut sorted_vectors = ComplexMatrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for r in 0..n {
            sorted_vectors.set(r, new_col, vectors.get(r, old_col));
        }
    }
    Ok((sorted_values, sorted_vectors))
}

/// Cyclic Jacobi diagonalization of a Hermitian matrix.
fn jacobi_eigen(
    h: &ComplexMatrix,
    want_vectors: bool,
) -> Result<(Vec<f64>, Option<ComplexMatrix>)> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch(
            "eigensolve needs a square matrix".into(),
        ));
    }
    let deviation = h.hermitian_deviation();
    if deviation > HERMITICITY_TOL {
        return Err(Error::NotHermitian {
            deviation,
            tolerance: HERMITICITY_TOL,
        });
    }
    let n = h.rows();
    // Symmetrize (h + h^dag)/2 to absorb rounding asymmetry.
    let mut a = vec![ZERO; n * n];
    for r in 0..n {
        for c in 0..n {
            a[r * n + c] = (h.get(r, c) + h.get(c, r).conj()) * 0.5;
        }
    }
    let mut v = if want_vectors {
        let mut ident = vec![ZERO; n * n];
        for i in 0..n {
            ident[i * n + i] = ONE;
        }
        Some(ident)
    } else {
        None
    };

    let scale = (0..n).map(|i| a[i * n + i].re.abs()).fold(1.0f64, f64::max);
    let stop = 1e-14 * scale;

    for _sweep in 0..64 {
        let mut off_max: f64 = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off_max = off_max.max(a[p * n + q].norm());
            }
        }
        if off_max <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let mag = apq.norm();
                if mag <= stop * 1e-2 {
                    continue;
                }
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                let delta = (app - aqq) * 0.5;
                let r = (delta * delta + mag * mag).sqrt();
                // Column (c, w) is the unit eigenvector of the 2x2 block for
                // the larger eigenvalue; delta + r >= |apq| keeps it stable.
                let norm = ((delta + r) * (delta + r) + mag * mag).sqrt();
                let c = (delta + r) / norm;
                let w = apq.conj() / norm;

                // B = A R on columns p, q.
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = akp * c + akq * w;
                    a[k * n + q] = -akp * w.conj() + akq * c;
                }
                // A' = R^dag B on rows p, q.
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = apk * c + aqk * w.conj();
                    a[q * n + k] = -apk * w + aqk * c;
                }
                a[p * n + q] = ZERO;
                a[q * n + p] = ZERO;
                a[p * n + p] = C64::new(a[p * n + p].re, 0.0);
                a[q * n + q] = C64::new(a[q * n + q].re, 0.0);

                if let Some(vm) = v.as_mut() {
                    for k in 0..n {
                        let vkp = vm[k * n + p];
                        let vkq = vm[k * n + q];
                        vm[k * n + p] = vkp * c + vkq * w;
                        vm[k * n + q] = -vkp * w.conj() + vkq * c;
                    }
                }
            }
        }
    }

    let values: Vec<f64> = (0..n).map(|i| a[i * n + i].re).collect();
    let vectors = v.map(|data| ComplexMatrix {
        rows: n,
        cols: n,
        data,
    });
    Ok((values, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::SplitMix64;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_hermitian(n: usize, rng: &mut SplitMix64) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(n, n);
        for r in 0..n {
            m.set(r, r, c(rng.range(-1.0, 1.0), 0.0));
            for col in (r + 1)..n {
                let z = c(rng.range(-1.0, 1.0), rng.range(-1.0, 1.0));
                m.set(r, col, z);
                m.set(col, r, z.conj());
            }
        }
        m
    }

    #[test]
    fn kron_of_identities_is_identity() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&i2, &i2), ComplexMatrix::identity(4));
    }

    #[test]
    fn kron_xx_flips_both_qubits() {
        let xx = kron(&pauli_x(), &pauli_x());
        let mut v = vec![ZERO; 4];
        v[0] = ONE; // |00>
        let out = xx.apply(&v);
        assert_eq!(out[3], ONE); // |11>
        assert!(out[0].norm() + out[1].norm() + out[2].norm() < 1e-15);
    }

    #[test]
    fn kron_projector_z_matches_hand_expansion() {
        // |0><0| (x) Z expanded by hand: diag(1, -1, 0, 0).
        let p0 = ComplexMatrix::new(2, 2, vec![ONE, ZERO, ZERO, ZERO]).unwrap();
        let got = kron(&p0, &pauli_z());
        let want = ComplexMatrix::from_rows(&[
            vec![ONE, ZERO, ZERO, ZERO],
            vec![ZERO, -ONE, ZERO, ZERO],
            vec![ZERO, ZERO, ZERO, ZERO],
            vec![ZERO, ZERO, ZERO, ZERO],
        ])
        .unwrap();
        assert!(got.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn embed_x_on_second_qubit() {
        let layout = SystemLayout::qubits(2);
        let op = embed_operator(&pauli_x(), &layout, &[2]).unwrap();
        let mut v = vec![ZERO; 4];
        v[0] = ONE; // |00>
        let out = op.apply(&v);
        assert_eq!(out[1], ONE); // |01>
    }

    #[test]
    fn embed_identity_is_identity() {
        let layout = SystemLayout::qubits(3);
        for slot in 1..=3 {
            let op = embed_operator(&ComplexMatrix::identity(2), &layout, &[slot]).unwrap();
            assert!(op.max_abs_diff(&ComplexMatrix::identity(8)) < 1e-15);
        }
    }

    #[test]
    fn embed_z_sign_on_first_qubit() {
        // Z on slot 1 of |100>: the leftmost qubit is most significant, so
        // |100> is index 4 and picks up a minus sign.
        let layout = SystemLayout::qubits(3);
        let op = embed_operator(&pauli_z(), &layout, &[1]).unwrap();
        let mut v = vec![ZERO; 8];
        v[4] = ONE;
        let out = op.apply(&v);
        assert_eq!(out[4], -ONE);
    }

    #[test]
    fn embed_rejects_bad_dims_and_indices() {
        let layout = SystemLayout::qubits(2);
        assert!(embed_operator(&ComplexMatrix::identity(4), &layout, &[1]).is_err());
        assert!(embed_operator(&pauli_x(), &layout, &[3]).is_err());
    }

    #[test]
    fn swap_two_qubits() {
        let layout = SystemLayout::qubits(2);
        let s = swap_operator(&layout, 1, 2).unwrap();
        let mut v = vec![ZERO; 4];
        v[1] = ONE; // |01>
        let out = s.apply(&v);
        assert_eq!(out[2], ONE); // |10>
    }

    #[test]
    fn swap_indices_two_four_permutes_bitstring() {
        // |1110> -> |1011| by swapping bit positions 2 and 4 by hand.
        let layout = SystemLayout::qubits(4);
        let s = swap_operator(&layout, 2, 4).unwrap();
        let mut v = vec![ZERO; 16];
        v[0b1110] = ONE;
        let out = s.apply(&v);
        assert_eq!(out[0b1011], ONE);
    }

    #[test]
    fn swap_same_index_is_identity() {
        let layout = SystemLayout::qubits(3);
        let s = swap_operator(&layout, 2, 2).unwrap();
        assert!(s.max_abs_diff(&ComplexMatrix::identity(8)) < 1e-15);
    }

    #[test]
    fn swap_squares_to_identity_on_six_qubits() {
        let layout = SystemLayout::qubits(6);
        let id = ComplexMatrix::identity(64);
        for i in 1..=6 {
            for j in (i + 1)..=6 {
                let s = swap_operator(&layout, i, j).unwrap();
                assert!(s.matmul(&s).max_abs_diff(&id) < 1e-12);
                assert!(s.hermitian_deviation() < 1e-15);
            }
        }
    }

    #[test]
    fn partial_trace_of_bell_state_is_maximally_mixed() {
        let layout = SystemLayout::qubits(2);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = [c(s, 0.0), ZERO, ZERO, c(s, 0.0)];
        let mut rho = ComplexMatrix::zeros(4, 4);
        for r in 0..4 {
            for col in 0..4 {
                rho.set(r, col, bell[r] * bell[col].conj());
            }
        }
        let reduced = partial_trace(&rho, &layout, &[1]).unwrap();
        assert!(reduced.max_abs_diff(&ComplexMatrix::identity(2).scale(c(0.5, 0.0))) < 1e-12);
    }

    #[test]
    fn partial_trace_factorizes_products() {
        let mut rng = SplitMix64::new(71);
        for _ in 0..20 {
            let a = random_density(2, &mut rng);
            let b = random_density(2, &mut rng);
            let layout = SystemLayout::qubits(2);
            let joint = kron(&a, &b);
            let ra = partial_trace(&joint, &layout, &[1]).unwrap();
            assert!(ra.max_abs_diff(&a) < 1e-12);
        }
    }

    #[test]
    fn partial_trace_block_sum_by_hand() {
        // tr_1 of (|00><00| + |11><11|)/2 = I/2.
        let layout = SystemLayout::qubits(2);
        let mut rho = ComplexMatrix::zeros(4, 4);
        rho.set(0, 0, c(0.5, 0.0));
        rho.set(3, 3, c(0.5, 0.0));
        let reduced = partial_trace(&rho, &layout, &[2]).unwrap();
        assert!(reduced.max_abs_diff(&ComplexMatrix::identity(2).scale(c(0.5, 0.0))) < 1e-15);
    }

    #[test]
    fn partial_trace_composes() {
        let mut rng = SplitMix64::new(13);
        let layout = SystemLayout::qubits(3);
        let rho = random_density(8, &mut rng);
        let direct = partial_trace(&rho, &layout, &[1]).unwrap();
        let step1 = partial_trace(&rho, &layout, &[1, 3]).unwrap();
        let sub = layout.restricted(&[1, 3]).unwrap();
        let step2 = partial_trace(&step1, &sub, &[1]).unwrap();
        assert!(direct.max_abs_diff(&step2) < 1e-12);
    }

    #[test]
    fn partial_trace_rejects_empty_keep() {
        let layout = SystemLayout::qubits(2);
        let rho = ComplexMatrix::identity(4).scale(c(0.25, 0.0));
        assert!(partial_trace(&rho, &layout, &[]).is_err());
    }

    fn random_density(n: usize, rng: &mut SplitMix64) -> ComplexMatrix {
        let g = random_hermitian(n, rng);
        let sq = g.matmul(&g.dagger());
        let tr = sq.trace().re;
        sq.scale(c(1.0 / tr, 0.0))
    }

    #[test]
    fn spectrum_of_diagonal_matrix() {
        let m = ComplexMatrix::from_rows(&[vec![c(0.75, 0.0), ZERO], vec![ZERO, c(0.25, 0.0)]])
            .unwrap();
        let s = hermitian_spectrum(&m).unwrap();
        assert!((s[0] - 0.75).abs() < 1e-14);
        assert!((s[1] - 0.25).abs() < 1e-14);
    }

    #[test]
    fn spectrum_of_pauli_x() {
        let s = hermitian_spectrum(&pauli_x()).unwrap();
        assert!((s[0] - 1.0).abs() < 1e-13);
        assert!((s[1] + 1.0).abs() < 1e-13);
    }

    #[test]
    fn spectrum_of_projector_mixture_matches_characteristic_polynomial() {
        // (|0><0| + |+><+|)/2. The 2x2 characteristic polynomial gives
        // eigenvalues (1 +- 1/sqrt(2))/2 = cos^2(pi/8), sin^2(pi/8).
        let half = c(0.5, 0.0);
        let m = ComplexMatrix::from_rows(&[
            vec![c(0.75, 0.0), c(0.25, 0.0)],
            vec![c(0.25, 0.0), c(0.25, 0.0)],
        ])
        .unwrap();
        let s = hermitian_spectrum(&m).unwrap();
        let trace = 1.0f64;
        let det = 0.75 * 0.25 - 0.25 * 0.25;
        let disc = (trace * trace - 4.0 * det).sqrt();
        let lo = (trace - disc) / 2.0;
        let hi = (trace + disc) / 2.0;
        assert!((s[0] - hi).abs() < 1e-13);
        assert!((s[1] - lo).abs() < 1e-13);
        let c8 = (std::f64::consts::PI / 8.0).cos().powi(2);
        assert!((s[0] - c8).abs() < 1e-12);
        let _ = half;
    }

    #[test]
    fn spectrum_sums_to_trace_and_is_conjugation_invariant() {
        let mut rng = SplitMix64::new(99);
        for n in [2usize, 3, 5, 8, 16] {
            let h = random_hermitian(n, &mut rng);
            let s = hermitian_spectrum(&h).unwrap();
            let sum: f64 = s.iter().sum();
            assert!(
                (sum - h.trace().re).abs() < 1e-10,
                "trace mismatch at n={n}"
            );
            let frob: f64 = s.iter().map(|x| x * x).sum();
            let frob_direct = h.matmul(&h).trace().re;
            assert!((frob - frob_direct).abs() < 1e-9 * (1.0 + frob_direct.abs()));
        }
    }

    #[test]
    fn eigenvectors_reconstruct_matrix() {
        let mut rng = SplitMix64::new(5);
        let h = random_hermitian(6, &mut rng);
        let (values, vectors) = hermitian_eigen(&h).unwrap();
        let mut d = ComplexMatrix::zeros(6, 6);
        for (i, &lam) in values.iter().enumerate() {
            d.set(i, i, c(lam, 0.0));
        }
        let rebuilt = vectors.matmul(&d).matmul(&vectors.dagger());
        assert!(rebuilt.max_abs_diff(&h) < 1e-10);
        assert!(vectors.is_unitary(1e-10));
    }

    #[test]
    fn rejects_non_hermitian_input() {
        let m = ComplexMatrix::from_rows(&[vec![ONE, ONE], vec![ZERO, ONE]]).unwrap();
        assert!(matches!(
            hermitian_spectrum(&m),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn matrix_constructor_rejects_nan() {
        assert!(ComplexMatrix::new(1, 1, vec![c(f64::NAN, 0.0)]).is_err());
    }
}
