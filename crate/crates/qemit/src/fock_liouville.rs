// Copyright 2026 QubitOS Contributors
// SPDX-License-Identifier: Apache-2.0

//! Core state/operator algebra in the Fock–Liouville (vectorized) picture.
//!
//! Row-stacking convention: vec(ρ)[i·d + j] = ρ[i,j], so the two-sided map
//! ρ ↦ AρB has the matrix representation A ⊗ Bᵀ.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::{Error, Result};

pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Tensor-product structure of the Hilbert space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpaceDescriptor {
    subsystem_dims: Vec<usize>,
    labels: Vec<String>,
}

impl SpaceDescriptor {
    pub fn new(subsystem_dims: Vec<usize>, labels: Vec<String>) -> Result<Self> {
        if subsystem_dims.is_empty() || subsystem_dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidArgument(
                "subsystem dimensions must be positive".into(),
            ));
        }
        if labels.len() != subsystem_dims.len() {
            return Err(Error::InvalidArgument(
                "labels and subsystem_dims must have equal length".into(),
            ));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::InvalidArgument(format!("duplicate label `{l}`")));
            }
        }
        Ok(Self { subsystem_dims, labels })
    }

    /// Single-subsystem space.
    pub fn single(dim: usize, label: &str) -> Self {
        Self::new(vec![dim], vec![label.to_string()]).expect("valid single space")
    }

    /// Total Hilbert dimension d = ∏ dims.
    pub fn dim(&self) -> usize {
        self.subsystem_dims.iter().product()
    }

    pub fn subsystem_dims(&self) -> &[usize] {
        &self.subsystem_dims
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Tensor product of two spaces.
    pub fn tensor(&self, other: &SpaceDescriptor) -> Result<SpaceDescriptor> {
        let mut dims = self.subsystem_dims.clone();
        dims.extend_from_slice(&other.subsystem_dims);
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        SpaceDescriptor::new(dims, labels)
    }

    fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown subsystem label `{label}`")))
    }
}

/// Dense complex operator on a descriptor-tagged Hilbert space.
#[derive(Debug, Clone)]
pub struct Operator {
    pub space: SpaceDescriptor,
    pub matrix: Array2<C64>,
}

impl Operator {
    pub fn new(space: SpaceDescriptor, matrix: Array2<C64>) -> Result<Self> {
        let d = space.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "operator matrix is {}×{}, space dimension is {d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { space, matrix })
    }

    pub fn identity(space: &SpaceDescriptor) -> Self {
        Self {
            space: space.clone(),
            matrix: Array2::eye(space.dim()),
        }
    }

    pub fn dagger(&self) -> Self {
        Self {
            space: self.space.clone(),
            matrix: self.matrix.t().mapv(|z| z.conj()),
        }
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let m = &self.matrix;
        let d = m.nrows();
        let scale = m.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
        for i in 0..d {
            for j in 0..d {
                if (m[[i, j]] - m[[j, i]].conj()).norm() > tol * scale {
                    return false;
                }
            }
        }
        true
    }

    /// Matrix product, checking space compatibility.
    pub fn matmul(&self, other: &Operator) -> Result<Operator> {
        check_same_space(&self.space, &other.space)?;
        Operator::new(self.space.clone(), self.matrix.dot(&other.matrix))
    }

    pub fn scale(&self, s: C64) -> Operator {
        Operator {
            space: self.space.clone(),
            matrix: self.matrix.mapv(|z| z * s),
        }
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        check_same_space(&self.space, &other.space)?;
        Operator::new(self.space.clone(), &self.matrix + &other.matrix)
    }
}

/// Density state; `normalized = false` marks conditional/unnormalized states.
#[derive(Debug, Clone)]
pub struct DensityState {
    pub space: SpaceDescriptor,
    pub matrix: Array2<C64>,
    pub normalized: bool,
}

impl DensityState {
    /// Construct, symmetrizing (ρ+ρ†)/2 when within the Hermiticity tolerance.
    pub fn new(space: SpaceDescriptor, matrix: Array2<C64>, normalized: bool) -> Result<Self> {
        let d = space.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "density matrix is {}×{}, space dimension is {d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let scale = matrix.iter().map(|z| z.norm()).fold(f64::MIN_POSITIVE, f64::max);
        let herm_err = (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .map(|(i, j)| (matrix[[i, j]] - matrix[[j, i]].conj()).norm())
            .fold(0.0_f64, f64::max);
        if herm_err > 1e-10 * scale.max(1e-300) && herm_err > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "density matrix not Hermitian within tolerance (max |ρ−ρ†| = {herm_err:.3e})"
            )));
        }
        // (ρ+ρ†)/2
        let sym = (&matrix + &matrix.t().mapv(|z| z.conj())).mapv(|z| z * 0.5);
        let tr = trace(&sym).re;
        if normalized && (tr - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "normalized state has trace {tr}"
            )));
        }
        Ok(Self { space, matrix: sym, normalized })
    }

    /// Pure state |ψ⟩⟨ψ| from an amplitude vector (normalized internally).
    pub fn pure(space: SpaceDescriptor, psi: &Array1<C64>) -> Result<Self> {
        let d = space.dim();
        if psi.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "state vector has length {}, space dimension is {d}",
                psi.len()
            )));
        }
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidArgument("zero state vector".into()));
        }
        let mut m = Array2::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                m[[i, j]] = psi[i] * psi[j].conj() / (norm * norm);
            }
        }
        DensityState::new(space, m, true)
    }

    /// Basis projector |k⟩⟨k|.
    pub fn basis(space: SpaceDescriptor, k: usize) -> Result<Self> {
        let d = space.dim();
        if k >= d {
            return Err(Error::InvalidArgument(format!("basis index {k} ≥ dim {d}")));
        }
        let mut m = Array2::zeros((d, d));
        m[[k, k]] = ONE;
        DensityState::new(space, m, true)
    }

    pub fn trace(&self) -> C64 {
        trace(&self.matrix)
    }

    /// ⟨A⟩ = Tr[Aρ].
    pub fn expect(&self, op: &Operator) -> C64 {
        trace(&op.matrix.dot(&self.matrix))
    }
}

/// d²×d² matrix acting on vectorized density states.
#[derive(Debug, Clone)]
pub struct SuperOperator {
    pub space: SpaceDescriptor,
    pub matrix: Array2<C64>,
}

impl SuperOperator {
    pub fn new(space: SpaceDescriptor, matrix: Array2<C64>) -> Result<Self> {
        let d2 = space.dim() * space.dim();
        if matrix.nrows() != d2 || matrix.ncols() != d2 {
            return Err(Error::DimensionMismatch(format!(
                "superoperator matrix is {}×{}, expected {d2}×{d2}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { space, matrix })
    }

    pub fn zero(space: &SpaceDescriptor) -> Self {
        let d2 = space.dim() * space.dim();
        Self { space: space.clone(), matrix: Array2::zeros((d2, d2)) }
    }

    pub fn identity(space: &SpaceDescriptor) -> Self {
        let d2 = space.dim() * space.dim();
        Self { space: space.clone(), matrix: Array2::eye(d2) }
    }

    pub fn add(&self, other: &SuperOperator) -> Result<SuperOperator> {
        check_same_space(&self.space, &other.space)?;
        SuperOperator::new(self.space.clone(), &self.matrix + &other.matrix)
    }

    pub fn sub(&self, other: &SuperOperator) -> Result<SuperOperator> {
        check_same_space(&self.space, &other.space)?;
        SuperOperator::new(self.space.clone(), &self.matrix - &other.matrix)
    }

    pub fn scale(&self, s: C64) -> SuperOperator {
        SuperOperator {
            space: self.space.clone(),
            matrix: self.matrix.mapv(|z| z * s),
        }
    }

    /// Composition (self ∘ other).
    pub fn compose(&self, other: &SuperOperator) -> Result<SuperOperator> {
        check_same_space(&self.space, &other.space)?;
        SuperOperator::new(self.space.clone(), self.matrix.dot(&other.matrix))
    }

    /// Apply to a density state.
    pub fn apply(&self, rho: &DensityState) -> Result<DensityState> {
        check_same_space(&self.space, &rho.space)?;
        let v = self.matrix.dot(&vectorize(rho));
        devectorize_raw(&v, &self.space)
    }

    /// Apply to a raw vectorized state.
    pub fn apply_vec(&self, v: &Array1<C64>) -> Array1<C64> {
        self.matrix.dot(v)
    }
}

pub(crate) fn check_same_space(a: &SpaceDescriptor, b: &SpaceDescriptor) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch(format!(
            "space mismatch: {:?} vs {:?}",
            a.labels(),
            b.labels()
        )));
    }
    Ok(())
}

pub(crate) fn trace(m: &Array2<C64>) -> C64 {
    (0..m.nrows()).map(|i| m[[i, i]]).sum()
}

/// Trace functional as a row over vectorized states: tr(ρ) = Σᵢ vec(ρ)[i·d+i].
pub fn trace_row(space: &SpaceDescriptor) -> Array1<C64> {
    let d = space.dim();
    let mut row = Array1::zeros(d * d);
    for i in 0..d {
        row[i * d + i] = ONE;
    }
    row
}

/// Row-stacking vectorization.
pub fn vectorize(rho: &DensityState) -> Array1<C64> {
    vectorize_matrix(&rho.matrix)
}

pub fn vectorize_matrix(m: &Array2<C64>) -> Array1<C64> {
    let d = m.nrows();
    Array1::from_iter((0..d).flat_map(|i| (0..d).map(move |j| m[[i, j]])))
}

/// Inverse of [`vectorize`]; validates Hermiticity and dimensions.
pub fn devectorize(v: &Array1<C64>, space: &SpaceDescriptor) -> Result<DensityState> {
    devectorize_raw(v, space)
}

fn devectorize_raw(v: &Array1<C64>, space: &SpaceDescriptor) -> Result<DensityState> {
    let m = devectorize_matrix(v, space)?;
    DensityState::new(space.clone(), m, false)
}

pub fn devectorize_matrix(v: &Array1<C64>, space: &SpaceDescriptor) -> Result<Array2<C64>> {
    let d = space.dim();
    if v.len() != d * d {
        return Err(Error::DimensionMismatch(format!(
            "vector length {} is not d² = {}",
            v.len(),
            d * d
        )));
    }
    Ok(Array2::from_shape_fn((d, d), |(i, j)| v[i * d + j]))
}

/// Matrix of ρ ↦ AρB in the row-stacking convention: A ⊗ Bᵀ.
pub fn superop_from_pair(a: &Operator, b: &Operator) -> Result<SuperOperator> {
    check_same_space(&a.space, &b.space)?;
    let d = a.dim();
    let mut m = Array2::zeros((d * d, d * d));
    // (A ⊗ Bᵀ)[(i,j),(k,l)] = A[i,k]·B[l,j]
    for i in 0..d {
        for k in 0..d {
            let aik = a.matrix[[i, k]];
            if aik == ZERO {
                continue;
            }
            for j in 0..d {
                for l in 0..d {
                    m[[i * d + j, k * d + l]] += aik * b.matrix[[l, j]];
                }
            }
        }
    }
    SuperOperator::new(a.space.clone(), m)
}

/// Jump superoperator 𝒥ρ = AρB† (two-argument form; B defaults to A).
pub fn jump_superop(a: &Operator, b: Option<&Operator>) -> Result<SuperOperator> {
    let b = b.unwrap_or(a);
    superop_from_pair(a, &b.dagger())
}

/// Dissipator 𝒟(A,B)ρ = AρB† − ½{B†A, ρ}.
pub fn dissipator(a: &Operator, b: Option<&Operator>) -> Result<SuperOperator> {
    let b = b.unwrap_or(a);
    check_same_space(&a.space, &b.space)?;
    let id = Operator::identity(&a.space);
    let bdag_a = b.dagger().matmul(a)?;
    let jump = superop_from_pair(a, &b.dagger())?;
    let left = superop_from_pair(&bdag_a, &id)?;
    let right = superop_from_pair(&id, &bdag_a)?;
    jump.sub(&left.add(&right)?.scale(C64::new(0.5, 0.0)))
}

/// Liouville–von Neumann superoperator ρ ↦ −i[H, ρ] (ħ = 1).
pub fn hamiltonian_superop(h: &Operator) -> Result<SuperOperator> {
    if !h.is_hermitian(1e-10) {
        return Err(Error::InvalidArgument("Hamiltonian is not Hermitian".into()));
    }
    let id = Operator::identity(&h.space);
    let left = superop_from_pair(h, &id)?;
    let right = superop_from_pair(&id, h)?;
    Ok(left.sub(&right)?.scale(-I))
}

/// Lift a subsystem operator to the full space (identity elsewhere).
pub fn embed(op: &Operator, target_label: &str, space: &SpaceDescriptor) -> Result<Operator> {
    let idx = space.index_of(target_label)?;
    let dims = space.subsystem_dims();
    if op.dim() != dims[idx] {
        return Err(Error::DimensionMismatch(format!(
            "operator dimension {} does not match subsystem `{target_label}` dimension {}",
            op.dim(),
            dims[idx]
        )));
    }
    let mut m = Array2::from_elem((1, 1), ONE);
    for (k, &dk) in dims.iter().enumerate() {
        let factor = if k == idx {
            op.matrix.clone()
        } else {
            Array2::eye(dk)
        };
        m = kron(&m, &factor);
    }
    Operator::new(space.clone(), m)
}

/// Kronecker product.
pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    let mut out = Array2::zeros((ra * rb, ca * cb));
    for i in 0..ra {
        for j in 0..ca {
            let aij = a[[i, j]];
            if aij == ZERO {
                continue;
            }
            for p in 0..rb {
                for q in 0..cb {
                    out[[i * rb + p, j * cb + q]] = aij * b[[p, q]];
                }
            }
        }
    }
    out
}

/// Partial trace over the subsystem with the given label.
pub fn partial_trace(rho: &DensityState, label: &str) -> Result<DensityState> {
    let idx = rho.space.index_of(label)?;
    let dims = rho.space.subsystem_dims().to_vec();
    let d_left: usize = dims[..idx].iter().product();
    let d_mid = dims[idx];
    let d_right: usize = dims[idx + 1..].iter().product();
    let d_out = d_left * d_right;
    let mut out = Array2::zeros((d_out, d_out));
    for il in 0..d_left {
        for ir in 0..d_right {
            for jl in 0..d_left {
                for jr in 0..d_right {
                    let mut s = ZERO;
                    for m in 0..d_mid {
                        let row = (il * d_mid + m) * d_right + ir;
                        let col = (jl * d_mid + m) * d_right + jr;
                        s += rho.matrix[[row, col]];
                    }
                    out[[il * d_right + ir, jl * d_right + jr]] = s;
                }
            }
        }
    }
    let mut new_dims = dims.clone();
    new_dims.remove(idx);
    let mut new_labels = rho.space.labels().to_vec();
    new_labels.remove(idx);
    if new_dims.is_empty() {
        new_dims.push(1);
        new_labels.push("scalar".into());
    }
    let space = SpaceDescriptor::new(new_dims, new_labels)?;
    DensityState::new(space, out, rho.normalized)
}

/// Common two-level operators: (σ, σ†, σ†σ, σ_x, σ_y, σ_z) with |g⟩ = |0⟩, |e⟩ = |1⟩.
pub fn tls_ops(space: &SpaceDescriptor) -> (Operator, Operator, Operator, Operator) {
    assert_eq!(space.dim(), 2, "tls_ops requires a two-level space");
    let mut sm = Array2::zeros((2, 2));
    sm[[0, 1]] = ONE; // σ = |g⟩⟨e|
    let sigma = Operator::new(space.clone(), sm).unwrap();
    let sigma_dag = sigma.dagger();
    let n = sigma_dag.matmul(&sigma).unwrap();
    let mut sz = Array2::zeros((2, 2));
    sz[[0, 0]] = -ONE;
    sz[[1, 1]] = ONE;
    let sigma_z = Operator::new(space.clone(), sz).unwrap();
    (sigma, sigma_dag, n, sigma_z)
}

/// Bosonic annihilation operator on a Fock-truncated space of dimension n_max+1.
pub fn annihilation(space: &SpaceDescriptor) -> Operator {
    let d = space.dim();
    let mut m = Array2::zeros((d, d));
    for n in 1..d {
        m[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
    }
    Operator::new(space.clone(), m).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn qubit() -> SpaceDescriptor {
        SpaceDescriptor::single(2, "tls")
    }

    #[test]
    fn vectorize_basis_projector() {
        let rho = DensityState::basis(qubit(), 0).unwrap();
        let v = vectorize(&rho);
        assert_eq!(v[0], ONE);
        assert_eq!(v[1], ZERO);
        assert_eq!(v[2], ZERO);
        assert_eq!(v[3], ZERO);
    }

    #[test]
    fn round_trip_identity() {
        let space = SpaceDescriptor::single(3, "qutrit");
        let mut m = Array2::<C64>::zeros((3, 3));
        // arbitrary Hermitian matrix
        m[[0, 0]] = C64::new(0.3, 0.0);
        m[[1, 1]] = C64::new(0.5, 0.0);
        m[[2, 2]] = C64::new(0.2, 0.0);
        m[[0, 1]] = C64::new(0.1, 0.2);
        m[[1, 0]] = C64::new(0.1, -0.2);
        m[[1, 2]] = C64::new(-0.05, 0.07);
        m[[2, 1]] = C64::new(-0.05, -0.07);
        let rho = DensityState::new(space.clone(), m.clone(), true).unwrap();
        let back = devectorize(&vectorize(&rho), &space).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(back.matrix[[i, j]].re, m[[i, j]].re, epsilon = 1e-14);
                assert_abs_diff_eq!(back.matrix[[i, j]].im, m[[i, j]].im, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn superop_pair_matches_dense_product() {
        // random-ish fixed A, B, ρ in d = 2
        let space = qubit();
        let a = Operator::new(
            space.clone(),
            ndarray::array![
                [C64::new(0.9, 0.1), C64::new(-0.3, 0.4)],
                [C64::new(0.2, -0.7), C64::new(0.5, 0.0)]
            ],
        )
        .unwrap();
        let b = Operator::new(
            space.clone(),
            ndarray::array![
                [C64::new(-0.1, 0.6), C64::new(0.8, 0.0)],
                [C64::new(0.3, 0.3), C64::new(-0.4, 0.2)]
            ],
        )
        .unwrap();
        let rho = DensityState::new(
            space.clone(),
            ndarray::array![
                [C64::new(0.6, 0.0), C64::new(0.1, 0.2)],
                [C64::new(0.1, -0.2), C64::new(0.4, 0.0)]
            ],
            true,
        )
        .unwrap();
        let sup = superop_from_pair(&a, &b).unwrap();
        let lhs = sup.apply_vec(&vectorize(&rho));
        let dense = a.matrix.dot(&rho.matrix).dot(&b.matrix);
        let rhs = vectorize_matrix(&dense);
        for k in 0..4 {
            assert!((lhs[k] - rhs[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn dissipator_on_excited_projector() {
        let space = qubit();
        let (sigma, _, _, _) = tls_ops(&space);
        let d = dissipator(&sigma, None).unwrap();
        let rho = DensityState::basis(space.clone(), 1).unwrap(); // |e⟩⟨e|
        let out = d.apply(&rho).unwrap();
        // D(σ)|e⟩⟨e| = |g⟩⟨g| − |e⟩⟨e|
        assert_abs_diff_eq!(out.matrix[[0, 0]].re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(out.matrix[[1, 1]].re, -1.0, epsilon = 1e-14);
    }

    #[test]
    fn dephasing_halves_coherence() {
        let space = qubit();
        let (sigma, sigma_dag, n, _) = tls_ops(&space);
        let _ = (sigma, sigma_dag);
        let d = dissipator(&n, None).unwrap();
        // coherence |e⟩⟨g| (not Hermitian, apply on the raw vector)
        let mut m = Array2::<C64>::zeros((2, 2));
        m[[1, 0]] = ONE;
        let v = vectorize_matrix(&m);
        let out = d.apply_vec(&v);
        let out_m = devectorize_matrix(&out, &space).unwrap();
        assert_abs_diff_eq!(out_m[[1, 0]].re, -0.5, epsilon = 1e-14);
    }

    #[test]
    fn hamiltonian_phase_rotation() {
        let space = qubit();
        let (_, _, n, _) = tls_ops(&space);
        let omega = 2.5;
        let h = n.scale(C64::new(omega, 0.0));
        let sup = hamiltonian_superop(&h).unwrap();
        let mut m = Array2::<C64>::zeros((2, 2));
        m[[1, 0]] = ONE; // |e⟩⟨g|
        let out = sup.apply_vec(&vectorize_matrix(&m));
        let out_m = devectorize_matrix(&out, &space).unwrap();
        // −i[H, |e⟩⟨g|] = −iω|e⟩⟨g|
        assert_abs_diff_eq!(out_m[[1, 0]].im, -omega, epsilon = 1e-14);
        assert_abs_diff_eq!(out_m[[1, 0]].re, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn embed_into_pair() {
        let pair = SpaceDescriptor::new(vec![2, 3], vec!["emitter".into(), "cavity".into()]).unwrap();
        let (sigma, _, _, _) = tls_ops(&SpaceDescriptor::single(2, "emitter"));
        // rebuild σ on a space labelled like the subsystem for the dimension check
        let sigma = Operator::new(SpaceDescriptor::single(2, "emitter"), sigma.matrix).unwrap();
        let lifted = embed(&sigma, "emitter", &pair).unwrap();
        let expected = kron(&sigma.matrix, &Array2::eye(3));
        for i in 0..6 {
            for j in 0..6 {
                assert!((lifted.matrix[[i, j]] - expected[[i, j]]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn embedded_operators_commute() {
        let pair = SpaceDescriptor::new(vec![2, 2], vec!["a".into(), "b".into()]).unwrap();
        let a = Operator::new(
            SpaceDescriptor::single(2, "a"),
            ndarray::array![
                [C64::new(0.2, 0.5), C64::new(1.0, -0.3)],
                [C64::new(-0.4, 0.1), C64::new(0.7, 0.9)]
            ],
        )
        .unwrap();
        let b = Operator::new(
            SpaceDescriptor::single(2, "b"),
            ndarray::array![
                [C64::new(-0.6, 0.2), C64::new(0.3, 0.8)],
                [C64::new(0.9, -0.5), C64::new(0.1, 0.4)]
            ],
        )
        .unwrap();
        let ea = embed(&a, "a", &pair).unwrap();
        let eb = embed(&b, "b", &pair).unwrap();
        let comm = &ea.matrix.dot(&eb.matrix) - &eb.matrix.dot(&ea.matrix);
        assert!(comm.iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn lindblad_annihilates_trace() {
        let space = qubit();
        let (sigma, _, n, _) = tls_ops(&space);
        let h = n.scale(C64::new(1.3, 0.0));
        let l = hamiltonian_superop(&h)
            .unwrap()
            .add(&dissipator(&sigma, None).unwrap())
            .unwrap()
            .add(&dissipator(&n, None).unwrap().scale(C64::new(0.2, 0.0)))
            .unwrap();
        let tr = trace_row(&space);
        // trace row annihilated: trᵀ·L = 0
        let res = l.matrix.t().dot(&tr);
        assert!(res.iter().all(|z| z.norm() < 1e-12));
    }
}
