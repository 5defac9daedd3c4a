// Copyright 2026 QubitOS Contributors
// SPDX-License-Identifier: Apache-2.0

//! Time evolution and correlation machinery.
//!
//! Propagation diagonalizes the Liouvillian once (`e^{Lt} = V e^{Λt} V⁻¹`)
//! and falls back to adaptive Dormand–Prince integration when the
//! eigenvector matrix is ill-conditioned. Time dependence is restricted to
//! piecewise-constant schedules (square pulses).

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, Inverse, Solve};
use num_complex::Complex64 as C64;

use crate::fock_liouville::{
    check_same_space, devectorize, superop_from_pair, trace_row, vectorize, DensityState,
    Operator, SpaceDescriptor, SuperOperator, ONE, ZERO,
};
use crate::{Error, Result};

/// Condition-number threshold above which the eigenvector basis is unusable.
const COND_LIMIT: f64 = 1e10;
/// Relative reconstruction tolerance ‖VΛV⁻¹ − L‖ ≤ tol·‖L‖.
const RECON_TOL: f64 = 1e-8;

/// Constant or piecewise-constant generator.
#[derive(Debug, Clone)]
pub enum Generator {
    Constant(SuperOperator),
    /// Contiguous, non-overlapping (start, end, L) segments; the final
    /// segment extends past its end time for open-ended evolution.
    Schedule(Vec<(f64, f64, SuperOperator)>),
}

impl Generator {
    pub fn space(&self) -> &SpaceDescriptor {
        match self {
            Generator::Constant(l) => &l.space,
            Generator::Schedule(s) => &s[0].2.space,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Generator::Schedule(segs) = self {
            if segs.is_empty() {
                return Err(Error::InvalidArgument("empty schedule".into()));
            }
            for w in segs.windows(2) {
                if (w[0].1 - w[1].0).abs() > 1e-12 {
                    return Err(Error::InvalidArgument(
                        "schedule intervals must be contiguous and non-overlapping".into(),
                    ));
                }
            }
            for (t0, t1, _) in segs {
                if t1 <= t0 {
                    return Err(Error::InvalidArgument("schedule interval has t1 ≤ t0".into()));
                }
            }
        }
        Ok(())
    }

    /// Generator active at time t (last segment extends to +∞).
    pub fn at(&self, t: f64) -> &SuperOperator {
        match self {
            Generator::Constant(l) => l,
            Generator::Schedule(segs) => {
                for (t0, t1, l) in segs {
                    if t >= *t0 - 1e-15 && t < *t1 {
                        return l;
                    }
                }
                &segs.last().unwrap().2
            }
        }
    }

    /// Segment boundaries strictly inside (t0, t1).
    fn breakpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        match self {
            Generator::Constant(_) => vec![],
            Generator::Schedule(segs) => segs
                .iter()
                .flat_map(|(a, b, _)| [*a, *b])
                .filter(|&t| t > t0 + 1e-15 && t < t1 - 1e-15)
                .collect(),
        }
    }
}

/// Eigendecomposition of a constant generator, or a fallback flag.
pub struct PropagatorCache {
    pub l: Array2<C64>,
    decomp: Option<EigDecomp>,
}

struct EigDecomp {
    lambda: Array1<C64>,
    v: Array2<C64>,
    vinv: Array2<C64>,
}

impl PropagatorCache {
    pub fn new(l: &Array2<C64>) -> Self {
        let decomp = match l.eig() {
            Ok((lambda, v)) => match v.inv() {
                Ok(vinv) => {
                    let cond = one_norm(&v) * one_norm(&vinv);
                    // reconstruction residual ‖VΛV⁻¹ − L‖₁
                    let mut rec = v.clone();
                    for (j, col) in rec.columns_mut().into_iter().enumerate() {
                        let lj = lambda[j];
                        let mut col = col;
                        col.mapv_inplace(|z| z * lj);
                    }
                    let rec = rec.dot(&vinv);
                    let scale = one_norm(l).max(1e-300);
                    let err = one_norm(&(&rec - l)) / scale;
                    if cond < COND_LIMIT && err < RECON_TOL {
                        Some(EigDecomp { lambda, v, vinv })
                    } else {
                        None
                    }
                }
                Err(_) => None,
            },
            Err(_) => None,
        };
        Self { l: l.clone(), decomp }
    }

    pub fn usable(&self) -> bool {
        self.decomp.is_some()
    }

    /// e^{Lt} v.
    pub fn expm_action(&self, t: f64, v: &Array1<C64>) -> Array1<C64> {
        match &self.decomp {
            Some(d) => {
                let mut c = d.vinv.dot(v);
                for (k, ck) in c.iter_mut().enumerate() {
                    *ck *= (d.lambda[k] * t).exp();
                }
                d.v.dot(&c)
            }
            None => rk45(&self.l, v, t),
        }
    }

    /// Full matrix e^{Lt}.
    pub fn expm_matrix(&self, t: f64) -> Array2<C64> {
        match &self.decomp {
            Some(d) => {
                let mut m = d.v.clone();
                for (j, col) in m.columns_mut().into_iter().enumerate() {
                    let e = (d.lambda[j] * t).exp();
                    let mut col = col;
                    col.mapv_inplace(|z| z * e);
                }
                m.dot(&d.vinv)
            }
            None => {
                // column-by-column integration
                let n = self.l.nrows();
                let mut m = Array2::zeros((n, n));
                for j in 0..n {
                    let mut e = Array1::zeros(n);
                    e[j] = ONE;
                    let col = rk45(&self.l, &e, t);
                    m.column_mut(j).assign(&col);
                }
                m
            }
        }
    }

    /// Finite-horizon integral ∫₀^T e^{Lt} v dt.
    pub fn integral_action(&self, t: f64, v: &Array1<C64>) -> Result<Array1<C64>> {
        match &self.decomp {
            Some(d) => {
                let mut c = d.vinv.dot(v);
                for (k, ck) in c.iter_mut().enumerate() {
                    let lk = d.lambda[k];
                    // φ(λ,T) = (e^{λT} − 1)/λ, → T as λ → 0
                    let phi = if lk.norm() * t < 1e-8 {
                        C64::new(t, 0.0) * (ONE + lk * t / 2.0)
                    } else {
                        ((lk * t).exp() - ONE) / lk
                    };
                    *ck *= phi;
                }
                Ok(d.v.dot(&c))
            }
            None => Err(Error::Numeric(
                "finite-horizon integral requires a usable eigendecomposition".into(),
            )),
        }
    }

    /// Improper integral ∫₀^∞ e^{Lt} v dt.
    ///
    /// Eigenvalues with |λ| below `ker_tol` (steady/kernel directions) must
    /// carry negligible coefficient, otherwise the integral diverges.
    pub fn integral_to_infinity(&self, v: &Array1<C64>) -> Result<Array1<C64>> {
        let d = self
            .decomp
            .as_ref()
            .ok_or_else(|| Error::Numeric("improper integral requires eigendecomposition".into()))?;
        let scale = v.iter().map(|z| z.norm()).fold(1e-300, f64::max);
        let ker_tol = 1e-9 * one_norm(&self.l).max(1.0);
        let mut c = d.vinv.dot(v);
        for (k, ck) in c.iter_mut().enumerate() {
            let lk = d.lambda[k];
            if lk.norm() < ker_tol {
                if ck.norm() > 1e-7 * scale * one_norm(&d.v) {
                    return Err(Error::Numeric(
                        "∫₀^∞ e^{Lt} v dt diverges: v has weight on a kernel direction".into(),
                    ));
                }
                *ck = ZERO;
            } else if lk.re > ker_tol {
                return Err(Error::Numeric("generator has growing modes".into()));
            } else {
                *ck = -*ck / lk;
            }
        }
        Ok(d.v.dot(&c))
    }
}

/// Dense matrix exponential e^{M} (Higham's scaling-and-squaring, Padé 13).
pub fn expm(m: &Array2<C64>) -> Result<Array2<C64>> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::DimensionMismatch("expm requires a square matrix".into()));
    }
    const THETA13: f64 = 5.371920351148152;
    let norm = one_norm(m);
    let s = if norm > THETA13 {
        ((norm / THETA13).log2().ceil() as i32).max(0)
    } else {
        0
    };
    let a = m.mapv(|z| z / (2.0_f64).powi(s));
    // Padé-13 coefficients
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let id: Array2<C64> = Array2::eye(n);
    let a2 = a.dot(&a);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);
    let u_inner = &a6.mapv(|z| z * B[13]) + &a4.mapv(|z| z * B[11]) + &a2.mapv(|z| z * B[9]);
    let u = a.dot(
        &(a6.dot(&u_inner)
            + &a6.mapv(|z| z * B[7])
            + &a4.mapv(|z| z * B[5])
            + &a2.mapv(|z| z * B[3])
            + &id.mapv(|z| z * B[1])),
    );
    let v_inner = &a6.mapv(|z| z * B[12]) + &a4.mapv(|z| z * B[10]) + &a2.mapv(|z| z * B[8]);
    let v = a6.dot(&v_inner)
        + &a6.mapv(|z| z * B[6])
        + &a4.mapv(|z| z * B[4])
        + &a2.mapv(|z| z * B[2])
        + &id.mapv(|z| z * B[0]);
    // (V − U)⁻¹ (V + U)
    let lhs = &v - &u;
    let rhs = &v + &u;
    let mut r = Array2::zeros((n, n));
    use ndarray_linalg::Factorize;
    let f = lhs.factorize()?;
    for j in 0..n {
        let col = rhs.column(j).to_owned();
        let x = f.solve(&col)?;
        r.column_mut(j).assign(&x);
    }
    for _ in 0..s {
        r = r.dot(&r);
    }
    Ok(r)
}

fn one_norm(m: &Array2<C64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Adaptive Dormand–Prince 4(5) for dv/dt = Lv; rtol 1e−10, atol 1e−12.
pub(crate) fn rk45(l: &Array2<C64>, v0: &Array1<C64>, t_end: f64) -> Array1<C64> {
    if t_end == 0.0 {
        return v0.clone();
    }
    const RTOL: f64 = 1e-10;
    const ATOL: f64 = 1e-12;
    // Dormand–Prince coefficients
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
        0.0,
    ];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let lnorm = one_norm(l).max(1e-300);
    let mut h = (0.1 / lnorm).min(t_end);
    let mut t = 0.0;
    let mut v = v0.clone();
    let mut k: Vec<Array1<C64>> = Vec::with_capacity(7);
    while t < t_end {
        h = h.min(t_end - t);
        k.clear();
        k.push(l.dot(&v));
        for s in 0..6 {
            let mut vs = v.clone();
            for (j, kj) in k.iter().enumerate() {
                let a = A[s][j];
                if a != 0.0 {
                    vs.scaled_add(C64::new(a * h, 0.0), kj);
                }
            }
            k.push(l.dot(&vs));
        }
        let mut v5 = v.clone();
        let mut v4 = v.clone();
        for (j, kj) in k.iter().enumerate() {
            if B5[j] != 0.0 {
                v5.scaled_add(C64::new(B5[j] * h, 0.0), kj);
            }
            if B4[j] != 0.0 {
                v4.scaled_add(C64::new(B4[j] * h, 0.0), kj);
            }
        }
        let mut err: f64 = 0.0;
        for i in 0..v.len() {
            let sc = ATOL + RTOL * v5[i].norm().max(v[i].norm());
            err = err.max((v5[i] - v4[i]).norm() / sc);
        }
        if err <= 1.0 {
            t += h;
            v = v5;
        }
        let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
        h = (h * fac).max(1e-15 * t_end.max(1.0));
    }
    v
}

/// ρ(t1) = 𝒰(t1, t0) ρ(t0) for a (piecewise-)constant generator.
pub fn propagate(gen: &Generator, rho0: &DensityState, t0: f64, t1: f64) -> Result<DensityState> {
    if t1 < t0 {
        return Err(Error::InvalidArgument("propagate requires t1 ≥ t0".into()));
    }
    gen.validate()?;
    check_same_space(gen.space(), &rho0.space)?;
    let mut v = vectorize(rho0);
    v = propagate_vec(gen, &v, t0, t1)?;
    let mut out = devectorize(&v, &rho0.space)?;
    out.normalized = rho0.normalized;
    Ok(out)
}

/// Vectorized-state propagation across schedule breakpoints.
pub fn propagate_vec(gen: &Generator, v: &Array1<C64>, t0: f64, t1: f64) -> Result<Array1<C64>> {
    let mut ts = vec![t0];
    ts.extend(gen.breakpoints(t0, t1));
    ts.push(t1);
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut v = v.clone();
    for w in ts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a < 1e-18 {
            continue;
        }
        let l = gen.at(0.5 * (a + b));
        let cache = PropagatorCache::new(&l.matrix);
        v = cache.expm_action(b - a, &v);
    }
    Ok(v)
}

/// Which side of ρ an operator is applied to inside a correlator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// ρ ↦ Aρ
    Left,
    /// ρ ↦ ρA
    Right,
}

/// Superoperator for a one-sided operator application.
pub fn side_superop(op: &Operator, side: Side) -> Result<SuperOperator> {
    let id = Operator::identity(&op.space);
    match side {
        Side::Left => superop_from_pair(op, &id),
        Side::Right => superop_from_pair(&id, op),
    }
}

/// Time-ordered multi-time correlator:
/// propagate → apply superoperator → propagate → … → trace.
pub fn two_time_correlation(
    gen: &Generator,
    rho0: &DensityState,
    ops: &[(f64, Side, Operator)],
    t_final: f64,
) -> Result<C64> {
    gen.validate()?;
    for w in ops.windows(2) {
        if w[1].0 < w[0].0 {
            return Err(Error::InvalidArgument(
                "correlator application times must be nondecreasing".into(),
            ));
        }
    }
    let mut v = vectorize(rho0);
    let mut t = 0.0;
    for (ti, side, op) in ops {
        v = propagate_vec(gen, &v, t, *ti)?;
        v = side_superop(op, *side)?.apply_vec(&v);
        t = *ti;
    }
    if t_final > t {
        v = propagate_vec(gen, &v, t, t_final)?;
    }
    Ok(trace_row(gen.space()).dot(&v))
}

/// Quantum-regression evaluator z(t,τ) = e^{τX} · P · e^{tY} y(0).
///
/// `select` (P, X-dim × Y-dim) picks the one-time solution components that
/// seed the τ evolution; identity when the dimensions agree.
pub struct RegressionEvaluator {
    x_cache: PropagatorCache,
    y_cache: PropagatorCache,
    select: Array2<C64>,
    y0: Array1<C64>,
}

pub fn regression_correlations(
    x: &Array2<C64>,
    y: &Array2<C64>,
    select: Option<&Array2<C64>>,
    y0: &Array1<C64>,
) -> Result<RegressionEvaluator> {
    let nx = x.nrows();
    let ny = y.nrows();
    if x.ncols() != nx || y.ncols() != ny || y0.len() != ny {
        return Err(Error::DimensionMismatch("regression matrices must be square".into()));
    }
    let select = match select {
        Some(p) => {
            if p.nrows() != nx || p.ncols() != ny {
                return Err(Error::DimensionMismatch(format!(
                    "selection matrix must be {nx}×{ny}"
                )));
            }
            p.clone()
        }
        None => {
            if nx != ny {
                return Err(Error::DimensionMismatch(
                    "selection matrix required when dim(X) ≠ dim(Y)".into(),
                ));
            }
            Array2::eye(nx)
        }
    };
    Ok(RegressionEvaluator {
        x_cache: PropagatorCache::new(x),
        y_cache: PropagatorCache::new(y),
        select,
        y0: y0.clone(),
    })
}

impl RegressionEvaluator {
    pub fn eval(&self, t: f64, tau: f64) -> Array1<C64> {
        let yt = self.y_cache.expm_action(t, &self.y0);
        let seed = self.select.dot(&yt);
        self.x_cache.expm_action(tau, &seed)
    }
}

/// Schur-complement (adiabatic) elimination:
/// Z̃ = Π_xZΠ_x − Π_xZΠ_y (Π_yZΠ_y)⁻¹ Π_yZΠ_x on the kept indices.
pub fn adiabatic_eliminate(z: &Array2<C64>, keep: &[usize]) -> Result<Array2<C64>> {
    let n = z.nrows();
    if z.ncols() != n {
        return Err(Error::DimensionMismatch("matrix must be square".into()));
    }
    for &k in keep {
        if k >= n {
            return Err(Error::InvalidArgument(format!("kept index {k} out of range")));
        }
    }
    let elim: Vec<usize> = (0..n).filter(|i| !keep.contains(i)).collect();
    let pick = |rows: &[usize], cols: &[usize]| {
        Array2::from_shape_fn((rows.len(), cols.len()), |(i, j)| z[[rows[i], cols[j]]])
    };
    let zxx = pick(keep, keep);
    if elim.is_empty() {
        return Ok(zxx);
    }
    let zxy = pick(keep, &elim);
    let zyx = pick(&elim, keep);
    let zyy = pick(&elim, &elim);
    // condition estimate: reject near-singular eliminated blocks
    let zyy_inv = zyy
        .inv()
        .map_err(|_| Error::Numeric("eliminated block is singular".into()))?;
    if one_norm(&zyy) * one_norm(&zyy_inv) > 1e12 {
        return Err(Error::Numeric("eliminated block too ill-conditioned".into()));
    }
    // solve rather than multiply by the explicit inverse
    let mut sol = Array2::zeros((elim.len(), keep.len()));
    for j in 0..keep.len() {
        let col = zyx.column(j).to_owned();
        let s = zyy.solve(&col)?;
        sol.column_mut(j).assign(&s);
    }
    Ok(&zxx - &zxy.dot(&sol))
}

/// Jump channel: collapse operator with the √rate absorbed.
#[derive(Debug, Clone)]
pub struct JumpChannel {
    pub op: Operator,
    pub label: String,
}

/// Split L = L₀ + Σ𝒥ᵢ; return L₀ and, when it has pure
/// Hamiltonian-plus-anticommutator form, the non-Hermitian H_eff.
///
/// Gauge: Re(H_eff[0,0]) = 0 (a Hamiltonian is only determined by L₀ up to
/// a real multiple of the identity).
pub fn non_hermitian_parts(
    l: &SuperOperator,
    jump_channels: &[JumpChannel],
) -> Result<(SuperOperator, Option<Operator>)> {
    let mut l0 = l.clone();
    for ch in jump_channels {
        let j = superop_from_pair(&ch.op, &ch.op.dagger())?;
        l0 = l0.sub(&j)?;
    }
    // trace-monotonicity: tr(L₀ρ) = tr(Mᵀρ) with Mᵀ = −ΣC†C must be ≤ 0
    let space = l.space.clone();
    let d = space.dim();
    let tr = trace_row(&space);
    let w = l0.matrix.t().dot(&tr); // row functional as a d²-vector
    let mut m = Array2::zeros((d, d));
    for i in 0..d {
        for j in 0..d {
            m[[j, i]] = w[i * d + j]; // Mᵀ
        }
    }
    if let Ok((evals, _)) = m.eig() {
        let scale = one_norm(&l.matrix).max(1.0);
        if evals.iter().any(|ev| ev.re > 1e-8 * scale) {
            return Err(Error::InvalidArgument(
                "channel rates exceed the dissipation contained in L".into(),
            ));
        }
    }
    // try to express L₀ρ = −i(H_eff ρ − ρ H_eff†): contract over the second
    // tensor factor, T[i,k] = Σ_j L₀[(i,j),(k,j)] = −i·d·H[i,k] + i·δ_{ik}(tr H)*
    let k = &l0.matrix;
    let mut t = Array2::<C64>::zeros((d, d));
    for i in 0..d {
        for kk in 0..d {
            let mut s = ZERO;
            for j in 0..d {
                s += k[[i * d + j, kk * d + j]];
            }
            t[[i, kk]] = s;
        }
    }
    let tr_t = (0..d).map(|i| t[[i, i]]).sum::<C64>();
    // tr T = 2d·Im(tr H); Re(tr H) fixed by the gauge below
    let im_tr_h = tr_t.re / (2.0 * d as f64);
    // first pass with tr H = i·Im(tr H):
    let mut h = Array2::<C64>::zeros((d, d));
    let tr_h_conj = C64::new(0.0, -im_tr_h);
    for i in 0..d {
        for kk in 0..d {
            let mut val = t[[i, kk]];
            if i == kk {
                val -= C64::new(0.0, 1.0) * tr_h_conj;
            }
            h[[i, kk]] = C64::new(0.0, 1.0) * val / (d as f64);
        }
    }
    // gauge: Re H[0,0] = 0
    let shift = C64::new(h[[0, 0]].re, 0.0);
    for i in 0..d {
        h[[i, i]] -= shift;
    }
    let h_op = Operator::new(space.clone(), h)?;
    // verify the reconstruction; residual ⇒ dissipators remain (H_eff absent)
    let id = Operator::identity(&space);
    let left = superop_from_pair(&h_op, &id)?;
    let right = superop_from_pair(&id, &h_op.dagger())?;
    let rebuilt = left.sub(&right)?.scale(C64::new(0.0, -1.0));
    let resid = one_norm(&(&rebuilt.matrix - &l0.matrix));
    let scale = one_norm(&l.matrix).max(1.0);
    if resid < 1e-9 * scale {
        Ok((l0, Some(h_op)))
    } else {
        Ok((l0, None))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock_liouville::{dissipator, hamiltonian_superop, tls_ops, DensityState};
    use approx::assert_abs_diff_eq;

    fn decaying_tls(gamma: f64, gamma_star: f64, omega: f64) -> (SpaceDescriptor, SuperOperator) {
        let space = SpaceDescriptor::single(2, "tls");
        let (sigma, _, n, _) = tls_ops(&space);
        let h = n.scale(C64::new(omega, 0.0));
        let l = hamiltonian_superop(&h)
            .unwrap()
            .add(&dissipator(&sigma, None).unwrap().scale(C64::new(gamma, 0.0)))
            .unwrap()
            .add(&dissipator(&n, None).unwrap().scale(C64::new(2.0 * gamma_star, 0.0)))
            .unwrap();
        (space, l)
    }

    #[test]
    fn exponential_decay() {
        let (space, l) = decaying_tls(1.0, 0.0, 0.0);
        let gen = Generator::Constant(l);
        let rho0 = DensityState::basis(space.clone(), 1).unwrap();
        let rho1 = propagate(&gen, &rho0, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(rho1.matrix[[1, 1]].re, (-1.0_f64).exp(), epsilon = 1e-10);
    }

    #[test]
    fn superposition_coherence_decay_and_purity_minimum() {
        let (space, l) = decaying_tls(1.0, 0.0, 0.0);
        let gen = Generator::Constant(l);
        let psi = ndarray::array![
            C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)
        ];
        let rho0 = DensityState::pure(space.clone(), &psi).unwrap();
        let t = 0.7;
        let rho = propagate(&gen, &rho0, 0.0, t).unwrap();
        // coherence degraded at γ/2
        assert_abs_diff_eq!(rho.matrix[[1, 0]].norm(), 0.5 * (-t / 2.0_f64).exp(), epsilon = 1e-10);
        // purity minimum at γt = ln 2
        let purity = |t: f64| {
            let r = propagate(&gen, &rho0, 0.0, t).unwrap();
            r.matrix.dot(&r.matrix).diag().iter().map(|z| z.re).sum::<f64>()
        };
        let tm = std::f64::consts::LN_2;
        assert!(purity(tm) < purity(tm - 0.05));
        assert!(purity(tm) < purity(tm + 0.05));
    }

    #[test]
    fn semigroup_property() {
        let (space, l) = decaying_tls(1.0, 0.3, 2.0);
        let gen = Generator::Constant(l);
        let psi = ndarray::array![C64::new(0.6, 0.0), C64::new(0.8, 0.0)];
        let rho0 = DensityState::pure(space.clone(), &psi).unwrap();
        let a = propagate(&gen, &rho0, 0.0, 1.7).unwrap();
        let mid = propagate(&gen, &rho0, 0.0, 0.9).unwrap();
        let b = propagate(&gen, &mid, 0.9, 1.7).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((a.matrix[[i, j]] - b.matrix[[i, j]]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn eig_and_rk45_agree() {
        let (_, l) = decaying_tls(1.0, 0.2, 1.5);
        let cache = PropagatorCache::new(&l.matrix);
        assert!(cache.usable());
        let v0 = ndarray::array![
            C64::new(0.3, 0.0),
            C64::new(0.1, 0.2),
            C64::new(0.1, -0.2),
            C64::new(0.7, 0.0)
        ];
        let a = cache.expm_action(1.3, &v0);
        let b = rk45(&l.matrix, &v0, 1.3);
        for k in 0..4 {
            assert!((a[k] - b[k]).norm() < 1e-8);
        }
    }

    #[test]
    fn g1_dephased_tls() {
        // ⟨σ†(t+τ)σ(t)⟩ = e^{−γt} e^{−Γτ/2}, Γ = γ + 2γ*
        let gamma = 1.0;
        let gamma_star = 0.15;
        let (space, l) = decaying_tls(gamma, gamma_star, 0.0);
        let gen = Generator::Constant(l);
        let rho0 = DensityState::basis(space.clone(), 1).unwrap();
        let (sigma, sigma_dag, _, _) = tls_ops(&space);
        let (t, tau) = (0.4, 0.9);
        let g1 = two_time_correlation(
            &gen,
            &rho0,
            &[(t, Side::Left, sigma), (t + tau, Side::Left, sigma_dag)],
            t + tau,
        )
        .unwrap();
        let expected = (-gamma * t - (gamma + 2.0 * gamma_star) * tau / 2.0).exp();
        assert_abs_diff_eq!(g1.re, expected, epsilon = 1e-9);
        assert_abs_diff_eq!(g1.im, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn g2_single_tls_vanishes() {
        let (space, l) = decaying_tls(1.0, 0.0, 0.0);
        let gen = Generator::Constant(l.clone());
        let rho0 = DensityState::basis(space.clone(), 1).unwrap();
        let (sigma, sigma_dag, _, _) = tls_ops(&space);
        // G²(t,t′) = ⟨σ†(t)σ†(t′)σ(t′)σ(t)⟩ via left/right sandwiching
        let g2 = two_time_correlation(
            &gen,
            &rho0,
            &[
                (0.3, Side::Left, sigma.clone()),
                (0.3, Side::Right, sigma_dag.clone()),
                (0.8, Side::Left, sigma_dag.matmul(&sigma).unwrap()),
            ],
            1.0,
        )
        .unwrap();
        assert_abs_diff_eq!(g2.norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn hermitian_symmetry_of_correlators() {
        let (space, l) = decaying_tls(1.0, 0.1, 0.8);
        let gen = Generator::Constant(l);
        let psi = ndarray::array![C64::new(0.6, 0.1), C64::new(0.78, -0.15)];
        let rho0 = DensityState::pure(space.clone(), &psi).unwrap();
        let (sigma, sigma_dag, _, _) = tls_ops(&space);
        let t = 0.5;
        let tau = 0.3;
        // ⟨σ†(t+τ)σ(t)⟩ = ⟨σ†(t)σ(t+τ)⟩* with the latter as Tr[σ 𝒰 (ρσ†)]
        let fwd = two_time_correlation(
            &gen,
            &rho0,
            &[(t, Side::Left, sigma.clone()), (t + tau, Side::Left, sigma_dag.clone())],
            t + tau,
        )
        .unwrap();
        let rev = two_time_correlation(
            &gen,
            &rho0,
            &[(t, Side::Right, sigma_dag), (t + tau, Side::Left, sigma)],
            t + tau,
        )
        .unwrap();
        assert_abs_diff_eq!(fwd.re, rev.conj().re, epsilon = 1e-10);
        assert_abs_diff_eq!(fwd.im, rev.conj().im, epsilon = 1e-10);
    }

    #[test]
    fn regression_scalar_decay() {
        let x = ndarray::array![[C64::new(-0.5, 0.0)]];
        let y = ndarray::array![[C64::new(-1.0, 0.0)]];
        let y0 = ndarray::array![C64::new(1.0, 0.0)];
        let ev = regression_correlations(&x, &y, None, &y0).unwrap();
        let z = ev.eval(0.7, 1.2);
        assert_abs_diff_eq!(z[0].re, (-0.7_f64).exp() * (-0.6_f64).exp(), epsilon = 1e-12);
        let z0 = ev.eval(0.7, 0.0);
        assert_abs_diff_eq!(z0[0].re, (-0.7_f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn adiabatic_elimination_purcell_rate() {
        // single-excitation amplitude equations: ȧ_e = −(Γ/2)a_e − i g a_c,
        // ȧ_c = −i g a_e − (κ/2)a_c; eliminating the cavity at Δ = 0 gives
        // an effective decay Γ/2 + 2g²/κ i.e. R = 4g²/κ on the population.
        let g = 0.4;
        let kappa = 3.0;
        let gamma = 0.05;
        let z = ndarray::array![
            [C64::new(-gamma / 2.0, 0.0), C64::new(0.0, -g)],
            [C64::new(0.0, -g), C64::new(-kappa / 2.0, 0.0)]
        ];
        let zt = adiabatic_eliminate(&z, &[0]).unwrap();
        let r = 4.0 * g * g / kappa;
        assert_abs_diff_eq!(zt[[0, 0]].re, -(gamma + r) / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn adiabatic_elimination_block_diagonal() {
        let z = ndarray::array![
            [C64::new(1.0, 0.0), ZERO],
            [ZERO, C64::new(-2.0, 0.0)]
        ];
        let zt = adiabatic_eliminate(&z, &[0]).unwrap();
        assert_abs_diff_eq!(zt[[0, 0]].re, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn two_defect_exchange_coupling() {
        // two emitters coupled to one cavity mode; eliminating the mode in the
        // single-excitation non-Hermitian Hamiltonian gives λ = −2g²/(2Δ−iκ);
        // amplitude form iẋ = Zx with x = (a₁, a₂, c)
        let g = 0.2;
        let delta = 5.0;
        let kappa = 1.0;
        let z = ndarray::array![
            [ZERO, ZERO, C64::new(g, 0.0)],
            [ZERO, ZERO, C64::new(g, 0.0)],
            [C64::new(g, 0.0), C64::new(g, 0.0), C64::new(delta, -kappa / 2.0)]
        ];
        let zt = adiabatic_eliminate(&z, &[0, 1]).unwrap();
        let lambda = -C64::new(2.0 * g * g, 0.0) / C64::new(2.0 * delta, -kappa);
        // off-diagonal coupling is λ/2 per the 2Δ−iκ normalization:
        // −g²/(Δ−iκ/2) = −2g²/(2Δ−iκ)
        assert!((zt[[0, 1]] - lambda).norm() < 1e-12);
        assert!((zt[[1, 0]] - lambda).norm() < 1e-12);
    }

    #[test]
    fn non_hermitian_reduction_tls() {
        let omega = 1.3;
        let gamma = 0.8;
        let (space, l) = decaying_tls(gamma, 0.0, omega);
        let (sigma, _, _, _) = tls_ops(&space);
        let ch = JumpChannel {
            op: sigma.scale(C64::new(gamma.sqrt(), 0.0)),
            label: "decay".into(),
        };
        let (l0, heff) = non_hermitian_parts(&l, &[ch]).unwrap();
        let heff = heff.expect("pure-decay TLS has a non-Hermitian Hamiltonian");
        // H_eff = ω σ†σ − (iγ/2) σ†σ
        assert_abs_diff_eq!(heff.matrix[[1, 1]].re, omega, epsilon = 1e-10);
        assert_abs_diff_eq!(heff.matrix[[1, 1]].im, -gamma / 2.0, epsilon = 1e-10);
        // survival probability Tr[e^{L₀t}|e⟩⟨e|] = e^{−γt}
        let rho0 = DensityState::basis(space.clone(), 1).unwrap();
        let cache = PropagatorCache::new(&l0.matrix);
        let v = cache.expm_action(0.9, &vectorize(&rho0));
        let tr = trace_row(&space).dot(&v);
        assert_abs_diff_eq!(tr.re, (-gamma * 0.9_f64).exp(), epsilon = 1e-10);
    }

    #[test]
    fn non_hermitian_reduction_blocked_by_dephasing() {
        let (space, l) = decaying_tls(1.0, 0.2, 0.0);
        let (sigma, _, _, _) = tls_ops(&space);
        let ch = JumpChannel { op: sigma, label: "decay".into() };
        let (_, heff) = non_hermitian_parts(&l, &[ch]).unwrap();
        assert!(heff.is_none(), "pure dephasing blocks the Hamiltonian form");
    }
}

#[cfg(test)]
mod expm_tests {
    use super::*;
    use crate::fock_liouville::ZERO;

    #[test]
    fn expm_matches_eig_on_diagonalizable() {
        let m = ndarray::array![
            [C64::new(-1.0, 0.3), C64::new(0.2, -0.1), ZERO],
            [C64::new(0.0, 0.4), C64::new(-2.0, 0.0), C64::new(0.1, 0.0)],
            [C64::new(0.3, 0.0), ZERO, C64::new(-0.5, -0.2)]
        ];
        let t = 1.7;
        let e = expm(&m.mapv(|z| z * t)).unwrap();
        let cache = PropagatorCache::new(&m);
        let e2 = cache.expm_matrix(t);
        for i in 0..3 {
            for j in 0..3 {
                assert!((e[[i, j]] - e2[[i, j]]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn expm_defective_jordan_block() {
        // [[λ, 0], [1, λ]] → e^{λt}[[1, 0], [t, 1]]
        let lam = C64::new(-0.4, 0.7);
        let t = 2.3;
        let m = ndarray::array![[lam, ZERO], [ONE, lam]];
        let e = expm(&m.mapv(|z| z * t)).unwrap();
        let elt = (lam * t).exp();
        assert!((e[[0, 0]] - elt).norm() < 1e-12);
        assert!((e[[1, 0]] - elt * t).norm() < 1e-10);
        assert!((e[[1, 1]] - elt).norm() < 1e-12);
        assert!(e[[0, 1]].norm() < 1e-12);
    }
}
