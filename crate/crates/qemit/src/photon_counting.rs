// Copyright 2026 QubitOS Contributors
// SPDX-License-Identifier: Apache-2.0

//! Photon-number decomposition: conditional propagators per detector
//! count-vector, detection windows with retarded time, detector imperfection
//! remixing, and pulse photon statistics.
//!
//! The recursive integral for 𝒰_n is realized exactly by one propagation of
//! a stacked block-lower-triangular generator on ⨁_n ρ_n with
//! dρ_n/dt = 𝒧₀ρ_n + Σᵢ𝒥ᵢρ_{n−eᵢ}.

use std::collections::HashMap;

use ndarray::{s, Array1, Array2};
use num_complex::Complex64 as C64;

use crate::dynamics::{expm, Generator};
use crate::fock_liouville::{
    check_same_space, devectorize, jump_superop, trace_row, vectorize, DensityState, Operator,
    SpaceDescriptor, SuperOperator, ONE, ZERO,
};
use crate::{Error, Result};

/// Source field at a detector; the √rate is absorbed into the operator.
#[derive(Debug, Clone)]
pub struct CollapseChannel {
    pub op: Operator,
    pub label: String,
}

impl CollapseChannel {
    pub fn new(op: Operator, label: impl Into<String>) -> Result<Self> {
        if op.matrix.iter().all(|z| z.norm() == 0.0) {
            return Err(Error::InvalidArgument("collapse operator is zero".into()));
        }
        Ok(Self { op, label: label.into() })
    }

    /// Detector efficiency: d̂ → √η d̂.
    pub fn attenuated(&self, eta: f64) -> CollapseChannel {
        CollapseChannel {
            op: self.op.scale(C64::new(eta.sqrt(), 0.0)),
            label: self.label.clone(),
        }
    }
}

/// Photon counts per channel.
pub type CountVector = Vec<usize>;

/// Graded enumeration of count vectors with Σnᵢ ≤ n_max; lower total counts
/// come first, so the stacked generator is block lower triangular.
pub fn count_vectors(num_channels: usize, n_max: usize) -> Vec<CountVector> {
    let mut out = Vec::new();
    for total in 0..=n_max {
        let mut v = vec![0usize; num_channels];
        fill(&mut out, &mut v, 0, total);
    }
    return out;

    fn fill(out: &mut Vec<CountVector>, v: &mut CountVector, idx: usize, remaining: usize) {
        if idx == v.len() - 1 {
            v[idx] = remaining;
            out.push(v.clone());
            v[idx] = 0;
            return;
        }
        for k in (0..=remaining).rev() {
            v[idx] = k;
            fill(out, v, idx + 1, remaining - k);
            v[idx] = 0;
        }
    }
}

/// The conditional propagators 𝒰_n(t1,t0) for all Σnᵢ ≤ n_max, stored as one
/// stacked (B·d²)² matrix whose (i,j) block is 𝒰_{nᵢ−nⱼ} (zero if nᵢ ≱ nⱼ).
pub struct ConditionalPropagator {
    pub space: SpaceDescriptor,
    pub counts: Vec<CountVector>,
    index: HashMap<CountVector, usize>,
    pub stacked: Array2<C64>,
    d2: usize,
}

impl ConditionalPropagator {
    /// Identity (t1 = t0).
    pub fn identity(space: &SpaceDescriptor, num_channels: usize, n_max: usize) -> Self {
        let counts = count_vectors(num_channels, n_max);
        let d2 = space.dim() * space.dim();
        let stacked = Array2::eye(counts.len() * d2);
        Self::from_parts(space.clone(), counts, stacked, d2)
    }

    fn from_parts(
        space: SpaceDescriptor,
        counts: Vec<CountVector>,
        stacked: Array2<C64>,
        d2: usize,
    ) -> Self {
        let index = counts.iter().cloned().zip(0..).collect();
        Self { space, counts, index, stacked, d2 }
    }

    pub fn block_index(&self, n: &CountVector) -> Option<usize> {
        self.index.get(n).copied()
    }

    /// 𝒰_{n_to − n_from} block.
    pub fn block(&self, n_to: &CountVector, n_from: &CountVector) -> Result<Array2<C64>> {
        let i = self
            .block_index(n_to)
            .ok_or_else(|| Error::InvalidArgument(format!("count vector {n_to:?} out of range")))?;
        let j = self
            .block_index(n_from)
            .ok_or_else(|| Error::InvalidArgument(format!("count vector {n_from:?} out of range")))?;
        Ok(self
            .stacked
            .slice(s![i * self.d2..(i + 1) * self.d2, j * self.d2..(j + 1) * self.d2])
            .to_owned())
    }

    /// 𝒰_n(t1,t0) as a superoperator.
    pub fn u_n(&self, n: &CountVector) -> Result<SuperOperator> {
        let zero = vec![0usize; n.len()];
        SuperOperator::new(self.space.clone(), self.block(n, &zero)?)
    }

    /// Composition self ∘ other (later interval times earlier interval).
    pub fn compose(&self, other: &ConditionalPropagator) -> Result<ConditionalPropagator> {
        check_same_space(&self.space, &other.space)?;
        if self.counts != other.counts {
            return Err(Error::DimensionMismatch("count-vector layouts differ".into()));
        }
        Ok(Self::from_parts(
            self.space.clone(),
            self.counts.clone(),
            self.stacked.dot(&other.stacked),
            self.d2,
        ))
    }

    /// Apply a plain superoperator blockwise (e.g. unconditional evolution
    /// outside a detection window, or an instantaneous unitary). `before`
    /// selects S∘self (false) vs self∘S (true).
    pub fn compose_blockwise(&self, sup: &SuperOperator, before: bool) -> Result<ConditionalPropagator> {
        check_same_space(&self.space, &sup.space)?;
        let b = self.counts.len();
        let mut big = Array2::zeros((b * self.d2, b * self.d2));
        for k in 0..b {
            big.slice_mut(s![k * self.d2..(k + 1) * self.d2, k * self.d2..(k + 1) * self.d2])
                .assign(&sup.matrix);
        }
        let stacked = if before {
            self.stacked.dot(&big)
        } else {
            big.dot(&self.stacked)
        };
        Ok(Self::from_parts(self.space.clone(), self.counts.clone(), stacked, self.d2))
    }

    /// Apply to an initial state (all photon records start at zero).
    pub fn apply(&self, rho0: &DensityState) -> Result<ConditionalEnsemble> {
        check_same_space(&self.space, &rho0.space)?;
        let b = self.counts.len();
        let mut v = Array1::zeros(b * self.d2);
        v.slice_mut(s![0..self.d2]).assign(&vectorize(rho0));
        let out = self.stacked.dot(&v);
        let mut states = Vec::with_capacity(b);
        let mut total = 0.0;
        for (k, n) in self.counts.iter().enumerate() {
            let w = out.slice(s![k * self.d2..(k + 1) * self.d2]).to_owned();
            let mut st = devectorize(&w, &self.space)?;
            st.normalized = false;
            total += st.trace().re;
            states.push((n.clone(), st));
        }
        Ok(ConditionalEnsemble {
            space: self.space.clone(),
            states,
            n_max: self.counts.last().map(|c| c.iter().sum()).unwrap_or(0),
            residual: 1.0 - total,
        })
    }
}

/// Map from count vector to unnormalized conditional state.
#[derive(Debug, Clone)]
pub struct ConditionalEnsemble {
    pub space: SpaceDescriptor,
    pub states: Vec<(CountVector, DensityState)>,
    pub n_max: usize,
    /// 1 − ΣTr ρ_n: probability mass beyond the truncation.
    pub residual: f64,
}

impl ConditionalEnsemble {
    pub fn get(&self, n: &[usize]) -> Option<&DensityState> {
        self.states.iter().find(|(c, _)| c == n).map(|(_, s)| s)
    }

    /// Σ_n ρ_n (should equal the unconditional state up to the residual).
    pub fn total_state(&self) -> Result<DensityState> {
        let d = self.space.dim();
        let mut m = Array2::zeros((d, d));
        for (_, st) in &self.states {
            m = m + &st.matrix;
        }
        DensityState::new(self.space.clone(), m, false)
    }
}

/// Build the stacked block-lower-triangular generator for (L₀, {𝒥ᵢ}).
fn stacked_generator(
    l: &SuperOperator,
    channels: &[CollapseChannel],
    n_max: usize,
) -> Result<(Vec<CountVector>, Array2<C64>)> {
    let d2 = l.space.dim() * l.space.dim();
    let jumps: Vec<SuperOperator> = channels
        .iter()
        .map(|c| jump_superop(&c.op, None))
        .collect::<Result<_>>()?;
    let mut l0 = l.clone();
    for j in &jumps {
        l0 = l0.sub(j)?;
    }
    validate_no_jump_generator(&l0)?;
    let counts = count_vectors(channels.len(), n_max);
    let b = counts.len();
    let index: HashMap<&CountVector, usize> = counts.iter().zip(0..).collect();
    let mut g = Array2::zeros((b * d2, b * d2));
    for (k, n) in counts.iter().enumerate() {
        g.slice_mut(s![k * d2..(k + 1) * d2, k * d2..(k + 1) * d2])
            .assign(&l0.matrix);
        for (i, jump) in jumps.iter().enumerate() {
            if n[i] == 0 {
                continue;
            }
            let mut prev = n.clone();
            prev[i] -= 1;
            let p = index[&prev];
            g.slice_mut(s![k * d2..(k + 1) * d2, p * d2..(p + 1) * d2])
                .assign(&jump.matrix);
        }
    }
    Ok((counts, g))
}

/// tr(L₀ρ) = tr(Mᵀρ) must be ≤ 0 for all PSD ρ, i.e. Mᵀ ⪯ 0: the channel
/// jumps must not exceed the dissipation contained in L.
fn validate_no_jump_generator(l0: &SuperOperator) -> Result<()> {
    use ndarray_linalg::Eig;
    let d = l0.space.dim();
    let tr = trace_row(&l0.space);
    let w = l0.matrix.t().dot(&tr);
    let mut m = Array2::zeros((d, d));
    for i in 0..d {
        for j in 0..d {
            m[[j, i]] = w[i * d + j];
        }
    }
    let scale = l0.matrix.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
    if let Ok((evals, _)) = m.eig() {
        if evals.iter().any(|ev| ev.re > 1e-8 * scale) {
            return Err(Error::InvalidArgument(
                "channel jumps exceed the dissipation contained in L".into(),
            ));
        }
    }
    Ok(())
}

/// Conditional propagator over [t0, t1] for a (piecewise-)constant generator.
pub fn conditional_matrix(
    gen: &Generator,
    channels: &[CollapseChannel],
    n_max: usize,
    t0: f64,
    t1: f64,
) -> Result<ConditionalPropagator> {
    if t1 < t0 {
        return Err(Error::InvalidArgument("t1 ≥ t0 required".into()));
    }
    gen.validate()?;
    let space = gen.space().clone();
    let d2 = space.dim() * space.dim();
    // segment boundaries inside (t0,t1)
    let mut ts = vec![t0];
    match gen {
        Generator::Constant(_) => {}
        Generator::Schedule(segs) => {
            for (a, b, _) in segs {
                for &t in [a, b].into_iter() {
                    if t > t0 + 1e-15 && t < t1 - 1e-15 {
                        ts.push(t);
                    }
                }
            }
        }
    }
    ts.push(t1);
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut result: Option<ConditionalPropagator> = None;
    let mut counts_out = count_vectors(channels.len(), n_max);
    for w in ts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a < 1e-18 {
            continue;
        }
        let l = gen.at(0.5 * (a + b));
        let (counts, g) = stacked_generator(l, channels, n_max)?;
        counts_out = counts.clone();
        let e = expm(&g.mapv(|z| z * (b - a)))?;
        let seg = ConditionalPropagator::from_parts(space.clone(), counts, e, d2);
        result = Some(match result {
            None => seg,
            Some(prev) => seg.compose(&prev)?,
        });
    }
    Ok(result.unwrap_or_else(|| ConditionalPropagator::identity(&space, channels.len(), n_max)))
}

/// ρ_n = 𝒰_n(t1,t0) ρ0 for all Σnᵢ ≤ n_max.
pub fn conditional_propagate(
    gen: &Generator,
    channels: &[CollapseChannel],
    rho0: &DensityState,
    t0: f64,
    t1: f64,
    n_max: usize,
) -> Result<ConditionalEnsemble> {
    conditional_matrix(gen, channels, n_max, t0, t1)?.apply(rho0)
}

/// Detector model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorKind {
    /// Photon-number-resolving detector.
    Pnrd,
    /// Binary (click / no-click) detector.
    Bd,
}

#[derive(Debug, Clone)]
pub struct DetectorSpec {
    pub kind: DetectorKind,
    /// Quantum efficiency η_d ∈ [0,1].
    pub efficiency: f64,
    /// Dark-count rate γ_d ≥ 0.
    pub dark_rate: f64,
    /// Gate start t_d (lab time).
    pub gate_start: f64,
    /// Gate duration T_d > 0.
    pub gate_duration: f64,
    /// Source-to-detector distance L_d ≥ 0.
    pub distance: f64,
    /// Transmission speed c.
    pub speed: f64,
}

impl DetectorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.gate_duration <= 0.0 {
            return Err(Error::InvalidArgument("detector gate duration must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.efficiency) || self.dark_rate < 0.0 || self.distance < 0.0 {
            return Err(Error::InvalidArgument("invalid detector parameters".into()));
        }
        Ok(())
    }

    /// Retarded time r(t) = t − L_d/c.
    pub fn retarded(&self, t: f64) -> f64 {
        t - self.distance / self.speed
    }

    /// Poisson dark-count probability p_{d,k} = (γ_dT_d)^k e^{−γ_dT_d}/k!.
    pub fn dark_prob(&self, k: usize) -> f64 {
        let mu = self.dark_rate * self.gate_duration;
        let mut p = (-mu).exp();
        for i in 1..=k {
            p *= mu / i as f64;
        }
        p
    }
}

/// Window metadata reported alongside a window decomposition.
#[derive(Debug, Clone, Copy)]
pub struct WindowReport {
    /// Minimum protocol time T_d + 2L_d/c.
    pub min_protocol_time: f64,
    pub r_start: f64,
    pub r_end: f64,
}

/// Full propagation outside the detection window, decomposition inside:
/// 𝒲_n = 𝒰(t_f, r(t_d+T_d)) 𝒰_n(r(t_d+T_d), r(t_d)) 𝒰(r(t_d), t0).
pub fn window_conditional(
    gen: &Generator,
    channels: &[CollapseChannel],
    rho0: &DensityState,
    t0: f64,
    window: &DetectorSpec,
    t_final: f64,
    n_max: usize,
) -> Result<(ConditionalEnsemble, WindowReport)> {
    let (w, report) = window_matrix(gen, channels, window, t0, t_final, n_max)?;
    Ok((w.apply(rho0)?, report))
}

/// The 𝒲_n propagator itself (reused for multi-window protocols).
pub fn window_matrix(
    gen: &Generator,
    channels: &[CollapseChannel],
    window: &DetectorSpec,
    t0: f64,
    t_final: f64,
    n_max: usize,
) -> Result<(ConditionalPropagator, WindowReport)> {
    window.validate()?;
    let r0 = window.retarded(window.gate_start);
    let r1 = window.retarded(window.gate_start + window.gate_duration);
    if r0 < t0 - 1e-12 || r1 > t_final + 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "window [{r0}, {r1}] outside [{t0}, {t_final}]"
        )));
    }
    let inner = conditional_matrix(gen, channels, n_max, r0, r1)?;
    let full_before = unconditional_superop(gen, t0, r0)?;
    let full_after = unconditional_superop(gen, r1, t_final)?;
    let w = inner
        .compose_blockwise(&full_before, true)?
        .compose_blockwise(&full_after, false)?;
    let report = WindowReport {
        min_protocol_time: window.gate_duration + 2.0 * window.distance / window.speed,
        r_start: r0,
        r_end: r1,
    };
    Ok((w, report))
}

/// Unconditional propagator 𝒰(t1,t0) as a superoperator matrix.
pub fn unconditional_superop(gen: &Generator, t0: f64, t1: f64) -> Result<SuperOperator> {
    let space = gen.space().clone();
    let d2 = space.dim() * space.dim();
    let mut ts = vec![t0];
    if let Generator::Schedule(segs) = gen {
        for (a, b, _) in segs {
            for &t in [a, b].into_iter() {
                if t > t0 + 1e-15 && t < t1 - 1e-15 {
                    ts.push(t);
                }
            }
        }
    }
    ts.push(t1);
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut m = Array2::eye(d2);
    for w in ts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a < 1e-18 {
            continue;
        }
        let l = gen.at(0.5 * (a + b));
        m = expm(&l.matrix.mapv(|z| z * (b - a)))?.dot(&m);
    }
    SuperOperator::new(space, m)
}

/// P(n) = Tr ρ_n for every count vector in the ensemble.
pub fn photon_number_probabilities(ens: &ConditionalEnsemble) -> Vec<(CountVector, f64)> {
    ens.states
        .iter()
        .map(|(n, st)| (n.clone(), st.trace().re))
        .collect()
}

/// μ = Σ n pₙ (total over channels).
pub fn mean_photon_number(probs: &[(CountVector, f64)]) -> f64 {
    probs
        .iter()
        .map(|(n, p)| n.iter().sum::<usize>() as f64 * p)
        .sum()
}

/// g⁽²⁾ = Σ n(n−1) pₙ / μ² (total over channels).
pub fn g2_from_probabilities(probs: &[(CountVector, f64)]) -> f64 {
    let mu = mean_photon_number(probs);
    let num: f64 = probs
        .iter()
        .map(|(n, p)| {
            let tot = n.iter().sum::<usize>() as f64;
            tot * (tot - 1.0) * p
        })
        .sum();
    num / (mu * mu)
}

/// Classical remixing ϱ_m = Σ_n P(m|n) ρ_n with independent detectors,
/// P(m|n) = Π P_d(mᵢ|nᵢ).
///
/// PNRD: P(m|n) = Σ_k δ_{m,k+n} p_{d,k}. BD: m ∈ {0,1} with
/// P(0|n) = δ_{n,0} p_{d,0} and P(1|n) = 1 − δ_{n,0} p_{d,0}.
pub fn remix_measurement(
    ens: &ConditionalEnsemble,
    detectors: &[DetectorSpec],
) -> Result<Vec<(CountVector, DensityState)>> {
    let nch = ens.states.first().map(|(n, _)| n.len()).unwrap_or(0);
    if detectors.len() != nch {
        return Err(Error::DimensionMismatch(format!(
            "{} detectors supplied for {nch} channels",
            detectors.len()
        )));
    }
    for d in detectors {
        d.validate()?;
    }
    // per-detector outcome range: counts up to n_max plus enough dark counts
    // to make the Poisson tail negligible (BD outcomes are 0/1)
    let mut m_ranges: Vec<Vec<usize>> = Vec::new();
    for det in detectors {
        match det.kind {
            DetectorKind::Bd => m_ranges.push(vec![0, 1]),
            DetectorKind::Pnrd => {
                let mut k_max = 0usize;
                let mut tail = 1.0 - det.dark_prob(0);
                while tail > 1e-13 && k_max < 25 {
                    k_max += 1;
                    tail -= det.dark_prob(k_max);
                }
                m_ranges.push((0..=(ens.n_max + k_max)).collect());
            }
        }
    }
    // cartesian product of outcome ranges
    let mut outcomes: Vec<CountVector> = vec![vec![]];
    for r in &m_ranges {
        outcomes = outcomes
            .into_iter()
            .flat_map(|base| {
                r.iter().map(move |&m| {
                    let mut v = base.clone();
                    v.push(m);
                    v
                })
            })
            .collect();
    }
    let d = ens.space.dim();
    let mut out = Vec::with_capacity(outcomes.len());
    for m in outcomes {
        let mut acc = Array2::<C64>::zeros((d, d));
        for (n, st) in &ens.states {
            let mut w = 1.0;
            for i in 0..nch {
                w *= outcome_prob(&detectors[i], m[i], n[i]);
                if w == 0.0 {
                    break;
                }
            }
            if w != 0.0 {
                acc.scaled_add(C64::new(w, 0.0), &st.matrix);
            }
        }
        out.push((m, DensityState::new(ens.space.clone(), acc, false)?));
    }
    Ok(out)
}

/// P_d(m|n) for one detector.
pub fn outcome_prob(det: &DetectorSpec, m: usize, n: usize) -> f64 {
    match det.kind {
        DetectorKind::Pnrd => {
            if m >= n {
                det.dark_prob(m - n)
            } else {
                0.0
            }
        }
        DetectorKind::Bd => {
            let p_silent = if n == 0 { det.dark_prob(0) } else { 0.0 };
            if m == 0 {
                p_silent
            } else {
                1.0 - p_silent
            }
        }
    }
}

/// Detector fields after a two-input beam splitter:
/// (d̂₁, d̂₂) = R(θ)·(√η₁e^{−iφ₁}b̂₁, √η₂e^{−iφ₂}b̂₂) with
/// R(θ) = [[cosθ, −sinθ], [sinθ, cosθ]].
pub fn beam_splitter_network(
    fields: &[Operator],
    theta: f64,
    relative_phases: &[f64],
    transmissions: &[f64],
) -> Result<Vec<CollapseChannel>> {
    if fields.len() != 2 || relative_phases.len() != 2 || transmissions.len() != 2 {
        return Err(Error::InvalidArgument(
            "beam splitter takes exactly two input fields, phases and transmissions".into(),
        ));
    }
    if transmissions.iter().any(|&t| !(0.0..=1.0).contains(&t)) {
        return Err(Error::InvalidArgument("transmissions must lie in [0,1]".into()));
    }
    check_same_space(&fields[0].space, &fields[1].space)?;
    let b: Vec<Operator> = (0..2)
        .map(|k| {
            fields[k].scale(
                C64::new(transmissions[k].sqrt(), 0.0)
                    * C64::new(0.0, -relative_phases[k]).exp(),
            )
        })
        .collect();
    let (c, s) = (theta.cos(), theta.sin());
    let d1 = b[0].scale(C64::new(c, 0.0)).add(&b[1].scale(C64::new(-s, 0.0)))?;
    let d2 = b[0].scale(C64::new(s, 0.0)).add(&b[1].scale(C64::new(c, 0.0)))?;
    Ok(vec![
        CollapseChannel::new(d1, "d1")?,
        CollapseChannel::new(d2, "d2")?,
    ])
}
