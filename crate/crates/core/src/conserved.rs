//! Constants of motion, the spin Sutherland parametrization, the deformed Lax
//! matrix, the SL(2,Z) maps on the quasi double and Haar averaging.

use crate::config::tolerances;
use crate::cxmat::{wrap_angle, MatC, C64, I};
use crate::doubles::{act, act_with, iwasawa, model_map, model_map_inv, HeisAction, PhasePoint, Space};
use crate::error::{Error, Result};
use crate::flows::{panel_distance, panel_values, Family};
use crate::lie::{LieData, Subspace};
use crate::observables::{word, Observable, Part, PointMap};
use crate::rmat::apply_r_q;
use crate::sample;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

/// The conserved maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConservedKind {
    /// (g⁻¹Jg, J) on T*G.
    Psi1,
    /// (g, J − g⁻¹Jg) on T*G.
    Psi2,
    /// (g⁻¹Lg, L) with L = bb† on the Heisenberg double.
    Psi3,
    /// W = b_L·g_R·b_L⁻¹ on the Heisenberg double.
    #[serde(rename = "Psi4", alias = "W")]
    Psi4,
    /// (g₂, g₁g₂g₁⁻¹) on the quasi double.
    #[serde(rename = "quasi_pair")]
    QuasiPair,
    /// (g₁, g₂g₁g₂⁻¹) on the quasi double.
    #[serde(rename = "quasi_pair_prime")]
    QuasiPairPrime,
    /// g₁g₂g₁⁻¹g₂⁻¹, the argument of the Casimirs.
    #[serde(rename = "casimir_arg")]
    CasimirArg,
}

impl ConservedKind {
    pub const ALL: [ConservedKind; 7] = [
        ConservedKind::Psi1,
        ConservedKind::Psi2,
        ConservedKind::Psi3,
        ConservedKind::Psi4,
        ConservedKind::QuasiPair,
        ConservedKind::QuasiPairPrime,
        ConservedKind::CasimirArg,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            ConservedKind::Psi1 => "Psi1",
            ConservedKind::Psi2 => "Psi2",
            ConservedKind::Psi3 => "Psi3",
            ConservedKind::Psi4 => "Psi4",
            ConservedKind::QuasiPair => "quasi_pair",
            ConservedKind::QuasiPairPrime => "quasi_pair_prime",
            ConservedKind::CasimirArg => "casimir_arg",
        }
    }

    /// Unreduced space the map is defined on (the K model is accepted for the Heisenberg kinds).
    pub fn source(&self) -> Space {
        match self {
            ConservedKind::Psi1 | ConservedKind::Psi2 => Space::Cotangent,
            ConservedKind::Psi3 | ConservedKind::Psi4 => Space::HeisenbergGB,
            _ => Space::Quasi,
        }
    }

    /// Flow family along which the value is constant; `None` means every invariant Hamiltonian.
    pub fn family(&self) -> Option<Family> {
        match self {
            ConservedKind::Psi1 | ConservedKind::Psi3 | ConservedKind::QuasiPair => Some(Family::Pi2),
            ConservedKind::Psi2 | ConservedKind::Psi4 | ConservedKind::QuasiPairPrime => Some(Family::Pi1),
            ConservedKind::CasimirArg => None,
        }
    }

    /// Group action under which the map is conjugation-equivariant.
    pub fn action(&self) -> HeisAction {
        match self {
            ConservedKind::Psi4 => HeisAction::Quasi,
            _ => HeisAction::Simple,
        }
    }

    /// Kinds defined on the given space (slices count as their parent).
    pub fn for_space(space: Space) -> Vec<ConservedKind> {
        let parent = if space == Space::HeisenbergK { Space::HeisenbergGB } else { space.parent() };
        ConservedKind::ALL.iter().copied().filter(|k| k.source() == parent).collect()
    }
}

impl std::fmt::Display for ConservedKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for ConservedKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "W" {
            return Ok(ConservedKind::Psi4);
        }
        ConservedKind::ALL
            .iter()
            .copied()
            .find(|k| k.tag() == s)
            .ok_or_else(|| Error::Schema(format!("unknown conserved map {s:?}")))
    }
}

fn conj_inv(g: &MatC, x: &MatC) -> MatC {
    &(&g.adjoint() * x) * g
}

fn conj(g: &MatC, x: &MatC) -> MatC {
    &(g * x) * &g.adjoint()
}

/// Value of a conserved map. Slice points are read as points of their parent space.
pub fn conserved_value(kind: ConservedKind, p: &PhasePoint) -> Result<Vec<MatC>> {
    let q = p.lift();
    let on_k = q.space == Space::HeisenbergK;
    let wrong = || Error::WrongSpace { expected: kind.source().tag().into(), got: p.space.tag().into() };
    if !(q.space == kind.source() || (on_k && kind.source() == Space::HeisenbergGB)) {
        return Err(wrong());
    }
    let c = &q.components;
    Ok(match kind {
        ConservedKind::Psi1 => vec![conj_inv(&c[0], &c[1]), c[1].clone()],
        ConservedKind::Psi2 => vec![c[0].clone(), &c[1] - &conj_inv(&c[0], &c[1])],
        ConservedKind::Psi3 => {
            let (g, b) = if on_k { model_map(&c[0])? } else { (c[0].clone(), c[1].clone()) };
            let l = &b * &b.adjoint();
            vec![conj_inv(&g, &l), l]
        }
        ConservedKind::Psi4 => {
            let k = if on_k { c[0].clone() } else { model_map_inv(&c[0], &c[1])? };
            let iw = iwasawa(&k)?;
            vec![&(&iw.b_l * &iw.g_r) * &iw.b_l.upper_inverse()?]
        }
        ConservedKind::QuasiPair => vec![c[1].clone(), conj(&c[0], &c[1])],
        ConservedKind::QuasiPairPrime => vec![c[0].clone(), conj(&c[1], &c[0])],
        ConservedKind::CasimirArg => vec![&(&(&c[0] * &c[1]) * &c[0].adjoint()) * &c[1].adjoint()],
    })
}

/// Largest entry of Ψ(η·p) − ηΨ(p)η⁻¹ over the components of the map.
pub fn equivariance_defect(kind: ConservedKind, eta: &MatC, p: &PhasePoint) -> Result<f64> {
    let moved = conserved_value(kind, &act_with(eta, p, kind.action())?)?;
    let base = conserved_value(kind, p)?;
    Ok(moved.iter().zip(&base).map(|(a, b)| a.dist(&conj(eta, b))).fold(0.0, f64::max))
}

/// Gauge-invariant summary of a conserved value: Re and Im of tr(Mᵏ) for
/// k = 1..n per component, and of tr(M₀M₁) for pairs.
pub fn conserved_spectrum(kind: ConservedKind, p: &PhasePoint) -> Result<Vec<f64>> {
    let ms = conserved_value(kind, p)?;
    let n = p.n();
    let mut out = Vec::new();
    for m in &ms {
        let mut pw = MatC::identity(n);
        for _ in 0..n {
            pw = &pw * m;
            let t = pw.trace();
            out.extend([t.re, t.im]);
        }
    }
    if ms.len() == 2 {
        let t = (&ms[0] * &ms[1]).trace();
        out.extend([t.re, t.im]);
    }
    Ok(out)
}

/// Per-time drift of a conserved map along a sequence of points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub kind: ConservedKind,
    pub space: Space,
    pub times: Vec<f64>,
    /// Largest entry change of the matrices themselves.
    pub matrix_drift: Vec<f64>,
    /// Largest change of the spectral summary; meaningful on reduced trajectories too.
    pub spectral_drift: Vec<f64>,
    pub max_matrix_drift: f64,
    pub max_spectral_drift: f64,
}

pub fn drift_report(kind: ConservedKind, times: &[f64], points: &[PhasePoint]) -> Result<DriftReport> {
    let first = points.first().ok_or_else(|| Error::Usage("empty trajectory".into()))?;
    let v0 = conserved_value(kind, first)?;
    let s0 = conserved_spectrum(kind, first)?;
    let mut matrix_drift = Vec::with_capacity(points.len());
    let mut spectral_drift = Vec::with_capacity(points.len());
    for p in points {
        let v = conserved_value(kind, p)?;
        matrix_drift.push(v.iter().zip(&v0).map(|(a, b)| a.dist(b)).fold(0.0, f64::max));
        spectral_drift.push(panel_distance(&conserved_spectrum(kind, p)?, &s0));
    }
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    Ok(DriftReport {
        kind,
        space: first.space,
        times: times.to_vec(),
        max_matrix_drift: max(&matrix_drift),
        max_spectral_drift: max(&spectral_drift),
        matrix_drift,
        spectral_drift,
    })
}

/// ‖b_L⁻¹(b_L⁻¹)† − g_R⁻¹(b_R b_R†)g_R‖ relative to the size of the right side.
pub fn factor_identity_residual(k: &MatC) -> Result<f64> {
    let iw = iwasawa(k)?;
    let bli = iw.b_l.upper_inverse()?;
    let lhs = &bli * &bli.adjoint();
    let rhs = conj_inv(&iw.g_r, &(&iw.b_r * &iw.b_r.adjoint()));
    Ok(lhs.dist(&rhs) / (1.0 + rhs.max_abs()))
}

/// Largest difference of tr((b_L⁻¹(b_L⁻¹)†)ᵏ) and tr((b_R b_R†)ᵏ), k = 1..n.
pub fn left_right_trace_defect(k: &MatC) -> Result<f64> {
    let iw = iwasawa(k)?;
    let bli = iw.b_l.upper_inverse()?;
    let a = &bli * &bli.adjoint();
    let b = &iw.b_r * &iw.b_r.adjoint();
    let (mut pa, mut pb) = (MatC::identity(k.n()), MatC::identity(k.n()));
    let mut worst: f64 = 0.0;
    for _ in 0..k.n() {
        pa = &pa * &a;
        pb = &pb * &b;
        let (ta, tb) = (pa.trace(), pb.trace());
        worst = worst.max((ta - tb).norm() / (1.0 + tb.norm()));
    }
    Ok(worst)
}

fn require_regular_phases(q: &[f64]) -> Result<()> {
    let tol = tolerances().regularity;
    for j in 0..q.len() {
        for k in j + 1..q.len() {
            if (C64::from_polar(1.0, q[j]) - C64::from_polar(1.0, q[k])).norm() < tol {
                return Err(Error::Regularity(format!("coinciding angles q[{j}] and q[{k}]")));
            }
        }
    }
    Ok(())
}

fn real_diag(d: &[f64]) -> MatC {
    MatC::from_real_diag(d)
}

/// J = −ip − R(Q)ξ − ½ξ with Q = diag(e^{iq}).
pub fn spin_suth_pack(lie: &LieData, q: &[f64], p: &[f64], xi: &MatC) -> Result<MatC> {
    let n = lie.n;
    if q.len() != n || p.len() != n || xi.n() != n {
        return Err(Error::Usage("dimension mismatch".into()));
    }
    require_regular_phases(q)?;
    let pm = real_diag(p);
    if lie.membership_defect(&pm.scale(I), Subspace::G) > 1e-12 {
        return Err(Error::Contract("p must be traceless for su".into()));
    }
    if lie.membership_defect(xi, Subspace::Gperp) > 1e-12 {
        return Err(Error::Contract("ξ must be off-diagonal anti-Hermitian".into()));
    }
    let qm = MatC::from_diag(&q.iter().map(|&x| C64::from_polar(1.0, x)).collect::<Vec<_>>());
    let rxi = apply_r_q(&qm, xi)?;
    Ok(&(&pm.scale(-I) - &rxi) - &xi.scale_re(0.5))
}

/// ½Σp² + ½Σ_{j<k} |ξ_jk|²/(2 sin²((q_j − q_k)/2)).
pub fn spin_suth_hamiltonian(q: &[f64], p: &[f64], xi: &MatC) -> Result<f64> {
    require_regular_phases(q)?;
    let kinetic = 0.5 * p.iter().map(|x| x * x).sum::<f64>();
    let mut potential = 0.0;
    for j in 0..q.len() {
        for k in j + 1..q.len() {
            let s = ((q[j] - q[k]) / 2.0).sin();
            potential += xi[(j, k)].norm_sqr() / (2.0 * s * s);
        }
    }
    Ok(kinetic + 0.5 * potential)
}

/// Checks that the phases of a diagonal unitary are strictly decreasing in (−π, π).
pub fn require_alcove(q: &MatC) -> Result<Vec<f64>> {
    if !q.is_diagonal(1e-12) {
        return Err(Error::Contract("Q must be diagonal".into()));
    }
    let phases: Vec<f64> = q.diag().iter().map(|z| wrap_angle(z.arg())).collect();
    if phases.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::Regularity("phases of Q must be strictly decreasing".into()));
    }
    Ok(phases)
}

/// The unipotent upper triangular b₊ with Q⁻¹b₊⁻¹Qb₊S₊ = 1.
///
/// Equivalently Q·b₊ = b₊·M with M = Q·S₊⁻¹, so on superdiagonal d
/// (u_j − u_k)·b_jk = Σ_{j≤l<k} b_jl·M_lk, k = j + d.
pub fn solve_bplus(q: &MatC, s_plus: &MatC) -> Result<MatC> {
    let n = q.n();
    require_alcove(q)?;
    if s_plus.n() != n || (0..n).any(|j| (s_plus[(j, j)] - 1.0).norm() > 1e-12 || (0..j).any(|k| s_plus[(j, k)].norm() > 1e-12)) {
        return Err(Error::Contract("S₊ must be unit upper triangular".into()));
    }
    let u = q.diag();
    let m = q * &s_plus.upper_inverse()?;
    let mut b = MatC::identity(n);
    let tol = tolerances().regularity;
    for d in 1..n {
        for j in 0..n - d {
            let k = j + d;
            let coeff = u[j] - u[k];
            if coeff.norm() < tol * u[j].norm() {
                return Err(Error::Regularity(format!("coefficient for entry ({j},{k}) vanishes")));
            }
            let rhs: C64 = (j..k).map(|l| b[(j, l)] * m[(l, k)]).sum();
            b[(j, k)] = rhs / coeff;
        }
    }
    Ok(b)
}

/// ‖Q⁻¹b₊⁻¹Qb₊S₊ − 1‖.
pub fn bplus_residual(q: &MatC, s_plus: &MatC, b: &MatC) -> Result<f64> {
    let lhs = &(&(&(&q.adjoint() * &b.upper_inverse()?) * q) * b) * s_plus;
    Ok(lhs.dist(&MatC::identity(q.n())))
}

/// L = e^p·b₊·b₊†·e^p.
pub fn deformed_lax(q: &MatC, p: &[f64], s_plus: &MatC) -> Result<MatC> {
    if p.len() != q.n() {
        return Err(Error::Usage("dimension mismatch".into()));
    }
    let b = solve_bplus(q, s_plus)?;
    let ep = real_diag(&p.iter().map(|x| x.exp()).collect::<Vec<_>>());
    Ok(&(&(&ep * &b) * &b.adjoint()) * &ep)
}

/// Generators of the SL(2,Z) action on the quasi double.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sl2z {
    S,
    T,
}

impl Sl2z {
    pub fn point_map(&self) -> PointMap {
        match self {
            Sl2z::S => PointMap::SlS,
            Sl2z::T => PointMap::SlT,
        }
    }
}

/// S: (g₁,g₂) ↦ (g₂⁻¹, g₂⁻¹g₁g₂); T: (g₁,g₂) ↦ (g₁g₂, g₂).
pub fn sl2z_map(which: Sl2z, p: &PhasePoint) -> Result<PhasePoint> {
    p.lift().expect(Space::Quasi)?;
    which.point_map().apply(&p.lift())
}

fn apply_word(word: &[Sl2z], p: &PhasePoint) -> Result<PhasePoint> {
    word.iter().try_fold(p.lift(), |acc, w| sl2z_map(*w, &acc))
}

/// Panel-level defects of Ŝ² = (ŜT̂)³ and Ŝ⁴ = id at p, largest of the two.
///
/// Maps are applied right to left, so ŜT̂ means T first.
pub fn sl2z_relation_defect(p: &PhasePoint) -> Result<f64> {
    use Sl2z::{S, T};
    let base = panel_values(&p.lift())?;
    let s2 = panel_values(&apply_word(&[S, S], p)?)?;
    let st3 = panel_values(&apply_word(&[T, S, T, S, T, S], p)?)?;
    let s4 = panel_values(&apply_word(&[S, S, S, S], p)?)?;
    Ok(panel_distance(&s2, &st3).max(panel_distance(&s4, &base)))
}

/// |{F∘Ŝ, H∘Ŝ}(p) − {F, H}(Ŝp)| for the quasi-Poisson bracket.
pub fn sl2z_bracket_defect(lie: &LieData, which: Sl2z, f: &Observable, h: &Observable, p: &PhasePoint) -> Result<f64> {
    use crate::brackets::{bracket, BracketKind};
    let q = p.lift();
    let image = sl2z_map(which, &q)?;
    let fs = f.clone().pullback(which.point_map());
    let hs = h.clone().pullback(which.point_map());
    let before = bracket(lie, BracketKind::Qpb, &fs, &hs, &q)?;
    let after = bracket(lie, BracketKind::Qpb, f, h, &image)?;
    Ok((before - after).abs())
}

/// h(g₁g₂g₁⁻¹g₂⁻¹) = Re or Im tr of the k-th power of the group commutator.
pub fn casimir(power: usize, part: Part) -> Observable {
    let letters: Vec<&str> = (0..power.max(1)).flat_map(|_| ["g1", "g2", "g1inv", "g2inv"]).collect();
    word(Space::Quasi, &letters, part, 1.0).expect("quasi letters")
}

/// Monte-Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HaarAverage {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

const CHUNK: usize = 1024;

/// Average of F(η·p) over Haar-random η.
///
/// Samples are split into fixed-size chunks, each drawn from its own ChaCha
/// stream of `seed`, so the result does not depend on the thread count.
pub fn haar_average(lie: &LieData, f: &Observable, p: &PhasePoint, num_samples: usize, seed: u64) -> Result<HaarAverage> {
    if num_samples == 0 {
        return Err(Error::Usage("need at least one sample".into()));
    }
    let chunks = num_samples.div_ceil(CHUNK);
    let workers = std::thread::available_parallelism().map(|x| x.get()).unwrap_or(1).min(chunks);
    let run_chunk = |c: usize| -> Result<(f64, f64)> {
        let mut r = sample::SeededRng::seed_from_u64(seed);
        r.set_stream(c as u64);
        let count = CHUNK.min(num_samples - c * CHUNK);
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..count {
            let eta = sample::haar_unitary(&mut r, lie);
            let v = f.value(&act(&eta, p)?)?;
            s += v;
            s2 += v * v;
        }
        Ok((s, s2))
    };
    let mut sums = vec![(0.0, 0.0); chunks];
    std::thread::scope(|scope| -> Result<()> {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let run_chunk = &run_chunk;
                scope.spawn(move || (w..chunks).step_by(workers).map(|c| run_chunk(c).map(|v| (c, v))).collect::<Result<Vec<_>>>())
            })
            .collect();
        for h in handles {
            for (c, v) in h.join().expect("worker panicked")? {
                sums[c] = v;
            }
        }
        Ok(())
    })?;
    let (s, s2) = sums.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let m = num_samples as f64;
    let mean = s / m;
    let var = if num_samples > 1 { ((s2 - m * mean * mean) / (m - 1.0)).max(0.0) } else { 0.0 };
    Ok(HaarAverage { mean, std_error: (var / m).sqrt(), samples: num_samples })
}

/// ⟨Φ(g,J), X⟩ over the Cartan basis, at a point with diagonal g.
pub fn moment_cartan_pairing(lie: &LieData, p: &PhasePoint) -> Result<f64> {
    let v = conserved_value(ConservedKind::Psi2, p)?;
    let n = lie.n;
    let mut worst: f64 = 0.0;
    for j in 0..n {
        let mut x = MatC::zeros(n);
        x[(j, j)] = I;
        if j + 1 < n {
            x[(j + 1, j + 1)] = -I;
        } else if lie.variant == crate::lie::Variant::Su {
            continue;
        }
        worst = worst.max(lie.form_g(&v[1], &x).abs());
    }
    Ok(worst)
}
