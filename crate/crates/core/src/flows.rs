//! Exact flows of the unreduced systems, the reduced evolution equations and
//! their RK4 integration, gauge fixing onto the slices, and the comparison of
//! the two routes on gauge-invariant panels.

use crate::cxmat::{eig_herm, polar_unitary, qr_pos, MatC, C64, I};
use crate::doubles::{act, act_gauge, diagonalizing_gauge, expm, nu, nu_inv, to_gb_model, to_k_model, xi_r, GaugeElement, PhasePoint, Space};
use crate::error::{Error, Result};
use crate::lie::{LieData, RegularKind, Subspace, Variant};
use crate::observables::{word, Flavor, Observable, Part, PointMap};
use crate::rmat::ROperator;
use serde::{Deserialize, Serialize};

/// Which projection the Hamiltonian is pulled back along.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    /// Functions of the first component (g, or g₁).
    #[serde(rename = "pi1")]
    Pi1,
    /// Functions of the second component (J, b, or g₂).
    #[serde(rename = "pi2")]
    Pi2,
}

impl Family {
    pub fn tag(&self) -> &'static str {
        match self {
            Family::Pi1 => "pi1",
            Family::Pi2 => "pi2",
        }
    }

    /// Component the Hamiltonian reads.
    pub fn slot(&self) -> usize {
        match self {
            Family::Pi1 => 0,
            Family::Pi2 => 1,
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pi1" => Ok(Family::Pi1),
            "pi2" => Ok(Family::Pi2),
            other => Err(Error::Schema(format!("unknown family {other:?}"))),
        }
    }
}

/// The G×B observable behind a K-model Hamiltonian.
fn heis_inner(h: &Observable) -> Result<&Observable> {
    match h {
        Observable::Pullback { map: PointMap::Model, inner } => Ok(inner),
        _ => Err(Error::Schema("K-model Hamiltonians must be pulled back through the model map".into())),
    }
}

/// Rejects Hamiltonians that are not invariant or read the wrong component.
///
/// The component check is pointwise: the pairing of the other component
/// must vanish at `p`.
pub fn check_hamiltonian(family: Family, h: &Observable, p: &PhasePoint) -> Result<()> {
    if !h.is_invariant() {
        return Err(Error::Schema("Hamiltonian must be an invariant function".into()));
    }
    let q = p.lift();
    let (h, q) = if q.space == Space::HeisenbergK { (heis_inner(h)?, to_gb_model(&q)?) } else { (h, q) };
    let pairs = h.pairings(&q)?;
    let scale = 1.0 + pairs.iter().map(|m| m.max_abs()).fold(0.0, f64::max);
    let other = 1 - family.slot();
    if pairs[other].max_abs() > 1e-10 * scale {
        return Err(Error::Schema(format!("Hamiltonian of family {family} on {} depends on component {}", q.space, other + 1)));
    }
    Ok(())
}

/// exp(it∇h(g)) = β·γ with β ∈ B and γ unitary.
///
/// The left side is positive Hermitian, so this is a Cholesky-type split;
/// it is computed as qr_pos of the inverse, P⁻¹ = Q·R, giving β = R⁻¹, γ = Q†.
pub fn heis_factorization(lie: &LieData, h: &Observable, p: &PhasePoint, t: f64) -> Result<(MatC, MatC)> {
    let x = h.derivative(lie, p, Flavor::Nabla1)?;
    let e = expm(&x.scale(C64::new(0.0, t)))?;
    let (q, r) = qr_pos(&e.inverse()?)?;
    Ok((r.upper_inverse()?, q.adjoint()))
}

/// Closed-form integral curve of a pullback invariant, evaluated at time t.
///
/// Slice points are lifted; the result lives in the unreduced space.
pub fn exact_flow(lie: &LieData, family: Family, h: &Observable, p0: &PhasePoint, t: f64) -> Result<PhasePoint> {
    let p = p0.lift();
    check_hamiltonian(family, h, &p)?;
    flow_unchecked(lie, family, h, &p, t)
}

fn flow_unchecked(lie: &LieData, family: Family, h: &Observable, p: &PhasePoint, t: f64) -> Result<PhasePoint> {
    let c = &p.components;
    let pair = |a: MatC, b: MatC| Ok(PhasePoint::pair(p.space, a, b));
    match (p.space, family) {
        (Space::Cotangent, Family::Pi2) => {
            let x = h.derivative(lie, p, Flavor::D2Add)?;
            pair(&expm(&x.scale_re(t))? * &c[0], c[1].clone())
        }
        (Space::Cotangent, Family::Pi1) => {
            let x = h.derivative(lie, p, Flavor::Nabla1)?;
            pair(c[0].clone(), &c[1] - &x.scale_re(t))
        }
        (Space::HeisenbergGB, Family::Pi2) => {
            let x = h.derivative(lie, p, Flavor::D2)?;
            pair(&expm(&x.scale_re(t))? * &c[0], c[1].clone())
        }
        (Space::HeisenbergGB, Family::Pi1) => {
            let (beta, gamma) = heis_factorization(lie, h, p, t)?;
            pair(&(&gamma * &c[0]) * &gamma.adjoint(), &beta.upper_inverse()? * &c[1])
        }
        (Space::HeisenbergK, _) => {
            let inner = heis_inner(h)?;
            let gb = to_gb_model(p)?;
            let factor = match family {
                Family::Pi2 => expm(&inner.derivative(lie, &gb, Flavor::D2)?.scale_re(-t))?,
                Family::Pi1 => heis_factorization(lie, inner, &gb, t)?.0,
            };
            Ok(PhasePoint::new(Space::HeisenbergK, vec![&c[0] * &factor]))
        }
        (Space::Quasi, Family::Pi2) => {
            let x = h.derivative(lie, p, Flavor::Nabla2)?;
            pair(&c[0] * &expm(&x.scale_re(-t))?, c[1].clone())
        }
        (Space::Quasi, Family::Pi1) => {
            let x = h.derivative(lie, p, Flavor::Nabla1)?;
            pair(c[0].clone(), &c[1] * &expm(&x.scale_re(t))?)
        }
        _ => Err(Error::Usage(format!("no exact flow on {}", p.space))),
    }
}

/// The seven reduced evolution equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReducedSystem {
    /// (Q, J): Q̇ = (dφ)₀Q, J̇ = [R(Q)dφ, J].
    #[serde(rename = "redeq1")]
    Redeq1,
    /// (g, λ): ġ = [g, r(λ)∇h], λ̇ = −(∇h)₀.
    #[serde(rename = "redeq2")]
    Redeq2,
    /// (Q, b): Q̇ = (Dφ)₀Q, ḃ = b(b⁻¹(R(Q)Dφ)b)_𝔅.
    #[serde(rename = "REDeq1")]
    REDeq1,
    /// (Q, L): Q̇ = (𝒟φ̃)₀Q, L̇ = [R(Q)𝒟φ̃, L].
    #[serde(rename = "REDeq1+")]
    REDeq1Plus,
    /// (g, P): ġ = 2[g, R(P)(i∇h)], Ṗ = −2i(∇h)₀P.
    #[serde(rename = "REDeq2")]
    REDeq2,
    /// (Q, g): Q̇ = −(∇φ)₀Q, ġ = [g, R(Q)∇φ].
    #[serde(rename = "qredeq")]
    Qredeq,
    /// (g, Q): Q̇ = (∇φ)₀Q, ġ = −[g, R(Q)∇φ].
    #[serde(rename = "qredeqprime")]
    QredeqPrime,
}

impl ReducedSystem {
    pub const ALL: [ReducedSystem; 7] = [
        ReducedSystem::Redeq1,
        ReducedSystem::Redeq2,
        ReducedSystem::REDeq1,
        ReducedSystem::REDeq1Plus,
        ReducedSystem::REDeq2,
        ReducedSystem::Qredeq,
        ReducedSystem::QredeqPrime,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            ReducedSystem::Redeq1 => "redeq1",
            ReducedSystem::Redeq2 => "redeq2",
            ReducedSystem::REDeq1 => "REDeq1",
            ReducedSystem::REDeq1Plus => "REDeq1+",
            ReducedSystem::REDeq2 => "REDeq2",
            ReducedSystem::Qredeq => "qredeq",
            ReducedSystem::QredeqPrime => "qredeqprime",
        }
    }

    pub fn slice(&self) -> Space {
        match self {
            ReducedSystem::Redeq1 => Space::RedCot1,
            ReducedSystem::Redeq2 => Space::RedCot2,
            ReducedSystem::REDeq1 | ReducedSystem::REDeq1Plus => Space::RedHeis1,
            ReducedSystem::REDeq2 => Space::RedHeis2,
            ReducedSystem::Qredeq => Space::RedQuasi,
            ReducedSystem::QredeqPrime => Space::RedQuasiPrime,
        }
    }

    pub fn family(&self) -> Family {
        match self {
            ReducedSystem::Redeq1 | ReducedSystem::REDeq1 | ReducedSystem::REDeq1Plus | ReducedSystem::Qredeq => Family::Pi2,
            ReducedSystem::Redeq2 | ReducedSystem::REDeq2 | ReducedSystem::QredeqPrime => Family::Pi1,
        }
    }

    /// Default system on a slice; red_heis_1 uses the (Q, L) variables.
    pub fn for_slice(space: Space) -> Result<ReducedSystem> {
        Ok(match space {
            Space::RedCot1 => ReducedSystem::Redeq1,
            Space::RedCot2 => ReducedSystem::Redeq2,
            Space::RedHeis1 => ReducedSystem::REDeq1Plus,
            Space::RedHeis2 => ReducedSystem::REDeq2,
            Space::RedQuasi => ReducedSystem::Qredeq,
            Space::RedQuasiPrime => ReducedSystem::QredeqPrime,
            other => return Err(Error::Schema(format!("{other} is not a reduced slice"))),
        })
    }

    fn shapes(&self) -> [Shape; 2] {
        use Shape::*;
        match self {
            ReducedSystem::Redeq1 => [Torus, AntiHerm],
            ReducedSystem::Redeq2 => [Unitary, Cartan],
            ReducedSystem::REDeq1 => [Torus, Triangular],
            ReducedSystem::REDeq1Plus => [Torus, Hermitian],
            ReducedSystem::REDeq2 => [Unitary, PosDiag],
            ReducedSystem::Qredeq => [Torus, Unitary],
            ReducedSystem::QredeqPrime => [Unitary, Torus],
        }
    }
}

impl std::fmt::Display for ReducedSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for ReducedSystem {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ReducedSystem::ALL
            .iter()
            .copied()
            .find(|r| r.tag() == s)
            .ok_or_else(|| Error::Schema(format!("unknown reduced system {s:?}")))
    }
}

/// Integration variables of a reduced system, from a slice point.
pub fn state_of(system: ReducedSystem, p: &PhasePoint) -> Result<Vec<MatC>> {
    p.expect(system.slice())?;
    let c = &p.components;
    Ok(match system {
        ReducedSystem::REDeq1Plus => vec![c[0].clone(), nu(&c[1])],
        ReducedSystem::REDeq2 => vec![c[0].clone(), &c[1] * &c[1]],
        _ => c.clone(),
    })
}

/// Slice point of a state of the integration variables.
///
/// Intermediate RK stages leave the torus and the Hermitian matrices at
/// O(dt²); the point is read off the nearest structured matrices so that the
/// right-hand side stays tangent.
pub fn point_of(system: ReducedSystem, state: &[MatC]) -> Result<PhasePoint> {
    let unit = |m: &MatC| MatC::from_diag(&m.diag().iter().map(|v| v / v.norm()).collect::<Vec<_>>());
    let mut state = state.to_vec();
    for (m, shape) in state.iter_mut().zip(system.shapes()) {
        if shape == Shape::Torus {
            *m = unit(m);
        }
    }
    let comps = match system {
        ReducedSystem::REDeq1Plus => vec![state[0].clone(), nu_inv(&(&state[1] + &state[1].adjoint()).scale_re(0.5))?],
        ReducedSystem::REDeq2 => {
            let d = state[1].diag();
            if d.iter().any(|v| v.re <= 0.0) {
                return Err(Error::Regularity("P left the positive diagonal".into()));
            }
            vec![state[0].clone(), MatC::from_real_diag(&d.iter().map(|v| v.re.sqrt()).collect::<Vec<_>>())]
        }
        _ => state,
    };
    Ok(PhasePoint::new(system.slice(), comps))
}

/// Right-hand side of a reduced evolution equation in its integration variables.
pub fn reduced_rhs(lie: &LieData, system: ReducedSystem, h: &Observable, p: &PhasePoint) -> Result<Vec<MatC>> {
    p.expect(system.slice())?;
    let c = &p.components;
    let d = h.derivs(lie, p)?;
    Ok(match system {
        ReducedSystem::Redeq1 => {
            let x = d.flavor(Flavor::D2Add)?;
            let y = ROperator::RQ(c[0].clone()).apply(&x)?;
            vec![&x.diag_part() * &c[0], y.commutator(&c[1])]
        }
        ReducedSystem::Redeq2 => {
            let x = d.flavor(Flavor::Nabla1)?;
            let y = ROperator::RLambda(c[1].clone()).apply(&x)?;
            vec![c[0].commutator(&y), -&x.diag_part()]
        }
        ReducedSystem::REDeq1 => {
            let x = d.flavor(Flavor::D2)?;
            let y = ROperator::RQ(c[0].clone()).apply(&x)?;
            let b = &c[1];
            let inner = &(&b.upper_inverse()? * &y) * b;
            vec![&x.diag_part() * &c[0], b * &lie.proj_b(&inner)]
        }
        ReducedSystem::REDeq1Plus => {
            let x = d.flavor(Flavor::ScriptD)?;
            let y = ROperator::RQ(c[0].clone()).apply(&x)?;
            vec![&x.diag_part() * &c[0], y.commutator(&nu(&c[1]))]
        }
        ReducedSystem::REDeq2 => {
            let x = d.flavor(Flavor::Nabla1)?;
            let y = ROperator::RGamma2(c[1].clone()).apply(&x.scale(I))?;
            let pmat = &c[1] * &c[1];
            vec![c[0].commutator(&y).scale_re(2.0), &x.diag_part().scale(C64::new(0.0, -2.0)) * &pmat]
        }
        ReducedSystem::Qredeq => {
            let x = d.flavor(Flavor::Nabla2)?;
            let y = ROperator::RQ(c[0].clone()).apply(&x)?;
            vec![-&(&x.diag_part() * &c[0]), c[1].commutator(&y)]
        }
        ReducedSystem::QredeqPrime => {
            let x = d.flavor(Flavor::Nabla1)?;
            let y = ROperator::RQ(c[1].clone()).apply(&x)?;
            vec![-&c[0].commutator(&y), &x.diag_part() * &c[1]]
        }
    })
}

/// Structural type of one integration variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shape {
    Unitary,
    Torus,
    AntiHerm,
    Cartan,
    Triangular,
    Hermitian,
    PosDiag,
}

fn det_defect(lie: &LieData, m: &MatC) -> f64 {
    match lie.variant {
        Variant::Su => (m.det() - C64::new(1.0, 0.0)).norm(),
        Variant::U => 0.0,
    }
}

/// Divides by the n-th root of the determinant (principal branch) in su.
fn fix_det(lie: &LieData, m: MatC) -> MatC {
    match lie.variant {
        Variant::Su => {
            let det = m.det();
            let root = C64::from_polar(det.norm().powf(1.0 / lie.n as f64), det.arg() / lie.n as f64);
            m.scale(root.inv())
        }
        Variant::U => m,
    }
}

fn shape_defect(lie: &LieData, shape: Shape, m: &MatC) -> f64 {
    let offdiag = lie.proj_perp(m).frob_norm();
    match shape {
        Shape::Unitary => m.unitarity_defect() + det_defect(lie, m),
        Shape::Torus => offdiag + m.diag().iter().map(|v| (v.norm() - 1.0).abs()).sum::<f64>() + det_defect(lie, m),
        Shape::AntiHerm => lie.membership_defect(m, Subspace::G),
        Shape::Cartan => lie.membership_defect(m, Subspace::G0),
        Shape::Triangular => {
            lie.strict_lower(m).frob_norm() + m.diag().iter().map(|v| v.im.abs()).sum::<f64>()
        }
        Shape::Hermitian => m.hermiticity_defect(),
        Shape::PosDiag => offdiag + m.diag().iter().map(|v| v.im.abs()).sum::<f64>(),
    }
}

fn restore_shape(lie: &LieData, shape: Shape, m: &MatC) -> Result<MatC> {
    Ok(match shape {
        Shape::Unitary => fix_det(lie, polar_unitary(m)?),
        Shape::Torus => fix_det(lie, MatC::from_diag(&m.diag().iter().map(|v| v / v.norm()).collect::<Vec<_>>())),
        Shape::AntiHerm => lie.antiherm(m),
        Shape::Cartan => lie.proj_g0(m),
        Shape::Triangular => {
            m.map_indexed(|j, k, v| if j < k { v } else if j == k { C64::new(v.re, 0.0) } else { C64::new(0.0, 0.0) })
        }
        Shape::Hermitian => (m + &m.adjoint()).scale_re(0.5),
        Shape::PosDiag => MatC::from_real_diag(&m.diag().iter().map(|v| v.re).collect::<Vec<_>>()),
    })
}

/// When to re-impose the structure of the integration variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RestorePolicy {
    pub enabled: bool,
    /// Restoration happens only when the structural residual exceeds this.
    pub threshold: f64,
}

impl Default for RestorePolicy {
    fn default() -> Self {
        RestorePolicy { enabled: true, threshold: crate::config::tolerances().restore }
    }
}

/// What to run: space, Hamiltonian, time grid and integration policy.
#[derive(Debug, Clone)]
pub struct FlowSpec {
    pub space: Space,
    pub family: Family,
    pub hamiltonian: Observable,
    pub t_max: f64,
    pub dt: f64,
    /// Record every `stride`-th step (and the last one).
    pub stride: usize,
    pub restore: RestorePolicy,
    /// On red_heis_1, selects REDeq1 instead of the default (Q, L) form.
    pub system: Option<ReducedSystem>,
    pub seed: Option<u64>,
}

impl FlowSpec {
    pub fn new(space: Space, family: Family, hamiltonian: Observable, t_max: f64, dt: f64) -> Self {
        FlowSpec { space, family, hamiltonian, t_max, dt, stride: 1, restore: RestorePolicy::default(), system: None, seed: None }
    }

    /// Number of steps; t_max must be a multiple of dt.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) || !(self.t_max >= 0.0 && self.t_max.is_finite()) {
            return Err(Error::Schema("dt must be positive and t_max non-negative".into()));
        }
        if self.stride == 0 {
            return Err(Error::Schema("stride must be at least 1".into()));
        }
        let steps = (self.t_max / self.dt).round();
        if (steps * self.dt - self.t_max).abs() > 1e-9 * self.t_max.max(self.dt) {
            return Err(Error::Schema("t_max must be a multiple of dt".into()));
        }
        Ok(steps as usize)
    }

    /// The reduced system this spec selects, checked against space and family.
    pub fn reduced_system(&self) -> Result<ReducedSystem> {
        let system = match self.system {
            Some(s) => s,
            None => ReducedSystem::for_slice(self.space)?,
        };
        if system.slice() != self.space {
            return Err(Error::Schema(format!("{system} lives on {}, not {}", system.slice(), self.space)));
        }
        if system.family() != self.family {
            return Err(Error::Schema(format!("{} carries the {} family, not {}", self.space, system.family(), self.family)));
        }
        Ok(system)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Form {
    Unreduced,
    Reduced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub space: Space,
    pub form: Form,
    pub family: Family,
    pub system: Option<ReducedSystem>,
    pub n: usize,
    pub variant: Variant,
    pub hamiltonian: String,
    pub dt: f64,
    pub t_max: f64,
    pub stride: usize,
    pub seed: Option<u64>,
    pub restore: RestorePolicy,
    /// Number of steps after which structure was re-imposed.
    pub restorations: usize,
}

/// Scalars recorded at each sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub hamiltonian: f64,
    pub structure_defect: f64,
    /// Values of the gauge-invariant panel of the space.
    pub panel: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Abort {
    pub t: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub meta: TrajectoryMeta,
    pub times: Vec<f64>,
    pub points: Vec<PhasePoint>,
    pub diagnostics: Vec<Diagnostics>,
    /// Set when integration stopped early; the samples end at the last good state.
    pub abort: Option<Abort>,
}

impl Trajectory {
    fn new(lie: &LieData, spec: &FlowSpec, form: Form, system: Option<ReducedSystem>) -> Self {
        Trajectory {
            meta: TrajectoryMeta {
                space: spec.space,
                form,
                family: spec.family,
                system,
                n: lie.n,
                variant: lie.variant,
                hamiltonian: format!("{:?}", spec.hamiltonian),
                dt: spec.dt,
                t_max: spec.t_max,
                stride: spec.stride,
                seed: spec.seed,
                restore: spec.restore,
                restorations: 0,
            },
            times: Vec::new(),
            points: Vec::new(),
            diagnostics: Vec::new(),
            abort: None,
        }
    }

    fn record(&mut self, lie: &LieData, t: f64, p: PhasePoint, h: &Observable) -> Result<()> {
        let diag = Diagnostics { hamiltonian: h.value(&p)?, structure_defect: p.structure_defect(lie), panel: panel_values(&p)? };
        self.times.push(t);
        self.points.push(p);
        self.diagnostics.push(diag);
        Ok(())
    }

    /// Errors if the run was cut short.
    pub fn completed(self) -> Result<Trajectory> {
        match &self.abort {
            None => Ok(self),
            Some(a) => Err(Error::Regularity(format!("integration stopped at t = {}: {}", a.t, a.reason))),
        }
    }

    /// Largest |H(t) − H(0)| over the samples.
    pub fn energy_drift(&self) -> f64 {
        let h0 = self.diagnostics.first().map_or(0.0, |d| d.hamiltonian);
        self.diagnostics.iter().map(|d| (d.hamiltonian - h0).abs()).fold(0.0, f64::max)
    }

    /// CSV of time, Hamiltonian, structure residual and panel values.
    pub fn diagnostics_csv(&self) -> String {
        let width = self.diagnostics.first().map_or(0, |d| d.panel.len());
        let mut out = String::from("t,hamiltonian,structure_defect");
        for k in 0..width {
            out.push_str(&format!(",panel_{k}"));
        }
        out.push('\n');
        for (t, d) in self.times.iter().zip(&self.diagnostics) {
            out.push_str(&format!("{t},{},{}", d.hamiltonian, d.structure_defect));
            for v in &d.panel {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Samples the exact flow from p0 on the time grid of `spec`.
pub fn simulate_exact(lie: &LieData, spec: &FlowSpec, p0: &PhasePoint) -> Result<Trajectory> {
    let steps = spec.steps()?;
    if spec.space.is_reduced() {
        return Err(Error::Schema(format!("{} is a reduced slice; exact flows run on unreduced spaces", spec.space)));
    }
    p0.expect(spec.space)?;
    p0.validate(lie)?;
    check_hamiltonian(spec.family, &spec.hamiltonian, p0)?;
    let mut traj = Trajectory::new(lie, spec, Form::Unreduced, None);
    for k in (0..=steps).filter(|k| k % spec.stride == 0 || *k == steps) {
        let t = k as f64 * spec.dt;
        let p = flow_unchecked(lie, spec.family, &spec.hamiltonian, p0, t)?;
        traj.record(lie, t, p, &spec.hamiltonian)?;
    }
    Ok(traj)
}

fn axpy(state: &[MatC], k: &[MatC], a: f64) -> Vec<MatC> {
    state.iter().zip(k).map(|(s, d)| s + &d.scale_re(a)).collect()
}

fn rk4_step(lie: &LieData, system: ReducedSystem, h: &Observable, state: &[MatC], dt: f64) -> Result<Vec<MatC>> {
    let f = |s: &[MatC]| reduced_rhs(lie, system, h, &point_of(system, s)?);
    let k1 = f(state)?;
    let k2 = f(&axpy(state, &k1, dt / 2.0))?;
    let k3 = f(&axpy(state, &k2, dt / 2.0))?;
    let k4 = f(&axpy(state, &k3, dt))?;
    let mut out = state.to_vec();
    for j in 0..out.len() {
        let incr = &(&k1[j] + &k2[j].scale_re(2.0)) + &(&k3[j].scale_re(2.0) + &k4[j]);
        out[j] += &incr.scale_re(dt / 6.0);
    }
    Ok(out)
}

/// Classical RK4 of the reduced system selected by `spec`, from a slice point.
///
/// A regularity failure stops the run; the trajectory then ends at the last
/// good state and carries an [`Abort`] record.
pub fn integrate(lie: &LieData, spec: &FlowSpec, p0: &PhasePoint) -> Result<Trajectory> {
    let system = spec.reduced_system()?;
    let steps = spec.steps()?;
    p0.expect(system.slice())?;
    p0.validate(lie)?;
    check_hamiltonian(system.family(), &spec.hamiltonian, p0)?;
    let shapes = system.shapes();
    let mut traj = Trajectory::new(lie, spec, Form::Reduced, Some(system));
    traj.record(lie, 0.0, p0.clone(), &spec.hamiltonian)?;
    let mut state = state_of(system, p0)?;
    for k in 1..=steps {
        let t = k as f64 * spec.dt;
        let step = rk4_step(lie, system, &spec.hamiltonian, &state, spec.dt).and_then(|mut next| {
            if spec.restore.enabled {
                let worst = next.iter().zip(shapes).map(|(m, s)| shape_defect(lie, s, m)).fold(0.0, f64::max);
                if worst > spec.restore.threshold {
                    for (m, s) in next.iter_mut().zip(shapes) {
                        *m = restore_shape(lie, s, m)?;
                    }
                    traj.meta.restorations += 1;
                }
            }
            let p = point_of(system, &next)?;
            let slot = system.slice().diagonal_slot().expect("slice");
            lie.require_regular(p.c(slot), regular_kind(system.slice()))?;
            Ok((next, p))
        });
        match step {
            Ok((next, p)) => {
                state = next;
                if k % spec.stride == 0 || k == steps {
                    traj.record(lie, t, p, &spec.hamiltonian)?;
                }
            }
            Err(e) => {
                traj.abort = Some(Abort { t, reason: e.to_string() });
                return Ok(traj);
            }
        }
    }
    Ok(traj)
}

/// Letter lists of the invariant panel, per unreduced family.
fn panel_words(space: Space) -> Vec<(&'static [&'static str], Part)> {
    use Part::{Im, Re};
    match space.parent() {
        Space::Cotangent => vec![
            (&["g"][..], Re),
            (&["g"], Im),
            (&["J", "J"], Re),
            (&["g", "J"], Re),
            (&["g", "J"], Im),
            (&["g", "J", "J"], Re),
            (&["g", "J", "J"], Im),
            (&["g", "g", "J"], Re),
            (&["g", "g", "J"], Im),
            (&["g", "J", "g", "J"], Re),
            (&["g", "g"], Re),
            (&["g", "g"], Im),
        ],
        Space::HeisenbergGB | Space::HeisenbergK => vec![
            (&["g"][..], Re),
            (&["g"], Im),
            (&["L"], Re),
            (&["L", "L"], Re),
            (&["g", "L"], Re),
            (&["g", "L"], Im),
            (&["g", "L", "L"], Re),
            (&["g", "g", "L"], Re),
            (&["g", "g", "L"], Im),
            (&["g", "L", "ginv", "L"], Re),
            (&["g", "Linv"], Re),
            (&["g", "Linv"], Im),
        ],
        _ => vec![
            (&["g1"][..], Re),
            (&["g1"], Im),
            (&["g2"], Re),
            (&["g2"], Im),
            (&["g1", "g2"], Re),
            (&["g1", "g2"], Im),
            (&["g1", "g1", "g2"], Re),
            (&["g1", "g1", "g2"], Im),
            (&["g1", "g2", "g2"], Re),
            (&["g1", "g2", "g2"], Im),
            (&["g1", "g2", "g1inv", "g2inv"], Re),
            (&["g1", "g2", "g1inv", "g2inv"], Im),
        ],
    }
}

/// Conjugation-invariant trace words of the space, constant on gauge orbits.
pub fn panel(space: Space) -> Vec<Observable> {
    let target = if space == Space::HeisenbergK { space } else { space.parent() };
    panel_words(space).into_iter().map(|(letters, part)| word(target, letters, part, 1.0).expect("panel words are valid")).collect()
}

pub fn panel_values(p: &PhasePoint) -> Result<Vec<f64>> {
    panel(p.space).iter().map(|o| o.value(p)).collect()
}

/// Largest componentwise difference of two panels.
pub fn panel_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// A point moved onto a slice, the full gauge used, and the normalizer part of it.
#[derive(Debug, Clone)]
pub struct GaugeFix {
    pub point: PhasePoint,
    /// η with point = act(η, p).
    pub eta: MatC,
    /// Normalizer element applied after the canonical (sorted) diagonalization.
    pub residual: GaugeElement,
}

fn regular_kind(slice: Space) -> RegularKind {
    match slice {
        Space::RedCot2 => RegularKind::Cartan,
        Space::RedHeis2 => RegularKind::B0,
        _ => RegularKind::Torus,
    }
}

/// Replaces the diagonal slot by its exact diagonal shape.
fn clean_slice(lie: &LieData, p: PhasePoint) -> Result<PhasePoint> {
    let slot = p.space.diagonal_slot().expect("slice");
    let d = p.c(slot).diag();
    let clean = match p.space {
        Space::RedCot2 => lie.proj_g0(p.c(slot)),
        Space::RedHeis2 => MatC::from_real_diag(&d.iter().map(|v| v.re).collect::<Vec<_>>()),
        _ => MatC::from_diag(&d.iter().map(|v| v / v.norm()).collect::<Vec<_>>()),
    };
    let mut out = p;
    out.components[slot] = clean;
    lie.require_regular(out.c(slot), regular_kind(out.space))?;
    Ok(out)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Permutation with d[perm j] closest to target[j]; exhaustive up to n = 7, greedy beyond.
fn match_permutation(d: &[C64], target: &[C64]) -> Vec<usize> {
    let n = d.len();
    let cost = |perm: &[usize]| perm.iter().enumerate().map(|(j, &k)| (d[k] - target[j]).norm()).sum::<f64>();
    if n <= 7 {
        permutations(n).into_iter().min_by(|a, b| cost(a).total_cmp(&cost(b))).expect("nonempty")
    } else {
        let mut used = vec![false; n];
        (0..n)
            .map(|j| {
                let k = (0..n).filter(|&k| !used[k]).min_by(|&a, &b| (d[a] - target[j]).norm().total_cmp(&(d[b] - target[j]).norm())).unwrap();
                used[k] = true;
                k
            })
            .collect()
    }
}

/// Phases e^{iθ} with e^{i(θ_j − θ_k)}x_jk ≈ y_jk, fixed along a maximum-weight spanning tree.
fn match_phases(x: &MatC, y: &MatC) -> Vec<C64> {
    let n = x.n();
    let z = |j: usize, k: usize| x[(j, k)] * y[(j, k)].conj() + y[(k, j)] * x[(k, j)].conj();
    let mut phases = vec![C64::new(1.0, 0.0); n];
    let mut known = vec![false; n];
    known[0] = true;
    for _ in 1..n {
        let mut best: Option<(f64, usize, usize)> = None;
        for j in (0..n).filter(|&j| known[j]) {
            for k in (0..n).filter(|&k| !known[k]) {
                let w = z(j, k).norm();
                if best.is_none_or(|(bw, _, _)| w > bw) {
                    best = Some((w, j, k));
                }
            }
        }
        let (w, j, k) = best.expect("unknown node remains");
        known[k] = true;
        phases[k] = if w > 1e-300 { phases[j] * z(j, k) / w } else { C64::new(1.0, 0.0) };
    }
    phases
}

fn normalize_gauge(lie: &LieData, mut g: GaugeElement) -> GaugeElement {
    if lie.variant == Variant::Su {
        let det = g.matrix().det();
        let c = C64::from_polar(1.0, -det.arg() / lie.n as f64);
        g.phases.iter_mut().for_each(|p| *p *= c);
    }
    g
}

/// Moves p onto `slice` by the group action; with `prev`, picks the normalizer
/// element that lands nearest to `prev`.
pub fn gauge_fix(lie: &LieData, slice: Space, p: &PhasePoint, prev: Option<&PhasePoint>) -> Result<GaugeFix> {
    let slot = slice.diagonal_slot().ok_or_else(|| Error::Usage(format!("{slice} is not a slice")))?;
    let mut q = p.lift();
    if q.space == Space::HeisenbergK && slice.parent() == Space::HeisenbergGB {
        q = to_gb_model(&q)?;
    }
    q.expect(slice.parent())?;
    let c = &q.components;
    let eta0 = match slice {
        Space::RedCot1 | Space::RedHeis1 | Space::RedQuasi => diagonalizing_gauge(&c[0])?.0,
        Space::RedQuasiPrime => diagonalizing_gauge(&c[1])?.0,
        Space::RedCot2 => eig_herm(&c[1].scale(I))?.1.adjoint(),
        Space::RedHeis2 => eig_herm(&nu(&c[1]))?.1.adjoint(),
        _ => unreachable!("slice"),
    };
    let eta0 = fix_det(lie, eta0);
    let p1 = clean_slice(lie, act(&eta0, &q)?.with_space(slice))?;
    let residual = match prev {
        None => GaugeElement::identity(lie.n),
        Some(prev) => {
            prev.expect(slice)?;
            let perm = match_permutation(&p1.c(slot).diag(), &prev.c(slot).diag());
            let perm_el = GaugeElement { perm, phases: vec![C64::new(1.0, 0.0); lie.n] };
            let p2 = act_gauge(&perm_el, &p1)?;
            let phases = match_phases(p2.c(1 - slot), prev.c(1 - slot));
            let phase_el = GaugeElement { perm: (0..lie.n).collect(), phases };
            normalize_gauge(lie, phase_el.compose(&perm_el))
        }
    };
    let point = clean_slice(lie, act_gauge(&residual, &p1)?)?;
    Ok(GaugeFix { point, eta: &residual.matrix() * &eta0, residual })
}

/// Outcome of comparing the reduced integration with the gauge-fixed exact flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionReport {
    pub system: ReducedSystem,
    pub times: Vec<f64>,
    /// Panel discrepancy per sample.
    pub panel_deviation: Vec<f64>,
    /// Primary metric: max panel discrepancy.
    pub panel_max: f64,
    /// Diagnostic: slice-coordinate distance after matching the normalizer ambiguity.
    pub coordinate_max: f64,
    /// Smallest root gap of the diagonal coordinate over the samples.
    pub min_gap: f64,
    pub restorations: usize,
}

/// Smallest root gap of the diagonal coordinate of a slice point, measured as
/// in the regularity check (chords on the torus, log-differences for Γ).
pub fn slice_gap(p: &PhasePoint) -> Result<f64> {
    let slot = p.space.diagonal_slot().ok_or_else(|| Error::Usage(format!("{} is not a slice", p.space)))?;
    let d = p.c(slot).diag();
    let vals: Vec<C64> = if p.space == Space::RedHeis2 { d.iter().map(|v| C64::new(v.re.ln(), 0.0)).collect() } else { d };
    let mut gap = f64::INFINITY;
    for j in 0..vals.len() {
        for k in j + 1..vals.len() {
            gap = gap.min((vals[j] - vals[k]).norm());
        }
    }
    Ok(gap)
}

/// Runs the reduced system and the exact flow from the same slice point and
/// compares them sample by sample.
pub fn projection_check(
    lie: &LieData,
    system: ReducedSystem,
    h: &Observable,
    p0: &PhasePoint,
    t_max: f64,
    dt: f64,
    stride: usize,
) -> Result<ProjectionReport> {
    let mut spec = FlowSpec::new(system.slice(), system.family(), h.clone(), t_max, dt);
    spec.stride = stride;
    spec.system = Some(system);
    let reduced = integrate(lie, &spec, p0)?.completed()?;
    let lift = p0.lift();
    check_hamiltonian(system.family(), h, &lift)?;
    let mut report = ProjectionReport {
        system,
        times: reduced.times.clone(),
        panel_deviation: Vec::new(),
        panel_max: 0.0,
        coordinate_max: 0.0,
        min_gap: f64::INFINITY,
        restorations: reduced.meta.restorations,
    };
    for ((t, rp), rd) in reduced.times.iter().zip(&reduced.points).zip(&reduced.diagnostics) {
        report.min_gap = report.min_gap.min(slice_gap(rp)?);
        let exact = flow_unchecked(lie, system.family(), h, &lift, *t)?;
        let dev = panel_distance(&panel_values(&exact)?, &rd.panel);
        report.panel_deviation.push(dev);
        report.panel_max = report.panel_max.max(dev);
        let fixed = gauge_fix(lie, system.slice(), &exact, Some(rp))?;
        report.coordinate_max = report.coordinate_max.max(fixed.point.dist(rp));
    }
    Ok(report)
}

/// Residual of the equivariance of the B-derivatives of an invariant φ under
/// dressing, and of the transport of its integral curves by the simple action.
pub fn dressing_equivariance_defect(lie: &LieData, phi: &Observable, eta: &MatC, p: &PhasePoint, t: f64) -> Result<f64> {
    p.expect(Space::HeisenbergGB)?;
    let moved = act(eta, p)?;
    let d0 = phi.derivs(lie, p)?;
    let d1 = phi.derivs(lie, &moved)?;
    let xi = xi_r(&(eta * p.c(1)))?;
    let r1 = d1.flavor(Flavor::D2p)?.dist(&(&(&xi.adjoint() * &d0.flavor(Flavor::D2p)?) * &xi));
    let r2 = d1.flavor(Flavor::D2)?.dist(&(&(eta * &d0.flavor(Flavor::D2)?) * &eta.adjoint()));
    let curve = act(eta, &exact_flow(lie, Family::Pi2, phi, p, t)?)?;
    let r3 = curve.dist(&exact_flow(lie, Family::Pi2, phi, &moved, t)?);
    Ok(r1.max(r2).max(r3))
}

/// Residual of the formula for the π₁-curve through a transformed initial
/// value: it equals the simple action of Ξ_R(ηβ(t))⁻¹ on the original curve.
pub fn transformed_curve_defect(lie: &LieData, h: &Observable, eta: &MatC, p: &PhasePoint, t: f64) -> Result<f64> {
    p.expect(Space::HeisenbergGB)?;
    let (beta, _) = heis_factorization(lie, h, p, t)?;
    let xi = xi_r(&(eta * &beta))?;
    let predicted = act(&xi.adjoint(), &exact_flow(lie, Family::Pi1, h, p, t)?)?;
    let actual = exact_flow(lie, Family::Pi1, h, &act(eta, p)?, t)?;
    Ok(predicted.dist(&actual))
}

/// Distance between the K-model flow and the G×B flow mapped through m⁻¹.
pub fn model_consistency_defect(lie: &LieData, family: Family, h_gb: &Observable, p: &PhasePoint, t: f64) -> Result<f64> {
    p.expect(Space::HeisenbergGB)?;
    let hk = h_gb.clone().pullback(PointMap::Model);
    let via_gb = to_k_model(&exact_flow(lie, family, h_gb, p, t)?)?;
    let via_k = exact_flow(lie, family, &hk, &to_k_model(p)?, t)?;
    Ok(via_gb.c(0).dist(via_k.c(0)) / via_k.c(0).frob_norm().max(1.0))
}

/// Tangent of the π₁ Heisenberg curve predicted from the current point:
/// ġ = [(i∇h)_𝔊, g], ḃ = (−i∇h)_𝔅·b.
pub fn heis_pi1_velocity(lie: &LieData, h: &Observable, p: &PhasePoint) -> Result<(MatC, MatC)> {
    p.expect(Space::HeisenbergGB)?;
    let x = h.derivative(lie, p, Flavor::Nabla1)?.scale(I);
    let gdot = lie.proj_g(&x).commutator(p.c(0));
    let bdot = &lie.proj_b(&-&x) * p.c(1);
    Ok((gdot, bdot))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brackets::{bracket, BracketKind};
    use crate::observables::WordSpec;
    use crate::sample;

    fn su(n: usize) -> LieData {
        LieData::su(n)
    }

    fn ham(space: Space, letters: &[&str], part: Part, coeff: f64) -> Observable {
        word(space, letters, part, coeff).unwrap()
    }

    /// A family Hamiltonian for each unreduced space.
    fn hamiltonians(space: Space, family: Family) -> Vec<Observable> {
        match (space.parent(), family) {
            (Space::Cotangent, Family::Pi2) => vec![ham(space, &["J", "J"], Part::Re, -0.5), ham(space, &["J", "J", "J"], Part::Im, 0.3)],
            (Space::Cotangent, Family::Pi1) => vec![ham(space, &["g"], Part::Re, 1.0), ham(space, &["g", "g"], Part::Im, 0.4)],
            (Space::HeisenbergGB, Family::Pi2) | (Space::HeisenbergK, Family::Pi2) => {
                vec![ham(space, &["L"], Part::Re, 0.5), ham(space, &["L", "L"], Part::Re, 0.2)]
            }
            (Space::HeisenbergGB, Family::Pi1) | (Space::HeisenbergK, Family::Pi1) => {
                vec![ham(space, &["g"], Part::Re, 1.0), ham(space, &["g", "g"], Part::Im, 0.5)]
            }
            (_, Family::Pi2) => vec![ham(space, &["g2"], Part::Re, 1.0), ham(space, &["g2", "g2"], Part::Im, 0.5)],
            (_, Family::Pi1) => vec![ham(space, &["g1"], Part::Re, 1.0), ham(space, &["g1", "g1"], Part::Im, 0.5)],
        }
    }

    const UNREDUCED: [Space; 4] = [Space::Cotangent, Space::HeisenbergGB, Space::HeisenbergK, Space::Quasi];

    #[test]
    fn zero_time_is_identity() {
        let lie = su(3);
        let mut r = sample::rng(1);
        for space in UNREDUCED {
            for fam in [Family::Pi1, Family::Pi2] {
                let p = sample::point(&mut r, &lie, space, 0.6, 0.3);
                let h = &hamiltonians(space, fam)[0];
                assert!(exact_flow(&lie, fam, h, &p, 0.0).unwrap().dist(&p) < 1e-12);
            }
        }
    }

    #[test]
    fn free_motion_on_cotangent() {
        let lie = su(3);
        let mut r = sample::rng(2);
        let p = sample::point(&mut r, &lie, Space::Cotangent, 0.7, 0.3);
        let h = ham(Space::Cotangent, &["J", "J"], Part::Re, -0.5);
        let t = 0.8;
        let q = exact_flow(&lie, Family::Pi2, &h, &p, t).unwrap();
        let want = &expm(&p.c(1).scale_re(-t)).unwrap() * p.c(0);
        assert!(q.c(0).dist(&want) < 1e-12);
        assert!(q.c(1).dist(p.c(1)) < 1e-15);
    }

    #[test]
    fn group_law() {
        let lie = su(3);
        let mut r = sample::rng(3);
        for space in UNREDUCED {
            for fam in [Family::Pi1, Family::Pi2] {
                for h in hamiltonians(space, fam) {
                    let p = sample::point(&mut r, &lie, space, 0.6, 0.3);
                    let (t1, t2) = (0.37, 0.52);
                    let direct = exact_flow(&lie, fam, &h, &p, t1 + t2).unwrap();
                    let composed = exact_flow(&lie, fam, &h, &exact_flow(&lie, fam, &h, &p, t1).unwrap(), t2).unwrap();
                    let scale = direct.components.iter().map(|m| m.frob_norm()).fold(1.0, f64::max);
                    assert!(direct.dist(&composed) / scale < 1e-9, "{space} {fam}: {}", direct.dist(&composed));
                }
            }
        }
    }

    #[test]
    fn wrong_family_is_rejected() {
        let lie = su(2);
        let mut r = sample::rng(4);
        let p = sample::point(&mut r, &lie, Space::Cotangent, 0.6, 0.3);
        let h = ham(Space::Cotangent, &["J", "J"], Part::Re, 1.0);
        assert!(matches!(exact_flow(&lie, Family::Pi1, &h, &p, 0.1), Err(Error::Schema(_))));
        let gb = sample::point(&mut r, &lie, Space::HeisenbergGB, 0.6, 0.3);
        let non_invariant = ham(Space::HeisenbergGB, &["b"], Part::Re, 1.0);
        assert!(matches!(exact_flow(&lie, Family::Pi2, &non_invariant, &gb, 0.1), Err(Error::Schema(_))));
    }

    #[test]
    fn heisenberg_phi_flow_keeps_both_b_factors() {
        let lie = su(3);
        let mut r = sample::rng(5);
        let k = sample::point(&mut r, &lie, Space::HeisenbergK, 0.6, 0.3);
        let h = ham(Space::HeisenbergK, &["L"], Part::Re, 1.0);
        let iw0 = crate::doubles::iwasawa(k.c(0)).unwrap();
        let kt = exact_flow(&lie, Family::Pi2, &h, &k, 0.9).unwrap();
        let iw = crate::doubles::iwasawa(kt.c(0)).unwrap();
        assert!(iw.b_r.dist(&iw0.b_r) < 1e-10);
        assert!(iw.b_l.dist(&iw0.b_l) < 1e-10);
    }

    #[test]
    fn k_and_gb_flows_agree() {
        let mut r = sample::rng(6);
        for lie in [su(2), su(3), LieData::new(3, Variant::U).unwrap()] {
            for fam in [Family::Pi1, Family::Pi2] {
                for h in hamiltonians(Space::HeisenbergGB, fam) {
                    let p = sample::point(&mut r, &lie, Space::HeisenbergGB, 0.5, 0.3);
                    assert!(model_consistency_defect(&lie, fam, &h, &p, 0.7).unwrap() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn pi1_heisenberg_curve_solves_its_equation() {
        let lie = su(3);
        let mut r = sample::rng(7);
        let h = ham(Space::HeisenbergGB, &["g", "g"], Part::Re, 0.7).plus(ham(Space::HeisenbergGB, &["g"], Part::Im, 0.4));
        for _ in 0..5 {
            let p = sample::point(&mut r, &lie, Space::HeisenbergGB, 0.5, 0.3);
            let t = 0.6;
            let eps = 1e-4;
            let at = |s: f64| exact_flow(&lie, Family::Pi1, &h, &p, s).unwrap();
            let (fp, fm) = (at(t + eps), at(t - eps));
            let (fp2, fm2) = (at(t + eps / 2.0), at(t - eps / 2.0));
            let rich = |a: &MatC, b: &MatC, a2: &MatC, b2: &MatC| {
                let d1 = (a - b).scale_re(1.0 / (2.0 * eps));
                let d2 = (a2 - b2).scale_re(1.0 / eps);
                (&d2.scale_re(4.0) - &d1).scale_re(1.0 / 3.0)
            };
            let gdot = rich(fp.c(0), fm.c(0), fp2.c(0), fm2.c(0));
            let bdot = rich(fp.c(1), fm.c(1), fp2.c(1), fm2.c(1));
            let (g_pred, b_pred) = heis_pi1_velocity(&lie, &h, &at(t)).unwrap();
            assert!(gdot.dist(&g_pred) < 1e-7, "{}", gdot.dist(&g_pred));
            assert!(bdot.dist(&b_pred) < 1e-7, "{}", bdot.dist(&b_pred));
        }
    }

    #[test]
    fn cotangent_and_quasi_flows_commute_with_the_action() {
        let lie = su(3);
        let mut r = sample::rng(8);
        for space in [Space::Cotangent, Space::Quasi] {
            for fam in [Family::Pi1, Family::Pi2] {
                for h in hamiltonians(space, fam) {
                    let p = sample::point(&mut r, &lie, space, 0.6, 0.3);
                    let eta = sample::haar_unitary(&mut r, &lie);
                    let a = act(&eta, &exact_flow(&lie, fam, &h, &p, 0.8).unwrap()).unwrap();
                    let b = exact_flow(&lie, fam, &h, &act(&eta, &p).unwrap(), 0.8).unwrap();
                    assert!(a.dist(&b) < 1e-9);
                }
            }
        }
    }

    #[test]
    fn appendix_equivariance_identities() {
        let lie = su(3);
        let mut r = sample::rng(9);
        let phi = ham(Space::HeisenbergGB, &["L", "L"], Part::Re, 0.3).plus(ham(Space::HeisenbergGB, &["Linv"], Part::Re, 0.5));
        let h = ham(Space::HeisenbergGB, &["g"], Part::Re, 1.0).plus(ham(Space::HeisenbergGB, &["g", "g"], Part::Im, 0.5));
        for _ in 0..10 {
            let p = sample::point(&mut r, &lie, Space::HeisenbergGB, 0.5, 0.3);
            let eta = sample::haar_unitary(&mut r, &lie);
            assert!(dressing_equivariance_defect(&lie, &phi, &eta, &p, 0.7).unwrap() < 1e-9);
            assert!(transformed_curve_defect(&lie, &h, &eta, &p, 0.7).unwrap() < 1e-8);
        }
    }

    #[test]
    fn simple_action_does_not_map_pi1_curves_to_curves() {
        let lie = su(3);
        let mut r = sample::rng(10);
        let h = ham(Space::HeisenbergGB, &["g"], Part::Re, 1.0);
        let p = sample::point(&mut r, &lie, Space::HeisenbergGB, 0.5, 0.3);
        let eta = sample::haar_unitary(&mut r, &lie);
        let a = act(&eta, &exact_flow(&lie, Family::Pi1, &h, &p, 0.7).unwrap()).unwrap();
        let b = exact_flow(&lie, Family::Pi1, &h, &act(&eta, &p).unwrap(), 0.7).unwrap();
        assert!(a.dist(&b) > 1e-4);
        assert!(panel_distance(&panel_values(&a).unwrap(), &panel_values(&b).unwrap()) < 1e-9);
    }

    #[test]
    fn family_hamiltonians_commute() {
        let lie = su(3);
        let mut r = sample::rng(11);
        let cases = [
            (Space::Cotangent, BracketKind::PbCotangent),
            (Space::HeisenbergGB, BracketKind::PbFM),
            (Space::HeisenbergK, BracketKind::PbPlus),
            (Space::Quasi, BracketKind::Qpb),
        ];
        for (space, kind) in cases {
            for fam in [Family::Pi1, Family::Pi2] {
                let hs = hamiltonians(space, fam);
                for _ in 0..20 {
                    let p = sample::point(&mut r, &lie, space, 0.5, 0.3);
                    assert!(bracket(&lie, kind, &hs[0], &hs[1], &p).unwrap().abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn zero_hamiltonian_gives_a_constant_trajectory() {
        let lie = su(3);
        let mut r = sample::rng(12);
        for system in ReducedSystem::ALL {
            let p = sample::point(&mut r, &lie, system.slice(), 0.5, 0.5);
            let mut spec = FlowSpec::new(system.slice(), system.family(), Observable::constant(0.0), 0.05, 0.01);
            spec.system = Some(system);
            let traj = integrate(&lie, &spec, &p).unwrap().completed().unwrap();
            assert_eq!(traj.points.len(), 6);
            assert!(traj.points.iter().all(|q| q.dist(&p) < 1e-12), "{system}");
        }
    }

    #[test]
    fn cartan_valued_derivative_leaves_j_fixed() {
        let lie = su(3);
        let q = sample::regular_torus(&mut sample::rng(13), &lie, 0.5);
        let j = MatC::from_diag(&[C64::new(0.0, 0.4), C64::new(0.0, -0.1), C64::new(0.0, -0.3)]);
        let p = PhasePoint::pair(Space::RedCot1, q, j);
        let h = ham(Space::Cotangent, &["J", "J"], Part::Re, -0.5);
        let rhs = reduced_rhs(&lie, ReducedSystem::Redeq1, &h, &p).unwrap();
        assert!(rhs[1].frob_norm() < 1e-15);
    }

    #[test]
    fn diagonal_quasi_point_is_stationary() {
        let lie = su(3);
        let mut r = sample::rng(14);
        let q = sample::regular_torus(&mut r, &lie, 0.5);
        let g = sample::regular_torus(&mut r, &lie, 0.5);
        let p = PhasePoint::pair(Space::RedQuasi, q, g);
        let h = ham(Space::Quasi, &["g2", "g2"], Part::Re, 1.0);
        let rhs = reduced_rhs(&lie, ReducedSystem::Qredeq, &h, &p).unwrap();
        assert!(rhs[1].frob_norm() < 1e-14);
    }

    #[test]
    fn two_site_spin_sutherland_rhs() {
        // n = 2, Q = diag(e^{iθ}, e^{-iθ}), H = −½⟨J,J⟩: dφ = −J and R(Q) multiplies
        // the (1,2) entry by −(i/2)cot θ and the (2,1) entry by (i/2)cot θ.
        let lie = su(2);
        let th = 0.9f64;
        let q = MatC::from_diag(&[C64::from_polar(1.0, th), C64::from_polar(1.0, -th)]);
        let (a, z) = (0.3, C64::new(0.2, -0.5));
        let j = MatC::from_rows(&[vec![C64::new(0.0, a), z], vec![-z.conj(), C64::new(0.0, -a)]]);
        let p = PhasePoint::pair(Space::RedCot1, q.clone(), j.clone());
        let h = ham(Space::Cotangent, &["J", "J"], Part::Re, -0.5);
        let rhs = reduced_rhs(&lie, ReducedSystem::Redeq1, &h, &p).unwrap();
        let cot = 1.0 / th.tan();
        let rj = MatC::from_rows(&[
            vec![C64::new(0.0, 0.0), -z * C64::new(0.0, -0.5 * cot)],
            vec![z.conj() * C64::new(0.0, 0.5 * cot), C64::new(0.0, 0.0)],
        ]);
        let want_j = rj.commutator(&j);
        let want_q = &(-&j.diag_part()) * &q;
        assert!(rhs[1].dist(&want_j) < 1e-14);
        assert!(rhs[0].dist(&want_q) < 1e-14);
    }

    fn spin_sutherland_point(lie: &LieData, seed: u64) -> PhasePoint {
        let mut r = sample::rng(seed);
        let q = sample::regular_torus(&mut r, lie, 0.8);
        let j = sample::algebra_g(&mut r, lie, 0.7);
        PhasePoint::pair(Space::RedCot1, q, j)
    }

    #[test]
    fn spin_sutherland_energy_is_conserved() {
        let lie = su(2);
        let p = spin_sutherland_point(&lie, 15);
        let h = ham(Space::Cotangent, &["J", "J"], Part::Re, -0.5);
        let spec = FlowSpec::new(Space::RedCot1, Family::Pi2, h, 1.0, 1e-3);
        let traj = integrate(&lie, &spec, &p).unwrap().completed().unwrap();
        assert!(traj.energy_drift() < 1e-8);
        assert!(traj.diagnostics.iter().all(|d| d.structure_defect < 1e-8));
    }

    #[test]
    fn rk4_converges_at_fourth_order() {
        let lie = su(2);
        let p = spin_sutherland_point(&lie, 16);
        // Cubic Hamiltonian so that the flow is not a simple rotation.
        let h = ham(Space::Cotangent, &["J", "J"], Part::Re, -0.5).plus(ham(Space::Cotangent, &["J", "J", "J"], Part::Im, 0.4));
        let run = |dt: f64| {
            let mut spec = FlowSpec::new(Space::RedCot1, Family::Pi2, h.clone(), 0.8, dt);
            spec.restore.enabled = false;
            let t = integrate(&lie, &spec, &p).unwrap().completed().unwrap();
            t.points.last().unwrap().clone()
        };
        let reference = run(0.1 / 8.0);
        let e1 = run(0.1).dist(&reference);
        let e2 = run(0.05).dist(&reference);
        let ratio = e1 / e2;
        assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
    }

    #[test]
    fn gauge_fix_of_a_slice_point_returns_it() {
        let mut r = sample::rng(17);
        let lie = su(3);
        for slice in [Space::RedCot1, Space::RedCot2, Space::RedHeis1, Space::RedHeis2, Space::RedQuasi, Space::RedQuasiPrime] {
            let p = sample::point(&mut r, &lie, slice, 0.6, 0.4);
            let fixed = gauge_fix(&lie, slice, &p.lift(), Some(&p)).unwrap();
            assert!(fixed.point.dist(&p) < 1e-9, "{slice}: {}", fixed.point.dist(&p));
        }
    }

    #[test]
    fn gauge_fix_recovers_the_orbit() {
        let mut r = sample::rng(18);
        let lie = su(3);
        for slice in [Space::RedCot1, Space::RedCot2, Space::RedHeis1, Space::RedHeis2, Space::RedQuasi, Space::RedQuasiPrime] {
            for _ in 0..5 {
                let p = sample::point(&mut r, &lie, slice, 0.6, 0.4);
                let eta = sample::haar_unitary(&mut r, &lie);
                let moved = act(&eta, &p).unwrap();
                let plain = gauge_fix(&lie, slice, &moved, None).unwrap();
                assert!(plain.point.structure_defect(&lie) < 1e-9);
                assert!(panel_distance(&panel_values(&plain.point).unwrap(), &panel_values(&p).unwrap()) < 1e-9);
                assert!(act(&plain.eta, &moved).unwrap().dist(&plain.point.lift()) < 1e-9);
                let matched = gauge_fix(&lie, slice, &moved, Some(&p)).unwrap();
                assert!(matched.point.dist(&p) < 1e-8, "{slice}: {}", matched.point.dist(&p));
            }
        }
    }

    #[test]
    fn gauge_tracking_is_continuous() {
        let mut r = sample::rng(19);
        let lie = su(3);
        let p = sample::point(&mut r, &lie, Space::Cotangent, 0.6, 0.4);
        let h = ham(Space::Cotangent, &["J", "J"], Part::Re, -0.5);
        let mut prev: Option<PhasePoint> = None;
        let mut first = None;
        for k in 0..=50 {
            let q = exact_flow(&lie, Family::Pi2, &h, &p, 0.01 * k as f64).unwrap();
            let fixed = gauge_fix(&lie, Space::RedCot1, &q, prev.as_ref()).unwrap();
            if let Some(pr) = &prev {
                assert!(fixed.residual.perm == first.clone().unwrap());
                assert!(fixed.point.dist(pr) < 0.1);
            } else {
                first = Some(fixed.residual.perm.clone());
            }
            prev = Some(fixed.point);
        }
    }

    fn projection_hamiltonian(system: ReducedSystem) -> Observable {
        let sp = system.slice().parent();
        match system {
            ReducedSystem::Redeq1 => ham(sp, &["J", "J"], Part::Re, -0.5),
            ReducedSystem::Redeq2 => ham(sp, &["g"], Part::Re, 1.0).plus(ham(sp, &["g", "g"], Part::Im, 0.3)),
            ReducedSystem::REDeq1 | ReducedSystem::REDeq1Plus => ham(sp, &["L"], Part::Re, 0.5).plus(ham(sp, &["L", "L"], Part::Re, 0.05)),
            ReducedSystem::REDeq2 => ham(sp, &["g"], Part::Re, 1.0).plus(ham(sp, &["g", "g"], Part::Im, 0.3)),
            ReducedSystem::Qredeq => ham(sp, &["g2"], Part::Re, 1.0).plus(ham(sp, &["g2", "g2"], Part::Im, 0.3)),
            ReducedSystem::QredeqPrime => ham(sp, &["g1"], Part::Re, 1.0).plus(ham(sp, &["g1", "g1"], Part::Im, 0.3)),
        }
    }

    #[test]
    fn reduced_equations_match_projected_exact_flows() {
        for n in [2, 3] {
            let lie = su(n);
            let mut r = sample::rng(20 + n as u64);
            for system in ReducedSystem::ALL {
                let h = projection_hamiltonian(system);
                // Runs that pass close to a root collision are stiff; keep the regular ones.
                let rep = loop {
                    let p = sample::point(&mut r, &lie, system.slice(), 0.4, 0.8);
                    let rep = projection_check(&lie, system, &h, &p, 0.5, 1e-3, 10).unwrap();
                    if rep.min_gap > 0.3 {
                        break rep;
                    }
                };
                assert!(rep.panel_max < 1e-6, "su({n}) {system}: {}", rep.panel_max);
            }
        }
    }

    #[test]
    fn projection_on_a_single_time_is_zero() {
        let lie = su(2);
        let p = spin_sutherland_point(&lie, 21);
        let h = ham(Space::Cotangent, &["J", "J"], Part::Re, -0.5);
        let rep = projection_check(&lie, ReducedSystem::Redeq1, &h, &p, 0.0, 1e-3, 1).unwrap();
        assert_eq!(rep.times.len(), 1);
        assert!(rep.panel_max < 1e-15);
    }

    #[test]
    fn space_family_mismatch_is_a_schema_error() {
        let h = ham(Space::Cotangent, &["g"], Part::Re, 1.0);
        let spec = FlowSpec::new(Space::RedCot1, Family::Pi1, h, 0.1, 0.01);
        assert!(matches!(spec.reduced_system(), Err(Error::Schema(_))));
        let spec = FlowSpec::new(Space::Cotangent, Family::Pi1, Observable::constant(0.0), 0.1, 0.03);
        assert!(matches!(spec.steps(), Err(Error::Schema(_))));
    }

    #[test]
    fn trajectory_round_trips_through_json() {
        let lie = su(2);
        let p = spin_sutherland_point(&lie, 22);
        let h = make(&WordSpec::new(&["J", "J"], Part::Re, -0.5));
        let mut spec = FlowSpec::new(Space::RedCot1, Family::Pi2, h, 0.01, 1e-3);
        spec.stride = 5;
        let traj = integrate(&lie, &spec, &p).unwrap();
        assert_eq!(traj.times.len(), 3);
        let text = serde_json::to_string(&traj).unwrap();
        let back: Trajectory = serde_json::from_str(&text).unwrap();
        assert_eq!(back, traj);
        assert_eq!(traj.diagnostics_csv().lines().count(), 4);
    }

    fn make(w: &WordSpec) -> Observable {
        crate::observables::make_trace_observable(Space::Cotangent, w).unwrap()
    }
}
