//! Seeded property suites behind `doubles verify` and the acceptance harness.
//!
//! Each property draws its own RNG stream from the run seed and its position
//! in the catalogue, so properties can run concurrently and reports stay
//! byte-identical for a given seed.

use crate::brackets::{bracket, jacobiator, lemma_derivatives, BracketKind};
use crate::config::{tolerances, Tolerances};
use crate::conserved::{
    self, conserved_spectrum, conserved_value, equivariance_defect, factor_identity_residual, haar_average, left_right_trace_defect,
    moment_cartan_pairing, sl2z_bracket_defect, sl2z_relation_defect, spin_suth_hamiltonian, spin_suth_pack, ConservedKind, Sl2z,
};
use crate::cxmat::{chol_upper, diag_unitary, eig_herm, mat_exp, qr_pos, MatC, C64, I};
use crate::doubles::{act, act_with, iwasawa, model_map, moment, HeisAction, PhasePoint, Space};
use crate::error::{Error, Result};
use crate::flows::{
    dressing_equivariance_defect, exact_flow, heis_pi1_velocity, model_consistency_defect, panel, projection_check, transformed_curve_defect,
    Family, ReducedSystem,
};
use crate::lie::{LieData, Subspace, Variant};
use crate::observables::{fd_derivative, invariance_defect, make_trace_observable, word, Flavor, Observable, Part, PointMap, WordSpec};
use crate::rmat::{cdybe_residual, ROperator};
use crate::sample::{self, SeededRng};
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicUsize, Ordering};

/// Property suites, one per module.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Cxmat,
    Lie,
    Doubles,
    Observables,
    Rmatrix,
    Brackets,
    Flows,
    Conserved,
    Cli,
    All,
}

impl Suite {
    pub const MODULES: [Suite; 9] =
        [Suite::Cxmat, Suite::Lie, Suite::Doubles, Suite::Observables, Suite::Rmatrix, Suite::Brackets, Suite::Flows, Suite::Conserved, Suite::Cli];

    pub fn tag(&self) -> &'static str {
        match self {
            Suite::Cxmat => "cxmat",
            Suite::Lie => "lie",
            Suite::Doubles => "doubles",
            Suite::Observables => "observables",
            Suite::Rmatrix => "rmatrix",
            Suite::Brackets => "brackets",
            Suite::Flows => "flows",
            Suite::Conserved => "conserved",
            Suite::Cli => "cli",
            Suite::All => "all",
        }
    }
}

impl std::fmt::Display for Suite {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::MODULES
            .iter()
            .chain(&[Suite::All])
            .copied()
            .find(|x| x.tag() == s)
            .ok_or_else(|| Error::Schema(format!("unknown suite {s:?}")))
    }
}

/// Whether the residual must stay below or rise above the tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    Below,
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyRecord {
    pub suite: Suite,
    pub name: String,
    pub anchor: String,
    pub samples: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub bound: Bound,
    pub pass: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub package: String,
    pub version: String,
    pub os: String,
    pub arch: String,
    pub tolerances: Tolerances,
}

impl Environment {
    pub fn current() -> Self {
        Environment {
            package: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            tolerances: *tolerances(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub seed: u64,
    pub records: Vec<PropertyRecord>,
    pub passed: bool,
    pub environment: Environment,
}

impl VerifyReport {
    /// Pretty JSON with keys sorted at every level.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("report is serializable");
        serde_json::to_string_pretty(&value).expect("value is serializable")
    }

    pub fn failures(&self) -> impl Iterator<Item = &PropertyRecord> {
        self.records.iter().filter(|r| !r.pass)
    }
}

/// Worst residual and number of evaluations of one property run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub max_residual: f64,
    pub samples: usize,
}

/// Running maximum; NaN counts as a failure.
#[derive(Debug, Default)]
struct Acc {
    worst: f64,
    count: usize,
}

impl Acc {
    fn add(&mut self, r: f64) {
        self.worst = if r.is_nan() { f64::INFINITY } else { self.worst.max(r) };
        self.count += 1;
    }

    fn done(self) -> Result<Outcome> {
        Ok(Outcome { max_residual: self.worst, samples: self.count })
    }
}

/// RNG and sample budget handed to a property.
pub struct Ctx {
    pub rng: SeededRng,
    pub samples: usize,
}

type Check = fn(&mut Ctx) -> Result<Outcome>;

pub struct Property {
    pub suite: Suite,
    pub name: &'static str,
    pub anchor: &'static str,
    pub tolerance: f64,
    pub bound: Bound,
    pub default_samples: usize,
    check: Check,
}

macro_rules! prop {
    ($suite:ident, $name:literal, $anchor:literal, $tol:expr, $n:expr, $f:expr) => {
        Property { suite: Suite::$suite, name: $name, anchor: $anchor, tolerance: $tol, bound: Bound::Below, default_samples: $n, check: $f }
    };
    ($suite:ident, $name:literal, $anchor:literal, above $tol:expr, $n:expr, $f:expr) => {
        Property { suite: Suite::$suite, name: $name, anchor: $anchor, tolerance: $tol, bound: Bound::Above, default_samples: $n, check: $f }
    };
}

/// Every property, in report order.
pub fn catalogue() -> Vec<Property> {
    vec![
        prop!(Cxmat, "qr_round_trip", "qr_pos factors reconstruct A", 1e-10, 200, qr_round_trip),
        prop!(Cxmat, "eigen_residuals", "eig_herm and diag_unitary reconstruct their input", 1e-9, 1000, eigen_residuals),
        prop!(Cxmat, "cholesky_uniqueness", "chol_upper(bb†) returns b", 1e-10, 200, cholesky_uniqueness),
        prop!(Cxmat, "exp_inverse", "exp(X)exp(−X) = 1 for ‖X‖ ≤ 5", 1e-11, 200, exp_inverse),
        prop!(Lie, "decomposition_uniqueness", "X = X_𝔊 + X_𝔅 with both parts in their subspaces", 1e-13, 1000, decomposition_uniqueness),
        prop!(Lie, "isotropy", "⟨,⟩_I vanishes on 𝔊×𝔊 and 𝔅×𝔅", 1e-13, 300, isotropy),
        prop!(Lie, "tau_anti_automorphism", "τ[X,Y] = −[τX, τY]", 1e-12, 300, tau_anti_automorphism),
        prop!(Lie, "tau_reverses_form", "⟨τZ₁, τZ₂⟩_I = −⟨Z₁, Z₂⟩_I", 1e-12, 300, tau_reverses_form),
        prop!(Doubles, "iwasawa_round_trip", "K = g_L·b_R⁻¹ = b_L·g_R⁻¹", 1e-10, 300, iwasawa_round_trip),
        prop!(Doubles, "left_right_factor_identity", "b_L⁻¹(b_L⁻¹)† = g_R⁻¹(b_R b_R†)g_R", 1e-10, 300, left_right_factor_identity),
        prop!(Doubles, "moment_equivariance", "moment map intertwines the action with conjugation", 1e-10, 100, moment_equivariance),
        prop!(Doubles, "quasi_adjoint_invariance", "invariant functions are constant on quasi-adjoint orbits", 1e-10, 60, quasi_adjoint_invariance),
        prop!(Doubles, "dressing_equivariance", "derivatives of dressing invariants transform covariantly", 1e-9, 30, dressing_equivariance),
        prop!(Observables, "invariant_words", "shipped invariant words pass the invariance identity", 1e-9, 100, invariant_word_identity),
        prop!(Observables, "left_right_b_derivatives", "Dφ(b) = b·D′φ(b)·b⁻¹ for dressing invariants", 1e-9, 100, left_right_b_derivatives),
        prop!(Observables, "left_right_g_derivatives", "∇h = ∇′h for class functions", 1e-10, 100, left_right_g_derivatives),
        prop!(Observables, "b_derivative_from_gradient", "Df = i∇f + Rⁱ(∇f)", 1e-10, 100, b_derivative_from_gradient),
        prop!(Rmatrix, "cartan_kernel", "r-matrices vanish on the diagonal", 1e-12, 200, cartan_kernel),
        prop!(Rmatrix, "antisymmetry", "R(Q) and r(λ) are ⟨,⟩-antisymmetric", 1e-12, 200, antisymmetry),
        prop!(Rmatrix, "r_gamma2_adjoint", "R(Γ²)(Y†) = −(R(Γ²)Y)†", 1e-12, 200, r_gamma2_adjoint),
        prop!(Rmatrix, "r_gamma2_two_forms", "R(Q) at Q = Γ² equals ½coth(ad γ)", 1e-12, 200, r_gamma2_two_forms),
        prop!(Rmatrix, "cdybe", "dynamical Yang–Baxter identity for r(λ)", 1e-9, 500, cdybe),
        prop!(Brackets, "reduced_consistency", "reduced brackets restrict the unreduced ones", 1e-8, 20, reduced_consistency),
        prop!(Brackets, "model_map_poisson", "m is a Poisson map", 1e-8, 30, model_map_poisson),
        prop!(Brackets, "factor_derivatives", "gradients of functions of Ξ_R and Λ_R", 1e-7, 30, factor_derivatives),
        prop!(Brackets, "factor_brackets", "brackets of functions of Ξ_R and Λ_R", 1e-8, 30, factor_brackets),
        prop!(Brackets, "sklyanin_identity", "Poisson–Lie bracket on G through Rⁱ", 1e-10, 50, sklyanin_identity),
        prop!(Brackets, "dressing_center", "dressing invariants are central in {,}_B", 1e-10, 50, dressing_center),
        prop!(Brackets, "casimir_center", "class functions of g₁g₂g₁⁻¹g₂⁻¹ are central", 1e-9, 50, casimir_center),
        prop!(Brackets, "lifted_derivatives", "unreduced derivatives rebuilt from a slice point", 1e-10, 50, lifted_derivatives),
        prop!(Brackets, "quasi_jacobi_invariant", "jacobiator on invariant triples", 1e-4, 10, quasi_jacobi_invariant),
        prop!(Brackets, "quasi_jacobi_generic", "jacobiator on a generic triple", above 1e-2, 4, quasi_jacobi_generic),
        prop!(Flows, "group_law", "φ_{s+t} = φ_s∘φ_t for every exact flow", 1e-9, 8, group_law),
        prop!(Flows, "cotangent_constants", "functions of J and J̃ are constant along π₂ flows", 1e-10, 30, cotangent_constants),
        prop!(Flows, "w_spectrum", "spectrum of W is constant along π₁ flows", 1e-9, 30, w_spectrum),
        prop!(Flows, "quasi_constants", "g₂ and g₁g₂g₁⁻¹ are constant along π₂ flows", 1e-10, 30, quasi_constants),
        prop!(Flows, "involution", "family Hamiltonians Poisson-commute", 1e-9, 200, involution),
        prop!(Flows, "heisenberg_curve_velocity", "time derivative of the π₁ Heisenberg curve", 1e-7, 10, heisenberg_curve_velocity),
        prop!(Flows, "transformed_curve", "π₁ curve through a transformed initial value", 1e-8, 30, transformed_curve),
        prop!(Flows, "flow_equivariance", "cotangent and quasi flows commute with the action", 1e-9, 30, flow_equivariance),
        prop!(Flows, "model_consistency", "K-model and G×B flows agree through m", 1e-10, 20, model_consistency),
        prop!(Flows, "projection", "reduced RK4 matches the projected exact flow", 1e-6, 1, projection),
        prop!(Conserved, "constancy", "conserved maps are constant along their flows", 1e-9, 10, constancy),
        prop!(Conserved, "invariant_relation", "ψ(J) = ψ(J̃) for class functions ψ", 1e-10, 100, invariant_relation),
        prop!(Conserved, "moment_orthogonality", "⟨Φ(g,J), X⟩ = 0 on the centralizer of diagonal g", 1e-12, 100, moment_orthogonality),
        prop!(Conserved, "left_right_invariants", "F(b_L⁻¹(b_L⁻¹)†) = F(b_R b_R†) for class functions", 1e-9, 100, left_right_invariants),
        prop!(Conserved, "equivariance", "conserved maps are equivariant", 1e-9, 30, conserved_equivariance),
        prop!(Conserved, "spin_sutherland", "−½⟨J,J⟩ equals the spin Sutherland Hamiltonian", 1e-10, 500, spin_sutherland),
        prop!(Conserved, "bplus_residual", "Q⁻¹b₊⁻¹Qb₊S₊ = 1", 1e-10, 100, bplus_residual),
        prop!(Conserved, "modular_relations", "Ŝ⁴ = id and Ŝ² = (ŜT̂)³ on invariant panels", 1e-10, 100, modular_relations),
        prop!(Conserved, "modular_brackets", "Ŝ and T̂ preserve brackets of invariants", 1e-8, 30, modular_brackets),
        prop!(Conserved, "haar_average_constancy", "Haar-averaged observable is flow-constant (in standard errors)", 5.0, 2000, haar_average_constancy),
        prop!(Cli, "report_determinism", "identical seeds give byte-identical reports", 0.0, 2, report_determinism),
        prop!(Cli, "catalogue_coverage", "every property runs exactly once under suite all", 0.0, 1, catalogue_coverage),
    ]
}

fn stream_seed(seed: u64, index: usize) -> SeededRng {
    let mut r = SeededRng::seed_from_u64(seed);
    r.set_stream(index as u64 + 1);
    r
}

fn record(p: &Property, outcome: Result<Outcome>) -> PropertyRecord {
    let (max_residual, samples, error) = match outcome {
        Ok(o) => (o.max_residual, o.samples, None),
        Err(e) => (f64::INFINITY, 0, Some(e.to_string())),
    };
    let pass = error.is_none()
        && match p.bound {
            Bound::Below => max_residual <= p.tolerance,
            Bound::Above => max_residual > p.tolerance,
        };
    PropertyRecord {
        suite: p.suite,
        name: p.name.into(),
        anchor: p.anchor.into(),
        samples,
        max_residual,
        tolerance: p.tolerance,
        bound: p.bound,
        pass,
        error,
    }
}

/// Runs one property by name with an explicit sample budget.
pub fn run_property(name: &str, seed: u64, samples: usize) -> Result<PropertyRecord> {
    let cat = catalogue();
    let (index, p) = cat.iter().enumerate().find(|(_, p)| p.name == name).ok_or_else(|| Error::Schema(format!("unknown property {name:?}")))?;
    let mut ctx = Ctx { rng: stream_seed(seed, index), samples };
    Ok(record(p, (p.check)(&mut ctx)))
}

/// Runs a suite with default budgets; properties fan out over threads.
pub fn run_suite(suite: Suite, seed: u64) -> VerifyReport {
    let cat = catalogue();
    let selected: Vec<(usize, &Property)> = cat.iter().enumerate().filter(|(_, p)| suite == Suite::All || p.suite == suite).collect();
    let next = AtomicUsize::new(0);
    let workers = std::thread::available_parallelism().map(|x| x.get()).unwrap_or(1).min(selected.len()).max(1);
    let mut slots: Vec<Option<PropertyRecord>> = vec![None; selected.len()];
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                let (next, selected) = (&next, &selected);
                scope.spawn(move || {
                    let mut done = Vec::new();
                    loop {
                        let k = next.fetch_add(1, Ordering::Relaxed);
                        let Some(&(index, p)) = selected.get(k) else { break };
                        let mut ctx = Ctx { rng: stream_seed(seed, index), samples: p.default_samples };
                        done.push((k, record(p, (p.check)(&mut ctx))));
                    }
                    done
                })
            })
            .collect();
        for h in handles {
            for (k, rec) in h.join().expect("property worker panicked") {
                slots[k] = Some(rec);
            }
        }
    });
    let records: Vec<PropertyRecord> = slots.into_iter().map(|r| r.expect("every property ran")).collect();
    let passed = records.iter().all(|r| r.pass);
    VerifyReport { suite, seed, records, passed, environment: Environment::current() }
}

// ---------------------------------------------------------------- helpers

const NS: [usize; 3] = [2, 3, 4];

fn su_cycle(i: usize) -> LieData {
    LieData::su(NS[i % NS.len()])
}

fn lie_cycle(i: usize) -> LieData {
    let variant = if (i / NS.len()).is_multiple_of(2) { Variant::Su } else { Variant::U };
    LieData::new(NS[i % NS.len()], variant).expect("n ≥ 2")
}

fn rel(a: f64, scale: f64) -> f64 {
    a / (1.0 + scale.abs())
}

/// Five invariant words per double, on the given space.
pub fn invariant_words(space: Space) -> Vec<Observable> {
    let lists: Vec<(&[&str], Part)> = match space.parent() {
        Space::Cotangent => vec![
            (&["g", "J"], Part::Im),
            (&["g", "g", "J", "J"], Part::Re),
            (&["J", "J", "J"], Part::Im),
            (&["g", "J", "g"], Part::Im),
            (&["g", "J", "J"], Part::Re),
        ],
        Space::HeisenbergGB | Space::HeisenbergK => vec![
            (&["g", "L"], Part::Re),
            (&["g", "g", "L"], Part::Im),
            (&["L", "L", "g"], Part::Re),
            (&["g", "L", "ginv", "L"], Part::Im),
            (&["L", "g", "L"], Part::Im),
        ],
        _ => vec![
            (&["g1", "g2"], Part::Re),
            (&["g1", "g1", "g2"], Part::Im),
            (&["g1", "g2", "g2"], Part::Re),
            (&["g1", "g2", "g1inv", "g2inv"], Part::Im),
            (&["g1", "g1", "g2", "g2"], Part::Re),
        ],
    };
    let target = if space == Space::HeisenbergK { Space::HeisenbergGB } else { space };
    let words: Vec<Observable> = lists.into_iter().map(|(l, part)| word(target, l, part, 1.0).expect("valid letters")).collect();
    if space == Space::HeisenbergK {
        words.into_iter().map(|w| w.pullback(PointMap::Model)).collect()
    } else {
        words
    }
}

/// Two family Hamiltonians per unreduced space.
pub fn family_hamiltonians(space: Space, family: Family) -> Vec<Observable> {
    let target = if space == Space::HeisenbergK { Space::HeisenbergGB } else { space.parent() };
    let w = |l: &[&str], part, c| word(target, l, part, c).expect("valid letters");
    let hs = match (target, family) {
        (Space::Cotangent, Family::Pi2) => vec![w(&["J", "J"], Part::Re, -0.5), w(&["J", "J", "J"], Part::Im, 0.3)],
        (Space::Cotangent, Family::Pi1) => vec![w(&["g"], Part::Re, 1.0), w(&["g", "g"], Part::Im, 0.4)],
        (Space::HeisenbergGB, Family::Pi2) => vec![w(&["L"], Part::Re, 0.5), w(&["L", "L"], Part::Re, 0.2)],
        (Space::HeisenbergGB, Family::Pi1) => vec![w(&["g"], Part::Re, 1.0), w(&["g", "g"], Part::Im, 0.5)],
        (_, Family::Pi2) => vec![w(&["g2"], Part::Re, 1.0), w(&["g2", "g2"], Part::Im, 0.5)],
        (_, Family::Pi1) => vec![w(&["g1"], Part::Re, 1.0), w(&["g1", "g1"], Part::Im, 0.5)],
    };
    if space == Space::HeisenbergK {
        hs.into_iter().map(|h| h.pullback(PointMap::Model)).collect()
    } else {
        hs
    }
}

/// Hamiltonian used for the projection comparison of each reduced system.
pub fn projection_hamiltonian(system: ReducedSystem) -> Observable {
    let sp = system.slice().parent();
    let w = |l: &[&str], part, c| word(sp, l, part, c).expect("valid letters");
    match system {
        ReducedSystem::Redeq1 => w(&["J", "J"], Part::Re, -0.5),
        ReducedSystem::Redeq2 | ReducedSystem::REDeq2 => w(&["g"], Part::Re, 1.0).plus(w(&["g", "g"], Part::Im, 0.3)),
        ReducedSystem::REDeq1 | ReducedSystem::REDeq1Plus => w(&["L"], Part::Re, 0.5).plus(w(&["L", "L"], Part::Re, 0.05)),
        ReducedSystem::Qredeq => w(&["g2"], Part::Re, 1.0).plus(w(&["g2", "g2"], Part::Im, 0.3)),
        ReducedSystem::QredeqPrime => w(&["g1"], Part::Re, 1.0).plus(w(&["g1", "g1"], Part::Im, 0.3)),
    }
}

fn const_word(space: Space, letters: &[&str], part: Part, c: MatC) -> Observable {
    let spec = WordSpec::new(letters, part, 1.0).with_constants(vec![c]);
    make_trace_observable(space, &spec).expect("valid letters")
}

fn traces_of_powers(m: &MatC) -> Vec<C64> {
    let mut pw = MatC::identity(m.n());
    (0..m.n())
        .map(|_| {
            pw = &pw * m;
            pw.trace()
        })
        .collect()
}

fn max_trace_gap(a: &MatC, b: &MatC) -> f64 {
    traces_of_powers(a).iter().zip(traces_of_powers(b)).map(|(x, y)| (x - y).norm() / (1.0 + y.norm())).fold(0.0, f64::max)
}

fn unit_diagonal_upper(r: &mut SeededRng, n: usize) -> MatC {
    MatC::from_fn(n, |j, k| match j.cmp(&k) {
        std::cmp::Ordering::Less => C64::new(sample::standard_normal(r), sample::standard_normal(r)),
        std::cmp::Ordering::Equal => C64::new(1.0, 0.0),
        std::cmp::Ordering::Greater => C64::new(0.0, 0.0),
    })
}

// ---------------------------------------------------------------- cxmat

fn qr_round_trip(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    for i in 0..ctx.samples {
        let n = 1 + i % 6;
        let a = sample::ginibre(&mut ctx.rng, n);
        let (q, r) = qr_pos(&a)?;
        let shape = if r.is_upper_positive() { 0.0 } else { f64::INFINITY };
        acc.add((&q * &r).dist(&a) / a.frob_norm() + q.unitarity_defect() + shape);
    }
    acc.done()
}

fn eigen_residuals(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    for i in 0..ctx.samples {
        let lie = lie_cycle(i);
        let h = sample::hermitian(&mut ctx.rng, &lie, 1.0);
        let (ev, u) = eig_herm(&h)?;
        let back = &(&u * &MatC::from_real_diag(&ev)) * &u.adjoint();
        acc.add(rel(back.dist(&h), h.frob_norm()));
        let g = sample::haar_unitary(&mut ctx.rng, &lie);
        let (phases, v) = diag_unitary(&g)?;
        let d = MatC::from_diag(&phases.iter().map(|&t| C64::from_polar(1.0, t)).collect::<Vec<_>>());
        acc.add((&(&v * &d) * &v.adjoint()).dist(&g));
    }
    acc.done()
}

fn cholesky_uniqueness(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    for i in 0..ctx.samples {
        let lie = lie_cycle(i);
        let b = sample::group_b(&mut ctx.rng, &lie, 0.7);
        acc.add(rel(chol_upper(&(&b * &b.adjoint()))?.dist(&b), b.frob_norm()));
    }
    acc.done()
}

fn exp_inverse(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    for i in 0..ctx.samples {
        let n = NS[i % NS.len()];
        let z = sample::ginibre(&mut ctx.rng, n);
        let x = z.scale_re(sample::uniform(&mut ctx.rng, 0.0, 5.0) / z.frob_norm());
        acc.add((&mat_exp(&x)? * &mat_exp(&-&x)?).dist(&MatC::identity(n)));
    }
    acc.done()
}

// ---------------------------------------------------------------- lie

fn decomposition_uniqueness(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    for i in 0..ctx.samples {
        let lie = lie_cycle(i);
        let z = sample::algebra_full(&mut ctx.rng, &lie, 1.0);
        let (xg, xb) = (lie.proj_g(&z), lie.proj_b(&z));
        acc.add((&xg + &xb).dist(&z) + lie.membership_defect(&xg, Subspace::G) + lie.membership_defect(&xb, Subspace::B));
    }
    acc.done()
}

fn isotropy(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    for i in 0..ctx.samples {
        let lie = lie_cycle(i);
        let (x, y) = (sample::algebra_g(&mut ctx.rng, &lie, 1.0), sample::algebra_g(&mut ctx.rng, &lie, 1.0));
        let (u, v) = (sample::algebra_b(&mut ctx.rng, &lie, 1.0), sample::algebra_b(&mut ctx.rng, &lie, 1.0));
        acc.add(lie.form_i(&x, &y).abs().max(lie.form_i(&u, &v).abs()));
    }
    acc.done()
}

fn tau_anti_automorphism(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    for i in 0..ctx.samples {
        let lie = lie_cycle(i);
        let (x, y) = (sample::ginibre(&mut ctx.rng, lie.n), sample::ginibre(&mut ctx.rng, lie.n));
        let lhs = lie.tau(&x.commutator(&y));
        acc.add((&lhs + &lie.tau(&x).commutator(&lie.tau(&y))).frob_norm());
    }
    acc.done()
}

fn tau_reverses_form(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    for i in 0..ctx.samples {
        let lie = lie_cycle(i);
        let (x, y) = (sample::ginibre(&mut ctx.rng, lie.n), sample::ginibre(&mut ctx.rng, lie.n));
        acc.add((lie.form_i(&lie.tau(&x), &lie.tau(&y)) + lie.form_i(&x, &y)).abs());
    }
    acc.done()
}

// ---------------------------------------------------------------- doubles

fn iwasawa_round_trip(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    for i in 0..ctx.samples {
        let lie = lie_cycle(i);
        let k = sample::group_complex(&mut ctx.rng, &lie, 0.8);
        let iw = iwasawa(&k)?;
        let right = &iw.g_l * &iw.b_r.upper_inverse()?;
        let left = &iw.b_l * &iw.g_r.adjoint();
        let shape = [&iw.b_r, &iw.b_l].iter().all(|b| b.is_upper_positive()) && iw.g_l.is_unitary() && iw.g_r.is_unitary();
        acc.add(right.dist(&k).max(left.dist(&k)) / k.frob_norm() + if shape { 0.0 } else { f64::INFINITY });
    }
    acc.done()
}

fn left_right_factor_identity(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    for i in 0..ctx.samples {
        let lie = lie_cycle(i);
        acc.add(factor_identity_residual(&sample::group_complex(&mut ctx.rng, &lie, 0.8))?);
    }
    acc.done()
}

fn moment_equivariance(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    for i in 0..ctx.samples {
        let lie = lie_cycle(i);
        for space in [Space::Cotangent, Space::Quasi] {
            let p = sample::point(&mut ctx.rng, &lie, space, 0.8, 0.3);
            let eta = sample::haar_unitary(&mut ctx.rng, &lie);
            let want = &(&eta * &moment(&p)?) * &eta.adjoint();
            acc.add(moment(&act(&eta, &p)?)?.dist(&want));
        }
    }
    acc.done()
}

fn quasi_adjoint_invariance(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    let gb_words = panel(Space::HeisenbergGB);
    for i in 0..ctx.samples {
        let lie = su_cycle(i);
        let p = sample::point(&mut ctx.rng, &lie, Space::HeisenbergGB, 0.5, 0.3);
        let eta = sample::haar_unitary(&mut ctx.rng, &lie);
        let moved = act_with(&eta, &p, HeisAction::Quasi)?;
        for f in &gb_words {
            let v = f.value(&p)?;
            acc.add(rel((f.value(&moved)? - v).abs(), v));
        }
    }
    acc.done()
}

fn dressing_equivariance(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    let gb = Space::HeisenbergGB;
    let phi = word(gb, &["L", "L"], Part::Re, 0.3)?.plus(word(gb, &["Linv"], Part::Re, 0.5)?);
    for i in 0..ctx.samples {
        let lie = su_cycle(i);
        let p = sample::point(&mut ctx.rng, &lie, gb, 0.5, 0.3);
        let eta = sample::haar_unitary(&mut ctx.rng, &lie);
        acc.add(dressing_equivariance_defect(&lie, &phi, &eta, &p, 0.7)?);
    }
    acc.done()
}

// ---------------------------------------------------------------- observables

fn invariant_word_identity(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    let spaces = [Space::Cotangent, Space::HeisenbergGB, Space::Quasi];
    for i in 0..ctx.samples {
        let lie = lie_cycle(i);
        for space in spaces {
            let p = sample::point(&mut ctx.rng, &lie, space, 0.5, 0.3);
            for f in panel(space).iter().chain(&invariant_words(space)) {
                let scale = f.pairings(&p)?.iter().map(|m| m.frob_norm()).fold(0.0, f64::max);
                acc.add(rel(invariance_defect(&lie, f, &p)?, scale));
            }
        }
    }
    acc.done()
}

fn left_right_b_derivatives(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    let gb = Space::HeisenbergGB;
    let phis = [word(gb, &["L"], Part::Re, 1.0)?, word(gb, &["L", "L"], Part::Re, 0.5)?, word(gb, &["Linv"], Part::Re, 1.0)?];
    for i in 0..ctx.samples {
        let lie = lie_cycle(i);
        let p = sample::point(&mut ctx.rng, &lie, gb, 0.5, 0.3);
        let b = p.c(1);
        for phi in &phis {
            let d = phi.derivs(&lie, &p)?;
            let want = &(b * &d.flavor(Flavor::D2p)?) * &b.upper_inverse()?;
            let got = d.flavor(Flavor::D2)?;
            acc.add(rel(got.dist(&want), got.frob_norm()));
        }
    }
    acc.done()
}

fn left_right_g_derivatives(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    let cot = Space::Cotangent;
    let hs = [word(cot, &["g"], Part::Re, 1.0)?, word(cot, &["g", "g"], Part::Im, 1.0)?, word(cot, &["g", "g", "g"], Part::Re, 0.5)?];
    for i in 0..ctx.samples {
        let lie = lie_cycle(i);
        let p = sample::point(&mut ctx.rng, &lie, cot, 0.5, 0.3);
        for h in &hs {
            let d = h.derivs(&lie, &p)?;
            let n1 = d.flavor(Flavor::Nabla1)?;
            acc.add(rel(n1.dist(&d.flavor(Flavor::Nabla1p)?), n1.frob_norm()));
        }
    }
    acc.done()
}

fn b_derivative_from_gradient(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    let gb = Space::HeisenbergGB;
    for i in 0..ctx.samples {
        let lie = lie_cycle(i);
        let c = sample::ginibre(&mut ctx.rng, lie.n);
        let fs = [const_word(gb, &["C0", "g"], Part::Im, c.clone()), const_word(gb, &["g", "C0", "g"], Part::Re, c), word(gb, &["g", "g"], Part::Re, 1.0)?];
        let p = sample::point(&mut ctx.rng, &lie, gb, 0.5, 0.3);
        for f in &fs {
            let d = f.derivs(&lie, &p)?;
            let nabla = d.flavor(Flavor::Nabla1)?;
            let want = &nabla.scale(I) + &ROperator::Ri.apply(&nabla)?;
            let got = d.flavor(Flavor::D1)?;
            acc.add(rel(got.dist(&want), got.frob_norm()));
        }
    }
    acc.done()
}

// ---------------------------------------------------------------- rmatrix

fn r_operators(r: &mut SeededRng, lie: &LieData) -> Vec<ROperator> {
    vec![
        ROperator::RQ(sample::regular_torus(r, lie, 0.2)),
        ROperator::RLambda(sample::regular_cartan(r, lie, 1.0, 0.2)),
        ROperator::RhoGamma(sample::regular_gamma(r, lie, 0.7, 0.2)),
        ROperator::RGamma2(sample::regular_gamma(r, lie, 0.7, 0.2)),
        ROperator::Ri,
    ]
}

fn cartan_kernel(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    for i in 0..ctx.samples {
        let lie = lie_cycle(i);
        let d = sample::ginibre(&mut ctx.rng, lie.n).diag_part();
        for op in r_operators(&mut ctx.rng, &lie) {
            acc.add(op.apply(&d)?.max_abs());
        }
    }
    acc.done()
}

fn antisymmetry(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    for i in 0..ctx.samples {
        let lie = lie_cycle(i);
        let ops = [ROperator::RQ(sample::regular_torus(&mut ctx.rng, &lie, 0.2)), ROperator::RLambda(sample::regular_cartan(&mut ctx.rng, &lie, 1.0, 0.2))];
        for op in ops {
            let (x, y) = (sample::algebra_g(&mut ctx.rng, &lie, 1.0), sample::algebra_g(&mut ctx.rng, &lie, 1.0));
            let a = lie.form_g(&op.apply(&x)?, &y);
            acc.add(rel((a + lie.form_g(&x, &op.apply(&y)?)).abs(), a));
        }
    }
    acc.done()
}

fn r_gamma2_adjoint(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    for i in 0..ctx.samples {
        let lie = lie_cycle(i);
        let op = ROperator::RGamma2(sample::regular_gamma(&mut ctx.rng, &lie, 0.7, 0.2));
        let y = sample::ginibre(&mut ctx.rng, lie.n);
        let ry = op.apply(&y)?;
        acc.add(rel((&op.apply(&y.adjoint())? + &ry.adjoint()).frob_norm(), ry.frob_norm()));
    }
    acc.done()
}

fn r_gamma2_two_forms(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    for i in 0..ctx.samples {
        let lie = lie_cycle(i);
        let gamma = sample::regular_gamma(&mut ctx.rng, &lie, 0.7, 0.2);
        let y = sample::ginibre(&mut ctx.rng, lie.n);
        let a = ROperator::RQ(&gamma * &gamma).apply(&y)?;
        let b = ROperator::RGamma2(gamma).apply(&y)?;
        acc.add(rel(a.dist(&b), b.frob_norm()));
    }
    acc.done()
}

fn cdybe(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    for i in 0..ctx.samples {
        let lie = lie_cycle(i);
        let lambda = sample::regular_cartan(&mut ctx.rng, &lie, 1.0, 0.3);
        let (x, y) = (sample::algebra_g(&mut ctx.rng, &lie, 1.0), sample::algebra_g(&mut ctx.rng, &lie, 1.0));
        acc.add(cdybe_residual(&lie, &lambda, &x, &y)?);
    }
    acc.done()
}

// ---------------------------------------------------------------- brackets

const REDUCED_KINDS: [BracketKind; 6] =
    [BracketKind::RedCot1, BracketKind::RedCot2, BracketKind::RedHeis1, BracketKind::RedHeis2, BracketKind::RedQuasi1, BracketKind::RedQuasi2];

fn reduced_consistency(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    for kind in REDUCED_KINDS {
        let slice = kind.space();
        let (red, full) = (invariant_words(slice), invariant_words(slice.parent()));
        for i in 0..ctx.samples {
            let lie = lie_cycle(i);
            let p = sample::point(&mut ctx.rng, &lie, slice, 0.6, 0.3);
            let q = p.lift();
            let (dr, df): (Vec<_>, Vec<_>) = (
                red.iter().map(|f| f.derivs(&lie, &p)).collect::<Result<_>>()?,
                full.iter().map(|f| f.derivs(&lie, &q)).collect::<Result<_>>()?,
            );
            for a in 0..red.len() {
                for b in a + 1..red.len() {
                    let r = crate::brackets::bracket_from_derivs(kind, &dr[a], &dr[b])?;
                    let u = crate::brackets::bracket_from_derivs(kind.unreduced(), &df[a], &df[b])?;
                    acc.add(rel((r - u).abs(), u));
                }
            }
        }
    }
    acc.done()
}

fn model_map_poisson(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    let words = invariant_words(Space::HeisenbergGB);
    for i in 0..ctx.samples {
        let lie = su_cycle(i);
        let k = sample::point(&mut ctx.rng, &lie, Space::HeisenbergK, 0.6, 0.3);
        let (g, b) = model_map(k.c(0))?;
        let m = PhasePoint::pair(Space::HeisenbergGB, g, b);
        let c = sample::ginibre(&mut ctx.rng, lie.n);
        let mut fs = words.clone();
        fs.push(const_word(Space::HeisenbergGB, &["C0", "b"], Part::Im, c.clone()));
        fs.push(const_word(Space::HeisenbergGB, &["C0", "g"], Part::Re, c));
        for a in 0..fs.len() {
            for bb in a + 1..fs.len() {
                let lhs = bracket(&lie, BracketKind::PbFM, &fs[a], &fs[bb], &m)?;
                let rhs = bracket(&lie, BracketKind::PbPlus, &fs[a].clone().pullback(PointMap::Model), &fs[bb].clone().pullback(PointMap::Model), &k)?;
                acc.add(rel((lhs - rhs).abs(), lhs));
            }
        }
    }
    acc.done()
}

/// Gradients on K of f∘Ξ_R and φ∘Λ_R against closed forms built from the
/// right derivatives at m(K), both analytically and by finite differences.
fn factor_derivatives(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    let gb = Space::HeisenbergGB;
    for i in 0..ctx.samples {
        let lie = su_cycle(i);
        let c = sample::ginibre(&mut ctx.rng, lie.n);
        let f = const_word(gb, &["C0", "g", "g"], Part::Im, c.clone());
        let phi = const_word(gb, &["C0", "b"], Part::Re, c);
        let k = sample::point(&mut ctx.rng, &lie, Space::HeisenbergK, 0.5, 0.3);
        let iw = iwasawa(k.c(0))?;
        let m = PhasePoint::pair(gb, iw.g_r.clone(), iw.b_r.clone());
        let df = f.derivs(&lie, &m)?.flavor(Flavor::D1p)?;
        let dphi = phi.derivs(&lie, &m)?.flavor(Flavor::D2p)?;
        let neg_conj = |a: &MatC, x: &MatC| -> Result<MatC> { Ok(lie.drop_trace(-&(&(a * x) * &a.inverse()?))) };
        let cases = [
            (&phi, Flavor::NablaKp, neg_conj(&iw.b_r, &dphi)?),
            (&f, Flavor::NablaKp, neg_conj(&iw.g_r, &df)?),
            (&phi, Flavor::NablaK, neg_conj(&iw.g_l, &dphi)?),
            (&f, Flavor::NablaK, neg_conj(&iw.b_l, &df)?),
        ];
        for (obs, flavor, want) in cases {
            let pulled = obs.clone().pullback(PointMap::Model);
            let got = pulled.derivative(&lie, &k, flavor)?;
            acc.add(rel(got.dist(&want), want.frob_norm()));
            let x = sample::algebra_full(&mut ctx.rng, &lie, 1.0);
            let numeric = fd_derivative(&pulled, &k, flavor, &x)?;
            acc.add(rel((numeric - lie.form_i(&x, &want)).abs(), numeric));
        }
    }
    acc.done()
}

/// Brackets of functions of one Iwasawa factor, on K and on the G×B model.
fn factor_brackets(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    let gb = Space::HeisenbergGB;
    for i in 0..ctx.samples {
        let lie = su_cycle(i);
        let (c1, c2) = (sample::ginibre(&mut ctx.rng, lie.n), sample::ginibre(&mut ctx.rng, lie.n));
        let fs = [const_word(gb, &["C0", "g"], Part::Im, c1.clone()), const_word(gb, &["C0", "g", "g"], Part::Re, c2.clone())];
        let phis = [const_word(gb, &["C0", "b"], Part::Re, c1), const_word(gb, &["C0", "b", "bdag"], Part::Im, c2)];
        let k = sample::point(&mut ctx.rng, &lie, Space::HeisenbergK, 0.5, 0.3);
        let (g, b) = model_map(k.c(0))?;
        let m = PhasePoint::pair(gb, g, b);
        let pb = |f: &Observable, h: &Observable| -> Result<(f64, f64)> {
            let on_k = bracket(&lie, BracketKind::PbPlus, &f.clone().pullback(PointMap::Model), &h.clone().pullback(PointMap::Model), &k)?;
            Ok((on_k, bracket(&lie, BracketKind::PbFM, f, h, &m)?))
        };
        let (on_k, on_m) = pb(&phis[0], &phis[1])?;
        let want = bracket(&lie, BracketKind::PbB, &phis[0], &phis[1], &m)?;
        acc.add(rel((on_k - want).abs(), want).max(rel((on_m - want).abs(), want)));
        let (on_k, on_m) = pb(&fs[0], &fs[1])?;
        let want = bracket(&lie, BracketKind::PbG, &fs[0], &fs[1], &m)?;
        acc.add(rel((on_k - want).abs(), want).max(rel((on_m - want).abs(), want)));
        for f in &fs {
            for phi in &phis {
                let (on_k, on_m) = pb(f, phi)?;
                let want = lie.form_i(&f.derivative(&lie, &m, Flavor::D1)?, &phi.derivative(&lie, &m, Flavor::D2)?);
                acc.add(rel((on_k - want).abs(), want).max(rel((on_m - want).abs(), want)));
            }
        }
    }
    acc.done()
}

fn sklyanin_identity(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    let gb = Space::HeisenbergGB;
    for i in 0..ctx.samples {
        let lie = su_cycle(i);
        let c = sample::ginibre(&mut ctx.rng, lie.n);
        let f1 = const_word(gb, &["g", "g", "C0"], Part::Im, c);
        let f2 = word(gb, &["g", "ginv", "g"], Part::Re, 1.0)?;
        let p = sample::point(&mut ctx.rng, &lie, gb, 0.5, 0.3);
        let (d1, d2) = (f1.derivs(&lie, &p)?, f2.derivs(&lie, &p)?);
        let lhs = bracket(&lie, BracketKind::PbG, &f1, &f2, &p)?;
        let ri = |x: MatC| ROperator::Ri.apply(&x);
        let rhs = lie.form_g(&d1.flavor(Flavor::Nabla1p)?, &ri(d2.flavor(Flavor::Nabla1p)?)?)
            - lie.form_g(&d1.flavor(Flavor::Nabla1)?, &ri(d2.flavor(Flavor::Nabla1)?)?);
        acc.add(rel((lhs - rhs).abs(), lhs));
    }
    acc.done()
}

fn dressing_center(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    let gb = Space::HeisenbergGB;
    let phi = word(gb, &["L", "L"], Part::Re, 1.0)?.plus(word(gb, &["L"], Part::Re, 1.0)?);
    for i in 0..ctx.samples {
        let lie = lie_cycle(i);
        let c = sample::ginibre(&mut ctx.rng, lie.n);
        let psi = const_word(gb, &["b", "C0", "bdag"], Part::Im, c);
        let p = sample::point(&mut ctx.rng, &lie, gb, 0.5, 0.3);
        acc.add(bracket(&lie, BracketKind::PbB, &phi, &psi, &p)?.abs());
    }
    acc.done()
}

fn casimir_center(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    let cas = [conserved::casimir(1, Part::Re), conserved::casimir(2, Part::Im)];
    let hs = invariant_words(Space::Quasi);
    for i in 0..ctx.samples {
        let lie = lie_cycle(i);
        let p = sample::point(&mut ctx.rng, &lie, Space::Quasi, 0.5, 0.3);
        for c in &cas {
            for h in &hs {
                acc.add(bracket(&lie, BracketKind::Qpb, c, h, &p)?.abs());
            }
        }
    }
    acc.done()
}

fn lifted_derivatives(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    let slice_words = invariant_words(Space::RedHeis2);
    let full_words = invariant_words(Space::HeisenbergGB);
    for i in 0..ctx.samples {
        let lie = lie_cycle(i);
        let p = sample::point(&mut ctx.rng, &lie, Space::RedHeis2, 0.6, 0.3);
        let gamma = p.c(1);
        for (f, full) in slice_words.iter().zip(&full_words) {
            let got = lemma_derivatives(&lie, f, &p)?;
            let d = full.derivs(&lie, &p.lift())?;
            let d2p = d.flavor(Flavor::D2p)?;
            let conj = &(gamma * &d2p) * &gamma.upper_inverse()?;
            acc.add(got.d2p.dist(&d2p).max(got.conj_d2p.dist(&conj)).max(got.d2.dist(&d.flavor(Flavor::D2)?)));
        }
    }
    acc.done()
}

fn quasi_jacobi_invariant(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    let ws = invariant_words(Space::Quasi);
    for i in 0..ctx.samples {
        let lie = LieData::su(2 + i % 2);
        let p = sample::point(&mut ctx.rng, &lie, Space::Quasi, 0.5, 0.3);
        acc.add(jacobiator(&lie, BracketKind::Qpb, &ws[i % 5], &ws[(i + 1) % 5], &ws[(i + 3) % 5], &p)?.abs());
    }
    acc.done()
}

fn quasi_jacobi_generic(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    let lie = LieData::su(2);
    for _ in 0..ctx.samples {
        let cs: Vec<MatC> = (0..3).map(|_| sample::ginibre(&mut ctx.rng, 2)).collect();
        let f = const_word(Space::Quasi, &["C0", "g1"], Part::Re, cs[0].clone());
        let g = const_word(Space::Quasi, &["C0", "g2"], Part::Re, cs[1].clone());
        let h = const_word(Space::Quasi, &["C0", "g1", "g2"], Part::Re, cs[2].clone());
        let p = sample::point(&mut ctx.rng, &lie, Space::Quasi, 0.5, 0.3);
        acc.add(jacobiator(&lie, BracketKind::Qpb, &f, &g, &h, &p)?.abs());
    }
    acc.done()
}

// ---------------------------------------------------------------- flows

const UNREDUCED: [Space; 4] = [Space::Cotangent, Space::HeisenbergGB, Space::HeisenbergK, Space::Quasi];

fn group_law(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    for i in 0..ctx.samples {
        let lie = lie_cycle(i);
        for space in UNREDUCED {
            for fam in [Family::Pi1, Family::Pi2] {
                for h in family_hamiltonians(space, fam) {
                    let p = sample::point(&mut ctx.rng, &lie, space, 0.6, 0.3);
                    let (t1, t2) = (sample::uniform(&mut ctx.rng, 0.1, 0.6), sample::uniform(&mut ctx.rng, 0.1, 0.6));
                    let direct = exact_flow(&lie, fam, &h, &p, t1 + t2)?;
                    let composed = exact_flow(&lie, fam, &h, &exact_flow(&lie, fam, &h, &p, t1)?, t2)?;
                    let scale = direct.components.iter().map(|m| m.frob_norm()).fold(1.0, f64::max);
                    acc.add(direct.dist(&composed) / scale);
                }
            }
        }
    }
    acc.done()
}

fn cotangent_constants(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    for i in 0..ctx.samples {
        let lie = lie_cycle(i);
        for h in family_hamiltonians(Space::Cotangent, Family::Pi2) {
            let p = sample::point(&mut ctx.rng, &lie, Space::Cotangent, 0.6, 0.3);
            let v0 = conserved_value(ConservedKind::Psi1, &p)?;
            for t in [0.5, 1.0] {
                let v = conserved_value(ConservedKind::Psi1, &exact_flow(&lie, Family::Pi2, &h, &p, t)?)?;
                acc.add(max_trace_gap(&v[0], &v0[0]).max(max_trace_gap(&v[1], &v0[1])));
            }
        }
    }
    acc.done()
}

fn w_spectrum(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    for i in 0..ctx.samples {
        let lie = lie_cycle(i);
        for h in family_hamiltonians(Space::HeisenbergK, Family::Pi1) {
            let k = sample::point(&mut ctx.rng, &lie, Space::HeisenbergK, 0.5, 0.3);
            let w0 = conserved_value(ConservedKind::Psi4, &k)?;
            for t in [0.5, 1.0] {
                let w = conserved_value(ConservedKind::Psi4, &exact_flow(&lie, Family::Pi1, &h, &k, t)?)?;
                acc.add(max_trace_gap(&w[0], &w0[0]));
            }
        }
    }
    acc.done()
}

fn quasi_constants(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    for i in 0..ctx.samples {
        let lie = lie_cycle(i);
        for h in family_hamiltonians(Space::Quasi, Family::Pi2) {
            let p = sample::point(&mut ctx.rng, &lie, Space::Quasi, 0.6, 0.3);
            let v0 = conserved_value(ConservedKind::QuasiPair, &p)?;
            for t in [0.5, 1.0] {
                let v = conserved_value(ConservedKind::QuasiPair, &exact_flow(&lie, Family::Pi2, &h, &p, t)?)?;
                acc.add(v[0].dist(&v0[0]).max(v[1].dist(&v0[1])));
            }
        }
    }
    acc.done()
}

fn involution(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    let cases = [
        (Space::Cotangent, BracketKind::PbCotangent),
        (Space::HeisenbergGB, BracketKind::PbFM),
        (Space::HeisenbergK, BracketKind::PbPlus),
        (Space::Quasi, BracketKind::Qpb),
    ];
    for (space, kind) in cases {
        for fam in [Family::Pi1, Family::Pi2] {
            let hs = family_hamiltonians(space, fam);
            for i in 0..ctx.samples {
                let lie = lie_cycle(i);
                let p = sample::point(&mut ctx.rng, &lie, space, 0.5, 0.3);
                acc.add(bracket(&lie, kind, &hs[0], &hs[1], &p)?.abs());
            }
        }
    }
    acc.done()
}

/// Richardson-extrapolated central difference of a matrix curve.
fn curve_derivative(at: &dyn Fn(f64) -> Result<PhasePoint>, t: f64, eps: f64) -> Result<Vec<MatC>> {
    let (fp, fm, fp2, fm2) = (at(t + eps)?, at(t - eps)?, at(t + eps / 2.0)?, at(t - eps / 2.0)?);
    Ok((0..fp.components.len())
        .map(|s| {
            let d1 = (fp.c(s) - fm.c(s)).scale_re(1.0 / (2.0 * eps));
            let d2 = (fp2.c(s) - fm2.c(s)).scale_re(1.0 / eps);
            (&d2.scale_re(4.0) - &d1).scale_re(1.0 / 3.0)
        })
        .collect())
}

fn heisenberg_curve_velocity(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    let gb = Space::HeisenbergGB;
    let h = word(gb, &["g", "g"], Part::Re, 0.7)?.plus(word(gb, &["g"], Part::Im, 0.4)?);
    for i in 0..ctx.samples {
        let lie = su_cycle(i);
        let p = sample::point(&mut ctx.rng, &lie, gb, 0.5, 0.3);
        let t = sample::uniform(&mut ctx.rng, 0.2, 1.0);
        let at = |s: f64| exact_flow(&lie, Family::Pi1, &h, &p, s);
        let fd = curve_derivative(&at, t, 1e-4)?;
        let (gdot, bdot) = heis_pi1_velocity(&lie, &h, &at(t)?)?;
        acc.add(fd[0].dist(&gdot).max(fd[1].dist(&bdot)));
    }
    acc.done()
}

fn transformed_curve(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    let hs = family_hamiltonians(Space::HeisenbergGB, Family::Pi1);
    for i in 0..ctx.samples {
        let lie = lie_cycle(i);
        let p = sample::point(&mut ctx.rng, &lie, Space::HeisenbergGB, 0.5, 0.3);
        let eta = sample::haar_unitary(&mut ctx.rng, &lie);
        acc.add(transformed_curve_defect(&lie, &hs[i % 2], &eta, &p, 0.7)?);
    }
    acc.done()
}

fn flow_equivariance(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    for i in 0..ctx.samples {
        let lie = lie_cycle(i);
        for space in [Space::Cotangent, Space::Quasi] {
            for fam in [Family::Pi1, Family::Pi2] {
                let h = &family_hamiltonians(space, fam)[i % 2];
                let p = sample::point(&mut ctx.rng, &lie, space, 0.6, 0.3);
                let eta = sample::haar_unitary(&mut ctx.rng, &lie);
                let a = act(&eta, &exact_flow(&lie, fam, h, &p, 0.8)?)?;
                let b = exact_flow(&lie, fam, h, &act(&eta, &p)?, 0.8)?;
                acc.add(a.dist(&b));
            }
        }
    }
    acc.done()
}

fn model_consistency(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    for i in 0..ctx.samples {
        let lie = lie_cycle(i);
        for fam in [Family::Pi1, Family::Pi2] {
            let h = &family_hamiltonians(Space::HeisenbergGB, fam)[i % 2];
            let p = sample::point(&mut ctx.rng, &lie, Space::HeisenbergGB, 0.5, 0.3);
            acc.add(model_consistency_defect(&lie, fam, h, &p, 0.7)?);
        }
    }
    acc.done()
}

/// Starting points are resampled until the whole run keeps root gaps above
/// 0.3, the regularity the comparison presupposes.
pub fn projection_run(lie: &LieData, r: &mut SeededRng, system: ReducedSystem, t_max: f64, dt: f64) -> Result<crate::flows::ProjectionReport> {
    let h = projection_hamiltonian(system);
    for _ in 0..50 {
        let p = sample::point(r, lie, system.slice(), 0.4, 0.8);
        let rep = projection_check(lie, system, &h, &p, t_max, dt, 10)?;
        if rep.min_gap > 0.3 {
            return Ok(rep);
        }
    }
    Err(Error::Regularity(format!("{system}: no regular run found")))
}

fn projection(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    for _ in 0..ctx.samples {
        for n in [2, 3] {
            let lie = LieData::su(n);
            for system in ReducedSystem::ALL {
                acc.add(projection_run(&lie, &mut ctx.rng, system, 0.5, 1e-3)?.panel_max);
            }
        }
    }
    acc.done()
}

// ---------------------------------------------------------------- conserved

fn designated(kind: ConservedKind) -> Vec<(Family, Space)> {
    match kind.family() {
        Some(f) => vec![(f, kind.source())],
        None => vec![(Family::Pi1, kind.source()), (Family::Pi2, kind.source())],
    }
}

fn constancy(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    for i in 0..ctx.samples {
        let lie = lie_cycle(i);
        for kind in ConservedKind::ALL {
            let mut spaces = designated(kind);
            if kind.source() == Space::HeisenbergGB {
                spaces.extend(designated(kind).into_iter().map(|(f, _)| (f, Space::HeisenbergK)));
            }
            for (fam, space) in spaces {
                for h in family_hamiltonians(space, fam) {
                    let p = sample::point(&mut ctx.rng, &lie, space, 0.5, 0.3);
                    let v0 = conserved_value(kind, &p)?;
                    for t in [0.5, 1.0] {
                        let v = conserved_value(kind, &exact_flow(&lie, fam, &h, &p, t)?)?;
                        acc.add(v.iter().zip(&v0).map(|(a, b)| a.dist(b)).fold(0.0, f64::max));
                    }
                }
            }
        }
    }
    acc.done()
}

fn invariant_relation(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    for i in 0..ctx.samples {
        let lie = lie_cycle(i);
        let p = sample::point(&mut ctx.rng, &lie, Space::Cotangent, 1.0, 0.3);
        let v = conserved_value(ConservedKind::Psi1, &p)?;
        acc.add(max_trace_gap(&v[0], &v[1]));
    }
    acc.done()
}

fn moment_orthogonality(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    for i in 0..ctx.samples {
        let lie = lie_cycle(i);
        let p = sample::point(&mut ctx.rng, &lie, Space::RedCot1, 1.0, 0.3);
        acc.add(moment_cartan_pairing(&lie, &p)?);
    }
    acc.done()
}

fn left_right_invariants(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    for i in 0..ctx.samples {
        let lie = lie_cycle(i);
        acc.add(left_right_trace_defect(&sample::group_complex(&mut ctx.rng, &lie, 0.7))?);
    }
    acc.done()
}

fn conserved_equivariance(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    for i in 0..ctx.samples {
        let lie = lie_cycle(i);
        for kind in ConservedKind::ALL {
            let p = sample::point(&mut ctx.rng, &lie, kind.source(), 0.5, 0.3);
            let eta = sample::haar_unitary(&mut ctx.rng, &lie);
            acc.add(equivariance_defect(kind, &eta, &p)?);
        }
        let k = sample::point(&mut ctx.rng, &lie, Space::HeisenbergK, 0.5, 0.3);
        let eta = sample::haar_unitary(&mut ctx.rng, &lie);
        acc.add(equivariance_defect(ConservedKind::Psi4, &eta, &k)?);
    }
    acc.done()
}

fn spin_sutherland(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    for i in 0..ctx.samples {
        let lie = su_cycle(i);
        let q = sample::regular_angles(&mut ctx.rng, &lie, 0.2);
        let p = sample::regular_real_diag(&mut ctx.rng, &lie, 1.0, 0.0);
        let xi = lie.proj_perp(&sample::algebra_g(&mut ctx.rng, &lie, 1.0));
        let j = spin_suth_pack(&lie, &q, &p, &xi)?;
        let h = spin_suth_hamiltonian(&q, &p, &xi)?;
        acc.add(rel((-0.5 * lie.form_g(&j, &j) - h).abs(), h));
    }
    acc.done()
}

fn bplus_residual(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    for i in 0..ctx.samples {
        let lie = lie_cycle(i);
        let q = sample::regular_torus(&mut ctx.rng, &lie, 0.3);
        let sp = unit_diagonal_upper(&mut ctx.rng, lie.n);
        let b = conserved::solve_bplus(&q, &sp)?;
        acc.add(conserved::bplus_residual(&q, &sp, &b)?);
    }
    acc.done()
}

fn modular_relations(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    for i in 0..ctx.samples {
        let lie = lie_cycle(i);
        acc.add(sl2z_relation_defect(&sample::point(&mut ctx.rng, &lie, Space::Quasi, 0.5, 0.3))?);
    }
    acc.done()
}

fn modular_brackets(ctx: &mut Ctx) -> Result<Outcome> {
    let mut acc = Acc::default();
    let ws = invariant_words(Space::Quasi);
    for i in 0..ctx.samples {
        let lie = su_cycle(i);
        let p = sample::point(&mut ctx.rng, &lie, Space::Quasi, 0.5, 0.3);
        for which in [Sl2z::S, Sl2z::T] {
            acc.add(sl2z_bracket_defect(&lie, which, &ws[i % 5], &ws[(i + 2) % 5], &p)?);
        }
    }
    acc.done()
}

/// |ΔF^G| in combined standard errors between t = 0 and t = 1 of a cotangent flow.
fn haar_average_constancy(ctx: &mut Ctx) -> Result<Outcome> {
    use rand::Rng;
    let mut acc = Acc::default();
    let lie = LieData::su(2);
    let p = sample::point(&mut ctx.rng, &lie, Space::Cotangent, 0.8, 0.3);
    let f = Observable::numeric("Im J₁₁ + Re g₁₂", 1e-5, false, |p| Ok(p.c(1)[(0, 0)].im + p.c(0)[(0, 1)].re));
    let h = word(Space::Cotangent, &["J", "J"], Part::Re, -0.5)?;
    let moved = exact_flow(&lie, Family::Pi2, &h, &p, 1.0)?;
    let a = haar_average(&lie, &f, &p, ctx.samples, ctx.rng.random())?;
    let b = haar_average(&lie, &f, &moved, ctx.samples, ctx.rng.random())?;
    acc.add((a.mean - b.mean).abs() / a.std_error.hypot(b.std_error));
    Ok(Outcome { max_residual: acc.worst, samples: 2 * ctx.samples })
}

// ---------------------------------------------------------------- cli

fn report_determinism(ctx: &mut Ctx) -> Result<Outcome> {
    use rand::Rng;
    let mut acc = Acc::default();
    for _ in 0..ctx.samples {
        let seed: u64 = ctx.rng.random();
        let a = run_suite(Suite::Rmatrix, seed).to_json();
        let b = run_suite(Suite::Rmatrix, seed).to_json();
        acc.add(if a == b { 0.0 } else { 1.0 });
    }
    acc.done()
}

fn catalogue_coverage(_ctx: &mut Ctx) -> Result<Outcome> {
    let cat = catalogue();
    let mut names: Vec<&str> = cat.iter().map(|p| p.name).collect();
    names.sort_unstable();
    let duplicates = names.windows(2).filter(|w| w[0] == w[1]).count();
    let per_suite: usize = Suite::MODULES.iter().map(|s| cat.iter().filter(|p| p.suite == *s).count()).sum();
    let empty = Suite::MODULES.iter().filter(|s| !cat.iter().any(|p| p.suite == **s)).count();
    Ok(Outcome { max_residual: (duplicates + (cat.len() - per_suite) + empty) as f64, samples: cat.len() })
}

/// Gauge-invariant panels of every conserved map at a point, flattened.
pub fn conserved_panel(p: &PhasePoint) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for kind in ConservedKind::for_space(p.space) {
        out.extend(conserved_spectrum(kind, p)?);
    }
    Ok(out)
}
