//! Scalar functions on the phase spaces and their derivatives.
//!
//! An observable reports, for each component M of a point, a *pairing
//! matrix* P with
//!
//! ```text
//!   d/dt F(.., e^{tX} M, ..)|₀ = Re tr(X P)      (group components)
//!   d/dt F(.., M + tX, ..)|₀   = Re tr(X P)      (algebra components)
//! ```
//!
//! for every tangent direction X. Each derivative flavor used by the
//! brackets is a fixed projection of P, so the same data serves ∇, ∇′, d₂,
//! D, D′ and the K-model gradients.

use crate::config::tolerances;
use crate::cxmat::{mat_exp, MatC, C64, I};
use crate::doubles::{model_map, nu, nu_inv, to_gb_model, PhasePoint, Space};
use crate::error::{Error, Result};
use crate::lie::{trace_of_product, LieData, Variant};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// How a component varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotKind {
    /// Unitary group element, varied by e^{tX}·M with X anti-Hermitian.
    Unitary,
    /// Element of B, varied by e^{tX}·M with X ∈ 𝔅.
    Triangular,
    /// Element of G^ℂ, varied by e^{tX}·M with X arbitrary.
    Complex,
    /// Algebra element, varied additively by anti-Hermitian X.
    Additive,
}

/// Component kinds of each space, and whether the slot is a diagonal slice coordinate.
pub fn slot_kinds(space: Space) -> Vec<(SlotKind, bool)> {
    use SlotKind::*;
    match space {
        Space::Cotangent => vec![(Unitary, false), (Additive, false)],
        Space::RedCot1 => vec![(Unitary, true), (Additive, false)],
        Space::RedCot2 => vec![(Unitary, false), (Additive, true)],
        Space::HeisenbergK => vec![(Complex, false)],
        Space::HeisenbergGB => vec![(Unitary, false), (Triangular, false)],
        Space::RedHeis1 => vec![(Unitary, true), (Triangular, false)],
        Space::RedHeis2 => vec![(Unitary, false), (Triangular, true)],
        Space::Quasi => vec![(Unitary, false), (Unitary, false)],
        Space::RedQuasi => vec![(Unitary, true), (Unitary, false)],
        Space::RedQuasiPrime => vec![(Unitary, false), (Unitary, true)],
    }
}

/// Frobenius-orthogonal basis of the tangent directions of a slot.
pub fn tangent_basis(n: usize, kind: SlotKind, diagonal: bool) -> Vec<MatC> {
    let mut out = Vec::new();
    match (kind, diagonal) {
        (SlotKind::Triangular, true) => {
            for j in 0..n {
                out.push(MatC::unit(n, j, j));
            }
        }
        (_, true) => {
            for j in 0..n {
                out.push(MatC::unit(n, j, j).scale(I));
            }
        }
        (SlotKind::Unitary | SlotKind::Additive, false) => {
            for j in 0..n {
                out.push(MatC::unit(n, j, j).scale(I));
                for k in j + 1..n {
                    out.push(&MatC::unit(n, j, k) - &MatC::unit(n, k, j));
                    out.push((&MatC::unit(n, j, k) + &MatC::unit(n, k, j)).scale(I));
                }
            }
        }
        (SlotKind::Triangular, false) => {
            for j in 0..n {
                out.push(MatC::unit(n, j, j));
                for k in j + 1..n {
                    out.push(MatC::unit(n, j, k));
                    out.push(MatC::unit(n, j, k).scale(I));
                }
            }
        }
        (SlotKind::Complex, false) => {
            for j in 0..n {
                for k in 0..n {
                    out.push(MatC::unit(n, j, k));
                    out.push(MatC::unit(n, j, k).scale(I));
                }
            }
        }
    }
    out
}

/// Reassembles a pairing matrix from directional derivatives along an
/// orthogonal basis: P = Σ f_a X_a† / ‖X_a‖².
fn pairing_from_directional(basis: &[MatC], values: &[f64]) -> MatC {
    let n = basis[0].n();
    let mut p = MatC::zeros(n);
    for (x, &f) in basis.iter().zip(values) {
        let w = f / x.frob_norm().powi(2);
        p += &x.adjoint().scale_re(w);
    }
    p
}

/// Moves component `slot` of `p` along its tangent direction `x` for time `t`.
pub fn displace(p: &PhasePoint, slot: usize, x: &MatC, t: f64) -> Result<PhasePoint> {
    let kinds = slot_kinds(p.space);
    let mut out = p.clone();
    out.components[slot] = match kinds[slot].0 {
        SlotKind::Additive => &p.components[slot] + &x.scale_re(t),
        _ => &mat_exp(&x.scale_re(t))? * &p.components[slot],
    };
    Ok(out)
}

/// Letters allowed in trace words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Letter {
    G,
    GInv,
    J,
    B,
    BInv,
    BDag,
    L,
    LInv,
    G1,
    G1Inv,
    G2,
    G2Inv,
    Const(usize),
}

impl Letter {
    pub fn parse(s: &str) -> Result<Letter> {
        Ok(match s {
            "g" => Letter::G,
            "ginv" | "g^-1" | "g⁻¹" => Letter::GInv,
            "J" => Letter::J,
            "b" => Letter::B,
            "binv" | "b^-1" | "b⁻¹" => Letter::BInv,
            "bdag" | "b†" => Letter::BDag,
            "L" => Letter::L,
            "Linv" | "L^-1" | "L⁻¹" => Letter::LInv,
            "g1" | "g₁" => Letter::G1,
            "g1inv" | "g1^-1" | "g₁⁻¹" => Letter::G1Inv,
            "g2" | "g₂" => Letter::G2,
            "g2inv" | "g2^-1" | "g₂⁻¹" => Letter::G2Inv,
            other => {
                if let Some(idx) = other.strip_prefix('C').and_then(|d| d.parse().ok()) {
                    Letter::Const(idx)
                } else {
                    return Err(Error::Usage(format!("unknown letter {other:?}")));
                }
            }
        })
    }

    pub fn name(&self) -> String {
        match self {
            Letter::G => "g".into(),
            Letter::GInv => "ginv".into(),
            Letter::J => "J".into(),
            Letter::B => "b".into(),
            Letter::BInv => "binv".into(),
            Letter::BDag => "bdag".into(),
            Letter::L => "L".into(),
            Letter::LInv => "Linv".into(),
            Letter::G1 => "g1".into(),
            Letter::G1Inv => "g1inv".into(),
            Letter::G2 => "g2".into(),
            Letter::G2Inv => "g2inv".into(),
            Letter::Const(k) => format!("C{k}"),
        }
    }
}

/// Families of spaces sharing an alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    Cotangent,
    Heisenberg,
    Quasi,
}

fn family(space: Space) -> Family {
    match space.parent() {
        Space::Cotangent => Family::Cotangent,
        Space::HeisenbergGB | Space::HeisenbergK => Family::Heisenberg,
        _ => Family::Quasi,
    }
}

/// Component a letter reads from (None for constants).
fn letter_slot(fam: Family, l: Letter) -> Result<Option<usize>> {
    use Letter::*;
    let slot = match (fam, l) {
        (_, Const(_)) => None,
        (Family::Cotangent, G | GInv) => Some(0),
        (Family::Cotangent, J) => Some(1),
        (Family::Heisenberg, G | GInv) => Some(0),
        (Family::Heisenberg, B | BInv | BDag | L | LInv) => Some(1),
        (Family::Quasi, G1 | G1Inv) => Some(0),
        (Family::Quasi, G2 | G2Inv) => Some(1),
        _ => return Err(Error::Usage(format!("letter {} is not valid here", l.name()))),
    };
    Ok(slot)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    #[default]
    Re,
    Im,
}

/// Serialized description of a trace word observable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WordSpec {
    pub letters: Vec<String>,
    #[serde(default)]
    pub part: Part,
    #[serde(default = "one")]
    pub coeff: f64,
    /// Constant matrices referenced by letters C0, C1, ...
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constants: Vec<MatC>,
}

fn one() -> f64 {
    1.0
}

impl WordSpec {
    pub fn new(letters: &[&str], part: Part, coeff: f64) -> Self {
        WordSpec { letters: letters.iter().map(|s| s.to_string()).collect(), part, coeff, constants: vec![] }
    }

    pub fn re(letters: &[&str]) -> Self {
        Self::new(letters, Part::Re, 1.0)
    }

    pub fn im(letters: &[&str]) -> Self {
        Self::new(letters, Part::Im, 1.0)
    }

    pub fn with_constants(mut self, constants: Vec<MatC>) -> Self {
        self.constants = constants;
        self
    }
}

/// coeff·(Re|Im) tr(X₁⋯X_m) for letters X_i.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceWord {
    family_space: Space,
    letters: Vec<Letter>,
    part: Part,
    coeff: f64,
    constants: Vec<MatC>,
}

impl TraceWord {
    /// Serializable description of this word.
    pub fn spec(&self) -> WordSpec {
        WordSpec {
            letters: self.letters.iter().map(|l| l.name()).collect(),
            part: self.part,
            coeff: self.coeff,
            constants: self.constants.clone(),
        }
    }

    fn letter_matrices(&self, p: &PhasePoint) -> Result<Vec<MatC>> {
        let c = &p.components;
        self.letters
            .iter()
            .map(|l| {
                Ok(match l {
                    Letter::G | Letter::G1 | Letter::J | Letter::B => c[letter_slot(family(p.space), *l)?.unwrap()].clone(),
                    Letter::G2 => c[1].clone(),
                    Letter::GInv | Letter::G1Inv => c[0].inverse()?,
                    Letter::G2Inv | Letter::BInv => c[1].inverse()?,
                    Letter::BDag => c[1].adjoint(),
                    Letter::L => nu(&c[1]),
                    Letter::LInv => nu(&c[1]).inverse()?,
                    Letter::Const(k) => self
                        .constants
                        .get(*k)
                        .cloned()
                        .ok_or_else(|| Error::Usage(format!("constant C{k} not supplied")))?,
                })
            })
            .collect()
    }

    fn value(&self, p: &PhasePoint) -> Result<f64> {
        let mats = self.letter_matrices(p)?;
        if mats.is_empty() {
            let t = C64::new(p.n() as f64, 0.0);
            return Ok(self.coeff * self.take_part(t));
        }
        let prod = mats.iter().skip(1).fold(mats[0].clone(), |acc, m| &acc * m);
        Ok(self.coeff * self.take_part(prod.trace()))
    }

    fn take_part(&self, z: C64) -> f64 {
        match self.part {
            Part::Re => z.re,
            Part::Im => z.im,
        }
    }

    /// Euclidean gradients A_s with dF = Σ_s Re tr(dM_s · A_s).
    fn euclidean_gradient(&self, p: &PhasePoint) -> Result<Vec<MatC>> {
        let n = p.n();
        let mats = self.letter_matrices(p)?;
        let m = mats.len();
        let mut grads = vec![MatC::zeros(n); p.components.len()];
        let fam = family(p.space);
        for i in 0..m {
            let Some(slot) = letter_slot(fam, self.letters[i])? else { continue };
            // Cyclic remainder X_{i+1}⋯X_m X_1⋯X_{i−1}.
            let mut rest = MatC::identity(n);
            for s in 1..m {
                rest = &rest * &mats[(i + s) % m];
            }
            let cprime = match self.part {
                Part::Re => rest.scale_re(self.coeff),
                Part::Im => rest.scale(C64::new(0.0, -self.coeff)),
            };
            let comp = &p.components[slot];
            let contribution = match self.letters[i] {
                Letter::G | Letter::G1 | Letter::G2 | Letter::J | Letter::B => cprime,
                Letter::GInv | Letter::G1Inv | Letter::G2Inv | Letter::BInv => {
                    let inv = comp.inverse()?;
                    -&(&(&inv * &cprime) * &inv)
                }
                Letter::BDag => cprime.adjoint(),
                Letter::L => &comp.adjoint() * &(&cprime + &cprime.adjoint()),
                Letter::LInv => {
                    let linv = nu(comp).inverse()?;
                    let c2 = -&(&(&linv * &cprime) * &linv);
                    &comp.adjoint() * &(&c2 + &c2.adjoint())
                }
                Letter::Const(_) => unreachable!(),
            };
            grads[slot] += &contribution;
        }
        Ok(grads)
    }
}

/// Smooth maps between phase spaces used for pullbacks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointMap {
    /// K ↦ (Ξ_R(K), Λ_R(K)).
    Model,
    /// (g₁, g₂) ↦ (g₂⁻¹, g₂⁻¹g₁g₂).
    SlS,
    /// (g₁, g₂) ↦ (g₁g₂, g₂).
    SlT,
}

impl PointMap {
    pub fn source(&self) -> Space {
        match self {
            PointMap::Model => Space::HeisenbergK,
            PointMap::SlS | PointMap::SlT => Space::Quasi,
        }
    }

    pub fn apply(&self, p: &PhasePoint) -> Result<PhasePoint> {
        let c = &p.components;
        match self {
            PointMap::Model => {
                let (g, b) = model_map(&c[0])?;
                Ok(PhasePoint::pair(Space::HeisenbergGB, g, b))
            }
            PointMap::SlS => {
                let g2i = c[1].inverse()?;
                let second = &(&g2i * &c[0]) * &c[1];
                Ok(PhasePoint::pair(Space::Quasi, g2i, second))
            }
            PointMap::SlT => Ok(PhasePoint::pair(Space::Quasi, &c[0] * &c[1], c[1].clone())),
        }
    }

    /// Left-trivialized pushforward of the tangent vector moving `slot` by X.
    fn push(&self, p: &PhasePoint, image: &PhasePoint, slot: usize, x: &MatC) -> Result<Vec<MatC>> {
        let c = &p.components;
        match self {
            PointMap::Model => {
                let iw = crate::doubles::iwasawa(&c[0])?;
                let full = LieData { n: p.n(), variant: Variant::U };
                let z = &(&iw.g_l.adjoint() * x) * &iw.g_l;
                let w = &(&iw.b_l.upper_inverse()? * x) * &iw.b_l;
                let yb = -&(&(&iw.b_r * &full.proj_b(&z)) * &iw.b_r.upper_inverse()?);
                let yg = -&(&(&iw.g_r * &full.proj_g(&w)) * &iw.g_r.adjoint());
                Ok(vec![yg, yb])
            }
            PointMap::SlS | PointMap::SlT => {
                let (mut d1, mut d2) = (MatC::zeros(p.n()), MatC::zeros(p.n()));
                if slot == 0 {
                    d1 = x * &c[0];
                } else {
                    d2 = x * &c[1];
                }
                let (t1, t2) = if *self == PointMap::SlS {
                    let g2i = c[1].inverse()?;
                    let dinv = -&(&(&g2i * &d2) * &g2i);
                    let second = &(&(&dinv * &c[0]) * &c[1]) + &(&(&(&g2i * &d1) * &c[1]) + &(&(&g2i * &c[0]) * &d2));
                    (dinv, second)
                } else {
                    (&(&d1 * &c[1]) + &(&c[0] * &d2), d2)
                };
                Ok(vec![&t1 * &image.c(0).inverse()?, &t2 * &image.c(1).inverse()?])
            }
        }
    }
}

type NumericFn = Arc<dyn Fn(&PhasePoint) -> Result<f64> + Send + Sync>;

/// A scalar function on a phase space with its derivatives.
#[derive(Clone)]
pub enum Observable {
    Constant { value: f64 },
    Word { word: TraceWord, invariant: bool },
    Sum(Vec<Observable>),
    Scaled(f64, Box<Observable>),
    Product(Box<Observable>, Box<Observable>),
    Pullback { map: PointMap, inner: Box<Observable> },
    /// Black-box function differentiated by central differences with the given step.
    Numeric { f: NumericFn, step: f64, invariant: bool, label: String },
}

impl std::fmt::Debug for Observable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Observable::Constant { value } => write!(f, "Constant({value})"),
            Observable::Word { word, .. } => {
                let names: Vec<String> = word.letters.iter().map(|l| l.name()).collect();
                write!(f, "{:?}·{:?} tr({})", word.coeff, word.part, names.join(" "))
            }
            Observable::Sum(v) => write!(f, "Sum{v:?}"),
            Observable::Scaled(c, o) => write!(f, "{c}·{o:?}"),
            Observable::Product(a, b) => write!(f, "({a:?})·({b:?})"),
            Observable::Pullback { map, inner } => write!(f, "{inner:?}∘{map:?}"),
            Observable::Numeric { label, .. } => write!(f, "Numeric({label})"),
        }
    }
}

/// Trace-word observable on `space` (K-model words are pulled back through m).
pub fn make_trace_observable(space: Space, w: &WordSpec) -> Result<Observable> {
    let fam = family(space);
    let letters: Vec<Letter> = w.letters.iter().map(|s| Letter::parse(s)).collect::<Result<_>>()?;
    for l in &letters {
        letter_slot(fam, *l)?;
        if let Letter::Const(k) = l {
            if *k >= w.constants.len() {
                return Err(Error::Usage(format!("constant C{k} not supplied")));
            }
        }
    }
    if !w.coeff.is_finite() {
        return Err(Error::Schema("coefficient must be finite".into()));
    }
    let invariant = !letters.iter().any(|l| matches!(l, Letter::Const(_) | Letter::B | Letter::BInv | Letter::BDag));
    let base_space = if space == Space::HeisenbergK { Space::HeisenbergGB } else { space };
    let word = TraceWord { family_space: base_space, letters, part: w.part, coeff: w.coeff, constants: w.constants.clone() };
    let obs = Observable::Word { word, invariant };
    if space == Space::HeisenbergK {
        Ok(Observable::Pullback { map: PointMap::Model, inner: Box::new(obs) })
    } else {
        Ok(obs)
    }
}

/// Shorthand for a word observable from letter names.
pub fn word(space: Space, letters: &[&str], part: Part, coeff: f64) -> Result<Observable> {
    make_trace_observable(space, &WordSpec::new(letters, part, coeff))
}

impl Observable {
    pub fn constant(value: f64) -> Self {
        Observable::Constant { value }
    }

    pub fn numeric(label: &str, step: f64, invariant: bool, f: impl Fn(&PhasePoint) -> Result<f64> + Send + Sync + 'static) -> Self {
        Observable::Numeric { f: Arc::new(f), step, invariant, label: label.into() }
    }

    pub fn plus(self, other: Observable) -> Self {
        Observable::Sum(vec![self, other])
    }

    pub fn times(self, other: Observable) -> Self {
        Observable::Product(Box::new(self), Box::new(other))
    }

    pub fn scaled(self, c: f64) -> Self {
        Observable::Scaled(c, Box::new(self))
    }

    pub fn pullback(self, map: PointMap) -> Self {
        Observable::Pullback { map, inner: Box::new(self) }
    }

    /// Whether the observable is invariant under the natural action of its space.
    pub fn is_invariant(&self) -> bool {
        match self {
            Observable::Constant { .. } => true,
            Observable::Word { invariant, .. } => *invariant,
            Observable::Sum(v) => v.iter().all(|o| o.is_invariant()),
            Observable::Scaled(_, o) => o.is_invariant(),
            Observable::Product(a, b) => a.is_invariant() && b.is_invariant(),
            Observable::Pullback { map, inner } => *map == PointMap::Model && inner.is_invariant(),
            Observable::Numeric { invariant, .. } => *invariant,
        }
    }

    pub fn value(&self, p: &PhasePoint) -> Result<f64> {
        match self {
            Observable::Constant { value } => Ok(*value),
            Observable::Word { word, .. } => {
                if family(word.family_space) != family(p.space) || p.space == Space::HeisenbergK {
                    return Err(Error::WrongSpace { expected: word.family_space.tag().into(), got: p.space.tag().into() });
                }
                word.value(p)
            }
            Observable::Sum(v) => v.iter().map(|o| o.value(p)).sum(),
            Observable::Scaled(c, o) => Ok(c * o.value(p)?),
            Observable::Product(a, b) => Ok(a.value(p)? * b.value(p)?),
            Observable::Pullback { map, inner } => {
                p.expect(map.source())?;
                inner.value(&map.apply(p)?)
            }
            Observable::Numeric { f, .. } => f(p),
        }
    }

    /// Left-trivialized pairing matrices, one per component.
    pub fn pairings(&self, p: &PhasePoint) -> Result<Vec<MatC>> {
        let n = p.n();
        let k = p.components.len();
        match self {
            Observable::Constant { .. } => Ok(vec![MatC::zeros(n); k]),
            Observable::Word { word, .. } => {
                if family(word.family_space) != family(p.space) || p.space == Space::HeisenbergK {
                    return Err(Error::WrongSpace { expected: word.family_space.tag().into(), got: p.space.tag().into() });
                }
                let grads = word.euclidean_gradient(p)?;
                let kinds = slot_kinds(p.space);
                Ok(grads
                    .iter()
                    .enumerate()
                    .map(|(s, a)| match kinds[s].0 {
                        SlotKind::Additive => a.clone(),
                        _ => &p.components[s] * a,
                    })
                    .collect())
            }
            Observable::Sum(v) => {
                let mut acc = vec![MatC::zeros(n); k];
                for o in v {
                    for (a, b) in acc.iter_mut().zip(o.pairings(p)?) {
                        *a += &b;
                    }
                }
                Ok(acc)
            }
            Observable::Scaled(c, o) => Ok(o.pairings(p)?.iter().map(|m| m.scale_re(*c)).collect()),
            Observable::Product(a, b) => {
                let (va, vb) = (a.value(p)?, b.value(p)?);
                let (pa, pb) = (a.pairings(p)?, b.pairings(p)?);
                Ok(pa.iter().zip(&pb).map(|(x, y)| &x.scale_re(vb) + &y.scale_re(va)).collect())
            }
            Observable::Pullback { map, inner } => {
                p.expect(map.source())?;
                let image = map.apply(p)?;
                let inner_p = inner.pairings(&image)?;
                let kinds = slot_kinds(p.space);
                let mut out = Vec::with_capacity(k);
                for (s, (kind, diag)) in kinds.iter().enumerate() {
                    let basis = tangent_basis(n, *kind, *diag);
                    let vals: Vec<f64> = basis
                        .iter()
                        .map(|x| {
                            let pushed = map.push(p, &image, s, x)?;
                            Ok(pushed.iter().zip(&inner_p).map(|(y, q)| trace_of_product(y, q).re).sum())
                        })
                        .collect::<Result<_>>()?;
                    out.push(pairing_from_directional(&basis, &vals));
                }
                Ok(out)
            }
            Observable::Numeric { f, step, .. } => {
                let kinds = slot_kinds(p.space);
                let mut out = Vec::with_capacity(k);
                for (s, (kind, diag)) in kinds.iter().enumerate() {
                    let basis = tangent_basis(n, *kind, *diag);
                    let vals: Vec<f64> = basis
                        .iter()
                        .map(|x| {
                            let fp = f(&displace(p, s, x, *step)?)?;
                            let fm = f(&displace(p, s, x, -*step)?)?;
                            Ok((fp - fm) / (2.0 * step))
                        })
                        .collect::<Result<_>>()?;
                    out.push(pairing_from_directional(&basis, &vals));
                }
                Ok(out)
            }
        }
    }

    /// All derivative data of the observable at `p`.
    pub fn derivs(&self, lie: &LieData, p: &PhasePoint) -> Result<Derivs> {
        Ok(Derivs { lie: *lie, point: p.clone(), pairings: self.pairings(p)? })
    }

    pub fn derivative(&self, lie: &LieData, p: &PhasePoint, flavor: Flavor) -> Result<MatC> {
        self.derivs(lie, p)?.flavor(flavor)
    }
}

/// Derivative flavors used by the brackets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Flavor {
    /// 𝔊-valued left derivative on the first component, dual under ⟨,⟩.
    #[serde(rename = "nabla1")]
    Nabla1,
    #[serde(rename = "nabla1p")]
    Nabla1p,
    /// 𝔊-valued left derivative on the second component.
    #[serde(rename = "nabla2")]
    Nabla2,
    #[serde(rename = "nabla2p")]
    Nabla2p,
    /// 𝔊-valued derivative with respect to the additive component J.
    #[serde(rename = "d2")]
    D2Add,
    /// 𝔅-valued left derivative on the unitary component, dual under ⟨,⟩_I.
    #[serde(rename = "D1")]
    D1,
    #[serde(rename = "D1p")]
    D1p,
    /// 𝔊-valued left derivative on the triangular component, dual under ⟨,⟩_I.
    #[serde(rename = "D2")]
    D2,
    #[serde(rename = "D2p")]
    D2p,
    /// 𝔊-valued derivative along X·L + L·X† for X ∈ 𝔅.
    #[serde(rename = "scriptD")]
    ScriptD,
    /// gl-valued left derivative on K, dual under ⟨,⟩_I.
    #[serde(rename = "nablaK")]
    NablaK,
    #[serde(rename = "nablaKp")]
    NablaKp,
}

impl Flavor {
    /// Component the flavor differentiates, and whether it is a right derivative.
    fn slot(&self) -> (usize, bool) {
        match self {
            Flavor::Nabla1 | Flavor::D1 | Flavor::NablaK => (0, false),
            Flavor::Nabla1p | Flavor::D1p | Flavor::NablaKp => (0, true),
            Flavor::Nabla2 | Flavor::D2 | Flavor::D2Add | Flavor::ScriptD => (1, false),
            Flavor::Nabla2p | Flavor::D2p => (1, true),
        }
    }

    /// Whether values pair with directions through ⟨,⟩_I rather than ⟨,⟩.
    pub fn uses_imaginary_form(&self) -> bool {
        !matches!(self, Flavor::Nabla1 | Flavor::Nabla1p | Flavor::Nabla2 | Flavor::Nabla2p | Flavor::D2Add)
    }
}

/// Pairing matrices of one observable at one point, with flavor projections.
#[derive(Debug, Clone)]
pub struct Derivs {
    pub lie: LieData,
    pub point: PhasePoint,
    pub pairings: Vec<MatC>,
}

impl Derivs {
    /// Pairing matrix for the right derivative t ↦ F(M e^{tX}): M⁻¹PM.
    fn right_pairing(&self, slot: usize) -> Result<MatC> {
        let m = &self.point.components[slot];
        Ok(&(&m.inverse()? * &self.pairings[slot]) * m)
    }

    pub fn flavor(&self, flavor: Flavor) -> Result<MatC> {
        let (slot, right) = flavor.slot();
        if slot >= self.pairings.len() {
            return Err(Error::Usage(format!("flavor {flavor:?} does not exist on {}", self.point.space)));
        }
        let kinds = slot_kinds(self.point.space);
        let (kind, diagonal) = kinds[slot];
        let ok = match flavor {
            Flavor::Nabla1 | Flavor::Nabla1p | Flavor::Nabla2 | Flavor::Nabla2p | Flavor::D1 | Flavor::D1p => kind == SlotKind::Unitary,
            Flavor::D2Add => kind == SlotKind::Additive,
            Flavor::D2 | Flavor::D2p | Flavor::ScriptD => kind == SlotKind::Triangular,
            Flavor::NablaK | Flavor::NablaKp => kind == SlotKind::Complex,
        };
        if !ok {
            return Err(Error::Usage(format!("flavor {flavor:?} does not exist on {}", self.point.space)));
        }
        let p = if right { self.right_pairing(slot)? } else { self.pairings[slot].clone() };
        let lie = &self.lie;
        let value = match flavor {
            Flavor::Nabla1 | Flavor::Nabla1p | Flavor::Nabla2 | Flavor::Nabla2p | Flavor::D2Add => lie.antiherm(&p),
            Flavor::D1 | Flavor::D1p => lie.proj_b(&p.scale(I)),
            Flavor::D2 | Flavor::D2p | Flavor::ScriptD => lie.proj_g(&p.scale(I)),
            Flavor::NablaK | Flavor::NablaKp => lie.drop_trace(p.scale(I)),
        };
        // On a slice the diagonal coordinate only moves along the Cartan directions.
        Ok(if diagonal {
            match flavor {
                Flavor::D1 | Flavor::D1p => lie.proj_ig0(&value),
                _ => lie.proj_g0(&value),
            }
        } else {
            value
        })
    }
}

/// Pairs a flavor value with a direction the way its defining identity does.
pub fn pair_with_direction(lie: &LieData, flavor: Flavor, value: &MatC, direction: &MatC) -> f64 {
    if flavor.uses_imaginary_form() {
        lie.form_i(direction, value)
    } else {
        lie.form_g(direction, value)
    }
}

/// Curve through p whose velocity the flavor measures.
fn flavor_curve(p: &PhasePoint, flavor: Flavor, x: &MatC, t: f64) -> Result<PhasePoint> {
    let (slot, right) = flavor.slot();
    let mut out = p.clone();
    let m = &p.components[slot];
    let e = || mat_exp(&x.scale_re(t));
    out.components[slot] = match flavor {
        Flavor::D2Add => m + &x.scale_re(t),
        Flavor::ScriptD => {
            let e = e()?;
            nu_inv(&(&(&e * &nu(m)) * &e.adjoint()))?
        }
        _ if right => m * &e()?,
        _ => &e()? * m,
    };
    Ok(out)
}

/// Central difference of F along the flavor's defining curve, Richardson-extrapolated once.
pub fn fd_derivative(f: &Observable, p: &PhasePoint, flavor: Flavor, direction: &MatC) -> Result<f64> {
    fd_derivative_step(f, p, flavor, direction, tolerances().fd_step)
}

pub fn fd_derivative_step(f: &Observable, p: &PhasePoint, flavor: Flavor, direction: &MatC, h: f64) -> Result<f64> {
    let central = |h: f64| -> Result<f64> {
        let fp = f.value(&flavor_curve(p, flavor, direction, h)?)?;
        let fm = f.value(&flavor_curve(p, flavor, direction, -h)?)?;
        Ok((fp - fm) / (2.0 * h))
    };
    let d1 = central(h)?;
    let d2 = central(h / 2.0)?;
    Ok((4.0 * d2 - d1) / 3.0)
}

/// Residual norm of the invariance identity satisfied by invariant observables.
///
/// cotangent: g⁻¹∇₁F g − ∇₁F − [J, d₂F]; Heisenberg: D₁F − D₁′F + (bD₂′F b⁻¹)_𝔅;
/// quasi: ∇₁F − ∇₁′F + ∇₂F − ∇₂′F.
pub fn invariance_defect(lie: &LieData, f: &Observable, p: &PhasePoint) -> Result<f64> {
    let q = p.lift();
    let d = f.derivs(lie, &q)?;
    let c = &q.components;
    let res = match q.space {
        Space::Cotangent => {
            let n1 = d.flavor(Flavor::Nabla1)?;
            let lhs = &(&c[0].adjoint() * &n1) * &c[0];
            &(&lhs - &n1) - &c[1].commutator(&d.flavor(Flavor::D2Add)?)
        }
        Space::HeisenbergGB => {
            let d2p = d.flavor(Flavor::D2p)?;
            let conj = &(&c[1] * &d2p) * &c[1].inverse()?;
            &(&d.flavor(Flavor::D1)? - &d.flavor(Flavor::D1p)?) + &lie.proj_b(&conj)
        }
        Space::Quasi => {
            let a = &d.flavor(Flavor::Nabla1)? - &d.flavor(Flavor::Nabla1p)?;
            let b = &d.flavor(Flavor::Nabla2)? - &d.flavor(Flavor::Nabla2p)?;
            &a + &b
        }
        Space::HeisenbergK => {
            // In the K model the identity is the G×B one transported by m.
            return match f {
                Observable::Pullback { map: PointMap::Model, inner } => invariance_defect(lie, inner, &to_gb_model(&q)?),
                _ => Err(Error::Usage("K-model invariance is checked on pullbacks through m".into())),
            };
        }
        _ => unreachable!(),
    };
    Ok(res.frob_norm())
}
