//! Phase spaces of the three doubles, the Iwasawa maps, dressing, the two
//! Heisenberg models and the group actions.

use crate::config::tolerances;
use crate::cxmat::{diag_unitary, mat_exp, qr_pos, rq_pos, chol_upper, MatC, C64};
use crate::error::{Error, Result};
use crate::lie::{LieData, RegularKind};
use serde::{Deserialize, Serialize};

/// Phase-space tags. Reduced slices store their diagonal component as a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Space {
    /// (g, J) ∈ G × 𝔊.
    #[serde(rename = "cotangent")]
    Cotangent,
    /// K ∈ G^ℂ.
    #[serde(rename = "heisenberg_K")]
    HeisenbergK,
    /// (g, b) ∈ G × B.
    #[serde(rename = "heisenberg_GB")]
    HeisenbergGB,
    /// (g₁, g₂) ∈ G × G.
    #[serde(rename = "quasi")]
    Quasi,
    /// (Q, J) with Q regular diagonal.
    #[serde(rename = "red_cot_1")]
    RedCot1,
    /// (g, λ) with λ regular imaginary diagonal.
    #[serde(rename = "red_cot_2")]
    RedCot2,
    /// (Q, b) with Q regular diagonal.
    #[serde(rename = "red_heis_1")]
    RedHeis1,
    /// (g, Γ) with Γ regular positive diagonal.
    #[serde(rename = "red_heis_2")]
    RedHeis2,
    /// (Q, g) with g₁ = Q regular diagonal.
    #[serde(rename = "red_quasi")]
    RedQuasi,
    /// (g, Q) with g₂ = Q regular diagonal.
    #[serde(rename = "red_quasi_prime")]
    RedQuasiPrime,
}

impl Space {
    pub const ALL: [Space; 10] = [
        Space::Cotangent,
        Space::HeisenbergK,
        Space::HeisenbergGB,
        Space::Quasi,
        Space::RedCot1,
        Space::RedCot2,
        Space::RedHeis1,
        Space::RedHeis2,
        Space::RedQuasi,
        Space::RedQuasiPrime,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            Space::Cotangent => "cotangent",
            Space::HeisenbergK => "heisenberg_K",
            Space::HeisenbergGB => "heisenberg_GB",
            Space::Quasi => "quasi",
            Space::RedCot1 => "red_cot_1",
            Space::RedCot2 => "red_cot_2",
            Space::RedHeis1 => "red_heis_1",
            Space::RedHeis2 => "red_heis_2",
            Space::RedQuasi => "red_quasi",
            Space::RedQuasiPrime => "red_quasi_prime",
        }
    }

    /// The unreduced space a slice sits in (a slice point is literally a point of it).
    pub fn parent(&self) -> Space {
        match self {
            Space::RedCot1 | Space::RedCot2 => Space::Cotangent,
            Space::RedHeis1 | Space::RedHeis2 => Space::HeisenbergGB,
            Space::RedQuasi | Space::RedQuasiPrime => Space::Quasi,
            other => *other,
        }
    }

    pub fn is_reduced(&self) -> bool {
        self.parent() != *self
    }

    pub fn arity(&self) -> usize {
        if *self == Space::HeisenbergK {
            1
        } else {
            2
        }
    }

    /// Index of the diagonal slice component, if any.
    pub fn diagonal_slot(&self) -> Option<usize> {
        match self {
            Space::RedCot1 | Space::RedHeis1 | Space::RedQuasi => Some(0),
            Space::RedCot2 | Space::RedHeis2 | Space::RedQuasiPrime => Some(1),
            _ => None,
        }
    }
}

impl std::fmt::Display for Space {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for Space {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Space::ALL
            .iter()
            .copied()
            .find(|sp| sp.tag() == s)
            .ok_or_else(|| Error::Schema(format!("unknown space {s:?}")))
    }
}

/// A point of one of the phase spaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub space: Space,
    pub components: Vec<MatC>,
}

impl PhasePoint {
    pub fn new(space: Space, components: Vec<MatC>) -> Self {
        PhasePoint { space, components }
    }

    pub fn pair(space: Space, a: MatC, b: MatC) -> Self {
        PhasePoint { space, components: vec![a, b] }
    }

    pub fn n(&self) -> usize {
        self.components[0].n()
    }

    pub fn c(&self, i: usize) -> &MatC {
        &self.components[i]
    }

    pub fn expect(&self, space: Space) -> Result<()> {
        if self.space == space {
            Ok(())
        } else {
            Err(Error::WrongSpace { expected: space.tag().into(), got: self.space.tag().into() })
        }
    }

    /// The same matrices viewed in the unreduced parent space.
    pub fn lift(&self) -> PhasePoint {
        PhasePoint { space: self.space.parent(), components: self.components.clone() }
    }

    pub fn with_space(&self, space: Space) -> PhasePoint {
        PhasePoint { space, components: self.components.clone() }
    }

    /// Distance between points of the same space.
    pub fn dist(&self, other: &PhasePoint) -> f64 {
        self.components.iter().zip(&other.components).map(|(a, b)| a.dist(b)).sum()
    }

    /// Largest violation of the structural tags of this space.
    pub fn structure_defect(&self, lie: &LieData) -> f64 {
        let unit = |m: &MatC| m.unitarity_defect() + det_defect(lie, m);
        let anti = |m: &MatC| lie.membership_defect(m, crate::lie::Subspace::G);
        let tri = |m: &MatC| {
            let mut d = 0.0;
            for j in 0..m.n() {
                for k in 0..j {
                    d += m[(j, k)].norm();
                }
                d += m[(j, j)].im.abs() + (-m[(j, j)].re).max(0.0);
            }
            d + det_defect(lie, m)
        };
        let offdiag = |m: &MatC| lie.proj_perp(m).frob_norm();
        let c = &self.components;
        match self.space {
            Space::Cotangent => unit(&c[0]) + anti(&c[1]),
            Space::HeisenbergK => det_defect(lie, &c[0]),
            Space::HeisenbergGB => unit(&c[0]) + tri(&c[1]),
            Space::Quasi => unit(&c[0]) + unit(&c[1]),
            Space::RedCot1 => unit(&c[0]) + offdiag(&c[0]) + anti(&c[1]),
            Space::RedCot2 => unit(&c[0]) + anti(&c[1]) + offdiag(&c[1]),
            Space::RedHeis1 => unit(&c[0]) + offdiag(&c[0]) + tri(&c[1]),
            Space::RedHeis2 => unit(&c[0]) + tri(&c[1]) + offdiag(&c[1]),
            Space::RedQuasi => unit(&c[0]) + offdiag(&c[0]) + unit(&c[1]),
            Space::RedQuasiPrime => unit(&c[0]) + unit(&c[1]) + offdiag(&c[1]),
        }
    }

    /// Checks arity, dimension, structural tags and slice regularity.
    pub fn validate(&self, lie: &LieData) -> Result<()> {
        if self.components.len() != self.space.arity() {
            return Err(Error::Schema(format!("{} expects {} components", self.space, self.space.arity())));
        }
        if self.components.iter().any(|m| m.n() != lie.n) {
            return Err(Error::Schema(format!("components must be {}x{}", lie.n, lie.n)));
        }
        let defect = self.structure_defect(lie);
        if defect > 1e-8 {
            return Err(Error::Contract(format!("{} point violates structure by {defect:e}", self.space)));
        }
        if let Some(slot) = self.space.diagonal_slot() {
            let kind = match self.space {
                Space::RedCot2 => RegularKind::Cartan,
                Space::RedHeis2 => RegularKind::B0,
                _ => RegularKind::Torus,
            };
            lie.require_regular(self.c(slot), kind)?;
        }
        Ok(())
    }
}

fn det_defect(lie: &LieData, m: &MatC) -> f64 {
    match lie.variant {
        crate::lie::Variant::Su => (m.det() - C64::new(1.0, 0.0)).norm(),
        crate::lie::Variant::U => 0.0,
    }
}

/// Element of the normalizer of the diagonal torus: a permutation followed
/// by diagonal phases, acting as η = D·P.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeElement {
    /// `perm[j]` is the old index moved to position j.
    pub perm: Vec<usize>,
    pub phases: Vec<C64>,
}

impl GaugeElement {
    pub fn identity(n: usize) -> Self {
        GaugeElement { perm: (0..n).collect(), phases: vec![C64::new(1.0, 0.0); n] }
    }

    pub fn is_identity_perm(&self) -> bool {
        self.perm.iter().enumerate().all(|(j, &p)| j == p)
    }

    /// The matrix η with (η X η⁻¹)_{jk} = phase_j·conj(phase_k)·X_{perm j, perm k}.
    pub fn matrix(&self) -> MatC {
        let n = self.perm.len();
        MatC::from_fn(n, |j, k| if self.perm[j] == k { self.phases[j] } else { C64::new(0.0, 0.0) })
    }

    /// First `other`, then `self`.
    pub fn compose(&self, other: &GaugeElement) -> GaugeElement {
        let n = self.perm.len();
        let perm = (0..n).map(|j| other.perm[self.perm[j]]).collect();
        let phases = (0..n).map(|j| self.phases[j] * other.phases[self.perm[j]]).collect();
        GaugeElement { perm, phases }
    }
}

/// The four Iwasawa factors of K = g_L·b_R⁻¹ = b_L·g_R⁻¹.
#[derive(Debug, Clone, PartialEq)]
pub struct Iwasawa {
    pub g_l: MatC,
    pub b_r: MatC,
    pub b_l: MatC,
    pub g_r: MatC,
}

/// Both Iwasawa decompositions of an invertible K.
///
/// qr_pos(K) = Q·R gives g_L = Q, b_R = R⁻¹; rq_pos(K) = R'·Q' gives
/// b_L = R', g_R = Q'⁻¹ = Q'†.
pub fn iwasawa(k: &MatC) -> Result<Iwasawa> {
    let (q, r) = qr_pos(k)?;
    let (r2, q2) = rq_pos(k)?;
    Ok(Iwasawa { g_l: q, b_r: r.upper_inverse()?, b_l: r2, g_r: q2.adjoint() })
}

/// Λ_L(K), the B-factor of K = b_L·g_R⁻¹.
pub fn lambda_l(k: &MatC) -> Result<MatC> {
    Ok(rq_pos(k)?.0)
}

/// Ξ_R(K), the unitary factor of K = b_L·g_R⁻¹.
pub fn xi_r(k: &MatC) -> Result<MatC> {
    Ok(rq_pos(k)?.1.adjoint())
}

/// Dress_η(b) = Λ_L(η·b).
pub fn dressing(eta: &MatC, b: &MatC) -> Result<MatC> {
    lambda_l(&(eta * b))
}

/// b·(b⁻¹Xb)_𝔅, the tangent of t ↦ Dress_{exp(tX)}(b) at t = 0.
pub fn infinitesimal_dressing(lie: &LieData, x: &MatC, b: &MatC) -> Result<MatC> {
    let binv = b.upper_inverse()?;
    Ok(b * &lie.proj_b(&(&(&binv * x) * b)))
}

/// ν(b) = b·b†.
pub fn nu(b: &MatC) -> MatC {
    b * &b.adjoint()
}

/// Inverse of ν: the upper Cholesky factor.
pub fn nu_inv(l: &MatC) -> Result<MatC> {
    chol_upper(l)
}

/// m(K) = (Ξ_R(K), Λ_R(K)).
pub fn model_map(k: &MatC) -> Result<(MatC, MatC)> {
    let iw = iwasawa(k)?;
    Ok((iw.g_r, iw.b_r))
}

/// b_L of the point (g, b) of the G×B model: Λ_L(g⁻¹b)⁻¹.
pub fn b_left(g: &MatC, b: &MatC) -> Result<MatC> {
    lambda_l(&(&g.adjoint() * b))?.upper_inverse()
}

/// m⁻¹(g, b) = b_L·g⁻¹ with b_L obtained by re-decomposing g⁻¹b.
pub fn model_map_inv(g: &MatC, b: &MatC) -> Result<MatC> {
    Ok(&b_left(g, b)? * &g.adjoint())
}

/// The Heisenberg-double action to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeisAction {
    /// (g, b) ↦ (ηgη⁻¹, Dress_η b).
    Simple,
    /// The quasi-adjoint action transported to the G×B model.
    Quasi,
}

/// 𝒜¹_η(K) = η·K·Ξ_R(η·Λ_L(K)).
pub fn quasi_adjoint_k(eta: &MatC, k: &MatC) -> Result<MatC> {
    let bl = lambda_l(k)?;
    Ok(&(eta * k) * &xi_r(&(eta * &bl))?)
}

/// 𝒜²_η(g, b) = 𝒜_{ξ⁻¹}(g, b) with ξ = Ξ_R(η·b_L), b_L = Λ_L(g⁻¹b)⁻¹.
pub fn quasi_adjoint_gb(eta: &MatC, g: &MatC, b: &MatC) -> Result<(MatC, MatC)> {
    let xi = xi_r(&(eta * &b_left(g, b)?))?;
    let xinv = xi.adjoint();
    Ok((&(&xinv * g) * &xi, dressing(&xinv, b)?))
}

/// Group action on a phase point; Heisenberg spaces use `heis`.
pub fn act_with(eta: &MatC, p: &PhasePoint, heis: HeisAction) -> Result<PhasePoint> {
    let conj = |m: &MatC| &(eta * m) * &eta.adjoint();
    let c = &p.components;
    let comps = match p.space.parent() {
        Space::Cotangent | Space::Quasi => vec![conj(&c[0]), conj(&c[1])],
        Space::HeisenbergGB => match heis {
            HeisAction::Simple => vec![conj(&c[0]), dressing(eta, &c[1])?],
            HeisAction::Quasi => {
                let (g, b) = quasi_adjoint_gb(eta, &c[0], &c[1])?;
                vec![g, b]
            }
        },
        Space::HeisenbergK => vec![quasi_adjoint_k(eta, &c[0])?],
        _ => unreachable!("parent is unreduced"),
    };
    Ok(PhasePoint { space: p.space.parent(), components: comps })
}

/// Default action: conjugation, 𝒜 on the G×B model, 𝒜¹ on the K model.
pub fn act(eta: &MatC, p: &PhasePoint) -> Result<PhasePoint> {
    act_with(eta, p, HeisAction::Simple)
}

/// Normalizer action on a slice point; the result stays on the slice.
pub fn act_gauge(gauge: &GaugeElement, p: &PhasePoint) -> Result<PhasePoint> {
    Ok(act(&gauge.matrix(), p)?.with_space(p.space))
}

/// Moment map: J − g⁻¹Jg, Λ_L(K)Λ_R(K), or the group commutator.
pub fn moment(p: &PhasePoint) -> Result<MatC> {
    let c = &p.components;
    match p.space.parent() {
        Space::Cotangent => Ok(&c[1] - &(&(&c[0].adjoint() * &c[1]) * &c[0])),
        Space::HeisenbergK => {
            let iw = iwasawa(&c[0])?;
            Ok(&iw.b_l * &iw.b_r)
        }
        Space::HeisenbergGB => {
            let k = model_map_inv(&c[0], &c[1])?;
            let iw = iwasawa(&k)?;
            Ok(&iw.b_l * &iw.b_r)
        }
        Space::Quasi => Ok(&(&(&c[0] * &c[1]) * &c[0].adjoint()) * &c[1].adjoint()),
        _ => unreachable!("parent is unreduced"),
    }
}

/// K-model point corresponding to a G×B point and back.
pub fn to_k_model(p: &PhasePoint) -> Result<PhasePoint> {
    p.lift().expect(Space::HeisenbergGB)?;
    Ok(PhasePoint::new(Space::HeisenbergK, vec![model_map_inv(p.c(0), p.c(1))?]))
}

pub fn to_gb_model(p: &PhasePoint) -> Result<PhasePoint> {
    p.expect(Space::HeisenbergK)?;
    let (g, b) = model_map(p.c(0))?;
    Ok(PhasePoint::pair(Space::HeisenbergGB, g, b))
}

/// Spectral data of a unitary: gauge η = U† bringing it to diagonal form.
pub fn diagonalizing_gauge(g: &MatC) -> Result<(MatC, MatC)> {
    let (phases, u) = diag_unitary(g)?;
    let q = MatC::from_diag(&phases.iter().map(|&t| C64::from_polar(1.0, t)).collect::<Vec<_>>());
    Ok((u.adjoint(), q))
}

/// exp restricted to arguments the flows produce.
pub fn expm(x: &MatC) -> Result<MatC> {
    mat_exp(x)
}

/// Unitarity check used by the CLI before accepting an η.
pub fn require_unitary(m: &MatC) -> Result<()> {
    if m.unitarity_defect() < tolerances().unitary {
        Ok(())
    } else {
        Err(Error::Contract("expected a unitary matrix".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample;

    #[test]
    fn iwasawa_of_unitary() {
        let lie = LieData::su(3);
        let mut rng = sample::rng(1);
        let k = sample::haar_unitary(&mut rng, &lie);
        let iw = iwasawa(&k).unwrap();
        // K = g_L·I = I·g_R⁻¹ forces g_L = K and g_R = K⁻¹.
        assert!(iw.g_l.dist(&k) < 1e-13 && iw.g_r.dist(&k.adjoint()) < 1e-13);
        assert!(iw.b_l.dist(&MatC::identity(3)) < 1e-13 && iw.b_r.dist(&MatC::identity(3)) < 1e-13);
    }

    #[test]
    fn iwasawa_of_triangular() {
        let lie = LieData::su(3);
        let mut rng = sample::rng(2);
        let b = sample::group_b(&mut rng, &lie, 0.5);
        let iw = iwasawa(&b).unwrap();
        assert!(iw.g_l.dist(&MatC::identity(3)) < 1e-13 && iw.g_r.dist(&MatC::identity(3)) < 1e-13);
        assert!(iw.b_l.dist(&b) < 1e-13);
        assert!(iw.b_r.dist(&b.upper_inverse().unwrap()) < 1e-13);
    }

    #[test]
    fn iwasawa_hand_example() {
        let k = MatC::from_real_rows(&[vec![1.0, 1.0], vec![1.0, 0.0]]);
        let iw = iwasawa(&k).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert!(iw.g_l.dist(&MatC::from_real_rows(&[vec![s, s], vec![s, -s]])) < 1e-14);
        let r = MatC::from_real_rows(&[vec![2f64.sqrt(), s], vec![0.0, s]]);
        assert!(iw.b_r.dist(&r.upper_inverse().unwrap()) < 1e-14);
        assert!((&iw.g_l * &iw.b_r.upper_inverse().unwrap()).dist(&k) < 1e-14);
        assert!((&iw.b_l * &iw.g_r.adjoint()).dist(&k) < 1e-14);
    }

    #[test]
    fn dressing_examples() {
        let lie = LieData::su(3);
        let mut rng = sample::rng(3);
        let b = sample::group_b(&mut rng, &lie, 0.5);
        let eta = sample::haar_unitary(&mut rng, &lie);
        assert!(dressing(&MatC::identity(3), &b).unwrap().dist(&b) < 1e-13);
        assert!(dressing(&eta, &MatC::identity(3)).unwrap().dist(&MatC::identity(3)) < 1e-13);
        let d = dressing(&eta, &b).unwrap();
        assert!(nu(&d).dist(&(&(&eta * &nu(&b)) * &eta.adjoint())) < 1e-12);
    }

    #[test]
    fn model_map_examples() {
        let lie = LieData::su(2);
        let (g, b) = model_map(&MatC::identity(2)).unwrap();
        assert!(g.dist(&MatC::identity(2)) < 1e-15 && b.dist(&MatC::identity(2)) < 1e-15);
        let mut rng = sample::rng(4);
        let u = sample::haar_unitary(&mut rng, &lie);
        let (g, b) = model_map(&u).unwrap();
        assert!(g.dist(&u.adjoint()) < 1e-13 && b.dist(&MatC::identity(2)) < 1e-13);
        let k = sample::group_complex(&mut rng, &lie, 0.7);
        let (g, b) = model_map(&k).unwrap();
        assert!(model_map_inv(&g, &b).unwrap().dist(&k) < 1e-12);
    }

    #[test]
    fn moment_examples() {
        let lie = LieData::su(3);
        let mut rng = sample::rng(5);
        let b = sample::group_b(&mut rng, &lie, 0.5);
        let lam = moment(&PhasePoint::new(Space::HeisenbergK, vec![b])).unwrap();
        assert!(lam.dist(&MatC::identity(3)) < 1e-12);
        let j = sample::algebra_g(&mut rng, &lie, 1.0);
        let g = mat_exp(&j.scale_re(0.3)).unwrap();
        let phi = moment(&PhasePoint::pair(Space::Cotangent, g.clone(), j)).unwrap();
        assert!(phi.frob_norm() < 1e-13);
        let comm = moment(&PhasePoint::pair(Space::Quasi, g.clone(), &g * &g)).unwrap();
        assert!(comm.dist(&MatC::identity(3)) < 1e-13);
    }

    #[test]
    fn cotangent_torus_action_keeps_diagonal() {
        let lie = LieData::su(3);
        let mut rng = sample::rng(6);
        let q = sample::regular_torus(&mut rng, &lie, 0.3);
        let eta = sample::regular_torus(&mut rng, &lie, 0.3);
        let j = sample::algebra_g(&mut rng, &lie, 1.0);
        let p = PhasePoint::pair(Space::Cotangent, q.clone(), j.clone());
        let out = act(&eta, &p).unwrap();
        assert!(out.c(0).dist(&q) < 1e-14);
        assert!(out.c(1).dist(&(&(&eta * &j) * &eta.adjoint())) < 1e-14);
    }

    #[test]
    fn gauge_matrix_and_composition() {
        let a = GaugeElement { perm: vec![1, 2, 0], phases: vec![C64::from_polar(1.0, 0.3), C64::from_polar(1.0, -0.1), C64::from_polar(1.0, -0.2)] };
        let b = GaugeElement { perm: vec![2, 0, 1], phases: vec![C64::from_polar(1.0, 1.0), C64::from_polar(1.0, 0.5), C64::from_polar(1.0, -1.5)] };
        let ab = a.compose(&b);
        assert!(ab.matrix().dist(&(&a.matrix() * &b.matrix())) < 1e-15);
        let x = MatC::from_fn(3, |j, k| C64::new((3 * j + k) as f64, 0.0));
        let m = a.matrix();
        let y = &(&m * &x) * &m.adjoint();
        for j in 0..3 {
            for k in 0..3 {
                let want = a.phases[j] * a.phases[k].conj() * x[(a.perm[j], a.perm[k])];
                assert!((y[(j, k)] - want).norm() < 1e-14);
            }
        }
    }
}
