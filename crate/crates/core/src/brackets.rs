//! Poisson and quasi-Poisson brackets on the doubles and their reductions.

use crate::config::tolerances;
use crate::cxmat::{MatC, I};
use crate::doubles::{PhasePoint, Space};
use crate::error::{Error, Result};
use crate::lie::{LieData, RegularKind};
use crate::observables::{Derivs, Flavor, Observable};
use crate::rmat::ROperator;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BracketKind {
    PbCotangent,
    PbPlus,
    PbMinus,
    #[serde(rename = "pb_B")]
    PbB,
    #[serde(rename = "pb_G")]
    PbG,
    #[serde(rename = "pb_fM")]
    PbFM,
    Qpb,
    RedCot1,
    RedCot2,
    RedHeis1,
    RedHeis2,
    RedQuasi1,
    RedQuasi2,
}

impl BracketKind {
    pub const ALL: [BracketKind; 13] = [
        BracketKind::PbCotangent,
        BracketKind::PbPlus,
        BracketKind::PbMinus,
        BracketKind::PbB,
        BracketKind::PbG,
        BracketKind::PbFM,
        BracketKind::Qpb,
        BracketKind::RedCot1,
        BracketKind::RedCot2,
        BracketKind::RedHeis1,
        BracketKind::RedHeis2,
        BracketKind::RedQuasi1,
        BracketKind::RedQuasi2,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            BracketKind::PbCotangent => "pb_cotangent",
            BracketKind::PbPlus => "pb_plus",
            BracketKind::PbMinus => "pb_minus",
            BracketKind::PbB => "pb_B",
            BracketKind::PbG => "pb_G",
            BracketKind::PbFM => "pb_fM",
            BracketKind::Qpb => "qpb",
            BracketKind::RedCot1 => "red_cot_1",
            BracketKind::RedCot2 => "red_cot_2",
            BracketKind::RedHeis1 => "red_heis_1",
            BracketKind::RedHeis2 => "red_heis_2",
            BracketKind::RedQuasi1 => "red_quasi_1",
            BracketKind::RedQuasi2 => "red_quasi_2",
        }
    }

    /// Space the bracket lives on. pb_B and pb_G act on the B and G factors of a G×B point.
    pub fn space(&self) -> Space {
        match self {
            BracketKind::PbCotangent => Space::Cotangent,
            BracketKind::PbPlus | BracketKind::PbMinus => Space::HeisenbergK,
            BracketKind::PbB | BracketKind::PbG | BracketKind::PbFM => Space::HeisenbergGB,
            BracketKind::Qpb => Space::Quasi,
            BracketKind::RedCot1 => Space::RedCot1,
            BracketKind::RedCot2 => Space::RedCot2,
            BracketKind::RedHeis1 => Space::RedHeis1,
            BracketKind::RedHeis2 => Space::RedHeis2,
            BracketKind::RedQuasi1 => Space::RedQuasi,
            BracketKind::RedQuasi2 => Space::RedQuasiPrime,
        }
    }

    /// Flavors each argument must supply.
    pub fn flavors(&self) -> &'static [Flavor] {
        use Flavor::*;
        match self {
            BracketKind::PbCotangent | BracketKind::RedCot1 => &[Nabla1, D2Add],
            BracketKind::RedCot2 => &[Nabla1, Nabla1p, D2Add],
            BracketKind::PbPlus | BracketKind::PbMinus => &[NablaK, NablaKp],
            BracketKind::PbB => &[D2, D2p],
            BracketKind::PbG => &[D1, D1p],
            BracketKind::PbFM => &[D1, D1p, D2, D2p],
            BracketKind::RedHeis1 => &[D1, D2, D2p],
            BracketKind::RedHeis2 => &[Nabla1, Nabla1p, D2],
            BracketKind::Qpb | BracketKind::RedQuasi1 | BracketKind::RedQuasi2 => &[Nabla1, Nabla1p, Nabla2, Nabla2p],
        }
    }

    /// Unreduced kind whose restriction this reduced kind computes.
    pub fn unreduced(&self) -> BracketKind {
        match self {
            BracketKind::RedCot1 | BracketKind::RedCot2 => BracketKind::PbCotangent,
            BracketKind::RedHeis1 | BracketKind::RedHeis2 => BracketKind::PbFM,
            BracketKind::RedQuasi1 | BracketKind::RedQuasi2 => BracketKind::Qpb,
            k => *k,
        }
    }
}

impl std::fmt::Display for BracketKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for BracketKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        BracketKind::ALL
            .into_iter()
            .find(|k| k.tag() == s)
            .ok_or_else(|| Error::Schema(format!("unknown bracket kind {s:?}")))
    }
}

/// ρ = ½(π_𝔊 − π_𝔅).
fn rho(lie: &LieData, x: &MatC) -> MatC {
    (&lie.proj_g(x) - &lie.proj_b(x)).scale_re(0.5)
}

fn check_slice(lie: &LieData, kind: BracketKind, p: &PhasePoint) -> Result<()> {
    let rk = match kind {
        BracketKind::RedCot2 => RegularKind::Cartan,
        BracketKind::RedHeis2 => RegularKind::B0,
        _ => RegularKind::Torus,
    };
    if let Some(slot) = p.space.diagonal_slot() {
        lie.require_regular(p.c(slot), rk)?;
    }
    Ok(())
}

/// Bracket value from precomputed derivative data of both arguments.
pub fn bracket_from_derivs(kind: BracketKind, df: &Derivs, dh: &Derivs) -> Result<f64> {
    let lie = &df.lie;
    let p = &df.point;
    p.expect(kind.space())?;
    check_slice(lie, kind, p)?;
    let g = |a: &MatC, b: &MatC| lie.form_g(a, b);
    let im = |a: &MatC, b: &MatC| lie.form_i(a, b);
    let (f, h) = (|fl| df.flavor(fl), |fl| dh.flavor(fl));
    use Flavor::*;
    let c = &p.components;
    Ok(match kind {
        BracketKind::PbCotangent => {
            let (n1f, d2f, n1h, d2h) = (f(Nabla1)?, f(D2Add)?, h(Nabla1)?, h(D2Add)?);
            g(&n1f, &d2h) - g(&n1h, &d2f) + g(&c[1], &d2f.commutator(&d2h))
        }
        BracketKind::PbPlus | BracketKind::PbMinus => {
            let sign = if kind == BracketKind::PbPlus { 1.0 } else { -1.0 };
            im(&f(NablaK)?, &rho(lie, &h(NablaK)?)) + sign * im(&f(NablaKp)?, &rho(lie, &h(NablaKp)?))
        }
        BracketKind::PbB => {
            let b = &c[1];
            im(&f(D2p)?, &(&(&b.upper_inverse()? * &h(D2)?) * b))
        }
        BracketKind::PbG => {
            let gm = &c[0];
            -im(&f(D1p)?, &(&(&gm.adjoint() * &h(D1)?) * gm))
        }
        BracketKind::PbFM => {
            let (gm, b) = (&c[0], &c[1]);
            let t1 = im(&f(D2p)?, &(&(&b.upper_inverse()? * &h(D2)?) * b));
            let t2 = im(&f(D1p)?, &(&(&gm.adjoint() * &h(D1)?) * gm));
            t1 - t2 + im(&f(D1)?, &h(D2)?) - im(&h(D1)?, &f(D2)?)
        }
        BracketKind::Qpb => {
            let (f1, f1p, f2, f2p) = (f(Nabla1)?, f(Nabla1p)?, f(Nabla2)?, f(Nabla2p)?);
            let (h1, h1p, h2, h2p) = (h(Nabla1)?, h(Nabla1p)?, h(Nabla2)?, h(Nabla2p)?);
            let twice = g(&h1p, &f2) - g(&h2, &f1p) + g(&h1, &f2p) - g(&h2p, &f1) + g(&h2, &f1) - g(&h1, &f2) + g(&h1p, &f2p)
                - g(&h2p, &f1p)
                + g(&h1, &f1p)
                - g(&h1p, &f1)
                + g(&h2p, &f2)
                - g(&h2, &f2p);
            0.5 * twice
        }
        BracketKind::RedCot1 => {
            let r = ROperator::RQ(c[0].clone());
            let (n1f, d2f, n1h, d2h) = (f(Nabla1)?, f(D2Add)?, h(Nabla1)?, h(D2Add)?);
            let inner = &r.apply(&d2f)?.commutator(&d2h) + &d2f.commutator(&r.apply(&d2h)?);
            g(&n1f, &d2h) - g(&n1h, &d2f) + g(&c[1], &inner)
        }
        BracketKind::RedCot2 => {
            let r = ROperator::RLambda(c[1].clone());
            let (n1f, n1pf, d2f) = (f(Nabla1)?, f(Nabla1p)?, f(D2Add)?);
            let (n1h, n1ph, d2h) = (h(Nabla1)?, h(Nabla1p)?, h(D2Add)?);
            g(&n1f, &d2h) - g(&n1h, &d2f) + g(&n1pf, &r.apply(&n1ph)?) - g(&n1f, &r.apply(&n1h)?)
        }
        BracketKind::RedHeis1 => {
            let r = ROperator::RQ(c[0].clone());
            let b = &c[1];
            let binv = b.upper_inverse()?;
            let conj = |d: MatC| lie.proj_b(&(&(b * &d) * &binv));
            let (d1f, d2f, d2pf) = (f(D1)?, f(D2)?, f(D2p)?);
            let (d1h, d2h, d2ph) = (h(D1)?, h(D2)?, h(D2p)?);
            im(&d1f, &d2h) - im(&d1h, &d2f) + im(&r.apply(&conj(d2ph))?, &d2f) - im(&r.apply(&conj(d2pf))?, &d2h)
        }
        BracketKind::RedHeis2 => {
            let r = ROperator::RGamma2(c[1].clone());
            let (n1f, n1pf, d2f) = (f(Nabla1)?, f(Nabla1p)?, f(D2)?);
            let (n1h, n1ph, d2h) = (h(Nabla1)?, h(Nabla1p)?, h(D2)?);
            g(&n1f, &d2h) - g(&n1h, &d2f) + 2.0 * g(&n1pf, &r.apply(&n1ph.scale(I))?) - 2.0 * g(&n1f, &r.apply(&n1h.scale(I))?)
        }
        BracketKind::RedQuasi1 => {
            let r = ROperator::RQ(c[0].clone());
            let (f1, f2, f2p) = (f(Nabla1)?, f(Nabla2)?, f(Nabla2p)?);
            let (h1, h2, h2p) = (h(Nabla1)?, h(Nabla2)?, h(Nabla2p)?);
            g(&h1, &f2) - g(&f1, &h2) + g(&f2p, &r.apply(&h2p)?) - g(&f2, &r.apply(&h2)?)
        }
        BracketKind::RedQuasi2 => {
            let r = ROperator::RQ(c[1].clone());
            let (f1, f1p, f2) = (f(Nabla1)?, f(Nabla1p)?, f(Nabla2)?);
            let (h1, h1p, h2) = (h(Nabla1)?, h(Nabla1p)?, h(Nabla2)?);
            g(&f2, &h1) - g(&h2, &f1) + g(&f1, &r.apply(&h1)?) - g(&f1p, &r.apply(&h1p)?)
        }
    })
}

/// {F, H} of the given kind at p.
pub fn bracket(lie: &LieData, kind: BracketKind, f: &Observable, h: &Observable, p: &PhasePoint) -> Result<f64> {
    p.expect(kind.space())?;
    check_slice(lie, kind, p)?;
    bracket_from_derivs(kind, &f.derivs(lie, p)?, &h.derivs(lie, p)?)
}

/// {F, H} as an observable, differentiated numerically with `step`.
pub fn bracket_observable(lie: &LieData, kind: BracketKind, f: &Observable, h: &Observable, step: f64) -> Observable {
    let (lie, f, h) = (*lie, f.clone(), h.clone());
    let invariant = f.is_invariant() && h.is_invariant();
    Observable::numeric(&format!("{{{f:?}, {h:?}}}"), step, invariant, move |p| bracket(&lie, kind, &f, &h, p))
}

/// Cyclic sum {{F,G},H} + {{G,H},F} + {{H,F},G}, inner brackets differentiated numerically.
pub fn jacobiator(lie: &LieData, kind: BracketKind, f: &Observable, g: &Observable, h: &Observable, p: &PhasePoint) -> Result<f64> {
    jacobiator_step(lie, kind, f, g, h, p, tolerances().jacobi_step)
}

pub fn jacobiator_step(
    lie: &LieData,
    kind: BracketKind,
    f: &Observable,
    g: &Observable,
    h: &Observable,
    p: &PhasePoint,
    step: f64,
) -> Result<f64> {
    let fg = bracket_observable(lie, kind, f, g, step);
    let gh = bracket_observable(lie, kind, g, h, step);
    let hf = bracket_observable(lie, kind, h, f, step);
    Ok(bracket(lie, kind, &fg, h, p)? + bracket(lie, kind, &gh, f, p)? + bracket(lie, kind, &hf, g, p)?)
}

/// Unreduced derivatives of an invariant function rebuilt from its restriction to G × B₀.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedDerivs {
    /// D₂′ of the invariant extension.
    pub d2p: MatC,
    /// Γ·D₂′·Γ⁻¹.
    pub conj_d2p: MatC,
    /// D₂ of the invariant extension.
    pub d2: MatC,
}

/// Reconstructs D₂′𝓕, ΓD₂′𝓕Γ⁻¹ and D₂𝓕 at a slice point (g, Γ) from X₀ = D₂F and Y = D₁′F − D₁F.
pub fn lemma_derivatives(lie: &LieData, f: &Observable, p: &PhasePoint) -> Result<LiftedDerivs> {
    p.expect(Space::RedHeis2)?;
    let gamma = p.c(1);
    lie.require_regular(gamma, RegularKind::B0)?;
    let d = f.derivs(lie, p)?;
    let x0 = d.flavor(Flavor::D2)?;
    let y = lie.strict_upper(&(&d.flavor(Flavor::D1p)? - &d.flavor(Flavor::D1)?));
    let sym = &y + &y.adjoint();
    let r2 = ROperator::RGamma2(gamma.clone()).apply(&sym)?;
    let d2p = &x0 + &ROperator::RhoGamma(gamma.clone()).apply(&sym)?.scale_re(0.5);
    let conj_d2p = &(&x0 + &sym.scale_re(0.5)) + &r2;
    let d2 = &(&x0 + &(&y.adjoint() - &y).scale_re(0.5)) + &r2;
    Ok(LiftedDerivs { d2p, conj_d2p, d2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::Variant;
    use crate::observables::{word, Part, PointMap, WordSpec, make_trace_observable};
    use crate::sample;

    fn words(space: Space) -> Vec<Observable> {
        let lists: Vec<(&[&str], Part)> = match space.parent() {
            Space::Cotangent => vec![(&["g", "J"], Part::Im), (&["g", "g", "J", "J"], Part::Re), (&["J", "J", "J"], Part::Im), (&["g", "J", "g"], Part::Im)],
            Space::HeisenbergGB | Space::HeisenbergK => vec![(&["g", "L"], Part::Re), (&["g", "g", "L"], Part::Im), (&["L", "L", "g"], Part::Re), (&["g", "L", "ginv", "L"], Part::Im)],
            _ => vec![(&["g1", "g2"], Part::Re), (&["g1", "g1", "g2"], Part::Im), (&["g1", "g2", "g2"], Part::Re), (&["g1", "g2", "g1inv", "g2inv"], Part::Im)],
        };
        lists.into_iter().map(|(l, part)| word(space, l, part, 1.0).unwrap()).collect()
    }

    #[test]
    fn reduced_brackets_restrict_unreduced() {
        for lie in [LieData::su(3), LieData::new(3, Variant::U).unwrap()] {
            let mut r = sample::rng(21);
            for kind in [
                BracketKind::RedCot1,
                BracketKind::RedCot2,
                BracketKind::RedHeis1,
                BracketKind::RedHeis2,
                BracketKind::RedQuasi1,
                BracketKind::RedQuasi2,
            ] {
                let space = kind.space();
                let obs = words(space);
                for _ in 0..3 {
                    let p = sample::point(&mut r, &lie, space, 0.6, 0.3);
                    for i in 0..obs.len() {
                        for j in i + 1..obs.len() {
                            let red = bracket(&lie, kind, &obs[i], &obs[j], &p).unwrap();
                            let q = p.lift();
                            let fu = make_trace_observable(q.space, &word_spec_of(&obs[i])).unwrap();
                            let hu = make_trace_observable(q.space, &word_spec_of(&obs[j])).unwrap();
                            let full = bracket(&lie, kind.unreduced(), &fu, &hu, &q).unwrap();
                            assert!((red - full).abs() < 1e-8 * (1.0 + full.abs()), "{kind} {:?}: {red} vs {full}", lie.variant);
                        }
                    }
                }
            }
        }
    }

    fn word_spec_of(o: &Observable) -> WordSpec {
        match o {
            Observable::Word { word, .. } => word.spec(),
            _ => unreachable!(),
        }
    }

    #[test]
    fn model_map_is_poisson() {
        let lie = LieData::su(3);
        let mut r = sample::rng(22);
        let obs = words(Space::HeisenbergGB);
        for _ in 0..3 {
            let k = sample::point(&mut r, &lie, Space::HeisenbergK, 0.6, 0.3);
            let (gr, br) = crate::doubles::model_map(k.c(0)).unwrap();
            let m = PhasePoint::pair(Space::HeisenbergGB, gr, br);
            for i in 0..obs.len() {
                for j in 0..obs.len() {
                    let a = bracket(&lie, BracketKind::PbFM, &obs[i], &obs[j], &m).unwrap();
                    let fi = obs[i].clone().pullback(PointMap::Model);
                    let fj = obs[j].clone().pullback(PointMap::Model);
                    let b = bracket(&lie, BracketKind::PbPlus, &fi, &fj, &k).unwrap();
                    assert!((a - b).abs() < 1e-8 * (1.0 + a.abs()), "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn linear_cotangent_example() {
        let lie = LieData::su(2);
        let mut r = sample::rng(23);
        let a = sample::algebra_g(&mut r, &lie, 1.0);
        let b = sample::algebra_g(&mut r, &lie, 1.0);
        let fa = make_trace_observable(Space::Cotangent, &WordSpec::re(&["C0", "J"]).with_constants(vec![a.clone()])).unwrap();
        let fb = make_trace_observable(Space::Cotangent, &WordSpec::re(&["C0", "J"]).with_constants(vec![b.clone()])).unwrap();
        let p = sample::point(&mut r, &lie, Space::Cotangent, 1.0, 0.3);
        let got = bracket(&lie, BracketKind::PbCotangent, &fa, &fb, &p).unwrap();
        assert!((got - lie.form_g(p.c(1), &a.commutator(&b))).abs() < 1e-12);
    }

    #[test]
    fn lemma_reconstruction_matches_unreduced() {
        let lie = LieData::su(3);
        let mut r = sample::rng(24);
        for f in words(Space::RedHeis2) {
            let p = sample::point(&mut r, &lie, Space::RedHeis2, 0.6, 0.3);
            let got = lemma_derivatives(&lie, &f, &p).unwrap();
            let full = make_trace_observable(Space::HeisenbergGB, &word_spec_of(&f)).unwrap();
            let d = full.derivs(&lie, &p.lift()).unwrap();
            let gamma = p.c(1);
            let d2p = d.flavor(Flavor::D2p).unwrap();
            assert!(got.d2p.dist(&d2p) < 1e-10);
            assert!(got.conj_d2p.dist(&(&(gamma * &d2p) * &gamma.upper_inverse().unwrap())) < 1e-10);
            assert!(got.d2.dist(&d.flavor(Flavor::D2).unwrap()) < 1e-10);
        }
    }

    #[test]
    fn sklyanin_identity() {
        let lie = LieData::su(3);
        let mut r = sample::rng(25);
        let c0 = sample::ginibre(&mut r, 3);
        let f1 = make_trace_observable(Space::HeisenbergGB, &WordSpec::im(&["g", "g", "C0"]).with_constants(vec![c0])).unwrap();
        let f2 = word(Space::HeisenbergGB, &["g", "ginv", "g"], Part::Re, 1.0).unwrap();
        let p = sample::point(&mut r, &lie, Space::HeisenbergGB, 0.5, 0.3);
        let (d1, d2) = (f1.derivs(&lie, &p).unwrap(), f2.derivs(&lie, &p).unwrap());
        let lhs = bracket(&lie, BracketKind::PbG, &f1, &f2, &p).unwrap();
        let ri = crate::rmat::apply_r_i;
        let rhs = lie.form_g(&d1.flavor(Flavor::Nabla1p).unwrap(), &ri(&d2.flavor(Flavor::Nabla1p).unwrap()))
            - lie.form_g(&d1.flavor(Flavor::Nabla1).unwrap(), &ri(&d2.flavor(Flavor::Nabla1).unwrap()));
        assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
        assert!(lhs.abs() > 1e-3);
    }

    #[test]
    fn dressing_invariants_are_central() {
        let lie = LieData::su(3);
        let mut r = sample::rng(26);
        let phi = word(Space::HeisenbergGB, &["L", "L"], Part::Re, 1.0).unwrap();
        let c0 = sample::ginibre(&mut r, 3);
        let psi = make_trace_observable(Space::HeisenbergGB, &WordSpec::im(&["b", "C0", "bdag"]).with_constants(vec![c0])).unwrap();
        let p = sample::point(&mut r, &lie, Space::HeisenbergGB, 0.5, 0.3);
        assert!(bracket(&lie, BracketKind::PbB, &phi, &psi, &p).unwrap().abs() < 1e-10);
        assert!(bracket(&lie, BracketKind::PbB, &psi, &psi, &p).unwrap().abs() < 1e-12);
    }

    #[test]
    fn casimir_commutes_with_invariants() {
        let lie = LieData::su(3);
        let mut r = sample::rng(27);
        let cas = word(Space::Quasi, &["g1", "g2", "g1inv", "g2inv"], Part::Re, 1.0).unwrap();
        for h in words(Space::Quasi) {
            let p = sample::point(&mut r, &lie, Space::Quasi, 0.5, 0.3);
            assert!(bracket(&lie, BracketKind::Qpb, &cas, &h, &p).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn antisymmetry_for_every_kind() {
        let lie = LieData::su(3);
        let mut r = sample::rng(28);
        for kind in BracketKind::ALL {
            let space = kind.space();
            let obs = words(space);
            let p = sample::point(&mut r, &lie, space, 0.5, 0.3);
            let a = bracket(&lie, kind, &obs[0], &obs[1], &p).unwrap();
            let b = bracket(&lie, kind, &obs[1], &obs[0], &p).unwrap();
            assert!((a + b).abs() < 1e-10, "{kind}");
            assert!(bracket(&lie, kind, &obs[2], &obs[2], &p).unwrap().abs() < 1e-10, "{kind}");
        }
    }

    #[test]
    fn jacobi_identity_where_it_holds() {
        let lie = LieData::su(2);
        let mut r = sample::rng(29);
        for kind in [BracketKind::PbCotangent, BracketKind::PbPlus, BracketKind::PbFM, BracketKind::Qpb, BracketKind::RedCot1, BracketKind::RedQuasi1] {
            let space = kind.space();
            let obs = words(space);
            let p = sample::point(&mut r, &lie, space, 0.5, 0.3);
            let j = jacobiator(&lie, kind, &obs[0], &obs[1], &obs[3], &p).unwrap();
            assert!(j.abs() < 1e-4, "{kind}: {j}");
        }
    }

    #[test]
    fn quasi_bracket_violates_jacobi_on_generic_words() {
        let lie = LieData::su(2);
        let mut r = sample::rng(30);
        let mut worst: f64 = 0.0;
        for _ in 0..4 {
            let cs: Vec<MatC> = (0..3).map(|_| sample::ginibre(&mut r, 2)).collect();
            let mk = |l: &[&str], k: usize| make_trace_observable(Space::Quasi, &WordSpec::re(l).with_constants(vec![cs[k].clone()])).unwrap();
            let (f, g, h) = (mk(&["C0", "g1"], 0), mk(&["C0", "g2"], 1), mk(&["C0", "g1", "g2"], 2));
            let p = sample::point(&mut r, &lie, Space::Quasi, 0.5, 0.3);
            worst = worst.max(jacobiator(&lie, BracketKind::Qpb, &f, &g, &h, &p).unwrap().abs());
        }
        assert!(worst > 1e-2, "{worst}");
    }
}
