//! Seeded random generators for group and algebra elements.

use crate::cxmat::{mat_exp, qr_pos, wrap_angle, MatC, C64, I};
use crate::doubles::{PhasePoint, Space};
use crate::lie::{LieData, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal<R: Rng>(r: &mut R) -> f64 {
    r.sample(StandardNormal)
}

/// Matrix with independent standard complex Gaussian entries.
pub fn ginibre<R: Rng>(r: &mut R, n: usize) -> MatC {
    MatC::from_fn(n, |_, _| C64::new(normal(r), normal(r)) * std::f64::consts::FRAC_1_SQRT_2)
}

/// Random element of 𝔊 with entries of size about `scale`.
pub fn algebra_g<R: Rng>(r: &mut R, lie: &LieData, scale: f64) -> MatC {
    let z = ginibre(r, lie.n);
    lie.antiherm(&z).scale_re(scale)
}

/// Random Hermitian matrix (traceless for su).
pub fn hermitian<R: Rng>(r: &mut R, lie: &LieData, scale: f64) -> MatC {
    algebra_g(r, lie, scale).scale(-I)
}

/// Random element of 𝔅 (upper triangular, real diagonal).
pub fn algebra_b<R: Rng>(r: &mut R, lie: &LieData, scale: f64) -> MatC {
    let z = ginibre(r, lie.n);
    lie.proj_b(&z).scale_re(scale)
}

/// Random element of the complex algebra (traceless for su).
pub fn algebra_full<R: Rng>(r: &mut R, lie: &LieData, scale: f64) -> MatC {
    lie.drop_trace(ginibre(r, lie.n)).scale_re(scale)
}

/// Haar-distributed element of U(n) or SU(n).
///
/// QR of a Ginibre matrix with R normalized to a positive diagonal; the
/// normalization is what makes Q Haar rather than merely unitary.
pub fn haar_unitary<R: Rng>(r: &mut R, lie: &LieData) -> MatC {
    loop {
        let z = ginibre(r, lie.n);
        if let Ok((q, _)) = qr_pos(&z) {
            return match lie.variant {
                Variant::U => q,
                Variant::Su => {
                    let phase = q.det().arg() / lie.n as f64;
                    q.scale(C64::from_polar(1.0, -phase))
                }
            };
        }
    }
}

/// Group element near the identity-connected region: exp of a random algebra element.
pub fn unitary_exp<R: Rng>(r: &mut R, lie: &LieData, scale: f64) -> MatC {
    mat_exp(&algebra_g(r, lie, scale)).expect("bounded argument")
}

/// Element of B: exp of a real diagonal times a unipotent upper triangular matrix.
pub fn group_b<R: Rng>(r: &mut R, lie: &LieData, scale: f64) -> MatC {
    let n = lie.n;
    let mut d: Vec<f64> = (0..n).map(|_| scale * normal(r)).collect();
    if lie.variant == Variant::Su {
        let mean = d.iter().sum::<f64>() / n as f64;
        d.iter_mut().for_each(|x| *x -= mean);
    }
    let mut b = MatC::from_fn(n, |j, k| {
        if j < k {
            C64::new(normal(r), normal(r)) * (scale * std::f64::consts::FRAC_1_SQRT_2)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    for j in 0..n {
        b[(j, j)] = C64::new(d[j].exp(), 0.0);
    }
    b
}

/// Invertible element of the complex group, built as g·b⁻¹.
pub fn group_complex<R: Rng>(r: &mut R, lie: &LieData, scale: f64) -> MatC {
    let g = haar_unitary(r, lie);
    let b = group_b(r, lie, scale);
    &g * &b.upper_inverse().expect("positive diagonal")
}

/// Sorted diagonal angles with pairwise circular gaps at least `min_gap`,
/// summing to zero for su.
pub fn regular_angles<R: Rng>(r: &mut R, lie: &LieData, min_gap: f64) -> Vec<f64> {
    let n = lie.n;
    loop {
        let mut q: Vec<f64> = (0..n).map(|_| r.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect();
        if lie.variant == Variant::Su {
            let mean = q.iter().sum::<f64>() / n as f64;
            q.iter_mut().for_each(|x| *x = wrap_angle(*x - mean));
        }
        let ok = (0..n).all(|j| {
            (j + 1..n).all(|k| (C64::from_polar(1.0, q[j]) - C64::from_polar(1.0, q[k])).norm() > min_gap)
        });
        if ok {
            q.sort_by(|a, b| b.total_cmp(a));
            return q;
        }
    }
}

/// Regular torus element diag(e^{iq_j}).
pub fn regular_torus<R: Rng>(r: &mut R, lie: &LieData, min_gap: f64) -> MatC {
    let q = regular_angles(r, lie, min_gap);
    MatC::from_diag(&q.iter().map(|&x| C64::from_polar(1.0, x)).collect::<Vec<_>>())
}

/// Regular real diagonal with gaps at least `min_gap`, traceless for su.
pub fn regular_real_diag<R: Rng>(r: &mut R, lie: &LieData, scale: f64, min_gap: f64) -> Vec<f64> {
    let n = lie.n;
    loop {
        let mut d: Vec<f64> = (0..n).map(|_| scale * normal(r)).collect();
        if lie.variant == Variant::Su {
            let mean = d.iter().sum::<f64>() / n as f64;
            d.iter_mut().for_each(|x| *x -= mean);
        }
        let ok = (0..n).all(|j| (j + 1..n).all(|k| (d[j] - d[k]).abs() > min_gap));
        if ok {
            return d;
        }
    }
}

/// Regular Cartan element λ = i·diag(d).
pub fn regular_cartan<R: Rng>(r: &mut R, lie: &LieData, scale: f64, min_gap: f64) -> MatC {
    let d = regular_real_diag(r, lie, scale, min_gap);
    MatC::from_diag(&d.iter().map(|&x| C64::new(0.0, x)).collect::<Vec<_>>())
}

/// Regular Γ = diag(e^{γ_j}).
pub fn regular_gamma<R: Rng>(r: &mut R, lie: &LieData, scale: f64, min_gap: f64) -> MatC {
    let d = regular_real_diag(r, lie, scale, min_gap);
    MatC::from_real_diag(&d.iter().map(|x| x.exp()).collect::<Vec<_>>())
}

/// Uniform sample in [lo, hi).
pub fn uniform<R: Rng>(r: &mut R, lo: f64, hi: f64) -> f64 {
    r.random_range(lo..hi)
}

pub fn standard_normal<R: Rng>(r: &mut R) -> f64 {
    normal(r)
}

/// Random point of `space`; slice coordinates are regular with gaps at least `min_gap`.
pub fn point<R: Rng>(r: &mut R, lie: &LieData, space: Space, scale: f64, min_gap: f64) -> PhasePoint {
    let comps = match space {
        Space::Cotangent => vec![haar_unitary(r, lie), algebra_g(r, lie, scale)],
        Space::RedCot1 => vec![regular_torus(r, lie, min_gap), algebra_g(r, lie, scale)],
        Space::RedCot2 => vec![haar_unitary(r, lie), regular_cartan(r, lie, scale, min_gap)],
        Space::HeisenbergK => vec![group_complex(r, lie, scale)],
        Space::HeisenbergGB => vec![haar_unitary(r, lie), group_b(r, lie, scale)],
        Space::RedHeis1 => vec![regular_torus(r, lie, min_gap), group_b(r, lie, scale)],
        Space::RedHeis2 => vec![haar_unitary(r, lie), regular_gamma(r, lie, scale, min_gap)],
        Space::Quasi => vec![haar_unitary(r, lie), haar_unitary(r, lie)],
        Space::RedQuasi => vec![regular_torus(r, lie, min_gap), haar_unitary(r, lie)],
        Space::RedQuasiPrime => vec![haar_unitary(r, lie), regular_torus(r, lie, min_gap)],
    };
    PhasePoint::new(space, comps)
}
