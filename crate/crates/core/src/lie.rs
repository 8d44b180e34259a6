//! gl(n,ℂ) as a real Lie algebra split into the compact part 𝔊 and the
//! triangular part 𝔅, with the two invariant forms and the τ-map.

use crate::config::tolerances;
use crate::cxmat::{MatC, C64, I, ZERO};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Which compact group is realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    #[default]
    Su,
    U,
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "su" => Ok(Variant::Su),
            "u" => Ok(Variant::U),
            other => Err(Error::Schema(format!("unknown variant {other:?}"))),
        }
    }
}

/// Dimension and variant of the group under study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LieData {
    pub n: usize,
    pub variant: Variant,
}

/// Subspaces of gl(n,ℂ) used by the projections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subspace {
    Full,
    /// Anti-Hermitian matrices (traceless for su).
    G,
    /// Upper triangular with real diagonal (traceless for su).
    B,
    /// Imaginary diagonal.
    G0,
    /// Real diagonal.
    IG0,
    /// Anti-Hermitian with zero diagonal.
    Gperp,
    /// Strictly upper triangular.
    Bgt,
    /// Zero diagonal, otherwise arbitrary.
    GCperp,
}

impl std::str::FromStr for Subspace {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "full" => Subspace::Full,
            "G" => Subspace::G,
            "B" => Subspace::B,
            "G0" => Subspace::G0,
            "iG0" => Subspace::IG0,
            "Gperp" => Subspace::Gperp,
            "Bgt" => Subspace::Bgt,
            "GCperp" => Subspace::GCperp,
            other => return Err(Error::Usage(format!("unknown subspace tag {other:?}"))),
        })
    }
}

/// A gl(n,ℂ) element together with the subspace it claims to lie in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgElem {
    pub mat: MatC,
    pub claimed: Subspace,
}

impl AlgElem {
    pub fn new(lie: &LieData, mat: MatC, claimed: Subspace) -> Result<Self> {
        let defect = lie.membership_defect(&mat, claimed);
        if defect > 1e-12 * mat.frob_norm().max(1.0) {
            return Err(Error::Contract(format!("element is not in {claimed:?} (defect {defect:e})")));
        }
        Ok(AlgElem { mat, claimed })
    }
}

impl LieData {
    pub fn new(n: usize, variant: Variant) -> Result<Self> {
        if n < 2 {
            return Err(Error::Schema("n must be at least 2".into()));
        }
        if n > 32 {
            return Err(Error::Schema("n beyond 32 is not supported".into()));
        }
        Ok(LieData { n, variant })
    }

    pub fn su(n: usize) -> Self {
        LieData { n, variant: Variant::Su }
    }

    /// Rank of the compact algebra.
    pub fn ell(&self) -> usize {
        match self.variant {
            Variant::Su => self.n - 1,
            Variant::U => self.n,
        }
    }

    fn traceless(&self) -> bool {
        self.variant == Variant::Su
    }

    /// Removes the imaginary part of the trace (keeps 𝔊 inside su(n)).
    fn drop_imag_trace(&self, mut x: MatC) -> MatC {
        if self.traceless() {
            let t = x.trace().im / self.n as f64;
            for j in 0..self.n {
                x[(j, j)] -= I * t;
            }
        }
        x
    }

    /// Removes the real part of the trace (keeps 𝔅 inside sl(n,ℂ)).
    fn drop_real_trace(&self, mut x: MatC) -> MatC {
        if self.traceless() {
            let t = x.trace().re / self.n as f64;
            for j in 0..self.n {
                x[(j, j)] -= C64::new(t, 0.0);
            }
        }
        x
    }

    /// Removes the full complex trace.
    pub fn drop_trace(&self, mut x: MatC) -> MatC {
        if self.traceless() {
            let t = x.trace() / self.n as f64;
            for j in 0..self.n {
                x[(j, j)] -= t;
            }
        }
        x
    }

    /// 𝔊-component: i·Im diag + X_< − (X_<)†.
    pub fn proj_g(&self, x: &MatC) -> MatC {
        let y = x.map_indexed(|j, k, v| {
            if j == k {
                C64::new(0.0, v.im)
            } else if j > k {
                v
            } else {
                -x[(k, j)].conj()
            }
        });
        self.drop_imag_trace(y)
    }

    /// 𝔅-component: Re diag + X_> + (X_<)†.
    pub fn proj_b(&self, x: &MatC) -> MatC {
        let y = x.map_indexed(|j, k, v| {
            if j == k {
                C64::new(v.re, 0.0)
            } else if j < k {
                v + x[(k, j)].conj()
            } else {
                ZERO
            }
        });
        self.drop_real_trace(y)
    }

    /// Anti-Hermitian part (traceless for su); the ⟨,⟩_𝔊-orthogonal projection onto 𝔊.
    pub fn antiherm(&self, x: &MatC) -> MatC {
        self.drop_imag_trace((x - &x.adjoint()).scale_re(0.5))
    }

    /// Imaginary diagonal part.
    pub fn proj_g0(&self, x: &MatC) -> MatC {
        self.drop_imag_trace(MatC::from_diag(&x.diag().iter().map(|v| C64::new(0.0, v.im)).collect::<Vec<_>>()))
    }

    /// Real diagonal part.
    pub fn proj_ig0(&self, x: &MatC) -> MatC {
        self.drop_real_trace(MatC::from_diag(&x.diag().iter().map(|v| C64::new(v.re, 0.0)).collect::<Vec<_>>()))
    }

    /// Full complex diagonal part.
    pub fn proj_diag(&self, x: &MatC) -> MatC {
        x.diag_part()
    }

    /// Off-diagonal part.
    pub fn proj_perp(&self, x: &MatC) -> MatC {
        x.map_indexed(|j, k, v| if j == k { ZERO } else { v })
    }

    pub fn strict_upper(&self, x: &MatC) -> MatC {
        x.map_indexed(|j, k, v| if j < k { v } else { ZERO })
    }

    pub fn strict_lower(&self, x: &MatC) -> MatC {
        x.map_indexed(|j, k, v| if j > k { v } else { ZERO })
    }

    pub fn project(&self, x: &MatC, target: Subspace) -> MatC {
        match target {
            Subspace::Full => x.clone(),
            Subspace::G => self.proj_g(x),
            Subspace::B => self.proj_b(x),
            Subspace::G0 => self.proj_g0(&self.proj_g(x)),
            Subspace::IG0 => self.proj_ig0(&self.proj_b(x)),
            Subspace::Gperp => self.proj_perp(&self.proj_g(x)),
            Subspace::Bgt => self.strict_upper(&self.proj_b(x)),
            Subspace::GCperp => self.proj_perp(x),
        }
    }

    /// Distance of `x` from the claimed subspace.
    pub fn membership_defect(&self, x: &MatC, s: Subspace) -> f64 {
        let trace_part = |t: f64| if self.traceless() { t.abs() } else { 0.0 };
        match s {
            Subspace::Full => 0.0,
            Subspace::G => x.anti_hermiticity_defect() + trace_part(x.trace().im),
            Subspace::B => {
                let mut d = 0.0;
                for j in 0..self.n {
                    d += x[(j, j)].im.abs();
                    for k in 0..j {
                        d += x[(j, k)].norm();
                    }
                }
                d + trace_part(x.trace().re)
            }
            Subspace::G0 => self.proj_perp(x).frob_norm() + x.diag().iter().map(|v| v.re.abs()).sum::<f64>() + trace_part(x.trace().im),
            Subspace::IG0 => self.proj_perp(x).frob_norm() + x.diag().iter().map(|v| v.im.abs()).sum::<f64>() + trace_part(x.trace().re),
            Subspace::Gperp => x.anti_hermiticity_defect() + x.diag_part().frob_norm(),
            Subspace::Bgt => x.frob_norm() - self.strict_upper(x).frob_norm(),
            Subspace::GCperp => x.diag_part().frob_norm(),
        }
    }

    /// ⟨X, Y⟩ = Re tr(XY); negative definite on 𝔊.
    pub fn form_g(&self, x: &MatC, y: &MatC) -> f64 {
        trace_of_product(x, y).re
    }

    /// ⟨X, Y⟩_I = Im tr(XY).
    pub fn form_i(&self, x: &MatC, y: &MatC) -> f64 {
        trace_of_product(x, y).im
    }

    pub fn tau(&self, z: &MatC) -> MatC {
        z.adjoint()
    }

    pub fn tau_group(&self, k: &MatC) -> MatC {
        k.adjoint()
    }

    /// Gap test on a diagonal element; see [`RegularKind`].
    pub fn is_regular(&self, x: &MatC, kind: RegularKind) -> Result<bool> {
        Ok(min_gap(x, kind)? > tolerances().regularity)
    }

    /// Fails with a regularity error unless `x` is regular.
    pub fn require_regular(&self, x: &MatC, kind: RegularKind) -> Result<()> {
        let gap = min_gap(x, kind)?;
        if gap > tolerances().regularity {
            Ok(())
        } else {
            Err(Error::Regularity(format!("{kind:?} gap {gap:e}")))
        }
    }

    pub fn roots(&self) -> RootBasis {
        RootBasis::new(self)
    }
}

/// How the diagonal entries of a regular element are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegularKind {
    /// Unit-modulus diagonal; gaps |e^{iθ_j} − e^{iθ_k}|.
    Torus,
    /// Imaginary (or real) diagonal; gaps |λ_j − λ_k|.
    Cartan,
    /// Positive diagonal; gaps |log Γ_j − log Γ_k|.
    B0,
}

fn min_gap(x: &MatC, kind: RegularKind) -> Result<f64> {
    let n = x.n();
    let scale = x.max_abs().max(1.0);
    if !x.is_diagonal(1e-12 * scale) {
        return Err(Error::Usage("regularity is tested on diagonal elements".into()));
    }
    let d = x.diag();
    let vals: Vec<C64> = match kind {
        RegularKind::Torus | RegularKind::Cartan => d,
        RegularKind::B0 => {
            if d.iter().any(|v| v.re <= 0.0 || v.im.abs() > 1e-12 * scale) {
                return Err(Error::Usage("B0 element needs a positive diagonal".into()));
            }
            d.iter().map(|v| C64::new(v.re.ln(), 0.0)).collect()
        }
    };
    let mut gap = f64::INFINITY;
    for j in 0..n {
        for k in j + 1..n {
            gap = gap.min((vals[j] - vals[k]).norm());
        }
    }
    Ok(gap)
}

/// tr(XY) without forming the product.
pub fn trace_of_product(x: &MatC, y: &MatC) -> C64 {
    let n = x.n();
    let mut s = ZERO;
    for j in 0..n {
        for k in 0..n {
            s += x[(j, k)] * y[(k, j)];
        }
    }
    s
}

/// Weyl–Chevalley data for the A-series: matrix units, Cartan generators and
/// a pair of ⟨,⟩_𝔊-dual bases of 𝔊₀.
#[derive(Debug, Clone)]
pub struct RootBasis {
    pub n: usize,
    /// Positive roots (j, k) with j < k.
    pub positive: Vec<(usize, usize)>,
    /// Cartan generators H_j = E_jj − E_{j+1,j+1} (su) or E_jj (u).
    pub cartan: Vec<MatC>,
    /// Basis K_i of 𝔊₀, K_i = i·H_i.
    pub k_lower: Vec<MatC>,
    /// Dual basis K^i with ⟨K_i, K^j⟩_𝔊 = δ_ij.
    pub k_upper: Vec<MatC>,
}

impl RootBasis {
    pub fn new(lie: &LieData) -> Self {
        let n = lie.n;
        let positive = (0..n).flat_map(|j| (j + 1..n).map(move |k| (j, k))).collect();
        let cartan: Vec<MatC> = match lie.variant {
            Variant::Su => (0..n - 1)
                .map(|j| {
                    let mut h = MatC::zeros(n);
                    h[(j, j)] = C64::new(1.0, 0.0);
                    h[(j + 1, j + 1)] = C64::new(-1.0, 0.0);
                    h
                })
                .collect(),
            Variant::U => (0..n).map(|j| MatC::unit(n, j, j)).collect(),
        };
        let k_lower: Vec<MatC> = cartan.iter().map(|h| h.scale(I)).collect();
        let m = k_lower.len();
        let gram: Vec<Vec<f64>> = (0..m).map(|a| (0..m).map(|b| lie.form_g(&k_lower[a], &k_lower[b])).collect()).collect();
        let inv = invert_real(&gram);
        // K^j = Σ_k (G⁻¹)_{jk} K_k gives ⟨K_i, K^j⟩ = Σ_k G_ik (G⁻¹)_kj = δ.
        let k_upper = (0..m)
            .map(|j| {
                let mut acc = MatC::zeros(n);
                for (k, kk) in k_lower.iter().enumerate() {
                    acc += &kk.scale_re(inv[j][k]);
                }
                acc
            })
            .collect();
        RootBasis { n, positive, cartan, k_lower, k_upper }
    }

    pub fn root_vector(&self, j: usize, k: usize) -> MatC {
        MatC::unit(self.n, j, k)
    }
}

/// Gauss–Jordan inverse of a small symmetric positive or negative definite matrix.
fn invert_real(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = a.len();
    let mut aug: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..m).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for c in 0..m {
        let p = (c..m).max_by(|&x, &y| aug[x][c].abs().total_cmp(&aug[y][c].abs())).unwrap();
        aug.swap(c, p);
        let piv = aug[c][c];
        for v in aug[c].iter_mut() {
            *v /= piv;
        }
        for r in 0..m {
            if r != c {
                let f = aug[r][c];
                let row_c = aug[c].clone();
                for (v, w) in aug[r].iter_mut().zip(row_c) {
                    *v -= f * w;
                }
            }
        }
    }
    aug.into_iter().map(|r| r[m..].to_vec()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn split_of_anti_hermitian_is_trivial() {
        let lie = LieData::su(2);
        let x = MatC::from_rows(&[vec![c(0.0, 0.5), c(1.0, 2.0)], vec![c(-1.0, 2.0), c(0.0, -0.5)]]);
        assert!(lie.proj_g(&x).dist(&x) < 1e-15);
        assert!(lie.proj_b(&x).frob_norm() < 1e-15);
    }

    #[test]
    fn split_of_matrix_unit_by_hand() {
        // E12 lies in 𝔅 already; E21 = (E21 − E12) + E12.
        let lie = LieData::su(2);
        let e12 = MatC::unit(2, 0, 1);
        assert!(lie.proj_b(&e12).dist(&e12) < 1e-15);
        let e21 = MatC::unit(2, 1, 0);
        assert!(lie.proj_g(&e21).dist(&(&e21 - &e12)) < 1e-15);
        assert!(lie.proj_b(&e21).dist(&e12) < 1e-15);
    }

    #[test]
    fn cartan_split_in_u_variant() {
        let lie = LieData { n: 3, variant: Variant::U };
        let x = MatC::identity(3).scale(I);
        assert!(lie.project(&x, Subspace::G0).dist(&x) < 1e-15);
        assert!(lie.proj_perp(&x).frob_norm() < 1e-15);
    }

    #[test]
    fn form_g_on_cartan_generator() {
        let lie = LieData::su(2);
        let ih = MatC::from_diag(&[I, -I]);
        assert!((lie.form_g(&ih, &ih) + 2.0).abs() < 1e-15);
    }

    #[test]
    fn tau_examples() {
        let lie = LieData::su(2);
        assert!(lie.tau(&MatC::unit(2, 0, 1)).dist(&MatC::unit(2, 1, 0)) < 1e-15);
        let x = MatC::from_rows(&[vec![c(0.0, 1.0), c(2.0, 0.0)], vec![c(-2.0, 0.0), c(0.0, -1.0)]]);
        assert!(lie.tau(&x).dist(&-&x) < 1e-15);
    }

    #[test]
    fn regularity_examples() {
        let lie = LieData::su(2);
        assert!(lie.is_regular(&MatC::from_diag(&[I, -I]), RegularKind::Torus).unwrap());
        assert!(!lie.is_regular(&MatC::identity(2), RegularKind::Torus).unwrap());
        let gamma = MatC::from_real_diag(&[2.0, 2.0 + 1e-12]);
        assert!(!lie.is_regular(&gamma, RegularKind::B0).unwrap());
        assert!(matches!(lie.is_regular(&MatC::unit(2, 0, 1), RegularKind::Torus), Err(Error::Usage(_))));
    }

    #[test]
    fn dual_bases_pair_to_identity() {
        for variant in [Variant::Su, Variant::U] {
            let lie = LieData { n: 4, variant };
            let rb = lie.roots();
            assert_eq!(rb.k_lower.len(), lie.ell());
            for (i, ki) in rb.k_lower.iter().enumerate() {
                for (j, kj) in rb.k_upper.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((lie.form_g(ki, kj) - want).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn root_normalization() {
        let lie = LieData::su(3);
        let rb = lie.roots();
        for &(j, k) in &rb.positive {
            let e = rb.root_vector(j, k);
            let f = rb.root_vector(k, j);
            assert!((trace_of_product(&e, &f) - C64::new(1.0, 0.0)).norm() < 1e-15);
            let h = e.commutator(&f);
            let mut want = MatC::zeros(3);
            want[(j, j)] = c(1.0, 0.0);
            want[(k, k)] = c(-1.0, 0.0);
            assert!(h.dist(&want) < 1e-15);
        }
    }

    #[test]
    fn unknown_tag_is_usage_error() {
        assert!(matches!("Q".parse::<Subspace>(), Err(Error::Usage(_))));
    }
}
