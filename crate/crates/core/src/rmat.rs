//! Dynamical r-matrices acting componentwise in the matrix-unit basis.
//!
//! Every operator here kills the diagonal and multiplies the (j,k) entry by a
//! scalar depending on the (j,k) root, so application is O(n²).

use crate::config::tolerances;
use crate::cxmat::{MatC, C64, I, ZERO};
use crate::error::{Error, Result};
use crate::lie::LieData;

/// A dynamical r-matrix together with the diagonal point it is evaluated at.
#[derive(Debug, Clone, PartialEq)]
pub enum ROperator {
    /// ½(Ad_Q + id)(Ad_Q − id)⁻¹ on the off-diagonal part; Q any invertible diagonal.
    RQ(MatC),
    /// (ad_λ)⁻¹ on the off-diagonal part.
    RLambda(MatC),
    /// (sinh ad_γ)⁻¹ with Γ = e^γ.
    RhoGamma(MatC),
    /// ½ coth(ad_γ) with Γ = e^γ.
    RGamma2(MatC),
    /// X ↦ (−iX)_𝔊 = i(X_> − X_<).
    Ri,
}

fn diag_of(x: &MatC) -> Result<Vec<C64>> {
    if !x.is_diagonal(1e-12 * x.max_abs().max(1.0)) {
        return Err(Error::Usage("r-matrix site must be diagonal".into()));
    }
    Ok(x.diag())
}

fn log_gamma(gamma: &MatC) -> Result<Vec<f64>> {
    let d = diag_of(gamma)?;
    if d.iter().any(|v| v.re <= 0.0 || v.im.abs() > 1e-12 * v.re.abs().max(1.0)) {
        return Err(Error::Usage("Γ must be positive diagonal".into()));
    }
    Ok(d.iter().map(|v| v.re.ln()).collect())
}

fn guard(gap: f64, what: &str) -> Result<()> {
    if gap.abs() <= tolerances().regularity {
        Err(Error::Regularity(format!("{what}: root gap {gap:e}")))
    } else {
        Ok(())
    }
}

impl ROperator {
    /// Multiplier of the (j, k) entry, j ≠ k.
    fn multipliers(&self) -> Result<Option<Vec<Vec<C64>>>> {
        let table = |n: usize, f: &dyn Fn(usize, usize) -> Result<C64>| -> Result<Vec<Vec<C64>>> {
            (0..n).map(|j| (0..n).map(|k| if j == k { Ok(ZERO) } else { f(j, k) }).collect()).collect()
        };
        Ok(Some(match self {
            ROperator::RQ(q) => {
                let d = diag_of(q)?;
                table(q.n(), &|j, k| {
                    let mu = d[j] / d[k];
                    guard((mu - 1.0).norm(), "R(Q)")?;
                    Ok((mu + 1.0) / (mu - 1.0) * 0.5)
                })?
            }
            ROperator::RLambda(l) => {
                let d = diag_of(l)?;
                table(l.n(), &|j, k| {
                    let gap = d[j] - d[k];
                    guard(gap.norm(), "r(λ)")?;
                    Ok(gap.inv())
                })?
            }
            ROperator::RhoGamma(g) => {
                let gam = log_gamma(g)?;
                table(g.n(), &|j, k| {
                    let gap = gam[j] - gam[k];
                    guard(gap, "ϱ(Γ)")?;
                    Ok(C64::new(1.0 / gap.sinh(), 0.0))
                })?
            }
            ROperator::RGamma2(g) => {
                let gam = log_gamma(g)?;
                table(g.n(), &|j, k| {
                    let gap = gam[j] - gam[k];
                    guard(gap, "R(Γ²)")?;
                    Ok(C64::new(0.5 / gap.tanh(), 0.0))
                })?
            }
            ROperator::Ri => return Ok(None),
        }))
    }

    pub fn apply(&self, x: &MatC) -> Result<MatC> {
        match self.multipliers()? {
            Some(m) => Ok(x.map_indexed(|j, k, v| m[j][k] * v)),
            None => Ok(x.map_indexed(|j, k, v| {
                if j < k {
                    I * v
                } else if j > k {
                    -I * v
                } else {
                    ZERO
                }
            })),
        }
    }
}

pub fn apply_r_q(q: &MatC, x: &MatC) -> Result<MatC> {
    ROperator::RQ(q.clone()).apply(x)
}

pub fn apply_r_lambda(lambda: &MatC, x: &MatC) -> Result<MatC> {
    ROperator::RLambda(lambda.clone()).apply(x)
}

pub fn apply_rho_gamma(gamma: &MatC, x: &MatC) -> Result<MatC> {
    ROperator::RhoGamma(gamma.clone()).apply(x)
}

pub fn apply_r_gamma2(gamma: &MatC, x: &MatC) -> Result<MatC> {
    ROperator::RGamma2(gamma.clone()).apply(x)
}

pub fn apply_r_i(x: &MatC) -> MatC {
    ROperator::Ri.apply(x).expect("Ri has no site")
}

/// Derivative of r(λ)X in the Cartan direction Z: −(Z_j − Z_k)/(λ_j − λ_k)² · X_jk.
pub fn d_r_lambda(lambda: &MatC, z: &MatC, x: &MatC) -> Result<MatC> {
    let d = diag_of(lambda)?;
    let dz = z.diag();
    let n = x.n();
    let mut out = MatC::zeros(n);
    for j in 0..n {
        for k in 0..n {
            if j != k {
                let gap = d[j] - d[k];
                guard(gap.norm(), "d r(λ)")?;
                out[(j, k)] = -(dz[j] - dz[k]) / (gap * gap) * x[(j, k)];
            }
        }
    }
    Ok(out)
}

/// Right-hand side of the dynamical Yang–Baxter identity minus its left-hand side:
///
/// [rX, rY] − r([X, rY] + [rX, Y]) − s·(d_{Y₀}r X − d_{X₀}r Y + Σᵢ Kⁱ⟨X, d_{Kᵢ}r Y⟩),
///
/// returned as a Frobenius norm. With r(λ) = (ad_λ)⁻¹ the identity holds for
/// s = −1; `derivative_sign` exposes s so the other sign can be examined.
pub fn cdybe_residual_signed(lie: &LieData, lambda: &MatC, x: &MatC, y: &MatC, derivative_sign: f64) -> Result<f64> {
    let r = ROperator::RLambda(lambda.clone());
    let rx = r.apply(x)?;
    let ry = r.apply(y)?;
    let lhs = rx.commutator(&ry);
    let inner = &x.commutator(&ry) + &rx.commutator(y);
    let mut rhs = r.apply(&inner)?;
    let x0 = x.diag_part();
    let y0 = y.diag_part();
    let mut deriv = &d_r_lambda(lambda, &y0, x)? - &d_r_lambda(lambda, &x0, y)?;
    let basis = lie.roots();
    for (kl, ku) in basis.k_lower.iter().zip(&basis.k_upper) {
        let c = lie.form_g(x, &d_r_lambda(lambda, kl, y)?);
        deriv += &ku.scale_re(c);
    }
    rhs += &deriv.scale_re(derivative_sign);
    Ok((&lhs - &rhs).frob_norm())
}

/// Residual of the dynamical Yang–Baxter identity for r(λ) = (ad_λ)⁻¹.
pub fn cdybe_residual(lie: &LieData, lambda: &MatC, x: &MatC, y: &MatC) -> Result<f64> {
    cdybe_residual_signed(lie, lambda, x, y, -1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn diagonal_is_killed() {
        let x = MatC::from_diag(&[c(0.0, 1.0), c(0.0, -1.0)]);
        let q = MatC::from_diag(&[I, -I]);
        let gamma = MatC::from_real_diag(&[2.0, 0.5]);
        assert!(apply_r_q(&q, &x).unwrap().frob_norm() == 0.0);
        assert!(apply_r_lambda(&q, &x).unwrap().frob_norm() == 0.0);
        assert!(apply_rho_gamma(&gamma, &x).unwrap().frob_norm() == 0.0);
        assert!(apply_r_gamma2(&gamma, &x).unwrap().frob_norm() == 0.0);
        assert!(apply_r_i(&x).frob_norm() == 0.0);
    }

    #[test]
    fn r_q_examples() {
        let e12 = MatC::unit(2, 0, 1);
        let q = MatC::from_diag(&[I, -I]);
        assert!(apply_r_q(&q, &e12).unwrap().frob_norm() < 1e-15);
        let quarter = std::f64::consts::FRAC_PI_4;
        let q = MatC::from_diag(&[C64::from_polar(1.0, quarter), C64::from_polar(1.0, -quarter)]);
        let got = apply_r_q(&q, &e12).unwrap();
        assert!(got.dist(&e12.scale(c(0.0, -0.5))) < 1e-15);
    }

    #[test]
    fn r_lambda_example() {
        let a = 0.7;
        let lambda = MatC::from_diag(&[c(0.0, a), c(0.0, -a)]);
        let got = apply_r_lambda(&lambda, &MatC::unit(2, 0, 1)).unwrap();
        assert!(got.dist(&MatC::unit(2, 0, 1).scale(c(0.0, -1.0 / (2.0 * a)))) < 1e-15);
    }

    #[test]
    fn rho_gamma_example() {
        let e = 1f64.exp();
        let gamma = MatC::from_real_diag(&[e, 1.0 / e]);
        let got = apply_rho_gamma(&gamma, &MatC::unit(2, 0, 1)).unwrap();
        assert!(got.dist(&MatC::unit(2, 0, 1).scale_re(1.0 / 2f64.sinh())) < 1e-15);
    }

    #[test]
    fn r_i_example() {
        let x = &MatC::unit(2, 0, 1) - &MatC::unit(2, 1, 0);
        let want = (&MatC::unit(2, 0, 1) + &MatC::unit(2, 1, 0)).scale(I);
        assert!(apply_r_i(&x).dist(&want) < 1e-15);
        let lie = LieData::su(2);
        assert!(apply_r_i(&x).dist(&lie.proj_g(&x.scale(-I))) < 1e-15);
    }

    #[test]
    fn regularity_is_guarded() {
        let q = MatC::identity(2);
        assert!(matches!(apply_r_q(&q, &MatC::unit(2, 0, 1)), Err(Error::Regularity(_))));
    }

    #[test]
    fn cdybe_on_cartan_inputs_vanishes() {
        let lie = LieData::su(3);
        let lambda = MatC::from_diag(&[c(0.0, 1.0), c(0.0, 0.2), c(0.0, -1.2)]);
        let x = MatC::from_diag(&[c(0.0, 0.3), c(0.0, -0.1), c(0.0, -0.2)]);
        let y = MatC::from_diag(&[c(0.0, -0.5), c(0.0, 0.4), c(0.0, 0.1)]);
        assert!(cdybe_residual(&lie, &lambda, &x, &y).unwrap() < 1e-15);
    }

    #[test]
    fn cdybe_derivative_sign_is_forced() {
        let lie = LieData::su(3);
        let mut rng = sample::rng(11);
        let lambda = sample::regular_cartan(&mut rng, &lie, 1.0, 0.3);
        let x = sample::algebra_g(&mut rng, &lie, 1.0);
        let y = sample::algebra_g(&mut rng, &lie, 1.0);
        assert!(cdybe_residual(&lie, &lambda, &x, &y).unwrap() < 1e-12);
        assert!(cdybe_residual_signed(&lie, &lambda, &x, &y, 1.0).unwrap() > 1e-3);
    }

    #[test]
    fn homogeneity_of_r_lambda() {
        let lie = LieData::su(4);
        let mut rng = sample::rng(3);
        let lambda = sample::regular_cartan(&mut rng, &lie, 1.0, 0.3);
        let x = sample::algebra_g(&mut rng, &lie, 1.0);
        let d = d_r_lambda(&lambda, &lambda, &x).unwrap();
        assert!(d.dist(&-&apply_r_lambda(&lambda, &x).unwrap()) < 1e-12);
    }
}
