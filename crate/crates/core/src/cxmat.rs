//! Dense complex square matrices and the factorizations built on them.
//!
//! Everything here is sized for small n (the crate targets n ≤ 32), so plain
//! row-major storage and textbook algorithms are used throughout.

use crate::config::tolerances;
use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Dense n×n complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct MatC {
    n: usize,
    data: Vec<C64>,
}

impl MatC {
    pub fn zeros(n: usize) -> Self {
        MatC { n, data: vec![ZERO; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for j in 0..n {
            m[(j, j)] = ONE;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for j in 0..n {
            for k in 0..n {
                data.push(f(j, k));
            }
        }
        MatC { n, data }
    }

    /// Builds a matrix from row-major entries; `rows.len()` must be a square.
    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let n = rows.len();
        Self::from_fn(n, |j, k| rows[j][k])
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        Self::from_fn(n, |j, k| C64::new(rows[j][k], 0.0))
    }

    pub fn from_diag(d: &[C64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (j, &x) in d.iter().enumerate() {
            m[(j, j)] = x;
        }
        m
    }

    pub fn from_real_diag(d: &[f64]) -> Self {
        let v: Vec<C64> = d.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_diag(&v)
    }

    /// Matrix unit E_{jk}.
    pub fn unit(n: usize, j: usize, k: usize) -> Self {
        let mut m = Self::zeros(n);
        m[(j, k)] = ONE;
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn diag(&self) -> Vec<C64> {
        (0..self.n).map(|j| self[(j, j)]).collect()
    }

    pub fn diag_part(&self) -> MatC {
        Self::from_diag(&self.diag())
    }

    pub fn adjoint(&self) -> MatC {
        Self::from_fn(self.n, |j, k| self[(k, j)].conj())
    }

    pub fn transpose(&self) -> MatC {
        Self::from_fn(self.n, |j, k| self[(k, j)])
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|j| self[(j, j)]).sum()
    }

    pub fn scale(&self, s: C64) -> MatC {
        MatC { n: self.n, data: self.data.iter().map(|&x| x * s).collect() }
    }

    pub fn scale_re(&self, s: f64) -> MatC {
        MatC { n: self.n, data: self.data.iter().map(|&x| x * s).collect() }
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> MatC {
        MatC { n: self.n, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    /// Entry-wise map that also sees the indices.
    pub fn map_indexed(&self, f: impl Fn(usize, usize, C64) -> C64) -> MatC {
        Self::from_fn(self.n, |j, k| f(j, k, self[(j, k)]))
    }

    pub fn commutator(&self, other: &MatC) -> MatC {
        &(self * other) - &(other * self)
    }

    /// Conjugation `self · x · self⁻¹` for an invertible `self`.
    pub fn conj_by(&self, x: &MatC) -> Result<MatC> {
        Ok(&(self * x) * &self.inverse()?)
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        (0..self.n)
            .map(|k| (0..self.n).map(|j| self[(j, k)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn dist(&self, other: &MatC) -> f64 {
        (self - other).frob_norm()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.re.is_finite() && x.im.is_finite())
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn unitarity_defect(&self) -> f64 {
        (&(&self.adjoint() * self) - &MatC::identity(self.n)).frob_norm()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (self - &self.adjoint()).frob_norm()
    }

    pub fn anti_hermiticity_defect(&self) -> f64 {
        (self + &self.adjoint()).frob_norm()
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_defect() < tolerances().unitary
    }

    pub fn is_anti_hermitian(&self) -> bool {
        self.anti_hermiticity_defect() < tolerances().hermitian
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_defect() < tolerances().hermitian * self.frob_norm().max(1.0)
    }

    /// Strictly lower part zero, diagonal real and positive.
    pub fn is_upper_positive(&self) -> bool {
        let scale = self.max_abs().max(1.0);
        for j in 0..self.n {
            for k in 0..j {
                if self[(j, k)].norm() > 1e-12 * scale {
                    return false;
                }
            }
            let d = self[(j, j)];
            if d.re <= 0.0 || d.im.abs() > 1e-12 * scale {
                return false;
            }
        }
        true
    }

    pub fn is_positive_hermitian(&self) -> bool {
        self.hermiticity_defect() < tolerances().hermitian * self.frob_norm().max(1.0)
            && eig_herm(self).map(|(ev, _)| ev[0] > 0.0).unwrap_or(false)
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        for j in 0..self.n {
            for k in 0..self.n {
                if j != k && self[(j, k)].norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// LU factorization with partial pivoting, returned packed with the pivot
    /// order and permutation sign.
    fn lu(&self) -> Result<(MatC, Vec<usize>, f64)> {
        let n = self.n;
        let mut a = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let scale = self.frob_norm();
        if scale == 0.0 {
            return Err(Error::Singular("zero matrix".into()));
        }
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| a[(x, k)].norm().total_cmp(&a[(y, k)].norm()))
                .unwrap();
            if a[(p, k)].norm() < tolerances().pivot * scale {
                return Err(Error::Singular(format!("LU pivot {k} vanishes")));
            }
            if p != k {
                for c in 0..n {
                    a.data.swap(p * n + c, k * n + c);
                }
                perm.swap(p, k);
                sign = -sign;
            }
            let piv = a[(k, k)];
            for r in k + 1..n {
                let f = a[(r, k)] / piv;
                a[(r, k)] = f;
                for c in k + 1..n {
                    let u = a[(k, c)];
                    a[(r, c)] -= f * u;
                }
            }
        }
        Ok((a, perm, sign))
    }

    pub fn inverse(&self) -> Result<MatC> {
        let n = self.n;
        let (lu, perm, _) = self.lu()?;
        let mut inv = MatC::zeros(n);
        for col in 0..n {
            let mut x: Vec<C64> = (0..n).map(|r| if perm[r] == col { ONE } else { ZERO }).collect();
            for r in 0..n {
                for c in 0..r {
                    let l = lu[(r, c)];
                    x[r] = x[r] - l * x[c];
                }
            }
            for r in (0..n).rev() {
                for c in r + 1..n {
                    let u = lu[(r, c)];
                    x[r] = x[r] - u * x[c];
                }
                x[r] /= lu[(r, r)];
            }
            for r in 0..n {
                inv[(r, col)] = x[r];
            }
        }
        Ok(inv)
    }

    pub fn det(&self) -> C64 {
        match self.lu() {
            Ok((lu, _, sign)) => (0..self.n).map(|j| lu[(j, j)]).product::<C64>() * sign,
            Err(_) => ZERO,
        }
    }

    /// Upper-triangular inverse by back substitution.
    pub fn upper_inverse(&self) -> Result<MatC> {
        let n = self.n;
        let mut inv = MatC::zeros(n);
        for j in 0..n {
            if self[(j, j)].norm() == 0.0 {
                return Err(Error::Singular("zero diagonal in triangular matrix".into()));
            }
        }
        for col in 0..n {
            inv[(col, col)] = ONE / self[(col, col)];
            for r in (0..col).rev() {
                let mut s = ZERO;
                for c in r + 1..=col {
                    s += self[(r, c)] * inv[(c, col)];
                }
                inv[(r, col)] = -s / self[(r, r)];
            }
        }
        Ok(inv)
    }
}

impl Index<(usize, usize)> for MatC {
    type Output = C64;
    fn index(&self, (j, k): (usize, usize)) -> &C64 {
        &self.data[j * self.n + k]
    }
}

impl IndexMut<(usize, usize)> for MatC {
    fn index_mut(&mut self, (j, k): (usize, usize)) -> &mut C64 {
        &mut self.data[j * self.n + k]
    }
}

impl<'a> Add<&'a MatC> for &'a MatC {
    type Output = MatC;
    fn add(self, rhs: &MatC) -> MatC {
        debug_assert_eq!(self.n, rhs.n);
        MatC { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl<'a> Sub<&'a MatC> for &'a MatC {
    type Output = MatC;
    fn sub(self, rhs: &MatC) -> MatC {
        debug_assert_eq!(self.n, rhs.n);
        MatC { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

impl<'a> Mul<&'a MatC> for &'a MatC {
    type Output = MatC;
    fn mul(self, rhs: &MatC) -> MatC {
        let n = self.n;
        debug_assert_eq!(n, rhs.n);
        let mut out = vec![ZERO; n * n];
        for j in 0..n {
            for l in 0..n {
                let a = self.data[j * n + l];
                if a == ZERO {
                    continue;
                }
                for k in 0..n {
                    out[j * n + k] += a * rhs.data[l * n + k];
                }
            }
        }
        MatC { n, data: out }
    }
}

impl Neg for &MatC {
    type Output = MatC;
    fn neg(self) -> MatC {
        self.scale_re(-1.0)
    }
}

impl AddAssign<&MatC> for MatC {
    fn add_assign(&mut self, rhs: &MatC) {
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl SubAssign<&MatC> for MatC {
    fn sub_assign(&mut self, rhs: &MatC) {
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a -= b;
        }
    }
}

/// Product of a list of matrices, left to right.
pub fn product(factors: &[&MatC]) -> MatC {
    let mut it = factors.iter();
    let first = (*it.next().expect("empty product")).clone();
    it.fold(first, |acc, m| &acc * m)
}

#[derive(Serialize, Deserialize)]
struct MatJson {
    n: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl Serialize for MatC {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.n;
        let re = (0..n).map(|j| (0..n).map(|k| self[(j, k)].re).collect()).collect();
        let im = (0..n).map(|j| (0..n).map(|k| self[(j, k)].im).collect()).collect();
        MatJson { n, re, im }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for MatC {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let m = MatJson::deserialize(d)?;
        let ok_rows = |rows: &Vec<Vec<f64>>| rows.len() == m.n && rows.iter().all(|r| r.len() == m.n);
        if m.n == 0 || !ok_rows(&m.re) || !ok_rows(&m.im) {
            return Err(D::Error::custom("matrix rows do not match n"));
        }
        let out = MatC::from_fn(m.n, |j, k| C64::new(m.re[j][k], m.im[j][k]));
        if !out.is_finite() {
            return Err(D::Error::custom("matrix has non-finite entries"));
        }
        Ok(out)
    }
}

const TAYLOR_DEGREE: usize = 18;

/// Matrix exponential by scaling and squaring of a degree-18 Taylor polynomial.
///
/// The argument is scaled so that its 1-norm is at most 1/2, where the
/// truncation error is below 1e-22.
pub fn mat_exp(x: &MatC) -> Result<MatC> {
    let norm = x.norm1();
    if !norm.is_finite() || norm > tolerances().exp_bound {
        return Err(Error::BoundedInput(format!("exp argument has 1-norm {norm}")));
    }
    let mut s = 0;
    let mut scaled_norm = norm;
    while scaled_norm > 0.5 {
        scaled_norm /= 2.0;
        s += 1;
    }
    let a = x.scale_re(0.5f64.powi(s));
    let n = x.n();
    let mut out = MatC::identity(n);
    for k in (1..=TAYLOR_DEGREE).rev() {
        out = &(&a * &out).scale_re(1.0 / k as f64) + &MatC::identity(n);
    }
    for _ in 0..s {
        out = &out * &out;
    }
    Ok(out)
}

/// QR factorization with R upper triangular with positive diagonal.
///
/// Householder reflections followed by a diagonal phase correction.
pub fn qr_pos(a: &MatC) -> Result<(MatC, MatC)> {
    let n = a.n();
    let scale = a.frob_norm();
    if scale == 0.0 || !a.is_finite() {
        return Err(Error::Singular("qr of zero or non-finite matrix".into()));
    }
    let mut r = a.clone();
    let mut q = MatC::identity(n);
    for k in 0..n {
        let xnorm = (k..n).map(|j| r[(j, k)].norm_sqr()).sum::<f64>().sqrt();
        if xnorm < tolerances().pivot * scale {
            return Err(Error::Singular(format!("rank deficiency at column {k}")));
        }
        let x0 = r[(k, k)];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { ONE };
        let alpha = -phase * xnorm;
        let mut v: Vec<C64> = (k..n).map(|j| r[(j, k)]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 > 0.0 {
            // r ← (I − 2vv†/|v|²) r on rows k.., q ← q (I − 2vv†/|v|²)
            for c in 0..n {
                let mut dot = ZERO;
                for (i, vi) in v.iter().enumerate() {
                    dot += vi.conj() * r[(k + i, c)];
                }
                let f = dot * (2.0 / vnorm2);
                for (i, vi) in v.iter().enumerate() {
                    r[(k + i, c)] -= vi * f;
                }
            }
            for row in 0..n {
                let mut dot = ZERO;
                for (i, vi) in v.iter().enumerate() {
                    dot += q[(row, k + i)] * vi;
                }
                let f = dot * (2.0 / vnorm2);
                for (i, vi) in v.iter().enumerate() {
                    q[(row, k + i)] -= f * vi.conj();
                }
            }
        }
        for j in k + 1..n {
            r[(j, k)] = ZERO;
        }
    }
    for k in 0..n {
        let d = r[(k, k)];
        let ph = d / d.norm();
        for c in 0..n {
            r[(k, c)] *= ph.conj();
        }
        for row in 0..n {
            q[(row, k)] *= ph;
        }
        r[(k, k)] = C64::new(r[(k, k)].norm(), 0.0);
    }
    Ok((q, r))
}

/// Factorization A = R·Q with R upper triangular positive and Q unitary.
///
/// Obtained from `qr_pos` of the exchange-conjugated transpose: if
/// J·Aᵀ·J = q·r then A = (J rᵀ J)(J qᵀ J), and J rᵀ J is again upper triangular.
pub fn rq_pos(a: &MatC) -> Result<(MatC, MatC)> {
    let n = a.n();
    let flip = |m: &MatC| MatC::from_fn(n, |j, k| m[(n - 1 - k, n - 1 - j)]);
    let (q, r) = qr_pos(&flip(a))?;
    Ok((flip(&r), flip(&q)))
}

/// Upper-triangular b with positive diagonal and b·b† = P, by backward recursion.
pub fn chol_upper(p: &MatC) -> Result<MatC> {
    let n = p.n();
    let scale = p.frob_norm();
    if p.hermiticity_defect() > tolerances().hermitian * scale.max(1.0) {
        return Err(Error::Contract("chol_upper needs a Hermitian matrix".into()));
    }
    let mut b = MatC::zeros(n);
    for j in (0..n).rev() {
        let mut d = p[(j, j)].re;
        for k in j + 1..n {
            d -= b[(j, k)].norm_sqr();
        }
        if d <= tolerances().positivity * scale {
            return Err(Error::NotPositiveDefinite(format!("pivot {j} is {d:e}")));
        }
        let djj = d.sqrt();
        b[(j, j)] = C64::new(djj, 0.0);
        for i in 0..j {
            let mut s = p[(i, j)];
            for k in j + 1..n {
                s -= b[(i, k)] * b[(j, k)].conj();
            }
            b[(i, j)] = s / djj;
        }
    }
    Ok(b)
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Hermitian eigendecomposition by cyclic Jacobi rotations.
///
/// Returns ascending eigenvalues and a unitary U with H·U = U·diag(evals).
pub fn eig_herm(h: &MatC) -> Result<(Vec<f64>, MatC)> {
    let n = h.n();
    let scale = h.frob_norm();
    if h.hermiticity_defect() > tolerances().hermitian * scale.max(1.0) {
        return Err(Error::Contract("eig_herm needs a Hermitian matrix".into()));
    }
    let mut a = h.map_indexed(|j, k, _| (h[(j, k)] + h[(k, j)].conj()) * 0.5);
    let mut u = MatC::identity(n);
    let off = |a: &MatC| -> f64 {
        let mut s = 0.0;
        for j in 0..n {
            for k in 0..n {
                if j != k {
                    s += a[(j, k)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off(&a) <= 1e-15 * scale.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= 1e-300 {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let e = apq / mag;
                let tau = (aqq - app) / (2.0 * mag);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let t = if tau == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // W acts on the (p, q) plane: diag(1, ē) followed by a real rotation.
                let wpp = C64::new(c, 0.0);
                let wpq = C64::new(s, 0.0);
                let wqp = -e.conj() * s;
                let wqq = e.conj() * c;
                for r in 0..n {
                    let xp = a[(r, p)];
                    let xq = a[(r, q)];
                    a[(r, p)] = xp * wpp + xq * wqp;
                    a[(r, q)] = xp * wpq + xq * wqq;
                    let up = u[(r, p)];
                    let uq = u[(r, q)];
                    u[(r, p)] = up * wpp + uq * wqp;
                    u[(r, q)] = up * wpq + uq * wqq;
                }
                for c2 in 0..n {
                    let xp = a[(p, c2)];
                    let xq = a[(q, c2)];
                    a[(p, c2)] = wpp.conj() * xp + wqp.conj() * xq;
                    a[(q, c2)] = wpq.conj() * xp + wqq.conj() * xq;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(x, x)].re.total_cmp(&a[(y, y)].re));
    let evals = order.iter().map(|&j| a[(j, j)].re).collect();
    let u_sorted = MatC::from_fn(n, |r, c| u[(r, order[c])]);
    Ok((evals, u_sorted))
}

/// Rotates each column so that its largest-modulus entry (first one on ties)
/// is real and positive.
pub fn normalize_column_phases(u: &MatC) -> MatC {
    let n = u.n();
    let mut out = u.clone();
    for c in 0..n {
        let mut best = 0;
        for r in 1..n {
            if u[(r, c)].norm() > u[(best, c)].norm() * (1.0 + 1e-12) {
                best = r;
            }
        }
        let z = u[(best, c)];
        if z.norm() > 0.0 {
            let ph = z.conj() / z.norm();
            for r in 0..n {
                out[(r, c)] = u[(r, c)] * ph;
            }
        }
    }
    out
}

/// Angle in (−π, π].
pub fn wrap_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut t = theta % two_pi;
    if t <= -std::f64::consts::PI {
        t += two_pi;
    } else if t > std::f64::consts::PI {
        t -= two_pi;
    }
    t
}

/// Mixing angles tried when diagonalizing a unitary through a Hermitian combination.
const MIX_ANGLES: [f64; 8] = [0.3819660113, 1.2360679775, 2.6180339887, 0.7236067977, 1.9098300563, 2.9270509831, 0.1458980338, 1.5278640450];

/// Spectral decomposition g = U·diag(e^{iθ})·U† of a regular unitary.
///
/// Diagonalizes cos α·(g+g†)/2 + sin α·(g−g†)/(2i) for the mixing angle α
/// with the widest spectral gap. Phases are ascending in (−π, π].
pub fn diag_unitary(g: &MatC) -> Result<(Vec<f64>, MatC)> {
    let n = g.n();
    if g.unitarity_defect() > tolerances().unitary.max(1e-9) {
        return Err(Error::Contract("diag_unitary needs a unitary matrix".into()));
    }
    let gd = g.adjoint();
    let herm = &(g + &gd).scale_re(0.5);
    let skew = &(g - &gd).scale(C64::new(0.0, -0.5));
    let mut best: Option<(f64, MatC)> = None;
    for &alpha in MIX_ANGLES.iter() {
        let a = &herm.scale_re(alpha.cos()) + &skew.scale_re(alpha.sin());
        let (ev, u) = eig_herm(&a)?;
        let gap = ev.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        let gap = if n == 1 { f64::INFINITY } else { gap };
        if best.as_ref().is_none_or(|(bg, _)| gap > *bg) {
            best = Some((gap, u));
        }
    }
    let (_, u) = best.unwrap();
    let d = &(&u.adjoint() * g) * &u;
    let mut pairs: Vec<(f64, usize)> = (0..n).map(|j| (wrap_angle(d[(j, j)].arg()), j)).collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let phases: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let u = normalize_column_phases(&MatC::from_fn(n, |r, c| u[(r, pairs[c].1)]));
    for j in 0..n {
        for k in j + 1..n {
            let gap = (C64::from_polar(1.0, phases[j]) - C64::from_polar(1.0, phases[k])).norm();
            if gap <= tolerances().regularity {
                return Err(Error::Regularity(format!("eigenvalues {j} and {k} of unitary collide")));
            }
        }
    }
    Ok((phases, u))
}

/// U·diag(f(λ))·U† for a Hermitian input.
pub fn herm_fn(h: &MatC, f: impl Fn(f64) -> f64) -> Result<MatC> {
    let (ev, u) = eig_herm(h)?;
    let d: Vec<f64> = ev.iter().map(|&x| f(x)).collect();
    Ok(&(&u * &MatC::from_real_diag(&d)) * &u.adjoint())
}

fn check_positive(p: &MatC) -> Result<(Vec<f64>, MatC)> {
    let (ev, u) = eig_herm(p)?;
    if ev[0] <= tolerances().positivity * p.frob_norm() {
        return Err(Error::NotPositiveDefinite(format!("smallest eigenvalue {:e}", ev[0])));
    }
    Ok((ev, u))
}

/// Hermitian logarithm of a positive-definite Hermitian matrix.
pub fn mat_log_pos(p: &MatC) -> Result<MatC> {
    let (ev, u) = check_positive(p)?;
    let d: Vec<f64> = ev.iter().map(|x| x.ln()).collect();
    Ok(&(&u * &MatC::from_real_diag(&d)) * &u.adjoint())
}

/// Positive square root of a positive-definite Hermitian matrix.
pub fn sqrt_pos(p: &MatC) -> Result<MatC> {
    let (ev, u) = check_positive(p)?;
    let d: Vec<f64> = ev.iter().map(|x| x.sqrt()).collect();
    Ok(&(&u * &MatC::from_real_diag(&d)) * &u.adjoint())
}

/// Unitary factor of the polar decomposition, g·(g†g)^{-1/2}.
pub fn polar_unitary(g: &MatC) -> Result<MatC> {
    let p = &g.adjoint() * g;
    let (ev, u) = check_positive(&p)?;
    let d: Vec<f64> = ev.iter().map(|x| 1.0 / x.sqrt()).collect();
    Ok(g * &(&(&u * &MatC::from_real_diag(&d)) * &u.adjoint()))
}
