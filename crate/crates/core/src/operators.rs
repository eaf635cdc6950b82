//! Fourier-basis assembly of the boundary-integral operators.
//!
//! On a disk of radius R every layer potential acts diagonally in the basis
//! e^{i n theta}; the quasi-periodic single layer adds a lattice-sum
//! coupling between orders. All operators here are small dense complex
//! matrices of dimension 2(2N+1): the two blocks correspond to the interior
//! density (phi) and the exterior density (psi).
//!
//! Closed forms used throughout (z = k R, prefactor c = -i pi R / 2):
//!
//! - single layer on the boundary: `c J_n(z) H_n(z)`;
//! - one-sided normal derivatives of the free-space single layer:
//!   interior `c k J_n'(z) H_n(z)`, exterior `c k J_n(z) H_n'(z)`
//!   (their difference is the Wronskian identity, exactly 1);
//! - quasi-periodic coupling: `c J_n(z) (-1)^{n-m} Q_{n-m} J_m(z)` between
//!   input order n and output order m, with `k J_m'` in place of `J_m` for
//!   the normal derivative.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::latsum::{batch_index, LatticeSumProvider};
use crate::specfun;

/// Material parameters of the two phases and their derived contrasts.
#[derive(Debug, Clone, Copy)]
pub struct Medium {
    pub rho_w: f64,
    pub kappa_w: f64,
    pub rho_b: f64,
    pub kappa_b: f64,
}

impl Medium {
    pub fn new(rho_w: f64, kappa_w: f64, rho_b: f64, kappa_b: f64) -> Result<Self> {
        for (name, v) in [
            ("rho_w", rho_w),
            ("kappa_w", kappa_w),
            ("rho_b", rho_b),
            ("kappa_b", kappa_b),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "medium parameter {name} must be positive, got {v}"
                )));
            }
        }
        let m = Medium {
            rho_w,
            kappa_w,
            rho_b,
            kappa_b,
        };
        if !(m.delta() > 0.0 && m.delta() < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "density contrast delta = {} outside (0, 1)",
                m.delta()
            )));
        }
        Ok(m)
    }

    /// Paper defaults: rho_w = kappa_w = 5000, rho_b = kappa_b = 1,
    /// giving delta = 2e-4 and unit sound speeds in both phases.
    pub fn water_air() -> Self {
        Medium::new(5000.0, 5000.0, 1.0, 1.0).expect("defaults are valid")
    }

    pub fn delta(&self) -> f64 {
        self.rho_b / self.rho_w
    }

    pub fn v_w(&self) -> f64 {
        (self.kappa_w / self.rho_w).sqrt()
    }

    pub fn v_b(&self) -> f64 {
        (self.kappa_b / self.rho_b).sqrt()
    }

    pub fn k_w(&self, omega: f64) -> f64 {
        omega / self.v_w()
    }

    pub fn k_b(&self, omega: f64) -> f64 {
        omega / self.v_b()
    }

    /// Wave-speed contrast tau = v_w / v_b.
    pub fn tau(&self) -> f64 {
        self.v_w() / self.v_b()
    }
}

/// Bubble geometry: radius, defect perturbation and Fourier truncation.
#[derive(Debug, Clone, Copy)]
pub struct Geometry {
    pub radius: f64,
    pub eps: f64,
    pub n_order: usize,
}

impl Geometry {
    pub fn new(radius: f64, eps: f64, n_order: usize) -> Result<Self> {
        if !(radius > 0.0 && radius < 0.5) {
            return Err(Error::InvalidArgument(format!(
                "bubble radius must lie in (0, 1/2), got {radius}"
            )));
        }
        let rd = radius + eps;
        if !(rd > 0.0 && rd < 0.5) {
            return Err(Error::InvalidArgument(format!(
                "defect radius R + eps = {rd} outside (0, 1/2)"
            )));
        }
        if n_order == 0 || n_order as i32 > specfun::N_MAX / 2 {
            return Err(Error::InvalidArgument(format!(
                "truncation order {n_order} unsupported"
            )));
        }
        Ok(Geometry {
            radius,
            eps,
            n_order,
        })
    }

    /// Geometry without a defect (band-structure computations).
    pub fn unperturbed(radius: f64, n_order: usize) -> Result<Self> {
        Geometry::new(radius, 0.0, n_order)
    }

    pub fn radius_defect(&self) -> f64 {
        self.radius + self.eps
    }

    /// Number of Fourier orders 2N+1.
    pub fn block_size(&self) -> usize {
        2 * self.n_order + 1
    }

    /// Full operator dimension 2(2N+1).
    pub fn dim(&self) -> usize {
        2 * self.block_size()
    }
}

/// Dense operator in the Fourier block layout: row/column index
/// `block * (2N+1) + (n + N)` with block 0 = phi, block 1 = psi.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierBlockMatrix {
    pub n_order: usize,
    /// True when the operator couples no distinct Fourier orders.
    pub diagonal_in_order: bool,
    pub mat: DMatrix<Complex64>,
}

impl FourierBlockMatrix {
    fn zeros(n_order: usize, diagonal: bool) -> Self {
        let dim = 2 * (2 * n_order + 1);
        FourierBlockMatrix {
            n_order,
            diagonal_in_order: diagonal,
            mat: DMatrix::zeros(dim, dim),
        }
    }

    pub fn block_size(&self) -> usize {
        2 * self.n_order + 1
    }

    pub fn dim(&self) -> usize {
        2 * self.block_size()
    }

    /// Flat index of Fourier order n in the given block (0 or 1).
    pub fn index(&self, block: usize, n: i32) -> usize {
        debug_assert!(block < 2 && n.unsigned_abs() as usize <= self.n_order);
        block * self.block_size() + (n + self.n_order as i32) as usize
    }

    /// Entry mapping input (col_block, n) to output (row_block, m).
    pub fn entry(&self, row_block: usize, m: i32, col_block: usize, n: i32) -> Complex64 {
        self.mat[(self.index(row_block, m), self.index(col_block, n))]
    }

    fn set(&mut self, row_block: usize, m: i32, col_block: usize, n: i32, v: Complex64) {
        let (i, j) = (self.index(row_block, m), self.index(col_block, n));
        self.mat[(i, j)] = v;
    }
}

/// Which one-sided trace of the normal derivative to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Exterior,
    Interior,
}

struct DiskFunctions {
    j: Vec<Complex64>,
    jp: Vec<Complex64>,
    h: Vec<Complex64>,
    hp: Vec<Complex64>,
    n_order: i32,
}

impl DiskFunctions {
    /// J_n, J_n', H_n, H_n' at z = k R for |n| <= N.
    fn tabulate(k: f64, radius: f64, n_order: i32) -> Result<Self> {
        let z = Complex64::new(k * radius, 0.0);
        let size = (2 * n_order + 1) as usize;
        let mut t = DiskFunctions {
            j: Vec::with_capacity(size),
            jp: Vec::with_capacity(size),
            h: Vec::with_capacity(size),
            hp: Vec::with_capacity(size),
            n_order,
        };
        for n in -n_order..=n_order {
            t.j.push(specfun::bessel_j(n, z)?);
            t.jp.push(specfun::bessel_j_deriv(n, z)?);
            t.h.push(specfun::hankel1(n, z)?);
            t.hp.push(specfun::hankel1_deriv(n, z)?);
        }
        Ok(t)
    }

    fn idx(&self, n: i32) -> usize {
        (n + self.n_order) as usize
    }

    fn j(&self, n: i32) -> Complex64 {
        self.j[self.idx(n)]
    }
    fn jp(&self, n: i32) -> Complex64 {
        self.jp[self.idx(n)]
    }
    fn h(&self, n: i32) -> Complex64 {
        self.h[self.idx(n)]
    }
    fn hp(&self, n: i32) -> Complex64 {
        self.hp[self.idx(n)]
    }
}

fn prefactor(radius: f64) -> Complex64 {
    Complex64::new(0.0, -std::f64::consts::PI * radius / 2.0)
}

fn check_alpha(alpha: [f64; 2]) -> Result<()> {
    if alpha[0] == 0.0 && alpha[1] == 0.0 {
        return Err(Error::GammaPoint);
    }
    Ok(())
}

/// Matrix of the quasi-periodic single layer S_D^{alpha,k} on the boundary.
pub fn s_alpha_matrix(
    provider: &LatticeSumProvider,
    k: f64,
    alpha: [f64; 2],
    geo: &Geometry,
) -> Result<DMatrix<Complex64>> {
    check_alpha(alpha)?;
    let n_ord = geo.n_order as i32;
    let t = DiskFunctions::tabulate(k, geo.radius, n_ord)?;
    let q = provider.sums_up_to(2 * n_ord, k, alpha)?;
    let c = prefactor(geo.radius);
    let bs = geo.block_size();
    let mut s = DMatrix::zeros(bs, bs);
    for n in -n_ord..=n_ord {
        for m in -n_ord..=n_ord {
            let sign = if (n - m).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            let mut v = c * t.j(n) * sign * q[batch_index(n - m, 2 * n_ord)] * t.j(m);
            if m == n {
                v += c * t.j(n) * t.h(n);
            }
            s[((m + n_ord) as usize, (n + n_ord) as usize)] = v;
        }
    }
    Ok(s)
}

/// Matrix of the one-sided normal derivative of S_D^{alpha,k}.
pub fn s_tilde_alpha_matrix(
    provider: &LatticeSumProvider,
    k: f64,
    alpha: [f64; 2],
    geo: &Geometry,
    side: Side,
) -> Result<DMatrix<Complex64>> {
    check_alpha(alpha)?;
    let n_ord = geo.n_order as i32;
    let t = DiskFunctions::tabulate(k, geo.radius, n_ord)?;
    let q = provider.sums_up_to(2 * n_ord, k, alpha)?;
    let c = prefactor(geo.radius);
    let bs = geo.block_size();
    let mut s = DMatrix::zeros(bs, bs);
    for n in -n_ord..=n_ord {
        for m in -n_ord..=n_ord {
            let sign = if (n - m).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            let mut v = c * t.j(n) * sign * q[batch_index(n - m, 2 * n_ord)] * k * t.jp(m);
            if m == n {
                v += match side {
                    Side::Exterior => c * k * t.j(n) * t.hp(n),
                    Side::Interior => c * k * t.jp(n) * t.h(n),
                };
            }
            s[((m + n_ord) as usize, (n + n_ord) as usize)] = v;
        }
    }
    Ok(s)
}

/// Quasi-periodic band operator A^alpha(omega, delta):
/// block (1,1) the free single layer at k_b, block (1,2) = -S^{alpha,k_w},
/// block (2,1) the interior normal derivative at k_b,
/// block (2,2) = -delta * (exterior normal derivative of S^{alpha,k_w}).
pub fn assemble_a_alpha(
    provider: &LatticeSumProvider,
    omega: f64,
    alpha: [f64; 2],
    med: &Medium,
    geo: &Geometry,
) -> Result<FourierBlockMatrix> {
    check_alpha(alpha)?;
    if !(omega > 0.0) {
        return Err(Error::Domain(format!(
            "omega must be positive, got {omega}"
        )));
    }
    let n_ord = geo.n_order as i32;
    let kb = med.k_b(omega);
    let kw = med.k_w(omega);
    let tb = DiskFunctions::tabulate(kb, geo.radius, n_ord)?;
    let c = prefactor(geo.radius);
    let s = s_alpha_matrix(provider, kw, alpha, geo)?;
    let st = s_tilde_alpha_matrix(provider, kw, alpha, geo, Side::Exterior)?;
    let delta = med.delta();

    let mut a = FourierBlockMatrix::zeros(geo.n_order, false);
    for n in -n_ord..=n_ord {
        a.set(0, n, 0, n, c * tb.j(n) * tb.h(n));
        a.set(1, n, 0, n, c * kb * tb.jp(n) * tb.h(n));
        for m in -n_ord..=n_ord {
            let sv = s[((m + n_ord) as usize, (n + n_ord) as usize)];
            let stv = st[((m + n_ord) as usize, (n + n_ord) as usize)];
            a.set(0, m, 1, n, -sv);
            a.set(1, m, 1, n, -delta * stv);
        }
    }
    Ok(a)
}

/// Free-space operator A_D of the unit-cell problem, diagonal in the order.
pub fn assemble_a_d(omega: f64, med: &Medium, geo: &Geometry) -> Result<FourierBlockMatrix> {
    assemble_free_operator(omega, med, geo.radius, geo.n_order)
}

/// Free-space operator A_{D_d} of the resized bubble.
pub fn assemble_a_dd(omega: f64, med: &Medium, geo: &Geometry) -> Result<FourierBlockMatrix> {
    assemble_free_operator(omega, med, geo.radius_defect(), geo.n_order)
}

fn assemble_free_operator(
    omega: f64,
    med: &Medium,
    radius: f64,
    n_order: usize,
) -> Result<FourierBlockMatrix> {
    if !(omega > 0.0) {
        return Err(Error::SingularArgument);
    }
    let n_ord = n_order as i32;
    let kb = med.k_b(omega);
    let kw = med.k_w(omega);
    let tb = DiskFunctions::tabulate(kb, radius, n_ord)?;
    let tw = DiskFunctions::tabulate(kw, radius, n_ord)?;
    let c = prefactor(radius);
    let delta = med.delta();
    let mut a = FourierBlockMatrix::zeros(n_order, true);
    for n in -n_ord..=n_ord {
        a.set(0, n, 0, n, c * tb.j(n) * tb.h(n));
        a.set(0, n, 1, n, -c * tw.j(n) * tw.h(n));
        a.set(1, n, 0, n, c * kb * tb.jp(n) * tb.h(n));
        a.set(1, n, 1, n, -c * delta * kw * tw.j(n) * tw.hp(n));
    }
    Ok(a)
}

/// Diagonal entries of the density-transfer operator P1 per order:
/// (R/R_d) H_n(k_b R)/H_n(k_b R_d) on the phi block and
/// (R/R_d) J_n(k_w R)/J_n(k_w R_d) on the psi block.
pub fn transfer_p1(
    omega: f64,
    med: &Medium,
    geo: &Geometry,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let n_ord = geo.n_order as i32;
    let rd = geo.radius_defect();
    let ratio = geo.radius / rd;
    let tb_r = DiskFunctions::tabulate(med.k_b(omega), geo.radius, n_ord)?;
    let tb_d = DiskFunctions::tabulate(med.k_b(omega), rd, n_ord)?;
    let tw_r = DiskFunctions::tabulate(med.k_w(omega), geo.radius, n_ord)?;
    let tw_d = DiskFunctions::tabulate(med.k_w(omega), rd, n_ord)?;
    let mut phi = Vec::new();
    let mut psi = Vec::new();
    for n in -n_ord..=n_ord {
        guard_ratio(tb_r.h(n), tb_d.h(n), n)?;
        guard_ratio(tw_r.j(n), tw_d.j(n), n)?;
        phi.push(ratio * tb_r.h(n) / tb_d.h(n));
        psi.push(ratio * tw_r.j(n) / tw_d.j(n));
    }
    Ok((phi, psi))
}

/// Diagonal entries of the trace-transfer operator P2 per order:
/// J_n(k_w R_d)/J_n(k_w R) and J_n'(k_w R_d)/J_n'(k_w R).
pub fn transfer_p2(
    omega: f64,
    med: &Medium,
    geo: &Geometry,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let n_ord = geo.n_order as i32;
    let rd = geo.radius_defect();
    let tw_r = DiskFunctions::tabulate(med.k_w(omega), geo.radius, n_ord)?;
    let tw_d = DiskFunctions::tabulate(med.k_w(omega), rd, n_ord)?;
    let mut val = Vec::new();
    let mut deriv = Vec::new();
    for n in -n_ord..=n_ord {
        guard_ratio(tw_d.j(n), tw_r.j(n), n)?;
        guard_ratio(tw_d.jp(n), tw_r.jp(n), n)?;
        val.push(tw_d.j(n) / tw_r.j(n));
        deriv.push(tw_d.jp(n) / tw_r.jp(n));
    }
    Ok((val, deriv))
}

/// A denominator is resonant when the transfer ratio blows past 1e12; at the
/// small arguments of this regime both numerator and denominator are tiny
/// but their ratio stays O(1), so the guard compares against the numerator
/// rather than an absolute floor.
fn guard_ratio(num: Complex64, den: Complex64, order: i32) -> Result<()> {
    if den.norm() < 1e-12 * num.norm() {
        return Err(Error::ResonantDenominator { order });
    }
    Ok(())
}

/// Defect operator A_D^eps in closed form (input densities on the original
/// boundary, traces matched on the resized one).
pub fn assemble_a_d_eps(omega: f64, med: &Medium, geo: &Geometry) -> Result<FourierBlockMatrix> {
    if !(omega > 0.0) {
        return Err(Error::SingularArgument);
    }
    let n_ord = geo.n_order as i32;
    let rd = geo.radius_defect();
    let kb = med.k_b(omega);
    let kw = med.k_w(omega);
    let tb_r = DiskFunctions::tabulate(kb, geo.radius, n_ord)?;
    let tb_d = DiskFunctions::tabulate(kb, rd, n_ord)?;
    let tw_r = DiskFunctions::tabulate(kw, geo.radius, n_ord)?;
    let tw_d = DiskFunctions::tabulate(kw, rd, n_ord)?;
    let c = prefactor(geo.radius);
    let delta = med.delta();
    let mut a = FourierBlockMatrix::zeros(geo.n_order, true);
    for n in -n_ord..=n_ord {
        guard_ratio(tw_r.j(n), tw_d.j(n), n)?;
        guard_ratio(tw_r.jp(n), tw_d.jp(n), n)?;
        let rj = tw_r.j(n) / tw_d.j(n);
        let rjp = tw_r.jp(n) / tw_d.jp(n);
        a.set(0, n, 0, n, c * tb_d.j(n) * tb_r.h(n) * rj);
        a.set(0, n, 1, n, -c * tw_r.j(n) * tw_d.h(n) * rj);
        a.set(1, n, 0, n, c * kb * tb_d.jp(n) * tb_r.h(n) * rjp);
        a.set(1, n, 1, n, -c * delta * kw * tw_r.j(n) * tw_d.hp(n) * rjp);
    }
    Ok(a)
}

/// A_D^eps assembled as P2^{-1} A_{D_d} P1; reference route for the closed
/// form above.
pub fn assemble_a_d_eps_via_transfer(
    omega: f64,
    med: &Medium,
    geo: &Geometry,
) -> Result<FourierBlockMatrix> {
    let add = assemble_a_dd(omega, med, geo)?;
    let (p1_phi, p1_psi) = transfer_p1(omega, med, geo)?;
    let (p2_val, p2_deriv) = transfer_p2(omega, med, geo)?;
    let n_ord = geo.n_order as i32;
    let mut a = FourierBlockMatrix::zeros(geo.n_order, true);
    for n in -n_ord..=n_ord {
        let i = (n + n_ord) as usize;
        // row scaling by P2^{-1}, column scaling by P1, per order
        a.set(0, n, 0, n, add.entry(0, n, 0, n) / p2_val[i] * p1_phi[i]);
        a.set(0, n, 1, n, add.entry(0, n, 1, n) / p2_val[i] * p1_psi[i]);
        a.set(1, n, 0, n, add.entry(1, n, 0, n) / p2_deriv[i] * p1_phi[i]);
        a.set(1, n, 1, n, add.entry(1, n, 1, n) / p2_deriv[i] * p1_psi[i]);
    }
    Ok(a)
}

/// Static (k -> 0) matrix of S_D^{alpha,0}, obtained by Richardson
/// extrapolation in k^2; the operator is analytic in k^2 for alpha != 0, so
/// three geometrically spaced wavenumbers give an O(k^6) limit. The base
/// wavenumber shrinks near the Brillouin-zone corners where the nearest
/// empty-lattice scale |alpha| is small.
pub fn static_s_alpha_matrix(
    provider: &LatticeSumProvider,
    alpha: [f64; 2],
    geo: &Geometry,
) -> Result<DMatrix<Complex64>> {
    check_alpha(alpha)?;
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut dmin = f64::INFINITY;
    for corner in [[0.0, 0.0], [two_pi, 0.0], [0.0, two_pi], [two_pi, two_pi]] {
        let d = ((alpha[0] - corner[0]).powi(2) + (alpha[1] - corner[1]).powi(2)).sqrt();
        dmin = dmin.min(d);
    }
    let base = (dmin / 10.0).min(1e-2);
    let ks = [base, base / 2.0, base / 4.0];
    let mats = [
        s_alpha_matrix(provider, ks[0], alpha, geo)?,
        s_alpha_matrix(provider, ks[1], alpha, geo)?,
        s_alpha_matrix(provider, ks[2], alpha, geo)?,
    ];
    let xs = [ks[0] * ks[0], ks[1] * ks[1], ks[2] * ks[2]];
    // Neville tableau on k^2 toward 0
    let m01 = neville(&mats[0], &mats[1], xs[0], xs[1]);
    let m12 = neville(&mats[1], &mats[2], xs[1], xs[2]);
    Ok(neville(&m01, &m12, xs[0], xs[2]))
}

fn neville(
    a: &DMatrix<Complex64>,
    b: &DMatrix<Complex64>,
    x0: f64,
    x1: f64,
) -> DMatrix<Complex64> {
    // value at x = 0 of the line through (x0, a), (x1, b)
    let w0 = x1 / (x1 - x0);
    let w1 = -x0 / (x1 - x0);
    a * Complex64::new(w0, 0.0) + b * Complex64::new(w1, 0.0)
}

/// Static density psi_alpha = (S_D^{alpha,0})^{-1} [chi_{dD}] as Fourier
/// coefficients.
pub fn static_psi(
    provider: &LatticeSumProvider,
    alpha: [f64; 2],
    geo: &Geometry,
) -> Result<Vec<Complex64>> {
    let s0 = static_s_alpha_matrix(provider, alpha, geo)?;
    let bs = geo.block_size();
    let mut rhs = DMatrix::zeros(bs, 1);
    rhs[(geo.n_order, 0)] = Complex64::new(1.0, 0.0);
    let lu = s0.lu();
    let sol = lu
        .solve(&rhs)
        .ok_or_else(|| Error::SingularMatrix("static single-layer solve".into()))?;
    Ok(sol.column(0).iter().copied().collect())
}

/// Quasi-periodic capacitance and the norm of its defining density.
#[derive(Debug, Clone)]
pub struct Capacitance {
    /// Cap_{D,alpha} = -<psi_alpha, chi_{dD}>, a positive real.
    pub cap: f64,
    /// ||psi_alpha||^2 over the boundary.
    pub psi_norm_sq: f64,
    /// Fourier coefficients of psi_alpha.
    pub psi: Vec<Complex64>,
}

pub fn quasiperiodic_capacitance(
    provider: &LatticeSumProvider,
    alpha: [f64; 2],
    geo: &Geometry,
) -> Result<Capacitance> {
    let psi = static_psi(provider, alpha, geo)?;
    let two_pi_r = 2.0 * std::f64::consts::PI * geo.radius;
    let pairing = two_pi_r * psi[geo.n_order];
    if pairing.im.abs() > 1e-6 * pairing.norm().max(1e-30) {
        return Err(Error::SingularMatrix(format!(
            "capacitance pairing has a large imaginary part: {pairing}"
        )));
    }
    let cap = -pairing.re;
    if !(cap > 0.0) {
        return Err(Error::SingularMatrix(format!(
            "capacitance must be positive, got {cap}"
        )));
    }
    let psi_norm_sq = two_pi_r * psi.iter().map(|z| z.norm_sqr()).sum::<f64>();
    Ok(Capacitance {
        cap,
        psi_norm_sq,
        psi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latsum::LatticeSumProvider;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    const ALPHA_STAR: [f64; 2] = [PI, PI];

    fn setup() -> (LatticeSumProvider, Medium) {
        (LatticeSumProvider::default(), Medium::water_air())
    }

    #[test]
    fn medium_defaults() {
        let m = Medium::water_air();
        assert_relative_eq!(m.delta(), 2e-4);
        assert_relative_eq!(m.v_w(), 1.0);
        assert_relative_eq!(m.v_b(), 1.0);
        assert_relative_eq!(m.tau(), 1.0);
        assert_relative_eq!(m.k_w(0.3), 0.3);
    }

    #[test]
    fn medium_validation() {
        assert!(Medium::new(1.0, 1.0, 5000.0, 5000.0).is_err()); // delta >= 1
        assert!(Medium::new(-1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn geometry_validation() {
        assert!(Geometry::new(0.55, 0.0, 7).is_err());
        assert!(Geometry::new(0.45, 0.1, 7).is_err()); // R + eps >= 1/2
        assert!(Geometry::new(0.05, -0.06, 7).is_err()); // R + eps <= 0
        let g = Geometry::new(0.05, -0.0015, 7).unwrap();
        assert_relative_eq!(g.radius_defect(), 0.0485);
        assert_eq!(g.dim(), 30);
    }

    #[test]
    fn a_d_is_block_diagonal_and_deterministic() {
        let (_, med) = setup();
        let geo = Geometry::unperturbed(0.05, 7).unwrap();
        let a = assemble_a_d(0.2591, &med, &geo).unwrap();
        assert!(a.diagonal_in_order);
        for m in -7..=7i32 {
            for n in -7..=7i32 {
                if m != n {
                    for bi in 0..2 {
                        for bj in 0..2 {
                            assert_eq!(
                                a.entry(bi, m, bj, n),
                                Complex64::new(0.0, 0.0),
                                "off-diagonal ({bi},{m},{bj},{n}) not exactly zero"
                            );
                        }
                    }
                }
            }
        }
        let b = assemble_a_d(0.2591, &med, &geo).unwrap();
        assert_eq!(a.mat, b.mat);
    }

    #[test]
    fn a_d_small_omega_log_entry() {
        // (1,1) entry of the n = 0 block approaches
        // R (ln(omega R / 2) + gamma) - i pi R / 2, i.e. R ln(omega) leading
        // behaviour, with O(omega^2 ln omega) remainder
        let (_, med) = setup();
        let geo = Geometry::unperturbed(0.05, 3).unwrap();
        let omega = 1e-3;
        let a = assemble_a_d(omega, &med, &geo).unwrap();
        let v = a.entry(0, 0, 0, 0);
        let r = geo.radius;
        let expect = Complex64::new(
            r * ((omega * r / 2.0).ln() + specfun::EULER_GAMMA),
            -PI * r / 2.0,
        );
        assert!(
            (v - expect).norm() < 1e-8,
            "small-omega entry {v} vs {expect}"
        );
    }

    #[test]
    fn a_d_eps_closed_form_matches_transfer_route() {
        let (_, med) = setup();
        for &(r, eps) in &[
            (0.05, -0.0015),
            (0.05, 0.0015),
            (0.45, 0.0135),
            (0.45, -0.0135),
            (0.3, 0.02),
        ] {
            let geo = Geometry::new(r, eps, 7).unwrap();
            for &omega in &[0.11, 0.2591, 0.4] {
                let closed = assemble_a_d_eps(omega, &med, &geo).unwrap();
                let via = assemble_a_d_eps_via_transfer(omega, &med, &geo).unwrap();
                let diff = (&closed.mat - &via.mat).norm();
                assert!(
                    diff < 1e-12,
                    "routes differ by {diff:.3e} at R={r}, eps={eps}, omega={omega}"
                );
            }
        }
    }

    #[test]
    fn a_d_eps_reduces_to_a_d_without_perturbation() {
        let (_, med) = setup();
        let geo = Geometry::new(0.2, 0.0, 5).unwrap();
        let a = assemble_a_d(0.3, &med, &geo).unwrap();
        let b = assemble_a_d_eps(0.3, &med, &geo).unwrap();
        assert_eq!(a.mat, b.mat);
    }

    #[test]
    fn defect_difference_matrix_asymptotics() {
        // small-omega behaviour of (A_D^eps - A_D) on the n = 0 block
        let (_, med) = setup();
        let geo = Geometry::new(0.05, -0.0015, 3).unwrap();
        let omega = 1e-6;
        let a = assemble_a_d(omega, &med, &geo).unwrap();
        let ae = assemble_a_d_eps(omega, &med, &geo).unwrap();
        // (1,2): -eps + O(eps^2 + omega ln omega)
        let d12 = ae.entry(0, 0, 1, 0) - a.entry(0, 0, 1, 0);
        assert!(
            (d12 - Complex64::new(-geo.eps, 0.0)).norm() < 3e-5,
            "(1,2) defect entry {d12} vs -eps = {}",
            -geo.eps
        );
        // (2,2): 2 delta eps / R + O(delta eps + delta omega^2 ln omega)
        let d22 = ae.entry(1, 0, 1, 0) - a.entry(1, 0, 1, 0);
        let lead = 2.0 * med.delta() * geo.eps / geo.radius;
        assert!(
            (d22 - Complex64::new(lead, 0.0)).norm() < 0.05 * lead.abs(),
            "(2,2) defect entry {d22} vs {lead}"
        );
        // column 1 of the difference vanishes identically
        let d11 = ae.entry(0, 0, 0, 0) - a.entry(0, 0, 0, 0);
        let d21 = ae.entry(1, 0, 0, 0) - a.entry(1, 0, 0, 0);
        assert!(d11.norm() < 1e-15 && d21.norm() < 1e-15);
    }

    #[test]
    fn jump_relation_across_the_boundary() {
        // exterior minus interior normal derivative is the identity
        let (p, _) = setup();
        let geo = Geometry::unperturbed(0.23, 6).unwrap();
        let ext = s_tilde_alpha_matrix(&p, 0.9, [1.2, 2.0], &geo, Side::Exterior).unwrap();
        let int = s_tilde_alpha_matrix(&p, 0.9, [1.2, 2.0], &geo, Side::Interior).unwrap();
        let diff = ext - int;
        for i in 0..geo.block_size() {
            for j in 0..geo.block_size() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (diff[(i, j)] - Complex64::new(expect, 0.0)).norm() < 1e-10,
                    "jump relation at ({i},{j}): {}",
                    diff[(i, j)]
                );
            }
        }
    }

    #[test]
    fn a_alpha_couplings_vanish_at_corner_point() {
        let (p, med) = setup();
        let geo = Geometry::unperturbed(0.05, 7).unwrap();
        let a = assemble_a_alpha(&p, 0.2, ALPHA_STAR, &med, &geo).unwrap();
        assert!(!a.diagonal_in_order);
        for m in -7..=7i32 {
            for n in -7..=7i32 {
                if (n - m).rem_euclid(4) != 0 {
                    assert_eq!(
                        a.entry(0, m, 1, n),
                        Complex64::new(0.0, 0.0),
                        "coupling ({m},{n}) survived at the corner point"
                    );
                }
            }
        }
    }

    #[test]
    fn a_alpha_rejects_gamma_point() {
        let (p, med) = setup();
        let geo = Geometry::unperturbed(0.05, 3).unwrap();
        assert!(matches!(
            assemble_a_alpha(&p, 0.2, [0.0, 0.0], &med, &geo),
            Err(Error::GammaPoint)
        ));
    }

    #[test]
    fn capacitance_dilute_and_growth() {
        let (p, _) = setup();
        // dilute closed form -2 pi / ln R with O(1/ln R) relative remainder
        let geo = Geometry::unperturbed(0.05, 7).unwrap();
        let c = quasiperiodic_capacitance(&p, ALPHA_STAR, &geo).unwrap();
        let dilute = -2.0 * PI / 0.05_f64.ln();
        assert!(
            (c.cap - dilute).abs() < 0.30 * dilute,
            "capacitance {} vs dilute {}",
            c.cap,
            dilute
        );
        // monotone growth toward the touching limit R -> 1/2
        let caps: Vec<f64> = [0.25, 0.35, 0.45]
            .iter()
            .map(|&r| {
                let g = Geometry::unperturbed(r, 7).unwrap();
                quasiperiodic_capacitance(&p, ALPHA_STAR, &g).unwrap().cap
            })
            .collect();
        assert!(caps[0] < caps[1] && caps[1] < caps[2], "{caps:?}");
    }

    #[test]
    fn capacitance_pairing_is_real_negative() {
        let (p, _) = setup();
        let geo = Geometry::unperturbed(0.3, 7).unwrap();
        let psi = static_psi(&p, ALPHA_STAR, &geo).unwrap();
        let pairing = 2.0 * PI * geo.radius * psi[geo.n_order];
        assert!(pairing.re < 0.0);
        assert!(pairing.im.abs() < 1e-8 * pairing.re.abs());
    }

    #[test]
    fn capacitance_cauchy_schwarz_bound() {
        let (p, _) = setup();
        for &r in &[0.05, 0.2, 0.35, 0.45] {
            let geo = Geometry::unperturbed(r, 7).unwrap();
            let c = quasiperiodic_capacitance(&p, ALPHA_STAR, &geo).unwrap();
            let bound = c.cap * c.cap / (2.0 * PI * r);
            assert!(
                c.psi_norm_sq >= bound * (1.0 - 1e-10),
                "Cauchy-Schwarz violated at R={r}: {} < {bound}",
                c.psi_norm_sq
            );
        }
    }

    #[test]
    fn resonant_denominator_not_triggered_in_regime() {
        // high-order Bessel derivatives are astronomically small here, yet
        // the ratio guard must not fire (the ratios are O(1))
        let (_, med) = setup();
        let geo = Geometry::new(0.05, -0.0015, 7).unwrap();
        assert!(assemble_a_d_eps(0.2592, &med, &geo).is_ok());
    }
}
