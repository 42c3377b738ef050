//! Spin-resolved Kohn-Sham reference solver on a uniform real-space grid.
//!
//! The mean-field counterpart to the correlated solver: electrons in the
//! same trap and soft-Coulomb interaction, treated in the local
//! spin-density approximation. Exchange uses the homogeneous-gas form and
//! correlation the Perdew-Zunger parametrisation, both in their standard
//! three-dimensional form applied pointwise to the one-dimensional density;
//! that pairing is the defining choice of this reference model, not an
//! approximation to be converged away.
//!
//! Discretisation: hard-wall box, three-point finite-difference kinetic
//! energy, trapezoid-free uniform quadrature (plain Riemann sums, matching
//! the grid normalisation of the orbitals). The Kohn-Sham channels are
//! solved by Sturm-count bisection plus inverse iteration on the
//! tridiagonal Hamiltonian, so each self-consistency step costs O(grid²)
//! for the Hartree potential and O(grid) per occupied orbital.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::system::{Confinement, SystemSpec};

/// Uniform grid of `n` points spaced `h`, centered on the origin:
/// x_i = (i - (n-1)/2)·h.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid1D {
    pub n: usize,
    pub h: f64,
}

impl Grid1D {
    /// The reference resolution used throughout: 400 points at spacing 0.1,
    /// spanning ±19.95.
    pub fn standard() -> Self {
        Grid1D { n: 400, h: 0.1 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::Usage(format!("grid needs at least 3 points, got {}", self.n)));
        }
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(Error::Usage(format!("grid spacing must be positive, got {}", self.h)));
        }
        Ok(())
    }

    pub fn x(&self, i: usize) -> f64 {
        (i as f64 - (self.n as f64 - 1.0) / 2.0) * self.h
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }
}

/// Self-consistency controls: linear density mixing, convergence threshold
/// on the maximum density change per point, and an iteration ceiling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScfOptions {
    pub mix: f64,
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for ScfOptions {
    fn default() -> Self {
        ScfOptions { mix: 0.3, tol: 1e-8, max_iterations: 4000 }
    }
}

/// Energy pieces of a converged run. `total` = band_sum - hartree + xc
/// - xc_potential_integral; equivalently total = kinetic + confinement
/// + hartree + xc.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DftEnergies {
    pub total: f64,
    pub band_sum: f64,
    pub kinetic: f64,
    pub confinement: f64,
    pub hartree: f64,
    pub exchange_correlation: f64,
    pub xc_potential_integral: f64,
}

/// Converged Kohn-Sham solution: spin densities on the grid, channel
/// eigenvalues, and the energy decomposition.
#[derive(Clone, Debug)]
pub struct KohnShamState {
    pub grid: Grid1D,
    pub rho_up: Vec<f64>,
    pub rho_dn: Vec<f64>,
    pub eig_up: Vec<f64>,
    pub eig_dn: Vec<f64>,
    pub energies: DftEnergies,
    pub iterations: usize,
}

/// densities below this are treated as vacuum by the functional
const RHO_FLOOR: f64 = 1e-20;

/// Perdew-Zunger correlation parameters for one polarisation regime.
struct PzParams {
    gamma: f64,
    beta1: f64,
    beta2: f64,
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

const PZ_UNPOLARIZED: PzParams = PzParams {
    gamma: -0.1423,
    beta1: 1.0529,
    beta2: 0.3334,
    a: 0.0311,
    b: -0.048,
    c: 0.0020,
    d: -0.0116,
};

const PZ_POLARIZED: PzParams = PzParams {
    gamma: -0.0843,
    beta1: 1.3981,
    beta2: 0.2611,
    a: 0.01555,
    b: -0.0269,
    c: 0.0007,
    d: -0.0048,
};

/// Correlation energy per electron and potential in one regime: the
/// Pade form for r_s ≥ 1, the logarithmic expansion below.
fn pz_ec_vc(rs: f64, p: &PzParams) -> (f64, f64) {
    if rs >= 1.0 {
        let sq = rs.sqrt();
        let den = 1.0 + p.beta1 * sq + p.beta2 * rs;
        let e = p.gamma / den;
        let v = e * (1.0 + 7.0 / 6.0 * p.beta1 * sq + 4.0 / 3.0 * p.beta2 * rs) / den;
        (e, v)
    } else {
        let ln = rs.ln();
        let e = p.a * ln + p.b + p.c * rs * ln + p.d * rs;
        let v = p.a * ln + (p.b - p.a / 3.0)
            + 2.0 / 3.0 * p.c * rs * ln
            + (2.0 * p.d - p.c) * rs / 3.0;
        (e, v)
    }
}

/// von Barth-Hedin interpolation weight between the polarisation regimes.
fn f_zeta(z: f64) -> f64 {
    ((1.0 + z).powf(4.0 / 3.0) + (1.0 - z).powf(4.0 / 3.0) - 2.0) / (2f64.powf(4.0 / 3.0) - 2.0)
}

fn df_zeta(z: f64) -> f64 {
    (4.0 / 3.0) * ((1.0 + z).powf(1.0 / 3.0) - (1.0 - z).powf(1.0 / 3.0))
        / (2f64.powf(4.0 / 3.0) - 2.0)
}

/// Pointwise local spin-density functional: exchange-correlation energy per
/// electron and the two spin potentials at one density pair. Vacuum points
/// (total density at or below the floor) return zeros.
pub fn xc_point(rho_u: f64, rho_d: f64) -> (f64, f64, f64) {
    let rho = rho_u + rho_d;
    if rho <= RHO_FLOOR {
        return (0.0, 0.0, 0.0);
    }
    let ax = -0.75 * (3.0 / std::f64::consts::PI).powf(1.0 / 3.0);
    let rho_s = rho.max(RHO_FLOOR);
    let ex = ax * ((2.0 * rho_u).powf(4.0 / 3.0) + (2.0 * rho_d).powf(4.0 / 3.0)) / (2.0 * rho_s);
    let vx_u = (4.0 / 3.0) * ax * (2.0 * rho_u).powf(1.0 / 3.0);
    let vx_d = (4.0 / 3.0) * ax * (2.0 * rho_d).powf(1.0 / 3.0);

    let rs = (3.0 / (4.0 * std::f64::consts::PI * rho_s)).powf(1.0 / 3.0);
    let z = ((rho_u - rho_d) / rho_s).clamp(-1.0, 1.0);
    let (ec_u, vc_u) = pz_ec_vc(rs, &PZ_UNPOLARIZED);
    let (ec_p, vc_p) = pz_ec_vc(rs, &PZ_POLARIZED);
    let f = f_zeta(z);
    let df = df_zeta(z);
    let ec = ec_u + f * (ec_p - ec_u);
    let vc_base = vc_u + f * (vc_p - vc_u);
    let vc_up = vc_base + (ec_p - ec_u) * df * (1.0 - z);
    let vc_dn = vc_base - (ec_p - ec_u) * df * (1.0 + z);
    (ex + ec, vx_u + vc_up, vx_d + vc_dn)
}

/// Mean-field repulsion of a grid density under the soft kernel
/// 1/√(Δx² + 1), by direct quadrature.
pub fn hartree_potential(grid: &Grid1D, rho: &[f64]) -> Vec<f64> {
    let xs = grid.points();
    let mut vh = vec![0.0; grid.n];
    for i in 0..grid.n {
        let mut acc = 0.0;
        for j in 0..grid.n {
            let dx = xs[i] - xs[j];
            acc += rho[j] / (dx * dx + 1.0).sqrt();
        }
        vh[i] = acc * grid.h;
    }
    vh
}

/// Number of eigenvalues of the symmetric tridiagonal matrix strictly
/// below `x`, by the standard LDLᵀ sign count.
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut d = diag[0] - x;
    if d < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        if d.abs() < 1e-300 {
            d = -1e-300;
        }
        d = (diag[i] - x) - off[i - 1] * off[i - 1] / d;
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Solves (T - λ)x = rhs in place for a symmetric tridiagonal T, by
/// Gaussian elimination with partial pivoting; row swaps introduce one
/// extra superdiagonal of fill-in. Near-singular pivots are floored, which
/// is exactly what inverse iteration wants: the solution explodes along
/// the eigenvector and is renormalised by the caller.
fn tridiag_shifted_solve(diag: &[f64], off: &[f64], lambda: f64, rhs: &mut [f64]) {
    let n = diag.len();
    let mut b: Vec<f64> = diag.iter().map(|&v| v - lambda).collect();
    let mut c = vec![0.0; n]; // first superdiagonal
    c[..n - 1].copy_from_slice(off);
    let mut d = vec![0.0; n]; // second superdiagonal fill-in
    for k in 0..n - 1 {
        // entering step k the fill-in d[k] is still zero: it is only ever
        // written by the swap branch of this very step
        let sub = off[k];
        if b[k].abs() >= sub.abs() {
            if b[k] == 0.0 {
                b[k] = 1e-300;
            }
            let m = sub / b[k];
            b[k + 1] -= m * c[k];
            rhs[k + 1] -= m * rhs[k];
        } else {
            // rows k and k+1 trade places before eliminating
            let old_b = b[k];
            let old_c = c[k];
            let row_k1_diag = b[k + 1];
            let row_k1_super = c[k + 1]; // zero when k+1 is the last row
            b[k] = sub;
            c[k] = row_k1_diag;
            d[k] = row_k1_super;
            let m = old_b / sub;
            b[k + 1] = old_c - m * row_k1_diag;
            c[k + 1] = -m * row_k1_super;
            rhs.swap(k, k + 1);
            rhs[k + 1] -= m * rhs[k];
        }
    }
    if b[n - 1] == 0.0 {
        b[n - 1] = 1e-300;
    }
    rhs[n - 1] /= b[n - 1];
    if n >= 2 {
        rhs[n - 2] = (rhs[n - 2] - c[n - 2] * rhs[n - 1]) / b[n - 2];
    }
    for k in (0..n.saturating_sub(2)).rev() {
        rhs[k] = (rhs[k] - c[k] * rhs[k + 1] - d[k] * rhs[k + 2]) / b[k];
    }
}

/// Lowest `nocc` eigenpairs of the symmetric tridiagonal matrix given by
/// `diag` and `off`, via Sturm bisection for the values and inverse
/// iteration for the vectors. Eigenvalues of an unreduced tridiagonal are
/// simple, so index-targeted bisection is well defined; vectors are
/// re-orthogonalised against earlier ones to stay clean when levels nearly
/// touch.
pub fn lowest_tridiag_eigenpairs(
    diag: &[f64],
    off: &[f64],
    nocc: usize,
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = diag.len();
    assert_eq!(off.len(), n.saturating_sub(1), "off-diagonal length mismatch");
    if nocc == 0 {
        return (Vec::new(), Vec::new());
    }
    // gershgorin bounds
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 }
            + if i < n - 1 { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let scale = hi.abs().max(lo.abs()).max(1.0);

    let mut values = Vec::with_capacity(nocc);
    for k in 0..nocc {
        let (mut a, mut b) = (lo, hi);
        for _ in 0..100 {
            let mid = 0.5 * (a + b);
            if sturm_count(diag, off, mid) >= k + 1 {
                b = mid;
            } else {
                a = mid;
            }
            if b - a <= 1e-15 * scale {
                break;
            }
        }
        values.push(0.5 * (a + b));
    }

    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(nocc);
    for (k, &lambda) in values.iter().enumerate() {
        // deterministic start with no special symmetry
        let mut v: Vec<f64> =
            (0..n).map(|i| (0.7 * (i as f64 + 1.0) * (k as f64 + 1.0)).sin() + 0.5).collect();
        for _ in 0..5 {
            // keep the iterate out of the span of earlier eigenvectors
            for prev in &vectors {
                let dot: f64 = v.iter().zip(prev).map(|(&x, &y)| x * y).sum();
                for (x, &y) in v.iter_mut().zip(prev) {
                    *x -= dot * y;
                }
            }
            // tiny shift keeps the solve from landing exactly on the pole
            tridiag_shifted_solve(diag, off, lambda + 1e-14 * scale, &mut v);
            let norm: f64 = v.iter().map(|&x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                for x in v.iter_mut() {
                    *x /= norm;
                }
            }
        }
        for prev in &vectors {
            let dot: f64 = v.iter().zip(prev).map(|(&x, &y)| x * y).sum();
            for (x, &y) in v.iter_mut().zip(prev) {
                *x -= dot * y;
            }
        }
        let norm: f64 = v.iter().map(|&x| x * x).sum::<f64>().sqrt();
        for x in v.iter_mut() {
            *x /= norm;
        }
        vectors.push(v);
    }
    (values, vectors)
}

/// Lowest `nocc` orbitals of one Kohn-Sham channel on the grid: three-point
/// kinetic stencil with hard walls, grid-normalised so Σφ²h = 1.
fn solve_channel(grid: &Grid1D, veff: &[f64], nocc: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    if nocc == 0 {
        return (Vec::new(), Vec::new());
    }
    let inv_h2 = 1.0 / (grid.h * grid.h);
    let diag: Vec<f64> = veff.iter().map(|&v| inv_h2 + v).collect();
    let off = vec![-0.5 * inv_h2; grid.n - 1];
    let (w, mut v) = lowest_tridiag_eigenpairs(&diag, &off, nocc);
    let s = grid.h.sqrt();
    for orb in v.iter_mut() {
        for x in orb.iter_mut() {
            *x /= s;
        }
    }
    (w, v)
}

fn confinement_potential(grid: &Grid1D, confinement: &Confinement) -> Vec<f64> {
    let omega = confinement.omega();
    let half_w2 = 0.5 * omega * omega;
    grid.points()
        .iter()
        .map(|&x| match confinement {
            Confinement::Quadratic { .. } => half_w2 * x * x,
            Confinement::Quartic { .. } => half_w2 * x * x * x * x,
        })
        .collect()
}

fn channel_density(grid: &Grid1D, orbitals: &[Vec<f64>]) -> Vec<f64> {
    let mut rho = vec![0.0; grid.n];
    for orb in orbitals {
        for (r, &p) in rho.iter_mut().zip(orb) {
            *r += p * p;
        }
    }
    rho
}

/// kinetic energy of grid-normalised orbitals under the same stencil as
/// the eigenproblem, hard walls implicit
fn stencil_kinetic(grid: &Grid1D, orbitals: &[Vec<f64>]) -> f64 {
    let n = grid.n;
    let inv_h2 = 1.0 / (grid.h * grid.h);
    let mut t = 0.0;
    for orb in orbitals {
        for i in 0..n {
            let left = if i > 0 { orb[i - 1] } else { 0.0 };
            let right = if i + 1 < n { orb[i + 1] } else { 0.0 };
            t += orb[i] * (-0.5 * inv_h2) * (left - 2.0 * orb[i] + right);
        }
    }
    t * grid.h
}

/// Self-consistent solution of the Kohn-Sham equations for the system on
/// the given grid. The first iteration solves the bare confinement and
/// seeds the density without mixing; subsequent iterations rebuild the
/// Hartree and exchange-correlation potentials from the mixed density and
/// linearly mix the new channel densities in. Convergence is the maximum
/// pointwise density change dropping below `opts.tol`; exhausting the
/// iteration budget is an error. Systems with the repulsion switched off
/// converge on the second pass and report the bare eigenvalue sum.
pub fn scf(system: &SystemSpec, grid: &Grid1D, opts: &ScfOptions) -> Result<KohnShamState> {
    system.validate()?;
    grid.validate()?;
    if system.cavity.is_some() {
        return Err(Error::Usage("the grid reference solver is purely electronic".into()));
    }
    if !(opts.mix > 0.0 && opts.mix <= 1.0) {
        return Err(Error::Usage(format!("mixing must lie in (0, 1], got {}", opts.mix)));
    }
    let n_up = system.n_up();
    let n_dn = system.n_down();
    let vconf = confinement_potential(grid, &system.confinement);
    let n = grid.n;

    let mut rho_u = vec![0.0; n];
    let mut rho_d = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;
    for it in 0..opts.max_iterations {
        let (vh, vxc_u, vxc_d) = if system.coulomb && it > 0 {
            let rho: Vec<f64> = rho_u.iter().zip(&rho_d).map(|(&u, &d)| u + d).collect();
            let vh = hartree_potential(grid, &rho);
            let mut vxc_u = vec![0.0; n];
            let mut vxc_d = vec![0.0; n];
            for i in 0..n {
                let (_, vu, vd) = xc_point(rho_u[i], rho_d[i]);
                vxc_u[i] = vu;
                vxc_d[i] = vd;
            }
            (vh, vxc_u, vxc_d)
        } else {
            (vec![0.0; n], vec![0.0; n], vec![0.0; n])
        };
        let veff_u: Vec<f64> =
            (0..n).map(|i| vconf[i] + vh[i] + vxc_u[i]).collect();
        let veff_d: Vec<f64> =
            (0..n).map(|i| vconf[i] + vh[i] + vxc_d[i]).collect();
        let (_, orb_u) = solve_channel(grid, &veff_u, n_up);
        let (_, orb_d) = solve_channel(grid, &veff_d, n_dn);
        let new_u = channel_density(grid, &orb_u);
        let new_d = channel_density(grid, &orb_d);
        iterations = it;
        if it == 0 {
            rho_u = new_u;
            rho_d = new_d;
            continue;
        }
        let mut delta: f64 = 0.0;
        for i in 0..n {
            delta = delta.max((new_u[i] - rho_u[i]).abs()).max((new_d[i] - rho_d[i]).abs());
        }
        for i in 0..n {
            rho_u[i] += opts.mix * (new_u[i] - rho_u[i]);
            rho_d[i] += opts.mix * (new_d[i] - rho_d[i]);
        }
        if delta < opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence(format!(
            "density residual still above {} after {} iterations",
            opts.tol, opts.max_iterations
        )));
    }

    // consistent energies at the mixed density
    let rho: Vec<f64> = rho_u.iter().zip(&rho_d).map(|(&u, &d)| u + d).collect();
    let (vh, exc, vxc_u, vxc_d) = if system.coulomb {
        let vh = hartree_potential(grid, &rho);
        let mut exc = vec![0.0; n];
        let mut vxc_u = vec![0.0; n];
        let mut vxc_d = vec![0.0; n];
        for i in 0..n {
            let (e, vu, vd) = xc_point(rho_u[i], rho_d[i]);
            exc[i] = e;
            vxc_u[i] = vu;
            vxc_d[i] = vd;
        }
        (vh, exc, vxc_u, vxc_d)
    } else {
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n])
    };
    let veff_u: Vec<f64> = (0..n).map(|i| vconf[i] + vh[i] + vxc_u[i]).collect();
    let veff_d: Vec<f64> = (0..n).map(|i| vconf[i] + vh[i] + vxc_d[i]).collect();
    let (eig_up, orb_u) = solve_channel(grid, &veff_u, n_up);
    let (eig_dn, orb_d) = solve_channel(grid, &veff_d, n_dn);
    let band_sum: f64 = eig_up.iter().chain(&eig_dn).sum();
    let h = grid.h;
    let e_h = 0.5 * vh.iter().zip(&rho).map(|(&v, &r)| v * r).sum::<f64>() * h;
    let e_xc = exc.iter().zip(&rho).map(|(&e, &r)| e * r).sum::<f64>() * h;
    let v_xc_int = (0..n).map(|i| vxc_u[i] * rho_u[i] + vxc_d[i] * rho_d[i]).sum::<f64>() * h;
    let total = band_sum - e_h + e_xc - v_xc_int;
    let kinetic = stencil_kinetic(grid, &orb_u) + stencil_kinetic(grid, &orb_d);
    let confinement = vconf.iter().zip(&rho).map(|(&v, &r)| v * r).sum::<f64>() * h;

    Ok(KohnShamState {
        grid: *grid,
        rho_up: rho_u,
        rho_dn: rho_d,
        eig_up,
        eig_dn,
        energies: DftEnergies {
            total,
            band_sum,
            kinetic,
            confinement,
            hartree: e_h,
            exchange_correlation: e_xc,
            xc_potential_integral: v_xc_int,
        },
        iterations,
    })
}
