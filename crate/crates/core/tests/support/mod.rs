//! Shared reference implementations for the integration suites.
//!
//! Everything here recomputes, by a slow independent route, quantities the
//! library obtains in closed form or through specialised algorithms: dense
//! tensor-grid quadrature for matrix elements, adaptive Simpson integration
//! for the softened interaction, a finite-difference separation solver for
//! two particles in a harmonic trap, a grid-based photon-number reference
//! for one dipole-coupled particle, and a Cholesky + Jacobi generalized
//! eigensolver. Tests freeze the fast paths against these.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use wigner1d_core::dft::lowest_tridiag_eigenpairs;
use wigner1d_core::ecg::quadform::QuadraticForm;
use wigner1d_core::ecg::GaussianBasisFunction;

/// Operators the tensor-grid oracle can integrate pointwise.
pub enum GridOp {
    /// Plain overlap of the two Gaussians.
    Overlap,
    /// -½ Σ_i ∂²/∂x_i², evaluated in the symmetric ∇·∇ form so only first
    /// derivatives of the (analytically differentiable) factors appear.
    Kinetic,
    /// Σ_i x_i^power.
    ConfinementSum { power: u32 },
    /// Σ_{i<j} 1/√((x_i-x_j)²+1).
    PairCoulomb,
    /// (wᵀx)^power.
    Moment { weight: Vec<f64>, power: u32 },
}

/// ⟨bra| op |ket⟩ by brute-force quadrature on a uniform tensor grid over
/// [-half_width, half_width]^n. The trapezoid rule converges spectrally for
/// integrands of Gaussian decay, so modest point counts reach near machine
/// accuracy provided the grid spacing resolves the narrowest factor and the
/// box contains the product's peak with room to spare.
pub fn grid_element(
    op: &GridOp,
    bra: &GaussianBasisFunction<f64>,
    ket: &GaussianBasisFunction<f64>,
    pts: usize,
    half_width: f64,
) -> f64 {
    let fb = bra.quadratic_form();
    let fk = ket.quadratic_form();
    let n = fb.n();
    assert_eq!(n, fk.n(), "mismatched particle counts");
    let h = 2.0 * half_width / (pts - 1) as f64;

    let mut idx = vec![0usize; n];
    let mut x = vec![0.0f64; n];
    let mut gb = vec![0.0f64; n];
    let mut gk = vec![0.0f64; n];
    let mut total = 0.0f64;
    let mut chunk = 0.0f64;
    loop {
        for d in 0..n {
            x[d] = -half_width + h * idx[d] as f64;
        }
        let (lb, lk) = (log_form(&fb, &x, &mut gb), log_form(&fk, &x, &mut gk));
        let weight = (lb + lk).exp();
        let factor = match op {
            GridOp::Overlap => 1.0,
            // ∫ ∇bra·∇ket / 2, with ∇ exp(q) = (b - Ax) exp(q)
            GridOp::Kinetic => {
                0.5 * gb.iter().zip(gk.iter()).map(|(a, b)| a * b).sum::<f64>()
            }
            GridOp::ConfinementSum { power } => {
                x.iter().map(|&v| v.powi(*power as i32)).sum::<f64>()
            }
            GridOp::PairCoulomb => {
                let mut acc = 0.0;
                for i in 0..n {
                    for j in (i + 1)..n {
                        let d = x[i] - x[j];
                        acc += 1.0 / (d * d + 1.0).sqrt();
                    }
                }
                acc
            }
            GridOp::Moment { weight, power } => {
                let w: f64 = weight.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
                w.powi(*power as i32)
            }
        };
        chunk += weight * factor;

        // advance the odometer; fold finished innermost sweeps into the
        // running total to keep round-off from long naive summation down
        let mut d = n;
        loop {
            if d == 0 {
                total += chunk;
                return total * h.powi(n as i32);
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < pts {
                break;
            }
            idx[d] = 0;
            if d == n - 1 {
                total += chunk;
                chunk = 0.0;
            }
        }
    }
}

/// ln g(x) together with the gradient of the exponent, g = exp(-½xᵀAx+bᵀx-c).
fn log_form(f: &QuadraticForm<f64>, x: &[f64], grad: &mut [f64]) -> f64 {
    let n = x.len();
    let mut quad = 0.0;
    let mut lin = 0.0;
    for i in 0..n {
        let mut ax = 0.0;
        for j in 0..n {
            ax += f.a[(i, j)] * x[j];
        }
        grad[i] = f.b[i] - ax;
        quad += x[i] * ax;
        lin += f.b[i] * x[i];
    }
    -0.5 * quad + lin - f.c
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 48)
}

/// E[1/√(ξ²+1)] for ξ ~ N(mu, sigma2), integrated directly in coordinate
/// space with adaptive Simpson. Independent of the rescaled finite-interval
/// route the library uses.
pub fn soft_coulomb_direct(mu: f64, sigma2: f64) -> f64 {
    let sigma = sigma2.sqrt();
    let norm = 1.0 / (2.0 * std::f64::consts::PI * sigma2).sqrt();
    let f = move |r: f64| {
        let d = r - mu;
        norm * (-0.5 * d * d / sigma2).exp() / (r * r + 1.0).sqrt()
    };
    // 40 sigma covers the Gaussian to far below double precision
    let lo = mu - 40.0 * sigma;
    let hi = mu + 40.0 * sigma;
    adaptive_simpson(&f, lo, hi, 1e-14)
}

/// Ground-state energy and its decomposition for two particles in a
/// harmonic trap with the softened interaction, from the separation into
/// centre-of-mass and relative motion. The relative problem is solved by
/// finite differences on a half-line grid; `odd_relative` selects the
/// parity of the relative wavefunction (false for the spatially symmetric
/// ground state, true for the spatially antisymmetric one).
pub struct ExactPair {
    pub energy: f64,
    pub kinetic: f64,
    pub coulomb: f64,
    pub confinement: f64,
}

pub fn exact_pair_by_separation(omega: f64, odd_relative: bool) -> ExactPair {
    let length = 40.0f64.max(30.0 / omega.sqrt());
    let n = 24_000usize;
    let h = length / n as f64;
    let inv_h2 = 1.0 / (h * h);

    // even parity lives on the midpoint grid with a mirror (Neumann)
    // condition at the origin; odd parity on the integer grid where the
    // Dirichlet zero at the origin is implicit
    let x: Vec<f64> = (0..n)
        .map(|i| if odd_relative { (i + 1) as f64 * h } else { (i as f64 + 0.5) * h })
        .collect();
    let potential: Vec<f64> = x
        .iter()
        .map(|&r| 0.25 * omega * omega * r * r + 1.0 / (r * r + 1.0).sqrt())
        .collect();
    let mut diag: Vec<f64> = potential.iter().map(|v| 2.0 * inv_h2 + v).collect();
    if !odd_relative {
        diag[0] -= inv_h2;
    }
    let off = vec![-inv_h2; n - 1];

    let (eig, vecs) = lowest_tridiag_eigenpairs(&diag, &off, 1);
    let e_rel = eig[0];
    let psi = &vecs[0];
    // half-line density: Σ ψ² h = ½ of the full-line norm, so expectation
    // values of even functions come out right with plain h weights
    let mut vcoul = 0.0;
    let mut vconf = 0.0;
    for (p, &r) in psi.iter().zip(x.iter()) {
        let w = p * p;
        vcoul += w / (r * r + 1.0).sqrt();
        vconf += w * 0.25 * omega * omega * r * r;
    }
    let t_rel = e_rel - vcoul - vconf;

    // centre of mass is an exact oscillator: E = ω/2 split evenly between
    // kinetic and potential
    ExactPair {
        energy: e_rel + 0.5 * omega,
        kinetic: t_rel + 0.25 * omega,
        coulomb: vcoul,
        confinement: vconf + 0.25 * omega,
    }
}

/// Photon-number distribution of the exact ground state of one harmonically
/// trapped particle bilinearly coupled to a single cavity mode, via the
/// Gaussian ground state of the quadratic Hamiltonian on a coordinate grid.
///
/// The ground state is exp(-½ ξᵀGξ) with G the matrix square root of the
/// stiffness matrix. Tracing out the particle coordinate analytically leaves
/// a Gaussian kernel in the photon quadrature, which is diagonalised against
/// oscillator eigenfunctions by direct summation.
pub fn exact_photon_distribution(
    omega: f64,
    omega_p: f64,
    lambda: f64,
    nmax: usize,
    pts: usize,
) -> Vec<f64> {
    // stiffness [[ω²+λ², λω_p], [λω_p, ω_p²]]; 2x2 principal square root
    let m00 = omega * omega + lambda * lambda;
    let m01 = lambda * omega_p;
    let m11 = omega_p * omega_p;
    let det = (m00 * m11 - m01 * m01).max(0.0);
    let s = det.sqrt();
    let t = (m00 + m11 + 2.0 * s).sqrt();
    let (g00, g01, g11) = ((m00 + s) / t, m01 / t, (m11 + s) / t);

    // covariance of the state is G⁻¹
    let gdet = g00 * g11 - g01 * g01;
    let sig_p = (g00 / gdet).sqrt();

    // kernel after integrating out the particle coordinate:
    // ρ(p,q) ∝ exp(-a(p²+q²) + 2b pq)
    let a = 0.5 * g11 - 0.25 * g01 * g01 / g00;
    let b = 0.25 * g01 * g01 / g00;

    let half = 12.0 * sig_p.max(1.0 / omega_p.sqrt());
    let hp = 2.0 * half / (pts - 1) as f64;
    let p: Vec<f64> = (0..pts).map(|i| -half + hp * i as f64).collect();

    let mut rho = vec![0.0f64; pts * pts];
    for i in 0..pts {
        for j in 0..pts {
            rho[i * pts + j] = (-a * (p[i] * p[i] + p[j] * p[j]) + 2.0 * b * p[i] * p[j]).exp();
        }
    }
    let trace: f64 = (0..pts).map(|i| rho[i * pts + i]).sum::<f64>() * hp;
    for v in rho.iter_mut() {
        *v /= trace;
    }

    // oscillator eigenfunctions by upward recursion in z = √ω_p · p
    let z: Vec<f64> = p.iter().map(|&v| omega_p.sqrt() * v).collect();
    let norm0 = (omega_p / std::f64::consts::PI).powf(0.25);
    let mut prev: Vec<f64> = z.iter().map(|&v| norm0 * (-0.5 * v * v).exp()).collect();
    let mut curr: Vec<f64> = z.iter().zip(prev.iter()).map(|(&v, &f)| 2.0f64.sqrt() * v * f).collect();

    let mut out = Vec::with_capacity(nmax + 1);
    let mut scratch = vec![0.0f64; pts];
    for level in 0..=nmax {
        let phi = if level == 0 { &prev } else { &curr };
        for i in 0..pts {
            let row = &rho[i * pts..(i + 1) * pts];
            scratch[i] = row.iter().zip(phi.iter()).map(|(r, f)| r * f).sum();
        }
        let pn: f64 = phi.iter().zip(scratch.iter()).map(|(f, s)| f * s).sum::<f64>() * hp * hp;
        out.push(pn);
        if level >= 1 {
            let nf = (level + 1) as f64;
            let next: Vec<f64> = (0..pts)
                .map(|i| (2.0 / nf).sqrt() * z[i] * curr[i] - ((nf - 1.0) / nf).sqrt() * prev[i])
                .collect();
            prev = std::mem::take(&mut curr);
            curr = next;
        }
    }
    out
}

/// All eigenvalues of the symmetric pencil (H, S), sorted ascending, by an
/// explicit Cholesky reduction followed by the cyclic Jacobi method. Slow
/// but entirely elementary; used to pin the production solver.
pub fn generalized_eigenvalues_reference(h: &DMatrix<f64>, s: &DMatrix<f64>) -> Vec<f64> {
    let n = h.nrows();
    let l = cholesky_lower(s).expect("reference pencil must be positive definite");
    // B = L⁻¹ H L⁻ᵀ via two rounds of forward substitution
    let mut w = h.clone();
    for col in 0..n {
        forward_substitute(&l, &mut w, col);
    }
    let mut wt = w.transpose();
    for col in 0..n {
        forward_substitute(&l, &mut wt, col);
    }
    jacobi_eigenvalues(wt)
}

fn cholesky_lower(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let mut l = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 0.0 {
            return None;
        }
        l[(j, j)] = d.sqrt();
        for i in (j + 1)..n {
            let mut v = a[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / l[(j, j)];
        }
    }
    Some(l)
}

/// Overwrites column `col` of `m` with L⁻¹ m[:, col].
fn forward_substitute(l: &DMatrix<f64>, m: &mut DMatrix<f64>, col: usize) {
    let n = l.nrows();
    for i in 0..n {
        let mut v = m[(i, col)];
        for k in 0..i {
            v -= l[(i, k)] * m[(k, col)];
        }
        m[(i, col)] = v / l[(i, i)];
    }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(mut a: DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    if n == 1 {
        return vec![a[(0, 0)]];
    }
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[(p, q)].abs());
            }
        }
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let tau = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eigs
}

/// Closed-form overlap of two unnormalised one-particle Gaussians
/// exp(-β(x-s)²).
pub fn single_particle_overlap(beta_b: f64, s_b: f64, beta_k: f64, s_k: f64) -> f64 {
    let p = beta_b + beta_k;
    let d = s_b - s_k;
    (std::f64::consts::PI / p).sqrt() * (-beta_b * beta_k * d * d / p).exp()
}

/// Convenience constructor for test Gaussians.
pub fn gaussian(
    n: usize,
    alpha_pairs: &[(usize, usize, f64)],
    beta: &[f64],
    shift: &[f64],
) -> GaussianBasisFunction<f64> {
    let mut alpha = DMatrix::zeros(n, n);
    for &(i, j, v) in alpha_pairs {
        alpha[(i, j)] = v;
        alpha[(j, i)] = v;
    }
    GaussianBasisFunction::new(
        alpha,
        DVector::from_row_slice(beta),
        DVector::from_row_slice(shift),
    )
    .unwrap()
}
