//! Stochastic growth and refinement of correlated-Gaussian bases.
//!
//! The basis is built one term at a time: each step draws a batch of random
//! candidates from fixed parameter ranges, scores every admissible one by
//! the ground eigenvalue of the enlarged generalized problem, and keeps the
//! best. Refinement revisits each slot cyclically with the same trial
//! competition, accepting only strict improvements. Both phases draw from a
//! single seeded stream, so runs are reproducible and resumable from a
//! checkpoint that records the stream position.
//!
//! Terms are (spatial Gaussian, photon number) pairs sharing one total-spin
//! function. All spatial matrix elements are antisymmetrised once per
//! unique Gaussian pair and cached ([`PairPrims`]); Hamiltonian and overlap
//! matrices for any term arrangement, photon blocks included, are assembled
//! from the cache with scalar coefficients only. Candidate admissibility is
//! strict: a candidate whose antisymmetrised norm nearly vanishes, whose
//! matrix elements fail to evaluate, or whose inclusion pushes any overlap
//! eigenvalue below the conditioning cutoff is discarded.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ecg::density::ManyBodyState;
use crate::ecg::elements::{
    gaussian_power_moment, permutation_weights, MergedPair, DEFAULT_QUADRATURE_TOL,
};
use crate::ecg::quadform::QuadraticForm;
use crate::ecg::spin::SpinFunction;
use crate::ecg::GaussianBasisFunction;
use crate::error::{Error, Result};
use crate::linalg::{solve_generalized_with_cutoff, OVERLAP_EIGENVALUE_CUTOFF};
use crate::system::SystemSpec;

type Gauss = GaussianBasisFunction<f64>;
type Form = QuadraticForm<f64>;

/// Knobs of the stochastic optimization. Serializable so runs can be
/// configured from files and reproduced exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    /// Hard ceiling on the number of basis terms.
    pub basis_max: usize,
    /// Candidates drawn per growth step and per refinement slot.
    pub candidates_per_step: usize,
    /// Cyclic replacement passes over the whole basis.
    pub refine_sweeps: usize,
    /// Seed of the candidate stream.
    pub seed: u64,
    /// Log-uniform range for pair couplings α.
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// Log-uniform range for one-body widths β.
    pub beta_min: f64,
    pub beta_max: f64,
    /// Half-width L of the uniform shift range; `None` derives
    /// max(5, 4/√ω) from the confinement.
    pub shift_halfwidth: Option<f64>,
    /// Stop growing early once the energy gain over the last
    /// `plateau_window` accepted terms falls below this.
    pub plateau_tol: Option<f64>,
    pub plateau_window: usize,
    /// Highest photon block candidates may target (0 = purely electronic).
    pub photon_cap: usize,
    /// Absolute tolerance of the pair-kernel quadrature.
    pub quad_tol: f64,
    /// Relative overlap-eigenvalue cutoff; a candidate must not push any
    /// direction below it.
    pub overlap_cutoff: f64,
    /// Minimum antisymmetrised self-overlap of a candidate, rejecting
    /// Pauli-suppressed or numerically void terms.
    pub min_self_overlap: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            basis_max: 120,
            candidates_per_step: 40,
            refine_sweeps: 5,
            seed: 0,
            alpha_min: 1e-3,
            alpha_max: 1e1,
            beta_min: 1e-3,
            beta_max: 1e1,
            shift_halfwidth: None,
            plateau_tol: None,
            plateau_window: 10,
            photon_cap: 0,
            quad_tol: DEFAULT_QUADRATURE_TOL,
            overlap_cutoff: OVERLAP_EIGENVALUE_CUTOFF,
            min_self_overlap: 1e-12,
        }
    }
}

/// Antisymmetrised raw matrix elements of one spatial pair: overlap `s`,
/// kinetic `t`, confinement moment sum `v` (Σᵢ⟨xᵢ^p⟩), pair repulsion `vc`,
/// dipole `x` = ⟨-Σᵢxᵢ⟩ and dipole square `x2` = ⟨(Σᵢxᵢ)²⟩. Entries not
/// needed by the system (repulsion off, no cavity) stay zero.
#[derive(Clone, Copy, Debug, Default)]
pub struct PairPrims {
    pub s: f64,
    pub t: f64,
    pub v: f64,
    pub vc: f64,
    pub x: f64,
    pub x2: f64,
}

/// One basis term: a reference into the unique-Gaussian table plus the
/// photon number of its block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BasisTerm {
    pub gaussian: usize,
    pub photon_n: usize,
}

struct GaussEntry {
    g: Gauss,
    form: Form,
    /// 1/√(antisymmetrised self-overlap); every matrix entry is scaled by
    /// the γ of both partners so diagonal overlaps are exactly one.
    gamma: f64,
}

/// Matrix elements of a candidate Gaussian against the current table,
/// computed once during scoring and reused on acceptance.
pub struct FreshRow {
    vs: Vec<PairPrims>,
    self_raw: PairPrims,
    gamma: f64,
}

#[derive(Clone, Copy)]
enum GaussRef {
    Id(usize),
    Fresh,
}

/// A set of basis terms with cached antisymmetrised elements, bound to one
/// system and one total-spin function.
pub struct BasisSet {
    system: SystemSpec,
    spin: SpinFunction,
    weights: Vec<(Vec<usize>, f64)>,
    conf_power: u32,
    half_omega_sq: f64,
    quad_tol: f64,
    gaussians: Vec<GaussEntry>,
    /// triangular cache: prims[i][j] for j ≤ i, raw (unscaled by γ)
    prims: Vec<Vec<PairPrims>>,
    terms: Vec<BasisTerm>,
}

impl BasisSet {
    /// Empty basis for a validated system.
    pub fn new(system: &SystemSpec, quad_tol: f64) -> Result<Self> {
        system.validate()?;
        let spin = SpinFunction::coupled(system.n_electrons, system.total_spin_x2)?;
        let weights = permutation_weights(&spin, &spin);
        let conf_power = match system.confinement {
            crate::system::Confinement::Quadratic { .. } => 2,
            crate::system::Confinement::Quartic { .. } => 4,
        };
        let omega = system.confinement.omega();
        Ok(BasisSet {
            system: system.clone(),
            spin,
            weights,
            conf_power,
            half_omega_sq: 0.5 * omega * omega,
            quad_tol,
            gaussians: Vec::new(),
            prims: Vec::new(),
            terms: Vec::new(),
        })
    }

    pub fn system(&self) -> &SystemSpec {
        &self.system
    }

    pub fn spin(&self) -> &SpinFunction {
        &self.spin
    }

    pub fn terms(&self) -> &[BasisTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn gaussian(&self, id: usize) -> &Gauss {
        &self.gaussians[id].g
    }

    pub fn gamma(&self, id: usize) -> f64 {
        self.gaussians[id].gamma
    }

    /// Highest photon number among current terms.
    pub fn max_photon(&self) -> usize {
        self.terms.iter().map(|t| t.photon_n).max().unwrap_or(0)
    }

    /// Indices of the terms in photon block n, in term order.
    pub fn block_slots(&self, n: usize) -> Vec<usize> {
        (0..self.terms.len()).filter(|&k| self.terms[k].photon_n == n).collect()
    }

    /// Antisymmetrised raw elements between two canonical forms:
    /// Σ_P sign(P)⟨χ|P|χ⟩ ⟨bra| Op |P ket⟩ for every cached operator.
    fn raw_pair(&self, bra: &Form, ket: &Form) -> Result<PairPrims> {
        let n = self.system.n_electrons;
        let coulomb = self.system.coulomb;
        let dipole = self.system.cavity.is_some();
        let mut p = PairPrims::default();
        for (perm, w) in &self.weights {
            let ket_p = ket.permuted(perm);
            let merged = MergedPair::merge(bra, &ket_p)?;
            let ov = merged.overlap();
            p.s += w * ov;
            p.t += w * merged.kinetic(bra, &ket_p);
            let mut conf = 0.0;
            for i in 0..n {
                let (mu, var) = merged.slot_stats(i);
                conf += gaussian_power_moment(mu, var, self.conf_power)?;
            }
            p.v += w * conf * ov;
            if coulomb {
                let mut rep = 0.0;
                for i in 0..n {
                    for j in (i + 1)..n {
                        rep += merged.pair_kernel(i, j, self.quad_tol)?;
                    }
                }
                p.vc += w * rep;
            }
            if dipole {
                let (tm, tv) = merged.total_coordinate_stats();
                p.x += w * (-tm) * ov;
                p.x2 += w * (tm * tm + tv) * ov;
            }
        }
        Ok(p)
    }

    /// Elements of a candidate against the whole table. `Ok(None)` means
    /// the candidate is inadmissible (vanishing antisymmetrised norm, or a
    /// pair too ill-conditioned or too hard to integrate); genuine usage
    /// errors still propagate.
    fn candidate_row(&self, g: &Gauss, min_self_overlap: f64) -> Result<Option<FreshRow>> {
        let form = g.quadratic_form();
        let self_raw = match self.raw_pair(&form, &form) {
            Ok(p) => p,
            Err(Error::IllConditionedPair) | Err(Error::QuadratureFailure(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        if !(self_raw.s > min_self_overlap) {
            return Ok(None);
        }
        let gamma = 1.0 / self_raw.s.sqrt();
        let mut vs = Vec::with_capacity(self.gaussians.len());
        for entry in &self.gaussians {
            match self.raw_pair(&entry.form, &form) {
                Ok(p) => vs.push(p),
                Err(Error::IllConditionedPair) | Err(Error::QuadratureFailure(_)) => {
                    return Ok(None)
                }
                Err(e) => return Err(e),
            }
        }
        Ok(Some(FreshRow { vs, self_raw, gamma }))
    }

    /// Installs a scored candidate's Gaussian and cached row; returns its id.
    fn push_gaussian(&mut self, g: Gauss, row: FreshRow) -> usize {
        let id = self.gaussians.len();
        let mut prow = row.vs;
        prow.push(row.self_raw);
        self.prims.push(prow);
        self.gaussians.push(GaussEntry { form: g.quadratic_form(), gamma: row.gamma, g });
        id
    }

    /// Adds a term referencing an existing Gaussian; photon-block copies of
    /// known spatial terms cost no new matrix elements.
    pub fn add_term(&mut self, gaussian: usize, photon_n: usize) -> Result<usize> {
        if gaussian >= self.gaussians.len() {
            return Err(Error::Usage(format!(
                "gaussian id {gaussian} out of range ({} stored)",
                self.gaussians.len()
            )));
        }
        if let Some(cavity) = &self.system.cavity {
            if photon_n > cavity.n_max {
                return Err(Error::Usage(format!(
                    "photon number {photon_n} exceeds the ladder ceiling {}",
                    cavity.n_max
                )));
            }
        } else if photon_n != 0 {
            return Err(Error::Usage("photon blocks need a cavity in the system".into()));
        }
        self.terms.push(BasisTerm { gaussian, photon_n });
        Ok(self.terms.len() - 1)
    }

    /// Drops Gaussians no longer referenced by any term, remapping ids.
    fn compact(&mut self) {
        let mut used = vec![false; self.gaussians.len()];
        for t in &self.terms {
            used[t.gaussian] = true;
        }
        if used.iter().all(|&u| u) {
            return;
        }
        let mut remap = vec![usize::MAX; self.gaussians.len()];
        let mut keep: Vec<usize> = Vec::new();
        for (old, &u) in used.iter().enumerate() {
            if u {
                remap[old] = keep.len();
                keep.push(old);
            }
        }
        let mut gaussians = Vec::with_capacity(keep.len());
        for (old, entry) in std::mem::take(&mut self.gaussians).into_iter().enumerate() {
            if used[old] {
                gaussians.push(entry);
            }
        }
        let old_prims = std::mem::take(&mut self.prims);
        let mut prims = Vec::with_capacity(keep.len());
        for (new_i, &old_i) in keep.iter().enumerate() {
            let mut row = Vec::with_capacity(new_i + 1);
            for &old_j in &keep[..=new_i] {
                let (a, b) = (old_i.max(old_j), old_i.min(old_j));
                row.push(old_prims[a][b]);
            }
            prims.push(row);
        }
        self.gaussians = gaussians;
        self.prims = prims;
        for t in &mut self.terms {
            t.gaussian = remap[t.gaussian];
        }
    }

    fn pair_lookup(&self, a: GaussRef, b: GaussRef, fresh: Option<&FreshRow>) -> (PairPrims, f64) {
        match (a, b) {
            (GaussRef::Id(i), GaussRef::Id(j)) => {
                let p = self.prims[i.max(j)][i.min(j)];
                (p, self.gaussians[i].gamma * self.gaussians[j].gamma)
            }
            (GaussRef::Id(i), GaussRef::Fresh) | (GaussRef::Fresh, GaussRef::Id(i)) => {
                let f = fresh.expect("fresh row required");
                (f.vs[i], self.gaussians[i].gamma * f.gamma)
            }
            (GaussRef::Fresh, GaussRef::Fresh) => {
                let f = fresh.expect("fresh row required");
                (f.self_raw, f.gamma * f.gamma)
            }
        }
    }

    /// Hamiltonian and overlap entries for one term pair from raw elements
    /// scaled by γγ. Same photon block: T + ½ω²V + V_ee + ½λ²X² + ω_p(n+½)S.
    /// Adjacent blocks: -λ√(ω_p/2)√(max(n,n')+0)·⟨X⟩ from the bilinear
    /// coupling. Distant blocks vanish.
    fn entry_values(&self, p: &PairPrims, gg: f64, nk: usize, nl: usize) -> (f64, f64) {
        if nk == nl {
            let sv = p.s * gg;
            let mut hv = (p.t + self.half_omega_sq * p.v + p.vc) * gg;
            if let Some(cavity) = &self.system.cavity {
                hv += 0.5 * cavity.lambda * cavity.lambda * p.x2 * gg
                    + cavity.omega_p * (nk as f64 + 0.5) * sv;
            }
            (hv, sv)
        } else if nk.abs_diff(nl) == 1 {
            let cavity = self.system.cavity.as_ref().expect("photon blocks imply a cavity");
            let ladder = (nk.max(nl) as f64).sqrt();
            let hv = -cavity.lambda * (cavity.omega_p / 2.0).sqrt() * ladder * p.x * gg;
            (hv, 0.0)
        } else {
            (0.0, 0.0)
        }
    }

    fn assemble_virtual(
        &self,
        vterms: &[(GaussRef, usize)],
        fresh: Option<&FreshRow>,
    ) -> (DMatrix<f64>, DMatrix<f64>) {
        let t = vterms.len();
        let mut h = DMatrix::zeros(t, t);
        let mut s = DMatrix::zeros(t, t);
        for k in 0..t {
            for l in 0..=k {
                let (p, gg) = self.pair_lookup(vterms[k].0, vterms[l].0, fresh);
                let (hv, sv) = self.entry_values(&p, gg, vterms[k].1, vterms[l].1);
                h[(k, l)] = hv;
                h[(l, k)] = hv;
                s[(k, l)] = sv;
                s[(l, k)] = sv;
            }
        }
        (h, s)
    }

    /// Hamiltonian and overlap matrices of the current terms. Diagonal
    /// overlap entries are exactly one by construction.
    pub fn assemble(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let vterms: Vec<(GaussRef, usize)> =
            self.terms.iter().map(|t| (GaussRef::Id(t.gaussian), t.photon_n)).collect();
        self.assemble_virtual(&vterms, None)
    }

    /// The spatial state carried by a subset of term slots with the given
    /// coefficients, e.g. one photon block of a composite state.
    pub fn state_for_slots(&self, slots: &[usize], coeff: &[f64]) -> Result<ManyBodyState<f64>> {
        if slots.len() != coeff.len() {
            return Err(Error::Usage("slot and coefficient counts differ".into()));
        }
        let mut terms = Vec::with_capacity(slots.len());
        let mut norms = Vec::with_capacity(slots.len());
        for &k in slots {
            let id = self.terms[k].gaussian;
            terms.push(self.gaussians[id].g.clone());
            norms.push(self.gaussians[id].gamma);
        }
        ManyBodyState::new(terms, norms, coeff.to_vec(), self.spin.clone())
    }

    /// Expectation values of the Hamiltonian pieces in the state with the
    /// given coefficients. Their sum equals the ground eigenvalue when the
    /// coefficients come from the solved problem, which makes this the
    /// energy decomposition of the state: kinetic, confinement, pair
    /// repulsion, and for cavity systems the photon ladder, the dipole
    /// self-energy, and the bilinear coupling.
    pub fn expectation_components(&self, coeff: &DVector<f64>) -> Result<ExpectationComponents> {
        if coeff.len() != self.terms.len() {
            return Err(Error::Usage(format!(
                "coefficient length {} does not match basis size {}",
                coeff.len(),
                self.terms.len()
            )));
        }
        let mut out = ExpectationComponents::default();
        for k in 0..self.terms.len() {
            for l in 0..self.terms.len() {
                let w = coeff[k] * coeff[l];
                let (p, gg) = self.pair_lookup(
                    GaussRef::Id(self.terms[k].gaussian),
                    GaussRef::Id(self.terms[l].gaussian),
                    None,
                );
                let (nk, nl) = (self.terms[k].photon_n, self.terms[l].photon_n);
                if nk == nl {
                    out.kinetic += w * gg * p.t;
                    out.confinement += w * gg * self.half_omega_sq * p.v;
                    out.repulsion += w * gg * p.vc;
                    if let Some(cavity) = &self.system.cavity {
                        out.field_ladder +=
                            w * gg * cavity.omega_p * (nk as f64 + 0.5) * p.s;
                        out.dipole_self +=
                            w * gg * 0.5 * cavity.lambda * cavity.lambda * p.x2;
                    }
                } else if nk.abs_diff(nl) == 1 {
                    let cavity =
                        self.system.cavity.as_ref().expect("photon blocks imply a cavity");
                    let ladder = (nk.max(nl) as f64).sqrt();
                    out.bilinear += w * gg
                        * (-cavity.lambda * (cavity.omega_p / 2.0).sqrt() * ladder * p.x);
                }
            }
        }
        Ok(out)
    }

    /// Dipole expectations ⟨X⟩ and ⟨X²⟩ of the state, X = -Σᵢxᵢ. Only
    /// available when the system has a cavity (the dipole elements are
    /// cached for the coupling then).
    pub fn dipole_moments(&self, coeff: &DVector<f64>) -> Result<(f64, f64)> {
        if self.system.cavity.is_none() {
            return Err(Error::Usage(
                "dipole elements are only cached for cavity systems".into(),
            ));
        }
        if coeff.len() != self.terms.len() {
            return Err(Error::Usage(format!(
                "coefficient length {} does not match basis size {}",
                coeff.len(),
                self.terms.len()
            )));
        }
        let mut x = 0.0;
        let mut x2 = 0.0;
        for k in 0..self.terms.len() {
            for l in 0..self.terms.len() {
                if self.terms[k].photon_n != self.terms[l].photon_n {
                    continue;
                }
                let w = coeff[k] * coeff[l];
                let (p, gg) = self.pair_lookup(
                    GaussRef::Id(self.terms[k].gaussian),
                    GaussRef::Id(self.terms[l].gaussian),
                    None,
                );
                x += w * gg * p.x;
                x2 += w * gg * p.x2;
            }
        }
        Ok((x, x2))
    }

    /// The full state for purely electronic bases (all terms in photon
    /// block zero).
    pub fn electronic_state(&self, coeff: &DVector<f64>) -> Result<ManyBodyState<f64>> {
        if self.terms.iter().any(|t| t.photon_n != 0) {
            return Err(Error::Usage(
                "basis has photon blocks; take per-block states instead".into(),
            ));
        }
        let slots: Vec<usize> = (0..self.terms.len()).collect();
        self.state_for_slots(&slots, coeff.as_slice())
    }
}

/// Hamiltonian expectation values by piece; see
/// [`BasisSet::expectation_components`]. The electronic entries are always
/// populated; the field entries stay zero without a cavity.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ExpectationComponents {
    pub kinetic: f64,
    pub confinement: f64,
    pub repulsion: f64,
    pub field_ladder: f64,
    pub dipole_self: f64,
    pub bilinear: f64,
}

impl ExpectationComponents {
    /// Sum of all pieces, the total energy of the state.
    pub fn total(&self) -> f64 {
        self.kinetic
            + self.confinement
            + self.repulsion
            + self.field_ladder
            + self.dipole_self
            + self.bilinear
    }
}

/// Outcome of one growth step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    /// A term was accepted; the new ground energy.
    Added(f64),
    /// The energy plateaued within the configured tolerance.
    Plateaued,
    /// The basis is at its configured maximum size.
    Full,
    /// No candidate passed admissibility even after widening the draw
    /// ranges: the basis spans everything it can under the conditioning
    /// cutoff, so growth terminates.
    Saturated,
}

/// Drives growth and refinement over one [`BasisSet`] with one seeded
/// candidate stream.
pub struct Optimizer {
    basis: BasisSet,
    config: OptimizerConfig,
    rng: ChaCha8Rng,
    energy: f64,
    coeff: DVector<f64>,
    trace: Vec<f64>,
    /// index into `trace` where the current growth phase began; plateau
    /// detection never reaches across a structural change (photon-cap
    /// raise, block extension, resume)
    phase_start: usize,
    /// overlap directions the current basis already loses to the
    /// conditioning cutoff; candidates may not push the count higher
    discards: usize,
}

impl Optimizer {
    pub fn new(system: &SystemSpec, config: &OptimizerConfig) -> Result<Self> {
        let basis = BasisSet::new(system, config.quad_tol)?;
        Ok(Optimizer {
            basis,
            config: config.clone(),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            energy: f64::INFINITY,
            coeff: DVector::zeros(0),
            trace: Vec::new(),
            phase_start: 0,
            discards: 0,
        })
    }

    /// Wraps an existing basis (e.g. for standalone refinement) with a
    /// fresh candidate stream from the config seed.
    pub fn with_basis(basis: BasisSet, config: &OptimizerConfig) -> Result<Self> {
        let mut opt = Optimizer {
            basis,
            config: config.clone(),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            energy: f64::INFINITY,
            coeff: DVector::zeros(0),
            trace: Vec::new(),
            phase_start: 0,
            discards: 0,
        };
        if !opt.basis.is_empty() {
            opt.resolve()?;
            opt.trace.push(opt.energy);
        }
        opt.phase_start = opt.trace.len();
        Ok(opt)
    }

    pub fn basis(&self) -> &BasisSet {
        &self.basis
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn coeff(&self) -> &DVector<f64> {
        &self.coeff
    }

    pub fn trace(&self) -> &[f64] {
        &self.trace
    }

    /// Raises the highest photon block candidates may target and starts a
    /// new growth phase for plateau detection.
    pub fn set_photon_cap(&mut self, cap: usize) {
        self.config.photon_cap = cap;
        self.phase_start = self.trace.len();
    }

    /// Raises the growth ceiling, e.g. before extending into a new photon
    /// block.
    pub fn raise_basis_max(&mut self, extra: usize) {
        self.config.basis_max += extra;
    }

    /// Duplicates every term of photon block `src_n` into block `dst_n`
    /// (same Gaussians, zero new matrix elements) and re-solves. Returns
    /// the number of copies.
    pub fn extend_block_from(&mut self, src_n: usize, dst_n: usize) -> Result<usize> {
        let slots = self.basis.block_slots(src_n);
        for &k in &slots {
            let id = self.basis.terms()[k].gaussian;
            self.basis.add_term(id, dst_n)?;
        }
        if !slots.is_empty() {
            self.resolve()?;
            self.trace.push(self.energy);
        }
        self.phase_start = self.trace.len();
        Ok(slots.len())
    }

    fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
        (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
    }

    fn shift_halfwidth(&self) -> f64 {
        self.config.shift_halfwidth.unwrap_or_else(|| {
            let omega = self.basis.system.confinement.omega();
            if omega > 0.0 {
                (4.0 / omega.sqrt()).max(5.0)
            } else {
                5.0
            }
        })
    }

    fn draw_spatial(&mut self, widen: bool) -> Gauss {
        let n = self.basis.system.n_electrons;
        let f = if widen { 10.0 } else { 1.0 };
        let (a_lo, a_hi) = (self.config.alpha_min / f, self.config.alpha_max * f);
        let (b_lo, b_hi) = (self.config.beta_min / f, self.config.beta_max * f);
        let l = self.shift_halfwidth() * if widen { 2.0 } else { 1.0 };
        let mut alpha = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = Self::log_uniform(&mut self.rng, a_lo, a_hi);
                alpha[(i, j)] = v;
                alpha[(j, i)] = v;
            }
        }
        let mut beta = DVector::zeros(n);
        for i in 0..n {
            beta[i] = Self::log_uniform(&mut self.rng, b_lo, b_hi);
        }
        let mut shift = DVector::zeros(n);
        for i in 0..n {
            shift[i] = self.rng.random_range(-l..l);
        }
        Gauss::new(alpha, beta, shift).expect("positive draw parameters give a valid term")
    }

    /// A local perturbation of an existing term: multiplicative jitter on
    /// the exponents, additive jitter on the shifts. Refinement alternates
    /// these with fresh global draws so it can both fine-tune a discovered
    /// arrangement (essential for strongly correlated, localized states)
    /// and still escape to unexplored parameter regions.
    fn draw_near(&mut self, g: &Gauss) -> Gauss {
        let n = g.n();
        // up to x1.5 on exponents, +-5% of the draw box on positions
        let spread = 1.5f64.ln();
        let step = 0.05 * self.shift_halfwidth();
        let mut alpha = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = g.alpha()[(i, j)] * (spread * (2.0 * self.rng.random::<f64>() - 1.0)).exp();
                alpha[(i, j)] = v;
                alpha[(j, i)] = v;
            }
        }
        let mut beta = DVector::zeros(n);
        for i in 0..n {
            beta[i] = g.beta()[i] * (spread * (2.0 * self.rng.random::<f64>() - 1.0)).exp();
        }
        let mut shift = DVector::zeros(n);
        for i in 0..n {
            shift[i] = g.shift()[i] + step * (2.0 * self.rng.random::<f64>() - 1.0);
        }
        Gauss::new(alpha, beta, shift).expect("jittered positive parameters stay valid")
    }

    fn draw_photon(&mut self) -> usize {
        if self.config.photon_cap == 0 {
            0
        } else {
            self.rng.random_range(0..=self.config.photon_cap)
        }
    }

    /// Ground energy of the trial arrangement, or None when inadmissible.
    /// `slot` selects replacement (refinement) versus append (growth).
    fn score(&self, fresh: &FreshRow, photon_n: usize, slot: Option<usize>) -> Option<f64> {
        let mut vterms: Vec<(GaussRef, usize)> = self
            .basis
            .terms
            .iter()
            .map(|t| (GaussRef::Id(t.gaussian), t.photon_n))
            .collect();
        match slot {
            Some(k) => vterms[k] = (GaussRef::Fresh, photon_n),
            None => vterms.push((GaussRef::Fresh, photon_n)),
        }
        let (h, s) = self.basis.assemble_virtual(&vterms, Some(fresh));
        match solve_generalized_with_cutoff(&h, &s, self.config.overlap_cutoff) {
            // inherited bases may already sit at the conditioning cutoff
            // (block extension copies whole spatial blocks); a candidate is
            // admissible as long as it does not worsen the count
            Ok(spectrum) if spectrum.n_discarded <= self.discards => {
                let e = spectrum.ground_energy();
                e.is_finite().then_some(e)
            }
            _ => None,
        }
    }

    fn resolve(&mut self) -> Result<()> {
        let (h, s) = self.basis.assemble();
        let spectrum = solve_generalized_with_cutoff(&h, &s, self.config.overlap_cutoff)?;
        self.energy = spectrum.ground_energy();
        self.coeff = spectrum.ground_coefficients();
        self.discards = spectrum.n_discarded;
        Ok(())
    }

    /// Attempts to add one term: draws a candidate batch, keeps the best
    /// admissible energy if it does not raise the ground energy, and widens
    /// the draw ranges for one retry batch before giving up.
    pub fn grow_step(&mut self) -> Result<StepOutcome> {
        if self.basis.len() >= self.config.basis_max {
            return Ok(StepOutcome::Full);
        }
        for widen in [false, true] {
            let mut best: Option<(f64, Gauss, usize, FreshRow)> = None;
            for _ in 0..self.config.candidates_per_step {
                let g = self.draw_spatial(widen);
                let photon_n = self.draw_photon();
                let Some(row) = self.basis.candidate_row(&g, self.config.min_self_overlap)?
                else {
                    continue;
                };
                let Some(e) = self.score(&row, photon_n, None) else { continue };
                if best.as_ref().is_none_or(|(be, ..)| e < *be) {
                    best = Some((e, g, photon_n, row));
                }
            }
            if let Some((e, g, photon_n, row)) = best {
                let acceptable = self.basis.is_empty()
                    || e <= self.energy + 1e-12 * self.energy.abs().max(1.0);
                if acceptable {
                    let id = self.basis.push_gaussian(g, row);
                    self.basis.add_term(id, photon_n)?;
                    let _ = e;
                    self.resolve()?;
                    self.trace.push(self.energy);
                    return Ok(StepOutcome::Added(self.energy));
                }
            }
        }
        // an empty basis that admits nothing is a startup failure worth
        // surfacing; a grown basis that admits nothing has saturated its
        // conditioning budget and simply stops growing
        if self.basis.is_empty() {
            return Err(Error::StepFailed(
                "no admissible candidate for an empty basis even after widening".into(),
            ));
        }
        Ok(StepOutcome::Saturated)
    }

    fn plateaued(&self) -> bool {
        match self.config.plateau_tol {
            None => false,
            Some(tol) => {
                let w = self.config.plateau_window;
                let n = self.trace.len();
                n > w
                    && n - self.phase_start > w
                    && (self.trace[n - 1 - w] - self.trace[n - 1]) < tol
            }
        }
    }

    /// Grows until the basis is full, the energy plateaus, or a step fails.
    pub fn run_growth(&mut self) -> Result<()> {
        loop {
            if self.plateaued() {
                return Ok(());
            }
            match self.grow_step()? {
                StepOutcome::Added(_) => continue,
                StepOutcome::Full | StepOutcome::Plateaued | StepOutcome::Saturated => {
                    return Ok(())
                }
            }
        }
    }

    /// One cyclic replacement pass; true if any slot improved strictly.
    pub fn refine_pass(&mut self) -> Result<bool> {
        let mut improved = false;
        for slot in 0..self.basis.len() {
            let photon_n = self.basis.terms[slot].photon_n;
            let current = self.basis.gaussian(self.basis.terms[slot].gaussian).clone();
            let mut best: Option<(f64, Gauss, FreshRow)> = None;
            for k in 0..self.config.candidates_per_step {
                let g = if k % 2 == 0 {
                    self.draw_near(&current)
                } else {
                    self.draw_spatial(false)
                };
                let Some(row) = self.basis.candidate_row(&g, self.config.min_self_overlap)?
                else {
                    continue;
                };
                let Some(e) = self.score(&row, photon_n, Some(slot)) else { continue };
                if best.as_ref().is_none_or(|(be, ..)| e < *be) {
                    best = Some((e, g, row));
                }
            }
            if let Some((e, g, row)) = best {
                if e < self.energy {
                    let id = self.basis.push_gaussian(g, row);
                    self.basis.terms[slot].gaussian = id;
                    self.basis.compact();
                    self.resolve()?;
                    improved = true;
                }
            }
        }
        if improved {
            self.trace.push(self.energy);
        }
        Ok(improved)
    }

    /// Runs the configured number of refinement sweeps, stopping early when
    /// a whole pass yields no improvement.
    pub fn refine(&mut self) -> Result<()> {
        for _ in 0..self.config.refine_sweeps {
            if !self.refine_pass()? {
                break;
            }
        }
        Ok(())
    }

    /// Position of the candidate stream, for checkpointing.
    pub fn rng_word_pos(&self) -> u128 {
        self.rng.get_word_pos()
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            system: self.basis.system.clone(),
            config: self.config.clone(),
            rng_word_pos: self.rng.get_word_pos().to_string(),
            energy: self.energy,
            trace: self.trace.clone(),
            phase_start: self.phase_start,
            gaussians: self
                .basis
                .gaussians
                .iter()
                .map(|e| GaussianRecord::from_gaussian(&e.g))
                .collect(),
            terms: self
                .basis
                .terms
                .iter()
                .map(|t| TermRecord { gaussian: t.gaussian, photon_n: t.photon_n })
                .collect(),
        }
    }

    /// Rebuilds the optimizer from a checkpoint: matrix elements are
    /// recomputed from the stored exact parameters and the candidate
    /// stream resumes at the stored position. The recomputed ground energy
    /// must agree with the stored one.
    pub fn from_checkpoint(chk: &Checkpoint) -> Result<Self> {
        if chk.version != CHECKPOINT_VERSION {
            return Err(Error::Usage(format!(
                "checkpoint version {} unsupported (expected {CHECKPOINT_VERSION})",
                chk.version
            )));
        }
        let mut opt = Optimizer::new(&chk.system, &chk.config)?;
        for rec in &chk.gaussians {
            let g = rec.to_gaussian()?;
            let row = opt
                .basis
                .candidate_row(&g, chk.config.min_self_overlap)?
                .ok_or_else(|| Error::Usage("checkpoint term fails admissibility".into()))?;
            opt.basis.push_gaussian(g, row);
        }
        for t in &chk.terms {
            opt.basis.add_term(t.gaussian, t.photon_n)?;
        }
        if !opt.basis.is_empty() {
            opt.resolve()?;
            if chk.energy.is_finite()
                && (opt.energy - chk.energy).abs() > 1e-9 * chk.energy.abs().max(1.0)
            {
                return Err(Error::Usage(format!(
                    "checkpoint inconsistent: stored energy {} but recomputed {}",
                    chk.energy, opt.energy
                )));
            }
        }
        opt.trace = chk.trace.clone();
        opt.phase_start = chk.phase_start.min(opt.trace.len());
        let pos: u128 = chk
            .rng_word_pos
            .parse()
            .map_err(|_| Error::Usage("invalid rng position in checkpoint".into()))?;
        opt.rng.set_word_pos(pos);
        Ok(opt)
    }

    /// Final product of an optimization run.
    pub fn into_result(self) -> GrowthResult {
        GrowthResult {
            basis: self.basis,
            energy: self.energy,
            coeff: self.coeff,
            trace: self.trace,
        }
    }
}

pub const CHECKPOINT_VERSION: u32 = 1;

/// Exact parameters of one stored Gaussian: upper-triangle pair couplings
/// in row-major (i<j) order, then widths and shifts.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GaussianRecord {
    pub alpha_upper: Vec<f64>,
    pub beta: Vec<f64>,
    pub shift: Vec<f64>,
}

impl GaussianRecord {
    pub fn from_gaussian(g: &Gauss) -> Self {
        let n = g.n();
        let mut alpha_upper = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                alpha_upper.push(g.alpha()[(i, j)]);
            }
        }
        GaussianRecord {
            alpha_upper,
            beta: g.beta().as_slice().to_vec(),
            shift: g.shift().as_slice().to_vec(),
        }
    }

    pub fn to_gaussian(&self) -> Result<Gauss> {
        let n = self.beta.len();
        if self.alpha_upper.len() != n * (n - 1) / 2 || self.shift.len() != n {
            return Err(Error::Usage("malformed gaussian record".into()));
        }
        let mut alpha = DMatrix::zeros(n, n);
        let mut it = self.alpha_upper.iter();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = *it.next().expect("length checked");
                alpha[(i, j)] = v;
                alpha[(j, i)] = v;
            }
        }
        Gauss::new(
            alpha,
            DVector::from_vec(self.beta.clone()),
            DVector::from_vec(self.shift.clone()),
        )
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermRecord {
    pub gaussian: usize,
    pub photon_n: usize,
}

/// Versioned, exactly reproducible snapshot of an optimization run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub system: SystemSpec,
    pub config: OptimizerConfig,
    /// Decimal u128: word position of the ChaCha candidate stream.
    pub rng_word_pos: String,
    pub energy: f64,
    pub trace: Vec<f64>,
    /// index into `trace` where the growth phase running at save time began
    #[serde(default)]
    pub phase_start: usize,
    pub gaussians: Vec<GaussianRecord>,
    pub terms: Vec<TermRecord>,
}

/// A finished variational run: the basis, the ground energy, the ground
/// coefficients and the energy trace.
pub struct GrowthResult {
    pub basis: BasisSet,
    pub energy: f64,
    pub coeff: DVector<f64>,
    pub trace: Vec<f64>,
}

impl GrowthResult {
    /// The normalised many-body state, for purely electronic bases.
    pub fn state(&self) -> Result<ManyBodyState<f64>> {
        self.basis.electronic_state(&self.coeff)
    }
}

/// Grows a basis for the system from scratch under the given config.
pub fn grow_basis(system: &SystemSpec, config: &OptimizerConfig) -> Result<GrowthResult> {
    let mut opt = Optimizer::new(system, config)?;
    opt.run_growth()?;
    Ok(opt.into_result())
}

/// Refines an existing basis by cyclic slot replacement with a fresh
/// candidate stream seeded from the config.
pub fn refine_basis(basis: BasisSet, config: &OptimizerConfig) -> Result<GrowthResult> {
    let mut opt = Optimizer::with_basis(basis, config)?;
    opt.refine()?;
    Ok(opt.into_result())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_config(basis_max: usize, candidates: usize, seed: u64) -> OptimizerConfig {
        OptimizerConfig {
            basis_max,
            candidates_per_step: candidates,
            refine_sweeps: 1,
            seed,
            ..OptimizerConfig::default()
        }
    }

    #[test]
    fn config_toml_round_trip_is_identity() {
        let config = OptimizerConfig {
            shift_halfwidth: Some(7.25),
            plateau_tol: Some(1e-9),
            ..OptimizerConfig::default()
        };
        let text = toml::to_string(&config).unwrap();
        let back: OptimizerConfig = toml::from_str(&text).unwrap();
        assert_eq!(config, back);
    }

    #[test]
    fn toml_floats_round_trip_exactly() {
        #[derive(Serialize, Deserialize)]
        struct Probe {
            vals: Vec<f64>,
        }
        let vals = vec![
            0.1,
            1.0 / 3.0,
            1e-300,
            6.02214076e23,
            -1.234_567_890_123_456_7e-8,
            std::f64::consts::PI,
            f64::MIN_POSITIVE,
        ];
        let text = toml::to_string(&Probe { vals: vals.clone() }).unwrap();
        let back: Probe = toml::from_str(&text).unwrap();
        for (a, b) in vals.iter().zip(&back.vals) {
            assert_eq!(a.to_bits(), b.to_bits(), "{a} did not survive the round trip");
        }
    }

    #[test]
    fn single_particle_growth_approaches_the_oscillator_ground_state() {
        let system = SystemSpec::harmonic(1, 1, 1.0);
        let config = quick_config(10, 12, 3);
        let result = grow_basis(&system, &config).unwrap();
        // variational from above, and close with a handful of widths
        assert!(result.energy >= 0.5 - 1e-10);
        assert!(result.energy < 0.52, "energy {}", result.energy);
        for w in result.trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn same_seed_reproduces_the_run_exactly() {
        let mut system = SystemSpec::harmonic(2, 0, 1.0);
        system.coulomb = false;
        let config = quick_config(6, 8, 11);
        let a = grow_basis(&system, &config).unwrap();
        let b = grow_basis(&system, &config).unwrap();
        assert_eq!(a.trace.len(), b.trace.len());
        for (x, y) in a.trace.iter().zip(&b.trace) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert_eq!(a.energy.to_bits(), b.energy.to_bits());
    }

    #[test]
    fn refinement_never_raises_the_energy() {
        let mut system = SystemSpec::harmonic(2, 2, 1.0);
        system.coulomb = false;
        let config = quick_config(8, 8, 5);
        let grown = grow_basis(&system, &config).unwrap();
        let before = grown.energy;
        let refined = refine_basis(grown.basis, &config).unwrap();
        assert!(refined.energy <= before + 1e-12);
        // exact noninteracting triplet energy 0.5 + 1.5 bounds from below
        assert!(refined.energy >= 2.0 - 1e-9);
    }

    #[test]
    fn checkpoint_round_trip_restores_energy_and_stream() {
        let system = SystemSpec::harmonic(2, 0, 1.0);
        let config = quick_config(5, 6, 17);
        let mut opt = Optimizer::new(&system, &config).unwrap();
        opt.run_growth().unwrap();
        let chk = opt.checkpoint();

        let text = toml::to_string(&chk).unwrap();
        let parsed: Checkpoint = toml::from_str(&text).unwrap();
        let mut resumed = Optimizer::from_checkpoint(&parsed).unwrap();
        assert!((resumed.energy() - opt.energy()).abs() <= 1e-12 * opt.energy().abs());
        assert_eq!(resumed.rng_word_pos(), opt.rng_word_pos());

        // identical continuation from the restored stream
        let mut grown = opt;
        grown.config.basis_max += 1;
        resumed.config.basis_max += 1;
        let a = match grown.grow_step().unwrap() {
            StepOutcome::Added(e) => e,
            other => panic!("expected growth, got {other:?}"),
        };
        let b = match resumed.grow_step().unwrap() {
            StepOutcome::Added(e) => e,
            other => panic!("expected growth, got {other:?}"),
        };
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn add_term_validates_ids_and_photon_numbers() {
        let system = SystemSpec::harmonic(1, 1, 1.0);
        let mut basis = BasisSet::new(&system, DEFAULT_QUADRATURE_TOL).unwrap();
        assert!(basis.add_term(0, 0).is_err());
        let g = Gauss::new(
            DMatrix::zeros(1, 1),
            DVector::from_vec(vec![0.5]),
            DVector::zeros(1),
        )
        .unwrap();
        let row = basis.candidate_row(&g, 1e-12).unwrap().unwrap();
        let id = basis.push_gaussian(g, row);
        assert!(basis.add_term(id, 1).is_err()); // no cavity in the system
        assert!(basis.add_term(id, 0).is_ok());
    }

    #[test]
    fn plateau_stops_growth_early() {
        let system = SystemSpec::harmonic(1, 1, 1.0);
        let config = OptimizerConfig {
            basis_max: 40,
            candidates_per_step: 10,
            plateau_tol: Some(1e-7),
            plateau_window: 3,
            seed: 2,
            ..OptimizerConfig::default()
        };
        let result = grow_basis(&system, &config).unwrap();
        assert!(result.basis.len() < 40, "plateau should stop before the cap");
        assert!(result.energy < 0.5 + 1e-4);
    }
}
