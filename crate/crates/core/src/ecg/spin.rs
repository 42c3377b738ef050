//! Total-spin eigenfunctions of N spin-½ particles and their permutation
//! overlaps.
//!
//! Each spatial basis function is paired with one N-particle spin function
//! |S, M=S⟩ built by coupling particles one at a time through a fixed
//! sequence of intermediate spins. Antisymmetrised matrix elements then
//! need ⟨χ|P|χ'⟩ for every permutation P, evaluated here by expanding both
//! functions over up/down configurations.
//!
//! Configurations are bitmasks: bit i set means particle i is up. All
//! functions are built at maximal projection M = S, which fixes the number
//! of set bits to (N + 2S)/2.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// An N-particle total-spin eigenfunction |S, M=S⟩, expanded over up/down
/// configurations.
#[derive(Debug, Clone)]
pub struct SpinFunction {
    n: usize,
    total_spin_x2: u32,
    /// Doubled intermediate spins after coupling particles 1..=k.
    path: Vec<u32>,
    /// (configuration bitmask, coefficient), sorted by bitmask; unit norm.
    terms: Vec<(u64, f64)>,
}

impl SpinFunction {
    /// Couples N spins to total spin S (given doubled) along the canonical
    /// intermediate path: lower the intermediate spin whenever the target
    /// remains reachable with the particles left, otherwise raise it.
    pub fn coupled(n: usize, total_spin_x2: u32) -> Result<Self> {
        if n == 0 || n > 64 {
            return Err(Error::Usage(format!("unsupported particle count {n}")));
        }
        if total_spin_x2 as usize > n || (n - total_spin_x2 as usize) % 2 != 0 {
            return Err(Error::Usage(format!(
                "total spin {}/2 unreachable with {n} spin-1/2 particles",
                total_spin_x2
            )));
        }
        let mut path = Vec::with_capacity(n);
        path.push(1u32);
        for k in 2..=n {
            let prev = *path.last().expect("nonempty path");
            let lowered = prev.checked_sub(1);
            let remaining = (n - k) as i64;
            let next = match lowered {
                Some(cand) if (total_spin_x2 as i64 - cand as i64).abs() <= remaining => cand,
                _ => prev + 1,
            };
            path.push(next);
        }
        debug_assert_eq!(*path.last().unwrap(), total_spin_x2);

        let mut memo = HashMap::new();
        let state = coupled_state(&path, n, total_spin_x2 as i64, &mut memo);
        let mut terms: Vec<(u64, f64)> = state.into_iter().collect();
        terms.sort_by_key(|&(cfg, _)| cfg);
        Ok(Self { n, total_spin_x2, path, terms })
    }

    /// Number of particles.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Doubled total spin 2S.
    pub fn total_spin_x2(&self) -> u32 {
        self.total_spin_x2
    }

    /// Doubled intermediate spins, one entry per coupled particle.
    pub fn path(&self) -> &[u32] {
        &self.path
    }

    /// Configuration expansion, sorted by bitmask.
    pub fn terms(&self) -> &[(u64, f64)] {
        &self.terms
    }

    fn coefficient(&self, cfg: u64) -> f64 {
        match self.terms.binary_search_by_key(&cfg, |&(c, _)| c) {
            Ok(idx) => self.terms[idx].1,
            Err(_) => 0.0,
        }
    }

    /// ⟨χ|χ⟩, equal to one up to round-off.
    pub fn norm_sq(&self) -> f64 {
        self.terms.iter().map(|&(_, c)| c * c).sum()
    }

    /// ⟨χ|S²|χ⟩ evaluated through the transposition identity
    /// S² = 3N/4 - N(N-1)/4 + Σ_{i<j} P_ij, as an internal consistency
    /// check; equals S(S+1) for a true eigenfunction.
    pub fn s_squared_expectation(&self) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                for &(cfg, c) in &self.terms {
                    let swapped = swap_bits(cfg, i, j);
                    acc += c * self.coefficient(swapped);
                }
            }
        }
        let nf = n as f64;
        0.75 * nf - 0.25 * nf * (nf - 1.0) + acc
    }
}

/// Expansion of |path[k-1]/2, m2/2⟩ over the first k particles.
fn coupled_state(
    path: &[u32],
    k: usize,
    m2: i64,
    memo: &mut HashMap<(usize, i64), HashMap<u64, f64>>,
) -> HashMap<u64, f64> {
    if let Some(hit) = memo.get(&(k, m2)) {
        return hit.clone();
    }
    let mut state = HashMap::new();
    if k == 1 {
        if m2.unsigned_abs() as u32 <= path[0] {
            state.insert(u64::from(m2 == 1), 1.0);
        }
    } else {
        let j2 = i64::from(path[k - 1]);
        let j2p = i64::from(path[k - 2]);
        let raising = j2 == j2p + 1;
        // (particle k-1 up?, doubled projection change)
        for (up, dm2) in [(true, 1i64), (false, -1i64)] {
            let m2p = m2 - dm2;
            if m2p.unsigned_abs() as i64 > j2p {
                continue;
            }
            let cg = clebsch_attach_half(j2p, m2, raising, up);
            if cg == 0.0 {
                continue;
            }
            let sub = coupled_state(path, k - 1, m2p, memo);
            let bit = if up { 1u64 << (k - 1) } else { 0 };
            for (cfg, c) in sub {
                *state.entry(cfg | bit).or_insert(0.0) += cg * c;
            }
        }
    }
    memo.insert((k, m2), state.clone());
    state
}

/// Clebsch-Gordan coefficient for attaching one spin-½ to a state of
/// doubled spin `j2p`, producing doubled spin j2p±1 at doubled projection
/// `m2`, with the attached particle up or down. Condon-Shortley phases.
fn clebsch_attach_half(j2p: i64, m2: i64, raising: bool, up: bool) -> f64 {
    let den = 2.0 * (j2p as f64 + 1.0);
    let plus = ((j2p + m2 + 1) as f64 / den).max(0.0).sqrt();
    let minus = ((j2p - m2 + 1) as f64 / den).max(0.0).sqrt();
    match (raising, up) {
        (true, true) => plus,
        (true, false) => minus,
        (false, true) => -minus,
        (false, false) => plus,
    }
}

fn swap_bits(cfg: u64, i: usize, j: usize) -> u64 {
    let bi = (cfg >> i) & 1;
    let bj = (cfg >> j) & 1;
    if bi == bj {
        cfg
    } else {
        cfg ^ ((1 << i) | (1 << j))
    }
}

/// Applies a particle relabelling to a configuration: bit `perm[i]` of the
/// result equals bit i of `cfg`.
fn permute_cfg(cfg: u64, perm: &[usize]) -> u64 {
    let mut out = 0u64;
    for (i, &pi) in perm.iter().enumerate() {
        out |= ((cfg >> i) & 1) << pi;
    }
    out
}

/// ⟨χ_bra| P |χ_ket⟩ for the particle relabelling P given as `perm`.
pub fn spin_overlap<S: Scalar>(bra: &SpinFunction, perm: &[usize], ket: &SpinFunction) -> S {
    debug_assert_eq!(bra.n(), ket.n());
    debug_assert_eq!(perm.len(), ket.n());
    let mut acc = 0.0;
    for &(cfg, c) in &ket.terms {
        acc += c * bra.coefficient(permute_cfg(cfg, perm));
    }
    S::lit(acc)
}

/// ⟨χ_bra| P Π_slot(σ) |χ_ket⟩: the permutation overlap restricted to
/// configurations where, after relabelling, particle `slot` has spin given
/// by `up`. Summing the two projections recovers [`spin_overlap`].
pub fn spin_overlap_projected<S: Scalar>(
    bra: &SpinFunction,
    perm: &[usize],
    ket: &SpinFunction,
    slot: usize,
    up: bool,
) -> S {
    debug_assert_eq!(bra.n(), ket.n());
    let mut acc = 0.0;
    for &(cfg, c) in &ket.terms {
        let pcfg = permute_cfg(cfg, perm);
        if ((pcfg >> slot) & 1 == 1) == up {
            acc += c * bra.coefficient(pcfg);
        }
    }
    S::lit(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::permutations_with_sign;

    #[test]
    fn rejects_unreachable_spin() {
        assert!(SpinFunction::coupled(3, 2).is_err()); // parity
        assert!(SpinFunction::coupled(2, 4).is_err()); // range
        assert!(SpinFunction::coupled(0, 0).is_err());
    }

    #[test]
    fn canonical_paths_alternate_low() {
        assert_eq!(SpinFunction::coupled(3, 1).unwrap().path(), &[1, 0, 1]);
        assert_eq!(SpinFunction::coupled(4, 2).unwrap().path(), &[1, 0, 1, 2]);
        assert_eq!(SpinFunction::coupled(6, 0).unwrap().path(), &[1, 0, 1, 0, 1, 0]);
        assert_eq!(SpinFunction::coupled(5, 5).unwrap().path(), &[1, 2, 3, 4, 5]);
    }

    #[test]
    fn unit_norm_and_fixed_projection() {
        for (n, s2) in [(1, 1), (2, 0), (2, 2), (3, 1), (4, 0), (4, 2), (5, 3), (6, 0), (6, 2)] {
            let chi = SpinFunction::coupled(n, s2).unwrap();
            assert!((chi.norm_sq() - 1.0).abs() < 1e-12, "norm at n={n} 2S={s2}");
            let ups = (n + s2 as usize) / 2;
            for &(cfg, _) in chi.terms() {
                assert_eq!(cfg.count_ones() as usize, ups);
            }
        }
    }

    #[test]
    fn s_squared_eigenvalue() {
        for (n, s2) in [(2, 0), (2, 2), (3, 1), (3, 3), (4, 0), (4, 2), (5, 1), (6, 0), (6, 4)] {
            let chi = SpinFunction::coupled(n, s2).unwrap();
            let s = s2 as f64 / 2.0;
            let expect = s * (s + 1.0);
            assert!(
                (chi.s_squared_expectation() - expect).abs() < 1e-12,
                "S² at n={n} 2S={s2}"
            );
        }
    }

    #[test]
    fn singlet_transposition_is_antisymmetric() {
        let chi = SpinFunction::coupled(2, 0).unwrap();
        let swapped: f64 = spin_overlap(&chi, &[1, 0], &chi);
        assert!((swapped + 1.0).abs() < 1e-14);
        let id: f64 = spin_overlap(&chi, &[0, 1], &chi);
        assert!((id - 1.0).abs() < 1e-14);
    }

    #[test]
    fn triplet_transposition_is_symmetric() {
        let chi = SpinFunction::coupled(2, 2).unwrap();
        let swapped: f64 = spin_overlap(&chi, &[1, 0], &chi);
        assert!((swapped - 1.0).abs() < 1e-14);
    }

    #[test]
    fn doublet_transposition_overlap() {
        // N=3, S=1/2 canonical function: ⟨χ|P_{01}|χ⟩ = -1, ⟨χ|P_{12}|χ⟩ = 1/2
        let chi = SpinFunction::coupled(3, 1).unwrap();
        let p01: f64 = spin_overlap(&chi, &[1, 0, 2], &chi);
        let p12: f64 = spin_overlap(&chi, &[0, 2, 1], &chi);
        assert!((p01 + 1.0).abs() < 1e-13);
        assert!((p12 - 0.5).abs() < 1e-13);
    }

    #[test]
    fn projections_sum_to_full_overlap() {
        let chi = SpinFunction::coupled(4, 2).unwrap();
        for (perm, _) in permutations_with_sign(4) {
            let full: f64 = spin_overlap(&chi, &perm, &chi);
            for slot in 0..4 {
                let up: f64 = spin_overlap_projected(&chi, &perm, &chi, slot, true);
                let dn: f64 = spin_overlap_projected(&chi, &perm, &chi, slot, false);
                assert!((up + dn - full).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn polarised_function_is_single_configuration() {
        let chi = SpinFunction::coupled(4, 4).unwrap();
        assert_eq!(chi.terms().len(), 1);
        assert_eq!(chi.terms()[0].0, 0b1111);
        assert!((chi.terms()[0].1 - 1.0).abs() < 1e-15);
    }
}
