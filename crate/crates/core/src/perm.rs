//! Permutations of particle indices with parity.

/// All permutations of `0..n` paired with their sign, in lexicographic
/// order. The identity comes first with sign +1. `n` is the electron count,
/// so the list stays small (n ≤ 6 gives 720 entries) and is cached per spin
/// function by the element layer.
pub fn permutations_with_sign(n: usize) -> Vec<(Vec<usize>, i8)> {
    assert!(n >= 1, "permutations of an empty index set are not used");
    let mut perm: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    loop {
        out.push((perm.clone(), sign_of(&perm)));
        if !next_lexicographic(&mut perm) {
            break;
        }
    }
    out
}

/// Parity of a permutation as (-1)^inversions.
pub fn sign_of(perm: &[usize]) -> i8 {
    let mut inversions = 0usize;
    for i in 0..perm.len() {
        for j in i + 1..perm.len() {
            if perm[i] > perm[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Advances `perm` to its lexicographic successor; false when `perm` was the
/// last one.
fn next_lexicographic(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let pivot = i - 1;
    let mut j = n - 1;
    while perm[j] <= perm[pivot] {
        j -= 1;
    }
    perm.swap(pivot, j);
    perm[i..].reverse();
    true
}
