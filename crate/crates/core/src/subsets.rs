//! Subset enumeration used by the capacity-norm and Cheeger modules:
//! combinations in (size, lexicographic) order, counting helpers, and
//! connectivity filters. Deterministic order makes argmin/argmax tie-breaks
//! reproducible.

/// Number of nonempty subsets of an n-set with size <= cap (saturating).
pub fn count_up_to(n: usize, cap: usize) -> u128 {
    let mut total: u128 = 0;
    let mut binom: u128 = 1;
    for k in 1..=cap.min(n) {
        binom = binom.saturating_mul((n - k + 1) as u128) / k as u128;
        total = total.saturating_add(binom);
    }
    total
}

/// Visit every nonempty combination of `items` with size <= cap, sizes in
/// increasing order, lexicographic within a size.
pub fn for_each_combination(items: &[usize], cap: usize, f: &mut dyn FnMut(&[usize])) {
    let n = items.len();
    for k in 1..=cap.min(n) {
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            let set: Vec<usize> = idx.iter().map(|&i| items[i]).collect();
            f(&set);
            if !next_combination(&mut idx, n) {
                break;
            }
        }
    }
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < i + n - k {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Whether the induced subgraph on `set` is connected in `adj`.
pub fn is_connected(set: &[usize], adj: &[Vec<usize>]) -> bool {
    if set.is_empty() {
        return false;
    }
    if set.len() == 1 {
        return true;
    }
    let inside = |v: usize| set.binary_search(&v).is_ok();
    let mut seen = vec![false; set.len()];
    seen[0] = true;
    let mut stack = vec![set[0]];
    let mut count = 1;
    while let Some(x) = stack.pop() {
        for &y in &adj[x] {
            if inside(y) {
                let pos = set.binary_search(&y).unwrap();
                if !seen[pos] {
                    seen[pos] = true;
                    count += 1;
                    stack.push(y);
                }
            }
        }
    }
    count == set.len()
}
