use crate::rational::Rational;

/// Sorted `(index, value)` pairs with no zero values.
pub(crate) type SparseVec = Vec<(usize, Rational)>;

pub(crate) fn normalize(mut v: Vec<(usize, Rational)>) -> SparseVec {
    v.sort_by_key(|(j, _)| *j);
    let mut out: SparseVec = Vec::with_capacity(v.len());
    for (j, c) in v {
        match out.last_mut() {
            Some((k, acc)) if *k == j => *acc += c,
            _ => out.push((j, c)),
        }
    }
    out.retain(|(_, c)| !c.is_zero());
    out
}

pub(crate) fn get(v: &SparseVec, j: usize) -> Option<&Rational> {
    v.binary_search_by_key(&j, |(k, _)| *k).ok().map(|i| &v[i].1)
}

/// `a + alpha * b`.
pub(crate) fn axpy(a: &SparseVec, alpha: &Rational, b: &SparseVec) -> SparseVec {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut k) = (0, 0);
    while i < a.len() || k < b.len() {
        let ja = a.get(i).map(|p| p.0).unwrap_or(usize::MAX);
        let jb = b.get(k).map(|p| p.0).unwrap_or(usize::MAX);
        if ja < jb {
            out.push(a[i].clone());
            i += 1;
        } else if jb < ja {
            out.push((jb, alpha * &b[k].1));
            k += 1;
        } else {
            let v = &a[i].1 + &(alpha * &b[k].1);
            if !v.is_zero() {
                out.push((ja, v));
            }
            i += 1;
            k += 1;
        }
    }
    out
}

pub(crate) fn scale(v: &mut SparseVec, alpha: &Rational) {
    for (_, c) in v.iter_mut() {
        *c = &*c * alpha;
    }
}
