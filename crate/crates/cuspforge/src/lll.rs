//! LLL reduction of integer bases with floating Gram-Schmidt data.

use rug::{Float, Integer};

/// Reduce the rows of `basis` in place (delta = 0.99). Rows must be independent.
#[allow(clippy::needless_range_loop)]
pub fn reduce(basis: &mut [Vec<Integer>], prec: u32) {
    let n = basis.len();
    if n < 2 {
        return;
    }
    let delta = Float::with_val(prec, 0.99);
    let half = Float::with_val(prec, 0.5);
    let mut mu = vec![vec![Float::new(prec); n]; n];
    let mut bb = vec![Float::new(prec); n];
    let mut star: Vec<Vec<Float>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut v: Vec<Float> = basis[i].iter().map(|x| Float::with_val(prec, x)).collect();
        for j in 0..i {
            let mut d = Float::new(prec);
            for (x, y) in basis[i].iter().zip(&star[j]) {
                d += Float::with_val(prec, x) * y;
            }
            mu[i][j] = d / &bb[j];
            for (vk, sk) in v.iter_mut().zip(&star[j]) {
                *vk -= Float::with_val(prec, &mu[i][j] * sk);
            }
        }
        bb[i] = v.iter().fold(Float::new(prec), |acc, x| acc + Float::with_val(prec, x * x));
        star.push(v);
    }
    drop(star);

    let redi = |basis: &mut [Vec<Integer>], mu: &mut [Vec<Float>], k: usize, l: usize| {
        if Float::with_val(prec, mu[k][l].abs_ref()) > half {
            let q = Float::with_val(prec, mu[k][l].round_ref());
            let qi = q.to_integer().expect("finite");
            let (lo, hi) = basis.split_at_mut(k);
            for (x, y) in hi[0].iter_mut().zip(&lo[l]) {
                *x -= Integer::from(&qi * y);
            }
            mu[k][l] -= &q;
            for i in 0..l {
                let t = Float::with_val(prec, &q * &mu[l][i]);
                mu[k][i] -= t;
            }
        }
    };

    let mut k = 1;
    let mut guard = 0usize;
    while k < n {
        guard += 1;
        if guard > 2_000_000 {
            break;
        }
        redi(basis, &mut mu, k, k - 1);
        let m2 = Float::with_val(prec, mu[k][k - 1].square_ref());
        let lovasz = Float::with_val(prec, &delta - &m2) * &bb[k - 1];
        if bb[k] < lovasz {
            basis.swap(k, k - 1);
            for j in 0..k - 1 {
                let t = mu[k][j].clone();
                mu[k][j] = mu[k - 1][j].clone();
                mu[k - 1][j] = t;
            }
            let m = mu[k][k - 1].clone();
            let bn = Float::with_val(prec, &bb[k] + Float::with_val(prec, m.square_ref()) * &bb[k - 1]);
            if bn.is_zero() {
                break;
            }
            mu[k][k - 1] = Float::with_val(prec, &m * &bb[k - 1]) / &bn;
            bb[k] = Float::with_val(prec, &bb[k - 1] * &bb[k]) / &bn;
            bb[k - 1] = bn;
            for i in k + 1..n {
                let t = mu[i][k].clone();
                mu[i][k] = Float::with_val(prec, &mu[i][k - 1] - Float::with_val(prec, &m * &t));
                mu[i][k - 1] = t + Float::with_val(prec, &mu[k][k - 1] * &mu[i][k]);
            }
            k = (k - 1).max(1);
        } else {
            for l in (0..k - 1).rev() {
                redi(basis, &mut mu, k, l);
            }
            k += 1;
        }
    }
}

/// Squared Euclidean length.
pub fn norm2(v: &[Integer]) -> Integer {
    v.iter().map(|x| Integer::from(x * x)).sum()
}
