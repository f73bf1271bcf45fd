//! Direct summation of both relations for rank-1 targets, written from the
//! displayed formulas with bitmask subsets and integer degree loops.

use std::collections::HashMap;

use opengw::ring::{q, Q};

pub struct Rank1 {
    /// Maslov index of the generator (area 1).
    pub mu: i64,
    /// `q(L) = c g` for the closed generator `L`.
    pub c: i64,
    /// `(-1)^{w2.L}`.
    pub w2: i64,
    pub y_nonzero: bool,
    pub degrees: Vec<i64>,
    /// Restriction of each class as a dense basis vector.
    pub restriction: Vec<Vec<Q>>,
    pub basis_len: usize,
    pub ginv: Vec<Vec<Q>>,
    pub closed: HashMap<(i64, Vec<usize>), Q>,
    pub open: HashMap<(i64, Vec<usize>), Q>,
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort();
    v
}

fn choose(n: i64, m: i64) -> Q {
    if m < 0 || m > n {
        return q(0);
    }
    let mut num: i128 = 1;
    let mut den: i128 = 1;
    for i in 0..m {
        num *= (n - i) as i128;
        den *= (i + 1) as i128;
    }
    q((num / den) as i64)
}

impl Rank1 {
    pub fn kb(&self, beta: i64, s: &[usize]) -> Option<i64> {
        let t = self.mu * beta - s.iter().map(|&c| self.degrees[c] - 2).sum::<i64>();
        if t < 0 || t % 2 != 0 {
            None
        } else {
            Some(t / 2)
        }
    }

    pub fn bracket(&self, beta: i64, s: &[usize]) -> Q {
        let Some(k) = self.kb(beta, s) else { return q(0) };
        if s.contains(&0) {
            return if beta == 0 && k == 1 && s.len() == 1 { q(-1) } else { q(0) };
        }
        if beta == 0 && (k > 0 || s.is_empty()) {
            return q(0);
        }
        if k == 0 && self.y_nonzero && beta % self.c == 0 {
            return q(0);
        }
        self.open.get(&(beta, sorted(s.to_vec()))).cloned().unwrap_or_else(|| q(0))
    }

    fn closed_inv(&self, b: i64, rel: &[usize], i: usize) -> Q {
        // expand each restriction coordinate by coordinate
        let mut total = q(0);
        let n = self.basis_len;
        let mut idx = vec![0usize; rel.len()];
        loop {
            let mut coeff = q(1);
            let mut ins = vec![i];
            for (p, &c) in rel.iter().enumerate() {
                coeff *= self.restriction[c][idx[p]].clone();
                ins.push(idx[p]);
            }
            if coeff != q(0) {
                total += coeff * self.closed.get(&(b, sorted(ins))).cloned().unwrap_or_else(|| q(0));
            }
            let mut p = 0;
            while p < idx.len() && idx[p] + 1 == n {
                idx[p] = 0;
                p += 1;
            }
            if p == idx.len() {
                break;
            }
            idx[p] += 1;
        }
        total
    }

    fn split(gamma: &[usize], mask: u32) -> (Vec<usize>, Vec<usize>) {
        let mut i = Vec::new();
        let mut j = Vec::new();
        for (p, &g) in gamma.iter().enumerate() {
            if mask >> p & 1 == 1 {
                i.push(g);
            } else {
                j.push(g);
            }
        }
        (i, j)
    }

    /// Masks of `I` (bit p for position p+1) containing position 1, with
    /// the given positions forced in or out.
    fn masks(l: usize, inn: &[usize], out: &[usize]) -> Vec<u32> {
        (0u32..1 << l)
            .filter(|m| m & 1 == 1)
            .filter(|m| inn.iter().all(|&p| m >> (p - 1) & 1 == 1))
            .filter(|m| out.iter().all(|&p| m >> (p - 1) & 1 == 0))
            .collect()
    }

    fn closed_side(&self, beta: i64, gamma: &[usize], inn: &[usize], out: &[usize]) -> Q {
        let mut total = q(0);
        for mask in Self::masks(gamma.len(), inn, out) {
            let (gi, gj) = Self::split(gamma, mask);
            let mut b = 0;
            while b * self.c <= beta {
                let bp = beta - b * self.c;
                for i in 0..self.basis_len {
                    for j in 0..self.basis_len {
                        if self.ginv[i][j] == q(0) {
                            continue;
                        }
                        let mut ins = gj.clone();
                        ins.push(j);
                        total += self.closed_inv(b, &gi, i) * self.ginv[i][j].clone() * self.bracket(bp, &ins);
                    }
                }
                b += 1;
            }
        }
        total
    }

    fn open_side(&self, beta: i64, gamma: &[usize], inn: &[usize], out: &[usize], top: i64, shift: i64) -> Q {
        let mut total = q(0);
        for mask in Self::masks(gamma.len(), inn, out) {
            let (gi, gj) = Self::split(gamma, mask);
            for b1 in 0..=beta {
                let Some(ki) = self.kb(b1, &gi) else { continue };
                total += choose(top, ki - shift) * self.bracket(b1, &gi) * self.bracket(beta - b1, &gj);
            }
        }
        total
    }

    pub fn first(&self, beta: i64, gamma: &[usize]) -> Q {
        let k = self.kb(beta, gamma).unwrap() - 1;
        self.closed_side(beta, gamma, &[2], &[]) - self.open_side(beta, gamma, &[2], &[], k - 1, 0)
            + self.open_side(beta, gamma, &[], &[2], k - 1, 1)
    }

    pub fn second(&self, beta: i64, gamma: &[usize]) -> Q {
        let k = self.kb(beta, gamma).unwrap() - 1;
        let lhs = self.closed_side(beta, gamma, &[2], &[3]) - self.open_side(beta, gamma, &[2], &[3], k, 0);
        let rhs = self.closed_side(beta, gamma, &[3], &[2]) - self.open_side(beta, gamma, &[3], &[2], k, 0);
        lhs - rhs
    }
}
