//! Null spaces: exact (fraction-free elimination over ℤ) and floating-point (SVD).

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::exact::Q;

/// Row echelon data from fraction-free elimination.
#[derive(Debug, Clone)]
pub struct Echelon {
    pub rank: usize,
    /// Pivot column of each nonzero row, in the caller's column order.
    pub pivots: Vec<usize>,
    rows: Vec<Vec<BigInt>>,
    cols: usize,
}

fn integer_rows(m: &[Vec<Q>]) -> Vec<Vec<BigInt>> {
    m.iter()
        .map(|row| {
            let lcm = row.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
            row.iter().map(|c| (c * Q::from_integer(lcm.clone())).to_integer()).collect()
        })
        .collect()
}

/// Bareiss elimination. `order` lists the columns in the order they are
/// considered for pivots; it must be a permutation of `0..cols`.
pub fn echelon(m: &[Vec<Q>], cols: usize, order: &[usize]) -> Echelon {
    let mut a = integer_rows(m);
    let nrows = a.len();
    let mut prev = BigInt::one();
    let mut r = 0;
    let mut pivots = Vec::new();
    for &c in order {
        if r == nrows {
            break;
        }
        let Some(p) = (r..nrows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        for i in r + 1..nrows {
            for j in 0..cols {
                if j == c {
                    continue;
                }
                let v = (&a[r][c] * &a[i][j] - &a[i][c] * &a[r][j]) / &prev;
                a[i][j] = v;
            }
            a[i][c] = BigInt::zero();
        }
        // rows above the pivot row are untouched, so the Bareiss divisor stays exact
        prev = a[r][c].clone();
        pivots.push(c);
        r += 1;
    }
    a.truncate(r);
    Echelon { rank: r, pivots, rows: a, cols }
}

impl Echelon {
    /// One basis vector per free column, in `order`; each has a 1 at its free
    /// column and 0 at every other free column.
    pub fn nullspace(&self, order: &[usize]) -> Vec<Vec<Q>> {
        let free: Vec<usize> = order.iter().copied().filter(|c| !self.pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut x = vec![Q::zero(); self.cols];
                x[f] = Q::one();
                // back substitution from the last pivot row
                for (row, &pc) in self.rows.iter().zip(&self.pivots).rev() {
                    let mut s = Q::zero();
                    for j in 0..self.cols {
                        if j != pc && !row[j].is_zero() {
                            s += Q::from_integer(row[j].clone()) * &x[j];
                        }
                    }
                    x[pc] = -s / Q::from_integer(row[pc].clone());
                }
                x
            })
            .collect()
    }
}

/// Exact null space basis with pivots chosen in natural column order.
pub fn nullspace(m: &[Vec<Q>], cols: usize) -> Vec<Vec<Q>> {
    let order: Vec<usize> = (0..cols).collect();
    echelon(m, cols, &order).nullspace(&order)
}

pub fn rank(m: &[Vec<Q>], cols: usize) -> usize {
    let order: Vec<usize> = (0..cols).collect();
    echelon(m, cols, &order).rank
}

/// Numerical rank from singular values above `threshold * σ_max`.
pub fn float_rank(m: &[Vec<f64>], cols: usize, threshold: f64) -> usize {
    if m.is_empty() || cols == 0 {
        return 0;
    }
    let nrows = m.len();
    let flat: Vec<f64> = m.iter().flat_map(|r| r.iter().copied()).collect();
    let dm = DMatrix::from_row_slice(nrows, cols, &flat);
    let sv = dm.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > threshold * smax).count()
}

/// Rescales a rational vector to a primitive integer vector whose first
/// nonzero entry is positive.
pub fn primitive(v: &[Q]) -> Vec<BigInt> {
    let lcm = v.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let ints: Vec<BigInt> = v.iter().map(|c| (c * Q::from_integer(lcm.clone())).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, c| acc.gcd(c));
    if g.is_zero() {
        return ints;
    }
    let sign = ints.iter().find(|c| !c.is_zero()).map(|c| c.signum()).unwrap_or(BigInt::one());
    ints.into_iter().map(|c| c / &g * &sign).collect()
}

/// Exact dot product.
pub fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).map(|(x, y)| x * y).fold(Q::zero(), |acc, v| acc + v)
}
