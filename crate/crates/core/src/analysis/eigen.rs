//! Eigenvalues of a small dense real matrix.
//!
//! The matrix is balanced, reduced to upper Hessenberg form by stabilized
//! elementary similarity transforms, and then deflated with Francis
//! double-shift QR sweeps. Exceptional shifts are applied after 10 and 20
//! stalled sweeps on the same block.

use alloc::vec::Vec;

use super::Matrix;
use crate::{Error, Result};

/// Per-eigenvalue sweep cap.
pub const MAX_SWEEPS: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub fn modulus(self) -> f64 {
        libm::hypot(self.re, self.im)
    }

    pub fn distance(self, other: Complex) -> f64 {
        libm::hypot(self.re - other.re, self.im - other.im)
    }
}

pub fn eigenvalues(m: &Matrix) -> Result<Vec<Complex>> {
    eigenvalues_with_cap(m, MAX_SWEEPS)
}

pub fn eigenvalues_with_cap(m: &Matrix, max_sweeps: usize) -> Result<Vec<Complex>> {
    if m.rows() != m.cols() {
        return Err(Error::DimensionMismatch {
            expected: m.rows(),
            got: m.cols(),
        });
    }
    let mut a = m.clone();
    balance(&mut a);
    hessenberg(&mut a);
    hessenberg_qr(&mut a, max_sweeps)
}

/// Scales rows and columns by powers of two so that their norms are comparable.
fn balance(a: &mut Matrix) {
    const RADIX: f64 = 2.0;
    let n = a.rows();
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] *= g;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

/// Gaussian elimination with pivoting, applied as a similarity transform.
/// Entries below the subdiagonal are zeroed on return.
fn hessenberg(a: &mut Matrix) {
    let n = a.rows();
    for m in 1..n.saturating_sub(1) {
        let mut pivot = 0.0f64;
        let mut p = m;
        for j in m..n {
            if a[(j, m - 1)].abs() > pivot.abs() {
                pivot = a[(j, m - 1)];
                p = j;
            }
        }
        if p != m {
            for j in (m - 1)..n {
                let t = a[(p, j)];
                a[(p, j)] = a[(m, j)];
                a[(m, j)] = t;
            }
            for j in 0..n {
                let t = a[(j, p)];
                a[(j, p)] = a[(j, m)];
                a[(j, m)] = t;
            }
        }
        if pivot != 0.0 {
            for i in (m + 1)..n {
                let mut y = a[(i, m - 1)];
                if y != 0.0 {
                    y /= pivot;
                    a[(i, m - 1)] = 0.0;
                    for j in m..n {
                        a[(i, j)] -= y * a[(m, j)];
                    }
                    for j in 0..n {
                        a[(j, m)] += y * a[(j, i)];
                    }
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..i.saturating_sub(1) {
            a[(i, j)] = 0.0;
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix (destroyed).
///
/// Written with 1-based block indices `l..=nn` to keep the deflation
/// bookkeeping readable; `h(i, j)` maps to `a[(i − 1, j − 1)]`.
fn hessenberg_qr(a: &mut Matrix, max_sweeps: usize) -> Result<Vec<Complex>> {
    let n = a.rows();
    let mut wr = alloc::vec![0.0; n + 1];
    let mut wi = alloc::vec![0.0; n + 1];

    macro_rules! h {
        ($i:expr, $j:expr) => {
            a[($i - 1, $j - 1)]
        };
    }

    let mut anorm = 0.0;
    for i in 1..=n {
        for j in i.saturating_sub(1).max(1)..=n {
            anorm += h!(i, j).abs();
        }
    }

    let mut nn = n;
    let mut t = 0.0;
    while nn >= 1 {
        let mut its = 0;
        loop {
            // Look for a negligible subdiagonal element to split the block.
            let mut l = nn;
            while l >= 2 {
                let mut s = h!(l - 1, l - 1).abs() + h!(l, l).abs();
                if s == 0.0 {
                    s = anorm;
                }
                if h!(l, l - 1).abs() + s == s {
                    h!(l, l - 1) = 0.0;
                    break;
                }
                l -= 1;
            }
            let l = l.max(1);
            let mut x = h!(nn, nn);
            if l == nn {
                // one root
                wr[nn] = x + t;
                wi[nn] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = h!(nn - 1, nn - 1);
            let mut w = h!(nn, nn - 1) * h!(nn - 1, nn);
            if l == nn - 1 {
                // two roots
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let mut z = libm::sqrt(q.abs());
                x += t;
                if q >= 0.0 {
                    z = p + libm::copysign(z, p);
                    wr[nn - 1] = x + z;
                    wr[nn] = if z != 0.0 { x - w / z } else { x + z };
                    wi[nn - 1] = 0.0;
                    wi[nn] = 0.0;
                } else {
                    wr[nn - 1] = x + p;
                    wr[nn] = x + p;
                    wi[nn - 1] = -z;
                    wi[nn] = z;
                }
                nn = nn.saturating_sub(2);
                break;
            }

            if its == max_sweeps {
                return Err(Error::NoConvergence(max_sweeps));
            }
            if its == 10 || its == 20 {
                // exceptional shift
                t += x;
                for i in 1..=nn {
                    h!(i, i) -= x;
                }
                let s = h!(nn, nn - 1).abs() + h!(nn - 1, nn - 2).abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;

            // Find two consecutive small subdiagonal elements.
            let mut m = nn - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = h!(m, m);
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / h!(m + 1, m) + h!(m, m + 1);
                q = h!(m + 1, m + 1) - z - rr - ss;
                r = h!(m + 2, m + 1);
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = h!(m, m - 1).abs() * (q.abs() + r.abs());
                let v = p.abs() * (h!(m - 1, m - 1).abs() + z.abs() + h!(m + 1, m + 1).abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=nn {
                h!(i, i - 2) = 0.0;
                if i != m + 2 {
                    h!(i, i - 3) = 0.0;
                }
            }

            // Double QR step on rows l..nn, columns m..nn.
            for k in m..nn {
                if k != m {
                    p = h!(k, k - 1);
                    q = h!(k + 1, k - 1);
                    r = if k != nn - 1 { h!(k + 2, k - 1) } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = libm::copysign(libm::sqrt(p * p + q * q + r * r), p);
                if s == 0.0 {
                    continue;
                }
                if k == m {
                    if l != m {
                        h!(k, k - 1) = -h!(k, k - 1);
                    }
                } else {
                    h!(k, k - 1) = -s * x;
                }
                p += s;
                x = p / s;
                y = q / s;
                let z = r / s;
                q /= p;
                r /= p;
                for j in k..=nn {
                    let mut pp = h!(k, j) + q * h!(k + 1, j);
                    if k != nn - 1 {
                        pp += r * h!(k + 2, j);
                        h!(k + 2, j) -= pp * z;
                    }
                    h!(k + 1, j) -= pp * y;
                    h!(k, j) -= pp * x;
                }
                let mmin = if nn < k + 3 { nn } else { k + 3 };
                for i in l..=mmin {
                    let mut pp = x * h!(i, k) + y * h!(i, k + 1);
                    if k != nn - 1 {
                        pp += z * h!(i, k + 2);
                        h!(i, k + 2) -= pp * r;
                    }
                    h!(i, k + 1) -= pp * q;
                    h!(i, k) -= pp;
                }
            }
            if l >= nn - 1 {
                break;
            }
        }
    }
    Ok((1..=n).map(|i| Complex::new(wr[i], wi[i])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted_re(mut v: Vec<Complex>) -> Vec<f64> {
        v.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        v.into_iter().map(|c| c.re).collect()
    }

    #[test]
    fn diagonal_matrix() {
        let m = Matrix::from_rows(&[
            &[3.0, 0.0, 0.0, 0.0],
            &[0.0, -1.5, 0.0, 0.0],
            &[0.0, 0.0, 0.25, 0.0],
            &[0.0, 0.0, 0.0, 7.0],
        ]);
        let ev = eigenvalues(&m).unwrap();
        assert!(ev.iter().all(|c| c.im == 0.0));
        assert_eq!(sorted_re(ev), [-1.5, 0.25, 3.0, 7.0]);
    }

    #[test]
    fn rotation_has_complex_pair() {
        let m = Matrix::from_rows(&[&[0.0, -2.0], &[2.0, 0.0]]);
        let mut ev = eigenvalues(&m).unwrap();
        ev.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        assert!(ev[0].distance(Complex::new(0.0, -2.0)) < 1e-14);
        assert!(ev[1].distance(Complex::new(0.0, 2.0)) < 1e-14);
    }

    #[test]
    fn companion_matrix_roots() {
        // (λ−1)(λ−2)(λ−3)(λ+4) = λ⁴ − 2λ³ − 13λ² + 38λ − 24
        let m = Matrix::from_rows(&[
            &[2.0, 13.0, -38.0, 24.0],
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, 0.0],
        ]);
        let ev = sorted_re(eigenvalues(&m).unwrap());
        for (got, want) in ev.iter().zip([-4.0, 1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
    }

    #[test]
    fn trivial_sizes() {
        assert!(eigenvalues(&Matrix::zeros(0, 0)).unwrap().is_empty());
        let one = eigenvalues(&Matrix::from_rows(&[&[5.0]])).unwrap();
        assert_eq!(one, [Complex::new(5.0, 0.0)]);
        assert!(eigenvalues(&Matrix::zeros(2, 3)).is_err());
    }
}
