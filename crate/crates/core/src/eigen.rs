//! Dense nonsymmetric eigenvalues: balancing, Householder reduction to upper
//! Hessenberg form, then the Francis double-shift QR iteration.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};

/// Iterations allowed per eigenvalue before giving up.
const MAX_ITERATIONS: usize = 60;

/// Square row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    n: usize,
    data: Vec<f64>,
}

impl Dense {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn from_row_major(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n);
        Self { n, data }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    fn at(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n).map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.data)
    }
}

/// Diagonal similarity by powers of two that equalises row and column norms.
/// Returns the scaling factors.
pub fn balance(a: &mut Dense) -> Vec<f64> {
    const RADIX: f64 = 2.0;
    let n = a.n;
    let mut scale = vec![1.0; n];
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a.get(j, i).abs();
                    r += a.get(i, j).abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / RADIX;
                let mut f = 1.0;
                let s = c + r;
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
                    scale[i] *= f;
                    for j in 0..n {
                        *a.at(i, j) *= g;
                    }
                    for j in 0..n {
                        *a.at(j, i) *= f;
                    }
                }
            }
        }
    }
    scale
}

/// Orthogonal similarity to upper Hessenberg form; entries below the first
/// subdiagonal are set to zero.
pub fn hessenberg(a: &mut Dense) {
    let n = a.n;
    if n < 3 {
        return;
    }
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];
    for k in 0..n - 2 {
        let norm = (k + 1..n).map(|i| a.get(i, k).powi(2)).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = a.get(k + 1, k);
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        for i in k + 1..n {
            v[i] = a.get(i, k);
        }
        v[k + 1] -= alpha;
        let vnorm2: f64 = (k + 1..n).map(|i| v[i] * v[i]).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;
        // A <- (I - beta v v^T) A on rows k+1.., columns k..
        for j in k..n {
            w[j] = (k + 1..n).map(|i| v[i] * a.get(i, j)).sum::<f64>() * beta;
        }
        for i in k + 1..n {
            let vi = v[i];
            let row = &mut a.data[i * n..(i + 1) * n];
            for j in k..n {
                row[j] -= vi * w[j];
            }
        }
        // A <- A (I - beta v v^T) on all rows, columns k+1..
        for i in 0..n {
            let row = &mut a.data[i * n..(i + 1) * n];
            let s = (k + 1..n).map(|j| row[j] * v[j]).sum::<f64>() * beta;
            for j in k + 1..n {
                row[j] -= s * v[j];
            }
        }
        a.set(k + 1, k, alpha);
        for i in k + 2..n {
            a.set(i, k, 0.0);
        }
    }
}

/// Eigenvalues of an upper Hessenberg matrix by the shifted QR iteration.
/// The matrix is destroyed.
pub fn hqr(a: &mut Dense) -> Result<Vec<Complex<f64>>> {
    let n = a.n;
    let mut wr = vec![Complex::new(0.0, 0.0); n];
    if n == 0 {
        return Ok(wr);
    }
    let eps = f64::EPSILON;
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a.get(i, j).abs();
        }
    }
    let mut nn = n as isize - 1;
    let mut t = 0.0;
    while nn >= 0 {
        let mut its = 0;
        loop {
            let nu = nn as usize;
            // Look for a single small subdiagonal element.
            let mut l = nu;
            while l > 0 {
                let mut s = a.get(l - 1, l - 1).abs() + a.get(l, l).abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a.get(l, l - 1).abs() <= eps * s {
                    a.set(l, l - 1, 0.0);
                    break;
                }
                l -= 1;
            }
            let mut x = a.get(nu, nu);
            if l == nu {
                wr[nu] = Complex::new(x + t, 0.0);
                nn -= 1;
            } else {
                let mut y = a.get(nu - 1, nu - 1);
                let mut w = a.get(nu, nu - 1) * a.get(nu - 1, nu);
                if l == nu - 1 {
                    let p = 0.5 * (y - x);
                    let q = p * p + w;
                    let mut z = q.abs().sqrt();
                    x += t;
                    if q >= 0.0 {
                        z = p + z.copysign(p);
                        wr[nu - 1] = Complex::new(x + z, 0.0);
                        wr[nu] = Complex::new(if z != 0.0 { x - w / z } else { x + z }, 0.0);
                    } else {
                        wr[nu] = Complex::new(x + p, -z);
                        wr[nu - 1] = Complex::new(x + p, z);
                    }
                    nn -= 2;
                } else {
                    if its == MAX_ITERATIONS {
                        return Err(Error::NoConvergence(its));
                    }
                    if its == 10 || its == 20 || its == 40 {
                        // Exceptional shift.
                        t += x;
                        for i in 0..=nu {
                            *a.at(i, i) -= x;
                        }
                        let s = a.get(nu, nu - 1).abs() + a.get(nu - 1, nu - 2).abs();
                        x = 0.75 * s;
                        y = x;
                        w = -0.4375 * s * s;
                    }
                    its += 1;
                    // Look for two consecutive small subdiagonal elements.
                    let mut m = nu - 2;
                    let (mut p, mut q, mut r);
                    loop {
                        let z = a.get(m, m);
                        let rr = x - z;
                        let ss = y - z;
                        p = (rr * ss - w) / a.get(m + 1, m) + a.get(m, m + 1);
                        q = a.get(m + 1, m + 1) - z - rr - ss;
                        r = a.get(m + 2, m + 1);
                        let s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = a.get(m, m - 1).abs() * (q.abs() + r.abs());
                        let v = p.abs() * (a.get(m - 1, m - 1).abs() + z.abs() + a.get(m + 1, m + 1).abs());
                        if u <= eps * v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in m..nu - 1 {
                        a.set(i + 2, i, 0.0);
                        if i != m {
                            a.set(i + 2, i - 1, 0.0);
                        }
                    }
                    // Double QR step on rows l..=nn and columns m..=nn.
                    for k in m..nu {
                        if k != m {
                            p = a.get(k, k - 1);
                            q = a.get(k + 1, k - 1);
                            r = if k + 1 != nu { a.get(k + 2, k - 1) } else { 0.0 };
                            x = p.abs() + q.abs() + r.abs();
                            if x != 0.0 {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        let s = (p * p + q * q + r * r).sqrt().copysign(p);
                        if s != 0.0 {
                            if k == m {
                                if l != m {
                                    let v = -a.get(k, k - 1);
                                    a.set(k, k - 1, v);
                                }
                            } else {
                                a.set(k, k - 1, -s * x);
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            let z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nu {
                                let mut pp = a.get(k, j) + q * a.get(k + 1, j);
                                if k + 1 != nu {
                                    pp += r * a.get(k + 2, j);
                                    *a.at(k + 2, j) -= pp * z;
                                }
                                *a.at(k + 1, j) -= pp * y;
                                *a.at(k, j) -= pp * x;
                            }
                            let mmin = nu.min(k + 3);
                            for i in l..=mmin {
                                let mut pp = x * a.get(i, k) + y * a.get(i, k + 1);
                                if k + 1 != nu {
                                    pp += z * a.get(i, k + 2);
                                    *a.at(i, k + 2) -= pp * r;
                                }
                                *a.at(i, k + 1) -= pp * q;
                                *a.at(i, k) -= pp;
                            }
                        }
                    }
                }
            }
            if nn < 0 || (l as isize) >= nn - 1 {
                break;
            }
        }
    }
    Ok(wr)
}

/// All eigenvalues of a general real matrix.
pub fn eigenvalues(m: &Dense) -> Result<Vec<Complex<f64>>> {
    let mut a = m.clone();
    balance(&mut a);
    hessenberg(&mut a);
    hqr(&mut a)
}

/// Eigenvalues of `m` given one exact right eigenvector `v`.
///
/// A Householder similarity maps `v` to the first basis vector, so the
/// eigenvalue of `v` becomes the Rayleigh quotient in the corner and the
/// rest of the spectrum comes from the trailing block. Roundoff in the known
/// eigenvalue then stays at the level of `m v` instead of `eps |m|`.
pub fn eigenvalues_deflated(m: &Dense, v: &[f64]) -> Result<Vec<Complex<f64>>> {
    let n = m.n;
    assert_eq!(v.len(), n);
    if n < 2 {
        return eigenvalues(m);
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut w: Vec<f64> = v.iter().map(|x| x / norm).collect();
    // w <- v/|v| + sign(v_0) e_0, then H = I - beta w w^T maps v to -sign e_0.
    w[0] += if w[0] >= 0.0 { 1.0 } else { -1.0 };
    let beta = 2.0 / w.iter().map(|x| x * x).sum::<f64>();
    let mut b = m.clone();
    // B <- B H
    let mw = b.mul_vec(&w);
    for i in 0..n {
        let row = &mut b.data[i * n..(i + 1) * n];
        for j in 0..n {
            row[j] -= beta * mw[i] * w[j];
        }
    }
    // B <- H B
    let mut wb = vec![0.0; n];
    for i in 0..n {
        let wi = w[i];
        for (acc, x) in wb.iter_mut().zip(b.row(i)) {
            *acc += wi * x;
        }
    }
    for i in 0..n {
        let row = &mut b.data[i * n..(i + 1) * n];
        for j in 0..n {
            row[j] -= beta * w[i] * wb[j];
        }
    }
    let trailing = Dense::from_fn(n - 1, |i, j| b.get(i + 1, j + 1));
    let mut ev = eigenvalues(&trailing)?;
    ev.insert(0, Complex::new(b.get(0, 0), 0.0));
    Ok(ev)
}

/// Relative residual `|L v - lambda v| / (|L| |v|)` of the eigenvector
/// obtained by inverse iteration at a slightly perturbed shift.
pub fn residual(m: &Dense, lambda: Complex<f64>) -> f64 {
    let n = m.n;
    let norm = m.norm_inf().max(f64::MIN_POSITIVE);
    let shift = lambda + Complex::new(norm * 1e-10, norm * 1e-10);
    let a = DMatrix::from_fn(n, n, |i, j| {
        let v = Complex::new(m.get(i, j), 0.0);
        if i == j {
            v - shift
        } else {
            v
        }
    });
    let lu = a.lu();
    let mut v = nalgebra::DVector::from_fn(n, |i, _| Complex::new(1.0 + (i % 7) as f64 * 0.1, (i % 3) as f64 * 0.1));
    for _ in 0..3 {
        v = match lu.solve(&v) {
            Some(x) => x,
            None => return 0.0,
        };
        let s = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if !(s > 0.0 && s.is_finite()) {
            return f64::INFINITY;
        }
        v /= Complex::new(s, 0.0);
    }
    let vnorm = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let lv: Complex<f64> = m.row(i).iter().zip(v.iter()).map(|(a, x)| *x * *a).sum();
        worst = worst.max((lv - lambda * v[i]).norm());
    }
    worst / (norm * vnorm)
}
