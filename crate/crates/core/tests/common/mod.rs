#![allow(dead_code)]

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::ln_gamma;

/// Writes to the process stdout directly so the line survives libtest capture.
pub fn emit(line: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

pub fn verdict(id: &str, what: &str, ok: bool, detail: impl std::fmt::Display) {
    emit(&format!("{} [{id}] {what}: {detail}", if ok { "PASS" } else { "FAIL" }));
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (1..=n)
        .map(|i| {
            let mut x = (PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let step = p1 / dp;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

pub struct Composite {
    rule: Vec<(f64, f64)>,
}

impl Composite {
    pub fn new(order: usize) -> Self {
        Self { rule: gauss_legendre(order) }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, lo: f64, hi: f64, panels: usize, mut f: F) -> f64 {
        let h = (hi - lo) / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let a = lo + p as f64 * h;
            let mid = a + 0.5 * h;
            for &(x, w) in &self.rule {
                total += 0.5 * h * w * f(mid + 0.5 * h * x);
            }
        }
        total
    }
}

/// Density of `||Z + theta e_1||^2` with `Z ~ N(0, I_K)`, `K >= 2`, from
/// conditioning on the first coordinate:
/// `f(x) = C_K x^{(K-2)/2} e^{-(x + theta^2)/2} int_{-pi/2}^{pi/2} e^{theta sqrt(x) sin u} cos^{K-2} u du`.
pub struct NcChi2Density {
    k: usize,
    theta: f64,
    log_c: f64,
    quad: Composite,
}

impl NcChi2Density {
    pub fn new(k: usize, theta: f64) -> Self {
        assert!(k >= 2);
        let kf = k as f64;
        let log_c = -0.5 * (2.0 * PI).ln() - 0.5 * (kf - 1.0) * 2f64.ln() - ln_gamma(0.5 * (kf - 1.0));
        Self { k, theta, log_c, quad: Composite::new(8) }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return if self.k == 2 { (-0.5 * self.theta * self.theta).exp() * 0.5 } else { 0.0 };
        }
        let s = self.theta * x.sqrt();
        let e = (self.k - 2) as f64;
        let inner = self.quad.integrate(-0.5 * PI, 0.5 * PI, 48, |u| {
            let c = u.cos().max(0.0);
            (s * (u.sin() - 1.0)).exp() * if e == 0.0 { 1.0 } else { c.powf(e) }
        });
        (self.log_c + 0.5 * e * x.ln() - 0.5 * (x + self.theta * self.theta) + s + inner.ln()).exp()
    }
}

/// `1/2 int |f - g|` by composite quadrature in `y = sqrt(x)`, split at every
/// sign change of `f - g` found on a fine grid.
pub fn tv_quadrature(theta: f64, theta_bar: f64, k: usize) -> f64 {
    let f = NcChi2Density::new(k, theta);
    let g = NcChi2Density::new(k, theta_bar);
    let big = theta.max(theta_bar);
    let kf = k as f64;
    let top = (kf + big * big + 14.0 * (2.0 * kf + 4.0 * big * big).sqrt() + 30.0).sqrt();
    let diff = |y: f64| {
        let x = y * y;
        (f.pdf(x) - g.pdf(x)) * 2.0 * y
    };
    let n = 1500;
    let mut breaks = vec![0.0];
    let mut prev = diff(top / n as f64 * 0.5);
    let mut prev_y = top / n as f64 * 0.5;
    for i in 1..n {
        let y = (i as f64 + 0.5) * top / n as f64;
        let cur = diff(y);
        if prev.signum() != cur.signum() && prev != 0.0 && cur != 0.0 {
            let (mut lo, mut hi) = (prev_y, y);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if diff(mid).signum() == prev.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            breaks.push(0.5 * (lo + hi));
        }
        prev = cur;
        prev_y = y;
    }
    breaks.push(top);
    let quad = Composite::new(8);
    let mut total = 0.0;
    for w in breaks.windows(2) {
        total += quad.integrate(w[0], w[1], 120, diff).abs();
    }
    0.5 * total
}

/// Singular values of a row-major `rows x cols` matrix (`rows >= cols`) by
/// one-sided Jacobi rotations, sorted descending.
pub fn jacobi_singular_values(data: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut a: Vec<Vec<f64>> = (0..cols).map(|j| (0..rows).map(|i| data[i * cols + j]).collect()).collect();
    for _sweep in 0..100 {
        let mut rotated = false;
        for i in 0..cols {
            for j in i + 1..cols {
                let alpha: f64 = a[i].iter().map(|x| x * x).sum();
                let beta: f64 = a[j].iter().map(|x| x * x).sum();
                let gamma: f64 = a[i].iter().zip(&a[j]).map(|(x, y)| x * y).sum();
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = a.split_at_mut(j);
                for (x, y) in left[i].iter_mut().zip(right[0].iter_mut()) {
                    let (xi, yi) = (*x, *y);
                    *x = c * xi - s * yi;
                    *y = s * xi + c * yi;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = a.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// `n x k` matrix with orthonormal columns (column-major), from Gram-Schmidt on Gaussians.
pub fn random_orthonormal<R: Rng>(n: usize, k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(k);
    while q.len() < k {
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        for _ in 0..2 {
            for b in &q {
                let c: f64 = b.iter().zip(&v).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(vi, bi)| *vi -= c * bi);
            }
        }
        let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= nrm);
        q.push(v);
    }
    q
}

/// Row-major `U diag(sigma) V^T` for random orthonormal `U` (`rows x cols`) and
/// `V` (`cols x cols`), returned with the columns of `V`.
pub fn synthetic_matrix<R: Rng>(rows: usize, sigma: &[f64], rng: &mut R) -> (Vec<f64>, Vec<Vec<f64>>) {
    let cols = sigma.len();
    let u = random_orthonormal(rows, cols, rng);
    let v = random_orthonormal(cols, cols, rng);
    let mut a = vec![0.0; rows * cols];
    for k in 0..cols {
        for i in 0..rows {
            let us = u[k][i] * sigma[k];
            for j in 0..cols {
                a[i * cols + j] += us * v[k][j];
            }
        }
    }
    (a, v)
}

/// `||mu_hat^(m) - mu||^2` evaluated term by term.
pub fn direct_strong_error(y: &[f64], lambda: &[f64], mu: &[f64], m: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..mu.len() {
        let est = if i < m { y[i] / lambda[i] } else { 0.0 };
        s += (est - mu[i]) * (est - mu[i]);
    }
    s
}
