//! Small matrix-free solvers used by the implicit steps.

/// Solve a tridiagonal system: `sub[i]·x[i−1] + diag[i]·x[i] + sup[i]·x[i+1] = rhs[i]`
/// (`sub[0]` and `sup[n−1]` ignored). Thomas algorithm, no pivoting; meant
/// for diagonally dominant systems.
pub(crate) fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i] * c[i - 1];
        c[i] = if i + 1 < n { sup[i] / m } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / m;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    x
}

/// Solve a cyclic tridiagonal system where row 0 also couples to `x[n−1]`
/// through `sub[0]` and row `n−1` couples to `x[0]` through `sup[n−1]`.
/// Sherman–Morrison correction of the open-chain solve.
pub(crate) fn solve_cyclic_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let top_right = sub[0];
    let bottom_left = sup[n - 1];
    let gamma = -diag[0];
    let mut bb = diag.to_vec();
    bb[0] = diag[0] - gamma;
    bb[n - 1] = diag[n - 1] - bottom_left * top_right / gamma;
    let x = solve_tridiagonal(sub, &bb, sup, rhs);
    let mut w = vec![0.0; n];
    w[0] = gamma;
    w[n - 1] = bottom_left;
    let z = solve_tridiagonal(sub, &bb, sup, &w);
    let fact = (x[0] + top_right * x[n - 1] / gamma) / (1.0 + z[0] + top_right * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Outcome of an iterative linear solve.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Krylov {
    pub iterations: usize,
    pub converged: bool,
}

/// Jacobi-preconditioned BiCGSTAB for a general operator.
pub(crate) fn bicgstab(
    apply: impl Fn(&[f64], &mut [f64]),
    diag: &[f64],
    rhs: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> Krylov {
    let n = rhs.len();
    let precond = |v: &[f64], out: &mut [f64]| {
        for i in 0..n {
            out[i] = v[i] / diag[i];
        }
    };
    let mut ax = vec![0.0; n];
    apply(x, &mut ax);
    let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let r_hat = r.clone();
    let target = rel_tol * norm(rhs).max(f64::MIN_POSITIVE);
    if norm(&r) <= target {
        return Krylov { iterations: 0, converged: true };
    }
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    for it in 1..=max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 || omega == 0.0 {
            return Krylov { iterations: it, converged: false };
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        precond(&p, &mut y);
        apply(&y, &mut v);
        let denom = dot(&r_hat, &v);
        if denom == 0.0 {
            return Krylov { iterations: it, converged: false };
        }
        alpha = rho / denom;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) <= target {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            return Krylov { iterations: it, converged: true };
        }
        precond(&s, &mut z);
        apply(&z, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * y[i] + omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        if norm(&r) <= target {
            return Krylov { iterations: it, converged: true };
        }
    }
    Krylov { iterations: max_iter, converged: false }
}

/// Jacobi-preconditioned conjugate gradients for a symmetric positive
/// definite operator.
pub(crate) fn conjugate_gradient(
    apply: impl Fn(&[f64], &mut [f64]),
    diag: &[f64],
    rhs: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> Krylov {
    let n = rhs.len();
    let mut ax = vec![0.0; n];
    apply(x, &mut ax);
    let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let target = rel_tol * norm(rhs).max(f64::MIN_POSITIVE);
    if norm(&r) <= target {
        return Krylov { iterations: 0, converged: true };
    }
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(a, d)| a / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    for it in 1..=max_iter {
        apply(&p, &mut q);
        let pq = dot(&p, &q);
        if pq <= 0.0 {
            return Krylov { iterations: it, converged: false };
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        if norm(&r) <= target {
            return Krylov { iterations: it, converged: true };
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Krylov { iterations: max_iter, converged: false }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cyclic_apply(sub: &[f64], diag: &[f64], sup: &[f64], x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n).map(|i| sub[i] * x[(i + n - 1) % n] + diag[i] * x[i] + sup[i] * x[(i + 1) % n]).collect()
    }

    #[test]
    fn cyclic_solve_recovers_solution() {
        let n = 17;
        let sub: Vec<f64> = (0..n).map(|i| -1.0 - 0.1 * (i as f64).sin()).collect();
        let sup: Vec<f64> = (0..n).map(|i| -0.7 - 0.05 * (i as f64).cos()).collect();
        let diag: Vec<f64> = (0..n).map(|i| 2.5 + 0.01 * i as f64).collect();
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).cos()).collect();
        let rhs = cyclic_apply(&sub, &diag, &sup, &x_true);
        let x = solve_cyclic_tridiagonal(&sub, &diag, &sup, &rhs);
        for (a, b) in x.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn krylov_solvers_agree() {
        let n = 40;
        let sub = vec![-1.0; n];
        let sup = vec![-1.0; n];
        let diag = vec![2.3; n];
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.2).sin()).collect();
        let rhs = cyclic_apply(&sub, &diag, &sup, &x_true);
        let apply = |x: &[f64], out: &mut [f64]| out.copy_from_slice(&cyclic_apply(&sub, &diag, &sup, x));
        let mut x1 = vec![0.0; n];
        assert!(conjugate_gradient(apply, &diag, &rhs, &mut x1, 1e-13, 500).converged);
        let mut x2 = vec![0.0; n];
        assert!(bicgstab(apply, &diag, &rhs, &mut x2, 1e-13, 500).converged);
        for i in 0..n {
            assert!((x1[i] - x_true[i]).abs() < 1e-10);
            assert!((x2[i] - x_true[i]).abs() < 1e-10);
        }
    }
}
