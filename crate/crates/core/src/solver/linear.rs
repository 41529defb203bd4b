//! Damped normal-equations solves: dense Cholesky for small problems,
//! block-Jacobi preconditioned conjugate gradients for large ones.

use nalgebra::DVector;

use crate::costs::NormalEquations;
use crate::real::{real, Real};

#[derive(Clone, Copy, Debug)]
pub struct LinearOptions<T: Real> {
    /// Problems at or below this parameter count use the dense path.
    pub dense_threshold: usize,
    /// Relative residual-reduction target for CG.
    pub cg_tol: T,
    pub cg_max_iters: usize,
}

impl<T: Real> Default for LinearOptions<T> {
    fn default() -> Self {
        Self {
            dense_threshold: 600,
            cg_tol: real(1e-4),
            cg_max_iters: 900,
        }
    }
}

/// Marquardt scaling floor relative to the strongest diagonal entry:
/// directions untouched by any residual still get a damping entry on the
/// problem's own scale, so near-null parameters cannot take huge steps.
fn damping_diag<T: Real>(ne: &NormalEquations<T>) -> DVector<T> {
    let diag = ne.diagonal();
    let max = diag
        .iter()
        .fold(T::zero(), |acc, d| acc.max(d.abs()));
    let floor = (max * real(1e-9)).max(real(1e-12));
    diag.map(|d| d.max(floor))
}

/// Solves `(J^T J + lambda * diag) delta = -g`. `None` when the dense
/// factorization fails (the caller then increases lambda).
pub fn solve_damped<T: Real>(
    ne: &NormalEquations<T>,
    lambda: T,
    opts: &LinearOptions<T>,
) -> Option<DVector<T>> {
    let n = ne.layout.n_params();
    let scale = damping_diag(ne);
    if n <= opts.dense_threshold {
        let mut h = ne.dense();
        for k in 0..n {
            h[(k, k)] += lambda * scale[k];
        }
        let chol = nalgebra::Cholesky::new(h)?;
        Some(chol.solve(&(-&ne.gradient)))
    } else {
        Some(pcg(ne, lambda, &scale, opts))
    }
}

/// Preconditioned conjugate gradients on the damped system; deterministic,
/// fixed iteration order.
fn pcg<T: Real>(
    ne: &NormalEquations<T>,
    lambda: T,
    scale: &DVector<T>,
    opts: &LinearOptions<T>,
) -> DVector<T> {
    let n = ne.layout.n_params();
    let precond = ne.block_jacobi(scale, lambda);
    let apply_m = |r: &DVector<T>, z: &mut DVector<T>| {
        z.fill(T::zero());
        for (off, inv) in &precond {
            let dim = inv.nrows();
            let mut seg = DVector::zeros(dim);
            for k in 0..dim {
                seg[k] = r[off + k];
            }
            let out = inv * seg;
            for k in 0..dim {
                z[off + k] = out[k];
            }
        }
    };
    let apply_a = |x: &DVector<T>, y: &mut DVector<T>| {
        ne.matvec(x, y);
        for k in 0..n {
            y[k] += lambda * scale[k] * x[k];
        }
    };

    let b = -&ne.gradient;
    let mut x = DVector::zeros(n);
    let mut r = b.clone();
    let b_norm = b.norm();
    if b_norm == T::zero() {
        return x;
    }
    let mut z = DVector::zeros(n);
    apply_m(&r, &mut z);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    let mut ap = DVector::zeros(n);
    let tol = opts.cg_tol * b_norm;
    for _ in 0..opts.cg_max_iters.min(4 * n.max(1)) {
        if r.norm() <= tol {
            break;
        }
        apply_a(&p, &mut ap);
        let p_ap = p.dot(&ap);
        if p_ap <= T::zero() {
            break; // numerical breakdown; return the current iterate
        }
        let step = rz / p_ap;
        x.axpy(step, &p, T::one());
        r.axpy(-step, &ap, T::one());
        apply_m(&r, &mut z);
        let rz_next = r.dot(&z);
        let beta = rz_next / rz;
        rz = rz_next;
        // p = z + beta p
        p.axpy(T::one(), &z, beta);
    }
    x
}
