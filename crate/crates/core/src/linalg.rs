//! Banded complex linear algebra used by the resolvent solver.

use num_traits::Zero;

use crate::scalar::{Real, C};

/// Factorization outcome of a tridiagonal solve.
#[derive(Clone, Debug)]
pub struct TridiagonalSolve<T> {
    pub solution: Vec<C<T>>,
    /// Smallest `|u_ii|` of the pivoted LU factor.
    pub min_pivot: T,
    /// Largest row 1-norm of the input matrix.
    pub scale: T,
}

/// Solve a tridiagonal system with partial pivoting (LAPACK `gtsv` scheme).
///
/// `sub[i]` couples row `i+1` to column `i`; `sup[i]` couples row `i` to
/// column `i+1`. Returns `None` when an exactly zero pivot occurs.
pub fn solve_tridiagonal<T: Real>(
    sub: &[C<T>],
    diag: &[C<T>],
    sup: &[C<T>],
    rhs: &[C<T>],
) -> Option<TridiagonalSolve<T>> {
    let n = diag.len();
    assert!(n >= 1 && sub.len() + 1 == n && sup.len() + 1 == n && rhs.len() == n);
    let scale = (0..n)
        .map(|i| {
            let mut s = diag[i].norm();
            if i > 0 {
                s += sub[i - 1].norm();
            }
            if i + 1 < n {
                s += sup[i].norm();
            }
            s
        })
        .fold(T::zero(), T::max);
    let mut d = diag.to_vec();
    let mut dl = sub.to_vec();
    let mut du = sup.to_vec();
    let mut b = rhs.to_vec();
    let cabs1 = |z: C<T>| z.re.abs() + z.im.abs();

    for i in 0..n.saturating_sub(1) {
        if cabs1(d[i]) >= cabs1(dl[i]) {
            if d[i].is_zero() {
                return None;
            }
            let mult = dl[i] / d[i];
            d[i + 1] -= mult * du[i];
            b[i + 1] = b[i + 1] - mult * b[i];
            dl[i] = C::zero();
        } else {
            let mult = d[i] / dl[i];
            d[i] = dl[i];
            let temp = d[i + 1];
            d[i + 1] = du[i] - mult * temp;
            if i + 2 < n {
                dl[i] = du[i + 1];
                du[i + 1] = -mult * dl[i];
            } else {
                dl[i] = C::zero();
            }
            du[i] = temp;
            let tb = b[i];
            b[i] = b[i + 1];
            b[i + 1] = tb - mult * b[i + 1];
        }
    }
    if d[n - 1].is_zero() {
        return None;
    }
    // dl now holds the second superdiagonal of U
    b[n - 1] /= d[n - 1];
    if n > 1 {
        b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        b[i] = (b[i] - du[i] * b[i + 1] - dl[i] * b[i + 2]) / d[i];
    }
    let min_pivot = d.iter().fold(T::infinity(), |m, v| m.min(v.norm()));
    Some(TridiagonalSolve { solution: b, min_pivot, scale })
}

/// Upper-triangular factor `R` (two superdiagonals) of the thin QR
/// decomposition of a tall `(n+2) × n` matrix whose column `k` has the
/// entries `top[k]`, `mid[k]`, `bot[k]` on rows `k`, `k+1`, `k+2`.
#[derive(Clone, Debug)]
pub struct TallBandQr<T> {
    r0: Vec<C<T>>,
    r1: Vec<C<T>>,
    r2: Vec<C<T>>,
}

impl<T: Real> TallBandQr<T> {
    pub fn factor(top: &[C<T>], mid: &[C<T>], bot: &[C<T>]) -> Self {
        let n = top.len();
        assert!(n >= 1 && mid.len() == n && bot.len() == n);
        // entry of original row j at column col
        let entry = |j: usize, col: usize| -> C<T> {
            if col >= n || col > j || j > col + 2 {
                return C::zero();
            }
            match j - col {
                0 => top[col],
                1 => mid[col],
                _ => bot[col],
            }
        };
        let row = |j: usize, k: usize| -> [C<T>; 3] { [entry(j, k), entry(j, k + 1), entry(j, k + 2)] };

        let mut r0 = vec![C::zero(); n];
        let mut r1 = vec![C::zero(); n];
        let mut r2 = vec![C::zero(); n];
        // working rows k, k+1, k+2 over columns k, k+1, k+2
        let mut w0 = row(0, 0);
        let mut w1 = row(1, 0);
        let mut w2 = row(2, 0);
        for k in 0..n {
            givens_eliminate(&mut w0, &mut w1);
            givens_eliminate(&mut w0, &mut w2);
            r0[k] = w0[0];
            r1[k] = w0[1];
            r2[k] = w0[2];
            w0 = [w1[1], w1[2], C::zero()];
            w1 = [w2[1], w2[2], C::zero()];
            w2 = row(k + 3, k + 1);
        }
        Self { r0, r1, r2 }
    }

    pub fn len(&self) -> usize {
        self.r0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r0.is_empty()
    }

    pub fn diagonal(&self) -> &[C<T>] {
        &self.r0
    }

    /// `R x`.
    pub fn apply(&self, x: &[C<T>]) -> Vec<C<T>> {
        let n = self.len();
        (0..n)
            .map(|k| {
                let mut s = self.r0[k] * x[k];
                if k + 1 < n {
                    s += self.r1[k] * x[k + 1];
                }
                if k + 2 < n {
                    s += self.r2[k] * x[k + 2];
                }
                s
            })
            .collect()
    }

    /// Solve `R x = b` in place.
    pub fn solve_upper(&self, b: &mut [C<T>]) {
        let n = self.len();
        for k in (0..n).rev() {
            let mut s = b[k];
            if k + 1 < n {
                s -= self.r1[k] * b[k + 1];
            }
            if k + 2 < n {
                s -= self.r2[k] * b[k + 2];
            }
            b[k] = s / self.r0[k];
        }
    }

    /// Solve `Rᴴ x = b` in place.
    pub fn solve_upper_adjoint(&self, b: &mut [C<T>]) {
        let n = self.len();
        for k in 0..n {
            let mut s = b[k];
            if k >= 1 {
                s -= self.r1[k - 1].conj() * b[k - 1];
            }
            if k >= 2 {
                s -= self.r2[k - 2].conj() * b[k - 2];
            }
            b[k] = s / self.r0[k].conj();
        }
    }
}

/// Rotate `(u, v)` so that `v[0]` becomes zero.
fn givens_eliminate<T: Real>(u: &mut [C<T>; 3], v: &mut [C<T>; 3]) {
    let a = u[0];
    let b = v[0];
    if b.is_zero() {
        return;
    }
    let na = a.norm();
    let r = na.hypot(b.norm());
    let (c, s) = if na.is_zero() {
        (T::zero(), b.conj() / b.norm())
    } else {
        (na / r, (a / na) * b.conj() / r)
    };
    for j in 0..3 {
        let x = u[j];
        let y = v[j];
        u[j] = x * c + s * y;
        v[j] = y * c - s.conj() * x;
    }
    v[0] = C::zero();
}

/// Hermitian tridiagonal operator `M` given by its real diagonal and complex
/// superdiagonal.
#[derive(Clone, Debug)]
pub struct HermitianTridiagonal<T> {
    pub diag: Vec<T>,
    pub sup: Vec<C<T>>,
}

impl<T: Real> HermitianTridiagonal<T> {
    pub fn apply(&self, x: &[C<T>]) -> Vec<C<T>> {
        let n = self.diag.len();
        (0..n)
            .map(|k| {
                let mut s = x[k] * self.diag[k];
                if k + 1 < n {
                    s += self.sup[k] * x[k + 1];
                }
                if k >= 1 {
                    s += self.sup[k - 1].conj() * x[k - 1];
                }
                s
            })
            .collect()
    }
}

/// Result of maximizing `φᴴMφ / ‖Aφ‖²` for `A = QR`.
#[derive(Clone, Debug)]
pub struct ExtremalPair<T> {
    /// Maximal quotient.
    pub quotient: T,
    /// Maximizer `φ`, normalized to unit Euclidean norm.
    pub vector: Vec<C<T>>,
    pub iterations: usize,
    pub converged: bool,
}

/// Inverse iteration `φ ← (RᴴR)^{-1} M φ` for the pencil `(M, RᴴR)`; the
/// Rayleigh quotient `φᴴMφ / ‖Rφ‖²` increases to its maximum. `project`, if
/// given, is applied after every step and must commute with the pencil
/// (a symmetry projection, for instance).
pub fn maximize_quotient<T: Real>(
    qr: &TallBandQr<T>,
    m: &HermitianTridiagonal<T>,
    start: &[C<T>],
    rel_tol: T,
    max_iter: usize,
    project: Option<&dyn Fn(&mut [C<T>])>,
) -> ExtremalPair<T> {
    let norm = |v: &[C<T>]| v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
    let rescale = |v: &mut [C<T>]| {
        let r = norm(&qr.apply(v));
        for z in v.iter_mut() {
            *z /= r;
        }
    };
    let mut phi = start.to_vec();
    if let Some(p) = project {
        p(&mut phi);
    }
    rescale(&mut phi);
    let mut mu = T::zero();
    let mut converged = false;
    let mut iterations = 0;
    let mut stable = 0;
    for it in 1..=max_iter {
        iterations = it;
        let mut u = m.apply(&phi);
        // ‖Rφ‖ = 1, so this is the Rayleigh quotient of φ
        let num: T = phi.iter().zip(&u).map(|(a, b)| (a.conj() * b).re).sum();
        qr.solve_upper_adjoint(&mut u);
        qr.solve_upper(&mut u);
        if let Some(p) = project {
            p(&mut u);
        }
        rescale(&mut u);
        phi = u;
        let change = (num - mu).abs();
        mu = num;
        if change <= rel_tol * mu.abs() {
            stable += 1;
            if stable >= 3 {
                converged = true;
                break;
            }
        } else {
            stable = 0;
        }
    }
    let mq = m.apply(&phi);
    mu = phi.iter().zip(&mq).map(|(a, b)| (a.conj() * b).re).sum();
    let np = norm(&phi);
    for v in phi.iter_mut() {
        *v /= np;
    }
    ExtremalPair { quotient: mu, vector: phi, iterations, converged }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type Cx = C<f64>;

    fn rnd(rng: &mut ChaCha8Rng) -> Cx {
        Cx::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn pivoted_tridiagonal_matches_dense_lu() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &n in &[1usize, 2, 3, 7, 40] {
            let sub: Vec<Cx> = (0..n.saturating_sub(1)).map(|_| rnd(&mut rng) * 3.0).collect();
            let sup: Vec<Cx> = (0..n.saturating_sub(1)).map(|_| rnd(&mut rng) * 3.0).collect();
            // weak diagonal forces row interchanges
            let diag: Vec<Cx> = (0..n).map(|_| rnd(&mut rng) * 0.1).collect();
            let rhs: Vec<Cx> = (0..n).map(|_| rnd(&mut rng)).collect();
            let mut a = DMatrix::<Cx>::zeros(n, n);
            for i in 0..n {
                a[(i, i)] = diag[i];
                if i + 1 < n {
                    a[(i + 1, i)] = sub[i];
                    a[(i, i + 1)] = sup[i];
                }
            }
            let want = a.lu().solve(&DVector::from_vec(rhs.clone())).unwrap();
            let got = solve_tridiagonal(&sub, &diag, &sup, &rhs).unwrap();
            for i in 0..n {
                assert!((got.solution[i] - want[i]).norm() < 1e-9 * (1.0 + want[i].norm()), "n={n}");
            }
        }
    }

    #[test]
    fn singular_system_is_detected() {
        let z = Cx::new(0.0, 0.0);
        let o = Cx::new(1.0, 0.0);
        assert!(solve_tridiagonal(&[o], &[o, o], &[o], &[o, z]).is_none());
    }

    #[test]
    fn tall_qr_preserves_norms() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 25;
        let top: Vec<Cx> = (0..n).map(|_| rnd(&mut rng)).collect();
        let mid: Vec<Cx> = (0..n).map(|_| rnd(&mut rng)).collect();
        let bot: Vec<Cx> = (0..n).map(|_| rnd(&mut rng)).collect();
        let qr = TallBandQr::factor(&top, &mid, &bot);
        let x: Vec<Cx> = (0..n).map(|_| rnd(&mut rng)).collect();
        let mut ax = vec![Cx::new(0.0, 0.0); n + 2];
        for k in 0..n {
            ax[k] += top[k] * x[k];
            ax[k + 1] += mid[k] * x[k];
            ax[k + 2] += bot[k] * x[k];
        }
        let n_ax: f64 = ax.iter().map(|v| v.norm_sqr()).sum();
        let n_rx: f64 = qr.apply(&x).iter().map(|v| v.norm_sqr()).sum();
        assert!((n_ax - n_rx).abs() < 1e-12 * n_ax);

        let mut y = qr.apply(&x);
        qr.solve_upper(&mut y);
        for k in 0..n {
            assert!((y[k] - x[k]).norm() < 1e-10);
        }
        // Rᴴ solve against dense adjoint
        let mut rd = DMatrix::<Cx>::zeros(n, n);
        for k in 0..n {
            let e: Vec<Cx> = (0..n).map(|j| if j == k { Cx::new(1.0, 0.0) } else { Cx::new(0.0, 0.0) }).collect();
            let col = qr.apply(&e);
            for j in 0..n {
                rd[(j, k)] = col[j];
            }
        }
        let mut b = x.clone();
        qr.solve_upper_adjoint(&mut b);
        let back = rd.adjoint() * DVector::from_vec(b);
        for k in 0..n {
            assert!((back[k] - x[k]).norm() < 1e-10);
        }
    }

    #[test]
    fn smallest_singular_value_matches_dense_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 30;
        let top: Vec<Cx> = (0..n).map(|_| Cx::new(1.0, 0.0)).collect();
        let mid: Vec<Cx> = (0..n).map(|_| Cx::new(-2.0 + 0.3 * rng.gen::<f64>(), 0.1)).collect();
        let bot = top.clone();
        let qr = TallBandQr::factor(&top, &mid, &bot);
        let m = HermitianTridiagonal { diag: vec![1.0; n], sup: vec![Cx::new(0.0, 0.0); n - 1] };
        let start: Vec<Cx> = (0..n).map(|k| Cx::new(1.0 + k as f64 * 0.01, 0.0)).collect();
        let pair = maximize_quotient(&qr, &m, &start, 1e-13, 20_000, None);
        let mut a = DMatrix::<Cx>::zeros(n + 2, n);
        for k in 0..n {
            a[(k, k)] = top[k];
            a[(k + 1, k)] = mid[k];
            a[(k + 2, k)] = bot[k];
        }
        let smin = a.singular_values().min();
        assert!(pair.converged);
        assert!((1.0 / pair.quotient.sqrt() - smin).abs() < 1e-8 * smin, "{} vs {smin}", 1.0 / pair.quotient.sqrt());
    }
}
