//! Symmetric uniform grids on `[-X, X]`, the flux-form radial operator,
//! volume-form quadrature and the dyadic annulus partition.

use std::ops::{Index, IndexMut};

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::geometry::GeometryProfile;
use crate::scalar::{japanese_bracket, re, Real, C};

/// Uniform grid with an odd number of nodes and a node exactly at `x = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    half_width: T,
    n: usize,
    h: T,
}

impl<T: Real> Grid<T> {
    pub fn new(half_width: T, n: usize) -> Result<Self> {
        if !(half_width > T::zero()) || !half_width.is_finite() {
            return Err(Error::InvalidGrid(format!("half-width must be positive, got {half_width}")));
        }
        if n < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3 nodes, got {n}")));
        }
        if n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("even point count {n} has no node at the origin")));
        }
        let h = T::lit(2.0) * half_width / T::from_usize_lossy(n - 1);
        Ok(Self { half_width, n, h })
    }

    /// Smallest odd grid on `[-X, X]` with spacing at most `h_max`.
    pub fn with_max_spacing(half_width: T, h_max: T) -> Result<Self> {
        let cells = (T::lit(2.0) * half_width / h_max).ceil().to_usize().unwrap_or(0).max(2);
        let cells = cells + cells % 2;
        Self::new(half_width, cells + 1)
    }

    /// Grid obeying the default resolution rule `h <= min(1/(8 k), 1/64)`
    /// for a maximal local wavenumber `k`.
    pub fn for_wavenumber(half_width: T, wavenumber: T, points_per_wavelength: T) -> Result<Self> {
        let h_max = (T::one() / (points_per_wavelength * wavenumber.max(T::one()))).min(T::lit(1.0 / 64.0));
        Self::with_max_spacing(half_width, h_max)
    }

    /// Same half-width, spacing halved.
    pub fn refined(&self) -> Self {
        Self::new(self.half_width, 2 * self.n - 1).expect("refinement of a valid grid")
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> T {
        self.h
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }

    pub fn center(&self) -> usize {
        (self.n - 1) / 2
    }

    /// `x_i`, computed from the center so that the grid is exactly symmetric.
    #[inline]
    pub fn node(&self, i: usize) -> T {
        let c = self.center();
        if i >= c {
            T::from_usize_lossy(i - c) * self.h
        } else {
            -T::from_usize_lossy(c - i) * self.h
        }
    }

    pub fn nodes(&self) -> Vec<T> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Trapezoid weights (`h`, with `h/2` at the two ends).
    #[inline]
    pub fn trapezoid_weight(&self, i: usize) -> T {
        if i == 0 || i + 1 == self.n {
            self.h * T::lit(0.5)
        } else {
            self.h
        }
    }

    pub fn check(&self, u: &GridFunction<T>) -> Result<()> {
        if u.len() != self.n {
            return Err(Error::GridMismatch { expected: self.n, found: u.len() });
        }
        Ok(())
    }

    pub fn sample(&self, mut f: impl FnMut(T) -> C<T>) -> GridFunction<T> {
        GridFunction::new((0..self.n).map(|i| f(self.node(i))).collect())
    }

    pub fn sample_real(&self, mut f: impl FnMut(T) -> T) -> GridFunction<T> {
        self.sample(|x| re(f(x)))
    }

    /// `a_i²` at every node.
    pub fn warp_squared(&self, profile: &GeometryProfile<T>) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                let a = profile.a(self.node(i));
                a * a
            })
            .collect()
    }
}

/// Complex samples aligned with the nodes of a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction<T> {
    values: Vec<C<T>>,
}

impl<T: Real> GridFunction<T> {
    pub fn new(values: Vec<C<T>>) -> Self {
        Self { values }
    }

    pub fn from_real(values: &[T]) -> Self {
        Self::new(values.iter().map(|&v| re(v)).collect())
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(vec![C::zero(); n])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[C<T>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C<T>] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<C<T>> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn scale(&self, c: C<T>) -> Self {
        Self::new(self.values.iter().map(|&v| v * c).collect())
    }

    pub fn map(&self, f: impl Fn(usize, C<T>) -> C<T>) -> Self {
        Self::new(self.values.iter().enumerate().map(|(i, &v)| f(i, v)).collect())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(C<T>, C<T>) -> C<T>) -> Self {
        Self::new(self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect())
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.norm()))
    }

    /// Largest `|x_i|` at which the function is nonzero, `None` if it vanishes.
    pub fn support_radius(&self, grid: &Grid<T>) -> Option<T> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(i, _)| grid.node(i).abs())
            .fold(None, |acc, r| Some(acc.map_or(r, |a: T| a.max(r))))
    }

    /// Plain `L²(dx)` norm by the trapezoid rule.
    pub fn l2_norm(&self, grid: &Grid<T>) -> T {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| grid.trapezoid_weight(i) * v.norm_sqr())
            .sum::<T>()
            .sqrt()
    }
}

impl<T> Index<usize> for GridFunction<T> {
    type Output = C<T>;
    fn index(&self, i: usize) -> &C<T> {
        &self.values[i]
    }
}

impl<T> IndexMut<usize> for GridFunction<T> {
    fn index_mut(&mut self, i: usize) -> &mut C<T> {
        &mut self.values[i]
    }
}

/// Precomputed coefficients of the flux-form operator
/// `(Lu)_i = [a²_{i+1/2}(u_{i+1}-u_i) - a²_{i-1/2}(u_i-u_{i-1})] / (a_i² h²)`
/// with Dirichlet-zero ghost values outside the grid.
#[derive(Clone, Debug)]
pub struct FluxLaplacian<T> {
    /// `a²` at the midpoints `x_{i-1/2}` for `i = 0..=n`.
    mid_a2: Vec<T>,
    node_a2: Vec<T>,
    inv_h2: T,
}

impl<T: Real> FluxLaplacian<T> {
    pub fn new(grid: &Grid<T>, profile: &GeometryProfile<T>) -> Self {
        let h = grid.spacing();
        let half = T::lit(0.5);
        let mid_a2 = (0..=grid.len())
            .map(|i| {
                let x = grid.node(0) + (T::from_usize_lossy(i) - half) * h;
                let a = profile.a(x);
                a * a
            })
            .collect();
        Self { mid_a2, node_a2: grid.warp_squared(profile), inv_h2: T::one() / (h * h) }
    }

    pub fn len(&self) -> usize {
        self.node_a2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_a2.is_empty()
    }

    pub fn node_a2(&self) -> &[T] {
        &self.node_a2
    }

    /// `out = L u`.
    pub fn apply_into(&self, u: &[C<T>], out: &mut [C<T>]) {
        let n = u.len();
        debug_assert_eq!(n, self.node_a2.len());
        for i in 0..n {
            let left = if i > 0 { u[i - 1] } else { C::zero() };
            let right = if i + 1 < n { u[i + 1] } else { C::zero() };
            let flux = (right - u[i]) * self.mid_a2[i + 1] - (u[i] - left) * self.mid_a2[i];
            out[i] = flux * (self.inv_h2 / self.node_a2[i]);
        }
    }

    /// `Σ_i a²_{i+1/2} |u_{i+1}-u_i|² / h`, including the ghost edges.
    /// Equals `-⟨Lu, u⟩` in the `a² h` inner product.
    pub fn dirichlet_form(&self, u: &[C<T>], h: T) -> T {
        let n = u.len();
        let mut s = T::zero();
        for i in 0..=n {
            let left = if i > 0 { u[i - 1] } else { C::zero() };
            let right = if i < n { u[i] } else { C::zero() };
            s += self.mid_a2[i] * (right - left).norm_sqr();
        }
        s / h
    }

    /// Row coefficients `(left, center, right)` of `L` at every node.
    pub fn stencil(&self) -> (Vec<T>, Vec<T>, Vec<T>) {
        let n = self.len();
        let mut left = Vec::with_capacity(n);
        let mut center = Vec::with_capacity(n);
        let mut right = Vec::with_capacity(n);
        for i in 0..n {
            let s = self.inv_h2 / self.node_a2[i];
            left.push(self.mid_a2[i] * s);
            right.push(self.mid_a2[i + 1] * s);
            center.push(-(self.mid_a2[i] + self.mid_a2[i + 1]) * s);
        }
        (left, center, right)
    }
}

/// `a^{-2} ∂_x(a² ∂_x u)` in flux form.
pub fn flux_laplacian<T: Real>(
    u: &GridFunction<T>,
    grid: &Grid<T>,
    profile: &GeometryProfile<T>,
) -> Result<GridFunction<T>> {
    grid.check(u)?;
    let op = FluxLaplacian::new(grid, profile);
    let mut out = GridFunction::zeros(u.len());
    op.apply_into(u.values(), out.values_mut());
    Ok(out)
}

/// Central differences inside, second-order one-sided differences at the ends.
pub fn gradient<T: Real>(u: &GridFunction<T>, grid: &Grid<T>) -> Result<GridFunction<T>> {
    grid.check(u)?;
    Ok(GridFunction::new(gradient_values(u.values(), grid.spacing())))
}

pub(crate) fn gradient_values<T: Real>(u: &[C<T>], h: T) -> Vec<C<T>> {
    let n = u.len();
    let inv2h = T::one() / (T::lit(2.0) * h);
    let three = T::lit(3.0);
    let four = T::lit(4.0);
    let mut d = vec![C::zero(); n];
    d[0] = (u[0] * (-three) + u[1] * four - u[2]) * inv2h;
    d[n - 1] = (u[n - 1] * three - u[n - 2] * four + u[n - 3]) * inv2h;
    for i in 1..n - 1 {
        d[i] = (u[i + 1] - u[i - 1]) * inv2h;
    }
    d
}

/// Trapezoid rule for `∫ u · weight · a² dx`.
///
/// The angular measure of the sphere is not included: every integral in this
/// crate is per unit angular measure. See [`ANGULAR_MEASURE_SPHERE`].
pub fn quadrature<T: Real>(
    u: &GridFunction<T>,
    weight: &GridFunction<T>,
    grid: &Grid<T>,
    profile: &GeometryProfile<T>,
) -> Result<C<T>> {
    grid.check(u)?;
    grid.check(weight)?;
    let mut s = C::zero();
    for i in 0..grid.len() {
        let a = profile.a(grid.node(i));
        s += u[i] * weight[i] * (a * a * grid.trapezoid_weight(i));
    }
    Ok(s)
}

/// Angular measure `4π` of the unit sphere.
pub const ANGULAR_MEASURE_SPHERE: f64 = 4.0 * std::f64::consts::PI;
/// Angular measure `2π` of the equatorial circle used for single-mode reductions.
pub const ANGULAR_MEASURE_EQUATORIAL: f64 = 2.0 * std::f64::consts::PI;

/// Node sets `A_j = {i : 2^j <= ⟨x_i⟩ < 2^{j+1}}` for `j = 0..=⌊log₂⟨X⟩⌋`.
/// Annuli without nodes are kept as empty sets.
pub fn dyadic_partition<T: Real>(grid: &Grid<T>) -> Vec<Vec<usize>> {
    let jmax = japanese_bracket(grid.half_width()).log2().floor().to_usize().unwrap_or(0);
    let mut parts = vec![Vec::new(); jmax + 1];
    for i in 0..grid.len() {
        let j = annulus_index(japanese_bracket(grid.node(i))).min(jmax);
        parts[j].push(i);
    }
    parts
}

fn annulus_index<T: Real>(bracket: T) -> usize {
    // exact for powers of two, unlike log2 rounding
    let mut j = 0usize;
    let mut upper = T::lit(2.0);
    while bracket >= upper {
        upper *= T::lit(2.0);
        j += 1;
    }
    j
}
