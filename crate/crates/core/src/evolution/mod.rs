//! Time evolution of a single angular mode of the wave equation,
//! `-φ_tt + a^{-2}(a²φ_x)_x - (λ²/a²)φ = F`.

mod quasimode;
mod saturation;

pub use quasimode::{build_quasimode, growth_factor, polynomial_profile, tau_root, Quasimode, QuasimodeProfile};
pub use saturation::{saturation_experiment, SaturationOptions, SaturationResult};

use num_traits::Zero;

use crate::discretization::{FluxLaplacian, Grid, GridFunction};
use crate::error::{Error, Result};
use crate::geometry::GeometryProfile;
use crate::scalar::{Real, C};

/// Largest admissible CFL number `dt/h`.
pub const MAX_CFL: f64 = 0.9;

/// Field and velocity of one mode at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeState<T> {
    pub phi: GridFunction<T>,
    pub phi_t: GridFunction<T>,
    pub t: T,
}

impl<T: Real> ModeState<T> {
    pub fn new(phi: GridFunction<T>, phi_t: GridFunction<T>, t: T) -> Result<Self> {
        if phi.len() != phi_t.len() {
            return Err(Error::GridMismatch { expected: phi.len(), found: phi_t.len() });
        }
        Ok(Self { phi, phi_t, t })
    }

    pub fn zeros(n: usize) -> Self {
        Self { phi: GridFunction::zeros(n), phi_t: GridFunction::zeros(n), t: T::zero() }
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.phi.is_finite() && self.phi_t.is_finite() && self.t.is_finite()
    }

    fn support_radius(&self, grid: &Grid<T>) -> Option<T> {
        match (self.phi.support_radius(grid), self.phi_t.support_radius(grid)) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        }
    }
}

/// Uniformly sampled time history. Samples are taken every `stride` steps
/// of size `dt`; the state at the final time is always kept.
#[derive(Clone, Debug)]
pub struct Trajectory<T> {
    dt: T,
    stride: usize,
    states: Vec<ModeState<T>>,
    last: ModeState<T>,
}

impl<T: Real> Trajectory<T> {
    /// Wrap externally produced samples. They must be uniformly spaced in time.
    pub fn from_states(states: Vec<ModeState<T>>) -> Result<Self> {
        let first = states.first().ok_or(Error::EmptySeries)?;
        let n = first.len();
        if let Some(bad) = states.iter().find(|s| s.len() != n) {
            return Err(Error::GridMismatch { expected: n, found: bad.len() });
        }
        let dt = if states.len() > 1 { states[1].t - states[0].t } else { T::zero() };
        let tol = T::lit(1e-9) * (dt.abs() + T::one());
        for (k, s) in states.iter().enumerate() {
            let expect = first.t + dt * T::from_usize_lossy(k);
            if (s.t - expect).abs() > tol {
                return Err(Error::Config(format!("non-uniform sampling at sample {k}")));
            }
        }
        if states.len() > 1 && !(dt > T::zero()) {
            return Err(Error::Config("sample times must increase".into()));
        }
        let last = states.last().cloned().expect("nonempty");
        Ok(Self { dt, stride: 1, states, last })
    }

    /// Sample an analytic space-time field `(w, w_t)` at `count` uniformly
    /// spaced times starting from `t = 0`.
    pub fn from_fn(grid: &Grid<T>, dt: T, count: usize, f: impl Fn(T, T) -> (C<T>, C<T>)) -> Result<Self> {
        let states = (0..count)
            .map(|k| {
                let t = dt * T::from_usize_lossy(k);
                let (phi, phi_t): (Vec<_>, Vec<_>) = (0..grid.len()).map(|i| f(grid.node(i), t)).unzip();
                ModeState { phi: GridFunction::new(phi), phi_t: GridFunction::new(phi_t), t }
            })
            .collect();
        Self::from_states(states)
    }

    /// Time step of the integrator that produced the samples.
    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    /// Time between consecutive stored samples.
    pub fn sample_interval(&self) -> T {
        self.dt * T::from_usize_lossy(self.stride)
    }

    pub fn states(&self) -> &[ModeState<T>] {
        &self.states
    }

    pub fn final_state(&self) -> &ModeState<T> {
        &self.last
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Stored fields `φ(t_k)`.
    pub fn fields(&self) -> Vec<GridFunction<T>> {
        self.states.iter().map(|s| s.phi.clone()).collect()
    }
}

/// Inhomogeneous term `F(t, x)` of the mode equation.
pub trait Forcing<T: Real>: Sync {
    /// Overwrite `out` with `F(t, x_i)`.
    fn evaluate(&self, t: T, grid: &Grid<T>, out: &mut [C<T>]);

    /// Radius containing the spatial support for all times, if known.
    fn support_radius(&self) -> Option<T> {
        None
    }
}

impl<T: Real, F: Fn(T, T) -> C<T> + Sync> Forcing<T> for F {
    fn evaluate(&self, t: T, grid: &Grid<T>, out: &mut [C<T>]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self(t, grid.node(i));
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EvolveOptions<T> {
    pub final_time: T,
    pub cfl: T,
    /// Store every `stride`-th step; `None` keeps only the end points.
    pub stride: Option<usize>,
}

impl<T: Real> EvolveOptions<T> {
    pub fn new(final_time: T, cfl: T) -> Self {
        Self { final_time, cfl, stride: Some(1) }
    }

    /// `dt <= cfl·h` adjusted so that an integer number of steps lands on `T`.
    pub fn step_count(&self, h: T) -> (usize, T) {
        if self.final_time <= T::zero() {
            return (0, self.cfl * h);
        }
        let steps = (self.final_time / (self.cfl * h)).ceil().to_usize().unwrap_or(1).max(1);
        (steps, self.final_time / T::from_usize_lossy(steps))
    }
}

/// The operator `K = -L + λ²/a²` with its stencil, shared by the integrator
/// and the discrete energy.
#[derive(Clone, Debug)]
pub struct ModeOperator<T> {
    left: Vec<T>,
    center: Vec<T>,
    right: Vec<T>,
    node_a2: Vec<T>,
    h: T,
}

impl<T: Real> ModeOperator<T> {
    pub fn new(lambda: T, grid: &Grid<T>, profile: &GeometryProfile<T>) -> Self {
        let op = FluxLaplacian::new(grid, profile);
        let (left, mut center, right) = op.stencil();
        let node_a2 = op.node_a2().to_vec();
        let l2 = lambda * lambda;
        for (c, a2) in center.iter_mut().zip(&node_a2) {
            *c -= l2 / *a2;
        }
        // stored as -K = L - λ²/a²
        Self { left, center, right, node_a2, h: grid.spacing() }
    }

    /// `out = -K u = L u - (λ²/a²) u`.
    #[inline]
    pub fn apply_negative(&self, u: &[C<T>], out: &mut [C<T>]) {
        let n = u.len();
        if n == 1 {
            out[0] = u[0] * self.center[0];
            return;
        }
        out[0] = u[0] * self.center[0] + u[1] * self.right[0];
        let rows = self.left[1..n - 1].iter().zip(&self.center[1..n - 1]).zip(&self.right[1..n - 1]);
        for ((o, w), ((l, c), r)) in out[1..n - 1].iter_mut().zip(u.windows(3)).zip(rows) {
            *o = w[0] * *l + w[1] * *c + w[2] * *r;
        }
        out[n - 1] = u[n - 2] * self.left[n - 1] + u[n - 1] * self.center[n - 1];
    }

    /// `Σ a_i² h ū_i v_i`, the inner product in which `K` is self-adjoint.
    pub fn inner(&self, u: &[C<T>], v: &[C<T>]) -> C<T> {
        let mut s = C::zero();
        for i in 0..u.len() {
            s += u[i].conj() * v[i] * self.node_a2[i];
        }
        s * self.h
    }

    /// Energy preserved exactly by the velocity Verlet scheme with step `dt`:
    /// `‖v‖² + ⟨Kφ, φ⟩ - (dt²/4)‖Kφ‖²`.
    pub fn discrete_energy(&self, state: &ModeState<T>, dt: T) -> T {
        let phi = state.phi.values();
        let v = state.phi_t.values();
        let mut k = vec![C::zero(); phi.len()];
        self.apply_negative(phi, &mut k);
        let kinetic = self.inner(v, v).re;
        let potential = -self.inner(&k, phi).re;
        let correction = self.inner(&k, &k).re * dt * dt / T::lit(4.0);
        kinetic + potential - correction
    }
}

/// Modified energy conserved by [`evolve`] for `F ≡ 0`.
pub fn discrete_energy<T: Real>(
    state: &ModeState<T>,
    lambda: T,
    dt: T,
    grid: &Grid<T>,
    profile: &GeometryProfile<T>,
) -> Result<T> {
    grid.check(&state.phi)?;
    Ok(ModeOperator::new(lambda, grid, profile).discrete_energy(state, dt))
}

/// Evolve with velocity Verlet (kick-drift-kick leapfrog). The opening
/// half kick `v + (dt/2)φ_tt` is the Taylor half step of the staggered scheme.
pub fn evolve<T: Real>(
    state0: &ModeState<T>,
    lambda: T,
    forcing: Option<&dyn Forcing<T>>,
    opts: &EvolveOptions<T>,
    grid: &Grid<T>,
    profile: &GeometryProfile<T>,
) -> Result<Trajectory<T>> {
    evolve_observed(state0, lambda, forcing, opts, grid, profile, &mut |_| {})
}

/// [`evolve`] calling `observer` on the state after every step, and on the
/// initial state.
pub fn evolve_observed<T: Real>(
    state0: &ModeState<T>,
    lambda: T,
    forcing: Option<&dyn Forcing<T>>,
    opts: &EvolveOptions<T>,
    grid: &Grid<T>,
    profile: &GeometryProfile<T>,
    observer: &mut dyn FnMut(&ModeState<T>),
) -> Result<Trajectory<T>> {
    grid.check(&state0.phi)?;
    grid.check(&state0.phi_t)?;
    if !(opts.cfl > T::zero() && opts.cfl <= T::lit(MAX_CFL)) {
        return Err(Error::Cfl(opts.cfl.to_f64_lossy()));
    }
    let h = grid.spacing();
    let mut reach = state0.support_radius(grid).unwrap_or(T::zero());
    if let Some(r) = forcing.and_then(|f| f.support_radius()) {
        reach = reach.max(r);
    }
    let required = reach + opts.final_time + T::lit(2.0) * h;
    if grid.half_width() < required {
        return Err(Error::CausalBoundary {
            required: required.to_f64_lossy(),
            half_width: grid.half_width().to_f64_lossy(),
        });
    }

    let (steps, dt) = opts.step_count(h);
    let op = ModeOperator::new(lambda, grid, profile);
    let n = grid.len();
    let half = T::lit(0.5) * dt;
    let mut state = state0.clone();
    let mut acc = vec![C::zero(); n];
    let mut force = vec![C::zero(); n];
    let accelerate = |state: &ModeState<T>, acc: &mut [C<T>], force: &mut [C<T>]| {
        op.apply_negative(state.phi.values(), acc);
        if let Some(f) = forcing {
            f.evaluate(state.t, grid, force);
            for (a, f) in acc.iter_mut().zip(force.iter()) {
                *a -= *f;
            }
        }
    };

    let mut states = vec![state.clone()];
    observer(&state);
    accelerate(&state, &mut acc, &mut force);
    for step in 1..=steps {
        {
            let (phi, v) = (state.phi.values_mut(), state.phi_t.values_mut());
            for ((p, v), a) in phi.iter_mut().zip(v.iter_mut()).zip(&acc) {
                *v += *a * half;
                *p += *v * dt;
            }
        }
        state.t = dt * T::from_usize_lossy(step);
        accelerate(&state, &mut acc, &mut force);
        for (v, a) in state.phi_t.values_mut().iter_mut().zip(&acc) {
            *v += *a * half;
        }
        observer(&state);
        if matches!(opts.stride, Some(s) if s > 0 && step % s == 0) {
            states.push(state.clone());
        }
    }
    Ok(Trajectory { dt, stride: opts.stride.unwrap_or(steps.max(1)).max(1), states, last: state })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::re;

    fn bump(x: f64, r: f64) -> f64 {
        if x.abs() >= r {
            0.0
        } else {
            (1.0 - (x / r).powi(2)).powi(4)
        }
    }

    #[test]
    fn zero_data_stays_zero() {
        let p = GeometryProfile::<f64>::with_m(2).unwrap();
        let g = Grid::new(3.0, 101).unwrap();
        let traj = evolve(&ModeState::zeros(g.len()), 5.0, None, &EvolveOptions::new(1.0, 0.5), &g, &p).unwrap();
        assert!(traj.states().iter().all(|s| s.phi.max_abs() == 0.0 && s.phi_t.max_abs() == 0.0));
        assert!(traj.final_state().phi.max_abs() == 0.0);
    }

    #[test]
    fn cfl_and_causality_are_enforced() {
        let p = GeometryProfile::<f64>::with_m(2).unwrap();
        let g = Grid::new(2.0, 101).unwrap();
        let s = ModeState::new(g.sample_real(|x| bump(x, 1.0)), GridFunction::zeros(g.len()), 0.0).unwrap();
        assert!(matches!(evolve(&s, 1.0, None, &EvolveOptions::new(0.5, 0.95), &g, &p), Err(Error::Cfl(_))));
        assert!(matches!(
            evolve(&s, 1.0, None, &EvolveOptions::new(1.5, 0.5), &g, &p),
            Err(Error::CausalBoundary { .. })
        ));
        assert!(evolve(&s, 1.0, None, &EvolveOptions::new(0.5, 0.5), &g, &p).is_ok());
    }

    #[test]
    fn step_size_lands_on_final_time() {
        let o = EvolveOptions::new(1.0_f64, 0.9);
        let (k, dt) = o.step_count(0.013);
        assert!(dt <= 0.9 * 0.013);
        assert!((dt * k as f64 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn modified_energy_is_conserved() {
        let p = GeometryProfile::<f64>::with_m(2).unwrap();
        let g = Grid::new(4.0, 801).unwrap();
        let phi = g.sample(|x| C::new(bump(x, 1.0), 0.3 * x * bump(x, 1.0)));
        let s = ModeState::new(phi, g.sample_real(|x| bump(x - 0.2, 0.5)), 0.0).unwrap();
        let mut energies = Vec::new();
        let op = ModeOperator::new(3.0, &g, &p);
        let opts = EvolveOptions::new(2.0, 0.8);
        let (_, dt) = opts.step_count(g.spacing());
        evolve_observed(&s, 3.0, None, &opts, &g, &p, &mut |st| energies.push(op.discrete_energy(st, dt))).unwrap();
        let e0 = energies[0];
        let drift = energies.iter().map(|e| (e - e0).abs() / e0).fold(0.0, f64::max);
        assert!(drift < 1e-12, "{drift}");
    }

    #[test]
    fn forcing_drives_zero_data() {
        let p = GeometryProfile::<f64>::with_m(1).unwrap();
        let g = Grid::new(3.0, 201).unwrap();
        let f = |t: f64, x: f64| re(bump(x, 0.5) * t.cos());
        let traj = evolve(&ModeState::zeros(g.len()), 1.0, Some(&f), &EvolveOptions::new(0.5, 0.5), &g, &p).unwrap();
        assert!(traj.final_state().phi.max_abs() > 0.0);
        assert!(traj.final_state().is_finite());
    }

    #[test]
    fn trajectory_rejects_nonuniform_samples() {
        let z = |t| ModeState { phi: GridFunction::<f64>::zeros(3), phi_t: GridFunction::zeros(3), t };
        assert!(Trajectory::from_states(vec![z(0.0), z(0.1), z(0.3)]).is_err());
        assert!(Trajectory::from_states(Vec::<ModeState<f64>>::new()).is_err());
        let tr = Trajectory::from_states(vec![z(0.0), z(0.1), z(0.2)]).unwrap();
        assert!((tr.sample_interval() - 0.1).abs() < 1e-15);
    }
}
