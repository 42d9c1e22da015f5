//! Right-hand sides `y' = f(t, y)` and the registry of test problems.
//!
//! Complex-valued problems are realified: `d` complex components become `2d`
//! real ones laid out as `[re_0, im_0, re_1, im_1, ...]`.

use alloc::boxed::Box;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{domain, Error};
use crate::linalg::Matrix;
use crate::math::{abs, cos, exp, sin, sqrt};

/// An ODE system. Implementations must be stateless so that independent
/// integrations can share one instance across threads.
pub trait OdeSystem: Send + Sync {
    fn dim(&self) -> usize;

    fn rhs(&self, t: f64, y: &[f64], dydt: &mut [f64]);

    /// Analytic Jacobian `df/dy`, if the problem provides one.
    fn jacobian(&self, _t: f64, _y: &[f64]) -> Option<Matrix> {
        None
    }

    /// Exact solution of the registered initial value problem, if known.
    fn exact(&self, _t: f64) -> Option<Vec<f64>> {
        None
    }

    /// Whether `<f(t,u) - f(t,v), u - v> <= 0` holds for all `t, u, v`.
    fn is_contractive(&self) -> bool {
        false
    }

    fn rhs_vec(&self, t: f64, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.rhs(t, y, &mut out);
        out
    }
}

/// A system with its initial condition and time span.
pub struct ProblemInstance {
    pub name: &'static str,
    pub system: Box<dyn OdeSystem>,
    pub t0: f64,
    pub y0: Vec<f64>,
    pub t_end: f64,
}

impl core::fmt::Debug for ProblemInstance {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ProblemInstance")
            .field("name", &self.name)
            .field("dim", &self.system.dim())
            .field("t0", &self.t0)
            .field("y0", &self.y0)
            .field("t_end", &self.t_end)
            .finish()
    }
}

impl ProblemInstance {
    pub fn new(
        name: &'static str,
        system: Box<dyn OdeSystem>,
        t0: f64,
        y0: Vec<f64>,
        t_end: f64,
    ) -> Result<Self, Error> {
        if !(t_end > t0) {
            return Err(domain("t_end must exceed t0"));
        }
        if y0.len() != system.dim() {
            return Err(Error::DimensionMismatch {
                expected: system.dim(),
                found: y0.len(),
            });
        }
        Ok(Self {
            name,
            system,
            t0,
            y0,
            t_end,
        })
    }

    /// Same problem over a different end time.
    pub fn with_t_end(mut self, t_end: f64) -> Result<Self, Error> {
        if !(t_end > self.t0) {
            return Err(domain("t_end must exceed t0"));
        }
        self.t_end = t_end;
        Ok(self)
    }

    pub fn exact(&self, t: f64) -> Option<Vec<f64>> {
        self.system.exact(t)
    }
}

/// Names accepted by [`registry_lookup`]. `vanderpol` also accepts a
/// stiffness suffix, e.g. `vanderpol:10`.
pub const PROBLEM_NAMES: &[&str] = &["decay", "quadratic", "oscillator", "nonauto", "vanderpol"];

pub fn registry_lookup(name: &str) -> Result<ProblemInstance, Error> {
    let unknown = || Error::UnknownProblem {
        name: name.to_string(),
        available: PROBLEM_NAMES,
    };
    let (base, arg) = match name.split_once(':') {
        Some((b, a)) => (b, Some(a)),
        None => (name, None),
    };
    if arg.is_some() && base != "vanderpol" {
        return Err(unknown());
    }
    match base {
        "decay" => ProblemInstance::new("decay", Box::new(Decay::new(1.0)), 0.0, vec![1.0], 1.0),
        "quadratic" => ProblemInstance::new("quadratic", Box::new(Quadratic), 0.0, vec![0.0], 2.0),
        "oscillator" => ProblemInstance::new(
            "oscillator",
            Box::new(Oscillator::default()),
            0.0,
            vec![1.0, 0.0],
            10.0,
        ),
        "nonauto" => {
            ProblemInstance::new("nonauto", Box::new(NonAutonomous), 0.0, vec![1.0, 0.0], 2.0)
        }
        "vanderpol" => {
            let mu = match arg {
                None => 2.0,
                Some(s) => match s.parse::<f64>() {
                    Ok(mu) if mu >= 0.0 && mu.is_finite() => mu,
                    _ => return Err(domain("vanderpol parameter must be a non-negative number")),
                },
            };
            ProblemInstance::new(
                "vanderpol",
                Box::new(VanDerPol::new(mu)),
                0.0,
                vec![2.0, 0.0],
                1.0,
            )
        }
        _ => Err(unknown()),
    }
}

/// `y' = -rate * y`, `y(0) = 1`. Contractive for `rate >= 0`.
#[derive(Debug, Clone, Copy)]
pub struct Decay {
    pub rate: f64,
}

impl Decay {
    pub fn new(rate: f64) -> Self {
        Self { rate }
    }
}

impl OdeSystem for Decay {
    fn dim(&self) -> usize {
        1
    }
    fn rhs(&self, _t: f64, y: &[f64], dydt: &mut [f64]) {
        dydt[0] = -self.rate * y[0];
    }
    fn jacobian(&self, _t: f64, _y: &[f64]) -> Option<Matrix> {
        Some(Matrix::from_rows(&[&[-self.rate]]))
    }
    fn exact(&self, t: f64) -> Option<Vec<f64>> {
        Some(vec![exp(-self.rate * t)])
    }
    fn is_contractive(&self) -> bool {
        self.rate >= 0.0
    }
}

/// `y' = 2t`, `y(0) = 0`, exact `t^2`.
#[derive(Debug, Clone, Copy)]
pub struct Quadratic;

impl OdeSystem for Quadratic {
    fn dim(&self) -> usize {
        1
    }
    fn rhs(&self, t: f64, _y: &[f64], dydt: &mut [f64]) {
        dydt[0] = 2.0 * t;
    }
    fn jacobian(&self, _t: f64, _y: &[f64]) -> Option<Matrix> {
        Some(Matrix::zeros(1))
    }
    fn exact(&self, t: f64) -> Option<Vec<f64>> {
        Some(vec![t * t])
    }
}

/// Damped rotation `y' = A y` with `A = [[-c, w], [-w, -c]]`, `y(0) = (1, 0)`.
#[derive(Debug, Clone, Copy)]
pub struct Oscillator {
    pub damping: f64,
    pub omega: f64,
}

impl Default for Oscillator {
    fn default() -> Self {
        Self {
            damping: 0.1,
            omega: 1.0,
        }
    }
}

impl OdeSystem for Oscillator {
    fn dim(&self) -> usize {
        2
    }
    fn rhs(&self, _t: f64, y: &[f64], dydt: &mut [f64]) {
        dydt[0] = -self.damping * y[0] + self.omega * y[1];
        dydt[1] = -self.omega * y[0] - self.damping * y[1];
    }
    fn jacobian(&self, _t: f64, _y: &[f64]) -> Option<Matrix> {
        Some(Matrix::from_rows(&[
            &[-self.damping, self.omega],
            &[-self.omega, -self.damping],
        ]))
    }
    fn exact(&self, t: f64) -> Option<Vec<f64>> {
        let amp = exp(-self.damping * t);
        Some(vec![amp * cos(self.omega * t), -amp * sin(self.omega * t)])
    }
    fn is_contractive(&self) -> bool {
        self.damping >= 0.0
    }
}

/// Scalar complex `y' = lambda(t) y` with
/// `lambda(t) = -(1 + sin(t)/2) + 2i cos(t)`, `y(0) = 1`, realified to
/// `(Re y, Im y)`. `Re lambda <= -1/2`, so the system is contractive.
#[derive(Debug, Clone, Copy)]
pub struct NonAutonomous;

impl NonAutonomous {
    fn lambda(t: f64) -> (f64, f64) {
        (-(1.0 + 0.5 * sin(t)), 2.0 * cos(t))
    }
}

impl OdeSystem for NonAutonomous {
    fn dim(&self) -> usize {
        2
    }
    fn rhs(&self, t: f64, y: &[f64], dydt: &mut [f64]) {
        let (re, im) = Self::lambda(t);
        dydt[0] = re * y[0] - im * y[1];
        dydt[1] = im * y[0] + re * y[1];
    }
    fn jacobian(&self, t: f64, _y: &[f64]) -> Option<Matrix> {
        let (re, im) = Self::lambda(t);
        Some(Matrix::from_rows(&[&[re, -im], &[im, re]]))
    }
    fn exact(&self, t: f64) -> Option<Vec<f64>> {
        // exp of the integral of lambda from 0 to t
        let decay = t + 0.5 * (1.0 - cos(t));
        let phase = 2.0 * sin(t);
        let amp = exp(-decay);
        Some(vec![amp * cos(phase), amp * sin(phase)])
    }
    fn is_contractive(&self) -> bool {
        true
    }
}

/// Van der Pol oscillator `y1' = y2`, `y2' = mu (1 - y1^2) y2 - y1`.
#[derive(Debug, Clone, Copy)]
pub struct VanDerPol {
    pub mu: f64,
}

impl VanDerPol {
    pub fn new(mu: f64) -> Self {
        Self { mu }
    }
}

impl OdeSystem for VanDerPol {
    fn dim(&self) -> usize {
        2
    }
    fn rhs(&self, _t: f64, y: &[f64], dydt: &mut [f64]) {
        dydt[0] = y[1];
        dydt[1] = self.mu * (1.0 - y[0] * y[0]) * y[1] - y[0];
    }
    fn jacobian(&self, _t: f64, y: &[f64]) -> Option<Matrix> {
        Some(Matrix::from_rows(&[
            &[0.0, 1.0],
            &[
                -1.0 - 2.0 * self.mu * y[0] * y[1],
                self.mu * (1.0 - y[0] * y[0]),
            ],
        ]))
    }
}

/// Default forward-difference increment for component `y_j`.
pub fn fd_increment(y_j: f64) -> f64 {
    sqrt(f64::EPSILON) * abs(y_j).max(1.0)
}

/// Forward-difference Jacobian with a fixed increment `h_fd` for every column.
pub fn fd_jacobian(system: &dyn OdeSystem, t: f64, y: &[f64], h_fd: f64) -> Matrix {
    fd_jacobian_with(system, t, y, |_| h_fd)
}

/// Forward-difference Jacobian with the per-column increment of
/// [`fd_increment`].
pub fn fd_jacobian_auto(system: &dyn OdeSystem, t: f64, y: &[f64]) -> Matrix {
    fd_jacobian_with(system, t, y, fd_increment)
}

fn fd_jacobian_with(
    system: &dyn OdeSystem,
    t: f64,
    y: &[f64],
    increment: impl Fn(f64) -> f64,
) -> Matrix {
    let n = system.dim();
    let f0 = system.rhs_vec(t, y);
    let mut jac = Matrix::zeros(n);
    let mut yp = y.to_vec();
    let mut fp = vec![0.0; n];
    for j in 0..n {
        let h = increment(y[j]);
        yp[j] = y[j] + h;
        // Exact representable increment.
        let h = yp[j] - y[j];
        system.rhs(t, &yp, &mut fp);
        for i in 0..n {
            jac[(i, j)] = (fp[i] - f0[i]) / h;
        }
        yp[j] = y[j];
    }
    jac
}

/// Jacobian of `system`, analytic when available.
pub fn jacobian_or_fd(system: &dyn OdeSystem, t: f64, y: &[f64]) -> Matrix {
    system
        .jacobian(t, y)
        .unwrap_or_else(|| fd_jacobian_auto(system, t, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn registry_contents() {
        for name in PROBLEM_NAMES {
            let inst = registry_lookup(name).unwrap();
            assert_eq!(inst.y0.len(), inst.system.dim());
            assert!(inst.t_end > inst.t0);
        }
        let decay = registry_lookup("decay").unwrap();
        assert_abs_diff_eq!(
            decay.exact(1.0).unwrap()[0],
            0.367_879_441_171_442_3,
            epsilon = 1e-15
        );
        assert_eq!(
            registry_lookup("quadratic").unwrap().exact(3.0).unwrap(),
            vec![9.0]
        );
        let vdp = registry_lookup("vanderpol").unwrap();
        assert!(vdp.exact(1.0).is_none());
        assert_eq!(vdp.y0, vec![2.0, 0.0]);
    }

    #[test]
    fn unknown_name_lists_registry() {
        let err = registry_lookup("lorenz").unwrap_err();
        let msg = err.to_string();
        for name in PROBLEM_NAMES {
            assert!(msg.contains(name), "{msg}");
        }
        assert!(registry_lookup("decay:3").is_err());
        assert!(registry_lookup("vanderpol:-1").is_err());
        assert!(registry_lookup("vanderpol:10").is_ok());
    }

    #[test]
    fn initial_conditions_match_exact() {
        for name in PROBLEM_NAMES {
            let inst = registry_lookup(name).unwrap();
            if let Some(e) = inst.exact(inst.t0) {
                for (a, b) in e.iter().zip(&inst.y0) {
                    assert_abs_diff_eq!(a, b, epsilon = 1e-15);
                }
            }
        }
    }

    #[test]
    fn exact_solutions_satisfy_the_ode() {
        // Central differences of the exact solution against f.
        for name in PROBLEM_NAMES {
            let inst = registry_lookup(name).unwrap();
            if inst.exact(0.0).is_none() {
                continue;
            }
            for &t in &[0.1, 0.7, 1.3] {
                let h = 1e-5;
                let yp = inst.exact(t + h).unwrap();
                let ym = inst.exact(t - h).unwrap();
                let f = inst.system.rhs_vec(t, &inst.exact(t).unwrap());
                for i in 0..f.len() {
                    let d = (yp[i] - ym[i]) / (2.0 * h);
                    assert!((d - f[i]).abs() < 1e-8, "{name} component {i} at t = {t}");
                }
            }
        }
    }

    #[test]
    fn fd_jacobian_examples() {
        let j = fd_jacobian(&Decay::new(1.0), 0.3, &[0.7], 1e-7);
        assert_abs_diff_eq!(j[(0, 0)], -1.0, epsilon = 1e-8);
        let j = fd_jacobian(&Quadratic, 0.3, &[0.7], 1e-7);
        assert_eq!(j[(0, 0)], 0.0);

        let vdp = VanDerPol::new(1.0);
        let y = [1.0, 1.0];
        let analytic = vdp.jacobian(0.0, &y).unwrap();
        assert_eq!(analytic, Matrix::from_rows(&[&[0.0, 1.0], &[-3.0, 0.0]]));
        let fd = fd_jacobian(&vdp, 0.0, &y, 1e-7);
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(fd[(i, j)], analytic[(i, j)], epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn fd_matches_analytic_everywhere() {
        let systems: Vec<Box<dyn OdeSystem>> = vec![
            Box::new(Decay::new(1.0)),
            Box::new(Oscillator::default()),
            Box::new(NonAutonomous),
            Box::new(VanDerPol::new(2.0)),
            Box::new(VanDerPol::new(10.0)),
        ];
        let pts = [[0.3, -0.2], [1.5, 0.9], [-2.0, 0.4]];
        for sys in &systems {
            for p in &pts {
                let y = &p[..sys.dim()];
                let a = sys.jacobian(0.4, y).unwrap();
                let fd = fd_jacobian(sys.as_ref(), 0.4, y, 1e-7);
                for i in 0..sys.dim() {
                    for j in 0..sys.dim() {
                        let scale = a[(i, j)].abs().max(1.0);
                        assert!((fd[(i, j)] - a[(i, j)]).abs() <= 1e-5 * scale);
                    }
                }
            }
        }
    }

    #[test]
    fn contractivity_holds_numerically() {
        // Small deterministic LCG keeps this test free of extra dependencies.
        let mut s: u64 = 0x9E37_79B9_7F4A_7C15;
        let mut rnd = move || {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 8.0 - 4.0
        };
        for name in PROBLEM_NAMES {
            let inst = registry_lookup(name).unwrap();
            let sys = inst.system.as_ref();
            if !sys.is_contractive() {
                continue;
            }
            for _ in 0..100 {
                let t = rnd().abs() * 3.0;
                let u: Vec<f64> = (0..sys.dim()).map(|_| rnd()).collect();
                let v: Vec<f64> = (0..sys.dim()).map(|_| rnd()).collect();
                let fu = sys.rhs_vec(t, &u);
                let fv = sys.rhs_vec(t, &v);
                let ip: f64 = (0..sys.dim())
                    .map(|i| (fu[i] - fv[i]) * (u[i] - v[i]))
                    .sum();
                assert!(ip <= 1e-12, "{name}: {ip}");
            }
        }
    }
}
