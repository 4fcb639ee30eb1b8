//! Lindblad master equation for the three-level Λ system, integrated with
//! fixed-step RK4. Used as the time-domain check of the weak-probe formula.
//!
//! Rotating frame, ħ = 1, basis order (|1⟩, |2⟩, |3⟩):
//!
//! ```text
//! H = −δ|2⟩⟨2| − Δ_p|3⟩⟨3| − (Ω_P/2)(|3⟩⟨1| + h.c.) − (Ω_C/2)(|3⟩⟨2| + h.c.)
//! L₁ = √(Γ/2)|1⟩⟨3|,  L₂ = √(Γ/2)|2⟩⟨3|,  L₃ = √(2γ₁₂)|2⟩⟨2|
//! ```
//!
//! The Doppler width is ignored here: the integrator is a homogeneous model.

use nalgebra::Matrix3;
use num_complex::Complex64;

use super::LambdaParams;
use crate::error::{Error, Result};

type M3 = Matrix3<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(pub M3);

impl DensityMatrix {
    /// Pure population in level `k` (0-based).
    pub fn ground(k: usize) -> Self {
        let mut m = M3::zeros();
        m[(k, k)] = Complex64::new(1.0, 0.0);
        DensityMatrix(m)
    }

    /// Diagonal state with the given populations.
    pub fn populations(p: [f64; 3]) -> Self {
        let mut m = M3::zeros();
        for (k, v) in p.iter().enumerate() {
            m[(k, k)] = Complex64::new(*v, 0.0);
        }
        DensityMatrix(m)
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    /// ⟨3|ρ|1⟩, the probe optical coherence.
    pub fn probe_coherence(&self) -> Complex64 {
        self.0[(2, 0)]
    }

    /// Checks unit trace, hermiticity and positive semidefiniteness.
    pub fn validate(&self) -> Result<()> {
        let tr = self.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > 1e-9 {
            return Err(Error::Domain(format!("initial state has trace {tr}, expected 1")));
        }
        let adj = self.0.adjoint();
        if (self.0 - adj).norm() > 1e-12 {
            return Err(Error::Domain("initial state is not Hermitian".into()));
        }
        let eig = self.0.symmetric_eigenvalues();
        if eig.iter().any(|&e| e < -1e-12) {
            return Err(Error::Domain(format!(
                "initial state is not positive semidefinite (eigenvalues {eig:?})"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BlochOptions {
    /// RK4 step, s. `None` picks 1/40 of the fastest rate in the problem.
    pub step: Option<f64>,
    /// Number of evenly spaced samples returned (including t = 0 and the end).
    pub samples: usize,
}

impl Default for BlochOptions {
    fn default() -> Self {
        BlochOptions {
            step: None,
            samples: 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
}

impl Trajectory {
    pub fn last(&self) -> &DensityMatrix {
        self.states.last().expect("trajectory is never empty")
    }
}

struct Liouvillian {
    h: M3,
    jumps: Vec<M3>,
    anti: M3,
}

impl Liouvillian {
    fn new(p: &LambdaParams) -> Self {
        let c = |x: f64| Complex64::new(x, 0.0);
        let mut h = M3::zeros();
        h[(1, 1)] = c(-p.two_photon_detuning);
        h[(2, 2)] = c(-(p.one_photon_detuning + p.two_photon_detuning));
        h[(2, 0)] = c(-p.omega_p / 2.0);
        h[(0, 2)] = c(-p.omega_p / 2.0);
        h[(2, 1)] = c(-p.omega_c / 2.0);
        h[(1, 2)] = c(-p.omega_c / 2.0);

        let mut l1 = M3::zeros();
        l1[(0, 2)] = c((p.gamma_excited / 2.0).sqrt());
        let mut l2 = M3::zeros();
        l2[(1, 2)] = c((p.gamma_excited / 2.0).sqrt());
        let mut l3 = M3::zeros();
        l3[(1, 1)] = c((2.0 * p.gamma_ground).sqrt());
        let jumps = vec![l1, l2, l3];
        let anti = jumps
            .iter()
            .fold(M3::zeros(), |acc, l| acc + l.adjoint() * l);
        Liouvillian { h, jumps, anti }
    }

    fn apply(&self, rho: &M3) -> M3 {
        let i = Complex64::i();
        let comm = self.h * rho - rho * self.h;
        let mut out = -comm * i;
        for l in &self.jumps {
            out += l * rho * l.adjoint();
        }
        out - (self.anti * rho + rho * self.anti) * Complex64::new(0.5, 0.0)
    }
}

/// Integrate the master equation from `initial` for `duration` seconds.
pub fn integrate_bloch(
    p: &LambdaParams,
    duration: f64,
    initial: &DensityMatrix,
    options: BlochOptions,
) -> Result<Trajectory> {
    if !(duration > 0.0) {
        return Err(Error::Domain(format!("duration must be > 0 (got {duration})")));
    }
    initial.validate()?;
    let lv = Liouvillian::new(p);
    let fastest = [
        p.gamma_excited,
        p.gamma_ground,
        p.omega_c,
        p.omega_p,
        p.one_photon_detuning.abs() + p.two_photon_detuning.abs(),
    ]
    .into_iter()
    .fold(0.0f64, f64::max);
    let step = options
        .step
        .unwrap_or(if fastest > 0.0 { 1.0 / (40.0 * fastest) } else { duration });
    let steps = ((duration / step).ceil() as usize).max(1);
    let h = duration / steps as f64;
    let samples = options.samples.max(2);
    let mut sample_at: Vec<usize> = (0..samples)
        .map(|k| (k as f64 * steps as f64 / (samples - 1) as f64).round() as usize)
        .collect();
    sample_at.dedup();

    let mut rho = initial.0;
    let mut times = Vec::with_capacity(sample_at.len());
    let mut states = Vec::with_capacity(sample_at.len());
    let mut next = 0;
    let half = Complex64::new(h / 2.0, 0.0);
    let full = Complex64::new(h, 0.0);
    let sixth = Complex64::new(h / 6.0, 0.0);
    let two = Complex64::new(2.0, 0.0);
    for n in 0..=steps {
        if next < sample_at.len() && sample_at[next] == n {
            times.push(n as f64 * h);
            states.push(DensityMatrix(rho));
            next += 1;
        }
        if n == steps {
            break;
        }
        let k1 = lv.apply(&rho);
        let k2 = lv.apply(&(rho + k1 * half));
        let k3 = lv.apply(&(rho + k2 * half));
        let k4 = lv.apply(&(rho + k3 * full));
        rho += (k1 + k2 * two + k3 * two + k4) * sixth;
    }
    Ok(Trajectory { times, states })
}
