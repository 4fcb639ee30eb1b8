//! Ballistic atoms in a cylindrical cell with diffusely scattering walls.
//!
//! The cell axis is z, the beam is coaxial and runs the full length. Each
//! atom draws from its own ChaCha8 stream (`seed`, stream = atom index) and
//! per-atom tallies are reduced in index order, so the statistics do not
//! depend on how many worker threads ran the atoms.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::CellConfig;
use crate::csvio;
use crate::error::{Error, Result};

/// Last histogram bin collects this many bounces or more.
pub const HISTOGRAM_BINS: usize = 64;

/// Wall-collision times simulated per atom.
const COLLISIONS_PER_ATOM: f64 = 400.0;

#[derive(Debug, Clone, PartialEq)]
pub struct TransitStatistics {
    pub n_atoms: usize,
    pub seed: u64,
    /// s
    pub mean_in_beam_time: f64,
    pub mean_in_beam_time_stderr: f64,
    /// s
    pub mean_dark_time: f64,
    pub mean_dark_time_stderr: f64,
    /// Time-averaged fraction of atoms inside the beam.
    pub in_beam_fraction: f64,
    pub in_beam_fraction_stderr: f64,
    /// Normalized distribution of wall bounces between leaving and re-entering
    /// the beam; the last bin is an overflow bin.
    pub bounce_count_histogram: Vec<f64>,
    pub mean_bounces: f64,
    /// Mean over re-entries of p_w^n · [dark time < coherence lifetime].
    pub coherent_return_probability: f64,
}

impl TransitStatistics {
    /// Transit full width 1/(2π·t_in) implied by the mean crossing time, Hz.
    pub fn transit_width_hz(&self) -> f64 {
        1.0 / (2.0 * PI * self.mean_in_beam_time)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("quantity,value\n");
        let mut row = |k: &str, v: String| out.push_str(&format!("{k},{v}\n"));
        row("n_atoms", self.n_atoms.to_string());
        row("seed", self.seed.to_string());
        for (k, v) in [
            ("mean_in_beam_time_s", self.mean_in_beam_time),
            ("mean_in_beam_time_stderr_s", self.mean_in_beam_time_stderr),
            ("mean_dark_time_s", self.mean_dark_time),
            ("mean_dark_time_stderr_s", self.mean_dark_time_stderr),
            ("in_beam_fraction", self.in_beam_fraction),
            ("in_beam_fraction_stderr", self.in_beam_fraction_stderr),
            ("mean_bounces", self.mean_bounces),
            ("coherent_return_probability", self.coherent_return_probability),
        ] {
            row(k, csvio::fmt_f64(v));
        }
        for (k, v) in self.bounce_count_histogram.iter().enumerate() {
            row(&format!("bounces_{k}"), csvio::fmt_f64(*v));
        }
        out
    }
}

#[derive(Debug, Clone, Default)]
struct Moments {
    n: u64,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn merge(&mut self, o: &Moments) {
        self.n += o.n;
        self.sum += o.sum;
        self.sum_sq += o.sum_sq;
    }

    fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    fn stderr(&self) -> f64 {
        if self.n < 2 {
            return f64::INFINITY;
        }
        let n = self.n as f64;
        let var = (self.sum_sq - self.sum * self.sum / n) / (n - 1.0);
        (var.max(0.0) / n).sqrt()
    }
}

#[derive(Debug, Clone)]
struct Tally {
    in_beam: Moments,
    dark: Moments,
    fraction: f64,
    histogram: Vec<u64>,
    bounces: Moments,
    coherent: f64,
}

struct Geometry {
    radius: f64,
    length: f64,
    beam_radius: f64,
    speed: f64,
    survival: f64,
    coherence_time: f64,
    duration: f64,
}

/// Smallest positive root of a·t² + b·t + c = 0 leaving the disc (`c ≤ 0`).
fn exit_time(a: f64, b: f64, c: f64) -> f64 {
    if a <= 0.0 {
        return f64::INFINITY;
    }
    let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
    // Stable form of the larger root.
    if b <= 0.0 {
        (-b + disc) / (2.0 * a)
    } else {
        let q = -0.5 * (b + disc);
        if q == 0.0 {
            0.0
        } else {
            c / q
        }
    }
}

fn diffuse_velocity(rng: &mut ChaCha8Rng, normal: [f64; 3], t1: [f64; 3], t2: [f64; 3], vp: f64) -> [f64; 3] {
    // Flux-weighted speed: v² ~ Gamma(2, v_p²).
    let u: f64 = -(1.0 - rng.random::<f64>()).ln() - (1.0 - rng.random::<f64>()).ln();
    let speed = vp * u.sqrt();
    let cos_t = rng.random::<f64>().sqrt();
    let sin_t = (1.0 - cos_t * cos_t).sqrt();
    let phi = 2.0 * PI * rng.random::<f64>();
    let (a, b) = (sin_t * phi.cos(), sin_t * phi.sin());
    let mut v = [0.0; 3];
    for k in 0..3 {
        v[k] = speed * (cos_t * normal[k] + a * t1[k] + b * t2[k]);
    }
    v
}

fn simulate_atom(g: &Geometry, seed: u64, index: u64) -> Tally {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let r = g.radius * rng.random::<f64>().sqrt();
    let phi = 2.0 * PI * rng.random::<f64>();
    let mut pos = [r * phi.cos(), r * phi.sin(), g.length * rng.random::<f64>()];
    let sigma = g.speed / 2f64.sqrt();
    let mut vel = [0.0; 3];
    for v in &mut vel {
        *v = sigma * rng.sample::<f64, _>(StandardNormal);
    }

    let mut tally = Tally {
        in_beam: Moments::default(),
        dark: Moments::default(),
        fraction: 0.0,
        histogram: vec![0; HISTOGRAM_BINS],
        bounces: Moments::default(),
        coherent: 0.0,
    };
    let beam2 = g.beam_radius * g.beam_radius;
    let mut t = 0.0;
    let mut in_time = 0.0;
    let mut entered_at: Option<f64> = None;
    let mut left_at: Option<f64> = None;
    let mut bounces_dark: u64 = 0;

    while t < g.duration {
        let a = vel[0] * vel[0] + vel[1] * vel[1];
        let b = 2.0 * (pos[0] * vel[0] + pos[1] * vel[1]);
        let rho2 = pos[0] * pos[0] + pos[1] * pos[1];
        let t_side = exit_time(a, b, (rho2 - g.radius * g.radius).min(0.0));
        let t_cap = if vel[2] > 0.0 {
            (g.length - pos[2]) / vel[2]
        } else if vel[2] < 0.0 {
            -pos[2] / vel[2]
        } else {
            f64::INFINITY
        };
        let hit = t_side.min(t_cap);
        let seg = hit.min(g.duration - t);

        // Beam crossing along this straight segment.
        let c_beam = rho2 - beam2;
        let inside_at_start = c_beam < 0.0;
        let disc = b * b - 4.0 * a * c_beam;
        let (t_in, t_out) = if a > 0.0 && disc > 0.0 {
            let s = disc.sqrt();
            ((-b - s) / (2.0 * a), (-b + s) / (2.0 * a))
        } else if inside_at_start {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else {
            (f64::INFINITY, f64::INFINITY)
        };
        let lo = t_in.max(0.0);
        let hi = t_out.min(seg);
        if hi > lo {
            in_time += hi - lo;
        }
        if !inside_at_start && t_in > 0.0 && t_in < seg {
            let now = t + t_in;
            if let Some(left) = left_at {
                let dark = now - left;
                tally.dark.push(dark);
                tally.bounces.push(bounces_dark as f64);
                tally.histogram[(bounces_dark as usize).min(HISTOGRAM_BINS - 1)] += 1;
                if dark < g.coherence_time {
                    tally.coherent += g.survival.powf(bounces_dark as f64);
                }
            }
            entered_at = Some(now);
        }
        let was_inside = inside_at_start || (t_in > 0.0 && t_in < seg);
        if was_inside && t_out > 0.0 && t_out < seg {
            let now = t + t_out;
            if let Some(start) = entered_at.take() {
                tally.in_beam.push(now - start);
            }
            left_at = Some(now);
            bounces_dark = 0;
        }

        t += seg;
        for k in 0..3 {
            pos[k] += vel[k] * seg;
        }
        if seg < hit {
            break;
        }
        bounces_dark += 1;
        if t_cap <= t_side {
            let up = vel[2] < 0.0;
            pos[2] = if up { 0.0 } else { g.length };
            let n = [0.0, 0.0, if up { 1.0 } else { -1.0 }];
            vel = diffuse_velocity(&mut rng, n, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], g.speed);
        } else {
            let rho = (pos[0] * pos[0] + pos[1] * pos[1]).sqrt();
            let scale = g.radius * (1.0 - 1e-12) / rho;
            pos[0] *= scale;
            pos[1] *= scale;
            let n = [-pos[0] / rho, -pos[1] / rho, 0.0];
            let t1 = [-n[1], n[0], 0.0];
            vel = diffuse_velocity(&mut rng, n, t1, [0.0, 0.0, 1.0], g.speed);
        }
    }
    tally.fraction = in_time / g.duration;
    tally
}

/// Monte Carlo transit statistics using the global rayon pool.
pub fn simulate_trajectories(cell: &CellConfig, n_atoms: usize, seed: u64) -> Result<TransitStatistics> {
    simulate_trajectories_with_workers(cell, n_atoms, seed, None)
}

/// As [`simulate_trajectories`] on a dedicated pool of `workers` threads.
pub fn simulate_trajectories_with_workers(
    cell: &CellConfig,
    n_atoms: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<TransitStatistics> {
    if n_atoms == 0 {
        return Err(Error::Domain("n_atoms must be >= 1".into()));
    }
    cell.validate()?;
    let intrinsic = cell.intrinsic_decoherence(2)?;
    let g = Geometry {
        radius: cell.cell_radius,
        length: cell.cell_length,
        beam_radius: 0.5 * cell.beam.diameter,
        speed: cell.thermal_speed(),
        survival: cell.wall_survival,
        coherence_time: if intrinsic > 0.0 { 1.0 / intrinsic } else { f64::INFINITY },
        duration: COLLISIONS_PER_ATOM / cell.wall_collision_rate(),
    };
    let run = || -> Vec<Tally> {
        (0..n_atoms as u64)
            .into_par_iter()
            .map(|i| simulate_atom(&g, seed, i))
            .collect()
    };
    let tallies = match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::Domain(format!("cannot start worker pool: {e}")))?
            .install(run),
        None => run(),
    };

    let mut in_beam = Moments::default();
    let mut dark = Moments::default();
    let mut bounces = Moments::default();
    let mut fraction = Moments::default();
    let mut histogram = vec![0u64; HISTOGRAM_BINS];
    let mut coherent = 0.0;
    for t in &tallies {
        in_beam.merge(&t.in_beam);
        dark.merge(&t.dark);
        bounces.merge(&t.bounces);
        fraction.push(t.fraction);
        coherent += t.coherent;
        for (h, c) in histogram.iter_mut().zip(&t.histogram) {
            *h += c;
        }
    }
    if in_beam.n == 0 || dark.n == 0 {
        return Err(Error::numerical(
            "no complete beam crossings were observed; increase n_atoms",
        ));
    }
    let returns = dark.n as f64;
    Ok(TransitStatistics {
        n_atoms,
        seed,
        mean_in_beam_time: in_beam.mean(),
        mean_in_beam_time_stderr: in_beam.stderr(),
        mean_dark_time: dark.mean(),
        mean_dark_time_stderr: dark.stderr(),
        in_beam_fraction: fraction.mean(),
        in_beam_fraction_stderr: fraction.stderr(),
        bounce_count_histogram: histogram.iter().map(|&c| c as f64 / returns).collect(),
        mean_bounces: bounces.mean(),
        coherent_return_probability: coherent / returns,
    })
}
