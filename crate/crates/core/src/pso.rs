//! Particle swarm search for the variable weights that minimize the
//! reconstruction error of the weighted FCM.
//!
//! Particles move freely in `R^n`; a position is only interpreted as weights
//! after projection onto the simplex. Each particle owns an RNG stream
//! derived from `(seed, particle index)` and fitness values are merged in
//! particle order, so results do not depend on the thread count.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fcm::{fit_fcm, FcmParams, WeightVector};
use crate::reconstruction::reconstruct_model;
use crate::series::SubsequenceSet;

/// Resolution of the fitness cache key.
const CACHE_GRID: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PsoConfig {
    pub particles: usize,
    pub max_iter: usize,
    pub inertia_start: f64,
    pub inertia_end: f64,
    pub cognitive: f64,
    pub social: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub seed: u64,
}

impl Default for PsoConfig {
    /// Small swarm suitable for interactive runs and CI.
    fn default() -> Self {
        Self {
            particles: 30,
            max_iter: 50,
            inertia_start: 0.9,
            inertia_end: 0.4,
            cognitive: 1.49,
            social: 1.49,
            v_min: -0.25,
            v_max: 0.25,
            seed: 0,
        }
    }
}

impl PsoConfig {
    /// Full-size swarm: 500 particles for 2000 iterations.
    pub fn full_scale() -> Self {
        Self {
            particles: 500,
            max_iter: 2000,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.particles == 0 || self.max_iter == 0 {
            return Err(Error::InvalidConfig(
                "PSO needs at least one particle and one iteration".into(),
            ));
        }
        if !(self.v_min < self.v_max) {
            return Err(Error::InvalidConfig(format!(
                "velocity bounds [{}, {}] are empty",
                self.v_min, self.v_max
            )));
        }
        let finite = [
            self.inertia_start,
            self.inertia_end,
            self.cognitive,
            self.social,
            self.v_min,
            self.v_max,
        ];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidConfig(
                "PSO coefficients must be finite".into(),
            ));
        }
        Ok(())
    }

    /// Inertia weight at iteration `iter`, linear from start to end.
    pub fn inertia(&self, iter: usize) -> f64 {
        if self.max_iter <= 1 {
            return self.inertia_start;
        }
        let frac = iter as f64 / (self.max_iter - 1) as f64;
        self.inertia_start + (self.inertia_end - self.inertia_start) * frac
    }
}

#[derive(Debug, Clone)]
pub struct PsoResult {
    pub best_weights: WeightVector,
    pub best_fitness: f64,
    /// Global-best fitness after initialization, then after every iteration.
    pub fitness_trace: Vec<f64>,
    /// Number of distinct fitness evaluations (cache misses).
    pub evaluations: usize,
}

/// Clamps negatives to zero and rescales to unit sum; falls back to uniform
/// weights when nothing positive remains.
pub fn project_to_simplex(raw: &[f64]) -> WeightVector {
    let n = raw.len();
    let clamped: Vec<f64> = raw
        .iter()
        .map(|&x| if x.is_finite() && x > 0.0 { x } else { 0.0 })
        .collect();
    let sum: f64 = clamped.iter().sum();
    if sum < 1e-12 || !sum.is_finite() {
        return WeightVector::uniform(n);
    }
    WeightVector::new(clamped.into_iter().map(|x| x / sum).collect())
        .unwrap_or_else(|_| WeightVector::uniform(n))
}

/// Velocity and position update for one particle with explicit random
/// coefficients `r1`, `r2` (one per dimension).
#[allow(clippy::too_many_arguments)]
pub fn update_particle(
    position: &mut [f64],
    velocity: &mut [f64],
    pbest: &[f64],
    gbest: &[f64],
    inertia: f64,
    r1: &[f64],
    r2: &[f64],
    config: &PsoConfig,
) {
    for d in 0..position.len() {
        let z = position[d];
        let v = inertia * velocity[d]
            + config.cognitive * r1[d] * (pbest[d] - z)
            + config.social * r2[d] * (gbest[d] - z);
        velocity[d] = v.clamp(config.v_min, config.v_max);
        position[d] = z + velocity[d];
    }
}

/// Positions, velocities and personal bests of a swarm.
#[derive(Debug, Clone)]
pub struct Swarm {
    pub positions: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    pub pbest: Vec<Vec<f64>>,
    pub pbest_fitness: Vec<f64>,
    rngs: Vec<ChaCha8Rng>,
}

impl Swarm {
    /// Particle 0 starts at the uniform weights; the rest at uniform draws
    /// from `[0, 1]^dim`.
    pub fn new(dim: usize, config: &PsoConfig) -> Self {
        let mut rngs: Vec<ChaCha8Rng> = (0..config.particles)
            .map(|k| {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                rng.set_stream(k as u64);
                rng
            })
            .collect();
        let mut positions = Vec::with_capacity(config.particles);
        let mut velocities = Vec::with_capacity(config.particles);
        for (k, rng) in rngs.iter_mut().enumerate() {
            let z: Vec<f64> = if k == 0 {
                vec![1.0 / dim as f64; dim]
            } else {
                (0..dim).map(|_| rng.gen::<f64>()).collect()
            };
            let v = (0..dim)
                .map(|_| rng.gen_range(config.v_min..=config.v_max))
                .collect();
            positions.push(z);
            velocities.push(v);
        }
        Self {
            pbest: positions.clone(),
            pbest_fitness: vec![f64::INFINITY; config.particles],
            positions,
            velocities,
            rngs,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Moves every particle once, drawing `r1`, `r2` from its own stream.
pub fn pso_step(swarm: &mut Swarm, gbest: &[f64], iter: usize, config: &PsoConfig) {
    let inertia = config.inertia(iter);
    let dim = gbest.len();
    for k in 0..swarm.len() {
        let rng = &mut swarm.rngs[k];
        let r1: Vec<f64> = (0..dim).map(|_| rng.gen()).collect();
        let r2: Vec<f64> = (0..dim).map(|_| rng.gen()).collect();
        update_particle(
            &mut swarm.positions[k],
            &mut swarm.velocities[k],
            &swarm.pbest[k],
            gbest,
            inertia,
            &r1,
            &r2,
            config,
        );
    }
}

fn cache_key(w: &WeightVector) -> Vec<i64> {
    w.as_slice()
        .iter()
        .map(|x| (x * CACHE_GRID).round() as i64)
        .collect()
}

/// Minimizes `fitness` over the simplex in `dim` dimensions.
pub fn minimize_on_simplex<F>(dim: usize, config: &PsoConfig, fitness: F) -> Result<PsoResult>
where
    F: Fn(&WeightVector) -> Result<f64> + Sync,
{
    config.validate()?;
    if dim == 0 {
        return Err(Error::InvalidConfig("cannot optimize zero weights".into()));
    }
    if dim == 1 {
        let w = WeightVector::uniform(1);
        let f = fitness(&w)?;
        return Ok(PsoResult {
            best_weights: w,
            best_fitness: f,
            fitness_trace: vec![f],
            evaluations: 1,
        });
    }

    let mut cache: HashMap<Vec<i64>, (WeightVector, f64)> = HashMap::new();
    let mut evaluate = |positions: &[Vec<f64>]| -> Result<Vec<(WeightVector, f64)>> {
        let keyed: Vec<(Vec<i64>, WeightVector)> = positions
            .iter()
            .map(|z| {
                let w = project_to_simplex(z);
                (cache_key(&w), w)
            })
            .collect();
        let mut pending: Vec<(Vec<i64>, WeightVector)> = Vec::new();
        for (key, w) in &keyed {
            if !cache.contains_key(key) && !pending.iter().any(|(k, _)| k == key) {
                pending.push((key.clone(), w.clone()));
            }
        }
        let fresh = pending
            .par_iter()
            .map(|(_, w)| fitness(w))
            .collect::<Result<Vec<f64>>>()?;
        for ((key, w), f) in pending.into_iter().zip(fresh) {
            cache.insert(key, (w, f));
        }
        Ok(keyed.iter().map(|(key, _)| cache[key].clone()).collect())
    };

    let mut swarm = Swarm::new(dim, config);
    let initial = evaluate(&swarm.positions)?;
    let mut gbest_index = 0;
    for (k, (_, f)) in initial.iter().enumerate() {
        swarm.pbest_fitness[k] = *f;
        if *f < initial[gbest_index].1 {
            gbest_index = k;
        }
    }
    let mut gbest = swarm.positions[gbest_index].clone();
    let (mut best_weights, mut best_fitness) = initial[gbest_index].clone();
    let mut trace = Vec::with_capacity(config.max_iter + 1);
    trace.push(best_fitness);

    for iter in 0..config.max_iter {
        pso_step(&mut swarm, &gbest, iter, config);
        let results = evaluate(&swarm.positions)?;
        for (k, (w, f)) in results.into_iter().enumerate() {
            if f < swarm.pbest_fitness[k] {
                swarm.pbest_fitness[k] = f;
                swarm.pbest[k] = swarm.positions[k].clone();
            }
            if f < best_fitness {
                best_fitness = f;
                best_weights = w;
                gbest = swarm.positions[k].clone();
            }
        }
        trace.push(best_fitness);
    }

    Ok(PsoResult {
        best_weights,
        best_fitness,
        fitness_trace: trace,
        evaluations: cache.len(),
    })
}

/// Reconstruction error of the FCM fitted with `weights`.
pub fn weight_fitness(
    set: &SubsequenceSet,
    clusters: usize,
    m: f64,
    weights: &WeightVector,
    fcm: &FcmParams,
) -> Result<f64> {
    let model = fit_fcm(set, clusters, m, weights, fcm)?;
    Ok(reconstruct_model(&model, set.blocks())?.total_error)
}

/// Searches the weights minimizing [`weight_fitness`]. Every fitness call
/// clusters from the same seeded initial partition.
pub fn optimize_weights(
    set: &SubsequenceSet,
    clusters: usize,
    m: f64,
    fcm: &FcmParams,
    config: &PsoConfig,
) -> Result<PsoResult> {
    let (vars, _) = set
        .block_shape()
        .ok_or_else(|| Error::InvalidConfig("no subsequences to cluster".into()))?;
    minimize_on_simplex(vars, config, |w| weight_fitness(set, clusters, m, w, fcm))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_examples() {
        assert_eq!(project_to_simplex(&[0.2, 0.8]).as_slice(), &[0.2, 0.8]);
        assert_eq!(project_to_simplex(&[2.0, 2.0]).as_slice(), &[0.5, 0.5]);
        assert_eq!(project_to_simplex(&[-1.0, 3.0]).as_slice(), &[0.0, 1.0]);
        assert_eq!(project_to_simplex(&[-1.0, -3.0]).as_slice(), &[0.5, 0.5]);
        assert_eq!(project_to_simplex(&[5.0]).as_slice(), &[1.0]);
    }

    #[test]
    fn inertia_schedule() {
        let c = PsoConfig {
            max_iter: 11,
            ..PsoConfig::default()
        };
        assert!((c.inertia(0) - 0.9).abs() < 1e-12);
        assert!((c.inertia(5) - 0.65).abs() < 1e-12);
        assert!((c.inertia(10) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn attraction_vanishes_at_bests() {
        let c = PsoConfig::default();
        let mut z = vec![0.3, 0.1];
        let mut v = vec![0.2, -0.1];
        let best = z.clone();
        update_particle(
            &mut z,
            &mut v,
            &best,
            &best,
            0.9,
            &[0.7, 0.2],
            &[0.4, 0.9],
            &c,
        );
        assert!((v[0] - 0.18).abs() < 1e-12 && (v[1] + 0.09).abs() < 1e-12);
        assert!((z[0] - 0.48).abs() < 1e-12 && (z[1] - 0.01).abs() < 1e-12);
    }

    #[test]
    fn velocity_is_clamped() {
        let c = PsoConfig::default();
        let mut z = vec![0.0];
        let mut v = vec![3.0];
        update_particle(&mut z, &mut v, &[0.0], &[0.0], 1.0, &[0.5], &[0.5], &c);
        assert_eq!(v[0], c.v_max);
        assert_eq!(z[0], c.v_max);
    }

    #[test]
    fn fixed_coefficient_update() {
        let c = PsoConfig {
            v_min: -1.0,
            v_max: 1.0,
            ..PsoConfig::default()
        };
        let mut z = vec![0.0, 0.0];
        let mut v = vec![0.0, 0.0];
        update_particle(
            &mut z,
            &mut v,
            &[1.0, 0.0],
            &[0.0, 1.0],
            0.9,
            &[0.5; 2],
            &[0.5; 2],
            &c,
        );
        for x in v.iter().chain(&z) {
            assert!((x - 0.745).abs() < 1e-12);
        }
    }

    #[test]
    fn finds_minimum_of_quadratic() {
        let target = [0.6, 0.3, 0.1];
        let config = PsoConfig {
            seed: 4,
            ..PsoConfig::default()
        };
        let res = minimize_on_simplex(3, &config, |w| {
            Ok(w.as_slice()
                .iter()
                .zip(&target)
                .map(|(a, b)| (a - b).powi(2))
                .sum())
        })
        .unwrap();
        assert!(res.best_fitness < 1e-3, "{}", res.best_fitness);
        assert!(res.fitness_trace.windows(2).all(|p| p[1] <= p[0]));
        assert_eq!(res.fitness_trace.len(), config.max_iter + 1);
    }

    #[test]
    fn evaluated_weights_stay_on_simplex() {
        let seen = std::sync::Mutex::new(Vec::new());
        minimize_on_simplex(
            4,
            &PsoConfig {
                particles: 10,
                max_iter: 10,
                ..PsoConfig::default()
            },
            |w| {
                seen.lock().unwrap().push(w.clone());
                Ok(w.as_slice()[0])
            },
        )
        .unwrap();
        for w in seen.into_inner().unwrap() {
            assert!((w.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(w.as_slice().iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn uniform_particle_bounds_result() {
        let f = |w: &WeightVector| Ok((w.as_slice()[0] - 0.5).abs() + 1.0);
        let res = minimize_on_simplex(
            2,
            &PsoConfig {
                particles: 1,
                max_iter: 3,
                ..PsoConfig::default()
            },
            f,
        )
        .unwrap();
        assert_eq!(res.best_fitness, 1.0);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let f = |w: &WeightVector| {
            let s = w.as_slice();
            Ok((s[0] * 7.0).sin() + (s[1] * 3.0).cos() * s[2])
        };
        let config = PsoConfig {
            seed: 11,
            ..PsoConfig::default()
        };
        let a = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| minimize_on_simplex(3, &config, f).unwrap());
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| minimize_on_simplex(3, &config, f).unwrap());
        assert_eq!(a.best_weights, b.best_weights);
        assert_eq!(a.best_fitness.to_bits(), b.best_fitness.to_bits());
        assert_eq!(a.fitness_trace, b.fitness_trace);
    }

    #[test]
    fn invalid_configs() {
        let f = |_: &WeightVector| Ok(0.0);
        let bad_v = PsoConfig {
            v_min: 0.3,
            v_max: 0.3,
            ..PsoConfig::default()
        };
        assert!(minimize_on_simplex(2, &bad_v, f).is_err());
        let no_particles = PsoConfig {
            particles: 0,
            ..PsoConfig::default()
        };
        assert!(minimize_on_simplex(2, &no_particles, f).is_err());
    }
}
