//! Hybrid binary/continuous particle swarm engine.
//!
//! Each particle carries a bit vector (which dimensions participate), a
//! real vector (how much each participates), and three velocities: V1
//! drives V2, V2 is binarized through a sigmoid into the bit vector, and
//! V3 moves the real vector. The engine knows nothing about
//! summarization; fitness is supplied through [`FitnessEval`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A closed velocity/position range; the clamp radius is half its width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitRange {
    pub lower: f64,
    pub upper: f64,
}

impl LimitRange {
    pub fn new(lower: f64, upper: f64) -> Self {
        assert!(upper >= lower, "limit upper {upper} < lower {lower}");
        Self { lower, upper }
    }

    /// delta = (upper - lower) / 2; values are clamped to [-delta, delta].
    pub fn delta(&self) -> f64 {
        (self.upper - self.lower) / 2.0
    }
}

fn clamp(value: f64, radius: f64) -> f64 {
    value.clamp(-radius, radius)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SwarmConfig {
    /// Dimensionality of the search space.
    pub n: usize,
    pub pop_size: usize,
    pub max_ite: usize,
    pub phi1: f64,
    pub phi2: f64,
    pub phi3: f64,
    pub phi4: f64,
    /// V1 range; V2 range; V3 range; position range for the real part.
    pub limit1: LimitRange,
    pub limit2: LimitRange,
    pub limit3: LimitRange,
    pub limit4: LimitRange,
    pub w_bin_start: f64,
    pub w_bin_end: f64,
    pub w_real_start: f64,
    pub w_real_end: f64,
    pub rng_seed: u64,
    /// Fraction of max_ite with a flat best fitness that triggers early stop.
    pub stall_fraction: f64,
}

/// Minimum improvement of the global best that counts as progress.
pub const STALL_EPSILON: f64 = 1e-6;

impl SwarmConfig {
    /// Reference hyperparameters: population 10, 100 iterations, unit
    /// acceleration coefficients, limits [0,1]/[0,6]/[0,0.5]/[0,6]; the
    /// binary inertia grows (sigmoid must start near its uncertain zone)
    /// while the real inertia decays classically.
    pub fn defaults(n: usize, rng_seed: u64) -> Self {
        Self {
            n,
            pop_size: 10,
            max_ite: 100,
            phi1: 1.0,
            phi2: 1.0,
            phi3: 1.0,
            phi4: 1.0,
            limit1: LimitRange::new(0.0, 1.0),
            limit2: LimitRange::new(0.0, 6.0),
            limit3: LimitRange::new(0.0, 0.5),
            limit4: LimitRange::new(0.0, 6.0),
            w_bin_start: 0.2,
            w_bin_end: 1.0,
            w_real_start: 1.0,
            w_real_end: 0.4,
            rng_seed,
            stall_fraction: 0.2,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.pop_size < 2 {
            return Err(format!("pop_size must be >= 2, got {}", self.pop_size));
        }
        if self.max_ite < 1 {
            return Err("max_ite must be >= 1".to_string());
        }
        if self.n == 0 {
            return Err("dimensionality must be >= 1".to_string());
        }
        if !(0.0..=1.0).contains(&self.stall_fraction) {
            return Err(format!("stall_fraction must be in [0,1], got {}", self.stall_fraction));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub bin: Vec<bool>,
    pub best_bin: Vec<bool>,
    pub real: Vec<f64>,
    pub best_real: Vec<f64>,
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    pub v3: Vec<f64>,
    pub fit: f64,
    pub best_fit: f64,
    /// Winning combination mask from the last evaluation.
    pub fit_mask: Vec<bool>,
}

/// Result of evaluating one particle: its fitness and the winning
/// combination mask (a subset of the evaluated bits).
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub fit: f64,
    pub fit_mask: Vec<bool>,
}

pub trait FitnessEval {
    fn evaluate(&self, bin: &[bool], real: &[f64]) -> Evaluation;
}

impl<F> FitnessEval for F
where
    F: Fn(&[bool], &[f64]) -> Evaluation,
{
    fn evaluate(&self, bin: &[bool], real: &[f64]) -> Evaluation {
        self(bin, real)
    }
}

/// Snapshot of the best particle found so far. The binary and real
/// positions always come from the same particle at the same evaluation.
#[derive(Debug, Clone)]
pub struct BestRecord {
    pub bin: Vec<bool>,
    pub real: Vec<f64>,
    pub fit: f64,
    pub fit_mask: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct SwarmState {
    pub particles: Vec<Particle>,
    pub the_best: Option<BestRecord>,
    pub ite: usize,
    pub w_bin: f64,
    pub w_real: f64,
}

/// One row of the optional convergence trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub ite: usize,
    pub best_fit: f64,
    pub mean_fit: f64,
    pub w_bin: f64,
    pub w_real: f64,
}

#[derive(Debug, Clone)]
pub struct SwarmResult {
    pub best: BestRecord,
    pub iterations: usize,
    pub trace: Vec<TraceRow>,
}

/// Linear inertia schedule between wStart and wEnd.
pub fn inertia(ite: usize, max_ite: usize, w_start: f64, w_end: f64) -> f64 {
    if max_ite <= 1 {
        return w_start;
    }
    w_start - (w_start - w_end) * ite as f64 / (max_ite - 1) as f64
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Update V1 and V2 of one particle. Deliberately takes no reference to
/// the particle's current bit vector: the binary velocity depends only on
/// the personal and neighborhood bests.
pub fn update_binary_velocity(
    p: &mut Particle,
    the_best_bin: &[bool],
    w_bin: f64,
    config: &SwarmConfig,
    rng: &mut impl Rng,
) {
    let d1 = config.limit1.delta();
    let d2 = config.limit2.delta();
    #[allow(clippy::needless_range_loop)]
    for j in 0..config.n {
        let r1: f64 = rng.gen();
        let r2: f64 = rng.gen();
        let own = if p.best_bin[j] { 1.0 } else { -1.0 };
        let social = if the_best_bin[j] { 1.0 } else { -1.0 };
        let v1 = w_bin * p.v1[j] + config.phi1 * r1 * own + config.phi2 * r2 * social;
        p.v1[j] = clamp(v1, d1);
        p.v2[j] = clamp(p.v2[j] + p.v1[j], d2);
    }
}

/// Sigmoid binarization of V2 into the bit vector.
pub fn binarize(p: &mut Particle, rng: &mut impl Rng) {
    for j in 0..p.bin.len() {
        let r: f64 = rng.gen();
        p.bin[j] = r < sigmoid(p.v2[j]);
    }
}

/// Update V3 and the real position of one particle.
pub fn update_continuous(
    p: &mut Particle,
    the_best_real: &[f64],
    w_real: f64,
    config: &SwarmConfig,
    rng: &mut impl Rng,
) {
    let d3 = config.limit3.delta();
    let d4 = config.limit4.delta();
    #[allow(clippy::needless_range_loop)]
    for j in 0..config.n {
        let r3: f64 = rng.gen();
        let r4: f64 = rng.gen();
        let v3 = w_real * p.v3[j]
            + config.phi3 * r3 * (p.best_real[j] - p.real[j])
            + config.phi4 * r4 * (the_best_real[j] - p.real[j]);
        p.v3[j] = clamp(v3, d3);
        p.real[j] = clamp(p.real[j] + p.v3[j], d4);
    }
}

/// Shrink V1 by 2% and V2 by 25% on every dimension that was selected in
/// the bit vector but canceled out of the winning combination.
pub fn apply_velocity_penalty(p: &mut Particle) {
    for j in 0..p.bin.len() {
        if p.bin[j] && !p.fit_mask[j] {
            p.v1[j] *= 0.98;
            p.v2[j] *= 0.75;
        }
    }
}

/// Early-stop test over the per-iteration global-best history.
/// `history[k]` is the best fitness after iteration k.
pub fn should_stop(completed: usize, history: &[f64], config: &SwarmConfig) -> bool {
    if completed >= config.max_ite {
        return true;
    }
    let window = (config.stall_fraction * config.max_ite as f64).ceil() as usize;
    if window == 0 || history.len() <= window {
        return false;
    }
    let now = history[history.len() - 1];
    let then = history[history.len() - 1 - window];
    now - then < STALL_EPSILON
}

/// Particle initialization: bits all zero, V2 zero (flip probability 0.5),
/// real position and V1/V3 uniform within their ranges.
pub fn init_swarm(config: &SwarmConfig, rng: &mut impl Rng) -> SwarmState {
    let d1 = config.limit1.delta();
    let d3 = config.limit3.delta();
    let d4 = config.limit4.delta();
    let particles = (0..config.pop_size)
        .map(|_| {
            let real: Vec<f64> = (0..config.n).map(|_| rng.gen_range(-d4..=d4)).collect();
            let v1: Vec<f64> = (0..config.n).map(|_| rng.gen_range(-d1..=d1)).collect();
            let v3: Vec<f64> = (0..config.n).map(|_| rng.gen_range(-d3..=d3)).collect();
            Particle {
                bin: vec![false; config.n],
                best_bin: vec![false; config.n],
                best_real: real.clone(),
                real,
                v1,
                v2: vec![0.0; config.n],
                v3,
                fit: f64::NEG_INFINITY,
                best_fit: f64::NEG_INFINITY,
                fit_mask: vec![false; config.n],
            }
        })
        .collect();
    SwarmState {
        particles,
        the_best: None,
        ite: 0,
        w_bin: config.w_bin_start,
        w_real: config.w_real_start,
    }
}

pub struct Swarm<'a, F: FitnessEval> {
    config: SwarmConfig,
    eval: &'a F,
}

impl<'a, F: FitnessEval> Swarm<'a, F> {
    pub fn new(config: SwarmConfig, eval: &'a F) -> Self {
        assert!(config.validate().is_ok(), "invalid swarm config");
        Self { config, eval }
    }

    pub fn run(&self) -> SwarmResult {
        self.run_traced(false)
    }

    /// Full optimization loop: evaluate, track bests, velocity penalty,
    /// elitism against the previous iteration, then move every particle.
    pub fn run_traced(&self, collect_trace: bool) -> SwarmResult {
        let cfg = &self.config;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        let mut state = init_swarm(cfg, &mut rng);

        let mut history: Vec<f64> = Vec::new();
        let mut trace = Vec::new();
        let mut prev_elite: Option<Particle> = None;
        let mut completed = 0;

        for ite in 0..cfg.max_ite {
            state.ite = ite;
            state.w_bin = inertia(ite, cfg.max_ite, cfg.w_bin_start, cfg.w_bin_end);
            state.w_real = inertia(ite, cfg.max_ite, cfg.w_real_start, cfg.w_real_end);

            for p in &mut state.particles {
                let Evaluation { fit, fit_mask } = self.eval.evaluate(&p.bin, &p.real);
                debug_assert_eq!(fit_mask.len(), cfg.n);
                p.fit = fit;
                p.fit_mask = fit_mask;
                if p.fit > p.best_fit {
                    p.best_fit = p.fit;
                    p.best_bin.copy_from_slice(&p.bin);
                    p.best_real.copy_from_slice(&p.real);
                }
                apply_velocity_penalty(p);
            }

            // Global best: strictly-better updates keep the earliest particle
            // on ties and make the record monotone across iterations.
            for p in &state.particles {
                let improves = state.the_best.as_ref().is_none_or(|b| p.fit > b.fit);
                if improves {
                    state.the_best = Some(BestRecord {
                        bin: p.bin.clone(),
                        real: p.real.clone(),
                        fit: p.fit,
                        fit_mask: p.fit_mask.clone(),
                    });
                }
            }

            // Elitism: the previous iteration's best particle overwrites the
            // current worst (lowest index on ties), personal bests included.
            if let Some(elite) = prev_elite.take() {
                let worst = state
                    .particles
                    .iter()
                    .enumerate()
                    .min_by(|(ia, a), (ib, b)| {
                        a.fit.partial_cmp(&b.fit).unwrap().then(ia.cmp(ib))
                    })
                    .map(|(i, _)| i)
                    .unwrap();
                state.particles[worst] = elite;
            }
            let elite_idx = state
                .particles
                .iter()
                .enumerate()
                .max_by(|(ia, a), (ib, b)| a.fit.partial_cmp(&b.fit).unwrap().then(ib.cmp(ia)))
                .map(|(i, _)| i)
                .unwrap();
            prev_elite = Some(state.particles[elite_idx].clone());

            completed = ite + 1;
            let best_fit = state.the_best.as_ref().unwrap().fit;
            history.push(best_fit);
            if collect_trace {
                let mean_fit = state.particles.iter().map(|p| p.fit).sum::<f64>()
                    / state.particles.len() as f64;
                trace.push(TraceRow {
                    ite,
                    best_fit,
                    mean_fit,
                    w_bin: state.w_bin,
                    w_real: state.w_real,
                });
            }

            if should_stop(completed, &history, cfg) {
                break;
            }

            let best = state.the_best.clone().unwrap();
            for p in &mut state.particles {
                update_binary_velocity(p, &best.bin, state.w_bin, cfg, &mut rng);
                binarize(p, &mut rng);
                update_continuous(p, &best.real, state.w_real, cfg, &mut rng);
            }
        }

        SwarmResult {
            best: state.the_best.expect("at least one iteration ran"),
            iterations: completed,
            trace,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval_count_bits(bin: &[bool], _real: &[f64]) -> Evaluation {
        Evaluation {
            fit: bin.iter().filter(|&&b| b).count() as f64,
            fit_mask: bin.to_vec(),
        }
    }

    fn config(seed: u64) -> SwarmConfig {
        SwarmConfig::defaults(16, seed)
    }

    #[test]
    fn init_binary_part_all_zero() {
        let cfg = config(3);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        let state = init_swarm(&cfg, &mut rng);
        assert_eq!(state.particles.len(), 10);
        for p in &state.particles {
            assert_eq!(p.bin.len(), 16);
            assert!(p.bin.iter().all(|&b| !b));
            assert!(p.v2.iter().all(|&v| v == 0.0));
            let d4 = cfg.limit4.delta();
            assert!(p.real.iter().all(|&r| (-d4..=d4).contains(&r)));
        }
    }

    #[test]
    fn init_deterministic_per_seed() {
        let cfg = config(9);
        let mut r1 = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        let mut r2 = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        let a = init_swarm(&cfg, &mut r1);
        let b = init_swarm(&cfg, &mut r2);
        assert_eq!(a.particles, b.particles);
    }

    #[test]
    fn inertia_endpoints_and_midpoint() {
        assert_eq!(inertia(0, 101, 1.0, 0.4), 1.0);
        assert_eq!(inertia(100, 101, 1.0, 0.4), 0.4);
        assert!((inertia(50, 101, 1.0, 0.4) - 0.7).abs() < 1e-12);
        assert_eq!(inertia(0, 1, 0.8, 0.2), 0.8);
    }

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(3.0) - 0.952574).abs() < 1e-5);
        assert!((sigmoid(-3.0) - (1.0 - sigmoid(3.0))).abs() < 1e-12);
    }

    #[test]
    fn binarize_frequency_near_half_at_zero_velocity() {
        let cfg = config(1);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut p = init_swarm(&cfg, &mut rng).particles.remove(0);
        let mut ones = 0usize;
        let draws = 100_000 / cfg.n;
        for _ in 0..draws {
            binarize(&mut p, &mut rng);
            ones += p.bin.iter().filter(|&&b| b).count();
        }
        let frac = ones as f64 / (draws * cfg.n) as f64;
        assert!((0.49..=0.51).contains(&frac), "fraction {frac}");
    }

    #[test]
    fn binary_velocity_clamped_and_attracted() {
        let cfg = config(5);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        let mut p = init_swarm(&cfg, &mut rng).particles.remove(0);
        p.v1 = vec![0.0; cfg.n];
        p.best_bin = vec![true; cfg.n];
        let best = vec![true; cfg.n];
        update_binary_velocity(&mut p, &best, 0.5, &cfg, &mut rng);
        let d1 = cfg.limit1.delta();
        let d2 = cfg.limit2.delta();
        for j in 0..cfg.n {
            assert!(p.v1[j] >= 0.0, "both attraction terms non-negative");
            assert!(p.v1[j].abs() <= d1);
            assert!(p.v2[j].abs() <= d2);
        }
    }

    #[test]
    fn v2_clamp_exact() {
        let cfg = config(5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut p = init_swarm(&cfg, &mut rng).particles.remove(0);
        p.v2 = vec![2.9; cfg.n];
        p.v1 = vec![1.0; cfg.n]; // will be re-derived but stays positive
        p.best_bin = vec![true; cfg.n];
        update_binary_velocity(&mut p, &vec![true; cfg.n], 1.0, &cfg, &mut rng);
        for j in 0..cfg.n {
            assert!(p.v2[j] <= 3.0 + 1e-15);
        }
    }

    #[test]
    fn continuous_fixed_point() {
        let cfg = config(2);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        let mut p = init_swarm(&cfg, &mut rng).particles.remove(0);
        p.v3 = vec![0.0; cfg.n];
        p.best_real = p.real.clone();
        let best = p.real.clone();
        let before = p.real.clone();
        update_continuous(&mut p, &best, 0.7, &cfg, &mut rng);
        assert_eq!(p.real, before);
        assert!(p.v3.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn continuous_clamps() {
        let cfg = config(2);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut p = init_swarm(&cfg, &mut rng).particles.remove(0);
        p.real = vec![2.9; cfg.n];
        p.best_real = vec![3.0; cfg.n];
        update_continuous(&mut p, &vec![3.0; cfg.n], 1.0, &cfg, &mut rng);
        for j in 0..cfg.n {
            assert!(p.v3[j].abs() <= cfg.limit3.delta() + 1e-15);
            assert!(p.real[j].abs() <= cfg.limit4.delta() + 1e-15);
        }
    }

    #[test]
    fn penalty_only_hits_canceled_dims() {
        let cfg = config(2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut p = init_swarm(&cfg, &mut rng).particles.remove(0);
        p.bin = vec![true; cfg.n];
        p.fit_mask = vec![true; cfg.n];
        p.fit_mask[0] = false;
        p.fit_mask[1] = false;
        p.v1 = vec![-0.5; cfg.n];
        p.v2 = vec![2.0; cfg.n];
        apply_velocity_penalty(&mut p);
        assert!((p.v1[0] - -0.49).abs() < 1e-12);
        assert!((p.v2[1] - 1.5).abs() < 1e-12);
        assert_eq!(p.v1[2], -0.5);
        assert_eq!(p.v2[2], 2.0);
    }

    #[test]
    fn penalty_noop_when_masks_agree() {
        let cfg = config(2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut p = init_swarm(&cfg, &mut rng).particles.remove(0);
        p.bin = vec![true; cfg.n];
        p.fit_mask = vec![true; cfg.n];
        p.v1 = vec![0.3; cfg.n];
        let before = p.clone();
        apply_velocity_penalty(&mut p);
        assert_eq!(p, before);
    }

    #[test]
    fn stop_at_max_ite_and_on_stall() {
        let mut cfg = config(1);
        cfg.max_ite = 100;
        cfg.stall_fraction = 0.2;
        assert!(should_stop(100, &vec![1.0; 100], &cfg));
        // Strictly improving: never stalls.
        let improving: Vec<f64> = (0..50).map(|i| i as f64).collect();
        assert!(!should_stop(50, &improving, &cfg));
        // Improvement followed by 20 flat iterations.
        let mut flat = vec![0.0, 1.0];
        flat.extend(std::iter::repeat_n(1.0, 20));
        assert!(should_stop(flat.len(), &flat, &cfg));
        assert!(!should_stop(21, &flat[..21], &cfg));
    }

    #[test]
    fn run_is_deterministic_and_monotone() {
        let cfg = config(42);
        let swarm = Swarm::new(cfg.clone(), &eval_count_bits);
        let a = swarm.run_traced(true);
        let b = Swarm::new(cfg, &eval_count_bits).run_traced(true);
        assert_eq!(a.best.bin, b.best.bin);
        assert_eq!(a.best.real, b.best.real);
        assert_eq!(a.best.fit, b.best.fit);
        for w in a.trace.windows(2) {
            assert!(w[1].best_fit >= w[0].best_fit);
        }
    }

    #[test]
    fn elitism_keeps_population_max_high() {
        // With an adversarial fitness the recorded best never decreases.
        let cfg = config(7);
        let result = Swarm::new(cfg, &eval_count_bits).run_traced(true);
        assert!(result.best.fit >= 1.0);
        assert!(result.iterations >= 1);
    }

    #[test]
    fn clamp_invariants_over_full_run() {
        let mut cfg = config(13);
        cfg.max_ite = 30;
        cfg.stall_fraction = 1.0; // no early stop
        let eval = |bin: &[bool], real: &[f64]| Evaluation {
            fit: real.iter().sum::<f64>() + bin.iter().filter(|&&b| b).count() as f64,
            fit_mask: bin.to_vec(),
        };
        // run manually to check per-iteration state
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        let mut state = init_swarm(&cfg, &mut rng);
        let best_bin = vec![true; cfg.n];
        let best_real = vec![0.0; cfg.n];
        for ite in 0..cfg.max_ite {
            let wb = inertia(ite, cfg.max_ite, cfg.w_bin_start, cfg.w_bin_end);
            let wr = inertia(ite, cfg.max_ite, cfg.w_real_start, cfg.w_real_end);
            for p in &mut state.particles {
                let e = eval(&p.bin, &p.real);
                p.fit = e.fit;
                p.fit_mask = e.fit_mask;
                apply_velocity_penalty(p);
                update_binary_velocity(p, &best_bin, wb, &cfg, &mut rng);
                binarize(p, &mut rng);
                update_continuous(p, &best_real, wr, &cfg, &mut rng);
                for j in 0..cfg.n {
                    assert!(p.v1[j].abs() <= cfg.limit1.delta() + 1e-12);
                    assert!(p.v2[j].abs() <= cfg.limit2.delta() + 1e-12);
                    assert!(p.v3[j].abs() <= cfg.limit3.delta() + 1e-12);
                    assert!(p.real[j].abs() <= cfg.limit4.delta() + 1e-12);
                }
            }
        }
    }
}
