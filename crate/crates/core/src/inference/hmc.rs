//! Static-trajectory HMC with a jittered number of leapfrog steps, a diagonal
//! mass matrix and dual-averaging step-size adaptation.
//!
//! Warmup schedule for `W` warmup iterations: the step size adapts
//! throughout; draws from `[W/2, W − W/10)` estimate the mass matrix, which is
//! installed at `W − W/10`, after which step-size adaptation restarts for the
//! final window. The sampling phase uses the averaged step size.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::Trajectory;
use crate::prior::PriorSpec;

use super::layout::ThetaLayout;
use super::posterior::{transformed_draw, LogDensity, Posterior, TransformedDraw};

/// Energy error above which a transition counts as divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1000.0;

#[derive(Clone, Debug, PartialEq)]
pub struct HmcConfig {
    pub chains: usize,
    /// Total iterations per chain, warmup included.
    pub iterations: usize,
    pub warmup: usize,
    pub target_accept: f64,
    pub max_leapfrog: usize,
    pub seed: u64,
    /// Half-width of the uniform jitter added to each initial coordinate.
    pub init_jitter: f64,
}

impl Default for HmcConfig {
    fn default() -> Self {
        Self {
            chains: 4,
            iterations: 2000,
            warmup: 1000,
            target_accept: 0.8,
            max_leapfrog: 64,
            seed: 1,
            init_jitter: 0.5,
        }
    }
}

impl HmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 {
            return Err(Error::InvalidConfig("need at least one chain".into()));
        }
        if self.warmup >= self.iterations {
            return Err(Error::InvalidConfig(format!(
                "warmup ({}) must be below iterations ({})",
                self.warmup, self.iterations
            )));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::InvalidConfig(format!("target_accept = {} must lie in (0, 1)", self.target_accept)));
        }
        if self.max_leapfrog == 0 {
            return Err(Error::InvalidConfig("max_leapfrog must be at least 1".into()));
        }
        if !(self.init_jitter >= 0.0 && self.init_jitter.is_finite()) {
            return Err(Error::InvalidConfig(format!("init_jitter = {} must be a finite non-negative number", self.init_jitter)));
        }
        Ok(())
    }

    pub fn draws_per_chain(&self) -> usize {
        self.iterations - self.warmup
    }
}

/// Post-warmup output of one chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainDraws {
    /// One row per post-warmup iteration.
    pub theta: Vec<Vec<f64>>,
    pub log_density: Vec<f64>,
    pub accept_stat: Vec<f64>,
    pub divergent: Vec<bool>,
    pub leapfrog_steps: Vec<usize>,
    pub step_size: f64,
    /// Diagonal of the inverse mass matrix.
    pub inv_mass: Vec<f64>,
    pub warmup_divergences: usize,
}

impl ChainDraws {
    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn divergences(&self) -> usize {
        self.divergent.iter().filter(|&&d| d).count()
    }

    pub fn mean_accept_stat(&self) -> f64 {
        self.accept_stat.iter().sum::<f64>() / self.accept_stat.len().max(1) as f64
    }
}

/// Sampler output across chains.
#[derive(Clone, Debug, PartialEq)]
pub struct Draws {
    pub names: Vec<String>,
    pub chains: Vec<ChainDraws>,
    layout: Option<ThetaLayout>,
}

impl Draws {
    pub fn new(names: Vec<String>, chains: Vec<ChainDraws>, layout: Option<ThetaLayout>) -> Self {
        Self { names, chains, layout }
    }

    pub fn n_chains(&self) -> usize {
        self.chains.len()
    }

    /// Draws per chain (the shortest chain if they differ).
    pub fn n_draws(&self) -> usize {
        self.chains.iter().map(ChainDraws::len).min().unwrap_or(0)
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn layout(&self) -> Option<&ThetaLayout> {
        self.layout.as_ref()
    }

    /// Coordinate `k` split by chain.
    pub fn coordinate(&self, k: usize) -> Vec<Vec<f64>> {
        self.chains.iter().map(|c| c.theta.iter().map(|t| t[k]).collect()).collect()
    }

    pub fn divergences(&self) -> usize {
        self.chains.iter().map(ChainDraws::divergences).sum()
    }

    pub fn mean_accept_stat(&self) -> f64 {
        let n: usize = self.chains.iter().map(|c| c.accept_stat.len()).sum();
        self.chains.iter().flat_map(|c| &c.accept_stat).sum::<f64>() / n.max(1) as f64
    }

    /// All draws in chain order.
    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.chains.iter().flat_map(|c| c.theta.iter().map(Vec::as_slice))
    }

    /// `(Σ, Φ, P's)` of one stored draw.
    pub fn transformed(&self, chain: usize, iteration: usize) -> Result<TransformedDraw> {
        let layout = self
            .layout
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("draws carry no VAR layout".into()))?;
        transformed_draw(layout, &self.chains[chain].theta[iteration])
    }

    /// Every stored draw mapped back to `(Σ, Φ, P's)`, in chain order.
    pub fn transformed_all(&self) -> Result<Vec<TransformedDraw>> {
        let layout = self
            .layout
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("draws carry no VAR layout".into()))?;
        self.iter().map(|t| transformed_draw(layout, t)).collect()
    }
}

struct State {
    q: Vec<f64>,
    log_density: f64,
    grad: Vec<f64>,
}

/// Integrates `steps` leapfrog steps of size `eps` with kinetic energy
/// `½ Σ inv_mass_i p_i²`. Returns the end point, momentum, log density and gradient.
pub fn leapfrog<D: LogDensity + ?Sized>(
    target: &D,
    q: &[f64],
    p: &[f64],
    grad: &[f64],
    eps: f64,
    inv_mass: &[f64],
    steps: usize,
) -> Result<(Vec<f64>, Vec<f64>, f64, Vec<f64>)> {
    let mut q = q.to_vec();
    let mut p = p.to_vec();
    let mut g = grad.to_vec();
    let mut lp = f64::NAN;
    for _ in 0..steps {
        for i in 0..q.len() {
            p[i] += 0.5 * eps * g[i];
            q[i] += eps * inv_mass[i] * p[i];
        }
        let (v, ng) = target.log_density_and_gradient(&q)?;
        lp = v;
        g = ng;
        for i in 0..q.len() {
            p[i] += 0.5 * eps * g[i];
        }
    }
    Ok((q, p, lp, g))
}

fn kinetic(p: &[f64], inv_mass: &[f64]) -> f64 {
    0.5 * p.iter().zip(inv_mass).map(|(pi, w)| w * pi * pi).sum::<f64>()
}

fn draw_momentum(rng: &mut ChaCha20Rng, inv_mass: &[f64]) -> Vec<f64> {
    inv_mass
        .iter()
        .map(|w| {
            let z: f64 = rng.sample(StandardNormal);
            z / w.sqrt()
        })
        .collect()
}

struct Transition {
    accept_prob: f64,
    divergent: bool,
    steps: usize,
}

fn transition<D: LogDensity + ?Sized>(
    target: &D,
    state: &mut State,
    eps: f64,
    inv_mass: &[f64],
    steps: usize,
    rng: &mut ChaCha20Rng,
) -> Transition {
    let p0 = draw_momentum(rng, inv_mass);
    let h0 = -state.log_density + kinetic(&p0, inv_mass);
    let u: f64 = rng.random();
    let (accept_prob, divergent, proposal) = match leapfrog(target, &state.q, &p0, &state.grad, eps, inv_mass, steps) {
        Ok((q, p, lp, g)) => {
            let dh = -lp + kinetic(&p, inv_mass) - h0;
            if !dh.is_finite() || dh > DIVERGENCE_THRESHOLD {
                (0.0, true, None)
            } else {
                ((-dh).exp().min(1.0), false, Some((q, lp, g)))
            }
        }
        Err(_) => (0.0, true, None),
    };
    if let Some((q, lp, g)) = proposal {
        if u < accept_prob {
            state.q = q;
            state.log_density = lp;
            state.grad = g;
        }
    }
    Transition {
        accept_prob,
        divergent,
        steps,
    }
}

/// Step-size heuristic: double or halve until a single step's acceptance crosses ½.
fn find_reasonable_step<D: LogDensity + ?Sized>(
    target: &D,
    state: &State,
    inv_mass: &[f64],
    start: f64,
    rng: &mut ChaCha20Rng,
) -> f64 {
    let p0 = draw_momentum(rng, inv_mass);
    let h0 = -state.log_density + kinetic(&p0, inv_mass);
    let log_accept = |eps: f64| match leapfrog(target, &state.q, &p0, &state.grad, eps, inv_mass, 1) {
        Ok((_, p, lp, _)) => {
            let v = h0 - (-lp + kinetic(&p, inv_mass));
            if v.is_finite() {
                v
            } else {
                f64::NEG_INFINITY
            }
        }
        Err(_) => f64::NEG_INFINITY,
    };
    let mut eps = start;
    let up = log_accept(eps) > 0.5f64.ln();
    for _ in 0..50 {
        let next = if up { eps * 2.0 } else { eps * 0.5 };
        let crossed = if up {
            log_accept(next) <= 0.5f64.ln()
        } else {
            log_accept(next) > 0.5f64.ln()
        };
        if crossed {
            return if up { eps } else { next };
        }
        eps = next;
    }
    eps
}

/// Nesterov dual averaging of `log ε`.
struct DualAveraging {
    mu: f64,
    target: f64,
    h_bar: f64,
    log_eps: f64,
    log_eps_bar: f64,
    count: f64,
}

impl DualAveraging {
    const GAMMA: f64 = 0.05;
    const T0: f64 = 10.0;
    const KAPPA: f64 = 0.75;

    fn new(eps: f64, target: f64) -> Self {
        Self {
            mu: (10.0 * eps).ln(),
            target,
            h_bar: 0.0,
            log_eps: eps.ln(),
            log_eps_bar: 0.0,
            count: 0.0,
        }
    }

    fn update(&mut self, accept_prob: f64) -> f64 {
        self.count += 1.0;
        let w = 1.0 / (self.count + Self::T0);
        self.h_bar = (1.0 - w) * self.h_bar + w * (self.target - accept_prob);
        self.log_eps = self.mu - self.count.sqrt() / Self::GAMMA * self.h_bar;
        let k = self.count.powf(-Self::KAPPA);
        self.log_eps_bar = k * self.log_eps + (1.0 - k) * self.log_eps_bar;
        self.log_eps.exp()
    }

    fn final_step(&self) -> f64 {
        self.log_eps_bar.exp()
    }
}

/// Welford running variance.
struct Welford {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    fn new(d: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; d],
            m2: vec![0.0; d],
        }
    }

    fn push(&mut self, x: &[f64]) {
        self.n += 1;
        for i in 0..x.len() {
            let delta = x[i] - self.mean[i];
            self.mean[i] += delta / self.n as f64;
            self.m2[i] += delta * (x[i] - self.mean[i]);
        }
    }

    /// Sample variance shrunk toward `1e-3`, weight 5 pseudo-draws.
    fn regularised(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.m2
            .iter()
            .map(|m2| (n / (n + 5.0)) * m2 / (n - 1.0) + 1e-3 * (5.0 / (n + 5.0)))
            .collect()
    }
}

fn initialise<D: LogDensity + ?Sized>(target: &D, config: &HmcConfig, rng: &mut ChaCha20Rng) -> Result<State> {
    let mut last = Error::NonFinite("initial point".into());
    for _ in 0..100 {
        let mut q = target.initial_point(rng)?;
        if config.init_jitter > 0.0 {
            for v in q.iter_mut() {
                *v += rng.random_range(-config.init_jitter..=config.init_jitter);
            }
        }
        match target.log_density_and_gradient(&q) {
            Ok((lp, grad)) => return Ok(State { q, log_density: lp, grad }),
            Err(e) => last = e,
        }
    }
    Err(last)
}

fn run_chain<D: LogDensity + ?Sized>(target: &D, config: &HmcConfig, chain: usize) -> Result<ChainDraws> {
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed.wrapping_add(chain as u64));
    let d = target.dim();
    let mut state = initialise(target, config, &mut rng)?;
    let mut inv_mass = vec![1.0; d];
    let mut eps = find_reasonable_step(target, &state, &inv_mass, 1.0, &mut rng);
    let mut adapt = DualAveraging::new(eps, config.target_accept);

    let w = config.warmup;
    let mass_start = w / 2;
    let mass_end = w - w / 10;
    let mut welford = Welford::new(d);
    let mut warmup_divergences = 0;

    let n = config.draws_per_chain();
    let mut out = ChainDraws {
        theta: Vec::with_capacity(n),
        log_density: Vec::with_capacity(n),
        accept_stat: Vec::with_capacity(n),
        divergent: Vec::with_capacity(n),
        leapfrog_steps: Vec::with_capacity(n),
        step_size: eps,
        inv_mass: inv_mass.clone(),
        warmup_divergences: 0,
    };

    for it in 0..config.iterations {
        let steps = rng.random_range(1..=config.max_leapfrog);
        let t = transition(target, &mut state, eps, &inv_mass, steps, &mut rng);
        if it < w {
            warmup_divergences += t.divergent as usize;
            eps = adapt.update(t.accept_prob);
            if it >= mass_start && it < mass_end {
                welford.push(&state.q);
            }
            if it + 1 == mass_end && welford.n >= 10 {
                inv_mass = welford.regularised();
                eps = find_reasonable_step(target, &state, &inv_mass, eps, &mut rng);
                adapt = DualAveraging::new(eps, config.target_accept);
            }
            if it + 1 == w {
                eps = adapt.final_step();
            }
        } else {
            out.theta.push(state.q.clone());
            out.log_density.push(state.log_density);
            out.accept_stat.push(t.accept_prob);
            out.divergent.push(t.divergent);
            out.leapfrog_steps.push(t.steps);
        }
    }
    out.step_size = eps;
    out.inv_mass = inv_mass;
    out.warmup_divergences = warmup_divergences;
    Ok(out)
}

/// Runs `config.chains` independent chains on any target.
pub fn sample<D: LogDensity>(target: &D, config: &HmcConfig) -> Result<Draws> {
    sample_with_layout(target, config, None)
}

fn sample_with_layout<D: LogDensity>(target: &D, config: &HmcConfig, layout: Option<ThetaLayout>) -> Result<Draws> {
    config.validate()?;
    let chains = (0..config.chains)
        .into_par_iter()
        .map(|c| run_chain(target, config, c))
        .collect::<Result<Vec<_>>>()?;
    let total: usize = chains.iter().map(ChainDraws::len).sum();
    let divergent: usize = chains.iter().map(ChainDraws::divergences).sum();
    if total > 0 && divergent * 10 > total * 9 {
        return Err(Error::AllDivergent { divergent, total });
    }
    Ok(Draws::new(target.coordinate_names(), chains, layout))
}

/// Posterior sampling for a VAR(p) with the given prior.
pub fn run_hmc(data: &Trajectory, spec: &PriorSpec, p: usize, config: &HmcConfig) -> Result<Draws> {
    let post = Posterior::new(data, spec.clone(), p)?;
    sample_posterior(&post, config)
}

pub fn sample_posterior(post: &Posterior, config: &HmcConfig) -> Result<Draws> {
    sample_with_layout(post, config, Some(post.layout().clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct StdNormal(usize);

    impl LogDensity for StdNormal {
        fn dim(&self) -> usize {
            self.0
        }

        fn log_density(&self, q: &[f64]) -> Result<f64> {
            Ok(-0.5 * q.iter().map(|x| x * x).sum::<f64>())
        }

        fn log_density_and_gradient(&self, q: &[f64]) -> Result<(f64, Vec<f64>)> {
            Ok((self.log_density(q)?, q.iter().map(|x| -x).collect()))
        }
    }

    /// Gaussian with very different scales per coordinate.
    struct Scaled(Vec<f64>);

    impl LogDensity for Scaled {
        fn dim(&self) -> usize {
            self.0.len()
        }

        fn log_density(&self, q: &[f64]) -> Result<f64> {
            Ok(-0.5 * q.iter().zip(&self.0).map(|(x, s)| (x / s).powi(2)).sum::<f64>())
        }

        fn log_density_and_gradient(&self, q: &[f64]) -> Result<(f64, Vec<f64>)> {
            Ok((self.log_density(q)?, q.iter().zip(&self.0).map(|(x, s)| -x / (s * s)).collect()))
        }
    }

    struct Nowhere;

    impl LogDensity for Nowhere {
        fn dim(&self) -> usize {
            1
        }

        fn log_density(&self, q: &[f64]) -> Result<f64> {
            // Finite only at the starting point, so every trajectory fails.
            if q[0] == 0.0 {
                Ok(0.0)
            } else {
                Err(Error::NonFinite("outside".into()))
            }
        }

        fn log_density_and_gradient(&self, q: &[f64]) -> Result<(f64, Vec<f64>)> {
            Ok((self.log_density(q)?, vec![1.0]))
        }
    }

    fn config(chains: usize, iterations: usize, warmup: usize) -> HmcConfig {
        HmcConfig {
            chains,
            iterations,
            warmup,
            max_leapfrog: 16,
            ..HmcConfig::default()
        }
    }

    #[test]
    fn config_validation() {
        assert!(HmcConfig::default().validate().is_ok());
        assert!(config(1, 10, 10).validate().is_err());
        assert!(HmcConfig { target_accept: 1.0, ..HmcConfig::default() }.validate().is_err());
        assert!(HmcConfig { chains: 0, ..HmcConfig::default() }.validate().is_err());
        assert!(HmcConfig { max_leapfrog: 0, ..HmcConfig::default() }.validate().is_err());
    }

    #[test]
    fn leapfrog_is_reversible() {
        let target = Scaled(vec![1.0, 0.3, 2.0]);
        let q = vec![0.5, -0.2, 1.0];
        let p = vec![0.3, 1.1, -0.7];
        let inv_mass = vec![1.0, 0.1, 3.0];
        let (_, g) = target.log_density_and_gradient(&q).unwrap();
        let (q1, p1, _, g1) = leapfrog(&target, &q, &p, &g, 0.05, &inv_mass, 20).unwrap();
        let neg: Vec<f64> = p1.iter().map(|x| -x).collect();
        let (q2, p2, _, _) = leapfrog(&target, &q1, &neg, &g1, 0.05, &inv_mass, 20).unwrap();
        for i in 0..3 {
            assert!((q2[i] - q[i]).abs() < 1e-8);
            assert!((p2[i] + p[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn standard_normal_moments() {
        let d = 10;
        let draws = sample(&StdNormal(d), &config(4, 1500, 500)).unwrap();
        for k in 0..d {
            let chains = draws.coordinate(k);
            let all: Vec<f64> = chains.concat();
            let n = all.len() as f64;
            let mean = all.iter().sum::<f64>() / n;
            let var = all.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let ess = crate::inference::diagnostics::ess_bulk(&chains).unwrap();
            let mcse = (var / ess).sqrt();
            assert!(mean.abs() < 4.0 * mcse, "coordinate {k}: mean {mean}, mcse {mcse}");
            assert!((var - 1.0).abs() < 0.1, "coordinate {k}: var {var}");
        }
        assert!(draws.mean_accept_stat() > 0.6);
    }

    #[test]
    fn mass_matrix_learns_scales() {
        let scales = vec![0.1, 1.0, 4.0];
        let draws = sample(&Scaled(scales.clone()), &config(1, 1200, 800)).unwrap();
        for (w, s) in draws.chains[0].inv_mass.iter().zip(&scales) {
            let ratio = w / (s * s);
            assert!(ratio > 0.5 && ratio < 2.0, "inverse mass {w} for scale {s}");
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = config(2, 200, 100);
        let a = sample(&StdNormal(3), &cfg).unwrap();
        let b = sample(&StdNormal(3), &cfg).unwrap();
        assert_eq!(a, b);
        let c = sample(&StdNormal(3), &HmcConfig { seed: 2, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn reports_all_divergent() {
        let err = sample(&Nowhere, &HmcConfig { init_jitter: 0.0, ..config(1, 60, 20) }).unwrap_err();
        assert!(matches!(err, Error::AllDivergent { .. }), "{err:?}");
    }
}
