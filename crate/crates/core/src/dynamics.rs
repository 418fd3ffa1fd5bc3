//! The interacting particle system: Gibbs-weighted consensus, one
//! Euler-Maruyama step of the consensus dynamics, and the empirical variance
//! functional used to monitor concentration around a reference point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this many particles the per-particle loops stay on one thread.
pub(crate) const PAR_MIN_PARTICLES: usize = 512;

/// `N` points in `R^d`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleEnsemble {
    n: usize,
    d: usize,
    positions: Vec<f64>,
}

impl ParticleEnsemble {
    /// Build an ensemble from row-major coordinates.
    pub fn new(n: usize, d: usize, positions: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyEnsemble);
        }
        if d == 0 {
            return Err(Error::invalid("dimension", "must be at least 1"));
        }
        if positions.len() != n * d {
            return Err(Error::DimensionMismatch {
                expected: n * d,
                found: positions.len(),
            });
        }
        if let Some(k) = positions.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFiniteCoordinate { index: k / d });
        }
        Ok(Self { n, d, positions })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().ok_or(Error::EmptyEnsemble)?.as_ref().len();
        let mut positions = Vec::with_capacity(rows.len() * d);
        for row in rows {
            let row = row.as_ref();
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: row.len(),
                });
            }
            positions.extend_from_slice(row);
        }
        Self::new(rows.len(), d, positions)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn particle(&self, i: usize) -> &[f64] {
        &self.positions[i * self.d..(i + 1) * self.d]
    }

    pub fn particles(&self) -> std::slice::ChunksExact<'_, f64> {
        self.positions.chunks_exact(self.d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.positions
    }

    /// A copy with every particle shifted by `shift`.
    pub fn translated(&self, shift: &[f64]) -> Result<Self> {
        check_dim(self.d, shift.len())?;
        let positions = self
            .particles()
            .flat_map(|p| p.iter().zip(shift).map(|(x, s)| x + s))
            .collect();
        Self::new(self.n, self.d, positions)
    }
}

/// Shape of the noise matrix `D` in the update.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Diffusion {
    /// Every coordinate is scaled by `|x - x_alpha|`.
    #[default]
    Isotropic,
    /// Coordinate `j` is scaled by `|(x - x_alpha)_j|`.
    Anisotropic,
}

/// Drift, noise, step and weight parameters of the particle system.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CboParams {
    pub lambda: f64,
    pub sigma: f64,
    pub dt: f64,
    pub alpha: f64,
    #[serde(default)]
    pub diffusion: Diffusion,
}

impl CboParams {
    pub fn validate(&self) -> Result<()> {
        let finite = |name, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(name, "must be finite"))
            }
        };
        finite("lambda", self.lambda)?;
        finite("sigma", self.sigma)?;
        finite("dt", self.dt)?;
        finite("alpha", self.alpha)?;
        if self.dt <= 0.0 {
            return Err(Error::invalid("dt", "must be positive"));
        }
        if self.alpha <= 0.0 {
            return Err(Error::invalid("alpha", "must be positive"));
        }
        if self.lambda < 0.0 {
            return Err(Error::invalid("lambda", "must be non-negative"));
        }
        if self.sigma < 0.0 {
            return Err(Error::invalid("sigma", "must be non-negative"));
        }
        Ok(())
    }

    /// Whether the mean-field decay condition holds in dimension `d`:
    /// `2 lambda > d sigma^2` for isotropic noise and `2 lambda > sigma^2` for
    /// anisotropic noise. Only a diagnostic; runs proceed either way.
    pub fn decay_condition_holds(&self, d: usize) -> bool {
        let effective_dim = match self.diffusion {
            Diffusion::Isotropic => d as f64,
            Diffusion::Anisotropic => 1.0,
        };
        2.0 * self.lambda > effective_dim * self.sigma * self.sigma
    }
}

/// The Gibbs-weighted ensemble average.
#[derive(Clone, Debug, PartialEq)]
pub struct ConsensusPoint {
    pub point: Vec<f64>,
    /// `ln Z_alpha`, with `Z_alpha = sum_i exp(-alpha v_i)`.
    pub log_normalizer: f64,
}

/// Unnormalized Gibbs weights `exp(-alpha (v_i - min v))` and their sum.
pub(crate) struct GibbsWeights {
    pub weights: Vec<f64>,
    pub sum: f64,
    pub min_value: f64,
}

impl GibbsWeights {
    pub fn new(values: &[f64], alpha: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index });
        }
        let min_value = values.iter().copied().fold(f64::INFINITY, f64::min);
        let weights: Vec<f64> = values
            .iter()
            .map(|v| (-alpha * (v - min_value)).exp())
            .collect();
        // fixed summation order keeps the result independent of thread count
        let sum = weights.iter().sum();
        Ok(Self {
            weights,
            sum,
            min_value,
        })
    }

    pub fn log_normalizer(&self, alpha: f64) -> f64 {
        self.sum.ln() - alpha * self.min_value
    }
}

/// Gibbs-weighted average of the particles, `sum_i x_i exp(-alpha v_i) / Z_alpha`.
///
/// Weights are shifted by the smallest value before exponentiation, so large
/// `alpha` (the benchmarks use `1e6`) does not underflow. The result is
/// clamped to the componentwise bounding box of the ensemble, which it can
/// only leave through rounding.
pub fn consensus_point(
    ensemble: &ParticleEnsemble,
    values: &[f64],
    alpha: f64,
) -> Result<ConsensusPoint> {
    if values.len() != ensemble.len() {
        return Err(Error::DimensionMismatch {
            expected: ensemble.len(),
            found: values.len(),
        });
    }
    let gibbs = GibbsWeights::new(values, alpha)?;
    Ok(weighted_average(
        ensemble.particles().zip(&gibbs.weights),
        ensemble.dim(),
        gibbs.sum,
        gibbs.log_normalizer(alpha),
    ))
}

/// Consensus over a subset of particles.
pub(crate) fn consensus_of_indices(
    ensemble: &ParticleEnsemble,
    values: &[f64],
    alpha: f64,
    indices: &[usize],
) -> Result<ConsensusPoint> {
    let subset: Vec<f64> = indices.iter().map(|&i| values[i]).collect();
    let gibbs = GibbsWeights::new(&subset, alpha)?;
    Ok(weighted_average(
        indices.iter().map(|&i| ensemble.particle(i)).zip(&gibbs.weights),
        ensemble.dim(),
        gibbs.sum,
        gibbs.log_normalizer(alpha),
    ))
}

fn weighted_average<'a>(
    rows: impl Iterator<Item = (&'a [f64], &'a f64)>,
    d: usize,
    total: f64,
    log_normalizer: f64,
) -> ConsensusPoint {
    let mut acc = vec![0.0; d];
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for (x, &w) in rows {
        for j in 0..d {
            acc[j] += w * x[j];
            lo[j] = lo[j].min(x[j]);
            hi[j] = hi[j].max(x[j]);
        }
    }
    let point = acc
        .iter()
        .zip(lo.iter().zip(&hi))
        .map(|(a, (&l, &h))| (a / total).clamp(l, h))
        .collect();
    ConsensusPoint {
        point,
        log_normalizer,
    }
}

/// Per-coordinate noise scales, the diagonal of `D` for one particle.
///
/// The anisotropic diagonal uses absolute differences; the noise is symmetric
/// so the sign does not change the law of the step.
pub fn diffusion_scales(particle: &[f64], consensus: &[f64], kind: Diffusion) -> Result<Vec<f64>> {
    check_dim(particle.len(), consensus.len())?;
    let mut out = vec![0.0; particle.len()];
    fill_scales(particle, consensus, kind, &mut out);
    Ok(out)
}

#[inline]
fn fill_scales(particle: &[f64], consensus: &[f64], kind: Diffusion, out: &mut [f64]) {
    match kind {
        Diffusion::Isotropic => {
            let norm = particle
                .iter()
                .zip(consensus)
                .map(|(x, c)| (x - c) * (x - c))
                .sum::<f64>()
                .sqrt();
            out.fill(norm);
        }
        Diffusion::Anisotropic => {
            for ((o, x), c) in out.iter_mut().zip(particle).zip(consensus) {
                *o = (x - c).abs();
            }
        }
    }
}

/// One Euler-Maruyama step toward a common consensus point:
/// `x_i - lambda (x_i - x_alpha) dt + sigma D_i B_i sqrt(dt)`.
///
/// `noise` holds `N x d` standard normals, row-major. The input ensemble is
/// left untouched.
pub fn euler_maruyama_step(
    ensemble: &ParticleEnsemble,
    consensus: &ConsensusPoint,
    params: &CboParams,
    noise: &[f64],
) -> Result<ParticleEnsemble> {
    check_dim(ensemble.dim(), consensus.point.len())?;
    let target = consensus.point.as_slice();
    step_with_targets(ensemble, params, noise, |_| Some(target))
}

/// Step where particle `i` relaxes toward `target(i)`; particles mapped to
/// `None` are left in place.
pub(crate) fn step_with_targets<'a, F>(
    ensemble: &ParticleEnsemble,
    params: &CboParams,
    noise: &[f64],
    target: F,
) -> Result<ParticleEnsemble>
where
    F: Fn(usize) -> Option<&'a [f64]> + Sync,
{
    let (n, d) = (ensemble.len(), ensemble.dim());
    if noise.len() != n * d {
        return Err(Error::DimensionMismatch {
            expected: n * d,
            found: noise.len(),
        });
    }
    let drift = params.lambda * params.dt;
    let noise_scale = params.sigma * params.dt.sqrt();
    let mut positions = ensemble.positions.clone();

    let update = |(i, row): (usize, &mut [f64])| {
        let Some(center) = target(i) else { return };
        let mut scales = [0.0f64; 16];
        let mut heap;
        let scales: &mut [f64] = if d <= scales.len() {
            &mut scales[..d]
        } else {
            heap = vec![0.0; d];
            &mut heap
        };
        fill_scales(row, center, params.diffusion, scales);
        let b = &noise[i * d..(i + 1) * d];
        for j in 0..d {
            row[j] += -drift * (row[j] - center[j]) + noise_scale * scales[j] * b[j];
        }
    };
    if n >= PAR_MIN_PARTICLES {
        positions
            .par_chunks_mut(d)
            .enumerate()
            .with_min_len(PAR_MIN_PARTICLES / 4)
            .for_each(update);
    } else {
        positions.chunks_mut(d).enumerate().for_each(update);
    }

    if let Some(k) = positions.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFiniteCoordinate { index: k / d });
    }
    Ok(ParticleEnsemble { n, d, positions })
}

/// Half the mean squared distance of the ensemble to `reference`.
pub fn variance_functional(ensemble: &ParticleEnsemble, reference: &[f64]) -> Result<f64> {
    if ensemble.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    check_dim(ensemble.dim(), reference.len())?;
    let total: f64 = ensemble
        .particles()
        .map(|x| {
            x.iter()
                .zip(reference)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        })
        .sum();
    Ok(total / (2.0 * ensemble.len() as f64))
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{IndexedStream, Purpose};
    use proptest::prelude::*;

    fn line(xs: &[f64]) -> ParticleEnsemble {
        ParticleEnsemble::new(xs.len(), 1, xs.to_vec()).unwrap()
    }

    fn params(lambda: f64, sigma: f64, dt: f64) -> CboParams {
        CboParams {
            lambda,
            sigma,
            dt,
            alpha: 1.0,
            diffusion: Diffusion::Isotropic,
        }
    }

    #[test]
    fn ensemble_rejects_bad_input() {
        assert_eq!(ParticleEnsemble::new(0, 1, vec![]), Err(Error::EmptyEnsemble));
        assert!(matches!(
            ParticleEnsemble::new(2, 2, vec![0.0; 3]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert_eq!(
            ParticleEnsemble::new(2, 1, vec![0.0, f64::NAN]),
            Err(Error::NonFiniteCoordinate { index: 1 })
        );
    }

    #[test]
    fn consensus_single_particle() {
        let e = ParticleEnsemble::from_rows(&[[1.5, -2.0]]).unwrap();
        let c = consensus_point(&e, &[123.0], 1e6).unwrap();
        assert_eq!(c.point, vec![1.5, -2.0]);
    }

    #[test]
    fn consensus_equal_values_is_midpoint() {
        let c = consensus_point(&line(&[0.0, 2.0]), &[3.0, 3.0], 5.0).unwrap();
        assert_eq!(c.point, vec![1.0]);
    }

    #[test]
    fn consensus_large_alpha_picks_best() {
        let c = consensus_point(&line(&[0.0, 2.0]), &[0.0, 1.0], 1e6).unwrap();
        assert!(c.point[0].abs() <= 1e-6);
    }

    #[test]
    fn consensus_hand_weighted_mean() {
        // weights (1/2, 1, 1/2) -> (0 * 0.5 + 1 + 2 * 0.5) / 2 = 1
        let alpha = std::f64::consts::LN_2;
        let c = consensus_point(&line(&[0.0, 1.0, 2.0]), &[1.0, 0.0, 1.0], alpha).unwrap();
        assert!((c.point[0] - 1.0).abs() < 1e-15);
        let z: f64 = 0.5 + 1.0 + 0.5;
        assert!((c.log_normalizer - z.ln()).abs() < 1e-15);
    }

    #[test]
    fn consensus_errors() {
        let e = line(&[0.0, 1.0]);
        assert_eq!(
            consensus_point(&e, &[0.0, f64::INFINITY], 1.0),
            Err(Error::NonFiniteValue { index: 1 })
        );
        assert!(matches!(
            consensus_point(&e, &[0.0], 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn scales_vanish_at_consensus() {
        for kind in [Diffusion::Isotropic, Diffusion::Anisotropic] {
            assert_eq!(
                diffusion_scales(&[1.0, 2.0], &[1.0, 2.0], kind).unwrap(),
                vec![0.0, 0.0]
            );
        }
    }

    #[test]
    fn scales_examples() {
        assert_eq!(
            diffusion_scales(&[3.0, 4.0], &[0.0, 0.0], Diffusion::Isotropic).unwrap(),
            vec![5.0, 5.0]
        );
        assert_eq!(
            diffusion_scales(&[3.0, -4.0], &[0.0, 0.0], Diffusion::Anisotropic).unwrap(),
            vec![3.0, 4.0]
        );
        assert!(diffusion_scales(&[1.0], &[1.0, 2.0], Diffusion::Isotropic).is_err());
    }

    fn consensus_at(point: Vec<f64>) -> ConsensusPoint {
        ConsensusPoint {
            point,
            log_normalizer: 0.0,
        }
    }

    #[test]
    fn step_without_noise_at_consensus_is_fixed() {
        let e = ParticleEnsemble::from_rows(&[[1.0, 1.0]]).unwrap();
        let out = euler_maruyama_step(&e, &consensus_at(vec![1.0, 1.0]), &params(1.0, 0.0, 0.1), &[0.3, -0.7]).unwrap();
        assert_eq!(out, e);
    }

    #[test]
    fn full_relaxation_in_one_step() {
        let e = ParticleEnsemble::from_rows(&[[1.0, 3.0], [-2.0, 0.5], [4.0, 4.0]]).unwrap();
        let c = consensus_at(vec![0.25, -1.0]);
        let out = euler_maruyama_step(&e, &c, &params(1.0, 0.0, 1.0), &[1.0; 6]).unwrap();
        for p in out.particles() {
            assert_eq!(p, &[0.25, -1.0]);
        }
    }

    #[test]
    fn frozen_dynamics_is_identity() {
        let e = ParticleEnsemble::from_rows(&[[1.0, 3.0], [-2.0, 0.5]]).unwrap();
        let out = euler_maruyama_step(&e, &consensus_at(vec![9.0, 9.0]), &params(0.0, 0.0, 0.5), &[2.0; 4]).unwrap();
        assert_eq!(out, e);
    }

    #[test]
    fn step_shape_and_blowup_errors() {
        let e = line(&[0.0, 1.0]);
        let c = consensus_at(vec![0.0]);
        assert!(matches!(
            euler_maruyama_step(&e, &c, &params(1.0, 1.0, 0.1), &[0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        let huge = line(&[0.0, 1e300]);
        assert_eq!(
            euler_maruyama_step(&huge, &c, &params(1.0, 1e10, 1.0), &[1.0, 1e10]),
            Err(Error::NonFiniteCoordinate { index: 1 })
        );
    }

    #[test]
    fn mean_displacement_matches_drift() {
        // Monte Carlo over the noise: mean displacement -lambda (x - x_alpha) dt
        let (lambda, sigma, dt) = (1.0, 0.5, 0.01);
        let (x, xa) = ([0.7, -0.3], [0.2, 0.1]);
        let draws = 100_000;
        let e = ParticleEnsemble::new(draws, 2, x.repeat(draws)).unwrap();
        let mut noise = vec![0.0; 2 * draws];
        let mut s = IndexedStream::new(42, Purpose::Noise, 0, 2 * draws);
        s.fill_normal(&mut noise);
        for kind in [Diffusion::Isotropic, Diffusion::Anisotropic] {
            let p = CboParams { diffusion: kind, ..params(lambda, sigma, dt) };
            let out = euler_maruyama_step(&e, &consensus_at(xa.to_vec()), &p, &noise).unwrap();
            let scales = diffusion_scales(&x, &xa, kind).unwrap();
            for j in 0..2 {
                let mean = out.particles().map(|r| r[j] - x[j]).sum::<f64>() / draws as f64;
                let expected = -lambda * (x[j] - xa[j]) * dt;
                let se = sigma * scales[j] * dt.sqrt() / (draws as f64).sqrt();
                assert!((mean - expected).abs() <= 4.0 * se, "{kind:?} coord {j}: {mean} vs {expected}");
            }
        }
    }

    #[test]
    fn variance_examples() {
        assert_eq!(variance_functional(&line(&[1.0, 1.0]), &[1.0]).unwrap(), 0.0);
        assert_eq!(variance_functional(&line(&[0.0, 2.0]), &[1.0]).unwrap(), 0.5);
        let e = ParticleEnsemble::from_rows(&[[1.0, 2.0], [-1.0, 0.5], [0.0, 3.0]]).unwrap();
        let r = [0.5, 0.5];
        let base = variance_functional(&e, &r).unwrap();
        let scaled: Vec<Vec<f64>> = e
            .particles()
            .map(|p| p.iter().zip(&r).map(|(x, c)| c + 3.0 * (x - c)).collect())
            .collect();
        let v = variance_functional(&ParticleEnsemble::from_rows(&scaled).unwrap(), &r).unwrap();
        assert!((v - 9.0 * base).abs() < 1e-12 * v);
        assert!(variance_functional(&e, &[0.0]).is_err());
    }

    #[test]
    fn decay_condition_flag() {
        let p = CboParams { lambda: 1.0, sigma: 0.5, dt: 0.01, alpha: 1.0, diffusion: Diffusion::Isotropic };
        assert!(p.decay_condition_holds(3));
        assert!(!p.decay_condition_holds(9));
        let a = CboParams { diffusion: Diffusion::Anisotropic, ..p };
        assert!(a.decay_condition_holds(100));
    }

    #[test]
    fn params_validation() {
        let ok = params(1.0, 1.0, 0.1);
        assert!(ok.validate().is_ok());
        assert!(CboParams { dt: 0.0, ..ok }.validate().is_err());
        assert!(CboParams { alpha: 0.0, ..ok }.validate().is_err());
        assert!(CboParams { sigma: -1.0, ..ok }.validate().is_err());
        assert!(CboParams { lambda: f64::NAN, ..ok }.validate().is_err());
    }

    fn ensemble_strategy() -> impl Strategy<Value = (ParticleEnsemble, Vec<f64>)> {
        (1usize..12, 1usize..4).prop_flat_map(|(n, d)| {
            (
                prop::collection::vec(-50.0f64..50.0, n * d),
                prop::collection::vec(-5.0f64..5.0, n),
            )
                .prop_map(move |(pos, vals)| (ParticleEnsemble::new(n, d, pos).unwrap(), vals))
        })
    }

    proptest! {
        #[test]
        fn hull_property((e, vals) in ensemble_strategy(), alpha in 1e-3f64..1e6) {
            let c = consensus_point(&e, &vals, alpha).unwrap();
            for j in 0..e.dim() {
                let lo = e.particles().map(|p| p[j]).fold(f64::INFINITY, f64::min);
                let hi = e.particles().map(|p| p[j]).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(lo <= c.point[j] && c.point[j] <= hi);
            }
        }

        #[test]
        fn translation_equivariance((e, vals) in ensemble_strategy(), alpha in 1e-3f64..1e3, shift in prop::collection::vec(-10.0f64..10.0, 3)) {
            let shift = &shift[..e.dim()];
            let base = consensus_point(&e, &vals, alpha).unwrap();
            let moved = consensus_point(&e.translated(shift).unwrap(), &vals, alpha).unwrap();
            for j in 0..e.dim() {
                let expected = base.point[j] + shift[j];
                let scale = expected.abs().max(e.particles().map(|p| p[j].abs()).fold(1.0, f64::max));
                prop_assert!((moved.point[j] - expected).abs() <= 1e-12 * scale);
            }
        }

        #[test]
        fn weight_shift_invariance((e, vals) in ensemble_strategy(), alpha in 1e-3f64..1e3, c in -100.0f64..100.0) {
            let base = consensus_point(&e, &vals, alpha).unwrap();
            let shifted: Vec<f64> = vals.iter().map(|v| v + c).collect();
            let other = consensus_point(&e, &shifted, alpha).unwrap();
            for j in 0..e.dim() {
                let scale = e.particles().map(|p| p[j].abs()).fold(1.0, f64::max);
                prop_assert!((base.point[j] - other.point[j]).abs() <= 1e-12 * scale);
            }
        }

        #[test]
        fn argmin_limit((e, _) in ensemble_strategy(), alpha in 1.0f64..1e6, best in 0usize..12) {
            let best = best % e.len();
            // values with every gap above 40 / alpha
            let vals: Vec<f64> = (0..e.len())
                .map(|i| if i == best { 0.0 } else { (41.0 + i as f64) / alpha })
                .collect();
            let c = consensus_point(&e, &vals, alpha).unwrap();
            let spread = e.particles().flat_map(|p| p.iter().zip(e.particle(best)).map(|(a, b)| (a - b).abs())).fold(0.0, f64::max);
            for j in 0..e.dim() {
                prop_assert!((c.point[j] - e.particle(best)[j]).abs() <= 1e-6 * spread.max(f64::MIN_POSITIVE));
            }
        }

        #[test]
        fn step_is_deterministic((e, vals) in ensemble_strategy(), sigma in 0.0f64..3.0, seed in any::<u64>()) {
            let c = consensus_point(&e, &vals, 10.0).unwrap();
            let mut noise = vec![0.0; e.len() * e.dim()];
            IndexedStream::new(seed, Purpose::Noise, 0, noise.len()).fill_normal(&mut noise);
            let p = params(1.0, sigma, 0.05);
            let a = euler_maruyama_step(&e, &c, &p, &noise).unwrap();
            let b = euler_maruyama_step(&e, &c, &p, &noise).unwrap();
            prop_assert_eq!(a.as_slice(), b.as_slice());
        }

        #[test]
        fn isotropic_equals_anisotropic_in_one_dimension(xs in prop::collection::vec(-10.0f64..10.0, 1..10), sigma in 0.0f64..3.0, seed in any::<u64>()) {
            let e = line(&xs);
            let vals: Vec<f64> = xs.iter().map(|x| x * x).collect();
            let c = consensus_point(&e, &vals, 3.0).unwrap();
            let mut noise = vec![0.0; xs.len()];
            IndexedStream::new(seed, Purpose::Noise, 0, noise.len()).fill_normal(&mut noise);
            let iso = euler_maruyama_step(&e, &c, &params(1.0, sigma, 0.1), &noise).unwrap();
            let aniso = euler_maruyama_step(&e, &c, &CboParams { diffusion: Diffusion::Anisotropic, ..params(1.0, sigma, 0.1) }, &noise).unwrap();
            prop_assert_eq!(iso.as_slice(), aniso.as_slice());
        }
    }
}
