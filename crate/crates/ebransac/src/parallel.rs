//! Thread-pool versions of the multi-start fits.
//!
//! Restart `i` and RANSAC iteration `i` draw from RNG stream `i` regardless
//! of which thread runs them, so these return exactly what the serial
//! functions in `ebransac_core` return.

use ebransac_core::baselines::{ransac_iteration, select_ransac, RansacConfig, RansacFit, SubsetSolver};
use ebransac_core::ebr::{fit_restart, select_best, EbrConfig, FitResult};
use ebransac_core::{Dataset, LossModel, Result};
use rayon::prelude::*;

pub fn fit<M: LossModel + Sync + ?Sized>(model: &M, data: &Dataset, config: &EbrConfig) -> Result<FitResult> {
    config.validate(model.domain())?;
    let restarts = (0..config.restarts)
        .into_par_iter()
        .map(|i| fit_restart(model, data, config, i))
        .collect();
    select_best(model, data, config.beta, restarts)
}

pub fn ransac_fit<M, S>(model: &M, data: &Dataset, config: &RansacConfig, solver: &S) -> Result<RansacFit>
where
    M: LossModel + Sync + ?Sized,
    S: SubsetSolver<M> + Sync + ?Sized,
{
    config.validate(data.len())?;
    let runs = (0..config.iterations)
        .into_par_iter()
        .map(|i| ransac_iteration(model, data, config, solver, i))
        .collect();
    select_ransac(config, runs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ebransac_core::baselines::ClosedForm;
    use ebransac_core::ebr::InitSampler;
    use ebransac_core::models::{ExponentialModel, LinearRegressionModel};
    use ebransac_core::synth::{generate, PresetSpec};

    #[test]
    fn parallel_fit_matches_serial() {
        let data = generate(&PresetSpec::exponential(4)).unwrap().dataset;
        let init = InitSampler::UniformBox {
            lower: vec![0.05],
            upper: vec![5.0],
        };
        let cfg = EbrConfig::new(5.0, init, 9);
        let serial = ebransac_core::ebr::fit(&ExponentialModel, &data, &cfg).unwrap();
        let par = fit(&ExponentialModel, &data, &cfg).unwrap();
        assert_eq!(serial, par);
    }

    #[test]
    fn parallel_ransac_matches_serial() {
        let data = generate(&PresetSpec::linreg(4)).unwrap().dataset;
        let cfg = RansacConfig {
            hypo_size: 2,
            iterations: 50,
            t_cons: 0.05,
            min_consensus: 60,
            local_opt: true,
            rng_seed: 3,
        };
        let serial = ebransac_core::baselines::ransac_fit(&LinearRegressionModel, &data, &cfg, &ClosedForm).unwrap();
        let par = ransac_fit(&LinearRegressionModel, &data, &cfg, &ClosedForm).unwrap();
        assert_eq!(serial, par);
    }
}
