//! Central-difference verification of analytic gradients.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Parameter;

/// Anything that exposes its trainable parameters in a fixed order.
pub trait HasParameters {
    fn parameters_mut(&mut self) -> Vec<&mut Parameter>;
}

impl HasParameters for Vec<Parameter> {
    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        self.iter_mut().collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GradCheckOptions {
    pub h: f64,
    /// Check at most this many randomly chosen entries per parameter.
    pub max_entries_per_param: Option<usize>,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            h: 1e-5,
            max_entries_per_param: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Parameter name and flat index of the worst entry.
    pub worst: Option<(String, usize)>,
    pub worst_analytic: f64,
    pub worst_numeric: f64,
    pub entries_checked: usize,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Compares each parameter's `grad` buffer, which must already hold the
/// analytic gradient of `loss`, against central differences of `loss`.
/// Values are restored exactly after each probe.
pub fn grad_check<S, F>(state: &mut S, mut loss: F, opts: GradCheckOptions) -> GradCheckReport
where
    S: HasParameters,
    F: FnMut(&S) -> f64,
{
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        worst_analytic: 0.0,
        worst_numeric: 0.0,
        entries_checked: 0,
    };
    let n_params = state.parameters_mut().len();
    for pi in 0..n_params {
        let (len, name) = {
            let params = state.parameters_mut();
            (params[pi].len(), params[pi].name.clone())
        };
        let indices: Vec<usize> = match opts.max_entries_per_param {
            Some(cap) if cap < len => rand::seq::index::sample(&mut rng, len, cap).into_vec(),
            _ => (0..len).collect(),
        };
        for j in indices {
            let (orig, analytic) = {
                let p = &mut state.parameters_mut()[pi];
                (p.value.data()[j], p.grad.data()[j])
            };
            state.parameters_mut()[pi].value.data_mut()[j] = orig + opts.h;
            let plus = loss(state);
            state.parameters_mut()[pi].value.data_mut()[j] = orig - opts.h;
            let minus = loss(state);
            state.parameters_mut()[pi].value.data_mut()[j] = orig;

            let numeric = (plus - minus) / (2.0 * opts.h);
            let err = relative_error(analytic, numeric);
            report.entries_checked += 1;
            if err > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = err;
                report.worst = Some((name.clone(), j));
                report.worst_analytic = analytic;
                report.worst_numeric = numeric;
            }
        }
    }
    report
}
