//! Parallel evaluation with order-preserving results.

use std::thread;

use diarkit_core::sweep::{
    collect_phase3, evaluate_postprocess, load_raw_predictions, PredictionStore, SweepError, SweepResult, SweepSpec,
};

/// `f` over `items` on up to `jobs` threads. The output order matches the
/// input order regardless of `jobs`.
pub fn parallel_map<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let jobs = jobs.clamp(1, items.len().max(1));
    if jobs == 1 {
        return items.iter().map(&f).collect();
    }
    let per = items.len().div_ceil(jobs);
    let f = &f;
    thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(per)
            .map(|chunk| scope.spawn(move || chunk.iter().map(f).collect::<Vec<R>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    })
}

/// Phase 3 with the grid points spread over `jobs` threads. Identical to
/// [`diarkit_core::sweep::phase3_postprocess_sweep`] for any `jobs`.
pub fn phase3_parallel<S: PredictionStore + ?Sized>(
    store: &S,
    spec: &SweepSpec,
    best_threshold: f64,
    jobs: usize,
) -> Result<SweepResult, SweepError> {
    spec.validate()?;
    let raw = load_raw_predictions(store, spec, best_threshold)?;
    let points = spec.postprocess_grid.points();
    let scores = parallel_map(&points, jobs, |p| evaluate_postprocess(&raw, p, &spec.der_options))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    collect_phase3(&points, scores)
}
