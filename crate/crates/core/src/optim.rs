//! Mini-batch Adam minimization of a metric loss over student rows.
//!
//! Each epoch shuffles the row indices with the run's seeded RNG, partitions
//! them into batches (the last batch may be smaller), computes the loss
//! gradient on the batch sub-matrices, and applies one Adam update to those
//! student rows (and to the projection matrix when optimizing the projection
//! loss). The batch loss is the metric on the `n_b x d` sub-matrices, so the
//! per-step cost stays sub-quadratic in `n`.
//!
//! Traces record the optimized loss plus all three non-optimized distances
//! every `eval_every` steps, and the approximate-orthogonality count once per
//! epoch (the count runs Luby's algorithm on the full student matrix, which
//! is the expensive part). A run is a pure function of
//! `(teacher, student0, config)`.

use std::io::Write;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grad::loss_gradient;
use crate::metrics::{self, MetricKind, ProjectionMatrix};
use crate::repr::{RepresentationMatrix, ZERO_ROW_TOL};
use crate::synth::{count_eps_orthogonal, derive_seed};

const ORTH_SEED_SALT: u64 = 0x6F72_7468_5F73_6574;

/// Configuration of one optimization run.
#[derive(Debug, Clone)]
pub struct OptimConfig {
    pub loss_kind: MetricKind,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Project every updated row back to the unit sphere after each step.
    pub renormalize_rows: bool,
    /// Steps between metric trace records.
    pub eval_every: usize,
    /// Threshold used when counting approximately orthogonal vectors.
    pub eval_epsilon: f64,
    /// Luby restarts per orthogonality count.
    pub luby_trials: usize,
}

impl OptimConfig {
    /// Defaults matching the synthetic training protocol: learning rate
    /// 0.01, batch size 256, 7 epochs, Adam (0.9, 0.999, 1e-8).
    pub fn new(loss_kind: MetricKind, eval_epsilon: f64, seed: u64) -> Self {
        Self {
            loss_kind,
            learning_rate: 0.01,
            batch_size: 256,
            epochs: 7,
            seed,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            renormalize_rows: true,
            eval_every: 10,
            eval_epsilon,
            luby_trials: 5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 {
            return Err(Error::InvalidConfig("learning_rate must be > 0".into()));
        }
        if self.batch_size < 2 {
            return Err(Error::InvalidConfig("batch_size must be >= 2".into()));
        }
        if self.epochs < 1 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return Err(Error::InvalidConfig("adam betas must lie in [0, 1)".into()));
        }
        if self.adam_eps <= 0.0 {
            return Err(Error::InvalidConfig("adam_eps must be > 0".into()));
        }
        if self.eval_every < 1 {
            return Err(Error::InvalidConfig("eval_every must be >= 1".into()));
        }
        if !(self.eval_epsilon > 0.0 && self.eval_epsilon < 1.0) {
            return Err(Error::InvalidConfig("eval_epsilon must lie in (0, 1)".into()));
        }
        if self.luby_trials < 1 {
            return Err(Error::InvalidConfig("luby_trials must be >= 1".into()));
        }
        Ok(())
    }
}

/// One recorded point of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub step: usize,
    pub loss: f64,
    pub cka: f64,
    pub procrustes: f64,
    pub fg: f64,
    pub orth_count: Option<usize>,
}

/// A completed run: configuration, trace, and the final student.
#[derive(Debug, Clone)]
pub struct OptimRun {
    pub config: OptimConfig,
    pub trace: Vec<TraceEntry>,
    pub final_student: RepresentationMatrix,
    /// Steps skipped because the Procrustes gradient was near-singular.
    pub near_singular_skips: Vec<usize>,
}

impl OptimRun {
    pub fn final_orth_count(&self) -> Option<usize> {
        self.trace.iter().rev().find_map(|e| e.orth_count)
    }

    pub fn final_loss(&self) -> f64 {
        self.trace.last().map(|e| e.loss).unwrap_or(f64::NAN)
    }

    /// CSV: `step,loss_kind,loss,cka,procrustes,fg,orth_count`, one row per
    /// trace entry, `orth_count` empty when not evaluated.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "step,loss_kind,loss,cka,procrustes,fg,orth_count")?;
        for e in &self.trace {
            let orth = e
                .orth_count
                .map(|c| c.to_string())
                .unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                e.step, self.config.loss_kind, e.loss, e.cka, e.procrustes, e.fg, orth
            )?;
        }
        Ok(())
    }

    /// Canonical per-run trace file name.
    pub fn trace_filename(&self) -> String {
        format!("{}_{}.csv", self.config.loss_kind, self.config.seed)
    }
}

/// Adam state for one parameter matrix (first/second moments plus step count).
#[derive(Debug, Clone)]
pub struct AdamState {
    m: DMatrix<f64>,
    v: DMatrix<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            m: DMatrix::zeros(rows, cols),
            v: DMatrix::zeros(rows, cols),
            t: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// One Adam update on every entry of `params`.
    pub fn step(
        &mut self,
        params: &mut DMatrix<f64>,
        grads: &DMatrix<f64>,
        lr: f64,
        b1: f64,
        b2: f64,
        eps: f64,
    ) {
        assert_eq!(params.shape(), grads.shape());
        self.t += 1;
        let bc1 = 1.0 - b1.powi(self.t as i32);
        let bc2 = 1.0 - b2.powi(self.t as i32);
        for j in 0..params.ncols() {
            for i in 0..params.nrows() {
                let g = grads[(i, j)];
                let m = b1 * self.m[(i, j)] + (1.0 - b1) * g;
                let v = b2 * self.v[(i, j)] + (1.0 - b2) * g * g;
                self.m[(i, j)] = m;
                self.v[(i, j)] = v;
                params[(i, j)] -= lr * (m / bc1) / ((v / bc2).sqrt() + eps);
            }
        }
    }

    /// One Adam update restricted to the given rows of `params`.
    ///
    /// `grads` holds one row per entry of `rows`, in order. Moment buffers
    /// for untouched rows are left as they are.
    pub fn step_rows(
        &mut self,
        params: &mut DMatrix<f64>,
        grads: &DMatrix<f64>,
        rows: &[usize],
        lr: f64,
        b1: f64,
        b2: f64,
        eps: f64,
    ) {
        assert_eq!(grads.nrows(), rows.len());
        assert_eq!(grads.ncols(), params.ncols());
        self.t += 1;
        let bc1 = 1.0 - b1.powi(self.t as i32);
        let bc2 = 1.0 - b2.powi(self.t as i32);
        for (bi, &row) in rows.iter().enumerate() {
            for j in 0..params.ncols() {
                let g = grads[(bi, j)];
                let m = b1 * self.m[(row, j)] + (1.0 - b1) * g;
                let v = b2 * self.v[(row, j)] + (1.0 - b2) * g * g;
                self.m[(row, j)] = m;
                self.v[(row, j)] = v;
                params[(row, j)] -= lr * (m / bc1) / ((v / bc2).sqrt() + eps);
            }
        }
    }
}

struct Recorder<'a> {
    cfg: &'a OptimConfig,
    rt: &'a RepresentationMatrix,
    trace: Vec<TraceEntry>,
    orth_evals: u64,
}

impl<'a> Recorder<'a> {
    fn record(
        &mut self,
        step: usize,
        student: &RepresentationMatrix,
        projection: Option<&ProjectionMatrix>,
        with_orth: bool,
    ) -> Result<()> {
        if self.trace.last().is_some_and(|last| last.step == step) {
            if with_orth && self.trace.last().unwrap().orth_count.is_none() {
                let count = self.count(student);
                self.trace.last_mut().unwrap().orth_count = Some(count);
            }
            return Ok(());
        }
        let fg_sq = metrics::fg_sq_from_reps(self.rt, student)?;
        let cka_dist = 1.0 - metrics::cka_from_reps(self.rt, student)?;
        let proc_sq = metrics::procrustes_sq_stable(self.rt, student)?;
        let procrustes = proc_sq.max(0.0).sqrt();
        let loss = match self.cfg.loss_kind {
            MetricKind::Fg => fg_sq,
            MetricKind::CkaDist => cka_dist,
            MetricKind::Procrustes => proc_sq,
            MetricKind::LinProj => {
                let p = projection.expect("projection present for linproj runs");
                (student.data() * p.data() - self.rt.data()).norm_squared()
            }
        };
        let orth_count = with_orth.then(|| self.count(student));
        self.trace.push(TraceEntry {
            step,
            loss,
            cka: cka_dist,
            procrustes,
            fg: fg_sq.sqrt(),
            orth_count,
        });
        Ok(())
    }

    fn count(&mut self, student: &RepresentationMatrix) -> usize {
        let seed = derive_seed(self.cfg.seed ^ ORTH_SEED_SALT, self.orth_evals);
        self.orth_evals += 1;
        count_eps_orthogonal(student, self.cfg.eval_epsilon, seed, self.cfg.luby_trials)
    }
}

/// Runs mini-batch Adam on the student, tracing metrics along the way.
pub fn run(
    rt: &RepresentationMatrix,
    rs0: &RepresentationMatrix,
    cfg: &OptimConfig,
) -> Result<OptimRun> {
    cfg.validate()?;
    if rt.n() != rs0.n() {
        return Err(Error::dim_mismatch(format!(
            "teacher has {} rows but student has {}",
            rt.n(),
            rs0.n()
        )));
    }
    let n = rt.n();
    let d_s = rs0.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // The projection for the linproj loss is drawn before any shuffling so
    // the RNG stream layout is fixed across loss kinds.
    let mut projection = if cfg.loss_kind == MetricKind::LinProj {
        let scale = 1.0 / (d_s as f64).sqrt();
        let p = DMatrix::from_fn(d_s, rt.dim(), |_, _| {
            Distribution::<f64>::sample(&StandardNormal, &mut rng) * scale
        });
        Some(ProjectionMatrix::new(p)?)
    } else {
        None
    };

    let mut student = rs0.clone();
    let mut adam_s = AdamState::new(n, d_s);
    let mut adam_p = AdamState::new(d_s, rt.dim());
    let mut recorder = Recorder {
        cfg,
        rt,
        trace: Vec::new(),
        orth_evals: 0,
    };
    let mut near_singular_skips = Vec::new();

    recorder.record(0, &student, projection.as_ref(), true)?;

    let mut indices: Vec<usize> = (0..n).collect();
    let mut step = 0usize;
    for _epoch in 0..cfg.epochs {
        indices.shuffle(&mut rng);
        for batch in indices.chunks(cfg.batch_size) {
            step += 1;
            let rt_b = rt.select_rows(batch);
            let rs_b = student.select_rows(batch);
            let grad = match loss_gradient(cfg.loss_kind, &rt_b, &rs_b, projection.as_ref()) {
                Ok(g) => g,
                Err(Error::NearSingular { .. }) => {
                    near_singular_skips.push(step);
                    continue;
                }
                Err(e) => return Err(e),
            };
            adam_s.step_rows(
                student.data_mut(),
                &grad.d_student,
                batch,
                cfg.learning_rate,
                cfg.adam_beta1,
                cfg.adam_beta2,
                cfg.adam_eps,
            );
            if let (Some(p), Some(dp)) = (projection.as_mut(), grad.d_projection.as_ref()) {
                adam_p.step(
                    p.data_mut(),
                    dp,
                    cfg.learning_rate,
                    cfg.adam_beta1,
                    cfg.adam_beta2,
                    cfg.adam_eps,
                );
            }
            if cfg.renormalize_rows {
                renormalize_rows_in_place(student.data_mut(), batch)?;
            }
            if step % cfg.eval_every == 0 {
                recorder.record(step, &student, projection.as_ref(), false)?;
            }
        }
        recorder.record(step, &student, projection.as_ref(), true)?;
    }

    Ok(OptimRun {
        config: cfg.clone(),
        trace: recorder.trace,
        final_student: student,
        near_singular_skips,
    })
}

fn renormalize_rows_in_place(data: &mut DMatrix<f64>, rows: &[usize]) -> Result<()> {
    for &i in rows {
        let norm = data.row(i).norm();
        if norm < ZERO_ROW_TOL {
            return Err(Error::ZeroRow(i));
        }
        let inv = 1.0 / norm;
        for j in 0..data.ncols() {
            data[(i, j)] *= inv;
        }
    }
    Ok(())
}

/// One run per (loss, seed) pair, executed in parallel; results keep the
/// caller's (loss, seed) order regardless of completion order.
pub fn sweep(
    rt: &RepresentationMatrix,
    rs0: &RepresentationMatrix,
    losses: &[MetricKind],
    seeds: &[u64],
    cfg_base: &OptimConfig,
) -> Result<Vec<OptimRun>> {
    if seeds.is_empty() {
        return Err(Error::InvalidConfig("seeds must be non-empty".into()));
    }
    if losses.is_empty() {
        return Err(Error::InvalidConfig("losses must be non-empty".into()));
    }
    let jobs: Vec<(MetricKind, u64)> = losses
        .iter()
        .flat_map(|&kind| seeds.iter().map(move |&seed| (kind, seed)))
        .collect();
    jobs.par_iter()
        .map(|&(kind, seed)| {
            let mut cfg = cfg_base.clone();
            cfg.loss_kind = kind;
            cfg.seed = seed;
            run(rt, rs0, &cfg)
        })
        .collect()
}

/// Final-count statistics per loss over the seeds of a sweep.
#[derive(Debug, Clone)]
pub struct LossSummary {
    pub kind: MetricKind,
    /// (seed, final loss, final orthogonality count) per run, in seed order.
    pub finals: Vec<(u64, f64, usize)>,
    pub mean_count: f64,
    /// Sample standard deviation of the final counts.
    pub stddev_count: f64,
    pub median_count: f64,
}

/// Groups runs by loss kind and summarizes their final orthogonality counts.
pub fn summarize(runs: &[OptimRun]) -> Vec<LossSummary> {
    let mut kinds: Vec<MetricKind> = Vec::new();
    for run in runs {
        if !kinds.contains(&run.config.loss_kind) {
            kinds.push(run.config.loss_kind);
        }
    }
    kinds
        .into_iter()
        .map(|kind| {
            let finals: Vec<(u64, f64, usize)> = runs
                .iter()
                .filter(|r| r.config.loss_kind == kind)
                .map(|r| {
                    (
                        r.config.seed,
                        r.final_loss(),
                        r.final_orth_count().unwrap_or(0),
                    )
                })
                .collect();
            let counts: Vec<f64> = finals.iter().map(|&(_, _, c)| c as f64).collect();
            let mean = counts.iter().sum::<f64>() / counts.len() as f64;
            let var = if counts.len() > 1 {
                counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (counts.len() - 1) as f64
            } else {
                0.0
            };
            let mut sorted = counts.clone();
            sorted.sort_by(f64::total_cmp);
            let median = if sorted.len() % 2 == 1 {
                sorted[sorted.len() / 2]
            } else {
                0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2])
            };
            LossSummary {
                kind,
                finals,
                mean_count: mean,
                stddev_count: var.sqrt(),
                median_count: median,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repr::normalize_rows;
    use crate::synth::{random_orthogonal, random_unit_rows};
    use nalgebra::dmatrix;

    fn tiny_cfg(kind: MetricKind, seed: u64) -> OptimConfig {
        let mut cfg = OptimConfig::new(kind, 0.3, seed);
        cfg.batch_size = 4;
        cfg.epochs = 2;
        cfg.eval_every = 2;
        cfg.luby_trials = 2;
        cfg
    }

    #[test]
    fn adam_zero_gradient_is_identity() {
        let mut params = dmatrix![1.0, -2.0; 0.5, 3.0];
        let before = params.clone();
        let mut state = AdamState::new(2, 2);
        for _ in 0..5 {
            state.step(&mut params, &DMatrix::zeros(2, 2), 0.1, 0.9, 0.999, 1e-8);
        }
        assert_eq!(params, before);
    }

    #[test]
    fn adam_first_step_scalar() {
        let mut p = dmatrix![1.0];
        let g = dmatrix![1.0];
        let mut state = AdamState::new(1, 1);
        state.step(&mut p, &g, 0.1, 0.9, 0.999, 1e-8);
        // Bias correction makes m-hat = v-hat = 1 at t = 1.
        assert!((p[(0, 0)] - (1.0 - 0.1 / (1.0 + 1e-8))).abs() < 1e-15);
    }

    #[test]
    fn adam_two_steps_match_scalar_reference() {
        let (lr, b1, b2, eps) = (0.05, 0.9, 0.999, 1e-8);
        let g = 0.7;
        let mut p = dmatrix![2.0];
        let mut state = AdamState::new(1, 1);
        state.step(&mut p, &dmatrix![g], lr, b1, b2, eps);
        state.step(&mut p, &dmatrix![g], lr, b1, b2, eps);

        let mut m = 0.0;
        let mut v = 0.0;
        let mut x: f64 = 2.0;
        for t in 1..=2u32 {
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powi(t as i32));
            let vh = v / (1.0 - b2.powi(t as i32));
            x -= lr * mh / (vh.sqrt() + eps);
        }
        assert!((p[(0, 0)] - x).abs() < 1e-15);
    }

    #[test]
    fn run_is_deterministic() {
        let rt = random_unit_rows(24, 8, 5);
        let rs0 = random_unit_rows(24, 6, 6);
        let cfg = tiny_cfg(MetricKind::Fg, 17);
        let a = run(&rt, &rs0, &cfg).unwrap();
        let b = run(&rt, &rs0, &cfg).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.final_student.data(), b.final_student.data());
    }

    #[test]
    fn run_records_strictly_increasing_steps() {
        let rt = random_unit_rows(24, 8, 5);
        let rs0 = random_unit_rows(24, 6, 6);
        for kind in MetricKind::ALL {
            let run_out = run(&rt, &rs0, &tiny_cfg(kind, 3)).unwrap();
            let steps: Vec<usize> = run_out.trace.iter().map(|e| e.step).collect();
            for w in steps.windows(2) {
                assert!(w[1] > w[0], "{kind}: steps {steps:?}");
            }
            assert!(run_out
                .trace
                .iter()
                .all(|e| e.loss.is_finite()
                    && e.cka.is_finite()
                    && e.procrustes.is_finite()
                    && e.fg.is_finite()));
            // One orthogonality count at step 0 plus one per epoch.
            let orth_entries = run_out
                .trace
                .iter()
                .filter(|e| e.orth_count.is_some())
                .count();
            assert_eq!(orth_entries, 1 + run_out.config.epochs);
        }
    }

    #[test]
    fn renormalized_runs_keep_unit_rows() {
        let rt = random_unit_rows(24, 8, 5);
        let rs0 = random_unit_rows(24, 6, 6);
        let out = run(&rt, &rs0, &tiny_cfg(MetricKind::Procrustes, 9)).unwrap();
        assert!(out.final_student.has_unit_rows(1e-9));
    }

    #[test]
    fn procrustes_start_at_minimum_stays_there() {
        let rt = random_unit_rows(16, 6, 2);
        let q = random_orthogonal(6, 3);
        let rs0 = RepresentationMatrix::new(rt.data() * q).unwrap();
        let mut cfg = tiny_cfg(MetricKind::Procrustes, 1);
        cfg.epochs = 1;
        cfg.eval_every = 1;
        let out = run(&rt, &rs0, &cfg).unwrap();
        for e in &out.trace {
            assert!(e.loss < 1e-6, "step {}: loss {}", e.step, e.loss);
        }
    }

    #[test]
    fn fg_at_optimum_keeps_student_fixed() {
        // Rs0 = Rt gives bitwise-zero FG gradients, so m = v = 0 throughout
        // and Adam performs exactly zero updates.
        let rt = random_unit_rows(12, 5, 8);
        let rs0 = rt.clone();
        let mut cfg = tiny_cfg(MetricKind::Fg, 4);
        cfg.renormalize_rows = false;
        let out = run(&rt, &rs0, &cfg).unwrap();
        assert_eq!(out.final_student.data(), rs0.data());
    }

    #[test]
    fn sweep_matches_single_run_and_orders_results() {
        let rt = random_unit_rows(16, 6, 2);
        let rs0 = random_unit_rows(16, 4, 3);
        let cfg = tiny_cfg(MetricKind::Fg, 0);
        let single = run(
            &rt,
            &rs0,
            &OptimConfig {
                loss_kind: MetricKind::CkaDist,
                seed: 12,
                ..cfg.clone()
            },
        )
        .unwrap();
        let runs = sweep(
            &rt,
            &rs0,
            &[MetricKind::CkaDist, MetricKind::Fg],
            &[12, 13],
            &cfg,
        )
        .unwrap();
        assert_eq!(runs.len(), 4);
        assert_eq!(
            (runs[0].config.loss_kind, runs[0].config.seed),
            (MetricKind::CkaDist, 12)
        );
        assert_eq!(
            (runs[3].config.loss_kind, runs[3].config.seed),
            (MetricKind::Fg, 13)
        );
        assert_eq!(runs[0].trace, single.trace);
        let summaries = summarize(&runs);
        assert_eq!(summaries.len(), 2);
        assert_eq!(summaries[0].finals.len(), 2);
    }

    #[test]
    fn sweep_rejects_empty_seed_list() {
        let rt = random_unit_rows(8, 4, 2);
        let rs0 = random_unit_rows(8, 3, 3);
        assert!(matches!(
            sweep(&rt, &rs0, &[MetricKind::Fg], &[], &tiny_cfg(MetricKind::Fg, 0)),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn csv_round_trip_shape() {
        let rt = random_unit_rows(12, 5, 1);
        let rs0 = random_unit_rows(12, 4, 2);
        let out = run(&rt, &rs0, &tiny_cfg(MetricKind::CkaDist, 5)).unwrap();
        let mut buf = Vec::new();
        out.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "step,loss_kind,loss,cka,procrustes,fg,orth_count"
        );
        assert_eq!(lines.count(), out.trace.len());
        assert_eq!(out.trace_filename(), "cka-dist_5.csv");
    }

    #[test]
    fn first_epoch_loss_trend_is_downward() {
        // Windows of 50 recorded steps inside the first epoch: the mean of
        // the second half must not exceed the mean of the first half. The
        // batch size must reach min(d_s, d_t) or the Procrustes cross matrix
        // is rank-deficient on every batch.
        let rt = random_unit_rows(240, 6, 21);
        let rs0 = random_unit_rows(240, 4, 22);
        for kind in MetricKind::ALL {
            let mut cfg = OptimConfig::new(kind, 0.3, 77);
            cfg.batch_size = 4;
            cfg.epochs = 1;
            cfg.eval_every = 1;
            cfg.luby_trials = 1;
            let out = run(&rt, &rs0, &cfg).unwrap();
            let losses: Vec<f64> = out
                .trace
                .iter()
                .filter(|e| e.step >= 1)
                .map(|e| e.loss)
                .collect();
            assert!(losses.len() >= 50, "{kind}: only {} steps", losses.len());
            for window in losses.windows(50) {
                let first: f64 = window[..25].iter().sum::<f64>() / 25.0;
                let second: f64 = window[25..].iter().sum::<f64>() / 25.0;
                assert!(
                    second <= first + 1e-12,
                    "{kind}: window mean rose from {first} to {second}"
                );
            }
        }
    }
}
