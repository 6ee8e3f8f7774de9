//! Finite-difference verification of analytic gradients.
//!
//! Each suite compares an analytic gradient with central differences and
//! reports the worst relative error `|a - fd| / max(|a|, |fd|, 1e-6)`
//! (Euclidean norms over the whole gradient vector) across its instances.
//! The floor keeps gradients that vanish identically, such as the attention
//! key bias under softmax shift invariance, from comparing rounding noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::geometry::{Point, PointSet};
use crate::lam::{lam_backward, lam_forward, lam_forward_cached, LamConfig, LamParams, LamState, Mat};
use crate::losses::{
    chamfer_loss, cycle_consistency_loss, paired_l1_loss, reg_first_derivative, reg_second_derivative,
    LossValue,
};

/// Result of one gradient suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub instances: usize,
    /// Draws rejected for lying near a kink or tie.
    pub skipped: usize,
    pub max_rel_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckOutcome {
    fn new(name: impl Into<String>, instances: usize, skipped: usize, err: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            instances,
            skipped,
            max_rel_error: err,
            tolerance: tol,
            passed: err.is_finite() && err < tol,
        }
    }
}

/// Relative error between two gradient vectors with a `1e-6` norm floor.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = analytic.iter().zip(numeric).map(|(a, b)| a - b).collect();
    norm(&diff) / norm(analytic).max(norm(numeric)).max(1e-6)
}

/// Central differences of `f` at `x` with step `h`.
pub fn numeric_gradient(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + h;
            let up = f(&probe);
            probe[i] = orig - h;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn flatten(points: &[Point]) -> Vec<f64> {
    points.iter().flat_map(|p| [p.x, p.y]).collect()
}

fn unflatten(v: &[f64]) -> PointSet {
    PointSet::from_points(v.chunks(2).map(|c| Point::new(c[0], c[1])).collect())
}

fn random_set(rng: &mut impl Rng, n: usize) -> PointSet {
    PointSet::from_points(
        (0..n)
            .map(|_| Point::new(rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0)))
            .collect(),
    )
}

const MARGIN: f64 = 1e-3;

fn near_huber_kink(d: Point) -> bool {
    (d.x.abs() - 1.0).abs() < MARGIN || (d.y.abs() - 1.0).abs() < MARGIN
}

fn pairwise_near_kink(a: &PointSet, b: &PointSet) -> bool {
    a.points()
        .iter()
        .zip(b.points())
        .any(|(&p, &q)| near_huber_kink(p - q))
}

/// Nearest-neighbour ties or vanishing distances in either direction.
fn chamfer_near_tie(a: &PointSet, b: &PointSet) -> bool {
    let ambiguous = |from: &[Point], to: &[Point]| {
        from.iter().any(|&p| {
            let mut d: Vec<f64> = to.iter().map(|&q| p.dist(q)).collect();
            d.sort_by(f64::total_cmp);
            d[0] < MARGIN || (d.len() > 1 && d[1] - d[0] < MARGIN)
        })
    };
    ambiguous(a.points(), b.points()) || ambiguous(b.points(), a.points())
}

fn first_diff_near_kink(cur: &PointSet) -> bool {
    let n = cur.len() as isize;
    (0..n).any(|i| (cur.at(i) - cur.at(i - 1)).norm() < MARGIN)
}

fn second_diff_near_kink(prev: &PointSet, cur: &PointSet) -> bool {
    let n = cur.len() as isize;
    let sd = |s: &PointSet, i: isize| s.at(i + 1) - s.at(i) * 2.0 + s.at(i - 1);
    (0..n).any(|i| (sd(cur, i) - sd(prev, i)).norm() < MARGIN)
}

/// Runs `instances` accepted draws of one two-set loss.
fn pair_suite(
    name: &str,
    rng: &mut ChaCha8Rng,
    instances: usize,
    n: usize,
    h: f64,
    tol: f64,
    reject: impl Fn(&PointSet, &PointSet) -> bool,
    loss: impl Fn(&PointSet, &PointSet) -> Result<LossValue>,
) -> CheckOutcome {
    let mut worst: f64 = 0.0;
    let mut skipped = 0;
    let mut done = 0;
    while done < instances {
        let a = random_set(rng, n);
        let b = random_set(rng, n);
        if reject(&a, &b) {
            skipped += 1;
            continue;
        }
        let analytic = match loss(&a, &b) {
            Ok(v) => flatten(v.grad()),
            Err(_) => return CheckOutcome::new(name, done, skipped, f64::NAN, tol),
        };
        let numeric = numeric_gradient(&flatten(b.points()), h, |x| {
            loss(&a, &unflatten(x)).map_or(f64::NAN, |v| v.value)
        });
        worst = worst.max(relative_error(&analytic, &numeric));
        done += 1;
    }
    CheckOutcome::new(name, done, skipped, worst, tol)
}

/// Gradient suites for every loss that carries a point gradient.
///
/// Points are drawn uniformly in `[0, 100]^2`; draws within `1e-3` of a
/// smooth-L1 kink, nearest-neighbour tie or vanishing norm are redrawn.
pub fn check_loss_gradients(instances: usize, n: usize, seed: u64) -> Vec<CheckOutcome> {
    const H: f64 = 1e-5;
    const TOL: f64 = 1e-4;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![
        pair_suite("paired_l1", &mut rng, instances, n, H, TOL, pairwise_near_kink, paired_l1_loss),
        pair_suite("chamfer", &mut rng, instances, n, H, TOL, chamfer_near_tie, chamfer_loss),
        pair_suite(
            "reg_first_derivative",
            &mut rng,
            instances,
            n,
            H,
            TOL,
            |_, cur| first_diff_near_kink(cur),
            reg_first_derivative,
        ),
        pair_suite(
            "reg_second_derivative",
            &mut rng,
            instances,
            n,
            H,
            TOL,
            second_diff_near_kink,
            reg_second_derivative,
        ),
    ];

    // Cycle consistency over K = 3 frame pairs, differentiated in the forward sets.
    let k = 3;
    let mut worst: f64 = 0.0;
    let mut skipped = 0;
    let mut done = 0;
    while done < instances {
        let fwd: Vec<PointSet> = (0..k).map(|_| random_set(&mut rng, n)).collect();
        let bwd: Vec<PointSet> = (0..k).map(|_| random_set(&mut rng, n)).collect();
        if fwd.iter().zip(&bwd).any(|(f, b)| pairwise_near_kink(f, b)) {
            skipped += 1;
            continue;
        }
        let analytic = match cycle_consistency_loss(&fwd, &bwd) {
            Ok(v) => flatten(v.grad()),
            Err(_) => break,
        };
        let flat: Vec<f64> = fwd.iter().flat_map(|s| flatten(s.points())).collect();
        let numeric = numeric_gradient(&flat, H, |x| {
            let sets: Vec<PointSet> = x.chunks(2 * n).map(unflatten).collect();
            cycle_consistency_loss(&sets, &bwd).map_or(f64::NAN, |v| v.value)
        });
        worst = worst.max(relative_error(&analytic, &numeric));
        done += 1;
    }
    if done < instances {
        worst = f64::NAN;
    }
    out.push(CheckOutcome::new("cycle_consistency", done, skipped, worst, TOL));
    out
}

/// Compares manual backpropagation of `sum(offsets)` against central
/// differences for every parameter tensor of a randomly initialized network.
///
/// Draws whose forward pass lies within `1e-3` of a ReLU or max-pool kink are
/// redrawn, as for the losses.
pub fn check_lam_gradients(config: LamConfig, n: usize, seed: u64) -> Result<Vec<CheckOutcome>> {
    const H: f64 = 1e-4;
    const TOL: f64 = 1e-3;
    const MAX_DRAWS: usize = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut skipped = 0;
    let (params, feats, ps, state, cache) = loop {
        let (params, feats, ps, state) = lam_instance(config.clone(), n, &mut rng)?;
        let (_, _, cache) = lam_forward_cached(&feats, &ps, &state, &params)?;
        if cache.kink_margin() >= MARGIN || skipped >= MAX_DRAWS {
            break (params, feats, ps, state, cache);
        }
        skipped += 1;
    };
    let ones = vec![Point::new(1.0, 1.0); n];
    let grads = lam_backward(&params, &cache, &ones);

    let objective = |p: &LamParams| -> f64 {
        lam_forward(&feats, &ps, &state, p)
            .map_or(f64::NAN, |(o, _)| o.iter().map(|q| q.x + q.y).sum())
    };
    let mut out = Vec::with_capacity(params.tensors().len());
    for (ti, g) in grads.tensors().iter().enumerate() {
        let mut probe = params.clone();
        let base = params.tensors()[ti].data.clone();
        let numeric = numeric_gradient(&base, H, |x| {
            probe.tensors_mut()[ti].data.copy_from_slice(x);
            objective(&probe)
        });
        let err = relative_error(&g.data, &numeric);
        out.push(CheckOutcome::new(g.name.clone(), 1, skipped, err, TOL));
    }
    Ok(out)
}

/// Random weights (biases in `[-0.1, 0.1]`), features, a noisy ellipse and a
/// nonzero incoming state.
fn lam_instance(
    config: LamConfig,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(LamParams, Mat, PointSet, LamState)> {
    let mut params = LamParams::random(config, rng)?;
    for t in params.tensors_mut() {
        if t.shape.len() == 1 {
            t.data.iter_mut().for_each(|v| *v = rng.gen_range(-0.1..0.1));
        }
    }
    let cfg = params.config().clone();
    let ps = PointSet::from_points(
        (0..n)
            .map(|i| {
                let t = i as f64 / n as f64 * std::f64::consts::TAU;
                Point::new(
                    50.0 + 20.0 * t.cos() + rng.gen_range(-2.0..2.0),
                    40.0 + 12.0 * t.sin() + rng.gen_range(-2.0..2.0),
                )
            })
            .collect(),
    );
    let feats = Mat::from_fn(n, cfg.in_channels, |_, _| rng.gen_range(0.0..1.0));
    let state = LamState {
        hidden: Mat::from_fn(n, cfg.hidden, |_, _| rng.gen_range(-0.5..0.5)),
        cell: Mat::from_fn(n, cfg.hidden, |_, _| rng.gen_range(-0.5..0.5)),
    };
    Ok((params, feats, ps, state))
}

/// The tiny network used for gradient checks.
pub fn tiny_config(blocks: usize) -> LamConfig {
    LamConfig {
        in_channels: 4,
        hidden: 8,
        heads: 2,
        blocks,
        kernel: 3,
        coord_features: true,
        positional_encoding: true,
    }
}

/// Every suite: the losses on 100 instances of 16 points, then the tiny
/// network with 8 points.
pub fn run_all(seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut out = check_loss_gradients(100, 16, seed);
    out.extend(check_lam_gradients(tiny_config(2), 8, seed)?);
    Ok(out)
}
