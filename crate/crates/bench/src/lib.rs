//! Shared fixtures for the criterion benchmarks.

use polytrack::synth::{generate_default_sequence, SynthConfig, SyntheticSequence};
use polytrack::{Point, PointSet};

/// Ellipse sampled at `n` points.
pub fn ring(n: usize, center: Point, rx: f64, ry: f64) -> PointSet {
    PointSet::from_points(
        (0..n)
            .map(|i| {
                let t = i as f64 / n as f64 * std::f64::consts::TAU;
                Point::new(center.x + rx * t.cos(), center.y + ry * t.sin())
            })
            .collect(),
    )
}

/// Default-sized synthetic sequence with the given frame count.
pub fn sequence(frames: usize, points: usize) -> SyntheticSequence {
    let cfg = SynthConfig {
        frames,
        points,
        ..SynthConfig::default()
    };
    generate_default_sequence(&cfg).expect("default synthetic config is valid")
}
