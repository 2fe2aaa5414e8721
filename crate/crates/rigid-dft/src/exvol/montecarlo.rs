//! Hit-or-miss Monte Carlo estimate of the excluded volume.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::distance::CenterSet;
use super::{ExcludedVolumeResult, Method};
use crate::shapes::MoleculeShape;
use crate::so3::Rotation;
use crate::{Error, Result, Vec3};

pub const MIN_SAMPLES: u64 = 10_000;
pub const CHUNK_SAMPLES: u64 = 1 << 16;

/// Samples the overlap indicator of two molecules over the cube of
/// half-width `2L + D`; molecule 2 is rotated by `p_bar`.
pub fn mc_excluded_volume(
    shape: &MoleculeShape,
    p_bar: &Rotation,
    d: f64,
    n_samples: u64,
    seed: u64,
) -> Result<ExcludedVolumeResult> {
    let s1 = CenterSet::from_shape(shape)?;
    let s2 = s1.transformed(p_bar, &Vec3::zeros());
    mc_excluded_volume_sets(&s1, &s2, d, 2.0 * shape.length + d, n_samples, seed)
}

/// General form: overlap iff the centre sets come within `d`.
pub fn mc_excluded_volume_sets(
    s1: &CenterSet,
    s2: &CenterSet,
    d: f64,
    half_width: f64,
    n_samples: u64,
    seed: u64,
) -> Result<ExcludedVolumeResult> {
    if n_samples < MIN_SAMPLES {
        return Err(Error::Domain(format!("at least {MIN_SAMPLES} samples required")));
    }
    let reach = s1.radius_about_origin() + s2.radius_about_origin() + d;
    if half_width < reach {
        return Err(Error::Domain(format!(
            "bounding box half-width {half_width} does not contain the excluded region (needs {reach})"
        )));
    }
    let (c1, r1) = s1.bounding_ball();
    let (c2, r2) = s2.bounding_ball();
    let reject = r1 + r2 + d;
    let n_chunks = n_samples.div_ceil(CHUNK_SAMPLES);
    let hits: u64 = (0..n_chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            let count = CHUNK_SAMPLES.min(n_samples - k * CHUNK_SAMPLES);
            let mut hits = 0u64;
            for _ in 0..count {
                let x = Vec3::new(
                    rng.gen_range(-half_width..half_width),
                    rng.gen_range(-half_width..half_width),
                    rng.gen_range(-half_width..half_width),
                );
                if (c1 - c2 - x).norm() > reject {
                    continue;
                }
                if s1.distance(&s2.translated(&x)) <= d {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let n = n_samples as f64;
    let p = hits as f64 / n;
    let box_volume = (2.0 * half_width).powi(3);
    Ok(ExcludedVolumeResult {
        value: box_volume * p,
        stderr: box_volume * (p * (1.0 - p) / n).sqrt(),
        method: Method::MonteCarlo,
        case_tag: None,
    })
}
