//! Quantitative evaluation: point-set completeness and accuracy,
//! per-vertex reflectance RMSE, light-position error, sRGB visualization,
//! and relighting comparison.

pub mod nn;
pub mod srgb;

pub use nn::{brute_force_nearest, KdTree};
pub use srgb::{reflectance_to_linear_srgb, reflectance_to_srgb};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Bvh, CameraPose, SceneMesh};
use crate::real::{real, to_f64, Real};
use crate::rendering::{
    render_image, CameraSensitivity, Illuminant, Image, RasterOptions, ReflectanceField,
    RenderError,
};
use crate::spectra::{SpectralBasis, SpectralCurve, N_BANDS};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("point set is empty")]
    EmptyPointSet,
    #[error("correspondence is empty")]
    EmptyCorrespondence,
    #[error(transparent)]
    Render(#[from] RenderError),
}

/// Per-point nearest-neighbor distances plus their mean.
#[derive(Clone, Debug)]
pub struct GeometryErrorMap<T: Real> {
    pub values: Vec<T>,
    pub mean: T,
}

fn nearest_distances<T: Real>(
    from: &[Vector3<T>],
    to: &[Vector3<T>],
) -> Result<GeometryErrorMap<T>, EvalError> {
    if from.is_empty() || to.is_empty() {
        return Err(EvalError::EmptyPointSet);
    }
    let tree = KdTree::build(to.to_vec());
    let values: Vec<T> = from.iter().map(|p| tree.nearest(p).1).collect();
    let mean = values.iter().copied().sum::<T>() / real(values.len() as f64);
    Ok(GeometryErrorMap { values, mean })
}

/// Distance from each ground-truth point to its nearest estimated point.
pub fn completeness<T: Real>(
    gt_points: &[Vector3<T>],
    est_points: &[Vector3<T>],
) -> Result<GeometryErrorMap<T>, EvalError> {
    nearest_distances(gt_points, est_points)
}

/// Distance from each estimated point to its nearest ground-truth point.
pub fn accuracy<T: Real>(
    gt_points: &[Vector3<T>],
    est_points: &[Vector3<T>],
) -> Result<GeometryErrorMap<T>, EvalError> {
    nearest_distances(est_points, gt_points)
}

/// Per-vertex RMSE over the 31 bands plus its mean.
#[derive(Clone, Debug)]
pub struct ReflectanceErrorMap<T: Real> {
    pub values: Vec<T>,
    pub mean: T,
}

/// RMSE between estimated and ground-truth reflectance through an
/// estimated-to-ground-truth vertex correspondence.
pub fn reflectance_rmse<T: Real>(
    gt_field: &[SpectralCurve<T>],
    est_field: &[SpectralCurve<T>],
    correspondence: &[u32],
) -> Result<ReflectanceErrorMap<T>, EvalError> {
    if correspondence.is_empty() || est_field.is_empty() {
        return Err(EvalError::EmptyCorrespondence);
    }
    assert_eq!(correspondence.len(), est_field.len());
    let inv_bands = T::one() / real::<T>(N_BANDS as f64);
    let values: Vec<T> = est_field
        .iter()
        .zip(correspondence)
        .map(|(est, &gt_idx)| {
            let diff = est.samples() - gt_field[gt_idx as usize].samples();
            (diff.norm_squared() * inv_bands).sqrt()
        })
        .collect();
    let mean = values.iter().copied().sum::<T>() / real(values.len() as f64);
    Ok(ReflectanceErrorMap { values, mean })
}

/// Nearest ground-truth vertex for every estimated vertex.
pub fn nearest_correspondence<T: Real>(
    gt_points: &[Vector3<T>],
    est_points: &[Vector3<T>],
) -> Result<Vec<u32>, EvalError> {
    if gt_points.is_empty() || est_points.is_empty() {
        return Err(EvalError::EmptyPointSet);
    }
    let tree = KdTree::build(gt_points.to_vec());
    Ok(est_points.iter().map(|p| tree.nearest(p).0).collect())
}

/// `|v_est - v_true| / scene_scale`.
pub fn light_position_error<T: Real>(
    v_est: &Vector3<T>,
    v_true: &Vector3<T>,
    scene_scale: T,
) -> T {
    (v_est - v_true).norm() / scene_scale
}

/// Relighting comparison output.
pub struct RelightComparison<T: Real> {
    pub estimated: Image<T>,
    pub reference: Image<T>,
    /// Per-pixel mean absolute channel difference.
    pub error_image: Image<T>,
    /// Mean absolute error over reference foreground pixels and channels.
    pub mean_abs_error: T,
    pub foreground_pixels: usize,
}

/// Spectral-3D model bundle for relighting.
pub struct RelightModel<'a, T: Real> {
    pub mesh: &'a SceneMesh<T>,
    pub field: &'a ReflectanceField<T>,
    pub basis: &'a SpectralBasis<T>,
}

/// Renders the estimated and reference models under the same novel light
/// position and SPD and reports the difference over the reference
/// foreground.
#[allow(clippy::too_many_arguments)]
pub fn relight_compare<T: Real>(
    estimated: &RelightModel<'_, T>,
    reference: &RelightModel<'_, T>,
    pose: &CameraPose<T>,
    sensitivity: &CameraSensitivity<T>,
    new_light: &Vector3<T>,
    new_spd: &Illuminant<T>,
) -> Result<RelightComparison<T>, EvalError> {
    let opts = RasterOptions::default();
    let bvh_est = Bvh::build(estimated.mesh);
    let (img_est, _) = render_image(
        estimated.mesh,
        estimated.field,
        pose,
        new_spd,
        sensitivity,
        new_light,
        estimated.basis,
        &bvh_est,
        &opts,
    )?;
    let bvh_ref = Bvh::build(reference.mesh);
    let (img_ref, depth_ref) = render_image(
        reference.mesh,
        reference.field,
        pose,
        new_spd,
        sensitivity,
        new_light,
        reference.basis,
        &bvh_ref,
        &opts,
    )?;

    let mut error_image = Image::new(img_ref.width(), img_ref.height());
    let mut total = T::zero();
    let mut foreground = 0usize;
    let third = T::one() / real::<T>(3.0);
    for y in 0..img_ref.height() {
        for x in 0..img_ref.width() {
            let d = img_est.pixel(x, y) - img_ref.pixel(x, y);
            let mae = (d.x.abs() + d.y.abs() + d.z.abs()) * third;
            *error_image.pixel_mut(x, y) = Vector3::from_element(mae);
            if depth_ref.is_foreground(x, y) {
                total += mae;
                foreground += 1;
            }
        }
    }
    let mean_abs_error = if foreground > 0 {
        total / real(foreground as f64)
    } else {
        T::zero()
    };
    Ok(RelightComparison {
        estimated: img_est,
        reference: img_ref,
        error_image,
        mean_abs_error,
        foreground_pixels: foreground,
    })
}

/// Summary block written by the evaluation command.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvalSummary {
    pub mean_completeness: f64,
    pub mean_accuracy: f64,
    pub mean_rmse: Option<f64>,
    pub light_error: Option<f64>,
}

impl EvalSummary {
    pub fn new<T: Real>(
        completeness: &GeometryErrorMap<T>,
        accuracy: &GeometryErrorMap<T>,
        rmse: Option<&ReflectanceErrorMap<T>>,
        light_error: Option<T>,
    ) -> Self {
        Self {
            mean_completeness: to_f64(completeness.mean),
            mean_accuracy: to_f64(accuracy.mean),
            mean_rmse: rmse.map(|m| to_f64(m.mean)),
            light_error: light_error.map(to_f64),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn cloud(n: usize, seed: u64) -> Vec<Vector3<f64>> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                Vector3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                )
            })
            .collect()
    }

    #[test]
    fn identical_sets_have_zero_error() {
        let points = cloud(200, 1);
        assert_relative_eq!(completeness(&points, &points).unwrap().mean, 0.0);
        assert_relative_eq!(accuracy(&points, &points).unwrap().mean, 0.0);
    }

    #[test]
    fn two_points_at_distance_d() {
        let gt = vec![Vector3::new(0.0, 0.0, 0.0)];
        let est = vec![Vector3::new(0.3, 0.0, 0.0)];
        assert_relative_eq!(completeness(&gt, &est).unwrap().mean, 0.3);
        assert_relative_eq!(accuracy(&gt, &est).unwrap().mean, 0.3);
    }

    #[test]
    fn single_outlier_dominates_its_own_entry() {
        let gt = cloud(100, 2);
        let mut est = gt.clone();
        est.push(Vector3::new(5.0, 5.0, 5.0));
        let map = accuracy(&gt, &est).unwrap();
        let max = map.values.iter().cloned().fold(0.0, f64::max);
        let expected = brute_force_nearest(&gt, &Vector3::new(5.0, 5.0, 5.0)).1;
        assert_relative_eq!(max, expected);
    }

    #[test]
    fn empty_sets_are_rejected() {
        let points = cloud(5, 3);
        assert!(matches!(
            completeness(&[], &points),
            Err(EvalError::EmptyPointSet)
        ));
        assert!(matches!(
            accuracy(&points, &[]),
            Err(EvalError::EmptyPointSet)
        ));
    }

    #[test]
    fn metrics_match_brute_force() {
        let gt = cloud(400, 4);
        let est = cloud(350, 5);
        let map = completeness(&gt, &est).unwrap();
        for (p, v) in gt.iter().zip(&map.values) {
            assert_eq!(*v, brute_force_nearest(&est, p).1);
        }
    }

    #[test]
    fn rigid_transform_invariance() {
        let gt = cloud(150, 6);
        let est = cloud(120, 7);
        let r = nalgebra::Rotation3::from_scaled_axis(Vector3::new(0.4, -0.2, 0.9));
        let t = Vector3::new(0.5, -1.0, 2.0);
        let gt2: Vec<_> = gt.iter().map(|p| r * p + t).collect();
        let est2: Vec<_> = est.iter().map(|p| r * p + t).collect();
        let a = completeness(&gt, &est).unwrap();
        let b = completeness(&gt2, &est2).unwrap();
        assert_relative_eq!(a.mean, b.mean, epsilon = 1e-12);
        let a = accuracy(&gt, &est).unwrap();
        let b = accuracy(&gt2, &est2).unwrap();
        assert_relative_eq!(a.mean, b.mean, epsilon = 1e-12);
    }

    #[test]
    fn rmse_of_constant_offset() {
        let gt: Vec<SpectralCurve<f64>> =
            vec![SpectralCurve::constant(0.4).unwrap(); 10];
        let est: Vec<SpectralCurve<f64>> =
            vec![SpectralCurve::constant(0.5).unwrap(); 10];
        let correspondence: Vec<u32> = (0..10).collect();
        let map = reflectance_rmse(&gt, &est, &correspondence).unwrap();
        for v in &map.values {
            assert_relative_eq!(*v, 0.1, epsilon = 1e-12);
        }
        assert_relative_eq!(map.mean, 0.1, epsilon = 1e-12);
    }

    #[test]
    fn rmse_matches_direct_formula() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let gt: Vec<SpectralCurve<f64>> = (0..20)
            .map(|_| {
                let base: f64 = rng.random_range(0.2..0.8);
                SpectralCurve::constant(base).unwrap()
            })
            .collect();
        let est: Vec<SpectralCurve<f64>> = (0..15)
            .map(|_| {
                let base: f64 = rng.random_range(0.2..0.8);
                SpectralCurve::constant(base).unwrap()
            })
            .collect();
        let correspondence: Vec<u32> = (0..15).map(|i| (i % 20) as u32).collect();
        let map = reflectance_rmse(&gt, &est, &correspondence).unwrap();
        for (k, v) in map.values.iter().enumerate() {
            let mut acc = 0.0;
            for band in 0..N_BANDS {
                let d = est[k].value(band) - gt[correspondence[k] as usize].value(band);
                acc += d * d;
            }
            assert_relative_eq!(*v, (acc / N_BANDS as f64).sqrt(), epsilon = 1e-12);
        }
    }

    #[test]
    fn light_error_is_scaled_norm() {
        let v_true = Vector3::new(0.2, 0.0, 0.0);
        assert_relative_eq!(light_position_error(&v_true, &v_true, 2.0), 0.0);
        let v_est = v_true + Vector3::new(0.0, 0.02, 0.0);
        assert_relative_eq!(light_position_error(&v_est, &v_true, 2.0), 0.01);
    }
}
