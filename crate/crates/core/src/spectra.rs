//! Spectral curves, the orthonormal reflectance basis, and the wavelength
//! smoothness operator.
//!
//! All spectra are discretized over 31 bands, 400–700 nm at 10 nm steps.
//! Reflectance is represented as a weighted sum over a small orthonormal
//! basis learned from a reflectance dataset by uncentered PCA, so a curve
//! is reconstructed as `B * alpha` with no mean term.

use nalgebra::{Const, DMatrix, DVector, OMatrix, SMatrix, SVector};
use thiserror::Error;

use crate::real::{real, Real};

/// Number of wavelength bands.
pub const N_BANDS: usize = 31;
/// First band center, nanometers.
pub const BAND_START_NM: f64 = 400.0;
/// Band spacing, nanometers.
pub const BAND_STEP_NM: f64 = 10.0;

/// Column vector with one entry per band.
pub type BandVector<T> = SVector<T, N_BANDS>;
/// Square operator acting on band vectors.
pub type BandMatrix<T> = SMatrix<T, N_BANDS, N_BANDS>;
/// 3 x 31 sensor response matrix (rows R, G, B).
pub type SensitivityMatrix<T> = OMatrix<T, Const<3>, Const<N_BANDS>>;

#[derive(Debug, Error)]
pub enum SpectraError {
    #[error("expected 31 samples, got {0}")]
    WrongLength(usize),
    #[error("non-finite sample at band {0}")]
    NonFinite(usize),
    #[error("reflectance sample {value} at band {band} outside [0, 1]")]
    OutOfRange { band: usize, value: f64 },
    #[error("dataset has {n} curves but {n_b} basis functions were requested")]
    DatasetTooSmall { n: usize, n_b: usize },
    #[error("basis size {0} must be between 1 and 31")]
    BadBasisSize(usize),
    #[error("alpha has {got} weights, basis has {expected}")]
    WeightLength { got: usize, expected: usize },
    #[error("observation slices have mismatched lengths")]
    ObservationMismatch,
    #[error("at least one observation is required")]
    NoObservations,
    #[error("stacked system is rank-deficient; increase the regularization weight")]
    IllConditioned,
}

/// Band centers in nanometers.
pub fn wavelengths_nm() -> [f64; N_BANDS] {
    std::array::from_fn(|k| BAND_START_NM + BAND_STEP_NM * k as f64)
}

/// A spectrum sampled on the 31 standard bands.
///
/// The same type holds reflectance curves (dimensionless, in `[0, 1]`),
/// illuminant power distributions, and sensor sensitivity rows; range
/// validation is role-specific and opt-in via [`SpectralCurve::validate_reflectance`].
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralCurve<T: Real> {
    samples: BandVector<T>,
}

impl<T: Real> SpectralCurve<T> {
    pub fn new(samples: &[T]) -> Result<Self, SpectraError> {
        if samples.len() != N_BANDS {
            return Err(SpectraError::WrongLength(samples.len()));
        }
        Self::from_vector(BandVector::from_iterator(samples.iter().copied()))
    }

    pub fn from_vector(samples: BandVector<T>) -> Result<Self, SpectraError> {
        if let Some(band) = samples.iter().position(|v| !v.is_finite()) {
            return Err(SpectraError::NonFinite(band));
        }
        Ok(Self { samples })
    }

    /// Samples `f` at each band center (argument in nanometers).
    pub fn from_fn(f: impl Fn(f64) -> T) -> Result<Self, SpectraError> {
        Self::from_vector(BandVector::from_iterator(wavelengths_nm().map(f)))
    }

    pub fn constant(value: T) -> Result<Self, SpectraError> {
        Self::from_vector(BandVector::from_element(value))
    }

    pub fn samples(&self) -> &BandVector<T> {
        &self.samples
    }

    pub fn value(&self, band: usize) -> T {
        self.samples[band]
    }

    /// Checks the reflectance-role invariant: every sample in `[0, 1]`.
    pub fn validate_reflectance(&self) -> Result<(), SpectraError> {
        for (band, v) in self.samples.iter().enumerate() {
            if *v < T::zero() || *v > T::one() {
                return Err(SpectraError::OutOfRange {
                    band,
                    value: crate::real::to_f64(*v),
                });
            }
        }
        Ok(())
    }

    /// Clamp into `[0, 1]` for export. Optimizer internals never clamp.
    pub fn clamped_to_unit(&self) -> Self {
        Self {
            samples: self.samples.map(|v| v.clamp(T::zero(), T::one())),
        }
    }

    pub fn min_sample(&self) -> T {
        self.samples.iter().copied().fold(T::max_value().unwrap(), |a, b| a.min(b))
    }

    pub fn max_sample(&self) -> T {
        self.samples.iter().copied().fold(T::min_value().unwrap(), |a, b| a.max(b))
    }
}

/// Orthonormal spectral basis from uncentered PCA of a reflectance dataset.
///
/// `mean` is identically zero for uncentered PCA and is kept explicit so the
/// reconstruction contract `mean + B * alpha` is visible at the call sites.
#[derive(Clone, Debug)]
pub struct SpectralBasis<T: Real> {
    matrix: OMatrix<T, Const<N_BANDS>, nalgebra::Dyn>,
    mean: BandVector<T>,
    explained: Vec<T>,
}

impl<T: Real> SpectralBasis<T> {
    /// Builds the top `n_b` principal components of `dataset` by descending
    /// eigenvalue of the (uncentered) sample second-moment matrix.
    pub fn build(dataset: &[SpectralCurve<T>], n_b: usize) -> Result<Self, SpectraError> {
        if n_b == 0 || n_b > N_BANDS {
            return Err(SpectraError::BadBasisSize(n_b));
        }
        if dataset.len() < n_b {
            return Err(SpectraError::DatasetTooSmall {
                n: dataset.len(),
                n_b,
            });
        }
        let n = dataset.len();
        let mut data = DMatrix::<T>::zeros(n, N_BANDS);
        for (r, curve) in dataset.iter().enumerate() {
            for (c, v) in curve.samples().iter().enumerate() {
                if !v.is_finite() {
                    return Err(SpectraError::NonFinite(c));
                }
                data[(r, c)] = *v;
            }
        }

        let svd = data.svd(false, true);
        let v_t = svd.v_t.expect("SVD with V requested");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| {
            svd.singular_values[b]
                .partial_cmp(&svd.singular_values[a])
                .expect("finite singular values")
        });

        let total: T = svd.singular_values.iter().map(|s| *s * *s).sum();
        let mut matrix = OMatrix::<T, Const<N_BANDS>, nalgebra::Dyn>::zeros(n_b);
        let mut explained = Vec::with_capacity(n_b);
        for (col, &k) in order.iter().take(n_b).enumerate() {
            let mut component = v_t.row(k).transpose();
            // Deterministic sign: largest-magnitude entry positive.
            let lead = component
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
                .map(|(i, _)| i)
                .unwrap();
            if component[lead] < T::zero() {
                component = -component;
            }
            matrix.set_column(col, &component);
            let s = svd.singular_values[k];
            explained.push(if total > T::zero() { s * s / total } else { T::zero() });
        }

        Ok(Self {
            matrix,
            mean: BandVector::zeros(),
            explained,
        })
    }

    /// Wraps an existing matrix, checking column orthonormality to 1e-10.
    pub fn from_matrix(
        matrix: OMatrix<T, Const<N_BANDS>, nalgebra::Dyn>,
        mean: BandVector<T>,
    ) -> Result<Self, SpectraError> {
        let n_b = matrix.ncols();
        if n_b == 0 || n_b > N_BANDS {
            return Err(SpectraError::BadBasisSize(n_b));
        }
        let gram = matrix.transpose() * &matrix;
        let err = (&gram - DMatrix::<T>::identity(n_b, n_b)).abs().max();
        if err > real(1e-10) {
            return Err(SpectraError::IllConditioned);
        }
        Ok(Self {
            matrix,
            mean,
            explained: Vec::new(),
        })
    }

    pub fn n_b(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &OMatrix<T, Const<N_BANDS>, nalgebra::Dyn> {
        &self.matrix
    }

    pub fn mean(&self) -> &BandVector<T> {
        &self.mean
    }

    /// Per-component explained-variance fractions, descending.
    pub fn explained_variance(&self) -> &[T] {
        &self.explained
    }

    pub fn cumulative_explained_variance(&self) -> T {
        self.explained.iter().copied().sum()
    }

    /// `mean + B * alpha`.
    pub fn reconstruct(&self, alpha: &DVector<T>) -> Result<SpectralCurve<T>, SpectraError> {
        if alpha.len() != self.n_b() {
            return Err(SpectraError::WeightLength {
                got: alpha.len(),
                expected: self.n_b(),
            });
        }
        let samples = self.mean + &self.matrix * alpha;
        SpectralCurve::from_vector(samples)
    }

    /// Least-squares weights for `curve`; exact projection since columns are
    /// orthonormal.
    pub fn project(&self, curve: &SpectralCurve<T>) -> DVector<T> {
        self.matrix.transpose() * (curve.samples() - self.mean)
    }

    /// Max deviation of `B^T B` from the identity.
    pub fn orthonormality_error(&self) -> T {
        let n_b = self.n_b();
        let gram = self.matrix.transpose() * &self.matrix;
        (&gram - DMatrix::<T>::identity(n_b, n_b)).abs().max()
    }
}

/// Banded second-difference operator along the wavelength axis.
///
/// Interior row `k` carries `(1, -2, 1)` centered at `k`, in band-index
/// units; the two boundary rows are zero so only well-defined interior
/// curvature is penalized.
#[derive(Clone, Debug)]
pub struct SmoothnessOperator<T: Real> {
    matrix: BandMatrix<T>,
}

impl<T: Real> SmoothnessOperator<T> {
    pub fn second_difference() -> Self {
        let mut matrix = BandMatrix::zeros();
        for k in 1..N_BANDS - 1 {
            matrix[(k, k - 1)] = T::one();
            matrix[(k, k)] = -real::<T>(2.0);
            matrix[(k, k + 1)] = T::one();
        }
        Self { matrix }
    }

    pub fn matrix(&self) -> &BandMatrix<T> {
        &self.matrix
    }

    pub fn apply(&self, v: &BandVector<T>) -> BandVector<T> {
        self.matrix * v
    }

    /// `D * B`, the operator composed with a basis; 31 x n_b.
    pub fn compose(&self, basis: &SpectralBasis<T>) -> OMatrix<T, Const<N_BANDS>, nalgebra::Dyn> {
        self.matrix * basis.matrix()
    }
}

impl<T: Real> Default for SmoothnessOperator<T> {
    fn default() -> Self {
        Self::second_difference()
    }
}

/// One RGB observation of a surface point: the illuminant it was lit by and
/// an optional known scalar shading multiplier (1 when already divided out).
#[derive(Clone, Debug)]
pub struct DirectObservation<T: Real> {
    pub illuminant: SpectralCurve<T>,
    pub rgb: nalgebra::Vector3<T>,
    pub shading: T,
}

/// Shading-ignorant linear reflectance estimate from stacked RGB
/// observations, Tikhonov-regularized by the curvature of the reconstructed
/// curve. Serves as the baseline estimator and as an independent oracle for
/// the joint optimizer.
///
/// The data block is scaled by `1/sqrt(n_obs)` so duplicated observations do
/// not change the balance against the regularizer.
pub fn fit_reflectance_direct<T: Real>(
    basis: &SpectralBasis<T>,
    sensitivity: &SensitivityMatrix<T>,
    observations: &[DirectObservation<T>],
    tikhonov: T,
) -> Result<DVector<T>, SpectraError> {
    if observations.is_empty() {
        return Err(SpectraError::NoObservations);
    }
    let n_b = basis.n_b();
    let n = observations.len();
    let obs_scale = T::one() / real::<T>(n as f64).sqrt();

    let mut stacked = DMatrix::<T>::zeros(3 * n, n_b);
    let mut rhs = DVector::<T>::zeros(3 * n);
    for (k, obs) in observations.iter().enumerate() {
        // rows: shading * C^T * diag(l) * B, scaled.
        let mut weighted = sensitivity.clone_owned();
        for band in 0..N_BANDS {
            let l = obs.illuminant.value(band);
            for ch in 0..3 {
                weighted[(ch, band)] *= l;
            }
        }
        let block = weighted * basis.matrix() * (obs.shading * obs_scale);
        stacked.view_mut((3 * k, 0), (3, n_b)).copy_from(&block);
        rhs.rows_mut(3 * k, 3)
            .copy_from(&(obs.rgb * obs_scale));
    }

    if tikhonov == T::zero() {
        let svd = stacked.clone().svd(false, false);
        let max_s = svd.singular_values.max();
        let min_s = svd.singular_values.min();
        if stacked.nrows() < n_b || min_s <= max_s * real(1e-10) {
            return Err(SpectraError::IllConditioned);
        }
    }

    let smooth = SmoothnessOperator::<T>::second_difference().compose(basis) * tikhonov.sqrt();
    let h = stacked.transpose() * &stacked + smooth.transpose() * &smooth;
    let b = stacked.transpose() * rhs;
    let chol = nalgebra::Cholesky::new(h).ok_or(SpectraError::IllConditioned)?;
    Ok(chol.solve(&b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ramp_curve() -> SpectralCurve<f64> {
        SpectralCurve::from_fn(|nm| (nm - 400.0) / 300.0).unwrap()
    }

    #[test]
    fn wavelength_axis() {
        let w = wavelengths_nm();
        assert_eq!(w[0], 400.0);
        assert_eq!(w[30], 700.0);
        assert_eq!(w.len(), N_BANDS);
    }

    #[test]
    fn curve_length_is_enforced() {
        let err = SpectralCurve::<f64>::new(&[0.5; 30]).unwrap_err();
        assert!(matches!(err, SpectraError::WrongLength(30)));
    }

    #[test]
    fn curve_rejects_nan() {
        let mut samples = [0.5; N_BANDS];
        samples[7] = f64::NAN;
        let err = SpectralCurve::new(&samples).unwrap_err();
        assert!(matches!(err, SpectraError::NonFinite(7)));
    }

    #[test]
    fn reflectance_range_validation() {
        let curve = SpectralCurve::constant(1.2f64).unwrap();
        assert!(matches!(
            curve.validate_reflectance(),
            Err(SpectraError::OutOfRange { .. })
        ));
        assert!(curve.clamped_to_unit().validate_reflectance().is_ok());
        assert!(ramp_curve().validate_reflectance().is_ok());
    }

    #[test]
    fn operator_annihilates_constant() {
        let op = SmoothnessOperator::<f64>::second_difference();
        let out = op.apply(SpectralCurve::constant(0.7).unwrap().samples());
        assert_relative_eq!(out.norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn operator_annihilates_ramp_interior() {
        let op = SmoothnessOperator::<f64>::second_difference();
        let out = op.apply(ramp_curve().samples());
        for k in 0..N_BANDS {
            assert_relative_eq!(out[k], 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn operator_on_squared_index() {
        let op = SmoothnessOperator::<f64>::second_difference();
        let curve =
            SpectralCurve::from_vector(BandVector::from_fn(|k, _| (k * k) as f64)).unwrap();
        let out = op.apply(curve.samples());
        assert_eq!(out[0], 0.0);
        assert_eq!(out[N_BANDS - 1], 0.0);
        for k in 1..N_BANDS - 1 {
            assert_relative_eq!(out[k], 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn rank_one_dataset_gives_parallel_component() {
        let curve = ramp_curve();
        let dataset = vec![curve.clone(); 5];
        let basis = SpectralBasis::build(&dataset, 1).unwrap();
        let unit = curve.samples() / curve.samples().norm();
        let dot: f64 = basis.matrix().column(0).dot(&unit);
        assert_relative_eq!(dot.abs(), 1.0, epsilon = 1e-12);
        assert!(basis.explained_variance()[0] > 1.0 - 1e-12);
    }

    #[test]
    fn basis_requires_enough_curves() {
        let dataset = vec![ramp_curve(); 3];
        let err = SpectralBasis::build(&dataset, 8).unwrap_err();
        assert!(matches!(err, SpectraError::DatasetTooSmall { n: 3, n_b: 8 }));
    }

    #[test]
    fn reconstruct_zero_alpha_is_mean() {
        let dataset = vec![ramp_curve(); 4];
        let basis = SpectralBasis::build(&dataset, 2).unwrap();
        let curve = basis.reconstruct(&DVector::zeros(2)).unwrap();
        assert_relative_eq!(curve.samples().norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn reconstruct_unit_alpha_is_first_column() {
        let dataset = vec![ramp_curve(); 4];
        let basis = SpectralBasis::build(&dataset, 2).unwrap();
        let mut alpha = DVector::zeros(2);
        alpha[0] = 1.0;
        let curve = basis.reconstruct(&alpha).unwrap();
        let diff = (curve.samples() - basis.matrix().column(0)).norm();
        assert_relative_eq!(diff, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn reconstruct_rejects_wrong_length() {
        let dataset = vec![ramp_curve(); 4];
        let basis = SpectralBasis::build(&dataset, 2).unwrap();
        let err = basis.reconstruct(&DVector::zeros(3)).unwrap_err();
        assert!(matches!(
            err,
            SpectraError::WeightLength { got: 3, expected: 2 }
        ));
    }

    #[test]
    fn fit_requires_observations() {
        let dataset = vec![ramp_curve(); 4];
        let basis = SpectralBasis::build(&dataset, 2).unwrap();
        let sens = SensitivityMatrix::<f64>::from_element(1.0);
        let err = fit_reflectance_direct(&basis, &sens, &[], 1e-2).unwrap_err();
        assert!(matches!(err, SpectraError::NoObservations));
    }

    #[test]
    fn fit_flags_rank_deficiency_without_regularization() {
        // 3 equations, 8 unknowns: singular without the regularizer.
        let mut dataset = Vec::new();
        for i in 0..12 {
            let phase = i as f64 * 0.37;
            dataset.push(
                SpectralCurve::from_fn(|nm| {
                    0.5 + 0.3 * ((nm - 400.0) / 80.0 + phase).sin()
                })
                .unwrap(),
            );
        }
        let basis = SpectralBasis::build(&dataset, 8).unwrap();
        let sens = SensitivityMatrix::<f64>::from_fn(|ch, band| {
            let center = [24.0, 14.0, 6.0][ch];
            (-((band as f64 - center) / 4.0).powi(2)).exp()
        });
        let obs = vec![DirectObservation {
            illuminant: SpectralCurve::constant(1.0).unwrap(),
            rgb: nalgebra::Vector3::new(0.2, 0.3, 0.1),
            shading: 1.0,
        }];
        let err = fit_reflectance_direct(&basis, &sens, &obs, 0.0).unwrap_err();
        assert!(matches!(err, SpectraError::IllConditioned));
        // The same system is well-posed with the default regularizer.
        assert!(fit_reflectance_direct(&basis, &sens, &obs, 1e-2).is_ok());
    }

    #[test]
    fn fit_zero_observations_give_zero_reflectance() {
        let mut dataset = Vec::new();
        for i in 0..12 {
            let phase = i as f64 * 0.61;
            dataset.push(
                SpectralCurve::from_fn(|nm| 0.4 + 0.25 * ((nm - 430.0) / 60.0 + phase).cos())
                    .unwrap(),
            );
        }
        let basis = SpectralBasis::build(&dataset, 8).unwrap();
        let sens = SensitivityMatrix::<f64>::from_fn(|ch, band| {
            let center = [24.0, 14.0, 6.0][ch];
            (-((band as f64 - center) / 4.0).powi(2)).exp()
        });
        let obs: Vec<_> = (0..3)
            .map(|_| DirectObservation {
                illuminant: SpectralCurve::constant(1.0).unwrap(),
                rgb: nalgebra::Vector3::zeros(),
                shading: 1.0,
            })
            .collect();
        let alpha = fit_reflectance_direct(&basis, &sens, &obs, 1e-2).unwrap();
        let curve = basis.reconstruct(&alpha).unwrap();
        assert!(curve.samples().norm() < 1e-10);
    }
}
