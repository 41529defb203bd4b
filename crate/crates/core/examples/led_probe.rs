//! Singular spectrum of the stacked per-vertex estimation system.

use nalgebra::DMatrix;
use spectral_mvir::spectra::{SpectralBasis, N_BANDS};
use spectral_mvir::synth;

fn main() {
    let basis = SpectralBasis::build(&synth::reflectance_dataset(400, 42), 8).unwrap();
    let sens = synth::camera_sensitivity().matrix();
    for n in [2usize, 3] {
        let illums = synth::led_illuminants(n);
        let mut stacked = DMatrix::<f64>::zeros(3 * n, 8);
        for (k, illum) in illums.iter().enumerate() {
            let mut weighted = sens.clone_owned();
            for band in 0..N_BANDS {
                for ch in 0..3 {
                    weighted[(ch, band)] *= illum.spd().value(band);
                }
            }
            stacked.view_mut((3 * k, 0), (3, 8)).copy_from(&(weighted * basis.matrix()));
        }
        let svd = stacked.svd(false, false);
        let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        println!("{n} illuminants: singular values {:?}", sv.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>());
    }
    // gamma1 prior scale for comparison: sqrt of largest eigenvalue of 0.01*(DB)^T(DB)
    let db = spectral_mvir::spectra::SmoothnessOperator::<f64>::second_difference().compose(&basis);
    let p = db.transpose() * &db * 0.01;
    let eig = nalgebra::SymmetricEigen::new(p);
    let mut ev: Vec<f64> = eig.eigenvalues.iter().map(|v| v.sqrt()).collect();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
    println!("sqrt eigenvalues of gamma1 (DB)^T DB: {:?}", ev.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>());
}
