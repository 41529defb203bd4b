//! Rendering a scene into a dataset directory and loading it back.

use nalgebra::{DMatrix, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use std::path::{Path, PathBuf};

use crate::costs::ViewRecord;
use crate::geometry::{Bvh, CameraPose, SceneMesh};
use crate::io::{
    self, DatasetManifest, IlluminantFile, IoError, SensitivityFiles, MANIFEST_SCHEMA_VERSION,
};
use crate::rendering::{
    render_image, CameraSensitivity, Illuminant, Image, RasterOptions, ReflectanceField,
};
use crate::spectra::{SpectralBasis, SpectralCurve, N_BANDS};

use super::scene::SyntheticScene;

/// Renders every record of the capture schedule; parallel over views, with
/// a per-record noise stream so results do not depend on scheduling.
pub fn render_views(
    scene: &SyntheticScene,
    sensitivity: &CameraSensitivity<f64>,
    illuminants: &[Illuminant<f64>],
    basis: &SpectralBasis<f64>,
    noise_sigma: f64,
    seed: u64,
) -> Vec<Image<f64>> {
    let bvh = Bvh::build(&scene.mesh);
    let field = ReflectanceField::new(scene.gt_alpha.clone());
    let opts = RasterOptions::default();
    (0..scene.n_records())
        .into_par_iter()
        .map(|c| {
            let (mut image, _) = render_image(
                &scene.mesh,
                &field,
                &scene.poses[c],
                &illuminants[scene.schedule[c]],
                sensitivity,
                &scene.light_positions[c],
                basis,
                &bvh,
                &opts,
            )
            .expect("non-empty scene");
            if noise_sigma > 0.0 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (c as u64).wrapping_mul(0x9e37));
                let normal = Normal::new(0.0, noise_sigma).expect("valid sigma");
                for p in image.pixels_mut() {
                    p.x += normal.sample(&mut rng);
                    p.y += normal.sample(&mut rng);
                    p.z += normal.sample(&mut rng);
                }
            }
            image
        })
        .collect()
}

/// Renders and writes a complete, self-contained dataset directory.
#[allow(clippy::too_many_arguments)]
pub fn write_dataset(
    dir: &Path,
    scene: &SyntheticScene,
    sensitivity: &CameraSensitivity<f64>,
    illuminants: &[Illuminant<f64>],
    basis: &SpectralBasis<f64>,
    basis_dataset_hash: &str,
    images: &[Image<f64>],
    init_mesh: Option<&SceneMesh<f64>>,
    seed: u64,
    noise_sigma: f64,
) -> Result<DatasetManifest, IoError> {
    std::fs::create_dir_all(dir.join("images"))?;
    io::write_ply(&dir.join("mesh_gt.ply"), &scene.mesh, None)?;
    let init_mesh_name = match init_mesh {
        Some(mesh) => {
            io::write_ply(&dir.join("mesh_init.ply"), mesh, None)?;
            Some("mesh_init.ply".to_string())
        }
        None => None,
    };

    let records: Vec<crate::geometry::CameraRecord> = scene
        .poses
        .iter()
        .zip(&scene.schedule)
        .map(|(pose, &illum)| pose.to_record(&illuminants[illum].id))
        .collect();
    io::write_cameras(&dir.join("cameras.json"), &records)?;

    io::write_curve_csv(&dir.join("sens_r.csv"), &sensitivity.rows()[0])?;
    io::write_curve_csv(&dir.join("sens_g.csv"), &sensitivity.rows()[1])?;
    io::write_curve_csv(&dir.join("sens_b.csv"), &sensitivity.rows()[2])?;

    let mut illuminant_files = Vec::new();
    for illum in illuminants {
        let name = format!("illum_{}.csv", illum.id);
        io::write_curve_csv(&dir.join(&name), illum.spd())?;
        illuminant_files.push(IlluminantFile {
            id: illum.id.clone(),
            path: name,
        });
    }

    io::write_basis_csv(&dir.join("basis.csv"), basis, basis_dataset_hash)?;

    let mut image_names = Vec::with_capacity(images.len());
    for (c, image) in images.iter().enumerate() {
        let name = format!("images/view_{c:04}.pfm");
        io::write_pfm(&dir.join(&name), image)?;
        image_names.push(name);
    }

    // Ground truth: exact per-vertex reflectance and its basis weights.
    let n_v = scene.mesh.n_vertices();
    let refl = DMatrix::from_fn(n_v, N_BANDS, |i, k| scene.gt_reflectance(i).value(k));
    io::write_matrix_csv(&dir.join("gt_reflectance.csv"), &refl)?;
    io::write_matrix_csv(&dir.join("gt_alpha.csv"), &scene.gt_alpha)?;

    let manifest = DatasetManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        mesh: "mesh_gt.ply".into(),
        init_mesh: init_mesh_name,
        cameras: "cameras.json".into(),
        sensitivity: SensitivityFiles {
            r: "sens_r.csv".into(),
            g: "sens_g.csv".into(),
            b: "sens_b.csv".into(),
        },
        illuminants: illuminant_files,
        schedule: scene
            .schedule
            .iter()
            .map(|&i| illuminants[i].id.clone())
            .collect(),
        images: image_names,
        basis: "basis.csv".into(),
        v_true: Some([scene.v_true.x, scene.v_true.y, scene.v_true.z]),
        gt_reflectance: Some("gt_reflectance.csv".into()),
        gt_alpha: Some("gt_alpha.csv".into()),
        seed,
        noise_sigma,
    };
    manifest.save(&dir.join("manifest.json"))?;
    Ok(manifest)
}

/// A dataset loaded back into problem inputs.
pub struct LoadedDataset {
    pub mesh: SceneMesh<f64>,
    pub init_mesh: Option<SceneMesh<f64>>,
    pub views: Vec<ViewRecord<f64>>,
    pub illuminants: Vec<Illuminant<f64>>,
    pub sensitivity: CameraSensitivity<f64>,
    pub basis: SpectralBasis<f64>,
    pub v_true: Option<Vector3<f64>>,
    pub gt_reflectance: Option<Vec<SpectralCurve<f64>>>,
    pub gt_alpha: Option<DMatrix<f64>>,
    pub manifest: DatasetManifest,
}

pub fn load_dataset(manifest_path: &Path) -> Result<LoadedDataset, IoError> {
    let manifest = DatasetManifest::load(manifest_path)?;
    let dir: PathBuf = manifest_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let mesh = io::read_ply(&dir.join(&manifest.mesh))?;
    let init_mesh = manifest
        .init_mesh
        .as_ref()
        .map(|p| io::read_ply(&dir.join(p)))
        .transpose()?;

    let sensitivity = CameraSensitivity::new([
        io::read_curve_csv(&dir.join(&manifest.sensitivity.r))?,
        io::read_curve_csv(&dir.join(&manifest.sensitivity.g))?,
        io::read_curve_csv(&dir.join(&manifest.sensitivity.b))?,
    ])
    .map_err(|e| IoError::InvalidConfig(e.to_string()))?;

    let mut illuminants = Vec::new();
    for entry in &manifest.illuminants {
        let spd = io::read_curve_csv(&dir.join(&entry.path))?;
        illuminants.push(
            Illuminant::new(entry.id.clone(), spd)
                .map_err(|e| IoError::InvalidConfig(e.to_string()))?,
        );
    }
    let illuminant_index = |id: &str| -> Result<usize, IoError> {
        illuminants
            .iter()
            .position(|i| i.id == id)
            .ok_or_else(|| IoError::InvalidConfig(format!("unknown illuminant id `{id}`")))
    };

    let records = io::read_cameras(&dir.join(&manifest.cameras))?;
    if records.len() != manifest.images.len() {
        return Err(IoError::InvalidConfig(
            "camera record count disagrees with image list".into(),
        ));
    }
    let mut views = Vec::with_capacity(records.len());
    for ((record, image_path), scheduled) in records
        .iter()
        .zip(&manifest.images)
        .zip(&manifest.schedule)
    {
        if &record.illuminant_id != scheduled {
            return Err(IoError::InvalidConfig(
                "manifest schedule disagrees with camera records".into(),
            ));
        }
        let pose = CameraPose::from_record(record)?;
        let image = io::read_pfm(&dir.join(image_path))?;
        views.push(ViewRecord {
            pose,
            illuminant: illuminant_index(&record.illuminant_id)?,
            image,
        });
    }

    let (basis, _) = io::read_basis_csv(&dir.join(&manifest.basis))?;
    let v_true = manifest
        .v_true
        .map(|v| Vector3::new(v[0], v[1], v[2]));
    let gt_reflectance = manifest
        .gt_reflectance
        .as_ref()
        .map(|p| -> Result<Vec<SpectralCurve<f64>>, IoError> {
            let m = io::read_matrix_csv(&dir.join(p))?;
            let mut curves = Vec::with_capacity(m.nrows());
            for i in 0..m.nrows() {
                let row: Vec<f64> = m.row(i).iter().copied().collect();
                curves.push(SpectralCurve::new(&row)?);
            }
            Ok(curves)
        })
        .transpose()?;
    let gt_alpha = manifest
        .gt_alpha
        .as_ref()
        .map(|p| io::read_matrix_csv(&dir.join(p)))
        .transpose()?;

    Ok(LoadedDataset {
        mesh,
        init_mesh,
        views,
        illuminants,
        sensitivity,
        basis,
        v_true,
        gt_reflectance,
        gt_alpha,
        manifest,
    })
}
