//! Dataset manifests, camera lists, and light files.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::geometry::CameraRecord;

use super::IoError;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// Everything needed to reload a rendered dataset; paths are relative to the
/// manifest's directory.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub schema_version: u32,
    /// Ground-truth (or source) mesh.
    pub mesh: String,
    /// Optimization starting mesh when different from `mesh`.
    pub init_mesh: Option<String>,
    /// One camera record per view; `illuminant_id` names the SPD used.
    pub cameras: String,
    pub sensitivity: SensitivityFiles,
    pub illuminants: Vec<IlluminantFile>,
    /// Illuminant id per view record; redundant with the camera records and
    /// validated against them on load.
    pub schedule: Vec<String>,
    /// One PFM per view record.
    pub images: Vec<String>,
    pub basis: String,
    pub v_true: Option<[f64; 3]>,
    pub gt_reflectance: Option<String>,
    pub gt_alpha: Option<String>,
    pub seed: u64,
    pub noise_sigma: f64,
}

/// Spectra CSVs tagged by role.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityFiles {
    pub r: String,
    pub g: String,
    pub b: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IlluminantFile {
    pub id: String,
    pub path: String,
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Self, IoError> {
        let manifest: DatasetManifest =
            serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if manifest.schema_version != MANIFEST_SCHEMA_VERSION {
            return Err(IoError::InvalidConfig(format!(
                "manifest schema_version must be {MANIFEST_SCHEMA_VERSION}"
            )));
        }
        if manifest.schedule.len() != manifest.images.len() {
            return Err(IoError::InvalidConfig(
                "manifest schedule and images must have equal length".into(),
            ));
        }
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> Result<(), IoError> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

pub fn write_cameras(path: &Path, records: &[CameraRecord]) -> Result<(), IoError> {
    std::fs::write(path, serde_json::to_string_pretty(records)? + "\n")?;
    Ok(())
}

pub fn read_cameras(path: &Path) -> Result<Vec<CameraRecord>, IoError> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// Estimated (or fixed) rig translation.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LightSolution {
    pub v: [f64; 3],
    /// True when the positions were supplied instead of estimated.
    pub fixed: bool,
}

pub fn write_light_solution(path: &Path, light: &LightSolution) -> Result<(), IoError> {
    std::fs::write(path, serde_json::to_string_pretty(light)? + "\n")?;
    Ok(())
}

pub fn read_light_solution(path: &Path) -> Result<LightSolution, IoError> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// Fixed per-view light positions for projector-style setups.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedLights {
    pub positions: Vec<[f64; 3]>,
}

impl FixedLights {
    pub fn load(path: &Path) -> Result<Vec<Vector3<f64>>, IoError> {
        let parsed: FixedLights = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Ok(parsed
            .positions
            .iter()
            .map(|p| Vector3::new(p[0], p[1], p[2]))
            .collect())
    }

    pub fn save(path: &Path, positions: &[Vector3<f64>]) -> Result<(), IoError> {
        let lights = FixedLights {
            positions: positions.iter().map(|p| [p.x, p.y, p.z]).collect(),
        };
        std::fs::write(path, serde_json::to_string_pretty(&lights)? + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_validates_schedule_length() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        let manifest = DatasetManifest {
            schema_version: 1,
            mesh: "mesh.ply".into(),
            init_mesh: None,
            cameras: "cameras.json".into(),
            sensitivity: SensitivityFiles {
                r: "r.csv".into(),
                g: "g.csv".into(),
                b: "b.csv".into(),
            },
            illuminants: vec![],
            schedule: vec!["led_1".into()],
            images: vec![],
            basis: "basis.csv".into(),
            v_true: None,
            gt_reflectance: None,
            gt_alpha: None,
            seed: 1,
            noise_sigma: 0.0,
        };
        manifest.save(&path).unwrap();
        assert!(matches!(
            DatasetManifest::load(&path),
            Err(IoError::InvalidConfig(_))
        ));
    }
}
