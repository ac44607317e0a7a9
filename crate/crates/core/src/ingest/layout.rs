use std::path::{Path, PathBuf};

/// On-disk organization of a converted dataset:
///
/// ```text
/// <root>/boston3d/meshes/<model_id>.ply
/// <root>/boston3d/<scene>.xml
/// <root>/boston3d/<scene>.geojson
/// <root>/boston3d/<scene>_tileinfo.geojson
/// <root>/boston_antennas/antennas.geojson
/// ```
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetLayout {
    pub root: PathBuf,
}

impl DatasetLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn models_dir(&self) -> PathBuf {
        self.root.join("boston3d")
    }

    pub fn meshes_dir(&self) -> PathBuf {
        self.models_dir().join("meshes")
    }

    pub fn catalog(&self, scene: &str) -> PathBuf {
        self.models_dir().join(format!("{scene}.geojson"))
    }

    pub fn tileinfo(&self, scene: &str) -> PathBuf {
        self.models_dir().join(format!("{scene}_tileinfo.geojson"))
    }

    pub fn descriptor(&self, scene: &str) -> PathBuf {
        self.models_dir().join(format!("{scene}.xml"))
    }

    pub fn antennas(&self) -> PathBuf {
        self.root.join("boston_antennas").join("antennas.geojson")
    }

    /// Resolves a catalog `mesh` entry (relative to the models directory).
    pub fn mesh_file(&self, mesh_path: &str) -> PathBuf {
        let p = Path::new(mesh_path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.models_dir().join(p)
        }
    }

    /// Names of all scenes that have a tile-info file, sorted.
    pub fn scenes(&self) -> Vec<String> {
        let Ok(entries) = std::fs::read_dir(self.models_dir()) else {
            return Vec::new();
        };
        let mut names: Vec<String> = entries
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                e.file_name()
                    .to_str()
                    .and_then(|n| n.strip_suffix("_tileinfo.geojson"))
                    .map(str::to_string)
            })
            .collect();
        names.sort();
        names
    }
}
