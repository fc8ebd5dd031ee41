//! Scene files, presets and the check runner.

pub mod presets;
pub mod report;
pub mod runner;
pub mod scene;

pub use presets::{load_preset, Preset, PRESETS};
pub use report::RunReport;
pub use runner::{run, RunOptions};
pub use scene::{load_scene, parse_scene, Scene, SceneError};

/// Resolves a preset name or a scene file path.
pub fn resolve(target: &str) -> Result<Scene, SceneError> {
    let path = std::path::Path::new(target);
    match load_preset(target) {
        Some(scene) => scene,
        None if !path.exists() => Err(SceneError::Io {
            path: target.to_string(),
            source: std::io::Error::new(
                std::io::ErrorKind::NotFound,
                "no such preset or scene file",
            ),
        }),
        None => load_scene(path),
    }
}
