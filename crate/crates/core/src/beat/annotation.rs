//! `<name>.beats.json` sidecar files.

use std::path::{Path, PathBuf};

use super::{BeatError, BeatGrid, Result};

/// Sidecar path for an audio file: `dir/name.wav` → `dir/name.beats.json`.
pub fn sidecar_path(audio: &Path) -> PathBuf {
    let stem = audio
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    audio.with_file_name(format!("{stem}.beats.json"))
}

pub fn parse_beat_annotation(text: &str) -> Result<BeatGrid> {
    let grid: BeatGrid =
        serde_json::from_str(text).map_err(|e| BeatError::SchemaError(e.to_string()))?;
    grid.validate()?;
    Ok(grid)
}

pub fn load_beat_annotation(path: impl AsRef<Path>) -> Result<BeatGrid> {
    let text = std::fs::read_to_string(path)?;
    parse_beat_annotation(&text)
}

pub fn save_beat_annotation(grid: &BeatGrid, path: impl AsRef<Path>) -> Result<()> {
    grid.validate()?;
    let mut text =
        serde_json::to_string_pretty(grid).map_err(|e| BeatError::SchemaError(e.to_string()))?;
    text.push('\n');
    crate::io_util::write_atomic(path.as_ref(), text.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beat::BeatSource;

    #[test]
    fn sidecar_naming() {
        assert_eq!(
            sidecar_path(Path::new("/a/b/track01.wav")),
            PathBuf::from("/a/b/track01.beats.json")
        );
    }

    #[test]
    fn save_then_load_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.beats.json");
        let grid = BeatGrid {
            tempo_bpm: 118.73,
            beat_times: vec![0.131, 0.6364, 1.141_592_653_589_793, 1.6463],
            downbeat_times: vec![0.131],
            source: BeatSource::Builtin,
        };
        save_beat_annotation(&grid, &path).unwrap();
        assert_eq!(load_beat_annotation(&path).unwrap(), grid);
    }

    #[test]
    fn wire_format_field_names() {
        let text = r#"{"tempo_bpm": 120, "beat_times": [0.5, 1.0, 1.5], "downbeat_times": [0.5], "source": "external"}"#;
        let grid = parse_beat_annotation(text).unwrap();
        assert_eq!(grid.source, BeatSource::External);
        assert_eq!(grid.beat_times.len(), 3);
    }

    #[test]
    fn stray_downbeat_is_rejected() {
        let text = r#"{"tempo_bpm": 120, "beat_times": [0.5, 1.0, 1.5], "downbeat_times": [0.75], "source": "external"}"#;
        assert!(matches!(
            parse_beat_annotation(text),
            Err(BeatError::InvariantViolation(_))
        ));
    }

    #[test]
    fn excessive_tempo_is_rejected() {
        let text = r#"{"tempo_bpm": 400, "beat_times": [0.15, 0.3], "downbeat_times": [], "source": "external"}"#;
        assert!(matches!(
            parse_beat_annotation(text),
            Err(BeatError::InvariantViolation(_))
        ));
    }

    #[test]
    fn malformed_json_is_a_schema_error() {
        assert!(matches!(
            parse_beat_annotation(r#"{"tempo_bpm": "fast"}"#),
            Err(BeatError::SchemaError(_))
        ));
    }
}
