//! Loading videos stored as directories of still frames.

use std::path::{Path, PathBuf};

use spdtraj_core::GrayImage;

use crate::error::{AppError, AppResult};

const FRAME_EXTENSIONS: [&str; 5] = ["png", "pgm", "ppm", "pnm", "pbm"];

/// Frame files of `dir` in file-name order.
pub fn frame_paths(dir: &Path) -> AppResult<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(AppError::io(dir))? {
        let path = entry.map_err(AppError::io(dir))?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        if ext.is_some_and(|e| FRAME_EXTENSIONS.contains(&e.as_str())) {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}

/// Reads one frame as luminance in `[0, 1]`.
pub fn load_frame(path: &Path) -> AppResult<GrayImage> {
    let img = image::open(path)
        .map_err(|source| AppError::Image {
            path: path.to_path_buf(),
            source,
        })?
        .to_luma32f();
    let (w, h) = img.dimensions();
    let data = img.into_raw().into_iter().map(f64::from).collect();
    Ok(GrayImage::new(w as usize, h as usize, data)?)
}

/// All frames of a video directory, resampled to the size of the first frame.
pub fn load_video(dir: &Path) -> AppResult<Vec<GrayImage>> {
    let paths = frame_paths(dir)?;
    if paths.len() < 2 {
        return Err(AppError::invalid(format!(
            "{}: a video needs at least two frames, found {}",
            dir.display(),
            paths.len()
        )));
    }
    let mut frames = Vec::with_capacity(paths.len());
    for p in &paths {
        let f = load_frame(p)?;
        let f = match frames.first() {
            Some(first) => {
                let first: &GrayImage = first;
                f.resized(first.width(), first.height())?
            }
            None => f,
        };
        frames.push(f);
    }
    Ok(frames)
}

/// Writes a frame as 8-bit grayscale; used to build fixtures.
pub fn save_frame(path: &Path, img: &GrayImage) -> AppResult<()> {
    let bytes = img
        .data()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    let buf = image::GrayImage::from_raw(img.width() as u32, img.height() as u32, bytes)
        .ok_or_else(|| AppError::invalid("frame buffer size mismatch"))?;
    buf.save(path).map_err(|source| AppError::Image {
        path: path.to_path_buf(),
        source,
    })
}
