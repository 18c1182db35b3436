use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, GrayImage};

use super::{Dataset, LabeledSample, Split};
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Tensor3};

const MASK_SUFFIX: &str = "_mask";

fn is_png(p: &Path) -> bool {
    p.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

fn read_image(path: &Path) -> Result<Tensor3> {
    let img = image::open(path).map_err(|e| Error::ingestion(path, e.to_string()))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let tensor = match img {
        DynamicImage::ImageLuma8(g) => {
            Tensor3::new(h, w, 1, g.pixels().map(|p| p.0[0] as f64 / 255.0).collect())?
        }
        other => {
            let rgb = other.to_rgb8();
            let mut t = Tensor3::zeros(h, w, 3);
            for (x, y, p) in rgb.enumerate_pixels() {
                for c in 0..3 {
                    t.set(y as usize, x as usize, c, p.0[c] as f64 / 255.0);
                }
            }
            t
        }
    };
    Ok(tensor)
}

fn read_mask(path: &Path) -> Result<Matrix> {
    let img = image::open(path).map_err(|e| Error::ingestion(path, e.to_string()))?;
    let g = img.to_luma8();
    Matrix::new(
        g.height() as usize,
        g.width() as usize,
        g.pixels().map(|p| if p.0[0] > 127 { 1.0 } else { 0.0 }).collect(),
    )
}

fn sorted_pngs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::ingestion(dir, e.to_string()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_png(p))
        .collect();
    files.sort();
    Ok(files)
}

/// Reads `root/<class>/*.png` with optional `root/<class>_mask/<stem>.png`.
/// Classes are indexed in sorted name order.
pub fn load_image_folder(root: &Path) -> Result<Dataset> {
    let mut classes: Vec<String> = fs::read_dir(root)
        .map_err(|e| Error::ingestion(root, e.to_string()))?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .filter_map(|e| e.file_name().to_str().map(str::to_owned))
        .filter(|n| !n.ends_with(MASK_SUFFIX))
        .collect();
    classes.sort();
    if classes.is_empty() {
        return Err(Error::ingestion(root, "no class directories found"));
    }

    let mut samples = Vec::new();
    for (label, class) in classes.iter().enumerate() {
        let mask_dir = root.join(format!("{class}{MASK_SUFFIX}"));
        for file in sorted_pngs(&root.join(class))? {
            let image = read_image(&file)?;
            let mask_path = file
                .file_name()
                .map(|name| mask_dir.join(name))
                .filter(|p| p.is_file());
            let mask = match mask_path {
                Some(p) => {
                    let m = read_mask(&p)?;
                    if m.shape() != (image.height(), image.width()) {
                        return Err(Error::ingestion(
                            &p,
                            format!(
                                "mask is {}x{} but image {} is {}x{}",
                                m.rows(),
                                m.cols(),
                                file.display(),
                                image.height(),
                                image.width()
                            ),
                        ));
                    }
                    Some(m)
                }
                None => None,
            };
            samples.push(LabeledSample { image, label, mask });
        }
    }
    if samples.is_empty() {
        return Err(Error::ingestion(root, "no PNG images found"));
    }
    Dataset::new(samples, classes, Split::All).map_err(|e| Error::ingestion(root, e.to_string()))
}

fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Writes a `[0, 1]` dataset in the layout read by [`load_image_folder`].
pub fn save_image_folder(ds: &Dataset, root: &Path) -> Result<()> {
    for class in ds.class_names() {
        fs::create_dir_all(root.join(class))?;
    }
    let mut per_class = vec![0usize; ds.num_classes()];
    for s in ds.samples() {
        let class = &ds.class_names()[s.label];
        let name = format!("{:05}.png", per_class[s.label]);
        per_class[s.label] += 1;
        let (h, w) = (s.image.height() as u32, s.image.width() as u32);
        let path = root.join(class).join(&name);
        if s.image.channels() == 1 {
            let buf: Vec<u8> = s.image.data().iter().map(|&v| to_u8(v)).collect();
            GrayImage::from_raw(w, h, buf)
                .expect("buffer sized to image")
                .save(&path)?;
        } else {
            let mut rgb = image::RgbImage::new(w, h);
            for (x, y, p) in rgb.enumerate_pixels_mut() {
                for c in 0..3 {
                    let ch = c.min(s.image.channels() - 1);
                    p.0[c] = to_u8(s.image.get(y as usize, x as usize, ch));
                }
            }
            rgb.save(&path)?;
        }
        if let Some(mask) = &s.mask {
            let dir = root.join(format!("{class}{MASK_SUFFIX}"));
            fs::create_dir_all(&dir)?;
            let buf: Vec<u8> = mask.data().iter().map(|&v| if v > 0.5 { 255 } else { 0 }).collect();
            GrayImage::from_raw(w, h, buf)
                .expect("buffer sized to mask")
                .save(dir.join(&name))?;
        }
    }
    Ok(())
}
