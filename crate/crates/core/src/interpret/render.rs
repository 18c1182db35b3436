use std::path::Path;

use image::{Rgb, RgbImage};

use super::cam::CamMap;
use crate::data::to_intensity;
use crate::error::{Error, Result};
use crate::numerics::Tensor3;

const HEAT_COLOR: [f64; 3] = [255.0, 0.0, 0.0];
const CONTOUR_COLOR: [u8; 3] = [255, 255, 0];

fn is_edge(cam: &CamMap, y: usize, x: usize) -> bool {
    let (h, w) = cam.highlight.shape();
    let on = |yy: usize, xx: usize| cam.highlight.get(yy, xx) > 0.5;
    if !on(y, x) {
        return false;
    }
    y == 0 || x == 0 || y + 1 == h || x + 1 == w
        || !on(y - 1, x)
        || !on(y + 1, x)
        || !on(y, x - 1)
        || !on(y, x + 1)
}

/// Grayscale image with the heat blended in red (50% at full heat) and the
/// highlight boundary drawn in yellow.
pub fn render_heatmap(cam: &CamMap, img: &Tensor3) -> Result<RgbImage> {
    let (h, w) = (img.height(), img.width());
    if cam.heat.shape() != (h, w) {
        return Err(Error::Shape(format!(
            "heat {:?} does not match image {h}x{w}",
            cam.heat.shape()
        )));
    }
    let gray = to_intensity(img).channel_mean();
    let mut out = RgbImage::new(w as u32, h as u32);
    for y in 0..h {
        for x in 0..w {
            let pixel = if is_edge(cam, y, x) {
                CONTOUR_COLOR
            } else {
                let g = gray.get(y, x).clamp(0.0, 1.0) * 255.0;
                let a = 0.5 * cam.heat.get(y, x).clamp(0.0, 1.0);
                HEAT_COLOR.map(|c| ((1.0 - a) * g + a * c).round() as u8)
            };
            out.put_pixel(x as u32, y as u32, Rgb(pixel));
        }
    }
    Ok(out)
}

pub fn export_heatmap(cam: &CamMap, img: &Tensor3, path: &Path) -> Result<()> {
    render_heatmap(cam, img)?.save(path)?;
    Ok(())
}
