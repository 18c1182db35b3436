//! Stand-in furnace scenes: a dark noisy frame with one class-specific
//! bright region whose pixels form the annotation mask.

use super::{Dataset, LabeledSample, Split};
use crate::error::{Error, Result};
use crate::numerics::{Matrix, RngStream, Tensor3};

pub const SYNTHETIC_CLASSES: [&str; 4] = [
    "0_normal",
    "1_underburn",
    "2_overheating",
    "3_abnormal_exhaust",
];

const MIN_SIZE: usize = 32;
const BACKGROUND_NOISE: f64 = 0.03;
const REGION_NOISE: f64 = 0.03;

enum Region {
    Disc { cy: f64, cx: f64, radius: f64 },
    Rect { top: f64, left: f64, height: f64, width: f64 },
}

impl Region {
    fn contains(&self, y: f64, x: f64) -> bool {
        match *self {
            Region::Disc { cy, cx, radius } => (y - cy).powi(2) + (x - cx).powi(2) <= radius * radius,
            Region::Rect {
                top,
                left,
                height,
                width,
            } => y >= top && y < top + height && x >= left && x < left + width,
        }
    }
}

fn u(rng: &mut RngStream, lo: f64, hi: f64) -> f64 {
    rng.uniform(lo, hi).expect("static ranges are non-empty")
}

/// Region geometry in pixel units plus its base intensity.
fn draw_region(class: usize, size: f64, rng: &mut RngStream) -> (Region, f64) {
    let c = size / 2.0;
    match class {
        // small blob at the furnace mouth
        0 => (
            Region::Disc {
                cy: c + u(rng, -0.05, 0.05) * size,
                cx: c + u(rng, -0.05, 0.05) * size,
                radius: u(rng, 0.09, 0.12) * size,
            },
            u(rng, 0.6, 0.7),
        ),
        // dull glowing patch on the left or right wall
        1 => {
            let width = u(rng, 0.12, 0.18) * size;
            let height = u(rng, 0.3, 0.45) * size;
            let margin = u(rng, 0.03, 0.08) * size;
            let left = if rng.next_f64() < 0.5 {
                margin
            } else {
                size - margin - width
            };
            let top = c - height / 2.0 + u(rng, -0.1, 0.1) * size;
            (
                Region::Rect {
                    top,
                    left,
                    height,
                    width,
                },
                u(rng, 0.45, 0.55),
            )
        }
        // large, saturated centred blob
        2 => (
            Region::Disc {
                cy: c + u(rng, -0.04, 0.04) * size,
                cx: c + u(rng, -0.04, 0.04) * size,
                radius: u(rng, 0.2, 0.25) * size,
            },
            u(rng, 0.9, 1.0),
        ),
        // narrow vertical streak below the centre
        _ => {
            let width = u(rng, 0.07, 0.1) * size;
            let height = u(rng, 0.3, 0.4) * size;
            (
                Region::Rect {
                    top: c + u(rng, 0.02, 0.08) * size,
                    left: c - width / 2.0 + u(rng, -0.05, 0.05) * size,
                    height,
                    width,
                },
                u(rng, 0.75, 0.85),
            )
        }
    }
}

fn render(class: usize, size: usize, rng: &mut RngStream) -> LabeledSample {
    let (region, level) = draw_region(class, size as f64, rng);
    let background = u(rng, 0.08, 0.15);
    let mut img = Tensor3::zeros(size, size, 1);
    let mut mask = Matrix::zeros(size, size);
    for y in 0..size {
        for x in 0..size {
            let inside = region.contains(y as f64 + 0.5, x as f64 + 0.5);
            let v = if inside {
                mask.set(y, x, 1.0);
                rng.normal(level, REGION_NOISE)
            } else {
                rng.normal(background, BACKGROUND_NOISE)
            };
            img.set(y, x, 0, v.clamp(0.0, 1.0));
        }
    }
    LabeledSample {
        image: img,
        label: class,
        mask: Some(mask),
    }
}

/// `n_per_class` grayscale `size × size` scenes for each of the four
/// working conditions, ordered by class, every one with a mask.
pub fn generate_synthetic(n_per_class: usize, size: usize, rng: &mut RngStream) -> Result<Dataset> {
    if size < MIN_SIZE {
        return Err(Error::Argument(format!(
            "synthetic images must be at least {MIN_SIZE}px, got {size}"
        )));
    }
    if n_per_class == 0 {
        return Err(Error::Argument("n_per_class must be positive".into()));
    }
    let mut samples = Vec::with_capacity(4 * n_per_class);
    for class in 0..SYNTHETIC_CLASSES.len() {
        for _ in 0..n_per_class {
            samples.push(render(class, size, rng));
        }
    }
    Dataset::new(
        samples,
        SYNTHETIC_CLASSES.iter().map(|s| s.to_string()).collect(),
        Split::All,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_masks() {
        let ds = generate_synthetic(5, 32, &mut RngStream::new(0)).unwrap();
        assert_eq!(ds.len(), 20);
        assert_eq!(ds.class_counts(), vec![5; 4]);
        assert!(ds.samples().iter().all(|s| s.mask.is_some()));
    }

    #[test]
    fn deterministic() {
        let a = generate_synthetic(3, 40, &mut RngStream::new(8)).unwrap();
        let b = generate_synthetic(3, 40, &mut RngStream::new(8)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn region_brighter_than_background() {
        let ds = generate_synthetic(10, 64, &mut RngStream::new(2)).unwrap();
        for s in ds.samples() {
            let mask = s.mask.as_ref().unwrap();
            let (mut inside, mut n_in, mut outside, mut n_out) = (0.0, 0, 0.0, 0);
            for (v, m) in s.image.data().iter().zip(mask.data()) {
                if *m > 0.5 {
                    inside += v;
                    n_in += 1;
                } else {
                    outside += v;
                    n_out += 1;
                }
            }
            assert!(n_in > 0);
            assert!(inside / n_in as f64 > outside / n_out as f64);
        }
    }

    #[test]
    fn too_small() {
        assert!(generate_synthetic(1, 16, &mut RngStream::new(0)).is_err());
    }
}
