use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::error::{Error, Result};

/// Height × width × channels stack, stored channel-planar
/// (`data[c * h * w + y * w + x]`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tensor3 {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width * channels {
            return Err(Error::Dimension(format!(
                "{} values cannot fill a {height}x{width}x{channels} tensor",
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        Self {
            height,
            width,
            channels,
            data: vec![0.0; height * width * channels],
        }
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f64) -> Self {
        Self {
            height,
            width,
            channels,
            data: vec![value; height * width * channels],
        }
    }

    pub fn from_matrix(m: &Matrix) -> Self {
        Self {
            height: m.rows(),
            width: m.cols(),
            channels: 1,
            data: m.data().to_vec(),
        }
    }

    /// Stacks equally sized planes as channels.
    pub fn from_channels(planes: &[Matrix]) -> Result<Self> {
        let first = planes
            .first()
            .ok_or_else(|| Error::Dimension("cannot stack zero channels".into()))?;
        let (h, w) = first.shape();
        let mut data = Vec::with_capacity(h * w * planes.len());
        for p in planes {
            if p.shape() != (h, w) {
                return Err(Error::Dimension(format!(
                    "channel of shape {:?} does not match {:?}",
                    p.shape(),
                    (h, w)
                )));
            }
            data.extend_from_slice(p.data());
        }
        Ok(Self {
            height: h,
            width: w,
            channels: planes.len(),
            data,
        })
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, c: usize, v: f64) {
        self.data[(c * self.height + y) * self.width + x] = v;
    }

    #[inline]
    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn plane_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.height * self.width;
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn channel(&self, c: usize) -> Matrix {
        Matrix::new(self.height, self.width, self.plane(c).to_vec())
            .expect("plane length matches")
    }

    /// Sum of all channels, accumulated in channel order starting from zero.
    pub fn channel_sum(&self) -> Matrix {
        let mut acc = vec![0.0; self.height * self.width];
        for c in 0..self.channels {
            for (a, &v) in acc.iter_mut().zip(self.plane(c)) {
                *a += v;
            }
        }
        Matrix::new(self.height, self.width, acc).expect("plane length matches")
    }

    /// Per-pixel mean over channels.
    pub fn channel_mean(&self) -> Matrix {
        let n = self.channels.max(1) as f64;
        self.channel_sum().map(|v| v / n)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor3 {
        Tensor3 {
            height: self.height,
            width: self.width,
            channels: self.channels,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn min_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}
