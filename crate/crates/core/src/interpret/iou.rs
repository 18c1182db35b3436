use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// `|a ∩ b| / |a ∪ b|` over `{0,1}` masks (entries > 0.5 count as set).
/// Two empty masks agree perfectly.
pub fn iou(a: &Matrix, b: &Matrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!(
            "masks differ in size: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.data().iter().zip(b.data()) {
        let (x, y) = (x > 0.5, y > 0.5);
        inter += (x && y) as usize;
        union += (x || y) as usize;
    }
    Ok(if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_cases() {
        let a = Matrix::new(2, 2, vec![1.0, 1.0, 0.0, 0.0]).unwrap();
        let b = Matrix::new(2, 2, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        let c = Matrix::new(2, 2, vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(iou(&a, &a).unwrap(), 1.0);
        assert_eq!(iou(&a, &b).unwrap(), 0.0);
        assert_eq!(iou(&a, &c).unwrap(), 1.0 / 3.0);
        assert_eq!(iou(&Matrix::zeros(2, 2), &Matrix::zeros(2, 2)).unwrap(), 1.0);
        assert!(iou(&a, &Matrix::zeros(3, 2)).is_err());
    }
}
