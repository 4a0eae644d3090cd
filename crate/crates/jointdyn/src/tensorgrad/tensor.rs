use crate::error::{Error, Result};
use crate::util::Rng;
use rand::Rng as _;

/// Dense n-dimensional array of 64-bit floats in row-major order, with an
/// optional gradient buffer of the same shape. The unit of all
/// differentiable computation in this crate.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    values: Vec<f64>,
    grad: Option<Vec<f64>>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            values: vec![0.0; n],
            grad: None,
        }
    }

    pub fn from_values(shape: &[usize], values: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != values.len() {
            return Err(Error::shape(
                "from_values",
                format!("shape {:?} wants {} values, got {}", shape, n, values.len()),
            ));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            values,
            grad: None,
        })
    }

    pub fn scalar(x: f64) -> Self {
        Tensor {
            shape: vec![1],
            values: vec![x],
            grad: None,
        }
    }

    /// Sample every entry from Uniform[lo, hi).
    pub fn uniform(shape: &[usize], lo: f64, hi: f64, rng: &mut Rng) -> Self {
        let n: usize = shape.iter().product();
        let values = (0..n).map(|_| rng.gen_range(lo..hi)).collect();
        Tensor {
            shape: shape.to_vec(),
            values,
            grad: None,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Gradient buffer, if tracking was enabled.
    pub fn grad(&self) -> Option<&[f64]> {
        self.grad.as_deref()
    }

    /// Allocate (or reset) the gradient buffer.
    pub fn enable_grad(&mut self) {
        self.grad = Some(vec![0.0; self.values.len()]);
    }

    pub fn clear_grad(&mut self) {
        self.grad = None;
    }

    pub(crate) fn grad_mut(&mut self) -> &mut [f64] {
        if self.grad.is_none() {
            self.enable_grad();
        }
        self.grad.as_deref_mut().unwrap()
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Reinterpret as a new shape with the same element count.
    pub fn reshaped(mut self, shape: &[usize]) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != self.values.len() {
            return Err(Error::shape(
                "reshape",
                format!("cannot view {:?} as {:?}", self.shape, shape),
            ));
        }
        self.shape = shape.to_vec();
        if let Some(g) = &self.grad {
            debug_assert_eq!(g.len(), n);
        }
        Ok(self)
    }
}

/// One-hot vector of the given width.
pub fn one_hot(index: usize, width: usize) -> Result<Tensor> {
    if index >= width {
        return Err(Error::Data(format!(
            "one-hot index {index} out of range for width {width}"
        )));
    }
    let mut values = vec![0.0; width];
    values[index] = 1.0;
    Tensor::from_values(&[width], values)
}

/// Index of the 1.0 entry, if the tensor is a valid one-hot vector.
pub fn one_hot_index(t: &Tensor) -> Option<usize> {
    let mut hot = None;
    for (i, &v) in t.values().iter().enumerate() {
        if v == 1.0 {
            if hot.is_some() {
                return None;
            }
            hot = Some(i);
        } else if v != 0.0 {
            return None;
        }
    }
    hot
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::rng_from_seed;

    #[test]
    fn shape_and_len_agree() {
        let t = Tensor::zeros(&[2, 3, 4]);
        assert_eq!(t.len(), 24);
        assert_eq!(t.shape(), &[2, 3, 4]);
    }

    #[test]
    fn from_values_rejects_bad_count() {
        assert!(Tensor::from_values(&[2, 2], vec![1.0; 3]).is_err());
    }

    #[test]
    fn uniform_respects_bounds_and_seed() {
        let mut rng = rng_from_seed(5);
        let a = Tensor::uniform(&[100], -0.1, 0.1, &mut rng);
        assert!(a.values().iter().all(|&v| (-0.1..0.1).contains(&v)));
        let mut rng2 = rng_from_seed(5);
        let b = Tensor::uniform(&[100], -0.1, 0.1, &mut rng2);
        assert_eq!(a, b);
    }

    #[test]
    fn one_hot_round_trip() {
        for w in 2..6 {
            for i in 0..w {
                let t = one_hot(i, w).unwrap();
                assert_eq!(one_hot_index(&t), Some(i));
            }
        }
        assert!(one_hot(4, 4).is_err());
        assert_eq!(one_hot_index(&Tensor::zeros(&[3])), None);
    }
}
