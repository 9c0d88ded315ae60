use super::{Element, Tensor};
use crate::error::{Error, Result};

/// Adam optimizer state with bias-corrected moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<Tensor<T>>,
    v: Vec<Tensor<T>>,
}

impl<T: Element> AdamState<T> {
    pub fn new(params: &[Tensor<T>]) -> Self {
        Self::with_lr(params, 0.001)
    }

    pub fn with_lr(params: &[Tensor<T>], lr: f64) -> Self {
        AdamState {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
            v: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut [Tensor<T>], grads: &[Tensor<T>]) -> Result<()> {
        if params.len() != self.m.len()
            || grads.len() != params.len()
            || params.iter().zip(grads).zip(&self.m).any(|((p, g), m)| p.shape() != g.shape() || p.shape() != m.shape())
        {
            return Err(Error::ShapeMismatch("Adam parameters, gradients and state disagree".into()));
        }
        self.t += 1;
        let c = |v: f64| T::from(v).expect("finite");
        let (b1, b2) = (c(self.beta1), c(self.beta2));
        let (one, eps) = (T::one(), c(self.eps));
        let corr1 = c(1.0 - self.beta1.powi(self.t as i32));
        let corr2 = c(1.0 - self.beta2.powi(self.t as i32));
        let lr = c(self.lr);
        for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            for (((pi, gi), mi), vi) in p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.data_mut().iter_mut())
                .zip(v.data_mut().iter_mut())
            {
                *mi = b1 * *mi + (one - b1) * *gi;
                *vi = b2 * *vi + (one - b2) * *gi * *gi;
                let m_hat = *mi / corr1;
                let v_hat = *vi / corr2;
                *pi = *pi - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> Vec<Tensor<f64>> {
        vec![Tensor::from_vec(&[1], vec![v]).unwrap()]
    }

    #[test]
    fn zero_gradient_is_noop() {
        let mut p = scalar(3.0);
        let mut s = AdamState::new(&p);
        s.step(&mut p, &scalar(0.0)).unwrap();
        assert_eq!(p[0].data(), [3.0]);
        assert_eq!(s.steps(), 1);
    }

    #[test]
    fn first_step_has_magnitude_lr() {
        for g in [0.3, -7.0, 1e-3] {
            let mut p = scalar(1.0);
            let mut s = AdamState::new(&p);
            s.step(&mut p, &scalar(g)).unwrap();
            // m_hat = g, v_hat = g^2
            let want = 1.0 - 0.001 * g / (g.abs() + 1e-8);
            assert!((p[0].data()[0] - want).abs() < 1e-15);
        }
    }

    #[test]
    fn minimizes_square() {
        let mut p = scalar(5.0);
        let mut s = AdamState::with_lr(&p, 0.01);
        for _ in 0..2000 {
            let x = p[0].data()[0];
            s.step(&mut p, &scalar(2.0 * x)).unwrap();
        }
        assert!(p[0].data()[0].abs() < 0.01, "{}", p[0].data()[0]);
    }

    #[test]
    fn deterministic_and_shape_checked() {
        let p0 = scalar(2.0);
        let run = || {
            let mut p = p0.clone();
            let mut s = AdamState::new(&p);
            s.step(&mut p, &scalar(0.7)).unwrap();
            (p, s)
        };
        assert_eq!(run(), run());
        let mut p = scalar(1.0);
        let mut s = AdamState::new(&p);
        assert!(s.step(&mut p, &[Tensor::zeros(&[2])]).is_err());
    }
}
