//! `relu(main(x) + skip(x))`, with an identity skip when none is given.

use rand_chacha::ChaCha8Rng;

use crate::error::{NnError, Result};
use crate::layer::{missing_cache, Layer, Mode, Sequential};
use crate::param::Param;
use crate::tensor::Batch;

pub struct Residual {
    pub main: Sequential,
    pub skip: Option<Sequential>,
    mask: Option<Vec<bool>>,
}

impl Residual {
    pub fn new(main: Sequential, skip: Option<Sequential>) -> Self {
        Self { main, skip, mask: None }
    }

    fn combine(&self, a: Batch, b: &Batch) -> Result<Batch> {
        if !a.same_shape(b) {
            return Err(NnError::Shape(format!(
                "residual branches disagree: main {:?}, skip {:?}",
                a.shape(),
                b.shape()
            )));
        }
        let mut out = a;
        for (v, s) in out.data.iter_mut().zip(&b.data) {
            *v += s;
        }
        Ok(out)
    }
}

impl Layer for Residual {
    fn describe(&self) -> String {
        match &self.skip {
            Some(s) => format!("res{{{}|{}}}", self.main.describe(), s.describe()),
            None => format!("res{{{}}}", self.main.describe()),
        }
    }

    fn output_shape(&self, channels: usize, length: usize) -> Result<(usize, usize)> {
        let main = self.main.output_shape(channels, length)?;
        let skip = match &self.skip {
            Some(s) => s.output_shape(channels, length)?,
            None => (channels, length),
        };
        if main != skip {
            return Err(NnError::Shape(format!("residual branches disagree: main {main:?}, skip {skip:?}")));
        }
        Ok(main)
    }

    fn forward(&mut self, x: &Batch, mode: Mode, rng: &mut ChaCha8Rng) -> Result<Batch> {
        let m = self.main.forward(x, mode, rng)?;
        let mut z = match &mut self.skip {
            Some(s) => {
                let sk = s.forward(x, mode, rng)?;
                self.combine(m, &sk)?
            }
            None => self.combine(m, x)?,
        };
        self.mask = mode.is_train().then(|| z.data.iter().map(|&v| v > 0.0).collect());
        z.data.iter_mut().for_each(|v| *v = v.max(0.0));
        Ok(z)
    }

    fn infer(&self, x: &Batch) -> Result<Batch> {
        let m = self.main.infer(x)?;
        let mut z = match &self.skip {
            Some(s) => self.combine(m, &s.infer(x)?)?,
            None => self.combine(m, x)?,
        };
        z.data.iter_mut().for_each(|v| *v = v.max(0.0));
        Ok(z)
    }

    fn backward(&mut self, dy: &Batch) -> Result<Batch> {
        let mask = self.mask.as_ref().ok_or_else(|| missing_cache("residual"))?;
        if mask.len() != dy.data.len() {
            return Err(NnError::Shape("residual upstream gradient has the wrong size".into()));
        }
        let dz = Batch {
            data: dy.data.iter().zip(mask).map(|(&g, &k)| if k { g } else { 0.0 }).collect(),
            ..*dy
        };
        let dm = self.main.backward(&dz)?;
        let ds = match &mut self.skip {
            Some(s) => s.backward(&dz)?,
            None => dz,
        };
        self.combine(dm, &ds)
    }

    fn params(&self) -> Vec<&Param> {
        let mut p = self.main.params();
        if let Some(s) = &self.skip {
            p.extend(s.params());
        }
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut p = self.main.params_mut();
        if let Some(s) = &mut self.skip {
            p.extend(s.params_mut());
        }
        p
    }

    fn buffers(&self) -> Vec<(String, &Vec<f64>)> {
        let mut b = self.main.buffers();
        if let Some(s) = &self.skip {
            b.extend(s.buffers());
        }
        b
    }

    fn buffers_mut(&mut self) -> Vec<(String, &mut Vec<f64>)> {
        let mut b = self.main.buffers_mut();
        if let Some(s) = &mut self.skip {
            b.extend(s.buffers_mut());
        }
        b
    }

    fn pattern(&self, out: &mut Vec<u32>) {
        self.main.pattern(out);
        if let Some(s) = &self.skip {
            s.pattern(out);
        }
        if let Some(m) = &self.mask {
            out.extend(m.iter().map(|&b| b as u32));
        }
    }
}
