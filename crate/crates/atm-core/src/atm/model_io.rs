//! Binary model container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! offset 0   magic   4 bytes  "ATMM"
//!        4   version u32      currently 1
//!        8   K, V, A u32 each
//!       20   alpha, eta            f64 each
//!       36   iterations, burn_in,
//!            thinning, seed        u64 each
//!       68   terms    V × (u32 length + UTF-8 bytes)
//!            authors  A × (u32 length + UTF-8 bytes)
//!            theta    A·K × f64, row-major
//!            beta     K·V × f64, row-major
//! ```
//!
//! Floats round-trip by bit pattern, so save → load → save is
//! byte-identical. Writes go to a temp file in the target directory and
//! are renamed into place.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mat::Matrix;

use super::{AtmHyperParams, AtmModel};

pub const MODEL_MAGIC: &[u8; 4] = b"ATMM";
pub const MODEL_VERSION: u32 = 1;

fn push_str(buf: &mut Vec<u8>, s: &str) {
    buf.extend_from_slice(&(s.len() as u32).to_le_bytes());
    buf.extend_from_slice(s.as_bytes());
}

/// Serializes the model to its binary layout.
pub fn model_to_bytes(model: &AtmModel) -> Vec<u8> {
    let k = model.n_topics();
    let v = model.n_terms();
    let a = model.n_authors();
    let mut buf = Vec::with_capacity(68 + 8 * (a * k + k * v));
    buf.extend_from_slice(MODEL_MAGIC);
    buf.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    buf.extend_from_slice(&(k as u32).to_le_bytes());
    buf.extend_from_slice(&(v as u32).to_le_bytes());
    buf.extend_from_slice(&(a as u32).to_le_bytes());
    buf.extend_from_slice(&model.hyper.alpha.to_le_bytes());
    buf.extend_from_slice(&model.hyper.eta.to_le_bytes());
    buf.extend_from_slice(&(model.hyper.iterations as u64).to_le_bytes());
    buf.extend_from_slice(&(model.hyper.burn_in as u64).to_le_bytes());
    buf.extend_from_slice(&(model.hyper.thinning as u64).to_le_bytes());
    buf.extend_from_slice(&model.hyper.seed.to_le_bytes());
    for term in &model.terms {
        push_str(&mut buf, term);
    }
    for author in &model.authors {
        push_str(&mut buf, author);
    }
    for x in model.theta.data() {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    for x in model.beta.data() {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    buf
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::ModelFormat {
                reason: format!("truncated at offset {}", self.pos),
            });
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| Error::ModelFormat {
            reason: format!("invalid UTF-8 string at offset {}", self.pos - len),
        })
    }
}

/// Parses a model from its binary layout, validating the header and the
/// row-stochasticity of θ and β (1e-9).
pub fn model_from_bytes(buf: &[u8]) -> Result<AtmModel> {
    let mut c = Cursor { buf, pos: 0 };
    if c.take(4)? != MODEL_MAGIC {
        return Err(Error::ModelFormat {
            reason: "bad magic bytes".into(),
        });
    }
    let version = c.u32()?;
    if version != MODEL_VERSION {
        return Err(Error::ModelFormat {
            reason: format!("unsupported version {version}"),
        });
    }
    let k = c.u32()? as usize;
    let v = c.u32()? as usize;
    let a = c.u32()? as usize;
    let alpha = c.f64()?;
    let eta = c.f64()?;
    let iterations = c.u64()? as usize;
    let burn_in = c.u64()? as usize;
    let thinning = c.u64()? as usize;
    let seed = c.u64()?;

    let terms = (0..v).map(|_| c.string()).collect::<Result<Vec<_>>>()?;
    let authors = (0..a).map(|_| c.string()).collect::<Result<Vec<_>>>()?;
    let theta_data = (0..a * k).map(|_| c.f64()).collect::<Result<Vec<_>>>()?;
    let beta_data = (0..k * v).map(|_| c.f64()).collect::<Result<Vec<_>>>()?;
    if c.pos != buf.len() {
        return Err(Error::ModelFormat {
            reason: format!("{} trailing bytes", buf.len() - c.pos),
        });
    }

    let model = AtmModel {
        theta: Matrix::from_vec(a, k, theta_data),
        beta: Matrix::from_vec(k, v, beta_data),
        hyper: AtmHyperParams {
            k,
            alpha,
            eta,
            iterations,
            burn_in,
            thinning,
            seed,
        },
        terms,
        authors,
    };
    for (name, m) in [("theta", &model.theta), ("beta", &model.beta)] {
        for i in 0..m.rows() {
            let sum: f64 = m.row(i).iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::ModelFormat {
                    reason: format!("{name} row {i} sums to {sum}"),
                });
            }
        }
    }
    Ok(model)
}

/// Writes the model atomically (temp file + rename).
pub fn save_model(model: &AtmModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = model_to_bytes(model);
    let tmp = path.with_extension("tmp");
    {
        let mut f =
            fs::File::create(&tmp).map_err(|e| Error::io(tmp.display().to_string(), e))?;
        f.write_all(&bytes)
            .map_err(|e| Error::io(tmp.display().to_string(), e))?;
        f.sync_all()
            .map_err(|e| Error::io(tmp.display().to_string(), e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<AtmModel> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    model_from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_model() -> AtmModel {
        AtmModel {
            theta: Matrix::from_rows(&[vec![0.25, 0.75], vec![0.6, 0.4]]),
            beta: Matrix::from_rows(&[
                vec![0.1, 0.2, 0.7],
                vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            ]),
            hyper: AtmHyperParams::new(2, 42),
            terms: vec!["alpha".into(), "beta".into(), "gamma".into()],
            authors: vec!["Ann Example".into(), "Bo Sample".into()],
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let model = sample_model();
        let bytes = model_to_bytes(&model);
        let loaded = model_from_bytes(&bytes).unwrap();
        assert_eq!(loaded, model);
        assert_eq!(model_to_bytes(&loaded), bytes);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.atm");
        let model = sample_model();
        save_model(&model, &path).unwrap();
        let first = std::fs::read(&path).unwrap();
        let loaded = load_model(&path).unwrap();
        save_model(&loaded, &path).unwrap();
        let second = std::fs::read(&path).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn corrupt_inputs_are_rejected() {
        let model = sample_model();
        let mut bytes = model_to_bytes(&model);

        let err = model_from_bytes(&bytes[..10]).unwrap_err();
        assert!(matches!(err, Error::ModelFormat { .. }));

        bytes[0] = b'X';
        assert!(matches!(
            model_from_bytes(&bytes),
            Err(Error::ModelFormat { .. })
        ));

        let mut bad_version = model_to_bytes(&model);
        bad_version[4] = 9;
        assert!(matches!(
            model_from_bytes(&bad_version),
            Err(Error::ModelFormat { .. })
        ));

        // Break a theta row's normalization.
        let mut bad_theta = model_to_bytes(&model);
        let theta_offset = bad_theta.len() - 8 * (2 * 2 + 2 * 3);
        bad_theta[theta_offset..theta_offset + 8].copy_from_slice(&0.9f64.to_le_bytes());
        assert!(matches!(
            model_from_bytes(&bad_theta),
            Err(Error::ModelFormat { .. })
        ));
    }
}
