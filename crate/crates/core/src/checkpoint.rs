//! Binary network checkpoints.
//!
//! Layout, all little-endian:
//!
//! ```text
//! "PBNN"  u32 version  u64 seed  f64 sigma0  u32 n_dims  u64 dims[n_dims]
//! then per layer: f64 μ_w[out*in]  f64 ρ_w[out*in]  f64 μ_b[out]  f64 ρ_b[out]
//! ```
//!
//! Values are stored as raw IEEE-754 bits, so save → load is bit-exact.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{GaussianLayerParams, PriorRef, ProbNetwork};
use crate::numeric::Matrix;

const MAGIC: &[u8; 4] = b"PBNN";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkCheckpoint {
    pub network: ProbNetwork,
    pub sigma0: f64,
    pub seed: u64,
}

impl NetworkCheckpoint {
    pub fn new(network: ProbNetwork, sigma0: f64, seed: u64) -> Self {
        Self { network, sigma0, seed }
    }

    pub fn from_prior(prior: &PriorRef, seed: u64) -> Self {
        Self::new(prior.to_network(), prior.sigma0(), seed)
    }

    pub fn to_prior(&self) -> PriorRef {
        PriorRef::from_network(&self.network, self.sigma0)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let dims = self.network.dims();
        let mut out = Vec::with_capacity(32 + 16 * self.network.num_coords());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&self.sigma0.to_le_bytes());
        out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
        for d in &dims {
            out.extend_from_slice(&(*d as u64).to_le_bytes());
        }
        for l in self.network.layers() {
            for v in l
                .mu_w
                .data()
                .iter()
                .chain(l.rho_w.data())
                .chain(&l.mu_b)
                .chain(&l.rho_b)
            {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Format("not a network checkpoint (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }
        let seed = r.u64()?;
        let sigma0 = r.f64()?;
        let n_dims = r.u32()? as usize;
        if n_dims < 2 {
            return Err(Error::Format(format!("checkpoint lists {n_dims} widths")));
        }
        let dims = (0..n_dims)
            .map(|_| r.u64().map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        let mut layers = Vec::with_capacity(n_dims - 1);
        for w in dims.windows(2) {
            let (n_in, n_out) = (w[0], w[1]);
            let mu_w = Matrix::from_vec(n_out, n_in, r.f64s(n_in * n_out)?)?;
            let rho_w = Matrix::from_vec(n_out, n_in, r.f64s(n_in * n_out)?)?;
            let mu_b = r.f64s(n_out)?;
            let rho_b = r.f64s(n_out)?;
            layers.push(GaussianLayerParams {
                mu_w,
                rho_w,
                mu_b,
                rho_b,
            });
        }
        if r.pos != bytes.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes after checkpoint",
                bytes.len() - r.pos
            )));
        }
        Ok(Self {
            network: ProbNetwork::from_layers(layers)?,
            sigma0,
            seed,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format("checkpoint is truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
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

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| Error::Format("size overflow".into()))?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}
