//! Binary network checkpoints.
//!
//! Little-endian layout, magic `SNNC`, version byte 1:
//!
//! ```text
//! "SNNC"  u8 version
//! u32 layer_count L
//! u64 layer_sizes[L+1]
//! f64 learning_rate, f64 momentum, u64 batch_size, u64 epochs
//! u64 init_seed, u8 degree_scaled_init
//! u8 has_dropout, then f64 rates[L] if set
//! per weight layer:
//!   u8 construction kind-id, u64 k, u8 has_seed, u64 seed
//!   u64 rows, u64 cols, u64 nnz
//!   u64 row_offsets[rows+1], u64 col_indices[nnz]
//!   f64 values[nnz], f64 bias[rows]
//! ```
//!
//! Weights and biases round-trip bit-exactly (raw f64 bits). Momentum
//! buffers are not checkpointed; loading yields zero velocities.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::topology::{ConstructionKind, ConstructionSpec};

use super::{Network, NetworkConfig, SparseLayer};

const MAGIC: [u8; 4] = *b"SNNC";
const VERSION: u8 = 1;

fn kind_id(kind: ConstructionKind) -> u8 {
    match kind {
        ConstructionKind::FullyConnected => 0,
        ConstructionKind::RandomEdge => 1,
        ConstructionKind::RandomRotating => 2,
        ConstructionKind::RandomDRegular => 3,
        ConstructionKind::RegularRotating => 4,
        ConstructionKind::LongShortRotating => 5,
        ConstructionKind::FibonacciRotating => 6,
    }
}

fn kind_from_id(id: u8, path: &str) -> Result<ConstructionKind> {
    Ok(match id {
        0 => ConstructionKind::FullyConnected,
        1 => ConstructionKind::RandomEdge,
        2 => ConstructionKind::RandomRotating,
        3 => ConstructionKind::RandomDRegular,
        4 => ConstructionKind::RegularRotating,
        5 => ConstructionKind::LongShortRotating,
        6 => ConstructionKind::FibonacciRotating,
        _ => {
            return Err(Error::Malformed {
                path: path.into(),
                message: format!("unknown construction id {id}"),
            })
        }
    })
}

struct Reader<'a, R: Read> {
    inner: &'a mut R,
    path: String,
}

impl<'a, R: Read> Reader<'a, R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner
            .read_exact(&mut buf)
            .map_err(|_| Error::Malformed {
                path: self.path.clone(),
                message: "truncated checkpoint".into(),
            })?;
        Ok(buf)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes::<1>()?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }

    fn usize(&mut self) -> Result<usize> {
        Ok(self.u64()? as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }

    fn f64_vec(&mut self, len: usize) -> Result<Vec<f64>> {
        (0..len).map(|_| self.f64()).collect()
    }

    fn usize_vec(&mut self, len: usize) -> Result<Vec<usize>> {
        (0..len).map(|_| self.usize()).collect()
    }
}

/// Write a checkpoint for `net` at `path`.
pub fn save_checkpoint<P: AsRef<Path>>(net: &Network, path: P) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    let cfg = net.config();
    let layer_count = net.layers().len();

    w.write_all(&MAGIC)?;
    w.write_all(&[VERSION])?;
    w.write_all(&(layer_count as u32).to_le_bytes())?;
    for &s in &cfg.layer_sizes {
        w.write_all(&(s as u64).to_le_bytes())?;
    }
    w.write_all(&cfg.learning_rate.to_le_bytes())?;
    w.write_all(&cfg.momentum.to_le_bytes())?;
    w.write_all(&(cfg.batch_size as u64).to_le_bytes())?;
    w.write_all(&(cfg.epochs as u64).to_le_bytes())?;
    w.write_all(&cfg.init_seed.to_le_bytes())?;
    w.write_all(&[cfg.degree_scaled_init as u8])?;
    match &cfg.dropout_rates {
        Some(rates) => {
            w.write_all(&[1])?;
            for r in rates {
                w.write_all(&r.to_le_bytes())?;
            }
        }
        None => w.write_all(&[0])?,
    }

    for (spec, layer) in cfg.topologies.iter().zip(net.layers()) {
        w.write_all(&[kind_id(spec.kind)])?;
        w.write_all(&(spec.k as u64).to_le_bytes())?;
        w.write_all(&[spec.seed.is_some() as u8])?;
        w.write_all(&spec.seed.unwrap_or(0).to_le_bytes())?;

        let m = &layer.weights;
        w.write_all(&(m.rows() as u64).to_le_bytes())?;
        w.write_all(&(m.cols() as u64).to_le_bytes())?;
        w.write_all(&(m.nnz() as u64).to_le_bytes())?;
        for &o in m.row_offsets() {
            w.write_all(&(o as u64).to_le_bytes())?;
        }
        for &c in m.col_indices() {
            w.write_all(&(c as u64).to_le_bytes())?;
        }
        for v in m.values() {
            w.write_all(&v.to_le_bytes())?;
        }
        for b in &layer.bias {
            w.write_all(&b.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Load a checkpoint written by [`save_checkpoint`]. Velocities come
/// back zeroed.
pub fn load_checkpoint<P: AsRef<Path>>(path: P) -> Result<Network> {
    let display = path.as_ref().display().to_string();
    let mut f = std::io::BufReader::new(std::fs::File::open(&path)?);
    let mut r = Reader {
        inner: &mut f,
        path: display.clone(),
    };

    let magic = r.bytes::<4>()?;
    if magic != MAGIC {
        return Err(Error::BadMagic {
            path: display,
            got: u32::from_be_bytes(magic),
            expected: u32::from_be_bytes(MAGIC),
        });
    }
    let version = r.u8()?;
    if version != VERSION {
        return Err(Error::Malformed {
            path: display,
            message: format!("unsupported checkpoint version {version}"),
        });
    }
    let layer_count = r.u32()? as usize;
    let layer_sizes = r.usize_vec(layer_count + 1)?;
    let learning_rate = r.f64()?;
    let momentum = r.f64()?;
    let batch_size = r.usize()?;
    let epochs = r.usize()?;
    let init_seed = r.u64()?;
    let degree_scaled_init = r.u8()? != 0;
    let dropout_rates = if r.u8()? != 0 {
        Some(r.f64_vec(layer_count)?)
    } else {
        None
    };

    let mut topologies = Vec::with_capacity(layer_count);
    let mut layers = Vec::with_capacity(layer_count);
    for _ in 0..layer_count {
        let kind = kind_from_id(r.u8()?, &display)?;
        let k = r.usize()?;
        let has_seed = r.u8()? != 0;
        let seed = r.u64()?;
        topologies.push(ConstructionSpec {
            kind,
            k,
            seed: has_seed.then_some(seed),
        });

        let rows = r.usize()?;
        let cols = r.usize()?;
        let nnz = r.usize()?;
        let row_offsets = r.usize_vec(rows + 1)?;
        let col_indices = r.usize_vec(nnz)?;
        let values = r.f64_vec(nnz)?;
        let bias = r.f64_vec(rows)?;
        let weights = CsrMatrix::from_parts(rows, cols, row_offsets, col_indices, values)?;
        layers.push(SparseLayer {
            weights,
            bias,
            w_velocity: vec![0.0; nnz],
            b_velocity: vec![0.0; rows],
        });
    }

    let cfg = NetworkConfig {
        layer_sizes,
        topologies,
        learning_rate,
        momentum,
        batch_size,
        epochs,
        dropout_rates,
        init_seed,
        degree_scaled_init,
    };
    cfg.validate()?;
    for (l, layer) in layers.iter().enumerate() {
        if layer.fan_in() != cfg.layer_sizes[l] || layer.fan_out() != cfg.layer_sizes[l + 1] {
            return Err(Error::Malformed {
                path: display,
                message: format!("layer {l} shape disagrees with config"),
            });
        }
    }
    Ok(Network { cfg, layers })
}
