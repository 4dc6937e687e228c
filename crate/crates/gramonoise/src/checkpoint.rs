//! Self-describing checkpoint container: network configuration, named
//! weight arrays with their EMA shadow, optimizer state, RNG states, and
//! the iteration counter. Fixed little-endian layout behind a versioned
//! magic header, so checkpoints are portable across machines.

use crate::denoiser::layers::{ParamTensor, ParameterSet};
use crate::denoiser::NetworkConfig;
use crate::error::{Error, Result};
use crate::rng::RngState;
use crate::trainer::AdamState;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"GNCKPT01";
const VERSION: u32 = 1;

/// Everything needed to resume training or to sample.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub config: NetworkConfig,
    pub params: ParameterSet,
    pub adam: AdamState,
    pub iteration: u64,
    pub train_rng: RngState,
    pub data_rng: RngState,
}

pub fn save(path: impl AsRef<Path>, ckpt: &Checkpoint) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e: std::io::Error| Error::io(path, e);
    w.write_all(MAGIC).map_err(io)?;
    w.write_all(&VERSION.to_le_bytes()).map_err(io)?;
    let config_json = serde_json::to_vec(&ckpt.config)
        .map_err(|e| Error::Config(format!("checkpoint config serialization: {e}")))?;
    write_bytes(&mut w, path, &config_json)?;
    w.write_all(&ckpt.iteration.to_le_bytes()).map_err(io)?;
    w.write_all(&ckpt.adam.t.to_le_bytes()).map_err(io)?;
    w.write_all(&(ckpt.params.tensors.len() as u32).to_le_bytes()).map_err(io)?;
    for (id, tensor) in ckpt.params.tensors.iter().enumerate() {
        write_bytes(&mut w, path, tensor.name.as_bytes())?;
        w.write_all(&[tensor.trainable as u8]).map_err(io)?;
        w.write_all(&(tensor.dims.len() as u32).to_le_bytes()).map_err(io)?;
        for &d in &tensor.dims {
            w.write_all(&(d as u64).to_le_bytes()).map_err(io)?;
        }
        write_f64s(&mut w, path, &tensor.data)?;
        write_f64s(&mut w, path, &ckpt.params.ema[id])?;
        write_f64s(&mut w, path, &ckpt.adam.m[id])?;
        write_f64s(&mut w, path, &ckpt.adam.v[id])?;
    }
    write_rng(&mut w, path, &ckpt.train_rng)?;
    write_rng(&mut w, path, &ckpt.data_rng)?;
    w.flush().map_err(io)
}

pub fn load(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 8];
    read_exact(&mut r, path, &mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Domain {
            module: "checkpoint",
            message: format!("{}: not a checkpoint (bad magic)", path.display()),
        });
    }
    let version = read_u32(&mut r, path)?;
    if version != VERSION {
        return Err(Error::Domain {
            module: "checkpoint",
            message: format!("{}: unsupported checkpoint version {version}", path.display()),
        });
    }
    let config_json = read_bytes(&mut r, path)?;
    let config: NetworkConfig = serde_json::from_slice(&config_json)
        .map_err(|e| Error::Config(format!("{}: config block: {e}", path.display())))?;
    let iteration = read_u64(&mut r, path)?;
    let adam_t = read_u64(&mut r, path)?;
    let count = read_u32(&mut r, path)? as usize;
    let mut tensors = Vec::with_capacity(count);
    let mut ema = Vec::with_capacity(count);
    let mut m = Vec::with_capacity(count);
    let mut v = Vec::with_capacity(count);
    for _ in 0..count {
        let name = String::from_utf8(read_bytes(&mut r, path)?)
            .map_err(|_| malformed(path, "tensor name not utf-8"))?;
        let mut flag = [0u8; 1];
        read_exact(&mut r, path, &mut flag)?;
        let dim_count = read_u32(&mut r, path)? as usize;
        let mut dims = Vec::with_capacity(dim_count);
        for _ in 0..dim_count {
            dims.push(read_u64(&mut r, path)? as usize);
        }
        let data = read_f64s(&mut r, path)?;
        let expected: usize = dims.iter().product();
        if data.len() != expected {
            return Err(malformed(path, "tensor data does not match dims"));
        }
        ema.push(read_f64s(&mut r, path)?);
        m.push(read_f64s(&mut r, path)?);
        v.push(read_f64s(&mut r, path)?);
        tensors.push(ParamTensor { name, dims, data, trainable: flag[0] != 0 });
    }
    let train_rng = read_rng(&mut r, path)?;
    let data_rng = read_rng(&mut r, path)?;
    Ok(Checkpoint {
        config,
        params: ParameterSet { tensors, ema },
        adam: AdamState { m, v, t: adam_t },
        iteration,
        train_rng,
        data_rng,
    })
}

/// FNV-1a hash of a file's bytes, as a hex string; recorded in run
/// manifests to identify the checkpoint that produced an output.
pub fn file_hash(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    Ok(format!("{h:016x}"))
}

/// Human-readable metadata for the `info` command.
pub fn summary(ckpt: &Checkpoint) -> String {
    let param_count: usize =
        ckpt.params.tensors.iter().filter(|t| t.trainable).map(|t| t.data.len()).sum();
    let frozen: usize =
        ckpt.params.tensors.iter().filter(|t| !t.trainable).map(|t| t.data.len()).sum();
    format!(
        "iteration: {}\nadam steps: {}\ntrainable parameters: {}\nfrozen parameters: {}\ntensors: {}\nsample_count: {}\nchannels: {:?}\ndownsample_factors: {:?}\nattention_stages: {:?}\n",
        ckpt.iteration,
        ckpt.adam.t,
        param_count,
        frozen,
        ckpt.params.tensors.len(),
        ckpt.config.sample_count,
        ckpt.config.channels,
        ckpt.config.downsample_factors,
        ckpt.config.attention_stages,
    )
}

fn malformed(path: &Path, what: &str) -> Error {
    Error::Domain { module: "checkpoint", message: format!("{}: {what}", path.display()) }
}

fn write_bytes(w: &mut impl Write, path: &Path, bytes: &[u8]) -> Result<()> {
    w.write_all(&(bytes.len() as u32).to_le_bytes()).map_err(|e| Error::io(path, e))?;
    w.write_all(bytes).map_err(|e| Error::io(path, e))
}

fn write_f64s(w: &mut impl Write, path: &Path, values: &[f64]) -> Result<()> {
    w.write_all(&(values.len() as u64).to_le_bytes()).map_err(|e| Error::io(path, e))?;
    for v in values {
        w.write_all(&v.to_le_bytes()).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

fn write_rng(w: &mut impl Write, path: &Path, state: &RngState) -> Result<()> {
    w.write_all(&state.seed).map_err(|e| Error::io(path, e))?;
    w.write_all(&state.stream.to_le_bytes()).map_err(|e| Error::io(path, e))?;
    w.write_all(&state.word_pos.to_le_bytes()).map_err(|e| Error::io(path, e))
}

fn read_exact(r: &mut impl Read, path: &Path, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|_| malformed(path, "truncated checkpoint"))
}

fn read_u32(r: &mut impl Read, path: &Path) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, path, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read, path: &Path) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(r, path, &mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_bytes(r: &mut impl Read, path: &Path) -> Result<Vec<u8>> {
    let len = read_u32(r, path)? as usize;
    if len > 1 << 28 {
        return Err(malformed(path, "unreasonable block length"));
    }
    let mut buf = vec![0u8; len];
    read_exact(r, path, &mut buf)?;
    Ok(buf)
}

fn read_f64s(r: &mut impl Read, path: &Path) -> Result<Vec<f64>> {
    let len = read_u64(r, path)? as usize;
    if len > 1 << 32 {
        return Err(malformed(path, "unreasonable tensor length"));
    }
    let mut bytes = vec![0u8; len * 8];
    read_exact(r, path, &mut bytes)?;
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

fn read_rng(r: &mut impl Read, path: &Path) -> Result<RngState> {
    let mut seed = [0u8; 32];
    read_exact(r, path, &mut seed)?;
    let stream = read_u64(r, path)?;
    let mut wp = [0u8; 16];
    read_exact(r, path, &mut wp)?;
    Ok(RngState { seed, stream, word_pos: u128::from_le_bytes(wp) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denoiser::{init_params, NetworkConfig};
    use crate::rng::{normal_frame, rng_from_seed, save_rng};

    fn sample_checkpoint() -> Checkpoint {
        let cfg = NetworkConfig {
            fs: 8000,
            sample_count: 32,
            channels: vec![4, 8],
            downsample_factors: vec![2],
            dilation_pattern: vec![1, 2],
            attention_stages: vec![],
            attention_heads: 2,
            rff_dim: 4,
            rff_scale: 8.0,
            mlp_dims: vec![8, 8],
            kernel_size: 3,
        };
        let (_, params) = init_params(&cfg, 3).unwrap();
        let adam = AdamState::new(&params);
        let mut rng = rng_from_seed(4);
        let _ = normal_frame(&mut rng, 7);
        Checkpoint {
            config: cfg,
            params,
            adam,
            iteration: 123,
            train_rng: save_rng(&rng),
            data_rng: save_rng(&rng_from_seed(5)),
        }
    }

    #[test]
    fn round_trip_preserves_everything() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let ckpt = sample_checkpoint();
        save(&path, &ckpt).unwrap();
        let loaded = load(&path).unwrap();
        assert_eq!(loaded.config, ckpt.config);
        assert_eq!(loaded.iteration, 123);
        assert_eq!(loaded.adam.t, ckpt.adam.t);
        assert_eq!(loaded.train_rng, ckpt.train_rng);
        assert_eq!(loaded.data_rng, ckpt.data_rng);
        for (a, b) in loaded.params.tensors.iter().zip(&ckpt.params.tensors) {
            assert_eq!(a.name, b.name);
            assert_eq!(a.dims, b.dims);
            assert_eq!(a.trainable, b.trainable);
            assert_eq!(a.data, b.data);
        }
        assert_eq!(loaded.params.ema, ckpt.params.ema);
        assert_eq!(loaded.adam.m, ckpt.adam.m);
        assert_eq!(loaded.adam.v, ckpt.adam.v);
    }

    #[test]
    fn rejects_foreign_and_truncated_files() {
        let dir = tempfile::tempdir().unwrap();
        let bad = dir.path().join("bad.ckpt");
        std::fs::write(&bad, b"definitely not a checkpoint").unwrap();
        assert!(load(&bad).is_err());
        let path = dir.path().join("model.ckpt");
        save(&path, &sample_checkpoint()).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let cut = dir.path().join("cut.ckpt");
        std::fs::write(&cut, &bytes[..bytes.len() / 2]).unwrap();
        assert!(load(&cut).is_err());
    }

    #[test]
    fn file_hash_is_stable_and_sensitive() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        save(&path, &sample_checkpoint()).unwrap();
        let h1 = file_hash(&path).unwrap();
        let h2 = file_hash(&path).unwrap();
        assert_eq!(h1, h2);
        let mut bytes = std::fs::read(&path).unwrap();
        let last = bytes.len() - 1;
        bytes[last] ^= 1;
        std::fs::write(&path, bytes).unwrap();
        assert_ne!(file_hash(&path).unwrap(), h1);
    }

    #[test]
    fn summary_mentions_topology() {
        let ckpt = sample_checkpoint();
        let s = summary(&ckpt);
        assert!(s.contains("iteration: 123"));
        assert!(s.contains("channels: [4, 8]"));
    }
}
