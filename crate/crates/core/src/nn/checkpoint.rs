//! Versioned binary parameter checkpoints. Values are stored as little-endian
//! `f64`, so save/load round-trips are bit-exact.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::net::{HeadLayout, PolicyNet};

const MAGIC: &[u8; 4] = b"TSCK";
const VERSION: u32 = 1;

pub fn save_checkpoint<S: Scalar>(net: &PolicyNet<S>, method: &str, path: &Path) -> Result<()> {
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    write_str(&mut buf, method)?;
    let layout = net.layout();
    buf.extend_from_slice(&(layout.actor_heads as u32).to_le_bytes());
    buf.extend_from_slice(&(layout.actor_width as u32).to_le_bytes());
    buf.extend_from_slice(&(layout.critic_heads as u32).to_le_bytes());
    let names = net.tensor_names();
    let tensors = net.tensors();
    buf.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, tensor) in names.iter().zip(tensors) {
        write_str(&mut buf, name)?;
        buf.push(tensor.shape().len() as u8);
        for &dim in tensor.shape() {
            buf.extend_from_slice(&(dim as u64).to_le_bytes());
        }
        for &v in tensor.data() {
            buf.extend_from_slice(&v.to_f64_lossy().to_le_bytes());
        }
    }
    fs::write(path, buf)?;
    Ok(())
}

/// Loads a checkpoint, returning the network and the method tag it was saved
/// under.
pub fn load_checkpoint<S: Scalar>(path: &Path) -> Result<(PolicyNet<S>, String)> {
    let bytes = fs::read(path)?;
    let mut cursor = Cursor { bytes: &bytes, pos: 0 };
    if cursor.take(4)? != MAGIC {
        return Err(Error::spec(format!("{} is not a checkpoint file", path.display())));
    }
    let version = cursor.u32()?;
    if version != VERSION {
        return Err(Error::spec(format!("unsupported checkpoint version {version}")));
    }
    let method = cursor.string()?;
    let layout = HeadLayout::new(cursor.u32()? as usize, cursor.u32()? as usize, cursor.u32()? as usize)?;
    let mut net: PolicyNet<S> = PolicyNet::new(layout, 0);
    let count = cursor.u32()? as usize;
    let names = net.tensor_names();
    if count != names.len() {
        return Err(Error::spec(format!("checkpoint has {count} tensors, layout needs {}", names.len())));
    }
    for (name, tensor) in names.iter().zip(net.tensors_mut()) {
        let stored = cursor.string()?;
        if &stored != name {
            return Err(Error::spec(format!("checkpoint tensor {stored} where {name} expected")));
        }
        let ndim = cursor.take(1)?[0] as usize;
        let mut dims = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            dims.push(cursor.u64()? as usize);
        }
        if dims != tensor.shape() {
            return Err(Error::spec(format!("tensor {name} has shape {dims:?}, expected {:?}", tensor.shape())));
        }
        for v in tensor.data_mut() {
            *v = S::from_f64_lossy(cursor.f64()?);
        }
    }
    if cursor.pos != bytes.len() {
        return Err(Error::spec("trailing bytes after checkpoint payload"));
    }
    Ok((net, method))
}

fn write_str(buf: &mut Vec<u8>, s: &str) -> Result<()> {
    if s.len() > u16::MAX as usize {
        return Err(Error::spec("string too long for checkpoint header"));
    }
    buf.extend_from_slice(&(s.len() as u16).to_le_bytes());
    buf.extend_from_slice(s.as_bytes());
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::spec("checkpoint truncated"));
        }
        let out = &self.bytes[self.pos..self.pos + n];
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
        let len = u16::from_le_bytes(self.take(2)?.try_into().unwrap()) as usize;
        String::from_utf8(self.take(len)?.to_vec()).map_err(|_| Error::spec("invalid utf-8 in checkpoint"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::net::HeadLayout;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        let net: PolicyNet<f64> = PolicyNet::new(HeadLayout::new(4, 5, 1).unwrap(), 321);
        save_checkpoint(&net, "aap-ccda", &path).unwrap();
        let (loaded, method) = load_checkpoint::<f64>(&path).unwrap();
        assert_eq!(method, "aap-ccda");
        assert_eq!(loaded.layout(), net.layout());
        for (a, b) in net.tensors().iter().zip(loaded.tensors()) {
            assert_eq!(a.shape(), b.shape());
            for (x, y) in a.data().iter().zip(b.data()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn garbage_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.ckpt");
        std::fs::write(&path, b"not a checkpoint").unwrap();
        assert!(load_checkpoint::<f64>(&path).is_err());
    }
}
