use super::{LearnError, Mlp};

const MAGIC: &[u8; 4] = b"FQNP";
pub const SNAPSHOT_VERSION: u32 = 1;

impl Mlp {
    /// Versioned little-endian dump: magic, version, layer count, widths,
    /// parameter count, parameters.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(24 + 8 * (self.sizes().len() + self.num_params()));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.sizes().len() as u32).to_le_bytes());
        for &w in self.sizes() {
            out.extend_from_slice(&(w as u64).to_le_bytes());
        }
        out.extend_from_slice(&(self.num_params() as u64).to_le_bytes());
        for p in self.params() {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, LearnError> {
        let mut r = Reader { bytes, at: 0 };
        if r.take(4)? != MAGIC {
            return Err(LearnError::Snapshot("bad magic".into()));
        }
        let version = r.u32()?;
        if version != SNAPSHOT_VERSION {
            return Err(LearnError::Snapshot(format!("unsupported version {version}")));
        }
        let layers = r.u32()? as usize;
        if layers > 64 {
            return Err(LearnError::Snapshot(format!("{layers} layers")));
        }
        let sizes = (0..layers)
            .map(|_| r.u64().map(|w| w as usize))
            .collect::<Result<Vec<_>, _>>()?;
        let n = r.u64()? as usize;
        if n.checked_mul(8) != Some(bytes.len() - r.at) {
            return Err(LearnError::Snapshot("parameter block length".into()));
        }
        let params = (0..n)
            .map(|_| r.take(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())))
            .collect::<Result<Vec<_>, _>>()?;
        if params.iter().any(|p| !p.is_finite()) {
            return Err(LearnError::Snapshot("non-finite parameter".into()));
        }
        Mlp::from_parts(&sizes, params)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], LearnError> {
        let end = self.at + n;
        let s = self
            .bytes
            .get(self.at..end)
            .ok_or_else(|| LearnError::Snapshot("truncated".into()))?;
        self.at = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, LearnError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, LearnError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
