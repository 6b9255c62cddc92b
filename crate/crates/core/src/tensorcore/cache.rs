//! Binary state cache: `"MODC1"`, `n_sites: u32`, `sector: i32`, then one
//! `(re, im)` pair of `f64` per sector configuration in canonical order.
//! All integers and floats are little-endian.

use std::io::{Read, Write};

use num_complex::Complex64;

use super::{Basis, PureState};
use crate::error::{Error, Result};

pub const CACHE_MAGIC: &[u8; 5] = b"MODC1";

pub fn write_state_cache<W: Write>(state: &PureState, mut out: W) -> Result<()> {
    let Basis::Magnetization(sector) = state.basis() else {
        return Err(Error::Validation(
            "only fixed-magnetization states can be cached".into(),
        ));
    };
    out.write_all(CACHE_MAGIC)?;
    out.write_all(&(state.n_sites() as u32).to_le_bytes())?;
    out.write_all(&sector.to_le_bytes())?;
    let mut buf = Vec::with_capacity(16 * state.len());
    for a in state.amplitudes() {
        buf.extend_from_slice(&a.re.to_le_bytes());
        buf.extend_from_slice(&a.im.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_state_cache<R: Read>(mut input: R) -> Result<PureState> {
    let mut magic = [0u8; 5];
    input.read_exact(&mut magic)?;
    if &magic != CACHE_MAGIC {
        return Err(Error::Format("bad state cache magic".into()));
    }
    let mut word = [0u8; 4];
    input.read_exact(&mut word)?;
    let n_sites = u32::from_le_bytes(word) as usize;
    input.read_exact(&mut word)?;
    let sector = i32::from_le_bytes(word);
    let basis = Basis::Magnetization(sector);
    let count = basis.configurations(n_sites)?.len();
    let mut buf = vec![0u8; 16 * count];
    input
        .read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated state cache: {e}")))?;
    let mut trailing = [0u8; 1];
    if input.read(&mut trailing)? != 0 {
        return Err(Error::Format("trailing bytes after state cache".into()));
    }
    let amplitudes = buf
        .chunks_exact(16)
        .map(|ch| {
            let re = f64::from_le_bytes(ch[..8].try_into().unwrap());
            let im = f64::from_le_bytes(ch[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect();
    PureState::new(n_sites, basis, amplitudes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout_is_exact() {
        let s = PureState::basis_state(2, 0b01).unwrap();
        let mut bytes = Vec::new();
        write_state_cache(&s, &mut bytes).unwrap();
        assert_eq!(&bytes[..5], b"MODC1");
        assert_eq!(&bytes[5..9], &2u32.to_le_bytes());
        assert_eq!(&bytes[9..13], &0i32.to_le_bytes());
        assert_eq!(bytes.len(), 13 + 2 * 16);
        // configurations 0b01 then 0b10
        assert_eq!(&bytes[13..21], &1.0f64.to_le_bytes());
        let back = read_state_cache(bytes.as_slice()).unwrap();
        assert_eq!(back.amplitudes(), s.amplitudes());
    }

    #[test]
    fn corrupt_input_is_rejected() {
        assert!(read_state_cache(&b"MODC2\0\0\0\0"[..]).is_err());
        let s = PureState::basis_state(4, 0b0011).unwrap();
        let mut bytes = Vec::new();
        write_state_cache(&s, &mut bytes).unwrap();
        bytes.pop();
        assert!(read_state_cache(bytes.as_slice()).is_err());
    }
}
