//! Sequence files: space-separated labels, or a binary stream of one byte
//! per symbol behind a 16-byte header (`RLSEQ1`, alphabet size as `u16` LE,
//! length as `u64` LE).

use std::io::{Read, Write};

use crate::word::{Alphabet, Word};
use crate::{Error, Result};

pub const MAGIC: &[u8; 6] = b"RLSEQ1";
pub const HEADER_LEN: usize = 16;

pub fn write_text<W: Write>(out: &mut W, alphabet: &Alphabet, word: &Word) -> Result<()> {
    let mut first = true;
    for &s in word.symbols() {
        if !first {
            out.write_all(b" ")?;
        }
        out.write_all(alphabet.label(s).as_bytes())?;
        first = false;
    }
    out.write_all(b"\n")?;
    Ok(())
}

pub fn read_text(text: &str, alphabet: &Alphabet) -> Result<Word> {
    let symbols = text
        .split_whitespace()
        .map(|t| alphabet.index_of(t).ok_or_else(|| Error::Parameter(format!("unknown symbol {t:?}"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(Word::from(symbols))
}

pub fn write_binary<W: Write>(out: &mut W, alphabet: &Alphabet, word: &Word) -> Result<()> {
    let m = alphabet.size();
    if m > 256 {
        return Err(Error::Parameter("binary sequences support at most 256 symbols".into()));
    }
    alphabet.check(word)?;
    out.write_all(MAGIC)?;
    out.write_all(&(m as u16).to_le_bytes())?;
    out.write_all(&(word.len() as u64).to_le_bytes())?;
    let bytes: Vec<u8> = word.symbols().iter().map(|&s| s as u8).collect();
    out.write_all(&bytes)?;
    Ok(())
}

/// Returns the alphabet size recorded in the header and the sequence.
pub fn read_binary<R: Read>(input: &mut R) -> Result<(usize, Word)> {
    let mut header = [0u8; HEADER_LEN];
    input.read_exact(&mut header)?;
    if &header[..6] != MAGIC {
        return Err(Error::Parameter("not a binary sequence file".into()));
    }
    let m = u16::from_le_bytes([header[6], header[7]]) as usize;
    let len = u64::from_le_bytes(header[8..16].try_into().expect("eight bytes")) as usize;
    let mut body = Vec::with_capacity(len);
    input.read_to_end(&mut body)?;
    if body.len() != len {
        return Err(Error::Parameter(format!("header announces {len} symbols, found {}", body.len())));
    }
    if let Some(&b) = body.iter().find(|&&b| b as usize >= m) {
        return Err(Error::InvalidWord { symbol: b as usize, alphabet_size: m });
    }
    Ok((m, Word::from(body.into_iter().map(usize::from).collect::<Vec<_>>())))
}
