//! The `.lfsc` container: a little-endian header followed by the code
//! payload, each code a fixed-width big-endian bit field packed MSB-first.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "LFSC"
//! 4       2     version (u16)
//! 6       4     sample_rate (u32, Hz)
//! 10      2     total_stride (u16, samples per frame)
//! 12      1     num_codebooks (u8)
//! 13      1     level count n (u8)
//! 14      2n    levels (u16 each)
//! 14+2n   4     num_frames (u32)
//! 18+2n   8     original_length (u64, samples)
//! 26+2n   ...   payload, ceil(frames * codebooks * width / 8) bytes
//! ```

use crate::error::{Error, Result};
use crate::fsq::{CodeSequence, FsqSpec};

pub const MAGIC: [u8; 4] = *b"LFSC";
pub const VERSION: u16 = 1;
pub const FILE_EXTENSION: &str = "lfsc";

/// Parsed container header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitstreamHeader {
    pub version: u16,
    pub sample_rate: u32,
    pub total_stride: u16,
    pub spec: FsqSpec,
    pub num_frames: u32,
    pub original_length: u64,
}

/// Stream parameters supplied by the encoder alongside the codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamParams {
    pub sample_rate: u32,
    pub total_stride: u16,
    pub original_length: u64,
}

impl BitstreamHeader {
    pub fn encoded_len(&self) -> usize {
        26 + 2 * self.spec.levels().len()
    }

    pub fn payload_len(&self) -> usize {
        payload_len(self.num_frames as u64, &self.spec)
    }

    fn write_to(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&self.version.to_le_bytes());
        out.extend_from_slice(&self.sample_rate.to_le_bytes());
        out.extend_from_slice(&self.total_stride.to_le_bytes());
        out.push(self.spec.num_codebooks() as u8);
        out.push(self.spec.levels().len() as u8);
        for &l in self.spec.levels() {
            out.extend_from_slice(&(l as u16).to_le_bytes());
        }
        out.extend_from_slice(&self.num_frames.to_le_bytes());
        out.extend_from_slice(&self.original_length.to_le_bytes());
    }

    /// Serializes the header alone.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        self.write_to(&mut out);
        out
    }

    fn check_lengths(&self) -> Result<()> {
        let stride = self.total_stride as u64;
        let frames = self.num_frames as u64;
        let ok = if frames == 0 {
            self.original_length == 0
        } else {
            frames * stride >= self.original_length && self.original_length > (frames - 1) * stride
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Length(format!(
                "original length {} inconsistent with {} frames of {} samples",
                self.original_length, frames, stride
            )))
        }
    }
}

/// Exact payload size in bytes.
pub fn payload_len(num_frames: u64, spec: &FsqSpec) -> usize {
    (num_frames * spec.bits_per_frame()).div_ceil(8) as usize
}

fn header_for(codes: &CodeSequence, params: StreamParams) -> Result<BitstreamHeader> {
    let spec = codes.spec();
    if spec.num_codebooks() > u8::MAX as usize {
        return Err(Error::InvalidArgument(format!("{} codebooks exceed 255", spec.num_codebooks())));
    }
    if spec.levels().len() > u8::MAX as usize {
        return Err(Error::InvalidArgument(format!("{} dims exceed 255", spec.levels().len())));
    }
    if let Some(&l) = spec.levels().iter().find(|&&l| l > u16::MAX as u32) {
        return Err(Error::InvalidArgument(format!("level count {l} exceeds 65535")));
    }
    if params.total_stride == 0 {
        return Err(Error::InvalidArgument("total stride must be positive".into()));
    }
    let num_frames = u32::try_from(codes.num_frames())
        .map_err(|_| Error::InvalidArgument(format!("{} frames exceed u32", codes.num_frames())))?;
    let header = BitstreamHeader {
        version: VERSION,
        sample_rate: params.sample_rate,
        total_stride: params.total_stride,
        spec: spec.clone(),
        num_frames,
        original_length: params.original_length,
    };
    header.check_lengths()?;
    Ok(header)
}

struct BitWriter {
    bytes: Vec<u8>,
    acc: u64,
    filled: u32,
}

impl BitWriter {
    fn new(out: Vec<u8>) -> Self {
        Self { bytes: out, acc: 0, filled: 0 }
    }

    fn put(&mut self, value: u32, width: u32) {
        self.acc = (self.acc << width) | value as u64;
        self.filled += width;
        while self.filled >= 8 {
            self.filled -= 8;
            self.bytes.push((self.acc >> self.filled) as u8);
        }
        self.acc &= (1u64 << self.filled) - 1;
    }

    fn finish(mut self) -> Vec<u8> {
        if self.filled > 0 {
            self.bytes.push((self.acc << (8 - self.filled)) as u8);
        }
        self.bytes
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
    acc: u64,
    filled: u32,
}

impl<'a> BitReader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0, acc: 0, filled: 0 }
    }

    /// Caller guarantees enough bytes remain.
    fn take(&mut self, width: u32) -> u32 {
        while self.filled < width {
            self.acc = (self.acc << 8) | self.bytes[self.pos] as u64;
            self.pos += 1;
            self.filled += 8;
        }
        self.filled -= width;
        let v = (self.acc >> self.filled) as u32 & ((1u64 << width) - 1) as u32;
        self.acc &= (1u64 << self.filled) - 1;
        v
    }
}

/// Serializes header and codes.
pub fn pack(codes: &CodeSequence, params: StreamParams) -> Result<Vec<u8>> {
    let header = header_for(codes, params)?;
    let spec = codes.spec();
    for &c in codes.codes() {
        spec.check_code(c)?;
    }
    let mut out = Vec::with_capacity(header.encoded_len() + header.payload_len());
    header.write_to(&mut out);
    let width = spec.code_bit_width();
    let mut w = BitWriter::new(out);
    for &c in codes.codes() {
        w.put(c, width);
    }
    Ok(w.finish())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let end = self.pos + N;
        let slice =
            self.bytes.get(self.pos..end).ok_or_else(|| Error::Truncated(format!("header ends before {what}")))?;
        self.pos = end;
        Ok(slice.try_into().expect("length checked"))
    }
}

/// Parses only the header; returns it with the header's byte length.
pub fn read_header(bytes: &[u8]) -> Result<(BitstreamHeader, usize)> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic: [u8; 4] = cur.take("magic")?;
    if magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:02x?}, expected \"LFSC\"")));
    }
    let version = u16::from_le_bytes(cur.take("version")?);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported bitstream version {version}")));
    }
    let sample_rate = u32::from_le_bytes(cur.take("sample_rate")?);
    let total_stride = u16::from_le_bytes(cur.take("total_stride")?);
    let [num_codebooks] = cur.take::<1>("num_codebooks")?;
    let [n_levels] = cur.take::<1>("levels")?;
    let mut levels = Vec::with_capacity(n_levels as usize);
    for _ in 0..n_levels {
        levels.push(u16::from_le_bytes(cur.take("levels")?) as u32);
    }
    let num_frames = u32::from_le_bytes(cur.take("num_frames")?);
    let original_length = u64::from_le_bytes(cur.take("original_length")?);

    let spec = FsqSpec::new(num_codebooks as usize, levels)
        .map_err(|e| Error::Corrupt(format!("header describes an invalid quantizer: {e}")))?;
    if total_stride == 0 {
        return Err(Error::Corrupt("zero total stride".into()));
    }
    let header = BitstreamHeader { version, sample_rate, total_stride, spec, num_frames, original_length };
    header.check_lengths().map_err(|e| Error::Corrupt(e.to_string()))?;
    Ok((header, cur.pos))
}

/// Exact inverse of [`pack`].
pub fn unpack(bytes: &[u8]) -> Result<(BitstreamHeader, CodeSequence)> {
    let (header, offset) = read_header(bytes)?;
    let payload = &bytes[offset..];
    let expected = header.payload_len();
    if payload.len() != expected {
        return Err(Error::Truncated(format!("payload is {} bytes, header implies {expected}", payload.len())));
    }
    let spec = &header.spec;
    let width = spec.code_bit_width();
    let count = header.num_frames as usize * spec.num_codebooks();
    let mut r = BitReader::new(payload);
    let mut codes = Vec::with_capacity(count);
    for i in 0..count {
        let c = r.take(width);
        if c as u64 >= spec.codes_per_codebook() {
            return Err(Error::Corrupt(format!(
                "code {c} at frame {} codebook {} exceeds {} codes",
                i / spec.num_codebooks(),
                i % spec.num_codebooks(),
                spec.codes_per_codebook()
            )));
        }
        codes.push(c);
    }
    let seq = CodeSequence::new(spec.clone(), codes)?;
    Ok((header, seq))
}
