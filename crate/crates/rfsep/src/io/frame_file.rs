//! Binary container for complex sample frames.
//!
//! Layout (little endian): magic `RFCH`, u32 version, u64 frame length,
//! u64 frame count, then each frame as interleaved f32 (re, im) pairs.
//! File size is therefore exactly `24 + count * len * 8` bytes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::ComplexSignal;

pub const FRAME_MAGIC: &[u8; 4] = b"RFCH";
pub const FRAME_VERSION: u32 = 1;

/// Header bytes before the sample payload.
pub const FRAME_HEADER_LEN: u64 = 24;

fn malformed(path: &Path, reason: impl Into<String>) -> Error {
    Error::MalformedFile {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

pub fn write_frames(path: &Path, frames: &[ComplexSignal]) -> Result<()> {
    let frame_len = match frames.first() {
        Some(f) => f.len(),
        None => {
            return Err(Error::InvalidParameter(
                "refusing to write a frame file with no frames".into(),
            ))
        }
    };
    if let Some(bad) = frames.iter().find(|f| f.len() != frame_len) {
        return Err(Error::LengthMismatch {
            left: bad.len(),
            right: frame_len,
        });
    }
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path.display().to_string(), e);
    w.write_all(FRAME_MAGIC).map_err(io_err)?;
    w.write_all(&FRAME_VERSION.to_le_bytes()).map_err(io_err)?;
    w.write_all(&(frame_len as u64).to_le_bytes()).map_err(io_err)?;
    w.write_all(&(frames.len() as u64).to_le_bytes()).map_err(io_err)?;
    for frame in frames {
        for z in &frame.samples {
            w.write_all(&(z.re as f32).to_le_bytes()).map_err(io_err)?;
            w.write_all(&(z.im as f32).to_le_bytes()).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

pub fn read_frames(path: &Path) -> Result<Vec<ComplexSignal>> {
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut r = BufReader::new(file);
    let io_err = |e| Error::io(path.display().to_string(), e);

    let mut header = [0u8; FRAME_HEADER_LEN as usize];
    r.read_exact(&mut header)
        .map_err(|_| malformed(path, "file shorter than the 24-byte header"))?;
    if &header[0..4] != FRAME_MAGIC {
        return Err(malformed(path, "bad magic, expected RFCH"));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != FRAME_VERSION {
        return Err(malformed(path, format!("unsupported version {version}")));
    }
    let frame_len = u64::from_le_bytes(header[8..16].try_into().unwrap()) as usize;
    let count = u64::from_le_bytes(header[16..24].try_into().unwrap()) as usize;
    if frame_len == 0 || count == 0 {
        return Err(malformed(path, "zero frame length or frame count"));
    }

    let mut frames = Vec::with_capacity(count);
    let mut buf = vec![0u8; frame_len * 8];
    for i in 0..count {
        r.read_exact(&mut buf)
            .map_err(|_| malformed(path, format!("truncated at frame {i} of {count}")))?;
        let samples = buf
            .chunks_exact(8)
            .map(|c| {
                Complex64::new(
                    f32::from_le_bytes(c[0..4].try_into().unwrap()) as f64,
                    f32::from_le_bytes(c[4..8].try_into().unwrap()) as f64,
                )
            })
            .collect();
        frames.push(ComplexSignal::new(samples));
    }
    let mut trailing = [0u8; 1];
    match r.read(&mut trailing).map_err(io_err)? {
        0 => Ok(frames),
        _ => Err(malformed(path, "trailing bytes after the last frame")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{gen_complex_gaussian, seeded_rng};

    fn sample_frames(count: usize, len: usize) -> Vec<ComplexSignal> {
        let mut rng = seeded_rng(1);
        (0..count).map(|_| gen_complex_gaussian(len, &mut rng)).collect()
    }

    #[test]
    fn round_trip_at_f32_precision() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("frames.rfch");
        let frames = sample_frames(3, 64);
        write_frames(&path, &frames).unwrap();
        let back = read_frames(&path).unwrap();
        assert_eq!(back.len(), 3);
        for (a, b) in frames.iter().zip(&back) {
            for (x, y) in a.samples.iter().zip(&b.samples) {
                assert_eq!(x.re as f32, y.re as f32);
                assert_eq!(x.im as f32, y.im as f32);
                // Storage is f32, so the reload is within f32 rounding.
                assert!((x - y).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn file_size_matches_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("frames.rfch");
        write_frames(&path, &sample_frames(5, 32)).unwrap();
        let size = std::fs::metadata(&path).unwrap().len();
        assert_eq!(size, FRAME_HEADER_LEN + 5 * 32 * 8);
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("frames.rfch");
        write_frames(&path, &sample_frames(2, 16)).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();

        let mut wrong = bytes.clone();
        wrong[0] = b'X';
        std::fs::write(&path, &wrong).unwrap();
        let err = read_frames(&path).unwrap_err().to_string();
        assert!(err.contains("magic"), "{err}");

        bytes.truncate(bytes.len() - 4);
        std::fs::write(&path, &bytes).unwrap();
        let err = read_frames(&path).unwrap_err().to_string();
        assert!(err.contains("truncated"), "{err}");
    }

    #[test]
    fn rejects_inconsistent_frame_lengths() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("frames.rfch");
        let mut frames = sample_frames(2, 16);
        frames[1].samples.truncate(8);
        assert!(write_frames(&path, &frames).is_err());
        assert!(write_frames(&path, &[]).is_err());
    }
}
