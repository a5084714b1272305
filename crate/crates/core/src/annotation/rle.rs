//! COCO run-length masks.
//!
//! Runs are taken over the canvas in column-major order (down each column,
//! then across) and always start with a background run, which may be 0.
//! The compressed text form packs each run (delta-coded against the run two
//! places back, from the fourth run on) into 5-bit groups offset by ASCII 48,
//! with bit 0x20 marking continuation and bit 0x10 of the last group carrying
//! the sign.

use crate::error::{Error, Result};
use crate::mask::BinaryMask;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RleCounts {
    Runs(Vec<u32>),
    Compressed(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rle {
    pub height: usize,
    pub width: usize,
    pub counts: RleCounts,
}

impl Rle {
    pub fn runs(&self) -> Result<Vec<u32>> {
        match &self.counts {
            RleCounts::Runs(r) => Ok(r.clone()),
            RleCounts::Compressed(s) => decompress_counts(s),
        }
    }

    /// Checks that the runs cover the canvas exactly and returns them.
    pub fn validated_runs(&self) -> Result<Vec<u32>> {
        let runs = self.runs()?;
        let actual: u64 = runs.iter().map(|&c| c as u64).sum();
        let expected = (self.height * self.width) as u64;
        if actual != expected {
            return Err(Error::RleLength { expected, actual });
        }
        Ok(runs)
    }

    /// Number of foreground pixels, without decoding.
    pub fn area(&self) -> Result<u64> {
        Ok(self.validated_runs()?.iter().skip(1).step_by(2).map(|&c| c as u64).sum())
    }

    pub fn compressed(&self) -> Result<Rle> {
        Ok(Rle {
            height: self.height,
            width: self.width,
            counts: RleCounts::Compressed(compress_counts(&self.runs()?)),
        })
    }
}

pub fn rle_encode(mask: &BinaryMask) -> Rle {
    let (w, h) = (mask.width(), mask.height());
    let mut runs = Vec::new();
    let mut current = false;
    let mut len = 0u32;
    for x in 0..w {
        for y in 0..h {
            let v = mask.get(x, y);
            if v != current {
                runs.push(len);
                len = 0;
                current = v;
            }
            len += 1;
        }
    }
    runs.push(len);
    Rle {
        height: h,
        width: w,
        counts: RleCounts::Runs(runs),
    }
}

pub fn rle_decode(rle: &Rle) -> Result<BinaryMask> {
    let runs = rle.validated_runs()?;
    if rle.width == 0 || rle.height == 0 {
        return Err(Error::Shape("rle canvas must be at least 1x1".into()));
    }
    let h = rle.height;
    let mut mask = BinaryMask::new(rle.width, h);
    let mut k = 0usize;
    for (i, &run) in runs.iter().enumerate() {
        let run = run as usize;
        if i % 2 == 1 {
            for j in k..k + run {
                mask.set(j / h, j % h, true);
            }
        }
        k += run;
    }
    Ok(mask)
}

pub fn compress_counts(runs: &[u32]) -> String {
    let mut s = String::with_capacity(runs.len() * 2);
    for (i, &c) in runs.iter().enumerate() {
        let mut x = c as i64;
        if i > 2 {
            x -= runs[i - 2] as i64;
        }
        loop {
            let mut c = (x & 0x1f) as u8;
            x >>= 5;
            let more = if c & 0x10 != 0 { x != -1 } else { x != 0 };
            if more {
                c |= 0x20;
            }
            s.push((c + 48) as char);
            if !more {
                break;
            }
        }
    }
    s
}

pub fn decompress_counts(s: &str) -> Result<Vec<u32>> {
    let bytes = s.as_bytes();
    let mut runs: Vec<u32> = Vec::with_capacity(bytes.len());
    let mut p = 0;
    while p < bytes.len() {
        let start = p;
        let mut x: i64 = 0;
        let mut k = 0;
        loop {
            let Some(&b) = bytes.get(p) else {
                return Err(Error::Codec {
                    index: p,
                    message: "truncated run".into(),
                });
            };
            if !(48..48 + 64).contains(&b) {
                return Err(Error::Codec {
                    index: p,
                    message: format!("invalid character {:?}", b as char),
                });
            }
            if k >= 12 {
                return Err(Error::Codec {
                    index: p,
                    message: "run value overflows".into(),
                });
            }
            let c = (b - 48) as i64;
            x |= (c & 0x1f) << (5 * k);
            p += 1;
            k += 1;
            if c & 0x20 == 0 {
                if c & 0x10 != 0 {
                    x |= -1i64 << (5 * k);
                }
                break;
            }
        }
        let m = runs.len();
        if m > 2 {
            x += runs[m - 2] as i64;
        }
        if !(0..=u32::MAX as i64).contains(&x) {
            return Err(Error::Codec {
                index: start,
                message: format!("decoded run {x} out of range"),
            });
        }
        runs.push(x as u32);
    }
    Ok(runs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn runs_rle(h: usize, w: usize, runs: Vec<u32>) -> Rle {
        Rle {
            height: h,
            width: w,
            counts: RleCounts::Runs(runs),
        }
    }

    #[test]
    fn encode_constant_masks() {
        assert_eq!(rle_encode(&BinaryMask::new(3, 3)).counts, RleCounts::Runs(vec![9]));
        assert_eq!(rle_encode(&BinaryMask::filled(3, 3)).counts, RleCounts::Runs(vec![0, 9]));
    }

    #[test]
    fn decode_constant_masks() {
        assert!(rle_decode(&runs_rle(3, 3, vec![9])).unwrap().is_empty());
        assert_eq!(rle_decode(&runs_rle(3, 3, vec![0, 9])).unwrap().area(), 9);
    }

    #[test]
    fn decode_is_column_major() {
        let m = rle_decode(&runs_rle(2, 3, vec![1, 2, 3])).unwrap();
        // flat column-major indices 1 and 2
        assert_eq!(m.iter_ones().collect::<Vec<_>>(), vec![(1, 0), (0, 1)]);
    }

    #[test]
    fn length_mismatch() {
        let err = rle_decode(&runs_rle(3, 3, vec![4, 4])).unwrap_err();
        assert!(err.to_string().contains("rle length mismatch"));
    }

    #[test]
    fn compressed_small_values() {
        // single groups: '0'+c for c < 16
        assert_eq!(compress_counts(&[0, 9]), "09");
        assert_eq!(decompress_counts("09").unwrap(), vec![0, 9]);
        // 16 needs two groups since bit 0x10 would read as a sign
        assert_eq!(compress_counts(&[16]), "`0");
        assert_eq!(decompress_counts("`0").unwrap(), vec![16]);
    }

    #[test]
    fn compressed_negative_deltas_round_trip() {
        let runs = vec![5, 100, 3, 7, 1, 400, 2, 2, 2];
        assert_eq!(decompress_counts(&compress_counts(&runs)).unwrap(), runs);
    }

    #[test]
    fn codec_errors_report_index() {
        match decompress_counts("09 ") {
            Err(Error::Codec { index, .. }) => assert_eq!(index, 2),
            other => panic!("{other:?}"),
        }
        // continuation bit set on the last character
        match decompress_counts("0P") {
            Err(Error::Codec { index, .. }) => assert_eq!(index, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn area_without_decode() {
        assert_eq!(runs_rle(2, 3, vec![1, 2, 3]).area().unwrap(), 2);
    }
}
