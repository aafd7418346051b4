use std::io::Cursor;
use std::path::Path;

use crate::error::{Error, Result};

/// Mono clip with samples in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidParameter("sample rate must be > 0".into()));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn scaled(&self, gain: f64) -> AudioClip {
        AudioClip {
            samples: self.samples.iter().map(|s| s * gain).collect(),
            sample_rate: self.sample_rate,
        }
    }
}

fn map_hound(e: hound::Error) -> Error {
    match e {
        hound::Error::Unsupported => Error::UnsupportedFormat("codec not supported".into()),
        hound::Error::IoError(io) if io.kind() == std::io::ErrorKind::UnexpectedEof => {
            Error::Decode("truncated stream".into())
        }
        other => Error::Decode(other.to_string()),
    }
}

/// Decodes a RIFF/WAVE stream holding 16-bit PCM or 32-bit IEEE float.
/// Channels are averaged to mono.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioClip> {
    let reader = hound::WavReader::new(Cursor::new(bytes)).map_err(map_hound)?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(Error::Decode("zero channels".into()));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(map_hound)?,
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| (v as f64).clamp(-1.0, 1.0)))
            .collect::<std::result::Result<_, _>>()
            .map_err(map_hound)?,
        (fmt, bits) => return Err(Error::UnsupportedFormat(format!("{fmt:?} with {bits} bits per sample"))),
    };
    let samples = interleaved
        .chunks_exact(channels)
        .map(|frame| frame.iter().sum::<f64>() / channels as f64)
        .collect();
    AudioClip::new(samples, spec.sample_rate)
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioClip> {
    decode_wav(&std::fs::read(path)?)
}

/// Mono 32-bit float WAV bytes.
pub fn encode_wav_f32(clip: &AudioClip) -> Result<Vec<u8>> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut buf = Cursor::new(Vec::new());
    {
        let mut w = hound::WavWriter::new(&mut buf, spec).map_err(map_hound)?;
        for &s in &clip.samples {
            w.write_sample(s as f32).map_err(map_hound)?;
        }
        w.finalize().map_err(map_hound)?;
    }
    Ok(buf.into_inner())
}

pub fn write_wav_f32(clip: &AudioClip, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_wav_f32(clip)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pcm16(channels: u16, frames: &[i16]) -> Vec<u8> {
        let spec = hound::WavSpec {
            channels,
            sample_rate: 8000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut buf = Cursor::new(Vec::new());
        let mut w = hound::WavWriter::new(&mut buf, spec).unwrap();
        for &s in frames {
            w.write_sample(s).unwrap();
        }
        w.finalize().unwrap();
        buf.into_inner()
    }

    #[test]
    fn full_scale_pcm() {
        let clip = decode_wav(&pcm16(1, &[32767, -32768, 0])).unwrap();
        assert!((clip.samples[0] - 1.0).abs() <= 1.0 / 32768.0);
        assert_eq!(clip.samples[1], -1.0);
        assert_eq!(clip.sample_rate, 8000);
    }

    #[test]
    fn empty_data_chunk() {
        let clip = decode_wav(&pcm16(1, &[])).unwrap();
        assert!(clip.samples.is_empty());
    }

    #[test]
    fn stereo_downmix() {
        let clip = decode_wav(&pcm16(2, &[16384, -16384, 16384, -16384])).unwrap();
        assert_eq!(clip.samples, vec![0.0, 0.0]);
    }

    #[test]
    fn float_round_trip() {
        let clip = AudioClip::new(vec![0.25, -0.5, 0.125], 16000).unwrap();
        let back = decode_wav(&encode_wav_f32(&clip).unwrap()).unwrap();
        assert_eq!(back, clip);
    }

    #[test]
    fn malformed_and_unsupported() {
        assert!(matches!(decode_wav(b"RIFX....WAVE"), Err(Error::Decode(_))));
        assert!(matches!(decode_wav(&[]), Err(Error::Decode(_))));
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 8000,
            bits_per_sample: 8,
            sample_format: hound::SampleFormat::Int,
        };
        let mut buf = Cursor::new(Vec::new());
        let mut w = hound::WavWriter::new(&mut buf, spec).unwrap();
        w.write_sample(3i8).unwrap();
        w.finalize().unwrap();
        assert!(matches!(
            decode_wav(&buf.into_inner()),
            Err(Error::UnsupportedFormat(_))
        ));
    }
}
