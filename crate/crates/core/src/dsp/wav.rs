use std::fs::File;
use std::io::{BufReader, Cursor, Read, Seek};
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::{resample, DspError, Result, Waveform};
use crate::scalar::Real;

fn map_hound(err: hound::Error) -> DspError {
    match err {
        // the underlying file is already open, so read failures mean truncation
        hound::Error::IoError(e) => DspError::CorruptFile(format!("truncated data: {e}")),
        hound::Error::FormatError(msg) => {
            // header-level tags missing means this is not a WAV container at all
            if msg.contains("RIFF") || msg.contains("WAVE") {
                DspError::UnsupportedFormat(msg.to_string())
            } else {
                DspError::CorruptFile(msg.to_string())
            }
        }
        hound::Error::Unsupported => DspError::UnsupportedFormat("unsupported WAV codec".into()),
        hound::Error::TooWide => DspError::UnsupportedFormat("sample width too large".into()),
        hound::Error::UnfinishedSample => DspError::CorruptFile("unfinished sample".into()),
        hound::Error::InvalidSampleFormat => {
            DspError::UnsupportedFormat("invalid sample format".into())
        }
    }
}

fn read_interleaved<R: Read>(reader: WavReader<R>) -> Result<(Vec<f64>, WavSpec)> {
    let spec = reader.spec();
    let data: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(map_hound)?,
        (SampleFormat::Int, bits @ (16 | 24 | 32)) => {
            let scale = 1.0 / f64::from(1u32 << (bits - 1));
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| f64::from(v) * scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(map_hound)?
        }
        (fmt, bits) => {
            return Err(DspError::UnsupportedFormat(format!(
                "{bits}-bit {fmt:?} samples"
            )))
        }
    };
    let channels = usize::from(spec.channels);
    if channels == 0 {
        return Err(DspError::CorruptFile("zero channels".into()));
    }
    if data.len() % channels != 0 {
        return Err(DspError::CorruptFile("partial trailing frame".into()));
    }
    Ok((data, spec))
}

fn decode_reader<S: Real, R: Read>(reader: R, target_rate: u32) -> Result<Waveform<S>> {
    let reader = WavReader::new(reader).map_err(map_hound)?;
    let (data, spec) = read_interleaved(reader)?;
    let channels = usize::from(spec.channels);
    let inv = 1.0 / channels as f64;
    let mono: Vec<f64> = data
        .chunks_exact(channels)
        .map(|frame| (frame.iter().sum::<f64>() * inv).clamp(-1.0, 1.0))
        .collect();
    let wave = Waveform::new(mono, spec.sample_rate)?;
    let wave = if spec.sample_rate == target_rate {
        wave
    } else {
        resample(&wave, target_rate)?
    };
    Ok(wave.convert())
}

/// Reads a WAV file, downmixes to mono by channel mean and resamples to
/// `target_rate`.
pub fn load_wav<S: Real>(path: impl AsRef<Path>, target_rate: u32) -> Result<Waveform<S>> {
    let file = File::open(path.as_ref())?;
    decode_reader(BufReader::new(file), target_rate)
}

pub fn decode_wav<S: Real>(bytes: &[u8], target_rate: u32) -> Result<Waveform<S>> {
    decode_reader(Cursor::new(bytes), target_rate)
}

fn pcm16_spec(sample_rate: u32) -> WavSpec {
    WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    }
}

fn quantize<S: Real>(s: S) -> i16 {
    let v = (s.as_f64().clamp(-1.0, 1.0) * 32768.0).round();
    v.clamp(-32768.0, 32767.0) as i16
}

fn write_into<S: Real, W: std::io::Write + Seek>(wave: &Waveform<S>, sink: W) -> Result<()> {
    let mut writer = WavWriter::new(sink, pcm16_spec(wave.sample_rate())).map_err(map_hound)?;
    for &s in wave.samples() {
        writer.write_sample(quantize(s)).map_err(map_hound)?;
    }
    writer.finalize().map_err(map_hound)
}

/// Mono 16-bit PCM; samples outside [-1, 1] are clipped.
pub fn encode_wav_pcm16<S: Real>(wave: &Waveform<S>) -> Result<Vec<u8>> {
    let mut cursor = Cursor::new(Vec::new());
    write_into(wave, &mut cursor)?;
    Ok(cursor.into_inner())
}

pub fn write_wav_pcm16<S: Real>(wave: &Waveform<S>, path: impl AsRef<Path>) -> Result<()> {
    let bytes = encode_wav_pcm16(wave)?;
    std::fs::write(path, bytes)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stereo_bytes(left: &[i16], right: &[i16], rate: u32) -> Vec<u8> {
        let spec = WavSpec {
            channels: 2,
            sample_rate: rate,
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        };
        let mut cursor = Cursor::new(Vec::new());
        let mut w = WavWriter::new(&mut cursor, spec).unwrap();
        for (&l, &r) in left.iter().zip(right) {
            w.write_sample(l).unwrap();
            w.write_sample(r).unwrap();
        }
        w.finalize().unwrap();
        cursor.into_inner()
    }

    #[test]
    fn antiphase_stereo_downmixes_to_silence() {
        let left: Vec<i16> = (0..1000).map(|i| ((i * 37) % 20000) as i16 - 10000).collect();
        let right: Vec<i16> = left.iter().map(|&v| -v).collect();
        let wave: Waveform<f64> = decode_wav(&stereo_bytes(&left, &right, 16_000), 16_000).unwrap();
        assert_eq!(wave.len(), 1000);
        assert!(wave.samples().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn pcm16_values_are_int_over_32768() {
        let values: Vec<i16> = (0..16_000).map(|i| ((i * 7919) % 65536 - 32768) as i16).collect();
        let mut cursor = Cursor::new(Vec::new());
        let mut w = WavWriter::new(&mut cursor, pcm16_spec(16_000)).unwrap();
        for &v in &values {
            w.write_sample(v).unwrap();
        }
        w.finalize().unwrap();
        let wave: Waveform<f64> = decode_wav(cursor.get_ref(), 16_000).unwrap();
        assert_eq!(wave.len(), 16_000);
        for (&got, &v) in wave.samples().iter().zip(&values) {
            assert_eq!(got, f64::from(v) / 32768.0);
        }
    }

    #[test]
    fn float32_and_pcm24_are_accepted() {
        for (fmt, bits) in [(SampleFormat::Float, 32u16), (SampleFormat::Int, 24)] {
            let spec = WavSpec {
                channels: 1,
                sample_rate: 16_000,
                bits_per_sample: bits,
                sample_format: fmt,
            };
            let mut cursor = Cursor::new(Vec::new());
            let mut w = WavWriter::new(&mut cursor, spec).unwrap();
            for i in 0..100 {
                if fmt == SampleFormat::Float {
                    w.write_sample(i as f32 / 200.0).unwrap();
                } else {
                    w.write_sample(i * 1000).unwrap();
                }
            }
            w.finalize().unwrap();
            let wave: Waveform<f32> = decode_wav(cursor.get_ref(), 16_000).unwrap();
            assert_eq!(wave.len(), 100);
            assert!(wave.samples()[99] > 0.0);
        }
    }

    #[test]
    fn non_wav_is_unsupported() {
        let err = decode_wav::<f32>(b"OggS\0\0\0\0not a riff file at all", 16_000).unwrap_err();
        assert!(matches!(err, DspError::UnsupportedFormat(_)), "{err:?}");
    }

    #[test]
    fn eight_bit_is_unsupported() {
        let spec = WavSpec {
            channels: 1,
            sample_rate: 16_000,
            bits_per_sample: 8,
            sample_format: SampleFormat::Int,
        };
        let mut cursor = Cursor::new(Vec::new());
        let mut w = WavWriter::new(&mut cursor, spec).unwrap();
        for _ in 0..10 {
            w.write_sample(3i8).unwrap();
        }
        w.finalize().unwrap();
        let err = decode_wav::<f32>(cursor.get_ref(), 16_000).unwrap_err();
        assert!(matches!(err, DspError::UnsupportedFormat(_)), "{err:?}");
    }

    #[test]
    fn truncated_data_chunk_is_corrupt() {
        let wave = Waveform::new(vec![0.25f64; 4000], 16_000).unwrap();
        let mut bytes = encode_wav_pcm16(&wave).unwrap();
        bytes.truncate(bytes.len() - 3001);
        let err = decode_wav::<f32>(&bytes, 16_000).unwrap_err();
        assert!(matches!(err, DspError::CorruptFile(_)), "{err:?}");
    }

    #[test]
    fn truncated_header_is_corrupt() {
        let wave = Waveform::new(vec![0.25f64; 40], 16_000).unwrap();
        let bytes = encode_wav_pcm16(&wave).unwrap();
        let err = decode_wav::<f32>(&bytes[..30], 16_000).unwrap_err();
        assert!(
            matches!(err, DspError::CorruptFile(_) | DspError::UnsupportedFormat(_)),
            "{err:?}"
        );
    }

    #[test]
    fn pcm16_writer_round_trips_quantized_values() {
        let samples: Vec<f64> = (0..500).map(|i| ((i - 250) as f64) / 256.0).collect();
        let wave = Waveform::new(samples, 16_000).unwrap();
        let back: Waveform<f64> = decode_wav(&encode_wav_pcm16(&wave).unwrap(), 16_000).unwrap();
        for (a, b) in wave.samples().iter().zip(back.samples()) {
            assert!((a.clamp(-1.0, 1.0) - b).abs() <= 1.0 / 32768.0);
        }
    }
}
