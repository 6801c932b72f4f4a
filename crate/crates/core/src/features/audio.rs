use std::io::Cursor;

use super::FeatureError;

/// Mono PCM audio with samples scaled to [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate_hz: u32,
    /// Channel count of the source container; only channel 0 is kept.
    source_channels: u16,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self, FeatureError> {
        if sample_rate_hz == 0 {
            return Err(FeatureError::ZeroSampleRate);
        }
        if let Some((index, &value)) = samples
            .iter()
            .enumerate()
            .find(|(_, s)| !(-1.0..=1.0).contains(*s))
        {
            return Err(FeatureError::SampleOutOfRange { index, value });
        }
        Ok(Self {
            samples,
            sample_rate_hz,
            source_channels: 1,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn source_channels(&self) -> u16 {
        self.source_channels
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate_hz)
    }
}

/// Decodes a RIFF/WAVE byte stream holding 16-bit signed linear PCM.
///
/// Multi-channel files keep channel 0 only. Raw values are divided by
/// 32768, so -32768 maps to exactly -1.0.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioClip, FeatureError> {
    let reader = hound::WavReader::new(Cursor::new(bytes)).map_err(map_hound_error)?;
    let spec = reader.spec();
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(FeatureError::UnsupportedEncoding(format!(
            "{:?} with {} bits per sample; expected 16-bit integer PCM",
            spec.sample_format, spec.bits_per_sample
        )));
    }
    if spec.sample_rate == 0 {
        return Err(FeatureError::ZeroSampleRate);
    }
    let channels = usize::from(spec.channels.max(1));
    let mut samples = Vec::with_capacity(reader.len() as usize / channels);
    for (i, raw) in reader.into_samples::<i16>().enumerate() {
        let raw = raw.map_err(map_hound_error)?;
        if i % channels == 0 {
            samples.push(f64::from(raw) / 32768.0);
        }
    }
    if samples.is_empty() {
        return Err(FeatureError::EmptyAudio);
    }
    Ok(AudioClip {
        samples,
        sample_rate_hz: spec.sample_rate,
        source_channels: spec.channels,
    })
}

/// Encodes a clip as mono 16-bit PCM WAV.
pub fn encode_wav(clip: &AudioClip) -> Vec<u8> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate_hz,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut out = Cursor::new(Vec::with_capacity(44 + clip.len() * 2));
    {
        let mut writer = hound::WavWriter::new(&mut out, spec).expect("in-memory WAV header");
        for &s in &clip.samples {
            let raw = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
            writer.write_sample(raw).expect("in-memory WAV write");
        }
        writer.finalize().expect("in-memory WAV finalize");
    }
    out.into_inner()
}

fn map_hound_error(err: hound::Error) -> FeatureError {
    match err {
        hound::Error::Unsupported => {
            FeatureError::UnsupportedEncoding("unsupported WAV format".into())
        }
        hound::Error::FormatError(msg) => FeatureError::MalformedContainer(msg.to_string()),
        hound::Error::IoError(e) => FeatureError::MalformedContainer(e.to_string()),
        other => FeatureError::MalformedContainer(other.to_string()),
    }
}
