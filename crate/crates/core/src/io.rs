//! WAV files, gap-mask files and the results CSV.
//!
//! Mask files are TOML:
//!
//! ```toml
//! version = 1
//! signal_length = 308700
//! sample_rate = 44100
//!
//! [[gaps]]
//! start = 15811
//! length = 441
//! ```
//!
//! Indices are 0-based sample positions.

use std::cmp::Ordering;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::EvalRecord;
use crate::signal::{Gap, GapMask, Signal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WavEncoding {
    Pcm16,
    #[default]
    Float32,
}

impl std::str::FromStr for WavEncoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pcm16" => Ok(WavEncoding::Pcm16),
            "float32" => Ok(WavEncoding::Float32),
            other => Err(Error::Config(format!("unknown encoding `{other}` (expected pcm16 or float32)"))),
        }
    }
}

fn wav_error(e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::Io(io),
        other => Error::Format(other.to_string()),
    }
}

/// Reads a 16-bit integer or 32-bit float WAV file as a mono signal.
/// Multi-channel files are averaged when `downmix` is set and rejected
/// otherwise.
pub fn read_wav(path: impl AsRef<Path>, downmix: bool) -> Result<Signal> {
    let reader = hound::WavReader::open(path.as_ref()).map_err(wav_error)?;
    let spec = reader.spec();
    if spec.channels > 1 && !downmix {
        return Err(Error::Channels {
            channels: spec.channels,
        });
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| f64::from(v) / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(wav_error)?,
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(wav_error)?,
        (format, bits) => {
            return Err(Error::Format(format!(
                "{bits}-bit {} samples (supported: 16-bit integer, 32-bit float)",
                match format {
                    hound::SampleFormat::Int => "integer",
                    hound::SampleFormat::Float => "float",
                }
            )))
        }
    };
    let channels = usize::from(spec.channels);
    let samples = if channels == 1 {
        interleaved
    } else {
        interleaved
            .chunks_exact(channels)
            .map(|frame| frame.iter().sum::<f64>() / channels as f64)
            .collect()
    };
    Signal::new(samples, spec.sample_rate)
}

/// Largest value representable in 16-bit PCM after scaling by 32768.
const PCM16_MAX: f64 = 1.0 - 1.0 / 32768.0;

pub fn pcm16_value(sample: f64) -> i16 {
    (sample.clamp(-1.0, PCM16_MAX) * 32768.0).round() as i16
}

pub fn write_wav(signal: &Signal, path: impl AsRef<Path>, encoding: WavEncoding) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate(),
        bits_per_sample: match encoding {
            WavEncoding::Pcm16 => 16,
            WavEncoding::Float32 => 32,
        },
        sample_format: match encoding {
            WavEncoding::Pcm16 => hound::SampleFormat::Int,
            WavEncoding::Float32 => hound::SampleFormat::Float,
        },
    };
    let mut writer = hound::WavWriter::create(path.as_ref(), spec).map_err(wav_error)?;
    for &s in signal.samples() {
        match encoding {
            WavEncoding::Pcm16 => writer.write_sample(pcm16_value(s)),
            WavEncoding::Float32 => writer.write_sample(s as f32),
        }
        .map_err(wav_error)?;
    }
    writer.finalize().map_err(wav_error)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaskDocument {
    version: u32,
    signal_length: usize,
    sample_rate: u32,
    #[serde(default)]
    gaps: Vec<Gap>,
}

pub const MASK_FORMAT_VERSION: u32 = 1;

/// A gap mask together with the sample rate it was generated for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskFile {
    pub mask: GapMask,
    pub sample_rate: u32,
}

pub fn parse_mask(text: &str) -> Result<MaskFile> {
    let doc: MaskDocument = toml::from_str(text).map_err(|e| Error::InvalidMask(e.to_string()))?;
    if doc.version != MASK_FORMAT_VERSION {
        return Err(Error::InvalidMask(format!(
            "unsupported mask version {} (expected {MASK_FORMAT_VERSION})",
            doc.version
        )));
    }
    Ok(MaskFile {
        mask: GapMask::new(doc.gaps, doc.signal_length)?,
        sample_rate: doc.sample_rate,
    })
}

pub fn format_mask(mask: &GapMask, sample_rate: u32) -> String {
    let doc = MaskDocument {
        version: MASK_FORMAT_VERSION,
        signal_length: mask.signal_length(),
        sample_rate,
        gaps: mask.gaps().to_vec(),
    };
    toml::to_string(&doc).expect("mask document always serializes")
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<MaskFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_mask(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn write_mask(mask: &GapMask, sample_rate: u32, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_mask(mask, sample_rate))?;
    Ok(())
}

pub const RESULTS_HEADER: [&str; 8] = [
    "signal_id",
    "method",
    "estimator",
    "order",
    "gap_length_ms",
    "gap_index",
    "sdr_db",
    "elapsed_s",
];

/// Shortest round-trip decimal; infinities as `inf`/`-inf`, NaN as `nan`.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        v.to_string()
    }
}

fn record_fields(r: &EvalRecord) -> [String; 8] {
    [
        r.signal_id.clone(),
        r.method.clone(),
        r.estimator.clone(),
        r.order.to_string(),
        format_float(r.gap_length_ms),
        r.gap_index.to_string(),
        format_float(r.sdr_db),
        format_float(r.elapsed_s),
    ]
}

/// Ordering on all key columns (everything except SDR and timing).
pub fn compare_records(a: &EvalRecord, b: &EvalRecord) -> Ordering {
    a.signal_id
        .cmp(&b.signal_id)
        .then_with(|| a.method.cmp(&b.method))
        .then_with(|| a.estimator.cmp(&b.estimator))
        .then_with(|| a.order.cmp(&b.order))
        .then_with(|| a.gap_length_ms.total_cmp(&b.gap_length_ms))
        .then_with(|| a.gap_index.cmp(&b.gap_index))
}

fn csv_writer<W: Write>(inner: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(inner)
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("{other:?}")),
    }
}

/// Writes header and rows sorted by the key columns.
pub fn write_results_to<W: Write>(records: &[EvalRecord], out: W) -> Result<()> {
    let mut sorted: Vec<&EvalRecord> = records.iter().collect();
    sorted.sort_by(|a, b| compare_records(a, b));
    let mut w = csv_writer(out);
    w.write_record(RESULTS_HEADER).map_err(csv_error)?;
    for r in sorted {
        w.write_record(record_fields(r)).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_results(records: &[EvalRecord], path: impl AsRef<Path>) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    write_results_to(records, file)
}

pub fn read_results(path: impl AsRef<Path>) -> Result<Vec<EvalRecord>> {
    let path = path.as_ref();
    let parse_err = |message: String| Error::Parse {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(csv_error)?;
    let header = reader.headers().map_err(csv_error)?;
    if header.iter().ne(RESULTS_HEADER) {
        return Err(parse_err(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut records = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(csv_error)?;
        let field = |i: usize| row.get(i).unwrap_or_default();
        let num = |i: usize| {
            field(i)
                .parse::<f64>()
                .map_err(|e| parse_err(format!("row {}: column {}: {e}", line + 1, RESULTS_HEADER[i])))
        };
        let int = |i: usize| {
            field(i)
                .parse::<usize>()
                .map_err(|e| parse_err(format!("row {}: column {}: {e}", line + 1, RESULTS_HEADER[i])))
        };
        records.push(EvalRecord {
            signal_id: field(0).to_string(),
            method: field(1).to_string(),
            estimator: field(2).to_string(),
            order: int(3)?,
            gap_length_ms: num(4)?,
            gap_index: int(5)?,
            sdr_db: num(6)?,
            elapsed_s: num(7)?,
        });
    }
    Ok(records)
}

/// Appends rows to a results file as they become available, writing the
/// header first if the file is new or empty.
pub struct ResultsAppender {
    writer: csv::Writer<File>,
}

impl ResultsAppender {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        let fresh = file.metadata()?.len() == 0;
        let mut writer = csv_writer(file);
        if fresh {
            writer.write_record(RESULTS_HEADER).map_err(csv_error)?;
            writer.flush()?;
        }
        Ok(Self { writer })
    }

    pub fn append(&mut self, records: &[EvalRecord]) -> Result<()> {
        for r in records {
            self.writer.write_record(record_fields(r)).map_err(csv_error)?;
        }
        self.writer.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, gap_index: usize, sdr_db: f64) -> EvalRecord {
        EvalRecord {
            signal_id: id.into(),
            method: "gapwise".into(),
            estimator: "burg".into(),
            order: 32,
            gap_length_ms: 20.0,
            gap_index,
            sdr_db,
            elapsed_s: 0.0,
        }
    }

    #[test]
    fn pcm16_scaling_rules() {
        assert_eq!(pcm16_value(1.5), 32767);
        assert_eq!(pcm16_value(-1.0), -32768);
        assert_eq!(pcm16_value(0.5), 16384);
        assert_eq!(pcm16_value(-3.0), -32768);
    }

    #[test]
    fn pcm16_round_trip_scaling() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.wav");
        let s = Signal::new(vec![0.5, -1.0, 1.5, 0.0], 44100).unwrap();
        write_wav(&s, &path, WavEncoding::Pcm16).unwrap();
        let back = read_wav(&path, false).unwrap();
        assert_eq!(back.samples(), &[0.5, -1.0, 32767.0 / 32768.0, 0.0]);
        assert_eq!(back.sample_rate(), 44100);
    }

    #[test]
    fn rejects_24_bit_and_stereo() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("24.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 8000,
            bits_per_sample: 24,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(&path, spec).unwrap();
        w.write_sample(1000i32).unwrap();
        w.finalize().unwrap();
        assert!(matches!(read_wav(&path, false), Err(Error::Format(_))));

        let path = dir.path().join("st.wav");
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: 8000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(&path, spec).unwrap();
        for v in [16384i16, 0, -16384, -16384] {
            w.write_sample(v).unwrap();
        }
        w.finalize().unwrap();
        assert!(matches!(read_wav(&path, false), Err(Error::Channels { channels: 2 })));
        assert_eq!(read_wav(&path, true).unwrap().samples(), &[0.25, -0.5]);
    }

    #[test]
    fn mask_text_format() {
        let mask = GapMask::new(vec![Gap::new(100, 441), Gap::new(9000, 441)], 20000).unwrap();
        let text = format_mask(&mask, 44100);
        assert!(text.starts_with("version = 1\n"));
        let back = parse_mask(&text).unwrap();
        assert_eq!(back.mask, mask);
        assert_eq!(back.sample_rate, 44100);

        let empty = parse_mask("version = 1\nsignal_length = 10\nsample_rate = 8000\ngaps = []\n").unwrap();
        assert!(empty.mask.gaps().is_empty());
        let missing_list = parse_mask("version = 1\nsignal_length = 10\nsample_rate = 8000\n").unwrap();
        assert!(missing_list.mask.gaps().is_empty());
    }

    #[test]
    fn mask_validation_errors() {
        let beyond = "version = 1\nsignal_length = 10\nsample_rate = 8000\n[[gaps]]\nstart = 8\nlength = 5\n";
        let err = parse_mask(beyond).unwrap_err().to_string();
        assert!(err.contains("gap 0"), "{err}");

        let overlap = "version = 1\nsignal_length = 100\nsample_rate = 8000\n\
                       [[gaps]]\nstart = 10\nlength = 5\n[[gaps]]\nstart = 12\nlength = 5\n";
        let err = parse_mask(overlap).unwrap_err().to_string();
        assert!(err.contains("gap 1"), "{err}");

        let version = "version = 2\nsignal_length = 10\nsample_rate = 8000\n";
        assert!(parse_mask(version).is_err());
    }

    #[test]
    fn results_csv_layout() {
        let mut out = Vec::new();
        write_results_to(&[record("a", 0, f64::INFINITY)], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(
            text,
            "signal_id,method,estimator,order,gap_length_ms,gap_index,sdr_db,elapsed_s\n\
             a,gapwise,burg,32,20,0,inf,0\n"
        );
    }

    #[test]
    fn results_sorted_and_reparsed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let rows = vec![record("b", 1, 3.25), record("a", 1, f64::NAN), record("b", 0, 12.0)];
        write_results(&rows, &path).unwrap();
        let back = read_results(&path).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!((back[0].signal_id.as_str(), back[0].gap_index), ("a", 1));
        assert!(back[0].sdr_db.is_nan());
        assert_eq!(back[1].sdr_db, 12.0);
        assert_eq!(back[2].sdr_db, 3.25);

        let first = std::fs::read(&path).unwrap();
        write_results(&back, &path).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), first);
    }

    #[test]
    fn appender_writes_header_once() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        ResultsAppender::open(&path).unwrap().append(&[record("a", 0, 1.0)]).unwrap();
        ResultsAppender::open(&path).unwrap().append(&[record("a", 1, 2.0)]).unwrap();
        let back = read_results(&path).unwrap();
        assert_eq!(back.len(), 2);
    }
}
