//! Text file formats: trace CSV, spike-train CSV, synapse matrices,
//! network weight files, evaluation reports, and key=value configs.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use relace_core::fixedpoint::{Fixed, QFormat};
use relace_core::hh_neuron::SimTrace;
use relace_core::neural_pool::{SpikeTrain, SynapseMatrix};

use thiserror::Error;

#[derive(Error, Debug)]
pub enum FileFormatError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
}

impl FileFormatError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        FileFormatError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn parse(path: &Path, line: usize, msg: impl Into<String>) -> Self {
        FileFormatError::Parse {
            path: path.display().to_string(),
            line,
            msg: msg.into(),
        }
    }
}

/// Format with 9 significant digits, plain decimal notation.
pub fn fmt_sig(v: f64) -> String {
    const SIG: i32 = 9;
    if v == 0.0 {
        return "0.0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let exponent = v.abs().log10().floor() as i32;
    let decimals = (SIG - 1 - exponent).clamp(0, 17) as usize;
    format!("{v:.decimals$}")
}

/// Write a simulation trace as `t_ms,V_mV,m,h,n,spike` rows.
pub fn write_trace_csv(path: &Path, trace: &SimTrace) -> Result<(), FileFormatError> {
    let f = File::create(path).map_err(|e| FileFormatError::io(path, e))?;
    let mut w = BufWriter::new(f);
    let mut emit = || -> std::io::Result<()> {
        writeln!(w, "t_ms,V_mV,m,h,n,spike")?;
        for k in 0..trace.len() {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                fmt_sig(trace.t_ms[k]),
                fmt_sig(trace.v[k]),
                fmt_sig(trace.m[k]),
                fmt_sig(trace.h[k]),
                fmt_sig(trace.n[k]),
                u8::from(trace.spike[k]),
            )?;
        }
        w.flush()
    };
    emit().map_err(|e| FileFormatError::io(path, e))
}

/// Columns of a trace file read back for comparison.
pub struct TraceColumns {
    pub t_ms: Vec<f64>,
    pub v: Vec<f64>,
    pub spike: Vec<bool>,
}

impl TraceColumns {
    pub fn spike_train(&self) -> SpikeTrain {
        let events: Vec<u32> = self
            .spike
            .iter()
            .enumerate()
            .filter_map(|(i, &s)| if s { Some(i as u32) } else { None })
            .collect();
        SpikeTrain::from_events(vec![events], self.spike.len() as u32)
    }
}

/// Read `t_ms` and `V_mV` (and the spike column when present) back from a
/// trace CSV.
pub fn read_trace_csv(path: &Path) -> Result<TraceColumns, FileFormatError> {
    let f = File::open(path).map_err(|e| FileFormatError::io(path, e))?;
    let reader = BufReader::new(f);
    let mut t_ms = Vec::new();
    let mut v = Vec::new();
    let mut spike = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| FileFormatError::io(path, e))?;
        if idx == 0 {
            if !line.starts_with("t_ms,") {
                return Err(FileFormatError::parse(
                    path,
                    1,
                    format!("expected trace header starting with 't_ms,', got '{line}'"),
                ));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < 2 {
            return Err(FileFormatError::parse(path, idx + 1, "need at least 2 columns"));
        }
        let parse = |s: &str, what: &str| {
            s.trim().parse::<f64>().map_err(|_| {
                FileFormatError::parse(path, idx + 1, format!("bad {what} value '{s}'"))
            })
        };
        t_ms.push(parse(cols[0], "t_ms")?);
        v.push(parse(cols[1], "V_mV")?);
        spike.push(cols.len() >= 6 && cols[5].trim() == "1");
    }
    Ok(TraceColumns { t_ms, v, spike })
}

/// Write a spike train as a `step,neuron_id` event list sorted by step.
pub fn write_spike_train_csv(path: &Path, train: &SpikeTrain) -> Result<(), FileFormatError> {
    let f = File::create(path).map_err(|e| FileFormatError::io(path, e))?;
    let mut w = BufWriter::new(f);
    let mut emit = || -> std::io::Result<()> {
        writeln!(w, "step,neuron_id")?;
        for (step, neuron) in train.sorted_events() {
            writeln!(w, "{step},{neuron}")?;
        }
        w.flush()
    };
    emit().map_err(|e| FileFormatError::io(path, e))
}

/// Write a synapse matrix: `pre post frac_bits` header, then row-major raw
/// integer values, one presynaptic row per line.
pub fn write_matrix_file(path: &Path, m: &SynapseMatrix) -> Result<(), FileFormatError> {
    let f = File::create(path).map_err(|e| FileFormatError::io(path, e))?;
    let mut w = BufWriter::new(f);
    let mut emit = || -> std::io::Result<()> {
        writeln!(
            w,
            "{} {} {}",
            m.pre_count(),
            m.post_count(),
            m.format().frac_bits()
        )?;
        for i in 0..m.pre_count() {
            let row: Vec<String> = m.row(i).iter().map(|f| f.raw().to_string()).collect();
            writeln!(w, "{}", row.join(" "))?;
        }
        w.flush()
    };
    emit().map_err(|e| FileFormatError::io(path, e))
}

/// Read a synapse matrix file written by [`write_matrix_file`]. The word
/// width is twice the stored fractional bit count.
pub fn read_matrix_file(path: &Path) -> Result<SynapseMatrix, FileFormatError> {
    let f = File::open(path).map_err(|e| FileFormatError::io(path, e))?;
    let reader = BufReader::new(f);
    let mut lines = reader.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| FileFormatError::parse(path, 1, "empty file"))?;
    let header = header.map_err(|e| FileFormatError::io(path, e))?;
    let head: Vec<&str> = header.split_whitespace().collect();
    if head.len() != 3 {
        return Err(FileFormatError::parse(
            path,
            1,
            "header must be 'pre post frac_bits'",
        ));
    }
    let pre: usize = head[0]
        .parse()
        .map_err(|_| FileFormatError::parse(path, 1, "bad pre count"))?;
    let post: usize = head[1]
        .parse()
        .map_err(|_| FileFormatError::parse(path, 1, "bad post count"))?;
    let frac: u8 = head[2]
        .parse()
        .map_err(|_| FileFormatError::parse(path, 1, "bad frac_bits"))?;
    let fmt = QFormat::new(frac * 2, frac)
        .map_err(|e| FileFormatError::parse(path, 1, e.to_string()))?;
    let mut weights = Vec::with_capacity(pre * post);
    for (idx, line) in lines {
        let line = line.map_err(|e| FileFormatError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        for tok in line.split_whitespace() {
            let raw: i64 = tok.parse().map_err(|_| {
                FileFormatError::parse(path, idx + 1, format!("bad raw value '{tok}'"))
            })?;
            if raw < fmt.min_raw() || raw > fmt.max_raw() {
                return Err(FileFormatError::parse(
                    path,
                    idx + 1,
                    format!("raw value {raw} outside {}-bit range", fmt.total_bits()),
                ));
            }
            weights.push(Fixed::from_raw(raw, fmt));
        }
    }
    if weights.len() != pre * post {
        return Err(FileFormatError::parse(
            path,
            1,
            format!("expected {} values, found {}", pre * post, weights.len()),
        ));
    }
    Ok(SynapseMatrix::from_fixed(weights, pre, post))
}

/// Raw contents of a network weight file.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightFile {
    pub pre: usize,
    pub hidden: usize,
    pub post: usize,
    pub frac_bits: u8,
    /// Power-of-two physical scale applied to stored raw weights.
    pub scale: f64,
    pub w_in_raw: Vec<i64>,
    pub w_out_raw: Vec<i64>,
}

const WEIGHT_MAGIC: &str = "relace-w";
const WEIGHT_VERSION: &str = "v1";

/// Write a `relace-w v1 <pre> <hidden> <post> <frac_bits> <scale>` weight
/// file followed by both matrices in row-major integer text.
pub fn write_weight_file(path: &Path, wf: &WeightFile) -> Result<(), FileFormatError> {
    let f = File::create(path).map_err(|e| FileFormatError::io(path, e))?;
    let mut w = BufWriter::new(f);
    let mut emit = || -> std::io::Result<()> {
        writeln!(
            w,
            "{WEIGHT_MAGIC} {WEIGHT_VERSION} {} {} {} {} {}",
            wf.pre, wf.hidden, wf.post, wf.frac_bits, wf.scale
        )?;
        for row in wf.w_in_raw.chunks(wf.hidden) {
            let cells: Vec<String> = row.iter().map(i64::to_string).collect();
            writeln!(w, "{}", cells.join(" "))?;
        }
        for row in wf.w_out_raw.chunks(wf.post) {
            let cells: Vec<String> = row.iter().map(i64::to_string).collect();
            writeln!(w, "{}", cells.join(" "))?;
        }
        w.flush()
    };
    emit().map_err(|e| FileFormatError::io(path, e))
}

pub fn read_weight_file(path: &Path) -> Result<WeightFile, FileFormatError> {
    let f = File::open(path).map_err(|e| FileFormatError::io(path, e))?;
    let reader = BufReader::new(f);
    let mut lines = reader.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| FileFormatError::parse(path, 1, "empty file"))?;
    let header = header.map_err(|e| FileFormatError::io(path, e))?;
    let head: Vec<&str> = header.split_whitespace().collect();
    if head.len() != 7 || head[0] != WEIGHT_MAGIC || head[1] != WEIGHT_VERSION {
        return Err(FileFormatError::parse(
            path,
            1,
            format!("expected '{WEIGHT_MAGIC} {WEIGHT_VERSION} <pre> <hidden> <post> <frac_bits> <scale>'"),
        ));
    }
    let parse_usize = |s: &str, what: &str| {
        s.parse::<usize>()
            .map_err(|_| FileFormatError::parse(path, 1, format!("bad {what} '{s}'")))
    };
    let pre = parse_usize(head[2], "pre")?;
    let hidden = parse_usize(head[3], "hidden")?;
    let post = parse_usize(head[4], "post")?;
    let frac_bits: u8 = head[5]
        .parse()
        .map_err(|_| FileFormatError::parse(path, 1, "bad frac_bits"))?;
    let scale: f64 = head[6]
        .parse()
        .map_err(|_| FileFormatError::parse(path, 1, "bad scale"))?;
    if !(scale > 0.0) || !scale.is_finite() || scale.log2().fract() != 0.0 {
        return Err(FileFormatError::parse(
            path,
            1,
            format!("scale must be a positive power of two, got {scale}"),
        ));
    }
    let fmt = QFormat::new(frac_bits * 2, frac_bits)
        .map_err(|e| FileFormatError::parse(path, 1, e.to_string()))?;
    let mut values = Vec::with_capacity(pre * hidden + hidden * post);
    for (idx, line) in lines {
        let line = line.map_err(|e| FileFormatError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        for tok in line.split_whitespace() {
            let raw: i64 = tok.parse().map_err(|_| {
                FileFormatError::parse(path, idx + 1, format!("bad raw value '{tok}'"))
            })?;
            if raw < fmt.min_raw() || raw > fmt.max_raw() {
                return Err(FileFormatError::parse(
                    path,
                    idx + 1,
                    format!("raw value {raw} outside {}-bit range", fmt.total_bits()),
                ));
            }
            values.push(raw);
        }
    }
    let expected = pre * hidden + hidden * post;
    if values.len() != expected {
        return Err(FileFormatError::parse(
            path,
            1,
            format!("expected {expected} weight values, found {}", values.len()),
        ));
    }
    let w_out_raw = values.split_off(pre * hidden);
    Ok(WeightFile {
        pre,
        hidden,
        post,
        frac_bits,
        scale,
        w_in_raw: values,
        w_out_raw,
    })
}

impl WeightFile {
    /// Expand the stored low-precision weights into runtime matrices in the
    /// given datapath format. Stored raw * scale * 2^-frac is the physical
    /// weight; with a power-of-two scale the expansion is an exact shift.
    pub fn expand(&self, datapath: QFormat) -> (SynapseMatrix, SynapseMatrix) {
        let k = self.scale.log2() as i32;
        let shift = datapath.frac_bits() as i32 - self.frac_bits as i32 + k;
        let widen = |raw: i64| -> Fixed {
            let wide = if shift >= 0 {
                (raw as i128) << shift as u32
            } else {
                // negative shifts round to nearest, half away from zero
                let s = (-shift) as u32;
                let half = 1i128 << (s - 1);
                ((raw as i128) + if raw < 0 { -half } else { half }) >> s
            };
            let clamped = wide.clamp(datapath.min_raw() as i128, datapath.max_raw() as i128);
            Fixed::from_raw(clamped as i64, datapath)
        };
        let w_in = SynapseMatrix::from_fixed(
            self.w_in_raw.iter().map(|&r| widen(r)).collect(),
            self.pre,
            self.hidden,
        );
        let w_out = SynapseMatrix::from_fixed(
            self.w_out_raw.iter().map(|&r| widen(r)).collect(),
            self.hidden,
            self.post,
        );
        (w_in, w_out)
    }
}

/// One evaluation row: index, truth, prediction, and per-class counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalRow {
    pub image_index: usize,
    pub label: u8,
    pub prediction: u8,
    pub counts: [u32; 10],
}

/// Write the evaluation report CSV.
pub fn write_eval_report(path: &Path, rows: &[EvalRow]) -> Result<(), FileFormatError> {
    let f = File::create(path).map_err(|e| FileFormatError::io(path, e))?;
    let mut w = BufWriter::new(f);
    let mut emit = || -> std::io::Result<()> {
        write!(w, "image_index,label,prediction,correct")?;
        for k in 0..10 {
            write!(w, ",count_{k}")?;
        }
        writeln!(w)?;
        for r in rows {
            write!(
                w,
                "{},{},{},{}",
                r.image_index,
                r.label,
                r.prediction,
                u8::from(r.label == r.prediction)
            )?;
            for c in r.counts {
                write!(w, ",{c}")?;
            }
            writeln!(w)?;
        }
        w.flush()
    };
    emit().map_err(|e| FileFormatError::io(path, e))
}

/// Write `metric,value` rows.
pub fn write_kv_csv(path: &Path, rows: &[(String, String)]) -> Result<(), FileFormatError> {
    let f = File::create(path).map_err(|e| FileFormatError::io(path, e))?;
    let mut w = BufWriter::new(f);
    let mut emit = || -> std::io::Result<()> {
        writeln!(w, "metric,value")?;
        for (k, v) in rows {
            writeln!(w, "{k},{v}")?;
        }
        w.flush()
    };
    emit().map_err(|e| FileFormatError::io(path, e))
}

/// Parse a `key=value` config file; `#` starts a comment line.
pub fn parse_kv_file(path: &Path) -> Result<Vec<(String, String)>, FileFormatError> {
    let f = File::open(path).map_err(|e| FileFormatError::io(path, e))?;
    let reader = BufReader::new(f);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| FileFormatError::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (k, v) = trimmed.split_once('=').ok_or_else(|| {
            FileFormatError::parse(path, idx + 1, format!("expected key=value, got '{trimmed}'"))
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use relace_core::fixedpoint::Q16_16;
    use relace_core::hh_neuron::{simulate, NeuronParams, SimBackend};

    #[test]
    fn sig_digit_formatting() {
        assert_eq!(fmt_sig(1.0), "1.00000000");
        assert_eq!(fmt_sig(-65.0), "-65.0000000");
        assert_eq!(fmt_sig(0.052932485), "0.0529324850");
        assert_eq!(fmt_sig(0.0), "0.0");
        assert_eq!(fmt_sig(123456.789), "123457");
    }

    #[test]
    fn trace_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let tr = simulate(
            &NeuronParams::default(),
            &[10.0; 500],
            500,
            SimBackend::Float64Ref,
        )
        .unwrap();
        write_trace_csv(&path, &tr).unwrap();
        let cols = read_trace_csv(&path).unwrap();
        assert_eq!(cols.v.len(), 500);
        assert!((cols.v[499] - tr.v[499]).abs() < 1e-6);
        assert_eq!(
            cols.spike.iter().filter(|&&s| s).count(),
            tr.spike_count()
        );
    }

    #[test]
    fn trace_header_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "step,neuron\n1,2\n").unwrap();
        assert!(read_trace_csv(&path).is_err());
    }

    #[test]
    fn matrix_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.mat");
        let mut m = SynapseMatrix::zeros(3, 2, Q16_16);
        m.set(0, 1, Fixed::from_real(1.5, Q16_16));
        m.set(2, 0, Fixed::from_real(-0.25, Q16_16));
        write_matrix_file(&path, &m).unwrap();
        let back = read_matrix_file(&path).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn weight_file_roundtrip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.rw");
        let wf = WeightFile {
            pre: 4,
            hidden: 3,
            post: 2,
            frac_bits: 8,
            scale: 4.0,
            w_in_raw: (0..12).map(|i| i - 6).collect(),
            w_out_raw: (0..6).map(|i| i * 10).collect(),
        };
        write_weight_file(&path, &wf).unwrap();
        let back = read_weight_file(&path).unwrap();
        assert_eq!(back, wf);

        // raw * scale * 2^-frac, expanded at Q16.16
        let (w_in, _) = back.expand(Q16_16);
        let expected = -6.0 * 4.0 / 256.0;
        assert!((w_in.get(0, 0).to_real() - expected).abs() < 1e-9);

        std::fs::write(&path, "relace-w v2 4 3 2 8 4\n").unwrap();
        assert!(read_weight_file(&path).is_err());
        std::fs::write(&path, "relace-w v1 1 1 1 8 3\n0\n0\n").unwrap();
        let err = read_weight_file(&path).unwrap_err().to_string();
        assert!(err.contains("power of two"), "{err}");
    }

    #[test]
    fn kv_file_parsing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "# comment\ndt=0.01\nformat = q16.16\n").unwrap();
        let kv = parse_kv_file(&path).unwrap();
        assert_eq!(kv[0], ("dt".to_string(), "0.01".to_string()));
        assert_eq!(kv[1], ("format".to_string(), "q16.16".to_string()));
        std::fs::write(&path, "nonsense line\n").unwrap();
        assert!(parse_kv_file(&path).is_err());
    }
}
