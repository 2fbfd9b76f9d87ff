//! Session CSV ingestion and table writers.
//!
//! Sessions are stored as `t,inner_uV,outer_uV[,trigger][,c_uV,r_uV]`. The
//! time column is informative only. Microvolt cells are converted to volts by
//! shifting the decimal exponent in the text, so a written file reads back
//! to the identical `f64` values.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::analysis::{FilterId, Periodogram, SnrReport};
use crate::error::{Error, Result};
use crate::pipeline::{FilterKind, WeightSample};
use crate::simulator::SimSession;
use crate::types::RecordingSession;

/// A session plus any ground-truth columns found in the file.
#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub session: RecordingSession,
    pub c: Option<Vec<f64>>,
    pub r: Option<Vec<f64>>,
}

/// Moves the decimal exponent of a numeric literal by `shift`.
fn shift_exponent(cell: &str, shift: i32) -> Option<f64> {
    let cell = cell.trim();
    let (mantissa, exp) = match cell.find(['e', 'E']) {
        Some(i) => (&cell[..i], cell[i + 1..].parse::<i32>().ok()?),
        None => (cell, 0),
    };
    if mantissa.is_empty()
        || !mantissa
            .bytes()
            .all(|b| b.is_ascii_digit() || b"+-.".contains(&b))
    {
        return None;
    }
    let v: f64 = format!("{mantissa}e{}", exp + shift).parse().ok()?;
    v.is_finite().then_some(v)
}

/// Formats volts as a microvolt literal that reads back exactly.
pub fn format_microvolts(volts: f64) -> String {
    let s = format!("{volts:e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    match exp + 6 {
        0 => mantissa.to_string(),
        e => format!("{mantissa}e{e}"),
    }
}

pub fn parse_microvolts(cell: &str) -> Option<f64> {
    shift_exponent(cell, -6)
}

fn ingest_error(line: u64, message: impl Into<String>) -> Error {
    Error::Ingest {
        line,
        message: message.into(),
    }
}

/// Reads a session CSV from any reader.
pub fn read_session<R: Read>(reader: R, sample_rate_hz: f64, label: &str) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| ingest_error(1, format!("unreadable header: {e}")))?
        .clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let col_inner = find("inner_uV").ok_or_else(|| ingest_error(1, "missing column `inner_uV`"))?;
    let col_outer = find("outer_uV").ok_or_else(|| ingest_error(1, "missing column `outer_uV`"))?;
    if find("t").is_none() {
        return Err(ingest_error(1, "missing column `t`"));
    }
    let col_trigger = find("trigger");
    let col_c = find("c_uV");
    let col_r = find("r_uV");
    let width = headers.len();

    let mut inner = Vec::new();
    let mut outer = Vec::new();
    let mut triggers = Vec::new();
    let mut c = Vec::new();
    let mut r = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let record = record.map_err(|e| ingest_error(line, e.to_string()))?;
        let line = record.position().map_or(line, |p| p.line());
        if record.len() != width {
            return Err(ingest_error(
                line,
                format!("ragged row: {} fields, header has {width}", record.len()),
            ));
        }
        let volts = |col: usize| {
            parse_microvolts(&record[col]).ok_or_else(|| {
                ingest_error(
                    line,
                    format!(
                        "non-numeric cell `{}` in column `{}`",
                        &record[col], &headers[col]
                    ),
                )
            })
        };
        inner.push(volts(col_inner)?);
        outer.push(volts(col_outer)?);
        if let Some(col) = col_c {
            c.push(volts(col)?);
        }
        if let Some(col) = col_r {
            r.push(volts(col)?);
        }
        if let Some(col) = col_trigger {
            let flag: f64 = record[col].parse().map_err(|_| {
                ingest_error(line, format!("non-numeric trigger `{}`", &record[col]))
            })?;
            if flag != 0.0 {
                triggers.push(inner.len() - 1);
            }
        }
    }
    let mut session = RecordingSession::new(sample_rate_hz, inner, outer, label);
    if col_trigger.is_some() {
        session = session.with_triggers(triggers);
    }
    let session = session.validate()?;
    Ok(Ingested {
        session,
        c: col_c.map(|_| c),
        r: col_r.map(|_| r),
    })
}

/// Reads a session CSV from disk, labelling it with the file stem.
pub fn ingest(path: &Path, sample_rate_hz: f64) -> Result<Ingested> {
    let file = File::open(path)
        .map_err(|e| ingest_error(0, format!("cannot open {}: {e}", path.display())))?;
    let label = path
        .file_stem()
        .map_or_else(|| "session".into(), |s| s.to_string_lossy().into_owned());
    read_session(file, sample_rate_hz, &label)
}

/// Writes a session, with ground truth when given.
pub fn write_session<W: Write>(
    out: W,
    session: &RecordingSession,
    truth: Option<(&[f64], &[f64])>,
) -> Result<()> {
    let mut w = BufWriter::new(out);
    let has_triggers = session.triggers.is_some();
    let mut header = String::from("t,inner_uV,outer_uV");
    if has_triggers {
        header.push_str(",trigger");
    }
    if truth.is_some() {
        header.push_str(",c_uV,r_uV");
    }
    writeln!(w, "{header}")?;
    let mut flags = vec![false; session.len()];
    for &t in session.triggers.iter().flatten() {
        flags[t] = true;
    }
    for i in 0..session.len() {
        let t = i as f64 / session.sample_rate_hz;
        write!(
            w,
            "{t},{},{}",
            format_microvolts(session.inner[i]),
            format_microvolts(session.outer[i])
        )?;
        if has_triggers {
            write!(w, ",{}", u8::from(flags[i]))?;
        }
        if let Some((c, r)) = truth {
            write!(
                w,
                ",{},{}",
                format_microvolts(c[i]),
                format_microvolts(r[i])
            )?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sim_session(path: &Path, sim: &SimSession) -> Result<()> {
    write_session(File::create(path)?, &sim.session, Some((&sim.c, &sim.r)))
}

/// One row of the SNR table.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrRow {
    pub subject: String,
    pub report: SnrReport,
    pub delta_db: f64,
}

pub fn write_snr_table<W: Write>(out: W, rows: &[SnrRow]) -> Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "subject,filter,signal_power,noise_power,snr_db,delta_db")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.subject,
            r.report.filter_id,
            r.report.signal_power,
            r.report.noise_power,
            r.report.snr_db,
            r.delta_db
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Periodograms in long form: `subject,filter,hz,density`.
pub fn write_psd_table<W: Write>(out: W, rows: &[(String, FilterId, &Periodogram)]) -> Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "subject,filter,hz,density")?;
    for (subject, id, p) in rows {
        for (k, d) in p.density.iter().enumerate() {
            writeln!(w, "{subject},{id},{},{d}", p.frequency(k))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Weight distances in long form: `subject,filter,sample,layer,distance`.
pub fn write_weights_table<W: Write>(
    out: W,
    rows: &[(String, FilterKind, &[WeightSample])],
) -> Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "subject,filter,sample,layer,distance")?;
    for (subject, kind, trace) in rows {
        for s in trace.iter() {
            for (layer, d) in s.distances.iter().enumerate() {
                writeln!(w, "{subject},{kind},{},{layer},{d}", s.sample)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Named time series of equal length, written column-wise with a time axis.
pub fn write_signals_table<W: Write>(
    out: W,
    sample_rate_hz: f64,
    columns: &[(&str, &[f64])],
) -> Result<()> {
    let mut w = BufWriter::new(out);
    let len = columns.iter().map(|(_, v)| v.len()).min().unwrap_or(0);
    let names: Vec<&str> = columns.iter().map(|(n, _)| *n).collect();
    writeln!(w, "t,{}", names.join(","))?;
    for i in 0..len {
        write!(w, "{}", i as f64 / sample_rate_hz)?;
        for (_, v) in columns {
            write!(w, ",{}", v[i])?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn microvolt_conversion() {
        assert_eq!(parse_microvolts("12.5"), Some(12.5e-6));
        assert_eq!(parse_microvolts("-3e2"), Some(-3e-4));
        assert_eq!(parse_microvolts(" 0 "), Some(0.0));
        assert_eq!(parse_microvolts("abc"), None);
        assert_eq!(parse_microvolts("inf"), None);
        assert_eq!(parse_microvolts(""), None);
        assert_eq!(format_microvolts(12.5e-6), "1.25e1");
        assert_eq!(format_microvolts(1e-6), "1");
        assert_eq!(format_microvolts(0.0), "0e6");
    }

    proptest! {
        #[test]
        fn microvolt_round_trip_is_exact(v in -1.0f64..1.0) {
            prop_assert_eq!(parse_microvolts(&format_microvolts(v)), Some(v));
        }

        #[test]
        fn microvolt_round_trip_tiny(m in -1.0f64..1.0, e in -300i32..-10) {
            let v = m * 10f64.powi(e);
            prop_assert_eq!(parse_microvolts(&format_microvolts(v)), Some(v));
        }
    }

    #[test]
    fn reads_three_rows() {
        let text = "t,inner_uV,outer_uV\n0,1,2\n0.004,3,4\n0.008,5,6\n";
        let s = read_session(text.as_bytes(), 250.0, "x").unwrap().session;
        assert_eq!(s.len(), 3);
        assert_eq!(s.inner, vec![1e-6, 3e-6, 5e-6]);
        assert_eq!(s.outer[2], 6e-6);
        assert!(s.triggers.is_none());
    }

    #[test]
    fn reads_triggers_and_truth() {
        let text = "t,inner_uV,outer_uV,trigger,c_uV,r_uV\n0,1,2,0,0.5,0.5\n1,3,4,1,1,2\n";
        let s = read_session(text.as_bytes(), 250.0, "x").unwrap();
        assert_eq!(s.session.triggers, Some(vec![1]));
        assert_eq!(s.c, Some(vec![0.5e-6, 1e-6]));
    }

    fn ingest_line(text: &str) -> (u64, String) {
        match read_session(text.as_bytes(), 250.0, "x") {
            Err(Error::Ingest { line, message }) => (line, message),
            other => panic!("expected ingest error, got {other:?}"),
        }
    }

    #[test]
    fn schema_errors_carry_line_numbers() {
        let (line, msg) = ingest_line("t,inner_uV\n0,1\n");
        assert_eq!(line, 1);
        assert!(msg.contains("outer_uV"));
        let (line, msg) = ingest_line("t,inner_uV,outer_uV\n0,1,2\n0,1\n");
        assert_eq!(line, 3);
        assert!(msg.contains("ragged"));
        let (line, msg) = ingest_line("t,inner_uV,outer_uV\n0,1,2\n0,1,2\n0,x,2\n");
        assert_eq!(line, 4);
        assert!(msg.contains("non-numeric"));
    }

    #[test]
    fn empty_body_is_rejected() {
        let err = read_session("t,inner_uV,outer_uV\n".as_bytes(), 250.0, "x").unwrap_err();
        assert_eq!(err, Error::EmptyRecording);
    }

    #[test]
    fn session_round_trip() {
        let s = RecordingSession::new(
            250.0,
            vec![1.234e-5, -7e-7, 0.0],
            vec![3.3e-6, 1e-12, -2.5e-5],
            "a",
        )
        .with_triggers(vec![1]);
        let mut buf = Vec::new();
        write_session(&mut buf, &s, None).unwrap();
        let back = read_session(buf.as_slice(), 250.0, "a").unwrap().session;
        assert_eq!(back, s);
    }

    #[test]
    fn snr_table_layout() {
        let report = crate::analysis::snr(1e-10, 1e-9, FilterId::Dnf).unwrap();
        let rows = vec![SnrRow {
            subject: "s1".into(),
            report,
            delta_db: 1.5,
        }];
        let mut buf = Vec::new();
        write_snr_table(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "subject,filter,signal_power,noise_power,snr_db,delta_db"
        );
        assert!(lines[1].starts_with("s1,dnf,"));
        assert!(text.ends_with('\n') && !text.contains('\r'));
    }
}
