//! CSV tables and SVG figures for a set of completed runs.

use std::fs::{self, File};
use std::path::{Path, PathBuf};

use crate::analysis::{FilterId, Periodogram};
use crate::error::{Error, Result};
use crate::io::{
    write_psd_table, write_signals_table, write_snr_table, write_weights_table, SnrRow,
};
use crate::pipeline::{FilterKind, FilterRun, RecordingEvaluation, WeightSample};
use crate::plot::{bar_plot, box_plot, line_plot, Series};
use crate::simulator::CohortResult;
use crate::types::RecordingSession;

/// Everything reported for one subject.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectEntry {
    pub subject: String,
    pub rows: Vec<SnrRow>,
    pub psds: Vec<(FilterId, Periodogram)>,
    pub traces: Vec<(FilterKind, Vec<WeightSample>)>,
}

/// Raw and filtered traces of one subject, for the time-domain figure.
#[derive(Debug, Clone, PartialEq)]
pub struct Showcase {
    pub subject: String,
    pub session: RecordingSession,
    pub runs: Vec<FilterRun>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportData {
    pub subjects: Vec<SubjectEntry>,
    pub showcase: Option<Showcase>,
}

pub fn subject_name(index: usize) -> String {
    format!("s{:02}", index + 1)
}

impl ReportData {
    pub fn from_cohort(cohort: &CohortResult) -> Self {
        let subjects = cohort
            .subjects
            .iter()
            .map(|s| {
                let subject = subject_name(s.index);
                SubjectEntry {
                    rows: s
                        .measures
                        .iter()
                        .map(|m| SnrRow {
                            subject: subject.clone(),
                            report: m.report,
                            delta_db: m.delta_db,
                        })
                        .collect(),
                    psds: s
                        .measures
                        .iter()
                        .map(|m| (m.report.filter_id, m.psd.clone()))
                        .collect(),
                    traces: s.traces.clone(),
                    subject,
                }
            })
            .collect();
        let showcase = cohort.subjects.first().and_then(|s| {
            s.sim.as_ref().map(|sim| Showcase {
                subject: subject_name(s.index),
                session: sim.session.clone(),
                runs: s.runs.clone(),
            })
        });
        Self { subjects, showcase }
    }

    pub fn push_recording(
        &mut self,
        subject: &str,
        session: &RecordingSession,
        eval: RecordingEvaluation,
    ) {
        let rows = eval
            .measures
            .iter()
            .map(|m| SnrRow {
                subject: subject.to_string(),
                report: m.report,
                delta_db: m.delta_db,
            })
            .collect();
        let psds = eval
            .measures
            .iter()
            .map(|m| (m.report.filter_id, m.psd.clone()))
            .collect();
        let traces = eval
            .runs
            .iter()
            .filter(|r| r.kind != FilterKind::Laplace)
            .map(|r| (r.kind, r.weight_trace.clone()))
            .collect();
        self.subjects.push(SubjectEntry {
            subject: subject.to_string(),
            rows,
            psds,
            traces,
        });
        if self.showcase.is_none() {
            self.showcase = Some(Showcase {
                subject: subject.to_string(),
                session: session.clone(),
                runs: eval.runs,
            });
        }
    }

    pub fn snr_rows(&self) -> Vec<SnrRow> {
        self.subjects
            .iter()
            .flat_map(|s| s.rows.iter().cloned())
            .collect()
    }
}

pub const SIGNALS_CSV: &str = "signals.csv";
pub const PSD_CSV: &str = "psd.csv";
pub const SNR_CSV: &str = "snr.csv";
pub const WEIGHTS_CSV: &str = "weights.csv";

/// Writes only the SNR and PSD tables.
pub fn write_tables(dir: &Path, data: &ReportData) -> Result<Vec<PathBuf>> {
    if data.subjects.is_empty() {
        return Err(Error::EmptyResults);
    }
    fs::create_dir_all(dir)?;
    let snr_path = dir.join(SNR_CSV);
    write_snr_table(File::create(&snr_path)?, &data.snr_rows())?;
    let psd_path = dir.join(PSD_CSV);
    let psd_rows: Vec<(String, FilterId, &Periodogram)> = data
        .subjects
        .iter()
        .flat_map(|s| {
            s.psds
                .iter()
                .map(move |(id, p)| (s.subject.clone(), *id, p))
        })
        .collect();
    write_psd_table(File::create(&psd_path)?, &psd_rows)?;
    Ok(vec![snr_path, psd_path])
}

/// Writes the four tables and the figures; returns every path written.
pub fn write_report(dir: &Path, data: &ReportData) -> Result<Vec<PathBuf>> {
    let mut written = write_tables(dir, data)?;

    let weights_path = dir.join(WEIGHTS_CSV);
    let weight_rows: Vec<(String, FilterKind, &[WeightSample])> = data
        .subjects
        .iter()
        .flat_map(|s| {
            s.traces
                .iter()
                .map(move |(k, t)| (s.subject.clone(), *k, t.as_slice()))
        })
        .collect();
    write_weights_table(File::create(&weights_path)?, &weight_rows)?;
    written.push(weights_path);

    let signals_path = dir.join(SIGNALS_CSV);
    write_signals(&signals_path, data.showcase.as_ref())?;
    written.push(signals_path);

    for (name, svg) in figures(data) {
        let path = dir.join(name);
        fs::write(&path, svg)?;
        written.push(path);
    }
    Ok(written)
}

fn write_signals(path: &Path, showcase: Option<&Showcase>) -> Result<()> {
    let file = File::create(path)?;
    let Some(show) = showcase else {
        return write_signals_table(file, 1.0, &[]);
    };
    let mut columns: Vec<(String, &[f64])> = vec![
        ("inner_V".into(), &show.session.inner),
        ("outer_V".into(), &show.session.outer),
    ];
    for run in &show.runs {
        columns.push((format!("{}_V", run.kind), &run.output));
        if !run.remover.is_empty() {
            columns.push((format!("{}_remover_V", run.kind), &run.remover));
        }
    }
    let named: Vec<(&str, &[f64])> = columns.iter().map(|(n, v)| (n.as_str(), *v)).collect();
    write_signals_table(file, show.session.sample_rate_hz, &named)
}

fn figures(data: &ReportData) -> Vec<(&'static str, String)> {
    let mut out = Vec::new();

    if let Some(show) = &data.showcase {
        let dt = 1.0 / show.session.sample_rate_hz;
        let mut series = vec![Series::sampled("inner", &show.session.inner, dt)];
        series.push(Series::sampled("outer", &show.session.outer, dt));
        for run in &show.runs {
            series.push(Series::sampled(run.kind.as_str(), &run.output, dt));
        }
        let title = format!("signals, {}", show.subject);
        out.push((
            "traces.svg",
            line_plot(&title, "time (s)", "V", &series, false),
        ));
    }

    // mean periodogram across subjects per filter
    let mut psd_series = Vec::new();
    for id in FilterId::ALL {
        let spectra: Vec<&Periodogram> = data
            .subjects
            .iter()
            .flat_map(|s| s.psds.iter().filter(|(f, _)| *f == id).map(|(_, p)| p))
            .collect();
        let Some(first) = spectra.first() else {
            continue;
        };
        let mut mean = vec![0.0; first.density.len()];
        for p in &spectra {
            for (m, d) in mean.iter_mut().zip(&p.density) {
                *m += d / spectra.len() as f64;
            }
        }
        let hz = (0..mean.len()).map(|k| first.frequency(k)).collect();
        psd_series.push(Series::new(id.as_str(), hz, mean));
    }
    out.push((
        "psd.svg",
        line_plot(
            "noise power density",
            "frequency (Hz)",
            "V^2/Hz (log10)",
            &psd_series,
            true,
        ),
    ));

    let categories: Vec<String> = data.subjects.iter().map(|s| s.subject.clone()).collect();
    let snr_groups: Vec<(String, Vec<f64>)> = FilterId::ALL
        .iter()
        .map(|&id| {
            let v = data
                .subjects
                .iter()
                .filter_map(|s| {
                    s.rows
                        .iter()
                        .find(|r| r.report.filter_id == id)
                        .map(|r| r.report.snr_db)
                })
                .collect::<Vec<_>>();
            (id.as_str().to_string(), v)
        })
        .filter(|(_, v)| !v.is_empty())
        .collect();
    out.push((
        "snr.svg",
        bar_plot("SNR per subject", "SNR (dB)", &categories, &snr_groups),
    ));

    let delta_groups: Vec<(String, Vec<f64>)> = FilterId::ALL[1..]
        .iter()
        .map(|&id| {
            let v = data
                .subjects
                .iter()
                .filter_map(|s| {
                    s.rows
                        .iter()
                        .find(|r| r.report.filter_id == id)
                        .map(|r| r.delta_db)
                })
                .collect::<Vec<_>>();
            (id.as_str().to_string(), v)
        })
        .filter(|(_, v)| !v.is_empty())
        .collect();
    out.push((
        "delta_snr.svg",
        box_plot("SNR improvement", "delta SNR (dB)", &delta_groups),
    ));

    if let Some(entry) = data.subjects.first() {
        if let Some((_, trace)) = entry.traces.iter().find(|(k, _)| *k == FilterKind::Dnf) {
            let layers = trace.first().map_or(0, |s| s.distances.len());
            let series: Vec<Series> = (0..layers)
                .map(|l| {
                    Series::new(
                        format!("layer {}", l + 1),
                        trace.iter().map(|s| s.sample as f64).collect(),
                        trace.iter().map(|s| s.distances[l]).collect(),
                    )
                })
                .collect();
            let title = format!("weight distance, {}", entry.subject);
            out.push((
                "weights.svg",
                line_plot(&title, "sample", "distance", &series, false),
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{run_cohort, CohortConfig, SimConfig};

    fn small_cohort(keep_runs: bool) -> CohortResult {
        run_cohort(&CohortConfig {
            num_subjects: 2,
            sim: SimConfig {
                duration_s: 8.0,
                ..SimConfig::default()
            },
            keep_runs,
            ..CohortConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn empty_results_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(
            write_report(dir.path(), &ReportData::default()),
            Err(Error::EmptyResults)
        );
    }

    #[test]
    fn report_file_contract() {
        let dir = tempfile::tempdir().unwrap();
        let data = ReportData::from_cohort(&small_cohort(true));
        let files = write_report(dir.path(), &data).unwrap();
        let csv = files
            .iter()
            .filter(|p| p.extension().unwrap() == "csv")
            .count();
        let svg = files
            .iter()
            .filter(|p| p.extension().unwrap() == "svg")
            .count();
        assert_eq!(csv, 4);
        assert!(svg >= 3);
        let snr = fs::read_to_string(dir.path().join(SNR_CSV)).unwrap();
        assert_eq!(snr.lines().count(), 1 + 2 * 4);
        let psd = fs::read_to_string(dir.path().join("psd.svg")).unwrap();
        for name in ["inner", "dnf", "lms"] {
            assert!(psd.contains(&format!(">{name}<")), "{name}");
        }
        let signals = fs::read_to_string(dir.path().join(SIGNALS_CSV)).unwrap();
        assert!(signals.starts_with("t,inner_V,outer_V,dnf_V,dnf_remover_V,lms_V"));
        assert_eq!(signals.lines().count(), 1 + 2000);
    }

    #[test]
    fn report_without_showcase_still_writes_tables() {
        let dir = tempfile::tempdir().unwrap();
        let data = ReportData::from_cohort(&small_cohort(false));
        assert!(data.showcase.is_none());
        let files = write_report(dir.path(), &data).unwrap();
        assert_eq!(
            files
                .iter()
                .filter(|p| p.extension().unwrap() == "csv")
                .count(),
            4
        );
    }
}
