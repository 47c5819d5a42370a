//! Report serialization. JSON carries the full report including
//! provenance and round-trips exactly (shortest-round-trip float
//! encoding); CSV is the flat per-instance table
//! `experiment,instance,weight,lhs,rhs,ratio,flags`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use super::{ExperimentReport, LabError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self, LabError> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(LabError::Config {
                key: "output.format".to_string(),
                message: format!("expected csv or json, got {other:?}"),
            }),
        }
    }
}

/// Write a report; identical reports produce byte-identical files.
pub fn write_report(
    report: &ExperimentReport,
    path: &Path,
    format: ReportFormat,
) -> Result<(), LabError> {
    match format {
        ReportFormat::Json => {
            let mut out = BufWriter::new(File::create(path)?);
            serde_json::to_writer_pretty(&mut out, report)?;
            out.write_all(b"\n")?;
            out.flush()?;
        }
        ReportFormat::Csv => {
            let mut writer = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
            writer.write_record([
                "experiment",
                "instance",
                "weight",
                "lhs",
                "rhs",
                "ratio",
                "flags",
            ])?;
            for row in &report.instances {
                writer.write_record([
                    report.experiment.as_str(),
                    row.instance.as_str(),
                    row.weight.as_str(),
                    &format!("{}", row.lhs),
                    &format!("{}", row.rhs),
                    &row.ratio.map(|r| format!("{r}")).unwrap_or_default(),
                    &row.flags.join(";"),
                ])?;
            }
            writer.flush()?;
        }
    }
    Ok(())
}

/// Read back a JSON report.
pub fn read_report(path: &Path) -> Result<ExperimentReport, LabError> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

#[cfg(test)]
mod tests {
    use super::super::{default_corpus, run_experiment, ExperimentId, LabConfig};
    use super::*;

    fn sample_report() -> ExperimentReport {
        let cfg = LabConfig {
            grid_points: 32,
            bank_size: 2,
            ..LabConfig::default()
        };
        let corpus = default_corpus(&cfg.grid().unwrap(), cfg.corpus_seed).unwrap();
        run_experiment(ExperimentId::C13, &corpus, &cfg).unwrap()
    }

    #[test]
    fn json_round_trip_is_exact() {
        let report = sample_report();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        write_report(&report, &path, ReportFormat::Json).unwrap();
        let back = read_report(&path).unwrap();
        assert_eq!(report, back);
    }

    #[test]
    fn csv_has_header_plus_one_row_per_instance() {
        let report = sample_report();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.csv");
        write_report(&report, &path, ReportFormat::Csv).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), report.instances.len() + 1);
        assert_eq!(lines[0], "experiment,instance,weight,lhs,rhs,ratio,flags");
    }

    #[test]
    fn rewriting_is_byte_identical() {
        let report = sample_report();
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.json");
        let b = dir.path().join("b.json");
        write_report(&report, &a, ReportFormat::Json).unwrap();
        write_report(&report, &b, ReportFormat::Json).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn unknown_format_is_a_config_error() {
        assert!("yaml".parse::<ReportFormat>().is_err());
        assert!(matches!(
            "CSV".parse::<ReportFormat>(),
            Ok(ReportFormat::Csv)
        ));
    }
}
