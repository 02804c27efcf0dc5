//! Sweep driver behind the `onebit-sim` binary: argument parsing, the SNR
//! grid, CSV serialization, and the scheme-by-scheme point loop.
//!
//! The emitted CSV has one row per `(scheme, SNR point)` with the header
//! [`CSV_HEADER`]. Floats are written with 17 significant digits so parsing
//! the file reproduces every value bit-exactly, and a sweep rerun with the
//! same seed produces a byte-identical file.

use std::ffi::OsString;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::str::FromStr;

use clap::Parser;
use onebit_core::sim::{run_point, BerRecord, SimulationConfig};
use onebit_core::PrecoderKind;

/// Column layout of the emitted CSV.
pub const CSV_HEADER: &str = "snr_db,scheme,refined,passes,nt,k,mod_order,trials,bit_errors,ber,seed";

/// Errors surfaced to the terminal with a nonzero exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] onebit_core::Error),
    #[error("invalid SNR grid '{spec}': {reason} (expected start:step:stop in dB)")]
    InvalidSnrGrid { spec: String, reason: String },
    #[error("unknown scheme '{0}' (expected zf, mf, rand, or zf-unq, with optional +r suffix)")]
    UnknownScheme(String),
    #[error("scheme 'zf-unq+r' is invalid: the unquantized reference is not in the 1-bit alphabet")]
    RefineUnquantized,
    #[error("unsupported modulation order {0}: choose 4, 8, or 16")]
    UnsupportedModOrder(usize),
    #[error("cannot write '{path}': {source}")]
    Output {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed CSV line {line}: {reason}")]
    MalformedCsv { line: usize, reason: String },
    #[error("{0}")]
    InvalidArgs(String),
}

/// One simulated scheme: an initial precoder, optionally refined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchemeSpec {
    pub kind: PrecoderKind,
    pub refined: bool,
}

impl FromStr for SchemeSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let (base, refined) = match s.strip_suffix("+r") {
            Some(base) => (base, true),
            None => (s, false),
        };
        let kind =
            PrecoderKind::from_str(base).map_err(|_| CliError::UnknownScheme(s.to_string()))?;
        if refined && !kind.is_quantized() {
            return Err(CliError::RefineUnquantized);
        }
        Ok(Self { kind, refined })
    }
}

impl fmt::Display for SchemeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.kind, if self.refined { "+r" } else { "" })
    }
}

/// A validated sweep: the scheme list plus the shared simulation template.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub nt: usize,
    pub k: usize,
    pub mod_order: usize,
    pub snr_db_list: Vec<f64>,
    pub schemes: Vec<SchemeSpec>,
    pub trials: u64,
    pub target_errors: u64,
    pub passes: usize,
    pub seed: u64,
    pub oracle_check: bool,
    pub out: PathBuf,
}

impl SweepSpec {
    /// The simulation configuration for one scheme of this sweep.
    pub fn config_for(&self, scheme: SchemeSpec) -> SimulationConfig {
        SimulationConfig {
            nt: self.nt,
            k: self.k,
            mod_order: self.mod_order,
            snr_db_list: self.snr_db_list.clone(),
            precoder: scheme.kind,
            refine_enabled: scheme.refined,
            passes: self.passes,
            min_trials: self.trials,
            target_bit_errors: self.target_errors,
            seed: self.seed,
            oracle_check: self.oracle_check,
        }
    }

    /// Validates the sweep invariants and every per-scheme configuration.
    pub fn validate(&self) -> Result<(), CliError> {
        if !matches!(self.mod_order, 4 | 8 | 16) {
            return Err(CliError::UnsupportedModOrder(self.mod_order));
        }
        if self.schemes.is_empty() {
            return Err(CliError::InvalidArgs("no schemes selected".into()));
        }
        for &scheme in &self.schemes {
            self.config_for(scheme).validate()?;
        }
        Ok(())
    }
}

/// Command-line arguments of `onebit-sim`.
#[derive(Parser, Debug)]
#[command(
    name = "onebit-sim",
    version,
    about = "Monte Carlo BER sweeps for the 1-bit quantized multiuser MISO downlink",
    after_help = "Each (scheme, SNR) point is fully deterministic in --seed, independent of \
                  thread count. Scheme labels: zf, mf, rand, zf-unq; append +r to apply the \
                  sign-flip refinement (zf-unq cannot be refined)."
)]
pub struct Args {
    /// Transmit antennas at the base station
    #[arg(long, default_value_t = 8)]
    pub nt: usize,

    /// Single-antenna users; must not exceed --nt
    #[arg(long, default_value_t = 2)]
    pub k: usize,

    /// PSK modulation order (4, 8, or 16)
    #[arg(long = "mod", value_name = "ORDER", default_value_t = 4)]
    pub mod_order: usize,

    /// Transmit SNR grid in dB, inclusive start:step:stop
    #[arg(
        long,
        value_name = "START:STEP:STOP",
        default_value = "0:2:30",
        allow_hyphen_values = true
    )]
    pub snr: String,

    /// Scheme to simulate (repeatable); defaults to zf and zf+r
    #[arg(long = "scheme", value_name = "LABEL")]
    pub schemes: Vec<String>,

    /// Symbol slots per SNR point before the error target is consulted
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,

    /// Extend each point until this many bit errors accumulate
    /// (0 disables; extension is capped at 64x --trials)
    #[arg(long = "target-errors", value_name = "COUNT", default_value_t = 0)]
    pub target_errors: u64,

    /// Refinement passes per symbol slot
    #[arg(long, default_value_t = 1)]
    pub passes: usize,

    /// Master seed for the deterministic per-slot random streams
    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Output CSV path
    #[arg(long, value_name = "PATH", default_value = "ber.csv")]
    pub out: PathBuf,

    /// Audit refined slots against the exhaustive search (requires --nt <= 8)
    #[arg(long = "oracle-check")]
    pub oracle_check: bool,
}

impl TryFrom<Args> for SweepSpec {
    type Error = CliError;

    fn try_from(args: Args) -> Result<Self, CliError> {
        let snr_db_list = parse_snr_grid(&args.snr)?;
        let scheme_labels = if args.schemes.is_empty() {
            vec!["zf".to_string(), "zf+r".to_string()]
        } else {
            args.schemes
        };
        let schemes = scheme_labels
            .iter()
            .map(|label| label.parse())
            .collect::<Result<Vec<SchemeSpec>, _>>()?;
        let spec = SweepSpec {
            nt: args.nt,
            k: args.k,
            mod_order: args.mod_order,
            snr_db_list,
            schemes,
            trials: args.trials,
            target_errors: args.target_errors,
            passes: args.passes,
            seed: args.seed,
            oracle_check: args.oracle_check,
            out: args.out,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Parses the full argument vector (including the binary name) into a
/// validated sweep.
pub fn parse_args<I, T>(argv: I) -> Result<SweepSpec, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = Args::try_parse_from(argv).map_err(|e| CliError::InvalidArgs(e.to_string()))?;
    SweepSpec::try_from(args)
}

/// Expands `start:step:stop` (dB, inclusive) into the swept grid.
pub fn parse_snr_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let invalid = |reason: &str| CliError::InvalidSnrGrid {
        spec: spec.to_string(),
        reason: reason.to_string(),
    };
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(invalid("expected exactly three ':'-separated fields"));
    }
    let values: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| invalid(&e.to_string()))?;
    let (start, step, stop) = (values[0], values[1], values[2]);
    if !start.is_finite() || !step.is_finite() || !stop.is_finite() {
        return Err(invalid("fields must be finite"));
    }
    if step <= 0.0 {
        return Err(invalid("step must be positive"));
    }
    if start > stop {
        return Err(invalid("start must not exceed stop"));
    }
    // Absorb float round-off so e.g. 0:2:30 lands exactly on 16 points.
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

/// One emitted CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub snr_db: f64,
    pub scheme: PrecoderKind,
    pub refined: bool,
    pub passes: usize,
    pub nt: usize,
    pub k: usize,
    pub mod_order: usize,
    pub trials: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub seed: u64,
}

impl SweepRow {
    fn from_record(record: &BerRecord, spec: &SweepSpec) -> Self {
        Self {
            snr_db: record.snr_db,
            scheme: record.precoder,
            refined: record.refined,
            passes: spec.passes,
            nt: spec.nt,
            k: spec.k,
            mod_order: spec.mod_order,
            trials: record.trials,
            bit_errors: record.bit_errors,
            ber: record.ber,
            seed: spec.seed,
        }
    }

    /// Serializes the row; floats carry 17 significant digits for lossless
    /// round-tripping.
    pub fn to_csv_line(&self) -> String {
        format!(
            "{:.16e},{},{},{},{},{},{},{},{},{:.16e},{}",
            self.snr_db,
            self.scheme,
            self.refined,
            self.passes,
            self.nt,
            self.k,
            self.mod_order,
            self.trials,
            self.bit_errors,
            self.ber,
            self.seed
        )
    }

    /// Parses one data line; `line` is the 1-based line number for error
    /// reporting.
    pub fn parse_csv_line(text: &str, line: usize) -> Result<Self, CliError> {
        let malformed = |reason: String| CliError::MalformedCsv { line, reason };
        let fields: Vec<&str> = text.split(',').collect();
        if fields.len() != 11 {
            return Err(malformed(format!("expected 11 fields, got {}", fields.len())));
        }
        fn num<T: FromStr>(field: &str, name: &str, line: usize) -> Result<T, CliError>
        where
            T::Err: fmt::Display,
        {
            field.parse().map_err(|e| CliError::MalformedCsv {
                line,
                reason: format!("{name}: {e}"),
            })
        }
        Ok(Self {
            snr_db: num(fields[0], "snr_db", line)?,
            scheme: PrecoderKind::from_str(fields[1])
                .map_err(|e| malformed(e.to_string()))?,
            refined: num(fields[2], "refined", line)?,
            passes: num(fields[3], "passes", line)?,
            nt: num(fields[4], "nt", line)?,
            k: num(fields[5], "k", line)?,
            mod_order: num(fields[6], "mod_order", line)?,
            trials: num(fields[7], "trials", line)?,
            bit_errors: num(fields[8], "bit_errors", line)?,
            ber: num(fields[9], "ber", line)?,
            seed: num(fields[10], "seed", line)?,
        })
    }
}

/// Parses a whole CSV document produced by [`run_sweep`].
pub fn parse_csv(text: &str) -> Result<Vec<SweepRow>, CliError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == CSV_HEADER => {}
        Some((_, header)) => {
            return Err(CliError::MalformedCsv {
                line: 1,
                reason: format!("unexpected header '{header}'"),
            })
        }
        None => {
            return Err(CliError::MalformedCsv {
                line: 1,
                reason: "empty document".into(),
            })
        }
    }
    lines
        .map(|(i, line)| SweepRow::parse_csv_line(line, i + 1))
        .collect()
}

/// Per-scheme BER range across the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeSummary {
    pub scheme: SchemeSpec,
    pub min_ber: f64,
    pub min_ber_snr_db: f64,
    pub max_ber: f64,
    pub max_ber_snr_db: f64,
}

/// Result of a completed sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub out: PathBuf,
    pub rows: Vec<SweepRow>,
    pub schemes: Vec<SchemeSummary>,
}

impl fmt::Display for SweepSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "wrote {} rows to {}",
            self.rows.len(),
            self.out.display()
        )?;
        for s in &self.schemes {
            writeln!(
                f,
                "  {:<8} min BER {:.3e} @ {} dB, max BER {:.3e} @ {} dB",
                s.scheme.to_string(),
                s.min_ber,
                s.min_ber_snr_db,
                s.max_ber,
                s.max_ber_snr_db
            )?;
        }
        Ok(())
    }
}

/// Runs every `(scheme, SNR point)` of the sweep in grid order, streaming
/// rows to the output CSV.
///
/// On any point failure the partially written file is removed. The file
/// always ends with a newline and is byte-identical across reruns of the
/// same spec.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepSummary, CliError> {
    spec.validate()?;
    let path_str = spec.out.display().to_string();
    let file = File::create(&spec.out).map_err(|source| CliError::Output {
        path: path_str.clone(),
        source,
    })?;
    let mut writer = BufWriter::new(file);

    match write_rows(spec, &mut writer) {
        Ok(rows) => {
            writer.flush().map_err(|source| CliError::Output {
                path: path_str,
                source,
            })?;
            let schemes = summarize(spec, &rows);
            Ok(SweepSummary {
                out: spec.out.clone(),
                rows,
                schemes,
            })
        }
        Err(e) => {
            drop(writer);
            let _ = fs::remove_file(&spec.out);
            Err(e)
        }
    }
}

fn write_rows(spec: &SweepSpec, writer: &mut impl Write) -> Result<Vec<SweepRow>, CliError> {
    let io_err = |source: std::io::Error| CliError::Output {
        path: spec.out.display().to_string(),
        source,
    };
    writeln!(writer, "{CSV_HEADER}").map_err(io_err)?;
    let mut rows = Vec::with_capacity(spec.schemes.len() * spec.snr_db_list.len());
    for &scheme in &spec.schemes {
        let cfg = spec.config_for(scheme);
        for snr_index in 0..spec.snr_db_list.len() {
            let record = run_point(&cfg, snr_index)?;
            let row = SweepRow::from_record(&record, spec);
            writeln!(writer, "{}", row.to_csv_line()).map_err(io_err)?;
            rows.push(row);
        }
    }
    Ok(rows)
}

fn summarize(spec: &SweepSpec, rows: &[SweepRow]) -> Vec<SchemeSummary> {
    spec.schemes
        .iter()
        .map(|&scheme| {
            let of_scheme = rows
                .iter()
                .filter(|r| r.scheme == scheme.kind && r.refined == scheme.refined);
            let mut min_ber = f64::INFINITY;
            let mut min_snr = f64::NAN;
            let mut max_ber = f64::NEG_INFINITY;
            let mut max_snr = f64::NAN;
            for row in of_scheme {
                if row.ber < min_ber {
                    min_ber = row.ber;
                    min_snr = row.snr_db;
                }
                if row.ber > max_ber {
                    max_ber = row.ber;
                    max_snr = row.snr_db;
                }
            }
            SchemeSummary {
                scheme,
                min_ber,
                min_ber_snr_db: min_snr,
                max_ber,
                max_ber_snr_db: max_snr,
            }
        })
        .collect()
}
