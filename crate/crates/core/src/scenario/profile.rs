use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    LoadKw,
    IrradianceWm2,
    AmbientTempC,
}

impl ProfileKind {
    pub const ALL: [ProfileKind; 3] = [
        ProfileKind::LoadKw,
        ProfileKind::IrradianceWm2,
        ProfileKind::AmbientTempC,
    ];

    /// File name used inside a profiles directory.
    pub fn file_name(self) -> &'static str {
        match self {
            ProfileKind::LoadKw => "load_kw.csv",
            ProfileKind::IrradianceWm2 => "irradiance_w_m2.csv",
            ProfileKind::AmbientTempC => "ambient_temp_c.csv",
        }
    }

    fn allows_negative(self) -> bool {
        matches!(self, ProfileKind::AmbientTempC)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub values: Vec<f64>,
    pub dt_hours: f64,
    pub kind: ProfileKind,
}

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },
    #[error("{path}: {message}")]
    Unit { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Reads a `step,value` profile file.
pub fn load_profile(path: &Path, kind: ProfileKind, dt_hours: f64) -> Result<Profile, ProfileError> {
    let file = File::open(path).map_err(|source| ProfileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_profile(file, &path.display().to_string(), kind, dt_hours)
}

pub fn parse_profile<R: Read>(
    reader: R,
    origin: &str,
    kind: ProfileKind,
    dt_hours: f64,
) -> Result<Profile, ProfileError> {
    let parse_err = |line: u64, message: String| ProfileError::Parse {
        path: origin.to_string(),
        line,
        message,
    };
    if !(dt_hours > 0.0 && dt_hours.is_finite()) {
        return Err(ProfileError::Unit {
            path: origin.to_string(),
            message: format!("dt_hours must be > 0, got {dt_hours}"),
        });
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut values = Vec::new();
    let mut header_seen = false;
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if !header_seen {
            if record.len() != 2 || &record[0] != "step" || &record[1] != "value" {
                return Err(parse_err(line, "expected header `step,value`".into()));
            }
            header_seen = true;
            continue;
        }
        if record.len() != 2 {
            return Err(parse_err(line, format!("expected 2 fields, found {}", record.len())));
        }
        let step: usize = record[0]
            .parse()
            .map_err(|_| parse_err(line, format!("invalid step index `{}`", &record[0])))?;
        if step != values.len() {
            return Err(parse_err(
                line,
                format!("step {step} out of sequence, expected {}", values.len()),
            ));
        }
        let value: f64 = record[1]
            .parse()
            .map_err(|_| parse_err(line, format!("invalid value `{}`", &record[1])))?;
        if !value.is_finite() {
            return Err(parse_err(line, format!("non-finite value `{}`", &record[1])));
        }
        if value < 0.0 && !kind.allows_negative() {
            return Err(parse_err(line, format!("negative value {value} not allowed")));
        }
        values.push(value);
    }
    if values.is_empty() {
        return Err(parse_err(1, "profile has no data rows".into()));
    }
    Ok(Profile {
        values,
        dt_hours,
        kind,
    })
}

/// Writes a profile with three decimals.
pub fn write_profile<W: Write>(profile: &Profile, mut out: W) -> std::io::Result<()> {
    writeln!(out, "step,value")?;
    for (i, v) in profile.values.iter().enumerate() {
        writeln!(out, "{i},{v:.3}")?;
    }
    Ok(())
}
