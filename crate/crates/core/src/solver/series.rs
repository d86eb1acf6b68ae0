use std::fmt::Write as _;

use crate::scalar::{to_f64, Scalar};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SeriesError {
    #[error("missing channels: {}", .0.join(", "))]
    MissingChannels(Vec<String>),
    #[error("row has {got} values, series has {expected} channels")]
    RowLength { expected: usize, got: usize },
    #[error("CSV line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Named channels sampled on a common time base, stored column-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T> {
    names: Vec<String>,
    columns: Vec<Vec<T>>,
}

impl<T: Scalar> TimeSeries<T> {
    pub fn new(names: Vec<String>) -> Self {
        let columns = vec![Vec::new(); names.len()];
        Self { names, columns }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn push_row(&mut self, row: &[T]) -> Result<(), SeriesError> {
        if row.len() != self.names.len() {
            return Err(SeriesError::RowLength {
                expected: self.names.len(),
                got: row.len(),
            });
        }
        for (c, v) in self.columns.iter_mut().zip(row) {
            c.push(*v);
        }
        Ok(())
    }

    pub fn row(&self, k: usize) -> Vec<T> {
        self.columns.iter().map(|c| c[k]).collect()
    }

    pub fn column(&self, name: &str) -> Option<&[T]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|k| self.columns[k].as_slice())
    }

    pub fn require(&self, name: &str) -> Result<&[T], SeriesError> {
        self.column(name)
            .ok_or_else(|| SeriesError::MissingChannels(vec![name.to_string()]))
    }

    /// Checks that all `names` are present, reporting every missing one.
    pub fn require_all(&self, names: &[&str]) -> Result<(), SeriesError> {
        let missing: Vec<String> = names
            .iter()
            .filter(|n| self.column(n).is_none())
            .map(|n| n.to_string())
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(SeriesError::MissingChannels(missing))
        }
    }

    /// Channel names starting with `prefix`, in column order.
    pub fn names_with_prefix(&self, prefix: &str) -> Vec<String> {
        self.names.iter().filter(|n| n.starts_with(prefix)).cloned().collect()
    }

    /// Linear interpolation of a channel at time `t` (clamped to the ends).
    pub fn sample(&self, name: &str, t: T) -> Option<T> {
        let ts = self.column("t")?;
        let ys = self.column(name)?;
        if ts.is_empty() {
            return None;
        }
        let k = ts.partition_point(|&s| s <= t);
        if k == 0 {
            return Some(ys[0]);
        }
        if k == ts.len() {
            return Some(ys[ts.len() - 1]);
        }
        let (t0, t1) = (ts[k - 1], ts[k]);
        let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { T::zero() };
        Some(ys[k - 1] + w * (ys[k] - ys[k - 1]))
    }

    /// CSV text: '#' metadata lines, a header `name [unit]` and one row per
    /// sample with 9 significant digits.
    pub fn to_csv(&self, metadata: &[(String, String)]) -> String {
        let mut out = String::new();
        for (k, v) in metadata {
            let _ = writeln!(out, "# {k}: {v}");
        }
        let header: Vec<String> = self
            .names
            .iter()
            .map(|n| format!("{n} [{}]", unit_of(n)))
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for k in 0..self.len() {
            for (c, col) in self.columns.iter().enumerate() {
                if c > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{:.8e}", to_f64(col[k]));
            }
            out.push('\n');
        }
        out
    }
}

impl TimeSeries<f64> {
    /// Parses CSV written by [`TimeSeries::to_csv`]. Units in brackets are
    /// dropped from the channel names.
    pub fn from_csv(text: &str) -> Result<Self, SeriesError> {
        let mut series: Option<Self> = None;
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            match series.as_mut() {
                None => {
                    let names = trimmed
                        .split(',')
                        .map(|h| h.split('[').next().unwrap_or("").trim().to_string())
                        .collect::<Vec<_>>();
                    if names.iter().any(String::is_empty) {
                        return Err(SeriesError::Parse {
                            line: line_no,
                            message: "empty channel name".into(),
                        });
                    }
                    series = Some(Self::new(names));
                }
                Some(s) => {
                    let row = trimmed
                        .split(',')
                        .map(|v| v.trim().parse::<f64>())
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|e| SeriesError::Parse {
                            line: line_no,
                            message: e.to_string(),
                        })?;
                    s.push_row(&row).map_err(|e| SeriesError::Parse {
                        line: line_no,
                        message: e.to_string(),
                    })?;
                }
            }
        }
        series.ok_or(SeriesError::Parse {
            line: 0,
            message: "no header line".into(),
        })
    }

    /// The values as they appear after a CSV round trip.
    pub fn rounded(&self) -> Self {
        Self {
            names: self.names.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| c.iter().map(|v| format!("{v:.8e}").parse().unwrap_or(*v)).collect())
                .collect(),
        }
    }
}

/// `# key: value` metadata lines of a CSV file written by
/// [`TimeSeries::to_csv`].
pub fn csv_metadata(text: &str) -> Vec<(String, String)> {
    text.lines()
        .map_while(|l| l.trim().strip_prefix('#'))
        .filter_map(|l| {
            let (k, v) = l.split_once(':')?;
            Some((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

/// Unit label of a channel, from its name.
pub fn unit_of(name: &str) -> &'static str {
    match name {
        "t" => "s",
        "x" | "gap" => "m",
        "v" => "m/s",
        "i" | "i_set" => "A",
        "voltage" => "V",
        "force" => "N",
        _ if name.starts_with("b_") || name.starts_with("j_") => "T",
        _ if name.starts_with("h_") => "A/m",
        _ if name.starts_with("i_eddy") => "A",
        _ if name.starts_with("phi_") => "Wb",
        _ if name.starts_with("e_") || name.starts_with("w_") => "J",
        _ => "1",
    }
}
