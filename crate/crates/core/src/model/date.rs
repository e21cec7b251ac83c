use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A date at whatever granularity the source recorded it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "DateSpecRepr", into = "DateSpecRepr")]
pub enum DateSpec {
    ExactYear(i32),
    YearRange {
        start: i32,
        end: i32,
    },
    /// Ordinal century; the Nth century spans `[(N-1)*100+1, N*100]`.
    Century(u32),
    /// Decade given by its first year (`1390` for "1390s").
    Decade(i32),
    Unknown,
}

impl DateSpec {
    pub fn range(start: i32, end: i32) -> Result<Self> {
        if start > end {
            return Err(Error::invalid(format!(
                "year range {start}-{end} is reversed"
            )));
        }
        Ok(DateSpec::YearRange { start, end })
    }

    pub fn century(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("century numbering starts at 1"));
        }
        Ok(DateSpec::Century(n))
    }

    pub fn decade(start: i32) -> Result<Self> {
        if start.rem_euclid(10) != 0 {
            return Err(Error::invalid(format!(
                "decade must start on a multiple of ten, got {start}"
            )));
        }
        Ok(DateSpec::Decade(start))
    }

    pub fn form(&self) -> DateForm {
        match self {
            DateSpec::ExactYear(_) => DateForm::ExactYear,
            DateSpec::YearRange { .. } => DateForm::YearRange,
            DateSpec::Century(_) => DateForm::Century,
            DateSpec::Decade(_) => DateForm::Decade,
            DateSpec::Unknown => DateForm::Unknown,
        }
    }

    /// Closed interval of years, `None` when unknown.
    pub fn interval(&self) -> Option<(i32, i32)> {
        match *self {
            DateSpec::ExactYear(y) => Some((y, y)),
            DateSpec::YearRange { start, end } => Some((start, end)),
            DateSpec::Century(n) => {
                let n = n as i32;
                Some(((n - 1) * 100 + 1, n * 100))
            }
            DateSpec::Decade(start) => Some((start, start + 9)),
            DateSpec::Unknown => None,
        }
    }

    pub fn start_year(&self) -> Option<i32> {
        self.interval().map(|(s, _)| s)
    }

    pub fn end_year(&self) -> Option<i32> {
        self.interval().map(|(_, e)| e)
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, DateSpec::Unknown)
    }

    /// Smallest interval covering both sides; an unknown side is ignored.
    pub fn span(first: DateSpec, last: DateSpec) -> DateSpec {
        match (first.interval(), last.interval()) {
            (None, None) => DateSpec::Unknown,
            (Some(_), None) => first,
            (None, Some(_)) => last,
            (Some((a, _)), Some((_, b))) if a <= b => DateSpec::YearRange { start: a, end: b },
            (Some((a, x)), Some((y, b))) => DateSpec::YearRange {
                start: a.min(y),
                end: x.max(b),
            },
        }
    }
}

fn ordinal_suffix(n: u32) -> &'static str {
    match (n % 10, n % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    }
}

impl fmt::Display for DateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DateSpec::ExactYear(y) => write!(f, "{y}"),
            DateSpec::YearRange { start, end } => write!(f, "{start}-{end}"),
            DateSpec::Century(n) => write!(f, "{n}{} century", ordinal_suffix(*n)),
            DateSpec::Decade(d) => write!(f, "{d}s"),
            DateSpec::Unknown => f.write_str("unknown"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DateForm {
    ExactYear,
    YearRange,
    Century,
    Decade,
    Unknown,
}

#[derive(Serialize, Deserialize)]
struct DateSpecRepr {
    form: DateForm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    start_year: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    end_year: Option<i32>,
}

impl From<DateSpec> for DateSpecRepr {
    fn from(d: DateSpec) -> Self {
        DateSpecRepr {
            form: d.form(),
            start_year: d.start_year(),
            end_year: d.end_year(),
        }
    }
}

impl TryFrom<DateSpecRepr> for DateSpec {
    type Error = Error;

    fn try_from(r: DateSpecRepr) -> Result<Self> {
        let need = |v: Option<i32>, what: &str| {
            v.ok_or_else(|| Error::invalid(format!("{what} required for {:?}", r.form)))
        };
        match r.form {
            DateForm::Unknown => Ok(DateSpec::Unknown),
            DateForm::ExactYear => Ok(DateSpec::ExactYear(need(r.start_year, "start_year")?)),
            DateForm::YearRange => DateSpec::range(
                need(r.start_year, "start_year")?,
                need(r.end_year, "end_year")?,
            ),
            DateForm::Decade => DateSpec::decade(need(r.start_year, "start_year")?),
            DateForm::Century => {
                let end = need(r.end_year, "end_year")?;
                if end <= 0 || end % 100 != 0 {
                    return Err(Error::invalid(format!("{end} does not close a century")));
                }
                DateSpec::century((end / 100) as u32)
            }
        }
    }
}
