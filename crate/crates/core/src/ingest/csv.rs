use chrono::{Datelike, NaiveDate};

use super::{Feature, WeatherRecord, WeatherTable};

const END_HEADER: &str = "-END HEADER-";
const SOURCE_PREFIX: &str = "Source: ";

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ParseError {
    #[error("malformed input: no `-END HEADER-` line")]
    MissingEndHeader,
    #[error("malformed input: expected a YEAR,MO,DY column row after the header block, got {0:?}")]
    BadColumnRow(String),
    #[error("malformed input: column {0} missing from the column row")]
    MissingColumn(&'static str),
    #[error("line {line}: expected {expected} cells, found {found}")]
    CellCount {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}, column {column}: cannot parse {value:?} as a number")]
    Number {
        line: usize,
        column: String,
        value: String,
    },
    #[error("line {line}: invalid calendar date {year}-{month}-{day}")]
    Date {
        line: usize,
        year: i32,
        month: u32,
        day: u32,
    },
    #[error("line {line}: {source}")]
    Order {
        line: usize,
        source: super::OrderError,
    },
}

/// Parses a POWER daily CSV response. Sentinel values are kept as-is.
pub fn parse_power_csv(text: &str) -> Result<WeatherTable, ParseError> {
    let mut lines = text.lines().enumerate();
    let mut source = String::new();
    let mut found_end = false;
    for (_, line) in lines.by_ref() {
        let line = line.trim();
        if line == END_HEADER {
            found_end = true;
            break;
        }
        if let Some(rest) = line.strip_prefix(SOURCE_PREFIX) {
            source = rest.to_string();
        }
    }
    if !found_end {
        return Err(ParseError::MissingEndHeader);
    }

    let (_, column_row) = lines
        .by_ref()
        .find(|(_, l)| !l.trim().is_empty())
        .ok_or_else(|| ParseError::BadColumnRow(String::new()))?;
    let columns: Vec<&str> = column_row.trim().split(',').map(str::trim).collect();
    if columns.len() < 3 || columns[..3] != ["YEAR", "MO", "DY"] {
        return Err(ParseError::BadColumnRow(column_row.to_string()));
    }
    // position of each feature among the cells
    let mut slots = [usize::MAX; 16];
    for (i, name) in columns.iter().enumerate().skip(3) {
        if let Some(f) = Feature::from_column(name) {
            slots[f.index()] = i;
        }
    }
    if let Some(f) = Feature::ALL.iter().find(|f| slots[f.index()] == usize::MAX) {
        return Err(ParseError::MissingColumn(f.power_parameter()));
    }

    let mut records = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != columns.len() {
            return Err(ParseError::CellCount {
                line: line_no,
                expected: columns.len(),
                found: cells.len(),
            });
        }
        let number = |i: usize| -> Result<f64, ParseError> {
            cells[i].parse::<f64>().map_err(|_| ParseError::Number {
                line: line_no,
                column: columns[i].to_string(),
                value: cells[i].to_string(),
            })
        };
        let int = |i: usize| -> Result<i64, ParseError> {
            cells[i].parse::<i64>().map_err(|_| ParseError::Number {
                line: line_no,
                column: columns[i].to_string(),
                value: cells[i].to_string(),
            })
        };
        let (year, month, day) = (int(0)?, int(1)?, int(2)?);
        let date = NaiveDate::from_ymd_opt(year as i32, month as u32, day as u32).ok_or(
            ParseError::Date {
                line: line_no,
                year: year as i32,
                month: month as u32,
                day: day as u32,
            },
        )?;
        let mut values = [0.0; 16];
        for f in Feature::ALL {
            values[f.index()] = number(slots[f.index()])?;
        }
        if let Some(prev) = records.last().map(|r: &WeatherRecord| r.date) {
            if prev >= date {
                return Err(ParseError::Order {
                    line: line_no,
                    source: super::OrderError { date },
                });
            }
        }
        records.push(WeatherRecord::new(date, values));
    }
    Ok(WeatherTable::new(records, source).expect("order checked while parsing"))
}

/// Serializes a table in the POWER daily CSV layout, columns in table order.
pub fn write_power_csv(table: &WeatherTable) -> String {
    let mut out = String::new();
    out.push_str("-BEGIN HEADER-\n");
    out.push_str("Daily point data in NASA/POWER CSV layout\n");
    if let (Some(first), Some(last)) = (table.records().first(), table.records().last()) {
        out.push_str(&format!(
            "Dates (month/day/year): {} through {}\n",
            first.date.format("%m/%d/%Y"),
            last.date.format("%m/%d/%Y")
        ));
    }
    if !table.source.is_empty() {
        out.push_str(SOURCE_PREFIX);
        out.push_str(&table.source);
        out.push('\n');
    }
    out.push_str("The value for missing source data that cannot be computed or is outside of the sources availability range: -999\n");
    out.push_str("Parameter(s):\n");
    for f in Feature::ALL {
        out.push_str(&format!("{:<20}({})\n", f.power_parameter(), f.unit()));
    }
    out.push_str(END_HEADER);
    out.push('\n');
    out.push_str("YEAR,MO,DY");
    for f in Feature::ALL {
        out.push(',');
        out.push_str(f.power_parameter());
    }
    out.push('\n');
    for r in table.records() {
        out.push_str(&format!("{},{},{}", r.date.year(), r.date.month(), r.date.day()));
        for v in r.values() {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    out
}
