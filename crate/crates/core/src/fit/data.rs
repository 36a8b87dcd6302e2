use std::io::Read;
use std::path::Path;

use chrono::{Datelike, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub time: NaiveDateTime,
    pub amount: f64,
}

/// Claim payments sorted by time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossDataset {
    records: Vec<LossRecord>,
    /// Records removed by the upper-quantile trim.
    pub trimmed: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodCount {
    /// Calendar month as `YYYY-MM`.
    pub period: String,
    pub count: usize,
}

fn parse_time(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return d.and_hms_opt(0, 0, 0);
    }
    if let Ok(t) = chrono::DateTime::parse_from_rfc3339(s) {
        return Some(t.naive_utc());
    }
    [
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M",
    ]
    .iter()
    .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

impl LossDataset {
    pub fn from_records(mut records: Vec<LossRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyData);
        }
        if let Some(r) = records
            .iter()
            .find(|r| !(r.amount > 0.0) || !r.amount.is_finite())
        {
            return Err(Error::Parse(format!(
                "amount must be positive, got {} at {}",
                r.amount, r.time
            )));
        }
        records.sort_by_key(|r| r.time);
        Ok(Self {
            records,
            trimmed: 0,
        })
    }

    /// Reads `date,amount` CSV; other columns are ignored.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::Parse(e.to_string()))?
            .clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h.eq_ignore_ascii_case(name))
                .ok_or_else(|| Error::Parse(format!("missing column '{name}'")))
        };
        let (di, ai) = (col("date")?, col("amount")?);
        let mut records = Vec::new();
        for (line, row) in rdr.records().enumerate() {
            let row = row.map_err(|e| Error::Parse(e.to_string()))?;
            let field = |i: usize| row.get(i).unwrap_or("");
            let time = parse_time(field(di)).ok_or_else(|| {
                Error::Parse(format!("row {}: bad date '{}'", line + 2, field(di)))
            })?;
            let amount: f64 = field(ai).parse().map_err(|_| {
                Error::Parse(format!("row {}: bad amount '{}'", line + 2, field(ai)))
            })?;
            records.push(LossRecord { time, amount });
        }
        Self::from_records(records)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let f =
            std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_reader(std::io::BufReader::new(f))
    }

    /// Drops amounts strictly above the empirical `q`-quantile.
    pub fn trim_upper(mut self, q: f64) -> Result<Self> {
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "trim quantile must lie in (0,1], got {q}"
            )));
        }
        let sorted = self.amounts();
        let idx = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
        let cut = sorted[idx];
        let before = self.records.len();
        self.records.retain(|r| r.amount <= cut);
        self.trimmed += before - self.records.len();
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[LossRecord] {
        &self.records
    }

    /// Amounts in increasing order.
    pub fn amounts(&self) -> Vec<f64> {
        let mut a: Vec<f64> = self.records.iter().map(|r| r.amount).collect();
        a.sort_by(f64::total_cmp);
        a
    }

    /// Claim counts per calendar month from the first to the last record,
    /// empty months included.
    pub fn monthly_counts(&self) -> Vec<PeriodCount> {
        let key = |t: &NaiveDateTime| t.year() * 12 + t.month0() as i32;
        let (Some(first), Some(last)) = (self.records.first(), self.records.last()) else {
            return Vec::new();
        };
        let (k0, k1) = (key(&first.time), key(&last.time));
        let mut counts = vec![0usize; (k1 - k0 + 1) as usize];
        for r in &self.records {
            counts[(key(&r.time) - k0) as usize] += 1;
        }
        counts
            .into_iter()
            .enumerate()
            .map(|(i, count)| {
                let k = k0 + i as i32;
                PeriodCount {
                    period: format!("{:04}-{:02}", k.div_euclid(12), k.rem_euclid(12) + 1),
                    count,
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "date,amount,discount\n2020-03-15,120.5,1\n2020-01-02,80,1\n2020-01-30T12:00:00,300,1\n2020-03-01,5000,1\n";

    #[test]
    fn parses_and_sorts() {
        let d = LossDataset::from_reader(CSV.as_bytes()).unwrap();
        assert_eq!(d.len(), 4);
        assert_eq!(d.records()[0].amount, 80.0);
        assert_eq!(d.amounts(), vec![80.0, 120.5, 300.0, 5000.0]);
    }

    #[test]
    fn monthly_counts_include_empty_months() {
        let d = LossDataset::from_reader(CSV.as_bytes()).unwrap();
        let c = d.monthly_counts();
        let got: Vec<(&str, usize)> = c.iter().map(|p| (p.period.as_str(), p.count)).collect();
        assert_eq!(got, vec![("2020-01", 2), ("2020-02", 0), ("2020-03", 2)]);
    }

    #[test]
    fn trim_drops_top() {
        let d = LossDataset::from_reader(CSV.as_bytes())
            .unwrap()
            .trim_upper(0.75)
            .unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.trimmed, 1);
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(matches!(
            LossDataset::from_reader("date,amount\n2020-01-01,-3\n".as_bytes()),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            LossDataset::from_reader("when,amount\n2020-01-01,3\n".as_bytes()),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            LossDataset::from_reader("date,amount\n".as_bytes()),
            Err(Error::EmptyData)
        ));
    }
}
