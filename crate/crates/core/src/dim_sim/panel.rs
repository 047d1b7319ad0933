use std::io::{Read, Write};

use super::DimError;

/// `n` channels of `T` real samples, stored channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesPanel {
    labels: Vec<String>,
    data: Vec<Vec<f64>>,
}

impl TimeSeriesPanel {
    pub fn new(labels: Vec<String>, data: Vec<Vec<f64>>) -> Result<Self, DimError> {
        if labels.len() != data.len() {
            return Err(DimError::Dimension(format!("{} labels for {} channels", labels.len(), data.len())));
        }
        let t = data.first().map_or(0, Vec::len);
        if t == 0 {
            return Err(DimError::Invalid("panel needs at least one sample".into()));
        }
        if data.iter().any(|c| c.len() != t) {
            return Err(DimError::Dimension("channels differ in length".into()));
        }
        if data.iter().flatten().any(|v| !v.is_finite()) {
            return Err(DimError::Invalid("non-finite sample".into()));
        }
        Ok(Self { labels, data })
    }

    /// Channels labelled `1..=n`.
    pub fn from_channels(data: Vec<Vec<f64>>) -> Result<Self, DimError> {
        let labels = (1..=data.len()).map(|i| i.to_string()).collect();
        Self::new(labels, data)
    }

    pub fn n_channels(&self) -> usize {
        self.data.len()
    }

    pub fn len(&self) -> usize {
        self.data[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn channel(&self, i: usize) -> &[f64] {
        &self.data[i]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.data
    }

    pub fn replace_channel(&mut self, i: usize, values: Vec<f64>) -> Result<(), DimError> {
        if values.len() != self.len() {
            return Err(DimError::Dimension("replacement channel length differs".into()));
        }
        self.data[i] = values;
        Ok(())
    }

    /// One column per channel, header row of labels.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), DimError> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(&self.labels)?;
        let mut row = Vec::with_capacity(self.n_channels());
        for t in 0..self.len() {
            row.clear();
            row.extend(self.data.iter().map(|c| c[t].to_string()));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self, DimError> {
        let mut rd = csv::Reader::from_reader(r);
        let labels: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
        let mut data = vec![Vec::new(); labels.len()];
        for rec in rd.records() {
            let rec = rec?;
            for (c, field) in data.iter_mut().zip(rec.iter()) {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| DimError::Invalid(format!("not a number: `{field}`")))?;
                c.push(v);
            }
        }
        Self::new(labels, data)
    }
}
