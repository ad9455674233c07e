//! Network-level flow composition per region×year.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::complex::EdgeFlow;
use crate::error::{Error, Result};
use crate::hodge::HodgeDecomposition;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionMetrics {
    pub region: String,
    pub year: i32,
    /// Edge count.
    pub e: usize,
    /// Net flow, the signed sum of edge flows.
    pub c: f64,
    pub g_sum: f64,
    pub h_sum: f64,
    pub r_sum: f64,
    pub g_bar: f64,
    pub h_bar: f64,
    pub r_bar: f64,
}

impl RegionMetrics {
    /// Metrics from component sums alone, with `c = g + h + r`.
    pub fn from_sums(
        region: impl Into<String>,
        year: i32,
        e: usize,
        g_sum: f64,
        h_sum: f64,
        r_sum: f64,
    ) -> Result<Self> {
        Self::build(region.into(), year, e, g_sum + h_sum + r_sum, g_sum, h_sum, r_sum)
    }

    fn build(region: String, year: i32, e: usize, c: f64, g_sum: f64, h_sum: f64, r_sum: f64) -> Result<Self> {
        if e == 0 {
            return Err(Error::EmptyNetwork);
        }
        let n = e as f64;
        Ok(Self {
            region,
            year,
            e,
            c,
            g_sum,
            h_sum,
            r_sum,
            g_bar: g_sum.abs() / n,
            h_bar: h_sum.abs() / n,
            r_bar: r_sum.abs() / n,
        })
    }

    pub fn measure(&self, m: Measure) -> f64 {
        match m {
            Measure::Gradient => self.g_bar,
            Measure::Harmonic => self.h_bar,
            Measure::Curl => self.r_bar,
        }
    }
}

/// Sum each component over all edges, take the absolute value of the sum and
/// divide by the edge count.
pub fn region_metrics<T: Real>(
    decomposition: &HodgeDecomposition<T>,
    flow: &EdgeFlow<T>,
    region: impl Into<String>,
    year: i32,
) -> Result<RegionMetrics> {
    let sum = |v: &EdgeFlow<T>| v.values.iter().map(|x| x.as_f64()).sum::<f64>();
    let e = flow.len();
    if decomposition.gradient.len() != e {
        return Err(Error::DimensionMismatch {
            what: "decomposition edge count",
            expected: e,
            got: decomposition.gradient.len(),
        });
    }
    RegionMetrics::build(
        region.into(),
        year,
        e,
        sum(flow),
        sum(&decomposition.gradient),
        sum(&decomposition.harmonic),
        sum(&decomposition.curl),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Measure {
    Gradient,
    Harmonic,
    Curl,
}

impl Measure {
    pub const ALL: [Measure; 3] = [Measure::Gradient, Measure::Harmonic, Measure::Curl];

    pub fn column(self) -> &'static str {
        match self {
            Measure::Gradient => "g_bar",
            Measure::Harmonic => "h_bar",
            Measure::Curl => "r_bar",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub group: String,
    pub n: usize,
    pub measure: Measure,
    pub mean: f64,
    /// Population standard deviation.
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub group: String,
    pub measure: Measure,
    pub bin_width: f64,
    /// `counts[b]` covers `[b·w, (b+1)·w)`.
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsTable {
    /// Sorted by (region, year).
    pub rows: Vec<RegionMetrics>,
    pub summaries: Vec<GroupSummary>,
    pub histograms: Vec<Histogram>,
}

pub const DEFAULT_BIN_WIDTH: f64 = 0.05;

/// Group means, population SDs and histograms of the per-edge measures.
/// `group_of` maps a row to its summary group (e.g. census region).
pub fn metrics_table<F>(batch: &[RegionMetrics], group_of: F, bin_width: f64) -> Result<MetricsTable>
where
    F: Fn(&RegionMetrics) -> String,
{
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty metrics batch".into()));
    }
    if !(bin_width > 0.0) {
        return Err(Error::InvalidArgument(format!("bin width {bin_width} must be positive")));
    }
    let mut rows = batch.to_vec();
    rows.sort_by(|a, b| (&a.region, a.year).cmp(&(&b.region, b.year)));
    let mut groups: BTreeMap<String, Vec<&RegionMetrics>> = BTreeMap::new();
    for r in &rows {
        groups.entry(group_of(r)).or_default().push(r);
    }
    let mut summaries = Vec::new();
    let mut histograms = Vec::new();
    for (group, members) in &groups {
        for m in Measure::ALL {
            let vals: Vec<f64> = members.iter().map(|r| r.measure(m)).collect();
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            summaries.push(GroupSummary {
                group: group.clone(),
                n: vals.len(),
                measure: m,
                mean,
                sd: var.sqrt(),
            });
            let max = vals.iter().cloned().fold(0.0, f64::max);
            let mut counts = vec![0; bin_index(max, bin_width) + 1];
            for v in vals {
                counts[bin_index(v, bin_width)] += 1;
            }
            histograms.push(Histogram {
                group: group.clone(),
                measure: m,
                bin_width,
                counts,
            });
        }
    }
    Ok(MetricsTable {
        rows,
        summaries,
        histograms,
    })
}

/// `region,group` table assigning regions to summary groups.
pub fn parse_region_groups<R: std::io::Read>(input: R) -> Result<BTreeMap<String, String>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let (ri, gi) = (col("region")?, col("group")?);
    let mut out = BTreeMap::new();
    for row in rdr.records() {
        let row = row?;
        out.insert(row.get(ri).unwrap_or("").to_string(), row.get(gi).unwrap_or("").to_string());
    }
    Ok(out)
}

/// Bin of `v`, tolerant of quotients such as `0.6 / 0.05` landing just
/// below an integer.
fn bin_index(v: f64, width: f64) -> usize {
    ((v / width) * (1.0 + 1e-12)).floor() as usize
}

pub fn write_region_metrics<W: Write>(out: W, rows: &[RegionMetrics]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(["region", "year", "e", "c", "g_sum", "h_sum", "r_sum", "g_bar", "h_bar", "r_bar"])?;
    }
    w.flush()?;
    Ok(())
}

impl MetricsTable {
    pub fn write_summary<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["group", "n", "measure", "mean", "sd"])?;
        for s in &self.summaries {
            w.write_record([
                s.group.as_str(),
                &s.n.to_string(),
                s.measure.column(),
                &s.mean.to_string(),
                &s.sd.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_histograms<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["group", "measure", "bin_lower", "bin_upper", "count"])?;
        for h in &self.histograms {
            for (b, c) in h.counts.iter().enumerate() {
                w.write_record([
                    h.group.as_str(),
                    h.measure.column(),
                    &(b as f64 * h.bin_width).to_string(),
                    &((b + 1) as f64 * h.bin_width).to_string(),
                    &c.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hodge::{Mode, SolverUsed};

    fn dec(g: Vec<f64>, r: Vec<f64>, h: Vec<f64>) -> HodgeDecomposition<f64> {
        HodgeDecomposition {
            gradient: EdgeFlow::new(g),
            curl: EdgeFlow::new(r),
            harmonic: EdgeFlow::new(h),
            residual_norm: 0.0,
            mode: Mode::Normalized,
            solver: SolverUsed::Dense,
        }
    }

    #[test]
    fn absolute_value_after_summation() {
        let f = EdgeFlow::new(vec![1.0, -3.0]);
        let m = region_metrics(&dec(vec![1.0, -2.0], vec![0.5, 0.5], vec![-0.5, -1.5]), &f, "x", 2017).unwrap();
        assert_eq!(m.c, -2.0);
        assert_eq!(m.g_bar, 0.5);
        assert_eq!(m.r_bar, 0.5);
        assert_eq!(m.h_bar, 1.0);
    }

    #[test]
    fn zero_flow() {
        let f = EdgeFlow::zeros(3);
        let m = region_metrics(&dec(vec![0.0; 3], vec![0.0; 3], vec![0.0; 3]), &f, "x", 2017).unwrap();
        assert_eq!((m.c, m.g_bar, m.h_bar, m.r_bar), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn empty_network() {
        let f = EdgeFlow::<f64>::zeros(0);
        assert!(matches!(
            region_metrics(&dec(vec![], vec![], vec![]), &f, "x", 2017),
            Err(Error::EmptyNetwork)
        ));
    }

    #[test]
    fn single_and_two_point_summaries() {
        let a = RegionMetrics::from_sums("a", 2017, 10, 2.0, 1.0, 3.0).unwrap();
        let b = RegionMetrics::from_sums("b", 2017, 10, 6.0, 1.0, 3.0).unwrap();
        let t = metrics_table(std::slice::from_ref(&a), |_| "all".into(), DEFAULT_BIN_WIDTH).unwrap();
        assert_eq!(t.summaries[0].mean, 0.2);
        assert_eq!(t.summaries[0].sd, 0.0);
        let t = metrics_table(&[b, a], |_| "all".into(), DEFAULT_BIN_WIDTH).unwrap();
        let g = &t.summaries[0];
        assert_eq!(g.measure, Measure::Gradient);
        assert!((g.mean - 0.4).abs() < 1e-15 && (g.sd - 0.2).abs() < 1e-15);
        assert_eq!(t.rows[0].region, "a");
        // g_bar 0.2 and 0.6 land in bins 4 and 12
        let h = &t.histograms[0];
        assert_eq!(h.counts.iter().sum::<usize>(), 2);
        assert_eq!(h.counts.len(), 13);
    }

    #[test]
    fn csv_header() {
        let a = RegionMetrics::from_sums("a", 2017, 4, 1.0, 1.0, 1.0).unwrap();
        let mut buf = Vec::new();
        write_region_metrics(&mut buf, &[a]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("region,year,e,c,g_sum,h_sum,r_sum,g_bar,h_bar,r_bar\n"));
    }
}
