//! Linear models of regional outcomes on the flow measures with year fixed
//! effects and cluster-robust covariance.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Read;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};

use crate::error::{Error, Result};
use crate::linalg::HouseholderQr;

pub const FLOW_COLUMNS: [&str; 3] = ["g_bar", "h_bar", "r_bar"];
pub const CONSTANT: &str = "constant";

/// One region×year observation for a single model.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelRow {
    /// Cluster key.
    pub region: String,
    pub year: i32,
    pub outcome: Option<f64>,
    /// `(g_bar, h_bar, r_bar)`.
    pub flows: Option<[f64; 3]>,
    pub controls: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Covariance {
    /// `s²·(XᵀX)⁻¹`.
    Classical,
    /// White sandwich with `N/(N−K)`.
    Hc1,
    /// Clustered on region with `(G/(G−1))·((N−1)/(N−K))`.
    #[default]
    ClusterCr1,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelSpec {
    pub outcome: String,
    pub controls: Vec<String>,
    pub flows: bool,
    pub covariance: Covariance,
    /// Omitted year dummy; `None` picks the earliest year.
    pub reference_year: Option<i32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaldTest {
    pub f: f64,
    pub df_num: usize,
    pub df_den: usize,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionResult {
    pub outcome: String,
    /// Regressor names in column order: flows, controls, year dummies, constant.
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    #[serde(skip)]
    pub covariance: DMatrix<f64>,
    pub std_errors: Vec<f64>,
    pub p_values: Vec<f64>,
    pub r_squared: f64,
    pub n: usize,
    pub clusters: usize,
    pub kind: Covariance,
    pub reference_year: i32,
    /// Degrees of freedom for t and Wald reference distributions.
    pub df_resid: usize,
}

impl RegressionResult {
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.index_of(name).map(|i| self.coefficients[i])
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        self.index_of(name).map(|i| self.std_errors[i])
    }
}

/// Ordinary least squares with year fixed effects and a constant.
///
/// Rows missing the outcome or any included regressor are dropped.
pub fn fit_ols(panel: &[PanelRow], spec: &ModelSpec) -> Result<RegressionResult> {
    let rows: Vec<&PanelRow> = panel
        .iter()
        .filter(|r| {
            r.outcome.is_some()
                && (!spec.flows || r.flows.is_some())
                && r.controls.len() >= spec.controls.len()
                && r.controls[..spec.controls.len()].iter().all(Option::is_some)
        })
        .collect();
    let n = rows.len();
    let years: BTreeSet<i32> = rows.iter().map(|r| r.year).collect();
    let reference_year = match spec.reference_year {
        Some(y) if years.contains(&y) => y,
        Some(y) => return Err(Error::InvalidArgument(format!("reference year {y} not in the fitted rows"))),
        None => *years
            .iter()
            .next()
            .ok_or_else(|| Error::InvalidArgument("no complete rows to fit".into()))?,
    };

    let mut names: Vec<String> = Vec::new();
    if spec.flows {
        names.extend(FLOW_COLUMNS.iter().map(|s| s.to_string()));
    }
    names.extend(spec.controls.iter().cloned());
    let dummies: Vec<i32> = years.iter().copied().filter(|&y| y != reference_year).collect();
    names.extend(dummies.iter().map(|y| format!("year_{y}")));
    names.push(CONSTANT.into());
    let k = names.len();
    if n <= k {
        return Err(Error::InvalidArgument(format!("{n} complete rows for {k} regressors")));
    }

    let mut x = DMatrix::zeros(n, k);
    let mut y = vec![0.0; n];
    for (i, r) in rows.iter().enumerate() {
        let mut c = 0;
        if spec.flows {
            for v in r.flows.expect("filtered") {
                x[(i, c)] = v;
                c += 1;
            }
        }
        for v in &r.controls[..spec.controls.len()] {
            x[(i, c)] = v.expect("filtered");
            c += 1;
        }
        for &yr in &dummies {
            x[(i, c)] = if r.year == yr { 1.0 } else { 0.0 };
            c += 1;
        }
        x[(i, c)] = 1.0;
        y[i] = r.outcome.expect("filtered");
    }

    let qr = HouseholderQr::new(&x, false);
    let diag = qr.r_diagonal();
    let scale = diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let collinear: Vec<String> = diag
        .iter()
        .zip(&names)
        .filter(|(d, _)| d.abs() <= 1e-10 * scale.max(f64::MIN_POSITIVE))
        .map(|(_, n)| n.clone())
        .collect();
    if !collinear.is_empty() {
        return Err(Error::RankDeficient(collinear));
    }
    let beta = qr.solve_least_squares(&y);
    let bread = qr.gram_inverse();
    let fitted = &x * DVector::from_column_slice(&beta);
    let resid: Vec<f64> = y.iter().zip(fitted.iter()).map(|(a, b)| a - b).collect();
    let ssr: f64 = resid.iter().map(|e| e * e).sum();
    let mean = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let r_squared = if sst > 0.0 { 1.0 - ssr / sst } else if ssr == 0.0 { 1.0 } else { 0.0 };

    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        groups.entry(r.region.as_str()).or_default().push(i);
    }
    let g = groups.len();
    let (nf, kf) = (n as f64, k as f64);
    let (covariance, df_resid) = match spec.covariance {
        Covariance::Classical => (&bread * (ssr / (nf - kf)), n - k),
        Covariance::Hc1 => {
            let meat = score_outer(&x, &resid, (0..n).map(|i| vec![i]));
            (&bread * meat * &bread * (nf / (nf - kf)), n - k)
        }
        Covariance::ClusterCr1 => {
            if g < 2 {
                return Err(Error::TooFewClusters(g));
            }
            let gf = g as f64;
            let meat = score_outer(&x, &resid, groups.values().cloned());
            let factor = (gf / (gf - 1.0)) * ((nf - 1.0) / (nf - kf));
            (&bread * meat * &bread * factor, g - 1)
        }
    };
    let covariance = (&covariance + covariance.transpose()) * 0.5;
    let std_errors: Vec<f64> = (0..k).map(|i| covariance[(i, i)].max(0.0).sqrt()).collect();
    let t = StudentsT::new(0.0, 1.0, df_resid as f64)
        .map_err(|e| Error::InvalidArgument(format!("t distribution: {e}")))?;
    let p_values = beta
        .iter()
        .zip(&std_errors)
        .map(|(b, s)| if *s > 0.0 { 2.0 * t.sf((b / s).abs()) } else { f64::NAN })
        .collect();

    Ok(RegressionResult {
        outcome: spec.outcome.clone(),
        names,
        coefficients: beta,
        covariance,
        std_errors,
        p_values,
        r_squared,
        n,
        clusters: g,
        kind: spec.covariance,
        reference_year,
        df_resid,
    })
}

/// `Σ_g (X_gᵀ e_g)(X_gᵀ e_g)ᵀ`
fn score_outer<I: Iterator<Item = Vec<usize>>>(x: &DMatrix<f64>, resid: &[f64], groups: I) -> DMatrix<f64> {
    let k = x.ncols();
    let mut meat = DMatrix::<f64>::zeros(k, k);
    for members in groups {
        let mut s = DVector::<f64>::zeros(k);
        for i in members {
            for j in 0..k {
                s[j] += x[(i, j)] * resid[i];
            }
        }
        meat += &s * s.transpose();
    }
    meat
}

/// Joint test that the three flow coefficients are zero:
/// `F = (Rβ)ᵀ(R·V·Rᵀ)⁻¹(Rβ)/3` against `F(3, df_resid)`.
pub fn wald_flow_test(result: &RegressionResult) -> Result<WaldTest> {
    let idx: Vec<usize> = FLOW_COLUMNS
        .iter()
        .map(|c| result.index_of(c).ok_or_else(|| Error::MissingColumn(c.to_string())))
        .collect::<Result<_>>()?;
    let q = idx.len();
    let rb: Vec<f64> = idx.iter().map(|&i| result.coefficients[i]).collect();
    let rvr = DMatrix::from_fn(q, q, |a, b| result.covariance[(idx[a], idx[b])]);
    let qr = HouseholderQr::new(&rvr, false);
    let diag = qr.r_diagonal();
    let scale = diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if scale == 0.0 || diag.iter().any(|d| d.abs() <= 1e-13 * scale) {
        return Err(Error::SingularCovariance);
    }
    let sol = qr.solve_least_squares(&rb);
    let f = rb.iter().zip(&sol).map(|(a, b)| a * b).sum::<f64>() / q as f64;
    let dist = FisherSnedecor::new(q as f64, result.df_resid as f64)
        .map_err(|e| Error::InvalidArgument(format!("F distribution: {e}")))?;
    Ok(WaldTest {
        f,
        df_num: q,
        df_den: result.df_resid,
        p_value: dist.sf(f),
    })
}

pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

/// One fitted (or failed) model column of a coefficient table.
pub type ModelColumn = (String, std::result::Result<RegressionResult, String>);

/// Text table with one column per model: estimates with stars, standard
/// errors in parentheses, fixed-effect flag, N, R² and the flow Wald block.
pub fn format_table(models: &[ModelColumn]) -> String {
    let mut rows: Vec<String> = Vec::new();
    for (_, m) in models {
        if let Ok(r) = m {
            for n in &r.names {
                if !n.starts_with("year_") && !rows.contains(n) {
                    rows.push(n.clone());
                }
            }
        }
    }
    // constant last
    rows.retain(|n| n != CONSTANT);
    rows.push(CONSTANT.into());

    let width = 14;
    let label = 22;
    let mut out = String::new();
    let line = |out: &mut String, name: &str, cells: Vec<String>| {
        let _ = write!(out, "{name:<label$}");
        for c in cells {
            let _ = write!(out, "{c:>width$}");
        }
        out.push('\n');
    };
    line(&mut out, "", models.iter().map(|(n, _)| n.clone()).collect());
    for name in &rows {
        let mut est = Vec::new();
        let mut se = Vec::new();
        for (_, m) in models {
            match m.as_ref().ok().and_then(|r| r.index_of(name).map(|i| (r, i))) {
                Some((r, i)) => {
                    est.push(format!("{:.2}{:<3}", r.coefficients[i], stars(r.p_values[i])));
                    se.push(format!("({:.2})   ", r.std_errors[i]));
                }
                None => {
                    est.push(String::new());
                    se.push(String::new());
                }
            }
        }
        line(&mut out, name, est);
        line(&mut out, "", se);
    }
    let cell = |f: &dyn Fn(&RegressionResult) -> String| -> Vec<String> {
        models
            .iter()
            .map(|(_, m)| match m {
                Ok(r) => f(r),
                Err(_) => "failed".into(),
            })
            .collect()
    };
    line(&mut out, "Year fixed effects", cell(&|_| "Yes".into()));
    line(&mut out, "N", cell(&|r| r.n.to_string()));
    line(&mut out, "R2", cell(&|r| format!("{:.2}", r.r_squared)));
    let walds: Vec<Option<WaldTest>> = models
        .iter()
        .map(|(_, m)| m.as_ref().ok().and_then(|r| wald_flow_test(r).ok()))
        .collect();
    if walds.iter().any(Option::is_some) {
        out.push_str("Wald tests for flow predictors\n");
        let pick = |f: &dyn Fn(&WaldTest) -> String| -> Vec<String> {
            walds.iter().map(|w| w.as_ref().map(f).unwrap_or_default()).collect()
        };
        line(&mut out, "F", pick(&|w| format!("{:.2}", w.f)));
        line(&mut out, "d.f.", pick(&|w| format!("({}, {})", w.df_num, w.df_den)));
        line(&mut out, "p-value", pick(&|w| format!("{:.2}", w.p_value)));
    } else {
        out.push_str("Wald block omitted: no flow predictors in any model\n");
    }
    for (name, m) in models {
        if let Err(e) = m {
            let _ = writeln!(out, "note: model {name} failed: {e}");
        }
    }
    if let Some(r) = models.iter().find_map(|(_, m)| m.as_ref().ok()) {
        let _ = writeln!(
            out,
            "note: {}; Wald reference F(3, {}); *p<0.1 **p<0.05 ***p<0.01 two-tailed",
            match r.kind {
                Covariance::ClusterCr1 => "standard errors clustered on region, CR1 factor (G/(G-1))((N-1)/(N-K))",
                Covariance::Hc1 => "heteroskedasticity-robust standard errors, HC1",
                Covariance::Classical => "classical standard errors",
            },
            match r.kind {
                Covariance::ClusterCr1 => "G-1",
                _ => "N-K",
            }
        );
    }
    out
}

/// Panel file with `region` and `year` columns plus any numeric columns.
/// Empty cells, `NA` and `.` are missing.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub columns: Vec<String>,
    pub regions: Vec<String>,
    pub years: Vec<i32>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl Panel {
    pub fn parse<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.to_string()).collect();
        let find = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::MissingColumn(name.to_string()))
        };
        let (ri, yi) = (find("region")?, find("year")?);
        let data_cols: Vec<usize> = (0..headers.len()).filter(|&c| c != ri && c != yi).collect();
        let mut panel = Panel {
            columns: data_cols.iter().map(|&c| headers[c].clone()).collect(),
            regions: Vec::new(),
            years: Vec::new(),
            values: Vec::new(),
        };
        for row in rdr.records() {
            let row = row?;
            let line = row.position().map_or(0, |p| p.line());
            let year = row.get(yi).unwrap_or("").parse().map_err(|_| {
                Error::InvalidArgument(format!("line {line}: year `{}` is not an integer", row.get(yi).unwrap_or("")))
            })?;
            let mut vals = Vec::with_capacity(data_cols.len());
            for &c in &data_cols {
                let s = row.get(c).unwrap_or("");
                vals.push(match s {
                    "" | "NA" | "." => None,
                    s => Some(s.parse().map_err(|_| {
                        Error::InvalidArgument(format!("line {line}: `{}` value `{s}` is not a number", headers[c]))
                    })?),
                });
            }
            panel.regions.push(row.get(ri).unwrap_or("").to_string());
            panel.years.push(year);
            panel.values.push(vals);
        }
        Ok(panel)
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.iter().any(|c| c == name)
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    /// Rows for `spec`; errors when a referenced column is absent.
    pub fn rows_for(&self, spec: &ModelSpec) -> Result<Vec<PanelRow>> {
        let oc = self.column(&spec.outcome)?;
        let fc: Vec<usize> = if spec.flows {
            FLOW_COLUMNS.iter().map(|c| self.column(c)).collect::<Result<_>>()?
        } else {
            Vec::new()
        };
        let cc: Vec<usize> = spec.controls.iter().map(|c| self.column(c)).collect::<Result<_>>()?;
        Ok((0..self.values.len())
            .map(|i| {
                let v = &self.values[i];
                let flows = if fc.is_empty() {
                    None
                } else {
                    match (v[fc[0]], v[fc[1]], v[fc[2]]) {
                        (Some(a), Some(b), Some(c)) => Some([a, b, c]),
                        _ => None,
                    }
                };
                PanelRow {
                    region: self.regions[i].clone(),
                    year: self.years[i],
                    outcome: v[oc],
                    flows,
                    controls: cc.iter().map(|&c| v[c]).collect(),
                }
            })
            .collect())
    }
}
