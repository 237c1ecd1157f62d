//! Delimited-text ingestion, quadratic term expansion and plain-text reports.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::penalty::{PenaltyTable, PenaltySpec};
use crate::regress::{Dataset, ForwardPath, Sigma2Mode};
use crate::scalar::Scalar;
use crate::select::SelectionResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IngestOptions {
    pub standardize: bool,
    pub intercept: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self { standardize: true, intercept: true }
    }
}

fn sniff_delimiter(header: &str) -> u8 {
    if header.contains('\t') {
        b'\t'
    } else {
        b','
    }
}

/// Read a comma- or tab-delimited file with a header row. Every column other
/// than `response` becomes a candidate predictor. Row numbers in errors count
/// data rows from 1 (the header is row 0).
pub fn ingest<T: Scalar>(path: impl AsRef<Path>, response: &str, opts: IngestOptions) -> Result<Dataset<T>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_table(&text, response, opts)
}

pub fn parse_table<T: Scalar>(text: &str, response: &str, opts: IngestOptions) -> Result<Dataset<T>> {
    let header_line = text.lines().next().unwrap_or_default();
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(sniff_delimiter(header_line))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let yi = headers
        .iter()
        .position(|h| h == response)
        .ok_or_else(|| Error::MissingColumn(response.to_string()))?;

    let mut y = Vec::new();
    let mut columns: Vec<Vec<T>> = vec![Vec::new(); headers.len() - 1];
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(format!("row {}: {e}", r + 1)))?;
        if record.len() != headers.len() {
            return Err(Error::Parse(format!(
                "row {} has {} cells, header has {}",
                r + 1,
                record.len(),
                headers.len()
            )));
        }
        let mut c = 0;
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| Error::NonNumeric {
                row: r + 1,
                column: headers[j].clone(),
                value: cell.to_string(),
            })?;
            if j == yi {
                y.push(T::c(v));
            } else {
                columns[c].push(T::c(v));
                c += 1;
            }
        }
    }
    if y.len() < 3 {
        return Err(Error::InvalidDataset(format!("insufficient rows: {} (need at least 3)", y.len())));
    }
    let names = headers.into_iter().enumerate().filter(|&(j, _)| j != yi).map(|(_, h)| h).collect();
    let ds = Dataset::new(y, columns, names, opts.intercept)?;
    if opts.standardize {
        ds.standardize()
    } else {
        Ok(ds)
    }
}

/// Which second-order terms to append.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExpansionSpec {
    /// Main effects to keep and expand; empty means every column.
    pub main_effects: Vec<String>,
    /// Columns whose square is omitted (dichotomous variables).
    pub square_excluded: Vec<String>,
    pub include_interactions: bool,
}

impl ExpansionSpec {
    pub fn full_quadratic(square_excluded: &[&str]) -> Self {
        Self {
            main_effects: Vec::new(),
            square_excluded: square_excluded.iter().map(|s| s.to_string()).collect(),
            include_interactions: true,
        }
    }
}

/// Append pairwise products `A*B` and squares `A^2` of the standardized main
/// effects, then re-standardize every column.
pub fn expand<T: Scalar>(ds: &Dataset<T>, spec: &ExpansionSpec) -> Result<Dataset<T>> {
    let base = if ds.is_standardized() { ds.clone() } else { ds.standardize()? };
    let index_of = |name: &String| {
        base.names()
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownColumn(name.clone()))
    };
    let mains: Vec<usize> = if spec.main_effects.is_empty() {
        (0..base.m()).collect()
    } else {
        spec.main_effects.iter().map(index_of).collect::<Result<_>>()?
    };
    let excluded: Vec<usize> = spec.square_excluded.iter().map(index_of).collect::<Result<_>>()?;

    let mut columns: Vec<Vec<T>> = mains.iter().map(|&j| base.column(j).to_vec()).collect();
    let mut names: Vec<String> = mains.iter().map(|&j| base.names()[j].clone()).collect();
    let product = |a: usize, b: usize| -> Vec<T> {
        base.column(a).iter().zip(base.column(b)).map(|(&x, &y)| x * y).collect()
    };
    if spec.include_interactions {
        for (pos, &a) in mains.iter().enumerate() {
            for &b in &mains[pos + 1..] {
                columns.push(product(a, b));
                names.push(format!("{}*{}", base.names()[a], base.names()[b]));
            }
        }
    }
    for &a in &mains {
        if !excluded.contains(&a) {
            columns.push(product(a, a));
            names.push(format!("{}^2", base.names()[a]));
        }
    }
    Dataset::new(base.y().to_vec(), columns, names, ds.intercept())?.standardize()
}

fn fmt_sigma2<T: Scalar>(mode: &Sigma2Mode<T>) -> String {
    match mode {
        Sigma2Mode::Known(v) => format!("known:{v:?}"),
        Sigma2Mode::FullModel => "full-model".into(),
    }
}

/// Tab-delimited selection report: a key/value block followed by one row
/// per path step.
pub fn selection_report(
    ds: &Dataset<f64>,
    path: &ForwardPath<f64>,
    result: &SelectionResult<f64>,
    seed: Option<u64>,
) -> String {
    let names: Vec<&str> = result.selected.iter().map(|&j| ds.names()[j].as_str()).collect();
    let mut out = String::new();
    let kv = |out: &mut String, k: &str, v: String| {
        let _ = writeln!(out, "{k}\t{v}");
    };
    kv(&mut out, "key", "value".into());
    kv(&mut out, "method", result.method.to_string());
    kv(&mut out, "label", result.method.label());
    kv(&mut out, "rule", result.rule.to_string());
    kv(&mut out, "q", result.method.level().map_or("-".into(), |q| format!("{q:?}")));
    kv(&mut out, "sigma2_source", fmt_sigma2(&result.sigma2_source));
    kv(&mut out, "sigma2", format!("{:?}", result.sigma2));
    kv(&mut out, "seed", seed.map_or("-".into(), |s| s.to_string()));
    kv(&mut out, "n", ds.n().to_string());
    kv(&mut out, "m", ds.m().to_string());
    kv(&mut out, "k_selected", result.k_selected.to_string());
    kv(&mut out, "k_with_intercept", result.k_with_intercept().to_string());
    kv(
        &mut out,
        "iterations",
        result.iterations.map_or("-".into(), |i| i.to_string()),
    );
    if !result.size_history.is_empty() {
        let h: Vec<String> = result.size_history.iter().map(|s| s.to_string()).collect();
        kv(&mut out, "size_history", h.join(","));
    }
    kv(&mut out, "selected", names.join(","));
    kv(&mut out, "intercept", result.intercept_coef.map_or("-".into(), |c| format!("{c:?}")));
    let coefs: Vec<String> = result.coefficients.iter().map(|c| format!("{c:?}")).collect();
    kv(&mut out, "coefficients", coefs.join(","));
    kv(&mut out, "rss", format!("{:?}", result.rss));
    out.push('\n');
    let _ = writeln!(out, "step\tname\ttsq\trss\ttrace\tselected");
    let _ = writeln!(out, "0\t-\t-\t{:?}\t{:?}\t-", path.rss[0], result.trace[0]);
    for k in 1..=path.len() {
        let _ = writeln!(
            out,
            "{k}\t{}\t{:?}\t{:?}\t{:?}\t{}",
            ds.names()[path.entered[k - 1]],
            path.tsq[k - 1],
            path.rss[k],
            result.trace[k],
            k <= result.k_selected
        );
    }
    out
}

pub const PENALTY_TABLE_HEADER: &str = "family,m,k,alpha_k,lambda_k,step_cost_k";

/// Comma-delimited penalty table dump.
pub fn penalty_table_csv(table: &PenaltyTable<f64>) -> String {
    let mut out = String::from(PENALTY_TABLE_HEADER);
    out.push('\n');
    for k in 1..=table.kmax {
        let alpha = table.alpha.as_ref().map_or(String::new(), |a| format!("{:?}", a[k - 1]));
        let _ = writeln!(
            out,
            "{},{},{},{},{:?},{:?}",
            table.spec,
            table.m,
            k,
            alpha,
            table.lambda[k - 1],
            table.step_cost[k - 1]
        );
    }
    out
}

/// Parse a penalty-table dump back into `(spec, m, k, alpha, lambda, cost)` rows.
pub fn parse_penalty_table_csv(text: &str) -> Result<Vec<(PenaltySpec, usize, usize, Option<f64>, f64, f64)>> {
    let mut lines = text.lines();
    if lines.next() != Some(PENALTY_TABLE_HEADER) {
        return Err(Error::Parse("penalty table header mismatch".into()));
    }
    let bad = |l: &str| Error::Parse(format!("bad penalty table row `{l}`"));
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 6 {
                return Err(bad(l));
            }
            let alpha = if f[3].is_empty() { None } else { Some(f[3].parse().map_err(|_| bad(l))?) };
            Ok((
                f[0].parse()?,
                f[1].parse().map_err(|_| bad(l))?,
                f[2].parse().map_err(|_| bad(l))?,
                alpha,
                f[4].parse().map_err(|_| bad(l))?,
                f[5].parse().map_err(|_| bad(l))?,
            ))
        })
        .collect()
}
