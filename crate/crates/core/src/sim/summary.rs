use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::penalty::PenaltyFamily;

use super::config::SimMethod;
use super::run::{ConfigOutcome, MethodOutcome};

/// How many least-favourable configurations to average.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorstK {
    Count(usize),
    All,
}

impl fmt::Display for WorstK {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WorstK::Count(k) => write!(f, "{k}"),
            WorstK::All => f.write_str("all"),
        }
    }
}

impl FromStr for WorstK {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("all") {
            return Ok(WorstK::All);
        }
        match s.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(WorstK::Count(k)),
            _ => Err(Error::Parse(format!("worst-k {s:?} (expected a positive integer or ALL)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grouping {
    Overall,
    ByM,
    ByMRho,
}

/// Group key that sorts numerically: `(m, ρ)` with `None` for "any".
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct GroupKey {
    pub m: Option<usize>,
    pub rho: Option<f64>,
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.m, self.rho) {
            (None, _) => f.write_str("all"),
            (Some(m), None) => write!(f, "m={m}"),
            (Some(m), Some(r)) => write!(f, "m={m},rho={r}"),
        }
    }
}

impl Grouping {
    fn key(self, o: &ConfigOutcome) -> GroupKey {
        match self {
            Grouping::Overall => GroupKey { m: None, rho: None },
            Grouping::ByM => GroupKey { m: Some(o.m), rho: None },
            Grouping::ByMRho => GroupKey { m: Some(o.m), rho: Some(o.rho) },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub group: GroupKey,
    pub method: String,
    pub label: String,
    pub worst_k: WorstK,
    pub value: f64,
    /// Standard error of the single worst configuration (worst-1 only).
    pub se: Option<f64>,
    pub configs: usize,
}

fn group<'a>(outcomes: &'a [ConfigOutcome], grouping: Grouping) -> Vec<(GroupKey, Vec<&'a ConfigOutcome>)> {
    let mut groups: Vec<(GroupKey, Vec<&ConfigOutcome>)> = Vec::new();
    for o in outcomes {
        let key = grouping.key(o);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(o),
            None => groups.push((key, vec![o])),
        }
    }
    groups.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    groups
}

fn lookup<'a>(o: &'a ConfigOutcome, method: &str) -> Result<&'a MethodOutcome> {
    o.methods
        .iter()
        .find(|x| x.method == method)
        .ok_or_else(|| Error::InvalidConfig(format!("configuration {} has no method {method}", o.id)))
}

/// Mean of each method's `worst`-largest relative losses within each group
/// (worst-1 is the maximum). Methods follow the first outcome's order.
pub fn minimax_summary(outcomes: &[ConfigOutcome], worst: WorstK, grouping: Grouping) -> Result<Vec<SummaryRow>> {
    let first = outcomes.first().ok_or_else(|| Error::Empty("no configuration outcomes to summarize".into()))?;
    let mut rows = Vec::new();
    for (key, members) in group(outcomes, grouping) {
        for m in &first.methods {
            let mut losses = members
                .iter()
                .map(|o| lookup(o, &m.method).map(|x| (x.relative_loss, x.se)))
                .collect::<Result<Vec<_>>>()?;
            losses.sort_by(|a, b| b.0.total_cmp(&a.0));
            let take = match worst {
                WorstK::Count(k) => k.min(losses.len()),
                WorstK::All => losses.len(),
            };
            let value = losses[..take].iter().map(|v| v.0).sum::<f64>() / take as f64;
            rows.push(SummaryRow {
                group: key,
                method: m.method.clone(),
                label: m.label.clone(),
                worst_k: worst,
                value,
                se: (worst == WorstK::Count(1)).then_some(losses[0].1),
                configs: members.len(),
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestQRow {
    pub group: GroupKey,
    pub family: PenaltyFamily,
    pub q: f64,
    pub worst_loss: f64,
}

fn fdr_family(method: &str) -> Option<(PenaltyFamily, f64)> {
    let spec = method.parse::<SimMethod>().ok()?.spec()?;
    match spec.family() {
        f @ (PenaltyFamily::Bh | PenaltyFamily::Tsfdr | PenaltyFamily::Msfdr) => Some((f, spec.level()?)),
        _ => None,
    }
}

/// For each FDR family, the `q` whose worst-1 relative loss is smallest, per
/// `(m, ρ)` and per `m` over all ρ. Ties go to the smaller `q`.
pub fn best_q_table(outcomes: &[ConfigOutcome]) -> Result<Vec<BestQRow>> {
    let mut rows = Vec::new();
    for grouping in [Grouping::ByMRho, Grouping::ByM] {
        let worst = minimax_summary(outcomes, WorstK::Count(1), grouping)?;
        let mut best: BTreeMap<(String, u8), BestQRow> = BTreeMap::new();
        for r in &worst {
            let Some((family, q)) = fdr_family(&r.method) else { continue };
            let slot = (r.group.to_string(), family as u8);
            let better = best
                .get(&slot)
                .is_none_or(|b| r.value < b.worst_loss || (r.value == b.worst_loss && q < b.q));
            if better {
                best.insert(slot, BestQRow { group: r.group, family, q, worst_loss: r.value });
            }
        }
        rows.extend(best.into_values());
    }
    rows.sort_by(|a, b| {
        let ka = (a.group.m, a.group.rho.is_none(), a.group.rho.unwrap_or(0.0), a.family as u8);
        let kb = (b.group.m, b.group.rho.is_none(), b.group.rho.unwrap_or(0.0), b.family as u8);
        ka.partial_cmp(&kb).unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(rows)
}

const OUTCOME_HEADER: [&str; 17] = [
    "config", "m", "n", "rho", "beta_type", "p_index", "p", "c", "replications", "method", "label", "mean_mspe",
    "mean_oracle", "relative_loss", "se", "mean_size", "violations",
];

/// Tab-delimited rows for one configuration, one per method.
pub fn outcome_tsv(o: &ConfigOutcome) -> String {
    let mut out = OUTCOME_HEADER.join("\t");
    out.push('\n');
    for m in &o.methods {
        let cells = [
            o.id.clone(),
            o.m.to_string(),
            o.n.to_string(),
            o.rho.to_string(),
            o.beta_type.to_string(),
            o.p_index.to_string(),
            o.p.to_string(),
            o.c.to_string(),
            o.replications.to_string(),
            m.method.clone(),
            m.label.clone(),
            m.mean_mspe.to_string(),
            m.mean_oracle.to_string(),
            m.relative_loss.to_string(),
            m.se.to_string(),
            m.mean_size.to_string(),
            m.violations.to_string(),
        ];
        out.push_str(&cells.join("\t"));
        out.push('\n');
    }
    out
}

fn field<T: FromStr>(rec: &csv::StringRecord, i: usize, line: usize) -> Result<T> {
    let raw = rec.get(i).unwrap_or("");
    raw.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}, column {}: cannot parse {raw:?}", OUTCOME_HEADER[i])))
}

/// Parse [`outcome_tsv`] output. Several configurations may share one file.
pub fn parse_outcomes(text: &str) -> Result<Vec<ConfigOutcome>> {
    let mut reader = csv::ReaderBuilder::new().delimiter(b'\t').from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != OUTCOME_HEADER {
        return Err(Error::Parse(format!("unexpected outcome header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut out: Vec<ConfigOutcome> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Parse(format!("line {line}: {e}")))?;
        if rec.len() != OUTCOME_HEADER.len() {
            return Err(Error::Parse(format!("line {line}: expected {} fields", OUTCOME_HEADER.len())));
        }
        let id: String = field(&rec, 0, line)?;
        let method = MethodOutcome {
            method: field(&rec, 9, line)?,
            label: field(&rec, 10, line)?,
            mean_mspe: field(&rec, 11, line)?,
            mean_oracle: field(&rec, 12, line)?,
            relative_loss: field(&rec, 13, line)?,
            se: field(&rec, 14, line)?,
            mean_size: field(&rec, 15, line)?,
            violations: field(&rec, 16, line)?,
        };
        match out.last_mut() {
            Some(o) if o.id == id => o.methods.push(method),
            _ => out.push(ConfigOutcome {
                id,
                m: field(&rec, 1, line)?,
                n: field(&rec, 2, line)?,
                rho: field(&rec, 3, line)?,
                beta_type: field(&rec, 4, line)?,
                p_index: field(&rec, 5, line)?,
                p: field(&rec, 6, line)?,
                c: field(&rec, 7, line)?,
                replications: field(&rec, 8, line)?,
                methods: vec![method],
                records: Vec::new(),
            }),
        }
    }
    Ok(out)
}

fn groups_of(rows: &[SummaryRow]) -> Vec<GroupKey> {
    let mut g: Vec<GroupKey> = Vec::new();
    for r in rows {
        if !g.contains(&r.group) {
            g.push(r.group);
        }
    }
    g
}

/// Worst-1 relative loss per method and group, with the standard error of
/// the worst configuration alongside.
pub fn worst_case_table(outcomes: &[ConfigOutcome], grouping: Grouping) -> Result<String> {
    let rows = minimax_summary(outcomes, WorstK::Count(1), grouping)?;
    let groups = groups_of(&rows);
    let mut out = String::from("method");
    for g in &groups {
        out.push_str(&format!("\t{g}\tse[{g}]"));
    }
    out.push('\n');
    for m in &outcomes[0].methods {
        out.push_str(&m.method);
        for g in &groups {
            let r = rows.iter().find(|r| r.group == *g && r.method == m.method).unwrap();
            out.push_str(&format!("\t{}\t{}", r.value, r.se.unwrap_or(f64::NAN)));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Mean loss of the `k` least-favourable configurations for each `k` in `ks`.
pub fn least_favourable_table(outcomes: &[ConfigOutcome], grouping: Grouping, ks: &[WorstK]) -> Result<String> {
    let per_k = ks
        .iter()
        .map(|&k| minimax_summary(outcomes, k, grouping))
        .collect::<Result<Vec<_>>>()?;
    let groups = groups_of(&per_k[0]);
    let mut out = String::from("method");
    for g in &groups {
        for k in ks {
            out.push_str(&format!("\t{g} k={k}"));
        }
    }
    out.push('\n');
    for m in &outcomes[0].methods {
        out.push_str(&m.method);
        for g in &groups {
            for rows in &per_k {
                let r = rows.iter().find(|r| r.group == *g && r.method == m.method).unwrap();
                out.push_str(&format!("\t{}", r.value));
            }
        }
        out.push('\n');
    }
    Ok(out)
}

/// Preferred `q` by family, one line per group (`rho = any` for the per-m rows).
pub fn best_q_tsv(outcomes: &[ConfigOutcome]) -> Result<String> {
    let rows = best_q_table(outcomes)?;
    let mut out = String::from("m\trho\tfamily\tq\tworst_loss\n");
    for r in rows {
        let rho = r.group.rho.map_or("any".to_string(), |v| v.to_string());
        let m = r.group.m.map_or("all".to_string(), |v| v.to_string());
        out.push_str(&format!("{m}\t{rho}\t{:?}\t{}\t{}\n", r.family, r.q, r.worst_loss));
    }
    Ok(out)
}
