//! Delimited report tables.
//!
//! Every renderer is a pure function of its report, so files written from
//! the same run replay byte-for-byte. Numeric formatting is fixed-width
//! decimal rather than shortest-float for the same reason.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::eval::{GridReport, ImitationReport, InductionReport, JudgeReport, SweepReport};
use crate::persona::TraitDim;
use crate::psych::TraitReport;

fn f2(x: f64) -> String {
    format!("{x:.2}")
}

fn f3(x: f64) -> String {
    format!("{x:.3}")
}

/// One row per method; per trait a mean and a variance column.
pub fn render_induction_tsv(report: &InductionReport) -> String {
    let mut out = String::from("method");
    for dim in TraitDim::ALL {
        let _ = write!(out, "\t{dim}_mean\t{dim}_var");
    }
    out.push('\n');
    let mut methods = Vec::new();
    for cell in &report.cells {
        if !methods.contains(&cell.method) {
            methods.push(cell.method);
        }
    }
    for method in methods {
        let _ = write!(out, "{method}");
        for dim in TraitDim::ALL {
            match report.cell(method, dim) {
                Some(cell) => {
                    let _ = write!(out, "\t{}\t{}", f2(cell.mean), f2(cell.variance));
                }
                None => out.push_str("\t\t"),
            }
        }
        out.push('\n');
    }
    out
}

/// Per-trait correlation summary of a sweep.
pub fn render_sweep_tsv(report: &SweepReport) -> String {
    let mut out = String::from("trait\tr\tp\tn\tflag\n");
    for row in &report.rows {
        match &row.correlation {
            Some(c) => {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t",
                    row.trait_dim,
                    f3(c.r),
                    f3(c.p_value),
                    c.sample_count
                );
            }
            None => {
                let _ = writeln!(
                    out,
                    "{}\t\t\t\t{}",
                    row.trait_dim,
                    row.flag.as_deref().unwrap_or("flagged")
                );
            }
        }
    }
    out
}

/// Plot-ready (trait, level, score) series; flagged traits are omitted
/// with a note line.
pub fn render_sweep_series_tsv(report: &SweepReport) -> String {
    let mut out = String::from("trait\tlevel\tscore\n");
    for row in &report.rows {
        if let Some(flag) = &row.flag {
            let _ = writeln!(out, "# {} omitted: {flag}", row.trait_dim);
            continue;
        }
        for point in &row.points {
            let _ = writeln!(
                out,
                "{}\t{}\t{}",
                row.trait_dim,
                point.level,
                point.score.map(f3).unwrap_or_default()
            );
        }
    }
    out
}

/// Verdict-level rows plus a pooled aggregate footer.
pub fn render_judge_tsv(report: &JudgeReport) -> String {
    let mut out = String::from("dialogue\ttrait\ttruth\tverdict\tcorrect\n");
    for v in &report.verdicts {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            v.dialogue_id,
            v.trait_dim,
            v.truth.label(),
            v.verdict.map(crate::eval::Comparison::label).unwrap_or("invalid"),
            if v.correct { 1 } else { 0 }
        );
    }
    let _ = writeln!(
        out,
        "aggregate\t\t\t\t{}",
        f3(report.aggregate)
    );
    out
}

/// Grid rows (backend, scale, prompt) with one RMSE column per
/// questionnaire plus their average.
pub fn render_grid_tsv(report: &GridReport) -> String {
    let mut questionnaires = Vec::new();
    for cell in &report.cells {
        if !questionnaires.contains(&cell.questionnaire) {
            questionnaires.push(cell.questionnaire.clone());
        }
    }
    let mut rows: Vec<(String, u32, crate::prompt::PromptKind)> = Vec::new();
    for cell in &report.cells {
        let key = (cell.backend.clone(), cell.scale, cell.prompt_kind);
        if !rows.contains(&key) {
            rows.push(key);
        }
    }

    let mut out = String::from("backend\tscale\tprompt");
    for q in &questionnaires {
        let _ = write!(out, "\t{q}");
    }
    out.push_str("\taverage\n");
    for (backend, scale, kind) in rows {
        let _ = write!(out, "{backend}\t{scale}\t{kind}");
        let mut values = Vec::new();
        for q in &questionnaires {
            let cell = report.cells.iter().find(|c| {
                c.backend == backend
                    && c.scale == scale
                    && c.prompt_kind == kind
                    && &c.questionnaire == q
            });
            match cell {
                Some(c) => {
                    let flag = if c.flagged { "*" } else { "" };
                    let _ = write!(out, "\t{}{flag}", f3(c.rmse));
                    values.push(c.rmse);
                }
                None => out.push('\t'),
            }
        }
        let average = values.iter().sum::<f64>() / values.len().max(1) as f64;
        let _ = writeln!(out, "\t{}", f3(average));
    }
    out
}

/// Trait score table of a single administration.
pub fn render_trait_report_tsv(report: &TraitReport) -> String {
    let mut out = String::from("trait\tmean\tvariance\tanswered\tmissing\n");
    for (dim, s) in &report.traits {
        let _ = writeln!(
            out,
            "{dim}\t{}\t{}\t{}\t{}",
            f2(s.mean),
            f2(s.variance),
            s.answered,
            s.missing
        );
    }
    for dim in &report.omitted {
        let _ = writeln!(out, "{dim}\t\t\t0\t");
    }
    if report.unreliable {
        out.push_str("# unreliable: more than the missing-data threshold went unanswered\n");
    }
    out
}

/// Per-agent consistency scores, one block per transcript.
pub fn render_consistency_tsv(
    scorer: &str,
    rows: &[(String, BTreeMap<String, f64>)],
) -> String {
    let mut out = String::from("dialogue\tagent\tscorer\tconsistency\n");
    for (dialogue_id, agents) in rows {
        for (agent, value) in agents {
            let _ = writeln!(out, "{dialogue_id}\t{agent}\t{scorer}\t{}", f3(*value));
        }
    }
    out
}

/// Per-person imitation RMSE plus the aggregate.
pub fn render_imitation_tsv(report: &ImitationReport) -> String {
    let mut out = String::from("person\trmse\tunreliable\n");
    for p in &report.persons {
        let _ = writeln!(
            out,
            "{}\t{}\t{}",
            p.person_id,
            p.rmse.map(f3).unwrap_or_else(|| "incomplete".into()),
            if p.unreliable { 1 } else { 0 }
        );
    }
    let _ = writeln!(
        out,
        "aggregate\t{}\t",
        report.aggregate_rmse.map(f3).unwrap_or_else(|| "incomplete".into())
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{single_trait_induction, trait_sweep, InductionConfig, SweepConfig};
    use crate::gateway::{BackendSpec, GenerationParams, ScriptedBehavior};
    use crate::psych::{parse_questionnaire, AdministerOptions};

    fn bank() -> crate::psych::Questionnaire {
        parse_questionnaire(
            "id\ttext\ttrait\tfacet\treverse\n\
             o1\tOpenness defines me.\topenness\t\t0\n\
             c1\tConscientiousness defines me.\tconscientiousness\t\t0\n\
             e1\tExtraversion defines me.\textraversion\t\t0\n\
             a1\tAgreeableness defines me.\tagreeableness\t\t0\n\
             n1\tNeuroticism defines me.\tneuroticism\t\t0",
            "toy".into(),
        )
        .unwrap()
    }

    #[test]
    fn sweep_series_has_exactly_three_columns_per_row() {
        let gw = BackendSpec::scripted(ScriptedBehavior::PersonaLinear).build().unwrap();
        let report = trait_sweep(
            &gw,
            &bank(),
            &SweepConfig::default(),
            &GenerationParams::default(),
            &AdministerOptions::default(),
            0,
        )
        .unwrap();
        let series = render_sweep_series_tsv(&report);
        let mut lines = series.lines();
        assert_eq!(lines.next(), Some("trait\tlevel\tscore"));
        let data: Vec<&str> = lines.filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data.len(), 50, "5 series x 10 points");
        for line in data {
            assert_eq!(line.split('\t').count(), 3, "{line}");
        }
    }

    #[test]
    fn induction_table_has_one_row_per_method_and_ten_value_columns() {
        let gw = BackendSpec::scripted(ScriptedBehavior::PersonaLinear).build().unwrap();
        let report = single_trait_induction(
            &gw,
            &bank(),
            &InductionConfig::default(),
            &GenerationParams::default(),
            &AdministerOptions::default(),
        )
        .unwrap();
        let table = render_induction_tsv(&report);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 1 + 5, "header + 5 methods");
        assert_eq!(lines[0].split('\t').count(), 1 + 10, "method + 5 x (mean, var)");
        assert!(lines.iter().any(|l| l.starts_with("simple\t5.00\t0.00")));
    }

    #[test]
    fn renders_are_deterministic() {
        let gw = BackendSpec::scripted(ScriptedBehavior::PersonaLinear).build().unwrap();
        let make = || {
            trait_sweep(
                &gw,
                &bank(),
                &SweepConfig::default(),
                &GenerationParams::default(),
                &AdministerOptions::default(),
                3,
            )
            .unwrap()
        };
        assert_eq!(render_sweep_tsv(&make()), render_sweep_tsv(&make()));
    }
}
