//! Report emitters. Key order and number format are fixed so identical
//! inputs always serialize to identical bytes, and every report is
//! re-parsed before it is printed.

use clap::ValueEnum;
use mifi::channels::FlowTrace;
use mifi::fisher::{HierarchyEntry, HierarchyReport, OptimizerOptions};

use crate::presets::{classify, ExampleReport};

pub const CSV_HEADER: &str =
    "theta,fi_local_a,fi_local_b,fi_product_lb,fi_adaptive_ab_lb,fi_adaptive_ba_lb,fi_global";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Twelve significant digits: enough for meaningful regression diffs,
/// few enough to hide eigensolver noise.
pub fn num(x: f64) -> String {
    format!("{x:.11e}")
}

fn escape(s: &str) -> String {
    s.chars()
        .flat_map(|c| match c {
            '"' => vec!['\\', '"'],
            '\\' => vec!['\\', '\\'],
            c if (c as u32) < 0x20 => format!("\\u{:04x}", c as u32).chars().collect(),
            c => vec![c],
        })
        .collect()
}

/// The six report entries in canonical column order.
fn entries(r: &HierarchyReport) -> [(&'static str, &HierarchyEntry); 6] {
    [
        ("fi_local_a", &r.fi_local_a),
        ("fi_local_b", &r.fi_local_b),
        ("fi_product_lb", &r.fi_product),
        ("fi_adaptive_ab_lb", &r.fi_adaptive_ab),
        ("fi_adaptive_ba_lb", &r.fi_adaptive_ba),
        ("fi_global", &r.fi_global),
    ]
}

fn values_block(r: &HierarchyReport, indent: &str) -> String {
    let lines: Vec<String> = entries(r)
        .iter()
        .map(|(name, e)| format!("{indent}  \"{name}\": {}", num(e.value)))
        .collect();
    format!("{indent}{{\n{}\n{indent}}}", lines.join(",\n"))
}

fn methods_block(r: &HierarchyReport, indent: &str) -> String {
    let lines: Vec<String> = entries(r)
        .iter()
        .map(|(name, e)| format!("{indent}  \"{name}\": \"{}\"", e.method.as_str()))
        .collect();
    format!("{indent}{{\n{}\n{indent}}}", lines.join(",\n"))
}

fn chain_block(r: &HierarchyReport, indent: &str) -> String {
    let lines: Vec<String> = r
        .chain
        .iter()
        .map(|c| {
            format!(
                "{indent}  {{\"lhs\": \"{}\", \"rhs\": \"{}\", \"lhs_value\": {}, \"rhs_value\": {}, \"slack\": {}, \"pass\": {}}}",
                c.lhs_name,
                c.rhs_name,
                num(c.lhs),
                num(c.rhs),
                num(c.slack),
                c.pass
            )
        })
        .collect();
    format!("{indent}[\n{}\n{indent}]", lines.join(",\n"))
}

fn optimizer_block(o: &OptimizerOptions) -> String {
    format!(
        "{{\"starts\": {}, \"seed\": {}, \"max_evals\": {}}}",
        o.starts, o.seed, o.max_evals
    )
}

pub fn hierarchy_json(r: &HierarchyReport, optimizer: &OptimizerOptions) -> String {
    format!(
        "{{\n  \"theta\": {},\n  \"values\": {},\n  \"methods\": {},\n  \"chain\": {},\n  \"chain_ok\": {},\n  \"optimizer\": {}\n}}\n",
        num(r.theta),
        values_block(r, "  ").trim_start(),
        methods_block(r, "  ").trim_start(),
        chain_block(r, "  ").trim_start(),
        r.chain_ok(),
        optimizer_block(optimizer)
    )
}

pub fn csv_row(r: &HierarchyReport) -> String {
    let mut fields = vec![num(r.theta)];
    fields.extend(entries(r).iter().map(|(_, e)| num(e.value)));
    fields.join(",")
}

pub fn hierarchy_csv(r: &HierarchyReport) -> String {
    format!("{CSV_HEADER}\n{}\n", csv_row(r))
}

/// One sweep grid point: a full report, or a parameter value at which
/// every probed measurement was singular.
pub enum SweepPoint {
    Ok(HierarchyReport),
    Singular { theta: f64 },
}

pub fn sweep_json(points: &[SweepPoint]) -> String {
    let blocks: Vec<String> = points
        .iter()
        .map(|p| match p {
            SweepPoint::Ok(r) => format!(
                "    {{\n      \"theta\": {},\n      \"status\": \"ok\",\n      \"values\": {},\n      \"chain_ok\": {}\n    }}",
                num(r.theta),
                values_block(r, "      ").trim_start(),
                r.chain_ok()
            ),
            SweepPoint::Singular { theta } => format!(
                "    {{\n      \"theta\": {},\n      \"status\": \"singular_outcome\"\n    }}",
                num(*theta)
            ),
        })
        .collect();
    format!("{{\n  \"points\": [\n{}\n  ]\n}}\n", blocks.join(",\n"))
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for p in points {
        match p {
            SweepPoint::Ok(r) => out.push_str(&csv_row(r)),
            SweepPoint::Singular { theta } => out.push_str(&format!("{},,,,,,", num(*theta))),
        }
        out.push('\n');
    }
    out
}

pub fn qfi_json(theta: f64, qfi: f64, support_rank: usize, classical_fi: Option<f64>) -> String {
    let extra = match classical_fi {
        Some(v) => format!(",\n  \"classical_fi\": {}", num(v)),
        None => String::new(),
    };
    format!(
        "{{\n  \"theta\": {},\n  \"qfi\": {},\n  \"support_rank\": {support_rank}{extra}\n}}\n",
        num(theta),
        num(qfi)
    )
}

pub fn qfi_csv(theta: f64, qfi: f64, support_rank: usize, classical_fi: Option<f64>) -> String {
    match classical_fi {
        Some(v) => format!(
            "theta,qfi,support_rank,classical_fi\n{},{},{support_rank},{}\n",
            num(theta),
            num(qfi),
            num(v)
        ),
        None => format!(
            "theta,qfi,support_rank\n{},{},{support_rank}\n",
            num(theta),
            num(qfi)
        ),
    }
}

fn step_block(label: &str, r: &HierarchyReport, extra: &str) -> String {
    format!(
        "    {{\n      \"label\": \"{}\",\n      \"classification\": \"{}\",\n      \"values\": {},\n      \"chain_ok\": {}{extra}\n    }}",
        escape(label),
        classify(r),
        values_block(r, "      ").trim_start(),
        r.chain_ok()
    )
}

pub fn flow_json(theta: f64, trace: &FlowTrace) -> String {
    let steps: Vec<String> = trace
        .steps
        .iter()
        .map(|s| step_block(&s.label, &s.report, ""))
        .collect();
    format!(
        "{{\n  \"theta\": {},\n  \"steps\": [\n{}\n  ],\n  \"global_monotone\": {}\n}}\n",
        num(theta),
        steps.join(",\n"),
        trace.global_monotone(1e-9)
    )
}

pub fn example_json(ex: &ExampleReport) -> String {
    let steps: Vec<String> = ex
        .steps
        .iter()
        .map(|s| {
            let expected = format!(
                ",\n      \"expected\": {{\"fi_local_a\": {}, \"fi_local_b\": {}, \"fi_global\": {}, \"optimized\": {}}},\n      \"step_pass\": {}",
                num(s.expected.local_a),
                num(s.expected.local_b),
                num(s.expected.global),
                num(s.expected.optimized),
                s.step_pass
            );
            step_block(&s.label, &s.report, &expected)
        })
        .collect();
    format!(
        "{{\n  \"example\": \"{}\",\n  \"narrative\": \"{}\",\n  \"theta\": {},\n  \"steps\": [\n{}\n  ],\n  \"pass\": {}\n}}\n",
        escape(&ex.name),
        escape(&ex.narrative),
        num(ex.theta),
        steps.join(",\n"),
        ex.pass
    )
}

/// Re-parses a report before it is printed; a failure here is a bug, not
/// a user error.
pub fn self_check(format: Format, content: &str) -> Result<(), String> {
    match format {
        Format::Json => serde_json::from_str::<serde_json::Value>(content)
            .map(|_| ())
            .map_err(|e| format!("emitted report is not valid JSON: {e}")),
        Format::Csv => {
            let mut lines = content.lines().filter(|l| !l.is_empty());
            let header = lines.next().ok_or("emitted CSV is empty")?;
            let want = header.matches(',').count();
            for (i, line) in lines.enumerate() {
                if line.matches(',').count() != want {
                    return Err(format!("emitted CSV row {} has the wrong field count", i + 1));
                }
            }
            Ok(())
        }
    }
}

