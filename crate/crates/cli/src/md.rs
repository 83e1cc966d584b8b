//! Human-readable markdown rendering of reports. The JSON stream is the
//! machine contract; this module only summarizes it for people, so witness
//! matrices are described rather than dumped.

use coherence_core::framework::{VerificationReport, Witness};

/// Renders a verification run as a summary table plus one section per
/// failing condition.
pub fn verify_md(reports: &[VerificationReport]) -> String {
    let mut s = String::new();
    s.push_str("# Verification report\n\n");
    s.push_str("| measure | condition | result | trials | worst violation | tolerance |\n");
    s.push_str("|---|---|---|---:|---:|---:|\n");
    for r in reports {
        s.push_str(&format!(
            "| {} | {} | {} | {} | {:.3e} | {:.1e} |\n",
            r.measure,
            r.condition,
            if r.passed { "pass" } else { "FAIL" },
            r.trials,
            r.worst_violation,
            r.tolerance,
        ));
    }
    for r in reports.iter().filter(|r| !r.passed) {
        s.push_str(&format!(
            "\n## {} / {} failed\n\nWorst violation {:.6e} exceeds tolerance {:.1e} (seed {}).\n",
            r.measure, r.condition, r.worst_violation, r.tolerance, r.seed
        ));
        if let Some(w) = &r.witness {
            s.push_str(&format!(
                "Witness ({}): see the JSON report for the full matrices.\n",
                witness_summary(w)
            ));
        }
    }
    s
}

fn witness_summary(w: &Witness) -> String {
    match w {
        Witness::State { state, branch } => {
            format!("dimension-{} state from the {branch} branch", state.dim)
        }
        Witness::StateChannel {
            state,
            channel,
            construction,
        } => format!(
            "dimension-{} state under a {} Kraus-operator '{construction}' channel",
            state.dim,
            channel.kraus.len()
        ),
        Witness::Blocks {
            weights, blocks, ..
        } => format!(
            "{}-block mixture, dims {:?}, weights {:?}",
            blocks.len(),
            blocks.iter().map(|b| b.dim).collect::<Vec<_>>(),
            weights
        ),
        Witness::Ensemble { weights, states } => format!(
            "{}-member ensemble of dimension-{} states, weights {:?}",
            states.len(),
            states.first().map(|s| s.dim).unwrap_or(0),
            weights
        ),
        Witness::StateObservable { state, branch, .. } => format!(
            "dimension-{} state/observable pair from the {branch} branch",
            state.dim
        ),
        Witness::StateChannelObservable { state, channel, .. } => format!(
            "dimension-{} state under a {} Kraus-operator channel with observable",
            state.dim,
            channel.kraus.len()
        ),
    }
}

/// Renders a reproduction record: a header, the verdict, and the record's
/// top-level fields (arrays of row objects become tables).
pub fn reproduce_md(case: &str, passed: bool, record: &serde_json::Value) -> String {
    let mut s = String::new();
    s.push_str(&format!("# Reproduction: {case}\n\n"));
    s.push_str(&format!(
        "Result: **{}**\n\n",
        if passed { "reproduced" } else { "NOT reproduced" }
    ));
    if let serde_json::Value::Object(fields) = record {
        for (key, value) in fields {
            match value {
                serde_json::Value::Array(rows) if rows.iter().all(|r| r.is_object()) => {
                    s.push_str(&format!("## {key}\n\n"));
                    s.push_str(&rows_table(rows));
                    s.push('\n');
                }
                other => {
                    s.push_str(&format!("- `{key}`: {other}\n"));
                }
            }
        }
    }
    s
}

/// A markdown table from an array of flat JSON objects, using the first
/// row's keys as columns.
fn rows_table(rows: &[serde_json::Value]) -> String {
    let Some(serde_json::Value::Object(first)) = rows.first() else {
        return String::new();
    };
    let columns: Vec<&String> = first.keys().collect();
    let mut s = String::new();
    s.push_str(&format!(
        "| {} |\n",
        columns
            .iter()
            .map(|c| c.as_str())
            .collect::<Vec<_>>()
            .join(" | ")
    ));
    s.push_str(&format!("|{}\n", "---|".repeat(columns.len())));
    for row in rows {
        if let serde_json::Value::Object(obj) = row {
            let cells: Vec<String> = columns
                .iter()
                .map(|c| obj.get(*c).map(|v| v.to_string()).unwrap_or_default())
                .collect();
            s.push_str(&format!("| {} |\n", cells.join(" | ")));
        }
    }
    s
}
