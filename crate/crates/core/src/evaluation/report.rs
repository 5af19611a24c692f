use super::{MetricsReport, Rate};

/// Published results: (ACC, Se N, +P N, Se E, +P E) in percent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineRow {
    pub method: &'static str,
    pub validation: Option<[f64; 5]>,
    pub test: Option<[f64; 5]>,
}

pub const TABLE1: [BaselineRow; 7] = [
    BaselineRow {
        method: "RF",
        validation: Some([93.6, 94.3, 93.1, 93.0, 94.2]),
        test: Some([92.1, 92.9, 91.4, 91.2, 92.8]),
    },
    BaselineRow {
        method: "SVM",
        validation: Some([95.0, 96.3, 93.8, 93.6, 96.2]),
        test: Some([94.3, 94.4, 94.2, 94.2, 94.4]),
    },
    BaselineRow {
        method: "SVM (linear)",
        validation: Some([89.4, 89.9, 89.0, 88.9, 89.8]),
        test: Some([91.8, 93.2, 90.6, 90.4, 93.0]),
    },
    BaselineRow {
        method: "NN",
        validation: Some([95.2, 95.7, 94.7, 94.7, 95.6]),
        test: Some([93.1, 94.0, 92.3, 92.2, 93.9]),
    },
    BaselineRow {
        method: "KNN (k=4)",
        validation: Some([96.4, 97.4, 95.5, 95.4, 97.4]),
        test: Some([91.5, 95.0, 88.8, 88.0, 94.6]),
    },
    BaselineRow {
        method: "KNN (k=57)",
        validation: Some([92.7, 90.7, 94.5, 94.7, 91.1]),
        test: Some([90.9, 88.1, 93.3, 93.7, 88.7]),
    },
    BaselineRow {
        method: "VPNet",
        validation: None,
        test: Some([96.7, 99.4, 94.2, 93.9, 99.3]),
    },
];

/// Published ranges (Se N, +P N, Se E, +P E) of other methods on test data.
pub const STATE_OF_THE_ART_TEST: [&str; 4] = ["80-99%", "85-99%", "77-96%", "63-99%"];

/// Percent with one decimal, rounded half up in exact arithmetic.
pub fn percent(r: Rate) -> String {
    let (n, d) = (*r.numer() as u128, *r.denom() as u128);
    let tenths = (2 * n * 1000 + d) / (2 * d);
    format!("{}.{}%", tenths / 10, tenths % 10)
}

fn opt_percent(r: Option<Rate>) -> String {
    r.map(percent).unwrap_or_else(|| "N/A".into())
}

fn exact(r: Option<Rate>) -> String {
    r.map(|r| format!("{}/{}", r.numer(), r.denom())).unwrap_or_default()
}

pub fn metrics_csv_header() -> &'static str {
    "model,role,total,artifacts,tp,tn,fp,fn,acc,se_normal,pp_normal,se_ectopic,pp_ectopic,acc_percent"
}

/// Rates are exact fractions; absent ratios are empty fields.
pub fn metrics_csv_row(model: &str, m: &MetricsReport) -> String {
    let c = m.counts;
    format!(
        "{model},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        m.role.name(),
        c.total(),
        m.artifact_count,
        c.tp,
        c.tn,
        c.fp,
        c.fn_,
        exact(Some(m.acc)),
        exact(m.se_normal),
        exact(m.pp_normal),
        exact(m.se_ectopic),
        exact(m.pp_ectopic),
        percent(m.acc)
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub method: String,
    /// Name of the matching published row, if any.
    pub baseline: Option<&'static str>,
    pub validation: Option<MetricsReport>,
    pub test: Option<MetricsReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub markdown: String,
    pub csv: String,
}

fn cells(m: &Option<MetricsReport>) -> [String; 5] {
    match m {
        Some(m) => [
            percent(m.acc),
            opt_percent(m.se_normal),
            opt_percent(m.pp_normal),
            opt_percent(m.se_ectopic),
            opt_percent(m.pp_ectopic),
        ],
        None => std::array::from_fn(|_| "N/A".to_string()),
    }
}

fn baseline_cells(v: Option<[f64; 5]>) -> [String; 5] {
    match v {
        Some(v) => v.map(|x| format!("{x:.1}%")),
        None => std::array::from_fn(|_| "N/A".to_string()),
    }
}

fn baseline(name: &str) -> Option<&'static BaselineRow> {
    TABLE1.iter().find(|b| b.method == name)
}

const HEADER: &str = "| Method | Val ACC | Val Se N | Val +P N | Val Se E | Val +P E | Test ACC | Test Se N | Test +P N | Test Se E | Test +P E |";
const RULE: &str = "|---|---|---|---|---|---|---|---|---|---|---|";

fn md_row(method: &str, val: &[String; 5], test: &[String; 5]) -> String {
    format!("| {method} | {} | {} |\n", val.join(" | "), test.join(" | "))
}

/// Our results next to the published table, as markdown and CSV.
pub fn compare_report(rows: &[ReportRow]) -> Comparison {
    let mut md = String::from("## Results\n\n");
    md.push_str(HEADER);
    md.push('\n');
    md.push_str(RULE);
    md.push('\n');
    for r in rows {
        md.push_str(&md_row(&r.method, &cells(&r.validation), &cells(&r.test)));
    }
    md.push_str("\n## Published baseline\n\n");
    md.push_str(HEADER);
    md.push('\n');
    md.push_str(RULE);
    md.push('\n');
    for b in &TABLE1 {
        md.push_str(&md_row(b.method, &baseline_cells(b.validation), &baseline_cells(b.test)));
    }
    let mut sota_test = vec!["N/A".to_string()];
    sota_test.extend(STATE_OF_THE_ART_TEST.iter().map(|s| s.to_string()));
    let sota_test: [String; 5] = sota_test.try_into().expect("five cells");
    md.push_str(&md_row("State-of-the-art", &baseline_cells(None), &sota_test));

    if rows.iter().any(|r| r.baseline.is_some()) {
        md.push_str("\n## Accuracy against baseline\n\n| Method | Val ACC | Paper Val ACC | Test ACC | Paper Test ACC |\n|---|---|---|---|---|\n");
        for r in rows {
            let Some(b) = r.baseline.and_then(baseline) else { continue };
            let ours = |m: &Option<MetricsReport>| m.as_ref().map(|m| percent(m.acc)).unwrap_or_else(|| "N/A".into());
            let paper = |v: Option<[f64; 5]>| v.map(|v| format!("{:.1}%", v[0])).unwrap_or_else(|| "N/A".into());
            md.push_str(&format!(
                "| {} | {} | {} | {} | {} |\n",
                r.method,
                ours(&r.validation),
                paper(b.validation),
                ours(&r.test),
                paper(b.test)
            ));
        }
    }

    let mut csv = String::from("method,source,role,acc,se_normal,pp_normal,se_ectopic,pp_ectopic\n");
    for r in rows {
        for (role, m) in [("validation", &r.validation), ("test", &r.test)] {
            if m.is_some() {
                csv.push_str(&format!("{},ours,{role},{}\n", r.method, cells(m).join(",")));
            }
        }
    }
    for b in &TABLE1 {
        for (role, v) in [("validation", b.validation), ("test", b.test)] {
            if v.is_some() {
                csv.push_str(&format!("{},paper,{role},{}\n", b.method, baseline_cells(v).join(",")));
            }
        }
    }
    Comparison { markdown: md, csv }
}
