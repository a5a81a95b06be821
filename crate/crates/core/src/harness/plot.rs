use std::fmt::Write as _;
use std::path::Path;

use super::ResultRow;
use crate::error::{Error, Result};

fn py_float(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:?}"),
        _ => "None".to_string(),
    }
}

fn py_str(s: &str) -> String {
    let escaped: String = s
        .chars()
        .flat_map(|c| match c {
            '\\' => vec!['\\', '\\'],
            '"' => vec!['\\', '"'],
            c if c.is_ascii_graphic() || c == ' ' => vec![c],
            _ => vec!['_'],
        })
        .collect();
    format!("\"{escaped}\"")
}

fn unique(values: impl Iterator<Item = String>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for v in values {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

/// Source of a standalone matplotlib script that draws one pane per
/// (target, method): rows are targets, columns are methods, both axes
/// logarithmic. Reliable chains get a point with its interval; unreliable
/// ones a question mark. Failed cells are left out.
pub fn plot_script(rows: &[ResultRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::input("cannot plot an empty result set"));
    }
    let targets = unique(rows.iter().map(|r| r.target.clone()));
    let methods = unique(rows.iter().map(|r| r.method.clone()));
    let has_seconds = rows.iter().any(|r| r.seconds_per_indep.is_some());

    let mut s = String::new();
    s.push_str(
        "#!/usr/bin/env python3\n\
         \"\"\"Cost per independent sample against the tuning parameter.\n\
         \n\
         Usage: python3 plot.py [OUTPUT.png]\n\
         Writes OUTPUT (default figure-evals.png) and, when timings were\n\
         recorded, a seconds-per-sample figure next to it.\n\
         \"\"\"\n\
         import sys\n\
         import matplotlib\n\
         matplotlib.use(\"Agg\")\n\
         import matplotlib.pyplot as plt\n\n",
    );
    let list = |names: &[String]| {
        names
            .iter()
            .map(|n| py_str(n))
            .collect::<Vec<_>>()
            .join(", ")
    };
    writeln!(s, "TARGETS = [{}]", list(&targets)).unwrap();
    writeln!(s, "METHODS = [{}]", list(&methods)).unwrap();
    s.push_str("# (target, method, tuning, evals, ci_low, ci_high, seconds, reliable)\nROWS = [\n");
    for r in rows
        .iter()
        .filter(|r| !r.error_flag && r.evals_per_indep.is_some())
    {
        writeln!(
            s,
            "    ({}, {}, {}, {}, {}, {}, {}, {}),",
            py_str(&r.target),
            py_str(&r.method),
            py_float(Some(r.tuning)),
            py_float(r.evals_per_indep),
            py_float(r.ci_low),
            py_float(r.ci_high),
            py_float(r.seconds_per_indep),
            if r.reliable == Some(true) {
                "True"
            } else {
                "False"
            },
        )
        .unwrap();
    }
    s.push_str("]\n\n");
    writeln!(
        s,
        "HAS_SECONDS = {}",
        if has_seconds { "True" } else { "False" }
    )
    .unwrap();
    s.push_str(
        r#"

def draw(value_index, ylabel, out_path):
    fig, axes = plt.subplots(
        len(TARGETS), len(METHODS),
        figsize=(3.2 * len(METHODS), 2.6 * len(TARGETS)),
        squeeze=False, sharex=True,
    )
    for row in ROWS:
        target, method, tuning, evals, lo, hi, seconds, reliable = row
        y = row[value_index]
        if y is None:
            continue
        ax = axes[TARGETS.index(target)][METHODS.index(method)]
        if reliable:
            if value_index == 3 and lo is not None and hi is not None:
                ax.errorbar([tuning], [y], yerr=[[y - lo], [hi - y]],
                            fmt="o", color="black", markersize=3, capsize=0)
            else:
                ax.plot([tuning], [y], "o", color="black", markersize=3)
        else:
            ax.plot([tuning], [y], linestyle="none", marker="$?$",
                    color="red", markersize=8)
    for i, target in enumerate(TARGETS):
        for j, method in enumerate(METHODS):
            ax = axes[i][j]
            ax.set_xscale("log")
            ax.set_yscale("log")
            ax.set_title(f"{target} / {method}", fontsize=8)
            if i == len(TARGETS) - 1:
                ax.set_xlabel("tuning parameter")
            if j == 0:
                ax.set_ylabel(ylabel)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "figure-evals.png"
    draw(3, "evals / indep. sample", out)
    if HAS_SECONDS:
        stem = out[:-4] if out.endswith(".png") else out
        draw(6, "seconds / indep. sample", stem + "-seconds.png")
"#,
    );
    Ok(s)
}

pub fn emit_plot_script(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, plot_script(rows)?)?;
    Ok(())
}
