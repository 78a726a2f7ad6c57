//! Serialization with a fixed contract: field order is part of the format,
//! every float is printed as 17 significant digits (`{:.16e}`), and CSV files
//! open with a versioned `# soliton-forge v…` comment so downstream parsers
//! can pin the column order.

use soliton_core::degree::{CertificateKind, DegreeReport, DegreeTarget, Preimage};
use soliton_core::profile_ode::Topology;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn json_opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_else(|| "null".into())
}

fn json_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub fn topology_name(t: Topology) -> &'static str {
    match t {
        Topology::S1xR3 => "s1r3",
        Topology::S2xR2 => "s2r2",
    }
}

/// One profile run reduced to its headline numbers.  Absent entries (e.g. no
/// cone data for the Einstein profile) serialize as empty CSV fields / JSON
/// nulls.
pub struct Summary {
    pub topology: Topology,
    pub orbit_size: f64,
    pub f0: f64,
    pub k: Option<f64>,
    pub a_slope: Option<f64>,
    pub b_slope: Option<f64>,
    pub err_estimate: Option<f64>,
    pub r0: Option<f64>,
    pub decay_constant: Option<f64>,
    pub r_used: f64,
    pub max_trace_residual: f64,
    pub max_bianchi_residual: f64,
}

pub struct TrajectoryRow {
    pub r: f64,
    pub a: f64,
    pub da: f64,
    pub b: f64,
    pub db: f64,
    pub f: f64,
    pub df: f64,
    pub scalar: f64,
    pub trace_residual: f64,
    pub bianchi_residual: f64,
}

const SUMMARY_KEYS: [&str; 11] = [
    "orbit_size",
    "f0",
    "k",
    "a_slope",
    "b_slope",
    "err_estimate",
    "r0",
    "decay_constant",
    "r_used",
    "max_trace_residual",
    "max_bianchi_residual",
];

fn summary_values(s: &Summary) -> [Option<f64>; 11] {
    [
        Some(s.orbit_size),
        Some(s.f0),
        s.k,
        s.a_slope,
        s.b_slope,
        s.err_estimate,
        s.r0,
        s.decay_constant,
        Some(s.r_used),
        Some(s.max_trace_residual),
        Some(s.max_bianchi_residual),
    ]
}

fn summary_comment(s: &Summary) -> String {
    let mut line = format!("# summary: topology={}", topology_name(s.topology));
    for (k, v) in SUMMARY_KEYS.iter().zip(summary_values(s)) {
        line.push_str(&format!(" {k}={}", csv_opt(v)));
    }
    line
}

fn summary_json(s: &Summary, indent: &str) -> String {
    let mut out = format!("{{\n{indent}  \"topology\": {},", json_str(topology_name(s.topology)));
    for (i, (k, v)) in SUMMARY_KEYS.iter().zip(summary_values(s)).enumerate() {
        out.push_str(&format!("\n{indent}  \"{k}\": {}", json_opt(v)));
        if i + 1 < SUMMARY_KEYS.len() {
            out.push(',');
        }
    }
    out.push_str(&format!("\n{indent}}}"));
    out
}

pub fn csv_solve(summary: &Summary, rows: &[TrajectoryRow]) -> String {
    let mut out = format!("# soliton-forge v{VERSION} solve\n");
    out.push_str(&summary_comment(summary));
    out.push('\n');
    out.push_str("r,a,da,b,db,f,df,R,trace_residual,bianchi_residual\n");
    for t in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            num(t.r),
            num(t.a),
            num(t.da),
            num(t.b),
            num(t.db),
            num(t.f),
            num(t.df),
            num(t.scalar),
            num(t.trace_residual),
            num(t.bianchi_residual)
        ));
    }
    out
}

pub fn json_solve(summary: &Summary, rows: &[TrajectoryRow]) -> String {
    let mut out = format!(
        "{{\n  \"tool\": \"soliton-forge\",\n  \"version\": {},\n  \"command\": \"solve\",\n  \"summary\": ",
        json_str(VERSION)
    );
    out.push_str(&summary_json(summary, "  "));
    out.push_str(",\n  \"samples\": [\n");
    for (i, t) in rows.iter().enumerate() {
        out.push_str(&format!(
            "    {{\"r\": {}, \"a\": {}, \"da\": {}, \"b\": {}, \"db\": {}, \"f\": {}, \"df\": {}, \"R\": {}, \"trace_residual\": {}, \"bianchi_residual\": {}}}{}\n",
            num(t.r),
            num(t.a),
            num(t.da),
            num(t.b),
            num(t.db),
            num(t.f),
            num(t.df),
            num(t.scalar),
            num(t.trace_residual),
            num(t.bianchi_residual),
            if i + 1 < rows.len() { "," } else { "" }
        ));
    }
    out.push_str("  ]\n}\n");
    out
}

pub fn csv_sweep(rows: &[Summary]) -> String {
    let mut out = format!("# soliton-forge v{VERSION} sweep\n");
    out.push_str("topology,orbit_size,f0,k,a_slope,b_slope,err_estimate,r0,decay_constant,r_used,max_trace_residual,max_bianchi_residual\n");
    for s in rows {
        let vals: Vec<String> = summary_values(s).iter().map(|v| csv_opt(*v)).collect();
        out.push_str(&format!("{},{}\n", topology_name(s.topology), vals.join(",")));
    }
    out
}

pub fn json_sweep(rows: &[Summary]) -> String {
    let mut out = format!(
        "{{\n  \"tool\": \"soliton-forge\",\n  \"version\": {},\n  \"command\": \"sweep\",\n  \"rows\": [\n",
        json_str(VERSION)
    );
    for (i, s) in rows.iter().enumerate() {
        out.push_str("    ");
        out.push_str(&summary_json(s, "    "));
        out.push_str(if i + 1 < rows.len() { ",\n" } else { "\n" });
    }
    out.push_str("  ]\n}\n");
    out
}

fn preimage_json(p: &Preimage) -> String {
    format!(
        "{{\"topology\": {}, \"orbit_size\": {}, \"f0\": {}, \"value_a\": {}, \"value_b\": {}, \"residual\": {}, \"orientation\": {}}}",
        json_str(topology_name(p.ic.topology)),
        num(p.ic.orbit_size),
        num(p.ic.f0),
        num(p.value.0),
        num(p.value.1),
        num(p.residual),
        p.orientation.map(|o| o.to_string()).unwrap_or_else(|| "null".into())
    )
}

pub fn csv_invert(target: (f64, f64), preimages: &[Preimage]) -> String {
    let mut out = format!("# soliton-forge v{VERSION} invert\n");
    out.push_str(&format!(
        "# target: a_slope={} b_slope={} preimages={}\n",
        num(target.0),
        num(target.1),
        preimages.len()
    ));
    out.push_str("topology,orbit_size,f0,value_a,value_b,residual,orientation\n");
    for p in preimages {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            topology_name(p.ic.topology),
            num(p.ic.orbit_size),
            num(p.ic.f0),
            num(p.value.0),
            num(p.value.1),
            num(p.residual),
            p.orientation.map(|o| o.to_string()).unwrap_or_default()
        ));
    }
    out
}

pub fn json_invert(target: (f64, f64), preimages: &[Preimage]) -> String {
    let mut out = format!(
        "{{\n  \"tool\": \"soliton-forge\",\n  \"version\": {},\n  \"command\": \"invert\",\n  \"target\": {{\"a_slope\": {}, \"b_slope\": {}}},\n  \"preimages\": [\n",
        json_str(VERSION),
        num(target.0),
        num(target.1)
    );
    for (i, p) in preimages.iter().enumerate() {
        out.push_str("    ");
        out.push_str(&preimage_json(p));
        out.push_str(if i + 1 < preimages.len() { ",\n" } else { "\n" });
    }
    out.push_str("  ]\n}\n");
    out
}

fn certificate_name(c: CertificateKind) -> &'static str {
    match c {
        CertificateKind::SignedCount => "signed_count",
        CertificateKind::Winding => "winding",
        CertificateKind::NonSurjectivity => "non_surjectivity",
    }
}

fn target_json(t: &DegreeTarget) -> String {
    match t {
        DegreeTarget::Slopes(a, b) => format!(
            "{{\"kind\": \"slopes\", \"a_slope\": {}, \"b_slope\": {}}}",
            num(*a),
            num(*b)
        ),
        DegreeTarget::BSlope(b) => {
            format!("{{\"kind\": \"b_slope\", \"value\": {}}}", num(*b))
        }
    }
}

fn report_json(r: &DegreeReport, indent: &str) -> String {
    let mut out = format!("{{\n{indent}  \"topology\": {},", json_str(topology_name(r.topology)));
    out.push_str(&format!("\n{indent}  \"certificate\": {},", json_str(certificate_name(r.certificate))));
    out.push_str(&format!("\n{indent}  \"target\": {},", target_json(&r.target)));
    out.push_str(&format!(
        "\n{indent}  \"search_box\": {{\"orbit_lo\": {}, \"orbit_hi\": {}, \"mf0_lo\": {}, \"mf0_hi\": {}}},",
        num(r.search_box.orbit_lo),
        num(r.search_box.orbit_hi),
        num(r.search_box.mf0_lo),
        num(r.search_box.mf0_hi)
    ));
    out.push_str(&format!(
        "\n{indent}  \"signed_count\": {},",
        r.signed_count.map(|c| c.to_string()).unwrap_or_else(|| "null".into())
    ));
    out.push_str(&format!(
        "\n{indent}  \"winding\": {},",
        r.winding.map(|w| w.to_string()).unwrap_or_else(|| "null".into())
    ));
    out.push_str(&format!("\n{indent}  \"crossings\": ["));
    for (i, c) in r.crossings.iter().enumerate() {
        out.push_str(&format!(
            "{}{{\"mf0\": {}, \"a_slope\": {}, \"sign\": {}}}",
            if i == 0 { "" } else { ", " },
            num(c.mf0),
            num(c.a_slope),
            c.sign
        ));
    }
    out.push_str("],");
    out.push_str(&format!("\n{indent}  \"level_set\": ["));
    for (i, p) in r.level_set.iter().enumerate() {
        out.push_str(&format!(
            "{}{{\"b0\": {}, \"mf0\": {}, \"a_slope\": {}}}",
            if i == 0 { "" } else { ", " },
            num(p.b0),
            num(p.mf0),
            num(p.a_slope)
        ));
    }
    out.push_str("],");
    out.push_str(&format!(
        "\n{indent}  \"level_set_max_a_slope\": {},",
        r.level_set_max_a_slope
            .map(|(c, f)| format!("{{\"coarse\": {}, \"fine\": {}}}", num(c), num(f)))
            .unwrap_or_else(|| "null".into())
    ));
    out.push_str(&format!("\n{indent}  \"preimages\": ["));
    for (i, p) in r.preimages.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&preimage_json(p));
    }
    out.push_str("]");
    out.push_str(&format!("\n{indent}}}"));
    out
}

pub fn json_degree(reports: &[DegreeReport]) -> String {
    let mut out = format!(
        "{{\n  \"tool\": \"soliton-forge\",\n  \"version\": {},\n  \"command\": \"degree\",\n  \"reports\": [\n",
        json_str(VERSION)
    );
    for (i, r) in reports.iter().enumerate() {
        out.push_str("    ");
        out.push_str(&report_json(r, "    "));
        out.push_str(if i + 1 < reports.len() { ",\n" } else { "\n" });
    }
    out.push_str("  ]\n}\n");
    out
}

pub fn csv_degree(reports: &[DegreeReport]) -> String {
    let mut out = format!("# soliton-forge v{VERSION} degree\n");
    for (i, r) in reports.iter().enumerate() {
        out.push_str(&format!(
            "# report {i}: topology={} certificate={} signed_count={} winding={}\n",
            topology_name(r.topology),
            certificate_name(r.certificate),
            r.signed_count.map(|c| c.to_string()).unwrap_or_default(),
            r.winding.map(|w| w.to_string()).unwrap_or_default()
        ));
    }
    out.push_str("report,record,orbit_or_b0,mf0,a_slope,sign\n");
    for (i, r) in reports.iter().enumerate() {
        for c in &r.crossings {
            out.push_str(&format!(
                "{i},crossing,{},{},{},{}\n",
                num(1.0),
                num(c.mf0),
                num(c.a_slope),
                c.sign
            ));
        }
        for p in &r.level_set {
            out.push_str(&format!(
                "{i},level_set,{},{},{},\n",
                num(p.b0),
                num(p.mf0),
                num(p.a_slope)
            ));
        }
        for p in &r.preimages {
            out.push_str(&format!(
                "{i},preimage,{},{},{},{}\n",
                num(p.ic.orbit_size),
                num(-p.ic.f0),
                num(p.value.0),
                p.orientation.map(|o| o.to_string()).unwrap_or_default()
            ));
        }
    }
    out
}

pub struct CheckRow {
    pub name: &'static str,
    pub pass: bool,
    pub metric: String,
}

pub fn csv_validate(rows: &[CheckRow]) -> String {
    let mut out = format!("# soliton-forge v{VERSION} validate\n");
    out.push_str("name,status,metric\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            r.name,
            if r.pass { "PASS" } else { "FAIL" },
            r.metric.replace(',', ";")
        ));
    }
    out
}

pub fn json_validate(rows: &[CheckRow]) -> String {
    let mut out = format!(
        "{{\n  \"tool\": \"soliton-forge\",\n  \"version\": {},\n  \"command\": \"validate\",\n  \"all_pass\": {},\n  \"rows\": [\n",
        json_str(VERSION),
        rows.iter().all(|r| r.pass)
    );
    for (i, r) in rows.iter().enumerate() {
        out.push_str(&format!(
            "    {{\"name\": {}, \"pass\": {}, \"metric\": {}}}{}\n",
            json_str(r.name),
            r.pass,
            json_str(&r.metric),
            if i + 1 < rows.len() { "," } else { "" }
        ));
    }
    out.push_str("  ]\n}\n");
    out
}
