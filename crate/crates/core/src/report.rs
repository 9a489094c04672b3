//! Deterministic report emission: JSON with fixed key order and floats
//! printed at 17 significant digits (enough to round-trip any f64), plus a
//! flat CSV projection for spreadsheets.

use serde::ser::Serialize;
use serde_json::ser::Formatter;

use crate::constants::ConstantsReport;
use crate::verify::CheckResult;
use crate::{Error, Result};

/// JSON formatter that writes every f64 as `d.dddddddddddddddde±x`
/// (17 significant digits), so identical values always produce identical
/// bytes regardless of magnitude.
struct SigDigits17;

impl Formatter for SigDigits17 {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        self.write_f64(writer, value as f64)
    }
}

/// Serialize any value to the canonical JSON byte format.
pub fn to_json_canonical<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigDigits17);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Format(format!("json serialization failed: {e}")))?;
    let mut s = String::from_utf8(out).map_err(|e| Error::Format(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Top-level report payload emitted by the CLI.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub kind: String,
    pub config_digest: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constants: Vec<ConstantsReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<CheckResult>,
}

pub const SCHEMA_VERSION: u32 = 1;

impl Report {
    pub fn constants(digest: String, report: ConstantsReport) -> Report {
        Report {
            schema_version: SCHEMA_VERSION,
            kind: "constants".into(),
            config_digest: digest,
            constants: vec![report],
            checks: Vec::new(),
        }
    }

    pub fn verify(digest: String, checks: Vec<CheckResult>) -> Report {
        Report {
            schema_version: SCHEMA_VERSION,
            kind: "verify".into(),
            config_digest: digest,
            constants: Vec::new(),
            checks,
        }
    }

    pub fn merge(reports: Vec<Report>) -> Report {
        let mut constants = Vec::new();
        let mut checks = Vec::new();
        let mut digests = Vec::new();
        for r in reports {
            digests.push(r.config_digest);
            constants.extend(r.constants);
            checks.extend(r.checks);
        }
        Report {
            schema_version: SCHEMA_VERSION,
            kind: "merged".into(),
            config_digest: digests.join("+"),
            constants,
            checks,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        to_json_canonical(self)
    }

    /// Flat CSV: one row per constant, then one row per check.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("record,name,value,pass,samples,degenerate,family,strategy,witness\n");
        for report in &self.constants {
            for (name, entry) in report.entries() {
                out.push_str(&format!(
                    "constant,{},{:.16e},,,,{},{},{}\n",
                    name,
                    entry.value,
                    csv_quote(&entry.family),
                    csv_quote(&entry.strategy),
                    csv_quote(&witness_label(&entry.witness)),
                ));
            }
        }
        for c in &self.checks {
            out.push_str(&format!(
                "check,{},{:.16e},{},{},{},,,{}\n",
                c.name,
                c.empirical_constant,
                c.pass,
                c.samples,
                c.degenerate,
                csv_quote(&c.worst_witness),
            ));
        }
        out
    }
}

fn witness_label(w: &crate::constants::Witness) -> String {
    use crate::constants::Witness;
    match w {
        Witness::Empty => "-".into(),
        Witness::Cube { grid, cube } => {
            format!("g{} L{} {:?}", grid, cube.level, cube.coords)
        }
        Witness::CubePair { grid_q, q, grid_q_prime, q_prime } => format!(
            "g{} L{} {:?} | g{} L{} {:?}",
            grid_q, q.level, q.coords, grid_q_prime, q_prime.level, q_prime.coords
        ),
        Witness::Energy { grid, i, partition, ell } => format!(
            "g{} I=L{} {:?} cells={} ell={}",
            grid,
            i.level,
            i.coords,
            partition.len(),
            ell
        ),
    }
}

fn csv_quote(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// FNV-1a digest of the canonical bytes, as a short hex tag for reports.
pub fn digest_bytes(bytes: &[u8]) -> String {
    let mut h = 0xcbf29ce484222325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}
