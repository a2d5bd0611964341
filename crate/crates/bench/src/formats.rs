//! On-disk formats. Each file opens with a versioned header line.
//!
//! * `errors.csv`: `# teng-bc errors v1`, then the column line
//!   `step,time,ls_residual,rel_l2,wall_ms` and one row per time step.
//!   `rel_l2` is empty on steps without an error evaluation, `wall_ms` is
//!   empty unless wall-time logging is on.
//! * `summary.json`: a JSON object whose `format` field is
//!   `teng-bc summary v1`.
//! * checkpoints: the text lines `teng-bc checkpoint v1`,
//!   `fingerprint <network fingerprint>` and `params <P>`, then `P`
//!   little-endian `f64` values.
//! * spectral caches: the text lines `teng-bc spectral v1`, `modes <M>`,
//!   `nu <ν>`, `dt <dt>`, `n <grid side>` and `times <t₁> … <t_K>`, then
//!   `K·n²` little-endian `f64` values, field by field in row-major order.

use crate::{io_failure, Failure};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::Path;
use teng_bc_core::ansatz::NetworkSpec;
use teng_bc_core::geometry::SampleSet;
use teng_bc_core::reference::{SpectralConfig, SpectralSolution};

pub const ERRORS_HEADER: &str = "# teng-bc errors v1";
pub const ERRORS_COLUMNS: &str = "step,time,ls_residual,rel_l2,wall_ms";
pub const SUMMARY_FORMAT: &str = "teng-bc summary v1";
pub const CHECKPOINT_HEADER: &str = "teng-bc checkpoint v1";
pub const SPECTRAL_HEADER: &str = "teng-bc spectral v1";
pub const SAMPLES_HEADER: &str = "# teng-bc samples v1";

/// Writes through a temporary sibling and renames, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = Path::new(&tmp);
    let result = fs::File::create(tmp)
        .and_then(|mut f| {
            f.write_all(bytes)?;
            f.sync_all()
        })
        .and_then(|_| fs::rename(tmp, path));
    if let Err(e) = result {
        let _ = fs::remove_file(tmp);
        return Err(io_failure(path, e));
    }
    Ok(())
}

/// One line of `errors.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub step: usize,
    pub time: f64,
    pub ls_residual: f64,
    pub rel_l2: Option<f64>,
    pub wall_ms: Option<f64>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

pub fn errors_csv(rows: &[ErrorRow]) -> String {
    let mut out = format!("{ERRORS_HEADER}\n{ERRORS_COLUMNS}\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:e},{},{}\n",
            r.step,
            r.time,
            r.ls_residual,
            opt(r.rel_l2),
            opt(r.wall_ms)
        ));
    }
    out
}

pub fn parse_errors_csv(text: &str) -> Result<Vec<ErrorRow>, Failure> {
    let bad = |line: usize, m: &str| Failure::Config(format!("errors.csv line {line}: {m}"));
    let mut lines = text.lines();
    if lines.next() != Some(ERRORS_HEADER) {
        return Err(bad(1, "missing or unsupported header"));
    }
    if lines.next() != Some(ERRORS_COLUMNS) {
        return Err(bad(2, "unexpected columns"));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let n = i + 3;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 5 {
            return Err(bad(n, "expected 5 cells"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(n, &format!("bad number `{s}`")));
        let optional = |s: &str| if s.is_empty() { Ok(None) } else { num(s).map(Some) };
        rows.push(ErrorRow {
            step: cells[0].parse().map_err(|_| bad(n, "bad step"))?,
            time: num(cells[1])?,
            ls_residual: num(cells[2])?,
            rel_l2: optional(cells[3])?,
            wall_ms: optional(cells[4])?,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialFitSummary {
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Wall-clock figures; informative only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub initial_fit_s: f64,
    pub evolve_s: f64,
    pub mean_step_ms: f64,
    /// Mean time of each stage fit, in stage order.
    pub mean_stage_ms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub format: String,
    pub version: String,
    pub equation: String,
    pub boundary: String,
    pub scheme: String,
    pub steps: usize,
    pub t_final: f64,
    /// Relative L² error over the space-time stack of all logged steps.
    pub full_range_rel_l2: Option<f64>,
    pub final_rel_l2: Option<f64>,
    pub max_rel_l2: Option<f64>,
    pub final_ls_residual: f64,
    pub degenerate_solves: usize,
    pub initial_fit: InitialFitSummary,
    pub timing: Timing,
    /// The resolved config, defaults included, in config-file syntax.
    pub config: String,
}

impl Summary {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, Failure> {
        let s: Summary = serde_json::from_str(text).map_err(|e| Failure::Config(format!("summary: {e}")))?;
        if s.format != SUMMARY_FORMAT {
            return Err(Failure::Config(format!("summary: unsupported format `{}`", s.format)));
        }
        Ok(s)
    }
}

pub fn checkpoint_bytes(spec: &NetworkSpec, params: &[f64]) -> Vec<u8> {
    let mut out = format!("{CHECKPOINT_HEADER}\nfingerprint {}\nparams {}\n", spec.fingerprint(), params.len()).into_bytes();
    for p in params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

/// Splits `n` newline-terminated text lines off the front of `bytes`.
fn header_lines(bytes: &[u8], n: usize) -> Option<(Vec<&str>, &[u8])> {
    let mut rest = bytes;
    let mut lines = Vec::with_capacity(n);
    for _ in 0..n {
        let end = rest.iter().position(|&b| b == b'\n')?;
        lines.push(std::str::from_utf8(&rest[..end]).ok()?);
        rest = &rest[end + 1..];
    }
    Some((lines, rest))
}

fn le_f64s(bytes: &[u8]) -> Vec<f64> {
    bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect()
}

/// Parses a checkpoint and checks it against `spec`.
pub fn parse_checkpoint(bytes: &[u8], spec: &NetworkSpec) -> Result<Vec<f64>, Failure> {
    let bad = |m: String| Failure::Config(format!("checkpoint: {m}"));
    let (lines, body) = header_lines(bytes, 3).ok_or_else(|| bad("truncated header".into()))?;
    if lines[0] != CHECKPOINT_HEADER {
        return Err(bad(format!("unsupported header `{}`", lines[0])));
    }
    let fp = lines[1].strip_prefix("fingerprint ").ok_or_else(|| bad("missing fingerprint".into()))?;
    if fp != spec.fingerprint() {
        return Err(bad(format!("network `{fp}` does not match `{}`", spec.fingerprint())));
    }
    let p: usize = lines[2]
        .strip_prefix("params ")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| bad("missing parameter count".into()))?;
    if p != spec.param_count() || body.len() != 8 * p {
        return Err(bad(format!("expected {} parameters, header says {p} and body holds {} bytes", spec.param_count(), body.len())));
    }
    Ok(le_f64s(body))
}

pub fn spectral_bytes(sol: &SpectralSolution) -> Vec<u8> {
    let times: Vec<String> = sol.times.iter().map(|t| t.to_string()).collect();
    let mut out = format!(
        "{SPECTRAL_HEADER}\nmodes {}\nnu {}\ndt {}\nn {}\ntimes {}\n",
        sol.config.modes,
        sol.config.nu,
        sol.config.dt,
        sol.n,
        times.join(" ")
    )
    .into_bytes();
    for field in &sol.fields {
        for v in field {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn parse_spectral(bytes: &[u8]) -> Result<SpectralSolution, Failure> {
    let bad = |m: String| Failure::Config(format!("spectral cache: {m}"));
    let (lines, body) = header_lines(bytes, 6).ok_or_else(|| bad("truncated header".into()))?;
    if lines[0] != SPECTRAL_HEADER {
        return Err(bad(format!("unsupported header `{}`", lines[0])));
    }
    let field = |i: usize, key: &str| {
        lines[i]
            .strip_prefix(key)
            .and_then(|s| s.strip_prefix(' '))
            .ok_or_else(|| bad(format!("expected `{key}` on header line {}", i + 1)))
    };
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("bad number `{s}`")));
    let modes: usize = field(1, "modes")?.parse().map_err(|_| bad("bad modes".into()))?;
    let nu = num(field(2, "nu")?)?;
    let dt = num(field(3, "dt")?)?;
    let n: usize = field(4, "n")?.parse().map_err(|_| bad("bad grid size".into()))?;
    let times = field(5, "times")?
        .split_whitespace()
        .map(num)
        .collect::<Result<Vec<f64>, _>>()?;
    let config = SpectralConfig {
        modes,
        nu,
        dt,
        advection: true,
    };
    config.validate().map_err(|e| bad(e.to_string()))?;
    if n != config.grid_size() {
        return Err(bad(format!("grid size {n} does not match {modes} modes")));
    }
    if body.len() != 8 * n * n * times.len() {
        return Err(bad(format!("expected {} field values, found {} bytes", n * n * times.len(), body.len())));
    }
    let values = le_f64s(body);
    Ok(SpectralSolution {
        config,
        n,
        times,
        fields: values.chunks(n * n).map(<[f64]>::to_vec).collect(),
    })
}

pub fn read_file(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| io_failure(path, e))
}

/// Interior and boundary samples as CSV, for inspection.
pub fn samples_csv(samples: &SampleSet) -> String {
    let mut out = format!("{SAMPLES_HEADER}\nkind,x1,x2,n1,n2,segment\n");
    for x in &samples.interior {
        out.push_str(&format!("interior,{},{},,,\n", x[0], x[1]));
    }
    for b in &samples.boundary {
        out.push_str(&format!(
            "boundary,{},{},{},{},{}\n",
            b.point[0], b.point[1], b.normal[0], b.normal[1], b.tag
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use teng_bc_core::ansatz::Mlp;
    use teng_bc_core::reference::{burgers_initial, burgers_spectral, spectral::sample_grid};

    #[test]
    fn errors_csv_round_trip() {
        let rows = vec![
            ErrorRow {
                step: 1,
                time: 5e-4,
                ls_residual: 1.25e-7,
                rel_l2: Some(3.1e-6),
                wall_ms: None,
            },
            ErrorRow {
                step: 2,
                time: 1e-3,
                ls_residual: 0.1 + 0.2,
                rel_l2: None,
                wall_ms: Some(812.5),
            },
        ];
        let text = errors_csv(&rows);
        assert!(text.starts_with("# teng-bc errors v1\nstep,time,ls_residual,rel_l2,wall_ms\n1,0.0005,1.25e-7,3.1e-6,\n"));
        assert_eq!(parse_errors_csv(&text).unwrap(), rows);
        assert!(parse_errors_csv("step,time\n").is_err());
        assert!(parse_errors_csv(&text.replace("1,0.0005", "1,x")).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let spec = NetworkSpec {
            hidden_layers: 2,
            width: 5,
            ..NetworkSpec::default()
        };
        let p = Mlp::new(spec.clone()).unwrap().init(3);
        let bytes = checkpoint_bytes(&spec, &p);
        assert!(bytes.starts_with(b"teng-bc checkpoint v1\n"));
        assert_eq!(parse_checkpoint(&bytes, &spec).unwrap(), p.0);
        let other = NetworkSpec { width: 6, ..spec.clone() };
        assert!(parse_checkpoint(&bytes, &other).is_err());
        assert!(parse_checkpoint(&bytes[..bytes.len() - 1], &spec).is_err());
    }

    #[test]
    fn spectral_round_trip() {
        let cfg = SpectralConfig {
            modes: 8,
            dt: 1e-2,
            ..SpectralConfig::default()
        };
        let u0 = sample_grid(cfg.grid_size(), burgers_initial);
        let sol = burgers_spectral(&u0, cfg, &[0.0, 0.05, 0.1]).unwrap();
        let bytes = spectral_bytes(&sol);
        assert_eq!(parse_spectral(&bytes).unwrap(), sol);
        assert!(parse_spectral(&bytes[..bytes.len() - 8]).is_err());
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
