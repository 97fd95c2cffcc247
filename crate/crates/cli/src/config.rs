//! Flat `section.key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use multifsi_core::datum::InitialDatum;
use multifsi_core::fem::MaterialParams;
use multifsi_core::geometry::{GeometryConfig, Rect};
use multifsi_core::FsiError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Resolvent,
    Evolve,
    InfSup,
    Verify,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Resolvent => "resolvent",
            Command::Evolve => "evolve",
            Command::InfSup => "infsup",
            Command::Verify => "verify",
        })
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    pub material: MaterialParams<f64>,
    pub output_dir: PathBuf,
    pub export_fields: bool,
    pub seed: u64,
    pub datum: InitialDatum,
    pub datum_file: Option<PathBuf>,
    pub steps: usize,
    pub levels: Vec<u32>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            geometry: GeometryConfig::default(),
            material: MaterialParams::default(),
            output_dir: PathBuf::from("multifsi-out"),
            export_fields: false,
            seed: 0,
            datum: InitialDatum::StructureBump,
            datum_file: None,
            steps: 100,
            levels: vec![0, 1, 2],
        }
    }
}

/// Every accepted key. `material.*` keys must all be present.
pub const KEYS: [&str; 15] = [
    "geometry.outer_box",
    "geometry.inner_box",
    "geometry.refinement_level",
    "geometry.base_h",
    "material.mu",
    "material.lambda_lame",
    "material.lambda_res",
    "material.dt",
    "run.output_dir",
    "run.export_fields",
    "run.seed",
    "run.datum",
    "run.datum_file",
    "run.steps",
    "run.levels",
];

fn err(line: usize, msg: impl fmt::Display) -> FsiError {
    if line == 0 {
        FsiError::Config(msg.to_string())
    } else {
        FsiError::Config(format!("line {line}: {msg}"))
    }
}

fn parse_num<V: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<V, FsiError> {
    value.parse().map_err(|_| err(line, format!("invalid value '{value}' for {key}")))
}

fn parse_rect(key: &str, value: &str, line: usize) -> Result<Rect, FsiError> {
    let v: Vec<f64> = value
        .split_whitespace()
        .map(|s| parse_num(key, s, line))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [x0, x1, y0, y1] => Ok(Rect::new(x0, x1, y0, y1)),
        _ => Err(err(line, format!("{key} expects four numbers 'x0 x1 y0 y1', got '{value}'"))),
    }
}

fn parse_bool(key: &str, value: &str, line: usize) -> Result<bool, FsiError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(err(line, format!("invalid boolean '{value}' for {key}"))),
    }
}

/// Splits the text into `key → (value, line)`, rejecting unknown or repeated keys.
fn tokenize(text: &str) -> Result<BTreeMap<String, (String, usize)>, FsiError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected 'section.key = value', got '{body}'")))?;
        let key = key.trim();
        let value = value.trim().trim_matches('"').trim();
        if !KEYS.contains(&key) {
            return Err(err(line, format!("unknown key '{key}'")));
        }
        if out.insert(key.to_string(), (value.to_string(), line)).is_some() {
            return Err(err(line, format!("duplicate key '{key}'")));
        }
    }
    Ok(out)
}

pub fn parse_config(text: &str) -> Result<RunConfig, FsiError> {
    let entries = tokenize(text)?;
    let mut cfg = RunConfig::default();
    for key in KEYS.iter().filter(|k| k.starts_with("material.")) {
        if !entries.contains_key(*key) {
            return Err(err(0, format!("missing required key '{key}'")));
        }
    }
    for (key, (value, line)) in &entries {
        let (key, value, line) = (key.as_str(), value.as_str(), *line);
        match key {
            "geometry.outer_box" => cfg.geometry.outer_box = parse_rect(key, value, line)?,
            "geometry.inner_box" => cfg.geometry.inner_box = parse_rect(key, value, line)?,
            "geometry.refinement_level" => cfg.geometry.refinement_level = parse_num(key, value, line)?,
            "geometry.base_h" => cfg.geometry.base_h = parse_num(key, value, line)?,
            "material.mu" => cfg.material.mu = parse_num(key, value, line)?,
            "material.lambda_lame" => cfg.material.lambda_lame = parse_num(key, value, line)?,
            "material.lambda_res" => cfg.material.lambda_res = parse_num(key, value, line)?,
            "material.dt" => cfg.material.dt = parse_num(key, value, line)?,
            "run.output_dir" => cfg.output_dir = PathBuf::from(value),
            "run.export_fields" => cfg.export_fields = parse_bool(key, value, line)?,
            "run.seed" => cfg.seed = parse_num(key, value, line)?,
            "run.datum" => cfg.datum = value.parse().map_err(|e: FsiError| err(line, e))?,
            "run.datum_file" => cfg.datum_file = Some(PathBuf::from(value)),
            "run.steps" => cfg.steps = parse_num(key, value, line)?,
            "run.levels" => {
                cfg.levels = value
                    .split_whitespace()
                    .map(|s| parse_num(key, s, line))
                    .collect::<Result<_, _>>()?;
                if cfg.levels.is_empty() {
                    return Err(err(line, "run.levels must list at least one level"));
                }
            }
            _ => unreachable!("key table and match arms disagree"),
        }
    }
    cfg.geometry.validate()?;
    cfg.material.validate()?;
    Ok(cfg)
}

/// Resolved configuration in the input format, for the manifest.
pub fn echo(cfg: &RunConfig) -> String {
    let r = |r: &Rect| format!("{} {} {} {}", r.x0, r.x1, r.y0, r.y1);
    let g = &cfg.geometry;
    let m = &cfg.material;
    let levels: Vec<String> = cfg.levels.iter().map(u32::to_string).collect();
    let mut s = String::new();
    for (k, v) in [
        ("geometry.outer_box", r(&g.outer_box)),
        ("geometry.inner_box", r(&g.inner_box)),
        ("geometry.refinement_level", g.refinement_level.to_string()),
        ("geometry.base_h", g.base_h.to_string()),
        ("material.mu", m.mu.to_string()),
        ("material.lambda_lame", m.lambda_lame.to_string()),
        ("material.lambda_res", m.lambda_res.to_string()),
        ("material.dt", m.dt.to_string()),
        ("run.output_dir", cfg.output_dir.display().to_string()),
        ("run.export_fields", cfg.export_fields.to_string()),
        ("run.seed", cfg.seed.to_string()),
        ("run.datum", cfg.datum.to_string()),
        (
            "run.datum_file",
            cfg.datum_file.as_ref().map_or(String::new(), |p| p.display().to_string()),
        ),
        ("run.steps", cfg.steps.to_string()),
        ("run.levels", levels.join(" ")),
    ] {
        s.push_str(&format!("{k} = {v}\n"));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const MATERIAL: &str = "material.mu = 1\nmaterial.lambda_lame = 1\nmaterial.lambda_res = 1\nmaterial.dt = 0.01\n";

    #[test]
    fn defaults_with_material_block() {
        let c = parse_config(MATERIAL).unwrap();
        assert_eq!(c.geometry, GeometryConfig::default());
        assert_eq!(c.material.dt, 0.01);
    }

    #[test]
    fn full_file_with_comments() {
        let text = format!(
            "# demo\n{MATERIAL}geometry.outer_box = \"0 4 0 3\"  # wider\ngeometry.refinement_level = 1\nrun.datum = fluid_vortex\nrun.levels = 0 1\nrun.export_fields = true\n"
        );
        let c = parse_config(&text).unwrap();
        assert_eq!(c.geometry.outer_box, Rect::new(0.0, 4.0, 0.0, 3.0));
        assert_eq!(c.geometry.refinement_level, 1);
        assert_eq!(c.datum, InitialDatum::FluidVortex);
        assert_eq!(c.levels, vec![0, 1]);
        assert!(c.export_fields);
        let again = parse_config(&echo(&c)).unwrap();
        assert_eq!(echo(&again), echo(&c));
    }

    #[test]
    fn missing_mu_is_named() {
        let text = MATERIAL.replace("material.mu = 1\n", "");
        let e = parse_config(&text).unwrap_err().to_string();
        assert!(e.contains("material.mu"), "{e}");
    }

    #[test]
    fn rejects_unknown_duplicate_and_malformed() {
        for bad in [
            format!("{MATERIAL}run.colour = red\n"),
            format!("{MATERIAL}material.mu = 2\n"),
            format!("{MATERIAL}geometry.outer_box = 0 3 0\n"),
            format!("{MATERIAL}run.datum = swirl\n"),
            format!("{MATERIAL}just words\n"),
            MATERIAL.replace("material.mu = 1", "material.mu = -1"),
        ] {
            assert!(matches!(parse_config(&bad), Err(FsiError::Config(_))), "{bad}");
        }
    }
}
