//! Material database: one `key = value` text file per material.
//!
//! Bundled files are compiled in; a directory named by [`MATERIALS_ENV`]
//! takes precedence (files `<name>.txt`).
//!
//! Recognised keys:
//! - `format_version` (must be 1), `name`, `symmetry`, `density`
//! - `symmetry = trigonal_3m`: c11 c12 c13 c14 c33 c44 [c66], e15 e22 e31 e33, eps11 eps33
//! - `symmetry = isotropic`: youngs_modulus poisson_ratio, eps11 [eps33]
//! - `symmetry = general`: any cIJ (I ≤ J), eIJ, epsIJ (i ≤ j); absent entries are zero

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{Matrix3, Matrix6};

use super::{MaterialError, MaterialSet, PiezoMatrix};

/// Environment variable naming a directory that overrides the bundled database.
pub const MATERIALS_ENV: &str = "RINGBAW_MATERIALS";

const BUNDLED: &[(&str, &str)] = &[
    (
        "LiNbO3_congruent",
        include_str!("../../data/materials/LiNbO3_congruent.txt"),
    ),
    (
        "LiNbO3_congruent_kovacs",
        include_str!("../../data/materials/LiNbO3_congruent_kovacs.txt"),
    ),
    (
        "isotropic_test",
        include_str!("../../data/materials/isotropic_test.txt"),
    ),
];

fn override_dir() -> Option<std::path::PathBuf> {
    std::env::var_os(MATERIALS_ENV)
        .filter(|v| !v.is_empty())
        .map(Into::into)
}

/// Names of all materials visible to [`load_material`], sorted.
pub fn available_materials() -> Vec<String> {
    let mut names: Vec<String> = BUNDLED.iter().map(|(n, _)| n.to_string()).collect();
    if let Some(dir) = override_dir() {
        if let Ok(entries) = std::fs::read_dir(dir) {
            for entry in entries.flatten() {
                let path = entry.path();
                if path.extension().is_some_and(|e| e == "txt") {
                    if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                        names.push(stem.to_string());
                    }
                }
            }
        }
    }
    names.sort();
    names.dedup();
    names
}

/// Loads a material by name, in its crystal frame.
pub fn load_material(name: &str) -> Result<MaterialSet, MaterialError> {
    if let Some(dir) = override_dir() {
        let path = dir.join(format!("{name}.txt"));
        if path.is_file() {
            return load_material_file(&path);
        }
    }
    match BUNDLED.iter().find(|(n, _)| *n == name) {
        Some((n, text)) => parse_material(text, n),
        None => Err(MaterialError::UnknownMaterial {
            name: name.to_string(),
            available: available_materials(),
        }),
    }
}

/// Loads a material from an explicit data file.
pub fn load_material_file(path: &Path) -> Result<MaterialSet, MaterialError> {
    let text = std::fs::read_to_string(path).map_err(|source| MaterialError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_material(&text, &path.display().to_string())
}

struct Entries<'a> {
    source_name: &'a str,
    values: BTreeMap<String, (f64, usize)>,
}

impl Entries<'_> {
    fn get(&self, key: &str) -> Result<f64, MaterialError> {
        self.values
            .get(key)
            .map(|v| v.0)
            .ok_or_else(|| MaterialError::MissingKey {
                source_name: self.source_name.to_string(),
                key: key.to_string(),
            })
    }

    fn opt(&self, key: &str) -> Option<f64> {
        self.values.get(key).map(|v| v.0)
    }

    fn check_allowed(&self, allowed: &dyn Fn(&str) -> bool) -> Result<(), MaterialError> {
        for (key, &(_, line)) in &self.values {
            if !allowed(key) {
                return Err(MaterialError::Parse {
                    source_name: self.source_name.to_string(),
                    line,
                    message: format!("unknown key '{key}' for this symmetry"),
                });
            }
        }
        Ok(())
    }
}

/// Parses the text of a material data file. `source_name` is used in errors
/// and as the fallback material name.
pub fn parse_material(text: &str, source_name: &str) -> Result<MaterialSet, MaterialError> {
    let perr = |line: usize, message: String| MaterialError::Parse {
        source_name: source_name.to_string(),
        line,
        message,
    };
    let mut name = None;
    let mut symmetry = None;
    let mut version = None;
    let mut values = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| perr(lineno, format!("expected 'key = value', got '{line}'")))?;
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim();
        match key.as_str() {
            "name" => name = Some(value.to_string()),
            "symmetry" => symmetry = Some((value.to_ascii_lowercase(), lineno)),
            "format_version" => version = Some((value.to_string(), lineno)),
            _ => {
                let v: f64 = value
                    .parse()
                    .map_err(|_| perr(lineno, format!("'{value}' is not a number")))?;
                if !v.is_finite() {
                    return Err(perr(lineno, format!("'{key}' is not finite")));
                }
                if values.insert(key.clone(), (v, lineno)).is_some() {
                    return Err(perr(lineno, format!("duplicate key '{key}'")));
                }
            }
        }
    }
    if let Some((v, line)) = version {
        if v != "1" {
            return Err(perr(line, format!("unsupported format_version {v}")));
        }
    }
    let e = Entries { source_name, values };
    let name = name.unwrap_or_else(|| source_name.to_string());
    let density = e.get("density")?;
    let (symmetry, sym_line) = symmetry.ok_or_else(|| MaterialError::MissingKey {
        source_name: source_name.to_string(),
        key: "symmetry".into(),
    })?;

    let (c, p, eps) = match symmetry.as_str() {
        "trigonal_3m" => trigonal_3m(&e)?,
        "isotropic" => isotropic(&e)?,
        "general" => general(&e)?,
        other => {
            return Err(perr(
                sym_line,
                format!("unknown symmetry '{other}' (expected trigonal_3m, isotropic or general)"),
            ))
        }
    };
    MaterialSet::new(name, c, p, eps, density)
}

type Constants = (Matrix6<f64>, PiezoMatrix, Matrix3<f64>);

// 3m with the mirror plane normal to X (IEEE 1949 axes).
fn trigonal_3m(e: &Entries) -> Result<Constants, MaterialError> {
    const KEYS: &[&str] = &[
        "density", "c11", "c12", "c13", "c14", "c33", "c44", "c66", "e15", "e22", "e31", "e33",
        "eps11", "eps33",
    ];
    e.check_allowed(&|k| KEYS.contains(&k))?;
    let (c11, c12, c13, c14, c33, c44) = (
        e.get("c11")?,
        e.get("c12")?,
        e.get("c13")?,
        e.get("c14")?,
        e.get("c33")?,
        e.get("c44")?,
    );
    let c66 = e.opt("c66").unwrap_or(0.5 * (c11 - c12));
    #[rustfmt::skip]
    let c = Matrix6::new(
        c11,  c12,  c13,  c14,  0.0, 0.0,
        c12,  c11,  c13, -c14,  0.0, 0.0,
        c13,  c13,  c33,  0.0,  0.0, 0.0,
        c14, -c14,  0.0,  c44,  0.0, 0.0,
        0.0,  0.0,  0.0,  0.0,  c44, c14,
        0.0,  0.0,  0.0,  0.0,  c14, c66,
    );
    let (e15, e22, e31, e33) = (e.get("e15")?, e.get("e22")?, e.get("e31")?, e.get("e33")?);
    #[rustfmt::skip]
    let p = PiezoMatrix::new(
        0.0,  0.0, 0.0, 0.0, e15, -e22,
        -e22, e22, 0.0, e15, 0.0,  0.0,
        e31,  e31, e33, 0.0, 0.0,  0.0,
    );
    let (eps11, eps33) = (e.get("eps11")?, e.get("eps33")?);
    Ok((c, p, Matrix3::from_diagonal(&nalgebra::Vector3::new(eps11, eps11, eps33))))
}

fn isotropic(e: &Entries) -> Result<Constants, MaterialError> {
    const KEYS: &[&str] = &["density", "youngs_modulus", "poisson_ratio", "eps11", "eps33"];
    e.check_allowed(&|k| KEYS.contains(&k))?;
    let young = e.get("youngs_modulus")?;
    let nu = e.get("poisson_ratio")?;
    if !(young > 0.0 && nu > -1.0 && nu < 0.5) {
        return Err(MaterialError::Invalid {
            name: e.source_name.to_string(),
            message: format!("need E > 0 and -1 < nu < 0.5, got E = {young}, nu = {nu}"),
        });
    }
    let lambda = young * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    let mu = young / (2.0 * (1.0 + nu));
    let mut c = Matrix6::zeros();
    for i in 0..3 {
        for j in 0..3 {
            c[(i, j)] = lambda;
        }
        c[(i, i)] = lambda + 2.0 * mu;
        c[(i + 3, i + 3)] = mu;
    }
    let eps11 = e.get("eps11")?;
    let eps33 = e.opt("eps33").unwrap_or(eps11);
    Ok((
        c,
        PiezoMatrix::zeros(),
        Matrix3::from_diagonal(&nalgebra::Vector3::new(eps11, eps11, eps33)),
    ))
}

fn general(e: &Entries) -> Result<Constants, MaterialError> {
    let digit = |ch: u8, max: u8| (b'1'..=max).contains(&ch);
    let allowed = |k: &str| {
        let b = k.as_bytes();
        k == "density"
            || (b.len() == 3 && b[0] == b'c' && digit(b[1], b'6') && digit(b[2], b'6') && b[1] <= b[2])
            || (b.len() == 3 && b[0] == b'e' && digit(b[1], b'3') && digit(b[2], b'6'))
            || (b.len() == 5 && k.starts_with("eps") && digit(b[3], b'3') && digit(b[4], b'3') && b[3] <= b[4])
    };
    e.check_allowed(&allowed)?;
    let idx = |k: &str, at: usize| (k.as_bytes()[at] - b'1') as usize;
    let mut c = Matrix6::zeros();
    let mut p = PiezoMatrix::zeros();
    let mut eps = Matrix3::zeros();
    for (k, &(v, _)) in &e.values {
        if k == "density" {
            continue;
        }
        if k.starts_with("eps") {
            let (i, j) = (idx(k, 3), idx(k, 4));
            eps[(i, j)] = v;
            eps[(j, i)] = v;
        } else if k.starts_with('c') {
            let (i, j) = (idx(k, 1), idx(k, 2));
            c[(i, j)] = v;
            c[(j, i)] = v;
        } else {
            p[(idx(k, 1), idx(k, 2))] = v;
        }
    }
    Ok((c, p, eps))
}
