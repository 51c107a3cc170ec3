//! TOML spin-system files.
//!
//! ```toml
//! name = "fad_z_1n"
//! g_factor = 2.0013          # optional
//!
//! [rates]
//! k_b_per_us = 1.0
//! k_f_per_us = 1.0
//!
//! [[nuclei]]
//! label = "N5"
//! radical = "A"
//! multiplicity = 3
//! tensor_mT = [-0.0989, 0.0039, 0.0, 0.0039, -0.0881, 0.0, 0.0, 0.0, 1.7569]
//!
//! [eed]
//! point_dipole_r_nm = [0.0, 1.2, 1.5]   # or tensor_mT = [...]
//! ```
//!
//! Tensors are either 9 numbers in row-major order or three rows of three.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use toml::{Table, Value};

use super::hamiltonian::point_dipole_tensor;
use super::system::{Nucleus, Radical, SpinSystem, DEFAULT_DIM_CAP};
use crate::constants::DEFAULT_G_FACTOR;
use crate::error::{Error, Result};

/// Reference models bundled with the library: `(name, file contents)`.
pub const SHIPPED_MODELS: &[(&str, &str)] = &[
    ("fad_z_1n", include_str!("../../../../models/fad_z_1n.toml")),
    ("fad_w_2n", include_str!("../../../../models/fad_w_2n.toml")),
    ("fad_z_3n", include_str!("../../../../models/fad_z_3n.toml")),
    ("fad_w_3n", include_str!("../../../../models/fad_w_3n.toml")),
];

/// Contents of a bundled model, if `name` is one.
pub fn shipped_model_source(name: &str) -> Option<&'static str> {
    SHIPPED_MODELS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

/// Parses a bundled model.
pub fn shipped_model(name: &str) -> Result<SpinSystem> {
    let src = shipped_model_source(name).ok_or_else(|| Error::NotFound(format!("no shipped model named {name}")))?;
    parse_spin_system(src, DEFAULT_DIM_CAP)
}

pub fn load_spin_system(path: impl AsRef<Path>) -> Result<SpinSystem> {
    load_spin_system_with_cap(path, DEFAULT_DIM_CAP)
}

pub fn load_spin_system_with_cap(path: impl AsRef<Path>, dim_cap: usize) -> Result<SpinSystem> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_spin_system(&text, dim_cap)
}

pub fn parse_spin_system(text: &str, dim_cap: usize) -> Result<SpinSystem> {
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::parse("<document>", e.to_string().trim_end().to_string()))?;

    let name = match table.get("name") {
        Some(v) => v
            .as_str()
            .ok_or_else(|| Error::parse("name", "expected a string"))?
            .to_string(),
        None => return Err(Error::parse("name", "missing")),
    };
    let g_factor = optional_float(&table, "g_factor", "g_factor")?.unwrap_or(DEFAULT_G_FACTOR);

    let rates = table
        .get("rates")
        .ok_or_else(|| Error::parse("rates", "missing"))?
        .as_table()
        .ok_or_else(|| Error::parse("rates", "expected a table"))?;
    let k_b = required_float(rates, "k_b_per_us", "rates.k_b_per_us")?;
    let k_f = required_float(rates, "k_f_per_us", "rates.k_f_per_us")?;

    let mut builder = SpinSystem::builder(name)
        .g_factor(g_factor)
        .rates(k_b, k_f)
        .dim_cap(dim_cap);
    if let Some(g) = optional_float(&table, "g_factor_a", "g_factor_a")? {
        builder = builder.zeeman_g(Radical::A, g);
    }
    if let Some(g) = optional_float(&table, "g_factor_b", "g_factor_b")? {
        builder = builder.zeeman_g(Radical::B, g);
    }

    if let Some(list) = table.get("nuclei") {
        let list = list
            .as_array()
            .ok_or_else(|| Error::parse("nuclei", "expected an array of tables"))?;
        for (i, entry) in list.iter().enumerate() {
            builder = builder.nucleus(parse_nucleus(entry, i)?);
        }
    }

    if let Some(eed) = table.get("eed") {
        let eed = eed.as_table().ok_or_else(|| Error::parse("eed", "expected a table"))?;
        let tensor = match (eed.get("tensor_mT"), eed.get("point_dipole_r_nm")) {
            (Some(t), None) => parse_tensor(t, "eed.tensor_mT")?,
            (None, Some(r)) => {
                let r = parse_vector(r, "eed.point_dipole_r_nm")?;
                point_dipole_tensor(&r, g_factor).map_err(|e| Error::parse("eed.point_dipole_r_nm", e.to_string()))?
            }
            (Some(_), Some(_)) => {
                return Err(Error::parse(
                    "eed",
                    "give either tensor_mT or point_dipole_r_nm, not both",
                ))
            }
            (None, None) => return Err(Error::parse("eed", "needs tensor_mT or point_dipole_r_nm")),
        };
        builder = builder.eed(Some(tensor));
    }
    builder.build()
}

fn parse_nucleus(entry: &Value, i: usize) -> Result<Nucleus> {
    let field = |f: &str| format!("nuclei[{i}].{f}");
    let t = entry
        .as_table()
        .ok_or_else(|| Error::parse(format!("nuclei[{i}]"), "expected a table"))?;
    let label = match t.get("label") {
        Some(v) => v
            .as_str()
            .ok_or_else(|| Error::parse(field("label"), "expected a string"))?
            .to_string(),
        None => format!("n{i}"),
    };
    let radical = match t.get("radical").and_then(Value::as_str) {
        Some("A") | Some("a") => Radical::A,
        Some("B") | Some("b") => Radical::B,
        Some(other) => {
            return Err(Error::parse(
                field("radical"),
                format!("expected \"A\" or \"B\", got {other:?}"),
            ))
        }
        None => return Err(Error::parse(field("radical"), "missing or not a string")),
    };
    let multiplicity =
        t.get("multiplicity")
            .ok_or_else(|| Error::parse(field("multiplicity"), "missing"))?
            .as_integer()
            .filter(|m| *m >= 0)
            .ok_or_else(|| Error::parse(field("multiplicity"), "expected a non-negative integer"))? as usize;
    let tensor = parse_tensor(
        t.get("tensor_mT")
            .ok_or_else(|| Error::parse(field("tensor_mT"), "missing"))?,
        &field("tensor_mT"),
    )?;
    Ok(Nucleus::new(label, radical, multiplicity, tensor))
}

fn as_number(v: &Value, field: &str) -> Result<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(Error::parse(field, format!("expected a number, got {}", v.type_str()))),
    }
}

fn required_float(t: &Table, key: &str, field: &str) -> Result<f64> {
    as_number(t.get(key).ok_or_else(|| Error::parse(field, "missing"))?, field)
}

fn optional_float(t: &Table, key: &str, field: &str) -> Result<Option<f64>> {
    t.get(key).map(|v| as_number(v, field)).transpose()
}

fn numbers(v: &Value, field: &str) -> Result<Vec<f64>> {
    let arr = v.as_array().ok_or_else(|| Error::parse(field, "expected an array"))?;
    arr.iter()
        .enumerate()
        .map(|(k, x)| as_number(x, &format!("{field}[{k}]")))
        .collect()
}

fn parse_tensor(v: &Value, field: &str) -> Result<Matrix3<f64>> {
    let arr = v.as_array().ok_or_else(|| Error::parse(field, "expected an array"))?;
    let flat = if arr.iter().all(Value::is_array) {
        if arr.len() != 3 {
            return Err(Error::parse(field, format!("expected 3 rows, got {}", arr.len())));
        }
        let mut flat = Vec::with_capacity(9);
        for (r, row) in arr.iter().enumerate() {
            let row_field = format!("{field}[{r}]");
            let vals = numbers(row, &row_field)?;
            if vals.len() != 3 {
                return Err(Error::parse(
                    row_field,
                    format!("expected 3 entries, got {}", vals.len()),
                ));
            }
            flat.extend(vals);
        }
        flat
    } else {
        let flat = numbers(v, field)?;
        if flat.len() != 9 {
            return Err(Error::parse(field, format!("expected 9 entries, got {}", flat.len())));
        }
        flat
    };
    Ok(Matrix3::from_row_slice(&flat))
}

fn parse_vector(v: &Value, field: &str) -> Result<Vector3<f64>> {
    let vals = numbers(v, field)?;
    if vals.len() != 3 {
        return Err(Error::parse(field, format!("expected 3 entries, got {}", vals.len())));
    }
    Ok(Vector3::new(vals[0], vals[1], vals[2]))
}

#[cfg(test)]
mod tests {
    use super::*;

    const RATES: &str = "[rates]\nk_b_per_us = 1.0\nk_f_per_us = 1.0\n";

    #[test]
    fn minimal_file_has_bare_electrons() {
        let s = parse_spin_system(&format!("name = \"bare\"\n{RATES}"), DEFAULT_DIM_CAP).unwrap();
        assert_eq!(s.dim(), 4);
        assert_eq!(s.g_factor(), DEFAULT_G_FACTOR);
        assert!(s.eed().is_none());
    }

    #[test]
    fn one_spin_one_nucleus() {
        let text = format!(
            "name = \"one\"\n{RATES}[[nuclei]]\nlabel = \"N5\"\nradical = \"A\"\nmultiplicity = 3\ntensor_mT = [[-0.1, 0, 0], [0, -0.1, 0], [0, 0, 1.76]]\n"
        );
        let s = parse_spin_system(&text, DEFAULT_DIM_CAP).unwrap();
        assert_eq!(s.dim(), 12);
        assert_eq!(s.nuclei()[0].hyperfine[(2, 2)], 1.76);
    }

    #[test]
    fn malformed_row_names_the_field() {
        let text = format!(
            "name = \"bad\"\n{RATES}[[nuclei]]\nradical = \"B\"\nmultiplicity = 2\ntensor_mT = [[1, 0, 0], [0, 1], [0, 0, 1]]\n"
        );
        let err = parse_spin_system(&text, DEFAULT_DIM_CAP).unwrap_err();
        match err {
            Error::Parse { field, message } => {
                assert_eq!(field, "nuclei[0].tensor_mT[1]");
                assert!(message.contains("got 2"), "{message}");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn flat_tensor_is_row_major() {
        let text = format!(
            "name = \"flat\"\n{RATES}[[nuclei]]\nradical = \"A\"\nmultiplicity = 2\ntensor_mT = [1, 2, 3, 4, 5, 6, 7, 8, 9]\n"
        );
        let s = parse_spin_system(&text, DEFAULT_DIM_CAP).unwrap();
        assert_eq!(s.nuclei()[0].hyperfine[(0, 1)], 2.0);
        assert_eq!(s.nuclei()[0].hyperfine[(1, 0)], 4.0);
    }

    #[test]
    fn eed_forms_and_validation() {
        let dip = format!("name = \"d\"\n{RATES}[eed]\npoint_dipole_r_nm = [0, 0, 2]\n");
        let s = parse_spin_system(&dip, DEFAULT_DIM_CAP).unwrap();
        assert!(s.eed().unwrap()[(2, 2)] < 0.0);

        let bad = format!("name = \"d\"\n{RATES}[eed]\ntensor_mT = [1, 0, 0, 0, 1, 0, 0, 0, 1]\n");
        let err = parse_spin_system(&bad, DEFAULT_DIM_CAP).unwrap_err();
        assert!(
            matches!(err, Error::Validation { ref invariant, .. } if invariant.contains("traceless")),
            "{err}"
        );
    }

    #[test]
    fn zero_kf_is_a_validation_error() {
        let text = "name = \"x\"\n[rates]\nk_b_per_us = 1.0\nk_f_per_us = 0.0\n";
        let err = parse_spin_system(text, DEFAULT_DIM_CAP).unwrap_err();
        assert!(matches!(err, Error::Validation { .. }), "{err}");
    }

    #[test]
    fn syntax_errors_report_location() {
        let err = parse_spin_system("name = \n", DEFAULT_DIM_CAP).unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
    }

    #[test]
    fn missing_file_names_the_path() {
        let err = load_spin_system("/nonexistent/model.toml").unwrap_err();
        assert!(err.to_string().contains("/nonexistent/model.toml"));
    }

    #[test]
    fn loads_from_disk_with_cap() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.toml");
        std::fs::write(&path, shipped_model_source("fad_z_3n").unwrap()).unwrap();
        assert_eq!(load_spin_system(&path).unwrap(), shipped_model("fad_z_3n").unwrap());
        let err = load_spin_system_with_cap(&path, 47).unwrap_err();
        assert!(matches!(err, Error::Capacity { dim: 48, cap: 47 }), "{err}");
    }

    #[test]
    fn shipped_models_parse() {
        for (name, _) in SHIPPED_MODELS {
            let s = shipped_model(name).unwrap();
            assert_eq!(s.name(), *name);
            assert!(s.dim() <= 48);
        }
        assert!(shipped_model("nope").is_err());
    }
}
