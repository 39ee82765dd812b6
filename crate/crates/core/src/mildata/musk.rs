//! MUSK in its C4.5-style distribution: `molecule,conformation,f1..f166,class`.

use std::fmt::Write as _;
use std::path::Path;

use super::{Bag, Dataset};
use crate::error::{Error, Result};
use crate::numgrad::Matrix;

pub const MUSK_FEATURES: usize = 166;

pub fn load_musk_c45(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path.file_stem().map_or_else(|| "musk".to_string(), |s| s.to_string_lossy().into_owned());
    parse_musk_c45(&text, &name, &path.display().to_string())
}

/// One bag per molecule; the bag is positive iff any of its rows is class 1.
pub fn parse_musk_c45(text: &str, name: &str, source: &str) -> Result<Dataset> {
    let fail = |line: usize, msg: String| Error::Format {
        path: source.to_string(),
        line,
        msg,
    };
    let expected_fields = MUSK_FEATURES + 3;

    struct Molecule {
        name: String,
        positive: bool,
        values: Vec<f64>,
    }
    let mut molecules: Vec<Molecule> = Vec::new();
    let mut index = std::collections::HashMap::new();

    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim_end_matches('\r').trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != expected_fields {
            return Err(fail(
                line_no,
                format!("expected {expected_fields} fields, found {}", fields.len()),
            ));
        }
        // "1." and "0." are how the original files print the class
        let class: f64 = fields[expected_fields - 1]
            .parse()
            .map_err(|_| fail(line_no, format!("class `{}` is not numeric", fields[expected_fields - 1])))?;
        let positive = match class {
            c if c == 1.0 => true,
            c if c == 0.0 => false,
            _ => return Err(fail(line_no, format!("class {class} is not 0 or 1"))),
        };

        let molecule = fields[0];
        let slot = *index.entry(molecule.to_string()).or_insert_with(|| {
            molecules.push(Molecule {
                name: molecule.to_string(),
                positive: false,
                values: Vec::with_capacity(MUSK_FEATURES),
            });
            molecules.len() - 1
        });
        molecules[slot].positive |= positive;
        for (j, field) in fields[2..2 + MUSK_FEATURES].iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| fail(line_no, format!("feature {} `{field}` is not numeric", j + 1)))?;
            if !v.is_finite() {
                return Err(fail(line_no, format!("feature {} is not finite", j + 1)));
            }
            molecules[slot].values.push(v);
        }
    }

    if molecules.is_empty() {
        return Err(fail(1, "empty file".into()));
    }
    let bags = molecules
        .into_iter()
        .map(|m| {
            let k = m.values.len() / MUSK_FEATURES;
            Bag::new(m.name, usize::from(m.positive), Matrix::new(k, MUSK_FEATURES, m.values)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(name, bags, 2)
}

/// Writes a binary dataset with `MUSK_FEATURES` features in the C4.5 layout.
/// Conformations are named `<bag_id>_<n>` and carry the bag's class.
pub fn write_musk_c45(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if dataset.d_feat != MUSK_FEATURES || dataset.class_count != 2 {
        return Err(Error::shape(
            "write_musk_c45",
            format!("{MUSK_FEATURES} features, 2 classes"),
            format!("{} features, {} classes", dataset.d_feat, dataset.class_count),
        ));
    }
    let mut out = String::new();
    for bag in &dataset.bags {
        for (n, row) in bag.instances.iter_rows().enumerate() {
            write!(out, "{},{}_{}", bag.bag_id, bag.bag_id, n + 1).unwrap();
            for v in row {
                write!(out, ",{v}").unwrap();
            }
            writeln!(out, ",{}.", bag.label).unwrap();
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(molecule: &str, conf: &str, class: &str) -> String {
        let feats: Vec<String> = (0..MUSK_FEATURES).map(|i| (i as i64 - 80).to_string()).collect();
        format!("{molecule},{conf},{},{class}\n", feats.join(","))
    }

    #[test]
    fn single_negative_row() {
        let ds = parse_musk_c45(&row("NON-MUSK-1", "c1", "0."), "m", "m.data").unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.bags[0].label, 0);
        assert_eq!(ds.bags[0].len(), 1);
        assert_eq!(ds.d_feat, MUSK_FEATURES);
    }

    #[test]
    fn bag_label_is_or_over_rows() {
        let text = row("M1", "a", "0.") + &row("M2", "a", "0") + &row("M1", "b", "1.");
        let ds = parse_musk_c45(&text, "m", "m.data").unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!((ds.bags[0].bag_id.as_str(), ds.bags[0].label, ds.bags[0].len()), ("M1", 1, 2));
        assert_eq!(ds.bags[1].label, 0);
    }

    #[test]
    fn wrong_column_count_cites_line() {
        let text = row("M1", "a", "0.") + "M2,a,1,2,3,0.\n";
        match parse_musk_c45(&text, "m", "m.data").unwrap_err() {
            Error::Format { line, .. } => assert_eq!(line, 2),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn non_numeric_feature_cites_line() {
        let bad = row("M1", "a", "0.").replacen(",-80,", ",x,", 1);
        let text = row("M0", "a", "1.") + &bad;
        match parse_musk_c45(&text, "m", "m.data").unwrap_err() {
            Error::Format { line, msg, .. } => {
                assert_eq!(line, 2);
                assert!(msg.contains("feature 1"), "{msg}");
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn empty_file_is_format_error() {
        assert!(matches!(parse_musk_c45("\n", "m", "m.data"), Err(Error::Format { .. })));
    }
}
