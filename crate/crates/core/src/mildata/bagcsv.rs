//! Bag-CSV: header `bag_id,label,f0,…,f{d-1}`, one instance per row.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{Bag, Dataset};
use crate::error::{Error, Result};
use crate::numgrad::Matrix;

pub fn load_bag_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path.file_stem().map_or_else(|| "bags".to_string(), |s| s.to_string_lossy().into_owned());
    parse_bag_csv(&text, &name, &path.display().to_string())
}

/// Parses bag-CSV text. `source` is used in error messages.
pub fn parse_bag_csv(text: &str, name: &str, source: &str) -> Result<Dataset> {
    let fail = |line: usize, msg: String| Error::Format {
        path: source.to_string(),
        line,
        msg,
    };

    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let (_, header) = lines
        .by_ref()
        .find(|(_, l)| !l.trim().is_empty())
        .ok_or_else(|| fail(1, "empty file".into()))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    if columns.len() < 3 || columns[0] != "bag_id" || columns[1] != "label" {
        return Err(fail(1, "header must be `bag_id,label,f0,...`".into()));
    }
    let d_feat = columns.len() - 2;
    for (i, col) in columns[2..].iter().enumerate() {
        if *col != format!("f{i}") {
            return Err(fail(1, format!("expected column `f{i}`, found `{col}`")));
        }
    }

    struct Group {
        id: String,
        label: usize,
        values: Vec<f64>,
    }
    let mut groups: Vec<Group> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();

    for (line_no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != d_feat + 2 {
            return Err(fail(
                line_no,
                format!("expected {} fields, found {}", d_feat + 2, fields.len()),
            ));
        }
        let id = fields[0];
        if id.is_empty() {
            return Err(fail(line_no, "empty bag_id".into()));
        }
        let label: usize = fields[1]
            .parse()
            .map_err(|_| fail(line_no, format!("label `{}` is not a non-negative integer", fields[1])))?;

        let slot = match index.get(id) {
            Some(&g) => {
                if groups[g].label != label {
                    return Err(fail(
                        line_no,
                        format!("bag `{id}` has conflicting labels {} and {label}", groups[g].label),
                    ));
                }
                g
            }
            None => {
                index.insert(id.to_string(), groups.len());
                groups.push(Group {
                    id: id.to_string(),
                    label,
                    values: Vec::new(),
                });
                groups.len() - 1
            }
        };
        for (j, field) in fields[2..].iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| fail(line_no, format!("feature f{j} `{field}` is not a number")))?;
            if !v.is_finite() {
                return Err(fail(line_no, format!("feature f{j} is not finite")));
            }
            groups[slot].values.push(v);
        }
    }

    if groups.is_empty() {
        return Err(fail(1, "no instance rows".into()));
    }
    let class_count = groups.iter().map(|g| g.label).max().unwrap_or(0).max(1) + 1;
    let bags = groups
        .into_iter()
        .map(|g| {
            let k = g.values.len() / d_feat;
            Bag::new(g.id, g.label, Matrix::new(k, d_feat, g.values)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(name, bags, class_count)
}

/// Serializes a dataset to bag-CSV text. Values use the shortest exact decimal form,
/// so parsing the output reproduces the dataset bit for bit.
pub fn bag_csv_string(dataset: &Dataset) -> String {
    let mut out = String::from("bag_id,label");
    for j in 0..dataset.d_feat {
        write!(out, ",f{j}").unwrap();
    }
    out.push('\n');
    for bag in &dataset.bags {
        for row in bag.instances.iter_rows() {
            write!(out, "{},{}", bag.bag_id, bag.label).unwrap();
            for v in row {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
    }
    out
}

pub fn write_bag_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, bag_csv_string(dataset)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Dataset> {
        parse_bag_csv(text, "t", "t.csv")
    }

    fn format_line(err: Error) -> usize {
        match err {
            Error::Format { line, .. } => line,
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn rows_group_by_bag_in_first_appearance_order() {
        let ds = parse("bag_id,label,f0,f1\nb2,0,1,2\nb1,1,3,4\nb2,0,5,6\nb1,1,7,8\n").unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.bags[0].bag_id, "b2");
        assert_eq!(ds.bags[0].instances, Matrix::from_rows(&[[1.0, 2.0], [5.0, 6.0]]));
        assert_eq!(ds.bags[1].label, 1);
        assert_eq!(ds.bags[1].len(), 2);
        assert_eq!(ds.class_count, 2);
    }

    #[test]
    fn shared_bag_id_same_label() {
        let ds = parse("bag_id,label,f0\nb1,1,0.5\nb1,1,0.25\n").unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.bags[0].len(), 2);
    }

    #[test]
    fn conflicting_label_reports_second_row() {
        let err = parse("bag_id,label,f0\nb1,0,0.5\nb1,1,0.25\n").unwrap_err();
        assert_eq!(format_line(err), 3);
    }

    #[test]
    fn ragged_row_is_format_error() {
        let err = parse("bag_id,label,f0,f1\nb1,0,0.5,1\nb1,0,0.25\n").unwrap_err();
        assert_eq!(format_line(err), 3);
    }

    #[test]
    fn empty_inputs_are_format_errors() {
        assert_eq!(format_line(parse("").unwrap_err()), 1);
        assert_eq!(format_line(parse("bag_id,label,f0\n").unwrap_err()), 1);
        assert!(matches!(parse("id,label,f0\nb,0,1\n"), Err(Error::Format { .. })));
    }

    #[test]
    fn non_numeric_feature_cites_line() {
        let err = parse("bag_id,label,f0\nb1,0,0.5\nb2,1,abc\n").unwrap_err();
        assert_eq!(format_line(err), 3);
    }

    #[test]
    fn multiclass_label_range() {
        let ds = parse("bag_id,label,f0\na,0,1\nb,3,1\n").unwrap();
        assert_eq!(ds.class_count, 4);
    }

    #[test]
    fn serialization_round_trips_exactly() {
        let ds = parse("bag_id,label,f0,f1\nx,1,0.1,-2.5e-7\nx,1,3,1e300\ny,0,0.3333333333333333,7\n").unwrap();
        let again = parse(&bag_csv_string(&ds)).unwrap();
        assert_eq!(ds, again);
    }
}
