//! Truth-table CSV input: a header of input names followed by `y`, then one
//! row of `0`/`1` cells per example.

use std::path::Path;

use anyhow::{bail, Context, Result};
use logicnet::training::{Dataset, Example};

pub fn read(path: &Path) -> Result<(Dataset, Vec<String>)> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    parse(&mut reader).with_context(|| format!("reading {}", path.display()))
}

pub fn parse<R: std::io::Read>(reader: &mut csv::Reader<R>) -> Result<(Dataset, Vec<String>)> {
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    match header.split_last() {
        Some((last, inputs)) if last == "y" && !inputs.is_empty() => {
            let names = inputs.to_vec();
            let mut examples = Vec::new();
            for (line, record) in reader.records().enumerate() {
                let record = record?;
                let bits = record
                    .iter()
                    .map(|cell| match cell {
                        "0" => Ok(0.0),
                        "1" => Ok(1.0),
                        other => bail!("row {}: `{other}` is not 0 or 1", line + 1),
                    })
                    .collect::<Result<Vec<f64>>>()?;
                let (target, input) = bits.split_last().expect("csv enforces header width");
                examples.push(Example {
                    input: input.to_vec(),
                    target: vec![*target],
                });
            }
            Ok((Dataset::new(examples)?, names))
        }
        _ => bail!("header must list the input names followed by `y`"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_str(s: &str) -> Result<(Dataset, Vec<String>)> {
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(s.as_bytes());
        parse(&mut r)
    }

    #[test]
    fn reads_xor() {
        let (data, names) = from_str("p,q,y\n1,1,0\n1,0,1\n0,1,1\n0,0,0\n").unwrap();
        assert_eq!(names, ["p", "q"]);
        assert_eq!(data.len(), 4);
        assert_eq!(data.examples()[1].input, vec![1.0, 0.0]);
        assert_eq!(data.examples()[1].target, vec![1.0]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(from_str("p,q,out\n1,1,0\n").is_err());
        assert!(from_str("y\n1\n").is_err());
        assert!(from_str("p,y\n2,0\n").is_err());
        assert!(from_str("p,y\n1,0,1\n").is_err());
        assert!(from_str("p,y\n").is_err());
    }
}
