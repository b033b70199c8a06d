//! Fixed noise streams: one decimal in `[0, 1]` per line, `#` starts a comment.

use std::path::Path;

use crate::error::{Error, Result};

/// Small grayscale-like sample shipped with the crate.
pub const BUNDLED_SAMPLE: &str = include_str!("../../data/noise_sample.txt");

pub fn parse_noise(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| Error::Parse {
            line: i + 1,
            msg: format!("`{line}` is not a number"),
        })?;
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!("noise value {v} outside [0, 1]"),
            });
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(Error::Data("noise stream is empty".into()));
    }
    Ok(out)
}

pub fn read_noise(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_noise(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_comments() {
        assert_eq!(
            parse_noise("# header\n0.5\n\n1 # max\n0\n").unwrap(),
            vec![0.5, 1.0, 0.0]
        );
    }

    #[test]
    fn rejects_out_of_range_and_empty() {
        assert!(matches!(parse_noise("0.2\n1.5\n"), Err(Error::Parse { line: 2, .. })));
        assert!(parse_noise("# nothing\n").is_err());
    }

    #[test]
    fn bundled_sample_is_valid() {
        let v = parse_noise(BUNDLED_SAMPLE).unwrap();
        assert!(v.len() >= 1000);
    }
}
