//! Plain-text persistence of a trained classifier.
//!
//! ```text
//! # qtrack ttn model
//! [scaler]
//! <min> <max>        (6 lines, one per feature)
//! [params]
//! <theta>            (11 lines)
//! [meta]
//! layout=ttn-v1
//! seed=<init seed>
//! ```
//!
//! Numbers use Rust's shortest round-trip formatting so a read after write
//! reproduces every value bit for bit. Blank lines and `#` comments are
//! ignored.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::ttn::{FeatureScaler, TtnParams, LAYOUT_VERSION, N_FEATURES, N_PARAMS};

#[derive(Debug, Clone, PartialEq)]
pub struct TtnModel {
    pub scaler: FeatureScaler,
    pub params: TtnParams,
    /// Seed the initial parameters were drawn from.
    pub seed: u64,
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Scaler,
    Params,
    Meta,
}

impl TtnModel {
    pub fn to_text(&self) -> String {
        let mut out = String::from("# qtrack ttn model\n[scaler]\n");
        for (lo, hi) in self.scaler.bounds() {
            writeln!(out, "{lo} {hi}").unwrap();
        }
        out.push_str("[params]\n");
        for t in self.params.as_slice() {
            writeln!(out, "{t}").unwrap();
        }
        writeln!(out, "[meta]\nlayout={LAYOUT_VERSION}\nseed={}", self.seed).unwrap();
        out
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, msg: String| Error::parse(path, line as u64, msg);
        let num = |line: usize, tok: &str| -> Result<f64> {
            tok.parse::<f64>()
                .map_err(|_| err(line, format!("expected a number, found `{tok}`")))
        };

        let mut section = Section::None;
        let mut bounds = Vec::with_capacity(N_FEATURES);
        let mut thetas = Vec::with_capacity(N_PARAMS);
        let mut layout = None;
        let mut seed = None;
        let mut last_line = 0;

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            last_line = line;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            match content {
                "[scaler]" => section = Section::Scaler,
                "[params]" => section = Section::Params,
                "[meta]" => section = Section::Meta,
                _ => match section {
                    Section::None => {
                        return Err(err(line, format!("content `{content}` before any section")))
                    }
                    Section::Scaler => {
                        let toks: Vec<_> = content.split_whitespace().collect();
                        if toks.len() != 2 {
                            return Err(err(line, "scaler line needs `min max`".into()));
                        }
                        if bounds.len() == N_FEATURES {
                            return Err(err(line, format!("more than {N_FEATURES} scaler lines")));
                        }
                        bounds.push((num(line, toks[0])?, num(line, toks[1])?));
                    }
                    Section::Params => {
                        if thetas.len() == N_PARAMS {
                            return Err(err(line, format!("more than {N_PARAMS} parameters")));
                        }
                        thetas.push(num(line, content)?);
                    }
                    Section::Meta => {
                        let (key, value) = content
                            .split_once('=')
                            .ok_or_else(|| err(line, "meta line needs `key=value`".into()))?;
                        match key.trim() {
                            "layout" => layout = Some((line, value.trim().to_string())),
                            "seed" => {
                                seed = Some(value.trim().parse::<u64>().map_err(|_| {
                                    err(line, format!("invalid seed `{}`", value.trim()))
                                })?)
                            }
                            // unknown metadata is tolerated for forward compatibility
                            _ => {}
                        }
                    }
                },
            }
        }

        let end = last_line + 1;
        if bounds.len() != N_FEATURES {
            return Err(err(
                end,
                format!("expected {N_FEATURES} scaler lines, found {}", bounds.len()),
            ));
        }
        if thetas.len() != N_PARAMS {
            return Err(err(
                end,
                format!("expected {N_PARAMS} parameters, found {}", thetas.len()),
            ));
        }
        match layout {
            Some((_, ref v)) if v == LAYOUT_VERSION => {}
            Some((line, v)) => return Err(err(line, format!("unsupported layout `{v}`"))),
            None => return Err(err(end, "missing `layout` metadata".into())),
        }
        let seed = seed.ok_or_else(|| err(end, "missing `seed` metadata".into()))?;

        let scaler = FeatureScaler::new(bounds.try_into().expect("length checked"))
            .map_err(|e| err(end, e.to_string()))?;
        let params = TtnParams::new(&thetas).map_err(|e| err(end, e.to_string()))?;
        Ok(Self {
            scaler,
            params,
            seed,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ttn::init_params;

    fn sample() -> TtnModel {
        TtnModel {
            scaler: FeatureScaler::new([
                (32.0, 1020.0),
                (-std::f64::consts::PI, std::f64::consts::PI),
                (-1234.5678, 987.654321),
                (72.0, 1020.0),
                (-3.1, 3.1),
                (-1e-300, 5e-324),
            ])
            .unwrap(),
            params: init_params(9),
            seed: 9,
        }
    }

    #[test]
    fn text_round_trip_is_exact() {
        let m = sample();
        let back = TtnModel::parse(&m.to_text(), Path::new("m.txt")).unwrap();
        assert_eq!(back, m);
        for (a, b) in back.params.as_slice().iter().zip(m.params.as_slice()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back.to_text(), m.to_text());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = sample().to_text().replace("[params]\n", "[params]\nabc\n");
        match TtnModel::parse(&text, Path::new("m.txt")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 10),
            other => panic!("unexpected {other:?}"),
        }
        let text = sample().to_text().replace("ttn-v1", "mps-v0");
        assert!(matches!(
            TtnModel::parse(&text, Path::new("m.txt")),
            Err(Error::Parse { line: 22, .. })
        ));
    }

    #[test]
    fn missing_parameters_rejected() {
        let text = "[scaler]\n0 1\n0 1\n0 1\n0 1\n0 1\n0 1\n[params]\n0.5\n[meta]\nlayout=ttn-v1\nseed=1\n";
        assert!(matches!(
            TtnModel::parse(text, Path::new("m.txt")),
            Err(Error::Parse { .. })
        ));
    }
}
