//! DOTA-style annotation ingestion.
//!
//! One object per line: `x1 y1 x2 y2 x3 y3 x4 y4 class [difficulty]`. Lines
//! starting with `imagesource:` or `gsd:` and `#` comments are metadata and are
//! skipped. Each quadrilateral is converted to its minimum-area rectangle.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{min_area_rect, OrientedBox, Point};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtObject {
    pub bbox: OrientedBox,
    pub class: String,
    pub difficult: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub width: f64,
    pub height: f64,
    pub objects: Vec<GtObject>,
}

impl Scene {
    pub fn gt_boxes(&self) -> Vec<OrientedBox> {
        self.objects.iter().map(|o| o.bbox).collect()
    }

    /// Checks box validity and, when given, class membership.
    pub fn validate(&self, classes: Option<&[String]>) -> Result<()> {
        for o in &self.objects {
            o.bbox.validate()?;
            if let Some(set) = classes {
                if !set.iter().any(|c| c == &o.class) {
                    return Err(Error::InvalidConfig(format!(
                        "undeclared class {:?}",
                        o.class
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParseOptions {
    /// Fail on the first malformed line instead of collecting it.
    pub strict: bool,
    /// Image size assigned to parsed scenes. Defaults to the annotations'
    /// extent rounded up to whole pixels.
    pub image_size: Option<(f64, f64)>,
    /// Declared class set; objects outside it are malformed.
    pub classes: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseIssue {
    pub path: PathBuf,
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParseOutcome {
    pub scenes: Vec<Scene>,
    pub issues: Vec<ParseIssue>,
}

/// Parses one annotation file, or every `*.txt` file of a directory in name
/// order (one scene per file). Files without objects produce no scene.
pub fn parse_annotations(path: &Path, opts: &ParseOptions) -> Result<ParseOutcome> {
    let mut files = Vec::new();
    if path.is_dir() {
        for entry in fs::read_dir(path)? {
            let p = entry?.path();
            if p.extension().is_some_and(|e| e == "txt") {
                files.push(p);
            }
        }
        files.sort();
    } else {
        files.push(path.to_path_buf());
    }

    let mut out = ParseOutcome::default();
    for file in files {
        let text = fs::read_to_string(&file)?;
        if let Some(scene) = parse_scene(&text, &file, opts, &mut out.issues)? {
            out.scenes.push(scene);
        }
    }
    Ok(out)
}

fn parse_scene(
    text: &str,
    path: &Path,
    opts: &ParseOptions,
    issues: &mut Vec<ParseIssue>,
) -> Result<Option<Scene>> {
    let mut objects = Vec::new();
    let mut extent = Point::new(0.0, 0.0);
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty()
            || line.starts_with('#')
            || line.starts_with("imagesource:")
            || line.starts_with("gsd:")
        {
            continue;
        }
        match parse_line(line, opts) {
            Ok((obj, quad)) => {
                for p in quad {
                    extent = Point::new(extent.x.max(p.x), extent.y.max(p.y));
                }
                objects.push(obj);
            }
            Err(message) => {
                if opts.strict {
                    return Err(Error::Format {
                        path: path.to_path_buf(),
                        line: n + 1,
                        message,
                    });
                }
                issues.push(ParseIssue {
                    path: path.to_path_buf(),
                    line: n + 1,
                    message,
                });
            }
        }
    }
    if objects.is_empty() {
        return Ok(None);
    }
    let (width, height) = opts
        .image_size
        .unwrap_or((extent.x.ceil().max(1.0), extent.y.ceil().max(1.0)));
    Ok(Some(Scene {
        width,
        height,
        objects,
    }))
}

fn parse_line(line: &str, opts: &ParseOptions) -> Result<(GtObject, [Point; 4]), String> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    if tokens.len() != 9 && tokens.len() != 10 {
        return Err(format!(
            "expected 8 coordinates, a class and an optional difficulty; got {} fields",
            tokens.len()
        ));
    }
    let mut coords = [0.0f64; 8];
    for (c, t) in coords.iter_mut().zip(&tokens[..8]) {
        *c = t
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("bad coordinate {t:?}"))?;
    }
    let class = tokens[8].to_string();
    if class.parse::<f64>().is_ok() {
        return Err(format!("class label {class:?} is numeric"));
    }
    if let Some(set) = &opts.classes {
        if !set.contains(&class) {
            return Err(format!("undeclared class {class:?}"));
        }
    }
    let difficult = match tokens.get(9) {
        None | Some(&"0") => false,
        Some(&"1") => true,
        Some(t) => return Err(format!("bad difficulty flag {t:?}")),
    };
    let quad = [
        Point::new(coords[0], coords[1]),
        Point::new(coords[2], coords[3]),
        Point::new(coords[4], coords[5]),
        Point::new(coords[6], coords[7]),
    ];
    let bbox = min_area_rect(&quad).map_err(|e| e.to_string())?;
    Ok((
        GtObject {
            bbox,
            class,
            difficult,
        },
        quad,
    ))
}
