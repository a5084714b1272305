use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct YoloInstance {
    pub class_id: i64,
    /// Vertices in pixel units.
    pub polygon: Vec<(f64, f64)>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct YoloParse {
    pub instances: Vec<YoloInstance>,
    /// Normalized coordinates that fell outside `[0, 1]` and were clamped.
    pub clamped: usize,
}

/// Parses YOLO segmentation lines `class x1 y1 ... xn yn [conf]` with
/// normalized coordinates, scaling them to a `width` x `height` image.
pub fn parse_yolo_segmentation(
    text: &str,
    width: usize,
    height: usize,
    with_confidence: bool,
) -> Result<YoloParse> {
    let mut out = YoloParse::default();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r').trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let class_token = tokens.next().unwrap_or_default();
        let class_id: i64 = class_token.parse().map_err(|_| Error::Format {
            line: line_no,
            message: format!("invalid class id {class_token:?}"),
        })?;
        let mut values = tokens
            .map(|t| {
                t.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Format {
                    line: line_no,
                    message: format!("invalid number {t:?}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        let score = if with_confidence {
            let s = values.pop().ok_or_else(|| Error::Format {
                line: line_no,
                message: "missing confidence".into(),
            })?;
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::Range(format!("line {line_no}: confidence {s} outside [0, 1]")));
            }
            s
        } else {
            1.0
        };
        if values.len() % 2 != 0 {
            return Err(Error::Format {
                line: line_no,
                message: format!("odd coordinate count {}", values.len()),
            });
        }
        if values.len() < 6 {
            return Err(Error::Format {
                line: line_no,
                message: "polygon needs at least 3 vertices".into(),
            });
        }
        let polygon = values
            .chunks_exact(2)
            .map(|p| {
                let x = p[0].clamp(0.0, 1.0);
                let y = p[1].clamp(0.0, 1.0);
                out.clamped += usize::from(x != p[0]) + usize::from(y != p[1]);
                (x * width as f64, y * height as f64)
            })
            .collect();
        out.instances.push(YoloInstance {
            class_id,
            polygon,
            score,
        });
    }
    Ok(out)
}

/// Inverse of the denormalization applied by [`parse_yolo_segmentation`].
pub fn normalize_polygon(polygon: &[(f64, f64)], width: usize, height: usize) -> Vec<(f64, f64)> {
    polygon
        .iter()
        .map(|&(x, y)| (x / width as f64, y / height as f64))
        .collect()
}
