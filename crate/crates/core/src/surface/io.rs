//! ASCII OFF and OBJ triangle mesh readers. Polygons are fan-triangulated.

use std::path::Path;

use super::SurfaceMesh;
use crate::error::{MfeError, Result};

fn fan(poly: &[usize], faces: &mut Vec<[usize; 3]>) -> Result<()> {
    if poly.len() < 3 {
        return Err(MfeError::Parse(format!("face with {} vertices", poly.len())));
    }
    for k in 1..poly.len() - 1 {
        faces.push([poly[0], poly[k], poly[k + 1]]);
    }
    Ok(())
}

fn parse_f64(tok: Option<&str>, line: usize) -> Result<f64> {
    tok.ok_or_else(|| MfeError::Parse(format!("line {line}: missing coordinate")))?
        .parse::<f64>()
        .map_err(|e| MfeError::Parse(format!("line {line}: {e}")))
}

pub fn read_off(text: &str) -> Result<SurfaceMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (ln, header) = lines.next().ok_or_else(|| MfeError::Parse("empty OFF file".into()))?;
    let mut counts_line = if header == "OFF" {
        None
    } else if let Some(rest) = header.strip_prefix("OFF") {
        Some((ln, rest.trim()))
    } else {
        return Err(MfeError::Parse("missing OFF header".into()));
    };
    if counts_line.is_none() {
        counts_line = lines.next();
    }
    let (ln, counts) = counts_line.ok_or_else(|| MfeError::Parse("missing OFF counts".into()))?;
    let counts: Vec<usize> = counts
        .split_whitespace()
        .map(|t| {
            t.parse::<usize>()
                .map_err(|e| MfeError::Parse(format!("line {ln}: {e}")))
        })
        .collect::<Result<_>>()?;
    if counts.len() < 2 {
        return Err(MfeError::Parse(format!("line {ln}: expected vertex and face counts")));
    }
    let (nv, nf) = (counts[0], counts[1]);
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| MfeError::Parse("truncated vertex list".into()))?;
        let mut it = l.split_whitespace();
        vertices.push([
            parse_f64(it.next(), ln)?,
            parse_f64(it.next(), ln)?,
            parse_f64(it.next(), ln)?,
        ]);
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| MfeError::Parse("truncated face list".into()))?;
        let nums: Vec<usize> = l
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|e| MfeError::Parse(format!("line {ln}: {e}")))
            })
            .collect::<Result<_>>()?;
        let k = *nums
            .first()
            .ok_or_else(|| MfeError::Parse(format!("line {ln}: empty face")))?;
        if nums.len() < k + 1 {
            return Err(MfeError::Parse(format!(
                "line {ln}: face lists fewer than {k} vertices"
            )));
        }
        fan(&nums[1..=k], &mut faces)?;
    }
    SurfaceMesh::from_triangles(vertices, faces)
}

pub fn read_obj(text: &str) -> Result<SurfaceMesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let l = raw.split('#').next().unwrap_or("").trim();
        let mut it = l.split_whitespace();
        match it.next() {
            Some("v") => {
                vertices.push([
                    parse_f64(it.next(), ln)?,
                    parse_f64(it.next(), ln)?,
                    parse_f64(it.next(), ln)?,
                ]);
            }
            Some("f") => {
                let poly: Vec<usize> = it
                    .map(|t| {
                        let idx = t.split('/').next().unwrap_or("");
                        let k: i64 = idx.parse().map_err(|e| MfeError::Parse(format!("line {ln}: {e}")))?;
                        let resolved = if k > 0 { k - 1 } else { vertices.len() as i64 + k };
                        if resolved < 0 {
                            return Err(MfeError::Parse(format!("line {ln}: bad vertex index {k}")));
                        }
                        Ok(resolved as usize)
                    })
                    .collect::<Result<_>>()?;
                fan(&poly, &mut faces)?;
            }
            _ => {}
        }
    }
    SurfaceMesh::from_triangles(vertices, faces)
}

/// Reads an `.off` or `.obj` file, chosen by extension.
pub fn read_mesh_file(path: &Path) -> Result<SurfaceMesh> {
    let text = std::fs::read_to_string(path)?;
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("off") => read_off(&text),
        Some("obj") => read_obj(&text),
        _ => Err(MfeError::Parse(format!("unsupported mesh format: {}", path.display()))),
    }
}
