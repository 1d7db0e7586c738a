//! Dataset files: a CSV of points plus a JSON metadata sidecar.
//!
//! The CSV header is `x_0,...,x_{n-1}` followed by `y_0,...` for supervised
//! data; row order is the point index. Seeds, generator specs and labels live
//! only in the sidecar (`<stem>.meta.json`), never in the CSV an estimator
//! reads.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ebransac_core::synth::{Generated, PresetSpec};
use ebransac_core::{DataPoint, Dataset};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<PresetSpec>,
    /// `true` marks an inlier. Scoring only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<bool>>,
}

pub fn meta_path(csv: &Path) -> PathBuf {
    let stem = csv
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    csv.with_file_name(format!("{stem}.meta.json"))
}

pub fn write_dataset_csv<W: Write>(data: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<String> = (0..data.input_dim())
        .map(|i| format!("x_{i}"))
        .chain((0..data.target_dim()).map(|i| format!("y_{i}")))
        .collect();
    w.write_record(&header)?;
    for p in data.points() {
        let row: Vec<String> = p
            .input
            .iter()
            .chain(p.target.iter().flatten())
            .map(|v| v.to_string())
            .collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset_csv<R: Read>(input: R) -> Result<Dataset> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let headers = r.headers()?.clone();
    let mut n_in = 0;
    let mut n_out = 0;
    for (i, h) in headers.iter().enumerate() {
        let h = h.trim();
        if h == format!("x_{n_in}") && n_out == 0 {
            n_in += 1;
        } else if h == format!("y_{n_out}") {
            n_out += 1;
        } else {
            bail!("unexpected column {h:?} at position {i}; expected x_0..x_n then y_0..y_m");
        }
    }
    if n_in == 0 {
        bail!("dataset CSV has no x_ columns");
    }
    let mut points = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .with_context(|| format!("row {row}: non-numeric value"))?;
        if vals.len() != n_in + n_out {
            bail!("row {row}: expected {} values, found {}", n_in + n_out, vals.len());
        }
        points.push(DataPoint {
            input: vals[..n_in].to_vec(),
            target: (n_out > 0).then(|| vals[n_in..].to_vec()),
        });
    }
    Ok(Dataset::new(points, None)?)
}

/// Writes `<path>` and its sidecar.
pub fn save_dataset(path: &Path, data: &Dataset, meta: &DatasetMeta) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_dataset_csv(data, f)?;
    fs::write(meta_path(path), serde_json::to_string_pretty(meta)? + "\n")?;
    Ok(())
}

pub fn save_generated(path: &Path, spec: &PresetSpec, g: &Generated) -> Result<()> {
    let meta = DatasetMeta {
        seed: Some(spec.seed),
        spec: Some(spec.clone()),
        labels: Some(g.labels.clone()),
    };
    save_dataset(path, &g.dataset, &meta)
}

/// Reads `<path>`; the sidecar is optional and supplies the seed when present.
pub fn load_dataset(path: &Path) -> Result<(Dataset, Option<DatasetMeta>)> {
    let f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let data = read_dataset_csv(f).with_context(|| format!("reading {}", path.display()))?;
    let mp = meta_path(path);
    if !mp.exists() {
        return Ok((data, None));
    }
    let meta: DatasetMeta =
        serde_json::from_str(&fs::read_to_string(&mp)?).with_context(|| format!("parsing {}", mp.display()))?;
    if let Some(labels) = &meta.labels {
        if labels.len() != data.len() {
            bail!("{}: {} labels for {} points", mp.display(), labels.len(), data.len());
        }
    }
    let data = match meta.seed {
        Some(s) => data.with_seed(s),
        None => data,
    };
    Ok((data, Some(meta)))
}
