//! Pearson correlation analysis over instances and features, with CSV and
//! SVG heatmap export.
//!
//! Correlations between constant vectors are undefined. They stay undefined
//! here: the matrix carries an explicit mask and the heatmap renders those
//! tiles blank instead of pretending the correlation is zero.

use std::io::Write as _;
use std::path::Path;

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::InstanceLabel;

/// Sample Pearson correlation of two equal-length vectors.
///
/// Returns `Ok(None)` when either vector has zero variance, which is a
/// well-formed outcome rather than an error: callers decide whether to mask
/// or reject.
pub fn pearson(v: ArrayView1<'_, f64>, w: ArrayView1<'_, f64>) -> Result<Option<f64>> {
    if v.len() != w.len() {
        return Err(Error::InvalidArgument(format!(
            "pearson needs equal lengths, got {} and {}",
            v.len(),
            w.len()
        )));
    }
    if v.len() < 2 {
        return Err(Error::InvalidArgument(
            "pearson needs at least 2 observations".into(),
        ));
    }
    let n = v.len() as f64;
    let mv = v.sum() / n;
    let mw = w.sum() / n;
    let mut svw = 0.0;
    let mut svv = 0.0;
    let mut sww = 0.0;
    for (&a, &b) in v.iter().zip(w.iter()) {
        let da = a - mv;
        let db = b - mw;
        svw += da * db;
        svv += da * da;
        sww += db * db;
    }
    if svv == 0.0 || sww == 0.0 {
        return Ok(None);
    }
    Ok(Some((svw / (svv * sww).sqrt()).clamp(-1.0, 1.0)))
}

/// Square symmetric correlation matrix with an explicit undefined mask.
/// Masked entries hold NaN so accidental numeric use is loud.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    labels: Vec<String>,
    data: Array2<f64>,
    mask: Array2<bool>,
}

impl CorrelationMatrix {
    fn from_vectors<'a, I>(rows: I, count: usize, labels: Vec<String>) -> Result<Self>
    where
        I: Fn(usize) -> ArrayView1<'a, f64>,
    {
        if count < 2 {
            return Err(Error::InvalidArgument(
                "correlation needs at least 2 vectors".into(),
            ));
        }
        if labels.len() != count {
            return Err(Error::InvalidArgument(format!(
                "{} labels for {count} vectors",
                labels.len()
            )));
        }
        let mut data = Array2::<f64>::from_elem((count, count), f64::NAN);
        let mut mask = Array2::<bool>::from_elem((count, count), true);
        let constant: Vec<bool> = (0..count)
            .map(|i| {
                let r = rows(i);
                let first = r[0];
                r.iter().all(|&x| x == first)
            })
            .collect();
        for i in 0..count {
            if !constant[i] {
                data[[i, i]] = 1.0;
                mask[[i, i]] = false;
            }
            for j in i + 1..count {
                if constant[i] || constant[j] {
                    continue;
                }
                if let Some(r) = pearson(rows(i), rows(j))? {
                    data[[i, j]] = r;
                    data[[j, i]] = r;
                    mask[[i, j]] = false;
                    mask[[j, i]] = false;
                }
            }
        }
        Ok(CorrelationMatrix { labels, data, mask })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    /// Entry (i, j), or `None` when the correlation is undefined there.
    pub fn entry(&self, i: usize, j: usize) -> Option<f64> {
        if self.mask[[i, j]] {
            None
        } else {
            Some(self.data[[i, j]])
        }
    }

    pub fn data(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }

    pub fn mask(&self) -> ArrayView2<'_, bool> {
        self.mask.view()
    }

    /// CSV export: first column holds labels, masked entries are empty cells.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        out.extend_from_slice(b"label");
        for l in &self.labels {
            write!(out, ",{l}")?;
        }
        out.push(b'\n');
        for i in 0..self.dim() {
            write!(out, "{}", self.labels[i])?;
            for j in 0..self.dim() {
                match self.entry(i, j) {
                    Some(v) => write!(out, ",{v}")?,
                    None => out.push(b','),
                }
            }
            out.push(b'\n');
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}

/// All-pairs correlation between the rows of a matrix (feature vectors or
/// fingerprints alike).
pub fn instance_correlation(
    rows: ArrayView2<'_, f64>,
    labels: Vec<String>,
) -> Result<CorrelationMatrix> {
    CorrelationMatrix::from_vectors(|i| rows.row(i), rows.nrows(), labels)
}

/// Correlation between feature columns: the transpose view of the matrix.
pub fn feature_correlation(x: &FeatureMatrix) -> Result<CorrelationMatrix> {
    let data = x.data();
    CorrelationMatrix::from_vectors(
        |j| data.column(j),
        data.ncols(),
        x.columns().to_vec(),
    )
}

/// Rendering options for [`render_heatmap`].
#[derive(Debug, Clone)]
pub struct HeatmapOptions {
    /// Side length of one tile in pixels.
    pub cell_size: u32,
    /// Draw separator lines every this many rows/columns.
    pub block_size: Option<usize>,
    /// Draw axis labels (thinned automatically on large matrices).
    pub show_labels: bool,
}

impl Default for HeatmapOptions {
    fn default() -> Self {
        HeatmapOptions {
            cell_size: 8,
            block_size: None,
            show_labels: true,
        }
    }
}

const COLOR_NEG: (u8, u8, u8) = (0x21, 0x66, 0xac);
const COLOR_MID: (u8, u8, u8) = (0xf7, 0xf7, 0xf7);
const COLOR_POS: (u8, u8, u8) = (0xb2, 0x18, 0x2b);

fn blend(a: (u8, u8, u8), b: (u8, u8, u8), t: f64) -> String {
    let ch = |x: u8, y: u8| (x as f64 + (y as f64 - x as f64) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", ch(a.0, b.0), ch(a.1, b.1), ch(a.2, b.2))
}

fn diverging_color(c: f64) -> String {
    if c < 0.0 {
        blend(COLOR_MID, COLOR_NEG, -c)
    } else {
        blend(COLOR_MID, COLOR_POS, c)
    }
}

/// Write a correlation heatmap as a self-contained SVG.
///
/// Row 0 sits in the lower-left corner and rows grow upward, so an
/// instance-major matrix reads the same way as the usual figure layout.
/// Output bytes are a pure function of the matrix and options.
pub fn render_heatmap(
    corr: &CorrelationMatrix,
    path: &Path,
    options: &HeatmapOptions,
) -> Result<()> {
    let n = corr.dim();
    let cell = options.cell_size.max(1) as usize;
    let margin_left = if options.show_labels { 72 } else { 12 };
    let margin_bottom = if options.show_labels { 72 } else { 12 };
    let margin_top = 12;
    let margin_right = 12;
    let width = margin_left + n * cell + margin_right;
    let height = margin_top + n * cell + margin_bottom;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{width}\" height=\"{height}\" fill=\"#ffffff\"/>\n"
    ));

    for i in 0..n {
        let y = margin_top + (n - 1 - i) * cell;
        for j in 0..n {
            let x = margin_left + j * cell;
            let fill = match corr.entry(i, j) {
                Some(v) => diverging_color(v),
                None => "#ffffff".to_string(),
            };
            svg.push_str(&format!(
                "<rect x=\"{x}\" y=\"{y}\" width=\"{cell}\" height=\"{cell}\" fill=\"{fill}\"/>\n"
            ));
        }
    }

    if let Some(block) = options.block_size {
        if block > 0 {
            let x0 = margin_left;
            let x1 = margin_left + n * cell;
            let y0 = margin_top;
            let y1 = margin_top + n * cell;
            let mut k = 0;
            while k <= n {
                let x = margin_left + k * cell;
                let y = margin_top + (n - k) * cell;
                svg.push_str(&format!(
                    "<line x1=\"{x}\" y1=\"{y0}\" x2=\"{x}\" y2=\"{y1}\" \
                     stroke=\"#444444\" stroke-width=\"1\"/>\n"
                ));
                svg.push_str(&format!(
                    "<line x1=\"{x0}\" y1=\"{y}\" x2=\"{x1}\" y2=\"{y}\" \
                     stroke=\"#444444\" stroke-width=\"1\"/>\n"
                ));
                if k == n {
                    break;
                }
                k += block;
                if k > n {
                    k = n;
                }
            }
        }
    }

    if options.show_labels {
        let step = n.div_ceil(60).max(1);
        let font = (cell as f64 * 0.9).min(10.0);
        for i in (0..n).step_by(step) {
            let y = margin_top as f64 + (n - 1 - i) as f64 * cell as f64 + cell as f64 * 0.75;
            let x = margin_left - 4;
            svg.push_str(&format!(
                "<text x=\"{x}\" y=\"{y}\" font-size=\"{font}\" text-anchor=\"end\" \
                 font-family=\"monospace\">{}</text>\n",
                corr.labels[i]
            ));
        }
        for j in (0..n).step_by(step) {
            let x = margin_left as f64 + j as f64 * cell as f64 + cell as f64 * 0.75;
            let y = margin_top + n * cell + 4;
            svg.push_str(&format!(
                "<text x=\"{x}\" y=\"{y}\" font-size=\"{font}\" text-anchor=\"end\" \
                 font-family=\"monospace\" transform=\"rotate(-90 {x} {y})\">{}</text>\n",
                corr.labels[j]
            ));
        }
    }

    svg.push_str("</svg>\n");
    std::fs::write(path, svg)?;
    Ok(())
}

/// Per-problem correlation structure at a threshold.
#[derive(Debug, Clone)]
pub struct ProblemCorrelation {
    pub function_id: u32,
    /// Mean pairwise correlation among this problem's instances; `None`
    /// when every within-problem pair is masked.
    pub mean_within: Option<f64>,
    /// Connected components of instance ids under `corr >= threshold`.
    pub components: Vec<Vec<u32>>,
}

/// Summary produced by [`correlation_report`].
#[derive(Debug, Clone)]
pub struct CorrelationReport {
    pub threshold: f64,
    pub problems: Vec<ProblemCorrelation>,
    /// Pooled mean over all defined within-problem pairs.
    pub mean_within: Option<f64>,
    /// Pooled mean over all defined cross-problem pairs.
    pub mean_cross: Option<f64>,
}

/// Group an instance correlation matrix by problem: per-problem mean
/// correlations and the instance components that a selection at `threshold`
/// would merge.
pub fn correlation_report(
    corr: &CorrelationMatrix,
    labels: &[InstanceLabel],
    threshold: f64,
) -> Result<CorrelationReport> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "threshold {threshold} outside (0, 1]"
        )));
    }
    if labels.len() != corr.dim() {
        return Err(Error::InvalidArgument(format!(
            "{} instance labels for a {}x{} matrix",
            labels.len(),
            corr.dim(),
            corr.dim()
        )));
    }

    let mut function_ids: Vec<u32> = labels.iter().map(|l| l.function_id).collect();
    function_ids.sort_unstable();
    function_ids.dedup();

    let mut within_sum = 0.0;
    let mut within_count = 0usize;
    let mut cross_sum = 0.0;
    let mut cross_count = 0usize;
    for i in 0..corr.dim() {
        for j in i + 1..corr.dim() {
            let Some(v) = corr.entry(i, j) else { continue };
            if labels[i].function_id == labels[j].function_id {
                within_sum += v;
                within_count += 1;
            } else {
                cross_sum += v;
                cross_count += 1;
            }
        }
    }

    let mut problems = Vec::with_capacity(function_ids.len());
    for fid in function_ids {
        let members: Vec<usize> = (0..labels.len())
            .filter(|&i| labels[i].function_id == fid)
            .collect();
        let mut sum = 0.0;
        let mut count = 0usize;
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                if let Some(v) = corr.entry(i, j) {
                    sum += v;
                    count += 1;
                }
            }
        }
        let mean_within = if count > 0 {
            Some(sum / count as f64)
        } else {
            None
        };

        // Connected components among this problem's instances.
        let mut component_of: Vec<Option<usize>> = vec![None; members.len()];
        let mut components: Vec<Vec<u32>> = Vec::new();
        for start in 0..members.len() {
            if component_of[start].is_some() {
                continue;
            }
            let id = components.len();
            let mut queue = vec![start];
            component_of[start] = Some(id);
            let mut group = Vec::new();
            while let Some(a) = queue.pop() {
                group.push(labels[members[a]].instance_id);
                for b in 0..members.len() {
                    if component_of[b].is_some() {
                        continue;
                    }
                    let linked = corr
                        .entry(members[a], members[b])
                        .is_some_and(|v| v >= threshold);
                    if linked {
                        component_of[b] = Some(id);
                        queue.push(b);
                    }
                }
            }
            group.sort_unstable();
            components.push(group);
        }
        components.sort_by_key(|g| g[0]);

        problems.push(ProblemCorrelation {
            function_id: fid,
            mean_within,
            components,
        });
    }

    Ok(CorrelationReport {
        threshold,
        problems,
        mean_within: (within_count > 0).then(|| within_sum / within_count as f64),
        mean_cross: (cross_count > 0).then(|| cross_sum / cross_count as f64),
    })
}
