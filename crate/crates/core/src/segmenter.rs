//! Sliding-window boundary scoring, kernel smoothing, and dual-threshold
//! peak detection over long texts.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::scorer::{ScoreRequest, Scorer, ScorerError};
use crate::text::{split_sentences, SentenceSeq};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum KernelShape {
    /// Weights `h + 1 - |d|` for half-width `h`.
    #[default]
    Triangular,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmenterConfig {
    /// Sentences per window, split evenly around the boundary.
    pub window_sentences: usize,
    pub step: usize,
    pub kernel_width: usize,
    pub kernel: KernelShape,
    pub th1: f64,
    pub th2: f64,
    pub batch_size: usize,
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        SegmenterConfig {
            window_sentences: 10,
            step: 1,
            kernel_width: 25,
            kernel: KernelShape::Triangular,
            th1: 0.5,
            th2: 0.6,
            batch_size: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SegmentError {
    #[error("invalid segmenter config: {0}")]
    InvalidConfig(String),
    #[error("scoring boundary {boundary} failed: {source}")]
    Scorer { boundary: usize, source: ScorerError },
    #[error("scorer returned {got} probabilities for {expected} boundaries")]
    CountMismatch { expected: usize, got: usize },
}

impl SegmenterConfig {
    pub fn validate(&self) -> Result<(), SegmentError> {
        let bad = |m: String| Err(SegmentError::InvalidConfig(m));
        if self.window_sentences < 2 || !self.window_sentences.is_multiple_of(2) {
            return bad(format!("window_sentences must be even and >= 2, got {}", self.window_sentences));
        }
        if self.step == 0 {
            return bad("step must be >= 1".into());
        }
        if self.kernel_width.is_multiple_of(2) {
            return bad(format!("kernel_width must be odd, got {}", self.kernel_width));
        }
        if !(self.th1 > 0.0 && self.th1 <= self.th2 && self.th2 < 1.0) {
            return bad(format!("need 0 < th1 <= th2 < 1, got th1={} th2={}", self.th1, self.th2));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1".into());
        }
        Ok(())
    }

    pub fn half_window(&self) -> usize {
        self.window_sentences / 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesEntry {
    /// Boundary `i` sits after the `i`-th sentence (1-based).
    pub boundary: usize,
    pub p: f64,
}

/// Boundary probabilities with strictly increasing indices.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProbabilitySeries {
    entries: Vec<SeriesEntry>,
}

impl ProbabilitySeries {
    pub fn new(entries: Vec<SeriesEntry>) -> Result<Self, String> {
        if let Some(w) = entries.windows(2).find(|w| w[0].boundary >= w[1].boundary) {
            return Err(format!("boundary {} does not increase after {}", w[1].boundary, w[0].boundary));
        }
        if let Some(e) = entries.iter().find(|e| !(0.0..=1.0).contains(&e.p)) {
            return Err(format!("value {} at boundary {} is outside [0, 1]", e.p, e.boundary));
        }
        Ok(ProbabilitySeries { entries })
    }

    /// Consecutive boundaries starting at `first`.
    pub fn from_values(first: usize, values: &[f64]) -> Result<Self, String> {
        Self::new(
            values
                .iter()
                .enumerate()
                .map(|(i, &p)| SeriesEntry { boundary: first + i, p })
                .collect(),
        )
    }

    pub fn entries(&self) -> &[SeriesEntry] {
        &self.entries
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.p).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub boundary: usize,
    pub value: f64,
}

/// Boundaries with a full half-window on each side, advancing by `step`.
pub fn scored_boundaries(sentence_count: usize, cfg: &SegmenterConfig) -> Vec<usize> {
    let h = cfg.half_window();
    if sentence_count < cfg.window_sentences {
        return Vec::new();
    }
    (h..=sentence_count - h).step_by(cfg.step).collect()
}

pub fn score_boundaries<S: Scorer + ?Sized>(
    sentences: &SentenceSeq,
    scorer: &mut S,
    cfg: &SegmenterConfig,
) -> Result<ProbabilitySeries, SegmentError> {
    cfg.validate()?;
    let h = cfg.half_window();
    let boundaries = scored_boundaries(sentences.len(), cfg);
    let mut entries = Vec::with_capacity(boundaries.len());
    for chunk in boundaries.chunks(cfg.batch_size) {
        let requests: Vec<ScoreRequest> = chunk
            .iter()
            .map(|&b| ScoreRequest::new(format!("b{b}"), sentences.join_range(b - h..b), sentences.join_range(b..b + h)))
            .collect();
        let ps = scorer.score_batch(&requests).map_err(|source| {
            let boundary = error_boundary(&source).unwrap_or(chunk[0]);
            SegmentError::Scorer { boundary, source }
        })?;
        if ps.len() != chunk.len() {
            return Err(SegmentError::CountMismatch { expected: chunk.len(), got: ps.len() });
        }
        entries.extend(chunk.iter().zip(ps).map(|(&boundary, p)| SeriesEntry { boundary, p: p.get() }));
    }
    Ok(ProbabilitySeries { entries })
}

fn error_boundary(err: &ScorerError) -> Option<usize> {
    let id = match err {
        ScorerError::InvalidRequest { id, .. }
        | ScorerError::Timeout { id }
        | ScorerError::OutOfRange { id, .. }
        | ScorerError::Remote { id, .. } => id.as_str(),
        ScorerError::Malformed { id: Some(id), .. } => id.as_str(),
        _ => return None,
    };
    id.strip_prefix('b')?.parse().ok()
}

pub fn kernel_weights(width: usize, shape: KernelShape) -> Vec<f64> {
    let h = width / 2;
    (0..width)
        .map(|i| match shape {
            KernelShape::Triangular => (h + 1 - i.abs_diff(h)) as f64,
            KernelShape::Uniform => 1.0,
        })
        .collect()
}

/// Convolves entry positions with a normalized kernel, truncating and
/// renormalizing at the edges.
pub fn smooth(series: &ProbabilitySeries, kernel_width: usize, shape: KernelShape) -> ProbabilitySeries {
    assert!(kernel_width % 2 == 1, "kernel_width must be odd");
    let weights = kernel_weights(kernel_width, shape);
    let h = kernel_width / 2;
    let values = series.values();
    let n = values.len();
    let entries = series
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let lo = i.saturating_sub(h);
            let hi = (i + h).min(n - 1);
            let mut num = 0.0;
            let mut den = 0.0;
            for (j, v) in values.iter().enumerate().take(hi + 1).skip(lo) {
                let w = weights[j + h - i];
                num += w * v;
                den += w;
            }
            SeriesEntry { boundary: e.boundary, p: (num / den).clamp(0.0, 1.0) }
        })
        .collect();
    ProbabilitySeries { entries }
}

/// One peak per maximal run above `th1` (leftmost maximum), kept if above `th2`.
pub fn find_peaks(smoothed: &ProbabilitySeries, th1: f64, th2: f64) -> Vec<Peak> {
    let mut peaks = Vec::new();
    let mut best: Option<Peak> = None;
    for e in &smoothed.entries {
        if e.p > th1 {
            match best {
                Some(b) if b.value >= e.p => {}
                _ => best = Some(Peak { boundary: e.boundary, value: e.p }),
            }
        } else if let Some(b) = best.take() {
            peaks.push(b);
        }
    }
    peaks.extend(best);
    peaks.retain(|p| p.value > th2);
    peaks
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentRange {
    /// Half-open sentence range, 0-based.
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentReport {
    pub scorer: String,
    pub config: SegmenterConfig,
    pub sentences: usize,
    pub raw: ProbabilitySeries,
    pub smoothed: ProbabilitySeries,
    pub peaks: Vec<Peak>,
    pub segments: Vec<SegmentRange>,
}

pub fn segment_ranges(sentence_count: usize, peaks: &[Peak]) -> Vec<SegmentRange> {
    let mut cuts: Vec<usize> = vec![0];
    cuts.extend(peaks.iter().map(|p| p.boundary));
    cuts.push(sentence_count);
    cuts.windows(2).map(|w| SegmentRange { start: w[0], end: w[1] }).collect()
}

pub fn segment_sentences<S: Scorer + ?Sized>(
    sentences: &SentenceSeq,
    scorer: &mut S,
    cfg: &SegmenterConfig,
) -> Result<SegmentReport, SegmentError> {
    let raw = score_boundaries(sentences, scorer, cfg)?;
    let smoothed = smooth(&raw, cfg.kernel_width, cfg.kernel);
    let peaks = find_peaks(&smoothed, cfg.th1, cfg.th2);
    Ok(SegmentReport {
        scorer: scorer.name(),
        config: *cfg,
        sentences: sentences.len(),
        segments: segment_ranges(sentences.len(), &peaks),
        raw,
        smoothed,
        peaks,
    })
}

pub fn segment<S: Scorer + ?Sized>(text: &str, scorer: &mut S, cfg: &SegmenterConfig) -> Result<SegmentReport, SegmentError> {
    segment_sentences(&split_sentences(text), scorer, cfg)
}

impl SegmentReport {
    pub fn segment_texts(&self, sentences: &SentenceSeq) -> Vec<String> {
        self.segments.iter().map(|r| sentences.join_range(r.start..r.end)).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("boundary_index,raw_p,smoothed_p,is_peak\n");
        let mut peaks = self.peaks.iter().map(|p| p.boundary).peekable();
        for (raw, sm) in self.raw.entries.iter().zip(&self.smoothed.entries) {
            let is_peak = peaks.next_if_eq(&raw.boundary).is_some();
            let _ = writeln!(s, "{},{},{},{}", raw.boundary, raw.p, sm.p, is_peak);
        }
        s
    }

    pub fn to_svg(&self) -> String {
        const W: f64 = 800.0;
        const H: f64 = 300.0;
        const PAD: f64 = 40.0;
        let entries = self.raw.entries();
        let (lo, hi) = match (entries.first(), entries.last()) {
            (Some(a), Some(b)) => (a.boundary as f64, b.boundary.max(a.boundary + 1) as f64),
            _ => (0.0, 1.0),
        };
        let x = |b: usize| PAD + (b as f64 - lo) / (hi - lo) * (W - 2.0 * PAD);
        let y = |p: f64| H - PAD - p * (H - 2.0 * PAD);
        let polyline = |series: &ProbabilitySeries| {
            series
                .entries
                .iter()
                .map(|e| format!("{:.2},{:.2}", x(e.boundary), y(e.p)))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<line x1="{PAD}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"#,
            H - PAD,
            W - PAD,
            H - PAD
        );
        let _ = writeln!(s, r#"<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{:.2}" stroke="black"/>"#, H - PAD);
        for (th, label) in [(self.config.th1, "TH1"), (self.config.th2, "TH2")] {
            let _ = writeln!(
                s,
                r#"<line x1="{PAD}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="4 4"/><text x="{:.2}" y="{:.2}" font-size="10">{label} {th}</text>"#,
                y(th),
                W - PAD,
                y(th),
                W - PAD + 2.0,
                y(th) + 3.0
            );
        }
        let _ = writeln!(s, r##"<polyline fill="none" stroke="#bbbbbb" points="{}"/>"##, polyline(&self.raw));
        let _ = writeln!(s, r##"<polyline fill="none" stroke="#1f5fbf" stroke-width="2" points="{}"/>"##, polyline(&self.smoothed));
        for p in &self.peaks {
            let _ = writeln!(
                s,
                r##"<circle cx="{:.2}" cy="{:.2}" r="4" fill="#d62728"><title>boundary {} p={}</title></circle>"##,
                x(p.boundary),
                y(p.value),
                p.boundary,
                p.value
            );
        }
        s.push_str("</svg>\n");
        s
    }
}
