//! Frequency, orientation and phase of learned filters.
//!
//! Filters are analyzed in pixel space by the peak of their 2-D DFT over
//! the half plane of non-DC bins; see [`analyze_filter`].

mod render;
mod spectrum;
mod stats;

use std::path::Path;

pub use render::{hue_to_rgb, render_mosaic, render_property_map, render_topographic_map, Image, Property};
pub use spectrum::{
    analyze_filter, analyze_filters, filters_as_patches, model_spectra, phase_difference_table, phase_rotate,
    property_histograms, FilterAnalysis, FilterSpectrum, HistogramBins, PhaseDifference, PhaseDifferenceTable,
    PropertyHistogram, ORIENTATION_BINS, PEAK_TO_MEDIAN,
};
pub use stats::{
    axial_std, circular_std, group_dispersion, mann_whitney, orientation_distance, resultant_length,
    topographic_smoothness, GroupDispersion, MannWhitney, Smoothness,
};

use crate::io::write_csv_report;
use crate::Result;

/// Columns: filter_index, frequency, orientation, phase, peak_magnitude.
/// Degenerate filters keep their row with empty property fields.
pub fn write_spectra_csv(path: impl AsRef<Path>, spectra: &[FilterAnalysis]) -> Result<()> {
    let rows = spectra.iter().map(|a| match a {
        FilterAnalysis::Spectrum(s) => vec![
            s.filter_index.to_string(),
            s.frequency.to_string(),
            s.orientation.to_string(),
            s.phase.to_string(),
            s.peak_magnitude.to_string(),
        ],
        FilterAnalysis::Degenerate {
            filter_index,
            peak_magnitude,
        } => vec![
            filter_index.to_string(),
            String::new(),
            String::new(),
            String::new(),
            peak_magnitude.to_string(),
        ],
    });
    write_csv_report(
        path,
        &["filter_index", "frequency", "orientation", "phase", "peak_magnitude"],
        rows,
    )
}

pub fn write_phase_differences_csv(path: impl AsRef<Path>, table: &PhaseDifferenceTable) -> Result<()> {
    let rows = table.rows.iter().flat_map(|((f, o), diffs)| {
        diffs.iter().map(move |d| {
            vec![
                f.to_string(),
                o.to_string(),
                d.input_filter.to_string(),
                d.output_filter.to_string(),
                d.delta.to_string(),
            ]
        })
    });
    write_csv_report(
        path,
        &["frequency_bin", "orientation_bin", "input_filter", "output_filter", "phase_difference"],
        rows,
    )
}
