#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coldwarm/metrics.hpp"

namespace coldwarm {

struct CurvePoint {
    std::size_t n = 0;
    double value = 0.0;
};

/// Metric-vs-N curve, strictly ascending in N.
struct Curve {
    std::vector<CurvePoint> points;

    static Curve from_map(const std::map<std::size_t, double>& values);
};

struct WindowSlope {
    std::size_t first = 0; // index of the first point in the window
    std::size_t start_n = 0;
    std::size_t end_n = 0;
    double slope = 0.0;
};

/// OLS slope of value against N for every run of `w` consecutive points.
std::vector<WindowSlope> window_slopes(const Curve& curve, std::size_t w);

struct DetectOptions {
    std::size_t window = 5;
    double flatness_tolerance = 1e-6;
    /// Contrast flag when (max slope - median slope) <= multiplier * MAD(slopes).
    double contrast_multiplier = 3.0;
};

enum class Verdict { shift, low_contrast, no_positive_shift };
std::string to_string(Verdict v);

struct ThresholdReport {
    std::optional<std::size_t> threshold_n;
    std::size_t window_start_n = 0;
    std::size_t window_end_n = 0;
    double slope = 0.0;
    Verdict verdict = Verdict::shift;
    bool contrast_flag = false;
    std::optional<Interval> ci;
    double bootstrap_sd = 0.0;
    bool widened_warning = false; // detection failed in over 20% of resamples
};

/// Steepest positive window (ties: smallest start). The threshold is the grid
/// point that ends the largest single-step increase inside that window
/// (ties: smaller N), i.e. the first N at which the jump has happened.
ThresholdReport detect_threshold(const Curve& curve, const DetectOptions& options = {});

struct ThresholdBootstrap {
    std::optional<Interval> ci; // absent when every resample failed
    std::size_t resamples = 0;
    std::size_t failures = 0;
    bool widened_warning = false; // failures exceed 20% of resamples
    double sd = 0.0;
    std::vector<double> thresholds;
};

/// Resamples entities with replacement at every N, rebuilds the mean curve,
/// re-detects, and returns the percentile interval of detected thresholds.
ThresholdBootstrap bootstrap_threshold_ci(const std::map<std::size_t, std::vector<double>>& per_entity_values,
                                          const DetectOptions& options, std::size_t resamples, double level,
                                          std::uint64_t seed);

/// Table-cell style record keyed by (dataset, setup, model).
struct ThresholdRecord {
    std::string dataset;
    std::string setup;
    std::string model;
    std::string metric;
    std::size_t k = 0;
    ThresholdReport report;
};

std::string threshold_records_json(const std::vector<ThresholdRecord>& records);

} // namespace coldwarm
