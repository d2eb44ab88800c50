#include "coldwarm/threshold.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "coldwarm/random.hpp"

namespace coldwarm {

Curve Curve::from_map(const std::map<std::size_t, double>& values) {
    Curve c;
    for (const auto& [n, v] : values) c.points.push_back({n, v});
    return c;
}

std::string to_string(Verdict v) {
    switch (v) {
    case Verdict::shift: return "shift";
    case Verdict::low_contrast: return "low_contrast";
    case Verdict::no_positive_shift: return "no_positive_shift";
    }
    return "unknown";
}

std::vector<WindowSlope> window_slopes(const Curve& curve, std::size_t w) {
    if (w < 2) throw ConfigError("window size must be >= 2");
    const auto& p = curve.points;
    if (p.size() < w)
        throw DataError("curve has " + std::to_string(p.size()) + " points, window needs " + std::to_string(w));
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!std::isfinite(p[i].value)) throw DataError("curve value is not finite");
        if (i && p[i].n <= p[i - 1].n) throw DataError("curve N values must be strictly ascending");
    }
    std::vector<WindowSlope> out;
    out.reserve(p.size() - w + 1);
    for (std::size_t s = 0; s + w <= p.size(); ++s) {
        double mx = 0.0, my = 0.0;
        for (std::size_t j = s; j < s + w; ++j) {
            mx += static_cast<double>(p[j].n);
            my += p[j].value;
        }
        mx /= static_cast<double>(w);
        my /= static_cast<double>(w);
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t j = s; j < s + w; ++j) {
            const double dx = static_cast<double>(p[j].n) - mx;
            sxy += dx * (p[j].value - my);
            sxx += dx * dx;
        }
        out.push_back({s, p[s].n, p[s + w - 1].n, sxy / sxx});
    }
    return out;
}

ThresholdReport detect_threshold(const Curve& curve, const DetectOptions& options) {
    const auto slopes = window_slopes(curve, options.window);
    std::size_t best = 0;
    for (std::size_t s = 1; s < slopes.size(); ++s)
        if (slopes[s].slope > slopes[best].slope) best = s;

    ThresholdReport rep;
    rep.window_start_n = slopes[best].start_n;
    rep.window_end_n = slopes[best].end_n;
    rep.slope = slopes[best].slope;

    if (rep.slope <= 0.0) {
        rep.verdict = Verdict::no_positive_shift;
        rep.contrast_flag = true;
        return rep;
    }

    const auto& p = curve.points;
    std::size_t anchor = slopes[best].first + 1;
    for (std::size_t j = anchor + 1; j < slopes[best].first + options.window; ++j)
        if (p[j].value - p[j - 1].value > p[anchor].value - p[anchor - 1].value) anchor = j;
    rep.threshold_n = p[anchor].n;

    std::vector<double> values;
    values.reserve(slopes.size());
    for (const auto& s : slopes) values.push_back(s.slope);
    const double med = quantile(values, 0.5);
    std::vector<double> dev;
    dev.reserve(values.size());
    for (double v : values) dev.push_back(std::abs(v - med));
    const double mad = quantile(dev, 0.5);
    rep.contrast_flag = rep.slope <= options.flatness_tolerance || rep.slope - med <= options.contrast_multiplier * mad;
    rep.verdict = rep.contrast_flag ? Verdict::low_contrast : Verdict::shift;
    return rep;
}

ThresholdBootstrap bootstrap_threshold_ci(const std::map<std::size_t, std::vector<double>>& per_entity_values,
                                          const DetectOptions& options, std::size_t resamples, double level,
                                          std::uint64_t seed) {
    if (resamples < 1) throw ConfigError("bootstrap needs at least one resample");
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("confidence level must lie in (0, 1)");
    for (const auto& [n, v] : per_entity_values)
        if (v.size() < 2) throw DataError("bootstrap needs >= 2 entity values at N=" + std::to_string(n));

    ThresholdBootstrap out;
    out.resamples = resamples;
    for (std::size_t b = 0; b < resamples; ++b) {
        Rng rng(derive_seed(seed, {b}));
        Curve c;
        for (const auto& [n, v] : per_entity_values) {
            std::uniform_int_distribution<std::size_t> pick(0, v.size() - 1);
            double s = 0.0;
            for (std::size_t j = 0; j < v.size(); ++j) s += v[pick(rng)];
            c.points.push_back({n, s / static_cast<double>(v.size())});
        }
        auto rep = detect_threshold(c, options);
        if (rep.threshold_n)
            out.thresholds.push_back(static_cast<double>(*rep.threshold_n));
        else
            ++out.failures;
    }
    out.widened_warning = static_cast<double>(out.failures) > 0.2 * static_cast<double>(resamples);
    if (!out.thresholds.empty()) {
        const double tail = (1.0 - level) / 2.0;
        out.ci = Interval{quantile(out.thresholds, tail), quantile(out.thresholds, 1.0 - tail)};
        const double m = mean(out.thresholds);
        double ss = 0.0;
        for (double t : out.thresholds) ss += (t - m) * (t - m);
        out.sd = out.thresholds.size() > 1 ? std::sqrt(ss / static_cast<double>(out.thresholds.size() - 1)) : 0.0;
    }
    return out;
}

std::string threshold_records_json(const std::vector<ThresholdRecord>& records) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : records) {
        nlohmann::ordered_json j;
        j["dataset"] = r.dataset;
        j["setup"] = r.setup;
        j["model"] = r.model;
        j["metric"] = r.metric;
        j["K"] = r.k;
        j["threshold"] = r.report.threshold_n ? nlohmann::ordered_json(*r.report.threshold_n) : nullptr;
        j["window"] = {r.report.window_start_n, r.report.window_end_n};
        j["slope"] = r.report.slope;
        j["verdict"] = to_string(r.report.verdict);
        j["contrast_flag"] = r.report.contrast_flag;
        j["ci"] = r.report.ci ? nlohmann::ordered_json{r.report.ci->low, r.report.ci->high} : nullptr;
        j["bootstrap_sd"] = r.report.bootstrap_sd;
        j["widened_warning"] = r.report.widened_warning;
        arr.push_back(std::move(j));
    }
    return arr.dump(2) + "\n";
}

} // namespace coldwarm
