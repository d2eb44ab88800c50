#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "coldwarm/data.hpp"
#include "coldwarm/recommender.hpp"

namespace testing {

/// Random log with `n_users` users over `n_items` items. Each user gets
/// between 1 and `max_len` events at random timestamps in [0, t_max].
inline coldwarm::InteractionLog random_log(std::mt19937_64& rng, std::size_t n_users, std::size_t n_items,
                                           std::size_t max_len, coldwarm::Timestamp t_max = 1000) {
    std::vector<coldwarm::RawInteraction> rows;
    std::uniform_int_distribution<std::size_t> len(1, max_len), item(0, n_items - 1);
    std::uniform_int_distribution<coldwarm::Timestamp> ts(0, t_max);
    for (std::size_t u = 0; u < n_users; ++u) {
        const auto n = len(rng);
        for (std::size_t j = 0; j < n; ++j)
            rows.push_back({"u" + std::to_string(u), "i" + std::to_string(item(rng)), ts(rng), 1.0});
    }
    return coldwarm::make_log(rows);
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("coldwarm_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// Scores every item by its number of distinct training users.
class PopularityStub final : public coldwarm::Recommender {
  public:
    explicit PopularityStub(const coldwarm::SparseInteractionMatrix& x) : counts_(static_cast<std::size_t>(x.n_cols()), 0.0) {
        for (Eigen::Index j = 0; j < x.by_item.outerSize(); ++j)
            counts_[static_cast<std::size_t>(j)] = static_cast<double>(x.by_item.innerVector(j).nonZeros());
    }
    coldwarm::ModelKind kind() const override { return coldwarm::ModelKind::external; }
    std::size_t n_items() const override { return counts_.size(); }
    std::vector<double> score(std::span<const coldwarm::ItemId>) const override { return counts_; }

  private:
    std::vector<double> counts_;
};

inline coldwarm::Trainer popularity_trainer() {
    return [](const coldwarm::SparseInteractionMatrix& x, const coldwarm::HyperParams&, const coldwarm::TrainContext&) {
        return std::unique_ptr<coldwarm::Recommender>(std::make_unique<PopularityStub>(x));
    };
}

/// Fixed scores regardless of history.
class FixedStub final : public coldwarm::Recommender {
  public:
    explicit FixedStub(std::vector<double> scores) : scores_(std::move(scores)) {}
    coldwarm::ModelKind kind() const override { return coldwarm::ModelKind::external; }
    std::size_t n_items() const override { return scores_.size(); }
    std::vector<double> score(std::span<const coldwarm::ItemId>) const override { return scores_; }

  private:
    std::vector<double> scores_;
};

/// Log in which a popularity ranking puts a probe into the top-|probes| list
/// exactly when it has more training users than the competitor item (id 0).
///
/// Users u0..u{pool-1} consume every probe; the competitor has `competitor`
/// users and fillers have fewer. Test users only act after all training
/// events, and `q` places the timepoint on the last training event.
struct PlantedLog {
    coldwarm::InteractionLog log;
    double q = 0.0;
    std::vector<coldwarm::ItemId> probes;
};

inline PlantedLog planted_log(std::size_t n_probes, std::size_t pool, std::size_t competitor, std::size_t n_test = 20) {
    std::vector<coldwarm::RawInteraction> rows;
    coldwarm::Timestamp t = 0;
    auto user = [](std::size_t u) { return "u" + std::to_string(u); };
    for (std::size_t u = 0; u < competitor; ++u) rows.push_back({user(u), "c", ++t});
    for (std::size_t p = 0; p < n_probes; ++p)
        for (std::size_t u = 0; u < pool; ++u) rows.push_back({user(u), "p" + std::to_string(p), ++t});
    for (std::size_t f = 0; f + 1 < competitor; ++f)
        for (std::size_t u = 0; u <= f; ++u) rows.push_back({user(pool - 1 - u), "f" + std::to_string(f), ++t});
    const std::size_t n_train = rows.size();
    for (std::size_t u = 0; u < n_test; ++u) {
        rows.push_back({"t" + std::to_string(u), "f0", ++t});
        rows.push_back({"t" + std::to_string(u), "p0", ++t});
        rows.push_back({"t" + std::to_string(u), "f1", ++t});
    }
    PlantedLog out;
    out.log = coldwarm::make_log(rows);
    out.q = static_cast<double>(n_train) / static_cast<double>(rows.size());
    for (std::size_t p = 0; p < n_probes; ++p) out.probes.push_back(*out.log.items->find("p" + std::to_string(p)));
    return out;
}

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

} // namespace testing
