#include <cmath>

#include "coldwarm/random.hpp"
#include "coldwarm/recommender.hpp"
#include "coldwarm/split.hpp"

namespace coldwarm {

double validation_ndcg10(const Recommender& model, const GlobalTimepointSplit& split, bool filter_seen) {
    if (split.validation.empty()) throw DataError("validation set is empty");
    double total = 0.0;
    for (const auto& vp : split.validation) {
        auto history = items_of(vp.input);
        auto top = recommend_topk(model, history, 10, filter_seen);
        for (std::size_t r = 0; r < top.items.size(); ++r)
            if (top.items[r] == vp.target.item) {
                total += 1.0 / std::log2(static_cast<double>(r) + 2.0);
                break;
            }
    }
    return total / static_cast<double>(split.validation.size());
}

TuningResult tune_random_search(const Trainer& trainer, const std::vector<HyperParams>& grid,
                                const GlobalTimepointSplit& split, std::size_t budget, std::uint64_t seed,
                                MatrixMode mode, bool filter_seen) {
    if (grid.empty()) throw ConfigError("hyperparameter grid is empty");
    if (budget < 1) throw ConfigError("tuning budget must be >= 1");
    Rng rng(seed);
    auto picks = sample_indices(grid.size(), std::min(budget, grid.size()), rng);
    const auto x = build_matrix(split.train, mode);

    TuningResult result;
    std::ptrdiff_t best = -1;
    for (auto idx : picks) {
        TuningTrial trial;
        trial.params = grid[idx];
        try {
            auto model = trainer(x, trial.params, {});
            trial.ndcg10 = validation_ndcg10(*model, split, filter_seen);
        } catch (const std::exception& ex) {
            trial.failed = true;
            trial.error = ex.what();
        }
        result.trials.push_back(trial);
        if (!trial.failed && (best < 0 || trial.ndcg10 > result.trials[static_cast<std::size_t>(best)].ndcg10))
            best = static_cast<std::ptrdiff_t>(result.trials.size()) - 1;
    }
    if (best < 0) {
        std::string msg = "all tuning trials failed:";
        for (const auto& t : result.trials) msg += "\n  " + describe(t.params) + ": " + t.error;
        throw RunFailure(msg);
    }
    result.chosen = result.trials[static_cast<std::size_t>(best)].params;
    result.validation_ndcg10 = result.trials[static_cast<std::size_t>(best)].ndcg10;
    return result;
}

} // namespace coldwarm
