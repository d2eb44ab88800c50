#include "coldwarm/recommender.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace coldwarm {

std::string to_string(ModelKind kind) {
    switch (kind) {
    case ModelKind::ease: return "ease";
    case ModelKind::puresvd: return "puresvd";
    case ModelKind::itemknn: return "itemknn";
    case ModelKind::external: return "external";
    }
    return "unknown";
}

ModelKind parse_model_kind(const std::string& name) {
    if (name == "ease") return ModelKind::ease;
    if (name == "puresvd") return ModelKind::puresvd;
    if (name == "itemknn") return ModelKind::itemknn;
    throw ConfigError("unknown model kind '" + name + "' (expected ease, puresvd or itemknn)");
}

namespace {

class RescoringSession final : public ScoringSession {
  public:
    explicit RescoringSession(const Recommender& model) : model_(model) {}
    void add(ItemId item) override {
        history_.push_back(item);
        dirty_ = true;
    }
    const std::vector<double>& scores() override {
        if (dirty_ || scores_.empty()) {
            scores_ = model_.score(history_);
            dirty_ = false;
        }
        return scores_;
    }

  private:
    const Recommender& model_;
    std::vector<ItemId> history_;
    std::vector<double> scores_;
    bool dirty_ = true;
};

} // namespace

std::unique_ptr<ScoringSession> Recommender::session() const { return std::make_unique<RescoringSession>(*this); }

TopK rank_topk(std::span<const double> scores, std::span<const ItemId> history, std::size_t k, bool filter_seen) {
    if (k < 1) throw ConfigError("top-K requires K >= 1");
    std::vector<char> seen;
    if (filter_seen) {
        seen.assign(scores.size(), 0);
        for (auto i : history)
            if (i < seen.size()) seen[i] = 1;
    }
    std::vector<ItemId> candidates;
    candidates.reserve(scores.size());
    for (ItemId i = 0; i < scores.size(); ++i)
        if (!filter_seen || !seen[i]) candidates.push_back(i);

    TopK out;
    const std::size_t take = std::min(k, candidates.size());
    out.short_list = take < k;
    auto better = [&](ItemId a, ItemId b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    };
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take), candidates.end(),
                      better);
    candidates.resize(take);
    out.items = std::move(candidates);
    return out;
}

TopK recommend_topk(const Recommender& model, std::span<const ItemId> history, std::size_t k, bool filter_seen) {
    auto scores = model.score(history);
    return rank_topk(scores, history, k, filter_seen);
}

std::vector<ItemId> items_of(std::span<const Event> events) {
    std::vector<ItemId> out;
    out.reserve(events.size());
    for (const auto& e : events) out.push_back(e.item);
    return out;
}

std::string describe(const HyperParams& params) {
    std::ostringstream os;
    bool first = true;
    for (const auto& [k, v] : params) {
        os << (first ? "" : ",") << k << '=' << v;
        first = false;
    }
    return os.str();
}

std::vector<HyperParams> default_grid(ModelKind kind) {
    std::vector<HyperParams> grid;
    switch (kind) {
    case ModelKind::ease:
        for (double l : {1.0, 10.0, 50.0, 100.0, 300.0, 500.0, 1000.0}) grid.push_back({{"lambda", l}});
        break;
    case ModelKind::puresvd:
        for (double f : {16.0, 32.0, 64.0, 128.0, 256.0, 512.0}) grid.push_back({{"rank", f}});
        break;
    case ModelKind::itemknn:
        for (double k : {20.0, 50.0, 100.0, 200.0, 500.0}) grid.push_back({{"k", k}});
        break;
    case ModelKind::external: throw ConfigError("no default grid for external models");
    }
    return grid;
}

namespace {

double require(const HyperParams& p, const char* name) {
    auto it = p.find(name);
    if (it == p.end()) throw ConfigError(std::string("missing hyperparameter '") + name + "'");
    return it->second;
}

std::size_t require_count(const HyperParams& p, const char* name) {
    double v = require(p, name);
    if (!(v >= 1.0) || v != static_cast<double>(static_cast<std::size_t>(v)))
        throw ConfigError(std::string("hyperparameter '") + name + "' must be a positive integer");
    return static_cast<std::size_t>(v);
}

} // namespace

Trainer make_trainer(ModelKind kind, const SvdOptions& svd) {
    switch (kind) {
    case ModelKind::ease:
        return [](const SparseInteractionMatrix& x, const HyperParams& p, const TrainContext&) {
            return std::unique_ptr<Recommender>(std::make_unique<EaseModel>(train_ease(x, require(p, "lambda"))));
        };
    case ModelKind::puresvd:
        return [svd](const SparseInteractionMatrix& x, const HyperParams& p, const TrainContext& ctx) {
            SvdOptions opt = svd;
            if (ctx.svd_warm_start) opt.initial = ctx.svd_warm_start;
            return std::unique_ptr<Recommender>(
                std::make_unique<PureSvdModel>(train_puresvd(x, require_count(p, "rank"), opt)));
        };
    case ModelKind::itemknn:
        return [](const SparseInteractionMatrix& x, const HyperParams& p, const TrainContext&) {
            return std::unique_ptr<Recommender>(
                std::make_unique<ItemKnnModel>(train_itemknn(x, require_count(p, "k"))));
        };
    case ModelKind::external: break;
    }
    throw ConfigError("no built-in trainer for external models");
}

} // namespace coldwarm
