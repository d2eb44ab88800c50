#include <algorithm>
#include <cmath>

#include "coldwarm/recommender.hpp"

namespace coldwarm {

namespace {

class ColumnSumSession final : public ScoringSession {
  public:
    explicit ColumnSumSession(const Eigen::SparseMatrix<double>& s)
        : s_(s), scores_(static_cast<std::size_t>(s.rows()), 0.0), seen_(static_cast<std::size_t>(s.cols()), 0) {}

    void add(ItemId item) override {
        if (seen_.at(item)) return;
        seen_[item] = 1;
        for (Eigen::SparseMatrix<double>::InnerIterator it(s_, item); it; ++it) scores_[it.row()] += it.value();
    }
    const std::vector<double>& scores() override { return scores_; }

  private:
    const Eigen::SparseMatrix<double>& s_;
    std::vector<double> scores_;
    std::vector<char> seen_;
};

} // namespace

ItemKnnModel::ItemKnnModel(Eigen::SparseMatrix<double> similarity, std::size_t neighbors)
    : similarity_(std::move(similarity)), neighbors_(neighbors) {
    similarity_.makeCompressed();
}

std::vector<double> ItemKnnModel::score(std::span<const ItemId> history) const {
    ColumnSumSession s(similarity_);
    for (auto i : history) s.add(i);
    return s.scores();
}

std::unique_ptr<ScoringSession> ItemKnnModel::session() const {
    return std::make_unique<ColumnSumSession>(similarity_);
}

ItemKnnModel train_itemknn(const SparseInteractionMatrix& x, std::size_t k) {
    if (k < 1) throw ConfigError("ItemKNN requires k >= 1");
    const Eigen::Index n = x.n_cols();
    std::vector<double> norm2(static_cast<std::size_t>(n), 0.0);
    for (Eigen::Index j = 0; j < n; ++j)
        for (decltype(x.by_item)::InnerIterator it(x.by_item, j); it; ++it) norm2[j] += it.value() * it.value();

    std::vector<double> acc(static_cast<std::size_t>(n), 0.0);
    std::vector<char> touched(static_cast<std::size_t>(n), 0);
    std::vector<Eigen::Index> touched_list;
    std::vector<std::pair<double, Eigen::Index>> cand;
    std::vector<Eigen::Triplet<double>> triplets;

    for (Eigen::Index j = 0; j < n; ++j) {
        if (norm2[j] == 0.0) continue;
        // Column j of X'X: sum of rows of X for the users who touched item j.
        for (decltype(x.by_item)::InnerIterator uj(x.by_item, j); uj; ++uj) {
            for (decltype(x.by_user)::InnerIterator ui(x.by_user, uj.row()); ui; ++ui) {
                const auto i = ui.col();
                if (!touched[i]) {
                    touched[i] = 1;
                    touched_list.push_back(i);
                }
                acc[i] += uj.value() * ui.value();
            }
        }
        cand.clear();
        for (auto i : touched_list) {
            if (i != j && norm2[i] > 0.0 && acc[i] != 0.0) {
                double s = acc[i] / std::sqrt(norm2[i] * norm2[j]);
                cand.emplace_back(std::clamp(s, -1.0, 1.0), i);
            }
            acc[i] = 0.0;
            touched[i] = 0;
        }
        touched_list.clear();
        const std::size_t keep = std::min(k, cand.size());
        std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(keep), cand.end(),
                          [](const auto& a, const auto& b) {
                              if (a.first != b.first) return a.first > b.first;
                              return a.second < b.second;
                          });
        for (std::size_t c = 0; c < keep; ++c) triplets.emplace_back(cand[c].second, j, cand[c].first);
    }

    Eigen::SparseMatrix<double> s(n, n);
    s.setFromTriplets(triplets.begin(), triplets.end());
    return ItemKnnModel(std::move(s), k);
}

} // namespace coldwarm
