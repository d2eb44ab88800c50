#include <Eigen/Cholesky>

#include "coldwarm/recommender.hpp"

namespace coldwarm {

namespace {

class LinearRowSession final : public ScoringSession {
  public:
    explicit LinearRowSession(const EaseModel::Matrix& weights)
        : weights_(weights), scores_(static_cast<std::size_t>(weights.cols()), 0.0),
          seen_(static_cast<std::size_t>(weights.rows()), 0) {}

    void add(ItemId item) override {
        if (seen_.at(item)) return;
        seen_[item] = 1;
        Eigen::Map<Eigen::RowVectorXd>(scores_.data(), weights_.cols()) += weights_.row(item);
    }
    const std::vector<double>& scores() override { return scores_; }

  private:
    const EaseModel::Matrix& weights_;
    std::vector<double> scores_;
    std::vector<char> seen_;
};

} // namespace

EaseModel::EaseModel(Matrix weights, double lambda) : weights_(std::move(weights)), lambda_(lambda) {
    if (weights_.rows() != weights_.cols()) throw DataError("EASE weight matrix must be square");
}

std::vector<double> EaseModel::score(std::span<const ItemId> history) const {
    LinearRowSession s(weights_);
    for (auto i : history) s.add(i);
    return s.scores();
}

std::unique_ptr<ScoringSession> EaseModel::session() const { return std::make_unique<LinearRowSession>(weights_); }

EaseModel train_ease(const SparseInteractionMatrix& x, double lambda) {
    if (!(lambda > 0.0)) throw ConfigError("EASE requires lambda > 0");
    const Eigen::Index n = x.n_cols();

    // Gram matrix accumulated user by user (lower triangle, then mirrored).
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index u = 0; u < x.by_user.outerSize(); ++u) {
        const auto* idx = x.by_user.innerIndexPtr() + x.by_user.outerIndexPtr()[u];
        const auto* val = x.by_user.valuePtr() + x.by_user.outerIndexPtr()[u];
        const auto len = x.by_user.outerIndexPtr()[u + 1] - x.by_user.outerIndexPtr()[u];
        for (Eigen::Index a = 0; a < len; ++a)
            for (Eigen::Index b = 0; b <= a; ++b) gram(idx[a], idx[b]) += val[a] * val[b];
    }
    gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
    gram.diagonal().array() += lambda;

    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) throw RunFailure("EASE: Cholesky factorization failed");
    Eigen::MatrixXd p = llt.solve(Eigen::MatrixXd::Identity(n, n));
    if (!p.allFinite()) throw RunFailure("EASE: non-finite inverse");

    EaseModel::Matrix b(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double pjj = p(j, j);
        b.col(j) = -p.col(j) / pjj;
        b(j, j) = 0.0;
    }
    return EaseModel(std::move(b), lambda);
}

} // namespace coldwarm
