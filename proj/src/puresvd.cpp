#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>

#include "coldwarm/random.hpp"
#include "coldwarm/recommender.hpp"

namespace coldwarm {

namespace {

class LatentSession final : public ScoringSession {
  public:
    explicit LatentSession(const Eigen::MatrixXd& factors)
        : factors_(factors), latent_(Eigen::VectorXd::Zero(factors.cols())),
          scores_(static_cast<std::size_t>(factors.rows()), 0.0), seen_(static_cast<std::size_t>(factors.rows()), 0) {}

    void add(ItemId item) override {
        if (seen_.at(item)) return;
        seen_[item] = 1;
        latent_ += factors_.row(item).transpose();
        dirty_ = true;
    }
    const std::vector<double>& scores() override {
        if (dirty_) {
            Eigen::Map<Eigen::VectorXd>(scores_.data(), factors_.rows()).noalias() = factors_ * latent_;
            dirty_ = false;
        }
        return scores_;
    }

  private:
    const Eigen::MatrixXd& factors_;
    Eigen::VectorXd latent_;
    std::vector<double> scores_;
    std::vector<char> seen_;
    bool dirty_ = false;
};

Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& m) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    return qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), m.cols());
}

// Sign convention: the largest-magnitude entry of each vector is positive.
void fix_signs(Eigen::MatrixXd& v) {
    for (Eigen::Index c = 0; c < v.cols(); ++c) {
        Eigen::Index arg = 0;
        v.col(c).cwiseAbs().maxCoeff(&arg);
        if (v(arg, c) < 0) v.col(c) = -v.col(c);
    }
}

} // namespace

PureSvdModel::PureSvdModel(Eigen::MatrixXd factors, Eigen::VectorXd singular_values, std::size_t requested_rank,
                           bool converged, int iterations)
    : factors_(std::move(factors)), singular_values_(std::move(singular_values)), requested_rank_(requested_rank),
      converged_(converged), iterations_(iterations) {
    if (singular_values_.size() != factors_.cols()) throw DataError("PureSVD: factor/singular value mismatch");
}

std::vector<double> PureSvdModel::score(std::span<const ItemId> history) const {
    LatentSession s(factors_);
    for (auto i : history) s.add(i);
    return s.scores();
}

std::unique_ptr<ScoringSession> PureSvdModel::session() const { return std::make_unique<LatentSession>(factors_); }

PureSvdModel train_puresvd(const SparseInteractionMatrix& x, std::size_t rank, const SvdOptions& options) {
    const auto n = static_cast<std::size_t>(x.n_cols());
    const auto m = static_cast<std::size_t>(x.n_rows());
    if (rank < 1 || rank > std::min(n, m))
        throw ConfigError("PureSVD rank must satisfy 1 <= rank <= min(n_users, n_items)");

    const std::size_t block = std::min(n, rank + std::max<std::size_t>(10, rank / 2));
    const auto b = static_cast<Eigen::Index>(block);
    const auto nn = static_cast<Eigen::Index>(n);

    Rng rng(options.seed);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd start(nn, b);
    for (Eigen::Index c = 0; c < b; ++c)
        for (Eigen::Index r = 0; r < nn; ++r) start(r, c) = normal(rng);
    if (options.initial && options.initial->rows() == nn) {
        const auto k = std::min(b, options.initial->cols());
        start.leftCols(k) = options.initial->leftCols(k);
    }
    Eigen::MatrixXd q = orthonormalize(start);

    Eigen::VectorXd theta;
    Eigen::MatrixXd ritz;
    bool converged = false;
    int it = 0;
    while (it < options.max_iterations) {
        ++it;
        Eigen::MatrixXd xq = x.by_user * q;        // users x block
        Eigen::MatrixXd z = x.by_item.transpose() * xq; // items x block = X'X Q
        Eigen::MatrixXd h = xq.transpose() * xq;   // Q' X'X Q
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
        if (eig.info() != Eigen::Success) throw RunFailure("PureSVD: Rayleigh-Ritz eigensolver failed");
        // Descending order.
        theta = eig.eigenvalues().reverse();
        Eigen::MatrixXd w = eig.eigenvectors().rowwise().reverse();
        ritz = q * w;
        Eigen::MatrixXd az = z * w;

        const double top = std::max(theta(0), 0.0);
        double worst = 0.0;
        for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(rank); ++c)
            worst = std::max(worst, (az.col(c) - theta(c) * ritz.col(c)).norm());
        if (top == 0.0 || worst <= options.tolerance * top) {
            converged = true;
            break;
        }
        q = orthonormalize(az);
    }

    const double top = theta.size() ? std::max(theta(0), 0.0) : 0.0;
    Eigen::Index effective = 0;
    while (effective < static_cast<Eigen::Index>(rank) && top > 0.0 && theta(effective) > 1e-12 * top) ++effective;

    Eigen::MatrixXd factors = ritz.leftCols(effective);
    fix_signs(factors);
    Eigen::VectorXd sv = theta.head(effective).cwiseMax(0.0).cwiseSqrt();
    return PureSvdModel(std::move(factors), std::move(sv), rank, converged, it);
}

} // namespace coldwarm
