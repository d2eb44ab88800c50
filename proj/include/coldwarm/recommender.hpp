#pragma once

#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "coldwarm/data.hpp"

namespace coldwarm {

enum class ModelKind { ease, puresvd, itemknn, external };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

/// Incremental scorer used by successive evaluation: items are appended one
/// at a time and `scores()` reflects the whole history so far.
class ScoringSession {
  public:
    virtual ~ScoringSession() = default;
    virtual void add(ItemId item) = 0;
    virtual const std::vector<double>& scores() = 0;
};

/// A trained, immutable scorer over the item catalog. Implementations must be
/// safe to call concurrently from several threads.
class Recommender {
  public:
    virtual ~Recommender() = default;
    virtual ModelKind kind() const = 0;
    virtual std::size_t n_items() const = 0;

    /// Score vector of length n_items() for a history. Order matters only to
    /// sequential models; the built-in models treat it as an item set.
    virtual std::vector<double> score(std::span<const ItemId> history) const = 0;

    /// Default session re-scores the full history on every `scores()` call.
    virtual std::unique_ptr<ScoringSession> session() const;
};

struct TopK {
    std::vector<ItemId> items;
    bool short_list = false; // fewer than K candidates were available
};

/// Descending score, ties by ascending item id. With `filter_seen` the
/// history items are excluded before ranking.
TopK rank_topk(std::span<const double> scores, std::span<const ItemId> history, std::size_t k, bool filter_seen);
TopK recommend_topk(const Recommender& model, std::span<const ItemId> history, std::size_t k, bool filter_seen);

std::vector<ItemId> items_of(std::span<const Event> events);

// ---------------------------------------------------------------------------
// Built-in models

class EaseModel final : public Recommender {
  public:
    /// `weights` is n_items x n_items, row-major so that row j (the
    /// contribution of history item j) is contiguous.
    using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    EaseModel(Matrix weights, double lambda);

    ModelKind kind() const override { return ModelKind::ease; }
    std::size_t n_items() const override { return static_cast<std::size_t>(weights_.rows()); }
    std::vector<double> score(std::span<const ItemId> history) const override;
    std::unique_ptr<ScoringSession> session() const override;

    const Matrix& weights() const { return weights_; }
    double lambda() const { return lambda_; }

  private:
    Matrix weights_;
    double lambda_;
};

/// With G = X'X and P = (G + lambda I)^-1: B_ij = -P_ij / P_jj, B_jj = 0.
EaseModel train_ease(const SparseInteractionMatrix& x, double lambda);

struct SvdOptions {
    double tolerance = 1e-10; // on ||X'X v - theta v|| / theta_max
    int max_iterations = 2000;
    std::uint64_t seed = 17;
    /// Optional warm start (n_items x k, any k); its columns seed the block.
    const Eigen::MatrixXd* initial = nullptr;
};

class PureSvdModel final : public Recommender {
  public:
    PureSvdModel(Eigen::MatrixXd factors, Eigen::VectorXd singular_values, std::size_t requested_rank,
                 bool converged, int iterations);

    ModelKind kind() const override { return ModelKind::puresvd; }
    std::size_t n_items() const override { return static_cast<std::size_t>(factors_.rows()); }
    std::vector<double> score(std::span<const ItemId> history) const override;
    std::unique_ptr<ScoringSession> session() const override;

    /// n_items x effective_rank, orthonormal columns.
    const Eigen::MatrixXd& factors() const { return factors_; }
    const Eigen::VectorXd& singular_values() const { return singular_values_; }
    std::size_t requested_rank() const { return requested_rank_; }
    std::size_t effective_rank() const { return static_cast<std::size_t>(factors_.cols()); }
    bool converged() const { return converged_; }
    int iterations() const { return iterations_; }

  private:
    Eigen::MatrixXd factors_;
    Eigen::VectorXd singular_values_;
    std::size_t requested_rank_;
    bool converged_;
    int iterations_;
};

/// Top-`rank` right singular vectors of X via block subspace iteration on
/// X'X with Rayleigh-Ritz extraction. Components with numerically zero
/// singular values are dropped (see effective_rank()).
PureSvdModel train_puresvd(const SparseInteractionMatrix& x, std::size_t rank, const SvdOptions& options = {});

class ItemKnnModel final : public Recommender {
  public:
    /// Column j holds the retained neighbours of item j.
    ItemKnnModel(Eigen::SparseMatrix<double> similarity, std::size_t neighbors);

    ModelKind kind() const override { return ModelKind::itemknn; }
    std::size_t n_items() const override { return static_cast<std::size_t>(similarity_.cols()); }
    std::vector<double> score(std::span<const ItemId> history) const override;
    std::unique_ptr<ScoringSession> session() const override;

    const Eigen::SparseMatrix<double>& similarity() const { return similarity_; }
    std::size_t neighbors() const { return neighbors_; }

  private:
    Eigen::SparseMatrix<double> similarity_;
    std::size_t neighbors_;
};

/// Cosine similarity between item columns, self-similarity excluded, each
/// column truncated to its `k` largest nonzero entries (ties: lower id).
ItemKnnModel train_itemknn(const SparseInteractionMatrix& x, std::size_t k);

// ---------------------------------------------------------------------------
// Trainers and tuning

/// Hyperparameters by name: "lambda" (EASE), "rank" (PureSVD), "k" (ItemKNN).
using HyperParams = std::map<std::string, double>;

struct TrainContext {
    /// Warm-start factors for PureSVD retrains; ignored by other models.
    const Eigen::MatrixXd* svd_warm_start = nullptr;
};

using Trainer = std::function<std::unique_ptr<Recommender>(const SparseInteractionMatrix&, const HyperParams&,
                                                           const TrainContext&)>;

Trainer make_trainer(ModelKind kind, const SvdOptions& svd = {});

/// Default search grids per model kind.
std::vector<HyperParams> default_grid(ModelKind kind);

std::string describe(const HyperParams& params);

struct GlobalTimepointSplit;

struct TuningTrial {
    HyperParams params;
    double ndcg10 = 0.0;
    bool failed = false;
    std::string error;
};

struct TuningResult {
    HyperParams chosen;
    double validation_ndcg10 = 0.0;
    std::vector<TuningTrial> trials;
};

/// Validation NDCG@10 of a model over the split's validation pairs.
double validation_ndcg10(const Recommender& model, const GlobalTimepointSplit& split, bool filter_seen);

/// Samples `budget` grid points uniformly without replacement (the whole
/// grid if smaller), trains each on the split's train set and keeps the
/// argmax of validation NDCG@10 (earliest trial wins ties).
TuningResult tune_random_search(const Trainer& trainer, const std::vector<HyperParams>& grid,
                                const GlobalTimepointSplit& split, std::size_t budget, std::uint64_t seed,
                                MatrixMode mode = MatrixMode::binary, bool filter_seen = true);

// ---------------------------------------------------------------------------
// Serialization: versioned little-endian binary.

void save_model(const Recommender& model, const std::string& path);
std::unique_ptr<Recommender> load_model(const std::string& path);

} // namespace coldwarm
