#pragma once

#include <istream>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/SparseCore>

#include "coldwarm/common.hpp"

namespace coldwarm {

/// Bijection between external keys and dense indices, in first-seen order.
class IdMap {
  public:
    /// Returns the dense id of `key`, assigning the next one if unseen.
    std::uint32_t intern(const std::string& key);
    std::optional<std::uint32_t> find(const std::string& key) const;
    const std::string& key(std::uint32_t id) const { return keys_.at(id); }
    std::size_t size() const { return keys_.size(); }
    const std::vector<std::string>& keys() const { return keys_; }

  private:
    std::vector<std::string> keys_;
    std::unordered_map<std::string, std::uint32_t> index_;
};

/// Event list plus the id space it lives in.
///
/// An ingested log owns maps with exactly the users/items that appear.
/// Logs derived from it (splits, subsamples) keep the parent's maps so ids
/// stay comparable, hence `n_users()`/`n_items()` report the id-space size
/// while `compute_stats` counts distinct ids actually present.
struct InteractionLog {
    std::vector<Event> events;
    std::shared_ptr<const IdMap> users;
    std::shared_ptr<const IdMap> items;

    std::size_t n_users() const { return users ? users->size() : 0; }
    std::size_t n_items() const { return items ? items->size() : 0; }

    /// Same id space, different events.
    InteractionLog with_events(std::vector<Event> ev) const { return {std::move(ev), users, items}; }
};

struct DatasetStats {
    std::size_t n_users = 0;
    std::size_t n_items = 0;
    std::size_t n_interactions = 0;
    double density = 0.0;
    double avg_user_interactions = 0.0;
    double avg_item_interactions = 0.0;
};

enum class MalformedPolicy { skip, abort };

/// Column mapping for delimited input. A column is addressed either by its
/// header name (requires `has_header`) or by a 0-based index.
struct ColumnRef {
    std::optional<std::string> name;
    std::optional<std::size_t> index;

    friend bool operator==(const ColumnRef&, const ColumnRef&) = default;
};

struct LogSchema {
    std::string delimiter = ",";
    bool has_header = true;
    ColumnRef user{"user", std::nullopt};
    ColumnRef item{"item", std::nullopt};
    ColumnRef timestamp{"timestamp", std::nullopt};
    std::optional<ColumnRef> weight;
    MalformedPolicy on_malformed = MalformedPolicy::skip;

    friend bool operator==(const LogSchema&, const LogSchema&) = default;
};

struct IngestReport {
    std::size_t rows_read = 0;
    std::size_t skipped = 0;
    /// 1-based line numbers of skipped rows (first 100 only).
    std::vector<std::size_t> skipped_lines;
};

InteractionLog ingest_log(std::istream& source, const LogSchema& schema, IngestReport* report = nullptr);
InteractionLog ingest_log_file(const std::string& path, const LogSchema& schema, IngestReport* report = nullptr);

/// Builds a log directly from (user key, item key, timestamp, weight) rows.
struct RawInteraction {
    std::string user_ref;
    std::string item_ref;
    Timestamp timestamp = 0;
    double weight = 1.0;
};
InteractionLog make_log(const std::vector<RawInteraction>& rows);

DatasetStats compute_stats(const InteractionLog& log);

/// Single-row CSV in the column order users,items,interactions,density,
/// avg_user_interactions,avg_item_interactions (with header line).
std::string stats_csv(const DatasetStats& stats);

/// Iteratively drops users with fewer than `p` interactions and items with
/// fewer than `p` distinct users until nothing changes. Ids are re-densified
/// in first-seen order of the survivors.
InteractionLog pcore_filter(const InteractionLog& log, std::size_t p);

enum class MatrixMode { binary, weighted };

/// User x item matrix kept in both row-major (user slices) and column-major
/// (item slices) layouts. One entry per (user, item) pair.
struct SparseInteractionMatrix {
    Eigen::SparseMatrix<double, Eigen::RowMajor> by_user;
    Eigen::SparseMatrix<double, Eigen::ColMajor> by_item;
    MatrixMode mode = MatrixMode::binary;

    Eigen::Index n_rows() const { return by_user.rows(); }
    Eigen::Index n_cols() const { return by_user.cols(); }
    Eigen::Index nnz() const { return by_user.nonZeros(); }
};

/// Duplicates: binary mode stores 1, weighted mode keeps the weight of the
/// chronologically latest event (stream position breaks timestamp ties).
SparseInteractionMatrix build_matrix(const InteractionLog& log, MatrixMode mode);

} // namespace coldwarm
