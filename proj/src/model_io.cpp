#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "coldwarm/recommender.hpp"

namespace coldwarm {

static_assert(std::endian::native == std::endian::little, "model files are little-endian");

namespace {

constexpr std::array<char, 8> kMagic{'C', 'W', 'M', 'O', 'D', 'E', 'L', '\0'};
constexpr std::uint32_t kVersion = 1;

template <class T> void put(std::ostream& os, const T& v) { os.write(reinterpret_cast<const char*>(&v), sizeof(T)); }

template <class T> T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw DataError("truncated model file");
    return v;
}

void put_block(std::ostream& os, const double* data, std::size_t n) {
    os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
}

template <class T> void get_block(std::istream& is, T* data, std::size_t n) {
    is.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(T)));
    if (!is) throw DataError("truncated model file");
}

} // namespace

void save_model(const Recommender& model, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write model file " + path);
    os.write(kMagic.data(), kMagic.size());
    put(os, kVersion);
    put(os, static_cast<std::uint32_t>(model.kind()));

    if (const auto* ease = dynamic_cast<const EaseModel*>(&model)) {
        put(os, ease->lambda());
        put(os, static_cast<std::uint64_t>(ease->n_items()));
        put_block(os, ease->weights().data(), static_cast<std::size_t>(ease->weights().size()));
    } else if (const auto* svd = dynamic_cast<const PureSvdModel*>(&model)) {
        put(os, static_cast<std::uint64_t>(svd->n_items()));
        put(os, static_cast<std::uint64_t>(svd->effective_rank()));
        put(os, static_cast<std::uint64_t>(svd->requested_rank()));
        put(os, static_cast<std::uint8_t>(svd->converged()));
        put(os, static_cast<std::int32_t>(svd->iterations()));
        put_block(os, svd->singular_values().data(), svd->effective_rank());
        put_block(os, svd->factors().data(), static_cast<std::size_t>(svd->factors().size()));
    } else if (const auto* knn = dynamic_cast<const ItemKnnModel*>(&model)) {
        const auto& s = knn->similarity();
        put(os, static_cast<std::uint64_t>(knn->n_items()));
        put(os, static_cast<std::uint64_t>(knn->neighbors()));
        put(os, static_cast<std::uint64_t>(s.nonZeros()));
        for (Eigen::Index c = 0; c <= s.outerSize(); ++c) put(os, static_cast<std::int64_t>(s.outerIndexPtr()[c]));
        for (Eigen::Index k = 0; k < s.nonZeros(); ++k) put(os, static_cast<std::int32_t>(s.innerIndexPtr()[k]));
        put_block(os, s.valuePtr(), static_cast<std::size_t>(s.nonZeros()));
    } else {
        throw ConfigError("only built-in models can be serialized");
    }
    if (!os) throw DataError("failed writing model file " + path);
}

std::unique_ptr<Recommender> load_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open model file " + path);
    std::array<char, 8> magic{};
    is.read(magic.data(), magic.size());
    if (!is || magic != kMagic) throw DataError("not a coldwarm model file: " + path);
    if (get<std::uint32_t>(is) != kVersion) throw DataError("unsupported model file version");
    const auto kind = static_cast<ModelKind>(get<std::uint32_t>(is));

    switch (kind) {
    case ModelKind::ease: {
        const auto lambda = get<double>(is);
        const auto n = static_cast<Eigen::Index>(get<std::uint64_t>(is));
        EaseModel::Matrix w(n, n);
        get_block(is, w.data(), static_cast<std::size_t>(w.size()));
        return std::make_unique<EaseModel>(std::move(w), lambda);
    }
    case ModelKind::puresvd: {
        const auto n = static_cast<Eigen::Index>(get<std::uint64_t>(is));
        const auto r = static_cast<Eigen::Index>(get<std::uint64_t>(is));
        const auto requested = static_cast<std::size_t>(get<std::uint64_t>(is));
        const bool converged = get<std::uint8_t>(is) != 0;
        const auto iters = get<std::int32_t>(is);
        Eigen::VectorXd sv(r);
        get_block(is, sv.data(), static_cast<std::size_t>(r));
        Eigen::MatrixXd v(n, r);
        get_block(is, v.data(), static_cast<std::size_t>(v.size()));
        return std::make_unique<PureSvdModel>(std::move(v), std::move(sv), requested, converged, iters);
    }
    case ModelKind::itemknn: {
        const auto n = static_cast<Eigen::Index>(get<std::uint64_t>(is));
        const auto k = static_cast<std::size_t>(get<std::uint64_t>(is));
        const auto nnz = static_cast<Eigen::Index>(get<std::uint64_t>(is));
        std::vector<std::int64_t> outer(static_cast<std::size_t>(n) + 1);
        get_block(is, outer.data(), outer.size());
        std::vector<std::int32_t> inner(static_cast<std::size_t>(nnz));
        get_block(is, inner.data(), inner.size());
        std::vector<double> values(static_cast<std::size_t>(nnz));
        get_block(is, values.data(), values.size());
        std::vector<Eigen::Triplet<double>> t;
        t.reserve(values.size());
        for (Eigen::Index c = 0; c < n; ++c)
            for (auto p = outer[c]; p < outer[c + 1]; ++p) t.emplace_back(inner[p], c, values[p]);
        Eigen::SparseMatrix<double> s(n, n);
        s.setFromTriplets(t.begin(), t.end());
        return std::make_unique<ItemKnnModel>(std::move(s), k);
    }
    default: throw DataError("unknown model kind in file");
    }
}

} // namespace coldwarm
