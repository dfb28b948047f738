#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "batchwise/types.hpp"

namespace batchwise {

enum class Strategy { Random, Similar, Diverse };

std::string to_string(Strategy strategy);
Strategy strategy_from_string(std::string_view name);

/// A partition of sample ids into ordered batches. Every batch has size b
/// except possibly the last, which holds the remainder when N mod b != 0.
struct Grouping {
    std::vector<std::vector<std::string>> batches;
    Strategy strategy = Strategy::Random;
    std::uint64_t seed = 0;
};

/// One L2-normalized embedding row per sample id.
struct EmbeddingMatrix {
    std::vector<std::string> ids;
    std::vector<std::vector<double>> rows;

    std::size_t size() const { return ids.size(); }
    std::size_t dim() const { return rows.empty() ? 0 : rows.front().size(); }
};

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual EmbeddingMatrix embed(const std::vector<Sample>& samples) const = 0;
};

/// Default offline embedder: TF-IDF over lowercased alphanumeric tokens of a
/// sample's concatenated context texts. tf is the raw term count,
/// idf = ln((1+N)/(1+df)) + 1 (never zero, so rows always normalize),
/// rows are L2-normalized. Throws DegenerateTextError for a sample whose
/// context yields no tokens.
class TfidfEmbedder : public Embedder {
public:
    EmbeddingMatrix embed(const std::vector<Sample>& samples) const override;
};

struct DiverseParams {
    int k_nn = 0;       // 0 picks the default min(10, N-1)
    double rho = 10.0;  // vote discount base
};

/// Seeded shuffle, then consecutive chunks of b.
Grouping group_random(const std::vector<std::string>& ids, int b, std::uint64_t seed);

/// Balanced k-means: k = ceil(N/b) clusters (k-means++ seeding, Euclidean
/// distance, at most 100 iterations, centroid-shift tolerance 1e-6), then a
/// repair pass that moves the member farthest from its centroid out of any
/// over-capacity cluster into the nearest cluster with room, until every
/// batch has size b (the designated remainder batch, emitted last, has size
/// N mod b). Deterministic given the seed; ties break on the smallest id.
Grouping group_similar(const EmbeddingMatrix& vectors, int b, std::uint64_t seed);

/// Vote-k style selection: builds k_nn-nearest-neighbor lists under cosine
/// similarity, then fills batches by repeatedly picking the unassigned
/// candidate u maximizing sum over unassigned v with u in kNN(v) of
/// rho^-(|selected so far ∩ kNN(v)|). Fully deterministic; ties break on the
/// smallest id.
Grouping group_diverse(const EmbeddingMatrix& vectors, int b, const DiverseParams& params = {});

/// Loads pre-computed embeddings from JSONL {"id": str, "vector": [num, ...]};
/// rows are L2-normalized on load.
EmbeddingMatrix load_embeddings(const std::string& path);

} // namespace batchwise
