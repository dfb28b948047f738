#include "batchwise/grouping.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include "batchwise/errors.hpp"
#include "batchwise/jsonl.hpp"
#include "batchwise/rng.hpp"

namespace batchwise {

namespace {

constexpr double kCentroidShiftTolerance = 1e-6;
constexpr int kMaxKMeansIterations = 100;

std::vector<std::vector<std::string>> chunk(const std::vector<std::string>& ids, int b) {
    std::vector<std::vector<std::string>> batches;
    for (std::size_t start = 0; start < ids.size(); start += static_cast<std::size_t>(b)) {
        const std::size_t end = std::min(ids.size(), start + static_cast<std::size_t>(b));
        batches.emplace_back(ids.begin() + static_cast<std::ptrdiff_t>(start),
                             ids.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
}

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return sum;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

void check_matrix(const EmbeddingMatrix& m) {
    if (m.ids.size() != m.rows.size()) {
        throw InvalidEmbeddingError("embedding matrix has " + std::to_string(m.ids.size()) +
                                    " ids but " + std::to_string(m.rows.size()) + " rows");
    }
    const std::size_t dim = m.dim();
    for (std::size_t i = 0; i < m.rows.size(); ++i) {
        if (m.rows[i].size() != dim) {
            throw InvalidEmbeddingError("row for '" + m.ids[i] + "' has dimension " +
                                        std::to_string(m.rows[i].size()) + ", expected " +
                                        std::to_string(dim));
        }
        double norm2 = 0.0;
        for (double v : m.rows[i]) {
            if (!std::isfinite(v)) {
                throw InvalidEmbeddingError("row for '" + m.ids[i] + "' has a non-finite entry");
            }
            norm2 += v * v;
        }
        if (std::abs(std::sqrt(norm2) - 1.0) > 1e-6) {
            throw InvalidEmbeddingError("row for '" + m.ids[i] + "' is not unit-normalized");
        }
    }
}

struct KMeansState {
    std::vector<std::vector<double>> centroids;
    std::vector<int> assignment;
};

int nearest_centroid(const std::vector<double>& row,
                     const std::vector<std::vector<double>>& centroids) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        const double d = squared_distance(row, centroids[c]);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(c);
        }
    }
    return best;
}

KMeansState run_kmeans(const std::vector<std::vector<double>>& rows, int k, SplitMix64& rng) {
    const std::size_t n = rows.size();
    KMeansState state;
    state.centroids.reserve(static_cast<std::size_t>(k));

    // k-means++ seeding: D^2-weighted picks after a uniform first choice.
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    state.centroids.push_back(rows[rng.below(n)]);
    while (state.centroids.size() < static_cast<std::size_t>(k)) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], squared_distance(rows[i], state.centroids.back()));
            total += d2[i];
        }
        std::size_t pick;
        if (total <= 0.0) {
            pick = rng.below(n);
        } else {
            const double target = rng.unit() * total;
            double cumulative = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                cumulative += d2[i];
                if (cumulative >= target) {
                    pick = i;
                    break;
                }
            }
        }
        state.centroids.push_back(rows[pick]);
    }

    state.assignment.assign(n, 0);
    const std::size_t dim = rows.front().size();
    for (int iteration = 0; iteration < kMaxKMeansIterations; ++iteration) {
        for (std::size_t i = 0; i < n; ++i) {
            state.assignment[i] = nearest_centroid(rows[i], state.centroids);
        }

        std::vector<std::vector<double>> sums(static_cast<std::size_t>(k),
                                              std::vector<double>(dim, 0.0));
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = static_cast<std::size_t>(state.assignment[i]);
            for (std::size_t j = 0; j < dim; ++j) sums[c][j] += rows[i][j];
            ++counts[c];
        }

        // Re-seed any empty cluster with the point farthest from its centroid.
        std::vector<bool> claimed(n, false);
        for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
            if (counts[c] != 0) continue;
            std::size_t farthest = 0;
            double farthest_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (claimed[i]) continue;
                const double d = squared_distance(
                    rows[i], state.centroids[static_cast<std::size_t>(state.assignment[i])]);
                if (d > farthest_d) {
                    farthest_d = d;
                    farthest = i;
                }
            }
            claimed[farthest] = true;
            sums[c] = rows[farthest];
            counts[c] = 1;
        }

        double max_shift2 = 0.0;
        for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
            std::vector<double> updated(dim, 0.0);
            for (std::size_t j = 0; j < dim; ++j) updated[j] = sums[c][j] / counts[c];
            max_shift2 = std::max(max_shift2, squared_distance(updated, state.centroids[c]));
            state.centroids[c] = std::move(updated);
        }
        if (max_shift2 <= kCentroidShiftTolerance * kCentroidShiftTolerance) break;
    }

    for (std::size_t i = 0; i < n; ++i) {
        state.assignment[i] = nearest_centroid(rows[i], state.centroids);
    }
    return state;
}

} // namespace

std::string to_string(Strategy strategy) {
    switch (strategy) {
        case Strategy::Random: return "random";
        case Strategy::Similar: return "similar";
        case Strategy::Diverse: return "diverse";
    }
    return "random";
}

Strategy strategy_from_string(std::string_view name) {
    if (name == "random") return Strategy::Random;
    if (name == "similar") return Strategy::Similar;
    if (name == "diverse") return Strategy::Diverse;
    throw ParameterError("unknown grouping strategy '" + std::string(name) + "'");
}

Grouping group_random(const std::vector<std::string>& ids, int b, std::uint64_t seed) {
    if (ids.empty()) throw ParameterError("cannot group an empty id list");
    if (b < 1) throw ParameterError("batch size must be >= 1, got " + std::to_string(b));

    std::vector<std::string> shuffled = ids;
    SplitMix64 rng(seed);
    rng.shuffle(shuffled);
    return {chunk(shuffled, b), Strategy::Random, seed};
}

EmbeddingMatrix TfidfEmbedder::embed(const std::vector<Sample>& samples) const {
    const std::size_t n = samples.size();

    std::vector<std::map<std::string, int>> term_counts(n);
    std::map<std::string, int> document_frequency;
    for (std::size_t i = 0; i < n; ++i) {
        std::string token;
        auto flush = [&] {
            if (token.empty()) return;
            if (term_counts[i][token]++ == 0) ++document_frequency[token];
            token.clear();
        };
        for (const auto& field : samples[i].context) {
            for (char c : field.text) {
                if (std::isalnum(static_cast<unsigned char>(c))) {
                    token += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
                } else {
                    flush();
                }
            }
            flush();
        }
        if (term_counts[i].empty()) {
            throw DegenerateTextError("sample '" + samples[i].id +
                                      "' tokenizes to zero terms");
        }
    }

    std::unordered_map<std::string, std::size_t> vocabulary;  // term -> dimension
    vocabulary.reserve(document_frequency.size());
    std::vector<double> idf;
    idf.reserve(document_frequency.size());
    for (const auto& [term, df] : document_frequency) {
        vocabulary.emplace(term, vocabulary.size());
        idf.push_back(std::log((1.0 + static_cast<double>(n)) / (1.0 + df)) + 1.0);
    }

    EmbeddingMatrix matrix;
    matrix.ids.reserve(n);
    matrix.rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row(vocabulary.size(), 0.0);
        for (const auto& [term, count] : term_counts[i]) {
            const std::size_t dim = vocabulary.at(term);
            row[dim] = count * idf[dim];
        }
        double norm = std::sqrt(dot(row, row));
        for (double& v : row) v /= norm;
        matrix.ids.push_back(samples[i].id);
        matrix.rows.push_back(std::move(row));
    }
    return matrix;
}

Grouping group_similar(const EmbeddingMatrix& vectors, int b, std::uint64_t seed) {
    check_matrix(vectors);
    if (b < 1) throw ParameterError("batch size must be >= 1, got " + std::to_string(b));
    const std::size_t n = vectors.size();
    if (n < static_cast<std::size_t>(b)) {
        throw ParameterError("need at least " + std::to_string(b) + " samples, got " +
                             std::to_string(n));
    }

    const int k = static_cast<int>((n + static_cast<std::size_t>(b) - 1) / b);
    if (k == 1) {
        return {{vectors.ids}, Strategy::Similar, seed};
    }

    SplitMix64 rng(seed);
    KMeansState state = run_kmeans(vectors.rows, k, rng);

    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < n; ++i) {
        members[static_cast<std::size_t>(state.assignment[i])].push_back(i);
    }

    // Per-cluster capacities enforce the size law directly: one designated
    // remainder cluster (the smallest; lowest index on ties) holds N mod b,
    // every other cluster exactly b.
    const int remainder = static_cast<int>(n % static_cast<std::size_t>(b));
    std::vector<std::size_t> capacity(static_cast<std::size_t>(k), static_cast<std::size_t>(b));
    int remainder_cluster = -1;
    if (remainder != 0) {
        std::size_t smallest = 0;
        for (std::size_t c = 1; c < members.size(); ++c) {
            if (members[c].size() < members[smallest].size()) smallest = c;
        }
        remainder_cluster = static_cast<int>(smallest);
        capacity[smallest] = static_cast<std::size_t>(remainder);
    }

    // Repair: move the farthest-from-centroid member of any over-capacity
    // cluster to the nearest cluster with room. Each move shrinks the total
    // overflow by one, so this ends after at most N moves.
    while (true) {
        int source = -1;
        std::size_t victim_pos = 0;
        double victim_d = -1.0;
        const std::string* victim_id = nullptr;
        for (std::size_t c = 0; c < members.size(); ++c) {
            if (members[c].size() <= capacity[c]) continue;
            for (std::size_t pos = 0; pos < members[c].size(); ++pos) {
                const std::size_t point = members[c][pos];
                const double d = squared_distance(vectors.rows[point], state.centroids[c]);
                const std::string& id = vectors.ids[point];
                if (source == -1 || d > victim_d ||
                    (d == victim_d && id < *victim_id)) {
                    source = static_cast<int>(c);
                    victim_pos = pos;
                    victim_d = d;
                    victim_id = &id;
                }
            }
        }
        if (source == -1) break;

        const std::size_t point = members[static_cast<std::size_t>(source)][victim_pos];
        int target = -1;
        double target_d = 0.0;
        for (std::size_t c = 0; c < members.size(); ++c) {
            if (static_cast<int>(c) == source || members[c].size() >= capacity[c]) continue;
            const double d = squared_distance(vectors.rows[point], state.centroids[c]);
            if (target == -1 || d < target_d) {
                target = static_cast<int>(c);
                target_d = d;
            }
        }
        members[static_cast<std::size_t>(source)].erase(
            members[static_cast<std::size_t>(source)].begin() +
            static_cast<std::ptrdiff_t>(victim_pos));
        members[static_cast<std::size_t>(target)].push_back(point);
    }

    Grouping grouping;
    grouping.strategy = Strategy::Similar;
    grouping.seed = seed;
    auto emit = [&](std::size_t c) {
        std::sort(members[c].begin(), members[c].end());  // dataset order within a batch
        std::vector<std::string> batch;
        batch.reserve(members[c].size());
        for (std::size_t point : members[c]) batch.push_back(vectors.ids[point]);
        grouping.batches.push_back(std::move(batch));
    };
    for (std::size_t c = 0; c < members.size(); ++c) {
        if (static_cast<int>(c) != remainder_cluster) emit(c);
    }
    if (remainder_cluster >= 0) emit(static_cast<std::size_t>(remainder_cluster));
    return grouping;
}

Grouping group_diverse(const EmbeddingMatrix& vectors, int b, const DiverseParams& params) {
    check_matrix(vectors);
    if (b < 1) throw ParameterError("batch size must be >= 1, got " + std::to_string(b));
    const std::size_t n = vectors.size();
    if (n < static_cast<std::size_t>(b)) {
        throw ParameterError("need at least " + std::to_string(b) + " samples, got " +
                             std::to_string(n));
    }
    const int k_nn = params.k_nn == 0 ? static_cast<int>(std::min<std::size_t>(10, n - 1))
                                      : params.k_nn;
    if (k_nn < 0 || static_cast<std::size_t>(k_nn) >= n) {
        throw ParameterError("k_nn must lie in [0, N-1], got " + std::to_string(params.k_nn));
    }
    if (!(params.rho > 0.0)) throw ParameterError("rho must be positive");

    // kNN lists under cosine similarity; ties break on the smaller id.
    std::vector<std::vector<std::size_t>> knn(n);
    std::vector<std::vector<std::size_t>> voters(n);  // voters[u]: all v with u in kNN(v)
    for (std::size_t v = 0; v < n; ++v) {
        std::vector<std::size_t> order;
        order.reserve(n - 1);
        for (std::size_t u = 0; u < n; ++u) {
            if (u != v) order.push_back(u);
        }
        std::vector<double> sim(n, 0.0);
        for (std::size_t u : order) sim[u] = dot(vectors.rows[v], vectors.rows[u]);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) {
            if (sim[a] != sim[c]) return sim[a] > sim[c];
            return vectors.ids[a] < vectors.ids[c];
        });
        order.resize(static_cast<std::size_t>(k_nn));
        for (std::size_t u : order) voters[u].push_back(v);
        knn[v] = std::move(order);
    }

    std::vector<int> selected_overlap(n, 0);  // |selected so far ∩ kNN(v)|
    std::vector<bool> assigned(n, false);

    Grouping grouping;
    grouping.strategy = Strategy::Diverse;
    grouping.seed = 0;
    std::size_t remaining = n;
    while (remaining > 0) {
        std::vector<std::string> batch;
        const std::size_t take = std::min(remaining, static_cast<std::size_t>(b));
        for (std::size_t pick = 0; pick < take; ++pick) {
            std::size_t best = n;
            double best_score = 0.0;
            for (std::size_t u = 0; u < n; ++u) {
                if (assigned[u]) continue;
                double score = 0.0;
                for (std::size_t v : voters[u]) {
                    if (assigned[v]) continue;
                    score += std::pow(params.rho, -selected_overlap[v]);
                }
                if (best == n || score > best_score ||
                    (score == best_score && vectors.ids[u] < vectors.ids[best])) {
                    best = u;
                    best_score = score;
                }
            }
            assigned[best] = true;
            for (std::size_t v : voters[best]) ++selected_overlap[v];
            batch.push_back(vectors.ids[best]);
        }
        remaining -= take;
        grouping.batches.push_back(std::move(batch));
    }
    return grouping;
}

EmbeddingMatrix load_embeddings(const std::string& path) {
    EmbeddingMatrix matrix;
    std::unordered_set<std::string> seen;
    for_each_jsonl_line(path, [&](int line, const nlohmann::json& record) {
        try {
            std::string id = record.at("id").get<std::string>();
            if (!seen.insert(id).second) {
                throw DuplicateIdError(path + ":" + std::to_string(line) + ": duplicate id '" +
                                       id + "'");
            }
            std::vector<double> row = record.at("vector").get<std::vector<double>>();
            double norm2 = 0.0;
            for (double v : row) {
                if (!std::isfinite(v)) {
                    throw InvalidEmbeddingError(path + ":" + std::to_string(line) +
                                                ": non-finite vector entry for '" + id + "'");
                }
                norm2 += v * v;
            }
            if (norm2 <= 0.0) {
                throw InvalidEmbeddingError(path + ":" + std::to_string(line) +
                                            ": zero vector for '" + id + "'");
            }
            const double norm = std::sqrt(norm2);
            for (double& v : row) v /= norm;
            if (!matrix.rows.empty() && row.size() != matrix.dim()) {
                throw InvalidEmbeddingError(path + ":" + std::to_string(line) +
                                            ": vector dimension mismatch for '" + id + "'");
            }
            matrix.ids.push_back(std::move(id));
            matrix.rows.push_back(std::move(row));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path + ":" + std::to_string(line) + ": " + e.what());
        }
    });
    return matrix;
}

} // namespace batchwise
