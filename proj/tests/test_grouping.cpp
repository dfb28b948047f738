#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>

#include "batchwise/errors.hpp"
#include "batchwise/grouping.hpp"
#include "batchwise/rng.hpp"
#include "test_support.hpp"

using namespace batchwise;
using namespace batchwise::testing;

namespace {

std::vector<std::string> flatten(const Grouping& grouping) {
    std::vector<std::string> ids;
    for (const auto& batch : grouping.batches) {
        ids.insert(ids.end(), batch.begin(), batch.end());
    }
    return ids;
}

void check_partition_and_size_law(const Grouping& grouping, std::vector<std::string> ids, int b) {
    auto flat = flatten(grouping);
    CHECK(flat.size() == ids.size());
    std::sort(flat.begin(), flat.end());
    std::sort(ids.begin(), ids.end());
    CHECK(flat == ids);
    for (std::size_t i = 0; i + 1 < grouping.batches.size(); ++i) {
        CHECK(grouping.batches[i].size() == static_cast<std::size_t>(b));
    }
    if (!grouping.batches.empty()) {
        const std::size_t expected_last =
            ids.size() % b == 0 ? static_cast<std::size_t>(b) : ids.size() % b;
        CHECK(grouping.batches.back().size() == expected_last);
    }
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
    return dot;
}

// Random points on the unit sphere near one of `centers`.
EmbeddingMatrix synthetic_clouds(const std::vector<std::vector<double>>& centers,
                                 int per_cloud, double spread, SplitMix64& rng) {
    EmbeddingMatrix matrix;
    for (std::size_t c = 0; c < centers.size(); ++c) {
        for (int p = 0; p < per_cloud; ++p) {
            std::vector<double> row = centers[c];
            for (double& v : row) v += spread * (rng.unit() - 0.5);
            double norm = std::sqrt(cosine(row, row));
            for (double& v : row) v /= norm;
            matrix.ids.push_back("c" + std::to_string(c) + "_p" + std::to_string(p));
            matrix.rows.push_back(std::move(row));
        }
    }
    return matrix;
}

} // namespace

TEST_CASE("group_random") {
    SUBCASE("single chunk when N == b") {
        const Grouping grouping = group_random({"a", "b", "c", "d"}, 4, 9);
        REQUIRE(grouping.batches.size() == 1);
        CHECK(grouping.batches[0].size() == 4);
    }
    SUBCASE("remainder batch sizes") {
        const Grouping grouping =
            group_random({"a", "b", "c", "d", "e", "f", "g"}, 3, 1);
        REQUIRE(grouping.batches.size() == 3);
        CHECK(grouping.batches[0].size() == 3);
        CHECK(grouping.batches[1].size() == 3);
        CHECK(grouping.batches[2].size() == 1);
    }
    SUBCASE("determinism") {
        const std::vector<std::string> ids = {"a", "b", "c", "d", "e", "f", "g", "h"};
        const Grouping first = group_random(ids, 3, 123);
        const Grouping second = group_random(ids, 3, 123);
        CHECK(first.batches == second.batches);
        const Grouping other_seed = group_random(ids, 3, 124);
        CHECK(other_seed.batches != first.batches);  // overwhelmingly likely
    }
    SUBCASE("empty input rejected") {
        CHECK_THROWS_AS(group_random({}, 3, 0), ParameterError);
    }
}

TEST_CASE("tfidf embedder") {
    SUBCASE("identical texts get identical rows") {
        const std::vector<Sample> samples = {make_sample("a", "the quick brown fox", "1"),
                                             make_sample("b", "the quick brown fox", "1"),
                                             make_sample("c", "something else entirely", "1")};
        const EmbeddingMatrix matrix = TfidfEmbedder{}.embed(samples);
        CHECK(matrix.rows[0] == matrix.rows[1]);
        CHECK(cosine(matrix.rows[0], matrix.rows[1]) == doctest::Approx(1.0));
    }
    SUBCASE("disjoint vocabularies are orthogonal") {
        const std::vector<Sample> samples = {make_sample("a", "alpha beta gamma", "1"),
                                             make_sample("b", "delta epsilon zeta", "1")};
        const EmbeddingMatrix matrix = TfidfEmbedder{}.embed(samples);
        CHECK(cosine(matrix.rows[0], matrix.rows[1]) == doctest::Approx(0.0));
    }
    SUBCASE("rows match a hand-computed table on a fixed corpus") {
        // Corpus of 5 documents; expected weights computed from scratch here
        // with tf = count, idf = ln((1+N)/(1+df)) + 1, then L2 normalization.
        const std::vector<std::string> docs = {
            "sun moon sun", "moon river", "river stone river stone", "sun stone", "moon"};
        std::vector<Sample> samples;
        for (std::size_t i = 0; i < docs.size(); ++i) {
            samples.push_back(make_sample("d" + std::to_string(i), docs[i], "1"));
        }

        std::map<std::string, int> df;
        std::vector<std::map<std::string, int>> tf(docs.size());
        for (std::size_t i = 0; i < docs.size(); ++i) {
            std::string word;
            std::set<std::string> seen;
            for (char c : docs[i] + " ") {
                if (c == ' ') {
                    if (!word.empty()) {
                        ++tf[i][word];
                        if (seen.insert(word).second) ++df[word];
                        word.clear();
                    }
                } else {
                    word += c;
                }
            }
        }
        const EmbeddingMatrix matrix = TfidfEmbedder{}.embed(samples);
        REQUIRE(matrix.dim() == df.size());

        // Vocabulary dimensions are the sorted terms.
        std::vector<std::string> vocabulary;
        for (const auto& [term, unused] : df) vocabulary.push_back(term);

        for (std::size_t i = 0; i < docs.size(); ++i) {
            std::vector<double> expected(vocabulary.size(), 0.0);
            double norm2 = 0.0;
            for (std::size_t t = 0; t < vocabulary.size(); ++t) {
                const auto it = tf[i].find(vocabulary[t]);
                if (it == tf[i].end()) continue;
                const double idf =
                    std::log((1.0 + docs.size()) / (1.0 + df[vocabulary[t]])) + 1.0;
                expected[t] = it->second * idf;
                norm2 += expected[t] * expected[t];
            }
            for (std::size_t t = 0; t < vocabulary.size(); ++t) {
                expected[t] /= std::sqrt(norm2);
                CHECK(matrix.rows[i][t] == doctest::Approx(expected[t]).epsilon(1e-12));
            }
        }
    }
    SUBCASE("tokenization lowercases and splits on non-alphanumerics") {
        const std::vector<Sample> samples = {make_sample("a", "Hello, WORLD!", "1"),
                                             make_sample("b", "hello world", "1")};
        const EmbeddingMatrix matrix = TfidfEmbedder{}.embed(samples);
        CHECK(cosine(matrix.rows[0], matrix.rows[1]) == doctest::Approx(1.0));
    }
    SUBCASE("degenerate text is rejected") {
        const std::vector<Sample> samples = {make_sample("a", "!!! ...", "1")};
        CHECK_THROWS_AS(TfidfEmbedder{}.embed(samples), DegenerateTextError);
    }
}

TEST_CASE("group_similar keeps separated clouds intact") {
    SplitMix64 rng(7);
    std::vector<std::vector<double>> centers(4, std::vector<double>(8, 0.0));
    for (std::size_t c = 0; c < 4; ++c) centers[c][c * 2] = 1.0;
    const EmbeddingMatrix matrix = synthetic_clouds(centers, 6, 0.1, rng);

    const Grouping grouping = group_similar(matrix, 6, 42);
    check_partition_and_size_law(grouping, matrix.ids, 6);
    REQUIRE(grouping.batches.size() == 4);

    // Brute-force oracle: the true cloud of a point is its nearest center.
    std::map<std::string, int> truth;
    for (std::size_t i = 0; i < matrix.ids.size(); ++i) {
        int best = 0;
        double best_sim = -2.0;
        for (std::size_t c = 0; c < centers.size(); ++c) {
            const double sim = cosine(matrix.rows[i], centers[c]);
            if (sim > best_sim) {
                best_sim = sim;
                best = static_cast<int>(c);
            }
        }
        truth[matrix.ids[i]] = best;
    }
    for (const auto& batch : grouping.batches) {
        const int cloud = truth.at(batch.front());
        for (const auto& id : batch) CHECK(truth.at(id) == cloud);
    }
}

TEST_CASE("group_similar basics") {
    SUBCASE("N == b produces a single batch without clustering") {
        EmbeddingMatrix matrix;
        for (int i = 0; i < 5; ++i) {
            matrix.ids.push_back("p" + std::to_string(i));
            std::vector<double> row(3, 0.0);
            row[static_cast<std::size_t>(i) % 3] = 1.0;
            matrix.rows.push_back(std::move(row));
        }
        const Grouping grouping = group_similar(matrix, 5, 11);
        REQUIRE(grouping.batches.size() == 1);
        CHECK(grouping.batches[0] == matrix.ids);
    }
    SUBCASE("N < b rejected") {
        EmbeddingMatrix matrix;
        matrix.ids = {"a"};
        matrix.rows = {{1.0}};
        CHECK_THROWS_AS(group_similar(matrix, 2, 0), ParameterError);
    }
    SUBCASE("non-normalized rows rejected") {
        EmbeddingMatrix matrix;
        matrix.ids = {"a", "b"};
        matrix.rows = {{1.0, 0.0}, {3.0, 4.0}};
        CHECK_THROWS_AS(group_similar(matrix, 1, 0), InvalidEmbeddingError);
    }
}

TEST_CASE("group_diverse") {
    SUBCASE("first pick is the point on the most neighbor lists") {
        // Six points on the unit circle, one tight pair making its members
        // popular neighbors; with empty selection the score is the in-degree.
        SplitMix64 rng(3);
        std::vector<std::vector<double>> centers = {{1.0, 0.0}};
        EmbeddingMatrix matrix;
        const double angles[] = {0.00, 0.05, 0.80, 1.70, 2.60, 3.50};
        for (int i = 0; i < 6; ++i) {
            matrix.ids.push_back("p" + std::to_string(i));
            matrix.rows.push_back({std::cos(angles[i]), std::sin(angles[i])});
        }
        DiverseParams params;
        params.k_nn = 2;
        params.rho = 10.0;
        const Grouping grouping = group_diverse(matrix, 2, params);

        // Brute-force in-degree under 2-NN cosine similarity.
        std::vector<int> in_degree(6, 0);
        for (int v = 0; v < 6; ++v) {
            std::vector<int> order;
            for (int u = 0; u < 6; ++u) {
                if (u != v) order.push_back(u);
            }
            std::sort(order.begin(), order.end(), [&](int a, int b) {
                const double sa = cosine(matrix.rows[static_cast<std::size_t>(v)],
                                         matrix.rows[static_cast<std::size_t>(a)]);
                const double sb = cosine(matrix.rows[static_cast<std::size_t>(v)],
                                         matrix.rows[static_cast<std::size_t>(b)]);
                if (sa != sb) return sa > sb;
                return matrix.ids[static_cast<std::size_t>(a)] <
                       matrix.ids[static_cast<std::size_t>(b)];
            });
            ++in_degree[static_cast<std::size_t>(order[0])];
            ++in_degree[static_cast<std::size_t>(order[1])];
        }
        int expected_first = 0;
        for (int u = 1; u < 6; ++u) {
            if (in_degree[static_cast<std::size_t>(u)] >
                    in_degree[static_cast<std::size_t>(expected_first)] ||
                (in_degree[static_cast<std::size_t>(u)] ==
                     in_degree[static_cast<std::size_t>(expected_first)] &&
                 matrix.ids[static_cast<std::size_t>(u)] <
                     matrix.ids[static_cast<std::size_t>(expected_first)])) {
                expected_first = u;
            }
        }
        CHECK(grouping.batches.front().front() ==
              matrix.ids[static_cast<std::size_t>(expected_first)]);
    }
    SUBCASE("N == b yields one batch regardless of params") {
        EmbeddingMatrix matrix;
        for (int i = 0; i < 3; ++i) {
            matrix.ids.push_back("p" + std::to_string(i));
            std::vector<double> row(3, 0.0);
            row[static_cast<std::size_t>(i)] = 1.0;
            matrix.rows.push_back(std::move(row));
        }
        const Grouping grouping = group_diverse(matrix, 3, {1, 10.0});
        REQUIRE(grouping.batches.size() == 1);
        CHECK(grouping.batches[0].size() == 3);
    }
    SUBCASE("parameter validation") {
        EmbeddingMatrix matrix;
        matrix.ids = {"a", "b"};
        matrix.rows = {{1.0, 0.0}, {0.0, 1.0}};
        CHECK_THROWS_AS(group_diverse(matrix, 1, {2, 10.0}), ParameterError);
        CHECK_THROWS_AS(group_diverse(matrix, 1, {1, 0.0}), ParameterError);
    }
}

TEST_CASE("all strategies satisfy partition, size law and determinism") {
    SplitMix64 rng(555);
    for (int round = 0; round < 60; ++round) {
        const int b = 1 + static_cast<int>(rng.below(5));
        const int n = b + static_cast<int>(rng.below(30));
        std::vector<std::vector<double>> centers(3, std::vector<double>(6, 0.0));
        for (std::size_t c = 0; c < 3; ++c) centers[c][c] = 1.0;
        EmbeddingMatrix matrix;
        {
            SplitMix64 point_rng(rng.next());
            std::vector<std::vector<double>> all_centers = centers;
            EmbeddingMatrix clouds = synthetic_clouds(all_centers, (n + 2) / 3, 0.4, point_rng);
            clouds.ids.resize(static_cast<std::size_t>(n));
            clouds.rows.resize(static_cast<std::size_t>(n));
            matrix = std::move(clouds);
        }
        const std::uint64_t seed = rng.next();

        const Grouping random_grouping = group_random(matrix.ids, b, seed);
        check_partition_and_size_law(random_grouping, matrix.ids, b);
        CHECK(group_random(matrix.ids, b, seed).batches == random_grouping.batches);

        const Grouping similar_grouping = group_similar(matrix, b, seed);
        check_partition_and_size_law(similar_grouping, matrix.ids, b);
        CHECK(group_similar(matrix, b, seed).batches == similar_grouping.batches);

        DiverseParams params;
        params.k_nn = std::min(4, n - 1);
        const Grouping diverse_grouping = group_diverse(matrix, b, params);
        check_partition_and_size_law(diverse_grouping, matrix.ids, b);
        CHECK(group_diverse(matrix, b, params).batches == diverse_grouping.batches);
    }
}

TEST_CASE("embeddings JSONL loader") {
    const std::string path = "embeddings_test_tmp.jsonl";
    {
        std::FILE* f = std::fopen(path.c_str(), "w");
        REQUIRE(f != nullptr);
        std::fputs("{\"id\":\"a\",\"vector\":[3.0,4.0]}\n", f);
        std::fputs("{\"id\":\"b\",\"vector\":[0.0,1.0]}\n", f);
        std::fclose(f);
    }
    const EmbeddingMatrix matrix = load_embeddings(path);
    REQUIRE(matrix.size() == 2);
    CHECK(matrix.rows[0][0] == doctest::Approx(0.6));  // normalized on load
    CHECK(matrix.rows[0][1] == doctest::Approx(0.8));

    {
        std::FILE* f = std::fopen(path.c_str(), "w");
        std::fputs("{\"id\":\"a\",\"vector\":[1.0]}\n", f);
        std::fputs("{\"id\":\"a\",\"vector\":[1.0]}\n", f);
        std::fclose(f);
    }
    CHECK_THROWS_AS(load_embeddings(path), DuplicateIdError);

    {
        std::FILE* f = std::fopen(path.c_str(), "w");
        std::fputs("{\"id\":\"a\",\"vector\":[0.0,0.0]}\n", f);
        std::fclose(f);
    }
    CHECK_THROWS_AS(load_embeddings(path), InvalidEmbeddingError);
    std::remove(path.c_str());
}
