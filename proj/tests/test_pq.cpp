#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <vector>

#include "capq/embedding.hpp"
#include "capq/error.hpp"
#include "capq/pq.hpp"
#include "capq/rng.hpp"

using namespace capq;

namespace {

std::filesystem::path tmp_file(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

PqCodebook random_codebook(std::uint64_t seed, std::uint32_t m, std::uint32_t n,
                           std::uint32_t d_sub) {
    Rng rng(seed);
    PqCodebook cb;
    cb.m = m;
    cb.n = n;
    cb.d_sub = d_sub;
    cb.centroids.resize(std::size_t(m) * n * d_sub);
    for (auto& c : cb.centroids) c = static_cast<float>(rng.gaussian());
    return cb;
}

PqCode random_code(Rng& rng, std::uint32_t m, std::uint32_t n) {
    PqCode code(m);
    for (auto& c : code) c = static_cast<std::uint16_t>(rng.below(n));
    return code;
}

double centroid_sqdist(const PqCodebook& cb, std::uint32_t j, std::uint32_t a,
                       std::uint32_t b) {
    auto ca = cb.centroid(j, a), cbv = cb.centroid(j, b);
    double s = 0.0;
    for (std::uint32_t t = 0; t < cb.d_sub; ++t) {
        double d = double(ca[t]) - cbv[t];
        s += d * d;
    }
    return s;
}

double centroid_sqdist_point(const PqCodebook& cb, std::uint32_t k, std::span<const float> x) {
    auto c = cb.centroid(0, k);
    double s = 0.0;
    for (std::uint32_t t = 0; t < cb.d_sub; ++t) {
        double d = double(c[t]) - x[t];
        s += d * d;
    }
    return s;
}

}  // namespace

TEST_CASE("training recovers planted clusters") {
    // Four well-separated centers per subspace; k-means must land on them.
    Rng rng(101);
    const float centers[4][2] = {{4, 4}, {-4, 4}, {-4, -4}, {4, -4}};
    std::vector<float> data;
    const std::size_t rows = 400;
    std::vector<int> planted(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        int c = static_cast<int>(rng.below(4));
        planted[i] = c;
        data.push_back(centers[c][0] + 0.1f * static_cast<float>(rng.gaussian()));
        data.push_back(centers[c][1] + 0.1f * static_cast<float>(rng.gaussian()));
    }
    EmbeddingSet set(2, std::move(data));
    PqCodebook cb = train_codebook(set, 1, 4, 7);

    // Each planted center has exactly one centroid within 0.2.
    std::vector<int> matched(4, -1);
    for (int p = 0; p < 4; ++p) {
        for (std::uint32_t k = 0; k < 4; ++k) {
            auto c = cb.centroid(0, k);
            double d = std::hypot(c[0] - centers[p][0], c[1] - centers[p][1]);
            if (d < 0.2) {
                CHECK(matched[p] == -1);
                matched[p] = static_cast<int>(k);
            }
        }
        CHECK(matched[p] != -1);
    }

    // Quantization recovers the planted partition.
    for (std::size_t i = 0; i < rows; ++i) {
        PqCode code = quantize(cb, set.vec(i));
        CHECK(code[0] == matched[planted[i]]);
    }
}

TEST_CASE("training is deterministic in the seed") {
    EmbeddingSet set = [] {
        Rng rng(3);
        std::vector<float> data(200 * 8);
        for (auto& x : data) x = static_cast<float>(rng.gaussian());
        return EmbeddingSet(8, std::move(data));
    }();
    PqCodebook a = train_codebook(set, 4, 16, 55);
    PqCodebook b = train_codebook(set, 4, 16, 55);
    CHECK(a.centroids == b.centroids);
    PqCodebook c = train_codebook(set, 4, 16, 56);
    CHECK(a.centroids != c.centroids);
}

TEST_CASE("training validates its shape requirements") {
    EmbeddingSet set = [] {
        std::vector<float> data(10 * 6, 0.5f);
        for (std::size_t i = 0; i < data.size(); ++i) data[i] += 0.01f * float(i);
        return EmbeddingSet(6, std::move(data));
    }();
    CHECK_THROWS_AS(train_codebook(set, 4, 4, 1), Error);   // 6 % 4 != 0
    CHECK_THROWS_AS(train_codebook(set, 2, 11, 1), Error);  // count < n
}

TEST_CASE("duplicate-heavy data still yields finite centroids") {
    // 3 distinct values, 8 requested centroids: repair must fill empties.
    std::vector<float> data;
    for (int i = 0; i < 60; ++i) {
        float v = static_cast<float>(i % 3);
        data.push_back(v);
        data.push_back(-v);
    }
    EmbeddingSet set(2, std::move(data));
    PqCodebook cb = train_codebook(set, 1, 8, 9);
    for (float c : cb.centroids) CHECK(std::isfinite(c));
    // Every point is exactly on some centroid after convergence.
    for (std::size_t i = 0; i < set.count(); ++i) {
        PqCode code = quantize(cb, set.vec(i));
        CHECK(centroid_sqdist_point(cb, code[0], set.vec(i)) < 1e-10);
    }
}

TEST_CASE("quantize ties pick the lowest centroid index") {
    PqCodebook cb;
    cb.m = 1;
    cb.n = 3;
    cb.d_sub = 2;
    cb.centroids = {1.0f, 0.0f, -1.0f, 0.0f, 5.0f, 5.0f};  // two equidistant from origin
    std::vector<float> q{0.0f, 0.0f};
    PqCode code = quantize(cb, q);
    CHECK(code[0] == 0);
}

TEST_CASE("distance table is symmetric, zero on the diagonal and matches recomputation") {
    PqCodebook cb = random_codebook(13, 3, 9, 4);
    DistanceTable table = build_distance_table(cb);
    for (std::uint32_t j = 0; j < cb.m; ++j)
        for (std::uint32_t a = 0; a < cb.n; ++a) {
            CHECK(table.at(j, a, a) == 0.0f);
            for (std::uint32_t b = 0; b < cb.n; ++b) {
                CHECK(table.at(j, a, b) == table.at(j, b, a));
                double oracle = centroid_sqdist(cb, j, a, b);
                CHECK(double(table.at(j, a, b)) ==
                      doctest::Approx(oracle).epsilon(1e-6).scale(1.0));
            }
        }
}

TEST_CASE("code distance equals the direct per-subspace sum") {
    PqCodebook cb = random_codebook(29, 8, 32, 3);
    DistanceTable table = build_distance_table(cb);
    Rng rng(31);
    for (int trial = 0; trial < 500; ++trial) {
        PqCode a = random_code(rng, cb.m, cb.n);
        PqCode b = random_code(rng, cb.m, cb.n);
        double oracle = 0.0;
        for (std::uint32_t j = 0; j < cb.m; ++j) oracle += centroid_sqdist(cb, j, a[j], b[j]);
        double got = pq_distance(table, a, b);
        CHECK(got == doctest::Approx(oracle).epsilon(1e-6).scale(1e-12));
    }
}

TEST_CASE("top-k scan matches a full sort oracle including ties") {
    PqCodebook cb = random_codebook(41, 4, 8, 2);
    DistanceTable table = build_distance_table(cb);
    PqIndex index(cb, table);
    Rng rng(43);
    const std::size_t rows = 120;
    std::vector<PqCode> codes;
    for (std::size_t i = 0; i < rows; ++i) {
        PqCode code = random_code(rng, cb.m, cb.n);
        if (i % 10 == 0 && i > 0) code = codes[i - 1];  // planted ties
        index.add_code(code, static_cast<std::uint32_t>(i));
        codes.push_back(std::move(code));
    }

    PqCode query = random_code(rng, cb.m, cb.n);
    for (std::uint32_t k : {1u, 5u, 17u, 120u, 500u}) {
        CandidateList got = topk_filter(index, query, k);

        std::vector<std::pair<double, std::uint32_t>> oracle;
        for (std::size_t i = 0; i < rows; ++i)
            oracle.emplace_back(pq_distance(table, query, codes[i]),
                                static_cast<std::uint32_t>(i));
        std::stable_sort(oracle.begin(), oracle.end());
        std::size_t expect = std::min<std::size_t>(k, rows);

        REQUIRE(got.size() == expect);
        for (std::size_t i = 0; i < expect; ++i) {
            CHECK(got.ids[i] == oracle[i].second);
            CHECK(double(got.distances[i]) ==
                  doctest::Approx(oracle[i].first).epsilon(1e-6).scale(1e-12));
        }
    }
}

TEST_CASE("top-k rejects a zero k and an empty index") {
    PqCodebook cb = random_codebook(47, 2, 4, 2);
    DistanceTable table = build_distance_table(cb);
    PqIndex empty(cb, table);
    PqCode query{0, 0};
    CHECK_THROWS_AS(topk_filter(empty, query, 1), Error);

    PqIndex index(cb, table);
    index.add_code(PqCode{1, 1}, 0);
    CHECK_THROWS_AS(topk_filter(index, query, 0), Error);
}

TEST_CASE("index add quantizes rows and keeps ordinal or label ids") {
    Rng rng(53);
    std::vector<float> data(40 * 4);
    for (auto& x : data) x = static_cast<float>(rng.gaussian());
    std::vector<std::uint32_t> labels(40);
    for (std::size_t i = 0; i < 40; ++i) labels[i] = 1000 + std::uint32_t(i);
    EmbeddingSet set(4, std::move(data), std::move(labels));
    PqCodebook cb = train_codebook(set, 2, 8, 5);
    DistanceTable table = build_distance_table(cb);

    PqIndex ord(cb, table);
    ord.add(set);
    CHECK(ord.ids()[7] == 7);
    PqIndex lab(cb, table);
    lab.add(set, true);
    CHECK(lab.ids()[7] == 1007);
    CHECK(std::equal(ord.flat_codes().begin(), ord.flat_codes().end(),
                     lab.flat_codes().begin()));
    for (std::size_t i = 0; i < set.count(); ++i) {
        PqCode direct = quantize(cb, set.vec(i));
        CHECK(std::equal(direct.begin(), direct.end(), ord.code(i).begin()));
    }
}

TEST_CASE("codebook, table and index files round-trip") {
    PqCodebook cb = random_codebook(61, 2, 6, 3);
    DistanceTable table = build_distance_table(cb);
    PqIndex index(cb, table);
    Rng rng(67);
    for (std::uint32_t i = 0; i < 9; ++i) index.add_code(random_code(rng, cb.m, cb.n), i * 3);

    auto cb_path = tmp_file("capq_pq_rt.pqcb");
    auto tab_path = tmp_file("capq_pq_rt.pqdt");
    auto idx_path = tmp_file("capq_pq_rt.pqix");
    write_codebook(cb, cb_path);
    write_distance_table(table, tab_path);
    write_index(index, idx_path);

    PqCodebook cb2 = load_codebook(cb_path);
    DistanceTable tab2 = load_distance_table(tab_path);
    CHECK(cb2.centroids == cb.centroids);
    CHECK(tab2.d == table.d);
    PqIndex idx2 = load_index(idx_path, cb2, tab2);
    CHECK(std::equal(idx2.flat_codes().begin(), idx2.flat_codes().end(),
                     index.flat_codes().begin()));
    CHECK(std::equal(idx2.ids().begin(), idx2.ids().end(), index.ids().begin()));

    std::filesystem::remove(cb_path);
    std::filesystem::remove(tab_path);
    std::filesystem::remove(idx_path);
}

TEST_CASE("a code outside the centroid range is rejected") {
    PqCodebook cb = random_codebook(71, 2, 4, 2);
    DistanceTable table = build_distance_table(cb);
    PqIndex index(cb, table);
    CHECK_THROWS_AS(index.add_code(PqCode{0, 4}, 0), Error);  // n == 4
    CHECK_THROWS_AS(index.add_code(PqCode{0}, 1), Error);     // wrong length
}
