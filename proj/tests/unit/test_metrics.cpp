#include <cmath>
#include <random>

#include "afford/metrics.hpp"
#include "doctest.h"

using afford::DenseMap;
namespace metrics = afford::metrics;

namespace {

// Straight-line long-double re-implementations of the three formulas,
// independent of the library code paths.
long double oracle_kld(const DenseMap& pred, const DenseMap& gt, long double eps) {
    long double acc = 0.0L;
    for (std::size_t i = 0; i < gt.size(); ++i)
        acc += static_cast<long double>(gt[i]) *
               std::log(eps + static_cast<long double>(gt[i]) / (eps + pred[i]));
    return acc;
}

long double oracle_sim(const DenseMap& pred, const DenseMap& gt) {
    long double acc = 0.0L;
    for (std::size_t i = 0; i < gt.size(); ++i)
        acc += std::min<long double>(pred[i], gt[i]);
    return acc;
}

long double oracle_nss(const DenseMap& pred, const DenseMap& gt) {
    const long double n = static_cast<long double>(pred.size());
    long double mu = 0.0L;
    for (std::size_t i = 0; i < pred.size(); ++i) mu += pred[i];
    mu /= n;
    long double var = 0.0L;
    for (std::size_t i = 0; i < pred.size(); ++i) var += (pred[i] - mu) * (pred[i] - mu);
    const long double sigma = std::sqrt(var / n);
    long double wsum = 0.0L, acc = 0.0L;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        wsum += gt[i];
        acc += (pred[i] - mu) / sigma * gt[i];
    }
    return acc / wsum;
}

DenseMap random_distribution(std::mt19937_64& rng, int h, int w, double floor = 0.0) {
    std::uniform_real_distribution<double> u(floor, 1.0);
    DenseMap m(h, w);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = u(rng);
    return afford::normalize_to_distribution(m);
}

}  // namespace

TEST_CASE("kld hand-computed fixtures") {
    const DenseMap uniform(2, 2, 0.25);
    CHECK(std::fabs(metrics::kld(uniform, uniform)) < 1e-9);

    // gt=[1,0], pred=[0.5,0.5] -> ln 2
    CHECK(metrics::kld(DenseMap(1, 2, {0.5, 0.5}), DenseMap(1, 2, {1.0, 0.0})) ==
          doctest::Approx(0.693147).epsilon(1e-5));
    // gt=[.5,.5], pred=[.9,.1]
    CHECK(metrics::kld(DenseMap(1, 2, {0.9, 0.1}), DenseMap(1, 2, {0.5, 0.5})) ==
          doctest::Approx(0.510825).epsilon(1e-5));
}

TEST_CASE("kld validates inputs") {
    const DenseMap ok(1, 2, {0.5, 0.5});
    CHECK_THROWS_AS(metrics::kld(ok, DenseMap(2, 1, {0.5, 0.5})), std::invalid_argument);
    CHECK_THROWS_AS(metrics::kld(DenseMap(1, 2, {0.9, 0.9}), ok), std::invalid_argument);
    CHECK_THROWS_AS(metrics::kld(ok, DenseMap(1, 2, {0.2, 0.2})), std::invalid_argument);
}

TEST_CASE("sim fixtures and symmetry") {
    const DenseMap a(1, 2, {0.7, 0.3});
    const DenseMap b(1, 2, {0.4, 0.6});
    CHECK(metrics::sim(a, a) == doctest::Approx(1.0));
    CHECK(metrics::sim(DenseMap(1, 2, {1.0, 0.0}), DenseMap(1, 2, {0.0, 1.0})) ==
          doctest::Approx(0.0));
    CHECK(metrics::sim(a, b) == doctest::Approx(0.7).epsilon(1e-9));
    CHECK(metrics::sim(a, b) == doctest::Approx(metrics::sim(b, a)));
}

TEST_CASE("nss fixtures") {
    // mu=0.5 sigma=0.5 -> standardized [-1,1,-1,1]
    const DenseMap pred(1, 4, {0, 1, 0, 1});
    CHECK(metrics::nss(pred, DenseMap(1, 4, {0, 1, 0, 0})) == doctest::Approx(1.0));
    CHECK(metrics::nss(pred, DenseMap(1, 4, {1, 0, 0, 0})) == doctest::Approx(-1.0));
    CHECK(metrics::nss(DenseMap(1, 4, 0.3), DenseMap(1, 4, {0, 1, 0, 0})) == 0.0);
    CHECK_THROWS_AS(metrics::nss(pred, DenseMap(1, 4, 0.0)), std::invalid_argument);
}

TEST_CASE("nss binarize option weights support equally") {
    const DenseMap pred(1, 4, {0.1, 0.9, 0.3, 0.2});
    const DenseMap gt(1, 4, {0.2, 0.8, 0.0, 0.0});
    DenseMap bin(1, 4, {1.0, 1.0, 0.0, 0.0});
    CHECK(metrics::nss(pred, gt, true) == doctest::Approx(metrics::nss(pred, bin, false)));
}

TEST_CASE("library agrees with brute-force oracles on random pairs") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 300; ++trial) {
        const int h = 1 + static_cast<int>(rng() % 8);
        const int w = 1 + static_cast<int>(rng() % 8);
        const DenseMap pred = random_distribution(rng, h, w, 1e-4);
        const DenseMap gt = random_distribution(rng, h, w);
        CHECK(metrics::kld(pred, gt) ==
              doctest::Approx(static_cast<double>(oracle_kld(pred, gt, 1e-12L))).epsilon(1e-9));
        CHECK(metrics::sim(pred, gt) ==
              doctest::Approx(static_cast<double>(oracle_sim(pred, gt))).epsilon(1e-9));
        if (pred.max_value() - pred.min_value() > 1e-9)
            CHECK(metrics::nss(pred, gt) ==
                  doctest::Approx(static_cast<double>(oracle_nss(pred, gt))).epsilon(1e-7));
    }
}

TEST_CASE("nss invariant under positive affine transform of the prediction") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        DenseMap pred(3, 5);
        for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = u(rng);
        pred[0] = 0.9;
        pred[1] = 0.1;  // non-constant
        const DenseMap gt = random_distribution(rng, 3, 5);
        const double base = metrics::nss(pred, gt);
        const double a = 0.1 + 3.0 * u(rng), b = u(rng);
        DenseMap scaled(3, 5);
        for (std::size_t i = 0; i < pred.size(); ++i) scaled[i] = a * pred[i] + b;
        CHECK(std::fabs(metrics::nss(scaled, gt) - base) < 1e-9);
    }
}

TEST_CASE("identical pixel permutation leaves all metrics unchanged") {
    std::mt19937_64 rng(21);
    const DenseMap pred = random_distribution(rng, 4, 4, 1e-3);
    const DenseMap gt = random_distribution(rng, 4, 4);
    std::vector<std::size_t> perm(16);
    for (std::size_t i = 0; i < 16; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    DenseMap pred_p(4, 4), gt_p(4, 4);
    for (std::size_t i = 0; i < 16; ++i) {
        pred_p[i] = pred[perm[i]];
        gt_p[i] = gt[perm[i]];
    }
    CHECK(metrics::kld(pred_p, gt_p) == doctest::Approx(metrics::kld(pred, gt)).epsilon(1e-12));
    CHECK(metrics::sim(pred_p, gt_p) == doctest::Approx(metrics::sim(pred, gt)).epsilon(1e-12));
    CHECK(metrics::nss(pred_p, gt_p) == doctest::Approx(metrics::nss(pred, gt)).epsilon(1e-12));
}

TEST_CASE("evaluate_batch identity, means, and the fixture trio") {
    std::mt19937_64 rng(7);
    const DenseMap m = random_distribution(rng, 6, 6, 1e-3);
    auto rep = metrics::evaluate_batch({{m, m, "same"}});
    CHECK(rep.mean_sim == doctest::Approx(1.0));
    CHECK(std::fabs(rep.mean_kld) < 1e-9);
    CHECK(rep.num_samples == 1);

    // two pairs with SIM 1 and 0 -> mean 0.5
    auto rep2 = metrics::evaluate_batch({
        {DenseMap(1, 2, {0.5, 0.5}), DenseMap(1, 2, {0.5, 0.5}), "a"},
        {DenseMap(1, 2, {1.0, 0.0}), DenseMap(1, 2, {0.0, 1.0}), "b"},
    });
    CHECK(rep2.mean_sim == doctest::Approx(0.5));

    // trio composed from the single-metric fixtures above
    auto rep3 = metrics::evaluate_batch({
        {DenseMap(1, 2, {0.5, 0.5}), DenseMap(1, 2, {1.0, 0.0}), "kld_pair"},
        {DenseMap(1, 2, {0.7, 0.3}), DenseMap(1, 2, {0.4, 0.6}), "sim_pair"},
        {DenseMap(1, 4, {0, 1, 0, 1}), DenseMap(1, 4, {0, 1, 0, 0}), "nss_pair"},
    });
    REQUIRE(rep3.per_sample.size() == 3);
    // per_sample is sorted by id: kld_pair, nss_pair, sim_pair
    CHECK(rep3.per_sample[0].sample_id == "kld_pair");
    CHECK(rep3.per_sample[0].kld == doctest::Approx(0.693147).epsilon(1e-4));
    CHECK(rep3.per_sample[1].sample_id == "nss_pair");
    CHECK(rep3.per_sample[1].nss == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rep3.per_sample[2].sample_id == "sim_pair");
    CHECK(rep3.per_sample[2].sim == doctest::Approx(0.7).epsilon(1e-9));
    CHECK(rep3.num_degenerate == 1);  // the constant kld_pair prediction

    CHECK_THROWS_AS(metrics::evaluate_batch({}), std::invalid_argument);
}

TEST_CASE("evaluate_batch resizes predictions to GT resolution") {
    // constant 2x2 prediction against a 4x4 GT: KLD/SIM vs uniform
    DenseMap gt(4, 4, 0.0);
    gt.at(1, 1) = 1.0;
    auto rep = metrics::evaluate_batch({{DenseMap(2, 2, 0.5), gt, "up"}});
    CHECK(rep.per_sample[0].sim == doctest::Approx(1.0 / 16).epsilon(1e-9));
    CHECK(rep.per_sample[0].nss == 0.0);
    CHECK(rep.num_degenerate == 1);
}

TEST_CASE("evaluate_batch is deterministic across worker counts") {
    std::mt19937_64 rng(31);
    std::vector<metrics::EvalPair> pairs;
    for (int i = 0; i < 12; ++i)
        pairs.push_back({random_distribution(rng, 5, 5, 1e-4), random_distribution(rng, 5, 5),
                         "s" + std::to_string(i)});
    metrics::EvalOptions one, four;
    four.workers = 4;
    const auto ra = metrics::evaluate_batch(pairs, one);
    const auto rb = metrics::evaluate_batch(pairs, four);
    REQUIRE(ra.per_sample.size() == rb.per_sample.size());
    for (std::size_t i = 0; i < ra.per_sample.size(); ++i) {
        CHECK(ra.per_sample[i].sample_id == rb.per_sample[i].sample_id);
        CHECK(ra.per_sample[i].kld == rb.per_sample[i].kld);
        CHECK(ra.per_sample[i].sim == rb.per_sample[i].sim);
        CHECK(ra.per_sample[i].nss == rb.per_sample[i].nss);
    }
}

TEST_CASE("report JSON round-trip and table formatting") {
    std::mt19937_64 rng(41);
    auto rep = metrics::evaluate_batch({
        {random_distribution(rng, 3, 3, 1e-3), random_distribution(rng, 3, 3), "x"},
        {random_distribution(rng, 3, 3, 1e-3), random_distribution(rng, 3, 3), "y"},
    });
    const auto round = metrics::report_from_json(metrics::report_to_json(rep));
    CHECK(round.mean_kld == doctest::Approx(rep.mean_kld));
    CHECK(round.per_sample.size() == rep.per_sample.size());

    const std::string table = metrics::report_to_table(rep, "title");
    CHECK(table.find("title") != std::string::npos);
    CHECK(table.find("Mean") != std::string::npos);

    // aggregate means equal arithmetic means of the per-sample values
    double k = 0;
    for (const auto& s : rep.per_sample) k += s.kld;
    CHECK(rep.mean_kld == doctest::Approx(k / rep.per_sample.size()).epsilon(1e-9));
}
