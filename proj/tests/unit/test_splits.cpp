#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "afford/splits.hpp"
#include "doctest.h"

namespace splits = afford::splits;

namespace {

const splits::EmbeddingTable& shipped_table() {
    static splits::EmbeddingTable table = splits::load_embedding_table(
        std::filesystem::path(AFFORD_ASSETS_DIR) / "embeddings" / "class_embeddings.tsv");
    return table;
}

}  // namespace

TEST_CASE("class name normalization") {
    CHECK(splits::normalize_class_name("  Wine   Glass ") == "wine glass");
    CHECK(splits::normalize_class_name("baseball_bat") == "baseball bat");
    CHECK(splits::normalize_class_name("Hi") == "hi");
}

TEST_CASE("class_similarity fixtures") {
    splits::EmbeddingTable t;
    t.dim = 2;
    t.entries["a"] = {1.0, 0.0};
    t.entries["b"] = {1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)};
    t.entries["c"] = {0.0, 2.0};
    CHECK(splits::class_similarity("a", "a", t) == doctest::Approx(1.0));
    CHECK(splits::class_similarity("a", "c", t) == doctest::Approx(0.0));
    CHECK(splits::class_similarity("a", "b", t) == doctest::Approx(0.707107).epsilon(1e-6));
    CHECK_THROWS_WITH_AS(splits::class_similarity("a", "zebra", t),
                         doctest::Contains("zebra"), std::invalid_argument);
}

TEST_CASE("split_difficulty formula and Same = 0") {
    splits::EmbeddingTable t;
    t.dim = 2;
    t.entries["a"] = {1.0, 0.0};
    t.entries["b"] = {0.8, 0.6};  // cos(a,b) = 0.8

    splits::SplitSpec s;
    s.name = "tiny";
    s.train_classes = {"a"};
    s.test_classes = {"b"};
    CHECK(splits::split_difficulty(s, t) == doctest::Approx(0.2).epsilon(1e-9));

    // same classes on both sides is invalid by the type invariant; "Same"
    // behaviour is covered by duplicating entries under new names
    t.entries["a2"] = {2.0, 0.0};  // same direction, different norm
    splits::SplitSpec same;
    same.name = "same";
    same.train_classes = {"a"};
    same.test_classes = {"a2"};
    CHECK(splits::split_difficulty(same, t) == doctest::Approx(0.0));
}

TEST_CASE("canonical splits match the published lists") {
    const auto [easy, hard] = splits::load_canonical_splits();
    CHECK(easy.train_classes.size() == 33);
    CHECK(easy.test_classes.size() == 14);
    CHECK(hard.train_classes.size() == 28);
    CHECK(hard.test_classes.size() == 22);
    CHECK(easy.test_classes.count("camera") == 1);
    CHECK(hard.train_classes.count("camera") == 1);
    CHECK(easy.train_classes.count("scissors") == 1);
    CHECK(hard.test_classes.count("scissors") == 1);
    CHECK_NOTHROW(easy.validate());
    CHECK_NOTHROW(hard.validate());
}

TEST_CASE("canonical splits agree with the shipped asset files") {
    const auto [easy, hard] = splits::load_canonical_splits();
    const auto easy_file = splits::load_split_file(
        std::filesystem::path(AFFORD_ASSETS_DIR) / "splits" / "easy.split");
    const auto hard_file = splits::load_split_file(
        std::filesystem::path(AFFORD_ASSETS_DIR) / "splits" / "hard.split");
    CHECK(easy.train_classes == easy_file.train_classes);
    CHECK(easy.test_classes == easy_file.test_classes);
    CHECK(hard.train_classes == hard_file.train_classes);
    CHECK(hard.test_classes == hard_file.test_classes);
}

TEST_CASE("difficulty scores on the shipped embedding table") {
    const auto [easy, hard] = splits::load_canonical_splits();
    const auto& table = shipped_table();
    CHECK(splits::split_difficulty(easy, table) == doctest::Approx(0.356).epsilon(2e-3));
    CHECK(splits::split_difficulty(hard, table) == doctest::Approx(0.412).epsilon(2e-3));
}

TEST_CASE("difficulty is invariant to per-vector positive rescaling") {
    const auto [easy, _] = splits::load_canonical_splits();
    splits::EmbeddingTable scaled = shipped_table();
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.1, 7.0);
    for (auto& [cls, vec] : scaled.entries) {
        const double s = u(rng);
        for (auto& v : vec) v *= s;
    }
    CHECK(splits::split_difficulty(easy, scaled) ==
          doctest::Approx(splits::split_difficulty(easy, shipped_table())).epsilon(1e-9));
}

TEST_CASE("monotonicity: growing the train side never increases difficulty") {
    const auto [easy, hard] = splits::load_canonical_splits();
    const auto& table = shipped_table();
    const double base = splits::split_difficulty(hard, table);
    splits::SplitSpec bigger = hard;
    bigger.train_classes.insert("kayak");  // LVIS names can't collide with test
    bigger.train_classes.insert("canoe");
    bigger.train_classes.insert("snowboard");  // a sibling of several test classes
    bigger.test_classes.erase("snowboard");
    bigger.test_classes.insert("snowboard");  // keep the set unchanged
    bigger.train_classes.erase("snowboard");
    CHECK(splits::split_difficulty(bigger, table) <= base + 1e-12);

    // and a genuinely helpful addition strictly lowers it
    splits::SplitSpec helpful = hard;
    helpful.test_classes.erase("skis");
    helpful.train_classes.insert("skis");  // sibling of snowboard/skateboard/surfboard
    CHECK(splits::split_difficulty(helpful, table) < base);
}

TEST_CASE("build_random_split determinism and the documented shuffle") {
    std::set<std::string> classes = {"a", "b", "c", "d"};
    const auto s1 = splits::build_random_split(classes, 0.5, 42);
    const auto s2 = splits::build_random_split(classes, 0.5, 42);
    CHECK(s1.train_classes == s2.train_classes);
    CHECK(s1.test_classes == s2.test_classes);
    CHECK(s1.test_classes.size() == 2);
    CHECK(s1.train_classes.size() == 2);

    // replay of the documented algorithm: sorted pool, Fisher-Yates with
    // mt19937_64(seed), j = gen() % (i+1), first floor(n*frac) -> test
    std::vector<std::string> pool = {"a", "b", "c", "d"};
    std::mt19937_64 gen(42);
    for (std::size_t i = pool.size() - 1; i > 0; --i) {
        const std::size_t j = static_cast<std::size_t>(gen() % (i + 1));
        std::swap(pool[i], pool[j]);
    }
    std::set<std::string> expect_test(pool.begin(), pool.begin() + 2);
    CHECK(s1.test_classes == expect_test);

    // 50 classes at 0.5 -> 25/25
    std::set<std::string> fifty;
    for (int i = 0; i < 50; ++i) fifty.insert("cls" + std::to_string(i));
    const auto s50 = splits::build_random_split(fifty, 0.5, 7);
    CHECK(s50.train_classes.size() == 25);
    CHECK(s50.test_classes.size() == 25);

    CHECK_THROWS_AS(splits::build_random_split({"a", "b"}, 0.01, 1), std::invalid_argument);
}

TEST_CASE("split file round-trip") {
    const auto [easy, _] = splits::load_canonical_splits();
    const auto tmp = std::filesystem::temp_directory_path() / "afford_test_easy.split";
    splits::save_split_file(easy, tmp);
    const auto back = splits::load_split_file(tmp);
    CHECK(back.train_classes == easy.train_classes);
    CHECK(back.test_classes == easy.test_classes);
    std::filesystem::remove(tmp);
}

TEST_CASE("embedding table loader validates") {
    namespace fs = std::filesystem;
    const auto tmp = fs::temp_directory_path() / "afford_bad_table.tsv";
    {
        std::ofstream f(tmp);
        f << "a\t1,0\nb\t1,0,0\n";  // dim mismatch
    }
    CHECK_THROWS(splits::load_embedding_table(tmp));
    {
        std::ofstream f(tmp);
        f << "a\t0,0\n";  // zero norm
    }
    CHECK_THROWS(splits::load_embedding_table(tmp));
    fs::remove(tmp);
}

TEST_CASE("content hashes are stable and name-independent") {
    const auto [easy, _] = splits::load_canonical_splits();
    splits::SplitSpec renamed = easy;
    renamed.name = "other";
    CHECK(splits::split_content_hash(easy) == splits::split_content_hash(renamed));
    splits::SplitSpec perturbed = easy;
    perturbed.train_classes.insert("kayak");
    CHECK(splits::split_content_hash(easy) != splits::split_content_hash(perturbed));
}
