#include "afford/splits.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace afford::splits {

std::string normalize_class_name(const std::string& name) {
    std::string out;
    out.reserve(name.size());
    bool pending_space = false;
    for (char ch : name) {
        const unsigned char c = static_cast<unsigned char>(ch);
        if (std::isspace(c) || c == '_') {
            if (!out.empty()) pending_space = true;
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

void SplitSpec::validate() const {
    if (train_classes.empty() || test_classes.empty())
        throw std::invalid_argument("SplitSpec '" + name + "': both sides must be non-empty");
    for (const auto& c : test_classes)
        if (train_classes.count(c))
            throw std::invalid_argument("SplitSpec '" + name + "': class on both sides: " + c);
}

namespace {

const std::vector<double>& lookup(const EmbeddingTable& table, const std::string& cls) {
    auto it = table.entries.find(normalize_class_name(cls));
    if (it == table.entries.end())
        throw std::invalid_argument("embedding table ('" + table.source +
                                    "') has no entry for class: " + cls);
    return it->second;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

double class_similarity(const std::string& c, const std::string& c_prime,
                        const EmbeddingTable& table) {
    return cosine(lookup(table, c), lookup(table, c_prime));
}

double split_difficulty(const SplitSpec& split, const EmbeddingTable& table) {
    split.validate();
    double acc = 0.0;
    for (const auto& test_cls : split.test_classes) {
        const auto& tv = lookup(table, test_cls);
        double best = -1.0;
        for (const auto& train_cls : split.train_classes)
            best = std::max(best, cosine(tv, lookup(table, train_cls)));
        acc += best;
    }
    return 1.0 - acc / static_cast<double>(split.test_classes.size());
}

SplitSpec build_random_split(const std::set<std::string>& classes, double test_fraction,
                             unsigned long long seed, const std::string& name) {
    if (classes.size() < 2)
        throw std::invalid_argument("build_random_split: need at least 2 classes");
    if (test_fraction <= 0.0 || test_fraction >= 1.0)
        throw std::invalid_argument("build_random_split: test_fraction must lie in (0,1)");

    std::vector<std::string> pool;
    for (const auto& c : classes) pool.push_back(normalize_class_name(c));
    std::sort(pool.begin(), pool.end());

    std::mt19937_64 gen(seed);
    for (std::size_t i = pool.size() - 1; i > 0; --i) {
        const std::size_t j = static_cast<std::size_t>(gen() % (i + 1));
        std::swap(pool[i], pool[j]);
    }

    const std::size_t n_test =
        static_cast<std::size_t>(std::floor(pool.size() * test_fraction));
    if (n_test == 0 || n_test == pool.size())
        throw std::invalid_argument("build_random_split: fraction produces an empty side");

    SplitSpec spec;
    spec.name = name;
    spec.seed = static_cast<long long>(seed);
    spec.test_classes.insert(pool.begin(), pool.begin() + n_test);
    spec.train_classes.insert(pool.begin() + n_test, pool.end());
    spec.validate();
    return spec;
}

std::pair<SplitSpec, SplitSpec> load_canonical_splits() {
    static const char* kEasyTrain[] = {
        "scissors", "badminton racket", "surfboard", "frisbee", "hot dog", "tennis racket",
        "hammer", "microwave", "oven", "punching bag", "carrot", "snowboard", "book",
        "suitcase", "skateboard", "wine glass", "keyboard", "javelin", "motorcycle", "discus",
        "bench", "toothbrush", "bottle", "cell phone", "chair", "orange", "rugby ball",
        "couch", "baseball", "fork", "bowl", "apple", "baseball bat"};
    static const char* kEasyTest[] = {
        "camera", "bed", "bicycle", "golf clubs", "soccer ball", "cup", "laptop",
        "banana", "skis", "knife", "axe", "broccoli", "basketball", "refrigerator"};
    static const char* kHardTrain[] = {
        "carrot", "cup", "bowl", "discus", "book", "camera", "golf clubs", "bottle",
        "broccoli", "binoculars", "drum", "baseball", "apple", "frisbee", "cell phone",
        "baseball bat", "couch", "hammer", "bicycle", "bench", "fork", "badminton racket",
        "banana", "hot dog", "axe", "bed", "chair", "basketball"};
    static const char* kHardTest[] = {
        "soccer ball", "laptop", "punching bag", "oven", "suitcase", "javelin", "wine glass",
        "motorcycle", "scissors", "snowboard", "keyboard", "rugby ball", "orange", "surfboard",
        "knife", "skateboard", "pen", "microwave", "skis", "tennis racket", "refrigerator",
        "toothbrush"};

    SplitSpec easy, hard;
    easy.name = "easy";
    for (const char* c : kEasyTrain) easy.train_classes.insert(c);
    for (const char* c : kEasyTest) easy.test_classes.insert(c);
    hard.name = "hard";
    for (const char* c : kHardTrain) hard.train_classes.insert(c);
    for (const char* c : kHardTest) hard.test_classes.insert(c);
    easy.validate();
    hard.validate();
    return {easy, hard};
}

SplitSpec load_split_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open split file: " + path.string());
    SplitSpec spec;
    spec.name = path.stem().string();
    std::set<std::string>* side = nullptr;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string norm = normalize_class_name(line);
        if (norm.empty()) continue;
        if (norm == "[train]") {
            side = &spec.train_classes;
        } else if (norm == "[test]") {
            side = &spec.test_classes;
        } else {
            if (!side)
                throw std::runtime_error("split file " + path.string() +
                                         ": class before any [train]/[test] header: " + norm);
            side->insert(norm);
        }
    }
    spec.validate();
    return spec;
}

void save_split_file(const SplitSpec& split, const std::filesystem::path& path) {
    split.validate();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write split file: " + path.string());
    out << "[train]\n";
    for (const auto& c : split.train_classes) out << c << "\n";
    out << "[test]\n";
    for (const auto& c : split.test_classes) out << c << "\n";
}

EmbeddingTable load_embedding_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open embedding table: " + path.string());
    EmbeddingTable table;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        if (line.empty()) continue;
        if (line[0] == '#') {
            // "# source: ..." records provenance
            const std::string tag = "# source:";
            if (line.rfind(tag, 0) == 0) {
                table.source = line.substr(tag.size());
                while (!table.source.empty() && table.source.front() == ' ')
                    table.source.erase(table.source.begin());
            }
            continue;
        }
        const auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw std::runtime_error("embedding table " + path.string() + ":" +
                                     std::to_string(lineno) + ": missing TAB separator");
        const std::string cls = normalize_class_name(line.substr(0, tab));
        std::vector<double> vec;
        std::stringstream ss(line.substr(tab + 1));
        std::string tok;
        while (std::getline(ss, tok, ','))
            vec.push_back(std::stod(tok));
        if (vec.empty())
            throw std::runtime_error("embedding table " + path.string() + ":" +
                                     std::to_string(lineno) + ": empty vector");
        if (table.dim == 0) table.dim = static_cast<int>(vec.size());
        if (static_cast<int>(vec.size()) != table.dim)
            throw std::runtime_error("embedding table " + path.string() + ":" +
                                     std::to_string(lineno) + ": dim " +
                                     std::to_string(vec.size()) + " != " +
                                     std::to_string(table.dim));
        double norm2 = 0.0;
        for (double v : vec) norm2 += v * v;
        if (norm2 <= 0.0)
            throw std::runtime_error("embedding table " + path.string() + ":" +
                                     std::to_string(lineno) + ": zero-norm vector for " + cls);
        table.entries[cls] = std::move(vec);
    }
    if (table.entries.empty())
        throw std::runtime_error("embedding table " + path.string() + ": no entries");
    return table;
}

void save_embedding_table(const EmbeddingTable& table, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write embedding table: " + path.string());
    if (!table.source.empty()) out << "# source: " << table.source << "\n";
    out.precision(9);
    for (const auto& [cls, vec] : table.entries) {
        out << cls << "\t";
        for (std::size_t i = 0; i < vec.size(); ++i) out << (i ? "," : "") << vec[i];
        out << "\n";
    }
}

namespace {

unsigned long long fnv1a64(const std::string& s, unsigned long long h = 1469598103934665603ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

unsigned long long split_content_hash(const SplitSpec& split) {
    unsigned long long h = 1469598103934665603ull;
    h = fnv1a64("[train]", h);
    for (const auto& c : split.train_classes) h = fnv1a64(c + "\n", h);
    h = fnv1a64("[test]", h);
    for (const auto& c : split.test_classes) h = fnv1a64(c + "\n", h);
    return h;
}

unsigned long long embedding_table_hash(const EmbeddingTable& table) {
    unsigned long long h = 1469598103934665603ull;
    for (const auto& [cls, vec] : table.entries) {
        h = fnv1a64(cls, h);
        for (double v : vec) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.9g", v);
            h = fnv1a64(buf, h);
        }
    }
    return h;
}

}  // namespace afford::splits
