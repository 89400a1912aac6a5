#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace afford::splits {

/// Lowercase, collapse runs of whitespace/underscores to single spaces, trim.
std::string normalize_class_name(const std::string& name);

struct SplitSpec {
    std::string name;
    std::set<std::string> train_classes;
    std::set<std::string> test_classes;
    long long seed = -1;  // < 0: not seeded (canonical/hand-written)

    void validate() const;  // disjoint, both sides non-empty
};

struct EmbeddingTable {
    std::map<std::string, std::vector<double>> entries;
    int dim = 0;
    std::string source;

    bool contains(const std::string& cls) const { return entries.count(cls) > 0; }
};

/// Cosine similarity of two class embeddings; throws naming the class when
/// one is missing from the table.
double class_similarity(const std::string& c, const std::string& c_prime,
                        const EmbeddingTable& table);

/// Split difficulty:
///   D = 1 - (1/|C_test|) * sum_{c in C_test} max_{c' in C_train} cos(c, c')
/// The max/"1 -" structure only orders splits correctly under a similarity
/// reading of the per-class term, so cosine similarity it is.
double split_difficulty(const SplitSpec& split, const EmbeddingTable& table);

/// Seeded partition: class names are sorted ascending, Fisher-Yates shuffled
/// with mt19937_64(seed) (at index i from the back, j = gen() % (i+1)), and
/// the first floor(n * test_fraction) shuffled names become the test side.
SplitSpec build_random_split(const std::set<std::string>& classes, double test_fraction,
                             unsigned long long seed, const std::string& name = "random");

/// The benchmark's original unseen-object split (33 train / 14 test) and the
/// stricter random re-split (28 train / 22 test). Lists ship with the
/// library; no files needed.
std::pair<SplitSpec, SplitSpec> load_canonical_splits();

// SplitSpec files: plain text, one class per line, "[train]" / "[test]"
// section headers; '#' starts a comment.
SplitSpec load_split_file(const std::filesystem::path& path);
void save_split_file(const SplitSpec& split, const std::filesystem::path& path);

// EmbeddingTable file: one record per line, "class_name<TAB>f1,f2,...".
// Dim inferred from the first record and enforced; zero-norm vectors rejected.
EmbeddingTable load_embedding_table(const std::filesystem::path& path);
void save_embedding_table(const EmbeddingTable& table, const std::filesystem::path& path);

/// FNV-1a 64 over the normalized split content (name-independent).
unsigned long long split_content_hash(const SplitSpec& split);
unsigned long long embedding_table_hash(const EmbeddingTable& table);

}  // namespace afford::splits
