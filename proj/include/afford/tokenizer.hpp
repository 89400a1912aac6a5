#pragma once

#include <map>
#include <string>
#include <vector>

namespace afford::data {

// Reserved ids; ordinary words start after these.
enum ReservedToken : int {
    kPad = 0,
    kBos = 1,
    kEos = 2,
    kUnk = 3,
    kMask = 4,  // <mask_token>
    kNumReserved = 5,
};

inline constexpr const char* kMaskTokenText = "<mask_token>";

/// Whitespace + punctuation tokenizer over a fixed lowercased vocabulary.
/// "<mask_token>" maps to the single reserved id kMask and is never produced
/// by ordinary text. Unknown words map to kUnk.
class Tokenizer {
public:
    Tokenizer() = default;

    /// Builds the word list from a corpus (first-seen order, lowercased).
    static Tokenizer build(const std::vector<std::string>& corpus, int max_vocab = 512);

    /// encode("Hi") == {kBos, id("hi"), kEos}
    std::vector<int> encode(const std::string& text, bool add_bos_eos = true) const;
    std::string decode(const std::vector<int>& ids) const;

    int word_id(const std::string& word) const;  // kUnk when absent
    int vocab_size() const { return static_cast<int>(id_to_word_.size()); }

    const std::vector<std::string>& words() const { return id_to_word_; }
    /// Restores a tokenizer from the persisted word list (checkpoint path).
    static Tokenizer from_words(const std::vector<std::string>& words);

private:
    std::vector<std::string> id_to_word_;  // index = id; reserved slots hold markers
    std::map<std::string, int> word_to_id_;
};

/// Splits into lowercased word/punctuation tokens; "<mask_token>" stays whole.
std::vector<std::string> split_tokens(const std::string& text);

}  // namespace afford::data
