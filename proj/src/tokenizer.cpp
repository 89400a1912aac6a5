#include "afford/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace afford::data {

namespace {

bool is_punct(char c) {
    return c == '.' || c == ',' || c == '?' || c == '!' || c == ';' || c == ':';
}

const char* kReservedText[kNumReserved] = {"<pad>", "<bos>", "<eos>", "<unk>", kMaskTokenText};

}  // namespace

std::vector<std::string> split_tokens(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        // the mask marker survives splitting as one token
        if (text.compare(i, std::char_traits<char>::length(kMaskTokenText), kMaskTokenText) == 0) {
            flush();
            out.emplace_back(kMaskTokenText);
            i += std::char_traits<char>::length(kMaskTokenText) - 1;
            continue;
        }
        const char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            flush();
        } else if (is_punct(c)) {
            flush();
            out.emplace_back(1, c);
        } else {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    flush();
    return out;
}

Tokenizer Tokenizer::build(const std::vector<std::string>& corpus, int max_vocab) {
    Tokenizer tok;
    for (int i = 0; i < kNumReserved; ++i) {
        tok.id_to_word_.emplace_back(kReservedText[i]);
        tok.word_to_id_[kReservedText[i]] = i;
    }
    for (const auto& text : corpus) {
        for (const auto& w : split_tokens(text)) {
            if (tok.word_to_id_.count(w)) continue;
            if (static_cast<int>(tok.id_to_word_.size()) >= max_vocab)
                throw std::invalid_argument("Tokenizer: corpus exceeds max_vocab " +
                                            std::to_string(max_vocab));
            tok.word_to_id_[w] = static_cast<int>(tok.id_to_word_.size());
            tok.id_to_word_.push_back(w);
        }
    }
    return tok;
}

Tokenizer Tokenizer::from_words(const std::vector<std::string>& words) {
    if (words.size() < kNumReserved)
        throw std::invalid_argument("Tokenizer: word list misses reserved slots");
    for (int i = 0; i < kNumReserved; ++i)
        if (words[i] != kReservedText[i])
            throw std::invalid_argument("Tokenizer: reserved slot mismatch at id " +
                                        std::to_string(i));
    Tokenizer tok;
    tok.id_to_word_ = words;
    for (std::size_t i = 0; i < words.size(); ++i)
        tok.word_to_id_[words[i]] = static_cast<int>(i);
    return tok;
}

int Tokenizer::word_id(const std::string& word) const {
    auto it = word_to_id_.find(word);
    return it == word_to_id_.end() ? kUnk : it->second;
}

std::vector<int> Tokenizer::encode(const std::string& text, bool add_bos_eos) const {
    std::vector<int> ids;
    if (add_bos_eos) ids.push_back(kBos);
    for (const auto& w : split_tokens(text)) ids.push_back(word_id(w));
    if (add_bos_eos) ids.push_back(kEos);
    return ids;
}

std::string Tokenizer::decode(const std::vector<int>& ids) const {
    std::string out;
    for (int id : ids) {
        if (id == kBos || id == kEos || id == kPad) continue;
        const std::string& w =
            (id >= 0 && id < static_cast<int>(id_to_word_.size())) ? id_to_word_[id]
                                                                   : id_to_word_[kUnk];
        const bool punct = w.size() == 1 && is_punct(w[0]);
        if (!out.empty() && !punct) out.push_back(' ');
        out += w;
    }
    return out;
}

}  // namespace afford::data
