#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "densecrab/corpus.hpp"

namespace densecrab {

inline constexpr std::uint32_t kPadId = 0;
inline constexpr std::uint32_t kUnkId = 1;
inline constexpr std::uint32_t kMaskId = 2;
inline constexpr std::uint32_t kNumReservedIds = 3;

using TokenSequence = std::vector<std::uint32_t>;

/// Lowercased words split on whitespace and punctuation. Shared by the
/// vocabulary builder, the tokenizer and BM25 query processing.
std::vector<std::string> split_words(const std::string& text);

/// Word-level vocabulary with reserved ids 0=<pad>, 1=<unk>, 2=<mask>.
/// Immutable after construction.
class Vocabulary {
  public:
    /// Keeps the (max_size - 3) most frequent words, ties broken
    /// lexicographically; ids follow that order starting at 3.
    static Vocabulary build(const Corpus& corpus, std::size_t max_size);

    /// Tokens become ids 3, 4, ... in the given order.
    static Vocabulary from_tokens(std::vector<std::string> tokens);

    std::uint32_t id_of(const std::string& token) const;  // kUnkId when absent
    const std::string& token_of(std::uint32_t id) const;  // throws on out-of-range

    /// Total id count including the 3 reserved ids.
    std::size_t size() const { return id_to_token_.size(); }
    std::size_t num_words() const { return size() - kNumReservedIds; }

    void save(const std::string& path) const;
    static Vocabulary load(const std::string& path);

  private:
    Vocabulary();
    std::unordered_map<std::string, std::uint32_t> token_to_id_;
    std::vector<std::string> id_to_token_;
};

/// Maps text to token ids; out-of-vocabulary words become <unk>; the output
/// is truncated to max_len.
TokenSequence tokenize(const Vocabulary& vocab, const std::string& text, std::size_t max_len = 256);

}  // namespace densecrab
