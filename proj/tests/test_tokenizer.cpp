#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "densecrab/error.hpp"
#include "densecrab/rng.hpp"
#include "densecrab/tokenizer.hpp"

using namespace densecrab;

namespace {

Corpus corpus_of(std::initializer_list<std::string> texts) {
    Corpus corpus("test");
    int i = 0;
    for (const std::string& text : texts) {
        corpus.add(Document{"d" + std::to_string(++i), "", text});
    }
    return corpus;
}

}  // namespace

TEST_CASE("split_words lowercases and splits on whitespace and punctuation", "[tokenizer]") {
    REQUIRE(split_words("Hello, World!") == std::vector<std::string>{"hello", "world"});
    REQUIRE(split_words("don't-stop now") == std::vector<std::string>{"don", "t", "stop", "now"});
    REQUIRE(split_words("t03w17 stays") == std::vector<std::string>{"t03w17", "stays"});
    REQUIRE(split_words("   ") == std::vector<std::string>{});
}

TEST_CASE("build_vocab keeps the most frequent words", "[tokenizer]") {
    SECTION("frequency then lexicographic order") {
        const Vocabulary vocab = Vocabulary::build(corpus_of({"a a b"}), 10);
        REQUIRE(vocab.size() == kNumReservedIds + 2);
        REQUIRE(vocab.id_of("a") == 3);  // freq 2 ranks before freq 1
        REQUIRE(vocab.id_of("b") == 4);
    }

    SECTION("max_size caps the word count") {
        const Vocabulary vocab = Vocabulary::build(corpus_of({"x y", "y z"}), 4);
        REQUIRE(vocab.size() == 4);
        REQUIRE(vocab.id_of("y") == 3);  // the most frequent word survives
        REQUIRE(vocab.id_of("x") == kUnkId);
        REQUIRE(vocab.id_of("z") == kUnkId);
    }

    SECTION("ties break lexicographically") {
        const Vocabulary vocab = Vocabulary::build(corpus_of({"beta alpha"}), 5);
        REQUIRE(vocab.id_of("alpha") == 3);
        REQUIRE(vocab.id_of("beta") == 4);
    }

    SECTION("preconditions") {
        REQUIRE_THROWS_AS(Vocabulary::build(Corpus("empty"), 10), Error);
        REQUIRE_THROWS_AS(Vocabulary::build(corpus_of({"a"}), 3), Error);
    }
}

TEST_CASE("build_vocab is stable under corpus permutation", "[tokenizer]") {
    Rng rng(3);
    std::vector<std::string> texts;
    for (int i = 0; i < 30; ++i) {
        std::string text;
        const int len = 3 + static_cast<int>(rng.below(10));
        for (int w = 0; w < len; ++w) {
            if (w > 0) text.push_back(' ');
            text += "w" + std::to_string(rng.below(15));
        }
        texts.push_back(text);
    }

    Corpus forward("fwd"), reversed("rev");
    for (std::size_t i = 0; i < texts.size(); ++i) {
        forward.add(Document{"f" + std::to_string(i), "", texts[i]});
        reversed.add(Document{"r" + std::to_string(i), "", texts[texts.size() - 1 - i]});
    }

    const Vocabulary v1 = Vocabulary::build(forward, 12);
    const Vocabulary v2 = Vocabulary::build(reversed, 12);
    REQUIRE(v1.size() == v2.size());
    for (std::uint32_t id = kNumReservedIds; id < v1.size(); ++id) {
        REQUIRE(v1.token_of(id) == v2.token_of(id));
    }
}

TEST_CASE("tokenize maps words and truncates", "[tokenizer]") {
    const Vocabulary vocab = Vocabulary::from_tokens({"a", "b"});

    SECTION("lowercasing applies") {
        REQUIRE(tokenize(vocab, "A b") == TokenSequence{3, 4});
    }

    SECTION("out-of-vocabulary becomes <unk>") {
        REQUIRE(tokenize(vocab, "q") == TokenSequence{kUnkId});
    }

    SECTION("truncation to max_len") {
        std::string text;
        for (int i = 0; i < 300; ++i) text += "a ";
        REQUIRE(tokenize(vocab, text, 256).size() == 256);
    }

    SECTION("no token id exceeds the vocabulary") {
        Rng rng(9);
        for (int trial = 0; trial < 50; ++trial) {
            std::string text;
            for (int w = 0; w < 20; ++w) text += "w" + std::to_string(rng.below(40)) + " ";
            for (std::uint32_t id : tokenize(vocab, text)) REQUIRE(id < vocab.size());
        }
    }

    SECTION("empty text gives an empty sequence") {
        REQUIRE(tokenize(vocab, "").empty());
    }
}

TEST_CASE("vocabulary persists as one token per line", "[tokenizer][io]") {
    const auto dir = std::filesystem::temp_directory_path() / "densecrab_tokenizer_test";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "vocab.txt").string();

    const Vocabulary vocab = Vocabulary::build(corpus_of({"carrot apple banana apple banana apple"}), 10);
    vocab.save(path);

    SECTION("round-trips") {
        const Vocabulary back = Vocabulary::load(path);
        REQUIRE(back.size() == vocab.size());
        for (std::uint32_t id = 0; id < vocab.size(); ++id) {
            REQUIRE(back.token_of(id) == vocab.token_of(id));
        }
    }

    SECTION("line number + 3 is the id, header comments are skipped") {
        std::ifstream in(path);
        std::string line;
        std::vector<std::string> token_lines;
        while (std::getline(in, line)) {
            if (!line.empty() && line[0] == '#') continue;
            token_lines.push_back(line);
        }
        REQUIRE(token_lines.size() == vocab.size() - kNumReservedIds);
        for (std::size_t i = 0; i < token_lines.size(); ++i) {
            REQUIRE(vocab.id_of(token_lines[i]) == i + kNumReservedIds);
        }
    }

    SECTION("duplicate token lines are rejected") {
        const std::string dup_path = (dir / "dup.txt").string();
        std::ofstream(dup_path) << "apple\napple\n";
        REQUIRE_THROWS_AS(Vocabulary::load(dup_path), Error);
    }
}
