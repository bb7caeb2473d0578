#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "densecrab/corpus.hpp"
#include "densecrab/error.hpp"

using namespace densecrab;

namespace {

std::string temp_path(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "densecrab_corpus_test";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

std::string write_file(const std::string& name, const std::string& content) {
    const std::string path = temp_path(name);
    std::ofstream out(path);
    out << content;
    return path;
}

Corpus singleton_corpus(const std::string& id, const std::string& text) {
    Corpus corpus(id);
    corpus.add(Document{id, "", text});
    return corpus;
}

}  // namespace

TEST_CASE("load_corpus reads JSONL in order", "[corpus]") {
    const std::string path = write_file("three.jsonl",
                                        R"({"_id": "d1", "text": "alpha beta"})"
                                        "\n"
                                        R"({"_id": "d2", "title": "t", "text": "gamma"})"
                                        "\n"
                                        R"({"_id": "d3", "text": "delta"})"
                                        "\n");
    const Corpus corpus = load_corpus(path);
    REQUIRE(corpus.size() == 3);
    REQUIRE(corpus[0].id == "d1");
    REQUIRE(corpus[1].id == "d2");
    REQUIRE(corpus[1].title == "t");
    REQUIRE(corpus[2].id == "d3");
    REQUIRE(corpus.at("d2").text == "gamma");
    REQUIRE(corpus.find("nope") == nullptr);
}

TEST_CASE("load_corpus rejects duplicates and malformed lines", "[corpus]") {
    SECTION("duplicate id names the id") {
        const std::string path = write_file("dup.jsonl",
                                            R"({"_id": "d1", "text": "a"})"
                                            "\n"
                                            R"({"_id": "d1", "text": "b"})"
                                            "\n");
        try {
            load_corpus(path);
            FAIL("expected an error");
        } catch (const Error& e) {
            REQUIRE(e.kind() == ErrKind::parse);
            REQUIRE(std::string(e.what()).find("d1") != std::string::npos);
        }
    }

    SECTION("malformed line names the line number") {
        const std::string path = write_file("bad.jsonl",
                                            R"({"_id": "d1", "text": "a"})"
                                            "\nnot json\n");
        try {
            load_corpus(path);
            FAIL("expected an error");
        } catch (const Error& e) {
            REQUIRE(e.kind() == ErrKind::parse);
            REQUIRE(std::string(e.what()).find(":2") != std::string::npos);
        }
    }

    SECTION("whitespace-only text is rejected") {
        const std::string path = write_file("empty_text.jsonl", R"({"_id": "d1", "text": "  "})"
                                                                "\n");
        REQUIRE_THROWS_AS(load_corpus(path), Error);
    }

    SECTION("empty file gives an empty corpus") {
        const std::string path = write_file("empty.jsonl", "");
        REQUIRE(load_corpus(path).empty());
    }

    SECTION("missing file") {
        REQUIRE_THROWS_AS(load_corpus(temp_path("missing.jsonl")), Error);
    }
}

TEST_CASE("corpus write/load round-trip", "[corpus]") {
    Corpus corpus("src");
    corpus.add(Document{"a", "first title", "first text"});
    corpus.add(Document{"b", "", "second text with \"quotes\" and \t tabs"});
    corpus.add(Document{"c", "unicode \xc3\xa9", "caf\xc3\xa9 docs"});

    const std::string path = temp_path("roundtrip.jsonl");
    write_corpus(corpus, path);
    const Corpus back = load_corpus(path);

    REQUIRE(back.size() == corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        REQUIRE(back[i].id == corpus[i].id);
        REQUIRE(back[i].title == corpus[i].title);
        REQUIRE(back[i].text == corpus[i].text);
    }
}

TEST_CASE("load_qrels parses the BEIR TSV shape", "[corpus]") {
    SECTION("single row") {
        const Qrels qrels = load_qrels(write_file("one.tsv", "q1\td1\t1\n"));
        REQUIRE(qrels.grade("q1", "d1") == 1);
        REQUIRE(qrels.grade("q1", "other") == 0);
        REQUIRE(qrels.grade("other", "d1") == 0);
    }

    SECTION("header plus two rows") {
        const Qrels qrels =
            load_qrels(write_file("hdr.tsv", "query-id\tcorpus-id\tscore\nq1\td1\t2\nq2\td2\t1\n"));
        REQUIRE(qrels.num_queries() == 2);
        REQUIRE(qrels.grade("q1", "d1") == 2);
        REQUIRE(qrels.grade("q2", "d2") == 1);
    }

    SECTION("repeated pair keeps the last grade") {
        const Qrels qrels = load_qrels(write_file("last.tsv", "q1\td1\t1\nq1\td1\t2\n"));
        REQUIRE(qrels.grade("q1", "d1") == 2);
    }

    SECTION("non-integer grade names the line") {
        try {
            load_qrels(write_file("badgrade.tsv", "q1\td1\tx\n"));
            FAIL("expected an error");
        } catch (const Error& e) {
            REQUIRE(e.kind() == ErrKind::parse);
            REQUIRE(std::string(e.what()).find(":1") != std::string::npos);
        }
    }

    SECTION("negative grade is rejected") {
        REQUIRE_THROWS_AS(load_qrels(write_file("neg.tsv", "q1\td1\t-1\n")), Error);
    }
}

TEST_CASE("sample_batch single mode", "[corpus]") {
    const Corpus only = singleton_corpus("d1", "text");
    SamplingStrategy strategy{SamplingMode::single, {&only}};
    Rng rng(5);
    const auto batch = sample_batch(strategy, 4, 0, rng);
    REQUIRE(batch.size() == 4);
    for (const Document* doc : batch) REQUIRE(doc->id == "d1");
}

TEST_CASE("sample_batch fifty-fifty alternates whole batches", "[corpus]") {
    Corpus a("A"), b("B");
    for (int i = 0; i < 5; ++i) {
        a.add(Document{"a" + std::to_string(i), "", "a text"});
        b.add(Document{"b" + std::to_string(i), "", "b text"});
    }
    SamplingStrategy strategy{SamplingMode::fifty_fifty, {&a, &b}};
    Rng rng(6);

    const auto batch0 = sample_batch(strategy, 8, 0, rng);
    const auto batch1 = sample_batch(strategy, 8, 1, rng);
    for (const Document* doc : batch0) REQUIRE(doc->id[0] == 'a');
    for (const Document* doc : batch1) REQUIRE(doc->id[0] == 'b');

    SECTION("requires exactly two sources") {
        SamplingStrategy bad{SamplingMode::fifty_fifty, {&a}};
        REQUIRE_THROWS_AS(sample_batch(bad, 4, 0, rng), Error);
    }
}

TEST_CASE("sample_batch uniform weights sources by size", "[corpus]") {
    Corpus big("big"), small("small");
    for (int i = 0; i < 9; ++i) big.add(Document{"g" + std::to_string(i), "", "big text"});
    small.add(Document{"s0", "", "small text"});
    SamplingStrategy strategy{SamplingMode::uniform, {&big, &small}};

    Rng rng(7);
    std::size_t from_small = 0;
    const std::size_t draws = 10000;
    const auto batch = sample_batch(strategy, draws, 0, rng);
    for (const Document* doc : batch) {
        if (doc->id[0] == 's') ++from_small;
    }
    // Binomial(10^4, 0.1): the observed fraction stays inside [0.07, 0.13]
    // with huge margin for a fixed seed.
    const double fraction = static_cast<double>(from_small) / draws;
    REQUIRE(fraction > 0.07);
    REQUIRE(fraction < 0.13);
}

TEST_CASE("sample_batch uniform chi-square over sources", "[corpus]") {
    Corpus a("a"), b("b"), c("c");
    for (int i = 0; i < 6; ++i) a.add(Document{"a" + std::to_string(i), "", "x"});
    for (int i = 0; i < 3; ++i) b.add(Document{"b" + std::to_string(i), "", "x"});
    c.add(Document{"c0", "", "x"});
    SamplingStrategy strategy{SamplingMode::uniform, {&a, &b, &c}};

    Rng rng(8);
    const std::size_t draws = 10000;
    std::size_t counts[3] = {0, 0, 0};
    for (const Document* doc : sample_batch(strategy, draws, 0, rng)) {
        counts[doc->id[0] - 'a'] += 1;
    }
    const double expected[3] = {0.6 * draws, 0.3 * draws, 0.1 * draws};
    double chi2 = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double d = counts[i] - expected[i];
        chi2 += d * d / expected[i];
    }
    // dof = 2; the p > 0.01 acceptance region is chi2 < 9.210.
    REQUIRE(chi2 < 9.210);
}

TEST_CASE("sample_batch is deterministic for a fixed seed", "[corpus]") {
    Corpus a("a");
    for (int i = 0; i < 20; ++i) a.add(Document{"d" + std::to_string(i), "", "x"});
    SamplingStrategy strategy{SamplingMode::single, {&a}};

    Rng rng1(42), rng2(42);
    const auto b1 = sample_batch(strategy, 50, 0, rng1);
    const auto b2 = sample_batch(strategy, 50, 0, rng2);
    for (std::size_t i = 0; i < b1.size(); ++i) REQUIRE(b1[i]->id == b2[i]->id);
}

TEST_CASE("sample_batch rejects empty sources", "[corpus]") {
    Corpus empty("empty");
    SamplingStrategy strategy{SamplingMode::single, {&empty}};
    Rng rng(1);
    REQUIRE_THROWS_AS(sample_batch(strategy, 4, 0, rng), Error);
}
