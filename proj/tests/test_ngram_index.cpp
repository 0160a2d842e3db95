#include <doctest.h>

#include <random>

#include "sheetid/error.hpp"
#include "sheetid/ngram_index.hpp"
#include "support/oracle.hpp"
#include "support/random_corpus.hpp"

using namespace sheetid;

namespace {

constexpr std::uint64_t a = 11, b = 22, c = 33;

FingerprintKey key(std::initializer_list<std::uint64_t> words)
{
    std::vector<BootlegWord> w;
    for (auto v : words) {
        w.push_back(BootlegWord{v});
    }
    return FingerprintKey(w);
}

std::vector<Posting> to_vector(std::span<const Posting> s) { return {s.begin(), s.end()}; }

} // namespace

TEST_CASE("3-gram of a 3-word score is a single key at offset 0")
{
    CorpusBuilder builder;
    builder.piece(1).pdf(1, {a, b, c});
    const Corpus corpus = std::move(builder).build();
    const NGramIndex index = build_index(corpus.scores, 3);
    CHECK(index.key_count() == 1);
    CHECK(to_vector(index.lookup(key({a, b, c}))) == std::vector<Posting>{{0, 0}});
}

TEST_CASE("repeated word collects every offset")
{
    CorpusBuilder builder;
    builder.piece(1).pdf(1, {a, a, a});
    const Corpus corpus = std::move(builder).build();
    const NGramIndex index = build_index(corpus.scores, 1);
    CHECK(to_vector(index.lookup(key({a}))) == std::vector<Posting>{{0, 0}, {0, 1}, {0, 2}});
    CHECK(index.count(key({a})) == 3);
}

TEST_CASE("two PDFs [a,b] and [b,a] give disjoint 2-gram keys")
{
    CorpusBuilder builder;
    builder.piece(1).pdf(1, {a, b});
    builder.piece(2).pdf(2, {b, a});
    const Corpus corpus = std::move(builder).build();
    const NGramIndex index = build_index(corpus.scores, 2);

    const auto expected = oracle::enumerate_ngrams(oracle::raw_corpus(corpus), 2);
    REQUIRE(expected.size() == 2);
    CHECK(index.key_count() == 2);
    CHECK(to_vector(index.lookup(key({a, b}))) == std::vector<Posting>{{0, 0}});
    CHECK(to_vector(index.lookup(key({b, a}))) == std::vector<Posting>{{1, 0}});
    CHECK(index.count(key({a, b})) == 1);
    CHECK(index.count(key({a, a})) == 0);
    CHECK(index.lookup(key({c, c})).empty());
}

TEST_CASE("lookup with the wrong n is a usage error")
{
    CorpusBuilder builder;
    builder.piece(1).pdf(1, {a, b});
    const Corpus corpus = std::move(builder).build();
    const NGramIndex index = build_index(corpus.scores, 2);
    CHECK_THROWS_AS((void)index.lookup(key({a})), UsageError);
    CHECK_THROWS_AS((void)build_index(corpus.scores, 0), UsageError);
}

TEST_CASE("short PDFs contribute nothing")
{
    CorpusBuilder builder;
    builder.piece(1).pdf(1, {a}).pdf(2, {}).pdf(3, {a, b, c});
    const Corpus corpus = std::move(builder).build();
    const NGramIndex index = build_index(corpus.scores, 2);
    CHECK(index.posting_count() == 2);
    for (const auto& k : index.keys()) {
        for (const Posting& p : index.lookup(k)) {
            CHECK(p.pdf == 2);
        }
    }
}

TEST_CASE("build_bundle holds indexes 1..n_max")
{
    CorpusBuilder builder;
    builder.piece(1).pdf(1, {a, b, c, a});
    const Corpus corpus = std::move(builder).build();

    const IndexBundle four = build_bundle(corpus, 4);
    CHECK(four.n_max() == 4);
    for (std::size_t n = 1; n <= 4; ++n) {
        CHECK(four.has_index(n));
        CHECK(four.index(n).n() == n);
    }
    CHECK_FALSE(four.has_index(5));
    CHECK_THROWS_AS((void)four.index(5), IndexAbsentError);
    CHECK(four.params().n_max == 4);
    CHECK(four.params().gamma_default == kDefaultGamma);
    CHECK(four.params().corpus_checksum == corpus_checksum(corpus));

    const IndexBundle one = build_bundle(corpus, 1);
    CHECK(one.n_max() == 1);
    CHECK_THROWS_AS((void)one.index(2), IndexAbsentError);

    CHECK_THROWS_AS((void)build_bundle(corpus, 0), UsageError);
    CHECK_THROWS_AS((void)build_bundle(corpus, 6), UsageError);
    CHECK(build_bundle(corpus, 5).n_max() == 5);
}

TEST_CASE("property: index matches brute-force enumeration on random corpora")
{
    std::mt19937_64 rng(1234);
    for (int trial = 0; trial < 60; ++trial) {
        const Corpus corpus = sheetid::testing::random_corpus(rng);
        const auto pdfs = oracle::raw_corpus(corpus);
        const IndexBundle bundle = build_bundle(corpus, 4, 1 + trial % 3);
        for (std::size_t n = 1; n <= 4; ++n) {
            const NGramIndex& index = bundle.index(n);
            const auto expected = oracle::enumerate_ngrams(pdfs, n);
            CHECK(index.key_count() == expected.size());

            // Posting count conservation.
            std::size_t closed_form = 0;
            for (const auto& w : pdfs) {
                closed_form += w.size() >= n ? w.size() - n + 1 : 0;
            }
            CHECK(index.posting_count() == closed_form);

            for (const auto& [gram, occ] : expected) {
                std::vector<BootlegWord> words;
                for (auto v : gram) {
                    words.push_back(BootlegWord{v});
                }
                const auto got = index.lookup(FingerprintKey(words));
                REQUIRE(got.size() == occ.size());
                for (std::size_t i = 0; i < occ.size(); ++i) {
                    CHECK(got[i].pdf == occ[i].pdf);
                    CHECK(got[i].offset == occ[i].offset);
                }
            }
        }
    }
}

TEST_CASE("build result does not depend on thread count")
{
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 10; ++trial) {
        const Corpus corpus = sheetid::testing::random_corpus(rng);
        const IndexBundle single = build_bundle(corpus, 4, 1);
        for (std::size_t threads : {2u, 3u, 7u}) {
            CHECK(build_bundle(corpus, 4, threads) == single);
        }
    }
}

TEST_CASE("reconstruct_scores recovers the corpus from the 1-gram index")
{
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const Corpus corpus = sheetid::testing::random_corpus(rng);
        const auto rebuilt = reconstruct_scores(build_bundle(corpus, 1));
        REQUIRE(rebuilt.size() == corpus.scores.size());
        for (std::size_t i = 0; i < rebuilt.size(); ++i) {
            CHECK(rebuilt[i].words == corpus.scores[i].words);
        }
    }
}
