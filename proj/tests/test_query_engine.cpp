#include <doctest.h>

#include <random>

#include "sheetid/error.hpp"
#include "sheetid/query_engine.hpp"
#include "support/oracle.hpp"
#include "support/random_corpus.hpp"

using namespace sheetid;

namespace {

std::vector<BootlegWord> words(std::initializer_list<std::uint64_t> values)
{
    std::vector<BootlegWord> out;
    for (auto v : values) {
        out.push_back(BootlegWord{v});
    }
    return out;
}

std::vector<std::vector<std::uint64_t>> grams(const std::vector<QueryFingerprint>& fps)
{
    std::vector<std::vector<std::uint64_t>> out;
    for (const auto& fp : fps) {
        std::vector<std::uint64_t> g;
        for (auto w : fp.key.words()) {
            g.push_back(w);
        }
        out.push_back(std::move(g));
    }
    return out;
}

std::vector<oracle::RefPieceScore> as_ref(const RankedResult& r)
{
    std::vector<oracle::RefPieceScore> out;
    for (const auto& s : r.ranking) {
        out.push_back({s.piece_id, s.score});
    }
    return out;
}

std::vector<oracle::RefFingerprint> to_ref(const std::vector<QueryFingerprint>& fps)
{
    std::vector<oracle::RefFingerprint> out;
    for (const auto& fp : fps) {
        oracle::RefFingerprint r{fp.start, {}, fp.count, fp.forced};
        for (auto w : fp.key.words()) {
            r.words.push_back(w);
        }
        out.push_back(std::move(r));
    }
    return out;
}

constexpr std::uint64_t x1 = 1, x2 = 2, x3 = 3, x4 = 4, x5 = 5, x6 = 6;

IndexBundle worked_bundle()
{
    CorpusBuilder b;
    b.piece(1).pdf(1, {x1, x2, x3, x4, x5, x6});
    b.piece(2).pdf(2, {x2}).pdf(3, {x2});
    b.piece(3).pdf(4, {x4, x5}).pdf(5, {x4, x5});
    return build_bundle(std::move(b).build(), 4);
}

} // namespace

TEST_CASE("dynamic fingerprints on the worked example with gamma 2")
{
    const IndexBundle bundle = worked_bundle();
    const auto q = words({x1, x2, x3, x4, x5, x6});
    const auto fps = make_dynamic_fingerprints(q, bundle, SearchConfig::dynamic(2, 4));
    const std::vector<std::vector<std::uint64_t>> expected{{x1}, {x2, x3}, {x3}, {x4, x5, x6}, {x5, x6}, {x6}};
    CHECK(grams(fps) == expected);
    for (std::size_t i = 0; i < fps.size(); ++i) {
        CHECK(fps[i].start == i);
        CHECK(fps[i].count == 1);
        CHECK_FALSE(fps[i].forced);
    }
}

TEST_CASE("all-unique words give 1-gram fingerprints")
{
    CorpusBuilder b;
    b.piece(1).pdf(1, {10, 20, 30, 40});
    const IndexBundle bundle = build_bundle(std::move(b).build());
    const auto fps = make_dynamic_fingerprints(words({10, 20, 30, 40}), bundle, SearchConfig::dynamic(1, 4));
    CHECK(grams(fps) == std::vector<std::vector<std::uint64_t>>{{10}, {20}, {30}, {40}});
}

TEST_CASE("last word of a common run is emitted at the length cap")
{
    CorpusBuilder b;
    b.piece(1).pdf(1, {7, 7, 7, 7, 7});
    const IndexBundle bundle = build_bundle(std::move(b).build());
    const auto fps = make_dynamic_fingerprints(words({7, 7}), bundle, SearchConfig::dynamic(2, 4));
    REQUIRE(fps.size() == 2);
    // (7,7) occurs 4 times and (7) 5 times; both exceed gamma.
    CHECK(fps[0].key.n() == 2);
    CHECK(fps[0].forced);
    CHECK(fps[0].count == 4);
    CHECK(fps[1].key.n() == 1);
    CHECK(fps[1].forced);
    CHECK(fps[1].count == 5);
}

TEST_CASE("fixed fingerprints")
{
    const auto q = words({1, 2, 3, 4});
    CHECK(grams(make_fixed_fingerprints(q, 2)) == std::vector<std::vector<std::uint64_t>>{{1, 2}, {2, 3}, {3, 4}});
    CHECK(make_fixed_fingerprints(q, 4).size() == 1);
    CHECK(make_fixed_fingerprints(q, 5).empty());
    CHECK(make_fixed_fingerprints({}, 1).empty());
}

TEST_CASE("exact excerpt scores its length")
{
    CorpusBuilder b;
    b.piece(1).pdf(1, {9, 1, 2, 3, 9});
    b.piece(2).pdf(2, {3, 2, 1});
    const IndexBundle bundle = build_bundle(std::move(b).build());
    const RankedResult r = search(words({1, 2, 3}), bundle, SearchConfig::fixed(1));
    REQUIRE(r.ranking.size() == 2);
    CHECK(r.ranking[0].piece_id == 1);
    CHECK(r.ranking[0].score == 3);
    CHECK(r.ranking[1].score == 1);
}

TEST_CASE("matches at different relative offsets land in different bins")
{
    // Query (a,b): a at db offset 0, b at db offset 5. Relative offsets 0 and 4.
    CorpusBuilder b;
    b.piece(1).pdf(1, {100, 8, 8, 8, 8, 200});
    const IndexBundle bundle = build_bundle(std::move(b).build());
    const auto q = words({100, 200});
    CHECK(search(q, bundle, SearchConfig::fixed(1)).ranking[0].score == 1);
    SearchConfig wide = SearchConfig::fixed(1);
    wide.bin_width = 8;
    CHECK(search(q, bundle, wide).ranking[0].score == 2);
}

TEST_CASE("negative relative offsets use floor binning")
{
    static_assert(floor_div(-1, 4) == -1);
    static_assert(floor_div(-4, 4) == -1);
    static_assert(floor_div(-5, 4) == -2);
    static_assert(floor_div(3, 4) == 0);
    // Word at db offset 0 matched from query offset 1 (r = -1) and
    // from query offset 3 (r = -3): same bin at width 4, not at width 2.
    CorpusBuilder b;
    b.piece(1).pdf(1, {50, 51});
    const IndexBundle bundle = build_bundle(std::move(b).build());
    const auto q = words({9, 50, 9, 50});
    SearchConfig cfg = SearchConfig::fixed(1);
    cfg.bin_width = 4;
    CHECK(search(q, bundle, cfg).ranking[0].score == 2);
    cfg.bin_width = 2;
    CHECK(search(q, bundle, cfg).ranking[0].score == 1);
}

TEST_CASE("no matches rank every piece by ascending id")
{
    CorpusBuilder b;
    b.piece(30).pdf(1, {1});
    b.piece(10).pdf(2, {2});
    b.piece(20).pdf(3, {3});
    const IndexBundle bundle = build_bundle(std::move(b).build());
    for (const auto& q : {words({}), words({99, 98})}) {
        const RankedResult r = search(q, bundle, SearchConfig::dynamic());
        REQUIRE(r.ranking.size() == 3);
        CHECK(r.ranking[0].piece_id == 10);
        CHECK(r.ranking[1].piece_id == 20);
        CHECK(r.ranking[2].piece_id == 30);
        for (const auto& s : r.ranking) {
            CHECK(s.score == 0);
        }
    }
}

TEST_CASE("rank_of breaks ties by piece id")
{
    RankedResult r;
    r.ranking = {{7, 0, 5}, {9, 1, 5}, {3, 2, 2}};
    CHECK(rank_of(r, 7) == 1);
    CHECK(rank_of(r, 9) == 2);
    CHECK(rank_of(r, 3) == 3);
    CHECK_THROWS_AS((void)rank_of(r, 4), UsageError);
}

TEST_CASE("search config validation")
{
    const IndexBundle bundle = worked_bundle();
    CHECK_THROWS_AS(SearchConfig::fixed(5).validate(bundle), IndexAbsentError);
    CHECK_THROWS_AS(SearchConfig::dynamic(10, 5).validate(bundle), IndexAbsentError);
    CHECK_THROWS_AS(SearchConfig::fixed(0).validate(bundle), UsageError);
    SearchConfig zero_bin;
    zero_bin.bin_width = 0;
    CHECK_THROWS_AS(zero_bin.validate(bundle), UsageError);
    SearchConfig bad_exclude;
    bad_exclude.exclude_pdf = 99;
    CHECK_THROWS_AS(bad_exclude.validate(bundle), UsageError);

    SearchConfig cfg;
    parse_mode("fixed:3", cfg);
    CHECK(cfg.mode == SearchMode::fixed);
    CHECK(cfg.fixed_n == 3);
    CHECK(cfg.mode_string() == "fixed:3");
    parse_mode("dynamic", cfg);
    CHECK(cfg.mode == SearchMode::dynamic);
    CHECK_THROWS_AS(parse_mode("fixed:", cfg), UsageError);
    CHECK_THROWS_AS(parse_mode("fixed:x", cfg), UsageError);
    CHECK_THROWS_AS(parse_mode("static", cfg), UsageError);
}

TEST_CASE("property: engine agrees with brute force on random corpora")
{
    std::mt19937_64 rng(777);
    const std::uint64_t gammas[] = {1, 2, 5, kUnboundedGamma};
    for (int trial = 0; trial < 40; ++trial) {
        const Corpus corpus = sheetid::testing::random_corpus(rng);
        const IndexBundle bundle = build_bundle(corpus, 4);
        const auto pdfs = oracle::raw_corpus(corpus);
        for (int qi = 0; qi < 3; ++qi) {
            const auto q = sheetid::testing::random_query(rng, corpus);
            const auto raw = oracle::raw(q);
            const std::int64_t bin = 1 + static_cast<std::int64_t>(rng() % 3);
            for (std::size_t n = 1; n <= 4; ++n) {
                SearchConfig cfg = SearchConfig::fixed(n);
                cfg.bin_width = bin;
                const auto expected = oracle::score(oracle::fixed_fingerprints(raw, n), pdfs, corpus.manifest, bin);
                CHECK(as_ref(search(q, bundle, cfg)) == expected);
            }
            for (auto gamma : gammas) {
                SearchConfig cfg = SearchConfig::dynamic(gamma, 4);
                cfg.bin_width = bin;
                const auto ref_fps = oracle::dynamic_fingerprints(raw, pdfs, gamma, 4);
                const auto fps = to_ref(make_dynamic_fingerprints(q, bundle, cfg));
                REQUIRE(fps.size() == ref_fps.size());
                for (std::size_t i = 0; i < fps.size(); ++i) {
                    CHECK(fps[i].start == ref_fps[i].start);
                    CHECK(fps[i].words == ref_fps[i].words);
                    CHECK(fps[i].count == ref_fps[i].count);
                    CHECK(fps[i].forced == ref_fps[i].forced);
                }
                CHECK(as_ref(search(q, bundle, cfg)) == oracle::score(ref_fps, pdfs, corpus.manifest, bin));
            }
        }
    }
}

TEST_CASE("property: each dynamic fingerprint is the shortest qualifying n-gram")
{
    std::mt19937_64 rng(31337);
    for (int trial = 0; trial < 40; ++trial) {
        const Corpus corpus = sheetid::testing::random_corpus(rng);
        const IndexBundle bundle = build_bundle(corpus, 4);
        const auto q = sheetid::testing::random_query(rng, corpus);
        const std::uint64_t gamma = 1 + rng() % 4;
        const auto fps = make_dynamic_fingerprints(q, bundle, SearchConfig::dynamic(gamma, 4));
        REQUIRE(fps.size() == q.size());
        for (const auto& fp : fps) {
            const std::size_t cap = std::min<std::size_t>(4, q.size() - fp.start);
            CHECK(fp.key.n() <= cap);
            if (!fp.forced) {
                CHECK(fp.count <= gamma);
            } else {
                CHECK(fp.key.n() == cap);
            }
            for (std::size_t m = 1; m < fp.key.n(); ++m) {
                const FingerprintKey shorter(std::span<const BootlegWord>(q).subspan(fp.start, m));
                CHECK(bundle.count(shorter) > gamma);
            }
        }
    }
}

TEST_CASE("property: excluding a PDF matches a physical rebuild without it")
{
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 30; ++trial) {
        const Corpus corpus = sheetid::testing::random_corpus(rng);
        const IndexBundle full = build_bundle(corpus, 4);
        const auto victim = static_cast<PdfIndex>(rng() % corpus.scores.size());

        // Rebuild with the victim's words removed; manifest unchanged.
        Corpus reduced = corpus;
        reduced.scores[victim].words.clear();
        const IndexBundle rebuilt = build_bundle(reduced, 4);

        const auto q = sheetid::testing::random_query(rng, corpus);
        for (auto cfg : {SearchConfig::fixed(1), SearchConfig::fixed(3), SearchConfig::dynamic(2, 4),
                         SearchConfig::dynamic(kUnboundedGamma, 4)}) {
            const RankedResult physical = search(q, rebuilt, cfg);
            cfg.exclude_pdf = victim;
            const RankedResult logical = search(q, full, cfg);
            CHECK(logical.ranking == physical.ranking);
            CHECK(logical.diagnostics.postings == physical.diagnostics.postings);
        }
    }
}

TEST_CASE("search is deterministic")
{
    std::mt19937_64 rng(8);
    const Corpus corpus = sheetid::testing::random_corpus(rng);
    const IndexBundle bundle = build_bundle(corpus, 4, 3);
    const auto q = sheetid::testing::random_query(rng, corpus);
    const RankedResult first = search(q, bundle, SearchConfig::dynamic(2));
    for (int i = 0; i < 5; ++i) {
        CHECK(search(q, bundle, SearchConfig::dynamic(2)).ranking == first.ranking);
    }
}
