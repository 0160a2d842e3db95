#include <doctest.h>

#include <ostream>

#include <random>

#include "sheetid/core_model.hpp"
#include "sheetid/error.hpp"

using namespace sheetid;

namespace {

// Independent of std::bitset: accumulate powers of two by repeated doubling.
std::uint64_t assemble_bits(const std::bitset<kStaffPositions>& column)
{
    std::uint64_t value = 0;
    std::uint64_t place = 1;
    for (std::size_t i = 0; i < kStaffPositions; ++i) {
        if (column[i]) {
            value += place;
        }
        place *= 2;
    }
    return value;
}

} // namespace

TEST_CASE("pack_word places column index i at bit i")
{
    std::bitset<kStaffPositions> column;
    CHECK(pack_word(column).value == 0);

    column.set(0);
    CHECK(pack_word(column).value == 1);

    column.set(61);
    const std::uint64_t expected = 2305843009213693953ULL; // 2^61 + 1
    CHECK(expected == assemble_bits(column));
    CHECK(pack_word(column).value == expected);
    CHECK((pack_word(column).value >> 62) == 0);
}

TEST_CASE("unpack_word inverts pack_word")
{
    CHECK(unpack_word(BootlegWord{0}).none());

    const auto one = unpack_word(BootlegWord{1});
    CHECK(one.count() == 1);
    CHECK(one[0]);

    const auto both = unpack_word(BootlegWord{(std::uint64_t{1} << 61) | 1});
    CHECK(both.count() == 2);
    CHECK(both[0]);
    CHECK(both[61]);
}

TEST_CASE("unpack_word rejects bits 62 and 63")
{
    CHECK_THROWS_AS((void)unpack_word(BootlegWord{std::uint64_t{1} << 62}), InputError);
    CHECK_THROWS_AS((void)unpack_word(BootlegWord{std::uint64_t{1} << 63}), InputError);
    CHECK_THROWS_AS((void)make_word(~std::uint64_t{0}), InputError);
    CHECK(make_word(kWordMask).value == kWordMask);
}

TEST_CASE("pack/unpack round trip over random masks")
{
    std::mt19937_64 rng(7);
    for (int i = 0; i < 2000; ++i) {
        const std::uint64_t mask = rng() & kWordMask;
        const auto column = unpack_word(BootlegWord{mask});
        CHECK(pack_word(column).value == mask);
        CHECK(unpack_word(pack_word(column)) == column);
    }
}

TEST_CASE("FingerprintKey equality is sequence equality")
{
    const std::vector<BootlegWord> ab{{1}, {2}};
    const std::vector<BootlegWord> ba{{2}, {1}};
    const std::vector<BootlegWord> a{{1}};
    const std::vector<BootlegWord> a0{{1}, {0}};

    CHECK(FingerprintKey(ab) == FingerprintKey(ab));
    CHECK_FALSE(FingerprintKey(ab) == FingerprintKey(ba));
    CHECK_FALSE(FingerprintKey(a) == FingerprintKey(ab));
    // Padding is zero, so length must participate in equality.
    CHECK_FALSE(FingerprintKey(a) == FingerprintKey(a0));
    CHECK(FingerprintKey(ab).hash() == FingerprintKey(ab).hash());
    CHECK(FingerprintKey(ab).n() == 2);

    CHECK_THROWS_AS((void)FingerprintKey(std::span<const BootlegWord>{}), UsageError);
    const std::vector<BootlegWord> six(6, BootlegWord{3});
    CHECK_THROWS_AS((void)FingerprintKey(six), UsageError);
}

TEST_CASE("CorpusManifest enforces unique ids and tracks membership")
{
    CorpusManifest m;
    const auto p0 = m.add_piece(50, "first");
    const auto p1 = m.add_piece(7, "second");
    CHECK_THROWS_AS(m.add_piece(50, "dup"), InputError);

    CHECK(m.add_pdf(p0, 900, "a.pdf") == 0);
    CHECK(m.add_pdf(p1, 901, "b.pdf") == 1);
    CHECK(m.add_pdf(p0, 902, "c.pdf") == 2);
    CHECK_THROWS_AS(m.add_pdf(p1, 900, "dup.pdf"), InputError);
    CHECK_THROWS_AS(m.add_pdf(9, 903, "orphan.pdf"), InputError);

    CHECK(m.pieces()[p0].pdfs == std::vector<PdfIndex>{0, 2});
    CHECK(m.find_piece(7) == p1);
    CHECK(m.find_pdf(902) == PdfIndex{2});
    CHECK_FALSE(m.find_pdf(1).has_value());
}

TEST_CASE("CorpusBuilder drops zero words and checksum tracks content")
{
    CorpusBuilder b;
    b.piece(1).pdf(10, {5, 0, 9});
    const Corpus c = std::move(b).build();
    REQUIRE(c.scores.size() == 1);
    CHECK(c.scores[0].words == std::vector<BootlegWord>{{5}, {9}});
    CHECK(c.total_words() == 2);

    CorpusBuilder b2;
    b2.piece(1).pdf(10, {5, 9});
    CHECK(corpus_checksum(c) == corpus_checksum(std::move(b2).build()));

    CorpusBuilder b3;
    b3.piece(1).pdf(10, {9, 5});
    CHECK(corpus_checksum(c) != corpus_checksum(std::move(b3).build()));
}
