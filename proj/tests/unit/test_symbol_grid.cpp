#include <gtest/gtest.h>

#include <map>

#include "maxpoly/grid.hpp"
#include "maxpoly/rng.hpp"
#include "maxpoly/symbol.hpp"
#include "maxpoly/util.hpp"
#include "support/oracles.hpp"

using namespace maxpoly;

TEST(Symbol, PitchRangeIsEnforced) {
    EXPECT_NO_THROW(Symbol::pitch(0));
    EXPECT_NO_THROW(Symbol::pitch(127));
    EXPECT_THROW(Symbol::pitch(128), RangeError);
    EXPECT_THROW(Symbol::pitch(-1), RangeError);
}

TEST(Symbol, RestAndHoldAreDistinctNonPitches) {
    EXPECT_TRUE(Symbol::rest().is_rest());
    EXPECT_TRUE(Symbol::hold().is_hold());
    EXPECT_FALSE(Symbol::rest().is_pitch());
    EXPECT_NE(Symbol::rest(), Symbol::hold());
    EXPECT_LT(Symbol::pitch(127), Symbol::rest());
}

TEST(Symbol, JsonRoundTrip) {
    for (Symbol s : {Symbol::pitch(0), Symbol::pitch(60), Symbol::rest(), Symbol::hold()}) {
        EXPECT_EQ(symbol_from_json(symbol_to_json(s)), s);
    }
    EXPECT_EQ(symbol_to_json(Symbol::rest()), "R");
    EXPECT_EQ(symbol_to_json(Symbol::hold()), "H");
    EXPECT_THROW(symbol_from_json(nlohmann::json("X")), ParseError);
    EXPECT_THROW(symbol_from_json(nlohmann::json(200)), ParseError);
    EXPECT_THROW(symbol_from_json(nlohmann::json(60.5)), ParseError);
}

TEST(Symbol, ShiftKeepsRestAndHold) {
    EXPECT_EQ(Symbol::pitch(60).shifted(7), Symbol::pitch(67));
    EXPECT_EQ(Symbol::rest().shifted(5), Symbol::rest());
    EXPECT_EQ(Symbol::hold().shifted(-5), Symbol::hold());
    EXPECT_FALSE(Symbol::pitch(125).shifted(5).has_value());
}

TEST(Grid, RaggedRowsAreRejected) {
    std::vector<std::vector<Symbol>> rows = {oracle::pitches({60, 62, 64}), oracle::pitches({48, 50})};
    EXPECT_THROW(ChordSequence::from_rows(rows), ShapeError);
}

TEST(Grid, RowsAndColumns) {
    auto g = oracle::grid({{60, 62, 64}, {48, 50, 52}});
    EXPECT_EQ(g.voices(), 2u);
    EXPECT_EQ(g.length(), 3u);
    EXPECT_EQ(g(1, 2), Symbol::pitch(52));
    EXPECT_EQ(g.column(1), oracle::pitches({62, 50}));
    EXPECT_EQ(ChordSequence::from_rows(g.rows()), g);
}

TEST(Rng, SameSeedSameStream) {
    Rng a(42), b(42), c(43);
    bool differs = false;
    for (int k = 0; k < 100; ++k) {
        auto x = a.next();
        EXPECT_EQ(x, b.next());
        differs |= x != c.next();
    }
    EXPECT_TRUE(differs);
}

TEST(Rng, BoundedDrawsAreInRangeAndRoughlyUniform) {
    Rng r(7);
    std::map<std::uint64_t, int> hist;
    const int draws = 70000;
    for (int k = 0; k < draws; ++k) {
        auto v = r.below(7);
        ASSERT_LT(v, 7u);
        ++hist[v];
    }
    double chi2 = 0;
    for (auto [v, c] : hist) chi2 += (c - draws / 7.0) * (c - draws / 7.0) / (draws / 7.0);
    EXPECT_LT(chi2, oracle::chi_square_quantile(6, 3.29));
    for (int k = 0; k < 1000; ++k) {
        double u = r.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
}

TEST(Util, Fnv1aKnownValues) {
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
    EXPECT_EQ(hex64(0xabcull), "0000000000000abc");
}
