#include <gtest/gtest.h>

#include <random>

#include "maxpoly/model.hpp"
#include "support/oracles.hpp"

using namespace maxpoly;

namespace {
Symbol P(int p) { return Symbol::pitch(p); }

ChordSequence random_sequence(const Topology& t, std::size_t len, std::mt19937& g) {
    ChordSequence s(t.voices, len);
    for (std::size_t i = 0; i < t.voices; ++i)
        for (std::size_t j = 0; j < len; ++j) s(i, j) = t.alphabets[i][g() % t.alphabets[i].size()];
    return s;
}
}  // namespace

TEST(Energy, ZeroParametersGiveZero) {
    auto t = oracle::tiny_topology({3, 3}, 2, 1);
    auto m = Model::zero(t);
    std::mt19937 g(1);
    for (int r = 0; r < 10; ++r) EXPECT_EQ(energy(random_sequence(t, 7, g), m), 0.0);
}

TEST(Energy, SingleParameterExample) {
    Topology t;
    t.voices = 1;
    t.horizon = 1;
    t.alphabets = {oracle::pitches({60, 62})};
    ParameterVector pv;
    pv.pairs[FeatureIndex{P(60), P(62), 0, 0, 1}] = 2.0;
    Model m(t, pv);
    auto s = oracle::grid({{60, 62, 60, 62}});
    EXPECT_DOUBLE_EQ(energy(s, m), -4.0);
    EXPECT_DOUBLE_EQ(energy_from_counts(s, m), -4.0);
    EXPECT_DOUBLE_EQ(oracle::brute_energy(s, m), -4.0);
}

TEST(Energy, DensePathMatchesDefinition) {
    std::mt19937 g(2);
    for (int r = 0; r < 40; ++r) {
        std::size_t n = 1 + g() % 3;
        int K = static_cast<int>(g() % 3), L = K ? static_cast<int>(g() % (K + 1)) : 0;
        std::vector<std::size_t> sizes(n);
        for (auto& a : sizes) a = 1 + g() % 4;
        auto t = oracle::tiny_topology(sizes, K, L);
        if (r % 4 == 0) t.bins_per_cycle = 1 + static_cast<int>(g() % 4);
        auto m = oracle::random_model(t, 100 + static_cast<unsigned>(r));
        auto s = random_sequence(t, 1 + g() % 8, g);
        double ref = oracle::brute_energy(s, m);
        EXPECT_NEAR(energy(s, m), ref, 1e-12 * std::max(1.0, std::abs(ref)));
        EXPECT_NEAR(energy_from_counts(s, m), ref, 1e-12 * std::max(1.0, std::abs(ref)));
    }
}

TEST(Energy, OrientationOfSuppliedKeyDoesNotMatter) {
    auto t = oracle::tiny_topology({3, 3}, 2, 2);
    std::mt19937 g(5);
    for (int r = 0; r < 50; ++r) {
        int i = static_cast<int>(g() % 2), j = static_cast<int>(g() % 2), k = static_cast<int>(g() % 5) - 2;
        if (i == j && k == 0) continue;
        Symbol a = t.alphabets[static_cast<std::size_t>(i)][g() % 3], b = t.alphabets[static_cast<std::size_t>(j)][g() % 3];
        ParameterVector p1, p2;
        p1.pairs[canonicalize(t, a, b, i, j, k)] = 1.5;
        p2.pairs[canonicalize(t, b, a, j, i, -k)] = 1.5;
        Model m1(t, p1), m2(t, p2);
        auto s = random_sequence(t, 6, g);
        EXPECT_EQ(energy(s, m1), energy(s, m2));
    }
}

TEST(Model, RejectsInvalidParameters) {
    auto t = oracle::tiny_topology({2, 2}, 1, 0);
    ParameterVector bad;
    bad.pairs[FeatureIndex{P(60), P(48), 0, 1, 1}] = 1.0;  // cross-voice beyond L
    EXPECT_THROW(Model(t, bad), ValidationError);
    ParameterVector noncanon;
    noncanon.pairs[FeatureIndex{P(62), P(60), 0, 0, -1}] = 1.0;
    EXPECT_THROW(Model(t, noncanon), ValidationError);
    EXPECT_THROW(Model(t, std::vector<double>(3, 0.0)), ValidationError);
}

TEST(Conditional, ZeroModelIsUniform) {
    auto t = oracle::tiny_topology({4, 2}, 1, 1);
    auto m = Model::zero(t);
    auto s = oracle::grid({{60, 62, 64}, {48, 50, 48}});
    auto p = conditional_distribution(s, 0, 1, m);
    for (double v : p) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(Conditional, SingletonAlphabet) {
    auto t = oracle::tiny_topology({1, 3}, 1, 1);
    auto m = oracle::random_model(t, 9);
    auto s = oracle::grid({{60, 60, 60}, {48, 50, 52}});
    auto p = conditional_distribution(s, 0, 1, m);
    ASSERT_EQ(p.size(), 1u);
    EXPECT_DOUBLE_EQ(p[0], 1.0);
}

TEST(Conditional, MatchesFullEnergyRecomputation) {
    auto t = oracle::tiny_topology({3, 3}, 1, 1);
    std::mt19937 g(11);
    for (int r = 0; r < 20; ++r) {
        auto m = oracle::random_model(t, 200 + static_cast<unsigned>(r));
        auto s = random_sequence(t, 3, g);
        for (std::size_t i = 0; i < 2; ++i) {
            for (std::size_t j = 0; j < 3; ++j) {
                auto p = conditional_distribution(s, i, j, m);
                std::vector<double> w;
                double z = 0;
                for (Symbol c : t.alphabets[i]) {
                    auto s2 = s;
                    s2(i, j) = c;
                    w.push_back(std::exp(-oracle::brute_energy(s2, m)));
                    z += w.back();
                }
                for (std::size_t c = 0; c < w.size(); ++c) EXPECT_NEAR(p[c], w[c] / z, 1e-12);
            }
        }
    }
}

TEST(Conditional, LocalToKNeighbourhood) {
    auto t = oracle::tiny_topology({3, 4, 3}, 2, 1);
    auto m = oracle::random_model(t, 4);
    std::mt19937 g(12);
    for (int r = 0; r < 200; ++r) {
        auto s = random_sequence(t, 12, g);
        std::size_t i = g() % 3, j = g() % 12;
        auto before = conditional_distribution(s, i, j, m);
        std::size_t ei = g() % 3, ej = g() % 12;
        if (std::abs(static_cast<long>(ej) - static_cast<long>(j)) <= t.horizon) continue;
        s(ei, ej) = t.alphabets[ei][g() % t.alphabets[ei].size()];
        EXPECT_EQ(conditional_distribution(s, i, j, m), before);
    }
}

TEST(Partition, UniformCounts) {
    EXPECT_DOUBLE_EQ(exact_partition_oracle(Model::zero(oracle::tiny_topology({3}, 1, 0)), 2), 9.0);
    EXPECT_DOUBLE_EQ(exact_partition_oracle(Model::zero(oracle::tiny_topology({3, 3}, 1, 1)), 3), 729.0);
}

TEST(Partition, ProbabilitiesSumToOne) {
    for (unsigned seed = 1; seed <= 5; ++seed) {
        auto t = oracle::tiny_topology({3, 2}, 1, 1);
        auto m = oracle::random_model(t, seed);
        double z = exact_partition_oracle(m, 3);
        double total = 0;
        oracle::for_each_sequence(t, 3, [&](const ChordSequence& s) { total += std::exp(-oracle::brute_energy(s, m)) / z; });
        EXPECT_NEAR(total, 1.0, 1e-9);
    }
}

TEST(Partition, TooLarge) {
    auto t = oracle::tiny_topology({10, 10}, 1, 1);
    EXPECT_THROW(exact_partition_oracle(Model::zero(t), 8), TooLargeError);
}

TEST(Energy, RhythmPositionFields) {
    Topology t;
    t.voices = 1;
    t.horizon = 0;
    t.alphabets = {{P(60), Symbol::rest(), Symbol::hold()}};
    t.bins_per_cycle = 2;
    ParameterVector pv;
    pv.position_fields[PositionFieldKey{0, P(60), 0}] = 1.0;
    pv.position_fields[PositionFieldKey{0, Symbol::hold(), 1}] = 0.5;
    Model m(t, pv);
    ChordSequence s(1, 4);
    s(0, 0) = P(60);
    s(0, 1) = Symbol::hold();
    s(0, 2) = P(60);
    s(0, 3) = P(60);
    EXPECT_DOUBLE_EQ(energy(s, m), -(1.0 + 0.5 + 1.0));
    EXPECT_DOUBLE_EQ(energy_from_counts(s, m), energy(s, m));
}
