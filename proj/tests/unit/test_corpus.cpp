#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>

#include "maxpoly/corpus.hpp"
#include "support/oracles.hpp"
#include "synth/synthetic_corpus.hpp"

using namespace maxpoly;
using nlohmann::json;

namespace {

json one_piece_corpus(std::vector<std::vector<int>> rows, int key = 0, const char* mode = "major") {
    return json{{"voices", rows.size()},
                {"pieces", json::array({json{{"id", "p"}, {"mode", mode}, {"original_key", key}, {"grid", rows}}})}};
}

std::string temp_file(const std::string& name, const std::string& contents) {
    auto p = std::filesystem::temp_directory_path() / ("maxpoly_test_" + name);
    write_file(p.string(), contents);
    return p.string();
}

Piece grid_piece(std::vector<std::vector<int>> rows, int key, Mode mode = Mode::major) {
    Piece p;
    p.id = "x";
    p.mode = mode;
    p.original_key = key;
    std::vector<std::vector<Symbol>> r;
    for (auto& row : rows) {
        std::vector<Symbol> s;
        for (int v : row) s.push_back(Symbol::pitch(v));
        r.push_back(s);
    }
    p.grid = ChordSequence::from_rows(r);
    return p;
}

}  // namespace

TEST(LoadCorpus, OneFourByEightPiece) {
    std::vector<std::vector<int>> rows(4, std::vector<int>(8, 60));
    for (int i = 0; i < 4; ++i) std::fill(rows[i].begin(), rows[i].end(), 72 - 7 * i);
    auto path = temp_file("4x8.json", one_piece_corpus(rows).dump());
    Corpus c = load_corpus(path);
    EXPECT_EQ(c.voices(), 4u);
    EXPECT_EQ(c.pieces().size(), 1u);
    EXPECT_EQ(c.pieces()[0].grid.length(), 8u);
}

TEST(LoadCorpus, RaggedRowsGiveShapeError) {
    std::vector<std::vector<int>> rows = {std::vector<int>(8, 60), std::vector<int>(7, 55)};
    auto path = temp_file("ragged.json", one_piece_corpus(rows).dump());
    EXPECT_THROW(load_corpus(path), ShapeError);
}

TEST(LoadCorpus, WrongRowCountAndBadCells) {
    auto j = one_piece_corpus({{60, 62}});
    j["voices"] = 2;
    EXPECT_THROW(corpus_from_json(j), ShapeError);
    auto bad = one_piece_corpus({{60, 130}});
    EXPECT_THROW(corpus_from_json(bad), ParseError);
    EXPECT_THROW(load_corpus(temp_file("garbage.json", "{not json")), ParseError);
    EXPECT_THROW(read_file("/nonexistent/maxpoly.json"), ParseError);
}

TEST(LoadCorpus, AlphabetsAreExactlyObservedSymbols) {
    auto c = corpus_from_json(one_piece_corpus({{64, 60, 62, 60}, {48, 48, 43, 48}}));
    EXPECT_EQ(c.alphabet(0), oracle::pitches({60, 62, 64}));
    EXPECT_EQ(c.alphabet(1), oracle::pitches({43, 48}));
}

TEST(LoadCorpus, JsonRoundTrip) {
    synth::ChoraleOptions o;
    o.pieces = 5;
    Corpus c(4, synth::make_chorales(o));
    Corpus back = corpus_from_json(corpus_to_json(c));
    EXPECT_EQ(back.pieces(), c.pieces());
    EXPECT_EQ(corpus_fingerprint(back), corpus_fingerprint(c));
}

TEST(BeatQuantize, SustainedHalfNoteSpansTwoBeats) {
    Piece p;
    p.events = {NoteEvent{0, 0, 2, Symbol::pitch(60)}};
    std::vector<int> beats = {0, 1};
    auto q = beat_quantize(p, beats);
    EXPECT_EQ(q.grid.row(0)[0], Symbol::pitch(60));
    EXPECT_EQ(q.grid.row(0)[1], Symbol::pitch(60));
}

TEST(BeatQuantize, EighthPairKeepsOnsetSymbol) {
    Piece p;  // two bins per beat
    p.events = {NoteEvent{0, 0, 1, Symbol::pitch(60)}, NoteEvent{0, 1, 1, Symbol::pitch(62)}};
    std::vector<int> beats = {0};
    auto q = beat_quantize(p, beats);
    ASSERT_EQ(q.grid.length(), 1u);
    EXPECT_EQ(q.grid(0, 0), Symbol::pitch(60));
}

TEST(BeatQuantize, RestBeatWithRhythmExtension) {
    Piece p;
    p.events = {NoteEvent{0, 0, 1, Symbol::pitch(60)}, NoteEvent{0, 1, 1, Symbol::pitch(62)},
                NoteEvent{0, 3, 1, Symbol::pitch(64)}};
    std::vector<int> beats = {0, 1, 2, 3};
    QuantizeOptions qo;
    qo.rests = true;
    auto q = beat_quantize(p, beats, qo);
    EXPECT_EQ(q.grid(0, 2), Symbol::rest());
    EXPECT_THROW(beat_quantize(p, beats), EmptyBeatError);
}

TEST(BeatQuantize, OnsetOnlyLeavesSustainedBeatsSilent) {
    Piece p;
    p.events = {NoteEvent{0, 1, 3, Symbol::pitch(60)}};
    std::vector<int> beats = {0, 2};
    QuantizeOptions qo;
    qo.rests = true;
    qo.onset_only = true;
    auto q = beat_quantize(p, beats, qo);
    EXPECT_EQ(q.grid(0, 1), Symbol::rest());
    qo.onset_only = false;
    EXPECT_EQ(beat_quantize(p, beats, qo).grid(0, 1), Symbol::pitch(60));
}

TEST(BeatQuantize, MatchesReferenceDecimationOnFixture) {
    synth::RhythmOptions ro;
    ro.pieces = 6;
    for (const auto& piece : synth::make_rhythmic_pieces(ro)) {
        int span = 0;
        for (const auto& e : piece.events) span = std::max(span, e.onset + e.duration);
        auto beats = regular_beat_grid(span, 2);
        QuantizeOptions qo;
        qo.rests = true;
        qo.voices = 3;
        auto q = beat_quantize(piece, beats, qo);
        for (std::size_t v = 0; v < 3; ++v) {
            for (std::size_t b = 0; b < beats.size(); ++b) {
                Symbol expect = Symbol::rest();
                for (const auto& e : piece.events) {
                    if (e.voice == static_cast<int>(v) && e.onset <= beats[b] && beats[b] < e.onset + e.duration) expect = e.pitch;
                }
                ASSERT_EQ(q.grid(v, b), expect) << piece.id << " voice " << v << " beat " << b;
            }
        }
    }
}

TEST(Events, OverlapsAndBadVoicesRejected) {
    Piece p;
    p.events = {NoteEvent{0, 0, 4, Symbol::pitch(60)}, NoteEvent{0, 2, 2, Symbol::pitch(62)}};
    EXPECT_THROW(validate_events(p, 1), ShapeError);
    p.events = {NoteEvent{3, 0, 4, Symbol::pitch(60)}};
    EXPECT_THROW(validate_events(p, 2), ShapeError);
    p.events = {NoteEvent{0, 0, 0, Symbol::pitch(60)}};
    EXPECT_THROW(validate_events(p, 1), ParseError);
}

TEST(Transpose, KeyZeroIsIdentity) {
    auto p = grid_piece({{60, 64, 67}}, 0);
    EXPECT_EQ(transpose_to_c(p), p);
}

TEST(Transpose, DMajorDownTwo) {
    auto p = grid_piece({{62}}, 2);
    EXPECT_EQ(transpose_to_c(p).grid(0, 0), Symbol::pitch(60));
}

TEST(Transpose, GMajorGoesUpFive) {
    auto p = grid_piece({{67}}, 7);
    EXPECT_EQ(transpose_to_c(p).grid(0, 0), Symbol::pitch(72));
}

TEST(Transpose, ShiftHasMinimalMagnitudeTiesNegative) {
    for (int key = 0; key < 12; ++key) {
        int best = 99;
        for (int s = -11; s <= 11; ++s) {
            if (((key + s) % 12 + 12) % 12 != 0) continue;
            if (std::abs(s) < std::abs(best) || (std::abs(s) == std::abs(best) && s < best)) best = s;
        }
        EXPECT_EQ(key_shift(key), best) << "key " << key;
    }
    EXPECT_THROW(key_shift(12), RangeError);
}

TEST(Transpose, InvertibleAndIdempotent) {
    synth::ChoraleOptions o;
    o.pieces = 12;
    for (const auto& p : synth::make_chorales(o)) {
        auto c = transpose_to_c(p);
        EXPECT_EQ(transpose_to_c(c), c);
        auto back = transpose_by(c, -key_shift(p.original_key));
        EXPECT_EQ(back.grid, p.grid);
    }
}

TEST(Transpose, OutOfRangeThrows) {
    auto p = grid_piece({{127}}, 1);
    p.original_key = 11;  // +1
    EXPECT_THROW(transpose_to_c(p), RangeError);
}

TEST(SplitByMode, Partition) {
    std::vector<Piece> pieces = {grid_piece({{60}}, 0), grid_piece({{62}}, 0, Mode::minor), grid_piece({{64}}, 0)};
    pieces[1].id = "m";
    Corpus c(1, pieces);
    auto [major, minor] = split_by_mode(c);
    EXPECT_EQ(major.pieces().size(), 2u);
    EXPECT_EQ(minor.pieces().size(), 1u);
    std::vector<Piece> all = major.pieces();
    all.insert(all.end(), minor.pieces().begin(), minor.pieces().end());
    for (const auto& p : c.pieces()) EXPECT_EQ(std::count(all.begin(), all.end(), p), std::count(pieces.begin(), pieces.end(), p));
}

TEST(SplitByMode, AllMajor) {
    Corpus c(1, {grid_piece({{60}}, 0), grid_piece({{62}}, 0)});
    auto [major, minor] = split_by_mode(c);
    EXPECT_EQ(major.pieces(), c.pieces());
    EXPECT_TRUE(minor.empty());
}

TEST(RhythmGrid, QuarterNoteIsPitchThenHold) {
    Piece p;
    p.events = {NoteEvent{0, 0, 2, Symbol::pitch(60)}};
    auto g = encode_rhythm_grid(p, 8).grid;
    ASSERT_EQ(g.length(), 8u);
    EXPECT_EQ(g(0, 0), Symbol::pitch(60));
    EXPECT_EQ(g(0, 1), Symbol::hold());
    for (std::size_t t = 2; t < 8; ++t) EXPECT_EQ(g(0, t), Symbol::rest());
}

TEST(RhythmGrid, FullBarRest) {
    Piece p;
    p.events = {NoteEvent{1, 0, 8, Symbol::pitch(48)}};
    auto g = encode_rhythm_grid(p, 8, 2).grid;
    for (std::size_t t = 0; t < 8; ++t) EXPECT_EQ(g(0, t), Symbol::rest());
}

TEST(RhythmGrid, SourceResolutionMustDivide) {
    Piece p;
    p.bins_per_bar = 16;
    p.events = {NoteEvent{0, 1, 1, Symbol::pitch(60)}};
    EXPECT_THROW(encode_rhythm_grid(p, 8), ResolutionError);
    p.events = {NoteEvent{0, 2, 4, Symbol::pitch(60)}};
    auto g = encode_rhythm_grid(p, 8).grid;
    EXPECT_EQ(g(0, 1), Symbol::pitch(60));
    EXPECT_EQ(g(0, 2), Symbol::hold());
}

TEST(RhythmGrid, EncodeDecodeRoundTrip) {
    synth::RhythmOptions ro;
    ro.pieces = 10;
    for (const auto& piece : synth::make_rhythmic_pieces(ro)) {
        auto enc = encode_rhythm_grid(piece, 8, 3);
        EXPECT_EQ(enc.grid.length() % 8, 0u);
        auto dec = decode_rhythm_grid(enc.grid);
        auto orig = piece.events;
        std::sort(orig.begin(), orig.end());
        std::sort(dec.begin(), dec.end());
        EXPECT_EQ(dec, orig) << piece.id;
    }
}

TEST(RhythmGrid, FixtureCorpusEncodes) {
    LoadOptions lo;
    lo.format = CorpusFormat::events;
    lo.bins_per_cycle = 8;
    auto c = load_corpus(std::string(MAXPOLY_FIXTURE_DIR) + "/rhythmic_events.json", lo);
    EXPECT_EQ(c.voices(), 3u);
    for (const auto& p : c.pieces()) EXPECT_EQ(p.grid.length() % 8, 0u);
    // closure: every symbol is in its voice alphabet
    for (const auto& p : c.pieces()) {
        for (std::size_t i = 0; i < 3; ++i) {
            for (Symbol s : p.grid.row(i)) EXPECT_TRUE(std::binary_search(c.alphabet(i).begin(), c.alphabet(i).end(), s));
        }
    }
    EXPECT_TRUE(std::binary_search(c.alphabet(0).begin(), c.alphabet(0).end(), Symbol::hold()));
}

TEST(Corpus, AlphabetClosureAfterTransposition) {
    auto c = transpose_to_c(load_corpus(std::string(MAXPOLY_FIXTURE_DIR) + "/chorales.json"));
    EXPECT_EQ(c.pieces().size(), 140u);
    for (const auto& p : c.pieces()) {
        EXPECT_EQ(p.original_key, 0);
        for (std::size_t i = 0; i < 4; ++i) {
            for (Symbol s : p.grid.row(i)) EXPECT_TRUE(std::binary_search(c.alphabet(i).begin(), c.alphabet(i).end(), s));
        }
    }
}
