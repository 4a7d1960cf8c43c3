// Writes the synthetic corpora used by the tests and the README walkthrough.

#include <filesystem>
#include <iostream>

#include "maxpoly/corpus.hpp"
#include "synth/synthetic_corpus.hpp"

using namespace maxpoly;

int main(int argc, char** argv) {
    std::filesystem::path dir = argc > 1 ? argv[1] : "tests/fixtures";
    std::filesystem::create_directories(dir);

    synth::ChoraleOptions major;
    major.pieces = 100;
    major.mode = Mode::major;
    major.seed = 11;
    auto pieces = synth::make_chorales(major);
    synth::ChoraleOptions minor = major;
    minor.pieces = 40;
    minor.mode = Mode::minor;
    minor.seed = 12;
    for (auto& p : synth::make_chorales(minor)) pieces.push_back(std::move(p));
    write_file((dir / "chorales.json").string(), corpus_to_json(4, pieces).dump(1));

    synth::RhythmOptions ro;
    ro.pieces = 120;
    write_file((dir / "rhythmic_events.json").string(), corpus_to_json(3, synth::make_rhythmic_pieces(ro)).dump(1));

    Piece melody;
    melody.id = "ode";
    melody.mode = Mode::major;
    // E E F G G F E D C C D E E D D | E E F G G F E D C C D E D C C
    std::vector<std::vector<Symbol>> row(1);
    for (int p : {76, 76, 77, 79, 79, 77, 76, 74, 72, 72, 74, 76, 76, 74, 74,
                  76, 76, 77, 79, 79, 77, 76, 74, 72, 72, 74, 76, 74, 72, 72}) row[0].push_back(Symbol::pitch(p));
    melody.grid = ChordSequence::from_rows(row);
    write_file((dir / "ode_melody.json").string(), corpus_to_json(1, {melody}).dump(1));

    std::cout << "fixtures written to " << dir << '\n';
    return 0;
}
