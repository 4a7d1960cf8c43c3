#ifndef MAXPOLY_GRID_HPP_
#define MAXPOLY_GRID_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "maxpoly/error.hpp"
#include "maxpoly/symbol.hpp"

namespace maxpoly {

/// An n x l grid of symbols: rows are voices (soprano first), columns are
/// time steps. Storage is row-major so a voice line is contiguous.
class ChordSequence {
public:
    ChordSequence() = default;
    ChordSequence(std::size_t voices, std::size_t length, Symbol fill = Symbol::rest())
        : voices_(voices), length_(length), cells_(voices * length, fill) {}

    static ChordSequence from_rows(const std::vector<std::vector<Symbol>>& rows) {
        if (rows.empty()) return {};
        ChordSequence s(rows.size(), rows.front().size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != s.length_) {
                throw ShapeError("row " + std::to_string(i) + " has length " +
                                 std::to_string(rows[i].size()) + ", expected " +
                                 std::to_string(s.length_));
            }
            std::copy(rows[i].begin(), rows[i].end(), s.cells_.begin() + i * s.length_);
        }
        return s;
    }

    std::size_t voices() const { return voices_; }
    std::size_t length() const { return length_; }
    bool empty() const { return cells_.empty(); }

    Symbol& operator()(std::size_t voice, std::size_t col) { return cells_[voice * length_ + col]; }
    Symbol operator()(std::size_t voice, std::size_t col) const { return cells_[voice * length_ + col]; }

    std::span<const Symbol> row(std::size_t voice) const {
        return {cells_.data() + voice * length_, length_};
    }
    std::span<Symbol> row(std::size_t voice) { return {cells_.data() + voice * length_, length_}; }

    std::vector<Symbol> column(std::size_t col) const {
        std::vector<Symbol> c(voices_);
        for (std::size_t i = 0; i < voices_; ++i) c[i] = (*this)(i, col);
        return c;
    }

    std::vector<std::vector<Symbol>> rows() const {
        std::vector<std::vector<Symbol>> r(voices_);
        for (std::size_t i = 0; i < voices_; ++i) r[i].assign(row(i).begin(), row(i).end());
        return r;
    }

    std::span<const Symbol> cells() const { return cells_; }

    bool operator==(const ChordSequence&) const = default;

private:
    std::size_t voices_ = 0;
    std::size_t length_ = 0;
    std::vector<Symbol> cells_;
};

}  // namespace maxpoly

#endif  // MAXPOLY_GRID_HPP_
