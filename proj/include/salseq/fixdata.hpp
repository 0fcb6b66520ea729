#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace salseq {

/// Error raised when an input file cannot be read or decoded.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Error raised when decoded data violates a documented invariant.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Integer pixel location, x = column, y = row.
struct Point2D {
    int x = 0;
    int y = 0;

    bool operator==(const Point2D&) const = default;
};

/// One observer's time-ordered fixation sequence on one stimulus.
/// The list may be empty; order of the list is the order of occurrence.
struct ObserverScanpath {
    std::string observer_id;
    std::vector<Point2D> fixations;
};

struct StimulusRecord {
    std::string stimulus_id;
    int width = 0;
    int height = 0;
    std::vector<ObserverScanpath> scanpaths;

    std::size_t total_fixations() const;
};

enum class Scheme { Salicon, Mit };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

struct Dataset {
    Scheme scheme = Scheme::Salicon;
    std::vector<StimulusRecord> records;
};

/// Binary per-pixel map of fixated locations. Duplicate fixations at one
/// pixel collapse to a single set cell.
struct FixationMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> grid;  // row-major, height*width, values 0/1
    int count = 0;                   // number of set cells

    FixationMap() = default;
    FixationMap(int w, int h) : width(w), height(h), grid(static_cast<std::size_t>(w) * h, 0) {}

    bool at(int x, int y) const { return grid[static_cast<std::size_t>(y) * width + x] != 0; }

    void set(int x, int y) {
        auto& cell = grid[static_cast<std::size_t>(y) * width + x];
        if (!cell) {
            cell = 1;
            ++count;
        }
    }

    bool same_shape(const FixationMap& o) const { return width == o.width && height == o.height; }
};

/// Parses the JSON interchange format and validates every invariant
/// (bounds, unique stimulus ids). Throws ParseError / ValidationError with
/// record context in the message.
Dataset parse_dataset(const std::string& path);

/// Writes the same schema parse_dataset reads, keys in canonical order.
/// write_dataset followed by parse_dataset is byte-exact round trip.
void write_dataset(const Dataset& ds, const std::string& path);

std::string dataset_to_json(const Dataset& ds);
Dataset dataset_from_json(const std::string& text);

/// Union of all observers' fixations as a binary map. With skip_first the
/// first fixation of every observer is dropped (MIT-style aggregation).
FixationMap aggregate_fixation_map(const StimulusRecord& record, bool skip_first);

}  // namespace salseq
