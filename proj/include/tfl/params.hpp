#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace tfl {

// Named half-open slice [offset, offset + size) of a flat parameter vector.
struct LayerSpan {
    std::string name;
    std::size_t offset = 0;
    std::size_t size = 0;

    bool operator==(const LayerSpan&) const = default;
};

// Flat model parameters plus the layer index describing their layout.
// Invariant: spans are in order, contiguous, and cover [0, values.size()).
struct ParameterVector {
    std::vector<double> values;
    std::vector<LayerSpan> layers;

    std::size_t size() const { return values.size(); }

    const LayerSpan& layer(const std::string& name) const {
        for (const auto& l : layers)
            if (l.name == name) return l;
        throw std::invalid_argument("unknown layer: " + name);
    }

    bool has_layer(const std::string& name) const {
        for (const auto& l : layers)
            if (l.name == name) return true;
        return false;
    }

    bool same_layout(const ParameterVector& other) const {
        return values.size() == other.values.size() && layers == other.layers;
    }
};

// Throws unless the layer index tiles [0, len) exactly and all values are finite.
inline void validate(const ParameterVector& p) {
    std::size_t cursor = 0;
    for (const auto& l : p.layers) {
        if (l.name.empty()) throw std::invalid_argument("parameter layer with empty name");
        if (l.offset != cursor)
            throw std::invalid_argument("parameter layer '" + l.name + "' not contiguous");
        if (l.size == 0) throw std::invalid_argument("parameter layer '" + l.name + "' is empty");
        cursor += l.size;
    }
    if (cursor != p.values.size())
        throw std::invalid_argument("parameter layers do not cover the value vector");
    for (double v : p.values)
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite parameter value");
}

}  // namespace tfl
