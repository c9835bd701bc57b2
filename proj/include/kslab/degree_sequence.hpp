#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>

namespace kslab {

// Counts of degree-1, degree-2 and degree-3 vertices defining one
// configuration-model instance. The half-edge total n = d1 + 2 d2 + 3 d3
// must be even so a perfect matching on half-edges exists.
struct DegreeSequence {
    std::uint64_t d1 = 0;
    std::uint64_t d2 = 0;
    std::uint64_t d3 = 0;

    std::uint64_t half_edges() const { return d1 + 2 * d2 + 3 * d3; }
    std::uint64_t vertices() const { return d1 + d2 + d3; }

    void validate() const {
        if (vertices() == 0) {
            throw std::invalid_argument("degree sequence is empty");
        }
        if (half_edges() % 2 != 0) {
            throw std::invalid_argument("degree sequence has an odd number of half-edges");
        }
    }

    // Half-edge proportions (p1, p2, p3) = (d1, 2 d2, 3 d3) / n.
    std::array<double, 3> proportions() const {
        const double n = static_cast<double>(half_edges());
        return {static_cast<double>(d1) / n, static_cast<double>(2 * d2) / n,
                static_cast<double>(3 * d3) / n};
    }
};

}  // namespace kslab
