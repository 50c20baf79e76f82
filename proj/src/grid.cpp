#include "stem/grid.hpp"

#include <cmath>

namespace stem {

void GridGeometry::validate() const {
    if (height < 3 || width < 3) {
        throw DomainError("grid must be at least 3x3, got " + std::to_string(height) + "x" +
                          std::to_string(width));
    }
    if (!(spacing > 0.0) || !std::isfinite(spacing)) {
        throw DomainError("grid spacing must be positive and finite");
    }
}

void GridField::validate() const {
    geometry().validate();
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw DomainError("field contains non-finite values");
        }
    }
}

GridField operator+(const GridField& a, const GridField& b) {
    if (a.height() != b.height() || a.width() != b.width()) {
        throw DomainError("field shapes differ");
    }
    GridField out = a;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] += b.values[i];
    }
    return out;
}

}  // namespace stem
