// Spatial/temporal discretization parameters and circle arithmetic helpers.
//
// Positions live on the unit circle R/Z, sampled at n_space equispaced nodes
// x_i = i / n_space.  One time period is split into n_substeps blocks of
// length 1 / n_substeps.  Paths may wind around the circle; per-block winding
// numbers are capped at winding_cap (larger windings cost more action than
// the cap allows at every parameter range this toolkit targets).

#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace wkam {

struct GridSpec {
    int n_space = 256;   // nodes on the circle, >= 16
    int n_substeps = 8;  // blocks per time period, >= 1
    int winding_cap = 2; // max |winding| per block, >= 1

    void validate() const {
        if (n_space < 16)
            throw std::invalid_argument("GridSpec: n_space must be >= 16, got " +
                                        std::to_string(n_space));
        if (n_space > 2048)
            throw std::invalid_argument("GridSpec: dense kernels support n_space <= 2048, got " +
                                        std::to_string(n_space));
        if (n_substeps < 1 || n_substeps > 256)
            throw std::invalid_argument("GridSpec: n_substeps must be in [1, 256], got " +
                                        std::to_string(n_substeps));
        if (winding_cap < 1 || winding_cap > 16)
            throw std::invalid_argument("GridSpec: winding_cap must be in [1, 16], got " +
                                        std::to_string(winding_cap));
    }

    double dt() const { return 1.0 / n_substeps; }
    double node(int i) const { return static_cast<double>(i) / n_space; }

    // Nearest node index for an arbitrary circle position.
    int snap(double x) const {
        double f = x - std::floor(x);
        int i = static_cast<int>(std::lround(f * n_space)) % n_space;
        return i < 0 ? i + n_space : i;
    }
};

// Fractional part in [0, 1).  Guards the x == integer edge where floating
// point rounding could return 1.0.
inline double frac01(double x) {
    double f = x - std::floor(x);
    return f >= 1.0 ? 0.0 : f;
}

// Distance between two points of R/Z along the shorter arc.
inline double circle_dist(double a, double b) {
    double d = frac01(a - b);
    return d <= 0.5 ? d : 1.0 - d;
}

} // namespace wkam
