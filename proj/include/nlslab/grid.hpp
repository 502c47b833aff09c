#pragma once

#include <complex>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "nlslab/params.hpp"

namespace nlslab {

using complexd = std::complex<double>;

/// Uniform radial grid of interior nodes r_j = j·dr, j = 1..n, with
/// dr = r_max/(n+1). Both r = 0 and r = r_max are excluded: they are the
/// Dirichlet endpoints of the substituted variable v = r·u.
struct RadialGrid {
    double r_max = 30.0;
    int n = 2999;

    double dr() const { return r_max / (n + 1); }

    /// Radius of the j-th stored node (0-based storage, r = (j+1)·dr).
    double r(int j) const { return (j + 1) * dr(); }

    bool operator==(const RadialGrid& o) const { return r_max == o.r_max && n == o.n; }

    void validate() const {
        if (n < 8) throw std::invalid_argument("RadialGrid: need at least 8 interior nodes");
        if (!(r_max > 0.0)) throw std::invalid_argument("RadialGrid: r_max must be positive");
    }
};

/// Immutable sampled radial field u(r_j). Operations return new fields.
class ComplexField {
public:
    ComplexField(RadialGrid grid, NlsParams params, std::vector<complexd> values)
        : grid_(grid), params_(params), values_(std::move(values)) {
        grid_.validate();
        if (static_cast<int>(values_.size()) != grid_.n)
            throw std::invalid_argument("ComplexField: values size does not match grid");
    }

    /// Sample a callable u(r) on the grid.
    static ComplexField make(RadialGrid grid, NlsParams params,
                             const std::function<complexd(double)>& fn) {
        grid.validate();
        std::vector<complexd> v(grid.n);
        for (int j = 0; j < grid.n; ++j) v[j] = fn(grid.r(j));
        return ComplexField(grid, params, std::move(v));
    }

    static ComplexField zero(RadialGrid grid, NlsParams params) {
        return ComplexField(grid, params, std::vector<complexd>(grid.n, complexd{0.0, 0.0}));
    }

    const RadialGrid& grid() const { return grid_; }
    const NlsParams& params() const { return params_; }
    const std::vector<complexd>& values() const { return values_; }
    complexd operator[](int j) const { return values_[j]; }
    int size() const { return grid_.n; }

    /// Sup norm over the sampled nodes.
    double linf() const {
        double m = 0.0;
        for (const auto& z : values_) m = std::max(m, std::abs(z));
        return m;
    }

    ComplexField with_values(std::vector<complexd> v) const {
        return ComplexField(grid_, params_, std::move(v));
    }

private:
    RadialGrid grid_;
    NlsParams params_;
    std::vector<complexd> values_;
};

} // namespace nlslab
