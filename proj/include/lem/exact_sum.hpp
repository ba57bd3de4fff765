#pragma once

#include <cmath>
#include <vector>

namespace lem {

/// Correctly rounded floating-point sum (Shewchuk partials with
/// round-half-even on the final step). The result does not depend on the
/// order of the inputs, so two sums over the same multiset compare equal.
class ExactSum {
public:
    void add(double x) {
        std::size_t i = 0;
        for (double y : partials_) {
            if (std::abs(x) < std::abs(y)) std::swap(x, y);
            const double hi = x + y;
            const double lo = y - (hi - x);
            if (lo != 0.0) partials_[i++] = lo;
            x = hi;
        }
        partials_.resize(i);
        partials_.push_back(x);
    }

    ExactSum& operator+=(double x) {
        add(x);
        return *this;
    }

    double value() const {
        if (partials_.empty()) return 0.0;
        std::size_t n = partials_.size() - 1;
        double hi = partials_[n];
        double lo = 0.0;
        while (n > 0) {
            const double x = hi;
            const double y = partials_[--n];
            hi = x + y;
            const double yr = hi - x;
            lo = y - yr;
            if (lo != 0.0) break;
        }
        if (n > 0 && ((lo < 0.0 && partials_[n - 1] < 0.0) || (lo > 0.0 && partials_[n - 1] > 0.0))) {
            const double y = lo * 2.0;
            const double x = hi + y;
            const double yr = x - hi;
            if (y == yr) hi = x;
        }
        return hi;
    }

private:
    std::vector<double> partials_;
};

template <class Range>
double exact_sum(const Range& values) {
    ExactSum acc;
    for (double v : values) acc.add(v);
    return acc.value();
}

}  // namespace lem
