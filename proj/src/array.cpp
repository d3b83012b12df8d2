#include "camrl/array.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace camrl::num {

std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
}

std::string shape_str(const Shape& s) {
    std::string out = "(";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    out += ")";
    return out;
}

Array::Array(Shape s, double fill) : shape(std::move(s)), data(shape_numel(shape), fill) {}

Array::Array(Shape s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != shape_numel(shape)) {
        throw std::invalid_argument("Array: data length " + std::to_string(data.size()) +
                                    " does not match shape " + shape_str(shape));
    }
}

Array Array::vector(std::vector<double> d) {
    Shape s{d.size()};
    return Array(std::move(s), std::move(d));
}

bool Array::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

void Array::fill(double v) {
    for (double& x : data) x = v;
}

Shape broadcast_shape(const Shape& a, const Shape& b) {
    std::size_t ra = a.size(), rb = b.size(), r = std::max(ra, rb);
    Shape out(r);
    for (std::size_t i = 0; i < r; ++i) {
        std::size_t da = i < ra ? a[ra - 1 - i] : 1;
        std::size_t db = i < rb ? b[rb - 1 - i] : 1;
        if (da != db && da != 1 && db != 1) {
            throw std::invalid_argument("broadcast: incompatible shapes " + shape_str(a) + " and " +
                                        shape_str(b));
        }
        out[r - 1 - i] = std::max(da, db);
    }
    return out;
}

namespace {

std::vector<std::size_t> broadcast_strides(const Shape& from, const Shape& to) {
    // Strides into `from` for iteration over `to`; 0 where `from` is broadcast.
    std::size_t r = to.size();
    std::vector<std::size_t> strides(r, 0);
    std::size_t stride = 1;
    for (std::size_t i = 0; i < from.size(); ++i) {
        std::size_t axis_from = from.size() - 1 - i;
        std::size_t axis_to = r - 1 - i;
        strides[axis_to] = (from[axis_from] == 1 && to[axis_to] != 1) ? 0 : stride;
        stride *= from[axis_from];
    }
    return strides;
}

}  // namespace

Array reduce_to_shape(const Array& g, const Shape& target) {
    if (g.shape == target) return g;
    Array out(target, 0.0);
    if (g.numel() == 0) return out;
    std::vector<std::size_t> strides = broadcast_strides(target, g.shape);
    std::size_t r = g.shape.size();
    std::vector<std::size_t> idx(r, 0);
    std::size_t off = 0;
    for (std::size_t flat = 0; flat < g.numel(); ++flat) {
        out.data[off] += g.data[flat];
        // odometer increment over g.shape, tracking the offset into `out`
        for (std::size_t k = r; k-- > 0;) {
            ++idx[k];
            off += strides[k];
            if (idx[k] < g.shape[k]) break;
            off -= strides[k] * g.shape[k];
            idx[k] = 0;
        }
    }
    return out;
}

}  // namespace camrl::num
