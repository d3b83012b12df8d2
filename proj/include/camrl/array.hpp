#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace camrl::num {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

// Dense n-dimensional array of 64-bit floats, row-major.
struct Array {
    Shape shape;
    std::vector<double> data;

    Array() = default;
    Array(Shape s, double fill = 0.0);
    Array(Shape s, std::vector<double> d);
    static Array scalar(double v) { return Array({}, {v}); }
    static Array vector(std::vector<double> d);

    std::size_t numel() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }

    double& at(std::size_t i) { return data[i]; }
    double at(std::size_t i) const { return data[i]; }

    bool same_shape(const Array& o) const { return shape == o.shape; }
    bool all_finite() const;
    void fill(double v);
};

// Broadcast semantics: trailing-dimension alignment, size-1 expansion only.
// Throws std::invalid_argument when the shapes are incompatible.
Shape broadcast_shape(const Shape& a, const Shape& b);

// Sums g over broadcast dimensions so the result has shape `target`.
Array reduce_to_shape(const Array& g, const Shape& target);

}  // namespace camrl::num
