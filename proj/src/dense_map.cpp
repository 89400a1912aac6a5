#include "afford/dense_map.hpp"

#include <algorithm>
#include <cmath>

namespace afford {

DenseMap::DenseMap(int height, int width, double fill)
    : height_(height), width_(width),
      values_(static_cast<std::size_t>(height) * width, fill) {
    if (height < 1 || width < 1)
        throw std::invalid_argument("DenseMap: dimensions must be >= 1");
}

DenseMap::DenseMap(int height, int width, std::vector<double> values)
    : height_(height), width_(width), values_(std::move(values)) {
    if (height < 1 || width < 1)
        throw std::invalid_argument("DenseMap: dimensions must be >= 1");
    if (values_.size() != static_cast<std::size_t>(height) * width)
        throw std::invalid_argument("DenseMap: value count does not match height*width");
}

double DenseMap::sum() const {
    double s = 0.0;
    for (double v : values_) s += v;
    return s;
}

double DenseMap::max_value() const {
    return *std::max_element(values_.begin(), values_.end());
}

double DenseMap::min_value() const {
    return *std::min_element(values_.begin(), values_.end());
}

void DenseMap::validate(const std::string& what) const {
    if (height_ < 1 || width_ < 1 || values_.empty())
        throw std::invalid_argument(what + ": empty map");
    for (double v : values_) {
        if (!std::isfinite(v)) throw std::invalid_argument(what + ": non-finite value");
        if (v < 0.0) throw std::invalid_argument(what + ": negative value");
    }
}

DenseMap normalize_to_distribution(const DenseMap& map) {
    map.validate("normalize_to_distribution");
    const double s = map.sum();
    if (s <= 0.0)
        throw DegenerateMapError("normalize_to_distribution: degenerate map (all zeros)");
    DenseMap out(map.height(), map.width());
    for (std::size_t i = 0; i < map.size(); ++i) out[i] = map[i] / s;
    return out;
}

DenseMap minmax_normalize(const DenseMap& map) {
    map.validate("minmax_normalize");
    const double lo = map.min_value();
    const double hi = map.max_value();
    DenseMap out(map.height(), map.width());
    if (hi - lo <= 0.0) return out;  // constant-map convention: all zeros
    const double inv = 1.0 / (hi - lo);
    for (std::size_t i = 0; i < map.size(); ++i) out[i] = (map[i] - lo) * inv;
    return out;
}

namespace {

// align-corners source coordinate for output index i
inline double src_coord(int i, int out_dim, int in_dim) {
    if (out_dim == 1) return (in_dim - 1) / 2.0;
    return static_cast<double>(i) * (in_dim - 1) / (out_dim - 1);
}

}  // namespace

DenseMap resize_bilinear(const DenseMap& map, int out_height, int out_width) {
    if (out_height < 1 || out_width < 1)
        throw std::invalid_argument("resize_bilinear: target dimensions must be >= 1");
    if (out_height == map.height() && out_width == map.width()) return map;

    DenseMap out(out_height, out_width);
    for (int r = 0; r < out_height; ++r) {
        const double sy = src_coord(r, out_height, map.height());
        const int y0 = static_cast<int>(sy);
        const int y1 = std::min(y0 + 1, map.height() - 1);
        const double fy = sy - y0;
        for (int c = 0; c < out_width; ++c) {
            const double sx = src_coord(c, out_width, map.width());
            const int x0 = static_cast<int>(sx);
            const int x1 = std::min(x0 + 1, map.width() - 1);
            const double fx = sx - x0;
            const double top = map.at(y0, x0) * (1.0 - fx) + map.at(y0, x1) * fx;
            const double bot = map.at(y1, x0) * (1.0 - fx) + map.at(y1, x1) * fx;
            double v = top * (1.0 - fy) + bot * fy;
            if (v < 0.0) v = 0.0;  // guard fp underflow below zero
            out.at(r, c) = v;
        }
    }
    return out;
}

}  // namespace afford
