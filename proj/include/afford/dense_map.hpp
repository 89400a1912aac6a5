#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace afford {

/// Raised when an operation needs at least one strictly positive value
/// (e.g. normalizing an all-zero map) and the input has none.
struct DegenerateMapError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A dense 2D grid of finite, non-negative floats stored row-major.
/// Holds both predictions and ground-truth heatmaps throughout the library.
class DenseMap {
public:
    DenseMap() = default;
    DenseMap(int height, int width, double fill = 0.0);
    DenseMap(int height, int width, std::vector<double> values);

    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t size() const { return values_.size(); }

    double& at(int r, int c) { return values_[static_cast<std::size_t>(r) * width_ + c]; }
    double at(int r, int c) const { return values_[static_cast<std::size_t>(r) * width_ + c]; }
    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    double sum() const;
    double max_value() const;
    double min_value() const;
    bool same_shape(const DenseMap& other) const {
        return height_ == other.height_ && width_ == other.width_;
    }

    /// Checks the type invariants (finite, >= 0, non-empty); throws on violation.
    void validate(const std::string& what = "DenseMap") const;

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<double> values_;
};

/// Scales the map so its values sum to 1 (proportionality preserved).
/// Throws DegenerateMapError when the map has no positive value.
DenseMap normalize_to_distribution(const DenseMap& map);

/// Affine rescale to [0, 1]. Constant maps collapse to all-zeros so that
/// degenerate predictions score poorly instead of uniformly high.
DenseMap minmax_normalize(const DenseMap& map);

/// Bilinear resampling with the align-corners convention. An output
/// dimension of 1 samples the source center. Identity when sizes match.
DenseMap resize_bilinear(const DenseMap& map, int out_height, int out_width);

}  // namespace afford
