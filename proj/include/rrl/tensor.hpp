#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rrl {

// Dense row-major [rows x cols] matrix. Used for rewards/costs ([state][action]),
// policies and critics; small enough everywhere that no BLAS is warranted.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0)
        : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

    double& at(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
    double at(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }

    std::span<double> row(int i) { return {data.data() + static_cast<std::size_t>(i) * cols, static_cast<std::size_t>(cols)}; }
    std::span<const double> row(int i) const { return {data.data() + static_cast<std::size_t>(i) * cols, static_cast<std::size_t>(cols)}; }
};

// Dense row-major [d0 x d1 x d2] tensor; transition kernels [state][action][next].
struct Tensor3 {
    int d0 = 0;
    int d1 = 0;
    int d2 = 0;
    std::vector<double> data;

    Tensor3() = default;
    Tensor3(int a, int b, int c, double fill = 0.0)
        : d0(a), d1(b), d2(c), data(static_cast<std::size_t>(a) * b * c, fill) {}

    double& at(int i, int j, int k) {
        return data[(static_cast<std::size_t>(i) * d1 + j) * d2 + k];
    }
    double at(int i, int j, int k) const {
        return data[(static_cast<std::size_t>(i) * d1 + j) * d2 + k];
    }

    std::span<const double> row(int i, int j) const {
        return {data.data() + (static_cast<std::size_t>(i) * d1 + j) * d2, static_cast<std::size_t>(d2)};
    }
    std::span<double> row(int i, int j) {
        return {data.data() + (static_cast<std::size_t>(i) * d1 + j) * d2, static_cast<std::size_t>(d2)};
    }
};

}  // namespace rrl
