#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numeric>
#include <vector>

#include "otgdl/common.hpp"

namespace otgdl {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Dense row-major tensor of doubles. Everything in this artifact is rank 1 or
// 2 (scalars are 1x1); shape is kept as an explicit list so checkpointed
// arrays round-trip with their original rank.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int r, int c) : shape{r, c}, data(static_cast<std::size_t>(r) * c, 0.0) {}

    static Tensor zeros(int r, int c) { return Tensor(r, c); }

    static Tensor scalar(double v) {
        Tensor t(1, 1);
        t.data[0] = v;
        return t;
    }

    static Tensor from_mat(const Mat& m) {
        Tensor t(static_cast<int>(m.rows()), static_cast<int>(m.cols()));
        for (int i = 0; i < m.rows(); ++i)
            for (int j = 0; j < m.cols(); ++j) t.data[static_cast<std::size_t>(i) * m.cols() + j] = m(i, j);
        return t;
    }

    std::size_t numel() const { return data.size(); }

    int rows() const { return shape.empty() ? 0 : shape[0]; }
    int cols() const { return shape.size() < 2 ? 1 : shape[1]; }

    double& at(int i, int j) { return data[static_cast<std::size_t>(i) * cols() + j]; }
    double at(int i, int j) const { return data[static_cast<std::size_t>(i) * cols() + j]; }

    double value() const {
        require(numel() == 1, "ShapeMismatch", "scalar expected");
        return data[0];
    }

    using MapT = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
    using CMapT = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

    MapT map() { return MapT(data.data(), rows(), cols()); }
    CMapT map() const { return CMapT(data.data(), rows(), cols()); }

    Mat to_mat() const { return map(); }

    bool same_shape(const Tensor& o) const { return rows() == o.rows() && cols() == o.cols(); }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

} // namespace otgdl
