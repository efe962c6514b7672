#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace affinerf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Regression sample: n input rows of dimension d with n targets.
struct Dataset {
    Matrix X; // n x d, one point per row
    Vector y; // n

    Dataset() = default;
    Dataset(Matrix inputs, Vector targets) : X(std::move(inputs)), y(std::move(targets)) {
        validate();
    }

    Eigen::Index n() const { return X.rows(); }
    Eigen::Index dim() const { return X.cols(); }

    void validate() const {
        if (X.rows() != y.size())
            throw std::invalid_argument("dataset: X has " + std::to_string(X.rows()) +
                                        " rows but y has " + std::to_string(y.size()) +
                                        " entries");
        if (!X.allFinite() || !y.allFinite())
            throw std::runtime_error("dataset: non-finite entries");
    }
};

} // namespace affinerf
