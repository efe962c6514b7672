#include "affinerf/linalg.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace affinerf::linalg {

Matrix pack_antisymmetric(const Vector& z, int d) {
    if (d < 1)
        throw std::invalid_argument("pack_antisymmetric: dimension must be >= 1");
    const int expected = so_dim(d);
    if (z.size() != expected)
        throw std::invalid_argument("pack_antisymmetric: expected " + std::to_string(expected) +
                                    " coordinates for d=" + std::to_string(d) + ", received " +
                                    std::to_string(z.size()));
    Matrix A = Matrix::Zero(d, d);
    int k = 0;
    for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j, ++k) {
            A(i, j) = z[k];
            A(j, i) = -z[k];
        }
    }
    return A;
}

Vector unpack_antisymmetric(const Matrix& A, double tol) {
    if (A.rows() != A.cols())
        throw std::invalid_argument("unpack_antisymmetric: matrix must be square");
    const int d = static_cast<int>(A.rows());
    const double defect = (A + A.transpose()).cwiseAbs().maxCoeff();
    if (defect > tol)
        throw std::invalid_argument("unpack_antisymmetric: antisymmetry defect " +
                                    std::to_string(defect) + " exceeds tolerance");
    Vector z(so_dim(d));
    int k = 0;
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j, ++k)
            z[k] = A(i, j);
    return z;
}

Matrix matrix_exp(const Matrix& A) {
    if (A.rows() != A.cols())
        throw std::invalid_argument("matrix_exp: matrix must be square");
    if (!A.allFinite())
        throw std::runtime_error("matrix_exp: non-finite entries");
    const int d = static_cast<int>(A.rows());
    const Matrix I = Matrix::Identity(d, d);

    // Pade-13 coefficients (Higham 2005).
    static const double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                               1187353796428800.0,  129060195264000.0,   10559470521600.0,
                               670442572800.0,      33522128640.0,       1323241920.0,
                               40840800.0,          960960.0,            16380.0,
                               182.0,               1.0};
    const double theta13 = 5.371920351148152;

    const double norm1 = A.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    if (norm1 > theta13)
        squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
    const Matrix As = A / std::pow(2.0, squarings);

    const Matrix A2 = As * As;
    const Matrix A4 = A2 * A2;
    const Matrix A6 = A2 * A4;
    const Matrix U = As * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) +
                           b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I);
    const Matrix V = A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) +
                     b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;

    Matrix R = (V - U).partialPivLu().solve(V + U);
    for (int i = 0; i < squarings; ++i)
        R = R * R;
    return R;
}

Matrix random_rotation(int d, Rng& rng) {
    if (d < 1)
        throw std::invalid_argument("random_rotation: dimension must be >= 1");
    Matrix G(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            G(i, j) = rng.normal();
    Eigen::HouseholderQR<Matrix> qr(G);
    Matrix Q = qr.householderQ();
    const Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < d; ++j)
        if (R(j, j) < 0.0)
            Q.col(j) = -Q.col(j);
    if (Q.determinant() < 0.0)
        Q.col(d - 1) = -Q.col(d - 1);
    return Q;
}

double orthogonality_error(const Matrix& W) {
    const Matrix I = Matrix::Identity(W.rows(), W.cols());
    return (W.transpose() * W - I).cwiseAbs().maxCoeff();
}

bool is_rotation(const Matrix& W, double orth_tol, double det_tol) {
    if (W.rows() != W.cols() || !W.allFinite())
        return false;
    if (orthogonality_error(W) > orth_tol)
        return false;
    return std::abs(W.determinant() - 1.0) <= det_tol;
}

} // namespace affinerf::linalg
