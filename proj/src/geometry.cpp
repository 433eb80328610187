#include "scalardyn/geometry.hpp"

#include <random>
#include <stdexcept>

#include <Eigen/QR>

namespace scalardyn {

Orthogonal3::Orthogonal3(const Mat3& m) : matrix_(m) {
  if (!m.allFinite()) {
    throw std::invalid_argument("Orthogonal3: non-finite entries");
  }
  const Mat3 residual = m.transpose() * m - Mat3::Identity();
  if (residual.cwiseAbs().maxCoeff() > kTolerance) {
    throw std::invalid_argument("Orthogonal3: matrix is not orthogonal");
  }
}

Orthogonal3 Orthogonal3::operator*(const Orthogonal3& other) const {
  return Orthogonal3(matrix_ * other.matrix_, Unchecked{});
}

Orthogonal3 sample_orthogonal(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat3 gaussian;
  for (int j = 0; j < 3; ++j) {
    for (int i = 0; i < 3; ++i) gaussian(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Mat3> qr(gaussian);
  Mat3 q = qr.householderQ();
  const Mat3 r = qr.matrixQR().triangularView<Eigen::Upper>();
  // Haar measure needs diag(R) > 0.
  for (int j = 0; j < 3; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  const bool want_reflection = std::bernoulli_distribution(0.5)(rng);
  if ((q.determinant() < 0.0) != want_reflection) q.col(0) = -q.col(0);
  return Orthogonal3(q);
}

Configuration act(const Orthogonal3& rotation, const Vec3& shift,
                  const Configuration& config) {
  const Mat3& r = rotation.matrix();
  Configuration out;
  out.state.q1 = r * config.state.q1 + shift;
  out.state.q2 = r * config.state.q2 + shift;
  out.state.p1 = r * config.state.p1;
  out.state.p2 = r * config.state.p2;
  out.qo = r * config.qo + shift;
  out.g = r * config.g;
  return out;
}

}  // namespace scalardyn
