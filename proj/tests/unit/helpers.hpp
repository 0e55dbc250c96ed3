#pragma once

#include <Eigen/Dense>
#include <vector>

#include "eivdc/data_model.hpp"
#include "oracles.hpp"

namespace testing {

inline eivdc::Vector vec(const std::vector<double>& v) {
  return Eigen::Map<const eivdc::Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::vector<double> stdvec(const eivdc::Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

inline oracle::Mat rows(const eivdc::Matrix& m) {
  oracle::Mat out(static_cast<std::size_t>(m.rows()), oracle::Vec(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
  }
  return out;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace testing
