#pragma once

#include <string>
#include <vector>

#include "meanerg/function.hpp"
#include "meanerg/kernel.hpp"
#include "meanerg/measure.hpp"
#include "meanerg/state_space.hpp"

namespace testing {

inline meanerg::SpacePtr discrete_space(std::size_t n) {
  meanerg::StateSpace::Config c;
  for (std::size_t i = 0; i < n; ++i) c.names.push_back("s" + std::to_string(i));
  return meanerg::StateSpace::create(std::move(c));
}

inline meanerg::SpacePtr line_space(const std::vector<double>& coords) {
  meanerg::StateSpace::Config c;
  for (std::size_t i = 0; i < coords.size(); ++i) c.names.push_back("p" + std::to_string(i));
  c.metric = meanerg::EuclideanMetric{1, coords};
  return meanerg::StateSpace::create(std::move(c));
}

inline meanerg::KernelOperator op(const meanerg::SpacePtr& space, const Eigen::MatrixXd& m) {
  return meanerg::KernelOperator(meanerg::Kernel::from_dense(space, m));
}

inline meanerg::BoundedFunction fn(const meanerg::SpacePtr& space, std::vector<double> v) {
  return meanerg::BoundedFunction(space, Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
}

inline meanerg::SignedMeasure ms(const meanerg::SpacePtr& space, std::vector<double> v) {
  return meanerg::SignedMeasure(space, Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace testing
