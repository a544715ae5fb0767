#include "udkf/error.hpp"
#include "udkf/models.hpp"

namespace udkf {

Example1Model::Example1Model(double delta) : delta_(delta) {
  if (!(delta > 0.0)) {
    throw Error(ErrorCode::InvalidDelta, "ill-conditioning parameter must be positive");
  }
}

void Example1Model::validate(const VectorXd& theta) const {
  Model::validate(theta);
  if (theta(0) == 0.0) {
    throw Error(ErrorCode::SingularH, "theta = 0 makes H singular");
  }
}

InitialState Example1Model::initial_state(const VectorXd& theta) const {
  const double th = theta(0);
  return {VectorXd::Zero(4), th * th * MatrixXd::Identity(4, 4),
          {VectorXd::Zero(4)}, {2.0 * th * MatrixXd::Identity(4, 4)}};
}

RawMatrices Example1Model::raw_matrices(const VectorXd& theta, const FilterContext&) const {
  RawMatrices m = RawMatrices::zeros(dims());
  m.t << 1, 1, 0.5, 0.5,
         0, 1, 1, 1,
         0, 0, 1, 0,
         0, 0, 0, 0.606;
  m.z << 1, 1, 1, 1,
         1, 1, 1, 1 + delta_;
  m.q(3, 3) = 0.63e-2;
  const double th = theta(0);
  m.h = th * th * delta_ * delta_ * MatrixXd::Identity(2, 2);
  return m;
}

std::vector<RawMatrices> Example1Model::raw_derivatives(const VectorXd& theta,
                                                        const FilterContext&) const {
  RawMatrices d = RawMatrices::zeros(dims());
  d.h = 2.0 * theta(0) * delta_ * delta_ * MatrixXd::Identity(2, 2);
  return {d};
}

}  // namespace udkf
