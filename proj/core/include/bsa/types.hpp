#pragma once

#include <Eigen/Dense>

namespace bsa {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

}  // namespace bsa
