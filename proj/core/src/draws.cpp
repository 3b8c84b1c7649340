#include "bsa/draws.hpp"

#include "bsa/errors.hpp"

namespace bsa {

bool PosteriorDraws::has_block(std::string_view name) const {
  for (const auto& b : blocks) {
    if (b.name == name) return true;
  }
  return false;
}

const DrawBlock& PosteriorDraws::block(std::string_view name) const {
  for (const auto& b : blocks) {
    if (b.name == name) return b;
  }
  throw DataError("unknown draw block '" + std::string(name) + "'");
}

Mat PosteriorDraws::draw(std::string_view name, int t) const {
  const auto& b = block(name);
  if (t < 0 || t >= total_draws()) throw DataError("draw index out of range");
  Mat out(b.rows, b.cols);
  Eigen::Map<Vec>(out.data(), out.size()) = b.data.row(t).transpose();
  return out;
}

}  // namespace bsa
