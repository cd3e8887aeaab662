#include "latentfill/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace latentfill::ad {

int numel(const Shape& s) {
  long long n = 1;
  for (int d : s) {
    if (d <= 0) throw std::invalid_argument("tensor shape has non-positive dimension " + shape_str(s));
    n *= d;
  }
  if (n > (1LL << 31)) throw std::invalid_argument("tensor too large: " + shape_str(s));
  return static_cast<int>(n);
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << 'x';
    os << s[i];
  }
  os << ']';
  return os.str();
}

bool same_shape(const Shape& a, const Shape& b) { return a == b; }

Tensor::Tensor(Shape s, double fill) : shape(std::move(s)) {
  data.assign(static_cast<std::size_t>(numel(shape)), fill);
}

Tensor::Tensor(Shape s, std::vector<double> values) : shape(std::move(s)), data(std::move(values)) {
  if (static_cast<int>(data.size()) != numel(shape)) {
    throw std::invalid_argument("tensor data length " + std::to_string(data.size()) +
                                " does not match shape " + shape_str(shape));
  }
}

Tensor Tensor::scalar(double v) { return Tensor(Shape{1}, std::vector<double>{v}); }

double Tensor::item() const {
  if (!is_scalar()) throw std::runtime_error("item() on non-scalar tensor " + shape_str(shape));
  return data[0];
}

void Tensor::ensure_grad() {
  if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
}

void Tensor::zero_grad() { grad.assign(data.size(), 0.0); }

void Tensor::check_finite(const std::string& what) const {
  ad::check_finite(data, what);
  if (!grad.empty()) ad::check_finite(grad, what + ".grad");
}

void check_finite(const std::vector<double>& v, const std::string& what) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw std::runtime_error("non-finite value in " + what);
    }
  }
}

}  // namespace latentfill::ad
