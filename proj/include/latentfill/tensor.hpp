#pragma once

#include <string>
#include <vector>

namespace latentfill::ad {

using Shape = std::vector<int>;

int numel(const Shape& s);
std::string shape_str(const Shape& s);
bool same_shape(const Shape& a, const Shape& b);

/// Dense 64-bit float tensor, row-major. Doubles as a leaf in the autodiff
/// graph: when requires_grad is set, backward passes accumulate into grad.
/// Accumulation across backward calls is deliberate; callers reset with
/// zero_grad().
struct Tensor {
  Shape shape;
  std::vector<double> data;
  bool requires_grad = false;
  std::vector<double> grad;  // empty, or same length as data

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0);
  Tensor(Shape s, std::vector<double> values);

  static Tensor scalar(double v);
  static Tensor zeros(Shape s) { return Tensor(std::move(s)); }
  static Tensor full(Shape s, double v) { return Tensor(std::move(s), v); }

  int size() const { return static_cast<int>(data.size()); }
  bool is_scalar() const { return data.size() == 1; }
  double item() const;

  void ensure_grad();  // allocate zeros if absent
  void zero_grad();

  /// Throws if any element (or gradient element) is NaN or Inf.
  void check_finite(const std::string& what) const;
};

void check_finite(const std::vector<double>& v, const std::string& what);

}  // namespace latentfill::ad
