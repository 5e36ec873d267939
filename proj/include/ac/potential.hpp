#pragma once

#include <string>
#include <vector>

namespace ac {

// Symmetric bistable potential with equal-depth wells at +-1, supplied as a
// polynomial in u. Carries the derivative suprema and the landscape constant
// c3 = 0.5*sup|F''| + sup|F'''| used by the upper energy bound.
class Potential {
 public:
  enum class Kind { quartic, custom };

  static Potential quartic();
  // coeffs ascending in u; throws std::invalid_argument if inadmissible
  static Potential custom(std::vector<double> coeffs);

  double eval(double u) const { return horner(coeffs_, u); }
  double d1(double u) const { return horner(d1_, u); }
  double d2(double u) const { return horner(d2_, u); }
  double d3(double u) const { return horner(d3_, u); }

  Kind kind() const { return kind_; }
  const std::vector<double>& coeffs() const { return coeffs_; }
  const std::vector<double>& d1_coeffs() const { return d1_; }
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }

  double sup_d2_on_unit() const { return sup_d2_on_unit_; }
  double sup_d3_on_double() const { return sup_d3_on_double_; }
  double c3() const { return c3_; }

 private:
  Potential() = default;
  static double horner(const std::vector<double>& c, double u);
  void finalize();  // derivatives, suprema, admissibility

  Kind kind_ = Kind::quartic;
  std::vector<double> coeffs_, d1_, d2_, d3_;
  double sup_d2_on_unit_ = 0, sup_d3_on_double_ = 0, c3_ = 0;
};

Potential make_quartic_potential();

}  // namespace ac
