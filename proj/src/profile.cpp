#include "ac/profile.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ac/core.hpp"

namespace ac {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kTailThreshold = 1e-6;  // switch to linearized tail at 1 - 1e-6

double quartic_m(double x) { return std::tanh(x / kSqrt2); }
double quartic_mp(double x) {
  double t = std::tanh(x / kSqrt2);
  return (1.0 - t * t) / kSqrt2;
}
double quartic_mpp(double x) {
  double t = std::tanh(x / kSqrt2);
  return -t * (1.0 - t * t);
}

// Cash-Karp embedded RK45 step for m' = f(m)
template <class F>
bool rk45_step(const F& f, double m, double h, double& out, double& err) {
  static const double b[6][5] = {
      {},
      {1.0 / 5},
      {3.0 / 40, 9.0 / 40},
      {3.0 / 10, -9.0 / 10, 6.0 / 5},
      {-11.0 / 54, 5.0 / 2, -70.0 / 27, 35.0 / 27},
      {1631.0 / 55296, 175.0 / 512, 575.0 / 13824, 44275.0 / 110592, 253.0 / 4096}};
  static const double c5[6] = {37.0 / 378, 0, 250.0 / 621, 125.0 / 594, 0, 512.0 / 1771};
  static const double c4[6] = {2825.0 / 27648, 0,           18575.0 / 48384,
                               13525.0 / 55296, 277.0 / 14336, 1.0 / 4};
  double k[6];
  k[0] = f(m);
  for (int s = 1; s < 6; ++s) {
    double y = m;
    for (int j = 0; j < s; ++j) y += h * b[s][j] * k[j];
    if (!(y > -2.0 && y < 2.0)) return false;
    k[s] = f(y);
  }
  double y5 = m, y4 = m;
  for (int s = 0; s < 6; ++s) {
    y5 += h * c5[s] * k[s];
    y4 += h * c4[s] * k[s];
  }
  out = y5;
  err = std::abs(y5 - y4);
  return true;
}

}  // namespace

double surface_tension_analytic_quartic() { return 2.0 * kSqrt2 / 3.0; }

double surface_tension(const Potential& potential) {
  // u = 1 - t^2 removes the sqrt endpoint behavior of sqrt(F) at u = 1;
  // symmetry covers [-1, 0].
  auto g = [&](double t) {
    double u = 1.0 - t * t;
    return std::sqrt(std::max(0.0, 2.0 * potential.eval(u))) * 2.0 * t;
  };
  double half = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      g, 0.0, 1.0, 15, 1e-12);
  return 2.0 * half;
}

Profile solve_profile(const Potential& potential) {
  Profile p;
  p.surface_tension_ = surface_tension(potential);
  p.potential_ = std::make_shared<Potential>(potential);

  if (potential.kind() == Potential::Kind::quartic) {
    p.closed_form_ = true;
    p.c1_ = 2.0;
    p.c2_ = kSqrt2;  // sqrt(F''(1)) for the quartic
    return p;
  }

  p.closed_form_ = false;
  auto f = [&](double m) { return std::sqrt(std::max(0.0, 2.0 * potential.eval(m))); };

  auto table = std::make_shared<Profile::OdeTable>();
  double x = 0.0, m = 0.0, h = 1e-3;
  const double rtol = 1e-10;
  table->x.push_back(x);
  table->m.push_back(m);
  table->mp.push_back(f(m));
  while (m < 1.0 - kTailThreshold) {
    if (x > 100.0)
      throw NoConvergence("profile ODE did not reach 1 - 1e-6 within x <= 100");
    double out, err;
    if (!rk45_step(f, m, h, out, err) || err > rtol * std::max(1.0, std::abs(out))) {
      h *= 0.5;
      if (h < 1e-14) throw NoConvergence("profile ODE step underflow");
      continue;
    }
    x += h;
    m = std::min(out, 1.0 - 1e-16);
    table->x.push_back(x);
    table->m.push_back(m);
    table->mp.push_back(f(m));
    double grow = 0.9 * std::pow(rtol / std::max(err, 1e-300), 0.2);
    h *= std::clamp(grow, 0.2, 5.0);
    h = std::min(h, 0.05);
  }
  table->x_switch = x;
  table->m_switch = m;
  table->rate = std::sqrt(std::min(potential.d2(1.0), potential.d2(-1.0)));
  p.table_ = table;
  p.build_primitives();

  // tail certificates: linearization gives the sharp rate; the safety factor
  // absorbs pre-asymptotics, and c1 is fitted as the max ratio over samples
  p.c2_ = table->rate * (1.0 - 1e-3);
  double c1 = 0.0;
  for (int i = 0; i <= 400; ++i) {
    double s = 40.0 * i / 400;
    double gap = std::abs(1.0 - p.value(s));
    double dm = std::abs(p.derivative(s));
    double ddm = std::abs(p.second_derivative(s));
    double e = std::exp(-p.c2_ * s);
    c1 = std::max({c1, gap / e, dm / (p.c2_ * e), ddm / (p.c2_ * p.c2_ * e)});
  }
  p.c1_ = c1 * (1.0 + 1e-6);
  return p;
}

// ---- primitives --------------------------------------------------------------

void Profile::build_primitives() {
  auto& t = *table_;
  const double span = 60.0, step = 1.0 / 512.0;
  t.prim_step = step;
  t.prim_span = span;
  long n = static_cast<long>(span / step);
  t.prim_t.assign(n + 1, 0.0);
  t.prim_p2.assign(n + 1, 0.0);
  auto f_t = [&](double s) {
    double v = value(s);
    return 1.0 - v * v;
  };
  auto f_p2 = [&](double s) {
    double d = derivative(s);
    return d * d;
  };
  for (long i = 1; i <= n; ++i) {
    double a = (i - 1) * step, b = i * step, mid = 0.5 * (a + b);
    t.prim_t[i] = t.prim_t[i - 1] + step / 6.0 * (f_t(a) + 4 * f_t(mid) + f_t(b));
    t.prim_p2[i] = t.prim_p2[i - 1] + step / 6.0 * (f_p2(a) + 4 * f_p2(mid) + f_p2(b));
  }
  // A(s) = int_s^inf (1-m)^2 on [-span, span], accumulated right to left
  t.prim_a.assign(2 * n + 1, 0.0);
  auto f_a = [&](double s) {
    double d = 1.0 - value(s);
    return d * d;
  };
  for (long i = 2 * n - 1; i >= 0; --i) {
    double b = span - (2 * n - i) * step, a = b + step;  // note: b < a
    double mid = 0.5 * (a + b);
    t.prim_a[i] = t.prim_a[i + 1] + step / 6.0 * (f_a(a) + 4 * f_a(mid) + f_a(b));
  }
}

namespace {
double table_eval(const std::vector<double>& tab, double step, double s) {
  double u = s / step;
  long i = std::clamp<long>(static_cast<long>(u), 0, static_cast<long>(tab.size()) - 2);
  double w = u - i;
  return (1 - w) * tab[i] + w * tab[i + 1];
}
}  // namespace

double Profile::prim_one_minus_m2(double s) const {
  if (closed_form_) return kSqrt2 * std::tanh(s / kSqrt2);
  double sign = s < 0 ? -1.0 : 1.0;
  double as = std::abs(s);
  const auto& t = *table_;
  if (as >= t.prim_span) return sign * t.prim_t.back();
  return sign * table_eval(t.prim_t, t.prim_step, as);
}

double Profile::prim_dm2(double s) const {
  if (closed_form_) {
    double th = std::tanh(s / kSqrt2);
    return 0.5 * kSqrt2 * (th - th * th * th / 3.0);
  }
  double sign = s < 0 ? -1.0 : 1.0;
  double as = std::abs(s);
  const auto& t = *table_;
  if (as >= t.prim_span) return sign * t.prim_p2.back();
  return sign * table_eval(t.prim_p2, t.prim_step, as);
}

double Profile::dm2_total() const { return 2.0 * prim_dm2(1e18); }

double Profile::tail_sq(double s) const {
  if (closed_form_) {
    double c = 1.0 / kSqrt2;
    // antiderivative of (1 - tanh(cu))^2 is 2u - 2 ln cosh(cu)/c - tanh(cu)/c
    auto lncosh = [](double u) {
      double au = std::abs(u);
      return au + std::log1p(std::exp(-2.0 * au)) - M_LN2;
    };
    double phi_inf = 2.0 * M_LN2 / c - 1.0 / c;
    double phi_s = 2.0 * s - 2.0 * lncosh(c * s) / c - std::tanh(c * s) / c;
    return phi_inf - phi_s;
  }
  const auto& t = *table_;
  if (s >= t.prim_span) return 0.0;
  if (s <= -t.prim_span) return t.prim_a.front() + 4.0 * (-t.prim_span - s);
  return table_eval(t.prim_a, t.prim_step, s + t.prim_span);
}

double Profile::value(double x) const {
  if (closed_form_) return quartic_m(x);
  double s = x < 0 ? -1.0 : 1.0;
  double ax = std::abs(x);
  const auto& t = *table_;
  if (ax >= t.x_switch)
    return s * (1.0 - (1.0 - t.m_switch) * std::exp(-t.rate * (ax - t.x_switch)));
  auto it = std::upper_bound(t.x.begin(), t.x.end(), ax);
  std::size_t i = std::min<std::size_t>(t.x.size() - 2, it - t.x.begin() - 1);
  double h = t.x[i + 1] - t.x[i], u = (ax - t.x[i]) / h;
  double h00 = (1 + 2 * u) * (1 - u) * (1 - u), h10 = u * (1 - u) * (1 - u);
  double h01 = u * u * (3 - 2 * u), h11 = u * u * (u - 1);
  return s * (h00 * t.m[i] + h * h10 * t.mp[i] + h01 * t.m[i + 1] + h * h11 * t.mp[i + 1]);
}

double Profile::derivative(double x) const {
  if (closed_form_) return quartic_mp(x);
  double m = value(x);
  return std::sqrt(std::max(0.0, 2.0 * potential_->eval(m)));
}

double Profile::second_derivative(double x) const {
  if (closed_form_) return quartic_mpp(x);
  return potential_->d1(value(x));  // m'' = F'(m)
}

// ---- cutoff profile --------------------------------------------------------

namespace {
double smoothstep5(double t) {
  if (t <= 0) return 0;
  if (t >= 1) return 1;
  return t * t * t * (10 + t * (-15 + 6 * t));
}
double smoothstep5_d(double t) {
  if (t <= 0 || t >= 1) return 0;
  double u = t * (1 - t);
  return 30 * u * u;
}
}  // namespace

CutoffProfile::CutoffProfile(const Profile& profile, double xi, double eps, double lambda1)
    : profile_(&profile), xi_(xi), X1_(std::pow(eps, -lambda1)) {
  // assert the paper's derivative bound on the transition intervals
  double bound = derivative_bound();
  for (int i = 0; i <= 2000; ++i) {
    double x = xi_ + X1_ + double(i) / 2000;
    if (std::abs(derivative(x)) > bound)
      throw std::logic_error("cutoff blend violates the derivative bound");
  }
}

double CutoffProfile::derivative_bound() const {
  return 2.0 * profile_->c1() * profile_->c2() * std::exp(-profile_->c2() * X1_);
}

double CutoffProfile::value(double x) const {
  double t = x - xi_;
  double s = t < 0 ? -1.0 : 1.0;
  double at = std::abs(t);
  if (at <= X1_) return profile_->value(t);
  if (at >= X1_ + 1.0) return s;
  double q = smoothstep5((at - X1_ - kBlendStart) / (1.0 - kBlendStart));
  double m = profile_->value(t);
  return m + (s - m) * q;
}

double CutoffProfile::derivative(double x) const {
  double t = x - xi_;
  double s = t < 0 ? -1.0 : 1.0;
  double at = std::abs(t);
  if (at <= X1_) return profile_->derivative(t);
  if (at >= X1_ + 1.0) return 0.0;
  double u = (at - X1_ - kBlendStart) / (1.0 - kBlendStart);
  double q = smoothstep5(u), dq = smoothstep5_d(u) / (1.0 - kBlendStart);
  double m = profile_->value(t), dm = profile_->derivative(t);
  // d/dx [m + (s - m) q(|t|...)] ; the q-argument runs with |t|
  return dm * (1.0 - q) + (s - m) * dq * s;
}

}  // namespace ac
