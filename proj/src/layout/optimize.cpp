#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "geoforge/layout.hpp"

namespace geoforge::layout {
namespace {

// Forward-mode dual number over at most kSlots local variables.
constexpr int kSlots = 40;

struct Dual {
  double v = 0.0;
  std::array<double, kSlots> d{};

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT(google-explicit-constructor)
};

Dual operator+(const Dual& a, const Dual& b) {
  Dual r(a.v + b.v);
  for (int i = 0; i < kSlots; ++i) r.d[i] = a.d[i] + b.d[i];
  return r;
}
Dual operator-(const Dual& a, const Dual& b) {
  Dual r(a.v - b.v);
  for (int i = 0; i < kSlots; ++i) r.d[i] = a.d[i] - b.d[i];
  return r;
}
Dual operator-(const Dual& a) {
  Dual r(-a.v);
  for (int i = 0; i < kSlots; ++i) r.d[i] = -a.d[i];
  return r;
}
Dual operator*(const Dual& a, const Dual& b) {
  Dual r(a.v * b.v);
  for (int i = 0; i < kSlots; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
  return r;
}
Dual operator/(const Dual& a, const Dual& b) {
  Dual r(a.v / b.v);
  const double inv = 1.0 / (b.v * b.v);
  for (int i = 0; i < kSlots; ++i) r.d[i] = (a.d[i] * b.v - a.v * b.d[i]) * inv;
  return r;
}
Dual chain(const Dual& a, double value, double slope) {
  Dual r(value);
  for (int i = 0; i < kSlots; ++i) r.d[i] = slope * a.d[i];
  return r;
}
Dual sqrt(const Dual& a) {
  double s = std::sqrt(a.v);
  return chain(a, s, s > 0 ? 0.5 / s : 0.0);
}
Dual exp(const Dual& a) {
  double e = std::exp(a.v);
  return chain(a, e, e);
}
Dual atan2(const Dual& y, const Dual& x) {
  double q = x.v * x.v + y.v * y.v;
  Dual r(std::atan2(y.v, x.v));
  for (int i = 0; i < kSlots; ++i) r.d[i] = q > 0 ? (x.v * y.d[i] - y.v * x.d[i]) / q : 0.0;
  return r;
}

double value(double x) { return x; }
double value(const Dual& x) { return x.v; }
using std::atan2;
using std::exp;
using std::sqrt;

template <class T>
T abs_of(const T& x) {
  return value(x) < 0 ? -x : x;
}
template <class T>
T hinge(const T& x) {  // min(0, x)
  return value(x) < 0 ? x : T(0.0);
}

template <class T>
struct Vec {
  T x, y;
};
template <class T>
Vec<T> operator-(const Vec<T>& a, const Vec<T>& b) {
  return {a.x - b.x, a.y - b.y};
}
template <class T>
T dot(const Vec<T>& a, const Vec<T>& b) {
  return a.x * b.x + a.y * b.y;
}
template <class T>
T cross(const Vec<T>& a, const Vec<T>& b) {
  return a.x * b.y - a.y * b.x;
}
template <class T>
T norm(const Vec<T>& a) {
  return sqrt(dot(a, a));
}

struct Layout {
  std::size_t points, circles;
  std::size_t radius(int k) const { return 2 * points + static_cast<std::size_t>(k); }
  std::size_t scale() const { return 2 * points + circles; }
  std::size_t size() const { return scale() + 1; }
};

Layout shape_of(const ConstraintSystem& s) { return {s.points.size(), s.circles.size()}; }

// Global variable indices a residual reads.
std::vector<std::size_t> inputs(const ConstraintSystem& s, const Residual& r) {
  Layout l = shape_of(s);
  std::vector<std::size_t> out;
  for (int p : r.points) {
    out.push_back(2 * static_cast<std::size_t>(p));
    out.push_back(2 * static_cast<std::size_t>(p) + 1);
  }
  if (r.circle >= 0) out.push_back(l.radius(r.circle));
  if (r.kind == ResidualKind::FixedLength) out.push_back(l.scale());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (out.size() > static_cast<std::size_t>(kSlots)) throw LayoutError("NumericalFailure", "residual too wide");
  return out;
}

template <class T, class Get>
void components(const ConstraintSystem& s, const Residual& r, const Get& get, const LayoutConfig& cfg,
                std::vector<T>& out) {
  out.clear();
  const Layout l = shape_of(s);
  const double diag = s.canvas.diagonal();
  auto P = [&](std::size_t i) {
    auto p = static_cast<std::size_t>(r.points[i]);
    return Vec<T>{get(2 * p), get(2 * p + 1)};
  };
  auto radius = [&] { return get(l.radius(r.circle)); };
  auto cos_at = [&](std::size_t a, std::size_t v, std::size_t c) {
    auto u = P(a) - P(v), w = P(c) - P(v);
    return dot(u, w) / (norm(u) * norm(w));
  };
  auto polygon = [&](bool area) {
    T perimeter(0.0), twice(0.0);
    const std::size_t n = r.points.size();
    for (std::size_t i = 0; i < n; ++i) {
      auto a = P(i), b = P((i + 1) % n);
      perimeter = perimeter + norm(b - a);
      twice = twice + cross(a, b);
    }
    return area ? abs_of(twice) * T(0.5) : perimeter;
  };

  switch (r.kind) {
    case ResidualKind::Collinear: {
      auto a = P(0), b = P(1), c = P(2);
      if (r.order) {
        auto u = b - a, w = c - b;
        out.push_back(hinge(dot(u, w) / (norm(u) * norm(w))));
      } else {
        out.push_back(cross(b - a, c - a) / norm(b - a) / T(diag));
      }
      break;
    }
    case ResidualKind::OnCircle:
      if (r.order) {
        out.push_back(hinge(cross(P(1) - P(0), P(2) - P(0)) / T(diag * diag)));
      } else {
        out.push_back((norm(P(1) - P(0)) - radius()) / T(diag));
      }
      break;
    case ResidualKind::Perpendicular:
    case ResidualKind::Tangent: {
      Vec<T> u, w;
      if (r.kind == ResidualKind::Perpendicular) {
        u = P(1) - P(0);
        w = P(3) - P(2);
      } else {
        u = P(0) - P(1);
        w = P(2) - P(1);
      }
      out.push_back(dot(u, w) / (norm(u) * norm(w)));
      break;
    }
    case ResidualKind::Parallel: {
      auto u = P(1) - P(0), w = P(3) - P(2);
      T nu = norm(u), nw = norm(w);
      out.push_back(u.x / nu - w.x / nw);
      out.push_back(u.y / nu - w.y / nw);
      break;
    }
    case ResidualKind::EqualLength: {
      T a = norm(P(1) - P(0)), b = norm(P(3) - P(2));
      out.push_back((a - b) / ((a + b) * T(0.5)));
      break;
    }
    case ResidualKind::FixedLength: {
      T sc = exp(get(l.scale()));
      T target = sc * T(r.target);
      T measured(0.0);
      switch (r.measure) {
        case Measure::Segment: measured = norm(P(1) - P(0)); break;
        case Measure::Radius: measured = radius(); break;
        case Measure::Diameter: measured = radius() * T(2.0); break;
        case Measure::Perimeter: measured = polygon(false); break;
        case Measure::Area:
          measured = polygon(true);
          target = target * sc;
          break;
        case Measure::ArcLength: {
          auto a = P(1) - P(0), b = P(2) - P(0);
          T theta = atan2(cross(a, b), dot(a, b));
          if (value(theta) < 0) theta = theta + T(2 * std::numbers::pi);
          measured = radius() * theta;
          break;
        }
      }
      out.push_back((measured - target) / target);
      break;
    }
    case ResidualKind::FixedAngle:
      out.push_back(cos_at(0, 1, 2) - T(std::cos(r.target * std::numbers::pi / 180.0)));
      break;
    case ResidualKind::EqualAngle:
      out.push_back(cos_at(0, 1, 2) - cos_at(3, 4, 5));
      break;
    case ResidualKind::Midpoint: {
      auto m = P(0), a = P(1), b = P(2);
      out.push_back((m.x - (a.x + b.x) * T(0.5)) / T(diag));
      out.push_back((m.y - (a.y + b.y) * T(0.5)) / T(diag));
      break;
    }
    case ResidualKind::NonDegeneracy:
      if (r.points.size() == 2) {
        out.push_back(hinge(norm(P(1) - P(0)) / T(cfg.separation * diag) - T(1.0)));
      } else if (r.points.size() == 3) {
        T area = abs_of(cross(P(1) - P(0), P(2) - P(0))) * T(0.5);
        out.push_back(hinge(area / T(cfg.min_area * s.canvas.area()) - T(1.0)));
      } else {
        auto p = P(0);
        double mx = cfg.margin * s.canvas.width, my = cfg.margin * s.canvas.height;
        out.push_back(hinge(p.x - T(mx)) / T(diag));
        out.push_back(hinge(T(s.canvas.width - mx) - p.x) / T(diag));
        out.push_back(hinge(p.y - T(my)) / T(diag));
        out.push_back(hinge(T(s.canvas.height - my) - p.y) / T(diag));
      }
      break;
  }
}

double weight(const Residual& r, const LayoutConfig& cfg) {
  return r.strictness() == Strictness::Incidence ? cfg.weight_incidence : cfg.weight_metric;
}

std::vector<bool> free_mask(const ConstraintSystem& s) {
  Layout l = shape_of(s);
  std::vector<bool> free(l.size(), true);
  if (!s.order.empty()) {
    auto first = static_cast<std::size_t>(s.order[0]);
    free[2 * first] = free[2 * first + 1] = false;
    if (s.order.size() > 1) free[2 * static_cast<std::size_t>(s.order[1]) + 1] = false;
  }
  if (!s.uses_scale()) free[l.scale()] = false;
  return free;
}

struct Evaluation {
  Eigen::VectorXd r;  // weighted components
  double loss = 0.0;
};

Evaluation weighted(const ConstraintSystem& s, const std::vector<double>& x, const LayoutConfig& cfg) {
  std::vector<double> all, tmp;
  for (const auto& res : s.residuals) {
    components<double>(s, res, [&](std::size_t i) { return x[i]; }, cfg, tmp);
    double w = std::sqrt(weight(res, cfg));
    for (double c : tmp) all.push_back(w * c);
  }
  Evaluation e;
  e.r = Eigen::Map<Eigen::VectorXd>(all.data(), static_cast<Eigen::Index>(all.size()));
  e.loss = e.r.squaredNorm();
  return e;
}

// Weighted Jacobian restricted to the free columns.
Eigen::MatrixXd weighted_jacobian(const ConstraintSystem& s, const std::vector<double>& x,
                                  const std::vector<int>& column, Eigen::Index cols, const LayoutConfig& cfg) {
  std::vector<std::vector<double>> rows;
  std::vector<Dual> tmp;
  Eigen::Index total = 0;
  for (const auto& res : s.residuals) {
    auto in = inputs(s, res);
    auto get = [&](std::size_t i) {
      Dual d(x[i]);
      auto pos = std::lower_bound(in.begin(), in.end(), i) - in.begin();
      d.d[static_cast<std::size_t>(pos)] = 1.0;
      return d;
    };
    components<Dual>(s, res, get, cfg, tmp);
    double w = std::sqrt(weight(res, cfg));
    for (const auto& c : tmp) {
      std::vector<double> row(static_cast<std::size_t>(cols), 0.0);
      for (std::size_t k = 0; k < in.size(); ++k) {
        int col = column[in[k]];
        if (col >= 0) row[static_cast<std::size_t>(col)] = w * c.d[k];
      }
      rows.push_back(std::move(row));
      ++total;
    }
  }
  Eigen::MatrixXd j(total, cols);
  for (Eigen::Index i = 0; i < total; ++i) {
    for (Eigen::Index k = 0; k < cols; ++k) j(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
  }
  return j;
}

std::vector<double> initial_guess(const ConstraintSystem& s, Rng& rng, const LayoutConfig& cfg) {
  Layout l = shape_of(s);
  std::vector<double> x(l.size(), 0.0);
  const double w = s.canvas.width, h = s.canvas.height;
  const double mx = 2 * cfg.margin * w, my = 2 * cfg.margin * h;
  for (std::size_t p = 0; p < l.points; ++p) {
    x[2 * p] = rng.uniform(mx, w - mx);
    x[2 * p + 1] = rng.uniform(my, h - my);
  }
  if (!s.order.empty()) {
    auto first = static_cast<std::size_t>(s.order[0]);
    x[2 * first] = w / 2;
    x[2 * first + 1] = h / 2;
    if (s.order.size() > 1) x[2 * static_cast<std::size_t>(s.order[1]) + 1] = h / 2;
  }
  for (std::size_t k = 0; k < l.circles; ++k) {
    auto o = static_cast<std::size_t>(s.index_of(s.circles[k]));
    double sum = 0;
    int count = 0;
    for (const auto& r : s.residuals) {
      if (r.kind != ResidualKind::OnCircle || r.order || r.circle != static_cast<int>(k)) continue;
      auto p = static_cast<std::size_t>(r.points[1]);
      sum += std::hypot(x[2 * p] - x[2 * o], x[2 * p + 1] - x[2 * o + 1]);
      ++count;
    }
    x[l.radius(static_cast<int>(k))] = count ? sum / count : 0.25 * std::min(w, h);
  }
  // Scale: median of measured/target over the length-like facts.
  std::vector<double> ratios;
  for (const auto& r : s.residuals) {
    if (r.kind != ResidualKind::FixedLength || r.target <= 0) continue;
    double m = 0;
    auto at = [&](std::size_t i) {
      auto p = static_cast<std::size_t>(r.points[i]);
      return std::pair{x[2 * p], x[2 * p + 1]};
    };
    switch (r.measure) {
      case Measure::Segment: {
        auto [ax, ay] = at(0);
        auto [bx, by] = at(1);
        m = std::hypot(bx - ax, by - ay);
        break;
      }
      case Measure::Radius: m = x[l.radius(r.circle)]; break;
      case Measure::Diameter: m = 2 * x[l.radius(r.circle)]; break;
      default: continue;
    }
    ratios.push_back(m / r.target);
  }
  double scale = 0.25 * std::min(w, h);
  if (!ratios.empty()) {
    std::sort(ratios.begin(), ratios.end());
    scale = ratios[ratios.size() / 2];
  } else {
    for (const auto& r : s.residuals) {
      if (r.kind == ResidualKind::FixedLength && r.target > 0) {
        scale = 0.25 * std::min(w, h) / (r.measure == Measure::Area ? std::sqrt(r.target) : r.target);
        break;
      }
    }
  }
  x[l.scale()] = std::log(std::max(scale, 1e-9));
  return x;
}

// One damped least-squares descent; returns the final variables.
std::vector<double> descend(const ConstraintSystem& s, std::vector<double> x, const std::vector<bool>& free,
                            const LayoutConfig& cfg) {
  std::vector<int> column(x.size(), -1);
  Eigen::Index cols = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (free[i]) column[i] = static_cast<int>(cols++);
  }
  if (cols == 0) return x;
  auto current = weighted(s, x, cfg);
  double lambda = 1e-3;
  for (int it = 0; it < cfg.max_iterations && current.loss > 1e-24; ++it) {
    Eigen::MatrixXd j = weighted_jacobian(s, x, column, cols, cfg);
    Eigen::MatrixXd a = j.transpose() * j;
    Eigen::VectorXd g = j.transpose() * current.r;
    Eigen::VectorXd diag = a.diagonal().array() + 1e-9;
    bool improved = false;
    while (lambda < 1e16) {
      Eigen::MatrixXd m = a;
      m.diagonal() += lambda * diag;
      Eigen::VectorXd step = -m.ldlt().solve(g);
      if (!step.allFinite()) {
        lambda *= 2;
        continue;
      }
      std::vector<double> trial = x;
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (column[i] >= 0) trial[i] += step(column[i]);
      }
      auto next = weighted(s, trial, cfg);
      if (std::isfinite(next.loss) && next.loss < current.loss) {
        double gain = current.loss - next.loss;
        x = std::move(trial);
        current = std::move(next);
        lambda = std::max(lambda * 0.5, 1e-12);
        improved = gain > 1e-15 * (1.0 + current.loss);
        break;
      }
      lambda *= 2;
    }
    if (!improved) break;
  }
  return x;
}

}  // namespace

std::vector<double> pack(const ConstraintSystem& s, const LayoutSolution& sol) {
  Layout l = shape_of(s);
  std::vector<double> x(l.size(), 0.0);
  for (std::size_t p = 0; p < l.points && p < sol.coords.size(); ++p) {
    x[2 * p] = sol.coords[p].x;
    x[2 * p + 1] = sol.coords[p].y;
  }
  for (std::size_t k = 0; k < l.circles && k < sol.radii.size(); ++k) x[l.radius(static_cast<int>(k))] = sol.radii[k];
  x[l.scale()] = std::log(sol.scale);
  return x;
}

LayoutSolution unpack(const ConstraintSystem& s, const std::vector<double>& x) {
  Layout l = shape_of(s);
  LayoutSolution sol;
  for (std::size_t p = 0; p < l.points; ++p) sol.coords.push_back({x[2 * p], x[2 * p + 1]});
  for (std::size_t k = 0; k < l.circles; ++k) sol.radii.push_back(x[l.radius(static_cast<int>(k))]);
  sol.scale = std::exp(x[l.scale()]);
  return sol;
}

std::vector<double> evaluate(const ConstraintSystem& s, const Residual& r, const std::vector<double>& vars,
                             const LayoutConfig& config) {
  std::vector<double> out;
  components<double>(s, r, [&](std::size_t i) { return vars[i]; }, config, out);
  return out;
}

std::vector<std::vector<double>> jacobian(const ConstraintSystem& s, const Residual& r,
                                          const std::vector<double>& vars, const LayoutConfig& config) {
  auto in = inputs(s, r);
  std::vector<Dual> comps;
  auto get = [&](std::size_t i) {
    Dual d(vars[i]);
    auto pos = std::lower_bound(in.begin(), in.end(), i) - in.begin();
    if (pos < static_cast<long>(in.size()) && in[static_cast<std::size_t>(pos)] == i) {
      d.d[static_cast<std::size_t>(pos)] = 1.0;
    }
    return d;
  };
  components<Dual>(s, r, get, config, comps);
  std::vector<std::vector<double>> rows;
  for (const auto& c : comps) {
    std::vector<double> row(vars.size(), 0.0);
    for (std::size_t k = 0; k < in.size(); ++k) row[in[k]] = c.d[k];
    rows.push_back(std::move(row));
  }
  return rows;
}

void score(const ConstraintSystem& s, LayoutSolution& sol, const LayoutConfig& config) {
  auto x = pack(s, sol);
  sol.residuals.clear();
  sol.loss = 0.0;
  for (const auto& r : s.residuals) {
    auto c = evaluate(s, r, x, config);
    double sq = 0;
    for (double v : c) sq += v * v;
    sol.residuals.push_back(std::sqrt(sq));
    sol.loss += weight(r, config) * sq;
  }
}

ThresholdReport check_thresholds(const ConstraintSystem& s, const LayoutSolution& sol, const LayoutConfig& config) {
  ThresholdReport rep;
  for (std::size_t i = 0; i < s.residuals.size(); ++i) {
    double v = i < sol.residuals.size() ? sol.residuals[i] : INFINITY;
    bool incidence = s.residuals[i].strictness() == Strictness::Incidence;
    if (!std::isfinite(v)) v = INFINITY;
    if (incidence) {
      rep.max_incidence = std::max(rep.max_incidence, v);
    } else {
      rep.max_metric = std::max(rep.max_metric, v);
    }
    if (v > (incidence ? config.tau_incidence : config.tau_metric)) rep.failing.push_back(static_cast<int>(i));
  }
  for (const auto& p : sol.coords) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) rep.failing.push_back(-1);
  }
  rep.accepted = rep.failing.empty();
  return rep;
}

LayoutSolution optimize(const ConstraintSystem& s, Rng& rng, const LayoutConfig& config) {
  auto free = free_mask(s);
  std::optional<LayoutSolution> best;
  bool any_finite = false;
  for (int restart = 0; restart < config.restarts; ++restart) {
    auto x = descend(s, initial_guess(s, rng, config), free, config);
    auto sol = unpack(s, x);
    score(s, sol, config);
    sol.restarts_used = restart + 1;
    if (!std::isfinite(sol.loss)) continue;
    any_finite = true;
    if (check_thresholds(s, sol, config).accepted) return sol;
    if (!best || sol.loss < best->loss) best = std::move(sol);
  }
  if (!any_finite) throw LayoutError("NumericalFailure", "loss is not finite in any restart");
  throw LayoutError("ThresholdFail", "best loss " + std::to_string(best->loss) + " after " +
                                         std::to_string(config.restarts) + " restarts");
}

nlohmann::json to_json(const ConstraintSystem& s, const LayoutSolution& sol, const LayoutConfig& config) {
  nlohmann::json points = nlohmann::json::object();
  for (std::size_t i = 0; i < s.points.size() && i < sol.coords.size(); ++i) {
    points[s.points[i]] = {sol.coords[i].x, sol.coords[i].y};
  }
  nlohmann::json circles = nlohmann::json::object();
  for (std::size_t k = 0; k < s.circles.size() && k < sol.radii.size(); ++k) circles[s.circles[k]] = sol.radii[k];
  nlohmann::json residuals = nlohmann::json::array();
  for (std::size_t i = 0; i < s.residuals.size(); ++i) {
    const auto& r = s.residuals[i];
    cdl::PointTuple labels;
    for (int p : r.points) labels.push_back(s.points[static_cast<std::size_t>(p)]);
    double v = i < sol.residuals.size() ? sol.residuals[i] : 0.0;
    double tau = r.strictness() == Strictness::Incidence ? config.tau_incidence : config.tau_metric;
    residuals.push_back({{"kind", name_of(r.kind)},
                         {"class", name_of(r.strictness())},
                         {"points", labels},
                         {"source", r.source},
                         {"value", v},
                         {"ok", v <= tau}});
  }
  return {{"canvas", {s.canvas.width, s.canvas.height}},
          {"points", points},
          {"circles", circles},
          {"scale", sol.scale},
          {"loss", sol.loss},
          {"restarts", sol.restarts_used},
          {"residuals", residuals}};
}

}  // namespace geoforge::layout
