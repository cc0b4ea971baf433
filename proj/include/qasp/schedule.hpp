#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qasp/chem.hpp"
#include "qasp/pauli.hpp"

namespace qasp {

enum class PathKind { linear, quadratic, constant, tabulated };

/// Adiabatic weight path w(u) on [0,1] with its integral z(u) and
/// zeta = z(1). Linear and quadratic paths use closed forms; tabulated paths
/// use shape-preserving cubic interpolation whose piecewise integral is
/// evaluated exactly (well inside the 1e-12 quadrature budget).
/// The `constant` path (w == 1, zeta = 1) drives fixed-Hamiltonian sampling.
class AdiabaticPath {
 public:
  static AdiabaticPath linear() { return AdiabaticPath(PathKind::linear); }
  static AdiabaticPath quadratic() { return AdiabaticPath(PathKind::quadratic); }
  static AdiabaticPath constant() { return AdiabaticPath(PathKind::constant); }

  /// Tabulated (u, w) pairs; u must ascend from 0 to 1 with w(0)=0, w(1)=1.
  static AdiabaticPath tabulated(std::vector<double> u, std::vector<double> w) {
    if (u.size() != w.size() || u.size() < 2)
      throw std::invalid_argument("tabulated path: need matching u/w with >= 2 nodes");
    if (std::abs(u.front()) > 1e-12 || std::abs(u.back() - 1.0) > 1e-12)
      throw std::invalid_argument("tabulated path: u must span [0, 1]");
    if (std::abs(w.front()) > 1e-9 || std::abs(w.back() - 1.0) > 1e-9)
      throw std::invalid_argument("tabulated path: need w(0)=0 and w(1)=1");
    for (std::size_t i = 0; i + 1 < u.size(); ++i)
      if (u[i + 1] <= u[i]) throw std::invalid_argument("tabulated path: u not increasing");
    for (double wi : w)
      if (wi < 0) throw std::invalid_argument("tabulated path: negative weight");
    AdiabaticPath p(PathKind::tabulated);
    p.u_ = std::move(u);
    p.w_ = std::move(w);
    p.build_pchip();
    return p;
  }

  PathKind kind() const { return kind_; }

  double weight(double u) const {
    check_u(u);
    switch (kind_) {
      case PathKind::linear: return u;
      case PathKind::quadratic: return 2 * u * u - u * u * u * u;
      case PathKind::constant: return 1.0;
      case PathKind::tabulated: return eval_pchip(u);
    }
    return 0;
  }

  /// z(u) = integral of w from 0 to u.
  double z(double u) const {
    check_u(u);
    switch (kind_) {
      case PathKind::linear: return u * u / 2;
      case PathKind::quadratic: return 2 * u * u * u / 3 - u * u * u * u * u / 5;
      case PathKind::constant: return u;
      case PathKind::tabulated: return eval_pchip_integral(u);
    }
    return 0;
  }

  double zeta() const { return zeta_; }

  /// Monotone inverse: z(z_inverse(v)) = v to better than 1e-10.
  double z_inverse(double v) const {
    if (v < -1e-12 || v > zeta_ + 1e-12)
      throw std::invalid_argument("z_inverse: value outside [0, zeta]");
    v = std::clamp(v, 0.0, zeta_);
    switch (kind_) {
      case PathKind::linear: return std::sqrt(2 * v);
      case PathKind::constant: return v;
      default: break;
    }
    double lo = 0, hi = 1;
    for (int it = 0; it < 80 && hi - lo > 1e-15; ++it) {
      double mid = (lo + hi) / 2;
      (z(mid) < v ? lo : hi) = mid;
    }
    return (lo + hi) / 2;
  }

 private:
  explicit AdiabaticPath(PathKind k) : kind_(k) {
    switch (k) {
      case PathKind::linear: zeta_ = 0.5; break;
      case PathKind::quadratic: zeta_ = 7.0 / 15.0; break;
      case PathKind::constant: zeta_ = 1.0; break;
      case PathKind::tabulated: zeta_ = 0.0; break;  // set by build_pchip
    }
  }

  static void check_u(double u) {
    if (u < -1e-12 || u > 1 + 1e-12)
      throw std::invalid_argument("path parameter u outside [0, 1]");
  }

  // Fritsch-Carlson shape-preserving slopes, then per-segment cubic
  // coefficients and exact cumulative integrals.
  void build_pchip() {
    const std::size_t n = u_.size();
    std::vector<double> h(n - 1), d(n - 1), m(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      h[i] = u_[i + 1] - u_[i];
      d[i] = (w_[i + 1] - w_[i]) / h[i];
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (d[i - 1] * d[i] <= 0) {
        m[i] = 0;
      } else {
        double w1 = 2 * h[i] + h[i - 1], w2 = h[i] + 2 * h[i - 1];
        m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
      }
    }
    auto endpoint = [](double h0, double h1, double d0, double d1) {
      double m0 = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
      if (m0 * d0 <= 0) return 0.0;
      if (std::abs(m0) > 3 * std::abs(d0)) return 3 * d0;
      return m0;
    };
    m[0] = n > 2 ? endpoint(h[0], h[1], d[0], d[1]) : d[0];
    m[n - 1] = n > 2 ? endpoint(h[n - 2], h[n - 3], d[n - 2], d[n - 3]) : d[n - 2];

    coeff_.resize(n - 1);
    cumz_.assign(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      double a = w_[i];
      double b = m[i];
      double c = (3 * d[i] - 2 * m[i] - m[i + 1]) / h[i];
      double e = (m[i] + m[i + 1] - 2 * d[i]) / (h[i] * h[i]);
      coeff_[i] = {a, b, c, e};
      double x = h[i];
      cumz_[i + 1] = cumz_[i] + a * x + b * x * x / 2 + c * x * x * x / 3 + e * x * x * x * x / 4;
    }
    zeta_ = cumz_.back();
  }

  std::size_t segment_of(double u) const {
    auto it = std::upper_bound(u_.begin(), u_.end(), u);
    std::size_t i = static_cast<std::size_t>(it - u_.begin());
    if (i == 0) return 0;
    if (i >= u_.size()) return u_.size() - 2;
    return i - 1;
  }

  double eval_pchip(double u) const {
    u = std::clamp(u, 0.0, 1.0);
    std::size_t i = segment_of(u);
    double x = u - u_[i];
    auto [a, b, c, e] = coeff_[i];
    return std::max(0.0, a + x * (b + x * (c + x * e)));
  }

  double eval_pchip_integral(double u) const {
    u = std::clamp(u, 0.0, 1.0);
    std::size_t i = segment_of(u);
    double x = u - u_[i];
    auto [a, b, c, e] = coeff_[i];
    return cumz_[i] + a * x + b * x * x / 2 + c * x * x * x / 3 + e * x * x * x * x / 4;
  }

  PathKind kind_;
  double zeta_ = 0.0;
  std::vector<double> u_, w_;
  struct Cubic {
    double a, b, c, e;
  };
  std::vector<Cubic> coeff_;
  std::vector<double> cumz_;
};

/// Time-dependent Hamiltonian H(u): either H_B + w(u) H_I, or a termwise
/// linear interpolation between models tabulated on a uniform u grid
/// (snapshot schedules; used for stretched-geometry paths).
struct HamiltonianSchedule {
  HamiltonianModel model;
  AdiabaticPath path = AdiabaticPath::linear();
  double total_time = 0.0;
  std::vector<HamiltonianModel> snapshots;  // empty for weight schedules

  bool is_snapshot() const { return !snapshots.empty(); }
};

inline HamiltonianSchedule make_weight_schedule(HamiltonianModel model, AdiabaticPath path,
                                                double total_time) {
  return HamiltonianSchedule{std::move(model), std::move(path), total_time, {}};
}

inline HamiltonianSchedule make_snapshot_schedule(std::vector<HamiltonianModel> snapshots,
                                                  double total_time) {
  if (snapshots.size() < 2)
    throw std::invalid_argument("snapshot schedule: need at least two snapshots");
  for (const auto& s : snapshots)
    if (s.qubit_count != snapshots.front().qubit_count)
      throw std::invalid_argument("snapshot schedule: inconsistent qubit counts");
  HamiltonianSchedule sched;
  sched.model = snapshots.back();
  sched.path = AdiabaticPath::linear();  // unused for snapshot interpolation
  sched.total_time = total_time;
  sched.snapshots = std::move(snapshots);
  return sched;
}

/// H(u) without its identity component.
inline PauliSum hamiltonian_at(const HamiltonianSchedule& sched, double u) {
  if (u < -1e-12 || u > 1 + 1e-12)
    throw std::invalid_argument("hamiltonian_at: u outside [0, 1]");
  u = std::clamp(u, 0.0, 1.0);
  if (!sched.is_snapshot()) {
    PauliSum h(sched.model.qubit_count);
    h.add(sched.model.background);
    h.add(sched.model.interaction.scaled(sched.path.weight(u)));
    return h;
  }
  const auto& snaps = sched.snapshots;
  const std::size_t segments = snaps.size() - 1;
  double x = u * segments;
  std::size_t j = std::min(static_cast<std::size_t>(x), segments - 1);
  double f = x - j;
  // termwise interpolation; terms absent on one side count as zero
  PauliSum h(snaps.front().qubit_count);
  h.add(snaps[j].background.scaled(1 - f));
  h.add(snaps[j].interaction.scaled(1 - f));
  h.add(snaps[j + 1].background.scaled(f));
  h.add(snaps[j + 1].interaction.scaled(f));
  return h;
}

/// Path specifier from config text: `linear`, `quadratic`, `constant` or
/// `file:<tabulated-path-file>` with `u w` pairs per line.
inline AdiabaticPath parse_path_spec(const std::string& spec,
                                     const std::function<std::string(const std::string&)>& read_file) {
  if (spec == "linear") return AdiabaticPath::linear();
  if (spec == "quadratic") return AdiabaticPath::quadratic();
  if (spec == "constant") return AdiabaticPath::constant();
  if (spec.rfind("file:", 0) == 0) {
    std::istringstream is(read_file(spec.substr(5)));
    std::vector<double> u, w;
    std::string line;
    while (std::getline(is, line)) {
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream ls(line);
      double a, b;
      if (ls >> a >> b) {
        u.push_back(a);
        w.push_back(b);
      }
    }
    return AdiabaticPath::tabulated(std::move(u), std::move(w));
  }
  throw std::invalid_argument("unknown path spec: " + spec);
}

}  // namespace qasp
