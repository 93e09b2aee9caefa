#include "kinvf/vf_checks.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kinvf/commutator.hpp"
#include "kinvf/grid_ops.hpp"

namespace kinvf {

namespace {

// Max |a| over nodes at least `layers` away from every edge.
double interior_max(const TensorGrid& g, const std::vector<double>& a, int layers = 2) {
  double m = 0.0;
  for (std::size_t f = 0; f < g.size(); ++f) {
    bool inside = true;
    for (int k = 0; k < g.rank() && inside; ++k) {
      const int i = g.index_along(k, f);
      inside = i >= layers && i < g.extent(k) - layers;
    }
    if (inside) m = std::max(m, std::fabs(a[f]));
  }
  return m;
}

SpatialJet average_jet(const DistributionJet& f) {
  SpatialJet r;
  for (const auto& d : f.derivs) r.derivs.push_back(velocity_average(d));
  return r;
}

}  // namespace

double verify_pushdown(const FieldId& macro_id, const DistributionJet& f) {
  if (macro_id.flavor != Flavor::macroscopic)
    throw std::invalid_argument("verify_pushdown: macroscopic id expected");
  const SpatialField lhs = apply_field(macro_id, average_jet(f)).value();
  const DistributionField zf = apply_field(macro_id.as(Flavor::microscopic), f).value();
  const SpatialField rho = velocity_average(f.value());
  const SpatialField r = lhs - velocity_average(zf) - pushdown_constant(macro_id) * rho;
  return interior_max(r.grid().layout(), r.component(0));
}

double verify_pushdown(const FieldId& macro_id, const DistributionField& f) {
  return verify_pushdown(macro_id, DistributionJet{{f}});
}

double verify_weight_commutation(const OperatorWord& word, const DistributionField& f, double q,
                                 double rel_floor) {
  if (word.size() > 2) throw std::invalid_argument("verify_weight_commutation: |word| <= 2");
  if (word.has_time_derivative())
    throw std::invalid_argument("verify_weight_commutation: words without d/dt expected");
  const auto& g = f.grid();
  const auto chi = velocity_weight_power(g, q);
  const std::size_t block = g.velocity_block();
  std::vector<double> wf(f.size());
  for (std::size_t k = 0; k < f.size(); ++k) wf[k] = chi[k % block] * f[k];
  const DistributionField lhs = apply_word(word, f.with_values(std::move(wf)));

  std::vector<double> den(f.size(), 0.0);
  for (const auto& w : words_up_to(restricted_catalogue(g.dim(), Flavor::microscopic),
                                   static_cast<int>(word.size()))) {
    const DistributionField zb = apply_word(w, f);
    for (std::size_t k = 0; k < f.size(); ++k) den[k] += std::fabs(zb[k]);
  }
  double dmax = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    den[k] *= chi[k % block];
    dmax = std::max(dmax, den[k]);
  }
  if (dmax == 0.0) return 0.0;
  double ratio = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k)
    if (den[k] > rel_floor * dmax) ratio = std::max(ratio, std::fabs(lhs[k]) / den[k]);
  return ratio;
}

double verify_vf_identity(int j, const SpatialField& psi) {
  const int n = psi.dim();
  if (j < 0 || j >= n) throw std::invalid_argument("verify_vf_identity: bad axis");
  const auto& g = psi.grid().layout();
  const SpatialField dj = partial(psi, j);
  const SpatialField s = apply_field(FieldId::spatial_scaling(n, Flavor::macroscopic), psi);
  std::vector<SpatialField> rot(n);
  for (int i = 0; i < n; ++i) {
    if (i == j) continue;
    const auto r = apply_field(
        FieldId::rotation(n, std::min(i, j), std::max(i, j), Flavor::macroscopic), psi);
    rot[i] = i < j ? r : -1.0 * r;
  }
  std::vector<double> res(g.size());
  for (std::size_t f = 0; f < g.size(); ++f) {
    double r2 = 0.0;
    for (int i = 0; i < n; ++i) r2 += g.coord(i, f) * g.coord(i, f);
    double v = r2 * dj.component(0)[f] - g.coord(j, f) * s.component(0)[f];
    for (int i = 0; i < n; ++i)
      if (i != j) v -= g.coord(i, f) * rot[i].component(0)[f];
    res[f] = v;
  }
  return interior_max(g, res);
}

double lie_closure_residual(const OperatorWord& a, const OperatorWord& b,
                            const DistributionField& f) {
  if (a.empty() || b.empty()) return 0.0;
  const DistributionField ab = apply_word(a.concat(b), f);
  const DistributionField lhs = ab - apply_word(b.concat(a), f);
  const bool restricted = !a.has_time_derivative() && !b.has_time_derivative();
  if (!restricted) throw std::invalid_argument("lie_closure_residual: words without d/dt expected");
  const int n = f.dim();
  const auto words = words_up_to(restricted_catalogue(n, Flavor::microscopic),
                                 static_cast<int>(a.size() + b.size()) - 1);
  Eigen::MatrixXd A(static_cast<Eigen::Index>(f.size()), static_cast<Eigen::Index>(words.size()));
  for (std::size_t c = 0; c < words.size(); ++c) {
    const DistributionField zb = apply_word(words[c], f);
    for (std::size_t k = 0; k < f.size(); ++k) A(k, c) = zb[k];
  }
  Eigen::VectorXd y(static_cast<Eigen::Index>(f.size()));
  for (std::size_t k = 0; k < f.size(); ++k) y(k) = lhs[k];
  const double ny = y.norm();
  // the words commute on the grid: nothing to fit
  if (ny <= 1e-12 * Eigen::Map<const Eigen::VectorXd>(ab.values().data(), y.size()).norm()) return 0.0;
  const Eigen::VectorXd c = A.colPivHouseholderQr().solve(y);
  return (A * c - y).norm() / ny;
}

double transport_commutator_residual(const FieldId& z, const DistributionJet& f) {
  const TCommutator claim = commute_with_T(z);
  const DistributionJet zf = apply_field(z, f);
  const DistributionField lhs = apply_transport(zf, nullptr).value();
  const DistributionJet tf = apply_transport(f, nullptr);
  DistributionField r = lhs - apply_field(z, tf).value();
  if (claim == TCommutator::transport) r = r - tf.value();
  return max_abs(r);
}

}  // namespace kinvf
