#include "kinvf/vf_apply.hpp"

#include <stdexcept>

#include "kinvf/kernels.hpp"

namespace kinvf {

namespace {

struct CoefTerm {
  int tensor_axis;
  double b;
};

// Coefficient of the field along one coordinate, as a function of grid nodes.
struct Coefficient {
  double constant = 0.0;  // a + B_t * t
  double dt_rate = 0.0;   // B_t
  std::vector<CoefTerm> terms;
  bool zero() const { return constant == 0.0 && dt_rate == 0.0 && terms.empty(); }
};

// y index of tensor axis k (tensor axes are the x-axes, then possibly the v-axes).
Coefficient coefficient(const AffineField& z, int m, int rank, double t) {
  Coefficient c;
  c.dt_rate = z.b(m, 0);
  c.constant = z.a[m] + c.dt_rate * t;
  for (int k = 0; k < rank; ++k)
    if (z.b(m, 1 + k) != 0.0) c.terms.push_back({k, z.b(m, 1 + k)});
  for (int k = rank; k < z.D() - 1; ++k)
    if (z.b(m, 1 + k) != 0.0) throw std::invalid_argument("apply: field acts on missing coordinates");
  return c;
}

// out += (coefficient) * in, node by node.
void accumulate(std::vector<double>& out, const Coefficient& c, const std::vector<double>& in,
                const TensorGrid& g, double extra = 0.0) {
  const double base = c.constant + extra;
#pragma omp parallel for schedule(static)
  for (std::size_t f = 0; f < g.size(); ++f) {
    double s = base;
    for (const auto& term : c.terms) s += term.b * g.coord(term.tensor_axis, f);
    out[f] += s * in[f];
  }
}

void add_scaled(std::vector<double>& out, double c, const std::vector<double>& in) {
  if (c == 0.0) return;
  for (std::size_t f = 0; f < out.size(); ++f) out[f] += c * in[f];
}

std::vector<double> diff(const std::vector<double>& in, const TensorGrid& g, int axis) {
  std::vector<double> out(in.size());
  kernels::diff_axis(in.data(), out.data(), g, axis);
  return out;
}

// Applies z to the jet of arrays g[k] on a tensor grid whose axes map to
// y-coordinates 1..rank. Returns the jet of z g.
std::vector<std::vector<double>> apply_jet(const AffineField& z, const TensorGrid& grid, double t,
                                           const std::vector<const std::vector<double>*>& g) {
  const int rank = grid.rank();
  const Coefficient ct = coefficient(z, 0, rank, t);
  if (!ct.terms.empty()) throw std::invalid_argument("apply: d/dt coefficient depends on space");
  const bool has_dt = !ct.zero();
  const std::size_t L = g.size();
  if (L == 0 || (has_dt && L < 2))
    throw std::invalid_argument("apply: field contains d/dt but no time derivative was supplied");
  const std::size_t out_len = has_dt ? L - 1 : L;

  std::vector<Coefficient> cs;
  std::vector<int> axes;
  for (int k = 0; k < rank; ++k) {
    Coefficient c = coefficient(z, 1 + k, rank, t);
    if (c.zero()) continue;
    cs.push_back(std::move(c));
    axes.push_back(k);
  }
  for (int m = 1 + rank; m < z.D(); ++m)
    if (!coefficient(z, m, rank, t).zero())
      throw std::invalid_argument("apply: field acts on missing coordinates");

  std::vector<std::vector<double>> out(out_len, std::vector<double>(grid.size(), 0.0));
  for (std::size_t a = 0; a < axes.size(); ++a) {
    std::vector<double> prev;
    for (std::size_t k = 0; k < out_len; ++k) {
      std::vector<double> cur = diff(*g[k], grid, axes[a]);
      accumulate(out[k], cs[a], cur, grid);
      if (k > 0) add_scaled(out[k], static_cast<double>(k) * cs[a].dt_rate, prev);
      prev = std::move(cur);
    }
  }
  if (has_dt) {
    for (std::size_t k = 0; k < out_len; ++k) {
      Coefficient c = ct;
      accumulate(out[k], c, *g[k + 1], grid);
      add_scaled(out[k], static_cast<double>(k) * ct.dt_rate, *g[k]);
    }
  }
  return out;
}

void require_flavor(const FieldId& z, Flavor fl) {
  if (z.flavor != fl)
    throw std::invalid_argument(fl == Flavor::microscopic
                                    ? "apply: macroscopic field applied to a distribution field"
                                    : "apply: microscopic field applied to a spatial field");
}

}  // namespace

DistributionJet apply_field(const FieldId& z, const DistributionJet& f) {
  require_flavor(z, Flavor::microscopic);
  const auto& head = f.value();
  std::vector<const std::vector<double>*> g;
  for (const auto& d : f.derivs) {
    if (!(d.grid() == head.grid())) throw std::invalid_argument("apply: jet grids differ");
    g.push_back(&d.values());
  }
  auto out = apply_jet(AffineField::of(z), head.grid().layout(), head.time(), g);
  DistributionJet r;
  for (auto& v : out) r.derivs.push_back(head.with_values(std::move(v)));
  return r;
}

SpatialJet apply_field(const FieldId& z, const SpatialJet& psi) {
  require_flavor(z, Flavor::macroscopic);
  const auto& head = psi.value();
  if (head.component_count() != 1) throw std::invalid_argument("apply: scalar field expected");
  std::vector<const std::vector<double>*> g;
  for (const auto& d : psi.derivs) g.push_back(&d.component(0));
  auto out = apply_jet(AffineField::of(z), head.grid().layout(), head.time(), g);
  SpatialJet r;
  for (auto& v : out) r.derivs.emplace_back(head.grid(), head.time(), std::move(v));
  return r;
}

DistributionField apply_field(const FieldId& z, const DistributionField& f,
                              const DistributionField* dt_f) {
  DistributionJet j{{f}};
  if (dt_f) j.derivs.push_back(*dt_f);
  return apply_field(z, j).derivs.front();
}

SpatialField apply_field(const FieldId& z, const SpatialField& psi, const SpatialField* dt_psi) {
  SpatialJet j{{psi}};
  if (dt_psi) j.derivs.push_back(*dt_psi);
  return apply_field(z, j).derivs.front();
}

DistributionJet apply_word(const OperatorWord& w, const DistributionJet& f) {
  DistributionJet cur = f;
  for (auto it = w.letters.rbegin(); it != w.letters.rend(); ++it) cur = apply_field(*it, cur);
  return cur;
}

SpatialJet apply_word(const OperatorWord& w, const SpatialJet& psi) {
  SpatialJet cur = psi;
  for (auto it = w.letters.rbegin(); it != w.letters.rend(); ++it) cur = apply_field(*it, cur);
  return cur;
}

DistributionField apply_word(const OperatorWord& w, const DistributionField& f) {
  return apply_word(w, DistributionJet{{f}}).derivs.front();
}

SpatialField apply_word(const OperatorWord& w, const SpatialField& psi) {
  return apply_word(w, SpatialJet{{psi}}).derivs.front();
}

DistributionField apply_affine(const AffineField& z, const DistributionField& f) {
  auto out = apply_jet(z, f.grid().layout(), f.time(), {&f.values()});
  return f.with_values(std::move(out.front()));
}

}  // namespace kinvf
