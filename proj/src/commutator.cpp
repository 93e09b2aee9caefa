#include "kinvf/commutator.hpp"

#include <map>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "kinvf/grid_ops.hpp"

namespace kinvf {

namespace {

// coefficient * d/dx^j (gamma phi) * d/dv^k (beta g)
struct RawKey {
  OperatorWord gamma;
  int j;
  OperatorWord beta;
  int k;
  friend auto operator<=>(const RawKey& a, const RawKey& b) {
    return std::tie(a.gamma, a.j, a.beta, a.k) <=> std::tie(b.gamma, b.j, b.beta, b.k);
  }
  friend bool operator==(const RawKey&, const RawKey&) = default;
};

using RawTerms = std::map<RawKey, Rational>;

void add(RawTerms& acc, const RawKey& key, const Rational& c) {
  if (c.is_zero()) return;
  Rational& slot = acc[key];
  slot += c;
  if (slot.is_zero()) acc.erase(key);
}

// [T_phi, Z] g for one microscopic letter, with g = beta(f).
void base_terms(const FieldId& z, const OperatorWord& beta, int mu, RawTerms& out) {
  const int n = z.dim;
  const Rational m(mu);
  const OperatorWord zphi{z.as(Flavor::macroscopic)};
  const auto P = x_derivative_bracket(z);
  const auto Q = v_derivative_bracket(z);
  for (int j = 0; j < n; ++j) {
    add(out, {zphi, j, beta, j}, -m);
    for (int l = 0; l < n; ++l) {
      add(out, {OperatorWord(), l, beta, j}, -m * P[j][l]);
      add(out, {OperatorWord(), j, beta, l}, -m * Q[j][l]);
    }
  }
}

RawTerms expand_raw(const OperatorWord& word, int mu) {
  RawTerms out;
  if (word.empty()) return out;
  const FieldId& z = word.letters.front();
  const OperatorWord rest = word.tail();
  base_terms(z, rest, mu, out);
  const auto P = x_derivative_bracket(z);
  const auto Q = v_derivative_bracket(z);
  const int n = z.dim;
  // Z (A B) = Z(A) B + A Z(B), A = d_j(gamma phi), B = d_{v^k}(beta g).
  for (const auto& [key, c] : expand_raw(rest, mu)) {
    add(out, {key.gamma.prepend(z.as(Flavor::macroscopic)), key.j, key.beta, key.k}, c);
    add(out, {key.gamma, key.j, key.beta.prepend(z), key.k}, c);
    for (int l = 0; l < n; ++l) {
      add(out, {key.gamma, l, key.beta, key.k}, c * P[key.j][l]);
      add(out, {key.gamma, key.j, key.beta, l}, c * Q[key.k][l]);
    }
  }
  return out;
}

struct FinalKey {
  OperatorWord gamma;
  int j;
  OperatorWord beta;
  int t_power;
  friend auto operator<=>(const FinalKey& a, const FinalKey& b) {
    return std::tie(a.gamma, a.j, a.beta, a.t_power) <=>
           std::tie(b.gamma, b.j, b.beta, b.t_power);
  }
  friend bool operator==(const FinalKey&, const FinalKey&) = default;
};

}  // namespace

std::vector<CommutatorTerm> expand_T_phi_commutator(const OperatorWord& word, int mu) {
  if (word.size() > 3) throw std::invalid_argument("expand_T_phi_commutator: word longer than 3");
  if (mu != 1 && mu != -1) throw std::invalid_argument("expand_T_phi_commutator: mu must be +1 or -1");
  for (const auto& z : word.letters) {
    if (z.flavor != Flavor::microscopic)
      throw std::invalid_argument("expand_T_phi_commutator: microscopic word expected");
    if (z.kind == FieldKind::space_time_scaling)
      throw std::invalid_argument(
          "expand_T_phi_commutator: the space-time scaling does not commute into this form");
  }

  // Normal-order both words.
  RawTerms ordered;
  for (const auto& [key, c] : expand_raw(word, mu)) {
    const auto gs = normal_order(key.gamma);
    const auto bs = normal_order(key.beta);
    for (const auto& [g, cg] : gs)
      for (const auto& [b, cb] : bs) add(ordered, {g, key.j, b, key.k}, c * cg * cb);
  }

  // d/dv^k = (t d/dx^k + d/dv^k) - t d/dx^k.
  std::map<FinalKey, Rational> fin;
  auto put = [&](const FinalKey& k, const Rational& c) {
    if (c.is_zero()) return;
    Rational& slot = fin[k];
    slot += c;
    if (slot.is_zero()) fin.erase(k);
  };
  for (const auto& [key, c] : ordered) {
    const int n = word.letters.front().dim;
    const auto u = normal_order(key.beta.prepend(FieldId::uniform_motion(n, key.k)));
    for (const auto& [b, cb] : u) put({key.gamma, key.j, b, 0}, c * cb);
    const auto d = normal_order(key.beta.prepend(FieldId::space_translation(n, key.k)));
    for (const auto& [b, cb] : d) put({key.gamma, key.j, b, 1}, -c * cb);
  }

  std::vector<CommutatorTerm> terms;
  for (const auto& [k, c] : fin) terms.push_back({c, k.gamma, k.j, k.beta, k.t_power});
  return terms;
}

std::string render(const std::vector<CommutatorTerm>& terms) {
  std::ostringstream out;
  for (const auto& t : terms) {
    out << (t.coefficient < Rational(0) ? "- " : "+ ");
    const Rational mag = t.coefficient < Rational(0) ? -t.coefficient : t.coefficient;
    out << mag.str() << " * dx" << (t.derivative_index + 1) << "(" << t.potential_word.name()
        << " phi) * " << (t.t_power ? "t * " : "") << "(" << t.field_word.name() << " f)\n";
  }
  return out.str();
}

DistributionJet apply_transport(const DistributionJet& g, const SpatialJet* phi, int mu) {
  const std::size_t L = g.order();
  if (L < 2) throw std::invalid_argument("apply_transport: jet needs a time derivative");
  const auto& head = g.value();
  const int n = head.dim();
  if (phi && phi->order() < L - 1)
    throw std::invalid_argument("apply_transport: potential jet too short");

  // binomial coefficients up to L
  std::vector<std::vector<double>> C(L, std::vector<double>(L, 0.0));
  for (std::size_t k = 0; k < L; ++k) {
    C[k][0] = 1.0;
    for (std::size_t m = 1; m <= k; ++m) C[k][m] = C[k - 1][m - 1] + (m < k ? C[k - 1][m] : 0.0);
  }

  std::vector<std::vector<SpatialField>> dphi;  // dphi[m][i] = d_i phi^(m)
  if (phi)
    for (std::size_t m = 0; m + 1 < L; ++m) {
      std::vector<SpatialField> grad;
      for (int i = 0; i < n; ++i) grad.push_back(partial(phi->derivs[m], i));
      dphi.push_back(std::move(grad));
    }

  AffineField stream(n);
  for (int i = 0; i < n; ++i) stream.b(1 + i, 1 + n + i) = 1.0;

  DistributionJet out;
  for (std::size_t k = 0; k + 1 < L; ++k) {
    DistributionField r = g.derivs[k + 1] + apply_affine(stream, g.derivs[k]);
    if (phi) {
      for (int i = 0; i < n; ++i)
        for (std::size_t m = 0; m <= k; ++m) {
          const auto dv = partial(g.derivs[k - m], PhaseAxis::v(i));
          r = r + (mu * C[k][m]) * broadcast_multiply(dphi[m][i], dv);
        }
    }
    out.derivs.push_back(std::move(r));
  }
  return out;
}

DistributionField evaluate_terms(const std::vector<CommutatorTerm>& terms, const SpatialJet& phi,
                                 const DistributionJet& f) {
  std::map<OperatorWord, SpatialField> pot;
  std::map<OperatorWord, DistributionField> fw;
  DistributionField acc(f.value().grid(), f.value().time());
  const double t = f.value().time();
  for (const auto& term : terms) {
    auto pit = pot.find(term.potential_word);
    if (pit == pot.end())
      pit = pot.emplace(term.potential_word, apply_word(term.potential_word, phi).value()).first;
    auto fit = fw.find(term.field_word);
    if (fit == fw.end())
      fit = fw.emplace(term.field_word, apply_word(term.field_word, f).value()).first;
    const SpatialField dphi = partial(pit->second, term.derivative_index);
    const double c = term.coefficient.to_double() * (term.t_power ? t : 1.0);
    acc = acc + c * broadcast_multiply(dphi, fit->second);
  }
  return acc;
}

DistributionField evaluate_terms(const std::vector<CommutatorTerm>& terms, const SpatialField& phi,
                                 const DistributionField& f) {
  return evaluate_terms(terms, SpatialJet{{phi}}, DistributionJet{{f}});
}

DistributionField commutator_by_stencils(const OperatorWord& word, const SpatialJet& phi,
                                         const DistributionJet& f, int mu) {
  const DistributionJet zf = apply_word(word, f);
  const DistributionField lhs = apply_transport(zf, &phi, mu).value();
  const DistributionJet tf = apply_transport(f, &phi, mu);
  const DistributionField rhs = apply_word(word, tf).value();
  return lhs - rhs;
}

}  // namespace kinvf
