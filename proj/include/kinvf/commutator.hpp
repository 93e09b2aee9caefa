#pragma once

#include <string>
#include <vector>

#include "kinvf/rational.hpp"
#include "kinvf/vector_fields.hpp"
#include "kinvf/vf_apply.hpp"

namespace kinvf {

// coefficient * d/dx^j (potential_word phi) * t^t_power * (field_word f)
struct CommutatorTerm {
  Rational coefficient;
  OperatorWord potential_word;  // macroscopic
  int derivative_index = 0;
  OperatorWord field_word;  // microscopic
  int t_power = 0;

  friend bool operator==(const CommutatorTerm&, const CommutatorTerm&) = default;
};

// T_phi = d/dt + v.grad_x + mu grad_x phi . grad_v.
// Expands [T_phi, Z^word] f for |word| <= 3. Words containing the space-time
// scaling are rejected: its bracket with T_phi contains T_phi itself.
std::vector<CommutatorTerm> expand_T_phi_commutator(const OperatorWord& word, int mu = 1);

// One line per term, deterministic.
std::string render(const std::vector<CommutatorTerm>& terms);

// Evaluates the expansion on grid data. Jets must be long enough for the
// d/dt letters appearing in the terms.
DistributionField evaluate_terms(const std::vector<CommutatorTerm>& terms, const SpatialJet& phi,
                                 const DistributionJet& f);
DistributionField evaluate_terms(const std::vector<CommutatorTerm>& terms, const SpatialField& phi,
                                 const DistributionField& f);

// Jet of T_phi g (or of T g when phi is null); one order shorter than g.
DistributionJet apply_transport(const DistributionJet& g, const SpatialJet* phi, int mu = 1);

// T_phi(Z^word f) - Z^word(T_phi f) by stencils; f needs |word|_t + 2 orders.
DistributionField commutator_by_stencils(const OperatorWord& word, const SpatialJet& phi,
                                         const DistributionJet& f, int mu = 1);

}  // namespace kinvf
