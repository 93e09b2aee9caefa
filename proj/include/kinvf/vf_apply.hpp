#pragma once

#include <vector>

#include "kinvf/fields.hpp"
#include "kinvf/vector_fields.hpp"

namespace kinvf {

// Time derivatives of a field at one instant: derivs[k] = d^k/dt^k.
template <class F>
struct TimeJet {
  std::vector<F> derivs;

  std::size_t order() const { return derivs.size(); }
  const F& value() const { return derivs.at(0); }
};

using DistributionJet = TimeJet<DistributionField>;
using SpatialJet = TimeJet<SpatialField>;

// Microscopic ids act on distribution fields, macroscopic ids on spatial
// fields. Fields containing d/dt need the time derivative of the argument.
DistributionField apply_field(const FieldId& z, const DistributionField& f,
                              const DistributionField* dt_f = nullptr);
SpatialField apply_field(const FieldId& z, const SpatialField& psi,
                         const SpatialField* dt_psi = nullptr);

// A field with a d/dt part shortens the jet by one.
DistributionJet apply_field(const FieldId& z, const DistributionJet& f);
SpatialJet apply_field(const FieldId& z, const SpatialJet& psi);

DistributionField apply_word(const OperatorWord& w, const DistributionField& f);
SpatialField apply_word(const OperatorWord& w, const SpatialField& psi);
DistributionJet apply_word(const OperatorWord& w, const DistributionJet& f);
SpatialJet apply_word(const OperatorWord& w, const SpatialJet& psi);

// Applies an affine vector field with no d/dt part (e.g. a bracket) to f.
DistributionField apply_affine(const AffineField& z, const DistributionField& f);

}  // namespace kinvf
