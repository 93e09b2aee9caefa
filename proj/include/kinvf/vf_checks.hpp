#pragma once

#include "kinvf/fields.hpp"
#include "kinvf/vector_fields.hpp"
#include "kinvf/vf_apply.hpp"

namespace kinvf {

// max over interior x nodes of |Z rho(f) - rho(Z f) - c_Z rho(f)|. The jet
// form handles fields with a d/dt part.
double verify_pushdown(const FieldId& macro_id, const DistributionField& f);
double verify_pushdown(const FieldId& macro_id, const DistributionJet& f);

// sup |Z^a[(1+v^2)^(q/2) f]| / ((1+v^2)^(q/2) sum_{|b|<=|a|} |Z^b f|) over
// nodes where the denominator is not negligible; 0 for f = 0. |word| <= 2.
double verify_weight_commutation(const OperatorWord& word, const DistributionField& f, double q,
                                 double rel_floor = 1e-6);

// max | |x|^2 d_j psi - sum_i x^i Omega_ij psi - x^j S psi | over interior nodes.
double verify_vf_identity(int j, const SpatialField& psi);

// Relative least-squares residual of [Z^a, Z^b] f against the span of the
// microscopic words (same letters class) of length < |a| + |b|.
double lie_closure_residual(const OperatorWord& a, const OperatorWord& b, const DistributionField& f);

// max over nodes of |[T, Z] f - claimed|, claimed = 0 or T f; f needs 3 orders.
double transport_commutator_residual(const FieldId& z, const DistributionJet& f);

}  // namespace kinvf
